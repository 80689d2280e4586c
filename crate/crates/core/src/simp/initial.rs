//! The family of starting designs used by the multi-start sweep.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem2d::{DensityField, Grid};

/// Default seed of the smooth-noise start.
pub const NOISE_SEED: u64 = 0x5EED_0F_70F0;

/// Eleven starting designs, each rescaled to the target volume fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialDesign {
    Uniform,
    VerticalStripes2,
    VerticalStripes4,
    HorizontalStripes1,
    HorizontalStripes2,
    DiagonalRising,
    DiagonalFalling,
    Disc,
    Ring,
    Noise,
    /// A supplied earlier solution; falls back to uniform when absent.
    Previous,
}

impl InitialDesign {
    pub const ALL: [InitialDesign; 11] = [
        InitialDesign::Uniform,
        InitialDesign::VerticalStripes2,
        InitialDesign::VerticalStripes4,
        InitialDesign::HorizontalStripes1,
        InitialDesign::HorizontalStripes2,
        InitialDesign::DiagonalRising,
        InitialDesign::DiagonalFalling,
        InitialDesign::Disc,
        InitialDesign::Ring,
        InitialDesign::Noise,
        InitialDesign::Previous,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InitialDesign::Uniform => "uniform",
            InitialDesign::VerticalStripes2 => "vertical-stripes-2",
            InitialDesign::VerticalStripes4 => "vertical-stripes-4",
            InitialDesign::HorizontalStripes1 => "horizontal-stripes-1",
            InitialDesign::HorizontalStripes2 => "horizontal-stripes-2",
            InitialDesign::DiagonalRising => "diagonal-rising",
            InitialDesign::DiagonalFalling => "diagonal-falling",
            InitialDesign::Disc => "disc",
            InitialDesign::Ring => "ring",
            InitialDesign::Noise => "noise",
            InitialDesign::Previous => "previous",
        }
    }

    /// Unscaled pattern with values in `[0, 1]`.
    fn pattern(self, grid: Grid, seed: u64) -> Vec<f64> {
        if self == InitialDesign::Noise {
            return smooth_noise(grid, seed);
        }
        let wave = |t: f64| 0.5 + 0.5 * (2.0 * PI * t).cos();
        (0..grid.n_elements())
            .map(|e| {
                let (cx, cy) = grid.element_center(e);
                let u = cx / grid.nelx as f64;
                let v = cy / grid.nely as f64;
                let r = ((u - 0.5).powi(2) + (v - 0.5).powi(2)).sqrt();
                match self {
                    InitialDesign::Uniform | InitialDesign::Previous => 0.5,
                    InitialDesign::VerticalStripes2 => wave(2.0 * u),
                    InitialDesign::VerticalStripes4 => wave(4.0 * u),
                    InitialDesign::HorizontalStripes1 => wave(v),
                    InitialDesign::HorizontalStripes2 => wave(2.0 * v),
                    InitialDesign::DiagonalRising => wave(1.5 * (u + v)),
                    InitialDesign::DiagonalFalling => wave(1.5 * (u - v)),
                    InitialDesign::Disc => (1.0 - r / 0.5).max(0.0),
                    InitialDesign::Ring => (1.0 - (r - 0.3).abs() / 0.2).max(0.0),
                    InitialDesign::Noise => unreachable!(),
                }
            })
            .collect()
    }
}

impl fmt::Display for InitialDesign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InitialDesign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InitialDesign::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Unknown {
                what: "initial design",
                name: s.into(),
            })
    }
}

/// Starting field of `kind` with mean density `target_vf`.
///
/// `previous` is only used by [`InitialDesign::Previous`]; the noise start
/// uses [`NOISE_SEED`].
pub fn initial_design(
    kind: InitialDesign,
    target_vf: f64,
    grid: Grid,
    previous: Option<&DensityField>,
) -> Result<DensityField> {
    initial_design_seeded(kind, target_vf, grid, previous, NOISE_SEED)
}

/// [`initial_design`] with an explicit seed for the noise start.
pub fn initial_design_seeded(
    kind: InitialDesign,
    target_vf: f64,
    grid: Grid,
    previous: Option<&DensityField>,
    seed: u64,
) -> Result<DensityField> {
    check_fraction(target_vf)?;
    match (kind, previous) {
        (InitialDesign::Uniform, _) | (InitialDesign::Previous, None) => {
            Ok(DensityField::uniform(grid, target_vf))
        }
        (InitialDesign::Previous, Some(prev)) => {
            if prev.grid() != grid {
                return Err(Error::InvalidArgument(
                    "previous design is on a different grid".into(),
                ));
            }
            rescale_to_mean(prev, target_vf)
        }
        (kind, _) => {
            let pattern = DensityField::new(grid, kind.pattern(grid, seed))?;
            rescale_to_mean(&pattern, target_vf)
        }
    }
}

/// Shifts every density by a common offset, clamping to `[0, 1]`, so that
/// the mean hits `target_vf`. The offset is found by bisection.
pub fn rescale_to_mean(field: &DensityField, target_vf: f64) -> Result<DensityField> {
    check_fraction(target_vf)?;
    let grid = field.grid();
    let values = field.values();
    if target_vf == 1.0 {
        return Ok(DensityField::uniform(grid, 1.0));
    }
    let lo_v = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi_v = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi_v - lo_v < 1e-12 {
        return Ok(DensityField::uniform(grid, target_vf));
    }
    let mean_at = |o: f64| {
        values.iter().map(|v| (v + o).clamp(0.0, 1.0)).sum::<f64>() / values.len() as f64
    };
    let (mut lo, mut hi) = (-1.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if mean_at(mid) < target_vf {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let offset = if (mean_at(lo) - target_vf).abs() < (mean_at(hi) - target_vf).abs() {
        lo
    } else {
        hi
    };
    DensityField::new(
        grid,
        values.iter().map(|v| (v + offset).clamp(0.0, 1.0)).collect(),
    )
}

fn check_fraction(vf: f64) -> Result<()> {
    if !(vf > 0.0 && vf <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "volume fraction must lie in (0, 1], got {vf}"
        )));
    }
    Ok(())
}

fn smooth_noise(grid: Grid, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.n_elements();
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let radius = (grid.nelx.min(grid.nely) / 8).max(1) as isize;
    for _ in 0..2 {
        v = (0..n)
            .map(|e| {
                let (ex, ey) = grid.element_coords(e);
                let (mut s, mut c) = (0.0, 0.0);
                for dx in -radius..=radius {
                    for dy in -radius..=radius {
                        let (jx, jy) = (ex as isize + dx, ey as isize + dy);
                        if jx >= 0 && jy >= 0 && (jx as usize) < grid.nelx && (jy as usize) < grid.nely {
                            s += v[grid.element(jx as usize, jy as usize)];
                            c += 1.0;
                        }
                    }
                }
                s / c
            })
            .collect();
    }
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        v.iter_mut().for_each(|x| *x = (*x - lo) / (hi - lo));
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_is_constant() {
        let g = Grid::new(6, 4).unwrap();
        let d = initial_design(InitialDesign::Uniform, 0.3, g, None).unwrap();
        assert!(d.values().iter().all(|&v| v == 0.3));
        let d = initial_design(InitialDesign::Uniform, 1.0, g, None).unwrap();
        assert!(d.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn every_kind_hits_every_fraction() {
        let g = Grid::new(30, 10).unwrap();
        for kind in InitialDesign::ALL {
            for i in 1..=9 {
                let vf = i as f64 / 10.0;
                let d = initial_design(kind, vf, g, None).unwrap();
                assert!(
                    (d.volume_fraction() - vf).abs() <= 1e-6,
                    "{kind} at {vf}: {}",
                    d.volume_fraction()
                );
            }
        }
    }

    #[test]
    fn names_parse_back() {
        for kind in InitialDesign::ALL {
            assert_eq!(kind.name().parse::<InitialDesign>().unwrap(), kind);
        }
        assert!("zebra".parse::<InitialDesign>().is_err());
    }

    #[test]
    fn kinds_are_distinct() {
        let g = Grid::new(20, 10).unwrap();
        let fields: Vec<_> = InitialDesign::ALL[..10]
            .iter()
            .map(|&k| initial_design(k, 0.4, g, None).unwrap())
            .collect();
        for i in 0..fields.len() {
            for j in 0..i {
                assert_ne!(fields[i], fields[j]);
            }
        }
    }

    #[test]
    fn previous_is_rescaled() {
        let g = Grid::new(4, 2).unwrap();
        let prev = DensityField::new(g, vec![1.0, 0.0, 1.0, 0.0, 0.5, 0.5, 0.2, 0.8]).unwrap();
        let d = initial_design(InitialDesign::Previous, 0.25, g, Some(&prev)).unwrap();
        assert!((d.volume_fraction() - 0.25).abs() < 1e-9);
        assert!(initial_design(InitialDesign::Previous, 1.5, g, Some(&prev)).is_err());
    }

    #[test]
    fn seed_only_moves_the_noise_start() {
        let g = Grid::new(12, 6).unwrap();
        for kind in InitialDesign::ALL {
            let a = initial_design(kind, 0.4, g, None).unwrap();
            let b = initial_design_seeded(kind, 0.4, g, None, NOISE_SEED + 1).unwrap();
            assert_eq!(a == b, kind != InitialDesign::Noise, "{kind}");
            assert!((b.volume_fraction() - 0.4).abs() < 1e-6);
        }
    }
}
