//! Efficiency ratio `n(vf) = -vf C'(vf) / C(vf)` of a front.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pareto::{envelope, smooth, ParetoFront};

/// Whether a series is raw finite differences or the filtered estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErSource {
    Raw,
    Filtered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErPoint {
    pub vf: f64,
    pub n: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErSeries {
    pub points: Vec<ErPoint>,
    pub source: ErSource,
}

impl ErSeries {
    pub fn vfs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.vf).collect()
    }

    pub fn ns(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.n).collect()
    }

    /// Number of steps where `n` rises by more than `tol`.
    pub fn increases_above(&self, tol: f64) -> usize {
        self.points.windows(2).filter(|w| w[1].n - w[0].n > tol).count()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for p in &self.points {
            w.serialize(p).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Raw efficiency ratio of a front.
pub fn compute_er(front: &ParetoFront) -> Result<ErSeries> {
    let n = er_of_series(&front.vfs(), &front.cs())?;
    Ok(ErSeries {
        points: front.vfs().into_iter().zip(n).map(|(vf, n)| ErPoint { vf, n }).collect(),
        source: ErSource::Raw,
    })
}

/// `-d ln c / d ln vf` with the three-point non-uniform stencil in log-log
/// coordinates (one-sided at the ends). This equals `-vf c' / c` and is exact
/// for power laws `c = A vf^-m`.
pub fn er_of_series(vf: &[f64], c: &[f64]) -> Result<Vec<f64>> {
    if vf.len() != c.len() {
        return Err(Error::InvalidArgument("vf and c lengths differ".into()));
    }
    if vf.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "efficiency ratio needs at least 3 points, got {}",
            vf.len()
        )));
    }
    for i in 1..vf.len() {
        if vf[i] == vf[i - 1] {
            return Err(Error::InvalidArgument(format!("duplicate volume fraction {}", vf[i])));
        }
        if vf[i] < vf[i - 1] {
            return Err(Error::InvalidArgument("volume fractions must increase".into()));
        }
    }
    if let Some(bad) = vf.iter().chain(c).find(|v| !(**v > 0.0)) {
        return Err(Error::InvalidArgument(format!("non-positive value {bad} in series")));
    }
    let u: Vec<f64> = vf.iter().map(|v| v.ln()).collect();
    let v: Vec<f64> = c.iter().map(|v| v.ln()).collect();
    let m = u.len();
    // derivative at u[k] from points (i, i+1, i+2)
    let stencil = |i: usize, k: usize| {
        let (x0, x1, x2) = (u[i], u[i + 1], u[i + 2]);
        let x = u[k];
        let l0 = ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2));
        let l1 = ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2));
        let l2 = ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1));
        l0 * v[i] + l1 * v[i + 1] + l2 * v[i + 2]
    };
    Ok((0..m)
        .map(|k| {
            let i = k.saturating_sub(1).min(m - 3);
            -stencil(i, k)
        })
        .collect())
}

/// Efficiency ratio after envelope and Gaussian smoothing.
///
/// The raw ratio of the enveloped front is smoothed rather than
/// differentiating a smoothed front: smoothing a steep `1/vf` front first
/// biases its slope near the low end badly, while smoothing the ratio keeps
/// a bounded quantity bounded.
pub fn filter_er(front: &ParetoFront, sigma: f64) -> Result<ErSeries> {
    let raw = compute_er(&envelope(front))?;
    let vf = raw.vfs();
    let n = smooth(&vf, &raw.ns(), sigma);
    Ok(ErSeries {
        points: vf.into_iter().zip(n).map(|(vf, n)| ErPoint { vf, n }).collect(),
        source: ErSource::Filtered,
    })
}

/// Elementary structures with a constant efficiency ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AnalyticComponent {
    /// Tension rod of length `l` in a design space of cross-section `s_ds`.
    Rod { e: f64, l: f64, s_ds: f64 },
    /// Cantilever of length `l` with square design section `s_ds`.
    Beam { e: f64, l: f64, s_ds: f64 },
    /// Plate strip of width `b`, length `l` and design thickness `h_ds`.
    Plate { e: f64, l: f64, b: f64, h_ds: f64 },
}

impl AnalyticComponent {
    fn check(&self) -> Result<()> {
        let values: &[f64] = match self {
            AnalyticComponent::Rod { e, l, s_ds } | AnalyticComponent::Beam { e, l, s_ds } => &[*e, *l, *s_ds],
            AnalyticComponent::Plate { e, l, b, h_ds } => &[*e, *l, *b, *h_ds],
        };
        if values.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("component parameters must be positive: {self:?}")))
        }
    }
}

/// Apparent stiffness at volume fraction `vf`.
pub fn analytic_stiffness(comp: &AnalyticComponent, vf: f64) -> Result<f64> {
    comp.check()?;
    if !(vf > 0.0 && vf <= 1.0) {
        return Err(Error::InvalidArgument(format!("volume fraction {vf} outside (0, 1]")));
    }
    Ok(match *comp {
        AnalyticComponent::Rod { e, l, s_ds } => e * vf * s_ds / l,
        AnalyticComponent::Beam { e, l, s_ds } => e * vf * vf * s_ds * s_ds / (4.0 * l.powi(3)),
        AnalyticComponent::Plate { e, l, b, h_ds } => e * b * vf.powi(3) * h_ds.powi(3) / (4.0 * l.powi(3)),
    })
}

/// The constant efficiency ratio of a component.
pub fn analytic_er(comp: &AnalyticComponent) -> f64 {
    match comp {
        AnalyticComponent::Rod { .. } => 1.0,
        AnalyticComponent::Beam { .. } => 2.0,
        AnalyticComponent::Plate { .. } => 3.0,
    }
}

/// Compliance front `1 / stiffness` of a component sampled at `vfs`.
pub fn analytic_front(comp: &AnalyticComponent, vfs: &[f64]) -> Result<ParetoFront> {
    let c = vfs
        .iter()
        .map(|&vf| analytic_stiffness(comp, vf).map(|k| 1.0 / k))
        .collect::<Result<Vec<_>>>()?;
    let name = match comp {
        AnalyticComponent::Rod { .. } => "rod",
        AnalyticComponent::Beam { .. } => "beam",
        AnalyticComponent::Plate { .. } => "plate",
    };
    ParetoFront::from_series(name, vfs, &c, "analytic")
}
