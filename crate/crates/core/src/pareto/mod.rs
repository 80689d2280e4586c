//! Compliance against volume fraction fronts: sweeps, refinement and
//! post-processing.

mod cache;
mod front;
mod sweep;

pub use cache::ResultCache;
pub use front::{FrontPoint, ParetoFront};
pub(crate) use front::csv_error;
pub use sweep::{
    baseline_sweep, multistart_sweep, refine, vf_grid, Outcome, PointOptimizer, RefineConfig, Refined,
    SimpRunner, Sweep,
};

use serde::{Deserialize, Serialize};

/// Standard deviation of the smoothing kernel, in volume-fraction units.
pub const SMOOTH_SIGMA: f64 = 0.04;

/// Indices of notable points of a front.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignificantPoints {
    /// Local minima of `c * vf` at least `min_threshold` below the next point.
    pub minima: Vec<usize>,
    /// Points reached by a relative fall of `c * vf` above `drop_threshold`.
    pub drops: Vec<usize>,
}

impl SignificantPoints {
    pub fn count(&self) -> usize {
        self.minima.len() + self.drops.len()
    }
}

/// Flags minima and drops on the series `s_i = c_i * vf_i`.
///
/// Point `i` is a minimum when `s_i < s_{i-1}` and `(s_{i+1} - s_i) / s_{i+1}
/// >= min_threshold`. Point `i + 1` is a drop when `(s_i - s_{i+1}) / s_i >
/// drop_threshold`.
pub fn detect_significant(front: &ParetoFront, min_threshold: f64, drop_threshold: f64) -> SignificantPoints {
    let s: Vec<f64> = front.points().iter().map(|p| p.c * p.vf).collect();
    let mut out = SignificantPoints::default();
    for i in 1..s.len().saturating_sub(1) {
        if s[i] < s[i - 1] && (s[i + 1] - s[i]) / s[i + 1] >= min_threshold {
            out.minima.push(i);
        }
    }
    for i in 0..s.len().saturating_sub(1) {
        if (s[i] - s[i + 1]) / s[i] > drop_threshold {
            out.drops.push(i + 1);
        }
    }
    out
}

/// Running minimum of `c` over increasing `vf`; a replaced point takes the
/// provenance of the point it came from.
pub fn envelope(front: &ParetoFront) -> ParetoFront {
    let mut points = front.points().to_vec();
    for i in 1..points.len() {
        if points[i].c > points[i - 1].c {
            points[i].c = points[i - 1].c;
            points[i].provenance = points[i - 1].provenance.clone();
        }
    }
    ParetoFront::new(front.problem_name.clone(), points).expect("envelope keeps a valid front")
}

/// Gaussian kernel average over `x`, truncated at three standard deviations
/// and renormalized, so boundaries use one-sided windows.
pub fn smooth(x: &[f64], y: &[f64], sigma: f64) -> Vec<f64> {
    assert_eq!(x.len(), y.len());
    assert!(sigma > 0.0);
    // slack keeps windows symmetric when grid points sit exactly on the cutoff
    let cut = 3.0 * sigma * (1.0 + 1e-9);
    x.iter()
        .map(|&xi| {
            let lo = x.partition_point(|&v| v < xi - cut);
            let hi = x.partition_point(|&v| v <= xi + cut);
            let (mut num, mut den) = (0.0, 0.0);
            for j in lo..hi {
                let d = (x[j] - xi) / sigma;
                let w = (-0.5 * d * d).exp();
                num += w * y[j];
                den += w;
            }
            num / den
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn front(vf: &[f64], c: &[f64]) -> ParetoFront {
        ParetoFront::from_series("t", vf, c, "x").unwrap()
    }

    fn synthetic(n: usize) -> (Vec<f64>, Vec<f64>) {
        let vf = vf_grid(0.02, 1.0, n).unwrap();
        let c = vf.iter().map(|x| 2.0 * (1.0 / x + x)).collect();
        (vf, c)
    }

    #[test]
    fn envelope_examples() {
        let f = front(&[0.1, 0.2, 0.3], &[5.0, 6.0, 4.0]);
        assert_eq!(envelope(&f).cs(), vec![5.0, 5.0, 4.0]);
        let g = front(&[0.1, 0.2, 0.3], &[5.0, 4.5, 4.0]);
        assert_eq!(envelope(&g), g);
    }

    #[test]
    fn smooth_front_has_nothing_significant() {
        let (vf, c) = synthetic(50);
        let s = detect_significant(&front(&vf, &c), 0.002, 0.05);
        assert_eq!(s, SignificantPoints::default());
    }

    #[test]
    fn injected_dip_is_the_only_minimum() {
        let (vf, mut c) = synthetic(50);
        c[5] *= 0.99;
        let s = detect_significant(&front(&vf, &c), 0.002, 0.05);
        assert_eq!(s.minima, vec![5]);
        assert!(s.drops.is_empty());
    }

    #[test]
    fn step_is_the_only_drop() {
        let (vf, mut c) = synthetic(50);
        for v in &mut c[30..] {
            *v *= 0.9;
        }
        let s = detect_significant(&front(&vf, &c), 0.002, 0.05);
        assert_eq!(s.drops, vec![30]);
    }

    #[test]
    fn smooth_constant_and_linear() {
        let x = vf_grid(0.02, 1.0, 50).unwrap();
        let y = vec![3.5; 50];
        assert!(smooth(&x, &y, SMOOTH_SIGMA).iter().all(|v| (v - 3.5).abs() < 1e-12));
        let lin: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let out = smooth(&x, &lin, SMOOTH_SIGMA);
        // interior points whose window is complete
        for i in 0..50 {
            if x[i] - 0.12 >= x[0] && x[i] + 0.12 <= x[49] {
                assert!((out[i] - lin[i]).abs() < 1e-9, "{i}");
            }
        }
    }

    #[test]
    fn smooth_reduces_noise_variance() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let x = vf_grid(0.02, 1.0, 200).unwrap();
        let y: Vec<f64> = (0..200).map(|_| rng.gen::<f64>() - 0.5).collect();
        let var = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / v.len() as f64
        };
        assert!(var(&smooth(&x, &y, SMOOTH_SIGMA)) < var(&y));
    }

    proptest! {
        #[test]
        fn envelope_is_running_min(c in prop::collection::vec(0.1f64..100.0, 1..40)) {
            let vf: Vec<f64> = (1..=c.len()).map(|i| i as f64 / c.len() as f64).collect();
            let f = front(&vf, &c);
            let e = envelope(&f).cs();
            for i in 0..c.len() {
                prop_assert!(e[i] <= c[i]);
                if i > 0 { prop_assert!(e[i] <= e[i - 1]); }
                let m = c[..=i].iter().cloned().fold(f64::INFINITY, f64::min);
                prop_assert_eq!(e[i], m);
            }
        }
    }
}
