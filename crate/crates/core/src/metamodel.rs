//! Two-parameter front model `f(x) = a (1/x + b x^(1/b))`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem2d::{evaluate_compliance, DensityField, ProblemSpec};
use crate::pareto::{multistart_sweep, PointOptimizer};

/// Volume fraction of the low anchor.
pub const ANCHOR_VF: f64 = 0.1;

const B_BRACKET: (f64, f64) = (1e-6, 1e4);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub vf: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaModel {
    pub a: f64,
    pub b: f64,
    pub fit_points: [FitPoint; 2],
    pub problem_name: String,
}

/// Normalized compliance of the all-solid design.
pub fn full_density_compliance(problem: &ProblemSpec) -> Result<f64> {
    let c = evaluate_compliance(problem, &DensityField::uniform(problem.grid, 1.0), 3.0)?;
    Ok(problem.normalize_compliance(c))
}

/// Best normalized compliance at `vf` over all eleven initial designs.
pub fn anchor_compliance(opt: &dyn PointOptimizer, vf: f64) -> Result<f64> {
    Ok(multistart_sweep(opt, &[vf], None)?.front.points()[0].c)
}

fn ratio(x1: f64, b: f64) -> f64 {
    (1.0 / x1 + b * x1.powf(1.0 / b)) / (1.0 + b)
}

impl MetaModel {
    /// Fits through `(x1, c1)` and `(1, c_full)`.
    pub fn fit(x1: f64, c1: f64, c_full: f64, problem_name: impl Into<String>) -> Result<Self> {
        if !(x1 > 0.0 && x1 < 1.0) {
            return Err(Error::InvalidArgument(format!("anchor volume fraction {x1} outside (0, 1)")));
        }
        if !(c_full > 0.0 && c1.is_finite()) {
            return Err(Error::InvalidArgument(format!("anchors must be positive, got {c1} and {c_full}")));
        }
        let r = c1 / c_full;
        if !(r > 1.0) {
            return Err(Error::FitInfeasible(format!(
                "c({x1}) / c(1) = {r} must exceed 1: the front has to decrease"
            )));
        }
        if !(r < 1.0 / x1) {
            return Err(Error::FitInfeasible(format!(
                "c({x1}) / c(1) = {r} must stay below 1/{x1} = {}: the front may not fall faster than 1/x",
                1.0 / x1
            )));
        }
        // ratio falls from ~1/x1 to ~1 as b grows; bisect in log b
        let (mut lo, mut hi) = (B_BRACKET.0.ln(), B_BRACKET.1.ln());
        let g = |lb: f64| ratio(x1, lb.exp()) - r;
        if !(g(lo) > 0.0 && g(hi) < 0.0) {
            return Err(Error::FitFailure(format!(
                "no b in [{}, {}] reproduces the ratio {r}",
                B_BRACKET.0, B_BRACKET.1
            )));
        }
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let b = if g(lo).abs() < g(hi).abs() { lo.exp() } else { hi.exp() };
        let a = c_full / (1.0 + b);
        let model = Self {
            a,
            b,
            fit_points: [FitPoint { vf: x1, c: c1 }, FitPoint { vf: 1.0, c: c_full }],
            problem_name: problem_name.into(),
        };
        for p in &model.fit_points {
            let res = (model.eval(p.vf)? / p.c - 1.0).abs();
            if res > 1e-9 {
                return Err(Error::FitFailure(format!(
                    "anchor residual {res:e} at vf {} exceeds 1e-9",
                    p.vf
                )));
            }
        }
        Ok(model)
    }

    /// Fits a model for `problem`: one multi-start anchor at `x1` plus the solid design.
    pub fn fit_problem(problem: &ProblemSpec, opt: &dyn PointOptimizer, x1: f64) -> Result<Self> {
        let c_full = full_density_compliance(problem)?;
        let c1 = anchor_compliance(opt, x1)?;
        Self::fit(x1, c1, c_full, problem.name.clone())
    }

    fn check_x(x: f64) -> Result<()> {
        if x > 0.0 && x <= 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("volume fraction {x} outside (0, 1]")))
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        Self::check_x(x)?;
        Ok(self.value(x))
    }

    fn value(&self, x: f64) -> f64 {
        self.a * (1.0 / x + self.b * x.powf(1.0 / self.b))
    }

    /// Model efficiency ratio `(1 - x^(1/b+1)) / (1 + b x^(1/b+1))`.
    pub fn eval_er(&self, x: f64) -> Result<f64> {
        Self::check_x(x)?;
        let t = x.powf(1.0 / self.b + 1.0);
        Ok((1.0 - t) / (1.0 + self.b * t))
    }

    /// The volume fraction whose model compliance equals `c_req`.
    pub fn inverse(&self, c_req: f64) -> Result<f64> {
        let full = self.value(1.0);
        if c_req.is_nan() {
            return Err(Error::InvalidArgument("required compliance is NaN".into()));
        }
        if c_req < full {
            return Err(Error::InfeasibleStiffness { required: c_req, full });
        }
        if c_req == full {
            return Ok(1.0);
        }
        // f(x) > a / x, so f(a / (2 c_req)) > 2 c_req
        let (mut lo, mut hi) = ((self.a / (2.0 * c_req)).min(1.0), 1.0);
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if self.value(mid) > c_req {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(if (self.value(lo) - c_req).abs() < (self.value(hi) - c_req).abs() { lo } else { hi })
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_pretty()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Self = serde_json::from_str(&s)?;
        if !(m.a > 0.0 && m.b > 0.0) {
            return Err(Error::Validation(format!("model parameters must be positive: a={}, b={}", m.a, m.b)));
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn known() -> MetaModel {
        MetaModel::fit(0.1, 20.01, 3.0, "t").unwrap()
    }

    #[test]
    fn recovers_known_parameters() {
        let m = known();
        assert!((m.a - 2.0).abs() < 1e-6 && (m.b - 0.5).abs() < 1e-6, "{m:?}");
        assert!((m.eval(0.1).unwrap() / 20.01 - 1.0).abs() < 1e-9);
        assert!((m.eval(1.0).unwrap() / 3.0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn near_inverse_front_sends_b_to_zero() {
        let m = MetaModel::fit(0.1, 3.0 * (10.0 - 1e-4), 3.0, "t").unwrap();
        assert!(m.b < 2e-5, "{}", m.b);
        let m = MetaModel::fit(0.1, 3.0 * (10.0 - 1e-2), 3.0, "t").unwrap();
        assert!(m.b < 2e-3, "{}", m.b);
    }

    #[test]
    fn infeasible_ratios() {
        assert!(matches!(MetaModel::fit(0.1, 2.0, 3.0, "t"), Err(Error::FitInfeasible(m)) if m.contains("exceed 1")));
        assert!(matches!(MetaModel::fit(0.1, 31.0, 3.0, "t"), Err(Error::FitInfeasible(m)) if m.contains("below")));
        // inside (1, 10) but beyond what b <= 1e4 can reach
        assert!(matches!(MetaModel::fit(0.1, 3.0 * 1.0001, 3.0, "t"), Err(Error::FitFailure(_))));
    }

    #[test]
    fn eval_examples() {
        let m = MetaModel { a: 1.0, b: 1.0, fit_points: known().fit_points, problem_name: "t".into() };
        assert_eq!(m.eval(1.0).unwrap(), 2.0);
        assert_eq!(m.eval(0.5).unwrap(), 2.5);
        assert!(m.eval(0.0).is_err() && m.eval(1.5).is_err());
    }

    #[test]
    fn er_limits_and_definition() {
        let m = known();
        assert!((m.eval_er(1e-12).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(m.eval_er(1.0).unwrap(), 0.0);
        for x in [0.2, 0.5, 0.8] {
            let h = 1e-6 * x;
            let d = (m.eval(x + h).unwrap() - m.eval(x - h).unwrap()) / (2.0 * h);
            let fd = -x * d / m.eval(x).unwrap();
            assert!((m.eval_er(x).unwrap() - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn inverse_examples() {
        let m = known();
        assert_eq!(m.inverse(m.eval(1.0).unwrap()).unwrap(), 1.0);
        assert!((m.inverse(m.eval(0.25).unwrap()).unwrap() - 0.25).abs() < 1e-9);
        assert!(matches!(m.inverse(2.9), Err(Error::InfeasibleStiffness { .. })));
    }

    #[test]
    fn json_round_trip() {
        let m = known();
        let back: MetaModel = serde_json::from_str(&m.to_json_pretty()).unwrap();
        assert_eq!(back, m);
        let v: serde_json::Value = serde_json::from_str(&m.to_json_pretty()).unwrap();
        for k in ["a", "b", "fit_points", "problem_name"] {
            assert!(v.get(k).is_some());
        }
    }

    proptest! {
        #[test]
        fn fitted_models_behave(r in 1.05f64..9.95, c_full in 0.1f64..100.0) {
            let m = MetaModel::fit(0.1, r * c_full, c_full, "p").unwrap();
            let f1 = m.eval(1.0).unwrap();
            for i in 1..=50 {
                let x = i as f64 / 50.0;
                let n = m.eval_er(x).unwrap();
                prop_assert!((0.0..=1.0).contains(&n));
                if i < 50 {
                    prop_assert!(m.eval(x).unwrap() > m.eval(x + 0.02).unwrap());
                }
            }
            for k in 0..30 {
                let c = f1 * 10f64.powf(k as f64 / 10.0);
                let x = m.inverse(c).unwrap();
                prop_assert!((m.eval(x).unwrap() / c - 1.0).abs() < 1e-8);
            }
            for (a, t) in [(1.5, 1.0), (2.0, 1.7), (5.0, 3.0), (9.0, 40.0)] {
                let x = f1 * t;
                prop_assert!(a * m.inverse(a * x).unwrap() <= m.inverse(x).unwrap() + 1e-9);
            }
        }
    }
}
