use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One sample of a front.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontPoint {
    pub vf: f64,
    /// Normalized compliance `f(vf)`.
    pub c: f64,
    pub provenance: String,
}

/// Normalized compliance against volume fraction, sorted by `vf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    pub problem_name: String,
    points: Vec<FrontPoint>,
}

impl ParetoFront {
    /// Checks that `vf` is strictly increasing in `(0, 1]` and every `c` is positive.
    pub fn new(problem_name: impl Into<String>, points: Vec<FrontPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Validation("front has no points".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if !(p.vf > 0.0 && p.vf <= 1.0) {
                return Err(Error::Validation(format!("point {i}: vf {} outside (0, 1]", p.vf)));
            }
            if !(p.c > 0.0 && p.c.is_finite()) {
                return Err(Error::Validation(format!("point {i}: compliance {} not positive", p.c)));
            }
            if i > 0 && !(p.vf > points[i - 1].vf) {
                return Err(Error::Validation(format!(
                    "point {i}: vf {} does not increase",
                    p.vf
                )));
            }
        }
        Ok(Self {
            problem_name: problem_name.into(),
            points,
        })
    }

    /// Front from parallel `vf` and `c` slices with a shared provenance tag.
    pub fn from_series(problem_name: &str, vf: &[f64], c: &[f64], provenance: &str) -> Result<Self> {
        if vf.len() != c.len() {
            return Err(Error::InvalidArgument("vf and c lengths differ".into()));
        }
        Self::new(
            problem_name,
            vf.iter()
                .zip(c)
                .map(|(&vf, &c)| FrontPoint {
                    vf,
                    c,
                    provenance: provenance.into(),
                })
                .collect(),
        )
    }

    pub fn points(&self) -> &[FrontPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn vfs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.vf).collect()
    }

    pub fn cs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.c).collect()
    }

    /// Linear interpolation of `c` at `vf`; `None` outside the sampled range.
    pub fn interpolate(&self, vf: f64) -> Option<f64> {
        let pts = &self.points;
        if vf < pts[0].vf || vf > pts[pts.len() - 1].vf {
            return None;
        }
        let i = pts.partition_point(|p| p.vf < vf);
        if pts[i].vf == vf || i == 0 {
            return Some(pts[i].c);
        }
        let (a, b) = (&pts[i - 1], &pts[i]);
        let t = (vf - a.vf) / (b.vf - a.vf);
        Some(a.c + t * (b.c - a.c))
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for p in &self.points {
            w.serialize(p).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn from_csv(problem_name: &str, data: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(data.as_bytes());
        let headers = r.headers().map_err(csv_error)?.clone();
        if headers.iter().collect::<Vec<_>>() != ["vf", "c", "provenance"] {
            return Err(Error::Parse {
                line: 1,
                message: "expected header vf,c,provenance".into(),
            });
        }
        let points = r
            .deserialize()
            .collect::<std::result::Result<Vec<FrontPoint>, _>>()
            .map_err(csv_error)?;
        Self::new(problem_name, points)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Reads a CSV front; the problem name is the file stem.
    pub fn load(path: &Path) -> Result<Self> {
        let data = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("front");
        Self::from_csv(name, &data)
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let ok = ParetoFront::from_series("t", &[0.1, 0.2], &[3.0, 2.0], "x");
        assert!(ok.is_ok());
        assert!(ParetoFront::from_series("t", &[0.2, 0.2], &[3.0, 2.0], "x").is_err());
        assert!(ParetoFront::from_series("t", &[0.0, 0.2], &[3.0, 2.0], "x").is_err());
        assert!(ParetoFront::from_series("t", &[0.1, 0.2], &[3.0, -2.0], "x").is_err());
        assert!(ParetoFront::from_series("t", &[], &[], "x").is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let f = ParetoFront::from_series("t", &[0.02, 0.1 + 0.2, 1.0], &[1.0 / 3.0, 2.5e-3, 1e-17], "disc").unwrap();
        let s = f.to_csv();
        assert!(s.starts_with("vf,c,provenance\n"));
        assert_eq!(ParetoFront::from_csv("t", &s).unwrap(), f);
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(ParetoFront::from_csv("t", "a,b\n1,2\n"), Err(Error::Parse { .. })));
        assert!(matches!(
            ParetoFront::from_csv("t", "vf,c,provenance\n0.1,x,u\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn interpolation() {
        let f = ParetoFront::from_series("t", &[0.1, 0.3], &[4.0, 2.0], "x").unwrap();
        assert_eq!(f.interpolate(0.1), Some(4.0));
        assert!((f.interpolate(0.2).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(f.interpolate(0.05), None);
    }
}
