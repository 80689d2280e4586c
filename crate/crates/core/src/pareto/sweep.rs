use rayon::prelude::*;

use super::cache::ResultCache;
use super::front::{FrontPoint, ParetoFront};
use super::{detect_significant, SignificantPoints};
use crate::error::{Error, Result};
use crate::fem2d::{DensityField, Grid, ProblemSpec};
use crate::simp::{initial_design_seeded, optimize, rescale_to_mean, InitialDesign, OptimizerConfig, NOISE_SEED};

/// A design and its normalized compliance at penalization 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub densities: DensityField,
    pub c: f64,
}

/// Anything that can optimize one volume fraction from a starting field.
pub trait PointOptimizer: Sync {
    fn problem_name(&self) -> &str;
    fn grid(&self) -> Grid;
    fn run(&self, vf: f64, init: &DensityField) -> Result<Outcome>;

    /// Seed of the noise start in multi-start sweeps.
    fn seed(&self) -> u64 {
        NOISE_SEED
    }
}

/// [`optimize`] with optional memoization.
#[derive(Debug)]
pub struct SimpRunner<'a> {
    pub problem: &'a ProblemSpec,
    pub cfg: &'a OptimizerConfig,
    pub cache: Option<&'a ResultCache>,
    pub seed: u64,
}

impl<'a> SimpRunner<'a> {
    pub fn new(problem: &'a ProblemSpec, cfg: &'a OptimizerConfig, cache: Option<&'a ResultCache>) -> Self {
        Self { problem, cfg, cache, seed: NOISE_SEED }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

impl PointOptimizer for SimpRunner<'_> {
    fn problem_name(&self) -> &str {
        &self.problem.name
    }

    fn grid(&self) -> Grid {
        self.problem.grid
    }

    fn seed(&self) -> u64 {
        self.seed
    }

    fn run(&self, vf: f64, init: &DensityField) -> Result<Outcome> {
        let compute = || optimize(self.problem, vf, self.cfg, init);
        let (densities, c1) = match self.cache {
            Some(cache) => {
                let key = ResultCache::key(self.problem, vf, init, self.cfg);
                let r = cache.get_or_insert_with(&key, compute)?;
                (r.densities.clone(), r.compliance_p1)
            }
            None => {
                let r = compute()?;
                (r.densities, r.compliance_p1)
            }
        };
        Ok(Outcome {
            densities,
            c: self.problem.normalize_compliance(c1),
        })
    }
}

/// A front together with the design behind each point.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub front: ParetoFront,
    pub designs: Vec<DensityField>,
}

/// `n` volume fractions evenly spaced on `[lo, hi]`.
pub fn vf_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && lo <= hi && hi <= 1.0) || n == 0 || (n == 1 && lo != hi) {
        return Err(Error::InvalidArgument(format!(
            "invalid volume-fraction grid [{lo}, {hi}] with {n} points"
        )));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n)
        .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect())
}

fn check_grid(vfs: &[f64]) -> Result<()> {
    if vfs.is_empty() {
        return Err(Error::InvalidArgument("empty volume-fraction grid".into()));
    }
    for (i, &v) in vfs.iter().enumerate() {
        if !(v > 0.0 && v <= 1.0) || (i > 0 && !(v > vfs[i - 1])) {
            return Err(Error::InvalidArgument(format!(
                "volume-fraction grid must increase strictly within (0, 1]; entry {i} is {v}"
            )));
        }
    }
    Ok(())
}

/// Runs all tasks in parallel, keeping task order, and turns any failure into
/// one aggregated [`Error::Sweep`].
fn run_all(opt: &dyn PointOptimizer, tasks: &[(f64, DensityField)]) -> Result<Vec<Outcome>> {
    let results: Vec<Result<Outcome>> = tasks.par_iter().map(|(vf, init)| opt.run(*vf, init)).collect();
    let mut failed = Vec::new();
    let mut ok = Vec::with_capacity(results.len());
    for ((vf, _), r) in tasks.iter().zip(results) {
        match r {
            Ok(o) => ok.push(o),
            Err(e) => failed.push((*vf, e.to_string())),
        }
    }
    if failed.is_empty() {
        Ok(ok)
    } else {
        failed.dedup_by(|a, b| a.0 == b.0);
        Err(Error::Sweep { failed })
    }
}

/// One optimization per volume fraction from the uniform field.
pub fn baseline_sweep(opt: &dyn PointOptimizer, vfs: &[f64]) -> Result<Sweep> {
    check_grid(vfs)?;
    let tasks: Vec<_> = vfs.iter().map(|&vf| (vf, DensityField::uniform(opt.grid(), vf))).collect();
    let out = run_all(opt, &tasks)?;
    let points = vfs
        .iter()
        .zip(&out)
        .map(|(&vf, o)| FrontPoint { vf, c: o.c, provenance: "baseline".into() })
        .collect();
    Ok(Sweep {
        front: ParetoFront::new(opt.problem_name(), points)?,
        designs: out.into_iter().map(|o| o.densities).collect(),
    })
}

/// Best of the eleven initial designs at every volume fraction.
///
/// With `previous`, the [`InitialDesign::Previous`] start at a given volume
/// fraction is the previous sweep's design at the next higher volume
/// fraction, and a previous point at the same volume fraction competes too, so
/// the result is pointwise no worse.
pub fn multistart_sweep(opt: &dyn PointOptimizer, vfs: &[f64], previous: Option<&Sweep>) -> Result<Sweep> {
    check_grid(vfs)?;
    let grid = opt.grid();
    let mut tasks = Vec::with_capacity(vfs.len() * InitialDesign::ALL.len());
    for &vf in vfs {
        let prev_design = previous.and_then(|s| {
            let i = s.front.points().partition_point(|p| p.vf <= vf);
            s.designs.get(i)
        });
        for kind in InitialDesign::ALL {
            tasks.push((vf, initial_design_seeded(kind, vf, grid, prev_design, opt.seed())?));
        }
    }
    let out = run_all(opt, &tasks)?;
    let mut points = Vec::with_capacity(vfs.len());
    let mut designs = Vec::with_capacity(vfs.len());
    for (i, &vf) in vfs.iter().enumerate() {
        let chunk = &out[i * InitialDesign::ALL.len()..(i + 1) * InitialDesign::ALL.len()];
        let mut best = (chunk[0].c, InitialDesign::ALL[0].name().to_string(), &chunk[0].densities);
        for (o, kind) in chunk.iter().zip(InitialDesign::ALL).skip(1) {
            if o.c < best.0 {
                best = (o.c, kind.name().to_string(), &o.densities);
            }
        }
        if let Some(prev) = previous {
            if let Some(j) = prev.front.points().iter().position(|p| p.vf == vf) {
                let p = &prev.front.points()[j];
                if p.c < best.0 {
                    best = (p.c, p.provenance.clone(), &prev.designs[j]);
                }
            }
        }
        points.push(FrontPoint { vf, c: best.0, provenance: best.1 });
        designs.push(best.2.clone());
    }
    Ok(Sweep {
        front: ParetoFront::new(opt.problem_name(), points)?,
        designs,
    })
}

/// Settings of [`refine`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    pub rounds: usize,
    pub min_threshold: f64,
    pub drop_threshold: f64,
    /// A round that improves no point by more than this relative amount ends refinement.
    pub stop_improvement: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            rounds: 3,
            min_threshold: 0.002,
            drop_threshold: 0.05,
            stop_improvement: 5e-4,
        }
    }
}

/// Refinement result with per-round diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Refined {
    pub sweep: Sweep,
    /// Significant points of the input and of every completed round.
    pub significant: Vec<SignificantPoints>,
    pub rounds_run: usize,
}

/// Warm-start refinement: every point is re-optimized from the nearest
/// significant minimum below it and the nearest significant drop above it,
/// keeping the better of old and new.
pub fn refine(opt: &dyn PointOptimizer, start: &Sweep, cfg: &RefineConfig) -> Result<Refined> {
    if start.designs.len() != start.front.len() {
        return Err(Error::InvalidArgument("sweep has a design count mismatch".into()));
    }
    let mut sweep = start.clone();
    let mut significant = vec![detect_significant(&sweep.front, cfg.min_threshold, cfg.drop_threshold)];
    let mut rounds_run = 0;
    for round in 1..=cfg.rounds {
        let sig = significant.last().expect("nonempty");
        let pts = sweep.front.points();
        let mut tasks = Vec::new();
        let mut owners = Vec::new();
        for (i, p) in pts.iter().enumerate() {
            let left = sig.minima.iter().rev().find(|&&j| j < i);
            let right = sig.drops.iter().find(|&&j| j > i);
            for &j in left.into_iter().chain(right) {
                tasks.push((p.vf, rescale_to_mean(&sweep.designs[j], p.vf)?));
                owners.push((i, j));
            }
        }
        if tasks.is_empty() {
            break;
        }
        let out = run_all(opt, &tasks)?;
        rounds_run = round;
        let mut points = pts.to_vec();
        let mut best_gain = 0.0_f64;
        for ((i, j), o) in owners.into_iter().zip(out) {
            if o.c < points[i].c {
                best_gain = best_gain.max(1.0 - o.c / points[i].c);
                points[i].c = o.c;
                points[i].provenance = format!("refine{round}:{}", pts[j].vf);
                sweep.designs[i] = o.densities;
            }
        }
        sweep.front = ParetoFront::new(sweep.front.problem_name.clone(), points)?;
        significant.push(detect_significant(&sweep.front, cfg.min_threshold, cfg.drop_threshold));
        log::info!("refinement round {round}: best gain {:.4}%", 100.0 * best_gain);
        if best_gain <= cfg.stop_improvement {
            break;
        }
    }
    Ok(Refined {
        sweep,
        significant,
        rounds_run,
    })
}
