use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;

use topofront::er::{compute_er, filter_er};
use topofront::fem2d::ProblemSpec;
use topofront::materials::{load_materials, select, LoadCase, Material, TIE_TOL};
use topofront::metamodel::{anchor_compliance, full_density_compliance, MetaModel};
use topofront::pareto::{
    baseline_sweep, multistart_sweep, refine, ParetoFront, ResultCache, SimpRunner, Sweep, SMOOTH_SIGMA,
};
use topofront::simp::{initial_design_seeded, optimize, InitialDesign};
use topofront::svg::{density_raster, Chart, Series, Style};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::Strategy;

/// Resolved configuration, problem and cache shared by the subcommands.
pub struct Env {
    cfg: RunConfig,
    problem: ProblemSpec,
    cache: ResultCache,
    out: PathBuf,
}

#[derive(Debug, Serialize)]
struct OptimizeSummary<'a> {
    problem: &'a str,
    nelx: usize,
    nely: usize,
    init: String,
    target_vf: f64,
    vf: f64,
    compliance_p: f64,
    compliance_p1: f64,
    /// Full-part compliance under a unit load.
    normalized_compliance: f64,
    iterations: usize,
    converged: bool,
    descent_violations: usize,
    cache_key: String,
}

#[derive(Debug, Serialize)]
struct ErrorRow {
    vf: f64,
    c_front: f64,
    c_model: f64,
    rel_error: f64,
}

impl Env {
    pub fn new(cfg: RunConfig, cache_flag: Option<&Path>, no_cache: bool) -> CliResult<Self> {
        let problem = cfg.problem()?;
        let out = cfg.output_dir();
        std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
        let cache = if no_cache {
            ResultCache::in_memory()
        } else {
            let dir = cfg.cache_dir(cache_flag);
            info!("cache: {}", dir.display());
            ResultCache::on_disk(dir)?
        };
        Ok(Self { cfg, problem, cache, out })
    }

    fn runner(&self) -> SimpRunner<'_> {
        SimpRunner::new(&self.problem, &self.cfg.optimizer, Some(&self.cache)).with_seed(self.cfg.seed)
    }

    fn write(&self, name: &str, contents: &str) -> CliResult<PathBuf> {
        let path = self.out.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        info!("wrote {}", path.display());
        Ok(path)
    }

    fn report_cache(&self) {
        let (hits, misses) = self.cache.stats();
        info!("cache: {hits} hits, {misses} misses");
    }

    pub fn optimize(&self, vf: f64, init: InitialDesign) -> CliResult<()> {
        let name = &self.problem.name;
        if !(vf > 0.0 && vf <= 1.0) {
            return Err(topofront::Error::InvalidArgument(format!(
                "volume fraction must satisfy 0 < vf <= 1, got {vf}"
            ))
            .into());
        }
        let start = initial_design_seeded(init, vf, self.problem.grid, None, self.cfg.seed)?;
        let key = ResultCache::key(&self.problem, vf, &start, &self.cfg.optimizer);
        let r = self
            .cache
            .get_or_insert_with(&key, || optimize(&self.problem, vf, &self.cfg.optimizer, &start))?;
        let stem = format!("design_{name}_vf{vf}");
        self.write(&format!("{stem}.csv"), &r.densities.to_csv())?;
        self.write(&format!("{stem}.svg"), &density_raster(&r.densities, 8))?;
        let summary = OptimizeSummary {
            problem: name,
            nelx: self.problem.grid.nelx,
            nely: self.problem.grid.nely,
            init: init.to_string(),
            target_vf: vf,
            vf: r.vf,
            compliance_p: r.compliance_p,
            compliance_p1: r.compliance_p1,
            normalized_compliance: self.problem.normalize_compliance(r.compliance_p1),
            iterations: r.iterations,
            converged: r.converged,
            descent_violations: r.descent_violations,
            cache_key: key,
        };
        let json = serde_json::to_string_pretty(&summary).map_err(topofront::Error::from)?;
        self.write(&format!("{stem}.json"), &json)?;
        println!(
            "{name} vf {vf}: compliance {:.6} (p=1: {:.6}), {} iterations{}",
            r.compliance_p,
            r.compliance_p1,
            r.iterations,
            if r.converged { "" } else { " (not converged)" }
        );
        self.report_cache();
        Ok(())
    }

    pub fn pareto(&self, strategy: Strategy) -> CliResult<()> {
        let name = &self.problem.name;
        let vfs = self.cfg.vfs()?;
        let runner = self.runner();
        let mut stages: Vec<(&str, Sweep)> = Vec::new();
        info!("{name}: baseline sweep over {} volume fractions", vfs.len());
        stages.push(("baseline", baseline_sweep(&runner, &vfs)?));
        if strategy != Strategy::Baseline {
            info!("{name}: multi-start sweep");
            let m = multistart_sweep(&runner, &vfs, Some(&stages[0].1))?;
            stages.push(("multistart", m));
        }
        if strategy == Strategy::Refine {
            info!("{name}: refinement");
            let r = refine(&runner, &stages[1].1, &self.cfg.refine_config())?;
            info!("{name}: {} refinement round(s)", r.rounds_run);
            stages.push(("refine", r.sweep));
        }
        let mut chart = Chart::new(&format!("Pareto front: {name}"), "volume fraction", "normalized compliance")
            .log_axes(false, true);
        for (k, (stage, sweep)) in stages.iter().enumerate() {
            self.write(&format!("front_{name}_{stage}.csv"), &sweep.front.to_csv())?;
            let style = if k + 1 == stages.len() { Style::Line } else { Style::Dashed };
            let pts = sweep.front.points().iter().map(|p| (p.vf, p.c)).collect();
            chart.push(Series::new(*stage, pts, style));
        }
        self.write(&format!("front_{name}.svg"), &chart.render())?;
        let (stage, last) = stages.last().expect("baseline always runs");
        println!("{name}: {stage} front with {} points", last.front.len());
        self.report_cache();
        Ok(())
    }

    pub fn er(&self, front_path: &Path, sigma: Option<f64>) -> CliResult<()> {
        let front = ParetoFront::load(front_path)?;
        let stem = front_path.file_stem().and_then(|s| s.to_str()).unwrap_or("front");
        let raw = compute_er(&front)?;
        let filtered = filter_er(&front, sigma.unwrap_or(SMOOTH_SIGMA))?;
        let ns = filtered.ns();
        let outside = ns.iter().filter(|n| !(-0.02..=1.02).contains(*n)).count();
        if outside > 0 {
            warn!("{outside} filtered values fall outside [-0.02, 1.02]");
        }
        let increases = filtered.increases_above(0.02);
        if increases * 10 > ns.len() {
            warn!("filtered ratio increases by more than 0.02 at {increases} of {} samples", ns.len());
        }
        self.write(&format!("er_{stem}_raw.csv"), &raw.to_csv())?;
        self.write(&format!("er_{stem}_filtered.csv"), &filtered.to_csv())?;
        let series = |s: &topofront::er::ErSeries| s.points.iter().map(|p| (p.vf, p.n)).collect::<Vec<_>>();
        let mut chart = Chart::new(&format!("Efficiency ratio: {stem}"), "volume fraction", "n");
        chart.push(Series::new("raw", series(&raw), Style::Markers));
        chart.push(Series::new("filtered", series(&filtered), Style::Line));
        self.write(&format!("er_{stem}.svg"), &chart.render())?;
        println!(
            "{stem}: filtered n from {:.4} to {:.4}",
            ns.first().copied().unwrap_or(f64::NAN),
            ns.last().copied().unwrap_or(f64::NAN)
        );
        Ok(())
    }

    pub fn fit(&self) -> CliResult<MetaModel> {
        let name = &self.problem.name;
        let c_full = full_density_compliance(&self.problem)?;
        info!("{name}: solid design f(1) = {c_full:.6}; multi-start anchor at vf {}", self.cfg.anchor_vf);
        let c1 = anchor_compliance(&self.runner(), self.cfg.anchor_vf)?;
        let model = MetaModel::fit(self.cfg.anchor_vf, c1, c_full, name.clone())?;
        self.write(&format!("model_{name}.json"), &model.to_json_pretty())?;

        let xs: Vec<f64> = (1..=200).map(|i| i as f64 / 200.0).collect();
        let curve = xs.iter().map(|&x| Ok((x, model.eval(x)?))).collect::<topofront::Result<Vec<_>>>()?;
        let mut chart = Chart::new(&format!("Front model: {name}"), "volume fraction", "normalized compliance")
            .log_axes(false, true);
        chart.push(Series::new("model", curve, Style::Line));
        let front_path = self.out.join(format!("front_{name}_refine.csv"));
        if front_path.exists() {
            let front = ParetoFront::load(&front_path)?;
            let rows = front
                .points()
                .iter()
                .map(|p| {
                    let c_model = model.eval(p.vf)?;
                    Ok(ErrorRow { vf: p.vf, c_front: p.c, c_model, rel_error: c_model / p.c - 1.0 })
                })
                .collect::<topofront::Result<Vec<_>>>()?;
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &rows {
                w.serialize(r).map_err(|e| CliError::Config(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
            self.write(&format!("fit_{name}_error.csv"), &String::from_utf8_lossy(&bytes))?;
            let worst = rows.iter().map(|r| r.rel_error.abs()).fold(0.0, f64::max);
            info!("{name}: largest relative deviation from the refined front {:.2}%", 100.0 * worst);
            chart.push(Series::new("refined front", front.points().iter().map(|p| (p.vf, p.c)).collect(), Style::Markers));
        } else {
            info!("no refined front at {}; error profile skipped", front_path.display());
        }
        self.write(&format!("fit_{name}.svg"), &chart.render())?;
        println!("{name}: a = {:.6}, b = {:.6}", model.a, model.b);
        self.report_cache();
        Ok(model)
    }

    pub fn select(
        &self,
        materials: &Path,
        load: &Path,
        model: Option<&Path>,
        load_factor: f64,
        tie_tol: Option<f64>,
    ) -> CliResult<()> {
        let mats = load_materials(materials)?;
        if mats.is_empty() {
            return Err(topofront::Error::Validation(format!("{} lists no materials", materials.display())).into());
        }
        let text = std::fs::read_to_string(load).map_err(|e| CliError::io(load, e))?;
        let lc: LoadCase = serde_json::from_str(&text).map_err(topofront::Error::from)?;
        if !(load_factor > 0.0 && load_factor.is_finite()) {
            return Err(CliError::Config(format!("load factor must be positive, got {load_factor}")));
        }
        let lc = lc.scaled_force(load_factor);
        let model = match model {
            Some(p) => {
                let m = MetaModel::load(p)?;
                if m.problem_name != self.problem.name {
                    warn!("model was fitted for `{}`, refinement uses `{}`", m.problem_name, self.problem.name);
                }
                m
            }
            None => self.fit()?,
        };
        let runner = self.runner();
        let report = select(&mats, &model, &lc, tie_tol.unwrap_or(TIE_TOL), Some(&runner))?;
        self.write("selection.json", &report.to_json_pretty())?;
        self.write("selection_trail.txt", &report.trail_text())?;
        self.write("ashby.svg", &ashby_chart(&mats, &report.kept_after_density, &report.winner))?;
        println!(
            "winner {}: vf {:.5}, mass {:.4} kg",
            report.winner, report.winner_vf, report.winner_mass
        );
        self.report_cache();
        Ok(())
    }
}

fn ashby_chart(mats: &[Material], kept: &[String], winner: &str) -> String {
    let mut chart = Chart::new("Candidate materials", "density (kg/m^3)", "Young's modulus (GPa)").log_axes(true, true);
    let group = |pred: &dyn Fn(&Material) -> bool| -> (Vec<(f64, f64)>, Vec<String>) {
        mats.iter().filter(|m| pred(m)).map(|m| ((m.rho, m.e / 1e9), m.name.clone())).unzip()
    };
    let (pts, names) = group(&|m| !kept.contains(&m.name));
    chart.push(Series::new("screened out", pts, Style::Markers).with_labels(names));
    let (pts, names) = group(&|m| kept.contains(&m.name) && m.name != winner);
    chart.push(Series::new("candidates", pts, Style::Markers).with_labels(names));
    let (pts, names) = group(&|m| m.name == winner);
    chart.push(Series::new("selected", pts, Style::Markers).with_labels(names));
    chart.render()
}
