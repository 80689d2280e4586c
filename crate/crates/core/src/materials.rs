//! Minimum-mass material selection under a deflection limit.

use std::collections::HashSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem2d::DensityField;
use crate::metamodel::MetaModel;
use crate::pareto::PointOptimizer;

/// Relative index gap below which the two best candidates are re-scored.
pub const TIE_TOL: f64 = 0.02;

/// An isotropic material in SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    /// Young's modulus, Pa.
    pub e: f64,
    /// Density, kg/m^3.
    pub rho: f64,
}

impl Material {
    pub fn new(name: impl Into<String>, e: f64, rho: f64) -> Result<Self> {
        let name = name.into();
        if !(e > 0.0 && e.is_finite() && rho > 0.0 && rho.is_finite()) {
            return Err(Error::Validation(format!(
                "material {name}: modulus and density must be positive, got E={e} Pa, rho={rho}"
            )));
        }
        Ok(Self { name, e, rho })
    }

    /// Specific compliance `rho / E`.
    pub fn rho_over_e(&self) -> f64 {
        self.rho / self.e
    }
}

/// Load, deflection limit and part envelope, all in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadCase {
    /// Total load, N.
    pub force: f64,
    /// Allowed deflection at the load, m.
    pub delta_max: f64,
    pub thickness: f64,
    pub length: f64,
    pub height: f64,
}

impl LoadCase {
    pub fn validate(&self) -> Result<()> {
        let all = [self.force, self.delta_max, self.thickness, self.length, self.height];
        if all.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Validation(format!("load case values must be positive: {self:?}")))
        }
    }

    /// Normalized compliance a material must reach: `t E delta / F`.
    pub fn required_compliance(&self, mat: &Material) -> f64 {
        self.thickness * mat.e * self.delta_max / self.force
    }

    /// Part mass at volume fraction `vf`.
    pub fn mass(&self, mat: &Material, vf: f64) -> f64 {
        self.length * self.height * self.thickness * vf * mat.rho
    }

    pub fn scaled_force(&self, factor: f64) -> Self {
        Self { force: self.force * factor, ..*self }
    }
}

#[derive(Debug, Deserialize)]
struct MaterialRow {
    name: String,
    #[serde(rename = "E_GPa")]
    e_gpa: f64,
    rho_kgm3: f64,
}

/// Parses `name,E_GPa,rho_kgm3` CSV text. An empty input has no materials.
pub fn parse_materials(data: &str) -> Result<Vec<Material>> {
    if data.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(data.as_bytes());
    let headers = r.headers().map_err(crate::pareto::csv_error)?.clone();
    if headers.iter().collect::<Vec<_>>() != ["name", "E_GPa", "rho_kgm3"] {
        return Err(Error::Parse {
            line: 1,
            message: "expected header name,E_GPa,rho_kgm3".into(),
        });
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for row in r.deserialize::<MaterialRow>() {
        let row = row.map_err(crate::pareto::csv_error)?;
        if !seen.insert(row.name.clone()) {
            return Err(Error::Validation(format!("duplicate material {}", row.name)));
        }
        out.push(Material::new(row.name, row.e_gpa * 1e9, row.rho_kgm3)?);
    }
    Ok(out)
}

pub fn load_materials(path: &Path) -> Result<Vec<Material>> {
    let data = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_materials(&data)
}

fn dominates(a: &Material, b: &Material) -> bool {
    a.e >= b.e && a.rho <= b.rho && (a.e > b.e || a.rho < b.rho)
}

/// Materials on the stiff-and-light Pareto front; exact ties are all kept.
pub fn screen_pareto(mats: &[Material]) -> Vec<Material> {
    mats.iter()
        .filter(|m| !mats.iter().any(|o| dominates(o, m)))
        .cloned()
        .collect()
}

/// Materials at least as dense as the one with the smallest `rho / E`.
/// Among equal ratios the lightest is the reference, which keeps the most.
pub fn screen_density(mats: &[Material]) -> Vec<Material> {
    let Some(reference) = mats.iter().min_by(|a, b| {
        a.rho_over_e()
            .total_cmp(&b.rho_over_e())
            .then(a.rho.total_cmp(&b.rho))
    }) else {
        return Vec::new();
    };
    mats.iter().filter(|m| m.rho >= reference.rho).cloned().collect()
}

/// Approximate Ashby index of one material.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AshbyIndex {
    pub material: String,
    /// `vf * rho`, kg/m^3.
    pub f4: f64,
    pub vf: f64,
}

pub fn ashby_index(mat: &Material, m: &MetaModel, lc: &LoadCase) -> Result<AshbyIndex> {
    let vf = m.inverse(lc.required_compliance(mat)).map_err(|e| Error::Material {
        name: mat.name.clone(),
        source: Box::new(e),
    })?;
    Ok(AshbyIndex {
        material: mat.name.clone(),
        f4: vf * mat.rho,
        vf,
    })
}

/// Result of re-scoring one candidate with a local model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedVf {
    pub material: String,
    pub vf0: f64,
    pub vf: f64,
    pub mass: f64,
    pub model: MetaModel,
    /// Whether the refitted model was rejected and `vf0` kept.
    pub fell_back: bool,
    pub note: String,
}

/// Optimizes once at the model's volume fraction, refits the model through
/// that point and the solid design, and re-inverts.
pub fn refine_vf(mat: &Material, lc: &LoadCase, m0: &MetaModel, opt: &dyn PointOptimizer) -> Result<RefinedVf> {
    let x_req = lc.required_compliance(mat);
    let wrap = |e: Error| Error::Material { name: mat.name.clone(), source: Box::new(e) };
    let vf0 = m0.inverse(x_req).map_err(wrap)?;
    let fallback = |note: String| RefinedVf {
        material: mat.name.clone(),
        vf0,
        vf: vf0,
        mass: lc.mass(mat, vf0),
        model: m0.clone(),
        fell_back: true,
        note,
    };
    if vf0 >= 1.0 {
        return Ok(fallback("solid design required; nothing to refine".into()));
    }
    let out = opt.run(vf0, &DensityField::uniform(opt.grid(), vf0)).map_err(wrap)?;
    let c_full = m0.fit_points[1].c;
    match MetaModel::fit(vf0, out.c, c_full, m0.problem_name.clone()) {
        Ok(m1) => {
            let vf = m1.inverse(x_req).map_err(wrap)?;
            Ok(RefinedVf {
                material: mat.name.clone(),
                vf0,
                vf,
                mass: lc.mass(mat, vf),
                note: format!(
                    "optimized at vf {vf0:.5}: f = {:.6} (model {:.6}); refit b = {:.5}, vf -> {vf:.5}",
                    out.c,
                    m0.eval(vf0).map_err(wrap)?,
                    m1.b
                ),
                model: m1,
                fell_back: false,
            })
        }
        Err(e) => Ok(fallback(format!("refit rejected ({e}); keeping vf {vf0:.5}"))),
    }
}

/// Full decision record of [`select`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub kept_after_pareto: Vec<String>,
    pub kept_after_density: Vec<String>,
    /// Indices of the screened candidates, best first; infeasible ones are omitted.
    pub indices: Vec<AshbyIndex>,
    pub infeasible: Vec<String>,
    pub winner: String,
    pub winner_vf: f64,
    pub winner_mass: f64,
    pub winner_rho: f64,
    pub near_ties: Vec<RefinedVf>,
    pub trail: Vec<String>,
}

impl SelectionReport {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn trail_text(&self) -> String {
        let mut s = self.trail.join("\n");
        s.push('\n');
        s
    }
}

/// Screens, ranks by Ashby index and picks the lightest material. When the
/// runner-up is within `tie_tol` and `refiner` is given, both are re-scored
/// with [`refine_vf`] and the lower refined mass wins.
pub fn select(
    mats: &[Material],
    m: &MetaModel,
    lc: &LoadCase,
    tie_tol: f64,
    refiner: Option<&dyn PointOptimizer>,
) -> Result<SelectionReport> {
    lc.validate()?;
    if mats.is_empty() {
        return Err(Error::Validation("no materials to choose from".into()));
    }
    if !(tie_tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("tie tolerance must be >= 0, got {tie_tol}")));
    }
    let mut trail = Vec::new();
    let names = |v: &[Material]| v.iter().map(|m| m.name.clone()).collect::<Vec<_>>();

    let pareto = screen_pareto(mats);
    for gone in mats.iter().filter(|x| !pareto.contains(x)) {
        let by = mats.iter().find(|o| dominates(o, gone)).expect("dominated");
        trail.push(format!(
            "pareto screen: drop {} (dominated by {}: E {:.4} >= {:.4} GPa, rho {} <= {})",
            gone.name,
            by.name,
            by.e / 1e9,
            gone.e / 1e9,
            by.rho,
            gone.rho
        ));
    }
    let dense = screen_density(&pareto);
    if let Some(r) = dense.iter().min_by(|a, b| a.rho_over_e().total_cmp(&b.rho_over_e()).then(a.rho.total_cmp(&b.rho))) {
        for gone in pareto.iter().filter(|x| !dense.contains(x)) {
            trail.push(format!(
                "density screen: drop {} (rho {} below {} of {}, which has the lowest rho/E)",
                gone.name, gone.rho, r.rho, r.name
            ));
        }
    }

    let mut indices = Vec::new();
    let mut infeasible = Vec::new();
    for mat in &dense {
        match ashby_index(mat, m, lc) {
            Ok(ix) => {
                trail.push(format!(
                    "index {}: required f {:.6}, vf {:.6}, f4 {:.4} kg/m^3",
                    mat.name,
                    lc.required_compliance(mat),
                    ix.vf,
                    ix.f4
                ));
                indices.push(ix);
            }
            Err(e) => {
                trail.push(format!("index {}: infeasible ({e})", mat.name));
                infeasible.push(mat.name.clone());
            }
        }
    }
    if indices.is_empty() {
        return Err(Error::InfeasibleProblem(format!(
            "no screened material reaches the required stiffness: {}",
            infeasible.join(", ")
        )));
    }
    indices.sort_by(|a, b| a.f4.total_cmp(&b.f4));
    let find = |name: &str| dense.iter().find(|x| x.name == name).expect("candidate");

    let best = &indices[0];
    let mut winner = find(&best.material).clone();
    let mut winner_vf = best.vf;
    let mut near_ties = Vec::new();
    if indices.len() == 1 {
        trail.push(format!("single candidate {}", winner.name));
    } else {
        let second = &indices[1];
        let gap = second.f4 / best.f4 - 1.0;
        if gap <= tie_tol {
            trail.push(format!(
                "near tie: {} is {:.2}% above {} (tolerance {:.2}%)",
                second.material,
                100.0 * gap,
                best.material,
                100.0 * tie_tol
            ));
            if let Some(opt) = refiner {
                let pair = [find(&best.material).clone(), find(&second.material).clone()];
                let refined = pair
                    .par_iter()
                    .map(|mat| refine_vf(mat, lc, m, opt))
                    .collect::<Vec<Result<RefinedVf>>>()
                    .into_iter()
                    .collect::<Result<Vec<_>>>()?;
                for r in &refined {
                    trail.push(format!("refine {}: {}; mass {:.5} kg", r.material, r.note, r.mass));
                }
                let pick = if refined[1].mass < refined[0].mass { 1 } else { 0 };
                winner = pair[pick].clone();
                winner_vf = refined[pick].vf;
                near_ties = refined;
            } else {
                trail.push("no optimizer available; keeping the index ranking".into());
            }
        } else {
            trail.push(format!(
                "{} leads {} by {:.2}%",
                best.material,
                second.material,
                100.0 * gap
            ));
        }
    }
    let winner_mass = lc.mass(&winner, winner_vf);
    trail.push(format!(
        "winner {}: vf {:.6}, mass {:.5} kg",
        winner.name, winner_vf, winner_mass
    ));
    Ok(SelectionReport {
        kept_after_pareto: names(&pareto),
        kept_after_density: names(&dense),
        indices,
        infeasible,
        winner: winner.name.clone(),
        winner_vf,
        winner_mass,
        winner_rho: winner.rho,
        near_ties,
        trail,
    })
}
