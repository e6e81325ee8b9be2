//! Least-squares fit of the confinement lengths to measured transition
//! energies, and greedy assignment of measured lines to catalog lines.

use std::cell::OnceCell;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::basis::ModelParams;
use crate::error::{Error, Result};
use crate::model::{solve, Solution, SolveOptions};
use crate::optics::{transition_catalog, CatalogOptions, Polarization, Transition};

pub const DEFAULT_ASSIGN_TOLERANCE: f64 = 0.5;
pub const DEFAULT_MAX_ITERATIONS: usize = 500;
pub const DEFAULT_SIMPLEX_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasuredPolarization {
    H,
    V,
    Unpolarized,
    Unknown,
}

impl MeasuredPolarization {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "H" | "h" => MeasuredPolarization::H,
            "V" | "v" => MeasuredPolarization::V,
            "U" | "u" | "unpolarized" => MeasuredPolarization::Unpolarized,
            "" | "?" | "unknown" => MeasuredPolarization::Unknown,
            other => return Err(Error::Config(format!("unknown measured polarization {other:?}"))),
        })
    }

    /// Only a definite H against a definite V (or the reverse) is excluded.
    pub fn compatible(self, p: Polarization) -> bool {
        !matches!(
            (self, p),
            (MeasuredPolarization::H, Polarization::V) | (MeasuredPolarization::V, Polarization::H)
        )
    }
}

impl fmt::Display for MeasuredPolarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeasuredPolarization::H => "H",
            MeasuredPolarization::V => "V",
            MeasuredPolarization::Unpolarized => "unpolarized",
            MeasuredPolarization::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredLine {
    pub energy: f64,
    pub polarization: MeasuredPolarization,
    pub weight: f64,
    pub hint: Option<String>,
}

impl MeasuredLine {
    pub fn new(energy: f64) -> Self {
        MeasuredLine {
            energy,
            polarization: MeasuredPolarization::Unknown,
            weight: 1.0,
            hint: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.energy.is_finite() {
            return Err(Error::Config(format!("measured energy {} is not finite", self.energy)));
        }
        if !(self.weight >= 0.0 && self.weight.is_finite()) {
            return Err(Error::Config(format!("measured weight {} must be finite and ≥ 0", self.weight)));
        }
        Ok(())
    }
}

/// A measured line tied to a model transition key "initial->final".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub line: MeasuredLine,
    pub key: String,
}

/// Model energy of a target key: a state pair resolved through the level
/// lists, falling back to (merged) catalog line labels.
fn model_energy(sol: &Solution, catalog: &OnceCell<Result<Vec<Transition>>>, key: &str) -> Result<f64> {
    let (a, b) = key
        .split_once("->")
        .ok_or_else(|| Error::Config(format!("target key {key:?} is not of the form initial->final")))?;
    let (a, b) = (a.trim(), b.trim());
    if let (Some(x), Some(y)) = (sol.find(a), sol.find(b)) {
        return Ok((y.energy() - x.energy()).abs());
    }
    let cat = catalog
        .get_or_init(|| transition_catalog(sol, &CatalogOptions::default()))
        .as_ref()
        .map_err(|e| Error::numeric("fit", e.to_string()))?;
    cat.iter()
        .find(|t| t.connects(a, b))
        .map(|t| t.energy)
        .ok_or_else(|| Error::Config(format!("target key {key:?} does not resolve to a model transition")))
}

/// Residuals (model − measured, meV) at an already solved model.
pub fn residuals(sol: &Solution, targets: &[Target]) -> Result<Vec<f64>> {
    let cat = OnceCell::new();
    targets
        .iter()
        .map(|t| Ok(model_energy(sol, &cat, &t.key)? - t.line.energy))
        .collect()
}

fn weighted_ssr(targets: &[Target], r: &[f64]) -> f64 {
    targets.iter().zip(r).map(|(t, r)| t.line.weight * r * r).sum()
}

/// Weighted sum of squared residuals, meV².
pub fn objective(params: &ModelParams, targets: &[Target]) -> Result<f64> {
    let sol = solve(params, &solve_options())?;
    Ok(weighted_ssr(targets, &residuals(&sol, targets)?))
}

fn solve_options() -> SolveOptions {
    SolveOptions::default()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMode {
    /// l_e_x, l_h_x and a shared ξ.
    Constrained,
    /// All four lengths.
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub mode: FitMode,
    pub max_iterations: usize,
    /// Relative simplex diameter at which the search stops.
    pub tolerance: f64,
    /// Names of mode parameters held at their initial values.
    pub hold: Vec<String>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            mode: FitMode::Constrained,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance: DEFAULT_SIMPLEX_TOLERANCE,
            hold: Vec::new(),
        }
    }
}

impl FitMode {
    pub fn names(self) -> &'static [&'static str] {
        match self {
            FitMode::Constrained => &["l_e_x", "l_h_x", "xi"],
            FitMode::Free => &["l_e_x", "l_e_y", "l_h_x", "l_h_y"],
        }
    }

    fn encode(self, p: &ModelParams) -> Vec<f64> {
        match self {
            FitMode::Constrained => vec![p.l_e_x, p.l_h_x, p.xi],
            FitMode::Free => {
                let (ex, ey) = p.lengths(crate::basis::Carrier::Electron);
                let (hx, hy) = p.lengths(crate::basis::Carrier::Hole);
                vec![ex, ey, hx, hy]
            }
        }
    }

    fn decode(self, base: &ModelParams, x: &[f64]) -> ModelParams {
        let mut p = base.clone();
        match self {
            FitMode::Constrained => {
                p.l_e_x = x[0];
                p.l_h_x = x[1];
                p.xi = x[2];
                p.l_e_y = None;
                p.l_h_y = None;
            }
            FitMode::Free => {
                p.l_e_x = x[0];
                p.l_e_y = Some(x[1]);
                p.l_h_x = x[2];
                p.l_h_y = Some(x[3]);
            }
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ModelParams,
    pub mode: FitMode,
    pub parameter_names: Vec<String>,
    pub values: Vec<f64>,
    pub target_keys: Vec<String>,
    /// Model − measured per target, meV.
    pub residuals: Vec<f64>,
    pub rms: f64,
    pub objective: f64,
    pub initial_objective: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

impl FitResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<FitResult> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Outcome of a simplex search.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder–Mead minimization from `x0` with initial steps `step`. Stops when
/// every vertex lies within `tol` (relative, per coordinate) of the best one.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], step: &[f64], tol: f64, max_iter: usize) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() { f64::INFINITY } else { v }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0, &mut evals)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step[i];
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }
    let diameter = |s: &[(Vec<f64>, f64)]| {
        let best = &s[0].0;
        s[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(best).map(|(a, b)| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)))
            .fold(0.0, f64::max)
    };
    let sort = |s: &mut Vec<(Vec<f64>, f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    sort(&mut simplex);
    let mut iterations = 0;
    let mut converged = diameter(&simplex) < tol;
    while !converged && iterations < max_iter {
        iterations += 1;
        let worst = simplex[n].clone();
        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|(x, _)| x[k]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|k| centroid[k] + t * (worst.0[k] - centroid[k])).collect() };
        let xr = along(-1.0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let x = along(-0.5);
                let v = eval(&x, &mut evals);
                (x, v)
            } else {
                let x = along(0.5);
                let v = eval(&x, &mut evals);
                (x, v)
            };
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = (0..n).map(|k| best[k] + 0.5 * (vertex.0[k] - best[k])).collect();
                    let v = eval(&x, &mut evals);
                    *vertex = (x, v);
                }
            }
        }
        sort(&mut simplex);
        converged = diameter(&simplex) < tol;
    }
    let (x, value) = simplex.swap_remove(0);
    Minimum {
        x,
        value,
        iterations,
        evaluations: evals,
        converged,
    }
}

/// Fits the confinement lengths to the targets.
pub fn fit_lengths(initial: &ModelParams, targets: &[Target], opts: &FitOptions) -> Result<FitResult> {
    initial.validate()?;
    for h in &opts.hold {
        if !opts.mode.names().contains(&h.as_str()) {
            return Err(Error::Config(format!("cannot hold {h:?}: not a parameter of this fit mode")));
        }
    }
    let free: Vec<usize> = (0..opts.mode.names().len())
        .filter(|&i| !opts.hold.iter().any(|h| h == opts.mode.names()[i]))
        .collect();
    if free.is_empty() {
        return Err(Error::Config("a fit needs at least one free parameter".into()));
    }
    if targets.len() < free.len() {
        return Err(Error::Config(format!(
            "{} targets cannot determine {} free parameters",
            targets.len(),
            free.len()
        )));
    }
    for t in targets {
        t.line.validate()?;
    }
    let initial_objective = objective(initial, targets)?;
    let full0 = opts.mode.encode(initial);
    let expand = |y: &[f64]| {
        let mut x = full0.clone();
        for (k, &i) in free.iter().enumerate() {
            x[i] = y[k];
        }
        x
    };
    let y0: Vec<f64> = free.iter().map(|&i| full0[i]).collect();
    let step: Vec<f64> = y0.iter().map(|v| 0.05 * v).collect();
    // Invalid points and keys that stop resolving near level crossings are
    // treated as infeasible.
    let f = |y: &[f64]| {
        let p = opts.mode.decode(initial, &expand(y));
        objective(&p, targets).unwrap_or(f64::INFINITY)
    };
    let m = nelder_mead(f, &y0, &step, opts.tolerance, opts.max_iterations);
    let (x, value) = if m.value <= initial_objective {
        (expand(&m.x), m.value)
    } else {
        (full0.clone(), initial_objective)
    };
    let params = opts.mode.decode(initial, &x);
    let sol = solve(&params, &solve_options())?;
    let r = residuals(&sol, targets)?;
    let rms = (r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64).sqrt();
    Ok(FitResult {
        params,
        mode: opts.mode,
        parameter_names: opts.mode.names().iter().map(|s| s.to_string()).collect(),
        values: x,
        target_keys: targets.iter().map(|t| t.key.clone()).collect(),
        residuals: r,
        rms,
        objective: value,
        initial_objective,
        iterations: m.iterations,
        evaluations: m.evaluations,
        converged: m.converged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub measured: usize,
    pub line: String,
    pub model_energy: f64,
    /// Measured − model, meV.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Assignment {
    /// Sorted by measured index.
    pub matches: Vec<Match>,
    pub unmatched: Vec<usize>,
}

/// Greedy nearest-energy assignment: pairs are taken in order of |ΔE|
/// (ties to the lower-energy catalog line), each side used at most once,
/// and only within `tolerance` meV.
pub fn assign_lines(measured: &[MeasuredLine], catalog: &[Transition], tolerance: f64) -> Result<Assignment> {
    if catalog.is_empty() {
        return Err(Error::Precondition("cannot assign lines against an empty catalog".into()));
    }
    let mut pairs = Vec::new();
    for (i, m) in measured.iter().enumerate() {
        m.validate()?;
        for (j, t) in catalog.iter().enumerate() {
            let d = (m.energy - t.energy).abs();
            if d <= tolerance && m.polarization.compatible(t.polarization) {
                // Quantized so that equal distances compare equal.
                pairs.push(((d * 1e9).round() as i64, j, i));
            }
        }
    }
    pairs.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(catalog[a.1].energy.total_cmp(&catalog[b.1].energy))
            .then(a.2.cmp(&b.2))
            .then(a.1.cmp(&b.1))
    });
    let mut used_m = vec![false; measured.len()];
    let mut used_c = vec![false; catalog.len()];
    let mut matches = Vec::new();
    for (_, j, i) in pairs {
        if used_m[i] || used_c[j] {
            continue;
        }
        used_m[i] = true;
        used_c[j] = true;
        matches.push(Match {
            measured: i,
            line: catalog[j].key(),
            model_energy: catalog[j].energy,
            residual: measured[i].energy - catalog[j].energy,
        });
    }
    matches.sort_by_key(|m| m.measured);
    let unmatched = (0..measured.len()).filter(|&i| !used_m[i]).collect();
    Ok(Assignment { matches, unmatched })
}
