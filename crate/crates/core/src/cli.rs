//! Command orchestration behind the `qdot` binary.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::basis::ModelParams;
use crate::fit::{assign_lines, fit_lengths, FitMode, FitOptions, FitResult, MeasuredLine, Target, DEFAULT_ASSIGN_TOLERANCE};
use crate::io::{self, Provenance};
use crate::model::{solve, SolveOptions};
use crate::optics::{transition_catalog, CatalogOptions, Transition};
use crate::spectra::{simulate_ple, simulate_pl, Grid, PolarizationConfig, DEFAULT_STEP_UEV, ELECTRON_RELAXATION_WIDTH_UEV};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Levels,
    Transitions,
    Spectrum,
    Fit,
    Assign,
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "levels" => Command::Levels,
            "transitions" => Command::Transitions,
            "spectrum" => Command::Spectrum,
            "fit" => Command::Fit,
            "assign" => Command::Assign,
            _ => return Err(Error::Config(format!("unknown command {s:?}"))),
        })
    }
}

/// Energy range in meV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scan {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl FromStr for Scan {
    type Err = Error;

    /// `lo:hi:step`, all meV.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Config(format!("scan must be lo:hi:step in meV, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let v: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        Grid::new(v[0], v[1], v[2])?;
        Ok(Scan {
            lo: v[0],
            hi: v[1],
            step: v[2],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// Model parameters JSON; defaults when absent.
    pub params: Option<PathBuf>,
    pub out: PathBuf,
    pub scan: Option<Scan>,
    /// Empty means all eight configurations.
    pub configs: Vec<PolarizationConfig>,
    /// Monitored line for PLE; PL is produced without one.
    pub monitor: Option<String>,
    pub tolerance: Option<f64>,
    pub free_lengths: bool,
    pub measured: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: Command, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            command,
            params: None,
            out: out.into(),
            scan: None,
            configs: Vec::new(),
            monitor: None,
            tolerance: None,
            free_lengths: false,
            measured: None,
        }
    }
}

/// Fit output: the result plus provenance of the fitted parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub qdot: String,
    pub fingerprint: String,
    pub initial_fingerprint: String,
    pub result: FitResult,
}

impl FitReport {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn load_params(cfg: &RunConfig) -> Result<ModelParams> {
    match &cfg.params {
        Some(p) => ModelParams::load(p),
        None => Ok(ModelParams::default()),
    }
}

fn load_measured(cfg: &RunConfig) -> Result<Vec<MeasuredLine>> {
    let path = cfg
        .measured
        .as_ref()
        .ok_or_else(|| Error::Config(format!("{:?} needs measured lines", cfg.command)))?;
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let lines = io::read_measured(f)?;
    if lines.is_empty() {
        return Err(Error::Config(format!("no measured lines in {}", path.display())));
    }
    Ok(lines)
}

fn grid(cfg: &RunConfig, lines: &[&Transition]) -> Result<Grid> {
    match cfg.scan {
        Some(s) => Grid::new(s.lo, s.hi, s.step),
        None => {
            let e: Vec<f64> = lines.iter().map(|t| t.energy).collect();
            Grid::covering(&e, 5.0 * ELECTRON_RELAXATION_WIDTH_UEV / 1000.0, DEFAULT_STEP_UEV / 1000.0)
        }
    }
}

/// Executes one command and returns the files written, in write order.
pub fn run(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let params = load_params(cfg)?;
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let sol = solve(&params, &SolveOptions::default())?;
    let prov = Provenance::of(&sol);
    let mut written = Vec::new();
    match cfg.command {
        Command::Levels => {
            for levels in [&sol.x, &sol.xx] {
                let name = format!("levels_{}.csv", levels.ci.sector.name());
                let path = cfg.out.join(name);
                io::write_levels(create(&path)?, &prov, &io::level_rows(levels))?;
                written.push(path);
            }
        }
        Command::Transitions => {
            let cat = transition_catalog(&sol, &CatalogOptions::default())?;
            let path = cfg.out.join("transitions.csv");
            io::write_catalog(create(&path)?, &prov, &cat)?;
            written.push(path);
        }
        Command::Spectrum => {
            let cat = transition_catalog(&sol, &CatalogOptions::default())?;
            let configs = if cfg.configs.is_empty() {
                PolarizationConfig::all().to_vec()
            } else {
                cfg.configs.clone()
            };
            for c in configs {
                let spectrum = match &cfg.monitor {
                    Some(m) => {
                        let pumped: Vec<&Transition> = cat.iter().filter(|t| t.final_sector == "XX").collect();
                        simulate_ple(&sol, m, c, &grid(cfg, &pumped)?)?.spectrum
                    }
                    None => {
                        let all: Vec<&Transition> = cat.iter().collect();
                        simulate_pl(&sol, &cat, c, &grid(cfg, &all)?)?
                    }
                };
                let path = cfg.out.join(io::spectrum_file_name(&c, cfg.monitor.as_deref()));
                io::write_spectrum(create(&path)?, &prov, &spectrum)?;
                written.push(path);
            }
        }
        Command::Fit => {
            let measured = load_measured(cfg)?;
            let cat = transition_catalog(&sol, &CatalogOptions::default())?;
            let tol = cfg.tolerance.unwrap_or(DEFAULT_ASSIGN_TOLERANCE);
            let unhinted: Vec<MeasuredLine> = measured.iter().filter(|m| m.hint.is_none()).cloned().collect();
            let mut targets: Vec<Target> = measured
                .iter()
                .filter_map(|m| {
                    m.hint.clone().map(|key| Target {
                        line: m.clone(),
                        key,
                    })
                })
                .collect();
            if !unhinted.is_empty() {
                let a = assign_lines(&unhinted, &cat, tol)?;
                targets.extend(a.matches.iter().map(|x| Target {
                    line: unhinted[x.measured].clone(),
                    key: x.line.clone(),
                }));
            }
            let opts = FitOptions {
                mode: if cfg.free_lengths {
                    FitMode::Free
                } else {
                    FitMode::Constrained
                },
                ..FitOptions::default()
            };
            let result = fit_lengths(&params, &targets, &opts)?;
            let report = FitReport {
                qdot: io::VERSION.to_string(),
                fingerprint: result.params.fingerprint(),
                initial_fingerprint: sol.fingerprint.clone(),
                result,
            };
            let path = cfg.out.join("fit.json");
            fs::write(&path, report.to_json()? + "\n").map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Command::Assign => {
            let measured = load_measured(cfg)?;
            let cat = transition_catalog(&sol, &CatalogOptions::default())?;
            let a = assign_lines(&measured, &cat, cfg.tolerance.unwrap_or(DEFAULT_ASSIGN_TOLERANCE))?;
            let path = cfg.out.join("assignment.csv");
            io::write_assignment(create(&path)?, &prov, &measured, &a)?;
            written.push(path);
        }
    }
    Ok(written)
}
