//! Gaussian-broadened PL and two-laser PLE spectra built from the
//! transition catalog.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ci::config::Sector;
use crate::error::{Error, Result};
use crate::model::{FineState, SectorLevels, Solution};
use crate::optics::{transition_catalog, CatalogOptions, Polarization, Strengths, Transition};
use crate::units::UEV_PER_MEV;

/// Gaussian σ for lines whose final state relaxes by hole scattering, µeV.
pub const HOLE_RELAXATION_WIDTH_UEV: f64 = 50.0;
/// Gaussian σ when an electron must relax from the final state, µeV.
pub const ELECTRON_RELAXATION_WIDTH_UEV: f64 = 1000.0;
pub const DEFAULT_STEP_UEV: f64 = 2.0;
/// Population of each ground dark exciton relative to the driven bright one.
pub const DARK_POPULATION: f64 = 0.5;
/// Minimum squared spin overlap for a relaxation path.
pub const SPIN_OVERLAP_THRESHOLD: f64 = 0.5;
/// Resonances weaker than this are not reported.
const NEGLIGIBLE: f64 = 1e-12;
/// Gaussians are evaluated out to this many σ.
const CUTOFF_SIGMAS: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Linear {
    H,
    V,
}

impl Linear {
    pub fn polarization(self) -> Polarization {
        match self {
            Linear::H => Polarization::H,
            Linear::V => Polarization::V,
        }
    }

    pub fn flipped(self) -> Linear {
        match self {
            Linear::H => Linear::V,
            Linear::V => Linear::H,
        }
    }

    fn from_char(c: char) -> Option<Linear> {
        match c {
            'H' => Some(Linear::H),
            'V' => Some(Linear::V),
            _ => None,
        }
    }
}

/// Exciton laser, biexciton (scanned) laser and detection polarizations,
/// written "XY(Z)".
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PolarizationConfig {
    pub exciton_laser: Linear,
    pub biexciton_laser: Linear,
    pub detection: Linear,
}

impl PolarizationConfig {
    pub fn new(exciton_laser: Linear, biexciton_laser: Linear, detection: Linear) -> Self {
        PolarizationConfig {
            exciton_laser,
            biexciton_laser,
            detection,
        }
    }

    /// All eight combinations in a fixed order.
    pub fn all() -> Vec<PolarizationConfig> {
        let both = [Linear::H, Linear::V];
        let mut out = Vec::new();
        for x in both {
            for y in both {
                for z in both {
                    out.push(PolarizationConfig::new(x, y, z));
                }
            }
        }
        out
    }

    pub fn flipped(self) -> Self {
        PolarizationConfig::new(self.exciton_laser.flipped(), self.biexciton_laser.flipped(), self.detection.flipped())
    }
}

impl fmt::Display for PolarizationConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{:?}({:?})", self.exciton_laser, self.biexciton_laser, self.detection)
    }
}

impl FromStr for PolarizationConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let c: Vec<char> = s.trim().chars().collect();
        let bad = || Error::Config(format!("polarization config {s:?} is not of the form XY(Z) with X, Y, Z in {{H, V}}"));
        if c.len() != 5 || c[2] != '(' || c[4] != ')' {
            return Err(bad());
        }
        let l = |k: usize| Linear::from_char(c[k]).ok_or_else(bad);
        Ok(PolarizationConfig::new(l(0)?, l(1)?, l(3)?))
    }
}

/// Uniform energy grid in meV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Grid {
    /// Points from `lo` up to and including `hi` (within half a step).
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Grid> {
        if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || step <= 0.0 || hi <= lo {
            return Err(Error::Precondition(format!(
                "energy grid needs lo < hi and step > 0, got {lo}:{hi}:{step}"
            )));
        }
        let len = ((hi - lo) / step + 0.5).floor() as usize + 1;
        Ok(Grid { start: lo, step, len })
    }

    /// Grid spanning the given energies with a margin on both sides.
    pub fn covering(energies: &[f64], margin: f64, step: f64) -> Result<Grid> {
        let lo = energies.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            return Err(Error::Precondition("no lines to cover".into()));
        }
        let lo = ((lo - margin) / step).floor() * step;
        let hi = ((hi + margin) / step).ceil() * step;
        Grid::new(lo, hi, step)
    }

    pub fn energy(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn energies(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.energy(i)).collect()
    }

    /// Same range with half the step.
    pub fn refined(&self) -> Grid {
        Grid {
            start: self.start,
            step: self.step / 2.0,
            len: 2 * self.len - 1,
        }
    }
}

/// A line to broaden: energy (meV), area, and Gaussian σ (µeV).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub energy: f64,
    pub strength: f64,
    pub width_uev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub energies: Vec<f64>,
    pub intensities: Vec<f64>,
    pub config: Option<PolarizationConfig>,
    pub monitored_line: Option<String>,
}

impl Spectrum {
    pub fn step(&self) -> f64 {
        if self.energies.len() < 2 {
            0.0
        } else {
            self.energies[1] - self.energies[0]
        }
    }

    /// Integrated intensity (rectangle rule, exact to rounding for
    /// well-sampled Gaussians).
    pub fn area(&self) -> f64 {
        self.intensities.iter().sum::<f64>() * self.step()
    }

    pub fn max(&self) -> f64 {
        self.intensities.iter().copied().fold(0.0, f64::max)
    }

    /// Intensity at the grid point nearest to `e`.
    pub fn at(&self, e: f64) -> f64 {
        let i = ((e - self.energies[0]) / self.step()).round();
        if i < 0.0 || i as usize >= self.energies.len() {
            0.0
        } else {
            self.intensities[i as usize]
        }
    }
}

/// Sum of unit-area Gaussians (σ = line width) scaled by line strengths.
pub fn broaden_lines(lines: &[Line], grid: &Grid) -> Result<Vec<f64>> {
    let mut out = vec![0.0; grid.len];
    for l in lines {
        if !(l.width_uev > 0.0) {
            return Err(Error::Precondition(format!("line width must be positive, got {}", l.width_uev)));
        }
        let sigma = l.width_uev / UEV_PER_MEV;
        if grid.step > sigma / 5.0 * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!(
                "grid step {} µeV exceeds width/5 = {} µeV",
                grid.step * UEV_PER_MEV,
                l.width_uev / 5.0
            )));
        }
        let norm = l.strength / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        let lo = ((l.energy - CUTOFF_SIGMAS * sigma - grid.start) / grid.step).floor().max(0.0) as usize;
        let hi = (((l.energy + CUTOFF_SIGMAS * sigma - grid.start) / grid.step).ceil().max(0.0) as usize).min(grid.len);
        for (i, o) in out.iter_mut().enumerate().take(hi).skip(lo) {
            let x = (grid.energy(i) - l.energy) / sigma;
            *o += norm * (-0.5 * x * x).exp();
        }
    }
    Ok(out)
}

/// Broadens catalog lines with one width, reading each line's strength in
/// the given detection channel (total strength when `None`).
pub fn broaden(lines: &[Transition], width_uev: f64, grid: &Grid, detection: Option<Linear>) -> Result<Spectrum> {
    let ls: Vec<Line> = lines
        .iter()
        .map(|t| Line {
            energy: t.energy,
            strength: match detection {
                Some(d) => t.components.channel(d.polarization()),
                None => t.strength,
            },
            width_uev,
        })
        .collect();
    Ok(Spectrum {
        energies: grid.energies(),
        intensities: broaden_lines(&ls, grid)?,
        config: None,
        monitored_line: None,
    })
}

/// Where each state ends up after spin-conserving non-radiative relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedingGraph {
    /// state key → (terminal state key, squared spin overlap)
    pub targets: BTreeMap<String, (String, f64)>,
    /// States that relax nowhere (no target of the same spin class with
    /// sufficient overlap).
    pub stranded: BTreeSet<String>,
}

impl FeedingGraph {
    pub fn terminal(&self, key: &str) -> Option<(&str, f64)> {
        self.targets.get(key).map(|(t, w)| (t.as_str(), *w))
    }

    pub fn is_terminal(&self, key: &str) -> bool {
        matches!(self.targets.get(key), Some((t, _)) if t == key)
    }
}

pub fn spin_overlap(a: &FineState, b: &FineState) -> f64 {
    a.spin_vector
        .iter()
        .filter_map(|(k, x)| b.spin_vector.get(k).map(|y| x * y))
        .sum::<f64>()
        .powi(2)
}

fn sector_feeding(levels: &SectorLevels, g: &mut FeedingGraph) {
    let mut lowest: BTreeMap<(i32, i32), usize> = BTreeMap::new();
    for s in &levels.states {
        let k = s.state.multiplet;
        let e = lowest.entry(s.spin).or_insert(k);
        if levels.ci.multiplets[k].energy < levels.ci.multiplets[*e].energy {
            *e = k;
        }
    }
    for s in &levels.states {
        let bottom = lowest[&s.spin];
        if s.state.multiplet == bottom {
            g.targets.insert(s.key(), (s.key(), 1.0));
            continue;
        }
        let best = levels
            .states
            .iter()
            .filter(|t| t.state.multiplet == bottom)
            .map(|t| (t, spin_overlap(s, t)))
            .fold(None::<(&FineState, f64)>, |acc, (t, w)| match acc {
                Some((_, b)) if b >= w => acc,
                _ => Some((t, w)),
            });
        match best {
            Some((t, w)) if w >= SPIN_OVERLAP_THRESHOLD => {
                g.targets.insert(s.key(), (t.key(), w));
            }
            _ => {
                g.stranded.insert(s.key());
            }
        }
    }
}

/// Each state relaxes to the lowest multiplet of its own (2S_e, 2S_h)
/// class, landing on the fine state with the largest spin overlap.
pub fn feeding_graph(sol: &Solution) -> FeedingGraph {
    let mut g = FeedingGraph {
        targets: BTreeMap::new(),
        stranded: BTreeSet::new(),
    };
    sector_feeding(&sol.x, &mut g);
    sector_feeding(&sol.xx, &mut g);
    g.targets.insert(sol.vacuum.key(), (sol.vacuum.key(), 1.0));
    g
}

/// σ of lines ending in `key`: wide if an electron has to relax from it.
pub fn linewidth_class(sol: &Solution, graph: &FeedingGraph, key: &str) -> f64 {
    let (Some(s), Some((t, _))) = (sol.find(key), graph.terminal(key)) else {
        return HOLE_RELAXATION_WIDTH_UEV;
    };
    let Some(levels) = sol.sector(s.state.sector) else {
        return HOLE_RELAXATION_WIDTH_UEV;
    };
    let t = sol.find(t).expect("terminal states belong to the solution");
    let occ = |f: &FineState| levels.ci.multiplets[f.state.multiplet].occupation.e.clone();
    if occ(s) != occ(t) {
        ELECTRON_RELAXATION_WIDTH_UEV
    } else {
        HOLE_RELAXATION_WIDTH_UEV
    }
}

fn unmerged_catalog(sol: &Solution) -> Result<Vec<Transition>> {
    transition_catalog(
        sol,
        &CatalogOptions {
            merge_tolerance_uev: 0.0,
            min_strength: 0.0,
        },
    )
}

/// Emission spectrum of the radiative (terminal) states: the ground
/// exciton multiplet, the ground biexciton and the spin-blockaded
/// biexcitons, each fine state with unit population.
pub fn simulate_pl(sol: &Solution, catalog: &[Transition], config: PolarizationConfig, grid: &Grid) -> Result<Spectrum> {
    let graph = feeding_graph(sol);
    let lines = pl_lines(sol, catalog, &graph, config.detection);
    Ok(Spectrum {
        energies: grid.energies(),
        intensities: broaden_lines(&lines, grid)?,
        config: Some(config),
        monitored_line: None,
    })
}

/// Lines entering a PL spectrum (emission from terminal states).
pub fn pl_lines(sol: &Solution, catalog: &[Transition], graph: &FeedingGraph, detection: Linear) -> Vec<Line> {
    catalog
        .iter()
        .filter(|t| t.final_states.iter().all(|k| graph.is_terminal(k)))
        .map(|t| {
            let width = t
                .initial_states
                .iter()
                .map(|k| linewidth_class(sol, graph, k))
                .fold(0.0, f64::max);
            Line {
                energy: t.energy,
                strength: t.components.channel(detection.polarization()),
                width_uev: width,
            }
        })
        .collect()
}

/// One absorption resonance contributing to (or depleting) a monitored line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub energy: f64,
    pub initial: String,
    pub final_state: String,
    pub terminal: String,
    /// Signed feeding: positive feeds the monitored line, negative drains
    /// its emitting state.
    pub weight: f64,
    pub width_uev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PleResult {
    pub spectrum: Spectrum,
    pub resonances: Vec<Resonance>,
}

/// Finds a catalog line by key (either orientation), or by a substring that
/// matches exactly one line.
pub fn find_line<'a>(catalog: &'a [Transition], query: &str) -> Result<&'a Transition> {
    if let Some((a, b)) = query.split_once("->") {
        if let Some(t) = catalog.iter().find(|t| t.connects(a.trim(), b.trim())) {
            return Ok(t);
        }
    }
    let hits: Vec<&Transition> = catalog
        .iter()
        .filter(|t| t.key().contains(query) || t.reversed().key().contains(query))
        .collect();
    match hits.len() {
        1 => Ok(hits[0]),
        0 => Err(Error::Lookup(format!("no line matches {query:?}"))),
        n => Err(Error::Lookup(format!("{n} lines match {query:?}; give the full initial->final key"))),
    }
}

/// Populations prepared by the exciton laser: the ground bright state it
/// drives, plus both ground dark states at `DARK_POPULATION`.
fn initial_populations(sol: &Solution, catalog: &[Transition], laser: Linear) -> BTreeMap<String, f64> {
    let mut pop = BTreeMap::new();
    let ground: Vec<&FineState> = sol.x.states.iter().filter(|s| s.state.multiplet == 0).collect();
    let vacuum_line = |s: &FineState| {
        catalog
            .iter()
            .filter(|t| t.initial_sector == Sector::Vacuum.name() && t.final_states.contains(&s.key()))
            .fold(Strengths::default(), |mut acc, t| {
                acc.add(&t.components);
                acc
            })
    };
    let drive = |s: &FineState| vacuum_line(s).channel(laser.polarization());
    if let Some(b) = ground
        .iter()
        .filter(|s| drive(s) > 0.0)
        .max_by(|a, b| drive(a).total_cmp(&drive(b)).then_with(|| b.key().cmp(&a.key())))
    {
        pop.insert(b.key(), 1.0);
    }
    for s in &ground {
        if vacuum_line(s).total() == 0.0 {
            pop.insert(s.key(), DARK_POPULATION);
        }
    }
    pop
}

/// Two-laser PLE: scanning the biexciton laser over `grid` while
/// monitoring `monitored` in the detection polarization.
pub fn simulate_ple(sol: &Solution, monitored: &str, config: PolarizationConfig, grid: &Grid) -> Result<PleResult> {
    let raw = unmerged_catalog(sol)?;
    let merged = transition_catalog(sol, &CatalogOptions::default())?;
    let line = find_line(&merged, monitored)?;
    let emitters: BTreeSet<&String> = line.final_states.iter().collect();
    let receivers: BTreeSet<&String> = line.initial_states.iter().collect();
    let det = config.detection.polarization();

    // Fraction of each emitter's decay landing in the monitored channel.
    let mut branching: BTreeMap<&String, f64> = BTreeMap::new();
    for e in &emitters {
        let (mut hit, mut all) = (0.0, 0.0);
        for t in raw.iter().filter(|t| t.final_state == **e) {
            all += t.strength;
            if receivers.contains(&t.initial) {
                hit += t.components.channel(det);
            }
        }
        branching.insert(e, if all > 0.0 { hit / all } else { 0.0 });
    }

    let graph = feeding_graph(sol);
    let pop = initial_populations(sol, &merged, config.exciton_laser);
    let laser = config.biexciton_laser.polarization();
    let mut resonances = Vec::new();
    let mut lines = Vec::new();
    for t in raw.iter().filter(|t| t.initial_sector == Sector::X.name()) {
        let Some(&p) = pop.get(&t.initial) else { continue };
        let a = p * t.components.channel(laser);
        if a <= 0.0 {
            continue;
        }
        let width = linewidth_class(sol, &graph, &t.final_state);
        if emitters.contains(&t.initial) && a * branching[&t.initial] > NEGLIGIBLE {
            resonances.push(Resonance {
                energy: t.energy,
                initial: t.initial.clone(),
                final_state: t.final_state.clone(),
                terminal: String::new(),
                weight: -a * branching[&t.initial],
                width_uev: width,
            });
        }
        let Some((term, w)) = graph.terminal(&t.final_state) else { continue };
        let Some(b) = branching.iter().find(|(k, _)| k.as_str() == term).map(|(_, b)| *b) else {
            continue;
        };
        let weight = a * w * b;
        if weight <= NEGLIGIBLE {
            continue;
        }
        lines.push(Line {
            energy: t.energy,
            strength: weight,
            width_uev: width,
        });
        resonances.push(Resonance {
            energy: t.energy,
            initial: t.initial.clone(),
            final_state: t.final_state.clone(),
            terminal: term.to_string(),
            weight,
            width_uev: width,
        });
    }
    resonances.sort_by(|a, b| a.energy.total_cmp(&b.energy).then_with(|| a.final_state.cmp(&b.final_state)));
    Ok(PleResult {
        spectrum: Spectrum {
            energies: grid.energies(),
            intensities: broaden_lines(&lines, grid)?,
            config: Some(config),
            monitored_line: Some(line.key()),
        },
        resonances,
    })
}
