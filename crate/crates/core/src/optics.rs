//! Interband dipole transitions between the vacuum, exciton and biexciton
//! sectors, with circular and linear polarization components.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::basis::{eh_overlap, enumerate_orbitals, Carrier, ModelParams};
use crate::ci::config::{apply_string, Sector, SparseVec, Species};
use crate::ci::states::{spin_character, SpinClass};
use crate::error::{Error, Result};
use crate::model::{FineState, Solution};
use crate::units::UEV_PER_MEV;

pub const MERGE_TOLERANCE_UEV: f64 = 5.0;
pub const DEFAULT_MIN_STRENGTH: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Circular {
    /// Carried by ↓⇑ pairs (F_z = +1).
    Plus,
    /// Carried by ↑⇓ pairs (F_z = −1).
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
    #[serde(rename = "σ+")]
    SigmaPlus,
    #[serde(rename = "σ-")]
    SigmaMinus,
    /// A merged pair of nearly degenerate lines.
    #[serde(rename = "U")]
    Unpolarized,
    /// Elliptical: none of the pure channels vanish.
    #[serde(rename = "M")]
    Mixed,
}

impl Polarization {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarization::H => "H",
            Polarization::V => "V",
            Polarization::SigmaPlus => "σ+",
            Polarization::SigmaMinus => "σ-",
            Polarization::Unpolarized => "U",
            Polarization::Mixed => "M",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "H" => Polarization::H,
            "V" => Polarization::V,
            "σ+" | "s+" => Polarization::SigmaPlus,
            "σ-" | "σ−" | "s-" => Polarization::SigmaMinus,
            "U" => Polarization::Unpolarized,
            "M" => Polarization::Mixed,
            _ => return Err(Error::Config(format!("unknown polarization {s:?}"))),
        })
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Relative strengths in each detection channel; H + V = σ+ + σ−.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Strengths {
    pub h: f64,
    pub v: f64,
    pub plus: f64,
    pub minus: f64,
}

impl Strengths {
    pub fn from_amplitudes(a_plus: f64, a_minus: f64) -> Self {
        Strengths {
            h: 0.5 * (a_plus + a_minus).powi(2),
            v: 0.5 * (a_plus - a_minus).powi(2),
            plus: a_plus * a_plus,
            minus: a_minus * a_minus,
        }
    }

    pub fn total(&self) -> f64 {
        self.h + self.v
    }

    /// Strength seen through a polarizer; unpolarized and mixed channels
    /// are not single polarizers and return the total.
    pub fn channel(&self, p: Polarization) -> f64 {
        match p {
            Polarization::H => self.h,
            Polarization::V => self.v,
            Polarization::SigmaPlus => self.plus,
            Polarization::SigmaMinus => self.minus,
            Polarization::Unpolarized | Polarization::Mixed => self.total(),
        }
    }

    fn scaled(&self, s: f64) -> Self {
        Strengths {
            h: self.h * s,
            v: self.v * s,
            plus: self.plus * s,
            minus: self.minus * s,
        }
    }

    pub fn add(&mut self, o: &Strengths) {
        self.h += o.h;
        self.v += o.v;
        self.plus += o.plus;
        self.minus += o.minus;
    }

    fn classify(&self) -> Polarization {
        let tol = 1e-9 * self.total();
        if self.v <= tol {
            Polarization::H
        } else if self.h <= tol {
            Polarization::V
        } else if self.minus <= tol {
            Polarization::SigmaPlus
        } else if self.plus <= tol {
            Polarization::SigmaMinus
        } else {
            Polarization::Mixed
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub initial: String,
    pub final_state: String,
    pub initial_sector: String,
    pub final_sector: String,
    /// Photon energy, meV.
    pub energy: f64,
    pub polarization: Polarization,
    /// Total relative strength (H + V).
    pub strength: f64,
    pub components: Strengths,
    /// CI multiplet index of each end within its sector.
    pub initial_multiplet: usize,
    pub final_multiplet: usize,
    /// Fine-structure states folded into this line, one key per end.
    pub initial_states: Vec<String>,
    pub final_states: Vec<String>,
}

impl Transition {
    pub fn key(&self) -> String {
        format!("{}->{}", self.initial, self.final_state)
    }

    /// True if the line connects `a` and `b` in either direction, matching
    /// either the line labels or any constituent state.
    pub fn connects(&self, a: &str, b: &str) -> bool {
        let has = |label: &str, states: &[String], k: &str| label == k || states.iter().any(|s| s == k);
        (has(&self.initial, &self.initial_states, a) && has(&self.final_state, &self.final_states, b))
            || (has(&self.initial, &self.initial_states, b) && has(&self.final_state, &self.final_states, a))
    }

    /// The same line seen in emission.
    pub fn reversed(&self) -> Transition {
        Transition {
            initial: self.final_state.clone(),
            final_state: self.initial.clone(),
            initial_sector: self.final_sector.clone(),
            final_sector: self.initial_sector.clone(),
            initial_multiplet: self.final_multiplet,
            final_multiplet: self.initial_multiplet,
            initial_states: self.final_states.clone(),
            final_states: self.initial_states.clone(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalogOptions {
    /// Lines weaker than this (relative to the ground bright line) are dropped.
    pub min_strength: f64,
    pub merge_tolerance_uev: f64,
}

impl Default for CatalogOptions {
    fn default() -> Self {
        CatalogOptions {
            min_strength: DEFAULT_MIN_STRENGTH,
            merge_tolerance_uev: MERGE_TOLERANCE_UEV,
        }
    }
}

/// Envelope overlaps ⟨e_a|h_b⟩ with parity-forbidden pairs replaced by the
/// configured floor ε_f.
pub fn overlap_matrix(params: &ModelParams) -> Result<Vec<Vec<f64>>> {
    let es = enumerate_orbitals(params, Carrier::Electron);
    let hs = enumerate_orbitals(params, Carrier::Hole);
    es.iter()
        .map(|e| {
            hs.iter()
                .map(|h| {
                    let forbidden = (e.nx + h.nx) % 2 == 1 || (e.ny + h.ny) % 2 == 1;
                    if forbidden {
                        Ok(params.forbidden_overlap)
                    } else {
                        eh_overlap(e, h, params)
                    }
                })
                .collect()
        })
        .collect()
}

/// P_σ|v⟩: removes one ↓⇑ (σ+) or ↑⇓ (σ−) pair, weighted by the envelope
/// overlap.
pub fn lower_pair(v: &SparseVec, circular: Circular, ov: &[Vec<f64>]) -> SparseVec {
    let (e_spin, h_spin) = match circular {
        Circular::Plus => (0, 1),
        Circular::Minus => (1, 0),
    };
    let mut out = Vec::new();
    for &(cfg, x) in &v.entries {
        for (a, row) in ov.iter().enumerate() {
            for (b, &o) in row.iter().enumerate() {
                if o == 0.0 {
                    continue;
                }
                let ops = [(false, Species::Hole, 2 * b + h_spin), (false, Species::Electron, 2 * a + e_spin)];
                if let Some((t, s)) = apply_string(cfg, &ops) {
                    out.push((t, s * o * x));
                }
            }
        }
    }
    SparseVec::from_unsorted(out)
}

/// ⟨lower|P_σ|upper⟩ for two states one e-h pair apart (either order).
pub fn dipole_element(initial: &FineState, final_state: &FineState, circular: Circular, params: &ModelParams) -> Result<f64> {
    let (lo, hi) = order(initial, final_state)?;
    let ov = overlap_matrix(params)?;
    Ok(lower_pair(&hi.state.amplitudes, circular, &ov).dot(&lo.state.amplitudes))
}

fn order<'a>(a: &'a FineState, b: &'a FineState) -> Result<(&'a FineState, &'a FineState)> {
    let (pa, pb) = (a.state.sector.pairs(), b.state.sector.pairs());
    if pb == pa + 1 {
        Ok((a, b))
    } else if pa == pb + 1 {
        Ok((b, a))
    } else {
        Err(Error::Domain(format!(
            "states {} and {} are not one electron-hole pair apart",
            a.key(),
            b.key()
        )))
    }
}

struct Raw<'a> {
    lower: &'a FineState,
    upper: &'a FineState,
    strengths: Strengths,
}

fn raw_lines<'a>(lower: &[&'a FineState], upper: &'a [FineState], ov: &[Vec<f64>]) -> Vec<Raw<'a>> {
    let mut out = Vec::new();
    for u in upper {
        let plus = lower_pair(&u.state.amplitudes, Circular::Plus, ov);
        let minus = lower_pair(&u.state.amplitudes, Circular::Minus, ov);
        for &l in lower {
            let s = Strengths::from_amplitudes(plus.dot(&l.state.amplitudes), minus.dot(&l.state.amplitudes));
            if s.total() > 0.0 {
                out.push(Raw {
                    lower: l,
                    upper: u,
                    strengths: s,
                });
            }
        }
    }
    out
}

/// Joins fine tags of merged states, e.g. {"D+", "D-"} → "D±".
fn join_keys(states: &[&FineState]) -> String {
    let mut keys: Vec<String> = states.iter().map(|s| s.key()).collect();
    keys.dedup();
    if keys.len() == 1 {
        return keys.remove(0);
    }
    let label = &states[0].state.label;
    let same_label = states.iter().all(|s| &s.state.label == label);
    let fines: Vec<&str> = states.iter().map(|s| s.state.fine.as_str()).collect();
    if same_label {
        let stem = |f: &str| f.trim_end_matches(['+', '-']).to_string();
        let s0 = stem(fines[0]);
        let pm = fines.iter().all(|f| stem(f) == s0 && f.len() == s0.len() + 1)
            && fines.iter().any(|f| f.ends_with('+'))
            && fines.iter().any(|f| f.ends_with('-'));
        let mut uniq: Vec<&str> = fines.clone();
        uniq.sort();
        uniq.dedup();
        let fine = if pm { format!("{s0}±") } else { uniq.join("/") };
        if fine.is_empty() {
            label.clone()
        } else {
            format!("{label}:{fine}")
        }
    } else {
        keys.sort();
        keys.dedup();
        keys.join("/")
    }
}

fn build_line(group: &[&Raw], norm: f64) -> Transition {
    let mut s = Strengths::default();
    for r in group {
        s.add(&r.strengths);
    }
    let s = s.scaled(1.0 / norm);
    let energy = group.iter().map(|r| r.upper.energy() - r.lower.energy()).sum::<f64>() / group.len() as f64;
    let mut lows: Vec<&FineState> = group.iter().map(|r| r.lower).collect();
    let mut ups: Vec<&FineState> = group.iter().map(|r| r.upper).collect();
    let dedup = |v: &mut Vec<&FineState>| {
        v.sort_by_key(|s| s.key());
        v.dedup_by_key(|s| s.key());
    };
    dedup(&mut lows);
    dedup(&mut ups);
    let polarization = if group.len() > 1 { Polarization::Unpolarized } else { s.classify() };
    Transition {
        initial: join_keys(&lows),
        final_state: join_keys(&ups),
        initial_sector: lows[0].state.sector.name().into(),
        final_sector: ups[0].state.sector.name().into(),
        energy,
        polarization,
        strength: s.total(),
        components: s,
        initial_multiplet: lows[0].state.multiplet,
        final_multiplet: ups[0].state.multiplet,
        initial_states: lows.iter().map(|s| s.key()).collect(),
        final_states: ups.iter().map(|s| s.key()).collect(),
    }
}

/// Merges lines closer than the tolerance within each (lower, upper)
/// multiplet pair and normalizes strengths.
fn merge(raw: Vec<Raw>, norm: f64, opts: &CatalogOptions) -> Vec<Transition> {
    let mut groups: BTreeMap<(usize, usize, usize), Vec<&Raw>> = BTreeMap::new();
    for r in &raw {
        let key = (r.lower.state.sector.pairs(), r.lower.state.multiplet, r.upper.state.multiplet);
        groups.entry(key).or_default().push(r);
    }
    let tol = opts.merge_tolerance_uev / UEV_PER_MEV;
    let mut out = Vec::new();
    for (_, mut g) in groups {
        g.sort_by(|a, b| {
            (a.upper.energy() - a.lower.energy())
                .total_cmp(&(b.upper.energy() - b.lower.energy()))
                .then_with(|| a.lower.key().cmp(&b.lower.key()))
                .then_with(|| a.upper.key().cmp(&b.upper.key()))
        });
        let mut start = 0;
        for i in 1..=g.len() {
            let e = |r: &Raw| r.upper.energy() - r.lower.energy();
            if i == g.len() || e(g[i]) - e(g[i - 1]) >= tol {
                let line = build_line(&g[start..i], norm);
                if line.strength >= opts.min_strength {
                    out.push(line);
                }
                start = i;
            }
        }
    }
    out.sort_by(|a, b| {
        a.initial_sector
            .cmp(&b.initial_sector)
            .then(a.energy.total_cmp(&b.energy))
            .then_with(|| a.key().cmp(&b.key()))
    });
    out
}

/// Reference strength: vacuum → ground bright exciton in H.
fn reference(sol: &Solution, ov: &[Vec<f64>]) -> Result<f64> {
    let b = sol
        .x
        .states
        .iter()
        .find(|s| s.state.multiplet == 0 && s.state.fine == "B+")
        .ok_or_else(|| Error::Lookup("ground bright exciton B+".into()))?;
    let a = |c| lower_pair(&b.state.amplitudes, c, ov).dot(&sol.vacuum.state.amplitudes);
    let h = Strengths::from_amplitudes(a(Circular::Plus), a(Circular::Minus)).h;
    if h <= 0.0 {
        return Err(Error::numeric("transition catalog", "ground bright exciton has no H dipole"));
    }
    Ok(h)
}

/// All vacuum↔X and X↔XX lines, in absorption orientation (initial is the
/// lower state).
pub fn transition_catalog(sol: &Solution, opts: &CatalogOptions) -> Result<Vec<Transition>> {
    let ov = overlap_matrix(&sol.params)?;
    let norm = reference(sol, &ov)?;
    let mut raw = raw_lines(&[&sol.vacuum], &sol.x.states, &ov);
    let lows: Vec<&FineState> = sol.x.states.iter().collect();
    raw.extend(raw_lines(&lows, &sol.xx.states, &ov));
    Ok(merge(raw, norm, opts))
}

/// Lowest multiplet of every biexciton spin class other than singlet-singlet:
/// these cannot relax to the ground biexciton without a spin flip.
pub fn metastable_biexcitons(sol: &Solution) -> Result<Vec<usize>> {
    let mut seen: BTreeMap<(SpinClassKey, SpinClassKey), usize> = BTreeMap::new();
    for s in &sol.xx.states {
        let k = s.state.multiplet;
        if seen.values().any(|&v| v == k) {
            continue;
        }
        let (e, h) = spin_character(&s.state, sol.xx.ci.n_orbitals)?;
        let key = (class_key(e), class_key(h));
        if key == (SpinClassKey::Singlet, SpinClassKey::Singlet) || key.0 == SpinClassKey::Other || key.1 == SpinClassKey::Other {
            continue;
        }
        seen.entry(key).or_insert(k);
    }
    let mut out: Vec<usize> = seen.into_values().collect();
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum SpinClassKey {
    Singlet,
    Triplet,
    Other,
}

fn class_key(c: SpinClass) -> SpinClassKey {
    match c {
        SpinClass::Singlet => SpinClassKey::Singlet,
        SpinClass::Triplet(_) | SpinClass::TripletPair(_) => SpinClassKey::Triplet,
        _ => SpinClassKey::Other,
    }
}

/// Emission lines of the spin-blockaded biexcitons, in emission orientation.
pub fn pl_cascade_lines(sol: &Solution, catalog: &[Transition]) -> Result<Vec<Transition>> {
    let meta = metastable_biexcitons(sol)?;
    let mut out: Vec<Transition> = catalog
        .iter()
        .filter(|t| t.final_sector == Sector::XX.name() && meta.contains(&t.final_multiplet))
        .map(Transition::reversed)
        .collect();
    out.sort_by(|a, b| a.energy.total_cmp(&b.energy).then_with(|| a.key().cmp(&b.key())));
    Ok(out)
}
