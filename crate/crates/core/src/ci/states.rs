//! Diagonalization of the CI Hamiltonian, spin multiplets and labels.
//!
//! H is spin independent, so every eigenstate belongs to a multiplet of
//! (S_e, S_h). Only the block containing one member of every multiplet is
//! diagonalized: (m_e, m_h) = (−½, −½) for excitons and (0, 0) for
//! biexcitons. The remaining members follow from the ladder operators
//! with Condon–Shortley phases.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};

use super::config::{enumerate_configurations, ladder, BlockKey, Config, Sector, SparseVec, Species};
use super::hamiltonian::{assemble_block, CiInputs};
use crate::error::{Error, Result};
use crate::linalg::{dense_eigen, jacobi_eigen};

/// Minimum dominant-group weight for a definite configuration label.
pub const LABEL_PURITY: f64 = 0.5;

const DEGENERACY_TOL: f64 = 1e-8;

/// Spatial occupation numbers per orbital, per species.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occupation {
    pub e: Vec<u8>,
    pub h: Vec<u8>,
}

impl Occupation {
    pub fn of(cfg: &Config, n: usize) -> Self {
        Occupation {
            e: cfg.orbital_counts(Species::Electron, n),
            h: cfg.orbital_counts(Species::Hole, n),
        }
    }

    /// 1-based orbitals holding a single carrier.
    pub fn unpaired(&self, s: Species) -> Vec<usize> {
        let c = if s == Species::Electron { &self.e } else { &self.h };
        c.iter().enumerate().filter(|(_, &k)| k == 1).map(|(i, _)| i + 1).collect()
    }

    /// 1-based orbital list with multiplicity, ascending.
    pub fn orbitals(&self, s: Species) -> Vec<usize> {
        let c = if s == Species::Electron { &self.e } else { &self.h };
        c.iter()
            .enumerate()
            .flat_map(|(i, &k)| std::iter::repeat_n(i + 1, k as usize))
            .collect()
    }
}

/// Per-species spin classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinClass {
    /// A single unpaired-free or doublet species (exciton sector).
    Doublet,
    Singlet,
    /// Triplet with definite projection (m ∈ {0, ±1} for electrons,
    /// {0, ±3} for holes), `None` for superpositions of projections.
    Triplet(Option<i32>),
    /// Equal-weight superposition of the stretched projections ±m.
    TripletPair(i32),
    Mixed,
}

impl SpinClass {
    pub fn subscript(&self) -> String {
        match self {
            SpinClass::Doublet => String::new(),
            SpinClass::Singlet => "S".into(),
            SpinClass::Triplet(Some(0)) => "T0".into(),
            SpinClass::Triplet(Some(m)) => format!("T{m:+}"),
            SpinClass::Triplet(None) => "T".into(),
            SpinClass::TripletPair(m) => format!("T±{m}"),
            SpinClass::Mixed => "mixed".into(),
        }
    }
}

fn sup(k: u8) -> &'static str {
    match k {
        1 => "¹",
        2 => "²",
        _ => "?",
    }
}

fn species_text(counts: &[u8], tag: char) -> String {
    let body: String = counts
        .iter()
        .enumerate()
        .filter(|(_, &k)| k > 0)
        .map(|(i, &k)| format!("{}{}{}", i + 1, tag, sup(k)))
        .collect();
    format!("({body})")
}

/// Configuration label, e.g. "(1e²)(1h¹2h¹)_{T0}". A spin subscript is shown
/// for a species only when it carries two unpaired carriers.
pub fn occupation_label(occ: &Occupation, e: SpinClass, h: SpinClass) -> String {
    let part = |counts: &[u8], tag, spin: SpinClass| {
        let mut s = species_text(counts, tag);
        if counts.iter().filter(|&&k| k == 1).count() == 2 {
            s.push_str(&format!("_{{{}}}", spin.subscript()));
        }
        s
    };
    format!("{}{}", part(&occ.e, 'e', e), part(&occ.h, 'h', h))
}

/// Weight of each spatial occupation group, and the dominant one.
pub fn occupation_weights(v: &SparseVec, n: usize) -> (Occupation, f64, BTreeMap<Occupation, f64>) {
    let mut w: BTreeMap<Occupation, f64> = BTreeMap::new();
    for (c, x) in &v.entries {
        *w.entry(Occupation::of(c, n)).or_default() += x * x;
    }
    let total: f64 = w.values().sum();
    let (occ, best) = w
        .iter()
        .fold(None::<(&Occupation, f64)>, |acc, (o, &x)| match acc {
            Some((_, b)) if b >= x => acc,
            _ => Some((o, x)),
        })
        .map(|(o, x)| (o.clone(), x))
        .unwrap_or((Occupation { e: vec![], h: vec![] }, 0.0));
    (occ, if total > 0.0 { best / total } else { 0.0 }, w)
}

/// ⟨S²⟩ of one species (in units where a triplet gives 2).
pub fn spin_squared(v: &SparseVec, s: Species, n: usize) -> f64 {
    let up = ladder(v, s, true, n);
    let norm = v.norm_sqr();
    let zz: f64 = v
        .entries
        .iter()
        .map(|(c, x)| {
            let m = c.two_sz(s) as f64 / 2.0;
            x * x * (m * m + m)
        })
        .sum();
    (up.norm_sqr() + zz) / norm
}

fn classify_species(v: &SparseVec, s: Species, n: usize) -> SpinClass {
    let s2 = spin_squared(v, s, n);
    let mut projections: BTreeMap<i32, f64> = BTreeMap::new();
    for (c, x) in &v.entries {
        *projections.entry(c.two_sz(s)).or_default() += x * x;
    }
    let unit = if s == Species::Electron { 1 } else { 3 };
    if s2.abs() < 1e-6 {
        SpinClass::Singlet
    } else if (s2 - 2.0).abs() < 1e-6 {
        let present: Vec<i32> = projections.iter().filter(|(_, &w)| w > 1e-10).map(|(&m, _)| m).collect();
        match present.as_slice() {
            [m] => SpinClass::Triplet(Some(m / 2 * unit)),
            _ => SpinClass::Triplet(None),
        }
    } else if (s2 - 0.75).abs() < 1e-6 {
        SpinClass::Doublet
    } else {
        SpinClass::Mixed
    }
}

#[derive(Debug, Clone)]
pub struct ManyBodyState {
    pub sector: Sector,
    pub energy: f64,
    pub amplitudes: SparseVec,
    /// Configuration label; prefixed with "~" when purity is below `LABEL_PURITY`.
    pub label: String,
    pub purity: f64,
    /// Index of the owning multiplet in its `CiSolution`.
    pub multiplet: usize,
    /// Fine-structure tag ("B+", "tt3", "T0", ...); empty for bare CI members.
    pub fine: String,
    /// Twice the spin projections when definite.
    pub two_m_e: Option<i32>,
    pub two_m_h: Option<i32>,
}

impl ManyBodyState {
    /// Unique key: label, plus the fine tag when present.
    pub fn key(&self) -> String {
        if self.fine.is_empty() {
            self.label.clone()
        } else {
            format!("{}:{}", self.label, self.fine)
        }
    }
}

#[derive(Debug, Clone)]
pub struct Member {
    pub two_m_e: i32,
    pub two_m_h: i32,
    pub vector: SparseVec,
}

#[derive(Debug, Clone)]
pub struct Multiplet {
    pub sector: Sector,
    pub energy: f64,
    pub two_s_e: i32,
    pub two_s_h: i32,
    pub occupation: Occupation,
    pub purity: f64,
    /// Unique multiplet label without projection subscripts resolved,
    /// e.g. "(1e¹2e¹)_{T}(1h¹2h¹)_{T}".
    pub name: String,
    pub members: Vec<Member>,
}

impl Multiplet {
    pub fn member(&self, two_m_e: i32, two_m_h: i32) -> Option<&SparseVec> {
        self.members
            .iter()
            .find(|m| m.two_m_e == two_m_e && m.two_m_h == two_m_h)
            .map(|m| &m.vector)
    }

    pub fn spin_classes(&self) -> (SpinClass, SpinClass) {
        let cls = |two_s| match (self.sector, two_s) {
            (Sector::X, _) => SpinClass::Doublet,
            (_, 0) => SpinClass::Singlet,
            _ => SpinClass::Triplet(None),
        };
        (cls(self.two_s_e), cls(self.two_s_h))
    }

    pub fn dimension(&self) -> usize {
        self.members.len()
    }
}

#[derive(Debug, Clone)]
pub struct CiSolution {
    pub sector: Sector,
    pub n_orbitals: usize,
    /// Ascending in energy.
    pub multiplets: Vec<Multiplet>,
}

impl CiSolution {
    pub fn ground_energy(&self) -> f64 {
        self.multiplets[0].energy
    }

    /// Every member of every multiplet as a labeled state, ascending.
    pub fn states(&self) -> Vec<ManyBodyState> {
        let mut out = Vec::new();
        for (k, m) in self.multiplets.iter().enumerate() {
            let (se, sh) = m.spin_classes();
            for mem in &m.members {
                let spin = |cls: SpinClass, two_m: i32, unit: i32| match cls {
                    SpinClass::Triplet(_) => SpinClass::Triplet(Some(two_m / 2 * unit)),
                    c => c,
                };
                let label = state_label(
                    &m.occupation,
                    spin(se, mem.two_m_e, 1),
                    spin(sh, mem.two_m_h, 3),
                    m.purity,
                    &m.name,
                );
                out.push(ManyBodyState {
                    sector: self.sector,
                    energy: m.energy,
                    amplitudes: mem.vector.clone(),
                    label,
                    purity: m.purity,
                    multiplet: k,
                    fine: String::new(),
                    two_m_e: Some(mem.two_m_e),
                    two_m_h: Some(mem.two_m_h),
                });
            }
        }
        out
    }

    pub fn find(&self, name: &str) -> Option<&Multiplet> {
        self.multiplets.iter().find(|m| m.name == name)
    }

    pub fn state_count(&self) -> usize {
        self.multiplets.iter().map(Multiplet::dimension).sum()
    }
}

/// Builds a state label that keeps the multiplet's disambiguation suffix.
pub fn state_label(occ: &Occupation, e: SpinClass, h: SpinClass, purity: f64, multiplet_name: &str) -> String {
    let base = occupation_label(occ, e, h);
    let suffix = multiplet_name.find('#').map(|i| &multiplet_name[i..]).unwrap_or("");
    let prefix = if purity < LABEL_PURITY { "~" } else { "" };
    format!("{prefix}{base}{suffix}")
}

/// Base block of a sector: one member of every multiplet.
fn base_projection(sector: Sector) -> (i32, i32) {
    match sector {
        Sector::Vacuum => (0, 0),
        Sector::X => (-1, -1),
        Sector::XX => (0, 0),
    }
}

pub fn block_key(cfg: &Config, e_par: &[(usize, usize)], h_par: &[(usize, usize)]) -> BlockKey {
    let (px, py) = cfg.parity(e_par, h_par);
    (cfg.two_sz(Species::Electron), cfg.two_sz(Species::Hole), px, py)
}

fn to_sparse(configs: &[Config], col: nalgebra::DVectorView<f64>) -> SparseVec {
    SparseVec {
        entries: configs
            .iter()
            .zip(col.iter())
            .filter(|(_, x)| x.abs() > 1e-15)
            .map(|(c, x)| (*c, *x))
            .collect(),
    }
}

fn symmetrize(mut h: DMatrix<f64>) -> DMatrix<f64> {
    let t = h.transpose();
    h += t;
    h *= 0.5;
    h
}

/// Rotates a degenerate cluster onto eigenvectors of S_e² + 3 S_h² (m = 0 members).
fn resolve_spin_cluster(configs: &[Config], vecs: &mut DMatrix<f64>, lo: usize, hi: usize, n: usize) -> Result<()> {
    let k = hi - lo;
    let sparse: Vec<SparseVec> = (lo..hi).map(|c| to_sparse(configs, vecs.column(c))).collect();
    let up_e: Vec<SparseVec> = sparse.iter().map(|v| ladder(v, Species::Electron, true, n)).collect();
    let up_h: Vec<SparseVec> = sparse.iter().map(|v| ladder(v, Species::Hole, true, n)).collect();
    let m = DMatrix::from_fn(k, k, |i, j| up_e[i].dot(&up_e[j]) + 3.0 * up_h[i].dot(&up_h[j]));
    let e = jacobi_eigen(&symmetrize(m))?;
    let block = vecs.columns(lo, k).into_owned();
    let rotated = block * e.vectors;
    for c in 0..k {
        vecs.set_column(lo + c, &rotated.column(c));
    }
    Ok(())
}

fn two_spin(v: &SparseVec, s: Species, n: usize) -> Result<i32> {
    let s2 = spin_squared(v, s, n);
    // S(S+1) ∈ {0, 3/4, 2}
    for (two_s, val) in [(0, 0.0), (1, 0.75), (2, 2.0)] {
        if (s2 - val).abs() < 1e-6 {
            return Ok(two_s);
        }
    }
    Err(Error::numeric("ci spin resolution", format!("<S²> = {s2} is not a pure spin value")))
}

fn members(base: &SparseVec, sector: Sector, two_s_e: i32, two_s_h: i32, n: usize) -> Vec<Member> {
    // from/to are 2m; the factor √(S(S+1) − m(m±1)) is removed by normalizing.
    let step = |v: &SparseVec, s: Species, from: i32, to: i32| -> SparseVec {
        let mut cur = v.clone();
        let mut m = from;
        while m != to {
            let raise = to > m;
            cur = ladder(&cur, s, raise, n);
            let nrm = cur.norm();
            cur.scale(1.0 / nrm);
            m += if raise { 2 } else { -2 };
        }
        cur
    };
    let (b_e, b_h) = base_projection(sector);
    let proj = |two_s: i32| -> Vec<i32> { (0..=two_s).map(|k| -two_s + 2 * k).collect() };
    let mut out = Vec::new();
    for me in proj(two_s_e).into_iter().rev() {
        for mh in proj(two_s_h).into_iter().rev() {
            let v_e = step(base, Species::Electron, b_e, me);
            let v = step(&v_e, Species::Hole, b_h, mh);
            out.push(Member {
                two_m_e: me,
                two_m_h: mh,
                vector: v,
            });
        }
    }
    out
}

/// Solves a sector by diagonalizing its base spin block, parity block by parity block.
pub fn solve_sector(inp: &CiInputs, sector: Sector) -> Result<CiSolution> {
    let n = inp.n();
    let (e_par, h_par) = inp.parities();
    let (b_e, b_h) = base_projection(sector);
    let mut blocks: BTreeMap<BlockKey, Vec<Config>> = BTreeMap::new();
    for cfg in enumerate_configurations(sector, n)? {
        let key = block_key(&cfg, &e_par, &h_par);
        if key.0 == b_e && key.1 == b_h {
            blocks.entry(key).or_default().push(cfg);
        }
    }
    let mut solved = Vec::with_capacity(blocks.len());
    for (key, configs) in &blocks {
        let h = symmetrize(assemble_block(inp, configs));
        let eig = dense_eigen(&h)?;
        solved.push((key, configs, eig.values.as_slice().to_vec(), eig.vectors));
    }
    let ground = solved
        .iter()
        .flat_map(|s| s.2.first().copied())
        .fold(f64::INFINITY, f64::min);
    let ceiling = inp.window.map_or(f64::INFINITY, |w| ground + w);
    let mut raw: Vec<(f64, BlockKey, usize, SparseVec, i32, i32)> = Vec::new();
    for (key, configs, vals, mut vecs) in solved {
        if sector == Sector::XX {
            let mut i = 0;
            while i < vals.len() && vals[i] <= ceiling + DEGENERACY_TOL {
                let mut j = i + 1;
                while j < vals.len() && (vals[j] - vals[i]).abs() <= DEGENERACY_TOL {
                    j += 1;
                }
                if j - i > 1 {
                    resolve_spin_cluster(configs, &mut vecs, i, j, n)?;
                }
                i = j;
            }
        }
        for (k, &e) in vals.iter().enumerate() {
            if e > ceiling {
                break;
            }
            let mut v = to_sparse(configs, vecs.column(k));
            let nrm = v.norm();
            v.scale(1.0 / nrm);
            let (se, sh) = match sector {
                Sector::Vacuum => (0, 0),
                Sector::X => (1, 1),
                Sector::XX => (two_spin(&v, Species::Electron, n)?, two_spin(&v, Species::Hole, n)?),
            };
            raw.push((e, *key, k, v, se, sh));
        }
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut multiplets = Vec::with_capacity(raw.len());
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (e, _, _, v, se, sh) in raw {
        let (occ, purity, _) = occupation_weights(&v, n);
        let cls = |two_s| match (sector, two_s) {
            (Sector::X, _) => SpinClass::Doublet,
            (_, 0) => SpinClass::Singlet,
            _ => SpinClass::Triplet(None),
        };
        let base_name = occupation_label(&occ, cls(se), cls(sh));
        let count = seen.entry(base_name.clone()).or_insert(0);
        *count += 1;
        let name = if *count == 1 { base_name } else { format!("{base_name}#{count}") };
        let mems = members(&v, sector, se, sh, n);
        multiplets.push(Multiplet {
            sector,
            energy: e,
            two_s_e: se,
            two_s_h: sh,
            occupation: occ,
            purity,
            name,
            members: mems,
        });
    }
    Ok(CiSolution {
        sector,
        n_orbitals: n,
        multiplets,
    })
}

/// Full spectrum of an explicitly assembled matrix over `configs`, ascending,
/// with labels derived from the eigenvectors themselves.
pub fn diagonalize(sector: Sector, n: usize, configs: &[Config], h: &DMatrix<f64>) -> Result<Vec<ManyBodyState>> {
    let eig = dense_eigen(&symmetrize(h.clone()))?;
    let mut out = Vec::with_capacity(configs.len());
    for k in 0..configs.len() {
        let v = to_sparse(configs, eig.vectors.column(k));
        let (occ, purity, _) = occupation_weights(&v, n);
        let (se, sh) = if sector == Sector::XX {
            (classify_species(&v, Species::Electron, n), classify_species(&v, Species::Hole, n))
        } else {
            (SpinClass::Doublet, SpinClass::Doublet)
        };
        let label = state_label(&occ, se, sh, purity, "");
        let proj = |s| {
            let ms: Vec<i32> = v.entries.iter().map(|(c, _)| c.two_sz(s)).collect();
            ms.first().filter(|m| ms.iter().all(|x| x == *m)).copied()
        };
        out.push(ManyBodyState {
            sector,
            energy: eig.values[k],
            label,
            purity,
            multiplet: k,
            fine: String::new(),
            two_m_e: proj(Species::Electron),
            two_m_h: proj(Species::Hole),
            amplitudes: v,
        });
    }
    Ok(out)
}

/// Per-species spin classification of a biexciton state from its amplitudes.
pub fn spin_character(state: &ManyBodyState, n: usize) -> Result<(SpinClass, SpinClass)> {
    if state.sector != Sector::XX {
        return Err(Error::Domain("spin character is defined for biexciton states".into()));
    }
    Ok((
        classify_species(&state.amplitudes, Species::Electron, n),
        classify_species(&state.amplitudes, Species::Hole, n),
    ))
}

/// Dense column of amplitudes over `configs`.
pub fn dense_amplitudes(v: &SparseVec, configs: &[Config]) -> DVector<f64> {
    let idx: HashMap<Config, usize> = configs.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let mut out = DVector::zeros(configs.len());
    for (c, x) in &v.entries {
        if let Some(&i) = idx.get(c) {
            out[i] = *x;
        }
    }
    out
}
