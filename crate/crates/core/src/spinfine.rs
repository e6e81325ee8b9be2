//! Effective e-h exchange spin Hamiltonians.
//!
//! Covers the 4×4 single-exciton Hamiltonian over F_z = (1, −1, 2, −2)
//! (spin kets ↓⇑, ↑⇓, ↑⇑, ↓⇓), the 9×9 triplet-triplet biexciton
//! Hamiltonian with its orbital-averaged constants, and the degenerate
//! level schemes of the singlet-containing biexciton subgroups.
//!
//! All energies in this module are µeV relative to the exchange-free
//! multiplet centroid.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};

use crate::basis::{DeltaEntry, ModelParams};
use crate::error::{Error, Result};
use crate::linalg::jacobi_eigen;

/// Dark-exciton splitting used where none is tabulated, µeV. It is
/// believed to be orbit independent.
pub const DEFAULT_DELTA2: f64 = 1.4;

/// The reference triplet-triplet closed forms follow `biexciton_tt_hamiltonian`
/// once their Δ̃₀ is read as half of the matrix's Δ̃₀, with Δ̃₁ and Δ̃₂ unchanged. A single global eigenvalue scale
/// does not exist; see `tt_tabulated_forms`.
pub const TABULATED_DELTA0_SCALE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExchangeConstants {
    pub delta0: f64,
    pub delta1: f64,
    pub delta2: f64,
}

impl ExchangeConstants {
    pub fn new(delta0: f64, delta1: f64, delta2: f64) -> Self {
        ExchangeConstants { delta0, delta1, delta2 }
    }

    pub fn scaled(self, c: f64) -> Self {
        Self::new(self.delta0 * c, self.delta1 * c, self.delta2 * c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FallbackPolicy {
    /// Substitute Δ₀ → Δ₀^{1,1}, Δ₁ → 0, Δ₂ → 1.4 µeV for missing values.
    #[default]
    Documented,
    /// Any missing value is a configuration error.
    Strict,
}

/// Exchange constants per 1-based (Oe, Oh) pair with a fallback policy.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaTable {
    entries: BTreeMap<(usize, usize), DeltaEntry>,
    pub policy: FallbackPolicy,
}

static WARNED: Mutex<BTreeSet<(usize, usize, u8)>> = Mutex::new(BTreeSet::new());

fn warn_once(oe: usize, oh: usize, which: u8, value: f64) {
    let mut seen = WARNED.lock().unwrap_or_else(|e| e.into_inner());
    if seen.insert((oe, oh, which)) {
        log::warn!("delta_table has no delta{which} for pair ({oe},{oh}); using fallback {value} ueV");
    }
}

impl DeltaTable {
    pub fn new(entries: &[DeltaEntry], policy: FallbackPolicy) -> Self {
        DeltaTable {
            entries: entries.iter().map(|e| ((e.oe, e.oh), e.clone())).collect(),
            policy,
        }
    }

    pub fn from_params(params: &ModelParams) -> Self {
        Self::new(&params.delta_table, FallbackPolicy::Documented)
    }

    /// Whether every constant of the pair is tabulated.
    pub fn is_explicit(&self, oe: usize, oh: usize) -> bool {
        self.entries
            .get(&(oe, oh))
            .is_some_and(|e| e.delta0.is_some() && e.delta1.is_some() && e.delta2.is_some())
    }

    pub fn resolve(&self, oe: usize, oh: usize) -> Result<ExchangeConstants> {
        let entry = self.entries.get(&(oe, oh));
        let get = |f: fn(&DeltaEntry) -> Option<f64>| entry.and_then(f);
        let missing = |which: &str| {
            Error::Config(format!("delta_table has no {which} for orbital pair ({oe},{oh})"))
        };
        let strict = self.policy == FallbackPolicy::Strict;
        let delta0 = match get(|e| e.delta0) {
            Some(v) => v,
            None if strict => return Err(missing("delta0")),
            None => {
                let v = self
                    .entries
                    .get(&(1, 1))
                    .and_then(|e| e.delta0)
                    .ok_or_else(|| missing("delta0 (and no (1,1) value to fall back on)"))?;
                warn_once(oe, oh, 0, v);
                v
            }
        };
        let delta1 = match get(|e| e.delta1) {
            Some(v) => v,
            None if strict => return Err(missing("delta1")),
            None => {
                warn_once(oe, oh, 1, 0.0);
                0.0
            }
        };
        let delta2 = match get(|e| e.delta2) {
            Some(v) => v,
            None if strict => return Err(missing("delta2")),
            None => {
                warn_once(oe, oh, 2, DEFAULT_DELTA2);
                DEFAULT_DELTA2
            }
        };
        if delta2.abs() > delta0.abs() {
            log::warn!("pair ({oe},{oh}): |delta2| = {} exceeds |delta0| = {}", delta2.abs(), delta0.abs());
        }
        Ok(ExchangeConstants::new(delta0, delta1, delta2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    Symmetric,
    Antisymmetric,
    Mixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FineLabel {
    /// Short tag, e.g. "B+", "D-", "tt3", "T0".
    pub name: String,
    /// Behaviour under F_z → −F_z.
    pub symmetry: Symmetry,
    /// |F_z| of the dominant basis component, when one exceeds 1/√2 in amplitude
    /// after pairing ±F_z.
    pub abs_fz: Option<u32>,
    pub bright: bool,
}

#[derive(Debug, Clone)]
pub struct FineStructureResult {
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors over `basis_fz`.
    pub eigenvectors: DMatrix<f64>,
    pub labels: Vec<FineLabel>,
    pub basis_fz: Vec<i32>,
}

impl FineStructureResult {
    pub fn by_name(&self, name: &str) -> Option<(f64, DVector<f64>)> {
        let i = self.labels.iter().position(|l| l.name == name)?;
        Some((self.eigenvalues[i], self.eigenvectors.column(i).into_owned()))
    }
}

pub const EXCITON_BASIS_FZ: [i32; 4] = [1, -1, 2, -2];

pub fn exciton_hamiltonian(c: ExchangeConstants) -> DMatrix<f64> {
    let (d0, d1, d2) = (c.delta0, c.delta1, c.delta2);
    DMatrix::from_row_slice(
        4,
        4,
        &[
            d0, d1, 0.0, 0.0, //
            d1, d0, 0.0, 0.0, //
            0.0, 0.0, -d0, d2, //
            0.0, 0.0, d2, -d0,
        ],
    ) * 0.5
}

/// Eigenpairs in fixed order B+, B−, D+, D−, where ± is the sign of the
/// (|F_z⟩ ± |−F_z⟩)/√2 combination.
pub fn exciton_fine_structure(c: ExchangeConstants) -> FineStructureResult {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let vectors = DMatrix::from_column_slice(
        4,
        4,
        &[
            s, s, 0.0, 0.0, //
            s, -s, 0.0, 0.0, //
            0.0, 0.0, s, s, //
            0.0, 0.0, s, -s,
        ],
    );
    let eigenvalues = vec![
        (c.delta0 + c.delta1) / 2.0,
        (c.delta0 - c.delta1) / 2.0,
        (-c.delta0 + c.delta2) / 2.0,
        (-c.delta0 - c.delta2) / 2.0,
    ];
    let label = |name: &str, symmetry, fz, bright| FineLabel {
        name: name.into(),
        symmetry,
        abs_fz: Some(fz),
        bright,
    };
    FineStructureResult {
        eigenvalues,
        eigenvectors: vectors,
        labels: vec![
            label("B+", Symmetry::Symmetric, 1, true),
            label("B-", Symmetry::Antisymmetric, 1, true),
            label("D+", Symmetry::Symmetric, 2, false),
            label("D-", Symmetry::Antisymmetric, 2, false),
        ],
        basis_fz: EXCITON_BASIS_FZ.to_vec(),
    }
}

/// Orbital-averaged constants Δ̃ for the (Oe₁e¹Oe₂e¹)_T(Oh₁h¹Oh₂h¹)_T group.
pub fn biexciton_tt_constants(table: &DeltaTable, oe1: usize, oe2: usize, oh1: usize, oh2: usize) -> Result<ExchangeConstants> {
    let mut sum = ExchangeConstants::default();
    for oe in [oe1, oe2] {
        for oh in [oh1, oh2] {
            let c = table.resolve(oe, oh)?;
            sum.delta0 += c.delta0;
            sum.delta1 += c.delta1;
            sum.delta2 += c.delta2;
        }
    }
    Ok(ExchangeConstants::new(sum.delta0 / 4.0, sum.delta1 / 8.0, sum.delta2 / 8.0))
}

/// Total F_z of the triplet-triplet basis states, in matrix order.
pub const TT_BASIS_FZ: [i32; 9] = [2, -1, -4, 3, 0, -3, 4, 1, -2];

/// (m_e, m_h) triplet projections of the triplet-triplet basis states; the
/// hole projection is in units of 3/2 pseudo-spin pairs, so F_z = m_e + 3 m_h.
pub const TT_BASIS_SPINS: [(i32, i32); 9] = [
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, 1),
    (0, 0),
    (0, -1),
    (1, 1),
    (1, 0),
    (1, -1),
];

pub fn biexciton_tt_hamiltonian(c: ExchangeConstants) -> DMatrix<f64> {
    let (d0, d1, d2) = (c.delta0, c.delta1, c.delta2);
    let mut h = DMatrix::zeros(9, 9);
    let mut set = |fi: i32, fj: i32, v: f64| {
        let i = TT_BASIS_FZ.iter().position(|&f| f == fi).unwrap();
        let j = TT_BASIS_FZ.iter().position(|&f| f == fj).unwrap();
        h[(i, j)] = 0.5 * v;
        h[(j, i)] = 0.5 * v;
    };
    set(2, 2, d0);
    set(-4, -4, -d0);
    set(4, 4, -d0);
    set(-2, -2, d0);
    set(2, 0, d1);
    set(-2, 0, d1);
    set(-1, -3, d1);
    set(1, 3, d1);
    set(-1, 3, d2);
    set(1, -3, d2);
    set(-4, 0, d2);
    set(4, 0, d2);
    h
}

fn flip_partner(basis: &[i32], i: usize) -> usize {
    basis.iter().position(|&f| f == -basis[i]).unwrap()
}

fn classify(basis: &[i32], v: &DVector<f64>) -> (Symmetry, Option<u32>) {
    let flipped = DVector::from_iterator(basis.len(), (0..basis.len()).map(|i| v[flip_partner(basis, i)]));
    let p = v.dot(&flipped);
    let symmetry = if p > 1.0 - 1e-6 {
        Symmetry::Symmetric
    } else if p < -1.0 + 1e-6 {
        Symmetry::Antisymmetric
    } else {
        Symmetry::Mixed
    };
    let mut weights: BTreeMap<u32, f64> = BTreeMap::new();
    for (i, &f) in basis.iter().enumerate() {
        *weights.entry(f.unsigned_abs()).or_default() += v[i] * v[i];
    }
    let abs_fz = weights
        .into_iter()
        .find(|&(_, w)| w >= 0.5 - 1e-6)
        .map(|(f, _)| f);
    (symmetry, abs_fz)
}

/// Numerical eigenpairs of the triplet-triplet Hamiltonian, ascending, tagged tt1…tt9.
pub fn biexciton_tt_eigensystem(c: ExchangeConstants) -> Result<FineStructureResult> {
    let h = biexciton_tt_hamiltonian(c);
    let eig = jacobi_eigen(&h)?;
    let mut vectors = eig.vectors.clone();
    // Resolve degenerate pairs into F_z-flip eigenstates where possible.
    let vals = eig.values.as_slice().to_vec();
    let scale = h.norm().max(1e-300);
    let mut i = 0;
    while i < 9 {
        let mut j = i + 1;
        while j < 9 && (vals[j] - vals[i]).abs() <= 1e-10 * scale {
            j += 1;
        }
        if j - i > 1 {
            symmetrize_block(&TT_BASIS_FZ, &mut vectors, i, j);
        }
        i = j;
    }
    let labels = (0..9)
        .map(|k| {
            let v = vectors.column(k).into_owned();
            let (symmetry, abs_fz) = classify(&TT_BASIS_FZ, &v);
            let bright = TT_BASIS_FZ
                .iter()
                .enumerate()
                .any(|(i, f)| f.abs() < 4 && v[i].abs() > 1e-9);
            FineLabel {
                name: format!("tt{}", k + 1),
                symmetry,
                abs_fz,
                bright,
            }
        })
        .collect();
    Ok(FineStructureResult {
        eigenvalues: vals,
        eigenvectors: vectors,
        labels,
        basis_fz: TT_BASIS_FZ.to_vec(),
    })
}

/// Rotates a degenerate eigenvector block onto eigenvectors of the F_z flip.
fn symmetrize_block(basis: &[i32], vectors: &mut DMatrix<f64>, lo: usize, hi: usize) {
    let n = basis.len();
    let block = vectors.columns(lo, hi - lo).into_owned();
    let p = DMatrix::from_fn(n, n, |i, j| if flip_partner(basis, i) == j { 1.0 } else { 0.0 });
    let reduced = block.transpose() * &p * &block;
    let Ok(e) = jacobi_eigen(&reduced) else { return };
    let rotated = block * e.vectors;
    for k in 0..hi - lo {
        let mut col = rotated.column(k).into_owned();
        let m = col.iamax();
        if col[m] < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(lo + k, &col);
    }
}

/// Real roots of a x³ + b x + c = 0 (no quadratic term), ascending.
pub fn depressed_cubic_roots(a: f64, b: f64, c: f64) -> [f64; 3] {
    let p = b / a;
    let q = c / a;
    let mut roots = if p.abs() < 1e-300 {
        let r = -q.cbrt();
        [r, r, r]
    } else {
        let m = 2.0 * (-p / 3.0).max(0.0).sqrt();
        let arg = if m == 0.0 { 0.0 } else { (3.0 * q / (p * m)).clamp(-1.0, 1.0) };
        let phi = arg.acos() / 3.0;
        [0, 1, 2].map(|k| m * (phi - 2.0 * PI * k as f64 / 3.0).cos())
    };
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let f = a * *r * *r * *r + b * *r + c;
            let d = 3.0 * a * *r * *r + b;
            if d.abs() > 1e-300 {
                *r -= f / d;
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}

/// Reference triplet-triplet closed forms: six explicit eigenvalues followed by the three roots
/// of 2R³ − (2Δ̃₀² + 2Δ̃₁² + Δ̃₂²)R + Δ̃₀(Δ̃₂² − Δ̃₁²) = 0.
pub fn tt_tabulated_forms(c: ExchangeConstants) -> [f64; 9] {
    let (d0, d1, d2) = (c.delta0, c.delta1, c.delta2);
    let r = depressed_cubic_roots(2.0, -(2.0 * d0 * d0 + 2.0 * d1 * d1 + d2 * d2), d0 * (d2 * d2 - d1 * d1));
    [
        -d0,
        -(d1 + d2) / 2.0,
        -(d1 - d2) / 2.0,
        (d1 - d2) / 2.0,
        (d1 + d2) / 2.0,
        d0,
        r[0],
        r[1],
        r[2],
    ]
}

/// Closed-form eigenvalues of `biexciton_tt_hamiltonian` itself, ascending. The three coupled
/// levels of the F_z ∈ {0, ±2, ±4} symmetric block are the roots of
/// 4r³ − (Δ̃₀² + 2Δ̃₁² + 2Δ̃₂²) r + Δ̃₀(Δ̃₂² − Δ̃₁²) = 0.
pub fn tt_closed_form(c: ExchangeConstants) -> [f64; 9] {
    let (d0, d1, d2) = (c.delta0, c.delta1, c.delta2);
    let r = depressed_cubic_roots(4.0, -(d0 * d0 + 2.0 * d1 * d1 + 2.0 * d2 * d2), d0 * (d2 * d2 - d1 * d1));
    let mut out = [
        -d0 / 2.0,
        -(d1 + d2) / 2.0,
        -(d1 - d2) / 2.0,
        (d1 - d2) / 2.0,
        (d1 + d2) / 2.0,
        d0 / 2.0,
        r[0],
        r[1],
        r[2],
    ];
    out.sort_by(f64::total_cmp);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SubgroupKind {
    TripletTriplet,
    SingletTriplet,
    TripletSinglet,
    SingletSinglet,
}

impl SubgroupKind {
    pub fn multiplicity(self) -> usize {
        match self {
            SubgroupKind::TripletTriplet => 9,
            SubgroupKind::SingletTriplet | SubgroupKind::TripletSinglet => 3,
            SubgroupKind::SingletSinglet => 1,
        }
    }
}

/// Level scheme of a singlet-containing subgroup. The e-h exchange averages
/// to zero over a spin singlet, so to first order all members stay at the
/// centroid; the triplet members are returned as T0 and the flip-symmetric
/// (T+) and antisymmetric (T−) combinations of the two stretched states.
///
/// Basis: triplet projections (+1, 0, −1) of the unpaired-triplet species.
pub fn singlet_triplet_levels(kind: SubgroupKind, _c: ExchangeConstants) -> Result<FineStructureResult> {
    match kind {
        SubgroupKind::SingletSinglet => Ok(FineStructureResult {
            eigenvalues: vec![0.0],
            eigenvectors: DMatrix::identity(1, 1),
            labels: vec![FineLabel {
                name: "S".into(),
                symmetry: Symmetry::Symmetric,
                abs_fz: Some(0),
                bright: true,
            }],
            basis_fz: vec![0],
        }),
        SubgroupKind::SingletTriplet | SubgroupKind::TripletSinglet => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let fz = if kind == SubgroupKind::SingletTriplet { 3 } else { 1 };
            let label = |name: &str, symmetry, f| FineLabel {
                name: name.into(),
                symmetry,
                abs_fz: Some(f),
                bright: true,
            };
            Ok(FineStructureResult {
                eigenvalues: vec![0.0; 3],
                eigenvectors: DMatrix::from_column_slice(3, 3, &[0.0, 1.0, 0.0, s, 0.0, s, s, 0.0, -s]),
                labels: vec![
                    label("T0", Symmetry::Symmetric, 0),
                    label("+", Symmetry::Symmetric, fz),
                    label("-", Symmetry::Antisymmetric, fz),
                ],
                basis_fz: vec![fz as i32, 0, -(fz as i32)],
            })
        }
        SubgroupKind::TripletTriplet => Err(Error::Domain(
            "triplet-triplet levels come from biexciton_tt_eigensystem".into(),
        )),
    }
}

/// Centroid energies of the four spin subgroups of a configuration with two
/// unpaired electrons and two unpaired holes, given the same-carrier exchange
/// integrals K_e, K_h ≥ 0 (any units): triplets sit at −K, singlets at +K.
pub fn subgroup_scheme(k_e: f64, k_h: f64) -> [(SubgroupKind, f64); 4] {
    let mut s = [
        (SubgroupKind::TripletTriplet, -k_e - k_h),
        (SubgroupKind::SingletTriplet, k_e - k_h),
        (SubgroupKind::TripletSinglet, -k_e + k_h),
        (SubgroupKind::SingletSinglet, k_e + k_h),
    ];
    s.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    s
}
