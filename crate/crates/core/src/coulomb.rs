//! Two-body Coulomb matrix elements between oscillator orbitals.
//!
//! Each pair density ψ_i ψ_k factorizes into x and y parts of the form
//! P(x) e^{-βx²}. Its Fourier transform is again polynomial times Gaussian,
//! so in polar q-coordinates the radial integral is a Gamma function and
//! only a smooth, π-periodic angular integral remains. That integral is
//! tabulated once per carrier-pair kind by refining a trapezoid rule.

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::basis::{axis_polynomial, enumerate_orbitals, Carrier, ModelParams, Orbital};
use crate::error::{Error, Result};
use crate::poly::{gamma_half, Poly};
use crate::units::COULOMB_CONSTANT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PairKind {
    ElectronElectron,
    HoleHole,
    ElectronHole,
}

impl PairKind {
    pub const ALL: [PairKind; 3] = [PairKind::ElectronElectron, PairKind::HoleHole, PairKind::ElectronHole];

    pub fn carriers(self) -> (Carrier, Carrier) {
        match self {
            PairKind::ElectronElectron => (Carrier::Electron, Carrier::Electron),
            PairKind::HoleHole => (Carrier::Hole, Carrier::Hole),
            PairKind::ElectronHole => (Carrier::Electron, Carrier::Hole),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            PairKind::ElectronElectron => "ee",
            PairKind::HoleHole => "hh",
            PairKind::ElectronHole => "eh",
        }
    }

    fn from_tag(s: &str) -> Option<Self> {
        PairKind::ALL.into_iter().find(|k| k.tag() == s)
    }

    fn like_charges(self) -> bool {
        self != PairKind::ElectronHole
    }
}

impl fmt::Display for PairKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

const MIN_LEVEL_POINTS: usize = 16;
const MAX_REFINEMENTS: usize = 14;
const TARGET_REL_CHANGE: f64 = 1e-13;
const FAIL_REL_CHANGE: f64 = 1e-6;

/// Angular integrals J(m, n) = ∫₀^{2π} cos^m θ sin^n θ Γ((m+n+1)/2) / (2 A(θ)^{(m+n+1)/2}) dθ
/// with A(θ) = α_x cos²θ + α_y sin²θ, for even m, n up to `max_deg`.
#[derive(Debug, Clone)]
struct AngularTable {
    max_deg: usize,
    values: Vec<f64>,
}

impl AngularTable {
    fn build(alpha_x: f64, alpha_y: f64, max_deg: usize, kind: PairKind) -> Result<Self> {
        let half = max_deg / 2 + 1;
        let eval_level = |n_pts: usize, offset: f64| -> Vec<f64> {
            let mut acc = vec![0.0; half * half];
            for j in 0..n_pts {
                let theta = PI * (j as f64 + offset) / n_pts as f64;
                let (s, c) = theta.sin_cos();
                let a = alpha_x * c * c + alpha_y * s * s;
                let (c2, s2) = (c * c, s * s);
                let mut cp = 1.0;
                for mi in 0..half {
                    let mut sp = 1.0;
                    for ni in 0..half {
                        let k = 2 * mi + 2 * ni + 1;
                        acc[mi * half + ni] += cp * sp * gamma_half(k) / (2.0 * a.powf(k as f64 / 2.0));
                        sp *= s2;
                    }
                    cp *= c2;
                }
            }
            acc
        };
        // Trapezoid over one period [0, π); J over [0, 2π) is twice that.
        let mut n_pts = MIN_LEVEL_POINTS;
        let mut sums = eval_level(n_pts, 0.0);
        let mut current: Vec<f64> = sums.iter().map(|s| 2.0 * s * PI / n_pts as f64).collect();
        let mut last_change = f64::INFINITY;
        for _ in 0..MAX_REFINEMENTS {
            let mid = eval_level(n_pts, 0.5);
            for (s, m) in sums.iter_mut().zip(&mid) {
                *s += m;
            }
            n_pts *= 2;
            let next: Vec<f64> = sums.iter().map(|s| 2.0 * s * PI / n_pts as f64).collect();
            last_change = next
                .iter()
                .zip(&current)
                .map(|(a, b)| ((a - b) / a).abs())
                .fold(0.0, f64::max);
            current = next;
            if last_change < TARGET_REL_CHANGE {
                break;
            }
        }
        if last_change > FAIL_REL_CHANGE {
            return Err(Error::numeric(
                format!("coulomb angular quadrature ({kind})"),
                format!(
                    "relative change {last_change:.3e} after {n_pts} points \
                     (alpha_x = {alpha_x}, alpha_y = {alpha_y}, max degree {max_deg})"
                ),
            ));
        }
        Ok(AngularTable {
            max_deg,
            values: current,
        })
    }

    fn get(&self, m: usize, n: usize) -> f64 {
        debug_assert!(m % 2 == 0 && n % 2 == 0 && m <= self.max_deg && n <= self.max_deg);
        let half = self.max_deg / 2 + 1;
        self.values[(m / 2) * half + n / 2]
    }
}

/// m_{k+1}(q) = q m_k / (2β) − m_k'(q), m_0 = 1.
fn fourier_monomials(max_k: usize, beta: f64) -> Vec<Poly> {
    let mut out = vec![Poly::constant(1.0)];
    for k in 0..max_k {
        let m = &out[k];
        let mut next = vec![0.0; m.0.len() + 1];
        for (p, c) in m.0.iter().enumerate() {
            next[p + 1] += c / (2.0 * beta);
            if p > 0 {
                next[p - 1] -= p as f64 * c;
            }
        }
        out.push(Poly(next));
    }
    out
}

/// Real reduced Fourier polynomial R(q) of the 1D density P(x) e^{-βx²} with parity s.
fn reduced_transform(p: &Poly, beta: f64, s: usize) -> Poly {
    let ms = fourier_monomials(p.degree(), beta);
    let mut out = vec![0.0; p.0.len()];
    for (k, ck) in p.0.iter().enumerate() {
        if (k + s) % 2 == 1 || *ck == 0.0 {
            continue;
        }
        let sign = if ((k - s) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        for (j, mj) in ms[k].0.iter().enumerate() {
            out[j] += sign * ck * mj;
        }
    }
    Poly(out)
}

struct AxisDensity {
    poly: Poly,
    beta: f64,
    parity: usize,
}

fn axis_density(n1: usize, n2: usize, l: f64) -> AxisDensity {
    let poly = axis_polynomial(n1, l).mul(&axis_polynomial(n2, l));
    AxisDensity {
        poly,
        beta: 1.0 / (l * l),
        parity: (n1 + n2) % 2,
    }
}

/// Precomputed per-kind data sufficient to evaluate any element quickly.
struct KindEvaluator {
    kind: PairKind,
    l1: (f64, f64),
    l2: (f64, f64),
    angular: AngularTable,
    prefactor: f64,
}

impl KindEvaluator {
    fn new(kind: PairKind, params: &ModelParams, max_n: usize) -> Result<Self> {
        let (c1, c2) = kind.carriers();
        let l1 = params.lengths(c1);
        let l2 = params.lengths(c2);
        let alpha_x = (l1.0 * l1.0 + l2.0 * l2.0) / 4.0;
        let alpha_y = (l1.1 * l1.1 + l2.1 * l2.1) / 4.0;
        let angular = AngularTable::build(alpha_x, alpha_y, 4 * max_n, kind)?;
        Ok(KindEvaluator {
            kind,
            l1,
            l2,
            angular,
            prefactor: COULOMB_CONSTANT / params.eps_r / (2.0 * PI),
        })
    }

    fn axis_kernel(d1: &AxisDensity, d2: &AxisDensity) -> (Poly, f64) {
        let r1 = reduced_transform(&d1.poly, d1.beta, d1.parity);
        let r2 = reduced_transform(&d2.poly, d2.beta, d2.parity);
        (r1.mul(&r2), PI / (d1.beta * d2.beta).sqrt())
    }

    fn element(&self, i: (usize, usize), j: (usize, usize), k: (usize, usize), l: (usize, usize)) -> f64 {
        if (i.0 + j.0 + k.0 + l.0) % 2 == 1 || (i.1 + j.1 + k.1 + l.1) % 2 == 1 {
            return 0.0;
        }
        let (gx, cx) = Self::axis_kernel(&axis_density(i.0, k.0, self.l1.0), &axis_density(j.0, l.0, self.l2.0));
        let (gy, cy) = Self::axis_kernel(&axis_density(i.1, k.1, self.l1.1), &axis_density(j.1, l.1, self.l2.1));
        let mut sum = 0.0;
        for (m, am) in gx.0.iter().enumerate() {
            if m % 2 == 1 || *am == 0.0 {
                continue;
            }
            for (n, bn) in gy.0.iter().enumerate() {
                if n % 2 == 1 || *bn == 0.0 {
                    continue;
                }
                sum += am * bn * self.angular.get(m, n);
            }
        }
        self.prefactor * cx * cy * sum
    }
}

fn max_quantum_number(params: &ModelParams) -> usize {
    [Carrier::Electron, Carrier::Hole]
        .into_iter()
        .flat_map(|c| enumerate_orbitals(params, c))
        .map(|o| o.nx.max(o.ny))
        .max()
        .unwrap_or(0)
}

fn pair_kind(a: Carrier, b: Carrier) -> Result<PairKind> {
    match (a, b) {
        (Carrier::Electron, Carrier::Electron) => Ok(PairKind::ElectronElectron),
        (Carrier::Hole, Carrier::Hole) => Ok(PairKind::HoleHole),
        (Carrier::Electron, Carrier::Hole) => Ok(PairKind::ElectronHole),
        (Carrier::Hole, Carrier::Electron) => Err(Error::Domain(
            "particle 1 must be the electron in mixed-carrier elements".into(),
        )),
    }
}

/// ⟨ij|V|kl⟩ = ∫∫ ψ_i(r₁) ψ_j(r₂) K/|r₁ − r₂| ψ_k(r₁) ψ_l(r₂), meV.
///
/// `i` and `k` belong to particle 1, `j` and `l` to particle 2.
pub fn coulomb_element(i: &Orbital, j: &Orbital, k: &Orbital, l: &Orbital, params: &ModelParams) -> Result<f64> {
    if i.carrier != k.carrier || j.carrier != l.carrier {
        return Err(Error::Domain(
            "coulomb element needs i, k and j, l to share a carrier".into(),
        ));
    }
    let basis_e = enumerate_orbitals(params, Carrier::Electron);
    let basis_h = enumerate_orbitals(params, Carrier::Hole);
    for o in [i, j, k, l] {
        let basis = if o.carrier == Carrier::Electron { &basis_e } else { &basis_h };
        let found = o.index >= 1 && o.index <= basis.len() && {
            let b = &basis[o.index - 1];
            b.nx == o.nx && b.ny == o.ny
        };
        if !found {
            return Err(Error::Domain(format!("orbital {o} ({}, {}) not in basis", o.nx, o.ny)));
        }
    }
    let kind = pair_kind(i.carrier, j.carrier)?;
    let max_n = [i, j, k, l].iter().map(|o| o.nx.max(o.ny)).max().unwrap();
    let ev = KindEvaluator::new(kind, params, max_n)?;
    Ok(ev.element((i.nx, i.ny), (j.nx, j.ny), (k.nx, k.ny), (l.nx, l.ny)))
}

/// All Coulomb elements over the orbital basis, stored densely per kind and
/// indexed by 0-based orbital rank.
#[derive(Debug, Clone, PartialEq)]
pub struct CoulombTable {
    pub n_orbitals: usize,
    pub params_fingerprint: String,
    ee: Vec<f64>,
    hh: Vec<f64>,
    eh: Vec<f64>,
}

/// Canonical (i, j, k, l) representative of the symmetry class of an element.
pub fn canonical_indices(kind: PairKind, i: usize, j: usize, k: usize, l: usize) -> (usize, usize, usize, usize) {
    let p1 = (i.min(k), i.max(k));
    let p2 = (j.min(l), j.max(l));
    let (p1, p2) = if kind.like_charges() && p2 < p1 { (p2, p1) } else { (p1, p2) };
    (p1.0, p2.0, p1.1, p2.1)
}

/// Canonical representatives of every symmetry class, in ascending order.
pub fn symmetry_classes(kind: PairKind, n: usize) -> Vec<(usize, usize, usize, usize)> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect();
    let mut out = Vec::new();
    for (x, p1) in pairs.iter().enumerate() {
        for p2 in pairs.iter().skip(if kind.like_charges() { x } else { 0 }) {
            out.push((p1.0, p2.0, p1.1, p2.1));
        }
    }
    out.sort_unstable();
    out
}

impl CoulombTable {
    fn index(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        let n = self.n_orbitals;
        ((i * n + j) * n + k) * n + l
    }

    fn store_mut(&mut self, kind: PairKind) -> &mut Vec<f64> {
        match kind {
            PairKind::ElectronElectron => &mut self.ee,
            PairKind::HoleHole => &mut self.hh,
            PairKind::ElectronHole => &mut self.eh,
        }
    }

    fn store(&self, kind: PairKind) -> &[f64] {
        match kind {
            PairKind::ElectronElectron => &self.ee,
            PairKind::HoleHole => &self.hh,
            PairKind::ElectronHole => &self.eh,
        }
    }

    /// ⟨ij|V|kl⟩ with 0-based orbital ranks; for `ElectronHole` particle 1 is the electron.
    #[inline]
    pub fn get(&self, kind: PairKind, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.store(kind)[self.index(i, j, k, l)]
    }

    fn empty(n: usize, fingerprint: String) -> Self {
        let size = n * n * n * n;
        CoulombTable {
            n_orbitals: n,
            params_fingerprint: fingerprint,
            ee: vec![f64::NAN; size],
            hh: vec![f64::NAN; size],
            eh: vec![f64::NAN; size],
        }
    }

    fn fill_class(&mut self, kind: PairKind, (i, j, k, l): (usize, usize, usize, usize), v: f64) {
        let mut images = vec![(i, j, k, l), (k, j, i, l), (i, l, k, j), (k, l, i, j)];
        if kind.like_charges() {
            let swapped: Vec<_> = images.iter().map(|&(a, b, c, d)| (b, a, d, c)).collect();
            images.extend(swapped);
        }
        for (a, b, c, d) in images {
            let idx = self.index(a, b, c, d);
            self.store_mut(kind)[idx] = v;
        }
    }

    /// Number of distinct symmetry classes held.
    pub fn class_count(&self) -> usize {
        PairKind::ALL
            .iter()
            .map(|&k| symmetry_classes(k, self.n_orbitals).len())
            .sum()
    }

    pub fn check_fingerprint(&self, params: &ModelParams) -> Result<()> {
        let expected = params.fingerprint();
        if expected != self.params_fingerprint {
            return Err(Error::Stale {
                expected,
                found: self.params_fingerprint.clone(),
            });
        }
        Ok(())
    }

    /// Writes the class representatives as CSV, preceded by a fingerprint comment line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# fingerprint={}", self.params_fingerprint).map_err(|e| Error::io("<coulomb csv>", e))?;
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["kind", "i", "j", "k", "l", "value_meV"])?;
        for kind in PairKind::ALL {
            for (i, j, k, l) in symmetry_classes(kind, self.n_orbitals) {
                let v = self.get(kind, i, j, k, l);
                wtr.write_record([
                    kind.tag().to_string(),
                    (i + 1).to_string(),
                    (j + 1).to_string(),
                    (k + 1).to_string(),
                    (l + 1).to_string(),
                    format!("{v}"),
                ])?;
            }
        }
        wtr.flush().map_err(|e| Error::io("<coulomb csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut r: R) -> Result<Self> {
        let mut first = String::new();
        r.read_line(&mut first).map_err(|e| Error::io("<coulomb csv>", e))?;
        let fingerprint = first
            .trim()
            .strip_prefix("# fingerprint=")
            .ok_or_else(|| Error::Config("coulomb csv lacks a fingerprint line".into()))?
            .to_string();
        let mut rdr = csv::Reader::from_reader(r);
        let mut rows = Vec::new();
        let mut n = 0;
        for rec in rdr.records() {
            let rec = rec?;
            let bad = || Error::Config(format!("malformed coulomb csv row: {rec:?}"));
            let kind = PairKind::from_tag(rec.get(0).unwrap_or("")).ok_or_else(bad)?;
            let mut idx = [0usize; 4];
            for (t, slot) in idx.iter_mut().enumerate() {
                let v: usize = rec.get(t + 1).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                if v == 0 {
                    return Err(bad());
                }
                *slot = v - 1;
                n = n.max(v);
            }
            let value: f64 = rec.get(5).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            rows.push((kind, idx, value));
        }
        let mut table = CoulombTable::empty(n, fingerprint);
        for (kind, [i, j, k, l], v) in rows {
            table.fill_class(kind, (i, j, k, l), v);
        }
        if table.ee.iter().chain(&table.hh).chain(&table.eh).any(|v| v.is_nan()) {
            return Err(Error::Config("coulomb csv is missing symmetry classes".into()));
        }
        Ok(table)
    }

    /// Loads a cached table, failing with a staleness error if it was built from other params.
    pub fn load(path: &Path, params: &ModelParams) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let table = Self::read_csv(std::io::BufReader::new(f))?;
        table.check_fingerprint(params)?;
        if table.n_orbitals != params.n_orbitals {
            return Err(Error::Config("cached coulomb table has the wrong basis size".into()));
        }
        Ok(table)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// Computes every symmetry class once and expands it into the dense tables.
pub fn build_coulomb_table(params: &ModelParams) -> Result<CoulombTable> {
    params.validate()?;
    let n = params.n_orbitals;
    let max_n = max_quantum_number(params);
    let qn_e: Vec<(usize, usize)> = enumerate_orbitals(params, Carrier::Electron).iter().map(|o| (o.nx, o.ny)).collect();
    let qn_h: Vec<(usize, usize)> = enumerate_orbitals(params, Carrier::Hole).iter().map(|o| (o.nx, o.ny)).collect();
    let mut table = CoulombTable::empty(n, params.fingerprint());
    for kind in PairKind::ALL {
        let ev = KindEvaluator::new(kind, params, max_n)?;
        let (q1, q2) = match ev.kind {
            PairKind::ElectronElectron => (&qn_e, &qn_e),
            PairKind::HoleHole => (&qn_h, &qn_h),
            PairKind::ElectronHole => (&qn_e, &qn_h),
        };
        for (i, j, k, l) in symmetry_classes(kind, n) {
            let v = ev.element(q1[i], q2[j], q1[k], q2[l]);
            table.fill_class(kind, (i, j, k, l), v);
        }
    }
    Ok(table)
}

/// Returns the cached table at `path` if it matches `params`, otherwise rebuilds and rewrites it.
pub fn load_or_build(path: &Path, params: &ModelParams) -> Result<CoulombTable> {
    if path.exists() {
        match CoulombTable::load(path, params) {
            Ok(t) => return Ok(t),
            Err(e) => log::info!("rebuilding coulomb cache {}: {e}", path.display()),
        }
    }
    let table = build_coulomb_table(params)?;
    table.save(path)?;
    Ok(table)
}
