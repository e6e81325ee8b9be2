//! Slater determinants as occupation bitmasks, and the fermionic operators
//! acting on them.
//!
//! Electron spin-orbital `2a + s` holds orbital `a` (0-based) with spin
//! down (`s = 0`) or up (`s = 1`). Hole spin-orbital `2b + t` holds orbital
//! `b` with pseudo-spin ⇓ (`t = 0`, J_z = −3/2) or ⇑ (`t = 1`, J_z = +3/2).
//! A determinant is `c†…c† h†…h† |0⟩` with electrons before holes and each
//! species in ascending spin-orbital order.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Species {
    Electron,
    Hole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Config {
    pub e: u64,
    pub h: u64,
}

/// Largest supported basis: 2n spin-orbitals must fit a 64-bit mask.
pub const MAX_ORBITALS: usize = 32;

impl Config {
    pub fn new(e: u64, h: u64) -> Self {
        Config { e, h }
    }

    pub fn mask(&self, s: Species) -> u64 {
        match s {
            Species::Electron => self.e,
            Species::Hole => self.h,
        }
    }

    fn with_mask(self, s: Species, m: u64) -> Self {
        match s {
            Species::Electron => Config { e: m, h: self.h },
            Species::Hole => Config { e: self.e, h: m },
        }
    }

    pub fn n_electrons(&self) -> u32 {
        self.e.count_ones()
    }

    pub fn n_holes(&self) -> u32 {
        self.h.count_ones()
    }

    /// Twice the spin projection of a species (pseudo-spin ½ units for holes).
    pub fn two_sz(&self, s: Species) -> i32 {
        let m = self.mask(s);
        let up = (m & 0xAAAA_AAAA_AAAA_AAAA).count_ones() as i32;
        let down = (m & 0x5555_5555_5555_5555).count_ones() as i32;
        up - down
    }

    pub fn occupied(&self, s: Species) -> impl Iterator<Item = usize> {
        let m = self.mask(s);
        (0..64).filter(move |&p| m >> p & 1 == 1)
    }

    /// Occupation number of each spatial orbital, per species.
    pub fn orbital_counts(&self, s: Species, n: usize) -> Vec<u8> {
        let m = self.mask(s);
        (0..n).map(|a| ((m >> (2 * a)) & 3).count_ones() as u8).collect()
    }

    fn sign_before(&self, s: Species, p: usize) -> f64 {
        let below = self.mask(s) & ((1u64 << p) - 1);
        let mut n = below.count_ones();
        if s == Species::Hole {
            n += self.e.count_ones();
        }
        if n % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn annihilate(self, s: Species, p: usize) -> Option<(Config, f64)> {
        let m = self.mask(s);
        if m >> p & 1 == 0 {
            return None;
        }
        let sign = self.sign_before(s, p);
        Some((self.with_mask(s, m & !(1u64 << p)), sign))
    }

    pub fn create(self, s: Species, p: usize) -> Option<(Config, f64)> {
        let m = self.mask(s);
        if m >> p & 1 == 1 {
            return None;
        }
        let sign = self.sign_before(s, p);
        Some((self.with_mask(s, m | (1u64 << p)), sign))
    }

    /// Total (x, y) parity of all occupied orbitals given per-orbital parities.
    pub fn parity(&self, e_par: &[(usize, usize)], h_par: &[(usize, usize)]) -> (usize, usize) {
        let mut px = 0;
        let mut py = 0;
        for p in self.occupied(Species::Electron) {
            px += e_par[p / 2].0;
            py += e_par[p / 2].1;
        }
        for p in self.occupied(Species::Hole) {
            px += h_par[p / 2].0;
            py += h_par[p / 2].1;
        }
        (px % 2, py % 2)
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arrows = |s: Species, spins: [&str; 2]| {
            let mut out = Vec::new();
            for p in self.occupied(s) {
                out.push(format!("{}{}", p / 2 + 1, spins[p % 2]));
            }
            out.join(" ")
        };
        write!(f, "[{} | {}]", arrows(Species::Electron, ["↓", "↑"]), arrows(Species::Hole, ["⇓", "⇑"]))
    }
}

/// Particle content of a many-body sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sector {
    Vacuum,
    X,
    XX,
}

impl Sector {
    pub fn pairs(self) -> usize {
        match self {
            Sector::Vacuum => 0,
            Sector::X => 1,
            Sector::XX => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Sector::Vacuum => "0",
            Sector::X => "X",
            Sector::XX => "XX",
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// All `bits`-wide masks with exactly `k` set bits, ascending.
fn masks_with(bits: usize, k: usize) -> Vec<u64> {
    fn rec(start: usize, bits: usize, k: usize, acc: u64, out: &mut Vec<u64>) {
        if k == 0 {
            out.push(acc);
            return;
        }
        for p in start..=bits - k {
            rec(p + 1, bits, k - 1, acc | 1u64 << p, out);
        }
    }
    let mut out = Vec::new();
    rec(0, bits, k, 0, &mut out);
    out.sort_unstable();
    out
}

/// All determinants of a sector, sorted by (electron mask, hole mask).
pub fn enumerate_configurations(sector: Sector, n_orbitals: usize) -> Result<Vec<Config>> {
    if n_orbitals == 0 || n_orbitals > MAX_ORBITALS {
        return Err(Error::Domain(format!("n_orbitals must be in 1..={MAX_ORBITALS}")));
    }
    if sector == Sector::XX && n_orbitals > 12 {
        return Err(Error::Domain("biexciton enumeration is limited to 12 orbitals".into()));
    }
    let k = sector.pairs();
    let bits = 2 * n_orbitals;
    let masks = masks_with(bits, k);
    let mut out = Vec::with_capacity(masks.len() * masks.len());
    for &e in &masks {
        for &h in &masks {
            out.push(Config { e, h });
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Block key of the CI Hamiltonian: (2S_z^e, 2S_z^h, total x parity, total y parity).
pub type BlockKey = (i32, i32, usize, usize);

/// Sparse many-body vector over determinants, sorted by configuration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVec {
    pub entries: Vec<(Config, f64)>,
}

impl SparseVec {
    pub fn from_map(m: BTreeMap<Config, f64>) -> Self {
        SparseVec {
            entries: m.into_iter().filter(|(_, v)| *v != 0.0).collect(),
        }
    }

    pub fn from_unsorted(mut v: Vec<(Config, f64)>) -> Self {
        v.sort_by_key(|a| a.0);
        let mut out: Vec<(Config, f64)> = Vec::with_capacity(v.len());
        for (c, x) in v {
            match out.last_mut() {
                Some(last) if last.0 == c => last.1 += x,
                _ => out.push((c, x)),
            }
        }
        out.retain(|(_, x)| *x != 0.0);
        SparseVec { entries: out }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|(_, x)| x * x).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        for e in &mut self.entries {
            e.1 *= s;
        }
    }

    pub fn dot(&self, other: &SparseVec) -> f64 {
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        let mut acc = 0.0;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// Σ_k w_k v_k over vectors of one sector.
    pub fn combine(terms: &[(f64, &SparseVec)]) -> SparseVec {
        let mut all = Vec::new();
        for (w, v) in terms {
            if *w == 0.0 {
                continue;
            }
            all.extend(v.entries.iter().map(|(c, x)| (*c, w * x)));
        }
        let mut s = SparseVec::from_unsorted(all);
        s.entries.retain(|(_, x)| x.abs() > 1e-300);
        s
    }
}

/// Applies the operator string (rightmost first) to one determinant.
pub fn apply_string(cfg: Config, ops: &[(bool, Species, usize)]) -> Option<(Config, f64)> {
    let mut c = cfg;
    let mut sign = 1.0;
    for &(creation, s, p) in ops.iter().rev() {
        let (n, sg) = if creation { c.create(s, p)? } else { c.annihilate(s, p)? };
        c = n;
        sign *= sg;
    }
    Some((c, sign))
}

/// Spin raising (`raise = true`) or lowering operator of one species,
/// Σ_a c†_{a↑} c_{a↓} or its adjoint.
pub fn ladder(v: &SparseVec, s: Species, raise: bool, n_orbitals: usize) -> SparseVec {
    let mut out = Vec::new();
    for &(cfg, x) in &v.entries {
        for a in 0..n_orbitals {
            let (from, to) = if raise { (2 * a, 2 * a + 1) } else { (2 * a + 1, 2 * a) };
            if let Some((c, sg)) = apply_string(cfg, &[(true, s, to), (false, s, from)]) {
                out.push((c, sg * x));
            }
        }
    }
    SparseVec::from_unsorted(out)
}

/// Index lookup for a list of configurations.
pub fn index_of(configs: &[Config]) -> HashMap<Config, usize> {
    configs.iter().enumerate().map(|(i, c)| (*c, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_sizes() {
        assert_eq!(enumerate_configurations(Sector::X, 6).unwrap().len(), 144);
        assert_eq!(enumerate_configurations(Sector::XX, 6).unwrap().len(), 4356);
        assert_eq!(enumerate_configurations(Sector::XX, 1).unwrap().len(), 1);
        assert_eq!(enumerate_configurations(Sector::Vacuum, 6).unwrap().len(), 1);
    }

    #[test]
    fn hole_operators_pass_electrons() {
        let c = Config::new(0b1, 0b0);
        let (d, s) = c.create(Species::Hole, 1).unwrap();
        assert_eq!(d, Config::new(0b1, 0b10));
        assert_eq!(s, -1.0);
        let (_, s) = Config::new(0b11, 0).create(Species::Hole, 0).unwrap();
        assert_eq!(s, 1.0);
    }

    #[test]
    fn anticommutation_on_a_determinant() {
        let c = Config::new(0b0101, 0b1);
        let ab = apply_string(c, &[(true, Species::Electron, 1), (true, Species::Electron, 3)]).unwrap();
        let ba = apply_string(c, &[(true, Species::Electron, 3), (true, Species::Electron, 1)]).unwrap();
        assert_eq!(ab.0, ba.0);
        assert_eq!(ab.1, -ba.1);
    }

    #[test]
    fn spin_projection() {
        let c = Config::new(0b0110, 0b0011);
        assert_eq!(c.two_sz(Species::Electron), 0);
        assert_eq!(c.two_sz(Species::Hole), 0);
        assert_eq!(Config::new(0b1010, 0).two_sz(Species::Electron), 2);
    }
}
