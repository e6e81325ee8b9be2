//! Single-particle orbitals of the 2D anisotropic parabolic confinement.
//!
//! Each carrier sees an oscillator whose characteristic lengths are
//! `l_x` along the major axis and `l_y = xi * l_x` along the minor one.
//! Orbitals are products of 1D Hermite functions and are ranked by energy.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::poly::{factorial, hermite, hermite_value, Poly};
use crate::units::HBAR2_OVER_M0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Carrier {
    Electron,
    Hole,
}

impl Carrier {
    pub fn tag(self) -> char {
        match self {
            Carrier::Electron => 'e',
            Carrier::Hole => 'h',
        }
    }
}

/// Measured exchange constants for one (Oe, Oh) orbital pair, µeV.
/// Absent values are resolved by the fallback policy in `spinfine`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaEntry {
    pub oe: usize,
    pub oh: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta2: Option<f64>,
}

impl DeltaEntry {
    fn new(oe: usize, oh: usize, d0: Option<f64>, d1: Option<f64>, d2: Option<f64>) -> Self {
        DeltaEntry {
            oe,
            oh,
            delta0: d0,
            delta1: d1,
            delta2: d2,
        }
    }
}

/// All physical inputs of the model. Masses in m₀, lengths in Å,
/// exchange constants in µeV, energies in meV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    pub m_perp_h: f64,
    pub m_e: f64,
    pub l_h_x: f64,
    pub l_e_x: f64,
    pub xi: f64,
    pub eps_r: f64,
    pub delta_table: Vec<DeltaEntry>,
    pub n_orbitals: usize,
    /// Independent minor-axis lengths; when set they override `xi * l_x`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_e_y: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_h_y: Option<f64>,
    /// Overlap substituted for parity-forbidden e-h pairs (0 keeps them dark).
    pub forbidden_overlap: f64,
    /// Constant added to every e-h pair energy, meV.
    pub band_gap: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            m_perp_h: 0.25,
            m_e: 0.065,
            l_h_x: 53.0,
            l_e_x: 74.0,
            xi: 0.87,
            eps_r: 12.9,
            delta_table: vec![
                DeltaEntry::new(1, 1, Some(123.0), Some(-34.0), Some(1.4)),
                DeltaEntry::new(1, 2, Some(200.0), Some(151.0), None),
                DeltaEntry::new(2, 1, None, Some(60.0), None),
                DeltaEntry::new(2, 2, None, Some(60.0), None),
            ],
            n_orbitals: 6,
            l_e_y: None,
            l_h_y: None,
            forbidden_overlap: 0.0,
            band_gap: 0.0,
        }
    }
}

impl ModelParams {
    pub fn from_json(text: &str) -> Result<Self> {
        let p: ModelParams = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("params serialize")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("m_perp_h", self.m_perp_h),
            ("m_e", self.m_e),
            ("l_h_x", self.l_h_x),
            ("l_e_x", self.l_e_x),
            ("eps_r", self.eps_r),
            ("l_e_y", self.l_e_y.unwrap_or(1.0)),
            ("l_h_y", self.l_h_y.unwrap_or(1.0)),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.xi > 0.0 && self.xi <= 1.0) {
            return Err(Error::Config(format!("xi must lie in (0, 1], got {}", self.xi)));
        }
        if self.n_orbitals == 0 {
            return Err(Error::Config("n_orbitals must be at least 1".into()));
        }
        if !self.forbidden_overlap.is_finite() || !self.band_gap.is_finite() {
            return Err(Error::Config("forbidden_overlap and band_gap must be finite".into()));
        }
        for d in &self.delta_table {
            if d.oe == 0 || d.oh == 0 {
                return Err(Error::Config("delta_table orbital indices are 1-based".into()));
            }
        }
        Ok(())
    }

    pub fn mass(&self, c: Carrier) -> f64 {
        match c {
            Carrier::Electron => self.m_e,
            Carrier::Hole => self.m_perp_h,
        }
    }

    pub fn lengths(&self, c: Carrier) -> (f64, f64) {
        match c {
            Carrier::Electron => (self.l_e_x, self.l_e_y.unwrap_or(self.xi * self.l_e_x)),
            Carrier::Hole => (self.l_h_x, self.l_h_y.unwrap_or(self.xi * self.l_h_x)),
        }
    }

    /// Hex SHA-256 of the canonical JSON serialization.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_string(self).expect("params serialize");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Orbital {
    pub carrier: Carrier,
    pub nx: usize,
    pub ny: usize,
    /// 1-based energy rank within the carrier.
    pub index: usize,
    /// Single-particle energy, meV.
    pub energy: f64,
}

impl Orbital {
    pub fn parity(&self) -> (usize, usize) {
        (self.nx % 2, self.ny % 2)
    }
}

impl fmt::Display for Orbital {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.index, self.carrier.tag())
    }
}

/// (ħω_x, ħω_y) in meV.
pub fn level_spacing(params: &ModelParams, carrier: Carrier) -> (f64, f64) {
    let m = params.mass(carrier);
    let (lx, ly) = params.lengths(carrier);
    (HBAR2_OVER_M0 / (m * lx * lx), HBAR2_OVER_M0 / (m * ly * ly))
}

fn energy_order(a: &Orbital, b: &Orbital) -> Ordering {
    let scale = a.energy.abs().max(b.energy.abs());
    if (a.energy - b.energy).abs() <= 1e-10 * scale {
        b.nx.cmp(&a.nx)
    } else {
        a.energy.total_cmp(&b.energy)
    }
}

/// The `n_orbitals` lowest modes by ascending energy; degenerate modes
/// are ordered by descending `nx`.
pub fn enumerate_orbitals(params: &ModelParams, carrier: Carrier) -> Vec<Orbital> {
    let n = params.n_orbitals;
    let (wx, wy) = level_spacing(params, carrier);
    let mut all: Vec<Orbital> = (0..n)
        .flat_map(|nx| (0..n).map(move |ny| (nx, ny)))
        .map(|(nx, ny)| Orbital {
            carrier,
            nx,
            ny,
            index: 0,
            energy: wx * (nx as f64 + 0.5) + wy * (ny as f64 + 0.5),
        })
        .collect();
    all.sort_by(energy_order);
    all.truncate(n);
    for (i, o) in all.iter_mut().enumerate() {
        o.index = i + 1;
    }
    all
}

fn check_in_basis(orbital: &Orbital, params: &ModelParams) -> Result<()> {
    let basis = enumerate_orbitals(params, orbital.carrier);
    let ok = orbital.index >= 1
        && orbital.index <= basis.len()
        && basis[orbital.index - 1].nx == orbital.nx
        && basis[orbital.index - 1].ny == orbital.ny;
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "orbital ({}, {}) with index {} is not in the {}-mode {} basis",
            orbital.nx,
            orbital.ny,
            orbital.index,
            params.n_orbitals,
            orbital.carrier.tag()
        )))
    }
}

fn hermite_norm(n: usize, l: f64) -> f64 {
    1.0 / (2f64.powi(n as i32) * factorial(n) * PI.sqrt() * l).sqrt()
}

/// 1D Hermite function φ_n(x; l) = p(x) e^{-x²/2l²}; returns p as a polynomial in x.
pub fn axis_polynomial(n: usize, l: f64) -> Poly {
    hermite(n).rescale(l).scale(hermite_norm(n, l))
}

pub fn axis_function(n: usize, l: f64, x: f64) -> f64 {
    let t = x / l;
    hermite_norm(n, l) * hermite_value(n, t) * (-0.5 * t * t).exp()
}

/// ψ_{nx,ny}(x, y), normalized over the plane.
pub fn orbital_wavefunction(orbital: &Orbital, params: &ModelParams, x: f64, y: f64) -> Result<f64> {
    check_in_basis(orbital, params)?;
    let (lx, ly) = params.lengths(orbital.carrier);
    Ok(axis_function(orbital.nx, lx, x) * axis_function(orbital.ny, ly, y))
}

fn axis_overlap(n1: usize, l1: f64, n2: usize, l2: f64) -> f64 {
    if (n1 + n2) % 2 == 1 {
        return 0.0;
    }
    let beta = 0.5 / (l1 * l1) + 0.5 / (l2 * l2);
    axis_polynomial(n1, l1)
        .mul(&axis_polynomial(n2, l2))
        .gaussian_integral(beta)
}

/// ∫∫ ψ_e ψ_h dx dy, evaluated analytically. Exactly zero when either
/// axis parity differs.
pub fn eh_overlap(orbital_e: &Orbital, orbital_h: &Orbital, params: &ModelParams) -> Result<f64> {
    check_in_basis(orbital_e, params)?;
    check_in_basis(orbital_h, params)?;
    Ok(raw_overlap(orbital_e, orbital_h, params))
}

/// Overlap of any two orbitals (same or different carrier) without basis checks.
pub(crate) fn raw_overlap(a: &Orbital, b: &Orbital, params: &ModelParams) -> f64 {
    let (ax, ay) = params.lengths(a.carrier);
    let (bx, by) = params.lengths(b.carrier);
    axis_overlap(a.nx, ax, b.nx, bx) * axis_overlap(a.ny, ay, b.ny, by)
}
