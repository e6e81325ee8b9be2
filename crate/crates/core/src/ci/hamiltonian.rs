//! Many-body Hamiltonian in second quantization:
//!
//! H = Σ ε n + ½ Σ V^ee_{abcd} c†_a c†_b c_d c_c + ½ Σ V^hh_{abcd} h†_a h†_b h_d h_c
//!     − Σ V^eh_{abcd} c†_a h†_b h_d c_c
//!
//! with V_{abcd} = ⟨ab|V|cd⟩ and spin conserved at each vertex. The
//! short-range e-h exchange is not part of H; it enters through the
//! spin Hamiltonians of `spinfine`.

use nalgebra::DMatrix;

use super::config::{apply_string, enumerate_configurations, index_of, Config, Sector, Species};
use crate::basis::{enumerate_orbitals, Carrier, ModelParams, Orbital};
use crate::coulomb::{CoulombTable, PairKind};
use crate::error::{Error, Result};

/// Everything needed to act with H on determinants.
#[derive(Debug, Clone)]
pub struct CiInputs<'a> {
    pub params: &'a ModelParams,
    pub table: &'a CoulombTable,
    pub e_orbitals: Vec<Orbital>,
    pub h_orbitals: Vec<Orbital>,
    /// When false, couplings between different spatial occupations are dropped
    /// (no configuration mixing); spin coupling within an occupation is kept.
    pub mixing: bool,
    /// When set, multiplets more than this many meV above the sector ground
    /// state are dropped from the solution.
    pub window: Option<f64>,
}

impl<'a> CiInputs<'a> {
    pub fn new(params: &'a ModelParams, table: &'a CoulombTable) -> Result<Self> {
        table.check_fingerprint(params)?;
        if table.n_orbitals != params.n_orbitals {
            return Err(Error::Config("coulomb table basis size differs from params".into()));
        }
        Ok(CiInputs {
            params,
            table,
            e_orbitals: enumerate_orbitals(params, Carrier::Electron),
            h_orbitals: enumerate_orbitals(params, Carrier::Hole),
            mixing: true,
            window: None,
        })
    }

    pub fn n(&self) -> usize {
        self.params.n_orbitals
    }

    pub fn parities(&self) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
        (
            self.e_orbitals.iter().map(Orbital::parity).collect(),
            self.h_orbitals.iter().map(Orbital::parity).collect(),
        )
    }

    fn epsilon(&self, s: Species, p: usize) -> f64 {
        match s {
            Species::Electron => self.e_orbitals[p / 2].energy + self.params.band_gap,
            Species::Hole => self.h_orbitals[p / 2].energy,
        }
    }
}

/// Terms of H|cfg⟩ as (target determinant, coefficient); targets may repeat.
pub fn apply_hamiltonian(inp: &CiInputs, cfg: Config) -> Vec<(Config, f64)> {
    let n = inp.n();
    let mut out = Vec::new();
    let diag: f64 = cfg
        .occupied(Species::Electron)
        .map(|p| inp.epsilon(Species::Electron, p))
        .chain(cfg.occupied(Species::Hole).map(|p| inp.epsilon(Species::Hole, p)))
        .sum();
    out.push((cfg, diag));

    for (s, kind) in [(Species::Electron, PairKind::ElectronElectron), (Species::Hole, PairKind::HoleHole)] {
        let occ: Vec<usize> = cfg.occupied(s).collect();
        for &c in &occ {
            for &d in &occ {
                if c == d {
                    continue;
                }
                for a_orb in 0..n {
                    let a = 2 * a_orb + c % 2;
                    for b_orb in 0..n {
                        let b = 2 * b_orb + d % 2;
                        if a == b {
                            continue;
                        }
                        let v = inp.table.get(kind, a_orb, b_orb, c / 2, d / 2);
                        if v == 0.0 {
                            continue;
                        }
                        let ops = [(true, s, a), (true, s, b), (false, s, d), (false, s, c)];
                        if let Some((t, sg)) = apply_string(cfg, &ops) {
                            out.push((t, 0.5 * v * sg));
                        }
                    }
                }
            }
        }
    }

    for c in cfg.occupied(Species::Electron) {
        for d in cfg.occupied(Species::Hole) {
            for a_orb in 0..n {
                let a = 2 * a_orb + c % 2;
                for b_orb in 0..n {
                    let b = 2 * b_orb + d % 2;
                    let v = inp.table.get(PairKind::ElectronHole, a_orb, b_orb, c / 2, d / 2);
                    if v == 0.0 {
                        continue;
                    }
                    let ops = [
                        (true, Species::Electron, a),
                        (true, Species::Hole, b),
                        (false, Species::Hole, d),
                        (false, Species::Electron, c),
                    ];
                    if let Some((t, sg)) = apply_string(cfg, &ops) {
                        out.push((t, -v * sg));
                    }
                }
            }
        }
    }
    if !inp.mixing {
        let n = inp.n();
        let occ = |c: &Config| (c.orbital_counts(Species::Electron, n), c.orbital_counts(Species::Hole, n));
        let own = occ(&cfg);
        out.retain(|(t, _)| occ(t) == own);
    }
    out
}

/// Dense matrix of H over the given determinants. Terms leaving the list are dropped,
/// so the list should be closed under H (a full sector or one symmetry block).
pub fn assemble_block(inp: &CiInputs, configs: &[Config]) -> DMatrix<f64> {
    let index = index_of(configs);
    let mut h = DMatrix::zeros(configs.len(), configs.len());
    for (j, &cfg) in configs.iter().enumerate() {
        for (t, v) in apply_hamiltonian(inp, cfg) {
            if let Some(&i) = index.get(&t) {
                h[(i, j)] += v;
            }
        }
    }
    h
}

/// The full sector Hamiltonian and its determinant basis.
pub fn assemble_hamiltonian(inp: &CiInputs, sector: Sector) -> Result<(Vec<Config>, DMatrix<f64>)> {
    let configs = enumerate_configurations(sector, inp.n())?;
    let h = assemble_block(inp, &configs);
    Ok((configs, h))
}
