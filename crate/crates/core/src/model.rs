//! Full model solve: orbitals, Coulomb table, CI for each sector, and the
//! fine-structure splitting of every CI multiplet.
//!
//! The CI supplies spin-degenerate multiplets. Each multiplet then receives
//! the splitting of its spin Hamiltonian, added onto its centroid:
//! excitons use the 4×4 Hamiltonian with Δ^{Oe,Oh} of their dominant
//! configuration, triplet-triplet biexcitons the 9×9 Hamiltonian with the
//! averaged Δ̃, and singlet-containing biexcitons stay degenerate.

use std::collections::BTreeMap;

use crate::basis::ModelParams;
use crate::ci::config::{Config, Sector, SparseVec, Species};
use crate::ci::states::{occupation_weights, state_label, CiSolution, ManyBodyState, Multiplet, Occupation, SpinClass};
use crate::ci::{solve_sector, CiInputs};
use crate::coulomb::{build_coulomb_table, CoulombTable};
use crate::error::{Error, Result};
use crate::spinfine::{
    biexciton_tt_constants, biexciton_tt_eigensystem, exciton_fine_structure, singlet_triplet_levels, DeltaTable,
    FallbackPolicy, FineStructureResult, SubgroupKind, TT_BASIS_SPINS,
};
use crate::units::UEV_PER_MEV;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Keep off-diagonal CI couplings.
    pub mixing: bool,
    pub fallback: FallbackPolicy,
    /// Only multiplets within this many meV of the sector ground state are
    /// kept.
    pub window: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            mixing: true,
            fallback: FallbackPolicy::Documented,
            window: 60.0,
        }
    }
}

/// A fine-structure eigenstate together with its spin bookkeeping.
#[derive(Debug, Clone)]
pub struct FineState {
    pub state: ManyBodyState,
    /// (2S_e, 2S_h) of the owning multiplet.
    pub spin: (i32, i32),
    /// Coefficients over the multiplet members, keyed by (2m_e, 2m_h).
    pub spin_vector: BTreeMap<(i32, i32), f64>,
    /// Fine-structure offset, µeV.
    pub offset: f64,
}

impl FineState {
    pub fn key(&self) -> String {
        self.state.key()
    }

    pub fn energy(&self) -> f64 {
        self.state.energy
    }
}

#[derive(Debug, Clone)]
pub struct SectorLevels {
    pub ci: CiSolution,
    /// Fine-structure states, ascending in energy.
    pub states: Vec<FineState>,
}

impl SectorLevels {
    pub fn find(&self, key: &str) -> Option<&FineState> {
        self.states.iter().find(|s| s.key() == key)
    }

    pub fn ground(&self) -> &FineState {
        &self.states[0]
    }

    pub fn multiplet_of(&self, s: &FineState) -> &Multiplet {
        &self.ci.multiplets[s.state.multiplet]
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub params: ModelParams,
    pub fingerprint: String,
    pub table: CoulombTable,
    pub vacuum: FineState,
    pub x: SectorLevels,
    pub xx: SectorLevels,
}

impl Solution {
    pub fn sector(&self, s: Sector) -> Option<&SectorLevels> {
        match s {
            Sector::X => Some(&self.x),
            Sector::XX => Some(&self.xx),
            Sector::Vacuum => None,
        }
    }

    /// Looks a state up by key in any sector ("0" is the empty dot).
    pub fn find(&self, key: &str) -> Option<&FineState> {
        if key == self.vacuum.key() {
            return Some(&self.vacuum);
        }
        self.x.find(key).or_else(|| self.xx.find(key))
    }
}

pub fn solve(params: &ModelParams, opts: &SolveOptions) -> Result<Solution> {
    params.validate()?;
    let table = build_coulomb_table(params)?;
    solve_with_table(params, table, opts)
}

pub fn solve_with_table(params: &ModelParams, table: CoulombTable, opts: &SolveOptions) -> Result<Solution> {
    let mut inp = CiInputs::new(params, &table)?;
    inp.mixing = opts.mixing;
    inp.window = Some(opts.window);
    let deltas = DeltaTable::new(&params.delta_table, opts.fallback);
    let x_ci = solve_sector(&inp, Sector::X)?;
    let xx_ci = solve_sector(&inp, Sector::XX)?;
    let x = compose(x_ci, &deltas)?;
    let xx = compose(xx_ci, &deltas)?;
    let mut spin_vector = BTreeMap::new();
    spin_vector.insert((0, 0), 1.0);
    let vacuum = FineState {
        state: ManyBodyState {
            sector: Sector::Vacuum,
            energy: 0.0,
            amplitudes: SparseVec {
                entries: vec![(Config::default(), 1.0)],
            },
            label: "0".into(),
            purity: 1.0,
            multiplet: 0,
            fine: String::new(),
            two_m_e: Some(0),
            two_m_h: Some(0),
        },
        spin: (0, 0),
        spin_vector,
        offset: 0.0,
    };
    Ok(Solution {
        params: params.clone(),
        fingerprint: params.fingerprint(),
        table,
        vacuum,
        x,
        xx,
    })
}

/// The occupation group with the largest weight among those with the
/// requested number of unpaired carriers per species.
fn unpaired_orbitals(m: &Multiplet, n: usize, want_e: usize, want_h: usize) -> Option<(Vec<usize>, Vec<usize>)> {
    let base = &m.members[0].vector;
    let (dominant, _, groups) = occupation_weights(base, n);
    let fits = |o: &Occupation| {
        o.unpaired(Species::Electron).len() == want_e && o.unpaired(Species::Hole).len() == want_h
    };
    let chosen = if fits(&dominant) {
        Some(dominant)
    } else {
        groups
            .iter()
            .filter(|(o, _)| fits(o))
            .fold(None::<(&Occupation, f64)>, |acc, (o, &w)| match acc {
                Some((_, b)) if b >= w => acc,
                _ => Some((o, w)),
            })
            .map(|(o, _)| o.clone())
    }?;
    Some((chosen.unpaired(Species::Electron), chosen.unpaired(Species::Hole)))
}

/// Member projections matching the rows of a spin Hamiltonian's basis.
fn basis_members(kind: Option<SubgroupKind>, sector: Sector) -> Vec<(i32, i32)> {
    match (sector, kind) {
        // F_z = 1 (↓⇑), −1 (↑⇓), 2 (↑⇑), −2 (↓⇓)
        (Sector::X, _) => vec![(-1, 1), (1, -1), (1, 1), (-1, -1)],
        (_, Some(SubgroupKind::TripletTriplet)) => TT_BASIS_SPINS.iter().map(|&(e, h)| (2 * e, 2 * h)).collect(),
        (_, Some(SubgroupKind::SingletTriplet)) => vec![(0, 2), (0, 0), (0, -2)],
        (_, Some(SubgroupKind::TripletSinglet)) => vec![(2, 0), (0, 0), (-2, 0)],
        _ => vec![(0, 0)],
    }
}

fn subgroup(m: &Multiplet) -> SubgroupKind {
    match (m.two_s_e, m.two_s_h) {
        (2, 2) => SubgroupKind::TripletTriplet,
        (0, 2) => SubgroupKind::SingletTriplet,
        (2, 0) => SubgroupKind::TripletSinglet,
        _ => SubgroupKind::SingletSinglet,
    }
}

fn fine_structure(m: &Multiplet, n: usize, deltas: &DeltaTable) -> Result<(FineStructureResult, Option<SubgroupKind>)> {
    match m.sector {
        Sector::X => {
            let (e, h) = unpaired_orbitals(m, n, 1, 1)
                .ok_or_else(|| Error::numeric("fine structure", format!("no e-h pair in {}", m.name)))?;
            Ok((exciton_fine_structure(deltas.resolve(e[0], h[0])?), None))
        }
        Sector::XX => {
            let kind = subgroup(m);
            let fs = match kind {
                SubgroupKind::TripletTriplet => {
                    let (e, h) = unpaired_orbitals(m, n, 2, 2).ok_or_else(|| {
                        Error::numeric("fine structure", format!("no triplet-triplet configuration in {}", m.name))
                    })?;
                    biexciton_tt_eigensystem(biexciton_tt_constants(deltas, e[0], e[1], h[0], h[1])?)?
                }
                k => singlet_triplet_levels(k, Default::default())?,
            };
            Ok((fs, Some(kind)))
        }
        Sector::Vacuum => Err(Error::Domain("the vacuum has no fine structure".into())),
    }
}

fn compose(ci: CiSolution, deltas: &DeltaTable) -> Result<SectorLevels> {
    let n = ci.n_orbitals;
    let mut states = Vec::new();
    for (k, m) in ci.multiplets.iter().enumerate() {
        let (fs, kind) = fine_structure(m, n, deltas)?;
        let rows = basis_members(kind, m.sector);
        let (se, sh) = m.spin_classes();
        for col in 0..fs.labels.len() {
            let mut spin_vector = BTreeMap::new();
            let mut terms = Vec::new();
            for (r, &(me, mh)) in rows.iter().enumerate() {
                let c = fs.eigenvectors[(r, col)];
                if c.abs() < 1e-14 {
                    continue;
                }
                let member = m
                    .member(me, mh)
                    .ok_or_else(|| Error::numeric("fine structure", format!("{} lacks member ({me},{mh})", m.name)))?;
                spin_vector.insert((me, mh), c);
                terms.push((c, member));
            }
            let vector = SparseVec::combine(&terms);
            let proj = |f: fn(&(i32, i32)) -> i32| {
                let ms: Vec<i32> = spin_vector.keys().map(f).collect();
                ms.first().filter(|m0| ms.iter().all(|x| x == *m0)).copied()
            };
            let (two_m_e, two_m_h) = (proj(|k| k.0), proj(|k| k.1));
            let tt = kind == Some(SubgroupKind::TripletTriplet);
            let spin_of = |cls: SpinClass, two_m: Option<i32>, unit: i32, pick: fn(&(i32, i32)) -> i32| match cls {
                SpinClass::Triplet(_) if tt => SpinClass::Triplet(None),
                SpinClass::Triplet(_) => match two_m {
                    Some(v) => SpinClass::Triplet(Some(v / 2 * unit)),
                    None => {
                        let ms: Vec<i32> = spin_vector.keys().map(pick).collect();
                        if ms.len() == 2 && ms[0] == -ms[1] {
                            SpinClass::TripletPair(ms[0].abs() / 2 * unit)
                        } else {
                            SpinClass::Triplet(None)
                        }
                    }
                },
                c => c,
            };
            let e_cls = spin_of(se, two_m_e, 1, |k| k.0);
            let h_cls = spin_of(sh, two_m_h, 3, |k| k.1);
            let label = state_label(&m.occupation, e_cls, h_cls, m.purity, &m.name);
            let offset = fs.eigenvalues[col];
            let fine = match kind {
                Some(SubgroupKind::SingletSinglet) => String::new(),
                Some(SubgroupKind::SingletTriplet | SubgroupKind::TripletSinglet) if col == 0 => String::new(),
                _ => fs.labels[col].name.clone(),
            };
            states.push(FineState {
                state: ManyBodyState {
                    sector: m.sector,
                    energy: m.energy + offset / UEV_PER_MEV,
                    amplitudes: vector,
                    label,
                    purity: m.purity,
                    multiplet: k,
                    fine,
                    two_m_e,
                    two_m_h,
                },
                spin: (m.two_s_e, m.two_s_h),
                spin_vector,
                offset,
            });
        }
    }
    states.sort_by(|a, b| {
        a.state
            .energy
            .total_cmp(&b.state.energy)
            .then(a.state.multiplet.cmp(&b.state.multiplet))
            .then(a.state.fine.cmp(&b.state.fine))
    });
    Ok(SectorLevels { ci, states })
}
