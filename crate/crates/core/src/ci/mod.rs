//! Configuration interaction for the exciton (1e + 1h) and biexciton
//! (2e + 2h) sectors.

pub mod config;
pub mod hamiltonian;
pub mod states;

pub use config::{apply_string, enumerate_configurations, Config, Sector, SparseVec, Species};
pub use hamiltonian::{apply_hamiltonian, assemble_block, assemble_hamiltonian, CiInputs};
pub use states::{
    diagonalize, occupation_label, solve_sector, spin_character, CiSolution, ManyBodyState, Multiplet, Occupation,
    SpinClass,
};
