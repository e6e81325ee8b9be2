//! Physical constants in the unit system used throughout the crate:
//! energies in meV, lengths in Å, masses in units of the free-electron mass.

/// ħ²/m₀ in meV·Å².
pub const HBAR2_OVER_M0: f64 = 7620.0;

/// e²/(4πε₀) in meV·Å.
pub const COULOMB_CONSTANT: f64 = 14_399.645;

/// µeV per meV.
pub const UEV_PER_MEV: f64 = 1000.0;
