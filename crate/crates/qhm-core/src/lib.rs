//! Periodically driven quantum heat machines in natural units (ħ = k_B = 1).
//!
//! Modules follow the data flow: bath spectra feed Floquet sideband sums,
//! which feed the two-level and multilevel machines; the piston, dressed
//! cooler, non-Markovian and cooling-speed modules stand on their own.

pub mod bath_spectra;
pub mod dressed_cooler;
pub mod floquet;
pub mod lindblad;
pub mod multilevel_machine;
pub mod nonmarkovian;
pub mod quad;
pub mod quantum_piston;
pub mod thirdlaw;
pub mod tls_machine;
