//! Giant atom coupled at two sites to a coupled-resonator waveguide, in the
//! single-excitation sector.
//!
//! The crate builds the tight-binding Hamiltonian of the atom and a finite
//! hard-wall chain, diagonalizes it, and identifies the bound states below
//! and above the band (BOCs) as well as the bound state in the continuum
//! (BIC) that appears when the atom decouples from its resonant mode. On top
//! of the spectrum it provides the closed-form BIC profile, the transcendental
//! bound-state equation solved by residues, quench dynamics from the excited
//! atom, and the beat spectrum produced by interference among the three bound
//! states.
//!
//! Units: ħ = 1 and energies in units of the hopping ξ.

pub mod beats;
pub mod bic;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod quadrature;
pub mod residue;
pub mod spectrum;

pub use beats::{
    detect_peaks, fft_spectrum, match_beats, BeatLabel, FrequencySpectrum, PeakReport,
};
pub use bic::{analytic_bic, m_integral, verify_bic, AnalyticBic, BicVerification};
pub use dynamics::{
    bound_state_projection, evolve, long_time_populations, BoundStateModel, InitialState,
    TimeGrid, Trajectory,
};
pub use error::{Error, Result};
pub use model::{
    band_edges, build_hamiltonian, coupling_amplitude, dispersion, resonant_momentum, Boundary,
    HamiltonianMatrix, Lattice, SystemParams,
};
pub use num_complex::Complex64;
pub use spectrum::{
    bic_condition, boc_energies, classify_states, diagonalize, momentum_profile, BicCheck,
    BoundState, BoundStateSet, ClassifyOptions, EigenDecomposition, StateClass,
};
