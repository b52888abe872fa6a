//! Physical parameters, chain geometry and the single-excitation Hamiltonian.
//!
//! Energies are measured in units of the hopping ξ and ħ = 1. The Hilbert
//! space is spanned by `[|e,vac⟩, |g,1_0⟩, …, |g,1_{N_c-1}⟩]`: the excited
//! atom first, then one photon on each resonator of the chain.

use std::f64::consts::{PI, TAU};

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Basis index of the excited-atom state.
pub const ATOM: usize = 0;

/// Parameters of the giant atom and the coupled-resonator waveguide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Atomic transition frequency Ω.
    pub omega_atom: f64,
    /// Bare resonator frequency ω_c.
    pub omega_cavity: f64,
    /// Nearest-neighbour hopping ξ.
    pub hopping: f64,
    /// Atom-resonator coupling g at each leg.
    pub coupling: f64,
    /// Distance N (in sites) between the two legs.
    pub leg_separation: usize,
    /// Coupling phase φ on the right leg, radians.
    pub phase: f64,
}

impl SystemParams {
    pub fn new(
        omega_atom: f64,
        omega_cavity: f64,
        hopping: f64,
        coupling: f64,
        leg_separation: usize,
        phase: f64,
    ) -> Result<Self> {
        let params = Self {
            omega_atom,
            omega_cavity,
            hopping,
            coupling,
            leg_separation,
            phase,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.omega_atom,
            self.omega_cavity,
            self.hopping,
            self.coupling,
            self.phase,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("parameters must be finite".into()));
        }
        if self.hopping <= 0.0 {
            return Err(Error::Config(format!(
                "hopping must be positive, got {}",
                self.hopping
            )));
        }
        if self.coupling < 0.0 {
            return Err(Error::Config(format!(
                "coupling must be non-negative, got {}",
                self.coupling
            )));
        }
        if self.leg_separation == 0 {
            return Err(Error::Config("leg_separation must be at least 1".into()));
        }
        Ok(())
    }

    /// Detuning Δ = Ω − ω_c.
    pub fn detuning(&self) -> f64 {
        self.omega_atom - self.omega_cavity
    }

    /// φ reduced to [0, 2π).
    pub fn reduced_phase(&self) -> f64 {
        let r = self.phase.rem_euclid(TAU);
        if r >= TAU {
            0.0
        } else {
            r
        }
    }

    /// True when the atom frequency lies strictly inside the band.
    pub fn atom_in_band(&self) -> bool {
        self.detuning().abs() < 2.0 * self.hopping
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Open chain: no hopping past the first and last resonator.
    #[default]
    HardWall,
}

/// Finite chain standing in for the infinite waveguide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    /// Number of resonators N_c.
    pub total_sites: usize,
    /// Absolute index of the left leg (site 0 of the relative labelling).
    pub leg0_index: usize,
    pub boundary: Boundary,
}

impl Lattice {
    pub fn new(total_sites: usize, leg0_index: usize) -> Self {
        Self {
            total_sites,
            leg0_index,
            boundary: Boundary::HardWall,
        }
    }

    /// Chain of `total_sites` resonators with the legs placed in the middle.
    pub fn centered(total_sites: usize, leg_separation: usize) -> Result<Self> {
        if leg_separation >= total_sites {
            return Err(Error::Config(format!(
                "leg_separation {leg_separation} does not fit in {total_sites} sites"
            )));
        }
        let lattice = Self::new(total_sites, (total_sites - 1 - leg_separation) / 2);
        Ok(lattice)
    }

    /// Checks the hard geometric invariants against the leg separation.
    pub fn validate(&self, leg_separation: usize) -> Result<()> {
        if self.total_sites < 2 {
            return Err(Error::Config(format!(
                "lattice needs at least 2 sites, got {}",
                self.total_sites
            )));
        }
        if leg_separation >= self.total_sites {
            return Err(Error::Config(format!(
                "leg_separation {} must be smaller than total_sites {}",
                leg_separation, self.total_sites
            )));
        }
        if self.leg0_index + leg_separation >= self.total_sites {
            return Err(Error::Config(format!(
                "right leg at {} falls outside a chain of {} sites",
                self.leg0_index + leg_separation,
                self.total_sites
            )));
        }
        Ok(())
    }

    /// Absolute indices of the left and right legs.
    pub fn legs(&self, leg_separation: usize) -> (usize, usize) {
        (self.leg0_index, self.leg0_index + leg_separation)
    }

    /// Number of sites between the legs and the nearest wall.
    pub fn margin(&self, leg_separation: usize) -> usize {
        let right = self.total_sites - 1 - (self.leg0_index + leg_separation);
        self.leg0_index.min(right)
    }

    /// The default placement keeps both margins at least a quarter of the chain.
    pub fn is_well_centered(&self, leg_separation: usize) -> bool {
        4 * self.margin(leg_separation) >= self.total_sites
    }

    /// Absolute site index for a label relative to the left leg.
    pub fn absolute(&self, relative: isize) -> Option<usize> {
        let abs = self.leg0_index as isize + relative;
        (abs >= 0 && (abs as usize) < self.total_sites).then_some(abs as usize)
    }

    /// Site label relative to the left leg.
    pub fn relative(&self, absolute: usize) -> isize {
        absolute as isize - self.leg0_index as isize
    }

    /// Time after which a signal launched at the legs can return from a wall,
    /// using the maximal group velocity 2ξ of the cosine band.
    pub fn causal_horizon(&self, params: &SystemParams) -> f64 {
        self.margin(params.leg_separation) as f64 / (2.0 * params.hopping)
    }
}

/// Basis index of a chain site given its absolute position.
pub fn site_basis(absolute: usize) -> usize {
    absolute + 1
}

/// Single-excitation Hamiltonian in the `[atom, sites…]` basis.
///
/// Stored structurally; [`HamiltonianMatrix::to_dense`] materializes it.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    params: SystemParams,
    lattice: Lattice,
}

impl HamiltonianMatrix {
    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn dimension(&self) -> usize {
        self.lattice.total_sites + 1
    }

    fn right_leg_factor(&self) -> Complex64 {
        Complex64::from_polar(self.params.coupling, self.params.reduced_phase())
    }

    /// Matrix element ⟨row|H|col⟩.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        let p = &self.params;
        let (l0, ln) = self.lattice.legs(p.leg_separation);
        let zero = Complex64::new(0.0, 0.0);
        match (row, col) {
            (ATOM, ATOM) => p.omega_atom.into(),
            (ATOM, c) => {
                let site = c - 1;
                let mut v = zero;
                if site == l0 {
                    v += p.coupling;
                }
                if site == ln {
                    v += self.right_leg_factor().conj();
                }
                v
            }
            (r, ATOM) => self.entry(ATOM, r).conj(),
            (r, c) if r == c => p.omega_cavity.into(),
            (r, c) if r.abs_diff(c) == 1 => (-p.hopping).into(),
            _ => zero,
        }
    }

    /// Atom-field matrix elements as (site basis index, ⟨site|H|atom⟩).
    pub fn leg_couplings(&self) -> [(usize, Complex64); 2] {
        let (l0, ln) = self.lattice.legs(self.params.leg_separation);
        [
            (site_basis(l0), self.params.coupling.into()),
            (site_basis(ln), self.right_leg_factor()),
        ]
    }

    pub fn to_dense(&self) -> Mat<Complex64> {
        let n = self.dimension();
        let p = &self.params;
        let mut h = Mat::<Complex64>::zeros(n, n);
        h[(ATOM, ATOM)] = p.omega_atom.into();
        for s in 1..n {
            h[(s, s)] = p.omega_cavity.into();
            if s + 1 < n {
                h[(s, s + 1)] = (-p.hopping).into();
                h[(s + 1, s)] = (-p.hopping).into();
            }
        }
        for (s, v) in self.leg_couplings() {
            h[(s, ATOM)] += v;
            h[(ATOM, s)] += v.conj();
        }
        h
    }

    /// True when every matrix element is real (φ ≡ 0 or π, or g = 0).
    pub fn is_real(&self) -> bool {
        self.leg_couplings().iter().all(|(_, v)| v.im == 0.0)
    }

    /// Sparse product H·v.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.dimension();
        assert_eq!(v.len(), n, "vector length must match the Hamiltonian dimension");
        let p = &self.params;
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        out[ATOM] = v[ATOM] * p.omega_atom;
        for s in 1..n {
            let mut acc = v[s] * p.omega_cavity;
            if s > 1 {
                acc -= v[s - 1] * p.hopping;
            }
            if s + 1 < n {
                acc -= v[s + 1] * p.hopping;
            }
            out[s] = acc;
        }
        for (s, h) in self.leg_couplings() {
            out[s] += h * v[ATOM];
            out[ATOM] += h.conj() * v[s];
        }
        out
    }

    /// ⟨v|H|v⟩ (real for Hermitian H).
    pub fn expectation(&self, v: &[Complex64]) -> f64 {
        self.apply(v)
            .iter()
            .zip(v)
            .map(|(hv, x)| (x.conj() * hv).re)
            .sum()
    }
}

/// Builds the single-excitation Hamiltonian for `params` on `lattice`.
pub fn build_hamiltonian(params: &SystemParams, lattice: &Lattice) -> Result<HamiltonianMatrix> {
    params.validate()?;
    lattice.validate(params.leg_separation)?;
    Ok(HamiltonianMatrix {
        params: *params,
        lattice: *lattice,
    })
}

/// Band dispersion ω_k = ω_c − 2ξ cos k.
pub fn dispersion(k: f64, params: &SystemParams) -> f64 {
    params.omega_cavity - 2.0 * params.hopping * k.cos()
}

/// Momentum K ∈ (0, π) of the band mode resonant with the atom.
pub fn resonant_momentum(params: &SystemParams) -> Result<f64> {
    if !params.atom_in_band() {
        let (lower, upper) = band_edges(params);
        return Err(Error::OutOfBand {
            omega_atom: params.omega_atom,
            lower,
            upper,
        });
    }
    let c = (params.omega_cavity - params.omega_atom) / (2.0 * params.hopping);
    Ok(c.clamp(-1.0, 1.0).acos())
}

/// Effective coupling G(φ) = (g/√n)(1 + e^{i(KN+φ)}) to the resonant mode.
pub fn coupling_amplitude(params: &SystemParams, n_modes: usize) -> Result<Complex64> {
    if n_modes == 0 {
        return Err(Error::Input("n_modes must be positive".into()));
    }
    let k = resonant_momentum(params)?;
    let interference =
        Complex64::new(1.0, 0.0) + Complex64::cis(k * params.leg_separation as f64 + params.phase);
    Ok(interference * (params.coupling / (n_modes as f64).sqrt()))
}

/// Lower and upper edges of the propagating band.
pub fn band_edges(params: &SystemParams) -> (f64, f64) {
    let half = 2.0 * params.hopping;
    (params.omega_cavity - half, params.omega_cavity + half)
}

/// Wraps an angle to (−π, π].
pub(crate) fn wrap_angle(x: f64) -> f64 {
    let r = (x + PI).rem_euclid(TAU) - PI;
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}
