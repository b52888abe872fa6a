//! Quench dynamics from the excited atom and the three-bound-state model.

use faer::Mat;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{site_basis, ATOM};
use crate::spectrum::{BoundState, BoundStateSet, EigenDecomposition};

/// Tolerance on ‖ψ(0)‖² − 1.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Samples per matrix product in [`evolve`].
const BLOCK: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// σ₊|G⟩: atom excited, every resonator empty.
    ExcitedAtom,
    /// One photon on the site at this offset from the left leg.
    Site(isize),
    Vector(Vec<Complex64>),
}

impl InitialState {
    pub fn to_vector(&self, decomp: &EigenDecomposition) -> Result<Vec<Complex64>> {
        let dim = decomp.dimension();
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        match self {
            InitialState::ExcitedAtom => v[ATOM] = 1.0.into(),
            InitialState::Site(j) => {
                let a = decomp
                    .lattice()
                    .absolute(*j)
                    .ok_or_else(|| Error::Input(format!("site {j} is outside the chain")))?;
                v[site_basis(a)] = 1.0.into();
            }
            InitialState::Vector(x) => {
                if x.len() != dim {
                    return Err(Error::Input(format!(
                        "initial vector has length {}, expected {dim}",
                        x.len()
                    )));
                }
                let norm: f64 = x.iter().map(|z| z.norm_sqr()).sum();
                if (norm - 1.0).abs() > NORM_TOLERANCE {
                    return Err(Error::Input(format!(
                        "initial state is not normalized (norm² = {norm})"
                    )));
                }
                v.copy_from_slice(x);
            }
        }
        Ok(v)
    }
}

/// Uniform sampling `t_k = k·dt` for `k = 0..samples`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub samples: usize,
}

impl TimeGrid {
    /// Grid covering a record of length `duration` (the endpoint itself is
    /// excluded so that the record length is exactly `samples·dt`).
    pub fn new(dt: f64, duration: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) || !(duration >= dt && duration.is_finite()) {
            return Err(Error::Input(format!(
                "need 0 < dt <= duration, got dt = {dt}, duration = {duration}"
            )));
        }
        Ok(Self {
            dt,
            samples: (duration / dt).round() as usize,
        })
    }

    pub fn duration(&self) -> f64 {
        self.samples as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.samples).map(|k| k as f64 * self.dt).collect()
    }
}

/// Sampled evolution of the atom and a set of tracked sites.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Tracked sites, relative to the left leg.
    pub sites: Vec<isize>,
    /// P_e(t) = |⟨e|ψ(t)⟩|².
    pub atom_population: Vec<f64>,
    /// β_j(t) per tracked site (outer index follows `sites`).
    pub site_amplitudes: Vec<Vec<Complex64>>,
    /// ‖ψ(t)‖² from the full state vector.
    pub norm: Vec<f64>,
    /// ⟨ψ(t)|H|ψ(t)⟩.
    pub energy: Vec<f64>,
    /// max(|β|) over the two end resonators of the chain.
    pub edge_amplitude: Vec<f64>,
    /// Time at which reflections from the walls can reach the legs.
    pub horizon: f64,
    pub exceeds_horizon: bool,
}

impl Trajectory {
    /// |β_j(t)|² for the `i`-th tracked site.
    pub fn site_intensity(&self, i: usize) -> Vec<f64> {
        self.site_amplitudes[i].iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn site_position(&self, relative: isize) -> Option<usize> {
        self.sites.iter().position(|&s| s == relative)
    }

    pub fn max_norm_error(&self) -> f64 {
        self.norm.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// State at time `t`, ψ(t) = Σ_n e^{−iE_n t} ⟨v_n|ψ(0)⟩ v_n.
pub fn evolve_state(decomp: &EigenDecomposition, initial: &InitialState, t: f64) -> Result<Vec<Complex64>> {
    let psi0 = initial.to_vector(decomp)?;
    let coeffs = decomp.coefficients(&psi0);
    let dim = decomp.dimension();
    let phased = Mat::<Complex64>::from_fn(dim, 1, |n, _| {
        coeffs[n] * Complex64::cis(-decomp.energies()[n] * t)
    });
    let psi = decomp.states() * &phased;
    Ok((0..dim).map(|r| psi[(r, 0)]).collect())
}

/// Evolves `initial` with the spectral propagator and samples observables.
///
/// Every sample is evaluated directly from the decomposition, so there is no
/// time-stepping error. Sites are labelled relative to the left leg.
pub fn evolve(
    decomp: &EigenDecomposition,
    initial: &InitialState,
    grid: &TimeGrid,
    sites: &[isize],
) -> Result<Trajectory> {
    let lattice = decomp.lattice();
    let params = decomp.params();
    let rows: Vec<usize> = sites
        .iter()
        .map(|&j| {
            lattice
                .absolute(j)
                .map(site_basis)
                .ok_or_else(|| Error::Input(format!("tracked site {j} is outside the chain")))
        })
        .collect::<Result<_>>()?;
    let psi0 = initial.to_vector(decomp)?;
    let coeffs = decomp.coefficients(&psi0);
    let energies = decomp.energies();
    let dim = decomp.dimension();
    let h = decomp.hamiltonian();
    let first_site = site_basis(0);
    let last_site = site_basis(lattice.total_sites - 1);

    let times = grid.times();
    let mut traj = Trajectory {
        times: times.clone(),
        sites: sites.to_vec(),
        atom_population: Vec::with_capacity(times.len()),
        site_amplitudes: vec![Vec::with_capacity(times.len()); sites.len()],
        norm: Vec::with_capacity(times.len()),
        energy: Vec::with_capacity(times.len()),
        edge_amplitude: Vec::with_capacity(times.len()),
        horizon: lattice.causal_horizon(params),
        exceeds_horizon: false,
    };
    traj.exceeds_horizon = times.last().is_some_and(|&t| t >= traj.horizon);

    let mut column = vec![Complex64::new(0.0, 0.0); dim];
    for chunk in times.chunks(BLOCK) {
        let phased = Mat::<Complex64>::from_fn(dim, chunk.len(), |n, b| {
            coeffs[n] * Complex64::cis(-energies[n] * chunk[b])
        });
        let psi = decomp.states() * &phased;
        for b in 0..chunk.len() {
            for (r, slot) in column.iter_mut().enumerate() {
                *slot = psi[(r, b)];
            }
            traj.atom_population.push(column[ATOM].norm_sqr());
            for (series, &r) in traj.site_amplitudes.iter_mut().zip(&rows) {
                series.push(column[r]);
            }
            traj.norm.push(column.iter().map(|z| z.norm_sqr()).sum());
            traj.energy.push(h.expectation(&column));
            traj.edge_amplitude
                .push(column[first_site].norm().max(column[last_site].norm()));
        }
    }
    Ok(traj)
}

/// The three bound states seen by the initial state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundStateModel {
    /// E_L, E_I, E_U.
    pub energies: [f64; 3],
    /// c_α = ⟨φ_α|ψ(0)⟩ for α = L, I, U.
    pub overlaps: [Complex64; 3],
    /// ⟨e|φ_α⟩ for α = L, I, U.
    pub atom_amplitudes: [Complex64; 3],
    /// Tracked sites, relative to the left leg.
    pub sites: Vec<isize>,
    /// d_{α,j} = ⟨G|a_j|φ_α⟩ per tracked site, α = L, I, U.
    pub photon_amplitudes: Vec<[Complex64; 3]>,
    /// δ_L = E_I − E_L.
    pub delta_l: f64,
    /// δ_U = E_U − E_I.
    pub delta_u: f64,
}

impl BoundStateModel {
    /// Σ_α |c_α|².
    pub fn bound_weight(&self) -> f64 {
        self.overlaps.iter().map(|c| c.norm_sqr()).sum()
    }

    /// The three beat frequencies δ_L, δ_U and δ_L + δ_U.
    pub fn beat_frequencies(&self) -> [f64; 3] {
        [self.delta_l, self.delta_u, self.delta_l + self.delta_u]
    }
}

/// Projects the initial state on the lower BOC, the BIC and the upper BOC.
pub fn bound_state_projection(
    decomp: &EigenDecomposition,
    bound: &BoundStateSet,
    initial: &InitialState,
    sites: &[isize],
) -> Result<BoundStateModel> {
    let missing: Vec<&str> = [
        (bound.lower_boc.is_none(), "lower BOC"),
        (bound.bic.is_none(), "BIC"),
        (bound.upper_boc.is_none(), "upper BOC"),
    ]
    .iter()
    .filter_map(|(absent, name)| absent.then_some(*name))
    .collect();
    if !missing.is_empty() {
        return Err(Error::ModelUnavailable(missing.join(", ")));
    }
    let states: [&BoundState; 3] = [
        bound.lower_boc.as_ref().unwrap(),
        bound.bic.as_ref().unwrap(),
        bound.upper_boc.as_ref().unwrap(),
    ];
    let psi0 = initial.to_vector(decomp)?;
    let lattice = decomp.lattice();
    let overlap = |s: &BoundState| -> Complex64 {
        s.state.iter().zip(&psi0).map(|(a, b)| a.conj() * b).sum()
    };
    let photon_amplitudes = sites
        .iter()
        .map(|&j| {
            let r = lattice
                .absolute(j)
                .map(site_basis)
                .ok_or_else(|| Error::Input(format!("site {j} is outside the chain")))?;
            Ok(states.map(|s| s.state[r]))
        })
        .collect::<Result<Vec<_>>>()?;
    let energies = states.map(|s| s.energy);
    Ok(BoundStateModel {
        energies,
        overlaps: states.map(overlap),
        atom_amplitudes: states.map(|s| s.atom_amplitude()),
        sites: sites.to_vec(),
        photon_amplitudes,
        delta_l: energies[1] - energies[0],
        delta_u: energies[2] - energies[1],
    })
}

/// Long-time populations predicted by the bound-state model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelTrajectory {
    pub times: Vec<f64>,
    /// |e^{iδ_L t} c_L² + c_I² + e^{−iδ_U t} c_U²|², squaring the overlaps
    /// literally.
    pub pe_squared_overlaps: Vec<f64>,
    /// |Σ_α e^{−iE_α t} c_α ⟨e|φ_α⟩|², the projector-exact truncation.
    pub pe_projector: Vec<f64>,
    /// |e^{−iδ_U t} c_U d_{U,j} + e^{iδ_L t} c_L d_{L,j} + c_I d_{I,j}|² per site.
    pub site_intensity: Vec<Vec<f64>>,
}

/// Evaluates the three-state model on `times`.
pub fn long_time_populations(model: &BoundStateModel, times: &[f64]) -> ModelTrajectory {
    let [c_l, c_i, c_u] = model.overlaps;
    let [a_l, a_i, a_u] = model.atom_amplitudes;
    let [e_l, e_i, e_u] = model.energies;
    let mut out = ModelTrajectory {
        times: times.to_vec(),
        pe_squared_overlaps: Vec::with_capacity(times.len()),
        pe_projector: Vec::with_capacity(times.len()),
        site_intensity: vec![Vec::with_capacity(times.len()); model.sites.len()],
    };
    for &t in times {
        let lower = Complex64::cis(model.delta_l * t);
        let upper = Complex64::cis(-model.delta_u * t);
        out.pe_squared_overlaps
            .push((lower * c_l * c_l + c_i * c_i + upper * c_u * c_u).norm_sqr());
        let amp = Complex64::cis(-e_l * t) * c_l * a_l
            + Complex64::cis(-e_i * t) * c_i * a_i
            + Complex64::cis(-e_u * t) * c_u * a_u;
        out.pe_projector.push(amp.norm_sqr());
        for (series, d) in out.site_intensity.iter_mut().zip(&model.photon_amplitudes) {
            let [d_l, d_i, d_u] = *d;
            series.push((upper * c_u * d_u + lower * c_l * d_l + c_i * d_i).norm_sqr());
        }
    }
    out
}
