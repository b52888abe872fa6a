//! Exact diagonalization, bound-state classification and the transcendental
//! bound-state equation.

use std::f64::consts::PI;

use faer::{Mat, Side};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    band_edges, resonant_momentum, wrap_angle, HamiltonianMatrix, Lattice, SystemParams, ATOM,
};
use crate::residue::{decay_constant, leg_pair_integral, leg_pair_integral_derivative};

/// Full eigendecomposition of a single-excitation Hamiltonian.
///
/// Each eigenvector's global phase is fixed so that its atomic component is
/// real and non-negative (or, for photon-only states, so that its largest
/// component is real and positive).
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    energies: Vec<f64>,
    states: Mat<Complex64>,
    hamiltonian: HamiltonianMatrix,
}

impl EigenDecomposition {
    /// Energies in ascending order.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Eigenvectors as columns, matching [`Self::energies`].
    pub fn states(&self) -> &Mat<Complex64> {
        &self.states
    }

    pub fn state(&self, n: usize) -> Vec<Complex64> {
        self.states.col(n).iter().copied().collect()
    }

    pub fn dimension(&self) -> usize {
        self.energies.len()
    }

    pub fn hamiltonian(&self) -> &HamiltonianMatrix {
        &self.hamiltonian
    }

    pub fn params(&self) -> &SystemParams {
        self.hamiltonian.params()
    }

    pub fn lattice(&self) -> &Lattice {
        self.hamiltonian.lattice()
    }

    /// Expansion coefficients ⟨v_n|ψ⟩.
    pub fn coefficients(&self, psi: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(psi.len(), self.dimension());
        (0..self.dimension())
            .map(|n| {
                self.states
                    .col(n)
                    .iter()
                    .zip(psi)
                    .map(|(v, x)| v.conj() * x)
                    .sum()
            })
            .collect()
    }

    /// max_n ‖H v_n − E_n v_n‖.
    pub fn max_residual(&self) -> f64 {
        (0..self.dimension())
            .map(|n| {
                let v = self.state(n);
                let hv = self.hamiltonian.apply(&v);
                hv.iter()
                    .zip(&v)
                    .map(|(a, b)| (a - b * self.energies[n]).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// max_{m,n} |⟨v_m|v_n⟩ − δ_mn|.
    pub fn max_orthonormality_error(&self) -> f64 {
        let gram = self.states.adjoint() * &self.states;
        let n = self.dimension();
        let mut worst = 0.0f64;
        for c in 0..n {
            for r in 0..n {
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((gram[(r, c)] - target).norm());
            }
        }
        worst
    }
}

/// Diagonalizes `h` with a dense Hermitian eigensolver.
pub fn diagonalize(h: &HamiltonianMatrix) -> Result<EigenDecomposition> {
    let dense = h.to_dense();
    let n = dense.nrows();
    for c in 0..n {
        for r in c..n {
            if dense[(r, c)] != dense[(c, r)].conj() {
                return Err(Error::Internal(format!(
                    "Hamiltonian is not Hermitian at ({r}, {c})"
                )));
            }
        }
    }

    let (energies, mut states) = if h.is_real() {
        let real = Mat::<f64>::from_fn(n, n, |r, c| dense[(r, c)].re);
        let evd = real
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Internal(format!("eigensolver failed: {e:?}")))?;
        let energies: Vec<f64> = evd.S().column_vector().iter().copied().collect();
        let u = evd.U();
        let states = Mat::<Complex64>::from_fn(n, n, |r, c| u[(r, c)].into());
        (energies, states)
    } else {
        let evd = dense
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Internal(format!("eigensolver failed: {e:?}")))?;
        let energies: Vec<f64> = evd.S().column_vector().iter().map(|z| z.re).collect();
        (energies, evd.U().to_owned())
    };

    if energies.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Internal("eigenvalues not sorted".into()));
    }
    let params = h.params();
    let (l0, ln) = h.lattice().legs(params.leg_separation);
    separate_degenerate(&energies, &mut states, l0, ln, DEGENERACY * params.hopping)?;
    for c in 0..n {
        fix_gauge(&mut states, c);
    }
    Ok(EigenDecomposition {
        energies,
        states,
        hamiltonian: h.clone(),
    })
}

/// Eigenvalues closer than this (times ξ) are treated as one level.
const DEGENERACY: f64 = 1e-10;

/// Within each degenerate cluster, rotates the eigenvectors onto the
/// eigenbasis of the projector on the atom and the sites between the legs.
///
/// A BIC can be degenerate with a standing wave of the finite chain (e.g. when
/// N_c + 1 is a multiple of 3 for Ω = −ξ); the solver then returns an arbitrary
/// mixture. After the rotation the most localized combination comes first.
fn separate_degenerate(
    energies: &[f64],
    states: &mut Mat<Complex64>,
    l0: usize,
    ln: usize,
    tolerance: f64,
) -> Result<()> {
    let rows: Vec<usize> = std::iter::once(ATOM).chain(l0 + 1..=ln + 1).collect();
    let mut start = 0;
    while start < energies.len() {
        let mut end = start + 1;
        while end < energies.len() && energies[end] - energies[end - 1] <= tolerance {
            end += 1;
        }
        let k = end - start;
        if k > 1 {
            let overlap = Mat::<Complex64>::from_fn(k, k, |a, b| {
                rows.iter()
                    .map(|&r| states[(r, start + a)].conj() * states[(r, start + b)])
                    .sum()
            });
            let evd = overlap
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::Internal(format!("cluster rotation failed: {e:?}")))?;
            let u = evd.U();
            let block = states.subcols(start, k).to_owned();
            // descending localization
            let rotated = Mat::<Complex64>::from_fn(states.nrows(), k, |r, c| {
                let col = k - 1 - c;
                (0..k).map(|a| block[(r, a)] * u[(a, col)]).sum()
            });
            states.subcols_mut(start, k).copy_from(&rotated);
        }
        start = end;
    }
    Ok(())
}

fn fix_gauge(states: &mut Mat<Complex64>, col: usize) {
    let n = states.nrows();
    let atom = states[(ATOM, col)];
    let pivot = if atom.norm() > 1e-14 {
        atom
    } else {
        let mut best = Complex64::new(0.0, 0.0);
        for r in 0..n {
            if states[(r, col)].norm() > best.norm() * (1.0 + 1e-12) {
                best = states[(r, col)];
            }
        }
        best
    };
    if pivot.norm() == 0.0 {
        return;
    }
    let phase = pivot.conj() / pivot.norm();
    for r in 0..n {
        states[(r, col)] *= phase;
    }
    if atom.norm() > 1e-14 {
        states[(ATOM, col)] = states[(ATOM, col)].norm().into();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateClass {
    Propagating,
    LowerBoc,
    UpperBoc,
    Bic,
    /// Atom level with no photon admixture (g = 0).
    Atomic,
}

impl StateClass {
    pub fn label(self) -> &'static str {
        match self {
            StateClass::Propagating => "propagating",
            StateClass::LowerBoc => "lower_boc",
            StateClass::UpperBoc => "upper_boc",
            StateClass::Bic => "bic",
            StateClass::Atomic => "atomic",
        }
    }
}

/// Thresholds used by [`classify_states`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    /// Distance past a band edge before a state counts as outside the band.
    pub edge_tolerance: f64,
    /// Minimum (atom + in-span photon) weight fraction for the BIC.
    pub localization_threshold: f64,
    /// Minimum photon weight for a state to count as dressed.
    pub photon_floor: f64,
    /// Allowed photon weight outside the localization window of a BOC.
    pub window_tolerance: f64,
    /// Smallest BOC window half-width, in sites.
    pub min_window: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            edge_tolerance: 1e-9,
            localization_threshold: 0.999,
            photon_floor: 1e-9,
            window_tolerance: 1e-6,
            min_window: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateRecord {
    pub index: usize,
    pub energy: f64,
    pub class: StateClass,
    pub atom_weight: f64,
    pub photon_weight: f64,
    pub photon_weight_in_span: f64,
    /// (atom weight + in-span photon weight) / total weight.
    pub localization: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundState {
    pub index: usize,
    pub energy: f64,
    pub state: Vec<Complex64>,
    pub atom_weight: f64,
    /// Half-width (sites) of the window around the legs.
    pub window: usize,
    /// Photon weight outside `[leg0 − window, legN + window]`.
    pub outside_window_weight: f64,
}

impl BoundState {
    /// Atomic amplitude ⟨e|φ⟩.
    pub fn atom_amplitude(&self) -> Complex64 {
        self.state[ATOM]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundStateSet {
    pub lower_boc: Option<BoundState>,
    pub upper_boc: Option<BoundState>,
    pub bic: Option<BoundState>,
    pub table: Vec<StateRecord>,
    /// Indices of states that need a second look: surplus BOC candidates or
    /// bound states leaking out of their window.
    pub flagged: Vec<usize>,
}

impl BoundStateSet {
    pub fn count(&self, class: StateClass) -> usize {
        self.table.iter().filter(|r| r.class == class).count()
    }
}

fn span_weight(v: &[Complex64], from: isize, to: isize) -> f64 {
    let n_sites = v.len() - 1;
    let lo = from.max(0) as usize;
    let hi = (to.max(-1) + 1).min(n_sites as isize) as usize;
    if lo >= hi {
        return 0.0;
    }
    v[1 + lo..1 + hi].iter().map(|x| x.norm_sqr()).sum()
}

/// Labels every eigenstate as propagating, BOC, BIC or bare atom.
pub fn classify_states(
    decomp: &EigenDecomposition,
    options: &ClassifyOptions,
) -> Result<BoundStateSet> {
    let params = decomp.params();
    let lattice = decomp.lattice();
    let (l0, ln) = lattice.legs(params.leg_separation);
    let (lower, upper) = band_edges(params);

    let mut table = Vec::with_capacity(decomp.dimension());
    for (n, &energy) in decomp.energies().iter().enumerate() {
        let col = decomp.states().col(n);
        let total: f64 = col.iter().map(|x| x.norm_sqr()).sum();
        let atom_weight = col[ATOM].norm_sqr();
        let photon_weight = total - atom_weight;
        let v: Vec<Complex64> = col.iter().copied().collect();
        let in_span = span_weight(&v, l0 as isize, ln as isize);
        let localization = (atom_weight + in_span) / total;

        let dressed = photon_weight > options.photon_floor;
        let class = if !dressed {
            if energy < lower - options.edge_tolerance
                || energy > upper + options.edge_tolerance
                || localization > options.localization_threshold
            {
                StateClass::Atomic
            } else {
                StateClass::Propagating
            }
        } else if energy < lower - options.edge_tolerance {
            StateClass::LowerBoc
        } else if energy > upper + options.edge_tolerance {
            StateClass::UpperBoc
        } else if localization > options.localization_threshold
            && in_span / photon_weight > options.localization_threshold
        {
            StateClass::Bic
        } else {
            StateClass::Propagating
        };
        table.push(StateRecord {
            index: n,
            energy,
            class,
            atom_weight,
            photon_weight,
            photon_weight_in_span: in_span,
            localization,
        });
    }

    let bics: Vec<&StateRecord> = table.iter().filter(|r| r.class == StateClass::Bic).collect();
    if bics.len() > 1 {
        let detail = bics
            .iter()
            .map(|r| format!("#{} E={:.12} loc={:.6}", r.index, r.energy, r.localization))
            .collect::<Vec<_>>()
            .join(", ");
        return Err(Error::Classification(format!(
            "{} in-band localized states: {detail}",
            bics.len()
        )));
    }

    let mut flagged = Vec::new();
    let make = |rec: &StateRecord, window: usize| -> BoundState {
        let v = decomp.state(rec.index);
        let inside = span_weight(&v, l0 as isize - window as isize, (ln + window) as isize);
        BoundState {
            index: rec.index,
            energy: rec.energy,
            atom_weight: rec.atom_weight,
            window,
            outside_window_weight: (rec.photon_weight - inside).max(0.0),
            state: v,
        }
    };
    let boc_window = |energy: f64| -> usize {
        let kappa = decay_constant(energy - params.omega_cavity, params.hopping).unwrap_or(0.0);
        let needed = if kappa > 0.0 {
            ((1.0 / options.window_tolerance).ln() / (2.0 * kappa)).ceil()
        } else {
            f64::INFINITY
        };
        if needed.is_finite() {
            (needed as usize).max(options.min_window)
        } else {
            lattice.total_sites
        }
    };

    let lowers: Vec<&StateRecord> = table
        .iter()
        .filter(|r| r.class == StateClass::LowerBoc)
        .collect();
    let uppers: Vec<&StateRecord> = table
        .iter()
        .filter(|r| r.class == StateClass::UpperBoc)
        .collect();
    // energies ascending: the outermost candidate is first (lower) or last (upper)
    flagged.extend(lowers.iter().skip(1).map(|r| r.index));
    flagged.extend(uppers.iter().rev().skip(1).map(|r| r.index));

    let lower_boc = lowers.first().map(|r| make(r, boc_window(r.energy)));
    let upper_boc = uppers.last().map(|r| make(r, boc_window(r.energy)));
    let bic = bics.first().map(|r| make(r, 0));
    for b in [&lower_boc, &upper_boc, &bic].into_iter().flatten() {
        if b.outside_window_weight > options.window_tolerance {
            flagged.push(b.index);
        }
    }
    flagged.sort_unstable();
    flagged.dedup();

    Ok(BoundStateSet {
        lower_boc,
        upper_boc,
        bic,
        table,
        flagged,
    })
}

/// Outcome of the BIC interference test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BicCheck {
    /// |1 + e^{i(KN+φ)}|² ≤ tolerance.
    pub holds: bool,
    /// |1 + e^{i(KN+φ)}|², i.e. |G|² up to the factor g²/N_c.
    pub interference_sq: f64,
    /// |1 + e^{i(−KN+φ)}|², the coupling to the counter-propagating mode.
    pub mirror_interference_sq: f64,
}

impl BicCheck {
    /// Both G(K) and G(−K) vanish, so the photon profile terminates at the
    /// right leg.
    pub fn compact_support(&self) -> bool {
        self.holds && self.mirror_interference_sq <= BIC_TOLERANCE
    }
}

pub const BIC_TOLERANCE: f64 = 1e-12;

/// Tests whether the atom decouples from its resonant band mode.
pub fn bic_condition(params: &SystemParams) -> Result<BicCheck> {
    let k = resonant_momentum(params)?;
    let kn = k * params.leg_separation as f64;
    let one = Complex64::new(1.0, 0.0);
    let interference_sq = (one + Complex64::cis(kn + params.phase)).norm_sqr();
    let mirror_interference_sq = (one + Complex64::cis(-kn + params.phase)).norm_sqr();
    Ok(BicCheck {
        holds: interference_sq <= BIC_TOLERANCE,
        interference_sq,
        mirror_interference_sq,
    })
}

/// `I(E) = ∫_{−π}^{π} [1 + cos(kN + φ)] / (E − ω_c + 2ξ cos k) dk`, evaluated by
/// residues; valid only outside the band.
pub fn self_energy_integral(params: &SystemParams, energy: f64) -> Result<f64> {
    leg_pair_integral(
        energy - params.omega_cavity,
        params.hopping,
        params.leg_separation,
        params.phase,
    )
}

/// `E − Ω − (g²/π) I(E)`; its zeros outside the band are the BOC energies.
pub fn secular_function(params: &SystemParams, energy: f64) -> Result<f64> {
    let g2 = params.coupling * params.coupling;
    Ok(energy - params.omega_atom - g2 / PI * self_energy_integral(params, energy)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandSide {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BocRoot {
    pub side: BandSide,
    pub energy: f64,
    /// Inverse localization length κ, |E − ω_c| = 2ξ cosh κ.
    pub decay_constant: f64,
    /// Atomic weight 1 / (1 − dΣ/dE) of the bound state.
    pub atom_weight: f64,
}

const MAX_BISECTIONS: usize = 400;

/// Roots of the transcendental bound-state equation on each side of the band.
///
/// The secular function is strictly increasing outside the band, so each side
/// has at most one root. A side without a sign change reports no root.
pub fn boc_energies(params: &SystemParams) -> Result<Vec<BocRoot>> {
    params.validate()?;
    if params.coupling <= 0.0 {
        return Err(Error::Input("boc_energies needs g > 0".into()));
    }
    let mut roots = Vec::new();
    for side in [BandSide::Lower, BandSide::Upper] {
        if let Some(root) = boc_root(params, side)? {
            roots.push(root);
        }
    }
    Ok(roots)
}

fn boc_root(params: &SystemParams, side: BandSide) -> Result<Option<BocRoot>> {
    let (lower, upper) = band_edges(params);
    let (edge, dir) = match side {
        BandSide::Lower => (lower, -1.0),
        BandSide::Upper => (upper, 1.0),
    };
    // on the lower side F must be positive at the edge and negative far out;
    // the upper side mirrors this
    let inward_sign = -dir;
    let f = |e: f64| secular_function(params, e);

    let mut near = edge + dir * 8.0 * f64::EPSILON * edge.abs().max(params.hopping);
    if f(near)? * inward_sign <= 0.0 {
        return Ok(None);
    }
    let cap = (2.0 * params.hopping).max(params.detuning().abs()) + 10.0 * params.coupling;
    let max_step = cap - 2.0 * params.hopping;
    let mut step = (near - edge).abs();
    let mut far = loop {
        step *= 2.0;
        let capped = step >= max_step;
        let candidate = edge + dir * step.min(max_step);
        if f(candidate)? * inward_sign < 0.0 {
            break candidate;
        }
        near = candidate;
        if capped {
            return Ok(None);
        }
    };

    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (near + far);
        if mid == near || mid == far {
            break;
        }
        if f(mid)? * inward_sign > 0.0 {
            near = mid;
        } else {
            far = mid;
        }
    }
    let energy = 0.5 * (near + far);
    let eps = energy - params.omega_cavity;
    let g2 = params.coupling * params.coupling;
    let slope =
        leg_pair_integral_derivative(eps, params.hopping, params.leg_separation, params.phase)?;
    Ok(Some(BocRoot {
        side,
        energy,
        decay_constant: decay_constant(eps, params.hopping)?,
        atom_weight: 1.0 / (1.0 - g2 / PI * slope),
    }))
}

/// Photon amplitudes on the discrete momentum grid of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumProfile {
    /// Momenta 2πm/N_c wrapped to (−π, π], ascending.
    pub momenta: Vec<f64>,
    /// β_k = N_c^{−1/2} Σ_j β_j e^{−ik(j − leg0)}.
    pub amplitudes: Vec<Complex64>,
}

/// Unitary discrete Fourier transform of the photon part of `state`.
pub fn momentum_profile(state: &[Complex64], lattice: &Lattice) -> MomentumProfile {
    let n = lattice.total_sites;
    assert_eq!(state.len(), n + 1, "state does not match the lattice");
    let mut buf: Vec<Complex64> = state[1..].to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let norm = 1.0 / (n as f64).sqrt();
    let mut pairs: Vec<(f64, Complex64)> = buf
        .into_iter()
        .enumerate()
        .map(|(m, x)| {
            let k = wrap_angle(2.0 * PI * m as f64 / n as f64);
            (k, x * Complex64::cis(k * lattice.leg0_index as f64) * norm)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (momenta, amplitudes) = pairs.into_iter().unzip();
    MomentumProfile { momenta, amplitudes }
}
