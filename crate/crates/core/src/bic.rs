//! Closed-form bound state in the continuum.
//!
//! When both G(K) and G(−K) vanish the atom hybridizes only with off-resonant
//! modes, and the photon amplitude is a standing wave pinned between the legs:
//!
//! ```text
//! β_j / α = 2g sin(K j) / √(4ξ² − Δ²)   for 0 ≤ j ≤ N, zero elsewhere
//! ```
//!
//! with j counted from the left leg.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{resonant_momentum, HamiltonianMatrix, Lattice, SystemParams, ATOM};
use crate::residue::ResidueKernel;
use crate::spectrum::{bic_condition, BoundState};

/// Normalized analytic BIC on a finite lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticBic {
    /// Atomic amplitude, real and positive.
    pub alpha: Complex64,
    /// Photon amplitudes indexed by absolute site.
    pub beta: Vec<Complex64>,
    /// Resonant momentum.
    pub k: f64,
    /// Detuning Ω − ω_c.
    pub delta: f64,
    /// Eigenenergy (= Ω).
    pub energy: f64,
    lattice: Lattice,
    leg_separation: usize,
}

impl AnalyticBic {
    /// State vector in the `[atom, sites…]` basis.
    pub fn state(&self) -> Vec<Complex64> {
        std::iter::once(self.alpha)
            .chain(self.beta.iter().copied())
            .collect()
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// β_j / α for j relative to the left leg.
    pub fn ratio(&self, relative: isize) -> Complex64 {
        self.lattice
            .absolute(relative)
            .map_or(Complex64::new(0.0, 0.0), |a| self.beta[a] / self.alpha)
    }

    pub fn legs(&self) -> (usize, usize) {
        self.lattice.legs(self.leg_separation)
    }
}

/// Sine law β_j/α inside the span, zero outside.
pub fn profile_ratio(params: &SystemParams, relative: isize) -> Result<f64> {
    let k = resonant_momentum(params)?;
    if relative < 0 || relative > params.leg_separation as isize {
        return Ok(0.0);
    }
    let delta = params.detuning();
    let xi = params.hopping;
    let denom = (4.0 * xi * xi - delta * delta).sqrt();
    Ok(2.0 * params.coupling * (k * relative as f64).sin() / denom)
}

/// β_j/α from the residues at the origin of
/// `(g / 2πiξ) ∮ (1 + zᴺ e^{iφ}) / ((z − z₁)(z − z₂) zʲ) dz`,
/// evaluated for any j (negative, inside or beyond the span).
pub fn profile_ratio_by_residues(params: &SystemParams, relative: isize) -> Result<Complex64> {
    let kernel = ResidueKernel::new(resonant_momentum(params)?)?;
    let j = relative as i64;
    let n = params.leg_separation as i64;
    let sum = kernel.origin_moment(j) + Complex64::cis(params.phase) * kernel.origin_moment(j - n);
    Ok(sum * (params.coupling / params.hopping))
}

/// Builds the normalized analytic BIC for `params` on `lattice`.
pub fn analytic_bic(params: &SystemParams, lattice: &Lattice) -> Result<AnalyticBic> {
    params.validate()?;
    lattice.validate(params.leg_separation)?;
    let check = bic_condition(params)?;
    if !check.holds {
        return Err(Error::BicCondition(format!(
            "|1 + e^(i(KN+phi))|^2 = {:.3e}; the atom still couples to its resonant mode",
            check.interference_sq
        )));
    }
    if !check.compact_support() {
        return Err(Error::BicCondition(format!(
            "|1 + e^(i(-KN+phi))|^2 = {:.3e}; the profile would not terminate beyond the right leg",
            check.mirror_interference_sq
        )));
    }
    let k = resonant_momentum(params)?;
    let (l0, _) = lattice.legs(params.leg_separation);
    let n = params.leg_separation;

    let mut ratios = vec![0.0f64; lattice.total_sites];
    for j in 1..n {
        ratios[l0 + j] = profile_ratio(params, j as isize)?;
    }
    // j = 0 and j = N are nodes of the standing wave (sin KN = 0 here)
    let norm_sq = 1.0 + ratios.iter().map(|r| r * r).sum::<f64>();
    let alpha = 1.0 / norm_sq.sqrt();
    Ok(AnalyticBic {
        alpha: alpha.into(),
        beta: ratios.iter().map(|r| Complex64::new(r * alpha, 0.0)).collect(),
        k,
        delta: params.detuning(),
        energy: params.omega_atom,
        lattice: *lattice,
        leg_separation: n,
    })
}

/// Principal value of `M = ∫_{−π}^{π} [1 + cos(kN + φ)] / (Δ + 2ξ cos k) dk`.
///
/// The direct term integrates to zero and the cross term is a Glauert
/// integral, giving `π cos φ sin(KN) / (ξ sin K)`, the real part of
/// [`m_integral_contour`].
pub fn m_integral(params: &SystemParams) -> Result<f64> {
    Ok(m_integral_contour(params)?.re)
}

/// `M` with the on-shell poles kept outside the contour (|z| < 1): only the
/// order-N pole at the origin contributes, `π e^{−iφ} sin(KN) / (ξ sin K)`.
pub fn m_integral_contour(params: &SystemParams) -> Result<Complex64> {
    let k = resonant_momentum(params)?;
    let kernel = ResidueKernel::new(k)?;
    let residue =
        Complex64::cis(-params.phase) * kernel.origin_moment(params.leg_separation as i64);
    Ok(residue * (PI / params.hopping))
}

/// Residual of the analytic state and its overlap with the numeric BIC.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BicVerification {
    /// ‖H v − Ω v‖.
    pub residual: f64,
    /// |⟨v_num|v⟩| when a numeric BIC was supplied.
    pub overlap: Option<f64>,
    /// Residual above [`RESIDUAL_FLAG`] (times ξ).
    pub flagged: bool,
}

pub const RESIDUAL_FLAG: f64 = 1e-9;

/// Checks the analytic BIC against `h` and optionally a numeric eigenstate.
pub fn verify_bic(
    analytic: &AnalyticBic,
    h: &HamiltonianMatrix,
    numeric: Option<&BoundState>,
) -> Result<BicVerification> {
    let v = analytic.state();
    if v.len() != h.dimension() {
        return Err(Error::Input(format!(
            "analytic state has dimension {}, Hamiltonian {}",
            v.len(),
            h.dimension()
        )));
    }
    let hv = h.apply(&v);
    let residual = hv
        .iter()
        .zip(&v)
        .map(|(a, b)| (a - b * analytic.energy).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let overlap = match numeric {
        Some(b) if b.state.len() == v.len() => Some(
            b.state
                .iter()
                .zip(&v)
                .map(|(x, y)| x.conj() * y)
                .sum::<Complex64>()
                .norm(),
        ),
        Some(_) => {
            return Err(Error::Input("numeric BIC has the wrong dimension".into()));
        }
        None => None,
    };
    debug_assert!(v[ATOM].im == 0.0);
    Ok(BicVerification {
        residual,
        overlap,
        flagged: residual > RESIDUAL_FLAG * h.params().hopping,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_hamiltonian;

    fn config_a() -> SystemParams {
        SystemParams::new(-1.0, 0.0, 1.0, 0.1, 6, PI).unwrap()
    }

    #[test]
    fn config_a_ratios() {
        // 2g sin(π/3)/√3 = g
        let expected = [0.0, 0.1, 0.1, 0.0, -0.1, -0.1, 0.0];
        for (j, e) in expected.iter().enumerate() {
            let r = profile_ratio(&config_a(), j as isize).unwrap();
            assert!((r - e).abs() < 1e-15, "j={j}: {r}");
        }
        let bic = analytic_bic(&config_a(), &Lattice::centered(41, 6).unwrap()).unwrap();
        assert!(bic.ratio(3).norm() < 1e-15);
        assert_eq!(bic.ratio(0), Complex64::new(0.0, 0.0));
        assert_eq!(bic.ratio(6), Complex64::new(0.0, 0.0));
        assert!((bic.ratio(1).re - 0.1).abs() < 1e-15);
    }

    #[test]
    fn normalized_with_positive_alpha() {
        let bic = analytic_bic(&config_a(), &Lattice::centered(41, 6).unwrap()).unwrap();
        let norm: f64 = bic.state().iter().map(|x| x.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(bic.alpha.re > 0.0 && bic.alpha.im == 0.0);
        // |α|² = 1 / (1 + 4g²) for this configuration
        assert!((bic.alpha.norm_sqr() - 1.0 / 1.04).abs() < 1e-14);
        assert_eq!(bic.energy, -1.0);
    }

    #[test]
    fn broken_condition_is_rejected() {
        let lattice = Lattice::centered(41, 6).unwrap();
        assert!(matches!(
            analytic_bic(&config_a().with_phase(0.0), &lattice),
            Err(Error::BicCondition(_))
        ));
        let p = SystemParams::new(-1.0, 0.0, 1.0, 0.1, 5, PI - 5.0 * PI / 3.0).unwrap();
        assert!(matches!(
            analytic_bic(&p, &Lattice::centered(41, 5).unwrap()),
            Err(Error::BicCondition(_))
        ));
        let out = SystemParams::new(-3.0, 0.0, 1.0, 0.1, 5, 0.0).unwrap();
        assert!(matches!(
            analytic_bic(&out, &lattice),
            Err(Error::OutOfBand { .. })
        ));
    }

    #[test]
    fn residue_route_matches_sine_law() {
        for p in [
            config_a(),
            SystemParams::new(-2f64.sqrt(), 0.0, 1.0, 0.1, 12, 0.0).unwrap(),
        ] {
            for j in -4..(p.leg_separation as isize + 5) {
                let direct = profile_ratio(&p, j).unwrap();
                let res = profile_ratio_by_residues(&p, j).unwrap();
                assert!((res - Complex64::new(direct, 0.0)).norm() < 1e-13, "j={j}");
            }
        }
    }

    #[test]
    fn m_integral_values() {
        assert!(m_integral(&config_a()).unwrap().abs() < 1e-12);
        let b = SystemParams::new(-2f64.sqrt(), 0.0, 1.0, 0.1, 12, 0.0).unwrap();
        assert!(m_integral(&b).unwrap().abs() < 1e-12);
        let c = SystemParams::new(-1.0, 0.0, 1.0, 0.1, 5, 0.0).unwrap();
        assert!((m_integral(&c).unwrap() + PI).abs() < 1e-12);
        let edge = SystemParams::new(-2.0, 0.0, 1.0, 0.1, 5, 0.0).unwrap();
        assert!(m_integral(&edge).is_err());
    }

    #[test]
    fn exact_eigenvector_on_finite_chain() {
        let lattice = Lattice::centered(41, 6).unwrap();
        let h = build_hamiltonian(&config_a(), &lattice).unwrap();
        let bic = analytic_bic(&config_a(), &lattice).unwrap();
        let report = verify_bic(&bic, &h, None).unwrap();
        assert!(report.residual <= 1e-12, "{}", report.residual);
        assert!(!report.flagged);
        assert!(report.overlap.is_none());
    }

    #[test]
    fn stale_state_is_flagged() {
        let lattice = Lattice::centered(41, 6).unwrap();
        let bic = analytic_bic(&config_a(), &lattice).unwrap();
        let h = build_hamiltonian(&config_a().with_phase(PI + 0.3), &lattice).unwrap();
        let report = verify_bic(&bic, &h, None).unwrap();
        assert!(report.residual > 1e-3);
        assert!(report.flagged);
    }
}
