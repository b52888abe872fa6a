//! Contour-integral closed forms for the cosine band.
//!
//! With z = e^{ik} the band denominator becomes
//! `ε + 2ξ cos k = ξ (z − z₊)(z − z₋) / z`, so every k-integral over the
//! Brillouin zone reduces to residues of rational functions in z.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

const SIN_FLOOR: f64 = 1e-12;

/// Roots e^{±iK} of `ξz² + Δz + ξ` for an atom inside the band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidueKernel {
    pub z1: Complex64,
    pub z2: Complex64,
    pub sin_k: f64,
}

impl ResidueKernel {
    /// Kernel for the resonant momentum K.
    pub fn new(k: f64) -> Result<Self> {
        let sin_k = k.sin();
        // sin(π) evaluates to 1.2e-16, not zero
        if !(sin_k > SIN_FLOOR) {
            return Err(Error::SingularParameter(format!(
                "sin K = {sin_k} vanishes at the band edge"
            )));
        }
        Ok(Self {
            z1: Complex64::cis(k),
            z2: Complex64::cis(-k),
            sin_k,
        })
    }

    /// `(1/2πi) ∮_{|z|<1} dz / ((z − z₁)(z − z₂) zᵐ)`: the coefficient of
    /// z^{m−1} in `1/((z − z₁)(z − z₂))`, i.e. the residue at the origin.
    /// The on-circle poles are left outside the contour.
    pub fn origin_moment(&self, m: i64) -> Complex64 {
        if m <= 0 {
            return Complex64::new(0.0, 0.0);
        }
        let m = m as i32;
        (self.z2.powi(-m) - self.z1.powi(-m)) / (self.z1 - self.z2)
    }
}

/// `∫_{−π}^{π} e^{ikn} / (ε + 2ξ cos k) dk` for `|ε| > 2ξ`.
///
/// Only the root z₀ of `ξz² + εz + ξ` inside the unit circle contributes,
/// giving `2π z₀^{|n|} / (ξ (z₀ − 1/z₀))`.
pub fn green_moment(epsilon: f64, hopping: f64, n: u32) -> Result<f64> {
    let (z0, s) = inner_root(epsilon, hopping)?;
    Ok(2.0 * PI * epsilon.signum() * z0.powi(n as i32) / s)
}

/// Inner root z₀ and `√(ε² − 4ξ²)`, computed without cancellation.
fn inner_root(epsilon: f64, hopping: f64) -> Result<(f64, f64)> {
    let lo = epsilon - 2.0 * hopping;
    let hi = epsilon + 2.0 * hopping;
    if !(lo > 0.0 || hi < 0.0) {
        return Err(Error::InsideBand { energy: epsilon });
    }
    let s = (lo * hi).sqrt();
    // outer root has no cancellation; z₀ z_outer = 1
    let outer = (-epsilon - epsilon.signum() * s) / (2.0 * hopping);
    Ok((1.0 / outer, s))
}

/// `∫_{−π}^{π} [1 + cos(kN + φ)] / (ε + 2ξ cos k) dk` outside the band.
pub fn leg_pair_integral(epsilon: f64, hopping: f64, separation: usize, phase: f64) -> Result<f64> {
    // the sin(kN) sin(φ) part is odd in k
    let direct = green_moment(epsilon, hopping, 0)?;
    let cross = green_moment(epsilon, hopping, separation as u32)?;
    Ok(direct + phase.cos() * cross)
}

/// `dI/dε` of [`leg_pair_integral`], used for bound-state normalization checks.
pub fn leg_pair_integral_derivative(
    epsilon: f64,
    hopping: f64,
    separation: usize,
    phase: f64,
) -> Result<f64> {
    let (z0, s) = inner_root(epsilon, hopping)?;
    let n = separation as f64;
    // dz₀/dε = −z₀ / (sign(ε) s), ds/dε = ε / s
    let dz0 = -z0 / (epsilon.signum() * s);
    let num = 1.0 + phase.cos() * z0.powi(separation as i32);
    let dnum = phase.cos() * n * z0.powi(separation as i32 - 1) * dz0;
    let ds = epsilon / s;
    Ok(2.0 * PI * epsilon.signum() * (dnum * s - num * ds) / (s * s))
}

/// Decay constant κ of an out-of-band state, `|ε| = 2ξ cosh κ`.
pub fn decay_constant(epsilon: f64, hopping: f64) -> Result<f64> {
    let (z0, _) = inner_root(epsilon, hopping)?;
    Ok(-z0.abs().ln())
}
