//! Plain building surfaces: frequency-dependent complex permittivity and
//! half-space Fresnel reflection.
//!
//! A material is described by its real relative permittivity and a power-law
//! conductivity `sigma(f) = c * f_GHz^d` (S/m), the standard parametrisation
//! for construction materials at radio frequencies. The loss enters the
//! complex permittivity as `eps = eps_r - j * 17.98 * sigma / f_GHz`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Material model parameters. Serialises inside scene wall entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialSpec {
    pub name: String,
    /// Real relative permittivity (dimensionless).
    pub eps_r: f64,
    /// Conductivity prefactor `c` in `sigma = c * f_GHz^d` (S/m).
    pub sigma_coeff: f64,
    /// Conductivity exponent `d`.
    pub sigma_exp: f64,
}

/// Default wall material for the reference room.
pub fn concrete() -> MaterialSpec {
    MaterialSpec {
        name: "concrete".to_owned(),
        eps_r: 5.24,
        sigma_coeff: 0.0462,
        sigma_exp: 0.7822,
    }
}

/// Field polarization relative to the plane of incidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarization {
    /// Electric field perpendicular to the plane of incidence.
    Te,
    /// Electric field in the plane of incidence.
    Tm,
    /// Power mean of TE and TM; reflection amplitude is real.
    Unpolarized,
}

/// Complex relative permittivity at carrier frequency `f_hz`.
pub fn complex_permittivity(spec: &MaterialSpec, f_hz: f64) -> Result<Complex64> {
    if f_hz <= 0.0 || f_hz.is_nan() {
        return Err(Error::InvalidFrequency(f_hz));
    }
    let f_ghz = f_hz / 1e9;
    let sigma = spec.sigma_coeff * f_ghz.powf(spec.sigma_exp);
    Ok(Complex64::new(spec.eps_r, -17.98 * sigma / f_ghz))
}

/// Complex Fresnel reflection coefficient for a wave in air striking a lossy
/// half space of permittivity `eps` at `theta_i` radians from the normal.
///
/// `theta_i` must lie in `[0, pi/2)`; exactly grazing incidence is rejected
/// because the coefficient degenerates to -1 for every material.
pub fn fresnel_reflection(eps: Complex64, theta_i: f64, pol: Polarization) -> Result<Complex64> {
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta_i) {
        return Err(Error::AngleOutOfTable {
            context: "fresnel incidence angle",
            value: theta_i.to_degrees(),
            min: 0.0,
            max: 90.0,
        });
    }
    let (sin_t, cos_t) = theta_i.sin_cos();
    // Principal square root keeps Im <= 0 for eps = a - jb, the decaying
    // branch under the e^{+j w t} convention.
    let root = (eps - sin_t * sin_t).sqrt();
    let gamma = match pol {
        Polarization::Te => (cos_t - root) / (cos_t + root),
        Polarization::Tm => (eps * cos_t - root) / (eps * cos_t + root),
        Polarization::Unpolarized => {
            let te = (cos_t - root) / (cos_t + root);
            let tm = (eps * cos_t - root) / (eps * cos_t + root);
            let mean_power = 0.5 * (te.norm_sqr() + tm.norm_sqr());
            Complex64::new(mean_power.sqrt(), 0.0)
        }
    };
    Ok(gamma)
}

/// Power reflectance `|Gamma|^2` for the given polarization.
pub fn reflected_power(eps: Complex64, theta_i: f64, pol: Polarization) -> Result<f64> {
    Ok(fresnel_reflection(eps, theta_i, pol)?.norm_sqr())
}
