//! Free-space optical channel model.
//!
//! Covers the deterministic part of the link (geometric spreading through a
//! Gaussian-beam aperture plus Beer-Lambert weather attenuation via the Kim
//! visibility model), Gamma-Gamma scintillation, and the IM/DD capacity lower
//! bound of the link, both instantaneous and averaged over turbulence.
//!
//! Unit conventions: attenuation `kappa` is kept in natural-log 1/km
//! (Beer-Lambert exponent); dB/km appears only at the user interface and is
//! converted with [`db_per_km_to_natural`]. Distances are meters, wavelengths
//! meters, optical bandwidth Hz, and capacities are returned in Mbps.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::erf::erf;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::numeric::integrate;

/// Natural-log units per dB: kappa_nat = kappa_db * ln(10) / 10.
const NAT_PER_DB: f64 = core::f64::consts::LN_10 / 10.0;

/// Probability mass allowed outside each truncated Gamma factor when
/// averaging capacity over turbulence. Two independent factors give a total
/// untruncated mass below 1e-9.
const GAMMA_TAIL_MASS: f64 = 5.0e-10;

/// Relative tolerance of the turbulence-averaged capacity quadrature.
const AVG_CAPACITY_REL_TOL: f64 = 1.0e-6;

/// Converts a dB/km attenuation figure to natural-log 1/km.
pub fn db_per_km_to_natural(kappa_db: f64) -> f64 {
    kappa_db * NAT_PER_DB
}

/// Converts a natural-log 1/km attenuation figure to dB/km.
pub fn natural_to_db_per_km(kappa: f64) -> f64 {
    kappa / NAT_PER_DB
}

// -- Link parameters ---------------------------------------------------------

/// Physical constants of the optical source-destination link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsoLinkParams {
    /// Receiver aperture diameter (m).
    pub aperture_diameter_m: f64,
    /// Transmit beam divergence half-angle (rad).
    pub beam_divergence_rad: f64,
    /// Source-destination distance (m).
    pub link_distance_m: f64,
    /// Optical carrier wavelength (m).
    pub wavelength_m: f64,
    /// Photodetector responsivity (scalar multiplier on received power).
    pub responsivity: f64,
    /// Receiver noise variance (A^2).
    pub noise_variance_a2: f64,
    /// Average optical transmit power (W).
    pub tx_power_w: f64,
    /// Optical bandwidth (Hz).
    pub bandwidth_hz: f64,
    /// Refractive-index structure parameter (m^-2/3).
    pub cn2: f64,
}

impl Default for FsoLinkParams {
    /// Baseline link: 5 cm aperture, 3.5 mrad divergence, 1 km span, 1550 nm,
    /// 20 mW transmit power, 1 GHz bandwidth, moderate turbulence.
    fn default() -> Self {
        Self {
            aperture_diameter_m: 0.05,
            beam_divergence_rad: 3.5e-3,
            link_distance_m: 1000.0,
            wavelength_m: 1.55e-6,
            responsivity: 0.5,
            noise_variance_a2: 1.0e-14,
            tx_power_w: 0.02,
            bandwidth_hz: 1.0e9,
            cn2: 5.0e-14,
        }
    }
}

impl FsoLinkParams {
    /// Checks the structural invariants of the parameter set.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("aperture_diameter_m", self.aperture_diameter_m),
            ("beam_divergence_rad", self.beam_divergence_rad),
            ("link_distance_m", self.link_distance_m),
            ("wavelength_m", self.wavelength_m),
            ("responsivity", self.responsivity),
            ("noise_variance_a2", self.noise_variance_a2),
            ("tx_power_w", self.tx_power_w),
            ("bandwidth_hz", self.bandwidth_hz),
            ("cn2", self.cn2),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Domain {
                    name,
                    value,
                    reason: "must be finite and strictly positive",
                });
            }
        }
        if self.beam_divergence_rad >= core::f64::consts::FRAC_PI_2 {
            return Err(Error::Domain {
                name: "beam_divergence_rad",
                value: self.beam_divergence_rad,
                reason: "must be below pi/2",
            });
        }
        if self.wavelength_m <= 1.0e-7 || self.wavelength_m >= 1.0e-5 {
            return Err(Error::Domain {
                name: "wavelength_m",
                value: self.wavelength_m,
                reason: "must lie in the optical band (1e-7, 1e-5) m",
            });
        }
        Ok(())
    }

    /// SNR prefactor e * rho^2 * P_o^2 / (2 pi sigma_o^2) of the IM/DD
    /// capacity bound; the channel gains multiply into it squared.
    fn snr_prefactor(&self) -> f64 {
        core::f64::consts::E * self.responsivity * self.responsivity * self.tx_power_w
            * self.tx_power_w
            / (2.0 * core::f64::consts::PI * self.noise_variance_a2)
    }
}

// -- Weather -----------------------------------------------------------------

/// Weather condition expressed as an attenuation coefficient, optionally
/// remembering the visibility it was derived from.
///
/// Constructed through the provided constructors only, so `kappa_per_km`
/// always matches `visibility_km` when the latter is present.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeatherState {
    kappa_per_km: f64,
    visibility_km: Option<f64>,
}

impl WeatherState {
    /// Clear-sky state: no attenuation.
    pub fn clear() -> Self {
        Self { kappa_per_km: 0.0, visibility_km: None }
    }

    /// State with a directly specified attenuation coefficient (1/km).
    pub fn from_kappa(kappa_per_km: f64) -> Result<Self> {
        if !(kappa_per_km.is_finite() && kappa_per_km >= 0.0) {
            return Err(Error::Domain {
                name: "kappa_per_km",
                value: kappa_per_km,
                reason: "must be finite and non-negative",
            });
        }
        Ok(Self { kappa_per_km, visibility_km: None })
    }

    /// State derived from visibility through the Kim model.
    pub fn from_visibility(visibility_km: f64, wavelength_m: f64) -> Result<Self> {
        let kappa = attenuation_coefficient(visibility_km, wavelength_m)?;
        Ok(Self { kappa_per_km: kappa, visibility_km: Some(visibility_km) })
    }

    pub fn kappa_per_km(&self) -> f64 {
        self.kappa_per_km
    }

    pub fn visibility_km(&self) -> Option<f64> {
        self.visibility_km
    }
}

/// Kim-model attenuation coefficient (natural-log 1/km) for a given
/// visibility (km) and carrier wavelength (m).
///
/// The size-distribution exponent is 1.6 above 50 km visibility, 1.3 between
/// 6 and 50 km, and 0.585 * V^(1/3) below 6 km. The piecewise exponent makes
/// the mapping discontinuous at the branch edges for wavelengths away from
/// 550 nm; callers get the branch the visibility falls in, verbatim.
pub fn attenuation_coefficient(visibility_km: f64, wavelength_m: f64) -> Result<f64> {
    if !(visibility_km.is_finite() && visibility_km > 0.0) {
        return Err(Error::Domain {
            name: "visibility_km",
            value: visibility_km,
            reason: "must be finite and strictly positive",
        });
    }
    if !(wavelength_m.is_finite() && wavelength_m > 0.0) {
        return Err(Error::Domain {
            name: "wavelength_m",
            value: wavelength_m,
            reason: "must be finite and strictly positive",
        });
    }
    let exponent = if visibility_km > 50.0 {
        1.6
    } else if visibility_km >= 6.0 {
        1.3
    } else {
        0.585 * visibility_km.cbrt()
    };
    let wavelength_ratio = wavelength_m / 550.0e-9;
    Ok(3.91 / visibility_km * wavelength_ratio.powf(-exponent))
}

/// Average optical power gain: squared-erf aperture collection efficiency
/// times Beer-Lambert attenuation over the link span.
pub fn average_gain(params: &FsoLinkParams, kappa_per_km: f64) -> f64 {
    assert!(
        kappa_per_km >= 0.0,
        "attenuation coefficient must be non-negative, got {kappa_per_km}"
    );
    let spread = core::f64::consts::PI.sqrt() * params.aperture_diameter_m
        / (2.0 * core::f64::consts::SQRT_2 * params.beam_divergence_rad * params.link_distance_m);
    let collection = erf(spread);
    let distance_km = params.link_distance_m / 1000.0;
    collection * collection * (-kappa_per_km * distance_km).exp()
}

// -- Turbulence --------------------------------------------------------------

/// Effective large- and small-scale scintillation parameters of the
/// Gamma-Gamma turbulence law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurbulenceParams {
    pub alpha: f64,
    pub beta: f64,
}

/// Derives Gamma-Gamma shape parameters from the Rytov variance
/// chi^2 = 0.5 * Cn2 * k^(7/6) * L^(11/6) and the aperture Fresnel ratio
/// theta^2 = k d^2 / (4 L), with k the optical wavenumber.
pub fn turbulence_params(params: &FsoLinkParams) -> Result<TurbulenceParams> {
    let k = 2.0 * core::f64::consts::PI / params.wavelength_m;
    let l = params.link_distance_m;
    let chi2 = 0.5 * params.cn2 * k.powf(7.0 / 6.0) * l.powf(11.0 / 6.0);
    let theta2 = k * params.aperture_diameter_m * params.aperture_diameter_m / (4.0 * l);
    let chi_12_5 = chi2.powf(6.0 / 5.0);

    let alpha_exponent = 0.49 * chi2 / (1.0 + 0.18 * theta2 + 0.56 * chi_12_5).powf(7.0 / 6.0);
    let beta_exponent = 0.51 * chi2 * (1.0 + 0.69 * chi_12_5).powf(-5.0 / 6.0)
        / (1.0 + 0.9 * theta2 + 0.62 * theta2 * chi_12_5).powf(5.0 / 6.0);
    // The exponents saturate in chi2, so exp() itself cannot overflow; what
    // can go wrong is chi2 or theta2 overflowing to inf upstream (NaN from
    // inf/inf) or an exponent underflowing to exactly zero (shape = inf).
    let alpha = 1.0 / (alpha_exponent.exp_m1());
    let beta = 1.0 / (beta_exponent.exp_m1());
    if !(alpha.is_finite() && alpha > 0.0 && beta.is_finite() && beta > 0.0) {
        return Err(Error::NumericRange {
            what: "turbulence_params",
            detail: format!("derived alpha = {alpha:e}, beta = {beta:e} outside (0, inf)"),
        });
    }
    Ok(TurbulenceParams { alpha, beta })
}

/// Draws one unit-mean Gamma-Gamma scintillation coefficient as the product
/// of independent unit-mean Gamma variates with shapes alpha and beta.
pub fn sample_turbulence<R: Rng + ?Sized>(tp: &TurbulenceParams, rng: &mut R) -> f64 {
    let large = Gamma::new(tp.alpha, 1.0 / tp.alpha)
        .expect("validated turbulence alpha must form a Gamma distribution");
    let small = Gamma::new(tp.beta, 1.0 / tp.beta)
        .expect("validated turbulence beta must form a Gamma distribution");
    large.sample(rng) * small.sample(rng)
}

// -- Capacity ----------------------------------------------------------------

/// IM/DD capacity lower bound (Mbps) for a given average gain and
/// scintillation coefficient.
pub fn instantaneous_capacity(params: &FsoLinkParams, gain: f64, scintillation: f64) -> f64 {
    assert!(
        (0.0..=1.0).contains(&gain),
        "average gain must lie in [0, 1], got {gain}"
    );
    assert!(
        scintillation >= 0.0,
        "scintillation coefficient must be non-negative, got {scintillation}"
    );
    let snr = params.snr_prefactor() * gain * gain * scintillation * scintillation;
    let bits_per_use = snr.ln_1p() / core::f64::consts::LN_2;
    params.bandwidth_hz / 2.0 * bits_per_use / 1.0e6
}

/// Turbulence-averaged capacity (Mbps) at a given attenuation coefficient.
///
/// The Gamma-Gamma expectation is evaluated as a nested expectation over the
/// two independent Gamma factors with deterministic panel-doubling
/// quadrature, each factor truncated where its tail mass drops below
/// [`GAMMA_TAIL_MASS`]. The result carries no RNG dependence at all, so
/// repeated calls are bit-identical.
pub fn average_capacity(params: &FsoLinkParams, kappa_per_km: f64) -> Result<f64> {
    let tp = turbulence_params(params)?;
    let gain = average_gain(params, kappa_per_km);

    let inner_err = std::cell::Cell::new(None);
    let outer = gamma_expectation(tp.alpha, AVG_CAPACITY_REL_TOL, |x| {
        match gamma_expectation(tp.beta, AVG_CAPACITY_REL_TOL * 0.1, |y| {
            instantaneous_capacity(params, gain, x * y)
        }) {
            Ok(v) => v,
            Err(e) => {
                inner_err.set(Some(e));
                f64::NAN
            }
        }
    });
    if let Some(e) = inner_err.take() {
        return Err(e);
    }
    outer
}

/// Expectation of `f` under a unit-mean Gamma law with the given shape.
///
/// Integrates the weighted integrand over a truncated window. Shapes below 1
/// have an integrable singularity at the origin, removed exactly by the
/// substitution t = x^shape.
fn gamma_expectation<F: Fn(f64) -> f64>(shape: f64, rel_tol: f64, f: F) -> Result<f64> {
    let (lo, hi) = gamma_truncation_bounds(shape);
    let log_norm = shape * shape.ln() - ln_gamma(shape);
    if shape >= 1.0 {
        let weighted = |x: f64| {
            if x <= 0.0 {
                return 0.0;
            }
            (log_norm + (shape - 1.0) * x.ln() - shape * x).exp() * f(x)
        };
        integrate(weighted, lo, hi, rel_tol, 22)
    } else {
        // x = t^(1/shape) turns x^(shape-1) dx into dt / shape.
        let weighted = |t: f64| {
            if t <= 0.0 {
                return (log_norm).exp() / shape * f(0.0);
            }
            let x = t.powf(1.0 / shape);
            (log_norm - shape * x).exp() / shape * f(x)
        };
        integrate(weighted, lo.powf(shape), hi.powf(shape), rel_tol, 22)
    }
}

/// Truncation window [lo, hi] of a unit-mean Gamma law such that the mass
/// outside is below [`GAMMA_TAIL_MASS`] on each side.
fn gamma_truncation_bounds(shape: f64) -> (f64, f64) {
    // Wide sub-exponential starting window; always encloses the target mass.
    let spread = 60.0 / shape.sqrt() + 60.0 / shape;
    let wide_hi = 1.0 + spread;
    let wide_lo = (1.0 - spread).max(0.0);
    if shape > 1.0e4 {
        // Near-Gaussian regime: the wide window is already tight and the
        // incomplete-gamma evaluations get expensive, so use it directly.
        return (wide_lo, wide_hi);
    }
    // Tighten each edge by bisecting the regularized incomplete gamma.
    let mut lo = wide_lo;
    if gamma_lr(shape, shape * 1.0) > GAMMA_TAIL_MASS {
        let (mut a, mut b) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            if gamma_lr(shape, shape * mid) < GAMMA_TAIL_MASS {
                a = mid;
            } else {
                b = mid;
            }
        }
        lo = a;
    }
    let mut hi = wide_hi;
    if gamma_ur(shape, shape * 1.0) > GAMMA_TAIL_MASS {
        let (mut a, mut b) = (1.0, wide_hi);
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            if gamma_ur(shape, shape * mid) > GAMMA_TAIL_MASS {
                a = mid;
            } else {
                b = mid;
            }
        }
        hi = b;
    }
    (lo, hi)
}

// -- Tests -------------------------------------------------------------------
