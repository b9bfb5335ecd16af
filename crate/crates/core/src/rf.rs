//! Dual-hop RF relay channel.
//!
//! The source reaches the destination through a relay: hop 1 carries
//! source-to-relay traffic over leased bandwidth `b`, hop 2 relay-to-
//! destination traffic over the relay's licensed band `W`. The relay decodes
//! and forwards, time-sharing the interval between hops; with the optimal
//! share the end-to-end capacity has the closed form `b r y(b) / (y(b) + r)`
//! where `y(b) = log2(1 + v/b)` is the first-hop spectral efficiency and `r`
//! the second-hop one.
//!
//! Unit conventions: `v` is carried in MHz so `v/b` is dimensionless with
//! `b` in MHz; spectral efficiencies are bit/s/Hz; capacities, MHz times
//! bit/s/Hz, come out in Mbps. Noise is a power spectral density in W/MHz.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};

// -- Parameters --------------------------------------------------------------

/// Physical constants shared by every RF hop in a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfLinkParams {
    /// RF carrier wavelength (m).
    pub wavelength_m: f64,
    /// Transmit antenna gain (linear).
    pub tx_gain: f64,
    /// Receive antenna gain (linear).
    pub rx_gain: f64,
    /// Far-field reference distance of the path-loss model (m).
    pub ref_distance_m: f64,
    /// Path-loss exponent, at least 2.
    pub path_loss_exp: f64,
    /// Noise power spectral density (W/MHz).
    pub noise_psd_w_per_mhz: f64,
    /// Source transmit power on the first hop (W).
    pub source_power_w: f64,
    /// Relay transmit power on the second hop (W).
    pub relay_power_w: f64,
}

impl Default for RfLinkParams {
    /// Baseline: 3.5 GHz carrier, 10 dBi antennas, 80 m far-field reference,
    /// urban exponent 3.5, -114 dBm/MHz noise floor, 0.2 W per hop.
    fn default() -> Self {
        Self {
            wavelength_m: 0.0857,
            tx_gain: 10.0,
            rx_gain: 10.0,
            ref_distance_m: 80.0,
            path_loss_exp: 3.5,
            noise_psd_w_per_mhz: 10f64.powf(-114.0 / 10.0) * 1.0e-3,
            source_power_w: 0.2,
            relay_power_w: 0.2,
        }
    }
}

impl RfLinkParams {
    /// Checks the structural invariants of the parameter set.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("wavelength_m", self.wavelength_m),
            ("tx_gain", self.tx_gain),
            ("rx_gain", self.rx_gain),
            ("ref_distance_m", self.ref_distance_m),
            ("path_loss_exp", self.path_loss_exp),
            ("noise_psd_w_per_mhz", self.noise_psd_w_per_mhz),
            ("source_power_w", self.source_power_w),
            ("relay_power_w", self.relay_power_w),
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
        if self.path_loss_exp < 2.0 {
            return Err(Error::Domain {
                name: "path_loss_exp",
                value: self.path_loss_exp,
                reason: "must be at least 2 (free-space floor)",
            });
        }
        Ok(())
    }
}

/// Average power gain of one hop: free-space gain at the reference distance
/// times the power-law rolloff beyond it.
pub fn path_gain(params: &RfLinkParams, distance_m: f64) -> Result<f64> {
    if !(distance_m.is_finite() && distance_m >= params.ref_distance_m) {
        return Err(Error::Domain {
            name: "distance_m",
            value: distance_m,
            reason: "must be at least the far-field reference distance",
        });
    }
    let free_space = (params.tx_gain * params.rx_gain).sqrt() * params.wavelength_m
        / (4.0 * core::f64::consts::PI * params.ref_distance_m);
    Ok(free_space * free_space * (params.ref_distance_m / distance_m).powf(params.path_loss_exp))
}

// -- Channel state -----------------------------------------------------------

/// One hop's channel state: geometry-determined average gain plus the fading
/// power realization of the current epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfHopState {
    pub distance_m: f64,
    /// Average power gain, always `path_gain(distance_m)`.
    pub gain: f64,
    /// Fading power |h|^2, non-negative, unit mean under Rayleigh.
    pub fading_power: f64,
}

impl RfHopState {
    pub fn new(params: &RfLinkParams, distance_m: f64, fading_power: f64) -> Result<Self> {
        if !(fading_power.is_finite() && fading_power >= 0.0) {
            return Err(Error::Domain {
                name: "fading_power",
                value: fading_power,
                reason: "must be finite and non-negative",
            });
        }
        let gain = path_gain(params, distance_m)?;
        Ok(Self { distance_m, gain, fading_power })
    }
}

/// Spectral efficiency of the second hop over the relay's licensed band.
pub fn second_hop_efficiency(
    params: &RfLinkParams,
    gain: f64,
    fading_power: f64,
    w_mhz: f64,
) -> f64 {
    assert!(w_mhz > 0.0, "licensed bandwidth must be positive, got {w_mhz}");
    let snr = gain * fading_power * params.relay_power_w / (params.noise_psd_w_per_mhz * w_mhz);
    snr.ln_1p() / core::f64::consts::LN_2
}

/// Spectral efficiency of the first hop on `b` MHz of leased bandwidth:
/// y(b) = log2(1 + v/b), strictly decreasing in b.
pub fn first_hop_efficiency(v_mhz: f64, b_mhz: f64) -> Result<f64> {
    assert!(v_mhz > 0.0, "first-hop SNR-bandwidth product must be positive, got {v_mhz}");
    if !(b_mhz.is_finite() && b_mhz > 0.0) {
        return Err(Error::Domain {
            name: "b_mhz",
            value: b_mhz,
            reason: "leased bandwidth must be finite and strictly positive",
        });
    }
    Ok((v_mhz / b_mhz).ln_1p() / core::f64::consts::LN_2)
}

/// The source-relay-destination path reduced to the three numbers the
/// trading game needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualHopLink {
    /// First-hop SNR-bandwidth product g1 |h1|^2 P_S / N0 (MHz).
    pub v_mhz: f64,
    /// Second-hop spectral efficiency (bit/s/Hz).
    pub r: f64,
    /// Relay licensed bandwidth (MHz).
    pub w_mhz: f64,
}

impl DualHopLink {
    pub fn new(v_mhz: f64, r: f64, w_mhz: f64) -> Self {
        Self { v_mhz, r, w_mhz }
    }

    /// Builds the link from per-hop channel states.
    pub fn from_hops(
        params: &RfLinkParams,
        first: &RfHopState,
        second: &RfHopState,
        w_mhz: f64,
    ) -> Self {
        let v_mhz = first.gain * first.fading_power * params.source_power_w
            / params.noise_psd_w_per_mhz;
        let r = second_hop_efficiency(params, second.gain, second.fading_power, w_mhz);
        Self { v_mhz, r, w_mhz }
    }

    /// True when either hop is in a fade deep enough to carry nothing.
    pub fn is_degenerate(&self) -> bool {
        !(self.v_mhz > 0.0 && self.r > 0.0)
    }
}

// -- Capacity ----------------------------------------------------------------

/// Fraction of time the relay spends receiving from the source so that the
/// two hop capacities balance: q* = r / (y(b) + r).
pub fn optimal_time_share(link: &DualHopLink, b_mhz: f64) -> f64 {
    assert!(b_mhz > 0.0, "leased bandwidth must be positive, got {b_mhz}");
    assert!(!link.is_degenerate(), "time share undefined on a dead link");
    let y = (link.v_mhz / b_mhz).ln_1p() / core::f64::consts::LN_2;
    link.r / (y + link.r)
}

/// Dual-hop capacity (Mbps) on `b` MHz of leased spectrum, at the optimal
/// time share. Strictly increasing and concave in `b`, saturating at v/ln 2.
pub fn relay_capacity(link: &DualHopLink, b_mhz: f64) -> Result<f64> {
    if !(b_mhz > 0.0 && b_mhz <= link.w_mhz) {
        return Err(Error::Domain {
            name: "b_mhz",
            value: b_mhz,
            reason: "leased bandwidth must lie in (0, W]",
        });
    }
    Ok(relay_capacity_raw(link, b_mhz))
}

/// Capacity without the b <= W restriction; the trading game evaluates it on
/// unconstrained bandwidths while locating roots.
pub(crate) fn relay_capacity_raw(link: &DualHopLink, b_mhz: f64) -> f64 {
    debug_assert!(b_mhz > 0.0);
    if link.is_degenerate() {
        return 0.0;
    }
    let y = (link.v_mhz / b_mhz).ln_1p() / core::f64::consts::LN_2;
    b_mhz * link.r * y / (y + link.r)
}

/// Derivative of [`relay_capacity`] with respect to `b` (bit/s/Hz):
/// T(b) = [r y^2 + r^2 y - (r^2/ln 2)(1 - 2^-y)] / (y + r)^2.
///
/// Strictly positive and strictly decreasing, with limits T(0+) = r and
/// T(inf) = 0; this is the marginal value of bandwidth the demand curve
/// prices against.
pub fn capacity_derivative(link: &DualHopLink, b_mhz: f64) -> f64 {
    assert!(b_mhz > 0.0, "leased bandwidth must be positive, got {b_mhz}");
    if link.is_degenerate() {
        return 0.0;
    }
    let r = link.r;
    let y = (link.v_mhz / b_mhz).ln_1p() / core::f64::consts::LN_2;
    // 1 - 2^-y without cancellation at small y.
    let one_minus = -(-y * core::f64::consts::LN_2).exp_m1();
    let denom = y + r;
    (r * y * y + r * r * y - r * r / core::f64::consts::LN_2 * one_minus) / (denom * denom)
}

// -- Fading ------------------------------------------------------------------

/// Small-scale fading law applied per hop, per relay, per epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FadingModel {
    /// |h|^2 = 1 always; used for the deterministic curve experiments.
    DeterministicUnit,
    /// Rayleigh amplitude, so |h|^2 is unit-mean exponential.
    Rayleigh,
}

/// Draws one fading power realization.
pub fn sample_fading<R: Rng + ?Sized>(model: FadingModel, rng: &mut R) -> f64 {
    match model {
        FadingModel::DeterministicUnit => 1.0,
        FadingModel::Rayleigh => Exp1.sample(rng),
    }
}

// -- Tests -------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn assert_rel(actual: f64, expected: f64, rel: f64, what: &str) {
        let err = (actual - expected).abs() / expected.abs().max(1e-300);
        assert!(
            err <= rel,
            "{what}: got {actual:.12e}, expected {expected:.12e} (rel err {err:.2e})"
        );
    }

    /// Baseline-parameter link with unit fading at the given hop distances.
    fn unit_link(l1: f64, l2: f64) -> DualHopLink {
        let params = RfLinkParams::default();
        let h1 = RfHopState::new(&params, l1, 1.0).unwrap();
        let h2 = RfHopState::new(&params, l2, 1.0).unwrap();
        DualHopLink::from_hops(&params, &h1, &h2, 20.0)
    }

    #[test]
    fn default_noise_floor() {
        // -114 dBm/MHz in W/MHz.
        let params = RfLinkParams::default();
        assert_rel(params.noise_psd_w_per_mhz, 3.9810717055349695e-15, 1e-14, "N0");
    }

    #[test]
    fn path_gain_at_reference_distance() {
        let params = RfLinkParams::default();
        let g = path_gain(&params, params.ref_distance_m).unwrap();
        let free_space = (10.0f64 * 0.0857 / (4.0 * core::f64::consts::PI * 80.0)).powi(2);
        assert_rel(g, free_space, 1e-12, "free-space term");
    }

    #[test]
    fn path_gain_reference_values() {
        let params = RfLinkParams::default();
        assert_rel(path_gain(&params, 600.0).unwrap(), 6.289954732763405e-10, 1e-12, "g(600)");
        assert_rel(path_gain(&params, 700.0).unwrap(), 3.667192909453058e-10, 1e-12, "g(700)");
    }

    #[test]
    fn path_gain_power_law() {
        let params = RfLinkParams::default();
        let g1 = path_gain(&params, 300.0).unwrap();
        let g2 = path_gain(&params, 600.0).unwrap();
        assert_rel(g2 / g1, 2f64.powf(-params.path_loss_exp), 1e-12, "doubling rolloff");
    }

    #[test]
    fn path_gain_rejects_near_field() {
        let params = RfLinkParams::default();
        assert!(path_gain(&params, 79.9).is_err());
        assert!(path_gain(&params, f64::NAN).is_err());
    }

    #[test]
    fn dual_hop_link_reference_values() {
        let link = unit_link(600.0, 600.0);
        assert_rel(link.v_mhz, 31599.303896075755, 1e-12, "v(600)");
        assert_rel(link.r, 10.626589891550847, 1e-12, "r(600)");
        let link7 = unit_link(700.0, 700.0);
        assert_rel(link7.v_mhz, 18423.14422196657, 1e-12, "v(700)");
        assert_rel(link7.r, 9.848868914765056, 1e-12, "r(700)");
    }

    #[test]
    fn second_hop_unit_efficiency_at_matched_snr() {
        // Received power equal to the in-band noise power gives log2(2) = 1.
        let params = RfLinkParams::default();
        let gain = params.noise_psd_w_per_mhz * 20.0 / params.relay_power_w;
        assert_rel(second_hop_efficiency(&params, gain, 1.0, 20.0), 1.0, 1e-12, "r at SNR 1");
        assert_eq!(second_hop_efficiency(&params, gain, 0.0, 20.0), 0.0);
    }

    #[test]
    fn first_hop_efficiency_identities() {
        assert_rel(first_hop_efficiency(125.0, 125.0).unwrap(), 1.0, 1e-12, "y(v)");
        assert!(first_hop_efficiency(125.0, 1.0e15).unwrap() < 1e-9);
        // Closed-form inverse: y(v, v/(2^t - 1)) = t.
        for t in [0.5, 1.0, 3.0, 7.0] {
            let b = 125.0 / (2f64.powf(t) - 1.0);
            assert_rel(first_hop_efficiency(125.0, b).unwrap(), t, 1e-12, "y inverse");
        }
        assert!(first_hop_efficiency(125.0, 0.0).is_err());
        assert!(first_hop_efficiency(125.0, -2.0).is_err());
    }

    #[test]
    fn time_share_balances_hops() {
        let link = unit_link(600.0, 700.0);
        for b in [0.5, 2.0, 8.0, 19.5] {
            let q = optimal_time_share(&link, b);
            assert!(q > 0.0 && q < 1.0);
            let y = first_hop_efficiency(link.v_mhz, b).unwrap();
            let rx = q * b * y;
            let tx = (1.0 - q) * b * link.r;
            assert_rel(rx, tx, 1e-12, "hop-capacity balance");
        }
    }

    #[test]
    fn time_share_symmetric_hops() {
        // Pick b so that y(b) = r; then the split is even.
        let link = unit_link(600.0, 600.0);
        let b = link.v_mhz / (2f64.powf(link.r) - 1.0);
        assert_rel(optimal_time_share(&link, b), 0.5, 1e-12, "symmetric split");
    }

    #[test]
    fn time_share_approaches_one_with_fast_second_hop() {
        let link = DualHopLink::new(30000.0, 1.0e9, 20.0);
        assert!(optimal_time_share(&link, 10.0) > 0.999999);
    }

    #[test]
    fn relay_capacity_reference_value() {
        let link = unit_link(600.0, 600.0);
        assert_rel(relay_capacity(&link, 10.0).unwrap(), 55.519565315199344, 1e-12, "C_R(10)");
    }

    #[test]
    fn relay_capacity_domain() {
        let link = unit_link(600.0, 600.0);
        assert!(relay_capacity(&link, 0.0).is_err());
        assert!(relay_capacity(&link, 20.0 + 1e-9).is_err());
        assert!(relay_capacity(&link, 20.0).is_ok());
    }

    #[test]
    fn relay_capacity_monotone_concave() {
        let link = unit_link(600.0, 600.0);
        let grid: Vec<f64> = (1..=200).map(|i| i as f64 * 0.1).collect();
        let caps: Vec<f64> = grid.iter().map(|&b| relay_capacity(&link, b).unwrap()).collect();
        for w in caps.windows(2) {
            assert!(w[1] > w[0], "capacity must strictly increase");
        }
        for w in caps.windows(3) {
            assert!(w[2] - 2.0 * w[1] + w[0] < 0.0, "capacity must be concave");
        }
    }

    #[test]
    fn relay_capacity_saturates_below_v_over_ln2() {
        let link = unit_link(600.0, 600.0);
        let sup = link.v_mhz / core::f64::consts::LN_2;
        for b in [1.0, 100.0, 1.0e4, 1.0e6, 100.0 * 31599.3] {
            let c = relay_capacity_raw(&link, b);
            assert!(c < sup, "capacity must stay below v/ln2 at b = {b}");
        }
        let near = relay_capacity_raw(&link, 100.0 * link.v_mhz);
        assert!(near > 0.99 * sup, "within 1% of the supremum at b = 100 v");
    }

    #[test]
    fn capacity_derivative_reference_value() {
        let link = unit_link(600.0, 600.0);
        assert_rel(capacity_derivative(&link, 10.0), 5.223060508288992, 1e-12, "T(10)");
    }

    #[test]
    fn capacity_derivative_matches_finite_differences() {
        let link = unit_link(600.0, 600.0);
        let mut b = 0.01;
        while b <= 100.0 {
            let h = 1.0e-5 * b;
            let fd = (relay_capacity_raw(&link, b + h) - relay_capacity_raw(&link, b - h))
                / (2.0 * h);
            assert_rel(capacity_derivative(&link, b), fd, 1e-6, "T vs finite difference");
            b *= 1.7;
        }
    }

    #[test]
    fn capacity_derivative_limits() {
        // T(0+) = r: the approach is logarithmic in b, so use a link with
        // small r where y >> r is reachable at representable b.
        let slow = DualHopLink::new(30000.0, 0.01, 20.0);
        let near_zero = capacity_derivative(&slow, 1.0e-9 * slow.v_mhz);
        assert_rel(near_zero, slow.r, 1e-3, "T(0+) = r");
        // T(inf) = 0.
        let link = unit_link(600.0, 600.0);
        assert!(capacity_derivative(&link, 1.0e9 * link.v_mhz) < 1e-8);
    }

    #[test]
    fn capacity_derivative_positive_decreasing() {
        let link = unit_link(600.0, 700.0);
        let mut b = 1.0e-3;
        let mut prev = capacity_derivative(&link, b);
        assert!(prev > 0.0 && prev < link.r);
        while b < 1.0e6 {
            b *= 2.0;
            let t = capacity_derivative(&link, b);
            assert!(t > 0.0, "T must stay positive at b = {b}");
            assert!(t < prev, "T must strictly decrease at b = {b}");
            prev = t;
        }
    }

    #[test]
    fn degenerate_link_carries_nothing() {
        let dead_first = DualHopLink::new(0.0, 5.0, 20.0);
        let dead_second = DualHopLink::new(30000.0, 0.0, 20.0);
        assert!(dead_first.is_degenerate() && dead_second.is_degenerate());
        assert_eq!(relay_capacity(&dead_first, 10.0).unwrap(), 0.0);
        assert_eq!(relay_capacity(&dead_second, 10.0).unwrap(), 0.0);
        assert_eq!(capacity_derivative(&dead_second, 10.0), 0.0);
    }

    #[test]
    fn deterministic_fading_is_unity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            assert_eq!(sample_fading(FadingModel::DeterministicUnit, &mut rng), 1.0);
        }
    }

    #[test]
    fn rayleigh_fading_power_is_unit_mean_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xfade);
        let n = 1_000_000usize;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += sample_fading(FadingModel::Rayleigh, &mut rng);
        }
        let mean = sum / n as f64;
        assert!((mean - 1.0).abs() < 0.005, "mean = {mean}");
    }

    #[test]
    fn rayleigh_fading_matches_analytic_cdf() {
        // Kolmogorov distance between the empirical CDF and 1 - e^-x.
        let mut rng = ChaCha8Rng::seed_from_u64(0xcdf);
        let n = 100_000usize;
        let mut draws: Vec<f64> = (0..n).map(|_| sample_fading(FadingModel::Rayleigh, &mut rng)).collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks: f64 = 0.0;
        for (i, x) in draws.iter().enumerate() {
            let model = -(-x).exp_m1();
            let below = i as f64 / n as f64;
            let above = (i + 1) as f64 / n as f64;
            ks = ks.max((model - below).abs()).max((model - above).abs());
        }
        assert!(ks < 0.01, "Kolmogorov distance = {ks}");
    }

    #[test]
    fn params_validation() {
        RfLinkParams::default().validate().unwrap();
        let mut p = RfLinkParams::default();
        p.path_loss_exp = 1.5;
        assert!(p.validate().is_err());
        p = RfLinkParams::default();
        p.noise_psd_w_per_mhz = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn hop_state_rejects_negative_fading() {
        let params = RfLinkParams::default();
        assert!(RfHopState::new(&params, 600.0, -0.1).is_err());
        let hop = RfHopState::new(&params, 600.0, 0.0).unwrap();
        assert_eq!(hop.fading_power, 0.0);
    }
}
