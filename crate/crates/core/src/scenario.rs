//! Scenario files: human-unit TOML configuration with baseline defaults,
//! dotted-key overrides, and exact round-trip dumping.
//!
//! Every key has a default equal to the baseline parameter setting, so an
//! absent file or empty table is a complete, runnable scenario. Units in the
//! file are the ones practitioners quote (nm, dBi, dBm/MHz, dB/km); the
//! accessors convert to the internal SI/linear forms exactly once.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fso::FsoLinkParams;
use crate::rf::{DualHopLink, FadingModel, RfHopState, RfLinkParams};
use crate::sim::{RelayGeometry, SimConfig};
use crate::trading::{RelayProfile, SourceState};

/// Full experiment description as read from a scenario file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub fso: FsoSection,
    pub rf: RfSection,
    pub market: MarketSection,
    pub curves: CurvesSection,
    pub sweep: SweepSection,
    pub asymptote: AsymptoteSection,
    pub weather: WeatherSection,
}

/// Optical link, mirroring [`FsoLinkParams`] in plot-friendly units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FsoSection {
    pub aperture_diameter_m: f64,
    pub beam_divergence_rad: f64,
    pub link_distance_m: f64,
    pub wavelength_nm: f64,
    pub responsivity_a_per_w: f64,
    pub noise_variance_a2: f64,
    pub tx_power_w: f64,
    pub bandwidth_mhz: f64,
    pub cn2: f64,
}

impl Default for FsoSection {
    fn default() -> Self {
        Self {
            aperture_diameter_m: 0.05,
            beam_divergence_rad: 3.5e-3,
            link_distance_m: 1000.0,
            wavelength_nm: 1550.0,
            responsivity_a_per_w: 0.5,
            noise_variance_a2: 1.0e-14,
            tx_power_w: 0.02,
            bandwidth_mhz: 1000.0,
            cn2: 5.0e-14,
        }
    }
}

/// RF plane, mirroring [`RfLinkParams`] with antenna gains in dBi and the
/// noise floor in dBm/MHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfSection {
    pub carrier_wavelength_m: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub ref_distance_m: f64,
    pub path_loss_exponent: f64,
    pub noise_psd_dbm_per_mhz: f64,
    pub source_power_w: f64,
    pub relay_power_w: f64,
}

impl Default for RfSection {
    fn default() -> Self {
        Self {
            carrier_wavelength_m: 0.0857,
            tx_gain_dbi: 10.0,
            rx_gain_dbi: 10.0,
            ref_distance_m: 80.0,
            path_loss_exponent: 3.5,
            noise_psd_dbm_per_mhz: -114.0,
            source_power_w: 0.2,
            relay_power_w: 0.2,
        }
    }
}

/// Market and Monte Carlo settings shared by sweeps, asymptotes, and
/// availability runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarketSection {
    /// One `[source_hop_m, dest_hop_m]` pair per relay.
    pub relay_geometry_m: Vec<[f64; 2]>,
    pub licensed_bandwidth_mhz: f64,
    pub mean_ues: f64,
    pub per_ue_rate_mbps: f64,
    pub service_revenue_weight: f64,
    pub qos_penalty_weight: f64,
    pub revenue_weight: f64,
    pub capacity_threshold_mbps: f64,
    pub fading: FadingKind,
    pub samples_per_point: usize,
    pub seed: u64,
    pub weather_coherence_s: f64,
    pub fading_coherence_s: f64,
    pub traffic_coherence_s: f64,
}

impl Default for MarketSection {
    fn default() -> Self {
        let c = SimConfig::default();
        Self {
            relay_geometry_m: c.relays.iter().map(|g| [g.source_hop_m, g.dest_hop_m]).collect(),
            licensed_bandwidth_mhz: c.w_mhz,
            mean_ues: c.mean_ues,
            per_ue_rate_mbps: c.per_ue_rate_mbps,
            service_revenue_weight: c.service_revenue_weight,
            qos_penalty_weight: c.qos_penalty_weight,
            revenue_weight: c.revenue_weight,
            capacity_threshold_mbps: c.capacity_threshold_mbps,
            fading: FadingKind::Rayleigh,
            samples_per_point: c.samples_per_point,
            seed: c.seed,
            weather_coherence_s: c.t_weather_s,
            fading_coherence_s: c.t_fading_s,
            traffic_coherence_s: c.t_traffic_s,
        }
    }
}

/// Serializable fading selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FadingKind {
    Rayleigh,
    Unit,
}

impl From<FadingKind> for FadingModel {
    fn from(kind: FadingKind) -> Self {
        match kind {
            FadingKind::Rayleigh => FadingModel::Rayleigh,
            FadingKind::Unit => FadingModel::DeterministicUnit,
        }
    }
}

/// Static demand/supply/equilibrium curves: the hypothetical optical state
/// and UE load under which the curves are traced, plus the price grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurvesSection {
    pub avg_fso_capacity_mbps: f64,
    pub connected_ues: u64,
    pub price_min: f64,
    pub price_max: f64,
    pub price_points: usize,
}

impl Default for CurvesSection {
    fn default() -> Self {
        Self {
            avg_fso_capacity_mbps: 30.0,
            connected_ues: 25,
            price_min: 0.1,
            price_max: 7.0,
            price_points: 140,
        }
    }
}

/// Attenuation sweep grid in the units the figures use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub kappa_min_db_per_km: f64,
    pub kappa_max_db_per_km: f64,
    pub kappa_points: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { kappa_min_db_per_km: 0.0, kappa_max_db_per_km: 45.0, kappa_points: 19 }
    }
}

/// Relay-count scaling experiment at one fixed attenuation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsymptoteSection {
    pub kappa_db_per_km: f64,
    pub relay_counts: Vec<usize>,
}

impl Default for AsymptoteSection {
    fn default() -> Self {
        Self { kappa_db_per_km: 40.0, relay_counts: (1..=10).collect() }
    }
}

/// Visibility series input and synthetic-fixture parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeatherSection {
    /// Path to an hourly visibility file; empty means "not configured".
    pub series_path: String,
    pub fog_threshold_km: f64,
    pub fixture_hours: usize,
    pub fixture_fog_hours: usize,
    pub fixture_seed: u64,
}

impl Default for WeatherSection {
    fn default() -> Self {
        Self {
            series_path: String::new(),
            fog_threshold_km: 1.0,
            fixture_hours: 1000,
            fixture_fog_hours: 6,
            fixture_seed: 77,
        }
    }
}

// -- Loading -----------------------------------------------------------------

impl Scenario {
    /// Loads a scenario file, then applies `key=value` overrides with dotted
    /// section paths (`market.seed=7`). `path = None` starts from defaults.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let raw = std::fs::read_to_string(p).map_err(|e| {
                    Error::Config(format!("cannot read scenario `{}`: {e}", p.display()))
                })?;
                raw.parse::<toml::Table>()
                    .map_err(|e| Error::Config(format!("scenario `{}`: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for (key, value) in overrides {
            apply_override(&mut table, key, value)?;
        }
        let scenario: Scenario = table
            .try_into()
            .map_err(|e| Error::Config(format!("scenario: {e}")))?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// Serializes the effective configuration; `load` of the output is the
    /// identity.
    pub fn dump(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.sim_config().validate()?;
        let c = &self.curves;
        if !(c.price_min.is_finite() && c.price_min > 0.0 && c.price_max > c.price_min) {
            return Err(Error::Validation(format!(
                "curves: price range [{}, {}] must be positive and increasing",
                c.price_min, c.price_max
            )));
        }
        if c.price_points < 2 {
            return Err(Error::Validation("curves: price_points must be at least 2".into()));
        }
        if !(c.avg_fso_capacity_mbps.is_finite() && c.avg_fso_capacity_mbps >= 0.0) {
            return Err(Error::Validation(format!(
                "curves: avg_fso_capacity_mbps = {} must be non-negative",
                c.avg_fso_capacity_mbps
            )));
        }
        let s = &self.sweep;
        if !(s.kappa_min_db_per_km.is_finite() && s.kappa_min_db_per_km >= 0.0) {
            return Err(Error::Validation(format!(
                "sweep: kappa_min_db_per_km = {} must be non-negative",
                s.kappa_min_db_per_km
            )));
        }
        if s.kappa_points == 0 || (s.kappa_points > 1 && s.kappa_max_db_per_km <= s.kappa_min_db_per_km)
        {
            return Err(Error::Validation(
                "sweep: need kappa_points >= 1 and an increasing kappa range".into(),
            ));
        }
        let a = &self.asymptote;
        if a.relay_counts.is_empty() || a.relay_counts.contains(&0) {
            return Err(Error::Validation(
                "asymptote: relay_counts must be non-empty and positive".into(),
            ));
        }
        if !(a.kappa_db_per_km.is_finite() && a.kappa_db_per_km >= 0.0) {
            return Err(Error::Validation(format!(
                "asymptote: kappa_db_per_km = {} must be non-negative",
                a.kappa_db_per_km
            )));
        }
        let w = &self.weather;
        if w.fixture_fog_hours > w.fixture_hours {
            return Err(Error::Validation(format!(
                "weather: {} fog hours cannot fit in {} fixture hours",
                w.fixture_fog_hours, w.fixture_hours
            )));
        }
        if !(w.fog_threshold_km.is_finite() && w.fog_threshold_km > 0.0) {
            return Err(Error::Validation(format!(
                "weather: fog_threshold_km = {} must be positive",
                w.fog_threshold_km
            )));
        }
        Ok(())
    }

    // -- Unit conversion into core types -------------------------------------

    pub fn fso_params(&self) -> FsoLinkParams {
        let f = &self.fso;
        FsoLinkParams {
            aperture_diameter_m: f.aperture_diameter_m,
            beam_divergence_rad: f.beam_divergence_rad,
            link_distance_m: f.link_distance_m,
            wavelength_m: f.wavelength_nm * 1.0e-9,
            responsivity: f.responsivity_a_per_w,
            noise_variance_a2: f.noise_variance_a2,
            tx_power_w: f.tx_power_w,
            bandwidth_hz: f.bandwidth_mhz * 1.0e6,
            cn2: f.cn2,
        }
    }

    pub fn rf_params(&self) -> RfLinkParams {
        let r = &self.rf;
        RfLinkParams {
            wavelength_m: r.carrier_wavelength_m,
            tx_gain: 10f64.powf(r.tx_gain_dbi / 10.0),
            rx_gain: 10f64.powf(r.rx_gain_dbi / 10.0),
            ref_distance_m: r.ref_distance_m,
            path_loss_exp: r.path_loss_exponent,
            noise_psd_w_per_mhz: 10f64.powf(r.noise_psd_dbm_per_mhz / 10.0) * 1.0e-3,
            source_power_w: r.source_power_w,
            relay_power_w: r.relay_power_w,
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        let m = &self.market;
        SimConfig {
            fso: self.fso_params(),
            rf: self.rf_params(),
            relays: m
                .relay_geometry_m
                .iter()
                .map(|&[l1, l2]| RelayGeometry { source_hop_m: l1, dest_hop_m: l2 })
                .collect(),
            w_mhz: m.licensed_bandwidth_mhz,
            mean_ues: m.mean_ues,
            per_ue_rate_mbps: m.per_ue_rate_mbps,
            service_revenue_weight: m.service_revenue_weight,
            qos_penalty_weight: m.qos_penalty_weight,
            revenue_weight: m.revenue_weight,
            capacity_threshold_mbps: m.capacity_threshold_mbps,
            fading: m.fading.into(),
            samples_per_point: m.samples_per_point,
            seed: m.seed,
            t_weather_s: m.weather_coherence_s,
            t_fading_s: m.fading_coherence_s,
            t_traffic_s: m.traffic_coherence_s,
        }
    }

    /// Source state for static curve tracing, using the hypothetical optical
    /// capacity from `[curves]`.
    pub fn curve_source(&self) -> SourceState {
        SourceState {
            avg_fso_capacity_mbps: self.curves.avg_fso_capacity_mbps,
            capacity_threshold_mbps: self.market.capacity_threshold_mbps,
            revenue_weight: self.market.revenue_weight,
        }
    }

    /// Relay profiles for static curve tracing: unit fading on both hops,
    /// `[curves].connected_ues` UEs at every relay.
    pub fn curve_relays(&self) -> Result<Vec<RelayProfile>> {
        let params = self.rf_params();
        let m = &self.market;
        m.relay_geometry_m
            .iter()
            .enumerate()
            .map(|(id, &[l1, l2])| {
                let first = RfHopState::new(&params, l1, 1.0)?;
                let second = RfHopState::new(&params, l2, 1.0)?;
                Ok(RelayProfile {
                    id,
                    link: DualHopLink::from_hops(&params, &first, &second, m.licensed_bandwidth_mhz),
                    connected_ues: self.curves.connected_ues,
                    per_ue_rate_mbps: m.per_ue_rate_mbps,
                    service_revenue_weight: m.service_revenue_weight,
                    qos_penalty_weight: m.qos_penalty_weight,
                })
            })
            .collect()
    }

    /// Inclusive price grid for curve commands.
    pub fn price_grid(&self) -> Vec<f64> {
        linspace(self.curves.price_min, self.curves.price_max, self.curves.price_points)
    }

    /// Inclusive attenuation grid (dB/km) for the sweep command.
    pub fn sweep_grid_db_per_km(&self) -> Vec<f64> {
        linspace(
            self.sweep.kappa_min_db_per_km,
            self.sweep.kappa_max_db_per_km,
            self.sweep.kappa_points,
        )
    }
}

fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (points - 1) as f64;
    (0..points)
        .map(|i| if i + 1 == points { hi } else { lo + step * i as f64 })
        .collect()
}

/// Sets one dotted-path key in a raw TOML table, parsing the value as a TOML
/// literal when possible and falling back to a bare string.
pub fn apply_override(table: &mut toml::Table, key: &str, value: &str) -> Result<()> {
    let mut parts = key.split('.').peekable();
    let mut current = table;
    loop {
        let part = parts.next().filter(|p| !p.is_empty()).ok_or_else(|| {
            Error::Config(format!("override key `{key}` must be a dotted non-empty path"))
        })?;
        if parts.peek().is_none() {
            current.insert(part.to_string(), parse_override_value(value));
            return Ok(());
        }
        let entry = current
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        current = entry.as_table_mut().ok_or_else(|| {
            Error::Config(format!("override key `{key}`: `{part}` is not a section"))
        })?;
    }
}

fn parse_override_value(value: &str) -> toml::Value {
    // `market.seed=7` should become an integer, `weather.series_path=a.csv`
    // a string; parsing a one-key document distinguishes the two.
    match format!("v = {value}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed table has the key"),
        Err(_) => toml::Value::String(value.to_string()),
    }
}

// -- Tests -------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scenario_matches_core_defaults() {
        let s = Scenario::default();
        // The nm-to-m conversion may differ from the SI literal by one ulp;
        // everything else must match bit for bit.
        let fso = s.fso_params();
        let fso_base = FsoLinkParams::default();
        assert!((fso.wavelength_m / fso_base.wavelength_m - 1.0).abs() < 1e-15);
        assert_eq!(FsoLinkParams { wavelength_m: fso_base.wavelength_m, ..fso }, fso_base);
        assert_eq!(s.rf_params(), RfLinkParams::default());
        let cfg = s.sim_config();
        let base = SimConfig::default();
        assert_eq!(cfg.w_mhz, base.w_mhz);
        assert_eq!(cfg.seed, base.seed);
        assert_eq!(cfg.relays, base.relays);
        assert_eq!(cfg.fading, base.fading);
        s.validate().unwrap();
    }

    #[test]
    fn empty_table_is_the_default_scenario() {
        let s: Scenario = toml::Table::new().try_into().unwrap();
        assert_eq!(s, Scenario::default());
    }

    #[test]
    fn dump_load_round_trip_is_identity() {
        let mut s = Scenario::default();
        s.market.seed = 99;
        s.market.relay_geometry_m = vec![[700.0, 700.0], [600.0, 650.0]];
        s.curves.connected_ues = 40;
        s.weather.series_path = "vis.csv".into();
        let dumped = s.dump();
        let reloaded: Scenario = dumped.parse::<toml::Table>().unwrap().try_into().unwrap();
        assert_eq!(reloaded, s);
        assert_eq!(reloaded.dump(), dumped);
    }

    #[test]
    fn load_applies_file_then_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scenario.toml");
        std::fs::write(&path, "[market]\nseed = 5\nmean_ues = 9.0\n").unwrap();
        let overrides = vec![
            ("market.seed".to_string(), "42".to_string()),
            ("curves.avg_fso_capacity_mbps".to_string(), "25.0".to_string()),
            ("weather.series_path".to_string(), "a.csv".to_string()),
            ("market.fading".to_string(), "unit".to_string()),
        ];
        let s = Scenario::load(Some(&path), &overrides).unwrap();
        assert_eq!(s.market.seed, 42, "override beats file");
        assert_eq!(s.market.mean_ues, 9.0, "file beats default");
        assert_eq!(s.curves.avg_fso_capacity_mbps, 25.0);
        assert_eq!(s.weather.series_path, "a.csv");
        assert_eq!(s.market.fading, FadingKind::Unit);
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let err = Scenario::load(
            None,
            &[("market.sed".to_string(), "1".to_string())],
        )
        .unwrap_err();
        assert!(err.to_string().contains("sed"), "{err}");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scenario.toml");
        std::fs::write(&path, "[market]\nseeed = 5\n").unwrap();
        let err = Scenario::load(Some(&path), &[]).unwrap_err();
        assert!(err.to_string().contains("seeed"), "{err}");
    }

    #[test]
    fn missing_file_and_bad_toml_are_config_errors() {
        let err = Scenario::load(Some(Path::new("/nonexistent/s.toml")), &[]).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("broken.toml");
        std::fs::write(&path, "[market\nseed = 5").unwrap();
        assert!(matches!(Scenario::load(Some(&path), &[]).unwrap_err(), Error::Config(_)));
    }

    #[test]
    fn invalid_values_fail_validation() {
        let err = Scenario::load(
            None,
            &[("market.relay_geometry_m".to_string(), "[]".to_string())],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
        let err = Scenario::load(
            None,
            &[("curves.price_points".to_string(), "1".to_string())],
        )
        .unwrap_err();
        assert!(err.to_string().contains("price_points"), "{err}");
        let err = Scenario::load(
            None,
            &[("sweep.kappa_min_db_per_km".to_string(), "-1".to_string())],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn override_paths_validate_shape() {
        let mut t = toml::Table::new();
        assert!(apply_override(&mut t, "market.seed", "3").is_ok());
        assert!(apply_override(&mut t, "market.seed.x", "3").is_err());
        assert!(apply_override(&mut t, "", "3").is_err());
        assert!(apply_override(&mut t, "market.", "3").is_err());
    }

    #[test]
    fn override_values_keep_toml_types() {
        let mut t = toml::Table::new();
        apply_override(&mut t, "a.int", "7").unwrap();
        apply_override(&mut t, "a.float", "7.5").unwrap();
        apply_override(&mut t, "a.flag", "true").unwrap();
        apply_override(&mut t, "a.text", "hello.csv").unwrap();
        apply_override(&mut t, "a.list", "[[600.0, 700.0]]").unwrap();
        let a = t["a"].as_table().unwrap();
        assert!(a["int"].is_integer());
        assert!(a["float"].is_float());
        assert!(a["flag"].is_bool());
        assert!(a["text"].is_str());
        assert!(a["list"].is_array());
    }

    #[test]
    fn unit_conversions_are_exact() {
        let s = Scenario::load(
            None,
            &[
                ("rf.tx_gain_dbi".to_string(), "20.0".to_string()),
                ("fso.wavelength_nm".to_string(), "850.0".to_string()),
            ],
        )
        .unwrap();
        assert_eq!(s.rf_params().tx_gain, 100.0);
        assert!((s.fso_params().wavelength_m - 850.0e-9).abs() < 1e-22);
    }

    #[test]
    fn curve_accessors_build_consistent_profiles() {
        let s = Scenario::default();
        let relays = s.curve_relays().unwrap();
        assert_eq!(relays.len(), 1);
        assert_eq!(relays[0].connected_ues, 25);
        assert_eq!(relays[0].link.w_mhz, 20.0);
        relays[0].validate().unwrap();
        s.curve_source().validate().unwrap();
        let grid = s.price_grid();
        assert_eq!(grid.len(), 140);
        assert_eq!(*grid.first().unwrap(), 0.1);
        assert_eq!(*grid.last().unwrap(), 7.0);
        assert!(grid.windows(2).all(|w| w[1] > w[0]));
        let sweep = s.sweep_grid_db_per_km();
        assert_eq!(sweep.len(), 19);
        assert_eq!(*sweep.last().unwrap(), 45.0);
    }
}
