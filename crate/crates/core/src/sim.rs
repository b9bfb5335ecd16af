//! Monte Carlo engine over fading, relay load, and weather.
//!
//! Time-scale structure: weather (and with it the averaged optical capacity)
//! is constant within an hour; fading and relay traffic redraw every trading
//! epoch of length T_u = min(T_f, T_t). Each epoch the source checks its
//! averaged optical capacity against the threshold, and only in deficit runs
//! the full trading game against freshly drawn relay states.
//!
//! Reproducibility: a master seed plus a (domain, point, epoch) coordinate
//! is folded through a splitmix64 chain into an independent ChaCha8 stream
//! per epoch, so results do not depend on evaluation order and any epoch can
//! be replayed in isolation. Within an epoch, draws happen relay by relay in
//! list order: first-hop fading, second-hop fading, then the Poisson user
//! count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::fso::{average_capacity, FsoLinkParams};
use crate::numeric::CompensatedSum;
use crate::rf::{relay_capacity_raw, sample_fading, DualHopLink, FadingModel, RfHopState, RfLinkParams};
use crate::trading::{relay_no_trade_utility, select_relay, RelayProfile, SourceState};

/// Stream-domain tags keeping the sweep, availability, and ad hoc epoch
/// draws statistically independent even under one master seed.
pub(crate) const DOMAIN_SWEEP: u64 = 1;
pub(crate) const DOMAIN_AVAILABILITY: u64 = 2;

// -- Configuration -----------------------------------------------------------

/// Hop distances of one relay's path (source-relay, relay-destination).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayGeometry {
    pub source_hop_m: f64,
    pub dest_hop_m: f64,
}

/// Everything the engine needs to run an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub fso: FsoLinkParams,
    pub rf: RfLinkParams,
    /// One entry per relay.
    pub relays: Vec<RelayGeometry>,
    /// Licensed bandwidth of every relay (MHz).
    pub w_mhz: f64,
    /// Mean of the Poisson-distributed per-relay user count.
    pub mean_ues: f64,
    /// Rate each connected user requires (Mbps).
    pub per_ue_rate_mbps: f64,
    /// Relay revenue weight per served connection.
    pub service_revenue_weight: f64,
    /// Relay QoS-degradation penalty weight.
    pub qos_penalty_weight: f64,
    /// Source revenue per unit rate (1/Mbps).
    pub revenue_weight: f64,
    /// Minimum acceptable end-to-end rate (Mbps).
    pub capacity_threshold_mbps: f64,
    pub fading: FadingModel,
    /// Epochs simulated per sweep point.
    pub samples_per_point: usize,
    pub seed: u64,
    /// Weather coherence time (s); one hour of constant attenuation.
    pub t_weather_s: f64,
    /// Fading coherence time (s).
    pub t_fading_s: f64,
    /// Traffic coherence time (s).
    pub t_traffic_s: f64,
}

impl Default for SimConfig {
    /// Baseline experiment: one relay at 600 m / 600 m, Rayleigh fading,
    /// 3000 epochs per point, hourly weather with 3 s games.
    fn default() -> Self {
        Self {
            fso: FsoLinkParams::default(),
            rf: RfLinkParams::default(),
            relays: vec![RelayGeometry { source_hop_m: 600.0, dest_hop_m: 600.0 }],
            w_mhz: 20.0,
            mean_ues: 5.0,
            per_ue_rate_mbps: 3.0,
            service_revenue_weight: 1.0,
            qos_penalty_weight: 0.5,
            revenue_weight: 1.0,
            capacity_threshold_mbps: 80.0,
            fading: FadingModel::Rayleigh,
            samples_per_point: 3000,
            seed: 12345,
            t_weather_s: 3600.0,
            t_fading_s: 3.0,
            t_traffic_s: 300.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.fso.validate()?;
        self.rf.validate()?;
        if self.relays.is_empty() {
            return Err(Error::Validation("at least one relay is required".into()));
        }
        for (i, geo) in self.relays.iter().enumerate() {
            for (name, d) in
                [("source_hop_m", geo.source_hop_m), ("dest_hop_m", geo.dest_hop_m)]
            {
                if !(d.is_finite() && d >= self.rf.ref_distance_m) {
                    return Err(Error::Validation(format!(
                        "relay {i}: {name} = {d} must be at least the far-field reference \
                         distance {}",
                        self.rf.ref_distance_m
                    )));
                }
            }
        }
        for (name, value) in [
            ("w_mhz", self.w_mhz),
            ("per_ue_rate_mbps", self.per_ue_rate_mbps),
            ("service_revenue_weight", self.service_revenue_weight),
            ("qos_penalty_weight", self.qos_penalty_weight),
            ("revenue_weight", self.revenue_weight),
            ("capacity_threshold_mbps", self.capacity_threshold_mbps),
            ("t_weather_s", self.t_weather_s),
            ("t_fading_s", self.t_fading_s),
            ("t_traffic_s", self.t_traffic_s),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Validation(format!(
                    "{name} = {value} must be finite and strictly positive"
                )));
            }
        }
        if !(self.mean_ues.is_finite() && self.mean_ues >= 0.0) {
            return Err(Error::Validation(format!(
                "mean_ues = {} must be finite and non-negative",
                self.mean_ues
            )));
        }
        if self.samples_per_point == 0 {
            return Err(Error::Validation("samples_per_point must be at least 1".into()));
        }
        if self.game_interval_s() > self.t_weather_s {
            return Err(Error::Validation(format!(
                "game interval {} s must not exceed the weather coherence time {} s",
                self.game_interval_s(),
                self.t_weather_s
            )));
        }
        Ok(())
    }

    /// Trading epoch length T_u = min(T_f, T_t) (s): the game replays
    /// whenever fading or traffic decorrelates, whichever happens first.
    pub fn game_interval_s(&self) -> f64 {
        self.t_fading_s.min(self.t_traffic_s)
    }

    /// Trading games within one weather interval.
    pub fn games_per_weather_interval(&self) -> usize {
        (self.t_weather_s / self.game_interval_s()).floor().max(1.0) as usize
    }

    /// Same experiment with the first relay's geometry replicated `n` times;
    /// used by the relay-count sweeps.
    pub fn with_relay_count(&self, n: usize) -> Self {
        let mut cfg = self.clone();
        cfg.relays = vec![self.relays[0]; n];
        cfg
    }

    fn source_state(&self, avg_fso_capacity_mbps: f64) -> SourceState {
        SourceState {
            avg_fso_capacity_mbps,
            capacity_threshold_mbps: self.capacity_threshold_mbps,
            revenue_weight: self.revenue_weight,
        }
    }
}

// -- RNG streams -------------------------------------------------------------

fn splitmix_next(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut x = *state;
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives an independent ChaCha8 stream for one (domain, point, epoch)
/// coordinate under the master seed.
pub(crate) fn derive_stream(master: u64, domain: u64, point: u64, epoch: u64) -> ChaCha8Rng {
    let mut state = master;
    let mut acc = splitmix_next(&mut state);
    for id in [domain, point, epoch] {
        let mut id_state = id;
        acc ^= splitmix_next(&mut id_state);
        state = acc;
        acc = splitmix_next(&mut state);
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix_next(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

// -- Epochs ------------------------------------------------------------------

/// Outcome of one trading epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochResult {
    /// Averaged optical capacity during the epoch (Mbps).
    pub c_fso_mbps: f64,
    pub traded: bool,
    /// Chosen relay (index into the config's relay list) when traded.
    pub relay_id: Option<usize>,
    /// Clearing price when traded.
    pub price: Option<f64>,
    /// Traded bandwidth when traded (MHz).
    pub bandwidth_mhz: Option<f64>,
    /// Optical plus (when traded) relayed capacity (Mbps).
    pub total_capacity_mbps: f64,
    /// Source utility of the trade; zero without one.
    pub source_profit: f64,
    /// Per-relay utility gain over the no-trade baseline; nonzero only for
    /// the chosen relay.
    pub relay_profits: Vec<f64>,
}

/// Runs one trading epoch at the given attenuation.
///
/// Computes the averaged optical capacity first; when it already meets the
/// threshold the epoch is optical-only and consumes no randomness. In
/// deficit, channel and load states are drawn per relay and the trading game
/// decides the outcome.
pub fn run_epoch<R: Rng + ?Sized>(
    cfg: &SimConfig,
    kappa_per_km: f64,
    rng: &mut R,
) -> Result<EpochResult> {
    let c_fso = average_capacity(&cfg.fso, kappa_per_km)?;
    run_epoch_with_capacity(cfg, c_fso, rng)
}

/// Epoch with the optical capacity already averaged; the sweep loops call
/// this so the weather-level quadrature runs once per point, not per epoch.
fn run_epoch_with_capacity<R: Rng + ?Sized>(
    cfg: &SimConfig,
    c_fso: f64,
    rng: &mut R,
) -> Result<EpochResult> {
    let n = cfg.relays.len();
    if c_fso >= cfg.capacity_threshold_mbps {
        return Ok(EpochResult {
            c_fso_mbps: c_fso,
            traded: false,
            relay_id: None,
            price: None,
            bandwidth_mhz: None,
            total_capacity_mbps: c_fso,
            source_profit: 0.0,
            relay_profits: vec![0.0; n],
        });
    }

    let mut relays = Vec::with_capacity(n);
    for (id, geo) in cfg.relays.iter().enumerate() {
        let h1 = sample_fading(cfg.fading, rng);
        let h2 = sample_fading(cfg.fading, rng);
        let ues = draw_ue_count(cfg.mean_ues, rng);
        let first = RfHopState::new(&cfg.rf, geo.source_hop_m, h1)?;
        let second = RfHopState::new(&cfg.rf, geo.dest_hop_m, h2)?;
        relays.push(RelayProfile {
            id,
            link: DualHopLink::from_hops(&cfg.rf, &first, &second, cfg.w_mhz),
            connected_ues: ues,
            per_ue_rate_mbps: cfg.per_ue_rate_mbps,
            service_revenue_weight: cfg.service_revenue_weight,
            qos_penalty_weight: cfg.qos_penalty_weight,
        });
    }

    let source = cfg.source_state(c_fso);
    let quote = select_relay(&source, &relays)?;
    let mut relay_profits = vec![0.0; n];
    match quote {
        Some(q) => {
            let chosen = &relays[q.relay_id];
            relay_profits[q.relay_id] = q.relay_utility - relay_no_trade_utility(chosen);
            let relayed = relay_capacity_raw(&chosen.link, q.bandwidth_mhz);
            Ok(EpochResult {
                c_fso_mbps: c_fso,
                traded: true,
                relay_id: Some(q.relay_id),
                price: Some(q.price),
                bandwidth_mhz: Some(q.bandwidth_mhz),
                total_capacity_mbps: c_fso + relayed,
                source_profit: q.source_utility,
                relay_profits,
            })
        }
        None => Ok(EpochResult {
            c_fso_mbps: c_fso,
            traded: false,
            relay_id: None,
            price: None,
            bandwidth_mhz: None,
            total_capacity_mbps: c_fso,
            source_profit: 0.0,
            relay_profits,
        }),
    }
}

/// Poisson draw of the relay's user count; a zero mean degenerates to zero
/// users without consuming randomness.
fn draw_ue_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let draw: f64 = Poisson::new(mean)
        .expect("validated mean must form a Poisson distribution")
        .sample(rng);
    draw as u64
}

// -- Aggregation -------------------------------------------------------------

/// Epoch averages at one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateStats {
    pub mean_capacity_mbps: f64,
    pub mean_source_profit: f64,
    /// Mean over epochs of the summed per-relay profit gains.
    pub mean_total_relay_profit: f64,
    /// Fraction of epochs that closed a trade.
    pub trade_rate: f64,
    /// Fraction of epochs meeting the rate threshold, by optical capacity
    /// alone or through a trade.
    pub availability: f64,
}

/// One sweep point: the attenuation it was run at plus the epoch averages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub kappa_per_km: f64,
    pub stats: AggregateStats,
}

/// Runs `samples_per_point` epochs at every attenuation on the grid.
///
/// Epoch streams are derived from (seed, sweep domain, point index, epoch
/// index); rerunning any point reproduces it bit for bit regardless of grid
/// order.
pub fn sweep_kappa(cfg: &SimConfig, kappa_grid: &[f64]) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    if kappa_grid.is_empty() {
        return Err(Error::Domain {
            name: "kappa_grid",
            value: f64::NAN,
            reason: "attenuation grid must be non-empty",
        });
    }
    let mut points = Vec::with_capacity(kappa_grid.len());
    for (point_idx, &kappa) in kappa_grid.iter().enumerate() {
        let c_fso = average_capacity(&cfg.fso, kappa)?;
        let stats = aggregate_epochs(cfg, c_fso, DOMAIN_SWEEP, point_idx as u64)?;
        points.push(SweepPoint { kappa_per_km: kappa, stats });
    }
    Ok(points)
}

fn aggregate_epochs(
    cfg: &SimConfig,
    c_fso: f64,
    domain: u64,
    point: u64,
) -> Result<AggregateStats> {
    let n = cfg.samples_per_point;
    let mut capacity = CompensatedSum::default();
    let mut source_profit = CompensatedSum::default();
    let mut relay_profit = CompensatedSum::default();
    let mut trades = 0usize;
    let mut available = 0usize;
    for epoch in 0..n {
        let mut rng = derive_stream(cfg.seed, domain, point, epoch as u64);
        let result = run_epoch_with_capacity(cfg, c_fso, &mut rng)?;
        capacity.add(result.total_capacity_mbps);
        source_profit.add(result.source_profit);
        relay_profit.add(result.relay_profits.iter().sum());
        if result.traded {
            trades += 1;
        }
        if result.traded || result.c_fso_mbps >= cfg.capacity_threshold_mbps {
            available += 1;
        }
    }
    let inv = 1.0 / n as f64;
    Ok(AggregateStats {
        mean_capacity_mbps: capacity.value() * inv,
        mean_source_profit: source_profit.value() * inv,
        mean_total_relay_profit: relay_profit.value() * inv,
        trade_rate: trades as f64 * inv,
        availability: available as f64 * inv,
    })
}

/// Mean total capacity versus relay count in a fixed deep-fade regime.
///
/// Each count replicates the first configured relay geometry; each entry is
/// a single-point sweep, so the N=1 entry matches `sweep_kappa` at the same
/// attenuation exactly.
pub fn asymptotic_capacity(
    cfg: &SimConfig,
    kappa_per_km: f64,
    relay_counts: &[usize],
) -> Result<Vec<(usize, f64)>> {
    cfg.validate()?;
    let c_fso = average_capacity(&cfg.fso, kappa_per_km)?;
    if c_fso >= cfg.capacity_threshold_mbps {
        return Err(Error::Precondition(format!(
            "asymptotic regime requires an optical deficit; capacity {c_fso} Mbps exceeds the \
             threshold {}",
            cfg.capacity_threshold_mbps
        )));
    }
    let mut out = Vec::with_capacity(relay_counts.len());
    for &n in relay_counts {
        if n == 0 {
            return Err(Error::Domain {
                name: "relay_count",
                value: 0.0,
                reason: "relay counts must be at least 1",
            });
        }
        let cfg_n = cfg.with_relay_count(n);
        let stats = aggregate_epochs(&cfg_n, c_fso, DOMAIN_SWEEP, 0)?;
        out.push((n, stats.mean_capacity_mbps));
    }
    Ok(out)
}

// -- Availability ------------------------------------------------------------

/// Availability of a weather series per the hour/game two-scale model.
#[derive(Debug, Clone, PartialEq)]
pub struct AvailabilityReport {
    /// Combined availability over the whole series.
    pub availability: f64,
    pub total_hours: usize,
    /// Hours whose averaged optical capacity missed the threshold.
    pub outage_hours: usize,
    /// Per outage hour: (series index, fraction of games that traded).
    pub outage_recovery: Vec<(usize, f64)>,
}

/// Combines per-outage-hour recovery probabilities into series availability:
/// hours that never enter outage count fully, outage hours count by the
/// fraction of games in which trading restored the rate.
pub fn combine_availability(total_hours: usize, outage_recovery: &[f64]) -> f64 {
    assert!(
        outage_recovery.len() <= total_hours,
        "more outage hours than hours in the series"
    );
    if total_hours == 0 {
        return 1.0;
    }
    let clear = (total_hours - outage_recovery.len()) as f64;
    let mut recovered = CompensatedSum::default();
    for &p in outage_recovery {
        assert!((0.0..=1.0).contains(&p), "recovery probability {p} outside [0, 1]");
        recovered.add(p);
    }
    (recovered.value() + clear) / total_hours as f64
}

/// Walks an hourly attenuation series; for each outage hour, Monte Carlo
/// estimates the trade success probability over the hour's games.
pub fn availability(cfg: &SimConfig, kappa_series: &[f64]) -> Result<AvailabilityReport> {
    cfg.validate()?;
    if kappa_series.is_empty() {
        return Err(Error::Domain {
            name: "kappa_series",
            value: f64::NAN,
            reason: "attenuation series must be non-empty",
        });
    }
    let games = cfg.games_per_weather_interval();
    let mut outage_recovery = Vec::new();
    for (hour, &kappa) in kappa_series.iter().enumerate() {
        let c_fso = average_capacity(&cfg.fso, kappa)?;
        if c_fso >= cfg.capacity_threshold_mbps {
            continue;
        }
        let mut successes = 0usize;
        for game in 0..games {
            let mut rng = derive_stream(cfg.seed, DOMAIN_AVAILABILITY, hour as u64, game as u64);
            if run_epoch_with_capacity(cfg, c_fso, &mut rng)?.traded {
                successes += 1;
            }
        }
        outage_recovery.push((hour, successes as f64 / games as f64));
    }
    let recoveries: Vec<f64> = outage_recovery.iter().map(|&(_, p)| p).collect();
    Ok(AvailabilityReport {
        availability: combine_availability(kappa_series.len(), &recoveries),
        total_hours: kappa_series.len(),
        outage_hours: outage_recovery.len(),
        outage_recovery,
    })
}

// -- Tests -------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fso::db_per_km_to_natural;

    fn fast_cfg() -> SimConfig {
        SimConfig { samples_per_point: 120, ..Default::default() }
    }

    #[test]
    fn config_validation() {
        SimConfig::default().validate().unwrap();
        let mut cfg = SimConfig::default();
        cfg.relays.clear();
        assert!(cfg.validate().is_err());
        cfg = SimConfig::default();
        cfg.relays[0].source_hop_m = 10.0;
        assert!(cfg.validate().is_err());
        cfg = SimConfig::default();
        cfg.samples_per_point = 0;
        assert!(cfg.validate().is_err());
        cfg = SimConfig::default();
        cfg.t_fading_s = 7200.0;
        cfg.t_traffic_s = 7200.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn game_interval_is_min_of_coherence_times() {
        let cfg = SimConfig::default();
        assert_eq!(cfg.game_interval_s(), 3.0);
        assert_eq!(cfg.games_per_weather_interval(), 1200);
    }

    #[test]
    fn clear_weather_epoch_is_optical_only() {
        let cfg = fast_cfg();
        let mut rng = derive_stream(1, 0, 0, 0);
        let result = run_epoch(&cfg, 0.0, &mut rng).unwrap();
        assert!(!result.traded);
        assert_eq!(result.total_capacity_mbps, result.c_fso_mbps);
        assert!(result.c_fso_mbps > cfg.capacity_threshold_mbps);
        assert_eq!(result.source_profit, 0.0);
        assert!(result.relay_profits.iter().all(|&p| p == 0.0));
        // The guard consumes no randomness.
        let mut rng2 = derive_stream(1, 0, 0, 0);
        let p1: f64 = rng.random();
        let _ = run_epoch(&cfg, 0.0, &mut rng2).unwrap();
        let p2: f64 = rng2.random();
        assert_eq!(p1, p2);
    }

    #[test]
    fn deep_fade_epoch_relies_on_the_relay() {
        let cfg = fast_cfg();
        let kappa = db_per_km_to_natural(60.0);
        let mut traded_any = false;
        for epoch in 0..20 {
            let mut rng = derive_stream(cfg.seed, 9, 0, epoch);
            let result = run_epoch(&cfg, kappa, &mut rng).unwrap();
            assert!(result.c_fso_mbps < 1e-5);
            if result.traded {
                traded_any = true;
                let deficit = cfg.capacity_threshold_mbps - result.c_fso_mbps;
                let relayed = result.total_capacity_mbps - result.c_fso_mbps;
                assert!(relayed >= deficit - 1e-6, "trade must cover the deficit");
                assert!(result.source_profit > 0.0);
                let id = result.relay_id.unwrap();
                assert!(result.relay_profits[id] > 0.0);
                assert!(result.bandwidth_mhz.unwrap() <= cfg.w_mhz);
            }
        }
        assert!(traded_any, "deep fade with light load should trade sometimes");
    }

    #[test]
    fn epochs_are_bit_reproducible() {
        let cfg = fast_cfg();
        let kappa = db_per_km_to_natural(20.0);
        let mut a = derive_stream(cfg.seed, 3, 7, 11);
        let mut b = derive_stream(cfg.seed, 3, 7, 11);
        assert_eq!(run_epoch(&cfg, kappa, &mut a).unwrap(), run_epoch(&cfg, kappa, &mut b).unwrap());
    }

    #[test]
    fn derived_streams_differ_across_coordinates() {
        let base: Vec<u64> = {
            let mut r = derive_stream(5, 1, 2, 3);
            (0..4).map(|_| r.random()).collect()
        };
        for (m, d, p, e) in [(6, 1, 2, 3), (5, 2, 2, 3), (5, 1, 3, 3), (5, 1, 2, 4)] {
            let mut r = derive_stream(m, d, p, e);
            let other: Vec<u64> = (0..4).map(|_| r.random()).collect();
            assert_ne!(base, other, "stream ({m},{d},{p},{e}) collided");
        }
    }

    #[test]
    fn sweep_is_deterministic_and_sane() {
        let cfg = fast_cfg();
        let grid = [db_per_km_to_natural(18.0), db_per_km_to_natural(25.0)];
        let a = sweep_kappa(&cfg, &grid).unwrap();
        let b = sweep_kappa(&cfg, &grid).unwrap();
        assert_eq!(a, b);
        for point in &a {
            let s = &point.stats;
            assert!((0.0..=1.0).contains(&s.trade_rate));
            assert!((0.0..=1.0).contains(&s.availability));
            assert!(s.mean_capacity_mbps > 0.0);
            assert!(s.mean_source_profit >= 0.0);
        }
        assert!(sweep_kappa(&cfg, &[]).is_err());
    }

    #[test]
    fn sweep_capacity_falls_with_attenuation() {
        // Between clear-ish and deep fog the optical term dominates the
        // trend; MC noise cannot flip a hundred-Mbps gap.
        let cfg = fast_cfg();
        let grid = [db_per_km_to_natural(10.0), db_per_km_to_natural(30.0)];
        let points = sweep_kappa(&cfg, &grid).unwrap();
        assert!(
            points[0].stats.mean_capacity_mbps > points[1].stats.mean_capacity_mbps + 50.0
        );
    }

    #[test]
    fn idle_relays_always_close_the_trade_without_fading() {
        let mut cfg = fast_cfg();
        cfg.mean_ues = 0.0;
        cfg.fading = FadingModel::DeterministicUnit;
        let points = sweep_kappa(&cfg, &[db_per_km_to_natural(40.0)]).unwrap();
        assert_eq!(points[0].stats.trade_rate, 1.0);
        assert_eq!(points[0].stats.availability, 1.0);
    }

    #[test]
    fn fading_blocks_some_trades_even_with_idle_relays() {
        // A deep second-hop fade pushes the required floor bandwidth beyond
        // the licensed band, so a small fraction of epochs cannot trade.
        let mut cfg = fast_cfg();
        cfg.mean_ues = 0.0;
        cfg.samples_per_point = 600;
        let points = sweep_kappa(&cfg, &[db_per_km_to_natural(40.0)]).unwrap();
        let rate = points[0].stats.trade_rate;
        assert!(rate > 0.7 && rate < 1.0, "trade rate = {rate}");
    }

    #[test]
    fn asymptote_matches_single_point_sweep_at_n1() {
        let cfg = fast_cfg();
        let kappa = db_per_km_to_natural(40.0);
        let asym = asymptotic_capacity(&cfg, kappa, &[1, 3]).unwrap();
        let sweep = sweep_kappa(&cfg, &[kappa]).unwrap();
        assert_eq!(asym[0].1, sweep[0].stats.mean_capacity_mbps);
        assert_eq!(asym[0].0, 1);
    }

    #[test]
    fn asymptote_rejects_clear_weather() {
        let cfg = fast_cfg();
        assert!(matches!(
            asymptotic_capacity(&cfg, 0.0, &[1]),
            Err(Error::Precondition(_))
        ));
        assert!(asymptotic_capacity(&cfg, db_per_km_to_natural(40.0), &[0]).is_err());
    }

    #[test]
    fn more_relays_do_not_hurt() {
        let mut cfg = fast_cfg();
        cfg.samples_per_point = 400;
        cfg.mean_ues = 10.0;
        let kappa = db_per_km_to_natural(40.0);
        let res = asymptotic_capacity(&cfg, kappa, &[1, 4]).unwrap();
        // With heavily loaded relays, diversity across four relays must
        // beat one by far more than MC noise.
        assert!(res[1].1 > res[0].1, "N=4 {} vs N=1 {}", res[1].1, res[0].1);
    }

    #[test]
    fn combine_availability_hand_values() {
        // 1000 hours, 6 outage hours at one-half recovery each.
        let recovery = [0.5; 6];
        let a = combine_availability(1000, &recovery);
        assert!((a - 0.997).abs() < 1e-15);
        // Degenerate: no recovery at all leaves the optical-only fraction.
        let zeros = [0.0; 6];
        assert!((combine_availability(1000, &zeros) - 0.994).abs() < 1e-15);
        // No outages at all.
        assert_eq!(combine_availability(1000, &[]), 1.0);
    }

    #[test]
    fn availability_over_series() {
        let mut cfg = fast_cfg();
        cfg.mean_ues = 0.0;
        cfg.fading = FadingModel::DeterministicUnit;
        // Three clear hours, one dense-fog hour; idle unfaded relays
        // recover it fully.
        let series = [0.0, 0.0, db_per_km_to_natural(45.0), 0.0];
        let report = availability(&cfg, &series).unwrap();
        assert_eq!(report.total_hours, 4);
        assert_eq!(report.outage_hours, 1);
        assert_eq!(report.outage_recovery[0].0, 2);
        assert_eq!(report.availability, 1.0);
        assert!(availability(&cfg, &[]).is_err());
    }

    #[test]
    fn availability_with_no_outages_is_one() {
        let cfg = fast_cfg();
        let report = availability(&cfg, &[0.0, 0.0]).unwrap();
        assert_eq!(report.availability, 1.0);
        assert_eq!(report.outage_hours, 0);
    }

    #[test]
    fn relay_count_replication() {
        let cfg = SimConfig::default().with_relay_count(4);
        assert_eq!(cfg.relays.len(), 4);
        assert!(cfg.relays.iter().all(|g| *g == cfg.relays[0]));
    }
}
