//! Market-equilibrium spectrum trading between the optical source and RF
//! relays.
//!
//! When fog pushes the averaged optical capacity below the source's
//! threshold, the source tries to lease bandwidth from one relay. Both sides
//! are price takers against their own concave utilities, so each side's best
//! response is a closed-form curve: the source's demand follows the marginal
//! capacity value T(b), each relay's supply follows its QoS penalty. The
//! price where the two curves cross clears the market; the source then picks
//! the relay whose clearing point gives it the most utility.
//!
//! All bandwidths are MHz, rates Mbps, prices utility per MHz.

use crate::error::{Error, Result};
use crate::numeric::{bisect, expand_upper, MAX_ROOT_ITERATIONS};
use crate::rf::{capacity_derivative, relay_capacity_raw, DualHopLink};

/// Relative tolerance for bandwidth root finding (minimum bandwidth, demand
/// roots). Tighter than the contract's 1e-9 so downstream quantities keep
/// headroom.
const ROOT_REL_TOL: f64 = 1.0e-12;

/// Absolute half-width at which the equilibrium price bisection stops; well
/// inside the 1e-6 price tolerance the quote promises.
const PRICE_ABS_TOL: f64 = 1.0e-10;

/// Lower guard of the equilibrium price window when the supply threshold
/// price is zero.
const PRICE_EPSILON: f64 = 1.0e-9;

// -- Agents ------------------------------------------------------------------

/// The buying side: the optical source and its rate requirement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceState {
    /// Turbulence-averaged optical capacity in the current weather (Mbps).
    pub avg_fso_capacity_mbps: f64,
    /// Minimum acceptable end-to-end rate (Mbps).
    pub capacity_threshold_mbps: f64,
    /// Revenue per unit rate (utility per Mbps); scales capacity into the
    /// same units as the spectrum price.
    pub revenue_weight: f64,
}

impl SourceState {
    pub fn validate(&self) -> Result<()> {
        if !(self.capacity_threshold_mbps > 0.0 && self.capacity_threshold_mbps.is_finite()) {
            return Err(Error::Domain {
                name: "capacity_threshold_mbps",
                value: self.capacity_threshold_mbps,
                reason: "must be finite and strictly positive",
            });
        }
        if !(self.revenue_weight > 0.0 && self.revenue_weight.is_finite()) {
            return Err(Error::Domain {
                name: "revenue_weight",
                value: self.revenue_weight,
                reason: "must be finite and strictly positive",
            });
        }
        if !(self.avg_fso_capacity_mbps >= 0.0) {
            return Err(Error::Domain {
                name: "avg_fso_capacity_mbps",
                value: self.avg_fso_capacity_mbps,
                reason: "must be non-negative",
            });
        }
        Ok(())
    }

    /// Rate the relay path must supply: C_th - C_bar_o (Mbps).
    pub fn capacity_deficit_mbps(&self) -> f64 {
        self.capacity_threshold_mbps - self.avg_fso_capacity_mbps
    }

    /// Trading happens only when the optical link alone cannot meet the
    /// threshold.
    pub fn trading_triggered(&self) -> bool {
        self.avg_fso_capacity_mbps < self.capacity_threshold_mbps
    }
}

/// The selling side: one relay, its channel, and its own traffic load.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayProfile {
    pub id: usize,
    pub link: DualHopLink,
    /// Number of user equipments currently served by the relay.
    pub connected_ues: u64,
    /// Rate each connected UE requires (Mbps).
    pub per_ue_rate_mbps: f64,
    /// Revenue weight per served connection.
    pub service_revenue_weight: f64,
    /// Weight of the quadratic QoS-degradation penalty.
    pub qos_penalty_weight: f64,
}

impl RelayProfile {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("per_ue_rate_mbps", self.per_ue_rate_mbps),
            ("service_revenue_weight", self.service_revenue_weight),
            ("qos_penalty_weight", self.qos_penalty_weight),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Domain {
                    name,
                    value,
                    reason: "must be finite and strictly positive",
                });
            }
        }
        if !(self.link.w_mhz.is_finite() && self.link.w_mhz > 0.0) {
            return Err(Error::Domain {
                name: "link.w_mhz",
                value: self.link.w_mhz,
                reason: "must be finite and strictly positive",
            });
        }
        Ok(())
    }

    /// Lowest price at which lending any spectrum beats keeping it:
    /// (2 c2 r [R_ur - r W / M])^+, zero when the relay has spare capacity
    /// or no users.
    pub fn supply_threshold_price(&self) -> f64 {
        if self.connected_ues == 0 {
            return 0.0;
        }
        let m = self.connected_ues as f64;
        let r = self.link.r;
        let spare = self.per_ue_rate_mbps - r * self.link.w_mhz / m;
        (2.0 * self.qos_penalty_weight * r * spare).max(0.0)
    }

    /// Price at which the supply curve saturates at the full band W.
    pub fn supply_saturation_price(&self) -> f64 {
        if self.connected_ues == 0 {
            return 0.0;
        }
        2.0 * self.qos_penalty_weight * self.link.r * self.per_ue_rate_mbps
    }
}

// -- Demand ------------------------------------------------------------------

/// Which branch of the demand rule produced a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemandRegime {
    /// Marginal value balances price: T(b) = p / lambda, b above the floor.
    InteriorRoot,
    /// Price exceeds the interior marginal value but buying the floor
    /// amount still pays; demand sticks at b_min.
    MinimumPlateau,
    /// No bandwidth is worth buying at this price.
    Quit,
}

/// One evaluated point of the source's demand curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandCurvePoint {
    pub price: f64,
    pub bandwidth_mhz: f64,
    pub regime: DemandRegime,
}

/// Smallest leased bandwidth meeting the capacity deficit: the root of
/// relay_capacity(b) = deficit. `None` when even unlimited bandwidth cannot
/// carry the deficit (the capacity saturates at v/ln 2), in which case the
/// source quits.
pub fn min_bandwidth(deficit_mbps: f64, link: &DualHopLink) -> Result<Option<f64>> {
    if !(deficit_mbps > 0.0) {
        return Err(Error::Precondition(format!(
            "capacity deficit must be positive to trade, got {deficit_mbps}"
        )));
    }
    let saturation = link.v_mhz / core::f64::consts::LN_2;
    if link.is_degenerate() || deficit_mbps >= saturation {
        return Ok(None);
    }
    let f = |b: f64| relay_capacity_raw(link, b) - deficit_mbps;
    let hi = expand_upper(&f, -1.0, link.w_mhz.max(1.0), 2.0)?;
    let root = bisect(&f, 1.0e-12, hi, ROOT_REL_TOL, 0.0)?;
    Ok(Some(root))
}

/// The price above which demand drops to zero: the average capacity value
/// per MHz at the floor bandwidth, lambda * r * y(b_min) / (y(b_min) + r).
/// At this price the source's utility at b_min hits zero.
fn demand_cutoff_price(source: &SourceState, link: &DualHopLink, b_min: f64) -> f64 {
    source.revenue_weight * relay_capacity_raw(link, b_min) / b_min
}

/// The source's demand at a given unit price.
///
/// Three branches: below lambda * T(b_min) the interior first-order
/// condition T(b) = p / lambda binds; between that and the cutoff price the
/// floor b_min binds; at or above the cutoff the source quits. Demand is not
/// capped by the relay's W: the cap enters only through the supply side.
pub fn demand(price: f64, source: &SourceState, link: &DualHopLink) -> Result<DemandCurvePoint> {
    if !(price > 0.0 && price.is_finite()) {
        return Err(Error::Domain {
            name: "price",
            value: price,
            reason: "must be finite and strictly positive",
        });
    }
    let deficit = source.capacity_deficit_mbps();
    let Some(b_min) = min_bandwidth(deficit, link)? else {
        return Ok(DemandCurvePoint { price, bandwidth_mhz: 0.0, regime: DemandRegime::Quit });
    };
    demand_given_floor(price, source, link, b_min)
}

/// Demand with the floor bandwidth already solved; lets the equilibrium
/// search evaluate many prices against one b_min.
pub(crate) fn demand_given_floor(
    price: f64,
    source: &SourceState,
    link: &DualHopLink,
    b_min: f64,
) -> Result<DemandCurvePoint> {
    let lambda = source.revenue_weight;
    if price >= demand_cutoff_price(source, link, b_min) {
        return Ok(DemandCurvePoint { price, bandwidth_mhz: 0.0, regime: DemandRegime::Quit });
    }
    if price >= lambda * capacity_derivative(link, b_min) {
        return Ok(DemandCurvePoint {
            price,
            bandwidth_mhz: b_min,
            regime: DemandRegime::MinimumPlateau,
        });
    }
    // Interior branch: T is strictly decreasing, so the root is unique and
    // lies above b_min.
    let target = price / lambda;
    let f = |b: f64| target - capacity_derivative(link, b);
    let hi = expand_upper(&f, -1.0, 2.0 * b_min, 2.0)?;
    let root = bisect(&f, b_min, hi, ROOT_REL_TOL, 0.0)?;
    Ok(DemandCurvePoint { price, bandwidth_mhz: root, regime: DemandRegime::InteriorRoot })
}

/// Source utility of buying `b` MHz at unit price `p`:
/// lambda * relay_capacity(b) - b p. Zero at b = 0.
pub fn source_utility(b_mhz: f64, price: f64, source: &SourceState, link: &DualHopLink) -> f64 {
    assert!(b_mhz >= 0.0, "bandwidth must be non-negative, got {b_mhz}");
    if b_mhz == 0.0 {
        return 0.0;
    }
    source.revenue_weight * relay_capacity_raw(link, b_mhz) - b_mhz * price
}

// -- Supply ------------------------------------------------------------------

/// The relay's supply at a given unit price: zero below the threshold
/// price, affine in between, the whole band W at or above the saturation
/// price. A relay with no users lends everything at any positive price.
pub fn supply(price: f64, relay: &RelayProfile) -> f64 {
    assert!(price > 0.0, "price must be positive, got {price}");
    let w = relay.link.w_mhz;
    if relay.connected_ues == 0 {
        return w;
    }
    if price >= relay.supply_saturation_price() {
        return w;
    }
    if price <= relay.supply_threshold_price() {
        return 0.0;
    }
    let m = relay.connected_ues as f64;
    let r = relay.link.r;
    w - m * relay.per_ue_rate_mbps / r + m * price / (2.0 * relay.qos_penalty_weight * r * r)
}

/// Relay utility of lending `b` MHz at unit price `p`: lease revenue plus
/// service revenue minus the quadratic QoS shortfall on the remaining band.
pub fn relay_utility(b_mhz: f64, price: f64, relay: &RelayProfile) -> Result<f64> {
    if !(b_mhz >= 0.0 && b_mhz <= relay.link.w_mhz) {
        return Err(Error::Domain {
            name: "b_mhz",
            value: b_mhz,
            reason: "lent bandwidth must lie in [0, W]",
        });
    }
    if relay.connected_ues == 0 {
        return Ok(b_mhz * price);
    }
    let m = relay.connected_ues as f64;
    let shortfall =
        relay.per_ue_rate_mbps - (relay.link.w_mhz - b_mhz) * relay.link.r / m;
    Ok(b_mhz * price + relay.service_revenue_weight * m
        - relay.qos_penalty_weight * m * shortfall * shortfall)
}

/// Baseline utility of not trading at all: service revenue minus the QoS
/// penalty on the full band, with the shortfall clamped at zero (spare
/// capacity is not rewarded).
pub fn relay_no_trade_utility(relay: &RelayProfile) -> f64 {
    if relay.connected_ues == 0 {
        return 0.0;
    }
    let m = relay.connected_ues as f64;
    let shortfall =
        (relay.per_ue_rate_mbps - relay.link.w_mhz * relay.link.r / m).max(0.0);
    relay.service_revenue_weight * m - relay.qos_penalty_weight * m * shortfall * shortfall
}

// -- Equilibrium -------------------------------------------------------------

/// A cleared trade between the source and one relay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quote {
    pub relay_id: usize,
    /// Market-clearing unit price.
    pub price: f64,
    /// Traded bandwidth, the demand at the clearing price (MHz).
    pub bandwidth_mhz: f64,
    /// Source utility at the clearing point.
    pub source_utility: f64,
    /// Relay utility at the clearing point (absolute, not the gain over the
    /// no-trade baseline).
    pub relay_utility: f64,
}

/// Finds the price where this relay's supply meets the source's demand.
///
/// Demand is strictly decreasing down to zero at its cutoff price and
/// supply is non-decreasing, so a single bisection over the window between
/// the supply threshold price and the demand cutoff finds the crossing if
/// one exists. `None` means no trade: the deficit is unservable, the window
/// is empty, or supply still exceeds demand just below the cutoff, where
/// demand jumps to zero without crossing.
pub fn market_equilibrium(source: &SourceState, relay: &RelayProfile) -> Result<Option<Quote>> {
    if !source.trading_triggered() {
        return Err(Error::Precondition(format!(
            "market equilibrium undefined: optical capacity {} Mbps already meets threshold {}",
            source.avg_fso_capacity_mbps, source.capacity_threshold_mbps
        )));
    }
    let Some(b_min) = min_bandwidth(source.capacity_deficit_mbps(), &relay.link)? else {
        return Ok(None);
    };
    let cutoff = demand_cutoff_price(source, &relay.link, b_min);
    let lo = relay.supply_threshold_price().max(PRICE_EPSILON);
    let hi = cutoff * (1.0 - 1.0e-12);
    if hi <= lo {
        return Ok(None);
    }
    let excess = |p: f64| -> Result<f64> {
        Ok(demand_given_floor(p, source, &relay.link, b_min)?.bandwidth_mhz - supply(p, relay))
    };
    // Just below the cutoff demand is barely b_min; if supply still exceeds
    // it there, the only sign change is across demand's jump to zero, which
    // is not a crossing.
    if excess(hi)? > 0.0 {
        return Ok(None);
    }
    if excess(lo)? <= 0.0 {
        // Supply meets demand already at the bottom of the window; no
        // interior crossing to quote.
        return Ok(None);
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..MAX_ROOT_ITERATIONS {
        if hi - lo <= PRICE_ABS_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if excess(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let price = 0.5 * (lo + hi);
    // Demand-side quantity is canonical; clamp the last float ulp so the
    // quote never exceeds the licensed band.
    let bandwidth = demand_given_floor(price, source, &relay.link, b_min)?
        .bandwidth_mhz
        .min(relay.link.w_mhz);
    Ok(Some(Quote {
        relay_id: relay.id,
        price,
        bandwidth_mhz: bandwidth,
        source_utility: source_utility(bandwidth, price, source, &relay.link),
        relay_utility: relay_utility(bandwidth, price, relay)?,
    }))
}

/// Runs the equilibrium against every relay and returns the quote that
/// maximizes the source's utility; ties break toward the lowest relay id.
pub fn select_relay(source: &SourceState, relays: &[RelayProfile]) -> Result<Option<Quote>> {
    if relays.is_empty() {
        return Err(Error::Precondition("relay selection needs at least one relay".into()));
    }
    let mut best: Option<Quote> = None;
    for relay in relays {
        let Some(quote) = market_equilibrium(source, relay)? else {
            continue;
        };
        let better = match &best {
            None => true,
            Some(b) => {
                quote.source_utility > b.source_utility
                    || (quote.source_utility == b.source_utility && quote.relay_id < b.relay_id)
            }
        };
        if better {
            best = Some(quote);
        }
    }
    Ok(best)
}

// -- Tests -------------------------------------------------------------------
