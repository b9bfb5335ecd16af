//! Simulation library for a hybrid RF/FSO backhaul with market-based
//! spectrum trading.
//!
//! The crate models an optical source-destination link whose capacity
//! collapses under fog, a pool of RF relays willing to lease bandwidth, and
//! the pricing game between them: the source buys the bandwidth that
//! maximizes its utility, each relay quotes the price that clears its own
//! supply, and a Monte Carlo engine measures throughput and availability of
//! the combined system over fading, relay-population, and weather processes.
//!
//! Modules:
//! - [`fso`]: optical channel (attenuation, turbulence, IM/DD capacity)
//! - [`rf`]: dual-hop relayed RF channel and time-share capacity
//! - [`trading`]: demand, supply, market equilibrium, relay selection
//! - [`sim`]: Monte Carlo epochs, sweeps, and availability
//! - [`weather`]: visibility time series ingest and fog statistics
//! - [`scenario`]: TOML scenario files binding everything together

pub mod error;
pub mod fso;
pub mod numeric;
pub mod rf;
pub mod scenario;
pub mod sim;
pub mod trading;
pub mod weather;

pub use error::{Error, Result};
