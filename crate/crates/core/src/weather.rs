//! Hourly visibility series: ingest, attenuation conversion, fog statistics,
//! and synthetic fixtures.
//!
//! File format (bit-exact): UTF-8, LF line endings, header
//! `timestamp,visibility_km`, then one row per hour with an ISO-8601 UTC
//! timestamp (`2023-01-07T14:00:00Z`) and a positive decimal visibility.
//! Series must be strictly chronological and gap-free at exactly one hour
//! spacing; visibility of zero or below is rejected rather than clamped,
//! since the attenuation law diverges there and silent clamping would
//! distort availability numbers downstream.

use std::fmt::Write as _;
use std::path::Path;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fso::attenuation_coefficient;

/// Expected first line of a visibility file.
pub const HEADER: &str = "timestamp,visibility_km";

/// Spacing between consecutive records.
const HOUR: Duration = Duration::hours(1);

/// One hourly visibility observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibilityRecord {
    pub timestamp: DateTime<Utc>,
    pub visibility_km: f64,
}

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

// -- Load / store ------------------------------------------------------------

/// Loads and validates a visibility series from a file.
pub fn load_series(path: &Path) -> Result<Vec<VisibilityRecord>> {
    let raw = std::fs::read_to_string(path)?;
    parse_series(&raw)
}

/// Parses a visibility series from file contents.
pub fn parse_series(raw: &str) -> Result<Vec<VisibilityRecord>> {
    if raw.contains('\r') {
        return Err(Error::Parse {
            line: 1 + raw.split('\r').next().map_or(0, |s| s.matches('\n').count()),
            message: "carriage return found; the format requires LF line endings".into(),
        });
    }
    let mut lines = raw.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == HEADER => {}
        Some((_, header)) => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `{HEADER}`, found `{header}`"),
            })
        }
        None => {
            return Err(Error::Parse { line: 1, message: "empty file, header missing".into() })
        }
    }
    let mut series = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            return Err(Error::Parse { line: line_no, message: "blank line in series".into() });
        }
        let Some((ts_text, vis_text)) = line.split_once(',') else {
            return Err(Error::Parse {
                line: line_no,
                message: "expected two comma-separated fields".into(),
            });
        };
        let naive = chrono::NaiveDateTime::parse_from_str(ts_text, TIMESTAMP_FORMAT).map_err(
            |e| Error::Parse {
                line: line_no,
                message: format!("bad timestamp `{ts_text}`: {e}"),
            },
        )?;
        let timestamp = naive.and_utc();
        let visibility_km: f64 = vis_text.parse().map_err(|e| Error::Parse {
            line: line_no,
            message: format!("bad visibility `{vis_text}`: {e}"),
        })?;
        if !(visibility_km.is_finite() && visibility_km > 0.0) {
            return Err(Error::Validation(format!(
                "line {line_no}: visibility {visibility_km} km must be strictly positive"
            )));
        }
        if let Some(prev) = series.last() {
            let prev: &VisibilityRecord = prev;
            if timestamp <= prev.timestamp {
                return Err(Error::Validation(format!(
                    "line {line_no}: timestamp {timestamp} does not increase over {}",
                    prev.timestamp
                )));
            }
            if timestamp - prev.timestamp != HOUR {
                return Err(Error::Validation(format!(
                    "line {line_no}: series must be gap-free hourly; {} to {timestamp} is not \
                     one hour",
                    prev.timestamp
                )));
            }
        }
        series.push(VisibilityRecord { timestamp, visibility_km });
    }
    Ok(series)
}

/// Renders a series in the exact file format; inverse of [`parse_series`].
pub fn serialize_series(series: &[VisibilityRecord]) -> String {
    let mut out = String::with_capacity(series.len() * 32 + HEADER.len() + 1);
    out.push_str(HEADER);
    out.push('\n');
    for record in series {
        // Shortest round-tripping float representation keeps
        // parse(serialize(s)) the identity.
        let _ = writeln!(
            out,
            "{},{}",
            record.timestamp.format(TIMESTAMP_FORMAT),
            record.visibility_km
        );
    }
    out
}

/// Writes a series to a file in the canonical format.
pub fn write_series(path: &Path, series: &[VisibilityRecord]) -> Result<()> {
    std::fs::write(path, serialize_series(series))?;
    Ok(())
}

// -- Derived quantities ------------------------------------------------------

/// Element-wise attenuation coefficients (natural-log 1/km) for a validated
/// series; output order matches the series.
pub fn to_attenuation(series: &[VisibilityRecord], wavelength_m: f64) -> Result<Vec<f64>> {
    series
        .iter()
        .map(|r| attenuation_coefficient(r.visibility_km, wavelength_m))
        .collect()
}

/// Count and fraction of hours below a visibility threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FogStats {
    pub fog_hours: usize,
    pub fog_fraction: f64,
}

/// Fog climatology of a series: hours with visibility strictly below the
/// threshold (1 km is the conventional fog definition).
pub fn fog_statistics(series: &[VisibilityRecord], threshold_km: f64) -> FogStats {
    let fog_hours = series.iter().filter(|r| r.visibility_km < threshold_km).count();
    let fog_fraction = if series.is_empty() {
        0.0
    } else {
        fog_hours as f64 / series.len() as f64
    };
    FogStats { fog_hours, fog_fraction }
}

// -- Fixtures ----------------------------------------------------------------

/// Generates a deterministic synthetic series: `fog_hours` hours of dense
/// fog scattered uniformly among otherwise clear hours.
///
/// Fog visibilities are kept below 0.65 km so every fog hour is
/// unambiguously an optical outage under the baseline link, and clear hours
/// sit between 5 and 40 km, far above the outage region.
pub fn generate_fixture(hours: usize, fog_hours: usize, seed: u64) -> Result<Vec<VisibilityRecord>> {
    if fog_hours > hours {
        return Err(Error::Validation(format!(
            "cannot place {fog_hours} fog hours into {hours} hours"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Partial Fisher-Yates: the first `fog_hours` entries end up a uniform
    // sample of positions without replacement.
    let mut positions: Vec<usize> = (0..hours).collect();
    for i in 0..fog_hours {
        let j = rng.random_range(i..hours);
        positions.swap(i, j);
    }
    let mut fog: Vec<bool> = vec![false; hours];
    for &p in &positions[..fog_hours] {
        fog[p] = true;
    }
    let start = Utc.with_ymd_and_hms(2023, 1, 1, 0, 0, 0).unwrap();
    let series = (0..hours)
        .map(|h| {
            let visibility: f64 = if fog[h] {
                rng.random_range(0.15..0.65)
            } else {
                rng.random_range(5.0..40.0)
            };
            VisibilityRecord {
                timestamp: start + HOUR * h as i32,
                // Meter resolution keeps the serialized file tidy.
                visibility_km: (visibility * 1000.0).round() / 1000.0,
            }
        })
        .collect();
    Ok(series)
}

// -- Tests -------------------------------------------------------------------
