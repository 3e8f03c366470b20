//! Metric names and their ranking directions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataio::Encoder;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    LowerBetter,
    HigherBetter,
}

impl Direction {
    pub fn tag(self) -> &'static str {
        match self {
            Direction::LowerBetter => "lower_better",
            Direction::HigherBetter => "higher_better",
        }
    }

    pub fn arrow(self) -> &'static str {
        match self {
            Direction::LowerBetter => "↓",
            Direction::HigherBetter => "↑",
        }
    }

    /// Maps a metric value to a score where larger is always better.
    pub fn orient(self, value: f64) -> f64 {
        match self {
            Direction::LowerBetter => -value,
            Direction::HigherBetter => value,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower_better" | "lower" | "down" => Ok(Direction::LowerBetter),
            "higher_better" | "higher" | "up" => Ok(Direction::HigherBetter),
            other => Err(Error::invalid(format!("unknown direction {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricValue {
    pub name: String,
    pub value: f64,
    pub direction: Direction,
}

impl MetricValue {
    pub fn new(name: impl Into<String>, value: f64, direction: Direction) -> Self {
        MetricValue {
            name: name.into(),
            value,
            direction,
        }
    }
}

/// Global embedding metrics, before the encoder suffix is attached.
pub const GLOBAL_METRICS: [(&str, Direction); 13] = [
    ("fid", Direction::LowerBetter),
    ("fid_inf", Direction::LowerBetter),
    ("kd_value", Direction::LowerBetter),
    ("precision", Direction::HigherBetter),
    ("recall", Direction::HigherBetter),
    ("density", Direction::HigherBetter),
    ("coverage", Direction::HigherBetter),
    ("authpct", Direction::HigherBetter),
    ("sw_approx", Direction::LowerBetter),
    ("ct", Direction::HigherBetter),
    ("ct_mod", Direction::HigherBetter),
    ("fls", Direction::LowerBetter),
    ("fls_overfit", Direction::LowerBetter),
];

pub const OBJECT_METRICS: [&str; 5] = [
    "object_count_wass_mean",
    "object_count_jsd_mean",
    "complexity_wass_mean",
    "complexity_jsd_mean",
    "difficult_object_ratio_diff_mean",
];

pub fn encoder_metric_name(base: &str, encoder: Encoder) -> String {
    format!("{base}_{}", encoder.tag())
}

/// Direction of any metric this crate emits, or `None` for foreign names.
pub fn direction_for(name: &str) -> Option<Direction> {
    if OBJECT_METRICS.contains(&name) {
        return Some(Direction::LowerBetter);
    }
    let base = Encoder::ALL
        .iter()
        .find_map(|e| name.strip_suffix(&format!("_{}", e.tag())))?;
    GLOBAL_METRICS.iter().find(|(n, _)| *n == base).map(|&(_, d)| d)
}

/// Every metric name emitted for the given encoders, in table order.
pub fn all_metric_names(encoders: &[Encoder]) -> Vec<String> {
    let mut out = Vec::new();
    for &e in encoders {
        out.extend(GLOBAL_METRICS.iter().map(|(n, _)| encoder_metric_name(n, e)));
    }
    out.extend(OBJECT_METRICS.iter().map(|s| s.to_string()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directions_resolve() {
        assert_eq!(direction_for("kd_value_inception"), Some(Direction::LowerBetter));
        assert_eq!(direction_for("authpct_inception"), Some(Direction::HigherBetter));
        assert_eq!(direction_for("fls_overfit_dino"), Some(Direction::LowerBetter));
        assert_eq!(direction_for("ct_mod_dino"), Some(Direction::HigherBetter));
        assert_eq!(
            direction_for("difficult_object_ratio_diff_mean"),
            Some(Direction::LowerBetter)
        );
        assert_eq!(direction_for("fid"), None);
        assert_eq!(direction_for("bogus_dino"), None);
    }

    #[test]
    fn name_count() {
        assert_eq!(all_metric_names(&Encoder::ALL).len(), 31);
        assert_eq!(all_metric_names(&[Encoder::Dino]).len(), 18);
    }
}
