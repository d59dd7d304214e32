//! Seeded synthetic corridors: a weekly commuter profile with special
//! events and drift, propagated loop to loop, plus per-loop sensor noise.

use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::series::{FlowSeries, RoadDataset, LOOPS_PER_ROAD, SLOTS_PER_DAY};
use crate::error::{Error, Result};

/// Daily flow template over 96 slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum BaseProfile {
    /// Explicit per-slot values.
    Values { values: Vec<f64> },
    /// Night floor, daytime plateau, and morning/evening rush-hour bumps.
    Commuter {
        night: f64,
        midday: f64,
        morning_peak: f64,
        evening_peak: f64,
    },
}

impl Default for BaseProfile {
    fn default() -> Self {
        BaseProfile::Commuter {
            night: 40.0,
            midday: 260.0,
            morning_peak: 220.0,
            evening_peak: 180.0,
        }
    }
}

impl BaseProfile {
    pub fn template(&self) -> Vec<f64> {
        match self {
            BaseProfile::Values { values } => values.clone(),
            BaseProfile::Commuter {
                night,
                midday,
                morning_peak,
                evening_peak,
            } => (0..SLOTS_PER_DAY)
                .map(|s| {
                    let hour = (s as f64 + 0.5) / 4.0;
                    let logistic = |x: f64| 1.0 / (1.0 + (-x).exp());
                    let plateau = logistic((hour - 7.0) / 0.8) * logistic((21.5 - hour) / 0.8);
                    let bump =
                        |center: f64, width: f64| (-0.5 * ((hour - center) / width).powi(2)).exp();
                    night
                        + (midday - night) * plateau
                        + morning_peak * bump(8.0, 1.0)
                        + evening_peak * bump(18.0, 1.4)
                })
                .collect(),
        }
    }
}

/// A perturbation applied to every slot of days `[start_day, end_day)`:
/// `v ← v · scale + offset + slot_offsets[slot_of_day]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecialEvent {
    pub start_day: i64,
    pub end_day: i64,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub slot_offsets: Option<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

fn default_road() -> String {
    "synthetic".into()
}

fn default_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2017, 1, 1).unwrap()
}

fn default_year_days() -> usize {
    365
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    #[serde(default = "default_road")]
    pub road_name: String,
    #[serde(default = "default_start")]
    pub start_date: NaiveDate,
    pub days: usize,
    pub base_profile: BaseProfile,
    /// Multiplies the whole template (e.g. 1.5 for a busier road).
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Saturday and Sunday flows are the template times this factor.
    pub weekend_scale: f64,
    #[serde(default)]
    pub special_events: Vec<SpecialEvent>,
    /// Fractional level change per year: `v ← v · (1 + drift · day / year_days)`.
    pub drift: f64,
    #[serde(default = "default_year_days")]
    pub year_days: usize,
    /// Standard deviation of independent per-loop Gaussian noise.
    pub noise_std: f64,
    /// Slots by which each loop lags its upstream neighbour.
    pub propagation_lag: usize,
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("synthetic config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Spec(m));
        if self.days < 8 {
            return fail(format!("days = {} but at least 8 are needed", self.days));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return fail(format!(
                "noise_std = {} must be finite and >= 0",
                self.noise_std
            ));
        }
        if !(self.weekend_scale >= 0.0 && self.amplitude >= 0.0) {
            return fail("weekend_scale and amplitude must be >= 0".into());
        }
        if !self.drift.is_finite() || self.year_days == 0 {
            return fail("drift must be finite and year_days positive".into());
        }
        let template = self.base_profile.template();
        if template.len() != SLOTS_PER_DAY || template.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return fail(format!(
                "base_profile needs {SLOTS_PER_DAY} finite non-negative values"
            ));
        }
        for (i, e) in self.special_events.iter().enumerate() {
            if e.start_day >= e.end_day {
                return fail(format!("special_events[{i}] has an empty day range"));
            }
            if let Some(offsets) = &e.slot_offsets {
                if offsets.len() != SLOTS_PER_DAY {
                    return fail(format!(
                        "special_events[{i}].slot_offsets needs {SLOTS_PER_DAY} values"
                    ));
                }
            }
        }
        Ok(())
    }

    /// Noise-free corridor flow at absolute slot `tau` (may precede the start).
    fn corridor_value(&self, template: &[f64], tau: i64) -> f64 {
        let day = tau.div_euclid(SLOTS_PER_DAY as i64);
        let slot = tau.rem_euclid(SLOTS_PER_DAY as i64) as usize;
        let date = self.start_date + Duration::days(day);
        let weekend = matches!(date.weekday(), Weekday::Sat | Weekday::Sun);
        let mut v =
            template[slot] * self.amplitude * if weekend { self.weekend_scale } else { 1.0 };
        for e in &self.special_events {
            if (e.start_day..e.end_day).contains(&day) {
                v = v * e.scale + e.offset + e.slot_offsets.as_ref().map_or(0.0, |o| o[slot]);
            }
        }
        v * (1.0 + self.drift * tau as f64 / (SLOTS_PER_DAY * self.year_days) as f64)
    }
}

/// Loop `k` observes the corridor signal delayed by `k · propagation_lag`
/// slots, plus its own noise, clipped at zero.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<RoadDataset> {
    config.validate()?;
    let template = config.base_profile.template();
    let n = config.days * SLOTS_PER_DAY;
    let lag = config.propagation_lag as i64;
    let history = lag * (LOOPS_PER_ROAD as i64 - 1);
    let signal: Vec<f64> = (-history..n as i64)
        .map(|tau| config.corridor_value(&template, tau))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, config.noise_std).map_err(|e| Error::Spec(e.to_string()))?;
    let start = config
        .start_date
        .and_hms_opt(0, 0, 0)
        .expect("midnight exists");
    let loops = (0..LOOPS_PER_ROAD)
        .map(|k| {
            let delay = k as i64 * lag;
            let values = (0..n as i64)
                .map(|t| {
                    let base = signal[(t - delay + history) as usize];
                    let eps = if config.noise_std > 0.0 {
                        noise.sample(&mut rng)
                    } else {
                        0.0
                    };
                    (base + eps).max(0.0)
                })
                .collect();
            FlowSeries::new(format!("{}-{k}", config.road_name), start, values)
        })
        .collect::<Result<Vec<_>>>()?;
    RoadDataset::new(config.road_name.clone(), loops)
}
