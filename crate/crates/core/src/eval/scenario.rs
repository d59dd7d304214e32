use std::fmt;
use std::ops::Range;
use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::data::{
    build_windows, Calendar, NamedDays, Normalizer, RoadDataset, INPUT_LAGS, SLOTS_PER_DAY,
    SLOTS_PER_WEEK,
};
use crate::error::{Error, Result};
use crate::lifecycle::{retrain_with, train_batch_with, transfer, OnlineConfig, TrainingConfig};
use crate::nn::{NetworkModel, NetworkSpec};

use super::r2::{r2_windowed, PredictionTrace, R2Series, R2Summary};
use super::runner::{run_offline, run_online};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scenario {
    Ps1,
    Ps2,
    Ps3,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Ps1 => "PS1",
            Scenario::Ps2 => "PS2",
            Scenario::Ps3 => "PS3",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Setting {
    Offline,
    Online,
}

impl Setting {
    pub fn as_str(self) -> &'static str {
        match self {
            Setting::Offline => "offline",
            Setting::Online => "online",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Label used for the PS2 model trained from scratch on target January.
pub const SCRATCH_LABEL: &str = "scratch";

/// Which branch of the scenario matrix a report belongs to. `donor` is the
/// donor road name, [`SCRATCH_LABEL`], or the target road name for PS3.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ScenarioId {
    pub scenario: Scenario,
    pub setting: Setting,
    pub donor: String,
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.scenario, self.setting, self.donor)
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub id: ScenarioId,
    /// Timestamp of slot 0 of the target dataset.
    pub origin: NaiveDateTime,
    pub trace: PredictionTrace,
    pub r2: R2Series,
    pub summary: R2Summary,
    pub deployment_slot: usize,
}

impl ScenarioReport {
    fn new(
        id: ScenarioId,
        origin: NaiveDateTime,
        trace: PredictionTrace,
        window: usize,
        deployment_slot: usize,
    ) -> Result<Self> {
        let r2 = r2_windowed(&trace, window)?;
        let summary = r2.summary();
        Ok(Self {
            id,
            origin,
            trace,
            r2,
            summary,
            deployment_slot,
        })
    }

    /// R² summary over the part of the trace whose slots fall in `span`,
    /// recomputed from scratch so that reports with different test spans can
    /// be compared on the same slots.
    pub fn summary_over(&self, span: Range<usize>) -> Result<R2Summary> {
        Ok(r2_windowed(&self.trace.restrict(span), self.r2.window())?.summary())
    }
}

fn default_year_days() -> usize {
    365
}

fn default_window() -> usize {
    SLOTS_PER_WEEK
}

fn default_retrain() -> TrainingConfig {
    TrainingConfig::retrain_default()
}

/// Settings for the full scenario matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_year_days")]
    pub year_days: usize,
    #[serde(default = "default_window")]
    pub r2_window: usize,
    #[serde(default = "NetworkSpec::standard")]
    pub network: NetworkSpec,
    /// Donor models on their own year 1.
    #[serde(default)]
    pub donor_training: TrainingConfig,
    /// PS3 model on target year 1.
    #[serde(default)]
    pub target_training: TrainingConfig,
    /// Transferred donors on target January.
    #[serde(default = "default_retrain")]
    pub retrain: TrainingConfig,
    /// Fresh model on target January.
    #[serde(default = "default_retrain")]
    pub scratch: TrainingConfig,
    #[serde(default)]
    pub online: OnlineConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            year_days: default_year_days(),
            r2_window: default_window(),
            network: NetworkSpec::standard(),
            donor_training: TrainingConfig::default(),
            target_training: TrainingConfig::default(),
            retrain: default_retrain(),
            scratch: default_retrain(),
            online: OnlineConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn calendar(&self) -> Result<Calendar> {
        Calendar::new(self.year_days)
    }

    pub fn validate(&self) -> Result<()> {
        self.calendar().map_err(|e| Error::Config(e.to_string()))?;
        if self.r2_window == 0 {
            return Err(Error::Config("r2_window must be at least 1".into()));
        }
        self.network
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        for cfg in [
            &self.donor_training,
            &self.target_training,
            &self.retrain,
            &self.scratch,
        ] {
            cfg.validate()?;
        }
        self.online.validate()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}

/// Progress notifications from [`run_scenarios_with`].
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioEvent<'a> {
    Training {
        label: &'a str,
        epochs: usize,
    },
    Epoch {
        label: &'a str,
        epoch: usize,
        loss: f64,
    },
    Tested {
        id: &'a ScenarioId,
        mean_r2: Option<f64>,
    },
}

pub fn run_scenarios(
    donors: &[RoadDataset],
    target: &RoadDataset,
    config: &ScenarioConfig,
) -> Result<Vec<ScenarioReport>> {
    run_scenarios_with(donors, target, config, |_| {})
}

/// Runs PS1, PS2 (retrained donors, then scratch) and PS3, each offline and
/// then online, in that order.
pub fn run_scenarios_with(
    donors: &[RoadDataset],
    target: &RoadDataset,
    config: &ScenarioConfig,
    mut progress: impl FnMut(ScenarioEvent<'_>),
) -> Result<Vec<ScenarioReport>> {
    config.validate()?;
    let cal = config.calendar()?;
    check_calendar(target, &cal, target)?;
    for d in donors {
        check_calendar(d, &cal, target)?;
    }

    let year1 = slots(&cal.year1());
    let january = slots(&cal.january_year2());
    let test = slots(&cal.test_year2());
    let february = slots(&cal.february_onward_year2());
    let test_windows = build_windows(target, test)?;
    let february_windows = build_windows(target, february)?;
    let origin = target.start();

    let mut train = |label: &str,
                     data: &RoadDataset,
                     range: Range<usize>,
                     cfg: &TrainingConfig,
                     start: Option<NetworkModel>|
     -> Result<(NetworkModel, Normalizer)> {
        let norm = Normalizer::fit(data, range.clone())?;
        let windows = norm.apply_windows(&build_windows(
            data,
            range.start.max(INPUT_LAGS)..range.end,
        )?)?;
        progress(ScenarioEvent::Training {
            label,
            epochs: cfg.epochs,
        });
        let on_epoch = |epoch, loss| progress(ScenarioEvent::Epoch { label, epoch, loss });
        let outcome = match start {
            Some(model) => retrain_with(model, &windows, cfg, on_epoch)?,
            None => train_batch_with(config.network, &windows, cfg, on_epoch)?,
        };
        Ok((outcome.model, norm))
    };

    let mut strategies: Vec<Strategy> = Vec::new();
    let mut donor_models = Vec::with_capacity(donors.len());
    for d in donors {
        let (model, norm) = train(
            d.road_name(),
            d,
            year1.clone(),
            &config.donor_training,
            None,
        )?;
        strategies.push(Strategy {
            scenario: Scenario::Ps1,
            donor: d.road_name().to_string(),
            model: transfer(&model),
            normalizer: norm,
            deployment_slot: cal.release_slot(),
        });
        donor_models.push(model);
    }
    for (d, model) in donors.iter().zip(&donor_models) {
        let label = format!("{}->{}", d.road_name(), target.road_name());
        let (model, norm) = train(
            &label,
            target,
            january.clone(),
            &config.retrain,
            Some(transfer(model)),
        )?;
        strategies.push(Strategy {
            scenario: Scenario::Ps2,
            donor: d.road_name().to_string(),
            model,
            normalizer: norm,
            deployment_slot: cal.february_slot(),
        });
    }
    let (model, norm) = train(SCRATCH_LABEL, target, january, &config.scratch, None)?;
    strategies.push(Strategy {
        scenario: Scenario::Ps2,
        donor: SCRATCH_LABEL.to_string(),
        model,
        normalizer: norm,
        deployment_slot: cal.february_slot(),
    });
    let (model, norm) = train(
        target.road_name(),
        target,
        year1,
        &config.target_training,
        None,
    )?;
    strategies.push(Strategy {
        scenario: Scenario::Ps3,
        donor: target.road_name().to_string(),
        model,
        normalizer: norm,
        deployment_slot: cal.release_slot(),
    });

    let mut reports = Vec::with_capacity(strategies.len() * 2);
    for s in strategies {
        let windows = match s.scenario {
            Scenario::Ps2 => &february_windows,
            _ => &test_windows,
        };
        for setting in [Setting::Offline, Setting::Online] {
            let trace = match setting {
                Setting::Offline => run_offline(&s.model, &s.normalizer, windows)?,
                Setting::Online => run_online(&s.model, &s.normalizer, windows, &config.online)?.0,
            };
            let id = ScenarioId {
                scenario: s.scenario,
                setting,
                donor: s.donor.clone(),
            };
            let report =
                ScenarioReport::new(id, origin, trace, config.r2_window, s.deployment_slot)?;
            progress(ScenarioEvent::Tested {
                id: &report.id,
                mean_r2: report.summary.mean_r2,
            });
            reports.push(report);
        }
    }
    Ok(reports)
}

struct Strategy {
    scenario: Scenario,
    donor: String,
    model: NetworkModel,
    normalizer: Normalizer,
    deployment_slot: usize,
}

fn slots(days: &NamedDays) -> Range<usize> {
    days.days.start * SLOTS_PER_DAY..days.days.end * SLOTS_PER_DAY
}

fn check_calendar(data: &RoadDataset, cal: &Calendar, target: &RoadDataset) -> Result<()> {
    let needed = cal.total_days() * SLOTS_PER_DAY;
    if data.len() != needed {
        return Err(Error::Contract(format!(
            "road {} spans {} slots, the {}-day calendar needs {needed}",
            data.road_name(),
            data.len(),
            cal.total_days()
        )));
    }
    if data.start() != target.start() {
        return Err(Error::Contract(format!(
            "road {} starts at {}, target {} starts at {}",
            data.road_name(),
            data.start(),
            target.road_name(),
            target.start()
        )));
    }
    Ok(())
}
