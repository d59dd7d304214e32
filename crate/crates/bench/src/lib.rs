//! Shared fixtures for the benchmarks.

use chrono::NaiveDate;
use flowcast::data::{
    build_windows, generate_synthetic, BaseProfile, Normalizer, RoadDataset, SampleWindow,
    SyntheticConfig,
};

/// A noisy corridor of `days` days starting on a Monday.
pub fn corridor(days: usize) -> RoadDataset {
    generate_synthetic(&SyntheticConfig {
        road_name: "bench".into(),
        start_date: NaiveDate::from_ymd_opt(2017, 1, 2).unwrap(),
        days,
        base_profile: BaseProfile::default(),
        amplitude: 1.0,
        weekend_scale: 0.7,
        special_events: Vec::new(),
        drift: 0.0,
        year_days: 365,
        noise_std: 10.0,
        propagation_lag: 1,
        seed: 1,
    })
    .expect("valid corridor")
}

/// Normalized windows for every slot of `data` that has a full lag history.
pub fn normalized_windows(data: &RoadDataset) -> (Normalizer, Vec<SampleWindow>) {
    let norm = Normalizer::fit(data, 0..data.len()).expect("non-constant loops");
    let windows = build_windows(data, 5..data.len()).expect("in range");
    let scaled = norm.apply_windows(&windows).expect("nine loops");
    (norm, scaled)
}
