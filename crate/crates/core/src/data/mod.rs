//! Loop-detector flow data: series, CSV ingest/export, supervised windows,
//! normalization, calendar splits, and synthetic corridors.

mod calendar;
mod csv_io;
mod normalize;
mod series;
mod synthetic;
mod window;

pub use calendar::{split_by_calendar, Calendar, NamedDays, NamedSlots};
pub use csv_io::{
    parse_flow_csv, parse_flow_csv_with, write_flow_csv, LoopManifest, ParseOptions, CSV_HEADER,
};
pub use normalize::Normalizer;
pub use series::{
    slot_timestamp, FlowSeries, RoadDataset, LOOPS_PER_ROAD, SLOTS_PER_DAY, SLOTS_PER_WEEK,
    SLOT_MINUTES, TARGET_INDEX, TIMESTAMP_FORMAT,
};
pub use synthetic::{generate_synthetic, BaseProfile, SpecialEvent, SyntheticConfig};
pub use window::{build_windows, build_windows_with_lags, SampleWindow, INPUT_LAGS};
