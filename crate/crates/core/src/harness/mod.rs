//! Scenario files, Monte Carlo campaigns, result persistence and plots.

mod campaign;
mod config;
mod plot;
mod results;

pub use campaign::{
    ber_sweep, calibrate_cell, null_setup, penalty_key, resolve_penalties, run_comm_mc, run_radar_mc, snr_noise_vars,
    wilson_half_width, with_jobs, PenaltyEntry,
};
pub use config::{
    load_scenario, ArraysSection, CodesSection, CommExperiment, CommSection, DetectorConfig, DetectorSection,
    DopplerDraw, PenaltyMode, PenaltySetting, RadarExperiment, RadarSection, RateSection, ScenarioConfig,
    ScenarioFile, SystemSection, TargetsSection, UserSection, UsersSection,
};
pub use plot::{ber_chart, emit_plots, radar_charts, Chart, Scale, Series};
pub use results::{manifest_path, read_results, write_results, BerRow, MetricsRecord, RadarRow, Rows, RunManifest};
