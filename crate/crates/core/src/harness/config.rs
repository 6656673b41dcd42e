//! Scenario files: JSON with unit-suffixed keys, every key optional.
//!
//! Absent keys take the reference 28 GHz scenario values. dB/dBm quantities
//! are converted once in [`ScenarioFile::resolve`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{SystemParams, UserSideConfig};
use crate::codebook::{build_codebooks, check_power_of_two, ColumnOrder};
use crate::error::{Error, Result};
use crate::geometry::{AngularDirection, ArrayGeometry, HalfSpace};
use crate::radar::{DetectorGrids, DopplerGrid, FaCounting};
use crate::starris::Transceiver;

fn cfg_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub carrier_freq_ghz: f64,
    pub bandwidth_mhz: f64,
    pub pulse_power_dbm: f64,
    pub pri_ms: f64,
    pub feeder_gain_db: f64,
    pub feeder_distance_m: f64,
    pub feeder_direction_deg: [f64; 2],
    pub radar_noise_psd_dbm_per_hz: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            carrier_freq_ghz: 28.0,
            bandwidth_mhz: 50.0,
            pulse_power_dbm: 30.0,
            pri_ms: 0.25,
            feeder_gain_db: 20.0,
            feeder_distance_m: 3.0,
            feeder_direction_deg: [-45.0, 0.0],
            radar_noise_psd_dbm_per_hz: -164.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArraysSection {
    pub ris_elements: usize,
    pub radar_elements: usize,
}

impl Default for ArraysSection {
    fn default() -> Self {
        Self {
            ris_elements: 256,
            radar_elements: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetsSection {
    pub transmissive_direction_deg: [f64; 2],
    /// Must be the mirror image of the transmissive direction; filled in when absent.
    pub reflective_direction_deg: Option<[f64; 2]>,
    pub range_m: f64,
    pub doppler_transmissive_khz: [f64; 2],
    pub doppler_reflective_khz: [f64; 2],
}

impl Default for TargetsSection {
    fn default() -> Self {
        Self {
            transmissive_direction_deg: [160.0, 0.0],
            reflective_direction_deg: None,
            range_m: 10.0,
            doppler_transmissive_khz: [1.75, 2.0],
            doppler_reflective_khz: [1.75, 2.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodesSection {
    pub column_order: ColumnOrder,
}

impl Default for CodesSection {
    fn default() -> Self {
        Self {
            column_order: ColumnOrder::ReversedTr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserSection {
    pub paths: usize,
    pub tau_min_ns: f64,
    pub tau_max_ns: f64,
    /// Optional cross-check of `⌈(τ_max − τ_min + 2Δ)·B⌉`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taps: Option<usize>,
    pub azimuth_deg: [f64; 2],
    pub elevation_deg: [f64; 2],
    pub path_variance: f64,
}

impl UserSection {
    fn reference(side: HalfSpace) -> Self {
        Self {
            paths: 3,
            tau_min_ns: 0.0,
            tau_max_ns: 260.0,
            taps: Some(15),
            azimuth_deg: match side {
                HalfSpace::Transmissive => [170.0, 180.0],
                HalfSpace::Reflective => [15.0, 25.0],
            },
            elevation_deg: [-25.0, -15.0],
            path_variance: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UsersSection {
    pub transmissive: UserSection,
    pub reflective: UserSection,
}

impl Default for UsersSection {
    fn default() -> Self {
        Self {
            transmissive: UserSection::reference(HalfSpace::Transmissive),
            reflective: UserSection::reference(HalfSpace::Reflective),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyMode {
    Calibrate,
}

/// Either a fixed GIC penalty or `"calibrate"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PenaltySetting {
    Fixed(f64),
    Mode(PenaltyMode),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSection {
    pub doppler_oversampling: usize,
    pub false_alarm_target: f64,
    pub fa_counting: FaCounting,
    pub penalty: PenaltySetting,
    pub calibration_trials: u64,
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self {
            doppler_oversampling: 16,
            false_alarm_target: 1e-4,
            fa_counting: FaCounting::Event,
            penalty: PenaltySetting::Mode(PenaltyMode::Calibrate),
            calibration_trials: 1_000_000,
        }
    }
}

/// How the true Dopplers of each radar trial are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DopplerDraw {
    /// Uniform over the feasible interval.
    #[default]
    Uniform,
    /// Uniform over the detector's search grid.
    OnGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarSection {
    pub pulses_per_cpi: Vec<usize>,
    pub slot_pulses: usize,
    pub slot_bits: u32,
    pub rcs_m2: Vec<f64>,
    pub trials: u64,
    pub doppler_draw: DopplerDraw,
}

impl Default for RadarSection {
    fn default() -> Self {
        Self {
            pulses_per_cpi: vec![8, 16, 32],
            slot_pulses: 4,
            slot_bits: 1,
            rcs_m2: vec![1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 0.1, 0.2, 0.5, 1.0, 10.0],
            trials: 10_000,
            doppler_draw: DopplerDraw::Uniform,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSection {
    pub slot_pulses: usize,
    pub slot_bits: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommSection {
    pub rates: Vec<RateSection>,
    pub snr_db: Vec<f64>,
    pub slots: u64,
}

impl Default for CommSection {
    fn default() -> Self {
        let rate = |slot_pulses, slot_bits| RateSection { slot_pulses, slot_bits };
        Self {
            rates: vec![rate(4, 1), rate(8, 1), rate(8, 2), rate(16, 1), rate(16, 2), rate(16, 3)],
            snr_db: (0..=10).map(|k| -10.0 + 2.5 * k as f64).collect(),
            slots: 100_000,
        }
    }
}

/// The on-disk scenario, with defaults filled in after parsing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub seed: u64,
    pub system: SystemSection,
    pub arrays: ArraysSection,
    pub targets: TargetsSection,
    pub codes: CodesSection,
    pub users: UsersSection,
    pub detector: DetectorSection,
    pub radar: RadarSection,
    pub comm: CommSection,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        Self {
            seed: 1,
            system: SystemSection::default(),
            arrays: ArraysSection::default(),
            targets: TargetsSection::default(),
            codes: CodesSection::default(),
            users: UsersSection::default(),
            detector: DetectorSection::default(),
            radar: RadarSection::default(),
            comm: CommSection::default(),
        }
    }
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            cfg_err(&path, e.into_inner().to_string())
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn resolve(&self) -> Result<ScenarioConfig> {
        ScenarioConfig::from_file(self.clone())
    }
}

/// Detector settings in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub oversampling: usize,
    pub false_alarm_target: f64,
    pub fa_counting: FaCounting,
    pub penalty: PenaltySetting,
    pub calibration_trials: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadarExperiment {
    pub pulses_per_cpi: Vec<usize>,
    pub slot_pulses: usize,
    pub slot_bits: u32,
    pub rcs: Vec<f64>,
    pub trials: u64,
    pub doppler_draw: DopplerDraw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommExperiment {
    pub rates: Vec<(usize, u32)>,
    pub snr_db: Vec<f64>,
    pub slots: u64,
}

/// Validated scenario in SI units.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub system: SystemParams,
    pub ris: ArrayGeometry,
    pub rad: ArrayGeometry,
    pub target_tr: AngularDirection,
    pub target_re: AngularDirection,
    pub target_range: f64,
    /// Feasible Doppler intervals in Hz.
    pub doppler_tr: (f64, f64),
    pub doppler_re: (f64, f64),
    pub column_order: ColumnOrder,
    pub user_tr: UserSideConfig,
    pub user_re: UserSideConfig,
    pub detector: DetectorConfig,
    pub radar: RadarExperiment,
    pub comm: CommExperiment,
    /// The file form with every default filled in.
    pub resolved: ScenarioFile,
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn direction(path: &str, deg: [f64; 2]) -> Result<AngularDirection> {
    AngularDirection::from_degrees(deg[0], deg[1]).map_err(|e| cfg_err(path, e.to_string()))
}

fn positive(path: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(cfg_err(path, format!("must be positive and finite, got {v}")))
    }
}

fn user_side(path: &str, side: HalfSpace, u: &UserSection, system: &SystemParams) -> Result<UserSideConfig> {
    let cfg = UserSideConfig {
        side,
        paths: u.paths,
        tau_min: u.tau_min_ns * 1e-9,
        tau_max: u.tau_max_ns * 1e-9,
        azimuth: (u.azimuth_deg[0].to_radians(), u.azimuth_deg[1].to_radians()),
        elevation: (u.elevation_deg[0].to_radians(), u.elevation_deg[1].to_radians()),
        path_variance: u.path_variance,
    };
    cfg.validate(system).map_err(|e| cfg_err(path, e.to_string()))?;
    if let Some(taps) = u.taps {
        let derived = cfg.taps(system);
        if taps != derived {
            return Err(cfg_err(
                &format!("{path}.taps"),
                format!("{taps} taps given but the delay spread implies {derived}"),
            ));
        }
    }
    Ok(cfg)
}

impl ScenarioConfig {
    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        let s = &file.system;
        let system = SystemParams {
            carrier_freq: positive("system.carrier_freq_ghz", s.carrier_freq_ghz)? * 1e9,
            bandwidth: positive("system.bandwidth_mhz", s.bandwidth_mhz)? * 1e6,
            pri: positive("system.pri_ms", s.pri_ms)? * 1e-3,
            pulse_power: db_to_linear(s.pulse_power_dbm - 30.0),
            feeder_gain: db_to_linear(s.feeder_gain_db),
            feeder_distance: positive("system.feeder_distance_m", s.feeder_distance_m)?,
            feeder_direction: direction("system.feeder_direction_deg", s.feeder_direction_deg)?,
            // a unit-energy matched filter maps density N₀ to per-sample variance N₀
            radar_noise_var: db_to_linear(s.radar_noise_psd_dbm_per_hz - 30.0),
        };
        system.validate().map_err(|e| cfg_err("system", e.to_string()))?;

        let ris = ArrayGeometry::square(file.arrays.ris_elements).map_err(|e| cfg_err("arrays.ris_elements", e.to_string()))?;
        let rad = ArrayGeometry::square(file.arrays.radar_elements)
            .map_err(|e| cfg_err("arrays.radar_elements", e.to_string()))?;

        let t = &file.targets;
        let target_tr = direction("targets.transmissive_direction_deg", t.transmissive_direction_deg)?;
        if target_tr.half_space() != HalfSpace::Transmissive {
            return Err(cfg_err("targets.transmissive_direction_deg", "not in the transmissive half-space"));
        }
        let target_re = target_tr.mirror();
        if let Some(re) = t.reflective_direction_deg {
            let expect = target_re.to_degrees();
            if (re[0] - expect[0]).abs() > 1e-9 || (re[1] - expect[1]).abs() > 1e-9 {
                return Err(cfg_err(
                    "targets.reflective_direction_deg",
                    format!(
                        "must mirror the transmissive direction, i.e. [{:.6}, {:.6}]",
                        expect[0], expect[1]
                    ),
                ));
            }
        }
        let target_range = positive("targets.range_m", t.range_m)?;
        let limit = system.max_unambiguous_doppler();
        let interval = |path: &str, khz: [f64; 2]| -> Result<(f64, f64)> {
            let (lo, hi) = (khz[0] * 1e3, khz[1] * 1e3);
            if !(lo < hi) {
                return Err(cfg_err(path, "interval bounds must be increasing"));
            }
            if lo < -limit || hi > limit {
                return Err(cfg_err(
                    path,
                    format!("({lo} Hz, {hi} Hz) exceeds the unambiguous interval (±{limit} Hz)"),
                ));
            }
            Ok((lo, hi))
        };
        let doppler_tr = interval("targets.doppler_transmissive_khz", t.doppler_transmissive_khz)?;
        let doppler_re = interval("targets.doppler_reflective_khz", t.doppler_reflective_khz)?;

        let user_tr = user_side("users.transmissive", HalfSpace::Transmissive, &file.users.transmissive, &system)?;
        let user_re = user_side("users.reflective", HalfSpace::Reflective, &file.users.reflective, &system)?;

        let d = &file.detector;
        if d.doppler_oversampling == 0 {
            return Err(cfg_err("detector.doppler_oversampling", "must be at least 1"));
        }
        if !(d.false_alarm_target > 0.0 && d.false_alarm_target < 1.0) {
            return Err(cfg_err("detector.false_alarm_target", "must lie in (0, 1)"));
        }
        if let PenaltySetting::Fixed(eta) = d.penalty {
            positive("detector.penalty", eta)?;
        }
        let detector = DetectorConfig {
            oversampling: d.doppler_oversampling,
            false_alarm_target: d.false_alarm_target,
            fa_counting: d.fa_counting,
            penalty: d.penalty,
            calibration_trials: d.calibration_trials,
        };

        let r = &file.radar;
        if r.pulses_per_cpi.is_empty() {
            return Err(cfg_err("radar.pulses_per_cpi", "at least one CPI length is required"));
        }
        for (k, &p) in r.pulses_per_cpi.iter().enumerate() {
            let path = format!("radar.pulses_per_cpi[{k}]");
            check_power_of_two("P", p).map_err(|e| cfg_err(&path, e.to_string()))?;
            if p < 2 {
                return Err(cfg_err(&path, "P must be at least 2"));
            }
            if p % r.slot_pulses.max(1) != 0 || r.slot_pulses > p {
                return Err(cfg_err(&path, format!("P = {p} is not a multiple of slot_pulses = {}", r.slot_pulses)));
            }
        }
        build_codebooks(r.slot_pulses, r.slot_bits, ColumnOrder::Natural)
            .map_err(|e| cfg_err("radar.slot_pulses", e.to_string()))?;
        for (k, &rcs) in r.rcs_m2.iter().enumerate() {
            if !(rcs >= 0.0 && rcs.is_finite()) {
                return Err(cfg_err(&format!("radar.rcs_m2[{k}]"), "RCS must be non-negative"));
            }
        }
        if r.trials == 0 {
            return Err(cfg_err("radar.trials", "must be positive"));
        }
        let radar = RadarExperiment {
            pulses_per_cpi: r.pulses_per_cpi.clone(),
            slot_pulses: r.slot_pulses,
            slot_bits: r.slot_bits,
            rcs: r.rcs_m2.clone(),
            trials: r.trials,
            doppler_draw: r.doppler_draw,
        };

        let c = &file.comm;
        let mut rates = Vec::with_capacity(c.rates.len());
        for (k, rate) in c.rates.iter().enumerate() {
            build_codebooks(rate.slot_pulses, rate.slot_bits, ColumnOrder::Natural)
                .map_err(|e| cfg_err(&format!("comm.rates[{k}]"), e.to_string()))?;
            rates.push((rate.slot_pulses, rate.slot_bits));
        }
        for (k, snr) in c.snr_db.iter().enumerate() {
            if !snr.is_finite() {
                return Err(cfg_err(&format!("comm.snr_db[{k}]"), "must be finite"));
            }
        }
        let comm = CommExperiment {
            rates,
            snr_db: c.snr_db.clone(),
            slots: c.slots,
        };

        let mut resolved = file.clone();
        resolved.targets.reflective_direction_deg = Some(target_re.to_degrees());
        for (u, cfg) in [(&mut resolved.users.transmissive, &user_tr), (&mut resolved.users.reflective, &user_re)] {
            u.taps = Some(cfg.taps(&system));
        }

        Ok(Self {
            seed: file.seed,
            system,
            ris,
            rad,
            target_tr,
            target_re,
            target_range,
            doppler_tr,
            doppler_re,
            column_order: file.codes.column_order,
            user_tr,
            user_re,
            detector,
            radar,
            comm,
            resolved,
        })
    }

    pub fn transceiver(&self) -> Result<Transceiver> {
        Transceiver::new(self.system.clone(), self.ris, self.rad, self.target_tr)
    }

    pub fn grids(&self, cpi_pulses: usize) -> Result<DetectorGrids> {
        let o = self.detector.oversampling;
        Ok(DetectorGrids {
            transmissive: DopplerGrid::over_interval(self.doppler_tr.0, self.doppler_tr.1, cpi_pulses, self.system.pri, o)?,
            reflective: DopplerGrid::over_interval(self.doppler_re.0, self.doppler_re.1, cpi_pulses, self.system.pri, o)?,
        })
    }

    pub fn user(&self, side: HalfSpace) -> &UserSideConfig {
        match side {
            HalfSpace::Transmissive => &self.user_tr,
            HalfSpace::Reflective => &self.user_re,
        }
    }

    pub fn doppler_interval(&self, side: HalfSpace) -> (f64, f64) {
        match side {
            HalfSpace::Transmissive => self.doppler_tr,
            HalfSpace::Reflective => self.doppler_re,
        }
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioFile::default().resolve().expect("reference scenario is valid")
    }
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    ScenarioFile::from_json(&text)?.resolve()
}
