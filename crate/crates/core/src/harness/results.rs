//! Result records, their CSV form and the JSON run manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::HalfSpace;

use super::campaign::PenaltyEntry;
use super::config::ScenarioConfig;

/// One `(P, mode, RCS)` cell of the radar experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarRow {
    pub experiment: String,
    pub pulses_per_cpi: usize,
    pub with_comm: bool,
    pub slot_pulses: Option<usize>,
    pub slot_bits: Option<u32>,
    pub rcs_m2: f64,
    pub penalty: f64,
    pub pd: f64,
    /// RMSE over trials that estimated that side's Doppler.
    pub rmse_tr_mps: Option<f64>,
    pub rmse_re_mps: Option<f64>,
    /// RMSE over trials that declared both targets.
    pub rmse_tr_h2_mps: Option<f64>,
    pub rmse_re_h2_mps: Option<f64>,
    pub pd_ci95: f64,
    pub count_h0: u64,
    pub count_h1_tr: u64,
    pub count_h1_re: u64,
    pub count_h2: u64,
    pub estimated_tr: u64,
    pub estimated_re: u64,
    pub trials: u64,
    pub seed: u64,
}

/// One `(M, b, side, SNR)` cell of the communication experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRow {
    pub experiment: String,
    pub side: HalfSpace,
    pub slot_pulses: usize,
    pub slot_bits: u32,
    pub rate_bps: f64,
    pub snr_db: f64,
    pub noise_var: f64,
    pub ber: f64,
    pub ber_ci95: f64,
    pub bit_errors: u64,
    pub bits: u64,
    pub slots: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rows {
    Radar(Vec<RadarRow>),
    Ber(Vec<BerRow>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub rows: Rows,
    pub penalties: Vec<PenaltyEntry>,
    pub seed: u64,
    /// Wall-clock seconds; kept out of the CSV so reruns compare equal.
    pub runtime_s: f64,
}

impl MetricsRecord {
    pub fn experiment(&self) -> &'static str {
        match self.rows {
            Rows::Radar(_) => "radar",
            Rows::Ber(_) => "ber",
        }
    }

    pub fn len(&self) -> usize {
        match &self.rows {
            Rows::Radar(r) => r.len(),
            Rows::Ber(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Appends the rows of another record of the same experiment.
    pub fn merge(&mut self, other: MetricsRecord) -> Result<()> {
        match (&mut self.rows, other.rows) {
            (Rows::Radar(a), Rows::Radar(b)) => a.extend(b),
            (Rows::Ber(a), Rows::Ber(b)) => a.extend(b),
            _ => return Err(Error::InvalidParameter("cannot merge radar and BER records".into())),
        }
        self.penalties.extend(other.penalties);
        self.runtime_s += other.runtime_s;
        Ok(())
    }

    /// Checks probability ranges and count bookkeeping.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match &self.rows {
            Rows::Radar(rows) => {
                for r in rows {
                    let total = r.count_h0 + r.count_h1_tr + r.count_h1_re + r.count_h2;
                    if total != r.trials || !(0.0..=1.0).contains(&r.pd) || r.estimated_tr > r.trials || r.estimated_re > r.trials {
                        return bad(format!("inconsistent radar cell P = {}, RCS = {}", r.pulses_per_cpi, r.rcs_m2));
                    }
                    for v in [r.rmse_tr_mps, r.rmse_re_mps, r.rmse_tr_h2_mps, r.rmse_re_h2_mps].into_iter().flatten() {
                        if !(v >= 0.0 && v.is_finite()) {
                            return bad(format!("bad RMSE {v}"));
                        }
                    }
                }
            }
            Rows::Ber(rows) => {
                for r in rows {
                    if r.bit_errors > r.bits || !(0.0..=1.0).contains(&r.ber) || r.bits != r.slots * r.slot_bits as u64 {
                        return bad(format!("inconsistent BER cell M = {}, b = {}, SNR = {}", r.slot_pulses, r.slot_bits, r.snr_db));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        match &self.rows {
            Rows::Radar(rows) => rows.iter().try_for_each(|r| w.serialize(r))?,
            Rows::Ber(rows) => rows.iter().try_for_each(|r| w.serialize(r))?,
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
    }

    /// Parses a results CSV back into rows. Runtime and penalties live in
    /// the manifest and are not recovered.
    pub fn from_csv(text: &str) -> Result<Self> {
        let err = |message: String| Error::Parse {
            what: "results CSV",
            message,
        };
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let headers = reader.headers()?.clone();
        if headers.get(0) != Some("experiment") {
            return Err(err("first column must be `experiment`".into()));
        }
        let records: Vec<csv::StringRecord> = reader.records().collect::<std::result::Result<_, _>>()?;
        let Some(first) = records.first() else {
            return Err(err("no result rows".into()));
        };
        let id = first.get(0).unwrap_or_default().to_string();
        if let Some(other) = records.iter().find(|r| r.get(0) != Some(id.as_str())) {
            return Err(err(format!(
                "mismatched experiment ids `{id}` and `{}`",
                other.get(0).unwrap_or_default()
            )));
        }
        fn rows<T: serde::de::DeserializeOwned>(headers: &csv::StringRecord, records: &[csv::StringRecord]) -> Result<Vec<T>> {
            records
                .iter()
                .map(|r| r.deserialize(Some(headers)).map_err(Error::from))
                .collect()
        }
        let rows = match id.as_str() {
            "radar" => Rows::Radar(rows(&headers, &records)?),
            "ber" => Rows::Ber(rows(&headers, &records)?),
            other => return Err(err(format!("unknown experiment id `{other}`"))),
        };
        let seed = match &rows {
            Rows::Radar(r) => r[0].seed,
            Rows::Ber(r) => r[0].seed,
        };
        let record = Self {
            rows,
            penalties: Vec::new(),
            seed,
            runtime_s: 0.0,
        };
        record.validate().map_err(|e| err(e.to_string()))?;
        Ok(record)
    }
}

/// JSON sidecar written next to every results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub package: String,
    pub version: String,
    pub results: String,
    pub rows: usize,
    pub seed: u64,
    pub runtime_s: f64,
    pub fa_counting: String,
    pub false_alarm_target: f64,
    pub penalties: Vec<PenaltyEntry>,
    pub config: super::config::ScenarioFile,
}

/// Sidecar path for a results file: `radar.csv` → `radar.manifest.json`.
pub fn manifest_path(results: &Path) -> PathBuf {
    results.with_extension("manifest.json")
}

/// Writes the CSV at `path` and its manifest; returns the manifest path.
pub fn write_results(record: &MetricsRecord, cfg: &ScenarioConfig, path: &Path) -> Result<PathBuf> {
    record.validate()?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, record.to_csv()?)?;
    let manifest = RunManifest {
        experiment: record.experiment().into(),
        package: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        results: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        rows: record.len(),
        seed: record.seed,
        runtime_s: record.runtime_s,
        fa_counting: cfg.detector.fa_counting.as_str().into(),
        false_alarm_target: cfg.detector.false_alarm_target,
        penalties: record.penalties.clone(),
        config: cfg.resolved.clone(),
    };
    let mpath = manifest_path(path);
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Parse {
        what: "run manifest",
        message: e.to_string(),
    })?;
    std::fs::write(&mpath, json + "\n")?;
    Ok(mpath)
}

pub fn read_results(path: &Path) -> Result<MetricsRecord> {
    let text = std::fs::read_to_string(path)?;
    MetricsRecord::from_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ber_record() -> MetricsRecord {
        let row = |snr_db: f64, errors| BerRow {
            experiment: "ber".into(),
            side: HalfSpace::Reflective,
            slot_pulses: 8,
            slot_bits: 2,
            rate_bps: 1000.0,
            snr_db,
            noise_var: 1.5e-17,
            ber: errors as f64 / 200.0,
            ber_ci95: 0.01,
            bit_errors: errors,
            bits: 200,
            slots: 100,
            seed: 9,
        };
        MetricsRecord {
            rows: Rows::Ber(vec![row(-2.5, 40), row(0.1, 3)]),
            penalties: Vec::new(),
            seed: 9,
            runtime_s: 1.0,
        }
    }

    #[test]
    fn csv_round_trip() {
        let rec = ber_record();
        let text = rec.to_csv().unwrap();
        assert!(text.starts_with("experiment,side,slot_pulses"));
        let back = MetricsRecord::from_csv(&text).unwrap();
        assert_eq!(back.rows, rec.rows);
    }

    #[test]
    fn malformed_csv_rejected() {
        assert!(MetricsRecord::from_csv("").is_err());
        assert!(MetricsRecord::from_csv("experiment,x\n").is_err());
        assert!(MetricsRecord::from_csv("foo,bar\n1,2\n").is_err());
        assert!(MetricsRecord::from_csv("experiment,x\nwhat,1\n").is_err());
        let text = ber_record().to_csv().unwrap().replacen(",ber,", ",BER,", 1);
        assert!(MetricsRecord::from_csv(&text).is_err());
        let mixed = ber_record().to_csv().unwrap().replace("\nber,", "\nradar,");
        assert!(MetricsRecord::from_csv(&mixed).is_err());
    }

    #[test]
    fn manifest_written_beside_csv() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ScenarioConfig::default();
        let path = dir.path().join("sub/ber.csv");
        let m = write_results(&ber_record(), &cfg, &path).unwrap();
        assert_eq!(m, dir.path().join("sub/ber.manifest.json"));
        let manifest: RunManifest = serde_json::from_str(&std::fs::read_to_string(&m).unwrap()).unwrap();
        assert_eq!(manifest.fa_counting, "event");
        assert_eq!(manifest.config, cfg.resolved);
        assert_eq!(read_results(&path).unwrap().rows, ber_record().rows);
    }
}
