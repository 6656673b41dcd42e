//! Persisted calibration results, one small `key = value` text file each.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::codebook::ColumnOrder;
use crate::error::{Error, Result};
use crate::rng::digest;

use super::{Calibration, DopplerGrid, FaCounting};

/// Identifies the noise-only problem a penalty was calibrated for.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyKey {
    pub cpi_pulses: usize,
    pub slot_pulses: usize,
    pub slot_bits: u32,
    pub column_order: ColumnOrder,
    pub grid_tr: DopplerGrid,
    pub grid_re: DopplerGrid,
    pub radar_noise_var: f64,
    pub fa_counting: FaCounting,
    pub false_alarm_target: f64,
    pub seed: u64,
}

impl PenaltyKey {
    fn fields(&self) -> Vec<(&'static str, String)> {
        let grid = |g: &DopplerGrid| format!("{:?} {:?} {}", g.start(), g.step(), g.len());
        vec![
            ("pulses_per_cpi", self.cpi_pulses.to_string()),
            ("slot_pulses", self.slot_pulses.to_string()),
            ("slot_bits", self.slot_bits.to_string()),
            ("column_order", self.column_order.as_str().to_string()),
            ("grid_transmissive_hz", grid(&self.grid_tr)),
            ("grid_reflective_hz", grid(&self.grid_re)),
            ("radar_noise_var_w", format!("{:?}", self.radar_noise_var)),
            ("fa_counting", self.fa_counting.as_str().to_string()),
            ("false_alarm_target", format!("{:?}", self.false_alarm_target)),
            ("seed", self.seed.to_string()),
        ]
    }

    /// File name under a calibration directory.
    pub fn file_name(&self) -> String {
        let canonical: String = self.fields().iter().map(|(k, v)| format!("{k}={v};")).collect();
        format!(
            "penalty-P{}-M{}-b{}-{:016x}.txt",
            self.cpi_pulses,
            self.slot_pulses,
            self.slot_bits,
            digest(&canonical)
        )
    }

    pub fn path_in(&self, dir: &Path) -> PathBuf {
        dir.join(self.file_name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyArtifact {
    pub key: PenaltyKey,
    pub penalty: f64,
    pub empirical_rate: f64,
    pub trials: u64,
}

impl PenaltyArtifact {
    pub fn from_calibration(key: PenaltyKey, cal: &Calibration) -> Self {
        Self {
            key,
            penalty: cal.penalty,
            empirical_rate: cal.empirical_rate,
            trials: cal.trials,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# calibrated GIC penalty\n");
        for (k, v) in self.key.fields() {
            let _ = writeln!(out, "{k} = {v}");
        }
        let _ = writeln!(out, "trials = {}", self.trials);
        let _ = writeln!(out, "empirical_rate = {:?}", self.empirical_rate);
        let _ = writeln!(out, "penalty = {:?}", self.penalty);
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let err = |message: String| Error::Parse {
            what: "penalty artifact",
            message,
        };
        let mut map = std::collections::BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(format!("line {}: expected `key = value`", n + 1)))?;
            if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(err(format!("line {}: duplicate key `{}`", n + 1, k.trim())));
            }
        }
        let get = |k: &str| map.get(k).ok_or_else(|| err(format!("missing key `{k}`")));
        fn num<T: std::str::FromStr>(k: &str, v: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            v.parse().map_err(|e: T::Err| Error::Parse {
                what: "penalty artifact",
                message: format!("`{k}`: {e}"),
            })
        }
        let grid = |k: &str| -> Result<DopplerGrid> {
            let parts: Vec<&str> = get(k)?.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(err(format!("`{k}` needs `start step count`")));
            }
            DopplerGrid::new(num(k, parts[0])?, num(k, parts[1])?, num(k, parts[2])?)
        };
        let column_order = match get("column_order")?.as_str() {
            "natural" => ColumnOrder::Natural,
            "reversed_tr" => ColumnOrder::ReversedTr,
            other => return Err(err(format!("unknown column order `{other}`"))),
        };
        let fa_counting = match get("fa_counting")?.as_str() {
            "event" => FaCounting::Event,
            "per_target" => FaCounting::PerTarget,
            other => return Err(err(format!("unknown fa_counting `{other}`"))),
        };
        let key = PenaltyKey {
            cpi_pulses: num("pulses_per_cpi", get("pulses_per_cpi")?)?,
            slot_pulses: num("slot_pulses", get("slot_pulses")?)?,
            slot_bits: num("slot_bits", get("slot_bits")?)?,
            column_order,
            grid_tr: grid("grid_transmissive_hz")?,
            grid_re: grid("grid_reflective_hz")?,
            radar_noise_var: num("radar_noise_var_w", get("radar_noise_var_w")?)?,
            fa_counting,
            false_alarm_target: num("false_alarm_target", get("false_alarm_target")?)?,
            seed: num("seed", get("seed")?)?,
        };
        let penalty: f64 = num("penalty", get("penalty")?)?;
        if !(penalty > 0.0 && penalty.is_finite()) {
            return Err(err(format!("penalty must be positive, got {penalty}")));
        }
        Ok(Self {
            key,
            penalty,
            empirical_rate: num("empirical_rate", get("empirical_rate")?)?,
            trials: num("trials", get("trials")?)?,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = self.key.path_in(dir);
        std::fs::write(&path, self.to_text())?;
        Ok(path)
    }

    /// Loads the artifact matching `key`, if one was written.
    pub fn load(dir: &Path, key: &PenaltyKey) -> Result<Option<Self>> {
        let path = key.path_in(dir);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let art = Self::parse(&text)?;
        if &art.key != key {
            return Err(Error::Calibration(format!("{} does not match the requested key", path.display())));
        }
        Ok(Some(art))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key() -> PenaltyKey {
        PenaltyKey {
            cpi_pulses: 16,
            slot_pulses: 4,
            slot_bits: 1,
            column_order: ColumnOrder::ReversedTr,
            grid_tr: DopplerGrid::over_interval(1750.0, 2000.0, 16, 0.25e-3, 16).unwrap(),
            grid_re: DopplerGrid::over_interval(1750.0, 2000.0, 16, 0.25e-3, 16).unwrap(),
            radar_noise_var: 10f64.powf(-19.4),
            fa_counting: FaCounting::Event,
            false_alarm_target: 1e-4,
            seed: 7,
        }
    }

    #[test]
    fn round_trip_and_lookup() {
        let art = PenaltyArtifact { key: key(), penalty: 13.37, empirical_rate: 9.9e-5, trials: 1_000_000 };
        assert_eq!(PenaltyArtifact::parse(&art.to_text()).unwrap(), art);
        let dir = tempfile::tempdir().unwrap();
        art.write(dir.path()).unwrap();
        assert_eq!(PenaltyArtifact::load(dir.path(), &key()).unwrap(), Some(art));
        let mut other = key();
        other.seed = 8;
        assert_ne!(other.file_name(), key().file_name());
        assert_eq!(PenaltyArtifact::load(dir.path(), &other).unwrap(), None);
    }

    #[test]
    fn malformed_rejected() {
        let text = PenaltyArtifact { key: key(), penalty: 1.0, empirical_rate: 0.0, trials: 1 }.to_text();
        assert!(PenaltyArtifact::parse(&text.replace("penalty = 1.0", "penalty = -1")).is_err());
        assert!(PenaltyArtifact::parse(&text.replace("seed = 7", "")).is_err());
        assert!(PenaltyArtifact::parse(&text.replace("event", "sometimes")).is_err());
        assert!(PenaltyArtifact::parse(&format!("{text}seed = 9\n")).is_err());
        assert!(PenaltyArtifact::parse("garbage").is_err());
    }
}
