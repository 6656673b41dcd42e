use std::cmp::Ordering;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{fill_complex_normal, Substreams};

use super::{CodeSource, DetectorGrids, GicDetector, GicStatistics, Hypothesis, NoiseCovariance};

/// How false alarms under `H0` are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaCounting {
    /// Probability that any target is declared.
    #[default]
    Event,
    /// Mean number of declared targets (an `H2` decision counts twice).
    PerTarget,
}

impl FaCounting {
    pub fn as_str(self) -> &'static str {
        match self {
            FaCounting::Event => "event",
            FaCounting::PerTarget => "per_target",
        }
    }

    pub fn weight(self, h: Hypothesis) -> u64 {
        match self {
            FaCounting::Event => u64::from(h != Hypothesis::H0),
            FaCounting::PerTarget => u64::from(h.targets()),
        }
    }
}

/// Everything needed to generate noise-only observations for one cell.
#[derive(Debug, Clone)]
pub struct NullSetup {
    pub codes: CodeSource,
    pub grids: DetectorGrids,
    pub noise: NoiseCovariance,
    pub pri: f64,
}

impl NullSetup {
    fn fixed_detector(&self) -> Result<Option<GicDetector>> {
        if self.codes.is_fixed() {
            Ok(Some(GicDetector::new(self.codes.fixed(), &self.grids, &self.noise, self.pri)?))
        } else {
            Ok(None)
        }
    }

    /// Noise-only statistics of trial `index`. Whitened noise is `CN(0, I)`
    /// whatever the covariance, so it is drawn directly in that domain.
    fn trial(&self, fixed: Option<&GicDetector>, streams: &Substreams, index: u64) -> Result<GicStatistics> {
        let mut rng = streams.trial(index);
        let owned;
        let det = match fixed {
            Some(d) => d,
            None => {
                let codes = self.codes.draw(&mut rng);
                owned = GicDetector::new(&codes, &self.grids, &self.noise, self.pri)?;
                &owned
            }
        };
        let mut w = vec![Complex64::new(0.0, 0.0); self.codes.cpi_pulses()];
        fill_complex_normal(&mut rng, 1.0, &mut w);
        Ok(det.statistics_whitened(&w))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub penalty: f64,
    pub target_rate: f64,
    pub empirical_rate: f64,
    pub trials: u64,
    pub counting: FaCounting,
}

#[derive(Clone, Copy)]
struct Candidate {
    threshold: f64,
    index: u64,
    stats: GicStatistics,
}

fn rank(a: &Candidate, b: &Candidate) -> Ordering {
    b.threshold.total_cmp(&a.threshold).then(a.index.cmp(&b.index))
}

fn prune(v: &mut Vec<Candidate>, keep: usize) {
    v.sort_unstable_by(rank);
    v.truncate(keep);
}

fn weighted_count(cands: &[Candidate], penalty: f64, counting: FaCounting) -> u64 {
    cands
        .iter()
        .take_while(|c| c.threshold > penalty)
        .map(|c| counting.weight(c.stats.decide(penalty)))
        .sum()
}

/// Smallest penalty whose empirical false-alarm rate over `trials`
/// noise-only observations does not exceed `target_rate`.
///
/// A trial can only raise a false alarm while the penalty is below its
/// null threshold, so only the `⌊target·trials⌋ + 1` largest thresholds
/// matter; the rate is monotone in the penalty and is bisected over them.
pub fn calibrate_penalty(
    setup: &NullSetup,
    target_rate: f64,
    trials: u64,
    counting: FaCounting,
    streams: &Substreams,
) -> Result<Calibration> {
    if !(target_rate > 0.0 && target_rate < 1.0) {
        return Err(Error::Calibration(format!("target rate {target_rate} not in (0, 1)")));
    }
    if (trials as f64) * target_rate < 100.0 {
        return Err(Error::Calibration(format!(
            "{trials} trials cannot resolve a false-alarm rate of {target_rate:e} (need ≥ 100 expected events)"
        )));
    }
    let allowed = (target_rate * trials as f64).floor() as u64;
    let keep = allowed as usize + 1;
    let fixed = setup.fixed_detector()?;

    let top = (0..trials)
        .into_par_iter()
        .try_fold(Vec::new, |mut acc: Vec<Candidate>, index| {
            let stats = setup.trial(fixed.as_ref(), streams, index)?;
            acc.push(Candidate {
                threshold: stats.null_threshold(),
                index,
                stats,
            });
            if acc.len() >= 2 * keep + 1024 {
                prune(&mut acc, keep);
            }
            Ok::<_, Error>(acc)
        })
        .try_reduce(Vec::new, |mut a, b| {
            a.extend(b);
            prune(&mut a, keep);
            Ok(a)
        })?;
    let mut top = top;
    prune(&mut top, keep);

    let rate = |penalty: f64| weighted_count(&top, penalty, counting) as f64 / trials as f64;
    let mut lo = top.last().map_or(0.0, |c| c.threshold);
    let mut hi = top.first().map_or(0.0, |c| c.threshold);
    if !(hi > 0.0) {
        return Err(Error::Calibration("noise-only statistics are all zero".into()));
    }
    let penalty = if rate(lo) <= target_rate {
        lo
    } else {
        // rate(hi) = 0 since no trial exceeds its own maximum
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if rate(mid) <= target_rate {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        hi
    };
    if !(penalty > 0.0) {
        return Err(Error::Calibration(format!("calibrated penalty {penalty} is not positive")));
    }
    Ok(Calibration {
        penalty,
        target_rate,
        empirical_rate: rate(penalty),
        trials,
        counting,
    })
}

/// Weighted false-alarm count and rate at a fixed penalty.
pub fn empirical_false_alarm_rate(
    setup: &NullSetup,
    penalty: f64,
    trials: u64,
    counting: FaCounting,
    streams: &Substreams,
) -> Result<(u64, f64)> {
    let fixed = setup.fixed_detector()?;
    let count = (0..trials)
        .into_par_iter()
        .map(|index| {
            let stats = setup.trial(fixed.as_ref(), streams, index)?;
            Ok(counting.weight(stats.decide(penalty)))
        })
        .try_reduce(|| 0u64, |a, b| Ok::<_, Error>(a + b))?;
    Ok((count, count as f64 / trials as f64))
}
