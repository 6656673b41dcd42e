//! Slow-time radar observations and the four-hypothesis GIC detector.

mod artifact;
mod calibrate;
mod detector;
mod noise;

pub use artifact::{PenaltyArtifact, PenaltyKey};
pub use calibrate::{calibrate_penalty, empirical_false_alarm_rate, Calibration, FaCounting, NullSetup};
pub use detector::{gic_detect, DetectionResult, GicDetector, GicStatistics, Hypothesis};
pub use noise::{whitened_template, NoiseCovariance};

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::SystemParams;
use crate::codebook::{build_codebooks, radar_only_codes, CodePair, CodebookPair, ColumnOrder};
use crate::error::{invalid, Error, Result};
use crate::geometry::HalfSpace;
use crate::rng::fill_complex_normal;
use crate::starris::Transceiver;

/// `h(c, ν)`: the code with the Doppler phase `exp(i2πνTp)`, `p = 0..P−1`.
pub fn doppler_template(code: &[f64], doppler: f64, pri: f64) -> Vec<Complex64> {
    let step = Complex64::from_polar(1.0, 2.0 * PI * doppler * pri);
    let mut ph = Complex64::new(1.0, 0.0);
    code.iter()
        .enumerate()
        .map(|(p, &c)| {
            // resynchronise the recurrence every 64 pulses
            if p % 64 == 0 {
                ph = Complex64::from_polar(1.0, 2.0 * PI * doppler * pri * p as f64);
            }
            let v = ph * c;
            ph *= step;
            v
        })
        .collect()
}

/// Radial velocity `λν/2` in m/s.
pub fn doppler_to_velocity(doppler: f64, params: &SystemParams) -> f64 {
    params.wavelength() * doppler / 2.0
}

/// Uniform Doppler search grid over an open interval: `count` points spaced
/// `step` apart, offset half a step from either end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerGrid {
    start: f64,
    step: f64,
    count: usize,
}

impl DopplerGrid {
    pub fn new(start: f64, step: f64, count: usize) -> Result<Self> {
        if count == 0 || !start.is_finite() || !(step > 0.0 && step.is_finite()) {
            return Err(invalid(format!("bad Doppler grid: start {start}, step {step}, count {count}")));
        }
        Ok(Self { start, step, count })
    }

    pub fn single(doppler: f64) -> Self {
        Self {
            start: doppler,
            step: 1.0,
            count: 1,
        }
    }

    /// Grid of nominal spacing `1/(P·T·oversampling)` filling `(lo, hi)`.
    pub fn over_interval(lo: f64, hi: f64, cpi_pulses: usize, pri: f64, oversampling: usize) -> Result<Self> {
        if !(lo < hi) || oversampling == 0 {
            return Err(invalid(format!("bad Doppler interval ({lo}, {hi}) or oversampling {oversampling}")));
        }
        let nominal = 1.0 / (cpi_pulses as f64 * pri * oversampling as f64);
        let count = ((hi - lo) / nominal).round().max(1.0) as usize;
        let step = (hi - lo) / count as f64;
        Self::new(lo + 0.5 * step, step, count)
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn point(&self, k: usize) -> f64 {
        debug_assert!(k < self.count, "grid index {k} out of range");
        self.start + k as f64 * self.step
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|k| self.point(k))
    }

    /// Nearest grid point.
    pub fn nearest(&self, doppler: f64) -> f64 {
        let k = ((doppler - self.start) / self.step).round().clamp(0.0, (self.count - 1) as f64);
        self.point(k as usize)
    }
}

/// Search grids for both sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorGrids {
    pub transmissive: DopplerGrid,
    pub reflective: DopplerGrid,
}

impl DetectorGrids {
    pub fn side(&self, side: HalfSpace) -> &DopplerGrid {
        match side {
            HalfSpace::Transmissive => &self.transmissive,
            HalfSpace::Reflective => &self.reflective,
        }
    }
}

/// How the STAR-RIS code sequences are produced over a CPI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeMode {
    RadarOnly,
    WithComm { slot_pulses: usize, bits: u32 },
}

/// Draws per-CPI code pairs for a [`CodeMode`].
#[derive(Debug, Clone)]
pub struct CodeSource {
    cpi_pulses: usize,
    books: Option<CodebookPair>,
    fixed: CodePair,
}

impl CodeSource {
    pub fn new(mode: CodeMode, cpi_pulses: usize, order: ColumnOrder) -> Result<Self> {
        let fixed = radar_only_codes(cpi_pulses)?;
        let books = match mode {
            CodeMode::RadarOnly => None,
            CodeMode::WithComm { slot_pulses, bits } => {
                if !cpi_pulses.is_multiple_of(slot_pulses) {
                    return Err(Error::InvalidCode(format!(
                        "P = {cpi_pulses} is not a multiple of M = {slot_pulses}"
                    )));
                }
                Some(build_codebooks(slot_pulses, bits, order)?)
            }
        };
        Ok(Self {
            cpi_pulses,
            books,
            fixed,
        })
    }

    pub fn cpi_pulses(&self) -> usize {
        self.cpi_pulses
    }

    /// Whether every draw returns the same pair.
    pub fn is_fixed(&self) -> bool {
        self.books.is_none()
    }

    pub fn fixed(&self) -> &CodePair {
        &self.fixed
    }

    /// Uniform random slot messages on both sides (or the radar-only pair).
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> CodePair {
        match &self.books {
            None => self.fixed.clone(),
            Some(books) => {
                let slots = self.cpi_pulses / books.transmissive.slot_pulses();
                let words = books.transmissive.len();
                let tr: Vec<usize> = (0..slots).map(|_| rng.random_range(0..words)).collect();
                let re: Vec<usize> = (0..slots).map(|_| rng.random_range(0..words)).collect();
                CodePair::assemble(books, &tr, &re, self.cpi_pulses).expect("messages drawn in range")
            }
        }
    }
}

/// Ground truth of one CPI.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TargetTruth {
    pub alpha_tr: Complex64,
    pub alpha_re: Complex64,
    pub doppler_tr: f64,
    pub doppler_re: f64,
}

/// The `P` slow-time samples at the inspected range gate.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarObservation {
    pub samples: Vec<Complex64>,
    pub truth: TargetTruth,
}

fn check_doppler(doppler: f64, params: &SystemParams) -> Result<()> {
    let limit = params.max_unambiguous_doppler();
    if doppler.abs() < limit {
        Ok(())
    } else {
        Err(Error::DopplerOutOfRange {
            doppler_hz: doppler,
            limit_hz: limit,
        })
    }
}

/// Adds the two target echoes to a given noise vector.
pub fn observation_from_noise(
    gamma_tr: Complex64,
    gamma_re: Complex64,
    truth: TargetTruth,
    codes: &CodePair,
    params: &SystemParams,
    noise: Vec<Complex64>,
) -> Result<RadarObservation> {
    check_doppler(truth.doppler_tr, params)?;
    check_doppler(truth.doppler_re, params)?;
    if noise.len() != codes.cpi_pulses() {
        return Err(Error::LengthMismatch {
            expected: codes.cpi_pulses(),
            got: noise.len(),
        });
    }
    let mut samples = noise;
    let terms = [
        (truth.alpha_tr * gamma_tr, codes.transmissive.values(), truth.doppler_tr),
        (truth.alpha_re * gamma_re, codes.reflective.values(), truth.doppler_re),
    ];
    for (amp, code, doppler) in terms {
        if amp == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (y, h) in samples.iter_mut().zip(doppler_template(code, doppler, params.pri)) {
            *y += amp * h;
        }
    }
    Ok(RadarObservation { samples, truth })
}

/// `y = α_tr γ_tr h(c_tr, ν_tr) + α_re γ_re h(c_re, ν_re) + z`, `z ~ CN(0, σ²_rad I)`.
pub fn synth_radar_observation<R: Rng + ?Sized>(
    transceiver: &Transceiver,
    truth: TargetTruth,
    codes: &CodePair,
    rng: &mut R,
) -> Result<RadarObservation> {
    let mut noise = vec![Complex64::new(0.0, 0.0); codes.cpi_pulses()];
    fill_complex_normal(rng, transceiver.params.radar_noise_var, &mut noise);
    observation_from_noise(
        transceiver.gamma_tr,
        transceiver.gamma_re,
        truth,
        codes,
        &transceiver.params,
        noise,
    )
}
