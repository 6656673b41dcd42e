use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::codebook::CodePair;
use crate::error::{Error, Result};

use super::{doppler_template, DetectorGrids, DopplerGrid, NoiseCovariance, RadarObservation};

/// Relative eigenvalue floor of the two-template Gram matrix.
const GRAM_CONDITION_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Hypothesis {
    /// No target on either side.
    H0,
    /// Target on the transmissive side only.
    H1Tr,
    /// Target on the reflective side only.
    H1Re,
    /// Targets on both sides.
    H2,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 4] = [Hypothesis::H0, Hypothesis::H1Tr, Hypothesis::H1Re, Hypothesis::H2];

    pub fn targets(self) -> u32 {
        match self {
            Hypothesis::H0 => 0,
            Hypothesis::H1Tr | Hypothesis::H1Re => 1,
            Hypothesis::H2 => 2,
        }
    }

    pub fn has_transmissive(self) -> bool {
        matches!(self, Hypothesis::H1Tr | Hypothesis::H2)
    }

    pub fn has_reflective(self) -> bool {
        matches!(self, Hypothesis::H1Re | Hypothesis::H2)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Hypothesis::H0 => "H0",
            Hypothesis::H1Tr => "H1_tr",
            Hypothesis::H1Re => "H1_re",
            Hypothesis::H2 => "H2",
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Penalty-free maximised statistics of one observation.
///
/// `single_*` hold `max |ξᴴy|²` with its grid index; `joint` holds
/// `max ‖Ξᴴy‖²` with the (reflective, transmissive) indices, absent when
/// every grid pair was skipped as degenerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GicStatistics {
    pub single_tr: (f64, usize),
    pub single_re: (f64, usize),
    pub joint: Option<(f64, usize, usize)>,
}

impl GicStatistics {
    /// Objective `μ(·)` of each hypothesis, in [`Hypothesis::ALL`] order.
    pub fn objectives(&self, penalty: f64) -> [f64; 4] {
        [
            0.0,
            self.single_tr.0 - penalty,
            self.single_re.0 - penalty,
            self.joint.map_or(f64::NEG_INFINITY, |j| j.0 - 2.0 * penalty),
        ]
    }

    /// Arg-max hypothesis; ties go to the one with fewer targets.
    pub fn decide(&self, penalty: f64) -> Hypothesis {
        let mu = self.objectives(penalty);
        let mut best = 0;
        for k in 1..4 {
            if mu[k] > mu[best] {
                best = k;
            }
        }
        Hypothesis::ALL[best]
    }

    /// Largest penalty at which some target is still declared: `H0` wins
    /// exactly when `penalty ≥` this value.
    pub fn null_threshold(&self) -> f64 {
        let joint = self.joint.map_or(f64::NEG_INFINITY, |j| 0.5 * j.0);
        self.single_tr.0.max(self.single_re.0).max(joint)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub hypothesis: Hypothesis,
    pub doppler_tr: Option<f64>,
    pub doppler_re: Option<f64>,
    /// `μ(·)` per hypothesis, in [`Hypothesis::ALL`] order.
    pub objectives: [f64; 4],
}

/// Inverse of one 2×2 template Gram matrix, stored as `(e, a, d)/det` for
/// `G = [[a, d], [d*, e]]`.
#[derive(Debug, Clone, Copy)]
struct PairInverse {
    e: f64,
    a: f64,
    d: Complex64,
}

/// GIC detector with whitened templates and pair Gram inverses precomputed
/// for one code pair and grid.
#[derive(Debug, Clone)]
pub struct GicDetector {
    noise: NoiseCovariance,
    grids: DetectorGrids,
    /// Conjugated whitened templates, row per grid point.
    tr: Vec<Vec<Complex64>>,
    re: Vec<Vec<Complex64>>,
    tr_energy: Vec<f64>,
    re_energy: Vec<f64>,
    /// Row-major over (reflective index, transmissive index).
    pairs: Vec<Option<PairInverse>>,
}

fn pair_inverse(a: f64, e: f64, d: Complex64) -> Option<PairInverse> {
    // eigenvalues of the Hermitian 2×2 Gram matrix
    let mean = 0.5 * (a + e);
    let radius = (0.25 * (a - e) * (a - e) + d.norm_sqr()).sqrt();
    let (hi, lo) = (mean + radius, mean - radius);
    if !(hi > 0.0) || lo < GRAM_CONDITION_FLOOR * hi {
        return None;
    }
    let det = hi * lo;
    Some(PairInverse {
        e: e / det,
        a: a / det,
        d: d / det,
    })
}

fn whitened_templates(code: &[f64], grid: &DopplerGrid, pri: f64, noise: &NoiseCovariance) -> Result<(Vec<Vec<Complex64>>, Vec<f64>)> {
    let mut rows = Vec::with_capacity(grid.len());
    let mut energy = Vec::with_capacity(grid.len());
    for nu in grid.points() {
        let w = noise.whiten(&doppler_template(code, nu, pri))?;
        energy.push(w.iter().map(|v| v.norm_sqr()).sum());
        rows.push(w.into_iter().map(|v| v.conj()).collect());
    }
    Ok((rows, energy))
}

impl GicDetector {
    pub fn new(codes: &CodePair, grids: &DetectorGrids, noise: &NoiseCovariance, pri: f64) -> Result<Self> {
        let p = codes.cpi_pulses();
        if noise.dim() != p {
            return Err(Error::LengthMismatch {
                expected: p,
                got: noise.dim(),
            });
        }
        let (tr, tr_energy) = whitened_templates(codes.transmissive.values(), &grids.transmissive, pri, noise)?;
        let (re, re_energy) = whitened_templates(codes.reflective.values(), &grids.reflective, pri, noise)?;
        let (n_tr, n_re) = (tr.len(), re.len());
        let mut pairs = Vec::with_capacity(n_re * n_tr);

        let shared_step = (grids.transmissive.step() - grids.reflective.step()).abs() <= 1e-12 * grids.transmissive.step()
            || n_tr == 1
            || n_re == 1;
        if let (Some(var), true) = (noise.white_variance(), shared_step) {
            // white noise: hᴴ_re h_tr depends only on ν_tr − ν_re, which on
            // grids with a common step takes n_re + n_tr − 1 values
            let step = if n_tr > 1 { grids.transmissive.step() } else { grids.reflective.step() };
            let offset = grids.transmissive.start() - grids.reflective.start();
            let w: Vec<f64> = codes
                .reflective
                .values()
                .iter()
                .zip(codes.transmissive.values())
                .map(|(a, b)| a * b / var)
                .collect();
            let cross: Vec<Complex64> = (0..n_re + n_tr - 1)
                .map(|k| {
                    let diff = offset + (k as f64 - (n_re as f64 - 1.0)) * step;
                    doppler_template(&w, diff, pri).into_iter().sum()
                })
                .collect();
            for i in 0..n_re {
                for j in 0..n_tr {
                    let d = cross[j + n_re - 1 - i];
                    pairs.push(pair_inverse(re_energy[i], tr_energy[j], d));
                }
            }
        } else {
            for i in 0..n_re {
                for j in 0..n_tr {
                    // rows hold conjugates, so hᴴ_re h_tr = Σ re[i]·conj(tr[j])
                    let d: Complex64 = re[i].iter().zip(&tr[j]).map(|(a, b)| a * b.conj()).sum();
                    pairs.push(pair_inverse(re_energy[i], tr_energy[j], d));
                }
            }
        }
        Ok(Self {
            noise: noise.clone(),
            grids: *grids,
            tr,
            re,
            tr_energy,
            re_energy,
            pairs,
        })
    }

    pub fn grids(&self) -> &DetectorGrids {
        &self.grids
    }

    pub fn noise(&self) -> &NoiseCovariance {
        &self.noise
    }

    pub fn statistics(&self, y: &[Complex64]) -> Result<GicStatistics> {
        let w = self.noise.whiten(y)?;
        Ok(self.statistics_whitened(&w))
    }

    /// Statistics of an already whitened observation `L⁻¹y`.
    pub fn statistics_whitened(&self, w: &[Complex64]) -> GicStatistics {
        let project = |rows: &[Vec<Complex64>]| -> Vec<Complex64> {
            rows.iter()
                .map(|r| r.iter().zip(w).map(|(a, b)| a * b).sum())
                .collect()
        };
        let b_tr = project(&self.tr);
        let b_re = project(&self.re);
        let best = |b: &[Complex64], energy: &[f64]| {
            let mut out = (f64::NEG_INFINITY, 0);
            for (k, (v, e)) in b.iter().zip(energy).enumerate() {
                let s = v.norm_sqr() / e;
                if s > out.0 {
                    out = (s, k);
                }
            }
            out
        };
        let single_tr = best(&b_tr, &self.tr_energy);
        let single_re = best(&b_re, &self.re_energy);

        let n_tr = self.tr.len();
        let mut joint: Option<(f64, usize, usize)> = None;
        let p_tr: Vec<f64> = b_tr.iter().map(|v| v.norm_sqr()).collect();
        for (i, b1) in b_re.iter().enumerate() {
            let p1 = b1.norm_sqr();
            let c1 = b1.conj();
            for (j, pair) in self.pairs[i * n_tr..(i + 1) * n_tr].iter().enumerate() {
                let Some(inv) = pair else { continue };
                let s = inv.e * p1 + inv.a * p_tr[j] - 2.0 * (c1 * inv.d * b_tr[j]).re;
                if joint.is_none_or(|(m, _, _)| s > m) {
                    joint = Some((s, i, j));
                }
            }
        }
        GicStatistics {
            single_tr,
            single_re,
            joint,
        }
    }

    pub fn detect(&self, y: &[Complex64], penalty: f64) -> Result<DetectionResult> {
        if !(penalty > 0.0) {
            return Err(Error::InvalidParameter(format!("GIC penalty must be positive, got {penalty}")));
        }
        let stats = self.statistics(y)?;
        Ok(self.result_for(&stats, penalty))
    }

    pub fn result_for(&self, stats: &GicStatistics, penalty: f64) -> DetectionResult {
        let hypothesis = stats.decide(penalty);
        let (doppler_tr, doppler_re) = match hypothesis {
            Hypothesis::H0 => (None, None),
            Hypothesis::H1Tr => (Some(self.grids.transmissive.point(stats.single_tr.1)), None),
            Hypothesis::H1Re => (None, Some(self.grids.reflective.point(stats.single_re.1))),
            Hypothesis::H2 => {
                let (_, i, j) = stats.joint.expect("H2 selected only with a joint statistic");
                (Some(self.grids.transmissive.point(j)), Some(self.grids.reflective.point(i)))
            }
        };
        DetectionResult {
            hypothesis,
            doppler_tr,
            doppler_re,
            objectives: stats.objectives(penalty),
        }
    }
}

/// One-shot detection; prefer [`GicDetector`] when the codes repeat.
pub fn gic_detect(
    y: &RadarObservation,
    codes: &CodePair,
    grids: &DetectorGrids,
    noise: &NoiseCovariance,
    pri: f64,
    penalty: f64,
) -> Result<DetectionResult> {
    GicDetector::new(codes, grids, noise, pri)?.detect(&y.samples, penalty)
}
