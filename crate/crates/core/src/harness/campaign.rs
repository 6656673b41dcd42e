//! Monte Carlo campaigns: penalty calibration, radar PD/RMSE sweeps and
//! user BER sweeps.
//!
//! Every trial draws from its own counter-based substream keyed by
//! `(seed, experiment, cell, trial)`, so the results do not depend on how
//! rayon schedules the work. Floating-point sums are taken sequentially in
//! trial order after an ordered collect; counts are plain integer sums.

use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{draw_user_paths, target_amplitude_variance, user_channel_taps};
use crate::codebook::build_codebooks;
use crate::comm::{ml_decode_slot, reference_snr_to_noise, slot_from_noise};
use crate::error::{Error, Result};
use crate::geometry::HalfSpace;
use crate::radar::{
    calibrate_penalty, doppler_template, CodeMode, CodeSource, DetectorGrids, DopplerGrid, GicDetector, Hypothesis,
    NoiseCovariance, NullSetup, PenaltyArtifact, PenaltyKey,
};
use crate::rng::{complex_normal, fill_complex_normal, Substreams};
use crate::starris::Transceiver;

use super::config::{DopplerDraw, PenaltySetting, ScenarioConfig};
use super::results::{BerRow, MetricsRecord, RadarRow, Rows};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Half-width of the 95% Wilson score interval for `successes` out of `n`.
pub fn wilson_half_width(successes: u64, n: u64) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    Z95 / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

fn code_mode(cfg: &ScenarioConfig, with_comm: bool) -> CodeMode {
    if with_comm {
        CodeMode::WithComm {
            slot_pulses: cfg.radar.slot_pulses,
            bits: cfg.radar.slot_bits,
        }
    } else {
        CodeMode::RadarOnly
    }
}

fn mode_cell(cpi_pulses: usize, with_comm: bool) -> u64 {
    ((cpi_pulses as u64) << 1) | u64::from(with_comm)
}

/// Artifact key of the noise-only problem behind one radar cell.
pub fn penalty_key(cfg: &ScenarioConfig, cpi_pulses: usize, with_comm: bool) -> Result<PenaltyKey> {
    let grids = cfg.grids(cpi_pulses)?;
    let (slot_pulses, slot_bits) = if with_comm {
        (cfg.radar.slot_pulses, cfg.radar.slot_bits)
    } else {
        (cpi_pulses, 0)
    };
    Ok(PenaltyKey {
        cpi_pulses,
        slot_pulses,
        slot_bits,
        column_order: cfg.column_order,
        grid_tr: grids.transmissive,
        grid_re: grids.reflective,
        radar_noise_var: cfg.system.radar_noise_var,
        fa_counting: cfg.detector.fa_counting,
        false_alarm_target: cfg.detector.false_alarm_target,
        seed: cfg.seed,
    })
}

/// Noise-only setup of one radar cell.
pub fn null_setup(cfg: &ScenarioConfig, cpi_pulses: usize, with_comm: bool) -> Result<NullSetup> {
    Ok(NullSetup {
        codes: CodeSource::new(code_mode(cfg, with_comm), cpi_pulses, cfg.column_order)?,
        grids: cfg.grids(cpi_pulses)?,
        noise: NoiseCovariance::white(cpi_pulses, cfg.system.radar_noise_var)?,
        pri: cfg.system.pri,
    })
}

/// Calibrates the penalty of one `(P, mode)` cell at the configured target.
pub fn calibrate_cell(cfg: &ScenarioConfig, cpi_pulses: usize, with_comm: bool) -> Result<PenaltyArtifact> {
    let setup = null_setup(cfg, cpi_pulses, with_comm)?;
    let streams = Substreams::new(cfg.seed, "calibration", mode_cell(cpi_pulses, with_comm));
    let cal = calibrate_penalty(
        &setup,
        cfg.detector.false_alarm_target,
        cfg.detector.calibration_trials,
        cfg.detector.fa_counting,
        &streams,
    )?;
    Ok(PenaltyArtifact::from_calibration(penalty_key(cfg, cpi_pulses, with_comm)?, &cal))
}

/// Where the penalty of a radar cell came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyEntry {
    pub pulses_per_cpi: usize,
    pub with_comm: bool,
    pub penalty: f64,
    /// `"fixed"` or the artifact file name.
    pub source: String,
    pub empirical_rate: Option<f64>,
    pub calibration_trials: Option<u64>,
}

impl PenaltyEntry {
    pub fn from_artifact(art: &PenaltyArtifact, with_comm: bool) -> Self {
        Self {
            pulses_per_cpi: art.key.cpi_pulses,
            with_comm,
            penalty: art.penalty,
            source: art.key.file_name(),
            empirical_rate: Some(art.empirical_rate),
            calibration_trials: Some(art.trials),
        }
    }
}

/// Penalties for every configured CPI length in one mode: the fixed value
/// from the scenario, or calibration artifacts found in `dir`.
pub fn resolve_penalties(cfg: &ScenarioConfig, with_comm: bool, dir: &Path) -> Result<Vec<PenaltyEntry>> {
    cfg.radar
        .pulses_per_cpi
        .iter()
        .map(|&p| match cfg.detector.penalty {
            PenaltySetting::Fixed(penalty) => Ok(PenaltyEntry {
                pulses_per_cpi: p,
                with_comm,
                penalty,
                source: "fixed".into(),
                empirical_rate: None,
                calibration_trials: None,
            }),
            PenaltySetting::Mode(_) => {
                let key = penalty_key(cfg, p, with_comm)?;
                match PenaltyArtifact::load(dir, &key)? {
                    Some(art) => Ok(PenaltyEntry::from_artifact(&art, with_comm)),
                    None => Err(Error::Calibration(format!(
                        "no calibrated penalty for P = {p} ({}); expected {}",
                        if with_comm { "with comm" } else { "radar only" },
                        key.path_in(dir).display()
                    ))),
                }
            }
        })
        .collect()
}

/// Per-trial outcome of one RCS cell.
#[derive(Debug, Clone, Copy)]
struct Outcome {
    hypothesis: Hypothesis,
    err_tr: Option<f64>,
    err_re: Option<f64>,
}

fn draw_doppler<R: Rng + ?Sized>(draw: DopplerDraw, interval: (f64, f64), grid: &DopplerGrid, rng: &mut R) -> f64 {
    match draw {
        DopplerDraw::Uniform => interval.0 + rng.random::<f64>() * (interval.1 - interval.0),
        DopplerDraw::OnGrid => grid.point(rng.random_range(0..grid.len())),
    }
}

fn radar_trial(
    cfg: &ScenarioConfig,
    transceiver: &Transceiver,
    grids: &DetectorGrids,
    source: &CodeSource,
    fixed: Option<&GicDetector>,
    penalty: f64,
    index: u64,
) -> Result<Vec<Outcome>> {
    let p = source.cpi_pulses();
    let params = &transceiver.params;
    // the draws are shared by every RCS value and by both code modes
    let mut rng = Substreams::new(cfg.seed, "radar", p as u64).trial(index);
    let a_tr = complex_normal(&mut rng, 1.0);
    let a_re = complex_normal(&mut rng, 1.0);
    let nu_tr = draw_doppler(cfg.radar.doppler_draw, cfg.doppler_tr, &grids.transmissive, &mut rng);
    let nu_re = draw_doppler(cfg.radar.doppler_draw, cfg.doppler_re, &grids.reflective, &mut rng);
    let mut w = vec![Complex64::new(0.0, 0.0); p];
    fill_complex_normal(&mut rng, 1.0, &mut w);

    let owned;
    let (det, codes) = match fixed {
        Some(d) => (d, source.fixed().clone()),
        None => {
            let mut msg_rng = Substreams::new(cfg.seed, "radar-messages", p as u64).trial(index);
            let codes = source.draw(&mut msg_rng);
            owned = GicDetector::new(&codes, grids, &NoiseCovariance::white(p, params.radar_noise_var)?, params.pri)?;
            (&owned, codes)
        }
    };
    let h_tr = doppler_template(codes.transmissive.values(), nu_tr, params.pri);
    let h_re = doppler_template(codes.reflective.values(), nu_re, params.pri);
    let sigma = params.radar_noise_var.sqrt();
    let lambda = params.wavelength();

    let mut out = Vec::with_capacity(cfg.radar.rcs.len());
    let mut y = vec![Complex64::new(0.0, 0.0); p];
    for &rcs in &cfg.radar.rcs {
        let scale = target_amplitude_variance(rcs, cfg.target_range)?.sqrt();
        let g_tr = a_tr * scale * transceiver.gamma_tr;
        let g_re = a_re * scale * transceiver.gamma_re;
        for k in 0..p {
            y[k] = g_tr * h_tr[k] + g_re * h_re[k] + w[k] * sigma;
        }
        let r = det.detect(&y, penalty)?;
        out.push(Outcome {
            hypothesis: r.hypothesis,
            err_tr: r.doppler_tr.map(|v| lambda * (v - nu_tr) / 2.0),
            err_re: r.doppler_re.map(|v| lambda * (v - nu_re) / 2.0),
        });
    }
    Ok(out)
}

#[derive(Default)]
struct RmseAcc {
    sum_sq: f64,
    n: u64,
}

impl RmseAcc {
    fn push(&mut self, e: Option<f64>) {
        if let Some(e) = e {
            self.sum_sq += e * e;
            self.n += 1;
        }
    }

    fn value(&self) -> Option<f64> {
        (self.n > 0).then(|| (self.sum_sq / self.n as f64).sqrt())
    }
}

fn aggregate_radar(
    cfg: &ScenarioConfig,
    cpi_pulses: usize,
    with_comm: bool,
    penalty: f64,
    trials: &[Vec<Outcome>],
) -> Vec<RadarRow> {
    let n = trials.len() as u64;
    (0..cfg.radar.rcs.len())
        .map(|cell| {
            let mut counts = [0u64; 4];
            let mut tr = RmseAcc::default();
            let mut re = RmseAcc::default();
            let mut tr_h2 = RmseAcc::default();
            let mut re_h2 = RmseAcc::default();
            for t in trials {
                let o = t[cell];
                counts[o.hypothesis.index()] += 1;
                tr.push(o.err_tr);
                re.push(o.err_re);
                if o.hypothesis == Hypothesis::H2 {
                    tr_h2.push(o.err_tr);
                    re_h2.push(o.err_re);
                }
            }
            RadarRow {
                experiment: "radar".into(),
                pulses_per_cpi: cpi_pulses,
                with_comm,
                slot_pulses: with_comm.then_some(cfg.radar.slot_pulses),
                slot_bits: with_comm.then_some(cfg.radar.slot_bits),
                rcs_m2: cfg.radar.rcs[cell],
                penalty,
                pd: counts[3] as f64 / n as f64,
                rmse_tr_mps: tr.value(),
                rmse_re_mps: re.value(),
                rmse_tr_h2_mps: tr_h2.value(),
                rmse_re_h2_mps: re_h2.value(),
                pd_ci95: wilson_half_width(counts[3], n),
                count_h0: counts[0],
                count_h1_tr: counts[1],
                count_h1_re: counts[2],
                count_h2: counts[3],
                estimated_tr: tr.n,
                estimated_re: re.n,
                trials: n,
                seed: cfg.seed,
            }
        })
        .collect()
}

/// PD and velocity RMSE for every `(P, RCS)` cell of one code mode.
///
/// `penalties` must hold one entry per configured CPI length, as returned
/// by [`resolve_penalties`].
pub fn run_radar_mc(cfg: &ScenarioConfig, with_comm: bool, penalties: &[PenaltyEntry]) -> Result<MetricsRecord> {
    let start = Instant::now();
    let transceiver = cfg.transceiver()?;
    let mut rows = Vec::new();
    for &p in &cfg.radar.pulses_per_cpi {
        let penalty = penalties
            .iter()
            .find(|e| e.pulses_per_cpi == p && e.with_comm == with_comm)
            .ok_or_else(|| Error::Calibration(format!("no penalty supplied for P = {p}")))?
            .penalty;
        let grids = cfg.grids(p)?;
        let source = CodeSource::new(code_mode(cfg, with_comm), p, cfg.column_order)?;
        let fixed = if source.is_fixed() {
            let noise = NoiseCovariance::white(p, cfg.system.radar_noise_var)?;
            Some(GicDetector::new(source.fixed(), &grids, &noise, cfg.system.pri)?)
        } else {
            None
        };
        let trials: Vec<Vec<Outcome>> = (0..cfg.radar.trials)
            .into_par_iter()
            .map(|i| radar_trial(cfg, &transceiver, &grids, &source, fixed.as_ref(), penalty, i))
            .collect::<Result<_>>()?;
        rows.extend(aggregate_radar(cfg, p, with_comm, penalty, &trials));
    }
    Ok(MetricsRecord {
        rows: Rows::Radar(rows),
        penalties: penalties.iter().filter(|e| e.with_comm == with_comm).cloned().collect(),
        seed: cfg.seed,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

/// Bit errors for one `(M, b, side)` cell at each noise variance.
///
/// Channel, message and standard noise draws are shared across the noise
/// levels. Returns `(bit_errors, bits)` per level.
pub fn ber_sweep(
    cfg: &ScenarioConfig,
    transceiver: &Transceiver,
    rate: (usize, u32),
    side: HalfSpace,
    noise_vars: &[f64],
    slots: u64,
) -> Result<Vec<(u64, u64)>> {
    let (m, b) = rate;
    let books = build_codebooks(m, b, cfg.column_order)?;
    let book = books.side(side);
    let user = cfg.user(side);
    let taps = user.taps(&cfg.system);
    let beam = transceiver.beamformer(side);
    let cell = ((m as u64) << 16) | ((b as u64) << 1) | u64::from(side == HalfSpace::Reflective);
    let streams = Substreams::new(cfg.seed, "ber", cell);
    let stds: Vec<f64> = noise_vars.iter().map(|v| v.sqrt()).collect();

    let errors = (0..slots)
        .into_par_iter()
        .try_fold(
            || vec![0u64; stds.len()],
            |mut acc, i| {
                let mut rng = streams.trial(i);
                let paths = draw_user_paths(user, &cfg.system, &mut rng)?;
                let beta = user_channel_taps(&paths, beam, &transceiver.feeder_channel, &cfg.ris, &cfg.system, user.tau_min, taps);
                let sent = rng.random_range(0..book.len());
                let mut z = vec![Complex64::new(0.0, 0.0); m * taps];
                fill_complex_normal(&mut rng, 1.0, &mut z);
                let sent_bits = book.bits_of(sent);
                for (k, &std) in stds.iter().enumerate() {
                    let y = slot_from_noise(&beta, book.codeword(sent), std, &z)?;
                    let got = ml_decode_slot(&y, book)?;
                    acc[k] += got.bits.iter().zip(&sent_bits).filter(|(a, b)| a != b).count() as u64;
                }
                Ok::<_, Error>(acc)
            },
        )
        .try_reduce(
            || vec![0u64; stds.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;
    let bits = slots * b as u64;
    Ok(errors.into_iter().map(|e| (e, bits)).collect())
}

/// Noise variance of each configured reference SNR. Both sides share the
/// reflective user's reference so that their BERs are comparable.
pub fn snr_noise_vars(cfg: &ScenarioConfig, transceiver: &Transceiver) -> Result<Vec<f64>> {
    cfg.comm
        .snr_db
        .iter()
        .map(|db| reference_snr_to_noise(10f64.powf(db / 10.0), transceiver, &cfg.user_re))
        .collect()
}

/// BER for every `(M, b, side, SNR)` cell.
pub fn run_comm_mc(cfg: &ScenarioConfig) -> Result<MetricsRecord> {
    let start = Instant::now();
    let transceiver = cfg.transceiver()?;
    let noise_vars = snr_noise_vars(cfg, &transceiver)?;
    let mut rows = Vec::new();
    for &(m, b) in &cfg.comm.rates {
        for side in HalfSpace::BOTH {
            let counts = ber_sweep(cfg, &transceiver, (m, b), side, &noise_vars, cfg.comm.slots)?;
            for ((&snr_db, &noise_var), (errors, bits)) in cfg.comm.snr_db.iter().zip(&noise_vars).zip(counts) {
                rows.push(BerRow {
                    experiment: "ber".into(),
                    side,
                    slot_pulses: m,
                    slot_bits: b,
                    rate_bps: b as f64 / (m as f64 * cfg.system.pri),
                    snr_db,
                    noise_var,
                    ber: if bits > 0 { errors as f64 / bits as f64 } else { 0.0 },
                    ber_ci95: wilson_half_width(errors, bits),
                    bit_errors: errors,
                    bits,
                    slots: cfg.comm.slots,
                    seed: cfg.seed,
                });
            }
        }
    }
    Ok(MetricsRecord {
        rows: Rows::Ber(rows),
        penalties: Vec::new(),
        seed: cfg.seed,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

/// Runs `f` on a dedicated pool of `jobs` threads (`0` = rayon's default).
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start {jobs} worker threads: {e}")))?;
    Ok(pool.install(f))
}
