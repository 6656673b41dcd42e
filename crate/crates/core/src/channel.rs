//! Propagation models: feeder channel, Swerling I targets, user multipath.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::geometry::{element_gain, steering_vector, AngularDirection, ArrayGeometry, HalfSpace};
use crate::rng::complex_normal;
use crate::starris::{ris_beampattern_gain, SpatialBeamformer};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Physical parameters shared by the radar and communication functions.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub carrier_freq: f64,
    pub bandwidth: f64,
    pub pri: f64,
    /// Peak pulse power in W.
    pub pulse_power: f64,
    /// Linear feeder antenna gain towards the STAR-RIS.
    pub feeder_gain: f64,
    pub feeder_distance: f64,
    pub feeder_direction: AngularDirection,
    /// Per slow-time sample noise variance at the radar, in W.
    pub radar_noise_var: f64,
}

impl SystemParams {
    /// Parameters of the reference 28 GHz scenario.
    pub fn reference() -> Self {
        Self {
            carrier_freq: 28e9,
            bandwidth: 50e6,
            pri: 0.25e-3,
            pulse_power: 1.0,
            feeder_gain: 100.0,
            feeder_distance: 3.0,
            feeder_direction: AngularDirection::from_degrees(-45.0, 0.0).expect("valid"),
            radar_noise_var: 10f64.powf((-164.0 - 30.0) / 10.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_freq", self.carrier_freq),
            ("bandwidth", self.bandwidth),
            ("pri", self.pri),
            ("pulse_power", self.pulse_power),
            ("feeder_gain", self.feeder_gain),
            ("feeder_distance", self.feeder_distance),
            ("radar_noise_var", self.radar_noise_var),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.pulse_width() > self.pri / 10.0 {
            return Err(invalid(format!(
                "pulse width {} s is not small against the PRI {} s",
                self.pulse_width(),
                self.pri
            )));
        }
        Ok(())
    }

    /// Δ = 1/B.
    pub fn pulse_width(&self) -> f64 {
        1.0 / self.bandwidth
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    /// Upper edge of the unambiguous Doppler interval, 1/(2T).
    pub fn max_unambiguous_doppler(&self) -> f64 {
        0.5 / self.pri
    }

    /// Pulse energy 𝒫Δ.
    pub fn pulse_energy(&self) -> f64 {
        self.pulse_power * self.pulse_width()
    }
}

/// `g = √(G_f·G_ris(φ_f))·λ/(4π d_f)·u_ris(φ_f)`.
pub fn feeder_ris_channel(params: &SystemParams, ris: &ArrayGeometry) -> Vec<Complex64> {
    let scale = (params.feeder_gain * element_gain(&params.feeder_direction)).sqrt() * params.wavelength()
        / (4.0 * PI * params.feeder_distance);
    steering_vector(ris, &params.feeder_direction)
        .into_iter()
        .map(|u| u * scale)
        .collect()
}

/// Swerling I variance `RCS/((4π)²·d⁴)`.
pub fn target_amplitude_variance(rcs: f64, range: f64) -> Result<f64> {
    if !(rcs >= 0.0 && rcs.is_finite()) {
        return Err(invalid(format!("RCS must be non-negative, got {rcs}")));
    }
    if !(range > 0.0 && range.is_finite()) {
        return Err(invalid(format!("range must be positive, got {range}")));
    }
    Ok(rcs / ((4.0 * PI).powi(2) * range.powi(4)))
}

pub fn draw_target_amplitude<R: Rng + ?Sized>(rcs: f64, range: f64, rng: &mut R) -> Result<Complex64> {
    let var = target_amplitude_variance(rcs, range)?;
    if var == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(complex_normal(rng, var))
}

/// Autocorrelation of the unit-energy rectangular pulse of width `pulse_width`.
pub fn pulse_autocorr(t: f64, pulse_width: f64) -> f64 {
    (1.0 - t.abs() / pulse_width).max(0.0)
}

/// Statistics of the user multipath channel on one side.
#[derive(Debug, Clone, PartialEq)]
pub struct UserSideConfig {
    pub side: HalfSpace,
    pub paths: usize,
    pub tau_min: f64,
    pub tau_max: f64,
    /// Radians, open interval.
    pub azimuth: (f64, f64),
    pub elevation: (f64, f64),
    pub path_variance: f64,
}

impl UserSideConfig {
    pub fn reference(side: HalfSpace) -> Self {
        let az = match side {
            HalfSpace::Transmissive => (170f64, 180f64),
            HalfSpace::Reflective => (15f64, 25f64),
        };
        Self {
            side,
            paths: 3,
            tau_min: 0.0,
            tau_max: 260e-9,
            azimuth: (az.0.to_radians(), az.1.to_radians()),
            elevation: ((-25f64).to_radians(), (-15f64).to_radians()),
            path_variance: 1.0,
        }
    }

    /// `L = ⌈(τ_max − τ_min + 2Δ)·B⌉`.
    pub fn taps(&self, params: &SystemParams) -> usize {
        let x = (self.tau_max - self.tau_min + 2.0 * params.pulse_width()) * params.bandwidth;
        // the products are integers in exact arithmetic for on-grid delays
        (x - 1e-9).ceil().max(1.0) as usize
    }

    /// Direction at the centre of the departure rectangle.
    pub fn central_direction(&self) -> Result<AngularDirection> {
        AngularDirection::new(
            0.5 * (self.azimuth.0 + self.azimuth.1),
            0.5 * (self.elevation.0 + self.elevation.1),
        )
    }

    pub fn validate(&self, params: &SystemParams) -> Result<()> {
        if self.paths == 0 {
            return Err(invalid("a user channel needs at least one path"));
        }
        let delta = params.pulse_width();
        if !(self.tau_min >= 0.0 && self.tau_min <= self.tau_max && self.tau_max <= params.pri - 2.0 * delta) {
            return Err(invalid(format!(
                "user delays must satisfy 0 ≤ τ_min ≤ τ_max ≤ T − 2Δ, got [{}, {}]",
                self.tau_min, self.tau_max
            )));
        }
        if !(self.path_variance > 0.0 && self.path_variance.is_finite()) {
            return Err(invalid("path variance must be positive"));
        }
        let (a0, a1) = self.azimuth;
        let (e0, e1) = self.elevation;
        if !(a0 < a1 && e0 < e1) {
            return Err(invalid("angle rectangle bounds must be increasing"));
        }
        for az in [a0, a1] {
            for el in [e0, e1] {
                // the open rectangle may touch the validity boundary
                let probe = AngularDirection::new(
                    az + 1e-12 * (a0 + a1 - 2.0 * az).signum(),
                    el + 1e-12 * (e0 + e1 - 2.0 * el).signum(),
                )?;
                if probe.half_space() != self.side {
                    return Err(Error::HalfSpaceMismatch {
                        expected: self.side,
                        found: probe.half_space(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// One propagation path from the STAR-RIS to a user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserPath {
    pub amplitude: Complex64,
    pub delay: f64,
    pub departure: AngularDirection,
}

pub fn draw_user_paths<R: Rng + ?Sized>(cfg: &UserSideConfig, params: &SystemParams, rng: &mut R) -> Result<Vec<UserPath>> {
    let taps = cfg.taps(params);
    let mut out = Vec::with_capacity(cfg.paths);
    for _ in 0..cfg.paths {
        let ell = rng.random_range(0..taps);
        let delay = cfg.tau_min + ell as f64 / params.bandwidth;
        let az = cfg.azimuth.0 + rng.random::<f64>() * (cfg.azimuth.1 - cfg.azimuth.0);
        let el = cfg.elevation.0 + rng.random::<f64>() * (cfg.elevation.1 - cfg.elevation.0);
        let departure = AngularDirection::new(az, el)?;
        let amplitude = complex_normal(rng, cfg.path_variance);
        out.push(UserPath {
            amplitude,
            delay,
            departure,
        });
    }
    Ok(out)
}

/// Tap amplitudes of the feeder → STAR-RIS → user discrete-time channel.
pub fn user_channel_taps(
    paths: &[UserPath],
    beamformer: &SpatialBeamformer,
    g: &[Complex64],
    ris: &ArrayGeometry,
    params: &SystemParams,
    tau_min: f64,
    taps: usize,
) -> Vec<Complex64> {
    let mut beta = vec![Complex64::new(0.0, 0.0); taps];
    for path in paths {
        if path.amplitude == Complex64::new(0.0, 0.0) {
            continue;
        }
        // offset (τ_min + ℓ/B − τ_k)/Δ = ℓ + shift, Δ = 1/B
        let mut shift = (tau_min - path.delay) * params.bandwidth;
        if (shift - shift.round()).abs() < 1e-9 {
            shift = shift.round();
        }
        let lo = (-shift - 1.0).floor().max(0.0) as usize;
        let hi = ((-shift + 1.0).ceil().max(0.0) as usize).min(taps.saturating_sub(1));
        let mut factor = None;
        for (ell, b) in beta.iter_mut().enumerate().take(hi + 1).skip(lo) {
            let r = pulse_autocorr(ell as f64 + shift, 1.0);
            if r > 0.0 {
                let f = *factor.get_or_insert_with(|| {
                    path.amplitude
                        * (params.pulse_energy() * element_gain(&path.departure)).sqrt()
                        * ris_beampattern_gain(beamformer, g, &path.departure, ris)
                });
                *b += f * r;
            }
        }
    }
    beta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Substreams;
    use crate::starris::design_spatial_beamformer;
    use approx::assert_relative_eq;

    #[test]
    fn feeder_channel_reference_magnitude() {
        let p = SystemParams::reference();
        let ris = ArrayGeometry::square(256).unwrap();
        let g = feeder_ris_channel(&p, &ris);
        // √(100·(π/4)·cos²45°)·λ/(4π·3) with λ = c/28 GHz
        let lambda = 299_792_458.0 / 28e9;
        let expect = (100.0 * std::f64::consts::FRAC_PI_4 * 0.5f64).sqrt() * lambda / (4.0 * PI * 3.0);
        assert_relative_eq!(expect, 1.78e-3, max_relative = 5e-3);
        for (gn, un) in g.iter().zip(steering_vector(&ris, &p.feeder_direction)) {
            assert_relative_eq!(gn.norm(), expect, max_relative = 1e-12);
            assert!((gn.arg() - un.arg()).abs() < 1e-12 || (gn.arg() - un.arg()).abs() > 2.0 * PI - 1e-12);
        }
        let mut far = p.clone();
        far.feeder_distance = 6.0;
        let g2 = feeder_ris_channel(&far, &ris);
        for (a, b) in g.iter().zip(&g2) {
            assert_relative_eq!(b.norm(), a.norm() / 2.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn autocorr_examples() {
        let d = 20e-9;
        assert_eq!(pulse_autocorr(0.0, d), 1.0);
        assert_eq!(pulse_autocorr(d, d), 0.0);
        assert_eq!(pulse_autocorr(-d, d), 0.0);
        assert_relative_eq!(pulse_autocorr(d / 2.0, d), 0.5);
        assert_eq!(pulse_autocorr(-0.3 * d, d), pulse_autocorr(0.3 * d, d));
        assert_eq!(pulse_autocorr(3.0 * d, d), 0.0);
    }

    #[test]
    fn swerling_variance() {
        assert_eq!(draw_target_amplitude(0.0, 10.0, &mut Substreams::new(0, "x", 0).trial(0)).unwrap(), Complex64::new(0.0, 0.0));
        let var = target_amplitude_variance(1.0, 10.0).unwrap();
        assert_relative_eq!(var, 1.0 / ((4.0 * PI).powi(2) * 1e4), max_relative = 1e-14);
        assert_relative_eq!(var, 6.33e-7, max_relative = 1e-3);
        assert!(target_amplitude_variance(-1.0, 10.0).is_err());
        assert!(target_amplitude_variance(1.0, 0.0).is_err());

        let mut rng = Substreams::new(3, "swerling", 0).trial(0);
        let n = 100_000;
        let draws: Vec<Complex64> = (0..n).map(|_| draw_target_amplitude(1.0, 10.0, &mut rng).unwrap()).collect();
        let sample = draws.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        // |z|²/var is Exp(1): the sample mean has relative std 1/√n
        assert!((sample / var - 1.0).abs() < 3.0 / (n as f64).sqrt(), "{sample} vs {var}");
        assert!((sample / var - 1.0).abs() < 0.03);
    }

    #[test]
    fn reference_user_config() {
        let p = SystemParams::reference();
        for side in HalfSpace::BOTH {
            let cfg = UserSideConfig::reference(side);
            cfg.validate(&p).unwrap();
            assert_eq!(cfg.taps(&p), 15);
        }
        let mut bad = UserSideConfig::reference(HalfSpace::Transmissive);
        bad.azimuth = (15f64.to_radians(), 25f64.to_radians());
        assert!(matches!(bad.validate(&p), Err(Error::HalfSpaceMismatch { .. })));
        let mut bad = UserSideConfig::reference(HalfSpace::Reflective);
        bad.tau_max = p.pri;
        assert!(bad.validate(&p).is_err());
    }

    #[test]
    fn user_paths_on_support() {
        let p = SystemParams::reference();
        let mut rng = Substreams::new(5, "paths", 0).trial(0);
        for side in HalfSpace::BOTH {
            let cfg = UserSideConfig::reference(side);
            for _ in 0..200 {
                let paths = draw_user_paths(&cfg, &p, &mut rng).unwrap();
                assert_eq!(paths.len(), 3);
                for path in paths {
                    let ell = path.delay * p.bandwidth;
                    assert!((ell - ell.round()).abs() < 1e-9 && ell.round() < 15.0);
                    assert!(path.departure.az() > cfg.azimuth.0 - 1e-15 && path.departure.az() < cfg.azimuth.1);
                    assert!(path.departure.el() > cfg.elevation.0 - 1e-15 && path.departure.el() < cfg.elevation.1);
                    assert_eq!(path.departure.half_space(), side);
                }
            }
        }
        let cfg = UserSideConfig::reference(HalfSpace::Reflective);
        let n = 100_000;
        let mut acc = 0.0;
        let mut count = 0;
        while count < n {
            for path in draw_user_paths(&cfg, &p, &mut rng).unwrap() {
                acc += path.amplitude.norm_sqr();
                count += 1;
            }
        }
        assert!((acc / count as f64 - 1.0).abs() < 0.03);
    }

    #[test]
    fn taps_single_path_and_sparsity() {
        let p = SystemParams::reference();
        let ris = ArrayGeometry::square(16).unwrap();
        let g = feeder_ris_channel(&p, &ris);
        let s = design_spatial_beamformer(&g, &AngularDirection::from_degrees(20.0, 0.0).unwrap(), &ris, HalfSpace::Reflective).unwrap();
        let dir = AngularDirection::from_degrees(22.0, -18.0).unwrap();
        let alpha = Complex64::new(0.3, -1.1);
        let path = UserPath { amplitude: alpha, delay: 4.0 / p.bandwidth, departure: dir };
        let beta = user_channel_taps(&[path], &s, &g, &ris, &p, 0.0, 15);
        let bp = ris_beampattern_gain(&s, &g, &dir, &ris);
        let expect = alpha.norm() * (p.pulse_energy() * element_gain(&dir)).sqrt() * bp.norm();
        for (ell, b) in beta.iter().enumerate() {
            if ell == 4 {
                assert_relative_eq!(b.norm(), expect, max_relative = 1e-12);
            } else {
                assert_eq!(*b, Complex64::new(0.0, 0.0));
            }
        }
        let zero = UserPath { amplitude: Complex64::new(0.0, 0.0), ..path };
        assert!(user_channel_taps(&[zero, zero], &s, &g, &ris, &p, 0.0, 15).iter().all(|b| b.norm() == 0.0));

        let cfg = UserSideConfig::reference(HalfSpace::Reflective);
        let mut rng = Substreams::new(9, "taps", 0).trial(0);
        for _ in 0..100 {
            let paths = draw_user_paths(&cfg, &p, &mut rng).unwrap();
            let beta = user_channel_taps(&paths, &s, &g, &ris, &p, 0.0, 15);
            let mut delays: Vec<i64> = paths.iter().map(|q| (q.delay * p.bandwidth).round() as i64).collect();
            delays.sort();
            delays.dedup();
            assert_eq!(beta.iter().filter(|b| b.norm() > 0.0).count(), delays.len());
        }
    }

    #[test]
    fn off_grid_delay_spreads_over_two_taps() {
        let p = SystemParams::reference();
        let ris = ArrayGeometry::square(4).unwrap();
        let g = feeder_ris_channel(&p, &ris);
        let s = design_spatial_beamformer(&g, &AngularDirection::from_degrees(20.0, 0.0).unwrap(), &ris, HalfSpace::Reflective).unwrap();
        let path = UserPath {
            amplitude: Complex64::new(1.0, 0.0),
            delay: 2.25 / p.bandwidth,
            departure: AngularDirection::from_degrees(20.0, -20.0).unwrap(),
        };
        let beta = user_channel_taps(&[path], &s, &g, &ris, &p, 0.0, 6);
        assert_relative_eq!(beta[3].norm() / beta[2].norm(), 0.25 / 0.75, max_relative = 1e-12);
        assert_eq!(beta.iter().filter(|b| b.norm() > 0.0).count(), 2);
    }
}
