//! STAR-RIS spatial beamforming and the radar-path gain coefficient.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::channel::{feeder_ris_channel, SystemParams};
use crate::error::{Error, Result};
use crate::geometry::{element_gain, steering_vector, AngularDirection, ArrayGeometry, HalfSpace};

/// Unit-modulus spatial weights of one STAR-RIS side.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialBeamformer {
    side: HalfSpace,
    weights: Vec<Complex64>,
}

impl SpatialBeamformer {
    pub fn new(side: HalfSpace, weights: Vec<Complex64>) -> Result<Self> {
        if weights.iter().any(|w| (w.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::InvalidParameter("spatial beamformer weights must have unit modulus".into()));
        }
        Ok(Self { side, weights })
    }

    pub fn side(&self) -> HalfSpace {
        self.side
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    /// Same beamformer with a global phase rotation.
    pub fn rotated(&self, theta: f64) -> Self {
        let r = Complex64::from_polar(1.0, theta);
        Self {
            side: self.side,
            weights: self.weights.iter().map(|w| w * r).collect(),
        }
    }
}

/// Phase-conjugating weights `exp(−i(∠g_n + ∠u_ris(φ)_n))` towards `target`.
pub fn design_spatial_beamformer(
    g: &[Complex64],
    target: &AngularDirection,
    ris: &ArrayGeometry,
    side: HalfSpace,
) -> Result<SpatialBeamformer> {
    if target.half_space() != side {
        return Err(Error::HalfSpaceMismatch {
            expected: side,
            found: target.half_space(),
        });
    }
    if g.len() != ris.n_elements() {
        return Err(Error::LengthMismatch {
            expected: ris.n_elements(),
            got: g.len(),
        });
    }
    let u = steering_vector(ris, target);
    let weights = g
        .iter()
        .zip(&u)
        .map(|(gn, un)| Complex64::from_polar(1.0, -(gn.arg() + un.arg())))
        .collect();
    Ok(SpatialBeamformer { side, weights })
}

/// `u(dir)ᵀ·w`, accumulated with phasor recurrences instead of one
/// exponential per element.
pub(crate) fn steering_inner(geom: &ArrayGeometry, dir: &AngularDirection, w: &[Complex64]) -> Complex64 {
    let side = geom.side();
    let step_m = Complex64::from_polar(1.0, PI * dir.el().cos() * dir.az().sin());
    let step_n = Complex64::from_polar(1.0, PI * dir.el().sin());
    let mut row_phase = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for row in w.chunks_exact(side) {
        let mut inner = Complex64::new(0.0, 0.0);
        let mut ph = Complex64::new(1.0, 0.0);
        for &x in row {
            inner += ph * x;
            ph *= step_n;
        }
        acc += row_phase * inner;
        row_phase *= step_m;
    }
    acc
}

/// Array factor `u_ris(dir)ᵀ·diag(g)·s` of the STAR-RIS towards `dir`.
pub fn ris_beampattern_gain(s: &SpatialBeamformer, g: &[Complex64], dir: &AngularDirection, ris: &ArrayGeometry) -> Complex64 {
    let w: Vec<Complex64> = g.iter().zip(&s.weights).map(|(a, b)| a * b).collect();
    steering_inner(ris, dir, &w)
}

/// Radar-path coefficient
/// `γ = √(𝒫Δ·G_rad·G_ris·λ²/(4π))·(s_radᴴ u_rad(φ))·(u_ris(φ)ᵀ diag(g) s)`.
pub fn radar_gain_coefficient(
    dir: &AngularDirection,
    s_side: &SpatialBeamformer,
    s_rad: &[Complex64],
    g: &[Complex64],
    params: &SystemParams,
    ris: &ArrayGeometry,
    rad: &ArrayGeometry,
) -> Complex64 {
    let gain = element_gain(dir);
    let lambda = params.wavelength();
    let amp = (params.pulse_energy() * gain * gain * lambda * lambda / (4.0 * PI)).sqrt();
    let conj_s: Vec<Complex64> = s_rad.iter().map(|v| v.conj()).collect();
    let pesa = steering_inner(rad, dir, &conj_s);
    amp * pesa * ris_beampattern_gain(s_side, g, dir, ris)
}

/// PESA analog beamformer `u_rad(φ)/√N_rad`.
pub fn design_pesa_beamformer(dir: &AngularDirection, rad: &ArrayGeometry) -> Vec<Complex64> {
    let scale = 1.0 / (rad.n_elements() as f64).sqrt();
    steering_vector(rad, dir).into_iter().map(|u| u * scale).collect()
}

/// The fixed hardware state of the transceiver for one scenario.
#[derive(Debug, Clone)]
pub struct Transceiver {
    pub params: SystemParams,
    pub ris: ArrayGeometry,
    pub rad: ArrayGeometry,
    pub feeder_channel: Vec<Complex64>,
    pub target_tr: AngularDirection,
    pub target_re: AngularDirection,
    pub s_tr: SpatialBeamformer,
    pub s_re: SpatialBeamformer,
    pub s_rad: Vec<Complex64>,
    pub gamma_tr: Complex64,
    pub gamma_re: Complex64,
}

impl Transceiver {
    /// Builds the beamformers for the monitored transmissive direction and
    /// its mirror image on the reflective side.
    pub fn new(params: SystemParams, ris: ArrayGeometry, rad: ArrayGeometry, target_tr: AngularDirection) -> Result<Self> {
        params.validate()?;
        let target_re = target_tr.mirror();
        let g = feeder_ris_channel(&params, &ris);
        let s_tr = design_spatial_beamformer(&g, &target_tr, &ris, HalfSpace::Transmissive)?;
        let s_re = design_spatial_beamformer(&g, &target_re, &ris, HalfSpace::Reflective)?;
        let s_rad = design_pesa_beamformer(&target_tr, &rad);
        let gamma_tr = radar_gain_coefficient(&target_tr, &s_tr, &s_rad, &g, &params, &ris, &rad);
        let gamma_re = radar_gain_coefficient(&target_re, &s_re, &s_rad, &g, &params, &ris, &rad);
        Ok(Self {
            params,
            ris,
            rad,
            feeder_channel: g,
            target_tr,
            target_re,
            s_tr,
            s_re,
            s_rad,
            gamma_tr,
            gamma_re,
        })
    }

    pub fn beamformer(&self, side: HalfSpace) -> &SpatialBeamformer {
        match side {
            HalfSpace::Transmissive => &self.s_tr,
            HalfSpace::Reflective => &self.s_re,
        }
    }

    pub fn gamma(&self, side: HalfSpace) -> Complex64 {
        match side {
            HalfSpace::Transmissive => self.gamma_tr,
            HalfSpace::Reflective => self.gamma_re,
        }
    }

    pub fn beampattern(&self, side: HalfSpace, dir: &AngularDirection) -> Complex64 {
        ris_beampattern_gain(self.beamformer(side), &self.feeder_channel, dir, &self.ris)
    }
}
