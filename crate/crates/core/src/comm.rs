//! CSI-free user receiver: slot observations, ML codeword decoding and the
//! reference SNR.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::UserSideConfig;
use crate::codebook::Codebook;
use crate::error::{invalid, Error, Result};
use crate::geometry::element_gain;
use crate::rng::complex_normal;
use crate::starris::Transceiver;

/// `M × L` matched-filter output of one slot, rows are pulses and columns
/// delay taps.
#[derive(Debug, Clone, PartialEq)]
pub struct UserSlotObservation {
    rows: usize,
    cols: usize,
    samples: Vec<Complex64>,
    /// Transmitted slot index, when known.
    pub sent: Option<usize>,
}

impl UserSlotObservation {
    pub fn from_row_major(rows: usize, cols: usize, samples: Vec<Complex64>) -> Result<Self> {
        if rows * cols != samples.len() || rows == 0 {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                got: samples.len(),
            });
        }
        Ok(Self {
            rows,
            cols,
            samples,
            sent: None,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, pulse: usize, tap: usize) -> Complex64 {
        self.samples[pulse * self.cols + tap]
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            samples: self.samples.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    /// Reorders the tap columns: output column `k` is input column `perm[k]`.
    pub fn permute_columns(&self, perm: &[usize]) -> Self {
        let mut samples = Vec::with_capacity(self.samples.len());
        for p in 0..self.rows {
            for &k in perm {
                samples.push(self.get(p, k));
            }
        }
        Self { samples, ..self.clone() }
    }
}

/// `Y = c·βᵀ + noise_std·Z` for a given standard noise matrix `Z`.
pub fn slot_from_noise(beta: &[Complex64], codeword: &[f64], noise_std: f64, z: &[Complex64]) -> Result<UserSlotObservation> {
    let (rows, cols) = (codeword.len(), beta.len());
    if z.len() != rows * cols {
        return Err(Error::LengthMismatch {
            expected: rows * cols,
            got: z.len(),
        });
    }
    let mut samples = Vec::with_capacity(rows * cols);
    for (p, &c) in codeword.iter().enumerate() {
        for (l, &b) in beta.iter().enumerate() {
            samples.push(b * c + z[p * cols + l] * noise_std);
        }
    }
    UserSlotObservation::from_row_major(rows, cols, samples)
}

/// `Y = c·βᵀ + Z`, `Z` i.i.d. `CN(0, noise_var)`.
pub fn synth_user_slot<R: Rng + ?Sized>(beta: &[Complex64], codeword: &[f64], noise_var: f64, rng: &mut R) -> Result<UserSlotObservation> {
    if !(noise_var >= 0.0) {
        return Err(invalid("noise variance must be non-negative"));
    }
    let z: Vec<Complex64> = (0..codeword.len() * beta.len()).map(|_| complex_normal(rng, 1.0)).collect();
    slot_from_noise(beta, codeword, noise_var.sqrt(), &z)
}

/// `‖cᴴY‖² / ‖c‖²`.
pub fn correlation_metric(y: &UserSlotObservation, codeword: &[f64]) -> f64 {
    let energy: f64 = codeword.iter().map(|c| c * c).sum();
    let mut acc = 0.0;
    for l in 0..y.cols {
        let s: Complex64 = codeword
            .iter()
            .enumerate()
            .map(|(p, &c)| y.samples[p * y.cols + l] * c)
            .sum();
        acc += s.norm_sqr();
    }
    acc / energy
}

/// Decoded slot: codeword index and its bit label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedSlot {
    pub index: usize,
    pub bits: Vec<u8>,
}

/// ML decoding without channel knowledge; ties go to the lowest index.
pub fn ml_decode_slot(y: &UserSlotObservation, book: &Codebook) -> Result<DecodedSlot> {
    if book.is_empty() {
        return Err(invalid("empty codebook"));
    }
    if y.rows != book.slot_pulses() {
        return Err(Error::LengthMismatch {
            expected: book.slot_pulses(),
            got: y.rows,
        });
    }
    let mut best = (f64::NEG_INFINITY, 0);
    for (k, cw) in book.codewords().iter().enumerate() {
        let m = correlation_metric(y, cw);
        if m > best.0 {
            best = (m, k);
        }
    }
    Ok(DecodedSlot {
        index: best.1,
        bits: book.bits_of(best.1),
    })
}

/// Received-power scale `𝒫Δ·G_ris(φ̄)·|u_ris(φ̄)ᵀ diag(g) s|²·σ²_u / L`
/// towards the centre of a user's departure rectangle, for the beamformer
/// of `beam_side`.
fn reference_power(transceiver: &Transceiver, user: &UserSideConfig, beam_side: crate::geometry::HalfSpace) -> Result<f64> {
    let centre = user.central_direction()?;
    let bp = transceiver.beampattern(beam_side, &centre);
    let taps = user.taps(&transceiver.params) as f64;
    Ok(transceiver.params.pulse_energy() * element_gain(&centre) * bp.norm_sqr() * user.path_variance / taps)
}

/// Noise variance that yields reference SNR `snr` (linear) for `user`.
pub fn reference_snr_to_noise(snr: f64, transceiver: &Transceiver, user: &UserSideConfig) -> Result<f64> {
    if !(snr > 0.0 && snr.is_finite()) {
        return Err(invalid(format!("reference SNR must be positive, got {snr}")));
    }
    Ok(reference_power(transceiver, user, user.side)? / snr)
}

/// Inverse of [`reference_snr_to_noise`].
pub fn reference_snr(noise_var: f64, transceiver: &Transceiver, user: &UserSideConfig) -> Result<f64> {
    if !(noise_var > 0.0) {
        return Err(invalid("noise variance must be positive"));
    }
    Ok(reference_power(transceiver, user, user.side)? / noise_var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::SystemParams;
    use crate::codebook::{build_codebooks, ColumnOrder};
    use crate::geometry::{AngularDirection, ArrayGeometry, HalfSpace};
    use crate::rng::Substreams;
    use approx::assert_relative_eq;

    fn beta(rng: &mut impl Rng, l: usize) -> Vec<Complex64> {
        (0..l).map(|_| complex_normal(rng, 1.0)).collect()
    }

    #[test]
    fn noiseless_structure() {
        let books = build_codebooks(8, 2, ColumnOrder::ReversedTr).unwrap();
        let mut rng = Substreams::new(1, "slot", 0).trial(0);
        let b = beta(&mut rng, 5);
        let cw = books.reflective.codeword(2);
        let y = synth_user_slot(&b, cw, 0.0, &mut rng).unwrap();
        for p in 0..8 {
            for l in 0..5 {
                assert_eq!(y.get(p, l), b[l] * cw[p]);
            }
        }
        // β = 0 leaves only noise
        let y = synth_user_slot(&[Complex64::new(0.0, 0.0); 5], cw, 2.0, &mut rng).unwrap();
        assert!(y.samples().iter().any(|v| v.norm() > 0.0));
    }

    #[test]
    fn noiseless_decode_and_metric() {
        let books = build_codebooks(16, 3, ColumnOrder::ReversedTr).unwrap();
        let mut rng = Substreams::new(2, "slot", 0).trial(0);
        for book in [&books.transmissive, &books.reflective] {
            for _ in 0..100 {
                let b = beta(&mut rng, 15);
                for j in 0..book.len() {
                    let y = synth_user_slot(&b, book.codeword(j), 0.0, &mut rng).unwrap();
                    let d = ml_decode_slot(&y, book).unwrap();
                    assert_eq!(d.index, j);
                    assert_eq!(d.bits, book.bits_of(j));
                }
            }
        }
        let b = beta(&mut rng, 15);
        let y = synth_user_slot(&b, books.transmissive.codeword(1), 0.0, &mut rng).unwrap();
        let e: f64 = b.iter().map(|v| v.norm_sqr()).sum();
        assert_relative_eq!(correlation_metric(&y, books.transmissive.codeword(1)), 8.0 * e, max_relative = 1e-12);
    }

    #[test]
    fn distractor_codeword_ties_to_lowest_index() {
        let books = build_codebooks(8, 1, ColumnOrder::Natural).unwrap();
        let mut rng = Substreams::new(3, "slot", 0).trial(0);
        let b = beta(&mut rng, 4);
        // a reflective codeword is orthogonal to every transmissive one
        let y = synth_user_slot(&b, books.reflective.codeword(0), 0.0, &mut rng).unwrap();
        for cw in books.transmissive.codewords() {
            assert_eq!(correlation_metric(&y, cw), 0.0);
        }
        assert_eq!(ml_decode_slot(&y, &books.transmissive).unwrap().index, 0);
    }

    #[test]
    fn csi_free_invariances() {
        let books = build_codebooks(8, 2, ColumnOrder::ReversedTr).unwrap();
        let mut rng = Substreams::new(4, "slot", 0).trial(0);
        for _ in 0..200 {
            let b = beta(&mut rng, 6);
            let y = synth_user_slot(&b, books.transmissive.codeword(3), 4.0, &mut rng).unwrap();
            let base = ml_decode_slot(&y, &books.transmissive).unwrap();
            let k = complex_normal(&mut rng, 1.0);
            assert_eq!(ml_decode_slot(&y.map(|v| v * k), &books.transmissive).unwrap(), base);
            let perm = [3, 0, 5, 1, 4, 2];
            assert_eq!(ml_decode_slot(&y.permute_columns(&perm), &books.transmissive).unwrap(), base);
        }
    }

    #[test]
    fn shape_errors() {
        let books = build_codebooks(8, 1, ColumnOrder::Natural).unwrap();
        let y = UserSlotObservation::from_row_major(4, 2, vec![Complex64::new(0.0, 0.0); 8]).unwrap();
        assert!(ml_decode_slot(&y, &books.transmissive).is_err());
        assert!(UserSlotObservation::from_row_major(4, 2, vec![Complex64::new(0.0, 0.0); 7]).is_err());
    }

    #[test]
    fn reference_snr_examples() {
        let ris = ArrayGeometry::square(256).unwrap();
        let t = Transceiver::new(SystemParams::reference(), ris, ris, AngularDirection::from_degrees(160.0, 0.0).unwrap()).unwrap();
        let user = UserSideConfig::reference(HalfSpace::Reflective);
        let n1 = reference_snr_to_noise(1.0, &t, &user).unwrap();
        let n2 = reference_snr_to_noise(2.0, &t, &user).unwrap();
        assert_relative_eq!(n2, n1 / 2.0, max_relative = 1e-14);
        assert_relative_eq!(reference_snr(n1 * 3.7, &t, &user).unwrap(), 1.0 / 3.7, max_relative = 1e-12);
        let centre = AngularDirection::from_degrees(20.0, -20.0).unwrap();
        let bp = t.beampattern(HalfSpace::Reflective, &centre);
        let expect = t.params.pulse_energy() * element_gain(&centre) * bp.norm_sqr() / 15.0;
        assert_relative_eq!(n1, expect, max_relative = 1e-12);
        assert!(reference_snr_to_noise(0.0, &t, &user).is_err());
    }
}
