//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use starisac::codebook::{build_codebooks, radar_only_codes, CodePair, Codebook, ColumnOrder};
use starisac::comm::{ml_decode_slot, synth_user_slot, UserSlotObservation};
use starisac::radar::{doppler_template, CodeMode, CodeSource, DetectorGrids, DopplerGrid, GicDetector, Hypothesis, NoiseCovariance};
use starisac::rng::{complex_normal, fill_complex_normal, Substreams};

pub const PRI: f64 = 0.25e-3;

pub const GRAM_FLOOR: f64 = 1e-10;

pub fn template(code: &[f64], doppler: f64, pri: f64) -> DVector<Complex64> {
    DVector::from_iterator(
        code.len(),
        code.iter().enumerate().map(|(p, &c)| {
            Complex64::from_polar(c, 2.0 * std::f64::consts::PI * doppler * pri * p as f64)
        }),
    )
}

/// Outcome of the exhaustive detector: hypothesis, grid Dopplers and objectives.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleDecision {
    pub hypothesis: Hypothesis,
    pub doppler_tr: Option<f64>,
    pub doppler_re: Option<f64>,
    pub objectives: [f64; 4],
}

/// `(A)^{-1/2}` of a Hermitian positive definite matrix by eigendecomposition.
fn inv_sqrt(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = a.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::new(1.0 / l.sqrt(), 0.0)));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Exhaustive evaluation of the four GIC objectives with explicit `C⁻¹` and
/// `Ξ = C⁻¹H(HᴴC⁻¹H)^{-1/2}`.
pub fn gic_oracle(
    y: &[Complex64],
    codes: &CodePair,
    grids: &DetectorGrids,
    cov: &DMatrix<Complex64>,
    pri: f64,
    penalty: f64,
) -> OracleDecision {
    let cinv = cov.clone().try_inverse().expect("invertible covariance");
    let y = DVector::from_column_slice(y);

    let single = |code: &[f64], grid: &starisac::radar::DopplerGrid| {
        let mut best = (f64::NEG_INFINITY, 0.0);
        for nu in grid.points() {
            let h = template(code, nu, pri);
            let ch = &cinv * &h;
            let xi = &ch / Complex64::new(h.dotc(&ch).re.sqrt(), 0.0);
            let v = xi.dotc(&y).norm_sqr();
            if v > best.0 {
                best = (v, nu);
            }
        }
        best
    };
    let (s_tr, nu_tr) = single(codes.transmissive.values(), &grids.transmissive);
    let (s_re, nu_re) = single(codes.reflective.values(), &grids.reflective);

    let mut joint = (f64::NEG_INFINITY, 0.0, 0.0);
    for nr in grids.reflective.points() {
        for nt in grids.transmissive.points() {
            let mut h = DMatrix::zeros(y.len(), 2);
            h.set_column(0, &template(codes.reflective.values(), nr, pri));
            h.set_column(1, &template(codes.transmissive.values(), nt, pri));
            let gram = h.adjoint() * &cinv * &h;
            let eig = gram.clone().symmetric_eigen();
            let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
            if !(hi > 0.0) || lo < GRAM_FLOOR * hi {
                continue;
            }
            let xi = &cinv * &h * inv_sqrt(&gram);
            let v = (xi.adjoint() * &y).norm_squared();
            if v > joint.0 {
                joint = (v, nt, nr);
            }
        }
    }
    let objectives = [0.0, s_tr - penalty, s_re - penalty, joint.0 - 2.0 * penalty];
    let mut best = 0;
    for k in 1..4 {
        if objectives[k] > objectives[best] {
            best = k;
        }
    }
    let hypothesis = Hypothesis::ALL[best];
    let (doppler_tr, doppler_re) = match hypothesis {
        Hypothesis::H0 => (None, None),
        Hypothesis::H1Tr => (Some(nu_tr), None),
        Hypothesis::H1Re => (None, Some(nu_re)),
        Hypothesis::H2 => (Some(joint.1), Some(joint.2)),
    };
    OracleDecision {
        hypothesis,
        doppler_tr,
        doppler_re,
        objectives,
    }
}

/// Random Hermitian positive definite matrix `AAᴴ/n + floor·I`.
pub fn random_covariance<R: Rng>(n: usize, floor: f64, rng: &mut R) -> DMatrix<Complex64> {
    let a = DMatrix::from_fn(n, n, |_, _| complex_normal(rng, 1.0));
    let mut c = &a * a.adjoint() / Complex64::new(n as f64, 0.0);
    for i in 0..n {
        c[(i, i)] += floor;
    }
    // exact Hermitian symmetry
    (&c + c.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Codeword index minimizing the least-squares residual `min_β ‖Y − cβᵀ‖²`,
/// with `β` solved by SVD for each candidate.
pub fn profiled_ml_oracle(y: &UserSlotObservation, book: &Codebook) -> usize {
    let ymat = DMatrix::from_fn(y.rows(), y.cols(), |p, l| y.get(p, l));
    let mut best = (f64::INFINITY, 0);
    for (k, cw) in book.codewords().iter().enumerate() {
        let c = DMatrix::from_fn(cw.len(), 1, |p, _| Complex64::new(cw[p], 0.0));
        let beta = c.clone().svd(true, true).solve(&ymat, 1e-12).expect("rank-one solve");
        let residual = (&ymat - &c * beta).norm_squared();
        if residual < best.0 {
            best = (residual, k);
        }
    }
    best.1
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance(mut sample: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn random_grid<R: Rng>(rng: &mut R) -> DopplerGrid {
    let count = rng.random_range(1..=4);
    let step = rng.random_range(5.0..120.0);
    let start = rng.random_range(-1900.0..(1900.0 - 4.0 * 120.0));
    DopplerGrid::new(start, step, count).unwrap()
}

/// Runs the fast detector and [`gic_oracle`] on random small instances;
/// returns how often each hypothesis was selected, or the first mismatch.
pub fn gic_oracle_agreement(white: bool, seed: u64, trials: u64) -> Result<[u32; 4], String> {
    let streams = Substreams::new(seed, "gic-oracle", u64::from(white));
    let mut seen = [0u32; 4];
    for trial in 0..trials {
        let mut rng = streams.trial(trial);
        // at P = 2 any two templates span the space, so the joint argmax is not identifiable
        let p = [4usize, 8][rng.random_range(0..2)];
        let codes = if rng.random::<bool>() {
            let m = if p == 8 && rng.random() { 8 } else { 4 };
            CodeSource::new(CodeMode::WithComm { slot_pulses: m, bits: 1 }, p, ColumnOrder::ReversedTr)
                .unwrap()
                .draw(&mut rng)
        } else {
            radar_only_codes(p).unwrap()
        };
        let gt = random_grid(&mut rng);
        // a shared grid exercises the white-noise cross-term table
        let gr = if rng.random_range(0..3) == 0 { gt } else { random_grid(&mut rng) };
        let grids = DetectorGrids { transmissive: gt, reflective: gr };
        let (noise, cov) = if white {
            let var = rng.random_range(0.2..3.0);
            (NoiseCovariance::white(p, var).unwrap(), DMatrix::from_diagonal_element(p, p, Complex64::new(var, 0.0)))
        } else {
            let c = random_covariance(p, 0.2, &mut rng);
            (NoiseCovariance::full(c.clone()).unwrap(), c)
        };
        let mut y = vec![Complex64::new(0.0, 0.0); p];
        fill_complex_normal(&mut rng, 1.0, &mut y);
        for (code, grid) in [(codes.transmissive.values(), &gt), (codes.reflective.values(), &gr)] {
            if rng.random::<f64>() < 0.7 {
                let nu = grid.point(rng.random_range(0..grid.len())) + rng.random_range(-3.0..3.0);
                let power = rng.random_range(1.0..20.0);
                let amp = complex_normal(&mut rng, power);
                for (v, h) in y.iter_mut().zip(doppler_template(code, nu, PRI)) {
                    *v += amp * h;
                }
            }
        }
        let penalty = rng.random_range(0.5..12.0);

        let det = GicDetector::new(&codes, &grids, &noise, PRI).unwrap();
        let got = det.detect(&y, penalty).unwrap();
        let want = gic_oracle(&y, &codes, &grids, &cov, PRI, penalty);
        let close = got.objectives.iter().zip(&want.objectives).all(|(a, b)| (a - b).abs() <= 1e-8 * (1.0 + b.abs()));
        if got.hypothesis != want.hypothesis || got.doppler_tr != want.doppler_tr || got.doppler_re != want.doppler_re || !close {
            return Err(format!("trial {trial}: {got:?} vs {want:?}"));
        }
        seen[got.hypothesis.index()] += 1;
    }
    Ok(seen)
}

/// Compares [`ml_decode_slot`] with [`profiled_ml_oracle`] on random slots;
/// returns the number of decoding errors, or the first disagreement.
pub fn ml_oracle_agreement(seed: u64, trials: u64) -> Result<u32, String> {
    let streams = Substreams::new(seed, "ml-oracle", 0);
    let mut errors = 0;
    for trial in 0..trials {
        let mut rng = streams.trial(trial);
        let m = [2usize, 4, 8][rng.random_range(0..3)];
        let max_bits = (m / 2).trailing_zeros();
        let b = rng.random_range(0..=max_bits);
        let books = build_codebooks(m, b, ColumnOrder::ReversedTr).unwrap();
        let book = if rng.random() { &books.transmissive } else { &books.reflective };
        let taps = rng.random_range(1..=6);
        let beta: Vec<Complex64> = (0..taps).map(|_| complex_normal(&mut rng, 1.0)).collect();
        let sent = rng.random_range(0..book.len());
        let y = synth_user_slot(&beta, book.codeword(sent), rng.random_range(0.05..4.0), &mut rng).unwrap();
        let got = ml_decode_slot(&y, book).unwrap().index;
        let want = profiled_ml_oracle(&y, book);
        if got != want {
            return Err(format!("slot {trial}: decoder {got}, oracle {want}"));
        }
        errors += u32::from(got != sent);
    }
    Ok(errors)
}
