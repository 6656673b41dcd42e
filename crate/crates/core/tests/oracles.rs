mod common;

use common::{gic_oracle_agreement, ks_distance, ml_oracle_agreement, random_covariance, PRI};
use num_complex::Complex64;
use starisac::codebook::radar_only_codes;
use starisac::radar::{whitened_template, DetectorGrids, DopplerGrid, GicDetector, Hypothesis, NoiseCovariance};
use starisac::rng::{fill_complex_normal, Substreams};
use statrs::distribution::{ContinuousCDF, Exp};

#[test]
fn detector_matches_exhaustive_evaluation_white() {
    let seen = gic_oracle_agreement(true, 11, 1000).unwrap();
    assert!(seen.iter().all(|&n| n > 20), "hypothesis mix {seen:?}");
}

#[test]
fn detector_matches_exhaustive_evaluation_coloured() {
    let seen = gic_oracle_agreement(false, 12, 1000).unwrap();
    assert!(seen.iter().all(|&n| n > 20), "hypothesis mix {seen:?}");
}

#[test]
fn decoder_matches_profiled_likelihood() {
    let errors = ml_oracle_agreement(5, 1000).unwrap();
    // the noise range must make the comparison non-trivial
    assert!(errors > 20, "{errors}");
}

#[test]
fn null_statistic_is_unit_exponential() {
    let exp = Exp::new(1.0).unwrap();
    for (k, white) in [true, false].into_iter().enumerate() {
        let streams = Substreams::new(3, "ks", k as u64);
        let mut rng = streams.trial(u64::MAX);
        let p = 8;
        let noise = if white {
            NoiseCovariance::white(p, 2.5).unwrap()
        } else {
            NoiseCovariance::full(random_covariance(p, 0.3, &mut rng)).unwrap()
        };
        let chol = noise.matrix().cholesky().unwrap().l();
        let codes = radar_only_codes(p).unwrap();
        let xi = whitened_template(codes.reflective.values(), 1234.5, PRI, &noise).unwrap();
        let stats: Vec<f64> = (0..10_000)
            .map(|i| {
                let mut r = streams.trial(i);
                let mut w = vec![Complex64::new(0.0, 0.0); p];
                fill_complex_normal(&mut r, 1.0, &mut w);
                let z = &chol * nalgebra::DVector::from_vec(w);
                let s: Complex64 = xi.iter().zip(z.iter()).map(|(a, b)| a.conj() * b).sum();
                s.norm_sqr()
            })
            .collect();
        let d = ks_distance(stats, |x| exp.cdf(x));
        // 5% critical value 1.358/√n
        assert!(d < 1.358 / 100.0, "white = {white}: D = {d}");
    }
}

#[test]
fn single_grid_point_null_rate_has_closed_form() {
    // one grid point per side with orthogonal codes: P(Ĥ ≠ H0) = 1 − (1 − e^{−η})²
    let codes = radar_only_codes(8).unwrap();
    let grids = DetectorGrids { transmissive: DopplerGrid::single(500.0), reflective: DopplerGrid::single(500.0) };
    let noise = NoiseCovariance::white(8, 1.0).unwrap();
    let det = GicDetector::new(&codes, &grids, &noise, PRI).unwrap();
    let streams = Substreams::new(8, "closed-form", 0);
    let n = 200_000u64;
    for eta in [1.0, 3.0] {
        let hits = (0..n)
            .filter(|&i| {
                let mut rng = streams.trial(i);
                let mut w = vec![Complex64::new(0.0, 0.0); 8];
                fill_complex_normal(&mut rng, 1.0, &mut w);
                det.statistics_whitened(&w).decide(eta) != Hypothesis::H0
            })
            .count() as f64;
        let p = 1.0 - (1.0 - (-eta).exp()).powi(2);
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits / n as f64 - p).abs() < 4.0 * sd, "η = {eta}: {} vs {p}", hits / n as f64);
    }
}
