//! Gaussian naive Bayes with maximum-likelihood parameter estimates.

use crate::error::{Error, Result};

/// Variances are floored here to keep the log densities finite when a
/// feature is constant within a class.
pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GnbParams {
    /// Class priors, positive and summing to 1.
    pub prior: [f64; 2],
    /// Per-class feature means.
    pub mean: [Vec<f64>; 2],
    /// Per-class feature variances (population denominator, floored).
    pub var: [Vec<f64>; 2],
}

impl GnbParams {
    pub fn dim(&self) -> usize {
        self.mean[0].len()
    }
}

/// Maximum-likelihood fit: priors are class frequencies, means/variances
/// per class and feature use the population denominator.
pub fn gnb_fit(features: &[Vec<f64>], classes: &[u8]) -> Result<GnbParams> {
    if features.len() != classes.len() {
        return Err(Error::Shape(format!(
            "features ({}) and classes ({}) differ in length",
            features.len(),
            classes.len()
        )));
    }
    if features.is_empty() {
        return Err(Error::InsufficientData("cannot fit on an empty set".into()));
    }
    let dim = features[0].len();
    if let Some(bad) = features.iter().find(|f| f.len() != dim) {
        return Err(Error::Shape(format!(
            "inconsistent feature dimension: {} vs {dim}",
            bad.len()
        )));
    }
    let n1 = classes.iter().filter(|&&c| c == 1).count();
    let n0 = classes.len() - n1;
    if n0 == 0 || n1 == 0 {
        return Err(Error::SingleClass(if n0 == 0 { 1 } else { 0 }));
    }

    let mut mean = [vec![0.0; dim], vec![0.0; dim]];
    for (x, &c) in features.iter().zip(classes) {
        for d in 0..dim {
            mean[c as usize][d] += x[d];
        }
    }
    let counts = [n0 as f64, n1 as f64];
    for c in 0..2 {
        for d in 0..dim {
            mean[c][d] /= counts[c];
        }
    }
    let mut var = [vec![0.0; dim], vec![0.0; dim]];
    for (x, &c) in features.iter().zip(classes) {
        let c = c as usize;
        for d in 0..dim {
            let diff = x[d] - mean[c][d];
            var[c][d] += diff * diff;
        }
    }
    for c in 0..2 {
        for d in 0..dim {
            var[c][d] = (var[c][d] / counts[c]).max(VARIANCE_FLOOR);
        }
    }
    let total = classes.len() as f64;
    Ok(GnbParams { prior: [n0 as f64 / total, n1 as f64 / total], mean, var })
}

/// Posterior probability of class 1 given `x`, computed in the log domain
/// and normalized.
pub fn gnb_predict(params: &GnbParams, x: &[f64]) -> Result<f64> {
    if x.len() != params.dim() {
        return Err(Error::Shape(format!(
            "input dimension {} does not match fitted dimension {}",
            x.len(),
            params.dim()
        )));
    }
    let log_joint = |c: usize| -> f64 {
        let mut l = params.prior[c].ln();
        for d in 0..x.len() {
            let var = params.var[c][d];
            let diff = x[d] - params.mean[c][d];
            l += -0.5 * (2.0 * std::f64::consts::PI * var).ln() - diff * diff / (2.0 * var);
        }
        l
    };
    let l0 = log_joint(0);
    let l1 = log_joint(1);
    // p1 = exp(l1) / (exp(l0) + exp(l1)), computed stably.
    Ok(1.0 / (1.0 + (l0 - l1).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn two_point_fit() {
        let features = vec![vec![0.0], vec![1.0]];
        let params = gnb_fit(&features, &[0, 1]).unwrap();
        assert_eq!(params.prior, [0.5, 0.5]);
        assert_eq!(params.mean[0], vec![0.0]);
        assert_eq!(params.mean[1], vec![1.0]);
        assert_eq!(params.var[0], vec![VARIANCE_FLOOR]);
    }

    #[test]
    fn duplicated_dataset_same_parameters() {
        let mut rng = Rng::new(1);
        let features: Vec<Vec<f64>> =
            (0..20).map(|_| (0..3).map(|_| rng.uniform_in(-1.0, 1.0)).collect()).collect();
        let classes: Vec<u8> = (0..20).map(|i| u8::from(i % 2 == 0)).collect();
        let p1 = gnb_fit(&features, &classes).unwrap();
        let mut doubled = features.clone();
        doubled.extend_from_slice(&features);
        let mut classes2 = classes.clone();
        classes2.extend_from_slice(&classes);
        let p2 = gnb_fit(&doubled, &classes2).unwrap();
        assert_eq!(p1.prior, p2.prior);
        for c in 0..2 {
            for d in 0..3 {
                assert!((p1.mean[c][d] - p2.mean[c][d]).abs() < 1e-12);
                assert!((p1.var[c][d] - p2.var[c][d]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_class_rejected() {
        let features = vec![vec![0.0], vec![1.0]];
        assert!(matches!(gnb_fit(&features, &[1, 1]), Err(Error::SingleClass(1))));
    }

    #[test]
    fn separation_and_symmetry() {
        // Two well-separated classes.
        let mut features = Vec::new();
        let mut classes = Vec::new();
        for i in 0..40 {
            let c = u8::from(i >= 20);
            let center = if c == 1 { 10.0 } else { 0.0 };
            features.push(vec![center + 0.05 * (i % 5) as f64]);
            classes.push(c);
        }
        let params = gnb_fit(&features, &classes).unwrap();
        assert!(gnb_predict(&params, &[10.1]).unwrap() > 0.99);
        assert!(gnb_predict(&params, &[-0.1]).unwrap() < 0.01);
        // Equidistant input between symmetric classes -> 0.5.
        let symmetric = GnbParams {
            prior: [0.5, 0.5],
            mean: [vec![-1.0], vec![1.0]],
            var: [vec![0.5], vec![0.5]],
        };
        assert!((gnb_predict(&symmetric, &[0.0]).unwrap() - 0.5).abs() < 1e-12);
    }

    /// Brute-force oracle: direct Gaussian densities multiplied out and
    /// normalized, no log domain.
    fn brute_force_posterior(params: &GnbParams, x: &[f64]) -> f64 {
        let density = |c: usize| -> f64 {
            let mut p = params.prior[c];
            for d in 0..x.len() {
                let var = params.var[c][d];
                let diff = x[d] - params.mean[c][d];
                p *= (-diff * diff / (2.0 * var)).exp()
                    / (2.0 * std::f64::consts::PI * var).sqrt();
            }
            p
        };
        let p0 = density(0);
        let p1 = density(1);
        p1 / (p0 + p1)
    }

    #[test]
    fn posterior_matches_brute_force_bayes() {
        let mut rng = Rng::new(99);
        for trial in 0..100 {
            let dim = 1 + rng.below(5);
            let n = 30 + rng.below(40);
            let mut features = Vec::with_capacity(n);
            let mut classes = Vec::with_capacity(n);
            for i in 0..n {
                let c = u8::from(i % 2 == 1);
                let shift = if c == 1 { 1.5 } else { -0.5 };
                features.push(
                    (0..dim).map(|_| shift + rng.normal(0.0, 1.0)).collect::<Vec<f64>>(),
                );
                classes.push(c);
            }
            let params = gnb_fit(&features, &classes).unwrap();
            let x: Vec<f64> = (0..dim).map(|_| rng.uniform_in(-2.0, 3.0)).collect();
            let fast = gnb_predict(&params, &x).unwrap();
            let brute = brute_force_posterior(&params, &x);
            assert!(
                (fast - brute).abs() < 1e-10,
                "trial {trial}: {fast} vs brute {brute}"
            );
        }
    }
}
