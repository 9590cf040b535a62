//! Least-squares convergence exponents.

use log::warn;
use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    /// Pairs `(eps, error)` used in the fit.
    pub pairs: Vec<(f64, f64)>,
    /// Slope of `log error` against `log eps`.
    pub exponent: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

/// Exponent `min(1 - beta / 2, beta)` of `eps / sqrt(m) + m` for
/// `m = m0 eps^beta`.
pub fn predicted_exponent(beta: f64) -> f64 {
    (1.0 - beta / 2.0).min(beta)
}

/// Fits `error = A eps^p`. Pairs with nonpositive or non-finite entries are
/// dropped with a warning; at least three must remain.
pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<RateFit> {
    let kept: Vec<(f64, f64)> = pairs
        .iter()
        .copied()
        .filter(|&(e, err)| {
            let ok = e > 0.0 && err > 0.0 && e.is_finite() && err.is_finite();
            if !ok {
                warn!("dropping pair ({e}, {err}) from rate fit");
            }
            ok
        })
        .collect();
    if kept.len() < 3 {
        return Err(Error::InsufficientSamples(kept.len()));
    }
    let n = kept.len() as f64;
    let xs: Vec<f64> = kept.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParams("rate fit needs distinct eps values".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - exponent * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(RateFit {
        pairs: kept,
        exponent,
        intercept,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn power(p: f64) -> Vec<(f64, f64)> {
        [0.1, 0.05, 0.025].iter().map(|&e: &f64| (e, e.powf(p))).collect()
    }

    #[test]
    fn exact_power_laws() {
        let f = fit_rate(&power(2.0 / 3.0)).unwrap();
        assert!((f.exponent - 0.6667).abs() < 1e-4);
        assert!((f.exponent - 2.0 / 3.0).abs() < 1e-12);
        assert!(f.residual < 1e-12);
        assert!((fit_rate(&power(1.0)).unwrap().exponent - 1.0).abs() < 1e-12);
    }

    #[test]
    fn predicted_table() {
        for (beta, p) in [(0.5, 0.5), (2.0 / 3.0, 2.0 / 3.0), (1.0, 0.5), (1.5, 0.25)] {
            assert!((predicted_exponent(beta) - p).abs() < 1e-15, "{beta}");
        }
    }

    #[test]
    fn bad_pairs_dropped() {
        let mut pairs = power(1.0);
        pairs.push((0.0125, 0.0));
        assert_eq!(fit_rate(&pairs).unwrap().pairs.len(), 3);
        pairs.pop();
        pairs.pop();
        assert!(matches!(fit_rate(&pairs), Err(Error::InsufficientSamples(2))));
        assert!(fit_rate(&[(0.1, 1.0), (0.1, 2.0), (0.1, 3.0)]).is_err());
    }

    proptest! {
        #[test]
        fn scale_invariant(p in -1.0f64..3.0, scale in 1e-6f64..1e6, noise in proptest::collection::vec(0.5f64..2.0, 4)) {
            let pairs: Vec<(f64, f64)> = [0.1, 0.05, 0.025, 0.0125]
                .iter()
                .zip(&noise)
                .map(|(&e, &n): (&f64, &f64)| (e, n * e.powf(p)))
                .collect();
            let scaled: Vec<(f64, f64)> = pairs.iter().map(|&(e, r)| (e, r * scale)).collect();
            let a = fit_rate(&pairs).unwrap();
            let b = fit_rate(&scaled).unwrap();
            prop_assert!((a.exponent - b.exponent).abs() < 1e-12);
        }
    }
}
