use super::{pearson, StatsError};

/// Standardized residuals beyond this magnitude are masked.
pub const OUTLIER_Z: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MaskingOptions {
    /// Divide residuals by `s·√(1 − hᵢ)` (leverage-corrected) instead of `s`.
    pub studentized: bool,
}

/// Outcome of the one-round masked fit of `y` on `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    /// Pearson coefficient over the unmasked rows.
    pub r: f64,
    pub p: f64,
    /// Initial-round residuals, one per row.
    pub residuals: Vec<f64>,
    /// Initial-round standardized residuals, one per row.
    pub standardized_residuals: Vec<f64>,
    pub outlier_mask: Vec<bool>,
    pub n_used: usize,
}

impl RegressionFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Least-squares `(slope, intercept)`.
pub fn ols(x: &[f64], y: &[f64]) -> Result<(f64, f64), StatsError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    if sxx == 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// OLS fit, mask rows whose initial standardized residual exceeds
/// [`OUTLIER_Z`] in magnitude, then refit once on the rest.
pub fn fit_masked(x: &[f64], y: &[f64]) -> Result<RegressionFit, StatsError> {
    fit_masked_with(x, y, MaskingOptions::default())
}

pub fn fit_masked_with(x: &[f64], y: &[f64], options: MaskingOptions) -> Result<RegressionFit, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 4 {
        return Err(StatsError::TooFewPoints { needed: 4, got: n });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let (slope0, intercept0) = ols(x, y)?;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(&a, &b)| b - (intercept0 + slope0 * a)).collect();
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let s = (ssr / (n - 2) as f64).sqrt();

    // residuals at rounding level mean an exact fit, nothing to standardize
    let my = y.iter().sum::<f64>() / n as f64;
    let y_scale = y.iter().map(|v| (v - my).abs()).fold(0.0, f64::max).max(my.abs());
    let exact = s <= 1e-12 * y_scale || s == 0.0;

    let mx = x.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let standardized_residuals: Vec<f64> = residuals
        .iter()
        .zip(x)
        .map(|(&e, &a)| {
            if exact {
                return 0.0;
            }
            let scale = if options.studentized {
                let h = 1.0 / n as f64 + (a - mx) * (a - mx) / sxx;
                s * (1.0 - h).max(0.0).sqrt()
            } else {
                s
            };
            if scale > 0.0 {
                e / scale
            } else {
                0.0
            }
        })
        .collect();
    let outlier_mask: Vec<bool> = standardized_residuals.iter().map(|z| z.abs() > OUTLIER_Z).collect();

    let (kx, ky): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .zip(&outlier_mask)
        .filter(|(_, &m)| !m)
        .map(|((&a, &b), _)| (a, b))
        .unzip();
    if kx.len() < 4 {
        return Err(StatsError::TooFewPoints { needed: 4, got: kx.len() });
    }
    let (slope, intercept) = ols(&kx, &ky)?;
    let (r, p) = pearson(&kx, &ky)?;
    Ok(RegressionFit {
        slope,
        intercept,
        r,
        p,
        residuals,
        standardized_residuals,
        outlier_mask,
        n_used: kx.len(),
    })
}

/// Confusion counts of the "thin choroid" call at a thickness cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionStats {
    /// Indicator value at which the fitted thickness equals the cutoff.
    pub threshold: f64,
    /// Whether thin is predicted below (`true`) or above the threshold.
    pub positive_below: bool,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub accuracy: f64,
    /// `None` when no row is truly thin.
    pub sensitivity: Option<f64>,
    /// `None` when no row is truly thick.
    pub specificity: Option<f64>,
}

/// Labels each row thin when `mct < cutoff` and predicts thin where the
/// fitted line puts thickness below the cutoff. Every row counts,
/// including those masked during fitting.
pub fn classify_at_cutoff(fit: &RegressionFit, indicator: &[f64], mct: &[f64], cutoff: f64) -> Result<ConfusionStats, StatsError> {
    if indicator.len() != mct.len() {
        return Err(StatsError::LengthMismatch(indicator.len(), mct.len()));
    }
    if indicator.is_empty() {
        return Err(StatsError::TooFewPoints { needed: 1, got: 0 });
    }
    if fit.slope == 0.0 || !fit.slope.is_finite() {
        return Err(StatsError::ZeroSlope);
    }
    let threshold = (cutoff - fit.intercept) / fit.slope;
    let positive_below = fit.slope > 0.0;
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&v, &ct) in indicator.iter().zip(mct) {
        let predicted = if positive_below { v < threshold } else { v > threshold };
        match (ct < cutoff, predicted) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
            (true, false) => fn_ += 1,
        }
    }
    let rate = |num: usize, den: usize| if den > 0 { Some(num as f64 / den as f64) } else { None };
    Ok(ConfusionStats {
        threshold,
        positive_below,
        tp,
        fp,
        tn,
        fn_,
        accuracy: (tp + tn) as f64 / indicator.len() as f64,
        sensitivity: rate(tp, tp + fn_),
        specificity: rate(tn, tn + fp),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn exact_line_masks_nothing() {
        let x: Vec<f64> = (0..10).map(|i| f64::from(i) * 0.7).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 5.0).collect();
        let fit = fit_masked(&x, &y).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-12 && (fit.intercept + 5.0).abs() < 1e-12);
        assert!(fit.outlier_mask.iter().all(|&m| !m));
        assert_eq!(fit.n_used, 10);
    }

    #[test]
    fn planted_outlier_is_masked() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let mut y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0 + noise.sample(&mut rng)).collect();
        y[7] += 10.0;
        let fit = fit_masked(&x, &y).unwrap();
        let masked: Vec<usize> = (0..20).filter(|&i| fit.outlier_mask[i]).collect();
        assert_eq!(masked, vec![7]);
        // z by direct formula
        let (b, a) = ols(&x, &y).unwrap();
        let e: Vec<f64> = x.iter().zip(&y).map(|(p, q)| q - a - b * p).collect();
        let s = (e.iter().map(|v| v * v).sum::<f64>() / 18.0).sqrt();
        for (z, ei) in fit.standardized_residuals.iter().zip(&e) {
            assert!((z - ei / s).abs() < 1e-12);
        }
    }

    #[test]
    fn studentized_is_larger_in_magnitude() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0, 9.0];
        let y = [0.1, 0.9, 2.2, 2.8, 4.1, 8.0];
        let plain = fit_masked(&x, &y).unwrap();
        let stud = fit_masked_with(&x, &y, MaskingOptions { studentized: true }).unwrap();
        for (p, s) in plain.standardized_residuals.iter().zip(&stud.standardized_residuals) {
            assert!(s.abs() >= p.abs());
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(fit_masked(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), Err(StatsError::TooFewPoints { .. })));
        assert_eq!(fit_masked(&[1.0; 5], &[1.0, 2.0, 3.0, 4.0, 5.0]), Err(StatsError::DegenerateVariance));
    }

    fn line_fit(slope: f64, intercept: f64) -> RegressionFit {
        RegressionFit {
            slope,
            intercept,
            r: 1.0,
            p: 0.0,
            residuals: vec![],
            standardized_residuals: vec![],
            outlier_mask: vec![],
            n_used: 0,
        }
    }

    #[test]
    fn threshold_by_hand() {
        let fit = line_fit(400.0, 100.0);
        let ind = [0.1, 0.2, 0.3, 0.4, 0.24];
        let mct = [150.0, 250.0, 190.0, 300.0, 180.0];
        let c = classify_at_cutoff(&fit, &ind, &mct, 200.0).unwrap();
        assert_eq!(c.threshold, 0.25);
        assert!(c.positive_below);
        // predicted thin: 0.1, 0.2, 0.24; truly thin: 150, 190, 180
        assert_eq!((c.tp, c.fp, c.tn, c.fn_), (2, 1, 1, 1));
        assert_eq!(c.accuracy, 0.6);
        assert_eq!(c.sensitivity, Some(2.0 / 3.0));
        assert_eq!(c.specificity, Some(0.5));
    }

    #[test]
    fn undefined_specificity() {
        let c = classify_at_cutoff(&line_fit(400.0, 100.0), &[0.1, 0.2], &[150.0, 160.0], 200.0).unwrap();
        assert_eq!(c.sensitivity, Some(1.0));
        assert_eq!(c.specificity, None);
        assert_eq!(classify_at_cutoff(&line_fit(0.0, 1.0), &[0.1], &[1.0], 200.0), Err(StatsError::ZeroSlope));
    }

    #[test]
    fn negative_slope_flips_side() {
        let c = classify_at_cutoff(&line_fit(-500.0, 400.0), &[0.5, 0.3], &[150.0, 250.0], 200.0).unwrap();
        assert!(!c.positive_below);
        assert_eq!(c.threshold, 0.4);
        assert_eq!((c.tp, c.tn), (1, 1));
    }

    proptest! {
        #[test]
        fn refit_matches_subset_ols(
            pts in proptest::collection::vec((-10.0f64..10.0, -50.0f64..50.0), 6..30),
        ) {
            let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
            if let Ok(fit) = fit_masked(&x, &y) {
                let (kx, ky): (Vec<f64>, Vec<f64>) = pts
                    .iter()
                    .zip(&fit.outlier_mask)
                    .filter(|(_, &m)| !m)
                    .map(|(p, _)| *p)
                    .unzip();
                // textbook normal equations as the independent oracle
                let n = kx.len() as f64;
                let (sx, sy) = (kx.iter().sum::<f64>(), ky.iter().sum::<f64>());
                let sxy: f64 = kx.iter().zip(&ky).map(|(a, b)| a * b).sum();
                let sxx: f64 = kx.iter().map(|a| a * a).sum();
                let b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
                let a = (sy - b * sx) / n;
                prop_assert!((fit.slope - b).abs() <= 1e-12 * b.abs().max(1.0), "{} {}", fit.slope, b);
                prop_assert!((fit.intercept - a).abs() <= 1e-12 * a.abs().max(1.0), "{} {}", fit.intercept, a);
                for (m, z) in fit.outlier_mask.iter().zip(&fit.standardized_residuals) {
                    prop_assert_eq!(*m, z.abs() > 2.0);
                }
            }
        }

        #[test]
        fn threshold_hits_cutoff(slope in prop_oneof![-900.0f64..-1.0, 1.0f64..900.0], intercept in -500.0f64..500.0, cutoff in 100.0f64..300.0) {
            let fit = line_fit(slope, intercept);
            let c = classify_at_cutoff(&fit, &[0.3], &[200.0], cutoff).unwrap();
            prop_assert!((fit.predict(c.threshold) - cutoff).abs() < 1e-9);
        }
    }
}
