use super::StatsError;
use statrs::function::beta::beta_reg;

/// Sample Pearson coefficient and two-sided p-value from Student's t with
/// `n − 2` degrees of freedom.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<(f64, f64), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooFewPoints { needed: 3, got: n });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok((r, correlation_p_value(r, n)))
}

/// Two-sided p-value of a correlation `r` over `n` points.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let rr = r * r;
    if rr >= 1.0 {
        return 0.0;
    }
    let t2 = df * rr / (1.0 - rr);
    t_two_sided_p(t2, df)
}

/// `P(|T| ≥ t)` for Student's t with `df` degrees of freedom, given `t²`.
pub fn t_two_sided_p(t_squared: f64, df: f64) -> f64 {
    // P(|T| ≥ t) = I_{df/(df+t²)}(df/2, 1/2)
    let x = df / (df + t_squared);
    beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}
