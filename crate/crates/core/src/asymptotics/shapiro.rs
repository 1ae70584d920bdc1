//! Shapiro-Wilk normality test with Royston's (1992/1995) approximations for
//! the coefficients and the null distribution of `W`.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid_input, Result};

pub const MIN_SAMPLE: usize = 20;
pub const MAX_SAMPLE: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapiroWilk {
    pub statistic: f64,
    pub p_value: f64,
}

fn poly(coef: &[f64], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Shapiro-Wilk `W` and its approximate upper-tail p-value.
pub fn normality_check(values: &[f64]) -> Result<ShapiroWilk> {
    let n = values.len();
    if !(MIN_SAMPLE..=MAX_SAMPLE).contains(&n) {
        return Err(invalid_input(format!(
            "Shapiro-Wilk needs between {MIN_SAMPLE} and {MAX_SAMPLE} values, got {n}"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(invalid_input("Shapiro-Wilk input contains non-finite values"));
    }
    let mut x = values.to_vec();
    x.sort_by(f64::total_cmp);
    let mean = x.iter().sum::<f64>() / n as f64;
    let ssq: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    if ssq <= 0.0 || x[0] == x[n - 1] {
        return Err(invalid_input("Shapiro-Wilk is undefined for a constant sample"));
    }

    let std_normal = Normal::standard();
    let nf = n as f64;
    let m: Vec<f64> = (1..=n)
        .map(|i| std_normal.inverse_cdf((i as f64 - 0.375) / (nf + 0.25)))
        .collect();
    let msq: f64 = m.iter().map(|v| v * v).sum();
    let u = 1.0 / nf.sqrt();
    let an = poly(&[0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056], u) + m[n - 1] / msq.sqrt();
    let an1 = poly(&[0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633], u) + m[n - 2] / msq.sqrt();
    let phi = (msq - 2.0 * m[n - 1].powi(2) - 2.0 * m[n - 2].powi(2))
        / (1.0 - 2.0 * an * an - 2.0 * an1 * an1);
    let scale = phi.sqrt();
    let mut a: Vec<f64> = m.iter().map(|mi| mi / scale).collect();
    a[n - 1] = an;
    a[n - 2] = an1;
    a[0] = -an;
    a[1] = -an1;

    let num: f64 = a.iter().zip(&x).map(|(ai, xi)| ai * xi).sum();
    let w = (num * num / ssq).min(1.0);

    let ln_n = nf.ln();
    let mu = poly(&[-1.5861, -0.31082, -0.083751, 0.0038915], ln_n);
    let sigma = poly(&[-0.4803, -0.082676, 0.0030302], ln_n).exp();
    let z = ((1.0 - w).ln() - mu) / sigma;
    Ok(ShapiroWilk {
        statistic: w,
        p_value: std_normal.sf(z),
    })
}
