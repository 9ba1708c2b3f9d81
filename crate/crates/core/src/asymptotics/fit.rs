//! Empirical exponent and log-periodicity estimates from sampled curves.

use crate::{Error, Result};

/// Power exponent estimate with its regression standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub beta: f64,
    pub stderr: f64,
}

fn check_samples(t: &[f64], y: &[f64]) -> Result<()> {
    if t.len() != y.len() || t.len() < 3 {
        return Err(Error::Samples(format!("need >= 3 paired samples, got {} and {}", t.len(), y.len())));
    }
    if t.windows(2).any(|w| !(w[1] > w[0])) || !(t[0] > 0.0) {
        return Err(Error::Samples("times must be positive and strictly increasing".into()));
    }
    Ok(())
}

/// Fits `y ≈ c t^{-β}` over at least three decades.
///
/// With a `log_period` hint, `ln y` is first averaged over whole periods in
/// `ln t` (trapezoid rule, linear interpolation at window edges) and the
/// window means are regressed against the window centres.
pub fn fit_power_exponent(t: &[f64], y: &[f64], log_period: Option<f64>) -> Result<PowerFit> {
    check_samples(t, y)?;
    if let Some(i) = y.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Samples(format!("non-positive sample y[{i}] = {}", y[i])));
    }
    let (t0, t1) = (t[0], t[t.len() - 1]);
    if (t1 / t0).log10() < 3.0 - 1e-9 {
        return Err(Error::Samples(format!("span {t0:e}..{t1:e} is under 3 decades")));
    }
    let u: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (x, z) = match log_period {
        None => (u, ly),
        Some(p) => {
            if !(p > 0.0) {
                return Err(Error::param("log_period", "must be > 0"));
            }
            let mut xs = Vec::new();
            let mut zs = Vec::new();
            let mut a = u[0];
            while a + p <= u[u.len() - 1] + 1e-12 * p {
                let b = (a + p).min(u[u.len() - 1]);
                xs.push(0.5 * (a + b));
                zs.push(integrate(&u, &ly, a, b) / (b - a));
                a += p;
            }
            if xs.len() < 3 {
                return Err(Error::Samples(format!("only {} whole periods in range", xs.len())));
            }
            (xs, zs)
        }
    };
    let (slope, se) = regress(&x, &z);
    Ok(PowerFit { beta: -slope, stderr: se })
}

fn interp(x: &[f64], y: &[f64], at: f64) -> f64 {
    let i = match x.binary_search_by(|v| v.partial_cmp(&at).expect("finite grid")) {
        Ok(i) => return y[i],
        Err(i) => i.clamp(1, x.len() - 1),
    };
    let w = (at - x[i - 1]) / (x[i] - x[i - 1]);
    y[i - 1] + w * (y[i] - y[i - 1])
}

/// Trapezoid integral of the piecewise-linear interpolant over `[a, b]`.
fn integrate(x: &[f64], y: &[f64], a: f64, b: f64) -> f64 {
    let mut pts = vec![(a, interp(x, y, a))];
    for (&xi, &yi) in x.iter().zip(y) {
        if xi > a && xi < b {
            pts.push((xi, yi));
        }
    }
    pts.push((b, interp(x, y, b)));
    pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum()
}

/// Least-squares slope and its standard error.
fn regress(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
        .sum();
    let se = if x.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    (slope, se)
}

/// `max |u(κt) - u(t)| / mean|u|` over the samples with `κt` in range,
/// interpolating linearly in `ln t`.
pub fn log_periodicity_deviation(t: &[f64], u: &[f64], kappa: f64) -> Result<f64> {
    check_samples(t, u)?;
    if !(kappa > 1.0) {
        return Err(Error::param("kappa", "must be > 1"));
    }
    let lt: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let lk = kappa.ln();
    let last = lt[lt.len() - 1];
    if last - lt[0] < 2.0 * lk - 1e-12 {
        return Err(Error::Samples("samples span fewer than 2 periods".into()));
    }
    let mean = u.iter().map(|v| v.abs()).sum::<f64>() / u.len() as f64;
    let mut worst = 0.0_f64;
    for (&x, &v) in lt.iter().zip(u) {
        if x + lk > last + 1e-12 {
            break;
        }
        worst = worst.max((interp(&lt, u, (x + lk).min(last)) - v).abs());
    }
    Ok(worst / mean)
}

/// `n` log-spaced points per `ln`-period `p`, covering `[t_min, t_max]` and
/// aligned so that `t e^{p}` is again a grid point.
pub fn log_grid_aligned(t_min: f64, t_max: f64, p: f64, per_period: usize) -> Vec<f64> {
    let h = p / per_period as f64;
    let n = ((t_max / t_min).ln() / h).floor() as usize;
    (0..=n).map(|i| t_min * (h * i as f64).exp()).collect()
}

/// Log-spaced grid with `per_decade` points per decade, inclusive of both ends.
pub fn log_grid(t_min: f64, t_max: f64, per_decade: usize) -> Vec<f64> {
    let decades = (t_max / t_min).log10();
    let n = (decades * per_decade as f64).round().max(1.0) as usize;
    (0..=n)
        .map(|i| t_min * 10f64.powf(decades * i as f64 / n as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pure_power_law() {
        let t = log_grid(1.0, 1e4, 10);
        let y: Vec<f64> = t.iter().map(|v| v.powf(-0.5)).collect();
        let f = fit_power_exponent(&t, &y, None).unwrap();
        assert!((f.beta - 0.5).abs() < 1e-12);
    }

    #[test]
    fn modulated_power_law_with_hint() {
        let p = 4f64.ln();
        let t = log_grid_aligned(1.0, 1e4, p, 40);
        let y: Vec<f64> = t.iter().map(|v| v.powf(-0.5) * (2.0 + (2.0 * PI * v.ln() / p).cos())).collect();
        let f = fit_power_exponent(&t, &y, Some(p)).unwrap();
        assert!((f.beta - 0.5).abs() < 1e-6, "{}", f.beta);
        let u: Vec<f64> = t.iter().zip(&y).map(|(a, b)| b * a.sqrt()).collect();
        assert!(log_periodicity_deviation(&t, &u, 4.0).unwrap() < 1e-6);
    }

    #[test]
    fn rejects_bad_samples() {
        let t = log_grid(1.0, 1e4, 4);
        let mut y = vec![1.0; t.len()];
        y[3] = 0.0;
        assert!(fit_power_exponent(&t, &y, None).is_err());
        let t = log_grid(1.0, 1e2, 4);
        assert!(fit_power_exponent(&t, &vec![1.0; t.len()], None).is_err());
        assert!(log_periodicity_deviation(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0], 4.0).is_err());
    }
}
