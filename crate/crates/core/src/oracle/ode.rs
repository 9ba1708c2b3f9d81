//! Adaptive Dormand–Prince 5(4) integration of `f' = G f`.
//!
//! The generator's spectral radius is bounded by twice the largest exit rate,
//! so explicit stepping is not stiff at the scales used here.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights (equal to the last row of `A`).
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates from 0 to `t` with mixed tolerance `atol + rtol |f|`.
pub fn integrate(g: &DMatrix<f64>, f0: &DVector<f64>, t: f64, rtol: f64, atol: f64) -> Result<DVector<f64>> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("t", "must be finite and >= 0"));
    }
    let mut y = f0.clone();
    if t == 0.0 {
        return Ok(y);
    }
    let mut now = 0.0;
    let mut h = (t / 100.0).min(0.1);
    let mut k: Vec<DVector<f64>> = vec![g * &y];
    k.resize(7, DVector::zeros(y.len()));
    let mut steps = 0usize;
    while now < t {
        if now + h > t {
            h = t - now;
        }
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate().take(s) {
                if A[s][j] != 0.0 {
                    ys.axpy(h * A[s][j], kj, 1.0);
                }
            }
            k[s] = g * &ys;
        }
        let mut y5 = y.clone();
        let mut err = DVector::zeros(y.len());
        for j in 0..7 {
            if B5[j] != 0.0 {
                y5.axpy(h * B5[j], &k[j], 1.0);
            }
            err.axpy(h * (B5[j] - B4[j]), &k[j], 1.0);
        }
        let e = err
            .iter()
            .zip(y.iter().zip(y5.iter()))
            .map(|(e, (a, b))| (e / (atol + rtol * a.abs().max(b.abs()))).powi(2))
            .sum::<f64>()
            / y.len() as f64;
        let e = e.sqrt();
        if e <= 1.0 {
            now += h;
            y = y5;
            // First-same-as-last: the 7th stage is the derivative at the new point.
            k[0] = k[6].clone();
        }
        let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        steps += 1;
        if steps > 10_000_000 || !h.is_finite() || h <= 0.0 {
            return Err(Error::NonFinite("ODE step size collapsed".into()));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ODE solution".into()));
    }
    Ok(y)
}
