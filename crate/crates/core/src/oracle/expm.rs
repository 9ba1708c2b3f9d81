//! Matrix exponential by Padé(13) scaling and squaring.

use nalgebra::DMatrix;

use crate::{Error, Result};

const B: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];
const THETA_13: f64 = 5.371_920_351_148_152;

fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn expm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::param("matrix", "must be square"));
    }
    let nrm = norm1(a);
    if !nrm.is_finite() {
        return Err(Error::NonFinite("matrix entries".into()));
    }
    let s = if nrm <= THETA_13 {
        0
    } else {
        (nrm / THETA_13).log2().ceil() as i32
    };
    let a = a * 2f64.powi(-s);
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let inner_u = &a6 * (B[13] * &a6 + B[11] * &a4 + B[9] * &a2);
    let u = &a * (inner_u + B[7] * &a6 + B[5] * &a4 + B[3] * &a2 + B[1] * &id);
    let inner_v = &a6 * (B[12] * &a6 + B[10] * &a4 + B[8] * &a2);
    let v = inner_v + B[6] * &a6 + B[4] * &a4 + B[2] * &a2 + B[0] * &id;

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::NonFinite("singular Padé denominator".into()))?;
    for _ in 0..s {
        r = &r * &r;
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("matrix exponential".into()));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_and_diagonal() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -30.0]);
        let e = expm(&a).unwrap();
        assert!((e[(0, 0)] - 1f64.exp()).abs() < 1e-14);
        assert!((e[(1, 1)] - (-30f64).exp()).abs() < 1e-26);
        assert!(e[(0, 1)].abs() < 1e-300);
    }

    #[test]
    fn rotation() {
        let t = 20.0;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -t, t, 0.0]);
        let e = expm(&a).unwrap();
        assert!((e[(0, 0)] - t.cos()).abs() < 1e-12);
        assert!((e[(1, 0)] - t.sin()).abs() < 1e-12);
    }

    #[test]
    fn nilpotent() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let e = expm(&a).unwrap();
        assert!((e[(0, 2)] - 0.5).abs() < 1e-15);
        assert!((e[(0, 1)] - 1.0).abs() < 1e-15);
    }
}
