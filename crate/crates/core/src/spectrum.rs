//! Radial eigenbasis and eigenvalues of the diffusion generator.
//!
//! The basis function `φ_i` (`i ≥ 1`) is supported on the ball `B_i`, takes
//! one value on `B_{i-1}` and another on the sphere `S_i`, and satisfies
//! `Â φ_i = -λ_i φ_i` with
//!
//! `λ_i = Σ_{j≥i} e^{-α d_j} (1 - e^{-α (d_{j+1} - d_j)} N_j / N_{j+1})`.
//!
//! On a tabulated (finite) hierarchy of depth `L` the sum stops at `j = L-1`
//! and picks up the exact last term `e^{-α d_L}`; the constant function is
//! then an extra zero mode with point-source weight `1/N_L`.

use crate::hierarchy::{Kernel, UltrametricHierarchy};
use crate::{Bounded, Error, Result};

/// Default relative tolerance for eigenvalue truncation.
pub const DEFAULT_TOL: f64 = 1e-14;
/// Eigenvalues below this are not produced (they would underflow downstream).
const LAMBDA_FLOOR: f64 = 1e-280;

#[derive(Debug, Clone)]
pub struct Spectrum {
    hierarchy: UltrametricHierarchy,
    kernel: Kernel,
    /// `λ_1, …, λ_n`.
    lambda: Vec<f64>,
    /// Absolute bound on the truncation error of each `λ_i`.
    tail_bound: Vec<f64>,
    /// `a_i = N_{i-1}^{-1}(1 - N_{i-1}/N_i)`.
    weights: Vec<f64>,
    finite: bool,
}

impl Spectrum {
    /// Eigenvalues for every index whose relative truncation error is below `tol`.
    pub fn new(h: &UltrametricHierarchy, kernel: Kernel, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::param("tol", "must be > 0"));
        }
        let alpha = kernel.alpha();
        let d = h.radii();
        let n = h.balls();
        let top = h.max_level();
        let finite = !h.is_generated();

        // term[j] for j = 1..top-1; the last level contributes e^{-α d_L} in the finite case.
        let term = |j: usize| (-alpha * d[j]).exp() * (1.0 - (-alpha * (d[j + 1] - d[j])).exp() * n[j] / n[j + 1]);

        let mut lambda = Vec::new();
        let mut tail_bound = Vec::new();
        if finite {
            let mut acc = (-alpha * d[top]).exp();
            let mut rev = vec![acc];
            for j in (1..top).rev() {
                acc += term(j);
                rev.push(acc);
            }
            rev.reverse();
            lambda = rev;
            tail_bound = vec![0.0; top];
        } else {
            let asym = h.asymptotics().expect("generated hierarchies carry asymptotics");
            let ax = alpha * asym.xi;
            // Levels j ≥ top are not materialised: Σ_{j≥top} e^{-α d_j} ≤ e^{αB} e^{-αξ top}/(1 - e^{-αξ}).
            let tail = (alpha * asym.radius_bound).exp() * (-ax * top as f64).exp() / (1.0 - (-ax).exp());
            let mut acc = 0.0;
            let mut rev = Vec::with_capacity(top);
            for j in (1..top).rev() {
                acc += term(j);
                rev.push(acc);
            }
            rev.reverse();
            for l in rev {
                if l < LAMBDA_FLOOR || tail > tol * l {
                    break;
                }
                lambda.push(l);
                tail_bound.push(tail);
            }
            if lambda.is_empty() {
                return Err(Error::TailBound { bound: tail, tol });
            }
        }
        let weights = (1..=lambda.len())
            .map(|i| (1.0 - n[i - 1] / n[i]) / n[i - 1])
            .collect();
        Ok(Self {
            hierarchy: h.clone(),
            kernel,
            lambda,
            tail_bound,
            weights,
            finite,
        })
    }

    pub fn with_default_tol(h: &UltrametricHierarchy, kernel: Kernel) -> Result<Self> {
        Self::new(h, kernel, DEFAULT_TOL)
    }

    pub fn hierarchy(&self) -> &UltrametricHierarchy {
        &self.hierarchy
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    /// Number of available eigenvalues.
    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    /// True for the spectrum of a finite space (tabulated hierarchy).
    pub fn is_finite_space(&self) -> bool {
        self.finite
    }

    /// `[λ_1, …, λ_n]`.
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn tail_bounds(&self) -> &[f64] {
        &self.tail_bound
    }

    /// `[a_1, …, a_n]`, the squared point-source coefficients.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `λ_i` with its truncation bound, `i ≥ 1`.
    pub fn eigenvalue(&self, i: usize) -> Result<Bounded<f64>> {
        if i == 0 || i > self.lambda.len() {
            return Err(Error::LevelOutOfRange {
                requested: i,
                available: self.lambda.len(),
            });
        }
        Ok(Bounded::new(self.lambda[i - 1], self.tail_bound[i - 1]))
    }

    /// Weight `1/N_L` of the constant mode on a finite space.
    pub fn zero_mode_weight(&self) -> Option<f64> {
        self.finite.then(|| 1.0 / self.hierarchy.balls()[self.lambda.len()])
    }

    /// `(λ, a)` for every mode, ending with `(0, 1/N_L)` on a finite space.
    pub fn modes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.lambda
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
            .chain(self.zero_mode_weight().map(|w| (0.0, w)))
    }

    /// Number of items yielded by [`Spectrum::modes`].
    pub fn mode_count(&self) -> usize {
        self.lambda.len() + usize::from(self.finite)
    }

    /// Point-source coefficients `c_i = sqrt(a_i)` for every mode.
    pub fn point_source(&self) -> Vec<f64> {
        self.modes().map(|(_, a)| a.sqrt()).collect()
    }

    /// Smallest mode count whose coefficient tail is at most `tol`, if any.
    pub fn modes_for_tol(&self, tol: f64) -> Option<usize> {
        if self.finite {
            return Some(self.mode_count());
        }
        let b = self.hierarchy.balls();
        (1..=self.lambda.len()).find(|&n| 1.0 / b[n] <= tol)
    }

    /// `Σ_{i>n} a_i`, the coefficient mass beyond the first `n` modes of [`Spectrum::modes`].
    ///
    /// Equals `1/N_n` until the modes run out.
    pub fn weight_tail(&self, n: usize) -> f64 {
        if n >= self.mode_count() {
            if self.finite {
                0.0
            } else {
                1.0 / self.hierarchy.balls()[self.lambda.len()]
            }
        } else {
            1.0 / self.hierarchy.balls()[n]
        }
    }
}

/// `λ_i` for a single index with relative tolerance `tol`.
pub fn eigenvalue(h: &UltrametricHierarchy, kernel: Kernel, i: usize, tol: f64) -> Result<Bounded<f64>> {
    Spectrum::new(h, kernel, tol)?.eigenvalue(i)
}

/// Value of `φ_i` on the sphere `S_k`.
///
/// On a tabulated hierarchy of depth `L`, `i = L + 1` denotes the normalised
/// constant `N_L^{-1/2}`.
pub fn basis_value(h: &UltrametricHierarchy, i: usize, k: usize) -> Result<f64> {
    if i == 0 {
        return Err(Error::param("i", "basis indices start at 1"));
    }
    let top = h.max_level();
    if !h.is_generated() && i == top + 1 {
        h.ball_size(k)?;
        return Ok(h.balls()[top].powf(-0.5));
    }
    if k > i {
        return Ok(0.0);
    }
    let n_prev = h.ball_size(i - 1)?;
    let r = n_prev / h.ball_size(i)?;
    let norm = (n_prev * (1.0 - r)).powf(-0.5);
    Ok(if k < i { norm * (1.0 - r) } else { -norm * r })
}

/// `c_j = N_{j-1}^{-1/2} (1 - N_{j-1}/N_j)^{1/2}` for `j = 1..=n`.
pub fn point_source_coefficients(h: &UltrametricHierarchy, n: usize) -> Result<Vec<f64>> {
    h.ball_size(n)?;
    let b = h.balls();
    Ok((1..=n).map(|j| ((1.0 - b[j - 1] / b[j]) / b[j - 1]).sqrt()).collect())
}

/// `Σ_x φ_i(x) φ_j(x) φ_k(x)` in closed form.
pub fn triple_product(h: &UltrametricHierarchy, i: usize, j: usize, k: usize) -> Result<f64> {
    if i == 0 || j == 0 || k == 0 {
        return Err(Error::param("index", "basis indices start at 1"));
    }
    h.ball_size(i.max(j).max(k))?;
    let b = h.balls();
    let r = |m: usize| b[m - 1] / b[m];
    let c = |m: usize| (b[m - 1].powf(-0.5)) * (1.0 - r(m)).sqrt();
    Ok(if i == j && j == k {
        let q = r(k);
        b[k - 1].powf(-0.5) * (1.0 - q).powf(-1.5) * (1.0 - 3.0 * q + 2.0 * q * q)
    } else if i == j && i < k {
        c(k)
    } else if i == k && i < j {
        c(j)
    } else if j == k && j < i {
        c(i)
    } else {
        0.0
    })
}

/// Partial sum `N_i Σ_{j=i+1}^{n} c_j φ_j` of the expansion of `J_i`, evaluated on `S_k`.
pub fn reconstruct_ball_indicator(h: &UltrametricHierarchy, i: usize, k: usize, n_terms: usize) -> Result<f64> {
    if n_terms <= i {
        return Err(Error::param("n_terms", format!("must exceed i = {i}")));
    }
    let c = point_source_coefficients(h, n_terms)?;
    let mut s = 0.0;
    for j in i + 1..=n_terms {
        s += c[j - 1] * basis_value(h, j, k)?;
    }
    Ok(h.ball_size(i)? * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn padic() -> Spectrum {
        let h = UltrametricHierarchy::self_similar(2, 1.0).unwrap();
        Spectrum::with_default_tol(&h, Kernel::new(4f64.ln()).unwrap()).unwrap()
    }

    #[test]
    fn padic_closed_form() {
        let s = padic();
        assert_relative_eq!(s.eigenvalue(1).unwrap().value, 7.0 / 24.0, max_relative = 1e-14);
        assert_relative_eq!(s.eigenvalue(3).unwrap().value, 7.0 / 6.0 / 64.0, max_relative = 1e-14);
        for i in 1..40 {
            assert_relative_eq!(s.lambda()[i - 1] * 4f64.powi(i as i32), 7.0 / 6.0, max_relative = 1e-13);
        }
        assert!(s.len() > 400);
        assert!(s.tail_bounds()[0] < 1e-290);
    }

    #[test]
    fn finite_space_eigenvalues() {
        let h = UltrametricHierarchy::self_similar(2, 1.0).unwrap().truncated(3).unwrap();
        let s = Spectrum::with_default_tol(&h, Kernel::new(4f64.ln()).unwrap()).unwrap();
        // λ_3 = 4^{-3}, λ_2 = (7/8) 4^{-2} + 4^{-3}, λ_1 = (7/8) 4^{-1} + λ_2.
        let l3 = 1.0 / 64.0;
        let l2 = 7.0 / 128.0 + l3;
        let l1 = 7.0 / 32.0 + l2;
        assert_eq!(s.len(), 3);
        assert_relative_eq!(s.lambda()[0], l1, max_relative = 1e-15);
        assert_relative_eq!(s.lambda()[1], l2, max_relative = 1e-15);
        assert_relative_eq!(s.lambda()[2], l3, max_relative = 1e-15);
        assert_eq!(s.zero_mode_weight(), Some(1.0 / 8.0));
        assert_eq!(s.weight_tail(3), 1.0 / 8.0);
        assert_eq!(s.weight_tail(4), 0.0);
    }

    #[test]
    fn telescoping_gaps() {
        let h = UltrametricHierarchy::perturbed(3, 0.8, |i| 0.2 * (i as f64).sin(), |i| 0.1 * (i as f64).cos()).unwrap();
        let k = Kernel::new(1.3).unwrap();
        let s = Spectrum::with_default_tol(&h, k).unwrap();
        let (d, n) = (h.radii(), h.balls());
        for i in 1..30 {
            let gap = (-1.3 * d[i]).exp() * (1.0 - (-1.3 * (d[i + 1] - d[i])).exp() * n[i] / n[i + 1]);
            assert_relative_eq!(s.lambda()[i - 1] - s.lambda()[i], gap, max_relative = 1e-12);
        }
    }

    #[test]
    fn basis_values() {
        let h = UltrametricHierarchy::self_similar(2, 1.0).unwrap();
        let r2 = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(basis_value(&h, 1, 0).unwrap(), r2, max_relative = 1e-15);
        assert_relative_eq!(basis_value(&h, 1, 1).unwrap(), -r2, max_relative = 1e-15);
        assert_eq!(basis_value(&h, 2, 5).unwrap(), 0.0);
        assert!(basis_value(&h, 0, 0).is_err());
    }

    #[test]
    fn coefficients() {
        let h = UltrametricHierarchy::self_similar(2, 1.0).unwrap();
        let c = point_source_coefficients(&h, 30).unwrap();
        assert_relative_eq!(c[0], 2f64.sqrt() / 2.0, max_relative = 1e-15);
        assert_relative_eq!(c[2], 2f64.sqrt() / 4.0, max_relative = 1e-15);
        let s2: f64 = c.iter().map(|x| x * x).sum();
        assert_relative_eq!(s2, 1.0 - 2f64.powi(-30), max_relative = 1e-15);
    }

    #[test]
    fn triple_products() {
        let h = UltrametricHierarchy::self_similar(2, 1.0).unwrap();
        assert!(triple_product(&h, 1, 1, 1).unwrap().abs() < 1e-15);
        assert_relative_eq!(triple_product(&h, 1, 1, 2).unwrap(), 0.5, max_relative = 1e-15);
        assert_eq!(triple_product(&h, 1, 2, 3).unwrap(), 0.0);
    }

    #[test]
    fn indicator_reconstruction() {
        let h = UltrametricHierarchy::self_similar(2, 1.0).unwrap();
        assert_relative_eq!(
            reconstruct_ball_indicator(&h, 0, 0, 10).unwrap(),
            1.0 - 1.0 / 1024.0,
            max_relative = 1e-14
        );
        assert!(reconstruct_ball_indicator(&h, 2, 5, 20).unwrap().abs() <= 4.0 / 2f64.powi(20) + 1e-16);
        assert!((reconstruct_ball_indicator(&h, 3, 3, 60).unwrap() - 1.0).abs() < 1e-15);
    }
}
