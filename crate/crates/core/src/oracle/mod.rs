//! Brute-force reference solutions on explicit finite trees.
//!
//! The full generator is dense: `G_xy = e^{-α d(x,y)} / N(x,y)` for `x ≠ y`,
//! where `N(x,y)` is the leaf count of the pair's lowest common ancestor, and
//! the diagonal makes every column sum vanish. A sink of rate `k` subtracts
//! `k` from the centre's diagonal entry.

mod expm;
mod gillespie;
mod ode;

pub use expm::expm;
pub use gillespie::{chi_square_uniform, gillespie, McResult};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::hierarchy::{FiniteTree, Kernel, DENSE_LEAF_BUDGET};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct RateMatrix {
    g: DMatrix<f64>,
    sink_rate: f64,
}

impl RateMatrix {
    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn sink_rate(&self) -> f64 {
        self.sink_rate
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.g.column_iter().map(|c| c.sum()).collect()
    }
}

pub fn build_rate_matrix(tree: &FiniteTree, kernel: Kernel, sink_rate: f64) -> Result<RateMatrix> {
    let n = tree.leaf_count();
    if n > DENSE_LEAF_BUDGET {
        return Err(Error::TreeTooLarge {
            leaves: n,
            budget: DENSE_LEAF_BUDGET,
        });
    }
    check_sink(sink_rate)?;
    let mut g = DMatrix::<f64>::zeros(n, n);
    tree.for_each_sibling_block(|a, b, level, count| {
        let rate = kernel.rate(tree.distance_at_level(level), count as f64);
        for x in a {
            for y in b.clone() {
                g[(x, y)] = rate;
            }
        }
    });
    for x in 0..n {
        let s: f64 = g.column(x).sum();
        g[(x, x)] = -s;
    }
    g[(0, 0)] -= sink_rate;
    Ok(RateMatrix { g, sink_rate })
}

fn check_sink(k: f64) -> Result<()> {
    if !(k.is_finite() && k >= 0.0) {
        return Err(Error::param("sink_rate", format!("must be finite and >= 0, got {k}")));
    }
    Ok(())
}

fn check_state(f0: &[f64], n: usize) -> Result<()> {
    if f0.len() != n {
        return Err(Error::param("f0", format!("expected {n} entries, got {}", f0.len())));
    }
    if f0.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::param("f0", "entries must be finite and >= 0"));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::param("t", format!("must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// `exp(t G) f0` by scaling and squaring.
pub fn evolve(m: &RateMatrix, f0: &[f64], t: f64) -> Result<Vec<f64>> {
    check_state(f0, m.n())?;
    check_time(t)?;
    if t == 0.0 {
        return Ok(f0.to_vec());
    }
    let e = expm(&(m.matrix() * t))?;
    let out = e * DVector::from_column_slice(f0);
    finite(out.as_slice().to_vec())
}

/// `exp(t G) f0` by adaptive Dormand–Prince integration.
pub fn evolve_ode(m: &RateMatrix, f0: &[f64], t: f64, rtol: f64) -> Result<Vec<f64>> {
    check_state(f0, m.n())?;
    check_time(t)?;
    let out = ode::integrate(m.matrix(), &DVector::from_column_slice(f0), t, rtol, rtol * 1e-3)?;
    finite(out.as_slice().to_vec())
}

fn finite(v: Vec<f64>) -> Result<Vec<f64>> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("evolved state".into()));
    }
    Ok(v)
}

/// Unit mass on the centre leaf.
pub fn point_source(tree: &FiniteTree) -> Vec<f64> {
    let mut f = vec![0.0; tree.leaf_count()];
    f[0] = 1.0;
    f
}

/// Sphere masses `m_j = Σ_{x∈S_j} f(x)` around the centre.
pub fn project(tree: &FiniteTree, f: &[f64]) -> Vec<f64> {
    let mut m = vec![0.0; tree.levels() + 1];
    for (x, v) in f.iter().enumerate() {
        m[tree.sphere_of(0, x)] += v;
    }
    m
}

/// Per-point sphere values `f_j` spread onto the leaves.
pub fn lift(tree: &FiniteTree, values: &[f64]) -> Result<Vec<f64>> {
    if values.len() != tree.levels() + 1 {
        return Err(Error::param("values", format!("expected {} spheres", tree.levels() + 1)));
    }
    Ok((0..tree.leaf_count()).map(|x| values[tree.sphere_of(0, x)]).collect())
}

/// Generator on sphere-mass coordinates.
///
/// `R[j][i] = M_j e^{-α d_{max(i,j)}} / N_{max(i,j)}` for `i ≠ j`; the
/// diagonal makes columns sum to zero and carries the sink on `S_0`. Any two
/// points on different spheres around the centre have their common ball on
/// the centre path, so `R` reproduces the projected full evolution exactly
/// for every initial state, whatever the branching away from that path.
pub fn reduce_spherical(tree: &FiniteTree, kernel: Kernel, sink_rate: f64) -> Result<DMatrix<f64>> {
    check_sink(sink_rate)?;
    let h = tree.hierarchy()?;
    let l = tree.levels();
    let m: Vec<f64> = (0..=l).map(|j| h.sphere_size(j)).collect::<Result<_>>()?;
    let mut r = DMatrix::<f64>::zeros(l + 1, l + 1);
    for j in 0..=l {
        for i in 0..=l {
            if i != j {
                let top = i.max(j);
                r[(j, i)] = m[j] * kernel.rate(h.radii()[top], h.balls()[top]);
            }
        }
    }
    for i in 0..=l {
        let s: f64 = r.column(i).sum();
        r[(i, i)] = -s;
    }
    r[(0, 0)] -= sink_rate;
    Ok(r)
}

/// Eigenvalues of the sink-free reduced generator, ascending, via its
/// symmetrisation `sqrt(M_i M_j) K_ij`.
pub fn reduced_eigenvalues(tree: &FiniteTree, kernel: Kernel) -> Result<Vec<f64>> {
    let r = reduce_spherical(tree, kernel, 0.0)?;
    let h = tree.hierarchy()?;
    let m: Vec<f64> = (0..=tree.levels()).map(|j| h.sphere_size(j)).collect::<Result<_>>()?;
    let n = r.nrows();
    let s = DMatrix::from_fn(n, n, |j, i| r[(j, i)] * (m[i] / m[j]).sqrt());
    let mut ev: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    Ok(ev)
}

/// Evolution of sphere masses under the reduced generator.
pub fn evolve_reduced(r: &DMatrix<f64>, m0: &[f64], t: f64) -> Result<Vec<f64>> {
    check_time(t)?;
    if m0.len() != r.nrows() {
        return Err(Error::param("m0", format!("expected {} entries", r.nrows())));
    }
    let e = expm(&(r * t))?;
    finite((e * DVector::from_column_slice(m0)).as_slice().to_vec())
}
