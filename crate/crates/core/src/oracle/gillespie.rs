//! Continuous-time jump simulation of walkers started at the centre leaf.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::hierarchy::{FiniteTree, Kernel};
use crate::{Error, Result};

/// Occupation histograms at the requested times.
#[derive(Debug, Clone, Serialize)]
pub struct McResult {
    pub seed: u64,
    pub walkers: usize,
    pub times: Vec<f64>,
    /// `sphere_counts[i][k]`: walkers on `S_k` at `times[i]`.
    pub sphere_counts: Vec<Vec<u64>>,
    /// Walkers not yet absorbed at `times[i]`.
    pub survivors: Vec<u64>,
    /// Per-leaf counts at the last time.
    pub leaf_counts: Vec<u64>,
}

impl McResult {
    fn fraction(&self, c: u64) -> (f64, f64) {
        let w = self.walkers as f64;
        let p = c as f64 / w;
        (p, (p * (1.0 - p) / w).sqrt())
    }

    /// Fraction of walkers on `S_k` at `times[i]` and its binomial standard error.
    pub fn sphere_fraction(&self, i: usize, k: usize) -> (f64, f64) {
        self.fraction(self.sphere_counts[i][k])
    }

    /// Surviving fraction at `times[i]` and its binomial standard error.
    pub fn survival_fraction(&self, i: usize) -> (f64, f64) {
        self.fraction(self.survivors[i])
    }
}

/// Simulates `walkers` independent walkers; walker `w` uses ChaCha8 seeded
/// with `seed` on stream `w`, so results do not depend on thread scheduling.
pub fn gillespie(
    tree: &FiniteTree,
    kernel: Kernel,
    sink_rate: f64,
    walkers: usize,
    times: &[f64],
    seed: u64,
) -> Result<McResult> {
    if walkers == 0 {
        return Err(Error::param("walkers", "must be >= 1"));
    }
    if times.is_empty() || times.iter().any(|t| !(t.is_finite() && *t > 0.0)) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("times", "must be positive, finite and strictly increasing"));
    }
    if !(sink_rate.is_finite() && sink_rate >= 0.0) {
        return Err(Error::param("sink_rate", "must be finite and >= 0"));
    }
    let n = tree.leaf_count();
    let levels = tree.levels();
    if n < 2 {
        return Err(Error::param("tree", "needs at least two leaves"));
    }
    // Cumulative per-level exit rates of every leaf.
    let mut cum = vec![0.0; n * levels];
    for x in 0..n {
        let mut acc = 0.0;
        for j in 1..=levels {
            let nj = tree.ball_size_at(x, j) as f64;
            let cousins = nj - tree.ball_size_at(x, j - 1) as f64;
            acc += cousins * kernel.rate(tree.distance_at_level(j), nj);
            cum[x * levels + j - 1] = acc;
        }
    }

    let run = |w: usize| -> Vec<Option<usize>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(w as u64);
        let mut out = Vec::with_capacity(times.len());
        let mut pos = 0usize;
        let mut now = 0.0;
        loop {
            let row = &cum[pos * levels..(pos + 1) * levels];
            let exit = row[levels - 1];
            let sink = if pos == 0 { sink_rate } else { 0.0 };
            let total = exit + sink;
            let u: f64 = 1.0 - rng.random::<f64>();
            let next = now - u.ln() / total;
            while out.len() < times.len() && times[out.len()] < next {
                out.push(Some(pos));
            }
            if out.len() == times.len() {
                return out;
            }
            now = next;
            let pick = rng.random::<f64>() * total;
            if pick >= exit {
                out.resize(times.len(), None);
                return out;
            }
            let j = row.iter().position(|&c| pick < c).unwrap_or(levels - 1) + 1;
            let outer = tree.ball_range(pos, j);
            let inner = tree.ball_range(pos, j - 1);
            let mut y = outer.start + rng.random_range(0..outer.len() - inner.len());
            if y >= inner.start {
                y += inner.len();
            }
            pos = y;
        }
    };

    let zero = || {
        (
            vec![vec![0u64; levels + 1]; times.len()],
            vec![0u64; times.len()],
            vec![0u64; n],
        )
    };
    let (sphere_counts, survivors, leaf_counts) = (0..walkers)
        .into_par_iter()
        .fold(zero, |mut acc, w| {
            let path = run(w);
            for (i, p) in path.iter().enumerate() {
                if let Some(x) = *p {
                    acc.0[i][tree.sphere_of(0, x)] += 1;
                    acc.1[i] += 1;
                    if i + 1 == times.len() {
                        acc.2[x] += 1;
                    }
                }
            }
            acc
        })
        .reduce(zero, |mut a, b| {
            for (ra, rb) in a.0.iter_mut().zip(&b.0) {
                ra.iter_mut().zip(rb).for_each(|(x, y)| *x += y);
            }
            a.1.iter_mut().zip(&b.1).for_each(|(x, y)| *x += y);
            a.2.iter_mut().zip(&b.2).for_each(|(x, y)| *x += y);
            a
        });
    Ok(McResult {
        seed,
        walkers,
        times: times.to_vec(),
        sphere_counts,
        survivors,
        leaf_counts,
    })
}

/// Pearson statistic against the uniform distribution and its upper-tail
/// p-value (Wilson–Hilferty normal approximation).
pub fn chi_square_uniform(counts: &[u64]) -> (f64, f64) {
    let total: u64 = counts.iter().sum();
    let e = total as f64 / counts.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    let k = (counts.len() - 1) as f64;
    let z = ((stat / k).cbrt() - (1.0 - 2.0 / (9.0 * k))) / (2.0 / (9.0 * k)).sqrt();
    (stat, 0.5 * erfc(z / std::f64::consts::SQRT_2))
}

/// Complementary error function (Chebyshev fit, relative error < 1.2e-7).
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let poly = -z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98 + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77))))))));
    let r = t * poly.exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_conserving() {
        let tree = FiniteTree::uniform(2, 4, 1.0).unwrap();
        let k = Kernel::new(4f64.ln()).unwrap();
        let a = gillespie(&tree, k, 0.0, 500, &[0.5, 5.0], 7).unwrap();
        let b = gillespie(&tree, k, 0.0, 500, &[0.5, 5.0], 7).unwrap();
        assert_eq!(a.sphere_counts, b.sphere_counts);
        assert_eq!(a.survivors, vec![500, 500]);
        assert_eq!(a.sphere_counts[1].iter().sum::<u64>(), 500);
        let c = gillespie(&tree, k, 1.0, 500, &[0.5, 5.0], 7).unwrap();
        assert!(c.survivors[1] < 500);
    }

    #[test]
    fn erfc_values() {
        assert!((erfc(0.0) - 1.0).abs() < 1e-7);
        assert!((erfc(1.0) - 0.157_299_207_050_285_1).abs() < 1e-7);
        assert!((erfc(-1.0) - 1.842_700_792_949_715).abs() < 1e-7);
    }
}
