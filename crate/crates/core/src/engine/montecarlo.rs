//! Block-parallel sample loop with order-fixed reduction.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{Estimate, EstimatorConfig};
use crate::rng::{block_count, block_len, block_rng};

/// Running mean and centred second moment for several payoffs at once.
#[derive(Debug, Clone)]
struct Moments {
    n: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn new(k: usize) -> Self {
        Moments {
            n: 0,
            mean: vec![0.0; k],
            m2: vec![0.0; k],
        }
    }

    #[inline]
    fn push(&mut self, x: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let d = v - *m;
            *m += d / n;
            *s += d * (v - *m);
        }
    }

    /// Chan et al. pairwise combination.
    fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let na = self.n as f64;
        let nb = other.n as f64;
        let n = na + nb;
        for k in 0..self.mean.len() {
            let d = other.mean[k] - self.mean[k];
            self.mean[k] += d * nb / n;
            self.m2[k] += other.m2[k] + d * d * na * nb / n;
        }
        self.n += other.n;
    }

    fn estimates(&self) -> Vec<Estimate> {
        let n = self.n as f64;
        self.mean
            .iter()
            .zip(&self.m2)
            .map(|(&m, &s)| {
                let var = if self.n > 1 { (s / (n - 1.0)).max(0.0) } else { 0.0 };
                Estimate {
                    value: m,
                    std_error: (var / n).sqrt(),
                    samples: self.n,
                }
            })
            .collect()
    }
}

/// Runs `cfg.samples` observations of `payoff(z, u, out)`, where `z` holds
/// `dim` standard normals and `u` is a uniform on `[0, 1)`, and returns one
/// estimate per payoff slot.
///
/// Blocks are reduced in index order, so results are bit-identical for any
/// thread count.
pub(crate) fn run<F>(cfg: &EstimatorConfig, dim: usize, outputs: usize, payoff: F) -> Vec<Estimate>
where
    F: Fn(&[f64], f64, &mut [f64]) + Sync,
{
    let blocks = block_count(cfg.samples);
    let partials: Vec<Moments> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(cfg.seed, cfg.stream_id, b);
            let mut z = vec![0.0; dim];
            let mut neg = vec![0.0; dim];
            let mut out = vec![0.0; outputs];
            let mut out2 = vec![0.0; outputs];
            let mut acc = Moments::new(outputs);
            for _ in 0..block_len(cfg.samples, b) {
                for v in z.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                let u: f64 = rng.random();
                out.iter_mut().for_each(|v| *v = 0.0);
                payoff(&z, u, &mut out);
                if cfg.antithetic {
                    for (a, b) in neg.iter_mut().zip(&z) {
                        *a = -b;
                    }
                    out2.iter_mut().for_each(|v| *v = 0.0);
                    payoff(&neg, u, &mut out2);
                    for (a, b) in out.iter_mut().zip(&out2) {
                        *a = 0.5 * (*a + b);
                    }
                }
                acc.push(&out);
            }
            acc
        })
        .collect();
    let mut total = Moments::new(outputs);
    for p in &partials {
        total.merge(p);
    }
    total.estimates()
}
