//! Sufficient-statistic histograms over formation and persistence spaces.
//!
//! A sample space is enumerated once per transition in Gray-code order,
//! updating integer counts by change statistics. States sharing a count
//! vector collapse into one row weighted by its multiplicity, so every later
//! likelihood evaluation is a pass over distinct rows only.

use std::collections::HashMap;

use crate::graph::{BitIter, SmallGraph, MAX_NODES};
use crate::stats::{Side, TermKernel};

use super::LikelihoodError;

/// Compensated (Neumaier) summation.
pub(crate) fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Log of the sum of `exp(x)` over `xs`, max-shifted.
pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + neumaier_sum(xs.iter().map(|x| (x - max).exp())).ln()
}

fn free_mask(side: Side, y_prev: &SmallGraph) -> u64 {
    match side {
        Side::Formation => y_prev.non_edges_mask(),
        Side::Persistence => y_prev.mask(),
    }
}

/// Visits every state of the formation or persistence space of `y_prev` in
/// Gray-code order, passing the state's dyad mask and its integer counts.
pub(crate) fn walk_space(
    side: Side,
    y_prev: &SmallGraph,
    kernel: &TermKernel,
    budget: u64,
    mut visit: impl FnMut(u64, &[i64]),
) -> Result<(), LikelihoodError> {
    let n = y_prev.n();
    let base = match side {
        Side::Formation => y_prev.mask(),
        Side::Persistence => 0,
    };
    let free: Vec<usize> = BitIter(free_mask(side, y_prev)).collect();
    let states = match space_size(free.len() as u32) {
        Some(s) if s <= budget => s,
        _ => {
            return Err(LikelihoodError::BudgetExceeded {
                free_dyads: free.len(),
                budget,
            })
        }
    };
    let mut cur = vec![0i64; kernel.dim()];
    kernel.counts(base, &mut cur);
    let mut mask = base;
    let mut adj: [u16; MAX_NODES] = SmallGraph::from_mask_unchecked(n, base).adjacency();
    visit(mask, &cur);
    let pairs: Vec<(usize, usize)> = free.iter().map(|&k| crate::graph::pair_of(n, k)).collect();
    for step in 1..states {
        let slot = step.trailing_zeros() as usize;
        let k = free[slot];
        let (i, j) = pairs[slot];
        let bit = 1u64 << k;
        if mask & bit != 0 {
            adj[i] &= !(1 << j);
            adj[j] &= !(1 << i);
            kernel.apply_toggle(&adj, k, -1, &mut cur);
        } else {
            kernel.apply_toggle(&adj, k, 1, &mut cur);
            adj[i] |= 1 << j;
            adj[j] |= 1 << i;
        }
        mask ^= bit;
        visit(mask, &cur);
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub(crate) struct SpaceTable {
    dim: usize,
    /// Distinct integer count vectors, row-major, sorted.
    keys: Vec<i64>,
    log_mult: Vec<f64>,
    values: Vec<f64>,
    observed_key: Vec<i64>,
    observed: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct SideEval {
    pub log_norm: f64,
    pub loglik: f64,
    pub mean: Vec<f64>,
    /// Row-major `dim x dim`, empty unless requested.
    pub cov: Vec<f64>,
}

/// Number of states in a space with `free` free dyads, or `None` past `u64`.
pub(crate) fn space_size(free: u32) -> Option<u64> {
    1u64.checked_shl(free)
}

impl SpaceTable {
    /// Enumerates the formation (supersets of `y_prev`) or persistence
    /// (subsets of `y_prev`) space. `target` is the observed formation or
    /// persistence network.
    pub(crate) fn build(
        side: Side,
        y_prev: &SmallGraph,
        target: &SmallGraph,
        kernel: &TermKernel,
        budget: u64,
    ) -> Result<Self, LikelihoodError> {
        let dim = kernel.dim();
        let scales = kernel.scales();
        let mut observed_key = vec![0i64; dim];
        kernel.counts(target.mask(), &mut observed_key);
        let observed: Vec<f64> = observed_key
            .iter()
            .zip(scales)
            .map(|(&k, s)| s * k as f64)
            .collect();

        if dim == 0 {
            // nothing to enumerate: one row with multiplicity 2^free
            let free = free_mask(side, y_prev).count_ones();
            return Ok(SpaceTable {
                dim,
                keys: Vec::new(),
                log_mult: vec![free as f64 * std::f64::consts::LN_2],
                values: Vec::new(),
                observed_key,
                observed,
            });
        }
        let mut counts: HashMap<Vec<i64>, u64> = HashMap::new();
        walk_space(side, y_prev, kernel, budget, |_, cur| match counts.get_mut(cur) {
            Some(c) => *c += 1,
            None => {
                counts.insert(cur.to_vec(), 1);
            }
        })?;

        let mut rows: Vec<(Vec<i64>, u64)> = counts.into_iter().collect();
        rows.sort_unstable();
        let mut keys = Vec::with_capacity(rows.len() * dim);
        let mut log_mult = Vec::with_capacity(rows.len());
        for (key, mult) in rows {
            keys.extend_from_slice(&key);
            log_mult.push((mult as f64).ln());
        }
        let values = keys
            .chunks_exact(dim)
            .flat_map(|row| row.iter().zip(scales).map(|(&k, s)| s * k as f64))
            .collect();
        Ok(SpaceTable {
            dim,
            keys,
            log_mult,
            values,
            observed_key,
            observed,
        })
    }

    pub(crate) fn rows(&self) -> usize {
        self.log_mult.len()
    }

    pub(crate) fn observed(&self) -> &[f64] {
        &self.observed
    }

    pub(crate) fn observed_key(&self) -> &[i64] {
        &self.observed_key
    }

    fn key(&self, r: usize) -> &[i64] {
        &self.keys[r * self.dim..(r + 1) * self.dim]
    }

    fn value(&self, r: usize) -> &[f64] {
        &self.values[r * self.dim..(r + 1) * self.dim]
    }

    /// Smallest and largest attainable integer count per column.
    pub(crate) fn count_range(&self) -> Vec<(i64, i64)> {
        (0..self.dim)
            .map(|c| {
                (0..self.rows()).map(|r| self.key(r)[c]).fold(
                    (i64::MAX, i64::MIN),
                    |(lo, hi), v| (lo.min(v), hi.max(v)),
                )
            })
            .collect()
    }

    /// Keeps only rows whose `fixed` columns equal the observed counts: the
    /// limiting space as those parameters diverge toward the observed extreme.
    pub(crate) fn restrict(&self, fixed: &[bool]) -> SpaceTable {
        let mut out = SpaceTable {
            dim: self.dim,
            keys: Vec::new(),
            log_mult: Vec::new(),
            values: Vec::new(),
            observed_key: self.observed_key.clone(),
            observed: self.observed.clone(),
        };
        if self.dim == 0 {
            out.log_mult = self.log_mult.clone();
            return out;
        }
        for r in 0..self.rows() {
            let key = self.key(r);
            let keep = fixed
                .iter()
                .zip(key.iter().zip(&self.observed_key))
                .all(|(&f, (k, o))| !f || k == o);
            if keep {
                out.keys.extend_from_slice(key);
                out.values.extend_from_slice(self.value(r));
                out.log_mult.push(self.log_mult[r]);
            }
        }
        out
    }

    pub(crate) fn evaluate(&self, theta: &[f64], want_cov: bool) -> SideEval {
        debug_assert_eq!(theta.len(), self.dim);
        let eta: Vec<f64> = (0..self.rows())
            .map(|r| {
                let lin: f64 = if self.dim == 0 {
                    0.0
                } else {
                    self.value(r).iter().zip(theta).map(|(v, t)| v * t).sum()
                };
                self.log_mult[r] + lin
            })
            .collect();
        let log_norm = log_sum_exp(&eta);
        let obs_lin: f64 = self.observed.iter().zip(theta).map(|(v, t)| v * t).sum();
        let loglik = obs_lin - log_norm;

        let mut mean = vec![0.0; self.dim];
        let mut cov = Vec::new();
        if self.dim > 0 {
            let probs: Vec<f64> = eta.iter().map(|e| (e - log_norm).exp()).collect();
            for (c, m) in mean.iter_mut().enumerate() {
                *m = neumaier_sum(probs.iter().enumerate().map(|(r, p)| p * self.value(r)[c]));
            }
            if want_cov {
                cov = vec![0.0; self.dim * self.dim];
                for a in 0..self.dim {
                    for b in a..self.dim {
                        let s = neumaier_sum(probs.iter().enumerate().map(|(r, p)| {
                            let v = self.value(r);
                            p * (v[a] - mean[a]) * (v[b] - mean[b])
                        }));
                        cov[a * self.dim + b] = s;
                        cov[b * self.dim + a] = s;
                    }
                }
            }
        }
        SideEval {
            log_norm,
            loglik,
            mean,
            cov,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::AttributeTable;
    use crate::stats::TermSpec;

    #[test]
    fn log_sum_exp_is_overflow_safe() {
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + std::f64::consts::LN_2)).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn multiplicities_cover_the_space() {
        let prev = SmallGraph::from_edges(6, &[(0, 1), (1, 2), (3, 4)]).unwrap();
        let attrs = AttributeTable::uniform(6, 500);
        let kernel = TermKernel::new(&[TermSpec::Edges, TermSpec::Triangles], 6, &attrs).unwrap();
        for side in [Side::Formation, Side::Persistence] {
            let table = SpaceTable::build(side, &prev, &prev, &kernel, 1 << 24).unwrap();
            let total: f64 = table.log_mult.iter().map(|l| l.exp()).sum();
            let expect = match side {
                Side::Formation => 4096.0,
                Side::Persistence => 8.0,
            };
            assert!((total - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let prev = SmallGraph::empty(6).unwrap();
        let attrs = AttributeTable::uniform(6, 0);
        let kernel = TermKernel::new(&[TermSpec::Edges], 6, &attrs).unwrap();
        let err = SpaceTable::build(Side::Formation, &prev, &prev, &kernel, 1 << 10).unwrap_err();
        assert!(matches!(err, LikelihoodError::BudgetExceeded { free_dyads: 15, budget: 1024 }));
    }
}
