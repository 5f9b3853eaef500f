//! Mann–Whitney U test and greedy significance grouping.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

/// Combined sample size up to which the exact null distribution is used.
pub const EXACT_LIMIT: usize = 20;

pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MannWhitney {
    /// U statistic of the first sample: pairs where it is larger, plus half
    /// the ties.
    pub u: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub exact: bool,
}

/// Midranks (1-based) of the pooled sample, doubled so they stay integral.
fn doubled_midranks(pooled: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0u64; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        // Ranks i+1..=j+1 share their mean; doubled: (i+1)+(j+1).
        let r2 = (i + j + 2) as u64;
        for &k in &order[i..=j] {
            ranks[k] = r2;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> MannWhitney {
    let (na, nb) = (a.len(), b.len());
    assert!(na > 0 && nb > 0, "both samples must be non-empty");
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = doubled_midranks(&pooled);
    let r2_a: u64 = ranks[..na].iter().sum();
    // 2U = 2R − n(n+1); the doubled mean of U is na·nb.
    let u2 = r2_a as i64 - (na * (na + 1)) as i64;
    let u = u2 as f64 / 2.0;
    if ties.len() == 1 {
        return MannWhitney { u, p: 1.0, exact: na + nb <= EXACT_LIMIT };
    }
    let n = na + nb;
    if n <= EXACT_LIMIT {
        return MannWhitney { u, p: exact_p(&ranks, na, u2), exact: true };
    }
    let mean = (na * nb) as f64 / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1)) as f64;
    let var = (na * nb) as f64 / 12.0 * ((n + 1) as f64 - tie_term);
    let dev = ((u - mean).abs() - 0.5).max(0.0);
    let z = dev / var.sqrt();
    let normal = Normal::standard();
    let p = (2.0 * (1.0 - normal.cdf(z))).min(1.0);
    MannWhitney { u, p, exact: false }
}

/// Exact two-sided p: the share of all `C(n, na)` rank assignments whose U is
/// at least as far from its mean as the observed one.
fn exact_p(ranks: &[u64], na: usize, u2_obs: i64) -> f64 {
    let max_sum: u64 = ranks.iter().sum();
    let width = max_sum as usize + 1;
    // counts[k][s]: subsets of size k with doubled rank sum s.
    let mut counts = vec![vec![0f64; width]; na + 1];
    counts[0][0] = 1.0;
    for (seen, &r) in ranks.iter().enumerate() {
        let r = r as usize;
        for k in (1..=na.min(seen + 1)).rev() {
            let (lo, hi) = counts.split_at_mut(k);
            let prev = &lo[k - 1];
            let cur = &mut hi[0];
            for s in (r..width).rev() {
                if prev[s - r] != 0.0 {
                    cur[s] += prev[s - r];
                }
            }
        }
    }
    let nb = ranks.len() - na;
    let mean2 = (na * nb) as i64;
    let offset = (na * (na + 1)) as i64;
    let obs = (u2_obs - mean2).abs();
    let total: f64 = counts[na].iter().sum();
    let extreme: f64 = counts[na]
        .iter()
        .enumerate()
        .filter(|&(s, &c)| c != 0.0 && ((s as i64 - offset) - mean2).abs() >= obs)
        .map(|(_, &c)| c)
        .sum();
    (extreme / total).min(1.0)
}

/// Orders models strongest first by mean and groups them greedily: a model
/// joins the current group only if no current member differs from it
/// significantly; otherwise it opens a new group.
pub fn significance_groups(values: &[(String, Vec<f64>)], higher_is_better: bool) -> Vec<Vec<String>> {
    let mut order: Vec<(&String, &Vec<f64>, f64)> =
        values.iter().map(|(m, v)| (m, v, super::mean(v))).collect();
    order.sort_by(|x, y| {
        let c = x.2.total_cmp(&y.2);
        if higher_is_better {
            c.reverse()
        } else {
            c
        }
    });
    let mut groups: Vec<Vec<(&String, &Vec<f64>)>> = Vec::new();
    for (m, v, _) in order {
        let joins = groups
            .last()
            .is_some_and(|g| g.iter().all(|(_, w)| mann_whitney_u(v, w).p >= ALPHA));
        if joins {
            groups.last_mut().unwrap().push((m, v));
        } else {
            groups.push(vec![(m, v)]);
        }
    }
    groups.into_iter().map(|g| g.into_iter().map(|(m, _)| m.clone()).collect()).collect()
}
