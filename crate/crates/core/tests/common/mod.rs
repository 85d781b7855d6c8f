//! Test-only oracles, independent of the clustering engine.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimum total mismatch cost over every assignment of `rows` to exactly
/// `k` non-empty clusters, with each cluster's cost computed from its
/// optimal per-attribute mode (members minus the largest category count).
pub fn brute_force_optimum(rows: &[Vec<u32>], k: usize) -> usize {
    let n = rows.len();
    assert!(k >= 1 && k <= n);
    let mut labels = vec![0usize; n];
    let mut best = usize::MAX;
    loop {
        let mut used = vec![false; k];
        for &l in &labels {
            used[l] = true;
        }
        if used.iter().all(|&u| u) {
            best = best.min(partition_cost(rows, &labels, k));
        }
        // odometer increment in base k
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
    }
}

/// Cost of a fixed partition with best-possible modes.
pub fn partition_cost(rows: &[Vec<u32>], labels: &[usize], k: usize) -> usize {
    let m = rows.first().map_or(0, Vec::len);
    let mut total = 0;
    for l in 0..k {
        let members: Vec<&Vec<u32>> = rows
            .iter()
            .zip(labels)
            .filter(|(_, &x)| x == l)
            .map(|(r, _)| r)
            .collect();
        for j in 0..m {
            let mut counts: HashMap<u32, usize> = HashMap::new();
            for r in &members {
                *counts.entry(r[j]).or_default() += 1;
            }
            let top = counts.values().copied().max().unwrap_or(0);
            total += members.len() - top;
        }
    }
    total
}

/// Rows with `m` attributes drawn from `0..cats`, resampled until at least
/// `min_distinct` distinct rows exist.
pub fn random_rows(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    cats: u32,
    min_distinct: usize,
) -> Vec<Vec<u32>> {
    loop {
        let rows: Vec<Vec<u32>> = (0..n)
            .map(|_| (0..m).map(|_| rng.gen_range(0..cats)).collect())
            .collect();
        let mut distinct = rows.clone();
        distinct.sort();
        distinct.dedup();
        if distinct.len() >= min_distinct {
            return rows;
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The nine recorded scenario rows (three populated columns).
pub const SCENARIO_ROWS: [(&str, &str, [u32; 3]); 9] = [
    ("DIYA B", "AID111", [2, 2, 2]),
    ("ANUSHREE D", "AID102", [3, 3, 3]),
    ("DHARSHIKA V", "AID105", [4, 3, 4]),
    ("MONISHA S", "AID107", [2, 4, 3]),
    ("SNEHA K", "AID177", [2, 2, 2]),
    ("PRIYA M", "AID134", [3, 3, 3]),
    ("DIVYA", "AID101", [4, 5, 1]),
    ("YAMUNA C", "AID131", [3, 3, 5]),
    ("BANUPRIYA C", "AID128", [3, 3, 5]),
];

pub fn scenario_rows() -> Vec<Vec<u32>> {
    SCENARIO_ROWS.iter().map(|(_, _, r)| r.to_vec()).collect()
}

pub const SCENARIO_CSV: &str = include_str!("../fixtures/scenario_responses.csv");

/// Brute-force optimum for the nine scenario rows at k = 3, computed once
/// with `brute_force_optimum` and frozen.
pub const SCENARIO_OPTIMUM_K3: usize = 6;
