use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CategoricalDataset, InitStrategy};
use crate::dissimilarity::{mixed_dissimilarity, Prototype, Value};
use crate::error::{Error, Result};

/// Chooses `k` initial prototypes, each a distinct row of the dataset.
///
/// `RandomRows` samples distinct rows without replacement from a ChaCha8
/// stream seeded with `seed`. `Density` ignores the seed: it starts from
/// the row whose values are most frequent overall, then repeatedly adds the
/// row farthest (by its minimum matching distance) from the rows already
/// chosen. Ties in either step go to the lowest row index.
pub fn init_modes(
    dataset: &CategoricalDataset,
    k: usize,
    strategy: InitStrategy,
    seed: u64,
) -> Result<Vec<Prototype>> {
    let distinct = dataset.distinct_row_indices();
    if k == 0 || k > distinct.len() {
        return Err(Error::InfeasibleK {
            k,
            available: distinct.len(),
        });
    }
    let chosen = match strategy {
        InitStrategy::RandomRows => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rand::seq::index::sample(&mut rng, distinct.len(), k)
                .into_iter()
                .map(|i| distinct[i])
                .collect()
        }
        InitStrategy::Density => density_rows(dataset, &distinct, k)?,
    };
    Ok(chosen
        .into_iter()
        .enumerate()
        .map(|(l, row)| dataset.rows[row].to_prototype(l))
        .collect())
}

fn density_rows(dataset: &CategoricalDataset, distinct: &[usize], k: usize) -> Result<Vec<usize>> {
    // frequency of each code per categorical attribute, indexed by dictionary rank
    let mut freq: Vec<Vec<usize>> = dataset
        .attrs
        .iter()
        .map(|a| vec![0; a.categories.len()])
        .collect();
    let rank = |j: usize, v: &Value| -> Option<usize> {
        v.as_category().and_then(|c| dataset.attrs[j].rank_of(c))
    };
    for row in &dataset.rows {
        for (j, v) in row.values.iter().enumerate() {
            if let Some(r) = rank(j, v) {
                freq[j][r] += 1;
            }
        }
    }
    let density = |i: usize| -> usize {
        dataset.rows[i]
            .values
            .iter()
            .enumerate()
            .filter_map(|(j, v)| rank(j, v).map(|r| freq[j][r]))
            .sum()
    };

    let mut first = distinct[0];
    let mut best = density(first);
    for &i in &distinct[1..] {
        let d = density(i);
        if d > best {
            best = d;
            first = i;
        }
    }

    let mut chosen = vec![first];
    let mut min_dist: Vec<f64> = vec![f64::INFINITY; distinct.len()];
    while chosen.len() < k {
        let last = dataset.rows[*chosen.last().unwrap()].to_prototype(0);
        let mut pick: Option<(usize, f64)> = None;
        for (slot, &i) in distinct.iter().enumerate() {
            if chosen.contains(&i) {
                continue;
            }
            let d = mixed_dissimilarity(&dataset.rows[i], &last, &dataset.attrs, 1.0)?;
            min_dist[slot] = min_dist[slot].min(d);
            if pick.is_none_or(|(_, pd)| min_dist[slot] > pd) {
                pick = Some((i, min_dist[slot]));
            }
        }
        chosen.push(pick.expect("k does not exceed the distinct row count").0);
    }
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn random_rows_with_k_equal_n_takes_every_row() {
        let ds =
            CategoricalDataset::from_code_rows(&[vec![1, 1], vec![2, 2], vec![3, 3], vec![4, 4]])
                .unwrap();
        let modes = init_modes(&ds, 4, InitStrategy::RandomRows, 11).unwrap();
        let got: BTreeSet<Vec<u32>> = modes
            .iter()
            .map(|p| p.values.iter().map(|v| v.as_category().unwrap()).collect())
            .collect();
        let want: BTreeSet<Vec<u32>> = (1..=4).map(|c| vec![c, c]).collect();
        assert_eq!(got, want);
        for (l, p) in modes.iter().enumerate() {
            assert_eq!(p.cluster_index, l);
        }
    }

    #[test]
    fn density_prefers_frequent_values() {
        let ds =
            CategoricalDataset::from_code_rows(&[vec![5, 5], vec![1, 1], vec![1, 1], vec![1, 1]])
                .unwrap();
        let modes = init_modes(&ds, 1, InitStrategy::Density, 0).unwrap();
        assert_eq!(modes[0], Prototype::from_codes(0, &[1, 1]));
        let modes = init_modes(&ds, 2, InitStrategy::Density, 0).unwrap();
        assert_eq!(modes[1], Prototype::from_codes(1, &[5, 5]));
    }

    #[test]
    fn density_picks_farthest_next() {
        let ds = CategoricalDataset::from_code_rows(&[
            vec![0, 0, 0],
            vec![0, 0, 1],
            vec![1, 1, 1],
            vec![0, 0, 0],
        ])
        .unwrap();
        let modes = init_modes(&ds, 2, InitStrategy::Density, 0).unwrap();
        assert_eq!(modes[0], Prototype::from_codes(0, &[0, 0, 0]));
        assert_eq!(modes[1], Prototype::from_codes(1, &[1, 1, 1]));
    }

    #[test]
    fn seeded_sampling_is_deterministic() {
        let rows: Vec<Vec<u32>> = (0..30).map(|i| vec![i % 7, i % 5, i % 3]).collect();
        let ds = CategoricalDataset::from_code_rows(&rows).unwrap();
        let a = init_modes(&ds, 5, InitStrategy::RandomRows, 42).unwrap();
        let b = init_modes(&ds, 5, InitStrategy::RandomRows, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_distinct_rows() {
        let ds = CategoricalDataset::from_code_rows(&[vec![1], vec![1], vec![2]]).unwrap();
        for strategy in [InitStrategy::RandomRows, InitStrategy::Density] {
            assert!(matches!(
                init_modes(&ds, 3, strategy, 0),
                Err(Error::InfeasibleK { k: 3, available: 2 })
            ));
        }
    }
}
