//! The online K-modes loop.
//!
//! Rows are encoded once as dictionary ranks (categorical) or reals
//! (numeric). Each run keeps per-cluster category counts and numeric sums so
//! that a mode can be refreshed in `O(total categories)` after every
//! allocation or move.

use rayon::prelude::*;

use super::{
    cluster_gammas, init_modes, within_cluster_difference, CategoricalDataset, ClusterModel,
    FitConfig,
};
use crate::dissimilarity::{
    compute_gamma, DissimilarityPolicy, GammaMode, PolicyMode, Prototype, Value,
};
use crate::error::{Error, Result};

/// Fits a K-modes model.
///
/// Each restart `r` is seeded with `config.seed + r` and runs:
/// an initial pass allocating every row (in row order) to its nearest mode
/// with the receiving mode refreshed after each allocation, then epochs in
/// which a row moves to a strictly closer mode (never emptying its source
/// cluster) with both modes refreshed immediately. A run stops after an
/// epoch with no moves or after `max_epochs`. The restart with the lowest
/// final cost wins; ties go to the earliest restart.
pub fn fit(dataset: &CategoricalDataset, config: &FitConfig) -> Result<ClusterModel> {
    dataset.validate()?;
    config.validate(dataset)?;
    let distinct = dataset.distinct_row_indices().len();
    if config.k > distinct {
        return Err(Error::InfeasibleK {
            k: config.k,
            available: distinct,
        });
    }

    let encoded = Encoded::new(dataset);
    let runs: Vec<Result<ClusterModel>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            run_once(
                dataset,
                &encoded,
                config,
                config.seed.wrapping_add(r as u64),
            )
        })
        .collect();

    let mut best: Option<ClusterModel> = None;
    for run in runs {
        let model = run?;
        if best.as_ref().is_none_or(|b| model.cost < b.cost) {
            best = Some(model);
        }
    }
    Ok(best.expect("restarts >= 1"))
}

fn run_once(
    dataset: &CategoricalDataset,
    encoded: &Encoded,
    config: &FitConfig,
    seed: u64,
) -> Result<ClusterModel> {
    let initial = init_modes(dataset, config.k, config.init, seed)?;
    let mut state = State::new(dataset, encoded, config.k, &initial, config.policy);

    state.initial_pass(dataset)?;
    state.fill_empty_clusters();

    let check = config.check_descent && config.policy.mode == PolicyMode::Simple;
    let mut converged = false;
    let mut epochs_run = 0;
    for epoch in 1..=config.max_epochs {
        epochs_run = epoch;
        state.refresh_measure(dataset)?;
        let moves = state.epoch(epoch, check)?;
        log::trace!("seed {seed} epoch {epoch}: {moves} moves");
        if moves == 0 {
            converged = true;
            break;
        }
    }
    log::debug!("seed {seed}: {epochs_run} epochs, converged={converged}");

    let assignments = state.assign.clone();
    let modes = state.prototypes(dataset);
    let cost = within_cluster_difference(dataset, &modes, &assignments, &config.policy, None)?;
    Ok(ClusterModel {
        modes,
        assignments,
        cost,
        epochs_run,
        converged,
        config: config.clone(),
    })
}

/// Dataset rows in dense form.
struct Encoded {
    n: usize,
    m: usize,
    categorical: Vec<bool>,
    /// Offset of each attribute's block inside a per-cluster count vector.
    offsets: Vec<usize>,
    /// Dictionary size per attribute (0 for numeric).
    sizes: Vec<usize>,
    total_categories: usize,
    /// Row-major ranks; unused for numeric slots.
    ranks: Vec<u32>,
    /// Row-major reals; unused for categorical slots.
    reals: Vec<f64>,
}

impl Encoded {
    fn new(dataset: &CategoricalDataset) -> Self {
        let n = dataset.len();
        let m = dataset.attribute_count();
        let categorical: Vec<bool> = dataset.attrs.iter().map(|a| a.is_categorical()).collect();
        let sizes: Vec<usize> = dataset.attrs.iter().map(|a| a.categories.len()).collect();
        let mut offsets = Vec::with_capacity(m);
        let mut total = 0;
        for &s in &sizes {
            offsets.push(total);
            total += s;
        }
        let mut ranks = vec![0u32; n * m];
        let mut reals = vec![0.0; n * m];
        for (i, row) in dataset.rows.iter().enumerate() {
            for (j, v) in row.values.iter().enumerate() {
                match *v {
                    Value::Category(c) => {
                        // validated: every code is in its dictionary
                        ranks[i * m + j] = dataset.attrs[j].rank_of(c).unwrap() as u32;
                    }
                    Value::Numeric(x) => reals[i * m + j] = x,
                }
            }
        }
        Self {
            n,
            m,
            categorical,
            offsets,
            sizes,
            total_categories: total,
            ranks,
            reals,
        }
    }

    fn rank(&self, i: usize, j: usize) -> u32 {
        self.ranks[i * self.m + j]
    }

    fn real(&self, i: usize, j: usize) -> f64 {
        self.reals[i * self.m + j]
    }
}

const UNASSIGNED: usize = usize::MAX;

struct State<'a> {
    enc: &'a Encoded,
    k: usize,
    policy: DissimilarityPolicy,
    assign: Vec<usize>,
    sizes: Vec<usize>,
    /// `k * total_categories` counts.
    counts: Vec<u32>,
    /// `k * m` numeric sums.
    sums: Vec<f64>,
    /// `k * m` mode ranks (categorical) and means (numeric).
    mode_rank: Vec<u32>,
    mode_mean: Vec<f64>,
    /// `k * total_categories` weights, filled under the weighted policy.
    weights: Vec<f64>,
    gammas: Vec<f64>,
    /// Whether distances use the weighted measure right now.
    use_weights: bool,
}

impl<'a> State<'a> {
    fn new(
        dataset: &CategoricalDataset,
        enc: &'a Encoded,
        k: usize,
        initial: &[Prototype],
        policy: DissimilarityPolicy,
    ) -> Self {
        let m = enc.m;
        let mut mode_rank = vec![0u32; k * m];
        let mut mode_mean = vec![0.0; k * m];
        for (l, p) in initial.iter().enumerate() {
            for (j, v) in p.values.iter().enumerate() {
                match *v {
                    Value::Category(c) => {
                        // prototypes come from dataset rows, so the lookup cannot miss
                        mode_rank[l * m + j] = dataset.attrs[j].rank_of(c).unwrap() as u32;
                    }
                    Value::Numeric(x) => mode_mean[l * m + j] = x,
                }
            }
        }
        let gamma = match policy.gamma_mode {
            GammaMode::Fixed => policy.gamma_value,
            GammaMode::Auto => 1.0,
        };
        Self {
            enc,
            k,
            policy,
            assign: vec![UNASSIGNED; enc.n],
            sizes: vec![0; k],
            counts: vec![0; k * enc.total_categories],
            sums: vec![0.0; k * m],
            mode_rank,
            mode_mean,
            weights: Vec::new(),
            gammas: vec![gamma; k],
            use_weights: false,
        }
    }

    fn initial_pass(&mut self, dataset: &CategoricalDataset) -> Result<()> {
        // No partition exists yet: the weighted policy allocates by simple
        // matching, and automatic gamma uses the whole dataset as one cluster.
        if self.policy.mode == PolicyMode::Mixed && self.policy.gamma_mode == GammaMode::Auto {
            let all: Vec<_> = dataset.rows.iter().collect();
            let g = compute_gamma(&all, &dataset.attrs)?;
            self.gammas = vec![if g > 0.0 { g } else { 1.0 }; self.k];
        }
        for i in 0..self.enc.n {
            let (l, _) = self.nearest(i);
            self.add(i, l);
        }
        Ok(())
    }

    /// Gives every empty cluster the row farthest from its own mode among
    /// clusters that can spare one. Ties go to the lowest row index.
    fn fill_empty_clusters(&mut self) {
        for l in 0..self.k {
            if self.sizes[l] > 0 {
                continue;
            }
            let mut pick: Option<(usize, f64)> = None;
            for i in 0..self.enc.n {
                let src = self.assign[i];
                if self.sizes[src] < 2 {
                    continue;
                }
                let d = self.distance(i, src);
                if pick.is_none_or(|(_, pd)| d > pd) {
                    pick = Some((i, d));
                }
            }
            // k <= n guarantees some cluster holds two or more rows
            let (i, _) = pick.expect("a cluster with at least two rows exists");
            let src = self.assign[i];
            self.remove(i, src);
            self.add(i, l);
        }
    }

    fn refresh_measure(&mut self, dataset: &CategoricalDataset) -> Result<()> {
        match self.policy.mode {
            PolicyMode::Simple => {}
            PolicyMode::Weighted => {
                self.compute_weights();
                self.use_weights = true;
            }
            PolicyMode::Mixed => {
                if self.policy.gamma_mode == GammaMode::Auto {
                    self.gammas = cluster_gammas(dataset, &self.assign, self.k, &self.policy)?;
                }
            }
        }
        Ok(())
    }

    /// Frequency-ratio weights for the current partition; same arithmetic as
    /// `compute_category_weights`, laid out densely by rank.
    fn compute_weights(&mut self) {
        let enc = self.enc;
        let total = enc.total_categories;
        let mut global = vec![0u32; total];
        for l in 0..self.k {
            for (g, c) in global
                .iter_mut()
                .zip(&self.counts[l * total..(l + 1) * total])
            {
                *g += c;
            }
        }
        let n = enc.n as f64;
        self.weights = vec![0.0; self.k * total];
        for l in 0..self.k {
            let size = self.sizes[l];
            for (r, &g) in global.iter().enumerate() {
                let local = self.counts[l * total + r];
                self.weights[l * total + r] = if size == 0 {
                    crate::dissimilarity::DEFAULT_WEIGHT
                } else if local == 0 || g == 0 {
                    0.0
                } else {
                    ((local as f64 / size as f64) / (g as f64 / n)).clamp(0.0, 1.0)
                };
            }
        }
    }

    /// One pass over the rows; returns the number of moves.
    fn epoch(&mut self, epoch: usize, check: bool) -> Result<usize> {
        let mut moves = 0;
        for i in 0..self.enc.n {
            let current = self.assign[i];
            let (best, best_d) = self.nearest(i);
            if best == current || self.sizes[current] < 2 {
                continue;
            }
            if best_d >= self.distance(i, current) {
                continue;
            }
            let before = if check { self.total_cost() } else { 0.0 };
            self.remove(i, current);
            self.add(i, best);
            if check {
                let after = self.total_cost();
                if after >= before {
                    return Err(Error::DescentViolation {
                        epoch,
                        row: i,
                        before,
                        after,
                    });
                }
            }
            moves += 1;
        }
        Ok(moves)
    }

    fn nearest(&self, i: usize) -> (usize, f64) {
        let mut best = (0, self.distance(i, 0));
        for l in 1..self.k {
            let d = self.distance(i, l);
            if d < best.1 {
                best = (l, d);
            }
        }
        best
    }

    fn distance(&self, i: usize, l: usize) -> f64 {
        let enc = self.enc;
        let m = enc.m;
        let mut mismatches = 0usize;
        let mut weighted = 0.0;
        let mut squared = 0.0;
        for j in 0..m {
            if enc.categorical[j] {
                let x = enc.rank(i, j);
                let hit = x == self.mode_rank[l * m + j];
                if self.use_weights {
                    let w = self.weights[l * enc.total_categories + enc.offsets[j] + x as usize];
                    weighted += if hit { 1.0 - w } else { w };
                } else {
                    mismatches += usize::from(!hit);
                }
            } else {
                let d = enc.real(i, j) - self.mode_mean[l * m + j];
                squared += d * d;
            }
        }
        match self.policy.mode {
            PolicyMode::Mixed => squared.sqrt() + self.gammas[l] * mismatches as f64,
            _ if self.use_weights => weighted,
            _ => mismatches as f64,
        }
    }

    /// Simple-matching cost of the current partition.
    fn total_cost(&self) -> f64 {
        (0..self.enc.n)
            .map(|i| self.distance(i, self.assign[i]))
            .sum()
    }

    fn add(&mut self, i: usize, l: usize) {
        self.assign[i] = l;
        self.sizes[l] += 1;
        self.tally(i, l, true);
        self.refresh_mode(l);
    }

    fn remove(&mut self, i: usize, l: usize) {
        self.assign[i] = UNASSIGNED;
        self.sizes[l] -= 1;
        self.tally(i, l, false);
        self.refresh_mode(l);
    }

    fn tally(&mut self, i: usize, l: usize, add: bool) {
        let enc = self.enc;
        for j in 0..enc.m {
            if enc.categorical[j] {
                let slot = l * enc.total_categories + enc.offsets[j] + enc.rank(i, j) as usize;
                if add {
                    self.counts[slot] += 1;
                } else {
                    self.counts[slot] -= 1;
                }
            } else {
                let x = enc.real(i, j);
                self.sums[l * enc.m + j] += if add { x } else { -x };
            }
        }
    }

    /// Most frequent rank per categorical attribute (lowest rank on ties)
    /// and the member mean per numeric attribute. An empty cluster keeps
    /// its previous mode.
    fn refresh_mode(&mut self, l: usize) {
        if self.sizes[l] == 0 {
            return;
        }
        let enc = self.enc;
        for j in 0..enc.m {
            if enc.categorical[j] {
                let start = l * enc.total_categories + enc.offsets[j];
                let block = &self.counts[start..start + enc.sizes[j]];
                let mut best = 0;
                for (r, &c) in block.iter().enumerate().skip(1) {
                    if c > block[best] {
                        best = r;
                    }
                }
                self.mode_rank[l * enc.m + j] = best as u32;
            } else {
                self.mode_mean[l * enc.m + j] = self.sums[l * enc.m + j] / self.sizes[l] as f64;
            }
        }
    }

    /// Final prototypes with numeric means recomputed from scratch so they
    /// carry no accumulated rounding from incremental sums.
    fn prototypes(&self, dataset: &CategoricalDataset) -> Vec<Prototype> {
        let enc = self.enc;
        let mut exact_sums = vec![0.0; self.k * enc.m];
        for i in 0..enc.n {
            let l = self.assign[i];
            for j in 0..enc.m {
                if !enc.categorical[j] {
                    exact_sums[l * enc.m + j] += enc.real(i, j);
                }
            }
        }
        (0..self.k)
            .map(|l| Prototype {
                cluster_index: l,
                values: (0..enc.m)
                    .map(|j| {
                        if enc.categorical[j] {
                            let r = self.mode_rank[l * enc.m + j] as usize;
                            Value::Category(dataset.attrs[j].categories[r])
                        } else {
                            Value::Numeric(exact_sums[l * enc.m + j] / self.sizes[l] as f64)
                        }
                    })
                    .collect(),
            })
            .collect()
    }
}
