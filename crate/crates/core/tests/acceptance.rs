//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints its own PASS/FAIL line; exits non-zero on any failure.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use indexmap::IndexMap;
use ocean_kmodes::cli::run;
use ocean_kmodes::dissimilarity::{compute_category_weights, AttributeSpec, Record};
use ocean_kmodes::kmodes::{
    elbow_scan, fit, select_k, update_mode_attribute, CategoricalDataset, ClusterModel, FitConfig,
    DEFAULT_EPSILON,
};
use ocean_kmodes::report::{
    emit_report, fuse_profiles, personality_percentages, ClusterLabel, ClusterLabeling,
    PercentReport, Provenance, ReportFormat, ReportMetadata,
};
use ocean_kmodes::survey::{score_profile, SurveySchema};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::seq::SliceRandom;
use rand::Rng;

use common::{brute_force_optimum, random_rows, rng, SCENARIO_CSV, SCENARIO_OPTIMUM_K3};

const GOLDEN_REPORT: &str = include_str!("fixtures/scenario_report.json");

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn partition(model: &ClusterModel, ds: &CategoricalDataset) -> BTreeSet<BTreeSet<String>> {
    (0..model.k())
        .map(|l| {
            model
                .members(l)
                .into_iter()
                .map(|i| ds.rows[i].row_id.clone())
                .collect()
        })
        .collect()
}

fn distinct(rows: &[Vec<u32>]) -> usize {
    rows.iter().collect::<BTreeSet<_>>().len()
}

fn invoke(args: &[&str]) -> (i32, Vec<u8>, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("ocean-kmodes").chain(args.iter().copied());
    let code = run(argv, &mut std::io::empty(), &mut out, &mut err);
    (code, out, String::from_utf8_lossy(&err).into_owned())
}

fn global_optimum() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let (mut matched, mut beaten) = (0, 0);
    for trial in 0..100u64 {
        let n = r.gen_range(2..=8);
        let cats = r.gen_range(2..=3);
        let rows = random_rows(&mut r, n, 3, cats, 2);
        let ds = CategoricalDataset::from_code_rows(&rows).unwrap();
        let model = fit(&ds, &FitConfig::new(2).with_seed(trial).with_restarts(20)).unwrap();
        let best = brute_force_optimum(&rows, 2) as f64;
        matched += usize::from(model.cost == best);
        beaten += usize::from(model.cost < best);
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        matched >= 95 && beaten == 0 && secs < 10.0,
        format!("{matched}/100 optimal, {beaten} below optimum, {secs:.2}s"),
    )
}

fn descent_and_termination() -> Outcome {
    let mut r = rng(2);
    let (mut violations, mut unconverged, mut max_epochs) = (0, 0, 0);
    for trial in 0..1000u64 {
        let n = r.gen_range(1..=50);
        let m = r.gen_range(1..=5);
        let cats = r.gen_range(2..=5);
        let rows = random_rows(&mut r, n, m, cats, 1);
        let ds = CategoricalDataset::from_code_rows(&rows).unwrap();
        let k = r.gen_range(1..=distinct(&rows).min(6));
        let cfg = FitConfig::new(k)
            .with_seed(trial)
            .with_restarts(2)
            .with_descent_check(true);
        match fit(&ds, &cfg) {
            Ok(model) => {
                unconverged += usize::from(!model.converged);
                max_epochs = max_epochs.max(model.epochs_run);
            }
            Err(_) => violations += 1,
        }
    }
    check(
        violations == 0 && unconverged == 0,
        format!("{violations} descent violations, {unconverged} unconverged, at most {max_epochs} epochs"),
    )
}

fn mode_majority() -> Outcome {
    let mut runner = TestRunner::new(Config {
        cases: 10_000,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = prop::collection::vec(0u32..8, 1..60);
    let result = runner.run(&strategy, |values| {
        let mut sorted = values.clone();
        sorted.sort_unstable();
        // first strictly larger run wins, so ties keep the lowest code
        let (mut best, mut best_n) = (sorted[0], 0);
        let mut i = 0;
        while i < sorted.len() {
            let j = sorted[i..].iter().take_while(|&&v| v == sorted[i]).count();
            if j > best_n {
                best = sorted[i];
                best_n = j;
            }
            i += j;
        }
        prop_assert_eq!(update_mode_attribute(&values).unwrap(), best);
        Ok(())
    });
    check(
        result.is_ok(),
        match result {
            Ok(()) => "10000 generated clusters, 0 violations".into(),
            Err(e) => e.to_string(),
        },
    )
}

fn recode(rows: &[Vec<u32>], r: &mut impl Rng) -> Vec<Vec<u32>> {
    let m = rows[0].len();
    let maps: Vec<Vec<u32>> = (0..m)
        .map(|_| {
            let mut codes: Vec<u32> = (0..1000).collect();
            codes.shuffle(r);
            codes.truncate(16);
            codes
        })
        .collect();
    rows.iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, &c)| maps[j][c as usize])
                .collect()
        })
        .collect()
}

fn recoding_invariance() -> Outcome {
    let mut r = rng(4);
    let mut differing = 0;
    for trial in 0..100u64 {
        let n = r.gen_range(5..=40);
        let m = r.gen_range(1..=5);
        let cats = r.gen_range(2..=5);
        let rows = random_rows(&mut r, n, m, cats, 2);
        let k = r.gen_range(1..=distinct(&rows).min(4));
        let recoded = recode(&rows, &mut r);
        let a = CategoricalDataset::from_code_rows(&rows).unwrap();
        let b = CategoricalDataset::from_code_rows(&recoded).unwrap();
        let cfg = FitConfig::new(k).with_seed(trial).with_restarts(3);
        differing += usize::from(
            partition(&fit(&a, &cfg).unwrap(), &a) != partition(&fit(&b, &cfg).unwrap(), &b),
        );
    }
    check(
        differing == 0,
        format!("100 recoded datasets, {differing} partitions differ"),
    )
}

fn tiny_elbow() -> Outcome {
    let mut r = rng(5);
    let (mut increasing, mut below) = (0, 0);
    for trial in 0..30u64 {
        let n = r.gen_range(4..=8);
        let rows = random_rows(&mut r, n, 3, 3, 4);
        let ds = CategoricalDataset::from_code_rows(&rows).unwrap();
        let optimum: Vec<usize> = (1..=4).map(|k| brute_force_optimum(&rows, k)).collect();
        increasing += optimum.windows(2).filter(|w| w[1] > w[0]).count();
        let curve = elbow_scan(
            &ds,
            1,
            4,
            &FitConfig::new(1).with_seed(trial).with_restarts(5),
        )
        .unwrap();
        below += curve
            .iter()
            .zip(&optimum)
            .filter(|((_, w), &o)| *w < o as f64)
            .count();
    }
    let picked = select_k(
        &[(1, 100.0), (2, 10.0), (3, 9.8), (4, 9.7)],
        DEFAULT_EPSILON,
    )
    .unwrap();
    check(
        increasing == 0 && below == 0 && picked == 2,
        format!("30 datasets: {increasing} optimum increases, {below} scan values below optimum; select_k = {picked}"),
    )
}

/// Item order: EXT1-10, EST1-10, AGR1-10, CSN1-10, OPN1-10.
fn ocean_row(
    ext: [i64; 10],
    est: [i64; 10],
    agr: [i64; 10],
    csn: [i64; 10],
    opn: [i64; 10],
) -> Vec<i64> {
    [ext, est, agr, csn, opn].concat()
}

fn scoring_oracle() -> Outcome {
    let schema = SurveySchema::preset("ocean50").unwrap();
    let t = [3; 10];
    // expected raw scores in O, C, E, A, N order
    let cases: Vec<(Vec<i64>, [f64; 5])> = vec![
        (ocean_row(t, t, t, t, t), [30.0, 30.0, 30.0, 30.0, 30.0]),
        (
            ocean_row([5; 10], [5; 10], [5; 10], [5; 10], [5; 10]),
            [38.0, 34.0, 30.0, 34.0, 42.0],
        ),
        (
            ocean_row([1; 10], [1; 10], [1; 10], [1; 10], [1; 10]),
            [22.0, 26.0, 30.0, 26.0, 18.0],
        ),
        (
            ocean_row([2; 10], [2; 10], [2; 10], [2; 10], [2; 10]),
            [26.0, 28.0, 30.0, 28.0, 24.0],
        ),
        (
            ocean_row([4; 10], [4; 10], [4; 10], [4; 10], [4; 10]),
            [34.0, 32.0, 30.0, 32.0, 36.0],
        ),
        (
            ocean_row([5; 10], t, t, t, t),
            [30.0, 30.0, 30.0, 30.0, 30.0],
        ),
        (
            ocean_row([5, 1, 5, 1, 5, 1, 5, 1, 5, 1], t, t, t, t),
            [30.0, 30.0, 50.0, 30.0, 30.0],
        ),
        (
            ocean_row(t, t, t, t, [5, 1, 4, 2, 5, 1, 5, 4, 4, 5]),
            [46.0, 30.0, 30.0, 30.0, 30.0],
        ),
        (
            ocean_row(t, t, t, [1, 5, 1, 5, 1, 5, 1, 5, 1, 1], t),
            [30.0, 10.0, 30.0, 30.0, 30.0],
        ),
        (
            ocean_row(
                t,
                [5, 1, 5, 1, 5, 5, 5, 5, 5, 5],
                [1, 5, 1, 5, 1, 5, 1, 5, 5, 5],
                t,
                t,
            ),
            [30.0, 30.0, 30.0, 50.0, 50.0],
        ),
    ];
    let mut mismatches = 0;
    for (row, expected) in &cases {
        let profile = score_profile(row, &schema).unwrap();
        let got: Vec<f64> = schema.dimensions.iter().map(|d| profile.raw[d]).collect();
        mismatches += usize::from(got != expected);
    }
    let neutral = score_profile(&cases[0].0, &schema).unwrap();
    let percent_ok = neutral.percent.values().all(|p| (p - 20.0).abs() < 1e-9);
    check(
        mismatches == 0 && percent_ok,
        format!(
            "{} rows, {mismatches} raw mismatches; all-3s percent 20 each: {percent_ok}",
            cases.len()
        ),
    )
}

fn fixture_regression() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("responses.csv");
    std::fs::write(&input, SCENARIO_CSV).unwrap();
    let input = input.to_str().unwrap();
    let args = [
        "report",
        "--schema",
        "scenario3",
        "--k",
        "3",
        "--seed",
        "42",
        "--restarts",
        "20",
        "--policy",
        "simple",
        input,
    ];
    let (code_a, a, err) = invoke(&args);
    let (code_b, b, _) = invoke(&args);
    let report = PercentReport::from_json(std::str::from_utf8(&a).unwrap()).unwrap();
    let rows = common::scenario_rows();
    let oracle = brute_force_optimum(&rows, 3);
    check(
        code_a == 0
            && code_b == 0
            && a == b
            && a == GOLDEN_REPORT.as_bytes()
            && oracle == SCENARIO_OPTIMUM_K3
            && report.metadata.cost == Some(SCENARIO_OPTIMUM_K3 as f64),
        format!(
            "exit {code_a}/{code_b}, repeat identical: {}, golden identical: {}, cost {:?} vs optimum {oracle} {err}",
            a == b,
            a == GOLDEN_REPORT.as_bytes(),
            report.metadata.cost
        ),
    )
}

const OCEAN: [&str; 5] = [
    "Openness",
    "Conscientiousness",
    "Extraversion",
    "Agreeableness",
    "Neuroticism",
];

fn external(values: &[f64]) -> PercentReport {
    let sum: f64 = values.iter().sum();
    PercentReport {
        provenance: Provenance::External,
        percentages: OCEAN
            .iter()
            .zip(values)
            .map(|(d, v)| (d.to_string(), 100.0 * v / sum))
            .collect(),
        metadata: ReportMetadata::default(),
    }
}

fn labeling(sizes: &[usize], dominants: &[usize]) -> ClusterLabeling {
    ClusterLabeling {
        schema: "ocean50".into(),
        dimensions: OCEAN.iter().map(|d| d.to_string()).collect(),
        n: sizes.iter().sum(),
        clusters: sizes
            .iter()
            .zip(dominants)
            .enumerate()
            .map(|(cluster, (&size, &d))| ClusterLabel {
                cluster,
                size,
                dominant: OCEAN[d].into(),
                mean_percent: IndexMap::new(),
            })
            .collect(),
    }
}

fn sums_to_100(r: &PercentReport) -> bool {
    (r.percentages.values().sum::<f64>() - 100.0).abs() <= 1e-9
}

fn fusion_algebra() -> Outcome {
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let weights = || prop::collection::vec(0.001f64..10.0, 5);
    let clusters = prop::collection::vec((1usize..200, 0usize..5), 1..8);
    let strategy = (weights(), weights(), 0.0f64..=1.0, clusters);
    let result = runner.run(&strategy, |(va, vb, w, cl)| {
        let a = external(&va);
        let b = external(&vb);
        let aa = fuse_profiles(&a, &a, w).unwrap();
        let ab = fuse_profiles(&a, &b, w).unwrap();
        let ba = fuse_profiles(&b, &a, 1.0 - w).unwrap();
        for d in OCEAN {
            prop_assert!((aa.percentages[d] - a.percentages[d]).abs() <= 1e-9);
            prop_assert!((ab.percentages[d] - ba.percentages[d]).abs() <= 1e-9);
        }
        let (sizes, dominants): (Vec<usize>, Vec<usize>) = cl.into_iter().unzip();
        let share = personality_percentages(&labeling(&sizes, &dominants));
        for r in [&a, &b, &aa, &ab, &ba, &share] {
            prop_assert!(sums_to_100(r));
            let doc = emit_report(r, ReportFormat::Json).unwrap();
            let back = PercentReport::from_json(std::str::from_utf8(&doc).unwrap()).unwrap();
            prop_assert_eq!(&back, r);
        }
        Ok(())
    });
    check(
        result.is_ok(),
        match result {
            Ok(()) => "1000 generated report pairs, 0 violations".into(),
            Err(e) => e.to_string(),
        },
    )
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let (responses, model) = (path("gen.csv"), path("model.json"));
    let steps: [Vec<&str>; 2] = [
        vec![
            "gen",
            "--n",
            "1000",
            "--mixture",
            "uniform",
            "--noise",
            "0",
            "--seed",
            "7",
            "-o",
            &responses,
        ],
        vec![
            "fit",
            "--k",
            "5",
            "--restarts",
            "10",
            "-o",
            &model,
            &responses,
        ],
    ];
    for step in &steps {
        let (code, _, err) = invoke(step);
        if code != 0 {
            return Err(format!("`{}` exited {code}: {err}", step[0]));
        }
    }
    let (code, labels, err) = invoke(&["report", "--model", &model, "--labels", &responses]);
    if code != 0 {
        return Err(format!("report exited {code}: {err}"));
    }
    let (code, share, err) = invoke(&["report", "--model", &model, &responses]);
    if code != 0 {
        return Err(format!("report exited {code}: {err}"));
    }
    let secs = start.elapsed().as_secs_f64();
    let labeling: ClusterLabeling = serde_json::from_slice(&labels).unwrap();
    let share = PercentReport::from_json(std::str::from_utf8(&share).unwrap()).unwrap();
    let dominants: BTreeSet<&str> = labeling
        .clusters
        .iter()
        .map(|c| c.dominant.as_str())
        .collect();
    let in_band = share
        .percentages
        .values()
        .all(|p| (14.0..=26.0).contains(p));
    let shares: Vec<String> = share
        .percentages
        .iter()
        .map(|(d, p)| format!("{d} {p:.1}%"))
        .collect();
    check(
        labeling.clusters.len() == 5 && dominants.len() == 5 && in_band && secs < 30.0,
        format!(
            "{} distinct dominant labels; {}; {secs:.2}s",
            dominants.len(),
            shares.join(", ")
        ),
    )
}

fn weight_bounds() -> Outcome {
    let mut r = rng(10);
    let (mut out_of_range, mut decreasing, mut monotone_checks) = (0, 0, 0);
    for _ in 0..10_000 {
        let n = r.gen_range(1..=30);
        let m = r.gen_range(1..=4);
        let cats = r.gen_range(1..=4);
        let mut rows = random_rows(&mut r, n, m, cats, 1);
        let k = r.gen_range(1..=4);
        let assignments: Vec<usize> = (0..n).map(|_| r.gen_range(0..k)).collect();
        let build = |rows: &[Vec<u32>]| -> CategoricalDataset {
            let attrs = (0..m)
                .map(|j| AttributeSpec::categorical(j, format!("a{j}"), (0..cats).collect()))
                .collect();
            let records = rows
                .iter()
                .enumerate()
                .map(|(i, row)| Record::from_codes(i.to_string(), row))
                .collect();
            CategoricalDataset::new(attrs, records).unwrap()
        };
        let before = compute_category_weights(&build(&rows), &assignments, k).unwrap();
        out_of_range += before
            .iter()
            .filter(|(_, w)| !(0.0..=1.0).contains(w))
            .count();

        // Swap one value between a member and a non-member of cluster l: the
        // dataset frequency of `a` is unchanged while its count in l grows.
        let j = r.gen_range(0..m);
        let l = r.gen_range(0..k);
        let a = r.gen_range(0..cats);
        let inside = (0..n).find(|&i| assignments[i] == l && rows[i][j] != a);
        let outside = (0..n).find(|&i| assignments[i] != l && rows[i][j] == a);
        if let (Some(p), Some(q)) = (inside, outside) {
            let b = rows[p][j];
            rows[p][j] = a;
            rows[q][j] = b;
            let after = compute_category_weights(&build(&rows), &assignments, k).unwrap();
            monotone_checks += 1;
            decreasing += usize::from(after.get(j, a, l) < before.get(j, a, l));
            out_of_range += after
                .iter()
                .filter(|(_, w)| !(0.0..=1.0).contains(w))
                .count();
        }
    }
    check(
        out_of_range == 0 && decreasing == 0 && monotone_checks > 0,
        format!("10000 pairs: {out_of_range} weights outside [0,1]; {monotone_checks} monotonicity checks, {decreasing} decreases"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("global optimum on tiny instances", global_optimum),
        ("strict descent and termination", descent_and_termination),
        ("mode majority", mode_majority),
        ("recoding invariance", recoding_invariance),
        ("tiny-instance elbow", tiny_elbow),
        ("scoring oracle", scoring_oracle),
        ("scenario fixture regression", fixture_regression),
        ("fusion and report algebra", fusion_algebra),
        ("end-to-end pipeline", end_to_end),
        ("weight-table bounds", weight_bounds),
    ];
    let mut failed = 0;
    for (i, (name, criterion)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(criterion)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
