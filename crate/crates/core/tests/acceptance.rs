//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::E;
use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sqgt::adaptive::{
    adaptive_test_count, build_merged, list_size_bound, recover_list, two_round_decode,
};
use sqgt::expander::{random_expander, to_binary_matrix, verified_expander, ExpanderSample};
use sqgt::experiment::{self, ExperimentConfig, Scheme};
use sqgt::model::{adaptive_lower_bound, binary_outcome, nonadaptive_lower_bound, threshold_for};
use sqgt::nonadaptive::{build_bucket_scheme, RsCode};
use sqgt::oracle::{
    enumerate_consistent, for_each_subset, maximal_consistent_list, sweep_unique_neighbor_bound,
    verify_adaptive_claims, verify_nonadaptive_claims,
};
use sqgt::{DefectiveSet, OutcomeVector, TestMatrix};

/// Enough for exhaustive expansion checks at n = 60 (about 5.7e7 subsets).
const LARGE_BUDGET: u64 = 1 << 27;
const SEED: u64 = 20_240_601;

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn all_sets(n: usize, d: usize) -> Vec<DefectiveSet> {
    let mut sets = Vec::new();
    for_each_subset(n, d, |s| {
        sets.push(DefectiveSet::new(s.to_vec(), n).unwrap());
        true
    });
    sets
}

fn random_set(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DefectiveSet {
    let size = rng.gen_range(0..=d);
    DefectiveSet::new(index::sample(rng, n, size).into_vec(), n).unwrap()
}

fn n60_expander() -> ExpanderSample {
    verified_expander(60, 2, SEED, LARGE_BUDGET, 20).unwrap()
}

fn two_round_exactness(sample: &ExpanderSample) -> Outcome {
    if !sample.verified {
        return outcome(false, "expander could not be verified");
    }
    let scheme = build_merged(&to_binary_matrix(&sample.graph), 2).unwrap();
    let sets = all_sets(60, 2);
    let failures = sets
        .iter()
        .filter(|set| match two_round_decode(&scheme, set, 2, 3) {
            Ok(out) => &out.decoded != *set,
            Err(_) => true,
        })
        .count();
    outcome(
        sets.len() == 1831 && failures == 0,
        format!(
            "{} sets, {failures} failures, tau {}",
            sets.len(),
            scheme.tau()
        ),
    )
}

fn claim_inequalities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut trials, mut violations, mut worst) = (0, 0, 0usize);
    // 100 designs with 10 defective sets each
    for design in 0..100 {
        let n = rng.gen_range(100..=500);
        let d = rng.gen_range(1..=5);
        let gamma = rng.gen_range(1..=3);
        let (graph, params) = random_expander(n, d, SEED + design).unwrap();
        let b = to_binary_matrix(&graph);
        let scheme = build_merged(&b, gamma).unwrap();
        for _ in 0..10 {
            let set = random_set(&mut rng, n, d);
            let readings = scheme.run_round_one(&set).unwrap();
            let decoding = scheme.decode_round_one(&readings).unwrap();
            let t = binary_outcome(scheme.base(), &set).unwrap();
            let h_raw = decoding.raw_indicator.hamming(&t);
            let h_corrected = decoding.corrected.hamming(&t);
            let ok = 4 * h_raw <= d * params.k
                && 4 * h_corrected <= d * params.k
                && t.dominated_by(&decoding.corrected);
            let claims = verify_adaptive_claims(&scheme, &set, d).unwrap();
            violations += usize::from(!ok || !claims.hamming_ok || !claims.monotone_ok);
            worst = worst.max(h_raw.max(h_corrected));
            trials += 1;
        }
    }
    outcome(
        trials == 1000 && violations == 0,
        format!("{trials} trials, {violations} violations, largest Hamming distance {worst}"),
    )
}

fn list_bounds(sample: &ExpanderSample) -> Outcome {
    let b = to_binary_matrix(&sample.graph);
    let scheme = build_merged(&b, 2).unwrap();
    let limit = list_size_bound(2);
    let (mut clean_bad, mut merged_bad, mut oracle_bad, mut largest) = (0, 0, 0, 0);
    for set in all_sets(60, 2) {
        let t = binary_outcome(&b, &set).unwrap();
        let clean = recover_list(&t, &b).unwrap();
        clean_bad += usize::from(clean.len() >= 2 * set.len() + 2 || !set.is_subset_of(&clean));
        oracle_bad += usize::from(clean != maximal_consistent_list(&b, &t).unwrap());
        let decoding = scheme
            .decode_round_one(&scheme.run_round_one(&set).unwrap())
            .unwrap();
        merged_bad += usize::from(decoding.list.len() > limit);
        largest = largest.max(decoding.list.len());
    }
    outcome(
        clean_bad + merged_bad + oracle_bad == 0,
        format!(
            "clean violations {clean_bad}, merged violations {merged_bad} (limit {limit}, largest {largest}), oracle mismatches {oracle_bad}"
        ),
    )
}

fn nonadaptive_exactness() -> Outcome {
    let mut config = ExperimentConfig::new(Scheme::Nonadaptive, 841, 2, 2);
    config.q = Some(29);
    config.kappa = Some(2);
    config.exhaustive = true;
    config.budget = LARGE_BUDGET;
    let report = experiment::run(&config).unwrap();
    let exact_ok =
        report.aggregate.trials == 354_062 && report.aggregate.successes == report.aggregate.trials;

    // 2d(kappa - 1) = 12 is not below q = 5
    let weak = RsCode::new(5, 3, 125).unwrap();
    let weak_scheme = build_bucket_scheme(&weak, 2).unwrap();
    let (mut unsound, mut inexact) = (0, 0);
    for set in all_sets(125, 3) {
        let claims = verify_nonadaptive_claims(&weak_scheme, &set, 3).unwrap();
        unsound += usize::from(!claims.soundness_ok);
        inexact += usize::from(!claims.unique_ok);
    }
    outcome(
        exact_ok && report.claims_ok() && unsound == 0 && inexact > 0 && !weak.meets_distance_condition(3),
        format!(
            "{} of {} sets exact, claim failures {}; weak code: {unsound} unsound, {inexact} inexact",
            report.aggregate.successes, report.aggregate.trials, report.aggregate.claim_failures
        ),
    )
}

fn stack(top: &TestMatrix, bottom: &TestMatrix) -> TestMatrix {
    let rows: Vec<Vec<u64>> = (0..top.rows())
        .map(|r| top.row(r).to_vec())
        .chain((0..bottom.rows()).map(|r| bottom.row(r).to_vec()))
        .collect();
    TestMatrix::from_rows(&rows).unwrap()
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let (mut list_mismatch, mut unique_mismatch) = (0, 0);
    let mut verified = Vec::new();
    for instance in 0..200u64 {
        let d = rng.gen_range(1..=3);
        let n = rng.gen_range(2 * d + 2..=30);
        let gamma = rng.gen_range(1..=3);
        let sample = verified_expander(n, d, SEED + instance, LARGE_BUDGET, 20).unwrap();
        let scheme = build_merged(&to_binary_matrix(&sample.graph), gamma).unwrap();
        let set = random_set(&mut rng, n, d);
        let readings = scheme.run_round_one(&set).unwrap();
        let decoding = scheme.decode_round_one(&readings).unwrap();
        list_mismatch += usize::from(
            decoding.list != maximal_consistent_list(scheme.base(), &decoding.corrected).unwrap(),
        );

        let decoded = two_round_decode(&scheme, &set, d, 3)
            .map(|o| o.decoded)
            .ok();
        let stacked = stack(scheme.s1(), scheme.s2());
        let observed = OutcomeVector::new(
            readings
                .s1
                .values()
                .iter()
                .chain(readings.s2.values())
                .copied()
                .collect(),
        );
        let matches =
            enumerate_consistent(&stacked, scheme.tau(), &observed, d, LARGE_BUDGET).unwrap();
        unique_mismatch += usize::from(matches.len() != 1 || Some(&matches[0]) != decoded.as_ref());
        verified.push(sample.verified);
    }
    let unverified = verified.iter().filter(|&&v| !v).count();
    outcome(
        list_mismatch + unique_mismatch == 0 && unverified == 0,
        format!("200 instances, list mismatches {list_mismatch}, unique-set mismatches {unique_mismatch}"),
    )
}

fn unique_neighbor_sweep() -> Outcome {
    let sample = verified_expander(40, 1, SEED, LARGE_BUDGET, 20).unwrap();
    let sweep =
        sweep_unique_neighbor_bound(&sample.graph, &sample.params, 1, LARGE_BUDGET).unwrap();
    outcome(
        sample.verified && sweep.checked > 0 && sweep.violations == 0,
        format!(
            "{} pairs checked, {} violations",
            sweep.checked, sweep.violations
        ),
    )
}

fn test_count_accounting() -> Outcome {
    let mut errors = Vec::new();
    for &(n, d, gamma) in &[
        (60, 2, 2),
        (60, 2, 1),
        (200, 3, 3),
        (1000, 5, 2),
        (500, 1, 4),
        (12, 1, 1),
    ] {
        let group = 2 * d + 2;
        let k = ((n as f64 / group as f64).log2().ceil() as usize).max(1);
        let m = (8.0 * E * E * (k * group) as f64).ceil() as usize;
        let round1 = 2 * m.div_ceil(gamma as usize);
        let counts = adaptive_test_count(n, d, gamma).unwrap();
        if counts.round1 != round1 || counts.round2_max != d + (10 * d).div_ceil(8) {
            errors.push(format!(
                "n={n} d={d} gamma={gamma}: {counts:?}, expected round1 {round1}"
            ));
        }
    }
    if adaptive_test_count(60, 2, 2).unwrap().round1 != 1420 {
        errors.push("n=60 d=2 gamma=2 is not 1420".into());
    }

    let mut config = ExperimentConfig::new(Scheme::Adaptive, 60, 2, 2);
    config.trials = 5;
    config.budget = LARGE_BUDGET;
    let report = experiment::run(&config).unwrap();
    let bound = 2.0 / 6.0 * 30f64.log2();
    if report.test_count.round1 != 1420
        || (report.bounds.round1_over_adaptive_bound - 1420.0 / bound).abs() > 1e-9
    {
        errors.push(format!(
            "report ratio {}",
            report.bounds.round1_over_adaptive_bound
        ));
    }

    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    let tau64 = threshold_for(2).unwrap();
    let checks = [
        close(adaptive_lower_bound(1024, 2, tau64), 3.0),
        close(adaptive_lower_bound(40, 2, 2), 2.0 * 20f64.log2()),
        close(adaptive_lower_bound(4, 3, 64), 0.5 * (4.0f64 / 3.0).log2()),
        close(nonadaptive_lower_bound(16, 2, 2).unwrap(), 16.0),
        close(
            nonadaptive_lower_bound(49, 7, 8).unwrap(),
            49.0 / 27.0 * 2.0,
        ),
        close(
            nonadaptive_lower_bound(100, 3, 4).unwrap(),
            8.0 * nonadaptive_lower_bound(100, 3, 16).unwrap(),
        ),
        nonadaptive_lower_bound(10, 1, 4).is_err(),
    ];
    if checks.iter().any(|ok| !ok) {
        errors.push(format!("bound arithmetic {checks:?}"));
    }
    outcome(
        errors.is_empty(),
        if errors.is_empty() {
            "6 instances and 7 bound examples exact".into()
        } else {
            errors.join("; ")
        },
    )
}

fn determinism() -> Outcome {
    let mut runs = Vec::new();
    for (scheme, n, d) in [
        (Scheme::Adaptive, 60, 2),
        (Scheme::Nonadaptive, 841, 2),
        (Scheme::Conventional, 60, 2),
    ] {
        let mut config = ExperimentConfig::new(scheme, n, d, 2);
        config.trials = 300;
        config.seed = SEED;
        config.budget = LARGE_BUDGET;
        let parallel = [
            experiment::run(&config).unwrap(),
            experiment::run(&config).unwrap(),
        ];
        config.parallel = false;
        let serial = experiment::run(&config).unwrap();
        let jsons: Vec<String> = parallel
            .iter()
            .chain([&serial])
            .map(|r| r.to_json().unwrap())
            .collect();
        runs.push(jsons.windows(2).all(|w| w[0] == w[1]));
    }

    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        experiment::gen_expander(60, 2, SEED, LARGE_BUDGET, dir.path()).unwrap();
    }
    let files_equal = ["graph.txt", "matrix.txt", "manifest.json"]
        .iter()
        .all(|f| {
            fs::read(dirs[0].path().join(f)).unwrap() == fs::read(dirs[1].path().join(f)).unwrap()
        });
    outcome(
        runs.iter().all(|&ok| ok) && files_equal,
        format!("reports identical per scheme {runs:?}, generated files identical {files_equal}"),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let sample = n60_expander();
    let criteria: Vec<Criterion> = vec![
        (
            "two-round exactness, n=60 d=2 gamma=2",
            Box::new(|| two_round_exactness(&sample)),
        ),
        (
            "Hamming and monotonicity of corrected outcomes",
            Box::new(claim_inequalities),
        ),
        (
            "candidate list size bounds",
            Box::new(|| list_bounds(&sample)),
        ),
        (
            "nonadaptive exactness, q=29 kappa=2",
            Box::new(nonadaptive_exactness),
        ),
        ("oracle equivalence, n <= 30", Box::new(oracle_equivalence)),
        (
            "unique-neighbor sweep, n=40 d=1",
            Box::new(unique_neighbor_sweep),
        ),
        (
            "test-count accounting and bounds",
            Box::new(test_count_accounting),
        ),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = check();
        failed += usize::from(!result.pass);
        println!(
            "criterion {}: {} [{name}] {} ({:.1}s)",
            i + 1,
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
