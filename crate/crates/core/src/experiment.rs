//! Experiment runner: builds a design, runs trials (random or exhaustive),
//! checks claims with the oracles, and assembles a JSON report.
//!
//! Runs are reproducible from `(config, seed)`. The expander is drawn from
//! `ChaCha8Rng::seed_from_u64(seed)` on stream 0; trial `i` draws its
//! defective set from the same seed on stream `i + 1`. Trials are
//! independent, so serial and parallel execution produce identical reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptive::{
    build_merged, list_size_bound, recover_list, two_round_decode, MergedScheme,
};
use crate::error::{Error, Result};
use crate::expander::{
    to_binary_matrix, verified_expander, verify_expansion, BipartiteGraph, ExpanderParams,
    DEFAULT_MAX_ATTEMPTS,
};
use crate::format::{self, read_file, write_file};
use crate::model::{
    adaptive_lower_bound, binary_outcome, nonadaptive_lower_bound, DefectiveSet, SqgtParams,
    TestMatrix,
};
use crate::nonadaptive::{
    build_bucket_scheme, build_rs_code, exclusion_decode, nonadaptive_test_count, BucketScheme,
    RsCode,
};
use crate::oracle::{
    check_d_disjunct, check_list_disjunct, code_min_distance, code_min_distance_exhaustive,
    for_each_subset, subsets_up_to, verify_adaptive_claims, verify_nonadaptive_claims,
    DisjunctReport, ListDisjunctReport, DEFAULT_BUDGET,
};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Adaptive,
    Nonadaptive,
    /// Binary two-stage baseline on the same expander design.
    Conventional,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scheme: Scheme,
    pub n: usize,
    pub d: usize,
    pub gamma: u32,
    pub trials: usize,
    pub exhaustive: bool,
    pub seed: u64,
    pub budget: u64,
    /// Field size override for the nonadaptive scheme.
    pub q: Option<u64>,
    /// Code dimension override; needs `q`.
    pub kappa: Option<u32>,
    /// Directory written by `gen-expander` or `gen-code`.
    pub design_dir: Option<PathBuf>,
    pub max_list_multiple: usize,
    pub check_claims: bool,
    #[serde(skip)]
    pub parallel: bool,
}

impl ExperimentConfig {
    pub fn new(scheme: Scheme, n: usize, d: usize, gamma: u32) -> Self {
        Self {
            scheme,
            n,
            d,
            gamma,
            trials: 100,
            exhaustive: false,
            seed: 1,
            budget: DEFAULT_BUDGET,
            q: None,
            kappa: None,
            design_dir: None,
            max_list_multiple: crate::adaptive::DEFAULT_MAX_LIST_MULTIPLE,
            check_claims: true,
            parallel: true,
        }
    }

    /// Checks every precondition before any work starts.
    pub fn validate(&self) -> Result<SqgtParams> {
        let params = SqgtParams::new(self.n, self.d, self.gamma)?;
        match self.scheme {
            Scheme::Adaptive | Scheme::Conventional => {
                ExpanderParams::for_instance(self.n, self.d)?;
                if self.q.is_some() || self.kappa.is_some() {
                    return Err(Error::parameter(
                        "--q/--kappa only apply to the nonadaptive scheme",
                    ));
                }
            }
            Scheme::Nonadaptive => {
                if self.kappa.is_some() && self.q.is_none() {
                    return Err(Error::parameter("--kappa needs --q"));
                }
            }
        }
        if self.max_list_multiple == 0 {
            return Err(Error::parameter("list multiple must be positive"));
        }
        if self.exhaustive {
            let required = subsets_up_to(self.n, self.d);
            if required > u128::from(self.budget) {
                return Err(Error::BudgetExceeded {
                    required,
                    budget: self.budget,
                });
            }
        }
        Ok(params)
    }
}

/// What the trials ran against.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DesignSummary {
    Expander {
        k: usize,
        m: usize,
        alpha: f64,
        beta: f64,
        /// "verified" (exhaustively checked) or "probabilistic".
        guarantee: &'static str,
        attempts: usize,
    },
    Code {
        q: u64,
        length: usize,
        kappa: u32,
        min_distance: usize,
        delta: f64,
        meets_distance_condition: bool,
        buckets_per_coord: usize,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub index: usize,
    /// 1-based subject labels.
    pub defectives: Vec<usize>,
    pub round1_tests: usize,
    pub list_size: usize,
    pub round2_tests: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hamming_raw: Option<usize>,
    pub claims: BTreeMap<&'static str, bool>,
    pub success: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Aggregate {
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub max_list_size: usize,
    pub max_round2_tests: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_hamming_raw: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hamming_bound: Option<usize>,
    /// `hamming_bound - max_hamming_raw`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_hamming_slack: Option<i64>,
    pub claim_failures: usize,
    pub claims_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundComparison {
    pub adaptive_lower_bound: f64,
    /// Absent for `d < 2`.
    pub nonadaptive_lower_bound: Option<f64>,
    pub round1_over_adaptive_bound: f64,
    pub tests_over_nonadaptive_bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TestCount {
    pub round1: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub round2_max: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub params: SqgtParams,
    pub design: DesignSummary,
    pub test_count: TestCount,
    pub bounds: BoundComparison,
    pub aggregate: Aggregate,
    pub trials: Vec<TrialRecord>,
}

impl ExperimentReport {
    pub fn claims_ok(&self) -> bool {
        self.aggregate.claims_ok
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// One row per trial. Claim flags are folded into a single column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "index,defectives,round1_tests,list_size,round2_tests,hamming_raw,claims_ok,success\n",
        );
        for t in &self.trials {
            let labels: Vec<String> = t.defectives.iter().map(usize::to_string).collect();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                t.index,
                labels.join(" "),
                t.round1_tests,
                t.list_size,
                t.round2_tests,
                t.hamming_raw.map_or(String::new(), |h| h.to_string()),
                t.claims.values().all(|&ok| ok),
                t.success
            );
        }
        out
    }
}

/// RNG for trial `index`, independent of execution order.
pub fn trial_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

fn trial_sets(config: &ExperimentConfig) -> Vec<DefectiveSet> {
    if config.exhaustive {
        let mut sets = Vec::new();
        for_each_subset(config.n, config.d, |s| {
            sets.push(DefectiveSet::from_sorted_unchecked(s.to_vec()));
            true
        });
        return sets;
    }
    (0..config.trials)
        .map(|i| {
            let mut rng = trial_rng(config.seed, i);
            let size = rng.gen_range(0..=config.d);
            let mut members = index::sample(&mut rng, config.n, size).into_vec();
            members.sort_unstable();
            DefectiveSet::from_sorted_unchecked(members)
        })
        .collect()
}

enum Design {
    Merged(MergedScheme),
    Binary(TestMatrix),
    Buckets(BucketScheme),
}

fn expander_summary(params: &ExpanderParams, verified: bool, attempts: usize) -> DesignSummary {
    DesignSummary::Expander {
        k: params.k,
        m: params.m,
        alpha: params.alpha,
        beta: params.beta,
        guarantee: if verified {
            "verified"
        } else {
            "probabilistic"
        },
        attempts,
    }
}

fn code_summary(code: &RsCode, scheme: &BucketScheme, d: usize) -> DesignSummary {
    DesignSummary::Code {
        q: code.q(),
        length: code.length(),
        kappa: code.kappa(),
        min_distance: code.min_distance(),
        delta: code.delta(),
        meets_distance_condition: code.meets_distance_condition(d),
        buckets_per_coord: scheme.buckets_per_coord(),
    }
}

fn build_design(config: &ExperimentConfig) -> Result<(Design, DesignSummary)> {
    match config.scheme {
        Scheme::Adaptive | Scheme::Conventional => {
            let (graph, params, verified, attempts) = match &config.design_dir {
                Some(dir) => {
                    let (graph, manifest) = load_expander_design(dir)?;
                    manifest.check_instance(config.n, config.d)?;
                    let params = ExpanderParams::for_instance(config.n, config.d)?;
                    (graph, params, manifest.verified, manifest.attempts)
                }
                None => {
                    let s = verified_expander(
                        config.n,
                        config.d,
                        config.seed,
                        config.budget,
                        DEFAULT_MAX_ATTEMPTS,
                    )?;
                    (s.graph, s.params, s.verified, s.attempts)
                }
            };
            let summary = expander_summary(&params, verified, attempts);
            let b = to_binary_matrix(&graph);
            let design = if config.scheme == Scheme::Adaptive {
                Design::Merged(build_merged(&b, config.gamma)?)
            } else {
                Design::Binary(b)
            };
            Ok((design, summary))
        }
        Scheme::Nonadaptive => {
            let code = match &config.design_dir {
                Some(dir) => {
                    let (code, manifest) = load_code_design(dir)?;
                    if manifest.n != config.n || manifest.gamma != config.gamma {
                        return Err(Error::instance(format!(
                            "design in {} was generated for n={}, gamma={}",
                            dir.display(),
                            manifest.n,
                            manifest.gamma
                        )));
                    }
                    code
                }
                None => code_for(config.n, config.d, config.q, config.kappa)?,
            };
            let scheme = build_bucket_scheme(&code, config.gamma)?;
            let summary = code_summary(&code, &scheme, config.d);
            Ok((Design::Buckets(scheme), summary))
        }
    }
}

fn code_for(n: usize, d: usize, q: Option<u64>, kappa: Option<u32>) -> Result<RsCode> {
    match (q, kappa) {
        (None, _) => build_rs_code(n, d),
        (Some(q), Some(kappa)) => RsCode::new(q, kappa, n),
        (Some(q), None) => {
            let mut kappa = 1u32;
            let mut capacity = q as u128;
            while capacity < n as u128 {
                capacity *= q as u128;
                kappa += 1;
            }
            RsCode::new(q, kappa, n)
        }
    }
}

fn run_trial(
    design: &Design,
    config: &ExperimentConfig,
    index: usize,
    set: &DefectiveSet,
) -> Result<TrialRecord> {
    let mut record = TrialRecord {
        index,
        defectives: set.one_based(),
        round1_tests: 0,
        list_size: 0,
        round2_tests: 0,
        hamming_raw: None,
        claims: BTreeMap::new(),
        success: false,
        failure: None,
    };
    match design {
        Design::Merged(scheme) => {
            record.round1_tests = scheme.round_one_tests();
            match two_round_decode(scheme, set, config.d, config.max_list_multiple) {
                Ok(out) => {
                    record.list_size = out.round_one.list.len();
                    record.round2_tests = out.round2_tests;
                    record.success = &out.decoded == set;
                }
                Err(Error::ListOverflow { list_size, limit }) => {
                    record.list_size = list_size;
                    record.failure = Some(format!("candidate list of {list_size} exceeds {limit}"));
                }
                Err(e) => return Err(e),
            }
            if config.check_claims {
                let claims = verify_adaptive_claims(scheme, set, config.d)?;
                record.hamming_raw = Some(claims.hamming_raw);
                record.claims.insert("hamming_ok", claims.hamming_ok);
                record.claims.insert("monotone_ok", claims.monotone_ok);
                record.claims.insert("listsize_ok", claims.listsize_ok);
                record.claims.insert("digitexact_ok", claims.digitexact_ok);
                record.claims.insert("masking_ok", claims.masking_ok);
            }
        }
        Design::Binary(b) => {
            record.round1_tests = b.rows();
            let t = binary_outcome(b, set)?;
            let list = recover_list(&t, b)?;
            record.list_size = list.len();
            record.round2_tests = list.len();
            let decoded: Vec<usize> = list.iter().filter(|&p| set.contains(p)).collect();
            record.success = decoded == set.members();
            if config.check_claims {
                record.claims.insert("superset_ok", set.is_subset_of(&list));
                record
                    .claims
                    .insert("list_bound_ok", list.len() < 2 * set.len() + 2);
            }
        }
        Design::Buckets(scheme) => {
            record.round1_tests = scheme.total_tests();
            let (s1, s2) = scheme.simulate(set)?;
            let decoded = exclusion_decode(scheme, &s1, &s2)?;
            record.list_size = decoded.len();
            record.success = &decoded == set;
            if config.check_claims {
                let claims = verify_nonadaptive_claims(scheme, set, config.d)?;
                record.claims.insert("soundness_ok", claims.soundness_ok);
                record.claims.insert("halfcoords_ok", claims.halfcoords_ok);
                record.claims.insert("markov_ok", claims.markov_ok);
                record.claims.insert("unique_ok", claims.unique_ok);
                record.claims.insert("bucket_ok", claims.bucket_ok);
            }
        }
    }
    Ok(record)
}

/// Runs an experiment end to end. Output depends only on the config.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let params = config.validate()?;
    let (design, summary) = build_design(config)?;
    let sets = trial_sets(config);

    let results: Vec<Result<TrialRecord>> = if config.parallel {
        sets.par_iter()
            .enumerate()
            .map(|(i, set)| run_trial(&design, config, i, set))
            .collect()
    } else {
        sets.iter()
            .enumerate()
            .map(|(i, set)| run_trial(&design, config, i, set))
            .collect()
    };
    let trials = results.into_iter().collect::<Result<Vec<_>>>()?;

    let (round1, round2_max) = match &design {
        Design::Merged(s) => (s.round_one_tests(), Some(list_size_bound(config.d))),
        Design::Binary(b) => (b.rows(), Some(2 * config.d + 1)),
        Design::Buckets(s) => (s.total_tests(), None),
    };
    let hamming_bound = match (&design, &summary) {
        (Design::Merged(_), DesignSummary::Expander { k, .. }) => Some(config.d * k / 4),
        _ => None,
    };

    let successes = trials.iter().filter(|t| t.success).count();
    let claim_failures = trials
        .iter()
        .filter(|t| t.claims.values().any(|&ok| !ok))
        .count();
    let max_hamming = trials.iter().filter_map(|t| t.hamming_raw).max();
    let aggregate = Aggregate {
        trials: trials.len(),
        successes,
        success_rate: if trials.is_empty() {
            1.0
        } else {
            successes as f64 / trials.len() as f64
        },
        max_list_size: trials.iter().map(|t| t.list_size).max().unwrap_or(0),
        max_round2_tests: trials.iter().map(|t| t.round2_tests).max().unwrap_or(0),
        max_hamming_raw: max_hamming,
        hamming_bound,
        min_hamming_slack: hamming_bound.map(|b| b as i64 - max_hamming.unwrap_or(0) as i64),
        claim_failures,
        claims_ok: claim_failures == 0,
    };

    let adaptive = adaptive_lower_bound(config.n, config.d, params.tau);
    let nonadaptive = nonadaptive_lower_bound(config.n, config.d, params.tau).ok();
    let bounds = BoundComparison {
        adaptive_lower_bound: adaptive,
        nonadaptive_lower_bound: nonadaptive,
        round1_over_adaptive_bound: round1 as f64 / adaptive,
        tests_over_nonadaptive_bound: nonadaptive.map(|b| round1 as f64 / b),
    };

    Ok(ExperimentReport {
        config: config.clone(),
        params,
        design: summary,
        test_count: TestCount { round1, round2_max },
        bounds,
        aggregate,
        trials,
    })
}

/// Records what a design directory contains and how it was made.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpanderManifest {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub k: usize,
    pub m: usize,
    pub alpha: f64,
    pub beta: f64,
    pub verified: bool,
    pub attempts: usize,
    pub graph_file: String,
    pub matrix_file: String,
}

impl ExpanderManifest {
    fn check_instance(&self, n: usize, d: usize) -> Result<()> {
        if self.n != n || self.d != d {
            return Err(Error::instance(format!(
                "design was generated for n={}, d={}, not n={n}, d={d}",
                self.n, self.d
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeManifest {
    pub n: usize,
    pub d: usize,
    pub gamma: u32,
    pub q: u64,
    pub kappa: u32,
    pub length: usize,
    pub code_file: String,
    pub s1_file: String,
    pub s2_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Manifest {
    Expander(ExpanderManifest),
    Code(CodeManifest),
}

fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    write_file(&dir.join(MANIFEST_FILE), &text)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let text = read_file(&dir.join(MANIFEST_FILE))?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes `graph.txt`, `matrix.txt` and the manifest for a seeded expander.
pub fn gen_expander(
    n: usize,
    d: usize,
    seed: u64,
    budget: u64,
    out_dir: &Path,
) -> Result<ExpanderManifest> {
    let sample = verified_expander(n, d, seed, budget, DEFAULT_MAX_ATTEMPTS)?;
    let manifest = ExpanderManifest {
        n,
        d,
        seed,
        k: sample.params.k,
        m: sample.params.m,
        alpha: sample.params.alpha,
        beta: sample.params.beta,
        verified: sample.verified,
        attempts: sample.attempts,
        graph_file: "graph.txt".into(),
        matrix_file: "matrix.txt".into(),
    };
    write_file(
        &out_dir.join(&manifest.graph_file),
        &format::write_graph(&sample.graph),
    )?;
    write_file(
        &out_dir.join(&manifest.matrix_file),
        &format::write_matrix(&to_binary_matrix(&sample.graph), 2),
    )?;
    write_manifest(out_dir, &Manifest::Expander(manifest.clone()))?;
    Ok(manifest)
}

/// Loads a generated expander and checks it against its manifest.
pub fn load_expander_design(dir: &Path) -> Result<(BipartiteGraph, ExpanderManifest)> {
    let Manifest::Expander(manifest) = read_manifest(dir)? else {
        return Err(Error::instance(format!(
            "{} does not hold an expander design",
            dir.display()
        )));
    };
    let graph = format::parse_graph(&read_file(&dir.join(&manifest.graph_file))?)?;
    if (graph.n_left(), graph.m_right(), graph.k()) != (manifest.n, manifest.m, manifest.k) {
        return Err(Error::instance(format!(
            "graph is {}x{} with degree {}, manifest says {}x{} with degree {}",
            graph.n_left(),
            graph.m_right(),
            graph.k(),
            manifest.n,
            manifest.m,
            manifest.k
        )));
    }
    let (matrix, _) = format::parse_matrix(&read_file(&dir.join(&manifest.matrix_file))?)?;
    if (matrix.rows(), matrix.cols()) != (manifest.m, manifest.n) {
        return Err(Error::instance(format!(
            "matrix is {}x{}, manifest says {}x{}",
            matrix.rows(),
            matrix.cols(),
            manifest.m,
            manifest.n
        )));
    }
    if matrix != to_binary_matrix(&graph) {
        return Err(Error::instance("matrix file does not match the graph file"));
    }
    Ok((graph, manifest))
}

/// Writes `code.txt`, the S1/S2 matrices and the manifest.
pub fn gen_code(
    n: usize,
    d: usize,
    gamma: u32,
    q: Option<u64>,
    kappa: Option<u32>,
    out_dir: &Path,
) -> Result<CodeManifest> {
    SqgtParams::new(n, d, gamma)?;
    let code = code_for(n, d, q, kappa)?;
    let scheme = build_bucket_scheme(&code, gamma)?;
    let manifest = CodeManifest {
        n,
        d,
        gamma,
        q: code.q(),
        kappa: code.kappa(),
        length: code.length(),
        code_file: "code.txt".into(),
        s1_file: "s1.txt".into(),
        s2_file: "s2.txt".into(),
    };
    write_file(
        &out_dir.join(&manifest.code_file),
        &format::write_code(&code),
    )?;
    write_file(
        &out_dir.join(&manifest.s1_file),
        &format::write_matrix(scheme.s1(), scheme.tau()),
    )?;
    write_file(
        &out_dir.join(&manifest.s2_file),
        &format::write_matrix(scheme.s2(), scheme.tau()),
    )?;
    write_manifest(out_dir, &Manifest::Code(manifest.clone()))?;
    Ok(manifest)
}

pub fn load_code_design(dir: &Path) -> Result<(RsCode, CodeManifest)> {
    let Manifest::Code(manifest) = read_manifest(dir)? else {
        return Err(Error::instance(format!(
            "{} does not hold a code design",
            dir.display()
        )));
    };
    let code = format::parse_code(&read_file(&dir.join(&manifest.code_file))?)?;
    if (code.q(), code.kappa(), code.subjects(), code.length())
        != (manifest.q, manifest.kappa, manifest.n, manifest.length)
    {
        return Err(Error::instance("code file does not match the manifest"));
    }
    let scheme = build_bucket_scheme(&code, manifest.gamma)?;
    for file in [&manifest.s1_file, &manifest.s2_file] {
        let (matrix, _) = format::parse_matrix(&read_file(&dir.join(file))?)?;
        if (matrix.rows(), matrix.cols()) != (scheme.s1().rows(), manifest.n) {
            return Err(Error::instance(format!(
                "{file} is {}x{}, manifest implies {}x{}",
                matrix.rows(),
                matrix.cols(),
                scheme.s1().rows(),
                manifest.n
            )));
        }
    }
    Ok((code, manifest))
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub n: usize,
    pub d: usize,
    pub gamma: u32,
    pub tau: u64,
    pub adaptive_lower_bound: f64,
    pub nonadaptive_lower_bound: Option<f64>,
    pub expander_k: usize,
    pub expander_m: usize,
    pub adaptive_round1_tests: usize,
    pub adaptive_round2_max: usize,
    pub round1_over_adaptive_bound: f64,
    pub code_q: u64,
    pub code_kappa: u32,
    pub nonadaptive_tests: usize,
    pub tests_over_nonadaptive_bound: Option<f64>,
}

/// Lower bounds next to the concrete test counts of both schemes.
pub fn bounds_report(n: usize, d: usize, gamma: u32) -> Result<BoundsReport> {
    let params = SqgtParams::new(n, d, gamma)?;
    let expander = ExpanderParams::for_instance(n, d)?;
    let counts = crate::adaptive::adaptive_test_count(n, d, gamma)?;
    let code = build_rs_code(n, d)?;
    let tests = nonadaptive_test_count(&code, gamma);
    let adaptive = adaptive_lower_bound(n, d, params.tau);
    let nonadaptive = nonadaptive_lower_bound(n, d, params.tau).ok();
    Ok(BoundsReport {
        n,
        d,
        gamma,
        tau: params.tau,
        adaptive_lower_bound: adaptive,
        nonadaptive_lower_bound: nonadaptive,
        expander_k: expander.k,
        expander_m: expander.m,
        adaptive_round1_tests: counts.round1,
        adaptive_round2_max: counts.round2_max,
        round1_over_adaptive_bound: counts.round1 as f64 / adaptive,
        code_q: code.q(),
        code_kappa: code.kappa(),
        nonadaptive_tests: tests,
        tests_over_nonadaptive_bound: nonadaptive.map(|b| tests as f64 / b),
    })
}

/// Outcome of one file check: a verdict, or a refusal when the exhaustive
/// work exceeds the budget.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Verdict<T> {
    Checked { result: T },
    Refused { required: String, budget: u64 },
}

impl<T> Verdict<T> {
    fn from_result(result: Result<T>) -> Result<Self> {
        match result {
            Ok(result) => Ok(Verdict::Checked { result }),
            Err(Error::BudgetExceeded { required, budget }) => Ok(Verdict::Refused {
                required: required.to_string(),
                budget,
            }),
            Err(e) => Err(e),
        }
    }

    pub fn is_refused(&self) -> bool {
        matches!(self, Verdict::Refused { .. })
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyRequest {
    pub matrix: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub code: Option<PathBuf>,
    pub d: usize,
    pub ell: usize,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub budget: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixVerdict {
    pub d_disjunct: Verdict<DisjunctReport>,
    pub list_disjunct: Verdict<ListDisjunctReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphVerdict {
    pub alpha: f64,
    pub beta: f64,
    pub expansion: Verdict<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CodeVerdict {
    pub mds_distance: usize,
    pub exhaustive_distance: Verdict<usize>,
    pub agrees: Option<bool>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerifyReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub code: Option<CodeVerdict>,
}

impl VerifyReport {
    pub fn any_refused(&self) -> bool {
        self.matrix
            .as_ref()
            .is_some_and(|m| m.d_disjunct.is_refused() || m.list_disjunct.is_refused())
            || self
                .graph
                .as_ref()
                .is_some_and(|g| g.expansion.is_refused())
            || self
                .code
                .as_ref()
                .is_some_and(|c| c.exhaustive_distance.is_refused())
    }

    pub fn all_hold(&self) -> bool {
        let matrix_ok = self.matrix.as_ref().is_none_or(|m| {
            matches!(&m.d_disjunct, Verdict::Checked { result } if result.holds)
                && matches!(&m.list_disjunct, Verdict::Checked { result } if result.holds)
        });
        let graph_ok = self
            .graph
            .as_ref()
            .is_none_or(|g| matches!(g.expansion, Verdict::Checked { result: true }));
        let code_ok = self.code.as_ref().is_none_or(|c| c.agrees == Some(true));
        matrix_ok && graph_ok && code_ok
    }
}

/// Runs the oracles on design files.
pub fn verify_files(req: &VerifyRequest) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    if let Some(path) = &req.matrix {
        let (b, _) = format::parse_matrix(&read_file(path)?)?;
        report.matrix = Some(MatrixVerdict {
            d_disjunct: Verdict::from_result(check_d_disjunct(&b, req.d, req.budget))?,
            list_disjunct: Verdict::from_result(check_list_disjunct(
                &b, req.d, req.ell, req.budget,
            ))?,
        });
    }
    if let Some(path) = &req.graph {
        let g = format::parse_graph(&read_file(path)?)?;
        let alpha = req
            .alpha
            .ok_or_else(|| Error::parameter("graph verification needs --alpha"))?;
        let max_set = crate::expander::max_set_size(alpha, g.n_left()).max(1);
        let beta = req
            .beta
            .unwrap_or_else(|| ExpanderParams::strict_beta(g.k(), max_set));
        report.graph = Some(GraphVerdict {
            alpha,
            beta,
            expansion: Verdict::from_result(verify_expansion(&g, alpha, beta, req.budget))?,
        });
    }
    if let Some(path) = &req.code {
        let code = format::parse_code(&read_file(path)?)?;
        let mds = code_min_distance(&code);
        let exhaustive = Verdict::from_result(code_min_distance_exhaustive(&code, req.budget))?;
        let agrees = match &exhaustive {
            Verdict::Checked { result } => Some(*result == mds),
            Verdict::Refused { .. } => None,
        };
        report.code = Some(CodeVerdict {
            mds_distance: mds,
            exhaustive_distance: exhaustive,
            agrees,
        });
    }
    Ok(report)
}
