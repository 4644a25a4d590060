//! Brute-force ground truth. Nothing here calls into the decoders it
//! certifies: outcomes, lists and digit counts are recomputed directly from
//! the matrices.

use serde::Serialize;

use crate::adaptive::{list_size_bound, MergedScheme, RoundOneDecoding, RoundOneOutcome};
use crate::error::{Error, Result};
use crate::expander::{check_unique_neighbor_bound, BipartiteGraph, ExpanderParams};
use crate::model::{is_consistent, simulate_outcomes, DefectiveSet, OutcomeVector, TestMatrix};
use crate::nonadaptive::{exclusion_decode, BucketScheme, RsCode};

/// Default cap on enumerated subsets (or pairs) per oracle call.
pub const DEFAULT_BUDGET: u64 = 1 << 24;

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Number of subsets of `[n]` with at most `d` members.
pub fn subsets_up_to(n: usize, d: usize) -> u128 {
    (0..=d.min(n)).map(|s| binomial(n, s)).sum()
}

fn check_budget(required: u128, budget: u64) -> Result<()> {
    if required > u128::from(budget) {
        Err(Error::BudgetExceeded { required, budget })
    } else {
        Ok(())
    }
}

/// Calls `visit` on every subset of `[n]` with at most `max_size` members:
/// the empty set first, then by size, each size in lexicographic order.
/// Stops early when `visit` returns `false`.
pub fn for_each_subset(n: usize, max_size: usize, mut visit: impl FnMut(&[usize]) -> bool) {
    if !visit(&[]) {
        return;
    }
    for size in 1..=max_size.min(n) {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            if !visit(&combo) {
                return;
            }
            // advance to the next combination
            let mut i = size;
            while i > 0 && combo[i - 1] == n - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            combo[i - 1] += 1;
            for j in i..size {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
}

/// Every set of at most `d` subjects whose saturated outcome equals
/// `observed`, in lexicographic order.
pub fn enumerate_consistent(
    matrix: &TestMatrix,
    tau: u64,
    observed: &OutcomeVector,
    d: usize,
    budget: u64,
) -> Result<Vec<DefectiveSet>> {
    if observed.len() != matrix.rows() {
        return Err(Error::instance("outcome length does not match the matrix"));
    }
    check_budget(subsets_up_to(matrix.cols(), d), budget)?;
    // A subject in a test that read zero belongs to no matching set.
    let live: Vec<usize> = (0..matrix.cols())
        .filter(|&p| {
            matrix
                .column(p)
                .zip(observed.values())
                .all(|(a, &y)| a == 0 || y > 0)
        })
        .collect();
    let mut found = Vec::new();
    let mut failure = None;
    for_each_subset(live.len(), d, |combo| {
        let candidate =
            DefectiveSet::from_sorted_unchecked(combo.iter().map(|&i| live[i]).collect());
        match simulate_outcomes(matrix, &candidate, tau) {
            Ok(out) if &out == observed => found.push(candidate),
            Ok(_) => {}
            Err(e) => {
                failure = Some(e);
                return false;
            }
        }
        true
    });
    if let Some(e) = failure {
        return Err(e);
    }
    found.sort();
    Ok(found)
}

/// Positive tests of the OR outcome of `set`, as a dense flag vector.
fn or_support(b: &TestMatrix, set: &[usize]) -> Vec<bool> {
    (0..b.rows())
        .map(|r| set.iter().any(|&p| b.get(r, p) != 0))
        .collect()
}

fn covered(b: &TestMatrix, p: usize, positive: &[bool]) -> bool {
    (0..b.rows()).all(|r| b.get(r, p) == 0 || positive[r])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DisjunctReport {
    pub d: usize,
    pub holds: bool,
    /// A defective set and an outside column hidden in its outcome.
    pub witness: Option<(DefectiveSet, usize)>,
}

/// Exhaustive `d`-disjunctness check.
pub fn check_d_disjunct(b: &TestMatrix, d: usize, budget: u64) -> Result<DisjunctReport> {
    b.require_binary()?;
    check_budget(subsets_up_to(b.cols(), d), budget)?;
    let mut witness = None;
    for_each_subset(b.cols(), d, |combo| {
        let positive = or_support(b, combo);
        if let Some(p) = (0..b.cols()).find(|p| !combo.contains(p) && covered(b, *p, &positive)) {
            witness = Some((DefectiveSet::from_sorted_unchecked(combo.to_vec()), p));
            return false;
        }
        true
    });
    Ok(DisjunctReport {
        d,
        holds: witness.is_none(),
        witness,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ListDisjunctReport {
    pub d: usize,
    pub ell: usize,
    pub holds: bool,
    /// Largest maximal consistent list seen over all defective sets.
    pub max_list: usize,
    /// `(I, L)` with `|L| > d + ell`; present exactly when `holds` is false.
    pub witness: Option<(DefectiveSet, DefectiveSet)>,
}

/// Exhaustive `(d, ell)`-list-disjunctness check.
pub fn check_list_disjunct(
    b: &TestMatrix,
    d: usize,
    ell: usize,
    budget: u64,
) -> Result<ListDisjunctReport> {
    b.require_binary()?;
    check_budget(subsets_up_to(b.cols(), d), budget)?;
    let mut max_list = 0;
    let mut witness = None;
    for_each_subset(b.cols(), d, |combo| {
        let positive = or_support(b, combo);
        let list: Vec<usize> = (0..b.cols())
            .filter(|&p| covered(b, p, &positive))
            .collect();
        max_list = max_list.max(list.len());
        if list.len() > d + ell && witness.is_none() {
            witness = Some((
                DefectiveSet::from_sorted_unchecked(combo.to_vec()),
                DefectiveSet::from_sorted_unchecked(list),
            ));
        }
        true
    });
    Ok(ListDisjunctReport {
        d,
        ell,
        holds: witness.is_none(),
        max_list,
        witness,
    })
}

/// Largest set consistent with an indicator vector, built from singleton
/// consistency checks on the OR channel.
pub fn maximal_consistent_list(b: &TestMatrix, observed: &OutcomeVector) -> Result<DefectiveSet> {
    let mut members = Vec::new();
    for p in 0..b.cols() {
        let single = DefectiveSet::from_sorted_unchecked(vec![p]);
        if is_consistent(&single, b, observed)? {
            members.push(p);
        }
    }
    Ok(DefectiveSet::from_sorted_unchecked(members))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdaptiveClaimReport {
    /// `d_H(raw_indicator, t) <= dk/4`.
    pub hamming_ok: bool,
    /// `corrected >= t` and `d_H(corrected, t) <= dk/4`.
    pub monotone_ok: bool,
    /// `|L| <= d + ceil(10d/8)` and `I ⊆ L`.
    pub listsize_ok: bool,
    /// Groups with every sub-test count below `4γ` expand to the true counts.
    pub digitexact_ok: bool,
    /// Groups with some sub-test count of at least `4γ` are masked by S2.
    pub masking_ok: bool,
    pub hamming_raw: usize,
    pub hamming_corrected: usize,
    pub list_size: usize,
    /// Largest Hamming distance allowed, `floor(dk/4)`.
    pub hamming_bound: usize,
}

impl AdaptiveClaimReport {
    pub fn all_ok(&self) -> bool {
        self.hamming_ok
            && self.monotone_ok
            && self.listsize_ok
            && self.digitexact_ok
            && self.masking_ok
    }
}

/// Runs the scheme's first round on `defectives` and checks the decoder's
/// intermediate vectors against values recomputed from the binary design.
pub fn verify_adaptive_claims(
    scheme: &MergedScheme,
    defectives: &DefectiveSet,
    d: usize,
) -> Result<AdaptiveClaimReport> {
    let readings = scheme.run_round_one(defectives)?;
    let decoding = scheme.decode_round_one(&readings)?;
    check_adaptive_trace(scheme, defectives, d, &readings, &decoding)
}

/// Checks a given first-round trace; exposed so tests can inject faults.
pub fn check_adaptive_trace(
    scheme: &MergedScheme,
    defectives: &DefectiveSet,
    d: usize,
    readings: &RoundOneOutcome,
    decoding: &RoundOneDecoding,
) -> Result<AdaptiveClaimReport> {
    let b = scheme.base();
    let g = scheme.gamma() as usize;
    let radix = 4 * u64::from(scheme.gamma());
    let m = b.rows();
    if decoding.raw_indicator.len() != m || decoding.corrected.len() != m {
        return Err(Error::instance("trace vectors do not match the design"));
    }

    // per-test defective counts and the clean OR outcome
    let counts: Vec<u64> = (0..m)
        .map(|r| defectives.iter().map(|p| b.get(r, p)).sum())
        .collect();
    let t: Vec<u64> = counts.iter().map(|&c| u64::from(c > 0)).collect();
    let k = (0..b.cols())
        .map(|p| b.column(p).sum::<u64>())
        .max()
        .unwrap_or(0) as usize;
    let dk = d * k;

    let diff = |v: &OutcomeVector| v.values().iter().zip(&t).filter(|(a, b)| a != b).count();
    let hamming_raw = diff(&decoding.raw_indicator);
    let hamming_corrected = diff(&decoding.corrected);
    let hamming_ok = 4 * hamming_raw <= dk;
    let dominates = decoding
        .corrected
        .values()
        .iter()
        .zip(&t)
        .all(|(a, b)| a >= b);
    let monotone_ok = dominates && 4 * hamming_corrected <= dk;

    let list_size = decoding.list.len();
    let listsize_ok = list_size <= list_size_bound(d) && defectives.is_subset_of(&decoding.list);

    let mut digitexact_ok = true;
    let mut masking_ok = true;
    for group in 0..scheme.group_count() {
        let sub = &counts[group * g..(group + 1) * g];
        let mut reading = readings.s1.values()[group];
        if sub.iter().all(|&c| c < radix) {
            for &c in sub {
                digitexact_ok &= reading % radix == c;
                reading /= radix;
            }
        } else {
            let threshold = radix.min(scheme.tau() - 1);
            masking_ok &= readings.s2.values()[group] >= threshold;
            if scheme.gamma() >= 2 {
                let forced =
                    (group * g..(group + 1) * g).all(|j| decoding.corrected.values()[j] == 1);
                masking_ok &= forced;
            }
        }
    }

    Ok(AdaptiveClaimReport {
        hamming_ok,
        monotone_ok,
        listsize_ok,
        digitexact_ok,
        masking_ok,
        hamming_raw,
        hamming_corrected,
        list_size,
        hamming_bound: dk / 4,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NonadaptiveClaimReport {
    /// Decoder output contains every defective.
    pub soundness_ok: bool,
    /// Every non-defective agrees with the defectives on at most
    /// `d(kappa-1)` coordinates, fewer than half of them.
    pub halfcoords_ok: bool,
    /// Every non-defective has at least half its coordinates matched by
    /// fewer than `4γ` shifted defectives.
    pub markov_ok: bool,
    /// Decoder output equals the defective set.
    pub unique_ok: bool,
    /// Bucket occupancy never exceeds the shifted-match count.
    pub bucket_ok: bool,
    pub decoded: DefectiveSet,
}

impl NonadaptiveClaimReport {
    pub fn all_ok(&self) -> bool {
        self.soundness_ok
            && self.halfcoords_ok
            && self.markov_ok
            && self.unique_ok
            && self.bucket_ok
    }
}

/// Decodes `defectives` and checks the exclusion argument for every
/// non-defective by direct enumeration over coordinates.
///
/// Shifted matches are counted over pairs `(y, i)`, so a vector reachable
/// from two defectives counts twice.
pub fn verify_nonadaptive_claims(
    scheme: &BucketScheme,
    defectives: &DefectiveSet,
    d: usize,
) -> Result<NonadaptiveClaimReport> {
    let (s1, s2) = scheme.simulate(defectives)?;
    let decoded = exclusion_decode(scheme, &s1, &s2)?;
    Ok(claims_for(scheme, defectives, d, decoded))
}

fn claims_for(
    scheme: &BucketScheme,
    defectives: &DefectiveSet,
    d: usize,
    decoded: DefectiveSet,
) -> NonadaptiveClaimReport {
    let code = scheme.code();
    let gamma = scheme.gamma();
    let codewords = scheme.codewords();
    let q = code.q() as usize;
    let length = code.length();
    let g = gamma as usize;
    let spread = g as i64 - 1;
    let agree_limit = d * (code.kappa() as usize - 1);

    // Per coordinate: which values some defective holds, how many (y, i)
    // shift pairs land on each value, and how many defectives sit in each bucket.
    let mut held = vec![false; length * q];
    let mut shifted = vec![0usize; length * q];
    let mut occupancy = vec![0usize; length * q.div_ceil(g)];
    for y in defectives.iter() {
        for (c, &v) in codewords[y].iter().enumerate() {
            held[c * q + v as usize] = true;
            for i in -spread..=spread {
                let w = (v as i64 + i).rem_euclid(q as i64) as usize;
                shifted[c * q + w] += 1;
            }
            occupancy[c * q.div_ceil(g) + v as usize / g] += 1;
        }
    }

    // Only subjects sharing a value with some touched cell can break a claim.
    let buckets = q.div_ceil(g);
    let mut agreements = vec![0usize; code.subjects()];
    let mut loud = vec![0usize; code.subjects()];
    let mut touched = Vec::new();
    let mut bucket_ok = true;
    for c in 0..length {
        for v in 0..q {
            let cell = c * q + v;
            let occupied = occupancy[c * buckets + v / g];
            if occupied == 0 && !held[cell] && shifted[cell] < 4 * g {
                continue;
            }
            if !held[cell] && shifted[cell] < 4 * g && occupied <= shifted[cell] {
                continue;
            }
            for &x in scheme.holders(c, v) {
                let x = x as usize;
                if defectives.contains(x) {
                    continue;
                }
                if agreements[x] == 0 && loud[x] == 0 {
                    touched.push(x);
                }
                agreements[x] += usize::from(held[cell]);
                loud[x] += usize::from(shifted[cell] >= 4 * g);
                bucket_ok &= occupied <= shifted[cell];
            }
        }
    }
    let halfcoords_ok = touched
        .iter()
        .all(|&x| agreements[x] <= agree_limit && 2 * agreements[x] < length);
    let markov_ok = touched.iter().all(|&x| 2 * (length - loud[x]) >= length);

    NonadaptiveClaimReport {
        soundness_ok: defectives.is_subset_of(&decoded),
        halfcoords_ok,
        markov_ok,
        unique_ok: &decoded == defectives,
        bucket_ok,
        decoded,
    }
}

/// Minimum distance of an MDS code, `length - kappa + 1`.
pub fn code_min_distance(code: &RsCode) -> usize {
    code.min_distance()
}

/// Minimum Hamming distance over all pairs of the `q^kappa` codewords.
pub fn code_min_distance_exhaustive(code: &RsCode, budget: u64) -> Result<usize> {
    let size = (code.q() as u128).pow(code.kappa());
    check_budget(size * size.saturating_sub(1) / 2, budget)?;
    let words: Vec<Vec<u64>> = (0..size).map(|i| code.encode_index(i)).collect();
    let mut best = code.length();
    for (i, a) in words.iter().enumerate() {
        for b in &words[i + 1..] {
            best = best.min(a.iter().zip(b).filter(|(x, y)| x != y).count());
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UniqueNeighborSweep {
    pub checked: u64,
    pub violations: u64,
    pub witness: Option<(Vec<usize>, Vec<usize>)>,
}

/// Checks the unique-neighbor inequality on every admissible `(I, P)` with
/// `|I| <= d`.
pub fn sweep_unique_neighbor_bound(
    g: &BipartiteGraph,
    params: &ExpanderParams,
    d: usize,
    budget: u64,
) -> Result<UniqueNeighborSweep> {
    let n = g.n_left();
    let max_set = params.max_set;
    let work: u128 = (0..=d)
        .map(|i| binomial(n, i) * subsets_up_to(n - i, max_set.saturating_sub(i)))
        .sum();
    check_budget(work, budget)?;

    let mut report = UniqueNeighborSweep {
        checked: 0,
        violations: 0,
        witness: None,
    };
    let mut failure = None;
    for_each_subset(n, d, |defectives| {
        let rest: Vec<usize> = (0..n).filter(|p| !defectives.contains(p)).collect();
        let max_p = max_set.saturating_sub(defectives.len());
        for_each_subset(rest.len(), max_p, |picked| {
            if picked.len() < defectives.len() + 2 {
                return true;
            }
            let others: Vec<usize> = picked.iter().map(|&i| rest[i]).collect();
            match check_unique_neighbor_bound(g, defectives, &others, max_set) {
                Ok(true) => {}
                Ok(false) => {
                    report.violations += 1;
                    report.witness.get_or_insert((defectives.to_vec(), others));
                }
                Err(e) => {
                    failure = Some(e);
                    return false;
                }
            }
            report.checked += 1;
            true
        });
        failure.is_none()
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(report),
    }
}
