//! Two-round adaptive scheme: merged SQGT matrices built from a binary
//! list-disjunct design, digit decoding with group masking, list recovery
//! and individual testing of the surviving candidates.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expander::ExpanderParams;
use crate::model::{simulate_outcomes, threshold_for, DefectiveSet, OutcomeVector, TestMatrix};

/// Default cap on the candidate list, as a multiple of `d`.
pub const DEFAULT_MAX_LIST_MULTIPLE: usize = 3;

/// Base-`4γ` digits of a reading, least significant first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitVector(Vec<u64>);

impl DigitVector {
    pub fn digits(&self) -> &[u64] {
        &self.0
    }

    pub fn value(&self, gamma: u32) -> u64 {
        let radix = 4 * u64::from(gamma);
        self.0.iter().rev().fold(0, |acc, &d| acc * radix + d)
    }
}

/// Little-endian base-`4γ` expansion of `a`, which must lie in `[0, (4γ)^γ - 1]`.
pub fn radix_expand(a: u64, gamma: u32) -> Result<DigitVector> {
    let tau = threshold_for(gamma)?;
    if a >= tau {
        return Err(Error::parameter(format!(
            "reading {a} is outside [0, {}]",
            tau - 1
        )));
    }
    let radix = 4 * u64::from(gamma);
    let mut rest = a;
    let digits = (0..gamma)
        .map(|_| {
            let digit = rest % radix;
            rest /= radix;
            digit
        })
        .collect();
    Ok(DigitVector(digits))
}

/// First-round design derived from a binary matrix `B`.
///
/// Row `i` of `s1` is `sum_j (4γ)^j * B[iγ + j]` and row `i` of `s2` is the
/// plain sum of the same `γ` rows. When `γ` does not divide the number of
/// rows, `B` is padded with zero rows.
#[derive(Debug, Clone)]
pub struct MergedScheme {
    base: TestMatrix,
    original_rows: usize,
    gamma: u32,
    tau: u64,
    s1: TestMatrix,
    s2: TestMatrix,
    supports: Vec<Vec<usize>>,
}

pub fn build_merged(base: &TestMatrix, gamma: u32) -> Result<MergedScheme> {
    let tau = threshold_for(gamma)?;
    base.require_binary()?;
    let g = gamma as usize;
    let groups = base.rows().div_ceil(g);
    let (padded_rows, n) = (groups * g, base.cols());

    let mut entries = base.entries().to_vec();
    entries.resize(padded_rows * n, 0);
    let padded = TestMatrix::new(padded_rows, n, entries)?;

    let radix = 4 * u64::from(gamma);
    let mut s1 = TestMatrix::zeros(groups, n)?;
    let mut s2 = TestMatrix::zeros(groups, n)?;
    for i in 0..groups {
        let mut weight = 1u64;
        for j in 0..g {
            let row = padded.row(i * g + j);
            for (col, &b) in row.iter().enumerate() {
                if b != 0 {
                    s1.set(i, col, s1.get(i, col) + weight);
                    s2.set(i, col, s2.get(i, col) + 1);
                }
            }
            weight *= radix;
        }
    }
    let supports = (0..n).map(|j| padded.column_support(j)).collect();
    Ok(MergedScheme {
        base: padded,
        original_rows: base.rows(),
        gamma,
        tau,
        s1,
        s2,
        supports,
    })
}

impl MergedScheme {
    pub fn gamma(&self) -> u32 {
        self.gamma
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    /// Binary design after zero-row padding.
    pub fn base(&self) -> &TestMatrix {
        &self.base
    }

    pub fn original_rows(&self) -> usize {
        self.original_rows
    }

    pub fn s1(&self) -> &TestMatrix {
        &self.s1
    }

    pub fn s2(&self) -> &TestMatrix {
        &self.s2
    }

    pub fn group_count(&self) -> usize {
        self.s1.rows()
    }

    pub fn subjects(&self) -> usize {
        self.base.cols()
    }

    /// Number of first-round tests, `2 * ceil(m / γ)`.
    pub fn round_one_tests(&self) -> usize {
        2 * self.group_count()
    }

    /// The two first-round outcome vectors for a defective set.
    pub fn run_round_one(&self, defectives: &DefectiveSet) -> Result<RoundOneOutcome> {
        Ok(RoundOneOutcome {
            s1: simulate_outcomes(&self.s1, defectives, self.tau)?,
            s2: simulate_outcomes(&self.s2, defectives, self.tau)?,
        })
    }

    /// Digit decoding, masking and list recovery for first-round readings.
    pub fn decode_round_one(&self, outcome: &RoundOneOutcome) -> Result<RoundOneDecoding> {
        if outcome.s1.len() != self.group_count() || outcome.s2.len() != self.group_count() {
            return Err(Error::instance(format!(
                "expected {} readings per part, got {} and {}",
                self.group_count(),
                outcome.s1.len(),
                outcome.s2.len()
            )));
        }
        let raw_indicator = digits_to_indicator(&outcome.s1, self.gamma)?;
        let corrected = correct_with_s2(&raw_indicator, &outcome.s2, self.gamma)?;
        let list = self.list_from_supports(&corrected);
        Ok(RoundOneDecoding {
            raw_indicator,
            corrected,
            list,
        })
    }

    fn list_from_supports(&self, corrected: &OutcomeVector) -> DefectiveSet {
        let positive = corrected.values();
        let members = self
            .supports
            .iter()
            .enumerate()
            .filter(|(_, support)| support.iter().all(|&r| positive[r] != 0))
            .map(|(p, _)| p)
            .collect();
        DefectiveSet::from_sorted_unchecked(members)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundOneOutcome {
    pub s1: OutcomeVector,
    pub s2: OutcomeVector,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundOneDecoding {
    /// Indicator of nonzero digits of the `s1` readings.
    pub raw_indicator: OutcomeVector,
    /// `raw_indicator` with every group whose `s2` reading reaches `4γ` forced to 1.
    pub corrected: OutcomeVector,
    /// Every subject whose column support lies inside `corrected`.
    pub list: DefectiveSet,
}

/// Expands each `s1` reading into `γ` digits and marks the nonzero ones.
pub fn digits_to_indicator(s1: &OutcomeVector, gamma: u32) -> Result<OutcomeVector> {
    let mut bits = Vec::with_capacity(s1.len() * gamma as usize);
    for &reading in s1.values() {
        let digits = radix_expand(reading, gamma)?;
        bits.extend(digits.digits().iter().map(|&d| u64::from(d > 0)));
    }
    Ok(OutcomeVector::new(bits))
}

/// Forces position `j` to 1 when the `s2` reading of its group `j / γ`
/// is at least `4γ`; other positions keep their `raw_indicator` value.
pub fn correct_with_s2(
    raw_indicator: &OutcomeVector,
    s2: &OutcomeVector,
    gamma: u32,
) -> Result<OutcomeVector> {
    let g = gamma as usize;
    if g == 0 {
        return Err(Error::parameter("gamma must be at least 1"));
    }
    if raw_indicator.len() != s2.len() * g {
        return Err(Error::instance(format!(
            "indicator length {} does not match {} groups of {g}",
            raw_indicator.len(),
            s2.len()
        )));
    }
    let threshold = 4 * u64::from(gamma);
    let values = raw_indicator
        .values()
        .iter()
        .enumerate()
        .map(|(j, &bit)| {
            if s2.values()[j / g] >= threshold {
                1
            } else {
                bit
            }
        })
        .collect();
    Ok(OutcomeVector::new(values))
}

/// Subjects whose every test lies in the support of `corrected`. This is the
/// largest list consistent with `corrected` and always contains the defectives
/// whenever `corrected` dominates their true OR outcome.
pub fn recover_list(corrected: &OutcomeVector, base: &TestMatrix) -> Result<DefectiveSet> {
    base.require_binary()?;
    if corrected.len() != base.rows() {
        return Err(Error::instance(format!(
            "indicator length {} does not match {} tests",
            corrected.len(),
            base.rows()
        )));
    }
    let positive = corrected.values();
    let members = (0..base.cols())
        .filter(|&p| (0..base.rows()).all(|r| base.get(r, p) == 0 || positive[r] != 0))
        .collect();
    Ok(DefectiveSet::from_sorted_unchecked(members))
}

/// Outcome of both rounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoRoundOutcome {
    pub decoded: DefectiveSet,
    pub round_one: RoundOneDecoding,
    pub round1_tests: usize,
    pub round2_tests: usize,
}

/// Runs the first round against the hidden set, then tests every listed
/// candidate individually. A one-subject pool reads 1 exactly when the
/// subject is defective, for any `τ >= 2`.
///
/// A candidate list longer than `max_list_multiple * d` is reported as
/// [`Error::ListOverflow`].
pub fn two_round_decode(
    scheme: &MergedScheme,
    hidden: &DefectiveSet,
    d: usize,
    max_list_multiple: usize,
) -> Result<TwoRoundOutcome> {
    if hidden.len() > d {
        return Err(Error::instance(format!(
            "{} defectives exceed the design limit d={d}",
            hidden.len()
        )));
    }
    let readings = scheme.run_round_one(hidden)?;
    let round_one = scheme.decode_round_one(&readings)?;
    let limit = max_list_multiple.saturating_mul(d);
    if round_one.list.len() > limit {
        return Err(Error::ListOverflow {
            list_size: round_one.list.len(),
            limit,
        });
    }
    let decoded = round_one
        .list
        .iter()
        .filter(|&p| hidden.contains(p))
        .collect();
    Ok(TwoRoundOutcome {
        decoded: DefectiveSet::from_sorted_unchecked(decoded),
        round1_tests: scheme.round_one_tests(),
        round2_tests: round_one.list.len(),
        round_one,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AdaptiveTestCount {
    pub round1: usize,
    pub round2_max: usize,
}

/// Second-round budget from the list-size argument: `d + ceil(10d/8)`.
pub fn list_size_bound(d: usize) -> usize {
    d + (10 * d).div_ceil(8)
}

/// Test counts with the concrete expander size `m = ceil(8 e^2 k (2d+2))`.
pub fn adaptive_test_count(n: usize, d: usize, gamma: u32) -> Result<AdaptiveTestCount> {
    if gamma == 0 {
        return Err(Error::parameter("gamma must be at least 1"));
    }
    let params = ExpanderParams::for_instance(n, d)?;
    Ok(AdaptiveTestCount {
        round1: 2 * params.m.div_ceil(gamma as usize),
        round2_max: list_size_bound(d),
    })
}
