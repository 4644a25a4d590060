//! One-round scheme over a Reed–Solomon code: each subject is a codeword,
//! tests are (coordinate, bucket-of-values) pairs, and a subject is cleared
//! as soon as one readable bucket reports zero copies of its value.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{threshold_for, DefectiveSet, OutcomeVector, TestMatrix};

const MAX_PRIME_SEARCH: u64 = 1 << 20;

pub fn is_prime(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    let mut f = 2;
    while f * f <= q {
        if q.is_multiple_of(f) {
            return false;
        }
        f += 1;
    }
    true
}

/// Full-length Reed–Solomon code over `F_q`: message polynomials of degree
/// `< kappa` evaluated at every field element. Subject `j` (0-based) maps to
/// the polynomial whose coefficients are the base-`q` digits of `j`, lowest
/// first, so subject 1 is the constant polynomial 1 (the all-ones word).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RsCode {
    q: u64,
    kappa: u32,
    n: usize,
    points: Vec<u64>,
}

impl RsCode {
    /// Code with explicit field size and dimension for `n` subjects. Does not
    /// check the distance condition; see [`RsCode::meets_distance_condition`].
    pub fn new(q: u64, kappa: u32, n: usize) -> Result<Self> {
        if q < 3 || q.is_multiple_of(2) || !is_prime(q) {
            return Err(Error::parameter(format!("q={q} is not an odd prime")));
        }
        if q > u64::from(u32::MAX) {
            return Err(Error::parameter("q too large"));
        }
        if kappa == 0 || kappa as u64 > q {
            return Err(Error::parameter(format!(
                "dimension {kappa} must lie in [1, q]"
            )));
        }
        if n < 2 {
            return Err(Error::parameter("need at least two subjects"));
        }
        let capacity = (q as u128).checked_pow(kappa).unwrap_or(u128::MAX);
        if capacity < n as u128 {
            return Err(Error::parameter(format!(
                "q^kappa = {q}^{kappa} codewords cannot label {n} subjects"
            )));
        }
        Ok(Self {
            q,
            kappa,
            n,
            points: (0..q).collect(),
        })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn kappa(&self) -> u32 {
        self.kappa
    }

    pub fn subjects(&self) -> usize {
        self.n
    }

    /// Codeword length, equal to `q`.
    pub fn length(&self) -> usize {
        self.points.len()
    }

    pub fn evaluation_points(&self) -> &[u64] {
        &self.points
    }

    /// MDS distance `length - kappa + 1`.
    pub fn min_distance(&self) -> usize {
        self.length() - self.kappa as usize + 1
    }

    /// Relative distance.
    pub fn delta(&self) -> f64 {
        self.min_distance() as f64 / self.length() as f64
    }

    /// `delta > 1 - 1/(2d)`, i.e. `2d(kappa - 1) < length`.
    pub fn meets_distance_condition(&self, d: usize) -> bool {
        2 * d * (self.kappa as usize - 1) < self.length()
    }

    /// Polynomial coefficients for message index `index` (lowest first).
    pub fn message(&self, index: u128) -> Vec<u64> {
        let mut rest = index;
        (0..self.kappa)
            .map(|_| {
                let c = (rest % self.q as u128) as u64;
                rest /= self.q as u128;
                c
            })
            .collect()
    }

    /// Encodes an arbitrary message (any index below `q^kappa`).
    pub fn encode_index(&self, index: u128) -> Vec<u64> {
        let coeffs = self.message(index);
        self.points
            .iter()
            .map(|&x| {
                coeffs
                    .iter()
                    .rev()
                    .fold(0, |acc, &c| (acc * x + c) % self.q)
            })
            .collect()
    }

    /// Codeword of subject `j` (0-based).
    pub fn codeword(&self, j: usize) -> Vec<u64> {
        assert!(j < self.n, "subject {j} out of range");
        self.encode_index(j as u128)
    }

    pub fn all_ones(&self) -> Vec<u64> {
        vec![1; self.length()]
    }
}

/// Smallest odd prime `q`, with `kappa = ceil(log_q n)`, such that
/// `2d(kappa - 1) < q`.
pub fn build_rs_code(n: usize, d: usize) -> Result<RsCode> {
    if n < 2 || d < 1 {
        return Err(Error::parameter(format!(
            "need n >= 2 and d >= 1, got n={n}, d={d}"
        )));
    }
    let mut q = 3u64;
    while q < MAX_PRIME_SEARCH {
        if is_prime(q) {
            let mut kappa = 1u32;
            let mut capacity = q as u128;
            while capacity < n as u128 {
                capacity *= q as u128;
                kappa += 1;
            }
            if 2 * d as u128 * (kappa as u128 - 1) < q as u128 {
                return RsCode::new(q, kappa, n);
            }
        }
        q += 2;
    }
    Err(Error::parameter(format!(
        "no odd prime below {MAX_PRIME_SEARCH} satisfies the distance condition for n={n}, d={d}"
    )))
}

/// Binary matrix with one row per (coordinate, value): row `c*q + x` holds
/// the subjects whose codeword has value `x` at coordinate `c`.
pub fn pr_binary_matrix(code: &RsCode) -> TestMatrix {
    let q = code.q() as usize;
    let mut m = TestMatrix::zeros(code.length() * q, code.subjects()).expect("positive dimensions");
    for j in 0..code.subjects() {
        for (c, &x) in code.codeword(j).iter().enumerate() {
            m.set(c * q + x as usize, j, 1);
        }
    }
    m
}

/// S1/S2 design. Bucket `r` of a coordinate covers values
/// `[rγ, min((r+1)γ - 1, q - 1)]`; rows are indexed `c * buckets + r`.
#[derive(Debug, Clone)]
pub struct BucketScheme {
    code: RsCode,
    gamma: u32,
    tau: u64,
    buckets: usize,
    s1: TestMatrix,
    s2: TestMatrix,
    codewords: Vec<Vec<u32>>,
    // holders[c * q + v]: subjects whose codeword has value v at coordinate c
    holders: Vec<Vec<u32>>,
}

pub fn build_bucket_scheme(code: &RsCode, gamma: u32) -> Result<BucketScheme> {
    let tau = threshold_for(gamma)?;
    let g = gamma as usize;
    let q = code.q() as usize;
    let buckets = q.div_ceil(g);
    let rows = code.length() * buckets;
    let n = code.subjects();
    let radix = 4 * u64::from(gamma);

    let mut s1 = TestMatrix::zeros(rows, n)?;
    let mut s2 = TestMatrix::zeros(rows, n)?;
    let mut codewords = Vec::with_capacity(n);
    let mut holders = vec![Vec::new(); code.length() * q];
    for j in 0..n {
        let word = code.codeword(j);
        for (c, &x) in word.iter().enumerate() {
            let x = x as usize;
            holders[c * q + x].push(j as u32);
            let (r, offset) = (x / g, x % g);
            s1.set(c * buckets + r, j, radix.pow(offset as u32));
            s2.set(c * buckets + r, j, 1);
        }
        codewords.push(word.into_iter().map(|x| x as u32).collect());
    }
    Ok(BucketScheme {
        code: code.clone(),
        gamma,
        tau,
        buckets,
        s1,
        s2,
        codewords,
        holders,
    })
}

impl BucketScheme {
    pub fn code(&self) -> &RsCode {
        &self.code
    }

    pub fn gamma(&self) -> u32 {
        self.gamma
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    pub fn buckets_per_coord(&self) -> usize {
        self.buckets
    }

    /// `γ >= q` leaves a single bucket per coordinate.
    pub fn single_bucket(&self) -> bool {
        self.buckets == 1
    }

    pub fn s1(&self) -> &TestMatrix {
        &self.s1
    }

    pub fn s2(&self) -> &TestMatrix {
        &self.s2
    }

    pub fn total_tests(&self) -> usize {
        self.s1.rows() + self.s2.rows()
    }

    pub(crate) fn codewords(&self) -> &[Vec<u32>] {
        &self.codewords
    }

    pub(crate) fn holders(&self, coord: usize, value: usize) -> &[u32] {
        &self.holders[coord * self.code.q() as usize + value]
    }

    /// Values covered by bucket `r`: `(first value, width)`.
    pub fn bucket_range(&self, r: usize) -> (usize, usize) {
        let g = self.gamma as usize;
        let q = self.code.q() as usize;
        let start = r * g;
        (start, g.min(q - start))
    }

    /// Readings of both parts. Equal to running the saturation channel on
    /// `s1` and `s2`, but touches only the rows the defectives appear in.
    pub fn simulate(&self, defectives: &DefectiveSet) -> Result<(OutcomeVector, OutcomeVector)> {
        let n = self.code.subjects();
        if let Some(&j) = defectives.members().iter().find(|&&j| j >= n) {
            return Err(Error::instance(format!(
                "defective {j} out of range for {n} subjects"
            )));
        }
        let g = self.gamma as usize;
        let radix = 4 * u64::from(self.gamma);
        let rows = self.s1.rows();
        let (mut out1, mut out2) = (vec![0u64; rows], vec![0u64; rows]);
        for j in defectives.iter() {
            for (c, &x) in self.codewords[j].iter().enumerate() {
                let row = c * self.buckets + x as usize / g;
                out1[row] = out1[row].saturating_add(radix.pow(x % self.gamma));
                out2[row] += 1;
            }
        }
        let cap = self.tau - 1;
        for v in out1.iter_mut().chain(out2.iter_mut()) {
            *v = (*v).min(cap);
        }
        Ok((OutcomeVector::new(out1), OutcomeVector::new(out2)))
    }
}

/// Interpretation of one bucket's readings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BucketReading {
    /// Exact number of defectives holding each value of the bucket.
    Counts(Vec<u64>),
    /// Too many defectives in the bucket for the digits to be trusted.
    Saturated,
}

/// Splits an S1 reading into per-value defective counts. The bucket is
/// unreadable when its S2 reading reaches `4γ` or is itself saturated.
pub fn count_by_value(
    s1_reading: u64,
    s2_reading: u64,
    bucket_width: usize,
    gamma: u32,
) -> Result<BucketReading> {
    let tau = threshold_for(gamma)?;
    if s1_reading >= tau || s2_reading >= tau {
        return Err(Error::Inconsistent(format!(
            "readings ({s1_reading}, {s2_reading}) exceed tau - 1 = {}",
            tau - 1
        )));
    }
    if bucket_width == 0 || bucket_width > gamma as usize {
        return Err(Error::parameter(format!(
            "bucket width {bucket_width} not in [1, {gamma}]"
        )));
    }
    if s2_reading >= 4 * u64::from(gamma) || s2_reading == tau - 1 {
        return Ok(BucketReading::Saturated);
    }
    let mut counts = vec![0; bucket_width];
    split_digits(s1_reading, s2_reading, gamma, &mut counts)?;
    Ok(BucketReading::Counts(counts))
}

// Base-4γ digits of an unsaturated S1 reading, checked against S2.
fn split_digits(s1_reading: u64, s2_reading: u64, gamma: u32, counts: &mut [u64]) -> Result<()> {
    let radix = 4 * u64::from(gamma);
    let mut rest = s1_reading;
    for slot in counts.iter_mut() {
        *slot = rest % radix;
        rest /= radix;
    }
    if rest != 0 {
        return Err(Error::Inconsistent(format!(
            "reading {s1_reading} has digits beyond a bucket of width {}",
            counts.len()
        )));
    }
    if counts.iter().sum::<u64>() != s2_reading {
        return Err(Error::Inconsistent(format!(
            "digit sum of {s1_reading} does not match the companion reading {s2_reading}"
        )));
    }
    Ok(())
}

/// Clears every subject that has a coordinate whose bucket is readable and
/// reports no defective with the subject's value there; returns the rest.
///
/// The output always contains the true defectives. It equals them when the
/// code meets the distance condition for the number of defectives.
pub fn exclusion_decode(
    scheme: &BucketScheme,
    s1: &OutcomeVector,
    s2: &OutcomeVector,
) -> Result<DefectiveSet> {
    let rows = scheme.s1().rows();
    if s1.len() != rows || s2.len() != rows {
        return Err(Error::instance(format!(
            "expected {rows} readings per part, got {} and {}",
            s1.len(),
            s2.len()
        )));
    }
    let q = scheme.code().q() as usize;
    let length = scheme.code().length();
    // cleared[c * q + x]: some readable bucket shows no defective with value x at c
    let mut cleared = vec![false; length * q];
    let tau = scheme.tau();
    let saturated = (4 * u64::from(scheme.gamma())).min(tau - 1);
    let mut digits = vec![0u64; scheme.gamma() as usize];
    for c in 0..length {
        for r in 0..scheme.buckets_per_coord() {
            let row = c * scheme.buckets_per_coord() + r;
            let (start, width) = scheme.bucket_range(r);
            let (r1, r2) = (s1.values()[row], s2.values()[row]);
            if r1 >= tau || r2 >= tau {
                return Err(Error::Inconsistent(format!(
                    "readings ({r1}, {r2}) exceed tau - 1 = {}",
                    tau - 1
                )));
            }
            if r2 >= saturated {
                continue;
            }
            let counts = &mut digits[..width];
            split_digits(r1, r2, scheme.gamma(), counts)?;
            for (offset, &count) in counts.iter().enumerate() {
                cleared[c * q + start + offset] = count == 0;
            }
        }
    }
    // Every survivor holds an uncleared value at each coordinate, so it is
    // enough to scan the holders of the sparsest coordinate.
    let pivot = (0..length)
        .min_by_key(|&c| cleared[c * q..(c + 1) * q].iter().filter(|&&x| !x).count())
        .unwrap_or(0);
    let mut survivors: Vec<usize> = (0..q)
        .filter(|&v| !cleared[pivot * q + v])
        .flat_map(|v| scheme.holders(pivot, v).iter().map(|&j| j as usize))
        .filter(|&j| {
            !scheme.codewords()[j]
                .iter()
                .enumerate()
                .any(|(c, &x)| cleared[c * q + x as usize])
        })
        .collect();
    survivors.sort_unstable();
    Ok(DefectiveSet::from_sorted_unchecked(survivors))
}

/// The codewords `y + i·1` (mod q) for `y` in the defective set and
/// `i` in `-γ+1..=γ-1`, deduplicated and sorted.
pub fn shifted_defective_set(
    code: &RsCode,
    defectives: &DefectiveSet,
    gamma: u32,
) -> Vec<Vec<u64>> {
    let q = code.q() as i64;
    let spread = i64::from(gamma) - 1;
    let mut out: Vec<Vec<u64>> = defectives
        .iter()
        .flat_map(|y| {
            let word = code.codeword(y);
            (-spread..=spread).map(move |i| {
                word.iter()
                    .map(|&v| (v as i64 + i).rem_euclid(q) as u64)
                    .collect::<Vec<u64>>()
            })
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

/// `2 * length * ceil(q / γ)`.
pub fn nonadaptive_test_count(code: &RsCode, gamma: u32) -> usize {
    2 * code.length() * (code.q() as usize).div_ceil(gamma.max(1) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes() {
        let small: Vec<u64> = (0..30).filter(|&q| is_prime(q)).collect();
        assert_eq!(small, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
    }

    #[test]
    fn smallest_valid_code_for_841() {
        // q=3,5,7 need kappa-1 >= q/4; q=11 has kappa=3 and 2 < 11/4
        let code = build_rs_code(841, 2).unwrap();
        assert_eq!((code.q(), code.kappa()), (11, 3));
        assert_eq!(code.min_distance(), 9);
        assert!(code.delta() > 0.75);
        assert!(code.meets_distance_condition(2));

        let forced = RsCode::new(29, 2, 841).unwrap();
        assert_eq!(29u64.pow(2), 841);
        assert!((forced.delta() - 28.0 / 29.0).abs() < 1e-12);
        assert!(forced.meets_distance_condition(2));
    }

    #[test]
    fn small_population_gives_repetition_code() {
        let code = build_rs_code(3, 7).unwrap();
        assert_eq!(code.kappa(), 1);
        assert_eq!(code.delta(), 1.0);
        assert_eq!(code.codeword(2), vec![2; code.length()]);
    }

    #[test]
    fn large_d_forces_larger_q() {
        for d in [1, 3, 10, 40] {
            let code = build_rs_code(10_000, d).unwrap();
            assert!(code.meets_distance_condition(d));
            assert!((code.q() as u128).pow(code.kappa()) >= 10_000);
        }
    }

    #[test]
    fn rejects_bad_fields() {
        assert!(RsCode::new(9, 2, 10).is_err());
        assert!(RsCode::new(2, 2, 3).is_err());
        assert!(RsCode::new(5, 1, 6).is_err());
    }

    #[test]
    fn subject_one_is_all_ones() {
        let code = RsCode::new(5, 2, 25).unwrap();
        assert_eq!(code.codeword(1), code.all_ones());
        assert_eq!(code.codeword(0), vec![0; 5]);
        // j = 7 = 2 + 1*5 -> 2 + x
        assert_eq!(code.codeword(7), vec![2, 3, 4, 0, 1]);
    }

    #[test]
    fn pr_matrix_structure() {
        let code = RsCode::new(5, 2, 20).unwrap();
        let b = pr_binary_matrix(&code);
        assert_eq!((b.rows(), b.cols()), (25, 20));
        for j in 0..20 {
            assert_eq!(b.column(j).sum::<u64>(), 5);
        }
        for c in 0..5 {
            for j in 0..20 {
                let hits: u64 = (0..5).map(|x| b.get(c * 5 + x, j)).sum();
                assert_eq!(hits, 1);
            }
        }
    }

    #[test]
    fn bucket_layout() {
        let code = RsCode::new(29, 2, 841).unwrap();
        let s = build_bucket_scheme(&code, 2).unwrap();
        assert_eq!(s.buckets_per_coord(), 15);
        assert_eq!(s.bucket_range(14), (28, 1));
        assert_eq!(s.total_tests(), 870);
        assert_eq!(nonadaptive_test_count(&code, 2), 870);
        assert_eq!(nonadaptive_test_count(&code, 1), 2 * 29 * 29);
        for j in [0, 1, 500, 840] {
            assert_eq!(s.s2().column(j).sum::<u64>(), 29);
        }
        assert!(!s.single_bucket());
    }

    #[test]
    fn gamma_one_regroups_pr_rows() {
        let code = RsCode::new(5, 2, 25).unwrap();
        let s = build_bucket_scheme(&code, 1).unwrap();
        let b = pr_binary_matrix(&code);
        assert_eq!(s.s1(), &b);
        assert_eq!(s.s2(), &b);
    }

    #[test]
    fn oversized_gamma_is_one_bucket() {
        let code = RsCode::new(3, 1, 3).unwrap();
        let s = build_bucket_scheme(&code, 4).unwrap();
        assert!(s.single_bucket());
        assert_eq!(s.bucket_range(0), (0, 3));
    }

    #[test]
    fn bucket_counts() {
        assert_eq!(
            count_by_value(0, 0, 2, 2).unwrap(),
            BucketReading::Counts(vec![0, 0])
        );
        assert_eq!(
            count_by_value(17, 3, 2, 2).unwrap(),
            BucketReading::Counts(vec![1, 2])
        );
        assert_eq!(
            count_by_value(63, 8, 2, 2).unwrap(),
            BucketReading::Saturated
        );
        // width-1 bucket cannot carry a second digit
        assert!(matches!(
            count_by_value(9, 2, 1, 2),
            Err(Error::Inconsistent(_))
        ));
        assert!(matches!(
            count_by_value(64, 0, 2, 2),
            Err(Error::Inconsistent(_))
        ));
    }

    #[test]
    fn eight_copies_of_one_value_saturate() {
        // q=29, gamma=2: eight subjects sharing coordinate 0 value 0
        let code = RsCode::new(29, 2, 841).unwrap();
        let s = build_bucket_scheme(&code, 2).unwrap();
        let i = DefectiveSet::new((0..8).map(|t| t * 29).collect(), 841).unwrap();
        assert!(i.iter().all(|j| code.codeword(j)[0] == 0));
        let (s1, s2) = s.simulate(&i).unwrap();
        assert_eq!(s2.values()[0], 8);
        assert_eq!(
            count_by_value(s1.values()[0], s2.values()[0], 2, 2).unwrap(),
            BucketReading::Saturated
        );
    }

    #[test]
    fn decode_empty_and_single() {
        let code = RsCode::new(29, 2, 841).unwrap();
        let s = build_bucket_scheme(&code, 2).unwrap();
        let (s1, s2) = s.simulate(&DefectiveSet::empty()).unwrap();
        assert!(exclusion_decode(&s, &s1, &s2).unwrap().is_empty());
        let i = DefectiveSet::new(vec![123], 841).unwrap();
        let (s1, s2) = s.simulate(&i).unwrap();
        assert_eq!(exclusion_decode(&s, &s1, &s2).unwrap(), i);
    }

    #[test]
    fn shifted_set() {
        let code = RsCode::new(7, 2, 49).unwrap();
        let i = DefectiveSet::new(vec![1, 10], 49).unwrap();
        let gamma_one = shifted_defective_set(&code, &i, 1);
        let mut expect: Vec<Vec<u64>> = i.iter().map(|j| code.codeword(j)).collect();
        expect.sort();
        assert_eq!(gamma_one, expect);
        let wide = shifted_defective_set(&code, &i, 3);
        assert!(wide.len() <= 5 * i.len());
        // all-ones shifted by -2..=2 gives constants 6, 0, 1, 2, 3
        for v in [6u64, 0, 1, 2, 3] {
            assert!(wide.contains(&vec![v; 7]));
        }
    }
}
