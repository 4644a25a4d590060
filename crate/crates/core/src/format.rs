//! Plain-text file formats.
//!
//! * matrix: `m n tau`, then `m` lines of `n` nonnegative integers
//! * outcomes: one line of space-separated readings
//! * defective set: one line of 1-based subject labels
//! * graph: `n_left m_right k`, then `n_left` lines of `k` sorted 1-based test labels
//! * code: `q length kappa n`

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::expander::BipartiteGraph;
use crate::model::{DefectiveSet, OutcomeVector, TestMatrix};
use crate::nonadaptive::RsCode;

fn numbers<T: FromStr>(line: &str, context: &str) -> Result<Vec<T>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<T>()
                .map_err(|_| Error::parse(context, format!("not a nonnegative integer: {tok:?}")))
        })
        .collect()
}

fn content_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().filter(|l| !l.trim().is_empty())
}

fn header<const N: usize>(line: Option<&str>, context: &str) -> Result<[usize; N]> {
    let line = line.ok_or_else(|| Error::parse(context, "missing header line"))?;
    let values: Vec<usize> = numbers(line, context)?;
    values.try_into().map_err(|v: Vec<usize>| {
        Error::parse(
            context,
            format!("header needs {N} fields, found {}", v.len()),
        )
    })
}

pub fn write_matrix(matrix: &TestMatrix, tau: u64) -> String {
    let mut out = format!("{} {} {}\n", matrix.rows(), matrix.cols(), tau);
    for r in 0..matrix.rows() {
        let row: Vec<String> = matrix.row(r).iter().map(u64::to_string).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<(TestMatrix, u64)> {
    let mut lines = content_lines(text);
    let [m, n, tau] = header::<3>(lines.next(), "matrix header")?;
    let mut entries = Vec::with_capacity(m * n);
    for (i, line) in lines.enumerate() {
        let row: Vec<u64> = numbers(line, "matrix row")?;
        if row.len() != n {
            return Err(Error::parse(
                "matrix row",
                format!("row {} has {} entries, expected {n}", i + 1, row.len()),
            ));
        }
        entries.extend(row);
    }
    if entries.len() != m * n {
        return Err(Error::parse(
            "matrix",
            format!("expected {m} rows, found {}", entries.len() / n.max(1)),
        ));
    }
    if tau < 2 {
        return Err(Error::parse("matrix header", "tau must be at least 2"));
    }
    Ok((TestMatrix::new(m, n, entries)?, tau as u64))
}

pub fn write_outcomes(outcome: &OutcomeVector) -> String {
    let parts: Vec<String> = outcome.values().iter().map(u64::to_string).collect();
    format!("{}\n", parts.join(" "))
}

pub fn parse_outcomes(text: &str) -> Result<OutcomeVector> {
    Ok(OutcomeVector::new(numbers(text, "outcomes")?))
}

pub fn write_defectives(set: &DefectiveSet) -> String {
    let parts: Vec<String> = set.one_based().iter().map(usize::to_string).collect();
    format!("{}\n", parts.join(" "))
}

pub fn parse_defectives(text: &str, n: usize) -> Result<DefectiveSet> {
    let labels: Vec<usize> = numbers(text, "defective set")?;
    DefectiveSet::from_one_based(&labels, n)
}

pub fn write_graph(g: &BipartiteGraph) -> String {
    let mut out = format!("{} {} {}\n", g.n_left(), g.m_right(), g.k());
    for nbrs in g.adjacency() {
        let parts: Vec<String> = nbrs.iter().map(|t| (t + 1).to_string()).collect();
        let _ = writeln!(out, "{}", parts.join(" "));
    }
    out
}

pub fn parse_graph(text: &str) -> Result<BipartiteGraph> {
    let mut lines = content_lines(text);
    let [n_left, m_right, k] = header::<3>(lines.next(), "graph header")?;
    let mut adjacency = Vec::with_capacity(n_left);
    for line in lines {
        let labels: Vec<usize> = numbers(line, "graph row")?;
        if labels.len() != k || labels.contains(&0) || labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::parse(
                "graph row",
                format!(
                    "left vertex {} needs {k} sorted distinct 1-based labels",
                    adjacency.len() + 1
                ),
            ));
        }
        adjacency.push(labels.into_iter().map(|l| l - 1).collect());
    }
    if adjacency.len() != n_left {
        return Err(Error::parse(
            "graph",
            format!("expected {n_left} rows, found {}", adjacency.len()),
        ));
    }
    BipartiteGraph::new(m_right, k, adjacency)
}

pub fn write_code(code: &RsCode) -> String {
    format!(
        "{} {} {} {}\n",
        code.q(),
        code.length(),
        code.kappa(),
        code.subjects()
    )
}

pub fn parse_code(text: &str) -> Result<RsCode> {
    let [q, length, kappa, n] = header::<4>(content_lines(text).next(), "code header")?;
    if length != q {
        return Err(Error::parse(
            "code header",
            "only full-length codes (length = q) are supported",
        ));
    }
    RsCode::new(q as u64, kappa as u32, n)
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::expander::random_expander;

    #[test]
    fn matrix_text() {
        let m = TestMatrix::from_rows(&[vec![1, 0, 8], vec![0, 9, 1]]).unwrap();
        let text = write_matrix(&m, 64);
        assert_eq!(text, "2 3 64\n1 0 8\n0 9 1\n");
        assert_eq!(parse_matrix(&text).unwrap(), (m, 64));
        assert!(parse_matrix("2 3 64\n1 0 8\n").is_err());
        assert!(parse_matrix("1 2 64\n1 -1\n").is_err());
        assert!(parse_matrix("1 2\n1 1\n").is_err());
    }

    #[test]
    fn defectives_are_one_based() {
        let set = parse_defectives("3 1 7\n", 10).unwrap();
        assert_eq!(set.members(), &[0, 2, 6]);
        assert_eq!(write_defectives(&set), "1 3 7\n");
        assert!(parse_defectives("0 2", 10).is_err());
        assert!(parse_defectives("11", 10).is_err());
        assert!(parse_defectives("", 10).unwrap().is_empty());
    }

    #[test]
    fn graph_text() {
        let (g, _) = random_expander(12, 1, 4).unwrap();
        let text = write_graph(&g);
        assert!(text.starts_with(&format!("12 {} {}\n", g.m_right(), g.k())));
        assert_eq!(parse_graph(&text).unwrap(), g);
        assert!(parse_graph("1 4 2\n2 1\n").is_err());
        assert!(parse_graph("2 4 2\n1 2\n").is_err());
    }

    #[test]
    fn code_text() {
        let code = RsCode::new(29, 2, 841).unwrap();
        assert_eq!(write_code(&code), "29 29 2 841\n");
        assert_eq!(parse_code(&write_code(&code)).unwrap(), code);
        assert!(parse_code("29 20 2 841").is_err());
    }

    proptest! {
        #[test]
        fn outcome_text_round_trips(values in proptest::collection::vec(0u64..1000, 0..40)) {
            let out = OutcomeVector::new(values);
            prop_assert_eq!(parse_outcomes(&write_outcomes(&out)).unwrap(), out);
        }
    }
}
