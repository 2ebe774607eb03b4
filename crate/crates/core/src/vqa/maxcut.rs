use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::qsim::OutcomeDistribution;

/// Largest graph [`brute_force_maxcut`] will enumerate.
pub const MAX_BRUTE_FORCE_NODES: usize = 24;

const MAX_RESAMPLES: usize = 1000;

/// Unweighted max-cut instance on nodes `0..n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxCutProblem {
    n: usize,
    edges: Vec<(usize, usize)>,
    seed: Option<u64>,
}

impl MaxCutProblem {
    /// Edges are stored as `(min, max)`; self-loops and duplicates are rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("graph needs at least 2 nodes, got {n}")));
        }
        let mut normalized: Vec<(usize, usize)> = Vec::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(invalid(format!("edge ({a}, {b}) outside 0..{n}")));
            }
            if a == b {
                return Err(invalid(format!("self-loop on node {a}")));
            }
            let e = (a.min(b), a.max(b));
            if normalized.contains(&e) {
                return Err(invalid(format!("duplicate edge {e:?}")));
            }
            normalized.push(e);
        }
        Ok(MaxCutProblem {
            n,
            edges: normalized,
            seed: None,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Seed of the random generator that produced this graph, if any.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Number of edges cut by the partition encoded in the bits of `assignment`.
    pub fn cut_value(&self, assignment: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| ((assignment >> a) ^ (assignment >> b)) & 1 == 1)
            .count()
    }

    /// Parses `n` on the first data line followed by one `u v` edge per line.
    /// `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line, first) = lines.next().ok_or(Error::Parse {
            line: 0,
            message: "empty graph file".into(),
        })?;
        let n: usize = first.parse().map_err(|_| Error::Parse {
            line,
            message: format!("expected node count, got {first:?}"),
        })?;
        let mut edges = Vec::new();
        for (line, l) in lines {
            let fields: Vec<&str> = l.split_whitespace().collect();
            let parsed: Option<(usize, usize)> = match fields.as_slice() {
                [a, b] => a.parse().ok().zip(b.parse().ok()),
                _ => None,
            };
            edges.push(parsed.ok_or(Error::Parse {
                line,
                message: format!("expected `u v`, got {l:?}"),
            })?);
        }
        Self::new(n, edges)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for (a, b) in &self.edges {
            out.push_str(&format!("{a} {b}\n"));
        }
        out
    }
}

/// G(n, p) random graph. Pairs `(i, j)`, `i < j`, are visited in lexicographic
/// order and kept with probability `edge_prob`; edgeless draws are resampled.
pub fn erdos_renyi(n: usize, edge_prob: f64, seed: u64) -> Result<MaxCutProblem> {
    if n < 2 {
        return Err(invalid(format!("graph needs at least 2 nodes, got {n}")));
    }
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(invalid(format!(
            "edge probability {edge_prob} outside [0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_RESAMPLES {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(edge_prob) {
                    edges.push((i, j));
                }
            }
        }
        if !edges.is_empty() {
            return Ok(MaxCutProblem {
                n,
                edges,
                seed: Some(seed),
            });
        }
    }
    Err(Error::Degenerate(format!(
        "no edges after {MAX_RESAMPLES} draws with p = {edge_prob}"
    )))
}

/// `−Σ_z p(z)·cut(z)`: the negated expected cut, so lower is better.
pub fn maxcut_expectation(dist: &OutcomeDistribution, problem: &MaxCutProblem) -> Result<f64> {
    if dist.num_bits() != problem.n {
        return Err(Error::DimensionMismatch {
            expected: problem.n,
            got: dist.num_bits(),
        });
    }
    let expected_cut: f64 = dist
        .probs()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(z, &p)| p * problem.cut_value(z) as f64)
        .sum();
    Ok(-expected_cut)
}

/// Negated maximum cut, found by enumerating every assignment.
pub fn brute_force_maxcut(problem: &MaxCutProblem) -> Result<f64> {
    if problem.n > MAX_BRUTE_FORCE_NODES {
        return Err(Error::Capacity {
            what: "graph size",
            got: problem.n,
            limit: MAX_BRUTE_FORCE_NODES,
        });
    }
    // node n-1 fixed to side 0: the complement of every cut is the same cut
    let best = (0..1usize << (problem.n - 1))
        .map(|z| problem.cut_value(z))
        .max()
        .unwrap_or(0);
    Ok(-(best as f64))
}
