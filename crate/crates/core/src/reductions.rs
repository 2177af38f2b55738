//! NAE-3SAT → graph recoloring → rank-one ℓ∞ instances.
//!
//! Vertex layout of [`nae_to_graph`]: literal vertices first, `2x` for `x` and
//! `2x + 1` for `¬x`, then three vertices per clause in clause order.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{residual_linf, FactorPair, Matrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReductionError {
    #[error("clause {clause} references variable {var} but the instance has {count}")]
    BadVariable { clause: usize, var: usize, count: usize },
    #[error("vertex {vertex} out of range for a graph on {count} vertices")]
    BadVertex { vertex: usize, count: usize },
    #[error("both ({0}, {1}) and ({1}, {0}) are edges")]
    AntiparallelEdges(usize, usize),
    #[error("pair {{{0}, {1}}} is adjacent or degenerate")]
    BadPair(usize, usize),
    #[error("coloring has {got} entries for {expected} vertices")]
    ColoringLength { expected: usize, got: usize },
    #[error("pair {{{0}, {1}}} is monochromatic")]
    MonochromaticPair(usize, usize),
    #[error("recolored graph has a directed cycle through {} vertices", .0.len())]
    Cycle(Vec<usize>),
    #[error("factors do not match a {0}x{0} matrix")]
    FactorShape(usize),
    #[error("residual {0} is not below 3/2")]
    ResidualTooLarge(f64),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// `var` is 0-based; DIMACS text uses `±(var + 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Self { var, negated: false }
    }

    pub fn neg(var: usize) -> Self {
        Self { var, negated: true }
    }

    pub fn negate(self) -> Self {
        Self {
            negated: !self.negated,
            ..self
        }
    }

    pub fn from_dimacs(x: i64) -> Option<Self> {
        if x == 0 {
            return None;
        }
        let var = usize::try_from(x.unsigned_abs() - 1).ok()?;
        Some(Self { var, negated: x < 0 })
    }

    pub fn to_dimacs(self) -> i64 {
        let x = self.var as i64 + 1;
        if self.negated {
            -x
        } else {
            x
        }
    }

    pub fn value(self, assignment: &[bool]) -> bool {
        assignment[self.var] != self.negated
    }

    /// Index of this literal's vertex among the literal vertices.
    pub fn vertex(self) -> usize {
        2 * self.var + self.negated as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NaeInstance {
    variable_count: usize,
    clauses: Vec<[Literal; 3]>,
}

impl NaeInstance {
    pub fn new(variable_count: usize, clauses: Vec<[Literal; 3]>) -> Result<Self, ReductionError> {
        for (c, clause) in clauses.iter().enumerate() {
            if let Some(l) = clause.iter().find(|l| l.var >= variable_count) {
                return Err(ReductionError::BadVariable {
                    clause: c,
                    var: l.var,
                    count: variable_count,
                });
            }
        }
        Ok(Self { variable_count, clauses })
    }

    pub fn variable_count(&self) -> usize {
        self.variable_count
    }

    pub fn clauses(&self) -> &[[Literal; 3]] {
        &self.clauses
    }

    /// Every clause has a true and a false literal.
    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        assert_eq!(assignment.len(), self.variable_count, "assignment length");
        self.clauses.iter().all(|c| {
            let t = c.iter().filter(|l| l.value(assignment)).count();
            t == 1 || t == 2
        })
    }

    /// Exhaustive search; the first satisfying assignment in binary order.
    pub fn brute_force(&self) -> Option<Vec<bool>> {
        assert!(self.variable_count < 32, "brute force limited to 31 variables");
        (0u64..1 << self.variable_count)
            .map(|bits| (0..self.variable_count).map(|x| bits >> x & 1 == 1).collect::<Vec<_>>())
            .find(|a| self.is_satisfied_by(a))
    }

    pub fn parse_dimacs(text: &str) -> Result<Self, ReductionError> {
        let err = |line: usize, msg: String| ReductionError::Parse { line, msg };
        let mut header: Option<(usize, usize)> = None;
        let mut clauses = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('c') {
                continue;
            }
            let toks: Vec<&str> = t.split_whitespace().collect();
            if toks[0] == "p" {
                if header.is_some() {
                    return Err(err(line, "duplicate header".into()));
                }
                if toks.len() != 4 || toks[1] != "nae3sat" {
                    return Err(err(line, "expected `p nae3sat <vars> <clauses>`".into()));
                }
                let n = toks[2].parse().map_err(|_| err(line, format!("bad variable count `{}`", toks[2])))?;
                let c = toks[3].parse().map_err(|_| err(line, format!("bad clause count `{}`", toks[3])))?;
                header = Some((n, c));
                continue;
            }
            let Some((n, _)) = header else {
                return Err(err(line, "clause before header".into()));
            };
            let mut nums = Vec::with_capacity(4);
            for tok in &toks {
                nums.push(tok.parse::<i64>().map_err(|_| err(line, format!("bad literal `{tok}`")))?);
            }
            if nums.len() == 4 && nums[3] == 0 {
                nums.pop();
            }
            if nums.len() != 3 {
                return Err(err(line, format!("expected 3 literals, found {}", nums.len())));
            }
            let mut clause = [Literal::pos(0); 3];
            for (slot, &x) in clause.iter_mut().zip(&nums) {
                *slot = Literal::from_dimacs(x).ok_or_else(|| err(line, "literal 0".into()))?;
                if slot.var >= n {
                    return Err(err(line, format!("literal {x} exceeds {n} variables")));
                }
            }
            clauses.push(clause);
        }
        let Some((n, c)) = header else {
            return Err(err(0, "missing `p nae3sat` header".into()));
        };
        if clauses.len() != c {
            return Err(err(0, format!("header announces {c} clauses, found {}", clauses.len())));
        }
        Self::new(n, clauses)
    }

    pub fn to_dimacs(&self) -> String {
        let mut s = format!("p nae3sat {} {}\n", self.variable_count, self.clauses.len());
        for c in &self.clauses {
            let _ = writeln!(s, "{} {} {} 0", c[0].to_dimacs(), c[1].to_dimacs(), c[2].to_dimacs());
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VertexLabel {
    Unlabeled,
    Literal(Literal),
    Occurrence { clause: usize, position: usize, literal: Literal },
}

/// Oriented graph with a set of "distinct" pairs that must be colored apart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecolorGraph {
    vertex_count: usize,
    edges: Vec<(usize, usize)>,
    pairs: Vec<(usize, usize)>,
    labels: Vec<VertexLabel>,
}

impl RecolorGraph {
    pub fn new(vertex_count: usize, edges: Vec<(usize, usize)>, pairs: Vec<(usize, usize)>) -> Result<Self, ReductionError> {
        Self::labeled(vec![VertexLabel::Unlabeled; vertex_count], edges, pairs)
    }

    pub fn labeled(
        labels: Vec<VertexLabel>,
        edges: Vec<(usize, usize)>,
        pairs: Vec<(usize, usize)>,
    ) -> Result<Self, ReductionError> {
        let n = labels.len();
        let check = |v: usize| {
            if v < n {
                Ok(())
            } else {
                Err(ReductionError::BadVertex { vertex: v, count: n })
            }
        };
        let mut adjacent = HashSet::new();
        for &(a, b) in &edges {
            check(a)?;
            check(b)?;
            if a == b || adjacent.contains(&(b, a)) {
                return Err(ReductionError::AntiparallelEdges(a, b));
            }
            adjacent.insert((a, b));
        }
        for &(a, b) in &pairs {
            check(a)?;
            check(b)?;
            if a == b || adjacent.contains(&(a, b)) || adjacent.contains(&(b, a)) {
                return Err(ReductionError::BadPair(a, b));
            }
        }
        Ok(Self {
            vertex_count: n,
            edges,
            pairs,
            labels,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn labels(&self) -> &[VertexLabel] {
        &self.labels
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    White,
    Black,
}

impl Color {
    pub fn other(self) -> Self {
        match self {
            Color::White => Color::Black,
            Color::Black => Color::White,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coloring(pub Vec<Color>);

impl Coloring {
    pub fn colors(&self) -> &[Color] {
        &self.0
    }

    pub fn swapped(&self) -> Self {
        Coloring(self.0.iter().map(|c| c.other()).collect())
    }

    /// True literals (and their occurrences) white, false ones black.
    pub fn from_assignment(g: &RecolorGraph, assignment: &[bool]) -> Self {
        let color = |l: Literal| if l.value(assignment) { Color::White } else { Color::Black };
        Coloring(
            g.labels
                .iter()
                .map(|lab| match *lab {
                    VertexLabel::Literal(l) | VertexLabel::Occurrence { literal: l, .. } => color(l),
                    VertexLabel::Unlabeled => Color::White,
                })
                .collect(),
        )
    }
}

pub fn nae_to_graph(inst: &NaeInstance) -> RecolorGraph {
    let nx = inst.variable_count;
    let mut labels = Vec::with_capacity(2 * nx + 3 * inst.clauses.len());
    let mut pairs = Vec::new();
    for x in 0..nx {
        labels.push(VertexLabel::Literal(Literal::pos(x)));
        labels.push(VertexLabel::Literal(Literal::neg(x)));
        pairs.push((2 * x, 2 * x + 1));
    }
    let mut edges = Vec::new();
    for (c, clause) in inst.clauses.iter().enumerate() {
        let base = 2 * nx + 3 * c;
        for (t, &literal) in clause.iter().enumerate() {
            labels.push(VertexLabel::Occurrence {
                clause: c,
                position: t,
                literal,
            });
            edges.push((base + t, base + (t + 1) % 3));
            pairs.push((base + t, literal.negate().vertex()));
        }
    }
    RecolorGraph::labeled(labels, edges, pairs).expect("construction is well formed")
}

/// `3/2 - 0.001 n^-6`.
pub fn reduction_threshold(n: usize) -> f64 {
    1.5 - 0.001 * (n as f64).powi(-6)
}

pub fn graph_to_matrix(g: &RecolorGraph) -> (Matrix, f64) {
    let n = g.vertex_count;
    let mut m = Matrix::from_fn(n, n, |i, j| if i == j { 2.0 } else { 0.0 });
    let data = m.as_mut_slice();
    for &(a, b) in &g.pairs {
        data[a * n + b] = -1.0;
        data[b * n + a] = -1.0;
    }
    for &(a, b) in &g.edges {
        data[a * n + b] = -1.0;
        data[b * n + a] = 1.0;
    }
    (m, reduction_threshold(n))
}

fn check_len(g: &RecolorGraph, c: &Coloring) -> Result<(), ReductionError> {
    if c.0.len() == g.vertex_count {
        Ok(())
    } else {
        Err(ReductionError::ColoringLength {
            expected: g.vertex_count,
            got: c.0.len(),
        })
    }
}

/// Topological order of `g` after reversing every edge between the two colors.
/// Kahn's algorithm, smallest ready vertex first.
pub fn topological_order(g: &RecolorGraph, coloring: &Coloring) -> Result<Vec<usize>, ReductionError> {
    check_len(g, coloring)?;
    let n = g.vertex_count;
    let mut out = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for &(a, b) in &g.edges {
        let (a, b) = if coloring.0[a] == coloring.0[b] { (a, b) } else { (b, a) };
        out[a].push(b);
        indeg[b] += 1;
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n).filter(|&v| indeg[v] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(v)) = ready.pop() {
        order.push(v);
        for &w in &out[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                ready.push(Reverse(w));
            }
        }
    }
    if order.len() < n {
        return Err(ReductionError::Cycle((0..n).filter(|&v| indeg[v] > 0).collect()));
    }
    Ok(order)
}

fn check_pairs(g: &RecolorGraph, coloring: &Coloring) -> Result<(), ReductionError> {
    check_len(g, coloring)?;
    match g.pairs.iter().find(|&&(a, b)| coloring.0[a] == coloring.0[b]) {
        Some(&(a, b)) => Err(ReductionError::MonochromaticPair(a, b)),
        None => Ok(()),
    }
}

/// No monochromatic pair and an acyclic recolored graph.
pub fn validate_coloring(g: &RecolorGraph, coloring: &Coloring) -> bool {
    check_pairs(g, coloring).is_ok() && topological_order(g, coloring).is_ok()
}

/// Explicit rank-one pair within `reduction_threshold(n)` of `graph_to_matrix(g)`.
pub fn witness_from_coloring(g: &RecolorGraph, coloring: &Coloring) -> Result<FactorPair, ReductionError> {
    check_pairs(g, coloring)?;
    let order = topological_order(g, coloring)?;
    let n = g.vertex_count;
    let nf = n as f64;
    let eps = 0.1 * nf.powi(-4);
    let eps15 = eps * eps.sqrt();
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    // Sources of the recolored graph take the last positions, so every -1 of
    // the flipped matrix lands below the diagonal.
    for p in 1..=n {
        let vertex = order[n - p];
        let flip = match coloring.0[vertex] {
            Color::White => 1.0,
            Color::Black => -1.0,
        };
        let pf = p as f64;
        u[vertex] = flip * (half - pf * eps);
        v[vertex] = flip * (half + pf * eps + eps15);
    }
    Ok(FactorPair::rank_one(&u, &v).expect("nonempty"))
}

/// Colors vertex `i` white iff `u_i > 0`.
pub fn coloring_from_solution(g: &RecolorGraph, u: &[f64], v: &[f64]) -> Result<Coloring, ReductionError> {
    let n = g.vertex_count;
    if u.len() != n || v.len() != n || n == 0 {
        return Err(ReductionError::FactorShape(n));
    }
    let (m, _) = graph_to_matrix(g);
    let f = FactorPair::rank_one(u, v).map_err(|_| ReductionError::FactorShape(n))?;
    let r = residual_linf(&m, &f).map_err(|_| ReductionError::FactorShape(n))?;
    if r.is_nan() || r >= 1.5 {
        return Err(ReductionError::ResidualTooLarge(r));
    }
    Ok(Coloring(
        u.iter().map(|&x| if x > 0.0 { Color::White } else { Color::Black }).collect(),
    ))
}

/// Reads `x = true` iff the vertex of `x` is white; `None` unless that
/// assignment satisfies the instance.
pub fn decode_assignment(inst: &NaeInstance, coloring: &Coloring) -> Option<Vec<bool>> {
    let a: Vec<bool> = (0..inst.variable_count)
        .map(|x| coloring.0.get(Literal::pos(x).vertex()) == Some(&Color::White))
        .collect();
    inst.is_satisfied_by(&a).then_some(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rank_one::decide;

    fn single_clause() -> NaeInstance {
        NaeInstance::new(3, vec![[Literal::pos(0), Literal::pos(1), Literal::pos(2)]]).unwrap()
    }

    #[test]
    fn step_one_only() {
        let g = nae_to_graph(&NaeInstance::new(1, vec![]).unwrap());
        assert_eq!(g.vertex_count(), 2);
        assert!(g.edges().is_empty());
        assert_eq!(g.pairs(), &[(0, 1)]);
    }

    #[test]
    fn one_clause_counts() {
        let g = nae_to_graph(&single_clause());
        assert_eq!(g.vertex_count(), 9);
        assert_eq!(g.edges(), &[(6, 7), (7, 8), (8, 6)]);
        assert_eq!(g.pairs().len(), 6);
        assert_eq!(&g.pairs()[3..], &[(6, 1), (7, 3), (8, 5)]);
    }

    #[test]
    fn small_matrices() {
        let (m, k) = graph_to_matrix(&RecolorGraph::new(1, vec![], vec![]).unwrap());
        assert_eq!(m.as_slice(), &[2.0]);
        assert!((k - 1.499).abs() < 1e-15);
        let (m, _) = graph_to_matrix(&RecolorGraph::new(2, vec![], vec![(0, 1)]).unwrap());
        assert_eq!(m.as_slice(), &[2.0, -1.0, -1.0, 2.0]);
        let (m, _) = graph_to_matrix(&RecolorGraph::new(2, vec![(0, 1)], vec![]).unwrap());
        assert_eq!((m[(0, 1)], m[(1, 0)]), (-1.0, 1.0));
    }

    #[test]
    fn graph_invariants_are_checked() {
        assert!(RecolorGraph::new(2, vec![(0, 1), (1, 0)], vec![]).is_err());
        assert!(RecolorGraph::new(2, vec![(0, 1)], vec![(1, 0)]).is_err());
        assert!(RecolorGraph::new(2, vec![(0, 2)], vec![]).is_err());
        assert!(NaeInstance::new(1, vec![[Literal::pos(0), Literal::pos(1), Literal::neg(0)]]).is_err());
    }

    #[test]
    fn cycle_recoloring() {
        let g = RecolorGraph::new(3, vec![(0, 1), (1, 2), (2, 0)], vec![]).unwrap();
        let same = Coloring(vec![Color::White; 3]);
        assert!(matches!(topological_order(&g, &same), Err(ReductionError::Cycle(v)) if v == vec![0, 1, 2]));
        let mixed = Coloring(vec![Color::White, Color::Black, Color::White]);
        assert_eq!(topological_order(&g, &mixed).unwrap(), vec![2, 1, 0]);
        let empty = RecolorGraph::new(4, vec![], vec![]).unwrap();
        assert_eq!(topological_order(&empty, &Coloring(vec![Color::Black; 4])).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn tiny_witnesses() {
        let g = RecolorGraph::new(1, vec![], vec![]).unwrap();
        let (m, k) = graph_to_matrix(&g);
        let w = witness_from_coloring(&g, &Coloring(vec![Color::White])).unwrap();
        assert!(residual_linf(&m, &w).unwrap() <= k);

        let g = RecolorGraph::new(2, vec![], vec![(0, 1)]).unwrap();
        let (m, k) = graph_to_matrix(&g);
        let w = witness_from_coloring(&g, &Coloring(vec![Color::White, Color::Black])).unwrap();
        assert!(residual_linf(&m, &w).unwrap() <= k);
        assert!(matches!(
            witness_from_coloring(&g, &Coloring(vec![Color::Black, Color::Black])),
            Err(ReductionError::MonochromaticPair(0, 1))
        ));
    }

    #[test]
    fn single_clause_assignments() {
        let inst = single_clause();
        let g = nae_to_graph(&inst);
        let (m, k) = graph_to_matrix(&g);
        for bits in 0..8u32 {
            let a: Vec<bool> = (0..3).map(|x| bits >> x & 1 == 1).collect();
            let c = Coloring::from_assignment(&g, &a);
            assert_eq!(validate_coloring(&g, &c), inst.is_satisfied_by(&a));
            if inst.is_satisfied_by(&a) {
                assert_eq!(decode_assignment(&inst, &c).unwrap(), a);
                let w = witness_from_coloring(&g, &c).unwrap();
                assert!(residual_linf(&m, &w).unwrap() <= k);
                let back = coloring_from_solution(&g, w.left().as_slice(), w.right().as_slice()).unwrap();
                assert!(back == c || back == c.swapped());
            } else {
                assert!(witness_from_coloring(&g, &c).is_err());
            }
        }
    }

    #[test]
    fn decide_witness_decodes() {
        let inst = NaeInstance::new(
            3,
            vec![
                [Literal::pos(0), Literal::neg(1), Literal::pos(2)],
                [Literal::neg(0), Literal::pos(1), Literal::pos(1)],
            ],
        )
        .unwrap();
        let g = nae_to_graph(&inst);
        let (m, k) = graph_to_matrix(&g);
        let d = decide(&m, k).unwrap();
        let w = d.witness.expect("satisfiable");
        let c = coloring_from_solution(&g, w.left().as_slice(), w.right().as_slice()).unwrap();
        assert!(validate_coloring(&g, &c));
        assert!(decode_assignment(&inst, &c).is_some() || decode_assignment(&inst, &c.swapped()).is_some());
    }

    #[test]
    fn solution_precondition() {
        let g = RecolorGraph::new(2, vec![], vec![(0, 1)]).unwrap();
        assert!(matches!(
            coloring_from_solution(&g, &[0.0, 1.0], &[1.0, 1.0]),
            Err(ReductionError::ResidualTooLarge(_))
        ));
        assert!(coloring_from_solution(&g, &[1.0], &[1.0]).is_err());
    }

    #[test]
    fn dimacs_round_trip() {
        let text = "c example\np nae3sat 3 2\n1 -2 3 0\n-1 2 2\n";
        let inst = NaeInstance::parse_dimacs(text).unwrap();
        assert_eq!(inst.clauses()[1], [Literal::neg(0), Literal::pos(1), Literal::pos(1)]);
        assert_eq!(NaeInstance::parse_dimacs(&inst.to_dimacs()).unwrap(), inst);
    }

    #[test]
    fn dimacs_errors() {
        for (text, line) in [
            ("1 2 3\n", 1),
            ("p nae3sat 2 1\n1 2 3\n", 2),
            ("p nae3sat 3 1\n1 2\n", 2),
            ("p nae3sat 3 1\n1 0 2\n", 2),
            ("p cnf 3 1\n", 1),
            ("p nae3sat 3 2\n1 2 3\n", 0),
        ] {
            match NaeInstance::parse_dimacs(text) {
                Err(ReductionError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }
}
