//! The bipartite threshold graph of a matrix and the sign patterns it forces.
//!
//! Row vertex `i` and column vertex `j` are joined when `|M_ij| > k`. Any
//! rank-one `u vᵀ` within `k` of `M` must have `sign(u_i v_j) = sign(M_ij)` on
//! every such edge, so fixing one sign per connected component fixes every
//! sign in it. Components are ordered by their smallest row index, and the
//! first component's seed is pinned to `+` since `u vᵀ = (-u)(-v)ᵀ`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(x: f64) -> Sign {
        if x > 0.0 {
            Sign::Positive
        } else if x < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    #[inline]
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Negative => -1.0,
            Sign::Zero => 0.0,
            Sign::Positive => 1.0,
        }
    }

    #[inline]
    pub fn flip(self) -> Sign {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }

    #[inline]
    pub fn times(self, other: Sign) -> Sign {
        match (self, other) {
            (Sign::Zero, _) | (_, Sign::Zero) => Sign::Zero,
            (a, b) if a == b => Sign::Positive,
            _ => Sign::Negative,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Vertex {
    Row(usize),
    Col(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub row: usize,
    pub col: usize,
    pub sign: Sign,
}

/// A connected component with at least one edge. Index lists are sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl Component {
    /// The vertex whose sign is chosen during enumeration: the smallest row.
    pub fn seed(&self) -> Vertex {
        Vertex::Row(self.rows[0])
    }
}

#[derive(Clone, Debug)]
pub struct ThresholdGraph {
    rows: usize,
    cols: usize,
    threshold: f64,
    edges: Vec<Edge>,
    row_adj: Vec<Vec<(usize, Sign)>>,
    col_adj: Vec<Vec<(usize, Sign)>>,
    components: Vec<Component>,
    row_component: Vec<Option<usize>>,
    col_component: Vec<Option<usize>>,
}

struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

/// Builds `G_b(M, k)`: an edge wherever `|M_ij| > k` (strictly).
pub fn build_threshold_graph(m: &Matrix, k: f64) -> ThresholdGraph {
    assert!(k >= 0.0, "threshold must be nonnegative, got {k}");
    let (rows, cols) = m.shape();
    let mut edges = Vec::new();
    let mut row_adj = vec![Vec::new(); rows];
    let mut col_adj = vec![Vec::new(); cols];
    let mut dsu = DisjointSet::new(rows + cols);
    for (i, adj) in row_adj.iter_mut().enumerate() {
        for (j, &x) in m.row(i).iter().enumerate() {
            if x.abs() > k {
                let sign = Sign::of(x);
                edges.push(Edge { row: i, col: j, sign });
                adj.push((j, sign));
                col_adj[j].push((i, sign));
                dsu.union(i, rows + j);
            }
        }
    }

    // Rows are scanned in increasing order, so components come out ordered by
    // their smallest row.
    let mut root_to_comp = vec![usize::MAX; rows + cols];
    let mut components: Vec<Component> = Vec::new();
    let mut row_component = vec![None; rows];
    for i in 0..rows {
        if row_adj[i].is_empty() {
            continue;
        }
        let root = dsu.find(i);
        if root_to_comp[root] == usize::MAX {
            root_to_comp[root] = components.len();
            components.push(Component {
                rows: Vec::new(),
                cols: Vec::new(),
            });
        }
        let c = root_to_comp[root];
        components[c].rows.push(i);
        row_component[i] = Some(c);
    }
    let mut col_component = vec![None; cols];
    for j in 0..cols {
        if col_adj[j].is_empty() {
            continue;
        }
        let c = root_to_comp[dsu.find(rows + j)];
        components[c].cols.push(j);
        col_component[j] = Some(c);
    }

    ThresholdGraph {
        rows,
        cols,
        threshold: k,
        edges,
        row_adj,
        col_adj,
        components,
        row_component,
        col_component,
    }
}

impl ThresholdGraph {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Number of components with at least one edge (`d`).
    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn component_of(&self, v: Vertex) -> Option<usize> {
        match v {
            Vertex::Row(i) => self.row_component[i],
            Vertex::Col(j) => self.col_component[j],
        }
    }

    pub fn isolated_rows(&self) -> Vec<usize> {
        (0..self.rows).filter(|&i| self.row_component[i].is_none()).collect()
    }

    pub fn isolated_cols(&self) -> Vec<usize> {
        (0..self.cols).filter(|&j| self.col_component[j].is_none()).collect()
    }

    /// `2^(d-1)` (or 1 when there are no edges); `None` if it does not fit in a u64.
    pub fn pattern_count(&self) -> Option<u64> {
        let free = self.components.len().saturating_sub(1);
        1u64.checked_shl(free as u32)
    }
}

/// Signs of every vertex in one component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentSigns {
    pub rows: Vec<(usize, Sign)>,
    pub cols: Vec<(usize, Sign)>,
}

impl ComponentSigns {
    fn flipped(&self) -> ComponentSigns {
        ComponentSigns {
            rows: self.rows.iter().map(|&(i, s)| (i, s.flip())).collect(),
            cols: self.cols.iter().map(|&(j, s)| (j, s.flip())).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Propagation {
    Assigned(ComponentSigns),
    /// The edge whose sign constraint could not be met.
    Contradiction { row: usize, col: usize },
}

/// BFS from `seed` with sign `seed_sign`, enforcing `rowSign · colSign = edgeSign`.
pub fn propagate_signs(g: &ThresholdGraph, component: usize, seed: Vertex, seed_sign: Sign) -> Propagation {
    assert_ne!(seed_sign, Sign::Zero, "seed sign must be nonzero");
    assert_eq!(
        g.component_of(seed),
        Some(component),
        "seed vertex {seed:?} is not in component {component}"
    );
    let mut row_sign: Vec<Option<Sign>> = vec![None; g.rows];
    let mut col_sign: Vec<Option<Sign>> = vec![None; g.cols];
    let mut queue = VecDeque::new();
    match seed {
        Vertex::Row(i) => row_sign[i] = Some(seed_sign),
        Vertex::Col(j) => col_sign[j] = Some(seed_sign),
    }
    queue.push_back(seed);
    while let Some(v) = queue.pop_front() {
        match v {
            Vertex::Row(i) => {
                let s = row_sign[i].expect("queued vertices are signed");
                for &(j, e) in &g.row_adj[i] {
                    let want = s.times(e);
                    match col_sign[j] {
                        None => {
                            col_sign[j] = Some(want);
                            queue.push_back(Vertex::Col(j));
                        }
                        Some(have) if have != want => return Propagation::Contradiction { row: i, col: j },
                        Some(_) => {}
                    }
                }
            }
            Vertex::Col(j) => {
                let s = col_sign[j].expect("queued vertices are signed");
                for &(i, e) in &g.col_adj[j] {
                    let want = s.times(e);
                    match row_sign[i] {
                        None => {
                            row_sign[i] = Some(want);
                            queue.push_back(Vertex::Row(i));
                        }
                        Some(have) if have != want => return Propagation::Contradiction { row: i, col: j },
                        Some(_) => {}
                    }
                }
            }
        }
    }
    let comp = &g.components[component];
    Propagation::Assigned(ComponentSigns {
        rows: comp.rows.iter().map(|&i| (i, row_sign[i].unwrap())).collect(),
        cols: comp.cols.iter().map(|&j| (j, col_sign[j].unwrap())).collect(),
    })
}

/// Signs for every row and column; zero exactly on isolated vertices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignPattern {
    pub row_signs: Vec<Sign>,
    pub col_signs: Vec<Sign>,
}

impl SignPattern {
    pub fn all_positive(rows: usize, cols: usize) -> Self {
        Self {
            row_signs: vec![Sign::Positive; rows],
            col_signs: vec![Sign::Positive; cols],
        }
    }

    /// Checks the edge constraints and the zero-iff-isolated rule against `g`.
    pub fn is_valid_for(&self, g: &ThresholdGraph) -> bool {
        if self.row_signs.len() != g.rows || self.col_signs.len() != g.cols {
            return false;
        }
        let zeros_ok = (0..g.rows).all(|i| (self.row_signs[i] == Sign::Zero) == g.row_component[i].is_none())
            && (0..g.cols).all(|j| (self.col_signs[j] == Sign::Zero) == g.col_component[j].is_none());
        zeros_ok
            && g.edges
                .iter()
                .all(|e| self.row_signs[e.row].times(self.col_signs[e.col]) == e.sign)
    }
}

/// Lazy enumeration of the candidate sign patterns of `G_b(M, k)`.
///
/// Yields nothing if some component cannot be signed consistently; the
/// offending components are listed in [`SignPatterns::contradicted`].
#[derive(Clone, Debug)]
pub struct SignPatterns {
    rows: usize,
    cols: usize,
    base: Vec<ComponentSigns>,
    contradicted: Vec<usize>,
    next: u64,
    total: u64,
}

/// Enumerates sign patterns in lexicographic order of the seed signs of
/// components 2..d (`+` before `-`), the first component pinned to `+`.
///
/// Panics if `2^(d-1)` overflows a u64; callers bound `d` first.
pub fn enumerate_sign_patterns(g: &ThresholdGraph) -> SignPatterns {
    let mut base = Vec::with_capacity(g.components.len());
    let mut contradicted = Vec::new();
    for (c, comp) in g.components.iter().enumerate() {
        match propagate_signs(g, c, comp.seed(), Sign::Positive) {
            Propagation::Assigned(signs) => base.push(signs),
            Propagation::Contradiction { .. } => contradicted.push(c),
        }
    }
    let total = if contradicted.is_empty() {
        g.pattern_count().expect("too many components to enumerate")
    } else {
        0
    };
    SignPatterns {
        rows: g.rows,
        cols: g.cols,
        base,
        contradicted,
        next: 0,
        total,
    }
}

impl SignPatterns {
    /// Components whose propagation hit a contradiction.
    pub fn contradicted(&self) -> &[usize] {
        &self.contradicted
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// The pattern at position `index` of the enumeration order.
    pub fn pattern(&self, index: u64) -> SignPattern {
        assert!(index < self.total, "pattern index {index} out of range");
        let d = self.base.len();
        let mut pattern = SignPattern {
            row_signs: vec![Sign::Zero; self.rows],
            col_signs: vec![Sign::Zero; self.cols],
        };
        for (c, signs) in self.base.iter().enumerate() {
            // Component c >= 1 takes bit (d - 1 - c): component 1 is the most significant.
            let negate = c > 0 && (index >> (d - 1 - c)) & 1 == 1;
            let signs = if negate { signs.flipped() } else { signs.clone() };
            for (i, s) in signs.rows {
                pattern.row_signs[i] = s;
            }
            for (j, s) in signs.cols {
                pattern.col_signs[j] = s;
            }
        }
        pattern
    }
}

impl Iterator for SignPatterns {
    type Item = SignPattern;

    fn next(&mut self) -> Option<SignPattern> {
        if self.next >= self.total {
            return None;
        }
        let p = self.pattern(self.next);
        self.next += 1;
        Some(p)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = usize::try_from(self.total - self.next).unwrap_or(usize::MAX);
        (left, Some(left))
    }
}
