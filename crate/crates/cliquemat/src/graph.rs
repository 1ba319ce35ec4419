//! Graph and clique-matrix data structures and their exact algebra.
//!
//! An undirected graph is held as a symmetric binary adjacency matrix with a
//! unit diagonal (every vertex is linked to itself). A clique matrix is a
//! `V x C` binary matrix whose columns mark vertex subsets; the graph it
//! describes is recovered by the elementwise Heaviside step of `Z Z^T`.
//! Rows are stored as dense bit words so overlaps reduce to AND + popcount.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

#[inline]
fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

/// Symmetric 0/1 matrix of an undirected graph, unit diagonal included.
#[derive(Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    v: usize,
    wpr: usize,
    bits: Vec<u64>,
}

impl AdjacencyMatrix {
    /// The edgeless graph on `v` vertices (identity matrix).
    pub fn identity(v: usize) -> Self {
        assert!(v >= 1, "graph needs at least one vertex");
        let wpr = words_for(v);
        let mut m = AdjacencyMatrix {
            v,
            wpr,
            bits: vec![0; v * wpr],
        };
        for i in 0..v {
            m.set(i, i);
        }
        m
    }

    /// Builds a graph from undirected edges. Self-loops are ignored beyond
    /// the always-present diagonal; duplicates collapse.
    pub fn from_edges<I>(v: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut m = AdjacencyMatrix::identity(v);
        for (i, j) in edges {
            if i >= v || j >= v {
                return Err(Error::InvalidArgument(format!(
                    "edge ({i}, {j}) out of range for {v} vertices"
                )));
            }
            if i != j {
                m.set(i, j);
                m.set(j, i);
            }
        }
        Ok(m)
    }

    /// The complete graph on `v` vertices.
    pub fn complete(v: usize) -> Self {
        let mut m = AdjacencyMatrix::identity(v);
        for i in 0..v {
            for j in 0..i {
                m.set(i, j);
                m.set(j, i);
            }
        }
        m
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.wpr + (j >> 6)] |= 1u64 << (j & 63);
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        (self.bits[i * self.wpr + (j >> 6)] >> (j & 63)) & 1 == 1
    }

    pub fn vertex_count(&self) -> usize {
        self.v
    }

    /// Number of off-diagonal edges, each counted once.
    pub fn edge_count(&self) -> usize {
        let set: usize = self.bits.iter().map(|w| w.count_ones() as usize).sum();
        (set - self.v) / 2
    }

    pub fn degree(&self, i: usize) -> usize {
        let row = &self.bits[i * self.wpr..(i + 1) * self.wpr];
        row.iter().map(|w| w.count_ones() as usize).sum::<usize>() - 1
    }

    /// Neighbors of `i`, excluding `i` itself, in increasing order.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.v).filter(move |&j| j != i && self.contains(i, j))
    }

    /// All edges `(i, j)` with `i < j`, lexicographically.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.v).flat_map(move |i| {
            (i + 1..self.v)
                .filter(move |&j| self.contains(i, j))
                .map(move |j| (i, j))
        })
    }

    /// Relabels vertices: position `p` of the result is vertex `order[p]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.v, "permutation length must match");
        let mut m = AdjacencyMatrix::identity(self.v);
        for p in 0..self.v {
            for q in 0..self.v {
                if self.contains(order[p], order[q]) {
                    m.set(p, q);
                }
            }
        }
        m
    }

    pub(crate) fn row_words(&self, i: usize) -> &[u64] {
        &self.bits[i * self.wpr..(i + 1) * self.wpr]
    }

    fn from_raw(v: usize, wpr: usize, bits: Vec<u64>) -> Self {
        AdjacencyMatrix { v, wpr, bits }
    }
}

impl fmt::Debug for AdjacencyMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "AdjacencyMatrix {}x{}", self.v, self.v)?;
        for i in 0..self.v {
            for j in 0..self.v {
                write!(f, "{}", if self.contains(i, j) { 1 } else { 0 })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Binary `V x C` matrix whose columns mark vertex subsets.
///
/// Construction rejects all-zero columns; a zero column describes no clique.
/// `c = 0` (no columns at all) is permitted so a solver can report an empty
/// decomposition.
#[derive(Clone, PartialEq, Eq)]
pub struct CliqueMatrix {
    v: usize,
    c: usize,
    wpr: usize,
    bits: Vec<u64>,
}

impl CliqueMatrix {
    /// Builds from columns given as vertex index lists.
    pub fn from_columns(v: usize, columns: &[Vec<usize>]) -> Result<Self> {
        if v == 0 {
            return Err(Error::InvalidArgument("matrix needs at least one row".into()));
        }
        let c = columns.len();
        let wpr = words_for(c);
        let mut bits = vec![0u64; v * wpr];
        for (k, col) in columns.iter().enumerate() {
            if col.is_empty() {
                return Err(Error::InvalidArgument(format!("column {k} is empty")));
            }
            for &i in col {
                if i >= v {
                    return Err(Error::InvalidArgument(format!(
                        "vertex {i} out of range in column {k}"
                    )));
                }
                bits[i * wpr + (k >> 6)] |= 1u64 << (k & 63);
            }
        }
        Ok(CliqueMatrix { v, c, wpr, bits })
    }

    /// One singleton column per vertex.
    pub fn identity(v: usize) -> Self {
        let cols: Vec<Vec<usize>> = (0..v).map(|i| vec![i]).collect();
        CliqueMatrix::from_columns(v, &cols).expect("identity columns are valid")
    }

    /// A matrix with rows but no columns.
    pub fn empty(v: usize) -> Self {
        assert!(v >= 1, "matrix needs at least one row");
        CliqueMatrix {
            v,
            c: 0,
            wpr: 0,
            bits: Vec::new(),
        }
    }

    #[inline]
    pub fn get(&self, i: usize, c: usize) -> bool {
        (self.bits[i * self.wpr + (c >> 6)] >> (c & 63)) & 1 == 1
    }

    pub fn vertex_count(&self) -> usize {
        self.v
    }

    pub fn column_count(&self) -> usize {
        self.c
    }

    /// Vertices of column `c`, increasing.
    pub fn column_support(&self, c: usize) -> Vec<usize> {
        (0..self.v).filter(|&i| self.get(i, c)).collect()
    }

    /// Number of vertices in column `c`.
    pub fn column_weight(&self, c: usize) -> usize {
        (0..self.v).filter(|&i| self.get(i, c)).count()
    }

    pub fn columns(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.c).map(|c| self.column_support(c))
    }

    /// `z_i . z_j`: the number of columns containing both `i` and `j`.
    #[inline]
    pub fn row_overlap(&self, i: usize, j: usize) -> usize {
        let a = &self.bits[i * self.wpr..(i + 1) * self.wpr];
        let b = &self.bits[j * self.wpr..(j + 1) * self.wpr];
        a.iter()
            .zip(b)
            .map(|(x, y)| (x & y).count_ones() as usize)
            .sum()
    }
}

impl fmt::Debug for CliqueMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CliqueMatrix {}x{}", self.v, self.c)?;
        for i in 0..self.v {
            for c in 0..self.c {
                write!(f, "{}", if self.get(i, c) { 1 } else { 0 })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Summary of a decomposition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphStats {
    pub v: usize,
    pub edge_count: usize,
    pub clique_count: usize,
    /// Clique size -> number of columns of that size.
    pub size_histogram: BTreeMap<usize, usize>,
    pub reconstruction_exact: bool,
}

/// `H(Z Z^T)`: the elementwise Heaviside step of the outer product.
///
/// The result is symmetric; its diagonal entry `(i, i)` is 1 exactly when
/// vertex `i` appears in at least one column. A matrix with no columns maps
/// to the all-zero matrix.
pub fn heaviside_reconstruct(z: &CliqueMatrix) -> AdjacencyMatrix {
    let v = z.v;
    let wpr = words_for(v);
    let mut bits = vec![0u64; v * wpr];
    for i in 0..v {
        for j in i..v {
            if z.row_overlap(i, j) > 0 {
                bits[i * wpr + (j >> 6)] |= 1u64 << (j & 63);
                bits[j * wpr + (i >> 6)] |= 1u64 << (i & 63);
            }
        }
    }
    AdjacencyMatrix::from_raw(v, wpr, bits)
}

/// The incidence matrix: one column per edge, plus one singleton column per
/// isolated vertex so the reconstruction reproduces the unit diagonal.
pub fn incidence_matrix(a: &AdjacencyMatrix) -> CliqueMatrix {
    let mut cols: Vec<Vec<usize>> = a.edges().map(|(i, j)| vec![i, j]).collect();
    for i in 0..a.vertex_count() {
        if a.degree(i) == 0 {
            cols.push(vec![i]);
        }
    }
    CliqueMatrix::from_columns(a.vertex_count(), &cols).expect("edge columns are valid")
}

fn check_same_vertices(a: &AdjacencyMatrix, z: &CliqueMatrix) -> Result<()> {
    if a.vertex_count() != z.vertex_count() {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} vertices, clique matrix has {} rows",
            a.vertex_count(),
            z.vertex_count()
        )));
    }
    Ok(())
}

/// Whether `H(Z Z^T)` equals `a` entrywise (diagonal included).
pub fn is_valid_clique_matrix(a: &AdjacencyMatrix, z: &CliqueMatrix) -> Result<bool> {
    check_same_vertices(a, z)?;
    Ok(heaviside_reconstruct(z) == *a)
}

/// Whether every column of `z` is a clique of `a`. Weaker than
/// [`is_valid_clique_matrix`]: the columns need not cover every edge.
pub fn columns_are_cliques(a: &AdjacencyMatrix, z: &CliqueMatrix) -> Result<bool> {
    check_same_vertices(a, z)?;
    for c in 0..z.column_count() {
        let members = z.column_support(c);
        for (idx, &i) in members.iter().enumerate() {
            for &j in &members[idx + 1..] {
                if !a.contains(i, j) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Column-count and size-histogram summary of a decomposition of `a`.
pub fn stats(a: &AdjacencyMatrix, z: &CliqueMatrix) -> Result<GraphStats> {
    check_same_vertices(a, z)?;
    let mut size_histogram = BTreeMap::new();
    for c in 0..z.column_count() {
        *size_histogram.entry(z.column_weight(c)).or_insert(0) += 1;
    }
    Ok(GraphStats {
        v: a.vertex_count(),
        edge_count: a.edge_count(),
        clique_count: z.column_count(),
        size_histogram,
        reconstruction_exact: is_valid_clique_matrix(a, z)?,
    })
}

/// Removes duplicate columns and columns subsumed by a strict superset.
/// Among equal columns the earliest survives; order is otherwise preserved.
pub fn dedup_columns(z: &CliqueMatrix) -> CliqueMatrix {
    let cols: Vec<Vec<usize>> = z.columns().collect();
    let masks: Vec<Vec<u64>> = cols
        .iter()
        .map(|col| {
            let mut m = vec![0u64; words_for(z.vertex_count())];
            for &i in col {
                m[i >> 6] |= 1u64 << (i & 63);
            }
            m
        })
        .collect();
    let subset = |s: &[u64], t: &[u64]| s.iter().zip(t).all(|(a, b)| a & !b == 0);
    let mut keep: Vec<Vec<usize>> = Vec::new();
    'outer: for (k, col) in cols.iter().enumerate() {
        for (other, m) in masks.iter().enumerate() {
            if other == k || !subset(&masks[k], m) {
                continue;
            }
            // drop k if strictly contained, or an exact duplicate of an
            // earlier column
            if masks[k] != *m || other < k {
                continue 'outer;
            }
        }
        keep.push(col.clone());
    }
    if keep.is_empty() {
        CliqueMatrix::empty(z.vertex_count())
    } else {
        CliqueMatrix::from_columns(z.vertex_count(), &keep).expect("kept columns stay valid")
    }
}
