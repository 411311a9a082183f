//! Tensor-product grids on truncated boxes.
//!
//! Every axis carries its nodes `x_0 < … < x_N`, the midpoint partition
//! `x_{k±1/2}` (clamped to the end nodes at `k = 0` and `k = N`) and the
//! control-volume widths `h_k = x_{k+1/2} − x_{k−1/2}`. Unknowns live on the
//! interior nodes `1 ≤ k ≤ N − 1` of every axis; they are ordered with the
//! first axis running fastest.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    nodes: Vec<f64>,
    /// `faces[k] = x_{k-1/2}` for `k = 0..=N+1`, clamped at both ends.
    faces: Vec<f64>,
}

impl Axis {
    /// Equally spaced axis with `n_intervals + 1` nodes on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, n_intervals: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi <= lo {
            return Err(Error::Mesh(format!("need 0 <= lo < hi, got [{lo}, {hi}]")));
        }
        if n_intervals < 2 {
            return Err(Error::Mesh(format!("need at least 2 intervals, got {n_intervals}")));
        }
        let step = (hi - lo) / n_intervals as f64;
        let mut nodes: Vec<f64> = (0..=n_intervals).map(|k| lo + k as f64 * step).collect();
        nodes[n_intervals] = hi;
        Self::from_nodes(nodes)
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::Mesh(format!("an axis needs at least 3 nodes (2 intervals), got {}", nodes.len())));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::Mesh("non-finite node coordinate".into()));
        }
        if nodes[0] < 0.0 {
            return Err(Error::Mesh(format!("first node must be >= 0, got {}", nodes[0])));
        }
        if let Some(w) = nodes.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Mesh(format!("nodes must be strictly increasing ({} >= {})", w[0], w[1])));
        }
        let n = nodes.len() - 1;
        let mut faces = Vec::with_capacity(n + 2);
        faces.push(nodes[0]);
        faces.extend(nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        faces.push(nodes[n]);
        Ok(Self { nodes, faces })
    }

    /// Number of intervals `N`.
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Number of interior nodes `N − 1`.
    pub fn interior_count(&self) -> usize {
        self.nodes.len() - 2
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, k: usize) -> f64 {
        self.nodes[k]
    }

    pub fn lo(&self) -> f64 {
        self.nodes[0]
    }

    pub fn hi(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// True when the axis starts at the origin, where `a_ii = ā_i x_i²` vanishes.
    pub fn is_degenerate(&self) -> bool {
        self.nodes[0] == 0.0
    }

    /// The clamped midpoint partition `x_{-1/2}, x_{1/2}, …, x_{N+1/2}`.
    pub fn midpoints(&self) -> &[f64] {
        &self.faces
    }

    /// `x_{k-1/2}`.
    pub fn face_below(&self, k: usize) -> f64 {
        self.faces[k]
    }

    /// `x_{k+1/2}`.
    pub fn face_above(&self, k: usize) -> f64 {
        self.faces[k + 1]
    }

    /// Control-volume width `h_k = x_{k+1/2} − x_{k−1/2}`.
    pub fn width(&self, k: usize) -> f64 {
        self.faces[k + 1] - self.faces[k]
    }
}

/// Per-axis node indices, each in `0..=N_axis`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for MultiIndex {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorMesh {
    axes: Vec<Axis>,
    /// Interior counts `n_i = N_i − 1`.
    counts: Vec<usize>,
    /// Strides of the flat interior ordering.
    strides: Vec<usize>,
    unknowns: usize,
}

impl TensorMesh {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Mesh("mesh needs at least one axis".into()));
        }
        let counts: Vec<usize> = axes.iter().map(Axis::interior_count).collect();
        let mut strides = Vec::with_capacity(counts.len());
        let mut acc = 1usize;
        for &c in &counts {
            strides.push(acc);
            acc *= c;
        }
        Ok(Self { axes, counts, strides, unknowns: acc })
    }

    /// Box `Π [lo_i, hi_i]` with `n[i]` equal intervals along axis `i`.
    pub fn uniform(bounds: &[(f64, f64)], n: &[usize]) -> Result<Self> {
        if bounds.len() != n.len() {
            return Err(Error::Dimension { expected: bounds.len(), got: n.len() });
        }
        let axes = bounds.iter().zip(n).map(|(&(lo, hi), &k)| Axis::uniform(lo, hi, k)).collect::<Result<Vec<_>>>()?;
        Self::new(axes)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    /// Number of unknowns `N = Π (N_i − 1)`.
    pub fn unknowns(&self) -> usize {
        self.unknowns
    }

    pub fn interior_counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn intervals(&self) -> Vec<usize> {
        self.axes.iter().map(Axis::intervals).collect()
    }

    pub fn is_interior(&self, idx: &[usize]) -> bool {
        idx.len() == self.dim() && idx.iter().zip(&self.axes).all(|(&k, a)| k >= 1 && k < a.intervals())
    }

    /// 0-based position of an interior node in the unknown vector.
    pub fn flat_index(&self, idx: &[usize]) -> Result<usize> {
        if !self.is_interior(idx) {
            return Err(Error::NotInterior { index: idx.to_vec() });
        }
        Ok(idx.iter().zip(&self.strides).map(|(&k, &s)| (k - 1) * s).sum())
    }

    /// Inverse of [`flat_index`](Self::flat_index).
    pub fn multi_index(&self, flat: usize) -> Result<MultiIndex> {
        if flat >= self.unknowns {
            return Err(Error::FlatIndex(flat));
        }
        let mut rest = flat;
        let idx = self
            .counts
            .iter()
            .map(|&c| {
                let k = rest % c;
                rest /= c;
                k + 1
            })
            .collect();
        Ok(MultiIndex(idx))
    }

    /// 1-based ordinal `I = i + (j−1) n_1 + (k−1) n_1 n_2 + …` of an interior node.
    pub fn linearize(&self, idx: &MultiIndex) -> Result<usize> {
        self.flat_index(&idx.0).map(|f| f + 1)
    }

    /// Inverse of [`linearize`](Self::linearize) on `1..=N`.
    pub fn delinearize(&self, ordinal: usize) -> Result<MultiIndex> {
        if ordinal == 0 {
            return Err(Error::FlatIndex(0));
        }
        self.multi_index(ordinal - 1)
    }

    /// Stride of axis `i` in the flat interior ordering.
    pub fn stride(&self, i: usize) -> usize {
        self.strides[i]
    }

    pub fn point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().zip(&self.axes).map(|(&k, a)| a.node(k)).collect()
    }

    /// Volume `l = Π h_i` of the control volume around an interior node.
    pub fn cell_volume(&self, idx: &[usize]) -> Result<f64> {
        if !self.is_interior(idx) {
            return Err(Error::NotInterior { index: idx.to_vec() });
        }
        Ok(idx.iter().zip(&self.axes).map(|(&k, a)| a.width(k)).product())
    }

    /// Iterator over the multi-indices of all interior nodes, in flat order.
    pub fn interior_indices(&self) -> impl Iterator<Item = MultiIndex> + '_ {
        (0..self.unknowns).map(move |f| self.multi_index(f).expect("flat index in range"))
    }
}
