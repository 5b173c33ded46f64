//! Shared domain types: the threshold grid, mixed strategies, staked payoff
//! matrices and the flat column index used for coalition pure strategies.

use std::collections::{BTreeMap, HashMap};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform threshold grid on `[0, 1]` with inclusive endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    values: Vec<f64>,
}

/// Builds the `M`-point grid `i / (M - 1)`.
pub fn make_grid(mesh_points: usize) -> Result<Grid> {
    if mesh_points < 2 {
        return Err(Error::InvalidDiscretization(mesh_points));
    }
    let denom = (mesh_points - 1) as f64;
    let values = (0..mesh_points).map(|i| i as f64 / denom).collect();
    Ok(Grid { values })
}

impl Grid {
    pub fn mesh_points(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, index: usize) -> f64 {
        self.values[index]
    }

    /// Index of the grid point closest to `x`.
    pub fn nearest_index(&self, x: f64) -> usize {
        let step = (self.values.len() - 1) as f64;
        (x.clamp(0.0, 1.0) * step).round() as usize
    }

    pub fn step(&self) -> f64 {
        1.0 / (self.values.len() - 1) as f64
    }
}

/// Probability vector over a pure-strategy index set.
///
/// Serialized sparsely as `{"len": n, "weights": {"index": weight, ...}}`
/// with zero entries omitted.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedStrategy {
    weights: Vec<f64>,
}

const NORMALIZATION_TOL: f64 = 1e-9;

impl MixedStrategy {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("mixed strategy over an empty set".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput(format!("negative or non-finite weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidInput(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { weights })
    }

    /// Normalizes nonnegative counts (or unnormalized weights) into a distribution.
    pub fn from_counts(counts: &[f64]) -> Result<Self> {
        let total: f64 = counts.iter().sum();
        if counts.is_empty() || !(total > 0.0) {
            return Err(Error::InvalidInput("counts must have positive total".into()));
        }
        Self::new(counts.iter().map(|c| c / total).collect())
    }

    pub fn pure(index: usize, len: usize) -> Self {
        assert!(index < len, "pure strategy index {index} out of {len}");
        let mut weights = vec![0.0; len];
        weights[index] = 1.0;
        Self { weights }
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len > 0);
        Self { weights: vec![1.0 / len as f64; len] }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.weights[index]
    }

    /// Indices with positive weight, paired with the weight.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights.iter().copied().enumerate().filter(|(_, w)| *w > 0.0)
    }

    /// Drops weights below `threshold` and renormalizes the rest.
    pub fn pruned(&self, threshold: f64) -> Self {
        let kept: Vec<f64> =
            self.weights.iter().map(|&w| if w >= threshold { w } else { 0.0 }).collect();
        match Self::from_counts(&kept) {
            Ok(s) => s,
            // everything below threshold: keep the heaviest point
            Err(_) => {
                let best = argmax(&self.weights);
                Self::pure(best, self.weights.len())
            }
        }
    }

    /// Index of the largest weight (lowest index on ties).
    pub fn mode(&self) -> usize {
        argmax(&self.weights)
    }
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

#[derive(Serialize, Deserialize)]
struct SparseStrategy {
    len: usize,
    weights: BTreeMap<usize, f64>,
}

impl Serialize for MixedStrategy {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SparseStrategy { len: self.weights.len(), weights: self.support().collect() }
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MixedStrategy {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let sparse = SparseStrategy::deserialize(deserializer)?;
        let mut weights = vec![0.0; sparse.len];
        for (i, w) in sparse.weights {
            if i >= sparse.len {
                return Err(serde::de::Error::custom(format!("index {i} >= len {}", sparse.len)));
            }
            weights[i] = w;
        }
        MixedStrategy::new(weights).map_err(serde::de::Error::custom)
    }
}

/// One-shot payoff `alpha` and stakes multiplier `beta` for player 1 (rows)
/// against an opponent or coalition (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct StakedBimatrix {
    alpha: Array2<f64>,
    beta: Array2<f64>,
}

impl StakedBimatrix {
    pub fn new(alpha: Array2<f64>, beta: Array2<f64>) -> Result<Self> {
        if alpha.dim() != beta.dim() {
            return Err(Error::InvalidInput(format!(
                "alpha shape {:?} differs from beta shape {:?}",
                alpha.dim(),
                beta.dim()
            )));
        }
        if alpha.is_empty() {
            return Err(Error::InvalidInput("empty payoff matrix".into()));
        }
        if let Some(b) = beta.iter().find(|b| !(**b >= 0.0)) {
            return Err(Error::InvalidInput(format!("negative stakes multiplier {b}")));
        }
        Ok(Self { alpha, beta })
    }

    pub fn from_rows(alpha: &[Vec<f64>], beta: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows_to_array(alpha)?, rows_to_array(beta)?)
    }

    pub fn alpha(&self) -> &Array2<f64> {
        &self.alpha
    }

    pub fn beta(&self) -> &Array2<f64> {
        &self.beta
    }

    pub fn rows(&self) -> usize {
        self.alpha.nrows()
    }

    pub fn cols(&self) -> usize {
        self.alpha.ncols()
    }

    /// `alpha + beta * v`.
    pub fn combined(&self, v: f64) -> Array2<f64> {
        let mut out = self.alpha.clone();
        out.zip_mut_with(&self.beta, |a, &b| *a += b * v);
        out
    }

    /// Restricts to a subset of columns (in the given order).
    pub fn select_columns(&self, columns: &[usize]) -> Self {
        let pick = |m: &Array2<f64>| {
            Array2::from_shape_fn((m.nrows(), columns.len()), |(i, k)| m[[i, columns[k]]])
        };
        Self { alpha: pick(&self.alpha), beta: pick(&self.beta) }
    }

    /// Merges columns whose `(alpha, beta)` entries are bitwise identical.
    ///
    /// The game value is unchanged; a strategy on the compressed game maps
    /// back through [`ColumnCompression::representatives`].
    pub fn compress_columns(&self) -> ColumnCompression {
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut representatives = Vec::new();
        let mut class_of = Vec::with_capacity(self.cols());
        for j in 0..self.cols() {
            let key: Vec<u64> = self
                .alpha
                .column(j)
                .iter()
                .chain(self.beta.column(j).iter())
                .map(|x| x.to_bits())
                .collect();
            let class = *seen.entry(key).or_insert_with(|| {
                representatives.push(j);
                representatives.len() - 1
            });
            class_of.push(class);
        }
        let matrices = self.select_columns(&representatives);
        ColumnCompression { matrices, representatives, class_of }
    }
}

/// Result of [`StakedBimatrix::compress_columns`].
#[derive(Debug, Clone)]
pub struct ColumnCompression {
    pub matrices: StakedBimatrix,
    /// Original column index standing for each compressed column.
    pub representatives: Vec<usize>,
    /// Compressed column of every original column.
    pub class_of: Vec<usize>,
}

pub(crate) fn rows_to_array(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 {
        return Err(Error::InvalidInput("empty payoff matrix".into()));
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidInput("ragged payoff matrix".into()));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((rows.len(), ncols), flat)
        .map_err(|e| Error::InvalidInput(e.to_string()))
}

/// Flat indexing of coalition pure strategies: the tuple `(j_1, ..., j_k)`
/// with `0 <= j_i < N` maps to column `j_1 + j_2 N + ... + j_k N^(k-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoalitionIndex {
    coalition_size: usize,
    base: usize,
}

impl CoalitionIndex {
    pub fn new(coalition_size: usize, base: usize) -> Result<Self> {
        if coalition_size == 0 || base == 0 {
            return Err(Error::InvalidInput("coalition size and base must be positive".into()));
        }
        let idx = Self { coalition_size, base };
        if (base as u128).checked_pow(coalition_size as u32).map_or(true, |c| c > usize::MAX as u128)
        {
            return Err(Error::InvalidInput(format!("{base}^{coalition_size} columns overflow")));
        }
        Ok(idx)
    }

    pub fn coalition_size(&self) -> usize {
        self.coalition_size
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn column_count(&self) -> usize {
        self.base.pow(self.coalition_size as u32)
    }

    pub fn encode(&self, indices: &[usize]) -> Result<usize> {
        if indices.len() != self.coalition_size {
            return Err(Error::Index(format!(
                "tuple of length {} for coalition of size {}",
                indices.len(),
                self.coalition_size
            )));
        }
        let mut column = 0;
        for &j in indices.iter().rev() {
            if j >= self.base {
                return Err(Error::Index(format!("strategy index {j} >= {}", self.base)));
            }
            column = column * self.base + j;
        }
        Ok(column)
    }

    /// Component `position` (1-based) of column `x`: `floor((x mod N^i) / N^(i-1))`.
    pub fn decode(&self, x: usize, position: usize) -> Result<usize> {
        if x >= self.column_count() {
            return Err(Error::Index(format!("column {x} >= {}", self.column_count())));
        }
        if position == 0 || position > self.coalition_size {
            return Err(Error::Index(format!(
                "position {position} outside 1..={}",
                self.coalition_size
            )));
        }
        let lower = self.base.pow(position as u32 - 1);
        Ok((x % (lower * self.base)) / lower)
    }

    pub fn decode_all(&self, mut x: usize) -> Result<Vec<usize>> {
        if x >= self.column_count() {
            return Err(Error::Index(format!("column {x} >= {}", self.column_count())));
        }
        let mut out = Vec::with_capacity(self.coalition_size);
        for _ in 0..self.coalition_size {
            out.push(x % self.base);
            x /= self.base;
        }
        Ok(out)
    }
}
