//! Finite-alphabet probability and information primitives.
//!
//! Every quantity is in bits. Distributions are stored as flat row-major
//! tables; the slice-level helpers ([`entropy_of`], [`mi_table`]) are what
//! the hot loops elsewhere in the crate call directly, and the typed
//! wrappers ([`ProbVec`], [`JointDist`], [`Channel`]) validate on the way in.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::search;

/// Slack allowed on simplex constraints before an input is rejected.
pub const MASS_TOL: f64 = 1e-12;

/// Masses at or below this are treated as exact zeros in `p log p`.
pub const ZERO_MASS: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InfoError {
    #[error("probability {0} outside [0, 1]")]
    Domain(f64),
    #[error("entry {index} is negative ({value})")]
    Negative { index: usize, value: f64 },
    #[error("entry {index} is not finite")]
    NotFinite { index: usize },
    #[error("total mass {0} differs from 1 by more than {MASS_TOL}")]
    NotNormalized(f64),
    #[error("empty alphabet")]
    Empty,
    #[error("shape {shape:?} needs {expected} entries, got {found}")]
    Shape {
        shape: Vec<usize>,
        expected: usize,
        found: usize,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("expected a rank-{expected} table, got rank {found}")]
    Rank { expected: usize, found: usize },
    #[error("axis {axis} out of range for rank {rank}")]
    Axis { axis: usize, rank: usize },
    #[error("ragged channel matrix: row {row} has {found} columns, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("channel row {row}: {source}")]
    Row {
        row: usize,
        #[source]
        source: Box<InfoError>,
    },
    #[error("binary-input channel required, input alphabet has {0} symbols")]
    NotBinaryInput(usize),
    #[error("grid step {0} outside (0, 1/2]")]
    GridStep(f64),
}

pub type Result<T> = std::result::Result<T, InfoError>;

/// Checks nonnegativity and unit mass; renormalizes if within slack.
fn normalize(values: &mut [f64]) -> Result<()> {
    if values.is_empty() {
        return Err(InfoError::Empty);
    }
    let mut total = 0.0;
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(InfoError::NotFinite { index });
        }
        if value < -MASS_TOL {
            return Err(InfoError::Negative { index, value });
        }
        total += value;
    }
    if (total - 1.0).abs() > MASS_TOL {
        return Err(InfoError::NotNormalized(total));
    }
    for v in values.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let total: f64 = values.iter().sum();
    if (total - 1.0).abs() > 4.0 * f64::EPSILON {
        for v in values.iter_mut() {
            *v /= total;
        }
    }
    Ok(())
}

/// `-x log2 x` with the `0 log 0 = 0` convention.
#[inline]
pub fn plogp(x: f64) -> f64 {
    if x <= ZERO_MASS {
        0.0
    } else {
        -x * x.log2()
    }
}

/// Binary entropy `h(p)` in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(-MASS_TOL..=1.0 + MASS_TOL).contains(&p) || p.is_nan() {
        return Err(InfoError::Domain(p));
    }
    Ok(binary_entropy_unchecked(p))
}

/// Binary entropy with the argument clamped to `[0, 1]`.
#[inline]
pub fn binary_entropy_unchecked(p: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    plogp(p) + plogp(1.0 - p)
}

/// Entropy of a raw mass vector. No validation.
#[inline]
pub fn entropy_of(p: &[f64]) -> f64 {
    p.iter().map(|&x| plogp(x)).sum()
}

/// `I(A;B)` of a row-major `rows x cols` table. No validation.
pub fn mi_table(p: &[f64], rows: usize, cols: usize) -> f64 {
    debug_assert_eq!(p.len(), rows * cols);
    let mut h_joint = 0.0;
    let mut h_rows = 0.0;
    let mut col_mass = [0.0f64; 16];
    let mut col_heap;
    let col_mass: &mut [f64] = if cols <= 16 {
        &mut col_mass[..cols]
    } else {
        col_heap = vec![0.0; cols];
        &mut col_heap
    };
    for r in 0..rows {
        let row = &p[r * cols..(r + 1) * cols];
        let mut m = 0.0;
        for (c, &x) in row.iter().enumerate() {
            h_joint += plogp(x);
            col_mass[c] += x;
            m += x;
        }
        h_rows += plogp(m);
    }
    let h_cols: f64 = col_mass.iter().map(|&x| plogp(x)).sum();
    h_rows + h_cols - h_joint
}

/// A finite probability distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVec(Vec<f64>);

impl ProbVec {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let mut values = values;
        normalize(&mut values)?;
        Ok(ProbVec(values))
    }

    /// `(p, 1 - p)`.
    pub fn binary(p: f64) -> Result<Self> {
        if !(-MASS_TOL..=1.0 + MASS_TOL).contains(&p) || p.is_nan() {
            return Err(InfoError::Domain(p));
        }
        let p = p.clamp(0.0, 1.0);
        Ok(ProbVec(vec![p, 1.0 - p]))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(InfoError::Empty);
        }
        Ok(ProbVec(vec![1.0 / n as f64; n]))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for ProbVec {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Entropy of a distribution.
pub fn entropy(d: &ProbVec) -> f64 {
    entropy_of(d.values())
}

#[derive(Serialize, Deserialize)]
struct TableRepr {
    shape: Vec<usize>,
    p: Vec<f64>,
}

impl Serialize for ProbVec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TableRepr {
            shape: vec![self.0.len()],
            p: self.0.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProbVec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = TableRepr::deserialize(d)?;
        if repr.shape.len() != 1 {
            return Err(serde::de::Error::custom(InfoError::Rank {
                expected: 1,
                found: repr.shape.len(),
            }));
        }
        let joint = JointDist::new(repr.shape, repr.p).map_err(serde::de::Error::custom)?;
        Ok(ProbVec(joint.p))
    }
}

/// A joint distribution over `k` finite alphabets, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDist {
    shape: Vec<usize>,
    p: Vec<f64>,
}

impl JointDist {
    pub fn new(shape: Vec<usize>, p: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(InfoError::Empty);
        }
        let expected: usize = shape.iter().product();
        if expected != p.len() {
            return Err(InfoError::Shape {
                shape,
                expected,
                found: p.len(),
            });
        }
        let mut p = p;
        normalize(&mut p)?;
        Ok(JointDist { shape, p })
    }

    /// Rank-2 table from nested rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(InfoError::Ragged {
                    row,
                    expected: cols,
                    found: r.len(),
                });
            }
        }
        Self::new(vec![rows.len(), cols], rows.concat())
    }

    /// Product distribution `a ⊗ b`.
    pub fn product(a: &ProbVec, b: &ProbVec) -> Self {
        let p = a
            .values()
            .iter()
            .flat_map(|&x| b.values().iter().map(move |&y| x * y))
            .collect();
        JointDist {
            shape: vec![a.len(), b.len()],
            p,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub(crate) fn from_parts_unchecked(shape: Vec<usize>, p: Vec<f64>) -> Self {
        JointDist { shape, p }
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.shape.len()];
        for k in (0..self.shape.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.shape[k + 1];
        }
        strides
    }

    /// Flat offset of a multi-index.
    pub fn offset(&self, index: &[usize]) -> usize {
        index.iter().zip(self.strides()).map(|(i, s)| i * s).sum()
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.p[self.offset(index)]
    }

    /// Multi-index of a flat offset.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.shape.len()];
        for k in (0..self.shape.len()).rev() {
            idx[k] = flat % self.shape[k];
            flat /= self.shape[k];
        }
        idx
    }

    /// Marginal over the listed axes, kept in the listed order.
    pub fn marginal(&self, axes: &[usize]) -> Result<JointDist> {
        let rank = self.rank();
        if axes.is_empty() {
            return Err(InfoError::Empty);
        }
        for &axis in axes {
            if axis >= rank {
                return Err(InfoError::Axis { axis, rank });
            }
        }
        let shape: Vec<usize> = axes.iter().map(|&a| self.shape[a]).collect();
        let mut out = JointDist {
            p: vec![0.0; shape.iter().product()],
            shape,
        };
        let out_strides = out.strides();
        for (flat, &x) in self.p.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let idx = self.unravel(flat);
            let o: usize = axes
                .iter()
                .zip(&out_strides)
                .map(|(&a, s)| idx[a] * s)
                .sum();
            out.p[o] += x;
        }
        Ok(out)
    }

    /// Marginal on a single axis.
    pub fn marginal_axis(&self, axis: usize) -> Result<ProbVec> {
        Ok(ProbVec(self.marginal(&[axis])?.p))
    }

    /// Joint entropy of the whole table.
    pub fn entropy(&self) -> f64 {
        entropy_of(&self.p)
    }
}

impl Serialize for JointDist {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TableRepr {
            shape: self.shape.clone(),
            p: self.p.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for JointDist {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = TableRepr::deserialize(d)?;
        JointDist::new(repr.shape, repr.p).map_err(serde::de::Error::custom)
    }
}

fn require_rank(j: &JointDist, rank: usize) -> Result<()> {
    if j.rank() != rank {
        return Err(InfoError::Rank {
            expected: rank,
            found: j.rank(),
        });
    }
    Ok(())
}

/// `I(A;B)` for a rank-2 joint.
pub fn mutual_information(j: &JointDist) -> Result<f64> {
    require_rank(j, 2)?;
    Ok(mi_table(&j.p, j.shape[0], j.shape[1]))
}

/// `I(A;B|Z)` for a rank-3 joint indexed `(z, a, b)`.
///
/// Slices with zero conditioning mass contribute nothing.
pub fn conditional_mi(j: &JointDist) -> Result<f64> {
    require_rank(j, 3)?;
    let (nz, na, nb) = (j.shape[0], j.shape[1], j.shape[2]);
    let block = na * nb;
    let mut total = 0.0;
    // Σ_z p(z) I(A;B|Z=z) = Σ_z [H(A,Z=z)+H(B,Z=z)-H(A,B,Z=z)-H(Z=z)] in unnormalized form.
    for z in 0..nz {
        let slice = &j.p[z * block..(z + 1) * block];
        let mass: f64 = slice.iter().sum();
        if mass <= ZERO_MASS {
            continue;
        }
        total += mi_table(slice, na, nb);
        // mi_table on unnormalized mass m gives m·I + (m log m terms); undo them.
        total -= plogp(mass);
    }
    Ok(total)
}

/// Row-stochastic matrix, rows indexed by input symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    rows: Vec<Vec<f64>>,
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(InfoError::Empty);
        }
        let cols = rows[0].len();
        let mut rows = rows;
        for (row, r) in rows.iter_mut().enumerate() {
            if r.len() != cols {
                return Err(InfoError::Ragged {
                    row,
                    expected: cols,
                    found: r.len(),
                });
            }
            normalize(r).map_err(|e| InfoError::Row {
                row,
                source: Box::new(e),
            })?;
        }
        Ok(Channel { rows })
    }

    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(InfoError::Empty);
        }
        Ok(Channel {
            rows: (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        })
    }

    pub fn input_size(&self) -> usize {
        self.rows.len()
    }

    pub fn output_size(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    #[inline]
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.rows[x][y]
    }

    /// Input and output labels both flipped.
    pub fn relabeled(&self) -> Channel {
        Channel {
            rows: self
                .rows
                .iter()
                .rev()
                .map(|r| r.iter().rev().copied().collect())
                .collect(),
        }
    }

    /// `I(X;Y)` for a binary input with `P(X=0) = x0`.
    pub fn binary_input_mi(&self, x0: f64) -> f64 {
        debug_assert_eq!(self.input_size(), 2);
        let ny = self.output_size();
        let mut stack = [0.0f64; 32];
        let mut heap;
        let table: &mut [f64] = if ny <= 16 {
            &mut stack[..2 * ny]
        } else {
            heap = vec![0.0; 2 * ny];
            &mut heap
        };
        for y in 0..ny {
            table[y] = x0 * self.rows[0][y];
            table[ny + y] = (1.0 - x0) * self.rows[1][y];
        }
        mi_table(table, 2, ny)
    }
}

impl Serialize for Channel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            rows: &'a [Vec<f64>],
        }
        Repr { rows: &self.rows }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Channel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            rows: Vec<Vec<f64>>,
        }
        Channel::new(Repr::deserialize(d)?.rows).map_err(serde::de::Error::custom)
    }
}

/// Two channels sharing an input alphabet.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BroadcastChannel {
    pub ch1: Channel,
    pub ch2: Channel,
}

impl BroadcastChannel {
    pub fn new(ch1: Channel, ch2: Channel) -> Result<Self> {
        if ch1.input_size() != ch2.input_size() {
            return Err(InfoError::DimensionMismatch {
                expected: ch1.input_size(),
                found: ch2.input_size(),
            });
        }
        Ok(BroadcastChannel { ch1, ch2 })
    }

    pub fn input_size(&self) -> usize {
        self.ch1.input_size()
    }
}

/// The binary skew-symmetric broadcast channel.
///
/// Y1 sees input 0 as a fair coin and input 1 cleanly; Y2 is the mirror.
pub fn make_bssc() -> BroadcastChannel {
    BroadcastChannel {
        ch1: Channel {
            rows: vec![vec![0.5, 0.5], vec![0.0, 1.0]],
        },
        ch2: Channel {
            rows: vec![vec![1.0, 0.0], vec![0.5, 0.5]],
        },
    }
}

/// `p(a, y) = Σ_x p(a, x) ch(y|x)`.
pub fn push_joint(j: &JointDist, ch: &Channel) -> Result<JointDist> {
    require_rank(j, 2)?;
    let (na, nx) = (j.shape[0], j.shape[1]);
    if nx != ch.input_size() {
        return Err(InfoError::DimensionMismatch {
            expected: ch.input_size(),
            found: nx,
        });
    }
    let ny = ch.output_size();
    let mut p = vec![0.0; na * ny];
    for a in 0..na {
        for x in 0..nx {
            let m = j.p[a * nx + x];
            if m == 0.0 {
                continue;
            }
            for y in 0..ny {
                p[a * ny + y] += m * ch.rows[x][y];
            }
        }
    }
    Ok(JointDist {
        shape: vec![na, ny],
        p,
    })
}

/// Capacity of a binary-input channel and the optimal input law.
pub fn single_user_capacity(ch: &Channel, grid_step: f64, tol: f64) -> Result<(f64, ProbVec)> {
    if ch.input_size() != 2 {
        return Err(InfoError::NotBinaryInput(ch.input_size()));
    }
    if !(grid_step > 0.0 && grid_step <= 0.5) {
        return Err(InfoError::GridStep(grid_step));
    }
    let (x0, value) = search::grid_then_golden(|x| ch.binary_input_mi(x), 0.0, 1.0, grid_step, tol);
    Ok((value, ProbVec::binary(x0)?))
}
