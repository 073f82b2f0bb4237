//! Structural reductions on auxiliary variables.
//!
//! A [`TripleDist`] is a joint law whose last axis is the channel input `X`
//! and whose other axes are auxiliaries: `(u, v, x)` for the inequality on
//! the skew-symmetric channel, `(w, x)` for the outer auxiliary of Marton's
//! sum rate.
//!
//! [`hajek_construct`] rewrites a stochastic map from the auxiliaries to `X`
//! as a deterministic map of the auxiliaries and an independent `W`, using
//! cumulative-probability intervals. [`reduce_support`] shrinks an auxiliary
//! alphabet to at most `|X|` symbols by multiplicative perturbations
//! `q = p (1 + eps L(a))` with `E[L | X = x] = 0`, which leave `p(x)`
//! untouched.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::info::{InfoError, JointDist, ProbVec, MASS_TOL};

/// Pivot threshold for the elimination.
pub const PIVOT_TOL: f64 = 1e-12;

/// Threshold merge distance for interval endpoints.
pub const ENDPOINT_TOL: f64 = 1e-12;

/// Tolerance on the linear constraints of a direction.
pub const DIRECTION_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error(transparent)]
    Info(#[from] InfoError),
    #[error("expected a rank-2 (w, x) or rank-3 (u, v, x) table, got rank {0}")]
    Rank(usize),
    #[error("axis {axis} is not an auxiliary axis of a rank-{rank} table")]
    Axis { axis: usize, rank: usize },
    #[error("direction has {found} entries, axis has {expected}")]
    DirectionLength { expected: usize, found: usize },
    #[error("step {epsilon} makes 1 + eps L({index}) = {factor} negative")]
    InvalidEpsilon {
        epsilon: f64,
        index: usize,
        factor: f64,
    },
}

pub type Result<T> = std::result::Result<T, ReductionError>;

/// Joint law with the channel input on the last axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JointDist", into = "JointDist")]
pub struct TripleDist {
    table: JointDist,
}

impl TryFrom<JointDist> for TripleDist {
    type Error = ReductionError;
    fn try_from(table: JointDist) -> Result<Self> {
        TripleDist::new(table)
    }
}

impl From<TripleDist> for JointDist {
    fn from(t: TripleDist) -> JointDist {
        t.table
    }
}

impl TripleDist {
    pub fn new(table: JointDist) -> Result<Self> {
        match table.rank() {
            2 | 3 => Ok(TripleDist { table }),
            r => Err(ReductionError::Rank(r)),
        }
    }

    pub fn table(&self) -> &JointDist {
        &self.table
    }

    pub fn shape(&self) -> &[usize] {
        self.table.shape()
    }

    pub fn rank(&self) -> usize {
        self.table.rank()
    }

    pub fn x_size(&self) -> usize {
        *self.shape().last().expect("rank >= 2")
    }

    /// Indices of the auxiliary axes.
    pub fn aux_axes(&self) -> std::ops::Range<usize> {
        0..self.rank() - 1
    }

    /// Short name of an auxiliary axis: `u`, `v` or `w`.
    pub fn axis_name(&self, axis: usize) -> &'static str {
        match (self.rank(), axis) {
            (2, 0) => "w",
            (3, 0) => "u",
            (3, 1) => "v",
            _ => "?",
        }
    }

    fn check_aux_axis(&self, axis: usize) -> Result<()> {
        if axis + 1 >= self.rank() {
            return Err(ReductionError::Axis {
                axis,
                rank: self.rank(),
            });
        }
        Ok(())
    }

    pub fn x_marginal(&self) -> ProbVec {
        self.table
            .marginal_axis(self.rank() - 1)
            .expect("valid axis")
    }

    /// Unnormalized marginal on one axis.
    pub fn axis_mass(&self, axis: usize) -> Vec<f64> {
        self.table
            .marginal(&[axis])
            .expect("valid axis")
            .probs()
            .to_vec()
    }

    pub fn support_size(&self, axis: usize) -> usize {
        self.axis_mass(axis).iter().filter(|&&m| m > 0.0).count()
    }

    /// Number of conditioning cells (product of the auxiliary alphabet sizes).
    pub fn cond_cells(&self) -> usize {
        self.shape()[..self.rank() - 1].iter().product()
    }

    /// `p(cond, x)` for a flat conditioning index.
    pub fn cond_row(&self, cond: usize) -> &[f64] {
        let nx = self.x_size();
        &self.table.probs()[cond * nx..(cond + 1) * nx]
    }

    /// Whether `X` is a function of the auxiliaries on their support.
    pub fn is_deterministic(&self) -> bool {
        (0..self.cond_cells()).all(|c| self.cond_row(c).iter().filter(|&&m| m > 0.0).count() <= 1)
    }

    /// Drops zero-mass symbols from every auxiliary axis.
    pub fn compact(&self) -> TripleDist {
        let shape = self.shape();
        let keep: Vec<Vec<usize>> = self
            .aux_axes()
            .map(|axis| {
                self.axis_mass(axis)
                    .iter()
                    .enumerate()
                    .filter(|(_, &m)| m > 0.0)
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        let mut new_shape: Vec<usize> = keep.iter().map(Vec::len).collect();
        new_shape.push(self.x_size());
        let mut p = Vec::with_capacity(new_shape.iter().product());
        match keep.len() {
            1 => {
                for &w in &keep[0] {
                    for x in 0..shape[1] {
                        p.push(self.table.get(&[w, x]));
                    }
                }
            }
            _ => {
                for &u in &keep[0] {
                    for &v in &keep[1] {
                        for x in 0..shape[2] {
                            p.push(self.table.get(&[u, v, x]));
                        }
                    }
                }
            }
        }
        TripleDist {
            table: JointDist::from_parts_unchecked(new_shape, p),
        }
    }

    /// Random `p(u, v)` with `X` a random function of `(u, v)`.
    pub fn random_deterministic<R: Rng + ?Sized>(
        rng: &mut R,
        nu: usize,
        nv: usize,
        nx: usize,
    ) -> Self {
        let cells = nu * nv;
        let weights = random_simplex(rng, cells);
        let mut p = vec![0.0; cells * nx];
        for (c, w) in weights.into_iter().enumerate() {
            p[c * nx + rng.gen_range(0..nx)] = w;
        }
        let table = JointDist::new(vec![nu, nv, nx], p).expect("random simplex point");
        TripleDist { table }
    }

    /// Random full-support `p(u, v, x)`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, nu: usize, nv: usize, nx: usize) -> Self {
        let p = random_simplex(rng, nu * nv * nx);
        TripleDist {
            table: JointDist::new(vec![nu, nv, nx], p).expect("random simplex point"),
        }
    }
}

fn random_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Index of every cell along `axis`, in flat order.
fn axis_index(shape: &[usize], axis: usize) -> impl Iterator<Item = usize> + '_ {
    let stride: usize = shape[axis + 1..].iter().product();
    let n = shape[axis];
    (0..shape.iter().product()).map(move |flat| (flat / stride) % n)
}

/// `A[x][a] = Σ p(..., a, ..., x)`: the constraints `E[L | X = x] = 0`
/// up to row scaling.
pub fn constraint_matrix(p: &TripleDist, axis: usize) -> Result<Vec<Vec<f64>>> {
    p.check_aux_axis(axis)?;
    let shape = p.shape();
    let nx = p.x_size();
    let mut a = vec![vec![0.0; shape[axis]]; nx];
    for (flat, (idx, &m)) in axis_index(shape, axis).zip(p.table.probs()).enumerate() {
        a[flat % nx][idx] += m;
    }
    Ok(a)
}

/// Reduced row echelon form in place; returns the pivot columns.
fn rref(m: &mut [Vec<f64>], tol: f64) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map(Vec::len).unwrap_or(0);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (best, val) = (r..rows)
            .map(|i| (i, m[i][c].abs()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val < tol {
            continue;
        }
        m.swap(r, best);
        let pivot = m[r][c];
        for x in m[r].iter_mut() {
            *x /= pivot;
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            let factor = row[c];
            if i != r && factor != 0.0 {
                for (x, p) in row.iter_mut().zip(&pivot_row) {
                    *x -= factor * p;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Perturbation direction `L` on one auxiliary axis with its step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovDirection {
    pub axis: usize,
    #[serde(rename = "L")]
    pub l: Vec<f64>,
    #[serde(rename = "eps")]
    pub epsilon: f64,
}

impl LyapunovDirection {
    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        LyapunovDirection {
            epsilon,
            ..self.clone()
        }
    }

    /// Largest violation of `Σ_a p(a) L(a) = 0` and `E[L | X = x] = 0`.
    pub fn constraint_residual(&self, p: &TripleDist) -> Result<f64> {
        let a = constraint_matrix(p, self.axis)?;
        let mut worst: f64 = 0.0;
        let mut total = 0.0;
        for row in &a {
            let r: f64 = row.iter().zip(&self.l).map(|(m, l)| m * l).sum();
            total += r;
            let px: f64 = row.iter().sum();
            if px > 0.0 {
                worst = worst.max((r / px).abs());
            }
        }
        Ok(worst.max(total.abs()))
    }

    /// `min over the support of 1 + eps L(a)`.
    pub fn min_factor(&self, p: &TripleDist) -> f64 {
        p.axis_mass(self.axis)
            .iter()
            .zip(&self.l)
            .filter(|(&m, _)| m > 0.0)
            .map(|(_, &l)| 1.0 + self.epsilon * l)
            .fold(f64::INFINITY, f64::min)
    }

    /// All invariants: linear constraints within [`DIRECTION_TOL`] and a
    /// support-killing step.
    pub fn is_valid_for(&self, p: &TripleDist) -> bool {
        self.l.len() == p.shape()[self.axis]
            && self
                .constraint_residual(p)
                .map(|r| r <= DIRECTION_TOL)
                .unwrap_or(false)
            && self.min_factor(p).abs() <= DIRECTION_TOL
    }
}

/// A nonzero `L` on the support of `axis` with `E[L | X = x] = 0` for all
/// `x`, or `None` when the constraints only admit `L = 0`.
///
/// The vector is the last free-variable basis vector of the elimination,
/// unit-normalized with its first nonzero entry positive; `epsilon` is the
/// step at which `1 + eps L` first reaches zero on the support.
pub fn null_space_direction(p: &TripleDist, axis: usize) -> Result<Option<LyapunovDirection>> {
    let a = constraint_matrix(p, axis)?;
    let mass = p.axis_mass(axis);
    let support: Vec<usize> = (0..mass.len()).filter(|&i| mass[i] > 0.0).collect();
    if support.len() < 2 {
        return Ok(None);
    }
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .map(|row| support.iter().map(|&s| row[s]).collect())
        .collect();
    let pivots = rref(&mut m, PIVOT_TOL);
    let free = match (0..support.len()).rev().find(|c| !pivots.contains(c)) {
        Some(c) => c,
        None => return Ok(None),
    };
    let mut v = vec![0.0; support.len()];
    v[free] = 1.0;
    for (row, &pc) in pivots.iter().enumerate() {
        v[pc] = -m[row][free];
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let first = v.iter().copied().find(|x| *x != 0.0).unwrap_or(1.0);
    let sign = if first < 0.0 { -1.0 } else { 1.0 };
    let mut l = vec![0.0; mass.len()];
    for (k, &s) in support.iter().enumerate() {
        l[s] = sign * v[k] / norm;
    }
    let min_l = support.iter().map(|&s| l[s]).fold(f64::INFINITY, f64::min);
    if min_l >= 0.0 {
        // Σ p(a) L(a) = 0 with p > 0 forces a negative entry; this only
        // happens when elimination noise swamps the constraint.
        return Ok(None);
    }
    Ok(Some(LyapunovDirection {
        axis,
        l,
        epsilon: -1.0 / min_l,
    }))
}

/// `q = p (1 + eps L(a))` along the direction's axis.
///
/// Factors within `MASS_TOL` of zero are set to exactly zero, so the
/// support-killing step removes a symbol cleanly.
pub fn apply_perturbation(p: &TripleDist, dir: &LyapunovDirection) -> Result<TripleDist> {
    p.check_aux_axis(dir.axis)?;
    let n = p.shape()[dir.axis];
    if dir.l.len() != n {
        return Err(ReductionError::DirectionLength {
            expected: n,
            found: dir.l.len(),
        });
    }
    let mass = p.axis_mass(dir.axis);
    let mut factors = vec![0.0; n];
    for a in 0..n {
        let f = 1.0 + dir.epsilon * dir.l[a];
        if mass[a] > 0.0 && f < -MASS_TOL {
            return Err(ReductionError::InvalidEpsilon {
                epsilon: dir.epsilon,
                index: a,
                factor: f,
            });
        }
        factors[a] = if f.abs() <= MASS_TOL { 0.0 } else { f };
    }
    let q: Vec<f64> = axis_index(p.shape(), dir.axis)
        .zip(p.table.probs())
        .map(|(a, &m)| m * factors[a])
        .collect();
    Ok(TripleDist {
        table: JointDist::new(p.shape().to_vec(), q)?,
    })
}

/// One support-killing step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionStep {
    pub axis: String,
    #[serde(rename = "L")]
    pub l: Vec<f64>,
    pub eps: f64,
    pub obj_before: f64,
    pub obj_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reduction {
    /// The reduced law with zero-mass auxiliary symbols dropped.
    pub reduced: TripleDist,
    /// Certificates in the order applied, indexed by the original alphabets.
    pub steps: Vec<ReductionStep>,
}

impl Reduction {
    /// Replays the certificates from `original`, checking every direction
    /// against the law it was applied to. Returns the uncompacted end state.
    pub fn replay(&self, original: &TripleDist) -> std::result::Result<TripleDist, String> {
        let mut cur = original.clone();
        for (k, step) in self.steps.iter().enumerate() {
            let axis = cur
                .aux_axes()
                .find(|&a| cur.axis_name(a) == step.axis)
                .ok_or_else(|| format!("step {k}: unknown axis {}", step.axis))?;
            let dir = LyapunovDirection {
                axis,
                l: step.l.clone(),
                epsilon: step.eps,
            };
            if !dir.is_valid_for(&cur) {
                return Err(format!("step {k}: direction violates its constraints"));
            }
            let before = cur.support_size(axis);
            cur = apply_perturbation(&cur, &dir).map_err(|e| format!("step {k}: {e}"))?;
            if cur.support_size(axis) >= before {
                return Err(format!("step {k}: support did not shrink"));
            }
        }
        Ok(cur)
    }
}

/// Kill auxiliary symbols axis by axis (`u` then `v`, or `w`) until the
/// support is at most `|X|` or no nonzero direction remains. `objective` is evaluated before and after
/// every step and recorded in the certificate; it is not required to be
/// preserved.
pub fn reduce_support<F>(p: &TripleDist, objective: F) -> Result<Reduction>
where
    F: Fn(&TripleDist) -> f64,
{
    let mut cur = p.clone();
    let mut steps = Vec::new();
    let nx = p.x_size();
    for axis in p.aux_axes() {
        while cur.support_size(axis) > nx {
            let Some(dir) = null_space_direction(&cur, axis)? else {
                break;
            };
            let before = objective(&cur);
            let next = apply_perturbation(&cur, &dir)?;
            let after = objective(&next);
            steps.push(ReductionStep {
                axis: cur.axis_name(axis).to_string(),
                l: dir.l,
                eps: dir.epsilon,
                obj_before: before,
                obj_after: after,
            });
            cur = next;
        }
    }
    Ok(Reduction {
        reduced: cur.compact(),
        steps,
    })
}

/// `X` as a deterministic function of the auxiliaries and an independent `W`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalizationResult {
    /// Law of `W`: the interval lengths.
    #[serde(rename = "w")]
    pub w_dist: ProbVec,
    pub intervals: Vec<(f64, f64)>,
    /// Auxiliary alphabet sizes, i.e. the shape of the conditioning cells.
    pub cond_shape: Vec<usize>,
    /// `map[c][w]`: the value of `X` for flat conditioning cell `c`.
    pub map: Vec<Vec<usize>>,
}

impl FunctionalizationResult {
    pub fn w_size(&self) -> usize {
        self.w_dist.len()
    }

    /// `f(cond, w)`.
    pub fn x_of(&self, cond: &[usize], w: usize) -> usize {
        let flat = cond
            .iter()
            .zip(&self.cond_shape)
            .fold(0, |acc, (&i, &n)| acc * n + i);
        self.map[flat][w]
    }

    /// `Σ_w p(w) 1{f(c, w) = x}` for flat cell `c`.
    pub fn recompose(&self, cond: usize, nx: usize) -> Vec<f64> {
        let mut out = vec![0.0; nx];
        for (w, &x) in self.map[cond].iter().enumerate() {
            out[x] += self.w_dist[w];
        }
        out
    }

    /// Largest `|recomposed - p(x | c)|` over cells of positive mass.
    pub fn max_recomposition_error(&self, p: &TripleDist) -> f64 {
        let nx = p.x_size();
        (0..p.cond_cells())
            .filter_map(|c| {
                let row = p.cond_row(c);
                let mass: f64 = row.iter().sum();
                (mass > 0.0).then(|| {
                    self.recompose(c, nx)
                        .iter()
                        .zip(row)
                        .map(|(r, &m)| (r - m / mass).abs())
                        .fold(0.0, f64::max)
                })
            })
            .fold(0.0, f64::max)
    }
}

/// Interval construction of `W`: mark every cumulative threshold
/// `P(X <= i | cell)` on `[0, 1]`, let `W` be the resulting interval, and
/// send `(cell, w)` to the `x` whose cumulative band contains interval `w`.
pub fn hajek_construct(p: &TripleDist) -> FunctionalizationResult {
    let nx = p.x_size();
    let cells = p.cond_cells();
    let cumulative: Vec<Vec<f64>> = (0..cells)
        .map(|c| {
            let row = p.cond_row(c);
            let mass: f64 = row.iter().sum();
            let mut t = Vec::with_capacity(nx);
            let mut acc = 0.0;
            for &m in row {
                acc += if mass > 0.0 { m / mass } else { 0.0 };
                t.push(acc);
            }
            if mass <= 0.0 {
                // no conditional law: send everything to x = 0
                t.iter_mut().for_each(|x| *x = 1.0);
            }
            *t.last_mut().expect("nx >= 1") = 1.0;
            t
        })
        .collect();

    let mut points: Vec<f64> = cumulative.iter().flatten().copied().collect();
    points.push(0.0);
    points.sort_by(f64::total_cmp);
    let mut marks: Vec<f64> = Vec::with_capacity(points.len());
    for x in points {
        match marks.last() {
            Some(&last) if x - last <= ENDPOINT_TOL => {}
            _ => marks.push(x.clamp(0.0, 1.0)),
        }
    }
    if let Some(last) = marks.last_mut() {
        *last = 1.0;
    }

    let intervals: Vec<(f64, f64)> = marks.windows(2).map(|w| (w[0], w[1])).collect();
    let lengths: Vec<f64> = intervals.iter().map(|(a, b)| b - a).collect();
    let map = cumulative
        .iter()
        .map(|t| {
            intervals
                .iter()
                .map(|&(a, b)| {
                    let mid = 0.5 * (a + b);
                    t.iter().position(|&ti| ti >= mid).unwrap_or(nx - 1)
                })
                .collect()
        })
        .collect();
    FunctionalizationResult {
        w_dist: ProbVec::new(lengths).expect("interval lengths telescope to 1"),
        intervals,
        cond_shape: p.shape()[..p.rank() - 1].to_vec(),
        map,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn triple(shape: Vec<usize>, p: Vec<f64>) -> TripleDist {
        TripleDist::new(JointDist::new(shape, p).unwrap()).unwrap()
    }

    #[test]
    fn rejects_bad_rank() {
        let j = JointDist::new(vec![4], vec![0.25; 4]).unwrap();
        assert!(matches!(TripleDist::new(j), Err(ReductionError::Rank(1))));
    }

    #[test]
    fn hajek_deterministic_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = TripleDist::random_deterministic(&mut rng, 2, 2, 2);
        let f = hajek_construct(&p);
        assert!(f.max_recomposition_error(&p) < 1e-15);
        for c in 0..4 {
            let first = f.map[c][0];
            if p.cond_row(c).iter().sum::<f64>() > 0.0 {
                assert!(f.map[c].iter().all(|&x| x == first));
            }
        }
    }

    #[test]
    fn hajek_fair_coin() {
        let p = triple(vec![2, 2, 2], vec![0.125; 8]);
        let f = hajek_construct(&p);
        assert_eq!(f.w_dist.values(), &[0.5, 0.5]);
        for u in 0..2 {
            for v in 0..2 {
                for w in 0..2 {
                    assert_eq!(f.x_of(&[u, v], w), w);
                }
            }
        }
    }

    #[test]
    fn hajek_random_recomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let p = TripleDist::random(&mut rng, 2, 2, 2);
            let f = hajek_construct(&p);
            assert!(f.max_recomposition_error(&p) <= 1e-12);
            assert!(f.w_size() <= 8);
        }
        let p = TripleDist::random(&mut rng, 3, 2, 4);
        let f = hajek_construct(&p);
        assert!(f.max_recomposition_error(&p) <= 1e-12);
        assert!(f.w_size() <= 24);
    }

    #[test]
    fn hajek_rank2() {
        let p = triple(vec![2, 3], vec![0.1, 0.2, 0.2, 0.3, 0.0, 0.2]);
        let f = hajek_construct(&p);
        assert!(f.max_recomposition_error(&p) <= 1e-12);
        assert_eq!(f.cond_shape, vec![2]);
    }

    #[test]
    fn no_direction_when_u_matches_x() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let p = TripleDist::random(&mut rng, 2, 2, 2);
            assert!(null_space_direction(&p, 0).unwrap().is_none());
        }
    }

    #[test]
    fn direction_exists_when_u_exceeds_x() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let p = TripleDist::random_deterministic(&mut rng, 3, 2, 2);
            let dir = null_space_direction(&p, 0)
                .unwrap()
                .expect("nontrivial null space");
            assert!(dir.is_valid_for(&p));
            let norm: f64 = dir.l.iter().map(|x| x * x).sum();
            assert!((norm - 1.0).abs() < 1e-12);
            assert!(dir.l.iter().find(|x| **x != 0.0).unwrap() > &0.0);
        }
    }

    #[test]
    fn duplicate_rows_give_opposite_signs() {
        // u = 0 and u = 1 have the same conditional law of (v, x)
        let cond = [0.2, 0.3, 0.4, 0.1];
        let mut p = Vec::new();
        for (w, _) in [0.3, 0.2].iter().zip(0..) {
            p.extend(cond.iter().map(|c| c * w));
        }
        p.extend([0.05, 0.1, 0.2, 0.15]);
        let p = triple(vec![3, 2, 2], p);
        // 2 x 3 constraint matrix; the third column is generic, so the
        // null space is spanned by the duplicate pair.
        let dir = null_space_direction(&p, 0).unwrap().unwrap();
        assert!(dir.l[2].abs() < 1e-12);
        assert!(dir.l[0] > 0.0 && dir.l[1] < 0.0);
        assert!((0.3 * dir.l[0] + 0.2 * dir.l[1]).abs() < 1e-12);
    }

    #[test]
    fn perturbation_identity_and_kill() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = TripleDist::random_deterministic(&mut rng, 3, 2, 2);
        let dir = null_space_direction(&p, 0).unwrap().unwrap();
        let same = apply_perturbation(&p, &dir.with_epsilon(0.0)).unwrap();
        assert_eq!(same, p);

        let q = apply_perturbation(&p, &dir).unwrap();
        assert!(q.support_size(0) < p.support_size(0));
        let (px, qx) = (p.x_marginal(), q.x_marginal());
        for x in 0..2 {
            assert!((px[x] - qx[x]).abs() <= 1e-14);
        }
        for (a, b) in p.table().probs().iter().zip(q.table().probs()) {
            if *a == 0.0 {
                assert_eq!(*b, 0.0);
            }
        }
        assert!(q.is_deterministic());

        let half = dir.with_epsilon(dir.epsilon * 0.5);
        let r = apply_perturbation(&p, &half).unwrap();
        for x in 0..2 {
            assert!((px[x] - r.x_marginal()[x]).abs() <= 1e-14);
        }
        assert!(matches!(
            apply_perturbation(&p, &dir.with_epsilon(dir.epsilon * 2.0)),
            Err(ReductionError::InvalidEpsilon { .. })
        ));
    }

    #[test]
    fn reduce_support_basic() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = TripleDist::random_deterministic(&mut rng, 3, 3, 2);
        let r = reduce_support(&p, |_| 0.0).unwrap();
        assert!(r.reduced.shape()[0] <= 2 && r.reduced.shape()[1] <= 2);
        let end = r.replay(&p).unwrap();
        let (px, qx) = (p.x_marginal(), end.x_marginal());
        for x in 0..2 {
            assert!((px[x] - qx[x]).abs() <= 1e-14);
        }
        assert_eq!(r.reduced.x_marginal(), end.x_marginal());
    }

    #[test]
    fn reduce_support_noop() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = TripleDist::random(&mut rng, 2, 2, 2);
        let r = reduce_support(&p, |_| 0.0).unwrap();
        assert!(r.steps.is_empty());
        assert_eq!(r.reduced, p);
    }

    #[test]
    fn reduce_lifted_and_maximizer() {
        use crate::conjecture::{lhs_general, maximize_lhs, BoolFunc2};
        let (_, j) = maximize_lhs(BoolFunc2::AND, 0.05, 20).unwrap();
        // the maximizer puts all mass on u = 1; lift every used u to three
        // copies so that |U| = 3 on the support
        let used = if j.get(0, 0) + j.get(0, 1) > 0.0 {
            0
        } else {
            1
        };
        assert_eq!(j.get(1 - used, 0) + j.get(1 - used, 1), 0.0);
        let split = [(used, 0.2), (used, 0.3), (used, 0.5)];
        let mut p = vec![0.0; 12];
        for (u, &(orig, w)) in split.iter().enumerate() {
            for v in 0..2 {
                let x = BoolFunc2::AND.eval(orig, v);
                p[(u * 2 + v) * 2 + x] = w * j.get(orig, v);
            }
        }
        let p = triple(vec![3, 2, 2], p);
        let obj = |t: &TripleDist| lhs_general(t.table()).unwrap();
        let r = reduce_support(&p, obj).unwrap();
        assert_eq!(r.steps.len(), 1);
        assert_eq!(r.reduced.support_size(0), 2);
        for s in &r.steps {
            assert!(s.obj_after >= s.obj_before - 1e-4);
        }
        assert!((obj(&r.reduced) - obj(&p)).abs() < 1e-4);
    }

    #[test]
    fn reduce_rank2_w_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = triple(vec![4, 2], random_simplex(&mut rng, 8));
        let r = reduce_support(&p, |_| 0.0).unwrap();
        assert_eq!(r.reduced.shape()[0], 2);
        assert!(r.steps.iter().all(|s| s.axis == "w"));
    }

    #[test]
    fn certificate_json() {
        let step = ReductionStep {
            axis: "u".into(),
            l: vec![0.5, -0.5],
            eps: 2.0,
            obj_before: 0.1,
            obj_after: 0.1,
        };
        assert_eq!(
            serde_json::to_string(&step).unwrap(),
            r#"{"axis":"u","L":[0.5,-0.5],"eps":2.0,"obj_before":0.1,"obj_after":0.1}"#
        );
    }

    #[test]
    fn triple_json_round_trip() {
        let p = triple(vec![2, 2], vec![0.25; 4]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"shape":[2,2],"p":[0.25,0.25,0.25,0.25]}"#);
        assert_eq!(serde_json::from_str::<TripleDist>(&s).unwrap(), p);
        assert!(
            serde_json::from_str::<TripleDist>(r#"{"shape":[4],"p":[0.25,0.25,0.25,0.25]}"#)
                .is_err()
        );
    }
}
