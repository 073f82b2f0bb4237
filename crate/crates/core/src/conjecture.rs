//! The broadcast inequality `I(U;Y1) + I(V;Y2) - I(U;V) <= max(I(X;Y1), I(X;Y2))`
//! on the skew-symmetric channel, for binary `U, V` and `X = f(U, V)`.
//!
//! Joints over `(U, V)` are stored as `[p00, p01, p10, p11]`, cell index
//! `2u + v`. The generic evaluation path is [`induced_triple`] /
//! [`objective`]; the closed forms for AND and OR, the stationarity
//! residuals and the perturbation forms are checked against it.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::info::{
    self, binary_entropy_unchecked as h, entropy_of, make_bssc, mi_table, BroadcastChannel,
    InfoError, JointDist, ProbVec, MASS_TOL, ZERO_MASS,
};

/// Default tolerance for calling a grid maximum a violation, in bits.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Denominators below this route the AND ratio tests to the boundary cases.
pub const DENOM_GUARD: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ConjectureError {
    #[error(transparent)]
    Info(#[from] InfoError),
    #[error("{name} = {value} outside [0, 1]")]
    Parameter { name: &'static str, value: f64 },
    #[error("grid step {0} must lie in (0, 1/2] and divide 1")]
    GridStep(f64),
    #[error("cell p{0:02b} has zero mass; boundary points reduce to an AND-type case")]
    ZeroMass(usize),
    #[error("perturbation coefficients must be nonnegative")]
    NegativeCoefficient,
    #[error("unknown boolean function {0:?}")]
    UnknownFunction(String),
    #[error("step {epsilon} leaves the simplex")]
    InvalidStep { epsilon: f64 },
}

pub type Result<T> = std::result::Result<T, ConjectureError>;

fn bssc() -> &'static BroadcastChannel {
    static BSSC: OnceLock<BroadcastChannel> = OnceLock::new();
    BSSC.get_or_init(make_bssc)
}

/// Joint law of binary `(U, V)`, `P(U=u, V=v) = p[2u + v]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct JointUV([f64; 4]);

impl JointUV {
    pub fn new(p00: f64, p01: f64, p10: f64, p11: f64) -> Result<Self> {
        Self::from_array([p00, p01, p10, p11])
    }

    pub fn from_array(p: [f64; 4]) -> Result<Self> {
        let v = ProbVec::new(p.to_vec())?;
        Ok(JointUV([v[0], v[1], v[2], v[3]]))
    }

    /// Integer grid point `idx / n`. The coordinates sum to 1 up to rounding.
    pub fn grid_point(idx: [usize; 4], n: usize) -> Self {
        let n = n as f64;
        JointUV(idx.map(|k| k as f64 / n))
    }

    pub fn uniform() -> Self {
        JointUV([0.25; 4])
    }

    /// A uniform draw from the 3-simplex.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let e: [f64; 4] = std::array::from_fn(|_| -(1.0 - rng.gen::<f64>()).ln());
        let s: f64 = e.iter().sum();
        JointUV(e.map(|x| x / s))
    }

    pub fn probs(&self) -> [f64; 4] {
        self.0
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.0[2 * u + v]
    }

    /// Relabel `U` (0 <-> 1).
    pub fn flip_u(&self) -> Self {
        let [a, b, c, d] = self.0;
        JointUV([c, d, a, b])
    }

    /// Relabel `V` (0 <-> 1).
    pub fn flip_v(&self) -> Self {
        let [a, b, c, d] = self.0;
        JointUV([b, a, d, c])
    }

    /// Euclidean distance between two joints.
    pub fn distance(&self, other: &JointUV) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn to_joint_dist(&self) -> JointDist {
        JointDist::from_parts_unchecked(vec![2, 2], self.0.to_vec())
    }
}

impl TryFrom<[f64; 4]> for JointUV {
    type Error = ConjectureError;
    fn try_from(p: [f64; 4]) -> Result<Self> {
        JointUV::from_array(p)
    }
}

impl From<JointUV> for [f64; 4] {
    fn from(j: JointUV) -> [f64; 4] {
        j.0
    }
}

/// The seven relabeling classes of boolean functions on two bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionClass {
    Const0,
    Const1,
    U,
    V,
    And,
    Or,
    Xor,
}

impl fmt::Display for FunctionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FunctionClass::Const0 => "const0",
            FunctionClass::Const1 => "const1",
            FunctionClass::U => "u",
            FunctionClass::V => "v",
            FunctionClass::And => "and",
            FunctionClass::Or => "or",
            FunctionClass::Xor => "xor",
        };
        f.write_str(s)
    }
}

/// `X = f(U, V)`, addressed by its truth table `f(00) f(01) f(10) f(11)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BoolFunc2([u8; 4]);

impl BoolFunc2 {
    pub const CONST0: BoolFunc2 = BoolFunc2([0, 0, 0, 0]);
    pub const CONST1: BoolFunc2 = BoolFunc2([1, 1, 1, 1]);
    pub const U: BoolFunc2 = BoolFunc2([0, 0, 1, 1]);
    pub const V: BoolFunc2 = BoolFunc2([0, 1, 0, 1]);
    pub const AND: BoolFunc2 = BoolFunc2([0, 0, 0, 1]);
    pub const OR: BoolFunc2 = BoolFunc2([0, 1, 1, 1]);
    pub const XOR: BoolFunc2 = BoolFunc2([0, 1, 1, 0]);

    pub fn from_table(table: [bool; 4]) -> Self {
        BoolFunc2(table.map(u8::from))
    }

    /// Function number `k` in `0..16`, most significant bit = `f(00)`.
    pub fn from_index(k: u8) -> Self {
        BoolFunc2(std::array::from_fn(|i| (k >> (3 - i)) & 1))
    }

    pub fn index(&self) -> u8 {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b)
    }

    /// All sixteen functions in truth-table order.
    pub fn all() -> impl Iterator<Item = BoolFunc2> {
        (0..16).map(BoolFunc2::from_index)
    }

    #[inline]
    pub fn eval(&self, u: usize, v: usize) -> usize {
        self.0[2 * u + v] as usize
    }

    pub fn table(&self) -> [u8; 4] {
        self.0
    }

    pub fn code(&self) -> String {
        self.0
            .iter()
            .map(|b| if *b == 1 { '1' } else { '0' })
            .collect()
    }

    pub fn flip_u(&self) -> Self {
        let [a, b, c, d] = self.0;
        BoolFunc2([c, d, a, b])
    }

    pub fn flip_v(&self) -> Self {
        let [a, b, c, d] = self.0;
        BoolFunc2([b, a, d, c])
    }

    pub fn negate(&self) -> Self {
        BoolFunc2(self.0.map(|b| 1 - b))
    }

    /// Orbit under relabeling `U`, `V`, or both.
    pub fn relabelings(&self) -> [BoolFunc2; 4] {
        [*self, self.flip_u(), self.flip_v(), self.flip_u().flip_v()]
    }

    pub fn class(&self) -> FunctionClass {
        canonical_class(*self)
    }
}

impl fmt::Display for BoolFunc2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

impl FromStr for BoolFunc2 {
    type Err = ConjectureError;

    fn from_str(s: &str) -> Result<Self> {
        let named = match s.to_ascii_lowercase().as_str() {
            "and" => Some(BoolFunc2::AND),
            "or" => Some(BoolFunc2::OR),
            "xor" => Some(BoolFunc2::XOR),
            "u" => Some(BoolFunc2::U),
            "v" => Some(BoolFunc2::V),
            "const0" => Some(BoolFunc2::CONST0),
            "const1" => Some(BoolFunc2::CONST1),
            _ => None,
        };
        if let Some(f) = named {
            return Ok(f);
        }
        let bytes = s.as_bytes();
        if bytes.len() == 4 && bytes.iter().all(|b| *b == b'0' || *b == b'1') {
            return Ok(BoolFunc2(std::array::from_fn(|i| bytes[i] - b'0')));
        }
        Err(ConjectureError::UnknownFunction(s.to_string()))
    }
}

impl TryFrom<String> for BoolFunc2 {
    type Error = ConjectureError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BoolFunc2> for String {
    fn from(f: BoolFunc2) -> String {
        f.code()
    }
}

/// Class of `f` under relabeling of `U` and/or `V`.
///
/// The class is read off the smallest truth table in the orbit.
pub fn canonical_class(f: BoolFunc2) -> FunctionClass {
    let rep = f.relabelings().into_iter().min().expect("nonempty orbit");
    match rep.0 {
        [0, 0, 0, 0] => FunctionClass::Const0,
        [1, 1, 1, 1] => FunctionClass::Const1,
        [0, 0, 1, 1] => FunctionClass::U,
        [0, 1, 0, 1] => FunctionClass::V,
        [0, 0, 0, 1] => FunctionClass::And,
        [0, 1, 1, 1] => FunctionClass::Or,
        [0, 1, 1, 0] => FunctionClass::Xor,
        other => unreachable!("orbit minimum {other:?} is not a class representative"),
    }
}

/// Stack-allocated version of [`InducedTriple`].
#[derive(Debug, Clone, Copy)]
struct Tables {
    uv: [f64; 4],
    uy1: [f64; 4],
    vy2: [f64; 4],
    x: [f64; 2],
}

fn induced_tables(j: &JointUV, f: BoolFunc2) -> Tables {
    let bc = bssc();
    let mut ux = [0.0; 4];
    let mut vx = [0.0; 4];
    let mut x = [0.0; 2];
    for u in 0..2 {
        for v in 0..2 {
            let m = j.get(u, v);
            let xv = f.eval(u, v);
            ux[2 * u + xv] += m;
            vx[2 * v + xv] += m;
            x[xv] += m;
        }
    }
    let push = |ax: &[f64; 4], ch: &info::Channel| {
        let mut out = [0.0; 4];
        for a in 0..2 {
            for xv in 0..2 {
                let m = ax[2 * a + xv];
                for y in 0..2 {
                    out[2 * a + y] += m * ch.prob(xv, y);
                }
            }
        }
        out
    };
    Tables {
        uv: j.0,
        uy1: push(&ux, &bc.ch1),
        vy2: push(&vx, &bc.ch2),
        x,
    }
}

/// The laws `p(u, y1)`, `p(v, y2)` and `p(x)` induced by `j` and `X = f(U, V)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedTriple {
    pub p_uy1: JointDist,
    pub p_vy2: JointDist,
    pub p_x: ProbVec,
}

pub fn induced_triple(j: &JointUV, f: BoolFunc2) -> InducedTriple {
    let t = induced_tables(j, f);
    InducedTriple {
        p_uy1: JointDist::from_parts_unchecked(vec![2, 2], t.uy1.to_vec()),
        p_vy2: JointDist::from_parts_unchecked(vec![2, 2], t.vy2.to_vec()),
        p_x: ProbVec::new(t.x.to_vec()).expect("pushforward of a valid joint"),
    }
}

/// Both sides of the inequality at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Objective {
    pub lhs: f64,
    pub rhs: f64,
}

impl Objective {
    pub fn gap(&self) -> f64 {
        self.lhs - self.rhs
    }
}

/// `I(X;Y1)` and `I(X;Y2)` for a binary input law on the skew-symmetric channel.
fn input_mis(x: &[f64; 2]) -> (f64, f64) {
    let bc = bssc();
    (bc.ch1.binary_input_mi(x[0]), bc.ch2.binary_input_mi(x[0]))
}

pub fn objective(j: &JointUV, f: BoolFunc2) -> Objective {
    let t = induced_tables(j, f);
    let lhs = mi_table(&t.uy1, 2, 2) + mi_table(&t.vy2, 2, 2) - mi_table(&t.uv, 2, 2);
    let (i1, i2) = input_mis(&t.x);
    Objective {
        lhs,
        rhs: i1.max(i2),
    }
}

/// Left-hand side for an arbitrary `p(u, v, x)` on the skew-symmetric channel.
///
/// Used for stochastic maps `(U, V) -> X` and alphabets larger than binary.
pub fn lhs_general(p_uvx: &JointDist) -> Result<f64> {
    if p_uvx.rank() != 3 || p_uvx.shape()[2] != 2 {
        return Err(InfoError::Rank {
            expected: 3,
            found: p_uvx.rank(),
        }
        .into());
    }
    let bc = bssc();
    let uy1 = info::push_joint(&p_uvx.marginal(&[0, 2])?, &bc.ch1)?;
    let vy2 = info::push_joint(&p_uvx.marginal(&[1, 2])?, &bc.ch2)?;
    let uv = p_uvx.marginal(&[0, 1])?;
    Ok(
        info::mutual_information(&uy1)? + info::mutual_information(&vy2)?
            - info::mutual_information(&uv)?,
    )
}

/// `w * h(num / w)`, zero when `w` vanishes.
#[inline]
fn wh(w: f64, num: f64) -> f64 {
    if w <= ZERO_MASS {
        0.0
    } else {
        w * h(num / w)
    }
}

/// Closed-form left-hand side for `X = U AND V`.
pub fn lhs_closed_form_and(j: &JointUV) -> f64 {
    let [p00, p01, p10, p11] = j.0;
    let h_half = 1.0;
    h((p00 + p01 + p10) / 2.0) - (p00 + p01) * h_half - wh(p10 + p11, p10 / 2.0) + h(p11 / 2.0)
        - wh(p01 + p11, p11 / 2.0)
        - h(p00 + p01)
        + wh(p00 + p10, p00)
        + wh(p01 + p11, p01)
}

/// Closed-form left-hand side for `X = U OR V`.
pub fn lhs_closed_form_or(j: &JointUV) -> f64 {
    let [q00, q01, q10, q11] = j.0;
    let h_half = 1.0;
    h(q00 / 2.0) - wh(q01 + q00, q00 / 2.0) + h((q11 + q01 + q10) / 2.0)
        - (q11 + q01) * h_half
        - wh(q10 + q00, q10 / 2.0)
        - h(q11 + q01)
        + wh(q11 + q10, q11)
        + wh(q01 + q00, q01)
}

/// The map `p00 <-> q11, p01 <-> q01, p10 <-> q10, p11 <-> q00` relating
/// the AND and OR cases. It is an involution.
pub fn and_or_bijection(j: &JointUV) -> JointUV {
    let [p00, p01, p10, p11] = j.0;
    JointUV([p11, p01, p10, p00])
}

/// For a XOR joint with one zero cell, the AND/OR-type function that agrees
/// with XOR on the remaining support.
pub fn xor_boundary_equivalent(zero_cell: usize) -> Option<BoolFunc2> {
    // p00 = 0: NOT X = U AND V; p01 = 0: X = U AND NOT V;
    // p10 = 0: X = NOT U AND V; p11 = 0: NOT X = NOT U AND NOT V.
    match zero_cell {
        0 => Some(BoolFunc2::AND.negate()),
        1 => Some(BoolFunc2::AND.flip_v()),
        2 => Some(BoolFunc2::AND.flip_u()),
        3 => Some(BoolFunc2::AND.flip_u().flip_v().negate()),
        _ => None,
    }
}

/// Result of scanning one function over the simplex grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    #[serde(rename = "function")]
    pub func: BoolFunc2,
    pub class: FunctionClass,
    pub step: f64,
    #[serde(rename = "points")]
    pub points_checked: usize,
    pub max_gap: f64,
    #[serde(rename = "argmax")]
    pub arg_max: JointUV,
    pub violated: bool,
}

/// Number of grid cells per unit for `step`, if `step` divides 1.
pub fn grid_resolution(step: f64) -> Result<usize> {
    if !(step > 0.0 && step <= 0.5) || !step.is_finite() {
        return Err(ConjectureError::GridStep(step));
    }
    let n = (1.0 / step).round();
    if (n * step - 1.0).abs() > 1e-9 {
        return Err(ConjectureError::GridStep(step));
    }
    Ok(n as usize)
}

/// Number of points `(i, j, k, l) >= 0` with `i + j + k + l = n`.
pub fn grid_size(n: usize) -> usize {
    (n + 1) * (n + 2) * (n + 3) / 6
}

#[derive(Debug, Clone, Copy)]
struct Best {
    value: f64,
    idx: [usize; 4],
    count: usize,
}

impl Best {
    const EMPTY: Best = Best {
        value: f64::NEG_INFINITY,
        idx: [usize::MAX; 4],
        count: 0,
    };

    /// Max by value; ties go to the lexicographically smaller index.
    fn merge(self, other: Best) -> Best {
        let keep_other =
            other.value > self.value || (other.value == self.value && other.idx < self.idx);
        let mut out = if keep_other { other } else { self };
        out.count = self.count + other.count;
        out
    }
}

/// Parallel max of `eval` over the grid `{idx / n}`.
fn grid_max<F>(n: usize, eval: F) -> Best
where
    F: Fn(&JointUV) -> f64 + Sync,
{
    (0..=n)
        .into_par_iter()
        .map(|i| {
            let mut best = Best::EMPTY;
            for j in 0..=n - i {
                for k in 0..=n - i - j {
                    let idx = [i, j, k, n - i - j - k];
                    let value = eval(&JointUV::grid_point(idx, n));
                    best = best.merge(Best {
                        value,
                        idx,
                        count: 1,
                    });
                }
            }
            best
        })
        .reduce(|| Best::EMPTY, Best::merge)
}

/// Scan the `step` grid for `f` and report the largest `lhs - rhs`.
pub fn verify_grid(f: BoolFunc2, step: f64, tol: f64) -> Result<ViolationReport> {
    let n = grid_resolution(step)?;
    let best = grid_max(n, |j| objective(j, f).gap());
    Ok(ViolationReport {
        func: f,
        class: f.class(),
        step,
        points_checked: best.count,
        max_gap: best.value,
        arg_max: JointUV::grid_point(best.idx, n),
        violated: best.value > tol,
    })
}

/// [`verify_grid`] for all sixteen functions, in truth-table order.
pub fn verify_all(step: f64, tol: f64) -> Result<Vec<ViolationReport>> {
    BoolFunc2::all()
        .map(|f| verify_grid(f, step, tol))
        .collect()
}

/// Maximize the left-hand side for `f`: grid scan, then pairwise
/// mass-transfer ascent with the transfer size halving from `step` to 1e-10.
///
/// `refine_iters` caps the number of sweeps at each transfer size.
pub fn maximize_lhs(f: BoolFunc2, step: f64, refine_iters: usize) -> Result<(f64, JointUV)> {
    let n = grid_resolution(step)?;
    let best = grid_max(n, |j| objective(j, f).lhs);
    let mut p = JointUV::grid_point(best.idx, n).0;
    let mut value = best.value;
    let mut delta = step;
    while delta >= 1e-10 {
        for _ in 0..refine_iters {
            let mut improved = false;
            for from in 0..4 {
                for to in 0..4 {
                    if from == to || p[from] <= 0.0 {
                        continue;
                    }
                    let moved = delta.min(p[from]);
                    let mut cand = p;
                    cand[from] -= moved;
                    cand[to] += moved;
                    if cand[from] < 0.0 {
                        cand[from] = 0.0;
                    }
                    let v = objective(&JointUV(cand), f).lhs;
                    if v > value {
                        value = v;
                        p = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        delta *= 0.5;
    }
    Ok((value, JointUV::from_array(p)?))
}

/// Interior stationary curve of the AND case,
/// `((1-t)/3, 2(1-t)/3, t/5, 4t/5)`.
pub fn stationary_family(t: f64) -> Result<JointUV> {
    if !(0.0..=1.0).contains(&t) {
        return Err(ConjectureError::Parameter {
            name: "t",
            value: t,
        });
    }
    Ok(JointUV([
        (1.0 - t) / 3.0,
        2.0 * (1.0 - t) / 3.0,
        t / 5.0,
        4.0 * t / 5.0,
    ]))
}

/// Distance from `j` to the stationary curve, minimized over `t`.
pub fn distance_to_stationary_family(j: &JointUV) -> f64 {
    let d = |t: f64| j.distance(&stationary_family(t.clamp(0.0, 1.0)).expect("clamped"));
    let (_, neg) = crate::search::grid_then_golden(|t| -d(t), 0.0, 1.0, 1e-3, 1e-12);
    -neg
}

/// First-order conditions of the AND case, split by support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AndStationarity {
    /// All four cells positive: both ratio residuals.
    Interior { r1: f64, r2: f64 },
    /// `p01 = 0`: `p00/p10 - p00/sqrt(p10(p10+2p11))`, never zero.
    P01Zero { residual: f64 },
    /// `p10 = 0`: `p00/p01 - p00/(p01 + p11/2)`, never zero.
    P10Zero { residual: f64 },
    /// `p00 = 0`: `sqrt(p10(p10+2p11)) - (p01 + p11/2)`; may vanish, and is
    /// then excluded by the second-order form.
    P00Zero { residual: f64 },
    /// Two of `p00, p01, p10` vanish or `p11 = 0`; the function collapses
    /// to a constant or a single coordinate.
    Trivial,
}

impl AndStationarity {
    /// Whether the first-order conditions can hold at this point.
    pub fn satisfiable(&self, tol: f64) -> bool {
        match *self {
            AndStationarity::Interior { r1, r2 } => r1.abs() <= tol && r2.abs() <= tol,
            AndStationarity::P01Zero { residual } | AndStationarity::P10Zero { residual } => {
                residual.abs() <= tol
            }
            AndStationarity::P00Zero { residual } => residual.abs() <= tol,
            AndStationarity::Trivial => true,
        }
    }
}

pub fn and_first_order_residuals(j: &JointUV) -> AndStationarity {
    let [p00, p01, p10, p11] = j.0;
    let pos = |x: f64| x > DENOM_GUARD;
    let zeros = [p00, p01, p10].iter().filter(|&&x| !pos(x)).count();
    if !pos(p11) || zeros >= 2 {
        return AndStationarity::Trivial;
    }
    let root = (p10 * (p10 + 2.0 * p11)).sqrt();
    if !pos(p00) {
        return AndStationarity::P00Zero {
            residual: root - (p01 + p11 / 2.0),
        };
    }
    if !pos(p01) {
        return AndStationarity::P01Zero {
            residual: p00 / p10 - p00 / root,
        };
    }
    if !pos(p10) {
        return AndStationarity::P10Zero {
            residual: p00 / p01 - p00 / (p01 + p11 / 2.0),
        };
    }
    AndStationarity::Interior {
        r1: p00 / p01 - (p00 + p10) / (p01 + p11 / 2.0),
        r2: p00 / p10 - (p00 + p01) / root,
    }
}

/// Multiplicative perturbation `q(u,v) = p(u,v) (1 + eps L(u,v))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplicativeUV {
    pub l: [f64; 4],
}

impl MultiplicativeUV {
    /// `L11 = 0` and `p00 L00 + p01 L01 + p10 L10 = 0`: the AND case
    /// directions that keep `P(X = 0)` fixed.
    pub fn satisfies_and_constraints(&self, j: &JointUV, tol: f64) -> bool {
        let p = j.0;
        self.l[3].abs() <= tol
            && (p[0] * self.l[0] + p[1] * self.l[1] + p[2] * self.l[2]).abs() <= tol
    }

    pub fn apply(&self, j: &JointUV, epsilon: f64) -> Result<JointUV> {
        let mut q = [0.0; 4];
        for ((qc, &pc), &lc) in q.iter_mut().zip(&j.0).zip(&self.l) {
            let factor = 1.0 + epsilon * lc;
            if pc > 0.0 && factor < -MASS_TOL {
                return Err(ConjectureError::InvalidStep { epsilon });
            }
            *qc = pc * factor.max(0.0);
        }
        JointUV::from_array(q)
    }
}

/// `E[E[L|U,Y1]^2] + E[E[L|V,Y2]^2] - E[E[L|U,V]^2]` under `X = f(U, V)`.
///
/// Divided by `ln 2` this is the second derivative of the left-hand side
/// along a multiplicative direction that keeps `p(x)` fixed.
pub fn second_order_form(j: &JointUV, f: BoolFunc2, dir: &MultiplicativeUV) -> f64 {
    let bc = bssc();
    let l = dir.l;
    // numerator and mass per (u, y1) and (v, y2)
    let mut num_uy = [0.0; 4];
    let mut den_uy = [0.0; 4];
    let mut num_vy = [0.0; 4];
    let mut den_vy = [0.0; 4];
    let mut direct = 0.0;
    for u in 0..2 {
        for v in 0..2 {
            let c = 2 * u + v;
            let m = j.0[c];
            if m == 0.0 {
                continue;
            }
            direct += m * l[c] * l[c];
            let x = f.eval(u, v);
            for y in 0..2 {
                let a = m * bc.ch1.prob(x, y);
                num_uy[2 * u + y] += a * l[c];
                den_uy[2 * u + y] += a;
                let b = m * bc.ch2.prob(x, y);
                num_vy[2 * v + y] += b * l[c];
                den_vy[2 * v + y] += b;
            }
        }
    }
    let cond_sq = |num: &[f64; 4], den: &[f64; 4]| {
        (0..4)
            .filter(|&k| den[k] > ZERO_MASS)
            .map(|k| num[k] * num[k] / den[k])
            .sum::<f64>()
    };
    cond_sq(&num_uy, &den_uy) + cond_sq(&num_vy, &den_vy) - direct
}

/// [`second_order_form`] for `X = U AND V`.
pub fn and_second_order_form(j: &JointUV, dir: &MultiplicativeUV) -> f64 {
    second_order_form(j, BoolFunc2::AND, dir)
}

/// Additive perturbation of the XOR joint with coefficients `a, b, c, d >= 0`:
/// `lambda_001 = a = -lambda_000`, `lambda_100 = b = -lambda_101`,
/// `lambda_010 = c = -lambda_011`, `lambda_111 = d = -lambda_110`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XorDirection {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl XorDirection {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if [a, b, c, d].iter().any(|&x| x.is_nan() || x < 0.0) {
            return Err(ConjectureError::NegativeCoefficient);
        }
        Ok(XorDirection { a, b, c, d })
    }

    /// `lambda(u, v, x)` at flat index `4u + 2v + x`.
    pub fn lambda(&self) -> [f64; 8] {
        let mut lam = [0.0; 8];
        let at = |u: usize, v: usize, x: usize| 4 * u + 2 * v + x;
        lam[at(0, 0, 1)] = self.a;
        lam[at(0, 0, 0)] = -self.a;
        lam[at(1, 0, 0)] = self.b;
        lam[at(1, 0, 1)] = -self.b;
        lam[at(0, 1, 0)] = self.c;
        lam[at(0, 1, 1)] = -self.c;
        lam[at(1, 1, 1)] = self.d;
        lam[at(1, 1, 0)] = -self.d;
        lam
    }

    /// Whether `P(X = 0)` is unchanged, i.e. `a + d = b + c`.
    pub fn preserves_input_law(&self, tol: f64) -> bool {
        (self.a + self.d - self.b - self.c).abs() <= tol
    }

    /// `p(u, v, x) + eps lambda(u, v, x)` for the XOR joint.
    pub fn apply(&self, j: &JointUV, epsilon: f64) -> Result<JointDist> {
        let lam = self.lambda();
        let mut q = [0.0; 8];
        for u in 0..2 {
            for v in 0..2 {
                q[4 * u + 2 * v + BoolFunc2::XOR.eval(u, v)] = j.get(u, v);
            }
        }
        for (cell, l) in q.iter_mut().zip(lam) {
            *cell += epsilon * l;
            if *cell < -MASS_TOL {
                return Err(ConjectureError::InvalidStep { epsilon });
            }
        }
        Ok(JointDist::new(vec![2, 2, 2], q.to_vec())?)
    }
}

/// First-order bracket of the XOR case at an interior point.
///
/// For directions with `a + d = b + c` this is minus the directional
/// derivative of the left-hand side, so it must be nonnegative at any
/// interior local maximizer.
pub fn xor_directional_derivative(j: &JointUV, a: f64, b: f64, c: f64, d: f64) -> Result<f64> {
    XorDirection::new(a, b, c, d)?;
    if let Some(cell) = j.0.iter().position(|&x| x <= 0.0) {
        return Err(ConjectureError::ZeroMass(cell));
    }
    let [p00, p01, p10, p11] = j.0;
    let lg = f64::log2;
    Ok((a - c) / 2.0 * lg(p00 / (p00 + 2.0 * p01))
        + (d - b) / 2.0 * lg(p11 / (p11 + 2.0 * p10))
        + (b - a) / 2.0 * lg(p10 / (p10 + 2.0 * p00))
        + (c - d) / 2.0 * lg(p01 / (p01 + 2.0 * p11)))
}

/// The constant `h(1/3) - (3/2) h(1/9)`.
pub fn gap_constant() -> f64 {
    h(1.0 / 3.0) - 1.5 * h(1.0 / 9.0)
}

/// `H(Y1|U) - H(Y1|X) - H(V|U) + H(V|Y2)` on the stationary curve, computed
/// from the induced laws, next to its closed form `(3t/5)(h(1/3) - (3/2)h(1/9))`.
pub fn gap_identity(t: f64) -> Result<(f64, f64)> {
    let j = stationary_family(t)?;
    let tab = induced_tables(&j, BoolFunc2::AND);
    let bc = bssc();
    let marg_rows = |p: &[f64; 4]| [p[0] + p[1], p[2] + p[3]];
    let marg_cols = |p: &[f64; 4]| [p[0] + p[2], p[1] + p[3]];
    let xy1: Vec<f64> = (0..2)
        .flat_map(|x| (0..2).map(move |y| (x, y)))
        .map(|(x, y)| tab.x[x] * bc.ch1.prob(x, y))
        .collect();
    let h_y1_u = entropy_of(&tab.uy1) - entropy_of(&marg_rows(&tab.uy1));
    let h_y1_x = entropy_of(&xy1) - entropy_of(&tab.x);
    let h_v_u = entropy_of(&tab.uv) - entropy_of(&marg_rows(&tab.uv));
    let h_v_y2 = entropy_of(&tab.vy2) - entropy_of(&marg_cols(&tab.vy2));
    let numeric = h_y1_u - h_y1_x - h_v_u + h_v_y2;
    let closed = 3.0 * t / 5.0 * gap_constant();
    Ok((numeric, closed))
}
