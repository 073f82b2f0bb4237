//! Sum-rate evaluations for the skew-symmetric broadcast channel.
//!
//! Everything is derived from the difference curve
//! `Δ(x) = I(X;Y1) − I(X;Y2)` at `P(X=0) = x`, evaluated through the
//! channel pipeline, and from its lower convex envelope `g`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::info::{
    conditional_mi, make_bssc, mutual_information, plogp, push_joint, single_user_capacity,
    BroadcastChannel, Channel, InfoError, JointDist, ProbVec,
};
use crate::search::{bisect, golden_section_max, grid_then_golden};

/// Default sample count for the numeric envelope.
pub const DEFAULT_ENVELOPE_SAMPLES: usize = 4096;

/// Smallest sample count accepted by the numeric envelope.
pub const MIN_ENVELOPE_SAMPLES: usize = 64;

/// Central-difference step for the tangency condition.
pub const TANGENT_H: f64 = 1e-6;

/// Default Marton grid step on each of the three parameters.
pub const MARTON_GRID_STEP: f64 = 1.0 / 200.0;

/// Default number of per-coordinate golden sweeps.
pub const MARTON_SWEEPS: usize = 3;

const SEARCH_TOL: f64 = 1e-12;
const CAPACITY_GRID: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error(transparent)]
    Info(#[from] InfoError),
    #[error("input probability {0} outside [0, 1]")]
    Domain(f64),
    #[error("numeric envelope needs at least {MIN_ENVELOPE_SAMPLES} samples, got {0}")]
    Samples(usize),
    #[error("unknown bound '{0}' (expected marton, outer or km)")]
    UnknownBound(String),
    #[error("unknown envelope mode '{0}' (expected analytic or numeric)")]
    UnknownMode(String),
    #[error("grid step must lie in (0, 0.5], got {0}")]
    GridStep(f64),
    #[error("tangency condition has no sign change on the search interval")]
    NoTangent,
}

pub type Result<T> = std::result::Result<T, BoundsError>;

fn bssc() -> &'static BroadcastChannel {
    static BSSC: OnceLock<BroadcastChannel> = OnceLock::new();
    BSSC.get_or_init(make_bssc)
}

fn check_prob(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(BoundsError::Domain(x))
    }
}

/// `H(Y)` when the input is 0 with probability `s`; allocation-free.
fn output_entropy(ch: &Channel, s: f64) -> f64 {
    let rows = ch.rows();
    (0..ch.output_size())
        .map(|y| plogp(s * rows[0][y] + (1.0 - s) * rows[1][y]))
        .sum()
}

/// `H(Y | X)` pieces and mixtures for a binary-input channel.
struct BinaryView<'a> {
    ch: &'a Channel,
    row_entropy: [f64; 2],
}

impl<'a> BinaryView<'a> {
    fn new(ch: &'a Channel) -> Self {
        BinaryView {
            ch,
            row_entropy: [output_entropy(ch, 1.0), output_entropy(ch, 0.0)],
        }
    }

    fn out(&self, s: f64) -> f64 {
        output_entropy(self.ch, s)
    }

    /// `I(X;Y)` given `H(Y)` at `s`.
    fn mi_from(&self, h_out: f64, s: f64) -> f64 {
        h_out - s * self.row_entropy[0] - (1.0 - s) * self.row_entropy[1]
    }
}

/// `Δ(x) = I(X;Y1) − I(X;Y2)` at `P(X=0) = x`.
pub fn difference_curve(x: f64) -> Result<f64> {
    check_prob(x)?;
    Ok(delta(x))
}

fn delta(x: f64) -> f64 {
    let bc = bssc();
    bc.ch1.binary_input_mi(x) - bc.ch2.binary_input_mi(x)
}

/// `max_x Δ(x)` and its argmax.
pub fn max_difference() -> (f64, f64) {
    let (x, d) = grid_then_golden(delta, 0.0, 1.0, CAPACITY_GRID, SEARCH_TOL);
    (d, x)
}

/// `max_x I(X;Y1) + I(X;Y2)` and its argmax.
pub fn max_mi_sum() -> (f64, f64) {
    let bc = bssc();
    let (x, v) = grid_then_golden(
        |x| bc.ch1.binary_input_mi(x) + bc.ch2.binary_input_mi(x),
        0.0,
        1.0,
        CAPACITY_GRID,
        SEARCH_TOL,
    );
    (v, x)
}

/// Capacity of the first receiver's channel (equal for both by symmetry).
pub fn capacity() -> Result<(f64, ProbVec)> {
    Ok(single_user_capacity(
        &bssc().ch1,
        CAPACITY_GRID,
        SEARCH_TOL,
    )?)
}

/// Largest second difference of `Δ` on `[0, ½]` and smallest on `[½, 1]`,
/// from `samples` equally spaced points per half. Concavity on the left and
/// convexity on the right show as a nonpositive first and nonnegative second
/// component.
pub fn curvature_check(samples: usize) -> (f64, f64) {
    let n = samples.max(3);
    let second = |lo: f64, hi: f64| -> Vec<f64> {
        let h = (hi - lo) / (n - 1) as f64;
        (1..n - 1)
            .map(|i| {
                let x = lo + i as f64 * h;
                (delta(x - h) - 2.0 * delta(x) + delta(x + h)) / (h * h)
            })
            .collect()
    };
    let left = second(0.0, 0.5)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let right = second(0.5, 1.0).into_iter().fold(f64::INFINITY, f64::min);
    (left, right)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvelopeMode {
    Analytic,
    Numeric,
}

impl FromStr for EnvelopeMode {
    type Err = BoundsError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "analytic" => Ok(EnvelopeMode::Analytic),
            "numeric" => Ok(EnvelopeMode::Numeric),
            _ => Err(BoundsError::UnknownMode(s.to_string())),
        }
    }
}

/// Lower convex envelope of `Δ` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeResult {
    pub mode: EnvelopeMode,
    /// Where the chord from the origin touches `Δ`.
    pub breakpoint: f64,
    pub chord_slope: f64,
    /// Hull vertices (numeric mode only).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub hull: Vec<(f64, f64)>,
}

impl EnvelopeResult {
    pub fn g(&self, x: f64) -> f64 {
        match self.mode {
            EnvelopeMode::Analytic => {
                if x <= 0.0 {
                    0.0
                } else if x <= self.breakpoint {
                    self.chord_slope * x
                } else {
                    delta(x)
                }
            }
            EnvelopeMode::Numeric => interpolate(&self.hull, x),
        }
    }
}

fn interpolate(pts: &[(f64, f64)], x: f64) -> f64 {
    let k = pts.partition_point(|p| p.0 < x);
    if k == 0 {
        return pts[0].1;
    }
    if k == pts.len() {
        return pts[pts.len() - 1].1;
    }
    let (x0, y0) = pts[k - 1];
    let (x1, y1) = pts[k];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Lower hull of points sorted by `x` (monotone chain).
fn lower_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for &p in points {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull
}

/// Tangent point of the chord from `(0, 0)`: root of `Δ′(b) − Δ(b)/b` on
/// `[½, 1)`.
pub fn tangent_breakpoint() -> Result<f64> {
    let slope_gap =
        |b: f64| (delta(b + TANGENT_H) - delta(b - TANGENT_H)) / (2.0 * TANGENT_H) - delta(b) / b;
    bisect(slope_gap, 0.5, 1.0 - 1e-9 - TANGENT_H, SEARCH_TOL).ok_or(BoundsError::NoTangent)
}

pub fn lower_convex_envelope(samples: usize, mode: EnvelopeMode) -> Result<EnvelopeResult> {
    match mode {
        EnvelopeMode::Analytic => {
            let b = tangent_breakpoint()?;
            Ok(EnvelopeResult {
                mode,
                breakpoint: b,
                chord_slope: delta(b) / b,
                hull: Vec::new(),
            })
        }
        EnvelopeMode::Numeric => {
            if samples < MIN_ENVELOPE_SAMPLES {
                return Err(BoundsError::Samples(samples));
            }
            let pts: Vec<(f64, f64)> = (0..samples)
                .map(|i| {
                    let x = i as f64 / (samples - 1) as f64;
                    (x, delta(x))
                })
                .collect();
            let hull = lower_hull(&pts);
            let (bx, by) = hull[1];
            Ok(EnvelopeResult {
                mode,
                breakpoint: bx,
                chord_slope: by / bx,
                hull,
            })
        }
    }
}

/// `x, Δ(x), g(x)` at `samples` equally spaced points.
pub fn envelope_csv(env: &EnvelopeResult, samples: usize) -> String {
    let n = samples.max(2);
    let mut out = String::from("x,delta,g\n");
    for i in 0..n {
        let x = i as f64 / (n - 1) as f64;
        out.push_str(&format!("{},{},{}\n", x, delta(x), env.g(x)));
    }
    out
}

/// `x, Δ(x)` at `samples` equally spaced points.
pub fn difference_csv(samples: usize) -> String {
    let n = samples.max(2);
    let mut out = String::from("x,delta\n");
    for i in 0..n {
        let x = i as f64 / (n - 1) as f64;
        out.push_str(&format!("{},{}\n", x, delta(x)));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundId {
    Marton,
    Outer,
    Km,
}

impl BoundId {
    pub const ALL: [BoundId; 3] = [BoundId::Marton, BoundId::Outer, BoundId::Km];

    pub fn as_str(&self) -> &'static str {
        match self {
            BoundId::Marton => "marton",
            BoundId::Outer => "outer",
            BoundId::Km => "km",
        }
    }
}

impl fmt::Display for BoundId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundId {
    type Err = BoundsError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "marton" => Ok(BoundId::Marton),
            "outer" => Ok(BoundId::Outer),
            "km" => Ok(BoundId::Km),
            _ => Err(BoundsError::UnknownBound(s.to_string())),
        }
    }
}

/// Binary-input law of `X` given an auxiliary: `p(a)` and `P(X=0 | a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Achiever {
    /// Name of the auxiliary (`w` or `u`).
    pub aux: String,
    pub p_aux: Vec<f64>,
    pub p_x0_given_aux: Vec<f64>,
}

impl Achiever {
    fn binary(aux: &str, p0: f64, x0: f64, x1: f64) -> Self {
        Achiever {
            aux: aux.to_string(),
            p_aux: vec![p0, 1.0 - p0],
            p_x0_given_aux: vec![x0, x1],
        }
    }

    /// Reads `p(a, x)` with binary `x`; empty rows get `P(X=0 | a) = 0`.
    pub fn from_joint(j: &JointDist, aux: &str) -> Result<Self> {
        if j.rank() != 2 {
            return Err(InfoError::Rank {
                expected: 2,
                found: j.rank(),
            }
            .into());
        }
        if j.shape()[1] != 2 {
            return Err(InfoError::NotBinaryInput(j.shape()[1]).into());
        }
        let (p_aux, p_x0_given_aux) = (0..j.shape()[0])
            .map(|a| {
                let (m0, m1) = (j.get(&[a, 0]), j.get(&[a, 1]));
                let m = m0 + m1;
                (m, if m > 0.0 { m0 / m } else { 0.0 })
            })
            .unzip();
        Ok(Achiever {
            aux: aux.to_string(),
            p_aux,
            p_x0_given_aux,
        })
    }

    /// `p(a, x)`.
    pub fn joint(&self) -> Result<JointDist> {
        let p = self
            .p_aux
            .iter()
            .zip(&self.p_x0_given_aux)
            .flat_map(|(&pa, &s)| [pa * s, pa * (1.0 - s)])
            .collect();
        Ok(JointDist::new(vec![self.p_aux.len(), 2], p)?)
    }

    /// `P(X=0)`.
    pub fn x0(&self) -> f64 {
        self.p_aux
            .iter()
            .zip(&self.p_x0_given_aux)
            .map(|(a, s)| a * s)
            .sum()
    }
}

/// `p(a, x, y)` for the auxiliary/input law pushed through a channel.
fn aux_input_output(j: &JointDist, ch: &Channel) -> Result<JointDist> {
    let (na, nx, ny) = (j.shape()[0], j.shape()[1], ch.output_size());
    let mut p = Vec::with_capacity(na * nx * ny);
    for a in 0..na {
        for x in 0..nx {
            let m = j.get(&[a, x]);
            p.extend(ch.rows()[x].iter().map(|r| m * r));
        }
    }
    Ok(JointDist::new(vec![na, nx, ny], p)?)
}

/// Mutual-information terms of an achiever, through the generic pipeline.
fn pipeline_terms(ach: &Achiever) -> Result<BTreeMap<String, f64>> {
    let bc = bssc();
    let j = ach.joint()?;
    let aux = ach.aux.to_uppercase();
    let px = j.marginal(&[1])?;
    let px = JointDist::new(vec![1, 2], px.probs().to_vec())?;
    let mut terms = BTreeMap::new();
    for (k, ch) in [(1, &bc.ch1), (2, &bc.ch2)] {
        terms.insert(
            format!("I({aux};Y{k})"),
            mutual_information(&push_joint(&j, ch)?)?,
        );
        terms.insert(
            format!("I(X;Y{k}|{aux})"),
            conditional_mi(&aux_input_output(&j, ch)?)?,
        );
        let xy = aux_input_output(&px, ch)?;
        terms.insert(format!("I(X;Y{k})"), conditional_mi(&xy)?);
    }
    Ok(terms)
}

/// `min(I(W;Y1), I(W;Y2)) + Σ_w p(w) max(I(X;Y1|W=w), I(X;Y2|W=w))`
/// through the generic pipeline.
pub fn marton_objective(ach: &Achiever) -> Result<f64> {
    let t = pipeline_terms(ach)?;
    let aux = ach.aux.to_uppercase();
    Ok(t[&format!("I({aux};Y1)")].min(t[&format!("I({aux};Y2)")]) + branch_max_term(ach)?)
}

/// Per-branch `max(I(X;Y1|A=a), I(X;Y2|A=a))` weighted by `p(a)`.
fn branch_max_term(ach: &Achiever) -> Result<f64> {
    let bc = bssc();
    let mut total = 0.0;
    for (&pa, &s) in ach.p_aux.iter().zip(&ach.p_x0_given_aux) {
        let row = JointDist::new(vec![1, 2], vec![s, 1.0 - s])?;
        let i1 = conditional_mi(&aux_input_output(&row, &bc.ch1)?)?;
        let i2 = conditional_mi(&aux_input_output(&row, &bc.ch2)?)?;
        total += pa * i1.max(i2);
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumRateReport {
    #[serde(rename = "bound_id")]
    pub bound: BoundId,
    pub value: f64,
    pub achiever: Achiever,
    /// Named mutual-information terms at the achiever.
    pub components: BTreeMap<String, f64>,
    /// Other scalars of the evaluation (e.g. `d`, `cap`, `x_star`).
    pub parameters: BTreeMap<String, f64>,
    pub rate_point: (f64, f64),
}

impl SumRateReport {
    /// The objective re-evaluated at the achiever through the generic
    /// pipeline.
    pub fn recompute(&self) -> Result<f64> {
        let t = pipeline_terms(&self.achiever)?;
        match self.bound {
            BoundId::Marton => marton_objective(&self.achiever),
            BoundId::Outer | BoundId::Km => Ok(t["I(X;Y1)"] + t["I(X;Y2|U)"] - t["I(X;Y1|U)"]),
        }
    }
}

/// Marton objective over a binary `W`: precomputed entropies per channel.
struct MartonObjective<'a> {
    v1: BinaryView<'a>,
    v2: BinaryView<'a>,
}

impl<'a> MartonObjective<'a> {
    fn new(bc: &'a BroadcastChannel) -> Self {
        MartonObjective {
            v1: BinaryView::new(&bc.ch1),
            v2: BinaryView::new(&bc.ch2),
        }
    }

    /// Output entropies and branch term for one conditional law.
    fn branch(&self, s: f64) -> (f64, f64, f64) {
        let (e1, e2) = (self.v1.out(s), self.v2.out(s));
        (e1, e2, self.v1.mi_from(e1, s).max(self.v2.mi_from(e2, s)))
    }

    fn combine(&self, a: f64, s: f64, t: f64, bs: (f64, f64, f64), bt: (f64, f64, f64)) -> f64 {
        let x = a * s + (1.0 - a) * t;
        let b = 1.0 - a;
        let iw1 = self.v1.out(x) - a * bs.0 - b * bt.0;
        let iw2 = self.v2.out(x) - a * bs.1 - b * bt.1;
        iw1.min(iw2) + a * bs.2 + b * bt.2
    }

    fn eval(&self, p: [f64; 3]) -> f64 {
        let [a, s, t] = p;
        self.combine(a, s, t, self.branch(s), self.branch(t))
    }
}

/// Deterministic argmax: larger value wins, ties go to the smaller index.
fn better(a: (f64, [usize; 3]), b: (f64, [usize; 3])) -> (f64, [usize; 3]) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

fn marton_grid(obj: &MartonObjective, n: usize) -> (f64, [f64; 3]) {
    let grid: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let branches: Vec<(f64, f64, f64)> = grid.iter().map(|&s| obj.branch(s)).collect();
    let best = (0..=n)
        .into_par_iter()
        .map(|ia| {
            let a = grid[ia];
            let mut best = (f64::NEG_INFINITY, [usize::MAX; 3]);
            for (is, &s) in grid.iter().enumerate() {
                for (it, &t) in grid.iter().enumerate() {
                    let v = obj.combine(a, s, t, branches[is], branches[it]);
                    if v > best.0 {
                        best = (v, [ia, is, it]);
                    }
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::NEG_INFINITY, [usize::MAX; 3]), better);
    let [ia, is, it] = best.1;
    (best.0, [grid[ia], grid[is], grid[it]])
}

/// Coordinate-wise golden sweeps, then a compass search over the 26
/// directions of `{-1, 0, 1}^3`. The compass phase moves along the ridge
/// where `I(W;Y1) = I(W;Y2)`, on which coordinate steps stall.
fn marton_refine(
    obj: &MartonObjective,
    start: [f64; 3],
    step: f64,
    sweeps: usize,
) -> (f64, [f64; 3]) {
    let mut p = start;
    let mut fp = obj.eval(p);
    for _ in 0..sweeps {
        for k in 0..3 {
            let lo = (p[k] - step).max(0.0);
            let hi = (p[k] + step).min(1.0);
            let (z, fz) = golden_section_max(
                |z| {
                    let mut q = p;
                    q[k] = z;
                    obj.eval(q)
                },
                lo,
                hi,
                SEARCH_TOL,
            );
            if fz > fp {
                p[k] = z;
                fp = fz;
            }
        }
    }
    let dirs: Vec<[f64; 3]> = (0..27)
        .map(|i| {
            [
                (i / 9) as f64 - 1.0,
                ((i / 3) % 3) as f64 - 1.0,
                (i % 3) as f64 - 1.0,
            ]
        })
        .filter(|d| d.iter().any(|&c| c != 0.0))
        .collect();
    let mut h = step;
    let mut moves = 0;
    while h > SEARCH_TOL && moves < 1_000_000 {
        let next = dirs.iter().find_map(|d| {
            let q = [p[0] + h * d[0], p[1] + h * d[1], p[2] + h * d[2]];
            if q.iter().any(|c| !(0.0..=1.0).contains(c)) {
                return None;
            }
            let fq = obj.eval(q);
            (fq > fp).then_some((q, fq))
        });
        match next {
            Some((q, fq)) => {
                p = q;
                fp = fq;
                moves += 1;
            }
            None => h *= 0.5,
        }
    }
    (fp, p)
}

fn finish_report(
    bound: BoundId,
    value: f64,
    achiever: Achiever,
    parameters: BTreeMap<String, f64>,
) -> Result<SumRateReport> {
    let components = pipeline_terms(&achiever)?;
    Ok(SumRateReport {
        bound,
        value,
        achiever,
        components,
        parameters,
        rate_point: (value / 2.0, value / 2.0),
    })
}

/// Marton sum rate with a binary outer auxiliary `W`.
pub fn marton_sum_rate(grid_step: f64, sweeps: usize) -> Result<SumRateReport> {
    if !(grid_step > 0.0 && grid_step <= 0.5) {
        return Err(BoundsError::GridStep(grid_step));
    }
    let n = (1.0 / grid_step).round() as usize;
    let obj = MartonObjective::new(bssc());
    let (_, start) = marton_grid(&obj, n);
    let (value, [a, s, t]) = marton_refine(&obj, start, 1.0 / n as f64, sweeps);
    let (d, x_d) = max_difference();
    let (sum, x_sum) = max_mi_sum();
    let params = BTreeMap::from([
        ("d".to_string(), d),
        ("x_d".to_string(), x_d),
        ("max_mi_sum".to_string(), sum),
        ("x_max_mi_sum".to_string(), x_sum),
        ("cap".to_string(), (sum + d) / 2.0),
    ]);
    finish_report(
        BoundId::Marton,
        value,
        Achiever::binary("w", a, s, t),
        params,
    )
}

/// Outer-bound sum rate: `I(X;Y1) − g(½)` at `P(X=0) = ½`.
pub fn outer_sum_rate() -> Result<SumRateReport> {
    let env = lower_convex_envelope(0, EnvelopeMode::Analytic)?;
    let b = env.breakpoint;
    let value = bssc().ch1.binary_input_mi(0.5) - env.g(0.5);
    let w1 = 0.5 / b;
    let params = BTreeMap::from([
        ("breakpoint".to_string(), b),
        ("chord_slope".to_string(), env.chord_slope),
        ("g_half".to_string(), env.g(0.5)),
    ]);
    finish_report(
        BoundId::Outer,
        value,
        Achiever::binary("u", 1.0 - w1, 0.0, b),
        params,
    )
}

/// Direct maximization of `I(X;Y1) + I(X;Y2|U) − I(X;Y1|U)` over binary
/// `U` with `P(X=0) = ½`, on a grid over `(P(U=0), P(X=0|U=0))`.
pub fn outer_grid_oracle(step: f64) -> Result<f64> {
    if !(step > 0.0 && step <= 0.5) {
        return Err(BoundsError::GridStep(step));
    }
    let n = (1.0 / step).round() as usize;
    let base = bssc().ch1.binary_input_mi(0.5);
    let best = (1..n)
        .into_par_iter()
        .map(|i| {
            let alpha = i as f64 / n as f64;
            (0..=n)
                .filter_map(|k| {
                    let x0 = k as f64 / n as f64;
                    let x1 = (0.5 - alpha * x0) / (1.0 - alpha);
                    (0.0..=1.0)
                        .contains(&x1)
                        .then(|| base - alpha * delta(x0) - (1.0 - alpha) * delta(x1))
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(base, f64::max);
    Ok(best)
}

/// Körner–Marton sum rate: `max_x I(X;Y1)(x) − g(x)` on `[0, b]`.
pub fn km_sum_rate() -> Result<SumRateReport> {
    let env = lower_convex_envelope(0, EnvelopeMode::Analytic)?;
    let b = env.breakpoint;
    let ch1 = &bssc().ch1;
    let ch2 = &bssc().ch2;
    let (x_star, value) = grid_then_golden(
        |x| ch1.binary_input_mi(x) - env.g(x),
        0.0,
        b,
        CAPACITY_GRID,
        SEARCH_TOL,
    );
    // beyond b the envelope is Δ itself, leaving I(X;Y2)
    let (_, upper) = grid_then_golden(
        |x| ch2.binary_input_mi(x),
        b,
        1.0,
        CAPACITY_GRID,
        SEARCH_TOL,
    );
    let c = 2.0 * (1.0 + env.chord_slope);
    let a = x_star / b;
    let params = BTreeMap::from([
        ("breakpoint".to_string(), b),
        ("c".to_string(), c),
        ("x_star".to_string(), x_star),
        ("x_star_closed".to_string(), 2.0 / (1.0 + c.exp2())),
        ("a".to_string(), a),
        ("upper_branch_max".to_string(), upper),
    ]);
    finish_report(
        BoundId::Km,
        value,
        Achiever::binary("u", 1.0 - a, 0.0, b),
        params,
    )
}

pub fn sum_rate(bound: BoundId) -> Result<SumRateReport> {
    match bound {
        BoundId::Marton => marton_sum_rate(MARTON_GRID_STEP, MARTON_SWEEPS),
        BoundId::Outer => outer_sum_rate(),
        BoundId::Km => km_sum_rate(),
    }
}

/// Corners and sum-rate face of a pentagon with single-user rates `c`:
/// `(0, C), (SR − C, C), (SR/2, SR/2), (C, SR − C), (C, 0)`.
pub fn rate_points_from(sum_rate: f64, c: f64) -> Vec<(f64, f64)> {
    let e = (sum_rate - c).max(0.0);
    vec![
        (0.0, c),
        (e, c),
        (sum_rate / 2.0, sum_rate / 2.0),
        (c, e),
        (c, 0.0),
    ]
}

pub fn rate_points(bound: BoundId) -> Result<Vec<(f64, f64)>> {
    let (c, _) = capacity()?;
    Ok(rate_points_from(sum_rate(bound)?.value, c))
}

pub fn rate_points_csv(rows: &[(BoundId, Vec<(f64, f64)>)]) -> String {
    let mut out = String::from("R1,R2,bound_id\n");
    for (bound, pts) in rows {
        for (r1, r2) in pts {
            out.push_str(&format!("{r1},{r2},{bound}\n"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::binary_entropy;

    fn h(p: f64) -> f64 {
        binary_entropy(p).unwrap()
    }

    #[test]
    fn difference_curve_matches_formula() {
        for i in 0..=50 {
            let x = i as f64 / 50.0;
            let closed = h(x / 2.0) - h((1.0 - x) / 2.0) + 1.0 - 2.0 * x;
            assert!((difference_curve(x).unwrap() - closed).abs() < 1e-12);
        }
        assert!(difference_curve(1.1).is_err());
        assert!(difference_curve(0.5).unwrap().abs() < 1e-15);
    }

    #[test]
    fn max_difference_value() {
        let (d, x) = max_difference();
        assert!((d - 0.10072952).abs() < 1e-6);
        assert!((x - 0.15843497).abs() < 1e-6);
        assert!((delta(1.0 - x) + d).abs() < 1e-12);
    }

    #[test]
    fn curvature_halves() {
        let (left, right) = curvature_check(400);
        assert!(left <= 0.0);
        assert!(right >= 0.0);
    }

    #[test]
    fn analytic_envelope() {
        let env = lower_convex_envelope(0, EnvelopeMode::Analytic).unwrap();
        assert!((env.breakpoint - 0.8).abs() < 1e-6);
        assert!((delta(0.8) + 0.098045).abs() < 1e-6);
        assert_eq!(env.g(0.0), 0.0);
        assert!((env.g(0.5) - 0.625 * delta(0.8)).abs() < 1e-8);
        assert_eq!(env.g(0.9), delta(0.9));
        for i in 0..=200 {
            let x = i as f64 / 200.0;
            assert!(env.g(x) <= delta(x) + 1e-10);
        }
    }

    #[test]
    fn numeric_envelope_matches_analytic() {
        let a = lower_convex_envelope(0, EnvelopeMode::Analytic).unwrap();
        let n = lower_convex_envelope(DEFAULT_ENVELOPE_SAMPLES, EnvelopeMode::Numeric).unwrap();
        let sup = (0..=10_000)
            .map(|i| i as f64 / 10_000.0)
            .map(|x| (a.g(x) - n.g(x)).abs())
            .fold(0.0, f64::max);
        assert!(sup < 2e-4);
        assert!((n.breakpoint - 0.8).abs() < 1e-3);
        assert!(matches!(
            lower_convex_envelope(10, EnvelopeMode::Numeric),
            Err(BoundsError::Samples(10))
        ));
    }

    #[test]
    fn numeric_envelope_is_convex_minorant() {
        let n = lower_convex_envelope(501, EnvelopeMode::Numeric).unwrap();
        assert_eq!(n.g(0.0), 0.0);
        for i in 0..=100 {
            let a = i as f64 / 100.0;
            assert!(n.g(a) <= delta(a) + 1e-10);
            for j in i..=100 {
                let b = j as f64 / 100.0;
                assert!(n.g(0.5 * (a + b)) <= 0.5 * (n.g(a) + n.g(b)) + 1e-10);
            }
        }
    }

    #[test]
    fn outer_value_and_oracle() {
        let r = outer_sum_rate().unwrap();
        assert!((r.value - 0.3725562).abs() < 1e-6);
        assert!((r.value - (h(0.25) - 0.5 - 0.625 * delta(0.8))).abs() < 1e-9);
        assert!((r.achiever.p_aux[0] - 0.375).abs() < 1e-6);
        assert!((r.recompute().unwrap() - r.value).abs() < 1e-9);
        let oracle = outer_grid_oracle(1.0 / 400.0).unwrap();
        assert!((oracle - r.value).abs() < 1e-4);
        assert!(oracle <= r.value + 1e-9);
    }

    #[test]
    fn km_value() {
        let r = km_sum_rate().unwrap();
        assert!((r.value - 0.3743955).abs() < 1e-6);
        assert!((r.parameters["x_star"] - 0.4571429).abs() < 1e-5);
        assert!((r.parameters["x_star"] - r.parameters["x_star_closed"]).abs() < 1e-6);
        assert!((r.parameters["c"] - 1.7548875).abs() < 1e-6);
        assert!(r.parameters["upper_branch_max"] < r.value);
        assert!((r.components["I(U;Y1)"] - 0.2206837).abs() < 1e-5);
        assert!((r.components["I(X;Y2|U)"] - 0.1537118).abs() < 1e-5);
        assert!((r.components["I(X;Y2)"] - 0.3006499).abs() < 1e-5);
        assert!((r.recompute().unwrap() - r.value).abs() < 1e-9);
        let x = r.parameters["x_star"];
        let a = r.parameters["a"];
        assert!((r.components["I(U;Y1)"] - (h(x / 2.0) - a * h(0.4))).abs() < 1e-9);
    }

    #[test]
    fn marton_coarse() {
        let r = marton_sum_rate(1.0 / 40.0, MARTON_SWEEPS).unwrap();
        assert!((r.value - 0.36164288).abs() < 1e-5);
        assert!(r.value <= r.parameters["cap"] + 1e-9);
        assert!((r.recompute().unwrap() - r.value).abs() < 1e-9);
    }

    #[test]
    fn rate_points_shape() {
        let pts = rate_points_from(0.36164288, 0.321928);
        assert!(pts.contains(&(0.0, 0.321928)));
        assert!(pts.contains(&(0.321928, 0.0)));
        assert!(pts.contains(&(0.18082144, 0.18082144)));
        for w in pts.windows(2) {
            assert!(w[1].0 >= w[0].0 && w[1].1 <= w[0].1);
        }
        assert!("nope".parse::<BoundId>().is_err());
        let csv = rate_points_csv(&[(BoundId::Km, vec![(0.1, 0.2)])]);
        assert_eq!(csv, "R1,R2,bound_id\n0.1,0.2,km\n");
    }

    #[test]
    fn envelope_csv_header() {
        let env = lower_convex_envelope(0, EnvelopeMode::Analytic).unwrap();
        let csv = envelope_csv(&env, 3);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x,delta,g");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,0,0"));
    }
}
