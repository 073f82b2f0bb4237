//! One-dimensional derivative-free maximization.

/// Iteration cap for golden-section refinement.
pub const GOLDEN_MAX_ITER: usize = 200;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
///
/// Stops when the bracket is narrower than `tol` or after
/// [`GOLDEN_MAX_ITER`] iterations. Returns the best of the probed points,
/// endpoints included.
pub fn golden_section_max<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> (f64, f64) {
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..GOLDEN_MAX_ITER {
        if b - a <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let candidates = [(c, fc), (d, fd), (mid, f(mid)), (lo, f(lo)), (hi, f(hi))];
    candidates
        .into_iter()
        .fold((f64::NAN, f64::NEG_INFINITY), |best, cand| {
            if cand.1 > best.1 {
                cand
            } else {
                best
            }
        })
}

/// Grid scan of `[lo, hi]` at `step`, then golden-section refinement inside
/// the cell pair around the best grid point.
pub fn grid_then_golden<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    step: f64,
    tol: f64,
) -> (f64, f64) {
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    let mut best = (lo, f64::NEG_INFINITY);
    for i in 0..=n {
        let x = (lo + i as f64 * step).min(hi);
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    let a = (best.0 - step).max(lo);
    let b = (best.0 + step).min(hi);
    let refined = golden_section_max(&mut f, a, b, tol);
    if refined.1 >= best.1 {
        refined
    } else {
        best
    }
}

/// Bisection for a sign change of `g` on `[lo, hi]`.
pub fn bisect<F: FnMut(f64) -> f64>(mut g: F, lo: f64, hi: f64, tol: f64) -> Option<f64> {
    let (mut a, mut b) = (lo, hi);
    let mut ga = g(a);
    let gb = g(b);
    if ga == 0.0 {
        return Some(a);
    }
    if gb == 0.0 {
        return Some(b);
    }
    if ga.signum() == gb.signum() {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a <= tol {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return Some(m);
        }
        if gm.signum() == ga.signum() {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, fx) = golden_section_max(|x| -(x - 0.3).powi(2), 0.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-7);
        assert!(fx.abs() < 1e-12);
    }

    #[test]
    fn golden_handles_boundary_maximum() {
        let (x, _) = golden_section_max(|x| x, 0.0, 1.0, 1e-10);
        assert_eq!(x, 1.0);
    }

    #[test]
    fn grid_then_golden_multimodal() {
        // two bumps; the taller one sits at 0.8
        let f = |x: f64| {
            (-(x - 0.2f64).powi(2) * 200.0).exp() + 2.0 * (-(x - 0.8f64).powi(2) * 200.0).exp()
        };
        let (x, _) = grid_then_golden(f, 0.0, 1.0, 0.05, 1e-12);
        assert!((x - 0.8).abs() < 1e-6);
    }

    #[test]
    fn bisect_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        assert!(bisect(|x| x * x + 1.0, 0.0, 1.0, 1e-9).is_none());
    }
}
