//! Adaptive Simpson quadrature with Richardson extrapolation, plus a dyadic
//! driver for half-infinite ranges.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Sum of the local error estimates of accepted panels.
    pub error_estimate: f64,
    /// Estimated mass beyond the last panel (zero on finite ranges).
    pub truncation_bound: f64,
    pub evaluations: usize,
    /// Right end of the range actually integrated.
    pub covered_to: f64,
}

const INITIAL_PANELS: usize = 16;
const MAX_DEPTH: u32 = 48;

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
}

#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Integrates `f` over `[a, b]` until every panel meets its share of
/// `max(abs_tol, rel_tol * |I|)`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Integral {
    if !(b > a) {
        return Integral {
            value: 0.0,
            error_estimate: 0.0,
            truncation_bound: 0.0,
            evaluations: 0,
            covered_to: a.max(b),
        };
    }
    let h = (b - a) / INITIAL_PANELS as f64;
    let nodes: Vec<f64> = (0..=2 * INITIAL_PANELS).map(|i| a + 0.5 * h * i as f64).collect();
    let vals: Vec<f64> = nodes.iter().map(|&x| f(x)).collect();
    let mut evaluations = vals.len();
    let mut coarse = 0.0;
    let mut stack = Vec::with_capacity(64);
    for k in 0..INITIAL_PANELS {
        let (pa, pb) = (nodes[2 * k], if k + 1 == INITIAL_PANELS { b } else { nodes[2 * k + 2] });
        let whole = simpson(pa, pb, vals[2 * k], vals[2 * k + 1], vals[2 * k + 2]);
        coarse += whole;
        stack.push(Panel {
            a: pa,
            b: pb,
            fa: vals[2 * k],
            fm: vals[2 * k + 1],
            fb: vals[2 * k + 2],
            whole,
            tol: 0.0,
            depth: 0,
        });
    }
    let total_tol = abs_tol.max(rel_tol * coarse.abs());
    for p in stack.iter_mut() {
        p.tol = total_tol / INITIAL_PANELS as f64;
    }

    let mut value = 0.0;
    let mut error_estimate = 0.0;
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let flm = f(lm);
        let frm = f(rm);
        evaluations += 2;
        let left = simpson(p.a, m, p.fa, flm, p.fm);
        let right = simpson(m, p.b, p.fm, frm, p.fb);
        let diff = left + right - p.whole;
        if diff.abs() <= 15.0 * p.tol || p.depth >= MAX_DEPTH || !(m > p.a && p.b > m) {
            value += left + right + diff / 15.0;
            error_estimate += diff.abs() / 15.0;
        } else {
            let tol = 0.5 * p.tol;
            stack.push(Panel { a: p.a, b: m, fa: p.fa, fm: flm, fb: p.fm, whole: left, tol, depth: p.depth + 1 });
            stack.push(Panel { a: m, b: p.b, fa: p.fm, fm: frm, fb: p.fb, whole: right, tol, depth: p.depth + 1 });
        }
    }
    Integral { value, error_estimate, truncation_bound: 0.0, evaluations, covered_to: b }
}

/// Integrates over `[0, upper]` (`upper` may be infinite) on the panels
/// `[0, s], [s, 2s], [2s, 4s], ...`. For infinite ranges the loop stops once
/// `tail(t)`, a bound on the mass beyond `t`, falls below tolerance.
pub fn integrate_dyadic<F, G>(f: &F, upper: f64, scale: f64, tail: &G, abs_tol: f64, rel_tol: f64) -> Integral
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let mut out = Integral { value: 0.0, error_estimate: 0.0, truncation_bound: 0.0, evaluations: 0, covered_to: 0.0 };
    if !(upper > 0.0) {
        return out;
    }
    let mut lo = 0.0;
    let mut hi = scale.min(upper);
    for _ in 0..2100 {
        let seg = adaptive_simpson(f, lo, hi, abs_tol * 0.05, rel_tol * 0.25);
        out.value += seg.value;
        out.error_estimate += seg.error_estimate;
        out.evaluations += seg.evaluations;
        out.covered_to = hi;
        if hi >= upper {
            return out;
        }
        let remaining = tail(hi);
        if upper.is_infinite() && remaining.abs() <= abs_tol.max(rel_tol * out.value.abs()) * 0.1 {
            out.truncation_bound = remaining.abs();
            return out;
        }
        lo = hi;
        hi = (2.0 * hi).min(upper);
        if !hi.is_finite() {
            break;
        }
    }
    out.truncation_bound = tail(lo).abs();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_endpoint_singularities() {
        let r = adaptive_simpson(&|x: f64| x * x, 0.0, 3.0, 1e-14, 1e-14);
        assert!((r.value - 9.0).abs() < 1e-12);
        // sqrt endpoint behaviour: int_0^1 sqrt(1 - t) dt = 2/3
        let r = adaptive_simpson(&|t: f64| (1.0 - t).max(0.0).sqrt(), 0.0, 1.0, 1e-13, 1e-12);
        assert!((r.value - 2.0 / 3.0).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn half_infinite() {
        let r = integrate_dyadic(&|t: f64| (-t).exp(), f64::INFINITY, 1.0, &|t: f64| (-t).exp(), 1e-14, 1e-12);
        assert!((r.value - 1.0).abs() < 1e-11, "{}", r.value);
        let r = integrate_dyadic(
            &|t: f64| 1.0 / (1.0 + t).powi(3),
            f64::INFINITY,
            1.0,
            &|t: f64| 0.5 / (1.0 + t).powi(2),
            1e-13,
            1e-12,
        );
        assert!((r.value - 0.5).abs() < 1e-10, "{}", r.value);
        let r = integrate_dyadic(&|t: f64| t, 3.0, 1.0, &|_| 0.0, 1e-14, 1e-14);
        assert!((r.value - 4.5).abs() < 1e-12);
    }
}
