//! Small numerical building blocks: bisection, scalar fixed-point iteration,
//! trapezoid rules and adaptive Gauss–Kronrod quadrature.

use crate::error::{Error, Result};

pub const BISECTION_STEPS: usize = 60;
pub const FP_TOL: f64 = 1e-12;
pub const FP_MAX_ITERS: usize = 100_000;

/// Bisection on a predicate: `pred(lo)` is true, `pred(hi)` is false.
/// Returns the midpoint of the final bracket.
pub fn bisect_predicate<F: FnMut(f64) -> bool>(mut lo: f64, mut hi: f64, steps: usize, mut pred: F) -> f64 {
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Root of a continuous function with a sign change on `[lo, hi]`.
pub fn bisect_root<F: FnMut(f64) -> Result<f64>>(lo: f64, hi: f64, steps: usize, mut f: F) -> Result<f64> {
    let flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Bracket { lo, hi });
    }
    let (mut a, mut b) = (lo, hi);
    let neg_at_a = flo < 0.0;
    for _ in 0..steps {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm < 0.0) == neg_at_a {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Iterates `x ← map(x)` until `|Δx| < tol` or `max_iters`; stops early when
/// `stop(x)` holds. Returns the final value and the iteration count.
pub fn iterate_scalar<M, S>(mut x: f64, max_iters: usize, tol: f64, mut map: M, mut stop: S) -> (f64, usize)
where
    M: FnMut(f64) -> f64,
    S: FnMut(f64) -> bool,
{
    for it in 1..=max_iters {
        let nx = map(x);
        let dx = (nx - x).abs();
        x = nx;
        if dx < tol || stop(x) {
            return (x, it);
        }
    }
    (x, max_iters)
}

/// Trapezoid rule on a uniform grid with spacing `h`.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}

/// Sliding unit-window trapezoid averages: `out[i] = (1/K)·trap(v[i..=i+K])`.
/// `values.len()` must be at least `k + 1`.
pub fn window_trapezoid(values: &[f64], k: usize) -> Vec<f64> {
    let n = values.len();
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + values[i];
    }
    let kf = k as f64;
    (0..n - k)
        .map(|i| {
            let inner = prefix[i + k] - prefix[i + 1];
            (inner + 0.5 * (values[i] + values[i + k])) / kf
        })
        .collect()
}

const GK_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const GK_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * GK_WK[7];
    let mut g = fc * GK_WG[3];
    for i in 0..7 {
        let dx = h * GK_X[i];
        let s = f(c - dx) + f(c + dx);
        k += GK_WK[i] * s;
        if i % 2 == 1 {
            g += GK_WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]` with
/// interior breakpoints. Deterministic: intervals are refined in a fixed order.
pub fn integrate<F: Fn(f64) -> f64>(f: F, points: &[f64], abs_tol: f64, rel_tol: f64) -> f64 {
    let mut total = 0.0;
    for w in points.windows(2) {
        if w[1] > w[0] {
            total += adapt(&f, w[0], w[1], abs_tol, rel_tol, 0);
        }
    }
    total
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64, rel_tol: f64, depth: u32) -> f64 {
    let (v, err) = gk15(f, a, b);
    if err <= abs_tol.max(rel_tol * v.abs()) || depth >= 40 {
        return v;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * abs_tol, rel_tol, depth + 1) + adapt(f, m, b, 0.5 * abs_tol, rel_tol, depth + 1)
}

/// Linear interpolation of `ys` sampled at `x0 + i·h`, clamped to end values.
pub fn interp_uniform(ys: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let t = (x - x0) / h;
    if t <= 0.0 {
        return ys[0];
    }
    let n = ys.len();
    if t >= (n - 1) as f64 {
        return ys[n - 1];
    }
    let i = t.floor() as usize;
    let f = t - i as f64;
    ys[i] * (1.0 - f) + ys[i + 1] * f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_sqrt2() {
        let r = bisect_root(0.0, 2.0, 60, |x| Ok(x * x - 2.0)).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
        assert!(bisect_root(2.0, 3.0, 60, |x| Ok(x * x - 2.0)).is_err());
        let p = bisect_predicate(0.0, 2.0, 60, |x| x * x < 2.0);
        assert!((p - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn gauss_kronrod_polynomials_and_gaussian() {
        let v = integrate(|x| x.powi(7) - 3.0 * x * x, &[-1.0, 2.0], 1e-14, 1e-14);
        let exact = (2f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-12);
        let g = integrate(|x| (-x * x / 2.0).exp(), &[-40.0, 0.0, 40.0], 1e-14, 1e-13);
        assert!((g - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn window_trapezoid_of_linear_is_midpoint() {
        let v: Vec<f64> = (0..30).map(|i| 0.5 * i as f64).collect();
        let w = window_trapezoid(&v, 10);
        assert_eq!(w.len(), 20);
        for (i, x) in w.iter().enumerate() {
            assert!((x - 0.5 * (i as f64 + 5.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn trapezoid_exact_for_linear() {
        let v = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(trapezoid(&v, 0.5), 2.25);
    }
}
