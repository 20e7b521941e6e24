//! Scalar coupled systems `x ← f(g(x; ε); ε)`: potential, fixed points,
//! thresholds and the coupled recursion, with BEC, GLDPC and
//! compressive-sensing instances.

mod cs;
mod gldpc;

pub use cs::{mmse_bernoulli_gaussian, mutual_info_bernoulli_gaussian, BernoulliGaussian, CompressiveSensing};
pub use gldpc::Gldpc;

use crate::coupled::{CoupledSystem, Profile, Seeding};
use crate::ensemble::DegreeDistribution;
use crate::error::{invalid, Error, Result};
use crate::numeric::{bisect_predicate, bisect_root, integrate, iterate_scalar, BISECTION_STEPS, FP_MAX_ITERS};

/// Direction in which the control parameter degrades the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Larger ε is worse (erasure probability).
    Increasing,
    /// Smaller ε is worse (measurement rate δ).
    Decreasing,
}

pub trait ScalarSystem: Send + Sync {
    fn label(&self) -> String;
    fn f(&self, y: f64, eps: f64) -> f64;
    fn g(&self, x: f64, eps: f64) -> f64;

    fn g_prime(&self, x: f64, eps: f64) -> f64 {
        let h = 1e-6 * (1.0 + x.abs());
        let lo = (x - h).max(0.0);
        let hi = (x + h).min(self.x_max());
        (self.g(hi, eps) - self.g(lo, eps)) / (hi - lo)
    }

    fn x_max(&self) -> f64;

    fn y_max(&self, eps: f64) -> f64 {
        self.g(self.x_max(), eps)
    }

    /// Admissible range of the control parameter.
    fn param_range(&self) -> (f64, f64);

    fn direction(&self) -> Direction {
        Direction::Increasing
    }

    /// `G(x) = ∫₀ˣ g(t) dt`.
    fn big_g(&self, x: f64, eps: f64) -> f64 {
        integrate(|t| self.g(t, eps), &[0.0, x], 1e-14, 1e-12)
    }

    /// `F(y) = ∫ f(s) ds` from `g(0)` to `y`, so that the potential vanishes at 0.
    fn big_f(&self, y: f64, eps: f64) -> f64 {
        integrate(|s| self.f(s, eps), &[self.g(0.0, eps), y], 1e-14, 1e-12)
    }

    /// `U(x) = x g(x) − G(x) − F(g(x))`.
    fn potential(&self, x: f64, eps: f64) -> f64 {
        let gx = self.g(x, eps);
        x * gx - self.big_g(x, eps) - self.big_f(gx, eps)
    }

    /// Seeding used by the coupled recursion.
    fn seeding(&self) -> Seeding {
        Seeding::Scalar
    }
}

pub fn scalar_de_step<S: ScalarSystem + ?Sized>(x: f64, sys: &S, eps: f64) -> Result<f64> {
    if !(0.0..=sys.x_max()).contains(&x) {
        return Err(invalid(format!("state {x} outside [0, {}]", sys.x_max())));
    }
    Ok(sys.f(sys.g(x, eps), eps))
}

pub fn scalar_potential<S: ScalarSystem + ?Sized>(x: f64, sys: &S, eps: f64) -> f64 {
    sys.potential(x, eps)
}

/// Limit of the recursion from `x0`.
pub fn iterate_from<S: ScalarSystem + ?Sized>(sys: &S, x0: f64, eps: f64) -> f64 {
    iterate_scalar(x0, FP_MAX_ITERS, 1e-13, |x| sys.f(sys.g(x, eps), eps), |_| false).0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarFixedPoints {
    pub x_good: f64,
    pub x_unst: Option<f64>,
    pub x_bad: Option<f64>,
}

fn is_bad(x_good: f64, x_lim: f64, x_max: f64) -> bool {
    x_lim - x_good > 1e-7 * x_max + 1e-3 * x_good
}

/// Limits from 0 and from `x_max`; the second is `None` when both coincide.
fn stable_points<S: ScalarSystem + ?Sized>(sys: &S, eps: f64) -> (f64, Option<f64>) {
    let x_good = iterate_from(sys, 0.0, eps);
    let x_lim = iterate_from(sys, sys.x_max(), eps);
    (x_good, is_bad(x_good, x_lim, sys.x_max()).then_some(x_lim))
}

pub fn fixed_points<S: ScalarSystem + ?Sized>(sys: &S, eps: f64) -> ScalarFixedPoints {
    let (x_good, x_lim) = match stable_points(sys, eps) {
        (x_good, Some(x_lim)) => (x_good, x_lim),
        (x_good, None) => {
            return ScalarFixedPoints {
                x_good,
                x_unst: None,
                x_bad: None,
            }
        }
    };
    // sign scan of f(g(x)) − x between the stable points, geometric near x_good
    let h = |x: f64| sys.f(sys.g(x, eps), eps) - x;
    let a = x_good.max(1e-12 * sys.x_max()) * (1.0 + 1e-6);
    let b = x_lim * (1.0 - 1e-9);
    let n = 600;
    let pts: Vec<f64> = (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            if i < n / 2 {
                a * (b / a).powf(2.0 * t)
            } else {
                a + (b - a) * (2.0 * t - 1.0)
            }
        })
        .collect();
    let mut sorted = pts;
    sorted.sort_by(|p, q| p.total_cmp(q));
    let mut x_unst = None;
    for w in sorted.windows(2) {
        let (ha, hb) = (h(w[0]), h(w[1]));
        if ha < 0.0 && hb >= 0.0 {
            x_unst = bisect_root(w[0], w[1], BISECTION_STEPS, |x| Ok(h(x))).ok();
            break;
        }
    }
    ScalarFixedPoints {
        x_good,
        x_unst,
        x_bad: Some(x_lim),
    }
}

/// `ΔE = U(x_bad) − U(x_good)`.
pub fn scalar_energy_gap<S: ScalarSystem + ?Sized>(sys: &S, eps: f64) -> Result<f64> {
    let (x_good, x_bad) = stable_points(sys, eps);
    let x_bad = x_bad.ok_or(Error::NoBadFixedPoint(eps))?;
    Ok(sys.potential(x_bad, eps) - sys.potential(x_good, eps))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarThresholds {
    pub eps_a: f64,
    pub eps_pot: f64,
}

/// Bisection steps to shrink a bracket of `width` below `PARAM_TOL`. Near
/// `ε_a` the iteration crawls through a bottleneck, so finer brackets are costly.
fn steps_for(width: f64) -> usize {
    (width.abs() / PARAM_TOL).log2().ceil().max(1.0) as usize
}

const PARAM_TOL: f64 = 1e-10;

/// `ε_a` by bisection on convergence to `x_good` from `x_max`, `ε_pot` by a
/// scan for the sign change of `ΔE` followed by bisection.
pub fn scalar_thresholds<S: ScalarSystem + ?Sized>(sys: &S) -> Result<ScalarThresholds> {
    let (lo, hi) = sys.param_range();
    let (good_end, bad_end) = match sys.direction() {
        Direction::Increasing => (lo, hi),
        Direction::Decreasing => (hi, lo),
    };
    let good = |eps: f64| stable_points(sys, eps).1.is_none();
    if !good(good_end) {
        return Err(Error::Bracket { lo, hi });
    }
    // far past the threshold some systems become monostable again (at a bad
    // value), so locate the first failure by a scan before bisecting
    let steps = 64;
    let at = |i: usize| good_end + (bad_end - good_end) * i as f64 / steps as f64;
    let first_bad = (1..=steps).find(|&i| !good(at(i))).ok_or(Error::Bracket { lo, hi })?;
    let eps_a = bisect_predicate(at(first_bad - 1), at(first_bad), steps_for(at(0) - at(1)), good);
    let mut prev = eps_a;
    for i in 1..=steps {
        let eps = eps_a + (bad_end - eps_a) * i as f64 / steps as f64;
        let gap = match scalar_energy_gap(sys, eps) {
            Ok(g) => g,
            Err(Error::NoBadFixedPoint(_)) => continue,
            Err(e) => return Err(e),
        };
        if gap < 0.0 {
            let eps_pot = bisect_root(prev, eps, steps_for(eps - prev), |e| match scalar_energy_gap(sys, e) {
                Ok(g) => Ok(g),
                // both stable points merged next to ε_a: the gap is positive there
                Err(Error::NoBadFixedPoint(_)) => Ok(1.0),
                Err(err) => Err(err),
            })?;
            return Ok(ScalarThresholds { eps_a, eps_pot });
        }
        prev = eps;
    }
    Err(Error::Bracket { lo: eps_a, hi: bad_end })
}

/// BEC LDPC instance: `g(x) = 1 − ρ(1−x)`, `f(y) = ε λ(y)`.
#[derive(Debug, Clone)]
pub struct BecScalar {
    pub d: DegreeDistribution,
}

impl BecScalar {
    pub fn new(d: DegreeDistribution) -> Self {
        BecScalar { d }
    }
}

impl ScalarSystem for BecScalar {
    fn label(&self) -> String {
        format!("bec-ldpc {}", self.d)
    }
    fn f(&self, y: f64, eps: f64) -> f64 {
        eps * self.d.lambda(y)
    }
    fn g(&self, x: f64, _eps: f64) -> f64 {
        1.0 - self.d.rho(1.0 - x)
    }
    fn g_prime(&self, x: f64, _eps: f64) -> f64 {
        self.d.rho_prime(1.0 - x)
    }
    fn x_max(&self) -> f64 {
        1.0
    }
    fn param_range(&self) -> (f64, f64) {
        (1e-6, 1.0)
    }
    fn big_g(&self, x: f64, _eps: f64) -> f64 {
        x - (1.0 - self.d.big_r(1.0 - x)) / self.d.rp1
    }
    fn big_f(&self, y: f64, eps: f64) -> f64 {
        eps * self.d.big_l(y) / self.d.lp1
    }
    fn seeding(&self) -> Seeding {
        Seeding::Channel
    }
}

/// Adapter running a scalar system on the coupled chain.
#[derive(Debug, Clone)]
pub struct ScalarCoupled<'a, S: ScalarSystem + ?Sized> {
    pub sys: &'a S,
    pub eps: f64,
    pub fixed: ScalarFixedPoints,
}

impl<'a, S: ScalarSystem + ?Sized> ScalarCoupled<'a, S> {
    pub fn new(sys: &'a S, eps: f64) -> Result<Self> {
        let fixed = fixed_points(sys, eps);
        if fixed.x_bad.is_none() {
            return Err(Error::NoBadFixedPoint(eps));
        }
        Ok(ScalarCoupled { sys, eps, fixed })
    }
}

impl<S: ScalarSystem + ?Sized> CoupledSystem for ScalarCoupled<'_, S> {
    type State = f64;
    fn g(&self, x: &f64) -> f64 {
        self.sys.g(*x, self.eps)
    }
    fn f(&self, y: &f64) -> f64 {
        self.sys.f(*y, self.eps)
    }
    fn mean(&self, xs: &[&f64]) -> f64 {
        xs.iter().copied().sum::<f64>() / xs.len() as f64
    }
    fn observable(&self, x: &f64) -> f64 {
        *x
    }
    fn seed_state(&self) -> f64 {
        self.fixed.x_good
    }
    fn init_state(&self) -> f64 {
        self.sys.x_max()
    }
    fn seeding(&self) -> Seeding {
        self.sys.seeding()
    }
    fn bad_level(&self) -> f64 {
        self.fixed.x_bad.unwrap_or(self.sys.x_max())
    }
}

/// `Σ_z (x_z g(x_z) − G(x_z)) − Σ_z F(mean_i g(x_{z+i}))`, right edge replicated.
pub fn coupled_potential_scalar<S: ScalarSystem + ?Sized>(p: &Profile<f64>, sys: &S, eps: f64) -> f64 {
    let n = p.len();
    let g: Vec<f64> = p.states.iter().map(|&x| sys.g(x, eps)).collect();
    let mut total = 0.0;
    for k in 0..n {
        let x = p.states[k];
        let avg = (0..p.w).map(|i| g[(k + i).min(n - 1)]).sum::<f64>() / p.w as f64;
        total += x * g[k] - sys.big_g(x, eps) - sys.big_f(avg, eps);
    }
    total
}
