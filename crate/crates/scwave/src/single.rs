//! Uncoupled density evolution, the single-system potential, fixed points,
//! thresholds and the energy gap.

use std::sync::Arc;

use crate::density::{ChannelFamily, ChannelSpec, Density, DiracKind, Grid};
use crate::ensemble::DegreeDistribution;
use crate::error::{invalid, Error, Result};
use crate::numeric::{bisect_predicate, bisect_root, iterate_scalar, BISECTION_STEPS, FP_MAX_ITERS, FP_TOL};

/// Level below which an iteration counts as having reached perfect knowledge.
pub const ZERO_LEVEL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointReport {
    pub x_good: f64,
    pub x_unst: Option<f64>,
    pub x_bad: Option<f64>,
    /// Limit of the iteration started at `x = 1`.
    pub converged_from_one: f64,
    pub iterations: usize,
}

/// `c ⍟ λ^⍟(ρ^⊞(x))`.
pub fn de_step_uncoupled(x: &Density, c: &Density, d: &DegreeDistribution) -> Result<Density> {
    let y = Density::poly_lift_cn(&d.rho, x)?;
    let l = Density::poly_lift_vn(&d.lambda, &y)?;
    c.vn_convolve(&l)
}

/// `x ← ε λ(1 − ρ(1 − x))`.
pub fn bec_de_step(x: f64, eps: f64, d: &DegreeDistribution) -> f64 {
    eps * d.lambda(1.0 - d.rho(1.0 - x))
}

/// Single-system potential
/// `H(R^⊞(x))/R'(1) + H(ρ^⊞(x)) − H(x ⊞ ρ^⊞(x)) − H(c ⍟ L^⍟(ρ^⊞(x)))/L'(1)`.
pub fn potential_single(x: &Density, c: &Density, d: &DegreeDistribution) -> Result<f64> {
    let r_lift = Density::poly_lift_cn(&d.big_r, x)?;
    let rho_lift = Density::poly_lift_cn(&d.rho, x)?;
    let x_rho = x.cn_convolve(&rho_lift)?;
    let l_lift = Density::poly_lift_vn(&d.big_l, &rho_lift)?;
    let c_l = c.vn_convolve(&l_lift)?;
    Ok(r_lift.entropy() / d.rp1 + rho_lift.entropy() - x_rho.entropy() - c_l.entropy() / d.lp1)
}

/// BEC potential, normalized so that `W(0) = 0`.
pub fn bec_potential(x: f64, eps: f64, d: &DegreeDistribution) -> f64 {
    let rho1 = d.rho(1.0 - x);
    (1.0 - d.big_r(1.0 - x)) / d.rp1 - x * rho1 - eps / d.lp1 * d.big_l(1.0 - rho1)
}

/// `dW/dx = ρ'(1−x)(x − ελ(1−ρ(1−x)))`.
pub fn bec_potential_derivative(x: f64, eps: f64, d: &DegreeDistribution) -> f64 {
    d.rho_prime(1.0 - x) * (x - bec_de_step(x, eps, d))
}

/// Limit of the BEC iteration from `x0`; stops early below [`ZERO_LEVEL`].
pub fn iterate_bec(x0: f64, eps: f64, d: &DegreeDistribution) -> (f64, usize) {
    let (x, it) = iterate_scalar(x0, FP_MAX_ITERS, FP_TOL, |x| bec_de_step(x, eps, d), |x| x < ZERO_LEVEL);
    if x < ZERO_LEVEL {
        (0.0, it)
    } else {
        (x, it)
    }
}

pub fn fixed_points_bec(eps: f64, d: &DegreeDistribution) -> Result<FixedPointReport> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(invalid(format!("erasure probability {eps} outside [0,1]")));
    }
    let (from_one, iterations) = iterate_bec(1.0, eps, d);
    let x_good = 0.0;
    if from_one <= x_good {
        return Ok(FixedPointReport {
            x_good,
            x_unst: None,
            x_bad: None,
            converged_from_one: from_one,
            iterations,
        });
    }
    // Unstable point: sign change of step(x) − x strictly between the two.
    // Below it the map pulls towards 0 (step < x); scan to find a bracket.
    let h = |x: f64| bec_de_step(x, eps, d) - x;
    let n = 4000;
    let mut bracket = None;
    let mut prev = from_one * 1e-6;
    for k in 1..=n {
        let x = from_one * k as f64 / n as f64 * (1.0 - 1e-9);
        if h(prev) < 0.0 && h(x) >= 0.0 {
            bracket = Some((prev, x));
            break;
        }
        prev = x;
    }
    let x_unst = match bracket {
        Some((a, b)) => Some(bisect_root(a, b, BISECTION_STEPS, |x| Ok(h(x)))?),
        None => None,
    };
    Ok(FixedPointReport {
        x_good,
        x_unst,
        x_bad: Some(from_one),
        converged_from_one: from_one,
        iterations,
    })
}

/// Largest ε for which the iteration from 1 reaches zero.
pub fn threshold_bp(d: &DegreeDistribution) -> f64 {
    bisect_predicate(0.0, 1.0, BISECTION_STEPS, |eps| iterate_bec(1.0, eps, d).0 == 0.0)
}

/// `W(x_BP) − W(0)` on the BEC.
pub fn energy_gap(eps: f64, d: &DegreeDistribution) -> Result<f64> {
    let (x_bp, _) = iterate_bec(1.0, eps, d);
    if x_bp == 0.0 {
        return Err(Error::NoBadFixedPoint(eps));
    }
    Ok(bec_potential(x_bp, eps, d))
}

/// Root of the energy gap on the BEC.
pub fn threshold_map_bec(d: &DegreeDistribution) -> Result<f64> {
    let eps_bp = threshold_bp(d);
    // just above the BP threshold the gap is positive; at ε = 1 negative
    let lo = (eps_bp + 1e-9).min(1.0);
    bisect_root(lo, 1.0, BISECTION_STEPS, |e| energy_gap(e, d))
}

/// Options for density-valued DE runs.
#[derive(Debug, Clone)]
pub struct DensityDeOptions {
    pub grid: Arc<Grid>,
    pub max_iters: usize,
    /// Stop when the L1 change between iterates is below this.
    pub tol: f64,
    pub bisection_steps: usize,
}

impl Default for DensityDeOptions {
    fn default() -> Self {
        DensityDeOptions {
            grid: Grid::standard(),
            max_iters: 2000,
            tol: 1e-10,
            bisection_steps: 30,
        }
    }
}

/// Iterates density DE from `Δ₀` to its limit (the BP fixed point).
pub fn iterate_density(c: &Density, d: &DegreeDistribution, opts: &DensityDeOptions) -> Result<(Density, usize)> {
    let mut x = Density::dirac(&opts.grid, DiracKind::Zero);
    for it in 1..=opts.max_iters {
        let nx = de_step_uncoupled(&x, c, d)?;
        let change = nx.l1_distance(&x)?;
        x = nx;
        if change < opts.tol || x.entropy() < ZERO_LEVEL {
            return Ok((x, it));
        }
    }
    Ok((x, opts.max_iters))
}

fn spec_at(family: ChannelFamily, param: f64) -> Result<ChannelSpec> {
    ChannelSpec::new(family, param)
}

/// Parameter range ordered from best to worst channel.
fn param_range(family: ChannelFamily) -> (f64, f64) {
    match family {
        ChannelFamily::Bec => (0.0, 1.0),
        ChannelFamily::Bsc => (0.0, 0.5),
        ChannelFamily::Biawgn => (0.05, 20.0),
    }
}

/// Energy gap with density states: `W_s(x_BP) − W_s(Δ∞)`.
pub fn energy_gap_density(spec: &ChannelSpec, d: &DegreeDistribution, opts: &DensityDeOptions) -> Result<f64> {
    let c = spec.density(&opts.grid);
    let (x_bp, _) = iterate_density(&c, d, opts)?;
    if x_bp.entropy() < ZERO_LEVEL {
        return Err(Error::NoBadFixedPoint(spec.parameter));
    }
    let dinf = Density::dirac(&opts.grid, DiracKind::Infinity);
    Ok(potential_single(&x_bp, &c, d)? - potential_single(&dinf, &c, d)?)
}

/// BP threshold for a channel family, returned as a channel spec (parameter
/// and entropy) from density DE.
pub fn threshold_bp_density(family: ChannelFamily, d: &DegreeDistribution, opts: &DensityDeOptions) -> Result<ChannelSpec> {
    let (lo, hi) = param_range(family);
    let mut err = None;
    let p = bisect_predicate(lo, hi, opts.bisection_steps, |p| match spec_at(family, p) {
        Ok(s) => {
            let c = s.density(&opts.grid);
            match iterate_density(&c, d, opts) {
                Ok((x, _)) => x.entropy() < ZERO_LEVEL,
                Err(e) => {
                    err = Some(e);
                    false
                }
            }
        }
        Err(e) => {
            err = Some(e);
            false
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    spec_at(family, p)
}

/// MAP (potential) threshold for a channel family from density DE.
pub fn threshold_map(family: ChannelFamily, d: &DegreeDistribution, opts: &DensityDeOptions) -> Result<ChannelSpec> {
    if family == ChannelFamily::Bec {
        return spec_at(family, threshold_map_bec(d)?);
    }
    let bp = threshold_bp_density(family, d, opts)?;
    let (_, hi) = param_range(family);
    let lo = bp.parameter + (hi - bp.parameter) * 1e-6;
    let p = bisect_root(lo, hi, opts.bisection_steps, |p| {
        match energy_gap_density(&spec_at(family, p)?, d, opts) {
            Ok(g) => Ok(g),
            Err(Error::NoBadFixedPoint(_)) => Ok(1.0),
            Err(e) => Err(e),
        }
    })?;
    spec_at(family, p)
}
