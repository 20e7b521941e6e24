//! Continuum traveling-wave solutions `X(z)` of the coupled recursion and
//! their velocity.
//!
//! The shape equation `X(z) − v X'(z) = ∫₀¹du f(∫₀¹ds g(X(z−u+s)))` is solved
//! by damped fixed-point iteration with `v` recomputed once per sweep from
//! the energy gap, `v = ΔE / ∫dz weight(X) X'²`, and the profile recentered
//! so that its half-height crossing stays at `z = 0`.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use statrs::function::erf::erf;

use crate::density::{ChannelSpec, Density, DiracKind, Grid};
use crate::ensemble::{DegreeDistribution, Poly};
use crate::error::{invalid, Error, Result};
use crate::numeric::{interp_uniform, trapezoid, window_trapezoid};
use crate::scalar::{fixed_points, ScalarSystem};
use crate::single::{
    bec_potential, fixed_points_bec, iterate_bec, iterate_density, potential_single, threshold_bp, threshold_map_bec,
    DensityDeOptions, ZERO_LEVEL,
};

/// Discretization and iteration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverGrid {
    pub z_min: f64,
    pub z_max: f64,
    /// Grid points per unit window (`h_z = 1/K`).
    pub per_unit: usize,
    pub damping: f64,
    pub max_sweeps: usize,
    pub tol: f64,
}

impl Default for SolverGrid {
    fn default() -> Self {
        SolverGrid {
            z_min: -8.0,
            z_max: 8.0,
            per_unit: 20,
            damping: 0.5,
            max_sweeps: 10_000,
            tol: 1e-8,
        }
    }
}

impl SolverGrid {
    pub fn h(&self) -> f64 {
        1.0 / self.per_unit as f64
    }

    /// Number of grid points; the span must be a whole number of steps.
    pub fn points(&self) -> Result<usize> {
        if self.per_unit == 0 || !(self.z_max > self.z_min) {
            return Err(invalid("solver grid needs z_max > z_min and K >= 1"));
        }
        let steps = (self.z_max - self.z_min) * self.per_unit as f64;
        if (steps - steps.round()).abs() > 1e-9 {
            return Err(invalid(format!(
                "z-range [{}, {}] is not a whole number of steps 1/{}",
                self.z_min, self.z_max, self.per_unit
            )));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(invalid(format!("damping {} outside (0,1]", self.damping)));
        }
        Ok(steps.round() as usize + 1)
    }

    pub fn z(&self, i: usize) -> f64 {
        self.z_min + i as f64 * self.h()
    }
}

#[derive(Debug, Clone)]
pub struct SolitonSolution<S> {
    pub grid: SolverGrid,
    pub shape: Vec<S>,
    /// Positions per iteration, normalized by `w`.
    pub velocity: f64,
    pub residual: f64,
    pub iterations: usize,
    /// `∫dz weight(X) X'²` (positive).
    pub denominator: f64,
    pub delta_e: f64,
}

impl<S> SolitonSolution<S> {
    pub fn z_grid(&self) -> Vec<f64> {
        (0..self.shape.len()).map(|i| self.grid.z(i)).collect()
    }

    /// `epsilon,v,denominator,deltaE,residual,iters`.
    pub fn write_summary_csv<W: Write>(&self, param: f64, mut w: W) -> Result<()> {
        writeln!(w, "epsilon,v,denominator,deltaE,residual,iters")?;
        writeln!(
            w,
            "{},{},{},{},{},{}",
            param, self.velocity, self.denominator, self.delta_e, self.residual, self.iterations
        )?;
        Ok(())
    }
}

impl SolitonSolution<f64> {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "z,value")?;
        for (i, x) in self.shape.iter().enumerate() {
            writeln!(w, "{},{}", self.grid.z(i), x)?;
        }
        Ok(())
    }
}

impl SolitonSolution<Density> {
    /// One density CSV per grid point (`z_0000.csv`, …) plus `summary.csv`.
    pub fn write_dir(&self, dir: &Path, param: f64) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (i, x) in self.shape.iter().enumerate() {
            let f = std::fs::File::create(dir.join(format!("z_{i:04}.csv")))?;
            x.write_csv(std::io::BufWriter::new(f))?;
        }
        let f = std::fs::File::create(dir.join("summary.csv"))?;
        self.write_summary_csv(param, std::io::BufWriter::new(f))
    }
}

/// A scalar shape equation.
pub trait ScalarWave: Sync {
    fn g(&self, x: f64) -> f64;
    fn f(&self, y: f64) -> f64;
    /// Integrand weight of the velocity denominator.
    fn weight(&self, x: f64) -> f64;
    fn delta_e(&self) -> f64;
    fn x_left(&self) -> f64;
    fn x_right(&self) -> f64;
}

/// Largest symbol of the five-point derivative stencil, `max (8 sin k − sin 2k)/6`.
const STENCIL_SYMBOL: f64 = 1.3722;

/// Damping actually applied: the explicit `v X'` term amplifies grid-scale
/// modes by `|1 − θ + iθa|` with `a = v·1.37/h`, which must stay below one.
fn stable_damping(theta: f64, v: f64, h: f64) -> f64 {
    let a = v.abs() * STENCIL_SYMBOL / h;
    theta.min(1.0 / (1.0 + a * a))
}

/// Five-point central differences, three-point next to the ends and
/// one-sided at the ends.
pub fn derivative(xs: &[f64], h: f64) -> Vec<f64> {
    let n = xs.len();
    (0..n)
        .map(|i| match i {
            0 => (xs[1] - xs[0]) / h,
            _ if i == n - 1 => (xs[n - 1] - xs[n - 2]) / h,
            _ if i == 1 || i == n - 2 => (xs[i + 1] - xs[i - 1]) / (2.0 * h),
            _ => (8.0 * (xs[i + 1] - xs[i - 1]) - (xs[i + 2] - xs[i - 2])) / (12.0 * h),
        })
        .collect()
}

/// `∫₀¹du f(∫₀¹ds g(X(z−u+s)))` by grid-aligned trapezoids, with `X` extended
/// by its end values.
pub fn wave_rhs<W: ScalarWave + ?Sized>(wave: &W, xs: &[f64], k: usize) -> Vec<f64> {
    let n = xs.len();
    let mut ext = Vec::with_capacity(n + 2 * k);
    ext.extend(std::iter::repeat(xs[0]).take(k));
    ext.extend_from_slice(xs);
    ext.extend(std::iter::repeat(xs[n - 1]).take(k));
    let q: Vec<f64> = ext.iter().map(|&x| wave.g(x)).collect();
    let inner = window_trapezoid(&q, k);
    let fv: Vec<f64> = inner.iter().map(|&y| wave.f(y)).collect();
    window_trapezoid(&fv, k)
}

/// `RHS + v X' − X`.
pub fn wave_residual<W: ScalarWave + ?Sized>(wave: &W, xs: &[f64], v: f64, grid: &SolverGrid) -> Result<Vec<f64>> {
    if grid.points()? != xs.len() {
        return Err(invalid(format!("shape has {} points, grid has {}", xs.len(), grid.points()?)));
    }
    let rhs = wave_rhs(wave, xs, grid.per_unit);
    let dx = derivative(xs, grid.h());
    Ok((0..xs.len()).map(|i| rhs[i] + v * dx[i] - xs[i]).collect())
}

/// `v = ΔE / ∫ weight(X) X'²`; returns `(v, denominator)`.
pub fn wave_velocity<W: ScalarWave + ?Sized>(wave: &W, xs: &[f64], h: f64) -> Result<(f64, f64)> {
    let dx = derivative(xs, h);
    let integrand: Vec<f64> = xs.iter().zip(&dx).map(|(&x, &d)| wave.weight(x) * d * d).collect();
    let den = trapezoid(&integrand, h);
    if !(den.abs() > 1e-300) || !den.is_finite() {
        return Err(Error::VanishingDenominator);
    }
    Ok((wave.delta_e() / den, den))
}

/// First upward crossing of `level`, in grid units (fractional index).
fn crossing_index(obs: &[f64], level: f64) -> Option<f64> {
    (1..obs.len()).find(|&i| obs[i] >= level && obs[i - 1] < level).map(|i| {
        let (a, b) = (obs[i - 1], obs[i]);
        (i - 1) as f64 + (level - a) / (b - a)
    })
}

/// Index of the `z = 0` node.
fn origin(grid: &SolverGrid) -> f64 {
    -grid.z_min * grid.per_unit as f64
}

fn initial_ramp(grid: &SolverGrid, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * 0.5 * (1.0 + erf(grid.z(i)))).collect()
}

pub fn solve_wave<W: ScalarWave + ?Sized>(wave: &W, grid: &SolverGrid) -> Result<SolitonSolution<f64>> {
    let n = grid.points()?;
    let h = grid.h();
    let (lo, hi) = (wave.x_left(), wave.x_right());
    let level = 0.5 * hi;
    let z0 = origin(grid);
    let mut xs = initial_ramp(grid, n, lo, hi);
    let (mut v, _) = wave_velocity(wave, &xs, h)?;
    for sweep in 1..=grid.max_sweeps {
        let rhs = wave_rhs(wave, &xs, grid.per_unit);
        let dx = derivative(&xs, h);
        let theta = stable_damping(grid.damping, v, h);
        let mut next: Vec<f64> = (0..n)
            .map(|i| (1.0 - theta) * xs[i] + theta * (rhs[i] + v * dx[i]))
            .collect();
        next[0] = lo;
        next[n - 1] = hi;
        if let Some(c) = crossing_index(&next, level) {
            let shift = c - z0;
            let shifted: Vec<f64> = (0..n).map(|i| interp_uniform(&next, 0.0, 1.0, i as f64 + shift)).collect();
            next = shifted;
        }
        let change = next.iter().zip(&xs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        xs = next;
        let (nv, den) = wave_velocity(wave, &xs, h)?;
        let dv = (nv - v).abs();
        v = nv;
        if change < grid.tol && dv <= grid.tol * v.abs().max(1e-300) {
            let res = wave_residual(wave, &xs, v, grid)?;
            let residual = res[1..n - 1].iter().fold(0.0f64, |m, r| m.max(r.abs()));
            return Ok(SolitonSolution {
                grid: *grid,
                shape: xs,
                velocity: v,
                residual,
                iterations: sweep,
                denominator: den,
                delta_e: wave.delta_e(),
            });
        }
    }
    Err(Error::NonConvergence {
        what: "soliton shape",
        iterations: grid.max_sweeps,
        residual: f64::NAN,
    })
}

/// BEC shape equation: `g = 1 − ρ(1−x)`, `f = ε λ(y)`, weight `ρ'(1−x)`.
#[derive(Debug, Clone)]
pub struct BecWave {
    pub d: DegreeDistribution,
    pub eps: f64,
    pub x_bp: f64,
    pub delta_e: f64,
}

/// Gaps this small are rounding noise at the MAP threshold.
const GAP_FLOOR: f64 = 1e-12;

impl BecWave {
    pub fn new(d: &DegreeDistribution, eps: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(invalid(format!("erasure probability {eps} outside [0,1]")));
        }
        let (x_bp, _) = iterate_bec(1.0, eps, d);
        if x_bp == 0.0 {
            return Err(invalid(format!("eps={eps} is below the BP threshold: no wave")));
        }
        let mut delta_e = bec_potential(x_bp, eps, d);
        if delta_e < 0.0 {
            if delta_e > -GAP_FLOOR {
                delta_e = 0.0;
            } else {
                return Err(invalid(format!("eps={eps} is above the MAP threshold: no decoding wave")));
            }
        }
        Ok(BecWave {
            d: d.clone(),
            eps,
            x_bp,
            delta_e,
        })
    }
}

impl ScalarWave for BecWave {
    fn g(&self, x: f64) -> f64 {
        1.0 - self.d.rho(1.0 - x)
    }
    fn f(&self, y: f64) -> f64 {
        self.eps * self.d.lambda(y)
    }
    fn weight(&self, x: f64) -> f64 {
        self.d.rho_prime(1.0 - x)
    }
    fn delta_e(&self) -> f64 {
        self.delta_e
    }
    fn x_left(&self) -> f64 {
        0.0
    }
    fn x_right(&self) -> f64 {
        self.x_bp
    }
}

pub fn shape_residual_bec(xs: &[f64], v: f64, eps: f64, d: &DegreeDistribution, grid: &SolverGrid) -> Result<Vec<f64>> {
    let (x_bp, _) = iterate_bec(1.0, eps, d);
    let wave = BecWave {
        d: d.clone(),
        eps,
        x_bp,
        delta_e: 0.0,
    };
    wave_residual(&wave, xs, v, grid)
}

pub fn velocity_from_shape_bec(xs: &[f64], eps: f64, d: &DegreeDistribution, h: f64) -> Result<f64> {
    let wave = BecWave::new(d, eps)?;
    Ok(wave_velocity(&wave, xs, h)?.0)
}

pub fn solve_soliton_bec(eps: f64, d: &DegreeDistribution, grid: &SolverGrid) -> Result<SolitonSolution<f64>> {
    solve_wave(&BecWave::new(d, eps)?, grid)
}

/// Linear approximation
/// `v_l = ((ε_MAP − ε)/L'(1)) L(1 − ρ(1 − x_MAP)) / ∫ρ'(1−X_MAP) X_MAP'²`.
#[derive(Debug, Clone)]
pub struct LinearVelocity {
    pub eps_map: f64,
    pub x_map: f64,
    pub denominator: f64,
    l_factor: f64,
}

impl LinearVelocity {
    pub fn new(d: &DegreeDistribution, grid: &SolverGrid) -> Result<Self> {
        let eps_map = threshold_map_bec(d)?;
        let sol = solve_soliton_bec(eps_map, d, grid)?;
        let x_map = sol.shape[sol.shape.len() - 1];
        Ok(LinearVelocity {
            eps_map,
            x_map,
            denominator: sol.denominator,
            l_factor: d.big_l(1.0 - d.rho(1.0 - x_map)) / d.lp1,
        })
    }

    /// `−dv_l/dε`.
    pub fn slope(&self) -> f64 {
        self.l_factor / self.denominator
    }

    pub fn velocity(&self, eps: f64) -> f64 {
        (self.eps_map - eps) * self.slope()
    }
}

pub fn velocity_linear_bec(eps: f64, d: &DegreeDistribution, grid: &SolverGrid) -> Result<f64> {
    Ok(LinearVelocity::new(d, grid)?.velocity(eps))
}

/// `α ΔE / (w Σ_z ρ'(1−x_z)(x_z − x_{z−1})²)` from a discrete stationary profile.
pub fn bound_vb(profile: &[f64], w: usize, eps: f64, d: &DegreeDistribution, alpha: f64) -> Result<f64> {
    let (x_bp, _) = iterate_bec(1.0, eps, d);
    let gap = bec_potential(x_bp, eps, d);
    let s: f64 = profile
        .windows(2)
        .map(|p| d.rho_prime(1.0 - p[1]) * (p[1] - p[0]).powi(2))
        .sum();
    if !(s > 0.0) {
        return Err(Error::VanishingDenominator);
    }
    Ok(alpha * gap / (w as f64 * s))
}

/// `α ΔE / (2 W(x_u) − W(x_BP))`.
pub fn bound_vb2(eps: f64, d: &DegreeDistribution, alpha: f64) -> Result<f64> {
    let fp = fixed_points_bec(eps, d)?;
    let x_bp = fp.x_bad.ok_or(Error::NoBadFixedPoint(eps))?;
    let x_u = fp.x_unst.ok_or(Error::NoBadFixedPoint(eps))?;
    let gap = bec_potential(x_bp, eps, d);
    let den = 2.0 * bec_potential(x_u, eps, d) - gap;
    if den.abs() < 1e-300 {
        return Err(Error::VanishingDenominator);
    }
    Ok(alpha * gap / den)
}

/// Shape equation of a generic scalar system with boundary values
/// `x_good`, `x_bad` and weight `g'`.
pub struct SystemWave<'a, S: ScalarSystem + ?Sized> {
    pub sys: &'a S,
    pub eps: f64,
    pub x_good: f64,
    pub x_bad: f64,
    pub delta_e: f64,
}

impl<'a, S: ScalarSystem + ?Sized> SystemWave<'a, S> {
    pub fn new(sys: &'a S, eps: f64) -> Result<Self> {
        let fp = fixed_points(sys, eps);
        let x_bad = fp.x_bad.ok_or(Error::NoBadFixedPoint(eps))?;
        let mut delta_e = sys.potential(x_bad, eps) - sys.potential(fp.x_good, eps);
        if delta_e < 0.0 && delta_e > -GAP_FLOOR {
            delta_e = 0.0;
        }
        Ok(SystemWave {
            sys,
            eps,
            x_good: fp.x_good,
            x_bad,
            delta_e,
        })
    }
}

impl<S: ScalarSystem + ?Sized> ScalarWave for SystemWave<'_, S> {
    fn g(&self, x: f64) -> f64 {
        self.sys.g(x, self.eps)
    }
    fn f(&self, y: f64) -> f64 {
        self.sys.f(y, self.eps)
    }
    fn weight(&self, x: f64) -> f64 {
        self.sys.g_prime(x, self.eps)
    }
    fn delta_e(&self) -> f64 {
        self.delta_e
    }
    fn x_left(&self) -> f64 {
        self.x_good
    }
    fn x_right(&self) -> f64 {
        self.x_bad
    }
}

pub fn scalar_soliton<S: ScalarSystem + ?Sized>(sys: &S, eps: f64, grid: &SolverGrid) -> Result<SolitonSolution<f64>> {
    solve_wave(&SystemWave::new(sys, eps)?, grid)
}

/// Density-valued solver setup.
#[derive(Debug, Clone)]
pub struct GeneralOptions {
    pub solver: SolverGrid,
    pub de: DensityDeOptions,
    /// Upper bound on the bytes held by the per-sweep density arrays.
    pub memory_budget: usize,
}

impl Default for GeneralOptions {
    fn default() -> Self {
        GeneralOptions {
            solver: SolverGrid::default(),
            de: DensityDeOptions::default(),
            memory_budget: 4 << 30,
        }
    }
}

struct DensityWave {
    d: DegreeDistribution,
    rho_prime: Poly,
    channel: Density,
    left: Density,
    right: Density,
    delta_e: f64,
}

impl DensityWave {
    fn window(&self, q: &[Density], k: usize) -> Result<Vec<Density>> {
        let kf = k as f64;
        (0..q.len() - k)
            .into_par_iter()
            .map(|i| {
                let mut parts: Vec<(f64, &Density)> = Vec::with_capacity(k + 1);
                parts.push((0.5 / kf, &q[i]));
                for j in i + 1..i + k {
                    parts.push((1.0 / kf, &q[j]));
                }
                parts.push((0.5 / kf, &q[i + k]));
                let m = Density::mixture(&parts)?;
                if q[i..=i + k].iter().any(|d| d.is_signed()) {
                    Ok(m)
                } else {
                    Density::from_parts(m.grid().clone(), m.masses().to_vec(), m.inf_mass(), false)
                }
            })
            .collect()
    }

    fn rhs(&self, xs: &[Density], k: usize) -> Result<Vec<Density>> {
        let mut ext: Vec<&Density> = Vec::with_capacity(xs.len() + 2 * k);
        ext.extend(std::iter::repeat(&self.left).take(k));
        ext.extend(xs.iter());
        ext.extend(std::iter::repeat(&self.right).take(k));
        let q: Vec<Density> = ext
            .par_iter()
            .map(|x| Density::poly_lift_cn(&self.d.rho, x))
            .collect::<Result<_>>()?;
        let inner = self.window(&q, k)?;
        let fv: Vec<Density> = inner
            .par_iter()
            .map(|y| self.channel.vn_convolve(&Density::poly_lift_vn(&self.d.lambda, y)?))
            .collect::<Result<_>>()?;
        self.window(&fv, k)
    }

    fn derivative(xs: &[Density], h: f64) -> Result<Vec<Density>> {
        let n = xs.len();
        (0..n)
            .map(|i| match i {
                0 => Density::mixture(&[(1.0 / h, &xs[1]), (-1.0 / h, &xs[0])]),
                _ if i == n - 1 => Density::mixture(&[(1.0 / h, &xs[n - 1]), (-1.0 / h, &xs[n - 2])]),
                _ if i == 1 || i == n - 2 => {
                    Density::mixture(&[(0.5 / h, &xs[i + 1]), (-0.5 / h, &xs[i - 1])])
                }
                _ => {
                    let (a, b) = (8.0 / (12.0 * h), 1.0 / (12.0 * h));
                    Density::mixture(&[(a, &xs[i + 1]), (-a, &xs[i - 1]), (-b, &xs[i + 2]), (b, &xs[i - 2])])
                }
            })
            .collect()
    }

    /// `(v, −∫dz H(ρ'^⊞(X) ⊞ X' ⊞ X'))`.
    fn velocity(&self, xs: &[Density], h: f64) -> Result<(f64, f64)> {
        let dx = Self::derivative(xs, h)?;
        let integrand: Vec<f64> = xs
            .par_iter()
            .zip(dx.par_iter())
            .map(|(x, d)| {
                if d.masses().iter().all(|&m| m == 0.0) && d.inf_mass() == 0.0 {
                    return Ok(0.0);
                }
                let lift = Density::poly_lift_cn(&self.rho_prime, x)?;
                Ok(-lift.cn_convolve(&d.cn_convolve(d)?)?.entropy())
            })
            .collect::<Result<_>>()?;
        let den = trapezoid(&integrand, h);
        if !(den.abs() > 1e-300) || !den.is_finite() {
            return Err(Error::VanishingDenominator);
        }
        Ok((self.delta_e / den, den))
    }
}

/// Velocity of a density-valued shape:
/// `v = −ΔE / ∫dz H(ρ'^⊞(X(z)) ⊞ X'(z)^⊞2)` with `ΔE = W(x_BP) − W(Δ∞)`.
pub fn velocity_general_bms(shape: &[Density], channel: &Density, d: &DegreeDistribution, h: f64) -> Result<f64> {
    let wave = density_wave(channel, d, &DensityDeOptions {
        grid: channel.grid().clone(),
        ..DensityDeOptions::default()
    })?;
    Ok(wave.velocity(shape, h)?.0)
}

fn density_wave(channel: &Density, d: &DegreeDistribution, de: &DensityDeOptions) -> Result<DensityWave> {
    let (x_bp, _) = iterate_density(channel, d, de)?;
    if x_bp.entropy() < ZERO_LEVEL {
        return Err(invalid("channel is below the BP threshold: no wave"));
    }
    let left = Density::dirac(channel.grid(), DiracKind::Infinity);
    let mut delta_e = potential_single(&x_bp, channel, d)? - potential_single(&left, channel, d)?;
    if delta_e < 0.0 {
        if delta_e > -1e-9 {
            delta_e = 0.0;
        } else {
            return Err(invalid("channel is above the MAP threshold: no decoding wave"));
        }
    }
    Ok(DensityWave {
        d: d.clone(),
        rho_prime: d.rho.derivative(),
        channel: channel.clone(),
        left,
        right: x_bp,
        delta_e,
    })
}

fn shift_densities(xs: &[Density], shift: f64) -> Result<Vec<Density>> {
    let n = xs.len();
    (0..n)
        .map(|i| {
            let t = (i as f64 + shift).clamp(0.0, (n - 1) as f64);
            let j = (t.floor() as usize).min(n - 2);
            let f = t - j as f64;
            let m = Density::mixture(&[(1.0 - f, &xs[j]), (f, &xs[j + 1])])?;
            Density::from_parts(m.grid().clone(), m.masses().to_vec(), m.inf_mass(), false)
        })
        .collect()
}

/// Density-valued soliton for a channel on the grid in `opts.de`.
pub fn solve_soliton_general(
    spec: &ChannelSpec,
    d: &DegreeDistribution,
    opts: &GeneralOptions,
) -> Result<SolitonSolution<Density>> {
    let grid = &opts.solver;
    let n = grid.points()?;
    let k = grid.per_unit;
    let dgrid: &Arc<Grid> = &opts.de.grid;
    // ext, q, inner, f-values, rhs, derivative, shape: ~7 arrays of n + 2K densities
    let bytes = 7 * (n + 2 * k) * dgrid.len() * std::mem::size_of::<f64>();
    if bytes > opts.memory_budget {
        return Err(Error::Budget(format!(
            "{} z-points x {} density points needs ~{} bytes, budget {}",
            n,
            dgrid.len(),
            bytes,
            opts.memory_budget
        )));
    }
    let channel = spec.density(dgrid);
    let wave = density_wave(&channel, d, &opts.de)?;
    let h = grid.h();
    let level = 0.5 * wave.right.error_mass();
    let z0 = origin(grid);
    let mut xs: Vec<Density> = (0..n)
        .map(|i| {
            let t = 0.5 * (1.0 + erf(grid.z(i)));
            let m = Density::mixture(&[(1.0 - t, &wave.left), (t, &wave.right)])?;
            Density::from_parts(m.grid().clone(), m.masses().to_vec(), m.inf_mass(), false)
        })
        .collect::<Result<_>>()?;
    let (mut v, _) = wave.velocity(&xs, h)?;
    for sweep in 1..=grid.max_sweeps {
        let rhs = wave.rhs(&xs, k)?;
        let dx = DensityWave::derivative(&xs, h)?;
        let theta = stable_damping(grid.damping, v, h);
        let mut next: Vec<Density> = (0..n)
            .into_par_iter()
            .map(|i| {
                let m = Density::mixture(&[(1.0 - theta, &xs[i]), (theta, &rhs[i]), (theta * v, &dx[i])])?;
                Density::from_parts(m.grid().clone(), m.masses().to_vec(), m.inf_mass(), false)
            })
            .collect::<Result<_>>()?;
        next[0] = wave.left.clone();
        next[n - 1] = wave.right.clone();
        let obs: Vec<f64> = next.iter().map(|x| x.error_mass()).collect();
        if let Some(c) = crossing_index(&obs, level) {
            next = shift_densities(&next, c - z0)?;
        }
        let mut change = 0.0f64;
        for (a, b) in next.iter().zip(&xs) {
            change = change.max(a.l1_distance(b)?);
        }
        xs = next;
        let (nv, den) = wave.velocity(&xs, h)?;
        let dv = (nv - v).abs();
        v = nv;
        if change < grid.tol && dv <= grid.tol * v.abs().max(1e-300) {
            let rhs = wave.rhs(&xs, k)?;
            let dx = DensityWave::derivative(&xs, h)?;
            let mut residual = 0.0f64;
            for i in 1..n - 1 {
                let r = Density::mixture(&[(1.0, &rhs[i]), (v, &dx[i]), (-1.0, &xs[i])])?;
                let tv = r.masses().iter().map(|m| m.abs()).sum::<f64>() + r.inf_mass().abs();
                residual = residual.max(tv);
            }
            return Ok(SolitonSolution {
                grid: *grid,
                shape: xs,
                velocity: v,
                residual,
                iterations: sweep,
                denominator: den,
                delta_e: wave.delta_e,
            });
        }
    }
    Err(Error::NonConvergence {
        what: "density soliton shape",
        iterations: grid.max_sweeps,
        residual: f64::NAN,
    })
}

/// BP threshold below which no wave exists, as a guard for callers sweeping ε.
pub fn bec_wave_range(d: &DegreeDistribution) -> Result<(f64, f64)> {
    Ok((threshold_bp(d), threshold_map_bec(d)?))
}
