//! Spatially coupled recursions on a chain `z ∈ {−w+1, …, L_c}`: the
//! synchronous window update, kink tracking and the empirical velocity.

use std::io::Write;

use rayon::prelude::*;

use crate::density::{ChannelSpec, Density, DiracKind, Grid};
use crate::ensemble::DegreeDistribution;
use crate::error::{invalid, Error, Result};
use crate::single::{de_step_uncoupled, iterate_bec, iterate_density, DensityDeOptions};

/// How the left boundary is pinned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Seeding {
    /// LDPC convention: positions `z ≤ 0` hold the seed and the channel is
    /// perfect there, so the outer sum sees the seed state at `z − i ≤ 0`.
    Channel,
    /// Scalar-framework convention: positions `z ≤ −1` hold the seed.
    Scalar,
}

impl Seeding {
    fn last_seed_z(self) -> i64 {
        match self {
            Seeding::Channel => 0,
            Seeding::Scalar => -1,
        }
    }
}

/// A coupled system: `x_z ← mean_i f(mean_j g(x_{z−i+j}))`.
pub trait CoupledSystem: Sync {
    type State: Clone + Send + Sync;

    fn g(&self, x: &Self::State) -> Self::State;
    fn f(&self, y: &Self::State) -> Self::State;
    fn mean(&self, xs: &[&Self::State]) -> Self::State;
    /// Scalar observable used for the kink (erasure/error mass, entropy, MSE).
    fn observable(&self, x: &Self::State) -> f64;
    fn seed_state(&self) -> Self::State;
    fn init_state(&self) -> Self::State;
    fn seeding(&self) -> Seeding;
    /// Observable of the bad fixed point; the kink sits at half of it.
    fn bad_level(&self) -> f64;
    /// Whether per-position maps are worth running on the thread pool.
    fn parallel(&self) -> bool {
        false
    }
}

/// States on `z ∈ {−w+1, …, L_c}`, stored at index `z + w − 1`.
#[derive(Debug, Clone)]
pub struct Profile<S> {
    pub states: Vec<S>,
    pub w: usize,
    pub l_c: usize,
    pub seed_value: S,
    pub seeding: Seeding,
    pub t: usize,
}

impl<S: Clone> Profile<S> {
    pub fn new<C: CoupledSystem<State = S>>(sys: &C, l_c: usize, w: usize) -> Result<Self> {
        if w == 0 || l_c == 0 {
            return Err(invalid(format!("need w >= 1 and L_c >= 1, got w={w}, L_c={l_c}")));
        }
        let seeding = sys.seeding();
        let seed = sys.seed_state();
        let init = sys.init_state();
        let states = (0..l_c + w)
            .map(|k| {
                if (k as i64 - (w as i64 - 1)) <= seeding.last_seed_z() {
                    seed.clone()
                } else {
                    init.clone()
                }
            })
            .collect();
        Ok(Profile {
            states,
            w,
            l_c,
            seed_value: seed,
            seeding,
            t: 0,
        })
    }

    pub fn z_of(&self, k: usize) -> i64 {
        k as i64 - (self.w as i64 - 1)
    }

    pub fn is_seed(&self, k: usize) -> bool {
        self.z_of(k) <= self.seeding.last_seed_z()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

fn map_states<C: CoupledSystem, F>(sys: &C, xs: &[C::State], f: F) -> Vec<C::State>
where
    F: Fn(&C::State) -> C::State + Sync + Send,
{
    if sys.parallel() {
        xs.par_iter().map(f).collect()
    } else {
        xs.iter().map(f).collect()
    }
}

/// One synchronous update. Positions beyond `L_c` replicate the last state.
pub fn coupled_step<C: CoupledSystem>(p: &Profile<C::State>, sys: &C) -> Profile<C::State> {
    let n = p.len();
    let w = p.w;
    // g over k = 0 .. n + w − 2 (right extension replicates the last state)
    let g_last = sys.g(&p.states[n - 1]);
    let mut gvals = map_states(sys, &p.states, |x| sys.g(x));
    gvals.extend(std::iter::repeat(g_last).take(w - 1));
    // inner window means and f, at y index 0..n
    let idx: Vec<usize> = (0..n).collect();
    let f_at = |yi: &usize| -> C::State {
        let yi = *yi;
        if p.seeding == Seeding::Channel && p.is_seed(yi) {
            return p.seed_value.clone();
        }
        let refs: Vec<&C::State> = gvals[yi..yi + w].iter().collect();
        sys.f(&sys.mean(&refs))
    };
    let fvals: Vec<C::State> = if sys.parallel() {
        idx.par_iter().map(f_at).collect()
    } else {
        idx.iter().map(f_at).collect()
    };
    let mut states = Vec::with_capacity(n);
    for k in 0..n {
        if p.is_seed(k) {
            states.push(p.seed_value.clone());
        } else {
            let refs: Vec<&C::State> = fvals[k + 1 - w..=k].iter().collect();
            states.push(sys.mean(&refs));
        }
    }
    Profile {
        states,
        w,
        l_c: p.l_c,
        seed_value: p.seed_value.clone(),
        seeding: p.seeding,
        t: p.t + 1,
    }
}

/// Interpolated position of the first upward crossing of `level` when
/// scanning from the left, in units of positions `z`.
pub fn kink_position(obs: &[f64], z0: i64, level: f64) -> Result<f64> {
    if obs.is_empty() || obs[0] >= level {
        return Err(Error::NoCrossing(level));
    }
    for k in 1..obs.len() {
        if obs[k] >= level {
            let (a, b) = (obs[k - 1], obs[k]);
            let frac = if b > a { (level - a) / (b - a) } else { 0.0 };
            return Ok((z0 + k as i64 - 1) as f64 + frac);
        }
    }
    Err(Error::NoCrossing(level))
}

pub fn profile_observable<C: CoupledSystem>(p: &Profile<C::State>, sys: &C) -> Vec<f64> {
    p.states.iter().map(|s| sys.observable(s)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinkTrajectory {
    pub samples: Vec<(usize, f64)>,
    pub reference_level: f64,
}

impl KinkTrajectory {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,kink_position")?;
        for (t, z) in &self.samples {
            writeln!(w, "{t},{z}")?;
        }
        Ok(())
    }
}

/// Mean of `Δz / (w Δt)` over consecutive samples.
pub fn empirical_velocity(traj: &KinkTrajectory, w: usize) -> Result<f64> {
    let s = &traj.samples;
    if s.len() < 2 {
        return Err(Error::TooFewSamples(s.len()));
    }
    let sum: f64 = s
        .windows(2)
        .map(|p| (p[1].1 - p[0].1) / (w as f64 * (p[1].0 - p[0].0) as f64))
        .sum();
    Ok(sum / (s.len() - 1) as f64)
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub t_transient: usize,
    pub t_max: usize,
    pub sample_every: usize,
    /// Stop once the kink is within `edge_guard · w` of `L_c`.
    pub edge_guard: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            t_transient: 100,
            t_max: 20_000,
            sample_every: 20,
            edge_guard: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    /// The kink travelled until it reached the edge guard.
    ReachedEdge,
    /// `t_max` reached with the kink still inside the chain.
    TimeLimit,
    /// The whole profile dropped below the reference level: full decoding
    /// without a stationary wave.
    Collapsed,
}

#[derive(Debug, Clone)]
pub struct RunResult<S> {
    pub trajectory: KinkTrajectory,
    pub velocity: Option<f64>,
    pub outcome: RunOutcome,
    pub profile: Profile<S>,
}

/// Evolves from the initial profile, samples the kink every `sample_every`
/// iterations after `t_transient`, and returns the empirical velocity.
pub fn run_and_measure<C: CoupledSystem>(sys: &C, l_c: usize, w: usize, opts: &RunOptions) -> Result<RunResult<C::State>> {
    let mut p = Profile::new(sys, l_c, w)?;
    let level = 0.5 * sys.bad_level();
    let z0 = p.z_of(0);
    let stop_at = l_c as f64 - (opts.edge_guard * w) as f64;
    let mut samples = Vec::new();
    let mut outcome = RunOutcome::TimeLimit;
    while p.t < opts.t_max {
        p = coupled_step(&p, sys);
        if p.t >= opts.t_transient && (p.t - opts.t_transient) % opts.sample_every == 0 {
            let obs = profile_observable(&p, sys);
            match kink_position(&obs, z0, level) {
                Ok(z) => {
                    samples.push((p.t, z));
                    if z >= stop_at {
                        outcome = RunOutcome::ReachedEdge;
                        break;
                    }
                }
                Err(Error::NoCrossing(_)) => {
                    if obs.iter().all(|&o| o < level) {
                        outcome = RunOutcome::Collapsed;
                        break;
                    }
                    return Err(Error::NoCrossing(level));
                }
                Err(e) => return Err(e),
            }
        }
    }
    let trajectory = KinkTrajectory {
        samples,
        reference_level: level,
    };
    let velocity = match outcome {
        RunOutcome::Collapsed => None,
        _ => empirical_velocity(&trajectory, w).ok(),
    };
    Ok(RunResult {
        trajectory,
        velocity,
        outcome,
        profile: p,
    })
}

/// Writes a profile observable as `z,value,t`.
pub fn write_profile_csv<W: Write>(obs: &[f64], z0: i64, t: usize, mut w: W) -> Result<()> {
    writeln!(w, "z,value,t")?;
    for (k, v) in obs.iter().enumerate() {
        writeln!(w, "{},{},{}", z0 + k as i64, v, t)?;
    }
    Ok(())
}

/// Scalar BEC recursion `ε λ(mean(1 − ρ(1 − x)))` with LDPC seeding.
#[derive(Debug, Clone)]
pub struct BecCoupled {
    pub d: DegreeDistribution,
    pub eps: f64,
    x_bp: f64,
}

impl BecCoupled {
    pub fn new(d: DegreeDistribution, eps: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(invalid(format!("erasure probability {eps} outside [0,1]")));
        }
        let (x_bp, _) = iterate_bec(1.0, eps, &d);
        Ok(BecCoupled { d, eps, x_bp })
    }

    pub fn x_bp(&self) -> f64 {
        self.x_bp
    }
}

impl CoupledSystem for BecCoupled {
    type State = f64;
    fn g(&self, x: &f64) -> f64 {
        1.0 - self.d.rho(1.0 - x)
    }
    fn f(&self, y: &f64) -> f64 {
        self.eps * self.d.lambda(*y)
    }
    fn mean(&self, xs: &[&f64]) -> f64 {
        xs.iter().copied().sum::<f64>() / xs.len() as f64
    }
    fn observable(&self, x: &f64) -> f64 {
        *x
    }
    fn seed_state(&self) -> f64 {
        0.0
    }
    fn init_state(&self) -> f64 {
        1.0
    }
    fn seeding(&self) -> Seeding {
        Seeding::Channel
    }
    fn bad_level(&self) -> f64 {
        self.x_bp
    }
}

/// Density-valued recursion: `c_{z−i} ⍟ λ^⍟(mean_j ρ^⊞(x_{z−i+j}))`.
#[derive(Debug, Clone)]
pub struct DensityCoupled {
    pub d: DegreeDistribution,
    pub channel: Density,
    x_bp: Density,
}

impl DensityCoupled {
    pub fn new(d: DegreeDistribution, spec: &ChannelSpec, grid: &std::sync::Arc<Grid>) -> Result<Self> {
        let channel = spec.density(grid);
        let opts = DensityDeOptions {
            grid: grid.clone(),
            ..DensityDeOptions::default()
        };
        let (x_bp, _) = iterate_density(&channel, &d, &opts)?;
        Ok(DensityCoupled { d, channel, x_bp })
    }

    pub fn x_bp(&self) -> &Density {
        &self.x_bp
    }

    /// Uncoupled step, exposed for consistency checks.
    pub fn single_step(&self, x: &Density) -> Result<Density> {
        de_step_uncoupled(x, &self.channel, &self.d)
    }
}

impl CoupledSystem for DensityCoupled {
    type State = Density;
    fn g(&self, x: &Density) -> Density {
        Density::poly_lift_cn(&self.d.rho, x).expect("shared grid")
    }
    fn f(&self, y: &Density) -> Density {
        let l = Density::poly_lift_vn(&self.d.lambda, y).expect("shared grid");
        self.channel.vn_convolve(&l).expect("shared grid")
    }
    fn mean(&self, xs: &[&Density]) -> Density {
        let w = 1.0 / xs.len() as f64;
        let parts: Vec<(f64, &Density)> = xs.iter().map(|d| (w, *d)).collect();
        let m = Density::mixture(&parts).expect("shared grid");
        if xs.iter().any(|d| d.is_signed()) {
            m
        } else {
            Density::from_parts(m.grid().clone(), m.masses().to_vec(), m.inf_mass(), false).expect("shared grid")
        }
    }
    fn observable(&self, x: &Density) -> f64 {
        x.error_mass()
    }
    fn seed_state(&self) -> Density {
        Density::dirac(self.channel.grid(), DiracKind::Infinity)
    }
    fn init_state(&self) -> Density {
        Density::dirac(self.channel.grid(), DiracKind::Zero)
    }
    fn seeding(&self) -> Seeding {
        Seeding::Channel
    }
    fn bad_level(&self) -> f64 {
        self.x_bp.error_mass()
    }
    fn parallel(&self) -> bool {
        true
    }
}

/// Discrete coupled potential of a density profile:
/// `Σ_z { H(R^⊞(x_z))/R'(1) + H(ρ^⊞(x_z)) − H(x_z ⊞ ρ^⊞(x_z))
///        − H(c_z ⍟ L^⍟(mean_i ρ^⊞(x_{z+i})))/L'(1) }`.
pub fn coupled_potential_density(p: &Profile<Density>, sys: &DensityCoupled) -> Result<f64> {
    let n = p.len();
    let d = &sys.d;
    let rho: Vec<Density> = p
        .states
        .iter()
        .map(|x| Density::poly_lift_cn(&d.rho, x))
        .collect::<Result<_>>()?;
    let perfect = sys.seed_state();
    let mut total = 0.0;
    for k in 0..n {
        let x = &p.states[k];
        let r_lift = Density::poly_lift_cn(&d.big_r, x)?;
        let x_rho = x.cn_convolve(&rho[k])?;
        let parts: Vec<(f64, &Density)> = (0..p.w)
            .map(|i| (1.0 / p.w as f64, &rho[(k + i).min(n - 1)]))
            .collect();
        let avg = Density::mixture(&parts)?;
        let c = if p.is_seed(k) { &perfect } else { &sys.channel };
        let cl = c.vn_convolve(&Density::poly_lift_vn(&d.big_l, &avg)?)?;
        total += r_lift.entropy() / d.rp1 + rho[k].entropy() - x_rho.entropy() - cl.entropy() / d.lp1;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d36() -> DegreeDistribution {
        DegreeDistribution::regular(3, 6).unwrap()
    }

    #[test]
    fn kink_midpoint_and_ramp() {
        let xb = 0.4;
        let obs: Vec<f64> = (0..30).map(|z| if z <= 10 { 0.0 } else { xb }).collect();
        assert_eq!(kink_position(&obs, 0, xb / 2.0).unwrap(), 10.5);
        let ramp: Vec<f64> = (0..=10).map(|z| xb * z as f64 / 10.0).chain(std::iter::repeat(xb).take(5)).collect();
        assert!((kink_position(&ramp, 0, xb / 2.0).unwrap() - 5.0).abs() < 1e-12);
        let flat = vec![xb; 20];
        assert!(matches!(kink_position(&flat, 0, xb / 2.0), Err(Error::NoCrossing(_))));
    }

    #[test]
    fn velocity_of_stationary_trajectory_is_zero() {
        let t = KinkTrajectory {
            samples: vec![(100, 5.0), (120, 5.0), (140, 5.0)],
            reference_level: 0.2,
        };
        assert_eq!(empirical_velocity(&t, 3).unwrap(), 0.0);
        let one = KinkTrajectory {
            samples: vec![(100, 5.0)],
            reference_level: 0.2,
        };
        assert!(empirical_velocity(&one, 3).is_err());
    }

    #[test]
    fn all_seed_profile_is_fixed() {
        let sys = BecCoupled::new(d36(), 0.46).unwrap();
        let mut p = Profile::new(&sys, 20, 3).unwrap();
        p.states.iter_mut().for_each(|x| *x = 0.0);
        let q = coupled_step(&p, &sys);
        assert!(q.states.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn seeds_stay_pinned_and_wave_advances() {
        let sys = BecCoupled::new(d36(), 0.46).unwrap();
        let mut p = Profile::new(&sys, 50, 3).unwrap();
        let mut last = f64::NEG_INFINITY;
        for t in 1..=150 {
            p = coupled_step(&p, &sys);
            for k in 0..p.len() {
                if p.is_seed(k) {
                    assert_eq!(p.states[k], 0.0);
                }
            }
            if t % 30 == 0 {
                let z = kink_position(&p.states, p.z_of(0), sys.x_bp() / 2.0).unwrap();
                assert!(z > last);
                last = z;
            }
        }
        assert!((p.states[p.len() - 1] - sys.x_bp()).abs() < 1e-3);
    }

    #[test]
    fn right_edge_follows_uncoupled_recursion() {
        let d = DegreeDistribution::parse("lambda:0.3x^3+0.4x^5+0.3x^6;rho:x^5").unwrap();
        let sys = BecCoupled::new(d.clone(), 0.7).unwrap();
        let mut p = Profile::new(&sys, 100, 3).unwrap();
        let mut x = 1.0;
        for _ in 0..10 {
            p = coupled_step(&p, &sys);
            x = crate::single::bec_de_step(x, 0.7, &d);
        }
        assert!((p.states[p.len() - 1] - x).abs() < 1e-14);
    }

    #[test]
    fn density_profile_matches_scalar_on_bec() {
        let grid = Grid::new(16, 8.0).unwrap();
        let spec = ChannelSpec::bec(0.46).unwrap();
        let dsys = DensityCoupled::new(d36(), &spec, &grid).unwrap();
        let ssys = BecCoupled::new(d36(), 0.46).unwrap();
        let mut dp = Profile::new(&dsys, 12, 3).unwrap();
        let mut sp = Profile::new(&ssys, 12, 3).unwrap();
        for _ in 0..20 {
            dp = coupled_step(&dp, &dsys);
            sp = coupled_step(&sp, &ssys);
            for (a, b) in dp.states.iter().zip(&sp.states) {
                assert!((a.error_mass() - b).abs() < 1e-12);
            }
        }
    }
}
