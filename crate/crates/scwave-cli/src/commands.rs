//! One function per subcommand. Each writes its CSV files into `--out` and
//! returns a one-line summary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use scwave::coupled::{profile_observable, run_and_measure, write_profile_csv, BecCoupled, DensityCoupled, RunResult};
use scwave::density::{ChannelFamily, DiracKind, Density};
use scwave::ga::{GaCoupled, GaEnsemble, GaWave};
use scwave::scalar::{
    fixed_points, scalar_thresholds, BernoulliGaussian, CompressiveSensing, Gldpc, ScalarCoupled, ScalarSystem,
};
use scwave::scaling::{gamma_report, write_gamma_csv};
use scwave::single::{
    bec_potential, de_step_uncoupled, fixed_points_bec, potential_single, threshold_bp, threshold_bp_density,
    threshold_map, threshold_map_bec, DensityDeOptions,
};
use scwave::soliton::{
    bound_vb2, scalar_soliton, solve_soliton_bec, solve_soliton_general, solve_wave, LinearVelocity, SolitonSolution,
};

use crate::config::{ChannelArg, CommonArgs, SystemArg};
use crate::error::{config, CliResult};

pub struct Outcome {
    pub summary: String,
    pub files: Vec<String>,
}

fn create(dir: &Path, name: &str, files: &mut Vec<String>) -> CliResult<BufWriter<File>> {
    files.push(name.to_string());
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn na(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_else(|| "NA".into())
}

fn write_trajectory<S>(run: &RunResult<S>, dir: &Path, files: &mut Vec<String>) -> CliResult<()> {
    run.trajectory.write_csv(create(dir, "trajectory.csv", files)?)?;
    Ok(())
}

pub fn thresholds(a: &CommonArgs, dir: &Path) -> CliResult<Outcome> {
    let d = a.ensemble()?;
    let mut files = Vec::new();
    let mut w = create(dir, "thresholds.csv", &mut files)?;
    let summary = match a.channel {
        ChannelArg::Bec => {
            let (bp, map) = (threshold_bp(&d), threshold_map_bec(&d)?);
            writeln!(w, "ensemble,channel,parameter_bp,parameter_map,entropy_bp,entropy_map")?;
            writeln!(w, "{},bec,{bp},{map},{bp},{map}", d)?;
            format!("eps_bp={bp:.4}, eps_map={map:.4}")
        }
        other => {
            let family: ChannelFamily = other.into();
            let opts = DensityDeOptions::default();
            let bp = threshold_bp_density(family, &d, &opts)?;
            let map = threshold_map(family, &d, &opts)?;
            writeln!(w, "ensemble,channel,parameter_bp,parameter_map,entropy_bp,entropy_map")?;
            writeln!(
                w,
                "{},{:?},{},{},{},{}",
                d, family, bp.parameter, map.parameter, bp.entropy, map.entropy
            )?;
            format!(
                "bp={:.4} (h={:.4}), map={:.4} (h={:.4})",
                bp.parameter, bp.entropy, map.parameter, map.entropy
            )
        }
    };
    w.flush()?;
    Ok(Outcome { summary, files })
}

pub fn potential(a: &CommonArgs, dir: &Path) -> CliResult<Outcome> {
    let d = a.ensemble()?;
    let mut files = Vec::new();
    if a.channel == ChannelArg::Bec {
        let eps = a.eps()?;
        let fp = fixed_points_bec(eps, &d)?;
        let mut w = create(dir, "potential.csv", &mut files)?;
        writeln!(w, "x,W")?;
        for i in 0..=200 {
            let x = i as f64 / 200.0;
            writeln!(w, "{x},{}", bec_potential(x, eps, &d))?;
        }
        w.flush()?;
        let gap = fp.x_bad.map(|x| bec_potential(x, eps, &d));
        return Ok(Outcome {
            summary: format!(
                "x_unst={}, x_bp={}, delta_e={}",
                na(fp.x_unst),
                na(fp.x_bad),
                na(gap)
            ),
            files,
        });
    }
    // general channel: the potential along the DE trajectory from Δ₀
    let spec = a.channel_spec()?;
    let opts = DensityDeOptions::default();
    let c = spec.density(&opts.grid);
    let mut x = Density::dirac(&opts.grid, DiracKind::Zero);
    let mut w = create(dir, "potential.csv", &mut files)?;
    writeln!(w, "iteration,entropy,W")?;
    let mut last = 0.0;
    for it in 0..opts.max_iters {
        last = potential_single(&x, &c, &d)?;
        writeln!(w, "{it},{},{last}", x.entropy())?;
        let next = de_step_uncoupled(&x, &c, &d)?;
        let change = next.l1_distance(&x)?;
        x = next;
        if change < opts.tol {
            break;
        }
    }
    w.flush()?;
    Ok(Outcome {
        summary: format!("h_bp={:.6}, W(x_bp)={last:.6}", x.entropy()),
        files,
    })
}

fn ldpc_run(a: &CommonArgs, dir: &Path, files: &mut Vec<String>) -> CliResult<(Option<f64>, String)> {
    let d = a.ensemble()?;
    let opts = a.run_options()?;
    if a.channel == ChannelArg::Bec {
        let sys = BecCoupled::new(d, a.eps()?)?;
        let run = run_and_measure(&sys, a.l_c, a.w, &opts)?;
        write_trajectory(&run, dir, files)?;
        let obs = profile_observable(&run.profile, &sys);
        write_profile_csv(&obs, run.profile.z_of(0), run.profile.t, create(dir, "profile.csv", files)?)?;
        Ok((run.velocity, format!("{:?}", run.outcome)))
    } else {
        let spec = a.channel_spec()?;
        let sys = DensityCoupled::new(d, &spec, &DensityDeOptions::default().grid)?;
        let run = run_and_measure(&sys, a.l_c, a.w, &opts)?;
        write_trajectory(&run, dir, files)?;
        let obs = profile_observable(&run.profile, &sys);
        write_profile_csv(&obs, run.profile.z_of(0), run.profile.t, create(dir, "profile.csv", files)?)?;
        Ok((run.velocity, format!("{:?}", run.outcome)))
    }
}

pub fn run(a: &CommonArgs, dir: &Path) -> CliResult<Outcome> {
    let mut files = Vec::new();
    let (v, outcome) = ldpc_run(a, dir, &mut files)?;
    Ok(Outcome {
        summary: format!("v_e={}, outcome={outcome}", na(v)),
        files,
    })
}

fn write_solution(sol: &SolitonSolution<f64>, param: f64, dir: &Path, files: &mut Vec<String>) -> CliResult<()> {
    sol.write_csv(create(dir, "shape.csv", files)?)?;
    sol.write_summary_csv(param, create(dir, "summary.csv", files)?)?;
    Ok(())
}

pub fn velocity(a: &CommonArgs, dir: &Path) -> CliResult<Outcome> {
    let d = a.ensemble()?;
    let mut files = Vec::new();
    let mut parts = Vec::new();
    if a.mode.analytic() {
        if a.channel == ChannelArg::Bec {
            let eps = a.eps()?;
            let grid = a.solver_grid()?;
            let sol = solve_soliton_bec(eps, &d, &grid)?;
            write_solution(&sol, eps, dir, &mut files)?;
            let vl = LinearVelocity::new(&d, &grid).ok().map(|l| l.velocity(eps));
            let vb2 = bound_vb2(eps, &d, 1.0).ok();
            parts.push(format!("v={:.4} (v_BEC)", sol.velocity));
            parts.push(format!("v_l={}", na(vl)));
            parts.push(format!("v_B2/alpha={}", na(vb2)));
        } else {
            let spec = a.channel_spec()?;
            let sol = solve_soliton_general(&spec, &d, &a.general_options()?)?;
            sol.write_dir(&dir.join("shape"), spec.parameter)?;
            files.push("shape/".into());
            parts.push(format!("v={:.4} (analytic)", sol.velocity));
        }
    }
    if a.mode.empirical() {
        let (v, outcome) = ldpc_run(a, dir, &mut files)?;
        parts.push(format!("v={} (empirical, {outcome})", na(v.map(|x| (x * 1e4).round() / 1e4))));
    }
    Ok(Outcome {
        summary: parts.join(", "),
        files,
    })
}

pub fn ga(a: &CommonArgs, dir: &Path) -> CliResult<Outcome> {
    let (l, r) = a.regular()?;
    let ens = GaEnsemble::new(l, r)?;
    let m = a.ga_mean()?;
    let th = ens.thresholds()?;
    let mut files = Vec::new();
    let mut w = create(dir, "ga_thresholds.csv", &mut files)?;
    writeln!(w, "l,r,mean_bp,mean_map,entropy_bp,entropy_map")?;
    writeln!(w, "{l},{r},{},{},{},{}", th.m_bp, th.m_map, th.h_bp, th.h_map)?;
    w.flush()?;
    let mut parts = vec![format!("mean_bp={:.4}, mean_map={:.4}", th.m_bp, th.m_map)];
    if a.mode.analytic() {
        let sol = solve_wave(&GaWave::new(ens, m)?, &a.solver_grid()?)?;
        write_solution(&sol, m, dir, &mut files)?;
        parts.push(format!("v_GA={:.4}", sol.velocity));
    }
    if a.mode.empirical() {
        let sys = GaCoupled::new(ens, m)?;
        let run = run_and_measure(&sys, a.l_c, a.w, &a.run_options()?)?;
        write_trajectory(&run, dir, &mut files)?;
        parts.push(format!("v_e={}", na(run.velocity)));
    }
    Ok(Outcome {
        summary: parts.join(", "),
        files,
    })
}

fn scalar_command<S: ScalarSystem>(sys: &S, a: &CommonArgs, dir: &Path) -> CliResult<Outcome> {
    let th = scalar_thresholds(sys)?;
    let mut files = Vec::new();
    let mut w = create(dir, "thresholds.csv", &mut files)?;
    writeln!(w, "system,eps_a,eps_pot")?;
    writeln!(w, "{},{},{}", sys.label(), th.eps_a, th.eps_pot)?;
    w.flush()?;
    let mut parts = vec![format!("eps_a={:.4}, eps_pot={:.4}", th.eps_a, th.eps_pot)];
    if let Some(eps) = a.eps {
        let fp = fixed_points(sys, eps);
        parts.push(format!("x_good={:.4e}, x_bad={}", fp.x_good, na(fp.x_bad)));
        if a.mode.analytic() {
            let sol = scalar_soliton(sys, eps, &a.solver_grid()?)?;
            write_solution(&sol, eps, dir, &mut files)?;
            parts.push(format!("v={:.4} (analytic)", sol.velocity));
        }
        if a.mode.empirical() {
            let c = ScalarCoupled::new(sys, eps)?;
            let run = run_and_measure(&c, a.l_c, a.w, &a.run_options()?)?;
            write_trajectory(&run, dir, &mut files)?;
            parts.push(format!("v={} (empirical)", na(run.velocity)));
        }
    }
    Ok(Outcome {
        summary: parts.join(", "),
        files,
    })
}

fn cs_system(a: &CommonArgs) -> CliResult<CompressiveSensing> {
    let prior = match a.slab_variance {
        Some(v) => BernoulliGaussian::new(a.rho, v)?,
        None => BernoulliGaussian::normalized(a.rho)?,
    };
    Ok(CompressiveSensing::with_prior(prior, a.snr)?)
}

pub fn gldpc(a: &CommonArgs, dir: &Path) -> CliResult<Outcome> {
    scalar_command(&Gldpc::new(a.n, a.e)?, a, dir)
}

pub fn cs(a: &CommonArgs, dir: &Path) -> CliResult<Outcome> {
    scalar_command(&cs_system(a)?, a, dir)
}

pub fn gamma(a: &CommonArgs, dir: &Path) -> CliResult<Outcome> {
    let (l, r) = a.regular()?;
    let rep = gamma_report(l, r, a.delta_eps, &a.solver_grid()?)?;
    let mut files = Vec::new();
    write_gamma_csv(std::slice::from_ref(&rep), create(dir, "gamma.csv", &mut files)?)?;
    Ok(Outcome {
        summary: format!(
            "eps_map={:.4}, gamma_bar={:.4}, gamma_bar_limit={:.4}, gamma_published={}",
            rep.eps_map,
            rep.gamma_bar,
            rep.gamma_bar_limit,
            na(rep.published_gamma)
        ),
        files,
    })
}

/// Velocity of one sweep cell: `(analytic, empirical)`.
fn sweep_cell(a: &CommonArgs, param: f64) -> CliResult<(Option<f64>, Option<f64>)> {
    let grid = a.solver_grid()?;
    let opts = a.run_options()?;
    let (an, em) = (a.mode.analytic(), a.mode.empirical());
    Ok(match a.system {
        SystemArg::Ldpc => {
            if a.channel != ChannelArg::Bec {
                return Err(config("sweep over LDPC supports --channel bec only"));
            }
            let d = a.ensemble()?;
            let va = an.then(|| solve_soliton_bec(param, &d, &grid).ok().map(|s| s.velocity)).flatten();
            let ve = em
                .then(|| {
                    BecCoupled::new(d.clone(), param)
                        .and_then(|s| run_and_measure(&s, a.l_c, a.w, &opts))
                        .ok()
                        .and_then(|r| r.velocity)
                })
                .flatten();
            (va, ve)
        }
        SystemArg::Ga => {
            let (l, r) = a.regular()?;
            let ens = GaEnsemble::new(l, r)?;
            let va = an
                .then(|| GaWave::new(ens, param).and_then(|w| solve_wave(&w, &grid)).ok().map(|s| s.velocity))
                .flatten();
            let ve = em
                .then(|| {
                    GaCoupled::new(ens, param)
                        .and_then(|s| run_and_measure(&s, a.l_c, a.w, &opts))
                        .ok()
                        .and_then(|r| r.velocity)
                })
                .flatten();
            (va, ve)
        }
        SystemArg::Gldpc => scalar_cell(&Gldpc::new(a.n, a.e)?, a, param)?,
        SystemArg::Cs => scalar_cell(&cs_system(a)?, a, param)?,
    })
}

fn scalar_cell<S: ScalarSystem>(sys: &S, a: &CommonArgs, eps: f64) -> CliResult<(Option<f64>, Option<f64>)> {
    let grid = a.solver_grid()?;
    let opts = a.run_options()?;
    let va = a
        .mode
        .analytic()
        .then(|| scalar_soliton(sys, eps, &grid).ok().map(|s| s.velocity))
        .flatten();
    let ve = a
        .mode
        .empirical()
        .then(|| {
            ScalarCoupled::new(sys, eps)
                .and_then(|c| run_and_measure(&c, a.l_c, a.w, &opts))
                .ok()
                .and_then(|r| r.velocity)
        })
        .flatten();
    Ok((va, ve))
}

pub fn sweep(a: &CommonArgs, dir: &Path) -> CliResult<Outcome> {
    let (from, to) = match (a.param_from, a.param_to) {
        (Some(f), Some(t)) => (f, t),
        _ => return Err(config("sweep needs --param-from and --param-to")),
    };
    if a.param_steps < 2 {
        return Err(config("--param-steps must be at least 2"));
    }
    // validate once so that configuration errors are not turned into NA cells
    a.solver_grid()?;
    a.run_options()?;
    let params: Vec<f64> = (0..a.param_steps)
        .map(|k| from + (to - from) * k as f64 / (a.param_steps - 1) as f64)
        .collect();
    let pool = a.pool()?;
    let cells: Vec<CliResult<(Option<f64>, Option<f64>)>> =
        pool.install(|| params.par_iter().map(|&p| sweep_cell(a, p)).collect());
    let mut files = Vec::new();
    let mut w = create(dir, "sweep.csv", &mut files)?;
    writeln!(w, "param,v_analytic,v_empirical")?;
    let mut failed = 0;
    for (p, c) in params.iter().zip(cells) {
        let (va, ve) = c?;
        failed += usize::from(a.mode.analytic() && va.is_none()) + usize::from(a.mode.empirical() && ve.is_none());
        writeln!(w, "{p},{},{}", na(va), na(ve))?;
    }
    w.flush()?;
    Ok(Outcome {
        summary: format!("{} points, {failed} NA cells", params.len()),
        files,
    })
}
