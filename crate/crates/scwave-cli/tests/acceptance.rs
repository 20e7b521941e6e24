//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so the
//! lines appear in order. Failures are reported but only fail the process
//! when `SCWAVE_ACCEPTANCE_STRICT` is set, so the rest of the suite still runs.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use scwave::density::{ChannelFamily, ChannelSpec, Density, DiracKind, Grid};
use scwave::ensemble::DegreeDistribution;
use scwave::ga::{ga_bracket_analytic, ga_bracket_finite, solve_soliton_ga};
use scwave::scalar::{fixed_points, BernoulliGaussian, Gldpc, ScalarSystem};
use scwave::single::{
    bec_potential, energy_gap, fixed_points_bec, threshold_bp, threshold_map_bec,
};
use scwave::soliton::{derivative, solve_soliton_bec, velocity_general_bms, SolverGrid};
use scwave_cli::tables::{self, Row, Table};

struct Report {
    failures: usize,
}

impl Report {
    fn detail(&self, msg: impl AsRef<str>) {
        println!("    {}", msg.as_ref());
    }

    fn criterion(&mut self, id: u32, name: &str, pass: bool, elapsed: Duration, budget: Duration) {
        let in_time = elapsed <= budget;
        let ok = pass && in_time;
        if !ok {
            self.failures += 1;
        }
        println!(
            "criterion {id} ({name}): {} [{:.1}s of {:.0}s budget{}]",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs_f64(),
            if in_time { "" } else { ", over budget" }
        );
    }

    fn rows(&self, table: &Table, labels: &[&str]) -> bool {
        let mut all = true;
        for label in labels {
            let Some(row) = table.row(label) else {
                self.detail(format!("{label}: missing"));
                all = false;
                continue;
            };
            all &= self.row(row);
        }
        all
    }

    fn row(&self, row: &Row) -> bool {
        let cells: Vec<String> = row
            .values
            .iter()
            .zip(row.reference.as_deref().unwrap_or(&[]))
            .zip(row.verdicts())
            .map(|((v, r), ok)| {
                let v = v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "NA".into());
                let mark = match ok {
                    Some(true) => "ok",
                    Some(false) => "out",
                    None => "-",
                };
                format!("{v} vs {r} {mark}")
            })
            .collect();
        let tol = row.tolerance.map(|t| t.to_string()).unwrap_or_else(|| "unchecked".into());
        self.detail(format!("{} [{}]: {}", row.label, tol, cells.join("; ")));
        row.passes()
    }
}

fn mins(m: u64) -> Duration {
    Duration::from_secs(60 * m)
}

fn criterion_1(rep: &mut Report) {
    let t = Instant::now();
    let d = DegreeDistribution::regular(3, 6).unwrap();
    let bp = threshold_bp(&d);
    let map = threshold_map_bec(&d);
    let elapsed = t.elapsed();
    rep.detail(format!("eps_BP = {bp:.5} (0.4294 +- 5e-4), eps_MAP = {map:?} (0.4881 +- 5e-4)"));
    let pass = (bp - 0.4294).abs() <= 5e-4 && map.as_ref().is_ok_and(|m| (m - 0.4881).abs() <= 5e-4);
    rep.criterion(1, "BEC thresholds", pass, elapsed, Duration::from_secs(5));
}

fn criterion_2(rep: &mut Report) {
    let t = Instant::now();
    let table = tables::table_ii(&SolverGrid::default()).unwrap();
    let elapsed = t.elapsed();
    let pass = rep.rows(&table, &["v_e", "v_BEC", "v_l", "v_B/alpha"]);
    rep.criterion(2, "velocities at w=8", pass, elapsed, mins(5));
}

fn criterion_3(rep: &mut Report) {
    let t = Instant::now();
    let table = tables::table_i(&SolverGrid::default()).unwrap();
    let elapsed = t.elapsed();
    let pass = rep.rows(&table, &["v_BEC", "v_l", "v_e"]);
    rep.criterion(3, "velocities across w", pass, elapsed, mins(10));
}

fn criterion_4(rep: &mut Report) {
    let t = Instant::now();
    let table = tables::table_iii(&SolverGrid::default()).unwrap();
    let elapsed = t.elapsed();
    let pass = rep.rows(&table, &["v_GA (3,6)", "v_e (3,6)", "v_GA (4,8)", "v_e (4,8)"]);
    rep.criterion(4, "Gaussian approximation velocities", pass, elapsed, mins(15));
}

fn scalar_criterion(rep: &mut Report, id: u32, name: &str, tables: (Table, Table), tol: f64, budget: Duration, t: Instant) {
    let elapsed = t.elapsed();
    let (th, v) = tables;
    let row = th.row("threshold").unwrap();
    let mut pass = true;
    for ((value, reference), label) in row.values.iter().zip(row.reference.as_ref().unwrap()).zip(&th.columns) {
        let ok = value.is_some_and(|x| (x - reference).abs() <= tol);
        rep.detail(format!(
            "{label} = {} ({reference} +- {tol}) {}",
            value.map(|x| format!("{x:.5}")).unwrap_or_else(|| "NA".into()),
            if ok { "ok" } else { "out" }
        ));
        pass &= ok;
    }
    pass &= rep.rows(&v, &["v_e"]);
    pass &= v.row("v_e").is_some_and(|r| r.values.len() == 5);
    rep.criterion(id, name, pass, elapsed, budget);
}

fn criterion_5(rep: &mut Report) {
    let t = Instant::now();
    let tables = tables::gldpc_fig(&SolverGrid::default()).unwrap();
    scalar_criterion(rep, 5, "GLDPC thresholds and velocities", tables, 0.002, mins(5), t);
}

fn criterion_6(rep: &mut Report) {
    let t = Instant::now();
    let tables = tables::cs_fig(&SolverGrid::default()).unwrap();
    scalar_criterion(rep, 6, "compressive sensing thresholds and velocities", tables, 0.003, mins(10), t);
}

fn criterion_7(rep: &mut Report) {
    let t = Instant::now();
    let table = tables::table_v(&SolverGrid::default()).unwrap();
    let elapsed = t.elapsed();
    let pass = rep.rows(&table, &["gamma_bar"]);
    rep.criterion(7, "scaling-law parameter", pass, elapsed, mins(20));
}

fn random_density(grid: &std::sync::Arc<Grid>, rng: &mut StdRng) -> Density {
    let parts: Vec<Density> = (0..3)
        .map(|_| {
            let spec = match rng.gen_range(0..3) {
                0 => ChannelSpec::new(ChannelFamily::Bec, rng.gen_range(0.05..0.95)),
                1 => ChannelSpec::new(ChannelFamily::Bsc, rng.gen_range(0.01..0.45)),
                _ => ChannelSpec::new(ChannelFamily::Biawgn, rng.gen_range(0.2..4.0)),
            };
            spec.unwrap().density(grid)
        })
        .collect();
    let raw: Vec<f64> = (0..3).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<(f64, &Density)> = raw.iter().zip(&parts).map(|(w, p)| (w / total, p)).collect();
    Density::mixture(&weights).unwrap()
}

fn criterion_8(rep: &mut Report) {
    let t = Instant::now();
    let grid = Grid::standard();
    let mut rng = StdRng::seed_from_u64(20240611);
    let (mut duality, mut mass) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let x = random_density(&grid, &mut rng);
        let y = random_density(&grid, &mut rng);
        let (v, c) = (x.vn_convolve(&y).unwrap(), x.cn_convolve(&y).unwrap());
        duality = duality.max((v.entropy() + c.entropy() - x.entropy() - y.entropy()).abs());
        mass = mass.max((v.total_mass() - 1.0).abs()).max((c.total_mass() - 1.0).abs());
    }
    let dual_ok = duality < 5e-3;
    let mass_ok = mass < 1e-12;
    rep.detail(format!("duality: max defect {duality:.2e} (< 5e-3) {}", verdict(dual_ok)));
    rep.detail(format!("mass conservation: max defect {mass:.2e} (< 1e-12) {}", verdict(mass_ok)));

    let zero = Density::dirac(&grid, DiracKind::Zero);
    let inf = Density::dirac(&grid, DiracKind::Infinity);
    let x = random_density(&grid, &mut rng);
    let same = |a: &Density, b: &Density| a.masses() == b.masses() && a.inf_mass() == b.inf_mass();
    let ident_ok = same(&x.vn_convolve(&zero).unwrap(), &x)
        && same(&x.cn_convolve(&inf).unwrap(), &x)
        && same(&x.vn_convolve(&inf).unwrap(), &inf)
        && same(&x.cn_convolve(&zero).unwrap(), &zero);
    rep.detail(format!("identity and annihilator table exact {}", verdict(ident_ok)));

    let d = DegreeDistribution::regular(3, 6).unwrap();
    let mut stat = 0.0f64;
    for eps in [0.44, 0.46, 0.48] {
        let fp = fixed_points_bec(eps, &d).unwrap();
        for x in [Some(fp.x_good), fp.x_unst, fp.x_bad].into_iter().flatten() {
            let fd = fd_slope(|t| bec_potential(t, eps, &d), x, 1.0);
            stat = stat.max(fd.abs());
        }
    }
    let gldpc = Gldpc::new(15, 3).unwrap();
    for eps in [0.36, 0.38] {
        let fp = fixed_points(&gldpc, eps);
        for x in [Some(fp.x_good), fp.x_unst, fp.x_bad].into_iter().flatten() {
            let fd = fd_slope(|t| gldpc.potential(t, eps), x, gldpc.x_max());
            stat = stat.max(fd.abs());
        }
    }
    let stat_ok = stat < 1e-6;
    rep.detail(format!("potential stationarity: max |U'| {stat:.2e} (< 1e-6) {}", verdict(stat_ok)));

    let eps = 0.46;
    let sol = solve_soliton_bec(eps, &d, &SolverGrid::default()).unwrap();
    let shape: Vec<Density> = sol.shape.iter().map(|&x| Density::bec(&grid, x)).collect();
    let general = velocity_general_bms(&shape, &Density::bec(&grid, eps), &d, sol.grid.h()).unwrap();
    let bms_gap = (general - sol.velocity).abs();
    let bms_ok = bms_gap < 1e-3;
    rep.detail(format!(
        "general velocity on two-atom densities {general:.6} vs {:.6}: diff {bms_gap:.2e} (< 1e-3) {}",
        sol.velocity,
        verdict(bms_ok)
    ));

    let (l, r, m) = (3, 6, 2.38);
    let ga = solve_soliton_ga(l, r, m, &SolverGrid::default()).unwrap();
    let h = ga.grid.h();
    let dp = derivative(&ga.shape, h);
    let delta = 1e-4;
    let (mut fin, mut ana) = (0.0, 0.0);
    for (i, (&p, &dpi)) in ga.shape.iter().zip(&dp).enumerate() {
        let w = if i == 0 || i + 1 == ga.shape.len() { 0.5 * h } else { h };
        fin += w * ga_bracket_finite(p, (p + delta * dpi).clamp(0.0, 1.0), delta, r);
        ana += w * ga_bracket_analytic(p, dpi, r);
    }
    let rel = ((fin - ana) / ana).abs();
    let ga_ok = rel < 1e-4;
    rep.detail(format!(
        "finite-delta vs analytic denominator: {fin:.6e} vs {ana:.6e}, rel {rel:.2e} (< 1e-4) {}",
        verdict(ga_ok)
    ));

    let prior = BernoulliGaussian::normalized(0.1).unwrap();
    let mut dis = 0.0f64;
    for s in [0.1f64, 1.0, 10.0, 100.0, 1e4] {
        let hs = 1e-3 * s;
        let di = (prior.mutual_info(s + hs) - prior.mutual_info(s - hs)) / (2.0 * hs);
        dis = dis.max((di - 0.5 * prior.mmse(s)).abs());
    }
    let dis_ok = dis < 1e-4;
    rep.detail(format!("dI/dsnr = mmse/2: max defect {dis:.2e} (< 1e-4) {}", verdict(dis_ok)));

    let (bp, map) = (threshold_bp(&d), threshold_map_bec(&d).unwrap());
    let gaps: Vec<f64> = (0..10)
        .map(|k| energy_gap(bp + 1e-6 + (map - bp - 2e-6) * k as f64 / 9.0, &d).unwrap())
        .collect();
    let mono = gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let th = scwave::scalar::scalar_thresholds(&gldpc).unwrap();
    let ggaps: Vec<f64> = (0..10)
        .map(|k| scwave::scalar::scalar_energy_gap(&gldpc, th.eps_a + 1e-4 + (th.eps_pot - th.eps_a) * k as f64 / 10.0))
        .collect::<Result<_, _>>()
        .unwrap();
    let gmono = ggaps.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    rep.detail(format!("energy gap non-increasing (BEC, GLDPC) {}", verdict(mono && gmono)));

    let pass = dual_ok && mass_ok && ident_ok && stat_ok && bms_ok && ga_ok && dis_ok && mono && gmono;
    rep.criterion(8, "property suites", pass, t.elapsed(), mins(2));
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "out"
    }
}

fn cli_outputs(dir: &Path, runs: &[&[&str]]) -> Vec<(String, Vec<u8>)> {
    let exe = env!("CARGO_BIN_EXE_scwave");
    let mut out = Vec::new();
    for (k, args) in runs.iter().enumerate() {
        let sub = dir.join(format!("run{k}"));
        std::fs::create_dir_all(&sub).unwrap();
        let status = Command::new(exe).args(*args).args(["--out", "out"]).current_dir(&sub).output().unwrap();
        out.push((format!("run{k}/stdout"), status.stdout));
        let mut files: Vec<_> = std::fs::read_dir(sub.join("out")).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        for f in files {
            if f.is_file() {
                out.push((format!("run{k}/{}", f.file_name().unwrap().to_string_lossy()), std::fs::read(&f).unwrap()));
            }
        }
    }
    out
}

fn criterion_9(rep: &mut Report) {
    let t = Instant::now();
    let runs: &[&[&str]] = &[
        &["thresholds", "--ensemble", "3,6"],
        &["velocity", "--eps", "0.46", "--mode", "both", "--L", "256"],
        &["ga", "--psi-inv-hc", "2.38", "--mode", "both", "--L", "100", "--w", "3"],
        &["gldpc", "--eps", "0.37", "--mode", "both", "--L", "200", "--w", "3"],
        &["sweep", "--system", "ldpc", "--param-from", "0.44", "--param-to", "0.48", "--param-steps", "3", "--mode", "both", "--L", "256", "--jobs", "3"],
    ];
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = cli_outputs(a.path(), runs);
    let second = cli_outputs(b.path(), runs);
    let same = first == second;
    rep.detail(format!("{} output files compared byte for byte", first.len()));
    rep.criterion(9, "determinism", same && !first.is_empty(), t.elapsed(), mins(5));
}

fn main() {
    let mut rep = Report { failures: 0 };
    criterion_1(&mut rep);
    criterion_2(&mut rep);
    criterion_3(&mut rep);
    criterion_4(&mut rep);
    criterion_5(&mut rep);
    criterion_6(&mut rep);
    criterion_7(&mut rep);
    criterion_8(&mut rep);
    criterion_9(&mut rep);
    println!("acceptance: {} of 9 criteria failed", rep.failures);
    if rep.failures > 0 && std::env::var_os("SCWAVE_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}

/// Second-order finite-difference slope on `[0, hi]`, one-sided at the ends.
fn fd_slope<F: Fn(f64) -> f64>(f: F, x: f64, hi: f64) -> f64 {
    let h = 1e-6;
    if x - h < 0.0 {
        (-3.0 * f(x) + 4.0 * f(x + h) - f(x + 2.0 * h)) / (2.0 * h)
    } else if x + h > hi {
        (3.0 * f(x) - 4.0 * f(x - h) + f(x - 2.0 * h)) / (2.0 * h)
    } else {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }
}
