//! Regeneration of the reference velocity and threshold tables.
//!
//! Every cell is computed independently; a cell whose computation fails is
//! reported as NA and the rest of the table is still produced.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use scwave::coupled::{profile_observable, run_and_measure, BecCoupled, RunOptions};
use scwave::ensemble::DegreeDistribution;
use scwave::ga::{solve_soliton_ga, GaCoupled, GaEnsemble};
use scwave::scalar::{scalar_thresholds, CompressiveSensing, Direction, Gldpc, ScalarCoupled, ScalarSystem};
use scwave::scaling::{gamma_report, published_gamma, write_gamma_csv, GammaReport};
use scwave::soliton::{bound_vb, bound_vb2, scalar_soliton, solve_soliton_bec, LinearVelocity, SolverGrid};

use crate::config::TableName;
use crate::error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    Abs(f64),
    Rel(f64),
}

impl Tolerance {
    pub fn accepts(self, value: f64, reference: f64) -> bool {
        match self {
            Tolerance::Abs(t) => (value - reference).abs() <= t,
            Tolerance::Rel(t) => (value - reference).abs() <= t * reference.abs(),
        }
    }
}

impl std::fmt::Display for Tolerance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tolerance::Abs(t) => write!(f, "abs {t}"),
            Tolerance::Rel(t) => write!(f, "rel {t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub label: String,
    pub values: Vec<Option<f64>>,
    pub reference: Option<Vec<f64>>,
    pub tolerance: Option<Tolerance>,
}

impl Row {
    fn plain(label: impl Into<String>, values: Vec<Option<f64>>) -> Self {
        Row {
            label: label.into(),
            values,
            reference: None,
            tolerance: None,
        }
    }

    fn checked(label: impl Into<String>, values: Vec<Option<f64>>, reference: &[f64], tol: Option<Tolerance>) -> Self {
        Row {
            label: label.into(),
            values,
            reference: Some(reference.to_vec()),
            tolerance: tol,
        }
    }

    /// Per-cell verdicts; `None` where there is nothing to check.
    pub fn verdicts(&self) -> Vec<Option<bool>> {
        match (&self.reference, self.tolerance) {
            (Some(r), Some(t)) => self
                .values
                .iter()
                .zip(r)
                .map(|(v, &r)| Some(v.is_some_and(|v| t.accepts(v, r))))
                .collect(),
            _ => vec![None; self.values.len()],
        }
    }

    /// True when every checked cell is within tolerance.
    pub fn passes(&self) -> bool {
        self.verdicts().iter().all(|v| v.unwrap_or(true))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub corner: String,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

fn fmt_cell(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.6}"),
        _ => "NA".into(),
    }
}

impl Table {
    pub fn row(&self, label: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// Wide CSV: one line per quantity, then its reference, tolerance and
    /// per-cell verdict lines where a reference exists.
    pub fn write_csv<W: Write>(&self, mut w: W) -> CliResult<()> {
        writeln!(w, "{},{}", self.corner, self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.values.iter().map(|v| fmt_cell(*v)).collect();
            writeln!(w, "{},{}", row.label, cells.join(","))?;
            if let Some(reference) = &row.reference {
                let cells: Vec<String> = reference.iter().map(|v| format!("{v}")).collect();
                writeln!(w, "{} reference,{}", row.label, cells.join(","))?;
                if let Some(t) = row.tolerance {
                    let tol = vec![t.to_string(); row.values.len()];
                    writeln!(w, "{} tolerance,{}", row.label, tol.join(","))?;
                    let v: Vec<&str> = row
                        .verdicts()
                        .iter()
                        .map(|v| if v.unwrap_or(false) { "pass" } else { "fail" })
                        .collect();
                    writeln!(w, "{} within,{}", row.label, v.join(","))?;
                }
            }
        }
        Ok(())
    }
}

fn ok<T>(r: scwave::Result<T>) -> Option<T> {
    r.ok()
}

// reference values
pub const II_EPS: [f64; 4] = [0.45, 0.46, 0.47, 0.48];
pub const II_VE: [f64; 4] = [0.0667, 0.0458, 0.0267, 0.0117];
pub const II_VBEC: [f64; 4] = [0.0660, 0.0449, 0.0272, 0.0115];
pub const II_VL: [f64; 4] = [0.0506, 0.0373, 0.0240, 0.0108];
pub const II_VB: [f64; 4] = [0.0781, 0.0541, 0.0332, 0.0142];
pub const II_VB2: [f64; 4] = [0.6970, 0.5008, 0.3068, 0.1291];
pub const I_EPS: f64 = 0.6;
pub const I_W: [usize; 4] = [3, 5, 8, 16];
pub const I_VE: [f64; 4] = [0.0325, 0.0335, 0.0337, 0.0339];
pub const I_VB: [f64; 4] = [0.0473, 0.0410, 0.0380, 0.0356];
pub const I_VBEC: f64 = 0.0333;
pub const I_VL: f64 = 0.0293;
pub const III_MEANS: [f64; 4] = [2.33, 2.35, 2.38, 2.40];
pub const III_VGA_36: [f64; 4] = [0.0176, 0.0205, 0.0265, 0.0310];
pub const III_VE_36: [f64; 4] = [0.0150, 0.0208, 0.0300, 0.0358];
pub const III_VGA_48: [f64; 4] = [0.0237, 0.0258, 0.0312, 0.0381];
pub const III_VE_48: [f64; 4] = [0.0217, 0.0250, 0.0308, 0.0342];
pub const BEC_CHAIN: usize = 1024;
pub const II_W: usize = 8;
pub const GA_CHAIN: usize = 100;
pub const GA_W: usize = 3;
pub const GLDPC_TOTAL: usize = 500;
pub const GLDPC_W: usize = 3;
pub const CS_TOTAL: usize = 250;
pub const CS_W: usize = 4;
pub const GLDPC_THRESHOLDS: [f64; 2] = [0.348, 0.394];
pub const CS_THRESHOLDS: [f64; 2] = [0.208, 0.157];
pub const DELTA_EPS: f64 = 0.04;

/// Empirical velocity and the discrete bound `v_B/α` from one BEC run.
fn bec_run(d: &DegreeDistribution, eps: f64, w: usize) -> (Option<f64>, Option<f64>) {
    let Ok(sys) = BecCoupled::new(d.clone(), eps) else {
        return (None, None);
    };
    match run_and_measure(&sys, BEC_CHAIN, w, &RunOptions::default()) {
        Ok(run) => {
            let obs = profile_observable(&run.profile, &sys);
            (run.velocity, ok(bound_vb(&obs, w, eps, d, 1.0)))
        }
        Err(_) => (None, None),
    }
}

pub fn table_ii(grid: &SolverGrid) -> CliResult<Table> {
    let d = DegreeDistribution::regular(3, 6)?;
    let lin = LinearVelocity::new(&d, grid).ok();
    let cells: Vec<_> = II_EPS
        .par_iter()
        .map(|&eps| {
            let (ve, vb) = bec_run(&d, eps, II_W);
            let vbec = ok(solve_soliton_bec(eps, &d, grid)).map(|s| s.velocity);
            let vl = lin.as_ref().map(|l| l.velocity(eps));
            let vb2 = ok(bound_vb2(eps, &d, 1.0));
            [ve, vbec, vl, vb, vb2]
        })
        .collect();
    let col = |k: usize| cells.iter().map(|c| c[k]).collect::<Vec<_>>();
    Ok(Table {
        name: "II".into(),
        corner: "quantity".into(),
        columns: II_EPS.iter().map(|e| format!("eps={e}")).collect(),
        rows: vec![
            Row::checked("v_e", col(0), &II_VE, Some(Tolerance::Abs(0.002))),
            Row::checked("v_BEC", col(1), &II_VBEC, Some(Tolerance::Abs(0.001))),
            Row::checked("v_l", col(2), &II_VL, Some(Tolerance::Abs(0.001))),
            Row::checked("v_B/alpha", col(3), &II_VB, Some(Tolerance::Abs(0.002))),
            Row::checked("v_B2/alpha", col(4), &II_VB2, Some(Tolerance::Abs(0.02))),
        ],
    })
}

pub fn table_i(grid: &SolverGrid) -> CliResult<Table> {
    let d = DegreeDistribution::regular(4, 6)?;
    let runs: Vec<_> = I_W.par_iter().map(|&w| bec_run(&d, I_EPS, w)).collect();
    let vbec = ok(solve_soliton_bec(I_EPS, &d, grid)).map(|s| s.velocity);
    let vl = ok(LinearVelocity::new(&d, grid)).map(|l| l.velocity(I_EPS));
    Ok(Table {
        name: "I".into(),
        corner: "quantity".into(),
        columns: I_W.iter().map(|w| format!("w={w}")).collect(),
        rows: vec![
            Row::checked("v_e", runs.iter().map(|r| r.0).collect(), &I_VE, Some(Tolerance::Abs(0.002))),
            Row::checked("v_B/alpha", runs.iter().map(|r| r.1).collect(), &I_VB, None),
            Row::checked("v_BEC", vec![vbec; 4], &[I_VBEC; 4], Some(Tolerance::Abs(0.001))),
            Row::checked("v_l", vec![vl; 4], &[I_VL; 4], Some(Tolerance::Abs(0.001))),
        ],
    })
}

fn ga_cells(l: usize, r: usize, grid: &SolverGrid) -> Vec<(Option<f64>, Option<f64>)> {
    III_MEANS
        .par_iter()
        .map(|&m| {
            let vga = ok(solve_soliton_ga(l, r, m, grid)).map(|s| s.velocity);
            let ve = GaEnsemble::new(l, r)
                .and_then(|e| GaCoupled::new(e, m))
                .and_then(|sys| run_and_measure(&sys, GA_CHAIN, GA_W, &RunOptions::default()))
                .ok()
                .and_then(|run| run.velocity);
            (vga, ve)
        })
        .collect()
}

pub fn table_iii(grid: &SolverGrid) -> CliResult<Table> {
    let a = ga_cells(3, 6, grid);
    let b = ga_cells(4, 8, grid);
    let first = |c: &[(Option<f64>, Option<f64>)]| c.iter().map(|x| x.0).collect::<Vec<_>>();
    let second = |c: &[(Option<f64>, Option<f64>)]| c.iter().map(|x| x.1).collect::<Vec<_>>();
    Ok(Table {
        name: "III".into(),
        corner: "quantity".into(),
        columns: III_MEANS.iter().map(|m| format!("2/sigma2={m}")).collect(),
        rows: vec![
            Row::checked("v_GA (3,6)", first(&a), &III_VGA_36, Some(Tolerance::Rel(0.15))),
            Row::checked("v_e (3,6)", second(&a), &III_VE_36, Some(Tolerance::Abs(0.005))),
            Row::checked("v_GA (4,8)", first(&b), &III_VGA_48, Some(Tolerance::Rel(0.15))),
            Row::checked("v_e (4,8)", second(&b), &III_VE_48, Some(Tolerance::Abs(0.005))),
        ],
    })
}

pub fn gamma_reports(grid: &SolverGrid) -> CliResult<Vec<(usize, usize, Option<GammaReport>)>> {
    Ok(published_gamma()?
        .par_iter()
        .map(|p| (p.l, p.r, gamma_report(p.l, p.r, DELTA_EPS, grid).ok()))
        .collect())
}

pub fn table_v(grid: &SolverGrid) -> CliResult<Table> {
    let published = published_gamma()?;
    let reports = gamma_reports(grid)?;
    let pick = |f: fn(&GammaReport) -> f64| reports.iter().map(|r| r.2.as_ref().map(f)).collect::<Vec<_>>();
    let reference = |f: fn(&scwave::scaling::PublishedGamma) -> f64| published.iter().map(f).collect::<Vec<_>>();
    Ok(Table {
        name: "V".into(),
        corner: "quantity".into(),
        columns: reports.iter().map(|r| format!("({};{})", r.0, r.1)).collect(),
        rows: vec![
            Row::checked("eps_map", pick(|r| r.eps_map), &reference(|p| p.eps_map), Some(Tolerance::Abs(5e-4))),
            Row::plain("gamma_published", published.iter().map(|p| Some(p.gamma)).collect()),
            Row::checked("gamma_bar", pick(|r| r.gamma_bar), &reference(|p| p.gamma_bar), Some(Tolerance::Abs(0.05))),
            Row::plain("gamma_bar_limit", pick(|r| r.gamma_bar_limit)),
        ],
    })
}

/// Five equally spaced points strictly inside the bistable range.
pub fn interior_points(a: f64, b: f64) -> Vec<f64> {
    (1..=5).map(|k| a + (b - a) * k as f64 / 6.0).collect()
}

/// Thresholds table and the analytic/empirical velocity comparison for a
/// scalar system. Thresholds are listed as `(ε_a, ε_pot)`.
pub fn scalar_fig<S: ScalarSystem>(
    name: &str,
    sys: &S,
    reference: [f64; 2],
    threshold_tol: f64,
    total: usize,
    w: usize,
    grid: &SolverGrid,
) -> CliResult<(Table, Table)> {
    let th = scalar_thresholds(sys).ok();
    let thresholds = Table {
        name: format!("{name}_thresholds"),
        corner: "quantity".into(),
        columns: vec!["eps_a".into(), "eps_pot".into()],
        rows: vec![Row::checked(
            "threshold",
            vec![th.map(|t| t.eps_a), th.map(|t| t.eps_pot)],
            &reference,
            Some(Tolerance::Abs(threshold_tol)),
        )],
    };
    let points = match (th, sys.direction()) {
        (Some(t), Direction::Increasing) => interior_points(t.eps_a, t.eps_pot),
        (Some(t), Direction::Decreasing) => interior_points(t.eps_pot, t.eps_a),
        (None, _) => Vec::new(),
    };
    let cells: Vec<(Option<f64>, Option<f64>)> = points
        .par_iter()
        .map(|&eps| {
            let va = ok(scalar_soliton(sys, eps, grid)).map(|s| s.velocity);
            let ve = ScalarCoupled::new(sys, eps)
                .and_then(|c| run_and_measure(&c, total - w, w, &RunOptions::default()))
                .ok()
                .and_then(|r| r.velocity);
            (va, ve)
        })
        .collect();
    let analytic: Vec<Option<f64>> = cells.iter().map(|c| c.0).collect();
    let empirical: Vec<Option<f64>> = cells.iter().map(|c| c.1).collect();
    let velocities = Table {
        name: name.into(),
        corner: "quantity".into(),
        columns: points.iter().map(|p| format!("param={p:.6}")).collect(),
        rows: vec![
            Row::plain("v_analytic", analytic.clone()),
            Row::checked(
                "v_e",
                empirical,
                &analytic.iter().map(|v| v.unwrap_or(f64::NAN)).collect::<Vec<_>>(),
                Some(Tolerance::Rel(0.10)),
            ),
        ],
    };
    Ok((thresholds, velocities))
}

pub fn gldpc_fig(grid: &SolverGrid) -> CliResult<(Table, Table)> {
    scalar_fig("gldpc_fig", &Gldpc::new(15, 3)?, GLDPC_THRESHOLDS, 0.002, GLDPC_TOTAL, GLDPC_W, grid)
}

pub fn cs_fig(grid: &SolverGrid) -> CliResult<(Table, Table)> {
    scalar_fig("cs_fig", &CompressiveSensing::new(0.1, 1e5)?, CS_THRESHOLDS, 0.003, CS_TOTAL, CS_W, grid)
}

/// Computes a table and writes its CSV file(s) into `dir`; returns the file names.
pub fn reproduce_table(name: TableName, dir: &Path) -> CliResult<(Vec<Table>, Vec<String>)> {
    let grid = SolverGrid::default();
    let tables = match name {
        TableName::I => vec![table_i(&grid)?],
        TableName::II => vec![table_ii(&grid)?],
        TableName::III => vec![table_iii(&grid)?],
        TableName::V => vec![table_v(&grid)?],
        TableName::GldpcFig => {
            let (a, b) = gldpc_fig(&grid)?;
            vec![a, b]
        }
        TableName::CsFig => {
            let (a, b) = cs_fig(&grid)?;
            vec![a, b]
        }
    };
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for (k, t) in tables.iter().enumerate() {
        let file = if k + 1 == tables.len() {
            format!("{}.csv", name.file_stem())
        } else {
            format!("{}_thresholds.csv", name.file_stem())
        };
        t.write_csv(std::fs::File::create(dir.join(&file))?)?;
        files.push(file);
    }
    if name == TableName::V {
        let reports: Vec<GammaReport> = gamma_reports(&grid)?.into_iter().filter_map(|r| r.2).collect();
        write_gamma_csv(&reports, std::fs::File::create(dir.join("gamma.csv"))?)?;
        files.push("gamma.csv".into());
    }
    Ok((tables, files))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_and_verdicts() {
        let row = Row::checked("x", vec![Some(1.0), Some(1.2), None], &[1.05, 1.0, 1.0], Some(Tolerance::Rel(0.1)));
        assert_eq!(row.verdicts(), vec![Some(true), Some(false), Some(false)]);
        assert!(!row.passes());
        assert!(Row::plain("y", vec![None]).passes());
    }

    #[test]
    fn csv_marks_missing_cells() {
        let t = Table {
            name: "t".into(),
            corner: "quantity".into(),
            columns: vec!["a".into(), "b".into()],
            rows: vec![Row::checked("v", vec![Some(0.5), None], &[0.5, 0.5], Some(Tolerance::Abs(0.01)))],
        };
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "quantity,a,b\nv,0.500000,NA\nv reference,0.5,0.5\nv tolerance,abs 0.01,abs 0.01\nv within,pass,fail\n"
        );
    }

    #[test]
    fn interior_points_are_strictly_inside() {
        let p = interior_points(0.2, 0.8);
        assert_eq!(p.len(), 5);
        assert!(p.iter().all(|&x| x > 0.2 && x < 0.8));
    }
}
