//! Scaling-law parameter `γ̄` estimated from the BEC soliton velocity.
//!
//! Velocities are normalized per window position; `γ̄` counts chain positions
//! of the structured ensemble whose coupling window equals the variable degree,
//! hence the factor `L'(1)`.

use std::io::Write;

use crate::ensemble::DegreeDistribution;
use crate::error::{Error, Result};
use crate::single::{iterate_bec, threshold_map_bec};
use crate::soliton::{solve_soliton_bec, LinearVelocity, SolverGrid};

/// Published finite-length constants: `l,r,eps_map,gamma,gamma_bar`.
pub const PUBLISHED_GAMMA_CSV: &str = include_str!("../data/published_gamma.csv");

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedGamma {
    pub l: usize,
    pub r: usize,
    pub eps_map: f64,
    pub gamma: f64,
    pub gamma_bar: f64,
}

pub fn published_gamma() -> Result<Vec<PublishedGamma>> {
    let mut out = Vec::new();
    for line in PUBLISHED_GAMMA_CSV.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') || line.starts_with("l,") {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(Error::Parse(format!("bad reference row '{line}'")));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s}: {e}")));
        let int = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("{s}: {e}")));
        out.push(PublishedGamma {
            l: int(f[0])?,
            r: int(f[1])?,
            eps_map: num(f[2])?,
            gamma: num(f[3])?,
            gamma_bar: num(f[4])?,
        });
    }
    Ok(out)
}

pub fn published_for(l: usize, r: usize) -> Result<Option<PublishedGamma>> {
    Ok(published_gamma()?.into_iter().find(|p| p.l == l && p.r == r))
}

/// `L'(1) x_BP(ε) v_BEC(ε) / (ε_MAP − ε)`.
pub fn gamma_bar(d: &DegreeDistribution, eps: f64, grid: &SolverGrid) -> Result<f64> {
    let eps_map = threshold_map_bec(d)?;
    gamma_bar_with_map(d, eps, eps_map, grid)
}

fn gamma_bar_with_map(d: &DegreeDistribution, eps: f64, eps_map: f64, grid: &SolverGrid) -> Result<f64> {
    let gap = eps_map - eps;
    if !(gap > 0.0) {
        return Err(Error::InvalidParameter(format!("eps {eps} must lie below eps_MAP {eps_map}")));
    }
    let sol = solve_soliton_bec(eps, d, grid)?;
    let (x_bp, _) = iterate_bec(1.0, eps, d);
    Ok(d.lp1 * x_bp * sol.velocity / gap)
}

/// `ε_MAP` limit: `L'(1)` times `x_MAP` times the slope of the linearized velocity.
pub fn gamma_bar_limit(d: &DegreeDistribution, grid: &SolverGrid) -> Result<f64> {
    let lin = LinearVelocity::new(d, grid)?;
    Ok(d.lp1 * lin.x_map * lin.slope())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaReport {
    pub ensemble: String,
    pub l: usize,
    pub r: usize,
    pub eps_map: f64,
    pub eps_eval: f64,
    pub gamma_bar: f64,
    pub gamma_bar_limit: f64,
    pub published_gamma: Option<f64>,
    pub published_gamma_bar: Option<f64>,
}

/// Report for a regular `(l, r)` ensemble at `ε = ε_MAP − delta_eps`.
pub fn gamma_report(l: usize, r: usize, delta_eps: f64, grid: &SolverGrid) -> Result<GammaReport> {
    let d = DegreeDistribution::regular(l, r)?;
    let eps_map = threshold_map_bec(&d)?;
    let eps_eval = eps_map - delta_eps;
    let published = published_for(l, r)?;
    Ok(GammaReport {
        ensemble: format!("({l},{r})"),
        l,
        r,
        eps_map,
        eps_eval,
        gamma_bar: gamma_bar_with_map(&d, eps_eval, eps_map, grid)?,
        gamma_bar_limit: gamma_bar_limit(&d, grid)?,
        published_gamma: published.map(|p| p.gamma),
        published_gamma_bar: published.map(|p| p.gamma_bar),
    })
}

/// CSV with columns `l,r,eps_map,gamma_published,gamma_bar`.
pub fn write_gamma_csv<W: Write>(reports: &[GammaReport], mut w: W) -> Result<()> {
    writeln!(w, "l,r,eps_map,gamma_published,gamma_bar")?;
    for rep in reports {
        let published = rep.published_gamma.map(|g| format!("{g}")).unwrap_or_else(|| "NA".into());
        writeln!(w, "{},{},{:.6},{},{:.6}", rep.l, rep.r, rep.eps_map, published, rep.gamma_bar)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_table_parses() {
        let rows = published_gamma().unwrap();
        assert_eq!(rows.len(), 7);
        assert_eq!(published_for(4, 6).unwrap().unwrap().gamma_bar, 1.735);
        assert!(published_for(7, 9).unwrap().is_none());
    }

    #[test]
    fn limit_is_x_map_times_slope() {
        let d = DegreeDistribution::regular(3, 6).unwrap();
        let grid = SolverGrid::default();
        let lin = LinearVelocity::new(&d, &grid).unwrap();
        let lim = gamma_bar_limit(&d, &grid).unwrap();
        assert!((lim - 3.0 * lin.x_map * lin.slope()).abs() < 1e-9);
    }

    #[test]
    fn approaches_limit_near_map() {
        let d = DegreeDistribution::regular(3, 6).unwrap();
        let grid = SolverGrid::default();
        let lim = gamma_bar_limit(&d, &grid).unwrap();
        let eps_map = threshold_map_bec(&d).unwrap();
        let res: Vec<f64> = [0.02, 0.01, 0.005]
            .iter()
            .map(|de| (gamma_bar(&d, eps_map - de, &grid).unwrap() - lim).abs())
            .collect();
        assert!(res[0] > res[1] && res[1] > res[2], "{res:?}");
        assert!(res[2] / lim < 0.1);
    }

    #[test]
    fn rejects_eps_above_map() {
        let d = DegreeDistribution::regular(3, 6).unwrap();
        assert!(gamma_bar(&d, 0.49, &SolverGrid::default()).is_err());
    }
}
