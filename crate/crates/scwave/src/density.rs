//! Quantized symmetric LLR densities, the variable-node (⍟) and check-node (⊞)
//! convolutions, the entropy functional and channel densities.
//!
//! A density is a vector of masses on a uniform grid `α_i = (i - M)·Δ`,
//! `i = 0..=2M`, plus an exact atom at `α = +∞`. The grid contains `α = 0`
//! so that `Δ₀` is a single bin and ⍟-sums of grid points land on grid points.

use std::io::{BufRead, Write};
use std::sync::{Arc, OnceLock};

use statrs::function::erf::erfc;

use crate::ensemble::Poly;
use crate::error::{invalid, Error, Result};

/// Default half-width in bins: 2049 points on [-30, 30].
pub const DEFAULT_HALF: usize = 1024;
pub const DEFAULT_L_MAX: f64 = 30.0;

#[derive(Debug)]
pub struct Grid {
    half: usize,
    spacing: f64,
    entropy_kernel: Vec<f64>,
    cn_index: OnceLock<Vec<u16>>,
}

impl Grid {
    pub fn new(half: usize, l_max: f64) -> Result<Arc<Grid>> {
        if half == 0 || half > u16::MAX as usize || !(l_max > 0.0) {
            return Err(invalid(format!("bad grid: half={half}, l_max={l_max}")));
        }
        let spacing = l_max / half as f64;
        let entropy_kernel = (0..=2 * half)
            .map(|i| {
                let a = (i as f64 - half as f64) * spacing;
                log2_1p_exp_neg(a)
            })
            .collect();
        Ok(Arc::new(Grid {
            half,
            spacing,
            entropy_kernel,
            cn_index: OnceLock::new(),
        }))
    }

    /// Shared default grid (2049 points on [-30, 30]).
    pub fn standard() -> Arc<Grid> {
        static STD: OnceLock<Arc<Grid>> = OnceLock::new();
        STD.get_or_init(|| Grid::new(DEFAULT_HALF, DEFAULT_L_MAX).expect("valid default grid"))
            .clone()
    }

    pub fn half(&self) -> usize {
        self.half
    }

    pub fn len(&self) -> usize {
        2 * self.half + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn l_max(&self) -> f64 {
        self.half as f64 * self.spacing
    }

    pub fn alpha(&self, i: usize) -> f64 {
        (i as f64 - self.half as f64) * self.spacing
    }

    /// Index of the bin nearest to `alpha`, clamped to the finite range.
    pub fn nearest(&self, alpha: f64) -> usize {
        let k = (alpha / self.spacing).round() + self.half as f64;
        k.clamp(0.0, (2 * self.half) as f64) as usize
    }

    fn same_as(&self, other: &Grid) -> bool {
        self.half == other.half && self.spacing == other.spacing
    }

    /// `|result index - M|` for ⊞ of magnitudes `a`, `b` (in bins).
    fn cn_table(&self) -> &[u16] {
        self.cn_index.get_or_init(|| {
            let m = self.half;
            let d = self.spacing;
            // u = 1 - tanh(x/2) = 2/(e^x + 1), kept exact near 1.
            let u: Vec<f64> = (0..=m).map(|a| 2.0 / ((a as f64 * d).exp() + 1.0)).collect();
            let mut t = vec![0u16; (m + 1) * (m + 1)];
            for a in 0..=m {
                for b in a..=m {
                    let one_minus = u[a] + u[b] - u[a] * u[b];
                    let alpha = ((2.0 - one_minus) / one_minus).ln();
                    let k = (alpha / d).round().min(a as f64) as u16;
                    t[a * (m + 1) + b] = k;
                    t[b * (m + 1) + a] = k;
                }
            }
            t
        })
    }
}

/// `log2(1 + e^{-a})`, accurate for large |a|.
pub fn log2_1p_exp_neg(a: f64) -> f64 {
    if a == f64::INFINITY {
        0.0
    } else if a >= 0.0 {
        (-a).exp().ln_1p() / std::f64::consts::LN_2
    } else {
        (-a + a.exp().ln_1p()) / std::f64::consts::LN_2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiracKind {
    Zero,
    Infinity,
}

/// Density on a shared grid. With `signed == false` it is a probability
/// measure; otherwise it is a general finite measure (differences of
/// densities, or lifts through polynomials that do not sum to one).
#[derive(Debug, Clone)]
pub struct Density {
    grid: Arc<Grid>,
    masses: Vec<f64>,
    inf_mass: f64,
    signed: bool,
}

impl PartialEq for Density {
    fn eq(&self, other: &Self) -> bool {
        self.grid.same_as(&other.grid)
            && self.masses == other.masses
            && self.inf_mass == other.inf_mass
            && self.signed == other.signed
    }
}

impl Density {
    pub fn from_parts(grid: Arc<Grid>, masses: Vec<f64>, inf_mass: f64, signed: bool) -> Result<Self> {
        if masses.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Density {
            grid,
            masses,
            inf_mass,
            signed,
        })
    }

    pub fn dirac(grid: &Arc<Grid>, kind: DiracKind) -> Self {
        let mut masses = vec![0.0; grid.len()];
        let inf_mass = match kind {
            DiracKind::Zero => {
                masses[grid.half] = 1.0;
                0.0
            }
            DiracKind::Infinity => 1.0,
        };
        Density {
            grid: grid.clone(),
            masses,
            inf_mass,
            signed: false,
        }
    }

    /// Signed zero measure.
    pub fn zero_measure(grid: &Arc<Grid>) -> Self {
        Density {
            grid: grid.clone(),
            masses: vec![0.0; grid.len()],
            inf_mass: 0.0,
            signed: true,
        }
    }

    /// `x Δ₀ + (1 - x) Δ∞`.
    pub fn bec(grid: &Arc<Grid>, x: f64) -> Self {
        let mut d = Density::dirac(grid, DiracKind::Infinity);
        d.masses[grid.half] = x;
        d.inf_mass = 1.0 - x;
        d
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn inf_mass(&self) -> f64 {
        self.inf_mass
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn finite_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.finite_mass() + self.inf_mass
    }

    /// Mass not at `+∞`; the erasure probability for two-atom densities.
    pub fn error_mass(&self) -> f64 {
        self.finite_mass()
    }

    /// Mass of the `α = 0` bin.
    pub fn zero_mass(&self) -> f64 {
        self.masses[self.grid.half]
    }

    pub fn entropy(&self) -> f64 {
        self.masses
            .iter()
            .zip(&self.grid.entropy_kernel)
            .map(|(m, k)| m * k)
            .sum()
    }

    /// Checks the invariants of a probability density.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if self.signed {
            return Ok(());
        }
        if self.masses.iter().any(|&m| m < 0.0) || self.inf_mass < 0.0 {
            return Err(invalid("negative mass in a probability density"));
        }
        let t = self.total_mass();
        if (t - 1.0).abs() > tol {
            return Err(invalid(format!("total mass {t} differs from 1")));
        }
        Ok(())
    }

    /// `Σ_{α>0} |x(-α) - e^{-α} x(α)|`; zero for an exactly symmetric density.
    pub fn symmetry_defect(&self) -> f64 {
        let m = self.grid.half;
        (1..=m)
            .map(|k| {
                let a = self.grid.alpha(m + k);
                (self.masses[m - k] - (-a).exp() * self.masses[m + k]).abs()
            })
            .sum()
    }

    /// Total-variation style L1 distance, including the `+∞` atom.
    pub fn l1_distance(&self, other: &Density) -> Result<f64> {
        self.check_grid(other)?;
        Ok(self
            .masses
            .iter()
            .zip(&other.masses)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            + (self.inf_mass - other.inf_mass).abs())
    }

    fn check_grid(&self, other: &Density) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn scaled(&self, c: f64) -> Density {
        Density {
            grid: self.grid.clone(),
            masses: self.masses.iter().map(|m| m * c).collect(),
            inf_mass: self.inf_mass * c,
            signed: true,
        }
    }

    /// `self += c * other`; the result is flagged signed.
    pub fn add_scaled(&mut self, c: f64, other: &Density) -> Result<()> {
        self.check_grid(other)?;
        for (a, b) in self.masses.iter_mut().zip(&other.masses) {
            *a += c * b;
        }
        self.inf_mass += c * other.inf_mass;
        self.signed = true;
        Ok(())
    }

    /// `self - other` as a signed measure.
    pub fn difference(&self, other: &Density) -> Result<Density> {
        let mut d = self.clone();
        d.add_scaled(-1.0, other)?;
        Ok(d)
    }

    /// Convex combination `Σ w_k x_k`; weights must sum to one.
    pub fn mixture(parts: &[(f64, &Density)]) -> Result<Density> {
        let (_, first) = parts.first().ok_or_else(|| invalid("empty mixture"))?;
        let mut out = Density {
            grid: first.grid.clone(),
            masses: vec![0.0; first.grid.len()],
            inf_mass: 0.0,
            signed: false,
        };
        let mut signed = false;
        let mut wsum = 0.0;
        for (w, d) in parts {
            out.check_grid(d)?;
            for (a, b) in out.masses.iter_mut().zip(&d.masses) {
                *a += w * b;
            }
            out.inf_mass += w * d.inf_mass;
            signed |= d.signed || *w < 0.0;
            wsum += w;
        }
        out.signed = signed || (wsum - 1.0).abs() > 1e-12;
        Ok(out)
    }

    /// Rescales a probability density to unit mass. Iterated DE multiplies
    /// rounding errors in the total by `(l-1)(r-1)` per step otherwise.
    fn renormalized(mut self) -> Density {
        if !self.signed {
            let t = self.total_mass();
            if t > 0.0 && t != 1.0 {
                let s = 1.0 / t;
                self.masses.iter_mut().for_each(|m| *m *= s);
                self.inf_mass *= s;
            }
        }
        self
    }

    /// `Some(kind)` when this is exactly a unit point mass.
    fn dirac_kind(&self) -> Option<DiracKind> {
        let m = self.grid.half;
        let rest_zero = |skip: Option<usize>| self.masses.iter().enumerate().all(|(i, &v)| Some(i) == skip || v == 0.0);
        if self.inf_mass == 1.0 && rest_zero(None) {
            Some(DiracKind::Infinity)
        } else if self.inf_mass == 0.0 && self.masses[m] == 1.0 && rest_zero(Some(m)) {
            Some(DiracKind::Zero)
        } else {
            None
        }
    }

    /// Exact result when either operand is the identity `id` or, for a
    /// probability operand, the annihilator `ann`.
    fn trivial_product(&self, y: &Density, id: DiracKind, ann: DiracKind) -> Option<Density> {
        match (self.dirac_kind(), y.dirac_kind()) {
            (Some(k), _) if k == id => Some(y.clone()),
            (_, Some(k)) if k == id => Some(self.clone()),
            (Some(k), _) if k == ann && !y.signed => Some(self.clone()),
            (_, Some(k)) if k == ann && !self.signed => Some(y.clone()),
            _ => None,
        }
    }

    /// Variable-node convolution `x ⍟ y`: density of `α₁ + α₂`.
    pub fn vn_convolve(&self, y: &Density) -> Result<Density> {
        self.check_grid(y)?;
        if let Some(d) = self.trivial_product(y, DiracKind::Zero, DiracKind::Infinity) {
            return Ok(d);
        }
        let n = self.grid.len();
        let m = self.grid.half as isize;
        let mut out = vec![0.0; n];
        // prefix[j] = Σ_{k<j} y_k, for the clamped tails
        let mut prefix = vec![0.0; n + 1];
        for j in 0..n {
            prefix[j + 1] = prefix[j] + y.masses[j];
        }
        for (i, &xi) in self.masses.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let shift = i as isize - m; // out index k = j + shift
            let j_lo = (-shift).max(0) as usize;
            let j_hi = ((n as isize - 1 - shift).min(n as isize - 1)) as usize;
            if j_lo > 0 {
                out[0] += xi * prefix[j_lo];
            }
            if j_hi + 1 < n {
                out[n - 1] += xi * (prefix[n] - prefix[j_hi + 1]);
            }
            let k0 = (j_lo as isize + shift) as usize;
            for (o, &yj) in out[k0..=k0 + (j_hi - j_lo)]
                .iter_mut()
                .zip(&y.masses[j_lo..=j_hi])
            {
                *o += xi * yj;
            }
        }
        let xf = self.finite_mass();
        let yf = y.finite_mass();
        let inf = self.inf_mass * (yf + y.inf_mass) + xf * y.inf_mass;
        Ok(Density {
            grid: self.grid.clone(),
            masses: out,
            inf_mass: inf,
            signed: self.signed || y.signed,
        }
        .renormalized())
    }

    /// Check-node convolution `x ⊞ y`: density of
    /// `2 tanh⁻¹(tanh(α₁/2) tanh(α₂/2))`, assigned to the nearest bin.
    pub fn cn_convolve(&self, y: &Density) -> Result<Density> {
        self.check_grid(y)?;
        if let Some(d) = self.trivial_product(y, DiracKind::Infinity, DiracKind::Zero) {
            return Ok(d);
        }
        let n = self.grid.len();
        let m = self.grid.half;
        let table = self.grid.cn_table();
        let stride = m + 1;
        let mut out = vec![0.0; n];
        let ynz: Vec<(usize, f64)> = y
            .masses
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(j, &v)| (j, v))
            .collect();
        for (i, &xi) in self.masses.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let (a, sa) = if i >= m { (i - m, true) } else { (m - i, false) };
            let row = &table[a * stride..(a + 1) * stride];
            for &(j, yj) in &ynz {
                let (b, sb) = if j >= m { (j - m, true) } else { (m - j, false) };
                let k = row[b] as usize;
                let idx = if sa == sb { m + k } else { m - k };
                out[idx] += xi * yj;
            }
        }
        // Δ∞ is the ⊞ identity.
        if self.inf_mass != 0.0 {
            for (o, &yj) in out.iter_mut().zip(&y.masses) {
                *o += self.inf_mass * yj;
            }
        }
        if y.inf_mass != 0.0 {
            for (o, &xi) in out.iter_mut().zip(&self.masses) {
                *o += y.inf_mass * xi;
            }
        }
        Ok(Density {
            grid: self.grid.clone(),
            masses: out,
            inf_mass: self.inf_mass * y.inf_mass,
            signed: self.signed || y.signed,
        }
        .renormalized())
    }

    /// `Σ_p c_p x^{⍟p}` with `x^{⍟0} = Δ₀`.
    pub fn poly_lift_vn(poly: &Poly, x: &Density) -> Result<Density> {
        lift(poly, x, DiracKind::Zero, Density::vn_convolve)
    }

    /// `Σ_p c_p x^{⊞p}` with `x^{⊞0} = Δ∞`.
    pub fn poly_lift_cn(poly: &Poly, x: &Density) -> Result<Density> {
        lift(poly, x, DiracKind::Infinity, Density::cn_convolve)
    }

    /// Writes `alpha,mass` rows followed by `inf,<mass>`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "alpha,mass")?;
        for (i, m) in self.masses.iter().enumerate() {
            writeln!(w, "{},{}", self.grid.alpha(i), m)?;
        }
        writeln!(w, "inf,{}", self.inf_mass)?;
        Ok(())
    }

    /// Reads the CSV format of [`Density::write_csv`] onto `grid`.
    pub fn read_csv<R: BufRead>(grid: &Arc<Grid>, r: R) -> Result<Density> {
        let mut masses = vec![0.0; grid.len()];
        let mut inf_mass = 0.0;
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            if lineno == 0 || line.trim().is_empty() {
                continue;
            }
            let (a, m) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("line {}: '{line}'", lineno + 1)))?;
            let m: f64 = m
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad mass", lineno + 1)))?;
            if a.trim() == "inf" {
                inf_mass = m;
                continue;
            }
            let a: f64 = a
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad alpha", lineno + 1)))?;
            let i = grid.nearest(a);
            if (grid.alpha(i) - a).abs() > 1e-6 * grid.spacing {
                return Err(Error::GridMismatch);
            }
            masses[i] += m;
        }
        let total: f64 = masses.iter().sum::<f64>() + inf_mass;
        let signed = (total - 1.0).abs() > 1e-9 || masses.iter().any(|&m| m < 0.0);
        Ok(Density {
            grid: grid.clone(),
            masses,
            inf_mass,
            signed,
        })
    }
}

fn lift(
    poly: &Poly,
    x: &Density,
    unit: DiracKind,
    op: fn(&Density, &Density) -> Result<Density>,
) -> Result<Density> {
    let c = poly.coeffs();
    if c.iter().all(|&v| v == 0.0) {
        return Err(invalid("empty polynomial"));
    }
    let mut out = Density::zero_measure(&x.grid);
    let mut power = Density::dirac(&x.grid, unit);
    for (p, &cp) in c.iter().enumerate() {
        if p > 0 {
            power = op(&power, x)?;
        }
        if cp != 0.0 {
            out.add_scaled(cp, &power)?;
        }
    }
    out.signed = x.signed || (poly.sum() - 1.0).abs() > 1e-12 || c.iter().any(|&v| v < 0.0);
    Ok(out.renormalized())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ChannelFamily {
    Bec,
    Bsc,
    Biawgn,
}

impl std::str::FromStr for ChannelFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bec" => Ok(ChannelFamily::Bec),
            "bsc" => Ok(ChannelFamily::Bsc),
            "biawgn" | "awgn" => Ok(ChannelFamily::Biawgn),
            _ => Err(Error::Parse(format!("unknown channel '{s}'"))),
        }
    }
}

/// A channel with its parameter: erasure probability, crossover probability
/// or noise variance `σ²`. The entropy is cached from the standard grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    pub family: ChannelFamily,
    pub parameter: f64,
    pub entropy: f64,
}

impl ChannelSpec {
    pub fn new(family: ChannelFamily, parameter: f64) -> Result<Self> {
        let ok = match family {
            ChannelFamily::Bec => (0.0..=1.0).contains(&parameter),
            ChannelFamily::Bsc => (0.0..=0.5).contains(&parameter),
            ChannelFamily::Biawgn => parameter > 0.0 && parameter.is_finite(),
        };
        if !ok {
            return Err(invalid(format!("{family:?} parameter {parameter} out of range")));
        }
        let mut spec = ChannelSpec {
            family,
            parameter,
            entropy: 0.0,
        };
        spec.entropy = spec.density(&Grid::standard()).entropy();
        Ok(spec)
    }

    pub fn bec(eps: f64) -> Result<Self> {
        Self::new(ChannelFamily::Bec, eps)
    }

    pub fn density(&self, grid: &Arc<Grid>) -> Density {
        match self.family {
            ChannelFamily::Bec => Density::bec(grid, self.parameter),
            ChannelFamily::Bsc => {
                let p = self.parameter;
                if p == 0.0 {
                    return Density::dirac(grid, DiracKind::Infinity);
                }
                let a = ((1.0 - p) / p).ln();
                let mut masses = vec![0.0; grid.len()];
                masses[grid.nearest(a)] += 1.0 - p;
                masses[grid.nearest(-a)] += p;
                Density {
                    grid: grid.clone(),
                    masses,
                    inf_mass: 0.0,
                    signed: false,
                }
            }
            ChannelFamily::Biawgn => {
                let mean = 2.0 / self.parameter;
                let sd = (2.0 * mean).sqrt();
                let n = grid.len();
                let d = grid.spacing;
                // Φ(t) via erfc; bin k covers [α_k - Δ/2, α_k + Δ/2], the end
                // bins absorb the tails.
                let cdf = |t: f64| 0.5 * erfc(-(t - mean) / (sd * std::f64::consts::SQRT_2));
                let mut masses = vec![0.0; n];
                let mut lo = 0.0;
                for (k, mk) in masses.iter_mut().enumerate() {
                    let hi = if k + 1 == n { 1.0 } else { cdf(grid.alpha(k) + 0.5 * d) };
                    *mk = (hi - lo).max(0.0);
                    lo = hi;
                }
                let total: f64 = masses.iter().sum();
                for mk in masses.iter_mut() {
                    *mk /= total;
                }
                Density {
                    grid: grid.clone(),
                    masses,
                    inf_mass: 0.0,
                    signed: false,
                }
            }
        }
    }
}

/// Convenience: channel density on the grid of `grid`.
pub fn channel_density(spec: &ChannelSpec, grid: &Arc<Grid>) -> Density {
    spec.density(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g() -> Arc<Grid> {
        Grid::standard()
    }

    #[test]
    fn dirac_entropies() {
        assert_eq!(Density::dirac(&g(), DiracKind::Zero).entropy(), 1.0);
        assert_eq!(Density::dirac(&g(), DiracKind::Infinity).entropy(), 0.0);
    }

    #[test]
    fn bec_atom_products() {
        let a = Density::bec(&g(), 0.3);
        let b = Density::bec(&g(), 0.5);
        let v = a.vn_convolve(&b).unwrap();
        assert!((v.zero_mass() - 0.15).abs() < 1e-15);
        assert!((v.inf_mass() - 0.85).abs() < 1e-15);
        assert!((v.finite_mass() - 0.15).abs() < 1e-15);
        let c = a.cn_convolve(&b).unwrap();
        assert!((c.zero_mass() - 0.65).abs() < 1e-15);
        assert!((c.inf_mass() - 0.35).abs() < 1e-15);
    }

    #[test]
    fn identities_and_annihilators() {
        let grid = g();
        let x = ChannelSpec::new(ChannelFamily::Biawgn, 0.8).unwrap().density(&grid);
        let d0 = Density::dirac(&grid, DiracKind::Zero);
        let dinf = Density::dirac(&grid, DiracKind::Infinity);
        assert_eq!(d0.vn_convolve(&x).unwrap().masses(), x.masses());
        assert_eq!(dinf.cn_convolve(&x).unwrap().masses(), x.masses());
        assert_eq!(d0.cn_convolve(&x).unwrap().masses(), d0.masses());
        let a = dinf.vn_convolve(&x).unwrap();
        assert_eq!(a.inf_mass(), 1.0);
        assert_eq!(a.finite_mass(), 0.0);
    }

    #[test]
    fn cn_table_matches_direct_tanh_rule() {
        let grid = Grid::new(64, 16.0).unwrap();
        let d = grid.spacing();
        for (i, j) in [(70usize, 90usize), (10, 100), (64, 5), (128, 0), (1, 127)] {
            let mut x = vec![0.0; grid.len()];
            let mut y = vec![0.0; grid.len()];
            x[i] = 1.0;
            y[j] = 1.0;
            let x = Density::from_parts(grid.clone(), x, 0.0, false).unwrap();
            let y = Density::from_parts(grid.clone(), y, 0.0, false).unwrap();
            let c = x.cn_convolve(&y).unwrap();
            let a1 = grid.alpha(i);
            let a2 = grid.alpha(j);
            let want = 2.0 * ((a1 / 2.0).tanh() * (a2 / 2.0).tanh()).atanh();
            let k = c.masses().iter().position(|&m| m == 1.0).unwrap();
            assert!((grid.alpha(k) - want).abs() <= 0.5 * d + 1e-12, "{i} {j}");
        }
    }

    #[test]
    fn vn_clamps_to_end_bins() {
        let grid = Grid::new(8, 4.0).unwrap();
        let mut x = vec![0.0; grid.len()];
        x[15] = 1.0;
        let x = Density::from_parts(grid.clone(), x, 0.0, false).unwrap();
        let v = x.vn_convolve(&x).unwrap();
        assert_eq!(v.masses()[16], 1.0);
        assert_eq!(v.inf_mass(), 0.0);
    }

    #[test]
    fn bec_entropy_is_erasure_probability() {
        for e in [0.0, 0.2, 0.46, 1.0] {
            assert!((Density::bec(&g(), e).entropy() - e).abs() < 1e-15);
        }
    }

    #[test]
    fn bsc_half_is_zero_bin() {
        let d = ChannelSpec::new(ChannelFamily::Bsc, 0.5).unwrap().density(&g());
        assert_eq!(d.zero_mass(), 1.0);
        assert!((ChannelSpec::new(ChannelFamily::Bsc, 0.5).unwrap().entropy - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lift_bec_matches_erasure_rule() {
        let rho = Poly::monomial(5);
        let x = 0.37;
        let out = Density::poly_lift_cn(&rho, &Density::bec(&g(), x)).unwrap();
        let want = 1.0 - (1.0 - x).powi(5);
        assert!((out.zero_mass() - want).abs() < 1e-14);
        assert!((out.inf_mass() - (1.0 - x).powi(5)).abs() < 1e-14);
        let l = Density::poly_lift_vn(&Poly::monomial(2), &Density::dirac(&g(), DiracKind::Zero)).unwrap();
        assert_eq!(l.zero_mass(), 1.0);
        let c = Density::poly_lift_cn(&rho, &Density::dirac(&g(), DiracKind::Zero)).unwrap();
        assert_eq!(c.zero_mass(), 1.0);
    }

    #[test]
    fn signed_entropy_is_linear() {
        let x = ChannelSpec::new(ChannelFamily::Bsc, 0.1).unwrap().density(&g());
        assert_eq!(x.difference(&x).unwrap().entropy(), 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let grid = Grid::new(16, 8.0).unwrap();
        let x = ChannelSpec::new(ChannelFamily::Biawgn, 1.0).unwrap().density(&grid);
        let mut buf = Vec::new();
        x.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("alpha,mass\n"));
        assert!(text.trim_end().ends_with("inf,0"));
        let y = Density::read_csv(&grid, &buf[..]).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn channel_parameter_ranges() {
        assert!(ChannelSpec::new(ChannelFamily::Bec, 1.2).is_err());
        assert!(ChannelSpec::new(ChannelFamily::Bsc, 0.6).is_err());
        assert!(ChannelSpec::new(ChannelFamily::Biawgn, 0.0).is_err());
    }
}
