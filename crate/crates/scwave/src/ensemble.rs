//! Polynomials and LDPC degree distributions.

use std::fmt;

use crate::error::{Error, Result};

/// Real polynomial stored by power: `coeffs[p]` multiplies `y^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn monomial(power: usize) -> Self {
        let mut c = vec![0.0; power + 1];
        c[power] = 1.0;
        Poly { coeffs: c }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * y + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::new(vec![0.0]);
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(p, &c)| p as f64 * c)
                .collect(),
        )
    }

    pub fn sum(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    fn scaled(&self, s: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    fn fmt_terms(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (p, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            if !first {
                write!(f, "+")?;
            }
            first = false;
            match p {
                0 => write!(f, "{c}")?,
                1 if c == 1.0 => write!(f, "x")?,
                1 => write!(f, "{c}x")?,
                _ if c == 1.0 => write!(f, "x^{p}")?,
                _ => write!(f, "{c}x^{p}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }

    /// Parses sums of terms such as `0.3x^2+0.6x^3+x^5`.
    pub fn parse(s: &str) -> Result<Poly> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err(Error::Parse("empty polynomial".into()));
        }
        let mut coeffs: Vec<f64> = Vec::new();
        for term in s.split('+') {
            if term.is_empty() {
                return Err(Error::Parse(format!("empty term in '{s}'")));
            }
            let (coef, power) = match term.find('x') {
                None => (parse_num(term)?, 0usize),
                Some(pos) => {
                    let c = if pos == 0 {
                        1.0
                    } else {
                        parse_num(term[..pos].trim_end_matches('*'))?
                    };
                    let rest = &term[pos + 1..];
                    let p = if rest.is_empty() {
                        1
                    } else if let Some(e) = rest.strip_prefix('^') {
                        e.parse::<usize>()
                            .map_err(|_| Error::Parse(format!("bad exponent in '{term}'")))?
                    } else {
                        return Err(Error::Parse(format!("bad term '{term}'")));
                    };
                    (c, p)
                }
            };
            if coef < 0.0 || !coef.is_finite() {
                return Err(Error::Parse(format!("negative or non-finite coefficient in '{term}'")));
            }
            if coeffs.len() <= power {
                coeffs.resize(power + 1, 0.0);
            }
            coeffs[power] += coef;
        }
        Ok(Poly::new(coeffs))
    }
}

fn parse_num(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::Parse(format!("bad coefficient '{s}'")))
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_terms(f)
    }
}

/// Edge- and node-perspective degree distributions of an LDPC ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    pub lambda: Poly,
    pub rho: Poly,
    pub big_l: Poly,
    pub big_r: Poly,
    pub lp1: f64,
    pub rp1: f64,
    regular: Option<(usize, usize)>,
}

impl DegreeDistribution {
    pub fn regular(l: usize, r: usize) -> Result<Self> {
        if l < 2 || r < 2 {
            return Err(Error::InvalidParameter(format!(
                "regular ensemble needs l, r >= 2, got ({l},{r})"
            )));
        }
        Ok(DegreeDistribution {
            lambda: Poly::monomial(l - 1),
            rho: Poly::monomial(r - 1),
            big_l: Poly::monomial(l),
            big_r: Poly::monomial(r),
            lp1: l as f64,
            rp1: r as f64,
            regular: Some((l, r)),
        })
    }

    /// Builds from node-perspective polynomials; exponents are node degrees.
    pub fn from_node(big_l: Poly, big_r: Poly) -> Result<Self> {
        let (big_l, lambda, lp1) = node_to_edge(big_l, "L")?;
        let (big_r, rho, rp1) = node_to_edge(big_r, "R")?;
        let regular = match (single_power(&big_l), single_power(&big_r)) {
            (Some(l), Some(r)) => Some((l, r)),
            _ => None,
        };
        Ok(DegreeDistribution {
            lambda,
            rho,
            big_l,
            big_r,
            lp1,
            rp1,
            regular,
        })
    }

    /// Builds from edge-perspective polynomials `λ(y)`, `ρ(y)`.
    pub fn from_edge(lambda: Poly, rho: Poly) -> Result<Self> {
        let to_node = |e: &Poly, name: &str| -> Result<Poly> {
            let total = e.sum();
            if total <= 0.0 {
                return Err(Error::InvalidParameter(format!("{name} is empty")));
            }
            let e = e.scaled(1.0 / total);
            let mut n = vec![0.0; e.coeffs().len() + 1];
            for (p, &c) in e.coeffs().iter().enumerate() {
                n[p + 1] = c / (p + 1) as f64;
            }
            Ok(Poly::new(n))
        };
        let l = to_node(&lambda, "lambda")?;
        let r = to_node(&rho, "rho")?;
        Self::from_node(l, r)
    }

    /// Parses `l,r`, `L:...;R:...` (node degrees) or `lambda:...;rho:...` (edge).
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((a, b)) = s.split_once(',') {
            if !a.contains(':') {
                let l = a.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad ensemble '{s}'")))?;
                let r = b.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad ensemble '{s}'")))?;
                return Self::regular(l, r);
            }
        }
        let (left, right) = s
            .split_once(';')
            .ok_or_else(|| Error::Parse(format!("bad ensemble '{s}'")))?;
        let (kl, pl) = left
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("bad ensemble '{s}'")))?;
        let (kr, pr) = right
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("bad ensemble '{s}'")))?;
        match (kl.trim(), kr.trim()) {
            ("L", "R") => Self::from_node(Poly::parse(pl)?, Poly::parse(pr)?),
            ("lambda", "rho") => Self::from_edge(Poly::parse(pl)?, Poly::parse(pr)?),
            _ => Err(Error::Parse(format!("bad ensemble '{s}'"))),
        }
    }

    pub fn regular_degrees(&self) -> Option<(usize, usize)> {
        self.regular
    }

    pub fn lambda(&self, y: f64) -> f64 {
        self.lambda.eval(y)
    }

    pub fn rho(&self, y: f64) -> f64 {
        self.rho.eval(y)
    }

    pub fn big_l(&self, y: f64) -> f64 {
        self.big_l.eval(y)
    }

    pub fn big_r(&self, y: f64) -> f64 {
        self.big_r.eval(y)
    }

    pub fn rho_prime(&self, y: f64) -> f64 {
        // Evaluated directly so no polynomial is allocated in hot loops.
        let c = self.rho.coeffs();
        let mut acc = 0.0;
        for p in (1..c.len()).rev() {
            acc = acc * y + p as f64 * c[p];
        }
        acc
    }

    pub fn lambda_prime(&self, y: f64) -> f64 {
        let c = self.lambda.coeffs();
        let mut acc = 0.0;
        for p in (1..c.len()).rev() {
            acc = acc * y + p as f64 * c[p];
        }
        acc
    }
}

fn single_power(p: &Poly) -> Option<usize> {
    let nz: Vec<usize> = p
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0.0)
        .map(|(i, _)| i)
        .collect();
    (nz.len() == 1).then(|| nz[0])
}

fn node_to_edge(node: Poly, name: &str) -> Result<(Poly, Poly, f64)> {
    let total = node.sum();
    if total <= 0.0 {
        return Err(Error::InvalidParameter(format!("{name} is empty")));
    }
    if node.coeffs().first().copied().unwrap_or(0.0) != 0.0
        || node.coeffs().get(1).copied().unwrap_or(0.0) != 0.0
    {
        return Err(Error::InvalidParameter(format!(
            "{name} must only contain degrees >= 2"
        )));
    }
    let node = if (total - 1.0).abs() > 1e-12 {
        node.scaled(1.0 / total)
    } else {
        node
    };
    let p1: f64 = node
        .coeffs()
        .iter()
        .enumerate()
        .map(|(d, &c)| d as f64 * c)
        .sum();
    let edge = Poly::new(
        node.coeffs()
            .iter()
            .enumerate()
            .skip(1)
            .map(|(d, &c)| d as f64 * c / p1)
            .collect(),
    );
    Ok((node, edge, p1))
}

impl fmt::Display for DegreeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.regular {
            Some((l, r)) => write!(f, "{l},{r}"),
            None => write!(f, "L:{};R:{}", self.big_l, self.big_r),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regular_36() {
        let d = DegreeDistribution::regular(3, 6).unwrap();
        assert_eq!(d.lambda(0.5), 0.25);
        assert_eq!(d.rho(0.5), 0.5f64.powi(5));
        assert_eq!(d.lp1, 3.0);
        assert_eq!(d.rp1, 6.0);
        assert_eq!(d.rho_prime(0.5), 5.0 * 0.5f64.powi(4));
        assert_eq!(d.to_string(), "3,6");
    }

    #[test]
    fn node_edge_relation() {
        let d = DegreeDistribution::parse("L:0.3x^2+0.6x^3+0.1x^5;R:x^4").unwrap();
        // L'(y) = L'(1) λ(y), coefficient-wise
        let lp = d.big_l.derivative();
        for (p, &c) in lp.coeffs().iter().enumerate() {
            let e = d.lambda.coeffs().get(p).copied().unwrap_or(0.0);
            assert!((c - d.lp1 * e).abs() < 1e-12);
        }
        assert!((d.lambda.sum() - 1.0).abs() < 1e-12);
        assert!((d.lp1 - (0.6 + 1.8 + 0.5)).abs() < 1e-12);
        assert_eq!(d.rp1, 4.0);
    }

    #[test]
    fn edge_round_trip() {
        let d = DegreeDistribution::parse("lambda:0.3x^3+0.4x^5+0.3x^6;rho:x^5").unwrap();
        assert!((d.lambda.coeffs()[3] - 0.3).abs() < 1e-12);
        assert!((d.lambda.coeffs()[5] - 0.4).abs() < 1e-12);
        assert!((d.lambda.coeffs()[6] - 0.3).abs() < 1e-12);
        assert_eq!(d.regular_degrees(), None);
    }

    #[test]
    fn canonical_text_round_trips() {
        for s in ["3,6", "L:0.3x^2+0.6x^3+0.1x^5;R:x^4"] {
            let d = DegreeDistribution::parse(s).unwrap();
            let again = DegreeDistribution::parse(&d.to_string()).unwrap();
            assert_eq!(d, again);
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(DegreeDistribution::parse("3").is_err());
        assert!(DegreeDistribution::parse("1,6").is_err());
        assert!(DegreeDistribution::parse("L:x;R:x^4").is_err());
        assert!(Poly::parse("0.3y^2").is_err());
    }
}
