use statrs::function::beta::{beta_reg, ln_beta};

use super::ScalarSystem;
use crate::error::{invalid, Result};

/// Generalized LDPC check nodes correcting `e − 1` erasures out of `n`:
/// `g(x) = I_x(e, n − e)`, `f(y) = ε y`.
#[derive(Debug, Clone)]
pub struct Gldpc {
    n: usize,
    e: usize,
    ln_b: f64,
}

/// Above this length the binomial sum is replaced by the incomplete beta function.
const BINOMIAL_MAX_N: usize = 30;

impl Gldpc {
    pub fn new(n: usize, e: usize) -> Result<Self> {
        if e < 2 {
            return Err(invalid(format!(
                "GLDPC needs e >= 2 (the potential has a g'/(x(1-x)) term that is singular at x=0 for e={e})"
            )));
        }
        if e >= n {
            return Err(invalid(format!("GLDPC needs e < n, got n={n}, e={e}")));
        }
        Ok(Gldpc {
            n,
            e,
            ln_b: ln_beta(e as f64, (n - e) as f64),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn e(&self) -> usize {
        self.e
    }

    /// `Σ_{i=e}^{n−1} C(n−1, i) x^i (1−x)^{n−1−i}`.
    pub fn g_binomial(&self, x: f64) -> f64 {
        let m = self.n - 1;
        let mut c = 1.0;
        let mut s = 0.0;
        for i in 0..=m {
            if i >= self.e {
                s += c * x.powi(i as i32) * (1.0 - x).powi((m - i) as i32);
            }
            c = c * (m - i) as f64 / (i + 1) as f64;
        }
        s
    }

    pub fn g_beta(&self, x: f64) -> f64 {
        beta_reg(self.e as f64, (self.n - self.e) as f64, x.clamp(0.0, 1.0))
    }

    /// Closed form `(e/n) g − x(1−x) g'/n − (ε/2) g²`.
    pub fn potential_closed(&self, x: f64, eps: f64) -> f64 {
        let g = self.g(x, eps);
        let n = self.n as f64;
        (self.e as f64 / n) * g - x * (1.0 - x) * self.g_prime(x, eps) / n - 0.5 * eps * g * g
    }
}

impl ScalarSystem for Gldpc {
    fn label(&self) -> String {
        format!("gldpc n={} e={}", self.n, self.e)
    }
    fn f(&self, y: f64, eps: f64) -> f64 {
        eps * y
    }
    fn g(&self, x: f64, _eps: f64) -> f64 {
        if self.n <= BINOMIAL_MAX_N {
            self.g_binomial(x)
        } else {
            self.g_beta(x)
        }
    }
    fn g_prime(&self, x: f64, _eps: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        let a = (self.e - 1) as f64 * x.ln() + (self.n - self.e - 1) as f64 * (1.0 - x).ln();
        (a - self.ln_b).exp()
    }
    fn x_max(&self) -> f64 {
        1.0
    }
    fn param_range(&self) -> (f64, f64) {
        (1e-6, 1.0)
    }
    fn big_f(&self, y: f64, eps: f64) -> f64 {
        0.5 * eps * y * y
    }
    fn potential(&self, x: f64, eps: f64) -> f64 {
        self.potential_closed(x, eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{fixed_points, scalar_thresholds};

    #[test]
    fn endpoints_and_paths_agree() {
        let s = Gldpc::new(15, 3).unwrap();
        assert_eq!(s.g(0.0, 0.3), 0.0);
        assert!((s.g(1.0, 0.3) - 1.0).abs() < 1e-15);
        for i in 1..10 {
            let x = i as f64 / 10.0;
            assert!((s.g_binomial(x) - s.g_beta(x)).abs() < 1e-12);
            let h = 1e-6;
            let fd = (s.g_binomial(x + h) - s.g_binomial(x - h)) / (2.0 * h);
            assert!((fd - s.g_prime(x, 0.3)).abs() < 1e-8);
        }
    }

    #[test]
    fn closed_form_potential_matches_generic() {
        let s = Gldpc::new(15, 3).unwrap();
        for i in 0..=10 {
            let x = i as f64 / 10.0;
            let gx = s.g(x, 0.37);
            let generic = x * gx - s.big_g(x, 0.37) - s.big_f(gx, 0.37);
            assert!((generic - s.potential_closed(x, 0.37)).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_small_e() {
        assert!(Gldpc::new(15, 1).is_err());
        assert!(Gldpc::new(5, 5).is_err());
    }

    #[test]
    fn bistable_between_thresholds() {
        let s = Gldpc::new(15, 3).unwrap();
        assert!(fixed_points(&s, 0.36).x_bad.unwrap() > 0.1);
        let th = scalar_thresholds(&s).unwrap();
        assert!((th.eps_a - 0.348).abs() < 2e-3, "{th:?}");
        assert!((th.eps_pot - 0.394).abs() < 2e-3, "{th:?}");
    }
}
