use std::f64::consts::PI;

use super::{Direction, ScalarSystem};
use crate::error::{invalid, Result};
use crate::numeric::integrate;

/// Prior `(1−ρ) δ₀ + ρ N(0, v)` observed as `Y = √s S + Z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernoulliGaussian {
    pub rho: f64,
    pub slab_variance: f64,
}

fn ln_normal(y: f64, var: f64) -> f64 {
    -0.5 * y * y / var - 0.5 * (2.0 * PI * var).ln()
}

impl BernoulliGaussian {
    pub fn new(rho: f64, slab_variance: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(invalid(format!("sparsity {rho} outside (0,1]")));
        }
        if !(slab_variance > 0.0) {
            return Err(invalid(format!("slab variance {slab_variance} must be positive")));
        }
        Ok(BernoulliGaussian { rho, slab_variance })
    }

    /// Unit-power prior: slab variance `1/ρ`.
    pub fn normalized(rho: f64) -> Result<Self> {
        Self::new(rho, 1.0 / rho)
    }

    pub fn power(&self) -> f64 {
        self.rho * self.slab_variance
    }

    /// Positive-half breakpoints covering the spike/slab crossing and both scales.
    fn breakpoints(&self, s: f64) -> Vec<f64> {
        let var1 = 1.0 + s * self.slab_variance;
        let sd1 = var1.sqrt();
        let mut pts = vec![0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 40.0];
        let arg = (1.0 - self.rho) * sd1 / self.rho;
        if var1 > 1.0 && arg > 1.0 {
            let ystar = (2.0 * var1 / (var1 - 1.0) * arg.ln()).sqrt();
            if ystar.is_finite() {
                pts.extend([0.5 * ystar, ystar, ystar + 2.0, ystar + 5.0, ystar + 10.0, ystar + 40.0]);
            }
        }
        pts.extend([0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 40.0].iter().map(|k| k * sd1));
        let upper = 40.0 * sd1;
        pts.retain(|&p| p <= upper);
        pts.push(upper);
        pts.sort_by(|a, b| a.total_cmp(b));
        pts.dedup();
        pts
    }

    /// Minimum mean-square error of estimating `S` from `Y`.
    pub fn mmse(&self, s: f64) -> f64 {
        let v = self.slab_variance;
        if s <= 0.0 {
            return self.power();
        }
        let var1 = 1.0 + s * v;
        let gain = s.sqrt() * v / var1;
        let (l0, l1) = ((1.0 - self.rho).ln(), self.rho.ln());
        // E[Var(S|Y)] = ρ v/(1+sv) + ∫ π₀π₁ p μ₁² dy with μ₁ = gain·y
        let cross = |y: f64| {
            if self.rho >= 1.0 {
                return 0.0;
            }
            let a = l0 + ln_normal(y, 1.0);
            let b = l1 + ln_normal(y, var1);
            let m = a.max(b);
            let ln_p = m + ((a - m).exp() + (b - m).exp()).ln();
            let mu = gain * y;
            (a + b - ln_p).exp() * mu * mu
        };
        let half = integrate(cross, &self.breakpoints(s), 1e-14, 1e-10);
        self.rho * v / var1 + 2.0 * half
    }

    /// Mutual information `I(S; Y)` in nats.
    pub fn mutual_info(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let var1 = 1.0 + s * self.slab_variance;
        let (l0, l1) = ((1.0 - self.rho).ln(), self.rho.ln());
        // I = h(Y) − h(Z) = ∫ p ln(N₀/p)... written as −∫ p ln p − ½ ln(2πe)
        let integrand = |y: f64| {
            let a = if self.rho < 1.0 { l0 + ln_normal(y, 1.0) } else { f64::NEG_INFINITY };
            let b = l1 + ln_normal(y, var1);
            let m = a.max(b);
            let ln_p = m + ((a - m).exp() + (b - m).exp()).ln();
            -ln_p.exp() * ln_p
        };
        let h = 2.0 * integrate(integrand, &self.breakpoints(s), 1e-16, 1e-13);
        h - 0.5 * (2.0 * PI * std::f64::consts::E).ln()
    }
}

/// MMSE of the unit-power Bernoulli–Gaussian prior.
pub fn mmse_bernoulli_gaussian(s: f64, rho: f64) -> Result<f64> {
    Ok(BernoulliGaussian::normalized(rho)?.mmse(s))
}

/// Mutual information (nats) of the unit-power Bernoulli–Gaussian prior.
pub fn mutual_info_bernoulli_gaussian(s: f64, rho: f64) -> Result<f64> {
    Ok(BernoulliGaussian::normalized(rho)?.mutual_info(s))
}

/// AMP state evolution `x ← mmse(1/(1/snr + x/δ))` with control parameter δ:
/// `g(x) = snr − 1/(1/snr + x/δ)`, `f(y) = mmse(snr − y)`.
#[derive(Debug, Clone)]
pub struct CompressiveSensing {
    prior: BernoulliGaussian,
    snr: f64,
    i_snr: f64,
}

impl CompressiveSensing {
    pub fn new(rho: f64, snr: f64) -> Result<Self> {
        Self::with_prior(BernoulliGaussian::normalized(rho)?, snr)
    }

    pub fn with_prior(prior: BernoulliGaussian, snr: f64) -> Result<Self> {
        if !(snr > 0.0 && snr.is_finite()) {
            return Err(invalid(format!("snr {snr} must be positive and finite")));
        }
        Ok(CompressiveSensing {
            prior,
            snr,
            i_snr: prior.mutual_info(snr),
        })
    }

    pub fn prior(&self) -> &BernoulliGaussian {
        &self.prior
    }

    pub fn snr(&self) -> f64 {
        self.snr
    }

    /// Effective SNR `1/(1/snr + x/δ)`.
    pub fn effective_snr(&self, x: f64, delta: f64) -> f64 {
        1.0 / (1.0 / self.snr + x / delta)
    }

    /// `−x·E + δ ln(1 + x·snr/δ) − 2I(snr) + 2I(E)` with `E` the effective SNR.
    pub fn potential_closed(&self, x: f64, delta: f64) -> f64 {
        let e = self.effective_snr(x, delta);
        -x * e + delta * (x * self.snr / delta).ln_1p() - 2.0 * self.i_snr + 2.0 * self.prior.mutual_info(e)
    }
}

impl ScalarSystem for CompressiveSensing {
    fn label(&self) -> String {
        format!(
            "cs rho={} snr={} slab_variance={}",
            self.prior.rho, self.snr, self.prior.slab_variance
        )
    }
    fn f(&self, y: f64, _delta: f64) -> f64 {
        self.prior.mmse((self.snr - y).max(0.0))
    }
    fn g(&self, x: f64, delta: f64) -> f64 {
        self.snr - self.effective_snr(x, delta)
    }
    fn g_prime(&self, x: f64, delta: f64) -> f64 {
        let e = self.effective_snr(x, delta);
        e * e / delta
    }
    fn x_max(&self) -> f64 {
        self.prior.power()
    }
    fn param_range(&self) -> (f64, f64) {
        (0.02, 1.0)
    }
    fn direction(&self) -> Direction {
        Direction::Decreasing
    }
    fn big_g(&self, x: f64, delta: f64) -> f64 {
        x * self.snr - delta * (x * self.snr / delta).ln_1p()
    }
    fn big_f(&self, y: f64, _delta: f64) -> f64 {
        2.0 * self.i_snr - 2.0 * self.prior.mutual_info((self.snr - y).max(0.0))
    }
    fn potential(&self, x: f64, delta: f64) -> f64 {
        self.potential_closed(x, delta)
    }
}
