use std::sync::Arc;

use proptest::prelude::*;

use scwave::ensemble::DegreeDistribution;
use scwave::ga::{ga_cn, ga_vn, psi, psi_inv};
use scwave::scalar::{fixed_points, BernoulliGaussian, Gldpc, ScalarSystem};
use scwave::single::{bec_potential, energy_gap, fixed_points_bec, threshold_bp, threshold_map_bec};
use scwave::{ChannelFamily, ChannelSpec, Density, DiracKind, Grid};

fn grid() -> Arc<Grid> {
    Grid::standard()
}

fn channel() -> impl Strategy<Value = ChannelSpec> {
    prop_oneof![
        (0.05f64..0.95).prop_map(|e| ChannelSpec::new(ChannelFamily::Bec, e).unwrap()),
        (0.01f64..0.45).prop_map(|p| ChannelSpec::new(ChannelFamily::Bsc, p).unwrap()),
        (0.2f64..4.0).prop_map(|s| ChannelSpec::new(ChannelFamily::Biawgn, s).unwrap()),
    ]
}

/// Random symmetric density: a convex mixture of up to three channel densities.
fn density() -> impl Strategy<Value = Density> {
    prop::collection::vec((channel(), 0.1f64..1.0), 1..=3).prop_map(|parts| {
        let g = grid();
        let dens: Vec<Density> = parts.iter().map(|(c, _)| c.density(&g)).collect();
        let total: f64 = parts.iter().map(|p| p.1).sum();
        let weighted: Vec<(f64, &Density)> = parts.iter().zip(&dens).map(|((_, w), d)| (w / total, d)).collect();
        Density::mixture(&weighted).unwrap()
    })
}

fn same(a: &Density, b: &Density) -> bool {
    a.masses() == b.masses() && a.inf_mass() == b.inf_mass()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn convolutions_conserve_mass(x in density(), y in density()) {
        prop_assert!((x.vn_convolve(&y).unwrap().total_mass() - 1.0).abs() < 1e-12);
        prop_assert!((x.cn_convolve(&y).unwrap().total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_duality(x in density(), y in density()) {
        let v = x.vn_convolve(&y).unwrap();
        let c = x.cn_convolve(&y).unwrap();
        let defect = v.entropy() + c.entropy() - x.entropy() - y.entropy();
        prop_assert!(defect.abs() < 5e-3, "defect {}", defect);
    }

    #[test]
    fn convolutions_commute(x in density(), y in density()) {
        let a = x.vn_convolve(&y).unwrap().l1_distance(&y.vn_convolve(&x).unwrap()).unwrap();
        let b = x.cn_convolve(&y).unwrap().l1_distance(&y.cn_convolve(&x).unwrap()).unwrap();
        prop_assert!(a < 1e-12 && b < 1e-10, "{} {}", a, b);
    }

    #[test]
    fn identities_and_annihilators(x in density()) {
        let g = grid();
        let zero = Density::dirac(&g, DiracKind::Zero);
        let inf = Density::dirac(&g, DiracKind::Infinity);
        prop_assert!(same(&x.vn_convolve(&zero).unwrap(), &x));
        prop_assert!(same(&x.cn_convolve(&inf).unwrap(), &x));
        prop_assert!(same(&x.vn_convolve(&inf).unwrap(), &inf));
        prop_assert!(same(&x.cn_convolve(&zero).unwrap(), &zero));
    }

    #[test]
    fn entropy_in_unit_interval(x in density()) {
        let h = x.entropy();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&h));
    }

    #[test]
    fn bec_potential_stationary_at_fixed_points(eps in 0.43f64..0.487) {
        let d = DegreeDistribution::regular(3, 6).unwrap();
        let fp = fixed_points_bec(eps, &d).unwrap();
        for x in [Some(fp.x_good), fp.x_unst, fp.x_bad].into_iter().flatten() {
            let fd = fd_slope(|t| bec_potential(t, eps, &d), x, 1.0);
            prop_assert!(fd.abs() < 1e-6, "x={} U'={}", x, fd);
        }
    }

    #[test]
    fn gldpc_potential_stationary_at_fixed_points(eps in 0.35f64..0.39) {
        let sys = Gldpc::new(15, 3).unwrap();
        let fp = fixed_points(&sys, eps);
        for x in [Some(fp.x_good), fp.x_unst, fp.x_bad].into_iter().flatten() {
            let fd = fd_slope(|t| sys.potential(t, eps), x, sys.x_max());
            prop_assert!(fd.abs() < 1e-6, "x={} U'={}", x, fd);
        }
    }

    #[test]
    fn mmse_is_twice_information_slope(s in 0.05f64..1e4) {
        let prior = BernoulliGaussian::normalized(0.1).unwrap();
        let h = 1e-3 * s;
        let di = (prior.mutual_info(s + h) - prior.mutual_info(s - h)) / (2.0 * h);
        prop_assert!((di - 0.5 * prior.mmse(s)).abs() < 1e-4);
    }

    #[test]
    fn psi_inverse_round_trip(m in 1e-5f64..400.0) {
        let p = psi(m).unwrap();
        let back = psi_inv(p).unwrap();
        prop_assert!((back - m).abs() <= 1e-6 * m.max(1.0), "{} -> {} -> {}", m, p, back);
    }

    #[test]
    fn psi_decreasing(a in 0.0f64..300.0, b in 0.0f64..300.0) {
        prop_assume!((a - b).abs() > 1e-6);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(psi(lo).unwrap() > psi(hi).unwrap());
    }

    #[test]
    fn ga_rules_stay_in_range(p in 1e-6f64..1.0, q in 1e-6f64..1.0) {
        let (v, c) = (ga_vn(p, q), ga_cn(p, q));
        prop_assert!((0.0..=p.min(q) + 1e-12).contains(&v));
        prop_assert!((p.max(q) - 1e-12..=1.0).contains(&c));
    }
}

#[test]
fn energy_gap_non_increasing_over_bistable_range() {
    let d = DegreeDistribution::regular(3, 6).unwrap();
    let (bp, map) = (threshold_bp(&d), threshold_map_bec(&d).unwrap());
    let gaps: Vec<f64> = (0..20)
        .map(|k| energy_gap(bp + 1e-6 + (map - bp - 2e-6) * k as f64 / 19.0, &d).unwrap())
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{gaps:?}");
    assert!(gaps[0] > 0.0 && gaps[19].abs() < 1e-5);
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
