use super::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

fn soliton_at(a: f64, n: usize) -> LaxOperator {
    let q = RealField::from_fn(Geometry::line(1.0, n), |x| 2.0 / ((x - a) * (x - a) + 1.0));
    LaxOperator::from_potential(&q).unwrap()
}

fn lopsided(n: usize) -> LaxOperator {
    let q = RealField::from_fn(Geometry::line(1.0, n), |x| {
        1.2 / ((x - 0.3) * (x - 0.3) + 1.0) + 0.4 * x * (-(x * x)).exp()
    });
    LaxOperator::from_potential(&q).unwrap()
}

/// `1/(x+i)` in frequency form: `−i√(2π) e^{−ξ}`.
fn pole_hat(xi: f64) -> C64 {
    c(0.0, -(2.0 * PI).sqrt()) * (-xi).exp()
}

#[test]
fn x_operator_on_exponential_is_second_order() {
    let errs: Vec<f64> = [0.02, 0.01]
        .iter()
        .map(|&h| {
            let g = LineFreqGrid::new(h, (40.0 / h) as usize).unwrap();
            let f = FreqField::from_fn(g, |xi| c((-xi).exp(), 0.0));
            let exact = FreqField::from_fn(g, |xi| c(0.0, -(-xi).exp()));
            f.x_operator_apply().sup_distance(&exact)
        })
        .collect();
    assert!(errs[0] < 1e-3);
    let ratio = errs[0] / errs[1];
    assert!((3.5..4.5).contains(&ratio), "{ratio}");
}

#[test]
fn x_operator_kills_constants_inside() {
    let g = LineFreqGrid::new(0.1, 20).unwrap();
    let f = FreqField::from_fn(g, |_| c(2.0, -1.0));
    assert!(f.x_operator_apply().values.iter().all(|v| v.norm() < 1e-12));
}

#[test]
fn richardson_flags_coarse_grids() {
    let g = LineFreqGrid::new(0.5, 80).unwrap();
    let f = FreqField::from_fn(g, |xi| c((-4.0 * xi).exp(), 0.0));
    assert!(f.x_operator_checked(1e-4).is_err());
    let g = LineFreqGrid::new(0.001, 10_000).unwrap();
    let f = FreqField::from_fn(g, |xi| c((-4.0 * xi).exp(), 0.0));
    assert!(f.x_operator_checked(1e-4).is_ok());
}

#[test]
fn resolvent_matches_rational_oracle() {
    // (X − z)⁻¹ 1/(x+i) = (f(x) − f(z))/(x − z) = −f(x)/(z+i)
    let z = c(0.4, 1.3);
    let errs: Vec<f64> = [0.04, 0.02]
        .iter()
        .map(|&h| {
            let g = LineFreqGrid::new(h, (40.0 / h) as usize).unwrap();
            let f = FreqField::from_fn(g, pole_hat);
            let w = f.resolvent(z).unwrap();
            let exact = FreqField::from_fn(g, |xi| -pole_hat(xi) / (z + c(0.0, 1.0)));
            w.sup_distance(&exact)
        })
        .collect();
    assert!(errs[0] < 1e-2, "{errs:?}");
    let ratio = errs[0] / errs[1];
    assert!((3.0..5.0).contains(&ratio), "{ratio}");
}

#[test]
fn i_plus_and_cauchy_formula() {
    let g = LineFreqGrid::resolving(0.005, pole_hat).unwrap();
    let f = FreqField::from_fn(g, pole_hat);
    let ip = f.i_plus();
    assert!(rel(ip.value, c(0.0, -2.0 * PI)) < 1e-6, "{:?}", ip);
    let z = c(0.0, 2.0);
    let w = f.resolvent(z).unwrap();
    let val = w.i_plus().value / (2.0 * PI * c(0.0, 1.0));
    assert!(rel(val, c(0.0, -1.0 / 3.0)) < 1e-4, "{val}");
    let zero = FreqField::from_fn(g, |_| ZERO);
    assert_eq!(zero.i_plus().value, ZERO);
}

#[test]
fn chi_pairing_tends_to_i_plus() {
    let g = LineFreqGrid::new(1e-3, 40_000).unwrap();
    let f = FreqField::from_fn(g, pole_hat);
    let target = c(0.0, -2.0 * PI);
    let errs: Vec<f64> = [10.0, 20.0, 40.0].iter().map(|&y| (f.chi_pairing(y) - target).norm()).collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    // ⟨χ_y, 1/(x+i)⟩ = −2πi·y/(y+1)
    assert!(rel(f.chi_pairing(20.0), target * (20.0 / 21.0)) < 1e-5);
}

#[test]
fn hardy_transform_of_the_soliton() {
    // C₊Q₁ = i/(x+i) = √π ρ₀, whose transform is √(2π) e^{−ξ}
    let l = soliton_at(0.0, 128);
    let g = LineFreqGrid::new(0.05, 400).unwrap();
    let f = FreqField::from_hardy(g, &l.q_plus()).unwrap();
    let exact = FreqField::from_fn(g, |xi| c((2.0 * PI).sqrt() * (-xi).exp(), 0.0));
    assert!(f.sup_distance(&exact) < 1e-12);
    assert!(rel(i_plus_hardy(&l.q_plus()).unwrap(), c((2.0 * PI).sqrt() * (2.0 * PI).sqrt(), 0.0)) < 1e-12);
}

#[test]
fn i_plus_in_the_rational_basis() {
    // 1/(x+i) = −i√π ρ₀ at unit scale
    let g = Geometry::line(1.0, 64);
    let f = HardyField::new(g, vec![c(0.0, -PI.sqrt())]).unwrap();
    assert!(rel(i_plus_hardy(&f).unwrap(), c(0.0, -2.0 * PI)) < 1e-14);
    let y = 1e6;
    let direct = f.eval(c(0.0, y)) * (2.0 * PI * y);
    assert!(rel(direct, c(0.0, -2.0 * PI)) < 1e-5);
}

#[test]
fn gerard_at_time_zero_is_cauchy() {
    let l = lopsided(256);
    let sys = GerardSystem::new(&l, &PhiSpec::beta(6.0)).unwrap();
    for z in [c(0.3, 0.5), c(-1.0, 2.0)] {
        let v = sys.evaluate(0.0, z).unwrap();
        assert!(rel(v, l.q_plus().eval(z)) < 1e-10, "{z}");
    }
}

#[test]
fn gerard_soliton_translation() {
    let l = soliton_at(0.0, 256);
    let (t, z) = (0.7, c(0.3, 0.5));
    let v = GerardSystem::new(&l, &PhiSpec::bo()).unwrap().evaluate(t, z).unwrap();
    let expect = c(0.0, 1.0) / (z - t + c(0.0, 1.0));
    assert!(rel(v, expect) < 1e-10, "{v} vs {expect}");
    // φ ≡ 1 generates translation to the left
    let v = GerardSystem::new(&l, &PhiSpec::translation()).unwrap().evaluate(t, z).unwrap();
    let expect = c(0.0, 1.0) / (z + t + c(0.0, 1.0));
    assert!(rel(v, expect) < 1e-10, "{v} vs {expect}");
}

#[test]
fn gerard_rejects_real_z() {
    let l = soliton_at(0.0, 64);
    let sys = GerardSystem::new(&l, &PhiSpec::bo()).unwrap();
    assert!(matches!(sys.evaluate(0.1, c(0.2, 0.0)), Err(Error::Config(_))));
}

#[test]
fn gerard_accepts_box_data() {
    let q = RealField::from_fn(Geometry::periodic_box(40.0, 512), |x| 0.3 * (-(x * x)).exp());
    let line = transfer_to_line(&q, 1.0, 512).unwrap();
    let z = c(0.2, 0.8);
    let v = gerard_solve(&q, &PhiSpec::beta(8.0), 0.0, z).unwrap();
    assert!(rel(v, line.plus(170).eval(z)) < 1e-10);
}

#[test]
fn phi_and_psi() {
    let phi = PhiSpec { poles: vec![(2.0, 3.0)], a: 0.5, b: 1.5 };
    let e = 0.7;
    let h = 1e-5;
    let dphi = (phi.phi(e + h) - phi.phi(e - h)) / (2.0 * h);
    assert!((phi.psi(e) - (phi.phi(e) + e * dphi)).abs() < 1e-9);
}

#[test]
fn commutators_on_the_soliton() {
    let l = soliton_at(0.0, 256);
    let r = commutator_checks(&l, 8.0, 5, 1).unwrap();
    let s = &r.singular_values;
    assert!(s[1] / s[0] < 1e-6, "{s:?}");
    assert!(r.rank_one_residual < 1e-10, "{}", r.rank_one_residual);
    assert!(r.companion_residual < 1e-6, "{}", r.companion_residual);
}

#[test]
fn commutators_vanish_for_zero_potential() {
    let l = LaxOperator::from_potential(&RealField::zeros(Geometry::line(1.0, 64))).unwrap();
    let r = commutator_checks(&l, 8.0, 2, 1).unwrap();
    assert!(r.singular_values[0] < 1e-14);
}

#[test]
fn centroids_of_the_soliton() {
    let l = soliton_at(0.0, 256);
    let v = centroids(&l, Some(6.0)).unwrap();
    assert!(v.cof_p.abs() < 1e-12 && v.cof_e.abs() < 1e-12 && v.cof_beta.unwrap().abs() < 1e-12, "{v:?}");
    // ½∫x²·4/(x²+1)² dx = π
    assert!((v.vof_p - PI).abs() < 1e-10, "{}", v.vof_p);
    let a = 0.8;
    let shifted = centroids(&soliton_at(a, 256), None).unwrap();
    assert!((shifted.cof_p - a * PI).abs() < 1e-10, "{}", shifted.cof_p);
}

#[test]
fn centroids_refuse_the_circle() {
    let l = LaxOperator::from_potential(&RealField::zeros(Geometry::circle(32))).unwrap();
    assert!(matches!(centroids(&l, None), Err(Error::WrongGeometry { .. })));
}

#[test]
fn centroids_agree_between_box_and_line() {
    let f = |x: f64| 0.7 * (-(x - 0.4) * (x - 0.4)).exp() + 0.2 * x * (-(x * x)).exp();
    let lb = LaxOperator::from_potential(&RealField::from_fn(Geometry::periodic_box(30.0, 512), f)).unwrap();
    let ll = LaxOperator::from_potential(&RealField::from_fn(Geometry::line(1.0, 256), f)).unwrap();
    let (b, l) = (centroids(&lb, Some(5.0)).unwrap(), centroids(&ll, Some(5.0)).unwrap());
    assert!((b.cof_p - l.cof_p).abs() < 1e-10);
    // the periodic Hilbert kernel is (1/Λ)cot(πy/Λ) = 1/(πy) − πy/(3Λ²) + …, so on the box Hq′
    // carries the constant −π∫q/(3Λ²) and CofE shifts by half of that times ∫xq
    let q = ll.potential();
    let shift = -PI * q.mean() / (3.0 * 900.0) * 0.5 * q.mul_x().mean();
    assert!((b.cof_e - l.cof_e - shift).abs() < 2e-6, "{} {} {shift}", b.cof_e, l.cof_e);
    assert!((b.vof_p - l.vof_p).abs() < 1e-10);
    // the box projection keeps the whole mean μ = ∫q/Λ in q₊ where the line keeps half of it,
    // so n(box) ≈ n(line) + ½μ(1+n)/ϰ and Cofβ shifts by (μ/2ϰ)∫xq(1 + Re n)
    let n = ll.gauge(5.0).unwrap().m.to_field();
    let xq = q.mul_x();
    let mu = q.mean() / 30.0;
    let shift = mu / 10.0 * (xq.mean() + integrate_pointwise(&[xq.as_field(), &n.map_values(|v| C64::new(v.re, 0.0))]));
    let d = b.cof_beta.unwrap() - l.cof_beta.unwrap();
    assert!((d - shift).abs() < 0.1 * shift.abs(), "{d} vs {shift}");
}

#[test]
fn virial_identities_on_the_soliton() {
    let l = soliton_at(0.0, 256);
    let (kappa, varkappa) = (8.0, 12.0);
    let checks = virial_checks(&l, kappa, varkappa).unwrap();
    for chk in &checks {
        assert!(chk.passes(1e-8), "{chk:?}");
    }
    let x = kappa - 0.5;
    assert!((checks[0].lhs - PI * kappa / (x * x)).abs() < 1e-8);
    let expect = -kappa * PI / (x * x * (varkappa - 0.5));
    assert!((checks[2].lhs - expect).abs() < 1e-8 * expect.abs());
}

#[test]
fn virial_identities_on_asymmetric_data() {
    let l = lopsided(256);
    for chk in virial_checks(&l, 4.0, 7.0).unwrap() {
        assert!(chk.passes(1e-8), "{chk:?}");
    }
}

#[test]
fn cof_beta_expansion() {
    // Cofβ(ϰ) = ϰ⁻¹CofP − ϰ⁻²CofE + O(ϰ⁻³)
    let l = lopsided(256);
    let (p, e) = (cof_p(&l).unwrap(), cof_e(&l).unwrap());
    let errs: Vec<f64> = [100.0, 200.0]
        .iter()
        .map(|&k| (cof_beta(&l, k).unwrap() - p / k + e / (k * k)).abs())
        .collect();
    let ratio = errs[0] / errs[1];
    assert!((7.0..9.0).contains(&ratio), "{errs:?}");
}

#[test]
fn quadratic_fit_is_exact_on_quadratics() {
    let t: Vec<f64> = (0..9).map(|j| 0.1 * j as f64).collect();
    let v: Vec<f64> = t.iter().map(|t| 2.0 - 0.5 * t + 3.0 * t * t).collect();
    let fit = fit_quadratic(&t, &v).unwrap();
    assert!((fit.c0 - 2.0).abs() < 1e-12 && (fit.c1 + 0.5).abs() < 1e-12 && (fit.c2 - 3.0).abs() < 1e-12);
    assert!(fit.residual < 1e-14);
}

#[test]
fn gerard_matches_beta_flow_on_a_gaussian() {
    let q0 = RealField::from_fn(Geometry::line(1.0, 256), |x| 0.3 * (-x * x).exp());
    let pts = [c(0.0, 0.5), c(0.5, 0.5), c(-0.5, 0.5), c(1.0, 1.0), c(-1.0, 0.3)];
    let checks = gerard_vs_flow(&q0, &PhiSpec::beta(8.0), 0.5, &pts, 1e-2).unwrap();
    assert_eq!(checks.len(), 5);
    for ch in checks {
        assert!(ch.rel_err < 1e-10, "{ch:?}");
    }
}

#[test]
fn vofp_is_quadratic_along_the_beta_flow() {
    let q0 = RealField::from_fn(Geometry::line(1.0, 256), |x| 2.0 / (x * x + 1.0));
    let law = vofp_time_law(&q0, 8.0, 1.0, 1e-2, 10).unwrap();
    assert!(law.fit.residual < 1e-8, "{:?}", law.fit);
    for ch in law.checks() {
        assert!(ch.rel_err < 1e-4, "{ch:?}");
    }
}

#[test]
fn vofp_law_on_asymmetric_data() {
    let q0 = RealField::from_fn(Geometry::line(1.0, 256), |x| {
        0.8 / ((x - 0.3) * (x - 0.3) + 1.0) + 0.4 * (-(x + 1.0) * (x + 1.0)).exp()
    });
    let law = vofp_time_law(&q0, 6.0, 1.0, 1e-2, 10).unwrap();
    assert!(law.predicted.1.abs() > 1e-2, "{:?}", law.predicted);
    for ch in law.checks() {
        assert!(ch.rel_err < 1e-4, "{ch:?}");
    }
}

#[test]
fn cofp_moves_at_kappa_dbeta() {
    let q0 = RealField::from_fn(Geometry::line(1.0, 256), |x| 2.0 / (x * x + 1.0));
    let ch = cofp_speed_check(&q0, 8.0, 0.05, 1e-2).unwrap();
    assert!(ch.rel_err < 1e-4, "{ch:?}");
    // soliton closed form: κβ′ = −κπ/(κ−½)²
    assert!((ch.rhs + 8.0 * PI / 56.25).abs() < 1e-6, "{}", ch.rhs);
}
