use super::*;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + b.norm())
}

fn soliton(x: f64) -> C64 {
    c(2.0 / (x * x + 1.0), 0.0)
}

#[test]
fn roundtrip_all_geometries() {
    for g in [Geometry::circle(64), Geometry::periodic_box(40.0, 128), Geometry::line(1.5, 128)] {
        let f = Field::from_fn(g, |x| c((x * 0.3).sin() / (1.0 + x * x), (1.0 + x * x).recip()));
        let back = Field::from_values(g, &f.values());
        for (a, b) in f.coeffs().iter().zip(back.coeffs()) {
            assert!((a - b).norm() < 1e-13, "{g}");
        }
    }
}

#[test]
fn circle_mode_values() {
    let g = Geometry::circle(32);
    let f = Field::mode(g, 3, c(1.0, 0.0));
    for (x, v) in g.grid().iter().zip(f.values()) {
        assert!(close(v, C64::cis(6.0 * PI * x), 1e-13));
    }
}

#[test]
fn box_grid_is_centered() {
    let g = Geometry::periodic_box(10.0, 16);
    let x = g.grid();
    assert_eq!(x[0], -5.0);
    assert!((x[8]).abs() < 1e-15);
    let f = Field::mode(g, 1, c(1.0, 0.0));
    for (x, v) in x.iter().zip(f.values()) {
        assert!(close(v, C64::cis(2.0 * PI * x / 10.0), 1e-13));
    }
}

#[test]
fn line_soliton_coefficients() {
    // 2/(x²+1) = √π (ρ_0 + ρ_{-1}) at unit scale
    let g = Geometry::line(1.0, 64);
    let f = Field::from_fn(g, soliton);
    let sp = PI.sqrt();
    for s in 0..64 {
        let k = g.index(s);
        let expect = if k == 0 || k == -1 { sp } else { 0.0 };
        assert!((f.coeffs()[s] - c(expect, 0.0)).norm() < 1e-13, "k={k}");
    }
    assert!(close(f.integral(), c(2.0 * PI, 0.0), 1e-13));
    assert!(close(f.inner(&f), c(2.0 * PI, 0.0), 1e-13));
}

#[test]
fn line_hardy_part_of_soliton() {
    // C₊(2/(x²+1)) = i/(x+i)
    let g = Geometry::line(1.0, 32);
    let f = Field::from_fn(g, soliton).cplus();
    for (x, v) in g.grid().iter().zip(f.values()) {
        assert!(close(v, c(0.0, 1.0) / c(*x, 1.0), 1e-13));
    }
    let h = f.hardy(16);
    let z = c(0.4, 0.9);
    assert!(close(h.eval(z), c(0.0, 1.0) / (z + c(0.0, 1.0)), 1e-13));
}

#[test]
fn line_derivative_and_hilbert() {
    let g = Geometry::line(1.0, 64);
    let q = Field::from_fn(g, soliton);
    let dq = q.deriv();
    for (x, v) in g.grid().iter().zip(dq.values()) {
        let e = -4.0 * x / (x * x + 1.0).powi(2);
        assert!((v - c(e, 0.0)).norm() < 1e-12);
    }
    // H(2/(x²+1)) = 2x/(x²+1)
    let hq = q.hilbert();
    for (x, v) in g.grid().iter().zip(hq.values()) {
        assert!((v - c(2.0 * x / (x * x + 1.0), 0.0)).norm() < 1e-12);
    }
}

#[test]
fn line_product_and_mul_x() {
    let g = Geometry::line(1.0, 64);
    let q = Field::from_fn(g, soliton);
    let q2 = q.mul_raw(&q);
    for (x, v) in g.grid().iter().zip(q2.values()) {
        assert!((v - soliton(*x) * soliton(*x)).norm() < 1e-12);
    }
    let xq = q.mul_x();
    for (x, v) in g.grid().iter().zip(xq.values()) {
        assert!((v - soliton(*x) * x).norm() < 1e-12);
    }
}

#[test]
fn periodic_derivative_and_hilbert() {
    let g = Geometry::circle(32);
    let f = Field::from_fn(g, |x| c((2.0 * PI * x).cos() + 0.5 * (6.0 * PI * x).sin(), 0.0));
    let d = f.deriv();
    let h = f.hilbert();
    for (x, (dv, hv)) in g.grid().iter().zip(d.values().into_iter().zip(h.values())) {
        let de = -2.0 * PI * (2.0 * PI * x).sin() + 3.0 * PI * (6.0 * PI * x).cos();
        let he = (2.0 * PI * x).sin() - 0.5 * (6.0 * PI * x).cos();
        assert!((dv.re - de).abs() < 1e-11);
        assert!((hv.re - he).abs() < 1e-13);
    }
}

#[test]
fn dealiased_product_matches_direct_convolution() {
    let g = Geometry::circle(32);
    let mut a = Field::zeros(g);
    let mut b = Field::zeros(g);
    for s in 0..32 {
        a.coeffs_mut()[s] = c((s as f64 * 0.7).sin(), (s as f64 * 0.3).cos());
        b.coeffs_mut()[s] = c((s as f64 * 1.1).cos(), (s as f64 * 0.5).sin());
    }
    let a = a.dealias();
    let b = b.dealias();
    let p = a.mul(&b).unwrap();
    let d = direct_convolution(g, a.coeffs(), b.coeffs());
    for (x, y) in p.coeffs().iter().zip(&d) {
        assert!((x - y).norm() < 1e-12);
    }
}

#[test]
fn geometry_mismatch_is_reported() {
    let a = Field::zeros(Geometry::circle(16));
    let b = Field::zeros(Geometry::circle(32));
    assert!(matches!(a.mul(&b), Err(Error::GeometryMismatch(..))));
}

#[test]
fn geometry_json_roundtrip() {
    for g in [Geometry::circle(64), Geometry::periodic_box(40.0, 128), Geometry::line(2.0, 256)] {
        let s = serde_json::to_string(&g).unwrap();
        let back: Geometry = serde_json::from_str(&s).unwrap();
        assert_eq!(g, back);
    }
    assert!(serde_json::from_str::<Geometry>(r#"{"kind":"circle","n":64,"extra":1}"#).is_err());
    assert!(serde_json::from_str::<Geometry>(r#"{"kind":"circle","n":60}"#).is_err());
}

#[test]
fn sobolev_norm_of_mode() {
    let g = Geometry::circle(32);
    let f = Field::mode(g, 2, c(1.0, 0.0));
    let n = f.sobolev_norm(NormSpec::new(1.0, 1.0).unwrap());
    assert!((n - (4.0 * PI + 1.0)).abs() < 1e-12);
    assert!(NormSpec::new(0.0, 0.5).is_err());
}

#[test]
fn line_sobolev_l2_matches_inner() {
    let g = Geometry::line(1.0, 64);
    let q = Field::from_fn(g, |x| c((1.0 + x * x).recip(), x / (1.0 + x * x).powi(2)));
    let n0 = q.sobolev_norm(NormSpec { sigma: 0.0, kappa: 1.0 });
    assert!((n0 - q.l2_norm()).abs() < 1e-12);
}

#[test]
fn rescale_line_and_box() {
    let lam = 2.0;
    for g in [Geometry::periodic_box(40.0, 256), Geometry::line(1.0, 64)] {
        let q = RealField::from_fn(g, |x| 2.0 / (x * x + 1.0));
        let r = q.rescale(lam).unwrap();
        let rg = r.geometry();
        let expect = RealField::from_fn(rg, |x| lam * 2.0 / (lam * lam * x * x + 1.0));
        for (a, b) in r.coeffs().iter().zip(expect.coeffs()) {
            assert!((a - b).norm() < 1e-10, "{g}");
        }
    }
}

#[test]
fn boundary_amplitude_flags_wide_profiles() {
    let g = Geometry::periodic_box(50.0, 256);
    let narrow = Field::from_fn(g, |x| c((-x * x).exp(), 0.0));
    let wide = Field::from_fn(g, soliton);
    assert!(narrow.boundary_amplitude().unwrap() < 1e-8);
    assert!(wide.boundary_amplitude().unwrap() > 1e-8);
    assert!(Field::zeros(Geometry::circle(16)).boundary_amplitude().is_none());
}

fn geom_strategy() -> impl Strategy<Value = Geometry> {
    prop_oneof![
        Just(Geometry::circle(32)),
        Just(Geometry::periodic_box(20.0, 32)),
        Just(Geometry::line(1.3, 32)),
    ]
}

fn field_strategy() -> impl Strategy<Value = Field> {
    (geom_strategy(), prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 32)).prop_map(|(g, v)| {
        Field::from_coeffs(g, v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap()
    })
}

proptest! {
    #[test]
    fn projections_are_complementary(f in field_strategy()) {
        let g = f.geometry();
        let s = &(&f.cplus() + &f.cminus()) - &f;
        let mut dup = f.clone();
        for sl in 0..g.n() {
            let k = g.index(sl);
            // periodic zero mode is counted twice, Nyquist not at all
            dup.coeffs_mut()[sl] = if g.is_periodic() && k == 0 {
                f.coeffs()[sl]
            } else if g.is_periodic() && k == -((g.n() / 2) as i64) {
                -f.coeffs()[sl]
            } else {
                ZERO
            };
        }
        for (a, b) in s.coeffs().iter().zip(dup.coeffs()) {
            prop_assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn conj_is_involution_and_antilinear(f in field_strategy()) {
        let cc = f.conj().conj();
        prop_assert_eq!(cc.coeffs(), f.coeffs());
        let fv = f.values();
        let cv = f.conj().values();
        for (a, b) in fv.iter().zip(&cv) {
            prop_assert!((a.conj() - b).norm() < 1e-12);
        }
    }

    #[test]
    fn real_part_is_real(f in field_strategy()) {
        let r = RealField::from_field(&f);
        prop_assert!(r.is_real(1e-14));
        for v in r.values() {
            prop_assert!(v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn hilbert_squares_to_minus_identity_off_kernel(f in field_strategy()) {
        let g = f.geometry();
        let hh = f.hilbert().hilbert();
        for s in 0..g.n() {
            let k = g.index(s);
            if g.is_periodic() && (k == 0 || k == -((g.n() / 2) as i64)) {
                continue;
            }
            prop_assert!((hh.coeffs()[s] + f.coeffs()[s]).norm() < 1e-13);
        }
    }

    #[test]
    fn parseval(f in field_strategy()) {
        let g = f.geometry();
        let v = f.values();
        let quad: f64 = match g {
            Geometry::Line { .. } => f.angular_values().iter().map(|a| a.norm_sqr()).sum::<f64>() / g.n() as f64,
            _ => v.iter().map(|a| a.norm_sqr()).sum::<f64>() * g.weight() / g.n() as f64,
        };
        prop_assert!((quad - f.inner(&f).re).abs() < 1e-11 * (1.0 + quad));
    }

    #[test]
    fn derivative_is_skew(f in field_strategy(), h in field_strategy()) {
        prop_assume!(f.geometry() == h.geometry());
        let f = f.dealias();
        let h = h.dealias();
        let a = f.inner(&h.deriv());
        let b = f.deriv().inner(&h);
        prop_assert!((a + b).norm() < 1e-10 * (1.0 + a.norm()));
    }
}
