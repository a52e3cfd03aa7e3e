use dipole_gs::conditions::{check_existence_dipoles, Dipole, Tolerances};
use dipole_gs::quadform::{
    evaluate_quadratic_form, ps_threshold, sample, Assembly, AxisMesh, Domain, MeshSpec, Pole, SingularConfiguration,
};
use dipole_gs::special::critical_exponent;
use dipole_gs::AngularCoefficient;
use proptest::prelude::*;

fn coarse() -> MeshSpec {
    MeshSpec { h0: 0.2, levels: 6, ratio: 0.7, growth: 0.3, box_factor: 10.0, refine: 0 }
}

fn two_poles(sep: f64) -> SingularConfiguration {
    SingularConfiguration {
        n: 4,
        poles: vec![
            Pole { a: vec![0.0, 0.0, 0.0, -sep / 2.0], h: AngularCoefficient::dipole(0.8, vec![0.0, 0.0, 0.0, 1.0]) },
            Pole { a: vec![0.0, 0.0, 0.0, sep / 2.0], h: AngularCoefficient::constant(4, 0.3) },
        ],
        domain: Domain::AllSpace,
    }
}

fn bump(x: &[f64], c: &[f64]) -> f64 {
    let r2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
    (-r2 / 4.0).exp() * (1.0 + 0.3 * (x[3] - c[3]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn translation_invariance(v in prop::collection::vec(-5.0f64..5.0, 4)) {
        let cfg = two_poles(3.0);
        let moved = cfg.translated(&v);
        let c0 = vec![0.0; 4];
        let m0 = AxisMesh::build(&cfg, &coarse()).unwrap();
        let m1 = AxisMesh::build(&moved, &coarse()).unwrap();
        let q0 = evaluate_quadratic_form(&cfg, &sample(&m0, |x| bump(x, &c0))).unwrap();
        let q1 = evaluate_quadratic_form(&moved, &sample(&m1, |x| bump(x, &v))).unwrap();
        prop_assert!((q0.q - q1.q).abs() <= 1e-9 * q0.gradient.abs(), "{} vs {}", q0.q, q1.q);
    }
}

#[test]
fn scaling_covariance() {
    let n = 4;
    let mu = 2.0;
    let cfg = two_poles(3.0);
    let mut big = cfg.clone();
    for p in &mut big.poles {
        for x in &mut p.a {
            *x *= mu;
        }
    }
    let spec = coarse();
    let big_spec = MeshSpec { h0: spec.h0 * mu, ..spec.clone() };
    let c = vec![0.0; n];
    let a0 = Assembly::new(&cfg, AxisMesh::build(&cfg, &spec).unwrap()).unwrap();
    let a1 = Assembly::new(&big, AxisMesh::build(&big, &big_spec).unwrap()).unwrap();
    let u0 = sample(&a0.mesh, |x| bump(x, &c));
    let scale = mu.powf(-(n as f64 - 2.0) / 2.0);
    let u1 = sample(&a1.mesh, |x| {
        let y: Vec<f64> = x.iter().map(|v| v / mu).collect();
        scale * bump(&y, &c)
    });
    let q0 = a0.evaluate(&u0.values);
    let q1 = a1.evaluate(&u1.values);
    assert!((q0.q - q1.q).abs() <= 1e-9 * q0.gradient, "{} vs {}", q0.q, q1.q);
    let p = critical_exponent(n);
    let (m0, _) = a0.critical(&u0.values, p, false);
    let (m1, _) = a1.critical(&u1.values, p, false);
    assert!((m0 - m1).abs() <= 1e-9 * m0);
    let r0 = q0.q / m0.powf(2.0 / p);
    let r1 = q1.q / m1.powf(2.0 / p);
    assert!((r0 - r1).abs() <= 1e-9 * r0.abs());
}

#[test]
fn threshold_is_the_smallest_escape_level() {
    // S_multi^{1 - N/2} min(...)^{N/2} / N with N = 4
    let t = ps_threshold(5.0, &[6.0, 7.0], Some(8.0), 9.0, 4).unwrap();
    assert!((t - 36.0 / 20.0).abs() < 1e-14);
    assert!(ps_threshold(5.0, &[-1.0], None, 9.0, 4).is_err());
}

fn rotate(r: &[[f64; 4]; 4], v: &[f64]) -> Vec<f64> {
    (0..4).map(|i| (0..4).map(|j| r[i][j] * v[j]).sum()).collect()
}

#[test]
fn dipole_verdict_rigid_motion_and_relabeling() {
    let ds = vec![
        Dipole { lambda: 1.0, d: vec![0.0, 0.0, 0.0, 1.0], a: vec![0.0, 0.0, 0.0, -2.0] },
        Dipole { lambda: 1.2, d: vec![0.0, 0.0, 0.0, -1.0], a: vec![0.0, 0.0, 0.0, 2.0] },
    ];
    let hardy = 0.26386302;
    let tol = Tolerances::default();
    let base = check_existence_dipoles(4, &ds, Some(1), hardy, None, &tol).unwrap();
    let (c, s) = (0.6, 0.8);
    let r = [[c, 0.0, 0.0, -s], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [s, 0.0, 0.0, c]];
    let moved: Vec<Dipole> = ds
        .iter()
        .map(|p| Dipole { lambda: p.lambda, d: rotate(&r, &p.d), a: rotate(&r, &p.a).iter().map(|x| x + 0.5).collect() })
        .collect();
    let v1 = check_existence_dipoles(4, &moved, Some(1), hardy, None, &tol).unwrap();
    let swapped = vec![ds[1].clone(), ds[0].clone()];
    let v2 = check_existence_dipoles(4, &swapped, Some(0), hardy, None, &tol).unwrap();
    for v in [&v1, &v2] {
        assert_eq!(v.overall, base.overall);
        for e in &base.entries {
            let o = v.entry(&e.id).unwrap_or_else(|| panic!("missing {}", e.id));
            assert_eq!(o.status, e.status, "{}", e.id);
            if e.margin.is_finite() {
                assert!((o.margin - e.margin).abs() <= 1e-9 * (1.0 + e.margin.abs()), "{}: {} vs {}", e.id, o.margin, e.margin);
            }
        }
    }
}
