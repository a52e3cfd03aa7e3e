use dipole_gs::angular::{harmonic_projection, Table};
use dipole_gs::sphere_spectra::{
    harmonic_refinement_change, hardy_dipole_constant, mu1_auto, mu1_dipole, mu1_spectrum, sigma_of,
};
use dipole_gs::AngularCoefficient;
use proptest::prelude::*;

fn unit(v: &[f64]) -> Vec<f64> {
    let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / r).collect()
}

/// Random axisymmetric coefficient: a dipole or a tabulated cubic in s = theta . axis.
fn axisymmetric(n: usize) -> impl Strategy<Value = AngularCoefficient> {
    let dir = prop::collection::vec(-1.0f64..1.0, n).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 0.1));
    (dir, prop::collection::vec(-2.0f64..2.0, 4), any::<bool>()).prop_map(move |(d, c, dipole)| {
        let d = unit(&d);
        if dipole {
            AngularCoefficient::dipole(c[0].abs(), d)
        } else {
            AngularCoefficient::AxisymmetricTable(Table::from_fn(d, 8, |s| c[0] + c[1] * s + c[2] * s * s + c[3] * s * s * s))
        }
    })
}

fn dims() -> impl Strategy<Value = usize> {
    3usize..=6
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn shift_covariance((n, h) in dims().prop_flat_map(|n| (Just(n), axisymmetric(n))), c in -5.0f64..5.0) {
        let a = mu1_auto(&h, n).unwrap().mu1;
        let b = mu1_auto(&h.plus_constant(c), n).unwrap().mu1;
        prop_assert!((b - (a - c)).abs() <= 1e-10 * (1.0 + a.abs()), "{a} {b} {c}");
    }

    #[test]
    fn sigma_identity(n in dims(), mu in -0.24f64..40.0) {
        let s = sigma_of(mu, n).unwrap();
        prop_assert!((s * (s + n as f64 - 2.0) - mu).abs() <= 1e-10 * (1.0 + mu.abs()));
    }

    #[test]
    fn refinement_does_not_raise_mu1((n, h) in dims().prop_flat_map(|n| (Just(n), axisymmetric(n)))) {
        let mut prev = f64::INFINITY;
        for m in [8usize, 16, 32, 64] {
            let v = mu1_spectrum(&h, n, m).unwrap().mu1;
            prop_assert!(v <= prev + 1e-11 * (1.0 + v.abs()), "{m}: {v} > {prev}");
            prev = v;
        }
    }
}

#[test]
fn mu1_decreases_in_lambda() {
    for n in [3usize, 4, 5] {
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let v = mu1_dipole(i as f64 * 0.2, n).unwrap();
            assert!(v <= prev, "N={n} step {i}: {v} > {prev}");
            prev = v;
        }
    }
}

/// Dense zonal matrix in normalized Gegenbauer polynomials built from the three-term
/// recurrence, bottom eigenvalue by Sturm bisection.
fn recurrence_mu1(lambda: f64, n: usize, m: usize) -> f64 {
    let alpha = (n as f64 - 2.0) / 2.0;
    let diag: Vec<f64> = (0..m).map(|l| (l * (l + n - 2)) as f64).collect();
    let off: Vec<f64> = (0..m - 1)
        .map(|l| {
            let l = l as f64;
            -lambda * ((l + 1.0) * (l + 2.0 * alpha) / (4.0 * (l + alpha) * (l + alpha + 1.0))).sqrt()
        })
        .collect();
    let below = |x: f64| {
        let mut count = 0;
        let mut q = diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..m {
            let q0 = if q == 0.0 { 1e-300 } else { q };
            q = diag[i] - x - off[i - 1] * off[i - 1] / q0;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    let (mut lo, mut hi) = (-lambda.abs() - 1.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn dipole_matches_recurrence_matrix() {
    for n in [3usize, 4, 5, 6] {
        for lambda in [0.05, 0.5, 2.0, 8.0] {
            let a = mu1_dipole(lambda, n).unwrap();
            let b = recurrence_mu1(lambda, n, 60);
            assert!((a - b).abs() < 1e-10, "N={n} lambda={lambda}: {a} vs {b}");
        }
    }
}

#[test]
fn small_dipole_second_order() {
    for n in [3usize, 4, 5] {
        for lambda in [0.01, 0.05, 0.1] {
            let v = mu1_dipole(lambda, n).unwrap();
            let pert = -lambda * lambda / (n * (n - 1)) as f64;
            assert!((v - pert).abs() <= 0.01 * lambda * lambda, "N={n}: {v} vs {pert}");
        }
    }
}

#[test]
fn harmonic_backend_rotation_invariance() {
    let f = |x: &[f64]| 0.8 * x[0] * x[1] + 0.5 * x[2] - 0.3 * x[0] * x[0] + 0.2 * x[1] * x[2] * x[2];
    let h = harmonic_projection(4, f);
    let base = mu1_auto(&h, 3).unwrap().mu1;
    let tol = harmonic_refinement_change(&h).unwrap() + 1e-8;
    let (c, s) = (0.3f64.cos(), 0.3f64.sin());
    let (c2, s2) = (1.1f64.cos(), 1.1f64.sin());
    let rx = [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]];
    let rz = [[c2, -s2, 0.0], [s2, c2, 0.0], [0.0, 0.0, 1.0]];
    let a: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| (0..3).map(|k| rz[i][k] * rx[k][j]).sum()).collect()).collect();
    let rot = mu1_auto(&h.rotated(&a), 3).unwrap().mu1;
    assert!((rot - base).abs() <= tol, "{base} vs {rot}, tol {tol}");
    // still the first eigenvalue of the expansion, so it must agree with a shifted copy
    let shifted = mu1_auto(&h.rotated(&a).plus_constant(0.7), 3).unwrap().mu1;
    assert!((shifted - (rot - 0.7)).abs() < 1e-10);
}

#[test]
fn hardy_constant_is_a_root() {
    for n in [3usize, 4, 5] {
        let hc = hardy_dipole_constant(n, 1e-10).unwrap();
        assert!(hc.value < 4.0 / ((n as f64 - 2.0).powi(2)));
        assert!(hc.trial_lower_bound <= hc.value);
        let k = (n as f64 - 2.0) / 2.0;
        let mu = mu1_dipole(1.0 / hc.value, n).unwrap();
        assert!((mu + k * k).abs() < 1e-8, "N={n}: {mu}");
    }
}
