use dipole_gs::one_pole::{
    gradient_decay_fit_solved, kelvin_transform, rescale_profile, solve_one_pole, sobolev_constant, Discretization,
    GroundStateProfile,
};
use dipole_gs::profile_io::{parse_profile, traces_csv, write_profile};
use dipole_gs::special::sobolev_closed_form;
use dipole_gs::sphere_spectra::hardy_dipole_constant;
use dipole_gs::AngularCoefficient;

fn e(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

fn dipole4(frac: f64) -> GroundStateProfile {
    let hc = hardy_dipole_constant(4, 1e-10).unwrap();
    let h = AngularCoefficient::dipole(frac / hc.value, e(4, 3));
    solve_one_pole(&h, 4, &Discretization::default()).unwrap()
}

#[test]
fn constant_coefficient_matches_hardy_sobolev_closed_form() {
    // for h = c the extremal is radial and S(c) = S (1 - c/k^2)^{(N-1)/N}
    for (n, c) in [(4usize, 0.5f64), (3, 0.1), (5, 1.0)] {
        let p = solve_one_pole(&AngularCoefficient::constant(n, c), n, &Discretization::default()).unwrap();
        let k = (n as f64 - 2.0) / 2.0;
        let nf = n as f64;
        let exact = sobolev_closed_form(n) * (1.0 - c / (k * k)).powf((nf - 1.0) / nf);
        assert!((p.level - exact).abs() < 5e-3 * exact, "N={n} c={c}: {} vs {exact}", p.level);
        assert!((p.level - exact).abs() <= 3.0 * p.disc_error + 1e-6 * exact, "N={n}: error bar {}", p.disc_error);
    }
}

#[test]
fn repulsive_constant_is_not_attained() {
    let n = 4;
    let p = solve_one_pole(&AngularCoefficient::constant(n, -1.0), n, &Discretization::default()).unwrap();
    let s = sobolev_constant(n);
    assert!(!p.attained);
    assert!((p.level - s).abs() < 1e-3 * s, "{} vs {s}", p.level);
}

#[test]
fn profile_invariants_and_round_trip() {
    let p = dipole4(0.4);
    assert!(p.attained);
    assert!(p.c0 > 0.0 && p.c_inf > 0.0);
    assert!(p.el_residual < 1e-6);
    assert!(p.history.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs()), "quotient increased");
    for j in 0..p.nodes {
        assert!(p.coeff(j, 0) >= 0.0, "negative ground mode at node {j}");
    }
    let text = write_profile(&p);
    let q = parse_profile(&text).unwrap();
    assert_eq!(q, p);
    assert_eq!(write_profile(&q), text);
    let csv = traces_csv(&p);
    assert_eq!(csv.lines().count(), p.nodes + 1);
}

#[test]
fn level_independent_of_direction() {
    let hc = hardy_dipole_constant(4, 1e-10).unwrap();
    let lam = 0.3 / hc.value;
    let a = solve_one_pole(&AngularCoefficient::dipole(lam, e(4, 3)), 4, &Discretization::default()).unwrap();
    let d = vec![0.5, -0.5, 0.5, 0.5];
    let b = solve_one_pole(&AngularCoefficient::dipole(lam, d), 4, &Discretization::default()).unwrap();
    assert!((a.level - b.level).abs() < 1e-6, "{} vs {}", a.level, b.level);
}

#[test]
fn rescaling_and_inversion() {
    let p = dipole4(0.3);
    assert_eq!(rescale_profile(&p, 1.0).unwrap(), p);
    let q = rescale_profile(&p, 1e-3).unwrap();
    assert_eq!(q.coeffs, p.coeffs);
    assert!((q.t_start - (p.t_start + 1e-3f64.ln())).abs() < 1e-12);
    let back = rescale_profile(&q, 1e3).unwrap();
    assert!((back.c0 - p.c0).abs() < 1e-10 * p.c0);
    assert!(rescale_profile(&p, 1e-20).is_err());
    let k = kelvin_transform(&p);
    assert_eq!(k.c0, p.c_inf);
    assert_eq!(k.c_inf, p.c0);
    assert_eq!(kelvin_transform(&k).coeffs, p.coeffs);
}

#[test]
fn gradient_decay_first_branch() {
    let p = dipole4(0.2);
    let g = gradient_decay_fit_solved(&p, 0.5).unwrap();
    assert!(g.pass, "{g:?}");
    assert!(gradient_decay_fit_solved(&p, 1.0).is_err());
}
