use dipole_gs::polarization::{polarization_identities, polarize, MirrorGrid};
use dipole_gs::Error;
use proptest::prelude::*;

fn unit(v: &[f64]) -> Vec<f64> {
    let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / r).collect()
}

fn grid(n: usize, d: &[f64], values: &[f64]) -> MirrorGrid {
    let mut g = MirrorGrid::new(n, unit(d), 0.3, 3, 5).unwrap();
    for (v, x) in g.values.iter_mut().zip(values.iter().cycle()) {
        *v = *x;
    }
    g
}

fn direction(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n).prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 0.05)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn preserves_every_lp_norm(d in direction(3), vals in prop::collection::vec(0.0f64..1.0, 64..400), p in 1.0f64..7.0) {
        let g = grid(3, &d, &vals);
        let pd = polarize(&g).unwrap();
        let a = g.lp_norm_pow(p);
        let b = pd.lp_norm_pow(p);
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn idempotent_and_symmetric(d in direction(3), vals in prop::collection::vec(0.0f64..1.0, 64..400)) {
        let g = grid(3, &d, &vals);
        let once = polarize(&g).unwrap();
        prop_assert_eq!(&polarize(&once).unwrap().values, &once.values);
        let mut mirrored = g.clone();
        for id in 0..g.len() {
            mirrored.values[id] = g.values[g.pair[id]];
        }
        prop_assert_eq!(&polarize(&mirrored).unwrap().values, &once.values);
    }

    #[test]
    fn dipole_inequalities_and_quotient(d in direction(3), vals in prop::collection::vec(0.0f64..1.0, 64..400), lambda in 0.0f64..2.0) {
        let g = grid(3, &d, &vals);
        let r = polarization_identities(&g, lambda).unwrap();
        prop_assert!(r.critical_norm_gap <= 1e-12);
        prop_assert!(r.l2_norm_gap <= 1e-12);
        prop_assert!(r.gradient_gap.unwrap() <= 1e-12, "{:?}", r.gradient_gap);
        prop_assert!(r.nodal_gradient_change <= 1e-12);
        prop_assert!(r.dipole_gain >= -1e-12);
        prop_assert!(r.half_space >= -1e-12);
        prop_assert!(r.quotient_after <= r.quotient_before + 1e-10);
    }

    #[test]
    fn higher_dimensions_keep_the_nodal_checks(d in direction(4), vals in prop::collection::vec(0.0f64..1.0, 64..400)) {
        let g = grid(4, &d, &vals);
        let r = polarization_identities(&g, 0.5).unwrap();
        prop_assert!(r.gradient_gap.is_none());
        prop_assert!(r.critical_norm_gap <= 1e-12);
        prop_assert!(r.nodal_gradient_change <= 1e-12);
        prop_assert!(r.dipole_gain >= -1e-12);
    }
}

#[test]
fn already_polarized_field_is_unchanged() {
    let g = MirrorGrid::new(3, unit(&[0.0, 0.6, 0.8]), 0.25, 4, 6).unwrap();
    let d = g.d.clone();
    // increasing along d, so u >= u o sigma on the half-space
    let g = g.with_values(|x| (1.0 + x.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>()).max(0.0));
    assert_eq!(polarize(&g).unwrap().values, g.values);
}

#[test]
fn support_below_the_hyperplane_moves_across() {
    let g = MirrorGrid::new(3, vec![0.0, 0.0, 1.0], 0.2, 5, 6).unwrap();
    let g = g.with_values(|x| if x[2] < 0.0 { (1.0 - x[0] * x[0] - x[2] * x[2]).max(0.0) } else { 0.0 });
    // direct nodal sum of (x.d)/|x|^3 u^2 with weights h^3
    let mut direct = 0.0;
    for id in 0..g.len() {
        let x = g.point(id);
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        direct += x[2] / r.powi(3) * g.values[id].powi(2) * 0.2f64.powi(3);
    }
    assert!(direct < 0.0);
    let r = polarization_identities(&g, 1.0).unwrap();
    // u_d = u o sigma, and the weight is odd under sigma
    assert!((r.dipole_gain + 2.0 * direct).abs() < 1e-12 * direct.abs(), "{} vs {}", r.dipole_gain, -2.0 * direct);
}

#[test]
fn negative_values_rejected() {
    let mut g = MirrorGrid::new(3, vec![1.0, 0.0, 0.0], 0.5, 2, 3).unwrap();
    g.values[4] = -1.0;
    assert!(polarize(&g).is_err());
    g.values[4] = 0.0;
    g.pair[0] = 1;
    assert!(matches!(polarize(&g), Err(Error::AsymmetricGrid)));
}

#[test]
fn non_unit_direction_rejected() {
    assert!(matches!(MirrorGrid::new(3, vec![0.0, 0.0, 2.0], 0.5, 2, 3), Err(Error::NonUnitDirection(_))));
}
