//! Real spherical harmonics on S^2.

use std::f64::consts::PI;

pub fn count(l_max: usize) -> usize {
    (l_max + 1) * (l_max + 1)
}

/// Flat index of Y_{l,m}, m in [-l, l]; negative m are the sine harmonics.
pub fn index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

pub fn degree_of(idx: usize) -> usize {
    (idx as f64).sqrt().floor() as usize
}

/// All orthonormal real harmonics up to degree l_max at the unit vector x.
pub fn eval_all(l_max: usize, x: &[f64], out: &mut [f64]) {
    let z = x[2].clamp(-1.0, 1.0);
    let s = (x[0] * x[0] + x[1] * x[1]).sqrt();
    let phi = x[1].atan2(x[0]);
    let lm = l_max + 1;
    // normalized associated Legendre, p[l][m]
    let mut p = vec![0.0; lm * lm];
    let at = |l: usize, m: usize| l * lm + m;
    p[at(0, 0)] = 1.0 / (4.0 * PI).sqrt();
    for m in 1..lm {
        let mf = m as f64;
        p[at(m, m)] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * p[at(m - 1, m - 1)];
    }
    for m in 0..lm {
        if m + 1 < lm {
            p[at(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * z * p[at(m, m)];
        }
        for l in m + 2..lm {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            p[at(l, m)] = a * (z * p[at(l - 1, m)] - b * p[at(l - 2, m)]);
        }
    }
    let r2 = 2f64.sqrt();
    for l in 0..lm {
        out[index(l, 0)] = p[at(l, 0)];
        for m in 1..=l {
            let mp = (m as f64) * phi;
            out[index(l, m as i64)] = r2 * p[at(l, m)] * mp.cos();
            out[index(l, -(m as i64))] = r2 * p[at(l, m)] * mp.sin();
        }
    }
}

pub fn eval_vec(l_max: usize, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; count(l_max)];
    eval_all(l_max, x, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere_rule::SphereRule;

    #[test]
    fn orthonormal_up_to_degree_six() {
        let l = 6;
        let rule = SphereRule::s2(16);
        let c = count(l);
        let mut gram = vec![0.0; c * c];
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let y = eval_vec(l, x);
            for i in 0..c {
                for j in 0..c {
                    gram[i * c + j] += w * y[i] * y[j];
                }
            }
        }
        for i in 0..c {
            for j in 0..c {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((gram[i * c + j] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degree_one_is_linear() {
        let x = [0.48, -0.6, 0.64];
        let y = eval_vec(1, &x);
        let k = (3.0 / (4.0 * PI)).sqrt();
        assert!((y[index(1, 0)] - k * x[2]).abs() < 1e-14);
        assert!((y[index(1, 1)] - k * x[0]).abs() < 1e-14);
        assert!((y[index(1, -1)] - k * x[1]).abs() < 1e-14);
    }
}
