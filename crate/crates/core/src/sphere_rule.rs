//! Quadrature on S^{N-1} for integrands that depend on a point of the sphere only
//! through its projection onto a low-dimensional subspace.

use crate::special::{sphere_area, GaussRule};
use std::f64::consts::PI;

#[derive(Clone, Debug)]
pub struct SphereRule {
    pub n: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

/// Orthonormal frame spanned by the given directions (Gram-Schmidt, dependent
/// vectors dropped).
pub fn frame(n: usize, dirs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for d in dirs {
        let mut v = d.clone();
        for f in &out {
            let c: f64 = v.iter().zip(f).map(|(a, b)| a * b).sum();
            for (x, y) in v.iter_mut().zip(f) {
                *x -= c * y;
            }
        }
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = d.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
        if nv > 1e-10 * scale {
            out.push(v.into_iter().map(|x| x / nv).collect());
        }
        if out.len() == n {
            break;
        }
    }
    out
}

/// Completes an orthonormal set to a basis of R^n.
pub fn complete_frame(n: usize, partial: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut dirs: Vec<Vec<f64>> = partial.to_vec();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        dirs.push(e);
    }
    frame(n, &dirs)
}

fn combine(frame: &[Vec<f64>], coords: &[f64]) -> Vec<f64> {
    let n = frame[0].len();
    let mut x = vec![0.0; n];
    for (f, c) in frame.iter().zip(coords) {
        for i in 0..n {
            x[i] += c * f[i];
        }
    }
    x
}

impl SphereRule {
    /// Rule on S^{N-1} exact in the limit for integrands that depend only on the
    /// projections onto span(dirs). `order` controls the points per coordinate.
    pub fn adapted(n: usize, dirs: &[Vec<f64>], order: usize) -> SphereRule {
        let fr = frame(n, dirs);
        let m = fr.len();
        let full = complete_frame(n, &fr);
        let area = sphere_area(n);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        if m == 0 {
            nodes.push(full[0].clone());
            weights.push(area);
        } else if n == 3 && m >= 2 {
            s2_rule(order, &mut |c, w| {
                nodes.push(combine(&full, &c));
                weights.push(w);
            });
        } else if m == 1 {
            // s = theta . f1 with weight (1-s^2)^{(N-3)/2}
            let g = crate::special::OrthoFamily::gegenbauer((n as f64 - 2.0) / 2.0, order)
                .gauss(order);
            let side = sphere_area(n - 1);
            for (s, w) in g.nodes.iter().zip(&g.weights) {
                let c = [*s, (1.0 - s * s).max(0.0).sqrt()];
                nodes.push(combine(&full, &c));
                weights.push(w * side);
            }
        } else {
            // (theta_1..theta_m) = rho * omega in the m-ball, density
            // |S^{N-m-1}| (1-rho^2)^{(N-m-2)/2} rho^{m-1} d rho d omega
            let nm = n - m;
            let ball_w = sphere_area(nm);
            let p = (m as f64 - 2.0) / 2.0;
            let q = (nm as f64 - 2.0) / 2.0;
            let gu = GaussRule::jacobi_unit(p, q, order);
            let mut omega: Vec<(Vec<f64>, f64)> = Vec::new();
            if m == 2 {
                let k = 2 * order;
                for j in 0..k {
                    let b = 2.0 * PI * (j as f64 + 0.5) / k as f64;
                    omega.push((vec![b.cos(), b.sin()], 2.0 * PI / k as f64));
                }
            } else {
                s2_rule(order, &mut |c, w| omega.push((c.to_vec(), w)));
            }
            for (u, wu) in gu.nodes.iter().zip(&gu.weights) {
                let rho = u.sqrt();
                let rest = (1.0 - u).max(0.0).sqrt();
                for (om, wo) in &omega {
                    let mut c: Vec<f64> = om.iter().map(|x| rho * x).collect();
                    c.push(rest);
                    nodes.push(combine(&full, &c));
                    weights.push(0.5 * wu * wo * ball_w);
                }
            }
        }
        SphereRule { n, nodes, weights }
    }

    /// Full product rule on S^2 (N = 3 only).
    pub fn s2(order: usize) -> SphereRule {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        s2_rule(order, &mut |c, w| {
            nodes.push(c.to_vec());
            weights.push(w);
        });
        SphereRule { n: 3, nodes, weights }
    }

    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(x))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn s2_rule(order: usize, sink: &mut dyn FnMut([f64; 3], f64)) {
    let g = GaussRule::legendre(order);
    let k = 2 * order;
    for (z, wz) in g.nodes.iter().zip(&g.weights) {
        let s = (1.0 - z * z).max(0.0).sqrt();
        for j in 0..k {
            let ph = 2.0 * PI * (j as f64 + 0.5) / k as f64;
            sink([s * ph.cos(), s * ph.sin(), *z], wz * 2.0 * PI / k as f64);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize, i: usize) -> Vec<f64> {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        e
    }

    #[test]
    fn areas_for_every_rank() {
        for n in 3..=6 {
            let dirs = vec![unit(n, 0), vec![0.3; n], unit(n, n - 1)];
            for m in 0..=3usize.min(dirs.len()) {
                let r = SphereRule::adapted(n, &dirs[..m], 12);
                let s: f64 = r.weights.iter().sum();
                assert!((s - sphere_area(n)).abs() < 1e-10, "n={n} m={m}");
            }
        }
    }

    #[test]
    fn second_moments() {
        // int theta_1^2 = |S^{N-1}| / N, int theta_1 theta_2 = 0
        for n in 3..=6 {
            let d1 = unit(n, 0);
            let d2: Vec<f64> = (0..n).map(|i| if i == 1 { 0.6 } else if i == 2 { 0.8 } else { 0.0 }).collect();
            for m in 1..=2 {
                let dirs = vec![d1.clone(), d2.clone()];
                let r = SphereRule::adapted(n, &dirs[..m], 16);
                let a = r.integrate(|t| t[0] * t[0]);
                assert!((a - sphere_area(n) / n as f64).abs() < 1e-10);
                if m == 2 {
                    let b = r.integrate(|t| t[0] * (0.6 * t[1] + 0.8 * t[2]).powi(3));
                    assert!(b.abs() < 1e-12);
                    let c = r.integrate(|t| (0.6 * t[1] + 0.8 * t[2]).powi(2) * t[0].powi(2));
                    // E[x^2 y^2] = 1/(N(N+2)) times area
                    assert!((c - sphere_area(n) / (n * (n + 2)) as f64).abs() < 1e-10);
                }
            }
        }
    }
}
