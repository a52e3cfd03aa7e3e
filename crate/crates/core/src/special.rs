//! Special functions, orthogonal polynomial families and Gauss rules.

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::{gamma, ln_gamma};
use std::f64::consts::PI;

/// Surface area of the unit sphere in R^dim (dimension of the sphere is dim - 1).
pub fn sphere_area(dim: usize) -> f64 {
    let d = dim as f64;
    2.0 * PI.powf(d / 2.0) / gamma(d / 2.0)
}

/// Volume of the unit ball in R^dim.
pub fn ball_volume(dim: usize) -> f64 {
    sphere_area(dim) / dim as f64
}

/// Critical Sobolev exponent 2N/(N-2).
pub fn critical_exponent(n: usize) -> f64 {
    2.0 * n as f64 / (n as f64 - 2.0)
}

/// ((N-2)/2)^2, the Hardy threshold.
pub fn hardy_floor(n: usize) -> f64 {
    let k = (n as f64 - 2.0) / 2.0;
    k * k
}

/// Closed form of the best Sobolev constant, used only for cross-checks.
pub fn sobolev_closed_form(n: usize) -> f64 {
    let d = n as f64;
    PI * d * (d - 2.0) * (gamma(d / 2.0) / gamma(d)).powf(2.0 / d)
}

/// Three-term recurrence of an orthonormal polynomial family:
/// x p_k = b_{k+1} p_{k+1} + a_k p_k + b_k p_{k-1}, with p_0 = 1/sqrt(mu0).
#[derive(Clone, Debug)]
pub struct OrthoFamily {
    pub a: Vec<f64>,
    /// b[k] couples p_{k-1} and p_k; b[0] is unused.
    pub b: Vec<f64>,
    pub mu0: f64,
}

impl OrthoFamily {
    /// Jacobi polynomials for the weight (1-x)^alpha (1+x)^beta on [-1, 1].
    pub fn jacobi(alpha: f64, beta: f64, len: usize) -> Self {
        let ab = alpha + beta;
        let mut a = vec![0.0; len];
        let mut b = vec![0.0; len];
        for k in 0..len {
            let kf = k as f64;
            let s = 2.0 * kf + ab;
            a[k] = if k == 0 {
                (beta - alpha) / (ab + 2.0)
            } else {
                (beta * beta - alpha * alpha) / (s * (s + 2.0))
            };
            if k >= 1 {
                b[k] = if k == 1 {
                    (4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))).sqrt()
                } else {
                    (4.0 * kf * (kf + alpha) * (kf + beta) * (kf + ab)
                        / (s * s * (s + 1.0) * (s - 1.0)))
                        .sqrt()
                };
            }
        }
        let ln_mu0 = (ab + 1.0) * 2f64.ln() + ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0)
            - ln_gamma(ab + 2.0);
        OrthoFamily { a, b, mu0: ln_mu0.exp() }
    }

    /// Gegenbauer polynomials of parameter lambda: weight (1-x^2)^(lambda - 1/2).
    pub fn gegenbauer(lambda: f64, len: usize) -> Self {
        Self::jacobi(lambda - 0.5, lambda - 0.5, len)
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Values p_0(x) .. p_{m-1}(x), written into out.
    pub fn eval_into(&self, x: f64, m: usize, out: &mut [f64]) {
        debug_assert!(m <= self.len() && out.len() >= m);
        if m == 0 {
            return;
        }
        out[0] = 1.0 / self.mu0.sqrt();
        if m == 1 {
            return;
        }
        out[1] = (x - self.a[0]) * out[0] / self.b[1];
        for k in 1..m - 1 {
            out[k + 1] = ((x - self.a[k]) * out[k] - self.b[k] * out[k - 1]) / self.b[k + 1];
        }
    }

    pub fn eval(&self, x: f64, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; m];
        self.eval_into(x, m, &mut out);
        out
    }

    /// Gauss rule with n nodes (Golub-Welsch).
    pub fn gauss(&self, n: usize) -> GaussRule {
        assert!(n >= 1 && n <= self.len());
        let mut jm = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            jm[(k, k)] = self.a[k];
            if k + 1 < n {
                jm[(k, k + 1)] = self.b[k + 1];
                jm[(k + 1, k)] = self.b[k + 1];
            }
        }
        let eig = SymmetricEigen::new(jm);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], self.mu0 * v0 * v0)
            })
            .collect();
        pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
        GaussRule {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn legendre(n: usize) -> Self {
        OrthoFamily::jacobi(0.0, 0.0, n).gauss(n)
    }

    /// Gauss-Jacobi rule mapped to [0, 1] for the weight u^p (1-u)^q.
    pub fn jacobi_unit(p: f64, q: f64, n: usize) -> Self {
        let g = OrthoFamily::jacobi(q, p, n).gauss(n);
        let scale = 0.5f64.powf(p + q + 1.0);
        GaussRule {
            nodes: g.nodes.iter().map(|x| 0.5 * (x + 1.0)).collect(),
            weights: g.weights.iter().map(|w| w * scale).collect(),
        }
    }

    /// Legendre rule mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 0.5 * (b - a);
        let m = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(self.weights.iter())
            .map(move |(x, w)| (m + h * x, h * w))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Composite Gauss-Legendre quadrature of f over [a, b] with the given breakpoints.
pub fn composite_gauss<F: FnMut(f64) -> f64>(breaks: &[f64], rule: &GaussRule, mut f: F) -> f64 {
    let mut total = 0.0;
    for w in breaks.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        for (x, wt) in rule.mapped(w[0], w[1]) {
            total += wt * f(x);
        }
    }
    total
}

/// Uniform breakpoints between a and b with panels of width at most h.
pub fn panels(a: f64, b: f64, h: f64) -> Vec<f64> {
    let n = (((b - a) / h).ceil() as usize).max(1);
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

/// C-infinity step: 0 for x <= 0, 1 for x >= 1.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let f = |y: f64| (-1.0 / y).exp();
        let a = f(x);
        let b = f(1.0 - x);
        a / (a + b)
    }
}

/// Smooth bump equal to 1 for r <= r0 and 0 for r >= r1.
pub fn smooth_cutoff(r: f64, r0: f64, r1: f64) -> f64 {
    1.0 - smooth_step((r - r0) / (r1 - r0))
}

/// Derivative of smooth_cutoff with respect to r.
pub fn smooth_cutoff_deriv(r: f64, r0: f64, r1: f64) -> f64 {
    let x = (r - r0) / (r1 - r0);
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let f = |y: f64| (-1.0 / y).exp();
    let df = |y: f64| (-1.0 / y).exp() / (y * y);
    let a = f(x);
    let b = f(1.0 - x);
    let da = df(x);
    let db = -df(1.0 - x);
    let s = a + b;
    let dstep = (da * s - a * (da + db)) / (s * s);
    -dstep / (r1 - r0)
}

/// Least-squares fit of y = sum_j c_j g_j(x); returns coefficients and RMS residual.
pub fn least_squares(basis: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
    let m = basis.len();
    let n = y.len();
    let a = DMatrix::from_fn(n, m, |i, j| basis[j][i]);
    let b = nalgebra::DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let c = svd.solve(&b, 1e-300).expect("svd solve");
    let r = &a * &c - &b;
    let rms = (r.norm_squared() / n as f64).sqrt();
    (c.iter().copied().collect(), rms)
}

/// Least-squares slope and intercept of y against x, with RMS residual.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rms = (x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - icpt - slope * a).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, icpt, rms)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let g = GaussRule::legendre(10);
        let s: f64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn gegenbauer_family_is_orthonormal() {
        let fam = OrthoFamily::gegenbauer(1.5, 40);
        let g = fam.gauss(40);
        let mut gram = vec![vec![0.0; 12]; 12];
        for (x, w) in g.nodes.iter().zip(&g.weights) {
            let p = fam.eval(*x, 12);
            for i in 0..12 {
                for j in 0..12 {
                    gram[i][j] += w * p[i] * p[j];
                }
            }
        }
        for i in 0..12 {
            for j in 0..12 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((gram[i][j] - e).abs() < 1e-12, "{i} {j} {}", gram[i][j]);
            }
        }
    }

    #[test]
    fn jacobi_unit_weight_moments() {
        // int_0^1 u^{1/2} (1-u)^{-1/2} du = pi/2
        let g = GaussRule::jacobi_unit(0.5, -0.5, 8);
        let s: f64 = g.weights.iter().sum();
        assert!((s - PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-12);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-12);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((sphere_area(1) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn smooth_cutoff_derivative_matches_difference() {
        let h = 1e-6;
        for &r in &[0.3, 0.5, 0.71] {
            let fd = (smooth_cutoff(r + h, 0.2, 0.8) - smooth_cutoff(r - h, 0.2, 0.8)) / (2.0 * h);
            assert!((fd - smooth_cutoff_deriv(r, 0.2, 0.8)).abs() < 1e-7);
        }
    }
}
