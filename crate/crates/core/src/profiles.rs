//! Single-pole profiles in Emden-Fowler form: phi(x) = r^{-(N-2)/2} v(ln r, x/r).

use serde::{Deserialize, Serialize};

use crate::angular::AngularCoefficient;
use crate::special::{norm, sphere_area};
use crate::sphere_spectra::SphereSpectrum;

/// Integrals over S^{N-1} at fixed t: v^2, v v_t, v_t^2, |grad_theta v|^2, h v^2.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Shell {
    pub vv: f64,
    pub vt: f64,
    pub tt: f64,
    pub grad: f64,
    pub pot: f64,
}

/// A nonnegative single-pole profile centred at the origin.
pub trait Profile: Sync + Send {
    fn dim(&self) -> usize;
    fn sigma(&self) -> f64;
    /// Values of the angular factors at theta; fed back into `ef_from_modes`.
    fn mode_values(&self, theta: &[f64]) -> Vec<f64>;
    /// v(t, theta) from precomputed angular factors.
    fn ef_from_modes(&self, t: f64, modes: &[f64]) -> f64;
    /// (v, dv/dt, |grad_theta v|^2) at (t, theta).
    fn ef_jet(&self, t: f64, theta: &[f64]) -> (f64, f64, f64);
    fn psi1(&self, theta: &[f64]) -> f64;
    fn c0(&self) -> f64;
    fn c_inf(&self) -> f64;
    /// Directions the angular dependence is confined to (empty when radial).
    fn axes(&self) -> Vec<Vec<f64>>;
    /// Integral of |v|^{2*} over the cylinder (L^{2*} norm of phi to the power 2*).
    fn critical_mass(&self) -> f64;
    /// Gradient energy minus own-pole potential energy, i.e. the quadratic form at phi.
    fn own_energy(&self) -> f64;
    /// Gradient energy alone.
    fn gradient_energy(&self) -> f64;

    fn kappa(&self) -> f64 {
        self.sigma() + (self.dim() as f64 - 2.0) / 2.0
    }

    fn ef(&self, t: f64, theta: &[f64]) -> f64 {
        let m = self.mode_values(theta);
        self.ef_from_modes(t, &m)
    }

    fn value(&self, x: &[f64]) -> f64 {
        let r = norm(x);
        let th: Vec<f64> = x.iter().map(|c| c / r).collect();
        let k = (self.dim() as f64 - 2.0) / 2.0;
        r.powf(-k) * self.ef(r.ln(), &th)
    }

    /// Integral of phi^2 over the ball of the given radius.
    fn l2_ball_sq(&self, radius: f64) -> f64 {
        l2_ball(self, radius.ln())
    }

    /// The coefficient of the own pole, when the profile comes from a solve.
    fn coefficient(&self) -> Option<AngularCoefficient> {
        None
    }

    /// Angular integrals of the quadratic densities at each t.
    fn shells(&self, ts: &[f64]) -> Vec<Shell> {
        use crate::sphere_rule::SphereRule;
        let rule = SphereRule::adapted(self.dim(), &self.axes(), 24);
        let h = self.coefficient();
        let hv: Vec<f64> = rule.nodes.iter().map(|x| h.as_ref().map_or(0.0, |h| h.value(x))).collect();
        ts.iter()
            .map(|&t| {
                let mut s = Shell::default();
                for ((x, w), hx) in rule.nodes.iter().zip(&rule.weights).zip(&hv) {
                    let (v, vt, g) = self.ef_jet(t, x);
                    s.vv += w * v * v;
                    s.vt += w * v * vt;
                    s.tt += w * vt * vt;
                    s.grad += w * g;
                    s.pot += w * hx * v * v;
                }
                s
            })
            .collect()
    }

    /// Integral of phi^2 over R^N when finite.
    fn l2_sq(&self) -> Option<f64> {
        if 2.0 * self.sigma() + self.dim() as f64 - 2.0 <= 2.0 {
            return None;
        }
        Some(l2_ball(self, 60.0 / (self.kappa() - 1.0).max(0.05)))
    }
}

/// int_{t < t_max} int_S e^{2t} v^2 dtheta dt.
fn l2_ball<P: Profile + ?Sized>(p: &P, t_max: f64) -> f64 {
    use crate::special::{composite_gauss, panels, GaussRule};
    use crate::sphere_rule::SphereRule;
    let rule = SphereRule::adapted(p.dim(), &p.axes(), 24);
    let g = GaussRule::legendre(12);
    let lo = -60.0 / p.kappa().max(0.05) - 2.0;
    let br = panels(lo.min(t_max - 1.0), t_max, 0.5);
    let mut total = 0.0;
    for (th, w) in rule.nodes.iter().zip(&rule.weights) {
        let m = p.mode_values(th);
        total += w * composite_gauss(&br, &g, |t| {
            let v = p.ef_from_modes(t, &m);
            (2.0 * t).exp() * v * v
        });
    }
    total
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AngularShape {
    /// psi_1 constant = |S^{N-1}|^{-1/2}.
    Constant,
    Spectrum(SphereSpectrum),
}

/// Exact model of the two-sided envelope:
/// phi = A |x|^sigma / (1 + |x|^{2 sigma + N - 2}) psi_1, i.e. v = A psi_1 / (2 cosh(kappa t)).
/// With `bubble = true` it is the Aubin-Talenti profile (1 + |x|^2)^{-(N-2)/2} instead.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SyntheticProfile {
    pub n: usize,
    pub sigma: f64,
    pub amplitude: f64,
    pub shape: AngularShape,
    pub bubble: bool,
}

impl SyntheticProfile {
    pub fn envelope(n: usize, sigma: f64, shape: AngularShape) -> Self {
        SyntheticProfile { n, sigma, amplitude: 1.0, shape, bubble: false }
    }

    pub fn aubin_talenti(n: usize) -> Self {
        SyntheticProfile { n, sigma: 0.0, amplitude: 1.0, shape: AngularShape::Constant, bubble: true }
    }

    fn psi(&self, theta: &[f64]) -> f64 {
        match &self.shape {
            AngularShape::Constant => 1.0 / sphere_area(self.n).sqrt(),
            AngularShape::Spectrum(s) => s.psi_at(theta),
        }
    }

    fn psi_grad_sq(&self, theta: &[f64]) -> f64 {
        match &self.shape {
            AngularShape::Constant => 0.0,
            AngularShape::Spectrum(s) => angular_grad_sq(&|x: &[f64]| s.psi_at(x), theta),
        }
    }

    fn radial(&self, t: f64) -> (f64, f64) {
        if self.bubble {
            let k = (self.n as f64 - 2.0) / 2.0;
            let v = (-k * ln_2cosh(t)).exp();
            (v, -k * t.tanh() * v)
        } else {
            let k = self.kappa();
            let v = self.amplitude * (-ln_2cosh(k * t)).exp();
            (v, -k * (k * t).tanh() * v)
        }
    }
}

/// ln(2 cosh x) without overflow.
pub fn ln_2cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p()
}

/// |grad_theta f|^2 at theta by central differences along an orthonormal tangent frame.
pub fn angular_grad_sq(f: &dyn Fn(&[f64]) -> f64, theta: &[f64]) -> f64 {
    let n = theta.len();
    let fr = crate::sphere_rule::complete_frame(n, &[theta.to_vec()]);
    let h: f64 = 1e-5;
    let mut total = 0.0;
    for e in fr.iter().skip(1) {
        let p: Vec<f64> = (0..n).map(|i| theta[i] * h.cos() + e[i] * h.sin()).collect();
        let m: Vec<f64> = (0..n).map(|i| theta[i] * h.cos() - e[i] * h.sin()).collect();
        let d = (f(&p) - f(&m)) / (2.0 * h);
        total += d * d;
    }
    total
}

impl Profile for SyntheticProfile {
    fn dim(&self) -> usize {
        self.n
    }
    fn sigma(&self) -> f64 {
        self.sigma
    }
    fn mode_values(&self, theta: &[f64]) -> Vec<f64> {
        vec![self.psi(theta)]
    }
    fn ef_from_modes(&self, t: f64, modes: &[f64]) -> f64 {
        let (r, _) = self.radial(t);
        if self.bubble {
            r
        } else {
            r * modes[0]
        }
    }
    fn ef_jet(&self, t: f64, theta: &[f64]) -> (f64, f64, f64) {
        let (r, dr) = self.radial(t);
        if self.bubble {
            return (r, dr, 0.0);
        }
        let p = self.psi(theta);
        (r * p, dr * p, r * r * self.psi_grad_sq(theta))
    }
    fn psi1(&self, theta: &[f64]) -> f64 {
        self.psi(theta)
    }
    fn c0(&self) -> f64 {
        if self.bubble {
            sphere_area(self.n).sqrt()
        } else {
            self.amplitude
        }
    }
    fn c_inf(&self) -> f64 {
        self.c0()
    }
    fn axes(&self) -> Vec<Vec<f64>> {
        match &self.shape {
            AngularShape::Constant => Vec::new(),
            AngularShape::Spectrum(s) => match &s.basis {
                crate::sphere_spectra::Basis::Zonal { axis, .. } => vec![axis.clone()],
                crate::sphere_spectra::Basis::Harmonic { .. } => {
                    vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]
                }
            },
        }
    }
    fn critical_mass(&self) -> f64 {
        let p = crate::special::critical_exponent(self.n);
        cylinder_integral(self, |v, _, _| v.abs().powf(p))
    }
    fn own_energy(&self) -> f64 {
        // only meaningful for the bubble (h = 0)
        self.gradient_energy()
    }
    fn gradient_energy(&self) -> f64 {
        let hf = crate::special::hardy_floor(self.n);
        cylinder_integral(self, |v, vt, g| vt * vt + g + hf * v * v)
    }
}

/// int int F(v, v_t, |grad_theta v|^2) dtheta dt over the whole cylinder.
pub fn cylinder_integral<P: Profile + ?Sized, F: Fn(f64, f64, f64) -> f64>(p: &P, f: F) -> f64 {
    use crate::special::{composite_gauss, panels, GaussRule};
    use crate::sphere_rule::SphereRule;
    let rule = SphereRule::adapted(p.dim(), &p.axes(), 24);
    let g = GaussRule::legendre(12);
    let reach = 45.0 / p.kappa().max(0.05);
    let br = panels(-reach, reach, 0.5);
    let mut total = 0.0;
    for (th, w) in rule.nodes.iter().zip(&rule.weights) {
        total += w * composite_gauss(&br, &g, |t| {
            let (v, vt, gs) = p.ef_jet(t, th);
            f(v, vt, gs)
        });
    }
    total
}
