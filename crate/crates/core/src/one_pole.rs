//! Single-pole ground states in Emden-Fowler coordinates.
//!
//! phi(x) = r^{-(N-2)/2} v(ln r, x/r); each angular eigenmode of -Laplace - h carries a
//! trace c_n(t) on a uniform symmetric grid. The quadratic part is tridiagonal per mode
//! (P1 stiffness plus a fourth-order mass) with exact discrete decaying tails at both
//! ends; the critical term uses trapezoid weights in t and a Gauss rule on the sphere.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::angular::AngularCoefficient;
use crate::asymptotics;
use crate::error::{Error, Result};
use crate::linalg::{BlockTridiag, Tridiag};
use crate::profiles::{Profile, SyntheticProfile};
use crate::special::{critical_exponent, hardy_floor, linear_fit, sphere_area};
use crate::sphere_rule::SphereRule;
use crate::sphere_spectra::{self, angular_modes, default_basis, Basis, BasisEvaluator};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Discretization {
    pub dt: f64,
    pub t_max: f64,
    /// Angular eigenmodes kept in the expansion.
    pub modes: usize,
    /// Zonal Gegenbauer modes, or harmonic degree for N = 3 general h.
    pub basis_resolution: Option<usize>,
    pub max_iter: usize,
    pub tol: f64,
    /// Width in t of the windows used for the asymptotic constants.
    pub window: f64,
    /// Estimate the discretization error by coarser solves.
    pub error_estimate: bool,
}

impl Default for Discretization {
    fn default() -> Self {
        Discretization {
            dt: 0.05,
            t_max: 20.0,
            modes: 16,
            basis_resolution: None,
            max_iter: 20_000,
            tol: 1e-6,
            window: 2.0,
            error_estimate: true,
        }
    }
}

/// Stored single-pole minimizer. `coeffs[j * modes + n]` is the trace of mode n at t_j of
/// the representative with unit L^{2*} norm.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GroundStateProfile {
    pub n: usize,
    pub h: AngularCoefficient,
    pub dt: f64,
    /// t_j = t_start + j dt, j < nodes.
    pub t_start: f64,
    pub nodes: usize,
    pub basis: Basis,
    pub modes: usize,
    pub mode_values: Vec<f64>,
    /// Basis coefficients of each retained mode (modes x basis size).
    pub mode_vectors: Vec<Vec<f64>>,
    pub coeffs: Vec<f64>,
    /// Decay factor per grid step of each mode beyond the grid.
    pub tail_ratio: Vec<f64>,
    pub level: f64,
    pub grid_level: f64,
    pub competitor_level: f64,
    pub mu1: f64,
    pub sigma: f64,
    pub c0: f64,
    pub c_inf: f64,
    pub envelope: f64,
    pub el_residual: f64,
    pub attained: bool,
    pub mass_fraction: f64,
    pub disc_error: f64,
    pub iterations: usize,
    /// Quotient after each accepted iteration.
    pub history: Vec<f64>,
}

struct Angular {
    basis: Basis,
    mus: Vec<f64>,
    vecs: DMatrix<f64>,
    /// Mode values at the quadrature nodes (Q x M).
    phi: DMatrix<f64>,
    w: Vec<f64>,
}

fn build_angular(h: &AngularCoefficient, n: usize, disc: &Discretization) -> Result<Angular> {
    let res = disc.basis_resolution.unwrap_or(match h.zonal_axis() {
        Some(_) => sphere_spectra::DEFAULT_ZONAL_MODES,
        None => 16,
    });
    let basis = default_basis(h, n, res)?;
    let am = angular_modes(h, n, &basis);
    let bsize = basis.size();
    let m = disc.modes.min(bsize).max(1);
    let vecs = am.vectors.columns(0, m).into_owned();
    let mus = am.values[..m].to_vec();
    let rule = match &basis {
        Basis::Zonal { axis, modes } => SphereRule::adapted(n, &[axis.clone()], 2 * modes),
        Basis::Harmonic { l_max } => SphereRule::s2(2 * l_max + 4),
    };
    let ev = BasisEvaluator::new(&basis, n);
    let q = rule.len();
    let mut bq = DMatrix::<f64>::zeros(q, bsize);
    let mut y = vec![0.0; bsize];
    for (i, x) in rule.nodes.iter().enumerate() {
        ev.eval_into(x, &mut y);
        for k in 0..bsize {
            bq[(i, k)] = y[k];
        }
    }
    let mut phi = bq * &vecs;
    // psi_1 positive
    let s0: f64 = (0..q).map(|i| phi[(i, 0)] * rule.weights[i]).sum();
    let mut vecs = vecs;
    if s0 < 0.0 {
        for i in 0..q {
            phi[(i, 0)] = -phi[(i, 0)];
        }
        for k in 0..bsize {
            vecs[(k, 0)] = -vecs[(k, 0)];
        }
    }
    Ok(Angular { basis, mus, vecs, phi, w: rule.weights })
}

struct Core {
    p: f64,
    dt: f64,
    nt: usize,
    m: usize,
    ops: Vec<Tridiag>,
    rho: Vec<f64>,
    ang: Angular,
}

impl Core {
    fn new(h: &AngularCoefficient, n: usize, disc: &Discretization) -> Result<Core> {
        let ang = build_angular(h, n, disc)?;
        let hf = hardy_floor(n);
        if ang.mus[0] <= -hf {
            return Err(Error::SubcriticalEigenvalue { mu1: ang.mus[0], floor: -hf });
        }
        let dt = disc.dt;
        let half = (disc.t_max / dt).round() as usize;
        let nt = 2 * half + 1;
        let m = ang.mus.len();
        let mut ops = Vec::with_capacity(m);
        let mut rho = Vec::with_capacity(m);
        for &mu in &ang.mus {
            let k2 = hf + mu;
            let a = -1.0 / dt + k2 * dt / 12.0;
            let b = 2.0 / dt + 10.0 * k2 * dt / 12.0;
            let r = (-b + (b * b - 4.0 * a * a).sqrt()) / (2.0 * a);
            let mut diag = vec![b; nt];
            diag[0] = b + a * r;
            diag[nt - 1] = b + a * r;
            ops.push(Tridiag { diag, off: vec![a; nt - 1] });
            rho.push(r);
        }
        Ok(Core { p: critical_exponent(n), dt, nt, m, ops, rho, ang })
    }

    fn values(&self, c: &DMatrix<f64>) -> DMatrix<f64> {
        c * self.ang.phi.transpose()
    }

    fn crit(&self, vals: &DMatrix<f64>) -> f64 {
        let q = self.ang.w.len();
        let mut s = 0.0;
        for j in 0..self.nt {
            let mut row = 0.0;
            for i in 0..q {
                row += self.ang.w[i] * vals[(j, i)].abs().powf(self.p);
            }
            s += row;
        }
        s * self.dt
    }

    /// dt sum_q w_q |v|^{p-2} v Phi; the gradient of crit / p.
    fn nl_grad(&self, vals: &DMatrix<f64>) -> DMatrix<f64> {
        let q = self.ang.w.len();
        let mut g = DMatrix::<f64>::zeros(self.nt, q);
        for j in 0..self.nt {
            for i in 0..q {
                let v = vals[(j, i)];
                g[(j, i)] = self.dt * self.ang.w[i] * v.abs().powf(self.p - 2.0) * v;
            }
        }
        g * &self.ang.phi
    }

    fn quad(&self, c: &DMatrix<f64>) -> f64 {
        (0..self.m).map(|n| self.ops[n].quad(c.column(n).as_slice())).sum()
    }

    fn apply(&self, c: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::<f64>::zeros(self.nt, self.m);
        let mut y = vec![0.0; self.nt];
        for n in 0..self.m {
            self.ops[n].apply(c.column(n).as_slice(), &mut y);
            out.column_mut(n).copy_from_slice(&y);
        }
        out
    }

    fn solve(&self, r: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = r.clone();
        for n in 0..self.m {
            let mut col: Vec<f64> = r.column(n).iter().copied().collect();
            self.ops[n].solve(&mut col);
            out.column_mut(n).copy_from_slice(&col);
        }
        out
    }

    fn symmetrize(&self, c: &mut DMatrix<f64>) {
        let nt = self.nt;
        for n in 0..self.m {
            for j in 0..nt / 2 {
                let a = 0.5 * (c[(j, n)] + c[(nt - 1 - j, n)]);
                c[(j, n)] = a;
                c[(nt - 1 - j, n)] = a;
            }
        }
    }

    fn quotient(&self, c: &DMatrix<f64>) -> (f64, f64) {
        let vals = self.values(c);
        let nrm = self.crit(&vals);
        (self.quad(c) / nrm.powf(2.0 / self.p), nrm)
    }

    fn normalize(&self, c: &mut DMatrix<f64>) {
        let vals = self.values(c);
        let nrm = self.crit(&vals);
        *c /= nrm.powf(1.0 / self.p);
    }

    /// Dual-norm Euler-Lagrange residual at a unit-norm representative.
    fn residual(&self, v: &DMatrix<f64>) -> (f64, f64) {
        let vals = self.values(v);
        let s = self.quad(v);
        let g = self.nl_grad(&vals);
        let r = self.apply(v) - g * s;
        let ar = self.solve(&r);
        let num: f64 = r.iter().zip(ar.iter()).map(|(a, b)| a * b).sum();
        ((num.max(0.0)).sqrt() / s.sqrt(), s)
    }

    fn initial(&self) -> DMatrix<f64> {
        let mut c = DMatrix::<f64>::zeros(self.nt, self.m);
        let kappa = (hardy_floor_from_p(self.p) + self.ang.mus[0]).sqrt();
        let t0 = -(self.nt as f64 - 1.0) / 2.0 * self.dt;
        for j in 0..self.nt {
            let t = t0 + j as f64 * self.dt;
            c[(j, 0)] = 1.0 / (kappa * t).cosh();
        }
        self.normalize(&mut c);
        c
    }

    fn newton_matrix(&self, phi: &DMatrix<f64>) -> BlockTridiag {
        let vals = self.values(phi);
        let q = self.ang.w.len();
        let half = self.nt / 2;
        let nb = half + 1;
        let mut diag = Vec::with_capacity(nb);
        let mut lower = Vec::with_capacity(nb - 1);
        let mut upper = Vec::with_capacity(nb - 1);
        let mut wp = DMatrix::<f64>::zeros(q, self.m);
        for b in 0..nb {
            let j = half + b;
            for i in 0..q {
                let f = self.dt * (self.p - 1.0) * self.ang.w[i] * vals[(j, i)].abs().powf(self.p - 2.0);
                for n in 0..self.m {
                    wp[(i, n)] = f * self.ang.phi[(i, n)];
                }
            }
            let mut d = -(self.ang.phi.transpose() * &wp);
            for n in 0..self.m {
                d[(n, n)] += self.ops[n].diag[j];
            }
            diag.push(d);
            if b + 1 < nb {
                let off: Vec<f64> = (0..self.m).map(|n| self.ops[n].off[j]).collect();
                // folded even system: the centre row sees its neighbour twice
                let up: Vec<f64> = if b == 0 { off.iter().map(|x| 2.0 * x).collect() } else { off.clone() };
                upper.push(up);
                lower.push(off);
            }
        }
        BlockTridiag { diag, lower, upper }
    }

    /// Newton step on A phi = g(phi) restricted to t-even functions.
    fn newton_step(&self, phi: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let vals = self.values(phi);
        let f = self.apply(phi) - self.nl_grad(&vals);
        let half = self.nt / 2;
        let nb = half + 1;
        let mut x = vec![0.0; nb * self.m];
        for b in 0..nb {
            for n in 0..self.m {
                x[b * self.m + n] = -f[(half + b, n)];
            }
        }
        self.newton_matrix(phi).solve(&mut x)?;
        let mut d = DMatrix::<f64>::zeros(self.nt, self.m);
        for b in 0..nb {
            for n in 0..self.m {
                d[(half + b, n)] = x[b * self.m + n];
                d[(half - b, n)] = x[b * self.m + n];
            }
        }
        Ok(d)
    }
}

fn hardy_floor_from_p(p: f64) -> f64 {
    // p = 2N/(N-2)  =>  (N-2)/2 = 2/(p-2)
    let k = 2.0 / (p - 2.0);
    k * k
}

struct RawSolution {
    v: DMatrix<f64>,
    level: f64,
    residual: f64,
    iterations: usize,
    history: Vec<f64>,
}

fn minimize(core: &Core, disc: &Discretization) -> Result<RawSolution> {
    let mut v = core.initial();
    core.symmetrize(&mut v);
    let (mut q, _) = core.quotient(&v);
    let mut history = vec![q];
    let mut it = 0;
    let switch = 1e-4;
    let mut res = f64::INFINITY;
    // preconditioned projected gradient (nonlinear inverse iteration) with Armijo steps
    while it < disc.max_iter {
        let vals = core.values(&v);
        let s = core.quad(&v);
        let g = core.nl_grad(&vals);
        let w = core.solve(&g) * s;
        let d = &w - &v;
        let ad = core.apply(&d);
        let dad: f64 = d.iter().zip(ad.iter()).map(|(a, b)| a * b).sum();
        res = dad.max(0.0).sqrt() / s.sqrt();
        if res < switch {
            break;
        }
        let mut tau = 1.0;
        let mut accepted = false;
        while tau > 1e-10 {
            let mut cand = &v + &d * tau;
            core.symmetrize(&mut cand);
            let (qc, _) = core.quotient(&cand);
            if qc <= q - 2e-4 * tau * dad {
                core.normalize(&mut cand);
                v = cand;
                q = qc;
                accepted = true;
                break;
            }
            tau *= 0.5;
        }
        it += 1;
        if !accepted {
            break;
        }
        history.push(q);
    }
    // Newton polish on the Euler-Lagrange equation
    let expo = 1.0 / (core.p - 2.0);
    for _ in 0..60 {
        let (r0, s0) = core.residual(&v);
        res = r0;
        if r0 < disc.tol * 1e-4 || it >= disc.max_iter {
            break;
        }
        let phi = &v * s0.powf(expo);
        let d = match core.newton_step(&phi) {
            Ok(d) => d,
            Err(_) => break,
        };
        let mut alpha = 1.0;
        let mut improved = false;
        while alpha > 1e-4 {
            let mut cand = &phi + &d * alpha;
            core.symmetrize(&mut cand);
            core.normalize(&mut cand);
            let (rc, _) = core.residual(&cand);
            let (qc, _) = core.quotient(&cand);
            if rc < r0 && qc <= q * (1.0 + 1e-13) {
                v = cand;
                q = qc.min(q);
                res = rc;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        it += 1;
        if !improved {
            break;
        }
        history.push(q);
    }
    let (q_final, _) = core.quotient(&v);
    Ok(RawSolution { v, level: q_final, residual: res, iterations: it, history })
}

/// Quotient of off-centre Aubin-Talenti bubbles concentrating at a point of the unit
/// sphere; an upper bound for S(h) that approaches S.
pub fn concentration_competitor(h: &AngularCoefficient, n: usize) -> Result<f64> {
    let bubble = SyntheticProfile::aubin_talenti(n);
    let s = sobolev_constant(n);
    let norm2 = bubble.critical_mass().powf(2.0 / critical_exponent(n));
    let grad = s * norm2;
    let axis = h.zonal_axis().unwrap_or_else(|| vec![0.0, 0.0, 1.0]);
    let mut best = f64::INFINITY;
    for sign in [1.0, -1.0] {
        let a: Vec<f64> = axis.iter().map(|x| -sign * x).collect();
        for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
            let i = asymptotics::interaction_integral(h, &a, &bubble, eps)?;
            best = best.min((grad - i) / norm2);
        }
    }
    Ok(best)
}

/// Single-pole minimizer and level S(h).
pub fn solve_one_pole(h: &AngularCoefficient, n: usize, disc: &Discretization) -> Result<GroundStateProfile> {
    h.validate()?;
    if !(disc.dt > 0.0 && disc.t_max > 4.0 * disc.dt && disc.modes >= 1 && disc.tol > 0.0) {
        return Err(Error::Precondition("invalid discretization".into()));
    }
    let core = Core::new(h, n, disc)?;
    let raw = minimize(&core, disc)?;
    let mut prof = assemble(h, n, disc, &core, &raw);
    let competitor = concentration_competitor(h, n)?;
    prof.competitor_level = competitor;
    let mut disc_error = 0.0;
    if disc.error_estimate {
        let mut d2 = disc.clone();
        d2.dt = 2.0 * disc.dt;
        d2.error_estimate = false;
        let c2 = Core::new(h, n, &d2)?;
        let s2 = minimize(&c2, &d2)?.level;
        disc_error += (raw.level - s2).abs() / 3.0;
        if core.m > 1 {
            let mut dm = disc.clone();
            dm.modes = (core.m / 2).max(1);
            dm.error_estimate = false;
            let cm = Core::new(h, n, &dm)?;
            let sm = minimize(&cm, &dm)?.level;
            disc_error += (raw.level - sm).abs();
        }
    }
    prof.disc_error = disc_error;
    let below = raw.level < competitor;
    prof.attained = raw.residual < disc.tol && prof.mass_fraction > 0.999 && below;
    prof.level = if below { raw.level } else { competitor };
    if prof.attained || below {
        if let Ok(a) = profile_asymptotics_with(&prof, disc.window, disc.window) {
            prof.c0 = a.c0;
            prof.c_inf = a.c_inf;
            prof.envelope = a.envelope;
        }
    }
    if raw.iterations >= disc.max_iter && raw.residual >= disc.tol {
        return Err(Error::NonConvergence {
            iterations: raw.iterations,
            residual: raw.residual,
            best: Some(Box::new(prof)),
        });
    }
    Ok(prof)
}

fn assemble(h: &AngularCoefficient, n: usize, disc: &Discretization, core: &Core, raw: &RawSolution) -> GroundStateProfile {
    let nt = core.nt;
    let m = core.m;
    let mut coeffs = vec![0.0; nt * m];
    for j in 0..nt {
        for k in 0..m {
            coeffs[j * m + k] = raw.v[(j, k)];
        }
    }
    let vals = core.values(&raw.v);
    let total = core.crit(&vals);
    let half_t = disc.t_max / 2.0;
    let t0 = -((nt - 1) as f64) / 2.0 * core.dt;
    let mut inner = 0.0;
    for j in 0..nt {
        let t = t0 + j as f64 * core.dt;
        if t.abs() <= half_t + 1e-12 {
            let mut row = 0.0;
            for i in 0..core.ang.w.len() {
                row += core.ang.w[i] * vals[(j, i)].abs().powf(core.p);
            }
            inner += row * core.dt;
        }
    }
    let mu1 = core.ang.mus[0];
    let sigma = sphere_spectra::sigma_of(mu1, n).unwrap_or(f64::NAN);
    let bsize = core.ang.basis.size();
    let mode_vectors = (0..m).map(|k| (0..bsize).map(|i| core.ang.vecs[(i, k)]).collect()).collect();
    GroundStateProfile {
        n,
        h: h.clone(),
        dt: core.dt,
        t_start: t0,
        nodes: nt,
        basis: core.ang.basis.clone(),
        modes: m,
        mode_values: core.ang.mus.clone(),
        mode_vectors,
        coeffs,
        tail_ratio: core.rho.clone(),
        level: raw.level,
        grid_level: raw.level,
        competitor_level: f64::INFINITY,
        mu1,
        sigma,
        c0: 0.0,
        c_inf: 0.0,
        envelope: 0.0,
        el_residual: raw.residual,
        attained: false,
        mass_fraction: inner / total,
        disc_error: 0.0,
        iterations: raw.iterations,
        history: raw.history.clone(),
    }
}

impl GroundStateProfile {
    pub fn t_at(&self, j: usize) -> f64 {
        self.t_start + j as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t_at(self.nodes - 1)
    }

    pub fn coeff(&self, j: usize, k: usize) -> f64 {
        self.coeffs[j * self.modes + k]
    }

    /// Factor turning the unit-norm representative into the Euler-Lagrange solution.
    pub fn el_scale(&self) -> f64 {
        self.grid_level.powf(1.0 / (critical_exponent(self.n) - 2.0))
    }

    /// Trace of mode k at arbitrary t (six-point Lagrange inside, discrete tails outside).
    pub fn trace(&self, k: usize, t: f64) -> f64 {
        let x = (t - self.t_start) / self.dt;
        let last = (self.nodes - 1) as f64;
        if x <= 0.0 {
            return self.coeff(0, k) * self.tail_ratio[k].powf(-x);
        }
        if x >= last {
            return self.coeff(self.nodes - 1, k) * self.tail_ratio[k].powf(x - last);
        }
        let i = x.floor() as isize;
        let lo = (i - 2).clamp(0, self.nodes as isize - 6) as usize;
        let mut s = 0.0;
        for a in lo..lo + 6 {
            let mut l = 1.0;
            for b in lo..lo + 6 {
                if a != b {
                    l *= (x - b as f64) / (a as f64 - b as f64);
                }
            }
            s += l * self.coeff(a, k);
        }
        s
    }

    fn trace_deriv(&self, k: usize, t: f64) -> f64 {
        let e = 1e-4;
        (self.trace(k, t + e) - self.trace(k, t - e)) / (2.0 * e)
    }

    /// Angular factors Phi_k(theta).
    pub fn modes_at(&self, theta: &[f64]) -> Vec<f64> {
        let ev = BasisEvaluator::new(&self.basis, self.n);
        let bs = self.basis.size();
        let mut y = vec![0.0; bs];
        ev.eval_into(theta, &mut y);
        self.mode_vectors
            .iter()
            .map(|vk| vk.iter().zip(&y).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Angular Gram matrix of gradients of the retained modes.
    fn mode_gradient_gram(&self) -> Vec<Vec<f64>> {
        let lap = self.basis.laplace_eigenvalues(self.n);
        let m = self.modes;
        let mut g = vec![vec![0.0; m]; m];
        for a in 0..m {
            for b in 0..m {
                g[a][b] = self.mode_vectors[a]
                    .iter()
                    .zip(&self.mode_vectors[b])
                    .zip(&lap)
                    .map(|((x, y), l)| x * y * l)
                    .sum();
            }
        }
        g
    }

    /// Angular mean of |grad phi|^2 at t (r = e^t), for the Euler-Lagrange solution.
    pub fn grad_mean_sq(&self, t: f64) -> f64 {
        let k = (self.n as f64 - 2.0) / 2.0;
        let sc = self.el_scale();
        let g = self.mode_gradient_gram();
        let c: Vec<f64> = (0..self.modes).map(|m| sc * self.trace(m, t)).collect();
        let ct: Vec<f64> = (0..self.modes).map(|m| sc * self.trace_deriv(m, t)).collect();
        let mut s = 0.0;
        for a in 0..self.modes {
            s += (ct[a] - k * c[a]).powi(2);
            for b in 0..self.modes {
                s += c[a] * g[a][b] * c[b];
            }
        }
        (-(self.n as f64) * t).exp() * s / sphere_area(self.n)
    }
}

impl Profile for GroundStateProfile {
    fn dim(&self) -> usize {
        self.n
    }
    fn sigma(&self) -> f64 {
        self.sigma
    }
    fn mode_values(&self, theta: &[f64]) -> Vec<f64> {
        self.modes_at(theta)
    }
    fn ef_from_modes(&self, t: f64, modes: &[f64]) -> f64 {
        let sc = self.el_scale();
        (0..self.modes).map(|k| self.trace(k, t) * modes[k]).sum::<f64>() * sc
    }
    fn ef_jet(&self, t: f64, theta: &[f64]) -> (f64, f64, f64) {
        let m = self.modes_at(theta);
        let sc = self.el_scale();
        let v: f64 = (0..self.modes).map(|k| self.trace(k, t) * m[k]).sum::<f64>() * sc;
        let vt: f64 = (0..self.modes).map(|k| self.trace_deriv(k, t) * m[k]).sum::<f64>() * sc;
        let f = |x: &[f64]| {
            let mm = self.modes_at(x);
            (0..self.modes).map(|k| self.trace(k, t) * mm[k]).sum::<f64>() * sc
        };
        (v, vt, crate::profiles::angular_grad_sq(&f, theta))
    }
    fn psi1(&self, theta: &[f64]) -> f64 {
        self.modes_at(theta)[0]
    }
    fn c0(&self) -> f64 {
        self.c0
    }
    fn c_inf(&self) -> f64 {
        self.c_inf
    }
    fn axes(&self) -> Vec<Vec<f64>> {
        match &self.basis {
            Basis::Zonal { axis, .. } => vec![axis.clone()],
            Basis::Harmonic { .. } => vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        }
    }
    fn critical_mass(&self) -> f64 {
        // unit-norm representative scaled by S^{1/(p-2)}
        self.el_scale().powf(critical_exponent(self.n))
    }
    fn own_energy(&self) -> f64 {
        self.el_scale().powi(2) * self.grid_level
    }
    fn gradient_energy(&self) -> f64 {
        // Q(phi) + int h/r^2 phi^2 with the potential assembled in the mode basis
        let (_, hm) = self.mode_matrices();
        let m = self.modes;
        let mut pot = 0.0;
        for j in 0..self.nodes {
            for a in 0..m {
                for b in 0..m {
                    pot += self.dt * hm[a][b] * self.coeff(j, a) * self.coeff(j, b);
                }
            }
        }
        self.own_energy() + self.el_scale().powi(2) * pot
    }
    fn coefficient(&self) -> Option<AngularCoefficient> {
        Some(self.h.clone())
    }
    fn shells(&self, ts: &[f64]) -> Vec<crate::profiles::Shell> {
        let (g, hm) = self.mode_matrices();
        let m = self.modes;
        let sc2 = self.el_scale().powi(2);
        ts.iter()
            .map(|&t| {
                let c: Vec<f64> = (0..m).map(|k| self.trace(k, t)).collect();
                let d: Vec<f64> = (0..m).map(|k| self.trace_deriv(k, t)).collect();
                let mut s = crate::profiles::Shell::default();
                for a in 0..m {
                    s.vv += c[a] * c[a];
                    s.vt += c[a] * d[a];
                    s.tt += d[a] * d[a];
                    for b in 0..m {
                        s.grad += c[a] * g[a][b] * c[b];
                        s.pot += c[a] * hm[a][b] * c[b];
                    }
                }
                s.vv *= sc2;
                s.vt *= sc2;
                s.tt *= sc2;
                s.grad *= sc2;
                s.pot *= sc2;
                s
            })
            .collect()
    }
}

impl GroundStateProfile {
    /// Quadrature rule resolving products of two retained modes.
    pub fn angular_rule(&self) -> SphereRule {
        match &self.basis {
            Basis::Zonal { axis, modes } => SphereRule::adapted(self.n, &[axis.clone()], 2 * modes),
            Basis::Harmonic { l_max } => SphereRule::s2(2 * l_max + 4),
        }
    }

    /// Gradient and potential Gram matrices of the retained modes.
    pub fn mode_matrices(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let m = self.modes;
        let rule = self.angular_rule();
        let mut hm = vec![vec![0.0; m]; m];
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let hv = self.h.value(x);
            let mv = self.modes_at(x);
            for a in 0..m {
                for b in 0..m {
                    hm[a][b] += w * hv * mv[a] * mv[b];
                }
            }
        }
        (self.mode_gradient_gram(), hm)
    }
}

/// The Sobolev constant S from the Aubin-Talenti quotient in Emden-Fowler form.
pub fn sobolev_constant(n: usize) -> f64 {
    use crate::special::{composite_gauss, panels, GaussRule};
    let k = (n as f64 - 2.0) / 2.0;
    let p = critical_exponent(n);
    let g = GaussRule::legendre(20);
    let reach = 40.0 / k.min(1.0);
    let br = panels(0.0, reach, 0.5);
    let v = |t: f64| (-k * crate::profiles::ln_2cosh(t)).exp();
    let num = 2.0 * composite_gauss(&br, &g, |t| {
        let vv = v(t);
        let vt = -k * t.tanh() * vv;
        vt * vt + k * k * vv * vv
    });
    let den = 2.0 * composite_gauss(&br, &g, |t| v(t).powf(p));
    let area = sphere_area(n);
    area * num / (area * den).powf(2.0 / p)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AsymptoticReport {
    pub c0: f64,
    pub c_inf: f64,
    pub envelope: f64,
    pub inner_slope: f64,
    pub outer_slope: f64,
    pub inner_residual: f64,
    pub outer_residual: f64,
    pub inner_window: (f64, f64),
    pub outer_window: (f64, f64),
}

/// c0, c_inf, envelope and fitted exponents with default windows (2 units of t).
pub fn profile_asymptotics(p: &GroundStateProfile) -> Result<AsymptoticReport> {
    if !p.attained {
        return Err(Error::ProfileNotAttained);
    }
    profile_asymptotics_with(p, 2.0, 2.0)
}

pub fn profile_asymptotics_with(p: &GroundStateProfile, inner_w: f64, outer_w: f64) -> Result<AsymptoticReport> {
    let kappa = p.sigma + (p.n as f64 - 2.0) / 2.0;
    let k = (p.n as f64 - 2.0) / 2.0;
    let sc = p.el_scale();
    let area = sphere_area(p.n);
    let rule = SphereRule::adapted(p.n, &p.axes(), 48);
    let ang: Vec<(Vec<f64>, f64)> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(x, w)| (p.modes_at(x), *w))
        .collect();
    let mean_v = |j: usize| -> f64 {
        ang.iter()
            .map(|(m, w)| w * (0..p.modes).map(|a| p.coeff(j, a) * m[a]).sum::<f64>())
            .sum::<f64>()
            * sc
            / area
    };
    let t_lo = p.t_at(0);
    let t_hi = p.t_end();
    let idx = |a: f64, b: f64| -> Vec<usize> {
        (0..p.nodes).filter(|&j| p.t_at(j) >= a - 1e-12 && p.t_at(j) <= b + 1e-12).collect()
    };
    let inner = idx(t_lo, t_lo + inner_w);
    let outer = idx(t_hi - outer_w, t_hi);
    let fit = |js: &[usize]| -> (f64, f64) {
        let x: Vec<f64> = js.iter().map(|&j| p.t_at(j)).collect();
        let y: Vec<f64> = js.iter().map(|&j| mean_v(j).ln() - k * p.t_at(j)).collect();
        let (s, _, r) = linear_fit(&x, &y);
        (s, r)
    };
    let (inner_slope, inner_residual) = fit(&inner);
    let (outer_slope, outer_residual) = fit(&outer);
    let c0: f64 = inner.iter().map(|&j| sc * p.coeff(j, 0) * (-kappa * p.t_at(j)).exp()).sum::<f64>()
        / inner.len() as f64;
    let c_inf: f64 = outer.iter().map(|&j| sc * p.coeff(j, 0) * (kappa * p.t_at(j)).exp()).sum::<f64>()
        / outer.len() as f64;
    let mut hi = 0.0f64;
    let mut lo = f64::INFINITY;
    for j in 0..p.nodes {
        let t = p.t_at(j);
        let env = 2.0 * (kappa * t).cosh();
        for (m, _) in &ang {
            let v = sc * (0..p.modes).map(|a| p.coeff(j, a) * m[a]).sum::<f64>();
            let r = v * env;
            hi = hi.max(r);
            lo = lo.min(r);
        }
    }
    let envelope = if lo > 0.0 { hi.max(1.0 / lo) } else { f64::INFINITY };
    if inner_residual > 1e-3 || outer_residual > 1e-3 {
        return Err(Error::WindowTooNoisy(inner_residual.max(outer_residual)));
    }
    Ok(AsymptoticReport {
        c0,
        c_inf,
        envelope,
        inner_slope,
        outer_slope,
        inner_residual,
        outer_residual,
        inner_window: (t_lo, t_lo + inner_w),
        outer_window: (t_hi - outer_w, t_hi),
    })
}

/// Kelvin transform: t -> -t in Emden-Fowler coordinates.
pub fn kelvin_transform(p: &GroundStateProfile) -> GroundStateProfile {
    let mut out = p.clone();
    let m = p.modes;
    for j in 0..p.nodes {
        for k in 0..m {
            out.coeffs[j * m + k] = p.coeffs[(p.nodes - 1 - j) * m + k];
        }
    }
    out.t_start = -p.t_end();
    out.c0 = p.c_inf;
    out.c_inf = p.c0;
    out
}

/// phi_mu(x) = mu^{-(N-2)/2} phi(x / mu), i.e. t -> t + ln mu.
pub fn rescale_profile(p: &GroundStateProfile, mu: f64) -> Result<GroundStateProfile> {
    if !(mu > 0.0) {
        return Err(Error::Precondition("mu must be positive".into()));
    }
    let s = mu.ln();
    if s.abs() > 40.0 {
        return Err(Error::TranslationOutOfRange(s));
    }
    let mut out = p.clone();
    out.t_start += s;
    let kappa = p.sigma + (p.n as f64 - 2.0) / 2.0;
    // the limits pick up the scaling factors mu^{-kappa} and mu^{kappa}
    out.c0 = p.c0 * (-kappa * s).exp();
    out.c_inf = p.c_inf * (kappa * s).exp();
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GradientDecay {
    pub slope: f64,
    pub bound: f64,
    pub branch: String,
    pub pass: bool,
    pub residual: f64,
}

/// Slope of ln|grad phi| against ln|x| on the outer window.
pub fn gradient_decay_fit(p: &dyn Profile, eps: f64, window: (f64, f64), mu1: f64) -> Result<GradientDecay> {
    let n = p.dim();
    let k = (n as f64 - 2.0) / 2.0;
    if !(eps > 0.0 && eps < k) {
        return Err(Error::Precondition(format!("eps must lie in (0, {k})")));
    }
    let ts: Vec<f64> = (0..=40).map(|i| window.0 + (window.1 - window.0) * i as f64 / 40.0).collect();
    let rule = SphereRule::adapted(n, &p.axes(), 24);
    let area = sphere_area(n);
    let y: Vec<f64> = ts
        .iter()
        .map(|&t| {
            let m: f64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(x, w)| {
                    let (v, vt, g) = p.ef_jet(t, x);
                    w * ((vt - k * v).powi(2) + g)
                })
                .sum::<f64>()
                / area;
            0.5 * ((-(n as f64) * t).exp() * m).ln()
        })
        .collect();
    gradient_verdict(&ts, &y, p.sigma(), n, eps, mu1)
}

/// Same fit for a solved profile, using the spectral angular gradient.
pub fn gradient_decay_fit_solved(p: &GroundStateProfile, eps: f64) -> Result<GradientDecay> {
    if !p.attained {
        return Err(Error::ProfileNotAttained);
    }
    let n = p.n;
    let k = (n as f64 - 2.0) / 2.0;
    if !(eps > 0.0 && eps < k) {
        return Err(Error::Precondition(format!("eps must lie in (0, {k})")));
    }
    let hi = p.t_end() - 0.5;
    let lo = hi - 2.0;
    let ts: Vec<f64> = (0..=40).map(|i| lo + (hi - lo) * i as f64 / 40.0).collect();
    let y: Vec<f64> = ts.iter().map(|&t| 0.5 * p.grad_mean_sq(t).ln()).collect();
    gradient_verdict(&ts, &y, p.sigma, n, eps, p.mu1)
}

fn gradient_verdict(ts: &[f64], y: &[f64], sigma: f64, n: usize, eps: f64, mu1: f64) -> Result<GradientDecay> {
    let (slope, _, residual) = linear_fit(ts, y);
    if residual > 1e-3 {
        return Err(Error::WindowTooNoisy(residual));
    }
    let nf = n as f64;
    let (bound, branch) = if mu1 < nf - 1.0 {
        (-(sigma + nf - 1.0), "mu1 < N-1")
    } else {
        (-nf + eps, "mu1 >= N-1")
    };
    let pass = slope <= bound + 0.01 * bound.abs();
    Ok(GradientDecay { slope, bound, branch: branch.into(), pass, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sobolev_matches_closed_form() {
        for n in 3..=6 {
            let s = sobolev_constant(n);
            let c = crate::special::sobolev_closed_form(n);
            assert!((s - c).abs() < 1e-9 * c, "N={n} {s} {c}");
        }
    }
}
