//! Half-space polarization on grids paired by the reflection x -> x - 2 (x.d) d.
//!
//! The grid lives in an orthonormal frame (d, e_2, ..., e_N). Along d the nodes are
//! s_i = i h, i = -m..m, so the pairing is i <-> -i and nodes with i = 0 are fixed.
//! Transverse nodes sit at (j - floor(k/2) + 1/2) h so the origin is never a node.
//! Integrals use nodal (lumped) weights h^N; the gradient energy is the P1 energy on
//! the Freudenthal triangulation (mirrored in s < 0), which reduces to axis edge
//! differences.

use serde::{Deserialize, Serialize};

use crate::angular::AngularCoefficient;
use crate::error::{Error, Result};
use crate::one_pole::{self, Discretization};
use crate::special::{critical_exponent, norm};
use crate::sphere_rule::complete_frame;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MirrorGrid {
    pub n: usize,
    pub d: Vec<f64>,
    pub h: f64,
    /// Nodes along d: index i in 0..2m+1 stands for s = (i - m) h.
    pub m: usize,
    /// Transverse nodes per axis.
    pub k: usize,
    /// Row-major values, s index slowest.
    pub values: Vec<f64>,
    /// pair[i] is the node index of the reflected node.
    pub pair: Vec<usize>,
}

impl MirrorGrid {
    pub fn new(n: usize, d: Vec<f64>, h: f64, m: usize, k: usize) -> Result<MirrorGrid> {
        if n < 2 || d.len() != n {
            return Err(Error::Precondition("grid dimension mismatch".into()));
        }
        let l = norm(&d);
        if (l - 1.0).abs() > 1e-12 {
            return Err(Error::NonUnitDirection(l));
        }
        if !(h > 0.0) || k == 0 {
            return Err(Error::Precondition("empty grid".into()));
        }
        let ns = 2 * m + 1;
        let per = k.pow(n as u32 - 1);
        let len = ns * per;
        let pair = (0..len).map(|id| (ns - 1 - id / per) * per + id % per).collect();
        Ok(MirrorGrid { n, d, h, m, k, values: vec![0.0; len], pair })
    }

    pub fn with_values(mut self, f: impl Fn(&[f64]) -> f64) -> MirrorGrid {
        for id in 0..self.len() {
            let x = self.point(id);
            self.values[id] = f(&x);
        }
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn per(&self) -> usize {
        self.k.pow(self.n as u32 - 1)
    }

    fn s_index(&self, id: usize) -> usize {
        id / self.per()
    }

    /// Signed position along d.
    pub fn s(&self, id: usize) -> f64 {
        (self.s_index(id) as f64 - self.m as f64) * self.h
    }

    /// Coordinates in the frame (d, e_2, ...).
    pub fn local(&self, id: usize) -> Vec<f64> {
        let mut out = vec![self.s(id)];
        let mut r = id % self.per();
        let half = (self.k / 2) as f64 * self.h;
        let mut t = vec![0.0; self.n - 1];
        for c in (0..self.n - 1).rev() {
            t[c] = ((r % self.k) as f64 + 0.5) * self.h - half;
            r /= self.k;
        }
        out.extend(t);
        out
    }

    pub fn point(&self, id: usize) -> Vec<f64> {
        let fr = complete_frame(self.n, &[self.d.clone()]);
        let loc = self.local(id);
        (0..self.n).map(|i| (0..self.n).map(|c| loc[c] * fr[c][i]).sum()).collect()
    }

    /// Checks the pairing table and nonnegativity.
    pub fn check(&self) -> Result<()> {
        let per = self.per();
        if self.values.len() != (2 * self.m + 1) * per || self.pair.len() != self.values.len() {
            return Err(Error::AsymmetricGrid);
        }
        for (id, &p) in self.pair.iter().enumerate() {
            if p >= self.pair.len() || self.pair[p] != id || p % per != id % per || self.s(p) != -self.s(id) {
                return Err(Error::AsymmetricGrid);
            }
        }
        if self.values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Precondition("values must be finite and nonnegative".into()));
        }
        Ok(())
    }

    fn weight(&self) -> f64 {
        self.h.powi(self.n as i32)
    }

    pub fn lp_norm_pow(&self, p: f64) -> f64 {
        self.weight() * self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>()
    }

    /// sum over axis edges of h^{N-2} (u_a - u_b)^2.
    pub fn gradient_energy(&self) -> f64 {
        let mut e = 0.0;
        self.for_each_edge(|a, b| e += (self.values[a] - self.values[b]).powi(2));
        e * self.h.powi(self.n as i32 - 2)
    }

    fn strides(&self) -> Vec<(usize, usize)> {
        // (stride, extent) for the s axis then the transverse axes
        let mut out = vec![(self.per(), 2 * self.m + 1)];
        for c in 0..self.n - 1 {
            out.push((self.k.pow((self.n - 2 - c) as u32), self.k));
        }
        out
    }

    fn for_each_edge(&self, mut f: impl FnMut(usize, usize)) {
        let st = self.strides();
        for id in 0..self.len() {
            for &(stride, extent) in &st {
                if (id / stride) % extent + 1 < extent {
                    f(id, id + stride);
                }
            }
        }
    }

    /// int (x.d)/|x|^3 u^2 with nodal weights.
    pub fn dipole_term(&self, u: &[f64]) -> f64 {
        let mut t = 0.0;
        for (id, v) in u.iter().enumerate() {
            let x = self.local(id);
            let r = norm(&x);
            t += x[0] / (r * r * r) * v * v;
        }
        t * self.weight()
    }

    /// (gradient - lambda dipole) / (int u^{2*})^{2/2*}.
    pub fn quotient(&self, lambda: f64) -> f64 {
        let p = critical_exponent(self.n);
        (self.gradient_energy() - lambda * self.dipole_term(&self.values)) / self.lp_norm_pow(p).powf(2.0 / p)
    }
}

/// Nodewise max on {x.d >= 0}, min on the complement.
pub fn polarize(g: &MirrorGrid) -> Result<MirrorGrid> {
    g.check()?;
    let mut out = g.clone();
    for id in 0..g.len() {
        let a = g.values[id];
        let b = g.values[g.pair[id]];
        out.values[id] = if g.s(id) >= 0.0 { a.max(b) } else { a.min(b) };
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarizationReport {
    /// |int u_d^{2*} - int u^{2*}| / int u^{2*}.
    pub critical_norm_gap: f64,
    pub l2_norm_gap: f64,
    /// Relative change of the exact P1 energy of the polarized interpolant.
    /// None above dimension 3, where the mixed simplex cuts are not evaluated.
    pub gradient_gap: Option<f64>,
    /// Energy of the nodal polarization minus the original (never positive).
    pub nodal_gradient_change: f64,
    /// int (x.d/|x|^3)(u_d^2 - u^2).
    pub dipole_gain: f64,
    /// int over H of (x.d/|x|^3)(u_d^2(x) - u_d^2(sigma x)).
    pub half_space: f64,
    pub quotient_before: f64,
    pub quotient_after: f64,
}

/// Exact Dirichlet energy of the half-space polarization of the P1 interpolant.
///
/// On a simplex T in H the polarization is max(U, U o sigma), the maximum of two affine
/// functions; the subset where U >= U o sigma has a closed-form volume, and sigma T carries
/// the minimum with the pieces exchanged.
fn polarized_interpolant_energy(g: &MirrorGrid) -> Option<(f64, f64)> {
    let n = g.n;
    let h = g.h;
    let st = g.strides();
    let perms = permutations(n);
    let vol = h.powi(n as i32) / perms.len() as f64;
    let mut before = 0.0;
    let mut after = 0.0;
    // cubes with lower s index >= m (upper half) and every transverse corner
    let mut corner = vec![0usize; n];
    let ext: Vec<usize> = st.iter().map(|(_, e)| *e).collect();
    'cubes: loop {
        if corner[0] >= g.m && corner.iter().zip(&ext).all(|(c, e)| c + 1 < *e) {
            let base: usize = corner.iter().zip(&st).map(|(c, (s, _))| c * s).sum();
            for pi in &perms {
                let mut verts = vec![base];
                let mut v = base;
                for &ax in pi {
                    v += st[ax].0;
                    verts.push(v);
                }
                let mirrored: Vec<usize> = verts.iter().map(|&x| g.pair[x]).collect();
                let u: Vec<f64> = verts.iter().map(|&x| g.values[x]).collect();
                let w: Vec<f64> = mirrored.iter().map(|&x| g.values[x]).collect();
                let gu = simplex_grad_sq(&u, h);
                let gw = simplex_grad_sq(&w, h);
                before += (gu + gw) * vol;
                let f: Vec<f64> = u.iter().zip(&w).map(|(a, b)| a - b).collect();
                let frac = positive_fraction(&f)?;
                // T: max, so U where f >= 0; sigma T: min, so U o sigma there
                after += (gu * frac + gw * (1.0 - frac)) * vol;
                after += (gw * frac + gu * (1.0 - frac)) * vol;
            }
        }
        for c in (0..n).rev() {
            corner[c] += 1;
            if corner[c] < ext[c] {
                continue 'cubes;
            }
            corner[c] = 0;
        }
        break;
    }
    Some((before, after))
}

// Vertex k of a Freudenthal simplex differs from vertex k - 1 by h along one axis.
fn simplex_grad_sq(u: &[f64], h: f64) -> f64 {
    (1..u.len()).map(|k| ((u[k] - u[k - 1]) / h).powi(2)).sum()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Volume fraction of {f >= 0} in a simplex for an affine f with vertex values f.
/// Exact in dimension <= 3; None for the mixed splits of higher dimensions.
fn positive_fraction(f: &[f64]) -> Option<f64> {
    let pos: Vec<usize> = (0..f.len()).filter(|&i| f[i] > 0.0).collect();
    let neg: Vec<usize> = (0..f.len()).filter(|&i| f[i] <= 0.0).collect();
    // corner cut: the sub-simplex at a lone vertex v scales edge j by f_v / (f_v - f_j)
    let corner = |v: usize, g: &dyn Fn(usize) -> f64| -> f64 {
        (0..f.len()).filter(|&j| j != v).map(|j| g(v) / (g(v) - g(j))).product()
    };
    match (pos.len(), neg.len()) {
        (0, _) => Some(0.0),
        (_, 0) => Some(1.0),
        (1, _) => Some(corner(pos[0], &|i| f[i])),
        (_, 1) if f[neg[0]] == 0.0 => Some(1.0),
        (_, 1) => Some(1.0 - corner(neg[0], &|i| -f[i])),
        (2, 2) => {
            // prism with ends (p0, x00, x01) and (p1, x10, x11), x_ij on edge (p_i, n_j)
            let bary = |i: usize| {
                let mut b = [0.0; 4];
                b[i] = 1.0;
                b
            };
            let cut = |p: usize, q: usize| {
                let t = f[p] / (f[p] - f[q]);
                let mut b = [0.0; 4];
                b[p] = 1.0 - t;
                b[q] = t;
                b
            };
            let (p0, p1, n0, n1) = (pos[0], pos[1], neg[0], neg[1]);
            let a = [bary(p0), cut(p0, n0), cut(p0, n1)];
            let b = [bary(p1), cut(p1, n0), cut(p1, n1)];
            let tets = [[a[0], a[1], a[2], b[0]], [a[1], a[2], b[0], b[1]], [a[2], b[0], b[1], b[2]]];
            Some(tets.iter().map(tet_fraction).sum::<f64>().clamp(0.0, 1.0))
        }
        _ => None,
    }
}

/// Volume of a tetrahedron given in barycentric coordinates, relative to the reference.
fn tet_fraction(t: &[[f64; 4]; 4]) -> f64 {
    let d: Vec<[f64; 3]> = (1..4).map(|k| [t[k][1] - t[0][1], t[k][2] - t[0][2], t[k][3] - t[0][3]]).collect();
    let det = d[0][0] * (d[1][1] * d[2][2] - d[1][2] * d[2][1]) - d[0][1] * (d[1][0] * d[2][2] - d[1][2] * d[2][0])
        + d[0][2] * (d[1][0] * d[2][1] - d[1][1] * d[2][0]);
    det.abs()
}

/// Norm identities and the two dipole inequalities used in the monotonicity argument.
pub fn polarization_identities(g: &MirrorGrid, lambda: f64) -> Result<PolarizationReport> {
    let pd = polarize(g)?;
    let p = critical_exponent(g.n);
    let c0 = g.lp_norm_pow(p);
    let c1 = pd.lp_norm_pow(p);
    let l0 = g.lp_norm_pow(2.0);
    let l1 = pd.lp_norm_pow(2.0);
    let energy = polarized_interpolant_energy(g);
    let u = &g.values;
    let ud = &pd.values;
    let mut gain = 0.0;
    let mut half = 0.0;
    for id in 0..g.len() {
        let x = g.local(id);
        let r = norm(&x);
        let wgt = x[0] / (r * r * r);
        gain += wgt * (ud[id] * ud[id] - u[id] * u[id]);
        if x[0] > 0.0 {
            let q = ud[g.pair[id]];
            half += wgt * (ud[id] * ud[id] - q * q);
        }
    }
    let w = g.weight();
    Ok(PolarizationReport {
        critical_norm_gap: rel(c1, c0),
        l2_norm_gap: rel(l1, l0),
        gradient_gap: energy.map(|(before, after)| rel(after, before)),
        nodal_gradient_change: pd.gradient_energy() - g.gradient_energy(),
        dipole_gain: gain * w,
        half_space: half * w,
        quotient_before: g.quotient(lambda),
        quotient_after: pd.quotient(lambda),
    })
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub n: usize,
    pub lambdas: Vec<f64>,
    pub levels: Vec<f64>,
    pub errors: Vec<f64>,
    pub nonincreasing: bool,
    /// Largest increase S(lambda_{i+1}) - S(lambda_i) against 3x the error bars.
    pub worst_increase: f64,
    /// Levels with the two directions e_1 and e_N at the first lambda.
    pub direction_levels: (f64, f64),
    pub direction_gap: f64,
    pub sobolev: f64,
    /// S - S(lambda) along the shrinking sequence.
    pub small_lambdas: Vec<f64>,
    pub small_deficits: Vec<f64>,
    pub small_errors: Vec<f64>,
}

/// S(lambda theta.d) along an increasing strength grid.
pub fn dipole_level_monotonicity(
    lambdas: &[f64],
    n: usize,
    hardy: f64,
    disc: &Discretization,
) -> Result<MonotonicityReport> {
    if lambdas.is_empty() || lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("lambdas must be increasing".into()));
    }
    if lambdas.iter().any(|l| !(*l > 0.0) || *l >= 1.0 / hardy) {
        return Err(Error::Precondition("every lambda must lie in (0, 1/Lambda_N)".into()));
    }
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    let mut en = vec![0.0; n];
    en[n - 1] = 1.0;
    let solve = |l: f64, d: &[f64]| one_pole::solve_one_pole(&AngularCoefficient::dipole(l, d.to_vec()), n, disc);
    let mut levels = Vec::new();
    let mut errors = Vec::new();
    for &l in lambdas {
        let p = solve(l, &en)?;
        levels.push(p.level);
        errors.push(p.disc_error);
    }
    let mut worst = f64::NEG_INFINITY;
    for i in 0..levels.len().saturating_sub(1) {
        let inc = levels[i + 1] - levels[i] - 3.0 * (errors[i] + errors[i + 1]);
        worst = worst.max(inc);
    }
    let a = solve(lambdas[0], &e1)?.level;
    let b = levels[0];
    let sobolev = one_pole::sobolev_constant(n);
    let small: Vec<f64> = [1e-2, 1e-3].iter().map(|f| f * lambdas[0]).collect();
    let mut deficits = Vec::new();
    let mut serr = Vec::new();
    for &l in &small {
        let p = solve(l, &en)?;
        deficits.push(sobolev - p.level);
        serr.push(p.disc_error);
    }
    Ok(MonotonicityReport {
        n,
        lambdas: lambdas.to_vec(),
        nonincreasing: levels.len() < 2 || worst <= 0.0,
        worst_increase: if levels.len() < 2 { 0.0 } else { worst },
        levels,
        errors,
        direction_levels: (a, b),
        direction_gap: (a - b).abs(),
        sobolev,
        small_lambdas: small,
        small_deficits: deficits,
        small_errors: serr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fraction_of_simplex() {
        // f = x + y + z - 1/2 on the unit corner simplex in R^3: {f >= 0} has 1 - 1/8
        let f = [-0.5, 0.5, 0.5, 0.5];
        assert!((positive_fraction(&f).unwrap() - 0.875).abs() < 1e-14);
        let f = [1.0, -1.0, -1.0];
        assert!((positive_fraction(&f).unwrap() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn pairing_is_an_involution() {
        let g = MirrorGrid::new(3, vec![0.0, 0.0, 1.0], 0.5, 3, 4).unwrap();
        g.check().unwrap();
        for id in 0..g.len() {
            assert_eq!(g.pair[g.pair[id]], id);
        }
    }
}
