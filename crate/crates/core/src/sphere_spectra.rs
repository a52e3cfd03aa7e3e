//! First eigenpair of -Laplace_{S^{N-1}} - h and the dipole Hardy constant.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::angular::AngularCoefficient;
use crate::error::{Error, Result};
use crate::harmonics;
use crate::special::{hardy_floor, sphere_area, GaussRule, OrthoFamily};
use crate::sphere_rule::SphereRule;

pub const DEFAULT_ZONAL_MODES: usize = 64;
pub const DEFAULT_HARMONIC_DEGREE: usize = 24;
const MAX_ZONAL_MODES: usize = 512;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Basis {
    /// Zonal functions P_k(theta . axis) / sqrt|S^{N-2}|, k < modes.
    Zonal { axis: Vec<f64>, modes: usize },
    /// Real spherical harmonics on S^2 up to degree l_max.
    Harmonic { l_max: usize },
}

impl Basis {
    pub fn size(&self) -> usize {
        match self {
            Basis::Zonal { modes, .. } => *modes,
            Basis::Harmonic { l_max } => harmonics::count(*l_max),
        }
    }

    /// Laplace-Beltrami eigenvalue of each basis function.
    pub fn laplace_eigenvalues(&self, n: usize) -> Vec<f64> {
        match self {
            Basis::Zonal { modes, .. } => (0..*modes).map(|k| (k * (k + n - 2)) as f64).collect(),
            Basis::Harmonic { l_max } => (0..harmonics::count(*l_max))
                .map(|i| {
                    let l = harmonics::degree_of(i);
                    (l * (l + 1)) as f64
                })
                .collect(),
        }
    }
}

/// Evaluates basis functions at points of the sphere.
#[derive(Clone, Debug)]
pub struct BasisEvaluator {
    basis: Basis,
    n: usize,
    family: Option<OrthoFamily>,
    scale: f64,
}

impl BasisEvaluator {
    pub fn new(basis: &Basis, n: usize) -> Self {
        match basis {
            Basis::Zonal { modes, .. } => BasisEvaluator {
                basis: basis.clone(),
                n,
                family: Some(OrthoFamily::gegenbauer((n as f64 - 2.0) / 2.0, *modes)),
                scale: 1.0 / sphere_area(n - 1).sqrt(),
            },
            Basis::Harmonic { .. } => BasisEvaluator { basis: basis.clone(), n, family: None, scale: 1.0 },
        }
    }

    pub fn eval_into(&self, theta: &[f64], out: &mut [f64]) {
        match &self.basis {
            Basis::Zonal { axis, modes } => {
                let s = crate::special::dot(theta, axis).clamp(-1.0, 1.0);
                self.eval_zonal(s, &mut out[..*modes]);
                let _ = modes;
            }
            Basis::Harmonic { l_max } => harmonics::eval_all(*l_max, theta, out),
        }
    }

    /// Zonal basis at s = theta . axis.
    pub fn eval_zonal(&self, s: f64, out: &mut [f64]) {
        let fam = self.family.as_ref().expect("zonal basis");
        let m = out.len();
        fam.eval_into(s, m, out);
        for v in out.iter_mut() {
            *v *= self.scale;
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SphereSpectrum {
    pub n: usize,
    pub mu1: f64,
    pub psi1: Vec<f64>,
    pub basis: Basis,
    /// Distance to the next eigenvalue of the discrete operator.
    pub gap: f64,
}

impl SphereSpectrum {
    pub fn psi_at(&self, theta: &[f64]) -> f64 {
        let ev = BasisEvaluator::new(&self.basis, self.n);
        let mut y = vec![0.0; self.basis.size()];
        ev.eval_into(theta, &mut y);
        y.iter().zip(&self.psi1).map(|(a, b)| a * b).sum()
    }

    /// Cached evaluator of psi_1 (avoids rebuilding the recurrence per call).
    pub fn psi_fn(&self) -> impl Fn(&[f64]) -> f64 + '_ {
        let ev = BasisEvaluator::new(&self.basis, self.n);
        let m = self.basis.size();
        move |x: &[f64]| {
            let mut y = vec![0.0; m];
            ev.eval_into(x, &mut y);
            y.iter().zip(&self.psi1).map(|(a, b)| a * b).sum()
        }
    }
}

/// All eigenpairs of the discrete angular operator, ascending.
#[derive(Clone, Debug)]
pub struct AngularModes {
    pub n: usize,
    pub basis: Basis,
    pub values: Vec<f64>,
    /// Column j holds the basis coefficients of mode j.
    pub vectors: DMatrix<f64>,
}

fn poly_degree(h: &AngularCoefficient) -> usize {
    match h.collapsed() {
        AngularCoefficient::Constant { .. } => 0,
        AngularCoefficient::Dipole { .. } | AngularCoefficient::DipoleSum { .. } => 1,
        AngularCoefficient::AxisymmetricTable(t) => t.values.len().saturating_sub(1),
        AngularCoefficient::HarmonicExpansion { l_max, .. } => l_max,
    }
}

/// Galerkin matrix of -Laplace - h in the given basis.
pub fn operator_matrix(h: &AngularCoefficient, n: usize, basis: &Basis) -> DMatrix<f64> {
    let m = basis.size();
    let lap = basis.laplace_eigenvalues(n);
    let mut a = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        a[(i, i)] = lap[i];
    }
    let hc = h.collapsed();
    if let AngularCoefficient::Constant { c, .. } = hc {
        for i in 0..m {
            a[(i, i)] -= c;
        }
        return a;
    }
    let deg = poly_degree(&hc);
    match basis {
        Basis::Zonal { axis, modes } => {
            let q = modes + deg / 2 + 2;
            let fam = OrthoFamily::gegenbauer((n as f64 - 2.0) / 2.0, q.max(*modes));
            let g = fam.gauss(q);
            let mut p = vec![0.0; *modes];
            // basis normalized on the sphere: the |S^{N-2}| factor cancels
            for (s, w) in g.nodes.iter().zip(&g.weights) {
                fam.eval_into(*s, *modes, &mut p);
                let f = hc.zonal_profile(axis, *s);
                for i in 0..m {
                    let wi = w * f * p[i];
                    for j in i..m {
                        a[(i, j)] -= wi * p[j];
                    }
                }
            }
        }
        Basis::Harmonic { l_max } => {
            let order = l_max + deg / 2 + 2;
            let rule = SphereRule::s2(order);
            let q = rule.len();
            let mut b = DMatrix::<f64>::zeros(q, m);
            let mut wb = DMatrix::<f64>::zeros(q, m);
            let mut y = vec![0.0; m];
            for (r, (x, w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
                harmonics::eval_all(*l_max, x, &mut y);
                let f = hc.value(x) * w;
                for k in 0..m {
                    b[(r, k)] = y[k];
                    wb[(r, k)] = f * y[k];
                }
            }
            let hm = b.transpose() * wb;
            for i in 0..m {
                for j in i..m {
                    a[(i, j)] -= hm[(i, j)];
                }
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            a[(i, j)] = a[(j, i)];
        }
    }
    a
}

/// Picks the basis: zonal when h is axisymmetric, harmonics on S^2 otherwise.
pub fn default_basis(h: &AngularCoefficient, n: usize, resolution: usize) -> Result<Basis> {
    if resolution < 8 {
        return Err(Error::DegenerateBasis(resolution));
    }
    if n < 3 {
        return Err(Error::UnsupportedGeometry(format!("N = {n}")));
    }
    if h.dim() != n {
        return Err(Error::InvalidCoefficient(format!(
            "coefficient dimension {} differs from N = {n}",
            h.dim()
        )));
    }
    match h.zonal_axis() {
        Some(axis) => Ok(Basis::Zonal { axis, modes: resolution }),
        None if n == 3 => Ok(Basis::Harmonic { l_max: resolution }),
        None => Err(Error::UnsupportedGeometry(
            "general coefficients are supported only for N = 3".into(),
        )),
    }
}

pub fn angular_modes(h: &AngularCoefficient, n: usize, basis: &Basis) -> AngularModes {
    let a = operator_matrix(h, n, basis);
    let eig = SymmetricEigen::new(a);
    let m = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<f64>::zeros(m, m);
    for (c, &i) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(i);
        // deterministic sign: largest-magnitude entry positive
        let mut big = 0;
        for k in 0..m {
            if col[k].abs() > col[big].abs() + 1e-14 {
                big = k;
            }
        }
        let sgn = if col[big] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..m {
            vectors[(k, c)] = sgn * col[k];
        }
    }
    AngularModes { n, basis: basis.clone(), values, vectors }
}

/// Quadrature nodes used for positivity checks of psi_1.
fn check_nodes(basis: &Basis, n: usize) -> Vec<Vec<f64>> {
    match basis {
        Basis::Zonal { axis, modes } => SphereRule::adapted(n, &[axis.clone()], modes + 2).nodes,
        Basis::Harmonic { l_max } => SphereRule::s2(l_max + 2).nodes,
    }
}

/// Galerkin first eigenpair in an explicit basis.
pub fn mu1_in_basis(h: &AngularCoefficient, n: usize, basis: &Basis) -> Result<SphereSpectrum> {
    let modes = angular_modes(h, n, basis);
    let mu1 = modes.values[0];
    let gap = if modes.values.len() > 1 { modes.values[1] - mu1 } else { f64::INFINITY };
    if gap <= 1e-12 {
        return Err(Error::SpectralDegeneracy { gap });
    }
    let mut psi1: Vec<f64> = modes.vectors.column(0).iter().copied().collect();
    let sum: f64 = psi1.iter().sum::<f64>() + psi1[0];
    if psi1[0] < 0.0 || (psi1[0] == 0.0 && sum < 0.0) {
        for v in psi1.iter_mut() {
            *v = -*v;
        }
    }
    let spec = SphereSpectrum { n, mu1, psi1, basis: basis.clone(), gap };
    let f = spec.psi_fn();
    for x in check_nodes(basis, n) {
        if f(&x) <= 0.0 {
            return Err(Error::SpectralDegeneracy { gap });
        }
    }
    drop(f);
    Ok(spec)
}

/// First eigenpair with `resolution` basis functions (zonal modes, or harmonic degree).
pub fn mu1_spectrum(h: &AngularCoefficient, n: usize, resolution: usize) -> Result<SphereSpectrum> {
    h.validate()?;
    let basis = default_basis(h, n, resolution)?;
    mu1_in_basis(h, n, &basis)
}

/// Default resolution with automatic doubling while the eigenvalue still moves by more
/// than 1e-8. Harmonic coefficients use the default degree.
pub fn mu1_auto(h: &AngularCoefficient, n: usize) -> Result<SphereSpectrum> {
    h.validate()?;
    let zonal = h.zonal_axis().is_some();
    if zonal {
        let mut m = DEFAULT_ZONAL_MODES;
        let mut prev = mu1_spectrum(h, n, m)?;
        while m < MAX_ZONAL_MODES {
            m *= 2;
            let next = mu1_spectrum(h, n, m)?;
            if (prev.mu1 - next.mu1).abs() <= 1e-8 {
                return Ok(next);
            }
            prev = next;
        }
        Ok(prev)
    } else {
        mu1_spectrum(h, n, DEFAULT_HARMONIC_DEGREE)
    }
}

/// Refinement change reported by `mu1_auto` for harmonic coefficients.
pub fn harmonic_refinement_change(h: &AngularCoefficient) -> Result<f64> {
    let coarse = mu1_spectrum(h, 3, DEFAULT_HARMONIC_DEGREE / 2)?;
    let fine = mu1_spectrum(h, 3, DEFAULT_HARMONIC_DEGREE)?;
    Ok((coarse.mu1 - fine.mu1).abs())
}

pub fn sigma_of(mu1: f64, n: usize) -> Result<f64> {
    let floor = hardy_floor(n);
    if mu1 <= -floor {
        return Err(Error::SubcriticalEigenvalue { mu1, floor: -floor });
    }
    let k = (n as f64 - 2.0) / 2.0;
    // rationalized form keeps sigma (sigma + N - 2) = mu1 accurate when mu1 is small
    Ok(mu1 / (k + (floor + mu1).sqrt()))
}

fn unit_e1(n: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[0] = 1.0;
    e
}

/// First eigenvalue for the dipole lambda (theta . d); independent of d.
pub fn mu1_dipole(lambda: f64, n: usize) -> Result<f64> {
    mu1_dipole_at(lambda, n, DEFAULT_ZONAL_MODES)
}

pub fn mu1_dipole_at(lambda: f64, n: usize, modes: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::UnsupportedGeometry(format!("N = {n}")));
    }
    let h = AngularCoefficient::dipole(lambda.abs(), unit_e1(n));
    Ok(mu1_spectrum(&h, n, modes)?.mu1)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HardyConstant {
    pub n: usize,
    /// Lambda_N.
    pub value: f64,
    /// lambda* = 1 / Lambda_N.
    pub critical_strength: f64,
    pub residual: f64,
    pub tol: f64,
    /// Range of Lambda on which the root was bracketed.
    pub scan_range: (f64, f64),
    pub monotone: bool,
    pub trial_lower_bound: f64,
}

/// Lambda_N by bisection in Lambda on (lo, 4/(N-2)^2], with
/// g(Lambda) = mu1^{1/Lambda} + ((N-2)/2)^2.
pub fn hardy_dipole_constant(n: usize, tol: f64) -> Result<HardyConstant> {
    if n < 3 {
        return Err(Error::UnsupportedGeometry(format!("N = {n}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Precondition("tol must be positive".into()));
    }
    let floor = hardy_floor(n);
    let g = |cap: f64| -> Result<f64> { Ok(mu1_dipole(1.0 / cap, n)? + floor) };
    let hi = 4.0 / ((n as f64 - 2.0) * (n as f64 - 2.0));
    let g_hi = g(hi)?;
    if g_hi <= 0.0 {
        return Err(Error::BracketFailure { lo: hi, hi });
    }
    let mut lo = hi;
    let mut g_lo = g_hi;
    let min_lo = hi * 1e-4;
    while g_lo > 0.0 {
        lo *= 0.5;
        if lo < min_lo {
            return Err(Error::BracketFailure { lo: min_lo, hi });
        }
        g_lo = g(lo)?;
    }
    let scan_range = (lo, hi);
    let (mut a, mut b) = (lo, hi);
    let mut mid = 0.5 * (a + b);
    let mut gm = g(mid)?;
    for _ in 0..200 {
        if gm.abs() < tol * 1e-3 || (b - a) < 1e-15 * b {
            break;
        }
        if gm > 0.0 {
            b = mid;
        } else {
            a = mid;
        }
        mid = 0.5 * (a + b);
        gm = g(mid)?;
    }
    let lam_star = 1.0 / mid;
    // monotonicity of lambda -> mu1 on a 50-point grid up to beyond the root
    let mut monotone = true;
    let mut prev = f64::INFINITY;
    for i in 0..50 {
        let l = 1.5 * lam_star * i as f64 / 49.0;
        let v = mu1_dipole(l, n)?;
        if v > prev + 1e-12 {
            monotone = false;
        }
        prev = v;
    }
    let trial = trial_family_bound(n);
    Ok(HardyConstant {
        n,
        value: mid,
        critical_strength: lam_star,
        residual: gm.abs(),
        tol,
        scan_range,
        monotone,
        trial_lower_bound: trial,
    })
}

/// Best Hardy quotient over 5 radial x 10 angular separable trial functions
/// u = r^{-(N-2)/2} sech(gamma ln r) exp(beta theta . d).
pub fn trial_family_bound(n: usize) -> f64 {
    let floor = hardy_floor(n);
    let gammas = [0.02, 0.05, 0.1, 0.2, 0.5];
    let betas = [0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0];
    // radial: ratio D/A with D = int w'^2 + floor w^2, A = int w^2
    let gl = GaussRule::legendre(16);
    let radial: Vec<f64> = gammas
        .iter()
        .map(|&gm| {
            let tmax = 40.0 / gm;
            let br = crate::special::panels(-tmax, tmax, 0.5 / gm);
            let a = crate::special::composite_gauss(&br, &gl, |t| (1.0 / (gm * t).cosh()).powi(2));
            let d = crate::special::composite_gauss(&br, &gl, |t| {
                let s = 1.0 / (gm * t).cosh();
                let w1 = -gm * s * (gm * t).tanh();
                w1 * w1 + floor * s * s
            });
            d / a
        })
        .collect();
    let fam = OrthoFamily::gegenbauer((n as f64 - 2.0) / 2.0, 64);
    let g = fam.gauss(64);
    let mut best = 0.0f64;
    for &beta in &betas {
        let (mut b, mut p, mut gr) = (0.0, 0.0, 0.0);
        for (s, w) in g.nodes.iter().zip(&g.weights) {
            let th = (beta * s).exp();
            b += w * th * th;
            p += w * s * th * th;
            gr += w * (beta * th).powi(2) * (1.0 - s * s);
        }
        for &da in &radial {
            let q = p / (da * b + gr);
            best = best.max(q);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_coefficient_has_constant_ground_state() {
        let h = AngularCoefficient::constant(3, 0.0);
        let s = mu1_spectrum(&h, 3, 16).unwrap();
        assert!(s.mu1.abs() < 1e-14);
        let c = s.psi_at(&[0.0, 0.6, 0.8]);
        assert!((c - 1.0 / (4.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn constant_shift() {
        let h = AngularCoefficient::constant(5, 0.7);
        let s = mu1_spectrum(&h, 5, 16).unwrap();
        assert!((s.mu1 + 0.7).abs() < 1e-13);
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma_of(0.0, 5).unwrap(), 0.0);
        assert!((sigma_of(0.75, 3).unwrap() - 0.5).abs() < 1e-15);
        assert!((sigma_of(-0.75, 4).unwrap() + 0.5).abs() < 1e-15);
        assert!(matches!(sigma_of(-1.0, 4), Err(Error::SubcriticalEigenvalue { .. })));
    }

    #[test]
    fn degenerate_resolution_rejected() {
        let h = AngularCoefficient::constant(3, 0.0);
        assert!(matches!(mu1_spectrum(&h, 3, 7), Err(Error::DegenerateBasis(7))));
    }

    #[test]
    fn general_coefficient_needs_n3() {
        let t = crate::angular::Table::from_fn(vec![1.0, 0.0, 0.0, 0.0], 8, |s| s * s);
        let d = AngularCoefficient::dipole(0.3, vec![0.0, 1.0, 0.0, 0.0]);
        let h = AngularCoefficient::sum(&[AngularCoefficient::AxisymmetricTable(t), d]);
        assert!(matches!(h, Err(Error::UnsupportedGeometry(_))));
    }
}
