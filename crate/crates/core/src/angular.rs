//! Angular coefficients h on S^{N-1}.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonics;
use crate::special::{norm, sphere_area, OrthoFamily};
use crate::sphere_rule::{complete_frame, SphereRule};

const UNIT_TOL: f64 = 1e-12;

/// Samples of a zonal profile f(s), s = theta . axis, on Gauss-Gegenbauer nodes.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(from = "TableRaw", into = "TableRaw")]
pub struct Table {
    pub axis: Vec<f64>,
    pub values: Vec<f64>,
    coeffs: Vec<f64>,
    family: OrthoFamily,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableRaw {
    axis: Vec<f64>,
    values: Vec<f64>,
}

impl From<TableRaw> for Table {
    fn from(r: TableRaw) -> Self {
        Table::new(r.axis, r.values)
    }
}

impl From<Table> for TableRaw {
    fn from(t: Table) -> Self {
        TableRaw { axis: t.axis, values: t.values }
    }
}

impl PartialEq for Table {
    fn eq(&self, o: &Self) -> bool {
        self.axis == o.axis && self.values == o.values
    }
}

impl Table {
    pub fn new(axis: Vec<f64>, values: Vec<f64>) -> Self {
        let n = axis.len().max(3);
        let m = values.len();
        let family = OrthoFamily::gegenbauer((n as f64 - 2.0) / 2.0, m.max(1));
        let coeffs = if m == 0 {
            Vec::new()
        } else {
            let g = family.gauss(m);
            let mut c = vec![0.0; m];
            let mut p = vec![0.0; m];
            for ((s, w), f) in g.nodes.iter().zip(&g.weights).zip(&values) {
                family.eval_into(*s, m, &mut p);
                for k in 0..m {
                    c[k] += w * f * p[k];
                }
            }
            c
        };
        Table { axis, values, coeffs, family }
    }

    /// Nodes on which the samples must be given, for dimension n and m samples.
    pub fn nodes(n: usize, m: usize) -> Vec<f64> {
        OrthoFamily::gegenbauer((n as f64 - 2.0) / 2.0, m).gauss(m).nodes
    }

    pub fn from_fn<F: Fn(f64) -> f64>(axis: Vec<f64>, m: usize, f: F) -> Self {
        let nodes = Self::nodes(axis.len(), m);
        let values = nodes.iter().map(|&s| f(s)).collect();
        Table::new(axis, values)
    }

    pub fn profile(&self, s: f64) -> f64 {
        let m = self.coeffs.len();
        let mut p = vec![0.0; m];
        self.family.eval_into(s.clamp(-1.0, 1.0), m, &mut p);
        p.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AngularCoefficient {
    Constant { n: usize, c: f64 },
    Dipole { lambda: f64, d: Vec<f64> },
    DipoleSum { terms: Vec<(f64, Vec<f64>)> },
    AxisymmetricTable(Table),
    /// Real spherical-harmonic coefficients on S^2, indexed as in `harmonics::index`.
    HarmonicExpansion { l_max: usize, coeffs: Vec<f64> },
}

impl AngularCoefficient {
    pub fn constant(n: usize, c: f64) -> Self {
        AngularCoefficient::Constant { n, c }
    }

    pub fn dipole(lambda: f64, d: Vec<f64>) -> Self {
        AngularCoefficient::Dipole { lambda, d }
    }

    pub fn dim(&self) -> usize {
        match self {
            AngularCoefficient::Constant { n, .. } => *n,
            AngularCoefficient::Dipole { d, .. } => d.len(),
            AngularCoefficient::DipoleSum { terms } => terms.first().map(|t| t.1.len()).unwrap_or(3),
            AngularCoefficient::AxisymmetricTable(t) => t.axis.len(),
            AngularCoefficient::HarmonicExpansion { .. } => 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if n < 3 {
            return Err(Error::UnsupportedGeometry(format!("dimension {n} < 3")));
        }
        let unit = |d: &[f64]| -> Result<()> {
            if d.len() != n {
                return Err(Error::InvalidCoefficient("direction dimension mismatch".into()));
            }
            let r = norm(d);
            if (r - 1.0).abs() > UNIT_TOL {
                return Err(Error::NonUnitDirection(r));
            }
            Ok(())
        };
        let finite = |x: f64| -> Result<()> {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidCoefficient("non-finite value".into()))
            }
        };
        match self {
            AngularCoefficient::Constant { c, .. } => finite(*c),
            AngularCoefficient::Dipole { lambda, d } => {
                finite(*lambda)?;
                unit(d)
            }
            AngularCoefficient::DipoleSum { terms } => {
                if terms.is_empty() {
                    return Err(Error::InvalidCoefficient("empty dipole sum".into()));
                }
                for (l, d) in terms {
                    finite(*l)?;
                    unit(d)?;
                }
                Ok(())
            }
            AngularCoefficient::AxisymmetricTable(t) => {
                unit(&t.axis)?;
                if t.values.len() < 8 {
                    return Err(Error::InvalidCoefficient(format!(
                        "table has {} samples, need at least 8",
                        t.values.len()
                    )));
                }
                t.values.iter().try_for_each(|v| finite(*v))
            }
            AngularCoefficient::HarmonicExpansion { l_max, coeffs } => {
                if coeffs.len() != harmonics::count(*l_max) {
                    return Err(Error::InvalidCoefficient(format!(
                        "expected {} harmonic coefficients, got {}",
                        harmonics::count(*l_max),
                        coeffs.len()
                    )));
                }
                coeffs.iter().try_for_each(|v| finite(*v))
            }
        }
    }

    /// Collapses a dipole sum to a single dipole (or zero constant).
    pub fn collapsed(&self) -> AngularCoefficient {
        if let AngularCoefficient::DipoleSum { terms } = self {
            let n = self.dim();
            let mut v = vec![0.0; n];
            for (l, d) in terms {
                for i in 0..n {
                    v[i] += l * d[i];
                }
            }
            let r = norm(&v);
            if r == 0.0 {
                AngularCoefficient::Constant { n, c: 0.0 }
            } else {
                AngularCoefficient::Dipole { lambda: r, d: v.iter().map(|x| x / r).collect() }
            }
        } else {
            self.clone()
        }
    }

    /// Pointwise value without the unit-norm check.
    pub fn value(&self, theta: &[f64]) -> f64 {
        match self {
            AngularCoefficient::Constant { c, .. } => *c,
            AngularCoefficient::Dipole { lambda, d } => lambda * crate::special::dot(theta, d),
            AngularCoefficient::DipoleSum { terms } => terms
                .iter()
                .map(|(l, d)| l * crate::special::dot(theta, d))
                .sum(),
            AngularCoefficient::AxisymmetricTable(t) => t.profile(crate::special::dot(theta, &t.axis)),
            AngularCoefficient::HarmonicExpansion { l_max, coeffs } => {
                let y = harmonics::eval_vec(*l_max, theta);
                y.iter().zip(coeffs).map(|(a, b)| a * b).sum()
            }
        }
    }

    /// Symmetry axis when h is zonal (None for a genuinely general coefficient).
    /// Constants report e_1.
    pub fn zonal_axis(&self) -> Option<Vec<f64>> {
        let n = self.dim();
        match self.collapsed() {
            AngularCoefficient::Constant { .. } => {
                let mut e = vec![0.0; n];
                e[0] = 1.0;
                Some(e)
            }
            AngularCoefficient::Dipole { d, .. } => Some(d),
            AngularCoefficient::AxisymmetricTable(t) => Some(t.axis.clone()),
            AngularCoefficient::HarmonicExpansion { l_max, coeffs } => {
                // zonal about e_3 when only m = 0 terms are present
                let mut ok = true;
                for l in 0..=l_max {
                    for m in 1..=l as i64 {
                        if coeffs[harmonics::index(l, m)] != 0.0 || coeffs[harmonics::index(l, -m)] != 0.0 {
                            ok = false;
                        }
                    }
                }
                ok.then(|| vec![0.0, 0.0, 1.0])
            }
            AngularCoefficient::DipoleSum { .. } => unreachable!(),
        }
    }

    /// Zonal profile f(s) = h(s axis + sqrt(1-s^2) e) for the given axis.
    pub fn zonal_profile(&self, axis: &[f64], s: f64) -> f64 {
        let fr = complete_frame(axis.len(), &[axis.to_vec()]);
        let c = (1.0 - s * s).max(0.0).sqrt();
        let x: Vec<f64> = (0..axis.len()).map(|i| s * fr[0][i] + c * fr[1][i]).collect();
        self.value(&x)
    }

    /// h o A, i.e. theta -> h(A theta). `a` is row-major N x N orthogonal.
    pub fn rotated(&self, a: &[Vec<f64>]) -> AngularCoefficient {
        let at = |v: &[f64]| -> Vec<f64> {
            let n = v.len();
            (0..n).map(|j| (0..n).map(|i| a[i][j] * v[i]).sum()).collect()
        };
        match self {
            AngularCoefficient::Constant { .. } => self.clone(),
            AngularCoefficient::Dipole { lambda, d } => AngularCoefficient::Dipole { lambda: *lambda, d: at(d) },
            AngularCoefficient::DipoleSum { terms } => AngularCoefficient::DipoleSum {
                terms: terms.iter().map(|(l, d)| (*l, at(d))).collect(),
            },
            AngularCoefficient::AxisymmetricTable(t) => {
                AngularCoefficient::AxisymmetricTable(Table::new(at(&t.axis), t.values.clone()))
            }
            AngularCoefficient::HarmonicExpansion { l_max, .. } => {
                let f = |x: &[f64]| {
                    let ax: Vec<f64> = (0..3).map(|i| (0..3).map(|j| a[i][j] * x[j]).sum()).collect();
                    self.value(&ax)
                };
                harmonic_projection(*l_max, f)
            }
        }
    }

    pub fn plus_constant(&self, c: f64) -> AngularCoefficient {
        let n = self.dim();
        match self.collapsed() {
            AngularCoefficient::Constant { c: c0, .. } => AngularCoefficient::Constant { n, c: c0 + c },
            AngularCoefficient::Dipole { lambda, d } => {
                AngularCoefficient::AxisymmetricTable(Table::from_fn(d, 16, |s| lambda * s + c))
            }
            AngularCoefficient::AxisymmetricTable(t) => {
                AngularCoefficient::AxisymmetricTable(Table::new(t.axis.clone(), t.values.iter().map(|v| v + c).collect()))
            }
            AngularCoefficient::HarmonicExpansion { l_max, mut coeffs } => {
                coeffs[0] += c * (4.0 * std::f64::consts::PI).sqrt();
                AngularCoefficient::HarmonicExpansion { l_max, coeffs }
            }
            AngularCoefficient::DipoleSum { .. } => unreachable!(),
        }
    }

    /// Integral of h over the sphere.
    pub fn integral(&self) -> f64 {
        let n = self.dim();
        match self.collapsed() {
            AngularCoefficient::Constant { c, .. } => c * sphere_area(n),
            AngularCoefficient::Dipole { .. } => 0.0,
            AngularCoefficient::AxisymmetricTable(t) => {
                let fam = OrthoFamily::gegenbauer((n as f64 - 2.0) / 2.0, 1);
                t.coeffs.first().copied().unwrap_or(0.0) * fam.mu0.sqrt() * sphere_area(n - 1)
            }
            AngularCoefficient::HarmonicExpansion { coeffs, .. } => coeffs[0] * (4.0 * std::f64::consts::PI).sqrt(),
            AngularCoefficient::DipoleSum { .. } => unreachable!(),
        }
    }

    /// Maximum of h over the sphere.
    pub fn max_value(&self) -> f64 {
        match self.collapsed() {
            AngularCoefficient::Constant { c, .. } => c,
            AngularCoefficient::Dipole { lambda, .. } => lambda.abs(),
            AngularCoefficient::AxisymmetricTable(t) => {
                let m = 4000;
                let mut best = f64::NEG_INFINITY;
                for i in 0..=m {
                    let s = -1.0 + 2.0 * i as f64 / m as f64;
                    best = best.max(t.profile(s));
                }
                best
            }
            h @ AngularCoefficient::HarmonicExpansion { .. } => {
                let rule = SphereRule::s2(80);
                rule.nodes.iter().map(|x| h.value(x)).fold(f64::NEG_INFINITY, f64::max)
            }
            AngularCoefficient::DipoleSum { .. } => unreachable!(),
        }
    }

    /// Pointwise sum of coefficients, when it is representable.
    pub fn sum(list: &[AngularCoefficient]) -> Result<AngularCoefficient> {
        let n = list.first().map(|h| h.dim()).ok_or_else(|| Error::InvalidCoefficient("empty sum".into()))?;
        let mut c = 0.0;
        let mut terms = Vec::new();
        let mut other = Vec::new();
        for h in list {
            if h.dim() != n {
                return Err(Error::InvalidCoefficient("dimension mismatch in sum".into()));
            }
            match h {
                AngularCoefficient::Constant { c: x, .. } => c += x,
                AngularCoefficient::Dipole { lambda, d } => terms.push((*lambda, d.clone())),
                AngularCoefficient::DipoleSum { terms: t } => terms.extend(t.iter().cloned()),
                _ => other.push(h.clone()),
            }
        }
        let lin = if terms.is_empty() {
            AngularCoefficient::Constant { n, c: 0.0 }
        } else {
            AngularCoefficient::DipoleSum { terms }
        };
        if other.is_empty() {
            return Ok(if c == 0.0 { lin } else { lin.plus_constant(c) });
        }
        let lin_axis = lin.zonal_axis();
        if other.len() == 1 {
            if let (AngularCoefficient::AxisymmetricTable(t), Some(ax)) = (&other[0], &lin_axis) {
                let collapsed = lin.collapsed();
                let aligned = matches!(collapsed, AngularCoefficient::Constant { .. })
                    || (crate::special::dot(ax, &t.axis).abs() - 1.0).abs() < 1e-12;
                if aligned {
                    let tab = Table::from_fn(t.axis.clone(), t.values.len().max(16), |s| {
                        t.profile(s) + collapsed.zonal_profile(&t.axis, s) + c
                    });
                    return Ok(AngularCoefficient::AxisymmetricTable(tab));
                }
            }
        }
        if n == 3 {
            let l_max = other
                .iter()
                .map(|h| match h {
                    AngularCoefficient::HarmonicExpansion { l_max, .. } => *l_max,
                    _ => 24,
                })
                .max()
                .unwrap_or(24);
            let all: Vec<AngularCoefficient> = list.to_vec();
            return Ok(harmonic_projection(l_max, |x| all.iter().map(|h| h.value(x)).sum()));
        }
        Err(Error::UnsupportedGeometry(
            "sum of non-coaxial tables is only representable for N = 3".into(),
        ))
    }
}

/// Projection of f onto real harmonics of degree <= l_max (exact for band-limited f).
pub fn harmonic_projection<F: Fn(&[f64]) -> f64>(l_max: usize, f: F) -> AngularCoefficient {
    let rule = SphereRule::s2(l_max + 2);
    let c = harmonics::count(l_max);
    let mut coeffs = vec![0.0; c];
    let mut y = vec![0.0; c];
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        harmonics::eval_all(l_max, x, &mut y);
        let fx = f(x);
        for k in 0..c {
            coeffs[k] += w * fx * y[k];
        }
    }
    AngularCoefficient::HarmonicExpansion { l_max, coeffs }
}

/// Public checked evaluation.
pub fn evaluate_h(h: &AngularCoefficient, theta: &[f64]) -> Result<f64> {
    let r = norm(theta);
    if (r - 1.0).abs() > UNIT_TOL {
        return Err(Error::NonUnitDirection(r));
    }
    Ok(h.collapsed().value(theta))
}

/// Householder rotation-reflection A with A e_1 = v / |v| (row-major).
pub fn householder_to(v: &[f64]) -> Vec<Vec<f64>> {
    let n = v.len();
    let r = norm(v);
    let u: Vec<f64> = v.iter().map(|x| x / r).collect();
    let mut w = u.clone();
    w[0] -= 1.0;
    let wn = norm(&w);
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        a[i][i] = 1.0;
    }
    if wn < 1e-14 {
        return a;
    }
    for i in 0..n {
        for j in 0..n {
            a[i][j] -= 2.0 * w[i] * w[j] / (wn * wn);
        }
    }
    a
}

pub fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| crate::special::dot(row, x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    #[test]
    fn dipole_sum_cancels() {
        let h = AngularCoefficient::DipoleSum { terms: vec![(1.0, e(3, 0)), (1.0, vec![-1.0, 0.0, 0.0])] };
        let x = [0.6, 0.0, 0.8];
        assert_eq!(evaluate_h(&h, &x).unwrap(), 0.0);
    }

    #[test]
    fn dipole_at_its_axis() {
        let h = AngularCoefficient::dipole(2.0, e(3, 2));
        assert_eq!(evaluate_h(&h, &[0.0, 0.0, 1.0]).unwrap(), 2.0);
        assert!(matches!(evaluate_h(&h, &[0.0, 0.0, 2.0]), Err(Error::NonUnitDirection(_))));
    }

    #[test]
    fn table_interpolates_polynomials() {
        let t = Table::from_fn(e(4, 1), 12, |s| 1.0 + s - 2.0 * s.powi(5));
        for &s in &[-0.9, -0.1, 0.33, 0.97] {
            assert!((t.profile(s) - (1.0 + s - 2.0 * s.powi(5))).abs() < 1e-12);
        }
    }

    #[test]
    fn integral_of_table_matches_constant() {
        let t = AngularCoefficient::AxisymmetricTable(Table::from_fn(e(5, 0), 10, |_| 2.5));
        assert!((t.integral() - 2.5 * sphere_area(5)).abs() < 1e-10);
    }

    #[test]
    fn householder_maps_e1() {
        let v = [0.3, -0.4, 1.2, 0.1];
        let a = householder_to(&v);
        let r = norm(&v);
        let col: Vec<f64> = (0..4).map(|i| a[i][0]).collect();
        for i in 0..4 {
            assert!((col[i] - v[i] / r).abs() < 1e-14);
        }
    }
}
