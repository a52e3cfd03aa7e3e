//! Multi-pole quadratic form on axisymmetric configurations: Q1 elements on a graded
//! (rho, z) half-plane mesh with weight |S^{N-2}| rho^{N-2}.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angular::AngularCoefficient;
use crate::asymptotics::{self, coefficient_dirs, Regime};
use crate::error::{Error, Result};
use crate::linalg::{Banded, BandedCholesky};
use crate::one_pole::GroundStateProfile;
use crate::profiles::Profile;
use crate::special::{critical_exponent, dot, norm, sphere_area, GaussRule};
use crate::sphere_rule::complete_frame;
use crate::sphere_spectra;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pole {
    pub a: Vec<f64>,
    pub h: AngularCoefficient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    AllSpace,
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Domain {
    pub fn is_bounded(&self) -> bool {
        !matches!(self, Domain::AllSpace)
    }

    /// Strict interior test.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Domain::AllSpace => true,
            Domain::Ball { center, radius } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
                norm(&d) < *radius
            }
            Domain::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| v > l && v < h),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularConfiguration {
    pub n: usize,
    pub poles: Vec<Pole>,
    pub domain: Domain,
}

/// Line through all poles: a_i = origin + z_i dir.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub origin: Vec<f64>,
    pub dir: Vec<f64>,
    pub perp: Vec<f64>,
    pub z: Vec<f64>,
}

impl SingularConfiguration {
    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::UnsupportedGeometry("N must be at least 3".into()));
        }
        if self.poles.is_empty() {
            return Err(Error::Precondition("at least one pole is required".into()));
        }
        for (i, p) in self.poles.iter().enumerate() {
            if p.a.len() != self.n {
                return Err(Error::Precondition(format!("pole {i} has the wrong dimension")));
            }
            if p.h.dim() != self.n {
                return Err(Error::Precondition(format!("coefficient {i} has dimension {}", p.h.dim())));
            }
            p.h.validate()?;
            if !self.domain.contains(&p.a) {
                return Err(Error::Precondition(format!("pole {i} is not inside the domain")));
            }
        }
        for i in 0..self.poles.len() {
            for j in 0..i {
                let d: Vec<f64> = self.poles[i].a.iter().zip(&self.poles[j].a).map(|(x, y)| x - y).collect();
                if norm(&d) <= 1e-9 {
                    return Err(Error::Precondition(format!("poles {j} and {i} coincide")));
                }
            }
        }
        Ok(())
    }

    pub fn centroid(&self) -> Vec<f64> {
        let k = self.poles.len() as f64;
        (0..self.n).map(|i| self.poles.iter().map(|p| p.a[i]).sum::<f64>() / k).collect()
    }

    pub fn spread(&self) -> f64 {
        let c = self.centroid();
        self.poles
            .iter()
            .map(|p| {
                let d: Vec<f64> = p.a.iter().zip(&c).map(|(x, y)| x - y).collect();
                norm(&d)
            })
            .fold(0.0, f64::max)
    }

    pub fn translated(&self, v: &[f64]) -> SingularConfiguration {
        let mut out = self.clone();
        for p in &mut out.poles {
            for (x, s) in p.a.iter_mut().zip(v) {
                *x += s;
            }
        }
        out.domain = match &self.domain {
            Domain::AllSpace => Domain::AllSpace,
            Domain::Ball { center, radius } => Domain::Ball {
                center: center.iter().zip(v).map(|(a, b)| a + b).collect(),
                radius: *radius,
            },
            Domain::Box { lo, hi } => Domain::Box {
                lo: lo.iter().zip(v).map(|(a, b)| a + b).collect(),
                hi: hi.iter().zip(v).map(|(a, b)| a + b).collect(),
            },
        };
        out
    }

    /// The common axis of an axisymmetric configuration.
    pub fn axis(&self) -> Result<Axis> {
        let n = self.n;
        let c = self.centroid();
        let dir = if self.poles.len() >= 2 {
            let mut best = vec![0.0; n];
            let mut bl = 0.0;
            for p in &self.poles {
                let d: Vec<f64> = p.a.iter().zip(&self.poles[0].a).map(|(x, y)| x - y).collect();
                if norm(&d) > bl {
                    bl = norm(&d);
                    best = d;
                }
            }
            best.iter().map(|x| x / bl).collect::<Vec<f64>>()
        } else {
            match coefficient_dirs(&self.poles[0].h) {
                Some(d) if d.len() == 1 => d[0].clone(),
                Some(d) if d.is_empty() => {
                    let mut e = vec![0.0; n];
                    e[n - 1] = 1.0;
                    e
                }
                _ => return Err(Error::NotAxisymmetric("coefficient is not zonal".into())),
            }
        };
        let mut z = Vec::new();
        for (i, p) in self.poles.iter().enumerate() {
            let d: Vec<f64> = p.a.iter().zip(&c).map(|(x, y)| x - y).collect();
            let zi = dot(&d, &dir);
            let off: Vec<f64> = d.iter().zip(&dir).map(|(x, e)| x - zi * e).collect();
            if norm(&off) > 1e-12 * (1.0 + norm(&d)) {
                return Err(Error::NotAxisymmetric(format!("pole {i} is off the axis")));
            }
            match coefficient_dirs(&p.h) {
                Some(ds) => {
                    for dd in ds {
                        let cos = dot(&dd, &dir).abs();
                        if (cos - 1.0).abs() > 1e-12 {
                            return Err(Error::NotAxisymmetric(format!("coefficient {i} is not zonal about the axis")));
                        }
                    }
                }
                None => return Err(Error::NotAxisymmetric(format!("coefficient {i} is not zonal"))),
            }
            z.push(zi);
        }
        let fr = complete_frame(n, &[dir.clone()]);
        Ok(Axis { origin: c, dir, perp: fr[1].clone(), z })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSpec {
    /// Element size scale next to a pole before the geometric levels.
    pub h0: f64,
    pub levels: usize,
    pub ratio: f64,
    /// Element size grows like growth * distance away from the poles.
    pub growth: f64,
    /// Truncation box half-width over max(spread, 1).
    pub box_factor: f64,
    /// Uniform bisections applied after grading.
    pub refine: usize,
}

impl Default for MeshSpec {
    fn default() -> Self {
        MeshSpec { h0: 0.1, levels: 12, ratio: 0.7, growth: 0.2, box_factor: 100.0, refine: 0 }
    }
}

impl MeshSpec {
    fn s_min(&self) -> f64 {
        self.h0 * self.ratio.powi(self.levels as i32)
    }

    pub fn refined(&self) -> MeshSpec {
        let mut m = self.clone();
        m.refine += 1;
        m
    }
}

/// Distances d_1 < d_2 < ... from a pole, element size s_min + growth d.
fn march(spec: &MeshSpec, limit: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut d = 0.0;
    loop {
        d += spec.s_min() + spec.growth * d;
        if d >= limit {
            break;
        }
        out.push(d);
    }
    out
}

fn segment(a: f64, b: f64, spec: &MeshSpec) -> Vec<f64> {
    // interior nodes strictly between two poles, mirror symmetric in the segment
    let half = 0.5 * (b - a);
    let s_mid = spec.s_min() + spec.growth * half;
    let mut ds = march(spec, half);
    while let Some(&last) = ds.last() {
        if half - last < 0.4 * s_mid {
            ds.pop();
        } else {
            break;
        }
    }
    let mut out: Vec<f64> = ds.iter().map(|d| a + d).collect();
    out.push(a + half);
    out.extend(ds.iter().rev().map(|d| b - d));
    out
}

fn end_segment(c: f64, end: f64, spec: &MeshSpec) -> Vec<f64> {
    let len = (end - c).abs();
    let sign = (end - c).signum();
    let mut ds = march(spec, len);
    let s_end = spec.s_min() + spec.growth * len;
    while let Some(&last) = ds.last() {
        if len - last < 0.4 * s_end {
            ds.pop();
        } else {
            break;
        }
    }
    let mut out: Vec<f64> = ds.iter().map(|d| c + sign * d).collect();
    out.push(end);
    out
}

fn bisect(nodes: &[f64], times: usize) -> Vec<f64> {
    let mut cur = nodes.to_vec();
    for _ in 0..times {
        let mut next = Vec::with_capacity(2 * cur.len());
        for w in cur.windows(2) {
            next.push(w[0]);
            next.push(0.5 * (w[0] + w[1]));
        }
        next.push(*cur.last().unwrap());
        cur = next;
    }
    cur
}

/// Tensor (rho, z) mesh graded toward every pole on the axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisMesh {
    pub n: usize,
    pub axis: Axis,
    pub rho: Vec<f64>,
    pub z: Vec<f64>,
    /// z-node index of each pole.
    pub pole_nodes: Vec<usize>,
    /// Nodes held at zero (outer boundary and, for bounded domains, the exterior).
    pub fixed: Vec<bool>,
    pub half_width: f64,
}

impl AxisMesh {
    pub fn build(cfg: &SingularConfiguration, spec: &MeshSpec) -> Result<AxisMesh> {
        cfg.validate()?;
        let axis = cfg.axis()?;
        if !(spec.h0 > 0.0 && spec.ratio > 0.0 && spec.ratio < 1.0 && spec.growth > 0.0 && spec.box_factor > 1.0) {
            return Err(Error::MeshFailure("invalid mesh parameters".into()));
        }
        let w = spec.box_factor * cfg.spread().max(1.0);
        let mut zs: Vec<(f64, usize)> = axis.z.iter().copied().zip(0..).collect();
        zs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut z = Vec::new();
        let mut left = end_segment(zs[0].0, -w, spec);
        left.reverse();
        z.extend(left);
        let mut idx = vec![0; zs.len()];
        for i in 0..zs.len() {
            idx[zs[i].1] = z.len();
            z.push(zs[i].0);
            if i + 1 < zs.len() {
                z.extend(segment(zs[i].0, zs[i + 1].0, spec));
            }
        }
        z.extend(end_segment(zs[zs.len() - 1].0, w, spec));
        let mut rho = vec![0.0];
        rho.extend(end_segment(0.0, w, spec));
        if z.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::MeshFailure("z nodes are not increasing".into()));
        }
        let f = 1usize << spec.refine;
        let z = bisect(&z, spec.refine);
        let rho = bisect(&rho, spec.refine);
        let pole_nodes: Vec<usize> = idx.iter().map(|i| i * f).collect();
        let nr = rho.len();
        let nz = z.len();
        let mut fixed = vec![false; nr * nz];
        for iz in 0..nz {
            for ir in 0..nr {
                let boundary = ir == nr - 1 || iz == 0 || iz == nz - 1;
                let outside = cfg.domain.is_bounded() && {
                    let x = point(&axis, rho[ir], z[iz]);
                    !cfg.domain.contains(&x)
                };
                fixed[iz * nr + ir] = boundary || outside;
            }
        }
        Ok(AxisMesh { n: cfg.n, axis, rho, z, pole_nodes, fixed, half_width: w })
    }

    pub fn nr(&self) -> usize {
        self.rho.len()
    }

    pub fn nz(&self) -> usize {
        self.z.len()
    }

    pub fn len(&self) -> usize {
        self.rho.len() * self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, iz: usize, ir: usize) -> usize {
        iz * self.nr() + ir
    }

    pub fn point(&self, ir: usize, iz: usize) -> Vec<f64> {
        point(&self.axis, self.rho[ir], self.z[iz])
    }
}

fn point(axis: &Axis, rho: f64, z: f64) -> Vec<f64> {
    axis.origin
        .iter()
        .zip(axis.dir.iter().zip(&axis.perp))
        .map(|(o, (d, p))| o + z * d + rho * p)
        .collect()
}

/// Nodal values of a trial function on an axisymmetric mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub mesh: AxisMesh,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadFormValue {
    pub q: f64,
    pub gradient: f64,
    pub potentials: Vec<f64>,
}

/// Assembled Galerkin matrices on a mesh.
pub struct Assembly {
    pub mesh: AxisMesh,
    pub stiffness: Banded,
    pub potentials: Vec<Banded>,
    weight: f64,
}

fn gauss01(n: usize) -> Vec<(f64, f64)> {
    GaussRule::legendre(n).mapped(0.0, 1.0).collect()
}

/// h_i at the unit vector with axial component s.
fn zonal_value(h: &AngularCoefficient, axis: &Axis, s: f64) -> f64 {
    let c = (1.0 - s * s).max(0.0).sqrt();
    let th: Vec<f64> = axis.dir.iter().zip(&axis.perp).map(|(d, p)| s * d + c * p).collect();
    h.value(&th)
}

impl Assembly {
    pub fn new(cfg: &SingularConfiguration, mesh: AxisMesh) -> Result<Assembly> {
        let n = cfg.n;
        let nr = mesh.nr();
        let nz = mesh.nz();
        let bw = nr + 1;
        let weight = sphere_area(n - 1);
        let wexp = n as i32 - 2;
        let g6 = gauss01(6);
        let mut k = Banded::zeros(mesh.len(), bw);
        // separable stiffness: K_rho x M_z + M_rho x K_z
        for iz in 0..nz - 1 {
            let hz = mesh.z[iz + 1] - mesh.z[iz];
            let mz = [[hz / 3.0, hz / 6.0], [hz / 6.0, hz / 3.0]];
            let kz = [[1.0 / hz, -1.0 / hz], [-1.0 / hz, 1.0 / hz]];
            for ir in 0..nr - 1 {
                let (r0, r1) = (mesh.rho[ir], mesh.rho[ir + 1]);
                let hr = r1 - r0;
                let mut mr = [[0.0; 2]; 2];
                let mut kr = [[0.0; 2]; 2];
                for &(x, w) in &g6 {
                    let r = r0 + hr * x;
                    let wt = w * hr * weight * r.powi(wexp);
                    let phi = [1.0 - x, x];
                    let dphi = [-1.0 / hr, 1.0 / hr];
                    for a in 0..2 {
                        for b in 0..2 {
                            mr[a][b] += wt * phi[a] * phi[b];
                            kr[a][b] += wt * dphi[a] * dphi[b];
                        }
                    }
                }
                let ids = [
                    (0, 0, mesh.node(iz, ir)),
                    (1, 0, mesh.node(iz, ir + 1)),
                    (0, 1, mesh.node(iz + 1, ir)),
                    (1, 1, mesh.node(iz + 1, ir + 1)),
                ];
                for &(ar, az, ia) in &ids {
                    for &(br, bz, ib) in &ids {
                        if ia >= ib {
                            let v = kr[ar][br] * mz[az][bz] + mr[ar][br] * kz[az][bz];
                            if ia == ib {
                                k.band[ia][0] += v;
                            } else {
                                k.add(ia, ib, v);
                            }
                        }
                    }
                }
            }
        }
        let potentials: Vec<Banded> = (0..cfg.poles.len())
            .into_par_iter()
            .map(|i| potential_matrix(cfg, &mesh, i, weight))
            .collect::<Result<Vec<_>>>()?;
        let mut asm = Assembly { mesh, stiffness: k, potentials, weight };
        asm.apply_dirichlet();
        Ok(asm)
    }

    fn apply_dirichlet(&mut self) {
        let fixed = self.mesh.fixed.clone();
        let bw = self.stiffness.bw;
        let clear = |m: &mut Banded, diag: f64| {
            for i in 0..m.n {
                for kk in 0..=bw.min(i) {
                    let j = i - kk;
                    if fixed[i] || fixed[j] {
                        m.band[i][kk] = if kk == 0 && fixed[i] { diag } else { 0.0 };
                    }
                }
            }
        };
        clear(&mut self.stiffness, 1.0);
        for p in &mut self.potentials {
            clear(p, 0.0);
        }
    }

    /// K - sum_i P_i.
    pub fn form(&self) -> Banded {
        let mut a = self.stiffness.clone();
        for p in &self.potentials {
            for (row, prow) in a.band.iter_mut().zip(&p.band) {
                for (x, y) in row.iter_mut().zip(prow) {
                    *x -= y;
                }
            }
        }
        a
    }

    pub fn evaluate(&self, u: &[f64]) -> QuadFormValue {
        let ur = self.restrict(u);
        let gradient = self.stiffness.quad(&ur);
        let potentials: Vec<f64> = self.potentials.iter().map(|p| p.quad(&ur)).collect();
        QuadFormValue { q: gradient - potentials.iter().sum::<f64>(), gradient, potentials }
    }

    fn restrict(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.mesh.fixed).map(|(v, f)| if *f { 0.0 } else { *v }).collect()
    }

    /// int |u|^p with 3x3 Gauss per element, and its gradient divided by p.
    pub fn critical(&self, u: &[f64], p: f64, want_grad: bool) -> (f64, Vec<f64>) {
        let m = &self.mesh;
        let nr = m.nr();
        let g3 = gauss01(3);
        let wexp = m.n as i32 - 2;
        let rows: Vec<(f64, Vec<(usize, f64)>)> = (0..m.nz() - 1)
            .into_par_iter()
            .map(|iz| {
                let hz = m.z[iz + 1] - m.z[iz];
                let mut s = 0.0;
                let mut g = Vec::new();
                for ir in 0..nr - 1 {
                    let hr = m.rho[ir + 1] - m.rho[ir];
                    let ids = [m.node(iz, ir), m.node(iz, ir + 1), m.node(iz + 1, ir), m.node(iz + 1, ir + 1)];
                    let uv = [u[ids[0]], u[ids[1]], u[ids[2]], u[ids[3]]];
                    if uv.iter().all(|x| *x == 0.0) {
                        continue;
                    }
                    let mut ge = [0.0; 4];
                    for &(x, wx) in &g3 {
                        let r = m.rho[ir] + hr * x;
                        let wr = wx * hr * self.weight * r.powi(wexp);
                        for &(y, wy) in &g3 {
                            let phi = [(1.0 - x) * (1.0 - y), x * (1.0 - y), (1.0 - x) * y, x * y];
                            let val: f64 = (0..4).map(|a| phi[a] * uv[a]).sum();
                            let wt = wr * wy * hz;
                            let av = val.abs();
                            s += wt * av.powf(p);
                            if want_grad {
                                let d = wt * av.powf(p - 2.0) * val;
                                for a in 0..4 {
                                    ge[a] += d * phi[a];
                                }
                            }
                        }
                    }
                    if want_grad {
                        for a in 0..4 {
                            g.push((ids[a], ge[a]));
                        }
                    }
                }
                (s, g)
            })
            .collect();
        let mut total = 0.0;
        let mut grad = if want_grad { vec![0.0; m.len()] } else { Vec::new() };
        for (s, g) in rows {
            total += s;
            for (i, v) in g {
                grad[i] += v;
            }
        }
        if want_grad {
            for (gv, f) in grad.iter_mut().zip(&m.fixed) {
                if *f {
                    *gv = 0.0;
                }
            }
        }
        (total, grad)
    }
}

fn potential_matrix(cfg: &SingularConfiguration, mesh: &AxisMesh, i: usize, weight: f64) -> Result<Banded> {
    let nr = mesh.nr();
    let nz = mesh.nz();
    let h = &cfg.poles[i].h;
    let zi = mesh.axis.z[i];
    let pz = mesh.pole_nodes[i];
    let wexp = cfg.n as i32 - 2;
    let g6 = gauss01(6);
    let g10 = gauss01(10);
    let mut out = Banded::zeros(mesh.len(), nr + 1);
    for iz in 0..nz - 1 {
        let (z0, z1) = (mesh.z[iz], mesh.z[iz + 1]);
        for ir in 0..nr - 1 {
            let (r0, r1) = (mesh.rho[ir], mesh.rho[ir + 1]);
            let mut e = [[0.0; 4]; 4];
            let mut add = |x: f64, y: f64, wt: f64| -> Result<()> {
                let r = r0 + (r1 - r0) * x;
                let z = z0 + (z1 - z0) * y;
                let dz = z - zi;
                let rr = (r * r + dz * dz).sqrt();
                if rr <= 1e-14 {
                    return Err(Error::SingularNode(i));
                }
                let v = zonal_value(h, &mesh.axis, dz / rr) / (rr * rr) * weight * r.powi(wexp) * wt;
                let phi = [(1.0 - x) * (1.0 - y), x * (1.0 - y), (1.0 - x) * y, x * y];
                for a in 0..4 {
                    for b in 0..4 {
                        e[a][b] += v * phi[a] * phi[b];
                    }
                }
                Ok(())
            };
            let area = (r1 - r0) * (z1 - z0);
            let corner = ir == 0 && (iz == pz || iz + 1 == pz);
            if corner {
                // Duffy transform of the two triangles sharing the singular corner
                let py = if iz == pz { 0.0 } else { 1.0 };
                let p: (f64, f64) = (0.0, py);
                let tris: [((f64, f64), (f64, f64)); 2] = [((1.0, py), (1.0, 1.0 - py)), ((1.0, 1.0 - py), (0.0, 1.0 - py))];
                for (q1, q2) in tris {
                    let det = ((q1.0 - p.0) * (q2.1 - q1.1) - (q1.1 - p.1) * (q2.0 - q1.0)).abs();
                    for &(u, wu) in &g10 {
                        for &(v, wv) in &g10 {
                            let x = p.0 + u * (q1.0 - p.0) + u * v * (q2.0 - q1.0);
                            let y = p.1 + u * (q1.1 - p.1) + u * v * (q2.1 - q1.1);
                            add(x, y, wu * wv * u * det * area)?;
                        }
                    }
                }
            } else {
                let near = ir < 3 && (iz + 3 >= pz && iz <= pz + 2);
                let g = if near { &g10 } else { &g6 };
                for &(x, wx) in g {
                    for &(y, wy) in g {
                        add(x, y, wx * wy * area)?;
                    }
                }
            }
            let ids = [mesh.node(iz, ir), mesh.node(iz, ir + 1), mesh.node(iz + 1, ir), mesh.node(iz + 1, ir + 1)];
            for a in 0..4 {
                for b in 0..4 {
                    if ids[a] > ids[b] {
                        out.add(ids[a], ids[b], e[a][b]);
                    } else if ids[a] == ids[b] {
                        out.band[ids[a]][0] += e[a][b];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Q(u) with its gradient part and one potential term per pole.
pub fn evaluate_quadratic_form(cfg: &SingularConfiguration, u: &FieldSample) -> Result<QuadFormValue> {
    if u.values.len() != u.mesh.len() || u.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::MeshFailure("field does not match the mesh".into()));
    }
    let asm = Assembly::new(cfg, u.mesh.clone())?;
    Ok(asm.evaluate(&u.values))
}

/// Samples f at the mesh nodes.
pub fn sample(mesh: &AxisMesh, f: impl Fn(&[f64]) -> f64) -> FieldSample {
    let mut values = vec![0.0; mesh.len()];
    for iz in 0..mesh.nz() {
        for ir in 0..mesh.nr() {
            let id = mesh.node(iz, ir);
            if !mesh.fixed[id] {
                values[id] = f(&mesh.point(ir, iz));
            }
        }
    }
    FieldSample { mesh: mesh.clone(), values }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Certificate {
    IndefiniteCertified,
    PositiveEvidence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Positivity {
    pub mu_estimate: f64,
    pub certificate: Certificate,
    /// Estimate on the base mesh and after each refinement.
    pub refinements: Vec<f64>,
    /// Change under doubling of the truncation box.
    pub truncation_sensitivity: f64,
    /// Lanczos residual of the extreme Ritz pair.
    pub ritz_residual: f64,
    /// Q(w)/|grad w|^2 for the returned witness.
    pub witness_quotient: f64,
    #[serde(skip)]
    pub witness: Option<FieldSample>,
}

fn lanczos_extreme(asm: &Assembly, chol: &BandedCholesky, steps: usize) -> (f64, Vec<f64>, f64) {
    // largest eigenvalue of L^{-1} P L^{-T}, P = sum P_i
    let n = asm.mesh.len();
    let apply = |x: &[f64]| -> Vec<f64> {
        let mut y = x.to_vec();
        chol.backward(&mut y);
        let mut s = vec![0.0; n];
        let mut t = vec![0.0; n];
        for p in &asm.potentials {
            p.apply(&y, &mut t);
            for (a, b) in s.iter_mut().zip(&t) {
                *a += b;
            }
        }
        chol.forward(&mut s);
        s
    };
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut v: Vec<f64> = (0..n)
        .map(|i| if asm.mesh.fixed[i] { 0.0 } else { 1.0 + 0.5 * ((i as f64) * 0.7548776662).sin() })
        .collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let m = steps.min(n);
    for j in 0..m {
        q.push(v.clone());
        let mut w = apply(&v);
        let a = dot(&w, &v);
        alpha.push(a);
        for qq in &q {
            let c = dot(&w, qq);
            for (x, y) in w.iter_mut().zip(qq) {
                *x -= c * y;
            }
        }
        for qq in &q {
            let c = dot(&w, qq);
            for (x, y) in w.iter_mut().zip(qq) {
                *x -= c * y;
            }
        }
        let b = norm(&w);
        if b < 1e-14 || j + 1 == m {
            break;
        }
        beta.push(b);
        v = w.iter().map(|x| x / b).collect();
    }
    let k = alpha.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let (imax, &theta) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let mut y = vec![0.0; n];
    for (c, qq) in q.iter().enumerate().take(k) {
        let s = eig.eigenvectors[(c, imax)];
        for (a, b) in y.iter_mut().zip(qq) {
            *a += s * b;
        }
    }
    let ay = apply(&y);
    let res: f64 = ay.iter().zip(&y).map(|(a, b)| (a - theta * b).powi(2)).sum::<f64>().sqrt();
    chol.backward(&mut y);
    (theta, y, res)
}

fn probe_once(cfg: &SingularConfiguration, spec: &MeshSpec, steps: usize) -> Result<(f64, FieldSample, f64)> {
    let mesh = AxisMesh::build(cfg, spec)?;
    let asm = Assembly::new(cfg, mesh)?;
    let chol = asm.stiffness.cholesky()?;
    let (theta, w, res) = lanczos_extreme(&asm, &chol, steps);
    Ok((1.0 - theta, FieldSample { mesh: asm.mesh.clone(), values: w }, res))
}

/// Discrete infimum of Q(u) / |grad u|^2 with refinement and truncation diagnostics.
pub fn positivity_probe(cfg: &SingularConfiguration, spec: &MeshSpec, refinements: usize) -> Result<Positivity> {
    let steps = 120;
    let (mu0, witness, res) = probe_once(cfg, spec, steps)?;
    let mut levels = vec![mu0];
    let mut s = spec.clone();
    let mut best = (mu0, witness, res);
    for _ in 0..refinements {
        s = s.refined();
        let r = probe_once(cfg, &s, steps)?;
        levels.push(r.0);
        best = r;
    }
    let mut wide = spec.clone();
    wide.box_factor *= 2.0;
    let trunc = (probe_once(cfg, &wide, steps)?.0 - mu0).abs();
    let (mu, witness, res) = best;
    let witness_quotient = {
        let asm = Assembly::new(cfg, witness.mesh.clone())?;
        let q = asm.evaluate(&witness.values);
        q.q / q.gradient
    };
    let certificate = if mu < 0.0 && witness_quotient < 0.0 {
        Certificate::IndefiniteCertified
    } else {
        Certificate::PositiveEvidence
    };
    Ok(Positivity {
        mu_estimate: mu,
        certificate,
        refinements: levels,
        truncation_sensitivity: trunc,
        ritz_residual: res,
        witness_quotient,
        witness: Some(witness),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpperBound {
    pub pole: usize,
    pub mu: Vec<f64>,
    pub quotient: Vec<f64>,
    pub quotient_error: Vec<f64>,
    pub cross: Vec<Vec<f64>>,
    pub best: f64,
    pub best_mu: f64,
    pub error: f64,
    pub single_level: f64,
    pub single_error: f64,
    pub regime: Regime,
    pub gamma: f64,
    /// Leading coefficient of (S(h_j) - quotient) from a two-term fit over mu <= 1e-2.
    pub fitted_leading: Option<f64>,
    /// Leading coefficient predicted by the interaction expansion.
    pub predicted_leading: Option<f64>,
}

/// Quotients of z_mu = phi_mu^{h_j}(x - a_j) for the multi-pole problem.
pub fn multi_pole_upper_bound(
    cfg: &SingularConfiguration,
    j: usize,
    profile: &GroundStateProfile,
    mu_grid: &[f64],
) -> Result<UpperBound> {
    cfg.validate()?;
    if j >= cfg.poles.len() {
        return Err(Error::Precondition(format!("pole index {j} out of range")));
    }
    if !profile.attained {
        return Err(Error::ProfileNotAttained);
    }
    if mu_grid.is_empty() || mu_grid.iter().any(|m| !(*m > 0.0 && *m <= 1.0)) {
        return Err(Error::Precondition("mu grid must lie in (0, 1]".into()));
    }
    let p = critical_exponent(cfg.n);
    let mass = profile.critical_mass().powf(2.0 / p);
    let s = profile.level;
    let aj = &cfg.poles[j].a;
    let others: Vec<usize> = (0..cfg.poles.len()).filter(|&i| i != j).collect();
    let mut quotient = Vec::new();
    let mut qerr = Vec::new();
    let mut cross = Vec::new();
    for &mu in mu_grid {
        let mut sum = 0.0;
        let mut err = 0.0;
        let mut row = Vec::new();
        for &i in &others {
            let b: Vec<f64> = cfg.poles[i].a.iter().zip(aj).map(|(x, y)| x - y).collect();
            let it = asymptotics::interaction(&cfg.poles[i].h, &b, profile, mu)?;
            sum += it.value;
            err += it.error;
            row.push(it.value);
        }
        quotient.push(s - sum / mass);
        qerr.push(err / mass + profile.disc_error);
        cross.push(row);
    }
    let (bi, best) = quotient
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc });
    let sigma = profile.sigma;
    let gamma = 2.0 * sigma + cfg.n as f64 - 2.0;
    let regime = Regime::of(sigma, cfg.n);
    // two-term fit of the cross sum over mu <= 1e-2; the correction term absorbs the
    // slowly separating mu^2 part when gamma is close to 2
    let sel: Vec<usize> = (0..mu_grid.len()).filter(|&i| mu_grid[i] <= 1e-2 * (1.0 + 1e-12)).collect();
    let fitted_leading = if sel.len() >= 3 && !others.is_empty() {
        let ms: Vec<f64> = sel.iter().map(|&i| mu_grid[i]).collect();
        let ys: Vec<f64> = sel.iter().map(|&i| cross[i].iter().sum::<f64>() / mass).collect();
        let (lead, corr) = asymptotics::model_basis(regime, gamma, &ms);
        let (c, _) = asymptotics::relative_fit(&[lead, corr], &ys);
        Some(c[0])
    } else {
        None
    };
    let predicted_leading = if others.is_empty() {
        None
    } else {
        predicted_cross(cfg, j, profile, regime)?.map(|c| c / mass)
    };
    Ok(UpperBound {
        pole: j,
        mu: mu_grid.to_vec(),
        quotient,
        quotient_error: qerr.clone(),
        cross,
        best,
        best_mu: mu_grid[bi],
        error: qerr[bi],
        single_level: s,
        single_error: profile.disc_error,
        regime,
        gamma,
        fitted_leading,
        predicted_leading,
    })
}

/// Leading coefficient of sum_i I_i(mu) from the interaction lemmas (None for LOG).
fn predicted_cross(
    cfg: &SingularConfiguration,
    j: usize,
    profile: &GroundStateProfile,
    regime: Regime,
) -> Result<Option<f64>> {
    let aj = &cfg.poles[j].a;
    let mut total = 0.0;
    for (i, pole) in cfg.poles.iter().enumerate() {
        if i == j {
            continue;
        }
        let b: Vec<f64> = pole.a.iter().zip(aj).map(|(x, y)| x - y).collect();
        let bl = norm(&b);
        match regime {
            Regime::L2 => {
                let l2 = profile.l2_sq().ok_or(Error::NotIntegrable(2.0))?;
                let m: Vec<f64> = b.iter().map(|x| -x / bl).collect();
                total += pole.h.value(&m) / (bl * bl) * l2;
            }
            Regime::Log => return Ok(None),
            Regime::Aniso => {
                let spec = sphere_spectra::mu1_auto(&profile.h, cfg.n)?;
                let l = asymptotics::lemma33_with_spectrum(&pole.h, &b, &profile.h, &spec, profile.sigma, cfg.n)?;
                total += profile.c_inf.powi(2) * l.direct;
            }
        }
    }
    Ok(Some(total))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoPoleOptions {
    pub mesh: MeshSpec,
    pub refinements: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Pole whose single-pole profile seeds the iteration.
    pub seed_pole: usize,
}

impl Default for TwoPoleOptions {
    fn default() -> Self {
        TwoPoleOptions { mesh: MeshSpec::default(), refinements: 1, max_iter: 4000, tol: 1e-6, seed_pole: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPoleResult {
    pub level: f64,
    /// Level on the base mesh and each refinement.
    pub levels: Vec<f64>,
    /// |last - previous| as the mesh error bar.
    pub mesh_error: f64,
    pub residual: f64,
    pub iterations: Vec<usize>,
    pub truncation_sensitivity: f64,
    #[serde(skip)]
    pub field: Option<FieldSample>,
}

struct FemSolve {
    level: f64,
    residual: f64,
    iterations: usize,
    u: Vec<f64>,
}

fn fem_minimize(asm: &Assembly, u0: Vec<f64>, p: f64, max_iter: usize, tol: f64) -> Result<FemSolve> {
    let a = asm.form();
    let chol = a.cholesky().map_err(|_| Error::Precondition("quadratic form is not positive on the mesh".into()))?;
    let nn = asm.mesh.len();
    let quot = |u: &[f64]| -> (f64, f64) {
        let q = a.quad(u);
        let (c, _) = asm.critical(u, p, false);
        (q / c.powf(2.0 / p), c)
    };
    let normalize = |u: &mut Vec<f64>| {
        let (c, _) = asm.critical(u, p, false);
        let s = c.powf(-1.0 / p);
        u.iter_mut().for_each(|x| *x *= s);
    };
    let mut u: Vec<f64> = u0.iter().zip(&asm.mesh.fixed).map(|(v, f)| if *f { 0.0 } else { v.abs() }).collect();
    normalize(&mut u);
    let (mut q, _) = quot(&u);
    let mut res = f64::INFINITY;
    let mut it = 0;
    // preconditioned nonlinear conjugate gradients; A^{-1} as preconditioner makes
    // the plain direction an inverse-iteration step
    let mut prev: Option<(Vec<f64>, Vec<f64>, f64)> = None;
    let mut history = vec![q];
    while it < max_iter {
        let su = a.quad(&u);
        let (_, g) = asm.critical(&u, p, true);
        let mut w = g;
        chol.solve(&mut w);
        w.iter_mut().for_each(|x| *x *= su);
        let d: Vec<f64> = w.iter().zip(&u).map(|(x, y)| x - y).collect();
        let mut ad = vec![0.0; nn];
        a.apply(&d, &mut ad);
        let dad = dot(&d, &ad);
        res = dad.max(0.0).sqrt() / su.sqrt();
        if res < tol {
            break;
        }
        let mut dir = d.clone();
        if let Some((pd, pdir, pdad)) = &prev {
            let beta = ((dad - dot(&ad, pd)) / pdad).max(0.0);
            for (x, y) in dir.iter_mut().zip(pdir) {
                *x += beta * y;
            }
            let mut adir = vec![0.0; nn];
            a.apply(&dir, &mut adir);
            if dot(&d, &adir) <= 0.0 {
                dir = d.clone();
            }
        }
        let trial = |tau: f64| -> (f64, Vec<f64>) {
            let c: Vec<f64> = u.iter().zip(&dir).map(|(x, y)| x + tau * y).collect();
            (quot(&c).0, c)
        };
        let mut tau = 1.0;
        let (mut qb, mut cb) = trial(tau);
        if qb < q {
            loop {
                let (q2, c2) = trial(2.0 * tau);
                if q2 < qb && tau < 64.0 {
                    tau *= 2.0;
                    qb = q2;
                    cb = c2;
                } else {
                    break;
                }
            }
        } else {
            while qb >= q && tau > 1e-8 {
                tau *= 0.5;
                let t = trial(tau);
                qb = t.0;
                cb = t.1;
            }
        }
        it += 1;
        if qb >= q {
            break;
        }
        normalize(&mut cb);
        u = cb;
        q = qb;
        history.push(q);
        prev = Some((d, dir, dad));
        let h = history.len();
        if h > 40 && (history[h - 41] - q) < 1e-9 * q.abs() {
            break;
        }
    }
    Ok(FemSolve { level: q, residual: res, iterations: it, u })
}

/// Ground-state level of a collinear axisymmetric multi-pole configuration.
pub fn two_pole_axisymmetric_minimize(
    cfg: &SingularConfiguration,
    seed: &dyn Profile,
    opts: &TwoPoleOptions,
) -> Result<TwoPoleResult> {
    cfg.validate()?;
    cfg.axis()?;
    if opts.seed_pole >= cfg.poles.len() {
        return Err(Error::Precondition("seed pole out of range".into()));
    }
    let p = critical_exponent(cfg.n);
    let aj = cfg.poles[opts.seed_pole].a.clone();
    let s_min = opts.mesh.s_min();
    let seed_fn = |x: &[f64]| -> f64 {
        let mut d: Vec<f64> = x.iter().zip(&aj).map(|(a, b)| a - b).collect();
        let r = norm(&d);
        if r < 0.1 * s_min {
            d = cfg.axis().map(|a| a.perp.iter().map(|c| c * 0.1 * s_min).collect()).unwrap_or(d);
        }
        seed.value(&d).max(0.0)
    };
    let mut levels = Vec::new();
    let mut iterations = Vec::new();
    let mut spec = opts.mesh.clone();
    let mut last: Option<(FemSolve, AxisMesh)> = None;
    for r in 0..=opts.refinements {
        let mesh = AxisMesh::build(cfg, &spec)?;
        let asm = Assembly::new(cfg, mesh)?;
        let u0 = match &last {
            Some((prev, pm)) => prolong(pm, &asm.mesh, &prev.u),
            None => sample(&asm.mesh, seed_fn).values,
        };
        let sol = fem_minimize(&asm, u0, p, opts.max_iter, opts.tol)?;
        levels.push(sol.level);
        iterations.push(sol.iterations);
        last = Some((sol, asm.mesh.clone()));
        if r < opts.refinements {
            spec = spec.refined();
        }
    }
    let (sol, mesh) = last.unwrap();
    if sol.residual >= opts.tol && sol.iterations >= opts.max_iter {
        return Err(Error::NonConvergence { iterations: sol.iterations, residual: sol.residual, best: None });
    }
    let mut wide = opts.mesh.clone();
    wide.box_factor *= 2.0;
    let wm = AxisMesh::build(cfg, &wide)?;
    let wasm = Assembly::new(cfg, wm)?;
    let u0 = sample(&wasm.mesh, seed_fn).values;
    let wsol = fem_minimize(&wasm, u0, p, opts.max_iter, opts.tol)?;
    let n = levels.len();
    let mesh_error = if n >= 2 { (levels[n - 1] - levels[n - 2]).abs() } else { 0.0 };
    Ok(TwoPoleResult {
        level: sol.level,
        mesh_error,
        residual: sol.residual,
        iterations,
        truncation_sensitivity: (wsol.level - levels[0]).abs(),
        levels,
        field: Some(FieldSample { mesh, values: sol.u }),
    })
}

/// Bilinear interpolation of a coarse field onto a nested fine mesh.
fn prolong(coarse: &AxisMesh, fine: &AxisMesh, u: &[f64]) -> Vec<f64> {
    let loc = |xs: &[f64], x: f64| -> (usize, f64) {
        let i = match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(xs.len() - 2),
        };
        (i, ((x - xs[i]) / (xs[i + 1] - xs[i])).clamp(0.0, 1.0))
    };
    let mut out = vec![0.0; fine.len()];
    for iz in 0..fine.nz() {
        let (jz, fz) = loc(&coarse.z, fine.z[iz]);
        for ir in 0..fine.nr() {
            let (jr, fr) = loc(&coarse.rho, fine.rho[ir]);
            let c = |a: usize, b: usize| u[coarse.node(a, b)];
            out[fine.node(iz, ir)] = (1.0 - fz) * ((1.0 - fr) * c(jz, jr) + fr * c(jz, jr + 1))
                + fz * ((1.0 - fr) * c(jz + 1, jr) + fr * c(jz + 1, jr + 1));
        }
    }
    out
}

/// (1/N) S_multi^{1 - N/2} min{S, S(h_i), S(sum h)}^{N/2}; `s_sum = None` drops the last entry.
pub fn ps_threshold(s_multi: f64, s_singles: &[f64], s_sum: Option<f64>, s_sob: f64, n: usize) -> Result<f64> {
    let mut all: Vec<f64> = s_singles.to_vec();
    all.push(s_sob);
    all.push(s_multi);
    if let Some(s) = s_sum {
        all.push(s);
    }
    if all.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::NonPositiveLevel);
    }
    let mut m = s_sob;
    for v in s_singles {
        m = m.min(*v);
    }
    if let Some(s) = s_sum {
        m = m.min(s);
    }
    let nf = n as f64;
    Ok(s_multi.powf(1.0 - nf / 2.0) * m.powf(nf / 2.0) / nf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_arithmetic() {
        assert!((ps_threshold(1.0, &[2.0], Some(2.0), 2.0, 4).unwrap() - 1.0).abs() < 1e-14);
        let s = 3.7;
        assert!((ps_threshold(s, &[s, s], Some(s), s, 5).unwrap() - s / 5.0).abs() < 1e-13);
        assert!(ps_threshold(0.0, &[1.0], None, 1.0, 3).is_err());
    }

    #[test]
    fn mesh_puts_poles_on_nodes() {
        let cfg = SingularConfiguration {
            n: 3,
            poles: vec![
                Pole { a: vec![0.0, 0.0, -1.0], h: AngularCoefficient::constant(3, 0.1) },
                Pole { a: vec![0.0, 0.0, 1.0], h: AngularCoefficient::constant(3, 0.1) },
            ],
            domain: Domain::AllSpace,
        };
        let m = AxisMesh::build(&cfg, &MeshSpec::default()).unwrap();
        for (i, &k) in m.pole_nodes.iter().enumerate() {
            assert!((m.z[k] - m.axis.z[i]).abs() < 1e-15);
        }
        let nz = m.nz();
        for i in 0..nz {
            assert!((m.z[i] + m.z[nz - 1 - i]).abs() < 1e-12);
        }
    }
}
