//! Existence hypotheses judged entry by entry.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::angular::AngularCoefficient;
use crate::asymptotics::{self, Lemma33};
use crate::error::{Error, Result};
use crate::quadform::{Certificate, Domain, Pole, Positivity, SingularConfiguration};
use crate::special::{dot, hardy_floor, norm};
use crate::sphere_spectra;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    pub fn exit_code(&self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 2,
            Status::Inconclusive => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CertificateKind {
    ExactAlgebraic,
    Quadrature,
    SolverUpperBound,
    SufficientOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub id: String,
    pub status: Status,
    pub certificate: CertificateKind,
    /// Quantity whose sign decides the entry (positive means satisfied).
    pub margin: f64,
    pub tolerance: f64,
    pub values: BTreeMap<String, f64>,
    pub note: String,
    /// Entries reported for comparison only do not enter the overall status.
    pub binding: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub entries: Vec<Entry>,
    pub overall: Status,
    pub summary: String,
}

impl Verdict {
    pub fn new(entries: Vec<Entry>) -> Verdict {
        let binding: Vec<&Entry> = entries.iter().filter(|e| e.binding).collect();
        let overall = if binding.iter().any(|e| e.status == Status::Inconclusive) {
            Status::Inconclusive
        } else if binding.iter().any(|e| e.status == Status::Fail) {
            Status::Fail
        } else {
            Status::Pass
        };
        let bad: Vec<String> = binding.iter().filter(|e| e.status != Status::Pass).map(|e| e.id.clone()).collect();
        let summary = match overall {
            Status::Pass => format!("all {} hypotheses hold", binding.len()),
            Status::Fail => format!("failed: {}", bad.join(", ")),
            Status::Inconclusive => format!("not resolved: {}", bad.join(", ")),
        };
        Verdict { entries, overall, summary }
    }

    pub fn entry(&self, id: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub value: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Levels {
    /// S(h_i) per pole.
    pub singles: Vec<Option<Level>>,
    /// S(sum h_i).
    pub sum: Option<Level>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub algebraic: f64,
    /// Multiple of the estimated numerical error a margin must exceed.
    pub numeric_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { algebraic: 1e-8, numeric_factor: 3.0 }
    }
}

fn entry(id: &str, cert: CertificateKind, margin: f64, tol: f64, strict: bool, note: String) -> Entry {
    // strict: margin > 0 required; the band |margin| <= tol is unresolved.
    // non-strict: margin >= 0 required; the band only matters on the failing side.
    let status = if !margin.is_finite() {
        Status::Inconclusive
    } else if strict {
        if margin > tol {
            Status::Pass
        } else if margin < -tol {
            Status::Fail
        } else {
            Status::Inconclusive
        }
    } else if cert == CertificateKind::ExactAlgebraic {
        if margin >= -tol {
            Status::Pass
        } else {
            Status::Fail
        }
    } else if margin > tol {
        Status::Pass
    } else if margin < -tol {
        Status::Fail
    } else {
        Status::Inconclusive
    };
    Entry { id: id.into(), status, certificate: cert, margin, tolerance: tol, values: BTreeMap::new(), note, binding: true }
}

fn with(mut e: Entry, values: &[(&str, f64)]) -> Entry {
    e.values = values.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    e
}

/// True when h2 = h1 o A for an orthogonal A is evident from the representation.
pub fn rotation_equivalent(h1: &AngularCoefficient, h2: &AngularCoefficient) -> bool {
    use AngularCoefficient as A;
    match (h1.collapsed(), h2.collapsed()) {
        (A::Constant { c: a, .. }, A::Constant { c: b, .. }) => a == b,
        (A::Dipole { lambda: a, .. }, A::Dipole { lambda: b, .. }) => a == b,
        (A::AxisymmetricTable(a), A::AxisymmetricTable(b)) => a.values == b.values,
        (x, y) => x == y,
    }
}

fn sum_of_coefficients(cfg: &SingularConfiguration) -> Result<AngularCoefficient> {
    let hs: Vec<AngularCoefficient> = cfg.poles.iter().map(|p| p.h.clone()).collect();
    AngularCoefficient::sum(&hs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition25 {
    pub value: f64,
    pub rotated: f64,
    pub error: f64,
    pub detail: Lemma33,
}

/// The i-th term of the second-branch sum, computed for h_i about the pole k.
pub fn condition25_integral(cfg: &SingularConfiguration, i: usize, k: usize) -> Result<Condition25> {
    cfg.validate()?;
    if i >= cfg.poles.len() || k >= cfg.poles.len() || i == k {
        return Err(Error::Precondition("need two distinct pole indices".into()));
    }
    let n = cfg.n;
    let spec = sphere_spectra::mu1_auto(&cfg.poles[k].h, n)?;
    let floor = -hardy_floor(n);
    if !(spec.mu1 > floor && spec.mu1 < floor + 1.0) {
        return Err(Error::NotIntegrable(2.0 * sphere_spectra::sigma_of(spec.mu1, n).unwrap_or(f64::NAN) + n as f64 - 2.0));
    }
    let sigma = sphere_spectra::sigma_of(spec.mu1, n)?;
    let a: Vec<f64> = cfg.poles[i].a.iter().zip(&cfg.poles[k].a).map(|(x, y)| x - y).collect();
    let l = asymptotics::lemma33_with_spectrum(&cfg.poles[i].h, &a, &cfg.poles[k].h, &spec, sigma, n)?;
    let error = (l.direct - l.rotated).abs().max(1e-12 * l.direct.abs());
    Ok(Condition25 { value: l.direct, rotated: l.rotated, error, detail: l })
}

fn eq24_entry(h: &AngularCoefficient, n: usize, tol: &Tolerances) -> Entry {
    let exact = matches!(h.collapsed(), AngularCoefficient::Constant { .. } | AngularCoefficient::Dipole { .. });
    let cert = if exact { CertificateKind::ExactAlgebraic } else { CertificateKind::Quadrature };
    if n >= 4 {
        let m = h.max_value();
        with(entry("eq:24", cert, m, tol.algebraic, true, "max h_k > 0".into()), &[("max_h", m)])
    } else {
        let m = h.integral();
        with(entry("eq:24", cert, m, tol.algebraic, false, "integral of h_k >= 0".into()), &[("integral_h", m)])
    }
}

fn positivity_entry(id: &str, pos: Option<&Positivity>, tol: &Tolerances) -> Entry {
    match pos {
        None => {
            let mut e = entry(id, CertificateKind::Quadrature, f64::NAN, 0.0, true, "no positivity result".into());
            e.status = Status::Inconclusive;
            e
        }
        Some(p) => {
            let n = p.refinements.len();
            let change = if n >= 2 { (p.refinements[n - 1] - p.refinements[n - 2]).abs() } else { 0.0 };
            let err = change + p.truncation_sensitivity + p.ritz_residual;
            let band = (tol.numeric_factor * err).max(tol.algebraic);
            let e = match p.certificate {
                Certificate::IndefiniteCertified => {
                    let mut e = entry(id, CertificateKind::Quadrature, p.mu_estimate, band, true, "indefinite witness found".into());
                    e.status = Status::Fail;
                    e
                }
                Certificate::PositiveEvidence => entry(
                    id,
                    CertificateKind::Quadrature,
                    p.mu_estimate,
                    band,
                    true,
                    "discrete evidence only; positivity cannot be certified by refinement".into(),
                ),
            };
            with(
                e,
                &[
                    ("mu_estimate", p.mu_estimate),
                    ("refinement_change", change),
                    ("truncation_sensitivity", p.truncation_sensitivity),
                    ("witness_quotient", p.witness_quotient),
                ],
            )
        }
    }
}

fn level(levels: &Levels, i: usize) -> Result<Level> {
    levels
        .singles
        .get(i)
        .copied()
        .flatten()
        .ok_or_else(|| Error::MissingLevel(format!("S(h_{})", i + 1)))
}

/// S(h_k) = min_j S(h_j), resolved exactly where levels coincide by symmetry.
fn eq23_entry(cfg: &SingularConfiguration, k: usize, levels: &Levels, tol: &Tolerances) -> Result<Entry> {
    let lk = level(levels, k)?;
    let mut worst = f64::INFINITY;
    let mut band: f64 = 0.0;
    let mut exact = true;
    for j in 0..cfg.poles.len() {
        if j == k {
            continue;
        }
        let lj = level(levels, j)?;
        if rotation_equivalent(&cfg.poles[j].h, &cfg.poles[k].h) {
            worst = worst.min(0.0);
            continue;
        }
        exact = false;
        let m = lj.value - lk.value;
        let b = tol.numeric_factor * (lj.error + lk.error);
        if m - b < worst - band || worst == f64::INFINITY {
            worst = m;
            band = b;
        }
    }
    if worst == f64::INFINITY {
        worst = 0.0;
    }
    let (cert, tol_used) = if exact {
        (CertificateKind::ExactAlgebraic, tol.algebraic)
    } else {
        (CertificateKind::SolverUpperBound, band.max(tol.algebraic))
    };
    let mut e = entry("eq:23", cert, worst, tol_used, false, "S(h_k) is the smallest single-pole level".into());
    if !exact && worst.abs() <= tol_used {
        e.status = Status::Inconclusive;
    }
    Ok(with(e, &[("S_k", lk.value), ("S_k_error", lk.error)]))
}

/// min over theta of h_k(A theta) - sum h_i(theta) after a rotation search.
pub fn rotation_search(sum: &AngularCoefficient, hk: &AngularCoefficient, n: usize) -> (f64, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let pts: Vec<Vec<f64>> = (0..2000)
        .map(|_| {
            let v: Vec<f64> = (0..n).map(|_| gaussian(&mut rng)).collect();
            let l = norm(&v);
            v.iter().map(|x| x / l).collect()
        })
        .collect();
    let score = |a: &[Vec<f64>]| -> f64 {
        pts.iter()
            .map(|th| {
                let at: Vec<f64> = a.iter().map(|row| dot(row, th)).collect();
                hk.value(&at) - sum.value(th)
            })
            .fold(f64::INFINITY, f64::min)
    };
    let mut best = identity(n);
    let mut best_s = score(&best);
    for _ in 0..1000 {
        let a = random_rotation(&mut rng, n, 1.0);
        let s = score(&a);
        if s > best_s {
            best_s = s;
            best = a;
        }
    }
    let mut step = 0.1;
    for _ in 0..200 {
        let r = random_rotation(&mut rng, n, step);
        let a = mat_mul(&r, &best);
        let s = score(&a);
        if s > best_s {
            best_s = s;
            best = a;
        } else {
            step *= 0.98;
        }
    }
    (best_s, best)
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random::<f64>().max(1e-300);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
}

/// Orthogonal matrix from Gram-Schmidt of I + scale * G, G Gaussian.
fn random_rotation(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 } + scale * gaussian(rng)).collect())
        .collect();
    for i in 0..n {
        for j in 0..i {
            let c = dot(&rows[i], &rows[j]);
            let rj = rows[j].clone();
            for (x, y) in rows[i].iter_mut().zip(&rj) {
                *x -= c * y;
            }
        }
        let l = norm(&rows[i]);
        rows[i].iter_mut().for_each(|x| *x /= l);
    }
    rows
}

fn branch_entries(cfg: &SingularConfiguration, k: usize, prefix: &str, tol: &Tolerances) -> Result<Vec<Entry>> {
    let n = cfg.n;
    let floor = -hardy_floor(n);
    let mu1 = sphere_spectra::mu1_auto(&cfg.poles[k].h, n)?.mu1;
    let others: Vec<usize> = (0..cfg.poles.len()).filter(|&i| i != k).collect();
    if others.is_empty() {
        let mut e = entry(&format!("{prefix}-branch1"), CertificateKind::ExactAlgebraic, 0.0, tol.algebraic, false, "single pole: no interaction condition".into());
        e.status = Status::Pass;
        return Ok(vec![e]);
    }
    let ak = &cfg.poles[k].a;
    let first = |strict_note: &str| -> Entry {
        let mut s = 0.0;
        for &i in &others {
            let d: Vec<f64> = ak.iter().zip(&cfg.poles[i].a).map(|(x, y)| x - y).collect();
            let l = norm(&d);
            let u: Vec<f64> = d.iter().map(|x| x / l).collect();
            s += cfg.poles[i].h.value(&u) / (l * l);
        }
        with(
            entry(&format!("{prefix}-branch1"), CertificateKind::ExactAlgebraic, s, tol.algebraic, true, strict_note.into()),
            &[("mu1_k", mu1), ("branch_threshold", floor + 1.0)],
        )
    };
    let second = || -> Result<Entry> {
        let mut s = 0.0;
        let mut err = 0.0;
        let mut rot = 0.0;
        for &i in &others {
            let c = condition25_integral(cfg, i, k)?;
            s += c.value;
            rot += c.rotated;
            err += c.error;
        }
        let band = (tol.numeric_factor * err).max(tol.algebraic);
        Ok(with(
            entry(&format!("{prefix}-branch2"), CertificateKind::Quadrature, s, band, true, "anisotropic interaction sum".into()),
            &[("mu1_k", mu1), ("sum", s), ("rotated_sum", rot), ("quadrature_error", err)],
        ))
    };
    let gap = mu1 - (floor + 1.0);
    if gap.abs() <= tol.algebraic {
        let mut out = vec![first("branch boundary: both branches reported")];
        let second_ok = second();
        let mut e2 = match second_ok {
            Ok(e) => e,
            Err(_) => {
                let mut e = entry(&format!("{prefix}-branch2"), CertificateKind::Quadrature, f64::NAN, 0.0, true, "not integrable at the boundary".into());
                e.status = Status::Inconclusive;
                e
            }
        };
        e2.binding = false;
        if out[0].status == Status::Pass {
            out[0].status = Status::Inconclusive;
        }
        out.push(e2);
        Ok(out)
    } else if gap > 0.0 {
        Ok(vec![first("sum of h_i at the pole directions")])
    } else {
        Ok(vec![second()?])
    }
}

fn eq31_entry(cfg: &SingularConfiguration, tol: &Tolerances) -> Result<Entry> {
    let n = cfg.n;
    let floor = -hardy_floor(n);
    let mut m = f64::INFINITY;
    for p in &cfg.poles {
        m = m.min(sphere_spectra::mu1_auto(&p.h, n)?.mu1 - floor);
    }
    let sum = sum_of_coefficients(cfg)?;
    let ms = sphere_spectra::mu1_auto(&sum, n)?.mu1 - floor;
    Ok(with(
        entry("eq:31", CertificateKind::Quadrature, m.min(ms), tol.algebraic, true, "first eigenvalues above the Hardy floor".into()),
        &[("min_single_gap", m), ("sum_gap", ms)],
    ))
}

/// Hypotheses of the whole-space existence theorem for the pole k.
pub fn check_existence_rn(
    cfg: &SingularConfiguration,
    k: usize,
    levels: &Levels,
    positivity: Option<&Positivity>,
    sobolev: f64,
    tol: &Tolerances,
) -> Result<Verdict> {
    cfg.validate()?;
    if k >= cfg.poles.len() {
        return Err(Error::Precondition(format!("pole index {k} out of range")));
    }
    let n = cfg.n;
    let mut entries = vec![positivity_entry("eq:posde", positivity, tol), eq31_entry(cfg, tol)?];
    entries.push(eq23_entry(cfg, k, levels, tol)?);
    entries.push(eq24_entry(&cfg.poles[k].h, n, tol));
    entries.extend(branch_entries(cfg, k, "eq:25", tol)?);

    // S(h_k) <= S(sum h_i)
    let sum = sum_of_coefficients(cfg)?;
    let lk = level(levels, k)?;
    let e26 = if cfg.poles.len() == 1 || rotation_equivalent(&sum, &cfg.poles[k].h) {
        entry("eq:26", CertificateKind::ExactAlgebraic, 0.0, tol.algebraic, false, "sum is a rotation of h_k".into())
    } else {
        let ls = match sum.collapsed() {
            AngularCoefficient::Constant { c, .. } if c == 0.0 => Level { value: sobolev, error: 0.0 },
            _ => levels.sum.ok_or_else(|| Error::MissingLevel("S(sum h_i)".into()))?,
        };
        let m = ls.value - lk.value;
        let band = (tol.numeric_factor * (ls.error + lk.error)).max(tol.algebraic);
        with(
            entry("eq:26", CertificateKind::SolverUpperBound, m, band, false, "S(h_k) <= S(sum h_i)".into()),
            &[("S_sum", ls.value), ("S_sum_error", ls.error), ("S_k", lk.value)],
        )
    };
    entries.push(e26);
    let (score, _) = rotation_search(&sum, &cfg.poles[k].h, n);
    let mut suf = entry(
        "eq:26-rotation",
        CertificateKind::SufficientOnly,
        score,
        tol.algebraic,
        false,
        "sampled search for A with sum h_i <= h_k o A; failure does not decide eq:26".into(),
    );
    suf.binding = false;
    entries.push(suf);
    Ok(Verdict::new(entries))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dipole {
    pub lambda: f64,
    pub d: Vec<f64>,
    pub a: Vec<f64>,
}

pub fn dipole_configuration(n: usize, dipoles: &[Dipole]) -> SingularConfiguration {
    SingularConfiguration {
        n,
        poles: dipoles.iter().map(|p| Pole { a: p.a.clone(), h: AngularCoefficient::dipole(p.lambda, p.d.clone()) }).collect(),
        domain: Domain::AllSpace,
    }
}

/// Dipole corollary: algebraic ordering, interaction branch, moment bound and positivity.
pub fn check_existence_dipoles(
    n: usize,
    dipoles: &[Dipole],
    k: Option<usize>,
    hardy: f64,
    positivity: Option<&Positivity>,
    tol: &Tolerances,
) -> Result<Verdict> {
    if dipoles.iter().any(|p| !(p.lambda > 0.0)) {
        return Err(Error::NonPositiveStrength);
    }
    if dipoles.is_empty() {
        return Err(Error::Precondition("no dipoles".into()));
    }
    for p in dipoles {
        if p.d.len() != n || p.a.len() != n {
            return Err(Error::Precondition("dipole dimension mismatch".into()));
        }
        let l = norm(&p.d);
        if (l - 1.0).abs() > 1e-12 {
            return Err(Error::NonUnitDirection(l));
        }
    }
    let k = match k {
        Some(k) if k < dipoles.len() => k,
        Some(k) => return Err(Error::Precondition(format!("pole index {k} out of range"))),
        None => {
            let mut best = 0;
            for (i, p) in dipoles.iter().enumerate() {
                if p.lambda >= dipoles[best].lambda {
                    best = i;
                }
            }
            best
        }
    };
    let cfg = dipole_configuration(n, dipoles);
    cfg.validate()?;
    let lk = dipoles[k].lambda;
    let lmax = dipoles.iter().map(|p| p.lambda).fold(0.0, f64::max);
    let mut entries = Vec::new();
    entries.push(with(
        entry("ordering", CertificateKind::ExactAlgebraic, lk - lmax, tol.algebraic, false, "lambda_k is the largest strength".into()),
        &[("lambda_k", lk), ("lambda_max", lmax)],
    ));
    let crit = 1.0 / hardy;
    entries.push(with(
        entry("lambda-bound", CertificateKind::ExactAlgebraic, crit - lk, tol.algebraic, true, "lambda_k < 1/Lambda_N".into()),
        &[("inverse_hardy", crit)],
    ));
    entries.push(positivity_entry("positivity", positivity, tol));
    entries.extend(branch_entries(&cfg, k, "eq:27", tol)?);
    let mut m = vec![0.0; n];
    for p in dipoles {
        for (x, d) in m.iter_mut().zip(&p.d) {
            *x += p.lambda * d;
        }
    }
    let mn = norm(&m);
    entries.push(with(
        entry("eq:29", CertificateKind::ExactAlgebraic, lk - mn, tol.algebraic, false, "|sum lambda_i d_i| <= lambda_k".into()),
        &[("moment_norm", mn), ("lambda_k", lk)],
    ));
    if dipoles.len() == 2 {
        let j = 1 - k;
        let c = dot(&dipoles[0].d, &dipoles[1].d);
        let bound = -dipoles[j].lambda / (2.0 * lk);
        let mut e = with(
            entry("eq:29-two-dipole-strict", CertificateKind::ExactAlgebraic, bound - c, tol.algebraic, true, "strict reading d_1 . d_2 < -lambda_1 / (2 lambda_2)".into()),
            &[("d1_dot_d2", c), ("bound", bound)],
        );
        e.binding = false;
        entries.push(e);
    }
    Ok(Verdict::new(entries))
}

/// Hypotheses of the bounded-domain existence theorem for the pole k.
pub fn check_existence_bounded(
    cfg: &SingularConfiguration,
    k: usize,
    levels: &Levels,
    positivity: Option<&Positivity>,
    tol: &Tolerances,
) -> Result<Verdict> {
    if !cfg.domain.is_bounded() {
        return Err(Error::DomainUnbounded);
    }
    cfg.validate()?;
    if k >= cfg.poles.len() {
        return Err(Error::Precondition(format!("pole index {k} out of range")));
    }
    let n = cfg.n;
    let floor = -hardy_floor(n);
    let mut entries = vec![positivity_entry("eq:pdbd", positivity, tol)];
    entries.push(eq24_entry(&cfg.poles[k].h, n, tol));
    entries.push(eq23_entry(cfg, k, levels, tol)?);
    let mu1 = sphere_spectra::mu1_auto(&cfg.poles[k].h, n)?.mu1;
    entries.push(with(
        entry("eigenvalue-floor", CertificateKind::Quadrature, mu1 - (floor + 1.0), tol.algebraic, false, "mu1(h_k) >= -((N-2)/2)^2 + 1".into()),
        &[("mu1_k", mu1), ("floor", floor + 1.0)],
    ));
    let ak = &cfg.poles[k].a;
    let mut s = 0.0;
    for (i, p) in cfg.poles.iter().enumerate() {
        if i == k {
            continue;
        }
        let d: Vec<f64> = ak.iter().zip(&p.a).map(|(x, y)| x - y).collect();
        let l = norm(&d);
        let u: Vec<f64> = d.iter().map(|x| x / l).collect();
        s += p.h.value(&u) / (l * l);
    }
    let mut cross = entry("cross-sum", CertificateKind::ExactAlgebraic, s, tol.algebraic, true, "sum h_i((a_k - a_i)/|a_k - a_i|)/|a_k - a_i|^2 > 0".into());
    if cfg.poles.len() == 1 {
        cross.status = Status::Pass;
        cross.note = "single pole: no interaction condition".into();
    }
    entries.push(cross);
    Ok(Verdict::new(entries))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overall_precedence() {
        let mut a = entry("a", CertificateKind::ExactAlgebraic, 1.0, 1e-8, true, String::new());
        let b = entry("b", CertificateKind::ExactAlgebraic, -1.0, 1e-8, true, String::new());
        let c = entry("c", CertificateKind::ExactAlgebraic, 0.0, 1e-8, true, String::new());
        assert_eq!(Verdict::new(vec![a.clone()]).overall, Status::Pass);
        assert_eq!(Verdict::new(vec![a.clone(), b.clone()]).overall, Status::Fail);
        assert_eq!(Verdict::new(vec![a.clone(), b, c.clone()]).overall, Status::Inconclusive);
        a.binding = false;
        a.status = Status::Fail;
        assert_eq!(Verdict::new(vec![a]).overall, Status::Pass);
        assert_eq!(c.status, Status::Inconclusive);
    }

    #[test]
    fn nonstrict_boundary_passes() {
        let e = entry("x", CertificateKind::ExactAlgebraic, -1e-17, 1e-8, false, String::new());
        assert_eq!(e.status, Status::Pass);
    }
}
