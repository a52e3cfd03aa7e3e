//! Run configuration (TOML) and its validation.
//!
//! Pole indices in the file are 1-based. Every violation carries the key path and the
//! line/column of the offending key or value.

use std::path::PathBuf;

use dipole_gs::one_pole::Discretization;
use dipole_gs::quadform::{Domain, MeshSpec, Pole, SingularConfiguration};
use dipole_gs::special::norm;
use dipole_gs::{AngularCoefficient, Error};
use serde::{Deserialize, Serialize};
use toml::de::{DeTable, DeValue};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    pub n: usize,
    /// Distinguished pole (1-based); defaults to the last pole.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pole: Option<usize>,
    /// Coefficient for the single-pole commands.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<AngularCoefficient>,
    #[serde(default)]
    pub poles: Vec<Pole>,
    #[serde(default = "all_space")]
    pub domain: Domain,
    /// Concentration scales, strictly decreasing in (0, 1].
    #[serde(default = "default_mu")]
    pub mu: Vec<f64>,
    #[serde(default)]
    pub tolerances: TolSpec,
    #[serde(default)]
    pub discretization: Discretization,
    #[serde(default)]
    pub mesh: MeshSpec,
    #[serde(default)]
    pub two_pole: TwoPoleSpec,
    #[serde(default)]
    pub positivity: PositivitySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interaction: Option<InteractionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<CutoffSpec>,
    #[serde(default)]
    pub polarization: PolarizationSpec,
    #[serde(default)]
    pub monotonicity: MonotonicitySpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn all_space() -> Domain {
    Domain::AllSpace
}

pub fn default_mu() -> Vec<f64> {
    (0..13).map(|i| 0.3 * (1e-3f64 / 0.3).powf(i as f64 / 12.0)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TolSpec {
    pub algebraic: f64,
    pub numeric_factor: f64,
    /// Root tolerance for Lambda_N.
    pub hardy: f64,
}

impl Default for TolSpec {
    fn default() -> Self {
        TolSpec { algebraic: 1e-8, numeric_factor: 3.0, hardy: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoPoleSpec {
    pub refinements: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// 1-based; defaults to `pole`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed_pole: Option<usize>,
}

impl Default for TwoPoleSpec {
    fn default() -> Self {
        TwoPoleSpec { refinements: 1, max_iter: 4000, tol: 1e-6, seed_pole: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PositivitySpec {
    pub refinements: usize,
}

impl Default for PositivitySpec {
    fn default() -> Self {
        PositivitySpec { refinements: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSource {
    /// Solve the single-pole problem for h.
    Solved { h: AngularCoefficient },
    /// v = psi / (2 cosh(kappa t)) with constant psi.
    Envelope { sigma: f64 },
    /// Envelope with sigma and psi_1 taken from h.
    EnvelopeOf { h: AngularCoefficient },
    AubinTalenti,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionSpec {
    pub k: AngularCoefficient,
    pub a: Vec<f64>,
    pub profile: ProfileSource,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffSpec {
    pub inner: f64,
    pub outer: f64,
    #[serde(default)]
    pub eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolarizationSpec {
    /// Defaults to e_N.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<f64>>,
    pub spacing: f64,
    /// Nodes on each side of the mirror along d.
    pub half_width: usize,
    /// Nodes per transverse axis.
    pub transverse: usize,
    pub fields: usize,
    pub seed: u64,
    pub lambda: f64,
}

impl Default for PolarizationSpec {
    fn default() -> Self {
        PolarizationSpec { d: None, spacing: 0.25, half_width: 6, transverse: 8, fields: 100, seed: 1, lambda: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonotonicitySpec {
    /// Strengths as fractions of 1/Lambda_N, increasing.
    pub fractions: Vec<f64>,
}

impl Default for MonotonicitySpec {
    fn default() -> Self {
        MonotonicitySpec { fractions: vec![0.1, 0.3, 0.5, 0.7] }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<PathBuf>,
}

impl RunConfig {
    /// Config with only the dimension set.
    pub fn minimal(n: usize) -> RunConfig {
        let mut c: RunConfig = toml::from_str(&format!("n = {n}")).expect("minimal config");
        c.materialize();
        c
    }

    fn materialize(&mut self) {
        if self.pole.is_none() && !self.poles.is_empty() {
            self.pole = Some(self.poles.len());
        }
        if self.two_pole.seed_pole.is_none() {
            self.two_pole.seed_pole = self.pole;
        }
        if self.polarization.d.is_none() && self.n >= 2 {
            let mut d = vec![0.0; self.n];
            d[self.n - 1] = 1.0;
            self.polarization.d = Some(d);
        }
    }

    /// 0-based index of the distinguished pole.
    pub fn pole_index(&self) -> usize {
        self.pole.unwrap_or(self.poles.len()).saturating_sub(1)
    }

    pub fn singular_configuration(&self) -> SingularConfiguration {
        SingularConfiguration { n: self.n, poles: self.poles.clone(), domain: self.domain.clone() }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl Violation {
    pub fn into_error(self) -> Error {
        Error::SchemaViolation { path: self.path, line: self.line, col: self.col, message: self.message }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}: {}: {}", self.line, self.col, self.path, self.message)
    }
}

#[derive(Clone, Debug)]
enum Seg {
    Key(String),
    Index(usize),
}

fn parse_path(p: &str) -> Vec<Seg> {
    let mut out = Vec::new();
    for part in p.split('.') {
        let (key, rest) = match part.find('[') {
            Some(i) => (&part[..i], &part[i..]),
            None => (part, ""),
        };
        if !key.is_empty() {
            out.push(Seg::Key(key.to_string()));
        }
        for idx in rest.split('[').filter(|s| !s.is_empty()) {
            if let Ok(i) = idx.trim_end_matches(']').parse() {
                out.push(Seg::Index(i));
            }
        }
    }
    out
}

fn line_col(raw: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(raw.len());
    let before = &raw.as_bytes()[..offset];
    let line = before.iter().filter(|b| **b == b'\n').count() + 1;
    let start = before.iter().rposition(|b| *b == b'\n').map(|i| i + 1).unwrap_or(0);
    let col = String::from_utf8_lossy(&before[start..]).chars().count() + 1;
    (line, col)
}

/// Byte offset of the deepest existing element on the path.
fn locate(raw: &str, path: &str) -> usize {
    let Ok(root) = DeTable::parse(raw) else { return 0 };
    let mut best = 0;
    let mut table: Option<&DeTable> = Some(root.get_ref());
    let mut array: Option<&[toml::Spanned<DeValue>]> = None;
    for seg in parse_path(path) {
        let next = match (seg, table, array) {
            (Seg::Key(k), Some(t), _) => t.iter().find(|(key, _)| key.get_ref().as_ref() == k).map(|(key, v)| {
                best = key.span().start;
                v
            }),
            (Seg::Index(i), _, Some(a)) => a.get(i).inspect(|v| best = v.span().start),
            _ => None,
        };
        let Some(v) = next else { break };
        table = None;
        array = None;
        match v.get_ref() {
            DeValue::Table(t) => table = Some(t),
            DeValue::Array(a) => array = Some(&a[..]),
            _ => {}
        }
    }
    best
}

fn violation(raw: &str, path: &str, message: impl Into<String>) -> Violation {
    let (line, col) = line_col(raw, locate(raw, path));
    Violation { path: path.to_string(), line, col, message: message.into() }
}

/// Parses and fully validates a config; defaults are materialized in the result.
pub fn validate(text: &str) -> Result<RunConfig, Vec<Violation>> {
    let de = match toml::de::Deserializer::parse(text) {
        Ok(d) => d,
        Err(e) => {
            let (line, col) = e.span().map(|s| line_col(text, s.start)).unwrap_or((1, 1));
            return Err(vec![Violation { path: String::new(), line, col, message: e.message().to_string() }]);
        }
    };
    let mut cfg: RunConfig = match serde_path_to_error::deserialize(de) {
        Ok(c) => c,
        Err(e) => {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let path = if path == "." { String::new() } else { path };
            let mut v = violation(text, &path, inner.message().to_string());
            if let Some(s) = inner.span() {
                (v.line, v.col) = line_col(text, s.start);
            }
            return Err(vec![v]);
        }
    };
    cfg.materialize();
    let errs = semantic(&cfg, text);
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(errs)
    }
}

fn coefficient_errors(h: &AngularCoefficient, n: usize, path: &str, raw: &str, out: &mut Vec<Violation>) {
    if h.dim() != n {
        out.push(violation(raw, path, format!("coefficient lives in dimension {}, expected {n}", h.dim())));
        return;
    }
    let unit = |d: &[f64], p: String, out: &mut Vec<Violation>| {
        let r = norm(d);
        if (r - 1.0).abs() > 1e-12 {
            out.push(violation(raw, &p, format!("direction must be a unit vector (norm {r})")));
        }
    };
    match h {
        AngularCoefficient::Dipole { d, .. } => unit(d, format!("{path}.d"), out),
        AngularCoefficient::DipoleSum { terms } => {
            for (i, (_, d)) in terms.iter().enumerate() {
                if d.len() != n {
                    out.push(violation(raw, &format!("{path}.terms[{i}]"), "direction dimension mismatch"));
                } else {
                    unit(d, format!("{path}.terms[{i}]"), out);
                }
            }
        }
        AngularCoefficient::AxisymmetricTable(t) => {
            unit(&t.axis, format!("{path}.axis"), out);
            if t.values.is_empty() || t.values.len() > 512 {
                out.push(violation(raw, &format!("{path}.values"), "table needs 1..=512 values"));
            }
        }
        AngularCoefficient::HarmonicExpansion { l_max, .. } if *l_max > 64 => {
            out.push(violation(raw, &format!("{path}.l_max"), "degree above 64"));
        }
        _ => {}
    }
    if out.iter().all(|v| !v.path.starts_with(path)) {
        if let Err(e) = h.validate() {
            out.push(violation(raw, path, e.to_string()));
        }
    }
}

fn positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

fn semantic(c: &RunConfig, raw: &str) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = c.n;
    if !(3..=16).contains(&n) {
        out.push(violation(raw, "n", "dimension must lie in 3..=16"));
        return out;
    }
    if let Some(cmd) = &c.command {
        if !crate::COMMANDS.contains(&cmd.as_str()) {
            out.push(violation(raw, "command", format!("unknown command `{cmd}`")));
        }
    }
    if let Some(h) = &c.h {
        coefficient_errors(h, n, "h", raw, &mut out);
    }
    for (i, p) in c.poles.iter().enumerate() {
        if p.a.len() != n || p.a.iter().any(|x| !x.is_finite()) {
            out.push(violation(raw, &format!("poles[{i}].a"), format!("position needs {n} finite entries")));
        }
        coefficient_errors(&p.h, n, &format!("poles[{i}].h"), raw, &mut out);
        for (j, q) in c.poles[..i].iter().enumerate() {
            if p.a.len() == q.a.len() {
                let d: Vec<f64> = p.a.iter().zip(&q.a).map(|(x, y)| x - y).collect();
                if norm(&d) <= 1e-9 {
                    out.push(violation(raw, &format!("poles[{i}].a"), format!("duplicates the position of poles[{j}]")));
                }
            }
        }
        if p.a.len() == n && !c.domain.contains(&p.a) {
            out.push(violation(raw, &format!("poles[{i}].a"), "pole lies outside the domain"));
        }
    }
    if let Some(k) = c.pole {
        if k == 0 || k > c.poles.len().max(1) || (c.poles.is_empty() && k != 1) {
            out.push(violation(raw, "pole", format!("pole index {k} does not exist (1-based)")));
        }
    }
    if let Some(k) = c.two_pole.seed_pole {
        if !c.poles.is_empty() && (k == 0 || k > c.poles.len()) {
            out.push(violation(raw, "two_pole.seed_pole", format!("pole index {k} does not exist (1-based)")));
        }
    }
    match &c.domain {
        Domain::AllSpace => {}
        Domain::Ball { center, radius } => {
            if center.len() != n {
                out.push(violation(raw, "domain.center", format!("center needs {n} entries")));
            }
            if !positive(*radius) {
                out.push(violation(raw, "domain.radius", "radius must be positive"));
            }
        }
        Domain::Box { lo, hi } => {
            if lo.len() != n || hi.len() != n {
                out.push(violation(raw, "domain", format!("box corners need {n} entries")));
            } else if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                out.push(violation(raw, "domain.hi", "box needs lo < hi in every coordinate"));
            }
        }
    }
    if c.mu.is_empty() || c.mu.iter().any(|m| !(*m > 0.0 && *m <= 1.0)) || c.mu.windows(2).any(|w| w[1] >= w[0]) {
        out.push(violation(raw, "mu", "mu values must be strictly decreasing in (0, 1]"));
    }
    let t = &c.tolerances;
    for (k, v) in [("algebraic", t.algebraic), ("numeric_factor", t.numeric_factor), ("hardy", t.hardy)] {
        if !positive(v) {
            out.push(violation(raw, &format!("tolerances.{k}"), "tolerance must be positive"));
        }
    }
    let d = &c.discretization;
    if !positive(d.dt) || !positive(d.t_max) || d.t_max < 4.0 * d.dt {
        out.push(violation(raw, "discretization.dt", "need dt > 0 and t_max >= 4 dt"));
    }
    if d.modes == 0 || d.max_iter == 0 || !positive(d.tol) || !positive(d.window) {
        out.push(violation(raw, "discretization", "modes, max_iter, tol and window must be positive"));
    }
    let m = &c.mesh;
    if !positive(m.h0) || !(m.ratio > 0.0 && m.ratio < 1.0) || !positive(m.growth) || !positive(m.box_factor) || m.refine > 4 || m.levels > 60 {
        out.push(violation(raw, "mesh", "need h0, growth, box_factor > 0, 0 < ratio < 1, levels <= 60, refine <= 4"));
    }
    if !positive(c.two_pole.tol) || c.two_pole.max_iter == 0 || c.two_pole.refinements > 3 {
        out.push(violation(raw, "two_pole", "need tol > 0, max_iter > 0, refinements <= 3"));
    }
    if c.positivity.refinements > 3 {
        out.push(violation(raw, "positivity.refinements", "at most 3 refinements"));
    }
    if let Some(i) = &c.interaction {
        coefficient_errors(&i.k, n, "interaction.k", raw, &mut out);
        if i.a.len() != n || !(norm(&i.a) > 0.0) || i.a.iter().any(|x| !x.is_finite()) {
            out.push(violation(raw, "interaction.a", format!("need a nonzero point with {n} entries")));
        }
        match &i.profile {
            ProfileSource::Solved { h } | ProfileSource::EnvelopeOf { h } => {
                coefficient_errors(h, n, "interaction.profile.h", raw, &mut out)
            }
            ProfileSource::Envelope { sigma } => {
                if !(sigma.is_finite() && 2.0 * sigma + n as f64 - 2.0 > 0.0) {
                    out.push(violation(raw, "interaction.profile.sigma", "need 2 sigma + N - 2 > 0"));
                }
            }
            ProfileSource::AubinTalenti => {}
        }
    }
    if let Some(cut) = &c.cutoff {
        if !(positive(cut.inner) && cut.inner < cut.outer && cut.outer.is_finite()) || !(cut.eps >= 0.0 && cut.eps < 1.0) {
            out.push(violation(raw, "cutoff", "need 0 < inner < outer and 0 <= eps < 1"));
        }
    }
    let p = &c.polarization;
    if let Some(d) = &p.d {
        if d.len() != n {
            out.push(violation(raw, "polarization.d", format!("direction needs {n} entries")));
        } else if (norm(d) - 1.0).abs() > 1e-12 {
            out.push(violation(raw, "polarization.d", format!("direction must be a unit vector (norm {})", norm(d))));
        }
    }
    let nodes = (2 * p.half_width + 1) as f64 * (p.transverse as f64).powi(n as i32 - 1);
    if !positive(p.spacing) || p.transverse == 0 || p.fields == 0 || nodes > 2e6 || !p.lambda.is_finite() {
        out.push(violation(raw, "polarization", "need spacing > 0, transverse > 0, fields > 0 and at most 2e6 nodes"));
    }
    let f = &c.monotonicity.fractions;
    if f.is_empty() || f.iter().any(|x| !(*x > 0.0 && *x < 1.0)) || f.windows(2).any(|w| w[1] <= w[0]) {
        out.push(violation(raw, "monotonicity.fractions", "fractions must increase strictly inside (0, 1)"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_round_trip() {
        let c = validate("n = 4\n").unwrap();
        let again = validate(&c.to_toml()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.tolerances, TolSpec::default());
    }

    #[test]
    fn unknown_key_is_named() {
        let e = validate("n = 4\n[mesh]\nh0 = 0.1\nbogus = 3\n").unwrap_err();
        assert!(e[0].message.contains("bogus"), "{:?}", e);
        assert_eq!(e[0].line, 4);
    }

    #[test]
    fn non_unit_direction_rejected() {
        let text = "n = 3\n[[poles]]\na = [0.0, 0.0, 0.0]\nh = { kind = \"dipole\", lambda = 0.5, d = [0.0, 0.0, 2.0] }\n";
        let e = validate(text).unwrap_err();
        assert_eq!(e[0].path, "poles[0].h.d");
        assert_eq!(e[0].line, 4);
    }

    #[test]
    fn duplicate_poles_rejected() {
        let text = "n = 3\n[[poles]]\na = [0.0, 0.0, 1.0]\nh = { kind = \"constant\", n = 3, c = 0.1 }\n[[poles]]\na = [0.0, 0.0, 1.0]\nh = { kind = \"constant\", n = 3, c = 0.1 }\n";
        let e = validate(text).unwrap_err();
        assert_eq!(e[0].path, "poles[1].a");
        assert_eq!(e[0].line, 6);
    }
}
