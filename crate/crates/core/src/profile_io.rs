//! Plain-text profile format.
//!
//! ```text
//! dipole-gs-profile 1
//! n = 4
//! sigma = -0.054
//! ...
//! h = {"kind":"dipole",...}
//! basis = {"zonal":{...}}
//! mode_values = -0.01 3.2 ...
//! mode_vector = 0.99 0.01 ...     (one line per mode)
//! nodes
//! t c_0 c_1 ... c_{modes-1}        (one line per node)
//! ```
//!
//! Floats are written in shortest round-trip form, so write followed by parse is exact.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::one_pole::GroundStateProfile;
use crate::sphere_spectra::Basis;

const MAGIC: &str = "dipole-gs-profile 1";

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

pub fn write_profile(p: &GroundStateProfile) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "n = {}", p.n);
    for (k, v) in [
        ("sigma", p.sigma),
        ("level", p.level),
        ("c0", p.c0),
        ("c_inf", p.c_inf),
        ("mu1", p.mu1),
        ("grid_level", p.grid_level),
        ("competitor_level", p.competitor_level),
        ("envelope", p.envelope),
        ("el_residual", p.el_residual),
        ("mass_fraction", p.mass_fraction),
        ("disc_error", p.disc_error),
        ("t_start", p.t_start),
        ("dt", p.dt),
    ] {
        let _ = writeln!(s, "{k} = {v:?}");
    }
    let _ = writeln!(s, "nodes_count = {}", p.nodes);
    let _ = writeln!(s, "modes = {}", p.modes);
    let _ = writeln!(s, "attained = {}", p.attained);
    let _ = writeln!(s, "iterations = {}", p.iterations);
    let _ = writeln!(s, "h = {}", serde_json::to_string(&p.h).unwrap_or_default());
    let _ = writeln!(s, "basis = {}", serde_json::to_string(&p.basis).unwrap_or_default());
    let _ = writeln!(s, "mode_values = {}", join(&p.mode_values));
    let _ = writeln!(s, "tail_ratio = {}", join(&p.tail_ratio));
    let _ = writeln!(s, "history = {}", join(&p.history));
    for v in &p.mode_vectors {
        let _ = writeln!(s, "mode_vector = {}", join(v));
    }
    let _ = writeln!(s, "nodes");
    for j in 0..p.nodes {
        let row = &p.coeffs[j * p.modes..(j + 1) * p.modes];
        let _ = writeln!(s, "{:?} {}", p.t_start + j as f64 * p.dt, join(row));
    }
    s
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse(format!("line {line}: {}", message.into()))
}

fn floats(line: usize, v: &str) -> Result<Vec<f64>> {
    v.split_whitespace().map(|x| f64::from_str(x).map_err(|_| err(line, format!("bad number `{x}`")))).collect()
}

fn one<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| err(line, format!("bad value for `{key}`")))
}

#[derive(Default)]
struct Header {
    n: Option<usize>,
    scalars: std::collections::BTreeMap<&'static str, f64>,
    nodes: Option<usize>,
    modes: Option<usize>,
    attained: Option<bool>,
    iterations: Option<usize>,
    h: Option<crate::AngularCoefficient>,
    basis: Option<Basis>,
    mode_values: Option<Vec<f64>>,
    tail_ratio: Option<Vec<f64>>,
    history: Option<Vec<f64>>,
    mode_vectors: Vec<Vec<f64>>,
}

const SCALARS: [&str; 13] = [
    "sigma",
    "level",
    "c0",
    "c_inf",
    "mu1",
    "grid_level",
    "competitor_level",
    "envelope",
    "el_residual",
    "mass_fraction",
    "disc_error",
    "t_start",
    "dt",
];

pub fn parse_profile(text: &str) -> Result<GroundStateProfile> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim() == MAGIC => {}
        _ => return Err(err(1, format!("expected `{MAGIC}`"))),
    }
    let mut hd = Header::default();
    let mut in_table = false;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut last = 1;
    for (ln, raw) in lines {
        last = ln;
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        if in_table {
            rows.push(floats(ln, l)?);
            continue;
        }
        if l == "nodes" {
            in_table = true;
            continue;
        }
        let (k, v) = l.split_once('=').ok_or_else(|| err(ln, "expected `key = value`"))?;
        let (k, v) = (k.trim(), v.trim());
        let dup = |set: bool| if set { Err(err(ln, format!("duplicate key `{k}`"))) } else { Ok(()) };
        match k {
            "n" => {
                dup(hd.n.is_some())?;
                hd.n = Some(one(ln, k, v)?);
            }
            "nodes_count" => {
                dup(hd.nodes.is_some())?;
                hd.nodes = Some(one(ln, k, v)?);
            }
            "modes" => {
                dup(hd.modes.is_some())?;
                hd.modes = Some(one(ln, k, v)?);
            }
            "attained" => {
                dup(hd.attained.is_some())?;
                hd.attained = Some(one(ln, k, v)?);
            }
            "iterations" => {
                dup(hd.iterations.is_some())?;
                hd.iterations = Some(one(ln, k, v)?);
            }
            "h" => {
                dup(hd.h.is_some())?;
                hd.h = Some(serde_json::from_str(v).map_err(|e| err(ln, format!("h: {e}")))?);
            }
            "basis" => {
                dup(hd.basis.is_some())?;
                hd.basis = Some(serde_json::from_str(v).map_err(|e| err(ln, format!("basis: {e}")))?);
            }
            "mode_values" => {
                dup(hd.mode_values.is_some())?;
                hd.mode_values = Some(floats(ln, v)?);
            }
            "tail_ratio" => {
                dup(hd.tail_ratio.is_some())?;
                hd.tail_ratio = Some(floats(ln, v)?);
            }
            "history" => {
                dup(hd.history.is_some())?;
                hd.history = Some(floats(ln, v)?);
            }
            "mode_vector" => hd.mode_vectors.push(floats(ln, v)?),
            _ => match SCALARS.iter().find(|s| **s == k) {
                Some(name) => {
                    dup(hd.scalars.contains_key(name))?;
                    hd.scalars.insert(name, one(ln, k, v)?);
                }
                None => return Err(err(ln, format!("unknown key `{k}`"))),
            },
        }
    }
    let missing = |k: &str| err(last, format!("missing `{k}`"));
    let n = hd.n.ok_or_else(|| missing("n"))?;
    let nodes = hd.nodes.ok_or_else(|| missing("nodes_count"))?;
    let modes = hd.modes.ok_or_else(|| missing("modes"))?;
    let h = hd.h.ok_or_else(|| missing("h"))?;
    let basis = hd.basis.ok_or_else(|| missing("basis"))?;
    let mode_values = hd.mode_values.ok_or_else(|| missing("mode_values"))?;
    let tail_ratio = hd.tail_ratio.ok_or_else(|| missing("tail_ratio"))?;
    let sc = |k: &str| hd.scalars.get(k).copied().ok_or_else(|| missing(k));
    if !in_table {
        return Err(missing("nodes"));
    }
    if n < 3 || h.dim() != n {
        return Err(err(last, "dimension of h does not match n"));
    }
    h.validate()?;
    if modes == 0 || mode_values.len() != modes || tail_ratio.len() != modes || hd.mode_vectors.len() != modes {
        return Err(err(last, "per-mode lists must have `modes` entries"));
    }
    let bsize = match &basis {
        Basis::Zonal { axis, modes } => {
            if axis.len() != n {
                return Err(err(last, "basis axis has the wrong dimension"));
            }
            *modes
        }
        Basis::Harmonic { l_max } => {
            if n != 3 || *l_max > 256 {
                return Err(err(last, "harmonic basis needs n = 3 and a moderate degree"));
            }
            crate::harmonics::count(*l_max)
        }
    };
    if modes > bsize || hd.mode_vectors.iter().any(|v| v.len() != bsize) {
        return Err(err(last, "mode vectors must match the basis size"));
    }
    if rows.len() != nodes || nodes < 2 {
        return Err(err(last, format!("expected {nodes} node rows, found {}", rows.len())));
    }
    let dt = sc("dt")?;
    let t_start = sc("t_start")?;
    if !(dt > 0.0 && dt.is_finite() && t_start.is_finite()) {
        return Err(err(last, "grid spacing must be positive"));
    }
    let mut coeffs = Vec::with_capacity(nodes * modes);
    for (j, r) in rows.iter().enumerate() {
        if r.len() != modes + 1 {
            return Err(err(last, format!("node row {j} needs {} columns", modes + 1)));
        }
        let t = t_start + j as f64 * dt;
        if (r[0] - t).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(err(last, format!("node row {j} is off the grid")));
        }
        coeffs.extend_from_slice(&r[1..]);
    }
    Ok(GroundStateProfile {
        n,
        h,
        dt,
        t_start,
        nodes,
        basis,
        modes,
        mode_values,
        mode_vectors: hd.mode_vectors,
        coeffs,
        tail_ratio,
        level: sc("level")?,
        grid_level: sc("grid_level")?,
        competitor_level: sc("competitor_level")?,
        mu1: sc("mu1")?,
        sigma: sc("sigma")?,
        c0: sc("c0")?,
        c_inf: sc("c_inf")?,
        envelope: sc("envelope")?,
        el_residual: sc("el_residual")?,
        attained: hd.attained.ok_or_else(|| missing("attained"))?,
        mass_fraction: sc("mass_fraction")?,
        disc_error: sc("disc_error")?,
        iterations: hd.iterations.ok_or_else(|| missing("iterations"))?,
        history: hd.history.unwrap_or_default(),
    })
}

/// Radial traces: t, r = e^t, then each mode trace.
pub fn traces_csv(p: &GroundStateProfile) -> String {
    let mut s = String::from("t,r");
    for k in 0..p.modes {
        let _ = write!(s, ",c{k}");
    }
    s.push('\n');
    for j in 0..p.nodes {
        let t = p.t_start + j as f64 * p.dt;
        let _ = write!(s, "{t:?},{:?}", t.exp());
        for k in 0..p.modes {
            let _ = write!(s, ",{:?}", p.coeffs[j * p.modes + k]);
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_garbage() {
        assert!(parse_profile("").is_err());
        assert!(parse_profile("dipole-gs-profile 1\nn = x\n").is_err());
        assert!(parse_profile("dipole-gs-profile 1\nfoo = 1\nnodes\n").is_err());
    }
}
