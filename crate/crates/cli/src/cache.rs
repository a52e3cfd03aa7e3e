//! On-disk memo of single-pole profiles keyed by a content hash of (h, N, disc).
//!
//! Enabled by setting DIPOLE_GS_CACHE to a directory.

use std::path::PathBuf;

use dipole_gs::one_pole::{solve_one_pole, Discretization, GroundStateProfile};
use dipole_gs::profile_io::{parse_profile, write_profile};
use dipole_gs::{AngularCoefficient, Result};
use sha2::{Digest, Sha256};

pub const ENV: &str = "DIPOLE_GS_CACHE";

pub fn key(h: &AngularCoefficient, n: usize, disc: &Discretization) -> String {
    let body = serde_json::to_string(&(h, n, disc)).unwrap_or_default();
    let digest = Sha256::digest(body.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn dir() -> Option<PathBuf> {
    std::env::var_os(ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

/// Solves, or reads a previously written profile. A cached file that fails to parse or
/// belongs to another coefficient is recomputed and overwritten.
pub fn solve(h: &AngularCoefficient, n: usize, disc: &Discretization) -> Result<GroundStateProfile> {
    let Some(d) = dir() else { return solve_one_pole(h, n, disc) };
    let path = d.join(format!("{}.profile", key(h, n, disc)));
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(p) = parse_profile(&text) {
            if p.n == n && &p.h == h {
                return Ok(p);
            }
        }
    }
    let p = solve_one_pole(h, n, disc)?;
    if std::fs::create_dir_all(&d).is_ok() {
        // write then rename so concurrent runs never read a partial file
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        if std::fs::write(&tmp, write_profile(&p)).is_ok() {
            let _ = std::fs::rename(&tmp, &path);
        }
    }
    Ok(p)
}
