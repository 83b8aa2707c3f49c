//! On-disk cache for pole/coefficient tables, keyed by the run-config hash.
//!
//! Finding 10³–10⁴ poles and projecting the initial state onto each resonant
//! state dominates pipeline start-up, and the result depends only on the
//! configuration. We therefore persist (n, κₙ, Cₙ, C̄ₙ) rows as JSON lines:
//!
//! ```text
//! {"format":"qdecay-coeffs","version":1,"config_hash":"…","n_poles":1000,"mass_ratio":0.067}
//! {"n":1,"kappa":[re,im],"c":[re,im],"cbar":[re,im]}
//! …
//! ```
//!
//! The header pins the format version and the exact configuration; any
//! mismatch is treated as a cache miss (recompute), never an error. Only a
//! file that *claims* to match and then fails to parse is reported as an
//! error, since that indicates corruption rather than staleness.
//!
//! Numbers round-trip bit-exactly: serde_json prints f64 with enough digits
//! (Ryū) that parsing returns the identical value, so a cache hit is
//! indistinguishable from a fresh computation.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSet;
use crate::error::{Error, Result};
use crate::poles::PoleSet;
use crate::units::PhysicalParams;

const FORMAT_NAME: &str = "qdecay-coeffs";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct Header {
    format: String,
    version: u32,
    config_hash: String,
    n_poles: usize,
    mass_ratio: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    n: usize,
    kappa: (f64, f64),
    c: (f64, f64),
    cbar: (f64, f64),
}

/// Cache file path for a config hash (first 16 hex digits name the file).
pub fn cache_path(dir: &Path, config_hash: &str) -> PathBuf {
    let short = &config_hash[..config_hash.len().min(16)];
    dir.join(format!("coeffs-{short}.jsonl"))
}

/// Persist a coefficient table. The write is atomic (temp file + rename) so
/// a crash never leaves a truncated file that would later parse as corrupt.
pub fn store_coefficients(dir: &Path, config_hash: &str, set: &CoefficientSet) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let final_path = cache_path(dir, config_hash);
    let tmp_path = final_path.with_extension("jsonl.tmp");

    {
        let file = fs::File::create(&tmp_path)?;
        let mut out = BufWriter::new(file);
        let header = Header {
            format: FORMAT_NAME.to_string(),
            version: FORMAT_VERSION,
            config_hash: config_hash.to_string(),
            n_poles: set.len(),
            mass_ratio: set.params().mass_ratio,
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for n in 1..=set.len() {
            let row = Row {
                n,
                kappa: pair(set.kappa(n)),
                c: pair(set.c(n)),
                cbar: pair(set.cbar(n)),
            };
            serde_json::to_writer(&mut out, &row)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
    }
    fs::rename(&tmp_path, &final_path)?;
    Ok(final_path)
}

/// Load a cached table if one exists for this exact configuration.
///
/// Returns `Ok(None)` when the file is absent or its header names a
/// different format version, config hash, or pole count — all ordinary
/// cache misses. Returns an error only for a header-matching file whose
/// body is unreadable.
pub fn load_coefficients(
    dir: &Path,
    config_hash: &str,
    n_poles: usize,
) -> Result<Option<(PoleSet, CoefficientSet)>> {
    let path = cache_path(dir, config_hash);
    let file = match fs::File::open(&path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let mut lines = BufReader::new(file).lines();

    let header_line = match lines.next() {
        Some(line) => line?,
        None => return Ok(None), // empty file: stale artifact, recompute
    };
    let header: Header = match serde_json::from_str(&header_line) {
        Ok(h) => h,
        Err(_) => return Ok(None), // not our format at all
    };
    if header.format != FORMAT_NAME
        || header.version != FORMAT_VERSION
        || header.config_hash != config_hash
        || header.n_poles != n_poles
    {
        return Ok(None);
    }

    let params = PhysicalParams::new(header.mass_ratio)?;
    let mut kappas = Vec::with_capacity(n_poles);
    let mut c = Vec::with_capacity(n_poles);
    let mut cbar = Vec::with_capacity(n_poles);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(&line).map_err(|e| {
            Error::numerical(
                "cache",
                format!("corrupt cache row {} in {}: {e}", i + 1, path.display()),
            )
        })?;
        if row.n != kappas.len() + 1 {
            return Err(Error::numerical(
                "cache",
                format!("cache rows out of order in {} (row {})", path.display(), row.n),
            ));
        }
        kappas.push(Complex64::new(row.kappa.0, row.kappa.1));
        c.push(Complex64::new(row.c.0, row.c.1));
        cbar.push(Complex64::new(row.cbar.0, row.cbar.1));
    }
    if kappas.len() != n_poles {
        return Err(Error::numerical(
            "cache",
            format!(
                "cache {} declares {n_poles} rows but contains {}",
                path.display(),
                kappas.len()
            ),
        ));
    }

    let poles = PoleSet::new(kappas.clone(), params);
    let set = CoefficientSet::from_parts(kappas, c, cbar, params)?;
    Ok(Some((poles, set)))
}

fn pair(z: Complex64) -> (f64, f64) {
    (z.re, z.im)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::InitialStateSpec;
    use crate::poles::{find_resonances, SolverOptions};
    use crate::potential::PotentialSpec;

    fn small_set() -> CoefficientSet {
        let potential = PotentialSpec::default().build().unwrap();
        let params = PhysicalParams::default();
        let opts = SolverOptions { n_poles: 25, ..SolverOptions::default() };
        let poles = find_resonances(&potential, &params, &opts).unwrap();
        let state = InitialStateSpec::default().build(&potential).unwrap();
        CoefficientSet::compute(&poles, &state, &potential).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let set = small_set();
        let hash = "a".repeat(64);
        store_coefficients(dir.path(), &hash, &set).unwrap();

        let (poles, loaded) = load_coefficients(dir.path(), &hash, set.len())
            .unwrap()
            .expect("cache hit");
        assert_eq!(poles.len(), set.len());
        for n in 1..=set.len() {
            assert_eq!(loaded.kappa(n), set.kappa(n), "κ_{n}");
            assert_eq!(loaded.c(n), set.c(n), "C_{n}");
            assert_eq!(loaded.cbar(n), set.cbar(n), "C̄_{n}");
            assert_eq!(poles.resonance(n), set.kappa(n));
        }
        assert_eq!(loaded.params().mass_ratio, set.params().mass_ratio);
    }

    #[test]
    fn mismatches_are_cache_misses_not_errors() {
        let dir = tempfile::tempdir().unwrap();
        let set = small_set();
        let hash = "b".repeat(64);
        store_coefficients(dir.path(), &hash, &set).unwrap();

        // absent file
        assert!(load_coefficients(dir.path(), &"c".repeat(64), set.len())
            .unwrap()
            .is_none());
        // wrong pole count
        assert!(load_coefficients(dir.path(), &hash, set.len() + 1)
            .unwrap()
            .is_none());
        // version bump: rewrite the header line only
        let path = cache_path(dir.path(), &hash);
        let text = fs::read_to_string(&path).unwrap();
        let bumped = text.replacen("\"version\":1", "\"version\":99", 1);
        fs::write(&path, bumped).unwrap();
        assert!(load_coefficients(dir.path(), &hash, set.len()).unwrap().is_none());
    }

    #[test]
    fn corrupt_body_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let set = small_set();
        let hash = "d".repeat(64);
        let path = store_coefficients(dir.path(), &hash, &set).unwrap();

        let mut text = fs::read_to_string(&path).unwrap();
        text.push_str("{\"n\": not-json\n");
        fs::write(&path, text).unwrap();
        let err = load_coefficients(dir.path(), &hash, set.len()).unwrap_err();
        assert!(matches!(err, Error::Numerical { .. }), "{err}");
    }
}
