//! Shared plumbing: config loading, the cached spectral pipeline, and
//! artifact readers/writers.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use qdecay::cache;
use qdecay::coefficients::CoefficientSet;
use qdecay::config::RunConfig;
use qdecay::poles::{find_resonances, PoleSet};
use qdecay::{Error, Result};

const CLI_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Global context every subcommand starts from.
pub struct App {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl App {
    pub fn new(cli: &crate::Cli) -> Result<App> {
        let config = match &cli.config {
            Some(path) => RunConfig::from_path(path)?,
            None => RunConfig::default(),
        };
        config.validate()?;
        if let Some(n) = cli.threads {
            qdecay::par::set_threads(n)?;
        }
        std::fs::create_dir_all(&cli.out)?;
        Ok(App {
            config,
            out_dir: cli.out.clone(),
            seed: cli.seed,
        })
    }

    /// Poles + coefficients for `config`, served from the on-disk cache when
    /// the spectral part of the configuration matches.
    pub fn spectral(&self, config: &RunConfig) -> Result<(PoleSet, CoefficientSet)> {
        let key = config.spectral_hash();
        let n_poles = config.n_poles.0;
        let cache_dir = self.out_dir.join("cache");
        if let Some(hit) = cache::load_coefficients(&cache_dir, &key, n_poles)? {
            eprintln!("spectral table: cache hit ({} poles)", n_poles);
            return Ok(hit);
        }
        let resolved = config.resolve()?;
        eprintln!("spectral table: computing {} poles ...", n_poles);
        let poles = find_resonances(&resolved.potential, &resolved.params, &config.solver_options())?;
        let set = CoefficientSet::compute(&poles, &resolved.initial, &resolved.potential)?;
        store_best_effort(&cache_dir, &key, &set);
        Ok((poles, set))
    }

    /// Artifact path inside the output directory.
    pub fn artifact(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

/// A failed cache write must not fail the run that produced the data.
fn store_best_effort(dir: &Path, key: &str, set: &CoefficientSet) {
    if let Err(e) = cache::store_coefficients(dir, key, set) {
        eprintln!("warning: could not write spectral cache: {e}");
    }
}

/// Write a CSV artifact: comment header (tool versions + config hash + any
/// extra notes), then a column-name row, then the data rows. Values are
/// pre-rendered strings so the caller controls formatting; floats rendered
/// with [`fmt_f64`] round-trip exactly.
pub fn write_csv(
    path: &Path,
    config_hash: &str,
    extra_comments: &[String],
    columns: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    let csv_err = |e: csv::Error| Error::validation(format!("CSV encoding: {e}"));
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(columns).map_err(csv_err)?;
    for row in rows {
        if row.len() != columns.len() {
            return Err(Error::validation(format!(
                "internal: CSV row width {} != header width {}",
                row.len(),
                columns.len()
            )));
        }
        wtr.write_record(row).map_err(csv_err)?;
    }
    let body = wtr
        .into_inner()
        .map_err(|e| Error::validation(format!("CSV buffer: {e}")))?;

    let mut file = std::fs::File::create(path)?;
    writeln!(file, "# qdecay-cli v{CLI_VERSION} / qdecay v{}", qdecay::VERSION)?;
    writeln!(file, "# config-hash: {config_hash}")?;
    for note in extra_comments {
        writeln!(file, "# {note}")?;
    }
    file.write_all(&body)?;
    Ok(())
}

/// Write a JSON artifact (pretty-printed, stable field order).
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Shortest round-trip decimal form of a float (matches what a reload parses
/// back to bit-exactly).
pub fn fmt_f64(v: f64) -> String {
    let mut buffer = ryu::Buffer::new();
    buffer.format(v).to_string()
}

/// A parsed curve file: optional column names plus numeric rows.
pub struct CurveFile {
    /// The leading name row, when the file had one.
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
}

impl CurveFile {
    /// Index of a named column, if the file declared names.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header
            .as_ref()
            .and_then(|h| h.iter().position(|c| c == name))
    }
}

/// Read a numeric curve CSV: rows of `min_cols..=max_cols` floats.
///
/// `#` comment lines are skipped, and a single leading header row of column
/// names is kept aside. Anything else that fails to parse reports its line
/// number.
pub fn read_curve(path: &Path, min_cols: usize, max_cols: usize) -> Result<CurveFile> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::validation(format!("cannot read {}: {e}", path.display())))?;

    let mut header = None;
    let mut rows = Vec::new();
    for (index, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| {
            Error::validation(format!("{}: malformed CSV: {e}", path.display()))
        })?;
        let line = record.position().map_or(index as u64 + 1, |p| p.line());
        let fields: Vec<&str> = record.iter().filter(|f| !f.is_empty()).collect();
        if fields.is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(values) => {
                if values.len() < min_cols || values.len() > max_cols {
                    return Err(Error::validation(format!(
                        "{} line {line}: expected {min_cols}..{max_cols} numeric columns, got {}",
                        path.display(),
                        values.len()
                    )));
                }
                rows.push(values);
            }
            Err(e) => {
                // a single leading row of column names is fine; data rows are not
                if rows.is_empty() && index == 0 {
                    header = Some(fields.iter().map(|f| f.to_string()).collect());
                    continue;
                }
                return Err(Error::validation(format!(
                    "{} line {line}: not a number: {e}",
                    path.display()
                )));
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::validation(format!(
            "{}: no data rows found",
            path.display()
        )));
    }
    Ok(CurveFile { header, rows })
}
