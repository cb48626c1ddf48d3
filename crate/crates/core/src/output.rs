//! Result records and their CSV / JSON serialization.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::observable::Observable;
use crate::stats::Estimate;
use crate::Error;

pub const CSV_HEADER: &str = "beta,observable,pair,estimate,stderr,n_replicas,oracle_name,oracle_value";

/// One output row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub beta: f64,
    pub observable: String,
    pub pair: Option<String>,
    pub estimate: f64,
    pub stderr: f64,
    pub n_replicas: u64,
    pub oracle_name: Option<String>,
    pub oracle_value: Option<f64>,
}

impl ResultRecord {
    pub fn from_estimate(beta: f64, observable: Observable, estimate: Estimate) -> Self {
        Self {
            beta,
            observable: observable.name().to_string(),
            pair: Some(observable.pair_label()),
            estimate: estimate.value,
            stderr: estimate.stderr,
            n_replicas: estimate.count,
            oracle_name: None,
            oracle_value: None,
        }
    }

    /// A value with no sampling error, such as an oracle evaluation.
    pub fn exact(beta: f64, observable: &str, pair: Option<String>, value: f64) -> Self {
        Self {
            beta,
            observable: observable.to_string(),
            pair,
            estimate: value,
            stderr: 0.0,
            n_replicas: 1,
            oracle_name: None,
            oracle_value: None,
        }
    }

    pub fn with_oracle(mut self, name: Option<&str>, value: Option<f64>) -> Self {
        if let Some(v) = value {
            self.oracle_name = name.map(str::to_string);
            self.oracle_value = Some(v);
        }
        self
    }

    fn validate(&self) -> Result<(), Error> {
        let text_ok = |s: &str| !s.contains([',', '\n', '\r', '"']);
        if !(self.stderr >= 0.0) || self.n_replicas == 0 {
            return Err(Error::Config(format!("record for `{}` needs stderr >= 0 and n_replicas >= 1", self.observable)));
        }
        let texts = [Some(&self.observable), self.pair.as_ref(), self.oracle_name.as_ref()];
        if !texts.into_iter().flatten().all(|s| text_ok(s)) {
            return Err(Error::Config(format!("record text fields of `{}` contain CSV metacharacters", self.observable)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown output format `{other}` (expected csv or json)")),
        }
    }
}

/// Reals with 17 significant digits, which round-trip any `f64`.
fn real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Renders the records in `format`; fails on an empty list or an invalid
/// record.
pub fn render(records: &[ResultRecord], format: OutputFormat) -> Result<String, Error> {
    if records.is_empty() {
        return Err(Error::Config("no result records to emit".into()));
    }
    for r in records {
        r.validate()?;
    }
    match format {
        OutputFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for r in records {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    real(r.beta),
                    r.observable,
                    r.pair.as_deref().unwrap_or(""),
                    real(r.estimate),
                    real(r.stderr),
                    r.n_replicas,
                    r.oracle_name.as_deref().unwrap_or(""),
                    r.oracle_value.map(real).unwrap_or_default(),
                );
            }
            Ok(out)
        }
        OutputFormat::Json => {
            let mut out = serde_json::to_string_pretty(records).map_err(|e| Error::Config(e.to_string()))?;
            out.push('\n');
            Ok(out)
        }
    }
}

/// Writes the rendered records to `path` through a temporary file in the
/// same directory, renamed into place once complete.
pub fn emit_results(records: &[ResultRecord], format: OutputFormat, path: &Path) -> Result<(), Error> {
    let text = render(records, format)?;
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(text.as_bytes()).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// Reads a CSV file written by [`emit_results`].
pub fn parse_csv(text: &str) -> Result<Vec<ResultRecord>, Error> {
    let bad = |line: usize, what: &str| Error::Config(format!("result CSV line {line}: {what}"));
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(bad(1, "unexpected header"));
    }
    let opt = |s: &str| (!s.is_empty()).then(|| s.to_string());
    lines
        .enumerate()
        .map(|(k, line)| {
            let n = k + 2;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(bad(n, "expected 8 fields"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(n, "invalid number"));
            Ok(ResultRecord {
                beta: num(f[0])?,
                observable: f[1].to_string(),
                pair: opt(f[2]),
                estimate: num(f[3])?,
                stderr: num(f[4])?,
                n_replicas: f[5].parse().map_err(|_| bad(n, "invalid replica count"))?,
                oracle_name: opt(f[6]),
                oracle_value: if f[7].is_empty() { None } else { Some(num(f[7])?) },
            })
        })
        .collect()
}
