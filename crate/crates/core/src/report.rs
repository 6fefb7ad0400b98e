//! Report files: CSV and JSON writers, matching readers, and atomic writes.
//!
//! CSV files open with `# key=value` metadata lines, followed by a header row
//! and data rows. Reals are printed with 17 significant digits so that every
//! `f64` survives a write/read cycle bit for bit.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classical::OmegaCensus;
use crate::error::{Error, Result};
use crate::exact::{MomentReport, Pmf};
use crate::model::{ModelParams, Provenance, SampleBatch};
use crate::primes::PrimeTable;
use crate::stats::EmpiricalSummary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// `L(x, ε)` together with the quantities it was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LindebergReport {
    pub x: u64,
    pub epsilon: f64,
    pub sigma_sq: f64,
    /// `ε σ_x`.
    pub threshold: f64,
    pub value: f64,
}

/// One row of the convergence table produced by the `report` command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub x: u64,
    pub mu: f64,
    pub sigma_sq: f64,
    pub mertens_gap: f64,
    pub d_exact_vs_normal: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportKind {
    Primes,
    Moments,
    Pmf,
    Lindeberg,
    Sample,
    Ks,
    Census,
    Grid,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Primes(PrimeTable),
    Moments(Vec<MomentReport>),
    Pmf(Pmf),
    Lindeberg(Vec<LindebergReport>),
    Sample(SampleBatch),
    Ks(EmpiricalSummary),
    Census(OmegaCensus),
    Grid(Vec<GridRow>),
}

impl Report {
    pub fn kind(&self) -> ReportKind {
        match self {
            Report::Primes(_) => ReportKind::Primes,
            Report::Moments(_) => ReportKind::Moments,
            Report::Pmf(_) => ReportKind::Pmf,
            Report::Lindeberg(_) => ReportKind::Lindeberg,
            Report::Sample(_) => ReportKind::Sample,
            Report::Ks(_) => ReportKind::Ks,
            Report::Census(_) => ReportKind::Census,
            Report::Grid(_) => ReportKind::Grid,
        }
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => Ok(self.to_csv()),
        }
    }

    pub fn parse(kind: ReportKind, format: Format, text: &str) -> Result<Report> {
        match format {
            Format::Json => parse_json(kind, text),
            Format::Csv => parse_csv(kind, text),
        }
    }

    fn to_json(&self) -> Result<String> {
        let json = match self {
            Report::Primes(t) => serde_json::to_string_pretty(t),
            Report::Moments(rows) => one_or_many(rows),
            Report::Pmf(p) => serde_json::to_string_pretty(p),
            Report::Lindeberg(rows) => one_or_many(rows),
            Report::Sample(b) => serde_json::to_string_pretty(b),
            Report::Ks(s) => serde_json::to_string_pretty(s),
            Report::Census(c) => serde_json::to_string_pretty(c),
            Report::Grid(rows) => serde_json::to_string_pretty(rows),
        }
        .map_err(|e| Error::invalid("report", e.to_string()))?;
        Ok(json + "\n")
    }

    fn to_csv(&self) -> String {
        let mut out = String::new();
        match self {
            Report::Primes(t) => {
                meta(&mut out, "limit", t.limit());
                out.push_str("p,recip_prefix,recip_sq_prefix\n");
                for ((p, r), s) in t.primes().iter().zip(t.recip_prefix()).zip(t.recip_sq_prefix()) {
                    let _ = writeln!(out, "{p},{},{}", real(*r), real(*s));
                }
            }
            Report::Moments(rows) => {
                out.push_str("x,mu,sigma_sq,loglog_x,mertens_gap,zeta_partial\n");
                for m in rows {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        m.x,
                        real(m.mu),
                        real(m.sigma_sq),
                        real(m.loglog_x),
                        real(m.mertens_gap),
                        real(m.zeta_partial)
                    );
                }
            }
            Report::Pmf(p) => {
                meta(&mut out, "x", p.x);
                meta(&mut out, "support_cap", p.support_cap);
                meta(&mut out, "truncated_tail", real(p.truncated_tail));
                meta(&mut out, "tail_warning", p.tail_warning);
                out.push_str("k,mass\n");
                for (k, m) in p.mass.iter().enumerate() {
                    let _ = writeln!(out, "{k},{}", real(*m));
                }
            }
            Report::Lindeberg(rows) => {
                out.push_str("x,epsilon,sigma_sq,threshold,value\n");
                for r in rows {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{}",
                        r.x,
                        real(r.epsilon),
                        real(r.sigma_sq),
                        real(r.threshold),
                        real(r.value)
                    );
                }
            }
            Report::Sample(b) => {
                meta(&mut out, "x", b.params.x);
                meta(&mut out, "seed", b.params.seed);
                meta(&mut out, "trials", b.params.trials);
                meta(&mut out, "chunk_size", b.params.chunk_size);
                meta(&mut out, "generator", &b.provenance.generator);
                meta(&mut out, "chunk_count", b.provenance.chunk_count);
                meta(&mut out, "last_chunk_len", b.provenance.last_chunk_len);
                out.push_str("omega\n");
                for w in &b.omegas {
                    let _ = writeln!(out, "{w}");
                }
            }
            Report::Ks(s) => {
                meta(&mut out, "n", s.n);
                meta(&mut out, "mean", real(s.mean));
                meta(&mut out, "variance", real(s.variance));
                meta(&mut out, "ks_vs_normal", optional_real(s.ks_vs_normal));
                meta(&mut out, "ks_vs_exact", optional_real(s.ks_vs_exact));
                out.push_str("k,count\n");
                for (k, c) in &s.histogram {
                    let _ = writeln!(out, "{k},{c}");
                }
            }
            Report::Census(c) => {
                meta(&mut out, "x", c.x);
                meta(&mut out, "omega_total", c.omega_total);
                out.push_str("omega,count\n");
                for (k, n) in &c.counts {
                    let _ = writeln!(out, "{k},{n}");
                }
            }
            Report::Grid(rows) => {
                out.push_str("x,mu,sigma_sq,mertens_gap,d_exact_vs_normal\n");
                for r in rows {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{}",
                        r.x,
                        real(r.mu),
                        real(r.sigma_sq),
                        real(r.mertens_gap),
                        real(r.d_exact_vs_normal)
                    );
                }
            }
        }
        out
    }
}

/// 17 significant digits.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn optional_real(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

fn meta(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "# {key}={value}");
}

fn one_or_many<T: Serialize>(rows: &[T]) -> serde_json::Result<String> {
    match rows {
        [one] => serde_json::to_string_pretty(one),
        many => serde_json::to_string_pretty(many),
    }
}

fn parse_error(reason: impl Into<String>) -> Error {
    Error::Parse {
        path: PathBuf::new(),
        reason: reason.into(),
    }
}

fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| parse_error(e.to_string()))
}

fn one_or_many_from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    if text.trim_start().starts_with('[') {
        from_json(text)
    } else {
        Ok(vec![from_json(text)?])
    }
}

fn parse_json(kind: ReportKind, text: &str) -> Result<Report> {
    Ok(match kind {
        ReportKind::Primes => Report::Primes(from_json(text)?),
        ReportKind::Moments => Report::Moments(one_or_many_from_json(text)?),
        ReportKind::Pmf => Report::Pmf(from_json(text)?),
        ReportKind::Lindeberg => Report::Lindeberg(one_or_many_from_json(text)?),
        ReportKind::Sample => Report::Sample(from_json(text)?),
        ReportKind::Ks => Report::Ks(from_json(text)?),
        ReportKind::Census => Report::Census(from_json(text)?),
        ReportKind::Grid => Report::Grid(from_json(text)?),
    })
}

struct CsvDoc {
    meta: HashMap<String, String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvDoc {
    fn read(text: &str, expected_header: &[&str]) -> Result<Self> {
        let mut meta = HashMap::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            let body = line.trim_start_matches('#').trim();
            if let Some((k, v)) = body.split_once('=') {
                meta.insert(k.to_string(), v.to_string());
            }
        }
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| parse_error(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        if header != expected_header {
            return Err(parse_error(format!(
                "expected header {expected_header:?}, found {header:?}"
            )));
        }
        let rows = reader
            .records()
            .map(|r| {
                r.map(|rec| rec.iter().map(str::to_string).collect())
                    .map_err(|e| parse_error(e.to_string()))
            })
            .collect::<Result<_>>()?;
        Ok(CsvDoc { meta, header, rows })
    }

    fn meta<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self
            .meta
            .get(key)
            .ok_or_else(|| parse_error(format!("missing metadata `{key}`")))?;
        cell(raw, key)
    }

    fn meta_opt_real(&self, key: &str) -> Result<Option<f64>> {
        match self.meta.get(key).map(String::as_str) {
            None | Some("") => Ok(None),
            Some(raw) => cell(raw, key).map(Some),
        }
    }

    fn column<T: FromStr>(&self, row: &[String], i: usize) -> Result<T> {
        cell(&row[i], &self.header[i])
    }
}

fn cell<T: FromStr>(raw: &str, what: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| parse_error(format!("cannot parse `{raw}` as {what}")))
}

fn parse_csv(kind: ReportKind, text: &str) -> Result<Report> {
    Ok(match kind {
        ReportKind::Primes => {
            let doc = CsvDoc::read(text, &["p", "recip_prefix", "recip_sq_prefix"])?;
            let mut primes = Vec::with_capacity(doc.rows.len());
            let mut recip = Vec::with_capacity(doc.rows.len());
            let mut recip_sq = Vec::with_capacity(doc.rows.len());
            for row in &doc.rows {
                primes.push(doc.column(row, 0)?);
                recip.push(doc.column(row, 1)?);
                recip_sq.push(doc.column(row, 2)?);
            }
            Report::Primes(PrimeTable::from_parts(
                doc.meta("limit")?,
                primes,
                recip,
                recip_sq,
            ))
        }
        ReportKind::Moments => {
            let doc = CsvDoc::read(
                text,
                &["x", "mu", "sigma_sq", "loglog_x", "mertens_gap", "zeta_partial"],
            )?;
            let rows = doc
                .rows
                .iter()
                .map(|row| {
                    Ok(MomentReport {
                        x: doc.column(row, 0)?,
                        mu: doc.column(row, 1)?,
                        sigma_sq: doc.column(row, 2)?,
                        loglog_x: doc.column(row, 3)?,
                        mertens_gap: doc.column(row, 4)?,
                        zeta_partial: doc.column(row, 5)?,
                    })
                })
                .collect::<Result<_>>()?;
            Report::Moments(rows)
        }
        ReportKind::Pmf => {
            let doc = CsvDoc::read(text, &["k", "mass"])?;
            let mass = doc
                .rows
                .iter()
                .map(|row| doc.column(row, 1))
                .collect::<Result<_>>()?;
            Report::Pmf(Pmf {
                x: doc.meta("x")?,
                support_cap: doc.meta("support_cap")?,
                mass,
                truncated_tail: doc.meta("truncated_tail")?,
                tail_warning: doc.meta("tail_warning")?,
            })
        }
        ReportKind::Lindeberg => {
            let doc = CsvDoc::read(text, &["x", "epsilon", "sigma_sq", "threshold", "value"])?;
            let rows = doc
                .rows
                .iter()
                .map(|row| {
                    Ok(LindebergReport {
                        x: doc.column(row, 0)?,
                        epsilon: doc.column(row, 1)?,
                        sigma_sq: doc.column(row, 2)?,
                        threshold: doc.column(row, 3)?,
                        value: doc.column(row, 4)?,
                    })
                })
                .collect::<Result<_>>()?;
            Report::Lindeberg(rows)
        }
        ReportKind::Sample => {
            let doc = CsvDoc::read(text, &["omega"])?;
            let omegas = doc
                .rows
                .iter()
                .map(|row| doc.column(row, 0))
                .collect::<Result<_>>()?;
            let params = ModelParams {
                x: doc.meta("x")?,
                seed: doc.meta("seed")?,
                trials: doc.meta("trials")?,
                chunk_size: doc.meta("chunk_size")?,
            };
            Report::Sample(SampleBatch {
                params,
                omegas,
                provenance: Provenance {
                    generator: doc.meta("generator")?,
                    chunk_size: params.chunk_size,
                    chunk_count: doc.meta("chunk_count")?,
                    last_chunk_len: doc.meta("last_chunk_len")?,
                },
            })
        }
        ReportKind::Ks => {
            let doc = CsvDoc::read(text, &["k", "count"])?;
            let histogram = doc
                .rows
                .iter()
                .map(|row| Ok((doc.column(row, 0)?, doc.column(row, 1)?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            Report::Ks(EmpiricalSummary {
                n: doc.meta("n")?,
                mean: doc.meta("mean")?,
                variance: doc.meta("variance")?,
                histogram,
                ks_vs_normal: doc.meta_opt_real("ks_vs_normal")?,
                ks_vs_exact: doc.meta_opt_real("ks_vs_exact")?,
            })
        }
        ReportKind::Census => {
            let doc = CsvDoc::read(text, &["omega", "count"])?;
            let counts = doc
                .rows
                .iter()
                .map(|row| Ok((doc.column(row, 0)?, doc.column(row, 1)?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            Report::Census(OmegaCensus::from_counts(
                doc.meta("x")?,
                counts,
                doc.meta("omega_total")?,
            ))
        }
        ReportKind::Grid => {
            let doc = CsvDoc::read(
                text,
                &["x", "mu", "sigma_sq", "mertens_gap", "d_exact_vs_normal"],
            )?;
            let rows = doc
                .rows
                .iter()
                .map(|row| {
                    Ok(GridRow {
                        x: doc.column(row, 0)?,
                        mu: doc.column(row, 1)?,
                        sigma_sq: doc.column(row, 2)?,
                        mertens_gap: doc.column(row, 3)?,
                        d_exact_vs_normal: doc.column(row, 4)?,
                    })
                })
                .collect::<Result<_>>()?;
            Report::Grid(rows)
        }
    })
}

/// Single-column CSV (`z`) of already sorted standardized values.
pub fn sorted_sample_csv(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 24 + 2);
    out.push_str("z\n");
    for v in values {
        out.push_str(&real(*v));
        out.push('\n');
    }
    out
}

/// Where a report goes: a file path, or standard output for `-`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Destination {
    Stdout,
    File(PathBuf),
}

impl From<&str> for Destination {
    fn from(s: &str) -> Self {
        if s == "-" {
            Destination::Stdout
        } else {
            Destination::File(PathBuf::from(s))
        }
    }
}

impl std::fmt::Display for Destination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Destination::Stdout => f.write_str("-"),
            Destination::File(p) => write!(f, "{}", p.display()),
        }
    }
}

pub fn emit(dest: &Destination, contents: &str) -> Result<()> {
    match dest {
        Destination::Stdout => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(contents.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
        Destination::File(path) => write_atomic(path, contents.as_bytes()),
    }
}

/// Writes to a temporary file beside `path`, then renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents)
        .and_then(|_| tmp.as_file().sync_all())
        .map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Reads a report file written by [`emit`].
pub fn read_report(path: &Path, kind: ReportKind, format: Format) -> Result<Report> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Report::parse(kind, format, &text).map_err(|e| match e {
        Error::Parse { reason, .. } => Error::Parse {
            path: path.to_path_buf(),
            reason,
        },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{classical, exact, model, stats};
    use proptest::prelude::*;

    fn roundtrip(report: &Report) {
        for format in [Format::Csv, Format::Json] {
            let text = report.render(format).unwrap();
            let back = Report::parse(report.kind(), format, &text).unwrap();
            assert_eq!(&back, report, "{format:?}");
        }
    }

    #[test]
    fn every_report_kind_roundtrips() {
        let table = PrimeTable::sieve(2_000).unwrap();
        roundtrip(&Report::Primes(PrimeTable::sieve(200).unwrap()));
        roundtrip(&Report::Moments(vec![exact::exact_moments(&table, 1_000).unwrap()]));
        roundtrip(&Report::Moments(vec![
            exact::exact_moments(&table, 100).unwrap(),
            exact::exact_moments(&table, 2_000).unwrap(),
        ]));
        let pmf = exact::poisson_binomial_pmf_default(&table, 2_000).unwrap();
        roundtrip(&Report::Pmf(pmf.clone()));
        roundtrip(&Report::Lindeberg(vec![LindebergReport {
            x: 100,
            epsilon: 0.1,
            sigma_sq: 1.25,
            threshold: 0.111_803_398_874_989_48,
            value: 0.333,
        }]));
        let params = model::ModelParams::new(2_000, 5, 300, 64).unwrap();
        let batch = model::sample_omega(&table, &params).unwrap();
        roundtrip(&Report::Sample(batch.clone()));
        let moments = exact::exact_moments(&table, 2_000).unwrap();
        roundtrip(&Report::Ks(
            stats::summarize_with_ks(&batch, &pmf, moments.mu, moments.sigma()).unwrap(),
        ));
        roundtrip(&Report::Ks(stats::summarize(&batch).unwrap()));
        roundtrip(&Report::Census(classical::omega_census(&table, 2_000).unwrap()));
        roundtrip(&Report::Grid(vec![GridRow {
            x: 100,
            mu: 1.8,
            sigma_sq: 1.4,
            mertens_gap: 0.27,
            d_exact_vs_normal: 0.18,
        }]));
    }

    #[test]
    fn csv_layout() {
        let table = PrimeTable::sieve(10).unwrap();
        let text = Report::Census(classical::omega_census(&table, 10).unwrap())
            .render(Format::Csv)
            .unwrap();
        assert_eq!(text, "# x=10\n# omega_total=11\nomega,count\n0,1\n1,7\n2,2\n");
        assert_eq!(real(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn wrong_header_is_rejected() {
        let err = Report::parse(ReportKind::Census, Format::Csv, "k,mass\n0,1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);

        let missing = dir.path().join("no/such/dir/out.csv");
        assert!(matches!(write_atomic(&missing, b"x"), Err(Error::Io { .. })));
    }

    proptest! {
        #[test]
        fn reals_survive_csv(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let back: f64 = real(v).parse().unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }
    }
}
