//! Text formats for chains, decision reports and key-value metadata.
//!
//! CSV outputs may start with `#` comment lines (used to point at the run
//! manifest); every reader here skips them.

use std::fmt::Display;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::decision::{DecisionTriple, Region};
use crate::model::{GammaPrior, PosteriorChains, PriorSummary};

pub const CHAINS_HEADER: [&str; 4] = ["chain", "draw", "parameter", "value"];
pub const REPORT_HEADER: [&str; 9] = [
    "system_a",
    "system_b",
    "metric",
    "p_left",
    "p_rope",
    "p_right",
    "verdict",
    "n_samples",
    "rope_halfwidth",
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IoError {
    #[error("{0}")]
    Io(String),
    #[error("{source_name}: line {line}: {detail}")]
    Parse {
        source_name: String,
        line: u64,
        detail: String,
    },
    #[error("{source_name}: missing key '{key}'")]
    MissingKey { source_name: String, key: String },
}

fn io_err(path: &Path, e: impl Display) -> IoError {
    IoError::Io(format!("{}: {e}", path.display()))
}

fn csv_err(name: &str, e: csv::Error) -> IoError {
    let line = e.position().map_or(0, |p| p.line());
    IoError::Parse {
        source_name: name.to_string(),
        line,
        detail: e.to_string(),
    }
}

/// `key = value` lines; blank lines and `#` comments are ignored.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>, IoError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| IoError::Parse {
            source_name: "key-value file".into(),
            line: i as u64 + 1,
            detail: format!("expected 'key = value', got '{line}'"),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn format_key_values(pairs: &[(String, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

fn lookup<'a>(pairs: &'a [(String, String)], key: &str, name: &str) -> Result<&'a str, IoError> {
    pairs
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| IoError::MissingKey {
            source_name: name.to_string(),
            key: key.to_string(),
        })
}

fn parse_f64(value: &str, key: &str, name: &str) -> Result<f64, IoError> {
    value.parse().map_err(|_| IoError::Parse {
        source_name: name.to_string(),
        line: 0,
        detail: format!("{key}: not a number: '{value}'"),
    })
}

fn join_f64(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

/// Sidecar metadata path for a chains CSV.
pub fn chains_meta_path(csv_path: &Path) -> PathBuf {
    let mut s = csv_path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Key-value description of a fit, without the draws.
pub fn chains_metadata(chains: &PosteriorChains) -> Vec<(String, String)> {
    let p = &chains.priors;
    let mut kv = vec![
        ("dataset_ids".to_string(), chains.dataset_ids.join(",")),
        ("n_chains".into(), chains.n_chains().to_string()),
        ("draws_per_chain".into(), chains.draws_per_chain().to_string()),
        (
            "standardization_constant".into(),
            chains.standardization_constant.to_string(),
        ),
        ("prior.delta0_bound".into(), p.delta0_bound.to_string()),
        ("prior.sigma0_upper".into(), p.sigma0_upper.to_string()),
        ("prior.sigma_lower".into(), p.sigma_lower.to_string()),
        ("prior.sigma_upper".into(), join_f64(&p.sigma_upper)),
        ("prior.nu_shape".into(), p.nu_prior.shape.to_string()),
        ("prior.nu_rate".into(), p.nu_prior.rate.to_string()),
        ("prior.nu_min".into(), p.nu_min.to_string()),
    ];
    for d in &chains.diagnostics {
        kv.push((format!("r_hat.{}", d.name), d.r_hat.to_string()));
        kv.push((format!("ess.{}", d.name), format!("{:.1}", d.ess)));
        if let Some(w) = &d.warning {
            kv.push((format!("warning.{}", d.name), w.clone()));
        }
    }
    kv
}

/// Writes the draws (working scale) and the `.meta` sidecar. `extra` is
/// appended to the sidecar, e.g. the seed and sampler settings.
pub fn write_chains(
    csv_path: &Path,
    chains: &PosteriorChains,
    extra: &[(String, String)],
    manifest: Option<&str>,
) -> Result<(), IoError> {
    let file = File::create(csv_path).map_err(|e| io_err(csv_path, e))?;
    let mut w = BufWriter::new(file);
    if let Some(m) = manifest {
        writeln!(w, "# manifest: {m}").map_err(|e| io_err(csv_path, e))?;
    }
    writeln!(w, "{}", CHAINS_HEADER.join(",")).map_err(|e| io_err(csv_path, e))?;
    for name in chains.parameter_names() {
        let draws = chains.parameter(&name).expect("listed parameter");
        for (c, chain) in draws.iter().enumerate() {
            for (d, v) in chain.iter().enumerate() {
                writeln!(w, "{c},{d},{name},{v}").map_err(|e| io_err(csv_path, e))?;
            }
        }
    }
    w.flush().map_err(|e| io_err(csv_path, e))?;

    let meta_path = chains_meta_path(csv_path);
    let mut kv = Vec::new();
    if let Some(m) = manifest {
        kv.push(("manifest".to_string(), m.to_string()));
    }
    kv.extend(chains_metadata(chains));
    kv.extend_from_slice(extra);
    std::fs::write(&meta_path, format_key_values(&kv)).map_err(|e| io_err(&meta_path, e))
}

/// Reads a chains CSV and its sidecar back; diagnostics are recomputed.
pub fn read_chains(csv_path: &Path) -> Result<PosteriorChains, IoError> {
    let meta_path = chains_meta_path(csv_path);
    let meta_name = meta_path.display().to_string();
    let text = std::fs::read_to_string(&meta_path).map_err(|e| io_err(&meta_path, e))?;
    let kv = parse_key_values(&text)?;
    let get = |k: &str| lookup(&kv, k, &meta_name);
    let num = |k: &str| get(k).and_then(|v| parse_f64(v, k, &meta_name));
    let count = |k: &str| -> Result<usize, IoError> {
        get(k)?.parse().map_err(|_| IoError::Parse {
            source_name: meta_name.clone(),
            line: 0,
            detail: format!("{k}: not a count"),
        })
    };

    let ids_raw = get("dataset_ids")?;
    let dataset_ids: Vec<String> = if ids_raw.is_empty() {
        Vec::new()
    } else {
        ids_raw.split(',').map(str::to_string).collect()
    };
    let sigma_upper = get("prior.sigma_upper")?
        .split(',')
        .map(|v| parse_f64(v, "prior.sigma_upper", &meta_name))
        .collect::<Result<Vec<_>, _>>()?;
    let priors = PriorSummary {
        delta0_bound: num("prior.delta0_bound")?,
        sigma0_upper: num("prior.sigma0_upper")?,
        sigma_lower: num("prior.sigma_lower")?,
        sigma_upper,
        nu_prior: GammaPrior {
            shape: num("prior.nu_shape")?,
            rate: num("prior.nu_rate")?,
        },
        nu_min: num("prior.nu_min")?,
    };
    let n_chains = count("n_chains")?;
    let n_draws = count("draws_per_chain")?;
    let q = dataset_ids.len();
    let blank = || vec![vec![f64::NAN; n_draws]; n_chains];
    let mut chains = PosteriorChains {
        dataset_ids,
        delta0: blank(),
        sigma0: blank(),
        nu: blank(),
        delta: (0..q).map(|_| blank()).collect(),
        sigma: (0..q).map(|_| blank()).collect(),
        standardization_constant: num("standardization_constant")?,
        priors,
        diagnostics: Vec::new(),
    };

    let name = csv_path.display().to_string();
    let file = File::open(csv_path).map_err(|e| io_err(csv_path, e))?;
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    let headers = rdr.headers().map_err(|e| csv_err(&name, e))?.clone();
    if headers.iter().ne(CHAINS_HEADER) {
        return Err(IoError::Parse {
            source_name: name,
            line: 1,
            detail: format!("expected header {}", CHAINS_HEADER.join(",")),
        });
    }
    let mut seen = 0usize;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(&name, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |detail: String| IoError::Parse {
            source_name: name.clone(),
            line,
            detail,
        };
        let c: usize = rec[0].parse().map_err(|_| bad("bad chain index".into()))?;
        let d: usize = rec[1].parse().map_err(|_| bad("bad draw index".into()))?;
        let v: f64 = rec[3].parse().map_err(|_| bad("bad value".into()))?;
        let param = &rec[2];
        let slot = match param {
            "delta0" => &mut chains.delta0,
            "sigma0" => &mut chains.sigma0,
            "nu" => &mut chains.nu,
            other => {
                let (kind, rest) = other.split_once('[').ok_or_else(|| bad(format!("unknown parameter {other}")))?;
                let idx: usize = rest
                    .strip_suffix(']')
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad(format!("unknown parameter {other}")))?;
                let table = match kind {
                    "delta" => &mut chains.delta,
                    "sigma" => &mut chains.sigma,
                    _ => return Err(bad(format!("unknown parameter {other}"))),
                };
                table.get_mut(idx).ok_or_else(|| bad(format!("dataset index {idx} out of range")))?
            }
        };
        let cell = slot
            .get_mut(c)
            .and_then(|ch| ch.get_mut(d))
            .ok_or_else(|| bad(format!("draw ({c}, {d}) out of range")))?;
        *cell = v;
        seen += 1;
    }
    let expected = n_chains * n_draws * (3 + 2 * q);
    if seen != expected {
        return Err(IoError::Parse {
            source_name: name,
            line: 0,
            detail: format!("expected {expected} draws, found {seen}"),
        });
    }
    chains.diagnostics = chains.compute_diagnostics();
    Ok(chains)
}

/// One row of the decision report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub system_a: String,
    pub system_b: String,
    pub metric: String,
    pub triple: DecisionTriple,
    pub rope_halfwidth: f64,
}

pub fn write_report<W: Write>(writer: W, rows: &[ReportRow], manifest: Option<&str>) -> Result<(), IoError> {
    let mut w = BufWriter::new(writer);
    let err = |e: std::io::Error| IoError::Io(format!("report: {e}"));
    if let Some(m) = manifest {
        writeln!(w, "# manifest: {m}").map_err(err)?;
    }
    let mut cw = csv::Writer::from_writer(w);
    let cerr = |e: csv::Error| IoError::Io(format!("report: {e}"));
    cw.write_record(REPORT_HEADER).map_err(cerr)?;
    for r in rows {
        let t = &r.triple;
        cw.write_record([
            r.system_a.clone(),
            r.system_b.clone(),
            r.metric.clone(),
            t.p_left.to_string(),
            t.p_rope.to_string(),
            t.p_right.to_string(),
            t.verdict.to_string(),
            t.n_samples.to_string(),
            r.rope_halfwidth.to_string(),
        ])
        .map_err(cerr)?;
    }
    cw.flush().map_err(|e| IoError::Io(format!("report: {e}")))
}

pub fn read_report<R: Read>(reader: R, name: &str) -> Result<Vec<ReportRow>, IoError> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_err(name, e))?.clone();
    if headers.iter().ne(REPORT_HEADER) {
        return Err(IoError::Parse {
            source_name: name.to_string(),
            line: 1,
            detail: format!("expected header {}", REPORT_HEADER.join(",")),
        });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(name, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |detail: String| IoError::Parse {
            source_name: name.to_string(),
            line,
            detail,
        };
        let f = |i: usize| -> Result<f64, IoError> {
            rec[i].parse().map_err(|_| bad(format!("{}: not a number", REPORT_HEADER[i])))
        };
        let (p_left, p_rope, p_right) = (f(3)?, f(4)?, f(5)?);
        let verdict: Region = rec[6].parse().map_err(bad)?;
        let n: u64 = rec[7].parse().map_err(|_| bad("n_samples: not a count".into()))?;
        let triple = if n > 0 {
            let c = |p: f64| (p * n as f64).round() as u64;
            DecisionTriple::from_counts(c(p_left), c(p_rope), c(p_right))
        } else {
            DecisionTriple {
                n_left: 0,
                n_rope: 0,
                n_right: 0,
                p_left,
                p_rope,
                p_right,
                n_samples: 0,
                verdict,
            }
        };
        rows.push(ReportRow {
            system_a: rec[0].to_string(),
            system_b: rec[1].to_string(),
            metric: rec[2].to_string(),
            triple,
            rope_halfwidth: f(8)?,
        });
    }
    Ok(rows)
}
