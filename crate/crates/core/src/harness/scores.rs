use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use super::HarnessError;

pub const SCORE_HEADER: [&str; 6] = ["dataset", "system", "metric", "repetition", "fold", "score"];

/// Identifies one evaluation cell.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScoreKey {
    pub dataset: String,
    pub system: String,
    pub metric: String,
    pub repetition: usize,
    pub fold: usize,
}

impl ScoreKey {
    pub fn new(
        dataset: impl Into<String>,
        system: impl Into<String>,
        metric: impl Into<String>,
        repetition: usize,
        fold: usize,
    ) -> Self {
        Self {
            dataset: dataset.into(),
            system: system.into(),
            metric: metric.into(),
            repetition,
            fold,
        }
    }
}

/// Per-(dataset, system, metric, repetition, fold) scores. `None` is a
/// missing observation (written as `NA`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreMatrix {
    entries: BTreeMap<ScoreKey, Option<f64>>,
}

impl ScoreMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: ScoreKey, score: Option<f64>) -> Result<(), HarnessError> {
        if let Some(s) = score {
            if !(0.0..=1.0).contains(&s) {
                return Err(HarnessError::ScoreOutOfRange { key: Box::new(key), score: s });
            }
        }
        if self.entries.contains_key(&key) {
            return Err(HarnessError::DuplicateKey(Box::new(key)));
        }
        self.entries.insert(key, score);
        Ok(())
    }

    /// Moves every entry of `other` into `self`, rejecting duplicates.
    pub fn merge(&mut self, other: ScoreMatrix) -> Result<(), HarnessError> {
        for (k, v) in other.entries {
            self.insert(k, v)?;
        }
        Ok(())
    }

    pub fn get(&self, key: &ScoreKey) -> Option<Option<f64>> {
        self.entries.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in key order.
    pub fn iter(&self) -> impl Iterator<Item = (&ScoreKey, Option<f64>)> {
        self.entries.iter().map(|(k, v)| (k, *v))
    }

    pub fn systems(&self) -> BTreeSet<&str> {
        self.entries.keys().map(|k| k.system.as_str()).collect()
    }

    pub fn metrics(&self) -> BTreeSet<&str> {
        self.entries.keys().map(|k| k.metric.as_str()).collect()
    }

    pub fn datasets(&self) -> BTreeSet<&str> {
        self.entries.keys().map(|k| k.dataset.as_str()).collect()
    }

    /// Scores of one system on one metric, grouped by dataset and keyed by
    /// (repetition, fold).
    pub fn cells(
        &self,
        system: &str,
        metric: &str,
    ) -> BTreeMap<&str, BTreeMap<(usize, usize), Option<f64>>> {
        let mut out: BTreeMap<&str, BTreeMap<(usize, usize), Option<f64>>> = BTreeMap::new();
        for (k, v) in &self.entries {
            if k.system == system && k.metric == metric {
                out.entry(k.dataset.as_str())
                    .or_default()
                    .insert((k.repetition, k.fold), *v);
            }
        }
        out
    }

    /// Parses the score CSV. Lines starting with `#` are comments.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, HarnessError> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(csv_error)?.clone();
        let found: Vec<&str> = headers.iter().collect();
        if found != SCORE_HEADER {
            return Err(HarnessError::Parse {
                line: 1,
                detail: format!(
                    "expected header `{}`, found `{}`",
                    SCORE_HEADER.join(","),
                    found.join(",")
                ),
            });
        }
        let mut matrix = Self::new();
        for record in rdr.records() {
            let record = record.map_err(csv_error)?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let bad = |detail: String| HarnessError::Parse { line, detail };
            if record.len() != 6 {
                return Err(bad(format!("expected 6 fields, found {}", record.len())));
            }
            let index = |i: usize, name: &str| {
                record[i]
                    .parse::<usize>()
                    .map_err(|_| bad(format!("{name} must be a non-negative integer, got {:?}", &record[i])))
            };
            let repetition = index(3, "repetition")?;
            let fold = index(4, "fold")?;
            let score = match &record[5] {
                "NA" => None,
                s => Some(
                    s.parse::<f64>()
                        .map_err(|_| bad(format!("score must be a decimal or NA, got {s:?}")))?,
                ),
            };
            for (i, name) in [(0, "dataset"), (1, "system"), (2, "metric")] {
                if record[i].is_empty() {
                    return Err(bad(format!("{name} is empty")));
                }
            }
            let key = ScoreKey::new(&record[0], &record[1], &record[2], repetition, fold);
            matrix.insert(key, score).map_err(|e| bad(e.to_string()))?;
        }
        Ok(matrix)
    }

    pub fn write_csv<W: Write>(&self, writer: W, manifest: Option<&str>) -> Result<(), HarnessError> {
        let mut writer = writer;
        if let Some(m) = manifest {
            writeln!(writer, "# manifest: {m}").map_err(|e| HarnessError::Io(e.to_string()))?;
        }
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(SCORE_HEADER).map_err(csv_error)?;
        for (k, v) in &self.entries {
            let score = v.map_or_else(|| "NA".to_string(), |s| s.to_string());
            w.write_record([
                k.dataset.as_str(),
                k.system.as_str(),
                k.metric.as_str(),
                &k.repetition.to_string(),
                &k.fold.to_string(),
                &score,
            ])
            .map_err(csv_error)?;
        }
        w.flush().map_err(|e| HarnessError::Io(e.to_string()))
    }
}

fn csv_error(e: csv::Error) -> HarnessError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    HarnessError::Parse {
        line,
        detail: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_out_of_range() {
        let mut m = ScoreMatrix::new();
        let key = ScoreKey::new("d", "s", "token", 0, 0);
        m.insert(key.clone(), Some(0.5)).unwrap();
        assert!(matches!(m.insert(key, None), Err(HarnessError::DuplicateKey(_))));
        assert!(matches!(
            m.insert(ScoreKey::new("d", "s", "token", 0, 1), Some(1.5)),
            Err(HarnessError::ScoreOutOfRange { .. })
        ));
    }

    #[test]
    fn csv_round_trip_with_missing_values() {
        let mut m = ScoreMatrix::new();
        m.insert(ScoreKey::new("ptb", "a", "oov", 1, 2), None).unwrap();
        m.insert(ScoreKey::new("ptb", "a", "token", 0, 0), Some(0.9731)).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf, Some("manifest.txt")).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("ptb,a,oov,1,2,NA"));
        assert_eq!(ScoreMatrix::read_csv(text.as_bytes()).unwrap(), m);
    }

    #[test]
    fn csv_rows_in_any_order() {
        let text = "dataset,system,metric,repetition,fold,score\n\
                    d,b,token,0,1,0.5\nd,a,token,0,0,0.25\n";
        let m = ScoreMatrix::read_csv(text.as_bytes()).unwrap();
        let first = m.iter().next().unwrap();
        assert_eq!(first.0.system, "a");
    }

    #[test]
    fn csv_missing_column_is_parse_error() {
        let text = "dataset,system,repetition,fold,score\nd,a,0,0,0.5\n";
        assert!(matches!(
            ScoreMatrix::read_csv(text.as_bytes()),
            Err(HarnessError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn csv_duplicate_rows_are_rejected() {
        let text = "dataset,system,metric,repetition,fold,score\n\
                    d,a,token,0,0,0.5\nd,a,token,0,0,0.6\n";
        assert!(ScoreMatrix::read_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn csv_bad_score() {
        let text = "dataset,system,metric,repetition,fold,score\nd,a,token,0,0,high\n";
        assert!(matches!(
            ScoreMatrix::read_csv(text.as_bytes()),
            Err(HarnessError::Parse { line: 2, .. })
        ));
    }
}
