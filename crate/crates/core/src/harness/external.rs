use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::{HarnessError, ScoreKey, ScoreMatrix, SplitPlan};
use crate::metrics::{self, MetricsError, TaggedCorpus, Vocabulary};

pub const METRIC_TOKEN: &str = "token";
pub const METRIC_SENTENCE: &str = "sentence";
pub const METRIC_OOV: &str = "oov";

const PLACEHOLDERS: [&str; 5] = ["{train}", "{valid}", "{eval}", "{tokens}", "{out}"];

/// A named corpus the plan's item indices refer to.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub id: String,
    pub corpus: TaggedCorpus,
}

/// Which sentences define the vocabulary for OOV accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OovVocabulary {
    #[default]
    Train,
    TrainAndValidation,
}

impl std::str::FromStr for OovVocabulary {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Self::Train),
            "train+valid" => Ok(Self::TrainAndValidation),
            other => Err(format!("expected `train` or `train+valid`, got `{other}`")),
        }
    }
}

impl std::fmt::Display for OovVocabulary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Train => "train",
            Self::TrainAndValidation => "train+valid",
        })
    }
}

/// Shell command with `{train}`, `{valid}`, `{eval}`, `{tokens}` and `{out}`
/// placeholders. `{eval}` is the tagged evaluation file, `{tokens}` the same
/// sentences without tags; `{out}` is where the tagger must write its
/// predictions in the tagged-corpus format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandTemplate(String);

impl CommandTemplate {
    pub fn parse(template: &str) -> Result<Self, HarnessError> {
        if !template.contains("{out}") {
            return Err(HarnessError::InvalidTemplate("missing {out} placeholder".into()));
        }
        if !template.contains("{eval}") && !template.contains("{tokens}") {
            return Err(HarnessError::InvalidTemplate(
                "missing {eval} or {tokens} placeholder".into(),
            ));
        }
        Ok(Self(template.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn expand(&self, files: &RoleFiles) -> String {
        let values = [&files.train, &files.valid, &files.eval, &files.tokens, &files.out];
        let mut cmd = self.0.clone();
        for (ph, path) in PLACEHOLDERS.iter().zip(values) {
            cmd = cmd.replace(ph, &shell_quote(path));
        }
        cmd
    }
}

fn shell_quote(path: &Path) -> String {
    format!("'{}'", path.display().to_string().replace('\'', r"'\''"))
}

#[derive(Debug, Clone)]
pub struct ExternalOptions {
    pub workers: usize,
    pub oov_vocabulary: OovVocabulary,
    /// Scratch directory for role files; created if absent.
    pub work_dir: PathBuf,
    pub keep_files: bool,
}

struct RoleFiles {
    train: PathBuf,
    valid: PathBuf,
    eval: PathBuf,
    tokens: PathBuf,
    out: PathBuf,
}

type CellResult = Result<[Option<f64>; 3], HarnessError>;

/// Runs an external tagger over every (repetition, fold) cell of `plan` and
/// scores its predictions with token, sentence and OOV accuracy.
///
/// Cells may run concurrently (`options.workers`); the returned matrix is
/// keyed, so the merge order does not depend on scheduling. A fold without
/// OOV tokens yields a missing OOV score.
pub fn run_external(
    plan: &SplitPlan,
    dataset: &Dataset,
    system_id: &str,
    command: &CommandTemplate,
    options: &ExternalOptions,
) -> Result<ScoreMatrix, HarnessError> {
    if plan.n_items() != dataset.corpus.len() {
        return Err(HarnessError::InvalidArgument(format!(
            "plan covers {} items but dataset {} has {} sentences",
            plan.n_items(),
            dataset.id,
            dataset.corpus.len()
        )));
    }
    let cells: Vec<(usize, usize)> = (0..plan.m())
        .flat_map(|r| (0..plan.k()).map(move |f| (r, f)))
        .collect();
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<CellResult>>> = Mutex::new((0..cells.len()).map(|_| None).collect());
    let workers = options.workers.clamp(1, cells.len());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= cells.len() {
                    break;
                }
                let (rep, fold) = cells[i];
                let outcome = run_cell(plan, dataset, system_id, command, options, rep, fold);
                let failed = outcome.is_err();
                results.lock().expect("poisoned")[i] = Some(outcome);
                if failed {
                    // stop handing out work; cells already running finish
                    next.store(cells.len(), Ordering::Relaxed);
                }
            });
        }
    });

    let mut matrix = ScoreMatrix::new();
    for ((rep, fold), outcome) in cells.into_iter().zip(results.into_inner().expect("poisoned")) {
        let Some(outcome) = outcome else { continue };
        let [token, sentence, oov] = outcome?;
        for (metric, value) in [(METRIC_TOKEN, token), (METRIC_SENTENCE, sentence), (METRIC_OOV, oov)] {
            matrix.insert(ScoreKey::new(&dataset.id, system_id, metric, rep, fold), value)?;
        }
    }
    Ok(matrix)
}

fn run_cell(
    plan: &SplitPlan,
    dataset: &Dataset,
    system_id: &str,
    command: &CommandTemplate,
    options: &ExternalOptions,
    rep: usize,
    fold: usize,
) -> Result<[Option<f64>; 3], HarnessError> {
    let roles = plan.fold_roles(rep, fold)?;
    let dir = options
        .work_dir
        .join(sanitize(&dataset.id))
        .join(sanitize(system_id))
        .join(format!("r{rep}_f{fold}"));
    std::fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
    let files = RoleFiles {
        train: dir.join("train.tsv"),
        valid: dir.join("valid.tsv"),
        eval: dir.join("eval.tsv"),
        tokens: dir.join("tokens.txt"),
        out: dir.join("pred.tsv"),
    };

    let corpus = &dataset.corpus;
    let subset = |idx: &[usize]| -> Result<Option<TaggedCorpus>, HarnessError> {
        if idx.is_empty() {
            return Ok(None);
        }
        corpus
            .select(idx)
            .map(Some)
            .map_err(|e| HarnessError::InvalidArgument(e.to_string()))
    };
    let train = subset(&roles.train)?;
    let valid = subset(&roles.validation)?;
    let gold = subset(&roles.eval)?.expect("folds are non-empty when n_items >= k");

    let text = |c: &Option<TaggedCorpus>| c.as_ref().map(TaggedCorpus::to_text).unwrap_or_default();
    write_file(&files.train, &text(&train))?;
    write_file(&files.valid, &text(&valid))?;
    write_file(&files.eval, &gold.to_text())?;
    write_file(&files.tokens, &gold.tokens_text())?;
    let _ = std::fs::remove_file(&files.out);

    let expanded = command.expand(&files);
    let output = Command::new("sh")
        .arg("-c")
        .arg(&expanded)
        .current_dir(&dir)
        .output()
        .map_err(|e| HarnessError::CommandFailed {
            command: expanded.clone(),
            status: None,
            diagnostics: e.to_string(),
        })?;
    if !output.status.success() {
        let mut diagnostics = String::from_utf8_lossy(&output.stderr).into_owned();
        diagnostics.push_str(&String::from_utf8_lossy(&output.stdout));
        return Err(HarnessError::CommandFailed {
            command: expanded,
            status: output.status.code(),
            diagnostics,
        });
    }

    let unreadable = |detail: String| HarnessError::OutputUnreadable {
        path: files.out.display().to_string(),
        detail,
    };
    let pred = TaggedCorpus::read(&files.out).map_err(|e| unreadable(e.to_string()))?;

    let mut vocab = Vocabulary::new();
    if let Some(t) = &train {
        vocab.extend_from_corpus(t);
    }
    if options.oov_vocabulary == OovVocabulary::TrainAndValidation {
        if let Some(v) = &valid {
            vocab.extend_from_corpus(v);
        }
    }
    let token = metrics::token_accuracy(&gold, &pred).map_err(|e| unreadable(e.to_string()))?;
    let sentence = metrics::sentence_accuracy(&gold, &pred).map_err(|e| unreadable(e.to_string()))?;
    let oov = match metrics::oov_accuracy(&vocab, &gold, &pred) {
        Ok(v) => Some(v),
        Err(MetricsError::NoOovTokens) => None,
        Err(e) => return Err(unreadable(e.to_string())),
    };

    if !options.keep_files {
        let _ = std::fs::remove_dir_all(&dir);
    }
    Ok([Some(token), Some(sentence), oov])
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    std::fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, e: std::io::Error) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_requires_placeholders() {
        assert!(CommandTemplate::parse("cp {eval} {out}").is_ok());
        assert!(CommandTemplate::parse("tagger < {tokens} > {out}").is_ok());
        assert!(CommandTemplate::parse("cp {eval} pred.tsv").is_err());
        assert!(CommandTemplate::parse("tagger > {out}").is_err());
    }

    #[test]
    fn quoting_survives_apostrophes() {
        assert_eq!(shell_quote(Path::new("/tmp/it's")), r"'/tmp/it'\''s'");
    }

    #[test]
    fn oov_vocabulary_parses() {
        assert_eq!("train".parse::<OovVocabulary>(), Ok(OovVocabulary::Train));
        assert_eq!("train+valid".parse::<OovVocabulary>(), Ok(OovVocabulary::TrainAndValidation));
        assert!("all".parse::<OovVocabulary>().is_err());
    }
}
