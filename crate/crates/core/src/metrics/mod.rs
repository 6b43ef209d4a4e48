//! Token, sentence and out-of-vocabulary accuracy over aligned tagged corpora.
//!
//! All three metrics require strict alignment: the same number of sentences,
//! the same sentence lengths and the same token strings at every position.

mod corpus;

pub use corpus::{Sentence, Tagged, TaggedCorpus, Vocabulary};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("corpus has no sentences")]
    EmptyCorpus,
    #[error("sentence {sentence} is empty")]
    EmptySentence { sentence: usize },
    #[error("empty token or tag at sentence {sentence}, position {position}")]
    EmptyField { sentence: usize, position: usize },
    #[error("shape mismatch: {detail}")]
    ShapeMismatch { detail: String },
    #[error("token mismatch at sentence {sentence}, position {position}: gold {gold:?}, predicted {pred:?}")]
    TokenMismatch {
        sentence: usize,
        position: usize,
        gold: String,
        pred: String,
    },
    #[error("no out-of-vocabulary tokens in the evaluation data")]
    NoOovTokens,
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("{path}: {detail}")]
    Io { path: String, detail: String },
}

/// A ratio of two counts, kept exact until it is turned into a float.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Proportion {
    pub hits: usize,
    pub total: usize,
}

impl Proportion {
    pub fn value(&self) -> f64 {
        self.hits as f64 / self.total as f64
    }
}

fn check_alignment(gold: &TaggedCorpus, pred: &TaggedCorpus) -> Result<(), MetricsError> {
    if gold.len() != pred.len() {
        return Err(MetricsError::ShapeMismatch {
            detail: format!("{} gold sentences vs {} predicted", gold.len(), pred.len()),
        });
    }
    for (i, (g, p)) in gold.sentences().iter().zip(pred.sentences()).enumerate() {
        if g.len() != p.len() {
            return Err(MetricsError::ShapeMismatch {
                detail: format!("sentence {i}: {} gold tokens vs {} predicted", g.len(), p.len()),
            });
        }
        for (j, (gt, pt)) in g.iter().zip(p).enumerate() {
            if gt.token != pt.token {
                return Err(MetricsError::TokenMismatch {
                    sentence: i,
                    position: j,
                    gold: gt.token.clone(),
                    pred: pt.token.clone(),
                });
            }
        }
    }
    Ok(())
}

pub fn token_counts(gold: &TaggedCorpus, pred: &TaggedCorpus) -> Result<Proportion, MetricsError> {
    check_alignment(gold, pred)?;
    let mut hits = 0;
    let mut total = 0;
    for (g, p) in gold.sentences().iter().zip(pred.sentences()) {
        total += g.len();
        hits += g.iter().zip(p).filter(|(a, b)| a.tag == b.tag).count();
    }
    Ok(Proportion { hits, total })
}

pub fn sentence_counts(
    gold: &TaggedCorpus,
    pred: &TaggedCorpus,
) -> Result<Proportion, MetricsError> {
    check_alignment(gold, pred)?;
    let hits = gold
        .sentences()
        .iter()
        .zip(pred.sentences())
        .filter(|(g, p)| g.iter().zip(p.iter()).all(|(a, b)| a.tag == b.tag))
        .count();
    Ok(Proportion {
        hits,
        total: gold.len(),
    })
}

pub fn oov_counts(
    train_vocab: &Vocabulary,
    gold: &TaggedCorpus,
    pred: &TaggedCorpus,
) -> Result<Proportion, MetricsError> {
    check_alignment(gold, pred)?;
    let mut hits = 0;
    let mut total = 0;
    for (g, p) in gold.sentences().iter().zip(pred.sentences()) {
        for (a, b) in g.iter().zip(p) {
            if !train_vocab.contains(&a.token) {
                total += 1;
                if a.tag == b.tag {
                    hits += 1;
                }
            }
        }
    }
    if total == 0 {
        return Err(MetricsError::NoOovTokens);
    }
    Ok(Proportion { hits, total })
}

/// Fraction of tokens whose predicted tag matches the gold tag.
pub fn token_accuracy(gold: &TaggedCorpus, pred: &TaggedCorpus) -> Result<f64, MetricsError> {
    token_counts(gold, pred).map(|p| p.value())
}

/// Fraction of sentences with no tagging errors.
pub fn sentence_accuracy(gold: &TaggedCorpus, pred: &TaggedCorpus) -> Result<f64, MetricsError> {
    sentence_counts(gold, pred).map(|p| p.value())
}

/// Token accuracy restricted to tokens absent from `train_vocab`.
///
/// Fails with [`MetricsError::NoOovTokens`] when there is nothing to score;
/// the harness records that fold as missing rather than inventing a value.
pub fn oov_accuracy(
    train_vocab: &Vocabulary,
    gold: &TaggedCorpus,
    pred: &TaggedCorpus,
) -> Result<f64, MetricsError> {
    oov_counts(train_vocab, gold, pred).map(|p| p.value())
}
