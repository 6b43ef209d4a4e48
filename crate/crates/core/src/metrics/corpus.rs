use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use super::MetricsError;

/// A (token, tag) pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tagged {
    pub token: String,
    pub tag: String,
}

impl Tagged {
    pub fn new(token: impl Into<String>, tag: impl Into<String>) -> Self {
        Self {
            token: token.into(),
            tag: tag.into(),
        }
    }
}

pub type Sentence = Vec<Tagged>;

/// A non-empty list of non-empty tagged sentences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedCorpus {
    sentences: Vec<Sentence>,
}

impl TaggedCorpus {
    pub fn new(sentences: Vec<Sentence>) -> Result<Self, MetricsError> {
        if sentences.is_empty() {
            return Err(MetricsError::EmptyCorpus);
        }
        for (i, s) in sentences.iter().enumerate() {
            if s.is_empty() {
                return Err(MetricsError::EmptySentence { sentence: i });
            }
            for (j, t) in s.iter().enumerate() {
                if t.token.is_empty() || t.tag.is_empty() {
                    return Err(MetricsError::EmptyField {
                        sentence: i,
                        position: j,
                    });
                }
            }
        }
        Ok(Self { sentences })
    }

    /// Builds a corpus from parallel token/tag lists; handy in tests.
    pub fn from_pairs(tokens: &[&[&str]], tags: &[&[&str]]) -> Result<Self, MetricsError> {
        if tokens.len() != tags.len() {
            return Err(MetricsError::ShapeMismatch {
                detail: format!("{} token rows vs {} tag rows", tokens.len(), tags.len()),
            });
        }
        let mut sentences = Vec::with_capacity(tokens.len());
        for (i, (tok, tag)) in tokens.iter().zip(tags).enumerate() {
            if tok.len() != tag.len() {
                return Err(MetricsError::ShapeMismatch {
                    detail: format!("sentence {i}: {} tokens vs {} tags", tok.len(), tag.len()),
                });
            }
            sentences.push(tok.iter().zip(tag.iter()).map(|(a, b)| Tagged::new(*a, *b)).collect());
        }
        Self::new(sentences)
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    /// The sub-corpus made of the given sentence indices, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self, MetricsError> {
        Self::new(indices.iter().map(|&i| self.sentences[i].clone()).collect())
    }

    /// Parses the tab-separated one-token-per-line format.
    pub fn parse(text: &str) -> Result<Self, MetricsError> {
        let mut sentences = Vec::new();
        let mut current: Sentence = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.is_empty() {
                if !current.is_empty() {
                    sentences.push(std::mem::take(&mut current));
                }
                continue;
            }
            let (token, tag) = line.split_once('\t').ok_or(MetricsError::Parse {
                line: lineno + 1,
                detail: "expected token<TAB>tag".into(),
            })?;
            if token.is_empty() || tag.is_empty() || tag.contains('\t') {
                return Err(MetricsError::Parse {
                    line: lineno + 1,
                    detail: "empty token or tag, or extra column".into(),
                });
            }
            current.push(Tagged::new(token, tag));
        }
        if !current.is_empty() {
            sentences.push(current);
        }
        Self::new(sentences)
    }

    pub fn read(path: &Path) -> Result<Self, MetricsError> {
        let text = std::fs::read_to_string(path).map_err(|e| MetricsError::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// Serializes with a blank line after every sentence.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.sentences {
            for t in s {
                let _ = writeln!(out, "{}\t{}", t.token, t.tag);
            }
            out.push('\n');
        }
        out
    }

    /// Tokens only, one per line, sentences separated by blank lines.
    pub fn tokens_text(&self) -> String {
        let mut out = String::new();
        for s in &self.sentences {
            for t in s {
                out.push_str(&t.token);
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }
}

/// Token types observed in training data. Membership is exact, case-sensitive.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: HashSet<String>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_corpus(corpus: &TaggedCorpus) -> Self {
        let mut v = Self::new();
        v.extend_from_corpus(corpus);
        v
    }

    pub fn extend_from_corpus(&mut self, corpus: &TaggedCorpus) {
        for s in corpus.sentences() {
            for t in s {
                self.tokens.insert(t.token.clone());
            }
        }
    }

    pub fn insert(&mut self, token: impl Into<String>) {
        self.tokens.insert(token.into());
    }

    pub fn contains(&self, token: &str) -> bool {
        self.tokens.contains(token)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// One token per line; blank lines are ignored.
    pub fn parse(text: &str) -> Self {
        Self {
            tokens: text
                .lines()
                .map(|l| l.strip_suffix('\r').unwrap_or(l))
                .filter(|l| !l.is_empty())
                .map(str::to_owned)
                .collect(),
        }
    }
}

impl<S: Into<String>> FromIterator<S> for Vocabulary {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self {
            tokens: iter.into_iter().map(Into::into).collect(),
        }
    }
}
