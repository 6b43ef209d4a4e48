//! Toy taggers used by the end-to-end fixtures.

use std::collections::HashMap;
use std::path::Path;

use baycv_core::metrics::{Tagged, TaggedCorpus};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Strategy {
    /// Every token gets the most frequent training tag.
    Majority,
    /// Most frequent tag per known token, majority tag otherwise.
    Unigram,
}

fn most_frequent(counts: &HashMap<String, usize>) -> String {
    // ties resolved alphabetically so the output is deterministic
    counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
        .map(|(tag, _)| tag.clone())
        .unwrap_or_else(|| "X".to_string())
}

fn read_tokens(path: &Path) -> Result<Vec<Vec<String>>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut sentences = Vec::new();
    let mut current = Vec::new();
    for line in text.lines() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
        } else {
            current.push(line.to_string());
        }
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    Ok(sentences)
}

pub fn run(strategy: Strategy, train: &Path, tokens: &Path, out: &Path) -> Result<(), CliError> {
    let train = TaggedCorpus::read(train).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut overall: HashMap<String, usize> = HashMap::new();
    let mut per_token: HashMap<String, HashMap<String, usize>> = HashMap::new();
    for t in train.sentences().iter().flatten() {
        *overall.entry(t.tag.clone()).or_default() += 1;
        *per_token
            .entry(t.token.clone())
            .or_default()
            .entry(t.tag.clone())
            .or_default() += 1;
    }
    let majority = most_frequent(&overall);
    let lexicon: HashMap<&str, String> = per_token.iter().map(|(k, v)| (k.as_str(), most_frequent(v))).collect();

    let sentences = read_tokens(tokens)?
        .into_iter()
        .map(|s| {
            s.into_iter()
                .map(|tok| {
                    let tag = match strategy {
                        Strategy::Majority => majority.clone(),
                        Strategy::Unigram => lexicon.get(tok.as_str()).cloned().unwrap_or_else(|| majority.clone()),
                    };
                    Tagged::new(tok, tag)
                })
                .collect()
        })
        .collect();
    let pred = TaggedCorpus::new(sentences).map_err(|e| CliError::Usage(e.to_string()))?;
    std::fs::write(out, pred.to_text()).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))
}
