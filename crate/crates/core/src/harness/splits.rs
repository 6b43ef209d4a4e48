use std::fmt::Write as _;

use rand::seq::SliceRandom;

use super::HarnessError;
use crate::stats::rng_fork;

/// Fold assignments for `m` independently shuffled `k`-fold partitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    n_items: usize,
    k: usize,
    m: usize,
    seed: u64,
    /// `assignments[r][item]` is the fold of `item` in repetition `r`.
    assignments: Vec<Vec<u32>>,
}

/// Items in the three roles of one (repetition, evaluation fold) cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldRoles {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub eval: Vec<usize>,
}

/// Builds `m` seeded partitions of `n_items` into `k` folds.
///
/// Each repetition draws a uniform permutation from its own random stream
/// (`seed`, repetition) and deals the permuted items round-robin, so fold
/// sizes differ by at most one.
pub fn make_splits(n_items: usize, k: usize, m: usize, seed: u64) -> Result<SplitPlan, HarnessError> {
    if k < 2 {
        return Err(HarnessError::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    if m < 1 {
        return Err(HarnessError::InvalidArgument("m must be at least 1".into()));
    }
    if n_items < k {
        return Err(HarnessError::TooFewItems { n_items, k });
    }
    if k > u32::MAX as usize {
        return Err(HarnessError::InvalidArgument(format!("k = {k} is too large")));
    }
    let assignments = (0..m)
        .map(|r| {
            let mut rng = rng_fork(seed, r as u64);
            let mut order: Vec<usize> = (0..n_items).collect();
            order.shuffle(&mut rng);
            let mut folds = vec![0u32; n_items];
            for (pos, item) in order.into_iter().enumerate() {
                folds[item] = (pos % k) as u32;
            }
            folds
        })
        .collect();
    Ok(SplitPlan {
        n_items,
        k,
        m,
        seed,
        assignments,
    })
}

impl SplitPlan {
    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn assignment(&self, repetition: usize) -> Option<&[u32]> {
        self.assignments.get(repetition).map(Vec::as_slice)
    }

    pub fn fold_sizes(&self, repetition: usize) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments[repetition] {
            sizes[f as usize] += 1;
        }
        sizes
    }

    /// Evaluation fold, its cyclic successor as validation, the rest for training.
    pub fn fold_roles(&self, repetition: usize, eval_fold: usize) -> Result<FoldRoles, HarnessError> {
        if repetition >= self.m {
            return Err(HarnessError::IndexOutOfRange {
                what: "repetition",
                index: repetition,
                len: self.m,
            });
        }
        if eval_fold >= self.k {
            return Err(HarnessError::IndexOutOfRange {
                what: "fold",
                index: eval_fold,
                len: self.k,
            });
        }
        let validation_fold = (eval_fold + 1) % self.k;
        let mut roles = FoldRoles {
            train: Vec::new(),
            validation: Vec::new(),
            eval: Vec::new(),
        };
        for (item, &f) in self.assignments[repetition].iter().enumerate() {
            let f = f as usize;
            if f == eval_fold {
                roles.eval.push(item);
            } else if f == validation_fold {
                roles.validation.push(item);
            } else {
                roles.train.push(item);
            }
        }
        Ok(roles)
    }

    /// Plain-text plan file. The first line may carry a manifest reference.
    pub fn to_text(&self, manifest: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(m) = manifest {
            let _ = writeln!(out, "# manifest: {m}");
        }
        let _ = writeln!(out, "n_items = {}", self.n_items);
        let _ = writeln!(out, "k = {}", self.k);
        let _ = writeln!(out, "m = {}", self.m);
        let _ = writeln!(out, "seed = {}", self.seed);
        for (r, folds) in self.assignments.iter().enumerate() {
            let _ = write!(out, "repetition {r}:");
            for f in folds {
                let _ = write!(out, " {f}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let bad = |line: usize, detail: &str| HarnessError::Parse {
            line,
            detail: detail.to_string(),
        };
        let mut header = [None::<u64>; 4];
        let mut assignments = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("repetition ") {
                let (idx, folds) = rest.split_once(':').ok_or_else(|| bad(lineno, "missing ':'"))?;
                let idx: usize = idx.trim().parse().map_err(|_| bad(lineno, "bad repetition index"))?;
                if idx != assignments.len() {
                    return Err(bad(lineno, "repetitions out of order"));
                }
                let folds = folds
                    .split_whitespace()
                    .map(str::parse::<u32>)
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| bad(lineno, "bad fold index"))?;
                assignments.push(folds);
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| bad(lineno, "expected key = value"))?;
            let value: u64 = value.trim().parse().map_err(|_| bad(lineno, "expected an integer"))?;
            let slot = match key.trim() {
                "n_items" => 0,
                "k" => 1,
                "m" => 2,
                "seed" => 3,
                _ => return Err(bad(lineno, "unknown key")),
            };
            header[slot] = Some(value);
        }
        let [Some(n_items), Some(k), Some(m), Some(seed)] = header else {
            return Err(bad(0, "missing n_items, k, m or seed"));
        };
        let (n_items, k, m) = (n_items as usize, k as usize, m as usize);
        if assignments.len() != m {
            return Err(bad(0, "repetition count does not match m"));
        }
        for folds in &assignments {
            if folds.len() != n_items || folds.iter().any(|&f| f as usize >= k) {
                return Err(bad(0, "assignment length or fold index out of range"));
            }
        }
        Ok(Self {
            n_items,
            k,
            m,
            seed,
            assignments,
        })
    }
}
