//! Partial order over systems from pairwise verdicts.
//!
//! Practical equivalence is closed transitively into classes; strict
//! verdicts must then order those classes into a single chain. Anything
//! that prevents that is reported rather than smoothed over.

use std::collections::HashMap;
use std::fmt;

use super::{DecisionError, Region};

/// Outcome of comparing `a` against `b` (differences `a - b`).
#[derive(Debug, Clone, PartialEq)]
pub struct PairVerdict {
    pub a: String,
    pub b: String,
    pub verdict: Region,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Worse,
    Equivalent,
    Better,
}

impl Relation {
    pub fn symbol(&self) -> &'static str {
        match self {
            Relation::Worse => "<",
            Relation::Equivalent => "≈",
            Relation::Better => ">",
        }
    }

    fn from_verdict(v: Region) -> Self {
        match v {
            Region::Left => Relation::Worse,
            Region::Rope => Relation::Equivalent,
            Region::Right => Relation::Better,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Inconsistency {
    /// `lower < upper` although both are linked by equivalences.
    StrictWithinClass { lower: String, upper: String, class: Vec<String> },
    /// Members of two classes disagree on which class is better.
    MixedDirection { first: Vec<String>, second: Vec<String> },
    /// Strict verdicts between classes loop back on themselves.
    Cycle(Vec<Vec<String>>),
}

fn class_label(members: &[String]) -> String {
    members.join(" ≈ ")
}

impl fmt::Display for Inconsistency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Inconsistency::StrictWithinClass { lower, upper, class } => write!(
                f,
                "{lower} < {upper} contradicts the equivalence class {{{}}}",
                class.join(", ")
            ),
            Inconsistency::MixedDirection { first, second } => write!(
                f,
                "classes {{{}}} and {{{}}} are ordered both ways",
                first.join(", "),
                second.join(", ")
            ),
            Inconsistency::Cycle(classes) => {
                let mut parts: Vec<String> = classes.iter().map(|c| class_label(c)).collect();
                parts.push(class_label(&classes[0]));
                write!(f, "cycle: {}", parts.join(" < "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    /// One entry per input pair: `(a, relation, b)`.
    pub relations: Vec<(String, Relation, String)>,
    /// Equivalence classes from worst to best when `chain` is set,
    /// otherwise in order of first appearance.
    pub classes: Vec<Vec<String>>,
    /// Linear chain such as `X < Y ≈ Z`, if the verdicts admit one.
    pub chain: Option<String>,
    pub inconsistencies: Vec<Inconsistency>,
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut root = i;
    while parent[root] != root {
        root = parent[root];
    }
    let mut cur = i;
    while parent[cur] != root {
        let next = parent[cur];
        parent[cur] = root;
        cur = next;
    }
    root
}

/// Orders `systems` from pairwise verdicts. Every unordered pair must be
/// present exactly once, in either orientation.
pub fn rank(systems: &[String], pairs: &[PairVerdict]) -> Result<Ranking, DecisionError> {
    let s = systems.len();
    if s < 2 {
        return Err(DecisionError::TooFewSystems(s));
    }
    let index: HashMap<&str, usize> = systems.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    // rel[i][j]: relation of i to j
    let mut rel: Vec<Vec<Option<Relation>>> = vec![vec![None; s]; s];
    let mut relations = Vec::with_capacity(pairs.len());
    for p in pairs {
        let lookup = |name: &String| {
            index
                .get(name.as_str())
                .copied()
                .ok_or_else(|| DecisionError::UnknownSystem(name.clone()))
        };
        let (i, j) = (lookup(&p.a)?, lookup(&p.b)?);
        let r = Relation::from_verdict(p.verdict);
        rel[i][j] = Some(r);
        rel[j][i] = Some(Relation::from_verdict(p.verdict.flipped()));
        relations.push((p.a.clone(), r, p.b.clone()));
    }
    for i in 0..s {
        for j in (i + 1)..s {
            if rel[i][j].is_none() {
                return Err(DecisionError::MissingPair {
                    a: systems[i].clone(),
                    b: systems[j].clone(),
                });
            }
        }
    }

    let mut parent: Vec<usize> = (0..s).collect();
    for i in 0..s {
        for j in (i + 1)..s {
            if rel[i][j] == Some(Relation::Equivalent) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut class_of = vec![0; s];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut root_to_class: HashMap<usize, usize> = HashMap::new();
    for (i, slot) in class_of.iter_mut().enumerate() {
        let root = find(&mut parent, i);
        let c = *root_to_class.entry(root).or_insert_with(|| {
            classes.push(Vec::new());
            classes.len() - 1
        });
        classes[c].push(i);
        *slot = c;
    }
    let names = |members: &[usize]| -> Vec<String> { members.iter().map(|&i| systems[i].clone()).collect() };

    let mut inconsistencies = Vec::new();
    let nc = classes.len();
    // below[c][d]: some member of c is worse than some member of d
    let mut below = vec![vec![false; nc]; nc];
    for i in 0..s {
        for j in 0..s {
            if rel[i][j] != Some(Relation::Worse) {
                continue;
            }
            let (ci, cj) = (class_of[i], class_of[j]);
            if ci == cj {
                inconsistencies.push(Inconsistency::StrictWithinClass {
                    lower: systems[i].clone(),
                    upper: systems[j].clone(),
                    class: names(&classes[ci]),
                });
            } else {
                below[ci][cj] = true;
            }
        }
    }
    for c in 0..nc {
        for d in (c + 1)..nc {
            if below[c][d] && below[d][c] {
                inconsistencies.push(Inconsistency::MixedDirection {
                    first: names(&classes[c]),
                    second: names(&classes[d]),
                });
            }
        }
    }
    if inconsistencies.is_empty() {
        if let Some(cycle) = find_cycle(&below) {
            inconsistencies.push(Inconsistency::Cycle(cycle.iter().map(|&c| names(&classes[c])).collect()));
        }
    }

    if !inconsistencies.is_empty() {
        return Ok(Ranking {
            relations,
            classes: classes.iter().map(|c| names(c)).collect(),
            chain: None,
            inconsistencies,
        });
    }

    // every pair of classes is strictly ordered and acyclic, so sorting by
    // the number of classes below gives the chain
    let mut order: Vec<usize> = (0..nc).collect();
    order.sort_by_key(|&c| (0..nc).filter(|&d| below[d][c]).count());
    let ordered: Vec<Vec<String>> = order.iter().map(|&c| names(&classes[c])).collect();
    let chain = ordered.iter().map(|c| class_label(c)).collect::<Vec<_>>().join(" < ");
    Ok(Ranking {
        relations,
        classes: ordered,
        chain: Some(chain),
        inconsistencies,
    })
}

/// A directed cycle in `edges` (edge `c -> d` when `edges[c][d]`), listed
/// from its lowest-indexed member.
fn find_cycle(edges: &[Vec<bool>]) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    fn visit(c: usize, edges: &[Vec<bool>], mark: &mut [Mark], stack: &mut Vec<usize>) -> Option<Vec<usize>> {
        mark[c] = Mark::Active;
        stack.push(c);
        for d in 0..edges.len() {
            if !edges[c][d] {
                continue;
            }
            match mark[d] {
                Mark::Active => {
                    let start = stack.iter().position(|&x| x == d).expect("on stack");
                    return Some(stack[start..].to_vec());
                }
                Mark::New => {
                    if let Some(cycle) = visit(d, edges, mark, stack) {
                        return Some(cycle);
                    }
                }
                Mark::Done => {}
            }
        }
        stack.pop();
        mark[c] = Mark::Done;
        None
    }
    let n = edges.len();
    let mut mark = vec![Mark::New; n];
    for c in 0..n {
        if mark[c] == Mark::New {
            let mut stack = Vec::new();
            if let Some(mut cycle) = visit(c, edges, &mut mark, &mut stack) {
                let min = cycle.iter().enumerate().min_by_key(|(_, &v)| v).map(|(i, _)| i).unwrap_or(0);
                cycle.rotate_left(min);
                return Some(cycle);
            }
        }
    }
    None
}
