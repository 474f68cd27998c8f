//! Compositional explanations for clusters.
//!
//! A cluster that no single class covers at θ may still be covered by the
//! union of a few classes, e.g. adjectives plus geopolitical entities. The
//! search below finds the smallest such label set exactly, up to `max_n`.
//!
//! Coverage is counted in the same units alignment uses: unique word types
//! when every scheme in play is type-level, occurrences otherwise (a
//! type-level class then covers every occurrence of its words).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::alignment::{align_cluster, fraction, reaches, validate_theta, AlignmentConfig};
use crate::annotator::{ConceptClass, ConceptScheme, LabelRef, SchemeKind};
use crate::clustering::ClusterModel;
use crate::corpus::WordOccurrence;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CompositionMode {
    /// Only classes of the named scheme.
    Within(String),
    /// Classes of every scheme.
    Cross,
}

impl fmt::Display for CompositionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompositionMode::Within(s) => write!(f, "within:{s}"),
            CompositionMode::Cross => f.write_str("cross"),
        }
    }
}

impl FromStr for CompositionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cross" => Ok(CompositionMode::Cross),
            _ => match s.strip_prefix("within:") {
                Some(scheme) if !scheme.is_empty() => {
                    Ok(CompositionMode::Within(scheme.to_owned()))
                }
                _ => Err(Error::InvalidConfig(format!(
                    "composition mode {s:?}: expected `cross` or `within:<scheme>`"
                ))),
            },
        }
    }
}

impl Serialize for CompositionMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CompositionMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompositionConfig {
    pub theta: f64,
    pub max_n: usize,
    pub mode: CompositionMode,
}

impl Default for CompositionConfig {
    fn default() -> Self {
        CompositionConfig {
            theta: 0.9,
            max_n: 6,
            mode: CompositionMode::Cross,
        }
    }
}

impl CompositionConfig {
    pub fn validate(&self) -> Result<()> {
        validate_theta(self.theta)?;
        if self.max_n == 0 {
            return Err(Error::InvalidConfig("max_n must be at least 1".into()));
        }
        Ok(())
    }
}

/// Smallest label set covering at least θ of a cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Composition {
    /// Sorted by `(scheme, label)`.
    pub labels: Vec<LabelRef>,
    pub coverage: f64,
}

impl Composition {
    pub fn n(&self) -> usize {
        self.labels.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionExplanation {
    pub layer: usize,
    pub cluster_id: usize,
    pub labels: Vec<LabelRef>,
    #[serde(rename = "N")]
    pub n: usize,
    pub coverage: f64,
    pub mode: CompositionMode,
}

#[derive(Clone, PartialEq, Eq)]
pub(crate) struct Bits(Vec<u64>);

impl Bits {
    fn zeros(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn union_with(&mut self, other: &Bits) {
        self.0.iter_mut().zip(&other.0).for_each(|(a, b)| *a |= b);
    }

    fn union(&self, other: &Bits) -> Bits {
        let mut out = self.clone();
        out.union_with(other);
        out
    }

    /// Bits of `self` not already in `covered`.
    fn gain(&self, covered: &Bits) -> usize {
        self.0
            .iter()
            .zip(&covered.0)
            .map(|(a, c)| (a & !c).count_ones() as usize)
            .sum()
    }
}

/// Candidate classes for one cluster, as bitsets over coverage units.
pub(crate) struct CoverProblem {
    pub(crate) labels: Vec<LabelRef>,
    pub(crate) sets: Vec<Bits>,
    pub(crate) units: usize,
}

impl CoverProblem {
    pub(crate) fn build(members: &[WordOccurrence], schemes: &[&ConceptScheme]) -> Self {
        let by_type = schemes.iter().all(|s| s.kind == SchemeKind::TypeLevel);
        let mut words: Vec<u32> = members.iter().map(|o| o.word_id).collect();
        words.sort_unstable();
        words.dedup();
        let units = if by_type { words.len() } else { members.len() };

        let mut classes: Vec<&ConceptClass> = schemes.iter().flat_map(|s| s.classes()).collect();
        classes.sort_by(|a, b| (&a.scheme, &a.label).cmp(&(&b.scheme, &b.label)));

        let mut labels = Vec::new();
        let mut sets = Vec::new();
        for class in classes {
            let mut bits = Bits::zeros(units);
            let mut any = false;
            if by_type {
                for (i, &w) in words.iter().enumerate() {
                    if class.contains_word(w) {
                        bits.set(i);
                        any = true;
                    }
                }
            } else {
                for (i, o) in members.iter().enumerate() {
                    if class.contains(o) {
                        bits.set(i);
                        any = true;
                    }
                }
            }
            if any {
                labels.push(class.label_ref());
                sets.push(bits);
            }
        }
        CoverProblem {
            labels,
            sets,
            units,
        }
    }

    #[cfg(test)]
    fn coverage_of(&self, picks: &[usize]) -> usize {
        let mut covered = Bits::zeros(self.units);
        for &i in picks {
            covered.union_with(&self.sets[i]);
        }
        covered.count()
    }

    /// Size of the greedy max-gain cover reaching θ, if all candidates reach it.
    fn greedy_size(&self, theta: f64) -> Option<usize> {
        let mut covered = Bits::zeros(self.units);
        let mut used = vec![false; self.sets.len()];
        let mut n = 0;
        while !reaches(covered.count(), self.units, theta) {
            let (best, gain) = self
                .sets
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .map(|(i, s)| (i, s.gain(&covered)))
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))?;
            if gain == 0 {
                return None;
            }
            used[best] = true;
            covered.union_with(&self.sets[best]);
            n += 1;
        }
        Some(n)
    }

    /// Best `size`-subset that reaches θ: maximal coverage, then
    /// lexicographically smallest index list.
    fn best_of_size(&self, size: usize, theta: f64) -> Option<(usize, Vec<usize>)> {
        let needed = (0..=self.units).find(|&c| reaches(c, self.units, theta))?;
        let mut search = Search {
            problem: self,
            size,
            needed,
            picks: Vec::with_capacity(size),
            best: None,
        };
        search.descend(0, &Bits::zeros(self.units));
        search.best
    }
}

struct Search<'a> {
    problem: &'a CoverProblem,
    size: usize,
    needed: usize,
    picks: Vec<usize>,
    best: Option<(usize, Vec<usize>)>,
}

impl Search<'_> {
    /// Depth-first in lexicographic index order, so the first set found with
    /// a given coverage is the lexicographically smallest one.
    fn descend(&mut self, start: usize, covered: &Bits) {
        let depth = self.picks.len();
        let have = covered.count();
        if depth == self.size {
            let better = match &self.best {
                None => have >= self.needed,
                Some((c, _)) => have > *c,
            };
            if better {
                self.best = Some((have, self.picks.clone()));
            }
            return;
        }
        let remaining = self.size - depth;
        let sets = &self.problem.sets;
        if sets.len() - start < remaining {
            return;
        }
        // Upper bound: current coverage plus the largest marginal gains left.
        let mut gains: Vec<usize> = sets[start..].iter().map(|s| s.gain(covered)).collect();
        gains.sort_unstable_by(|a, b| b.cmp(a));
        let bound = have + gains[..remaining].iter().sum::<usize>();
        let floor = match &self.best {
            None => self.needed,
            Some((c, _)) => c + 1,
        };
        if bound < floor {
            return;
        }
        let last = sets.len() - remaining;
        for (i, set) in sets.iter().enumerate().take(last + 1).skip(start) {
            self.picks.push(i);
            let next = covered.union(set);
            self.descend(i + 1, &next);
            self.picks.pop();
        }
    }
}

fn schemes_in_play<'a>(
    schemes: &'a [ConceptScheme],
    mode: &CompositionMode,
) -> Result<Vec<&'a ConceptScheme>> {
    match mode {
        CompositionMode::Cross => Ok(schemes.iter().collect()),
        CompositionMode::Within(name) => {
            let found: Vec<&ConceptScheme> = schemes.iter().filter(|s| &s.name == name).collect();
            if found.is_empty() {
                Err(Error::InvalidConfig(format!(
                    "no scheme named {name:?} for within-scheme composition"
                )))
            } else {
                Ok(found)
            }
        }
    }
}

/// Minimal label set covering at least θ of `members`, or `None` when no set
/// of at most `max_n` labels does.
pub fn explain(
    members: &[WordOccurrence],
    schemes: &[ConceptScheme],
    cfg: &CompositionConfig,
) -> Result<Option<Composition>> {
    cfg.validate()?;
    if members.is_empty() {
        return Err(Error::InvalidConfig(
            "cannot explain an empty cluster".into(),
        ));
    }
    let in_play = schemes_in_play(schemes, &cfg.mode)?;
    let problem = CoverProblem::build(members, &in_play);
    Ok(solve(&problem, cfg.theta, cfg.max_n))
}

pub(crate) fn solve(problem: &CoverProblem, theta: f64, max_n: usize) -> Option<Composition> {
    let greedy = problem.greedy_size(theta)?;
    let limit = greedy.min(max_n).min(problem.sets.len());
    (1..=limit).find_map(|size| {
        problem
            .best_of_size(size, theta)
            .map(|(covered, picks)| Composition {
                labels: picks.iter().map(|&i| problem.labels[i].clone()).collect(),
                coverage: fraction(covered, problem.units),
            })
    })
}

/// Explains every cluster of a model. Entries are in cluster id order;
/// `None` marks clusters without an explanation within `max_n`.
pub fn explain_model(
    model: &ClusterModel,
    keys: &[WordOccurrence],
    schemes: &[ConceptScheme],
    cfg: &CompositionConfig,
) -> Result<Vec<Option<CompositionExplanation>>> {
    cfg.validate()?;
    let in_play = schemes_in_play(schemes, &cfg.mode)?;
    model
        .clusters()
        .into_iter()
        .enumerate()
        .map(|(cluster_id, rows)| {
            let members: Vec<WordOccurrence> = rows.iter().map(|&r| keys[r]).collect();
            let problem = CoverProblem::build(&members, &in_play);
            Ok(
                solve(&problem, cfg.theta, cfg.max_n).map(|c| CompositionExplanation {
                    layer: model.layer,
                    cluster_id,
                    n: c.n(),
                    labels: c.labels,
                    coverage: c.coverage,
                    mode: cfg.mode.clone(),
                }),
            )
        })
        .collect()
}

/// Counts of clusters by minimal explanation size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositionHistogram {
    pub max_n: usize,
    /// `counts[i]` clusters need exactly `i + 1` labels.
    pub counts: Vec<usize>,
    pub unexplained: usize,
    pub total: usize,
}

impl CompositionHistogram {
    pub fn percent(&self, n: usize) -> f64 {
        100.0 * fraction(self.counts[n - 1], self.total)
    }

    /// Clusters explained with at most `n` labels.
    pub fn cumulative(&self, n: usize) -> usize {
        self.counts[..n.min(self.max_n)].iter().sum()
    }

    pub fn merge(&mut self, other: &CompositionHistogram) {
        assert_eq!(self.max_n, other.max_n);
        self.counts
            .iter_mut()
            .zip(&other.counts)
            .for_each(|(a, b)| *a += b);
        self.unexplained += other.unexplained;
        self.total += other.total;
    }
}

pub fn composition_histogram(
    explanations: &[Option<CompositionExplanation>],
    max_n: usize,
) -> CompositionHistogram {
    let mut counts = vec![0; max_n];
    let mut unexplained = 0;
    for e in explanations {
        match e {
            Some(e) if e.n >= 1 && e.n <= max_n => counts[e.n - 1] += 1,
            _ => unexplained += 1,
        }
    }
    CompositionHistogram {
        max_n,
        counts,
        unexplained,
        total: explanations.len(),
    }
}

/// Every class, from any scheme, that a cluster aligns with at θ. For an
/// already aligned cluster this adds co-aligned descriptions, such as a noun
/// cluster whose words also share a suffix.
pub fn enrich_aligned(
    members: &[WordOccurrence],
    schemes: &[ConceptScheme],
    theta: f64,
) -> Result<Vec<LabelRef>> {
    validate_theta(theta)?;
    let cfg = AlignmentConfig {
        theta,
        ..AlignmentConfig::default()
    };
    let mut out: Vec<LabelRef> = schemes
        .iter()
        .flat_map(|s| s.classes().map(move |c| (s.kind, c)))
        .filter(|(kind, c)| align_cluster(members, c, *kind, &cfg).1)
        .map(|(_, c)| c.label_ref())
        .collect();
    out.sort();
    Ok(out)
}
