//! θ-alignment between clusters (encoded concepts) and concept classes.
//!
//! A cluster is aligned with a class when at least a fraction θ of the
//! cluster belongs to the class. The fraction is taken over the cluster:
//! over its occurrences for contextual schemes (a token's tag depends on
//! its sentence), over its unique word types for type-level schemes.
//! Occurrences without an annotation stay in the denominator.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::annotator::{ConceptClass, ConceptScheme, LabelRef, Members, SchemeKind};
use crate::clustering::ClusterModel;
use crate::corpus::{WordId, WordOccurrence};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MembershipMode {
    /// Count occurrences.
    Instance,
    /// Count unique word types.
    Type,
}

impl From<SchemeKind> for MembershipMode {
    fn from(kind: SchemeKind) -> Self {
        match kind {
            SchemeKind::Contextual => MembershipMode::Instance,
            SchemeKind::TypeLevel => MembershipMode::Type,
        }
    }
}

/// What the overlap is divided by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Denominator {
    /// Cluster size (occurrences or word types, per membership mode).
    #[default]
    Cluster,
    /// Experimental: shared word types divided by the class's word-type
    /// count `J`. Only for comparison runs.
    ClassTypes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignmentConfig {
    pub theta: f64,
    pub denominator: Denominator,
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        AlignmentConfig {
            theta: 0.9,
            denominator: Denominator::Cluster,
        }
    }
}

impl AlignmentConfig {
    pub fn validate(&self) -> Result<()> {
        validate_theta(self.theta)
    }
}

pub(crate) fn validate_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("theta {theta} not in (0, 1]")))
    }
}

/// `count / total >= theta`, the one comparison every module uses.
pub(crate) fn reaches(count: usize, total: usize, theta: f64) -> bool {
    total > 0 && fraction(count, total) >= theta
}

pub(crate) fn fraction(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 / total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub label: LabelRef,
    pub mode: MembershipMode,
    /// Members of the cluster that belong to the class.
    pub overlap: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAlignment {
    pub layer: usize,
    pub cluster_id: usize,
    pub size: usize,
    pub word_types: usize,
    /// Classes with nonzero overlap, ordered by label.
    pub scores: Vec<ClassScore>,
    pub aligned_labels: Vec<LabelRef>,
    pub is_aligned: bool,
}

impl ClusterAlignment {
    /// Highest scores first; ties by label.
    pub fn top_scores(&self, n: usize) -> Vec<&ClassScore> {
        let mut v: Vec<&ClassScore> = self.scores.iter().collect();
        v.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.label.cmp(&b.label))
        });
        v.truncate(n);
        v
    }

    pub fn aligned_in(&self, scheme: &str) -> bool {
        self.aligned_labels.iter().any(|l| l.scheme == scheme)
    }

    pub fn best_score_in(&self, scheme: &str) -> f64 {
        self.scores
            .iter()
            .filter(|s| s.label.scheme == scheme)
            .map(|s| s.score)
            .fold(0.0, f64::max)
    }
}

fn unique_words(members: &[WordOccurrence]) -> BTreeSet<WordId> {
    members.iter().map(|o| o.word_id).collect()
}

/// Scores one cluster against one class by direct membership tests.
///
/// Returns `(score, aligned)`.
pub fn align_cluster(
    members: &[WordOccurrence],
    class: &ConceptClass,
    kind: SchemeKind,
    cfg: &AlignmentConfig,
) -> (f64, bool) {
    let score = match cfg.denominator {
        Denominator::Cluster => match MembershipMode::from(kind) {
            MembershipMode::Instance => {
                let hit = members.iter().filter(|o| class.contains(o)).count();
                fraction(hit, members.len())
            }
            MembershipMode::Type => {
                let words = unique_words(members);
                let hit = words.iter().filter(|&&w| class.contains_word(w)).count();
                fraction(hit, words.len())
            }
        },
        Denominator::ClassTypes => {
            let class_words = class.word_types();
            let hit = unique_words(members)
                .iter()
                .filter(|w| class_words.contains(w))
                .count();
            fraction(hit, class_words.len())
        }
    };
    (score, score >= cfg.theta)
}

enum SchemeIndex {
    ByOccurrence(HashMap<WordOccurrence, Vec<usize>>),
    ByWord(HashMap<WordId, Vec<usize>>),
}

/// Lookup from members to class positions within one scheme.
struct IndexedScheme<'a> {
    scheme: &'a ConceptScheme,
    classes: Vec<&'a ConceptClass>,
    class_types: Vec<usize>,
    index: SchemeIndex,
    /// word → classes, needed for the class-types denominator on contextual schemes.
    word_index: Option<HashMap<WordId, Vec<usize>>>,
}

impl<'a> IndexedScheme<'a> {
    fn new(scheme: &'a ConceptScheme, denominator: Denominator) -> Self {
        let classes: Vec<&ConceptClass> = scheme.classes().collect();
        let mut by_occ: HashMap<WordOccurrence, Vec<usize>> = HashMap::new();
        let mut by_word: HashMap<WordId, Vec<usize>> = HashMap::new();
        for (i, class) in classes.iter().enumerate() {
            match &class.members {
                Members::Occurrences(set) => set
                    .iter()
                    .for_each(|o| by_occ.entry(*o).or_default().push(i)),
                Members::Words(set) => set
                    .iter()
                    .for_each(|w| by_word.entry(*w).or_default().push(i)),
            }
        }
        let word_index = match (scheme.kind, denominator) {
            (SchemeKind::Contextual, Denominator::ClassTypes) => {
                let mut m: HashMap<WordId, Vec<usize>> = HashMap::new();
                for (i, class) in classes.iter().enumerate() {
                    for w in class.word_types() {
                        m.entry(w).or_default().push(i);
                    }
                }
                Some(m)
            }
            _ => None,
        };
        let index = match scheme.kind {
            SchemeKind::Contextual => SchemeIndex::ByOccurrence(by_occ),
            SchemeKind::TypeLevel => SchemeIndex::ByWord(by_word),
        };
        let class_types = match denominator {
            Denominator::ClassTypes => classes.iter().map(|c| c.word_types().len()).collect(),
            Denominator::Cluster => Vec::new(),
        };
        IndexedScheme {
            scheme,
            classes,
            class_types,
            index,
            word_index,
        }
    }

    /// Overlap count per class with nonzero overlap, plus the denominator
    /// for cluster-side scoring.
    fn overlaps(
        &self,
        members: &[WordOccurrence],
        words: &BTreeSet<WordId>,
        denominator: Denominator,
    ) -> (BTreeMap<usize, usize>, usize) {
        let mut counts = BTreeMap::new();
        match denominator {
            Denominator::Cluster => match &self.index {
                SchemeIndex::ByOccurrence(idx) => {
                    for o in members {
                        for &c in idx.get(o).map(Vec::as_slice).unwrap_or_default() {
                            *counts.entry(c).or_default() += 1;
                        }
                    }
                    (counts, members.len())
                }
                SchemeIndex::ByWord(idx) => {
                    for w in words {
                        for &c in idx.get(w).map(Vec::as_slice).unwrap_or_default() {
                            *counts.entry(c).or_default() += 1;
                        }
                    }
                    (counts, words.len())
                }
            },
            Denominator::ClassTypes => {
                let idx = match (&self.index, &self.word_index) {
                    (SchemeIndex::ByWord(idx), _) => idx,
                    (_, Some(idx)) => idx,
                    _ => unreachable!("word index built for class-types denominator"),
                };
                for w in words {
                    for &c in idx.get(w).map(Vec::as_slice).unwrap_or_default() {
                        *counts.entry(c).or_default() += 1;
                    }
                }
                (counts, 0)
            }
        }
    }
}

/// Scores every cluster of `model` against every class sharing at least one
/// member with it. `keys[row]` identifies the occurrence at each row.
pub fn align_model(
    model: &ClusterModel,
    keys: &[WordOccurrence],
    schemes: &[ConceptScheme],
    cfg: &AlignmentConfig,
) -> Result<Vec<ClusterAlignment>> {
    cfg.validate()?;
    if keys.len() != model.assignment.len() {
        return Err(Error::InvalidConfig(format!(
            "{} occurrence keys for {} clustered rows",
            keys.len(),
            model.assignment.len()
        )));
    }
    let indexed: Vec<IndexedScheme> = schemes
        .iter()
        .map(|s| IndexedScheme::new(s, cfg.denominator))
        .collect();

    let mut out = Vec::with_capacity(model.k);
    for (cluster_id, rows) in model.clusters().into_iter().enumerate() {
        let members: Vec<WordOccurrence> = rows.iter().map(|&r| keys[r]).collect();
        let words = unique_words(&members);
        let mut scores = Vec::new();
        for ix in &indexed {
            let mode = MembershipMode::from(ix.scheme.kind);
            let (counts, total) = ix.overlaps(&members, &words, cfg.denominator);
            for (c, overlap) in counts {
                let denom = match cfg.denominator {
                    Denominator::Cluster => total,
                    Denominator::ClassTypes => ix.class_types[c],
                };
                scores.push(ClassScore {
                    label: ix.classes[c].label_ref(),
                    mode,
                    overlap,
                    score: fraction(overlap, denom),
                });
            }
        }
        scores.sort_by(|a, b| a.label.cmp(&b.label));
        let aligned_labels: Vec<LabelRef> = scores
            .iter()
            .filter(|s| s.score >= cfg.theta)
            .map(|s| s.label.clone())
            .collect();
        out.push(ClusterAlignment {
            layer: model.layer,
            cluster_id,
            size: members.len(),
            word_types: words.len(),
            is_aligned: !aligned_labels.is_empty(),
            aligned_labels,
            scores,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeLayerSummary {
    pub scheme: String,
    pub layer: usize,
    pub aligned_count: usize,
    /// `aligned_count` divided by the scheme's best layer count (0 when none align).
    pub normalized_count: f64,
    pub max_layerwise_match: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeSummary {
    pub scheme: String,
    pub mode: MembershipMode,
    pub layer_curve: Vec<SchemeLayerSummary>,
    pub max_layerwise_match: usize,
    /// Mean over layers of the fraction of clusters aligned with this scheme.
    pub network_average: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerFraction {
    pub layer: usize,
    pub k: usize,
    pub aligned: usize,
    pub aligned_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverallSummary {
    pub per_layer: Vec<LayerFraction>,
    /// Mean of the per-layer aligned fractions.
    pub overall: f64,
    pub per_scheme_average: BTreeMap<String, f64>,
}

/// Layer curves per scheme and the network-level aligned fraction. A
/// cluster counts as aligned overall when it aligns with any class of any
/// scheme.
pub fn summarize(
    alignments: &[ClusterAlignment],
    schemes: &[ConceptScheme],
    layers: &[usize],
) -> (Vec<SchemeSummary>, OverallSummary) {
    let mut by_layer: BTreeMap<usize, Vec<&ClusterAlignment>> =
        layers.iter().map(|&l| (l, Vec::new())).collect();
    for a in alignments {
        by_layer.entry(a.layer).or_default().push(a);
    }

    let per_layer: Vec<LayerFraction> = by_layer
        .iter()
        .map(|(&layer, clusters)| {
            let aligned = clusters.iter().filter(|c| c.is_aligned).count();
            LayerFraction {
                layer,
                k: clusters.len(),
                aligned,
                aligned_fraction: fraction(aligned, clusters.len()),
            }
        })
        .collect();
    let overall = mean(per_layer.iter().map(|l| l.aligned_fraction));

    let mut per_scheme = Vec::with_capacity(schemes.len());
    let mut per_scheme_average = BTreeMap::new();
    for scheme in schemes {
        let counts: Vec<(usize, usize, usize)> = by_layer
            .iter()
            .map(|(&layer, clusters)| {
                let n = clusters
                    .iter()
                    .filter(|c| c.aligned_in(&scheme.name))
                    .count();
                (layer, n, clusters.len())
            })
            .collect();
        let max = counts.iter().map(|c| c.1).max().unwrap_or(0);
        let layer_curve = counts
            .iter()
            .map(|&(layer, n, _)| SchemeLayerSummary {
                scheme: scheme.name.clone(),
                layer,
                aligned_count: n,
                normalized_count: fraction(n, max),
                max_layerwise_match: max,
            })
            .collect();
        let network_average = mean(counts.iter().map(|&(_, n, k)| fraction(n, k)));
        per_scheme_average.insert(scheme.name.clone(), network_average);
        per_scheme.push(SchemeSummary {
            scheme: scheme.name.clone(),
            mode: scheme.kind.into(),
            layer_curve,
            max_layerwise_match: max,
            network_average,
        });
    }

    (
        per_scheme,
        OverallSummary {
            per_layer,
            overall,
            per_scheme_average,
        },
    )
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}
