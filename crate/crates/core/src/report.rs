//! JSON, TSV and CSV report writers.
//!
//! All output is a pure function of its input: maps are ordered, floats use
//! the shortest round-trip form and nothing time-dependent is recorded.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::alignment::{
    AlignmentConfig, ClassScore, ClusterAlignment, MembershipMode, OverallSummary, SchemeSummary,
};
use crate::annotator::{ConceptScheme, LabelRef};
use crate::composition::{CompositionConfig, CompositionExplanation, CompositionHistogram};
use crate::error::{Error, Result};

/// How many scores each cluster lists in the alignment JSON.
pub const TOP_SCORES: usize = 5;

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Error::Invariant(format!("json: {e}")))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// File-name-safe form of a scheme name.
pub fn file_stem(scheme: &str) -> String {
    scheme
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReportConfig {
    pub theta: f64,
    pub denominator: crate::alignment::Denominator,
    /// A cluster is aligned overall when it aligns with a class of any scheme.
    pub overall_semantics: String,
    pub membership_modes: BTreeMap<String, MembershipMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterEntry {
    pub cluster_id: usize,
    pub size: usize,
    pub word_types: usize,
    pub aligned_labels: Vec<LabelRef>,
    pub top_scores: Vec<ClassScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerEntry {
    pub layer: usize,
    pub k: usize,
    pub aligned: usize,
    pub aligned_fraction: f64,
    pub clusters: Vec<ClusterEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub config: AlignmentReportConfig,
    pub per_layer: Vec<LayerEntry>,
    pub per_scheme: Vec<SchemeSummary>,
    pub overall: f64,
    pub per_scheme_average: BTreeMap<String, f64>,
}

impl AlignmentReport {
    pub fn new(
        cfg: &AlignmentConfig,
        schemes: &[ConceptScheme],
        alignments: &[ClusterAlignment],
        per_scheme: Vec<SchemeSummary>,
        overall: OverallSummary,
    ) -> Self {
        let per_layer = overall
            .per_layer
            .iter()
            .map(|l| LayerEntry {
                layer: l.layer,
                k: l.k,
                aligned: l.aligned,
                aligned_fraction: l.aligned_fraction,
                clusters: alignments
                    .iter()
                    .filter(|a| a.layer == l.layer)
                    .map(|a| ClusterEntry {
                        cluster_id: a.cluster_id,
                        size: a.size,
                        word_types: a.word_types,
                        aligned_labels: a.aligned_labels.clone(),
                        top_scores: a.top_scores(TOP_SCORES).into_iter().cloned().collect(),
                    })
                    .collect(),
            })
            .collect();
        AlignmentReport {
            config: AlignmentReportConfig {
                theta: cfg.theta,
                denominator: cfg.denominator,
                overall_semantics: "any_scheme".into(),
                membership_modes: schemes
                    .iter()
                    .map(|s| (s.name.clone(), s.kind.into()))
                    .collect(),
            },
            per_layer,
            per_scheme,
            overall: overall.overall,
            per_scheme_average: overall.per_scheme_average,
        }
    }
}

fn mode_name(mode: MembershipMode) -> &'static str {
    match mode {
        MembershipMode::Instance => "instance",
        MembershipMode::Type => "type",
    }
}

/// One row per (layer, cluster, class with nonzero overlap).
pub fn write_alignment_tsv(
    path: impl AsRef<Path>,
    alignments: &[ClusterAlignment],
    theta: f64,
) -> Result<()> {
    let mut out =
        String::from("layer\tcluster_id\tsize\tscheme\tlabel\tmode\toverlap\tscore\taligned\n");
    for a in alignments {
        for s in &a.scores {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                a.layer,
                a.cluster_id,
                a.size,
                s.label.scheme,
                s.label.label,
                mode_name(s.mode),
                s.overlap,
                s.score,
                s.score >= theta
            ));
        }
    }
    write_text(path, &out)
}

/// One CSV per scheme (`layer,aligned_count,normalized_count`) and
/// `overall.csv` (`layer,k,aligned,aligned_fraction`) under `dir`.
pub fn emit_plot_data(
    dir: impl AsRef<Path>,
    per_scheme: &[SchemeSummary],
    overall: &OverallSummary,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut written = Vec::with_capacity(per_scheme.len() + 1);
    for s in per_scheme {
        let mut out = String::from("layer,aligned_count,normalized_count\n");
        for row in &s.layer_curve {
            out.push_str(&format!(
                "{},{},{}\n",
                row.layer, row.aligned_count, row.normalized_count
            ));
        }
        let path = dir.join(format!("{}.csv", file_stem(&s.scheme)));
        write_text(&path, &out)?;
        written.push(path);
    }
    let mut out = String::from("layer,k,aligned,aligned_fraction\n");
    for l in &overall.per_layer {
        out.push_str(&format!(
            "{},{},{},{}\n",
            l.layer, l.k, l.aligned, l.aligned_fraction
        ));
    }
    let path = dir.join("overall.csv");
    write_text(&path, &out)?;
    written.push(path);
    Ok(written)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotRow {
    pub layer: usize,
    pub aligned_count: usize,
    pub normalized_count: f64,
}

/// Reads a per-scheme CSV written by [`emit_plot_data`].
pub fn read_plot_csv(path: impl AsRef<Path>) -> Result<Vec<PlotRow>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some("layer,aligned_count,normalized_count") {
        return Err(Error::parse(path, 1, "unexpected plot CSV header"));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || Error::parse(path, i + 2, format!("malformed row {line:?}"));
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(bad());
            }
            Ok(PlotRow {
                layer: cols[0].parse().map_err(|_| bad())?,
                aligned_count: cols[1].parse().map_err(|_| bad())?,
                normalized_count: cols[2].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

/// `N\tcount\tpercent` for N = 1..=max_n, then an `unexplained` row.
pub fn write_histogram_tsv(path: impl AsRef<Path>, h: &CompositionHistogram) -> Result<()> {
    let mut out = String::from("N\tcount\tpercent\n");
    for n in 1..=h.max_n {
        out.push_str(&format!("{n}\t{}\t{}\n", h.counts[n - 1], h.percent(n)));
    }
    let unexplained = if h.total == 0 {
        0.0
    } else {
        100.0 * h.unexplained as f64 / h.total as f64
    };
    out.push_str(&format!("unexplained\t{}\t{unexplained}\n", h.unexplained));
    write_text(path, &out)
}

/// Clusters explained with at most N labels: `N\tcumulative_count\tcumulative_percent`.
pub fn write_cumulative_tsv(path: impl AsRef<Path>, h: &CompositionHistogram) -> Result<()> {
    let mut out = String::from("N\tcumulative_count\tcumulative_percent\n");
    for n in 1..=h.max_n {
        let c = h.cumulative(n);
        let pct = if h.total == 0 {
            0.0
        } else {
            100.0 * c as f64 / h.total as f64
        };
        out.push_str(&format!("{n}\t{c}\t{pct}\n"));
    }
    write_text(path, &out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CompositionEntry {
    Explained(CompositionExplanation),
    Unexplained {
        layer: usize,
        cluster_id: usize,
        explained: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Enrichment {
    pub layer: usize,
    pub cluster_id: usize,
    pub labels: Vec<LabelRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionLayer {
    pub layer: usize,
    pub clusters: Vec<CompositionEntry>,
    pub histogram: CompositionHistogram,
    /// Co-aligned labels for clusters that align with at least one class.
    pub enrichment: Vec<Enrichment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionReport {
    pub config: CompositionConfig,
    pub layers: Vec<CompositionLayer>,
    /// Summed over layers.
    pub histogram: CompositionHistogram,
}

impl CompositionLayer {
    pub fn new(
        layer: usize,
        explanations: Vec<Option<CompositionExplanation>>,
        histogram: CompositionHistogram,
        enrichment: Vec<Enrichment>,
    ) -> Self {
        let clusters = explanations
            .into_iter()
            .enumerate()
            .map(|(cluster_id, e)| match e {
                Some(e) => CompositionEntry::Explained(e),
                None => CompositionEntry::Unexplained {
                    layer,
                    cluster_id,
                    explained: false,
                },
            })
            .collect();
        CompositionLayer {
            layer,
            clusters,
            histogram,
            enrichment,
        }
    }
}

impl CompositionReport {
    pub fn new(config: CompositionConfig, layers: Vec<CompositionLayer>) -> Self {
        let mut histogram = CompositionHistogram {
            max_n: config.max_n,
            counts: vec![0; config.max_n],
            unexplained: 0,
            total: 0,
        };
        for l in &layers {
            histogram.merge(&l.histogram);
        }
        CompositionReport {
            config,
            layers,
            histogram,
        }
    }
}
