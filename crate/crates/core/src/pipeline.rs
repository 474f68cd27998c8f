//! End-to-end runs: corpus and embeddings in, per-layer clusters, alignment
//! and composition reports out.
//!
//! Output layout under `out`:
//!
//! ```text
//! layer_XX/dendrogram.tsv     merge list
//! layer_XX/clusters.tsv       cluster export
//! layer_XX/composition.json   explanations for that layer
//! alignment.json, alignment.tsv
//! composition.json, composition_histogram.tsv, composition_cumulative.tsv
//! plots/<scheme>.csv, plots/overall.csv
//! summary.json
//! ```
//!
//! Errors are wrapped with the name of the stage that raised them.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::alignment::{
    align_model, summarize, validate_theta, AlignmentConfig, ClusterAlignment, Denominator,
    LayerFraction,
};
use crate::annotator::{
    annotate_affix, annotate_casing, annotate_ngram, annotate_position, coarsen, default_suffixes,
    load_affix_lexicon, load_token_annotations, load_type_lexicon, AffixPosition, CoarseMapping,
    ConceptScheme, SchemeKind,
};
use crate::clustering::{build_dendrogram, ClusterModel, Engine};
use crate::composition::{
    composition_histogram, enrich_aligned, explain_model, CompositionConfig, CompositionHistogram,
    CompositionMode,
};
use crate::corpus::{
    filter_occurrences, load_corpus, Corpus, FilterConfig, OccurrenceKey, WordOccurrence,
};
use crate::embedding_store::{read_dataset, EmbeddingDataset};
use crate::error::{Error, Result};
use crate::report::{
    emit_plot_data, write_alignment_tsv, write_cumulative_tsv, write_histogram_tsv, write_json,
    AlignmentReport, CompositionLayer, CompositionReport, Enrichment,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationKind {
    /// `sentence_id\tposition\tword\tlabel` per occurrence.
    Token,
    /// `label\tword` per word type.
    Lexicon,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationSource {
    pub scheme: String,
    pub path: PathBuf,
    pub kind: AnnotationKind,
    /// `pos`, `sem`, or a `fine\tcoarse` TSV. Adds a `<scheme>_coarse` scheme.
    #[serde(default)]
    pub coarse: Option<String>,
}

/// Annotators computed from surface forms. All off by default.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AutoAnnotators {
    pub casing: bool,
    pub position: bool,
    pub suffix: bool,
    /// Replaces the shipped suffix list.
    pub suffix_lexicon: Option<PathBuf>,
    pub prefix_lexicon: Option<PathBuf>,
    pub ngram: bool,
    pub ngram_lengths: [usize; 2],
    pub ngram_min_members: usize,
}

impl Default for AutoAnnotators {
    fn default() -> Self {
        AutoAnnotators {
            casing: false,
            position: false,
            suffix: false,
            suffix_lexicon: None,
            prefix_lexicon: None,
            ngram: false,
            ngram_lengths: [2, 3],
            ngram_min_members: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSettings {
    #[serde(default = "default_min_frequency")]
    pub min_frequency: usize,
    #[serde(default = "default_max_occurrences")]
    pub max_occurrences: usize,
}

fn default_min_frequency() -> usize {
    FilterConfig::default().min_frequency
}

fn default_max_occurrences() -> usize {
    FilterConfig::default().max_occurrences
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub embeddings: PathBuf,
    #[serde(default)]
    pub annotations: Vec<AnnotationSource>,
    #[serde(default)]
    pub auto: AutoAnnotators,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// All layers of the embeddings file when absent.
    #[serde(default)]
    pub layers: Option<Vec<usize>>,
    /// Restricts the embedded occurrences to a frequency-filtered sample.
    #[serde(default)]
    pub filter: Option<FilterSettings>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub engine: Engine,
    #[serde(default = "default_max_n")]
    pub max_n: usize,
    #[serde(default = "default_mode")]
    pub composition_mode: CompositionMode,
    #[serde(default)]
    pub denominator: Denominator,
}

fn default_k() -> usize {
    1000
}

fn default_theta() -> f64 {
    0.9
}

fn default_out() -> PathBuf {
    PathBuf::from("report")
}

fn default_max_n() -> usize {
    6
}

fn default_mode() -> CompositionMode {
    CompositionMode::Cross
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    pub fn new(corpus: impl Into<PathBuf>, embeddings: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            corpus: corpus.into(),
            embeddings: embeddings.into(),
            annotations: Vec::new(),
            auto: AutoAnnotators::default(),
            k: default_k(),
            theta: default_theta(),
            layers: None,
            filter: None,
            out: default_out(),
            seed: 0,
            engine: Engine::Nnchain,
            max_n: default_max_n(),
            composition_mode: default_mode(),
            denominator: Denominator::Cluster,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("pipeline config: {e}")))
    }

    /// Reads a TOML config. Relative paths inside it are taken relative to
    /// the config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        resolve(base, &mut cfg.corpus);
        resolve(base, &mut cfg.embeddings);
        resolve(base, &mut cfg.out);
        for a in &mut cfg.annotations {
            resolve(base, &mut a.path);
            if let Some(c) = &mut a.coarse {
                if c != "pos" && c != "sem" {
                    *c = base.join(&*c).to_string_lossy().into_owned();
                }
            }
        }
        for p in [&mut cfg.auto.suffix_lexicon, &mut cfg.auto.prefix_lexicon]
            .into_iter()
            .flatten()
        {
            resolve(base, p);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        validate_theta(self.theta)?;
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.max_n == 0 {
            return Err(Error::InvalidConfig("max_n must be at least 1".into()));
        }
        let mut names = BTreeSet::new();
        for a in &self.annotations {
            if a.scheme.is_empty() || !names.insert(a.scheme.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "scheme name {:?} empty or repeated",
                    a.scheme
                )));
            }
        }
        let [lo, hi] = self.auto.ngram_lengths;
        if self.auto.ngram && (lo == 0 || lo > hi) {
            return Err(Error::InvalidConfig(format!(
                "ngram_lengths [{lo}, {hi}] invalid"
            )));
        }
        Ok(())
    }

    pub fn alignment_config(&self) -> AlignmentConfig {
        AlignmentConfig {
            theta: self.theta,
            denominator: self.denominator,
        }
    }

    pub fn composition_config(&self) -> CompositionConfig {
        CompositionConfig {
            theta: self.theta,
            max_n: self.max_n,
            mode: self.composition_mode.clone(),
        }
    }
}

trait Staged<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> Staged<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}

pub fn layer_dir(out: &Path, layer: usize) -> PathBuf {
    out.join(format!("layer_{layer:02}"))
}

/// Reads embeddings and maps their word ids onto the corpus vocabulary.
/// Every record must sit on a corpus slot holding the same word.
pub fn load_embeddings(path: &Path, corpus: &Corpus) -> Result<EmbeddingDataset> {
    let mut ds = read_dataset(path)?;
    let translate: Vec<Option<u32>> = ds.vocab.iter().map(|w| corpus.word_id(w)).collect();
    for (i, r) in ds.records.iter_mut().enumerate() {
        let surface = &ds.vocab[r.word_id as usize];
        let id = translate[r.word_id as usize].ok_or_else(|| {
            Error::InvalidDataset(format!("record {i}: word {surface:?} not in the corpus"))
        })?;
        let key = OccurrenceKey {
            sentence_id: r.sentence_id,
            position: r.position,
        };
        match corpus.token(key) {
            Some(t) if t == id => r.word_id = id,
            Some(t) => {
                return Err(Error::InvalidDataset(format!(
                "record {i}: word {surface:?} but the corpus has {:?} at sentence {} position {}",
                corpus.word(t).unwrap_or_default(),
                r.sentence_id,
                r.position
            )))
            }
            None => {
                return Err(Error::InvalidDataset(format!(
                    "record {i}: no corpus token at sentence {} position {}",
                    r.sentence_id, r.position
                )))
            }
        }
    }
    ds.vocab = corpus.words().to_vec();
    Ok(ds)
}

/// Builds every configured scheme over `occurrences`, followed by coarse and
/// automatic schemes, in a fixed order.
pub fn build_schemes(
    cfg: &PipelineConfig,
    corpus: &Corpus,
    occurrences: &[WordOccurrence],
) -> Result<Vec<ConceptScheme>> {
    let mut schemes = Vec::new();
    for src in &cfg.annotations {
        let scheme = match src.kind {
            AnnotationKind::Token => load_token_annotations(&src.path, &src.scheme, corpus)?,
            AnnotationKind::Lexicon => load_type_lexicon(&src.path, &src.scheme, corpus)?.scheme,
        };
        let coarse = match src.coarse.as_deref() {
            None => None,
            Some(which) => {
                let mut mapping = match which {
                    "pos" => CoarseMapping::pos(),
                    "sem" => CoarseMapping::sem(),
                    path => CoarseMapping::load(path, &src.scheme)?,
                };
                mapping.scheme = src.scheme.clone();
                Some(coarsen(&scheme, &mapping)?)
            }
        };
        schemes.push(scheme);
        schemes.extend(coarse);
    }
    let auto = &cfg.auto;
    if auto.casing {
        schemes.push(annotate_casing(occurrences, corpus));
    }
    if auto.position {
        let (first, last) = annotate_position(occurrences, corpus);
        schemes.push(first);
        schemes.push(last);
    }
    if auto.suffix || auto.suffix_lexicon.is_some() {
        let lexicon = match &auto.suffix_lexicon {
            Some(p) => load_affix_lexicon(p)?,
            None => default_suffixes(),
        };
        schemes.push(annotate_affix(
            occurrences,
            corpus,
            &lexicon,
            AffixPosition::Suffix,
            "suffix",
        )?);
    }
    if let Some(p) = &auto.prefix_lexicon {
        let lexicon = load_affix_lexicon(p)?;
        schemes.push(annotate_affix(
            occurrences,
            corpus,
            &lexicon,
            AffixPosition::Prefix,
            "prefix",
        )?);
    }
    if auto.ngram {
        let [lo, hi] = auto.ngram_lengths;
        schemes.push(annotate_ngram(
            occurrences,
            corpus,
            lo..=hi,
            auto.ngram_min_members,
        )?);
    }
    let mut seen = BTreeSet::new();
    for s in &schemes {
        if !seen.insert(s.name.as_str()) {
            return Err(Error::InvalidConfig(format!(
                "two schemes are named {:?}",
                s.name
            )));
        }
    }
    Ok(schemes)
}

/// Clusters of one layer together with the occurrence behind each row.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerClusters {
    pub model: ClusterModel,
    pub keys: Vec<WordOccurrence>,
}

fn resolve_layers(requested: &Option<Vec<usize>>, num_layers: usize) -> Result<Vec<usize>> {
    let layers: Vec<usize> = match requested {
        Some(l) => l
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
        None => (0..num_layers).collect(),
    };
    if let Some(&layer) = layers.iter().find(|&&l| l >= num_layers) {
        return Err(Error::LayerOutOfRange { layer, num_layers });
    }
    if layers.is_empty() {
        return Err(Error::InvalidConfig("no layers selected".into()));
    }
    Ok(layers)
}

/// Loads corpus and embeddings and applies the optional occurrence filter.
pub fn prepare_inputs(cfg: &PipelineConfig) -> Result<(Corpus, EmbeddingDataset)> {
    cfg.validate().stage("config")?;
    let corpus = load_corpus(&cfg.corpus).stage("corpus")?;
    let mut ds = load_embeddings(&cfg.embeddings, &corpus).stage("embeddings")?;
    if let Some(f) = cfg.filter {
        let fc = FilterConfig {
            min_frequency: f.min_frequency,
            max_occurrences: f.max_occurrences,
            seed: cfg.seed,
        };
        let keep: BTreeSet<WordOccurrence> = filter_occurrences(&corpus, &fc)
            .stage("corpus")?
            .into_vec()
            .into_iter()
            .collect();
        ds.records.retain(|r| keep.contains(&r.occurrence()));
        if ds.records.is_empty() {
            return Err(Error::InvalidDataset(
                "no embedded occurrence survives the filter".into(),
            ))
            .stage("corpus");
        }
    }
    Ok((corpus, ds))
}

/// Clusters the selected layers and writes `layer_XX/dendrogram.tsv` and
/// `layer_XX/clusters.tsv`.
pub fn cluster_layers(
    cfg: &PipelineConfig,
    corpus: &Corpus,
    ds: &EmbeddingDataset,
) -> Result<Vec<LayerClusters>> {
    let layers = resolve_layers(&cfg.layers, ds.num_layers).stage("clustering")?;
    let mut out = Vec::with_capacity(layers.len());
    for layer in layers {
        let slice = ds.slice_layer(layer).stage("clustering")?;
        if cfg.k > slice.points.nrows() {
            return Err(Error::KOutOfRange {
                k: cfg.k,
                n: slice.points.nrows(),
            })
            .stage("clustering");
        }
        let dendrogram = build_dendrogram(slice.points.view(), cfg.engine).stage("clustering")?;
        let model = dendrogram.cut(cfg.k).stage("clustering")?.with_layer(layer);
        let dir = layer_dir(&cfg.out, layer);
        fs::create_dir_all(&dir)
            .map_err(|e| Error::io(&dir, e))
            .stage("report")?;
        dendrogram
            .write_tsv(dir.join("dendrogram.tsv"))
            .stage("report")?;
        let word = |w: u32| corpus.word(w).unwrap_or_default().to_owned();
        model
            .write_tsv(&slice.keys, word, dir.join("clusters.tsv"))
            .stage("report")?;
        out.push(LayerClusters {
            model,
            keys: slice.keys,
        });
    }
    Ok(out)
}

/// Reads a `clusters.tsv` export back, checking every row against the corpus.
pub fn read_cluster_export(path: &Path, corpus: &Corpus, layer: usize) -> Result<LayerClusters> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some("cluster_id\tword\tsentence_id\tposition") {
        return Err(Error::parse(
            path,
            1,
            "expected header cluster_id\tword\tsentence_id\tposition",
        ));
    }
    let mut assignment = Vec::new();
    let mut keys = Vec::new();
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(Error::parse(
                path,
                n,
                format!("expected 4 columns, found {}", cols.len()),
            ));
        }
        let num = |s: &str| {
            s.parse::<u32>()
                .map_err(|_| Error::parse(path, n, format!("{s:?} is not an integer")))
        };
        let cluster = num(cols[0])? as usize;
        let key = OccurrenceKey {
            sentence_id: num(cols[2])?,
            position: num(cols[3])?,
        };
        let occ = corpus
            .occurrence(key)
            .ok_or_else(|| Error::UnknownOccurrence {
                path: path.to_path_buf(),
                line: n,
                sentence_id: key.sentence_id,
                position: key.position,
            })?;
        let expected = corpus.word(occ.word_id).unwrap_or_default();
        if expected != cols[1] {
            return Err(Error::WordMismatch {
                path: path.to_path_buf(),
                line: n,
                expected: expected.to_owned(),
                found: cols[1].to_owned(),
            });
        }
        assignment.push(cluster);
        keys.push(occ);
    }
    let k = assignment.iter().max().map_or(0, |m| m + 1);
    let used: BTreeSet<usize> = assignment.iter().copied().collect();
    if k == 0 || used.len() != k {
        return Err(Error::parse(path, 1, "cluster ids must be dense from 0"));
    }
    Ok(LayerClusters {
        model: ClusterModel {
            k,
            assignment,
            layer,
        },
        keys,
    })
}

/// Layer indices that have a `layer_XX/clusters.tsv` under `out`.
pub fn discover_layers(out: &Path) -> Result<Vec<usize>> {
    let entries = fs::read_dir(out).map_err(|e| Error::io(out, e))?;
    let mut layers = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(out, e))?;
        let name = entry.file_name();
        if let Some(l) = name
            .to_str()
            .and_then(|n| n.strip_prefix("layer_"))
            .and_then(|n| n.parse().ok())
        {
            if entry.path().join("clusters.tsv").is_file() {
                layers.push(l);
            }
        }
    }
    layers.sort_unstable();
    if layers.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no layer_XX/clusters.tsv under {}",
            out.display()
        )));
    }
    Ok(layers)
}

/// Loads the cluster exports of a previous `cluster` run.
pub fn load_cluster_exports(cfg: &PipelineConfig, corpus: &Corpus) -> Result<Vec<LayerClusters>> {
    let layers = match &cfg.layers {
        Some(l) => l
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
        None => discover_layers(&cfg.out)?,
    };
    layers
        .into_iter()
        .map(|l| read_cluster_export(&layer_dir(&cfg.out, l).join("clusters.tsv"), corpus, l))
        .collect()
}

fn all_occurrences(layers: &[LayerClusters]) -> Vec<WordOccurrence> {
    let set: BTreeSet<WordOccurrence> =
        layers.iter().flat_map(|l| l.keys.iter().copied()).collect();
    set.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeInfo {
    pub name: String,
    pub kind: SchemeKind,
    pub classes: usize,
    pub memberships: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentOutcome {
    pub alignments: Vec<ClusterAlignment>,
    pub per_layer: Vec<LayerFraction>,
    pub overall: f64,
    pub per_scheme_average: BTreeMap<String, f64>,
}

/// Aligns every layer and writes `alignment.json`, `alignment.tsv` and `plots/`.
pub fn alignment_stage(
    cfg: &PipelineConfig,
    layers: &[LayerClusters],
    schemes: &[ConceptScheme],
) -> Result<AlignmentOutcome> {
    let acfg = cfg.alignment_config();
    let mut alignments = Vec::new();
    for l in layers {
        alignments.extend(align_model(&l.model, &l.keys, schemes, &acfg).stage("alignment")?);
    }
    let layer_ids: Vec<usize> = layers.iter().map(|l| l.model.layer).collect();
    let (per_scheme, overall) = summarize(&alignments, schemes, &layer_ids);
    emit_plot_data(cfg.out.join("plots"), &per_scheme, &overall).stage("report")?;
    write_alignment_tsv(cfg.out.join("alignment.tsv"), &alignments, cfg.theta).stage("report")?;
    let report = AlignmentReport::new(&acfg, schemes, &alignments, per_scheme, overall.clone());
    write_json(cfg.out.join("alignment.json"), &report).stage("report")?;
    Ok(AlignmentOutcome {
        alignments,
        per_layer: overall.per_layer,
        overall: overall.overall,
        per_scheme_average: overall.per_scheme_average,
    })
}

/// Explains every cluster and writes the composition reports.
pub fn composition_stage(
    cfg: &PipelineConfig,
    layers: &[LayerClusters],
    schemes: &[ConceptScheme],
) -> Result<CompositionReport> {
    let ccfg = cfg.composition_config();
    ccfg.validate().stage("composition")?;
    let mut out_layers = Vec::with_capacity(layers.len());
    for l in layers {
        let layer = l.model.layer;
        let explanations = explain_model(&l.model, &l.keys, schemes, &ccfg).stage("composition")?;
        let histogram = composition_histogram(&explanations, ccfg.max_n);
        let mut enrichment = Vec::new();
        for (cluster_id, rows) in l.model.clusters().into_iter().enumerate() {
            let members: Vec<WordOccurrence> = rows.iter().map(|&r| l.keys[r]).collect();
            let labels = enrich_aligned(&members, schemes, cfg.theta).stage("composition")?;
            if !labels.is_empty() {
                enrichment.push(Enrichment {
                    layer,
                    cluster_id,
                    labels,
                });
            }
        }
        let entry = CompositionLayer::new(layer, explanations, histogram, enrichment);
        write_json(layer_dir(&cfg.out, layer).join("composition.json"), &entry).stage("report")?;
        out_layers.push(entry);
    }
    let report = CompositionReport::new(ccfg, out_layers);
    write_json(cfg.out.join("composition.json"), &report).stage("report")?;
    write_histogram_tsv(cfg.out.join("composition_histogram.tsv"), &report.histogram)
        .stage("report")?;
    write_cumulative_tsv(
        cfg.out.join("composition_cumulative.tsv"),
        &report.histogram,
    )
    .stage("report")?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub num_points: usize,
    pub layers: Vec<usize>,
    pub k: usize,
    pub theta: f64,
    pub engine: Engine,
    pub max_n: usize,
    pub composition_mode: CompositionMode,
    pub schemes: Vec<SchemeInfo>,
    pub per_layer: Vec<LayerFraction>,
    pub overall: f64,
    pub per_scheme_average: BTreeMap<String, f64>,
    pub composition_histogram: CompositionHistogram,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub summary: RunSummary,
    pub layers: Vec<LayerClusters>,
    pub alignment: AlignmentOutcome,
    pub composition: CompositionReport,
}

pub fn scheme_info(schemes: &[ConceptScheme]) -> Vec<SchemeInfo> {
    schemes
        .iter()
        .map(|s| SchemeInfo {
            name: s.name.clone(),
            kind: s.kind,
            classes: s.num_classes(),
            memberships: s.membership_count(),
        })
        .collect()
}

/// Runs every stage and writes the full report bundle under `cfg.out`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutcome> {
    let (corpus, ds) = prepare_inputs(cfg)?;
    let occurrences: Vec<WordOccurrence> = ds.records.iter().map(|r| r.occurrence()).collect();
    let schemes = build_schemes(cfg, &corpus, &occurrences).stage("annotations")?;
    let layers = cluster_layers(cfg, &corpus, &ds)?;
    let alignment = alignment_stage(cfg, &layers, &schemes)?;
    let composition = composition_stage(cfg, &layers, &schemes)?;
    let summary = RunSummary {
        num_points: ds.records.len(),
        layers: layers.iter().map(|l| l.model.layer).collect(),
        k: cfg.k,
        theta: cfg.theta,
        engine: cfg.engine,
        max_n: cfg.max_n,
        composition_mode: cfg.composition_mode.clone(),
        schemes: scheme_info(&schemes),
        per_layer: alignment.per_layer.clone(),
        overall: alignment.overall,
        per_scheme_average: alignment.per_scheme_average.clone(),
        composition_histogram: composition.histogram.clone(),
    };
    write_json(cfg.out.join("summary.json"), &summary).stage("report")?;
    Ok(PipelineOutcome {
        summary,
        layers,
        alignment,
        composition,
    })
}

/// `cluster` subcommand: inputs and clustering only.
pub fn run_cluster(cfg: &PipelineConfig) -> Result<Vec<LayerClusters>> {
    let (corpus, ds) = prepare_inputs(cfg)?;
    cluster_layers(cfg, &corpus, &ds)
}

fn load_for_analysis(cfg: &PipelineConfig) -> Result<(Vec<LayerClusters>, Vec<ConceptScheme>)> {
    cfg.validate().stage("config")?;
    let corpus = load_corpus(&cfg.corpus).stage("corpus")?;
    let layers = load_cluster_exports(cfg, &corpus).stage("clusters")?;
    let schemes = build_schemes(cfg, &corpus, &all_occurrences(&layers)).stage("annotations")?;
    Ok((layers, schemes))
}

/// `align` subcommand: aligns the cluster exports already under `cfg.out`.
pub fn run_align(cfg: &PipelineConfig) -> Result<AlignmentOutcome> {
    let (layers, schemes) = load_for_analysis(cfg)?;
    alignment_stage(cfg, &layers, &schemes)
}

/// `compose` subcommand: explains the cluster exports already under `cfg.out`.
pub fn run_compose(cfg: &PipelineConfig) -> Result<CompositionReport> {
    let (layers, schemes) = load_for_analysis(cfg)?;
    composition_stage(cfg, &layers, &schemes)
}

/// Plain-text digest of `alignment.json` and `composition.json` under `out`.
pub fn render_report(out: &Path) -> Result<String> {
    let read = |name: &str| -> Result<String> {
        let p = out.join(name);
        fs::read_to_string(&p).map_err(|e| Error::io(&p, e))
    };
    let alignment: AlignmentReport = serde_json::from_str(&read("alignment.json")?)
        .map_err(|e| Error::parse(out.join("alignment.json"), e.line(), e.to_string()))?;
    let mut s = format!(
        "theta {}\n\nlayer\tk\taligned\tfraction\n",
        alignment.config.theta
    );
    for l in &alignment.per_layer {
        s.push_str(&format!(
            "{}\t{}\t{}\t{:.4}\n",
            l.layer, l.k, l.aligned, l.aligned_fraction
        ));
    }
    s.push_str(&format!(
        "overall\t\t\t{:.4}\n\nscheme\tnetwork_average\tmax_layerwise_match\n",
        alignment.overall
    ));
    for sc in &alignment.per_scheme {
        s.push_str(&format!(
            "{}\t{:.4}\t{}\n",
            sc.scheme, sc.network_average, sc.max_layerwise_match
        ));
    }
    if out.join("composition.json").is_file() {
        let comp: CompositionReport = serde_json::from_str(&read("composition.json")?)
            .map_err(|e| Error::parse(out.join("composition.json"), e.line(), e.to_string()))?;
        let h = &comp.histogram;
        s.push_str(&format!(
            "\ncomposition ({})\nN\tcount\tpercent\n",
            comp.config.mode
        ));
        for n in 1..=h.max_n {
            s.push_str(&format!("{n}\t{}\t{:.2}\n", h.counts[n - 1], h.percent(n)));
        }
        s.push_str(&format!("unexplained\t{}\n", h.unexplained));
    }
    Ok(s)
}
