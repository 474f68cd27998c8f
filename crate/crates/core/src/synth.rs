//! Planted synthetic datasets with known answers.
//!
//! Every planted cluster is a Gaussian blob in every layer. The assignment
//! of occurrences to clusters is the same in all layers; only the centers
//! move. Each cluster carries a label mixture per scheme, realized exactly
//! in the token annotation files, so the aligned fraction and the minimal
//! composition sizes can be read off the construction.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::alignment::{fraction, reaches, validate_theta};
use crate::corpus::{Corpus, WordOccurrence};
use crate::embedding_store::{write_dataset, EmbeddingDataset, EmbeddingRecord};
use crate::error::{Error, Result};

/// Label fractions per scheme, e.g. `POS -> {JJ: 0.5, NN: 0.45, VB: 0.05}`.
pub type Mixture = BTreeMap<String, BTreeMap<String, f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthCluster {
    pub size: usize,
    /// Overrides the spec-wide σ.
    #[serde(default)]
    pub sigma: Option<f64>,
    /// Overrides the center seed derived from the spec seed.
    #[serde(default)]
    pub center_seed: Option<u64>,
    #[serde(default)]
    pub mixture: Mixture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub num_layers: usize,
    pub dim: usize,
    pub sigma: f64,
    /// θ and `max_n` used for the ground truth in the sidecar.
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_max_n")]
    pub max_n: usize,
    #[serde(default = "default_sentence_length")]
    pub sentence_length: usize,
    pub clusters: Vec<SynthCluster>,
}

fn default_theta() -> f64 {
    0.9
}

fn default_max_n() -> usize {
    6
}

fn default_sentence_length() -> usize {
    8
}

const MIXTURE_TOLERANCE: f64 = 1e-9;
const CENTER_ATTEMPTS: usize = 10_000;

impl SynthSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("synth spec: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_toml(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn validate(&self) -> Result<()> {
        validate_theta(self.theta)?;
        if self.num_layers == 0 || self.dim == 0 {
            return Err(Error::InvalidConfig(
                "synth spec needs at least one layer and one dimension".into(),
            ));
        }
        if self.clusters.is_empty() {
            return Err(Error::InvalidConfig("synth spec has no clusters".into()));
        }
        if self.max_n == 0 || self.sentence_length == 0 {
            return Err(Error::InvalidConfig(
                "max_n and sentence_length must be positive".into(),
            ));
        }
        for (c, cluster) in self.clusters.iter().enumerate() {
            if cluster.size == 0 {
                return Err(Error::InvalidConfig(format!("cluster {c} is empty")));
            }
            let sigma = cluster.sigma.unwrap_or(self.sigma);
            if !(sigma.is_finite() && sigma >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "cluster {c}: sigma {sigma} must be finite and >= 0"
                )));
            }
            for (scheme, labels) in &cluster.mixture {
                if labels.values().any(|f| !(f.is_finite() && *f >= 0.0)) {
                    return Err(Error::InvalidConfig(format!(
                        "cluster {c}, scheme {scheme}: negative fraction"
                    )));
                }
                let sum: f64 = labels.values().sum();
                if (sum - 1.0).abs() > MIXTURE_TOLERANCE {
                    return Err(Error::InvalidConfig(format!(
                        "cluster {c}, scheme {scheme}: fractions sum to {sum}, not 1"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn num_points(&self) -> usize {
        self.clusters.iter().map(|c| c.size).sum()
    }

    /// Minimum distance between centers: 20σ√D for the widest blob, and
    /// never below 1 so zero-variance blobs stay apart too.
    pub fn min_center_distance(&self) -> f64 {
        let sigma = self
            .clusters
            .iter()
            .map(|c| c.sigma.unwrap_or(self.sigma))
            .fold(self.sigma, f64::max);
        (20.0 * sigma * (self.dim as f64).sqrt()).max(1.0)
    }

    fn schemes(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .clusters
            .iter()
            .flat_map(|c| c.mixture.keys().cloned())
            .collect();
        names.sort();
        names.dedup();
        names
    }
}

/// Splits `size` by `fractions` with the largest-remainder rule. Ties in the
/// remainder go to the earlier label.
pub fn largest_remainder(
    size: usize,
    fractions: &BTreeMap<String, f64>,
) -> BTreeMap<String, usize> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut remainders = Vec::with_capacity(fractions.len());
    let mut assigned = 0;
    for (label, &f) in fractions {
        let exact = f * size as f64;
        let floor = exact.floor() as usize;
        counts.insert(label.clone(), floor);
        assigned += floor;
        remainders.push((exact - floor as f64, label.clone()));
    }
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    for (_, label) in remainders.into_iter().take(size.saturating_sub(assigned)) {
        *counts.get_mut(&label).expect("label present") += 1;
    }
    counts
}

/// Gaussian blobs for one layer; `labels[i]` is the planted cluster of row `i`.
pub fn planted_blobs(spec: &SynthSpec, layer: usize) -> Result<(Array2<f32>, Vec<usize>)> {
    spec.validate()?;
    let centers = centers(spec, layer)?;
    let mut data = Vec::with_capacity(spec.num_points() * spec.dim);
    let mut labels = Vec::with_capacity(spec.num_points());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1 + layer as u64);
    for (c, cluster) in spec.clusters.iter().enumerate() {
        let sigma = cluster.sigma.unwrap_or(spec.sigma);
        let noise =
            Normal::new(0.0, sigma).map_err(|e| Error::InvalidConfig(format!("sigma: {e}")))?;
        for _ in 0..cluster.size {
            data.extend(
                centers[c]
                    .iter()
                    .map(|&m| (m + noise.sample(&mut rng)) as f32),
            );
            labels.push(c);
        }
    }
    let points = Array2::from_shape_vec((labels.len(), spec.dim), data)
        .map_err(|e| Error::Invariant(format!("blob shape: {e}")))?;
    Ok((points, labels))
}

fn centers(spec: &SynthSpec, layer: usize) -> Result<Vec<Vec<f64>>> {
    let min_dist = spec.min_center_distance();
    let k = spec.clusters.len() as f64;
    // A box wide enough that rejection sampling succeeds quickly.
    let half = min_dist * k.powf(1.0 / spec.dim as f64).max(1.0) * 2.0;
    let uniform =
        Uniform::new_inclusive(-half, half).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(spec.clusters.len());
    for (c, cluster) in spec.clusters.iter().enumerate() {
        let seed = cluster
            .center_seed
            .unwrap_or(spec.seed.wrapping_add(c as u64));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1_000 + layer as u64);
        let center = (0..CENTER_ATTEMPTS)
            .map(|_| {
                (0..spec.dim)
                    .map(|_| uniform.sample(&mut rng))
                    .collect::<Vec<f64>>()
            })
            .find(|cand| {
                out.iter().all(|o| {
                    let d2: f64 = o.iter().zip(cand).map(|(a, b)| (a - b).powi(2)).sum();
                    d2.sqrt() >= min_dist
                })
            })
            .ok_or_else(|| {
                Error::InvalidConfig(format!("could not place center {c} at distance {min_dist}"))
            })?;
        out.push(center);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedCluster {
    pub cluster: usize,
    pub size: usize,
    /// Realized label counts per scheme.
    pub counts: BTreeMap<String, BTreeMap<String, usize>>,
    pub aligned: bool,
    /// Minimal label count reaching θ within each scheme, if ≤ `max_n`.
    pub minimal_n: BTreeMap<String, Option<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedHistogram {
    pub counts: Vec<usize>,
    pub unexplained: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub num_layers: usize,
    pub dim: usize,
    pub theta: f64,
    pub max_n: usize,
    pub rounding: String,
    pub min_center_distance: f64,
    pub clusters: Vec<PlantedCluster>,
    /// Same in every layer, since the partition is shared.
    pub aligned_fraction: f64,
    /// Per-layer minimal-N histogram for each scheme.
    pub composition: BTreeMap<String, PlantedHistogram>,
    /// Expected histogram when all schemes are composed together. Only
    /// present with a single scheme, where it equals that scheme's.
    pub cross_composition: Option<PlantedHistogram>,
}

fn minimal_n(
    counts: &BTreeMap<String, usize>,
    size: usize,
    theta: f64,
    max_n: usize,
) -> Option<usize> {
    let mut sorted: Vec<usize> = counts.values().copied().filter(|&c| c > 0).collect();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let mut covered = 0;
    for (i, c) in sorted.into_iter().enumerate().take(max_n) {
        covered += c;
        if reaches(covered, size, theta) {
            return Some(i + 1);
        }
    }
    None
}

pub fn ground_truth(spec: &SynthSpec) -> Result<GroundTruth> {
    spec.validate()?;
    let schemes = spec.schemes();
    let mut clusters = Vec::with_capacity(spec.clusters.len());
    for (c, cluster) in spec.clusters.iter().enumerate() {
        let counts: BTreeMap<String, BTreeMap<String, usize>> = cluster
            .mixture
            .iter()
            .map(|(s, f)| (s.clone(), largest_remainder(cluster.size, f)))
            .collect();
        let aligned = counts.values().any(|labels| {
            labels
                .values()
                .any(|&n| reaches(n, cluster.size, spec.theta))
        });
        let minimal = schemes
            .iter()
            .map(|s| {
                let n = counts
                    .get(s)
                    .and_then(|labels| minimal_n(labels, cluster.size, spec.theta, spec.max_n));
                (s.clone(), n)
            })
            .collect();
        clusters.push(PlantedCluster {
            cluster: c,
            size: cluster.size,
            counts,
            aligned,
            minimal_n: minimal,
        });
    }
    let composition: BTreeMap<String, PlantedHistogram> = schemes
        .iter()
        .map(|s| {
            let mut h = PlantedHistogram {
                counts: vec![0; spec.max_n],
                unexplained: 0,
            };
            for c in &clusters {
                match c.minimal_n[s] {
                    Some(n) => h.counts[n - 1] += 1,
                    None => h.unexplained += 1,
                }
            }
            (s.clone(), h)
        })
        .collect();
    let cross_composition = match schemes.len() {
        1 => composition.values().next().cloned(),
        _ => None,
    };
    let aligned = clusters.iter().filter(|c| c.aligned).count();
    Ok(GroundTruth {
        seed: spec.seed,
        num_layers: spec.num_layers,
        dim: spec.dim,
        theta: spec.theta,
        max_n: spec.max_n,
        rounding: "largest_remainder".into(),
        min_center_distance: spec.min_center_distance(),
        aligned_fraction: fraction(aligned, clusters.len()),
        clusters,
        composition,
        cross_composition,
    })
}

/// Files written by [`generate_synthetic`], all inside one directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthBundle {
    pub corpus: PathBuf,
    pub embeddings: PathBuf,
    /// One token annotation TSV per scheme.
    pub annotations: BTreeMap<String, PathBuf>,
    pub ground_truth: PathBuf,
    /// Ready-to-run pipeline config pointing at the files above.
    pub pipeline_config: PathBuf,
}

pub const CORPUS_FILE: &str = "corpus.txt";
pub const EMBEDDINGS_FILE: &str = "embeddings.ecx";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";
pub const PIPELINE_CONFIG_FILE: &str = "pipeline.toml";

fn word_name(cluster: usize, member: usize) -> String {
    // Every word type is used by two occurrences of the same cluster.
    format!("s{cluster:03}x{:03}", member / 2)
}

/// Writes corpus, embeddings, annotation TSVs, the ground-truth sidecar and a
/// pipeline config into `dir`.
pub fn generate_synthetic(spec: &SynthSpec, dir: impl AsRef<Path>) -> Result<SynthBundle> {
    spec.validate()?;
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    // (cluster, member) slots laid out into sentences in a seeded order.
    let mut slots: Vec<(usize, usize)> = spec
        .clusters
        .iter()
        .enumerate()
        .flat_map(|(c, cl)| (0..cl.size).map(move |m| (c, m)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    slots.shuffle(&mut rng);
    let lines: Vec<String> = slots
        .chunks(spec.sentence_length)
        .map(|chunk| {
            chunk
                .iter()
                .map(|&(c, m)| word_name(c, m))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let corpus = Corpus::from_lines(lines.iter().map(String::as_str));
    let mut text = lines.join("\n");
    text.push('\n');
    let corpus_path = dir.join(CORPUS_FILE);
    fs::write(&corpus_path, text).map_err(|e| Error::io(&corpus_path, e))?;

    // occurrence of each (cluster, member)
    let mut slot_occ: BTreeMap<(usize, usize), WordOccurrence> = BTreeMap::new();
    for (i, &slot) in slots.iter().enumerate() {
        let sentence_id = (i / spec.sentence_length) as u32;
        let position = (i % spec.sentence_length) as u32;
        let word_id = corpus
            .word_id(&word_name(slot.0, slot.1))
            .ok_or_else(|| Error::Invariant("generated word missing from corpus".into()))?;
        slot_occ.insert(
            slot,
            WordOccurrence {
                word_id,
                sentence_id,
                position,
            },
        );
    }

    let layers: Vec<Array2<f32>> = (0..spec.num_layers)
        .map(|l| planted_blobs(spec, l).map(|(p, _)| p))
        .collect::<Result<_>>()?;
    let mut records = Vec::with_capacity(slot_occ.len());
    let mut row = 0;
    for (c, cluster) in spec.clusters.iter().enumerate() {
        for m in 0..cluster.size {
            let occ = slot_occ[&(c, m)];
            let mut vectors = Vec::with_capacity(spec.num_layers * spec.dim);
            for layer in &layers {
                vectors.extend(layer.row(row).iter());
            }
            records.push(EmbeddingRecord {
                word_id: occ.word_id,
                sentence_id: occ.sentence_id,
                position: occ.position,
                vectors,
            });
            row += 1;
        }
    }
    records.sort_by_key(|r| (r.sentence_id, r.position));
    let dataset = EmbeddingDataset {
        num_layers: spec.num_layers,
        dim: spec.dim,
        vocab: corpus.words().to_vec(),
        records,
    };
    let embeddings = dir.join(EMBEDDINGS_FILE);
    write_dataset(&dataset, &embeddings)?;

    let truth = ground_truth(spec)?;
    let ann_dir = dir.join("annotations");
    fs::create_dir_all(&ann_dir).map_err(|e| Error::io(&ann_dir, e))?;
    let mut annotations = BTreeMap::new();
    for scheme in spec.schemes() {
        let mut rows: Vec<(WordOccurrence, String)> = Vec::new();
        for planted in &truth.clusters {
            let Some(counts) = planted.counts.get(&scheme) else {
                continue;
            };
            let mut member = 0;
            for (label, &n) in counts {
                for _ in 0..n {
                    rows.push((slot_occ[&(planted.cluster, member)], label.clone()));
                    member += 1;
                }
            }
        }
        rows.sort_by_key(|(o, _)| (o.sentence_id, o.position));
        let mut out = String::from("sentence_id\tposition\tword\tlabel\n");
        for (o, label) in rows {
            let word = corpus.word(o.word_id).unwrap_or_default();
            out.push_str(&format!(
                "{}\t{}\t{word}\t{label}\n",
                o.sentence_id, o.position
            ));
        }
        let path = ann_dir.join(format!("{scheme}.tsv"));
        fs::write(&path, out).map_err(|e| Error::io(&path, e))?;
        annotations.insert(scheme, path);
    }

    let ground_truth_path = dir.join(GROUND_TRUTH_FILE);
    let json = serde_json::to_string_pretty(&truth).map_err(|e| Error::Invariant(e.to_string()))?;
    fs::write(&ground_truth_path, json + "\n").map_err(|e| Error::io(&ground_truth_path, e))?;

    let pipeline_config = dir.join(PIPELINE_CONFIG_FILE);
    fs::write(&pipeline_config, pipeline_toml(spec, &annotations))
        .map_err(|e| Error::io(&pipeline_config, e))?;

    Ok(SynthBundle {
        corpus: corpus_path,
        embeddings,
        annotations,
        ground_truth: ground_truth_path,
        pipeline_config,
    })
}

fn pipeline_toml(spec: &SynthSpec, annotations: &BTreeMap<String, PathBuf>) -> String {
    let mut s = format!(
        "corpus = \"{CORPUS_FILE}\"\nembeddings = \"{EMBEDDINGS_FILE}\"\nout = \"report\"\nk = {}\ntheta = {:?}\nmax_n = {}\nseed = {}\n",
        spec.clusters.len(),
        spec.theta,
        spec.max_n,
        spec.seed
    );
    for scheme in annotations.keys() {
        s.push_str(&format!(
            "\n[[annotations]]\nscheme = \"{scheme}\"\nkind = \"token\"\npath = \"annotations/{scheme}.tsv\"\n"
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotator::load_token_annotations;
    use crate::corpus::load_corpus;
    use crate::embedding_store::read_dataset;

    fn mix(scheme: &str, labels: &[(&str, f64)]) -> Mixture {
        let inner = labels.iter().map(|(l, f)| (l.to_string(), *f)).collect();
        [(scheme.to_string(), inner)].into_iter().collect()
    }

    fn spec(mixtures: Vec<Mixture>, size: usize) -> SynthSpec {
        SynthSpec {
            seed: 3,
            num_layers: 2,
            dim: 4,
            sigma: 0.1,
            theta: 0.9,
            max_n: 6,
            sentence_length: 5,
            clusters: mixtures
                .into_iter()
                .map(|mixture| SynthCluster {
                    size,
                    sigma: None,
                    center_seed: None,
                    mixture,
                })
                .collect(),
        }
    }

    #[test]
    fn largest_remainder_rounding() {
        let f: BTreeMap<String, f64> = [("a", 1.0 / 3.0), ("b", 1.0 / 3.0), ("c", 1.0 / 3.0)]
            .iter()
            .map(|(l, f)| (l.to_string(), *f))
            .collect();
        let c = largest_remainder(10, &f);
        assert_eq!(c.values().sum::<usize>(), 10);
        assert_eq!(c["a"], 4);
        assert_eq!(c["b"], 3);
        let f: BTreeMap<String, f64> = [("x", 0.55), ("y", 0.45)]
            .iter()
            .map(|(l, f)| (l.to_string(), *f))
            .collect();
        let c = largest_remainder(3, &f);
        // 1.65 / 1.35: the larger remainder goes to x.
        assert_eq!((c["x"], c["y"]), (2, 1));
    }

    #[test]
    fn validation() {
        let mut s = spec(vec![mix("POS", &[("NN", 0.5), ("JJ", 0.4)])], 10);
        assert!(s.validate().is_err());
        s.clusters[0].mixture = mix("POS", &[("NN", 1.0)]);
        assert!(s.validate().is_ok());
        s.sigma = -1.0;
        assert!(s.validate().is_err());
        s.sigma = 0.0;
        assert!(s.validate().is_ok());
        s.clusters.clear();
        assert!(s.validate().is_err());
    }

    #[test]
    fn ground_truth_values() {
        let s = spec(
            vec![
                mix("POS", &[("NN", 1.0)]),
                mix("POS", &[("JJ", 0.5), ("NN", 0.45), ("VB", 0.05)]),
                mix(
                    "POS",
                    &[("JJ", 0.4), ("NN", 0.3), ("RB", 0.25), ("VB", 0.05)],
                ),
                mix("POS", &[("JJ", 0.92), ("NN", 0.08)]),
            ],
            20,
        );
        let t = ground_truth(&s).unwrap();
        assert_eq!(t.aligned_fraction, 0.5);
        let n: Vec<Option<usize>> = t.clusters.iter().map(|c| c.minimal_n["POS"]).collect();
        assert_eq!(n, vec![Some(1), Some(2), Some(3), Some(1)]);
        assert_eq!(t.composition["POS"].counts, vec![2, 1, 1, 0, 0, 0]);
        assert_eq!(t.cross_composition.as_ref(), Some(&t.composition["POS"]));
    }

    #[test]
    fn blobs_are_separated() {
        let s = spec(vec![mix("POS", &[("NN", 1.0)]); 6], 15);
        let (pts, labels) = planted_blobs(&s, 1).unwrap();
        assert_eq!(pts.nrows(), 90);
        assert_eq!(labels[..15], [0; 15]);
        let cs = centers(&s, 1).unwrap();
        for i in 0..cs.len() {
            for j in 0..i {
                let d: f64 = cs[i]
                    .iter()
                    .zip(&cs[j])
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!(d >= s.min_center_distance());
            }
        }
        assert_ne!(centers(&s, 0).unwrap(), cs);
    }

    #[test]
    fn zero_sigma_points_sit_on_centers() {
        let mut s = spec(vec![mix("POS", &[("NN", 1.0)]); 2], 3);
        s.sigma = 0.0;
        let (pts, _) = planted_blobs(&s, 0).unwrap();
        assert_eq!(pts.row(0), pts.row(2));
        assert_ne!(pts.row(0), pts.row(3));
    }

    #[test]
    fn bundle_loads_back() {
        let s = spec(
            vec![
                mix("POS", &[("NN", 1.0)]),
                mix("POS", &[("JJ", 0.5), ("NN", 0.45), ("VB", 0.05)]),
            ],
            20,
        );
        let dir = tempfile::tempdir().unwrap();
        let b = generate_synthetic(&s, dir.path()).unwrap();
        let corpus = load_corpus(&b.corpus).unwrap();
        let ds = read_dataset(&b.embeddings).unwrap();
        assert_eq!(ds.records.len(), 40);
        assert_eq!(corpus.occurrences().count(), 40);
        for r in &ds.records {
            assert_eq!(
                corpus.occurrence(r.occurrence().key()),
                Some(r.occurrence())
            );
        }
        let pos = load_token_annotations(&b.annotations["POS"], "POS", &corpus).unwrap();
        assert_eq!(pos.class("NN").unwrap().len(), 29);
        assert_eq!(pos.class("JJ").unwrap().len(), 10);
        assert_eq!(pos.class("VB").unwrap().len(), 1);
        let truth: GroundTruth =
            serde_json::from_str(&fs::read_to_string(&b.ground_truth).unwrap()).unwrap();
        assert_eq!(truth, ground_truth(&s).unwrap());

        let again = tempfile::tempdir().unwrap();
        generate_synthetic(&s, again.path()).unwrap();
        for f in [
            CORPUS_FILE,
            EMBEDDINGS_FILE,
            GROUND_TRUTH_FILE,
            PIPELINE_CONFIG_FILE,
            "annotations/POS.tsv",
        ] {
            assert_eq!(
                fs::read(dir.path().join(f)).unwrap(),
                fs::read(again.path().join(f)).unwrap(),
                "{f}"
            );
        }
    }

    #[test]
    fn spec_from_toml() {
        let s = SynthSpec::from_toml(
            r#"
seed = 1
num_layers = 2
dim = 3
sigma = 0.0

[[clusters]]
size = 4
[clusters.mixture.POS]
NN = 0.75
JJ = 0.25
"#,
        )
        .unwrap();
        assert_eq!(s.theta, 0.9);
        assert_eq!(s.clusters[0].mixture["POS"]["NN"], 0.75);
        assert!(SynthSpec::from_toml("seed = \"x\"").is_err());
    }
}
