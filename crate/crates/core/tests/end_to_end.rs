use std::fs;
use std::path::Path;

use encoded_concepts::annotator::LabelRef;
use encoded_concepts::composition::{explain, CompositionConfig, CompositionMode};
use encoded_concepts::corpus::load_corpus;
use encoded_concepts::pipeline::{
    read_cluster_export, run_align, run_cluster, run_compose, run_pipeline, AnnotationKind,
    AnnotationSource, PipelineConfig,
};
use encoded_concepts::report::read_plot_csv;
use encoded_concepts::synth::{generate_synthetic, Mixture, SynthCluster, SynthSpec};
use encoded_concepts::Error;

fn mix(labels: &[(&str, f64)]) -> Mixture {
    let inner = labels.iter().map(|(l, f)| (l.to_string(), *f)).collect();
    [("POS".to_string(), inner)].into_iter().collect()
}

fn spec(layers: usize, sigma: f64, clusters: Vec<Mixture>) -> SynthSpec {
    SynthSpec {
        seed: 11,
        num_layers: layers,
        dim: 6,
        sigma,
        theta: 0.9,
        max_n: 6,
        sentence_length: 6,
        clusters: clusters
            .into_iter()
            .map(|mixture| SynthCluster {
                size: 20,
                sigma: None,
                center_seed: None,
                mixture,
            })
            .collect(),
    }
}

fn config(dir: &Path, k: usize) -> PipelineConfig {
    let mut cfg = PipelineConfig::new(dir.join("corpus.txt"), dir.join("embeddings.ecx"));
    cfg.annotations.push(AnnotationSource {
        scheme: "POS".into(),
        path: dir.join("annotations/POS.tsv"),
        kind: AnnotationKind::Token,
        coarse: None,
    });
    cfg.k = k;
    cfg.out = dir.join("out");
    cfg
}

#[test]
fn four_pure_clusters_are_fully_aligned() {
    let s = spec(
        2,
        0.1,
        ["NN", "JJ", "VB", "RB"]
            .iter()
            .map(|l| mix(&[(l, 1.0)]))
            .collect(),
    );
    let dir = tempfile::tempdir().unwrap();
    generate_synthetic(&s, dir.path()).unwrap();
    let outcome = run_pipeline(&config(dir.path(), 4)).unwrap();
    assert_eq!(outcome.summary.overall, 1.0);
    assert!(outcome
        .summary
        .per_layer
        .iter()
        .all(|l| l.aligned_fraction == 1.0));
    // All-pure clusters put the whole histogram at N = 1.
    assert_eq!(outcome.composition.histogram.counts, vec![8, 0, 0, 0, 0, 0]);
}

#[test]
fn zero_variance_blobs_are_recovered() {
    let s = spec(
        1,
        0.0,
        vec![
            mix(&[("NN", 1.0)]),
            mix(&[("JJ", 1.0)]),
            mix(&[("VB", 1.0)]),
        ],
    );
    let dir = tempfile::tempdir().unwrap();
    generate_synthetic(&s, dir.path()).unwrap();
    let cfg = config(dir.path(), 3);
    let outcome = run_pipeline(&cfg).unwrap();
    let layer = &outcome.layers[0];
    let corpus = load_corpus(&cfg.corpus).unwrap();
    // Words are named after their planted cluster.
    for rows in layer.model.clusters() {
        let mut prefixes: Vec<String> = rows
            .iter()
            .map(|&r| corpus.word(layer.keys[r].word_id).unwrap()[..4].to_owned())
            .collect();
        prefixes.dedup();
        assert_eq!(prefixes.len(), 1, "{prefixes:?}");
    }
}

#[test]
fn mixture_cluster_needs_two_labels() {
    let s = spec(
        1,
        0.1,
        vec![
            mix(&[("JJ", 0.5), ("NN", 0.45), ("VB", 0.05)]),
            mix(&[("RB", 1.0)]),
        ],
    );
    let dir = tempfile::tempdir().unwrap();
    generate_synthetic(&s, dir.path()).unwrap();
    let outcome = run_pipeline(&config(dir.path(), 2)).unwrap();
    assert_eq!(outcome.composition.histogram.counts[..2], [1, 1]);
    assert_eq!(outcome.summary.overall, 0.5);
}

#[test]
fn staged_subcommands_match_the_full_run() {
    let s = spec(
        2,
        0.1,
        vec![
            mix(&[("NN", 1.0)]),
            mix(&[("JJ", 0.6), ("NN", 0.4)]),
            mix(&[("VB", 1.0)]),
        ],
    );
    let dir = tempfile::tempdir().unwrap();
    generate_synthetic(&s, dir.path()).unwrap();
    let mut full = config(dir.path(), 3);
    full.out = dir.path().join("full");
    run_pipeline(&full).unwrap();

    let staged = config(dir.path(), 3);
    run_cluster(&staged).unwrap();
    run_align(&staged).unwrap();
    run_compose(&staged).unwrap();
    for f in [
        "alignment.json",
        "alignment.tsv",
        "composition.json",
        "composition_histogram.tsv",
        "plots/POS.csv",
        "layer_01/clusters.tsv",
    ] {
        assert_eq!(
            fs::read(full.out.join(f)).unwrap(),
            fs::read(staged.out.join(f)).unwrap(),
            "{f}"
        );
    }

    let corpus = load_corpus(&full.corpus).unwrap();
    let back = read_cluster_export(&full.out.join("layer_00/clusters.tsv"), &corpus, 0).unwrap();
    assert_eq!(back.model.k, 3);
    assert_eq!(back.keys.len(), 60);
}

#[test]
fn plot_rows_per_layer() {
    let s = spec(13, 0.1, vec![mix(&[("NN", 1.0)]), mix(&[("JJ", 1.0)])]);
    let dir = tempfile::tempdir().unwrap();
    generate_synthetic(&s, dir.path()).unwrap();
    let cfg = config(dir.path(), 2);
    run_pipeline(&cfg).unwrap();
    let rows = read_plot_csv(cfg.out.join("plots/POS.csv")).unwrap();
    assert_eq!(rows.len(), 13);
    assert!(rows
        .iter()
        .all(|r| r.normalized_count == 1.0 && r.aligned_count == 2));
}

#[test]
fn missing_annotation_file_is_reported_by_stage() {
    let s = spec(1, 0.1, vec![mix(&[("NN", 1.0)]), mix(&[("JJ", 1.0)])]);
    let dir = tempfile::tempdir().unwrap();
    generate_synthetic(&s, dir.path()).unwrap();
    let mut cfg = config(dir.path(), 2);
    cfg.annotations[0].path = dir.path().join("absent.tsv");
    let err = run_pipeline(&cfg).unwrap_err();
    assert_eq!(err.stage(), Some("annotations"));
    assert!(err.to_string().contains("absent.tsv"));
    assert!(!err.is_invariant_violation());
}

#[test]
fn k_larger_than_points_is_a_clustering_error() {
    let s = spec(1, 0.1, vec![mix(&[("NN", 1.0)])]);
    let dir = tempfile::tempdir().unwrap();
    generate_synthetic(&s, dir.path()).unwrap();
    let err = run_pipeline(&config(dir.path(), 1000)).unwrap_err();
    assert_eq!(err.stage(), Some("clustering"));
    assert!(
        matches!(err, Error::Stage { ref source, .. } if matches!(**source, Error::KOutOfRange { k: 1000, n: 20 }))
    );
}

#[test]
fn embeddings_must_match_the_corpus() {
    let s = spec(1, 0.1, vec![mix(&[("NN", 1.0)])]);
    let dir = tempfile::tempdir().unwrap();
    generate_synthetic(&s, dir.path()).unwrap();
    let corpus = dir.path().join("corpus.txt");
    let text = fs::read_to_string(&corpus).unwrap();
    fs::write(&corpus, text.replacen("s000x000", "other", 1)).unwrap();
    let err = run_pipeline(&config(dir.path(), 1)).unwrap_err();
    assert_eq!(err.stage(), Some("embeddings"));
}

#[test]
fn auto_annotators_add_schemes() {
    let s = spec(1, 0.1, vec![mix(&[("NN", 1.0)]), mix(&[("JJ", 1.0)])]);
    let dir = tempfile::tempdir().unwrap();
    generate_synthetic(&s, dir.path()).unwrap();
    let mut cfg = config(dir.path(), 2);
    cfg.auto.casing = true;
    cfg.auto.position = true;
    let outcome = run_pipeline(&cfg).unwrap();
    let names: Vec<&str> = outcome
        .summary
        .schemes
        .iter()
        .map(|s| s.name.as_str())
        .collect();
    assert_eq!(names, ["POS", "casing", "first_word", "last_word"]);
    // Every synthetic word is lowercase, so both clusters align with casing:lower too.
    let enriched = &outcome.composition.layers[0].enrichment;
    assert_eq!(enriched.len(), 2);
    assert!(enriched
        .iter()
        .all(|e| e.labels.contains(&LabelRef::new("casing", "lower"))));
}

#[test]
fn returned_explanations_are_minimal() {
    use encoded_concepts::annotator::{ConceptScheme, SchemeKind};
    use encoded_concepts::corpus::WordOccurrence;

    // 30 candidate classes; verify no smaller subset reaches θ by enumeration.
    let members: Vec<WordOccurrence> = (0..60)
        .map(|i| WordOccurrence {
            word_id: i,
            sentence_id: i,
            position: 0,
        })
        .collect();
    let mut s = ConceptScheme::new("S", SchemeKind::Contextual);
    let mut state = 12345u64;
    let mut next = || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 33) as usize
    };
    for c in 0..30 {
        for o in &members {
            if next() % 9 == 0 {
                s.add_occurrence(&format!("c{c:02}"), *o);
            }
        }
    }
    let cfg = CompositionConfig {
        theta: 0.7,
        max_n: 6,
        mode: CompositionMode::Cross,
    };
    let e = explain(&members, std::slice::from_ref(&s), &cfg)
        .unwrap()
        .expect("explainable");
    assert!(e.coverage >= 0.7);
    let classes: Vec<_> = s.classes().collect();
    let size = e.n() - 1;
    // Enumerate all subsets of size n - 1.
    fn rec(
        classes: &[&encoded_concepts::annotator::ConceptClass],
        start: usize,
        left: usize,
        chosen: &mut Vec<usize>,
        members: &[WordOccurrence],
    ) -> bool {
        if left == 0 {
            let covered = members
                .iter()
                .filter(|o| chosen.iter().any(|&c| classes[c].contains(o)))
                .count();
            return covered as f64 / members.len() as f64 >= 0.7;
        }
        for i in start..classes.len() {
            chosen.push(i);
            if rec(classes, i + 1, left - 1, chosen, members) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    assert!(
        !rec(&classes, 0, size, &mut Vec::new(), &members),
        "a smaller set reaches theta"
    );
}
