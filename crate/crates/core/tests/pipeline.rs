use hdadbin_core::dataset::{load_pairs, write_pair, Manifest, ManifestEntry, Split, StoredProvenance};
use hdadbin_core::eval::{confusion, metrics};
use hdadbin_core::labeling::{label_pair, CorrectionLayer, Correction, Provenance, SourceImage};
use hdadbin_core::synth::{generate, SynthConfig};

#[test]
fn labeling_recovers_generator_masks() {
    let mut total = 0.0;
    for seed in 0..4 {
        let s = generate(&SynthConfig::new(256, 200, 500 + seed));
        let pair = label_pair(SourceImage::Color(s.image), "p").unwrap();
        assert_eq!(pair.provenance(), Provenance::Refined);
        total += metrics(&confusion(pair.truth(), &s.mask).unwrap()).f_measure;
    }
    assert!(total / 4.0 >= 0.9, "mean F {}", total / 4.0);
}

#[test]
fn labeled_pairs_survive_the_dataset_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let s = generate(&SynthConfig::new(90, 60, 1));
    let pair = label_pair(SourceImage::Color(s.image), "sheet-1").unwrap();
    let mut layer = CorrectionLayer::keep_all(90, 60).unwrap();
    for x in 0..90 {
        layer.set(x, 0, Correction::ForceForeground);
    }
    write_pair(dir.path(), &pair, Some(&layer)).unwrap();
    Manifest {
        pairs: vec![ManifestEntry {
            id: "sheet-1".into(),
            split: Split::Train,
            provenance: StoredProvenance::Refined,
        }],
    }
    .save(dir.path())
    .unwrap();
    let loaded = load_pairs(dir.path(), Some(Split::Train)).unwrap();
    assert_eq!(loaded.len(), 1);
    assert_eq!(loaded[0].provenance(), Provenance::Corrected);
    assert_eq!(loaded[0].source(), pair.source());
    for x in 0..90 {
        assert!(loaded[0].truth().is_foreground(x, 0));
    }
    for y in 1..60 {
        for x in 0..90 {
            assert_eq!(loaded[0].truth().get(x, y), pair.truth().get(x, y));
        }
    }
    assert!(load_pairs(dir.path(), Some(Split::Test)).unwrap().is_empty());
}
