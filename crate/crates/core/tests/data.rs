use std::io::Write;

use deepactif::data::{
    load_csv, loocv_splits, prepare_csv, read_csv, subject_normalize, synth_generate, window, CsvSchema, SynthConfig,
};
use deepactif::Error;
use proptest::prelude::*;

fn csv_text(subjects: &[(&str, usize)], f: usize) -> String {
    let mut out = String::from("subject_id,timestamp,target");
    for c in 0..f {
        out.push_str(&format!(",g{c}"));
    }
    out.push('\n');
    for (s, (id, rows)) in subjects.iter().enumerate() {
        for r in 0..*rows {
            out.push_str(&format!("{id},{r},{}", r as f64 * 0.5 - s as f64));
            for c in 0..f {
                let v = ((r * 7 + c * 3 + s * 11) % 13) as f64 * (s + 1) as f64;
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
    }
    out
}

#[test]
fn csv_file_to_windows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gaze.csv");
    std::fs::File::create(&path)
        .unwrap()
        .write_all(csv_text(&[("p1", 10), ("p2", 12), ("p3", 4)], 3).as_bytes())
        .unwrap();

    let raw = load_csv(&path, &CsvSchema::default()).unwrap();
    assert_eq!(raw.n_rows(), 26);
    assert_eq!(raw.n_features(), 3);

    let ds = prepare_csv(&path, &CsvSchema::default(), 5, 1).unwrap();
    // p3 is shorter than the window and contributes nothing.
    assert_eq!(ds.len(), 6 + 8);
    assert_eq!(ds.subjects(), vec!["p1".to_string(), "p2".to_string()]);
    assert_eq!(ds.feature_names, vec!["g0", "g1", "g2"]);

    let strided = prepare_csv(&path, &CsvSchema::default(), 5, 5).unwrap();
    assert_eq!(strided.filter(|s| s.subject_id == "p1").len(), 2);
}

#[test]
fn missing_file_is_an_io_error() {
    let err = load_csv(std::path::Path::new("/nonexistent/x.csv"), &CsvSchema::default()).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
}

#[test]
fn schema_and_parse_errors_name_the_problem() {
    let no_target = "subject_id,timestamp,a\ns,0,1\n";
    match read_csv(no_target.as_bytes(), &CsvSchema::default()) {
        Err(Error::Schema { column }) => assert_eq!(column, "target"),
        other => panic!("{other:?}"),
    }
    let bad = "subject_id,timestamp,target,a\ns,0,1,2\ns,1,1,NaN\ns,2,1,3\n";
    match read_csv(bad.as_bytes(), &CsvSchema::default()) {
        // Rows are counted as file lines, header included.
        Err(Error::Parse { row, .. }) => assert_eq!(row, 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn normalized_subjects_have_zero_mean_unit_std() {
    let raw = read_csv(csv_text(&[("a", 30), ("b", 25)], 4).as_bytes(), &CsvSchema::default()).unwrap();
    let norm = subject_normalize(&raw).unwrap();
    for s in &norm.subjects {
        for c in 0..4 {
            let col = s.features.column(c);
            let n = col.len() as f64;
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-6);
            assert!((var.sqrt() - 1.0).abs() < 1e-6);
        }
    }
    let again = subject_normalize(&norm).unwrap();
    for (a, b) in norm.subjects.iter().zip(&again.subjects) {
        for (x, y) in a.features.as_slice().iter().zip(b.features.as_slice()) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

#[test]
fn window_counts_from_spec_examples() {
    let raw = read_csv(csv_text(&[("a", 10), ("b", 4)], 1).as_bytes(), &CsvSchema::default()).unwrap();
    let w = window(&raw, 5, 5).unwrap();
    assert_eq!(w.dataset.len(), 2);
    assert_eq!(w.skipped, vec!["b".to_string()]);
    assert_eq!(window(&raw, 5, 1).unwrap().dataset.len(), 6);
}

fn small_synth(seed: u64, subjects: usize) -> SynthConfig {
    SynthConfig {
        n_subjects: subjects,
        windows_per_subject: 5,
        window_len: 4,
        n_features: 6,
        relevant: vec![1, 4],
        weights: vec![1.0, -0.5],
        noise_std: 0.1,
        seed,
        ar_coefficient: 0.9,
    }
}

#[test]
fn synth_is_bit_identical_per_config() {
    let a = synth_generate(&small_synth(3, 4)).unwrap();
    let b = synth_generate(&small_synth(3, 4)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.relevant, vec![1, 4]);
    assert_eq!(a.dataset.len(), 20);
}

#[test]
fn synth_config_json_round_trip() {
    let cfg = small_synth(9, 3);
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(serde_json::from_str::<SynthConfig>(&text).unwrap(), cfg);
}

#[test]
fn loocv_needs_two_subjects() {
    let one = synth_generate(&small_synth(1, 1)).unwrap().dataset;
    assert!(matches!(loocv_splits(&one), Err(Error::Data(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn folds_partition_and_isolate_subjects(seed in 0u64..1000, subjects in 2usize..7) {
        let ds = synth_generate(&small_synth(seed, subjects)).unwrap().dataset;
        let folds = loocv_splits(&ds).unwrap();
        prop_assert_eq!(folds.len(), subjects);
        let mut seen_test = 0;
        for (i, fold) in folds.iter().enumerate() {
            if i > 0 {
                prop_assert!(folds[i - 1].subject < fold.subject);
            }
            prop_assert!(fold.test.samples.iter().all(|s| s.subject_id == fold.subject));
            prop_assert!(fold.train.samples.iter().all(|s| s.subject_id != fold.subject));
            prop_assert_eq!(fold.train.len() + fold.test.len(), ds.len());
            seen_test += fold.test.len();
        }
        prop_assert_eq!(seen_test, ds.len());
    }
}
