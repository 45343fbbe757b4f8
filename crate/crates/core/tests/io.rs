use std::fs;

use ucrit::critprob::{classify_field, EstimatorSpec, Pattern};
use ucrit::field::{Model, UncertainField};
use ucrit::field_io::{
    export_heatmap, load_ensemble, load_probability_field, save_ensemble, save_probability_field,
    uniform_field_from_scalar, write_ucvf, FieldFormat,
};
use ucrit::synth::ackley_ensemble;
use ucrit::Error;

#[test]
fn ensemble_files_roundtrip_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.ucvf"), dir.path().join("b.ucvf"));
    let stack = ackley_ensemble(9, 7, 5, 0.5, 3).unwrap();
    save_ensemble(&stack, &a).unwrap();
    let loaded = load_ensemble(&a).unwrap();
    assert_eq!(loaded, stack);
    save_ensemble(&loaded, &b).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(&a).unwrap().len(), "UCVF1 9 7 5\n".len() + 4 * 9 * 7 * 5);
}

#[test]
fn damaged_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.ucvf");
    save_ensemble(&ackley_ensemble(4, 4, 2, 0.1, 1).unwrap(), &path).unwrap();
    let bytes = fs::read(&path).unwrap();
    fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(load_ensemble(&path), Err(Error::PayloadLength { .. })));
    fs::write(&path, [b"UCVX1".as_slice(), &bytes[5..]].concat()).unwrap();
    assert!(matches!(load_ensemble(&path), Err(Error::Format(_))));
    assert!(matches!(load_ensemble(dir.path().join("missing")), Err(Error::Io(_))));
}

#[test]
fn probability_fields_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let stack = ackley_ensemble(8, 6, 10, 0.5, 2).unwrap();
    let field = UncertainField::from_ensemble(&stack, Model::Epanechnikov { k: 5f64.sqrt() }, true).unwrap();
    let probs = classify_field(&field, &EstimatorSpec::closed_form()).unwrap();

    let csv = dir.path().join("p.csv");
    save_probability_field(&probs, &csv, FieldFormat::Csv).unwrap();
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 8 * 6 + 1);
    assert!(text.lines().nth(1).unwrap().starts_with("0,0,") && text.lines().nth(1).unwrap().ends_with(",0"));
    let back = load_probability_field(&csv, FieldFormat::Csv).unwrap();
    assert_eq!(back.valid, probs.valid);
    for (a, b) in back.triples.iter().zip(&probs.triples) {
        for p in Pattern::ALL {
            assert!((a.get(p) - b.get(p)).abs() <= 1e-9);
        }
    }

    let (u1, u2) = (dir.path().join("p1.ucvf"), dir.path().join("p2.ucvf"));
    save_probability_field(&probs, &u1, FieldFormat::Ucvf).unwrap();
    let single = load_probability_field(&u1, FieldFormat::Ucvf).unwrap();
    save_probability_field(&single, &u2, FieldFormat::Ucvf).unwrap();
    assert_eq!(fs::read(&u1).unwrap(), fs::read(&u2).unwrap());
    assert!(fs::read(&u1).unwrap().starts_with(b"UCVF1 8 6 4\n"));
}

#[test]
fn heatmap_pixels() {
    let dir = tempfile::tempdir().unwrap();
    let stack = ackley_ensemble(5, 5, 4, 0.0, 0).unwrap();
    let field = UncertainField::from_ensemble(&stack, Model::Uniform, false).unwrap();
    let probs = classify_field(&field, &EstimatorSpec::closed_form()).unwrap();
    let path = dir.path().join("h.pgm");
    export_heatmap(&probs, Pattern::Min, &path, 1.0).unwrap();
    let img = fs::read(&path).unwrap();
    let header = b"P5\n5 5\n255\n";
    assert!(img.starts_with(header));
    let px = &img[header.len()..];
    // Noise-free Ackley has its only interior minimum at the center.
    assert_eq!(px[12], 255);
    assert_eq!(px.iter().filter(|&&v| v > 0).count(), 1);
    export_heatmap(&probs, Pattern::Max, &path, 1.0).unwrap();
    assert!(fs::read(&path).unwrap()[header.len()..].iter().all(|&v| v == 0 || v == 255));
}

#[test]
fn scalar_rasters_become_uniform_fields() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.ucvf");
    let values: Vec<f32> = (0..12).map(|i| i as f32 * 0.5).collect();
    write_ucvf(fs::File::create(&path).unwrap(), 4, 3, 1, &values).unwrap();
    let field = uniform_field_from_scalar(&path, 0.25).unwrap();
    for (d, v) in field.distributions().iter().zip(&values) {
        assert!((d.support().width() - 0.25).abs() < 1e-12);
        assert!((d.support().midpoint() - *v as f64).abs() < 1e-12);
    }
    let points = uniform_field_from_scalar(&path, 0.0).unwrap();
    assert!(points.distributions().iter().all(|d| d.is_degenerate()));
    assert!(uniform_field_from_scalar(&path, -1.0).is_err());
}
