use std::fs;
use std::path::PathBuf;

use causapair::data::{
    add_awgn, format_pair, load_cep_corpus, load_cep_pair, standardize, subsample, write_corpus,
    Problem,
};
use causapair::{Direction, PairedSample};
use proptest::prelude::*;

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/cep")
}

#[test]
fn miniature_corpus_loads() {
    let dir = fixture_dir();
    let (problems, listing) = load_cep_corpus(&dir, dir.join("pairmeta.txt")).unwrap();
    assert_eq!(listing.skipped, vec![4]);
    assert_eq!(problems.len(), 3);
    assert_eq!(problems[0].id, "pair0001");
    assert_eq!(problems[0].truth, Direction::Backward);
    assert_eq!(problems[1].truth, Direction::Forward);
    assert_eq!(problems[1].weight, 0.5);
    assert!(problems.iter().all(|p| p.pair.len() == 80));
}

#[test]
fn missing_pair_file_names_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let meta = tmp.path().join("pairmeta.txt");
    fs::write(&meta, "7 1 1 2 2 1\n").unwrap();
    let err = load_cep_corpus(tmp.path(), &meta).unwrap_err();
    assert!(err.to_string().contains("pair0007.txt"), "{err}");
}

#[test]
fn written_corpus_reloads() {
    let tmp = tempfile::tempdir().unwrap();
    let x: Vec<f64> = (0..12).map(|i| i as f64 / 7.0).collect();
    let y: Vec<f64> = x.iter().map(|v| v.exp()).collect();
    let problems = vec![
        Problem::new(
            "a",
            PairedSample::new(x.clone(), y.clone()).unwrap(),
            Direction::Forward,
            1.0,
        )
        .unwrap(),
        Problem::new(
            "b",
            PairedSample::new(y, x).unwrap(),
            Direction::Backward,
            0.25,
        )
        .unwrap(),
    ];
    let meta = write_corpus(tmp.path(), &problems, "pairmeta.txt").unwrap();
    let (loaded, _) = load_cep_corpus(tmp.path(), meta).unwrap();
    for (orig, back) in problems.iter().zip(&loaded) {
        assert_eq!(orig.pair, back.pair);
        assert_eq!(orig.truth, back.truth);
        assert_eq!(orig.weight, back.weight);
    }
}

#[test]
fn awgn_at_zero_db_matches_signal_power() {
    let s: Vec<f64> = (0..10_000)
        .map(|i| (i as f64 * 0.01).sin() * 2.0 + 1.0)
        .collect();
    let noisy = add_awgn(&s, 0.0, 99).unwrap();
    let noise: Vec<f64> = noisy.iter().zip(&s).map(|(a, b)| a - b).collect();
    let var = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / v.len() as f64
    };
    let ratio = var(&noise) / var(&s);
    assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
}

#[test]
fn awgn_levels_share_one_noise_direction() {
    let s: Vec<f64> = (0..500).map(|i| (i as f64 * 0.05).cos()).collect();
    let e1: Vec<f64> = add_awgn(&s, 30.0, 5)
        .unwrap()
        .iter()
        .zip(&s)
        .map(|(a, b)| a - b)
        .collect();
    let e2: Vec<f64> = add_awgn(&s, 10.0, 5)
        .unwrap()
        .iter()
        .zip(&s)
        .map(|(a, b)| a - b)
        .collect();
    let expected = 10f64.powf(-1.0); // amplitude ratio for a 20 dB gap
    for (a, b) in e1.iter().zip(&e2) {
        assert!((a - expected * b).abs() <= 1e-12 * b.abs().max(1e-3));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pair_text_round_trips(rows in prop::collection::vec((-1e12f64..1e12, -1e-9f64..1e-9), 1..40)) {
        let pair = PairedSample::new(rows.iter().map(|r| r.0).collect(), rows.iter().map(|r| r.1).collect()).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        fs::write(f.path(), format_pair(&pair)).unwrap();
        let cols = load_cep_pair(f.path()).unwrap();
        prop_assert_eq!(&cols[0], &pair.x);
        prop_assert_eq!(&cols[1], &pair.y);
    }

    #[test]
    fn standardize_is_invertible_and_idempotent(s in prop::collection::vec(-1e3f64..1e3, 2..60)) {
        prop_assume!(s.iter().any(|&v| (v - s[0]).abs() > 1e-6));
        let (z, shift, scale) = standardize(&s).unwrap();
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let sd = (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        prop_assert!(mean.abs() < 1e-10 && (sd - 1.0).abs() < 1e-10);
        let (z2, _, _) = standardize(&z).unwrap();
        for (a, b) in z.iter().zip(&z2) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        for (orig, zi) in s.iter().zip(&z) {
            prop_assert!((zi * scale + shift - orig).abs() < 1e-10 * orig.abs().max(1.0));
        }
    }

    #[test]
    fn subsample_keeps_rows_together(n in 11usize..300, n_max in 10usize..200, seed in any::<u64>()) {
        let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| -3.0 * v).collect();
        let pair = PairedSample::new(x, y).unwrap();
        let s = subsample(&pair, n_max, seed).unwrap();
        prop_assert_eq!(s.len(), n.min(n_max));
        prop_assert!(s.x.iter().zip(&s.y).all(|(a, b)| *b == -3.0 * a && pair.x.contains(a)));
        prop_assert!(s.x.windows(2).all(|w| w[0] < w[1]));
    }
}
