use irm_core::data::{gen_clusters, gen_sphere, load_csv, save_csv, GenKind, GenSpec};
use irm_core::{Dataset, Error};
use proptest::prelude::*;

#[test]
fn csv_file_shape() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cars.csv");
    std::fs::write(&path, "model,price,mpg,hp\na,0.2,0.3,0.1\nb,0.5,0.1,0.4\nc,0.1,0.9,0.2\n").unwrap();
    let ds: Dataset<f64> = load_csv(&path, Some("model")).unwrap();
    assert_eq!((ds.len(), ds.dim), (3, 3));
    assert_eq!(ds.attributes, vec!["price", "mpg", "hp"]);
    assert_eq!(ds.tuples[2].coords, vec![0.1, 0.9, 0.2]);
    assert!(matches!(load_csv::<f64>(dir.path().join("missing.csv"), None), Err(Error::Io(_))));
}

#[test]
fn gen_spec_dispatches() {
    let spec = GenSpec { kind: GenKind::Clusters, n: 30, d: 3, num_clusters: 3, sigma: 0.1, seed: 4 };
    assert_eq!(spec.generate::<f64>().unwrap(), gen_clusters(30, 3, 3, 0.1, 4).unwrap());
    let spec = GenSpec { kind: GenKind::Sphere, ..spec };
    assert_eq!(spec.generate::<f64>().unwrap(), gen_sphere(30, 3, 4).unwrap());
    let parsed: GenSpec = serde_json::from_str(r#"{"kind":"clusters","n":10,"d":2}"#).unwrap();
    assert_eq!(parsed.num_clusters, 5);
    assert_eq!(parsed.sigma, 0.1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn csv_round_trip(n in 1usize..40, d in 1usize..6, seed in any::<u64>(), clusters in any::<bool>()) {
        let ds: Dataset<f64> = if clusters && n >= 2 {
            gen_clusters(n, d, 2, 0.3, seed).unwrap()
        } else {
            gen_sphere(n, d, seed).unwrap()
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.csv");
        save_csv(&ds, &path).unwrap();
        let back: Dataset<f64> = load_csv(&path, None).unwrap();
        // The file holds normalized coordinates, so the original scale is not kept.
        prop_assert_eq!(back.tuples, ds.tuples);
        prop_assert_eq!(back.attributes, ds.attributes);
        prop_assert_eq!(back.labels, ds.labels);
    }

    #[test]
    fn generators_are_pure(n in 1usize..50, d in 1usize..5, seed in any::<u64>()) {
        prop_assert_eq!(gen_sphere::<f64>(n, d, seed).unwrap(), gen_sphere::<f64>(n, d, seed).unwrap());
    }
}
