use hpfrac::experiments::{
    compute_reference, load_or_compute_reference, read_reference, reference_hash, write_reference, Config, Study,
};
use hpfrac::Error;

fn small() -> Config {
    Config {
        reference_layers: 4,
        layers: vec![2, 3],
        ..Config::preset(Study::Singular)
    }
}

#[test]
fn recomputation_is_bit_exact() {
    let a = compute_reference(&small()).unwrap();
    let b = compute_reference(&small()).unwrap();
    assert_eq!(a.hash, b.hash);
    assert_eq!(a.trajectory.initial, b.trajectory.initial);
    assert_eq!(a.trajectory.blocks, b.trajectory.blocks);
}

#[test]
fn text_round_trip_is_lossless() {
    let run = compute_reference(&small()).unwrap();
    let mut buf = Vec::new();
    write_reference(&mut buf, &run).unwrap();
    let back = read_reference(buf.as_slice()).unwrap();
    assert_eq!(back.hash, run.hash);
    assert_eq!(back.layers, run.layers);
    assert_eq!(back.trajectory.partition.breakpoints(), run.trajectory.partition.breakpoints());
    assert_eq!(back.trajectory.partition.degrees(), run.trajectory.partition.degrees());
    assert_eq!(back.trajectory.initial, run.trajectory.initial);
    assert_eq!(back.trajectory.blocks, run.trajectory.blocks);
}

#[test]
fn cache_is_reused_and_checked() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ref.txt");
    let cfg = small();
    assert!(matches!(load_or_compute_reference(&cfg, Some(&path), false), Err(Error::Config(_))));
    let first = load_or_compute_reference(&cfg, Some(&path), true).unwrap();
    let stamp = std::fs::metadata(&path).unwrap().modified().unwrap();
    let again = load_or_compute_reference(&cfg, Some(&path), false).unwrap();
    assert_eq!(first.trajectory.blocks, again.trajectory.blocks);
    assert_eq!(std::fs::metadata(&path).unwrap().modified().unwrap(), stamp);

    let sweep_only = Config { layers: vec![2], ..cfg.clone() };
    assert_eq!(reference_hash(&sweep_only), reference_hash(&cfg));
    let other = Config { s: 0.6, ..cfg };
    assert_ne!(reference_hash(&other), first.hash);
    assert!(matches!(load_or_compute_reference(&other, Some(&path), false), Err(Error::Config(_))));
    let rebuilt = load_or_compute_reference(&other, Some(&path), true).unwrap();
    assert_eq!(read_reference(std::fs::File::open(&path).unwrap()).unwrap().hash, rebuilt.hash);
}
