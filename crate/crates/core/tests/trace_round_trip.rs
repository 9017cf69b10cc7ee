use proptest::prelude::*;
use rugguard_core::ingest::{parse_trace, parse_trace_str, serialize_trace, write_trace, IngestOptions};
use rugguard_core::synthgen::{generate_project, GeneratorConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_traces_survive_serialization(seed: u64, index in 0usize..500, hard: bool) {
        let cfg = GeneratorConfig { seed, hard_mode: hard, ..Default::default() };
        let trace = generate_project(&cfg, index).trace;
        let text = serialize_trace(&trace);
        let back = parse_trace_str(&text, IngestOptions::default()).unwrap();
        prop_assert_eq!(&back, &trace);
        prop_assert_eq!(serialize_trace(&back), text);
    }
}

#[test]
fn trace_files_round_trip_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let trace = generate_project(&GeneratorConfig::default(), 3).trace;
    let path = dir.path().join("tok00003.trace");
    write_trace(&path, &trace).unwrap();
    assert_eq!(parse_trace(&path).unwrap(), trace);
}
