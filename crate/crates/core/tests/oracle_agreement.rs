use chatfuzz::harness::{default_seeds, lookup, Verdict};
use chatfuzz::mutate::havoc::havoc;
use proptest::prelude::*;

const TARGETS: [&str; 4] = ["toy-xml", "toy-json", "toy-script", "toy-checksum"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    // A toy target gets past its parse stage exactly when the format oracle
    // accepts the input.
    #[test]
    fn parse_stage_matches_oracle(t in 0usize..4, pick in any::<usize>(), rng_seed in any::<u64>()) {
        let h = lookup(TARGETS[t]).unwrap();
        let seeds = default_seeds(TARGETS[t]).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(rng_seed);
        let input = havoc(&seeds[pick % seeds.len()], &mut rng, &[], None, 4096);
        let parsed = h.run(&input).unwrap().verdict != Verdict::ParseError;
        prop_assert_eq!(parsed, h.format().unwrap().validate(&input).is_valid(), "{:?}", String::from_utf8_lossy(&input));
    }
}
