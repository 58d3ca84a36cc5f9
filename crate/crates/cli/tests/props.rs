use fretalign_cli::commands::take_seed;
use fretalign_cli::{RunConfig, Strings, TakeId};
use proptest::prelude::*;

proptest! {
    #[test]
    fn stems_round_trip(string in 1u8..=6, exercise in 1usize..100, take in 1usize..1000) {
        let id = TakeId { string, exercise, take };
        prop_assert_eq!(TakeId::parse(&id.stem()), Some(id));
    }

    #[test]
    fn config_echo_reloads_to_the_same_config(
        seed in any::<u64>(),
        takes in 1usize..40,
        hop in 0.001f64..0.02,
        loop_prob in 0.01f64..0.99,
        length in proptest::option::of(5usize..=15),
        gap in any::<bool>(),
    ) {
        let mut cfg = RunConfig::default();
        cfg.seed = seed;
        cfg.takes = takes;
        cfg.bootstrap_takes = cfg.bootstrap_takes.min(takes);
        cfg.features.hop = hop;
        cfg.align.self_loop_prob = loop_prob;
        cfg.align.gap_model = gap;
        cfg.length = length;
        let mut back = RunConfig::default();
        back.apply_text(&cfg.echo()).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn take_seeds_depend_on_the_run_seed(seed in any::<u64>(), string in 1u8..=6, exercise in 1usize..4, take in 1usize..13) {
        let id = TakeId { string, exercise, take };
        prop_assert_eq!(take_seed(seed, &id), take_seed(seed, &id));
        prop_assert_ne!(take_seed(seed, &id), take_seed(seed.wrapping_add(1), &id));
    }

    #[test]
    fn only_string_numbers_and_all_parse(s in "[a-z0-9]{0,4}") {
        let parsed = s.parse::<Strings>();
        let expected = s == "all" || matches!(s.parse::<u8>(), Ok(1..=6));
        prop_assert_eq!(parsed.is_ok(), expected);
    }
}
