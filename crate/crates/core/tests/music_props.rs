use std::collections::BTreeSet;

use fretalign::music::{
    compose_exercises, covered_pitches, covered_positions, pitch_from_fret, string_pitches, Exercise, Pitch,
};
use proptest::prelude::*;

#[test]
fn e2_frequency_from_the_formula() {
    let f = 440.0 * 2f64.powf((40.0 - 69.0) / 12.0);
    assert!((Pitch::from_midi(40).frequency() - f).abs() < 1e-12);
    assert!((Pitch::from_midi(40).frequency() - 82.407).abs() < 0.001);
}

#[test]
fn covered_set_is_the_union_of_positions() {
    let union: BTreeSet<Pitch> = covered_positions()
        .into_iter()
        .map(|p| pitch_from_fret(p.string(), p.fret()).unwrap())
        .collect();
    assert_eq!(union, covered_pitches());
    assert_eq!(covered_positions().len(), 29, "no pitch is covered twice");
    let midis: Vec<u8> = covered_pitches().iter().map(|p| p.midi()).collect();
    assert_eq!(midis, (40..=68).collect::<Vec<_>>());
    assert!(!covered_pitches().contains(&"A5".parse().unwrap()));
}

proptest! {
    #[test]
    fn octave_doubles_frequency(midi in 20u8..=88) {
        let lo = Pitch::from_midi(midi).frequency();
        let hi = Pitch::from_midi(midi + 12).frequency();
        prop_assert!((hi / lo - 2.0).abs() < 1e-12);
    }

    #[test]
    fn names_round_trip(midi in 0u8..=127) {
        let p = Pitch::from_midi(midi);
        prop_assert_eq!(p.name().parse::<Pitch>().unwrap(), p);
    }

    #[test]
    fn composition_is_valid_and_pure(string in 1u8..=6, count in 1usize..5, extra in 0usize..8, seed in any::<u64>()) {
        let notes = string_pitches(string).unwrap();
        let length = (notes.len() + extra).max(5);
        let a = compose_exercises(string, count, length, seed).unwrap();
        prop_assert_eq!(&a, &compose_exercises(string, count, length, seed).unwrap());
        prop_assert_eq!(a.len(), count);
        for ex in &a {
            // passes the constructor's own checks
            prop_assert_eq!(&Exercise::new(ex.id(), ex.string(), ex.sequence().to_vec()).unwrap(), ex);
            prop_assert_eq!(ex.sequence().len(), length);
            let seen: BTreeSet<Pitch> = ex.sequence().iter().copied().collect();
            prop_assert_eq!(seen, notes.iter().copied().collect::<BTreeSet<_>>());
            prop_assert!(ex.sequence().windows(2).all(|w| w[0] != w[1]));
        }
    }
}
