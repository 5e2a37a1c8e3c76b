//! Property-based round-trip invariants for the text formats.

use boolgames::equilibria::{parse_rational, rational_text, Rational};
use boolgames::formula::{parse_formula, render_formula, Formula, Prefix, VarId};
use boolgames::tm::{parse_machine, render_machine, Dir, Ntm, Rule, Symbol};
use num::BigInt;
use proptest::prelude::*;
use std::collections::BTreeSet;

fn var_strategy() -> impl Strategy<Value = VarId> {
    prop_oneof![
        // Bare names, kept clear of the grammar's keywords.
        "[bcd][a-z0-9]{0,4}".prop_map(VarId::named),
        (
            1u32..7,
            prop::sample::select(vec![
                Prefix::Plain,
                Prefix::P,
                Prefix::S,
                Prefix::N,
                Prefix::Np,
                Prefix::Ns,
            ]),
            prop::sample::select(vec!["Time", "Tape", "State", "Head"]),
            0u32..9,
        )
            .prop_map(|(player, prefix, role, index)| VarId::scoped(
                player, prefix, role, index
            )),
    ]
}

fn formula_strategy() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        Just(Formula::tru()),
        Just(Formula::fals()),
        var_strategy().prop_map(Formula::var),
    ];
    leaf.prop_recursive(4, 48, 4, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            prop::collection::vec(inner.clone(), 0..4).prop_map(Formula::and),
            prop::collection::vec(inner.clone(), 0..4).prop_map(Formula::or),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::iff(a, b)),
            prop::collection::vec(inner, 0..4).prop_map(Formula::oneof),
        ]
    })
}

fn symbol_strategy() -> impl Strategy<Value = Symbol> {
    prop::sample::select(vec![Symbol::Zero, Symbol::One, Symbol::Blank])
}

fn machine_strategy() -> impl Strategy<Value = Ntm> {
    (1usize..=4).prop_flat_map(|n| {
        let states: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
        let rule = (
            0..n,
            symbol_strategy(),
            0..n,
            symbol_strategy(),
            prop::sample::select(vec![Dir::L, Dir::R]),
        )
            .prop_map({
                let states = states.clone();
                move |(from, read, to, write, dir)| Rule {
                    from_state: states[from].clone(),
                    read,
                    to_state: states[to].clone(),
                    write,
                    dir,
                }
            });
        (
            prop::collection::vec(rule, 0..6),
            prop::sample::subsequence(states.clone(), 1..=n),
        )
            .prop_map(move |(rules, accepting)| {
                Ntm::new(
                    states.clone(),
                    states[0].clone(),
                    accepting.into_iter().collect::<BTreeSet<_>>(),
                    rules,
                )
                .unwrap()
            })
    })
}

proptest! {
    #[test]
    fn var_render_parse_roundtrip(v in var_strategy()) {
        prop_assert_eq!(VarId::parse(&v.to_string()), v);
    }

    #[test]
    fn formula_render_parse_roundtrip(f in formula_strategy()) {
        let text = render_formula(&f);
        let parsed = parse_formula(&text).unwrap();
        prop_assert_eq!(parsed, f);
    }

    #[test]
    fn rational_text_roundtrip(n in -1000i64..1000, d in 1i64..1000) {
        let r = Rational::new(BigInt::from(n), BigInt::from(d));
        prop_assert_eq!(parse_rational(&rational_text(&r)), Some(r));
    }

    #[test]
    fn machine_render_parse_roundtrip(m in machine_strategy()) {
        let parsed = parse_machine(&render_machine(&m)).unwrap();
        prop_assert_eq!(parsed, m);
    }
}
