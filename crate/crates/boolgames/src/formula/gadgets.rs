//! Formula gadgets: OneOf expansion, the binary-successor block formula,
//! and pairwise equality blocks.

use super::{Formula, VarId};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GadgetError {
    #[error("variable list length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty variable list")]
    Empty,
}

/// Rewrite away every `oneof` node.
///
/// `oneof(f1..fn)` becomes the disjunction over i of
/// `fi & ~f1 & .. & ~f{i-1} & ~f{i+1} & .. & ~fn`; the result is equivalent
/// on every valuation. The expansion of a single `oneof` over n children is
/// O(n * sum of child sizes). Degenerate arities: `oneof()` becomes `false`
/// and `oneof(f)` becomes `f`.
pub fn expand_oneof(f: &Formula) -> Formula {
    match f {
        Formula::Const(_) | Formula::Var(_) => f.clone(),
        Formula::Not(c) => Formula::not(expand_oneof(c)),
        Formula::And(cs) => Formula::And(cs.iter().map(expand_oneof).collect()),
        Formula::Or(cs) => Formula::Or(cs.iter().map(expand_oneof).collect()),
        Formula::Implies(l, r) => Formula::implies(expand_oneof(l), expand_oneof(r)),
        Formula::Iff(l, r) => Formula::iff(expand_oneof(l), expand_oneof(r)),
        Formula::OneOf(cs) => {
            let expanded: Vec<Formula> = cs.iter().map(expand_oneof).collect();
            match expanded.len() {
                0 => Formula::Const(false),
                1 => expanded.into_iter().next().unwrap(),
                n => {
                    let mut disjuncts = Vec::with_capacity(n);
                    for i in 0..n {
                        let mut conj = Vec::with_capacity(n);
                        conj.push(expanded[i].clone());
                        for (j, other) in expanded.iter().enumerate() {
                            if j != i {
                                conj.push(Formula::not(other.clone()));
                            }
                        }
                        disjuncts.push(Formula::And(conj));
                    }
                    Formula::Or(disjuncts)
                }
            }
        }
    }
}

/// Successor formula over two n-bit registers, least significant bit first.
///
/// True on a valuation iff `int(qs) = int(ps) + 1`, with the convention that
/// `2^n - 1` has no successor. The construction cases on the length of the
/// rightmost consecutive block of 1s in `ps`. Node count is at most
/// `3n^2 + 7n + 4` (measured; asserted in tests).
///
/// Callers holding most-significant-bit-first lists (the Time/Tape variable
/// families) reverse them before calling.
pub fn succ_formula(ps: &[VarId], qs: &[VarId]) -> Result<Formula, GadgetError> {
    if ps.is_empty() {
        return Err(GadgetError::Empty);
    }
    if ps.len() != qs.len() {
        return Err(GadgetError::LengthMismatch {
            left: ps.len(),
            right: qs.len(),
        });
    }
    let n = ps.len();
    let var = |v: &VarId| Formula::var(v.clone());

    let not_all_ones = Formula::not(Formula::and(ps.iter().map(var).collect()));

    // Clause j: the trailing block of 1s has length j, i.e. p_0..p_{j-1}
    // are 1 and p_j is 0; incrementing clears the block, sets bit j and
    // leaves higher bits untouched.
    let mut clauses = Vec::with_capacity(n);
    for j in 0..n {
        let mut ante = Vec::with_capacity(j + 1);
        ante.extend(ps[..j].iter().map(var));
        ante.push(Formula::not(var(&ps[j])));
        let mut cons = Vec::with_capacity(n);
        cons.extend(qs[..j].iter().map(|q| Formula::not(var(q))));
        cons.push(var(&qs[j]));
        for i in j + 1..n {
            cons.push(Formula::iff(var(&ps[i]), var(&qs[i])));
        }
        clauses.push(Formula::implies(Formula::and(ante), Formula::and(cons)));
    }
    Ok(Formula::and(vec![not_all_ones, Formula::and(clauses)]))
}

/// Conjunction of pairwise biconditionals; empty lists give `true`.
pub fn eq_block(ps: &[VarId], qs: &[VarId]) -> Result<Formula, GadgetError> {
    if ps.len() != qs.len() {
        return Err(GadgetError::LengthMismatch {
            left: ps.len(),
            right: qs.len(),
        });
    }
    Ok(Formula::and(
        ps.iter()
            .zip(qs)
            .map(|(p, q)| Formula::iff(Formula::var(p.clone()), Formula::var(q.clone())))
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::evaluate;
    use std::collections::BTreeMap;

    fn vars(prefix: &str, n: usize) -> Vec<VarId> {
        (0..n).map(|i| VarId::named(format!("{prefix}{i}"))).collect()
    }

    /// Assign an integer to an LSB-first register.
    fn assign(val: &mut BTreeMap<VarId, bool>, regs: &[VarId], mut x: u64) {
        for r in regs {
            val.insert(r.clone(), x & 1 == 1);
            x >>= 1;
        }
    }

    #[test]
    fn succ_matches_integer_oracle() {
        for n in 1..=6usize {
            let ps = vars("a", n);
            let qs = vars("b", n);
            let f = succ_formula(&ps, &qs).unwrap();
            for p in 0..(1u64 << n) {
                for q in 0..(1u64 << n) {
                    let mut val = BTreeMap::new();
                    assign(&mut val, &ps, p);
                    assign(&mut val, &qs, q);
                    let expected = p != (1 << n) - 1 && q == p + 1;
                    assert_eq!(
                        evaluate(&f, &val).unwrap(),
                        expected,
                        "n={n} p={p} q={q}"
                    );
                }
            }
        }
    }

    #[test]
    fn succ_spec_examples() {
        let ps = vars("a", 2);
        let qs = vars("b", 2);
        let f = succ_formula(&ps, &qs).unwrap();
        let mut val = BTreeMap::new();
        // ps encode 1, qs encode 2: true.
        assign(&mut val, &ps, 1);
        assign(&mut val, &qs, 2);
        assert!(evaluate(&f, &val).unwrap());
        // ps encode 3 = 2^n - 1: false for every qs.
        for q in 0..4 {
            assign(&mut val, &ps, 3);
            assign(&mut val, &qs, q);
            assert!(!evaluate(&f, &val).unwrap());
        }
        // ps encode 0, qs encode 0: false.
        assign(&mut val, &ps, 0);
        assign(&mut val, &qs, 0);
        assert!(!evaluate(&f, &val).unwrap());
    }

    #[test]
    fn succ_errors() {
        let ps = vars("a", 2);
        let qs = vars("b", 3);
        assert_eq!(
            succ_formula(&ps, &qs),
            Err(GadgetError::LengthMismatch { left: 2, right: 3 })
        );
        assert_eq!(succ_formula(&[], &[]), Err(GadgetError::Empty));
    }

    #[test]
    fn succ_size_bound() {
        // Quadratic bound with the constants documented on succ_formula.
        for n in [1usize, 2, 4, 8] {
            let f = succ_formula(&vars("a", n), &vars("b", n)).unwrap();
            assert!(
                f.size() <= 3 * n * n + 7 * n + 4,
                "n={n} size={}",
                f.size()
            );
        }
    }

    #[test]
    fn expand_oneof_examples() {
        let a = Formula::var(VarId::named("a"));
        let b = Formula::var(VarId::named("b"));
        let f = Formula::oneof(vec![a.clone(), b.clone()]);
        assert_eq!(
            expand_oneof(&f),
            Formula::Or(vec![
                Formula::And(vec![a.clone(), Formula::not(b.clone())]),
                Formula::And(vec![b.clone(), Formula::not(a.clone())]),
            ])
        );
        assert_eq!(expand_oneof(&Formula::oneof(vec![a.clone()])), a);
        assert_eq!(expand_oneof(&Formula::oneof(vec![])), Formula::fals());
    }

    #[test]
    fn expand_oneof_preserves_evaluation_exhaustively() {
        // All oneof shapes over up to 4 atoms, checked on every valuation.
        let names = ["a", "b", "c", "d"];
        for arity in 0..=4usize {
            let children: Vec<Formula> = names[..arity]
                .iter()
                .map(|n| Formula::var(VarId::named(*n)))
                .collect();
            let f = Formula::oneof(children);
            let g = expand_oneof(&f);
            for bits in 0..(1u32 << 4) {
                let val: BTreeMap<VarId, bool> = names
                    .iter()
                    .enumerate()
                    .map(|(i, n)| (VarId::named(*n), bits >> i & 1 == 1))
                    .collect();
                assert_eq!(evaluate(&f, &val), evaluate(&g, &val));
            }
        }
        // A nested case: oneof(a, a & b, oneof(b, c)).
        let f = Formula::oneof(vec![
            Formula::var(VarId::named("a")),
            Formula::and(vec![
                Formula::var(VarId::named("a")),
                Formula::var(VarId::named("b")),
            ]),
            Formula::oneof(vec![
                Formula::var(VarId::named("b")),
                Formula::var(VarId::named("c")),
            ]),
        ]);
        let g = expand_oneof(&f);
        for bits in 0..(1u32 << 3) {
            let val: BTreeMap<VarId, bool> = ["a", "b", "c"]
                .iter()
                .enumerate()
                .map(|(i, n)| (VarId::named(*n), bits >> i & 1 == 1))
                .collect();
            assert_eq!(evaluate(&f, &val), evaluate(&g, &val));
        }
    }

    #[test]
    fn expand_oneof_size_bound() {
        for n in 1..=16usize {
            let f = Formula::oneof(
                (0..n)
                    .map(|i| Formula::var(VarId::named(format!("x{i}"))))
                    .collect(),
            );
            let g = expand_oneof(&f);
            assert!(g.size() <= 2 * n * n + 2, "n={n} size={}", g.size());
        }
    }

    #[test]
    fn eq_block_examples() {
        let p = VarId::named("p");
        let q = VarId::named("q");
        assert_eq!(
            eq_block(&[p.clone()], &[q.clone()]).unwrap(),
            Formula::iff(Formula::var(p.clone()), Formula::var(q.clone()))
        );
        assert_eq!(eq_block(&[], &[]).unwrap(), Formula::tru());
        assert!(eq_block(&[p], &[]).is_err());

        let f = eq_block(
            &[VarId::named("a"), VarId::named("b")],
            &[VarId::named("c"), VarId::named("d")],
        )
        .unwrap();
        let val: BTreeMap<VarId, bool> = [("a", true), ("c", true), ("b", true), ("d", false)]
            .iter()
            .map(|(n, v)| (VarId::named(*n), *v))
            .collect();
        assert!(!evaluate(&f, &val).unwrap());
    }
}
