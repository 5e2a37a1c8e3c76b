//! Slot-compiled formula evaluation for hot enumeration loops.

use crate::formula::{Formula, VarId};
use std::collections::BTreeMap;

/// Fixed assignment of variables to slots in a flat bit vector.
#[derive(Clone, Debug)]
pub(crate) struct SlotMap {
    index: BTreeMap<VarId, usize>,
}

impl SlotMap {
    pub fn new(vars: impl IntoIterator<Item = VarId>) -> Self {
        let mut index = BTreeMap::new();
        for v in vars {
            let next = index.len();
            index.entry(v).or_insert(next);
        }
        SlotMap { index }
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn slot(&self, var: &VarId) -> Option<usize> {
        self.index.get(var).copied()
    }

    /// Slot/value patch for a pure-strategy assignment over `vars`.
    pub fn patch<'a>(
        &self,
        vars: impl IntoIterator<Item = &'a VarId>,
        truths: impl Fn(&VarId) -> bool,
    ) -> Vec<(usize, bool)> {
        vars.into_iter()
            .filter_map(|v| self.slot(v).map(|s| (s, truths(v))))
            .collect()
    }
}

/// Formula with variables replaced by slot indices.
#[derive(Clone, Debug)]
pub(crate) enum Compiled {
    Const(bool),
    Var(usize),
    Not(Box<Compiled>),
    And(Vec<Compiled>),
    Or(Vec<Compiled>),
    Implies(Box<Compiled>, Box<Compiled>),
    Iff(Box<Compiled>, Box<Compiled>),
    OneOf(Vec<Compiled>),
}

impl Compiled {
    /// Compile against a slot map; variables missing from the map become
    /// an error carried as the offending VarId.
    pub fn compile(f: &Formula, slots: &SlotMap) -> Result<Compiled, VarId> {
        Ok(match f {
            Formula::Const(b) => Compiled::Const(*b),
            Formula::Var(v) => Compiled::Var(slots.slot(v).ok_or_else(|| v.clone())?),
            Formula::Not(c) => Compiled::Not(Box::new(Self::compile(c, slots)?)),
            Formula::And(cs) => Compiled::And(
                cs.iter()
                    .map(|c| Self::compile(c, slots))
                    .collect::<Result<_, _>>()?,
            ),
            Formula::Or(cs) => Compiled::Or(
                cs.iter()
                    .map(|c| Self::compile(c, slots))
                    .collect::<Result<_, _>>()?,
            ),
            Formula::Implies(l, r) => Compiled::Implies(
                Box::new(Self::compile(l, slots)?),
                Box::new(Self::compile(r, slots)?),
            ),
            Formula::Iff(l, r) => Compiled::Iff(
                Box::new(Self::compile(l, slots)?),
                Box::new(Self::compile(r, slots)?),
            ),
            Formula::OneOf(cs) => Compiled::OneOf(
                cs.iter()
                    .map(|c| Self::compile(c, slots))
                    .collect::<Result<_, _>>()?,
            ),
        })
    }

    pub fn eval(&self, bits: &[bool]) -> bool {
        match self {
            Compiled::Const(b) => *b,
            Compiled::Var(s) => bits[*s],
            Compiled::Not(c) => !c.eval(bits),
            Compiled::And(cs) => cs.iter().all(|c| c.eval(bits)),
            Compiled::Or(cs) => cs.iter().any(|c| c.eval(bits)),
            Compiled::Implies(l, r) => !l.eval(bits) || r.eval(bits),
            Compiled::Iff(l, r) => l.eval(bits) == r.eval(bits),
            Compiled::OneOf(cs) => {
                let mut seen = false;
                for c in cs {
                    if c.eval(bits) {
                        if seen {
                            return false;
                        }
                        seen = true;
                    }
                }
                seen
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{evaluate, parse_formula};

    #[test]
    fn compiled_matches_interpreted() {
        let f = parse_formula("oneof(a, b & c, ~a) -> (b <-> c)").unwrap();
        let vars: Vec<VarId> = f.free_vars().into_iter().collect();
        let slots = SlotMap::new(vars.clone());
        let compiled = Compiled::compile(&f, &slots).unwrap();
        for bits_val in 0..(1u32 << vars.len()) {
            let mut bits = vec![false; slots.len()];
            let mut map = std::collections::BTreeMap::new();
            for (i, v) in vars.iter().enumerate() {
                let b = bits_val >> i & 1 == 1;
                bits[slots.slot(v).unwrap()] = b;
                map.insert(v.clone(), b);
            }
            assert_eq!(compiled.eval(&bits), evaluate(&f, &map).unwrap());
        }
    }
}
