//! Propositional formula core: variable identifiers, the AST, evaluation,
//! rendering/parsing, and the OneOf / SUCC / equality-block gadgets.

mod gadgets;
mod parser;

pub use gadgets::{eq_block, expand_oneof, succ_formula, GadgetError};
pub use parser::{parse_formula, ParseError};

use std::collections::BTreeSet;
use std::fmt;

/// Prefix tag on a scoped variable name.
///
/// `s` reads as "successor", `p` as "predecessor" and `n` as "next
/// computation step"; `np`/`ns` combine the two.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Prefix {
    Plain,
    P,
    S,
    N,
    Np,
    Ns,
}

impl Prefix {
    pub fn as_str(self) -> &'static str {
        match self {
            Prefix::Plain => "",
            Prefix::P => "p",
            Prefix::S => "s",
            Prefix::N => "n",
            Prefix::Np => "np",
            Prefix::Ns => "ns",
        }
    }

    pub fn from_str(s: &str) -> Option<Prefix> {
        Some(match s {
            "" => Prefix::Plain,
            "p" => Prefix::P,
            "s" => Prefix::S,
            "n" => Prefix::N,
            "np" => Prefix::Np,
            "ns" => Prefix::Ns,
            _ => return None,
        })
    }
}

/// A propositional variable identifier.
///
/// Scoped variables render as `p<player>.<prefix><Role><index>`, e.g.
/// `p3.npTape2`; anything that does not match that shape is a bare name.
/// [`VarId::parse`] canonicalises, so render/parse round-trips exactly.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarId {
    Named(String),
    Scoped {
        player: u32,
        prefix: Prefix,
        role: String,
        index: u32,
    },
}

impl VarId {
    pub fn named(name: impl Into<String>) -> VarId {
        VarId::Named(name.into())
    }

    pub fn scoped(player: u32, prefix: Prefix, role: &str, index: u32) -> VarId {
        VarId::Scoped {
            player,
            prefix,
            role: role.to_string(),
            index,
        }
    }

    /// Player that the identifier is scoped to; 0 for bare names.
    pub fn player(&self) -> u32 {
        match self {
            VarId::Named(_) => 0,
            VarId::Scoped { player, .. } => *player,
        }
    }

    /// Classify a rendered token, preferring the scoped form.
    pub fn parse(token: &str) -> VarId {
        match Self::try_scoped(token) {
            Some(v) => v,
            None => VarId::Named(token.to_string()),
        }
    }

    fn try_scoped(token: &str) -> Option<VarId> {
        let rest = token.strip_prefix('p')?;
        let dot = rest.find('.')?;
        let player: u32 = rest[..dot].parse().ok()?;
        if rest[..dot].is_empty() {
            return None;
        }
        let tail = &rest[dot + 1..];
        let lower_end = tail
            .char_indices()
            .find(|(_, c)| !c.is_ascii_lowercase())
            .map(|(i, _)| i)
            .unwrap_or(tail.len());
        let prefix = Prefix::from_str(&tail[..lower_end])?;
        let tail = &tail[lower_end..];
        let mut chars = tail.char_indices();
        match chars.next() {
            Some((_, c)) if c.is_ascii_uppercase() => {}
            _ => return None,
        }
        let role_end = tail
            .char_indices()
            .find(|(_, c)| !c.is_ascii_alphabetic())
            .map(|(i, _)| i)
            .unwrap_or(tail.len());
        let role = &tail[..role_end];
        let digits = &tail[role_end..];
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let index: u32 = digits.parse().ok()?;
        Some(VarId::Scoped {
            player,
            prefix,
            role: role.to_string(),
            index,
        })
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarId::Named(name) => write!(f, "{name}"),
            VarId::Scoped {
                player,
                prefix,
                role,
                index,
            } => write!(f, "p{player}.{}{role}{index}", prefix.as_str()),
        }
    }
}

/// Propositional formula over [`VarId`]s.
///
/// Conjunction and disjunction are n-ary; `OneOf` is the generalised XOR
/// connective, true iff exactly one child is true (false when empty).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Const(bool),
    Var(VarId),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    OneOf(Vec<Formula>),
}

impl Formula {
    pub fn tru() -> Formula {
        Formula::Const(true)
    }

    pub fn fals() -> Formula {
        Formula::Const(false)
    }

    pub fn var(v: VarId) -> Formula {
        Formula::Var(v)
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    /// n-ary conjunction; empty is `true`, a singleton is the child itself.
    pub fn and(mut children: Vec<Formula>) -> Formula {
        match children.len() {
            0 => Formula::Const(true),
            1 => children.pop().unwrap(),
            _ => Formula::And(children),
        }
    }

    /// n-ary disjunction; empty is `false`, a singleton is the child itself.
    pub fn or(mut children: Vec<Formula>) -> Formula {
        match children.len() {
            0 => Formula::Const(false),
            1 => children.pop().unwrap(),
            _ => Formula::Or(children),
        }
    }

    pub fn implies(lhs: Formula, rhs: Formula) -> Formula {
        Formula::Implies(Box::new(lhs), Box::new(rhs))
    }

    pub fn iff(lhs: Formula, rhs: Formula) -> Formula {
        Formula::Iff(Box::new(lhs), Box::new(rhs))
    }

    /// The OneOf connective is kept as a node regardless of arity so that
    /// emitted gadgets stay structurally auditable.
    pub fn oneof(children: Vec<Formula>) -> Formula {
        Formula::OneOf(children)
    }

    /// Exact set of variables occurring in the formula.
    pub fn free_vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<VarId>) {
        match self {
            Formula::Const(_) => {}
            Formula::Var(v) => {
                out.insert(v.clone());
            }
            Formula::Not(c) => c.collect_vars(out),
            Formula::And(cs) | Formula::Or(cs) | Formula::OneOf(cs) => {
                for c in cs {
                    c.collect_vars(out);
                }
            }
            Formula::Implies(l, r) | Formula::Iff(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    /// Total AST node count.
    pub fn size(&self) -> usize {
        match self {
            Formula::Const(_) | Formula::Var(_) => 1,
            Formula::Not(c) => 1 + c.size(),
            Formula::And(cs) | Formula::Or(cs) | Formula::OneOf(cs) => {
                1 + cs.iter().map(Formula::size).sum::<usize>()
            }
            Formula::Implies(l, r) | Formula::Iff(l, r) => 1 + l.size() + r.size(),
        }
    }

    fn is_atom(&self) -> bool {
        matches!(
            self,
            Formula::Const(_) | Formula::Var(_) | Formula::OneOf(_)
        )
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_atom() {
            write!(f, "{self}")
        } else {
            write!(f, "({self})")
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Const(true) => write!(f, "true"),
            Formula::Const(false) => write!(f, "false"),
            Formula::Var(v) => write!(f, "{v}"),
            Formula::Not(c) => {
                write!(f, "~")?;
                c.fmt_child(f)
            }
            Formula::And(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " & ")?;
                    }
                    c.fmt_child(f)?;
                }
                Ok(())
            }
            Formula::Or(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " | ")?;
                    }
                    c.fmt_child(f)?;
                }
                Ok(())
            }
            Formula::Implies(l, r) => {
                l.fmt_child(f)?;
                write!(f, " -> ")?;
                r.fmt_child(f)
            }
            Formula::Iff(l, r) => {
                l.fmt_child(f)?;
                write!(f, " <-> ")?;
                r.fmt_child(f)
            }
            Formula::OneOf(cs) => {
                write!(f, "oneof(")?;
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Render a formula in the ASCII grammar accepted by [`parse_formula`].
pub fn render_formula(f: &Formula) -> String {
    f.to_string()
}

/// Source of truth values for evaluation.
pub trait VarLookup {
    fn lookup(&self, var: &VarId) -> Option<bool>;
}

impl VarLookup for std::collections::BTreeMap<VarId, bool> {
    fn lookup(&self, var: &VarId) -> Option<bool> {
        self.get(var).copied()
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("unbound variable {0}")]
pub struct UnboundVar(pub VarId);

/// Standard semantics; `oneof(..)` is true iff exactly one child is true,
/// and `oneof()` is false.
pub fn evaluate(f: &Formula, v: &impl VarLookup) -> Result<bool, UnboundVar> {
    Ok(match f {
        Formula::Const(b) => *b,
        Formula::Var(id) => v.lookup(id).ok_or_else(|| UnboundVar(id.clone()))?,
        Formula::Not(c) => !evaluate(c, v)?,
        Formula::And(cs) => {
            let mut all = true;
            for c in cs {
                all &= evaluate(c, v)?;
            }
            all
        }
        Formula::Or(cs) => {
            let mut any = false;
            for c in cs {
                any |= evaluate(c, v)?;
            }
            any
        }
        Formula::Implies(l, r) => !evaluate(l, v)? || evaluate(r, v)?,
        Formula::Iff(l, r) => evaluate(l, v)? == evaluate(r, v)?,
        Formula::OneOf(cs) => {
            let mut count = 0usize;
            for c in cs {
                if evaluate(c, v)? {
                    count += 1;
                }
            }
            count == 1
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn v(name: &str) -> Formula {
        Formula::var(VarId::named(name))
    }

    fn val(pairs: &[(&str, bool)]) -> BTreeMap<VarId, bool> {
        pairs
            .iter()
            .map(|(n, b)| (VarId::named(*n), *b))
            .collect()
    }

    #[test]
    fn varid_roundtrip() {
        for tok in ["p", "q", "p3.npTape2", "p1.Head0", "p2.sLeft0", "p1.State12"] {
            let id = VarId::parse(tok);
            assert_eq!(id.to_string(), tok);
            assert_eq!(VarId::parse(&id.to_string()), id);
        }
        assert_eq!(
            VarId::parse("p3.npTape2"),
            VarId::scoped(3, Prefix::Np, "Tape", 2)
        );
        // Not scoped: bad prefix, lowercase role, missing index.
        assert!(matches!(VarId::parse("p3.xTape2"), VarId::Named(_)));
        assert!(matches!(VarId::parse("p3.tape2"), VarId::Named(_)));
        assert!(matches!(VarId::parse("p3.Tape"), VarId::Named(_)));
    }

    #[test]
    fn evaluate_examples() {
        // ~(p <-> q) at {p=1, q=0} is true.
        let f = Formula::not(Formula::iff(v("p"), v("q")));
        assert_eq!(evaluate(&f, &val(&[("p", true), ("q", false)])), Ok(true));
        assert_eq!(evaluate(&f, &val(&[("p", true), ("q", true)])), Ok(false));

        // oneof(a,b) with both true is false.
        let g = Formula::oneof(vec![v("a"), v("b")]);
        assert_eq!(evaluate(&g, &val(&[("a", true), ("b", true)])), Ok(false));
        assert_eq!(evaluate(&g, &val(&[("a", true), ("b", false)])), Ok(true));

        // oneof() is false everywhere.
        let e = Formula::oneof(vec![]);
        assert_eq!(evaluate(&e, &val(&[])), Ok(false));

        // Unbound variable errors.
        assert_eq!(
            evaluate(&v("z"), &val(&[("p", true)])),
            Err(UnboundVar(VarId::named("z")))
        );
    }

    #[test]
    fn free_vars_examples() {
        let f = Formula::not(Formula::iff(v("p"), v("q")));
        let vars = f.free_vars();
        assert_eq!(vars.len(), 2);
        assert!(vars.contains(&VarId::named("p")));
        assert!(vars.contains(&VarId::named("q")));
        assert!(Formula::tru().free_vars().is_empty());
        let g = Formula::oneof(vec![v("a"), Formula::and(vec![v("a"), v("b")])]);
        assert_eq!(g.free_vars().len(), 2);
    }

    #[test]
    fn size_examples() {
        assert_eq!(v("p").size(), 1);
        assert_eq!(Formula::not(v("p")).size(), 2);
        assert_eq!(Formula::and(vec![v("a"), v("b"), v("c")]).size(), 4);
    }
}
