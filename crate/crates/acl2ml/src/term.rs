//! First-order terms over a case-insensitive symbol alphabet.
//!
//! A term is a variable, a constant literal, or a function application
//! whose immediate subtrees are the argument terms. Terms are the shared
//! currency of parsing, feature extraction, evaluation and mutation.

use num::{BigInt, BigRational};
use std::fmt;

/// Case-insensitive identifier, canonicalized to lower case at construction.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(String);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(name.to_ascii_lowercase())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "'{}", self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

/// Constant literals: integers, rationals in lowest terms, and the booleans
/// `t` / `nil`. A rational that reduces to an integer is stored as `Int`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Literal {
    Int(BigInt),
    Rat(BigRational),
    Bool(bool),
}

impl Literal {
    pub fn int(n: i64) -> Self {
        Literal::Int(BigInt::from(n))
    }

    /// Builds a rational literal, normalizing integer-valued fractions.
    pub fn rational(num: BigInt, den: BigInt) -> Option<Self> {
        if den == BigInt::from(0) {
            return None;
        }
        let r = BigRational::new(num, den);
        if r.is_integer() {
            Some(Literal::Int(r.to_integer()))
        } else {
            Some(Literal::Rat(r))
        }
    }

    pub fn is_number(&self) -> bool {
        matches!(self, Literal::Int(_) | Literal::Rat(_))
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(n) => write!(f, "{}", n),
            Literal::Rat(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Literal::Bool(true) => f.write_str("t"),
            Literal::Bool(false) => f.write_str("nil"),
        }
    }
}

/// An n-ary term tree.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Term {
    Variable(Symbol),
    Constant(Literal),
    Application(Symbol, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Variable(Symbol::new(name))
    }

    pub fn int(n: i64) -> Self {
        Term::Constant(Literal::int(n))
    }

    pub fn app(name: &str, args: Vec<Term>) -> Self {
        Term::Application(Symbol::new(name), args)
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Term::Variable(_) | Term::Constant(_) => 1,
            Term::Application(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    /// Preorder traversal paired with each node's depth (root depth 0).
    pub fn preorder(&self) -> Preorder<'_> {
        Preorder {
            stack: vec![(self, 0)],
        }
    }

    /// Distinct variables in left-to-right first-occurrence order.
    pub fn variables(&self) -> Vec<Symbol> {
        let mut seen = Vec::new();
        for (node, _) in self.preorder() {
            if let Term::Variable(v) = node {
                if !seen.contains(v) {
                    seen.push(v.clone());
                }
            }
        }
        seen
    }

    /// 1-based rank of `v` among the distinct variables of the term, in
    /// first-occurrence order. `None` when `v` does not occur.
    pub fn variable_rank(&self, v: &Symbol) -> Option<usize> {
        self.variables().iter().position(|x| x == v).map(|i| i + 1)
    }

    pub fn contains_symbol(&self, s: &Symbol) -> bool {
        self.preorder()
            .any(|(node, _)| matches!(node, Term::Application(f, _) if f == s))
    }

    /// All function symbols applied anywhere in the term.
    pub fn function_symbols(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        for (node, _) in self.preorder() {
            if let Term::Application(f, _) = node {
                if !out.contains(f) {
                    out.push(f.clone());
                }
            }
        }
        out
    }

    /// Constant literals occurring in the term.
    pub fn constants(&self) -> Vec<Literal> {
        let mut out = Vec::new();
        for (node, _) in self.preorder() {
            if let Term::Constant(lit) = node {
                if !out.contains(lit) {
                    out.push(lit.clone());
                }
            }
        }
        out
    }

    /// Depth of the node addressed by `path` (a sequence of child indexes),
    /// or `None` when the path does not address a node.
    pub fn depth_at(&self, path: &[usize]) -> Option<usize> {
        self.node_at(path).map(|_| path.len())
    }

    pub fn node_at(&self, path: &[usize]) -> Option<&Term> {
        let mut cur = self;
        for &i in path {
            match cur {
                Term::Application(_, args) => cur = args.get(i)?,
                _ => return None,
            }
        }
        Some(cur)
    }

    /// Depth of the first (preorder) application of symbol `s`.
    pub fn symbol_depth(&self, s: &Symbol) -> Option<usize> {
        self.preorder().find_map(|(node, d)| match node {
            Term::Application(f, _) if f == s => Some(d),
            _ => None,
        })
    }

    /// Renames variables according to `map`, leaving unmapped ones in place.
    pub fn rename_vars(&self, map: &std::collections::BTreeMap<Symbol, Symbol>) -> Term {
        match self {
            Term::Variable(v) => match map.get(v) {
                Some(w) => Term::Variable(w.clone()),
                None => self.clone(),
            },
            Term::Constant(_) => self.clone(),
            Term::Application(f, args) => Term::Application(
                f.clone(),
                args.iter().map(|a| a.rename_vars(map)).collect(),
            ),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Variable(v) => write!(f, "{}", v),
            Term::Constant(c) => write!(f, "{}", c),
            Term::Application(name, args) => {
                write!(f, "({}", name)?;
                for a in args {
                    write!(f, " {}", a)?;
                }
                f.write_str(")")
            }
        }
    }
}

pub struct Preorder<'a> {
    stack: Vec<(&'a Term, usize)>,
}

impl<'a> Iterator for Preorder<'a> {
    type Item = (&'a Term, usize);

    fn next(&mut self) -> Option<Self::Item> {
        let (term, depth) = self.stack.pop()?;
        if let Term::Application(_, args) = term {
            for a in args.iter().rev() {
                self.stack.push((a, depth + 1));
            }
        }
        Some((term, depth))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fact_tail_thm() -> Term {
        // (implies (natp n) (equal (fact-tail n) (fact n)))
        Term::app(
            "implies",
            vec![
                Term::app("natp", vec![Term::var("n")]),
                Term::app(
                    "equal",
                    vec![
                        Term::app("fact-tail", vec![Term::var("n")]),
                        Term::app("fact", vec![Term::var("n")]),
                    ],
                ),
            ],
        )
    }

    #[test]
    fn root_depth_is_zero() {
        let t = fact_tail_thm();
        assert_eq!(t.depth_at(&[]), Some(0));
    }

    #[test]
    fn node_depths_match_tree_shape() {
        let t = fact_tail_thm();
        assert_eq!(t.symbol_depth(&Symbol::new("natp")), Some(1));
        assert_eq!(t.symbol_depth(&Symbol::new("fact-tail")), Some(2));
        // leaf n under fact-tail
        assert_eq!(t.depth_at(&[1, 0, 0]), Some(3));
    }

    #[test]
    fn variable_rank_orders_by_first_occurrence() {
        let t = Term::app(
            "helper-fib",
            vec![Term::var("n"), Term::var("j"), Term::var("k")],
        );
        assert_eq!(t.variable_rank(&Symbol::new("n")), Some(1));
        assert_eq!(t.variable_rank(&Symbol::new("j")), Some(2));
        assert_eq!(t.variable_rank(&Symbol::new("k")), Some(3));
    }

    #[test]
    fn size_counts_nodes() {
        assert_eq!(fact_tail_thm().size(), 8);
    }

    #[test]
    fn display_is_sexpr() {
        let t = fact_tail_thm();
        assert_eq!(
            t.to_string(),
            "(implies (natp n) (equal (fact-tail n) (fact n)))"
        );
    }
}
