//! Corpus files: an ACL2-style applicative Lisp subset.
//!
//! A corpus is a sequence of top-level forms:
//!
//! ```text
//! (defun name (params...) body)
//! (defthm name statement [:uses (lemma...)])
//! (declare-sort name (arg-sorts...) result-sort)
//! (declare-builtin name arity value)
//! ```
//!
//! Comments run from `;` to end of line. Identifiers are case-insensitive
//! and may contain hyphens. Literals are integers, `p/q` rationals and the
//! booleans `t`/`nil`.

use crate::term::{Literal, Symbol, Term};
use num::{BigInt, BigRational};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

/// Sorts used to prune candidate synthesis and drive test generation.
/// `nat <= int <= rational` form a chain; `bool`, `list` and the numeric
/// chain are pairwise disjoint; `any` is the top.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sort {
    Nat,
    Int,
    Rational,
    Bool,
    List,
    Any,
}

impl Sort {
    fn chain_level(self) -> Option<u8> {
        match self {
            Sort::Nat => Some(0),
            Sort::Int => Some(1),
            Sort::Rational => Some(2),
            _ => None,
        }
    }

    /// Greatest lower bound, `None` when the sorts are disjoint.
    pub fn meet(self, other: Sort) -> Option<Sort> {
        match (self, other) {
            (Sort::Any, s) | (s, Sort::Any) => Some(s),
            (a, b) if a == b => Some(a),
            (a, b) => match (a.chain_level(), b.chain_level()) {
                (Some(x), Some(y)) => Some(if x <= y { a } else { b }),
                _ => None,
            },
        }
    }

    /// Least upper bound within the sort lattice.
    pub fn join(self, other: Sort) -> Sort {
        match (self, other) {
            (Sort::Any, _) | (_, Sort::Any) => Sort::Any,
            (a, b) if a == b => a,
            (a, b) => match (a.chain_level(), b.chain_level()) {
                (Some(x), Some(y)) => {
                    if x >= y {
                        a
                    } else {
                        b
                    }
                }
                _ => Sort::Any,
            },
        }
    }

    /// Two sorts are compatible when they share a common refinement.
    pub fn compatible(self, other: Sort) -> bool {
        self.meet(other).is_some()
    }

    pub fn parse(s: &str) -> Option<Sort> {
        match s {
            "nat" => Some(Sort::Nat),
            "int" => Some(Sort::Int),
            "rational" => Some(Sort::Rational),
            "bool" => Some(Sort::Bool),
            "list" => Some(Sort::List),
            "any" => Some(Sort::Any),
            _ => None,
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Sort::Nat => "nat",
            Sort::Int => "int",
            Sort::Rational => "rational",
            Sort::Bool => "bool",
            Sort::List => "list",
            Sort::Any => "any",
        };
        f.write_str(s)
    }
}

/// Built-in function groups as used by the valuation formulas.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BuiltinGroup {
    Recognisers,
    Constructors,
    Accessors,
    NumberOps,
    Numbers,
    BooleanOps,
}

/// One entry of the fixed builtin table. `index` is the 1-based position
/// within the group; accessors additionally carry their pair index `sub`.
pub struct BuiltinFn {
    pub name: &'static str,
    pub arity: usize,
    pub args: &'static [Sort],
    pub result: Sort,
    pub group: BuiltinGroup,
    pub index: usize,
    pub sub: usize,
}

const R: Sort = Sort::Rational;
const A: Sort = Sort::Any;
const L: Sort = Sort::List;

/// Functions imported from the host Lisp, with their fixed signatures.
pub const BUILTIN_FNS: &[BuiltinFn] = &[
    // type recognisers
    BuiltinFn { name: "symbolp", arity: 1, args: &[A], result: Sort::Bool, group: BuiltinGroup::Recognisers, index: 1, sub: 0 },
    BuiltinFn { name: "characterp", arity: 1, args: &[A], result: Sort::Bool, group: BuiltinGroup::Recognisers, index: 2, sub: 0 },
    BuiltinFn { name: "stringp", arity: 1, args: &[A], result: Sort::Bool, group: BuiltinGroup::Recognisers, index: 3, sub: 0 },
    BuiltinFn { name: "consp", arity: 1, args: &[A], result: Sort::Bool, group: BuiltinGroup::Recognisers, index: 4, sub: 0 },
    BuiltinFn { name: "acl2-numberp", arity: 1, args: &[A], result: Sort::Bool, group: BuiltinGroup::Recognisers, index: 5, sub: 0 },
    BuiltinFn { name: "integerp", arity: 1, args: &[A], result: Sort::Bool, group: BuiltinGroup::Recognisers, index: 6, sub: 0 },
    BuiltinFn { name: "rationalp", arity: 1, args: &[A], result: Sort::Bool, group: BuiltinGroup::Recognisers, index: 7, sub: 0 },
    BuiltinFn { name: "complex-rationalp", arity: 1, args: &[A], result: Sort::Bool, group: BuiltinGroup::Recognisers, index: 8, sub: 0 },
    // constructors
    BuiltinFn { name: "cons", arity: 2, args: &[A, L], result: Sort::List, group: BuiltinGroup::Constructors, index: 1, sub: 0 },
    BuiltinFn { name: "complex", arity: 2, args: &[R, R], result: Sort::Rational, group: BuiltinGroup::Constructors, index: 2, sub: 0 },
    // accessors a^j_i
    BuiltinFn { name: "car", arity: 1, args: &[L], result: Sort::Any, group: BuiltinGroup::Accessors, index: 1, sub: 1 },
    BuiltinFn { name: "cdr", arity: 1, args: &[L], result: Sort::List, group: BuiltinGroup::Accessors, index: 2, sub: 1 },
    BuiltinFn { name: "denominator", arity: 1, args: &[R], result: Sort::Int, group: BuiltinGroup::Accessors, index: 1, sub: 2 },
    BuiltinFn { name: "numerator", arity: 1, args: &[R], result: Sort::Int, group: BuiltinGroup::Accessors, index: 2, sub: 2 },
    BuiltinFn { name: "realpart", arity: 1, args: &[R], result: Sort::Rational, group: BuiltinGroup::Accessors, index: 1, sub: 3 },
    BuiltinFn { name: "imagpart", arity: 1, args: &[R], result: Sort::Rational, group: BuiltinGroup::Accessors, index: 2, sub: 3 },
    // operations on numbers
    BuiltinFn { name: "unary-/", arity: 1, args: &[R], result: Sort::Rational, group: BuiltinGroup::NumberOps, index: 1, sub: 0 },
    BuiltinFn { name: "unary--", arity: 1, args: &[R], result: Sort::Rational, group: BuiltinGroup::NumberOps, index: 2, sub: 0 },
    BuiltinFn { name: "binary-+", arity: 2, args: &[R, R], result: Sort::Rational, group: BuiltinGroup::NumberOps, index: 3, sub: 0 },
    BuiltinFn { name: "binary-*", arity: 2, args: &[R, R], result: Sort::Rational, group: BuiltinGroup::NumberOps, index: 4, sub: 0 },
    // surface spellings of the arithmetic macros
    BuiltinFn { name: "+", arity: 2, args: &[R, R], result: Sort::Rational, group: BuiltinGroup::NumberOps, index: 3, sub: 0 },
    BuiltinFn { name: "*", arity: 2, args: &[R, R], result: Sort::Rational, group: BuiltinGroup::NumberOps, index: 4, sub: 0 },
    BuiltinFn { name: "-", arity: 2, args: &[R, R], result: Sort::Rational, group: BuiltinGroup::NumberOps, index: 2, sub: 0 },
    BuiltinFn { name: "/", arity: 2, args: &[R, R], result: Sort::Rational, group: BuiltinGroup::NumberOps, index: 1, sub: 0 },
    // boolean operations
    BuiltinFn { name: "equal", arity: 2, args: &[A, A], result: Sort::Bool, group: BuiltinGroup::BooleanOps, index: 1, sub: 0 },
    BuiltinFn { name: "if", arity: 3, args: &[A, A, A], result: Sort::Any, group: BuiltinGroup::BooleanOps, index: 2, sub: 0 },
    BuiltinFn { name: "<", arity: 2, args: &[R, R], result: Sort::Bool, group: BuiltinGroup::BooleanOps, index: 3, sub: 0 },
];

/// Logical glue evaluated natively by the interpreter. These are not part
/// of the formula table; their feature values are declared by the prelude.
pub const LOGIC_FNS: &[(&str, usize)] = &[("implies", 2), ("and", 2), ("or", 2), ("not", 1)];

pub fn builtin_fn(name: &str) -> Option<&'static BuiltinFn> {
    BUILTIN_FNS.iter().find(|b| b.name == name)
}

pub fn is_logic_fn(name: &str) -> bool {
    LOGIC_FNS.iter().any(|(n, _)| *n == name)
}

/// Termination measure class of a recursive definition.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum MeasureScheme {
    /// Some argument is numerically decremented on every recursive call.
    NatValue,
    /// Some argument is structurally destructed (`cdr`) on every call.
    ListLen,
    Unknown,
}

#[derive(Clone, Debug)]
pub struct Definition {
    pub name: Symbol,
    pub params: Vec<Symbol>,
    pub body: Term,
    pub recursive: bool,
    pub measure: Option<MeasureScheme>,
    /// Ordinal position among all corpus items.
    pub index: usize,
}

#[derive(Clone, Debug)]
pub struct Theorem {
    pub name: Symbol,
    pub hypotheses: Vec<Term>,
    pub conclusion: Term,
    /// Names of user lemmas consumed by this theorem's proof.
    pub uses: Vec<Symbol>,
    pub index: usize,
}

impl Theorem {
    /// Reconstructs the full statement: hypotheses folded under a nested
    /// binary `and` beneath `implies`, or the bare conclusion when there
    /// are no hypotheses.
    pub fn statement(&self) -> Term {
        match self.hypotheses.len() {
            0 => self.conclusion.clone(),
            _ => {
                let mut it = self.hypotheses.iter().rev();
                let mut hyp = it.next().unwrap().clone();
                for h in it {
                    hyp = Term::app("and", vec![h.clone(), hyp]);
                }
                Term::app("implies", vec![hyp, self.conclusion.clone()])
            }
        }
    }
}

#[derive(Clone, Debug)]
pub enum Item {
    Def(Definition),
    Thm(Theorem),
}

impl Item {
    pub fn name(&self) -> &Symbol {
        match self {
            Item::Def(d) => &d.name,
            Item::Thm(t) => &t.name,
        }
    }
}

/// Sorts for function arguments and results. Builtins have fixed entries,
/// `declare-sort` overrides inference, and unknown positions are `any`.
#[derive(Clone, Debug, Default)]
pub struct SortTable {
    args: BTreeMap<(Symbol, usize), Sort>,
    results: BTreeMap<Symbol, Sort>,
}

impl SortTable {
    pub fn arg_sort(&self, name: &Symbol, pos: usize) -> Sort {
        if let Some(s) = self.args.get(&(name.clone(), pos)) {
            return *s;
        }
        if let Some(b) = builtin_fn(name.as_str()) {
            return b.args.get(pos).copied().unwrap_or(Sort::Any);
        }
        Sort::Any
    }

    pub fn result_sort(&self, name: &Symbol) -> Sort {
        if let Some(s) = self.results.get(name) {
            return *s;
        }
        if let Some(b) = builtin_fn(name.as_str()) {
            return b.result;
        }
        Sort::Any
    }

    pub fn set_arg(&mut self, name: Symbol, pos: usize, sort: Sort) {
        self.args.insert((name, pos), sort);
    }

    pub fn set_result(&mut self, name: Symbol, sort: Sort) {
        self.results.insert(name, sort);
    }
}

/// Sort implied by a recognizer hypothesis on a variable.
pub fn recognizer_sort(name: &str) -> Option<Sort> {
    match name {
        "natp" => Some(Sort::Nat),
        "integerp" => Some(Sort::Int),
        "rationalp" | "acl2-numberp" => Some(Sort::Rational),
        "true-listp" | "nat-listp" | "consp" => Some(Sort::List),
        _ => None,
    }
}

/// Recognizer applied in generated hypotheses for a variable of the sort.
pub fn sort_recognizer(sort: Sort) -> Option<&'static str> {
    match sort {
        Sort::Nat => Some("natp"),
        Sort::Int => Some("integerp"),
        Sort::Rational => Some("rationalp"),
        Sort::List => Some("true-listp"),
        Sort::Bool | Sort::Any => None,
    }
}

#[derive(Clone, Debug)]
pub struct Corpus {
    pub items: Vec<Item>,
    pub sorts: SortTable,
    /// User-declared fixed-value symbols: name -> (arity, feature value).
    pub extra_builtins: BTreeMap<Symbol, (usize, BigRational)>,
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("undefined symbol `{name}` at {site}")]
    UndefinedSymbol { name: String, site: String },
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("arity mismatch: `{name}` expects {expected} arguments, got {got}")]
    ArityMismatch { name: String, expected: usize, got: usize },
    #[error("invalid form: {0}")]
    InvalidForm(String),
}

// ---------------------------------------------------------------------------
// Lexing and reading
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum SExpr {
    Atom(String, (usize, usize)),
    List(Vec<SExpr>, (usize, usize)),
}

impl SExpr {
    fn pos(&self) -> (usize, usize) {
        match self {
            SExpr::Atom(_, p) | SExpr::List(_, p) => *p,
        }
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

#[derive(Debug)]
enum Token {
    LParen(usize, usize),
    RParen(usize, usize),
    Atom(String, usize, usize),
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn next_token(&mut self) -> Option<Token> {
        loop {
            let &c = self.chars.peek()?;
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
        let (line, col) = (self.line, self.col);
        let c = *self.chars.peek()?;
        if c == '(' {
            self.bump();
            return Some(Token::LParen(line, col));
        }
        if c == ')' {
            self.bump();
            return Some(Token::RParen(line, col));
        }
        let mut atom = String::new();
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                break;
            }
            atom.push(c);
            self.bump();
        }
        Some(Token::Atom(atom, line, col))
    }
}

fn read_all(text: &str) -> Result<Vec<SExpr>, ParseError> {
    let mut lexer = Lexer::new(text);
    let mut stack: Vec<(Vec<SExpr>, (usize, usize))> = Vec::new();
    let mut top = Vec::new();
    while let Some(tok) = lexer.next_token() {
        match tok {
            Token::LParen(l, c) => stack.push((Vec::new(), (l, c))),
            Token::RParen(l, c) => {
                let (items, pos) = stack.pop().ok_or(ParseError::Syntax {
                    line: l,
                    col: c,
                    msg: "unexpected `)`".into(),
                })?;
                let list = SExpr::List(items, pos);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(list),
                    None => top.push(list),
                }
            }
            Token::Atom(a, l, c) => {
                let atom = SExpr::Atom(a, (l, c));
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(atom),
                    None => top.push(atom),
                }
            }
        }
    }
    if let Some((_, (l, c))) = stack.pop() {
        return Err(ParseError::Syntax {
            line: l,
            col: c,
            msg: "unclosed `(`".into(),
        });
    }
    Ok(top)
}

fn classify_atom(atom: &str) -> Option<Literal> {
    match atom.to_ascii_lowercase().as_str() {
        "t" => return Some(Literal::Bool(true)),
        "nil" => return Some(Literal::Bool(false)),
        _ => {}
    }
    let body = atom.strip_prefix('-').unwrap_or(atom);
    if body.is_empty() || !body.chars().next().unwrap().is_ascii_digit() {
        return None;
    }
    let negative = atom.starts_with('-');
    if let Some((p, q)) = body.split_once('/') {
        let num: BigInt = p.parse().ok()?;
        let den: BigInt = q.parse().ok()?;
        let num = if negative { -num } else { num };
        return Literal::rational(num, den);
    }
    let n: BigInt = body.parse().ok()?;
    Some(Literal::Int(if negative { -n } else { n }))
}

fn is_valid_symbol(atom: &str) -> bool {
    !atom.is_empty()
        && atom
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "-+*/<>=_?".contains(c))
        && classify_atom(atom).is_none()
}

// ---------------------------------------------------------------------------
// Corpus assembly
// ---------------------------------------------------------------------------

struct Builder {
    items: Vec<Item>,
    sorts: SortTable,
    extra_builtins: BTreeMap<Symbol, (usize, BigRational)>,
    names: BTreeSet<Symbol>,
}

impl Builder {
    fn arity_of(&self, name: &Symbol) -> Option<usize> {
        if let Some(b) = builtin_fn(name.as_str()) {
            return Some(b.arity);
        }
        if let Some((_, arity)) = LOGIC_FNS.iter().find(|(n, _)| *n == name.as_str()) {
            return Some(*arity);
        }
        if let Some((arity, _)) = self.extra_builtins.get(name) {
            return Some(*arity);
        }
        self.items.iter().find_map(|item| match item {
            Item::Def(d) if &d.name == name => Some(d.params.len()),
            _ => None,
        })
    }

    fn parse_term(&self, sexpr: &SExpr, bound: &BTreeSet<Symbol>) -> Result<Term, ParseError> {
        match sexpr {
            SExpr::Atom(a, pos) => {
                if let Some(lit) = classify_atom(a) {
                    return Ok(Term::Constant(lit));
                }
                if !is_valid_symbol(a) {
                    return Err(ParseError::Syntax {
                        line: pos.0,
                        col: pos.1,
                        msg: format!("invalid token `{}`", a),
                    });
                }
                let sym = Symbol::new(a);
                if bound.contains(&sym) {
                    Ok(Term::Variable(sym))
                } else {
                    Err(ParseError::UndefinedSymbol {
                        name: sym.to_string(),
                        site: format!("{}:{}", pos.0, pos.1),
                    })
                }
            }
            SExpr::List(items, pos) => {
                let (head, rest) = items.split_first().ok_or(ParseError::Syntax {
                    line: pos.0,
                    col: pos.1,
                    msg: "empty application".into(),
                })?;
                let SExpr::Atom(fname, fpos) = head else {
                    return Err(ParseError::Syntax {
                        line: pos.0,
                        col: pos.1,
                        msg: "application head must be a symbol".into(),
                    });
                };
                if !is_valid_symbol(fname) {
                    return Err(ParseError::Syntax {
                        line: fpos.0,
                        col: fpos.1,
                        msg: format!("invalid function name `{}`", fname),
                    });
                }
                let sym = Symbol::new(fname);
                let expected = self.arity_of(&sym).ok_or(ParseError::UndefinedSymbol {
                    name: sym.to_string(),
                    site: format!("{}:{}", fpos.0, fpos.1),
                })?;
                if rest.len() != expected {
                    return Err(ParseError::ArityMismatch {
                        name: sym.to_string(),
                        expected,
                        got: rest.len(),
                    });
                }
                let args = rest
                    .iter()
                    .map(|a| self.parse_term(a, bound))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Term::Application(sym, args))
            }
        }
    }

    fn check_fresh(&mut self, name: &Symbol) -> Result<(), ParseError> {
        if !self.names.insert(name.clone()) {
            return Err(ParseError::DuplicateName(name.to_string()));
        }
        Ok(())
    }
}

fn expect_atom(sexpr: &SExpr, what: &str) -> Result<(String, (usize, usize)), ParseError> {
    match sexpr {
        SExpr::Atom(a, p) => Ok((a.clone(), *p)),
        SExpr::List(_, p) => Err(ParseError::Syntax {
            line: p.0,
            col: p.1,
            msg: format!("expected {}", what),
        }),
    }
}

/// Splits a defthm statement into hypotheses and conclusion. A top-level
/// `(implies hyp concl)` contributes hypotheses; a top-level `(and ...)`
/// inside the hypothesis position is flattened.
fn destructure_statement(stmt: &SExpr, b: &Builder, vars: &BTreeSet<Symbol>) -> Result<(Vec<Term>, Term), ParseError> {
    if let SExpr::List(items, _) = stmt {
        if let Some(SExpr::Atom(head, _)) = items.first() {
            if head.eq_ignore_ascii_case("implies") && items.len() == 3 {
                let hyps = flatten_and(&items[1], b, vars)?;
                let concl = b.parse_term(&items[2], vars)?;
                return Ok((hyps, concl));
            }
        }
    }
    Ok((Vec::new(), b.parse_term(stmt, vars)?))
}

fn flatten_and(sexpr: &SExpr, b: &Builder, vars: &BTreeSet<Symbol>) -> Result<Vec<Term>, ParseError> {
    if let SExpr::List(items, _) = sexpr {
        if let Some(SExpr::Atom(head, _)) = items.first() {
            if head.eq_ignore_ascii_case("and") {
                let mut out = Vec::new();
                for item in &items[1..] {
                    out.extend(flatten_and(item, b, vars)?);
                }
                return Ok(out);
            }
        }
    }
    Ok(vec![b.parse_term(sexpr, vars)?])
}

/// Collects the variables of a statement s-expression: atoms that are not
/// literals and not known function names.
fn collect_vars(sexpr: &SExpr, b: &Builder, acc: &mut BTreeSet<Symbol>) {
    match sexpr {
        SExpr::Atom(a, _) => {
            if classify_atom(a).is_none() && is_valid_symbol(a) {
                let sym = Symbol::new(a);
                if b.arity_of(&sym).is_none() {
                    acc.insert(sym);
                }
            }
        }
        SExpr::List(items, _) => {
            for (i, item) in items.iter().enumerate() {
                if i == 0 && matches!(item, SExpr::Atom(_, _)) {
                    continue;
                }
                collect_vars(item, b, acc);
            }
        }
    }
}

pub fn parse_corpus(text: &str) -> Result<Corpus, ParseError> {
    let forms = read_all(text)?;
    let mut b = Builder {
        items: Vec::new(),
        sorts: SortTable::default(),
        extra_builtins: BTreeMap::new(),
        names: BTreeSet::new(),
    };
    for form in &forms {
        let SExpr::List(items, pos) = form else {
            let (l, c) = form.pos();
            return Err(ParseError::Syntax {
                line: l,
                col: c,
                msg: "top-level form must be a list".into(),
            });
        };
        let Some(SExpr::Atom(head, _)) = items.first() else {
            return Err(ParseError::Syntax {
                line: pos.0,
                col: pos.1,
                msg: "top-level form must start with a keyword".into(),
            });
        };
        match head.to_ascii_lowercase().as_str() {
            "defun" => parse_defun(&mut b, items, *pos)?,
            "defthm" => parse_defthm(&mut b, items, *pos)?,
            "declare-sort" => parse_declare_sort(&mut b, items, *pos)?,
            "declare-builtin" => parse_declare_builtin(&mut b, items, *pos)?,
            other => {
                return Err(ParseError::InvalidForm(format!(
                    "unknown top-level form `{}` at {}:{}",
                    other, pos.0, pos.1
                )))
            }
        }
    }
    let mut corpus = Corpus {
        items: b.items,
        sorts: b.sorts,
        extra_builtins: b.extra_builtins,
    };
    corpus.sorts = infer_sorts(&corpus);
    Ok(corpus)
}

fn parse_defun(b: &mut Builder, items: &[SExpr], pos: (usize, usize)) -> Result<(), ParseError> {
    if items.len() != 4 {
        return Err(ParseError::Syntax {
            line: pos.0,
            col: pos.1,
            msg: "defun expects (defun name (params) body)".into(),
        });
    }
    let (name_str, npos) = expect_atom(&items[1], "definition name")?;
    if !is_valid_symbol(&name_str) {
        return Err(ParseError::Syntax {
            line: npos.0,
            col: npos.1,
            msg: format!("invalid definition name `{}`", name_str),
        });
    }
    let name = Symbol::new(&name_str);
    b.check_fresh(&name)?;
    let SExpr::List(param_exprs, ppos) = &items[2] else {
        let (l, c) = items[2].pos();
        return Err(ParseError::Syntax {
            line: l,
            col: c,
            msg: "expected parameter list".into(),
        });
    };
    let mut params = Vec::new();
    for p in param_exprs {
        let (pstr, _) = expect_atom(p, "parameter")?;
        if !is_valid_symbol(&pstr) {
            return Err(ParseError::Syntax {
                line: ppos.0,
                col: ppos.1,
                msg: format!("invalid parameter `{}`", pstr),
            });
        }
        let psym = Symbol::new(&pstr);
        if params.contains(&psym) {
            return Err(ParseError::DuplicateName(format!(
                "parameter `{}` of `{}`",
                psym, name
            )));
        }
        params.push(psym);
    }
    // Register the signature before parsing the body so recursion resolves.
    let index = b.items.len();
    b.items.push(Item::Def(Definition {
        name: name.clone(),
        params: params.clone(),
        body: Term::Constant(Literal::Bool(false)),
        recursive: false,
        measure: None,
        index,
    }));
    let bound: BTreeSet<Symbol> = params.iter().cloned().collect();
    let body = match b.parse_term(&items[3], &bound) {
        Ok(t) => t,
        Err(e) => {
            b.items.pop();
            b.names.remove(&name);
            return Err(e);
        }
    };
    let recursive = body.contains_symbol(&name);
    let mut def = Definition {
        name,
        params,
        body,
        recursive,
        measure: None,
        index,
    };
    if recursive {
        def.measure = Some(infer_measure(&def).expect("recursive definition"));
    }
    b.items[index] = Item::Def(def);
    Ok(())
}

fn parse_defthm(b: &mut Builder, items: &[SExpr], pos: (usize, usize)) -> Result<(), ParseError> {
    if items.len() != 3 && items.len() != 5 {
        return Err(ParseError::Syntax {
            line: pos.0,
            col: pos.1,
            msg: "defthm expects (defthm name statement [:uses (lemmas)])".into(),
        });
    }
    let (name_str, _) = expect_atom(&items[1], "theorem name")?;
    let name = Symbol::new(&name_str);
    b.check_fresh(&name)?;
    let mut uses = Vec::new();
    if items.len() == 5 {
        let (kw, kpos) = expect_atom(&items[3], ":uses keyword")?;
        if !kw.eq_ignore_ascii_case(":uses") {
            return Err(ParseError::Syntax {
                line: kpos.0,
                col: kpos.1,
                msg: format!("expected `:uses`, got `{}`", kw),
            });
        }
        let SExpr::List(lemmas, lpos) = &items[4] else {
            let (l, c) = items[4].pos();
            return Err(ParseError::Syntax {
                line: l,
                col: c,
                msg: "expected lemma name list after :uses".into(),
            });
        };
        for lemma in lemmas {
            let (lname, _) = expect_atom(lemma, "lemma name")?;
            let lsym = Symbol::new(&lname);
            let known = b.items.iter().any(
                |item| matches!(item, Item::Thm(t) if t.name == lsym),
            );
            if !known {
                return Err(ParseError::UndefinedSymbol {
                    name: lsym.to_string(),
                    site: format!("{}:{} (:uses of {})", lpos.0, lpos.1, name),
                });
            }
            uses.push(lsym);
        }
    }
    let mut vars = BTreeSet::new();
    collect_vars(&items[2], b, &mut vars);
    let (hypotheses, conclusion) = destructure_statement(&items[2], b, &vars)?;
    let index = b.items.len();
    b.items.push(Item::Thm(Theorem {
        name,
        hypotheses,
        conclusion,
        uses,
        index,
    }));
    Ok(())
}

fn parse_declare_sort(b: &mut Builder, items: &[SExpr], pos: (usize, usize)) -> Result<(), ParseError> {
    if items.len() != 4 {
        return Err(ParseError::Syntax {
            line: pos.0,
            col: pos.1,
            msg: "declare-sort expects (declare-sort name (arg-sorts) result)".into(),
        });
    }
    let (name_str, _) = expect_atom(&items[1], "sorted name")?;
    let name = Symbol::new(&name_str);
    let SExpr::List(arg_exprs, apos) = &items[2] else {
        let (l, c) = items[2].pos();
        return Err(ParseError::Syntax {
            line: l,
            col: c,
            msg: "expected argument sort list".into(),
        });
    };
    for (i, a) in arg_exprs.iter().enumerate() {
        let (s, _) = expect_atom(a, "sort")?;
        let sort = Sort::parse(&s.to_ascii_lowercase()).ok_or(ParseError::Syntax {
            line: apos.0,
            col: apos.1,
            msg: format!("unknown sort `{}`", s),
        })?;
        b.sorts.set_arg(name.clone(), i, sort);
    }
    let (rs, rpos) = expect_atom(&items[3], "result sort")?;
    let sort = Sort::parse(&rs.to_ascii_lowercase()).ok_or(ParseError::Syntax {
        line: rpos.0,
        col: rpos.1,
        msg: format!("unknown sort `{}`", rs),
    })?;
    b.sorts.set_result(name, sort);
    Ok(())
}

fn parse_declare_builtin(b: &mut Builder, items: &[SExpr], pos: (usize, usize)) -> Result<(), ParseError> {
    if items.len() != 4 {
        return Err(ParseError::Syntax {
            line: pos.0,
            col: pos.1,
            msg: "declare-builtin expects (declare-builtin name arity value)".into(),
        });
    }
    let (name_str, _) = expect_atom(&items[1], "builtin name")?;
    let name = Symbol::new(&name_str);
    let (arity_str, apos) = expect_atom(&items[2], "arity")?;
    let arity: usize = arity_str.parse().map_err(|_| ParseError::Syntax {
        line: apos.0,
        col: apos.1,
        msg: format!("invalid arity `{}`", arity_str),
    })?;
    let (value_str, vpos) = expect_atom(&items[3], "value")?;
    let value = match classify_atom(&value_str) {
        Some(Literal::Int(n)) => BigRational::from_integer(n),
        Some(Literal::Rat(r)) => r,
        _ => {
            return Err(ParseError::Syntax {
                line: vpos.0,
                col: vpos.1,
                msg: format!("invalid feature value `{}`", value_str),
            })
        }
    };
    if b.extra_builtins.insert(name.clone(), (arity, value)).is_some() {
        return Err(ParseError::DuplicateName(name.to_string()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Measures
// ---------------------------------------------------------------------------

/// Classifies the termination measure of a recursive definition.
pub fn infer_measure(def: &Definition) -> Result<MeasureScheme, UsageError> {
    if !def.recursive {
        return Err(UsageError::NotRecursive(def.name.to_string()));
    }
    let calls = collect_calls(&def.body, &def.name);
    for (pos, param) in def.params.iter().enumerate() {
        let nat = calls.iter().all(|args| is_decrement(&args[pos], param));
        if nat {
            return Ok(MeasureScheme::NatValue);
        }
    }
    for (pos, param) in def.params.iter().enumerate() {
        let list = calls.iter().all(|args| is_cdr_of(&args[pos], param));
        if list {
            return Ok(MeasureScheme::ListLen);
        }
    }
    Ok(MeasureScheme::Unknown)
}

#[derive(Error, Debug)]
pub enum UsageError {
    #[error("`{0}` is not recursive; no measure to infer")]
    NotRecursive(String),
}

fn collect_calls<'a>(body: &'a Term, name: &Symbol) -> Vec<&'a [Term]> {
    let mut out = Vec::new();
    for (node, _) in body.preorder() {
        if let Term::Application(f, args) = node {
            if f == name {
                out.push(args.as_slice());
            }
        }
    }
    out
}

/// Matches `(- x k)` with `k >= 1` an integer literal.
fn is_decrement(arg: &Term, param: &Symbol) -> bool {
    if let Term::Application(f, args) = arg {
        if f.as_str() == "-" && args.len() == 2 {
            if let (Term::Variable(v), Term::Constant(Literal::Int(k))) = (&args[0], &args[1]) {
                return v == param && *k >= BigInt::from(1);
            }
        }
    }
    false
}

fn is_cdr_of(arg: &Term, param: &Symbol) -> bool {
    if let Term::Application(f, args) = arg {
        if f.as_str() == "cdr" && args.len() == 1 {
            if let Term::Variable(v) = &args[0] {
                return v == param;
            }
        }
    }
    false
}

// ---------------------------------------------------------------------------
// Sort inference
// ---------------------------------------------------------------------------

/// One whole-corpus propagation pass iterated to a fixed point. Parameter
/// sorts are the meet of every comparable constraint discovered at use
/// sites; disjoint constraints resolve to `any`. Result sorts come from
/// the definition body.
pub fn infer_sorts(corpus: &Corpus) -> SortTable {
    let mut table = corpus.sorts.clone();
    let defs: Vec<&Definition> = corpus.definitions().collect();
    for _ in 0..10 {
        let mut changed = false;
        for def in &defs {
            if table.results.contains_key(&def.name) && declared_all_args(&table, def) {
                continue;
            }
            let mut param_sorts: Vec<Sort> = (0..def.params.len())
                .map(|i| table.arg_sort(&def.name, i))
                .collect();
            // constraints from the definition's own body
            for (node, _) in def.body.preorder() {
                if let Term::Application(f, args) = node {
                    for (i, a) in args.iter().enumerate() {
                        if let Term::Variable(v) = a {
                            if let Some(pi) = def.params.iter().position(|p| p == v) {
                                let want = table.arg_sort(f, i);
                                param_sorts[pi] = refine(param_sorts[pi], want);
                            }
                        }
                    }
                }
            }
            // constraints from call sites in other definitions
            for other in &defs {
                for (node, _) in other.body.preorder() {
                    if let Term::Application(f, args) = node {
                        if f == &def.name {
                            for (i, a) in args.iter().enumerate() {
                                let got = term_sort(a, other, &table);
                                param_sorts[i] = refine(param_sorts[i], got);
                            }
                        }
                    }
                }
            }
            for (i, s) in param_sorts.iter().enumerate() {
                if table.arg_sort(&def.name, i) != *s {
                    table.set_arg(def.name.clone(), i, *s);
                    changed = true;
                }
            }
            let result = term_sort(&def.body, def, &table);
            if table.result_sort(&def.name) != result && !table.results.contains_key(&def.name) {
                table.results.insert(def.name.clone(), result);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    table
}

fn declared_all_args(table: &SortTable, def: &Definition) -> bool {
    (0..def.params.len()).all(|i| table.args.contains_key(&(def.name.clone(), i)))
}

fn refine(current: Sort, constraint: Sort) -> Sort {
    match current.meet(constraint) {
        Some(s) => s,
        None => Sort::Any,
    }
}

fn term_sort(term: &Term, def: &Definition, table: &SortTable) -> Sort {
    match term {
        Term::Variable(v) => match def.params.iter().position(|p| p == v) {
            Some(i) => table.arg_sort(&def.name, i),
            None => Sort::Any,
        },
        Term::Constant(lit) => literal_sort(lit),
        Term::Application(f, args) => {
            if f.as_str() == "if" && args.len() == 3 {
                let a = term_sort(&args[1], def, table);
                let b = term_sort(&args[2], def, table);
                a.join(b)
            } else {
                table.result_sort(f)
            }
        }
    }
}

pub fn literal_sort(lit: &Literal) -> Sort {
    match lit {
        Literal::Int(n) => {
            if *n >= BigInt::from(0) {
                Sort::Nat
            } else {
                Sort::Int
            }
        }
        Literal::Rat(_) => Sort::Rational,
        Literal::Bool(true) => Sort::Bool,
        // nil doubles as the empty list
        Literal::Bool(false) => Sort::Any,
    }
}

// ---------------------------------------------------------------------------
// Corpus views
// ---------------------------------------------------------------------------

impl Corpus {
    pub fn parse(text: &str) -> Result<Corpus, ParseError> {
        parse_corpus(text)
    }

    /// Parses `text` with the standard prelude prepended.
    pub fn with_prelude(text: &str) -> Result<Corpus, ParseError> {
        let combined = format!("{}\n{}", crate::corpora::PRELUDE, text);
        parse_corpus(&combined)
    }

    pub fn definitions(&self) -> impl Iterator<Item = &Definition> {
        self.items.iter().filter_map(|i| match i {
            Item::Def(d) => Some(d),
            _ => None,
        })
    }

    pub fn theorems(&self) -> impl Iterator<Item = &Theorem> {
        self.items.iter().filter_map(|i| match i {
            Item::Thm(t) => Some(t),
            _ => None,
        })
    }

    pub fn definition(&self, name: &Symbol) -> Option<&Definition> {
        self.definitions().find(|d| &d.name == name)
    }

    pub fn theorem(&self, name: &Symbol) -> Option<&Theorem> {
        self.theorems().find(|t| &t.name == name)
    }

    pub fn arity(&self, name: &Symbol) -> Option<usize> {
        if let Some(b) = builtin_fn(name.as_str()) {
            return Some(b.arity);
        }
        if let Some((_, a)) = LOGIC_FNS.iter().find(|(n, _)| *n == name.as_str()) {
            return Some(*a);
        }
        if let Some((a, _)) = self.extra_builtins.get(name) {
            return Some(*a);
        }
        self.definition(name).map(|d| d.params.len())
    }

    pub fn is_defined_fn(&self, name: &Symbol) -> bool {
        self.definition(name).is_some()
    }

    /// Parses a single term against this corpus's signature; free atoms
    /// become variables.
    pub fn parse_term(&self, text: &str) -> Result<Term, ParseError> {
        let forms = read_all(text)?;
        if forms.len() != 1 {
            return Err(ParseError::InvalidForm(format!(
                "expected one term, got {}",
                forms.len()
            )));
        }
        let b = Builder {
            items: self.items.clone(),
            sorts: SortTable::default(),
            extra_builtins: self.extra_builtins.clone(),
            names: BTreeSet::new(),
        };
        let mut vars = BTreeSet::new();
        collect_vars(&forms[0], &b, &mut vars);
        b.parse_term(&forms[0], &vars)
    }

    /// Symbols reachable from a theorem statement through definition bodies.
    pub fn dependency_cone(&self, thm: &Theorem) -> BTreeSet<Symbol> {
        let mut seen = BTreeSet::new();
        let mut queue: Vec<Symbol> = thm.statement().function_symbols();
        while let Some(sym) = queue.pop() {
            if !seen.insert(sym.clone()) {
                continue;
            }
            if let Some(def) = self.definition(&sym) {
                for f in def.body.function_symbols() {
                    if !seen.contains(&f) {
                        queue.push(f);
                    }
                }
            }
        }
        seen
    }

    /// Constants appearing in a theorem's cone (statement plus reachable
    /// definition bodies).
    pub fn cone_constants(&self, thm: &Theorem) -> BTreeSet<Literal> {
        let mut out: BTreeSet<Literal> = thm.statement().constants().into_iter().collect();
        for sym in self.dependency_cone(thm) {
            if let Some(def) = self.definition(&sym) {
                out.extend(def.body.constants());
            }
        }
        out
    }

    /// True when the symbol is a fixed-value builtin, a declared builtin,
    /// or a prelude definition.
    pub fn is_background(&self, name: &Symbol) -> bool {
        builtin_fn(name.as_str()).is_some()
            || is_logic_fn(name.as_str())
            || self.extra_builtins.contains_key(name)
            || crate::corpora::PRELUDE_FNS.contains(&name.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fact_definition() {
        let c = parse_corpus("(defun fact (n) (if (zp n) 1 (* n (fact (- n 1)))))");
        // zp is not defined without the prelude
        assert!(matches!(c, Err(ParseError::UndefinedSymbol { .. })));
        let c = Corpus::with_prelude("(defun fact (n) (if (zp n) 1 (* n (fact (- n 1)))))")
            .expect("parse");
        let fact = c.definition(&Symbol::new("fact")).expect("fact");
        assert!(fact.recursive);
        assert_eq!(fact.measure, Some(MeasureScheme::NatValue));
    }

    #[test]
    fn empty_corpus_has_no_items() {
        let c = parse_corpus("").expect("parse");
        assert_eq!(c.items.len(), 0);
    }

    #[test]
    fn parses_theorem_with_uses() {
        let text = "
(defun fact (n) (if (zp n) 1 (* n (fact (- n 1)))))
(defun helper-fact (n a) (if (zp n) a (helper-fact (- n 1) (* a n))))
(defun fact-tail (n) (helper-fact n 1))
(defthm fact-fact-tail-helper
  (implies (and (natp n) (natp a)) (equal (helper-fact n a) (* a (fact n)))))
(defthm fact-fact-tail
  (implies (natp n) (equal (fact-tail n) (fact n)))
  :uses (fact-fact-tail-helper))";
        let c = Corpus::with_prelude(text).expect("parse");
        let thm = c.theorem(&Symbol::new("fact-fact-tail")).expect("thm");
        assert_eq!(thm.hypotheses.len(), 1);
        assert_eq!(thm.hypotheses[0].to_string(), "(natp n)");
        assert_eq!(thm.uses, vec![Symbol::new("fact-fact-tail-helper")]);
        let helper = c.theorem(&Symbol::new("fact-fact-tail-helper")).unwrap();
        assert_eq!(helper.hypotheses.len(), 2);
    }

    #[test]
    fn parse_term_variants() {
        let c = Corpus::with_prelude(
            "(defun fact (n) (if (zp n) 1 (* n (fact (- n 1)))))
             (defun fact-tail (n) (fact n))",
        )
        .unwrap();
        let t = c.parse_term("(equal (fact-tail n) (fact n))").unwrap();
        assert_eq!(t.to_string(), "(equal (fact-tail n) (fact n))");
        assert_eq!(c.parse_term("n").unwrap(), Term::var("n"));
        assert_eq!(c.parse_term("3").unwrap(), Term::int(3));
    }

    #[test]
    fn rejects_use_before_definition() {
        let err = Corpus::with_prelude("(defun f (n) (g n))").unwrap_err();
        assert!(matches!(err, ParseError::UndefinedSymbol { .. }));
    }

    #[test]
    fn rejects_duplicate_names() {
        let err = Corpus::with_prelude("(defun f (n) n) (defun f (m) m)").unwrap_err();
        assert!(matches!(err, ParseError::DuplicateName(_)));
    }

    #[test]
    fn rejects_arity_mismatch() {
        let err = Corpus::with_prelude("(defun f (n) n) (defun g (n) (f n n))").unwrap_err();
        assert!(matches!(err, ParseError::ArityMismatch { .. }));
    }

    #[test]
    fn measure_of_cdr_recursion_is_listlen() {
        let c = Corpus::with_prelude("").unwrap();
        let rev = c.definition(&Symbol::new("rev")).expect("rev");
        assert_eq!(rev.measure, Some(MeasureScheme::ListLen));
    }

    #[test]
    fn measure_requires_recursion() {
        let c = Corpus::with_prelude("(defun twice (n) (+ n n))").unwrap();
        let d = c.definition(&Symbol::new("twice")).unwrap();
        assert!(!d.recursive);
        assert!(infer_measure(d).is_err());
    }

    #[test]
    fn hypothesis_recognizers_drive_variable_sorts() {
        assert_eq!(recognizer_sort("natp"), Some(Sort::Nat));
        assert_eq!(recognizer_sort("true-listp"), Some(Sort::List));
        assert_eq!(recognizer_sort("frobp"), None);
    }

    #[test]
    fn inferred_sorts_for_helpers_are_nat() {
        let c = Corpus::with_prelude(crate::corpora::MINI_CORPUS).unwrap();
        let hf = Symbol::new("helper-fib");
        assert_eq!(c.sorts.arg_sort(&hf, 0), Sort::Nat);
        assert_eq!(c.sorts.arg_sort(&hf, 1), Sort::Nat);
        assert_eq!(c.sorts.arg_sort(&hf, 2), Sort::Nat);
        let ha = Symbol::new("helper-fact");
        assert_eq!(c.sorts.arg_sort(&ha, 1), Sort::Nat);
    }

    #[test]
    fn statement_roundtrip_shape() {
        let c = Corpus::with_prelude(crate::corpora::MINI_CORPUS).unwrap();
        let t = c.theorem(&Symbol::new("fact-fact-tail")).unwrap();
        assert_eq!(
            t.statement().to_string(),
            "(implies (natp n) (equal (fact-tail n) (fact n)))"
        );
    }
}
