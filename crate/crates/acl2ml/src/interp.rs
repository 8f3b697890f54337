//! Ground-term evaluation and counterexample checking.
//!
//! Evaluation is call-by-value with exact rational arithmetic and a fuel
//! bound. `if`, `and`, `or`, `implies` and `not` are lazy in the usual
//! Lisp sense. Each application of a corpus-defined function consumes one
//! unit of fuel; builtins are free. Results of ground applications are
//! memoized within an `Evaluator`, so repeated tests of the same function
//! stay cheap.

use crate::corpus::{Corpus, Sort};
use crate::term::{Literal, Symbol, Term};
use num::{BigInt, BigRational, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

/// Runtime values. Rationals are kept in lowest terms and integer-valued
/// rationals normalize to `Int`; the empty list normalizes to `nil`
/// (`Bool(false)`), which doubles as the false value.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Value {
    Int(BigInt),
    Rat(BigRational),
    Bool(bool),
    List(Vec<Value>),
}

impl Value {
    pub fn int(n: i64) -> Value {
        Value::Int(BigInt::from(n))
    }

    pub fn rat(r: BigRational) -> Value {
        if r.is_integer() {
            Value::Int(r.to_integer())
        } else {
            Value::Rat(r)
        }
    }

    pub fn list(items: Vec<Value>) -> Value {
        if items.is_empty() {
            Value::Bool(false)
        } else {
            Value::List(items)
        }
    }

    pub fn nil() -> Value {
        Value::Bool(false)
    }

    pub fn t() -> Value {
        Value::Bool(true)
    }

    pub fn from_bool(b: bool) -> Value {
        Value::Bool(b)
    }

    /// Everything except `nil` is true.
    pub fn is_true(&self) -> bool {
        !matches!(self, Value::Bool(false))
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        match self {
            Value::Int(n) => Some(BigRational::from_integer(n.clone())),
            Value::Rat(r) => Some(r.clone()),
            _ => None,
        }
    }

    pub fn is_number(&self) -> bool {
        matches!(self, Value::Int(_) | Value::Rat(_))
    }
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{}", n),
            Value::Rat(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Value::Bool(true) => f.write_str("t"),
            Value::Bool(false) => f.write_str("nil"),
            Value::List(items) => {
                f.write_str("(")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{}", v)?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum EvalError {
    #[error("fuel exhausted")]
    FuelExhausted,
    #[error("division by zero")]
    DivisionByZero,
    #[error("sort error: {0}")]
    SortError(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("undefined function `{0}`")]
    UndefinedFunction(String),
}

pub type Env = BTreeMap<Symbol, Value>;

/// Evaluator with a memo table for ground applications of corpus-defined
/// functions. The corpus is immutable, so memoized entries stay valid for
/// the evaluator's lifetime.
pub struct Evaluator<'a> {
    corpus: &'a Corpus,
    memo: RefCell<HashMap<(Symbol, Vec<Value>), Value>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(corpus: &'a Corpus) -> Self {
        Evaluator {
            corpus,
            memo: RefCell::new(HashMap::new()),
        }
    }

    pub fn eval(&self, term: &Term, env: &Env, fuel: u64) -> Result<Value, EvalError> {
        let mut remaining = fuel;
        self.eval_inner(term, env, &mut remaining)
    }

    fn eval_inner(&self, term: &Term, env: &Env, fuel: &mut u64) -> Result<Value, EvalError> {
        match term {
            Term::Constant(lit) => Ok(literal_value(lit)),
            Term::Variable(v) => env
                .get(v)
                .cloned()
                .ok_or_else(|| EvalError::UnboundVariable(v.to_string())),
            Term::Application(f, args) => self.apply(f, args, env, fuel),
        }
    }

    fn apply(
        &self,
        f: &Symbol,
        args: &[Term],
        env: &Env,
        fuel: &mut u64,
    ) -> Result<Value, EvalError> {
        // lazy special forms
        match f.as_str() {
            "if" => {
                let c = self.eval_inner(&args[0], env, fuel)?;
                return if c.is_true() {
                    self.eval_inner(&args[1], env, fuel)
                } else {
                    self.eval_inner(&args[2], env, fuel)
                };
            }
            "and" => {
                let a = self.eval_inner(&args[0], env, fuel)?;
                return if a.is_true() {
                    self.eval_inner(&args[1], env, fuel)
                } else {
                    Ok(Value::nil())
                };
            }
            "or" => {
                let a = self.eval_inner(&args[0], env, fuel)?;
                return if a.is_true() {
                    Ok(a)
                } else {
                    self.eval_inner(&args[1], env, fuel)
                };
            }
            "implies" => {
                let a = self.eval_inner(&args[0], env, fuel)?;
                if !a.is_true() {
                    return Ok(Value::t());
                }
                let b = self.eval_inner(&args[1], env, fuel)?;
                return Ok(Value::from_bool(b.is_true()));
            }
            "not" => {
                let a = self.eval_inner(&args[0], env, fuel)?;
                return Ok(Value::from_bool(!a.is_true()));
            }
            _ => {}
        }
        let mut vals = Vec::with_capacity(args.len());
        for a in args {
            vals.push(self.eval_inner(a, env, fuel)?);
        }
        if let Some(def) = self.corpus.definition(f) {
            let key = (f.clone(), vals.clone());
            if let Some(hit) = self.memo.borrow().get(&key) {
                if *fuel == 0 {
                    return Err(EvalError::FuelExhausted);
                }
                *fuel -= 1;
                return Ok(hit.clone());
            }
            if *fuel == 0 {
                return Err(EvalError::FuelExhausted);
            }
            *fuel -= 1;
            let mut call_env = Env::new();
            for (p, v) in def.params.iter().zip(vals.iter()) {
                call_env.insert(p.clone(), v.clone());
            }
            let result = self.eval_inner(&def.body, &call_env, fuel)?;
            self.memo.borrow_mut().insert(key, result.clone());
            return Ok(result);
        }
        apply_builtin(f.as_str(), &vals)
    }
}

/// One-shot evaluation entry point.
pub fn eval(corpus: &Corpus, term: &Term, env: &Env, fuel: u64) -> Result<Value, EvalError> {
    Evaluator::new(corpus).eval(term, env, fuel)
}

pub fn literal_value(lit: &Literal) -> Value {
    match lit {
        Literal::Int(n) => Value::Int(n.clone()),
        Literal::Rat(r) => Value::rat(r.clone()),
        Literal::Bool(b) => Value::Bool(*b),
    }
}

fn sort_err(what: &str, v: &Value) -> EvalError {
    EvalError::SortError(format!("{} applied to {}", what, v))
}

fn apply_builtin(name: &str, vals: &[Value]) -> Result<Value, EvalError> {
    match name {
        "+" | "binary-+" => arith2(name, vals, |a, b| Ok(a + b)),
        "*" | "binary-*" => arith2(name, vals, |a, b| Ok(a * b)),
        "-" => arith2(name, vals, |a, b| Ok(a - b)),
        "/" => arith2(name, vals, |a, b| {
            if b.is_zero() {
                Err(EvalError::DivisionByZero)
            } else {
                Ok(a / b)
            }
        }),
        "unary--" => {
            let a = num_arg(name, &vals[0])?;
            Ok(Value::rat(-a))
        }
        "unary-/" => {
            let a = num_arg(name, &vals[0])?;
            if a.is_zero() {
                Err(EvalError::DivisionByZero)
            } else {
                Ok(Value::rat(a.recip()))
            }
        }
        "<" => {
            let a = num_arg(name, &vals[0])?;
            let b = num_arg(name, &vals[1])?;
            Ok(Value::from_bool(a < b))
        }
        "equal" => Ok(Value::from_bool(vals[0] == vals[1])),
        "cons" => match &vals[1] {
            Value::Bool(false) => Ok(Value::List(vec![vals[0].clone()])),
            Value::List(rest) => {
                let mut items = Vec::with_capacity(rest.len() + 1);
                items.push(vals[0].clone());
                items.extend(rest.iter().cloned());
                Ok(Value::List(items))
            }
            other => Err(sort_err("cons (improper tail)", other)),
        },
        "car" => match &vals[0] {
            Value::List(items) => Ok(items[0].clone()),
            Value::Bool(false) => Ok(Value::nil()),
            other => Err(sort_err("car", other)),
        },
        "cdr" => match &vals[0] {
            Value::List(items) => Ok(Value::list(items[1..].to_vec())),
            Value::Bool(false) => Ok(Value::nil()),
            other => Err(sort_err("cdr", other)),
        },
        "consp" => Ok(Value::from_bool(matches!(&vals[0], Value::List(_)))),
        "symbolp" => Ok(Value::from_bool(matches!(&vals[0], Value::Bool(_)))),
        "characterp" | "stringp" | "complex-rationalp" => Ok(Value::nil()),
        "acl2-numberp" | "rationalp" => Ok(Value::from_bool(vals[0].is_number())),
        "integerp" => Ok(Value::from_bool(matches!(&vals[0], Value::Int(_)))),
        "numerator" => {
            let a = num_arg(name, &vals[0])?;
            Ok(Value::Int(a.numer().clone()))
        }
        "denominator" => {
            let a = num_arg(name, &vals[0])?;
            Ok(Value::Int(a.denom().clone()))
        }
        "realpart" => {
            let a = num_arg(name, &vals[0])?;
            Ok(Value::rat(a))
        }
        "imagpart" => {
            num_arg(name, &vals[0])?;
            Ok(Value::int(0))
        }
        "complex" => {
            let a = num_arg(name, &vals[0])?;
            let b = num_arg(name, &vals[1])?;
            if b.is_zero() {
                Ok(Value::rat(a))
            } else {
                Err(EvalError::SortError(
                    "complex numbers are not supported".into(),
                ))
            }
        }
        other => Err(EvalError::UndefinedFunction(other.to_string())),
    }
}

fn num_arg(name: &str, v: &Value) -> Result<BigRational, EvalError> {
    v.as_rational().ok_or_else(|| sort_err(name, v))
}

fn arith2(
    name: &str,
    vals: &[Value],
    op: impl Fn(BigRational, BigRational) -> Result<BigRational, EvalError>,
) -> Result<Value, EvalError> {
    let a = num_arg(name, &vals[0])?;
    let b = num_arg(name, &vals[1])?;
    Ok(Value::rat(op(a, b)?))
}

// ---------------------------------------------------------------------------
// Test value generation
// ---------------------------------------------------------------------------

/// Splitmix-style mixing used to derive independent sub-seeds.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E3779B97F4A7C15)
        .wrapping_add(salt.wrapping_mul(0xBF58476D1CE4E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

const DEFAULT_RANDOM_TAIL: usize = 200;

/// Largest random natural drawn by the generator. Bounded so that the
/// naive recursions in the corpora stay within the default fuel budget.
const MAX_RANDOM_NAT: u64 = 20;

/// Deterministic test values for a sort: an exhaustive small prefix
/// followed by seeded random larger values.
pub fn gen_values(sort: Sort, bound: usize, seed: u64) -> Vec<Value> {
    let mut out = exhaustive_prefix(sort, bound);
    if matches!(sort, Sort::Bool) {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..DEFAULT_RANDOM_TAIL {
        out.push(random_value(sort, &mut rng));
    }
    out
}

pub fn exhaustive_prefix(sort: Sort, bound: usize) -> Vec<Value> {
    match sort {
        Sort::Nat => (0..=bound as i64).map(Value::int).collect(),
        Sort::Int => (-(bound as i64)..=bound as i64).map(Value::int).collect(),
        Sort::Bool => vec![Value::t(), Value::nil()],
        Sort::Rational => {
            let mut out = Vec::new();
            for q in 1..=3i64 {
                for p in -(bound as i64)..=bound as i64 {
                    let v = Value::rat(BigRational::new(BigInt::from(p), BigInt::from(q)));
                    if !out.contains(&v) {
                        out.push(v);
                    }
                }
            }
            out
        }
        Sort::List => nat_lists(bound.min(4), 3),
        Sort::Any => {
            let mut out: Vec<Value> = (0..=bound as i64).map(Value::int).collect();
            out.push(Value::t());
            out.push(Value::nil());
            out.extend(nat_lists(2, 3).into_iter().filter(|v| v.is_true()));
            out
        }
    }
}

/// All nat-lists of length <= max_len over elements 0..=max_elem, ordered
/// by length then lexicographically.
fn nat_lists(max_len: usize, max_elem: i64) -> Vec<Value> {
    let mut out = vec![Value::nil()];
    let mut layer: Vec<Vec<Value>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for prefix in &layer {
            for e in 0..=max_elem {
                let mut l = prefix.clone();
                l.push(Value::int(e));
                out.push(Value::List(l.clone()));
                next.push(l);
            }
        }
        layer = next;
    }
    out
}

pub fn random_value(sort: Sort, rng: &mut ChaCha8Rng) -> Value {
    match sort {
        Sort::Nat => Value::Int(BigInt::from(rng.gen_range(0..=MAX_RANDOM_NAT))),
        Sort::Int => Value::Int(BigInt::from(
            rng.gen_range(-(MAX_RANDOM_NAT as i64)..=MAX_RANDOM_NAT as i64),
        )),
        Sort::Rational => {
            let p = rng.gen_range(-(MAX_RANDOM_NAT as i64)..=MAX_RANDOM_NAT as i64);
            let q = rng.gen_range(1..=10i64);
            Value::rat(BigRational::new(BigInt::from(p), BigInt::from(q)))
        }
        Sort::Bool => Value::from_bool(rng.gen_bool(0.5)),
        Sort::List => {
            let len = rng.gen_range(0..=6usize);
            Value::list(
                (0..len)
                    .map(|_| Value::Int(BigInt::from(rng.gen_range(0..=9u32))))
                    .collect(),
            )
        }
        Sort::Any => match rng.gen_range(0..3u32) {
            0 => random_value(Sort::Nat, rng),
            1 => random_value(Sort::List, rng),
            _ => random_value(Sort::Bool, rng),
        },
    }
}

// ---------------------------------------------------------------------------
// Conjecture checking
// ---------------------------------------------------------------------------

/// An equation under recognizer hypotheses, quantified over sorted
/// variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Conjecture {
    pub hypotheses: Vec<Term>,
    pub lhs: Term,
    pub rhs: Term,
    pub variables: Vec<(Symbol, Sort)>,
}

impl Conjecture {
    pub fn new(hypotheses: Vec<Term>, lhs: Term, rhs: Term, variables: Vec<(Symbol, Sort)>) -> Self {
        Conjecture {
            hypotheses,
            lhs,
            rhs,
            variables,
        }
    }

    /// Checks the free-variable invariant.
    pub fn is_well_formed(&self) -> bool {
        let declared: Vec<&Symbol> = self.variables.iter().map(|(v, _)| v).collect();
        let mut all = self.lhs.variables();
        all.extend(self.rhs.variables());
        for h in &self.hypotheses {
            all.extend(h.variables());
        }
        all.iter().all(|v| declared.contains(&v))
    }

    pub fn equation_string(&self) -> String {
        format!("(equal {} {})", self.lhs, self.rhs)
    }
}

impl std::fmt::Display for Conjecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.hypotheses.is_empty() {
            return write!(f, "{}", self.equation_string());
        }
        let hyps: Vec<String> = self.hypotheses.iter().map(|h| h.to_string()).collect();
        if hyps.len() == 1 {
            write!(f, "(implies {} {})", hyps[0], self.equation_string())
        } else {
            write!(
                f,
                "(implies (and {}) {})",
                hyps.join(" "),
                self.equation_string()
            )
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Falsified(Env),
    Survived(usize),
    Undecided(usize),
}

impl Verdict {
    pub fn survived(&self) -> bool {
        matches!(self, Verdict::Survived(_))
    }
}

/// Test budget for conjecture checking.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TestBudget {
    /// Exhaustive prefix bound per nat/int variable; lists are capped at
    /// length `min(bound, 4)`.
    pub exhaustive_bound: usize,
    /// Random assignments tried after the exhaustive product.
    pub random_tests: usize,
    /// Fuel per evaluation.
    pub fuel: u64,
}

impl Default for TestBudget {
    fn default() -> Self {
        TestBudget {
            exhaustive_bound: 7,
            random_tests: 200,
            fuel: 100_000,
        }
    }
}

/// Counterexample-checks a conjecture: the cartesian product of the
/// per-variable exhaustive prefixes first, then `random_tests` seeded
/// random assignments. Assignments violating a hypothesis are skipped.
/// The first disagreement falsifies; if more than half of all assignments
/// exhaust their fuel the verdict is `Undecided`.
pub fn check_conjecture(
    corpus: &Corpus,
    conjecture: &Conjecture,
    budget: &TestBudget,
    seed: u64,
) -> Verdict {
    let evaluator = Evaluator::new(corpus);
    let vars = &conjecture.variables;
    let prefixes: Vec<Vec<Value>> = vars
        .iter()
        .map(|(_, sort)| exhaustive_prefix(*sort, budget.exhaustive_bound))
        .collect();

    let mut total = 0usize;
    let mut effective = 0usize;
    let mut exhausted = 0usize;

    let mut indices = vec![0usize; vars.len()];
    'exhaustive: loop {
        let env: Env = vars
            .iter()
            .enumerate()
            .map(|(i, (v, _))| (v.clone(), prefixes[i][indices[i]].clone()))
            .collect();
        total += 1;
        match run_one(&evaluator, conjecture, &env, budget.fuel) {
            TestOutcome::Mismatch => return Verdict::Falsified(env),
            TestOutcome::Agree => effective += 1,
            TestOutcome::Skip => {}
            TestOutcome::Exhausted => exhausted += 1,
        }
        // advance the odometer; rightmost variable cycles fastest
        if vars.is_empty() {
            break;
        }
        let mut pos = vars.len() - 1;
        loop {
            indices[pos] += 1;
            if indices[pos] < prefixes[pos].len() {
                continue 'exhaustive;
            }
            indices[pos] = 0;
            if pos == 0 {
                break 'exhaustive;
            }
            pos -= 1;
        }
    }

    let mut rngs: Vec<ChaCha8Rng> = (0..vars.len())
        .map(|i| ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64 + 1)))
        .collect();
    for _ in 0..budget.random_tests {
        if vars.is_empty() {
            break;
        }
        let env: Env = vars
            .iter()
            .enumerate()
            .map(|(i, (v, sort))| (v.clone(), random_value(*sort, &mut rngs[i])))
            .collect();
        total += 1;
        match run_one(&evaluator, conjecture, &env, budget.fuel) {
            TestOutcome::Mismatch => return Verdict::Falsified(env),
            TestOutcome::Agree => effective += 1,
            TestOutcome::Skip => {}
            TestOutcome::Exhausted => exhausted += 1,
        }
    }

    if exhausted * 2 > total {
        Verdict::Undecided(exhausted)
    } else {
        Verdict::Survived(effective)
    }
}

enum TestOutcome {
    Agree,
    Mismatch,
    Skip,
    Exhausted,
}

fn run_one(evaluator: &Evaluator, conjecture: &Conjecture, env: &Env, fuel: u64) -> TestOutcome {
    for hyp in &conjecture.hypotheses {
        match evaluator.eval(hyp, env, fuel) {
            Ok(v) if v.is_true() => {}
            Ok(_) => return TestOutcome::Skip,
            Err(EvalError::FuelExhausted) => return TestOutcome::Exhausted,
            Err(_) => return TestOutcome::Skip,
        }
    }
    let lhs = match evaluator.eval(&conjecture.lhs, env, fuel) {
        Ok(v) => v,
        Err(EvalError::FuelExhausted) => return TestOutcome::Exhausted,
        Err(_) => return TestOutcome::Skip,
    };
    let rhs = match evaluator.eval(&conjecture.rhs, env, fuel) {
        Ok(v) => v,
        Err(EvalError::FuelExhausted) => return TestOutcome::Exhausted,
        Err(_) => return TestOutcome::Skip,
    };
    if lhs == rhs {
        TestOutcome::Agree
    } else {
        TestOutcome::Mismatch
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpora::MINI_CORPUS;

    fn mini() -> Corpus {
        Corpus::with_prelude(MINI_CORPUS).expect("mini corpus parses")
    }

    fn ev(corpus: &Corpus, expr: &str) -> Result<Value, EvalError> {
        let term = corpus.parse_term(expr).expect("term");
        eval(corpus, &term, &Env::new(), 100_000)
    }

    #[test]
    fn fact_of_five_unfolds_to_120() {
        // 5*4*3*2*1*1 unfolded by hand
        assert_eq!(ev(&mini(), "(fact 5)").unwrap(), Value::int(120));
    }

    #[test]
    fn fib_table_matches_brute_force() {
        // fib(0..6) = 0,1,1,2,3,5,8
        let c = mini();
        let expected = [0i64, 1, 1, 2, 3, 5, 8];
        for (n, e) in expected.iter().enumerate() {
            let v = ev(&c, &format!("(fib {})", n)).unwrap();
            assert_eq!(v, Value::int(*e), "fib {}", n);
        }
    }

    #[test]
    fn helper_fib_unfolds() {
        // (6,0,1) -> (5,1,1) -> (4,1,2) -> (3,2,3) -> (2,3,5) -> (1,5,8) -> 8
        assert_eq!(ev(&mini(), "(helper-fib 6 0 1)").unwrap(), Value::int(8));
    }

    #[test]
    fn exact_rational_arithmetic() {
        let c = mini();
        assert_eq!(
            ev(&c, "(+ 1/2 1/3)").unwrap(),
            Value::rat(BigRational::new(BigInt::from(5), BigInt::from(6)))
        );
        assert_eq!(ev(&c, "(* 2/3 3/2)").unwrap(), Value::int(1));
        assert_eq!(ev(&c, "(/ 1 0)"), Err(EvalError::DivisionByZero));
    }

    #[test]
    fn car_of_number_is_sort_error() {
        assert!(matches!(
            ev(&mini(), "(car 3)"),
            Err(EvalError::SortError(_))
        ));
    }

    #[test]
    fn zp_nil_handling() {
        let c = mini();
        assert_eq!(ev(&c, "(zp 0)").unwrap(), Value::t());
        assert_eq!(ev(&c, "(zp 3)").unwrap(), Value::nil());
        assert_eq!(ev(&c, "(zp (- 0 1))").unwrap(), Value::t());
        assert_eq!(ev(&c, "(natp (- 0 1))").unwrap(), Value::nil());
    }

    #[test]
    fn list_primitives() {
        let c = mini();
        assert_eq!(
            ev(&c, "(app (cons 1 nil) (cons 2 nil))").unwrap(),
            Value::List(vec![Value::int(1), Value::int(2)])
        );
        assert_eq!(
            ev(&c, "(rev (cons 1 (cons 2 nil)))").unwrap(),
            Value::List(vec![Value::int(2), Value::int(1)])
        );
        assert_eq!(ev(&c, "(len nil)").unwrap(), Value::int(0));
        assert_eq!(ev(&c, "(cdr (cons 1 nil))").unwrap(), Value::nil());
    }

    #[test]
    fn fuel_exhaustion_is_reported() {
        let c = mini();
        let term = c.parse_term("(fact 50)").unwrap();
        assert_eq!(
            eval(&c, &term, &Env::new(), 10),
            Err(EvalError::FuelExhausted)
        );
    }

    #[test]
    fn gen_values_exhaustive_prefixes() {
        let nats = gen_values(Sort::Nat, 3, 0);
        assert_eq!(&nats[..4], &[Value::int(0), Value::int(1), Value::int(2), Value::int(3)]);
        assert_eq!(gen_values(Sort::Bool, 7, 0), vec![Value::t(), Value::nil()]);
        let lists = gen_values(Sort::List, 2, 0);
        assert!(lists.contains(&Value::nil()));
        assert!(lists.contains(&Value::List(vec![Value::int(0)])));
        assert!(lists.contains(&Value::List(vec![Value::int(3), Value::int(3)])));
    }

    #[test]
    fn gen_values_deterministic_under_seed() {
        assert_eq!(gen_values(Sort::Nat, 7, 42), gen_values(Sort::Nat, 7, 42));
        assert_ne!(gen_values(Sort::Nat, 7, 1), gen_values(Sort::Nat, 7, 2));
    }

    fn conj(c: &Corpus, hyps: &[&str], lhs: &str, rhs: &str, vars: &[(&str, Sort)]) -> Conjecture {
        Conjecture::new(
            hyps.iter().map(|h| c.parse_term(h).unwrap()).collect(),
            c.parse_term(lhs).unwrap(),
            c.parse_term(rhs).unwrap(),
            vars.iter().map(|(v, s)| (Symbol::new(v), *s)).collect(),
        )
    }

    #[test]
    fn falsified_returns_first_enumerated_counterexample() {
        // brute force n=0..5 gives fact(n) = 1,1,2,6,24,120; first
        // disagreement with n is at n=0
        let c = mini();
        let cj = conj(&c, &["(natp n)"], "(fact n)", "n", &[("n", Sort::Nat)]);
        match check_conjecture(&c, &cj, &TestBudget::default(), 0) {
            Verdict::Falsified(env) => {
                assert_eq!(env.get(&Symbol::new("n")), Some(&Value::int(0)));
            }
            other => panic!("expected falsification, got {:?}", other),
        }
    }

    #[test]
    fn helper_fact_lemma_survives() {
        // verified by brute force for n, a in 0..7 in the acceptance suite
        let c = mini();
        let cj = conj(
            &c,
            &["(natp n)", "(natp a)"],
            "(helper-fact n a)",
            "(* a (fact n))",
            &[("n", Sort::Nat), ("a", Sort::Nat)],
        );
        assert!(check_conjecture(&c, &cj, &TestBudget::default(), 0).survived());
    }

    #[test]
    fn reflexivity_survives() {
        let c = mini();
        let cj = conj(&c, &[], "x", "x", &[("x", Sort::Nat)]);
        assert!(check_conjecture(&c, &cj, &TestBudget::default(), 0).survived());
    }

    #[test]
    fn falsified_assignment_reproduces_disagreement() {
        let c = mini();
        let cj = conj(
            &c,
            &["(natp n)"],
            "(power n)",
            "(+ n 1)",
            &[("n", Sort::Nat)],
        );
        match check_conjecture(&c, &cj, &TestBudget::default(), 7) {
            Verdict::Falsified(env) => {
                let l = eval(&c, &cj.lhs, &env, 100_000).unwrap();
                let r = eval(&c, &cj.rhs, &env, 100_000).unwrap();
                assert_ne!(l, r);
            }
            other => panic!("expected falsification, got {:?}", other),
        }
    }

    #[test]
    fn verdicts_are_deterministic() {
        let c = mini();
        let cj = conj(
            &c,
            &["(natp n)", "(natp a)"],
            "(helper-power n a)",
            "(* a (power n))",
            &[("n", Sort::Nat), ("a", Sort::Nat)],
        );
        let b = TestBudget::default();
        assert_eq!(
            check_conjecture(&c, &cj, &b, 9),
            check_conjecture(&c, &cj, &b, 9)
        );
    }
}
