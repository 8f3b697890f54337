//! The symbol valuation: closed-form values for builtins, negative
//! measure-derived values for the symbol being defined, and recurrent
//! cluster-derived values for everything else.
//!
//! Every time a definition is incorporated, all earlier definition bodies
//! are featurized under the previous epoch's valuation and re-clustered at
//! granularity 3; a defined symbol in cluster `j` with proximity `p` is
//! valued `5 + 2j + p`.

use crate::cluster::{kmeans, Granularity};
use crate::corpus::{builtin_fn, BuiltinGroup, Corpus, Definition, MeasureScheme};
use crate::features::{extract_vector, FeatureError, SymbolValues};
use crate::interp::derive_seed;
use crate::term::{Literal, Symbol, Term};
use num::{BigInt, BigRational, FromPrimitive, One, Signed, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Group-local value ladder: `sum_{j=1..i} 1/(10 * 2^(j-1))`.
fn series(i: usize) -> BigRational {
    let mut sum = BigRational::zero();
    let mut step = rat(1, 10);
    for _ in 0..i {
        sum += step.clone();
        step /= BigInt::from(2);
    }
    sum
}

pub fn group_members(group: BuiltinGroup) -> &'static [&'static str] {
    match group {
        BuiltinGroup::Recognisers => &[
            "symbolp",
            "characterp",
            "stringp",
            "consp",
            "acl2-numberp",
            "integerp",
            "rationalp",
            "complex-rationalp",
        ],
        BuiltinGroup::Constructors => &["cons", "complex"],
        BuiltinGroup::Accessors => &[
            "car",
            "cdr",
            "denominator",
            "numerator",
            "realpart",
            "imagpart",
        ],
        BuiltinGroup::NumberOps => &["unary-/", "unary--", "binary-+", "binary-*"],
        BuiltinGroup::Numbers => &[],
        BuiltinGroup::BooleanOps => &["equal", "if", "<"],
    }
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ValuationError {
    #[error("unknown builtin `{0}`")]
    UnknownBuiltin(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("clustering failed: {0}")]
    Cluster(String),
}

/// Closed-form value of a fixed builtin function.
pub fn builtin_value(name: &Symbol) -> Result<BigRational, ValuationError> {
    let b = builtin_fn(name.as_str())
        .ok_or_else(|| ValuationError::UnknownBuiltin(name.to_string()))?;
    let base = match b.group {
        BuiltinGroup::Recognisers => 1,
        BuiltinGroup::Constructors => 2,
        BuiltinGroup::Accessors => {
            // [a^j_i] = 3 + 1/(10 j) + (i - 1)/100
            let j = b.sub as i64;
            let i = b.index as i64;
            return Ok(rat(3, 1) + rat(1, 10 * j) + rat(i - 1, 100));
        }
        BuiltinGroup::NumberOps => 4,
        BuiltinGroup::BooleanOps => 5,
        BuiltinGroup::Numbers => unreachable!("numbers are valued per literal"),
    };
    Ok(BigRational::from_integer(BigInt::from(base)) + series(b.index))
}

/// Value of a numeric literal: `[0] = 4.3`, `4.3 + |n|/10` for `|n| < 1`,
/// `4.3 + 1/(100 |n|)` for `|n| >= 1`.
pub fn number_value(lit: &Literal) -> BigRational {
    let n = match lit {
        Literal::Int(n) => BigRational::from_integer(n.clone()),
        Literal::Rat(r) => r.clone(),
        Literal::Bool(_) => panic!("number_value applied to a boolean"),
    };
    let base = rat(43, 10);
    if n.is_zero() {
        base
    } else if n.abs() < BigRational::one() {
        base + n.abs() / BigInt::from(10)
    } else {
        base + BigRational::one() / (n.abs() * BigInt::from(100))
    }
}

/// Values of the boolean constants. They sit inside the numbers band but
/// collide with no literal value.
pub fn bool_constant_value(b: bool) -> BigRational {
    if b {
        rat(89, 20) // 4.45
    } else {
        rat(9, 2) // 4.5
    }
}

/// 1-based first-occurrence rank of a variable within a term.
pub fn variable_value(term: &Term, v: &Symbol) -> Option<usize> {
    term.variable_rank(v)
}

/// Reserved measure values keep recursive-symbol values negative and
/// distinct from every builtin and clustered value.
pub fn measure_value(measure: MeasureScheme) -> BigRational {
    match measure {
        MeasureScheme::NatValue => rat(1, 2),
        MeasureScheme::ListLen => rat(3, 5),
        MeasureScheme::Unknown => rat(7, 10),
    }
}

/// Value of a recursive definition's own head symbol inside its body.
pub fn recursive_value(def: &Definition) -> BigRational {
    let measure = def.measure.unwrap_or(MeasureScheme::Unknown);
    -measure_value(measure)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Provenance {
    Builtin,
    Recursive(MeasureScheme),
    Clustered { cluster: usize, proximity_num: String },
    Declared,
}

/// Immutable valuation for one epoch. `epoch` counts the definitions
/// incorporated so far; entries hold declared and clustered symbols, while
/// fixed builtins resolve through the formula table.
#[derive(Clone, Debug, PartialEq)]
pub struct Valuation {
    entries: BTreeMap<Symbol, (BigRational, Provenance)>,
    pub epoch: usize,
}

impl Valuation {
    /// Epoch-0 valuation: declared builtins only.
    pub fn initial(corpus: &Corpus) -> Valuation {
        let mut entries = BTreeMap::new();
        for (name, (_, value)) in &corpus.extra_builtins {
            entries.insert(name.clone(), (value.clone(), Provenance::Declared));
        }
        Valuation { entries, epoch: 0 }
    }

    pub fn value_of(&self, s: &Symbol) -> Option<BigRational> {
        if let Some((v, _)) = self.entries.get(s) {
            return Some(v.clone());
        }
        builtin_value(s).ok()
    }

    pub fn provenance(&self, s: &Symbol) -> Option<Provenance> {
        if let Some((_, p)) = self.entries.get(s) {
            return Some(p.clone());
        }
        builtin_fn(s.as_str()).map(|_| Provenance::Builtin)
    }

    /// Cluster index of a defined symbol in the epoch's definition
    /// clustering.
    pub fn cluster_of(&self, s: &Symbol) -> Option<usize> {
        match self.entries.get(s) {
            Some((_, Provenance::Clustered { cluster, .. })) => Some(*cluster),
            _ => None,
        }
    }

    pub fn clustered_symbols(&self) -> impl Iterator<Item = (&Symbol, &BigRational)> {
        self.entries.iter().filter_map(|(s, (v, p))| match p {
            Provenance::Clustered { .. } => Some((s, v)),
            _ => None,
        })
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Symbol, &BigRational, &Provenance)> {
        self.entries.iter().map(|(s, (v, p))| (s, v, p))
    }

    /// View of this valuation with the head symbol of `def` valued by its
    /// negative measure value, used while featurizing `def`'s own body.
    pub fn with_self(&self, def: &Definition) -> Valuation {
        let mut entries = self.entries.clone();
        entries.insert(
            def.name.clone(),
            (
                recursive_value(def),
                Provenance::Recursive(def.measure.unwrap_or(MeasureScheme::Unknown)),
            ),
        );
        Valuation {
            entries,
            epoch: self.epoch,
        }
    }

    fn insert_clustered(&mut self, s: Symbol, value: BigRational, cluster: usize) {
        let prox = value.clone() - rat(5, 1) - rat(2 * cluster as i64, 1);
        self.entries.insert(
            s,
            (
                value,
                Provenance::Clustered {
                    cluster,
                    proximity_num: prox.to_string(),
                },
            ),
        );
    }
}

impl SymbolValues for Valuation {
    fn symbol_value(&self, s: &Symbol) -> Option<BigRational> {
        self.value_of(s)
    }

    fn constant_value(&self, lit: &Literal) -> BigRational {
        match lit {
            Literal::Bool(b) => bool_constant_value(*b),
            other => number_value(other),
        }
    }
}

/// Restarts per definition-clustering epoch; the lowest-inertia run wins.
const KMEANS_RESTARTS: u64 = 8;

/// Incorporates the `n`-th definition: re-clusters the bodies of
/// definitions `1..n-1` under `previous` (each body valuing its own head
/// symbol by `recursive_value`) and assigns every clustered symbol
/// `5 + 2j + p`. Declared and fixed builtins are untouched. Lloyd's
/// iteration is restarted from several seeds and the lowest-inertia
/// partition kept.
pub fn on_new_definition(
    corpus: &Corpus,
    n: usize,
    previous: &Valuation,
    seed: u64,
) -> Result<Valuation, ValuationError> {
    let defs: Vec<&Definition> = corpus.definitions().take(n.saturating_sub(1)).collect();
    let mut next = Valuation::initial(corpus);
    next.epoch = defs.len();
    if defs.is_empty() {
        return Ok(next);
    }
    let mut vectors = Vec::with_capacity(defs.len());
    for def in &defs {
        let ctx = previous.with_self(def);
        vectors.push(extract_vector(&def.body, &ctx)?.to_f64());
    }
    let n_clusters = crate::cluster::num_clusters(defs.len(), Granularity::default());
    let epoch_seed = derive_seed(seed, defs.len() as u64);
    let mut best: Option<(f64, crate::cluster::Clustering)> = None;
    for r in 0..KMEANS_RESTARTS {
        let clustering = kmeans(&vectors, n_clusters, derive_seed(epoch_seed, r))
            .map_err(|e| ValuationError::Cluster(e.to_string()))?;
        let score = clustering.inertia(&vectors);
        if best.as_ref().map(|(s, _)| score < *s).unwrap_or(true) {
            best = Some((score, clustering));
        }
    }
    let clustering = best.expect("at least one restart").1;
    for (idx, def) in defs.iter().enumerate() {
        let cluster = clustering
            .cluster_of(idx)
            .expect("partition covers every index");
        let j = cluster.canonical_index;
        let p = clustering.proximity(&vectors, idx);
        let p_rat = BigRational::from_f64(p).unwrap_or_else(BigRational::zero);
        let value = rat(5, 1) + rat(2 * j as i64, 1) + p_rat;
        next.insert_clustered(def.name.clone(), value, j);
    }
    Ok(next)
}

/// Runs the recurrence over the whole corpus and returns the final
/// valuation, in which every definition is valued.
pub fn compute_valuation(corpus: &Corpus, seed: u64) -> Result<Valuation, ValuationError> {
    let total = corpus.definitions().count();
    let mut current = Valuation::initial(corpus);
    for n in 1..=total + 1 {
        current = on_new_definition(corpus, n, &current, seed)?;
    }
    Ok(current)
}

/// Renders a rational exactly: as a terminating decimal when the reduced
/// denominator is of the form 2^a 5^b, otherwise as `p/q`.
pub fn exact_string(r: &BigRational) -> String {
    let denom = r.denom().clone();
    let mut d = denom.clone();
    let mut twos = 0u32;
    let mut fives = 0u32;
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while (&d % &two).is_zero() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if !d.is_one() {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let digits = twos.max(fives);
    let scaled = (r.numer() * BigInt::from(10).pow(digits) / denom).abs();
    let sign = if r.is_negative() { "-" } else { "" };
    let s = scaled.to_string();
    if digits == 0 {
        return format!("{}{}", sign, s);
    }
    let s = format!("{:0>width$}", s, width = digits as usize + 1);
    let (int_part, frac_part) = s.split_at(s.len() - digits as usize);
    format!("{}{}.{}", sign, int_part, frac_part)
}

/// Parses the output of [`exact_string`].
pub fn parse_exact(s: &str) -> Option<BigRational> {
    if let Some((p, q)) = s.split_once('/') {
        return Some(BigRational::new(p.parse().ok()?, q.parse().ok()?));
    }
    let negative = s.starts_with('-');
    let body = s.trim_start_matches('-');
    if let Some((i, f)) = body.split_once('.') {
        let digits = format!("{}{}", i, f);
        let v = BigRational::new(digits.parse().ok()?, BigInt::from(10).pow(f.len() as u32));
        Some(if negative { -v } else { v })
    } else {
        let v = BigRational::from_integer(body.parse().ok()?);
        Some(if negative { -v } else { v })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpora::MINI_CORPUS;

    fn sym(s: &str) -> Symbol {
        Symbol::new(s)
    }

    fn dec(s: &str) -> BigRational {
        parse_exact(s).unwrap()
    }

    #[test]
    fn recogniser_formula() {
        assert_eq!(builtin_value(&sym("symbolp")).unwrap(), dec("1.1"));
        assert_eq!(builtin_value(&sym("characterp")).unwrap(), dec("1.15"));
        assert_eq!(builtin_value(&sym("consp")).unwrap(), dec("1.1875"));
        assert_eq!(
            builtin_value(&sym("complex-rationalp")).unwrap(),
            dec("1.19921875")
        );
    }

    #[test]
    fn boolean_ops_formula() {
        assert_eq!(builtin_value(&sym("equal")).unwrap(), dec("5.1"));
        assert_eq!(builtin_value(&sym("if")).unwrap(), dec("5.15"));
        assert_eq!(builtin_value(&sym("<")).unwrap(), dec("5.175"));
    }

    #[test]
    fn accessor_formula() {
        // numerator is a^2 with i = 2: 3 + 1/20 + 1/100 = 3.06
        assert_eq!(builtin_value(&sym("numerator")).unwrap(), dec("3.06"));
        assert_eq!(builtin_value(&sym("car")).unwrap(), dec("3.1"));
        assert_eq!(builtin_value(&sym("cdr")).unwrap(), dec("3.11"));
    }

    #[test]
    fn surface_arithmetic_aliases() {
        assert_eq!(
            builtin_value(&sym("+")).unwrap(),
            builtin_value(&sym("binary-+")).unwrap()
        );
        assert_eq!(builtin_value(&sym("-")).unwrap(), dec("4.15"));
    }

    #[test]
    fn unknown_builtin_is_an_error() {
        assert!(matches!(
            builtin_value(&sym("frob")),
            Err(ValuationError::UnknownBuiltin(_))
        ));
    }

    #[test]
    fn number_formula() {
        assert_eq!(number_value(&Literal::int(0)), dec("4.3"));
        // 4.3 + 1/100 from the |n| >= 1 branch
        assert_eq!(number_value(&Literal::int(1)), dec("4.31"));
        // 4.3 + 0.5/10 from the |n| < 1 branch
        assert_eq!(
            number_value(&Literal::rational(BigInt::from(1), BigInt::from(2)).unwrap()),
            dec("4.35")
        );
        assert_eq!(number_value(&Literal::int(-1)), dec("4.31"));
    }

    #[test]
    fn variable_values_rank_by_first_occurrence() {
        let t = Term::app(
            "helper-fib",
            vec![Term::var("n"), Term::var("j"), Term::var("k")],
        );
        assert_eq!(variable_value(&t, &sym("n")), Some(1));
        assert_eq!(variable_value(&t, &sym("j")), Some(2));
        assert_eq!(variable_value(&t, &sym("k")), Some(3));
        let repeated = Term::app("+", vec![Term::var("n"), Term::var("n")]);
        assert_eq!(variable_value(&repeated, &sym("n")), Some(1));
    }

    fn mini() -> Corpus {
        Corpus::with_prelude(MINI_CORPUS).unwrap()
    }

    #[test]
    fn recursive_values_follow_measures() {
        let c = mini();
        let fact = c.definition(&sym("fact")).unwrap();
        assert_eq!(recursive_value(fact), dec("-0.5"));
        let rev = c.definition(&sym("rev")).unwrap();
        assert_eq!(recursive_value(rev), dec("-0.6"));
        // equal measures give equal values
        let power = c.definition(&sym("power")).unwrap();
        assert_eq!(recursive_value(fact), recursive_value(power));
    }

    #[test]
    fn single_definition_corpus_values_it_six() {
        let c = Corpus::parse("(defun id (x) x)").unwrap();
        let v = compute_valuation(&c, 0).unwrap();
        // j = 0 in the sole cluster and p = 1 for a singleton
        assert_eq!(v.value_of(&sym("id")).unwrap(), dec("6"));
        assert_eq!(v.epoch, 1);
    }

    #[test]
    fn clustered_values_sit_in_their_bands() {
        let c = mini();
        let v = compute_valuation(&c, 0).unwrap();
        for (s, value, prov) in v.entries() {
            if let Provenance::Clustered { cluster, .. } = prov {
                let lo = BigRational::from_integer(BigInt::from(5 + 2 * *cluster as i64));
                let hi = lo.clone() + BigRational::one();
                assert!(value >= &lo && value <= &hi, "{} = {} outside band {}", s, value, cluster);
            }
        }
    }

    #[test]
    fn recurrence_has_no_lookahead() {
        let c = mini();
        let total = c.definitions().count();
        let full = compute_valuation(&c, 0).unwrap();
        // rebuild epoch-by-epoch and compare the final epoch
        let mut cur = Valuation::initial(&c);
        for n in 1..=total + 1 {
            cur = on_new_definition(&c, n, &cur, 0).unwrap();
        }
        assert_eq!(cur, full);
    }

    #[test]
    fn exact_strings_roundtrip() {
        for s in ["4.3", "5.1875", "-0.5", "12", "18.97012974"] {
            assert_eq!(exact_string(&dec(s)), s);
        }
        let third = BigRational::new(BigInt::from(1), BigInt::from(3));
        assert_eq!(exact_string(&third), "1/3");
        assert_eq!(parse_exact("1/3"), Some(third));
    }
}
