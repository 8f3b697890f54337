//! Dense term-tree feature matrices.
//!
//! A term is summarized by a 7x7 grid: rows are node depths 0..6 and
//! columns are `variables, arity 0, arity 1, ..., arity 5`. Each node
//! contributes its valuation to the cell addressed by its depth and
//! column; multiple nodes falling in one cell combine with `::`
//! concatenation in left-to-right traversal order. Nodes deeper than 6
//! are dropped and arities above 5 saturate into the arity-5 column.

use crate::term::{Literal, Symbol, Term};
use num::{BigInt, BigRational, Signed, Zero};
use thiserror::Error;

pub const DEPTHS: usize = 7;
pub const COLUMNS: usize = 7;
pub const VECTOR_LEN: usize = DEPTHS * COLUMNS;

/// Source of symbol and constant values during extraction.
pub trait SymbolValues {
    fn symbol_value(&self, s: &Symbol) -> Option<BigRational>;
    fn constant_value(&self, lit: &Literal) -> BigRational;
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum FeatureError {
    #[error("no valuation for symbol `{0}`")]
    UnvaluedSymbol(String),
}

/// 7x7 depth-by-arity matrix of exact rationals; 0 marks an empty cell.
#[derive(Clone, Debug, PartialEq)]
pub struct TermMatrix {
    cells: Vec<BigRational>,
}

impl TermMatrix {
    pub fn zero() -> Self {
        TermMatrix {
            cells: vec![BigRational::zero(); VECTOR_LEN],
        }
    }

    pub fn get(&self, depth: usize, column: usize) -> &BigRational {
        &self.cells[depth * COLUMNS + column]
    }

    fn set(&mut self, depth: usize, column: usize, v: BigRational) {
        self.cells[depth * COLUMNS + column] = v;
    }

    /// Row-major flattening: depth-major, columns variables then arity 0..5.
    pub fn flatten(&self) -> FeatureVector {
        FeatureVector {
            entries: self.cells.clone(),
        }
    }

    pub fn unflatten(v: &FeatureVector) -> TermMatrix {
        TermMatrix {
            cells: v.entries.clone(),
        }
    }

    pub fn nonzero_cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for d in 0..DEPTHS {
            for c in 0..COLUMNS {
                if !self.get(d, c).is_zero() {
                    out.push((d, c));
                }
            }
        }
        out
    }
}

/// Flattened 49-entry feature vector.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub entries: Vec<BigRational>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn density(&self) -> f64 {
        let nonzero = self.entries.iter().filter(|e| !e.is_zero()).count();
        nonzero as f64 / self.entries.len() as f64
    }

    /// Lossy conversion for distance computations.
    pub fn to_f64(&self) -> Vec<f64> {
        use num::ToPrimitive;
        self.entries
            .iter()
            .map(|r| r.to_f64().unwrap_or(f64::MAX))
            .collect()
    }
}

/// Column for a node: variables in column 0, arity k in column k+1,
/// saturating at arity 5.
fn column_for(node: &Term) -> usize {
    match node {
        Term::Variable(_) => 0,
        Term::Constant(_) => 1,
        Term::Application(_, args) => {
            let arity = args.len();
            if arity > COLUMNS - 2 {
                log::debug!("arity {} saturates into the arity-5 column", arity);
                COLUMNS - 1
            } else {
                arity + 1
            }
        }
    }
}

/// Extracts the feature matrix of `term` under the given symbol values.
/// Variables are valued by their 1-based first-occurrence rank within the
/// term.
pub fn extract_matrix(term: &Term, values: &dyn SymbolValues) -> Result<TermMatrix, FeatureError> {
    let mut matrix = TermMatrix::zero();
    let var_order = term.variables();
    for (node, depth) in term.preorder() {
        if depth >= DEPTHS {
            log::debug!("dropping node at depth {} (matrix covers 0..6)", depth);
            continue;
        }
        let value = match node {
            Term::Variable(v) => {
                let rank = var_order.iter().position(|x| x == v).unwrap() + 1;
                BigRational::from_integer(BigInt::from(rank))
            }
            Term::Constant(lit) => values.constant_value(lit),
            Term::Application(f, _) => values
                .symbol_value(f)
                .ok_or_else(|| FeatureError::UnvaluedSymbol(f.to_string()))?,
        };
        let col = column_for(node);
        let cell = matrix.get(depth, col).clone();
        let combined = if cell.is_zero() {
            value
        } else {
            concat_values(&cell, &value)
        };
        matrix.set(depth, col, combined);
    }
    Ok(matrix)
}

pub fn extract_vector(term: &Term, values: &dyn SymbolValues) -> Result<FeatureVector, FeatureError> {
    Ok(extract_matrix(term, values)?.flatten())
}

/// Renders a rational in the canonical form used by concatenation:
/// integers without fraction digits, everything else with exactly three,
/// rounding half away from zero. Returns the digit string without sign or
/// decimal point, plus the number of fraction digits (0 or 3).
fn canonical_digits(r: &BigRational) -> (String, usize) {
    if r.is_integer() {
        (r.to_integer().abs().to_string(), 0)
    } else {
        let scaled = r.abs() * BigRational::from_integer(BigInt::from(1000));
        let floor = scaled.floor().to_integer();
        let frac = &scaled - BigRational::from_integer(floor.clone());
        let rounded = if frac * BigInt::from(2) >= BigRational::from_integer(BigInt::from(1)) {
            floor + 1
        } else {
            floor
        };
        let mut digits = rounded.to_string();
        while digits.len() < 4 {
            digits.insert(0, '0');
        }
        (digits, 3)
    }
}

/// Value concatenation `a::b`: append the digits of `b` to the canonical
/// rendering of `a`, keeping `a`'s sign and decimal-point position, and
/// read the result back as a number. When `a` renders without a decimal
/// point the appended digits extend the integer part. Examples:
/// `4::5 = 45`, `18.970::12.974 = 18.97012974`.
pub fn concat_values(a: &BigRational, b: &BigRational) -> BigRational {
    let (da, fa) = canonical_digits(a);
    let (db, _) = canonical_digits(b);
    let all = format!("{}{}", da, db);
    let fraction_digits = if fa == 0 { 0 } else { fa + db.len() };
    let result = BigRational::new(
        all.parse::<BigInt>().expect("digit string"),
        BigInt::from(10).pow(fraction_digits as u32),
    );
    if a.is_negative() {
        -result
    } else {
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::FromPrimitive;
    use std::collections::BTreeMap;

    fn rat(s: &str) -> BigRational {
        if let Some((p, q)) = s.split_once('/') {
            BigRational::new(p.parse().unwrap(), q.parse().unwrap())
        } else if let Some((i, f)) = s.split_once('.') {
            let digits = format!("{}{}", i.trim_start_matches('-'), f);
            let v = BigRational::new(
                digits.parse().unwrap(),
                BigInt::from(10).pow(f.len() as u32),
            );
            if s.starts_with('-') {
                -v
            } else {
                v
            }
        } else {
            BigRational::from_integer(s.parse().unwrap())
        }
    }

    #[test]
    fn concat_of_integers_appends_digits() {
        assert_eq!(
            concat_values(&rat("4"), &rat("5")),
            BigRational::from_i64(45).unwrap()
        );
        assert_eq!(
            concat_values(&rat("1"), &rat("1")),
            BigRational::from_i64(11).unwrap()
        );
    }

    #[test]
    fn concat_keeps_first_operand_point() {
        // apply the rendering rule by hand: "18.970" ++ "12974"
        assert_eq!(
            concat_values(&rat("18.970"), &rat("12.974")),
            rat("18.97012974")
        );
    }

    #[test]
    fn concat_rounds_to_three_fraction_digits() {
        // 0.8125 renders as 0.813
        assert_eq!(concat_values(&rat("0.8125"), &rat("2")), rat("0.8132"));
    }

    struct Fixed(BTreeMap<String, BigRational>);

    impl SymbolValues for Fixed {
        fn symbol_value(&self, s: &Symbol) -> Option<BigRational> {
            self.0.get(s.as_str()).cloned()
        }
        fn constant_value(&self, lit: &Literal) -> BigRational {
            match lit {
                Literal::Int(n) => {
                    // matches the number formula for the test values used
                    if n.is_zero() {
                        rat("4.3")
                    } else {
                        rat("4.3") + BigRational::new(BigInt::from(1), BigInt::from(100) * n.abs())
                    }
                }
                Literal::Rat(r) => rat("4.3") + r.abs() / BigInt::from(10),
                Literal::Bool(_) => rat("4.5"),
            }
        }
    }

    fn fixed() -> Fixed {
        let mut m = BTreeMap::new();
        for (k, v) in [
            ("implies", "5.1875"),
            ("natp", "6.5"),
            ("equal", "5.1"),
            ("fact-tail", "18.970"),
            ("fact", "12.974"),
            ("if", "5.15"),
            ("zp", "6.1"),
            ("*", "4.1875"),
            ("-", "4.15"),
        ] {
            m.insert(k.to_string(), rat(v));
        }
        Fixed(m)
    }

    fn fact_fact_tail() -> Term {
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

    fn fact_body() -> Term {
        Term::app(
            "if",
            vec![
                Term::app("zp", vec![Term::var("n")]),
                Term::int(1),
                Term::app(
                    "*",
                    vec![
                        Term::var("n"),
                        Term::app("fact", vec![Term::app("-", vec![Term::var("n"), Term::int(1)])]),
                    ],
                ),
            ],
        )
    }

    #[test]
    fn theorem_matrix_nonzero_cells() {
        let m = extract_matrix(&fact_fact_tail(), &fixed()).unwrap();
        // columns: 0 = variables, k+1 = arity k
        assert_eq!(
            m.nonzero_cells(),
            vec![(0, 3), (1, 2), (1, 3), (2, 0), (2, 2), (3, 0)]
        );
        // [fact-tail]::[fact] at depth 2, arity 1
        assert_eq!(m.get(2, 2), &rat("18.97012974"));
        // [n]::[n] for the two depth-3 variables
        assert_eq!(m.get(3, 0), &rat("11"));
        assert_eq!(m.get(2, 0), &rat("1"));
    }

    #[test]
    fn definition_matrix_nonzero_cells() {
        let m = extract_matrix(&fact_body(), &fixed()).unwrap();
        assert_eq!(
            m.nonzero_cells(),
            vec![(0, 4), (1, 1), (1, 2), (1, 3), (2, 0), (2, 2), (3, 3), (4, 0), (4, 1)]
        );
        assert_eq!(m.get(2, 0), &rat("11"));
        assert_eq!(m.get(4, 0), &rat("1"));
    }

    #[test]
    fn single_variable_matrix() {
        let m = extract_matrix(&Term::var("x"), &fixed()).unwrap();
        assert_eq!(m.nonzero_cells(), vec![(0, 0)]);
        assert_eq!(m.get(0, 0), &rat("1"));
    }

    #[test]
    fn unvalued_symbol_is_an_error() {
        let t = Term::app("mystery", vec![Term::var("x")]);
        assert_eq!(
            extract_matrix(&t, &fixed()),
            Err(FeatureError::UnvaluedSymbol("mystery".into()))
        );
    }

    #[test]
    fn flatten_unflatten_roundtrip() {
        let m = extract_matrix(&fact_body(), &fixed()).unwrap();
        assert_eq!(TermMatrix::unflatten(&m.flatten()), m);
    }

    #[test]
    fn deep_nodes_are_dropped() {
        // chain of depth 8: only the first 7 levels contribute
        let mut t = Term::var("x");
        for _ in 0..8 {
            t = Term::app("natp", vec![t]);
        }
        let m = extract_matrix(&t, &fixed()).unwrap();
        assert_eq!(m.nonzero_cells().len(), 7);
    }
}
