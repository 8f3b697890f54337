//! Proof-pattern discovery and lemma suggestion for an ACL2-style
//! applicative Lisp subset.
//!
//! The library parses corpora of first-order functional definitions and
//! theorems, turns term trees into dense depth-by-arity feature matrices,
//! clusters them to surface families of related statements, and mutates
//! the lemmas of statistically similar theorems into counterexample-tested
//! lemma suggestions for a target theorem.
//!
//! The runnable examples cover each capability end to end:
//!
//! ```bash
//! cargo run -p acl2ml --example cluster_theorems
//! cargo run -p acl2ml --example cluster_definitions
//! cargo run -p acl2ml --example feature_matrix
//! cargo run -p acl2ml --example eval_term
//! cargo run -p acl2ml --example check_conjecture
//! cargo run -p acl2ml --example suggest_lemma
//! ```
//!
//! The same functionality is exposed by the `acl2ml` binary:
//!
//! ```bash
//! acl2ml suggest corpus.lisp --target fib-fib-tail
//! ```

pub mod analogy;
pub mod cli;
pub mod cluster;
pub mod corpus;
pub mod features;
pub mod interp;
pub mod term;
pub mod valuation;

/// Corpora bundled with the tool.
pub mod corpora {
    /// Standard prelude prepended to every corpus loaded by the CLI.
    pub const PRELUDE: &str = include_str!("../corpora/prelude.lisp");

    /// Demonstration corpus used by the examples and tests.
    pub const MINI_CORPUS: &str = include_str!("../corpora/mini.lisp");

    /// Names defined by the prelude, treated as background theory.
    pub const PRELUDE_FNS: &[&str] = &[
        "zp",
        "natp",
        "true-listp",
        "nat-listp",
        "len",
        "app",
        "rev",
    ];
}

pub use corpus::{Corpus, Definition, MeasureScheme, Sort, SortTable, Theorem};
pub use term::{Literal, Symbol, Term};
