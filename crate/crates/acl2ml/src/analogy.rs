//! Analogy mappings and term tree mutation (placeholder).
