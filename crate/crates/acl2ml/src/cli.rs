//! Command front-end (placeholder).
