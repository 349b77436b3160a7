//! Measurement-compatibility analysis and quasiprobability distributions for
//! partitioned spin models.
//!
//! The crate is organised in layers:
//!
//! * [`densemat`] — dense complex matrices, Kronecker products, Hermitian
//!   eigendecomposition, and time evolution.
//! * [`pauli`] — exact symbolic Pauli-string algebra (products, commutators,
//!   Hilbert–Schmidt inner products).
//! * [`model`] — the Hamiltonian text grammar, site partitions, structural
//!   classification of terms, and interaction decompositions.
//! * [`compat`] — the commutator-constraint hierarchy deciding whether
//!   disjoint measurement families admit a joint classical description.
//! * [`kdq`] — quasiprobability and two-point-measurement distributions for
//!   timed measurement scenarios, with non-classicality measures.
//! * [`witness`] — randomized search for scenarios whose distributions
//!   certify non-classicality, and the redundancy screening built on it.
//!
//! Entry points most users want: [`model::Model::from_json`],
//! [`compat::check_closure`], [`kdq::kdq_distribution`], and
//! [`witness::screen_darwinism`].

pub mod compat;
pub mod densemat;
pub mod kdq;
pub mod model;
pub mod pauli;
pub mod witness;
pub mod zoo;

use std::fmt;

/// Unified error type for every fallible operation in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Matrix or operator dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A requested dense object would exceed the configured dimension cap.
    #[error("dimension {dim} exceeds the configured cap of {max}")]
    Capacity { dim: usize, max: usize },

    /// A matrix required to be Hermitian is not, within tolerance.
    #[error("matrix is not Hermitian: max |M - M^dagger| element = {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    /// The Hamiltonian text failed to parse or produced a non-Hermitian sum.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// Semantically invalid input (bad partition, malformed scenario, ...).
    /// Carries every failure found, one per line.
    #[error("invalid input:\n{}", .0.join("\n"))]
    Validation(Vec<String>),

    /// A computation exceeded its configured work budget. When a partial
    /// compatibility report is available it is attached.
    #[error("resource budget exhausted: {what}")]
    Resource {
        what: String,
        partial: Option<Box<compat::CompatReport>>,
    },

    /// Underlying I/O failure when reading model or scenario files.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed JSON in a model or scenario file.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(msg: impl fmt::Display) -> Self {
        Error::Shape(msg.to_string())
    }

    pub(crate) fn validation(msg: impl fmt::Display) -> Self {
        Error::Validation(vec![msg.to_string()])
    }
}

pub type Result<T> = std::result::Result<T, Error>;

// Compile every fenced Rust block in the guide as a doctest so the book can
// never drift out of sync with the API.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            pub struct $name;
        };
    }

    chapter!(Readme, "../../../README.md");
    chapter!(Introduction, "../../../book/src/introduction.md");
    chapter!(PauliAlgebra, "../../../book/src/pauli-algebra.md");
    chapter!(DenseKernel, "../../../book/src/dense-kernel.md");
    chapter!(ModelsAndStructure, "../../../book/src/models-and-structure.md");
    chapter!(Compatibility, "../../../book/src/compatibility.md");
    chapter!(Distributions, "../../../book/src/distributions.md");
    chapter!(Screening, "../../../book/src/screening.md");
    chapter!(CommandLine, "../../../book/src/command-line.md");
}
