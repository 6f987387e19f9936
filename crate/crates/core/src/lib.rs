//! Numerical analysis of finite-dimensional covariant representations, each
//! stored as one matrix `Ṽ : E⊗H → H`.
//!
//! Start with [`model::Representation`], then [`structure::is_regular`],
//! [`growth::check_growth`] and [`wold::wold_decompose`]. [`report::analyze`]
//! runs all of them and produces the CLI's JSON report.

pub mod error;
pub mod linalg;
pub mod model;
pub mod structure;
pub mod growth;
pub mod wold;
pub mod shifts;
pub mod gen;
pub mod verify;
pub mod report;

// The guide's code blocks run as doc-tests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/representations.md")]
    mod representations {}
    #[doc = include_str!("../../../book/src/subspaces.md")]
    mod subspaces {}
    #[doc = include_str!("../../../book/src/regularity.md")]
    mod regularity {}
    #[doc = include_str!("../../../book/src/growth.md")]
    mod growth {}
    #[doc = include_str!("../../../book/src/decomposition.md")]
    mod decomposition {}
    #[doc = include_str!("../../../book/src/shifts.md")]
    mod shifts {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
