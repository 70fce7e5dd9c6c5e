//! Exact integer engine for twisted complexes over a partial dg-category whose
//! base objects are bounded complexes of free abelian groups.

pub mod ccomplex;
pub mod cli;
pub mod complex;
pub mod dgcat;
pub mod monoidal;
pub mod object;
pub mod pretr;
pub mod random;
pub mod tr;
pub mod document;
pub mod error;
pub mod zmodule;

pub use complex::{GradedMap, HomComplex, ZComplex};
pub use error::{Error, Result};
pub use zmodule::{FgAbGroup, IntMatrix};
