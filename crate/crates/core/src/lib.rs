//! Relational schema normalization: dependency inference, normal-form
//! classification, two decomposition methods, verification and quizzes.

pub mod classify;
pub mod cookbook;
pub mod diagram;
pub mod dsl;
pub mod error;
pub mod gift;
pub mod inference;
pub mod model;
pub mod quiz;
pub mod verify;

pub use error::Error;
pub use model::{AttributeSet, Decomposition, FunctionalDependency, MultivaluedDependency, RelationSchema};
