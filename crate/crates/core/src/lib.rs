#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod bound;
pub mod chaining;
pub mod eigenmax;
pub mod error;
pub mod linalg;
pub mod mc;
pub mod model;
pub mod quadform;
pub mod rng;
pub mod roots;
pub mod special;

pub use error::{BoundCondition, Error, Result};
pub use linalg::SpdMatrix;
pub use model::FieldModel;
