pub mod criteria;
pub mod empirics;
pub mod error;
pub mod expr;
pub mod grid;
pub mod quadrature;
pub mod report;
pub mod scalar;
pub mod simulate;
pub mod special;
pub mod symbol;

pub use error::{FellerError, Result};
pub use report::Verdict;
pub use scalar::Scalar;

pub type SymbolModelF64 = symbol::SymbolModel<f64>;
pub type LevyCharacteristicsF64 = symbol::LevyCharacteristics<f64>;
pub type StableLikeSpecF64 = symbol::StableLikeSpec<f64>;
pub type BernsteinSpecF64 = symbol::BernsteinSpec<f64>;
pub type IntegralResultF64 = quadrature::IntegralResult<f64>;
pub type EnvelopeF64 = criteria::Envelope<f64>;
pub type EnvelopeF32 = criteria::Envelope<f32>;
