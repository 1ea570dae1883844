pub mod contact;
pub mod error;
pub mod expr;
pub mod report;
pub mod spectral;
pub mod submanifold;
pub mod tanno;
pub mod tensor;
pub mod variation;
