pub mod backgrounds;
pub mod expr;
pub mod hypotheses;
pub mod mass;
pub mod numerics;
pub mod quadrature;
pub mod tensor;
