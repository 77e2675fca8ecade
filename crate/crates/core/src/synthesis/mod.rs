//! Exact synthesis-operator products: Gram blocks, hat-basis matrices,
//! adjoint evaluation and adjoint norms.

mod adjoint;
mod antiderivative;
mod gram;
mod hat;
mod norm;
mod quadrature;

pub use adjoint::{apply_adjoint, AdjointFunction, AdjointKind, ADJOINT_REFINEMENT};
pub use antiderivative::Antiderivative;
pub use gram::{gram_blocks, gram_dd, gram_td, gram_tt, green_kernel, stack_ab, GramBlocks};
pub use hat::{hat_matrices, HatMatrices, MAX_LEVEL};
pub use norm::{adjoint_norm, adjoint_norm_estimate, AdjointNormEstimate, MAX_MODES};
pub use quadrature::gl3;
