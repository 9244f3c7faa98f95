//! Dense complex linear algebra and tensor-product bookkeeping.

mod expm;
mod layout;
mod matrix;
mod ops;

pub use expm::expm_oracle;
pub use layout::{HilbertLayout, Site, QUTRIT_DIM};
pub use matrix::{
    basis_ket, density_from_ket, inner, kron_vec, norm, normalize, ComplexMatrix, Ket, C64, I, ONE, ZERO,
};
pub use ops::{embed, embed_product, kron, partial_trace, primitive, transfer, Level, Primitive};
