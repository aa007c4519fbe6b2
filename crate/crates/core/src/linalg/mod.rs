//! Small self-contained linear algebra: CSR storage, dense kernels,
//! an envelope LDLᵀ factorization and preconditioned CG.

mod cg;
mod csr;
mod dense;
mod skyline;

pub use cg::{pcg, CgOutcome};
pub use csr::{CsrMatrix, TripletBuilder};
pub use dense::{symmetric_eigen, DenseCholesky, DenseMatrix, SymmetricEigen};
pub use skyline::{Definiteness, SkylineLdl};
