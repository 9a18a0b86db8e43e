//! Model order reduction: POD basis from response snapshots and Daubechies
//! wavelet sequence compression.
//!
//! Inputs and outputs share one basis: the response snapshots define the POD
//! modes, and loads are projected with the transpose of the same matrix so
//! both live in one reduced subspace.

mod pod;
mod wavelet;

pub use pod::{build_snapshot_matrix, pod_truncate, ReducedBasis};
pub use wavelet::{
    wavelet_compress, wavelet_decompose, wavelet_reconstruct, wavelet_reconstruct_full,
    WaveletConfig,
};
