//! Grid-based parts of the laboratory: the Fourier-spectral sR Laplacian and its
//! eigensolver, Hermite transforms of sampled fields, and the command-line runner.

pub mod cli;
pub mod grid;
pub mod hermite;
pub mod lobpcg;
