//! Finite-distribution algebra shared by every other module.

mod discrete_normal;
mod hypergeom;
mod pmf;
mod rng;
mod sampling;

pub use discrete_normal::{
    discrete_normal, discrete_normal_pmf, std_normal_density, DiscreteNormal, DiscreteNormalParams,
};
pub use hypergeom::{hoeffding_tail, hypergeom_pmf, hypergeom_pmf_truncated, HypergeomParams};
pub use pmf::{convolve, difference_law, tv_distance, FinitePmf, MASS_TOLERANCE, TAIL_CUTOFF};
pub use rng::RngStream;
pub use sampling::{sample, sample_hypergeom, HypergeomSampler, ModeOutwardSampler};
