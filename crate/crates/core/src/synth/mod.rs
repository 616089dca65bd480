//! Synthetic datasets shaped like published marginal tables, and the
//! integer-reconstruction oracle used to check them.

mod generate;
mod oracle;
mod profile;

pub use generate::{generate, generate_with, LogNormalFit};
pub use oracle::{apportion, build_2x2, reconstruct_counts, OracleError};
pub use profile::{
    sum_tolerance, EvasiveShares, Exclusions, FactorShares, FrequencyColumn, FrequencyShares,
    MarginalProfile, NumericMarginal, ProfileError, SpeedingShares, DEFAULT_PROFILE,
};
