//! Solvers for n-player continuous Guts and related recursive games.

pub mod bot;
pub mod coalition;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod model;
pub mod payoff;
pub mod recursive;
pub mod zerosum;

pub use error::{Error, Result};
pub use model::{make_grid, CoalitionIndex, Grid, MixedStrategy, StakedBimatrix};
pub use payoff::{RuleVariant, ThresholdProfile, WeenieStakes};
