//! Position auctions with refined relevance predictions: value
//! distributions, the alpha-virtual-value mechanism, prediction schemes and
//! their refinements, and the numerical checks built on top of them.

pub mod analysis;
pub mod auction;
pub mod dists;
pub mod error;
pub mod prediction;
pub mod rng;
pub mod tolerance;

pub use auction::{allocate, objective, welfare, Advertiser, Assignment, AuctionInstance, SlotProfile};
pub use dists::DistributionSpec;
pub use error::{Error, Result};
pub use prediction::{PredictionScheme, RefinementStructure};
pub use tolerance::Tolerances;
