//! Cap-and-price uniform-price auctions for pollution licenses.
//!
//! Every quantity is an exact rational. The crate evaluates auctions under
//! truthful and strategic bidding, searches auction parameters for expected
//! welfare, enumerates grid equilibria, and checks welfare inequalities on
//! concrete instances as self-contained certificates.

pub mod auction;
pub mod bounds;
pub mod equilibrium;
pub mod error;
pub mod generate;
pub mod instance_file;
pub mod market;
pub mod par;
pub mod rational;
pub mod welfare;

pub use auction::{AuctionParams, Cap, CaseTag, Ceiling, Clearing, Outcome, PricingRule};
pub use error::{Error, Result};
pub use market::{CostCurve, Extension, FirmDistribution, MarginalVector, MarketInstance};
pub use rational::Rational;
pub use welfare::{OptResult, ScenarioTable};
