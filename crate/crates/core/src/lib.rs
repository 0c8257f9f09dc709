//! Amphibious influence maximization: choose `b1` seed providers and `b2` seed consumers so
//! that activation flowing through a low-rank provider-to-consumer matrix and then through an
//! independent-cascade social network reaches as many consumers as possible.
//!
//! The solver enumerates a multiplicative net over the image of the matrix ([`net`]) and
//! runs two greedy passes per net point ([`sdg`]).

pub mod diffusion;
pub mod error;
pub mod generators;
pub mod greedy;
pub mod instance;
pub mod linalg;
pub mod net;
pub mod relaxation;
pub mod sdg;

pub use diffusion::{exact_sigma, ScenarioEstimator, SocialGraph, SpreadEstimate, StreamId};
pub use error::{Error, Result};
pub use greedy::{greedy_max, GreedyTrace, ObjectiveOracle};
pub use instance::{
    numerical_rank, parse_instance, serialize_instance, validate, AimInstance, Matrix, RankBasis, SocialEdge,
};
pub use net::{build_net, build_weak_net, EpsilonNet, Grid};
pub use relaxation::{IndicatorVector, LinearImagePoint};
pub use sdg::{approximation_ratio, brute_force_opt, solve, SdgConfig, SeedSolution, SolveReport};
