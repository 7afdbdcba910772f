//! Battery-health-aware scheduling for fleets of autonomous mobile robots.

pub mod audit;
pub mod baselines;
pub mod domain;
pub mod experiments;
pub mod formulation;
pub mod generate;
pub mod io;
pub mod matheuristic;
pub mod rng;
