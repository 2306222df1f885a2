//! Monte Carlo samplers built on the Poisson decompositions of the model.
//!
//! Nothing here discretises a path: families are Poisson points, their masses
//! are exact transition draws, and ancestor counts are conditionally Poisson.
//! The only approximations are the age truncation `s_min` of the population
//! sampler and the jump cutoff ε of the gamma-measure sampler, both reported.

pub mod ancestors;
pub mod experiments;
pub mod gamma_measure;
pub mod genealogy;
pub mod population;
pub mod rng;
pub mod theta_sampler;

pub use ancestors::{evolve_and_count, AncestorSample, AncestorSampler};
pub use gamma_measure::GammaMeasureSampler;
pub use genealogy::{sample_a_theta, sample_za_given_a, GenealogySample, GenealogySampler, TmrcaSampler};
pub use population::{sample_population, sample_theta_star, FamilyRecord, PopulationOptions, PopulationSample, PopulationSampler};
pub use rng::{replica_rng, run_replicas};
pub use theta_sampler::{ThetaSampler, ThetaWeight};
