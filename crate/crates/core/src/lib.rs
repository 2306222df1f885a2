//! Analytic laws and exact samplers for a stationary quadratic continuous-state
//! branching population fed by Poisson immigration of mutant families.
//!
//! * [`kernel`]: single-family closed forms and exact transition samplers.
//! * [`measure`]: the mutation rate measure μ and its θ-integrals.
//! * [`analytics`]: genealogical laws (TMRCA, MRCA type, bottleneck, ancestor
//!   counts, fluctuation limits, stable-case constants).
//! * [`sim`]: Monte Carlo samplers of the population and its genealogy.
//! * [`stats`]: summary statistics and hypothesis tests used for validation.

pub mod analytics;
pub mod error;
pub mod kernel;
pub mod measure;
pub mod quadrature;
pub mod serde_ext;
pub mod sim;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use kernel::{BranchingParams, FamilyLaw};
pub use measure::{Atom, MutationMeasure, TabulatedDensity};
pub use quadrature::{Estimate, Quadrature};
pub use analytics::StationaryModel;
