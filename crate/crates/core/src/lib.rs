//! Optimal piecewise mechanisms for local differential privacy on bounded
//! classical and circular domains.

pub mod analytics;
pub mod density;
pub mod domain;
pub mod error;
pub mod estimation;
pub mod mechanisms;
pub mod metric;
pub mod polar;
pub mod solver;
pub mod truncate;

pub use density::{Piece, PiecewiseDensity, Transform};
pub use domain::{Interval, Topology};
pub use error::{Error, Result};
pub use estimation::{Dataset, EstimationReport, Task};
pub use mechanisms::{MechanismOutput, MechanismSpec, Perturber};
pub use metric::ErrorMetric;
pub use polar::{BudgetSplit, PolarPoint};
pub use truncate::{truncate, TruncatedDensity};
