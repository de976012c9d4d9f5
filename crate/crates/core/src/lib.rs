//! Biased linearity testing over the p-biased hypercube.
//!
//! The crate covers four connected pieces:
//!
//! * [`distributions`]: the class of even-weight distributions with `mu_p`
//!   marginals, explicit pairwise-independent constructions, the
//!   Hamming-symmetric feasibility search, and structural predicates
//!   (pairwise-independent coordinates, `eta`, BLR containment).
//! * [`polyalg`] and [`hermite`]: exact sparse polynomial algebra and Gaussian
//!   Hermite product moments.
//! * [`witness`]: the Gaussian counterexample pipeline that turns a
//!   distribution without pairwise-independent coordinates into a cube
//!   function that passes `Lin(nu)` with noticeable bias yet has no large
//!   character correlation.
//! * [`cube`] and [`lintest`]: cube functions, biased Fourier analysis, and
//!   exact / Monte Carlo execution of the test itself.
//!
//! All distribution arithmetic is exact ([`Rational`]); floating point only
//! appears where a quantity is inherently approximate.

pub mod cli;
pub mod cube;
pub mod distributions;
pub mod error;
pub mod hermite;
pub mod io;
pub mod lintest;
pub mod mc;
pub mod polyalg;
pub mod quadrature;
pub mod rational;
pub mod witness;

pub use cube::{CharacterIndex, CubeFunction, CubePoint, RangeTag};
pub use distributions::{BiasedDistribution, FeasibilityCertificate};
pub use error::{Error, Result};
pub use hermite::CovarianceMatrix;
pub use lintest::TestReport;
pub use polyalg::SparsePoly;
pub use rational::Rational;
pub use witness::{BoundedWitnessFunction, HermiteWitness};
