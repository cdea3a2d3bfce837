//! Orthogonal vector fields over 2x2 block algebras at finite (desk) scale.
//!
//! The algebra under study is `N = M (x) M2`, where `M` is a finite atomic
//! model of a commutative algebra of bounded measurable functions: an element
//! of `N` is one 2x2 complex matrix per atom. An orthogonal vector field (OVF)
//! is a linear map `F: N -> H` into a complex Hilbert space that sends
//! orthogonal projections (`pq = 0`) to orthogonal vectors.
//!
//! The crate provides:
//!
//! * [`measure`]: the atomic measure space, center elements, block elements,
//!   matrix units and range projections;
//! * [`projection`]: the canonical parametric form of projections in `N`,
//!   its inverse, the algebraic orthogonality conditions and an exact
//!   orthogonal-pair sampler;
//! * [`field`]: OVFs as basis tables, their center reductions, and the
//!   associated functional densities;
//! * [`verify`]: the identity suite an OVF must satisfy, with witness
//!   reporting;
//! * [`synthesis`]: reconstruction of a block OVF from four commutative
//!   reductions, plus generator families for test instances;
//! * [`stationarity`]: the stationary decomposition `<F(x),F(y)> =
//!   phi(y*x) + psi(xy*)`: closed-form factor solution, feasibility
//!   inequalities, and the end-to-end solver;
//! * [`refinement`]: the level-set partition approximation of the
//!   decomposition parameter over a simulated continuous base space;
//! * [`io`]: JSON persistence with reproducible 17-significant-digit
//!   number formatting.

pub mod error;
pub mod field;
pub mod io;
pub mod linalg;
pub mod measure;
pub mod projection;
pub mod refinement;
pub mod stationarity;
pub mod synthesis;
pub mod tol;
pub mod verify;

pub use error::CoreError;
pub use field::{CommutativeFieldTable, DensityReport, FunctionalDensity, VectorFieldTable};
pub use linalg::{HVec, Mat2, C64};
pub use measure::{BlockElement, CenterElement, MeasureSpace};
pub use projection::CanonicalProjection;
pub use refinement::{Partition, PiecewisePoly, ScalarFieldProfile};
pub use stationarity::{FactorData, StationaryPair};
pub use synthesis::{FactorCoordinates, GeneratorSpec};
