//! Accelerated alternating minimization for smooth block-structured
//! objectives, with entropic optimal transport and Wasserstein barycenters
//! as the main applications.
//!
//! * [`aam`] is the generic solver.
//! * [`pdaam`] runs it on the dual of a linearly constrained problem and
//!   recovers primal points with feasibility and gap certificates.
//! * [`ot`] and [`barycenter`] provide Sinkhorn, IBP and their accelerated
//!   versions, plus the rounding driver for unregularized OT.
//! * [`oracle`] holds independent references used by the tests.

pub mod aam;
pub mod barycenter;
mod clock;
pub mod error;
pub mod instances;
mod linalg;
pub mod logmath;
pub mod objectives;
pub mod oracle;
pub mod ot;
pub mod pdaam;

pub use clock::Stopwatch;
pub use error::{Error, Result};
pub use logmath::{CostMatrix, Histogram, LogKernel};
pub use ot::{EntropicOTProblem, OTDualPoint, OtMethod, TraceRow, TransportPlan};
