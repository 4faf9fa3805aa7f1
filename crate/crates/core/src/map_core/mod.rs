//! The glued almost Anosov map and its pointwise certificates.

mod bump;
pub(crate) mod certify;
mod map;
mod spec;

use thiserror::Error;

use crate::geometry::TorusPoint;

pub use bump::{BumpProfile, RadialBump};
pub use certify::{
    check_cone_invariance, check_nondegeneracy, hyperbolicity_certificate, smoothness_check,
    sweep_hyperbolicity, ConeReport, ConeSide, ConeViolation, HyperbolicityReport, NondegeneracyReport,
    SmoothnessReport, SweepReport, DEFAULT_CONE_HALF_ANGLE,
};
pub use map::{normal_form, normal_form_jacobian, AlmostAnosovMap, Eigenbasis, Region};
pub use spec::{validate_spec, violations_json, ChartKind, MapSpec, SpecViolation, GLUE_PREDICATES, PREDICATES};

#[derive(Debug, Clone, Error)]
pub enum MapError {
    #[error("invalid map spec: {}", join(.0))]
    InvalidSpec(Vec<SpecViolation>),
    #[error("inverse did not converge at {target} (residual {residual:.3e} after {iterations} iterations)")]
    InverseNotConverged {
        target: TorusPoint,
        residual: f64,
        iterations: usize,
    },
}

fn join(v: &[SpecViolation]) -> String {
    v.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ")
}
