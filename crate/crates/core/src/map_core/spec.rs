use serde::{Deserialize, Serialize};
use std::fmt;

use super::bump::BumpProfile;

/// Coordinates in which the local normal form `(x(1+phi), y(1-psi))` is written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartKind {
    /// Axes along the unstable and stable eigenvectors of `A`.
    #[default]
    Eigen,
    /// The standard `(x, y)` axes of the torus.
    Standard,
}

/// Parameters of the glued map.
///
/// JSON form: `{"A": [[2,1],[1,1]], "a": 4, "b": 3, "c": 1, "d": 1,
/// "r0": 0.004, "r1": 0.05, "bump": "smooth", "seed": 1}` with an optional
/// `"chart": "eigen" | "standard"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    #[serde(rename = "A")]
    pub matrix: [[i64; 2]; 2],
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub r0: f64,
    pub r1: f64,
    #[serde(default)]
    pub bump: BumpProfile,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub chart: ChartKind,
}

impl Default for MapSpec {
    fn default() -> Self {
        Self {
            matrix: [[2, 1], [1, 1]],
            a: 4.0,
            b: 3.0,
            c: 1.0,
            d: 1.0,
            r0: 0.004,
            r1: 0.05,
            bump: BumpProfile::Smooth,
            seed: 1,
            chart: ChartKind::Eigen,
        }
    }
}

/// One violated parameter constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum SpecViolation {
    NonFinite(&'static str),
    DeterminantNotOne { det: i64 },
    NotHyperbolic { trace: i64 },
    NegativeEigenvalues { trace: i64 },
    RadiusNotPositive,
    RadiusOrder,
    OuterRadiusTooLarge,
    GlueNotInjective { ratio: f64, lambda: f64 },
    CoefficientNotPositive(&'static str),
    StableDominance,
    CoefficientDeterminant { value: f64 },
}

impl fmt::Display for SpecViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecViolation::NonFinite(name) => write!(f, "{name} is not finite"),
            SpecViolation::DeterminantNotOne { det } => write!(f, "det A = 1 violated (det A = {det})"),
            SpecViolation::NotHyperbolic { trace } => {
                write!(f, "A not hyperbolic (|trace A| = {} <= 2)", trace.abs())
            }
            SpecViolation::NegativeEigenvalues { trace } => write!(
                f,
                "trace A > 2 violated (trace A = {trace}; the glue needs positive eigenvalues)"
            ),
            SpecViolation::RadiusNotPositive => write!(f, "0 < r0 violated"),
            SpecViolation::RadiusOrder => write!(f, "r0 < r1 violated"),
            SpecViolation::OuterRadiusTooLarge => write!(f, "r1 < 1/4 violated"),
            SpecViolation::GlueNotInjective { ratio, lambda } => write!(
                f,
                "r1 > lambda_u * r0 violated (r1/r0 = {ratio:.4}, lambda_u = {lambda:.4}; the glued map cannot be injective)"
            ),
            SpecViolation::CoefficientNotPositive(name) => write!(f, "{name} > 0 violated"),
            SpecViolation::StableDominance => write!(f, "b > 2d violated"),
            SpecViolation::CoefficientDeterminant { value } => {
                write!(f, "a·d − b·c > 0 violated (a·d − b·c = {value})")
            }
        }
    }
}

type Predicate = fn(&MapSpec) -> Vec<SpecViolation>;

fn check_finite(s: &MapSpec) -> Vec<SpecViolation> {
    [("a", s.a), ("b", s.b), ("c", s.c), ("d", s.d), ("r0", s.r0), ("r1", s.r1)]
        .into_iter()
        .filter(|(_, v)| !v.is_finite())
        .map(|(n, _)| SpecViolation::NonFinite(n))
        .collect()
}

fn check_det(s: &MapSpec) -> Vec<SpecViolation> {
    let det = s.det();
    if det != 1 {
        vec![SpecViolation::DeterminantNotOne { det }]
    } else {
        vec![]
    }
}

fn check_hyperbolic(s: &MapSpec) -> Vec<SpecViolation> {
    let trace = s.trace();
    if trace.abs() <= 2 {
        vec![SpecViolation::NotHyperbolic { trace }]
    } else {
        vec![]
    }
}

fn check_positive_eigenvalues(s: &MapSpec) -> Vec<SpecViolation> {
    let trace = s.trace();
    if trace < -2 {
        vec![SpecViolation::NegativeEigenvalues { trace }]
    } else {
        vec![]
    }
}

fn check_radii(s: &MapSpec) -> Vec<SpecViolation> {
    let mut v = Vec::new();
    // NaN fails every comparison and is reported by check_finite
    if s.r0 <= 0.0 {
        v.push(SpecViolation::RadiusNotPositive);
    }
    if s.r0 >= s.r1 {
        v.push(SpecViolation::RadiusOrder);
    }
    if s.r1 >= 0.25 {
        v.push(SpecViolation::OuterRadiusTooLarge);
    }
    v
}

fn check_glue_room(s: &MapSpec) -> Vec<SpecViolation> {
    let trace = s.trace();
    if trace.abs() <= 2 || s.r0 <= 0.0 || !s.r0.is_finite() || !s.r1.is_finite() {
        return vec![];
    }
    let t = trace.abs() as f64;
    let lambda = (t + (t * t - 4.0).sqrt()) / 2.0;
    let ratio = s.r1 / s.r0;
    if ratio <= lambda {
        vec![SpecViolation::GlueNotInjective { ratio, lambda }]
    } else {
        vec![]
    }
}

fn check_coefficients(s: &MapSpec) -> Vec<SpecViolation> {
    [("a", s.a), ("b", s.b), ("c", s.c), ("d", s.d)]
        .into_iter()
        .filter(|(_, v)| *v <= 0.0)
        .map(|(n, _)| SpecViolation::CoefficientNotPositive(n))
        .collect()
}

fn check_stable_dominance(s: &MapSpec) -> Vec<SpecViolation> {
    if s.b > 2.0 * s.d {
        vec![]
    } else {
        vec![SpecViolation::StableDominance]
    }
}

fn check_coefficient_determinant(s: &MapSpec) -> Vec<SpecViolation> {
    let value = s.a * s.d - s.b * s.c;
    if value > 0.0 {
        vec![]
    } else {
        vec![SpecViolation::CoefficientDeterminant { value }]
    }
}

/// Every constraint, each evaluated on its own.
pub const PREDICATES: &[Predicate] = &[
    check_finite,
    check_det,
    check_hyperbolic,
    check_radii,
    check_coefficients,
    check_stable_dominance,
    check_coefficient_determinant,
];

/// Conditions the glue itself needs on top of [`PREDICATES`]. A spec that
/// fails one of these still validates, but the glued map is not a
/// diffeomorphism and the certificates will say so.
pub const GLUE_PREDICATES: &[Predicate] = &[check_positive_eigenvalues, check_glue_room];

impl MapSpec {
    pub fn det(&self) -> i64 {
        let m = self.matrix;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn trace(&self) -> i64 {
        self.matrix[0][0] + self.matrix[1][1]
    }

    pub fn violations(&self) -> Vec<SpecViolation> {
        PREDICATES.iter().flat_map(|p| p(self)).collect()
    }

    pub fn glue_warnings(&self) -> Vec<SpecViolation> {
        GLUE_PREDICATES.iter().flat_map(|p| p(self)).collect()
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("MapSpec serializes")
    }
}

/// Returns the spec when every constraint holds, otherwise all violations.
pub fn validate_spec(spec: MapSpec) -> Result<MapSpec, Vec<SpecViolation>> {
    let v = spec.violations();
    if v.is_empty() {
        Ok(spec)
    } else {
        Err(v)
    }
}

/// Violations as a JSON array of strings.
pub fn violations_json(v: &[SpecViolation]) -> String {
    let msgs: Vec<String> = v.iter().map(|e| e.to_string()).collect();
    serde_json::to_string(&msgs).expect("strings serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn messages(spec: MapSpec) -> Vec<String> {
        validate_spec(spec)
            .err()
            .unwrap_or_default()
            .iter()
            .map(|v| v.to_string())
            .collect()
    }

    #[test]
    fn default_spec_is_valid() {
        assert!(validate_spec(MapSpec::default()).is_ok());
    }

    #[test]
    fn cat_matrix_with_reference_coefficients_is_valid() {
        // det = 1, trace = 3, b = 3 > 2d = 2, ad - bc = 4 - 3 = 1 > 0
        let spec = MapSpec {
            r0: 0.02,
            r1: 0.05,
            ..MapSpec::default()
        };
        assert!(validate_spec(spec.clone()).is_ok());
        // r1/r0 = 2.5 < lambda_u: valid parameters, but no room for an injective glue
        let w = spec.glue_warnings();
        assert_eq!(w.len(), 1);
        assert!(w[0].to_string().contains("cannot be injective"));
        assert!(MapSpec::default().glue_warnings().is_empty());
    }

    #[test]
    fn parabolic_matrix_is_rejected() {
        let msgs = messages(MapSpec {
            matrix: [[1, 1], [0, 1]],
            ..MapSpec::default()
        });
        assert!(msgs.iter().any(|m| m.contains("A not hyperbolic")), "{msgs:?}");
    }

    #[test]
    fn coefficient_determinant_is_checked() {
        // a d - b c = 2 - 8 = -6
        let msgs = messages(MapSpec {
            a: 2.0,
            b: 8.0,
            c: 1.0,
            d: 1.0,
            ..MapSpec::default()
        });
        assert_eq!(msgs.len(), 1, "{msgs:?}");
        assert!(msgs[0].contains("a·d − b·c > 0 violated"));
        assert!(msgs[0].contains("-6"));
    }

    #[test]
    fn radius_constraints() {
        let msgs = messages(MapSpec {
            r1: 0.3,
            ..MapSpec::default()
        });
        assert!(msgs.iter().any(|m| m.contains("r1 < 1/4")));
        let msgs = messages(MapSpec {
            r0: 0.06,
            r1: 0.05,
            ..MapSpec::default()
        });
        assert!(msgs.iter().any(|m| m.contains("r0 < r1")));
    }

    #[test]
    fn negative_trace_is_flagged_for_the_glue() {
        let spec = MapSpec {
            matrix: [[-2, -1], [-1, -1]],
            ..MapSpec::default()
        };
        assert!(messages(spec.clone()).is_empty());
        let w = spec.glue_warnings();
        assert_eq!(w.len(), 1);
        assert!(w[0].to_string().contains("trace A > 2"));
    }

    #[test]
    fn validation_is_the_conjunction_of_predicates() {
        let specs = [
            MapSpec::default(),
            MapSpec { b: 1.0, ..MapSpec::default() },
            MapSpec { r0: -1.0, r1: 0.3, ..MapSpec::default() },
            MapSpec { matrix: [[2, 0], [0, 2]], a: f64::NAN, ..MapSpec::default() },
        ];
        for s in specs {
            let each = PREDICATES.iter().all(|p| p(&s).is_empty());
            assert_eq!(validate_spec(s).is_ok(), each);
        }
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let text = r#"{"A": [[2,1],[1,1]], "a": 4, "b": 3, "c": 1, "d": 1,
                       "r0": 0.004, "r1": 0.05, "bump": "poly9", "seed": 9}"#;
        let spec = MapSpec::from_json(text).unwrap();
        assert_eq!(spec.bump, BumpProfile::Poly9);
        assert_eq!(spec.chart, ChartKind::Eigen);
        assert_eq!(spec.seed, 9);
        assert_eq!(MapSpec::from_json(&spec.to_json()).unwrap(), spec);
        let bad = MapSpec {
            matrix: [[1, 1], [0, 1]],
            ..spec
        };
        let json = violations_json(&bad.violations());
        let parsed: Vec<String> = serde_json::from_str(&json).unwrap();
        assert!(parsed.iter().any(|m| m.contains("A not hyperbolic")));
    }
}
