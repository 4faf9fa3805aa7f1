use serde::{Deserialize, Serialize};

/// Shape of the transition between the local normal form and the linear map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BumpProfile {
    /// `q(s) = E(s) / (E(s) + E(1 - s))` with `E(s) = exp(-1/s)`; C-infinity.
    #[default]
    Smooth,
    /// Degree-9 smoothstep `126 s^5 - 420 s^6 + 540 s^7 - 315 s^8 + 70 s^9`; C^4.
    Poly9,
}

#[inline]
fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + z.exp())
}

impl BumpProfile {
    /// Transition value `q(s)` and derivative `q'(s)`; `q = 0` for `s <= 0`, `q = 1` for `s >= 1`.
    pub fn transition(self, s: f64) -> (f64, f64) {
        if s <= 0.0 {
            return (0.0, 0.0);
        }
        if s >= 1.0 {
            return (1.0, 0.0);
        }
        match self {
            BumpProfile::Smooth => {
                let z = 1.0 / s - 1.0 / (1.0 - s);
                let q = logistic(z);
                let one_minus_q = logistic(-z);
                let dz = 1.0 / (s * s) + 1.0 / ((1.0 - s) * (1.0 - s));
                (q, q * one_minus_q * dz)
            }
            BumpProfile::Poly9 => {
                let s2 = s * s;
                let s5 = s2 * s2 * s;
                let q = s5 * (126.0 + s * (-420.0 + s * (540.0 + s * (-315.0 + 70.0 * s))));
                let w = s * (1.0 - s);
                let w2 = w * w;
                (q, 630.0 * w2 * w2)
            }
        }
    }
}

/// Radial bump `omega` equal to 1 on `B_{r0}` and 0 outside `B_{r1}`.
///
/// The transition runs in `log r`: `omega(r) = q(ln(r1/r) / ln(r1/r0))`.
#[derive(Debug, Clone, Copy)]
pub struct RadialBump {
    pub r0: f64,
    pub r1: f64,
    pub profile: BumpProfile,
    log_ratio: f64,
}

impl RadialBump {
    pub fn new(r0: f64, r1: f64, profile: BumpProfile) -> Self {
        Self {
            r0,
            r1,
            profile,
            log_ratio: (r1 / r0).ln(),
        }
    }

    /// `(omega(r), omega'(r))`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        if r <= self.r0 {
            return (1.0, 0.0);
        }
        if r >= self.r1 {
            return (0.0, 0.0);
        }
        let s = (self.r1 / r).ln() / self.log_ratio;
        let (q, dq) = self.profile.transition(s);
        (q, -dq / (r * self.log_ratio))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transitions_hit_endpoints_and_are_monotone() {
        for p in [BumpProfile::Smooth, BumpProfile::Poly9] {
            assert_eq!(p.transition(0.0), (0.0, 0.0));
            assert_eq!(p.transition(1.0), (1.0, 0.0));
            let mut prev = 0.0;
            for i in 1..1000 {
                let (q, dq) = p.transition(i as f64 / 1000.0);
                assert!(q >= prev && dq >= 0.0);
                prev = q;
            }
            assert!((p.transition(0.5).0 - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn transition_derivative_matches_difference_quotient() {
        let h = 1e-6;
        for p in [BumpProfile::Smooth, BumpProfile::Poly9] {
            for i in 1..50 {
                let s = i as f64 / 50.0;
                let fd = (p.transition(s + h).0 - p.transition(s - h).0) / (2.0 * h);
                assert!((fd - p.transition(s).1).abs() < 1e-6, "{p:?} s={s}");
            }
        }
    }

    #[test]
    fn radial_bump_is_one_inside_and_zero_outside() {
        let b = RadialBump::new(0.004, 0.05, BumpProfile::Smooth);
        assert_eq!(b.eval(0.001), (1.0, 0.0));
        assert_eq!(b.eval(0.004), (1.0, 0.0));
        assert_eq!(b.eval(0.05), (0.0, 0.0));
        let (w, dw) = b.eval(0.02);
        assert!(w > 0.0 && w < 1.0 && dw < 0.0);
    }
}
