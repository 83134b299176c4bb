use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Coefficient that is constant or affine in `x`: `c0 + c1·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coef {
    pub c0: f64,
    pub c1: f64,
}

impl Coef {
    pub const fn constant(c0: f64) -> Self {
        Self { c0, c1: 0.0 }
    }

    pub const fn linear(c0: f64, c1: f64) -> Self {
        Self { c0, c1 }
    }

    #[inline]
    pub fn at(&self, x: f64) -> f64 {
        self.c0 + self.c1 * x
    }

    pub fn slope(&self) -> f64 {
        self.c1
    }

    pub fn min_on(&self, lo: f64, hi: f64) -> f64 {
        self.at(lo).min(self.at(hi))
    }

    pub fn max_on(&self, lo: f64, hi: f64) -> f64 {
        self.at(lo).max(self.at(hi))
    }
}

type Fx2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type Fx1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied reaction given by closures; `[F′]⁻¹` is always computed numerically.
#[derive(Clone)]
pub struct CustomReaction {
    pub label: String,
    pub f_prime: Fx2,
    pub f_double_prime: Fx2,
    pub inf_f_prime: Fx1,
}

#[derive(Clone)]
pub enum ReactionSpec {
    /// `F′(r) = W r^{1+β} − Q`.
    Power { w: Coef, beta: Coef, q: Coef },
    /// `F′(r) = W log r − Q`.
    Log { w: Coef, q: Coef },
    /// `F′(r) = W (r − 1)|1 − r|^{α−1} − Q`, `α ∈ (0, 1)`.
    SignedPower { w: Coef, alpha: Coef, q: Coef },
    Custom(CustomReaction),
}

impl fmt::Debug for ReactionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReactionSpec::Power { w, beta, q } => write!(f, "Power {{ w: {w:?}, beta: {beta:?}, q: {q:?} }}"),
            ReactionSpec::Log { w, q } => write!(f, "Log {{ w: {w:?}, q: {q:?} }}"),
            ReactionSpec::SignedPower { w, alpha, q } => {
                write!(f, "SignedPower {{ w: {w:?}, alpha: {alpha:?}, q: {q:?} }}")
            }
            ReactionSpec::Custom(c) => write!(f, "Custom({})", c.label),
        }
    }
}

impl ReactionSpec {
    pub fn power(w: f64, beta: f64, q: f64) -> Self {
        ReactionSpec::Power { w: Coef::constant(w), beta: Coef::constant(beta), q: Coef::constant(q) }
    }

    pub fn log(w: f64, q: f64) -> Self {
        ReactionSpec::Log { w: Coef::constant(w), q: Coef::constant(q) }
    }

    pub fn signed_power(w: f64, alpha: f64, q: f64) -> Self {
        ReactionSpec::SignedPower { w: Coef::constant(w), alpha: Coef::constant(alpha), q: Coef::constant(q) }
    }

    pub fn custom<F1, F2, F3>(label: &str, f_prime: F1, f_double_prime: F2, inf_f_prime: F3) -> Self
    where
        F1: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        F2: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        F3: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        ReactionSpec::Custom(CustomReaction {
            label: label.to_string(),
            f_prime: Arc::new(f_prime),
            f_double_prime: Arc::new(f_double_prime),
            inf_f_prime: Arc::new(inf_f_prime),
        })
    }

    pub fn label(&self) -> String {
        match self {
            ReactionSpec::Power { .. } => "power".into(),
            ReactionSpec::Log { .. } => "log".into(),
            ReactionSpec::SignedPower { .. } => "signed-power".into(),
            ReactionSpec::Custom(c) => c.label.clone(),
        }
    }

    pub fn f_prime(&self, r: f64, x: f64) -> f64 {
        match self {
            ReactionSpec::Power { w, beta, q } => w.at(x) * r.powf(1.0 + beta.at(x)) - q.at(x),
            ReactionSpec::Log { w, q } => w.at(x) * r.ln() - q.at(x),
            ReactionSpec::SignedPower { w, alpha, q } => {
                let d = r - 1.0;
                w.at(x) * d.signum() * d.abs().powf(alpha.at(x)) - q.at(x)
            }
            ReactionSpec::Custom(c) => (c.f_prime)(r, x),
        }
    }

    pub fn f_double_prime(&self, r: f64, x: f64) -> f64 {
        match self {
            ReactionSpec::Power { w, beta, .. } => {
                let b = beta.at(x);
                w.at(x) * (1.0 + b) * r.powf(b)
            }
            ReactionSpec::Log { w, .. } => w.at(x) / r,
            ReactionSpec::SignedPower { w, alpha, .. } => {
                let a = alpha.at(x);
                w.at(x) * a * (r - 1.0).abs().powf(a - 1.0)
            }
            ReactionSpec::Custom(c) => (c.f_double_prime)(r, x),
        }
    }

    /// `inf_{r>0} F′_x(r)`; `−∞` for the logarithmic preset.
    pub fn inf_f_prime(&self, x: f64) -> f64 {
        match self {
            ReactionSpec::Power { q, .. } => -q.at(x),
            ReactionSpec::Log { .. } => f64::NEG_INFINITY,
            ReactionSpec::SignedPower { w, q, .. } => -w.at(x) - q.at(x),
            ReactionSpec::Custom(c) => (c.inf_f_prime)(x),
        }
    }

    /// Closed-form `[F′_x]⁻¹(z)` for presets, `None` for custom reactions or `z ≤ inf F′_x`.
    pub fn f_prime_inverse(&self, z: f64, x: f64) -> Option<f64> {
        if !(z > self.inf_f_prime(x)) {
            return None;
        }
        match self {
            ReactionSpec::Power { w, beta, q } => Some(((z + q.at(x)) / w.at(x)).powf(1.0 / (1.0 + beta.at(x)))),
            ReactionSpec::Log { w, q } => Some(((z + q.at(x)) / w.at(x)).exp()),
            ReactionSpec::SignedPower { w, alpha, q } => {
                let y = (z + q.at(x)) / w.at(x);
                Some(1.0 + y.signum() * y.abs().powf(1.0 / alpha.at(x)))
            }
            ReactionSpec::Custom(_) => None,
        }
    }

    pub fn is_preset(&self) -> bool {
        !matches!(self, ReactionSpec::Custom(_))
    }
}

/// Solves `F′_x(r) = z` for `r > 0`; closed form when available, otherwise
/// geometric bracketing from `r = 1` and bisection.
pub fn invert_f_prime(reaction: &ReactionSpec, z: f64, x: f64, tol: f64) -> Result<f64> {
    let inf = reaction.inf_f_prime(x);
    if !(z > inf) {
        return Err(Error::BelowDomain { z, inf, x });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    if let Some(r) = reaction.f_prime_inverse(z, x) {
        return Ok(r);
    }
    invert_numeric(reaction, z, x, tol)
}

pub(crate) fn invert_numeric(reaction: &ReactionSpec, z: f64, x: f64, tol: f64) -> Result<f64> {
    let f = |r: f64| reaction.f_prime(r, x) - z;
    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    let f1 = f(1.0);
    if f1 == 0.0 {
        return Ok(1.0);
    }
    if f1 < 0.0 {
        while f(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::Bracket(format!("F' stays below {z} at x = {x}")));
            }
        }
    } else {
        while f(lo) > 0.0 {
            hi = lo;
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(Error::Bracket(format!("F' stays above {z} near 0 at x = {x}")));
            }
        }
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.abs() <= tol || (hi - lo) <= 1e-16 * hi {
            return Ok(mid);
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_inverses() {
        let r = ReactionSpec::power(1.0, 0.0, 1.0);
        assert_eq!(invert_f_prime(&r, 0.0, 0.3, 1e-12).unwrap(), 1.0);
        let r = ReactionSpec::power(1.0, 1.0, 1.0);
        assert!((invert_f_prime(&r, 3.0, 0.3, 1e-12).unwrap() - 2.0).abs() < 1e-14);
        assert!(invert_f_prime(&r, -1.0, 0.3, 1e-12).is_err());
    }

    #[test]
    fn numeric_inverse_matches_closed_form() {
        let log = ReactionSpec::log(1.0, 0.0);
        let r = invert_numeric(&log, 1.0, 0.0, 1e-12).unwrap();
        assert!((r - 1f64.exp()).abs() < 1e-11);
        let sq = ReactionSpec::power(1.0, 1.0, 1.0);
        let r = invert_numeric(&sq, 3.0, 0.0, 1e-12).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
        let sp = ReactionSpec::signed_power(2.0, 0.5, 0.3);
        for z in [-2.2, -1.0, -0.3, 0.0, 0.7, 5.0] {
            let a = sp.f_prime_inverse(z, 0.0).unwrap();
            let b = invert_numeric(&sp, z, 0.0, 1e-13).unwrap();
            assert!((a - b).abs() < 1e-9 * a.max(1.0), "z={z}: {a} vs {b}");
        }
    }

    #[test]
    fn round_trip_on_presets() {
        let presets = [
            ReactionSpec::power(1.5, 0.5, 0.7),
            ReactionSpec::log(0.8, 0.2),
            ReactionSpec::signed_power(1.0, 0.4, 0.5),
        ];
        for p in &presets {
            for k in -20..=20 {
                let r = (k as f64 * 0.3).exp();
                let back = p.f_prime_inverse(p.f_prime(r, 0.4), 0.4).unwrap();
                assert!((back - r).abs() <= 1e-10 * r.max(1.0), "{}: {r} -> {back}", p.label());
            }
        }
    }
}
