use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CausalClass {
    TimelikeFuture,
    NullFuture,
    Zero,
    Spacelike,
    TimelikePast,
    NullPast,
}

impl CausalClass {
    pub fn name(self) -> &'static str {
        match self {
            CausalClass::TimelikeFuture => "timelike-future",
            CausalClass::NullFuture => "null-future",
            CausalClass::Zero => "zero",
            CausalClass::Spacelike => "spacelike",
            CausalClass::TimelikePast => "timelike-past",
            CausalClass::NullPast => "null-past",
        }
    }

    /// Class of `−v`.
    pub fn reversed(self) -> CausalClass {
        match self {
            CausalClass::TimelikeFuture => CausalClass::TimelikePast,
            CausalClass::TimelikePast => CausalClass::TimelikeFuture,
            CausalClass::NullFuture => CausalClass::NullPast,
            CausalClass::NullPast => CausalClass::NullFuture,
            c => c,
        }
    }

    /// Future-pointing causal or zero.
    pub fn is_future_causal_or_zero(self) -> bool {
        matches!(self, CausalClass::TimelikeFuture | CausalClass::NullFuture | CausalClass::Zero)
    }
}

impl std::fmt::Display for CausalClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// `−v₀² + Σ vᵢ²`.
pub fn minkowski_norm2(v: &[f64]) -> f64 {
    -v[0] * v[0] + v[1..].iter().map(|x| x * x).sum::<f64>()
}

/// Causal character of `v = (m₀, m₁, …, mₙ)` with tolerance `tol`:
/// zero if `|v| ≤ tol`, null if `|norm²| ≤ tol·|v|²`, otherwise timelike or
/// spacelike by the sign of the norm; future or past by the sign of `m₀`.
pub fn classify_causal(v: &[f64], tol: f64) -> CausalClass {
    let len2: f64 = v.iter().map(|x| x * x).sum();
    if len2.sqrt() <= tol {
        return CausalClass::Zero;
    }
    let s = minkowski_norm2(v);
    let future = v[0] > 0.0;
    if s.abs() <= tol * len2 {
        return if future { CausalClass::NullFuture } else { CausalClass::NullPast };
    }
    if s > 0.0 {
        CausalClass::Spacelike
    } else if future {
        CausalClass::TimelikeFuture
    } else {
        CausalClass::TimelikePast
    }
}
