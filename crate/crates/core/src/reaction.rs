//! Klausmeier kinetics: `f(n, w) = w n² − α n`, `g(n, w) = a − w − w n²`.

use serde::{Deserialize, Serialize};

use crate::error::SetupError;

/// Which biomass dispersal operator the model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelMode {
    /// Laplacian dispersal, `d1 Δn`.
    Local,
    /// Kernel dispersal, `d1 Γn`.
    #[default]
    Nonlocal,
}

impl std::fmt::Display for ModelMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelMode::Local => "local",
            ModelMode::Nonlocal => "nonlocal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Biomass dispersal coefficient.
    pub d1: f64,
    /// Water diffusion coefficient. The local model may set it to zero.
    pub d2: f64,
    /// Downhill water speed.
    pub v: f64,
    /// Rainfall.
    pub a: f64,
    /// Biomass mortality.
    pub alpha: f64,
    pub mode: ModelMode,
}

impl ModelParams {
    pub const REFERENCE_D1: f64 = 0.05;
    pub const REFERENCE_D2: f64 = 0.003;
    pub const REFERENCE_V: f64 = 5.0;
    pub const REFERENCE_A: f64 = 0.15;
    pub const REFERENCE_ALPHA: f64 = 0.045;

    /// Nonlocal model with the reference parameter set.
    pub fn reference_nonlocal() -> Self {
        Self {
            d1: Self::REFERENCE_D1,
            d2: Self::REFERENCE_D2,
            v: Self::REFERENCE_V,
            a: Self::REFERENCE_A,
            alpha: Self::REFERENCE_ALPHA,
            mode: ModelMode::Nonlocal,
        }
    }

    /// Local model preset: same constants, no water diffusion.
    pub fn reference_local() -> Self {
        Self {
            d2: 0.0,
            mode: ModelMode::Local,
            ..Self::reference_nonlocal()
        }
    }

    pub fn validate(&self) -> Result<(), SetupError> {
        let bad =
            |field: &'static str, reason: String| Err(SetupError::InvalidParams { field, reason });
        let named = [
            ("d1", self.d1),
            ("d2", self.d2),
            ("v", self.v),
            ("a", self.a),
            ("alpha", self.alpha),
        ];
        if let Some((field, x)) = named.iter().find(|(_, x)| !x.is_finite()) {
            return bad(field, format!("must be finite (got {x})"));
        }
        if self.d1 <= 0.0 {
            return bad("d1", format!("must be positive (got {})", self.d1));
        }
        match self.mode {
            ModelMode::Nonlocal if self.d2 <= 0.0 => {
                return bad("d2", format!("must be positive (got {})", self.d2))
            }
            ModelMode::Local if self.d2 < 0.0 => {
                return bad("d2", format!("must be nonnegative (got {})", self.d2))
            }
            _ => {}
        }
        if self.d1 == self.d2 {
            return bad(
                "d2",
                format!("hypothesis (D) requires d1 != d2 (both are {})", self.d1),
            );
        }
        if self.v < 0.0 {
            return bad(
                "v",
                format!("downhill speed must be nonnegative (got {})", self.v),
            );
        }
        if self.a <= 0.0 {
            return bad("a", format!("rainfall must be positive (got {})", self.a));
        }
        if self.alpha <= 0.0 {
            return bad(
                "alpha",
                format!("mortality must be positive (got {})", self.alpha),
            );
        }
        Ok(())
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::reference_nonlocal()
    }
}

#[inline]
pub fn f_kinetics(n: f64, w: f64, p: &ModelParams) -> f64 {
    w * n * n - p.alpha * n
}

#[inline]
pub fn g_kinetics(n: f64, w: f64, p: &ModelParams) -> f64 {
    p.a - w - w * n * n
}

/// Partial derivatives of the kinetics at one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jacobian {
    pub f_n: f64,
    pub f_w: f64,
    pub g_n: f64,
    pub g_w: f64,
}

impl Jacobian {
    pub fn trace(&self) -> f64 {
        self.f_n + self.g_w
    }

    pub fn det(&self) -> f64 {
        self.f_n * self.g_w - self.f_w * self.g_n
    }

    pub fn as_matrix(&self) -> [[f64; 2]; 2] {
        [[self.f_n, self.f_w], [self.g_n, self.g_w]]
    }
}

pub fn jacobian(n: f64, w: f64, p: &ModelParams) -> Jacobian {
    Jacobian {
        f_n: 2.0 * w * n - p.alpha,
        f_w: n * n,
        g_n: -2.0 * w * n,
        g_w: -1.0 - n * n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reference() -> ModelParams {
        ModelParams::reference_nonlocal()
    }

    #[test]
    fn kinetics_values() {
        let p = reference();
        assert_abs_diff_eq!(f_kinetics(2.0, 0.5, &p), 1.91, epsilon = 1e-15);
        assert_abs_diff_eq!(g_kinetics(2.0, 0.5, &p), -2.35, epsilon = 1e-15);
        assert_eq!(g_kinetics(0.0, p.a, &p), 0.0);
        for w in [0.0, 0.3, 7.0] {
            assert_eq!(f_kinetics(0.0, w, &p), 0.0);
        }
    }

    #[test]
    fn jacobian_values() {
        let p = reference();
        let j = jacobian(0.0, p.a, &p);
        assert_eq!(j.as_matrix(), [[-p.alpha, 0.0], [0.0, -1.0]]);
        let j = jacobian(3.0, 0.015, &p);
        assert_abs_diff_eq!(j.f_n, 0.045, epsilon = 1e-15);
        assert_eq!(j.f_w, 9.0);
        assert_abs_diff_eq!(j.g_n, -0.09, epsilon = 1e-15);
        assert_eq!(j.g_w, -10.0);
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let p = reference();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = 1e-6;
        let close = |exact: f64, fd: f64| (exact - fd).abs() <= 1e-6 * exact.abs().max(1.0);
        for _ in 0..100 {
            let n = rng.random_range(0.0..5.0);
            let w = rng.random_range(0.0..5.0);
            let j = jacobian(n, w, &p);
            let fd_fn = (f_kinetics(n + h, w, &p) - f_kinetics(n - h, w, &p)) / (2.0 * h);
            let fd_fw = (f_kinetics(n, w + h, &p) - f_kinetics(n, w - h, &p)) / (2.0 * h);
            let fd_gn = (g_kinetics(n + h, w, &p) - g_kinetics(n - h, w, &p)) / (2.0 * h);
            let fd_gw = (g_kinetics(n, w + h, &p) - g_kinetics(n, w - h, &p)) / (2.0 * h);
            assert!(close(j.f_n, fd_fn), "f_n {} vs {}", j.f_n, fd_fn);
            assert!(close(j.f_w, fd_fw), "f_w {} vs {}", j.f_w, fd_fw);
            assert!(close(j.g_n, fd_gn), "g_n {} vs {}", j.g_n, fd_gn);
            assert!(close(j.g_w, fd_gw), "g_w {} vs {}", j.g_w, fd_gw);
        }
    }

    #[test]
    fn quasi_positivity() {
        let p = reference();
        for k in 0..1000 {
            let s = k as f64 * 0.01;
            assert_eq!(f_kinetics(0.0, s, &p), 0.0);
            assert_eq!(g_kinetics(s, 0.0, &p), p.a);
        }
    }

    #[test]
    fn exchange_term_cancels_in_sum() {
        let p = reference();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let n = rng.random_range(0.0..5.0);
            let w = rng.random_range(0.0..5.0);
            let sum = f_kinetics(n, w, &p) + g_kinetics(n, w, &p);
            let expected = p.a - w - p.alpha * n;
            assert!((sum - expected).abs() <= 1e-12 * (1.0 + w * n * n));
        }
    }

    #[test]
    fn validation() {
        assert!(reference().validate().is_ok());
        assert!(ModelParams::reference_local().validate().is_ok());
        let same = ModelParams {
            d1: 0.01,
            d2: 0.01,
            ..reference()
        };
        let err = same.validate().unwrap_err().to_string();
        assert!(err.contains("(D)"), "{err}");
        assert!(ModelParams {
            d2: 0.0,
            ..reference()
        }
        .validate()
        .is_err());
        assert!(ModelParams {
            v: -1.0,
            ..reference()
        }
        .validate()
        .is_err());
        assert!(ModelParams {
            a: 0.0,
            ..reference()
        }
        .validate()
        .is_err());
        assert!(ModelParams {
            alpha: -0.1,
            ..reference()
        }
        .validate()
        .is_err());
    }
}
