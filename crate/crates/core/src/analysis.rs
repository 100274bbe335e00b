//! Equilibria and linear stability of the kinetics, plus executable checks of
//! the kernel identities and the comparison principle.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::SetupError;
use crate::grid::Field;
use crate::kernel::{DiscreteKernel, NonlocalMethod};
use crate::reaction::{f_kinetics, g_kinetics, jacobian, Jacobian, ModelParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("({n}, {w}) is not an equilibrium: |f| + |g| = {residual:e}")]
    NotEquilibrium { n: f64, w: f64, residual: f64 },
    #[error(transparent)]
    Setup(#[from] SetupError),
}

/// Kinetic residual tolerated by [`turing_report`].
pub const EQUILIBRIUM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub n: f64,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSet {
    pub bare_soil: State,
    /// Vegetated states ordered by `n` ascending.
    pub vegetated: Vec<State>,
    /// `a² − 4α²`.
    pub discriminant: f64,
}

impl EquilibriumSet {
    /// Bare soil followed by the vegetated states.
    pub fn all(&self) -> Vec<State> {
        std::iter::once(self.bare_soil)
            .chain(self.vegetated.iter().copied())
            .collect()
    }
}

/// Closed-form equilibria of the kinetics.
///
/// The vegetated pair is `n = 2α/(a ± s)`, `w = (a ± s)/2` with
/// `s = sqrt(a² − 4α²)`. The `−` branch is rewritten as `n = (a + s)/(2α)`,
/// `w = 2α²/(a + s)` to avoid cancellation in `a − s`.
pub fn equilibria(p: &ModelParams) -> EquilibriumSet {
    let (a, alpha) = (p.a, p.alpha);
    let discriminant = a * a - 4.0 * alpha * alpha;
    let bare_soil = State { n: 0.0, w: a };
    let vegetated = if discriminant < 0.0 {
        Vec::new()
    } else if discriminant == 0.0 {
        vec![State {
            n: 2.0 * alpha / a,
            w: a / 2.0,
        }]
    } else {
        let s = discriminant.sqrt();
        let plus = a + s;
        vec![
            State {
                n: 2.0 * alpha / plus,
                w: plus / 2.0,
            },
            State {
                n: plus / (2.0 * alpha),
                w: 2.0 * alpha * alpha / plus,
            },
        ]
    };
    EquilibriumSet {
        bare_soil,
        vegetated,
        discriminant,
    }
}

pub fn kinetic_residual(s: State, p: &ModelParams) -> f64 {
    f_kinetics(s.n, s.w, p).abs() + g_kinetics(s.n, s.w, p).abs()
}

/// The four Turing inequalities in a fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TuringConditions {
    pub first: bool,
    pub second: bool,
    pub third: bool,
    pub fourth: bool,
}

impl TuringConditions {
    pub fn all(&self) -> bool {
        self.first && self.second && self.third && self.fourth
    }

    pub fn as_array(&self) -> [bool; 4] {
        [self.first, self.second, self.third, self.fourth]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuringVerdict {
    /// Kinetically stable; neither condition set predicts patterns.
    StableNoPattern,
    /// Kinetically stable; only the conditions as typeset hold.
    TuringUnstablePrinted,
    /// Kinetically stable; the standard diffusion-driven instability conditions hold.
    TuringUnstableStandard,
    /// Not stable for the kinetics alone (trace ≥ 0 or det ≤ 0).
    HopfOrUnstable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuringReport {
    pub equilibrium: State,
    pub jacobian: Jacobian,
    pub trace: f64,
    pub det: f64,
    /// Evaluated literally as typeset:
    /// `f_w + g_n < 0`, `f_w g_n − f_n g_w > 0`, `d2 f_w + d1 g_n > 0`,
    /// `(d2 f_w + d1 g_n)² > 4 d1 d2 (f_w g_n − f_n g_w)`.
    pub printed_conditions: TuringConditions,
    /// Conventional form: `tr J < 0`, `det J > 0`, `d2 f_n + d1 g_w > 0`,
    /// `(d2 f_n + d1 g_w)² > 4 d1 d2 det J`.
    pub standard_conditions: TuringConditions,
    pub verdict: TuringVerdict,
}

/// Labels for the printed condition set, in order.
pub const PRINTED_LABELS: [&str; 4] = [
    "f_w + g_n < 0",
    "f_w*g_n - f_n*g_w > 0",
    "d2*f_w + d1*g_n > 0",
    "(d2*f_w + d1*g_n)^2 > 4*d1*d2*(f_w*g_n - f_n*g_w)",
];

/// Labels for the standard condition set, in order.
pub const STANDARD_LABELS: [&str; 4] = [
    "tr J = f_n + g_w < 0",
    "det J = f_n*g_w - f_w*g_n > 0",
    "d2*f_n + d1*g_w > 0",
    "(d2*f_n + d1*g_w)^2 > 4*d1*d2*det J",
];

/// Linearizes the kinetics at `e` and evaluates both Turing condition sets
/// for the two-diffusion (Laplacian) problem with coefficients `d1`, `d2`.
pub fn turing_report(p: &ModelParams, e: State) -> Result<TuringReport, AnalysisError> {
    let residual = kinetic_residual(e, p);
    if !(residual <= EQUILIBRIUM_TOLERANCE) {
        return Err(AnalysisError::NotEquilibrium {
            n: e.n,
            w: e.w,
            residual,
        });
    }
    let j = jacobian(e.n, e.w, p);
    let (d1, d2) = (p.d1, p.d2);
    let trace = j.trace();
    let det = j.det();

    let printed_det = j.f_w * j.g_n - j.f_n * j.g_w;
    let printed_mix = d2 * j.f_w + d1 * j.g_n;
    let printed_conditions = TuringConditions {
        first: j.f_w + j.g_n < 0.0,
        second: printed_det > 0.0,
        third: printed_mix > 0.0,
        fourth: printed_mix * printed_mix > 4.0 * d1 * d2 * printed_det,
    };

    let mix = d2 * j.f_n + d1 * j.g_w;
    let standard_conditions = TuringConditions {
        first: trace < 0.0,
        second: det > 0.0,
        third: mix > 0.0,
        fourth: mix * mix > 4.0 * d1 * d2 * det,
    };

    let verdict = if !(trace < 0.0 && det > 0.0) {
        TuringVerdict::HopfOrUnstable
    } else if standard_conditions.all() {
        TuringVerdict::TuringUnstableStandard
    } else if printed_conditions.all() {
        TuringVerdict::TuringUnstablePrinted
    } else {
        TuringVerdict::StableNoPattern
    };

    Ok(TuringReport {
        equilibrium: e,
        jacobian: j,
        trace,
        det,
        printed_conditions,
        standard_conditions,
        verdict,
    })
}

/// Residuals of the two kernel integral identities on a pair of fields.
///
/// Returns `(r1, r2)`:
/// * `r1 = |Σ_x Σ_y v(x) φ (z(y) − z(x)) + ½ Σ_x Σ_y (v(y) − v(x)) φ (z(y) − z(x))|`
/// * `r2 = Σ_x Σ_y v₋(x) φ (v(y) − v(x))`, which is nonnegative in exact arithmetic
///
/// Both sums carry the outer measure `hx hy`. The left-hand side is
/// accumulated over unordered cell pairs so that a constant `v` cancels
/// exactly; the right-hand side and `r2` run over all ordered pairs.
pub fn lemma21_identity_residuals(
    phi: &DiscreteKernel,
    v: &Field,
    z: &Field,
) -> Result<(f64, f64), SetupError> {
    let g = *phi.grid();
    if *v.grid() != g || *z.grid() != g {
        return Err(SetupError::GridMismatch);
    }
    let (nx, ny) = (g.nx() as isize, g.ny() as isize);
    let (kx, ky) = phi.half_widths();
    let (kx, ky) = (kx as isize, ky as isize);
    let area = g.cell_area();
    let (vv, zv) = (v.values(), z.values());
    let neg = |s: f64| if s <= 0.0 { -s } else { 0.0 };

    let mut lhs = 0.0;
    let mut rhs = 0.0;
    let mut r2 = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            let x = (j * nx + i) as usize;
            let (vx, zx) = (vv[x], zv[x]);
            let (mut l, mut r, mut q) = (0.0, 0.0, 0.0);
            for dy in -ky..=ky {
                let tj = j + dy;
                if tj < 0 || tj >= ny {
                    continue;
                }
                for dx in -kx..=kx {
                    let ti = i + dx;
                    if ti < 0 || ti >= nx {
                        continue;
                    }
                    let w = phi.weight(dx, dy);
                    let y = (tj * nx + ti) as usize;
                    let dz = zv[y] - zx;
                    let dv = vv[y] - vx;
                    if dy > 0 || (dy == 0 && dx > 0) {
                        // v(x) φ (z(y) − z(x)) + v(y) φ (z(x) − z(y))
                        l += (vx - vv[y]) * w * dz;
                    }
                    r += dv * w * dz;
                    q += w * dv;
                }
            }
            lhs += l;
            rhs += r;
            r2 += neg(vx) * q;
        }
    }
    let lhs = lhs * area;
    let rhs = -0.5 * rhs * area;
    Ok(((lhs - rhs).abs(), r2 * area))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonViolation {
    pub cell: (usize, usize),
    pub step: u64,
    /// Subsolution value.
    pub zeta: f64,
    /// Solution value.
    pub xi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub steps: u64,
    /// Smallest `ξ − ζ` seen over all cells and steps.
    pub min_margin: f64,
    pub first_violation: Option<ComparisonViolation>,
}

impl ComparisonReport {
    pub fn holds(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Pointwise slack allowed between the subsolution and the solution.
pub const COMPARISON_TOLERANCE: f64 = 1e-10;

/// Integrates `ξ_t = Γξ + F(ξ)` and the subsolution `ζ_t = Γζ + F(ζ) − gap`
/// from the same data with Forward Euler, checking `ζ ≤ ξ + tol` at every step.
pub fn comparison_oracle(
    phi: &DiscreteKernel,
    reaction: &dyn Fn(f64) -> f64,
    zeta0: &Field,
    forcing_gap: &Field,
    dt: f64,
    t_end: f64,
) -> Result<ComparisonReport, SetupError> {
    let g = *phi.grid();
    if *zeta0.grid() != g || *forcing_gap.grid() != g {
        return Err(SetupError::GridMismatch);
    }
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(SetupError::InvalidControl(format!(
            "need dt > 0 and t_end >= 0 (got dt={dt}, t_end={t_end})"
        )));
    }
    if let Some(idx) = forcing_gap.values().iter().position(|&s| !(s >= 0.0)) {
        return Err(SetupError::InvalidParams {
            field: "forcing_gap",
            reason: format!("must be nonnegative (cell {:?})", g.coords(idx)),
        });
    }
    let steps = if t_end == 0.0 {
        0
    } else {
        (t_end / dt - 1e-9).ceil() as u64
    };
    let mut xi = zeta0.clone();
    let mut zeta = zeta0.clone();
    let mut min_margin = f64::INFINITY;
    for step in 1..=steps {
        let h = dt.min(t_end - (step - 1) as f64 * dt);
        let gx = phi.apply(&xi, NonlocalMethod::Auto)?;
        let gz = phi.apply(&zeta, NonlocalMethod::Auto)?;
        let xi_next: Vec<f64> = xi
            .values()
            .iter()
            .zip(gx.values())
            .map(|(&u, &l)| u + h * (l + reaction(u)))
            .collect();
        let zeta_next: Vec<f64> = zeta
            .values()
            .iter()
            .zip(gz.values())
            .zip(forcing_gap.values())
            .map(|((&u, &l), &s)| u + h * (l + reaction(u) - s))
            .collect();
        for (idx, (&a, &b)) in zeta_next.iter().zip(&xi_next).enumerate() {
            min_margin = min_margin.min(b - a);
            if !(a <= b + COMPARISON_TOLERANCE) {
                return Ok(ComparisonReport {
                    steps: step,
                    min_margin,
                    first_violation: Some(ComparisonViolation {
                        cell: g.coords(idx),
                        step,
                        zeta: a,
                        xi: b,
                    }),
                });
            }
        }
        xi = Field::new(g, xi_next)?;
        zeta = Field::new(g, zeta_next)?;
    }
    Ok(ComparisonReport {
        steps,
        min_margin,
        first_violation: None,
    })
}
