//! Cusp potential: evaluation, derivatives, stability classification,
//! analytic critical points, and derivative-free local minimization.
//!
//! The potential is `V(x; a, b) = x^4/4 - a*x - b*x^2/2`. Its stationary
//! points are the real roots of `x^3 - b*x - a`. For `b > 0` and
//! `|a| < 2*(b/3)^(3/2)` the potential has two local minima separated by a
//! local maximum; the boundary of that region is the fold curve
//! `b = 3*(|a|/2)^(2/3)`, where one minimum and the maximum annihilate.
//!
//! Two routes to the occupied minimum are provided: a 1-D Nelder-Mead
//! simplex search ([`CuspParams::local_minimum_from`]) and the closed-form
//! cubic solution ([`CuspParams::critical_points`]). They are kept
//! independent so one can serve as the oracle for the other.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance for deciding that parameters sit exactly on the fold
/// curve (saddle-node set). On-curve parameters have a non-quadratic
/// critical point and are flagged rather than silently classified.
pub const FOLD_TOLERANCE: f64 = 1e-12;

/// Gradient magnitude accepted at a converged minimum.
pub const GRADIENT_TOLERANCE: f64 = 1e-8;

/// Most negative curvature accepted at a converged minimum.
pub const CURVATURE_TOLERANCE: f64 = 1e-8;

/// Control parameters of the cusp potential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CuspParams {
    /// Demographic index; tilts the potential toward one side.
    pub a: f64,
    /// Behavior index; for b > 0 the quadratic term carves a double well.
    pub b: f64,
}

/// Stability regime of the potential for a given parameter pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    /// Single local minimum.
    Monostable,
    /// Two local minima separated by a local maximum.
    Bistable,
    /// On the fold curve within [`FOLD_TOLERANCE`]: a minimum and the
    /// maximum have merged into a saddle-node point.
    Degenerate,
}

/// All stationary points of the potential, classified.
///
/// `minima` is sorted ascending and holds one or two entries; `maximum` is
/// present exactly when there are two minima and the parameters are not
/// degenerate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointSet {
    pub minima: Vec<f64>,
    pub maximum: Option<f64>,
    pub degenerate: bool,
}

impl CriticalPointSet {
    /// The minimum whose basin of attraction contains `x0`.
    ///
    /// Basins are delimited by the local maximum; a start exactly on the
    /// maximum is assigned to the upper basin. With a single minimum the
    /// whole line is its basin.
    pub fn basin_minimum(&self, x0: f64) -> f64 {
        match self.maximum {
            Some(m) if x0 < m => self.minima[0],
            Some(_) => self.minima[1],
            None => self.minima[0],
        }
    }
}

/// Settings for the Nelder-Mead search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizerConfig {
    /// Offset of the second simplex vertex from the start.
    pub initial_step: f64,
    /// Simplex width below which (together with `f_tolerance`) the search
    /// is considered converged.
    pub x_tolerance: f64,
    /// Function-value spread below which the search is considered converged.
    pub f_tolerance: f64,
    pub max_iterations: u32,
}

impl Default for MinimizerConfig {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            x_tolerance: 1e-10,
            f_tolerance: 1e-12,
            max_iterations: 500,
        }
    }
}

impl MinimizerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.initial_step.is_finite() && self.initial_step != 0.0) {
            return Err(format!(
                "initial_step must be finite and nonzero, got {}",
                self.initial_step
            ));
        }
        if !(self.x_tolerance > 0.0) {
            return Err(format!("x_tolerance must be > 0, got {}", self.x_tolerance));
        }
        if !(self.f_tolerance > 0.0) {
            return Err(format!("f_tolerance must be > 0, got {}", self.f_tolerance));
        }
        if self.max_iterations < 1 {
            return Err("max_iterations must be >= 1".to_string());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum CuspError {
    #[error("minimizer did not converge within {max_iterations} iterations from x0 = {x0}")]
    ConvergenceFailure { x0: f64, max_iterations: u32 },
    #[error("minimizer settled at x = {x} with curvature {curvature:.3e} after retry")]
    CurvatureFailure { x: f64, curvature: f64 },
    #[error("invalid minimizer configuration: {0}")]
    InvalidConfig(String),
}

/// Smallest `b` at which `(a, b)` lies on the fold curve: `3*(|a|/2)^(2/3)`.
pub fn fold_boundary_b(a: f64) -> f64 {
    3.0 * (a.abs() / 2.0).powf(2.0 / 3.0)
}

/// Half-width of the bistable strip in `a` at a given `b > 0`:
/// `2*(b/3)^(3/2)`.
fn fold_bound_a(b: f64) -> f64 {
    2.0 * (b / 3.0).powf(1.5)
}

/// Basin constraint for the minimizer: an open half-line next to the local
/// maximum, or the whole line.
#[derive(Clone, Copy, Debug)]
enum Basin {
    Unbounded,
    /// x <= m (lower basin)
    Below(f64),
    /// x >= m (upper basin)
    Above(f64),
}

impl Basin {
    fn contains(self, x: f64) -> bool {
        match self {
            Basin::Unbounded => true,
            Basin::Below(m) => x <= m,
            Basin::Above(m) => x >= m,
        }
    }
}

impl CuspParams {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    /// `V(x) = x^4/4 - a*x - b*x^2/2`.
    pub fn potential(&self, x: f64) -> f64 {
        x.powi(4) / 4.0 - self.a * x - 0.5 * self.b * x * x
    }

    /// `dV/dx = x^3 - a - b*x`.
    pub fn gradient(&self, x: f64) -> f64 {
        x.powi(3) - self.a - self.b * x
    }

    /// `d2V/dx2 = 3*x^2 - b`.
    pub fn curvature(&self, x: f64) -> f64 {
        3.0 * x * x - self.b
    }

    /// Classify the parameter pair against the fold curve.
    pub fn stability(&self) -> Stability {
        if self.b > 0.0 {
            let d = self.a.abs() - fold_bound_a(self.b);
            if d.abs() <= FOLD_TOLERANCE {
                Stability::Degenerate
            } else if d < 0.0 {
                Stability::Bistable
            } else {
                Stability::Monostable
            }
        } else {
            Stability::Monostable
        }
    }

    /// All real roots of `x^3 - b*x - a`, classified into minima and
    /// maximum of the potential via the closed-form cubic solution.
    ///
    /// Three-root (bistable) parameters use the trigonometric form; the
    /// single-root regime uses Cardano's formula with the cancellation-free
    /// cube-root pairing.
    pub fn critical_points(&self) -> CriticalPointSet {
        match self.stability() {
            Stability::Bistable => {
                // x_k = 2*sqrt(b/3) * cos(theta/3 - 2*pi*k/3) with
                // cos(theta) = (3a / 2b) * sqrt(3/b).
                let radius = 2.0 * (self.b / 3.0).sqrt();
                let cos_theta = (1.5 * self.a / self.b) * (3.0 / self.b).sqrt();
                let theta = cos_theta.clamp(-1.0, 1.0).acos() / 3.0;
                let third_turn = std::f64::consts::TAU / 3.0;
                let mut roots = [
                    radius * theta.cos(),
                    radius * (theta - third_turn).cos(),
                    radius * (theta - 2.0 * third_turn).cos(),
                ];
                roots.sort_by(f64::total_cmp);
                // Outer roots are minima of the quartic, middle one the maximum.
                CriticalPointSet {
                    minima: vec![roots[0], roots[2]],
                    maximum: Some(roots[1]),
                    degenerate: false,
                }
            }
            Stability::Degenerate => {
                if self.a == 0.0 {
                    // Numerically indistinguishable from the cusp point.
                    CriticalPointSet {
                        minima: vec![0.0],
                        maximum: None,
                        degenerate: true,
                    }
                } else {
                    // Double root (saddle-node) at -s*sqrt(b/3); the
                    // surviving quadratic minimum sits at 2*s*sqrt(b/3).
                    let s = if self.a > 0.0 { 1.0 } else { -1.0 };
                    CriticalPointSet {
                        minima: vec![2.0 * s * (self.b / 3.0).sqrt()],
                        maximum: None,
                        degenerate: true,
                    }
                }
            }
            Stability::Monostable => {
                let root = self.single_real_root();
                CriticalPointSet {
                    minima: vec![root],
                    maximum: None,
                    degenerate: self.curvature(root).abs() <= FOLD_TOLERANCE,
                }
            }
        }
    }

    /// Cardano's formula for the single-real-root regime of
    /// `x^3 + p*x + q = 0` with `p = -b`, `q = -a`.
    fn single_real_root(&self) -> f64 {
        let p = -self.b;
        let w = self.a / 2.0; // -q/2
        let disc = w * w + (p / 3.0).powi(3);
        let s = disc.max(0.0).sqrt();
        // Pick the cube-root argument that does not cancel against w.
        let u = if w >= 0.0 {
            (w + s).cbrt()
        } else {
            (w - s).cbrt()
        };
        if u == 0.0 {
            0.0
        } else {
            u - p / (3.0 * u)
        }
    }

    fn basin_of(&self, x0: f64) -> Basin {
        if self.stability() != Stability::Bistable {
            return Basin::Unbounded;
        }
        let m = self
            .critical_points()
            .maximum
            .expect("bistable parameters have a maximum");
        if x0 < m {
            Basin::Below(m)
        } else {
            Basin::Above(m)
        }
    }

    /// Nelder-Mead search for the local minimum whose basin contains `x0`.
    ///
    /// Uses a two-point simplex `{x0, x0 + initial_step}` with the standard
    /// coefficients (reflection 1, expansion 2, contraction 0.5, shrink
    /// 0.5). In the bistable regime the objective is walled off at the
    /// local maximum so the search cannot leak into the other basin. The
    /// result satisfies `|dV/dx| <= 1e-8` and `d2V/dx2 >= -1e-8`; a failed
    /// post-check triggers exactly one retry from `x0 +/- 0.5`.
    pub fn local_minimum_from(&self, x0: f64, cfg: &MinimizerConfig) -> Result<f64, CuspError> {
        cfg.validate().map_err(CuspError::InvalidConfig)?;
        let basin = self.basin_of(x0);
        let x = self.minimize_in(x0, cfg, basin)?;
        let grad_ok = |x: f64| self.gradient(x).abs() <= GRADIENT_TOLERANCE;
        let curv_ok = |x: f64| self.curvature(x) >= -CURVATURE_TOLERANCE;
        if grad_ok(x) && curv_ok(x) {
            return Ok(x);
        }
        let retry_from = match basin {
            Basin::Below(_) => x0 - 0.5,
            Basin::Above(_) => x0 + 0.5,
            Basin::Unbounded => {
                if self.gradient(x0) > 0.0 {
                    x0 - 0.5
                } else {
                    x0 + 0.5
                }
            }
        };
        let x = self.minimize_in(retry_from, cfg, basin)?;
        if !curv_ok(x) {
            return Err(CuspError::CurvatureFailure {
                x,
                curvature: self.curvature(x),
            });
        }
        if !grad_ok(x) {
            return Err(CuspError::ConvergenceFailure {
                x0,
                max_iterations: cfg.max_iterations,
            });
        }
        Ok(x)
    }

    /// `V(x) - V(r)` in factored form. Direct subtraction of two potential
    /// values loses all precision once the simplex is small relative to
    /// `|V|`; the factored difference keeps vertex comparisons exact down
    /// to the width tolerance, which the 1e-8 gradient post-check needs.
    fn potential_delta(&self, x: f64, r: f64) -> f64 {
        let d = x - r;
        let s = x + r;
        d * (s * (x * x + r * r) / 4.0 - self.a - 0.5 * self.b * s)
    }

    /// One-dimensional Nelder-Mead over the (possibly basin-restricted)
    /// potential. With two vertices the centroid is the best vertex, and
    /// the inside contraction coincides with the shrink step. Vertex values
    /// are tracked as differences against the current best vertex.
    fn minimize_in(&self, x0: f64, cfg: &MinimizerConfig, basin: Basin) -> Result<f64, CuspError> {
        let delta = |x: f64, r: f64| {
            if basin.contains(x) {
                self.potential_delta(x, r)
            } else {
                f64::INFINITY
            }
        };
        let mut best = x0;
        let mut worst = x0 + cfg.initial_step;
        // Value of the worst vertex relative to the best one; the best
        // vertex sits at 0 by definition.
        let mut d_worst = delta(worst, best);
        if d_worst < 0.0 {
            std::mem::swap(&mut best, &mut worst);
            d_worst = -d_worst;
        }
        for _ in 0..cfg.max_iterations {
            if (best - worst).abs() <= cfg.x_tolerance && d_worst.abs() <= cfg.f_tolerance {
                return Ok(best);
            }
            let reflected = 2.0 * best - worst;
            let d_reflected = delta(reflected, best);
            if d_reflected < 0.0 {
                let expanded = 3.0 * best - 2.0 * worst;
                let d_expanded = delta(expanded, best);
                let (new_best, d_new) = if d_expanded < d_reflected {
                    (expanded, d_expanded)
                } else {
                    (reflected, d_reflected)
                };
                worst = best;
                d_worst = -d_new;
                best = new_best;
            } else if d_reflected < d_worst {
                // Outside contraction, halfway toward the reflected point.
                let contracted = 1.5 * best - 0.5 * worst;
                let d_contracted = delta(contracted, best);
                if d_contracted <= d_reflected {
                    worst = contracted;
                    d_worst = d_contracted;
                } else {
                    worst = 0.5 * (best + worst);
                    d_worst = delta(worst, best);
                }
            } else {
                // Inside contraction; identical to the shrink step here.
                worst = 0.5 * (best + worst);
                d_worst = delta(worst, best);
            }
            if d_worst < 0.0 {
                std::mem::swap(&mut best, &mut worst);
                d_worst = -d_worst;
            }
        }
        Err(CuspError::ConvergenceFailure {
            x0,
            max_iterations: cfg.max_iterations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_core::{RngCore, SeedableRng};

    fn uniform(rng: &mut rand_chacha::ChaCha8Rng, lo: f64, hi: f64) -> f64 {
        let u = (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0);
        lo + u * (hi - lo)
    }

    #[test]
    fn potential_matches_hand_values() {
        assert_eq!(CuspParams::new(0.0, 0.0).potential(0.0), 0.0);
        assert_eq!(CuspParams::new(0.0, 1.0).potential(1.0), -0.25);
        assert_eq!(CuspParams::new(1.0, 0.0).potential(1.0), -0.75);
    }

    #[test]
    fn gradient_matches_hand_values() {
        assert_eq!(CuspParams::new(0.0, 0.0).gradient(0.0), 0.0);
        assert_eq!(CuspParams::new(0.0, 1.0).gradient(1.0), 0.0);
        assert_eq!(CuspParams::new(1.0, 1.0).gradient(2.0), 5.0);
    }

    #[test]
    fn stability_classification() {
        assert_eq!(CuspParams::new(0.0, 3.0).stability(), Stability::Bistable);
        assert_eq!(CuspParams::new(2.1, 3.0).stability(), Stability::Monostable);
        // Bound at b = 1 is 2*(1/3)^(3/2) ~ 0.3849 < 0.5.
        assert_eq!(CuspParams::new(0.5, 1.0).stability(), Stability::Monostable);
        assert_eq!(CuspParams::new(2.0, 3.0).stability(), Stability::Degenerate);
        assert_eq!(CuspParams::new(0.0, 0.0).stability(), Stability::Monostable);
        assert_eq!(
            CuspParams::new(0.0, -1.0).stability(),
            Stability::Monostable
        );
    }

    #[test]
    fn stability_agrees_with_root_count() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let params =
                CuspParams::new(uniform(&mut rng, -1.0, 1.0), uniform(&mut rng, -2.0, 4.0));
            let cps = params.critical_points();
            if cps.degenerate {
                continue;
            }
            let expected = match params.stability() {
                Stability::Bistable => 2,
                _ => 1,
            };
            assert_eq!(cps.minima.len(), expected, "params {params:?}");
        }
    }

    #[test]
    fn fold_boundary_values() {
        assert_eq!(fold_boundary_b(0.0), 0.0);
        let expected = 3.0 / (2.0 * 2.0_f64.cbrt());
        assert!((fold_boundary_b(0.5) - expected).abs() <= 1e-12);
        assert!((fold_boundary_b(-0.5) - expected).abs() <= 1e-12);
        assert!((fold_boundary_b(2.0) - 3.0).abs() <= 1e-12);
    }

    #[test]
    fn fold_boundary_round_trip_and_monotone() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut previous: Option<(f64, f64)> = None;
        for i in 0..1_000 {
            let a = i as f64 * 2e-3 + uniform(&mut rng, 0.0, 1e-3);
            let fold = fold_boundary_b(a);
            assert!((2.0 * (fold / 3.0).powf(1.5) - a).abs() <= 1e-12, "a = {a}");
            if let Some((pa, pf)) = previous {
                assert!(a > pa && fold > pf, "fold boundary must increase in |a|");
            }
            previous = Some((a, fold));
        }
    }

    #[test]
    fn critical_points_factorizable_cases() {
        let cps = CuspParams::new(0.0, 1.0).critical_points();
        assert_eq!(cps.minima.len(), 2);
        assert!((cps.minima[0] + 1.0).abs() <= 1e-12);
        assert!((cps.minima[1] - 1.0).abs() <= 1e-12);
        assert!(cps.maximum.unwrap().abs() <= 1e-12);
        assert!(!cps.degenerate);

        let cps = CuspParams::new(0.0, 0.0).critical_points();
        assert_eq!(cps.minima, vec![0.0]);
        assert!(cps.maximum.is_none());
        assert!(cps.degenerate);

        let cps = CuspParams::new(1.0, 0.0).critical_points();
        assert_eq!(cps.minima.len(), 1);
        assert!((cps.minima[0] - 1.0).abs() <= 1e-12);
        assert!(!cps.degenerate);
    }

    #[test]
    fn critical_points_on_fold_curve() {
        // |a| = 2*(b/3)^(3/2) at b = 3: a = 2. Saddle-node at -1, minimum at 2.
        let cps = CuspParams::new(2.0, 3.0).critical_points();
        assert!(cps.degenerate);
        assert_eq!(cps.minima.len(), 1);
        assert!((cps.minima[0] - 2.0).abs() <= 1e-9);
    }

    #[test]
    fn minimizer_basic_basins() {
        let cfg = MinimizerConfig::default();
        let symmetric = CuspParams::new(0.0, 1.0);
        let x = symmetric.local_minimum_from(0.5, &cfg).unwrap();
        assert!((x - 1.0).abs() <= 1e-6);
        let x = symmetric.local_minimum_from(-0.5, &cfg).unwrap();
        assert!((x + 1.0).abs() <= 1e-6);

        let single = CuspParams::new(1.0, 0.0);
        for x0 in [-1.0, -0.3, 0.0, 0.4, 1.0] {
            let x = single.local_minimum_from(x0, &cfg).unwrap();
            assert!((x - 1.0).abs() <= 1e-6, "x0 = {x0} gave {x}");
        }
    }

    #[test]
    fn minimizer_respects_basin_even_when_step_straddles_maximum() {
        // Start just left of the maximum with the second simplex vertex on
        // the other side; the deeper minimum is on the right but the start
        // belongs to the left basin.
        let params = CuspParams::new(0.1, 2.0);
        let cfg = MinimizerConfig::default();
        let maximum = params.critical_points().maximum.unwrap();
        let x0 = maximum - 0.02;
        let x = params.local_minimum_from(x0, &cfg).unwrap();
        let expected = params.critical_points().basin_minimum(x0);
        assert!(x < maximum);
        assert!((x - expected).abs() <= 1e-6);
    }

    #[test]
    fn minimizer_error_paths() {
        let cfg = MinimizerConfig {
            max_iterations: 1,
            ..MinimizerConfig::default()
        };
        let err = CuspParams::new(0.0, 1.0)
            .local_minimum_from(0.5, &cfg)
            .unwrap_err();
        assert!(matches!(err, CuspError::ConvergenceFailure { .. }));

        let cfg = MinimizerConfig {
            x_tolerance: 0.0,
            ..MinimizerConfig::default()
        };
        let err = CuspParams::new(0.0, 1.0)
            .local_minimum_from(0.5, &cfg)
            .unwrap_err();
        assert!(matches!(err, CuspError::InvalidConfig(_)));
    }

    #[test]
    fn minimizer_agrees_with_analytic_roots() {
        let cfg = MinimizerConfig::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..10_000 {
            let params =
                CuspParams::new(uniform(&mut rng, -1.0, 1.0), uniform(&mut rng, -2.0, 4.0));
            if params.stability() == Stability::Degenerate {
                continue;
            }
            let x0 = uniform(&mut rng, -1.0, 1.0);
            let x = params.local_minimum_from(x0, &cfg).unwrap();
            let expected = params.critical_points().basin_minimum(x0);
            assert!(
                (x - expected).abs() <= 1e-6,
                "params {params:?} x0 {x0} gave {x}, expected {expected}"
            );
        }
    }

    #[test]
    fn analytic_roots_are_stationary() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let params =
                CuspParams::new(uniform(&mut rng, -1.0, 1.0), uniform(&mut rng, -2.0, 4.0));
            let cps = params.critical_points();
            for &m in &cps.minima {
                assert!(
                    params.gradient(m).abs() <= 1e-9,
                    "residual at minimum of {params:?}"
                );
                assert!(params.curvature(m) >= -1e-9);
            }
            if let Some(m) = cps.maximum {
                assert!(params.gradient(m).abs() <= 1e-9);
                assert!(params.curvature(m) <= 1e-9);
            }
        }
    }

    #[test]
    fn odd_symmetry_of_minimization() {
        let cfg = MinimizerConfig::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..2_000 {
            let a = uniform(&mut rng, -1.0, 1.0);
            let b = uniform(&mut rng, -2.0, 4.0);
            let x0 = uniform(&mut rng, -1.0, 1.0);
            let params = CuspParams::new(a, b);
            if params.stability() == Stability::Degenerate {
                continue;
            }
            let x = params.local_minimum_from(x0, &cfg).unwrap();
            let mirrored = CuspParams::new(-a, b)
                .local_minimum_from(-x0, &cfg)
                .unwrap();
            assert!(
                (mirrored + x).abs() <= 1e-8,
                "a={a} b={b} x0={x0}: {x} vs {mirrored}"
            );
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let step = 1e-5;
        for _ in 0..1_000 {
            let params =
                CuspParams::new(uniform(&mut rng, -1.0, 1.0), uniform(&mut rng, -2.0, 4.0));
            let x = uniform(&mut rng, -2.0, 2.0);
            let numeric = (params.potential(x + step) - params.potential(x - step)) / (2.0 * step);
            assert!((numeric - params.gradient(x)).abs() <= 1e-6);
        }
    }
}
