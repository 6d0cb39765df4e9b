//! Minimizers for the per-frequency subproblems of the spectrum update.
//!
//! The DC (and Nyquist) term minimizes `m t^2 + h t + c (t^2 - 1)^2` over a
//! real `t`. Each conjugate pair minimizes
//! `m (a^2 + b^2) + c (a^2 + b^2 - 1)^2 + h a + g b` over `(a, b)`.

use std::f64::consts::PI;

use crate::error::{CbeError, Result};

/// How the bivariate pair subproblem is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverMode {
    /// Reduce to a 1-D quartic in the radius and solve it in closed form.
    #[default]
    RadialExact,
    /// Backtracking gradient descent from the warm start.
    GradientDescent,
}

/// Settings of the gradient-descent pair solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdSettings {
    pub max_steps: usize,
    pub step_init: f64,
    pub backtrack: f64,
}

impl Default for GdSettings {
    fn default() -> Self {
        Self {
            max_steps: 200,
            step_init: 0.1,
            backtrack: 0.5,
        }
    }
}

pub fn dc_objective(m: f64, h: f64, c: f64, t: f64) -> f64 {
    let q = t * t - 1.0;
    m * t * t + h * t + c * q * q
}

pub fn pair_objective(m: f64, h: f64, g: f64, c: f64, (a, b): (f64, f64)) -> f64 {
    let s2 = a * a + b * b;
    let q = s2 - 1.0;
    m * s2 + c * q * q + h * a + g * b
}

/// Real roots of `t^3 + p t + q = 0`.
fn depressed_cubic_roots(p: f64, q: f64) -> Vec<f64> {
    if p == 0.0 {
        return vec![-q.cbrt()];
    }
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if disc > 0.0 {
        // One real root. Pick the cube root that avoids cancellation.
        let a = -(q.signum()) * (q.abs() / 2.0 + disc.sqrt()).cbrt();
        let a = if a == 0.0 { (disc.sqrt()).cbrt() } else { a };
        vec![a - p / (3.0 * a)]
    } else {
        // Three real roots (p < 0 here).
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = ((3.0 * q) / (2.0 * p) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|j| r * (phi - 2.0 * PI * j as f64 / 3.0).cos())
            .collect()
    }
}

/// Global minimizer of `m t^2 + h t + c (t^2 - 1)^2`. Ties go to the larger
/// `t`. With `c <= 0` the problem is a plain quadratic.
pub fn solve_dc(m: f64, h: f64, c: f64) -> Result<f64> {
    if !(m.is_finite() && h.is_finite() && c.is_finite()) {
        return Err(CbeError::Numerical(format!(
            "non-finite quartic coefficients m={m}, h={h}, c={c}"
        )));
    }
    if c <= 0.0 {
        if m > 0.0 {
            return Ok(-h / (2.0 * m));
        }
        if m == 0.0 && h == 0.0 {
            return Ok(0.0);
        }
        return Err(CbeError::Unbounded(format!(
            "quadratic weight {m} with no quartic term"
        )));
    }
    // f'(t) = 4c t^3 + (2m - 4c) t + h
    let p = m / (2.0 * c) - 1.0;
    let q = h / (4.0 * c);
    let deriv = |t: f64| 4.0 * c * t * t * t + (2.0 * m - 4.0 * c) * t + h;
    let second = |t: f64| 12.0 * c * t * t + 2.0 * m - 4.0 * c;
    let mut best: Option<(f64, f64)> = None;
    for mut t in depressed_cubic_roots(p, q) {
        for _ in 0..3 {
            let s = second(t);
            if s == 0.0 {
                break;
            }
            let next = t - deriv(t) / s;
            if !next.is_finite() || (next - t).abs() > 1e-3 * (1.0 + t.abs()) {
                break;
            }
            t = next;
        }
        let v = dc_objective(m, h, c, t);
        best = match best {
            None => Some((t, v)),
            Some((bt, bv)) => {
                let tie = (v - bv).abs() <= 1e-12 * (1.0 + v.abs().max(bv.abs()));
                if (tie && t > bt) || (!tie && v < bv) {
                    Some((t, v))
                } else {
                    Some((bt, bv))
                }
            }
        };
    }
    Ok(best.map(|(t, _)| t).unwrap_or(0.0))
}

/// Minimizer of the pair subproblem. `warm` is the incumbent; the radial
/// solver uses it only to pick a direction when the linear term vanishes.
pub fn solve_pair(
    m: f64,
    h: f64,
    g: f64,
    c: f64,
    mode: SolverMode,
    warm: (f64, f64),
    gd: &GdSettings,
) -> Result<(f64, f64)> {
    match mode {
        SolverMode::RadialExact => solve_pair_radial(m, h, g, c, warm),
        SolverMode::GradientDescent => solve_pair_gd(m, h, g, c, warm, gd),
    }
}

fn solve_pair_radial(m: f64, h: f64, g: f64, c: f64, warm: (f64, f64)) -> Result<(f64, f64)> {
    let n = h.hypot(g);
    // At radius s the linear term is smallest along -(h, g), giving
    // m s^2 + c (s^2 - 1)^2 - n s, whose minimizer is nonnegative.
    let s = solve_dc(m, -n, c)?;
    let dir = if n > 0.0 {
        (-h / n, -g / n)
    } else {
        let w = warm.0.hypot(warm.1);
        if w > 0.0 {
            (warm.0 / w, warm.1 / w)
        } else {
            (1.0, 0.0)
        }
    };
    Ok((s * dir.0, s * dir.1))
}

/// Sufficient-decrease constant of the line search. Values well below 1/2
/// accept steps near `2/L` along the stiff radial direction, which then
/// oscillate instead of converging.
const ARMIJO: f64 = 0.25;

fn solve_pair_gd(
    m: f64,
    h: f64,
    g: f64,
    c: f64,
    warm: (f64, f64),
    gd: &GdSettings,
) -> Result<(f64, f64)> {
    if c <= 0.0 && m <= 0.0 && !(m == 0.0 && h == 0.0 && g == 0.0) {
        return Err(CbeError::Unbounded(format!(
            "quadratic weight {m} with no quartic term"
        )));
    }
    let f = |p: (f64, f64)| pair_objective(m, h, g, c, p);
    let grad = |(a, b): (f64, f64)| {
        let k = 2.0 * m + 4.0 * c * (a * a + b * b - 1.0);
        (k * a + h, k * b + g)
    };
    let mut x = warm;
    let mut fx = f(x);
    for _ in 0..gd.max_steps {
        let (ga, gb) = grad(x);
        let gnorm2 = ga * ga + gb * gb;
        if gnorm2.sqrt() < 1e-8 {
            break;
        }
        let mut step = gd.step_init;
        let mut moved = false;
        while step > 1e-30 {
            let cand = (x.0 - step * ga, x.1 - step * gb);
            let fc = f(cand);
            if fc <= fx - ARMIJO * step * gnorm2 {
                x = cand;
                fx = fc;
                moved = true;
                break;
            }
            step *= gd.backtrack;
        }
        if !moved {
            break;
        }
    }
    Ok(x)
}
