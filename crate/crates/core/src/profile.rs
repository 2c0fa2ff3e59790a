//! The degree-one vortex profile `w(r)`.
//!
//! `w'' + w'/r - w/r^2 + (1 - w^2) w = 0`, `w(0) = 0`, `w(r) -> 1`.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Result, VortexError};
use crate::numerics::{rk4_step, RadialFunction, RadialGrid};

const SQRT2: f64 = std::f64::consts::SQRT_2;
/// Largest RK4 substep used when marching the profile.
const MAX_SUBSTEP: f64 = 2.5e-3;
/// Length of the multiple-shooting segments.
const SEGMENT: f64 = 4.0;
/// The bisection trajectory is trusted up to this radius for initial guesses.
const GUESS_RADIUS: f64 = 10.0;

/// Profile samples on a radial grid together with the slope at the origin.
#[derive(Debug, Clone)]
pub struct ProfileTable {
    pub grid: Arc<RadialGrid>,
    /// `w` with `w'` attached as derivative samples.
    pub w: RadialFunction,
    /// `w'` with `w''` (from the ODE) attached as derivative samples.
    pub w_prime: RadialFunction,
    pub alpha: f64,
    /// Departure of `w(r_max)` from the large-r series.
    pub beta: f64,
    /// `sup |residual| / max(1, 1/r^2)` over interior nodes.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProfileSummary {
    pub alpha: f64,
    pub residual: f64,
    pub nodes: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub w_at_10: f64,
    pub w_prime_at_10: f64,
}

fn w_second(r: f64, w: f64, wp: f64) -> f64 {
    -wp / r + w / (r * r) - (1.0 - w * w) * w
}

/// Small-r series `αr - (α/8) r^3` and its derivative.
pub fn series_at_zero(alpha: f64, r: f64) -> (f64, f64) {
    (alpha * (r - r * r * r / 8.0), alpha * (1.0 - 3.0 * r * r / 8.0))
}

/// Large-r series `1 - 1/(2r^2) - 9/(8r^4) - 161/(16r^6)` and its derivative.
pub fn series_at_infinity(r: f64) -> (f64, f64) {
    let q = 1.0 / (r * r);
    let w = 1.0 - q * (0.5 + q * (9.0 / 8.0 + q * 161.0 / 16.0));
    let wp = q / r * (1.0 + q * (4.5 + q * 483.0 / 8.0));
    (w, wp)
}

/// Profile state plus two tangent directions of the variational equation.
fn state_rhs(r: f64, y: &[f64; 6]) -> [f64; 6] {
    let (w, wp) = (y[0], y[1]);
    let lin = 1.0 / (r * r) - (1.0 - 3.0 * w * w);
    [
        wp,
        w_second(r, w, wp),
        y[3],
        -y[3] / r + lin * y[2],
        y[5],
        -y[5] / r + lin * y[4],
    ]
}

fn substeps(dr: f64) -> usize {
    ((dr.abs() / MAX_SUBSTEP).ceil() as usize).max(2)
}

fn march(y: [f64; 6], a: f64, b: f64) -> [f64; 6] {
    let m = substeps(b - a);
    let h = (b - a) / m as f64;
    let mut y = y;
    for j in 0..m {
        y = rk4_step(&state_rhs, a + j as f64 * h, &y, h);
    }
    y
}

/// Marches over consecutive nodes, returning the state at each of them.
fn march_nodes(y: [f64; 6], nodes: &[f64]) -> Vec<[f64; 6]> {
    let mut out = Vec::with_capacity(nodes.len());
    out.push(y);
    let mut y = y;
    for pair in nodes.windows(2) {
        y = march(y, pair[0], pair[1]);
        out.push(y);
    }
    out
}

enum Exit {
    TooSmall,
    TooLarge,
    Survived,
}

fn classify(alpha: f64, nodes: &[f64]) -> Exit {
    let (w, wp) = series_at_zero(alpha, nodes[0]);
    let mut y = [w, wp, 0.0, 0.0, 0.0, 0.0];
    for pair in nodes.windows(2) {
        y = march(y, pair[0], pair[1]);
        if y[0] >= 1.0 {
            return Exit::TooLarge;
        }
        if y[1] < 0.0 || y[0] <= 0.0 {
            return Exit::TooSmall;
        }
    }
    Exit::Survived
}

/// Bisection on α by first exit from `(0, 1)`.
fn bracket_alpha(nodes: &[f64]) -> Result<f64> {
    let (mut lo, mut hi) = (0.05, 2.0);
    if !matches!(classify(lo, nodes), Exit::TooSmall) || !matches!(classify(hi, nodes), Exit::TooLarge)
    {
        return Err(VortexError::Config(
            "shooting bracket for alpha not found".into(),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        match classify(mid, nodes) {
            Exit::TooSmall => lo = mid,
            Exit::TooLarge => hi = mid,
            Exit::Survived => return Ok(mid),
        }
        if hi - lo <= 1e-14 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn seed_at_zero(alpha: f64, r0: f64) -> [f64; 6] {
    let (w, wp) = series_at_zero(alpha, r0);
    [w, wp, r0 - r0 * r0 * r0 / 8.0, 1.0 - 3.0 * r0 * r0 / 8.0, 0.0, 0.0]
}

/// Solves the profile ODE on `grid`; `tol` bounds the weighted residual.
///
/// Multiple shooting: α and the state `(w, w')` at segment breaks are the
/// unknowns; continuity at the breaks and absence of the growing mode at
/// `r_max` close the system.
pub fn solve_profile(grid: Arc<RadialGrid>, tol: f64) -> Result<ProfileTable> {
    if !(tol >= 1e-12) {
        return Err(VortexError::Config(format!(
            "profile tolerance {} is below 1e-12",
            tol
        )));
    }
    let nodes = grid.nodes();
    let n = nodes.len();
    let rn = grid.r_max();
    let mut breaks = vec![0usize];
    let mut rb = SEGMENT;
    while rb < rn - 0.5 * SEGMENT {
        breaks.push(grid.nearest(rb));
        rb += SEGMENT;
    }
    breaks.push(n - 1);
    let segs = breaks.len() - 1;
    let alpha0 = bracket_alpha(&nodes[..=grid.nearest(GUESS_RADIUS)])?;
    let guess = march_nodes(seed_at_zero(alpha0, nodes[0]), &nodes[..=grid.nearest(GUESS_RADIUS)]);
    let mut x = vec![alpha0];
    for &b in &breaks[1..segs] {
        let r = nodes[b];
        let (w, wp) = if b < guess.len() {
            (guess[b][0], guess[b][1])
        } else {
            series_at_infinity(r)
        };
        x.extend([w, wp]);
    }
    // decay rate of the admissible perturbation r^{-1/2} e^{-sqrt2 r}
    let kappa = SQRT2 + 0.5 / rn;
    let dim = x.len();
    let mut converged = false;
    for _ in 0..40 {
        let mut jac = DMatrix::<f64>::zeros(dim, dim);
        let mut res = DVector::<f64>::zeros(dim);
        for s in 0..segs {
            let a = nodes[breaks[s]];
            let y0 = if s == 0 {
                seed_at_zero(x[0], a)
            } else {
                [x[2 * s - 1], x[2 * s], 1.0, 0.0, 0.0, 1.0]
            };
            let y = march_nodes(y0, &nodes[breaks[s]..=breaks[s + 1]]);
            let y = *y.last().unwrap();
            if s + 1 < segs {
                let row = 2 * s;
                res[row] = y[0] - x[2 * s + 1];
                res[row + 1] = y[1] - x[2 * s + 2];
                if s == 0 {
                    jac[(row, 0)] = y[2];
                    jac[(row + 1, 0)] = y[3];
                } else {
                    jac[(row, 2 * s - 1)] = y[2];
                    jac[(row + 1, 2 * s - 1)] = y[3];
                    jac[(row, 2 * s)] = y[4];
                    jac[(row + 1, 2 * s)] = y[5];
                }
                jac[(row, 2 * s + 1)] = -1.0;
                jac[(row + 1, 2 * s + 2)] = -1.0;
            } else {
                let (wa, wpa) = series_at_infinity(rn);
                let row = dim - 1;
                res[row] = (y[1] - wpa) + kappa * (y[0] - wa);
                if s == 0 {
                    jac[(row, 0)] = y[3] + kappa * y[2];
                } else {
                    jac[(row, 2 * s - 1)] = y[3] + kappa * y[2];
                    jac[(row, 2 * s)] = y[5] + kappa * y[4];
                }
            }
        }
        let dx = jac.lu().solve(&res).ok_or_else(|| {
            VortexError::Convergence("singular Jacobian in profile shooting".into())
        })?;
        for (xi, d) in x.iter_mut().zip(dx.iter()) {
            *xi -= d;
        }
        if dx.amax() <= 1e-15 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(VortexError::Convergence(
            "profile shooting did not converge".into(),
        ));
    }
    let alpha = x[0];
    let mut w = Vec::with_capacity(n);
    let mut wp = Vec::with_capacity(n);
    for s in 0..segs {
        let y0 = if s == 0 {
            seed_at_zero(alpha, nodes[0])
        } else {
            [x[2 * s - 1], x[2 * s], 0.0, 0.0, 0.0, 0.0]
        };
        let ys = march_nodes(y0, &nodes[breaks[s]..=breaks[s + 1]]);
        let skip_last = if s + 1 < segs { 1 } else { 0 };
        for y in &ys[..ys.len() - skip_last] {
            w.push(y[0]);
            wp.push(y[1]);
        }
    }
    let wpp: Vec<f64> = nodes
        .iter()
        .zip(w.iter().zip(&wp))
        .map(|(&r, (&a, &b))| w_second(r, a, b))
        .collect();
    let beta = w[n - 1] - series_at_infinity(rn).0;
    let mut table = ProfileTable {
        w: RadialFunction::with_derivs(grid.clone(), w, wp.clone())?,
        w_prime: RadialFunction::with_derivs(grid.clone(), wp, wpp)?,
        grid,
        alpha,
        beta,
        residual: 0.0,
    };
    table.residual = profile_residual(&table)
        .iter()
        .fold(0.0, |m: f64, v| m.max(v.abs()));
    table.check_invariants()?;
    if table.residual > tol {
        return Err(VortexError::Convergence(format!(
            "profile residual {:.3e} exceeds tolerance {:.1e}",
            table.residual, tol
        )));
    }
    Ok(table)
}

/// Weighted ODE residual `(w'' + w'/r - w/r^2 + (1-w^2)w) / max(1, 1/r^2)` at
/// interior nodes, with `w''` obtained by differentiating the `w'` samples.
pub fn profile_residual(table: &ProfileTable) -> Vec<f64> {
    let nodes = table.grid.nodes();
    let w = table.w.values();
    let wp = table.w_prime.values();
    let wpp = table.grid.differentiate(wp);
    (1..nodes.len() - 1)
        .map(|i| {
            let r = nodes[i];
            let res = wpp[i] + wp[i] / r - w[i] / (r * r) + (1.0 - w[i] * w[i]) * w[i];
            res / (1.0f64).max(1.0 / (r * r))
        })
        .collect()
}

/// Quintic Hermite interpolant on `[0, h]` from values, slopes and curvatures
/// at both ends; returns value, first and second derivative at `t·h`.
pub fn quintic_hermite(h: f64, t: f64, left: [f64; 3], right: [f64; 3]) -> [f64; 3] {
    let (t2, t3, t4, t5) = (t * t, t * t * t, t.powi(4), t.powi(5));
    let basis = [
        [1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5, -30.0 * t2 + 60.0 * t3 - 30.0 * t4, -60.0 * t + 180.0 * t2 - 120.0 * t3],
        [t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5, 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4, -36.0 * t + 96.0 * t2 - 60.0 * t3],
        [0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5), 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4), 0.5 * (2.0 - 18.0 * t + 36.0 * t2 - 20.0 * t3)],
        [10.0 * t3 - 15.0 * t4 + 6.0 * t5, 30.0 * t2 - 60.0 * t3 + 30.0 * t4, 60.0 * t - 180.0 * t2 + 120.0 * t3],
        [-4.0 * t3 + 7.0 * t4 - 3.0 * t5, -12.0 * t2 + 28.0 * t3 - 15.0 * t4, -24.0 * t + 84.0 * t2 - 60.0 * t3],
        [0.5 * (t3 - 2.0 * t4 + t5), 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4), 0.5 * (6.0 * t - 24.0 * t2 + 20.0 * t3)],
    ];
    let coef = [left[0], h * left[1], h * h * left[2], right[0], h * right[1], h * h * right[2]];
    let mut out = [0.0; 3];
    for (c, b) in coef.iter().zip(&basis) {
        for d in 0..3 {
            out[d] += c * b[d];
        }
    }
    out[1] /= h;
    out[2] /= h * h;
    out
}

impl ProfileTable {
    fn check_invariants(&self) -> Result<()> {
        let nodes = self.grid.nodes();
        let (w, wp) = (self.w.values(), self.w_prime.values());
        for i in 1..nodes.len() - 1 {
            if !(w[i] > 0.0 && w[i] < 1.0 && wp[i] > 0.0) {
                return Err(VortexError::Convergence(format!(
                    "profile leaves 0 < w < 1, w' > 0 at r = {}",
                    nodes[i]
                )));
            }
        }
        let r0 = nodes[0];
        if ((w[0] / r0) / self.alpha - 1.0).abs() > 0.01 {
            return Err(VortexError::Convergence(
                "w(r_min)/r_min disagrees with alpha".into(),
            ));
        }
        let rn = self.grid.r_max();
        let tail = 1.0 - 0.5 / (rn * rn);
        if (w[nodes.len() - 1] - tail).abs() > 2.0 / rn.powi(4) {
            return Err(VortexError::Convergence(
                "w(R_max) disagrees with the large-r asymptotics".into(),
            ));
        }
        Ok(())
    }

    /// `(w, w', w'')` at node `i`.
    pub fn node(&self, i: usize) -> [f64; 3] {
        [
            self.w.values()[i],
            self.w_prime.values()[i],
            self.w_prime.derivs().unwrap()[i],
        ]
    }

    /// `(w, w', w'')` at `r` inside interval `i` of the grid.
    pub fn eval_in(&self, i: usize, r: f64) -> [f64; 3] {
        let nodes = self.grid.nodes();
        let h = nodes[i + 1] - nodes[i];
        quintic_hermite(h, (r - nodes[i]) / h, self.node(i), self.node(i + 1))
    }

    /// `(w, w', w'')` at any `r > 0`, using the series beyond the grid.
    pub fn eval_full(&self, r: f64) -> Result<[f64; 3]> {
        if !(r > 0.0) {
            return Err(VortexError::Domain(format!("profile evaluated at r = {}", r)));
        }
        let (lo, hi) = (self.grid.r_min(), self.grid.r_max());
        if r < lo {
            let (w, wp) = series_at_zero(self.alpha, r);
            return Ok([w, wp, -0.75 * self.alpha * r]);
        }
        if r > hi {
            let (w, wp) = series_at_infinity(r);
            return Ok([w, wp, w_second(r, w, wp)]);
        }
        Ok(self.eval_in(self.grid.interval_of(r), r))
    }

    pub fn summary(&self) -> ProfileSummary {
        let [w10, wp10] = eval_profile(self, 10.0)
            .map(|(a, b)| [a, b])
            .unwrap_or([f64::NAN; 2]);
        ProfileSummary {
            alpha: self.alpha,
            residual: self.residual,
            nodes: self.grid.len(),
            r_min: self.grid.r_min(),
            r_max: self.grid.r_max(),
            w_at_10: w10,
            w_prime_at_10: wp10,
        }
    }

    /// Writes `r,value,dvalue` with `value = w`, `dvalue = w'`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.w.write_csv(path)
    }
}

/// `(w, w')` at `r > 0`.
pub fn eval_profile(table: &ProfileTable, r: f64) -> Result<(f64, f64)> {
    let [w, wp, _] = table.eval_full(r)?;
    Ok((w, wp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::GridSpec;
    use std::sync::OnceLock;

    fn table() -> &'static ProfileTable {
        static T: OnceLock<ProfileTable> = OnceLock::new();
        T.get_or_init(|| solve_profile(RadialGrid::new(GridSpec::default()).unwrap(), 1e-8).unwrap())
    }

    #[test]
    fn residual_and_bounds() {
        let t = table();
        assert!(t.residual <= 1e-8, "residual {}", t.residual);
        let (w, wp) = (t.w.values(), t.w_prime.values());
        assert!(w[1..w.len() - 1].iter().all(|&v| v > 0.0 && v < 1.0));
        assert!(wp.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn small_r_series() {
        let t = table();
        let r0 = t.grid.r_min();
        let expect = t.alpha * r0 - t.alpha / 8.0 * r0.powi(3);
        assert!((t.w.values()[0] / expect - 1.0).abs() <= 1e-9);
        let (w, _) = eval_profile(t, 1e-7).unwrap();
        assert!((w / 1e-7 / t.alpha - 1.0).abs() < 1e-12);
    }

    #[test]
    fn values_at_ten_and_beyond() {
        let t = table();
        let (w, wp) = eval_profile(t, 10.0).unwrap();
        assert!((w - 0.995).abs() <= 5e-4);
        assert!((wp - 1e-3).abs() <= 1.5e-4);
        let (w100, _) = eval_profile(t, 100.0).unwrap();
        assert!((w100 - 0.99995).abs() <= 1e-7);
        let rn = t.grid.r_max();
        let (inside, _) = eval_profile(t, rn).unwrap();
        let (outside, _) = eval_profile(t, rn * (1.0 + 1e-12)).unwrap();
        assert!((inside - outside).abs() <= 2.0 / rn.powi(4));
        assert!(matches!(eval_profile(t, 0.0), Err(VortexError::Domain(_))));
    }

    #[test]
    fn hermite_reproduces_quintics() {
        let p = |x: f64| 1.0 - x + 2.0 * x * x - 0.3 * x.powi(3) + 0.7 * x.powi(4) - 0.2 * x.powi(5);
        let dp = |x: f64| -1.0 + 4.0 * x - 0.9 * x * x + 2.8 * x.powi(3) - x.powi(4);
        let ddp = |x: f64| 4.0 - 1.8 * x + 8.4 * x * x - 4.0 * x.powi(3);
        let (a, h) = (0.3, 0.8);
        for t in [0.0, 0.25, 0.5, 0.9, 1.0] {
            let x = a + t * h;
            let v = quintic_hermite(h, t, [p(a), dp(a), ddp(a)], [p(a + h), dp(a + h), ddp(a + h)]);
            assert!((v[0] - p(x)).abs() < 1e-13);
            assert!((v[1] - dp(x)).abs() < 1e-12);
            assert!((v[2] - ddp(x)).abs() < 1e-11);
        }
    }

    #[test]
    fn rejects_tiny_tolerance() {
        let g = RadialGrid::new(GridSpec::default()).unwrap();
        assert!(matches!(solve_profile(g, 1e-13), Err(VortexError::Config(_))));
    }

    #[test]
    fn interpolated_profile_satisfies_ode_between_nodes() {
        let t = table();
        for &r in &[3e-4, 0.0123, 0.5, 1.234, 2.01, 7.77, 25.5] {
            let [w, wp, wpp] = t.eval_full(r).unwrap();
            let res = wpp + wp / r - w / (r * r) + (1.0 - w * w) * w;
            assert!(res.abs() <= 1e-7 * (1.0f64).max(1.0 / (r * r)), "r={} res={}", r, res);
        }
    }
}
