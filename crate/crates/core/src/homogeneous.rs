//! Homogeneous solutions of the Fourier-mode systems.
//!
//! For mode `k` the vector `φ = (φ1, φ2)` solves
//! `φ'' + P φ' - r^{-2} [[k², 2k], [2k, k² + 2w²r²]] φ = 0` with
//! `P = 2w'/w + 1/r`. With `p = w² r` the pairing
//! `[u, v] = p (u·v' - u'·v)` is constant along solutions.

use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix4;
use serde::Serialize;

use crate::error::{Result, VortexError};
use crate::numerics::{cumulative_from_samples, rk4_step, Head, RadialFunction, RadialGrid};
use crate::profile::ProfileTable;

const SQRT2: f64 = std::f64::consts::SQRT_2;
/// Target for `h·λ` in one RK4 substep, `λ` a bound on the local growth rate.
const STEP_ETA: f64 = 0.02;
/// Exponentially decaying solutions are started this far beyond `r_max`.
const FAR_START: f64 = 30.0;

/// Asymptotic behaviour of a basis solution at one end of the half-line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tag {
    BoundedAtZero,
    LogAtZero,
    RegularGrowthAtZero,
    SingularAtZero,
    /// The `r^{-k}` branch at 0 for `k >= 2`.
    InnerSingularAtZero,
    PolyDecayAtInf,
    PolyGrowthAtInf,
    ExpGrowthAtInf,
    ExpDecayAtInf,
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tag::BoundedAtZero => "bounded-at-0",
            Tag::LogAtZero => "log-at-0",
            Tag::RegularGrowthAtZero => "regular-growth-at-0",
            Tag::SingularAtZero => "singular-at-0",
            Tag::InnerSingularAtZero => "inner-singular-at-0",
            Tag::PolyDecayAtInf => "poly-decay-at-inf",
            Tag::PolyGrowthAtInf => "poly-growth-at-inf",
            Tag::ExpGrowthAtInf => "exp-growth-at-inf",
            Tag::ExpDecayAtInf => "exp-decay-at-inf",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Tag {
    type Err = VortexError;
    fn from_str(s: &str) -> Result<Self> {
        let all = [
            Tag::BoundedAtZero,
            Tag::LogAtZero,
            Tag::RegularGrowthAtZero,
            Tag::SingularAtZero,
            Tag::InnerSingularAtZero,
            Tag::PolyDecayAtInf,
            Tag::PolyGrowthAtInf,
            Tag::ExpGrowthAtInf,
            Tag::ExpDecayAtInf,
        ];
        all.into_iter()
            .find(|t| t.to_string() == s)
            .ok_or_else(|| VortexError::Config(format!("unknown branch tag '{}'", s)))
    }
}

/// Leading behaviour: `r^exponent` (times `log r` for log tags) at 0 or for
/// algebraic tags at infinity; `e^{exponent·r}` for exponential tags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Asymptotic {
    pub tag: Tag,
    pub exponent: f64,
}

impl Asymptotic {
    fn has_log(&self, k: usize) -> bool {
        self.tag == Tag::LogAtZero && k == 1
    }

    fn is_exponential(&self) -> bool {
        matches!(self.tag, Tag::ExpGrowthAtInf | Tag::ExpDecayAtInf)
    }
}

/// Leading exponent and direction of a small-r branch.
fn zero_branch(k: usize, tag: Tag) -> Result<(f64, [f64; 2])> {
    let kf = k as f64;
    let plus = [1.0, 1.0];
    let minus = [1.0, -1.0];
    match (tag, k) {
        (Tag::RegularGrowthAtZero, 1..) => Ok((kf, plus)),
        (Tag::SingularAtZero, 1..) => Ok((-2.0 - kf, plus)),
        (Tag::BoundedAtZero, 1) => Ok((-1.0, minus)),
        (Tag::LogAtZero, 1) => Ok((-1.0, minus)),
        (Tag::BoundedAtZero, 2..) => Ok((kf - 2.0, minus)),
        (Tag::InnerSingularAtZero, 2..) => Ok((-kf, minus)),
        _ => Err(VortexError::Config(format!(
            "branch {} is not a small-r branch of mode {}",
            tag, k
        ))),
    }
}

/// `(φ1, φ2, φ1', φ2')` at `r_min` from the leading term of the selected
/// small-r branch and its first correction.
pub fn seed_at_zero(k: usize, branch: Tag, profile: &ProfileTable) -> Result<[f64; 4]> {
    if k == 0 {
        return Err(VortexError::Config("seed_at_zero needs k >= 1".into()));
    }
    Ok(zero_series(k, branch, profile.grid.r_min())?)
}

fn zero_series(k: usize, branch: Tag, r: f64) -> Result<[f64; 4]> {
    let (lam, v) = zero_branch(k, branch)?;
    let (f, fp) = if branch == Tag::LogAtZero {
        // r^{-1} log r - (1/8) r log r + (1/4) r
        let l = r.ln();
        (
            l / r - r * l / 8.0 + r / 4.0,
            (1.0 - l) / (r * r) - (l + 1.0) / 8.0 + 0.25,
        )
    } else if (lam + 2.0).abs() < 1e-12 {
        // resonant case k = 2, r^{-2} - (1/2) log r
        (r.powi(-2) - 0.5 * r.ln(), -2.0 * r.powi(-3) - 0.5 / r)
    } else {
        let c = lam / (8.0 * (lam + 2.0));
        (
            r.powf(lam) * (1.0 + c * r * r),
            r.powf(lam - 1.0) * (lam + c * (lam + 2.0) * r * r),
        )
    };
    Ok([f * v[0], f * v[1], fp * v[0], fp * v[1]])
}

/// `(φ1, φ2, φ1', φ2')` at `r` from the two-term large-r expansion.
pub fn infinity_series(k: usize, branch: Tag, r: f64) -> Result<[f64; 4]> {
    let kf = k as f64;
    match branch {
        Tag::PolyDecayAtInf | Tag::PolyGrowthAtInf => {
            if k == 0 {
                return Err(VortexError::Config("algebraic branches need k >= 1".into()));
            }
            let sigma = if branch == Tag::PolyDecayAtInf { -kf } else { kf };
            let a = -(sigma + kf * kf) / (2.0 * (1.0 - sigma));
            let b = ((sigma - 2.0).powi(2) + 2.0 * a - kf * kf + 2.0) / 2.0;
            let q = 1.0 / (r * r);
            let p1 = r.powf(sigma) * (1.0 + a * q);
            let d1 = r.powf(sigma - 1.0) * (sigma + a * (sigma - 2.0) * q);
            let p2 = -kf * r.powf(sigma - 2.0) * (1.0 + b * q);
            let d2 = -kf * r.powf(sigma - 3.0) * ((sigma - 2.0) + b * (sigma - 4.0) * q);
            Ok([p1, p2, d1, d2])
        }
        Tag::ExpGrowthAtInf | Tag::ExpDecayAtInf => {
            let s = if branch == Tag::ExpGrowthAtInf { SQRT2 } else { -SQRT2 };
            let c = (2.25 - kf * kf) / (2.0 * s);
            let d = c + 2.0 * s;
            let e = (s * r).exp();
            // (r^m (1 + c/r) e^{sr})' = e^{sr} r^{m-1} (s r + m + c s + c (m-1)/r)
            let term = |m: f64, c: f64| {
                let v = r.powf(m) * (1.0 + c / r) * e;
                let dv = e * r.powf(m - 1.0) * (s * r + m + c * s + c * (m - 1.0) / r);
                (v, dv)
            };
            let (p2, d2) = term(-0.5, c);
            let (p1, d1) = term(-2.5, d);
            Ok([kf * p1, p2, kf * d1, d2])
        }
        _ => Err(VortexError::Config(format!(
            "branch {} is not a large-r branch",
            branch
        ))),
    }
}

/// `(φ1, φ2, φ1', φ2')` at `r_max` from the two-term large-r expansion.
pub fn seed_at_infinity(k: usize, branch: Tag, profile: &ProfileTable) -> Result<[f64; 4]> {
    if k == 0 && branch != Tag::ExpDecayAtInf && branch != Tag::ExpGrowthAtInf {
        return Err(VortexError::Config("mode 0 has only exponential branches".into()));
    }
    infinity_series(k, branch, profile.grid.r_max())
}

/// One vector-valued solution with stored derivatives.
#[derive(Debug, Clone)]
pub struct BasisSolution {
    /// First component, derivative attached.
    pub first: RadialFunction,
    /// Second component, derivative attached.
    pub second: RadialFunction,
    pub at_zero: Asymptotic,
    pub at_inf: Asymptotic,
}

impl BasisSolution {
    fn from_states(
        grid: &Arc<RadialGrid>,
        states: &[[f64; 4]],
        at_zero: Asymptotic,
        at_inf: Asymptotic,
    ) -> Result<Self> {
        let col = |j: usize| states.iter().map(|s| s[j]).collect::<Vec<f64>>();
        Ok(BasisSolution {
            first: RadialFunction::with_derivs(grid.clone(), col(0), col(2))?,
            second: RadialFunction::with_derivs(grid.clone(), col(1), col(3))?,
            at_zero,
            at_inf,
        })
    }

    /// `(φ1, φ2, φ1', φ2')` at node `i`.
    pub fn state(&self, i: usize) -> [f64; 4] {
        [
            self.first.values()[i],
            self.second.values()[i],
            self.first.derivs().unwrap()[i],
            self.second.derivs().unwrap()[i],
        ]
    }

    pub fn value(&self, i: usize) -> [f64; 2] {
        [self.first.values()[i], self.second.values()[i]]
    }

    fn scaled(&self, c: f64) -> Result<Self> {
        let grid = self.first.grid().clone();
        let states: Vec<[f64; 4]> = (0..grid.len())
            .map(|i| self.state(i).map(|v| c * v))
            .collect();
        Self::from_states(&grid, &states, self.at_zero, self.at_inf)
    }
}

/// Homogeneous basis for one mode: two solutions for `k = 0`, four otherwise.
///
/// For `k >= 1` the pairings satisfy `[z1, z2] = [z3, z4] = -1` and all cross
/// pairings vanish. For `k = 0` the solutions `(0, z10)`, `(0, z20)` of the
/// second-component equation satisfy `[z10, z20] = -1`.
#[derive(Debug, Clone)]
pub struct KernelBasis {
    pub k: usize,
    pub solutions: Vec<BasisSolution>,
    /// `det A · w⁴ r²` for `k >= 1`; the pairing `[z10, z20]` for `k = 0`.
    pub kappa: f64,
    pub diagnostics: KernelDiagnostics,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct KernelDiagnostics {
    pub k: usize,
    pub max_residual: f64,
    pub wronskian_deviation: f64,
    pub pairing_z1_z2: f64,
    pub pairing_z3_z4: f64,
    pub max_cross_pairing: f64,
    /// Rescaling applied to z2 and z4 after unit normalization at the seeding end.
    pub renormalization: Vec<f64>,
    pub slopes: Vec<SlopeCheck>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SlopeCheck {
    pub solution: usize,
    pub tag: Tag,
    pub expected: f64,
    pub measured: f64,
    pub ok: bool,
}

struct ModeSystem<'a> {
    k: f64,
    profile: &'a ProfileTable,
}

impl ModeSystem<'_> {
    fn coefficients(&self, interval: Option<usize>, r: f64) -> (f64, f64) {
        let [w, wp, _] = match interval {
            Some(i) => self.profile.eval_in(i, r),
            None => self.profile.eval_full(r).expect("r > 0"),
        };
        (2.0 * wp / w + 1.0 / r, 2.0 * w * w)
    }

    fn rhs(&self, interval: Option<usize>, r: f64, y: &[f64; 4]) -> [f64; 4] {
        let (p, tw2) = self.coefficients(interval, r);
        let k = self.k;
        let r2 = r * r;
        [
            y[2],
            y[3],
            -p * y[2] + (k * k * y[0] + 2.0 * k * y[1]) / r2,
            -p * y[3] + (2.0 * k * y[0] + k * k * y[1]) / r2 + tw2 * y[1],
        ]
    }

    /// Residual-free RK4 march from `a` to `b`, both inside one grid interval
    /// (or beyond the grid when `interval` is `None`).
    fn march(&self, y: [f64; 4], a: f64, b: f64, interval: Option<usize>) -> [f64; 4] {
        let rate = (self.k + 3.0) / a.min(b) + SQRT2 + 0.5;
        let m = (((b - a).abs() * rate / STEP_ETA).ceil() as usize).max(1);
        let h = (b - a) / m as f64;
        let f = |r: f64, y: &[f64; 4]| self.rhs(interval, r, y);
        let mut y = y;
        for j in 0..m {
            y = rk4_step(&f, a + j as f64 * h, &y, h);
        }
        y
    }

    fn coupling(&self, r: f64, w: f64) -> [[f64; 2]; 2] {
        let (k, r2) = (self.k, r * r);
        [
            [k * k / r2, 2.0 * k / r2],
            [2.0 * k / r2, k * k / r2 + 2.0 * w * w],
        ]
    }
}

/// `p (u·v' - u'·v)` for states `(φ1, φ2, φ1', φ2')`.
pub fn pairing(p: f64, u: &[f64; 4], v: &[f64; 4]) -> f64 {
    p * (u[0] * v[2] + u[1] * v[3] - u[2] * v[0] - u[3] * v[1])
}

fn weights_p(profile: &ProfileTable) -> Vec<f64> {
    let w = profile.w.values();
    profile
        .grid
        .nodes()
        .iter()
        .zip(w)
        .map(|(r, w)| w * w * r)
        .collect()
}

/// Projection onto the pairing complement of `span{z3, z4}`.
struct Projector<'a> {
    z3: &'a [[f64; 4]],
    z4: &'a [[f64; 4]],
    p: &'a [f64],
}

impl Projector<'_> {
    fn apply(&self, i: usize, u: [f64; 4]) -> [f64; 4] {
        let (z3, z4, p) = (&self.z3[i], &self.z4[i], self.p[i]);
        let g = pairing(p, z3, z4);
        let c3 = pairing(p, &u, z4) / g;
        let c4 = -pairing(p, &u, z3) / g;
        let mut out = u;
        for j in 0..4 {
            out[j] -= c3 * z3[j] + c4 * z4[j];
        }
        out
    }
}

fn march_outward(
    sys: &ModeSystem,
    seed: [f64; 4],
    proj: Option<&Projector>,
) -> Vec<[f64; 4]> {
    let nodes = sys.profile.grid.nodes();
    let mut y = seed;
    if let Some(pr) = proj {
        y = pr.apply(0, y);
    }
    let mut out = vec![y];
    for i in 0..nodes.len() - 1 {
        y = sys.march(y, nodes[i], nodes[i + 1], Some(i));
        if let Some(pr) = proj {
            y = pr.apply(i + 1, y);
        }
        out.push(y);
    }
    out
}

fn march_inward(
    sys: &ModeSystem,
    seed: [f64; 4],
    proj: Option<&Projector>,
) -> Vec<[f64; 4]> {
    let nodes = sys.profile.grid.nodes();
    let n = nodes.len();
    let mut y = seed;
    if let Some(pr) = proj {
        y = pr.apply(n - 1, y);
    }
    let mut out = vec![y];
    for i in (0..n - 1).rev() {
        y = sys.march(y, nodes[i + 1], nodes[i], Some(i));
        if let Some(pr) = proj {
            y = pr.apply(i, y);
        }
        out.push(y);
    }
    out.reverse();
    out
}

/// Exponentially decaying solution at `r_max`, obtained by marching inward
/// from `r_max + FAR_START` so that other branches die out; normalized so the
/// second component equals `r^{-1/2} e^{-√2 r}` at `r_max`.
fn decaying_state_at_rmax(sys: &ModeSystem) -> [f64; 4] {
    let rn = sys.profile.grid.r_max();
    let k = sys.k as usize;
    let mut r = rn + FAR_START;
    let mut y = infinity_series(k, Tag::ExpDecayAtInf, r).expect("exp branch");
    let scale = y[1].abs();
    y = y.map(|v| v / scale);
    while r > rn {
        let next = (r - 1.0).max(rn);
        y = sys.march(y, r, next, None);
        let s = y[1].abs();
        y = y.map(|v| v / s);
        r = next;
    }
    let target = rn.powf(-0.5) * (-SQRT2 * rn).exp();
    let s = target / y[1];
    y.map(|v| v * s)
}

fn unit_at_zero(state: [f64; 4], lead: f64) -> [f64; 4] {
    state.map(|v| v / lead)
}

/// Builds the two-solution basis of the mode-0 equation
/// `ψ'' + P ψ' - 2w² ψ = 0`.
pub fn build_mode0_kernel(profile: &ProfileTable) -> Result<KernelBasis> {
    let grid = profile.grid.clone();
    let sys = ModeSystem { k: 0.0, profile };
    let seed = decaying_state_at_rmax(&sys);
    let z2 = march_inward(&sys, seed, None);
    if let Some(i) = z2.iter().position(|s| !(s[1] > 0.0)) {
        return Err(VortexError::SignViolation(format!(
            "z20 vanishes or changes sign at r = {}",
            grid.nodes()[i]
        )));
    }
    let p = weights_p(profile);
    // z10 = 1 + α² r⁴/12 + ... at 0; it dominates outward at both ends
    let (r0, a2) = (grid.r_min(), profile.alpha * profile.alpha);
    let seed = [0.0, 1.0 + a2 * r0.powi(4) / 12.0, 0.0, a2 * r0.powi(3) / 3.0];
    let mut z1 = march_outward(&sys, seed, None);
    let g = pairing(p[grid.nearest(1.0)], &z1[grid.nearest(1.0)], &z2[grid.nearest(1.0)]);
    if !(g < 0.0) {
        return Err(VortexError::SignViolation(format!("[z10, z20] = {:.3e} is not negative", g)));
    }
    for s in z1.iter_mut() {
        *s = s.map(|v| -v / g);
    }
    let z2: Vec<[f64; 4]> = z2.iter().map(|s| [0.0, s[1], 0.0, s[3]]).collect();
    let sol1 = BasisSolution::from_states(
        &grid,
        &z1,
        Asymptotic { tag: Tag::BoundedAtZero, exponent: 0.0 },
        Asymptotic { tag: Tag::ExpGrowthAtInf, exponent: SQRT2 },
    )?;
    let sol2 = BasisSolution::from_states(
        &grid,
        &z2,
        Asymptotic { tag: Tag::SingularAtZero, exponent: -2.0 },
        Asymptotic { tag: Tag::ExpDecayAtInf, exponent: -SQRT2 },
    )?;
    let mut basis = KernelBasis {
        k: 0,
        solutions: vec![sol1, sol2],
        kappa: 0.0,
        diagnostics: KernelDiagnostics::default(),
    };
    let g = median(&pairings(&basis, 0, 1, &p));
    basis.kappa = g;
    basis.diagnostics.pairing_z1_z2 = g;
    finish_checks(&mut basis, profile)?;
    Ok(basis)
}

/// `z20(r) ∫_0^r ds / (w² z20² s)`, the quadrature form of `z10`.
pub fn mode0_quadrature_z10(basis: &KernelBasis, profile: &ProfileTable) -> Result<Vec<f64>> {
    let z2 = basis.solutions[1].second.values();
    let p = weights_p(profile);
    let integrand: Vec<f64> = z2.iter().zip(&p).map(|(z, p)| 1.0 / (p * z * z)).collect();
    let integral = cumulative_from_samples(&profile.grid, &integrand, Head::Power(1.0))?;
    Ok(z2.iter().zip(&integral).map(|(z, i)| z * i).collect())
}

/// Builds the four-solution basis for mode `k >= 1`.
pub fn build_kernel(profile: &ProfileTable, k: usize) -> Result<KernelBasis> {
    if k == 0 {
        return Err(VortexError::Config("build_kernel needs k >= 1; use build_mode0_kernel".into()));
    }
    let grid = profile.grid.clone();
    let nodes = grid.nodes();
    let n = nodes.len();
    let kf = k as f64;
    let sys = ModeSystem { k: kf, profile };
    let p = weights_p(profile);
    let r0 = nodes[0];
    let rn = grid.r_max();

    let z3 = march_outward(&sys, unit_at_zero(zero_series(k, Tag::RegularGrowthAtZero, r0)?, 1.0), None);
    let z4 = march_inward(&sys, decaying_state_at_rmax(&sys), None);
    let proj = Projector { z3: &z3, z4: &z4, p: &p };

    let z1: Vec<[f64; 4]> = if k == 1 {
        (0..n)
            .map(|i| {
                let r = nodes[i];
                let [w, wp, wpp] = profile.node(i);
                [1.0 / r, -wp / w, -1.0 / (r * r), -(wpp / w - wp * wp / (w * w))]
            })
            .collect()
    } else {
        let seed = infinity_series(k, Tag::PolyDecayAtInf, rn)?;
        march_inward(&sys, seed, Some(&proj))
    };
    let z2_branch = if k == 1 { Tag::LogAtZero } else { Tag::BoundedAtZero };
    let z2 = march_outward(&sys, zero_series(k, z2_branch, r0)?, Some(&proj));

    let tags = if k == 1 {
        [
            (Tag::BoundedAtZero, -1.0, Tag::PolyDecayAtInf, -1.0),
            (Tag::LogAtZero, -1.0, Tag::PolyGrowthAtInf, 1.0),
            (Tag::RegularGrowthAtZero, 1.0, Tag::ExpGrowthAtInf, SQRT2),
            (Tag::SingularAtZero, -3.0, Tag::ExpDecayAtInf, -SQRT2),
        ]
    } else {
        [
            (Tag::InnerSingularAtZero, -kf, Tag::PolyDecayAtInf, -kf),
            (Tag::BoundedAtZero, kf - 2.0, Tag::PolyGrowthAtInf, kf),
            (Tag::RegularGrowthAtZero, kf, Tag::ExpGrowthAtInf, SQRT2),
            (Tag::SingularAtZero, -2.0 - kf, Tag::ExpDecayAtInf, -SQRT2),
        ]
    };
    let mut solutions = Vec::with_capacity(4);
    for (states, (tz, ez, ti, ei)) in [&z1, &z2, &z3, &z4].into_iter().zip(tags) {
        solutions.push(BasisSolution::from_states(
            &grid,
            states,
            Asymptotic { tag: tz, exponent: ez },
            Asymptotic { tag: ti, exponent: ei },
        )?);
    }
    let mut basis = KernelBasis {
        k,
        solutions,
        kappa: 0.0,
        diagnostics: KernelDiagnostics::default(),
    };

    let g12 = median(&pairings(&basis, 0, 1, &p));
    let g34 = median(&pairings(&basis, 2, 3, &p));
    if !(g34 < 0.0) {
        return Err(VortexError::SignViolation(format!(
            "[z3, z4] = {:.3e} has the wrong sign for positive normalization",
            g34
        )));
    }
    if g12 == 0.0 || !g12.is_finite() {
        return Err(VortexError::Integrity("[z1, z2] vanishes".into()));
    }
    let (c2, c4) = (-1.0 / g12, -1.0 / g34);
    basis.solutions[1] = basis.solutions[1].scaled(c2)?;
    basis.solutions[3] = basis.solutions[3].scaled(c4)?;
    basis.diagnostics.renormalization = vec![1.0, c2, 1.0, c4];
    basis.diagnostics.pairing_z1_z2 = median(&pairings(&basis, 0, 1, &p));
    basis.diagnostics.pairing_z3_z4 = median(&pairings(&basis, 2, 3, &p));
    let mut cross: f64 = 0.0;
    for (a, b) in [(0, 2), (0, 3), (1, 2), (1, 3)] {
        let v = median(&pairings(&basis, a, b, &p));
        cross = cross.max(v.abs());
    }
    basis.diagnostics.max_cross_pairing = cross;

    for s in [2, 3] {
        let sol = &basis.solutions[s];
        if let Some(i) = (0..n).find(|&i| !(sol.first.values()[i] > 0.0 && sol.second.values()[i] > 0.0)) {
            return Err(VortexError::SignViolation(format!(
                "z{} has a non-positive component at r = {}",
                s + 1,
                nodes[i]
            )));
        }
    }
    let (kappa, dev) = wronskian_values(&basis, profile);
    basis.kappa = kappa;
    basis.diagnostics.wronskian_deviation = dev;
    if dev > 1e-4 {
        return Err(VortexError::Integrity(format!(
            "mode {} Wronskian deviates by {:.3e}",
            k, dev
        )));
    }
    finish_checks(&mut basis, profile)?;
    Ok(basis)
}

fn pairings(basis: &KernelBasis, a: usize, b: usize, p: &[f64]) -> Vec<f64> {
    (0..p.len())
        .map(|i| pairing(p[i], &basis.solutions[a].state(i), &basis.solutions[b].state(i)))
        .collect()
}

fn median(v: &[f64]) -> f64 {
    let mut s: Vec<f64> = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    s[s.len() / 2]
}

fn finish_checks(basis: &mut KernelBasis, profile: &ProfileTable) -> Result<()> {
    basis.diagnostics.k = basis.k;
    basis.diagnostics.max_residual = (0..basis.solutions.len())
        .map(|s| sup(&solution_residual(basis, s, profile)))
        .fold(0.0, f64::max);
    basis.diagnostics.slopes = slope_checks(basis, profile);
    Ok(())
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}

/// Scaled residual of solution `s` at interior nodes, using finite
/// differences of the stored derivatives for the second derivative.
pub fn solution_residual(basis: &KernelBasis, s: usize, profile: &ProfileTable) -> Vec<f64> {
    let sys = ModeSystem { k: basis.k as f64, profile };
    let grid = &profile.grid;
    let nodes = grid.nodes();
    let sol = &basis.solutions[s];
    let d1 = grid.differentiate(sol.first.derivs().unwrap());
    let d2 = grid.differentiate(sol.second.derivs().unwrap());
    (1..nodes.len() - 1)
        .map(|i| {
            let r = nodes[i];
            let [w, wp, _] = profile.node(i);
            let pc = 2.0 * wp / w + 1.0 / r;
            let m = sys.coupling(r, w);
            let st = sol.state(i);
            let mut worst: f64 = 0.0;
            for (c, dd) in [(0usize, d1[i]), (1usize, d2[i])] {
                let a = pc * st[2 + c];
                let (b0, b1) = (m[c][0] * st[0], m[c][1] * st[1]);
                let b = b0 + b1;
                let scale = dd.abs() + a.abs() + b0.abs() + b1.abs();
                if scale > 0.0 {
                    worst = worst.max((dd + a - b).abs() / scale);
                }
            }
            worst
        })
        .collect()
}

fn wronskian_values(basis: &KernelBasis, profile: &ProfileTable) -> (f64, f64) {
    let vals = wronskian_series(basis, profile);
    let kappa = median(&vals);
    let dev = vals.iter().map(|v| (v / kappa - 1.0).abs()).fold(0.0, f64::max);
    (kappa, dev)
}

/// `det A(r) · w(r)⁴ r²` at every node.
pub fn wronskian_series(basis: &KernelBasis, profile: &ProfileTable) -> Vec<f64> {
    let nodes = profile.grid.nodes();
    (0..nodes.len())
        .map(|i| {
            let mut m = Matrix4::<f64>::zeros();
            let mut scale = 1.0;
            for (c, sol) in basis.solutions.iter().enumerate() {
                let st = sol.state(i);
                let norm = st.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
                scale *= norm;
                for row in 0..4 {
                    m[(row, c)] = st[row] / norm;
                }
            }
            let w = profile.w.values()[i];
            let r = nodes[i];
            m.determinant() * scale * w.powi(4) * r * r
        })
        .collect()
}

/// Returns `(kappa, max relative deviation)` of `det A · w⁴ r²`.
pub fn wronskian_check(basis: &KernelBasis, profile: &ProfileTable) -> Result<(f64, f64)> {
    if basis.k == 0 || basis.solutions.len() != 4 {
        return Err(VortexError::Precondition(
            "wronskian_check needs a four-solution basis".into(),
        ));
    }
    let (kappa, dev) = wronskian_values(basis, profile);
    if dev > 1e-4 {
        return Err(VortexError::Integrity(format!(
            "Wronskian deviation {:.3e} exceeds 1e-4",
            dev
        )));
    }
    Ok((kappa, dev))
}

/// Largest component magnitude of a solution at node `i`.
fn magnitude(sol: &BasisSolution, i: usize) -> f64 {
    let v = sol.value(i);
    v[0].abs().max(v[1].abs())
}

/// Measured log-slopes at both ends against the tag exponents.
pub fn slope_checks(basis: &KernelBasis, profile: &ProfileTable) -> Vec<SlopeCheck> {
    let grid = &profile.grid;
    let nodes = grid.nodes();
    let n = nodes.len();
    let kf = basis.k as f64;
    let (i0, i1) = (0, grid.nearest(10.0 * nodes[0]));
    let (j0, j1) = (grid.nearest(0.75 * grid.r_max()), n - 1);
    let mut out = Vec::new();
    for (s, sol) in basis.solutions.iter().enumerate() {
        let f: Vec<f64> = (0..n).map(|i| magnitude(sol, i)).collect();
        let z = sol.at_zero;
        let mut measured = (f[i1] / f[i0]).ln() / (nodes[i1] / nodes[i0]).ln();
        if z.has_log(basis.k) {
            // d log|log r| / d log r between the two nodes
            measured -= (nodes[i1].ln() / nodes[i0].ln()).abs().ln() / (nodes[i1] / nodes[i0]).ln();
        }
        out.push(SlopeCheck {
            solution: s,
            tag: z.tag,
            expected: z.exponent,
            measured,
            ok: (measured - z.exponent).abs() <= 0.05 * z.exponent.abs().max(1.0),
        });
        let a = sol.at_inf;
        let (measured, expected) = if a.is_exponential() {
            // remove the r^{-1/2} prefactor; the rate of r^{-1/2}K_k(√2 r)-type
            // solutions at finite r is √(2 + k²/r²)
            let g = |i: usize| (f[i] * nodes[i].sqrt()).ln();
            let rm = 0.5 * (nodes[j0] + nodes[j1]);
            (
                (g(j1) - g(j0)) / (nodes[j1] - nodes[j0]),
                a.exponent.signum() * (2.0 + kf * kf / (rm * rm)).sqrt(),
            )
        } else {
            ((f[j1] / f[j0]).ln() / (nodes[j1] / nodes[j0]).ln(), a.exponent)
        };
        out.push(SlopeCheck {
            solution: s,
            tag: a.tag,
            expected,
            measured,
            ok: (measured - expected).abs() <= 0.05 * expected.abs().max(1.0),
        });
    }
    out
}

/// Marches the explicit mode-1 solution `(1/r, -w'/w)` from `r = 1` to `r = 8`
/// and returns the largest relative deviation of the first component.
pub fn z11_cross_check(basis: &KernelBasis, profile: &ProfileTable) -> Result<f64> {
    if basis.k != 1 {
        return Err(VortexError::Precondition("z11 cross-check needs the mode-1 basis".into()));
    }
    let sys = ModeSystem { k: 1.0, profile };
    let nodes = profile.grid.nodes();
    let j = profile.grid.nearest(1.0);
    let mut y = basis.solutions[0].state(j);
    let mut worst: f64 = 0.0;
    for m in j..profile.grid.nearest(8.0) {
        y = sys.march(y, nodes[m], nodes[m + 1], Some(m));
        let want = basis.solutions[0].value(m + 1);
        worst = worst.max((y[0] - want[0]).abs() / want[0].abs());
    }
    Ok(worst)
}

impl KernelBasis {
    /// Writes `r,z11,z12,z11p,z12p,...` with one group of four columns per solution.
    pub fn write_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        use std::io::Write;
        let path = path.as_ref();
        let io = |e| VortexError::io(path, e);
        let file = std::fs::File::create(path).map_err(io)?;
        let mut out = std::io::BufWriter::new(file);
        let mut header = String::from("r");
        for s in 1..=self.solutions.len() {
            header.push_str(&format!(",z{s}1,z{s}2,z{s}1p,z{s}2p"));
        }
        writeln!(out, "{}", header).map_err(io)?;
        let nodes = self.solutions[0].first.grid().nodes().to_vec();
        for (i, r) in nodes.iter().enumerate() {
            let mut line = format!("{:.16e}", r);
            for sol in &self.solutions {
                for v in sol.state(i) {
                    line.push_str(&format!(",{:.16e}", v));
                }
            }
            writeln!(out, "{}", line).map_err(io)?;
        }
        out.flush().map_err(io)
    }

    pub fn all_slopes_ok(&self) -> bool {
        self.diagnostics.slopes.iter().all(|s| s.ok)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::GridSpec;
    use crate::profile::solve_profile;
    use std::sync::OnceLock;

    fn profile() -> &'static ProfileTable {
        static T: OnceLock<ProfileTable> = OnceLock::new();
        T.get_or_init(|| solve_profile(RadialGrid::new(GridSpec::default()).unwrap(), 1e-8).unwrap())
    }

    #[test]
    fn zero_seed_leading_terms() {
        let p = profile();
        let r0 = p.grid.r_min();
        let s = seed_at_zero(2, Tag::RegularGrowthAtZero, p).unwrap();
        assert!(s[0] > 0.0 && s[1] > 0.0);
        assert!((s[0] / (r0 * r0) - 1.0).abs() < 1e-6);
        let s = seed_at_zero(1, Tag::BoundedAtZero, p).unwrap();
        assert!((s[0] * r0 - 1.0).abs() < 1e-6 && (s[1] * r0 + 1.0).abs() < 1e-6);
        assert!(matches!(
            seed_at_zero(1, Tag::InnerSingularAtZero, p),
            Err(VortexError::Config(_))
        ));
        assert!(matches!("nonsense".parse::<Tag>(), Err(VortexError::Config(_))));
    }

    #[test]
    fn zero_seed_consistent_with_marching() {
        let p = profile();
        let r0 = p.grid.r_min();
        for (k, tag) in [
            (1, Tag::RegularGrowthAtZero),
            (1, Tag::SingularAtZero),
            (2, Tag::BoundedAtZero),
            (3, Tag::RegularGrowthAtZero),
            (3, Tag::SingularAtZero),
        ] {
            let sys = ModeSystem { k: k as f64, profile: p };
            let start = zero_series(k, tag, 0.5 * r0).unwrap();
            let got = sys.march(start, 0.5 * r0, r0, None);
            let want = zero_series(k, tag, r0).unwrap();
            let vs = want[0].abs().max(want[1].abs());
            let ds = want[2].abs().max(want[3].abs()).max(vs / r0);
            let rel = (0..4)
                .map(|j| (got[j] - want[j]).abs() / if j < 2 { vs } else { ds })
                .fold(0.0, f64::max);
            assert!(rel < 1e3 * r0 * r0, "k={} {:?}: {}", k, tag, rel);
        }
    }

    #[test]
    fn infinity_seed_leading_terms() {
        let p = profile();
        let rn = p.grid.r_max();
        let s = seed_at_infinity(2, Tag::PolyDecayAtInf, p).unwrap();
        assert!((s[0] * rn * rn - 1.0).abs() < 1e-3);
        assert!((s[1] * rn.powi(4) + 2.0).abs() < 1e-2);
        let s = seed_at_infinity(1, Tag::ExpDecayAtInf, p).unwrap();
        let lead = rn.powf(-0.5) * (-SQRT2 * rn).exp();
        assert!((s[1] / lead - 1.0).abs() < 0.05);
    }

    #[test]
    fn poly_seed_keeps_slope_under_inward_march() {
        let p = profile();
        let rn = p.grid.r_max();
        let sys = ModeSystem { k: 3.0, profile: p };
        let s = seed_at_infinity(3, Tag::PolyDecayAtInf, p).unwrap();
        let y = sys.march(s, rn, rn - 2.0, None);
        let slope = (y[0] / s[0]).ln() / ((rn - 2.0) / rn).ln();
        assert!((slope + 3.0).abs() <= 0.15, "{}", slope);
    }

    #[test]
    fn mode0_kernel() {
        let p = profile();
        let b = build_mode0_kernel(p).unwrap();
        assert!((b.kappa + 1.0).abs() < 1e-8, "{}", b.kappa);
        assert!(b.diagnostics.max_residual <= 1e-7, "{}", b.diagnostics.max_residual);
        assert!(b.all_slopes_ok(), "{:?}", b.diagnostics.slopes);
        assert!(b.solutions[1].second.values().iter().all(|&v| v > 0.0));
        let quad = mode0_quadrature_z10(&b, p).unwrap();
        for (q, z) in quad.iter().zip(b.solutions[0].second.values()).step_by(7) {
            assert!((q / z - 1.0).abs() < 1e-6, "{} {}", q, z);
        }
    }

    #[test]
    fn mode1_kernel_and_explicit_solution() {
        let p = profile();
        let b = build_kernel(p, 1).unwrap();
        let i = p.grid.nearest(2.0);
        let (w, wp) = crate::profile::eval_profile(p, 2.0).unwrap();
        assert_eq!(b.solutions[0].value(i), [0.5, -wp / w]);
        assert!(b.diagnostics.max_residual <= 1e-6, "{:?}", b.diagnostics);
        assert!(b.all_slopes_ok(), "{:?}", b.diagnostics.slopes);
        let worst = z11_cross_check(&b, p).unwrap();
        assert!(worst <= 1e-6, "{}", worst);
    }

    #[test]
    fn kernels_up_to_eight() {
        let p = profile();
        for k in 1..=8 {
            let b = build_kernel(p, k).unwrap();
            let d = &b.diagnostics;
            assert!(d.max_residual <= 1e-6, "k={} {:?}", k, d.max_residual);
            assert!(d.wronskian_deviation <= 1e-4, "k={} {}", k, d.wronskian_deviation);
            assert!((d.pairing_z1_z2 + 1.0).abs() < 1e-9 && (d.pairing_z3_z4 + 1.0).abs() < 1e-9);
            assert!(b.all_slopes_ok(), "k={} {:?}", k, d.slopes);
        }
    }

    #[test]
    fn scaling_a_solution_scales_kappa() {
        let p = profile();
        let mut b = build_kernel(p, 2).unwrap();
        let (k1, d1) = wronskian_check(&b, p).unwrap();
        b.solutions[0] = b.solutions[0].scaled(2.0).unwrap();
        let (k2, d2) = wronskian_check(&b, p).unwrap();
        assert!((k2 / k1 - 2.0).abs() < 1e-12);
        assert!((d2 - d1).abs() < 1e-9);
    }

    #[test]
    fn growth_solution_is_exponential() {
        let p = profile();
        let b = build_kernel(p, 2).unwrap();
        let z3 = &b.solutions[2];
        let n = p.grid.len();
        let last = z3.value(n - 1);
        assert!(last[0] > 0.0 && last[1] > 0.0);
        let j = p.grid.nearest(35.0);
        let slope = (z3.value(n - 1)[1] / z3.value(j)[1]).ln() / (p.grid.r_max() - p.grid.nodes()[j]);
        assert!(slope >= SQRT2 * 0.95, "{}", slope);
        assert!((slope - SQRT2).abs() <= 0.02 * SQRT2, "{}", slope);
    }
}
