//! Evaluators for the acceptance criteria. Each returns the measured
//! quantities, the pinned thresholds and a verdict; nothing here asserts.

use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::disk_oracle::{assemble, compare_with_modes, solve_dirichlet_2d, DiskField, DiskSystem};
use crate::error::Result;
use crate::homogeneous::{build_kernel, z11_cross_check};
use crate::mode_solver::{
    apply_mode_operator, gauge_projected_error, solve_any, solve_mode1, solve_mode_dirichlet, solve_mode_k,
    ModeRHS, ModeSolution,
};
use crate::numerics::{RadialFunction, RadialGrid};
use crate::pipeline::{estimate_corpus, project_orthogonal, random_compact_field, solve_field, KernelSet};
use crate::profile::{eval_profile, profile_residual, solve_profile, ProfileTable};
use crate::synthesis::{inner_product, kernel_fields, quad_form_parts, residual_2d, FourierField, PolarField};

/// Recorded constants that later builds must reproduce.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Golden {
    pub alpha: f64,
    /// Largest `‖φ‖_* / ‖h‖_**` over the estimate corpus.
    pub c_rec: f64,
}

impl Golden {
    pub fn recorded() -> Golden {
        serde_json::from_str(include_str!("../golden/golden.json")).expect("golden file parses")
    }
}

pub mod limits {
    pub const PROFILE_RESIDUAL: f64 = 1e-8;
    pub const W10: f64 = 0.995;
    pub const W10_TOL: f64 = 5e-4;
    pub const WP10: f64 = 1e-3;
    pub const WP10_TOL: f64 = 1.5e-4;
    pub const ALPHA_TOL: f64 = 1e-7;
    pub const PROFILE_SECONDS: f64 = 10.0;
    pub const KERNEL_RESIDUAL: f64 = 1e-6;
    pub const WRONSKIAN: f64 = 1e-4;
    pub const Z11_CROSS: f64 = 1e-6;
    pub const KERNEL_SECONDS: f64 = 60.0;
    pub const MANUFACTURED: f64 = 1e-5;
    pub const MANUFACTURED_SECONDS: f64 = 30.0;
    pub const KERNEL_FIELD_RESIDUAL: f64 = 1e-6;
    pub const CORPUS_RESIDUAL: f64 = 5e-5;
    pub const C_REC_BAND: f64 = 0.10;
    pub const CORPUS_SECONDS: f64 = 300.0;
    pub const NONORTH_GROWTH_PSI1: f64 = 1.05;
    pub const BOUNDED_GROWTH: f64 = 0.05;
    pub const MODE1_ZERO_EXPONENT: f64 = 0.9;
    pub const SMALL_R_EXPONENT_TOL: f64 = 0.1;
    pub const ORACLE_AGGREGATE: f64 = 3e-2;
    pub const ORACLE_SINGLE: f64 = 2e-2;
    pub const ORACLE_GAIN: (f64, f64) = (3.0, 5.0);
    pub const FORM_FLOOR: f64 = 1e-8;
    pub const TRANSLATION_FORM: f64 = 0.02;
    pub const DIRICHLET_VARIATION: f64 = 0.15;
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub measured: Value,
    pub error: Option<String>,
    #[serde(skip)]
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {:>2} {:<40} ({:.1} s){}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.seconds,
            self.error.as_ref().map(|e| format!(": {}", e)).unwrap_or_default()
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub config: RunConfig,
    pub quick: bool,
    pub golden: Golden,
    pub all_passed: bool,
    pub criteria: Vec<CriterionResult>,
}

/// Shared state: the profile on the configured grid and kernels up to `K`.
pub struct Context {
    pub config: RunConfig,
    pub quick: bool,
    pub golden: Golden,
    pub profile: ProfileTable,
    pub profile_seconds: f64,
    pub kernels: KernelSet,
    pub kernel_seconds: f64,
}

impl Context {
    pub fn build(config: RunConfig, quick: bool) -> Result<Context> {
        config.validate()?;
        let t = Instant::now();
        let profile = solve_profile(RadialGrid::new(config.grid)?, config.profile_tol)?;
        let profile_seconds = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let kernels = KernelSet::build(&profile, config.k_max.max(8))?;
        let kernel_seconds = t.elapsed().as_secs_f64();
        Ok(Context {
            config,
            quick,
            golden: Golden::recorded(),
            profile,
            profile_seconds,
            kernels,
            kernel_seconds,
        })
    }
}

pub const TITLES: [&str; 11] = [
    "profile fidelity",
    "kernel integrity",
    "manufactured-solution recovery",
    "kernel of L",
    "estimate corpus",
    "non-orthogonal mode-1 growth",
    "orthogonal mode-1 estimates",
    "small-r exponents for k >= 2",
    "finite-difference oracle",
    "quadratic form",
    "uniform-in-R Dirichlet stability",
];

/// Evaluates one criterion (1-based). Errors become failed results.
pub fn evaluate(ctx: &Context, id: u8) -> CriterionResult {
    let t = Instant::now();
    let out = match id {
        1 => profile_fidelity(ctx),
        2 => kernel_integrity(ctx),
        3 => manufactured_recovery(ctx),
        4 => kernel_of_l(ctx),
        5 => estimate_suite(ctx),
        6 => non_orthogonal_growth(ctx),
        7 => orthogonal_mode1(ctx),
        8 => small_r_exponents(ctx),
        9 => oracle_cross_validation(ctx),
        10 => quadratic_form(ctx),
        11 => dirichlet_stability(ctx),
        _ => Err(crate::error::VortexError::Config(format!("no criterion {}", id))),
    };
    let title = TITLES.get(id as usize - 1).copied().unwrap_or("unknown");
    let (passed, measured, error) = match out {
        Ok((p, m)) => (p, m, None),
        Err(e) => (false, Value::Null, Some(e.to_string())),
    };
    CriterionResult {
        id,
        title,
        passed,
        measured,
        error,
        seconds: t.elapsed().as_secs_f64(),
    }
}

pub fn run_all(ctx: &Context) -> Summary {
    let criteria: Vec<CriterionResult> = (1..=11).map(|id| evaluate(ctx, id)).collect();
    Summary {
        config: ctx.config.clone(),
        quick: ctx.quick,
        golden: ctx.golden,
        all_passed: criteria.iter().all(|c| c.passed),
        criteria,
    }
}

type Verdict = Result<(bool, Value)>;

fn profile_fidelity(ctx: &Context) -> Verdict {
    use limits::*;
    let p = &ctx.profile;
    let residual = profile_residual(p).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (w10, wp10) = eval_profile(p, 10.0)?;
    let refined = solve_profile(p.grid.refined()?, ctx.config.profile_tol)?;
    let drift = (refined.alpha - p.alpha).abs();
    let golden = (p.alpha - ctx.golden.alpha).abs();
    let runtime_ok = ctx.profile_seconds <= PROFILE_SECONDS;
    let passed = residual <= PROFILE_RESIDUAL
        && (w10 - W10).abs() <= W10_TOL
        && (wp10 - WP10).abs() <= WP10_TOL
        && drift <= ALPHA_TOL
        && golden <= ALPHA_TOL
        && runtime_ok;
    Ok((
        passed,
        json!({
            "residual": residual, "w_10": w10, "w_prime_10": wp10, "alpha": p.alpha,
            "alpha_refined": refined.alpha, "alpha_drift": drift, "alpha_vs_golden": golden,
            "runtime_ok": runtime_ok,
        }),
    ))
}

fn kernel_integrity(ctx: &Context) -> Verdict {
    use limits::*;
    let p = &ctx.profile;
    let mut rows = Vec::new();
    let mut passed = true;
    for k in 0..=8 {
        let b = ctx.kernels.get(k)?;
        let d = &b.diagnostics;
        let positive = b.solutions.iter().skip(if k == 0 { 0 } else { 2 }).all(|s| {
            let comps: Vec<&RadialFunction> = if k == 0 { vec![&s.second] } else { vec![&s.first, &s.second] };
            comps.iter().all(|c| c.values().iter().all(|&v| v > 0.0))
        });
        let wronskian_ok = k == 0 || d.wronskian_deviation <= WRONSKIAN;
        let ok = d.max_residual <= KERNEL_RESIDUAL && wronskian_ok && b.all_slopes_ok() && positive;
        passed &= ok;
        rows.push(json!({
            "k": k, "residual": d.max_residual, "wronskian_deviation": d.wronskian_deviation,
            "slopes_ok": b.all_slopes_ok(), "positive": positive,
        }));
    }
    let cross = z11_cross_check(ctx.kernels.get(1)?, p)?;
    // rebuild once to time the k <= 8 bases alone
    let t = Instant::now();
    for k in 1..=8 {
        build_kernel(p, k)?;
    }
    let runtime_ok = t.elapsed().as_secs_f64() <= KERNEL_SECONDS;
    passed &= cross <= Z11_CROSS && runtime_ok;
    Ok((passed, json!({ "modes": rows, "z11_cross_check": cross, "runtime_ok": runtime_ok })))
}

/// Relative error of recovering `ψ* = (r²e^{-r²}, ½r³e^{-r²})` from its image.
pub fn manufactured_error(profile: &ProfileTable, kernels: &KernelSet, k: usize, l: u8) -> Result<f64> {
    let g = &profile.grid;
    let nodes = g.nodes();
    let e = |r: f64| (-r * r).exp();
    let col = |f: &dyn Fn(f64) -> f64| nodes.iter().map(|&r| f(r)).collect::<Vec<_>>();
    let f = [col(&|r| r * r * e(r)), col(&|r| 0.5 * r.powi(3) * e(r))];
    let df = [
        col(&|r| (2.0 * r - 2.0 * r.powi(3)) * e(r)),
        col(&|r| 0.5 * (3.0 * r * r - 2.0 * r.powi(4)) * e(r)),
    ];
    let ddf = [
        col(&|r| (2.0 - 10.0 * r * r + 4.0 * r.powi(4)) * e(r)),
        col(&|r| 0.5 * (6.0 * r - 14.0 * r.powi(3) + 4.0 * r.powi(5)) * e(r)),
    ];
    let (h1, h2) = apply_mode_operator(profile, k, Some(l), [&f[0], &f[1]], [&df[0], &df[1]], [&ddf[0], &ddf[1]]);
    let rhs = ModeRHS::new(k, Some(l), RadialFunction::new(g.clone(), h1)?, RadialFunction::new(g.clone(), h2)?)?;
    let basis = kernels.get(k)?;
    let s = solve_any(profile, basis, &rhs)?;
    gauge_projected_error(profile, basis, &s, [&f[0], &f[1]], &[], &[])
}

fn manufactured_recovery(ctx: &Context) -> Verdict {
    use limits::*;
    let t = Instant::now();
    let mut rows = Vec::new();
    let mut passed = true;
    for (k, l) in [(1usize, 1u8), (2, 2), (3, 1), (5, 2)] {
        let e = manufactured_error(&ctx.profile, &ctx.kernels, k, l)?;
        passed &= e <= MANUFACTURED;
        rows.push(json!({ "k": k, "l": l, "error": e }));
    }
    let runtime_ok = t.elapsed().as_secs_f64() <= MANUFACTURED_SECONDS;
    Ok((passed && runtime_ok, json!({ "cases": rows, "runtime_ok": runtime_ok })))
}

fn kernel_of_l(ctx: &Context) -> Verdict {
    let fields = kernel_fields(&ctx.profile, ctx.config.n_theta)?;
    let zero = PolarField::zeros(ctx.profile.grid.clone(), ctx.config.n_theta)?;
    let res = fields
        .iter()
        .map(|f| residual_2d(f, &zero, &ctx.profile))
        .collect::<Result<Vec<_>>>()?;
    let passed = res.iter().all(|&r| r <= limits::KERNEL_FIELD_RESIDUAL);
    Ok((passed, json!({ "iW": res[0], "dW_dx1": res[1], "dW_dx2": res[2] })))
}

fn estimate_suite(ctx: &Context) -> Verdict {
    use limits::*;
    let t = Instant::now();
    let cfg = &ctx.config;
    let count = if ctx.quick { cfg.corpus_size.min(5) } else { cfg.corpus_size };
    let hs = estimate_corpus(&ctx.profile, &ctx.kernels, count, cfg.seed, cfg.corpus_modes, cfg.n_theta)?;
    let (mut ratio, mut residual) = (0.0f64, 0.0f64);
    let mut ratios = Vec::with_capacity(count);
    for h in &hs {
        let s = solve_field(h, &ctx.profile, &ctx.kernels, cfg.k_max, true)?;
        ratio = ratio.max(s.report.ratio);
        residual = residual.max(s.report.residual_2d);
        ratios.push(s.report.ratio);
    }
    let c = ctx.golden.c_rec;
    let upper = ratio <= (1.0 + C_REC_BAND) * c;
    // a subset of the corpus need not reach the recorded maximum
    let lower = ctx.quick || ratio >= (1.0 - C_REC_BAND) * c;
    let runtime_ok = t.elapsed().as_secs_f64() <= CORPUS_SECONDS;
    Ok((
        residual <= CORPUS_RESIDUAL && upper && lower && runtime_ok,
        json!({
            "count": count, "max_ratio": ratio, "c_rec": c, "max_residual_2d": residual,
            "ratios": ratios, "runtime_ok": runtime_ok,
        }),
    ))
}

fn bump(c: f64, s: f64) -> impl Fn(f64) -> f64 {
    move |r: f64| (-((r - c) / s).powi(2)).exp()
}

fn non_orthogonal_growth(ctx: &Context) -> Verdict {
    use limits::*;
    let p = &ctx.profile;
    let basis = ctx.kernels.get(1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.config.seed.wrapping_add(600));
    let mut rows = Vec::new();
    let mut passed = true;
    for case in 0..5 {
        let l = if case % 2 == 0 { 1u8 } else { 2 };
        let (a, b) = (rng.random_range(0.5..1.5), rng.random_range(-1.0..1.0));
        let f1 = bump(rng.random_range(0.5..3.0), rng.random_range(0.5..1.5));
        let f2 = bump(rng.random_range(0.5..3.0), rng.random_range(0.5..1.5));
        let rhs = ModeRHS::from_fn(&p.grid, 1, Some(l), |r| a * f1(r), |r| b * f2(r))?;
        let s = solve_mode1(p, basis, &rhs, false)?;
        let orth = s.diagnostics.orthogonality.unwrap_or(0.0);
        let [g1, g2] = s.diagnostics.growth_at_inf;
        let ok = orth.abs() > 1e-3 && g1 <= NONORTH_GROWTH_PSI1 && g2 <= BOUNDED_GROWTH;
        passed &= ok;
        rows.push(json!({ "l": l, "orthogonality": orth, "growth_psi1": g1, "growth_psi2": g2 }));
    }
    Ok((passed, json!({ "cases": rows })))
}

/// Log-slope of `max(|ψ1|, |ψ2|)` between the nodes nearest `r0` and `r1`.
fn log_slope(sol: &ModeSolution, r0: f64, r1: f64) -> f64 {
    let g = sol.grid();
    let (i0, i1) = (g.nearest(r0), g.nearest(r1));
    let mag = |i: usize| sol.psi1.values()[i].abs().max(sol.psi2.values()[i].abs());
    let nodes = g.nodes();
    (mag(i1) / mag(i0)).ln() / (nodes[i1] / nodes[i0]).ln()
}

/// Log-slope of `|log r|` over the same window.
fn log_factor_slope(r0: f64, r1: f64) -> f64 {
    (r1.ln().abs() / r0.ln().abs()).ln() / (r1 / r0).ln()
}

const SMALL_R_WINDOW: (f64, f64) = (1e-3, 1e-2);

fn orthogonal_mode1(ctx: &Context) -> Verdict {
    use limits::*;
    let p = &ctx.profile;
    let basis = ctx.kernels.get(1)?;
    let mut modes = FourierField::zeros(p.grid.clone(), 1);
    let col = |f: &dyn Fn(f64) -> f64| p.grid.nodes().iter().map(|&r| f(r)).collect::<Vec<_>>();
    let (b1, b2) = (bump(1.5, 1.0), bump(2.5, 0.7));
    modes.set(1, Some(1), [col(&|r| b1(r) + 0.3 * b2(r)), col(&|r| -0.5 * b2(r))])?;
    modes.set(1, Some(2), [col(&|r| 0.7 * b2(r)), col(&|r| b1(r))])?;
    let before = project_orthogonal(&mut modes, p, basis)?;
    let (r0, r1) = SMALL_R_WINDOW;
    let mut rows = Vec::new();
    let mut passed = true;
    for l in [1u8, 2] {
        let rhs = modes.rhs(1, Some(l))?;
        let s = solve_mode1(p, basis, &rhs, true)?;
        // exponent of |ψ| / |log r|
        let exponent = log_slope(&s, r0, r1) - log_factor_slope(r0, r1);
        let [g1, g2] = s.diagnostics.growth_at_inf;
        passed &= exponent >= MODE1_ZERO_EXPONENT && g1 <= BOUNDED_GROWTH && g2 <= BOUNDED_GROWTH;
        rows.push(json!({
            "l": l, "orthogonality_before": before[l as usize - 1],
            "orthogonality_after": s.diagnostics.orthogonality,
            "exponent_at_zero": exponent, "growth_psi1": g1, "growth_psi2": g2,
        }));
    }
    Ok((passed, json!({ "cases": rows })))
}

fn small_r_exponents(ctx: &Context) -> Verdict {
    use limits::*;
    let p = &ctx.profile;
    let (r0, r1) = SMALL_R_WINDOW;
    let b = bump(1.5, 1.0);
    let mut rows = Vec::new();
    let mut passed = true;
    for k in 2..=8usize {
        let rhs = ModeRHS::from_fn(&p.grid, k, Some(1), |r| b(r) / r, |r| b(r) / r)?;
        let s = solve_mode_k(p, ctx.kernels.get(k)?, &rhs)?;
        let measured = log_slope(&s, r0, r1);
        // bound exponents C, C r|log r|, C r; the k = 3 log factor lowers the
        // slope the bound itself has over the window
        let (lo, hi) = match k {
            2 => (0.0, 0.0),
            3 => (1.0 + log_factor_slope(r0, r1), 1.0),
            _ => (1.0, 1.0),
        };
        let ok = measured >= lo - SMALL_R_EXPONENT_TOL && measured <= hi + SMALL_R_EXPONENT_TOL;
        passed &= ok;
        rows.push(json!({ "k": k, "measured": measured, "bound_low": lo, "bound_high": hi }));
    }
    Ok((passed, json!({ "modes": rows })))
}

const ORACLE_FAMILIES: [(usize, Option<u8>); 6] =
    [(0, None), (1, Some(1)), (1, Some(2)), (2, Some(1)), (3, Some(2)), (4, Some(1))];

fn oracle_datum(k: usize) -> (impl Fn(f64) -> f64, impl Fn(f64) -> f64) {
    let e = (k.max(1) - 1) as i32;
    (
        move |r: f64| r.powi(e) * (-r * r / 4.0).exp(),
        move |r: f64| 0.5 * r.powi(e) * (-(r - 1.0).powi(2) / 2.0).exp(),
    )
}

/// `iW·ψ̃` on the oracle grid for one family of the oracle datum.
fn oracle_rhs(sys: &DiskSystem, k: usize, l: Option<u8>) -> DiskField {
    let (f1, f2) = oracle_datum(k);
    let n = sys.n;
    let mut values = Vec::with_capacity(n * n);
    for (i, &r) in sys.radii.iter().enumerate() {
        let w = sys.profile_values()[i];
        let (a, b) = (f1(r), f2(r));
        for j in 0..n {
            let t = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            let (s, c) = (k as f64 * t).sin_cos();
            let psi = match l {
                None => Complex64::new(a, b),
                Some(1) => Complex64::new(a * c, b * s),
                _ => Complex64::new(a * s, b * c),
            };
            values.push(Complex64::new(0.0, w) * Complex64::from_polar(1.0, t) * psi);
        }
    }
    DiskField {
        radii: sys.radii.clone(),
        n_theta: n,
        values,
    }
}

fn oracle_cross_validation(ctx: &Context) -> Verdict {
    use limits::*;
    let p = &ctx.profile;
    let radius = ctx.config.oracle_radius;
    let n = ctx.config.oracle_n;
    let modes = ORACLE_FAMILIES
        .iter()
        .map(|&(k, l)| {
            let (f1, f2) = oracle_datum(k);
            let rhs = ModeRHS::from_fn(&p.grid, k, l, f1, f2)?;
            solve_mode_dirichlet(p, ctx.kernels.get(k)?, &rhs, radius)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut levels = Vec::new();
    for m in [n, 2 * n] {
        let sys = assemble(p, radius, m)?;
        let mut singles = Vec::new();
        let mut total: Option<DiskField> = None;
        for (&(k, l), mode) in ORACLE_FAMILIES.iter().zip(&modes) {
            let h = oracle_rhs(&sys, k, l);
            let phi = solve_dirichlet_2d(&sys, &h)?;
            let rep = compare_with_modes(&phi, std::slice::from_ref(mode), p, radius)?;
            singles.push(rep.families[0].error.max(rep.spurious));
            match total.as_mut() {
                None => total = Some(h),
                Some(t) => t.values.iter_mut().zip(&h.values).for_each(|(a, b)| *a += b),
            }
        }
        let phi = solve_dirichlet_2d(&sys, total.as_ref().expect("families"))?;
        let aggregate = compare_with_modes(&phi, &modes, p, radius)?.aggregate;
        levels.push((singles, aggregate));
    }
    let gain = levels[0].1 / levels[1].1;
    let single_ok = levels[0].0.iter().all(|&e| e <= ORACLE_SINGLE);
    let passed = single_ok && levels[0].1 <= ORACLE_AGGREGATE && gain >= ORACLE_GAIN.0 && gain <= ORACLE_GAIN.1;
    Ok((
        passed,
        json!({
            "radius": radius, "n": n, "single_errors": levels[0].0, "aggregate": levels[0].1,
            "single_errors_refined": levels[1].0, "aggregate_refined": levels[1].1, "gain": gain,
        }),
    ))
}

fn quadratic_form(ctx: &Context) -> Verdict {
    use limits::*;
    let p = &ctx.profile;
    let count = if ctx.quick { 10 } else { 50 };
    let radius = 10.0;
    let mut worst = f64::INFINITY;
    for c in 0..count {
        let f = random_compact_field(&p.grid, 64, radius, ctx.config.seed.wrapping_add(c))?;
        let (b, g) = quad_form_parts(&f, radius, p)?;
        let scale = g + inner_product(&f, &f, radius)?;
        worst = worst.min(b / scale);
    }
    let fields = kernel_fields(p, 64)?;
    let (b, g) = quad_form_parts(&fields[1], 30.0, p)?;
    let translation = b.abs() / g;
    Ok((
        worst >= -FORM_FLOOR && translation <= TRANSLATION_FORM,
        json!({ "fields": count, "min_relative_form": worst, "translation_ratio": translation }),
    ))
}

fn dirichlet_stability(ctx: &Context) -> Verdict {
    use limits::*;
    let p = &ctx.profile;
    let k = 3;
    let b = bump(1.5, 1.0);
    let rhs = ModeRHS::from_fn(&p.grid, k, Some(1), &b, |r| 0.5 * b(r))?;
    let nodes = p.grid.nodes();
    let mut sups = Vec::new();
    for radius in [10.0, 20.0, 40.0] {
        let s = solve_mode_dirichlet(p, ctx.kernels.get(k)?, &rhs, radius)?;
        let sup = (0..nodes.len())
            .filter(|&i| nodes[i] <= radius * (1.0 + 1e-12))
            .map(|i| s.psi1.values()[i].abs().max(s.psi2.values()[i].abs()))
            .fold(0.0, f64::max);
        sups.push(sup);
    }
    let hi = sups.iter().cloned().fold(0.0, f64::max);
    let lo = sups.iter().cloned().fold(f64::INFINITY, f64::min);
    let variation = (hi - lo) / hi;
    Ok((variation <= DIRICHLET_VARIATION, json!({ "k": k, "sups": sups, "variation": variation })))
}
