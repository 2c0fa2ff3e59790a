//! Acceptance suite: one line per criterion, nonzero exit on any failure.
//!
//! Run with `cargo test -p vortex-core --test acceptance`.

use serde_json::Value;
use vortex_core::config::RunConfig;
use vortex_core::verify::{evaluate, Context, CriterionResult};

// Thresholds are pinned here independently of the evaluators.
const PROFILE_RESIDUAL: f64 = 1e-8;
const W10: (f64, f64) = (0.995, 5e-4);
const WP10: (f64, f64) = (1e-3, 1.5e-4);
const ALPHA_DRIFT: f64 = 1e-7;
const GOLDEN_ALPHA: f64 = 0.5831894958603119;
const KERNEL_RESIDUAL: f64 = 1e-6;
const WRONSKIAN: f64 = 1e-4;
const Z11_CROSS: f64 = 1e-6;
const MANUFACTURED: f64 = 1e-5;
const KERNEL_FIELD_RESIDUAL: f64 = 1e-6;
const CORPUS_RESIDUAL: f64 = 5e-5;
const C_REC: f64 = 0.8204;
const C_REC_BAND: f64 = 0.10;
const NONORTH_PSI1: f64 = 1.05;
const BOUNDED: f64 = 0.05;
const MODE1_ZERO: f64 = 0.9;
const SMALL_R_TOL: f64 = 0.1;
const ORACLE_AGGREGATE: f64 = 3e-2;
const ORACLE_SINGLE: f64 = 2e-2;
const ORACLE_GAIN: (f64, f64) = (3.0, 5.0);
const FORM_FLOOR: f64 = -1e-8;
const TRANSLATION_FORM: f64 = 0.02;
const DIRICHLET_VARIATION: f64 = 0.15;

fn num(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or(f64::NAN)
}

fn rows<'a>(v: &'a Value, key: &str) -> &'a [Value] {
    v[key].as_array().map(Vec::as_slice).unwrap_or(&[])
}

fn nums(v: &Value, key: &str) -> Vec<f64> {
    rows(v, key).iter().map(|x| x.as_f64().unwrap_or(f64::NAN)).collect()
}

/// Independent re-check of the measured values; returns a reason on failure.
fn recheck(r: &CriterionResult) -> Option<String> {
    let m = &r.measured;
    let fail = |s: &str| Some(s.to_string());
    match r.id {
        1 => {
            if !(num(m, "residual") <= PROFILE_RESIDUAL) {
                return fail("profile residual");
            }
            if !((num(m, "w_10") - W10.0).abs() <= W10.1 && (num(m, "w_prime_10") - WP10.0).abs() <= WP10.1) {
                return fail("w(10) or w'(10)");
            }
            if !(num(m, "alpha_drift") <= ALPHA_DRIFT && (num(m, "alpha") - GOLDEN_ALPHA).abs() <= ALPHA_DRIFT) {
                return fail("alpha");
            }
        }
        2 => {
            let modes = rows(m, "modes");
            if modes.len() != 9 {
                return fail("expected modes 0..=8");
            }
            for row in modes {
                let ok = num(row, "residual") <= KERNEL_RESIDUAL
                    && num(row, "wronskian_deviation") <= WRONSKIAN
                    && row["slopes_ok"] == Value::Bool(true)
                    && row["positive"] == Value::Bool(true);
                if !ok {
                    return Some(format!("mode {}", row["k"]));
                }
            }
            if !(num(m, "z11_cross_check") <= Z11_CROSS) {
                return fail("z11 cross-check");
            }
        }
        3 => {
            let cases = rows(m, "cases");
            if cases.len() != 4 || cases.iter().any(|c| !(num(c, "error") <= MANUFACTURED)) {
                return fail("manufactured error");
            }
        }
        4 => {
            if ["iW", "dW_dx1", "dW_dx2"].iter().any(|k| !(num(m, k) <= KERNEL_FIELD_RESIDUAL)) {
                return fail("kernel field residual");
            }
        }
        5 => {
            let ratio = num(m, "max_ratio");
            if !(num(m, "max_residual_2d") <= CORPUS_RESIDUAL) {
                return fail("2-D residual");
            }
            if !(ratio <= (1.0 + C_REC_BAND) * C_REC && ratio >= (1.0 - C_REC_BAND) * C_REC) {
                return Some(format!("ratio {} outside the C_rec band", ratio));
            }
            if num(m, "count") != 20.0 {
                return fail("corpus size");
            }
        }
        6 => {
            let cases = rows(m, "cases");
            let ok = cases.len() == 5
                && cases.iter().all(|c| {
                    num(c, "growth_psi1") <= NONORTH_PSI1
                        && num(c, "growth_psi2") <= BOUNDED
                        && num(c, "orthogonality").abs() > 1e-3
                });
            if !ok {
                return fail("growth");
            }
        }
        7 => {
            let ok = rows(m, "cases").iter().all(|c| {
                num(c, "exponent_at_zero") >= MODE1_ZERO
                    && num(c, "growth_psi1") <= BOUNDED
                    && num(c, "growth_psi2") <= BOUNDED
            });
            if !ok {
                return fail("mode-1 estimate");
            }
        }
        8 => {
            for row in rows(m, "modes") {
                let x = num(row, "measured");
                if !(x >= num(row, "bound_low") - SMALL_R_TOL && x <= num(row, "bound_high") + SMALL_R_TOL) {
                    return Some(format!("k = {} exponent {}", row["k"], x));
                }
            }
        }
        9 => {
            let gain = num(m, "gain");
            if !(num(m, "aggregate") <= ORACLE_AGGREGATE) {
                return fail("aggregate error");
            }
            if nums(m, "single_errors").iter().any(|e| !(*e <= ORACLE_SINGLE)) {
                return fail("single-mode error");
            }
            if !(gain >= ORACLE_GAIN.0 && gain <= ORACLE_GAIN.1) {
                return Some(format!("refinement gain {}", gain));
            }
        }
        10 => {
            if !(num(m, "min_relative_form") >= FORM_FLOOR && num(m, "translation_ratio") <= TRANSLATION_FORM) {
                return fail("quadratic form");
            }
        }
        11 => {
            if !(num(m, "variation") <= DIRICHLET_VARIATION) {
                return fail("variation");
            }
        }
        _ => return fail("unknown criterion"),
    }
    None
}

fn main() {
    // `cargo test -- --list` and similar probes pass flags; nothing to enumerate
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let ctx = match Context::build(RunConfig::default(), false) {
        Ok(c) => c,
        Err(e) => {
            println!("[FAIL] setup: {}", e);
            std::process::exit(1);
        }
    };
    let mut failures = 0;
    for id in 1..=11 {
        let mut r = evaluate(&ctx, id);
        if r.passed {
            if let Some(reason) = recheck(&r) {
                r.passed = false;
                r.error = Some(format!("re-check: {}", reason));
            }
        }
        if !r.passed {
            failures += 1;
        }
        println!("{}", r.line());
    }
    println!("acceptance: {} of 11 criteria passed", 11 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
