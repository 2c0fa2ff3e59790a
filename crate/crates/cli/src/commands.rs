use std::path::Path;

use serde_json::{json, Value};
use vortex_core::config::RunConfig;
use vortex_core::disk_oracle::{assemble, compare_with_modes, solve_dirichlet_2d};
use vortex_core::homogeneous::{build_kernel, build_mode0_kernel, KernelBasis};
use vortex_core::mode_solver::{estimate_report, solve_any, solve_mode1, solve_mode_dirichlet, ModeRHS};
use vortex_core::numerics::RadialGrid;
use vortex_core::pipeline::{corpus_terms, estimate_corpus, field_from_terms, solve_field, KernelSet};
use vortex_core::profile::{solve_profile, ProfileTable};
use vortex_core::synthesis::{decompose, PolarField};
use vortex_core::verify::{run_all, Context, Golden};
use vortex_core::{Result, VortexError};

fn profile_for(cfg: &RunConfig) -> Result<ProfileTable> {
    solve_profile(RadialGrid::new(cfg.grid)?, cfg.profile_tol)
}

fn basis_for(profile: &ProfileTable, k: usize) -> Result<KernelBasis> {
    if k == 0 {
        build_mode0_kernel(profile)
    } else {
        build_kernel(profile, k)
    }
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    std::fs::write(path, text + "\n").map_err(|e| VortexError::io(path, e))
}

fn report(path: Option<&Path>, command: &str, cfg: &RunConfig, result: Value) -> Result<()> {
    match path {
        Some(p) => write_json(p, &json!({ "command": command, "config": cfg, "result": result })),
        None => Ok(()),
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

pub fn profile(cfg: RunConfig, out: &Path, rep: Option<&Path>) -> Result<bool> {
    let p = profile_for(&cfg)?;
    p.write_csv(out)?;
    report(rep, "profile", &cfg, to_value(&p.summary()))?;
    Ok(true)
}

pub fn kernel(cfg: RunConfig, mode: usize, out: &Path, rep: Option<&Path>) -> Result<bool> {
    let p = profile_for(&cfg)?;
    let b = basis_for(&p, mode)?;
    b.write_csv(out)?;
    report(rep, "kernel", &cfg, json!({ "kappa": b.kappa, "diagnostics": b.diagnostics }))?;
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
pub fn solve_mode(
    cfg: RunConfig,
    mode: usize,
    family: Option<u8>,
    rhs_path: &Path,
    dirichlet: Option<f64>,
    assume_orthogonal: bool,
    out: &Path,
    rep: Option<&Path>,
) -> Result<bool> {
    if (mode == 0) != family.is_none() || family.is_some_and(|l| l != 1 && l != 2) {
        return Err(VortexError::Config(
            "--family must be 1 or 2 for modes k >= 1 and absent for mode 0".into(),
        ));
    }
    let p = profile_for(&cfg)?;
    let rhs = ModeRHS::read_csv(rhs_path, p.grid.clone(), mode, family)?;
    let basis = basis_for(&p, mode)?;
    let sol = match dirichlet {
        Some(r) => solve_mode_dirichlet(&p, &basis, &rhs, r)?,
        None if mode == 1 => solve_mode1(&p, &basis, &rhs, assume_orthogonal)?,
        None => solve_any(&p, &basis, &rhs)?,
    };
    sol.write_csv(out)?;
    let est = estimate_report(&p, &sol, &rhs);
    report(rep, "solve-mode", &cfg, json!({ "diagnostics": sol.diagnostics, "estimate": est }))?;
    Ok(true)
}

pub fn solve(
    mut cfg: RunConfig,
    rhs_path: &Path,
    k_max: Option<usize>,
    project: bool,
    out: &Path,
    rep: Option<&Path>,
) -> Result<bool> {
    if let Some(k) = k_max {
        cfg.k_max = k;
    }
    let p = profile_for(&cfg)?;
    let h = PolarField::read_csv(rhs_path, p.grid.clone())?;
    let kernels = KernelSet::build(&p, cfg.k_max)?;
    let sol = solve_field(&h, &p, &kernels, cfg.k_max, project)?;
    sol.phi.write_csv(out)?;
    report(rep, "solve", &cfg, to_value(&sol.report))?;
    Ok(true)
}

pub fn oracle(
    mut cfg: RunConfig,
    radius: Option<f64>,
    n: Option<usize>,
    rhs_path: &Path,
    out: &Path,
    compare: Option<&Path>,
    k_max: Option<usize>,
) -> Result<bool> {
    cfg.oracle_radius = radius.unwrap_or(cfg.oracle_radius);
    cfg.oracle_n = n.unwrap_or(cfg.oracle_n);
    let p = profile_for(&cfg)?;
    let h = PolarField::read_csv(rhs_path, p.grid.clone())?;
    let sys = assemble(&p, cfg.oracle_radius, cfg.oracle_n)?;
    let phi = solve_dirichlet_2d(&sys, &sys.resample(&h)?)?;
    let comparison = match compare {
        Some(_) => {
            let k = k_max.unwrap_or_else(|| cfg.k_max.min((h.n_theta() - 4) / 4));
            let modes = decompose(&h, &p, k)?;
            let mut sols = Vec::new();
            for (k, l) in modes.families() {
                if modes.is_zero(k, l) {
                    continue;
                }
                let basis = basis_for(&p, k)?;
                sols.push(solve_mode_dirichlet(&p, &basis, &modes.rhs(k, l)?, cfg.oracle_radius)?);
            }
            Some(compare_with_modes(&phi, &sols, &p, cfg.oracle_radius)?)
        }
        None => None,
    };
    phi.write_csv(out)?;
    if let (Some(path), Some(c)) = (compare, comparison) {
        write_json(path, &json!({ "command": "oracle", "config": cfg, "result": c }))?;
    }
    Ok(true)
}

pub fn rhs(cfg: RunConfig, index: u64, project: bool, out: &Path) -> Result<bool> {
    let p = profile_for(&cfg)?;
    let seed = cfg.seed.wrapping_add(index);
    let h = if project {
        let kernels = KernelSet::build(&p, 1)?;
        estimate_corpus(&p, &kernels, 1, seed, cfg.corpus_modes, cfg.n_theta)?.remove(0)
    } else {
        field_from_terms(&corpus_terms(seed, cfg.corpus_modes), &p, cfg.n_theta)?
    };
    h.write_csv(out)?;
    Ok(true)
}

pub fn verify(cfg: RunConfig, quick: bool, rep: Option<&Path>) -> Result<bool> {
    let ctx = Context::build(cfg, quick)?;
    let summary = run_all(&ctx);
    for c in &summary.criteria {
        println!("{}", c.line());
    }
    let value = to_value(&summary);
    match rep {
        Some(p) => write_json(p, &value)?,
        None => println!("{}", serde_json::to_string_pretty(&value).expect("report serializes")),
    }
    Ok(summary.all_passed)
}

/// Richardson-extrapolated α from three nested grids and the corpus constant.
pub fn golden(cfg: RunConfig, out: &Path) -> Result<bool> {
    let g1 = RadialGrid::new(cfg.grid)?;
    let g2 = g1.refined()?;
    let g3 = g2.refined()?;
    let a2 = solve_profile(g2, cfg.profile_tol)?.alpha;
    let a3 = solve_profile(g3, cfg.profile_tol)?.alpha;
    let alpha = a3 + (a3 - a2) / 15.0;
    let ctx = Context::build(cfg.clone(), false)?;
    let hs = estimate_corpus(&ctx.profile, &ctx.kernels, cfg.corpus_size, cfg.seed, cfg.corpus_modes, cfg.n_theta)?;
    let mut c_rec: f64 = 0.0;
    for h in &hs {
        c_rec = c_rec.max(solve_field(h, &ctx.profile, &ctx.kernels, cfg.k_max, true)?.report.ratio);
    }
    write_json(out, &to_value(&Golden { alpha, c_rec }))?;
    Ok(true)
}
