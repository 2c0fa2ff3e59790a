//! Per-mode inversion by variation of parameters.
//!
//! With `p = w² r` and a basis normalized to `[z1, z2] = [z3, z4] = -1`, the
//! coefficients of `ψ = Σ c_i z_i` obey `c1' = p h̃·z2`, `c2' = -p h̃·z1`,
//! `c3' = p h̃·z4`, `c4' = -p h̃·z3`.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Result, VortexError};
use crate::homogeneous::{pairing, KernelBasis};
use crate::numerics::{
    cumulative_from_samples, read_table, tail_from_samples, Head, RadialFunction, RadialGrid,
    TailDecay,
};
use crate::profile::ProfileTable;

const SQRT2: f64 = std::f64::consts::SQRT_2;
/// Default scaled residual tolerance for a mode solve.
pub const RESIDUAL_TOL: f64 = 1e-6;
/// Orthogonality test threshold relative to the per-mode `‖h‖_**`.
pub const ORTHOGONALITY_TOL: f64 = 1e-6;
/// Nodes skipped at each end when evaluating finite-difference residuals.
const EDGE: usize = 3;

/// Right-hand side of one Fourier family in ψ-form.
#[derive(Debug, Clone)]
pub struct ModeRHS {
    pub k: usize,
    /// Parity family, 1 or 2; `None` for `k = 0`.
    pub l: Option<u8>,
    pub h1: RadialFunction,
    pub h2: RadialFunction,
    /// Declared small-r exponent of `h̃`; must be at least -1.
    pub head_exponent: f64,
}

impl ModeRHS {
    pub fn new(k: usize, l: Option<u8>, h1: RadialFunction, h2: RadialFunction) -> Result<Self> {
        match (k, l) {
            (0, None) | (1.., Some(1)) | (1.., Some(2)) => {}
            _ => {
                return Err(VortexError::Config(format!(
                    "invalid parity {:?} for mode {}",
                    l, k
                )))
            }
        }
        if !h1.same_grid(&h2) {
            return Err(VortexError::GridMismatch("h1 and h2 live on different grids".into()));
        }
        Ok(ModeRHS {
            k,
            l,
            h1,
            h2,
            head_exponent: -1.0,
        })
    }

    pub fn from_fn(
        grid: &Arc<RadialGrid>,
        k: usize,
        l: Option<u8>,
        f1: impl Fn(f64) -> f64,
        f2: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        Self::new(
            k,
            l,
            RadialFunction::from_fn(grid.clone(), f1)?,
            RadialFunction::from_fn(grid.clone(), f2)?,
        )
    }

    pub fn zeros(grid: &Arc<RadialGrid>, k: usize, l: Option<u8>) -> Result<Self> {
        Self::from_fn(grid, k, l, |_| 0.0, |_| 0.0)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.h1.grid()
    }

    /// Right-hand side of the standard system: `(h1, h2)`, or `(h1, -h2)` for `l = 2`.
    fn tilde(&self) -> (Vec<f64>, Vec<f64>) {
        let sign = if self.l == Some(2) { -1.0 } else { 1.0 };
        (
            self.h1.values().to_vec(),
            self.h2.values().iter().map(|v| sign * v).collect(),
        )
    }

    /// Reads `r,h1,h2` on the given grid.
    pub fn read_csv(path: impl AsRef<Path>, grid: Arc<RadialGrid>, k: usize, l: Option<u8>) -> Result<Self> {
        let path = path.as_ref();
        let rows = read_table(path)?;
        if rows.len() != grid.len() || rows.iter().any(|r| r.len() != 3) {
            return Err(VortexError::GridMismatch(format!(
                "{} must have columns r,h1,h2 on the {}-node grid",
                path.display(),
                grid.len()
            )));
        }
        for (row, r) in rows.iter().zip(grid.nodes()) {
            if (row[0] - r).abs() > 1e-12 * r.max(1.0) {
                return Err(VortexError::GridMismatch(format!(
                    "{}: radius {} does not match grid node {}",
                    path.display(),
                    row[0],
                    r
                )));
            }
        }
        let h1 = RadialFunction::new(grid.clone(), rows.iter().map(|r| r[1]).collect())?;
        let h2 = RadialFunction::new(grid, rows.iter().map(|r| r[2]).collect())?;
        Self::new(k, l, h1, h2)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_columns(
            path.as_ref(),
            "r,h1,h2",
            self.grid().nodes(),
            &[self.h1.values(), self.h2.values()],
        )
    }
}

fn write_columns(path: &Path, header: &str, r: &[f64], cols: &[&[f64]]) -> Result<()> {
    let io = |e| VortexError::io(path, e);
    let file = std::fs::File::create(path).map_err(io)?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "{}", header).map_err(io)?;
    for i in 0..r.len() {
        let mut line = format!("{:.16e}", r[i]);
        for c in cols {
            line.push_str(&format!(",{:.16e}", c[i]));
        }
        writeln!(out, "{}", line).map_err(io)?;
    }
    out.flush().map_err(io)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ModeDiagnostics {
    pub residual: f64,
    pub orthogonality: Option<f64>,
    /// Log-slope of `|ψ|` over the first decade of the grid.
    pub growth_at_zero: f64,
    /// Log-slopes of `|ψ1|`, `|ψ2|` over `[r_max/2, r_max]`.
    pub growth_at_inf: [f64; 2],
    pub tail_warnings: Vec<String>,
    pub dirichlet_radius: Option<f64>,
}

/// Solution of one Fourier family; derivatives attached to both components.
#[derive(Debug, Clone)]
pub struct ModeSolution {
    pub k: usize,
    pub l: Option<u8>,
    pub psi1: RadialFunction,
    pub psi2: RadialFunction,
    pub diagnostics: ModeDiagnostics,
}

impl ModeSolution {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.psi1.grid()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_columns(
            path.as_ref(),
            "r,psi1,psi2,dpsi1,dpsi2",
            self.grid().nodes(),
            &[
                self.psi1.values(),
                self.psi2.values(),
                self.psi1.derivs().unwrap(),
                self.psi2.derivs().unwrap(),
            ],
        )
    }

    /// Standard-system state `(ψ̃1, ψ̃2, ψ̃1', ψ̃2')` at node `i`.
    pub fn tilde_state(&self, i: usize) -> [f64; 4] {
        let s = if self.l == Some(2) { -1.0 } else { 1.0 };
        [
            self.psi1.values()[i],
            s * self.psi2.values()[i],
            self.psi1.derivs().unwrap()[i],
            s * self.psi2.derivs().unwrap()[i],
        ]
    }

    fn from_tilde(
        k: usize,
        l: Option<u8>,
        grid: &Arc<RadialGrid>,
        v: [Vec<f64>; 4],
    ) -> Result<Self> {
        let [a, mut b, da, mut db] = v;
        if l == Some(2) {
            b.iter_mut().for_each(|x| *x = -*x);
            db.iter_mut().for_each(|x| *x = -*x);
        }
        Ok(ModeSolution {
            k,
            l,
            psi1: RadialFunction::with_derivs(grid.clone(), a, da)?,
            psi2: RadialFunction::with_derivs(grid.clone(), b, db)?,
            diagnostics: ModeDiagnostics::default(),
        })
    }
}

/// Measured constant of the a-priori estimate for one solve.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct EstimateReport {
    pub norm_star_value: f64,
    pub norm_dstar_value: f64,
    pub ratio: f64,
    pub psi_inner_sup: f64,
    pub psi1_outer_sup: f64,
    pub psi2_outer_sup: f64,
    pub h_inner_sup: f64,
    pub h1_outer_sup: f64,
    pub h2_outer_sup: f64,
}

fn weights_p(profile: &ProfileTable) -> Vec<f64> {
    profile
        .grid
        .nodes()
        .iter()
        .zip(profile.w.values())
        .map(|(r, w)| w * w * r)
        .collect()
}

fn check_rhs(profile: &ProfileTable, rhs: &ModeRHS) -> Result<()> {
    if !(Arc::ptr_eq(rhs.grid(), &profile.grid) || **rhs.grid() == *profile.grid) {
        return Err(VortexError::GridMismatch(
            "right-hand side and profile live on different grids".into(),
        ));
    }
    if rhs.head_exponent < -1.0 {
        return Err(VortexError::Domain(format!(
            "declared small-r exponent {} of h is below -1",
            rhs.head_exponent
        )));
    }
    Ok(())
}

/// `∫_r^∞ g` for an integrand `g = p h̃·z` with algebraic decay. Beyond
/// `r_max` the samples are fitted by `A r^-(k+1) + B r^-(k+2)`, the slowest
/// decay allowed by `‖h‖_**`, which keeps the map linear in `g`.
fn algebraic_tail(grid: &RadialGrid, g: &[f64], k: usize, warnings: &mut Vec<String>) -> Result<Vec<f64>> {
    let (mut v, _) = tail_from_samples(grid, g, TailDecay::None)?;
    let nodes = grid.nodes();
    let n = nodes.len();
    let j = grid.nearest(0.8 * nodes[n - 1]);
    let (ra, rb) = (nodes[j], nodes[n - 1]);
    let (q1, q2) = (k as f64 + 1.0, k as f64 + 2.0);
    // [ra^-q1 ra^-q2; rb^-q1 rb^-q2] (A, B) = (g_a, g_b)
    let m = [[ra.powf(-q1), ra.powf(-q2)], [rb.powf(-q1), rb.powf(-q2)]];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let a = (g[j] * m[1][1] - g[n - 1] * m[0][1]) / det;
    let b = (m[0][0] * g[n - 1] - m[1][0] * g[j]) / det;
    let tail = a * rb.powf(1.0 - q1) / (q1 - 1.0) + b * rb.powf(1.0 - q2) / (q2 - 1.0);
    if g[j] != 0.0 && g[n - 1] != 0.0 && g[j].signum() == g[n - 1].signum() {
        let measured = -(g[n - 1] / g[j]).ln() / (rb / ra).ln();
        if measured < q1 - 0.25 {
            warnings.push(format!(
                "integrand decays like r^-{:.3}, slower than the modelled r^-{}",
                measured, q1
            ));
        }
    }
    v.iter_mut().for_each(|x| *x += tail);
    Ok(v)
}

fn tail_with_warning(
    grid: &RadialGrid,
    g: &[f64],
    decay: TailDecay,
    warnings: &mut Vec<String>,
) -> Result<Vec<f64>> {
    let (v, rep) = tail_from_samples(grid, g, decay)?;
    if let Some(w) = rep.warning {
        warnings.push(w);
    }
    Ok(v)
}

fn dot_weighted(p: &[f64], h1: &[f64], h2: &[f64], z: &crate::homogeneous::BasisSolution) -> Vec<f64> {
    let (z1, z2) = (z.first.values(), z.second.values());
    (0..p.len())
        .map(|i| p[i] * (h1[i] * z1[i] + h2[i] * z2[i]))
        .collect()
}

/// Solves the mode-0 pair `(pψ1')'/p = h1⁰` and `ψ2'' + Pψ2' - 2w²ψ2 = h2⁰`.
pub fn solve_mode0(profile: &ProfileTable, kernel0: &KernelBasis, h0: &ModeRHS) -> Result<ModeSolution> {
    check_rhs(profile, h0)?;
    if h0.k != 0 || kernel0.k != 0 {
        return Err(VortexError::Config("solve_mode0 needs mode-0 data".into()));
    }
    let grid = &profile.grid;
    let p = weights_p(profile);
    let mut warnings = Vec::new();
    let (h1, h2) = h0.tilde();
    let g: Vec<f64> = p.iter().zip(&h1).map(|(p, h)| p * h).collect();
    let inner = cumulative_from_samples(grid, &g, Head::Auto)?;
    let dpsi1: Vec<f64> = inner.iter().zip(&p).map(|(i, p)| i / p).collect();
    let psi1 = cumulative_from_samples(grid, &dpsi1, Head::Auto)?;

    let (z10, z20) = (&kernel0.solutions[0].second, &kernel0.solutions[1].second);
    let ga: Vec<f64> = (0..p.len()).map(|i| p[i] * h2[i] * z20.values()[i]).collect();
    let gb: Vec<f64> = (0..p.len()).map(|i| p[i] * h2[i] * z10.values()[i]).collect();
    let a = tail_with_warning(grid, &ga, TailDecay::Exponential(SQRT2), &mut warnings)?;
    let b = cumulative_from_samples(grid, &gb, Head::Auto)?;
    let (v1, d1) = (z10.values(), z10.derivs().unwrap());
    let (v2, d2) = (z20.values(), z20.derivs().unwrap());
    let psi2: Vec<f64> = (0..p.len()).map(|i| -(v1[i] * a[i] + v2[i] * b[i])).collect();
    let dpsi2: Vec<f64> = (0..p.len()).map(|i| -(d1[i] * a[i] + d2[i] * b[i])).collect();

    let mut sol = ModeSolution::from_tilde(0, None, grid, [psi1, psi2, dpsi1, dpsi2])?;
    sol.diagnostics.tail_warnings = warnings;
    finish(profile, &mut sol, h0)?;
    Ok(sol)
}

/// `∫_0^∞ w² s h̃·z_{1,1} ds` including the analytic tail beyond `r_max`.
pub fn orthogonality_integral(profile: &ProfileTable, basis: &KernelBasis, rhs: &ModeRHS) -> Result<f64> {
    check_rhs(profile, rhs)?;
    if basis.k != 1 || rhs.k != 1 {
        return Err(VortexError::Config("orthogonality_integral needs k = 1".into()));
    }
    let p = weights_p(profile);
    let (h1, h2) = rhs.tilde();
    let g = dot_weighted(&p, &h1, &h2, &basis.solutions[0]);
    let v = algebraic_tail(&profile.grid, &g, 1, &mut Vec::new())?;
    // add the piece on [0, r_min]
    let head = cumulative_from_samples(&profile.grid, &g, Head::Auto)?[0];
    Ok(v[0] + head)
}

fn represent(
    profile: &ProfileTable,
    basis: &KernelBasis,
    rhs: &ModeRHS,
    exchange: bool,
) -> Result<ModeSolution> {
    let grid = &profile.grid;
    let n = grid.len();
    let p = weights_p(profile);
    let (h1, h2) = rhs.tilde();
    let z = &basis.solutions;
    let g: Vec<Vec<f64>> = z.iter().map(|s| dot_weighted(&p, &h1, &h2, s)).collect();
    let mut warnings = Vec::new();
    let c1 = cumulative_from_samples(grid, &g[1], Head::Auto)?;
    let c2: Vec<f64> = if exchange && rhs.k == 1 {
        // ∫_r^∞ = ∫_0^∞ - ∫_0^r keeps round-off off the singular z_{2,1} near 0
        let tail = algebraic_tail(grid, &g[0], 1, &mut warnings)?;
        let cum = cumulative_from_samples(grid, &g[0], Head::Auto)?;
        let total = tail[0] + cum[0];
        cum.into_iter().map(|v| total - v).collect()
    } else if exchange {
        algebraic_tail(grid, &g[0], rhs.k, &mut warnings)?
    } else {
        cumulative_from_samples(grid, &g[0], Head::Auto)?
            .into_iter()
            .map(|v| -v)
            .collect()
    };
    let c3: Vec<f64> = tail_with_warning(grid, &g[3], TailDecay::Exponential(SQRT2), &mut warnings)?
        .into_iter()
        .map(|v| -v)
        .collect();
    let c4: Vec<f64> = cumulative_from_samples(grid, &g[2], Head::Auto)?
        .into_iter()
        .map(|v| -v)
        .collect();
    let coef = [c1, c2, c3, c4];
    let mut out: [Vec<f64>; 4] = Default::default();
    for (j, o) in out.iter_mut().enumerate() {
        *o = (0..n)
            .map(|i| (0..4).map(|s| coef[s][i] * z[s].state(i)[j]).sum())
            .collect();
    }
    let mut sol = ModeSolution::from_tilde(rhs.k, rhs.l, grid, out)?;
    sol.diagnostics.tail_warnings = warnings;
    Ok(sol)
}

/// Mode-1 particular solution. With `assume_orthogonal` the `z_{2,1}`
/// coefficient is taken as `+∫_r^∞` instead of `-∫_0^r`.
pub fn solve_mode1(
    profile: &ProfileTable,
    basis: &KernelBasis,
    rhs: &ModeRHS,
    assume_orthogonal: bool,
) -> Result<ModeSolution> {
    check_rhs(profile, rhs)?;
    if basis.k != 1 || rhs.k != 1 {
        return Err(VortexError::Config("solve_mode1 needs k = 1".into()));
    }
    let orth = orthogonality_integral(profile, basis, rhs)?;
    if assume_orthogonal {
        let scale = mode_norm_dstar(profile, rhs);
        if orth.abs() > ORTHOGONALITY_TOL * scale.max(f64::MIN_POSITIVE) && orth != 0.0 {
            return Err(VortexError::Precondition(format!(
                "orthogonality integral {:.3e} exceeds {:.1e}·‖h‖_** = {:.3e}",
                orth,
                ORTHOGONALITY_TOL,
                ORTHOGONALITY_TOL * scale
            )));
        }
    }
    let mut sol = represent(profile, basis, rhs, assume_orthogonal)?;
    sol.diagnostics.orthogonality = Some(orth);
    finish(profile, &mut sol, rhs)?;
    Ok(sol)
}

/// Particular solution for `k >= 2` with limits `(0,r), (r,∞), (r,∞), (0,r)`.
pub fn solve_mode_k(profile: &ProfileTable, basis: &KernelBasis, rhs: &ModeRHS) -> Result<ModeSolution> {
    check_rhs(profile, rhs)?;
    if basis.k < 2 || rhs.k != basis.k {
        return Err(VortexError::Config(format!(
            "solve_mode_k needs matching k >= 2 (basis {}, rhs {})",
            basis.k, rhs.k
        )));
    }
    let mut sol = represent(profile, basis, rhs, true)?;
    finish(profile, &mut sol, rhs)?;
    Ok(sol)
}

/// Dispatches to the solver for the mode of `rhs`; mode 1 assumes nothing
/// about orthogonality.
pub fn solve_any(profile: &ProfileTable, basis: &KernelBasis, rhs: &ModeRHS) -> Result<ModeSolution> {
    match rhs.k {
        0 => solve_mode0(profile, basis, rhs),
        1 => solve_mode1(profile, basis, rhs, false),
        _ => solve_mode_k(profile, basis, rhs),
    }
}

/// Solution on `[0, R]` with `ψ(R) = 0` that stays bounded (as `φ = iWψ`) at 0.
pub fn solve_mode_dirichlet(
    profile: &ProfileTable,
    basis: &KernelBasis,
    rhs: &ModeRHS,
    radius: f64,
) -> Result<ModeSolution> {
    let grid = profile.grid.clone();
    if !(radius > grid.r_min() && radius <= grid.r_max()) {
        return Err(VortexError::Precondition(format!(
            "Dirichlet radius {} outside (r_min, r_max]",
            radius
        )));
    }
    let part = solve_any(profile, basis, rhs)?;
    let n = grid.len();
    let at = |v: &[f64]| grid.interp(v, radius);
    let mut state: [Vec<f64>; 4] = Default::default();
    for (j, s) in state.iter_mut().enumerate() {
        *s = (0..n).map(|i| part.tilde_state(i)[j]).collect();
    }
    if rhs.k == 0 {
        let z10 = &basis.solutions[0].second;
        let shift = at(&state[0])?;
        let z_at = at(z10.values())?;
        if z_at == 0.0 {
            return Err(VortexError::DegenerateMode("z10 vanishes at the boundary".into()));
        }
        let b = -at(&state[1])? / z_at;
        for i in 0..n {
            state[0][i] -= shift;
            state[1][i] += b * z10.values()[i];
            state[3][i] += b * z10.derivs().unwrap()[i];
        }
    } else {
        let (ia, ib) = if rhs.k == 1 { (0, 2) } else { (1, 2) };
        let (za, zb) = (&basis.solutions[ia], &basis.solutions[ib]);
        let m = [
            [at(za.first.values())?, at(zb.first.values())?],
            [at(za.second.values())?, at(zb.second.values())?],
        ];
        let f = [at(&state[0])?, at(&state[1])?];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let size = (m[0][0].abs() + m[1][0].abs()) * (m[0][1].abs() + m[1][1].abs());
        if !(det.abs() > 1e-12 * size) {
            return Err(VortexError::DegenerateMode(format!(
                "boundary matrix for mode {} is singular at R = {}",
                rhs.k, radius
            )));
        }
        let a = -(f[0] * m[1][1] - f[1] * m[0][1]) / det;
        let b = -(m[0][0] * f[1] - m[1][0] * f[0]) / det;
        for i in 0..n {
            let (sa, sb) = (za.state(i), zb.state(i));
            for j in 0..4 {
                state[j][i] += a * sa[j] + b * sb[j];
            }
        }
    }
    let mut sol = ModeSolution::from_tilde(rhs.k, rhs.l, &grid, state)?;
    sol.diagnostics = part.diagnostics.clone();
    sol.diagnostics.dirichlet_radius = Some(radius);
    finish(profile, &mut sol, rhs)?;
    Ok(sol)
}

fn finish(profile: &ProfileTable, sol: &mut ModeSolution, rhs: &ModeRHS) -> Result<()> {
    sol.diagnostics.residual = mode_residual(profile, sol, rhs)?;
    let grid = &profile.grid;
    let nodes = grid.nodes();
    let n = nodes.len();
    let (i0, i1) = (EDGE, grid.nearest(10.0 * nodes[EDGE]));
    let mag = |i: usize| sol.psi1.values()[i].abs().max(sol.psi2.values()[i].abs());
    sol.diagnostics.growth_at_zero = (mag(i1) / mag(i0)).ln() / (nodes[i1] / nodes[i0]).ln();
    let end = match sol.diagnostics.dirichlet_radius {
        Some(r) => grid.nearest(r),
        None => n - 1,
    };
    let mid = grid.nearest(0.5 * nodes[end]);
    let slope = |v: &[f64]| (v[end].abs() / v[mid].abs()).ln() / (nodes[end] / nodes[mid]).ln();
    sol.diagnostics.growth_at_inf = [slope(sol.psi1.values()), slope(sol.psi2.values())];
    Ok(())
}

/// Sup over interior nodes of `|system(ψ) - h̃|`, each node scaled by the
/// largest of 1, `|h̃|` and the magnitudes of the individual terms.
pub fn mode_residual(profile: &ProfileTable, sol: &ModeSolution, rhs: &ModeRHS) -> Result<f64> {
    if sol.k != rhs.k || sol.l != rhs.l {
        return Err(VortexError::Config("solution and right-hand side modes differ".into()));
    }
    let grid = &profile.grid;
    let nodes = grid.nodes();
    let n = nodes.len();
    let s = if sol.l == Some(2) { -1.0 } else { 1.0 };
    let d1: Vec<f64> = sol.psi1.derivs().unwrap().to_vec();
    let d2: Vec<f64> = sol.psi2.derivs().unwrap().iter().map(|v| s * v).collect();
    let dd1 = grid.differentiate(&d1);
    let dd2 = grid.differentiate(&d2);
    let (h1, h2) = rhs.tilde();
    let k = sol.k as f64;
    let mut worst: f64 = 0.0;
    for i in EDGE..n - EDGE {
        let r = nodes[i];
        let [w, wp, _] = profile.node(i);
        let pc = 2.0 * wp / w + 1.0 / r;
        let st = sol.tilde_state(i);
        let r2 = r * r;
        let terms1 = [dd1[i], pc * st[2], -k * k * st[0] / r2, -2.0 * k * st[1] / r2];
        let terms2 = [
            dd2[i],
            pc * st[3],
            -2.0 * k * st[0] / r2,
            -k * k * st[1] / r2,
            -2.0 * w * w * st[1],
        ];
        for (terms, h) in [(&terms1[..], h1[i]), (&terms2[..], h2[i])] {
            let res: f64 = terms.iter().sum::<f64>() - h;
            let scale = terms.iter().map(|t| t.abs()).sum::<f64>().max(h.abs()).max(1.0);
            worst = worst.max(res.abs() / scale);
        }
    }
    Ok(worst)
}

/// Per-mode `‖h‖_**` with `|h| = w |h̃|` on `r <= 2`.
pub fn mode_norm_dstar(profile: &ProfileTable, rhs: &ModeRHS) -> f64 {
    let nodes = profile.grid.nodes();
    let (h1, h2) = (rhs.h1.values(), rhs.h2.values());
    let w = profile.w.values();
    let (mut inner, mut o1, mut o2) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..nodes.len() {
        let r = nodes[i];
        if r <= 2.0 {
            inner = inner.max(w[i] * h1[i].hypot(h2[i]));
        }
        if r >= 2.0 {
            o1 = o1.max(r * r * h1[i].abs());
            o2 = o2.max(h2[i].abs());
        }
    }
    inner + o1 + o2
}

/// Per-mode estimate report `‖ψ‖_* / ‖h‖_**`.
pub fn estimate_report(profile: &ProfileTable, sol: &ModeSolution, rhs: &ModeRHS) -> EstimateReport {
    let nodes = profile.grid.nodes();
    let (p1, p2) = (sol.psi1.values(), sol.psi2.values());
    let (h1, h2) = (rhs.h1.values(), rhs.h2.values());
    let w = profile.w.values();
    let mut e = EstimateReport::default();
    for i in 0..nodes.len() {
        let r = nodes[i];
        if r <= 2.0 {
            e.psi_inner_sup = e.psi_inner_sup.max(p1[i].hypot(p2[i]));
            e.h_inner_sup = e.h_inner_sup.max(w[i] * h1[i].hypot(h2[i]));
        }
        if r >= 2.0 {
            e.psi1_outer_sup = e.psi1_outer_sup.max(p1[i].abs() / r.ln().powi(2));
            e.psi2_outer_sup = e.psi2_outer_sup.max(p2[i].abs());
            e.h1_outer_sup = e.h1_outer_sup.max(r * r * h1[i].abs());
            e.h2_outer_sup = e.h2_outer_sup.max(h2[i].abs());
        }
    }
    e.norm_star_value = e.psi_inner_sup + e.psi1_outer_sup + e.psi2_outer_sup;
    e.norm_dstar_value = e.h_inner_sup + e.h1_outer_sup + e.h2_outer_sup;
    e.ratio = e.norm_star_value / e.norm_dstar_value;
    e
}

/// Applies the family-`(k, l)` operator to `ψ` given with its first and
/// second derivatives at the grid nodes; returns `(h1, h2)`.
pub fn apply_mode_operator(
    profile: &ProfileTable,
    k: usize,
    l: Option<u8>,
    psi: [&[f64]; 2],
    dpsi: [&[f64]; 2],
    ddpsi: [&[f64]; 2],
) -> (Vec<f64>, Vec<f64>) {
    let nodes = profile.grid.nodes();
    let s = if l == Some(2) { -1.0 } else { 1.0 };
    let kf = k as f64;
    let mut h1 = Vec::with_capacity(nodes.len());
    let mut h2 = Vec::with_capacity(nodes.len());
    for (i, &r) in nodes.iter().enumerate() {
        let [w, wp, _] = profile.node(i);
        let pc = 2.0 * wp / w + 1.0 / r;
        let (a, b) = (psi[0][i], s * psi[1][i]);
        let r2 = r * r;
        h1.push(ddpsi[0][i] + pc * dpsi[0][i] - (kf * kf * a + 2.0 * kf * b) / r2);
        let t2 = s * ddpsi[1][i] + pc * s * dpsi[1][i] - (2.0 * kf * a + kf * kf * b) / r2 - 2.0 * w * w * b;
        h2.push(s * t2);
    }
    (h1, h2)
}

/// Coefficients of a homogeneous state `u` in the basis, read off from the
/// pairings at node `i`: `u = Σ a_j z_j`.
pub fn kernel_coefficients(profile: &ProfileTable, basis: &KernelBasis, u: &[f64; 4], i: usize) -> Vec<f64> {
    let r = profile.grid.nodes()[i];
    let p = profile.w.values()[i].powi(2) * r;
    let z: Vec<[f64; 4]> = basis.solutions.iter().map(|s| s.state(i)).collect();
    if basis.k == 0 {
        // [z10, z20] = -1
        return vec![-pairing(p, u, &z[1]), pairing(p, u, &z[0])];
    }
    vec![
        -pairing(p, u, &z[1]),
        pairing(p, u, &z[0]),
        -pairing(p, u, &z[3]),
        pairing(p, u, &z[2]),
    ]
}

/// Relative error `sup|ψ - ψ* - Σ a_j z_j| / sup|ψ*|` after fitting the
/// gauge directions `gauge` (basis indices) to `ψ - ψ*` at `refs` by least squares.
pub fn gauge_projected_error(
    profile: &ProfileTable,
    basis: &KernelBasis,
    sol: &ModeSolution,
    exact: [&[f64]; 2],
    gauge: &[usize],
    refs: &[f64],
) -> Result<f64> {
    let grid = &profile.grid;
    let s = if sol.l == Some(2) { -1.0 } else { 1.0 };
    let diff = |i: usize| {
        let st = sol.tilde_state(i);
        [st[0] - exact[0][i], st[1] - s * exact[1][i]]
    };
    let mut a = vec![0.0; gauge.len()];
    if !gauge.is_empty() {
        let rows = 2 * refs.len();
        let mut m = nalgebra::DMatrix::zeros(rows, gauge.len());
        let mut rhs = nalgebra::DVector::zeros(rows);
        for (q, &r) in refs.iter().enumerate() {
            let i = grid.nearest(r);
            let d = diff(i);
            for c in 0..2 {
                rhs[2 * q + c] = d[c];
                for (j, &g) in gauge.iter().enumerate() {
                    m[(2 * q + c, j)] = basis.solutions[g].value(i)[c];
                }
            }
        }
        let sol_ls = m
            .svd(true, true)
            .solve(&rhs, 1e-14)
            .map_err(|e| VortexError::LinearAlgebra(e.to_string()))?;
        a = sol_ls.iter().copied().collect();
    }
    let scale = exact[0].iter().chain(exact[1]).fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst: f64 = 0.0;
    for i in 0..grid.len() {
        let d = diff(i);
        for c in 0..2 {
            let kern: f64 = gauge.iter().zip(&a).map(|(&g, a)| a * basis.solutions[g].value(i)[c]).sum();
            worst = worst.max((d[c] - kern).abs());
        }
    }
    Ok(worst / scale)
}
