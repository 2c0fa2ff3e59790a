//! Second-order finite-difference solver for `L[φ] = h` on `B_R` with `φ = 0`
//! on the boundary, used as an independent check of the mode pipeline.
//!
//! Unknowns live at `r_i = (i - 1/2)Δr`, `i = 1..=n`, with `Δr = R/(n + 1/2)`,
//! so the first ghost node sits on `∂B_R` and the face at the pole has zero
//! length. The stencil is the polar five-point Laplacian plus the pointwise
//! coupling `(1 - w²)φ - 2 Re(W̄φ)W`. In the co-rotating frame `φ = e^{iθ}χ`
//! the coupling becomes `(1 - w²)χ - 2w² Re χ`, independent of θ, so the
//! angular FFT splits the system into radial block-tridiagonal problems
//! coupling modes `m` and `-m`.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;
use sprs::{CsMat, TriMat};

use crate::error::{Result, VortexError};
use crate::mode_solver::ModeSolution;
use crate::profile::ProfileTable;
use crate::synthesis::PolarField;

/// Largest admissible radial step (eight points per core radius).
pub const MAX_DR: f64 = 0.125;
/// Required relative algebraic residual of the direct solve.
pub const ALGEBRAIC_TOL: f64 = 1e-10;

/// Samples on the oracle's polar grid, row-major by radius.
#[derive(Debug, Clone)]
pub struct DiskField {
    pub radii: Vec<f64>,
    pub n_theta: usize,
    pub values: Vec<Complex64>,
}

impl DiskField {
    pub fn theta(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * j as f64 / self.n_theta as f64
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.values[i * self.n_theta..(i + 1) * self.n_theta]
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| VortexError::io(path, e);
        let file = std::fs::File::create(path).map_err(io)?;
        let mut out = std::io::BufWriter::new(file);
        writeln!(out, "r,theta,re,im").map_err(io)?;
        for (i, r) in self.radii.iter().enumerate() {
            for (j, v) in self.row(i).iter().enumerate() {
                writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", r, self.theta(j), v.re, v.im)
                    .map_err(io)?;
            }
        }
        out.flush().map_err(io)
    }
}

/// Assembled oracle problem.
#[derive(Debug, Clone)]
pub struct DiskSystem {
    pub radius: f64,
    pub n: usize,
    pub dr: f64,
    pub radii: Vec<f64>,
    w: Vec<f64>,
    /// Real operator on `(Re φ, Im φ)` at interior nodes, for verification.
    pub operator: CsMat<f64>,
}

impl DiskSystem {
    pub fn dimension(&self) -> usize {
        2 * self.n * self.n
    }

    /// Profile values `w(r_i)` at the oracle radii.
    pub fn profile_values(&self) -> &[f64] {
        &self.w
    }

    fn index(&self, i: usize, j: usize) -> usize {
        2 * (i * self.n + j)
    }

    /// Samples `f(r, θ)` on the oracle grid.
    pub fn sample(&self, f: impl Fn(f64, f64) -> Complex64 + Sync) -> DiskField {
        let n = self.n;
        let values = self
            .radii
            .par_iter()
            .flat_map_iter(|&r| {
                (0..n)
                    .map(|j| f(r, 2.0 * std::f64::consts::PI * j as f64 / n as f64))
                    .collect::<Vec<_>>()
            })
            .collect();
        DiskField {
            radii: self.radii.clone(),
            n_theta: n,
            values,
        }
    }

    /// Resamples a field from the profile grid: local cubic in r,
    /// trigonometric interpolation in θ.
    pub fn resample(&self, field: &PolarField) -> Result<DiskField> {
        let nt = field.n_theta();
        let grid = field.grid();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(nt);
        let n = self.n;
        let rows: Vec<Vec<Complex64>> = self
            .radii
            .par_iter()
            .map(|&r| {
                let (start, wts) = grid.interp_weights(r)?;
                let mut row: Vec<Complex64> = (0..nt)
                    .map(|j| (0..4).map(|m| field.at(start + m, j) * wts[m]).sum())
                    .collect();
                fft.process(&mut row);
                Ok((0..n)
                    .map(|j| {
                        let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                        let mut v = Complex64::new(0.0, 0.0);
                        for (m, c) in row.iter().enumerate() {
                            let freq = if m <= nt / 2 { m as f64 } else { m as f64 - nt as f64 };
                            if m == nt / 2 {
                                continue;
                            }
                            v += c * Complex64::from_polar(1.0 / nt as f64, freq * th);
                        }
                        v
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        Ok(DiskField {
            radii: self.radii.clone(),
            n_theta: n,
            values: rows.into_iter().flatten().collect(),
        })
    }

    /// Diagonal entries of the radial stencil at node `i`: `(lower, centre, upper)`.
    fn radial_stencil(&self, i: usize) -> (f64, f64, f64) {
        let r = self.radii[i];
        let (rm, rp) = (r - 0.5 * self.dr, r + 0.5 * self.dr);
        let s = 1.0 / (r * self.dr * self.dr);
        (rm * s, -(rm + rp) * s, rp * s)
    }
}

/// Builds the oracle operator for `B_R` with `n` radial and `n` angular points.
pub fn assemble(profile: &ProfileTable, radius: f64, n: usize) -> Result<DiskSystem> {
    if n < 32 || !n.is_power_of_two() {
        return Err(VortexError::Config(format!(
            "oracle resolution {} must be a power of two >= 32",
            n
        )));
    }
    if !(radius > 0.0 && radius <= profile.grid.r_max()) {
        return Err(VortexError::Config(format!(
            "oracle radius {} outside (0, r_max]",
            radius
        )));
    }
    let dr = radius / (n as f64 + 0.5);
    if dr > MAX_DR {
        return Err(VortexError::Config(format!(
            "radial step {:.4} exceeds {} (fewer than 8 points per core radius)",
            dr, MAX_DR
        )));
    }
    let radii: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * dr).collect();
    let w = radii
        .iter()
        .map(|&r| profile.eval_full(r).map(|v| v[0]))
        .collect::<Result<Vec<_>>>()?;
    let mut sys = DiskSystem {
        radius,
        n,
        dr,
        radii,
        w,
        operator: CsMat::zero((0, 0)),
    };
    let dim = sys.dimension();
    let dth = 2.0 * std::f64::consts::PI / n as f64;
    let mut tri = TriMat::new((dim, dim));
    for i in 0..n {
        let r = sys.radii[i];
        let (lo, mid, up) = sys.radial_stencil(i);
        let w2 = sys.w[i] * sys.w[i];
        let ang = 1.0 / (r * r * dth * dth);
        for j in 0..n {
            let (jp, jm) = ((j + 1) % n, (j + n - 1) % n);
            let row = sys.index(i, j);
            let (s, c) = (j as f64 * dth).sin_cos();
            // (1 - w²)φ - 2 Re(W̄φ) W as a real 2×2 block
            let couple = [[-2.0 * w2 * c * c, -2.0 * w2 * c * s], [-2.0 * w2 * c * s, -2.0 * w2 * s * s]];
            for a in 0..2 {
                tri.add_triplet(row + a, row + a, mid - 2.0 * ang + 1.0 - w2);
                for b in 0..2 {
                    if couple[a][b] != 0.0 {
                        tri.add_triplet(row + a, row + b, couple[a][b]);
                    }
                }
                if i > 0 {
                    tri.add_triplet(row + a, sys.index(i - 1, j) + a, lo);
                }
                if i + 1 < n {
                    tri.add_triplet(row + a, sys.index(i + 1, j) + a, up);
                }
                tri.add_triplet(row + a, sys.index(i, jp) + a, ang);
                tri.add_triplet(row + a, sys.index(i, jm) + a, ang);
            }
        }
    }
    sys.operator = tri.to_csr();
    Ok(sys)
}

fn to_corotating(field: &DiskField, inverse: bool) -> Vec<Complex64> {
    let n = field.n_theta;
    field
        .values
        .iter()
        .enumerate()
        .map(|(idx, v)| {
            let th = 2.0 * std::f64::consts::PI * (idx % n) as f64 / n as f64;
            v * Complex64::from_polar(1.0, if inverse { th } else { -th })
        })
        .collect()
}

fn pack(values: &[Complex64]) -> Vec<f64> {
    values.iter().flat_map(|v| [v.re, v.im]).collect()
}

/// Applies the discrete operator to a field (in φ-form).
pub fn apply(sys: &DiskSystem, phi: &DiskField) -> DiskField {
    let y = matvec(&sys.operator, &pack(&phi.values));
    DiskField {
        radii: sys.radii.clone(),
        n_theta: sys.n,
        values: y.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect(),
    }
}

fn matvec(a: &CsMat<f64>, x: &[f64]) -> Vec<f64> {
    a.outer_iterator()
        .map(|row| row.iter().map(|(j, v)| v * x[j]).sum())
        .collect()
}

/// 2×2 real matrix acting on a pair of complex values.
#[derive(Clone, Copy)]
struct Block([[f64; 2]; 2]);

impl Block {
    fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let m = self.0;
        [v[0] * m[0][0] + v[1] * m[0][1], v[0] * m[1][0] + v[1] * m[1][1]]
    }

    fn inverse(&self) -> Result<Block> {
        let m = self.0;
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(VortexError::LinearAlgebra("singular block in oracle solve".into()));
        }
        Ok(Block([
            [m[1][1] / det, -m[0][1] / det],
            [-m[1][0] / det, m[0][0] / det],
        ]))
    }

    fn mul(&self, o: &Block) -> Block {
        let (a, b) = (self.0, o.0);
        let mut c = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Block(c)
    }
}

/// Solves `L[φ] = h` on `B_R` with zero trace.
pub fn solve_dirichlet_2d(sys: &DiskSystem, h: &DiskField) -> Result<DiskField> {
    let n = sys.n;
    if h.n_theta != n || h.radii.len() != n {
        return Err(VortexError::GridMismatch("right-hand side not on the oracle grid".into()));
    }
    let rhs_chi = to_corotating(h, false);
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);
    // spectra[i][m]
    let spectra: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = rhs_chi[i * n..(i + 1) * n].to_vec();
            fft.process(&mut row);
            row
        })
        .collect();
    let dth = 2.0 * std::f64::consts::PI / n as f64;
    // five-point angular symbol of φ-mode f + 1 for χ-mode f
    let eig = |m: usize| {
        let f = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
        let s = (0.5 * (f + 1.0) * dth).sin();
        -4.0 * s * s / (dth * dth)
    };
    let cols: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|m| {
            let mneg = (n - m) % n;
            let (am, an) = (eig(m), eig(mneg));
            // unknowns (X_m, conj X_{-m}) at each radius
            let rhs: Vec<[Complex64; 2]> = (0..n)
                .map(|i| [spectra[i][m], spectra[i][mneg].conj()])
                .collect();
            let diag: Vec<Block> = (0..n)
                .map(|i| {
                    let r = sys.radii[i];
                    let (_, mid, _) = sys.radial_stencil(i);
                    let w2 = sys.w[i] * sys.w[i];
                    let base = mid + 1.0 - 2.0 * w2;
                    Block([[base + am / (r * r), -w2], [-w2, base + an / (r * r)]])
                })
                .collect();
            let x = block_thomas(sys, &diag, &rhs)?;
            Ok(x.into_iter().map(|v| v[0]).collect())
        })
        .collect::<Result<_>>()?;
    let values_chi: Vec<Complex64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut row: Vec<Complex64> = (0..n).map(|m| cols[m][i] / n as f64).collect();
            ifft.process(&mut row);
            row
        })
        .collect();
    let chi = DiskField {
        radii: sys.radii.clone(),
        n_theta: n,
        values: values_chi,
    };
    let phi = DiskField {
        values: to_corotating(&chi, true),
        ..chi
    };
    let res = algebraic_residual(sys, &phi, h);
    if !(res <= ALGEBRAIC_TOL) {
        return Err(VortexError::LinearAlgebra(format!(
            "oracle algebraic residual {:.2e} exceeds {:.0e}",
            res, ALGEBRAIC_TOL
        )));
    }
    Ok(phi)
}

/// Block tridiagonal solve with scalar off-diagonal couplings.
fn block_thomas(sys: &DiskSystem, diag: &[Block], rhs: &[[Complex64; 2]]) -> Result<Vec<[Complex64; 2]>> {
    let n = diag.len();
    let mut cp: Vec<Block> = Vec::with_capacity(n);
    let mut dp: Vec<[Complex64; 2]> = Vec::with_capacity(n);
    for i in 0..n {
        let (lo, _, up) = sys.radial_stencil(i);
        let mut d = diag[i];
        let mut b = rhs[i];
        if i > 0 {
            // d -= lo·cp[i-1], b -= lo·dp[i-1]
            for a in 0..2 {
                for c in 0..2 {
                    d.0[a][c] -= lo * cp[i - 1].0[a][c];
                }
                b[a] -= dp[i - 1][a] * lo;
            }
        }
        let inv = d.inverse()?;
        let u = Block([[up, 0.0], [0.0, up]]);
        cp.push(inv.mul(&u));
        dp.push(inv.apply(b));
    }
    let mut x = vec![[Complex64::new(0.0, 0.0); 2]; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        let next = cp[i].apply(x[i + 1]);
        x[i] = [dp[i][0] - next[0], dp[i][1] - next[1]];
    }
    Ok(x)
}

/// `‖A x - b‖_∞ / (‖A‖_∞ ‖x‖_∞ + ‖b‖_∞)` with the assembled sparse operator.
pub fn algebraic_residual(sys: &DiskSystem, phi: &DiskField, h: &DiskField) -> f64 {
    let x = pack(&phi.values);
    let b = pack(&h.values);
    let ax = matvec(&sys.operator, &x);
    let num = ax.iter().zip(&b).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let norm_a = sys
        .operator
        .outer_iterator()
        .map(|row| row.iter().map(|(_, v)| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let nx = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let nb = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let den = norm_a * nx + nb;
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyError {
    pub k: usize,
    pub l: Option<u8>,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub radius: f64,
    pub n: usize,
    pub families: Vec<FamilyError>,
    /// Sup over families and components, relative to the largest mode amplitude.
    pub aggregate: f64,
    /// Largest oracle coefficient in families without a mode solution.
    pub spurious: f64,
}

/// Family coefficients of the oracle solution in ψ-form at each radius:
/// `[a_k, d_k]` for `l = 1`, `[b_k, c_k]` for `l = 2`, `[a_0, c_0]` for mode 0.
fn oracle_families(phi: &DiskField, profile: &ProfileTable, k_max: usize) -> Result<Vec<Vec<[[f64; 2]; 2]>>> {
    let n = phi.n_theta;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    phi.radii
        .par_iter()
        .enumerate()
        .map(|(i, &r)| {
            let w = profile.eval_full(r)?[0];
            let mut row: Vec<Complex64> = phi
                .row(i)
                .iter()
                .enumerate()
                .map(|(j, v)| v / (Complex64::new(0.0, w) * Complex64::from_polar(1.0, phi.theta(j))))
                .collect();
            fft.process(&mut row);
            let inv = 1.0 / n as f64;
            let part = |m: usize| {
                let zm = row[m];
                let zc = row[(n - m) % n].conj();
                ((zm + zc) * 0.5, (zm - zc) * Complex64::new(0.0, -0.5))
            };
            let mut out = Vec::with_capacity(k_max + 1);
            let (x1, x2) = part(0);
            out.push([[x1.re * inv, x2.re * inv], [0.0, 0.0]]);
            for k in 1..=k_max {
                let (x1, x2) = part(k);
                let (a, b) = (2.0 * x1.re * inv, -2.0 * x1.im * inv);
                let (c, d) = (2.0 * x2.re * inv, -2.0 * x2.im * inv);
                out.push([[a, d], [b, c]]);
            }
            Ok(out)
        })
        .collect()
}

/// Compares the oracle solution family by family with mode Dirichlet
/// solutions on `r ∈ [0.2, 0.9]·R`.
pub fn compare_with_modes(
    phi: &DiskField,
    modes: &[ModeSolution],
    profile: &ProfileTable,
    radius: f64,
) -> Result<CompareReport> {
    let k_max = modes.iter().map(|m| m.k).max().unwrap_or(0).max(4);
    let fam = oracle_families(phi, profile, k_max)?;
    let band: Vec<usize> = (0..phi.radii.len())
        .filter(|&i| phi.radii[i] >= 0.2 * radius && phi.radii[i] <= 0.9 * radius)
        .collect();
    let pick = |i: usize, k: usize, l: Option<u8>| -> [f64; 2] {
        match l {
            None => fam[i][0][0],
            Some(l) => fam[i][k][l as usize - 1],
        }
    };
    let mut families = Vec::new();
    let mut scale: f64 = 0.0;
    let mut worst_abs: f64 = 0.0;
    for m in modes {
        let grid = m.grid();
        let (mut err, mut sup): (f64, f64) = (0.0, 0.0);
        for &i in &band {
            let r = phi.radii[i];
            let exact = [grid.interp(m.psi1.values(), r)?, grid.interp(m.psi2.values(), r)?];
            let got = pick(i, m.k, m.l);
            for c in 0..2 {
                err = err.max((got[c] - exact[c]).abs());
                sup = sup.max(exact[c].abs());
            }
        }
        scale = scale.max(sup);
        worst_abs = worst_abs.max(err);
        families.push(FamilyError {
            k: m.k,
            l: m.l,
            error: if sup > 0.0 { err / sup } else { err },
        });
    }
    let mut spurious: f64 = 0.0;
    let mut labels = vec![(0usize, None)];
    for k in 1..=k_max {
        labels.push((k, Some(1u8)));
        labels.push((k, Some(2u8)));
    }
    for (k, l) in labels {
        if modes.iter().any(|m| m.k == k && m.l == l) {
            continue;
        }
        for &i in &band {
            let v = pick(i, k, l);
            spurious = spurious.max(v[0].abs().max(v[1].abs()));
        }
    }
    let aggregate = if scale > 0.0 {
        worst_abs.max(spurious) / scale
    } else {
        worst_abs.max(spurious)
    };
    Ok(CompareReport {
        radius,
        n: phi.n_theta,
        families,
        aggregate,
        spurious,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{GridSpec, RadialGrid};
    use crate::profile::solve_profile;
    use crate::mode_solver::{solve_mode_dirichlet, ModeRHS};
    use std::sync::OnceLock;

    fn profile() -> &'static ProfileTable {
        static T: OnceLock<ProfileTable> = OnceLock::new();
        T.get_or_init(|| solve_profile(RadialGrid::new(GridSpec::default()).unwrap(), 1e-8).unwrap())
    }

    #[test]
    fn rejects_coarse_grids() {
        let p = profile();
        assert!(matches!(assemble(p, 10.0, 64), Err(VortexError::Config(_))));
        assert!(matches!(assemble(p, 10.0, 48), Err(VortexError::Config(_))));
        assert!(assemble(p, 10.0, 128).is_ok());
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let p = profile();
        let sys = assemble(p, 4.0, 64).unwrap();
        let h = sys.sample(|_, _| Complex64::new(0.0, 0.0));
        assert_eq!(solve_dirichlet_2d(&sys, &h).unwrap().sup_abs(), 0.0);
    }

    #[test]
    fn recovers_discrete_manufactured_solution() {
        let p = profile();
        let sys = assemble(p, 6.0, 64).unwrap();
        let exact = sys.sample(|r, t| {
            let s = (1.0 - (r / 6.0).powi(2)).max(0.0);
            Complex64::new(s * (1.0 + r * t.cos()), s * r * r * (2.0 * t).sin())
        });
        let h = apply(&sys, &exact);
        let got = solve_dirichlet_2d(&sys, &h).unwrap();
        let err = got
            .values
            .iter()
            .zip(&exact.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        assert!(err <= 1e-10 * exact.sup_abs(), "{}", err);
    }

    #[test]
    fn constant_field_sees_only_coupling_terms() {
        let p = profile();
        let sys = assemble(p, 6.0, 64).unwrap();
        let one = sys.sample(|_, _| Complex64::new(1.0, 0.0));
        let out = apply(&sys, &one);
        // interior rows away from pole and boundary
        let dth = 2.0 * std::f64::consts::PI / sys.n as f64;
        for i in 4..sys.n - 2 {
            let r = sys.radii[i];
            let w = p.eval_full(r).unwrap()[0];
            let tol = dth * dth / (r * r);
            for j in 0..sys.n {
                let th = one.theta(j);
                let wv = Complex64::from_polar(w, th);
                let want = Complex64::new(1.0 - w * w, 0.0) - wv * (2.0 * (wv.conj()).re);
                assert!((out.values[i * sys.n + j] - want).norm() <= tol, "i={} j={}", i, j);
            }
        }
    }

    #[test]
    fn operator_pattern_is_symmetric() {
        let p = profile();
        let sys = assemble(p, 6.0, 64).unwrap();
        let t = sys.operator.transpose_view().to_csr();
        assert_eq!(t.indptr(), sys.operator.indptr());
        assert_eq!(t.indices(), sys.operator.indices());
    }

    #[test]
    fn agrees_with_mode_dirichlet_solution() {
        use crate::homogeneous::build_kernel;
        let p = profile();
        let (k, radius) = (2, 6.0);
        let f1 = |r: f64| r * (-r * r / 4.0).exp();
        let f2 = |r: f64| 0.5 * r * (-(r - 1.0).powi(2) / 2.0).exp();
        let basis = build_kernel(p, k).unwrap();
        let rhs = ModeRHS::from_fn(&p.grid, k, Some(1), f1, f2).unwrap();
        let mode = solve_mode_dirichlet(p, &basis, &rhs, radius).unwrap();
        let mut errs = Vec::new();
        for n in [64, 128] {
            let sys = assemble(p, radius, n).unwrap();
            let h = sys.sample(|r, t| {
                let w = p.eval_full(r).unwrap()[0];
                let (s, c) = (k as f64 * t).sin_cos();
                Complex64::new(0.0, w) * Complex64::from_polar(1.0, t) * Complex64::new(f1(r) * c, f2(r) * s)
            });
            let phi = solve_dirichlet_2d(&sys, &h).unwrap();
            let rep = compare_with_modes(&phi, std::slice::from_ref(&mode), p, radius).unwrap();
            assert!(rep.spurious <= 1e-12, "{}", rep.spurious);
            errs.push(rep.families[0].error);
        }
        assert!(errs[0] <= 2e-2, "{:?}", errs);
        assert!(errs[0] / errs[1] >= 3.0, "{:?}", errs);
    }
}
