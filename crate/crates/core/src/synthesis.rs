//! Polar fields, parity-family decomposition and global diagnostics.
//!
//! A field in ψ-form is split per radius into `ψ1 = a0 + Σ a_k cos kθ + b_k sin kθ`
//! and `ψ2 = c0 + Σ c_k cos kθ + d_k sin kθ`. Family `(k, 1)` holds `(a_k, d_k)`,
//! family `(k, 2)` holds `(b_k, c_k)` and mode 0 holds `(a0, c0)`.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Result, VortexError};
use crate::mode_solver::ModeRHS;
use crate::numerics::{cumulative_from_samples, read_table, Head, RadialFunction, RadialGrid};
use crate::profile::ProfileTable;

/// Relative energy in the Nyquist bin above which a field counts as aliased.
pub const ALIAS_TOL: f64 = 1e-10;
/// Fourier coefficients below this fraction of the row sup are treated as zero.
const ROUNDOFF_FLOOR: f64 = 1e-13;

/// Complex samples on `radii × N_θ` uniform angles, row-major by radius.
#[derive(Debug, Clone)]
pub struct PolarField {
    grid: Arc<RadialGrid>,
    n_theta: usize,
    values: Vec<Complex64>,
}

impl PolarField {
    pub fn new(grid: Arc<RadialGrid>, n_theta: usize, values: Vec<Complex64>) -> Result<Self> {
        if n_theta < 4 || !n_theta.is_power_of_two() {
            return Err(VortexError::Config(format!(
                "angular resolution {} must be a power of two >= 4",
                n_theta
            )));
        }
        if values.len() != grid.len() * n_theta {
            return Err(VortexError::GridMismatch(format!(
                "{} samples for a {}x{} polar grid",
                values.len(),
                grid.len(),
                n_theta
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(VortexError::Data("polar field contains non-finite values".into()));
        }
        Ok(PolarField {
            grid,
            n_theta,
            values,
        })
    }

    pub fn zeros(grid: Arc<RadialGrid>, n_theta: usize) -> Result<Self> {
        let n = grid.len() * n_theta;
        Self::new(grid, n_theta, vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn from_fn(
        grid: Arc<RadialGrid>,
        n_theta: usize,
        f: impl Fn(f64, f64) -> Complex64 + Sync,
    ) -> Result<Self> {
        let values = grid
            .nodes()
            .par_iter()
            .flat_map_iter(|&r| (0..n_theta).map(move |j| (r, j)).collect::<Vec<_>>())
            .map(|(r, j)| f(r, theta(n_theta, j)))
            .collect();
        Self::new(grid, n_theta, values)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn theta(&self, j: usize) -> f64 {
        theta(self.n_theta, j)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.values[i * self.n_theta..(i + 1) * self.n_theta]
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.n_theta + j]
    }

    pub fn same_shape(&self, other: &PolarField) -> bool {
        self.n_theta == other.n_theta
            && (Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid)
    }

    fn require_shape(&self, other: &PolarField) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(VortexError::GridMismatch("polar fields have different shapes".into()))
        }
    }

    /// `a·self + b·other`.
    pub fn lin_comb(&self, a: f64, other: &PolarField, b: f64) -> Result<Self> {
        self.require_shape(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| u * a + v * b)
            .collect();
        Self::new(self.grid.clone(), self.n_theta, values)
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Multiplies by `iW = i w e^{iθ}` (ψ-form to φ-form).
    pub fn times_iw(&self, profile: &ProfileTable) -> Result<Self> {
        self.scale_by_iw(profile, false)
    }

    /// Divides by `iW` (φ-form to ψ-form).
    pub fn over_iw(&self, profile: &ProfileTable) -> Result<Self> {
        self.scale_by_iw(profile, true)
    }

    fn scale_by_iw(&self, profile: &ProfileTable, divide: bool) -> Result<Self> {
        if *profile.grid != *self.grid {
            return Err(VortexError::GridMismatch("field and profile grids differ".into()));
        }
        let w = profile.w.values();
        if divide && w.iter().any(|&v| !(v > 0.0)) {
            return Err(VortexError::Domain("w vanishes at a sampled radius".into()));
        }
        let nt = self.n_theta;
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, v)| {
                let (i, j) = (idx / nt, idx % nt);
                let iw = Complex64::new(0.0, w[i]) * Complex64::from_polar(1.0, theta(nt, j));
                if divide {
                    v / iw
                } else {
                    v * iw
                }
            })
            .collect();
        Self::new(self.grid.clone(), nt, values)
    }

    /// CSV with columns `r,theta,re,im`, radius-major.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| VortexError::io(path, e);
        let file = std::fs::File::create(path).map_err(io)?;
        let mut out = std::io::BufWriter::new(file);
        writeln!(out, "r,theta,re,im").map_err(io)?;
        for (i, r) in self.grid.nodes().iter().enumerate() {
            for j in 0..self.n_theta {
                let v = self.at(i, j);
                writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", r, self.theta(j), v.re, v.im)
                    .map_err(io)?;
            }
        }
        out.flush().map_err(io)
    }

    /// Reads a field written by [`PolarField::write_csv`] on the given grid.
    pub fn read_csv(path: impl AsRef<Path>, grid: Arc<RadialGrid>) -> Result<Self> {
        let path = path.as_ref();
        let rows = read_table(path)?;
        if rows.iter().any(|r| r.len() != 4) {
            return Err(VortexError::Data(format!(
                "{}: expected columns r,theta,re,im",
                path.display()
            )));
        }
        let n_theta = rows.iter().take_while(|r| r[0] == rows[0][0]).count();
        if n_theta == 0 || rows.len() != n_theta * grid.len() {
            return Err(VortexError::GridMismatch(format!(
                "{}: {} rows do not form a {}-radius polar grid",
                path.display(),
                rows.len(),
                grid.len()
            )));
        }
        for (i, r) in grid.nodes().iter().enumerate() {
            for j in 0..n_theta {
                let row = &rows[i * n_theta + j];
                if (row[0] - r).abs() > 1e-12 * r.max(1.0)
                    || (row[1] - theta(n_theta, j)).abs() > 1e-9
                {
                    return Err(VortexError::GridMismatch(format!(
                        "{}: sample ({}, {}) does not match the polar grid",
                        path.display(),
                        row[0],
                        row[1]
                    )));
                }
            }
        }
        let values = rows.iter().map(|r| Complex64::new(r[2], r[3])).collect();
        Self::new(grid, n_theta, values)
    }
}

fn theta(n: usize, j: usize) -> f64 {
    2.0 * std::f64::consts::PI * j as f64 / n as f64
}

/// Radial coefficient pairs of the parity families up to `k_max`.
#[derive(Debug, Clone)]
pub struct FourierField {
    grid: Arc<RadialGrid>,
    k_max: usize,
    // slot 0: mode 0; slot 2k-1: (k,1); slot 2k: (k,2)
    slots: Vec<[Vec<f64>; 2]>,
    /// Energy fraction in modes above `k_max` dropped by the analysis.
    pub truncated_energy: f64,
}

fn slot(k: usize, l: Option<u8>) -> usize {
    match l {
        None => 0,
        Some(l) => 2 * k - 2 + l as usize,
    }
}

impl FourierField {
    pub fn zeros(grid: Arc<RadialGrid>, k_max: usize) -> Self {
        let n = grid.len();
        FourierField {
            grid,
            k_max,
            slots: vec![[vec![0.0; n], vec![0.0; n]]; 2 * k_max + 1],
            truncated_energy: 0.0,
        }
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// All `(k, l)` labels, mode 0 first.
    pub fn families(&self) -> Vec<(usize, Option<u8>)> {
        let mut v = vec![(0, None)];
        for k in 1..=self.k_max {
            v.push((k, Some(1)));
            v.push((k, Some(2)));
        }
        v
    }

    pub fn get(&self, k: usize, l: Option<u8>) -> &[Vec<f64>; 2] {
        &self.slots[slot(k, l)]
    }

    pub fn set(&mut self, k: usize, l: Option<u8>, pair: [Vec<f64>; 2]) -> Result<()> {
        if k > self.k_max || (k == 0) != l.is_none() {
            return Err(VortexError::Config(format!("no family ({}, {:?})", k, l)));
        }
        if pair.iter().any(|v| v.len() != self.grid.len()) {
            return Err(VortexError::GridMismatch("coefficient length differs from grid".into()));
        }
        self.slots[slot(k, l)] = pair;
        Ok(())
    }

    pub fn is_zero(&self, k: usize, l: Option<u8>) -> bool {
        self.get(k, l).iter().all(|v| v.iter().all(|x| *x == 0.0))
    }

    pub fn rhs(&self, k: usize, l: Option<u8>) -> Result<ModeRHS> {
        let [a, b] = self.get(k, l).clone();
        ModeRHS::new(
            k,
            l,
            RadialFunction::new(self.grid.clone(), a)?,
            RadialFunction::new(self.grid.clone(), b)?,
        )
    }
}

fn fft_rows(field: &PolarField, inverse: bool) -> Vec<Vec<Complex64>> {
    let nt = field.n_theta;
    let fft = {
        let mut planner = FftPlanner::new();
        if inverse {
            planner.plan_fft_inverse(nt)
        } else {
            planner.plan_fft_forward(nt)
        }
    };
    (0..field.grid.len())
        .into_par_iter()
        .map(|i| {
            let mut row = field.row(i).to_vec();
            fft.process(&mut row);
            row
        })
        .collect()
}

/// Fourier analysis of a ψ-form field into parity families up to `k_max`.
pub fn decompose_psi(field: &PolarField, k_max: usize) -> Result<FourierField> {
    let nt = field.n_theta;
    if nt < 4 * k_max + 4 {
        return Err(VortexError::Resolution(format!(
            "N_θ = {} is below 4K + 4 = {}",
            nt,
            4 * k_max + 4
        )));
    }
    let spectra = fft_rows(field, false);
    let n = field.grid.len();
    let mut out = FourierField::zeros(field.grid.clone(), k_max);
    let (mut total, mut nyquist, mut dropped) = (0.0, 0.0, 0.0);
    let inv = 1.0 / nt as f64;
    for (i, z) in spectra.iter().enumerate() {
        // spectra of the real sequences ψ1, ψ2
        let part = |m: usize| {
            let zm = z[m];
            let zc = z[(nt - m) % nt].conj();
            ((zm + zc) * 0.5, (zm - zc) * Complex64::new(0.0, -0.5))
        };
        for m in 0..=nt / 2 {
            let (x1, x2) = part(m);
            let e = x1.norm_sqr() + x2.norm_sqr();
            total += e;
            if m == nt / 2 {
                nyquist += e;
            } else if m > k_max {
                dropped += e;
            }
        }
        // coefficients at round-off level of the row are set to exact zeros
        let floor = ROUNDOFF_FLOOR * field.row(i).iter().fold(0.0f64, |m, v| m.max(v.norm()));
        let clean = |v: f64| if v.abs() <= floor { 0.0 } else { v };
        let (x1, x2) = part(0);
        out.slots[0][0][i] = clean(x1.re * inv);
        out.slots[0][1][i] = clean(x2.re * inv);
        for k in 1..=k_max {
            let (x1, x2) = part(k);
            let (a, b) = (2.0 * x1.re * inv, -2.0 * x1.im * inv);
            let (c, d) = (2.0 * x2.re * inv, -2.0 * x2.im * inv);
            out.slots[2 * k - 1][0][i] = clean(a);
            out.slots[2 * k - 1][1][i] = clean(d);
            out.slots[2 * k][0][i] = clean(b);
            out.slots[2 * k][1][i] = clean(c);
        }
    }
    debug_assert_eq!(out.slots[0][0].len(), n);
    if total > 0.0 && nyquist > ALIAS_TOL * total {
        return Err(VortexError::Resolution(format!(
            "Nyquist energy fraction {:.2e} exceeds {:.0e}",
            nyquist / total,
            ALIAS_TOL
        )));
    }
    out.truncated_energy = if total > 0.0 { dropped / total } else { 0.0 };
    Ok(out)
}

/// Decomposes a right-hand side `h` (φ-form) after dividing by `iW`.
pub fn decompose(h: &PolarField, profile: &ProfileTable, k_max: usize) -> Result<FourierField> {
    decompose_psi(&h.over_iw(profile)?, k_max)
}

/// ψ-form field from its parity families.
pub fn synthesize_psi(modes: &FourierField, n_theta: usize) -> Result<PolarField> {
    if n_theta < 4 * modes.k_max + 4 {
        return Err(VortexError::Resolution(format!(
            "N_θ = {} is below 4K + 4 = {}",
            n_theta,
            4 * modes.k_max + 4
        )));
    }
    let grid = modes.grid.clone();
    let ths: Vec<f64> = (0..n_theta).map(|j| theta(n_theta, j)).collect();
    let values: Vec<Complex64> = (0..grid.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut row = vec![Complex64::new(modes.slots[0][0][i], modes.slots[0][1][i]); n_theta];
            for k in 1..=modes.k_max {
                let [a, d] = [modes.slots[2 * k - 1][0][i], modes.slots[2 * k - 1][1][i]];
                let [b, c] = [modes.slots[2 * k][0][i], modes.slots[2 * k][1][i]];
                if a == 0.0 && b == 0.0 && c == 0.0 && d == 0.0 {
                    continue;
                }
                for (j, th) in ths.iter().enumerate() {
                    let (s, co) = (k as f64 * th).sin_cos();
                    row[j] += Complex64::new(a * co + b * s, c * co + d * s);
                }
            }
            row
        })
        .collect();
    PolarField::new(grid, n_theta, values)
}

/// `φ = iW · Σ modes` on the polar grid.
pub fn synthesize(modes: &FourierField, profile: &ProfileTable, n_theta: usize) -> Result<PolarField> {
    synthesize_psi(modes, n_theta)?.times_iw(profile)
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct NormReport {
    pub value: f64,
    /// Sup over `r <= 2` of `|ψ|` (or `|h|`).
    pub inner: f64,
    /// Sup over `r >= 2` of `(log r)^-2 |ψ1|` (or `r² |h1|`).
    pub outer_first: f64,
    /// Sup over `r >= 2` of `|ψ2|` (or `|h2|`).
    pub outer_second: f64,
}

/// `‖φ‖_*` from the ψ-form field.
pub fn norm_star(psi: &PolarField) -> NormReport {
    let mut rep = NormReport::default();
    for (i, &r) in psi.grid.nodes().iter().enumerate() {
        for v in psi.row(i) {
            if r <= 2.0 {
                rep.inner = rep.inner.max(v.norm());
            }
            if r >= 2.0 {
                rep.outer_first = rep.outer_first.max(v.re.abs() / r.ln().powi(2));
                rep.outer_second = rep.outer_second.max(v.im.abs());
            }
        }
    }
    rep.value = rep.inner + rep.outer_first + rep.outer_second;
    rep
}

/// `‖h‖_**` from the φ-form right-hand side.
pub fn norm_dstar(h: &PolarField, profile: &ProfileTable) -> Result<NormReport> {
    let ht = h.over_iw(profile)?;
    let mut rep = NormReport::default();
    for (i, &r) in h.grid.nodes().iter().enumerate() {
        for (v, t) in h.row(i).iter().zip(ht.row(i)) {
            if r <= 2.0 {
                rep.inner = rep.inner.max(v.norm());
            }
            if r >= 2.0 {
                rep.outer_first = rep.outer_first.max(r * r * t.re.abs());
                rep.outer_second = rep.outer_second.max(t.im.abs());
            }
        }
    }
    rep.value = rep.inner + rep.outer_first + rep.outer_second;
    Ok(rep)
}

/// `∫_0^R g(r) r dr` from per-radius angular means `g`.
fn radial_integral(grid: &RadialGrid, mean: &[f64], radius: f64) -> Result<f64> {
    if !(radius > grid.r_min() && radius <= grid.r_max()) {
        return Err(VortexError::Precondition(format!(
            "radius {} outside (r_min, r_max]",
            radius
        )));
    }
    let g: Vec<f64> = mean.iter().zip(grid.nodes()).map(|(m, r)| m * r).collect();
    let cum = cumulative_from_samples(grid, &g, Head::Auto)?;
    grid.interp(&cum, radius)
}

/// `Re ∫_{B_R} u v̄ dx`, trapezoidal in θ.
pub fn inner_product(u: &PolarField, v: &PolarField, radius: f64) -> Result<f64> {
    u.require_shape(v)?;
    let nt = u.n_theta as f64;
    let mean: Vec<f64> = (0..u.grid.len())
        .map(|i| {
            u.row(i)
                .iter()
                .zip(v.row(i))
                .map(|(a, b)| (a * b.conj()).re)
                .sum::<f64>()
                * 2.0
                * std::f64::consts::PI
                / nt
        })
        .collect();
    radial_integral(&u.grid, &mean, radius)
}

/// Radial first and second derivatives of each angular column.
fn radial_derivatives(field: &PolarField) -> (Vec<Complex64>, Vec<Complex64>) {
    let (n, nt) = (field.grid.len(), field.n_theta);
    let cols: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..nt)
        .into_par_iter()
        .map(|j| {
            let re: Vec<f64> = (0..n).map(|i| field.at(i, j).re).collect();
            let im: Vec<f64> = (0..n).map(|i| field.at(i, j).im).collect();
            let (d1r, d1i) = (field.grid.differentiate(&re), field.grid.differentiate(&im));
            let (d2r, d2i) = (field.grid.differentiate2(&re), field.grid.differentiate2(&im));
            (
                d1r.iter().zip(&d1i).map(|(a, b)| Complex64::new(*a, *b)).collect(),
                d2r.iter().zip(&d2i).map(|(a, b)| Complex64::new(*a, *b)).collect(),
            )
        })
        .collect();
    let mut d1 = vec![Complex64::new(0.0, 0.0); n * nt];
    let mut d2 = d1.clone();
    for (j, (c1, c2)) in cols.iter().enumerate() {
        for i in 0..n {
            d1[i * nt + j] = c1[i];
            d2[i * nt + j] = c2[i];
        }
    }
    (d1, d2)
}

/// Spectral `∂_θ` and `∂_θ²`, with the Nyquist bin dropped.
fn angular_derivatives(field: &PolarField) -> (Vec<Complex64>, Vec<Complex64>) {
    let nt = field.n_theta;
    let spectra = fft_rows(field, false);
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(nt);
    let rows: Vec<(Vec<Complex64>, Vec<Complex64>)> = spectra
        .into_par_iter()
        .map(|z| {
            let mut a = vec![Complex64::new(0.0, 0.0); nt];
            let mut b = a.clone();
            for m in 0..nt {
                let freq = if m < nt / 2 {
                    m as f64
                } else if m > nt / 2 {
                    m as f64 - nt as f64
                } else {
                    0.0
                };
                a[m] = z[m] * Complex64::new(0.0, freq) / nt as f64;
                b[m] = z[m] * (-freq * freq) / nt as f64;
            }
            ifft.process(&mut a);
            ifft.process(&mut b);
            (a, b)
        })
        .collect();
    let mut d1 = Vec::with_capacity(nt * rows.len());
    let mut d2 = Vec::with_capacity(nt * rows.len());
    for (a, b) in rows {
        d1.extend(a);
        d2.extend(b);
    }
    (d1, d2)
}

/// Number of nodes nearest `r_min` left out of 2-D residuals.
const SKIP_INNER: usize = 2;

/// Sup of the ψ-form residual of `L[φ] = h`, each sample scaled by the
/// largest of 1, `|h̃|`, `|ψ|/r²` and the sum of the term magnitudes.
pub fn residual_2d(phi: &PolarField, h: &PolarField, profile: &ProfileTable) -> Result<f64> {
    Ok(residual_2d_by_radius(phi, h, profile)?
        .into_iter()
        .skip(SKIP_INNER)
        .fold(0.0, f64::max))
}

/// Per-radius maximum over θ of the scaled residual used by [`residual_2d`].
pub fn residual_2d_by_radius(phi: &PolarField, h: &PolarField, profile: &ProfileTable) -> Result<Vec<f64>> {
    phi.require_shape(h)?;
    let psi = phi.over_iw(profile)?;
    let ht = h.over_iw(profile)?;
    let (dr, drr) = radial_derivatives(&psi);
    let (dt, dtt) = angular_derivatives(&psi);
    let nt = psi.n_theta;
    let nodes = psi.grid.nodes();
    let per_radius = (0..nodes.len())
        .into_par_iter()
        .map(|i| {
            let r = nodes[i];
            let [w, wp, _] = profile.node(i);
            let mut m: f64 = 0.0;
            for j in 0..nt {
                let idx = i * nt + j;
                let p = psi.values[idx];
                let terms = [
                    drr[idx],
                    dr[idx] * (1.0 / r + 2.0 * wp / w),
                    dtt[idx] / (r * r),
                    Complex64::new(0.0, 2.0 / (r * r)) * dt[idx],
                    Complex64::new(0.0, -2.0 * w * w * p.im),
                ];
                let lhs: Complex64 = terms.iter().sum();
                let res = (lhs - ht.values[idx]).norm();
                let scale = terms
                    .iter()
                    .map(|t| t.norm())
                    .sum::<f64>()
                    .max(ht.values[idx].norm())
                    .max(p.norm() / (r * r))
                    .max(1.0);
                m = m.max(res / scale);
            }
            m
        })
        .collect();
    Ok(per_radius)
}

/// `B(φ,φ)` truncated to `B_R`, together with `∫_{B_R} |∇φ|²`.
pub fn quad_form_parts(phi: &PolarField, radius: f64, profile: &ProfileTable) -> Result<(f64, f64)> {
    if *profile.grid != *phi.grid {
        return Err(VortexError::GridMismatch("field and profile grids differ".into()));
    }
    let (dr, _) = radial_derivatives(phi);
    let (dt, _) = angular_derivatives(phi);
    let nt = phi.n_theta;
    let nodes = phi.grid.nodes();
    let w = profile.w.values();
    let two_pi = 2.0 * std::f64::consts::PI;
    let (mut form, mut grad) = (Vec::with_capacity(nodes.len()), Vec::with_capacity(nodes.len()));
    for (i, &r) in nodes.iter().enumerate() {
        let (mut sf, mut sg) = (0.0, 0.0);
        for j in 0..nt {
            let idx = i * nt + j;
            let v = phi.values[idx];
            let g2 = dr[idx].norm_sqr() + dt[idx].norm_sqr() / (r * r);
            let wbar = Complex64::from_polar(w[i], -theta(nt, j));
            let re = (wbar * v).re;
            sf += g2 - (1.0 - w[i] * w[i]) * v.norm_sqr() + 2.0 * re * re;
            sg += g2;
        }
        form.push(sf * two_pi / nt as f64);
        grad.push(sg * two_pi / nt as f64);
    }
    Ok((
        radial_integral(&phi.grid, &form, radius)?,
        radial_integral(&phi.grid, &grad, radius)?,
    ))
}

pub fn quad_form(phi: &PolarField, radius: f64, profile: &ProfileTable) -> Result<f64> {
    Ok(quad_form_parts(phi, radius, profile)?.0)
}

/// `[iW, ∂W/∂x1, ∂W/∂x2]` sampled on the polar grid.
pub fn kernel_fields(profile: &ProfileTable, n_theta: usize) -> Result<[PolarField; 3]> {
    let grid = profile.grid.clone();
    let nodes = grid.nodes();
    let build = |f: &dyn Fn(usize, f64) -> Complex64| -> Result<PolarField> {
        let mut values = Vec::with_capacity(nodes.len() * n_theta);
        for i in 0..nodes.len() {
            for j in 0..n_theta {
                values.push(f(i, theta(n_theta, j)));
            }
        }
        PolarField::new(grid.clone(), n_theta, values)
    };
    let node = |i: usize| {
        let [w, wp, _] = profile.node(i);
        (nodes[i], w, wp)
    };
    let iw = build(&|i, th| {
        let (_, w, _) = node(i);
        Complex64::new(0.0, w) * Complex64::from_polar(1.0, th)
    })?;
    // ∂W/∂x1 = e^{iθ}(w' cos θ - i w sin θ / r)
    let dx1 = build(&|i, th| {
        let (r, w, wp) = node(i);
        Complex64::from_polar(1.0, th) * Complex64::new(wp * th.cos(), -w * th.sin() / r)
    })?;
    // ∂W/∂x2 = e^{iθ}(w' sin θ + i w cos θ / r)
    let dx2 = build(&|i, th| {
        let (r, w, wp) = node(i);
        Complex64::from_polar(1.0, th) * Complex64::new(wp * th.sin(), w * th.cos() / r)
    })?;
    Ok([iw, dx1, dx2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::GridSpec;
    use crate::profile::solve_profile;
    use std::f64::consts::PI;
    use std::sync::OnceLock;

    fn profile() -> &'static ProfileTable {
        static T: OnceLock<ProfileTable> = OnceLock::new();
        T.get_or_init(|| solve_profile(RadialGrid::new(GridSpec::default()).unwrap(), 1e-8).unwrap())
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_harmonics_land_in_their_family() {
        let p = profile();
        let g = p.grid.clone();
        let iw = kernel_fields(p, 16).unwrap()[0].clone();
        let cos1 = PolarField::from_fn(g.clone(), 16, |_, t| c(t.cos(), 0.0)).unwrap();
        let h = PolarField::new(
            g.clone(),
            16,
            iw.values().iter().zip(cos1.values()).map(|(a, b)| a * b).collect(),
        )
        .unwrap();
        let f = decompose(&h, p, 3).unwrap();
        for (k, l) in f.families() {
            let [a, b] = f.get(k, l);
            if (k, l) == (1, Some(1)) {
                assert!(a.iter().all(|v| (v - 1.0).abs() <= 1e-12));
                assert!(b.iter().all(|v| v.abs() <= 1e-12));
            } else {
                assert!(a.iter().chain(b).all(|v| v.abs() <= 1e-12), "({}, {:?})", k, l);
            }
        }
        let s2 = PolarField::from_fn(g, 16, |_, t| c(0.0, (2.0 * t).sin())).unwrap();
        let f = decompose_psi(&s2, 3).unwrap();
        assert!(f.get(2, Some(1))[1].iter().all(|v| (v - 1.0).abs() <= 1e-12));
        assert!(f.get(2, Some(2))[1].iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn round_trip_is_identity() {
        let p = profile();
        let psi = PolarField::from_fn(p.grid.clone(), 32, |r, t| {
            c(
                (-r).exp() * (1.0 + (3.0 * t).cos() - 0.5 * (2.0 * t).sin()),
                r / (1.0 + r * r) * (t.sin() + 0.25 * (7.0 * t).cos()),
            )
        })
        .unwrap();
        let f = decompose_psi(&psi, 7).unwrap();
        let back = synthesize_psi(&f, 32).unwrap();
        let d = back.lin_comb(1.0, &psi, -1.0).unwrap().sup_abs();
        assert!(d <= 1e-10 * psi.sup_abs(), "{}", d);
        let phi = psi.times_iw(p).unwrap();
        let back = synthesize(&decompose(&phi, p, 7).unwrap(), p, 32).unwrap();
        assert!(back.lin_comb(1.0, &phi, -1.0).unwrap().sup_abs() <= 1e-10 * phi.sup_abs());
    }

    #[test]
    fn aliasing_and_resolution_are_rejected() {
        let p = profile();
        let f = PolarField::from_fn(p.grid.clone(), 8, |_, t| c((4.0 * t).cos(), 0.0)).unwrap();
        assert!(matches!(decompose_psi(&f, 1), Err(VortexError::Resolution(_))));
        assert!(matches!(decompose_psi(&f, 2), Err(VortexError::Resolution(_))));
    }

    #[test]
    fn kernel_fields_are_kernels() {
        let p = profile();
        let fields = kernel_fields(p, 16).unwrap();
        let zero = PolarField::zeros(p.grid.clone(), 16).unwrap();
        for f in &fields {
            let r = residual_2d(f, &zero, p).unwrap();
            assert!(r <= 1e-6, "{}", r);
        }
        for (i, v) in fields[0].values().iter().enumerate() {
            assert!((v.norm() - p.w.values()[i / 16]).abs() <= 1e-15);
        }
        let f = decompose(&fields[2], p, 3).unwrap();
        let [a, b] = f.get(1, Some(1));
        for (i, r) in p.grid.nodes().iter().enumerate() {
            let [w, wp, _] = p.node(i);
            assert!((a[i] - 1.0 / r).abs() <= 1e-10 / r);
            assert!((b[i] + wp / w).abs() <= 1e-10 * (wp / w));
        }
        assert!(f.is_zero(1, Some(2)) || f.get(1, Some(2)).iter().flatten().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn norms_follow_their_weights() {
        let p = profile();
        let g = p.grid.clone();
        let zero = PolarField::zeros(g.clone(), 8).unwrap();
        assert_eq!(norm_star(&zero).value, 0.0);
        let psi = PolarField::from_fn(g.clone(), 8, |r, _| {
            c(if r >= 2.0 { r.ln().powi(2) } else { 0.3 }, 0.0)
        })
        .unwrap();
        let n = norm_star(&psi);
        assert!((n.outer_first - 1.0).abs() <= 1e-12 && (n.inner - 0.48045).abs() < 1e-3);
        let ht = PolarField::from_fn(g, 8, |r, _| if r >= 2.0 { c(1.0 / (r * r), 1.0) } else { c(0.0, 0.0) })
            .unwrap();
        let rep = norm_dstar(&ht.times_iw(p).unwrap(), p).unwrap();
        assert!((rep.outer_first - 1.0).abs() <= 1e-12 && (rep.outer_second - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn inner_products() {
        let p = profile();
        let [iw, dx1, dx2] = kernel_fields(p, 16).unwrap();
        let scale = inner_product(&dx1, &dx1, 20.0).unwrap();
        assert!(inner_product(&iw, &dx1, 20.0).unwrap().abs() <= 1e-10 * scale);
        assert!(inner_product(&dx1, &dx2, 20.0).unwrap().abs() <= 1e-10 * scale);
        let e40 = inner_product(&dx1, &dx1, 40.0).unwrap();
        let slope = (e40 - scale) / (40f64.ln() - 20f64.ln());
        assert!((slope / PI - 1.0).abs() <= 0.05, "{}", slope);
        // disc area
        let one = PolarField::from_fn(p.grid.clone(), 8, |_, _| c(1.0, 0.0)).unwrap();
        assert!((inner_product(&one, &one, 3.0).unwrap() - 9.0 * PI).abs() <= 1e-9);
    }

    #[test]
    fn quadratic_form_of_translation_mode() {
        let p = profile();
        let dx1 = kernel_fields(p, 16).unwrap()[1].clone();
        let (b, grad) = quad_form_parts(&dx1, 30.0, p).unwrap();
        assert!(b.abs() / grad <= 0.02, "{} {}", b, grad);
        let zero = PolarField::zeros(p.grid.clone(), 8).unwrap();
        assert_eq!(quad_form(&zero, 10.0, p).unwrap(), 0.0);
    }
}
