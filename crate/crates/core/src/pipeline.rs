//! Full 2-D solves from per-mode inversions, and the seeded test corpora.

use std::sync::Arc;
use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{Result, VortexError};
use crate::homogeneous::{build_kernel, build_mode0_kernel, KernelBasis};
use crate::mode_solver::{orthogonality_integral, solve_mode0, solve_mode1, solve_mode_k, ModeRHS};
use crate::numerics::RadialGrid;
use crate::profile::ProfileTable;
use crate::synthesis::{
    decompose, norm_dstar, norm_star, residual_2d, synthesize, synthesize_psi, FourierField,
    NormReport, PolarField,
};

/// Kernel bases for modes `0..=k_max`.
#[derive(Debug, Clone)]
pub struct KernelSet {
    bases: Vec<KernelBasis>,
}

impl KernelSet {
    pub fn build(profile: &ProfileTable, k_max: usize) -> Result<Self> {
        let bases = (0..=k_max)
            .into_par_iter()
            .map(|k| {
                if k == 0 {
                    build_mode0_kernel(profile)
                } else {
                    build_kernel(profile, k)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(KernelSet { bases })
    }

    pub fn k_max(&self) -> usize {
        self.bases.len() - 1
    }

    pub fn get(&self, k: usize) -> Result<&KernelBasis> {
        self.bases
            .get(k)
            .ok_or_else(|| VortexError::Config(format!("no kernel basis for mode {}", k)))
    }
}

/// Radial weight `χ(r) = e^{-r²}` of the fields used to restore orthogonality.
fn projector_weight(r: f64) -> f64 {
    (-r * r).exp()
}

/// Family-`(1, l)` coefficients of `χ·∂W/∂x2` (`l = 1`) or `-χ·∂W/∂x1` (`l = 2`):
/// both are `χ·(1/r, -w'/w)` in the standard system.
fn projector_family(profile: &ProfileTable, l: u8) -> [Vec<f64>; 2] {
    let nodes = profile.grid.nodes();
    let sign = if l == 2 { -1.0 } else { 1.0 };
    let mut a = Vec::with_capacity(nodes.len());
    let mut b = Vec::with_capacity(nodes.len());
    for (i, &r) in nodes.iter().enumerate() {
        let [w, wp, _] = profile.node(i);
        let chi = projector_weight(r);
        a.push(chi / r);
        b.push(-sign * chi * wp / w);
    }
    [a, b]
}

/// Removes the `∂W/∂x1`, `∂W/∂x2` components of the mode-1 families in place;
/// returns the orthogonality integrals before projection (`l = 1`, `l = 2`).
pub fn project_orthogonal(
    modes: &mut FourierField,
    profile: &ProfileTable,
    kernel1: &KernelBasis,
) -> Result<[f64; 2]> {
    let mut before = [0.0; 2];
    if modes.k_max() == 0 {
        return Ok(before);
    }
    for l in [1u8, 2] {
        let rhs = modes.rhs(1, Some(l))?;
        let c0 = orthogonality_integral(profile, kernel1, &rhs)?;
        before[l as usize - 1] = c0;
        if c0 == 0.0 {
            continue;
        }
        let q = projector_family(profile, l);
        let qrhs = ModeRHS::new(
            1,
            Some(l),
            crate::numerics::RadialFunction::new(profile.grid.clone(), q[0].clone())?,
            crate::numerics::RadialFunction::new(profile.grid.clone(), q[1].clone())?,
        )?;
        let c = c0 / orthogonality_integral(profile, kernel1, &qrhs)?;
        let [a, b] = modes.get(1, Some(l)).clone();
        let a: Vec<f64> = a.iter().zip(&q[0]).map(|(x, y)| x - c * y).collect();
        let b: Vec<f64> = b.iter().zip(&q[1]).map(|(x, y)| x - c * y).collect();
        modes.set(1, Some(l), [a, b])?;
    }
    Ok(before)
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeSummary {
    pub k: usize,
    pub l: Option<u8>,
    pub residual: f64,
    pub orthogonality: Option<f64>,
    pub growth_at_zero: f64,
    pub growth_at_inf: [f64; 2],
    pub tail_warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub k_max: usize,
    pub n_theta: usize,
    pub projected: bool,
    pub orthogonality_before: [f64; 2],
    pub truncated_energy: f64,
    pub residual_2d: f64,
    pub norm_star: NormReport,
    pub norm_dstar: NormReport,
    pub ratio: f64,
    pub max_mode_residual: f64,
    pub modes: Vec<ModeSummary>,
    #[serde(skip)]
    pub seconds: f64,
}

/// Result of a full solve; `h` is the right-hand side actually solved.
#[derive(Debug, Clone)]
pub struct FieldSolution {
    pub phi: PolarField,
    pub psi: PolarField,
    pub h: PolarField,
    pub modes: FourierField,
    pub report: SolveReport,
}

/// Solves `L[φ] = h` with modes up to `k_max`. Mode 1 uses the orthogonal
/// representation when `project` is set and the general one otherwise.
pub fn solve_field(
    h: &PolarField,
    profile: &ProfileTable,
    kernels: &KernelSet,
    k_max: usize,
    project: bool,
) -> Result<FieldSolution> {
    let start = Instant::now();
    if k_max > kernels.k_max() {
        return Err(VortexError::Config(format!(
            "K = {} exceeds the {} kernel bases built",
            k_max,
            kernels.k_max()
        )));
    }
    let nt = h.n_theta();
    let mut hm = decompose(h, profile, k_max)?;
    let truncated_energy = hm.truncated_energy;
    let mut orth_before = [0.0; 2];
    let mut h_used = h.clone();
    if project && k_max >= 1 {
        let original = hm.clone();
        orth_before = project_orthogonal(&mut hm, profile, kernels.get(1)?)?;
        let mut delta = FourierField::zeros(profile.grid.clone(), k_max);
        for l in [1u8, 2] {
            let (a, b) = (original.get(1, Some(l)), hm.get(1, Some(l)));
            let d: [Vec<f64>; 2] = [0, 1].map(|c| a[c].iter().zip(&b[c]).map(|(x, y)| x - y).collect());
            delta.set(1, Some(l), d)?;
        }
        h_used = h.lin_comb(1.0, &synthesize(&delta, profile, nt)?, -1.0)?;
    }
    let families = hm.families();
    let solved = families
        .par_iter()
        .filter(|(k, l)| !hm.is_zero(*k, *l))
        .map(|&(k, l)| {
            let rhs = hm.rhs(k, l)?;
            let basis = kernels.get(k)?;
            let sol = match k {
                0 => solve_mode0(profile, basis, &rhs)?,
                1 => solve_mode1(profile, basis, &rhs, project)?,
                _ => solve_mode_k(profile, basis, &rhs)?,
            };
            Ok(sol)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut psi_modes = FourierField::zeros(profile.grid.clone(), k_max);
    let mut summaries = Vec::with_capacity(solved.len());
    for s in solved {
        psi_modes.set(s.k, s.l, [s.psi1.values().to_vec(), s.psi2.values().to_vec()])?;
        let d = s.diagnostics;
        summaries.push(ModeSummary {
            k: s.k,
            l: s.l,
            residual: d.residual,
            orthogonality: d.orthogonality,
            growth_at_zero: d.growth_at_zero,
            growth_at_inf: d.growth_at_inf,
            tail_warnings: d.tail_warnings,
        });
    }
    let psi = synthesize_psi(&psi_modes, nt)?;
    let phi = psi.times_iw(profile)?;
    let res = residual_2d(&phi, &h_used, profile)?;
    let ns = norm_star(&psi);
    let nd = norm_dstar(&h_used, profile)?;
    let report = SolveReport {
        k_max,
        n_theta: nt,
        projected: project,
        orthogonality_before: orth_before,
        truncated_energy,
        residual_2d: res,
        norm_star: ns,
        norm_dstar: nd,
        ratio: if nd.value > 0.0 { ns.value / nd.value } else { 0.0 },
        max_mode_residual: summaries.iter().fold(0.0, |m, s| m.max(s.residual)),
        modes: summaries,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok(FieldSolution {
        phi,
        psi,
        h: h_used,
        modes: psi_modes,
        report,
    })
}

/// Radial shapes admissible for `‖h‖_**`: at most `r^-1` at 0, `r^-2` (first
/// component) or `O(1)` (second component) at infinity.
fn radial_shape(kind: usize, second: bool, scale: f64, r: f64) -> f64 {
    let x = r / scale;
    match (kind, second) {
        (0, false) => 1.0 / (1.0 + x * x),
        (1, false) => 1.0 / (x * (1.0 + x)),
        (0, true) => x.tanh(),
        (1, true) => 1.0 / (1.0 + x),
        _ => (-(x - 1.5) * (x - 1.5)).exp(),
    }
}

/// One family term of a corpus right-hand side.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CorpusTerm {
    pub k: usize,
    pub l: Option<u8>,
    pub amp: [f64; 2],
    pub kind: [usize; 2],
    pub scale: f64,
}

/// Seeded random right-hand side in ψ-form built from up to four families with `k <= k_data`.
pub fn corpus_terms(seed: u64, k_data: usize) -> Vec<CorpusTerm> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=4);
    (0..n)
        .map(|_| {
            let k = rng.random_range(0..=k_data);
            let l = if k == 0 {
                None
            } else {
                Some(rng.random_range(1..=2u8))
            };
            CorpusTerm {
                k,
                l,
                amp: [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                kind: [rng.random_range(0..3), rng.random_range(0..3)],
                scale: rng.random_range(0.5..3.0),
            }
        })
        .collect()
}

/// Assembles `h = iW·Σ terms` on the polar grid.
pub fn field_from_terms(
    terms: &[CorpusTerm],
    profile: &ProfileTable,
    n_theta: usize,
) -> Result<PolarField> {
    let k_max = terms.iter().map(|t| t.k).max().unwrap_or(0);
    let grid = profile.grid.clone();
    let mut modes = FourierField::zeros(grid.clone(), k_max);
    for t in terms {
        let mut pair = modes.get(t.k, t.l).clone();
        for (i, &r) in grid.nodes().iter().enumerate() {
            pair[0][i] += t.amp[0] * radial_shape(t.kind[0], false, t.scale, r);
            pair[1][i] += t.amp[1] * radial_shape(t.kind[1], true, t.scale, r);
        }
        modes.set(t.k, t.l, pair)?;
    }
    synthesize(&modes, profile, n_theta)
}

/// The estimate corpus: projected orthogonal to `∂W/∂x1`, `∂W/∂x2` and
/// normalized to `‖h‖_** = 1`.
pub fn estimate_corpus(
    profile: &ProfileTable,
    kernels: &KernelSet,
    count: usize,
    seed: u64,
    k_data: usize,
    n_theta: usize,
) -> Result<Vec<PolarField>> {
    (0..count)
        .into_par_iter()
        .map(|c| {
            let terms = corpus_terms(seed.wrapping_add(c as u64), k_data);
            let h = field_from_terms(&terms, profile, n_theta)?;
            let mut m = decompose(&h, profile, k_data.max(1))?;
            project_orthogonal(&mut m, profile, kernels.get(1)?)?;
            let h = synthesize(&m, profile, n_theta)?;
            let nd = norm_dstar(&h, profile)?.value;
            h.lin_comb(1.0 / nd, &h, 0.0)
        })
        .collect()
}

/// Smooth compactly supported field `χ(|x - x0|/ρ)·(a + b·x + c·y)` with
/// complex coefficients, support inside `B_R`.
pub fn random_compact_field(
    grid: &Arc<RadialGrid>,
    n_theta: usize,
    radius: f64,
    seed: u64,
) -> Result<PolarField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho = rng.random_range(0.5..0.45 * radius);
    let off = rng.random_range(0.0..(0.9 * radius - rho).max(0.0));
    let ang = rng.random_range(0.0..std::f64::consts::TAU);
    let (x0, y0) = (off * ang.cos(), off * ang.sin());
    let mut cf = [Complex64::new(0.0, 0.0); 3];
    for c in cf.iter_mut() {
        *c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    }
    PolarField::from_fn(grid.clone(), n_theta, move |r, t| {
        let (x, y) = (r * t.cos(), r * t.sin());
        let s2 = ((x - x0).powi(2) + (y - y0).powi(2)) / (rho * rho);
        if s2 >= 1.0 {
            return Complex64::new(0.0, 0.0);
        }
        let bump = (1.0 - 1.0 / (1.0 - s2)).exp();
        (cf[0] + cf[1] * (x / rho) + cf[2] * (y / rho)) * bump
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::GridSpec;
    use crate::profile::solve_profile;
    use crate::synthesis::{inner_product, kernel_fields, quad_form_parts};
    use std::sync::OnceLock;

    fn setup() -> &'static (ProfileTable, KernelSet) {
        static T: OnceLock<(ProfileTable, KernelSet)> = OnceLock::new();
        T.get_or_init(|| {
            let p = solve_profile(RadialGrid::new(GridSpec::default()).unwrap(), 1e-8).unwrap();
            let k = KernelSet::build(&p, 8).unwrap();
            (p, k)
        })
    }

    #[test]
    fn projection_removes_translation_components() {
        let (p, ks) = setup();
        // Gaussian data: inner products over B_40 carry no visible tail
        let terms = [
            CorpusTerm { k: 1, l: Some(1), amp: [0.7, -0.4], kind: [2, 2], scale: 1.0 },
            CorpusTerm { k: 1, l: Some(2), amp: [-0.3, 0.9], kind: [2, 2], scale: 2.0 },
            CorpusTerm { k: 2, l: Some(1), amp: [0.5, 0.5], kind: [2, 2], scale: 1.0 },
        ];
        let h = field_from_terms(&terms, p, 32).unwrap();
        let [_, dx1, dx2] = kernel_fields(p, 32).unwrap();
        let before = solve_field(&h, p, ks, 4, false).unwrap();
        assert!(before.report.orthogonality_before == [0.0, 0.0]);
        let sol = solve_field(&h, p, ks, 4, true).unwrap();
        let [o1, o2] = sol.report.orthogonality_before;
        let ip2 = inner_product(&h, &dx2, 40.0).unwrap();
        let ip1 = inner_product(&h, &dx1, 40.0).unwrap();
        assert!((ip2 - std::f64::consts::PI * o1).abs() <= 1e-8 * ip2.abs(), "{} {}", ip2, o1);
        assert!((ip1 + std::f64::consts::PI * o2).abs() <= 1e-8 * ip1.abs(), "{} {}", ip1, o2);
        for d in [&dx1, &dx2] {
            let ip = inner_product(&sol.h, d, 40.0).unwrap();
            assert!(ip.abs() <= 1e-10 * ip1.abs().max(ip2.abs()), "{}", ip);
        }
        assert!(sol.report.residual_2d <= 5e-5, "{}", sol.report.residual_2d);
    }

    #[test]
    fn full_solve_of_corpus_member() {
        let (p, ks) = setup();
        let hs = estimate_corpus(p, ks, 2, 7, 4, 64).unwrap();
        for h in &hs {
            let nd = norm_dstar(h, p).unwrap().value;
            assert!((nd - 1.0).abs() <= 1e-12);
            let sol = solve_field(h, p, ks, 8, true).unwrap();
            assert!(sol.report.residual_2d <= 5e-5, "{:?}", sol.report.residual_2d);
            assert!(sol.report.max_mode_residual <= 1e-6);
        }
    }

    #[test]
    fn zero_field_solves_to_zero() {
        let (p, ks) = setup();
        let h = PolarField::zeros(p.grid.clone(), 16).unwrap();
        let sol = solve_field(&h, p, ks, 3, true).unwrap();
        assert_eq!(sol.phi.sup_abs(), 0.0);
    }

    #[test]
    fn compact_fields_have_nonnegative_form() {
        let (p, _) = setup();
        for seed in 0..5 {
            let f = random_compact_field(&p.grid, 64, 10.0, seed).unwrap();
            let (b, g) = quad_form_parts(&f, 10.0, p).unwrap();
            let scale = g + inner_product(&f, &f, 10.0).unwrap();
            assert!(b >= -1e-8 * scale, "seed {} B = {}", seed, b);
        }
    }
}
