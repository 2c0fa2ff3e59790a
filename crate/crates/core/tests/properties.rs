use std::sync::OnceLock;

use proptest::prelude::*;
use rustfft::num_complex::Complex64;
use vortex_core::disk_oracle::{apply, assemble, solve_dirichlet_2d, DiskSystem};
use vortex_core::numerics::{GridSpec, RadialGrid};
use vortex_core::pipeline::{corpus_terms, field_from_terms, random_compact_field, solve_field, KernelSet};
use vortex_core::profile::{solve_profile, ProfileTable};
use vortex_core::synthesis::{decompose, inner_product, quad_form_parts, synthesize, PolarField};

const K: usize = 4;
const NT: usize = 32;

fn setup() -> &'static (ProfileTable, KernelSet) {
    static S: OnceLock<(ProfileTable, KernelSet)> = OnceLock::new();
    S.get_or_init(|| {
        let p = solve_profile(RadialGrid::new(GridSpec::default()).unwrap(), 1e-8).unwrap();
        let k = KernelSet::build(&p, K).unwrap();
        (p, k)
    })
}

fn oracle() -> &'static DiskSystem {
    static S: OnceLock<DiskSystem> = OnceLock::new();
    S.get_or_init(|| assemble(&setup().0, 6.0, 64).unwrap())
}

fn rel_diff(a: &PolarField, b: &PolarField) -> f64 {
    let d = a.values().iter().zip(b.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
    d / a.sup_abs().max(b.sup_abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn decompose_inverts_synthesize(seed in 0u64..10_000) {
        let (p, _) = setup();
        let h = field_from_terms(&corpus_terms(seed, K), p, NT).unwrap();
        let back = synthesize(&decompose(&h, p, K).unwrap(), p, NT).unwrap();
        prop_assert!(rel_diff(&h, &back) <= 1e-10);
    }

    #[test]
    fn field_solve_is_linear(s1 in 0u64..10_000, s2 in 0u64..10_000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let (p, ks) = setup();
        let h1 = field_from_terms(&corpus_terms(s1, K), p, NT).unwrap();
        let h2 = field_from_terms(&corpus_terms(s2, K), p, NT).unwrap();
        let h = h1.lin_comb(a, &h2, b).unwrap();
        let phi = solve_field(&h, p, ks, K, false).unwrap().phi;
        let phi1 = solve_field(&h1, p, ks, K, false).unwrap().phi;
        let phi2 = solve_field(&h2, p, ks, K, false).unwrap().phi;
        let combo = phi1.lin_comb(a, &phi2, b).unwrap();
        prop_assert!(rel_diff(&phi, &combo) <= 1e-9, "{}", rel_diff(&phi, &combo));
    }

    #[test]
    fn oracle_solve_inverts_its_operator(c in prop::array::uniform6(-1.0f64..1.0)) {
        let sys = oracle();
        let exact = sys.sample(|r, t| {
            let s = (1.0 - (r / 6.0).powi(2)).max(0.0);
            let x = Complex64::new(c[0] + c[1] * r * t.cos(), c[2] * r * r * (2.0 * t).sin());
            s * (x + Complex64::new(c[3] * (3.0 * t).cos(), c[4] + c[5] * r) * r)
        });
        let h = apply(sys, &exact);
        let got = solve_dirichlet_2d(sys, &h).unwrap();
        let err = got.values.iter().zip(&exact.values).fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        prop_assert!(err <= 1e-9 * exact.sup_abs().max(1e-300));
    }

    #[test]
    fn quadratic_form_is_nonnegative(seed in 0u64..10_000) {
        let (p, _) = setup();
        let f = random_compact_field(&p.grid, 64, 8.0, seed).unwrap();
        let (b, g) = quad_form_parts(&f, 8.0, p).unwrap();
        let scale = g + inner_product(&f, &f, 8.0).unwrap();
        prop_assert!(b >= -1e-8 * scale);
    }
}

#[test]
fn projected_solve_keeps_residual_small() {
    let (p, ks) = setup();
    let h = field_from_terms(&corpus_terms(42, K), p, NT).unwrap();
    let sol = solve_field(&h, p, ks, K, true).unwrap();
    assert!(sol.report.residual_2d <= 5e-5, "{}", sol.report.residual_2d);
    let mut again = decompose(&sol.h, p, K).unwrap();
    let orth = vortex_core::pipeline::project_orthogonal(&mut again, p, ks.get(1).unwrap()).unwrap();
    assert!(orth.iter().all(|v| v.abs() <= 1e-8), "{:?}", orth);
}
