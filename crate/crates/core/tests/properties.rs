//! Property tests over random band-limited fields.

use std::f64::consts::PI;

use fracmax_core::helmholtz::{pi, pi_cstar, pi_dstar, pi_inverse, tilde_curl, FhdElement};
use fracmax_core::maxwell::{apply_A, bilinear_B, eval_permittivity, FracParams, PermittivityModel};
use fracmax_core::nonlocal::{
    c_star, d_star, symmetry_defect, AlphaKernel, AsymmetricWitness, Gaussian, GaussianVector, KernelNormalization,
    TwoPointField,
};
use fracmax_core::solver::{solve_with_rhs, Preconditioner, SolveControls};
use fracmax_core::spectral::{
    curl, curl_curl, div, frac_laplacian, grad, random_band_limited, random_band_limited_vector, Grid3, ScalarField,
    VectorField3, C64,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type VectorOp = dyn Fn(&VectorField3) -> VectorField3;

const N: usize = 8;

fn grid() -> Grid3 {
    Grid3::new(N, 2.0 * PI).unwrap()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rel_s(a: &ScalarField, b: &ScalarField) -> f64 {
    (a - b).norm() / b.norm()
}

fn rel_v(a: &VectorField3, b: &VectorField3) -> f64 {
    (a - b).norm() / b.norm()
}

fn order() -> impl Strategy<Value = f64> {
    0.5f64..0.999
}

fn complex() -> impl Strategy<Value = C64> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(re, im)| C64::new(re, im))
}

fn point() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(0.0f64..2.0 * PI)
}

fn real_part(v: &VectorField3) -> VectorField3 {
    v.map_components(|c| c.map(|z| C64::new(z.re, 0.0)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn multiplier_exponents_add(
        seed in any::<u64>(),
        a in prop::sample::select(vec![-0.5, -0.25, 0.25, 0.5, 0.75]),
        b in prop::sample::select(vec![-0.5, -0.25, 0.25, 0.5, 0.75]),
    ) {
        let u = random_band_limited(&grid(), 3, &mut rng(seed));
        let lhs = frac_laplacian(&frac_laplacian(&u, a).unwrap(), b).unwrap();
        let rhs = frac_laplacian(&u, a + b).unwrap();
        prop_assert!(rel_s(&lhs, &rhs) <= 1e-12);
    }

    #[test]
    fn parseval(seed in any::<u64>()) {
        let u = random_band_limited(&grid(), 3, &mut rng(seed));
        let space: f64 = u.values().iter().map(|z| z.norm_sqr()).sum();
        let freq: f64 = u.spectrum().iter().map(|z| z.norm_sqr()).sum();
        let n3 = (N * N * N) as f64;
        prop_assert!((freq / n3 - space).abs() / space <= 1e-13);
    }

    #[test]
    fn operators_are_linear(seed in any::<u64>(), a in complex(), b in complex(), s in order()) {
        let g = grid();
        let mut r = rng(seed);
        let u = random_band_limited_vector(&g, 3, &mut r);
        let v = random_band_limited_vector(&g, 3, &mut r);
        let combo = &(&u * a) + &(&v * b);
        let ops: Vec<Box<VectorOp>> = vec![
            Box::new(curl),
            Box::new(curl_curl),
            Box::new(|w| grad(&div(w))),
            Box::new(move |w| frac_laplacian(w, s).unwrap()),
            Box::new(move |w| pi_cstar(w, s).unwrap()),
            Box::new(move |w| pi(&pi_inverse(w, s).unwrap()).unwrap()),
        ];
        for op in &ops {
            let lhs = op(&combo);
            let rhs = &(&op(&u) * a) + &(&op(&v) * b);
            prop_assert!(rel_v(&lhs, &rhs) <= 1e-13);
        }
    }

    #[test]
    fn curl_curl_is_grad_div_minus_laplacian(seed in any::<u64>()) {
        let v = random_band_limited_vector(&grid(), 3, &mut rng(seed));
        let rhs = &grad(&div(&v)) + &frac_laplacian(&v, 1.0).unwrap();
        prop_assert!(rel_v(&curl_curl(&v), &rhs) <= 1e-13);
    }

    #[test]
    fn d_star_parallel_and_c_star_orthogonal(x in point(), y in point(), s in order()) {
        prop_assume!((0..3).map(|i| (x[i] - y[i]).powi(2)).sum::<f64>() > 1e-4);
        let kernel = AlphaKernel::new(s, KernelNormalization::default()).unwrap();
        let w = Gaussian { center: [PI, 3.0, 2.5], width: 1.0, amp: C64::new(1.0, 0.5) };
        let wv = GaussianVector {
            center: [PI, 3.0, 2.5],
            width: 1.0,
            amp: [C64::new(1.0, 0.0), C64::new(0.0, -1.0), C64::new(0.5, 0.5)],
        };
        let al = kernel.eval(x, y).unwrap();
        let an = al.iter().map(|c| c * c).sum::<f64>().sqrt();
        let d = d_star(w, kernel).eval(x, y).unwrap();
        let c = c_star(wv, kernel).eval(x, y).unwrap();
        let dn = d.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let cn = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        // d × α = 0 and c · α = 0
        let cross = [
            d[1] * al[2] - d[2] * al[1],
            d[2] * al[0] - d[0] * al[2],
            d[0] * al[1] - d[1] * al[0],
        ];
        let crossn = cross.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let dot = c[0] * al[0] + c[1] * al[1] + c[2] * al[2];
        prop_assert!(crossn <= 1e-13 * dn * an + f64::MIN_POSITIVE);
        prop_assert!(dot.norm() <= 1e-13 * cn * an + f64::MIN_POSITIVE);
        let pairs = [(x, y)];
        prop_assert!(symmetry_defect(&d_star(w, kernel), &pairs) <= 1e-13 * dn);
        prop_assert!(symmetry_defect(&c_star(wv, kernel), &pairs) <= 1e-13 * cn);
    }

    #[test]
    fn asymmetric_witness_breaks_symmetry(x in point(), y in point()) {
        let r2 = (0..3).map(|i| (x[i] - y[i]).powi(2)).sum::<f64>();
        let g = |p: [f64; 3]| C64::new(1.0 + p[0] + 0.3 * p[1] * p[1], 0.0);
        prop_assume!(r2 > 1e-4 && (g(x) + g(y)).norm() > 1e-3);
        let kernel = AlphaKernel::new(0.75, KernelNormalization::default()).unwrap();
        let w = AsymmetricWitness { g, kernel };
        let v = w.value(x, y);
        let scale = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        // v(x,y) - v(y,x) = α(x,y)(g(x) + g(y))
        prop_assert!(symmetry_defect(&w, &[(x, y)]) > 1e-6 * scale);
    }

    #[test]
    fn pi_cstar_is_self_adjoint(seed in any::<u64>(), s in order()) {
        let g = grid();
        let mut r = rng(seed);
        let f = random_band_limited_vector(&g, 3, &mut r);
        let h = random_band_limited_vector(&g, 3, &mut r);
        let lhs = pi_cstar(&f, s).unwrap().dot(&h);
        let rhs = f.dot(&pi_cstar(&h, s).unwrap());
        prop_assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm());
        // the anti-self-adjoint sign would need lhs = -rhs
        prop_assert!((lhs + rhs).norm() > 1e-3 * lhs.norm());
    }

    #[test]
    fn pi_cstar_annihilates_pi_dstar(seed in any::<u64>(), s in order()) {
        let f = random_band_limited(&grid(), 3, &mut rng(seed));
        let d = pi_dstar(&f, s).unwrap();
        prop_assert!(pi_cstar(&d, s).unwrap().norm() <= 1e-13 * d.norm());
    }

    #[test]
    fn pi_is_a_bijection(seed in any::<u64>(), s in order()) {
        let g = grid();
        let mut r = rng(seed);
        let v = random_band_limited_vector(&g, 3, &mut r);
        let e = pi_inverse(&v, s).unwrap();
        prop_assert!(rel_v(&pi(&e).unwrap(), &v) <= 1e-12);
        prop_assert!(e.gauge_ratio() <= 1e-12);
        let phi = random_band_limited(&g, 3, &mut r);
        let a = curl(&random_band_limited_vector(&g, 3, &mut r));
        let well_formed = FhdElement::new(s, phi, a).unwrap();
        let back = pi_inverse(&pi(&well_formed).unwrap(), s).unwrap();
        prop_assert!(rel_s(&back.phi, &well_formed.phi) <= 1e-12);
        prop_assert!(rel_v(&back.a, &well_formed.a) <= 1e-12);
    }

    #[test]
    fn tilde_curl_squared_ignores_phi(seed in any::<u64>(), s in order()) {
        let g = grid();
        let mut r = rng(seed);
        let a = curl(&random_band_limited_vector(&g, 3, &mut r));
        let plain = FhdElement::new(s, ScalarField::zeros(&g), a.clone()).unwrap();
        let with_phi = FhdElement::new(s, random_band_limited(&g, 3, &mut r), a).unwrap();
        let cc = |e: &FhdElement| pi(&tilde_curl(&tilde_curl(e).unwrap()).unwrap()).unwrap();
        let base = cc(&plain);
        prop_assert!(rel_v(&cc(&with_phi), &base) <= 1e-12);
        prop_assert!(tilde_curl(&with_phi).unwrap().gauge_ratio() <= 1e-12);
    }

    #[test]
    fn vacuum_annihilates_shell_waves(
        s in order(),
        m in prop::sample::select(vec![[1i64, 0, 0], [0, -2, 0], [0, 0, 3], [1, 1, 0], [2, -1, 2]]),
        p in prop::array::uniform3(-1.0f64..1.0),
    ) {
        let g = grid();
        let xi = m.map(|c| c as f64);
        let kappa = xi.iter().map(|c| c * c).sum::<f64>().sqrt();
        let pd = (0..3).map(|i| p[i] * xi[i]).sum::<f64>() / (kappa * kappa);
        let pt: [f64; 3] = [0, 1, 2].map(|i| p[i] - pd * xi[i]);
        prop_assume!(pt.iter().map(|c| c * c).sum::<f64>() > 1e-6);
        let fp = FracParams::new(s, kappa.powf(s), 1.0).unwrap();
        let vac = eval_permittivity(&PermittivityModel::vacuum(&g), &g).unwrap();
        let u = VectorField3::plane_wave(&g, m, pt.map(|c| C64::new(c, 0.0)));
        prop_assert!(apply_A(&u, &vac, &fp).unwrap().norm() <= 1e-12 * u.norm());
    }

    #[test]
    fn bilinear_form_is_real_on_real_fields(seed in any::<u64>(), s in order(), a in -0.5f64..2.0) {
        let g = Grid3::new(N, 4.0 * PI).unwrap();
        let perm = eval_permittivity(&PermittivityModel::centered_bump(&g, a), &g).unwrap();
        let fp = FracParams::new(s, 1.0, 1.0).unwrap();
        let u = real_part(&random_band_limited_vector(&g, 3, &mut rng(seed)));
        let b = bilinear_B(&u, &u, &perm, &fp).unwrap().value;
        prop_assert!(b.im.abs() <= 1e-12 * b.norm());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn solution_map_is_linear(seed in any::<u64>(), s in prop::sample::select(vec![0.5, 0.75])) {
        let g = Grid3::new(N, 4.0 * PI).unwrap();
        let perm = eval_permittivity(&PermittivityModel::centered_bump(&g, 1.0), &g).unwrap();
        // k^{1/s} = 0.6 sits between lattice shells
        let fp = FracParams::new(s, 0.6f64.powf(s), 1.0).unwrap();
        let op = fracmax_core::maxwell::ScatteringOperator::new(&perm, &fp);
        let controls = SolveControls { tol: 1e-12, max_iter: 1000, restart: 50, precond: Preconditioner::ShiftedFracLap };
        let f = random_band_limited_vector(&g, 2, &mut rng(seed));
        let (u, out) = solve_with_rhs(&op, &f, None, &controls).unwrap();
        let (u2, _) = solve_with_rhs(&op, &(&f * 2.0), None, &controls).unwrap();
        prop_assert!(rel_v(&u2, &(&u * 2.0)) <= 1e-10);
        let recomputed = (&op.apply(&u) - &f).norm() / f.norm();
        prop_assert!((recomputed - out.final_relative_residual).abs() <= 1e-12);
    }
}
