//! Invariant suites behind `fracmax validate`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use fracmax_core::helmholtz::{classical_decompose, pi, pi_cstar, pi_dstar, pi_inverse, tilde_curl, FhdElement};
use fracmax_core::maxwell::{
    apply_A, bilinear_B, coercivity_ratio, eval_permittivity, incident_one_point, p_op, recover_H, FracParams,
    IncidentSpec, PermittivityModel, ScatteringOperator,
};
use fracmax_core::nonlocal::{
    c_star, d_star, fourier_cstar_check, pi_quadrature, symmetry_defect, ConstantsLedger, Gaussian, GaussianVector,
    KernelNormalization, QuadratureOptions, TwoPointField, VectorInterpolant,
};
use fracmax_core::solver::{manufactured_solve, solve_with_rhs, Preconditioner, ScatterProblem, SolveControls};
use fracmax_core::spectral::{
    curl, curl_curl, div, frac_laplacian, grad, random_band_limited, random_band_limited_vector, random_samples,
    riesz_potential, Grid3, ScalarField, TrigInterpolant, VectorField3, C64, ZERO,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    All,
    Spectral,
    Pi,
    Helmholtz,
    FourierLemma,
    Coercivity,
    Maxwell,
}

impl Suite {
    pub const NAMES: [&'static str; 7] = [
        "all",
        "spectral",
        "pi",
        "helmholtz",
        "fourier-lemma",
        "coercivity",
        "maxwell",
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::All => "all",
            Self::Spectral => "spectral",
            Self::Pi => "pi",
            Self::Helmholtz => "helmholtz",
            Self::FourierLemma => "fourier-lemma",
            Self::Coercivity => "coercivity",
            Self::Maxwell => "maxwell",
        }
    }
}

impl FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Ok(match s {
            "all" => Self::All,
            "spectral" => Self::Spectral,
            "pi" => Self::Pi,
            "helmholtz" => Self::Helmholtz,
            "fourier-lemma" => Self::FourierLemma,
            "coercivity" => Self::Coercivity,
            "maxwell" => Self::Maxwell,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown suite `{other}`; expected one of {}",
                    Self::NAMES.join(", ")
                )))
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bound {
    AtMost,
    AtLeast,
    /// Reported only.
    Info,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub measured: f64,
    pub bound: Bound,
    pub tolerance: f64,
}

impl Check {
    pub fn at_most(suite: &'static str, name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            suite,
            name: name.into(),
            measured,
            bound: Bound::AtMost,
            tolerance,
        }
    }

    pub fn at_least(suite: &'static str, name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            bound: Bound::AtLeast,
            ..Self::at_most(suite, name, measured, tolerance)
        }
    }

    pub fn info(suite: &'static str, name: impl Into<String>, measured: f64) -> Self {
        Self {
            bound: Bound::Info,
            ..Self::at_most(suite, name, measured, f64::NAN)
        }
    }

    pub fn pass(&self) -> bool {
        match self.bound {
            Bound::AtMost => self.measured <= self.tolerance,
            Bound::AtLeast => self.measured >= self.tolerance,
            Bound::Info => true,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (rel, status) = match self.bound {
            Bound::AtMost => ("<=", if self.pass() { "PASS" } else { "FAIL" }),
            Bound::AtLeast => (">=", if self.pass() { "PASS" } else { "FAIL" }),
            Bound::Info => ("", "INFO"),
        };
        let tol = if self.bound == Bound::Info {
            "-".to_string()
        } else {
            format!("{rel} {:.1e}", self.tolerance)
        };
        write!(
            f,
            "{:<14} {:<48} {:>12.4e} {:>12} {status}",
            self.suite, self.name, self.measured, tol
        )
    }
}

pub fn render_table(checks: &[Check]) -> String {
    let mut out = format!(
        "{:<14} {:<48} {:>12} {:>12} status\n",
        "suite", "check", "measured", "tolerance"
    );
    for c in checks {
        out.push_str(&c.to_string());
        out.push('\n');
    }
    out
}

pub fn run_suite(suite: Suite, n: usize, seed: u64) -> CliResult<Vec<Check>> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(CliError::Usage(format!("--n must be an even integer >= 4, got {n}")));
    }
    match suite {
        Suite::All => {
            let mut out = Vec::new();
            for s in [
                Suite::Spectral,
                Suite::Pi,
                Suite::Helmholtz,
                Suite::FourierLemma,
                Suite::Coercivity,
                Suite::Maxwell,
            ] {
                let m = if s == Suite::FourierLemma { n.min(8) } else { n };
                out.extend(run_suite(s, m, seed)?);
            }
            Ok(out)
        }
        Suite::Spectral => spectral(n, seed),
        Suite::Pi => pi_suite(n, seed),
        Suite::Helmholtz => helmholtz(n, seed),
        Suite::FourierLemma => {
            if n > 8 {
                return Err(CliError::Usage(format!(
                    "fourier-lemma is limited to --n <= 8, got {n}"
                )));
            }
            fourier_lemma(n, seed)
        }
        Suite::Coercivity => coercivity(n, seed, 100),
        Suite::Maxwell => maxwell(n, seed),
    }
}

fn rel_s(a: &ScalarField, b: &ScalarField) -> f64 {
    (a - b).norm() / b.norm()
}

fn rel_v(a: &VectorField3, b: &VectorField3) -> f64 {
    (a - b).norm() / b.norm()
}

fn below_nyquist(n: usize) -> i64 {
    n as i64 / 2 - 1
}

pub const SPECTRAL_ORDERS: [f64; 3] = [0.5, 0.75, 0.9];

pub fn spectral(n: usize, seed: u64) -> CliResult<Vec<Check>> {
    const S: &str = "spectral";
    let g = Grid3::new(n, 2.0 * PI)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let raw = random_samples(&g, &mut rng);
    let back = ScalarField::from_spectrum(&g, raw.spectrum())?;
    out.push(Check::at_most(S, "fft round trip", rel_s(&back, &raw), 1e-13));

    let u = random_band_limited(&g, below_nyquist(n), &mut rng);
    for s in SPECTRAL_ORDERS {
        let half = frac_laplacian(&frac_laplacian(&u, s / 2.0)?, s / 2.0)?;
        out.push(Check::at_most(
            S,
            format!("(-Δ)^(s/2)(-Δ)^(s/2) = (-Δ)^s, s={s}"),
            rel_s(&half, &frac_laplacian(&u, s)?),
            1e-12,
        ));
        let inv = frac_laplacian(&frac_laplacian(&u, s)?, -s)?;
        out.push(Check::at_most(
            S,
            format!("(-Δ)^-s (-Δ)^s = I, s={s}"),
            rel_s(&inv, &u),
            1e-12,
        ));
        let rz = riesz_potential(&frac_laplacian(&u, s)?, 2.0 * s)?;
        out.push(Check::at_most(
            S,
            format!("I_2s (-Δ)^s = I, s={s}"),
            rel_s(&rz, &u),
            1e-12,
        ));
        let a = frac_laplacian(&riesz_potential(&u, 1.0 - s)?, (1.0 - s) / 2.0)?;
        out.push(Check::at_most(
            S,
            format!("(-Δ)^((1-s)/2) I_(1-s) = I, s={s}"),
            rel_s(&a, &u),
            1e-12,
        ));
    }
    let lap = frac_laplacian(&u, 1.0)?;
    let cg = curl(&grad(&u));
    out.push(Check::at_most(S, "curl grad = 0", cg.norm() / lap.norm(), 1e-12));
    let v = random_band_limited_vector(&g, below_nyquist(n), &mut rng);
    let lapv = frac_laplacian(&v, 1.0)?;
    let dc = div(&curl(&v));
    out.push(Check::at_most(S, "div curl = 0", dc.norm() / lapv.norm(), 1e-12));
    let id = &grad(&div(&v)) + &lapv;
    out.push(Check::at_most(
        S,
        "curl curl = grad div - Δ",
        rel_v(&curl_curl(&v), &id),
        1e-12,
    ));
    Ok(out)
}

/// Grid, offset Gaussian and evaluation point shared by the quadrature checks.
pub struct QuadratureSetup {
    pub grid: Grid3,
    pub scalar: Gaussian,
    pub vector: GaussianVector,
    pub x: [f64; 3],
    pub x_index: usize,
}

impl QuadratureSetup {
    pub fn new(n: usize) -> CliResult<Self> {
        let l = 2.0 * PI;
        let grid = Grid3::new(n, l)?;
        let c = grid.center();
        let center = [c[0] + l / 16.0, c[1] + l / 32.0, c[2]];
        let x_index = grid.index(n / 2, n / 2, n / 2);
        Ok(Self {
            scalar: Gaussian {
                center,
                width: l / 8.0,
                amp: C64::new(1.0, 0.0),
            },
            vector: GaussianVector {
                center,
                width: l / 8.0,
                amp: [C64::new(0.2, 0.0), C64::new(-0.5, 0.0), C64::new(1.0, 0.0)],
            },
            x: grid.point(x_index),
            x_index,
            grid,
        })
    }

    pub fn options(&self) -> QuadratureOptions {
        let l = self.grid.l();
        QuadratureOptions::ball(l / 8.0, l / 2.0)
    }
}

fn vec_rel(a: [C64; 3], b: [C64; 3]) -> f64 {
    let d = (0..3).map(|i| (a[i] - b[i]).norm_sqr()).sum::<f64>().sqrt();
    d / (0..3).map(|i| b[i].norm_sqr()).sum::<f64>().sqrt()
}

/// `(error of Π D*, error of Π C*)` against the spectral formulas at one point.
pub fn pi_quadrature_errors(setup: &QuadratureSetup, s: f64) -> CliResult<(f64, f64)> {
    let ledger = ConstantsLedger::new(s, KernelNormalization::default())?;
    let w = setup.scalar.sample(&setup.grid);
    let spec_d = pi_dstar(&w, s)?.at(setup.x_index);
    let quad_d = pi_quadrature(
        &d_star(TrigInterpolant::new(&w), ledger.kernel()),
        setup.x,
        &ledger,
        &setup.options(),
    );
    let wv = setup.vector.sample(&setup.grid);
    let spec_c = pi_cstar(&wv, s)?.at(setup.x_index);
    let quad_c = pi_quadrature(
        &c_star(VectorInterpolant::new(&wv), ledger.kernel()),
        setup.x,
        &ledger,
        &setup.options(),
    );
    Ok((vec_rel(quad_d.value, spec_d), vec_rel(quad_c.value, spec_c)))
}

/// Largest relative gap between `Π` by quadrature of the two-point field of
/// `e` and the spectral `pi(e)` over `points` grid points.
pub fn lift_errors(e: &FhdElement, points: &[usize]) -> CliResult<f64> {
    let ledger = ConstantsLedger::new(e.s, KernelNormalization::default())?;
    let tp = e.two_point()?;
    let spec = pi(e)?;
    let l = e.grid().l();
    let opts = QuadratureOptions::ball(l / 8.0, l / 2.0);
    let scale = spec.max_abs();
    let mut worst: f64 = 0.0;
    for &idx in points {
        let q = pi_quadrature(&tp, e.grid().point(idx), &ledger, &opts);
        let sv = spec.at(idx);
        let d = (0..3).map(|i| (q.value[i] - sv[i]).norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(d / scale);
    }
    Ok(worst)
}

pub fn pi_suite(n: usize, seed: u64) -> CliResult<Vec<Check>> {
    const S: &str = "pi";
    let setup = QuadratureSetup::new(n)?;
    let mut out = Vec::new();
    for s in [0.5, 0.75] {
        let (ed, ec) = pi_quadrature_errors(&setup, s)?;
        out.push(Check::at_most(
            S,
            format!("quadrature Π D*w vs I_(1-s)∇w, s={s}"),
            ed,
            2e-2,
        ));
        out.push(Check::at_most(
            S,
            format!("quadrature Π C*w vs I_(1-s)∇×w, s={s}"),
            ec,
            2e-2,
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = random_band_limited(&setup.grid, below_nyquist(n), &mut rng);
    let h = random_band_limited_vector(&setup.grid, below_nyquist(n), &mut rng);
    let k = random_band_limited_vector(&setup.grid, below_nyquist(n), &mut rng);
    for s in [0.5, 0.75] {
        let d = pi_dstar(&f, s)?;
        out.push(Check::at_most(
            S,
            format!("Π C* Π D* = 0, s={s}"),
            pi_cstar(&d, s)?.norm() / d.norm(),
            1e-13,
        ));
        let lhs = pi_cstar(&h, s)?.dot(&k);
        let rhs = h.dot(&pi_cstar(&k, s)?);
        out.push(Check::at_most(
            S,
            format!("Π C* self-adjoint, s={s}"),
            (lhs - rhs).norm() / lhs.norm(),
            1e-12,
        ));
    }
    let v = setup.vector.sample(&setup.grid);
    let e = pi_inverse(&v, 0.75)?;
    let c = setup.grid.n() / 2;
    let pts: Vec<usize> = (0..5)
        .map(|i| setup.grid.index(c + i % 2, c - i / 2, c + i / 3))
        .collect();
    out.push(Check::at_most(
        S,
        "two-point lift: quadrature Π vs pi(e), 5 points",
        lift_errors(&e, &pts)?,
        5e-2,
    ));
    Ok(out)
}

pub fn helmholtz(n: usize, seed: u64) -> CliResult<Vec<Check>> {
    const S: &str = "helmholtz";
    let g = Grid3::new(n, 2.0 * PI)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let band = below_nyquist(n);
    let v = random_band_limited_vector(&g, band, &mut rng);
    let mut out = Vec::new();
    let parts = classical_decompose(&v);
    let rec = &grad(&parts.phi_t) + &curl(&parts.a_t);
    out.push(Check::at_most(
        S,
        "classical decomposition reconstructs",
        rel_v(&rec, &v),
        1e-12,
    ));
    for s in SPECTRAL_ORDERS {
        let e = pi_inverse(&v, s)?;
        out.push(Check::at_most(
            S,
            format!("pi(pi_inverse(v)) = v, s={s}"),
            rel_v(&pi(&e)?, &v),
            1e-12,
        ));
        let back = pi_inverse(&pi(&e)?, s)?;
        let err = ((&back.phi - &e.phi).norm().powi(2) + (&back.a - &e.a).norm().powi(2)).sqrt()
            / (e.phi.norm().powi(2) + e.a.norm().powi(2)).sqrt();
        out.push(Check::at_most(S, format!("pi_inverse(pi(e)) = e, s={s}"), err, 1e-12));
        let tc = tilde_curl(&e)?;
        let sum = e.add(&tc)?;
        let gauge = e.gauge_ratio().max(tc.gauge_ratio()).max(sum.gauge_ratio());
        out.push(Check::at_most(
            S,
            format!("gauge div A = 0 preserved, s={s}"),
            gauge,
            1e-12,
        ));
        let phi = random_band_limited(&g, band, &mut rng);
        let with_phi = FhdElement::new(s, phi, e.a.clone())?;
        let a = pi(&tilde_curl(&tilde_curl(&e)?)?)?;
        let b = pi(&tilde_curl(&tilde_curl(&with_phi)?)?)?;
        out.push(Check::at_most(
            S,
            format!("C̃C̃ ignores the gradient part, s={s}"),
            rel_v(&b, &a),
            1e-12,
        ));
    }
    let zero = pi_inverse(&VectorField3::zeros(&g), 0.75)?;
    out.push(Check::at_most(
        S,
        "pi(e) = 0 gives e = 0",
        zero.phi.norm() + zero.a.norm(),
        0.0,
    ));
    let e = pi_inverse(&random_band_limited_vector(&g, 3, &mut rng), 0.6)?;
    let tp = e.two_point()?;
    let pairs: Vec<_> = (0..4)
        .map(|_| {
            let x = [0, 1, 2].map(|_| rng.gen_range(0.0..g.l()));
            let y = [0, 1, 2].map(|_| rng.gen_range(0.0..g.l()));
            (x, y)
        })
        .collect();
    let scale = pairs.iter().map(|&(x, y)| norm3c(tp.value(x, y))).fold(0.0, f64::max);
    out.push(Check::at_most(
        S,
        "two-point field symmetric under x <-> y",
        symmetry_defect(&tp, &pairs) / scale,
        1e-13,
    ));
    Ok(out)
}

fn norm3c(v: [C64; 3]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub fn fourier_lemma(n: usize, seed: u64) -> CliResult<Vec<Check>> {
    const S: &str = "fourier-lemma";
    let g = Grid3::new(n, 2.0 * PI)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_band_limited_vector(&g, 2, &mut rng);
    let s = 0.5;
    let kernel = ConstantsLedger::new(s, KernelNormalization::default())?.kernel();
    let fit = fourier_cstar_check(&u, s, &kernel)?;
    Ok(vec![
        Check::at_least(S, "fitted k_ns > 0 (real fit)", fit.fitted_k_ns, f64::MIN_POSITIVE),
        Check::at_most(S, "relative residual of the stated law", fit.residual, 0.15),
        Check::info(S, "complex fit |k|", fit.complex_k.norm()),
        Check::info(S, "complex fit Re k", fit.complex_k.re),
        Check::info(S, "complex fit residual", fit.complex_residual),
        Check::info(S, "corrected exponent residual", fit.corrected_residual),
    ])
}

/// Box `L = 4π` used by the Maxwell and coercivity suites.
pub const MAXWELL_BOX: f64 = 4.0 * PI;

/// Wavenumber with `k^{1/s} = 0.6`, between the lattice shells 0.5 and 0.707 on `L = 4π`.
pub fn off_shell_k(s: f64) -> f64 {
    0.6f64.powf(s)
}

pub fn coercivity(n: usize, seed: u64, samples: usize) -> CliResult<Vec<Check>> {
    const S: &str = "coercivity";
    let g = Grid3::new(n, MAXWELL_BOX)?;
    let fp = FracParams::new(0.75, 1.0, 1.0)?;
    let perm = eval_permittivity(&PermittivityModel::centered_bump(&g, 1.0), &g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    let mut bound: f64 = 0.0;
    let band = (n as i64 / 4).max(1);
    for _ in 0..samples {
        let u = random_band_limited_vector(&g, band, &mut rng);
        worst = worst.min(coercivity_ratio(&u, &perm, &fp)?);
        let v = random_band_limited_vector(&g, band, &mut rng);
        bound = bound.max(bilinear_B(&u, &v, &perm, &fp)?.bound_ratio);
    }
    let real = random_band_limited_vector(&g, band, &mut rng).map_components(|c| c.map(|z| C64::new(z.re, 0.0)));
    let b = bilinear_B(&real, &real, &perm, &fp)?.value;
    Ok(vec![
        Check::at_least(S, format!("worst (B(u,u) + l|u|²)/|u|²_Hs over {samples}"), worst, 0.1),
        Check::info(S, "empirical boundedness constant of B", bound),
        Check::at_most(S, "Im B(u,u) / |B(u,u)| for real u", b.im.abs() / b.norm(), 1e-12),
    ])
}

pub fn maxwell(n: usize, seed: u64) -> CliResult<Vec<Check>> {
    const S: &str = "maxwell";
    let g = Grid3::new(n, MAXWELL_BOX)?;
    let mut out = Vec::new();
    let vac = eval_permittivity(&PermittivityModel::vacuum(&g), &g)?;
    let bump = eval_permittivity(&PermittivityModel::centered_bump(&g, 1.0), &g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut worst: f64 = 0.0;
    for s in [0.5, 0.75] {
        // κ = 1 is lattice mode 2 on L = 4π
        let fp = FracParams::new(s, 1.0, 1.0)?;
        for (m, p) in [
            ([2, 0, 0], [0.0, 1.0, 2.0]),
            ([0, -2, 0], [1.0, 0.0, -1.0]),
            ([0, 0, 2], [0.3, 1.0, 0.0]),
        ] {
            let u = VectorField3::plane_wave(&g, m, p.map(|c| C64::new(c, 0.0)));
            worst = worst.max(apply_A(&u, &vac, &fp)?.norm() / u.norm());
        }
    }
    out.push(Check::at_most(
        S,
        "vacuum operator annihilates transverse waves",
        worst,
        1e-12,
    ));

    let mut worst: f64 = 0.0;
    for (s, k) in [(0.5, 1.0), (0.75, 1.3), (0.6, 0.8)] {
        let fp = FracParams::new(s, k, 1.0)?;
        let spec = IncidentSpec::new([1.0, 2.0, -0.5], [1.0, 0.0, 0.0])?;
        let inc = incident_one_point(&spec, &fp, &g);
        let pt = spec.transverse();
        let expect = k.powf(1.0 + 1.0 / s) * (pt[0] * pt[0] + pt[1] * pt[1] + pt[2] * pt[2]).sqrt();
        worst = worst.max((inc.field.max_abs() - expect).abs() / expect);
    }
    out.push(Check::at_most(S, "incident amplitude k^(1+1/s)|p⊥|", worst, 1e-12));

    let band = below_nyquist(n);
    let u = random_band_limited_vector(&g, band, &mut rng);
    let pu = p_op(&u, &bump, &FracParams::new(0.75, 1.0, 1.0)?)?;
    out.push(Check::at_most(
        S,
        "P u is a gradient: curl P u = 0",
        curl(&pu).norm() / pu.norm(),
        1e-12,
    ));

    let mut worst: f64 = 0.0;
    for s in [0.5, 0.75] {
        let lhs = frac_laplacian(&curl_curl(&u), s - 1.0)?;
        let rhs = &frac_laplacian(&u, s)? + &frac_laplacian(&grad(&div(&u)), s - 1.0)?;
        worst = worst.max(rel_v(&lhs, &rhs));
    }
    out.push(Check::at_most(
        S,
        "I_(2-2s) curl curl = (-Δ)^s + (-Δ)^(s-1)∇div",
        worst,
        1e-12,
    ));

    let s = 0.75;
    let fp = FracParams::new(s, 1.0, 1.0)?;
    let p = [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0)];
    let e = VectorField3::plane_wave(&g, [2, 0, 0], p);
    let h = recover_H(&e, &fp);
    // (κ^s/k) d×p with d = e1
    let expect = VectorField3::plane_wave(&g, [2, 0, 0], [ZERO, -p[2], p[1]]);
    out.push(Check::at_most(
        S,
        "recover_H of a plane wave",
        rel_v(&h, &expect),
        1e-12,
    ));
    let hr = recover_H(&random_band_limited_vector(&g, band, &mut rng), &fp);
    out.push(Check::at_most(S, "div H = 0", div(&hr).norm() / hr.norm(), 1e-12));

    let real = u.map_components(|c| c.map(|z| C64::new(z.re, 0.0)));
    let b = bilinear_B(&real, &real, &bump, &fp)?.value;
    out.push(Check::at_most(
        S,
        "Im B(u,u) = 0 for real u",
        b.im.abs() / b.norm(),
        1e-12,
    ));

    let problem = off_shell_problem(&g, 0.75, seed)?;
    let man = manufactured_solve(&problem, (n as i64 / 4).max(1))?;
    out.push(Check::at_most(
        S,
        "manufactured solution recovered",
        man.relative_error,
        1e-6,
    ));
    let (_, op) = problem.assemble()?;
    let f = op.apply(&man.u_star);
    let r = (&op.apply(&man.u) - &f).norm() / f.norm();
    out.push(Check::at_most(
        S,
        "residual certificate reproduces",
        (r - man.gmres.final_relative_residual).abs(),
        1e-12,
    ));
    let (u2, _) = solve_with_rhs(&op, &(&f * 2.0), None, &problem.controls)?;
    out.push(Check::at_most(
        S,
        "linearity: F -> 2F gives u -> 2u",
        rel_v(&u2, &(&man.u * 2.0)),
        1e-10,
    ));
    Ok(out)
}

/// Bump `a = 1`, `k = 0.6^s`, tight tolerance.
pub fn off_shell_problem(grid: &Grid3, s: f64, seed: u64) -> CliResult<ScatterProblem> {
    Ok(ScatterProblem {
        grid: grid.clone(),
        fp: FracParams::new(s, off_shell_k(s), 1.0)?,
        permittivity: PermittivityModel::centered_bump(grid, 1.0),
        incident: IncidentSpec::new([0.0, 0.0, 1.0], [1.0, 0.0, 0.0])?,
        controls: SolveControls {
            tol: 1e-11,
            max_iter: 1000,
            restart: 50,
            precond: Preconditioner::ShiftedFracLap,
        },
        seed,
        check_uniqueness: false,
    })
}

/// Operator of an off-shell problem, for callers that only need `A`.
pub fn off_shell_operator(grid: &Grid3, s: f64) -> CliResult<ScatteringOperator> {
    Ok(off_shell_problem(grid, s, 0)?.assemble()?.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for name in Suite::NAMES {
            assert_eq!(name.parse::<Suite>().unwrap().name(), name);
        }
        assert_eq!("nope".parse::<Suite>().unwrap_err().exit_code(), 1);
    }

    #[test]
    fn check_bounds() {
        assert!(Check::at_most("x", "a", 1.0, 1.0).pass());
        assert!(!Check::at_least("x", "a", 0.5, 1.0).pass());
        assert!(Check::info("x", "a", f64::NAN).pass());
        assert!(render_table(&[Check::info("x", "a", 1.0)]).contains("INFO"));
    }

    #[test]
    fn fourier_lemma_caps_n() {
        assert!(run_suite(Suite::FourierLemma, 16, 0).is_err());
    }
}
