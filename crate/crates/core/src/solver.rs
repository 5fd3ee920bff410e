//! Matrix-free restarted GMRES for the scattering operator and the
//! diagnostics built on it.

use num_complex::ComplexFloat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, FracError, Result};
use crate::maxwell::{
    curlcurl_residual, eval_permittivity, incident_one_point, recover_H, rhs_F, FracParams, IncidentSpec, Permittivity,
    PermittivityModel, ScatteringOperator,
};
use crate::spectral::{
    random_band_limited_vector, weighted_norms, Grid3, VectorField3, WeightedNormParams, WeightedNorms, C64, ZERO,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    /// Right preconditioning by `((-Δ)^s + k^2)^{-1}`.
    #[default]
    ShiftedFracLap,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveControls {
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
    pub precond: Preconditioner,
}

impl Default for SolveControls {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 500,
            restart: 50,
            precond: Preconditioner::ShiftedFracLap,
        }
    }
}

impl SolveControls {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(invalid(
                "tol",
                format!("tolerance must lie in (0, 1), got {}", self.tol),
            ));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter", "need at least one iteration"));
        }
        if self.restart == 0 {
            return Err(invalid("restart", "restart length must be positive"));
        }
        Ok(())
    }
}

/// Result of one GMRES run on flat vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct GmresOutcome {
    pub x: Vec<C64>,
    pub iterations: usize,
    /// Relative residual before the first step and after every step.
    pub history: Vec<f64>,
    /// `‖b - A x‖ / scale` recomputed from the returned iterate.
    pub final_relative_residual: f64,
    /// `‖b‖`, or `‖b - A x0‖` when `b = 0`.
    pub scale: f64,
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn residual(apply: &impl Fn(&[C64]) -> Vec<C64>, b: &[C64], x: &[C64]) -> Vec<C64> {
    let ax = apply(x);
    b.iter().zip(ax).map(|(bi, ai)| bi - ai).collect()
}

/// A linear map on flat coefficient vectors.
pub type LinearMap<'a> = dyn Fn(&[C64]) -> Vec<C64> + 'a;

/// Restarted GMRES with optional right preconditioner `M`: solves
/// `A M y = b - A x0` and returns `x = x0 + M y`. The tolerance is relative
/// to `‖b‖`, or to the initial residual when `b = 0`.
pub fn gmres(
    apply: impl Fn(&[C64]) -> Vec<C64>,
    precond: Option<&LinearMap<'_>>,
    b: &[C64],
    x0: Option<Vec<C64>>,
    controls: &SolveControls,
) -> Result<GmresOutcome> {
    controls.validate()?;
    let dim = b.len();
    let mut x = x0.unwrap_or_else(|| vec![ZERO; dim]);
    if x.len() != dim {
        return Err(FracError::GridMismatch(format!(
            "initial guess has {} entries, expected {dim}",
            x.len()
        )));
    }
    let m_apply = |v: &[C64]| match precond {
        Some(m) => m(v),
        None => v.to_vec(),
    };
    let mut r = residual(&apply, b, &x);
    let bnorm = norm(b);
    let scale = if bnorm > 0.0 { bnorm } else { norm(&r) };
    if scale == 0.0 {
        return Ok(GmresOutcome {
            x,
            iterations: 0,
            history: vec![0.0],
            final_relative_residual: 0.0,
            scale,
        });
    }
    let target = controls.tol * scale;
    let mut history = vec![norm(&r) / scale];
    let mut iterations = 0;
    let m = controls.restart;

    loop {
        let beta = norm(&r);
        if beta <= target || iterations >= controls.max_iter {
            break;
        }
        let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|c| c / beta).collect());
        let mut h = vec![vec![ZERO; m]; m + 1];
        let mut cs = vec![0.0f64; m];
        let mut sn = vec![ZERO; m];
        let mut g = vec![ZERO; m + 1];
        g[0] = C64::new(beta, 0.0);
        let mut cols = 0;
        for j in 0..m {
            let z = m_apply(&basis[j]);
            let mut w = apply(&z);
            iterations += 1;
            if w.iter().any(|c| !c.is_finite()) {
                return Err(FracError::NanInIterate { iteration: iterations });
            }
            // modified Gram-Schmidt with one reorthogonalization pass
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let hij = inner(v, &w);
                    h[i][j] += hij;
                    axpy(-hij, v, &mut w);
                }
            }
            let hn = norm(&w);
            h[j + 1][j] = C64::new(hn, 0.0);
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i].conj() * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let (c, s) = givens(h[j][j], h[j + 1][j]);
            cs[j] = c;
            sn[j] = s;
            h[j][j] = c * h[j][j] + s * h[j + 1][j];
            h[j + 1][j] = ZERO;
            g[j + 1] = -s.conj() * g[j];
            g[j] *= c;
            cols = j + 1;
            let est = g[j + 1].abs();
            history.push(est / scale);
            if est <= target || iterations >= controls.max_iter || hn <= 1e-14 * beta {
                break;
            }
            basis.push(w.iter().map(|c| c / hn).collect());
        }
        let mut y = vec![ZERO; cols];
        for i in (0..cols).rev() {
            let mut acc = g[i];
            for k in i + 1..cols {
                acc -= h[i][k] * y[k];
            }
            y[i] = acc / h[i][i];
        }
        let mut update = vec![ZERO; dim];
        for (yi, v) in y.iter().zip(&basis) {
            axpy(*yi, v, &mut update);
        }
        let dx = m_apply(&update);
        axpy(C64::new(1.0, 0.0), &dx, &mut x);
        if x.iter().any(|c| !c.is_finite()) {
            return Err(FracError::NanInIterate { iteration: iterations });
        }
        r = residual(&apply, b, &x);
    }
    let final_relative_residual = norm(&r) / scale;
    if final_relative_residual > controls.tol {
        return Err(FracError::NotConverged {
            iterations,
            last: final_relative_residual,
            history,
        });
    }
    Ok(GmresOutcome {
        x,
        iterations,
        history,
        final_relative_residual,
        scale,
    })
}

/// Rotation `(c, s)` with `c` real that zeroes `b` in `(a, b)`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let na = a.abs();
    let nb = b.abs();
    if nb == 0.0 {
        return (1.0, ZERO);
    }
    if na == 0.0 {
        return (0.0, b.conj() / nb);
    }
    let r = na.hypot(nb);
    let phase = a / na;
    (na / r, phase * b.conj() / r)
}

/// `((-Δ)^s + k^2)^{-1} r`.
pub fn apply_preconditioner(op: &ScatteringOperator, r: &VectorField3) -> Result<VectorField3> {
    r.grid().check_same(op.grid())?;
    Ok(op.precondition(r))
}

/// Solves `A u = f` for the assembled operator.
pub fn solve_with_rhs(
    op: &ScatteringOperator,
    f: &VectorField3,
    x0: Option<&VectorField3>,
    controls: &SolveControls,
) -> Result<(VectorField3, GmresOutcome)> {
    f.grid().check_same(op.grid())?;
    f.check_finite()?;
    let grid = op.grid().clone();
    let apply = |v: &[C64]| {
        let u = VectorField3::from_flat(&grid, v).expect("flat vector sized by grid");
        op.apply(&u).to_flat()
    };
    let pre = |v: &[C64]| {
        let u = VectorField3::from_flat(&grid, v).expect("flat vector sized by grid");
        op.precondition(&u).to_flat()
    };
    let precond: Option<&LinearMap<'_>> = match controls.precond {
        Preconditioner::None => None,
        Preconditioner::ShiftedFracLap => Some(&pre),
    };
    let out = gmres(apply, precond, &f.to_flat(), x0.map(|x| x.to_flat()), controls)?;
    let u = VectorField3::from_flat(&grid, &out.x)?;
    Ok((u, out))
}

/// Grid proxy `‖((-Δ)^s + 1)^{-1/2} f‖` for the dual norm of `f`.
pub fn dual_norm_proxy(f: &VectorField3, s: f64) -> f64 {
    let grid = f.grid().clone();
    let mut hats = f.spectra();
    for hat in hats.iter_mut() {
        for (idx, h) in hat.iter_mut().enumerate() {
            let xi = grid.wavevector(idx);
            let r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
            *h /= (r2.powf(s) + 1.0).sqrt();
        }
    }
    VectorField3::from_spectra(&grid, hats)
        .expect("spectra sized by grid")
        .norm()
}

/// A fully specified scattering problem.
#[derive(Clone, Debug)]
pub struct ScatterProblem {
    pub grid: Grid3,
    pub fp: FracParams,
    pub permittivity: PermittivityModel,
    pub incident: IncidentSpec,
    pub controls: SolveControls,
    /// Seeds the random starts of the uniqueness check.
    pub seed: u64,
    pub check_uniqueness: bool,
}

impl ScatterProblem {
    pub fn with_params(&self, fp: FracParams) -> Self {
        Self { fp, ..self.clone() }
    }

    pub fn assemble(&self) -> Result<(Permittivity, ScatteringOperator)> {
        self.controls.validate()?;
        let perm = eval_permittivity(&self.permittivity, &self.grid)?;
        let op = ScatteringOperator::new(&perm, &self.fp);
        Ok((perm, op))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_relative_residual: f64,
    pub residual_history: Vec<f64>,
    /// `‖∇·(ε Ẽ_s + (ε-1)Ẽ_i)‖`.
    pub divergence_constraint_residual: f64,
    /// Curl-curl form residual.
    pub curlcurl_form_residual: f64,
    /// `‖A Ẽ_s - F‖`.
    pub esei_residual: f64,
    pub solution_norms: WeightedNorms,
    pub solution_l2: f64,
    pub total_field_l2: f64,
    pub rhs_l2: f64,
    pub rhs_dual_proxy: f64,
    pub incident_amplitude: f64,
    pub homogeneous_uniqueness_flag: Option<bool>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct ScatterSolution {
    pub e_s: VectorField3,
    pub e_i: VectorField3,
    pub h: VectorField3,
    pub report: SolveReport,
}

pub fn solve_scattering(problem: &ScatterProblem) -> Result<ScatterSolution> {
    let (perm, op) = problem.assemble()?;
    let fp = &problem.fp;
    let inc = incident_one_point(&problem.incident, fp, &problem.grid);
    let f = rhs_F(&inc.field, &perm, fp)?;
    let (e_s, out) = solve_with_rhs(&op, &f, None, &problem.controls)?;
    let cc = curlcurl_residual(&e_s, &inc.field, &perm, fp)?;
    let total = &inc.field + &e_s;
    let h = recover_H(&total, fp);
    let homogeneous_uniqueness_flag = if problem.check_uniqueness {
        Some(homogeneous_uniqueness_check(problem)?.flag)
    } else {
        None
    };
    let report = SolveReport {
        iterations: out.iterations,
        final_relative_residual: out.final_relative_residual,
        residual_history: out.history,
        divergence_constraint_residual: cc.divergence_residual,
        curlcurl_form_residual: cc.curlcurl_residual,
        esei_residual: cc.esei_residual,
        solution_norms: weighted_norms(
            &e_s,
            WeightedNormParams {
                delta: fp.delta(),
                s: fp.s(),
            },
        )?,
        solution_l2: e_s.norm(),
        total_field_l2: total.norm(),
        rhs_l2: f.norm(),
        rhs_dual_proxy: dual_norm_proxy(&f, fp.s()),
        incident_amplitude: inc.amplitude,
        homogeneous_uniqueness_flag,
        warnings: inc.warnings,
    };
    Ok(ScatterSolution {
        e_s,
        e_i: inc.field,
        h,
        report,
    })
}

/// The same pipeline with every symbol evaluated at `s = 1`.
pub fn classical_reference_solve(problem: &ScatterProblem) -> Result<ScatterSolution> {
    let fp = FracParams::classical(problem.fp.k(), problem.fp.delta())?;
    solve_scattering(&problem.with_params(fp))
}

#[derive(Clone, Debug, PartialEq)]
pub struct UniquenessCheck {
    pub flag: bool,
    /// Largest `‖u‖_{H^s_δ} / ‖start‖_{H^s_δ}` over the starts.
    pub max_ratio: f64,
    pub ratios: Vec<f64>,
}

/// Relative threshold on the returned iterates.
pub const UNIQUENESS_TOL: f64 = 1e-8;

/// Runs GMRES on `A u = 0` from five seeded random starts. A start that does
/// not converge counts as a failure with ratio infinity.
pub fn homogeneous_uniqueness_check(problem: &ScatterProblem) -> Result<UniquenessCheck> {
    let (_, op) = problem.assemble()?;
    let controls = SolveControls {
        tol: problem.controls.tol.min(1e-12),
        max_iter: problem.controls.max_iter.max(1000),
        ..problem.controls
    };
    let params = WeightedNormParams {
        delta: problem.fp.delta(),
        s: problem.fp.s(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
    let zero = VectorField3::zeros(&problem.grid);
    let band = problem.grid.n() as i64 / 4;
    let mut ratios = Vec::with_capacity(5);
    for _ in 0..5 {
        let start = random_band_limited_vector(&problem.grid, band, &mut rng);
        let start_norm = weighted_norms(&start, params)?.hs_delta;
        let ratio = match solve_with_rhs(&op, &zero, Some(&start), &controls) {
            Ok((u, _)) => weighted_norms(&u, params)?.hs_delta / start_norm,
            Err(FracError::NotConverged { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        ratios.push(ratio);
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(UniquenessCheck {
        flag: max_ratio <= UNIQUENESS_TOL,
        max_ratio,
        ratios,
    })
}

#[derive(Clone, Debug)]
pub struct ManufacturedOutcome {
    pub u_star: VectorField3,
    pub u: VectorField3,
    pub relative_error: f64,
    pub gmres: GmresOutcome,
}

/// Solves `A u = A u*` for a seeded random band-limited `u*`.
pub fn manufactured_solve(problem: &ScatterProblem, band: i64) -> Result<ManufacturedOutcome> {
    let (_, op) = problem.assemble()?;
    let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
    let u_star = random_band_limited_vector(&problem.grid, band, &mut rng);
    let f = op.apply(&u_star);
    let (u, gmres) = solve_with_rhs(&op, &f, None, &problem.controls)?;
    let relative_error = (&u - &u_star).norm() / u_star.norm();
    Ok(ManufacturedOutcome {
        u_star,
        u,
        relative_error,
        gmres,
    })
}

/// First Born approximation `((-Δ)^s - k^2)^{-1} f`. Fails when a lattice
/// frequency sits on the vacuum shell `|ξ|^{2s} = k^2`.
pub fn born_approximation(op: &ScatteringOperator, f: &VectorField3) -> Result<VectorField3> {
    f.grid().check_same(op.grid())?;
    let grid = op.grid();
    let k2 = op.params().k().powi(2);
    let s = op.params().s();
    let gap = (0..grid.len())
        .map(|idx| {
            let xi = grid.wavevector(idx);
            ((xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).powf(s) - k2).abs()
        })
        .fold(f64::INFINITY, f64::min);
    if gap <= 1e-10 * k2 {
        return Err(invalid(
            "k",
            "a lattice frequency lies on the vacuum shell |ξ|^{2s} = k^2",
        ));
    }
    Ok(op.vacuum_inverse(f))
}
