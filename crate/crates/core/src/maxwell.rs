//! Reduced time-harmonic fractional Maxwell problem.
//!
//! The scattered field solves
//! `(-Δ)^s u + P u - k^2 ε u = k^2(ε-1)Ẽ_i - P Ẽ_i` with
//! `P u = -(-Δ)^{s-1}∇(∇log ε · u)`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::helmholtz::pi_cstar_unchecked;
use crate::spectral::{self, frac_laplacian, weight, Grid3, ScalarField, VectorField3, C64, I, ZERO};

/// Order, wavenumber and weight exponent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FracParams {
    s: f64,
    k: f64,
    delta: f64,
}

impl FracParams {
    /// Requires `1/2 <= s < 1`, `k > 0`, `δ > 0`.
    pub fn new(s: f64, k: f64, delta: f64) -> Result<Self> {
        if !(0.5..1.0).contains(&s) {
            return Err(invalid("s", format!("order must lie in [0.5, 1), got {s}")));
        }
        Self::checked(s, k, delta)
    }

    /// The classical problem, `s = 1`.
    pub fn classical(k: f64, delta: f64) -> Result<Self> {
        Self::checked(1.0, k, delta)
    }

    fn checked(s: f64, k: f64, delta: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(invalid("k", format!("wavenumber must be positive, got {k}")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(invalid(
                "delta",
                format!("weight exponent must be positive, got {delta}"),
            ));
        }
        Ok(Self { s, k, delta })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn is_classical(&self) -> bool {
        self.s == 1.0
    }

    /// Vacuum wavenumber `κ = k^{1/s}`.
    pub fn kappa(&self) -> f64 {
        self.k.powf(1.0 / self.s)
    }
}

/// Smooth cutoff: 1 on `[0, 1/2]`, 0 on `[1, ∞)`. Returns `(χ, χ')`.
fn cutoff(t: f64) -> (f64, f64) {
    let f = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    let df = |x: f64| if x > 0.0 { (-1.0 / x).exp() / (x * x) } else { 0.0 };
    let a = f(1.0 - t);
    let b = f(t - 0.5);
    let da = -df(1.0 - t);
    let db = df(t - 0.5);
    let sum = a + b;
    (a / sum, (da * b - a * db) / (sum * sum))
}

/// `ε_r = 1 + a·exp(-|x-x0|^2/w^2)·χ(|x-x0|/R)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PermittivityModel {
    pub amplitude: f64,
    pub center: [f64; 3],
    pub width: f64,
    pub cutoff_radius: f64,
}

impl PermittivityModel {
    pub fn vacuum(grid: &Grid3) -> Self {
        Self::centered_bump(grid, 0.0)
    }

    /// Bump at the box center with width `L/10` and cutoff radius `L`.
    pub fn centered_bump(grid: &Grid3, amplitude: f64) -> Self {
        Self {
            amplitude,
            center: grid.center(),
            width: 0.1 * grid.l(),
            cutoff_radius: grid.l(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > -1.0 && self.amplitude.is_finite()) {
            return Err(invalid(
                "amplitude",
                format!("need a > -1 for a positive permittivity, got {}", self.amplitude),
            ));
        }
        if !(self.width > 0.0 && self.cutoff_radius > 0.0) {
            return Err(invalid("width", "bump width and cutoff radius must be positive"));
        }
        Ok(())
    }

    /// Lower bound of `ε_r`.
    pub fn eps_min(&self) -> f64 {
        1.0 + self.amplitude.min(0.0)
    }

    /// `(ε_r, ∇ε_r)` at `x`.
    pub fn eval_point(&self, x: [f64; 3]) -> (f64, [f64; 3]) {
        let d = [x[0] - self.center[0], x[1] - self.center[1], x[2] - self.center[2]];
        let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let rho = r / self.cutoff_radius;
        if self.amplitude == 0.0 || rho >= 1.0 {
            return (1.0, [0.0; 3]);
        }
        let w2 = self.width * self.width;
        let g = (-r * r / w2).exp();
        let (chi, dchi) = cutoff(rho);
        let eps = 1.0 + self.amplitude * g * chi;
        let radial = if r > 0.0 { dchi / (self.cutoff_radius * r) } else { 0.0 };
        let grad = d.map(|c| self.amplitude * g * (-2.0 * c / w2 * chi + radial * c));
        (eps, grad)
    }
}

/// Sampled permittivity with its logarithmic gradient.
#[derive(Clone, Debug)]
pub struct Permittivity {
    pub model: PermittivityModel,
    pub eps: ScalarField,
    pub grad_log_eps: VectorField3,
}

impl Permittivity {
    pub fn grid(&self) -> &Grid3 {
        self.eps.grid()
    }

    pub fn max_eps(&self) -> f64 {
        self.eps.values().iter().map(|c| c.re).fold(f64::MIN, f64::max)
    }

    pub fn is_vacuum(&self) -> bool {
        self.model.amplitude == 0.0
    }
}

pub fn eval_permittivity(m: &PermittivityModel, grid: &Grid3) -> Result<Permittivity> {
    m.validate()?;
    let samples: Vec<(f64, [f64; 3])> = (0..grid.len())
        .into_par_iter()
        .map(|i| m.eval_point(grid.point(i)))
        .collect();
    let eps = ScalarField::new(grid, samples.iter().map(|(e, _)| C64::new(*e, 0.0)).collect())?;
    let comp = |c: usize| ScalarField::new(grid, samples.iter().map(|(e, g)| C64::new(g[c] / e, 0.0)).collect());
    let grad_log_eps = VectorField3::from_components(comp(0)?, comp(1)?, comp(2)?)?;
    Ok(Permittivity {
        model: *m,
        eps,
        grad_log_eps,
    })
}

/// Polarization and propagation direction of the incoming wave.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IncidentSpec {
    pub p: [f64; 3],
    pub d: [f64; 3],
}

impl IncidentSpec {
    pub fn new(p: [f64; 3], d: [f64; 3]) -> Result<Self> {
        let nd = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if (nd - 1.0).abs() > 1e-12 {
            return Err(invalid("d", format!("direction must be a unit vector, |d| = {nd}")));
        }
        if p.iter().all(|&c| c == 0.0) {
            return Err(invalid("p", "polarization must be nonzero"));
        }
        Ok(Self { p, d })
    }

    /// `p - (p·d)d`.
    pub fn transverse(&self) -> [f64; 3] {
        let pd = self.p[0] * self.d[0] + self.p[1] * self.d[1] + self.p[2] * self.d[2];
        [0, 1, 2].map(|c| self.p[c] - pd * self.d[c])
    }
}

/// Box length with `k^{1/s}` on the lattice along a coordinate axis:
/// `L = 2π m / κ` with `m = max(1, round(κ L_hint / 2π))`.
pub fn snap_box_length(k: f64, s: f64, l_hint: f64) -> (f64, i64) {
    let kappa = k.powf(1.0 / s);
    let m = ((kappa * l_hint / (2.0 * PI)).round() as i64).max(1);
    (2.0 * PI * m as f64 / kappa, m)
}

/// Projected incident field with diagnostics.
#[derive(Clone, Debug)]
pub struct IncidentField {
    pub field: VectorField3,
    /// Peak amplitude `k^{1+1/s}|p - (p·d)d|`.
    pub amplitude: f64,
    pub on_lattice: bool,
    pub warnings: Vec<String>,
}

/// `Ẽ_i(x) = κ^{s+1}(p - (p·d)d) e^{iκ d·x}` with `κ = k^{1/s}`.
pub fn incident_one_point(spec: &IncidentSpec, fp: &FracParams, grid: &Grid3) -> IncidentField {
    let kappa = fp.kappa();
    let pt = spec.transverse();
    let ptn = (pt[0] * pt[0] + pt[1] * pt[1] + pt[2] * pt[2]).sqrt();
    let mut warnings = Vec::new();
    let scaled = kappa * grid.l() / (2.0 * PI);
    let on_lattice = spec.d.iter().all(|&dc| {
        let m = dc * scaled;
        (m - m.round()).abs() < 1e-9
    });
    if !on_lattice {
        warnings.push(format!(
            "incident wave vector κd = {:?} misses the lattice; periodic leakage expected",
            spec.d.map(|c| c * kappa)
        ));
    }
    let scale = kappa.powf(fp.s() + 1.0);
    let amp = pt.map(|c| C64::new(scale * c, 0.0));
    if ptn < 1e-14 * spec.p.iter().map(|c| c.abs()).fold(0.0, f64::max) {
        warnings.push("polarization parallel to direction; incident field vanishes".into());
        return IncidentField {
            field: VectorField3::zeros(grid),
            amplitude: 0.0,
            on_lattice,
            warnings,
        };
    }
    let d = spec.d;
    let field = VectorField3::from_fn(grid, |x| {
        let ph = C64::from_polar(1.0, kappa * (d[0] * x[0] + d[1] * x[1] + d[2] * x[2]));
        amp.map(|a| a * ph)
    });
    IncidentField {
        field,
        amplitude: scale * ptn,
        on_lattice,
        warnings,
    }
}

/// Precomputed assembly of `A u = (-Δ)^s u + P u - k^2 ε u`.
#[derive(Clone, Debug)]
pub struct ScatteringOperator {
    grid: Grid3,
    fp: FracParams,
    eps: Vec<f64>,
    glog: [Vec<f64>; 3],
    lap: Vec<f64>,
    pfac: Vec<f64>,
    vacuum: bool,
}

impl ScatteringOperator {
    pub fn new(perm: &Permittivity, fp: &FracParams) -> Self {
        let grid = perm.grid().clone();
        let s = fp.s();
        let (lap, pfac): (Vec<f64>, Vec<f64>) = (0..grid.len())
            .map(|idx| {
                if idx == 0 {
                    return (0.0, 0.0);
                }
                let xi = grid.wavevector(idx);
                let r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
                (r2.powf(s), r2.powf(s - 1.0))
            })
            .unzip();
        Self {
            eps: perm.eps.values().iter().map(|c| c.re).collect(),
            glog: [0, 1, 2].map(|c| perm.grad_log_eps.component(c).values().iter().map(|v| v.re).collect()),
            grid,
            fp: *fp,
            lap,
            pfac,
            vacuum: perm.is_vacuum(),
        }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn params(&self) -> &FracParams {
        &self.fp
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    /// `∇log ε · u` pointwise.
    fn glog_dot(&self, u: &VectorField3) -> Vec<C64> {
        (0..self.grid.len())
            .map(|i| {
                self.glog[0][i] * u.component(0).values()[i]
                    + self.glog[1][i] * u.component(1).values()[i]
                    + self.glog[2][i] * u.component(2).values()[i]
            })
            .collect()
    }

    /// Spectrum of `P u`, or `None` in vacuum.
    fn p_hat(&self, u: &VectorField3) -> Option<[Vec<C64>; 3]> {
        if self.vacuum {
            return None;
        }
        let mut q = self.glog_dot(u);
        self.grid.fft_forward(&mut q);
        Some([0, 1, 2].map(|c| {
            (0..self.grid.len())
                .map(|idx| {
                    if idx == 0 {
                        ZERO
                    } else {
                        -self.pfac[idx] * I * self.grid.odd_wavevector(idx)[c] * q[idx]
                    }
                })
                .collect()
        }))
    }

    pub fn p_op(&self, u: &VectorField3) -> VectorField3 {
        match self.p_hat(u) {
            Some(h) => VectorField3::from_spectra(&self.grid, h).expect("spectra sized by grid"),
            None => VectorField3::zeros(&self.grid),
        }
    }

    pub fn apply(&self, u: &VectorField3) -> VectorField3 {
        let k2 = self.fp.k() * self.fp.k();
        let mut hats = u.spectra();
        let p = self.p_hat(u);
        for (c, hat) in hats.iter_mut().enumerate() {
            for (idx, h) in hat.iter_mut().enumerate() {
                *h *= self.lap[idx];
                if let Some(p) = &p {
                    *h += p[c][idx];
                }
            }
        }
        let lin = VectorField3::from_spectra(&self.grid, hats).expect("spectra sized by grid");
        let comps = [0, 1, 2].map(|c| {
            let vals = lin
                .component(c)
                .values()
                .iter()
                .zip(u.component(c).values())
                .zip(&self.eps)
                .map(|((l, uc), e)| l - k2 * e * uc)
                .collect();
            ScalarField::new(&self.grid, vals).expect("sized by grid")
        });
        let [a, b, c] = comps;
        VectorField3::from_components(a, b, c).expect("shared grid")
    }

    /// `((-Δ)^s + k^2)^{-1} r`.
    pub fn precondition(&self, r: &VectorField3) -> VectorField3 {
        let k2 = self.fp.k() * self.fp.k();
        let mut hats = r.spectra();
        for hat in hats.iter_mut() {
            for (idx, h) in hat.iter_mut().enumerate() {
                *h /= self.lap[idx] + k2;
            }
        }
        VectorField3::from_spectra(&self.grid, hats).expect("spectra sized by grid")
    }

    /// `((-Δ)^s - k^2)^{-1} r`, undefined where `|ξ|^{2s} = k^2`.
    pub fn vacuum_inverse(&self, r: &VectorField3) -> VectorField3 {
        let k2 = self.fp.k() * self.fp.k();
        let mut hats = r.spectra();
        for hat in hats.iter_mut() {
            for (idx, h) in hat.iter_mut().enumerate() {
                *h /= self.lap[idx] - k2;
            }
        }
        VectorField3::from_spectra(&self.grid, hats).expect("spectra sized by grid")
    }
}

pub fn p_op(u: &VectorField3, perm: &Permittivity, fp: &FracParams) -> Result<VectorField3> {
    u.grid().check_same(perm.grid())?;
    Ok(ScatteringOperator::new(perm, fp).p_op(u))
}

#[allow(non_snake_case)]
pub fn apply_A(u: &VectorField3, perm: &Permittivity, fp: &FracParams) -> Result<VectorField3> {
    u.grid().check_same(perm.grid())?;
    Ok(ScatteringOperator::new(perm, fp).apply(u))
}

/// `k^2(ε-1)Ẽ_i - P Ẽ_i`.
#[allow(non_snake_case)]
pub fn rhs_F(incident: &VectorField3, perm: &Permittivity, fp: &FracParams) -> Result<VectorField3> {
    incident.grid().check_same(perm.grid())?;
    let k2 = fp.k() * fp.k();
    let contrast = perm.eps.map(|e| (e - 1.0) * k2);
    let first = incident.scale_by(&contrast)?;
    Ok(&first - &p_op(incident, perm, fp)?)
}

/// Residual norms of a candidate scattered field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurlCurlReport {
    /// `‖I_{2-2s}∇×∇×u - k^2 ε u - k^2(ε-1)Ẽ_i‖`.
    pub curlcurl_residual: f64,
    /// `‖∇·(ε u + (ε-1)Ẽ_i)‖`.
    pub divergence_residual: f64,
    /// `‖A u - F‖`.
    pub esei_residual: f64,
}

pub fn curlcurl_residual(
    u: &VectorField3,
    incident: &VectorField3,
    perm: &Permittivity,
    fp: &FracParams,
) -> Result<CurlCurlReport> {
    u.grid().check_same(perm.grid())?;
    incident.grid().check_same(perm.grid())?;
    let k2 = fp.k() * fp.k();
    let cc = frac_laplacian(&spectral::curl_curl(u), fp.s() - 1.0)?;
    let eps_u = u.scale_by(&perm.eps)?;
    let contrast = perm.eps.map(|e| e - 1.0);
    let src = incident.scale_by(&contrast)?;
    let r1 = &(&cc - &(&eps_u * k2)) - &(&src * k2);
    let divergence = spectral::div(&(&eps_u + &src));
    let op = ScatteringOperator::new(perm, fp);
    let f = rhs_F(incident, perm, fp)?;
    Ok(CurlCurlReport {
        curlcurl_residual: r1.norm(),
        divergence_residual: divergence.norm(),
        esei_residual: (&op.apply(u) - &f).norm(),
    })
}

/// `H̃ = (ik)^{-1} I_{1-s}∇×Ẽ`; the plain curl when `s = 1`.
#[allow(non_snake_case)]
pub fn recover_H(e_total: &VectorField3, fp: &FracParams) -> VectorField3 {
    let c = pi_cstar_unchecked(e_total, fp.s());
    &c * (1.0 / (I * fp.k()))
}

/// `B(u, v)` with diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BilinearValue {
    pub value: C64,
    /// `|B(u,v)| / (‖u‖_{H^s_δ} ‖v‖_{H^s_δ})`.
    pub bound_ratio: f64,
}

fn weighted_inner(a: &VectorField3, b: &VectorField3, w: &[f64]) -> C64 {
    let h3 = a.grid().cell_volume();
    (0..3)
        .map(|c| {
            a.component(c)
                .values()
                .iter()
                .zip(b.component(c).values())
                .zip(w)
                .map(|((x, y), wi)| x * y.conj() * *wi)
                .sum::<C64>()
        })
        .sum::<C64>()
        * h3
}

/// `⟨(-Δ)^s u, v⟩_δ + ⟨P u, v⟩_δ - k^2⟨ε u, v⟩_δ`.
#[allow(non_snake_case)]
pub fn bilinear_B(u: &VectorField3, v: &VectorField3, perm: &Permittivity, fp: &FracParams) -> Result<BilinearValue> {
    u.grid().check_same(v.grid())?;
    u.grid().check_same(perm.grid())?;
    let w = weight(u.grid(), fp.delta());
    let op = ScatteringOperator::new(perm, fp);
    let value = weighted_inner(&op.apply(u), v, &w);
    let params = spectral::WeightedNormParams {
        delta: fp.delta(),
        s: fp.s(),
    };
    let nu = spectral::weighted_norms(u, params)?.hs_delta;
    let nv = spectral::weighted_norms(v, params)?.hs_delta;
    let denom = nu * nv;
    Ok(BilinearValue {
        value,
        bound_ratio: if denom > 0.0 { value.norm() / denom } else { 0.0 },
    })
}

/// Shift `l = 1 + C_ε + k^2‖ε‖_∞` with `C_ε = 1`.
pub fn coercivity_shift(perm: &Permittivity, fp: &FracParams) -> f64 {
    1.0 + 1.0 + fp.k() * fp.k() * perm.max_eps()
}

/// `Re(B(u,u) + l‖u‖^2_{L^2_δ}) / ‖u‖^2_{H^s_δ}`.
pub fn coercivity_ratio(u: &VectorField3, perm: &Permittivity, fp: &FracParams) -> Result<f64> {
    let b = bilinear_B(u, u, perm, fp)?;
    let params = spectral::WeightedNormParams {
        delta: fp.delta(),
        s: fp.s(),
    };
    let norms = spectral::weighted_norms(u, params)?;
    let l = coercivity_shift(perm, fp);
    Ok((b.value.re + l * norms.l2_delta.powi(2)) / norms.hs_delta.powi(2))
}
