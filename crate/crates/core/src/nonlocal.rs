//! Direct quadrature of the two-point operators built on the kernel
//! `α(x,y) = (C^{1/2}/√2)(y-x)/|y-x|^{3/2+s+1}`.
//!
//! Sign convention: `D*u(x,y) = (u(y)-u(x))α` and `D ν(x) = -∫(ν+ν')·α dy`,
//! while `C*w(x,y) = α×(w(y)-w(x))` and `C μ(x) = ∫α×(μ+μ') dy`. With these,
//! `D D* = (-Δ)^s`, `D C* = 0`, `Π D* = I_{1-s}∇` and `Π C* = I_{1-s}∇×`
//! all hold with the same positive constant `c`.
//!
//! Integrals are centered at `x` and use a radial Gauss rule times an
//! antipodally symmetric spherical rule. The inner ball maps `r = R t^{1/(a+1)}`
//! to absorb an `r^a` singularity, an optional Gauss shell covers the
//! mid-range, and an optional tail maps `r = R τ^{-1/b}` for integrands decaying
//! like `r^{-1-b}` (measure included).

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::error::{invalid, FracError, Result};
use crate::spectral::{Grid3, ScalarField, TrigInterpolant, VectorField3, C64, ZERO};

/// Spatial dimension.
pub const DIM: f64 = 3.0;

/// Constant in the fractional-Laplacian formula exactly as printed in the source.
pub fn c_ns_paper(s: f64) -> f64 {
    2f64.powf(s) * gamma((DIM + s) / 2.0) / (PI.powf(DIM / 2.0) * gamma(-s / 2.0).abs())
}

/// Constant of the singular-integral form of `(-Δ)^s` in three dimensions.
pub fn c_ns_singular(s: f64) -> f64 {
    4f64.powf(s) * gamma(DIM / 2.0 + s) / (PI.powf(DIM / 2.0) * gamma(-s).abs())
}

/// Riesz normalization `γ(α) = π^{3/2} 2^α Γ(α/2) / Γ((3-α)/2)`, so that
/// `I_α f = γ(α)^{-1} ∫ f(y)|x-y|^{α-3} dy`.
pub fn riesz_gamma(alpha: f64) -> f64 {
    PI.powf(DIM / 2.0) * 2f64.powf(alpha) * gamma(alpha / 2.0) / gamma((DIM - alpha) / 2.0)
}

/// Which constant scales the kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum KernelNormalization {
    /// `c_ns_paper`, the printed constant.
    PaperVerbatim,
    /// `c_ns_singular`, which makes `D D* = (-Δ)^s` hold with unit coefficient.
    #[default]
    SingularIntegral,
}

/// Normalization constants for a given order `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantsLedger {
    pub s: f64,
    pub normalization: KernelNormalization,
    /// Printed fractional-Laplacian constant.
    pub c_ns: f64,
    /// Constant actually used in the kernel.
    pub c_kernel: f64,
    /// Riesz constant for `I_{1-s}`: `γ(1-s)`.
    pub c_riesz: f64,
    /// Projection constant `(3+s-1)√2 / (c_kernel^{1/2} c_riesz)`.
    pub c_pi: f64,
    /// Fourier-curl constant, filled in by a fit.
    pub k_ns: Option<f64>,
}

impl ConstantsLedger {
    pub fn new(s: f64, normalization: KernelNormalization) -> Result<Self> {
        check_order(s)?;
        let c_ns = c_ns_paper(s);
        let c_kernel = match normalization {
            KernelNormalization::PaperVerbatim => c_ns,
            KernelNormalization::SingularIntegral => c_ns_singular(s),
        };
        let c_riesz = riesz_gamma(1.0 - s);
        let c_pi = (DIM + s - 1.0) * 2f64.sqrt() / (c_kernel.sqrt() * c_riesz);
        Ok(Self {
            s,
            normalization,
            c_ns,
            c_kernel,
            c_riesz,
            c_pi,
            k_ns: None,
        })
    }

    pub fn kernel(&self) -> AlphaKernel {
        AlphaKernel {
            s: self.s,
            amp: (self.c_kernel / 2.0).sqrt(),
        }
    }
}

fn check_order(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(invalid("s", format!("fractional order must lie in (0, 1), got {s}")))
    }
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm3(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn cross_rc(a: [f64; 3], b: [C64; 3]) -> [C64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot_rc(a: [f64; 3], b: [C64; 3]) -> C64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn add_c3(a: [C64; 3], b: [C64; 3]) -> [C64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sub_c3(a: [C64; 3], b: [C64; 3]) -> [C64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm_c3(a: [C64; 3]) -> f64 {
    (a[0].norm_sqr() + a[1].norm_sqr() + a[2].norm_sqr()).sqrt()
}

/// The antisymmetric kernel `α`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaKernel {
    pub s: f64,
    /// `C^{1/2}/√2`.
    pub amp: f64,
}

impl AlphaKernel {
    pub fn new(s: f64, normalization: KernelNormalization) -> Result<Self> {
        Ok(ConstantsLedger::new(s, normalization)?.kernel())
    }

    pub fn eval(&self, x: [f64; 3], y: [f64; 3]) -> Result<[f64; 3]> {
        if x == y {
            return Err(FracError::Diagonal);
        }
        Ok(self.at(sub3(y, x)))
    }

    /// Kernel as a function of `z = y - x`, `z ≠ 0`.
    pub fn at(&self, z: [f64; 3]) -> [f64; 3] {
        let r = norm3(z);
        let f = self.amp * r.powf(-(DIM / 2.0 + self.s + 1.0));
        [f * z[0], f * z[1], f * z[2]]
    }
}

/// A one-point scalar field evaluable anywhere.
pub trait ScalarSource: Sync {
    fn value(&self, x: [f64; 3]) -> C64;
}

/// A one-point vector field evaluable anywhere.
pub trait VectorSource: Sync {
    fn value(&self, x: [f64; 3]) -> [C64; 3];
}

impl<F: Fn([f64; 3]) -> C64 + Sync> ScalarSource for F {
    fn value(&self, x: [f64; 3]) -> C64 {
        self(x)
    }
}

impl ScalarSource for TrigInterpolant {
    fn value(&self, x: [f64; 3]) -> C64 {
        self.eval(x)
    }
}

/// Closure wrapper for vector sources.
pub struct VectorFn<F>(pub F);

impl<F: Fn([f64; 3]) -> [C64; 3] + Sync> VectorSource for VectorFn<F> {
    fn value(&self, x: [f64; 3]) -> [C64; 3] {
        (self.0)(x)
    }
}

/// Componentwise trigonometric interpolant of a vector field.
#[derive(Clone, Debug)]
pub struct VectorInterpolant([TrigInterpolant; 3]);

impl VectorInterpolant {
    pub fn new(v: &VectorField3) -> Self {
        Self([0, 1, 2].map(|c| TrigInterpolant::new(v.component(c))))
    }
}

impl VectorSource for VectorInterpolant {
    fn value(&self, x: [f64; 3]) -> [C64; 3] {
        [self.0[0].eval(x), self.0[1].eval(x), self.0[2].eval(x)]
    }
}

/// Normalized Gaussian bump `amp·exp(-|x-c|^2/w^2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gaussian {
    pub center: [f64; 3],
    pub width: f64,
    pub amp: C64,
}

impl Gaussian {
    pub fn sample(&self, grid: &Grid3) -> ScalarField {
        ScalarField::from_fn(grid, |x| self.value(x))
    }
}

impl ScalarSource for Gaussian {
    fn value(&self, x: [f64; 3]) -> C64 {
        let r2 = (0..3).map(|i| (x[i] - self.center[i]).powi(2)).sum::<f64>();
        self.amp * (-r2 / (self.width * self.width)).exp()
    }
}

/// Gaussian bump with a fixed vector amplitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianVector {
    pub center: [f64; 3],
    pub width: f64,
    pub amp: [C64; 3],
}

impl GaussianVector {
    pub fn sample(&self, grid: &Grid3) -> VectorField3 {
        VectorField3::from_fn(grid, |x| self.value(x))
    }
}

impl VectorSource for GaussianVector {
    fn value(&self, x: [f64; 3]) -> [C64; 3] {
        let g = Gaussian {
            center: self.center,
            width: self.width,
            amp: C64::new(1.0, 0.0),
        }
        .value(x);
        self.amp.map(|a| a * g)
    }
}

/// A two-point vector field `v(x, y)`.
pub trait TwoPointField: Sync {
    /// Value off the diagonal; callers guarantee `x ≠ y`.
    fn value(&self, x: [f64; 3], y: [f64; 3]) -> [C64; 3];

    fn eval(&self, x: [f64; 3], y: [f64; 3]) -> Result<[C64; 3]> {
        if x == y {
            Err(FracError::Diagonal)
        } else {
            Ok(self.value(x, y))
        }
    }
}

/// One evaluated two-point sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoPointSample {
    pub x: [f64; 3],
    pub y: [f64; 3],
    pub value: [C64; 3],
}

impl TwoPointSample {
    pub fn of(v: &impl TwoPointField, x: [f64; 3], y: [f64; 3]) -> Result<Self> {
        Ok(Self {
            x,
            y,
            value: v.eval(x, y)?,
        })
    }
}

/// `D* u (x,y) = (u(y) - u(x)) α(x,y)`.
pub struct DStar<S> {
    pub src: S,
    pub kernel: AlphaKernel,
}

pub fn d_star<S: ScalarSource>(src: S, kernel: AlphaKernel) -> DStar<S> {
    DStar { src, kernel }
}

impl<S: ScalarSource> TwoPointField for DStar<S> {
    fn value(&self, x: [f64; 3], y: [f64; 3]) -> [C64; 3] {
        let a = self.kernel.at(sub3(y, x));
        let du = self.src.value(y) - self.src.value(x);
        a.map(|c| c * du)
    }
}

/// `C* w (x,y) = α(x,y) × (w(y) - w(x))`.
pub struct CStar<V> {
    pub src: V,
    pub kernel: AlphaKernel,
}

pub fn c_star<V: VectorSource>(src: V, kernel: AlphaKernel) -> CStar<V> {
    CStar { src, kernel }
}

impl<V: VectorSource> TwoPointField for CStar<V> {
    fn value(&self, x: [f64; 3], y: [f64; 3]) -> [C64; 3] {
        let a = self.kernel.at(sub3(y, x));
        cross_rc(a, sub_c3(self.src.value(y), self.src.value(x)))
    }
}

/// `G* v (x,y) = -(v(y) - v(x))·α(x,y)`, a scalar two-point field.
pub struct GStar<V> {
    pub src: V,
    pub kernel: AlphaKernel,
}

pub fn g_star<V: VectorSource>(src: V, kernel: AlphaKernel) -> GStar<V> {
    GStar { src, kernel }
}

impl<V: VectorSource> GStar<V> {
    pub fn eval(&self, x: [f64; 3], y: [f64; 3]) -> Result<C64> {
        if x == y {
            return Err(FracError::Diagonal);
        }
        let a = self.kernel.at(sub3(y, x));
        Ok(-dot_rc(a, sub_c3(self.src.value(y), self.src.value(x))))
    }
}

/// Sum of two-point fields.
pub struct SumField<A, B>(pub A, pub B);

impl<A: TwoPointField, B: TwoPointField> TwoPointField for SumField<A, B> {
    fn value(&self, x: [f64; 3], y: [f64; 3]) -> [C64; 3] {
        add_c3(self.0.value(x, y), self.1.value(x, y))
    }
}

/// `v(x,y) = α(x,y) g(x)`: a two-point field without the x↔y symmetry every
/// decomposable field has.
pub struct AsymmetricWitness<S> {
    pub g: S,
    pub kernel: AlphaKernel,
}

impl<S: ScalarSource> TwoPointField for AsymmetricWitness<S> {
    fn value(&self, x: [f64; 3], y: [f64; 3]) -> [C64; 3] {
        let gx = self.g.value(x);
        self.kernel.at(sub3(y, x)).map(|c| c * gx)
    }
}

/// Largest `|v(x,y) - v(y,x)|` over the given pairs.
pub fn symmetry_defect(v: &impl TwoPointField, pairs: &[([f64; 3], [f64; 3])]) -> f64 {
    pairs
        .iter()
        .map(|&(x, y)| norm_c3(sub_c3(v.value(x, y), v.value(y, x))))
        .fold(0.0, f64::max)
}

/// Radial layout of a centered quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureOptions {
    /// Radius of the singular inner ball.
    pub inner_radius: f64,
    /// Outer radius of a regular Gauss shell after the ball, if any.
    pub shell_radius: Option<f64>,
    /// Integrate the `r^{-1-b}` tail beyond the last radius to infinity.
    pub tail: bool,
    pub radial: usize,
    pub shell: usize,
    pub polar: usize,
    pub azimuthal: usize,
}

impl QuadratureOptions {
    /// Ball of radius `inner` followed by a shell out to `outer`.
    pub fn ball(inner: f64, outer: f64) -> Self {
        Self {
            inner_radius: inner,
            shell_radius: Some(outer),
            tail: false,
            radial: 14,
            shell: 16,
            polar: 10,
            azimuthal: 20,
        }
    }

    /// As `ball`, then a mapped tail to infinity.
    pub fn whole_space(inner: f64, outer: f64) -> Self {
        Self {
            tail: true,
            ..Self::ball(inner, outer)
        }
    }

    fn refined(&self, factor: f64) -> Self {
        let up = |n: usize| ((n as f64 * factor).round() as usize).max(1);
        let mut az = up(self.azimuthal);
        az += az % 2;
        Self {
            radial: up(self.radial),
            shell: up(self.shell),
            polar: up(self.polar),
            azimuthal: az,
            ..*self
        }
    }
}

/// Quadrature value with a three-level refinement study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureEstimate<T> {
    /// Finest-level value.
    pub value: T,
    pub levels: [T; 3],
    /// `|Q2 - Q1| / |Q1 - Q0|`.
    pub ratio: f64,
    pub converged: bool,
}

const REFINEMENT: [f64; 3] = [1.0, 1.5, 2.0];

fn gauss(n: usize) -> Vec<(f64, f64)> {
    GaussLegendre::new(NonZeroUsize::new(n.max(1)).unwrap())
        .as_node_weight_pairs()
        .to_vec()
}

/// Nodes `(z, weight)` with the volume measure folded into the weights.
fn centered_nodes(opts: &QuadratureOptions, a: f64, b: f64) -> Vec<([f64; 3], f64)> {
    let mut radial: Vec<(f64, f64)> = Vec::new();
    let r0 = opts.inner_radius;
    for (xi, w) in gauss(opts.radial) {
        let t = 0.5 * (xi + 1.0);
        let p = 1.0 / (a + 1.0);
        let r = r0 * t.powf(p);
        let drdt = r0 * p * t.powf(p - 1.0);
        radial.push((r, 0.5 * w * drdt * r * r));
    }
    let mut last = r0;
    if let Some(r1) = opts.shell_radius {
        if r1 > r0 {
            for (xi, w) in gauss(opts.shell) {
                let r = r0 + 0.5 * (xi + 1.0) * (r1 - r0);
                radial.push((r, 0.5 * w * (r1 - r0) * r * r));
            }
            last = r1;
        }
    }
    if opts.tail {
        for (xi, w) in gauss(opts.radial) {
            let tau = 0.5 * (xi + 1.0);
            let r = last * tau.powf(-1.0 / b);
            let drdt = last / b * tau.powf(-1.0 / b - 1.0);
            radial.push((r, 0.5 * w * drdt * r * r));
        }
    }
    let mut sphere = Vec::new();
    let naz = opts.azimuthal + opts.azimuthal % 2;
    for (mu, wmu) in gauss(opts.polar) {
        let st = (1.0 - mu * mu).max(0.0).sqrt();
        for j in 0..naz {
            let phi = (j as f64 + 0.5) * 2.0 * PI / naz as f64;
            sphere.push(([st * phi.cos(), st * phi.sin(), mu], wmu * 2.0 * PI / naz as f64));
        }
    }
    let mut nodes = Vec::with_capacity(radial.len() * sphere.len());
    for &(r, wr) in &radial {
        for &(d, wd) in &sphere {
            nodes.push(([r * d[0], r * d[1], r * d[2]], wr * wd));
        }
    }
    nodes
}

fn integrate(nodes: &[([f64; 3], f64)], f: &(dyn Fn([f64; 3]) -> [C64; 3] + Sync)) -> [C64; 3] {
    nodes
        .par_iter()
        .fold(
            || [ZERO; 3],
            |acc, &(z, w)| {
                let v = f(z);
                [acc[0] + v[0] * w, acc[1] + v[1] * w, acc[2] + v[2] * w]
            },
        )
        .reduce(|| [ZERO; 3], add_c3)
}

fn refinement_study(
    opts: &QuadratureOptions,
    a: f64,
    b: f64,
    f: &(dyn Fn([f64; 3]) -> [C64; 3] + Sync),
) -> QuadratureEstimate<[C64; 3]> {
    let levels = REFINEMENT.map(|fac| integrate(&centered_nodes(&opts.refined(fac), a, b), f));
    let d1 = norm_c3(sub_c3(levels[1], levels[0]));
    let d2 = norm_c3(sub_c3(levels[2], levels[1]));
    let scale = levels.iter().map(|v| norm_c3(*v)).fold(0.0, f64::max);
    let ratio = if d1 > 0.0 {
        d2 / d1
    } else if d2 > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let converged = ratio <= 0.5 || d2 <= 1e-8 * scale;
    QuadratureEstimate {
        value: levels[2],
        levels,
        ratio,
        converged,
    }
}

/// `(Πv)(x) = c ∫ v(x,y) |x-y|^{-3/2} dy`.
pub fn pi_quadrature(
    v: &impl TwoPointField,
    x: [f64; 3],
    ledger: &ConstantsLedger,
    opts: &QuadratureOptions,
) -> QuadratureEstimate<[C64; 3]> {
    let s = ledger.s;
    let f = |z: [f64; 3]| {
        let y = [x[0] + z[0], x[1] + z[1], x[2] + z[2]];
        let r = norm3(z);
        let scale = ledger.c_pi * r.powf(-DIM / 2.0);
        v.value(x, y).map(|c| c * scale)
    };
    refinement_study(opts, -s, s, &f)
}

/// `D ν(x) = -∫ (ν(x,y) + ν(y,x))·α(x,y) dy`.
pub fn nonlocal_div(
    v: &impl TwoPointField,
    x: [f64; 3],
    kernel: &AlphaKernel,
    opts: &QuadratureOptions,
) -> QuadratureEstimate<C64> {
    let f = div_integrand(v, x, kernel);
    let est = refinement_study(opts, 1.0 - 2.0 * kernel.s, 2.0 * kernel.s, &f);
    QuadratureEstimate {
        value: est.value[0],
        levels: est.levels.map(|l| l[0]),
        ratio: est.ratio,
        converged: est.converged,
    }
}

fn div_integrand<'a>(
    v: &'a impl TwoPointField,
    x: [f64; 3],
    kernel: &'a AlphaKernel,
) -> impl Fn([f64; 3]) -> [C64; 3] + Sync + 'a {
    move |z: [f64; 3]| {
        let y = [x[0] + z[0], x[1] + z[1], x[2] + z[2]];
        let a = kernel.at(z);
        let sum = add_c3(v.value(x, y), v.value(y, x));
        [-dot_rc(a, sum), ZERO, ZERO]
    }
}

/// `C μ(x) = ∫ α(x,y) × (μ(x,y) + μ(y,x)) dy`.
pub fn nonlocal_curl(
    v: &impl TwoPointField,
    x: [f64; 3],
    kernel: &AlphaKernel,
    opts: &QuadratureOptions,
) -> QuadratureEstimate<[C64; 3]> {
    let f = |z: [f64; 3]| {
        let y = [x[0] + z[0], x[1] + z[1], x[2] + z[2]];
        let a = kernel.at(z);
        cross_rc(a, add_c3(v.value(x, y), v.value(y, x)))
    };
    refinement_study(opts, 1.0 - 2.0 * kernel.s, 2.0 * kernel.s, &f)
}

/// Both sides of `⟨D(D*w), u⟩ = ⟨D*w, D*u⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdjointnessCheck {
    pub lhs: C64,
    pub rhs: C64,
    pub rel_err: f64,
}

/// Left side sums `D(D*w)` over the grid points where `u` is not negligible;
/// right side integrates `|α(z)|^2 G(z)` over `z` with
/// `G(z) = Σ_x (w(x+z)-w(x)) conj(u(x+z)-u(x)) h^3`.
pub fn adjointness_check(
    w: &(impl ScalarSource + Clone),
    u: &impl ScalarSource,
    grid: &Grid3,
    kernel: &AlphaKernel,
    opts: &QuadratureOptions,
) -> AdjointnessCheck {
    let h3 = grid.cell_volume();
    let us: Vec<C64> = (0..grid.len()).map(|i| u.value(grid.point(i))).collect();
    let umax = us.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let v = d_star(w.clone(), *kernel);
    let fine = opts.refined(REFINEMENT[1]);
    let nodes_d = centered_nodes(&fine, 1.0 - 2.0 * kernel.s, 2.0 * kernel.s);
    let lhs: C64 = (0..grid.len())
        .filter(|&i| us[i].norm() > 1e-12 * umax)
        .map(|i| {
            let x = grid.point(i);
            let f = div_integrand(&v, x, kernel);
            integrate(&nodes_d, &f)[0] * us[i].conj() * h3
        })
        .sum();

    let ws: Vec<C64> = (0..grid.len()).map(|i| w.value(grid.point(i))).collect();
    let g = |z: [f64; 3]| {
        let mut acc = ZERO;
        for i in 0..grid.len() {
            let x = grid.point(i);
            let xz = [x[0] + z[0], x[1] + z[1], x[2] + z[2]];
            acc += (w.value(xz) - ws[i]) * (u.value(xz) - us[i]).conj();
        }
        let a = kernel.at(z);
        let a2 = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
        [acc * h3 * a2, ZERO, ZERO]
    };
    let nodes_z = centered_nodes(&fine, 1.0 - 2.0 * kernel.s, 2.0 * kernel.s);
    let rhs = integrate(&nodes_z, &g)[0];
    AdjointnessCheck {
        lhs,
        rhs,
        rel_err: (lhs - rhs).norm() / rhs.norm().max(1e-300),
    }
}

/// Outcome of the six-dimensional Fourier check of `C*u`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourierCurlFit {
    /// Real least-squares coefficient against the stated law.
    pub fitted_k_ns: f64,
    /// Relative residual of the real fit.
    pub residual: f64,
    /// Complex least-squares coefficient against the stated law.
    pub complex_k: C64,
    pub complex_residual: f64,
    /// Complex fit against the law with exponent `3/2 + 1 - s`.
    pub corrected_k: C64,
    pub corrected_residual: f64,
    pub samples: usize,
}

/// Evaluates `C*u` on the product lattice (diagonal excluded), takes the
/// 6-D DFT and fits `k (ξ/|ξ|^e + η/|η|^e) × û(ξ+η)` with `e = 3/2 + s - 1`
/// over all `ξ, η, ξ+η ≠ 0`.
pub fn fourier_cstar_check(u: &VectorField3, s: f64, kernel: &AlphaKernel) -> Result<FourierCurlFit> {
    check_order(s)?;
    let grid = u.grid().clone();
    let n = grid.n();
    if n > 8 {
        return Err(invalid("n", format!("the 6-D check is limited to n <= 8, got {n}")));
    }
    let n3 = grid.len();
    // lhs[c][ix * n3 + iy]
    let mut field = vec![vec![ZERO; n3 * n3]; 3];
    for ix in 0..n3 {
        let x = grid.point(ix);
        let ux = u.at(ix);
        for iy in 0..n3 {
            if iy == ix {
                continue;
            }
            let y = grid.point(iy);
            let v = cross_rc(kernel.at(sub3(y, x)), sub_c3(u.at(iy), ux));
            for c in 0..3 {
                field[c][ix * n3 + iy] = v[c];
            }
        }
    }
    let mut line = vec![ZERO; n3];
    for comp in field.iter_mut() {
        for ix in 0..n3 {
            grid.fft_forward(&mut comp[ix * n3..(ix + 1) * n3]);
        }
        for iy in 0..n3 {
            for ix in 0..n3 {
                line[ix] = comp[ix * n3 + iy];
            }
            grid.fft_forward(&mut line);
            for ix in 0..n3 {
                comp[ix * n3 + iy] = line[ix];
            }
        }
    }
    let uhat = u.spectra();
    let law = |xi: [f64; 3], e: f64| {
        let r = norm3(xi);
        xi.map(|c| c / r.powf(e))
    };
    let stated = DIM / 2.0 + s - 1.0;
    let corrected = DIM / 2.0 + 1.0 - s;
    let mut lhs = Vec::new();
    let mut rhs_stated = Vec::new();
    let mut rhs_corrected = Vec::new();
    for ixi in 1..n3 {
        let mxi = grid.modes(ixi);
        for ieta in 1..n3 {
            let meta = grid.modes(ieta);
            let sum = grid.spectral_index([mxi[0] + meta[0], mxi[1] + meta[1], mxi[2] + meta[2]]);
            if sum == 0 {
                continue;
            }
            let xi = grid.wavevector(ixi);
            let eta = grid.wavevector(ieta);
            let us = [uhat[0][sum], uhat[1][sum], uhat[2][sum]];
            let ks = add_c3r(law(xi, stated), law(eta, stated));
            let kc = add_c3r(law(xi, corrected), law(eta, corrected));
            let rs = cross_rc(ks, us);
            let rc = cross_rc(kc, us);
            for c in 0..3 {
                lhs.push(field[c][ixi * n3 + ieta]);
                rhs_stated.push(rs[c]);
                rhs_corrected.push(rc[c]);
            }
        }
    }
    let (complex_k, complex_residual) = complex_fit(&lhs, &rhs_stated)?;
    let (corrected_k, corrected_residual) = complex_fit(&lhs, &rhs_corrected)?;
    let rr: f64 = rhs_stated.iter().map(|c| c.norm_sqr()).sum();
    let fitted_k_ns = rhs_stated.iter().zip(&lhs).map(|(r, l)| (r.conj() * l).re).sum::<f64>() / rr;
    let residual = rel_residual(&lhs, &rhs_stated, C64::new(fitted_k_ns, 0.0));
    Ok(FourierCurlFit {
        fitted_k_ns,
        residual,
        complex_k,
        complex_residual,
        corrected_k,
        corrected_residual,
        samples: lhs.len() / 3,
    })
}

fn add_c3r(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn complex_fit(lhs: &[C64], rhs: &[C64]) -> Result<(C64, f64)> {
    let rr: f64 = rhs.iter().map(|c| c.norm_sqr()).sum();
    if rr == 0.0 || !rr.is_finite() {
        return Err(FracError::DegenerateFit);
    }
    let k = rhs.iter().zip(lhs).map(|(r, l)| r.conj() * l).sum::<C64>() / rr;
    Ok((k, rel_residual(lhs, rhs, k)))
}

fn rel_residual(lhs: &[C64], rhs: &[C64], k: C64) -> f64 {
    let num: f64 = lhs.iter().zip(rhs).map(|(l, r)| (l - k * r).norm_sqr()).sum();
    let den: f64 = lhs.iter().map(|l| l.norm_sqr()).sum();
    (num / den.max(1e-300)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut impl Rng) -> [f64; 3] {
        [
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        ]
    }

    #[test]
    fn paper_constant_matches_gamma_formula() {
        // C = 2^s Γ((3+s)/2) / (π^{3/2} |Γ(-s/2)|) at s = 1/2, using
        // Γ(7/4) = 0.919062526848883 and Γ(-1/4) = -4.901666809860711.
        let expect = 2f64.sqrt() * 0.919062526848883 / (PI.powf(1.5) * 4.901666809860711);
        assert!((c_ns_paper(0.5) - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn singular_constant_known_values() {
        // s = 1/2 in 3-D: 4^{1/2} Γ(2) / (π^{3/2} Γ(-1/2) abs) = 2/(π^{3/2}·2√π) = 1/π^2
        assert!((c_ns_singular(0.5) - 1.0 / (PI * PI)).abs() < 1e-12);
    }

    #[test]
    fn riesz_gamma_matches_newtonian_potential() {
        // I_2 f = (4π)^{-1} ∫ f/|x-y|, so γ(2) = 4π
        assert!((riesz_gamma(2.0) - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn ledger_pi_constant_formula() {
        let l = ConstantsLedger::new(0.5, KernelNormalization::PaperVerbatim).unwrap();
        let expect = 2.5 * 2f64.sqrt() / (l.c_ns.sqrt() * riesz_gamma(0.5));
        assert!((l.c_pi - expect).abs() < 1e-14 * expect);
        assert!(ConstantsLedger::new(1.0, KernelNormalization::default()).is_err());
    }

    #[test]
    fn alpha_antisymmetric_and_homogeneous() {
        let k = AlphaKernel::new(0.5, KernelNormalization::PaperVerbatim).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let (x, y) = (random_point(&mut rng), random_point(&mut rng));
            let a = k.eval(x, y).unwrap();
            let b = k.eval(y, x).unwrap();
            assert!((0..3).all(|i| a[i] + b[i] == 0.0));
        }
        let x = [0.1, 0.2, 0.3];
        let y1 = [1.1, 0.2, 0.3];
        let y2 = [2.1, 0.2, 0.3];
        let m1 = norm3(k.eval(x, y1).unwrap());
        let m2 = norm3(k.eval(x, y2).unwrap());
        assert!((m1 - (c_ns_paper(0.5) / 2.0).sqrt()).abs() < 1e-14);
        assert!((m2 / m1 - 2f64.powf(-2.0)).abs() < 1e-14);
        assert_eq!(k.eval(x, x).unwrap_err(), FracError::Diagonal);
    }

    #[test]
    fn adjoint_fields_vanish_on_constants() {
        let k = AlphaKernel::new(0.6, KernelNormalization::default()).unwrap();
        let one = |_x: [f64; 3]| C64::new(1.0, 0.0);
        let d = d_star(one, k);
        let c = c_star(VectorFn(|_x: [f64; 3]| [C64::new(1.0, 0.0); 3]), k);
        let g = g_star(VectorFn(|_x: [f64; 3]| [C64::new(2.0, -1.0); 3]), k);
        let (x, y) = ([0.0; 3], [0.5, -0.2, 0.1]);
        assert_eq!(d.eval(x, y).unwrap(), [ZERO; 3]);
        assert_eq!(c.eval(x, y).unwrap(), [ZERO; 3]);
        assert_eq!(g.eval(x, y).unwrap(), ZERO);
        assert!(d.eval(x, x).is_err());
    }

    #[test]
    fn parallel_orthogonal_split_and_symmetry() {
        let k = AlphaKernel::new(0.5, KernelNormalization::default()).unwrap();
        let gw = Gaussian {
            center: [0.2, 0.0, -0.1],
            width: 0.8,
            amp: C64::new(1.0, 0.3),
        };
        let gv = GaussianVector {
            center: [0.0, 0.3, 0.0],
            width: 0.7,
            amp: [C64::new(1.0, 0.0), C64::new(0.0, 2.0), C64::new(-0.5, 0.5)],
        };
        let d = d_star(gw, k);
        let c = c_star(gv, k);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut pairs = Vec::new();
        for _ in 0..100 {
            let (x, y) = (random_point(&mut rng), random_point(&mut rng));
            let a = k.eval(x, y).unwrap();
            let an = norm3(a);
            let cv = c.eval(x, y).unwrap();
            assert!(dot_rc(a, cv).norm() <= 1e-13 * an * norm_c3(cv).max(1e-300));
            let dv = d.eval(x, y).unwrap();
            let perp = cross_rc(a, dv);
            assert!(norm_c3(perp) <= 1e-13 * an * norm_c3(dv).max(1e-300));
            pairs.push((x, y));
        }
        assert!(symmetry_defect(&d, &pairs) < 1e-13);
        assert!(symmetry_defect(&c, &pairs) < 1e-13);
        let witness = AsymmetricWitness {
            g: |x: [f64; 3]| C64::new(1.0 + x[0], 0.0),
            kernel: k,
        };
        assert!(symmetry_defect(&witness, &pairs) > 1e-3);
    }

    #[test]
    fn pi_of_odd_field_vanishes() {
        let ledger = ConstantsLedger::new(0.5, KernelNormalization::default()).unwrap();
        let x0 = [1.0, 1.0, 1.0];
        // an even profile about x0 makes D* odd in y - x0
        let bump = Gaussian {
            center: x0,
            width: 0.4,
            amp: C64::new(1.0, 0.0),
        };
        let v = d_star(bump, ledger.kernel());
        let est = pi_quadrature(&v, x0, &ledger, &QuadratureOptions::ball(0.5, 1.0));
        assert!(norm_c3(est.value) < 1e-12);
    }

    #[test]
    fn nonlocal_div_of_zero_is_zero() {
        let k = AlphaKernel::new(0.5, KernelNormalization::default()).unwrap();
        let v = d_star(|_x: [f64; 3]| ZERO, k);
        let est = nonlocal_div(&v, [0.0; 3], &k, &QuadratureOptions::whole_space(0.5, 1.0));
        assert_eq!(est.value, ZERO);
    }

    #[test]
    fn fourier_check_rejects_zero_and_large_grids() {
        let k = AlphaKernel::new(0.5, KernelNormalization::default()).unwrap();
        let g = Grid3::new(4, 2.0 * PI).unwrap();
        let z = VectorField3::zeros(&g);
        assert_eq!(fourier_cstar_check(&z, 0.5, &k).unwrap_err(), FracError::DegenerateFit);
        let big = Grid3::new(10, 2.0 * PI).unwrap();
        assert!(fourier_cstar_check(&VectorField3::zeros(&big), 0.5, &k).is_err());
    }
}
