//! Periodic cube grids, FFT-based Fourier multipliers and weighted norms.
//!
//! The forward transform is unnormalized and the inverse carries the factor
//! `1/n^3`. Samples are stored x-fastest: flat index `i + n*j + n*n*k`.
//! Integer wavenumbers follow the FFT convention `m < n/2 ? m : m - n`, so the
//! lattice is `(2π/L)·{-n/2, …, n/2-1}^3`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, FracError, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

struct Plans {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

/// Periodic cube `[0, L)^3` with `n` points per axis.
#[derive(Clone)]
pub struct Grid3 {
    n: usize,
    l: f64,
    plans: Arc<Plans>,
}

impl fmt::Debug for Grid3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid3").field("n", &self.n).field("l", &self.l).finish()
    }
}

impl PartialEq for Grid3 {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.l == other.l
    }
}

impl Grid3 {
    pub fn new(n: usize, l: f64) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(invalid("n", format!("need an even n >= 4, got {n}")));
        }
        if !(l.is_finite() && l > 0.0) {
            return Err(invalid("L", format!("need a finite L > 0, got {l}")));
        }
        let mut planner = FftPlanner::new();
        let plans = Plans {
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        };
        Ok(Self {
            n,
            l,
            plans: Arc::new(plans),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn spacing(&self) -> f64 {
        self.l / self.n as f64
    }

    /// Number of samples, `n^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    pub fn volume(&self) -> f64 {
        self.l.powi(3)
    }

    pub fn center(&self) -> [f64; 3] {
        [0.5 * self.l; 3]
    }

    /// Fundamental lattice frequency `2π/L`.
    pub fn dk(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.l
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    pub fn unflatten(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx % n, (idx / n) % n, idx / (n * n)]
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let h = self.spacing();
        let [i, j, k] = self.unflatten(idx);
        [i as f64 * h, j as f64 * h, k as f64 * h]
    }

    /// Signed integer mode for FFT index `i`.
    pub fn mode(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// FFT index of the signed integer mode `m` (taken modulo `n`).
    pub fn mode_index(&self, m: i64) -> usize {
        m.rem_euclid(self.n as i64) as usize
    }

    pub fn modes(&self, idx: usize) -> [i64; 3] {
        let [i, j, k] = self.unflatten(idx);
        [self.mode(i), self.mode(j), self.mode(k)]
    }

    /// Wave vector `ξ` at flat spectral index `idx`.
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let dk = self.dk();
        let m = self.modes(idx);
        [m[0] as f64 * dk, m[1] as f64 * dk, m[2] as f64 * dk]
    }

    /// `ξ` with Nyquist components set to zero, for odd-order symbols so
    /// that real fields map to real fields.
    pub fn odd_wavevector(&self, idx: usize) -> [f64; 3] {
        let half = (self.n / 2) as i64;
        let dk = self.dk();
        self.modes(idx).map(|m| if m == -half { 0.0 } else { m as f64 * dk })
    }

    /// Flat index of the signed mode triple.
    pub fn spectral_index(&self, m: [i64; 3]) -> usize {
        self.index(self.mode_index(m[0]), self.mode_index(m[1]), self.mode_index(m[2]))
    }

    pub fn fft_forward(&self, data: &mut [C64]) {
        self.transform(data, &self.plans.fwd);
    }

    pub fn fft_inverse(&self, data: &mut [C64]) {
        self.transform(data, &self.plans.inv);
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|c| *c *= scale);
    }

    fn transform(&self, data: &mut [C64], fft: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.len(), "buffer length must equal n^3");
        let n = self.n;
        let plane = n * n;
        let scratch_len = fft.get_inplace_scratch_len();
        let run = |buf: &mut [C64]| {
            buf.par_chunks_mut(plane).for_each_init(
                || vec![ZERO; scratch_len],
                |scratch, chunk| fft.process_with_scratch(chunk, scratch),
            );
        };
        // x lines are contiguous
        run(data);
        // y and z: gather lines into contiguous storage, transform, scatter back
        let mut buf = vec![ZERO; data.len()];
        for axis in 1..3 {
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        let (line, pos) = if axis == 1 { (i + n * k, j) } else { (i + n * j, k) };
                        buf[line * n + pos] = data[self.index(i, j, k)];
                    }
                }
            }
            run(&mut buf);
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        let (line, pos) = if axis == 1 { (i + n * k, j) } else { (i + n * j, k) };
                        data[self.index(i, j, k)] = buf[line * n + pos];
                    }
                }
            }
        }
    }

    pub fn check_same(&self, other: &Grid3) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(FracError::GridMismatch(format!(
                "(n={}, L={}) vs (n={}, L={})",
                self.n, self.l, other.n, other.l
            )))
        }
    }
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Complex scalar samples on a grid.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Grid3,
    values: Vec<C64>,
}

impl ScalarField {
    pub fn new(grid: &Grid3, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(FracError::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn zeros(grid: &Grid3) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![ZERO; grid.len()],
        }
    }

    pub fn from_fn(grid: &Grid3, f: impl Fn([f64; 3]) -> C64 + Sync) -> Self {
        let values = (0..grid.len()).into_par_iter().map(|i| f(grid.point(i))).collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    /// `amp·exp(iξ·x)` for the integer mode `m`.
    pub fn plane_wave(grid: &Grid3, m: [i64; 3], amp: C64) -> Self {
        let dk = grid.dk();
        let xi = [m[0] as f64 * dk, m[1] as f64 * dk, m[2] as f64 * dk];
        Self::from_fn(grid, |x| {
            amp * C64::from_polar(1.0, xi[0] * x[0] + xi[1] * x[1] + xi[2] * x[2])
        })
    }

    /// Inverse transform of the spectral coefficients `hat`.
    pub fn from_spectrum(grid: &Grid3, mut hat: Vec<C64>) -> Result<Self> {
        if hat.len() != grid.len() {
            return Err(FracError::GridMismatch("spectrum length".into()));
        }
        grid.fft_inverse(&mut hat);
        Ok(Self {
            grid: grid.clone(),
            values: hat,
        })
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn spectrum(&self) -> Vec<C64> {
        let mut hat = self.values.clone();
        self.grid.fft_forward(&mut hat);
        hat
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            Some(index) => Err(FracError::NonFinite { index }),
            None => Ok(()),
        }
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&c| f(c)).collect(),
        }
    }

    /// Pointwise product with a real or complex coefficient field.
    pub fn mul_pointwise(&self, other: &ScalarField) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        })
    }

    pub fn mean(&self) -> C64 {
        self.values.iter().sum::<C64>() / self.values.len() as f64
    }

    /// Grid inner product `h^3 Σ u·conj(v)`.
    pub fn dot(&self, other: &ScalarField) -> C64 {
        self.grid.cell_volume()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b.conj())
                .sum::<C64>()
    }

    /// Grid L2 norm `sqrt(h^3 Σ |u|^2)`.
    pub fn norm(&self) -> f64 {
        (self.grid.cell_volume() * self.values.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

fn zip_values(a: &ScalarField, b: &ScalarField, f: impl Fn(C64, C64) -> C64) -> ScalarField {
    assert_eq!(a.grid, b.grid, "fields live on different grids");
    ScalarField {
        grid: a.grid.clone(),
        values: a.values.iter().zip(&b.values).map(|(&x, &y)| f(x, y)).collect(),
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: Self) -> ScalarField {
        zip_values(self, rhs, |a, b| a + b)
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: Self) -> ScalarField {
        zip_values(self, rhs, |a, b| a - b)
    }
}

impl Mul<C64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: C64) -> ScalarField {
        self.map(|c| c * rhs)
    }
}

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: f64) -> ScalarField {
        self.map(|c| c * rhs)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.map(|c| -c)
    }
}

/// Three scalar components on one shared grid.
#[derive(Clone, Debug)]
pub struct VectorField3 {
    comps: [ScalarField; 3],
}

impl VectorField3 {
    pub fn from_components(cx: ScalarField, cy: ScalarField, cz: ScalarField) -> Result<Self> {
        cx.grid.check_same(&cy.grid)?;
        cx.grid.check_same(&cz.grid)?;
        Ok(Self { comps: [cx, cy, cz] })
    }

    pub fn zeros(grid: &Grid3) -> Self {
        Self {
            comps: [
                ScalarField::zeros(grid),
                ScalarField::zeros(grid),
                ScalarField::zeros(grid),
            ],
        }
    }

    pub fn from_fn(grid: &Grid3, f: impl Fn([f64; 3]) -> [C64; 3] + Sync) -> Self {
        let samples: Vec<[C64; 3]> = (0..grid.len()).into_par_iter().map(|i| f(grid.point(i))).collect();
        let comp = |c: usize| ScalarField {
            grid: grid.clone(),
            values: samples.iter().map(|v| v[c]).collect(),
        };
        Self {
            comps: [comp(0), comp(1), comp(2)],
        }
    }

    pub fn plane_wave(grid: &Grid3, m: [i64; 3], amp: [C64; 3]) -> Self {
        let wave = ScalarField::plane_wave(grid, m, C64::new(1.0, 0.0));
        Self {
            comps: [&wave * amp[0], &wave * amp[1], &wave * amp[2]],
        }
    }

    /// Components stored back to back, x component first.
    pub fn from_flat(grid: &Grid3, flat: &[C64]) -> Result<Self> {
        let n3 = grid.len();
        if flat.len() != 3 * n3 {
            return Err(FracError::GridMismatch(format!(
                "{} values for a rank-3 field on {} points",
                flat.len(),
                n3
            )));
        }
        let comp = |c: usize| ScalarField {
            grid: grid.clone(),
            values: flat[c * n3..(c + 1) * n3].to_vec(),
        };
        Ok(Self {
            comps: [comp(0), comp(1), comp(2)],
        })
    }

    pub fn to_flat(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(3 * self.grid().len());
        for c in &self.comps {
            out.extend_from_slice(&c.values);
        }
        out
    }

    pub fn from_spectra(grid: &Grid3, hats: [Vec<C64>; 3]) -> Result<Self> {
        let [a, b, c] = hats;
        Ok(Self {
            comps: [
                ScalarField::from_spectrum(grid, a)?,
                ScalarField::from_spectrum(grid, b)?,
                ScalarField::from_spectrum(grid, c)?,
            ],
        })
    }

    pub fn spectra(&self) -> [Vec<C64>; 3] {
        let mut out: Vec<Vec<C64>> = self.comps.par_iter().map(|c| c.spectrum()).collect();
        let c = out.pop().unwrap();
        let b = out.pop().unwrap();
        let a = out.pop().unwrap();
        [a, b, c]
    }

    pub fn grid(&self) -> &Grid3 {
        &self.comps[0].grid
    }

    pub fn component(&self, c: usize) -> &ScalarField {
        &self.comps[c]
    }

    pub fn components(&self) -> &[ScalarField; 3] {
        &self.comps
    }

    pub fn into_components(self) -> [ScalarField; 3] {
        self.comps
    }

    pub fn at(&self, idx: usize) -> [C64; 3] {
        [
            self.comps[0].values[idx],
            self.comps[1].values[idx],
            self.comps[2].values[idx],
        ]
    }

    pub fn check_finite(&self) -> Result<()> {
        let n3 = self.grid().len();
        for (c, comp) in self.comps.iter().enumerate() {
            if let Err(FracError::NonFinite { index }) = comp.check_finite() {
                return Err(FracError::NonFinite { index: c * n3 + index });
            }
        }
        Ok(())
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self {
            comps: [f(&self.comps[0]), f(&self.comps[1]), f(&self.comps[2])],
        }
    }

    /// Multiplies every component by the scalar field `w` pointwise.
    pub fn scale_by(&self, w: &ScalarField) -> Result<Self> {
        self.grid().check_same(w.grid())?;
        Ok(self.map_components(|c| zip_values(c, w, |a, b| a * b)))
    }

    /// Pointwise `u·v` without conjugation.
    pub fn dot_pointwise(&self, other: &VectorField3) -> Result<ScalarField> {
        self.grid().check_same(other.grid())?;
        let n3 = self.grid().len();
        let values = (0..n3)
            .map(|i| (0..3).map(|c| self.comps[c].values[i] * other.comps[c].values[i]).sum())
            .collect();
        ScalarField::new(self.grid(), values)
    }

    pub fn dot(&self, other: &VectorField3) -> C64 {
        (0..3).map(|c| self.comps[c].dot(&other.comps[c])).sum()
    }

    pub fn norm(&self) -> f64 {
        self.comps.iter().map(|c| c.norm().powi(2)).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        let n3 = self.grid().len();
        (0..n3)
            .map(|i| self.at(i).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn mean(&self) -> [C64; 3] {
        [self.comps[0].mean(), self.comps[1].mean(), self.comps[2].mean()]
    }
}

impl Add for &VectorField3 {
    type Output = VectorField3;
    fn add(self, rhs: Self) -> VectorField3 {
        VectorField3 {
            comps: [0, 1, 2].map(|c| &self.comps[c] + &rhs.comps[c]),
        }
    }
}

impl Sub for &VectorField3 {
    type Output = VectorField3;
    fn sub(self, rhs: Self) -> VectorField3 {
        VectorField3 {
            comps: [0, 1, 2].map(|c| &self.comps[c] - &rhs.comps[c]),
        }
    }
}

impl Mul<C64> for &VectorField3 {
    type Output = VectorField3;
    fn mul(self, rhs: C64) -> VectorField3 {
        self.map_components(|c| c * rhs)
    }
}

impl Mul<f64> for &VectorField3 {
    type Output = VectorField3;
    fn mul(self, rhs: f64) -> VectorField3 {
        self.map_components(|c| c * rhs)
    }
}

impl Neg for &VectorField3 {
    type Output = VectorField3;
    fn neg(self) -> VectorField3 {
        self.map_components(|c| -c)
    }
}

/// What a multiplier does to the `ξ = 0` coefficient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ZeroMode {
    /// The symbol takes this value at the origin.
    Value(C64),
    /// Output coefficient set to exactly zero.
    Annihilate,
}

pub type ScalarSymbol = Arc<dyn Fn([f64; 3]) -> C64 + Send + Sync>;
pub type MatrixSymbol = Arc<dyn Fn([f64; 3]) -> [[C64; 3]; 3] + Send + Sync>;

#[derive(Clone)]
pub enum Symbol {
    Scalar(ScalarSymbol),
    Matrix(MatrixSymbol),
}

/// A Fourier multiplier: symbol away from the origin plus a zero-mode policy.
#[derive(Clone)]
pub struct MultiplierSpec {
    pub symbol: Symbol,
    pub zero_mode: ZeroMode,
}

impl fmt::Debug for MultiplierSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.symbol {
            Symbol::Scalar(_) => "scalar",
            Symbol::Matrix(_) => "matrix",
        };
        f.debug_struct("MultiplierSpec")
            .field("symbol", &kind)
            .field("zero_mode", &self.zero_mode)
            .finish()
    }
}

impl MultiplierSpec {
    pub fn scalar(f: impl Fn([f64; 3]) -> C64 + Send + Sync + 'static, zero_mode: ZeroMode) -> Self {
        Self {
            symbol: Symbol::Scalar(Arc::new(f)),
            zero_mode,
        }
    }

    pub fn matrix(f: impl Fn([f64; 3]) -> [[C64; 3]; 3] + Send + Sync + 'static, zero_mode: ZeroMode) -> Self {
        Self {
            symbol: Symbol::Matrix(Arc::new(f)),
            zero_mode,
        }
    }

    fn scale_hat(&self, grid: &Grid3, hat: &mut [C64], f: &ScalarSymbol) {
        hat.par_iter_mut().enumerate().for_each(|(idx, c)| {
            if idx == 0 {
                *c = match self.zero_mode {
                    ZeroMode::Value(v) => *c * v,
                    ZeroMode::Annihilate => ZERO,
                };
            } else {
                *c *= f(grid.wavevector(idx));
            }
        });
    }

    pub fn apply_scalar(&self, u: &ScalarField) -> Result<ScalarField> {
        let f = match &self.symbol {
            Symbol::Scalar(f) => f,
            Symbol::Matrix(_) => return Err(invalid("symbol", "matrix symbol applied to a scalar field")),
        };
        let mut hat = u.spectrum();
        self.scale_hat(u.grid(), &mut hat, f);
        ScalarField::from_spectrum(u.grid(), hat)
    }

    pub fn apply_vector(&self, v: &VectorField3) -> Result<VectorField3> {
        let grid = v.grid().clone();
        let mut hats = v.spectra();
        match &self.symbol {
            Symbol::Scalar(f) => {
                for hat in hats.iter_mut() {
                    self.scale_hat(&grid, hat, f);
                }
            }
            Symbol::Matrix(f) => {
                let [hx, hy, hz] = &mut hats;
                for idx in 0..grid.len() {
                    let w = [hx[idx], hy[idx], hz[idx]];
                    let out = if idx == 0 {
                        match self.zero_mode {
                            ZeroMode::Value(c) => w.map(|x| x * c),
                            ZeroMode::Annihilate => [ZERO; 3],
                        }
                    } else {
                        let m = f(grid.wavevector(idx));
                        [0, 1, 2].map(|r| m[r][0] * w[0] + m[r][1] * w[1] + m[r][2] * w[2])
                    };
                    hx[idx] = out[0];
                    hy[idx] = out[1];
                    hz[idx] = out[2];
                }
            }
        }
        VectorField3::from_spectra(&grid, hats)
    }
}

/// Fields that Fourier multipliers act on componentwise.
pub trait Field: Clone {
    fn grid(&self) -> &Grid3;
    fn check_finite(&self) -> Result<()>;
    fn apply_multiplier(&self, m: &MultiplierSpec) -> Result<Self>;
    fn l2_weighted_sq(&self, weight: &[f64]) -> f64;
}

impl Field for ScalarField {
    fn grid(&self) -> &Grid3 {
        ScalarField::grid(self)
    }
    fn check_finite(&self) -> Result<()> {
        ScalarField::check_finite(self)
    }
    fn apply_multiplier(&self, m: &MultiplierSpec) -> Result<Self> {
        m.apply_scalar(self)
    }
    fn l2_weighted_sq(&self, weight: &[f64]) -> f64 {
        self.grid.cell_volume()
            * self
                .values
                .iter()
                .zip(weight)
                .map(|(c, w)| w * c.norm_sqr())
                .sum::<f64>()
    }
}

impl Field for VectorField3 {
    fn grid(&self) -> &Grid3 {
        VectorField3::grid(self)
    }
    fn check_finite(&self) -> Result<()> {
        VectorField3::check_finite(self)
    }
    fn apply_multiplier(&self, m: &MultiplierSpec) -> Result<Self> {
        m.apply_vector(self)
    }
    fn l2_weighted_sq(&self, weight: &[f64]) -> f64 {
        self.comps.iter().map(|c| c.l2_weighted_sq(weight)).sum()
    }
}

/// Multiplier `|ξ|^{2t}` with the zero-mode policy fixed by the sign of `t`.
pub fn frac_laplacian_symbol(t: f64) -> MultiplierSpec {
    let zero_mode = if t > 0.0 {
        ZeroMode::Value(ZERO)
    } else {
        ZeroMode::Annihilate
    };
    MultiplierSpec::scalar(move |xi| C64::new(norm3(xi).powf(2.0 * t), 0.0), zero_mode)
}

/// `(-Δ)^t u`. Negative orders are Riesz potentials with the zero mode annihilated.
pub fn frac_laplacian<F: Field>(u: &F, t: f64) -> Result<F> {
    if !t.is_finite() {
        return Err(invalid("t", "order must be finite"));
    }
    u.check_finite()?;
    if t == 0.0 {
        return Ok(u.clone());
    }
    u.apply_multiplier(&frac_laplacian_symbol(t))
}

/// Riesz potential `I_α`, multiplier `|ξ|^{-α}` with `0 < α < 3`.
pub fn riesz_potential<F: Field>(u: &F, alpha: f64) -> Result<F> {
    if !(alpha > 0.0 && alpha < 3.0) {
        return Err(invalid("alpha", format!("Riesz order must lie in (0, 3), got {alpha}")));
    }
    frac_laplacian(u, -alpha / 2.0)
}

pub fn grad(u: &ScalarField) -> VectorField3 {
    let grid = u.grid().clone();
    let hat = u.spectrum();
    let hats = [0, 1, 2].map(|c| {
        hat.iter()
            .enumerate()
            .map(|(idx, &h)| I * grid.odd_wavevector(idx)[c] * h)
            .collect::<Vec<_>>()
    });
    VectorField3::from_spectra(&grid, hats).expect("spectra sized by grid")
}

pub fn div(v: &VectorField3) -> ScalarField {
    let grid = v.grid().clone();
    let [hx, hy, hz] = v.spectra();
    let hat = (0..grid.len())
        .map(|idx| {
            let xi = grid.odd_wavevector(idx);
            I * (xi[0] * hx[idx] + xi[1] * hy[idx] + xi[2] * hz[idx])
        })
        .collect();
    ScalarField::from_spectrum(&grid, hat).expect("spectrum sized by grid")
}

pub(crate) fn cross(a: [f64; 3], b: [C64; 3]) -> [C64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Applies `f(ξ, v̂(ξ))` with the Nyquist-free wave vector.
pub(crate) fn map_vector_spectrum(
    v: &VectorField3,
    f: impl Fn([f64; 3], [C64; 3]) -> [C64; 3] + Sync,
    annihilate_zero: bool,
) -> VectorField3 {
    let grid = v.grid().clone();
    let [hx, hy, hz] = v.spectra();
    let out: Vec<[C64; 3]> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            if idx == 0 && annihilate_zero {
                [ZERO; 3]
            } else {
                f(grid.odd_wavevector(idx), [hx[idx], hy[idx], hz[idx]])
            }
        })
        .collect();
    let hats = [0, 1, 2].map(|c| out.iter().map(|w| w[c]).collect::<Vec<_>>());
    VectorField3::from_spectra(&grid, hats).expect("spectra sized by grid")
}

pub fn curl(v: &VectorField3) -> VectorField3 {
    map_vector_spectrum(v, |xi, w| cross(xi, w).map(|c| I * c), false)
}

/// `∇×∇×`, symbol `|ξ|^2 I - ξξᵀ`.
pub fn curl_curl(v: &VectorField3) -> VectorField3 {
    map_vector_spectrum(
        v,
        |xi, w| {
            let xx = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
            let xw = xi[0] * w[0] + xi[1] * w[1] + xi[2] * w[2];
            [0, 1, 2].map(|c| xx * w[c] - xi[c] * xw)
        },
        false,
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedNormParams {
    pub delta: f64,
    pub s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedNorms {
    pub l2_delta: f64,
    pub hs_delta: f64,
}

/// Samples of `(1 + |x - x_c|^2)^δ` with `x_c` the box center.
pub fn weight(grid: &Grid3, delta: f64) -> Vec<f64> {
    let c = grid.center();
    (0..grid.len())
        .map(|i| {
            let x = grid.point(i);
            let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2);
            (1.0 + r2).powf(delta)
        })
        .collect()
}

/// Weighted `L^2_δ` and `H^s_δ` norms by equal-weight quadrature.
pub fn weighted_norms<F: Field>(u: &F, params: WeightedNormParams) -> Result<WeightedNorms> {
    if !(params.delta >= 0.0 && params.delta.is_finite()) {
        return Err(invalid(
            "delta",
            format!("weight exponent must be >= 0, got {}", params.delta),
        ));
    }
    if !(params.s > 0.0 && params.s <= 1.0) {
        return Err(invalid("s", format!("order must lie in (0, 1], got {}", params.s)));
    }
    let w = weight(u.grid(), params.delta);
    let l2 = u.l2_weighted_sq(&w);
    let frac = frac_laplacian(u, params.s / 2.0)?.l2_weighted_sq(&w);
    Ok(WeightedNorms {
        l2_delta: l2.sqrt(),
        hs_delta: (l2 + frac).sqrt(),
    })
}

/// Random field whose Fourier support is `0 < max|m_i| <= band`. The band
/// is capped below Nyquist.
pub fn random_band_limited(grid: &Grid3, band: i64, rng: &mut impl Rng) -> ScalarField {
    let band = band.min(grid.n() as i64 / 2 - 1);
    let mut hat = vec![ZERO; grid.len()];
    for (idx, h) in hat.iter_mut().enumerate() {
        let m = grid.modes(idx);
        let mx = m.iter().map(|x| x.abs()).max().unwrap();
        if mx > 0 && mx <= band {
            *h = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    let scale = grid.len() as f64;
    hat.iter_mut().for_each(|h| *h *= scale);
    ScalarField::from_spectrum(grid, hat).expect("spectrum sized by grid")
}

pub fn random_band_limited_vector(grid: &Grid3, band: i64, rng: &mut impl Rng) -> VectorField3 {
    VectorField3 {
        comps: [
            random_band_limited(grid, band, rng),
            random_band_limited(grid, band, rng),
            random_band_limited(grid, band, rng),
        ],
    }
}

/// Random field with independent complex samples at each grid point.
pub fn random_samples(grid: &Grid3, rng: &mut impl Rng) -> ScalarField {
    let values = (0..grid.len())
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    ScalarField {
        grid: grid.clone(),
        values,
    }
}

/// Band-limited trigonometric interpolant of a grid field, evaluable anywhere.
///
/// Nyquist modes are split evenly between `±n/2` so real data interpolate to
/// real values.
#[derive(Clone, Debug)]
pub struct TrigInterpolant {
    grid: Grid3,
    coeffs: Vec<C64>,
}

impl TrigInterpolant {
    pub fn new(u: &ScalarField) -> Self {
        let n3 = u.grid().len() as f64;
        let coeffs = u.spectrum().into_iter().map(|c| c / n3).collect();
        Self {
            grid: u.grid().clone(),
            coeffs,
        }
    }

    fn axis_factors(&self, x: f64) -> Vec<C64> {
        let n = self.grid.n();
        let dk = self.grid.dk();
        (0..n)
            .map(|i| {
                let m = self.grid.mode(i);
                if m == -(n as i64) / 2 {
                    C64::new((m as f64 * dk * x).cos(), 0.0)
                } else {
                    C64::from_polar(1.0, m as f64 * dk * x)
                }
            })
            .collect()
    }

    pub fn eval(&self, x: [f64; 3]) -> C64 {
        let n = self.grid.n();
        let ex = self.axis_factors(x[0]);
        let ey = self.axis_factors(x[1]);
        let ez = self.axis_factors(x[2]);
        let mut total = ZERO;
        for (k, zk) in ez.iter().enumerate() {
            let mut plane = ZERO;
            for (j, yj) in ey.iter().enumerate() {
                let row = &self.coeffs[n * (j + n * k)..n * (j + n * k) + n];
                let line: C64 = row.iter().zip(&ex).map(|(c, e)| c * e).sum();
                plane += yj * line;
            }
            total += zk * plane;
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn rel(a: &ScalarField, b: &ScalarField) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(Grid3::new(6, 1.0).is_ok());
        assert!(Grid3::new(2, 1.0).is_err());
        assert!(Grid3::new(7, 1.0).is_err());
        assert!(Grid3::new(8, 0.0).is_err());
    }

    #[test]
    fn lattice_has_single_zero_and_nyquist_is_negative() {
        let g = Grid3::new(8, 2.0 * PI).unwrap();
        let zeros = (0..g.len()).filter(|&i| g.wavevector(i) == [0.0; 3]).count();
        assert_eq!(zeros, 1);
        assert_eq!(g.mode(4), -4);
        assert_eq!(g.mode(7), -1);
        assert_eq!(g.spectral_index([-1, 2, -4]), g.index(7, 2, 4));
    }

    #[test]
    fn fft_round_trip_and_parseval() {
        let g = Grid3::new(16, 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_samples(&g, &mut rng);
        let hat = u.spectrum();
        let back = ScalarField::from_spectrum(&g, hat.clone()).unwrap();
        assert!(rel(&back, &u) <= 1e-13);
        let e_real: f64 = u.values().iter().map(|c| c.norm_sqr()).sum();
        let e_hat: f64 = hat.iter().map(|c| c.norm_sqr()).sum::<f64>() / g.len() as f64;
        assert!((e_real - e_hat).abs() / e_real <= 1e-13);
    }

    #[test]
    fn forward_transform_of_plane_wave_is_a_spike() {
        let g = Grid3::new(8, 2.0 * PI).unwrap();
        let u = ScalarField::plane_wave(&g, [1, -2, 3], C64::new(1.0, 0.0));
        let hat = u.spectrum();
        let idx = g.spectral_index([1, -2, 3]);
        assert!((hat[idx] - C64::new(g.len() as f64, 0.0)).norm() < 1e-9);
        let rest: f64 = hat
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != idx)
            .map(|(_, c)| c.norm())
            .sum();
        assert!(rest < 1e-8);
    }

    #[test]
    fn frac_laplacian_examples() {
        let g = Grid3::new(8, 2.0 * PI).unwrap();
        let one = C64::new(1.0, 0.0);
        let u1 = ScalarField::plane_wave(&g, [1, 0, 0], one);
        assert!(rel(&frac_laplacian(&u1, 0.75).unwrap(), &u1) < 1e-13);
        let u2 = ScalarField::plane_wave(&g, [2, 0, 0], one);
        assert!(rel(&frac_laplacian(&u2, 0.5).unwrap(), &(&u2 * 2.0)) < 1e-13);
        let c = ScalarField::from_fn(&g, |_| one);
        assert!(frac_laplacian(&c, 0.5).unwrap().max_abs() < 1e-14);
        let same = frac_laplacian(&u2, 0.0).unwrap();
        assert_eq!(same.values(), u2.values());
    }

    #[test]
    fn frac_laplacian_rejects_non_finite() {
        let g = Grid3::new(4, 1.0).unwrap();
        let mut u = ScalarField::zeros(&g);
        u.values_mut()[17] = C64::new(f64::NAN, 0.0);
        assert_eq!(frac_laplacian(&u, 0.5).unwrap_err(), FracError::NonFinite { index: 17 });
    }

    #[test]
    fn riesz_examples_and_range() {
        let g = Grid3::new(8, 2.0 * PI).unwrap();
        let one = C64::new(1.0, 0.0);
        let u = ScalarField::plane_wave(&g, [2, 0, 0], one);
        let r = riesz_potential(&u, 0.5).unwrap();
        assert!(rel(&r, &(&u * 2f64.powf(-0.5))) < 1e-13);
        let c = ScalarField::from_fn(&g, |_| one);
        assert!(riesz_potential(&c, 1.0).unwrap().max_abs() < 1e-14);
        assert!(riesz_potential(&u, 0.0).is_err());
        assert!(riesz_potential(&u, 3.0).is_err());
    }

    #[test]
    fn riesz_inverts_frac_laplacian_on_zero_mean() {
        let g = Grid3::new(16, 5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_samples(&g, &mut rng);
        let m = u.mean();
        let u0 = u.map(|c| c - m);
        let back = frac_laplacian(&riesz_potential(&u0, 1.0).unwrap(), 0.5).unwrap();
        assert!(rel(&back, &u0) <= 1e-12);
        let back2 = riesz_potential(&frac_laplacian(&u, 0.25).unwrap(), 0.5).unwrap();
        assert!(rel(&back2, &u0) <= 1e-12);
    }

    #[test]
    fn vector_identities() {
        let g = Grid3::new(16, 4.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_samples(&g, &mut rng);
        let v = random_band_limited_vector(&g, 8, &mut rng);
        let gu = grad(&u);
        assert!(curl(&gu).norm() <= 1e-13 * gu.norm() * g.dk() * g.n() as f64);
        let cv = curl(&v);
        assert!(div(&cv).norm() <= 1e-13 * cv.norm() * g.dk() * g.n() as f64);
        // curl curl = grad div - Δ
        let lap = frac_laplacian(&v, 1.0).unwrap();
        let rhs = &grad(&div(&v)) + &lap;
        let lhs = curl_curl(&v);
        assert!((&lhs - &rhs).norm() <= 1e-13 * lhs.norm());
    }

    #[test]
    fn curl_curl_plane_wave() {
        let g = Grid3::new(8, 2.0 * PI).unwrap();
        let amp = [C64::new(1.0, 0.5), C64::new(-0.3, 0.0), C64::new(0.0, 2.0)];
        let m = [1, 2, 0];
        let v = VectorField3::plane_wave(&g, m, amp);
        let xi = [1.0, 2.0, 0.0];
        let xx = 5.0;
        let xa = xi[0] * amp[0] + xi[1] * amp[1];
        let expect = VectorField3::plane_wave(&g, m, [0, 1, 2].map(|c| xx * amp[c] - xi[c] * xa));
        assert!((&curl_curl(&v) - &expect).norm() < 1e-12 * expect.norm());
    }

    #[test]
    fn mismatched_components_are_rejected() {
        let a = Grid3::new(4, 1.0).unwrap();
        let b = Grid3::new(4, 2.0).unwrap();
        let r = VectorField3::from_components(ScalarField::zeros(&a), ScalarField::zeros(&b), ScalarField::zeros(&a));
        assert!(matches!(r, Err(FracError::GridMismatch(_))));
    }

    #[test]
    fn matrix_multiplier_zero_mode_policies() {
        let g = Grid3::new(4, 1.0).unwrap();
        let one = C64::new(1.0, 0.0);
        let c = VectorField3::from_fn(&g, |_| [one, one * 2.0, one * 3.0]);
        let id = |_xi: [f64; 3]| {
            let mut m = [[ZERO; 3]; 3];
            (0..3).for_each(|i| m[i][i] = C64::new(1.0, 0.0));
            m
        };
        let keep = MultiplierSpec::matrix(id, ZeroMode::Value(C64::new(2.0, 0.0)))
            .apply_vector(&c)
            .unwrap();
        assert!((&keep - &(&c * 2.0)).norm() < 1e-13);
        let kill = MultiplierSpec::matrix(id, ZeroMode::Annihilate)
            .apply_vector(&c)
            .unwrap();
        assert_eq!(kill.max_abs(), 0.0);
        assert!(MultiplierSpec::matrix(id, ZeroMode::Annihilate)
            .apply_scalar(c.component(0))
            .is_err());
    }

    #[test]
    fn weighted_norm_examples() {
        let g = Grid3::new(8, 2.0 * PI).unwrap();
        let p = WeightedNormParams { delta: 0.0, s: 0.5 };
        let z = weighted_norms(&ScalarField::zeros(&g), p).unwrap();
        assert_eq!((z.l2_delta, z.hs_delta), (0.0, 0.0));
        let u = ScalarField::plane_wave(&g, [2, 0, 0], C64::new(1.0, 0.0));
        let w = weighted_norms(&u, p).unwrap();
        let expect = g.volume() * 3.0;
        assert!((w.hs_delta.powi(2) - expect).abs() < 1e-12 * expect);
        let w1 = weighted_norms(&u, WeightedNormParams { delta: 1.0, s: 0.5 }).unwrap();
        assert!(w1.hs_delta >= w.hs_delta);
        assert!(weighted_norms(&u, WeightedNormParams { delta: -1.0, s: 0.5 }).is_err());
    }

    #[test]
    fn interpolant_reproduces_samples_and_is_real_for_real_data() {
        let g = Grid3::new(8, 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random_samples(&g, &mut rng).map(|c| C64::new(c.re, 0.0));
        let it = TrigInterpolant::new(&u);
        for idx in [0, 13, 200, 511] {
            assert!((it.eval(g.point(idx)) - u.values()[idx]).norm() < 1e-12);
        }
        assert!(it.eval([0.123, 1.7, 2.9]).im.abs() < 1e-12);
    }

    #[test]
    fn interpolant_is_exact_for_band_limited_waves() {
        let g = Grid3::new(8, 2.0 * PI).unwrap();
        let u = ScalarField::plane_wave(&g, [1, -2, 3], C64::new(0.5, -1.0));
        let it = TrigInterpolant::new(&u);
        let x = [0.3, 1.1, 4.2];
        let exact = C64::new(0.5, -1.0) * C64::from_polar(1.0, x[0] - 2.0 * x[1] + 3.0 * x[2]);
        assert!((it.eval(x) - exact).norm() < 1e-12);
    }
}
