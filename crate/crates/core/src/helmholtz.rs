//! Fractional Helmholtz decomposition through potential pairs.
//!
//! A two-point field `D*φ + C*A` with `∇·A = 0` is stored as `(φ, A)`. Its
//! projection is `Π(D*φ + C*A) = I_{1-s}(∇φ + ∇×A)`.

use crate::error::{invalid, FracError, Result};
use crate::nonlocal::{
    AlphaKernel, ConstantsLedger, KernelNormalization, TwoPointField, VectorInterpolant, VectorSource,
};
use crate::spectral::{
    self, cross, frac_laplacian, map_vector_spectrum, Grid3, ScalarField, TrigInterpolant, VectorField3, C64, I, ZERO,
};

/// Largest `gauge_ratio` accepted by `pi` and `tilde_curl`.
pub const GAUGE_TOL: f64 = 1e-9;

fn check_order(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(invalid("s", format!("fractional order must lie in (0, 1), got {s}")))
    }
}

/// Two-point field `D*φ + C*A` represented by its potentials.
#[derive(Clone, Debug)]
pub struct FhdElement {
    pub s: f64,
    pub phi: ScalarField,
    pub a: VectorField3,
}

impl FhdElement {
    pub fn new(s: f64, phi: ScalarField, a: VectorField3) -> Result<Self> {
        check_order(s)?;
        phi.grid().check_same(a.grid())?;
        let e = Self { s, phi, a };
        e.check_gauge()?;
        Ok(e)
    }

    pub fn zeros(grid: &Grid3, s: f64) -> Result<Self> {
        Self::new(s, ScalarField::zeros(grid), VectorField3::zeros(grid))
    }

    pub fn grid(&self) -> &Grid3 {
        self.phi.grid()
    }

    /// `‖div a‖ / (‖∇φ‖ + ‖∇×a‖ + ‖div a‖)`, zero for a constant element.
    /// Measured against all first derivatives so that a roundoff-sized `a`
    /// next to a large `φ` is not flagged.
    pub fn gauge_ratio(&self) -> f64 {
        let d = spectral::div(&self.a).norm();
        let total = spectral::grad(&self.phi).norm() + spectral::curl(&self.a).norm() + d;
        if total == 0.0 {
            0.0
        } else {
            d / total
        }
    }

    pub fn check_gauge(&self) -> Result<()> {
        let ratio = self.gauge_ratio();
        if ratio > GAUGE_TOL {
            Err(FracError::GaugeViolation { ratio })
        } else {
            Ok(())
        }
    }

    pub fn add(&self, other: &FhdElement) -> Result<FhdElement> {
        if self.s != other.s {
            return Err(invalid("s", "elements of different order"));
        }
        self.grid().check_same(other.grid())?;
        Ok(FhdElement {
            s: self.s,
            phi: &self.phi + &other.phi,
            a: &self.a + &other.a,
        })
    }

    /// Pointwise evaluator of the two-point field.
    pub fn two_point(&self) -> Result<FhdTwoPoint> {
        Ok(FhdTwoPoint {
            phi: TrigInterpolant::new(&self.phi),
            a: VectorInterpolant::new(&self.a),
            kernel: ConstantsLedger::new(self.s, KernelNormalization::default())?.kernel(),
        })
    }
}

/// `(φ(y)-φ(x))α + α×(A(y)-A(x))` with interpolated potentials.
pub struct FhdTwoPoint {
    phi: TrigInterpolant,
    a: VectorInterpolant,
    kernel: AlphaKernel,
}

impl TwoPointField for FhdTwoPoint {
    fn value(&self, x: [f64; 3], y: [f64; 3]) -> [C64; 3] {
        let z = [y[0] - x[0], y[1] - x[1], y[2] - x[2]];
        let al = self.kernel.at(z);
        let dphi = self.phi.eval(y) - self.phi.eval(x);
        let ay = self.a.value(y);
        let ax = self.a.value(x);
        let da = [ay[0] - ax[0], ay[1] - ax[1], ay[2] - ax[2]];
        let c = cross(al, da);
        [0, 1, 2].map(|i| al[i] * dphi + c[i])
    }
}

/// Evaluates `D*φ + C*A` at one pair. Builds interpolants on every call; use
/// `FhdElement::two_point` for repeated evaluation.
pub fn two_point_eval(e: &FhdElement, x: [f64; 3], y: [f64; 3]) -> Result<[C64; 3]> {
    e.two_point()?.eval(x, y)
}

/// `Π D* f = I_{1-s}∇f`, multiplier `|ξ|^{s-1} iξ`.
pub fn pi_dstar(f: &ScalarField, s: f64) -> Result<VectorField3> {
    check_order(s)?;
    let grid = f.grid().clone();
    let hat = f.spectrum();
    let hats = [0, 1, 2].map(|c| {
        hat.iter()
            .enumerate()
            .map(|(idx, &h)| {
                if idx == 0 {
                    return ZERO;
                }
                let xi = grid.odd_wavevector(idx);
                let r = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
                if r == 0.0 {
                    return ZERO;
                }
                I * xi[c] * r.powf(s - 1.0) * h
            })
            .collect::<Vec<_>>()
    });
    VectorField3::from_spectra(&grid, hats)
}

/// `Π C* f = I_{1-s}∇×f`, multiplier `|ξ|^{s-1} iξ×`.
pub fn pi_cstar(f: &VectorField3, s: f64) -> Result<VectorField3> {
    check_order(s)?;
    Ok(pi_cstar_unchecked(f, s))
}

/// Same symbol for any real `s`; `s = 1` gives the classical curl.
pub(crate) fn pi_cstar_unchecked(f: &VectorField3, s: f64) -> VectorField3 {
    map_vector_spectrum(
        f,
        |xi, w| {
            let r = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
            if r == 0.0 {
                return [ZERO; 3];
            }
            let m = r.powf(s - 1.0);
            cross(xi, w).map(|c| I * c * m)
        },
        true,
    )
}

/// Classical Helmholtz potentials of a one-point field.
#[derive(Clone, Debug)]
pub struct ClassicalParts {
    pub phi_t: ScalarField,
    pub a_t: VectorField3,
    /// Mean of each component, which no potential pair can represent.
    /// Pure Nyquist modes are dropped as well.
    pub zero_mode: [C64; 3],
}

/// `v = ∇φ_t + ∇×a_t + mean(v)` with `φ̂_t = -i(ξ·v̂)/|ξ|^2` and
/// `â_t = iξ×v̂/|ξ|^2`.
pub fn classical_decompose(v: &VectorField3) -> ClassicalParts {
    let grid = v.grid().clone();
    let [hx, hy, hz] = v.spectra();
    let n3 = grid.len() as f64;
    let zero_mode = [hx[0] / n3, hy[0] / n3, hz[0] / n3];
    let mut phi = vec![ZERO; grid.len()];
    let mut a = [vec![ZERO; grid.len()], vec![ZERO; grid.len()], vec![ZERO; grid.len()]];
    for idx in 1..grid.len() {
        let xi = grid.odd_wavevector(idx);
        let r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        if r2 == 0.0 {
            continue;
        }
        let w = [hx[idx], hy[idx], hz[idx]];
        phi[idx] = -I * (xi[0] * w[0] + xi[1] * w[1] + xi[2] * w[2]) / r2;
        let c = cross(xi, w);
        for k in 0..3 {
            a[k][idx] = I * c[k] / r2;
        }
    }
    ClassicalParts {
        phi_t: ScalarField::from_spectrum(&grid, phi).expect("spectrum sized by grid"),
        a_t: VectorField3::from_spectra(&grid, a).expect("spectra sized by grid"),
        zero_mode,
    }
}

/// Potentials `φ = (-Δ)^{(1-s)/2} φ_t`, `A = (-Δ)^{(1-s)/2} a_t`.
pub fn pi_inverse(v_t: &VectorField3, s: f64) -> Result<FhdElement> {
    check_order(s)?;
    let parts = classical_decompose(v_t);
    let t = (1.0 - s) / 2.0;
    Ok(FhdElement {
        s,
        phi: frac_laplacian(&parts.phi_t, t)?,
        a: frac_laplacian(&parts.a_t, t)?,
    })
}

/// `Π(D*φ + C*A) = I_{1-s}(∇φ + ∇×A)`.
pub fn pi(e: &FhdElement) -> Result<VectorField3> {
    e.check_gauge()?;
    Ok(&pi_dstar(&e.phi, e.s)? + &pi_cstar(&e.a, e.s)?)
}

/// Two-point curl: the element with potentials `(0, I_{1-s}∇×A)`.
pub fn tilde_curl(e: &FhdElement) -> Result<FhdElement> {
    e.check_gauge()?;
    Ok(FhdElement {
        s: e.s,
        phi: ScalarField::zeros(e.grid()),
        a: pi_cstar(&e.a, e.s)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{curl, div, grad, random_band_limited, random_band_limited_vector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn rel(a: &VectorField3, b: &VectorField3) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    fn grid() -> Grid3 {
        Grid3::new(16, 2.0 * PI).unwrap()
    }

    #[test]
    fn pi_dstar_symbol_example() {
        let g = Grid3::new(8, 2.0 * PI).unwrap();
        let f = ScalarField::plane_wave(&g, [2, 0, 0], C64::new(1.0, 0.0));
        let out = pi_dstar(&f, 0.5).unwrap();
        let expect = VectorField3::plane_wave(&g, [2, 0, 0], [C64::new(0.0, 2f64.sqrt()), ZERO, ZERO]);
        assert!(rel(&out, &expect) < 1e-13);
        assert!(pi_dstar(&f, 1.0).is_err());
        assert!(pi_dstar(&f, 0.0).is_err());
    }

    #[test]
    fn pi_cstar_kills_pi_dstar() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = random_band_limited(&g, 7, &mut rng);
        let d = pi_dstar(&f, 0.6).unwrap();
        assert!(pi_cstar(&d, 0.6).unwrap().norm() <= 1e-13 * d.norm());
    }

    #[test]
    fn classical_decomposition_reconstructs() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let v = random_band_limited_vector(&g, 8, &mut rng);
        let p = classical_decompose(&v);
        let gp = grad(&p.phi_t);
        let ca = curl(&p.a_t);
        assert!(rel(&(&gp + &ca), &v) <= 1e-12);
        assert!(div(&p.a_t).norm() <= 1e-12 * p.a_t.norm());
        assert!(gp.dot(&ca).norm() <= 1e-12 * gp.norm() * ca.norm());
    }

    #[test]
    fn classical_decomposition_of_pure_parts() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let phi = random_band_limited(&g, 5, &mut rng);
        let p = classical_decompose(&grad(&phi));
        assert!(p.a_t.norm() <= 1e-13 * phi.norm());
        let w = random_band_limited_vector(&g, 5, &mut rng);
        let q = classical_decompose(&curl(&w));
        assert!(q.phi_t.norm() <= 1e-13 * w.norm());
    }

    #[test]
    fn zero_mode_is_recorded() {
        let g = Grid3::new(8, 1.0).unwrap();
        let c = VectorField3::from_fn(&g, |_| [C64::new(1.0, 0.0), C64::new(0.0, 2.0), ZERO]);
        let p = classical_decompose(&c);
        assert!((p.zero_mode[1] - C64::new(0.0, 2.0)).norm() < 1e-14);
        assert!(p.phi_t.norm() == 0.0 && p.a_t.norm() == 0.0);
    }

    #[test]
    fn round_trips() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let v = random_band_limited_vector(&g, 8, &mut rng);
        for s in [0.3, 0.5, 0.75, 0.9] {
            let e = pi_inverse(&v, s).unwrap();
            assert!(e.gauge_ratio() <= 1e-12);
            assert!(rel(&pi(&e).unwrap(), &v) <= 1e-12);
            let back = pi_inverse(&pi(&e).unwrap(), s).unwrap();
            assert!((&back.phi - &e.phi).norm() <= 1e-12 * e.phi.norm());
            assert!(rel(&back.a, &e.a) <= 1e-12);
        }
        let z = pi_inverse(&VectorField3::zeros(&g), 0.5).unwrap();
        assert_eq!(z.phi.norm() + z.a.norm(), 0.0);
    }

    #[test]
    fn gauge_violations_are_rejected() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let phi = random_band_limited(&g, 4, &mut rng);
        let bad = FhdElement {
            s: 0.5,
            phi: ScalarField::zeros(&g),
            a: grad(&phi),
        };
        assert!(matches!(pi(&bad), Err(FracError::GaugeViolation { .. })));
        assert!(matches!(tilde_curl(&bad), Err(FracError::GaugeViolation { .. })));
        assert!(FhdElement::new(0.5, ScalarField::zeros(&g), grad(&phi)).is_err());
    }

    #[test]
    fn pi_is_self_adjoint_not_anti_self_adjoint() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let f = random_band_limited_vector(&g, 8, &mut rng);
        let h = random_band_limited_vector(&g, 8, &mut rng);
        let lhs = pi_cstar(&f, 0.5).unwrap().dot(&h);
        let rhs = f.dot(&pi_cstar(&h, 0.5).unwrap());
        assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm());
        assert!((lhs + rhs).norm() > 1.0 * lhs.norm());
    }

    #[test]
    fn tilde_curl_properties() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let v = random_band_limited_vector(&g, 8, &mut rng);
        let e = pi_inverse(&v, 0.7).unwrap();
        let grad_only = FhdElement {
            s: 0.7,
            phi: e.phi.clone(),
            a: VectorField3::zeros(&g),
        };
        let t0 = tilde_curl(&grad_only).unwrap();
        assert_eq!(t0.phi.norm() + t0.a.norm(), 0.0);
        let tt = tilde_curl(&tilde_curl(&e).unwrap()).unwrap();
        assert!(tt.gauge_ratio() <= 1e-12);
        let lhs = pi(&tt).unwrap();
        let rhs = pi_cstar(&pi_cstar(&pi(&e).unwrap(), 0.7).unwrap(), 0.7).unwrap();
        assert!(rel(&lhs, &rhs) <= 1e-12);
    }

    #[test]
    fn two_point_eval_zero_and_symmetry() {
        let g = Grid3::new(8, 2.0 * PI).unwrap();
        let z = FhdElement::zeros(&g, 0.5).unwrap();
        assert_eq!(two_point_eval(&z, [0.1; 3], [0.5; 3]).unwrap(), [ZERO; 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let e = pi_inverse(&random_band_limited_vector(&g, 3, &mut rng), 0.5).unwrap();
        let tp = e.two_point().unwrap();
        let (x, y) = ([0.3, 1.0, 2.0], [1.7, 0.2, 4.0]);
        let a = tp.eval(x, y).unwrap();
        let b = tp.eval(y, x).unwrap();
        assert!((0..3).all(|i| (a[i] - b[i]).norm() < 1e-13));
        assert!(tp.eval(x, x).is_err());
    }
}
