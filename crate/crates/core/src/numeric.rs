//! Configurable-precision complex arithmetic and a simultaneous-iteration
//! polynomial root finder.
//!
//! Roots are found per square-free factor (exact Yun decomposition first), so
//! every iteration works on simple roots and multiplicities are exact.

use std::ops::{Add, Div, Mul, Neg, Sub};

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use dashu_int::{IBig, UBig};
use num_bigint::{BigInt, Sign};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exact::RationalPoly;

/// Binary floating point with a per-value precision.
pub type MpFloat = FBig<HalfEven, 2>;

/// Default working precision in bits.
pub const DEFAULT_PRECISION_BITS: usize = 128;

/// Corrections below this (relative) stop the refinement.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-20;

const MAX_F64_ITERATIONS: usize = 800;
const MAX_MP_ITERATIONS: usize = 200;

/// Working-precision context; every constant it creates carries `bits`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Precision {
    bits: usize,
}

impl Precision {
    pub fn new(bits: usize) -> Result<Self> {
        if !(53..=1 << 16).contains(&bits) {
            return Err(Error::invalid(format!("precision of {bits} bits out of range 53..=65536")));
        }
        Ok(Precision { bits })
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn zero(&self) -> MpFloat {
        self.int(&BigInt::zero())
    }

    pub fn int(&self, n: &BigInt) -> MpFloat {
        let (sign, bytes) = n.to_bytes_le();
        let mag = IBig::from(UBig::from_le_bytes(&bytes));
        let v = if sign == Sign::Minus { -mag } else { mag };
        MpFloat::from(v).with_precision(self.bits).value()
    }

    pub fn small(&self, n: i64) -> MpFloat {
        MpFloat::from(n).with_precision(self.bits).value()
    }

    pub fn rational(&self, r: &BigRational) -> MpFloat {
        self.int(r.numer()) / self.int(r.denom())
    }

    pub fn from_f64(&self, x: f64) -> MpFloat {
        MpFloat::try_from(x)
            .expect("finite f64")
            .with_precision(self.bits)
            .value()
    }

    pub fn complex(&self, z: Complex64) -> MpComplex {
        MpComplex {
            re: self.from_f64(z.re),
            im: self.from_f64(z.im),
        }
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision { bits: DEFAULT_PRECISION_BITS }
    }
}

pub fn mp_to_f64(x: &MpFloat) -> f64 {
    x.to_f64().value()
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpComplex {
    pub re: MpFloat,
    pub im: MpFloat,
}

impl MpComplex {
    pub fn real(re: MpFloat, prec: &Precision) -> Self {
        MpComplex { re, im: prec.zero() }
    }

    pub fn norm_sqr(&self) -> MpFloat {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn abs(&self) -> MpFloat {
        self.norm_sqr().sqrt()
    }

    pub fn conj(&self) -> Self {
        MpComplex { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(mp_to_f64(&self.re), mp_to_f64(&self.im))
    }

    pub fn is_zero(&self) -> bool {
        self.re == MpFloat::ZERO && self.im == MpFloat::ZERO
    }

    pub fn recip(&self) -> Self {
        let n = self.norm_sqr();
        MpComplex { re: &self.re / &n, im: -(&self.im / &n) }
    }
}

impl Add for &MpComplex {
    type Output = MpComplex;
    fn add(self, rhs: &MpComplex) -> MpComplex {
        MpComplex { re: &self.re + &rhs.re, im: &self.im + &rhs.im }
    }
}

impl Sub for &MpComplex {
    type Output = MpComplex;
    fn sub(self, rhs: &MpComplex) -> MpComplex {
        MpComplex { re: &self.re - &rhs.re, im: &self.im - &rhs.im }
    }
}

impl Mul for &MpComplex {
    type Output = MpComplex;
    fn mul(self, rhs: &MpComplex) -> MpComplex {
        MpComplex {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }
}

impl Div for &MpComplex {
    type Output = MpComplex;
    fn div(self, rhs: &MpComplex) -> MpComplex {
        let n = rhs.norm_sqr();
        MpComplex {
            re: (&self.re * &rhs.re + &self.im * &rhs.im) / &n,
            im: (&self.im * &rhs.re - &self.re * &rhs.im) / &n,
        }
    }
}

impl Neg for &MpComplex {
    type Output = MpComplex;
    fn neg(self) -> MpComplex {
        MpComplex { re: -self.re.clone(), im: -self.im.clone() }
    }
}

/// A distinct root and its exact multiplicity.
#[derive(Clone, Debug)]
pub struct Root {
    pub value: MpComplex,
    pub multiplicity: usize,
}

/// All complex roots of a nonzero polynomial, grouped by multiplicity.
pub fn find_roots(poly: &RationalPoly, prec: &Precision) -> Result<Vec<Root>> {
    let factors = poly.squarefree_decomposition()?;
    let mut out = Vec::new();
    for (k, factor) in factors.iter().enumerate() {
        if factor.degree().unwrap_or(0) == 0 {
            continue;
        }
        let coeffs = factor
            .primitive_part()
            .to_integers()
            .expect("primitive part is integral");
        for value in simple_roots(&coeffs, prec)? {
            out.push(Root { value, multiplicity: k + 1 });
        }
    }
    Ok(out)
}

/// Roots expanded by multiplicity.
pub fn find_roots_flat(poly: &RationalPoly, prec: &Precision) -> Result<Vec<MpComplex>> {
    Ok(find_roots(poly, prec)?
        .into_iter()
        .flat_map(|r| std::iter::repeat_n(r.value, r.multiplicity))
        .collect())
}

/// Roots of a square-free integer polynomial: f64 Aberth iteration for a
/// start, then Aberth refinement at full precision.
fn simple_roots(coeffs: &[BigInt], prec: &Precision) -> Result<Vec<MpComplex>> {
    let n = coeffs.len() - 1;
    if n == 1 {
        let r = -(prec.int(&coeffs[0]) / prec.int(&coeffs[1]));
        return Ok(vec![MpComplex::real(r, prec)]);
    }
    let approx = aberth_f64(coeffs);
    let mp_coeffs: Vec<MpComplex> = coeffs
        .iter()
        .map(|c| MpComplex::real(prec.int(c), prec))
        .collect();
    let mut z: Vec<MpComplex> = approx.iter().map(|&c| prec.complex(c)).collect();
    let tol = prec.from_f64(CONVERGENCE_TOLERANCE.max(2f64.powi(-(prec.bits() as i32) + 8)));
    let one = prec.small(1);
    for _ in 0..MAX_MP_ITERATIONS {
        let mut converged = true;
        for i in 0..n {
            let (p, dp) = eval_with_derivative(&mp_coeffs, &z[i]);
            if p.is_zero() {
                continue;
            }
            let ratio = &p / &dp;
            let mut sum = MpComplex::real(prec.zero(), prec);
            for (j, zj) in z.iter().enumerate() {
                if j != i {
                    sum = &sum + &(&z[i] - zj).recip();
                }
            }
            let denom = &MpComplex::real(one.clone(), prec) - &(&ratio * &sum);
            let step = &ratio / &denom;
            let scale = z[i].abs().max(one.clone());
            if step.abs() > &tol * &scale {
                converged = false;
            }
            z[i] = &z[i] - &step;
        }
        if converged {
            return Ok(z);
        }
    }
    Err(Error::Precision(format!(
        "root refinement did not converge at {} bits for a degree-{n} factor",
        prec.bits()
    )))
}

fn eval_with_derivative(coeffs: &[MpComplex], z: &MpComplex) -> (MpComplex, MpComplex) {
    let mut p = coeffs[coeffs.len() - 1].clone();
    // zero at the working precision
    #[allow(clippy::eq_op)]
    let mut dp = &p - &p;
    for c in coeffs.iter().rev().skip(1) {
        dp = &(&dp * z) + &p;
        p = &(&p * z) + c;
    }
    (p, dp)
}

fn aberth_f64(coeffs: &[BigInt]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    // Scale so the largest coefficient is near 1 to keep f64 in range.
    let max_bits = coeffs.iter().map(|c| c.bits()).max().unwrap_or(0) as i32;
    let shift = (max_bits - 60).max(0);
    let c: Vec<f64> = coeffs
        .iter()
        .map(|x| {
            let v = x.to_f64().unwrap_or(0.0);
            if shift > 0 { v * 2f64.powi(-shift) } else { v }
        })
        .collect();
    let lead = c[n];
    let c: Vec<Complex64> = c.iter().map(|&x| Complex64::new(x / lead, 0.0)).collect();
    let radius = (c[0].norm()).powf(1.0 / n as f64).max(1e-3);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * (k as f64) / (n as f64) + 0.4;
            Complex64::from_polar(radius * 1.01, t)
        })
        .collect();
    for _ in 0..MAX_F64_ITERATIONS {
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let (mut p, mut dp) = (c[n], Complex64::new(0.0, 0.0));
            for k in (0..n).rev() {
                dp = dp * z[i] + p;
                p = p * z[i] + c[k];
            }
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let mut sum = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    let d = z[i] - z[j];
                    if d.norm() > 0.0 {
                        sum += d.inv();
                    }
                }
            }
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * sum);
            if step.is_finite() {
                z[i] -= step;
                worst = worst.max(step.norm() / z[i].norm().max(1.0));
            }
        }
        if worst < 1e-14 {
            break;
        }
    }
    z
}
