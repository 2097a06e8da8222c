//! Exact substrate: big rationals, dense rational polynomials, resultants,
//! interpolation and root-multiplicity extraction. Nothing in here rounds.

mod poly;

pub use poly::RationalPoly;

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Shorthand used across the crate.
pub fn rat(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

/// `∏ g(α)` over the roots `α` of the monic polynomial `f`, counted with
/// multiplicity. Equals 1 when `f` is constant.
pub fn resultant(f: &RationalPoly, g: &RationalPoly) -> Result<BigRational> {
    if !f.is_monic() {
        return Err(Error::invalid(format!("resultant needs a monic first argument, got {f}")));
    }
    Ok(resultant_euclid(f.clone(), g.clone()))
}

/// Classical resultant `lc(a)^{deg b} ∏ b(α)` via the Euclidean remainder
/// sequence over the rationals.
fn resultant_euclid(mut a: RationalPoly, mut b: RationalPoly) -> BigRational {
    let mut acc = BigRational::one();
    loop {
        let (Some(da), Some(db)) = (a.degree(), b.degree()) else {
            return BigRational::zero();
        };
        if da == 0 {
            return acc * num_traits::pow(a.coeff(0), db);
        }
        if db == 0 {
            return acc * num_traits::pow(b.coeff(0), da);
        }
        if da < db {
            if (da * db) % 2 == 1 {
                acc = -acc;
            }
            std::mem::swap(&mut a, &mut b);
            continue;
        }
        // Res(a, b) = (-1)^{da·db} lc(b)^{da - dr} Res(b, a mod b)
        let (_, r) = a.div_rem(&b).expect("b is nonzero");
        let Some(dr) = r.degree() else {
            return BigRational::zero();
        };
        if (da * db) % 2 == 1 {
            acc = -acc;
        }
        acc *= num_traits::pow(b.leading().cloned().expect("nonzero"), da - dr);
        a = b;
        b = r;
    }
}

/// Determinant of a square integer matrix by fraction-free (Bareiss)
/// elimination. Every division is exact.
pub fn determinant(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            let Some(r) = (k + 1..n).find(|&r| !m[r][k].is_zero()) else {
                return BigInt::zero();
            };
            m.swap(k, r);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = v / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}

/// `∏ r(α)` over the roots of a monic integer `h` (lowest coefficient first),
/// as the determinant of multiplication by `r` on `Z[T]/(h)`.
pub fn resultant_monic_int(h: &[BigInt], r: &[BigInt]) -> BigInt {
    let n = h.len() - 1;
    let reduce_shift = |v: &[BigInt]| -> Vec<BigInt> {
        // T·v mod h
        let carry = v[n - 1].clone();
        let mut next = vec![BigInt::zero(); n];
        for i in (1..n).rev() {
            next[i] = &v[i - 1] - &carry * &h[i];
        }
        next[0] = -(&carry * &h[0]);
        next
    };
    // r mod h
    let mut col = vec![BigInt::zero(); n];
    let mut pow = vec![BigInt::zero(); n];
    pow[0] = BigInt::one();
    for c in r {
        if !c.is_zero() {
            for (a, b) in col.iter_mut().zip(&pow) {
                *a += c * b;
            }
        }
        pow = reduce_shift(&pow);
    }
    let mut cols = Vec::with_capacity(n);
    for _ in 0..n {
        let next = reduce_shift(&col);
        cols.push(col);
        col = next;
    }
    let rows = (0..n).map(|i| cols.iter().map(|c| c[i].clone()).collect()).collect();
    determinant(rows)
}

/// Unique polynomial of degree below `points.len()` through all points.
pub fn interpolate(points: &[(BigRational, BigRational)]) -> Result<RationalPoly> {
    let mut seen = HashSet::with_capacity(points.len());
    for (x, _) in points {
        if !seen.insert(x) {
            return Err(Error::invalid(format!("duplicate interpolation abscissa {x}")));
        }
    }
    let n = points.len();
    // Newton divided differences, in place.
    let mut dd: Vec<BigRational> = points.iter().map(|(_, y)| y.clone()).collect();
    for level in 1..n {
        for i in (level..n).rev() {
            let num = &dd[i] - &dd[i - 1];
            let den = &points[i].0 - &points[i - level].0;
            dd[i] = num / den;
        }
    }
    // Horner on the Newton form.
    let mut acc = RationalPoly::zero();
    for i in (0..n).rev() {
        acc = &(&acc * &RationalPoly::linear_root(points[i].0.clone()))
            + &RationalPoly::constant(dd[i].clone());
    }
    Ok(acc)
}

/// Interpolation through `(k, values[k])` for `k = 0..values.len()`, using
/// integer forward differences. Same result as [`interpolate`] on those
/// points, much cheaper for long integer samples: the Newton form is
/// expanded over the integers scaled by `(n-1)!` and divided once at the end.
pub fn interpolate_consecutive(values: &[BigInt]) -> RationalPoly {
    let n = values.len();
    if n == 0 {
        return RationalPoly::zero();
    }
    let mut diffs = values.to_vec();
    for level in 1..n {
        for i in (level..n).rev() {
            diffs[i] = &diffs[i] - &diffs[i - 1];
        }
    }
    // acc = Σ_i Δ^i ((n-1)!/i!) ∏_{k<i} (x - k), by Horner from the top
    let mut acc: Vec<BigInt> = Vec::with_capacity(n);
    let mut scale = BigInt::one();
    for i in (0..n).rev() {
        if i + 1 < n {
            scale *= i + 1;
        }
        // acc *= (x - i)
        acc.insert(0, BigInt::zero());
        for k in 0..acc.len() - 1 {
            let t = &acc[k + 1] * i;
            acc[k] -= t;
        }
        acc[0] += &diffs[i] * &scale;
    }
    RationalPoly::from_coeffs(acc.into_iter().map(|c| BigRational::new(c, scale.clone())).collect())
}

/// `(s-1)`-adic valuation of a nonzero polynomial together with the exact
/// cofactor `G / (s-1)^k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiplicityAtOne {
    pub multiplicity: usize,
    pub quotient: RationalPoly,
}

impl MultiplicityAtOne {
    /// Value of the cofactor at `s = 1`; never zero.
    pub fn quotient_at_one(&self) -> BigRational {
        self.quotient.coeffs().iter().sum()
    }
}

pub fn multiplicity_at_one(g: &RationalPoly) -> Result<MultiplicityAtOne> {
    if g.is_zero() {
        return Err(Error::invalid("multiplicity of the zero polynomial"));
    }
    let mut current = g.coeffs().to_vec();
    let mut k = 0;
    loop {
        // synthetic division by (s - 1)
        let n = current.len();
        if n == 1 {
            break;
        }
        let mut quot = vec![BigRational::zero(); n - 1];
        let mut carry = BigRational::zero();
        for i in (1..n).rev() {
            carry += &current[i];
            quot[i - 1] = carry.clone();
        }
        let remainder = carry + &current[0];
        if !remainder.is_zero() {
            break;
        }
        current = quot;
        k += 1;
    }
    Ok(MultiplicityAtOne {
        multiplicity: k,
        quotient: RationalPoly::from_coeffs(current),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> RationalPoly {
        RationalPoly::from_ints(c.iter().copied())
    }

    #[test]
    fn resultant_examples() {
        assert_eq!(resultant(&p(&[-2, 1]), &p(&[1, 0, 1])).unwrap(), rat(5));
        assert_eq!(resultant(&p(&[2, 2, 1]), &p(&[1, 0, 1])).unwrap(), rat(5));
        assert_eq!(resultant(&p(&[2, 2, 1]), &p(&[2, 2, 1])).unwrap(), rat(0));
        assert_eq!(resultant(&p(&[1]), &p(&[7, 3, 1])).unwrap(), rat(1));
        assert!(resultant(&p(&[2, 2]), &p(&[1, 1])).is_err());
    }

    #[test]
    fn resultant_with_constant_and_zero_second_argument() {
        // product of the constant over the two roots
        assert_eq!(resultant(&p(&[2, 2, 1]), &p(&[3])).unwrap(), rat(9));
        assert_eq!(resultant(&p(&[2, 2, 1]), &RationalPoly::zero()).unwrap(), rat(0));
    }

    #[test]
    fn interpolate_examples() {
        let pts = |v: &[(i64, i64)]| -> Vec<(BigRational, BigRational)> {
            v.iter().map(|&(x, y)| (rat(x), rat(y))).collect()
        };
        assert_eq!(interpolate(&pts(&[(0, 1), (1, 3)])).unwrap(), p(&[1, 2]));
        assert_eq!(interpolate(&pts(&[(0, 0), (1, 0), (2, 2)])).unwrap(), p(&[0, -1, 1]));
        assert_eq!(interpolate(&pts(&[(5, 7)])).unwrap(), p(&[7]));
        assert!(interpolate(&pts(&[(1, 1), (1, 2)])).is_err());
        assert_eq!(interpolate(&[]).unwrap(), RationalPoly::zero());
    }

    #[test]
    fn consecutive_matches_general_interpolation() {
        let poly = p(&[4, -3, 0, 2, -1, 5]);
        let values: Vec<BigInt> = (0..6).map(|s| poly.eval(&rat(s)).to_integer()).collect();
        assert_eq!(interpolate_consecutive(&values), poly);
    }

    #[test]
    fn multiplicity_examples() {
        // 4(1-s)^2(1+s^2) = 4 - 8s + 8s^2 - 8s^3 + 4s^4
        let g = p(&[4, -8, 8, -8, 4]);
        let m = multiplicity_at_one(&g).unwrap();
        assert_eq!(m.multiplicity, 2);
        assert_eq!(m.quotient_at_one(), rat(8));
        assert_eq!(multiplicity_at_one(&p(&[-1, 1])).unwrap().multiplicity, 1);
        assert_eq!(multiplicity_at_one(&p(&[5])).unwrap().multiplicity, 0);
        assert!(multiplicity_at_one(&RationalPoly::zero()).is_err());
    }
}
