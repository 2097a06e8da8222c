//! Constant surfaces `X × E_0` (or `X × A_0`): the rank and the product
//! `Sha·Δ` from the Frobenius eigenvalues of both factors, the floating
//! point oracle for the same product, and the special value check.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{interpolate_consecutive, multiplicity_at_one, rat, resultant, resultant_monic_int, RationalPoly};
use crate::numeric::{find_roots, find_roots_flat, mp_to_f64, MpComplex, Precision};
use crate::zeta::{ZetaNumerator, WEIL_TOLERANCE};

/// Pairs closer than this (relative to `√q`) are matched by the oracle.
pub const MATCH_THRESHOLD: f64 = 1e-6;
/// Distances in `[MATCH_THRESHOLD, AMBIGUITY_BAND)` are refused.
pub const AMBIGUITY_BAND: f64 = 1e-4;
/// Largest imaginary part tolerated in the oracle product, relative.
pub const IMAGINARY_RESIDUE: f64 = 1e-9;

/// Characteristic polynomial of Frobenius on a `d`-dimensional abelian
/// variety over `F_q`, monic of degree `2d`, lowest coefficient first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IsogenyClassData {
    q: u64,
    d: usize,
    h: Vec<BigInt>,
}

impl IsogenyClassData {
    pub fn new(q: u64, h: Vec<BigInt>) -> Result<Self> {
        if q < 2 {
            return Err(Error::invalid(format!("q = {q} is not a prime power")));
        }
        if h.len() < 3 || h.len().is_multiple_of(2) {
            return Err(Error::invalid("Frobenius polynomial must have even degree 2d ≥ 2"));
        }
        if !h.last().is_some_and(|c| c.is_one()) {
            return Err(Error::invalid("Frobenius polynomial must be monic"));
        }
        let d = (h.len() - 1) / 2;
        let qd = num_traits::pow(BigInt::from(q), d);
        if h[0].abs() != qd {
            return Err(Error::invalid(format!("constant coefficient {} but q^d = {qd}", h[0])));
        }
        let data = IsogenyClassData { q, d, h };
        data.check_weil()?;
        Ok(data)
    }

    /// Infers `q` from `|h(0)| = q^d`.
    pub fn from_poly(h: Vec<BigInt>) -> Result<Self> {
        if h.len() < 3 || h.len().is_multiple_of(2) {
            return Err(Error::invalid("Frobenius polynomial must have even degree 2d ≥ 2"));
        }
        let d = ((h.len() - 1) / 2) as u32;
        let c0 = h[0].abs();
        let q = c0.nth_root(d);
        if num_traits::pow(q.clone(), d as usize) != c0 {
            return Err(Error::invalid(format!("|h(0)| = {c0} is not a d-th power (d = {d})")));
        }
        let q = q
            .to_u64()
            .ok_or_else(|| Error::invalid("field size out of range"))?;
        Self::new(q, h)
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.h
    }

    pub fn as_poly(&self) -> RationalPoly {
        RationalPoly::from_ints(self.h.iter().cloned())
    }

    /// `h^k`, the class of the `k`-fold power, dimension `k·d`.
    pub fn power(&self, k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("power must be at least 1"));
        }
        let hk = self.as_poly().pow(k).to_integers().expect("integer power");
        Ok(IsogenyClassData { q: self.q, d: self.d * k as usize, h: hk })
    }

    /// Trace of Frobenius (`a` with `h = T² - aT + q`) for elliptic data.
    pub fn trace(&self) -> Option<BigInt> {
        (self.d == 1).then(|| -self.h[1].clone())
    }

    fn check_weil(&self) -> Result<()> {
        let sqrt_q = (self.q as f64).sqrt();
        for root in find_roots(&self.as_poly(), &Precision::default())? {
            let z = root.value.to_c64();
            if (z.norm() / sqrt_q - 1.0).abs() > WEIL_TOLERANCE {
                return Err(Error::WeilViolation(format!(
                    "Frobenius root {z} has modulus {} but √q = {sqrt_q}",
                    z.norm()
                )));
            }
        }
        Ok(())
    }

    pub fn to_spec(&self) -> Vec<String> {
        self.h.iter().map(|c| c.to_string()).collect()
    }
}

/// `h = T² - aT + q`.
pub fn frobenius_poly_elliptic(a: i64, q: u64) -> Result<IsogenyClassData> {
    let a2 = (a as i128) * (a as i128);
    if a2 > 4 * q as i128 {
        return Err(Error::WeilViolation(format!("|a| = {} exceeds 2√q for q = {q}", a.abs())));
    }
    IsogenyClassData::new(q, vec![BigInt::from(q), BigInt::from(-a), BigInt::one()])
}

/// `--frobenius` JSON: `{"a":-2,"q":2}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub struct FrobeniusSpec {
    pub a: i64,
    pub q: u64,
}

impl FrobeniusSpec {
    pub fn from_json(text: &str) -> Result<IsogenyClassData> {
        let spec: FrobeniusSpec = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("Frobenius JSON: {e}")))?;
        frobenius_poly_elliptic(spec.a, spec.q)
    }
}

/// `--frobenius-poly` JSON: decimal strings, lowest coefficient first.
pub fn frobenius_poly_from_json(text: &str) -> Result<IsogenyClassData> {
    let raw: Vec<String> = serde_json::from_str(text)
        .map_err(|e| Error::invalid(format!("Frobenius polynomial JSON: {e}")))?;
    let h = raw
        .iter()
        .map(|s| {
            s.trim()
                .parse::<BigInt>()
                .map_err(|_| Error::invalid(format!("coefficient {s:?} is not an integer")))
        })
        .collect::<Result<Vec<_>>>()?;
    IsogenyClassData::from_poly(h)
}

fn poly_rem_monic(a: &RationalPoly, h: &RationalPoly) -> RationalPoly {
    a.div_rem(h).expect("monic divisor").1
}

/// `T^m mod h` by square and multiply.
fn power_of_t_mod(h: &RationalPoly, m: u64) -> RationalPoly {
    let mut acc = RationalPoly::one();
    let mut base = poly_rem_monic(&RationalPoly::monomial(rat(1), 1), h);
    let mut e = m;
    while e > 0 {
        if e & 1 == 1 {
            acc = poly_rem_monic(&(&acc * &base), h);
        }
        e >>= 1;
        if e > 0 {
            base = poly_rem_monic(&(&base * &base), h);
        }
    }
    acc
}

/// `N_m = ∏ (1 - ψ_i^m) = |Res(h, T^m - 1)|`.
pub fn group_order(h: &IsogenyClassData, m: u64) -> Result<BigInt> {
    if m == 0 {
        return Err(Error::invalid("group order needs m ≥ 1"));
    }
    let hp = h.as_poly();
    let r = &power_of_t_mod(&hp, m) - &RationalPoly::one();
    let res = resultant(&hp, &r)?;
    if !res.is_integer() || res.is_zero() {
        return Err(Error::Invariant(format!("group order {res} is not a positive integer")));
    }
    Ok(res.to_integer().abs())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MilneResult {
    pub rank: usize,
    pub sha_delta: BigRational,
    pub g: usize,
    pub d: usize,
    pub q: u64,
}

impl MilneResult {
    /// `{"rank":2,"sha_delta":"4","g":1,"d":1}`.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "rank": self.rank,
            "sha_delta": self.sha_delta.to_string(),
            "g": self.g,
            "d": self.d,
        })
        .to_string()
    }
}

fn same_field(p: &ZetaNumerator, h: &IsogenyClassData) -> Result<()> {
    if p.q() != h.q() {
        return Err(Error::invalid(format!(
            "zeta numerator over F_{} but Frobenius data over F_{}",
            p.q(),
            h.q()
        )));
    }
    Ok(())
}

/// `G(s) = Res_T(h(T), W(sT)) = ∏_{i,j} (sψ_i - ω_j)` with `W` the reversed
/// zeta numerator. Sampled at `s = 0..=4dg` and interpolated.
pub fn milne_resultant(p: &ZetaNumerator, h: &IsogenyClassData) -> Result<RationalPoly> {
    same_field(p, h)?;
    let dim = 2 * h.dimension();
    let w: Vec<BigInt> = p.coeffs().iter().rev().cloned().collect();
    // T^k mod h for k = 0..=2g, as integer vectors of length 2d
    let mut residues: Vec<Vec<BigInt>> = Vec::with_capacity(w.len());
    let mut cur = vec![BigInt::zero(); dim];
    cur[0] = BigInt::one();
    for _ in 0..w.len() {
        residues.push(cur.clone());
        let carry = cur[dim - 1].clone();
        let mut next = vec![BigInt::zero(); dim];
        for i in (1..dim).rev() {
            next[i] = &cur[i - 1] - &carry * &h.coeffs()[i];
        }
        next[0] = -(&carry * &h.coeffs()[0]);
        cur = next;
    }
    let n_samples = 2 * dim * p.genus() + 1;
    let samples = (0..n_samples)
        .into_par_iter()
        .map(|s| {
            let s = BigInt::from(s);
            let mut acc = vec![BigInt::zero(); dim];
            let mut spow = BigInt::one();
            for (wk, rk) in w.iter().zip(&residues) {
                if !wk.is_zero() {
                    let c = wk * &spow;
                    for (a, r) in acc.iter_mut().zip(rk) {
                        *a += &c * r;
                    }
                }
                spow *= &s;
            }
            resultant_monic_int(h.coeffs(), &acc)
        })
        .collect::<Vec<BigInt>>();
    Ok(interpolate_consecutive(&samples))
}

/// Rank `r` and `Sha·Δ` of the constant surface, exactly: `r` is the
/// `(s-1)`-adic valuation of `G` and `Sha·Δ = |G/(s-1)^r (1)| / q^{dg}`.
pub fn milne_invariant(p: &ZetaNumerator, h: &IsogenyClassData) -> Result<MilneResult> {
    let g_poly = milne_resultant(p, h)?;
    if g_poly.is_zero() {
        return Err(Error::Invariant("Milne resultant vanished identically".into()));
    }
    let mult = multiplicity_at_one(&g_poly)?;
    let (g, d) = (p.genus(), h.dimension());
    if mult.multiplicity > 4 * d * g {
        return Err(Error::Invariant(format!("rank {} exceeds 4dg = {}", mult.multiplicity, 4 * d * g)));
    }
    let qdg = num_traits::pow(BigInt::from(h.q()), d * g);
    let sha_delta = mult.quotient_at_one().abs() / BigRational::from_integer(qdg);
    if !sha_delta.is_positive() {
        return Err(Error::Invariant("Sha·Δ is not positive".into()));
    }
    Ok(MilneResult { rank: mult.multiplicity, sha_delta, g, d, q: h.q() })
}

/// Floating point evaluation of the same product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub rank: usize,
    pub value: f64,
}

/// Extracts `ψ_i` and `ω_j` numerically, matches pairs closer than
/// `1e-6·√q` and multiplies `q^{dg} ∏ (1 - ψ_i/ω_j)` over the rest.
pub fn milne_float_oracle(p: &ZetaNumerator, h: &IsogenyClassData, prec: &Precision) -> Result<OracleResult> {
    same_field(p, h)?;
    let sqrt_q = (h.q() as f64).sqrt();
    let psi = find_roots_flat(&h.as_poly(), prec)?;
    let omega = if p.genus() == 0 {
        Vec::new()
    } else {
        find_roots_flat(&p.eigen_poly(), prec)?
    };
    let one = MpComplex::real(prec.small(1), prec);
    let mut prod = one.clone();
    let mut rank = 0;
    for w in &omega {
        let w_inv = w.recip();
        for s in &psi {
            let dist = mp_to_f64(&(s - w).abs()) / sqrt_q;
            if dist < MATCH_THRESHOLD {
                rank += 1;
            } else if dist < AMBIGUITY_BAND {
                return Err(Error::Precision(format!(
                    "eigenvalues {} and {} are {dist:.3e}·√q apart: raise the precision",
                    s.to_c64(),
                    w.to_c64()
                )));
            } else {
                prod = &prod * &(&one - &(s * &w_inv));
            }
        }
    }
    let qdg = prec.int(&num_traits::pow(BigInt::from(h.q()), h.dimension() * p.genus()));
    let scaled = &MpComplex::real(qdg, prec) * &prod;
    let z = scaled.to_c64();
    if z.im.abs() > IMAGINARY_RESIDUE * z.norm() {
        return Err(Error::Precision(format!("oracle product {z} is not real")));
    }
    Ok(OracleResult { rank, value: z.re.abs() })
}

/// Exact special value of `L_E(t)/(1 - qt)^r` at `t = 1/q` and the
/// predicted `q^{1-g}·Sha·Δ/N_1²`, for elliptic `h`.
pub fn bsd_value_check(p: &ZetaNumerator, h: &IsogenyClassData) -> Result<(BigRational, BigRational)> {
    same_field(p, h)?;
    if h.dimension() != 1 {
        return Err(Error::invalid("special value check needs elliptic Frobenius data (d = 1)"));
    }
    let milne = milne_invariant(p, h)?;
    let (h0, h1) = (rat(h.coeffs()[0].clone()), rat(h.coeffs()[1].clone()));
    // P(Tt) mod h = A(t) T + B(t); T^k ≡ a_k T + b_k
    let (mut a_k, mut b_k) = (BigRational::zero(), BigRational::one());
    let mut a_coeffs = Vec::with_capacity(p.coeffs().len());
    let mut b_coeffs = Vec::with_capacity(p.coeffs().len());
    for c in p.coeffs() {
        let c = rat(c.clone());
        a_coeffs.push(&c * &a_k);
        b_coeffs.push(&c * &b_k);
        // T·(aT + b) = a T² + bT ≡ (b - a h1) T - a h0
        let next_a = &b_k - &a_k * &h1;
        let next_b = -(&a_k * &h0);
        a_k = next_a;
        b_k = next_b;
    }
    let a = RationalPoly::from_coeffs(a_coeffs);
    let b = RationalPoly::from_coeffs(b_coeffs);
    // ∏_i (A ψ_i + B) = A² ψ1ψ2 + AB (ψ1+ψ2) + B²
    let numer = &(&(&(&a * &a).scale(&h0) - &(&a * &b).scale(&h1)) + &(&b * &b));
    let q = rat(h.q());
    let u_poly = numer.substitute_scaled(&(BigRational::one() / &q));
    let mult = multiplicity_at_one(&u_poly)?;
    if mult.multiplicity != milne.rank {
        return Err(Error::Invariant(format!(
            "L-function vanishes to order {} at 1/q but the rank is {}",
            mult.multiplicity, milne.rank
        )));
    }
    let sign = if mult.multiplicity % 2 == 0 { rat(1) } else { rat(-1) };
    let rev_h = RationalPoly::from_coeffs(vec![rat(1), h1, h0]);
    let n1 = group_order(h, 1)?;
    let denom = rev_h.eval(&(BigRational::one() / &q)) * rat(n1.clone());
    let lhs = sign * mult.quotient_at_one() / denom;
    let q_pow = if milne.g == 0 {
        q.clone()
    } else {
        BigRational::one() / num_traits::pow(q, milne.g - 1)
    };
    let rhs = q_pow * &milne.sha_delta / rat(&n1 * &n1);
    Ok((lhs, rhs))
}
