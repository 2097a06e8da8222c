//! Zeta numerators `P_X(t)` and their relation to point counts.
//!
//! `Z_X(t) = P_X(t) / ((1 - t)(1 - qt))` with `P_X(t) = ∏ (1 - ω_j t)`, so the
//! power sums `S_m = Σ ω_j^m = q^m + 1 - N_m` and Newton's identities move
//! between counts and coefficients.

use std::f64::consts::TAU;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::RationalPoly;
use crate::numeric::{find_roots, Precision};

/// Relative distance from the critical circle tolerated by the Weil check.
pub const WEIL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ZetaNumerator {
    q: u64,
    g: usize,
    coeffs: Vec<BigInt>,
}

impl ZetaNumerator {
    /// Validates length, `c_0 = 1` and the functional equation.
    pub fn new(q: u64, coeffs: Vec<BigInt>) -> Result<Self> {
        if q < 2 {
            return Err(Error::invalid(format!("q = {q} is not a prime power")));
        }
        if coeffs.is_empty() || coeffs.len().is_multiple_of(2) {
            return Err(Error::invalid("zeta numerator must have odd length 2g + 1"));
        }
        if !coeffs[0].is_one() {
            return Err(Error::invalid("zeta numerator must have constant term 1"));
        }
        let g = (coeffs.len() - 1) / 2;
        let qb = BigInt::from(q);
        for k in 0..=g {
            let expected = &coeffs[k] * num_traits::pow(qb.clone(), g - k);
            if coeffs[2 * g - k] != expected {
                return Err(Error::invalid(format!(
                    "functional equation fails at k = {k}: c_{} = {} but q^{}·c_{k} = {expected}",
                    2 * g - k,
                    coeffs[2 * g - k],
                    g - k
                )));
            }
        }
        Ok(ZetaNumerator { q, g, coeffs })
    }

    pub fn from_i64(q: u64, coeffs: &[i64]) -> Result<Self> {
        Self::new(q, coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    /// The numerator of the projective line.
    pub fn trivial(q: u64) -> Self {
        ZetaNumerator { q, g: 0, coeffs: vec![BigInt::one()] }
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn genus(&self) -> usize {
        self.g
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn as_poly(&self) -> RationalPoly {
        RationalPoly::from_ints(self.coeffs.iter().cloned())
    }

    /// `W(T) = T^{2g} P(1/T)`: monic, roots are the Frobenius eigenvalues.
    pub fn eigen_poly(&self) -> RationalPoly {
        RationalPoly::from_ints(self.coeffs.iter().rev().cloned())
    }

    /// Product of two numerators over the same field (disjoint union of
    /// eigenvalue multisets).
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.q != other.q {
            return Err(Error::invalid("zeta numerators over different fields"));
        }
        let prod = &self.as_poly() * &other.as_poly();
        Self::new(self.q, prod.to_integers().expect("integer product"))
    }

    /// Roots of `P` lie on `|t| = q^{-1/2}`; checked numerically.
    pub fn check_weil(&self, prec: &Precision) -> Result<()> {
        self.eigen_angles(prec).map(|_| ())
    }

    /// Angles `θ_j ∈ [0, 2π)` with roots `q^{-1/2} e^{-iθ_j}`, ascending,
    /// repeated by multiplicity.
    pub fn eigen_angles(&self, prec: &Precision) -> Result<Vec<f64>> {
        if self.g == 0 {
            return Ok(Vec::new());
        }
        let sqrt_q = (self.q as f64).sqrt();
        let mut angles = Vec::with_capacity(2 * self.g);
        for root in find_roots(&self.eigen_poly(), prec)? {
            let w = root.value.to_c64();
            let off = (w.norm() / sqrt_q - 1.0).abs();
            if off > WEIL_TOLERANCE {
                return Err(Error::WeilViolation(format!(
                    "eigenvalue {w} has modulus {} but √q = {sqrt_q}",
                    w.norm()
                )));
            }
            let mut theta = w.im.atan2(w.re);
            if theta < 0.0 {
                theta += TAU;
            }
            if theta >= TAU - 1e-12 {
                theta = 0.0;
            }
            angles.extend(std::iter::repeat_n(theta, root.multiplicity));
        }
        angles.sort_by(f64::total_cmp);
        Ok(angles)
    }

    pub fn to_spec(&self) -> ZetaSpec {
        ZetaSpec {
            q: self.q,
            g: self.g,
            coeffs: self.coeffs.iter().map(|c| c.to_string()).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_spec()).expect("plain data")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ZetaSpec =
            serde_json::from_str(text).map_err(|e| Error::invalid(format!("zeta JSON: {e}")))?;
        spec.to_zeta()
    }
}

/// Zeta JSON: `{"q":2,"g":1,"coeffs":["1","2","2"]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ZetaSpec {
    pub q: u64,
    pub g: usize,
    pub coeffs: Vec<String>,
}

impl ZetaSpec {
    pub fn to_zeta(&self) -> Result<ZetaNumerator> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<BigInt>()
                    .map_err(|_| Error::invalid(format!("coefficient {s:?} is not an integer")))
            })
            .collect::<Result<Vec<_>>>()?;
        let z = ZetaNumerator::new(self.q, coeffs)?;
        if z.genus() != self.g {
            return Err(Error::invalid(format!(
                "declared genus {} but {} coefficients",
                self.g,
                self.coeffs.len()
            )));
        }
        Ok(z)
    }
}

/// `N_1..N_M` over `F_{q^m}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointCounts {
    pub q: u64,
    pub counts: Vec<BigInt>,
}

impl PointCounts {
    pub fn new(q: u64, counts: Vec<BigInt>) -> Self {
        PointCounts { q, counts }
    }

    pub fn from_u64(q: u64, counts: &[u64]) -> Self {
        Self::new(q, counts.iter().map(|&n| BigInt::from(n)).collect())
    }

    /// `N_m` (1-based).
    pub fn get(&self, m: usize) -> Option<&BigInt> {
        m.checked_sub(1).and_then(|i| self.counts.get(i))
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Counts CSV: header `m,N`, one row per degree.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,N\n");
        for (i, n) in self.counts.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, n));
        }
        out
    }

    /// Parses the counts CSV; rows must be `1..=M` in order.
    pub fn from_csv(q: u64, text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::invalid("empty counts CSV"))?;
        if header.replace(' ', "") != "m,N" {
            return Err(Error::invalid(format!("counts CSV header must be \"m,N\", got {header:?}")));
        }
        let mut counts = Vec::new();
        for (i, line) in lines.enumerate() {
            let (m, n) = line
                .split_once(',')
                .ok_or_else(|| Error::invalid(format!("malformed counts row {line:?}")))?;
            let m: usize = m
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad degree in row {line:?}")))?;
            if m != i + 1 {
                return Err(Error::invalid(format!("counts rows must be m = 1, 2, …; found m = {m} at row {}", i + 1)));
            }
            let n: BigInt = n
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad count in row {line:?}")))?;
            if n.is_negative() {
                return Err(Error::invalid("point counts are nonnegative"));
            }
            counts.push(n);
        }
        Ok(PointCounts { q, counts })
    }
}

/// `B_1..B_M`: closed points of each degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaceCounts {
    pub q: u64,
    pub places: Vec<BigInt>,
}

impl PlaceCounts {
    /// `B_m` (1-based).
    pub fn get(&self, m: usize) -> Option<&BigInt> {
        m.checked_sub(1).and_then(|i| self.places.get(i))
    }
}

fn q_pow(q: u64, m: usize) -> BigInt {
    num_traits::pow(BigInt::from(q), m)
}

/// Exact Weil check `|N_m - q^m - 1| ≤ 2g q^{m/2}`, i.e. `S² ≤ 4g² q^m`.
fn within_weil(q: u64, g: usize, m: usize, n: &BigInt) -> bool {
    let s = q_pow(q, m) + 1 - n;
    let g = BigInt::from(g);
    &s * &s <= BigInt::from(4) * &g * &g * q_pow(q, m)
}

/// Reconstruct `P_X` from `N_1..N_g`.
pub fn zeta_from_counts(q: u64, g: usize, counts: &[BigInt]) -> Result<ZetaNumerator> {
    if counts.len() != g {
        return Err(Error::invalid(format!("need exactly g = {g} counts, got {}", counts.len())));
    }
    if q < 2 {
        return Err(Error::invalid(format!("q = {q} is not a prime power")));
    }
    for (i, n) in counts.iter().enumerate() {
        if n.is_negative() {
            return Err(Error::invalid("point counts are nonnegative"));
        }
        if !within_weil(q, g, i + 1, n) {
            return Err(Error::WeilViolation(format!("N_{} = {n} violates the Weil bound for genus {g}", i + 1)));
        }
    }
    let power_sums: Vec<BigInt> = counts
        .iter()
        .enumerate()
        .map(|(i, n)| q_pow(q, i + 1) + 1 - n)
        .collect();
    let mut c = vec![BigInt::one()];
    for k in 1..=g {
        // k c_k = -Σ_{i=1..k} S_i c_{k-i}
        let acc: BigInt = (1..=k).map(|i| &power_sums[i - 1] * &c[k - i]).sum();
        let (quot, rem) = (-acc).div_rem(&BigInt::from(k));
        if !rem.is_zero() {
            return Err(Error::InconsistentCounts(format!(
                "Newton step k = {k} is not integral; counts do not come from a curve"
            )));
        }
        c.push(quot);
    }
    for k in (0..g).rev() {
        c.push(&c[k] * q_pow(q, g - k));
    }
    ZetaNumerator::new(q, c)
}

/// Power sums `S_1..S_M` of the eigenvalues.
pub fn power_sums(p: &ZetaNumerator, max_m: usize) -> Vec<BigInt> {
    let c = p.coeffs();
    let coeff = |k: usize| c.get(k).cloned().unwrap_or_default();
    let mut s: Vec<BigInt> = Vec::with_capacity(max_m);
    for k in 1..=max_m {
        let mut v = -BigInt::from(k) * coeff(k);
        for i in 1..k.min(c.len()) {
            v -= &s[k - i - 1] * &c[i];
        }
        s.push(v);
    }
    s
}

/// `N_1..N_M` from the numerator.
pub fn counts_from_zeta(p: &ZetaNumerator, max_m: usize) -> PointCounts {
    let counts = power_sums(p, max_m)
        .into_iter()
        .enumerate()
        .map(|(i, s)| q_pow(p.q(), i + 1) + 1 - s)
        .collect();
    PointCounts { q: p.q(), counts }
}

fn mobius(mut n: usize) -> i32 {
    let mut result = 1;
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            n /= d;
            if n.is_multiple_of(d) {
                return 0;
            }
            result = -result;
        }
        d += 1;
    }
    if n > 1 {
        result = -result;
    }
    result
}

/// Möbius inversion of `N_n = Σ_{m | n} m B_m`.
pub fn place_counts(counts: &PointCounts) -> Result<PlaceCounts> {
    let mut places = Vec::with_capacity(counts.len());
    for m in 1..=counts.len() {
        let mut acc = BigInt::zero();
        for d in (1..=m).filter(|d| m % d == 0) {
            match mobius(m / d) {
                0 => {}
                mu => acc += BigInt::from(mu) * counts.get(d).expect("d ≤ m"),
            }
        }
        let (b, rem) = acc.div_rem(&BigInt::from(m));
        if !rem.is_zero() || b.is_negative() {
            return Err(Error::InconsistentCounts(format!("B_{m} = {acc}/{m} is not a nonnegative integer")));
        }
        places.push(b);
    }
    Ok(PlaceCounts { q: counts.q, places })
}

/// `N_m` as `f64` (for diagnostics).
pub fn to_f64(n: &BigInt) -> f64 {
    n.to_f64().unwrap_or(f64::INFINITY)
}
