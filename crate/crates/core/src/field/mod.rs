//! Finite fields `F_p` and `F_{p^n}`.
//!
//! [`FieldDescriptor`] and [`FieldElement`] are the general-purpose types.
//! [`ExtField`] is the counting engine: elements are `u64` indices
//! `Σ c_i p^i` in enumeration order, with log tables for small fields and
//! carry-less multiplication in characteristic 2.

pub(crate) mod poly_fp;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigUint;

use crate::error::{Error, Result};
use poly_fp::mul_mod_p;

/// Largest characteristic accepted (products stay inside `u64`).
pub const MAX_CHARACTERISTIC: u64 = (1 << 31) - 1;
pub const MAX_EXTENSION_DEGREE: u32 = 64;

/// Fields of at most this many elements get log/antilog tables.
const TABLE_LIMIT: u64 = 1 << 22;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FieldDescriptor {
    p: u64,
    n: u32,
    /// Monic, degree `n`, lowest coefficient first.
    modulus: Vec<u64>,
}

impl FieldDescriptor {
    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.n
    }

    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    pub fn cardinality(&self) -> BigUint {
        BigUint::from(self.p).pow(self.n)
    }

    /// `p^n` when it fits in a `u64`.
    pub fn cardinality_u64(&self) -> Option<u64> {
        self.p.checked_pow(self.n)
    }
}

impl fmt::Debug for FieldDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}^{} mod {:?}", self.p, self.n, self.modulus)
    }
}

/// `F_{p^n}` with the lexicographically first monic irreducible modulus,
/// comparing coefficients from the constant term upwards.
pub fn make_field(p: u64, n: u32) -> Result<FieldDescriptor> {
    if !poly_fp::is_prime(p) || p > MAX_CHARACTERISTIC {
        return Err(Error::invalid(format!("{p} is not a supported prime")));
    }
    if !(1..=MAX_EXTENSION_DEGREE).contains(&n) {
        return Err(Error::invalid(format!("extension degree {n} out of range 1..=64")));
    }
    let n_us = n as usize;
    if n == 1 {
        return Ok(FieldDescriptor { p, n, modulus: vec![0, 1] });
    }
    // Odometer over (c_0, ..., c_{n-1}) with c_0 most significant; c_0 = 0
    // is divisible by x.
    let mut digits = vec![0u64; n_us];
    digits[0] = 1;
    loop {
        let mut f = digits.clone();
        f.push(1);
        if poly_fp::is_irreducible(&f, p) {
            return Ok(FieldDescriptor { p, n, modulus: f });
        }
        let mut i = n_us - 1;
        loop {
            digits[i] += 1;
            if digits[i] < p {
                break;
            }
            digits[i] = 0;
            if i == 0 {
                return Err(Error::Invariant(format!("no irreducible of degree {n} over F_{p}")));
            }
            i -= 1;
        }
    }
}

/// An element of `F_{p^n}` in the polynomial basis of the descriptor.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FieldElement {
    field: Arc<FieldDescriptor>,
    coeffs: Vec<u64>,
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coeffs)
    }
}

impl FieldElement {
    pub fn new(field: &Arc<FieldDescriptor>, coeffs: &[u64]) -> Result<Self> {
        if coeffs.len() > field.n as usize {
            return Err(Error::invalid("too many coefficients for the field degree"));
        }
        let mut c: Vec<u64> = coeffs.iter().map(|&x| x % field.p).collect();
        c.resize(field.n as usize, 0);
        Ok(FieldElement { field: field.clone(), coeffs: c })
    }

    pub fn zero(field: &Arc<FieldDescriptor>) -> Self {
        FieldElement { field: field.clone(), coeffs: vec![0; field.n as usize] }
    }

    pub fn one(field: &Arc<FieldDescriptor>) -> Self {
        Self::from_prime_field(field, 1)
    }

    pub fn from_prime_field(field: &Arc<FieldDescriptor>, c: u64) -> Self {
        let mut e = Self::zero(field);
        e.coeffs[0] = c % field.p;
        e
    }

    /// Element with index `Σ c_i p^i` in enumeration order.
    pub fn from_index(field: &Arc<FieldDescriptor>, mut index: u64) -> Self {
        let mut e = Self::zero(field);
        for c in e.coeffs.iter_mut() {
            *c = index % field.p;
            index /= field.p;
        }
        e
    }

    pub fn index(&self) -> u64 {
        self.coeffs.iter().rev().fold(0u64, |acc, &c| acc * self.field.p + c)
    }

    pub fn field(&self) -> &Arc<FieldDescriptor> {
        &self.field
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    fn with(&self, mut coeffs: Vec<u64>) -> Self {
        coeffs.resize(self.field.n as usize, 0);
        FieldElement { field: self.field.clone(), coeffs }
    }

    pub fn add(&self, other: &Self) -> Self {
        let p = self.field.p;
        self.with(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a + b) % p).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let p = self.field.p;
        self.with(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a + p - b) % p).collect())
    }

    pub fn neg(&self) -> Self {
        let p = self.field.p;
        self.with(self.coeffs.iter().map(|a| (p - a) % p).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.with(poly_fp::mul_rem(&self.coeffs, &other.coeffs, &self.field.modulus, self.field.p))
    }

    pub fn pow(&self, e: u128) -> Self {
        self.with(poly_fp::pow_rem(&self.coeffs, e, &self.field.modulus, self.field.p))
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        Some(self.with(poly_fp::inv_rem(&self.coeffs, &self.field.modulus, self.field.p)))
    }

    /// `x ↦ x^p`
    pub fn frobenius(&self) -> Self {
        self.pow(self.field.p as u128)
    }

    /// `x + x^p + … + x^{p^{n-1}}`, an element of the prime field.
    pub fn absolute_trace(&self) -> u64 {
        let mut acc = self.clone();
        let mut conj = self.clone();
        for _ in 1..self.field.n {
            conj = conj.frobenius();
            acc = acc.add(&conj);
        }
        debug_assert!(acc.coeffs[1..].iter().all(|&c| c == 0));
        acc.coeffs[0]
    }
}

#[derive(Debug)]
struct Tables {
    /// `exp[k] = g^k` for `k < q - 1`
    exp: Vec<u32>,
    /// `log[a]` for nonzero `a`; `log[0]` unused
    log: Vec<u32>,
}

/// Counting engine for `F_{p^N}`, elements as enumeration indices.
#[derive(Debug)]
pub struct ExtField {
    desc: Arc<FieldDescriptor>,
    q: u64,
    /// Reduction of `x^N` (char 2 only): the modulus minus its leading bit.
    low_modulus: u64,
    /// `trace(x^i)` for each basis monomial.
    basis_trace: Vec<u64>,
    /// char 2 only: bit `i` set iff `trace(x^i) = 1`.
    trace_mask: u64,
    tables: Option<Tables>,
}

type FieldCache = Mutex<HashMap<(u64, u32), Arc<ExtField>>>;

fn cache() -> &'static FieldCache {
    static CACHE: OnceLock<FieldCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl ExtField {
    /// Shared engine for `F_{p^n}`; built once per process.
    pub fn get(p: u64, n: u32) -> Result<Arc<ExtField>> {
        if let Some(f) = cache().lock().expect("field cache").get(&(p, n)) {
            return Ok(f.clone());
        }
        let built = Arc::new(Self::build(make_field(p, n)?)?);
        let mut guard = cache().lock().expect("field cache");
        Ok(guard.entry((p, n)).or_insert(built).clone())
    }

    fn build(desc: FieldDescriptor) -> Result<Self> {
        let q = desc
            .cardinality_u64()
            .filter(|&q| q < 1 << 62)
            .ok_or_else(|| Error::invalid("field too large for the counting engine"))?;
        let low_modulus = if desc.p == 2 {
            desc.modulus[..desc.n as usize]
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, &c)| acc | (c << i))
        } else {
            0
        };
        let mut field = ExtField {
            desc: Arc::new(desc),
            q,
            low_modulus,
            basis_trace: Vec::new(),
            trace_mask: 0,
            tables: None,
        };
        let shared = field.desc.clone();
        let mut pow_p = 1u64;
        for i in 0..field.desc.n {
            let t = FieldElement::from_index(&shared, pow_p).absolute_trace();
            field.basis_trace.push(t);
            if field.desc.p == 2 && t == 1 {
                field.trace_mask |= 1 << i;
            }
            pow_p = pow_p.saturating_mul(field.desc.p);
        }
        if q <= TABLE_LIMIT && q > 2 {
            field.tables = Some(field.build_tables());
        }
        Ok(field)
    }

    fn build_tables(&self) -> Tables {
        let order = self.q - 1;
        let primes = prime_factors(order);
        let generator = (2..self.q)
            .find(|&g| primes.iter().all(|&r| self.pow_slow(g, order / r) != 1))
            .expect("multiplicative group is cyclic");
        let mut exp = Vec::with_capacity(order as usize);
        let mut log = vec![0u32; self.q as usize];
        let mut x = 1u64;
        for k in 0..order {
            exp.push(x as u32);
            log[x as usize] = k as u32;
            x = self.mul_slow(x, generator);
        }
        Tables { exp, log }
    }

    pub fn descriptor(&self) -> &Arc<FieldDescriptor> {
        &self.desc
    }

    pub fn p(&self) -> u64 {
        self.desc.p
    }

    pub fn degree(&self) -> u32 {
        self.desc.n
    }

    /// Number of elements.
    pub fn size(&self) -> u64 {
        self.q
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let p = self.desc.p;
        if p == 2 {
            return a ^ b;
        }
        let (mut a, mut b) = (a, b);
        let (mut out, mut scale) = (0u64, 1u64);
        while a > 0 || b > 0 {
            out += ((a % p + b % p) % p) * scale;
            a /= p;
            b /= p;
            scale = scale.wrapping_mul(p);
        }
        out
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        let p = self.desc.p;
        if p == 2 {
            return a;
        }
        let (mut a, mut out, mut scale) = (a, 0u64, 1u64);
        while a > 0 {
            out += ((p - a % p) % p) * scale;
            a /= p;
            scale = scale.wrapping_mul(p);
        }
        out
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        if a == 0 || b == 0 {
            return 0;
        }
        match &self.tables {
            Some(t) => {
                let k = t.log[a as usize] as u64 + t.log[b as usize] as u64;
                let order = self.q - 1;
                t.exp[(if k >= order { k - order } else { k }) as usize] as u64
            }
            None => self.mul_slow(a, b),
        }
    }

    /// Inverse of a nonzero element.
    #[inline]
    pub fn inv(&self, a: u64) -> u64 {
        debug_assert!(a != 0);
        match &self.tables {
            Some(t) => {
                let order = self.q - 1;
                let l = t.log[a as usize] as u64;
                t.exp[((order - l) % order) as usize] as u64
            }
            None => self.pow_slow(a, self.q - 2),
        }
    }

    pub fn pow(&self, a: u64, e: u64) -> u64 {
        match &self.tables {
            Some(t) if a != 0 => {
                let order = self.q - 1;
                let k = (t.log[a as usize] as u128 * e as u128 % order as u128) as usize;
                t.exp[k] as u64
            }
            _ => self.pow_slow(a, e),
        }
    }

    /// Absolute trace to `F_p`; linear in the coordinates.
    #[inline]
    pub fn trace(&self, a: u64) -> u64 {
        let p = self.desc.p;
        if p == 2 {
            return ((a & self.trace_mask).count_ones() & 1) as u64;
        }
        let mut a = a;
        let mut acc = 0u64;
        for &t in &self.basis_trace {
            acc = (acc + mul_mod_p(a % p, t, p)) % p;
            a /= p;
        }
        acc
    }

    /// Quadratic character (odd characteristic): 0, 1 or -1.
    #[inline]
    pub fn quadratic_character(&self, a: u64) -> i64 {
        debug_assert!(self.desc.p != 2);
        if a == 0 {
            return 0;
        }
        match &self.tables {
            Some(t) => {
                if t.log[a as usize] % 2 == 0 {
                    1
                } else {
                    -1
                }
            }
            None => {
                if self.pow_slow(a, (self.q - 1) / 2) == 1 {
                    1
                } else {
                    -1
                }
            }
        }
    }

    /// The prime-field constant `c` as an element.
    pub fn from_prime(&self, c: u64) -> u64 {
        c % self.desc.p
    }

    /// Evaluate a polynomial with coefficients in this field (Horner).
    #[inline]
    pub fn eval_poly(&self, coeffs: &[u64], x: u64) -> u64 {
        let mut acc = 0u64;
        for &c in coeffs.iter().rev() {
            acc = self.add(self.mul(acc, x), c);
        }
        acc
    }

    fn mul_slow(&self, a: u64, b: u64) -> u64 {
        if self.desc.p == 2 {
            return self.clmul_reduce(a, b);
        }
        let x = FieldElement::from_index(&self.desc, a);
        let y = FieldElement::from_index(&self.desc, b);
        x.mul(&y).index()
    }

    fn pow_slow(&self, mut a: u64, mut e: u64) -> u64 {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_slow(acc, a);
            }
            e >>= 1;
            if e > 0 {
                a = self.mul_slow(a, a);
            }
        }
        acc
    }

    fn clmul_reduce(&self, a: u64, b: u64) -> u64 {
        let n = self.desc.n;
        let top = 1u64 << (n - 1);
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let (mut a, mut b, mut acc) = (a, b, 0u64);
        while b != 0 {
            if b & 1 == 1 {
                acc ^= a;
            }
            b >>= 1;
            let carry = a & top != 0;
            a = (a << 1) & mask;
            if carry {
                a ^= self.low_modulus;
            }
        }
        acc
    }
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Embedding `F_{p^n} → F_{p^{nm}}` for the deterministic moduli of both.
#[derive(Debug, Clone)]
pub struct Embedding {
    /// Images of `1, u, u^2, …` (u the base generator) in the extension.
    basis_images: Vec<u64>,
    p: u64,
}

impl Embedding {
    pub fn new(base: &FieldDescriptor, ext: &ExtField) -> Result<Self> {
        let p = base.p;
        let n = base.n;
        if ext.p() != p || !ext.degree().is_multiple_of(n) {
            return Err(Error::invalid("extension does not contain the base field"));
        }
        if n == 1 {
            return Ok(Embedding { basis_images: vec![1], p });
        }
        let m = ext.degree() / n;
        let qn = p.pow(n);
        // Relative trace is onto F_{p^n}; scan its images for a root of
        // the base modulus.
        let root = (1..ext.size())
            .map(|z| {
                let mut acc = 0u64;
                let mut conj = z;
                for _ in 0..m {
                    acc = ext.add(acc, conj);
                    conj = ext.pow(conj, qn);
                }
                acc
            })
            .find(|&t| ext.eval_poly(&base.modulus, t) == 0)
            .ok_or_else(|| Error::Invariant("base modulus has no root in the extension".into()))?;
        let mut basis_images = Vec::with_capacity(n as usize);
        let mut power = 1u64;
        for _ in 0..n {
            basis_images.push(power);
            power = ext.mul(power, root);
        }
        Ok(Embedding { basis_images, p })
    }

    /// Image of the base element with enumeration index `index`.
    pub fn map(&self, ext: &ExtField, mut index: u64) -> u64 {
        let mut acc = 0u64;
        for &b in &self.basis_images {
            let c = index % self.p;
            index /= self.p;
            if c != 0 {
                acc = ext.add(acc, ext.mul(ext.from_prime(c), b));
            }
        }
        acc
    }
}
