//! Curve models over `F_q` and exhaustive point counting over `F_{q^m}`.
//!
//! Three families with closed-form smooth models are supported: general
//! Weierstrass cubics, Artin–Schreier curves `y^p - y = f(x)` with
//! `gcd(deg f, p) = 1`, and odd-degree hyperelliptic curves `y^2 = f(x)` in
//! odd characteristic. Each has exactly one point at infinity on its smooth
//! projective model.

use std::sync::Arc;

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{make_field, Embedding, ExtField, FieldDescriptor};

/// Default cap on the number of field elements enumerated by one count.
pub const DEFAULT_BUDGET: u64 = 1 << 30;

/// x-values handled per work item.
pub const CHUNK_SIZE: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CurveKind {
    /// `y^2 + a1·xy + a3·y = x^3 + a2·x^2 + a4·x + a6`
    Elliptic { a1: u64, a3: u64, a2: u64, a4: u64, a6: u64 },
    /// `y^p - y = f(x)`
    ArtinSchreier { f: Vec<u64> },
    /// `y^2 = f(x)`, `p` odd, `deg f` odd
    Hyperelliptic { f: Vec<u64> },
}

/// A validated, nonsingular curve model. Coefficients are elements of the
/// base field `F_{p^n}` written as enumeration indices `Σ c_i p^i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveModel {
    base: Arc<FieldDescriptor>,
    kind: CurveKind,
}

impl CurveModel {
    pub fn elliptic(p: u64, n: u32, a: [u64; 5]) -> Result<Self> {
        let [a1, a3, a2, a4, a6] = a;
        Self::new(p, n, CurveKind::Elliptic { a1, a3, a2, a4, a6 })
    }

    pub fn artin_schreier(p: u64, n: u32, f: Vec<u64>) -> Result<Self> {
        Self::new(p, n, CurveKind::ArtinSchreier { f })
    }

    pub fn hyperelliptic(p: u64, n: u32, f: Vec<u64>) -> Result<Self> {
        Self::new(p, n, CurveKind::Hyperelliptic { f })
    }

    pub fn new(p: u64, n: u32, mut kind: CurveKind) -> Result<Self> {
        let base = Arc::new(make_field(p, n)?);
        let q = base
            .cardinality_u64()
            .ok_or_else(|| Error::invalid("base field too large"))?;
        let check = |c: u64| -> Result<()> {
            if c >= q {
                Err(Error::invalid(format!("coefficient {c} is not an element of F_{q}")))
            } else {
                Ok(())
            }
        };
        match &mut kind {
            CurveKind::Elliptic { a1, a3, a2, a4, a6 } => {
                for c in [*a1, *a3, *a2, *a4, *a6] {
                    check(c)?;
                }
            }
            CurveKind::ArtinSchreier { f } | CurveKind::Hyperelliptic { f } => {
                for &c in f.iter() {
                    check(c)?;
                }
                while f.last() == Some(&0) {
                    f.pop();
                }
            }
        }
        let model = CurveModel { base, kind };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        let p = self.base.p();
        let k = ExtField::get(p, self.base.degree())?;
        match &self.kind {
            CurveKind::Elliptic { .. } => {
                if self.discriminant(&k) == 0 {
                    return Err(Error::invalid("singular Weierstrass model (zero discriminant)"));
                }
            }
            CurveKind::ArtinSchreier { f } => {
                let d = f.len().saturating_sub(1) as u64;
                if f.len() < 2 || d.is_multiple_of(p) {
                    return Err(Error::invalid(format!(
                        "Artin-Schreier model needs deg f ≥ 1 coprime to p = {p}, got degree {d}"
                    )));
                }
            }
            CurveKind::Hyperelliptic { f } => {
                if p == 2 {
                    return Err(Error::invalid("hyperelliptic models need odd characteristic"));
                }
                let d = f.len().saturating_sub(1);
                if f.len() < 2 || d % 2 == 0 {
                    return Err(Error::invalid(format!("hyperelliptic model needs odd degree, got {d}")));
                }
                let df: Vec<u64> = f
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(i, &c)| k.mul(k.from_prime(i as u64), c))
                    .collect();
                if poly_gcd_degree(&k, f, &df) != 0 {
                    return Err(Error::invalid("hyperelliptic model: f is not square-free"));
                }
            }
        }
        Ok(())
    }

    /// `Δ` of a Weierstrass model, evaluated in `k`.
    fn discriminant(&self, k: &ExtField) -> u64 {
        let CurveKind::Elliptic { a1, a3, a2, a4, a6 } = self.kind else {
            return 1;
        };
        let c = |n: i64| -> u64 {
            let p = k.p() as i64;
            k.from_prime(n.rem_euclid(p) as u64)
        };
        let m = |x: u64, y: u64| k.mul(x, y);
        let a = |x: u64, y: u64| k.add(x, y);
        let b2 = a(m(a1, a1), m(c(4), a2));
        let b4 = a(m(c(2), a4), m(a1, a3));
        let b6 = a(m(a3, a3), m(c(4), a6));
        let b8 = k.sub(
            a(a(m(m(a1, a1), a6), m(c(4), m(a2, a6))), m(a2, m(a3, a3))),
            a(m(a1, m(a3, a4)), m(a4, a4)),
        );
        let t1 = m(m(b2, b2), b8);
        let t2 = m(c(8), m(b4, m(b4, b4)));
        let t3 = m(c(27), m(b6, b6));
        let t4 = m(c(9), m(b2, m(b4, b6)));
        k.sub(t4, a(a(t1, t2), t3))
    }

    pub fn base_field(&self) -> &FieldDescriptor {
        &self.base
    }

    /// `q = p^n`.
    pub fn q(&self) -> u64 {
        self.base.cardinality_u64().expect("checked at construction")
    }

    pub fn kind(&self) -> &CurveKind {
        &self.kind
    }

    pub fn is_elliptic(&self) -> bool {
        matches!(self.kind, CurveKind::Elliptic { .. })
    }

    /// Genus of the smooth projective model.
    pub fn genus(&self) -> u64 {
        match &self.kind {
            CurveKind::Elliptic { .. } => 1,
            CurveKind::ArtinSchreier { f } => {
                let p = self.base.p();
                (p - 1) * (f.len() as u64 - 2) / 2
            }
            CurveKind::Hyperelliptic { f } => (f.len() as u64 - 2) / 2,
        }
    }
}

/// Degree of `gcd(a, b)` over the field `k` (coefficient lists, low first).
fn poly_gcd_degree(k: &ExtField, a: &[u64], b: &[u64]) -> usize {
    let trim = |v: &mut Vec<u64>| {
        while v.last() == Some(&0) {
            v.pop();
        }
    };
    let (mut a, mut b) = (a.to_vec(), b.to_vec());
    trim(&mut a);
    trim(&mut b);
    while !b.is_empty() {
        let inv = k.inv(*b.last().expect("nonempty"));
        while a.len() >= b.len() {
            let shift = a.len() - b.len();
            let c = k.mul(*a.last().expect("nonempty"), inv);
            for (j, &bj) in b.iter().enumerate() {
                a[shift + j] = k.sub(a[shift + j], k.mul(c, bj));
            }
            trim(&mut a);
            if a.is_empty() {
                break;
            }
        }
        std::mem::swap(&mut a, &mut b);
    }
    a.len().saturating_sub(1)
}

/// Resource and scheduling knobs for [`count_points`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountConfig {
    pub budget: u64,
    /// 1 runs on the calling thread; anything larger fans out over the
    /// ambient rayon pool.
    pub threads: usize,
}

impl Default for CountConfig {
    fn default() -> Self {
        CountConfig { budget: DEFAULT_BUDGET, threads: 1 }
    }
}

/// Curve specialized to one extension field, ready for enumeration.
struct Counter {
    ext: Arc<ExtField>,
    kind: CurveKind,
}

impl Counter {
    fn new(model: &CurveModel, m: u32, budget: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("extension degree m must be at least 1"));
        }
        let base = model.base_field();
        let total_degree = base
            .degree()
            .checked_mul(m)
            .ok_or_else(|| Error::invalid("extension degree overflow"))?;
        let size = BigInt::from(base.p()).pow(total_degree);
        if size > BigInt::from(budget) {
            return Err(Error::BudgetExceeded { needed: size.to_string(), budget });
        }
        let ext = ExtField::get(base.p(), total_degree)?;
        let emb = Embedding::new(base, &ext)?;
        let lift = |c: u64| emb.map(&ext, c);
        let kind = match &model.kind {
            CurveKind::Elliptic { a1, a3, a2, a4, a6 } => CurveKind::Elliptic {
                a1: lift(*a1),
                a3: lift(*a3),
                a2: lift(*a2),
                a4: lift(*a4),
                a6: lift(*a6),
            },
            CurveKind::ArtinSchreier { f } => CurveKind::ArtinSchreier { f: f.iter().map(|&c| lift(c)).collect() },
            CurveKind::Hyperelliptic { f } => CurveKind::Hyperelliptic { f: f.iter().map(|&c| lift(c)).collect() },
        };
        Ok(Counter { ext, kind })
    }

    /// Affine points with `x` index in `[start, end)`.
    fn count_range(&self, start: u64, end: u64) -> u64 {
        let k = &*self.ext;
        let mut total = 0u64;
        match &self.kind {
            CurveKind::Elliptic { a1, a3, a2, a4, a6 } => {
                let odd = k.p() != 2;
                let four = k.from_prime(4 % k.p());
                for x in start..end {
                    let u = k.add(k.mul(*a1, x), *a3);
                    // x^3 + a2 x^2 + a4 x + a6
                    let r = k.add(k.mul(k.add(k.mul(k.add(x, *a2), x), *a4), x), *a6);
                    total += if odd {
                        let d = k.add(k.mul(four, r), k.mul(u, u));
                        (1 + k.quadratic_character(d)) as u64
                    } else if u == 0 {
                        1
                    } else {
                        let ui = k.inv(u);
                        let c = k.mul(r, k.mul(ui, ui));
                        if k.trace(c) == 0 { 2 } else { 0 }
                    };
                }
            }
            CurveKind::ArtinSchreier { f } => {
                let p = k.p();
                for x in start..end {
                    if k.trace(k.eval_poly(f, x)) == 0 {
                        total += p;
                    }
                }
            }
            CurveKind::Hyperelliptic { f } => {
                for x in start..end {
                    total += (1 + k.quadratic_character(k.eval_poly(f, x))) as u64;
                }
            }
        }
        total
    }

    fn size(&self) -> u64 {
        self.ext.size()
    }
}

/// `N_m`: points of the smooth projective model over `F_{q^m}`.
pub fn count_points(model: &CurveModel, m: u32, config: &CountConfig) -> Result<u64> {
    let counter = Counter::new(model, m, config.budget)?;
    let size = counter.size();
    let chunks = size.div_ceil(CHUNK_SIZE);
    let chunk = |i: u64| counter.count_range(i * CHUNK_SIZE, ((i + 1) * CHUNK_SIZE).min(size));
    let affine: u64 = if config.threads > 1 && chunks > 1 {
        (0..chunks).into_par_iter().map(chunk).sum()
    } else {
        (0..chunks).map(chunk).sum()
    };
    Ok(affine + 1)
}

/// `N_m` computed by splitting the x-range into `parts` contiguous pieces.
/// Used to check that the result does not depend on the partition.
pub fn count_points_partitioned(model: &CurveModel, m: u32, parts: u64, budget: u64) -> Result<u64> {
    if parts == 0 {
        return Err(Error::invalid("partition count must be positive"));
    }
    let counter = Counter::new(model, m, budget)?;
    let size = counter.size();
    let affine: u64 = (0..parts)
        .map(|i| counter.count_range(size * i / parts, size * (i + 1) / parts))
        .sum();
    Ok(affine + 1)
}

/// `N_1, …, N_M`.
pub fn count_sequence(model: &CurveModel, max_m: u32, config: &CountConfig) -> Result<Vec<u64>> {
    (1..=max_m).map(|m| count_points(model, m, config)).collect()
}

/// `a = q + 1 - N_1` for an elliptic model, checked against Hasse.
pub fn trace_of_frobenius(model: &CurveModel) -> Result<i64> {
    if !model.is_elliptic() {
        return Err(Error::invalid("trace of Frobenius needs an elliptic model"));
    }
    let q = model.q() as i64;
    let n1 = count_points(model, 1, &CountConfig::default())? as i64;
    let a = q + 1 - n1;
    if (a as i128) * (a as i128) > 4 * q as i128 {
        return Err(Error::Invariant(format!(
            "Hasse bound violated: a = {a} over F_{q}; point counting is broken"
        )));
    }
    Ok(a)
}

/// Curve JSON as it appears on disk.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct CurveSpec {
    pub p: u64,
    #[serde(default = "one")]
    pub n: u32,
    pub kind: String,
    /// `[a1, a3, a2, a4, a6]` for Weierstrass models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<i64>>,
}

fn one() -> u32 {
    1
}

impl CurveSpec {
    pub fn to_model(&self) -> Result<CurveModel> {
        let p = self.p;
        let reduce = |coeffs: &[i64]| -> Result<Vec<u64>> {
            coeffs
                .iter()
                .map(|&c| {
                    if self.n == 1 {
                        Ok(c.rem_euclid(p as i64) as u64)
                    } else if c < 0 {
                        Err(Error::invalid("coefficients over F_{p^n}, n > 1, are nonnegative element indices"))
                    } else {
                        Ok(c as u64)
                    }
                })
                .collect()
        };
        if !(2..=crate::field::MAX_CHARACTERISTIC).contains(&p) {
            return Err(Error::invalid(format!("unsupported characteristic {p}")));
        }
        match self.kind.as_str() {
            "elliptic-weierstrass" | "elliptic" => {
                let a = self.a.as_ref().ok_or_else(|| Error::invalid("elliptic model needs \"a\": [a1,a3,a2,a4,a6]"))?;
                let a = reduce(a)?;
                let a: [u64; 5] = a
                    .try_into()
                    .map_err(|_| Error::invalid("elliptic model needs exactly five coefficients"))?;
                CurveModel::elliptic(p, self.n, a)
            }
            "artin-schreier" => {
                let f = self.f.as_ref().ok_or_else(|| Error::invalid("artin-schreier model needs \"f\""))?;
                CurveModel::artin_schreier(p, self.n, reduce(f)?)
            }
            "hyperelliptic-odd-char" | "hyperelliptic" => {
                let f = self.f.as_ref().ok_or_else(|| Error::invalid("hyperelliptic model needs \"f\""))?;
                CurveModel::hyperelliptic(p, self.n, reduce(f)?)
            }
            other => Err(Error::invalid(format!("unsupported curve kind {other:?}"))),
        }
    }

    pub fn from_json(text: &str) -> Result<CurveModel> {
        let spec: CurveSpec =
            serde_json::from_str(text).map_err(|e| Error::invalid(format!("curve JSON: {e}")))?;
        spec.to_model()
    }
}
