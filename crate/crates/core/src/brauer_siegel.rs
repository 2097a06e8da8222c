//! Both sides of the Brauer–Siegel type ratio on finite data: the per-curve
//! value `log_q(Sha·Δ)/(dg)`, truncated right-hand series with a tail bound,
//! the angle measure of a zeta numerator and the assembled report.

use std::f64::consts::{LN_2, TAU};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::json;

use crate::constant_surface::{group_order, milne_invariant, IsogenyClassData, MilneResult};
use crate::error::{Error, Result};
use crate::families::{dv_diagnostic, estimate_beta, BetaSequence, NormalizedSnapshot};
use crate::numeric::Precision;
use crate::zeta::ZetaNumerator;

/// Smallest truncation point accepted by [`tail_bound`].
pub const TAIL_MIN_M: usize = 4;
/// Angles closer than this count as one atom.
pub const ANGLE_COINCIDENCE: f64 = 1e-6;
const BIN_SNAP: f64 = 1e-9;

/// Natural log of a positive integer of any size.
pub fn ln_bigint(n: &BigInt) -> f64 {
    assert!(n.is_positive(), "log of a nonpositive integer");
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().expect("fits").ln();
    }
    let shift = bits - 64;
    (n >> shift).to_f64().expect("fits").ln() + shift as f64 * LN_2
}

pub fn ln_rational(r: &BigRational) -> f64 {
    ln_bigint(r.numer()) - ln_bigint(r.denom())
}

/// `num/den` correctly scaled to `f64`, even when both are huge.
pub fn ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let shift = den.bits() as i64 - num.bits() as i64 + 64;
    let q = if shift >= 0 { (num << shift as u64) / den } else { num / (den << (-shift) as u64) };
    q.to_f64().expect("64-bit quotient") * 2f64.powi(-(shift as i32))
}

/// `(1/(dg)) log_q(Sha·Δ)` from the exact Milne result.
pub fn lhs_from_milne(milne: &MilneResult) -> Result<f64> {
    if milne.g == 0 {
        return Err(Error::invalid("lhs is undefined for genus 0"));
    }
    Ok(ln_rational(&milne.sha_delta) / ((milne.d * milne.g) as f64 * (milne.q as f64).ln()))
}

pub fn lhs_value(p: &ZetaNumerator, h: &IsogenyClassData) -> Result<f64> {
    if p.genus() == 0 {
        return Err(Error::invalid("lhs is undefined for genus 0"));
    }
    lhs_from_milne(&milne_invariant(p, h)?)
}

/// `log_q(N_m^{1/d} / q^m)` for `m = 1..=M`, from exact group orders.
pub fn rhs_terms(h: &IsogenyClassData, max_m: usize) -> Result<Vec<f64>> {
    let ln_q = (h.q() as f64).ln();
    let d = h.dimension();
    (1..=max_m)
        .map(|m| {
            let n = group_order(h, m as u64)?;
            let qdm = num_traits::pow(BigInt::from(h.q()), d * m);
            let x = ratio_to_f64(&(&n - &qdm), &qdm);
            Ok(x.ln_1p() / (d as f64 * ln_q))
        })
        .collect()
}

/// `1 - Σ_{m ≤ M} β_m log_q(N_m^{1/d} / q^m)`.
pub fn rhs_partial(beta: &BetaSequence, h: &IsogenyClassData, max_m: usize) -> Result<f64> {
    check_beta(beta, h, max_m)?;
    Ok(rhs_from_terms(&beta.values, &rhs_terms(h, max_m)?, max_m))
}

fn check_beta(beta: &BetaSequence, h: &IsogenyClassData, max_m: usize) -> Result<()> {
    if beta.q != h.q() {
        return Err(Error::invalid(format!("β over F_{} but Frobenius data over F_{}", beta.q, h.q())));
    }
    if beta.len() < max_m {
        return Err(Error::invalid(format!("β covers m ≤ {} but M = {max_m}", beta.len())));
    }
    Ok(())
}

fn rhs_from_terms(beta: &[f64], terms: &[f64], max_m: usize) -> f64 {
    1.0 - beta.iter().zip(terms).take(max_m).map(|(b, l)| b * l).sum::<f64>()
}

/// Bound on `|Σ_{m > M} β_m log_q(N_m^{1/d}/q^m)|` over every `β` with
/// `Σ m β_m/(q^{m/2} - 1) ≤ 1`:
///
/// `2 / ((1 - x_{M+1}) (M+1) ln q)` with `x_m = 2q^{-m/2} + q^{-m}`.
///
/// Each term is at most `x_m/((1 - x_m) ln q)` and
/// `x_m (q^{m/2} - 1) < 2`, so the weight per unit of the constraint is
/// below `2/((1 - x_m) m ln q)`, which decreases in `m`.
pub fn tail_bound(q: u64, _h: &IsogenyClassData, max_m: usize) -> Result<f64> {
    if max_m < TAIL_MIN_M {
        return Err(Error::invalid(format!("tail bound needs M ≥ {TAIL_MIN_M}, got {max_m}")));
    }
    let qf = q as f64;
    let m1 = (max_m + 1) as f64;
    let x = 2.0 * qf.powf(-m1 / 2.0) + qf.powf(-m1);
    Ok(2.0 / ((1.0 - x) * m1 * qf.ln()))
}

/// Normalized eigenvalue angle measure `(1/g) Σ δ_{θ_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleMeasure {
    pub g: usize,
    pub angles: Vec<f64>,
    /// Mass per bin, in units where every angle weighs `1/g`.
    pub histogram: Vec<f64>,
    pub max_multiplicity: usize,
}

impl AngleMeasure {
    pub fn multiplicity_ratio(&self) -> f64 {
        self.max_multiplicity as f64 / self.g as f64
    }

    pub fn total_mass(&self) -> f64 {
        self.histogram.iter().sum()
    }

    /// `bin,lo,hi,mass` rows.
    pub fn to_csv(&self) -> String {
        let bins = self.histogram.len();
        let mut out = String::from("bin,lo,hi,mass\n");
        for (i, mass) in self.histogram.iter().enumerate() {
            let lo = TAU * i as f64 / bins as f64;
            let hi = TAU * (i + 1) as f64 / bins as f64;
            let _ = writeln!(out, "{i},{},{},{}", sci(lo), sci(hi), sci(*mass));
        }
        out
    }
}

fn bin_of(theta: f64, bins: usize) -> usize {
    let x = theta / TAU * bins as f64;
    let nearest = x.round();
    let x = if (x - nearest).abs() < BIN_SNAP { nearest } else { x.floor() };
    (x as usize) % bins
}

fn max_cluster(angles: &[f64]) -> usize {
    if angles.is_empty() {
        return 0;
    }
    // runs of near-equal neighbours; the last run may wrap onto the first
    let mut runs = vec![1usize];
    for w in angles.windows(2) {
        if w[1] - w[0] < ANGLE_COINCIDENCE {
            *runs.last_mut().unwrap() += 1;
        } else {
            runs.push(1);
        }
    }
    let wraps = angles[0] + TAU - angles[angles.len() - 1] < ANGLE_COINCIDENCE;
    if wraps && runs.len() > 1 {
        let last = runs.pop().unwrap();
        runs[0] += last;
    }
    runs.into_iter().max().unwrap()
}

pub fn weil_measure(p: &ZetaNumerator, bins: usize, prec: &Precision) -> Result<AngleMeasure> {
    if p.genus() == 0 {
        return Err(Error::invalid("angle measure needs g ≥ 1"));
    }
    if bins < 2 {
        return Err(Error::invalid("need at least 2 bins"));
    }
    let g = p.genus();
    let angles = p.eigen_angles(prec)?;
    let mut histogram = vec![0.0; bins];
    for &theta in &angles {
        histogram[bin_of(theta, bins)] += 1.0 / g as f64;
    }
    let max_multiplicity = max_cluster(&angles);
    Ok(AngleMeasure { g, angles, histogram, max_multiplicity })
}

/// 12 significant digits, scientific.
pub fn sci(x: f64) -> String {
    format!("{x:.11e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub label: String,
    pub g: usize,
    pub rank: usize,
    pub sha_delta: BigRational,
    pub lhs: f64,
    pub beta: BetaSequence,
    pub dv: f64,
    /// `rhs_partial` for `M = 1..=M_max`.
    pub rhs: Vec<f64>,
}

impl ReportRow {
    pub fn discrepancy(&self) -> f64 {
        (self.lhs - self.rhs.last().copied().unwrap_or(1.0)).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    pub label: String,
    pub h: IsogenyClassData,
    pub max_m: usize,
    pub pooled: bool,
    pub rows: Vec<ReportRow>,
    /// `tail_bound` for `M = 1..=M_max`; `None` below [`TAIL_MIN_M`].
    pub tails: Vec<Option<f64>>,
}

/// Options for [`family_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReportOptions {
    pub max_m: usize,
    /// Use the β estimate of the largest-genus member for every row.
    pub pooled: bool,
    pub threads: usize,
}

pub fn family_report(
    label: &str,
    members: &[NormalizedSnapshot],
    h: &IsogenyClassData,
    opts: &ReportOptions,
) -> Result<RatioReport> {
    if members.is_empty() {
        return Err(Error::invalid("empty family"));
    }
    if let Some(m) = members.iter().find(|m| m.zeta.q() != h.q()) {
        return Err(Error::invalid(format!(
            "member {:?} lives over F_{} but the Frobenius data over F_{}",
            m.label,
            m.zeta.q(),
            h.q()
        )));
    }
    let mut sorted: Vec<&NormalizedSnapshot> = members.iter().collect();
    sorted.sort_by_key(|m| m.genus());
    let terms = rhs_terms(h, opts.max_m)?;
    let pooled_beta = if opts.pooled {
        Some(estimate_beta(sorted.last().expect("nonempty"), opts.max_m)?)
    } else {
        None
    };
    let row = |m: &&NormalizedSnapshot| -> Result<ReportRow> {
        let milne = milne_invariant(&m.zeta, h)?;
        let lhs = lhs_from_milne(&milne).map_err(|_| {
            Error::invalid(format!("member {:?} has genus 0; lhs is undefined", m.label))
        })?;
        let beta = match &pooled_beta {
            Some(b) => b.clone(),
            None => estimate_beta(m, opts.max_m)?,
        };
        let rhs = (1..=opts.max_m).map(|k| rhs_from_terms(&beta.values, &terms, k)).collect();
        Ok(ReportRow {
            label: m.label.clone(),
            g: m.genus(),
            rank: milne.rank,
            sha_delta: milne.sha_delta,
            lhs,
            dv: dv_diagnostic(&beta).value,
            beta,
            rhs,
        })
    };
    let rows = if opts.threads > 1 {
        sorted.par_iter().map(row).collect::<Result<Vec<_>>>()?
    } else {
        sorted.iter().map(row).collect::<Result<Vec<_>>>()?
    };
    let tails = (1..=opts.max_m)
        .map(|k| tail_bound(h.q(), h, k).ok())
        .collect();
    Ok(RatioReport {
        label: label.to_string(),
        h: h.clone(),
        max_m: opts.max_m,
        pooled: opts.pooled,
        rows,
        tails,
    })
}

impl RatioReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,g,rank,sha_delta,lhs");
        for k in 1..=self.max_m {
            let _ = write!(out, ",rhs_M{k}");
        }
        for k in 1..=self.max_m {
            let _ = write!(out, ",tail_M{k}");
        }
        let _ = writeln!(out, ",discrepancy_M{}", self.max_m);
        for row in &self.rows {
            let _ = write!(out, "{},{},{},{},{}", row.label, row.g, row.rank, row.sha_delta, sci(row.lhs));
            for r in &row.rhs {
                let _ = write!(out, ",{}", sci(*r));
            }
            for t in &self.tails {
                match t {
                    Some(t) => {
                        let _ = write!(out, ",{}", sci(*t));
                    }
                    None => out.push_str(",NA"),
                }
            }
            let _ = writeln!(out, ",{}", sci(row.discrepancy()));
        }
        out
    }

    /// Exact values and provenance alongside the CSV.
    pub fn to_json(&self) -> String {
        let rows: Vec<_> = self
            .rows
            .iter()
            .map(|r| {
                json!({
                    "label": r.label,
                    "g": r.g,
                    "rank": r.rank,
                    "sha_delta": r.sha_delta.to_string(),
                    "lhs": sci(r.lhs),
                    "beta": r.beta.values.iter().map(|b| sci(*b)).collect::<Vec<_>>(),
                    "beta_provenance": r.beta.provenance.as_str(),
                    "dv": sci(r.dv),
                    "rhs": r.rhs.iter().map(|x| sci(*x)).collect::<Vec<_>>(),
                    "discrepancy": sci(r.discrepancy()),
                })
            })
            .collect();
        let value = json!({
            "family": self.label,
            "q": self.h.q(),
            "d": self.h.dimension(),
            "h": self.h.to_spec(),
            "max_m": self.max_m,
            "pooled": self.pooled,
            "tails": self.tails.iter().map(|t| t.map(sci)).collect::<Vec<_>>(),
            "rows": rows,
        });
        serde_json::to_string_pretty(&value).expect("plain data") + "\n"
    }
}
