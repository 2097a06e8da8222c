//! Families of curves: loading mixed sources, normalizing every member to
//! a zeta numerator, finite-level `β_m` estimates and synthetic zetas.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::curve::{count_sequence, CountConfig, CurveModel, CurveSpec};
use crate::error::{Error, Result};
use crate::exact::RationalPoly;
use crate::zeta::{counts_from_zeta, place_counts, zeta_from_counts, PointCounts, ZetaNumerator, ZetaSpec};

/// Attempts per block before [`synthesize_zeta`] gives up.
pub const SYNTH_RETRIES: usize = 10;
/// Slack above 1 before the Drinfeld–Vladut sum is flagged.
pub const DV_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum SnapshotSource {
    Curve(CurveModel),
    Zeta(ZetaNumerator),
    Counts { g: usize, counts: PointCounts },
}

/// One member of a family as given.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilySnapshot {
    pub label: String,
    pub source: SnapshotSource,
}

/// A member after normalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedSnapshot {
    pub label: String,
    pub zeta: ZetaNumerator,
}

impl NormalizedSnapshot {
    pub fn genus(&self) -> usize {
        self.zeta.genus()
    }
}

impl FamilySnapshot {
    pub fn from_zeta(label: impl Into<String>, zeta: ZetaNumerator) -> Self {
        FamilySnapshot { label: label.into(), source: SnapshotSource::Zeta(zeta) }
    }

    pub fn from_curve(label: impl Into<String>, curve: CurveModel) -> Self {
        FamilySnapshot { label: label.into(), source: SnapshotSource::Curve(curve) }
    }

    pub fn q(&self) -> u64 {
        match &self.source {
            SnapshotSource::Curve(c) => c.q(),
            SnapshotSource::Zeta(z) => z.q(),
            SnapshotSource::Counts { counts, .. } => counts.q,
        }
    }

    /// Counts `N_1..N_g` where needed and rebuilds the zeta numerator.
    pub fn normalize(&self, config: &CountConfig) -> Result<NormalizedSnapshot> {
        let zeta = match &self.source {
            SnapshotSource::Zeta(z) => z.clone(),
            SnapshotSource::Curve(c) => {
                let g = c.genus() as usize;
                let counts = count_sequence(c, g as u32, config)?;
                let counts: Vec<BigInt> = counts.into_iter().map(BigInt::from).collect();
                zeta_from_counts(c.q(), g, &counts)?
            }
            SnapshotSource::Counts { g, counts } => {
                if counts.len() < *g {
                    return Err(Error::invalid(format!(
                        "member {:?}: genus {g} needs {g} counts, table has {}",
                        self.label,
                        counts.len()
                    )));
                }
                let z = zeta_from_counts(counts.q, *g, &counts.counts[..*g])?;
                if counts_from_zeta(&z, counts.len()) != *counts {
                    return Err(Error::InconsistentCounts(format!(
                        "member {:?}: counts beyond m = {g} disagree with the zeta function",
                        self.label
                    )));
                }
                z
            }
        };
        Ok(NormalizedSnapshot { label: self.label.clone(), zeta })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    pub q: u64,
    pub members: Vec<FamilySnapshot>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyFile {
    q: u64,
    members: Vec<MemberFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MemberFile {
    label: String,
    #[serde(default)]
    curve: Option<CurveSpec>,
    #[serde(default)]
    zeta: Option<ZetaSpec>,
    #[serde(default)]
    counts_csv: Option<PathBuf>,
    #[serde(default)]
    synthetic: Option<SyntheticFile>,
    #[serde(default)]
    g: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SyntheticFile {
    g: usize,
    #[serde(default = "default_law")]
    law: String,
    #[serde(default)]
    seed: Option<u64>,
}

fn default_law() -> String {
    "sato-tate".into()
}

impl Family {
    /// Parses family JSON; `counts_csv` paths are resolved against `base`.
    pub fn from_json(text: &str, base: &Path) -> Result<Self> {
        Self::from_json_seeded(text, base, 0)
    }

    /// As [`Family::from_json`]; synthetic members without their own seed
    /// use `seed + index`.
    pub fn from_json_seeded(text: &str, base: &Path, seed: u64) -> Result<Self> {
        let file: FamilyFile =
            serde_json::from_str(text).map_err(|e| Error::invalid(format!("family JSON: {e}")))?;
        let mut members = Vec::with_capacity(file.members.len());
        for (index, m) in file.members.into_iter().enumerate() {
            let source = match (m.curve, m.zeta, m.counts_csv, m.synthetic) {
                (Some(c), None, None, None) => SnapshotSource::Curve(c.to_model()?),
                (None, Some(z), None, None) => SnapshotSource::Zeta(z.to_zeta()?),
                (None, None, None, Some(syn)) => {
                    let law: AngleLaw = syn.law.parse()?;
                    let seed = syn.seed.unwrap_or(seed.wrapping_add(index as u64));
                    SnapshotSource::Zeta(synthesize_zeta(syn.g, file.q, law, seed)?)
                }
                (None, None, Some(path), None) => {
                    let g = m.g.ok_or_else(|| {
                        Error::invalid(format!("member {:?}: counts_csv needs a genus \"g\"", m.label))
                    })?;
                    let path = base.join(path);
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
                    SnapshotSource::Counts { g, counts: PointCounts::from_csv(file.q, &text)? }
                }
                _ => {
                    return Err(Error::invalid(format!(
                        "member {:?} needs exactly one of curve, zeta, counts_csv, synthetic",
                        m.label
                    )))
                }
            };
            let snap = FamilySnapshot { label: m.label, source };
            if snap.q() != file.q {
                return Err(Error::invalid(format!(
                    "member {:?} lives over F_{} but the family is over F_{}",
                    snap.label,
                    snap.q(),
                    file.q
                )));
            }
            members.push(snap);
        }
        Ok(Family { q: file.q, members })
    }

    pub fn load(path: &Path, seed: u64) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        Self::from_json_seeded(&text, path.parent().unwrap_or(Path::new(".")), seed)
    }

    /// Normalizes all members, in parallel when `config.threads > 1`. The
    /// output keeps the input order.
    pub fn normalize(&self, config: &CountConfig) -> Result<Vec<NormalizedSnapshot>> {
        if config.threads > 1 {
            self.members.par_iter().map(|m| m.normalize(config)).collect()
        } else {
            self.members.iter().map(|m| m.normalize(config)).collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Declared,
    Estimated,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Declared => "declared",
            Provenance::Estimated => "estimated",
        }
    }
}

/// `β_1..β_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaSequence {
    pub q: u64,
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

impl BetaSequence {
    pub fn declared(q: u64, values: Vec<f64>) -> Result<Self> {
        if let Some(b) = values.iter().find(|b| !b.is_finite() || **b < 0.0) {
            return Err(Error::invalid(format!("β values must be finite and nonnegative, got {b}")));
        }
        Ok(BetaSequence { q, values, provenance: Provenance::Declared })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `β̂_m = B_m / g` for `m = 1..=M`.
pub fn estimate_beta(snapshot: &NormalizedSnapshot, max_m: usize) -> Result<BetaSequence> {
    let g = snapshot.genus();
    if g == 0 {
        return Err(Error::invalid(format!("member {:?} has genus 0; β needs g ≥ 1", snapshot.label)));
    }
    let places = place_counts(&counts_from_zeta(&snapshot.zeta, max_m))?;
    let values = places
        .places
        .iter()
        .map(|b| b.to_f64().unwrap_or(f64::INFINITY) / g as f64)
        .collect();
    Ok(BetaSequence { q: snapshot.zeta.q(), values, provenance: Provenance::Estimated })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DvDiagnostic {
    pub value: f64,
    pub suspect: bool,
}

/// `Σ m β_m / (q^{m/2} - 1)`.
pub fn dv_diagnostic(beta: &BetaSequence) -> DvDiagnostic {
    let q = beta.q as f64;
    let value: f64 = beta
        .values
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let m = (i + 1) as f64;
            m * b / (q.powf(m / 2.0) - 1.0)
        })
        .sum();
    DvDiagnostic { value, suspect: value > 1.0 + DV_SLACK }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleLaw {
    Uniform,
    SatoTate,
}

impl std::str::FromStr for AngleLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(AngleLaw::Uniform),
            "sato-tate" => Ok(AngleLaw::SatoTate),
            _ => Err(Error::invalid(format!("unknown angle law {s:?}"))),
        }
    }
}

fn draw_angle(law: AngleLaw, rng: &mut ChaCha8Rng) -> f64 {
    match law {
        AngleLaw::Uniform => rng.gen_range(0.0..PI),
        AngleLaw::SatoTate => loop {
            let theta: f64 = rng.gen_range(0.0..PI);
            if rng.gen::<f64>() <= theta.sin().powi(2) {
                break theta;
            }
        },
    }
}

/// Whether the monic integer polynomial `x^k + ...` (`k ≤ 2`, lowest first)
/// has all roots real and in `[-2√q, 2√q]`, decided exactly.
fn real_block_ok(block: &[i64], q: i64) -> bool {
    match block.len() - 1 {
        1 => block[0] * block[0] <= 4 * q,
        2 => {
            let (c, b) = (block[0] as i128, block[1] as i128);
            let q = q as i128;
            let disc = b * b - 4 * c;
            let r_at_edge = 4 * q + c;
            disc >= 0 && b * b <= 16 * q && r_at_edge >= 0 && r_at_edge * r_at_edge >= 4 * q * b * b
        }
        _ => false,
    }
}

/// `T^k R(T + q/T)` for a real block `R` of degree `k`.
fn weil_from_real(block: &[i64], q: i64) -> RationalPoly {
    // T + q/T scaled by T: T^2 + q
    let t2q = RationalPoly::from_ints([q, 0, 1]);
    let k = block.len() - 1;
    let mut acc = RationalPoly::zero();
    for (i, &c) in block.iter().enumerate() {
        let term = &t2q.pow(i as u32) * &RationalPoly::from_ints(std::iter::repeat_n(0, k - i).chain([1]));
        acc = &acc + &term.scale(&crate::exact::rat(c));
    }
    acc
}

/// Weil-consistent zeta numerator of genus `g` built from random angles.
///
/// The real polynomial `∏ (x - 2√q cos θ_j)` is assembled from blocks of
/// degree at most two. Each block is rounded to integers and checked
/// exactly; a failing block is redrawn up to [`SYNTH_RETRIES`] times.
pub fn synthesize_zeta(g: usize, q: u64, law: AngleLaw, seed: u64) -> Result<ZetaNumerator> {
    if g == 0 {
        return Err(Error::invalid("synthetic zetas need g ≥ 1"));
    }
    if !(2..=(1 << 40)).contains(&q) {
        return Err(Error::invalid(format!("unsupported q = {q}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((g as u64) << 32) ^ q.rotate_left(48));
    let two_sqrt_q = 2.0 * (q as f64).sqrt();
    let qi = q as i64;
    let mut w = RationalPoly::one();
    let mut remaining = g;
    while remaining > 0 {
        let k = remaining.min(2);
        let mut found = None;
        for _ in 0..SYNTH_RETRIES {
            let xs: Vec<f64> = (0..k).map(|_| two_sqrt_q * draw_angle(law, &mut rng).cos()).collect();
            let block: Vec<i64> = match k {
                1 => vec![(-xs[0]).round() as i64, 1],
                _ => vec![(xs[0] * xs[1]).round() as i64, (-(xs[0] + xs[1])).round() as i64, 1],
            };
            if real_block_ok(&block, qi) {
                found = Some(block);
                break;
            }
        }
        let block = found.ok_or_else(|| {
            Error::Invariant(format!("no valid block after {SYNTH_RETRIES} draws (g = {g}, q = {q}, seed = {seed})"))
        })?;
        w = &w * &weil_from_real(&block, qi);
        remaining -= k;
    }
    let coeffs: Vec<BigInt> = w.to_integers().expect("integer blocks").into_iter().rev().collect();
    debug_assert!(coeffs[0].is_one() && !coeffs.last().unwrap().is_negative());
    ZetaNumerator::new(q, coeffs)
}
