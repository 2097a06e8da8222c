//! Exact arithmetic for constant surfaces over finite fields: point counts,
//! zeta numerators, the Milne product `Sha·Δ` with its rank, and the two
//! sides of the Brauer–Siegel type ratio for families of curves.

pub mod brauer_siegel;
pub mod constant_surface;
pub mod curve;
pub mod error;
pub mod exact;
pub mod families;
pub mod field;
pub mod numeric;
pub mod zeta;

pub use brauer_siegel::{
    family_report, lhs_value, rhs_partial, tail_bound, weil_measure, AngleMeasure, RatioReport, ReportOptions,
};
pub use constant_surface::{
    bsd_value_check, frobenius_poly_elliptic, group_order, milne_float_oracle, milne_invariant, IsogenyClassData,
    MilneResult, OracleResult,
};
pub use curve::{count_points, CountConfig, CurveModel, CurveSpec};
pub use error::{Error, ErrorClass, Result};
pub use exact::RationalPoly;
pub use families::{
    dv_diagnostic, estimate_beta, synthesize_zeta, AngleLaw, BetaSequence, Family, FamilySnapshot, NormalizedSnapshot,
};
pub use field::{FieldDescriptor, FieldElement};
pub use numeric::Precision;
pub use zeta::{counts_from_zeta, place_counts, zeta_from_counts, PlaceCounts, PointCounts, ZetaNumerator};

/// Family of Artin–Schreier curves `y^2 + y = x^{2g+1} + x` over `F_2`,
/// `g = 1..=12`.
pub const SHIPPED_FAMILY: &str = include_str!("../data/artin_schreier_f2.json");
