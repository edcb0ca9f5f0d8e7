//! Residue-class teams for an arbitrary base.
//!
//! A base `B` splits the even gaps into classes `r = g mod B`, and the
//! ordered pairs of last digits `(a, b)` of consecutive primes into the
//! matching classes `r = (b - a) mod B`. Team tables aggregate per-class
//! populations `sigma_r` and their ratios `W_r = sigma_r / sigma_2` in four
//! forms: simple expected values from pair counts, asymptotic values from
//! the odd-prime-factor products, model values at a sieve stage, and
//! empirical values from a pair census.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::dynsys::{asymptotic_w, basis_table, GapModel};
use crate::numfmt::{decimals, to_f64};
use crate::{Error, Limits, Result};

/// Units and ordered last-digit pairs of a base, grouped by class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseClassification {
    pub base: u64,
    /// Residues coprime to the base, ascending.
    pub units: Vec<u64>,
    /// For each achievable residue `r = (b - a) mod B`, the ordered unit
    /// pairs `(a, b)` realizing it.
    pub classes: BTreeMap<u64, Vec<(u64, u64)>>,
    /// Denominator class for the W ratios (the class of the gap 2).
    pub reference_class: u64,
}

/// Enumerate units and ordered pairs per class for a base `B >= 3`.
pub fn classify_base(base: u64) -> Result<BaseClassification> {
    if base < 3 {
        return Err(Error::ValidityViolation(format!(
            "base must be >= 3, got {base}"
        )));
    }
    let units: Vec<u64> = (1..base).filter(|&a| gcd(a, base) == 1).collect();
    let mut classes: BTreeMap<u64, Vec<(u64, u64)>> = BTreeMap::new();
    for &a in &units {
        for &b in &units {
            let r = (b + base - a) % base;
            classes.entry(r).or_default().push((a, b));
        }
    }
    // Gaps are even, so only classes reachable by even gaps matter; for an
    // even base that prunes the odd residues.
    if base % 2 == 0 {
        classes.retain(|r, _| r % 2 == 0);
    }
    for pairs in classes.values_mut() {
        pairs.sort_unstable();
    }
    let reference_class = 2 % base;
    Ok(BaseClassification {
        base,
        units,
        classes,
        reference_class,
    })
}

fn gcd(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b > 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Assign each even gap `2..=g_max` to its class `g mod B`.
pub fn gap_roster(base: u64, g_max: u64) -> Result<BTreeMap<u64, Vec<u64>>> {
    if base < 3 {
        return Err(Error::ValidityViolation(format!(
            "base must be >= 3, got {base}"
        )));
    }
    if g_max < 2 || g_max % 2 != 0 {
        return Err(Error::InvalidGap(g_max));
    }
    let mut roster: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    let mut g = 2;
    while g <= g_max {
        roster.entry(g % base).or_default().push(g);
        g += 2;
    }
    Ok(roster)
}

/// Which aggregate a team table holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TeamKind {
    /// Ordered-pair counts per class.
    Expected,
    /// Sums of `w_{g,1}(infinity)` over the class roster.
    Asymptotic,
    /// Sums of modeled `w_{g,1}(p_k#)` over the class roster.
    Model { p_k: u64 },
    /// Counts from a consecutive-prime pair census.
    Empirical,
}

impl TeamKind {
    pub fn name(&self) -> &'static str {
        match self {
            TeamKind::Expected => "expected",
            TeamKind::Asymptotic => "asymptotic",
            TeamKind::Model { .. } => "model",
            TeamKind::Empirical => "empirical",
        }
    }
}

/// A per-class value in whichever precision the table kind supplies.
#[derive(Debug, Clone, PartialEq)]
pub enum TableValue {
    Exact(BigRational),
    Real(f64),
    Count(u64),
}

impl TableValue {
    pub fn as_f64(&self) -> f64 {
        match self {
            TableValue::Exact(r) => to_f64(r),
            TableValue::Real(x) => *x,
            TableValue::Count(n) => *n as f64,
        }
    }

    /// Fixed-point rendering at `places` decimals (counts stay integral).
    pub fn render(&self, places: usize) -> String {
        match self {
            TableValue::Exact(r) => decimals(r, places),
            TableValue::Real(x) => format!("{x:.places$}"),
            TableValue::Count(n) => n.to_string(),
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            TableValue::Exact(r) => Some(r),
            _ => None,
        }
    }
}

/// Per-class sums and ratios for one base.
#[derive(Debug, Clone, PartialEq)]
pub struct TeamTable {
    pub base: u64,
    /// Largest gap aggregated (0 for expected/empirical kinds).
    pub g_max: u64,
    pub kind: TeamKind,
    pub reference_class: u64,
    pub sigma: BTreeMap<u64, TableValue>,
    pub w: BTreeMap<u64, TableValue>,
}

impl TeamTable {
    pub fn w_f64(&self, r: u64) -> Option<f64> {
        self.w.get(&r).map(TableValue::as_f64)
    }
}

/// Simple expected ratios: each ordered pair equally likely, so
/// `W_r = (pair count of r) / (pair count of the reference class)`.
pub fn expected_ratios(base: u64) -> Result<TeamTable> {
    let cls = classify_base(base)?;
    let ref_count = cls.classes[&cls.reference_class].len() as u64;
    let mut sigma = BTreeMap::new();
    let mut w = BTreeMap::new();
    for (&r, pairs) in &cls.classes {
        let n = pairs.len() as u64;
        sigma.insert(r, TableValue::Count(n));
        w.insert(
            r,
            TableValue::Exact(BigRational::new(BigInt::from(n), BigInt::from(ref_count))),
        );
    }
    Ok(TeamTable {
        base,
        g_max: 0,
        kind: TeamKind::Expected,
        reference_class: cls.reference_class,
        sigma,
        w,
    })
}

/// Asymptotic team ratios: `sigma_r = sum of w_{g,1}(infinity)` over the
/// roster, in exact rationals.
pub fn team_ratios_asymptotic(base: u64, g_max: u64) -> Result<TeamTable> {
    let cls = classify_base(base)?;
    let roster = gap_roster(base, g_max)?;
    let mut sigma_exact: BTreeMap<u64, BigRational> = BTreeMap::new();
    for (&r, gaps) in &roster {
        let mut s = BigRational::zero();
        for &g in gaps {
            s += asymptotic_w(g)?;
        }
        sigma_exact.insert(r, s);
    }
    let reference = cls.reference_class;
    let s_ref = sigma_exact
        .get(&reference)
        .filter(|s| !s.is_zero())
        .cloned()
        .ok_or(Error::EmptyReferenceClass(reference))?;
    let mut sigma = BTreeMap::new();
    let mut w = BTreeMap::new();
    for (r, s) in sigma_exact {
        w.insert(r, TableValue::Exact(&s / &s_ref));
        sigma.insert(r, TableValue::Exact(s));
    }
    Ok(TeamTable {
        base,
        g_max,
        kind: TeamKind::Asymptotic,
        reference_class: reference,
        sigma,
        w,
    })
}

fn roster_models<'m>(
    base: u64,
    g_max: u64,
    models: &'m [GapModel],
) -> Result<BTreeMap<u64, Vec<&'m GapModel>>> {
    let roster = gap_roster(base, g_max)?;
    let by_gap: BTreeMap<u64, &GapModel> = models.iter().map(|m| (m.g as u64, m)).collect();
    let mut out: BTreeMap<u64, Vec<&GapModel>> = BTreeMap::new();
    for (&r, gaps) in &roster {
        let mut row = Vec::with_capacity(gaps.len());
        for &g in gaps {
            row.push(*by_gap.get(&g).ok_or(Error::IncompleteRoster(g))?);
        }
        out.insert(r, row);
    }
    Ok(out)
}

/// Model team ratios at a stage: `sigma_r = sum of w_{g,1}(p_k#)` over the
/// roster, using the closed-form models.
pub fn team_ratios_model(
    base: u64,
    g_max: u64,
    models: &[GapModel],
    p_k: u64,
    limits: &Limits,
) -> Result<TeamTable> {
    let cls = classify_base(base)?;
    let grouped = roster_models(base, g_max, models)?;
    // Models may anchor at different stages (the boundary gap sits one
    // stage later); build one basis row per anchor.
    let mut rows: BTreeMap<u64, crate::dynsys::BasisRow> = BTreeMap::new();
    for ms in grouped.values() {
        for m in ms {
            if !rows.contains_key(&m.p0) {
                let t = basis_table(m.p0, m.j_max, &[p_k], limits)?;
                rows.insert(m.p0, t.rows.into_iter().next().unwrap());
            } else if rows[&m.p0].lam.len() < m.j_max.saturating_sub(1) as usize {
                let t = basis_table(m.p0, m.j_max, &[p_k], limits)?;
                rows.insert(m.p0, t.rows.into_iter().next().unwrap());
            }
        }
    }
    let mut sigma_f: BTreeMap<u64, f64> = BTreeMap::new();
    for (&r, ms) in &grouped {
        let s = ms.iter().map(|m| m.eval_row(&rows[&m.p0])).sum();
        sigma_f.insert(r, s);
    }
    let reference = cls.reference_class;
    let s_ref = *sigma_f
        .get(&reference)
        .ok_or(Error::EmptyReferenceClass(reference))?;
    if s_ref == 0.0 {
        return Err(Error::EmptyReferenceClass(reference));
    }
    let mut sigma = BTreeMap::new();
    let mut w = BTreeMap::new();
    for (r, s) in sigma_f {
        sigma.insert(r, TableValue::Real(s));
        w.insert(r, TableValue::Real(s / s_ref));
    }
    Ok(TeamTable {
        base,
        g_max,
        kind: TeamKind::Model { p_k },
        reference_class: reference,
        sigma,
        w,
    })
}

/// Exact-rational model sigmas (small stages), for partition checks.
pub fn team_sigma_model_exact(
    base: u64,
    g_max: u64,
    models: &[GapModel],
    p_k: u64,
    limits: &Limits,
) -> Result<BTreeMap<u64, BigRational>> {
    let grouped = roster_models(base, g_max, models)?;
    let mut out = BTreeMap::new();
    for (&r, ms) in &grouped {
        let mut s = BigRational::zero();
        for m in ms {
            s += m.eval_exact(p_k, limits)?;
        }
        out.insert(r, s);
    }
    Ok(out)
}

/// Empirical team table from per-class pair counts (used by the census
/// side; `sigma_by_class` maps `r -> count`).
pub fn team_table_empirical(
    base: u64,
    sigma_by_class: &BTreeMap<u64, u64>,
) -> Result<TeamTable> {
    let cls = classify_base(base)?;
    let reference = cls.reference_class;
    let s_ref = *sigma_by_class
        .get(&reference)
        .ok_or(Error::EmptyReferenceClass(reference))?;
    if s_ref == 0 {
        return Err(Error::EmptyReferenceClass(reference));
    }
    let mut sigma = BTreeMap::new();
    let mut w = BTreeMap::new();
    for (&r, &n) in sigma_by_class {
        sigma.insert(r, TableValue::Count(n));
        w.insert(r, TableValue::Real(n as f64 / s_ref as f64));
    }
    Ok(TeamTable {
        base,
        g_max: 0,
        kind: TeamKind::Empirical,
        reference_class: reference,
        sigma,
        w,
    })
}
