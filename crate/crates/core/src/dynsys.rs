//! The discrete dynamic system on run censuses.
//!
//! Sieving by the next prime `p` acts on the populations `n_{g,j}` as
//!
//! ```text
//! n_{g,j}  ->  (p - j - 1) * n_{g,j}  +  j * n_{g,j+1}
//! ```
//!
//! valid for all gaps `g <= 2*p1` with `p1` the first prime applied. The
//! matrix is upper triangular with eigenvalues `(p - m - 1)/(p - 2)` whose
//! eigenvectors do not depend on `p`, so a census decomposes once into a
//! closed form for the relative population
//!
//! ```text
//! w_{g,1}(p_k#) = const + sum_{j >= 2} a_j * Lambda_j(k),
//! Lambda_j(k)   = prod_{p1 <= q <= p_k} (q - j - 1)/(q - 2)
//! ```
//!
//! with `const` equal to the product of `(q-1)/(q-2)` over the odd prime
//! factors of `g`. Coefficient extraction runs in exact rationals end to
//! end; only the `Lambda_j` products drop to floating point (compensated),
//! with an exact mode for small stages.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::ops::ControlFlow;

use crate::gapcycle::RunCensus;
use crate::numfmt::to_f64;
use crate::primes::{for_each_prime, is_prime, next_prime, prev_prime};
use crate::{Error, Limits, Result};

/// Reporting anchor for the stage parameter lambda.
pub const LAMBDA_ANCHOR: u64 = 37;

/// Stage cutoff for exact-rational lambda and model evaluation.
pub const EXACT_STAGE_MAX: u64 = 10_000;

// ---------------------------------------------------------------------------
// compensated products
// ---------------------------------------------------------------------------

/// Running product kept as an unevaluated double-double sum `hi + lo`.
#[derive(Debug, Clone, Copy)]
pub struct CompProduct {
    hi: f64,
    lo: f64,
}

impl CompProduct {
    pub fn one() -> Self {
        CompProduct { hi: 1.0, lo: 0.0 }
    }

    #[inline]
    pub fn mul(&mut self, x: f64) {
        let p = self.hi * x;
        let err = f64::mul_add(self.hi, x, -p);
        let lo = f64::mul_add(self.lo, x, err);
        let s = p + lo;
        self.lo = lo - (s - p);
        self.hi = s;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

// ---------------------------------------------------------------------------
// lambda
// ---------------------------------------------------------------------------

/// The system parameter at one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaValue {
    pub anchor_p0: u64,
    pub p_k: u64,
    pub value: f64,
    /// Exact product, populated for `p_k <= EXACT_STAGE_MAX`.
    pub exact: Option<BigRational>,
}

/// `lambda(p_k) = prod_{anchor < q <= p_k} (q-3)/(q-2)`, empty product 1.
pub fn lambda_value(p_k: u64, anchor_p0: u64) -> Result<LambdaValue> {
    if !is_prime(anchor_p0) {
        return Err(Error::NotPrime(anchor_p0));
    }
    if !is_prime(p_k) {
        return Err(Error::NotPrime(p_k));
    }
    if p_k < anchor_p0 {
        return Err(Error::ValidityViolation(format!(
            "lambda needs p_k >= anchor, got p_k={p_k} anchor={anchor_p0}"
        )));
    }
    let mut prod = CompProduct::one();
    let mut exact = (p_k <= EXACT_STAGE_MAX).then(BigRational::one);
    for_each_prime(anchor_p0 + 1, p_k, 1, &Limits::default(), |q| {
        prod.mul((q - 3) as f64 / (q - 2) as f64);
        if let Some(e) = exact.as_mut() {
            *e *= BigRational::new(BigInt::from(q - 3), BigInt::from(q - 2));
        }
        ControlFlow::Continue(())
    })?;
    Ok(LambdaValue {
        anchor_p0,
        p_k,
        value: prod.value(),
        exact,
    })
}

/// Lambda extended below the anchor by the reciprocal product, so every
/// sieve stage can be tagged (values exceed 1 under the anchor).
pub fn lambda_extended(p_k: u64, anchor_p0: u64) -> Result<f64> {
    if p_k >= anchor_p0 {
        return Ok(lambda_value(p_k, anchor_p0)?.value);
    }
    if !is_prime(p_k) {
        return Err(Error::NotPrime(p_k));
    }
    let mut prod = CompProduct::one();
    for_each_prime(p_k + 1, anchor_p0, 1, &Limits::default(), |q| {
        prod.mul((q - 3) as f64 / (q - 2) as f64);
        ControlFlow::Continue(())
    })?;
    Ok(1.0 / prod.value())
}

/// How an inversion result was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvertMode {
    /// Found the exact stage on the sieve's own cumulative product.
    ExactInverted,
    /// Beyond the sieve limit; extrapolated through the `1/ln p` law.
    Extrapolated,
}

/// Result of inverting lambda back to a prime scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Inversion {
    pub lambda: f64,
    /// The first stage with `lambda(p) <= lambda`, when within sieve reach.
    pub prime: Option<u64>,
    pub p_estimate: f64,
    pub mode: InvertMode,
}

/// Cumulative lambda along the primes, checkpointed so that stage lookups
/// and inversions only re-walk one bucket.
pub struct LambdaContext {
    anchor: u64,
    limit: u64,
    /// (prime, lambda including that prime) every CHECKPOINT_EVERY primes,
    /// plus the final prime <= limit.
    checkpoints: Vec<(u64, f64)>,
}

const CHECKPOINT_EVERY: usize = 16_384;

impl LambdaContext {
    pub fn new(anchor: u64, limit: u64, threads: usize, limits: &Limits) -> Result<Self> {
        if !is_prime(anchor) {
            return Err(Error::NotPrime(anchor));
        }
        let mut prod = CompProduct::one();
        let mut checkpoints = Vec::new();
        let mut since = 0usize;
        let mut last = (anchor, 1.0f64);
        for_each_prime(anchor + 1, limit, threads, limits, |q| {
            prod.mul((q - 3) as f64 / (q - 2) as f64);
            last = (q, prod.value());
            since += 1;
            if since == CHECKPOINT_EVERY {
                checkpoints.push(last);
                since = 0;
            }
            ControlFlow::Continue(())
        })?;
        if checkpoints.last() != Some(&last) {
            checkpoints.push(last);
        }
        Ok(LambdaContext {
            anchor,
            limit,
            checkpoints,
        })
    }

    pub fn anchor(&self) -> u64 {
        self.anchor
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn lambda_at_limit(&self) -> f64 {
        self.checkpoints.last().map_or(1.0, |&(_, l)| l)
    }

    /// `lambda(p_k)` for any `p_k <= limit`; the product runs over primes
    /// in `(anchor, p_k]`.
    pub fn value(&self, p_k: u64) -> Result<f64> {
        if p_k > self.limit {
            return Err(Error::ResourceLimit {
                what: "lambda context",
                needed: p_k,
                budget: self.limit,
            });
        }
        if p_k <= self.anchor {
            return Ok(1.0);
        }
        let idx = self.checkpoints.partition_point(|&(p, _)| p <= p_k);
        let (from, lam) = if idx == 0 {
            (self.anchor, 1.0)
        } else {
            self.checkpoints[idx - 1]
        };
        let mut prod = CompProduct::one();
        for_each_prime(from + 1, p_k, 1, &Limits::default(), |q| {
            prod.mul((q - 3) as f64 / (q - 2) as f64);
            ControlFlow::Continue(())
        })?;
        Ok(lam * prod.value())
    }

    /// First stage where lambda drops to `target`, or an extrapolated prime
    /// scale when the target lies beyond the context's reach.
    pub fn invert(&self, target: f64) -> Result<Inversion> {
        if !(target > 0.0 && target < 1.0) {
            return Err(Error::OutOfRange(target));
        }
        let at_limit = self.lambda_at_limit();
        if target < at_limit {
            // lambda ~ A / ln p with A pinned at the context limit.
            let a = at_limit * (self.limit as f64).ln();
            let p_estimate = (a / target).exp();
            return Ok(Inversion {
                lambda: target,
                prime: None,
                p_estimate,
                mode: InvertMode::Extrapolated,
            });
        }
        // First checkpoint at or below the target, then walk its bucket.
        let idx = self.checkpoints.partition_point(|&(_, l)| l > target);
        let (from, mut lam) = if idx == 0 {
            (self.anchor, 1.0)
        } else {
            self.checkpoints[idx - 1]
        };
        let mut hit = None;
        for_each_prime(from + 1, self.limit, 1, &Limits::default(), |q| {
            lam *= (q - 3) as f64 / (q - 2) as f64;
            if lam <= target {
                hit = Some(q);
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })?;
        let prime = hit.ok_or(Error::OutOfRange(target))?;
        Ok(Inversion {
            lambda: target,
            prime: Some(prime),
            p_estimate: prime as f64,
            mode: InvertMode::ExactInverted,
        })
    }
}

/// Reporting lambda for every prime stage `<= p_max` in one pass, with the
/// reciprocal extension below the anchor.
pub fn lambda_table(p_max: u64, limits: &Limits) -> Result<Vec<(u64, f64)>> {
    let stages = crate::primes::primes_below(p_max);
    let stages: Vec<u64> = stages.into_iter().filter(|&p| p >= 3).collect();
    if p_max > limits.sieve_max {
        return Err(Error::ResourceLimit {
            what: "lambda table",
            needed: p_max,
            budget: limits.sieve_max,
        });
    }
    let mut out: Vec<(u64, f64)> = stages.iter().map(|&p| (p, 1.0)).collect();
    let split = stages.partition_point(|&p| p <= LAMBDA_ANCHOR);
    // Above the anchor: running forward product.
    let mut prod = CompProduct::one();
    for (p, l) in out.iter_mut().skip(split) {
        prod.mul((*p - 3) as f64 / (*p - 2) as f64);
        *l = prod.value();
    }
    // At or below: divide back down stage by stage.
    if split > 0 {
        let mut idx = split - 1;
        loop {
            let p = stages[idx];
            out[idx].1 = if p == LAMBDA_ANCHOR {
                1.0
            } else if idx + 1 < stages.len() {
                let q = stages[idx + 1];
                out[idx + 1].1 * (q - 2) as f64 / (q - 3) as f64
            } else {
                lambda_extended(p, LAMBDA_ANCHOR)?
            };
            if idx == 0 {
                break;
            }
            idx -= 1;
        }
    }
    Ok(out)
}

/// One-shot inversion: builds a context up to `sieve_limit` and inverts.
pub fn lambda_to_prime(
    lambda: f64,
    anchor_p0: u64,
    sieve_limit: u64,
    threads: usize,
    limits: &Limits,
) -> Result<Inversion> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::OutOfRange(lambda));
    }
    LambdaContext::new(anchor_p0, sieve_limit, threads, limits)?.invert(lambda)
}

// ---------------------------------------------------------------------------
// census advance
// ---------------------------------------------------------------------------

/// Advance a census by one sieve stage with the exact update rule.
///
/// For `g < 2*p` a run's points all sit in distinct residues mod `p` (the
/// points differ by even amounts below `2p`), so removals land in `j + 1`
/// distinct replicas and the survival coefficient is `p - j - 1`. At the
/// boundary `g = 2*p` the two endpoints differ by exactly `2p` and share a
/// replica, which raises the coefficient to `p - j`. Both cases are pinned
/// by the oracle-equivalence tests against direct enumeration.
pub fn advance_census(c: &RunCensus, p_next: u64) -> Result<RunCensus> {
    if !is_prime(p_next) || next_prime(c.stage.p) != p_next {
        return Err(Error::NonConsecutivePrime {
            from: c.stage.p,
            to: p_next,
        });
    }
    let max_g = c.max_gap();
    if max_g as u64 > 2 * p_next {
        return Err(Error::ValidityViolation(format!(
            "census holds counts for g={max_g} beyond the validity bound 2*{p_next}"
        )));
    }
    let j_any = c.max_run_len_any();
    if p_next <= j_any as u64 + 1 {
        return Err(Error::ValidityViolation(format!(
            "run length {j_any} too long to advance by {p_next}"
        )));
    }
    let mut counts = std::collections::BTreeMap::new();
    let mut g = 2;
    while g <= c.g_cap {
        let survive = if g as u64 == 2 * p_next {
            p_next // endpoints share a removal replica
        } else {
            p_next - 1
        };
        for j in 1..=c.max_run_len(g) {
            let n = c.count(g, j) * (survive - j as u64) + c.count(g, j + 1) * (j as u64);
            if !n.is_zero() {
                counts.insert((g, j), n);
            }
        }
        g += 2;
    }
    Ok(RunCensus::from_counts(
        c.stage.advanced_by(p_next),
        c.g_cap,
        counts,
    ))
}

// ---------------------------------------------------------------------------
// models
// ---------------------------------------------------------------------------

/// Closed form for the relative population of one gap:
/// `w_{g,1}(p_k#) = const_term + sum_{j>=2} a_j * Lambda_j(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapModel {
    pub g: u32,
    pub p0: u64,
    /// Longest run length present in the initial census.
    pub j_max: u32,
    /// `w_{g,1}(infinity)`; equals the product over odd prime factors.
    pub const_term: BigRational,
    /// `a_2 .. a_J`, signed; expected to alternate starting negative.
    pub coeffs: Vec<BigRational>,
    pub odd_prime_factors: Vec<u64>,
    /// Coefficient indices j that break the sign alternation (reported, and
    /// asserted empty by the verification suite).
    pub sign_violations: Vec<u32>,
}

/// `w_{g,1}(infinity) = prod (q-1)/(q-2)` over odd prime factors of `g`.
pub fn asymptotic_w(g: u64) -> Result<BigRational> {
    if g < 2 || g % 2 != 0 {
        return Err(Error::InvalidGap(g));
    }
    let mut w = BigRational::one();
    for q in odd_prime_factors(g) {
        w *= BigRational::new(BigInt::from(q - 1), BigInt::from(q - 2));
    }
    Ok(w)
}

pub(crate) fn odd_prime_factors(g: u64) -> Vec<u64> {
    let mut n = g;
    while n % 2 == 0 && n > 0 {
        n /= 2;
    }
    let mut out = Vec::new();
    let mut q = 3u64;
    while q * q <= n {
        if n % q == 0 {
            out.push(q);
            while n % q == 0 {
                n /= q;
            }
        }
        q += 2;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// `prod_{3 <= q <= p} (q - 2)`, the relative-population normalizer.
pub fn normalizer(p: u64) -> BigUint {
    let mut n = BigUint::one();
    for q in crate::primes::primes_below(p).iter().skip(1) {
        n *= q - 2;
    }
    n
}

/// Fit the closed-form model for gap `g` from an initial census.
///
/// The update matrix is upper triangular; the eigenvector for index `m` has
/// support `j <= m` with `v_j = j * v_{j+1} / (j - m)` downward from
/// `v_m = 1`. Mixture coefficients come from back substitution against the
/// initial relative populations. The fitted constant must reproduce the
/// odd-prime-factor product exactly; a mismatch is an error, not a warning.
///
/// The boundary gap `g = 2*p1` sees the corrected survival coefficient at
/// its first step, where the basis products do not apply; its census is
/// advanced one stage first and the model anchors at `p1`, where the gap is
/// strictly interior.
pub fn derive_model(c: &RunCensus, g: u32) -> Result<GapModel> {
    if g < 2 || g % 2 != 0 {
        return Err(Error::InvalidGap(g as u64));
    }
    let p0 = c.stage.p;
    let p1 = next_prime(p0);
    if g as u64 > 2 * p1 {
        return Err(Error::ValidityViolation(format!(
            "gap {g} outside model validity g <= 2*{p1} for anchor {p0}"
        )));
    }
    if g > c.g_cap {
        return Err(Error::ValidityViolation(format!(
            "gap {g} beyond census cap {}",
            c.g_cap
        )));
    }
    if g as u64 == 2 * p1 {
        return derive_model(&advance_census(&c.truncated(g), p1)?, g);
    }
    let j_max = c.max_run_len(g);
    if j_max == 0 {
        return Err(Error::ValidityViolation(format!(
            "gap {g} does not occur in the census at {p0}"
        )));
    }
    if j_max as u64 + 1 >= p1 {
        return Err(Error::DegenerateSystem { g, j_max, p1 });
    }
    let jm = j_max as usize;
    let norm = BigInt::from(normalizer(p0));
    // Initial relative populations w_{g,j}(p0#), j = 1..=J.
    let w0: Vec<BigRational> = (1..=j_max)
        .map(|j| BigRational::new(BigInt::from(c.count(g, j)), norm.clone()))
        .collect();
    // Eigenvector components v[m][j] (1-based, support j <= m), v[m][m] = 1.
    let mut v = vec![vec![BigRational::zero(); jm + 1]; jm + 1];
    for m in 1..=jm {
        v[m][m] = BigRational::one();
        for j in (1..m).rev() {
            v[m][j] =
                &v[m][j + 1] * BigRational::new(BigInt::from(j), BigInt::from(j as i64 - m as i64));
        }
    }
    // Back substitution for the mixture: sum_m alpha_m v[m] = w0.
    let mut alpha = vec![BigRational::zero(); jm + 1];
    for m in (1..=jm).rev() {
        let mut a = w0[m - 1].clone();
        for mm in m + 1..=jm {
            a -= &alpha[mm] * &v[mm][m];
        }
        alpha[m] = a;
    }
    let const_term = alpha[1].clone();
    let coeffs: Vec<BigRational> = (2..=jm).map(|m| &alpha[m] * &v[m][1]).collect();

    let want = asymptotic_w(g as u64)?;
    if const_term != want {
        return Err(Error::ConstTermMismatch {
            g,
            got: const_term.to_string(),
            want: want.to_string(),
        });
    }
    let sign_violations = coeffs
        .iter()
        .enumerate()
        .filter_map(|(i, a)| {
            let j = i as u32 + 2;
            let ok = if j % 2 == 0 {
                a.is_negative()
            } else {
                a.is_positive()
            };
            (!ok).then_some(j)
        })
        .collect();
    Ok(GapModel {
        g,
        p0,
        j_max,
        const_term,
        coeffs,
        odd_prime_factors: odd_prime_factors(g as u64),
        sign_violations,
    })
}

/// Models for every even gap `2..=g_max` in the census.
pub fn derive_all_models(c: &RunCensus, g_max: u32) -> Result<Vec<GapModel>> {
    (1..=g_max / 2).map(|h| derive_model(c, 2 * h)).collect()
}

// ---------------------------------------------------------------------------
// basis products and evaluation
// ---------------------------------------------------------------------------

/// Floating `Lambda_j` products at one stage, shared across models.
#[derive(Debug, Clone)]
pub struct BasisRow {
    pub p_k: u64,
    /// Reporting lambda, anchored at 37 (exceeds 1 below the anchor).
    pub lambda37: f64,
    /// Raw lambda from the model anchor: `Lambda_2`.
    pub lambda_raw: f64,
    /// `Lambda_j` for j = 2.. (index 0 <-> j = 2).
    pub lam: Vec<f64>,
    /// `prod_{3 <= q <= p_k} (q-1)/(q-2)`: the sum of `w_{g,1}` over all gaps.
    pub total_w: f64,
}

/// `Lambda_j` products checkpointed along an ascending list of stages.
#[derive(Debug, Clone)]
pub struct BasisTable {
    pub p0: u64,
    pub j_max: u32,
    pub rows: Vec<BasisRow>,
}

/// Build `Lambda_j(p0 -> s)` for every stage in `stages` (strictly
/// ascending primes `>= p0`) in one pass over the primes.
pub fn basis_table(p0: u64, j_max: u32, stages: &[u64], limits: &Limits) -> Result<BasisTable> {
    if !is_prime(p0) {
        return Err(Error::NotPrime(p0));
    }
    for w in stages.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::ValidityViolation(
                "stage list must be strictly ascending".into(),
            ));
        }
    }
    for &s in stages {
        if s < p0 {
            return Err(Error::ValidityViolation(format!(
                "stage {s} below model anchor {p0}"
            )));
        }
        if !is_prime(s) {
            return Err(Error::NotPrime(s));
        }
    }
    let j_max = j_max.max(2);
    let hi = match stages.last() {
        Some(&s) => s,
        None => return Ok(BasisTable {
            p0,
            j_max,
            rows: Vec::new(),
        }),
    };
    let mut lam: Vec<CompProduct> = (2..=j_max).map(|_| CompProduct::one()).collect();
    let mut l37 = CompProduct::one();
    let mut total = CompProduct::one();
    let mut rows: Vec<BasisRow> = Vec::with_capacity(stages.len());
    let mut next = 0usize;
    for_each_prime(3, hi, 1, limits, |q| {
        total.mul((q - 1) as f64 / (q - 2) as f64);
        if q > LAMBDA_ANCHOR {
            l37.mul((q - 3) as f64 / (q - 2) as f64);
        }
        if q > p0 {
            for (i, l) in lam.iter_mut().enumerate() {
                let j = i as u64 + 2;
                l.mul((q - j - 1) as f64 / (q - 2) as f64);
            }
        }
        while next < stages.len() && stages[next] == q {
            rows.push(BasisRow {
                p_k: q,
                lambda37: if q >= LAMBDA_ANCHOR {
                    l37.value()
                } else {
                    f64::NAN // fixed up below with the extended lambda
                },
                lambda_raw: lam[0].value(),
                lam: lam.iter().map(|l| l.value()).collect(),
                total_w: total.value(),
            });
            next += 1;
        }
        if next == stages.len() {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    debug_assert_eq!(rows.len(), stages.len());
    for row in rows.iter_mut().filter(|r| r.lambda37.is_nan()) {
        row.lambda37 = lambda_extended(row.p_k, LAMBDA_ANCHOR)?;
    }
    Ok(BasisTable { p0, j_max, rows })
}

impl GapModel {
    /// Evaluate `w_{g,1}` at a stage through a shared basis row.
    pub fn eval_row(&self, row: &BasisRow) -> f64 {
        let mut w = to_f64(&self.const_term);
        for (i, a) in self.coeffs.iter().enumerate() {
            w += to_f64(a) * row.lam[i];
        }
        w
    }

    /// Evaluate `w_{g,1}(p_k#)` in floating point.
    pub fn eval(&self, p_k: u64, limits: &Limits) -> Result<f64> {
        if p_k < self.p0 {
            return Err(Error::ValidityViolation(format!(
                "stage {p_k} below model anchor {}",
                self.p0
            )));
        }
        let table = basis_table(self.p0, self.j_max, &[p_k], limits)?;
        Ok(self.eval_row(&table.rows[0]))
    }

    /// Evaluate exactly, for `p0 <= p_k <= EXACT_STAGE_MAX`.
    pub fn eval_exact(&self, p_k: u64, limits: &Limits) -> Result<BigRational> {
        if p_k < self.p0 || p_k > EXACT_STAGE_MAX {
            return Err(Error::ValidityViolation(format!(
                "exact evaluation supports p0 <= p_k <= {EXACT_STAGE_MAX}, got {p_k}"
            )));
        }
        if !is_prime(p_k) {
            return Err(Error::NotPrime(p_k));
        }
        // Lambda_j numerators over one shared denominator.
        let mut nums: Vec<BigUint> = (2..=self.j_max.max(2)).map(|_| BigUint::one()).collect();
        let mut den = BigUint::one();
        for_each_prime(self.p0 + 1, p_k, 1, limits, |q| {
            den *= q - 2;
            for (i, n) in nums.iter_mut().enumerate() {
                let j = i as u64 + 2;
                *n *= q - j - 1;
            }
            ControlFlow::Continue(())
        })?;
        let den = BigInt::from(den);
        let mut w = self.const_term.clone();
        for (a, n) in self.coeffs.iter().zip(nums) {
            w += a * BigRational::new(BigInt::from(n), den.clone());
        }
        Ok(w)
    }
}

// ---------------------------------------------------------------------------
// survival intervals
// ---------------------------------------------------------------------------

/// `[p_k^2, p_{k+1}^2]`: the integers whose primality stage `p_k` settles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SurvivalInterval {
    pub p_k: u64,
    pub lo: u64,
    pub hi: u64,
}

pub fn survival_interval(p_k: u64) -> Result<SurvivalInterval> {
    if !is_prime(p_k) {
        return Err(Error::NotPrime(p_k));
    }
    let p_next = next_prime(p_k);
    Ok(SurvivalInterval {
        p_k,
        lo: p_k * p_k,
        hi: p_next * p_next,
    })
}

// ---------------------------------------------------------------------------
// rho: fraction of all gaps covered by a model set
// ---------------------------------------------------------------------------

/// Direct and Lemma-approximated coverage of a gap subset.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoReport {
    pub p_k: u64,
    /// `sum_S w / prod_{3<=q<=p_k} (q-1)/(q-2)`, the exact proportion.
    pub direct: f64,
    /// `c0 * lambda * sum_S w`, the Lemma approximation.
    pub lemma: f64,
    pub sum_w: f64,
    /// The universal constant `(1/2) prod (1 + 1/((q-1)(q-3)))` ~ 0.6099.
    pub universal: f64,
    /// `c0 = universal * prod_{5<=q<=p0} (q-3)/(q-2)` for the model anchor.
    pub coefficient: f64,
}

/// Half the product of `1 + 1/((q-1)(q-3))` over primes `q >= 5`, taken far
/// enough to converge (the tail past 1e6 is below 1e-7).
pub fn universal_rho_factor(precision_limit: u64, limits: &Limits) -> Result<f64> {
    let mut prod = CompProduct::one();
    for_each_prime(5, precision_limit, 1, limits, |q| {
        prod.mul(1.0 + 1.0 / ((q - 1) as f64 * (q - 3) as f64));
        ControlFlow::Continue(())
    })?;
    Ok(prod.value() / 2.0)
}

/// The Lemma coefficient for an anchor: `0.6099 * prod_{5<=q<=p0}(q-3)/(q-2)`.
pub fn rho_coefficient(p0: u64, precision_limit: u64, limits: &Limits) -> Result<f64> {
    let universal = universal_rho_factor(precision_limit, limits)?;
    let mut prod = CompProduct::one();
    for_each_prime(5, p0, 1, limits, |q| {
        prod.mul((q - 3) as f64 / (q - 2) as f64);
        ControlFlow::Continue(())
    })?;
    Ok(universal * prod.value())
}

/// Proportion of all gaps represented by the modeled set at stage `p_k`,
/// computed directly and through the Lemma approximation.
///
/// Models may anchor at two adjacent stages (the boundary gap sits one
/// later); the census anchor for the reported coefficient is the smallest.
pub fn rho_fraction(models: &[GapModel], p_k: u64, limits: &Limits) -> Result<RhoReport> {
    let p0 = models
        .iter()
        .map(|m| m.p0)
        .min()
        .ok_or_else(|| Error::ValidityViolation("empty model set".into()))?;
    let mut sum_w = 0.0f64;
    let mut total_w = f64::NAN;
    let mut anchors: Vec<u64> = models.iter().map(|m| m.p0).collect();
    anchors.sort_unstable();
    anchors.dedup();
    for anchor in anchors {
        let j_max = models
            .iter()
            .filter(|m| m.p0 == anchor)
            .map(|m| m.j_max)
            .max()
            .unwrap();
        let table = basis_table(anchor, j_max, &[p_k], limits)?;
        let row = &table.rows[0];
        sum_w += models
            .iter()
            .filter(|m| m.p0 == anchor)
            .map(|m| m.eval_row(row))
            .sum::<f64>();
        total_w = row.total_w; // same product regardless of anchor
    }
    let universal = universal_rho_factor(2_000_000, limits)?;
    let mut five_to_pk = CompProduct::one();
    let mut five_to_p0 = CompProduct::one();
    for_each_prime(5, p_k, 1, limits, |q| {
        let f = (q - 3) as f64 / (q - 2) as f64;
        five_to_pk.mul(f);
        if q <= p0 {
            five_to_p0.mul(f);
        }
        ControlFlow::Continue(())
    })?;
    Ok(RhoReport {
        p_k,
        direct: sum_w / total_w,
        lemma: universal * five_to_pk.value() * sum_w,
        sum_w,
        universal,
        coefficient: universal * five_to_p0.value(),
    })
}

// ---------------------------------------------------------------------------
// crossings
// ---------------------------------------------------------------------------

/// Where one model's population overtakes another's.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossing {
    /// Reporting lambda (anchor 37) at the crossing.
    pub lambda: f64,
    /// Common relative population there.
    pub w: f64,
    /// Prime scale of the crossing stage (extrapolated beyond sieve reach).
    pub p_estimate: f64,
}

/// Model evaluation as a function of lambda rather than a stage.
///
/// Within sieve reach the `Lambda_j` come from exact stage products on a
/// geometric grid; beyond it they continue as `c_j * lambda_raw^(j-1)` with
/// `c_j` frozen where the grid ends (the ratio `Lambda_j / lambda^(j-1)`
/// converges fast, so the regimes agree at the boundary).
pub struct LambdaParam {
    p0: u64,
    /// lambda_raw = lambda37 * conv.
    conv: f64,
    /// Exact rows, ascending in p (descending in lambda).
    grid: Vec<BasisRow>,
    /// Frozen `c_j = Lambda_j / lambda_raw^(j-1)` at the grid end.
    c: Vec<f64>,
    lambda37_end: f64,
    /// `lambda37 * ln p` at the grid end, for prime-scale estimates.
    ln_scale: f64,
}

impl LambdaParam {
    pub fn new(p0: u64, j_max: u32, eval_limit: u64, limits: &Limits) -> Result<Self> {
        let mut stages = vec![p0];
        let mut t = p0 as f64;
        loop {
            t *= 1.06;
            if t >= eval_limit as f64 {
                break;
            }
            let cand = next_prime(t as u64);
            if cand > *stages.last().unwrap() && cand <= eval_limit {
                stages.push(cand);
            }
        }
        if let Some(last) = prev_prime(eval_limit + 1) {
            if last > *stages.last().unwrap() {
                stages.push(last);
            }
        }
        let table = basis_table(p0, j_max, &stages, limits)?;
        let end = table.rows.last().unwrap();
        let lraw = end.lambda_raw;
        let c: Vec<f64> = end
            .lam
            .iter()
            .enumerate()
            .map(|(i, l)| l / lraw.powi(i as i32 + 1))
            .collect();
        Ok(LambdaParam {
            p0,
            conv: end.lambda_raw / end.lambda37,
            lambda37_end: end.lambda37,
            ln_scale: end.lambda37 * (end.p_k as f64).ln(),
            c,
            grid: table.rows,
        })
    }

    pub fn anchor(&self) -> u64 {
        self.p0
    }

    pub fn lambda_end(&self) -> f64 {
        self.lambda37_end
    }

    /// Stage lambdas (anchor 37) of the exact grid, descending.
    pub fn grid_lambdas(&self) -> Vec<f64> {
        self.grid.iter().map(|r| r.lambda37).collect()
    }

    /// Evaluate a model at a reporting lambda.
    pub fn eval(&self, m: &GapModel, lambda37: f64) -> f64 {
        if lambda37 >= self.lambda37_end {
            let idx = self
                .grid
                .partition_point(|r| r.lambda37 > lambda37)
                .min(self.grid.len() - 1);
            return m.eval_row(&self.grid[idx]);
        }
        let lraw = lambda37 * self.conv;
        let mut w = to_f64(&m.const_term);
        for (i, a) in m.coeffs.iter().enumerate() {
            w += to_f64(a) * self.c[i] * lraw.powi(i as i32 + 1);
        }
        w
    }

    /// Prime scale for a lambda (1/ln p law beyond the grid).
    pub fn prime_scale(&self, lambda37: f64) -> f64 {
        (self.ln_scale / lambda37).exp()
    }
}

/// Search for the stage where `m2` first exceeds `m1`, scanning lambda
/// downward from 1 and bisecting the bracketing interval.
pub fn find_crossing(
    m1: &GapModel,
    m2: &GapModel,
    eval_limit: u64,
    limits: &Limits,
) -> Result<Crossing> {
    if m1.p0 != m2.p0 {
        return Err(Error::ValidityViolation(
            "models must share a census anchor".into(),
        ));
    }
    let j_max = m1.j_max.max(m2.j_max);
    let param = LambdaParam::new(m1.p0, j_max, eval_limit, limits)?;
    let diff = |l: f64| param.eval(m2, l) - param.eval(m1, l);

    let mut points: Vec<f64> = param
        .grid_lambdas()
        .into_iter()
        .filter(|&l| l < 1.0)
        .collect();
    let mut l = param.lambda37_end;
    while l > 1e-6 {
        l *= 0.97;
        points.push(l);
    }
    let mut prev: Option<f64> = None;
    for &l in &points {
        if diff(l) > 0.0 {
            let hi_l = prev.ok_or(Error::NoCrossing)?;
            let (mut a, mut b) = (hi_l, l);
            for _ in 0..128 {
                let mid = 0.5 * (a + b);
                if diff(mid) > 0.0 {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            let lambda = 0.5 * (a + b);
            return Ok(Crossing {
                lambda,
                w: param.eval(m2, lambda),
                p_estimate: param.prime_scale(lambda),
            });
        }
        prev = Some(l);
    }
    Err(Error::NoCrossing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gapcycle::{census_runs, generate_cycle, RunCensus};

    fn limits() -> Limits {
        Limits::default()
    }

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn census_at(p: u64, g_cap: u32) -> RunCensus {
        census_runs(&generate_cycle(p, &limits()).unwrap(), g_cap).unwrap()
    }

    #[test]
    fn advance_from_5_to_7() {
        let c5 = census_at(5, 14);
        let c7 = advance_census(&c5, 7).unwrap();
        assert_eq!(c7.count(6, 1), 14u32.into()); // (7-2)*2 + 1*4
        assert_eq!(c7.count(2, 1), 15u32.into()); // 5*3 + 0
        assert_eq!(c7.count(8, 1), 2u32.into()); // 5*0 + 1*2
        assert_eq!(c7.stage.p, 7);
        assert_eq!(c7.stage.k, 1);
    }

    #[test]
    fn advance_rejects_skips() {
        let c5 = census_at(5, 14);
        assert!(matches!(
            advance_census(&c5, 11),
            Err(Error::NonConsecutivePrime { from: 5, to: 11 })
        ));
    }

    #[test]
    fn advance_rejects_out_of_validity() {
        let c5 = census_at(5, 16); // holds g = 16 > 2*7
        assert!(matches!(
            advance_census(&c5, 7),
            Err(Error::ValidityViolation(_))
        ));
    }

    fn cells(c: &RunCensus) -> Vec<(u32, u32, BigUint)> {
        c.iter().map(|(g, j, n)| (g, j, n.clone())).collect()
    }

    #[test]
    fn oracle_equivalence_small() {
        let mut c = census_at(5, 14);
        for p in [7u64, 11, 13] {
            c = advance_census(&c, p).unwrap();
            let direct = census_at(p, 14);
            assert_eq!(c.stage.p, direct.stage.p);
            assert_eq!(cells(&c), cells(&direct), "stage {p}");
        }
    }

    #[test]
    fn boundary_gap_model_anchors_at_next_prime() {
        // g = 2*p1 needs one corrected advance; the fit lands at p1 and the
        // constant-term law still holds there.
        let c7 = census_at(7, 22);
        let m22 = derive_model(&c7, 22).unwrap();
        assert_eq!(m22.p0, 11);
        assert_eq!(m22.const_term, ratio(10, 9));
        let c5 = census_at(5, 14);
        let m14 = derive_model(&c5, 14).unwrap();
        assert_eq!(m14.p0, 7);
        assert_eq!(m14.const_term, ratio(6, 5));
    }

    #[test]
    fn model_for_gap_6_from_g5() {
        let c5 = census_at(5, 14);
        let m = derive_model(&c5, 6).unwrap();
        assert_eq!(m.j_max, 2);
        assert_eq!(m.const_term, ratio(2, 1));
        assert_eq!(m.coeffs, vec![ratio(-4, 3)]);
        assert!(m.sign_violations.is_empty());
        // at p=7: 2 - (4/3)(4/5) = 14/15
        assert_eq!(m.eval_exact(7, &limits()).unwrap(), ratio(14, 15));
    }

    #[test]
    fn model_for_gaps_2_and_4_is_constant_one() {
        let c5 = census_at(5, 14);
        let m = derive_model(&c5, 2).unwrap();
        assert_eq!(m.const_term, ratio(1, 1));
        assert!(m.coeffs.is_empty());
        assert_eq!(m.eval(1009, &limits()).unwrap(), 1.0);
        let c13 = census_at(13, 26);
        let m4 = derive_model(&c13, 4).unwrap();
        assert_eq!(m4.const_term, ratio(1, 1));
        assert!(m4.coeffs.is_empty());
    }

    #[test]
    fn model_errors() {
        let c5 = census_at(5, 14);
        assert!(matches!(
            derive_model(&c5, 16),
            Err(Error::ValidityViolation(_))
        ));
        assert!(matches!(derive_model(&c5, 5), Err(Error::InvalidGap(5))));
    }

    #[test]
    fn closed_form_matches_iteration_small() {
        // exact model evaluation equals the iterated recursion, anchor 7
        let c7 = census_at(7, 22);
        let models: Vec<GapModel> = [2u32, 6, 10, 22]
            .iter()
            .map(|&g| derive_model(&c7, g).unwrap())
            .collect();
        let mut c = c7.clone();
        for p in [11u64, 13, 17, 19, 23, 29, 31] {
            c = advance_census(&c, p).unwrap();
            let norm = BigInt::from(normalizer(p));
            for m in &models {
                let got = m.eval_exact(p, &limits()).unwrap();
                let want = BigRational::new(BigInt::from(c.count(m.g, 1)), norm.clone());
                assert_eq!(got, want, "g={} at p={p}", m.g);
            }
        }
    }

    #[test]
    fn asymptotic_values() {
        assert_eq!(asymptotic_w(32).unwrap(), ratio(1, 1));
        assert_eq!(asymptotic_w(6).unwrap(), ratio(2, 1));
        assert_eq!(asymptotic_w(82).unwrap(), ratio(40, 39));
        assert_eq!(asymptotic_w(30).unwrap(), ratio(8, 3));
        assert!(matches!(asymptotic_w(7), Err(Error::InvalidGap(7))));
        assert!(matches!(asymptotic_w(0), Err(Error::InvalidGap(0))));
    }

    #[test]
    fn lambda_basics() {
        assert_eq!(lambda_value(37, 37).unwrap().value, 1.0);
        let l41 = lambda_value(41, 37).unwrap();
        assert_eq!(l41.exact, Some(ratio(38, 39)));
        assert!((l41.value - 38.0 / 39.0).abs() < 1e-15);
        assert!(matches!(lambda_value(36, 37), Err(Error::NotPrime(36))));
        assert!(matches!(
            lambda_value(31, 37),
            Err(Error::ValidityViolation(_))
        ));
    }

    #[test]
    fn lambda_at_45161() {
        let l = lambda_value(45161, 37).unwrap();
        assert!(
            (l.value - 0.3481).abs() < 0.0005,
            "lambda(45161) = {}",
            l.value
        );
    }

    #[test]
    fn lambda_extended_below_anchor() {
        let l31 = lambda_extended(31, 37).unwrap();
        assert!((l31 - 35.0 / 34.0).abs() < 1e-12);
        assert_eq!(lambda_extended(37, 37).unwrap(), 1.0);
    }

    #[test]
    fn lambda_table_matches_pointwise() {
        let table = lambda_table(1000, &limits()).unwrap();
        for &(p, l) in &table {
            let want = lambda_extended(p, LAMBDA_ANCHOR).unwrap();
            assert!((l - want).abs() < 1e-12, "stage {p}: {l} vs {want}");
        }
        // below-anchor-only table exercises the tail extension
        let small = lambda_table(13, &limits()).unwrap();
        assert_eq!(small.len(), 5); // 3, 5, 7, 11, 13
        for &(p, l) in &small {
            let want = lambda_extended(p, LAMBDA_ANCHOR).unwrap();
            assert!((l - want).abs() < 1e-12, "stage {p}");
        }
    }

    #[test]
    fn lambda_context_and_inversion() {
        let ctx = LambdaContext::new(37, 2_000_000, 1, &limits()).unwrap();
        let inv = ctx.invert(0.3481).unwrap();
        assert_eq!(inv.mode, InvertMode::ExactInverted);
        let p = inv.prime.unwrap();
        assert!(
            ((p as f64).ln() - (45161f64).ln()).abs() < 0.02 * (45161f64).ln(),
            "p = {p}"
        );
        let p270 = ctx.invert(0.270).unwrap().prime.unwrap() as f64;
        assert!((7e5..1.4e6).contains(&p270), "p(0.270) = {p270}");
        let direct = lambda_value(100_003, 37).unwrap().value;
        assert!((ctx.value(100_003).unwrap() - direct).abs() < 1e-12);
        assert!(matches!(ctx.invert(1.5), Err(Error::OutOfRange(_))));
        assert!(matches!(ctx.invert(0.0), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn lambda_roundtrip_sampled() {
        let ctx = LambdaContext::new(37, 1_100_000, 1, &limits()).unwrap();
        let mut p = 41u64;
        while p < 1_000_000 {
            let lam = ctx.value(p).unwrap();
            let got = ctx.invert(lam + 1e-12).unwrap().prime.unwrap();
            assert_eq!(got, p, "roundtrip at {p}");
            p = next_prime(p * 3);
        }
    }

    #[test]
    fn extrapolated_inversion() {
        let ctx = LambdaContext::new(37, 1_000_000, 1, &limits()).unwrap();
        let inv = ctx.invert(0.083).unwrap();
        assert_eq!(inv.mode, InvertMode::Extrapolated);
        assert!(
            (1.7e19..=6.8e19).contains(&inv.p_estimate),
            "p(0.083) = {:e}",
            inv.p_estimate
        );
    }

    #[test]
    fn survival_intervals() {
        assert_eq!(
            survival_interval(3).unwrap(),
            SurvivalInterval { p_k: 3, lo: 9, hi: 25 }
        );
        assert_eq!(
            survival_interval(5).unwrap(),
            SurvivalInterval { p_k: 5, lo: 25, hi: 49 }
        );
        let s = survival_interval(45161).unwrap();
        assert_eq!(s.lo, 2_039_515_921);
        assert!(s.lo >= 2_038_074_751); // x0, the 1e8-th odd prime
        assert_eq!(s.hi, 45179 * 45179);
    }

    #[test]
    fn universal_factor() {
        let u = universal_rho_factor(2_000_000, &limits()).unwrap();
        assert!((u - 0.6099).abs() < 1e-4, "universal = {u}");
        // printed 0.1975, recomputed ~0.1986: both must stay in view
        let c = rho_coefficient(37, 2_000_000, &limits()).unwrap();
        assert!((c - 0.1975).abs() < 0.0015, "coefficient = {c}");
        assert!((c - 0.1986).abs() < 0.0005, "recomputed = {c}");
    }

    #[test]
    fn rho_direct_vs_lemma() {
        let c13 = census_at(13, 30);
        let models = derive_all_models(&c13, 30).unwrap();
        for p_k in [1511u64, 10007, 100_003, 999_983] {
            let r = rho_fraction(&models, p_k, &limits()).unwrap();
            let rel = (r.direct - r.lemma).abs() / r.direct;
            assert!(
                rel < 0.01,
                "p_k={p_k}: direct={} lemma={}",
                r.direct,
                r.lemma
            );
        }
    }

    #[test]
    fn crossing_of_30_over_6() {
        let c13 = census_at(13, 30);
        let m6 = derive_model(&c13, 6).unwrap();
        let m30 = derive_model(&c13, 30).unwrap();
        let x = find_crossing(&m6, &m30, 1_000_000, &limits()).unwrap();
        assert!((x.lambda - 0.083).abs() < 0.005, "lambda = {}", x.lambda);
        assert!((x.w - 1.946).abs() < 0.02, "w = {}", x.w);
        assert!(
            (1.0e18..=1.0e21).contains(&x.p_estimate),
            "p = {:e}",
            x.p_estimate
        );
    }

    #[test]
    fn no_crossing_cases() {
        let c13 = census_at(13, 30);
        let m2 = derive_model(&c13, 2).unwrap();
        let m4 = derive_model(&c13, 4).unwrap();
        assert!(matches!(
            find_crossing(&m2, &m4, 100_000, &limits()),
            Err(Error::NoCrossing)
        ));
        let m6 = derive_model(&c13, 6).unwrap();
        let m12 = derive_model(&c13, 12).unwrap();
        assert!(matches!(
            find_crossing(&m6, &m12, 100_000, &limits()),
            Err(Error::NoCrossing)
        ));
    }

    #[test]
    fn w6_point_checks() {
        let c13 = census_at(13, 30);
        let m6 = derive_model(&c13, 6).unwrap();
        let w37 = m6.eval(37, &limits()).unwrap();
        assert!((w37 - 1.35).abs() < 0.01, "w6(37#) = {w37}");
        let w45161 = m6.eval(45161, &limits()).unwrap();
        assert!((w45161 - 1.77).abs() < 0.01, "w6(45161#) = {w45161}");
    }

    #[test]
    fn eval_at_anchor_reproduces_census() {
        let c7 = census_at(7, 22);
        let norm = BigInt::from(normalizer(7));
        for g in [2u32, 6, 8, 10, 12] {
            let m = derive_model(&c7, g).unwrap();
            assert_eq!(
                m.eval_exact(7, &limits()).unwrap(),
                BigRational::new(BigInt::from(c7.count(g, 1)), norm.clone())
            );
        }
    }
}
