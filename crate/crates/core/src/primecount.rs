//! Consecutive-prime pair censuses and survival-interval histograms.
//!
//! The pair census walks consecutive primes in ascending order off the
//! segmented sieve, classifying each pair `(p, next(p))` by last digits in
//! the base. The published enumeration's exact boundary convention is not
//! stated anywhere, so the census supports the three candidates and the
//! reproduction harness selects whichever matches the published cells.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use crate::primes::for_each_prime;
pub use crate::primes::{
    count_primes, is_prime, next_prime, nth_odd_prime, prev_prime, sieve_primes,
};
use crate::residue::{team_table_empirical, TeamTable};
use crate::{Error, Limits, Result};

/// Boundary conventions for "the first N pairs".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// Pairs of consecutive odd primes starting at (3, 5); pairs with an
    /// endpoint not coprime to the base stay unclassified but still count.
    FirstOddPairs,
    /// Pairs counted only once both endpoints are units mod the base;
    /// the first N such pairs (for base 10: left endpoints are the first N
    /// primes > 5).
    FirstUnitPairs,
    /// Pairs whose left endpoint exceeds the base (for base 10: left
    /// endpoints are the first N primes > 10). Every prime past the base is
    /// a unit, so all pairs classify. This is the convention that
    /// reproduces the published base-10 cells exactly.
    LeftPastBase,
    /// All pairs (p, q) of consecutive primes from (2, 3) with q strictly
    /// below the bound.
    RightBelow,
}

impl Convention {
    pub const ALL: [Convention; 4] = [
        Convention::FirstOddPairs,
        Convention::FirstUnitPairs,
        Convention::LeftPastBase,
        Convention::RightBelow,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Convention::FirstOddPairs => "first-odd-pairs",
            Convention::FirstUnitPairs => "first-unit-pairs",
            Convention::LeftPastBase => "left-past-base",
            Convention::RightBelow => "right-below",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "first-odd-pairs" => Ok(Convention::FirstOddPairs),
            "first-unit-pairs" => Ok(Convention::FirstUnitPairs),
            "left-past-base" => Ok(Convention::LeftPastBase),
            "right-below" => Ok(Convention::RightBelow),
            other => Err(Error::UnknownConvention(other.to_string())),
        }
    }
}

/// Stop rule for a census.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CensusLimit {
    /// Count this many pairs (as the convention defines counting).
    Pairs(u64),
    /// Right endpoints strictly below this bound.
    UpperBound(u64),
}

/// Counts of consecutive-prime last-digit pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairCensus {
    pub base: u64,
    pub convention: Convention,
    pub limit: CensusLimit,
    /// Ordered unit pairs (a, b) -> count.
    pub cells: BTreeMap<(u64, u64), u64>,
    /// Pairs processed whose endpoints are not both units.
    pub unclassified: u64,
    /// Every pair processed (classified or not).
    pub pairs_total: u64,
    /// All processed pairs keyed by gap residue `(q - p) mod base`.
    pub sigma: BTreeMap<u64, u64>,
    /// Largest right endpoint processed.
    pub last_prime: u64,
}

impl PairCensus {
    pub fn classified(&self) -> u64 {
        self.cells.values().sum()
    }
}

struct CensusAcc {
    base: u64,
    convention: Convention,
    limit: CensusLimit,
    started: bool,
    done: bool,
    cells: BTreeMap<(u64, u64), u64>,
    sigma: BTreeMap<u64, u64>,
    unclassified: u64,
    pairs_total: u64,
    classified: u64,
    last_prime: u64,
}

impl CensusAcc {
    fn new(base: u64, convention: Convention, limit: CensusLimit) -> Self {
        CensusAcc {
            base,
            convention,
            limit,
            started: false,
            done: false,
            cells: BTreeMap::new(),
            sigma: BTreeMap::new(),
            unclassified: 0,
            pairs_total: 0,
            classified: 0,
            last_prime: 0,
        }
    }

    fn feed(&mut self, p: u64, q: u64) {
        if self.done {
            return;
        }
        let unit_pair = gcd(p % self.base, self.base) == 1 && gcd(q % self.base, self.base) == 1;
        match self.convention {
            Convention::FirstOddPairs => {
                if p < 3 {
                    return;
                }
            }
            Convention::FirstUnitPairs => {
                if !self.started && !unit_pair {
                    return;
                }
            }
            Convention::LeftPastBase => {
                if p <= self.base {
                    return;
                }
            }
            Convention::RightBelow => {
                if let CensusLimit::UpperBound(x) = self.limit {
                    if q >= x {
                        self.done = true;
                        return;
                    }
                }
            }
        }
        self.started = true;
        self.pairs_total += 1;
        self.last_prime = q;
        *self.sigma.entry((q - p) % self.base).or_insert(0) += 1;
        if unit_pair {
            *self.cells.entry((p % self.base, q % self.base)).or_insert(0) += 1;
            self.classified += 1;
        } else {
            self.unclassified += 1;
        }
        match self.limit {
            CensusLimit::Pairs(n) => {
                let counted = match self.convention {
                    Convention::FirstUnitPairs => self.classified,
                    _ => self.pairs_total,
                };
                if counted >= n {
                    self.done = true;
                }
            }
            CensusLimit::UpperBound(x) => {
                // RightBelow stops before processing; other conventions stop
                // once the next right endpoint would pass the bound.
                if q >= x {
                    self.done = true;
                }
            }
        }
    }

    fn finish(self) -> PairCensus {
        PairCensus {
            base: self.base,
            convention: self.convention,
            limit: self.limit,
            cells: self.cells,
            unclassified: self.unclassified,
            pairs_total: self.pairs_total,
            sigma: self.sigma,
            last_prime: self.last_prime,
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b > 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Visit consecutive-prime pairs `(p, next(p))` with both endpoints in
/// `[lo, hi]`, ascending, carrying the left prime across sieve segments.
pub fn consecutive_pairs(
    lo: u64,
    hi: u64,
    threads: usize,
    limits: &Limits,
    mut f: impl FnMut(u64, u64) -> ControlFlow<()>,
) -> Result<()> {
    let mut prev: Option<u64> = None;
    for_each_prime(lo, hi, threads, limits, |q| {
        let flow = match prev {
            Some(p) => f(p, q),
            None => ControlFlow::Continue(()),
        };
        prev = Some(q);
        flow
    })
}

/// Run several censuses over one pass of the sieve.
pub fn pair_census_multi(
    base: u64,
    specs: &[(Convention, CensusLimit)],
    threads: usize,
    limits: &Limits,
) -> Result<Vec<PairCensus>> {
    if base < 3 {
        return Err(Error::ValidityViolation(format!(
            "base must be >= 3, got {base}"
        )));
    }
    for &(_, limit) in specs {
        if let CensusLimit::UpperBound(x) = limit {
            if x > limits.sieve_max {
                return Err(Error::ResourceLimit {
                    what: "pair census",
                    needed: x,
                    budget: limits.sieve_max,
                });
            }
        }
    }
    let mut accs: Vec<CensusAcc> = specs
        .iter()
        .map(|&(c, l)| CensusAcc::new(base, c, l))
        .collect();
    consecutive_pairs(2, limits.sieve_max, threads, limits, |p, q| {
        let mut all_done = true;
        for acc in accs.iter_mut() {
            acc.feed(p, q);
            all_done &= acc.done;
        }
        if all_done {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    if let Some(acc) = accs.iter().find(|a| !a.done) {
        return Err(Error::ResourceLimit {
            what: "pair census (sieve exhausted before the limit)",
            needed: limits.sieve_max,
            budget: match acc.limit {
                CensusLimit::Pairs(n) => n,
                CensusLimit::UpperBound(x) => x,
            },
        });
    }
    Ok(accs.into_iter().map(CensusAcc::finish).collect())
}

/// Census consecutive-prime last-digit pairs under one convention.
pub fn pair_census(
    base: u64,
    convention: Convention,
    limit: CensusLimit,
    threads: usize,
    limits: &Limits,
) -> Result<PairCensus> {
    Ok(pair_census_multi(base, &[(convention, limit)], threads, limits)?
        .pop()
        .unwrap())
}

/// Empirical team ratios from a census: `sigma_r` counts every processed
/// pair by gap residue, `W_r = sigma_r / sigma_2`.
pub fn team_ratios_empirical(census: &PairCensus) -> Result<TeamTable> {
    team_table_empirical(census.base, &census.sigma)
}

/// Prime counts per interval of survival.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurvivalBucket {
    pub p_k: u64,
    pub lo: u64,
    pub hi: u64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurvivalHistogram {
    pub p_max: u64,
    pub buckets: Vec<SurvivalBucket>,
}

impl SurvivalHistogram {
    pub fn total(&self) -> u64 {
        self.buckets.iter().map(|b| b.count).sum()
    }
}

/// For each odd prime `p_k <= p_max`, count the primes in
/// `[p_k^2, p_{k+1}^2)`.
pub fn survival_histogram(p_max: u64, threads: usize, limits: &Limits) -> Result<SurvivalHistogram> {
    if p_max < 3 {
        return Err(Error::ValidityViolation(format!(
            "survival histogram needs p_max >= 3, got {p_max}"
        )));
    }
    if !is_prime(p_max) {
        return Err(Error::NotPrime(p_max));
    }
    let hi_end = next_prime(p_max)
        .checked_pow(2)
        .ok_or(Error::ResourceLimit {
            what: "survival histogram",
            needed: u64::MAX,
            budget: limits.sieve_max,
        })?;
    if hi_end > limits.sieve_max {
        return Err(Error::ResourceLimit {
            what: "survival histogram",
            needed: hi_end,
            budget: limits.sieve_max,
        });
    }
    let stages = crate::primes::primes_below(p_max);
    let mut buckets: Vec<SurvivalBucket> = stages
        .iter()
        .skip(1) // stages start at 3
        .map(|&p| {
            let np = next_prime(p);
            SurvivalBucket {
                p_k: p,
                lo: p * p,
                hi: np * np,
                count: 0,
            }
        })
        .collect();
    let mut idx = 0usize;
    for_each_prime(buckets[0].lo, hi_end - 1, threads, limits, |q| {
        while q >= buckets[idx].hi {
            idx += 1;
        }
        buckets[idx].count += 1;
        ControlFlow::Continue(())
    })?;
    Ok(SurvivalHistogram { p_max, buckets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn limits() -> Limits {
        Limits::default()
    }

    #[test]
    fn hand_census_of_first_13_odd_pairs() {
        // odd primes 3..47 give 13 pairs; (3,5) and (5,7) have no digit cell
        let c = pair_census(
            10,
            Convention::FirstOddPairs,
            CensusLimit::Pairs(13),
            1,
            &limits(),
        )
        .unwrap();
        assert_eq!(c.pairs_total, 13);
        assert_eq!(c.unclassified, 2);
        assert_eq!(c.sigma[&2], 6);
        assert_eq!(c.sigma[&4], 5);
        assert_eq!(c.sigma[&6], 2);
        assert_eq!(c.sigma.get(&8), None);
        assert_eq!(c.sigma.get(&0), None);
        assert_eq!(c.last_prime, 47);
        let t = team_ratios_empirical(&c).unwrap();
        assert_eq!(t.w_f64(4).unwrap(), 5.0 / 6.0);
    }

    #[test]
    fn single_pair_census() {
        let c = pair_census(
            10,
            Convention::FirstOddPairs,
            CensusLimit::Pairs(1),
            1,
            &limits(),
        )
        .unwrap();
        assert_eq!(c.pairs_total, 1);
        assert_eq!(c.unclassified, 1);
        assert!(c.cells.is_empty());
        assert_eq!(c.last_prime, 5);
    }

    #[test]
    fn unit_pairs_start_past_the_base_primes() {
        let c = pair_census(
            10,
            Convention::FirstUnitPairs,
            CensusLimit::Pairs(5),
            1,
            &limits(),
        )
        .unwrap();
        // pairs (7,11), (11,13), (13,17), (17,19), (19,23)
        assert_eq!(c.pairs_total, 5);
        assert_eq!(c.unclassified, 0);
        assert_eq!(c.cells[&(7, 1)], 1);
        assert_eq!(c.cells[&(1, 3)], 1);
        assert_eq!(c.cells[&(3, 7)], 1);
        assert_eq!(c.cells[&(7, 9)], 1);
        assert_eq!(c.cells[&(9, 3)], 1);
    }

    #[test]
    fn left_past_base_starts_at_11() {
        let c = pair_census(
            10,
            Convention::LeftPastBase,
            CensusLimit::Pairs(4),
            1,
            &limits(),
        )
        .unwrap();
        // pairs (11,13), (13,17), (17,19), (19,23)
        assert_eq!(c.pairs_total, 4);
        assert_eq!(c.unclassified, 0);
        assert_eq!(c.cells[&(1, 3)], 1);
        assert_eq!(c.cells[&(3, 7)], 1);
        assert_eq!(c.cells[&(7, 9)], 1);
        assert_eq!(c.cells[&(9, 3)], 1);
    }

    #[test]
    fn right_below_convention() {
        // pairs from (2,3) with right endpoint < 30:
        // (2,3),(3,5),(5,7),(7,11),(11,13),(13,17),(17,19),(19,23),(23,29)
        let c = pair_census(
            10,
            Convention::RightBelow,
            CensusLimit::UpperBound(30),
            1,
            &limits(),
        )
        .unwrap();
        assert_eq!(c.pairs_total, 9);
        assert_eq!(c.unclassified, 3);
        assert_eq!(c.classified(), 6);
    }

    #[test]
    fn partition_invariant() {
        for (conv, lim) in [
            (Convention::FirstOddPairs, CensusLimit::Pairs(1000)),
            (Convention::FirstUnitPairs, CensusLimit::Pairs(1000)),
            (Convention::RightBelow, CensusLimit::UpperBound(10_000)),
        ] {
            let c = pair_census(10, conv, lim, 1, &limits()).unwrap();
            assert_eq!(c.classified() + c.unclassified, c.pairs_total);
            let sigma_total: u64 = c.sigma.values().sum();
            assert_eq!(sigma_total, c.pairs_total);
        }
    }

    #[test]
    fn multi_census_matches_singles() {
        let specs = [
            (Convention::FirstOddPairs, CensusLimit::Pairs(500)),
            (Convention::FirstUnitPairs, CensusLimit::Pairs(500)),
            (Convention::RightBelow, CensusLimit::UpperBound(5000)),
        ];
        let multi = pair_census_multi(10, &specs, 1, &limits()).unwrap();
        for (i, &(conv, lim)) in specs.iter().enumerate() {
            let single = pair_census(10, conv, lim, 1, &limits()).unwrap();
            assert_eq!(multi[i], single, "spec {i}");
        }
    }

    #[test]
    fn census_restart_equivalence() {
        // one pass over [3, x] equals [3, y] plus (y, x] with the boundary
        // pair counted once
        let x = 200_000u64;
        let mut rng = rand::rngs::StdRng::seed_from_u64(0x5eed);
        let collect = |lo: u64, hi: u64| -> BTreeMap<(u64, u64), u64> {
            let mut cells = BTreeMap::new();
            consecutive_pairs(lo, hi, 1, &limits(), |p, q| {
                *cells.entry((p % 10, q % 10)).or_insert(0) += 1;
                ControlFlow::Continue(())
            })
            .unwrap();
            cells
        };
        let full = collect(3, x);
        for _ in 0..10 {
            let y = rng.gen_range(100..x - 100);
            let left = collect(3, y);
            // restart from the largest prime <= y so the crossing pair is
            // counted exactly once
            let restart = prev_prime(y + 1).unwrap();
            let right = collect(restart, x);
            let mut merged = left.clone();
            for (k, v) in right {
                *merged.entry(k).or_insert(0) += v;
            }
            assert_eq!(merged, full, "split at y={y}");
        }
    }

    #[test]
    fn census_budget_enforced() {
        let tight = Limits {
            sieve_max: 1000,
            ..limits()
        };
        assert!(matches!(
            pair_census(
                10,
                Convention::FirstOddPairs,
                CensusLimit::Pairs(1_000_000),
                1,
                &tight
            ),
            Err(Error::ResourceLimit { .. })
        ));
    }

    #[test]
    fn convention_ids_roundtrip() {
        for c in Convention::ALL {
            assert_eq!(Convention::parse(c.id()).unwrap(), c);
        }
        assert!(matches!(
            Convention::parse("bogus"),
            Err(Error::UnknownConvention(_))
        ));
    }

    #[test]
    fn survival_small() {
        let h = survival_histogram(7, 1, &limits()).unwrap();
        assert_eq!(h.buckets.len(), 3); // stages 3, 5, 7
        assert_eq!(h.buckets[0].p_k, 3);
        assert_eq!(h.buckets[0].count, 5); // 11,13,17,19,23 in [9,25)
        assert_eq!(h.buckets[1].count, 6); // 29,31,37,41,43,47 in [25,49)
        // cross-check totals against a direct count
        let direct = count_primes(9, h.buckets.last().unwrap().hi - 1, 1, &limits()).unwrap();
        assert_eq!(h.total(), direct);
    }

    #[test]
    fn survival_rejects_composite() {
        assert!(matches!(
            survival_histogram(9, 1, &limits()),
            Err(Error::NotPrime(9))
        ));
    }

    #[test]
    fn pi_of_1e8() {
        // cross-check the segmented sieve against the known count
        assert_eq!(
            count_primes(2, 100_000_000, 2, &limits()).unwrap(),
            5_761_455
        );
    }
}
