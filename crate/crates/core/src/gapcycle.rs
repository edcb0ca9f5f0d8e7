//! The cycle of gaps `G(p#)` and its run census.
//!
//! Totatives of the primorial `p#` in `[1, p# + 1]` define a cyclic sequence
//! of even gaps of length `phi(p#)` and span `p#`. A run census counts every
//! cyclic window of consecutive gaps by (span `g`, length `j`), the raw
//! material for the population models in [`crate::dynsys`].
//!
//! Small cycles are materialized wheel-by-wheel. Large cycles are streamed:
//! the largest wheel that fits in memory is replicated and filtered by the
//! remaining primes, fusing gaps at removed totatives, in a single forward
//! pass. `phi(29#) ~ 1.02e9` streams in about a minute; `G(31#)` and
//! `G(37#)` are long-running modes behind the same code path.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use num_bigint::BigUint;
use num_traits::One;

use crate::primes::{is_prime, next_prime, primes_below};
use crate::{Error, Limits, Result};

/// One stage of Eratosthenes sieve: the prime `p`, its primorial, and the
/// totient of the primorial. `k` counts stages from the census anchor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SieveStage {
    pub k: u32,
    pub p: u64,
    pub primorial: BigUint,
    pub phi: BigUint,
}

impl SieveStage {
    /// Stage at prime `p` treated as a census anchor (`k = 0`).
    pub fn anchor(p: u64) -> Result<Self> {
        if p < 3 {
            return Err(Error::ValidityViolation(format!(
                "anchor prime must be >= 3, got {p}"
            )));
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        let mut primorial = BigUint::one();
        let mut phi = BigUint::one();
        for q in primes_below(p) {
            primorial *= q;
            phi *= q - 1;
        }
        Ok(SieveStage {
            k: 0,
            p,
            primorial,
            phi,
        })
    }

    /// The stage after sieving by the next prime `p_next`.
    pub(crate) fn advanced_by(&self, p_next: u64) -> SieveStage {
        SieveStage {
            k: self.k + 1,
            p: p_next,
            primorial: &self.primorial * p_next,
            phi: &self.phi * (p_next - 1),
        }
    }

    /// The census anchor this stage was advanced from (`k` primes back).
    pub fn anchor_prime(&self) -> u64 {
        let mut p = self.p;
        for _ in 0..self.k {
            p = crate::primes::prev_prime(p).expect("stage below 3");
        }
        p
    }
}

/// A materialized cycle of gaps between consecutive totatives of `p#`,
/// ascending from 1 and closing with the wrap gap to `p# + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapCycle {
    pub stage: SieveStage,
    gaps: Vec<u8>,
}

impl GapCycle {
    pub fn gaps(&self) -> &[u8] {
        &self.gaps
    }

    pub fn len(&self) -> usize {
        self.gaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaps.is_empty()
    }

    /// The cycle read backwards. Totative symmetry `t <-> p# - t` makes the
    /// multiset of cyclic runs invariant under this reversal.
    pub fn reversed(&self) -> GapCycle {
        let mut gaps = self.gaps.clone();
        gaps.reverse();
        GapCycle {
            stage: self.stage.clone(),
            gaps,
        }
    }
}

/// Exact counts `n_{g,j}` of cyclic runs of `j` consecutive gaps with span
/// `g <= g_cap` at one sieve stage. Missing keys are zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunCensus {
    pub stage: SieveStage,
    pub g_cap: u32,
    counts: BTreeMap<(u32, u32), BigUint>,
}

impl RunCensus {
    pub(crate) fn from_counts(
        stage: SieveStage,
        g_cap: u32,
        counts: BTreeMap<(u32, u32), BigUint>,
    ) -> Self {
        RunCensus {
            stage,
            g_cap,
            counts,
        }
    }

    /// `n_{g,j}`, zero when absent.
    pub fn count(&self, g: u32, j: u32) -> BigUint {
        self.counts.get(&(g, j)).cloned().unwrap_or_default()
    }

    /// Nonzero cells in (g, j) order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u32, &BigUint)> {
        self.counts.iter().map(|(&(g, j), n)| (g, j, n))
    }

    /// Largest run length `j` present for gap `g` (0 when `g` is absent).
    pub fn max_run_len(&self, g: u32) -> u32 {
        self.counts
            .range((g, 1)..=(g, u32::MAX))
            .map(|(&(_, j), _)| j)
            .max()
            .unwrap_or(0)
    }

    /// Largest run length present anywhere.
    pub fn max_run_len_any(&self) -> u32 {
        self.counts.keys().map(|&(_, j)| j).max().unwrap_or(0)
    }

    /// Largest gap with a nonzero cell.
    pub fn max_gap(&self) -> u32 {
        self.counts.keys().map(|&(g, _)| g).max().unwrap_or(0)
    }

    /// Sum of `n_{g,1}`: the number of gaps counted (equals `phi(p#)` for a
    /// full census).
    pub fn gaps_total(&self) -> BigUint {
        self.counts
            .iter()
            .filter(|(&(_, j), _)| j == 1)
            .fold(BigUint::ZERO, |acc, (_, n)| acc + n)
    }

    /// Sum of `g * n_{g,1}` (equals `p#` for a full census).
    pub fn span_total(&self) -> BigUint {
        self.counts
            .iter()
            .filter(|(&(_, j), _)| j == 1)
            .fold(BigUint::ZERO, |acc, (&(g, _), n)| acc + n * g)
    }

    /// Same census restricted to `g <= g_cap`.
    pub fn truncated(&self, g_cap: u32) -> RunCensus {
        RunCensus {
            stage: self.stage.clone(),
            g_cap: g_cap.min(self.g_cap),
            counts: self
                .counts
                .iter()
                .filter(|(&(g, _), _)| g <= g_cap)
                .map(|(&k, v)| (k, v.clone()))
                .collect(),
        }
    }
}

/// Build the wheel `G(p#)` for small `p` by successive extension from
/// `G(3#) = [4, 2]`: replicate, drop multiples of the new prime, fuse.
fn build_wheel(p: u64) -> (Vec<u8>, u64) {
    let mut gaps: Vec<u8> = vec![4, 2];
    let mut span: u64 = 6;
    let mut q = 3u64;
    while q < p {
        q = next_prime(q);
        gaps = extend_wheel(&gaps, q);
        span *= q;
    }
    (gaps, span)
}

fn extend_wheel(gaps: &[u8], p: u64) -> Vec<u8> {
    let mut out: Vec<u8> = Vec::with_capacity(gaps.len() * (p as usize - 1));
    let mut t_mod = 1u64;
    let mut pending = 0u32;
    for _ in 0..p {
        for &g in gaps {
            t_mod += g as u64;
            if t_mod >= p {
                t_mod %= p;
            }
            pending += g as u32;
            if t_mod != 0 {
                out.push(u8::try_from(pending).expect("wheel gap exceeds u8"));
                pending = 0;
            }
        }
    }
    debug_assert_eq!(pending, 0);
    out
}

/// How a cycle is traversed: a materialized base wheel plus filter levels.
struct StreamPlan {
    stage: SieveStage,
    base: Vec<u8>,
    base_span: u64,
    levels: Vec<u64>,
    /// phi(p#) as u64; guarded against the stream budget beforehand.
    total_gaps: u64,
}

fn plan_stream(p: u64, limits: &Limits) -> Result<StreamPlan> {
    let stage = SieveStage::anchor(p)?;
    let phi = u64::try_from(&stage.phi).map_err(|_| Error::ResourceLimit {
        what: "cycle stream",
        needed: u64::MAX,
        budget: limits.stream_max_phi,
    })?;
    if phi > limits.stream_max_phi {
        return Err(Error::ResourceLimit {
            what: "cycle stream",
            needed: phi,
            budget: limits.stream_max_phi,
        });
    }
    // Base wheel: the largest primorial whose totient fits in memory.
    let mut base_p = 3u64;
    let mut base_phi = 2u64;
    loop {
        let q = next_prime(base_p);
        if q > p || base_phi * (q - 1) > limits.materialize_max_phi {
            break;
        }
        base_phi *= q - 1;
        base_p = q;
    }
    let (base, base_span) = build_wheel(base_p);
    debug_assert_eq!(base.len() as u64, base_phi);
    let mut levels = Vec::new();
    let mut q = base_p;
    while q < p {
        q = next_prime(q);
        levels.push(q);
    }
    Ok(StreamPlan {
        stage,
        base,
        base_span,
        levels,
        total_gaps: phi,
    })
}

/// Generate the materialized cycle of gaps for `p#`.
pub fn generate_cycle(p: u64, limits: &Limits) -> Result<GapCycle> {
    if p < 3 {
        return Err(Error::ValidityViolation(format!(
            "cycle generation needs p >= 3, got {p}"
        )));
    }
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let stage = SieveStage::anchor(p)?;
    let phi = u64::try_from(&stage.phi).unwrap_or(u64::MAX);
    if phi > limits.materialize_max_phi {
        return Err(Error::ResourceLimit {
            what: "materialized cycle",
            needed: phi,
            budget: limits.materialize_max_phi,
        });
    }
    let (gaps, span) = build_wheel(p);
    debug_assert_eq!(BigUint::from(span), stage.primorial);
    Ok(GapCycle { stage, gaps })
}

/// Stream the gaps of `G(p#)` in one forward pass without materializing.
pub fn stream_gaps(
    p: u64,
    limits: &Limits,
    mut f: impl FnMut(u32) -> ControlFlow<()>,
) -> Result<()> {
    let plan = plan_stream(p, limits)?;
    let tables: Vec<[u16; 256]> = plan.levels.iter().map(|&q| mod_table(q)).collect();
    let reps: u64 = plan.levels.iter().product();
    let mut mods: Vec<u64> = plan.levels.iter().map(|_| 1u64).collect();
    let mut pending = 0u32;
    'outer: for _ in 0..reps {
        for &g in &plan.base {
            pending += g as u32;
            let mut keep = true;
            for (m, table) in mods.iter_mut().zip(&tables) {
                let q = table[0] as u64;
                *m += table[g as usize] as u64;
                if *m >= q {
                    *m -= q;
                }
                if *m == 0 {
                    keep = false;
                }
            }
            if keep {
                if let ControlFlow::Break(()) = f(pending) {
                    break 'outer;
                }
                pending = 0;
            }
        }
    }
    Ok(())
}

/// Residues of 0..=255 modulo `q` with `q` itself stashed in slot 0
/// (a gap of 0 never occurs, so the slot is free).
fn mod_table(q: u64) -> [u16; 256] {
    let mut t = [0u16; 256];
    t[0] = q as u16;
    for (g, slot) in t.iter_mut().enumerate().skip(1) {
        *slot = (g as u64 % q) as u16;
    }
    t
}

/// Census of a materialized cycle.
pub fn census_runs(cycle: &GapCycle, g_cap: u32) -> Result<RunCensus> {
    check_g_cap(g_cap)?;
    let counts = census_engine(
        &cycle.gaps,
        cycle.len() as u64,
        &[],
        cycle.len() as u64,
        g_cap,
        1,
    );
    Ok(pack_counts(cycle.stage.clone(), g_cap, counts))
}

/// Census of `G(p0#)` over the wheel-extension stream, optionally chunked
/// across threads. Counts are exact and independent of the thread count.
pub fn census_stream(p0: u64, g_cap: u32, threads: usize, limits: &Limits) -> Result<RunCensus> {
    check_g_cap(g_cap)?;
    let plan = plan_stream(p0, limits)?;
    let counts = census_engine(
        &plan.base,
        plan.base_span,
        &plan.levels,
        plan.total_gaps,
        g_cap,
        threads.max(1),
    );
    Ok(pack_counts(plan.stage, g_cap, counts))
}

fn check_g_cap(g_cap: u32) -> Result<()> {
    if g_cap < 2 || g_cap % 2 != 0 {
        return Err(Error::InvalidGap(g_cap as u64));
    }
    Ok(())
}

fn pack_counts(stage: SieveStage, g_cap: u32, counts: Vec<u64>) -> RunCensus {
    let wmax = (g_cap / 2) as usize;
    let mut map = BTreeMap::new();
    for (i, &n) in counts.iter().enumerate() {
        if n > 0 {
            let g = 2 * (i / wmax + 1) as u32;
            let j = (i % wmax + 1) as u32;
            map.insert((g, j), BigUint::from(n));
        }
    }
    RunCensus::from_counts(stage, g_cap, map)
}

/// Sliding window over the most recent gaps; ring capacity 64 covers any
/// window of length `g_cap/2 <= 41` (the long-mode maximum).
struct WindowCounter {
    g_cap: u32,
    wmax: usize,
    ring: [u32; 64],
    pushed: u64,
    counts: Vec<u64>,
}

impl WindowCounter {
    fn new(g_cap: u32) -> Self {
        let wmax = (g_cap / 2) as usize;
        assert!(wmax <= 41, "g_cap {g_cap} exceeds the supported window");
        WindowCounter {
            g_cap,
            wmax,
            ring: [0; 64],
            pushed: 0,
            counts: vec![0u64; wmax * wmax],
        }
    }

    #[inline(always)]
    fn warm(&mut self, gap: u32) {
        self.ring[(self.pushed & 63) as usize] = gap;
        self.pushed += 1;
    }

    #[inline(always)]
    fn push(&mut self, gap: u32) {
        self.ring[(self.pushed & 63) as usize] = gap;
        self.pushed += 1;
        let avail = self.pushed.min(self.wmax as u64);
        let mut s = 0u32;
        for j in 1..=avail {
            s += self.ring[((self.pushed - j) & 63) as usize];
            if s > self.g_cap {
                break;
            }
            self.counts[(s as usize / 2 - 1) * self.wmax + (j as usize - 1)] += 1;
        }
    }
}

struct WorkerOut {
    counts: Vec<u64>,
    first: Vec<u32>,
    last: Vec<u32>,
}

/// Count all cyclic runs with span `<= g_cap`. The stream is split at
/// replication boundaries; each worker rebuilds its window context by
/// walking back past `g_cap/2` surviving totatives, counts the windows
/// ending at gaps it owns, and the wrap-around seam is counted once at
/// merge time from the global head and tail buffers.
fn census_engine(
    base: &[u8],
    base_span: u64,
    levels: &[u64],
    total_gaps: u64,
    g_cap: u32,
    threads: usize,
) -> Vec<u64> {
    let wmax = (g_cap / 2) as u64;
    let reps: u64 = levels.iter().product();
    let mut workers = threads.min(reps.max(1) as usize).max(1);
    if total_gaps < 64 * wmax * workers as u64 {
        workers = 1;
    }
    let seam = wmax.min(total_gaps) as usize;

    let run = |w: usize, nw: usize| -> WorkerOut {
        let r0 = reps * w as u64 / nw as u64;
        let r1 = reps * (w as u64 + 1) / nw as u64;
        census_worker(base, base_span, levels, reps, r0, r1, g_cap, seam)
    };

    let mut outs: Vec<WorkerOut> = if workers == 1 {
        vec![run(0, 1)]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| scope.spawn(move || run(w, workers)))
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        })
    };

    let first = std::mem::take(&mut outs[0].first);
    let last = std::mem::take(&mut outs.last_mut().unwrap().last);
    let mut counts = vec![0u64; (wmax * wmax) as usize];
    for out in &outs {
        for (c, v) in counts.iter_mut().zip(&out.counts) {
            *c += v;
        }
    }

    // Wrap-around seam: windows that cross the start of the cycle, i.e. end
    // within the first `seam` gaps with length reaching back past them.
    let seq: Vec<u32> = last.iter().chain(first.iter()).copied().collect();
    let off = last.len();
    for i in 0..first.len() {
        let mut s = 0u32;
        for j in 1..=(off + i + 1) as u64 {
            if j > total_gaps {
                break;
            }
            s += seq[off + i + 1 - j as usize];
            if s > g_cap {
                break;
            }
            if j >= i as u64 + 2 {
                counts[(s as usize / 2 - 1) * wmax as usize + (j as usize - 1)] += 1;
            }
        }
    }
    counts
}

#[allow(clippy::too_many_arguments)]
fn census_worker(
    base: &[u8],
    base_span: u64,
    levels: &[u64],
    reps: u64,
    r0: u64,
    r1: u64,
    g_cap: u32,
    seam: usize,
) -> WorkerOut {
    let is_first = r0 == 0;
    let is_last = r1 == reps;
    let tables: Vec<[u16; 256]> = levels.iter().map(|&q| mod_table(q)).collect();
    let t0 = r0 * base_span + 1;
    let t_end = r1 * base_span + 1;

    let mut counter = WindowCounter::new(g_cap);
    let mut first_buf: Vec<u32> = Vec::new();
    let mut last_buf: Vec<u32> = vec![0; seam];
    let mut owned: u64 = 0;

    // Locate the anchor: the survivor `g_cap/2 + 1` emitted gaps back of t0,
    // so the window ring is warm before the first owned gap.
    let mut rep = r0;
    let mut idx = 0usize;
    let mut t = t0;
    let mut mods: Vec<u64> = levels.iter().map(|&q| t0 % q).collect();
    if r0 > 0 {
        let mut needed = g_cap / 2 + 1;
        if mods.iter().all(|&m| m != 0) {
            needed -= 1;
        }
        while needed > 0 && t > 1 {
            if idx == 0 {
                rep -= 1;
                idx = base.len() - 1;
            } else {
                idx -= 1;
            }
            let g = base[idx] as usize;
            t -= g as u64;
            for (m, table) in mods.iter_mut().zip(&tables) {
                let q = table[0] as u64;
                let d = table[g] as u64;
                if *m < d {
                    *m += q;
                }
                *m -= d;
            }
            if t == 1 {
                break;
            }
            if mods.iter().all(|&m| m != 0) {
                needed -= 1;
            }
        }
    }

    let mut pending = 0u32;
    'outer: while rep < reps {
        for i in idx..base.len() {
            let g = base[i] as usize;
            t += g as u64;
            pending += g as u32;
            let mut keep = true;
            for (m, table) in mods.iter_mut().zip(&tables) {
                let q = table[0] as u64;
                *m += table[g] as u64;
                if *m >= q {
                    *m -= q;
                }
                if *m == 0 {
                    keep = false;
                }
            }
            if keep {
                let gap = pending;
                pending = 0;
                if t <= t0 {
                    counter.warm(gap);
                } else if t <= t_end || is_last {
                    counter.push(gap);
                    if is_first && first_buf.len() < seam {
                        first_buf.push(gap);
                    }
                    if is_last && seam > 0 {
                        last_buf[(owned % seam as u64) as usize] = gap;
                    }
                    owned += 1;
                } else {
                    break 'outer;
                }
            }
        }
        idx = 0;
        rep += 1;
    }

    // Unroll the rolling tail buffer into stream order.
    let last = if is_last && seam > 0 {
        let n = owned.min(seam as u64) as usize;
        let start = owned - n as u64;
        (0..n)
            .map(|i| last_buf[((start + i as u64) % seam as u64) as usize])
            .collect()
    } else {
        Vec::new()
    };

    WorkerOut {
        counts: counter.counts,
        first: first_buf,
        last,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn limits() -> Limits {
        Limits::default()
    }

    /// Brute-force oracle: count every cyclic window by walking forward from
    /// each start position, independent of the sliding-window engine.
    fn brute_census(gaps: &[u8], g_cap: u32) -> BTreeMap<(u32, u32), u64> {
        let n = gaps.len();
        let mut counts = BTreeMap::new();
        for start in 0..n {
            let mut s = 0u32;
            for j in 1..=n {
                s += gaps[(start + j - 1) % n] as u32;
                if s > g_cap {
                    break;
                }
                *counts.entry((s, j as u32)).or_insert(0u64) += 1;
            }
        }
        counts
    }

    fn census_as_u64(c: &RunCensus) -> BTreeMap<(u32, u32), u64> {
        c.iter()
            .map(|(g, j, n)| ((g, j), u64::try_from(n).unwrap()))
            .collect()
    }

    #[test]
    fn cycle_of_3_and_5() {
        let c3 = generate_cycle(3, &limits()).unwrap();
        assert_eq!(c3.gaps(), &[4, 2]);
        let c5 = generate_cycle(5, &limits()).unwrap();
        assert_eq!(c5.gaps(), &[6, 4, 2, 4, 2, 4, 6, 2]);
    }

    #[test]
    fn cycle_of_7_shape() {
        let c7 = generate_cycle(7, &limits()).unwrap();
        assert_eq!(c7.len(), 48);
        let sum: u64 = c7.gaps().iter().map(|&g| g as u64).sum();
        assert_eq!(sum, 210);
        assert!(c7.gaps().iter().all(|&g| g % 2 == 0));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            generate_cycle(9, &limits()),
            Err(Error::NotPrime(9))
        ));
        assert!(matches!(
            generate_cycle(2, &limits()),
            Err(Error::ValidityViolation(_))
        ));
        let tight = Limits {
            materialize_max_phi: 100,
            ..limits()
        };
        assert!(matches!(
            generate_cycle(13, &tight),
            Err(Error::ResourceLimit { .. })
        ));
    }

    #[test]
    fn census_g5_gcap14() {
        let c = generate_cycle(5, &limits()).unwrap();
        let census = census_runs(&c, 14).unwrap();
        // Hand enumeration of all cyclic windows of [6,4,2,4,2,4,6,2].
        let expect: BTreeMap<(u32, u32), u64> = [
            ((2, 1), 3),
            ((4, 1), 3),
            ((6, 1), 2),
            ((6, 2), 4),
            ((8, 2), 2),
            ((10, 2), 2),
            ((8, 3), 1),
            ((10, 3), 2),
            ((12, 3), 4),
            ((14, 3), 1),
            ((12, 4), 2),
            ((14, 4), 2),
        ]
        .into_iter()
        .collect();
        assert_eq!(census_as_u64(&census), expect);
    }

    #[test]
    fn census_g7_gcap10() {
        let c = generate_cycle(7, &limits()).unwrap();
        let census = census_runs(&c, 10).unwrap();
        assert_eq!(census.count(2, 1), 15u32.into());
        assert_eq!(census.count(4, 1), 15u32.into());
        assert_eq!(census.count(6, 1), 14u32.into());
        assert_eq!(census.count(8, 1), 2u32.into());
        assert_eq!(census.count(10, 1), 2u32.into());
        // 15 + 15 + 14 + 2 + 2 = 48 = phi(210)
        let j1_total: u64 = census
            .iter()
            .filter(|&(_, j, _)| j == 1)
            .map(|(_, _, n)| u64::try_from(n).unwrap())
            .sum();
        assert_eq!(j1_total, 48);
    }

    #[test]
    fn census_g3_gcap4() {
        let c = generate_cycle(3, &limits()).unwrap();
        let census = census_runs(&c, 4).unwrap();
        let expect: BTreeMap<(u32, u32), u64> = [((2, 1), 1), ((4, 1), 1)].into_iter().collect();
        assert_eq!(census_as_u64(&census), expect);
    }

    #[test]
    fn census_matches_brute_force() {
        for p in [3u64, 5, 7, 11, 13] {
            let c = generate_cycle(p, &limits()).unwrap();
            for g_cap in [4u32, 14, 30, 64] {
                let fast = census_as_u64(&census_runs(&c, g_cap).unwrap());
                let brute = brute_census(c.gaps(), g_cap);
                assert_eq!(fast, brute, "p={p} g_cap={g_cap}");
            }
        }
    }

    #[test]
    fn full_census_totals() {
        for p in [3u64, 5, 7, 11, 13] {
            let c = generate_cycle(p, &limits()).unwrap();
            let census = census_runs(&c, 64).unwrap();
            assert_eq!(census.gaps_total(), c.stage.phi, "phi at p={p}");
            assert_eq!(census.span_total(), c.stage.primorial, "span at p={p}");
        }
    }

    #[test]
    fn palindromic_census() {
        for p in [5u64, 7, 11, 13] {
            let c = generate_cycle(p, &limits()).unwrap();
            let census = census_runs(&c, 30).unwrap();
            let reversed = census_runs(&c.reversed(), 30).unwrap();
            assert_eq!(
                census_as_u64(&census),
                census_as_u64(&reversed),
                "p={p}"
            );
        }
    }

    #[test]
    fn twin_counts_are_product_of_q_minus_2() {
        // n_{2,1} = n_{4,1} = prod (q-2) over odd q <= p
        for p in [3u64, 5, 7, 11, 13, 17, 19] {
            let expect: u64 = primes_below(p).iter().skip(1).map(|&r| r - 2).product();
            let c = generate_cycle(p, &limits()).unwrap();
            let census = census_runs(&c, 4).unwrap();
            assert_eq!(census.count(2, 1), expect.into(), "p={p}");
            assert_eq!(census.count(4, 1), expect.into(), "p={p}");
        }
    }

    #[test]
    fn stream_matches_materialized() {
        for p in [5u64, 7, 11, 13] {
            let c = generate_cycle(p, &limits()).unwrap();
            let mut streamed: Vec<u32> = Vec::new();
            stream_gaps(p, &limits(), |g| {
                streamed.push(g);
                ControlFlow::Continue(())
            })
            .unwrap();
            let direct: Vec<u32> = c.gaps().iter().map(|&g| g as u32).collect();
            assert_eq!(streamed, direct, "p={p}");
        }
    }

    #[test]
    fn stream_census_matches_materialized() {
        for p in [5u64, 7, 11, 13] {
            let c = generate_cycle(p, &limits()).unwrap();
            let direct = census_runs(&c, 22).unwrap();
            let streamed = census_stream(p, 22, 1, &limits()).unwrap();
            assert_eq!(census_as_u64(&direct), census_as_u64(&streamed), "p={p}");
        }
    }

    #[test]
    fn stream_census_with_forced_levels() {
        // Force a small base so the level-filter path is exercised.
        let tight = Limits {
            materialize_max_phi: 10,
            ..limits()
        };
        for p in [7u64, 11, 13] {
            let c = generate_cycle(p, &limits()).unwrap();
            let direct = census_runs(&c, 26).unwrap();
            let streamed = census_stream(p, 26, 1, &tight).unwrap();
            assert_eq!(census_as_u64(&direct), census_as_u64(&streamed), "p={p}");
        }
    }

    #[test]
    fn parallel_census_matches_sequential() {
        let tight = Limits {
            materialize_max_phi: 10,
            ..limits()
        };
        for threads in [2usize, 3, 5] {
            let seq = census_stream(17, 34, 1, &tight).unwrap();
            let par = census_stream(17, 34, threads, &tight).unwrap();
            assert_eq!(
                census_as_u64(&seq),
                census_as_u64(&par),
                "threads={threads}"
            );
        }
    }

    #[test]
    fn stream_budget_is_enforced() {
        let tight = Limits {
            stream_max_phi: 100,
            ..limits()
        };
        assert!(matches!(
            census_stream(13, 8, 1, &tight),
            Err(Error::ResourceLimit { .. })
        ));
    }

    #[test]
    fn odd_g_cap_rejected() {
        let c = generate_cycle(5, &limits()).unwrap();
        assert!(matches!(census_runs(&c, 7), Err(Error::InvalidGap(7))));
    }

    #[test]
    fn anchor_prime_tracks_back() {
        let stage = SieveStage::anchor(7).unwrap();
        let advanced = stage.advanced_by(11).advanced_by(13);
        assert_eq!(advanced.anchor_prime(), 7);
        assert_eq!(advanced.k, 2);
    }
}
