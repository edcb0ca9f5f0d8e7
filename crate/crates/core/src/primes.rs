//! Prime generation and primality testing.
//!
//! The segmented sieve is the workhorse for every range-scale job in the
//! crate: pair censuses, survival histograms, and lambda products. Segments
//! are odd-only bitmaps sized to stay cache-resident; callers consume primes
//! in ascending order through a callback and may stop early.

use std::ops::ControlFlow;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc;

use crate::{Error, Limits, Result};

/// Bits per segment bitmap; one bit per odd number, so a segment spans
/// `2 * SEGMENT_BITS` integers (~4.2M) in 256 KiB.
const SEGMENT_BITS: u64 = 1 << 21;

/// Deterministic Miller-Rabin, valid for all u64.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// First prime strictly greater than `n`.
pub fn next_prime(n: u64) -> u64 {
    if n < 2 {
        return 2;
    }
    let mut c = n + 1 + (n % 2);
    if n == 2 {
        return 3;
    }
    loop {
        if is_prime(c) {
            return c;
        }
        c += 2;
    }
}

/// Largest prime strictly less than `n`, if any.
pub fn prev_prime(n: u64) -> Option<u64> {
    if n <= 2 {
        return None;
    }
    if n == 3 {
        return Some(2);
    }
    let mut c = if n % 2 == 0 { n - 1 } else { n - 2 };
    loop {
        if is_prime(c) {
            return Some(c);
        }
        if c == 3 {
            return Some(2);
        }
        c -= 2;
    }
}

/// All primes `<= limit` by a plain odd-only sieve. Intended for base primes
/// and small iterations (limit up to ~1e8).
pub fn primes_below(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let mut out = vec![2];
    if limit < 3 {
        return out;
    }
    // Bit i represents 2i + 3.
    let bits = ((limit - 3) / 2 + 1) as usize;
    let mut composite = vec![false; bits];
    let mut i = 0usize;
    while {
        let p = 2 * i as u64 + 3;
        p * p <= limit
    } {
        if !composite[i] {
            let p = 2 * i as u64 + 3;
            let mut j = ((p * p - 3) / 2) as usize;
            while j < bits {
                composite[j] = true;
                j += p as usize;
            }
        }
        i += 1;
    }
    out.extend(
        composite
            .iter()
            .enumerate()
            .filter(|(_, &c)| !c)
            .map(|(i, _)| 2 * i as u64 + 3),
    );
    out
}

/// One sieved segment: odd numbers in `[start, start + 2*len)`,
/// bit i <=> `start + 2i` composite.
struct Segment {
    start: u64, // odd
    len: u64,   // number of odd slots
    bits: Vec<u64>,
}

fn sieve_segment(start: u64, len: u64, base: &[u64]) -> Segment {
    debug_assert!(start % 2 == 1);
    let words = ((len + 63) / 64) as usize;
    let mut bits = vec![0u64; words];
    let end = start + 2 * len; // exclusive
    for &p in base.iter().skip(1) {
        // skip 2: only odd slots exist
        if p * p >= end {
            break;
        }
        // first odd multiple of p in [max(p*p, start), end)
        let mut m = p * p;
        if m < start {
            m = (start + p - 1) / p * p;
            if m % 2 == 0 {
                m += p;
            }
        }
        let mut idx = (m - start) / 2;
        while idx < len {
            bits[(idx / 64) as usize] |= 1u64 << (idx % 64);
            idx += p;
        }
    }
    if start == 1 {
        bits[0] |= 1; // 1 is not prime
    }
    Segment { start, len, bits }
}

impl Segment {
    fn for_each(&self, mut f: impl FnMut(u64) -> ControlFlow<()>) -> ControlFlow<()> {
        for w in 0..self.bits.len() {
            let mut word = !self.bits[w];
            if (w as u64 + 1) * 64 > self.len {
                let tail = self.len - w as u64 * 64;
                if tail == 0 {
                    break;
                }
                word &= (!0u64) >> (64 - tail);
            }
            while word != 0 {
                let b = word.trailing_zeros() as u64;
                word &= word - 1;
                f(self.start + 2 * (w as u64 * 64 + b))?;
            }
        }
        ControlFlow::Continue(())
    }
}

/// Visit every prime in `[lo, hi]` in ascending order. The callback may
/// return `ControlFlow::Break(())` to stop early. With `threads > 1`,
/// segments are sieved by a worker pool and consumed in order, so the
/// callback still sees a strictly ascending stream.
pub fn for_each_prime(
    lo: u64,
    hi: u64,
    threads: usize,
    limits: &Limits,
    mut f: impl FnMut(u64) -> ControlFlow<()>,
) -> Result<()> {
    if hi > limits.sieve_max {
        return Err(Error::ResourceLimit {
            what: "segmented sieve",
            needed: hi,
            budget: limits.sieve_max,
        });
    }
    if lo > hi {
        return Ok(());
    }
    if lo <= 2 && hi >= 2 {
        if let ControlFlow::Break(()) = f(2) {
            return Ok(());
        }
    }
    let start = (lo.max(3)) | 1;
    if start > hi {
        return Ok(());
    }
    let base = primes_below(hi.isqrt() + 1);
    let total_slots = (hi - start) / 2 + 1;
    let n_segments = (total_slots + SEGMENT_BITS - 1) / SEGMENT_BITS;

    let seg_bounds = |i: u64| -> (u64, u64) {
        let s = start + 2 * i * SEGMENT_BITS;
        let len = SEGMENT_BITS.min(total_slots - i * SEGMENT_BITS);
        (s, len)
    };

    if threads <= 1 || n_segments < 2 {
        for i in 0..n_segments {
            let (s, len) = seg_bounds(i);
            let seg = sieve_segment(s, len, &base);
            if let ControlFlow::Break(()) = seg.for_each(&mut f) {
                return Ok(());
            }
        }
        return Ok(());
    }

    // Worker pool: segments sieved out of order, re-sequenced at the consumer.
    let next_idx = AtomicU64::new(0);
    let stop = AtomicBool::new(false);
    let workers = threads.min(n_segments as usize);
    let (tx, rx) = mpsc::sync_channel::<(u64, Segment)>(workers * 2);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let base = &base;
            let next_idx = &next_idx;
            let stop = &stop;
            scope.spawn(move || loop {
                if stop.load(Ordering::Relaxed) {
                    return;
                }
                let i = next_idx.fetch_add(1, Ordering::Relaxed);
                if i >= n_segments {
                    return;
                }
                let (s, len) = seg_bounds(i);
                let seg = sieve_segment(s, len, base);
                if tx.send((i, seg)).is_err() {
                    return;
                }
            });
        }
        drop(tx);
        let mut pending = std::collections::BTreeMap::new();
        let mut want = 0u64;
        'recv: for (i, seg) in rx.iter() {
            pending.insert(i, seg);
            while let Some(seg) = pending.remove(&want) {
                want += 1;
                if let ControlFlow::Break(()) = seg.for_each(&mut f) {
                    stop.store(true, Ordering::Relaxed);
                    break 'recv;
                }
            }
        }
        // Drain whatever the workers already queued so they can exit.
        drop(rx);
    });
    Ok(())
}

/// Ascending primes in `[lo, hi]`, materialized.
pub fn sieve_primes(lo: u64, hi: u64, limits: &Limits) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for_each_prime(lo, hi, 1, limits, |p| {
        out.push(p);
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

/// Number of primes in `[lo, hi]`.
pub fn count_primes(lo: u64, hi: u64, threads: usize, limits: &Limits) -> Result<u64> {
    let mut n = 0u64;
    for_each_prime(lo, hi, threads, limits, |_| {
        n += 1;
        ControlFlow::Continue(())
    })?;
    Ok(n)
}

/// The n-th odd prime (1-based: 3 is the first).
pub fn nth_odd_prime(n: u64, threads: usize, limits: &Limits) -> Result<u64> {
    assert!(n > 0);
    let mut remaining = n;
    let mut found = 0u64;
    for_each_prime(3, limits.sieve_max, threads, limits, |p| {
        remaining -= 1;
        if remaining == 0 {
            found = p;
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    if found == 0 {
        return Err(Error::ResourceLimit {
            what: "nth_odd_prime",
            needed: limits.sieve_max,
            budget: limits.sieve_max,
        });
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality_small() {
        let known: Vec<u64> = vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29];
        for n in 0..30 {
            assert_eq!(is_prime(n), known.contains(&n), "n={n}");
        }
        assert!(is_prime(45161));
        assert!(is_prime(1_000_003));
        assert!(!is_prime(1_000_001));
        assert!(is_prime(2_038_074_751));
    }

    #[test]
    fn next_and_prev() {
        assert_eq!(next_prime(1), 2);
        assert_eq!(next_prime(2), 3);
        assert_eq!(next_prime(29), 31);
        assert_eq!(next_prime(37), 41);
        assert_eq!(prev_prime(3), Some(2));
        assert_eq!(prev_prime(2), None);
        assert_eq!(prev_prime(45161), Some(45139));
        assert_eq!(next_prime(45161), 45179);
    }

    #[test]
    fn segmented_matches_simple() {
        let limits = Limits::default();
        let simple = primes_below(200_000);
        let seg = sieve_primes(2, 200_000, &limits).unwrap();
        assert_eq!(simple, seg);
        // A window that starts mid-range.
        let window = sieve_primes(100_000, 150_000, &limits).unwrap();
        let expect: Vec<u64> = simple
            .iter()
            .copied()
            .filter(|&p| (100_000..=150_000).contains(&p))
            .collect();
        assert_eq!(window, expect);
    }

    #[test]
    fn range_2_to_30() {
        let limits = Limits::default();
        assert_eq!(
            sieve_primes(2, 30, &limits).unwrap(),
            vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
        );
    }

    #[test]
    fn threaded_matches_sequential() {
        let limits = Limits::default();
        let a = count_primes(2, 3_000_000, 1, &limits).unwrap();
        let b = count_primes(2, 3_000_000, 3, &limits).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, 216_816); // pi(3e6)
    }

    #[test]
    fn budget_is_enforced() {
        let limits = Limits {
            sieve_max: 1000,
            ..Limits::default()
        };
        assert!(matches!(
            count_primes(2, 2000, 1, &limits),
            Err(Error::ResourceLimit { .. })
        ));
    }

    #[test]
    fn nth_odd_prime_small() {
        let limits = Limits::default();
        assert_eq!(nth_odd_prime(1, 1, &limits).unwrap(), 3);
        assert_eq!(nth_odd_prime(10, 1, &limits).unwrap(), 31);
    }
}
