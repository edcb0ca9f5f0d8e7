use std::time::Instant;
use sievebias_core::primecount::{pair_census_multi, CensusLimit, Convention};
use sievebias_core::Limits;

fn main() {
    let limits = Limits::default();
    let threads: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(2);
    let x0 = 2_038_074_751u64;
    let specs = [
        (Convention::FirstOddPairs, CensusLimit::Pairs(100_000_000)),
        (Convention::FirstUnitPairs, CensusLimit::Pairs(100_000_000)),
        (Convention::RightBelow, CensusLimit::UpperBound(x0)),
    ];
    let t = Instant::now();
    let censuses = pair_census_multi(10, &specs, threads, &limits).unwrap();
    println!("elapsed: {:?}", t.elapsed());
    for c in &censuses {
        println!(
            "== {} total={} classified={} unclassified={} last={}",
            c.convention.id(),
            c.pairs_total,
            c.classified(),
            c.unclassified,
            c.last_prime
        );
        for (&(a, b), &n) in &c.cells {
            println!("  ({a},{b}) {n}");
        }
        for (&r, &s) in &c.sigma {
            println!("  sigma[{r}] = {s}");
        }
    }
}
