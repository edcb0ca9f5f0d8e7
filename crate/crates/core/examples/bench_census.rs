use std::time::Instant;
use sievebias_core::{gapcycle, Limits};

fn main() {
    let limits = Limits::default();
    let args: Vec<String> = std::env::args().collect();
    let p: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(29);
    let gcap: u32 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(62);
    let threads: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(2);
    let t = Instant::now();
    let census = gapcycle::census_stream(p, gcap, threads, &limits).unwrap();
    println!("census G({p}#) gcap={gcap} threads={threads}: {:?}", t.elapsed());
    println!("phi = {}", census.stage.phi);
    println!("gaps_total = {}", census.gaps_total());
    println!("span_total = {}", census.span_total());
    println!("n_2_1 = {}", census.count(2, 1));
    println!("n_6_1 = {}", census.count(6, 1));
    println!("max_gap_cell = {}", census.max_gap());
    println!("max_j = {}", census.max_run_len_any());
}
