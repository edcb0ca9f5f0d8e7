// Independent check: one flat odd-only bitmap, no segmentation, no carry.
fn main() {
    let hi: u64 = 2_038_075_000;
    let bits = ((hi - 3) / 2 + 1) as usize;
    let mut comp = vec![0u64; bits / 64 + 1];
    let mut i = 0usize;
    loop {
        let p = 2 * i as u64 + 3;
        if p * p > hi {
            break;
        }
        if comp[i / 64] & (1 << (i % 64)) == 0 {
            let mut j = ((p * p - 3) / 2) as usize;
            while j < bits {
                comp[j / 64] |= 1 << (j % 64);
                j += p as usize;
            }
        }
        i += 1;
    }
    // walk odd primes: count, find nth, classify consecutive pairs mod 10
    let mut count_odd = 0u64;
    let mut prev: u64 = 0;
    let mut cells = std::collections::BTreeMap::new();
    let mut pairs = 0u64;
    let n_target = 100_000_000u64;
    let mut nth_odd = 0u64;
    let mut boundary = Vec::new();
    for i in 0..bits {
        if comp[i / 64] & (1 << (i % 64)) == 0 {
            let p = 2 * i as u64 + 3;
            count_odd += 1;
            if count_odd == n_target {
                nth_odd = p;
            }
            if (99_999_997..=100_000_006).contains(&count_odd) {
                boundary.push((count_odd, p));
            }
            if prev >= 7 && pairs < n_target {
                pairs += 1;
                *cells.entry((prev % 10, p % 10)).or_insert(0u64) += 1;
                if pairs >= n_target - 3 {
                    println!("pair #{pairs}: ({prev}, {p}) -> ({},{})", prev % 10, p % 10);
                }
            }
            prev = p;
        }
    }
    println!("odd primes counted: {count_odd}");
    println!("1e8-th odd prime: {nth_odd}");
    println!("boundary: {boundary:?}");
    println!("unit pairs counted: {pairs}");
    for (&(a, b), &n) in &cells {
        println!("({a},{b}) {n}");
    }
}
