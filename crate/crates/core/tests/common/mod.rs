//! Brute-force oracles by exhaustive enumeration of label subsets.
#![allow(dead_code)]

use std::collections::BTreeMap;

/// All bitmasks over `n` labels with exactly `k` bits set.
pub fn subsets(n: u32, k: u32) -> Vec<u32> {
    (0u32..(1 << n)).filter(|m| m.count_ones() == k).collect()
}

fn low_bits(count: u64) -> u32 {
    ((1u64 << count) - 1) as u32
}

/// `P(x, ·)` by enumerating every pair of `k`-subsets of the two urns.
/// Red balls sit on labels `0..x` of the left urn and `0..n−x` of the right.
pub fn brute_row(n: u64, k: u64, x: u64) -> Vec<f64> {
    let sets = subsets(n as u32, k as u32);
    let left_red = low_bits(x);
    let right_red = low_bits(n - x);
    let mut counts = vec![0u64; n as usize + 1];
    for &a in &sets {
        let out = (a & left_red).count_ones() as u64;
        for &b in &sets {
            let inn = (b & right_red).count_ones() as u64;
            counts[(x - out + inn) as usize] += 1;
        }
    }
    let total = (sets.len() * sets.len()) as f64;
    counts.into_iter().map(|c| c as f64 / total).collect()
}

/// `P(Hyper(population, successes, draws) = j)` for every `j`.
pub fn brute_hypergeom(population: u64, successes: u64, draws: u64) -> Vec<f64> {
    let sets = subsets(population as u32, draws as u32);
    let marked = low_bits(successes);
    let mut counts = vec![0u64; draws as usize + 1];
    for &s in &sets {
        counts[(s & marked).count_ones() as usize] += 1;
    }
    counts.into_iter().map(|c| c as f64 / sets.len() as f64).collect()
}

/// Joint law of one step of two copies from `(x, y)` driven by the same
/// label sets, each copy with its red balls on the low labels.
pub fn brute_coupled(n: u64, k: u64, x: u64, y: u64) -> BTreeMap<(u64, u64), f64> {
    let sets = subsets(n as u32, k as u32);
    let total = (sets.len() * sets.len()) as f64;
    let step = |z: u64, a: u32, b: u32| z - (a & low_bits(z)).count_ones() as u64 + (b & low_bits(n - z)).count_ones() as u64;
    let mut law = BTreeMap::new();
    for &a in &sets {
        for &b in &sets {
            *law.entry((step(x, a, b), step(y, a, b))).or_insert(0.0) += 1.0 / total;
        }
    }
    law
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
