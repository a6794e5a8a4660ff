//! Independent oracles and random-input generators for the acceptance
//! suite. Everything here recomputes results from first principles with
//! plain loops — none of it calls into the production implementations it
//! is used to check (beyond shared primitive types).

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use silomatch_core::silo::ColumnValues;
use std::collections::{BTreeMap, BTreeSet};

// --- brute-force column profile --------------------------------------------

/// Ascending-order population moments: (sum, mean, var, m3, m4).
/// Evaluation shape mirrors the profile contract (two passes over the
/// sorted values, `d2 = d*d`, `m3 += d2*d`, `m4 += d2*d2`), which is what
/// makes an exact float comparison meaningful.
fn moments(sorted: &[f64]) -> (f64, f64, f64, f64, f64) {
    if sorted.is_empty() {
        return (0.0, 0.0, 0.0, 0.0, 0.0);
    }
    let n = sorted.len() as f64;
    let mut sum = 0.0;
    for &x in sorted {
        sum += x;
    }
    let mean = sum / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in sorted {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (sum, mean, m2 / n, m3 / n, m4 / n)
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn sorted_ascending(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    xs
}

/// mean, std, min, max, median, sum of a raw (unsorted) sequence.
fn six(xs: Vec<f64>) -> [f64; 6] {
    let s = sorted_ascending(xs);
    if s.is_empty() {
        return [0.0; 6];
    }
    let (sum, mean, var, _, _) = moments(&s);
    [mean, var.sqrt(), s[0], s[s.len() - 1], median(&s), sum]
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Recomputes all 987 profile features of a column with direct loops.
pub fn oracle_profile(column: &ColumnValues) -> Vec<f64> {
    let cells = column.values.len();
    let present: Vec<&str> = column.values.iter().flatten().map(String::as_str).collect();
    let nulls = cells - present.len();
    let n = present.len();

    let mut out = Vec::with_capacity(987);

    // 0..7: counts and fractions
    out.push(cells as f64);
    out.push(nulls as f64);
    out.push(ratio(nulls, cells));
    let distinct: BTreeSet<&str> = present.iter().copied().collect();
    out.push(distinct.len() as f64);
    out.push(ratio(distinct.len(), n));
    let numerics: Vec<f64> = present
        .iter()
        .filter_map(|v| {
            let x: f64 = v.trim().parse().ok()?;
            x.is_finite().then_some(x)
        })
        .collect();
    out.push(numerics.len() as f64);
    out.push(ratio(numerics.len(), n));
    // 7..13: numeric value stats
    out.extend(six(numerics));
    // 13..15: alphabetic-only
    let alphabetic = present
        .iter()
        .filter(|v| !v.is_empty() && v.chars().all(char::is_alphabetic))
        .count();
    out.push(alphabetic as f64);
    out.push(ratio(alphabetic, n));
    // 15..21: codepoint-length stats
    out.extend(six(
        present.iter().map(|v| v.chars().count() as f64).collect(),
    ));
    // 21..26: word-count stats, no sum
    let words = six(
        present
            .iter()
            .map(|v| v.split_whitespace().count() as f64)
            .collect(),
    );
    out.extend(&words[..5]);
    // 26: fraction of values containing an ASCII digit
    let with_digit = present
        .iter()
        .filter(|v| v.chars().any(|c| c.is_ascii_digit()))
        .count();
    out.push(ratio(with_digit, n));
    assert_eq!(out.len(), 27);

    // 27..987: per-character aggregates over codes 32..=127, in order:
    // any, all, mean, variance, min, max, median, sum, excess kurtosis,
    // skewness.
    for code in 32u32..=127 {
        let mut counts: Vec<f64> = Vec::with_capacity(n);
        for v in &present {
            let mut k = 0u32;
            for c in v.chars() {
                if c as u32 == code {
                    k += 1;
                }
            }
            counts.push(k as f64);
        }
        let s = sorted_ascending(counts);
        if s.is_empty() {
            out.extend([0.0; 10]);
            continue;
        }
        let (sum, mean, var, m3, m4) = moments(&s);
        let min = s[0];
        let max = s[s.len() - 1];
        let (kurt, skew) = if var > 0.0 {
            (m4 / (var * var) - 3.0, m3 / (var * var.sqrt()))
        } else {
            (0.0, 0.0)
        };
        out.extend([
            if sum > 0.0 { 1.0 } else { 0.0 },
            if min >= 1.0 { 1.0 } else { 0.0 },
            mean,
            var,
            min,
            max,
            median(&s),
            sum,
            kurt,
            skew,
        ]);
    }
    assert_eq!(out.len(), 987);
    // Output contract: finite entries only; overflowed statistics are 0.
    for f in &mut out {
        if !f.is_finite() {
            *f = 0.0;
        }
    }
    out
}

// --- random inputs ----------------------------------------------------------

/// A random column: mixed lengths, nulls, empty strings, whitespace,
/// numerics, ASCII text, the occasional non-ASCII codepoint, and
/// numeric-looking junk.
pub fn random_column(rng: &mut ChaCha8Rng) -> ColumnValues {
    let len = rng.gen_range(0..=12);
    let mut values = Vec::with_capacity(len);
    for _ in 0..len {
        if rng.gen_bool(0.15) {
            values.push(None);
            continue;
        }
        let v = match rng.gen_range(0..6) {
            0 => String::new(),
            1 => format!("{:.3}", rng.gen_range(-50.0..50.0)),
            2 => ["inf", "nan", "1e3", " 7 ", "-0", "5five", "1e215", "-9e307"]
                [rng.gen_range(0..8)]
            .to_string(),
            3 => {
                let n = rng.gen_range(1..=10);
                (0..n)
                    .map(|_| char::from(rng.gen_range(32u8..=127)))
                    .collect()
            }
            4 => {
                let n = rng.gen_range(1..=4);
                let mut s = String::new();
                for i in 0..n {
                    if i > 0 {
                        s.push(if rng.gen_bool(0.3) { '\t' } else { ' ' });
                    }
                    let w = rng.gen_range(1..=5);
                    s.extend((0..w).map(|_| char::from(rng.gen_range(b'a'..=b'z'))));
                }
                s
            }
            _ => {
                let pool = ['é', 'ß', '語', 'a', '0', '~', '\u{7f}'];
                (0..rng.gen_range(1..=6))
                    .map(|_| pool[rng.gen_range(0..pool.len())])
                    .collect()
            }
        };
        values.push(Some(v));
    }
    ColumnValues::new(values)
}

pub fn shuffled_column(column: &ColumnValues, rng: &mut ChaCha8Rng) -> ColumnValues {
    let mut values = column.values.clone();
    // Fisher–Yates
    for i in (1..values.len()).rev() {
        let j = rng.gen_range(0..=i);
        values.swap(i, j);
    }
    ColumnValues::new(values)
}

/// Random undirected edge list over `n` nodes arranged into exactly
/// `k` connected components (chain per group plus random extras).
pub fn random_component_edges(
    n: usize,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<(usize, usize)>, Vec<usize>) {
    assert!(k >= 1 && k <= n);
    // random surjective assignment node → group
    let mut group_of: Vec<usize> = (0..n).map(|i| i % k).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        group_of.swap(i, j);
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (node, &g) in group_of.iter().enumerate() {
        members[g].push(node);
    }
    let mut edges = BTreeSet::new();
    for m in &members {
        for w in m.windows(2) {
            edges.insert((w[0].min(w[1]), w[0].max(w[1])));
        }
        // extra in-group edges
        if m.len() >= 2 {
            for _ in 0..rng.gen_range(0..=m.len()) {
                let a = m[rng.gen_range(0..m.len())];
                let b = m[rng.gen_range(0..m.len())];
                if a != b {
                    edges.insert((a.min(b), a.max(b)));
                }
            }
        }
    }
    (edges.into_iter().collect(), group_of)
}

/// Union-find reimplementation: cross-component unordered pairs.
pub fn oracle_cross_pairs(n: usize, edges: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let r = find(parent, parent[x]);
            parent[x] = r;
        }
        parent[x]
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let mut out = BTreeSet::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if find(&mut parent, u) != find(&mut parent, v) {
                out.insert((u, v));
            }
        }
    }
    out
}

/// Per-node degree from an undirected edge list.
pub fn oracle_degrees(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut deg = vec![0usize; n];
    let dedup: BTreeSet<(usize, usize)> = edges
        .iter()
        .map(|&(a, b)| (a.min(b), a.max(b)))
        .collect();
    for (a, b) in dedup {
        deg[a] += 1;
        deg[b] += 1;
    }
    deg
}

/// Component label per node, from the same union-find as the pair oracle.
pub fn oracle_component_labels(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let r = find(parent, parent[x]);
            parent[x] = r;
        }
        parent[x]
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let mut label = BTreeMap::new();
    let mut out = Vec::with_capacity(n);
    for v in 0..n {
        let root = find(&mut parent, v);
        let next = label.len();
        out.push(*label.entry(root).or_insert(next));
    }
    out
}
