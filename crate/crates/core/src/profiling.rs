//! Column profiles: the 987-dimensional numeric summary of a column that
//! seeds the GNN node features.
//!
//! Layout (indices):
//! - `0..27` global statistics, in the fixed order documented on
//!   [`profile_column`];
//! - `27..987` the character block: 96 ASCII characters (codes 32..=127)
//!   by 10 aggregates each, character-major. Aggregate order per
//!   character: any, all, mean, variance (population), min, max, median,
//!   sum, excess kurtosis (Fisher, population), skewness (population).
//!
//! All statistics are computed over canonically sorted value sequences so
//! a permutation of the input cells produces a bit-identical vector.
//! Degenerate statistics coerce to 0: statistics of an empty set are 0,
//! and zero variance forces skewness and kurtosis to 0. Missing cells are
//! excluded from every statistic except the null count and fraction.

use crate::error::Error;
use crate::exec;
use crate::silo::{ColumnRef, ColumnValues, Silo};
use crate::Result;
use std::collections::BTreeMap;
use std::collections::HashSet;

/// Total profile width.
pub const FEATURE_LEN: usize = 987;
/// Number of leading global statistics.
pub const GLOBAL_STATS_LEN: usize = 27;
/// Character block: ASCII codes 32..=127 inclusive.
pub const CHAR_LO: u8 = 32;
pub const CHAR_HI: u8 = 127;
pub const CHAR_SET_LEN: usize = (CHAR_HI - CHAR_LO + 1) as usize;
/// Aggregates stored per character.
pub const CHAR_AGGREGATES: usize = 10;

/// The fixed-length numeric profile of one column.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    features: Vec<f64>,
}

impl FeatureVector {
    pub(crate) fn from_vec(features: Vec<f64>) -> Self {
        debug_assert_eq!(features.len(), FEATURE_LEN);
        FeatureVector { features }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

/// Population moments over an ascending-sorted sequence. Sums run in
/// ascending index order; that order is part of the output contract.
fn sorted_moments(sorted: &[f64]) -> (f64, f64, f64, f64, f64) {
    // (sum, mean, var, m3, m4); zeros for the empty set.
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

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// mean, std (population), min, max, median, sum — of a sorted sequence.
fn six_stats(sorted: &[f64]) -> [f64; 6] {
    if sorted.is_empty() {
        return [0.0; 6];
    }
    let (sum, mean, var, _, _) = sorted_moments(sorted);
    [
        mean,
        var.sqrt(),
        sorted[0],
        sorted[sorted.len() - 1],
        median_of_sorted(sorted),
        sum,
    ]
}

/// The ten per-character aggregates of a sorted count sequence.
fn char_aggregates(sorted_counts: &[f64]) -> [f64; CHAR_AGGREGATES] {
    if sorted_counts.is_empty() {
        return [0.0; CHAR_AGGREGATES];
    }
    let (sum, mean, var, m3, m4) = sorted_moments(sorted_counts);
    let min = sorted_counts[0];
    let max = sorted_counts[sorted_counts.len() - 1];
    let any = if sum > 0.0 { 1.0 } else { 0.0 };
    let all = if min >= 1.0 { 1.0 } else { 0.0 };
    let (kurtosis, skewness) = if var > 0.0 {
        (m4 / (var * var) - 3.0, m3 / (var * var.sqrt()))
    } else {
        (0.0, 0.0)
    };
    [
        any,
        all,
        mean,
        var,
        min,
        max,
        median_of_sorted(sorted_counts),
        sum,
        kurtosis,
        skewness,
    ]
}

/// A value parses as numeric if, after trimming surrounding whitespace,
/// it is a finite decimal floating-point number.
fn parse_numeric(v: &str) -> Option<f64> {
    let x: f64 = v.trim().parse().ok()?;
    x.is_finite().then_some(x)
}

/// Computes the 987-feature profile of a column. Total function: empty
/// and degenerate inputs produce all-zero statistics per the coercion
/// rules; the output is always finite and permutation-invariant.
pub fn profile_column(column: &ColumnValues) -> FeatureVector {
    let cell_count = column.values.len();
    let non_null: Vec<&str> = column
        .values
        .iter()
        .filter_map(|v| v.as_deref())
        .collect();
    let null_count = cell_count - non_null.len();
    let n = non_null.len();

    let mut features = vec![0.0; FEATURE_LEN];

    // Global statistics.
    let distinct = non_null.iter().collect::<HashSet<_>>().len();
    let numeric: Vec<f64> = {
        let mut xs: Vec<f64> = non_null.iter().filter_map(|v| parse_numeric(v)).collect();
        xs.sort_unstable_by(f64::total_cmp);
        xs
    };
    let alphabetic_count = non_null
        .iter()
        .filter(|v| !v.is_empty() && v.chars().all(char::is_alphabetic))
        .count();
    let lengths: Vec<f64> = {
        let mut xs: Vec<f64> = non_null.iter().map(|v| v.chars().count() as f64).collect();
        xs.sort_unstable_by(f64::total_cmp);
        xs
    };
    let word_counts: Vec<f64> = {
        let mut xs: Vec<f64> = non_null
            .iter()
            .map(|v| v.split_whitespace().count() as f64)
            .collect();
        xs.sort_unstable_by(f64::total_cmp);
        xs
    };
    let digit_count = non_null
        .iter()
        .filter(|v| v.chars().any(|c| c.is_ascii_digit()))
        .count();

    let frac = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };

    features[0] = cell_count as f64;
    features[1] = null_count as f64;
    features[2] = frac(null_count, cell_count);
    features[3] = distinct as f64;
    features[4] = frac(distinct, n);
    features[5] = numeric.len() as f64;
    features[6] = frac(numeric.len(), n);
    features[7..13].copy_from_slice(&six_stats(&numeric));
    features[13] = alphabetic_count as f64;
    features[14] = frac(alphabetic_count, n);
    features[15..21].copy_from_slice(&six_stats(&lengths));
    features[21..26].copy_from_slice(&six_stats(&word_counts)[..5]);
    features[26] = frac(digit_count, n);

    // Character block: per-value occurrence counts of each ASCII
    // character 32..=127. Other codepoints are ignored here but already
    // counted toward value length above.
    let mut per_value_counts = vec![0u32; n * CHAR_SET_LEN];
    for (vi, v) in non_null.iter().enumerate() {
        let row = &mut per_value_counts[vi * CHAR_SET_LEN..(vi + 1) * CHAR_SET_LEN];
        for c in v.chars() {
            let code = c as u32;
            if (CHAR_LO as u32..=CHAR_HI as u32).contains(&code) {
                row[(code - CHAR_LO as u32) as usize] += 1;
            }
        }
    }
    let mut counts_buf: Vec<f64> = vec![0.0; n];
    for ci in 0..CHAR_SET_LEN {
        for vi in 0..n {
            counts_buf[vi] = per_value_counts[vi * CHAR_SET_LEN + ci] as f64;
        }
        counts_buf.sort_unstable_by(f64::total_cmp);
        let aggs = char_aggregates(&counts_buf);
        let base = GLOBAL_STATS_LEN + ci * CHAR_AGGREGATES;
        features[base..base + CHAR_AGGREGATES].copy_from_slice(&aggs);
    }

    // Finite-but-extreme numerics overflow the moment arithmetic: a
    // "1e215" cell parses fine, then squares to inf in the variance
    // pass. The output contract is stricter than the arithmetic —
    // every entry finite, overflowed statistics coerced to 0.
    for f in &mut features {
        if !f.is_finite() {
            *f = 0.0;
        }
    }

    FeatureVector::from_vec(features)
}

/// Profiles of every column of a silo, plus warning records for skipped
/// degenerate tables.
#[derive(Debug, Clone, Default)]
pub struct SiloProfiles {
    pub profiles: BTreeMap<ColumnRef, FeatureVector>,
    pub warnings: Vec<String>,
}

/// Profiles every column of every table in the silo. Tables with zero
/// columns are skipped with a warning record. The result is independent
/// of table iteration order (keyed by canonical refs).
pub fn profile_silo(silo: &Silo) -> SiloProfiles {
    let mut warnings = Vec::new();
    let mut work: Vec<(ColumnRef, &ColumnValues)> = Vec::new();
    for table in &silo.tables {
        if table.columns.is_empty() {
            let msg = format!(
                "silo {}: table {} has zero columns; skipped",
                silo.silo_id, table.table_id
            );
            log::warn!("{msg}");
            warnings.push(msg);
            continue;
        }
        for (name, values) in &table.columns {
            work.push((
                ColumnRef::new(&silo.silo_id, &table.table_id, name),
                values,
            ));
        }
    }
    work.sort_by(|a, b| a.0.cmp(&b.0));
    let vectors = exec::map_collect(&work, |_, (_, values)| profile_column(values));
    let profiles = work
        .into_iter()
        .map(|(r, _)| r)
        .zip(vectors)
        .collect::<BTreeMap<_, _>>();
    SiloProfiles { profiles, warnings }
}

/// Per-feature z-score parameters fit on training profiles. Immutable
/// after fit and safe to share read-only.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl Standardizer {
    /// Fits population mean/std per feature. A constant feature's std is
    /// replaced by 1 so its standardized value is 0.
    pub fn fit(rows: &[&[f64]]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::NoProfiles);
        }
        let dim = rows[0].len();
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimMismatch {
                    context: "standardizer fit".into(),
                    expected: dim,
                    actual: r.len(),
                });
            }
        }
        let n = rows.len() as f64;
        let mut means = vec![0.0; dim];
        for r in rows {
            for (m, x) in means.iter_mut().zip(*r) {
                *m += x;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut stds = vec![0.0; dim];
        for r in rows {
            for (s, (x, m)) in stds.iter_mut().zip(r.iter().zip(&means)) {
                let d = x - m;
                *s += d * d;
            }
        }
        for s in &mut stds {
            *s = (*s / n).sqrt();
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        Ok(Standardizer { means, stds })
    }

    pub fn fit_profiles<'a, I>(profiles: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a FeatureVector>,
    {
        let rows: Vec<&[f64]> = profiles.into_iter().map(|p| p.as_slice()).collect();
        Self::fit(&rows)
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    /// Reconstructs a standardizer from persisted parameters.
    pub fn from_parts(means: Vec<f64>, stds: Vec<f64>) -> Result<Self> {
        if means.len() != stds.len() {
            return Err(Error::DimMismatch {
                context: "standardizer parts".into(),
                expected: means.len(),
                actual: stds.len(),
            });
        }
        Ok(Standardizer { means, stds })
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.means.len() {
            return Err(Error::DimMismatch {
                context: "standardizer apply".into(),
                expected: self.means.len(),
                actual: v.len(),
            });
        }
        // A dim whose spread overflowed fit gets std = +inf and lands
        // at ±0 here; the guard catches the NaN corners (inf − inf) so
        // no non-finite value ever reaches the encoder, where a NaN
        // would flush to a dead all-zero state through relu's max.
        Ok(v.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(x, (m, s))| {
                let z = (x - m) / s;
                if z.is_finite() {
                    z
                } else {
                    0.0
                }
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feature(fv: &FeatureVector, idx: usize) -> f64 {
        fv.as_slice()[idx]
    }

    fn char_feature(fv: &FeatureVector, c: char, agg: usize) -> f64 {
        let ci = (c as u32 - CHAR_LO as u32) as usize;
        feature(fv, GLOBAL_STATS_LEN + ci * CHAR_AGGREGATES + agg)
    }

    #[test]
    fn empty_column_is_all_zero() {
        let fv = profile_column(&ColumnValues::default());
        assert_eq!(fv.len(), FEATURE_LEN);
        assert!(fv.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn repeated_value_counts() {
        let fv = profile_column(&ColumnValues::from_strs(&["a", "a"]));
        assert_eq!(feature(&fv, 0), 2.0); // value count
        assert_eq!(feature(&fv, 3), 1.0); // distinct count
        assert_eq!(feature(&fv, 4), 0.5); // distinct fraction
        let expect = [1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 0.0, 0.0];
        for (agg, &want) in expect.iter().enumerate() {
            assert_eq!(char_feature(&fv, 'a', agg), want, "aggregate {agg}");
        }
    }

    #[test]
    fn binary_count_moments() {
        // 'b' appears once in "ab" and never in "a": counts {1, 0}.
        let fv = profile_column(&ColumnValues::from_strs(&["ab", "a"]));
        assert_eq!(char_feature(&fv, 'b', 0), 1.0); // any
        assert_eq!(char_feature(&fv, 'b', 1), 0.0); // all
        assert_eq!(char_feature(&fv, 'b', 2), 0.5); // mean
        assert_eq!(char_feature(&fv, 'b', 3), 0.25); // variance
        assert_eq!(char_feature(&fv, 'b', 4), 0.0); // min
        assert_eq!(char_feature(&fv, 'b', 5), 1.0); // max
        assert_eq!(char_feature(&fv, 'b', 6), 0.5); // median
        assert_eq!(char_feature(&fv, 'b', 7), 1.0); // sum
        assert_eq!(char_feature(&fv, 'b', 8), -2.0); // excess kurtosis
        assert_eq!(char_feature(&fv, 'b', 9), 0.0); // skewness
    }

    #[test]
    fn nulls_are_excluded_except_null_stats() {
        let fv = profile_column(&ColumnValues::new(vec![
            Some("x".into()),
            None,
            Some("x".into()),
            None,
        ]));
        assert_eq!(feature(&fv, 0), 4.0); // cells
        assert_eq!(feature(&fv, 1), 2.0); // nulls
        assert_eq!(feature(&fv, 2), 0.5); // null fraction
        assert_eq!(feature(&fv, 3), 1.0); // distinct over non-null
        assert_eq!(char_feature(&fv, 'x', 7), 2.0); // sum counts non-null only
    }

    #[test]
    fn all_null_column_is_finite_and_mostly_zero() {
        let fv = profile_column(&ColumnValues::new(vec![None, None, None]));
        assert!(fv.as_slice().iter().all(|x| x.is_finite()));
        assert_eq!(feature(&fv, 0), 3.0);
        assert_eq!(feature(&fv, 1), 3.0);
        assert_eq!(feature(&fv, 2), 1.0);
        assert!(fv.as_slice()[3..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn non_ascii_counts_toward_length_only() {
        let fv = profile_column(&ColumnValues::from_strs(&["héé"]));
        // length counts codepoints
        assert_eq!(feature(&fv, 15), 3.0); // mean length
        assert_eq!(char_feature(&fv, 'h', 7), 1.0);
        // é is outside the tracked set; every tracked char other than 'h'
        // has zero sum.
        let mut tracked_sum = 0.0;
        for ci in 0..CHAR_SET_LEN {
            tracked_sum += feature(&fv, GLOBAL_STATS_LEN + ci * CHAR_AGGREGATES + 7);
        }
        assert_eq!(tracked_sum, 1.0);
    }

    #[test]
    fn numeric_stats_ignore_non_finite_parses() {
        let fv = profile_column(&ColumnValues::from_strs(&["1.5", " 2.5 ", "inf", "nan", "x"]));
        assert_eq!(feature(&fv, 5), 2.0); // numeric count
        assert_eq!(feature(&fv, 7), 2.0); // mean of {1.5, 2.5}
        assert_eq!(feature(&fv, 12), 4.0); // sum
        assert!(fv.as_slice().iter().all(|x| x.is_finite()));
    }

    #[test]
    fn overflowing_numeric_stats_coerce_to_zero() {
        // "1e215" is a finite f64, but its squared deviation is not;
        // the variance overflows while min/max/median/sum stay finite.
        let fv = profile_column(&ColumnValues::from_strs(&[
            "1e215", "940031", "19960127", "1e215",
        ]));
        assert_eq!(feature(&fv, 5), 4.0); // all four parse finite
        assert_eq!(feature(&fv, 8), 0.0); // std overflowed → coerced
        assert_eq!(feature(&fv, 9), 940031.0); // min untouched
        assert_eq!(feature(&fv, 10), 1e215); // max untouched
        assert_eq!(feature(&fv, 12), 2e215); // sum still finite
        assert!(fv.as_slice().iter().all(|x| x.is_finite()));
    }

    #[test]
    fn standardizer_never_emits_non_finite() {
        // Spread overflows fit: std = +inf, every value standardizes to 0.
        let rows: Vec<&[f64]> = vec![&[1e308], &[-1e308], &[0.0]];
        let s = Standardizer::fit(&rows).unwrap();
        assert_eq!(s.apply(&[1e308]).unwrap(), vec![0.0]);
        // NaN corner via persisted parameters.
        let s = Standardizer::from_parts(vec![f64::INFINITY], vec![1.0]).unwrap();
        assert_eq!(s.apply(&[5.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn permutation_invariance_bit_exact() {
        let a = profile_column(&ColumnValues::from_strs(&["abc", "1.25", "", "zz zz", "abc"]));
        let b = profile_column(&ColumnValues::from_strs(&["zz zz", "abc", "abc", "", "1.25"]));
        assert_eq!(a, b);
    }

    #[test]
    fn profile_silo_counts_and_warnings() {
        let mut silo = Silo::new("s");
        for t in ["t1", "t2"] {
            let mut table = crate::silo::TableData::new(t);
            for c in ["a", "b", "c"] {
                table
                    .columns
                    .push((c.into(), ColumnValues::from_strs(&["v"])));
            }
            silo.tables.push(table);
        }
        silo.tables.push(crate::silo::TableData::new("empty"));
        let out = profile_silo(&silo);
        assert_eq!(out.profiles.len(), 6);
        assert_eq!(out.warnings.len(), 1);
        assert!(out.warnings[0].contains("empty"));
    }

    #[test]
    fn empty_table_zero_rows_gives_zero_vectors() {
        let mut silo = Silo::new("s");
        let mut table = crate::silo::TableData::new("t");
        table.columns.push(("a".into(), ColumnValues::default()));
        table.columns.push(("b".into(), ColumnValues::default()));
        silo.tables.push(table);
        let out = profile_silo(&silo);
        assert_eq!(out.profiles.len(), 2);
        for fv in out.profiles.values() {
            assert!(fv.as_slice().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn standardizer_two_point_toy() {
        let rows: Vec<&[f64]> = vec![&[2.0], &[4.0]];
        let s = Standardizer::fit(&rows).unwrap();
        assert_eq!(s.means(), &[3.0]);
        assert_eq!(s.stds(), &[1.0]);
        assert_eq!(s.apply(&[2.0]).unwrap(), vec![-1.0]);
    }

    #[test]
    fn standardizer_constant_feature_goes_to_zero() {
        let rows: Vec<&[f64]> = vec![&[5.0, 1.0], &[5.0, 3.0], &[5.0, 5.0]];
        let s = Standardizer::fit(&rows).unwrap();
        for r in &rows {
            assert_eq!(s.apply(r).unwrap()[0], 0.0);
        }
    }

    #[test]
    fn standardizer_empty_fit_errors() {
        assert!(matches!(
            Standardizer::fit(&[]),
            Err(Error::NoProfiles)
        ));
    }

    #[test]
    fn standardized_profiles_have_zero_mean_unit_std() {
        let cols = [
            ColumnValues::from_strs(&["a", "bb", "ccc"]),
            ColumnValues::from_strs(&["1", "2", "3", "4"]),
            ColumnValues::from_strs(&["x y", "z"]),
        ];
        let profiles: Vec<FeatureVector> = cols.iter().map(profile_column).collect();
        let s = Standardizer::fit_profiles(&profiles).unwrap();
        let transformed: Vec<Vec<f64>> = profiles
            .iter()
            .map(|p| s.apply(p.as_slice()).unwrap())
            .collect();
        let n = transformed.len() as f64;
        for j in 0..FEATURE_LEN {
            let mean: f64 = transformed.iter().map(|r| r[j]).sum::<f64>() / n;
            let var: f64 = transformed
                .iter()
                .map(|r| (r[j] - mean) * (r[j] - mean))
                .sum::<f64>()
                / n;
            assert!(mean.abs() < 1e-9, "feature {j} mean {mean}");
            // population std is 1 for varying features, 0 for constant
            assert!(
                (var.sqrt() - 1.0).abs() < 1e-9 || var.sqrt() < 1e-12,
                "feature {j} std {}",
                var.sqrt()
            );
        }
    }
}
