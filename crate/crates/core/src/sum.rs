//! Order-fixed floating point reduction.
//!
//! [`PairwiseSum`] accumulates a stream with a binary-counter merge tree whose
//! shape depends only on each value's position in the stream. Feeding the
//! same ordered values, whether from one buffer or from many chunks visited in
//! index order, always produces the same bits.

/// Streaming pairwise (tree) accumulator.
///
/// Internally keeps one partial sum per completed power-of-two block, so
/// memory is `O(log len)` and rounding error grows like `O(log len)`.
#[derive(Debug, Clone, Default)]
pub struct PairwiseSum {
    // (block size exponent, partial sum); exponents strictly decrease
    stack: Vec<(u32, f64)>,
}

impl PairwiseSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, value: f64) {
        let mut level = 0u32;
        let mut acc = value;
        while let Some(&(top_level, top)) = self.stack.last() {
            if top_level != level {
                break;
            }
            self.stack.pop();
            acc += top;
            level += 1;
        }
        self.stack.push((level, acc));
    }

    pub fn extend<I: IntoIterator<Item = f64>>(&mut self, values: I) {
        for v in values {
            self.push(v);
        }
    }

    /// Folds the pending blocks from the smallest to the largest.
    pub fn total(&self) -> f64 {
        self.stack
            .iter()
            .rev()
            .fold(None, |acc: Option<f64>, &(_, v)| Some(acc.map_or(v, |a| v + a)))
            .unwrap_or(0.0)
    }
}

/// Fixed-order pairwise sum of `values`. The empty sum is `0.0`.
pub fn deterministic_sum(values: &[f64]) -> f64 {
    let mut acc = PairwiseSum::new();
    acc.extend(values.iter().copied());
    acc.total()
}

/// Reduces chunks in index order as if they were one concatenated sequence.
pub fn deterministic_sum_chunks<C: AsRef<[f64]>>(chunks: &[C]) -> f64 {
    let mut acc = PairwiseSum::new();
    for c in chunks {
        acc.extend(c.as_ref().iter().copied());
    }
    acc.total()
}

/// Mean and standard error (sample sd / sqrt(len)) with deterministic reductions.
pub(crate) fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let len = values.len();
    if len == 0 {
        return (0.0, 0.0);
    }
    let mean = deterministic_sum(values) / len as f64;
    if len < 2 {
        return (mean, 0.0);
    }
    let mut sq = PairwiseSum::new();
    sq.extend(values.iter().map(|v| (v - mean) * (v - mean)));
    let var = sq.total() / (len as f64 - 1.0);
    (mean, (var / len as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    // Exact sum of finite doubles: integer mantissas over the smallest exponent present.
    fn exact_sum(values: &[f64]) -> f64 {
        let parts: Vec<(i64, u64, i64)> = values
            .iter()
            .filter(|v| **v != 0.0)
            .map(|&v| {
                let bits = v.to_bits();
                let sign = if bits >> 63 == 1 { -1 } else { 1 };
                let exp = ((bits >> 52) & 0x7ff) as i64;
                let frac = bits & ((1u64 << 52) - 1);
                if exp == 0 {
                    (sign, frac, -1074)
                } else {
                    (sign, frac | (1u64 << 52), exp - 1075)
                }
            })
            .collect();
        let Some(min_e) = parts.iter().map(|p| p.2).min() else {
            return 0.0;
        };
        let mut total = BigInt::from(0);
        for (sign, mant, e) in parts {
            total += (BigInt::from(mant) << ((e - min_e) as usize)) * sign;
        }
        // decimal parse rounds correctly; the power-of-two rescale is exact
        let scaled: f64 = total.to_string().parse().unwrap();
        scaled * 2f64.powi(min_e as i32)
    }

    #[test]
    fn small_sums() {
        assert_eq!(deterministic_sum(&[1.0, 2.0, 3.0]), 6.0);
        assert_eq!(deterministic_sum(&[]), 0.0);
        assert_eq!(deterministic_sum(&[-2.5]), -2.5);
    }

    #[test]
    fn million_tenths_against_exact_accumulation() {
        let values = vec![0.1; 1_000_000];
        let oracle = exact_sum(&values);
        let got = deterministic_sum(&values);
        assert!(((got - oracle) / oracle).abs() < 1e-9, "{got} vs {oracle}");
        // naive left fold drifts much further
        let naive: f64 = values.iter().sum();
        assert!((got - oracle).abs() <= (naive - oracle).abs());
    }

    #[test]
    fn exact_oracle_sanity() {
        assert_eq!(exact_sum(&[0.5, 0.25, -1.0]), -0.25);
    }

    proptest! {
        #[test]
        fn chunking_does_not_change_bits(
            values in prop::collection::vec(-1e6f64..1e6, 0..300),
            cuts in prop::collection::vec(0usize..300, 0..8),
        ) {
            let mut cuts: Vec<usize> = cuts.into_iter().map(|c| c.min(values.len())).collect();
            cuts.sort_unstable();
            let mut chunks = Vec::new();
            let mut start = 0;
            for c in cuts {
                chunks.push(values[start..c].to_vec());
                start = c;
            }
            chunks.push(values[start..].to_vec());
            let whole = deterministic_sum(&values);
            prop_assert_eq!(whole.to_bits(), deterministic_sum_chunks(&chunks).to_bits());
        }
    }
}
