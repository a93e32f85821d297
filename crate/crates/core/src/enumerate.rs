//! Exhaustive enumerators over sign vectors and product-measure supports.

use crate::error::{Error, Result};
use crate::types::{Caps, DiscreteDistribution, SignAssignment};

/// All `2^n` sign vectors in ascending bit-word order.
pub fn enumerate_signs(
    n: usize,
    caps: &Caps,
) -> Result<impl Iterator<Item = SignAssignment>> {
    if n == 0 {
        return Err(Error::invalid("sign vectors need n >= 1"));
    }
    caps.check_signs(n)?;
    let n32 = n as u32;
    Ok((0..1u64 << n).map(move |bits| SignAssignment::new(bits, n32)))
}

/// Index space of `support^n`, with tuple `t` decoded as base-`|support|`
/// digits, last coordinate varying fastest.
#[derive(Debug, Clone, Copy)]
pub struct ProductSpace {
    pub support: usize,
    pub n: usize,
    pub total: u64,
}

impl ProductSpace {
    pub fn new(support: usize, n: usize, caps: &Caps, what: &'static str) -> Result<Self> {
        if n == 0 || support == 0 {
            return Err(Error::invalid("product space needs n >= 1 and nonempty support"));
        }
        let required = (support as f64).powi(n as i32);
        caps.check_tuples(what, required)?;
        Ok(ProductSpace {
            support,
            n,
            total: (support as u64).pow(n as u32),
        })
    }

    #[inline]
    pub fn decode(&self, mut t: u64, out: &mut [usize]) {
        let s = self.support as u64;
        for slot in out.iter_mut().rev() {
            *slot = (t % s) as usize;
            t /= s;
        }
    }

    pub fn tuple(&self, t: u64) -> Vec<usize> {
        let mut out = vec![0; self.n];
        self.decode(t, &mut out);
        out
    }
}

/// Product-measure weight of an index tuple.
#[inline]
pub fn tuple_weight(probs: &[f64], tuple: &[usize]) -> f64 {
    tuple.iter().map(|&j| probs[j]).product()
}

/// Iterator over `(support indices, weight)` for `dist^n`.
pub struct ProductIter<'a> {
    space: ProductSpace,
    probs: &'a [f64],
    next: u64,
}

impl Iterator for ProductIter<'_> {
    type Item = (Vec<usize>, f64);

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.space.total {
            return None;
        }
        let tuple = self.space.tuple(self.next);
        self.next += 1;
        let w = tuple_weight(self.probs, &tuple);
        Some((tuple, w))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.space.total - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for ProductIter<'_> {}

pub fn enumerate_product<'a>(
    dist: &'a DiscreteDistribution,
    n: usize,
    caps: &Caps,
) -> Result<ProductIter<'a>> {
    let space = ProductSpace::new(dist.len(), n, caps, "product-measure tuples")?;
    Ok(ProductIter {
        space,
        probs: dist.probs(),
        next: 0,
    })
}
