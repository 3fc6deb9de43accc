//! Sobolev grade arithmetic and multiindex combinatorics.
//!
//! Grades are non-negative integers or `+inf` (smooth). Two rules drive all
//! coefficient bookkeeping in the crate:
//!
//! * the product rule `H^u * H^l ⊂ H^S(u,l)` with
//!   `S(u,l) = min{u, l, u + l - ceil(n/2) - 1}`, valid when the last entry is `>= 1`;
//! * the safeness grade `a(i,k) = max{k - s, |i| - s + floor(n/2) + 1}` that a
//!   coefficient at multiindex `i` of an order-`s` operator needs for the
//!   operator to be `k`-safe.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A Sobolev order: a non-negative integer, or infinity for smooth functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regularity {
    Finite(u32),
    Infinite,
}

impl Regularity {
    pub const ZERO: Regularity = Regularity::Finite(0);

    pub fn is_infinite(self) -> bool {
        matches!(self, Regularity::Infinite)
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            Regularity::Finite(v) => Some(v),
            Regularity::Infinite => None,
        }
    }

    /// Build from a signed value; negative orders are outside the grade lattice.
    pub fn from_signed(v: i64) -> Option<Regularity> {
        u32::try_from(v).ok().map(Regularity::Finite)
    }

    /// Grade after `order` derivatives, or `None` when it would go negative.
    pub fn checked_sub(self, order: u32) -> Option<Regularity> {
        match self {
            Regularity::Infinite => Some(Regularity::Infinite),
            Regularity::Finite(v) => v.checked_sub(order).map(Regularity::Finite),
        }
    }

    /// `true` iff `self >= threshold`; infinity passes every threshold.
    pub fn meets(self, threshold: Regularity) -> bool {
        self >= threshold
    }
}

impl PartialOrd for Regularity {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Regularity {
    fn cmp(&self, other: &Self) -> Ordering {
        use Regularity::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.cmp(b),
            (Finite(_), Infinite) => Ordering::Less,
            (Infinite, Finite(_)) => Ordering::Greater,
            (Infinite, Infinite) => Ordering::Equal,
        }
    }
}

impl fmt::Display for Regularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regularity::Finite(v) => write!(f, "{v}"),
            Regularity::Infinite => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for Regularity {
    type Err = String;

    /// A non-negative integer or `inf`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "inf" | "infinity" => Ok(Regularity::Infinite),
            t => t
                .parse::<u32>()
                .map(Regularity::Finite)
                .map_err(|_| format!("expected a non-negative integer or `inf`, got `{s}`")),
        }
    }
}

impl From<u32> for Regularity {
    fn from(v: u32) -> Self {
        Regularity::Finite(v)
    }
}

impl Serialize for Regularity {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Regularity::Finite(v) => serializer.serialize_u32(*v),
            Regularity::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Regularity {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u32),
            Str(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(v) => Ok(Regularity::Finite(v)),
            Raw::Str(s) if s == "inf" => Ok(Regularity::Infinite),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "invalid regularity {s:?}, expected a non-negative integer or \"inf\""
            ))),
        }
    }
}

pub fn ceil_half(n: usize) -> i64 {
    n.div_ceil(2) as i64
}

pub fn floor_half(n: usize) -> i64 {
    (n / 2) as i64
}

/// Grade of a product of an `H^u` and an `H^l` function on an `n`-dimensional
/// manifold, or `None` when the product rule draws no conclusion.
pub fn product_grade(u: Regularity, l: Regularity, n: usize) -> Option<Regularity> {
    match (u, l) {
        (Regularity::Infinite, Regularity::Infinite) => Some(Regularity::Infinite),
        (Regularity::Infinite, other) | (other, Regularity::Infinite) => Some(other),
        (Regularity::Finite(u), Regularity::Finite(l)) => {
            let (u, l) = (u as i64, l as i64);
            let mixed = u + l - ceil_half(n) - 1;
            if mixed < 1 {
                return None;
            }
            Regularity::from_signed(u.min(l).min(mixed))
        }
    }
}

/// Grade `a(i,k)` a coefficient at `index` of an order-`s` operator must have
/// for the operator to be `k`-safe.
pub fn safe_grade(index: &MultiIndex, k: Regularity, s: u32, n: usize) -> Result<Regularity> {
    let order = index.order();
    let in_domain = order <= s && k.meets(Regularity::Finite(s));
    if !in_domain {
        return Err(Error::SafeGradeDomain { order, s, k });
    }
    match k {
        Regularity::Infinite => Ok(Regularity::Infinite),
        Regularity::Finite(k) => {
            let from_k = k as i64 - s as i64;
            let from_order = order as i64 - s as i64 + floor_half(n) + 1;
            // both candidates are bounded below by k - s >= 0
            Ok(Regularity::from_signed(from_k.max(from_order)).expect("k >= s"))
        }
    }
}

/// Sobolev embedding threshold: `H^r ⊂ C^0` iff `2r > n`.
pub fn embeds_in_continuous(r: Regularity, n: usize) -> bool {
    match r {
        Regularity::Infinite => true,
        Regularity::Finite(v) => 2 * v as usize > n,
    }
}

/// Tuple of per-variable derivative orders.
///
/// Ordered graded-lexicographically: first by total order, then by the
/// entries read left to right with larger leading entries first, so that
/// `∂_1` precedes `∂_2` and `∂_1²` precedes `∂_1∂_2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// Unit index `e_axis` in `n` variables.
    pub fn unit(n: usize, axis: usize) -> Self {
        let mut entries = vec![0; n];
        entries[axis] = 1;
        MultiIndex(entries)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Componentwise `self <= other`.
    pub fn is_below(&self, other: &MultiIndex) -> bool {
        self.dim() == other.dim() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim(), other.dim());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self - j`, defined when `j <= self` componentwise.
    pub fn sub(&self, j: &MultiIndex) -> Result<MultiIndex> {
        self.check_below(j)?;
        Ok(MultiIndex(
            self.0.iter().zip(&j.0).map(|(a, b)| a - b).collect(),
        ))
    }

    /// Product of componentwise binomial coefficients `Π C(self_c, j_c)`.
    pub fn binom(&self, j: &MultiIndex) -> Result<u64> {
        self.check_below(j)?;
        Ok(self
            .0
            .iter()
            .zip(&j.0)
            .map(|(&l, &j)| binomial(l, j))
            .product())
    }

    fn check_below(&self, j: &MultiIndex) -> Result<()> {
        if j.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                index: j.clone(),
                expected: self.dim(),
                got: j.dim(),
            });
        }
        if !j.is_below(self) {
            return Err(Error::NotBelow {
                sub: j.clone(),
                from: self.clone(),
            });
        }
        Ok(())
    }

    /// All multiindices in `n` variables with order `<= s`, in graded order.
    /// There are `C(n + s, s)` of them.
    pub fn enumerate(n: usize, s: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for order in 0..=s {
            let mut current = vec![0; n];
            fill_order(&mut current, 0, order, &mut out);
        }
        out
    }

    /// All `j <= self` componentwise, in graded order.
    pub fn below(&self) -> Vec<MultiIndex> {
        MultiIndex::enumerate(self.dim(), self.order())
            .into_iter()
            .filter(|j| j.is_below(self))
            .collect()
    }
}

fn fill_order(current: &mut Vec<u32>, pos: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    let n = current.len();
    if n == 0 {
        if remaining == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return;
    }
    if pos == n - 1 {
        current[pos] = remaining;
        out.push(MultiIndex(current.clone()));
        return;
    }
    for v in (0..=remaining).rev() {
        current[pos] = v;
        fill_order(current, pos + 1, remaining - v, out);
    }
    current[pos] = 0;
}

pub fn binomial(n: u32, k: u32) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k) as u64;
    let n = n as u64;
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (c, e) in self.0.iter().enumerate() {
            if c > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Regularity::{Finite, Infinite};

    fn mi(e: &[u32]) -> MultiIndex {
        MultiIndex::new(e.to_vec())
    }

    #[test]
    fn product_grade_examples() {
        assert_eq!(product_grade(Finite(2), Finite(2), 1), Some(Finite(2)));
        assert_eq!(product_grade(Finite(3), Finite(2), 2), Some(Finite(2)));
        assert_eq!(product_grade(Finite(1), Finite(1), 2), None);
        assert_eq!(product_grade(Infinite, Finite(5), 3), Some(Finite(5)));
        assert_eq!(product_grade(Infinite, Infinite, 3), Some(Infinite));
    }

    #[test]
    fn safe_grade_examples() {
        let i2 = mi(&[2]);
        assert_eq!(safe_grade(&i2, Finite(3), 2, 1).unwrap(), Finite(1));
        let i0 = mi(&[0, 0]);
        assert_eq!(safe_grade(&i0, Finite(4), 2, 2).unwrap(), Finite(2));
        assert!(safe_grade(&mi(&[3]), Finite(3), 2, 1).is_err());
        assert!(safe_grade(&mi(&[1]), Finite(1), 2, 1).is_err());
        assert_eq!(safe_grade(&mi(&[1]), Infinite, 1, 1).unwrap(), Infinite);
    }

    #[test]
    fn leading_safe_grade_is_continuous() {
        for n in 1..=4 {
            for s in 0..=4u32 {
                for k in s..=8 {
                    for i in MultiIndex::enumerate(n, s).iter().filter(|i| i.order() == s) {
                        let g = safe_grade(i, Finite(k), s, n).unwrap();
                        assert!(embeds_in_continuous(g, n), "n={n} s={s} k={k}");
                    }
                }
            }
        }
    }

    #[test]
    fn multiindex_tools() {
        assert_eq!(
            MultiIndex::enumerate(1, 2),
            vec![mi(&[0]), mi(&[1]), mi(&[2])]
        );
        assert_eq!(mi(&[2, 1]).binom(&mi(&[1, 0])).unwrap(), 2);
        assert_eq!(mi(&[2, 1]).sub(&mi(&[1, 1])).unwrap(), mi(&[1, 0]));
        assert!(mi(&[2, 1]).sub(&mi(&[0, 2])).is_err());
        assert!(mi(&[2, 1]).binom(&mi(&[3, 0])).is_err());
        assert_eq!(
            MultiIndex::enumerate(2, 1),
            vec![mi(&[0, 0]), mi(&[1, 0]), mi(&[0, 1])]
        );
    }

    #[test]
    fn enumerate_counts_and_sorted() {
        for n in 1..=3 {
            for s in 0..=5u32 {
                let all = MultiIndex::enumerate(n, s);
                assert_eq!(all.len() as u64, binomial(n as u32 + s, s));
                assert!(all.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn embedding_threshold() {
        assert!(embeds_in_continuous(Finite(1), 1));
        assert!(!embeds_in_continuous(Finite(1), 2));
        assert!(embeds_in_continuous(Infinite, 7));
    }

    #[test]
    fn binom_vandermonde() {
        // C(a + b, J) = Σ_{j <= J} C(a, j) C(b, J - j), componentwise
        for n in 1..=2 {
            for a in MultiIndex::enumerate(n, 4) {
                for b in MultiIndex::enumerate(n, 4) {
                    let sum = a.add(&b);
                    for big in sum.below() {
                        let lhs = sum.binom(&big).unwrap();
                        let rhs: u64 = big
                            .below()
                            .iter()
                            .filter(|j| j.is_below(&a))
                            .filter_map(|j| {
                                let rest = big.sub(j).ok()?;
                                rest.is_below(&b).then(|| a.binom(j).unwrap() * b.binom(&rest).unwrap())
                            })
                            .sum();
                        assert_eq!(lhs, rhs, "a={a} b={b} J={big}");
                    }
                }
            }
        }
    }

    fn grade() -> impl Strategy<Value = Regularity> {
        prop_oneof![9 => (0u32..12).prop_map(Finite), 1 => Just(Infinite)]
    }

    proptest! {
        #[test]
        fn product_grade_symmetric_and_bounded(u in grade(), l in grade(), n in 1usize..5) {
            let a = product_grade(u, l, n);
            prop_assert_eq!(a, product_grade(l, u, n));
            if let Some(g) = a {
                prop_assert!(g <= u.min(l));
            }
        }

        #[test]
        fn product_grade_monotone(u in 0u32..10, l in 0u32..10, n in 1usize..5) {
            if let Some(g) = product_grade(Finite(u), Finite(l), n) {
                let up = product_grade(Finite(u + 1), Finite(l), n).unwrap();
                prop_assert!(up >= g);
            }
        }

        #[test]
        fn safe_grade_monotone(n in 1usize..4, s in 0u32..5, extra in 0u32..5, order in 0u32..5) {
            prop_assume!(order <= s);
            let k = s + extra;
            let i = MultiIndex::enumerate(n, s).into_iter().find(|i| i.order() == order).unwrap();
            let g = safe_grade(&i, Finite(k), s, n).unwrap();
            prop_assert!(safe_grade(&i, Finite(k + 1), s, n).unwrap() >= g);
            if order < s {
                let j = MultiIndex::enumerate(n, s).into_iter().find(|j| j.order() == order + 1).unwrap();
                prop_assert!(safe_grade(&j, Finite(k), s, n).unwrap() >= g);
            }
        }
    }
}
