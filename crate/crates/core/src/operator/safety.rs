use serde::Serialize;

use super::DiffOp;
use crate::sobolev::{floor_half, safe_grade, MultiIndex, Regularity};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SafenessRow {
    pub index: MultiIndex,
    /// `a(i, k)`; absent when `k < s`.
    pub required: Option<Regularity>,
    pub actual: Regularity,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SafenessReport {
    pub k: Regularity,
    pub n: usize,
    pub order: u32,
    pub rows: Vec<SafenessRow>,
    pub overall: bool,
    /// Least `k' <= k` for which the operator is `k'`-safe.
    pub minimal_safe_k: Option<Regularity>,
    /// Largest `k'` for which the operator is `k'`-safe.
    pub max_safe_k: Option<Regularity>,
}

impl DiffOp {
    /// Checks `k`-safeness row by row; absent coefficients are the zero
    /// function and pass every threshold.
    pub fn is_safe(&self, k: Regularity) -> SafenessReport {
        let s = self.order();
        let rows: Vec<SafenessRow> = MultiIndex::enumerate(self.dim(), s)
            .into_iter()
            .map(|index| {
                let actual = self
                    .coefficient(&index)
                    .map(|c| c.exact_grade().expect("validated on construction"))
                    .unwrap_or(Regularity::Infinite);
                let required = safe_grade(&index, k, s, self.dim()).ok();
                let pass = required.is_some_and(|r| actual.meets(r));
                SafenessRow {
                    index,
                    required,
                    actual,
                    pass,
                }
            })
            .collect();
        let overall = rows.iter().all(|r| r.pass);
        let max_safe_k = self.max_safe_k(&rows);
        let minimal_safe_k = max_safe_k
            .filter(|_| k.meets(Regularity::Finite(s)))
            .map(|_| Regularity::Finite(s));
        SafenessReport {
            k,
            n: self.dim(),
            order: s,
            rows,
            overall,
            minimal_safe_k,
            max_safe_k,
        }
    }

    /// A row passes at `k` iff `actual >= k - s` and `actual >= |i| - s + ⌊n/2⌋ + 1`;
    /// only the first condition depends on `k`.
    fn max_safe_k(&self, rows: &[SafenessRow]) -> Option<Regularity> {
        let s = self.order() as i64;
        let fixed_ok = rows.iter().all(|r| {
            let need = r.index.order() as i64 - s + floor_half(self.dim()) + 1;
            match r.actual {
                Regularity::Infinite => true,
                Regularity::Finite(a) => a as i64 >= need,
            }
        });
        if !fixed_ok {
            return None;
        }
        Some(match rows.iter().map(|r| r.actual).min() {
            Some(Regularity::Finite(a)) => Regularity::Finite(a + self.order()),
            _ => Regularity::Infinite,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::{Coefficient, Scalar};

    fn pl(beta: f64) -> Coefficient {
        Coefficient::scalar(1, Scalar::power_law(1, beta, 64, 3, 1.0)).unwrap()
    }

    #[test]
    fn laplacian_plus_rough_potential() {
        let op = DiffOp::new(
            1,
            1,
            vec![
                (MultiIndex::new(vec![2]), Coefficient::constant(1, 1.0)),
                (MultiIndex::new(vec![0]), pl(2.0)),
            ],
        )
        .unwrap();
        let r = op.is_safe(Regularity::Finite(3));
        assert!(r.overall);
        let zero = r.rows.iter().find(|r| r.index.is_zero()).unwrap();
        assert_eq!(zero.required, Some(Regularity::Finite(1)));
        assert_eq!(zero.actual, Regularity::Finite(1));
        let top = r.rows.iter().find(|r| r.index.order() == 2).unwrap();
        assert_eq!(top.required, Some(Regularity::Finite(1)));
        assert_eq!(r.minimal_safe_k, Some(Regularity::Finite(2)));
        assert_eq!(r.max_safe_k, Some(Regularity::Finite(3)));
        assert!(!op.is_safe(Regularity::Finite(4)).overall);
    }

    #[test]
    fn grade_zero_first_order_fails() {
        let op = DiffOp::new(1, 1, vec![(MultiIndex::new(vec![1]), pl(0.8))]).unwrap();
        let r = op.is_safe(Regularity::Finite(1));
        assert!(!r.overall);
        assert_eq!(r.rows[1].required, Some(Regularity::Finite(1)));
        assert_eq!(r.max_safe_k, None);
        assert_eq!(r.minimal_safe_k, None);
    }

    #[test]
    fn smooth_operators_pass_everywhere() {
        let op = DiffOp::new(
            2,
            1,
            vec![
                (MultiIndex::new(vec![2, 0]), Coefficient::constant(2, 1.0)),
                (MultiIndex::new(vec![0, 2]), Coefficient::constant(2, 1.0)),
            ],
        )
        .unwrap();
        for k in 2..10 {
            assert!(op.is_safe(Regularity::Finite(k)).overall);
        }
        assert!(op.is_safe(Regularity::Infinite).overall);
        assert_eq!(op.is_safe(Regularity::Finite(2)).max_safe_k, Some(Regularity::Infinite));
        let low = op.is_safe(Regularity::Finite(1));
        assert!(!low.overall);
        assert!(low.rows.iter().all(|r| r.required.is_none()));
    }

    #[test]
    fn max_safe_k_is_sharp() {
        let op = DiffOp::new(
            1,
            1,
            vec![
                (MultiIndex::new(vec![2]), Coefficient::constant(1, 1.0).add(&pl(3.0)).unwrap()),
                (MultiIndex::new(vec![0]), pl(2.0)),
            ],
        )
        .unwrap();
        let r = op.is_safe(Regularity::Finite(2));
        let top = r.max_safe_k.unwrap().finite().unwrap();
        assert!(op.is_safe(Regularity::Finite(top)).overall);
        assert!(!op.is_safe(Regularity::Finite(top + 1)).overall);
    }
}
