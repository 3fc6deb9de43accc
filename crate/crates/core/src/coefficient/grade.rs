use serde::Serialize;

use crate::sobolev::{product_grade, Regularity};

/// The rule that produced a grade, with enough data to re-run it.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum GradeRule {
    /// Minimum over the grades of the summands.
    TermwiseMinimum { grades: Vec<Regularity> },
    /// Product rule `S(u, l)` in dimension `n`.
    Product {
        left: Regularity,
        right: Regularity,
        n: usize,
    },
    /// Derivative of order `order` applied to a function of grade `from`.
    Derivative { from: Regularity, order: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradeCertificate {
    pub grade: Regularity,
    pub reason: GradeRule,
}

impl GradeCertificate {
    pub fn termwise(grades: Vec<Regularity>) -> Self {
        let grade = grades.iter().copied().min().unwrap_or(Regularity::Infinite);
        GradeCertificate {
            grade,
            reason: GradeRule::TermwiseMinimum { grades },
        }
    }

    /// `None` when the product grade is undefined.
    pub fn product(left: Regularity, right: Regularity, n: usize) -> Option<Self> {
        Some(GradeCertificate {
            grade: product_grade(left, right, n)?,
            reason: GradeRule::Product { left, right, n },
        })
    }

    pub fn derivative(from: Regularity, order: u32) -> Option<Self> {
        Some(GradeCertificate {
            grade: from.checked_sub(order)?,
            reason: GradeRule::Derivative { from, order },
        })
    }

    /// Re-runs the cited rule.
    pub fn replay(&self) -> Option<Regularity> {
        match &self.reason {
            GradeRule::TermwiseMinimum { grades } => {
                Some(grades.iter().copied().min().unwrap_or(Regularity::Infinite))
            }
            GradeRule::Product { left, right, n } => product_grade(*left, *right, *n),
            GradeRule::Derivative { from, order } => from.checked_sub(*order),
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.replay() == Some(self.grade)
    }
}
