//! Market events: consumer value and sales influence of competing goods, a
//! new segment's attractiveness, a partner's financial state.

use serde::{Deserialize, Serialize};

use super::production::{ProductionPlan, RevisedLine};

/// Whether a competitor's consumer value calls for new technology.
pub fn new_technology_needed(competitor: f64, own: f64, factor: f64) -> bool {
    competitor > factor * own
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentCriterion {
    pub name: String,
    pub weight: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentScore {
    pub criteria: Vec<SegmentCriterion>,
    /// Weighted mean of the criterion scores.
    pub score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

pub fn segment_score(criteria: Vec<SegmentCriterion>) -> SegmentScore {
    let w: f64 = criteria.iter().map(|c| c.weight).sum();
    if w <= 0.0 {
        return SegmentScore {
            criteria,
            score: 0.0,
            warning: Some("segment criteria have zero total weight; score is 0".into()),
        };
    }
    let s = criteria.iter().map(|c| c.weight * c.score).sum::<f64>() / w;
    SegmentScore {
        criteria,
        score: s,
        warning: None,
    }
}

/// How market results feed the production and sales plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanChange {
    /// Scale every period by this factor.
    Ratio(f64),
    /// Add this volume, spread evenly over all plan lines.
    Extra(f64),
}

pub fn apply_plan_change(plan: &ProductionPlan, change: PlanChange) -> Vec<RevisedLine> {
    let n = plan.lines.len().max(1) as f64;
    plan.lines
        .iter()
        .map(|l| RevisedLine {
            product: l.product.clone(),
            period: l.period,
            original: l.volume,
            revised: match change {
                PlanChange::Ratio(r) => (l.volume * r).max(0.0),
                PlanChange::Extra(v) => (l.volume + v / n).max(0.0),
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::production::PlanLine;

    #[test]
    fn technology_factor() {
        assert!(new_technology_needed(6.0, 4.0, 1.2));
        assert!(!new_technology_needed(4.5, 4.0, 1.2));
    }

    #[test]
    fn zero_weights_warn() {
        let s = segment_score(vec![SegmentCriterion {
            name: "size".into(),
            weight: 0.0,
            score: 5.0,
        }]);
        assert_eq!(s.score, 0.0);
        assert!(s.warning.is_some());
        let s = segment_score(vec![
            SegmentCriterion {
                name: "a".into(),
                weight: 1.0,
                score: 2.0,
            },
            SegmentCriterion {
                name: "b".into(),
                weight: 3.0,
                score: 6.0,
            },
        ]);
        assert_eq!(s.score, 5.0);
    }

    #[test]
    fn plan_changes() {
        let plan = ProductionPlan {
            period_days: 30.0,
            lines: vec![
                PlanLine {
                    product: "p".into(),
                    period: 1,
                    volume: 100.0,
                },
                PlanLine {
                    product: "p".into(),
                    period: 2,
                    volume: 100.0,
                },
            ],
        };
        let r: Vec<f64> = apply_plan_change(&plan, PlanChange::Ratio(0.9))
            .iter()
            .map(|l| l.revised)
            .collect();
        assert_eq!(r, [90.0, 90.0]);
        let r: Vec<f64> = apply_plan_change(&plan, PlanChange::Extra(40.0))
            .iter()
            .map(|l| l.revised)
            .collect();
        assert_eq!(r, [120.0, 120.0]);
    }
}
