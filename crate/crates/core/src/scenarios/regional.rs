//! Regional events: exchange-rate forecast and unit-cost recomputation to
//! find goods that stop being profitable.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::prediction::{fit_dynamical, simulate_dynamical, ExogenousScenario, FitDiagnostics};

use super::ScenarioError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostKind {
    Components,
    Materials,
    Labour,
    Energy,
    Logistics,
    Tax,
}

impl CostKind {
    pub fn parse(s: &str) -> Option<CostKind> {
        Some(match s {
            "components" => CostKind::Components,
            "materials" => CostKind::Materials,
            "labour" | "labor" => CostKind::Labour,
            "energy" => CostKind::Energy,
            "logistics" => CostKind::Logistics,
            "tax" => CostKind::Tax,
            _ => return None,
        })
    }
}

/// Per-unit cost of one product component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostItem {
    pub product: String,
    pub kind: CostKind,
    pub amount: f64,
    /// Paid in foreign currency or subject to customs.
    pub imported: bool,
}

/// Multiplies matching cost items by `factor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostAdjustment {
    pub label: String,
    pub kind: Option<CostKind>,
    pub imported_only: bool,
    pub factor: f64,
}

impl CostAdjustment {
    fn applies(&self, item: &CostItem) -> bool {
        self.kind.is_none_or(|k| k == item.kind) && (!self.imported_only || item.imported)
    }

    /// Imported items scale with the rate.
    pub fn exchange_rate(base: f64, new: f64) -> Self {
        CostAdjustment {
            label: format!("exchange rate {base} → {new}"),
            kind: None,
            imported_only: true,
            factor: new / base,
        }
    }

    /// Imported items carry customs at `old` and move to `new` (fractions).
    pub fn customs(old: f64, new: f64) -> Self {
        CostAdjustment {
            label: format!("customs rate {old} → {new}"),
            kind: None,
            imported_only: true,
            factor: (1.0 + new) / (1.0 + old),
        }
    }

    /// Tax items scale with the statutory rate.
    pub fn tax(old: f64, new: f64) -> Self {
        CostAdjustment {
            label: format!("tax rate {old} → {new}"),
            kind: Some(CostKind::Tax),
            imported_only: false,
            factor: new / old,
        }
    }

    /// Energy items scale with the energy price.
    pub fn energy(old: f64, new: f64) -> Self {
        CostAdjustment {
            label: format!("energy price {old} → {new}"),
            kind: Some(CostKind::Energy),
            imported_only: false,
            factor: new / old,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductCost {
    pub product: String,
    pub price: f64,
    pub base_cost: f64,
    pub new_cost: f64,
    /// `new_cost ≥ price`.
    pub unprofitable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReview {
    pub adjustments: Vec<CostAdjustment>,
    pub products: Vec<ProductCost>,
    pub unprofitable: Vec<String>,
    pub warnings: Vec<String>,
}

/// Recomputes unit costs under the adjustments for every priced product.
/// Products without a cost structure are skipped with a warning.
pub fn recompute_costs(
    items: &[CostItem],
    prices: &BTreeMap<String, f64>,
    adjustments: &[CostAdjustment],
) -> CostReview {
    let mut products = Vec::new();
    let mut warnings = Vec::new();
    for (p, &price) in prices {
        let mine: Vec<&CostItem> = items.iter().filter(|i| &i.product == p).collect();
        if mine.is_empty() {
            warnings.push(format!("{p}: no cost structure, skipped"));
            continue;
        }
        let base: f64 = mine.iter().map(|i| i.amount).sum();
        let new: f64 = mine
            .iter()
            .map(|i| {
                adjustments
                    .iter()
                    .filter(|a| a.applies(i))
                    .fold(i.amount, |x, a| x * a.factor)
            })
            .sum();
        products.push(ProductCost {
            product: p.clone(),
            price,
            base_cost: base,
            new_cost: new,
            unprofitable: new >= price,
        });
    }
    let unprofitable = products
        .iter()
        .filter(|p| p.unprofitable)
        .map(|p| p.product.clone())
        .collect();
    CostReview {
        adjustments: adjustments.to_vec(),
        products,
        unprofitable,
        warnings,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateForecast {
    pub order: usize,
    pub coefficients: Vec<f64>,
    pub fit: FitDiagnostics,
    pub last_observed: f64,
    pub forecast: Vec<f64>,
    /// Rate at the end of the horizon.
    pub rate: f64,
}

/// Fits an autoregressive model of the given order to the rate history and
/// runs it `horizon` steps ahead.
pub fn forecast_rate(history: &[f64], order: usize, horizon: usize) -> Result<RateForecast, ScenarioError> {
    let (model, fit) = fit_dynamical(history, &[], order, false)?;
    let forecast = simulate_dynamical(&model, history, &ExogenousScenario::HoldLast(vec![]), horizon.max(1))?;
    let last = *history
        .last()
        .ok_or_else(|| ScenarioError::Data("empty exchange-rate series".into()))?;
    Ok(RateForecast {
        order,
        coefficients: model.ar.clone(),
        fit,
        last_observed: last,
        rate: *forecast.last().unwrap_or(&last),
        forecast,
    })
}
