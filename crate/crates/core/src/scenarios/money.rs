use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ScenarioError;

/// Fixed-point money in minor units (cents). Serialized as a decimal string
/// so clients never round-trip it through floating point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Money(pub i64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub fn from_cents(c: i64) -> Self {
        Money(c)
    }

    pub fn cents(self) -> i64 {
        self.0
    }

    /// Rounds a decimal amount to the nearest cent, halves away from zero.
    pub fn from_f64(x: f64) -> Result<Self, ScenarioError> {
        let c = (x * 100.0).round();
        if !c.is_finite() || c.abs() > 9.0e15 {
            return Err(ScenarioError::Money(format!("{x} is not a representable amount")));
        }
        Ok(Money(c as i64))
    }

    /// `self × k`, rounded to the cent.
    pub fn scale(self, k: f64) -> Result<Self, ScenarioError> {
        let c = (self.0 as f64 * k).round();
        if !c.is_finite() || c.abs() > 9.0e15 {
            return Err(ScenarioError::Money(format!("{self} × {k} overflows")));
        }
        Ok(Money(c as i64))
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }

    pub fn max(self, other: Money) -> Money {
        Money(self.0.max(other.0))
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let a = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", a / 100, a % 100)
    }
}

impl FromStr for Money {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ScenarioError::Money(format!("bad amount {s:?}"));
        let t = s.trim();
        let (neg, t) = match t.strip_prefix('-') {
            Some(r) => (true, r),
            None => (false, t),
        };
        let (whole, frac) = t.split_once('.').unwrap_or((t, ""));
        if whole.is_empty() || frac.len() > 2 || !whole.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let w: i64 = whole.parse().map_err(|_| bad())?;
        let f: i64 = format!("{frac:0<2}").parse().map_err(|_| bad())?;
        let c = w.checked_mul(100).and_then(|x| x.checked_add(f)).ok_or_else(bad)?;
        Ok(Money(if neg { -c } else { c }))
    }
}

impl Serialize for Money {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Money {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, o: Money) -> Money {
        Money(self.0 + o.0)
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, o: Money) -> Money {
        Money(self.0 - o.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, o: Money) {
        self.0 += o.0;
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::ZERO, Add::add)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineItem {
    pub label: String,
    pub quantity: f64,
    pub unit_cost: Money,
    pub currency: String,
    /// `quantity × unit_cost` rounded to the cent.
    pub amount: Money,
}

impl LineItem {
    pub fn new(
        label: impl Into<String>,
        quantity: f64,
        unit_cost: Money,
        currency: impl Into<String>,
    ) -> Result<Self, ScenarioError> {
        if !(quantity >= 0.0) || !quantity.is_finite() {
            return Err(ScenarioError::Money(format!(
                "quantity {quantity} must be a finite non-negative number"
            )));
        }
        Ok(LineItem {
            label: label.into(),
            quantity,
            unit_cost,
            currency: currency.into(),
            amount: unit_cost.scale(quantity)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpenseSheet {
    pub currency: String,
    pub items: Vec<LineItem>,
    pub total: Money,
}

impl ExpenseSheet {
    pub fn empty(currency: impl Into<String>) -> Self {
        ExpenseSheet {
            currency: currency.into(),
            items: Vec::new(),
            total: Money::ZERO,
        }
    }

    /// All items must share one currency; an empty sheet takes `currency`.
    pub fn from_items(items: Vec<LineItem>, currency: &str) -> Result<Self, ScenarioError> {
        let cur = items
            .first()
            .map(|i| i.currency.clone())
            .unwrap_or_else(|| currency.to_string());
        if let Some(other) = items.iter().find(|i| i.currency != cur) {
            return Err(ScenarioError::MixedCurrency(cur, other.currency.clone()));
        }
        let total = items.iter().map(|i| i.amount).sum();
        Ok(ExpenseSheet {
            currency: cur,
            items,
            total,
        })
    }
}

/// One aggregate line per sheet; the total is the exact sum of sheet totals.
pub fn sum_expense_sheets<'a>(
    sheets: impl IntoIterator<Item = (&'a str, &'a ExpenseSheet)>,
    currency: &str,
) -> Result<ExpenseSheet, ScenarioError> {
    let items = sheets
        .into_iter()
        .map(|(label, s)| LineItem {
            label: label.to_string(),
            quantity: 1.0,
            unit_cost: s.total,
            currency: s.currency.clone(),
            amount: s.total,
        })
        .collect();
    ExpenseSheet::from_items(items, currency)
}
