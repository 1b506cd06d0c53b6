//! Operations behind the production-emergency goals: threat estimate,
//! restoration plan with expense sheets, cause versions, consequences, plan
//! correction and reliability propositions.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::decision::{self, BayesInput, EventTree};
use crate::inference::{standard_registry, BuiltinRegistry, Mode, SolveLimits, Solver, TraceNode};
use crate::kb::{Atom, FactStore, KnowledgeBase, Term};

use super::event::{kb_symbol, CriticalEvent};
use super::money::{sum_expense_sheets, ExpenseSheet, LineItem, Money};
use super::{Proposition, PropositionKind, ScenarioError};

// threat

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreatThresholds {
    /// Probabilities from here up are at least elevated.
    pub elevated: f64,
    /// Probabilities from here up are high.
    pub high: f64,
}

impl Default for ThreatThresholds {
    fn default() -> Self {
        ThreatThresholds {
            elevated: 0.05,
            high: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThreatLevel {
    Low,
    Elevated,
    High,
}

impl ThreatLevel {
    pub fn name(self) -> &'static str {
        match self {
            ThreatLevel::Low => "low",
            ThreatLevel::Elevated => "elevated",
            ThreatLevel::High => "high",
        }
    }
}

impl ThreatThresholds {
    pub fn level(&self, p: f64) -> ThreatLevel {
        if p >= self.high {
            ThreatLevel::High
        } else if p >= self.elevated {
            ThreatLevel::Elevated
        } else {
            ThreatLevel::Low
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ThreatModel {
    EventTree {
        tree: EventTree,
        class: String,
    },
    /// Posterior of hypothesis `hypothesis` (0-based).
    Bayes {
        input: BayesInput,
        hypothesis: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreatAssessment {
    pub method: String,
    pub probability: f64,
    pub level: ThreatLevel,
}

pub fn assess_threat(model: &ThreatModel, thresholds: &ThreatThresholds) -> Result<ThreatAssessment, ScenarioError> {
    let (method, p) = match model {
        ThreatModel::EventTree { tree, class } => ("event-tree", decision::event_tree_probability(tree, class)?),
        ThreatModel::Bayes { input, hypothesis } => {
            let post = decision::bayes_posterior(input)?;
            let p = *post
                .get(*hypothesis)
                .ok_or_else(|| ScenarioError::Data(format!("no hypothesis {}", hypothesis + 1)))?;
            ("bayes", p)
        }
    };
    Ok(ThreatAssessment {
        method: method.into(),
        probability: p,
        level: thresholds.level(p),
    })
}

// restoration

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureTemplate {
    pub id: String,
    pub description: String,
    /// Damage tags that call for this measure.
    pub tags: Vec<String>,
    pub prerequisites: Vec<String>,
    pub duration_days: u32,
    pub expenses: Vec<LineItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestorationMeasure {
    pub id: String,
    pub description: String,
    /// Prerequisites that are part of the plan.
    pub prerequisites: Vec<String>,
    pub duration_days: u32,
    /// Earliest start with prerequisites finished; unrelated measures overlap.
    pub start_day: u32,
    pub finish_day: u32,
    pub expenses: ExpenseSheet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestorationPlan {
    pub measures: Vec<RestorationMeasure>,
    pub warnings: Vec<String>,
}

impl RestorationPlan {
    pub fn makespan(&self) -> u32 {
        self.measures.iter().map(|m| m.finish_day).max().unwrap_or(0)
    }

    pub fn expenses(&self, currency: &str) -> Result<ExpenseSheet, ScenarioError> {
        sum_expense_sheets(self.measures.iter().map(|m| (m.id.as_str(), &m.expenses)), currency)
    }

    pub fn finish_of(&self, id: &str) -> Option<u32> {
        self.measures.iter().find(|m| m.id == id).map(|m| m.finish_day)
    }
}

/// Picks the templates matching the event's damage tags and orders them so
/// every measure follows its prerequisites; among ready measures the
/// smallest id goes first.
pub fn plan_restoration(
    tags: &[String],
    templates: &[MeasureTemplate],
    currency: &str,
) -> Result<RestorationPlan, ScenarioError> {
    let tags: BTreeSet<String> = tags.iter().map(|t| kb_symbol(t)).collect();
    let mut warnings = Vec::new();
    if tags.is_empty() {
        warnings.push("event has no damage tags; no restoration measures".to_string());
    }
    let chosen: BTreeMap<&str, &MeasureTemplate> = templates
        .iter()
        .filter(|t| t.tags.iter().any(|g| tags.contains(&kb_symbol(g))))
        .map(|t| (t.id.as_str(), t))
        .collect();
    if chosen.is_empty() && !tags.is_empty() {
        warnings.push("no measure template matches the damage tags".to_string());
    }
    let prereqs = |id: &str| -> Vec<&str> {
        let mut p: Vec<&str> = chosen[id]
            .prerequisites
            .iter()
            .map(String::as_str)
            .filter(|p| chosen.contains_key(p))
            .collect();
        p.sort_unstable();
        p.dedup();
        p
    };

    let mut indegree: BTreeMap<&str, usize> = chosen.keys().map(|&k| (k, prereqs(k).len())).collect();
    let mut ready: BTreeSet<&str> = indegree.iter().filter(|(_, &d)| d == 0).map(|(&k, _)| k).collect();
    let mut order: Vec<&str> = Vec::new();
    while let Some(&id) = ready.iter().next() {
        ready.remove(id);
        order.push(id);
        for (&other, d) in indegree.iter_mut() {
            if prereqs(other).contains(&id) {
                *d -= 1;
                if *d == 0 {
                    ready.insert(other);
                }
            }
        }
    }
    if order.len() < chosen.len() {
        let left: BTreeSet<&str> = chosen.keys().copied().filter(|k| !order.contains(k)).collect();
        return Err(ScenarioError::Cycle(find_cycle(&left, &prereqs)));
    }

    let mut finish: BTreeMap<&str, u32> = BTreeMap::new();
    let mut measures = Vec::new();
    for id in order {
        let t = chosen[id];
        let pre = prereqs(id);
        let start = pre.iter().map(|p| finish[p]).max().unwrap_or(0);
        let end = start + t.duration_days;
        finish.insert(id, end);
        measures.push(RestorationMeasure {
            id: t.id.clone(),
            description: t.description.clone(),
            prerequisites: pre.iter().map(|s| s.to_string()).collect(),
            duration_days: t.duration_days,
            start_day: start,
            finish_day: end,
            expenses: ExpenseSheet::from_items(t.expenses.clone(), currency)?,
        });
    }
    Ok(RestorationPlan { measures, warnings })
}

fn find_cycle<'a>(left: &BTreeSet<&'a str>, prereqs: &dyn Fn(&str) -> Vec<&'a str>) -> Vec<String> {
    // Every node left over lies on or behind a cycle; walk prerequisites
    // until a node repeats.
    let mut path: Vec<&str> = vec![*left.iter().next().expect("nonempty")];
    loop {
        let cur = *path.last().expect("nonempty");
        let next = prereqs(cur)
            .into_iter()
            .find(|p| left.contains(p))
            .expect("a blocked measure has a blocked prerequisite");
        if let Some(i) = path.iter().position(|&p| p == next) {
            let mut cyc: Vec<String> = path[i..].iter().rev().map(|s| s.to_string()).collect();
            cyc.push(cyc[0].clone());
            return cyc;
        }
        path.push(next);
    }
}

// causes

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CauseStatus {
    Confirmed,
    Rejected,
    Undeterminable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauseVersion {
    pub version: String,
    pub status: CauseStatus,
    /// Measurements a condition needed but the event lacks.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub missing: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub proof: Option<TraceNode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauseAnalysis {
    /// Confirmed versions in knowledge-base order.
    pub ranking: Vec<String>,
    pub versions: Vec<CauseVersion>,
    pub warnings: Vec<String>,
}

/// Adds `measurement(Name, Value)`: succeeds with the event's value, or fails
/// and logs the name when the event has no such measurement.
pub fn register_measurement(
    reg: &mut BuiltinRegistry,
    event: Arc<CriticalEvent>,
    missing: Arc<Mutex<Vec<String>>>,
) -> Result<(), ScenarioError> {
    reg.register_builtin("measurement", 2, &[Mode::In, Mode::Out], move |a, _| {
        let name = a[0].as_sym().or_else(|| a[0].as_text()).unwrap_or_default().to_string();
        match event.measurement(&name) {
            Some(v) => Ok(vec![vec![a[0].clone(), Term::num(v)]]),
            None => {
                let mut m = missing.lock().unwrap_or_else(|e| e.into_inner());
                if !m.contains(&name) {
                    m.push(name);
                }
                Ok(vec![])
            }
        }
    })
    .map_err(|e| ScenarioError::Data(e.to_string()))?;
    Ok(())
}

/// Checks each `version(V)` of the knowledge base against the event's
/// measurements. A version whose conditions need an absent measurement and
/// cannot be proven otherwise is undeterminable.
pub fn analyze_causes(
    kb: &KnowledgeBase,
    store: &FactStore,
    event: &CriticalEvent,
) -> Result<CauseAnalysis, ScenarioError> {
    let mut names: Vec<Term> = Vec::new();
    for c in &kb.clauses {
        if c.head.pred == "version"
            && c.head.arity() == 1
            && c.head.args[0].is_ground()
            && !names.contains(&c.head.args[0])
        {
            names.push(c.head.args[0].clone());
        }
    }
    let event = Arc::new(event.clone());
    let mut versions = Vec::new();
    for v in names {
        let missing = Arc::new(Mutex::new(Vec::new()));
        let mut reg = standard_registry();
        register_measurement(&mut reg, event.clone(), missing.clone())?;
        let goal = Atom::new("version", vec![v.clone()]);
        let mut solver = Solver::new(kb, store, &reg, &goal, SolveLimits::default())?;
        let proof = solver.next_solution()?;
        let missing = missing.lock().unwrap_or_else(|e| e.into_inner()).clone();
        let status = match (&proof, missing.is_empty()) {
            (Some(_), _) => CauseStatus::Confirmed,
            (None, true) => CauseStatus::Rejected,
            (None, false) => CauseStatus::Undeterminable,
        };
        versions.push(CauseVersion {
            version: v.to_string(),
            status,
            missing: if status == CauseStatus::Undeterminable {
                missing
            } else {
                vec![]
            },
            proof: proof.map(|s| s.tree.to_trace()),
        });
    }
    let ranking: Vec<String> = versions
        .iter()
        .filter(|v| v.status == CauseStatus::Confirmed)
        .map(|v| v.version.clone())
        .collect();
    let mut warnings = Vec::new();
    if ranking.is_empty() {
        warnings.push("no cause version is confirmed by the measurements".to_string());
    }
    Ok(CauseAnalysis {
        ranking,
        versions,
        warnings,
    })
}

/// One reliability proposition per confirmed cause with an improvement
/// template, in ranking order.
pub fn propose_reliability(causes: &CauseAnalysis, improvements: &[(String, String)]) -> Vec<Proposition> {
    let mut out = Vec::new();
    for c in &causes.ranking {
        for (cause, text) in improvements {
            if cause == c {
                out.push(Proposition {
                    kind: PropositionKind::ReliabilityImprovement,
                    description: text.clone(),
                    evidence: vec![format!("cause:{c}")],
                });
            }
        }
    }
    out
}

// consequences

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Asset {
    pub id: String,
    pub product: String,
    pub daily_output: f64,
}

/// Share of a product that becomes a sold good.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductRoute {
    pub source: String,
    pub good: String,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contract {
    pub id: String,
    pub product: String,
    /// Delivery due, in days from the event.
    pub due_day: f64,
    pub penalty_per_day: Money,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FinanceParams {
    /// Cash available for restoration without credit.
    pub liquidity: Option<Money>,
    /// Annual rate as a fraction.
    pub credit_rate: Option<f64>,
    pub credit_term_years: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConsequenceInputs {
    pub affected: Vec<String>,
    pub assets: Vec<Asset>,
    /// (asset, measure) pairs: the asset runs again when the measure is done.
    pub requirements: Vec<(String, String)>,
    pub prices: BTreeMap<String, Money>,
    pub routes: Vec<ProductRoute>,
    pub contracts: Vec<Contract>,
    pub finance: FinanceParams,
    pub currency: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LostOutput {
    pub asset: String,
    pub product: String,
    pub daily_output: f64,
    pub downtime_days: u32,
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoneyItem {
    pub label: String,
    /// How the amount was obtained.
    pub basis: String,
    pub amount: Money,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FactorGroup {
    pub items: Vec<MoneyItem>,
    pub total: Money,
}

impl FactorGroup {
    fn push(&mut self, label: impl Into<String>, basis: String, amount: Money) {
        self.items.push(MoneyItem {
            label: label.into(),
            basis,
            amount,
        });
        self.total += amount;
    }
}

/// Capacity of `product` lost for `downtime_days` from day 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityLoss {
    pub product: String,
    pub share: f64,
    pub downtime_days: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsequenceReport {
    pub currency: String,
    pub lost_output: Vec<LostOutput>,
    pub sale_volume_change: FactorGroup,
    pub penalty_sanctions: FactorGroup,
    pub account_payable_increase: FactorGroup,
    pub capacity_losses: Vec<CapacityLoss>,
    pub unquantified: Vec<String>,
    /// Sum of the three factor groups.
    pub total: Money,
    pub narrative: String,
}

fn fmt_num(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

pub fn assess_consequences(
    plan: &RestorationPlan,
    restoration_cost: Money,
    inputs: &ConsequenceInputs,
) -> Result<ConsequenceReport, ScenarioError> {
    let mut unquantified = Vec::new();
    let mut lost = Vec::new();
    for a in &inputs.affected {
        let Some(asset) = inputs.assets.iter().find(|x| &x.id == a) else {
            unquantified.push(format!("lost output of {a}: asset not in the registry"));
            continue;
        };
        let reqs: Vec<&str> = inputs
            .requirements
            .iter()
            .filter(|(x, _)| x == a)
            .map(|(_, m)| m.as_str())
            .collect();
        if reqs.is_empty() {
            unquantified.push(format!("downtime of {a}: no restoration measures linked to the asset"));
            continue;
        }
        let down = reqs.iter().filter_map(|m| plan.finish_of(m)).max().unwrap_or(0);
        lost.push(LostOutput {
            asset: a.clone(),
            product: asset.product.clone(),
            daily_output: asset.daily_output,
            downtime_days: down,
            volume: asset.daily_output * down as f64,
        });
    }

    let mut by_product: BTreeMap<&str, f64> = BTreeMap::new();
    for l in &lost {
        *by_product.entry(l.product.as_str()).or_default() += l.volume;
    }
    let mut sale = FactorGroup::default();
    for (&p, &vol) in &by_product {
        let routes: Vec<&ProductRoute> = inputs.routes.iter().filter(|r| r.source == p).collect();
        let goods: Vec<(String, f64)> = if routes.is_empty() {
            vec![(p.to_string(), vol)]
        } else {
            routes.iter().map(|r| (r.good.clone(), vol * r.share)).collect()
        };
        for (g, v) in goods {
            match inputs.prices.get(&g) {
                Some(price) => sale.push(g, format!("{} × {price}", fmt_num(v)), price.scale(v)?),
                None => unquantified.push(format!("sale volume of {g}: no price")),
            }
        }
    }

    // Day each product or good is available again.
    let mut ready: BTreeMap<String, u32> = BTreeMap::new();
    for l in &lost {
        let e = ready.entry(l.product.clone()).or_default();
        *e = (*e).max(l.downtime_days);
    }
    for r in &inputs.routes {
        if let Some(&d) = ready.get(&r.source) {
            let e = ready.entry(r.good.clone()).or_default();
            *e = (*e).max(d);
        }
    }
    let mut penalties = FactorGroup::default();
    for c in &inputs.contracts {
        let slip = ready.get(&c.product).map(|&d| d as f64 - c.due_day).unwrap_or(0.0);
        if slip > 0.0 {
            penalties.push(
                c.id.clone(),
                format!("{} days late × {}", fmt_num(slip), c.penalty_per_day),
                c.penalty_per_day.scale(slip)?,
            );
        }
    }

    let mut payable = FactorGroup::default();
    let f = &inputs.finance;
    match f.liquidity {
        None => unquantified.push("account payable: no liquidity parameter".into()),
        Some(liq) if restoration_cost > liq => match (f.credit_rate, f.credit_term_years) {
            (Some(rate), Some(term)) => {
                let need = restoration_cost - liq;
                payable.push(
                    "credit interest",
                    format!("({restoration_cost} − {liq}) × {} × {}", fmt_num(rate), fmt_num(term)),
                    need.scale(rate * term)?,
                );
            }
            _ => unquantified.push("account payable: credit is required but no credit terms are given".into()),
        },
        Some(_) => {}
    }

    let mut capacity = Vec::new();
    for l in &lost {
        let total: f64 = inputs
            .assets
            .iter()
            .filter(|a| a.product == l.product)
            .map(|a| a.daily_output)
            .sum();
        let share = if total > 0.0 { l.daily_output / total } else { 1.0 };
        capacity.push(CapacityLoss {
            product: l.product.clone(),
            share,
            downtime_days: l.downtime_days,
        });
        for r in inputs.routes.iter().filter(|r| r.source == l.product) {
            capacity.push(CapacityLoss {
                product: r.good.clone(),
                share,
                downtime_days: l.downtime_days,
            });
        }
    }

    let total = sale.total + penalties.total + payable.total;
    let narrative = format!(
        "{} asset(s) down for up to {} day(s); lost output {}; sale volume change {} {}, penalty sanctions {} {}, account payable increase {} {}.",
        lost.len(),
        lost.iter().map(|l| l.downtime_days).max().unwrap_or(0),
        if by_product.is_empty() {
            "none".to_string()
        } else {
            by_product
                .iter()
                .map(|(p, v)| format!("{} of {p}", fmt_num(*v)))
                .collect::<Vec<_>>()
                .join(", ")
        },
        sale.total,
        inputs.currency,
        penalties.total,
        inputs.currency,
        payable.total,
        inputs.currency,
    );
    Ok(ConsequenceReport {
        currency: inputs.currency.clone(),
        lost_output: lost,
        sale_volume_change: sale,
        penalty_sanctions: penalties,
        account_payable_increase: payable,
        capacity_losses: capacity,
        unquantified,
        total,
        narrative,
    })
}

// plan correction

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanLine {
    pub product: String,
    /// 1-based; period k covers days [(k-1)L, kL).
    pub period: u32,
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductionPlan {
    pub period_days: f64,
    pub lines: Vec<PlanLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevisedLine {
    pub product: String,
    pub period: u32,
    pub original: f64,
    pub revised: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanCorrection {
    pub lines: Vec<RevisedLine>,
    pub proposition: Proposition,
}

/// Cuts each period's volume by the capacity lost during it, assuming a
/// uniform production rate within the period. Untouched periods keep their
/// volume exactly; nothing goes below zero.
pub fn correct_plans(plan: &ProductionPlan, losses: &[CapacityLoss], evidence: &str) -> PlanCorrection {
    let len = plan.period_days;
    let mut lines = Vec::new();
    let mut changed = 0;
    for l in &plan.lines {
        let start = (l.period.max(1) - 1) as f64 * len;
        let mut cut = 0.0;
        for c in losses.iter().filter(|c| c.product == l.product) {
            let overlap = (c.downtime_days as f64 - start).clamp(0.0, len);
            if overlap > 0.0 && len > 0.0 {
                cut += c.share * overlap / len;
            }
        }
        let revised = if cut > 0.0 {
            changed += 1;
            (l.volume * (1.0 - cut.min(1.0))).max(0.0)
        } else {
            l.volume
        };
        lines.push(RevisedLine {
            product: l.product.clone(),
            period: l.period,
            original: l.volume,
            revised,
        });
    }
    let description = if changed == 0 {
        "keep the production and sales plan unchanged".to_string()
    } else {
        let parts: Vec<String> = lines
            .iter()
            .filter(|l| l.revised != l.original)
            .map(|l| {
                format!(
                    "{} in period {} from {} to {}",
                    l.product,
                    l.period,
                    fmt_num(l.original),
                    fmt_num(l.revised)
                )
            })
            .collect();
        format!("reduce planned output: {}", parts.join("; "))
    };
    PlanCorrection {
        lines,
        proposition: Proposition {
            kind: PropositionKind::PlanCorrection,
            description,
            evidence: vec![evidence.to_string()],
        },
    }
}
