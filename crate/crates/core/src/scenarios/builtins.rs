//! Builtins through which the scenario packages reach the operations. They
//! read enterprise data from knowledge-base facts and store tables, and
//! record their results as artifacts on the proof.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::decision::{self, BayesInput, EventTree, FinancialProfile};
use crate::inference::{standard_registry, BuiltinError, BuiltinRegistry, CallContext, Mode};
use crate::kb::{Atom, Term};
use crate::prediction;

use super::event::{kb_symbol, CriticalEvent};
use super::market::{self, PlanChange, SegmentCriterion};
use super::money::{LineItem, Money};
use super::production::{self, *};
use super::regional::{self, CostAdjustment, CostItem, CostKind};
use super::{Proposition, PropositionKind, ScenarioConfig, ScenarioError};

type Reply = Result<Vec<Vec<Term>>, BuiltinError>;

struct Env {
    event: Arc<CriticalEvent>,
    config: ScenarioConfig,
}

fn fail(e: impl ToString) -> BuiltinError {
    BuiltinError::Fail(e.to_string())
}

fn text(t: &Term) -> String {
    t.as_text()
        .or_else(|| t.as_sym())
        .map(str::to_string)
        .unwrap_or_else(|| t.to_string())
}

fn num(t: &Term, what: &str) -> Result<f64, BuiltinError> {
    t.as_num()
        .ok_or_else(|| fail(format!("{what}: number expected, got {t}")))
}

fn money(t: &Term, what: &str) -> Result<Money, BuiltinError> {
    match t {
        Term::Num(x) => Money::from_f64(*x).map_err(fail),
        Term::Str(s) => s.parse().map_err(fail),
        _ => Err(fail(format!("{what}: amount expected, got {t}"))),
    }
}

fn emit<T: Serialize>(ctx: &mut CallContext<'_>, key: &str, v: &T) -> Result<(), BuiltinError> {
    let v = serde_json::to_value(v).map_err(fail)?;
    ctx.emit(key, v);
    Ok(())
}

fn propose(ctx: &mut CallContext<'_>, p: Proposition) -> Result<(), BuiltinError> {
    emit(ctx, "proposition", &p)
}

fn first_fact(ctx: &CallContext<'_>, pred: &str, arity: usize) -> Option<Atom> {
    ctx.facts(pred, arity).into_iter().next()
}

fn currency(ctx: &CallContext<'_>, env: &Env) -> String {
    first_fact(ctx, "currency", 1)
        .map(|f| text(&f.args[0]).to_ascii_uppercase())
        .unwrap_or_else(|| env.config.currency.clone())
}

fn templates(ctx: &CallContext<'_>) -> Result<Vec<MeasureTemplate>, BuiltinError> {
    let mut out = Vec::new();
    for f in ctx.facts("measure", 3) {
        let id = text(&f.args[0]);
        let days = num(&f.args[2], "measure duration")?;
        if days < 0.0 || days.fract() != 0.0 {
            return Err(fail(format!(
                "measure {id}: duration must be a whole number of days ≥ 0"
            )));
        }
        let with = |pred: &str, arity: usize| -> Vec<Atom> {
            ctx.facts(pred, arity)
                .into_iter()
                .filter(|g| text(&g.args[0]) == id)
                .collect()
        };
        let mut expenses = Vec::new();
        for e in with("measure_expense", 5) {
            expenses.push(
                LineItem::new(
                    text(&e.args[1]),
                    num(&e.args[2], "quantity")?,
                    money(&e.args[3], "unit cost")?,
                    text(&e.args[4]).to_ascii_uppercase(),
                )
                .map_err(fail)?,
            );
        }
        out.push(MeasureTemplate {
            description: text(&f.args[1]),
            tags: with("measure_tag", 2).iter().map(|g| text(&g.args[1])).collect(),
            prerequisites: with("measure_requires", 2).iter().map(|g| text(&g.args[1])).collect(),
            duration_days: days as u32,
            expenses,
            id,
        });
    }
    Ok(out)
}

fn restoration(ctx: &CallContext<'_>, env: &Env) -> Result<RestorationPlan, BuiltinError> {
    plan_restoration(&env.event.tags, &templates(ctx)?, &currency(ctx, env)).map_err(fail)
}

fn consequence_inputs(ctx: &CallContext<'_>, env: &Env) -> Result<ConsequenceInputs, BuiltinError> {
    let mut inp = ConsequenceInputs {
        affected: env.event.assets.iter().map(|a| kb_symbol(a)).collect(),
        currency: currency(ctx, env),
        ..Default::default()
    };
    for f in ctx.facts("asset", 3) {
        inp.assets.push(Asset {
            id: text(&f.args[0]),
            product: text(&f.args[1]),
            daily_output: num(&f.args[2], "daily output")?,
        });
    }
    for f in ctx.facts("asset_requires", 2) {
        inp.requirements.push((text(&f.args[0]), text(&f.args[1])));
    }
    for f in ctx.facts("price", 2) {
        inp.prices.insert(text(&f.args[0]), money(&f.args[1], "price")?);
    }
    for f in ctx.facts("route", 3) {
        inp.routes.push(ProductRoute {
            source: text(&f.args[0]),
            good: text(&f.args[1]),
            share: num(&f.args[2], "route share")?,
        });
    }
    for f in ctx.facts("contract", 4) {
        inp.contracts.push(Contract {
            id: text(&f.args[0]),
            product: text(&f.args[1]),
            due_day: num(&f.args[2], "due day")?,
            penalty_per_day: money(&f.args[3], "penalty")?,
        });
    }
    if let Some(f) = first_fact(ctx, "liquidity", 1) {
        inp.finance.liquidity = Some(money(&f.args[0], "liquidity")?);
    }
    if let Some(f) = first_fact(ctx, "credit", 2) {
        inp.finance.credit_rate = Some(num(&f.args[0], "credit rate")?);
        inp.finance.credit_term_years = Some(num(&f.args[1], "credit term")?);
    }
    Ok(inp)
}

fn production_plan(ctx: &CallContext<'_>) -> Result<ProductionPlan, BuiltinError> {
    let period_days = match first_fact(ctx, "period_days", 1) {
        Some(f) => num(&f.args[0], "period length")?,
        None => 30.0,
    };
    let mut lines = Vec::new();
    for f in ctx.facts("plan", 3) {
        let k = num(&f.args[1], "period")?;
        if k < 1.0 || k.fract() != 0.0 {
            return Err(fail(format!("plan period {k} must be a positive integer")));
        }
        lines.push(PlanLine {
            product: text(&f.args[0]),
            period: k as u32,
            volume: num(&f.args[2], "volume")?,
        });
    }
    Ok(ProductionPlan { period_days, lines })
}

fn consequences(ctx: &CallContext<'_>, env: &Env) -> Result<(RestorationPlan, ConsequenceReport), BuiltinError> {
    let plan = restoration(ctx, env)?;
    let cur = currency(ctx, env);
    let cost = plan.expenses(&cur).map_err(fail)?.total;
    let report = assess_consequences(&plan, cost, &consequence_inputs(ctx, env)?).map_err(fail)?;
    Ok((plan, report))
}

fn threat(a: &[Term], ctx: &mut CallContext<'_>, env: &Env) -> Reply {
    let model = match &a[0] {
        Term::Compound(f, args) if f == "event_tree" && args.len() == 1 => {
            let mut tree = EventTree::new();
            for b in ctx.facts("branch", 3) {
                tree = tree.branch(
                    &text(&b.args[0]),
                    &text(&b.args[1]),
                    num(&b.args[2], "branch probability")?,
                );
            }
            for o in ctx.facts("outcome", 2) {
                tree = tree.outcome(&text(&o.args[0]), &text(&o.args[1]));
            }
            ThreatModel::EventTree {
                tree,
                class: text(&args[0]),
            }
        }
        Term::Compound(f, args) if f == "bayes" && args.len() == 1 => {
            let hs = ctx.facts("hypothesis", 3);
            let want = text(&args[0]);
            let idx = hs
                .iter()
                .position(|h| text(&h.args[0]) == want)
                .ok_or_else(|| fail(format!("no hypothesis {want}")))?;
            let input = BayesInput {
                hypotheses: hs.iter().map(|h| text(&h.args[0])).collect(),
                priors: hs.iter().map(|h| num(&h.args[1], "prior")).collect::<Result<_, _>>()?,
                likelihoods: hs
                    .iter()
                    .map(|h| num(&h.args[2], "likelihood"))
                    .collect::<Result<_, _>>()?,
                evidence: env.event.title.clone(),
            };
            ThreatModel::Bayes { input, hypothesis: idx }
        }
        other => return Err(fail(format!("unknown threat model {other}"))),
    };
    let t = assess_threat(&model, &env.config.thresholds).map_err(fail)?;
    emit(ctx, "threat", &t)?;
    Ok(vec![vec![
        a[0].clone(),
        Term::num(t.probability),
        Term::sym(t.level.name()),
    ]])
}

fn expected_damage(a: &[Term], ctx: &mut CallContext<'_>, env: &Env) -> Reply {
    let p = num(&a[0], "probability")?;
    let subtype = kb_symbol(&env.event.subtype);
    let est = ctx
        .facts("damage_estimate", 2)
        .into_iter()
        .find(|f| text(&f.args[0]) == subtype)
        .ok_or_else(|| fail(format!("no damage_estimate for {subtype}")))?;
    let damage = money(&est.args[1], "damage estimate")?;
    let expected = damage.scale(p).map_err(fail)?;
    let analogues: Vec<String> = ctx
        .facts("analogous_damage", 2)
        .into_iter()
        .filter(|f| text(&f.args[0]) == subtype)
        .map(|f| text(&f.args[1]))
        .collect();
    emit(
        ctx,
        "threat_consequences",
        &serde_json::json!({
            "probability": p,
            "damage_estimate": damage,
            "expected_loss": expected,
            "currency": currency(ctx, env),
            "analogous_damages": analogues,
        }),
    )?;
    Ok(vec![vec![a[0].clone(), Term::str(expected.to_string())]])
}

fn preventive(a: &[Term], ctx: &mut CallContext<'_>) -> Reply {
    let level = text(&a[0]);
    let texts: Vec<String> = ctx
        .facts("preventive", 2)
        .into_iter()
        .filter(|f| text(&f.args[0]) == level)
        .map(|f| text(&f.args[1]))
        .collect();
    for t in &texts {
        propose(
            ctx,
            Proposition {
                kind: PropositionKind::Other,
                description: t.clone(),
                evidence: vec!["report:threat".into()],
            },
        )?;
    }
    emit(ctx, "preventive_measures", &texts)?;
    Ok(vec![vec![a[0].clone(), Term::num(texts.len() as f64)]])
}

fn event_analysis(a: &[Term], ctx: &mut CallContext<'_>, env: &Env) -> Reply {
    let e = &env.event;
    emit(
        ctx,
        "analysis",
        &serde_json::json!({
            "title": e.title,
            "narrative": e.narrative,
            "tags": e.tags,
            "assets": e.assets,
            "measurements": e.measurements,
        }),
    )?;
    let tags = Term::list(e.tags.iter().map(|t| Term::sym(kb_symbol(t))));
    Ok(vec![vec![tags]]).map(|mut v: Vec<Vec<Term>>| {
        v[0].truncate(a.len());
        v
    })
}

fn restoration_plan(_a: &[Term], ctx: &mut CallContext<'_>, env: &Env) -> Reply {
    let plan = restoration(ctx, env)?;
    emit(ctx, "measures", &plan)?;
    Ok(vec![vec![Term::num(plan.measures.len() as f64)]])
}

fn expense_total(_a: &[Term], ctx: &mut CallContext<'_>, env: &Env) -> Reply {
    let plan = restoration(ctx, env)?;
    let sheet = plan.expenses(&currency(ctx, env)).map_err(fail)?;
    emit(ctx, "expenses", &sheet)?;
    Ok(vec![vec![Term::str(sheet.total.to_string())]])
}

fn cause_ranking(_a: &[Term], ctx: &mut CallContext<'_>, env: &Env) -> Reply {
    let c = analyze_causes(ctx.kb, ctx.store, &env.event).map_err(fail)?;
    emit(ctx, "causes", &c)?;
    Ok(vec![vec![Term::list(c.ranking.iter().map(|r| Term::sym(r.clone())))]])
}

fn consequence_report(_a: &[Term], ctx: &mut CallContext<'_>, env: &Env) -> Reply {
    let (_, r) = consequences(ctx, env)?;
    emit(ctx, "consequences", &r)?;
    Ok(vec![vec![Term::str(r.total.to_string())]])
}

fn plan_correction(_a: &[Term], ctx: &mut CallContext<'_>, env: &Env) -> Reply {
    let (_, r) = consequences(ctx, env)?;
    let plan = production_plan(ctx)?;
    let c = correct_plans(&plan, &r.capacity_losses, "report:consequences");
    propose(ctx, c.proposition.clone())?;
    emit(ctx, "plan_correction", &c)?;
    let changed = c.lines.iter().filter(|l| l.revised != l.original).count();
    Ok(vec![vec![Term::num(changed as f64)]])
}

fn reliability(a: &[Term], ctx: &mut CallContext<'_>, env: &Env) -> Reply {
    let confirmed: Vec<String> = a[0]
        .as_list()
        .ok_or_else(|| fail("list of causes expected"))?
        .iter()
        .map(text)
        .collect();
    let improvements: Vec<(String, String)> = ctx
        .facts("improvement", 2)
        .into_iter()
        .map(|f| (text(&f.args[0]), text(&f.args[1])))
        .collect();
    let analysis = CauseAnalysis {
        ranking: confirmed,
        versions: vec![],
        warnings: vec![],
    };
    let props = propose_reliability(&analysis, &improvements);
    let _ = env;
    for p in &props {
        propose(ctx, p.clone())?;
    }
    emit(ctx, "reliability", &props)?;
    Ok(vec![vec![a[0].clone(), Term::num(props.len() as f64)]])
}

fn regression_on(
    ctx: &CallContext<'_>,
    table: &str,
    x: &[f64],
) -> Result<(f64, prediction::FitDiagnostics, bool), BuiltinError> {
    let t = ctx.table(&Term::sym(table))?;
    let samples = prediction::regression_samples(t).map_err(fail)?;
    let (m, fit) = prediction::fit_regression(&samples, 1, true).map_err(fail)?;
    let p = prediction::predict_regression(&m, x).map_err(fail)?;
    Ok((p.value, fit, p.extrapolated))
}

fn list_nums(t: &Term, what: &str) -> Result<Vec<f64>, BuiltinError> {
    t.as_list()
        .ok_or_else(|| fail(format!("{what}: list expected, got {t}")))?
        .iter()
        .map(|x| num(x, what))
        .collect()
}

fn consumer_value(a: &[Term], ctx: &mut CallContext<'_>) -> Reply {
    let who = text(&a[0]);
    let attrs = ctx
        .facts("goods_attributes", 2)
        .into_iter()
        .find(|f| text(&f.args[0]) == who)
        .ok_or_else(|| fail(format!("no goods_attributes for {who}")))?;
    let x = list_nums(&attrs.args[1], "attributes")?;
    let (v, fit, extrapolated) = regression_on(ctx, "consumer_value", &x)?;
    emit(
        ctx,
        "consumer_value",
        &serde_json::json!({ "goods": who, "attributes": x, "value": v, "extrapolated": extrapolated, "fit": fit }),
    )?;
    Ok(vec![vec![a[0].clone(), Term::num(v)]])
}

fn sales_impact(a: &[Term], ctx: &mut CallContext<'_>) -> Reply {
    let gap = num(&a[0], "value gap")?;
    let base = first_fact(ctx, "own_sales", 1)
        .ok_or_else(|| fail("no own_sales baseline"))
        .and_then(|f| num(&f.args[0], "own sales"))?;
    if base <= 0.0 {
        return Err(fail("own sales baseline must be positive"));
    }
    let (pred, fit, extrapolated) = regression_on(ctx, "sales_response", &[gap])?;
    let ratio = (pred / base).max(0.0);
    emit(
        ctx,
        "sales_influence",
        &serde_json::json!({
            "value_gap": gap, "baseline": base, "predicted": pred,
            "change": pred - base, "ratio": ratio, "extrapolated": extrapolated, "fit": fit,
        }),
    )?;
    Ok(vec![vec![a[0].clone(), Term::num(pred), Term::num(ratio)]])
}

fn plan_information(a: &[Term], ctx: &mut CallContext<'_>) -> Reply {
    let change = match &a[0] {
        Term::Compound(f, args) if f == "ratio" && args.len() == 1 => PlanChange::Ratio(num(&args[0], "ratio")?),
        Term::Compound(f, args) if f == "extra" && args.len() == 1 => PlanChange::Extra(num(&args[0], "volume")?),
        other => return Err(fail(format!("plan change ratio(R) or extra(V) expected, got {other}"))),
    };
    let plan = production_plan(ctx)?;
    let lines = market::apply_plan_change(&plan, change);
    let description = match change {
        PlanChange::Ratio(r) => format!("revise planned sales and output by a factor of {r:.4}"),
        PlanChange::Extra(v) => format!("plan an additional volume of {v:.2} across the plan periods"),
    };
    propose(
        ctx,
        Proposition {
            kind: PropositionKind::PlanCorrection,
            description,
            evidence: vec!["report:plan_information".into()],
        },
    )?;
    emit(
        ctx,
        "plan_information",
        &serde_json::json!({ "change": change, "lines": lines }),
    )?;
    Ok(vec![vec![a[0].clone()]])
}

fn new_technology(a: &[Term], ctx: &mut CallContext<'_>, env: &Env) -> Reply {
    let comp = num(&a[0], "competitor value")?;
    let own = num(&a[1], "own value")?;
    let factor = env.config.new_technology_factor;
    let needed = market::new_technology_needed(comp, own, factor);
    if needed {
        let text = first_fact(ctx, "technology_proposal", 1)
            .map(|f| text(&f.args[0]))
            .unwrap_or_else(|| "apply new technology to raise the consumer value of own goods".into());
        propose(
            ctx,
            Proposition {
                kind: PropositionKind::NewTechnology,
                description: text,
                evidence: vec!["report:consumer_value".into()],
            },
        )?;
    }
    emit(
        ctx,
        "new_technology",
        &serde_json::json!({ "competitor_value": comp, "own_value": own, "factor": factor, "needed": needed }),
    )?;
    Ok(vec![a.to_vec()])
}

fn segment_analysis(a: &[Term], ctx: &mut CallContext<'_>) -> Reply {
    let mut crit = Vec::new();
    for f in ctx.facts("segment_criterion", 3) {
        crit.push(SegmentCriterion {
            name: text(&f.args[0]),
            weight: num(&f.args[1], "weight")?,
            score: num(&f.args[2], "score")?,
        });
    }
    let s = market::segment_score(crit);
    emit(ctx, "segment_analysis", &s)?;
    Ok(vec![vec![Term::num(s.score)]]).map(|mut v: Vec<Vec<Term>>| {
        v[0].truncate(a.len());
        v
    })
}

fn segment_sales(_a: &[Term], ctx: &mut CallContext<'_>) -> Reply {
    let f = first_fact(ctx, "segment_features", 1).ok_or_else(|| fail("no segment_features"))?;
    let x = list_nums(&f.args[0], "segment features")?;
    let (v, fit, extrapolated) = regression_on(ctx, "segment_sales", &x)?;
    let v = v.max(0.0);
    emit(
        ctx,
        "segment_sales",
        &serde_json::json!({ "features": x, "volume": v, "extrapolated": extrapolated, "fit": fit }),
    )?;
    Ok(vec![vec![Term::num(v)]])
}

fn financial_state(a: &[Term], ctx: &mut CallContext<'_>) -> Reply {
    let who = text(&a[0]);
    let f = ctx
        .facts("financial_profile", 2)
        .into_iter()
        .find(|f| text(&f.args[0]) == who)
        .ok_or_else(|| fail(format!("no financial_profile for {who}")))?;
    let x = list_nums(&f.args[1], "financial ratios")?;
    let arr: [f64; 5] = x.try_into().map_err(|_| fail("financial profile needs five ratios"))?;
    let (z, zone) = decision::altman_z(&FinancialProfile::from_array(arr)).map_err(fail)?;
    let zone_name = zone.name();
    emit(
        ctx,
        "financial_state",
        &serde_json::json!({ "partner": who, "ratios": arr, "z": z, "zone": zone }),
    )?;
    Ok(vec![vec![a[0].clone(), Term::num(z), Term::sym(zone_name)]])
}

fn other_propositions(a: &[Term], ctx: &mut CallContext<'_>) -> Reply {
    let zone = text(&a[0]);
    let texts: Vec<String> = ctx
        .facts("other_proposition", 2)
        .into_iter()
        .filter(|f| text(&f.args[0]) == zone)
        .map(|f| text(&f.args[1]))
        .collect();
    for t in &texts {
        propose(
            ctx,
            Proposition {
                kind: PropositionKind::Other,
                description: t.clone(),
                evidence: vec!["report:financial_state".into()],
            },
        )?;
    }
    emit(ctx, "other_propositions", &texts)?;
    Ok(vec![vec![a[0].clone(), Term::num(texts.len() as f64)]])
}

fn note(a: &[Term], ctx: &mut CallContext<'_>) -> Reply {
    let key = text(&a[0]);
    emit(ctx, &key, &serde_json::json!({ "note": text(&a[1]) }))?;
    Ok(vec![a.to_vec()])
}

fn fx_forecast(_a: &[Term], ctx: &mut CallContext<'_>) -> Reply {
    let (order, horizon) = match first_fact(ctx, "fx_model", 2) {
        Some(f) => (num(&f.args[0], "order")? as usize, num(&f.args[1], "horizon")? as usize),
        None => (1, 1),
    };
    let t = ctx.table(&Term::sym("exchange_rate"))?;
    let (ys, _) = prediction::series_from_table(t).map_err(fail)?;
    let f = regional::forecast_rate(&ys, order, horizon).map_err(fail)?;
    emit(ctx, "fx_forecast", &f)?;
    Ok(vec![vec![Term::num(f.rate)]])
}

fn announced_rate(a: &[Term], ctx: &mut CallContext<'_>, env: &Env) -> Reply {
    let name = text(&a[0]);
    let m = env
        .event
        .measurements
        .get(&name)
        .ok_or_else(|| fail(format!("the event reports no measurement {name}")))?;
    let baseline = match first_fact(ctx, &name, 1) {
        Some(f) => Some(num(&f.args[0], &name)?),
        None => None,
    };
    emit(
        ctx,
        "radical_change",
        &serde_json::json!({ "measurement": name, "value": m.value, "unit": m.unit, "baseline": baseline }),
    )?;
    Ok(vec![vec![a[0].clone(), Term::num(m.value)]])
}

fn cost_items(ctx: &CallContext<'_>) -> Result<Vec<CostItem>, BuiltinError> {
    ctx.facts("cost_item", 4)
        .into_iter()
        .map(|f| {
            let kind = text(&f.args[1]);
            Ok(CostItem {
                product: text(&f.args[0]),
                kind: CostKind::parse(&kind).ok_or_else(|| fail(format!("unknown cost kind {kind}")))?,
                amount: num(&f.args[2], "cost")?,
                imported: text(&f.args[3]) == "imported",
            })
        })
        .collect()
}

fn baseline(ctx: &CallContext<'_>, pred: &str) -> Result<f64, BuiltinError> {
    first_fact(ctx, pred, 1)
        .ok_or_else(|| fail(format!("no {pred} baseline")))
        .and_then(|f| num(&f.args[0], pred))
}

fn unit_costs(a: &[Term], ctx: &mut CallContext<'_>) -> Reply {
    let adj = match &a[0] {
        Term::Compound(f, args) if args.len() == 1 => {
            let new = num(&args[0], f)?;
            match f.as_str() {
                "fx" => {
                    let base = match first_fact(ctx, "base_rate", 1) {
                        Some(b) => num(&b.args[0], "base rate")?,
                        None => {
                            let t = ctx.table(&Term::sym("exchange_rate"))?;
                            let (ys, _) = prediction::series_from_table(t).map_err(fail)?;
                            *ys.last().ok_or_else(|| fail("empty exchange-rate series"))?
                        }
                    };
                    CostAdjustment::exchange_rate(base, new)
                }
                "customs" => CostAdjustment::customs(baseline(ctx, "customs_rate")?, new),
                "tax" => CostAdjustment::tax(baseline(ctx, "tax_rate")?, new),
                "energy" => CostAdjustment::energy(baseline(ctx, "energy_price")?, new),
                _ => return Err(fail(format!("unknown cost change {}", a[0]))),
            }
        }
        other => return Err(fail(format!("cost change expected, got {other}"))),
    };
    if !adj.factor.is_finite() {
        return Err(fail(format!("{}: baseline must be nonzero", adj.label)));
    }
    let mut prices = BTreeMap::new();
    for f in ctx.facts("unit_price", 2) {
        prices.insert(text(&f.args[0]), num(&f.args[1], "unit price")?);
    }
    let review = regional::recompute_costs(&cost_items(ctx)?, &prices, &[adj]);
    for p in &review.unprofitable {
        propose(
            ctx,
            Proposition {
                kind: PropositionKind::Other,
                description: format!("review price or sourcing of {p}: unit cost reaches the price"),
                evidence: vec!["report:unit_costs".into()],
            },
        )?;
    }
    emit(ctx, "unit_costs", &review)?;
    Ok(vec![vec![
        a[0].clone(),
        Term::list(review.unprofitable.iter().map(|p| Term::sym(p.clone()))),
    ]])
}

fn political(a: &[Term], ctx: &mut CallContext<'_>) -> Reply {
    let logistics = text(&a[0]) == "yes";
    let mut items: Vec<String> = ctx
        .facts("crisis_consequence", 1)
        .iter()
        .map(|f| text(&f.args[0]))
        .collect();
    if logistics {
        items.extend(ctx.facts("logistic_consequence", 1).iter().map(|f| text(&f.args[0])));
    }
    for t in &items {
        propose(
            ctx,
            Proposition {
                kind: PropositionKind::Other,
                description: t.clone(),
                evidence: vec!["report:political_consequences".into()],
            },
        )?;
    }
    emit(
        ctx,
        "political_consequences",
        &serde_json::json!({ "logistics_affected": logistics, "consequences": items }),
    )?;
    Ok(vec![a.to_vec()])
}

/// The standard builtins plus the scenario operations for `event`.
pub fn scenario_registry(event: &CriticalEvent, config: &ScenarioConfig) -> Result<BuiltinRegistry, ScenarioError> {
    use Mode::*;
    let env = Arc::new(Env {
        event: Arc::new(event.clone()),
        config: config.clone(),
    });
    let mut r = standard_registry();
    production::register_measurement(&mut r, env.event.clone(), Arc::new(Mutex::new(Vec::new())))?;

    type Handler = fn(&[Term], &mut CallContext<'_>, &Env) -> Reply;
    let with_env: [(&str, &[Mode], Handler); 12] = [
        ("announced_rate", &[In, Out], announced_rate),
        ("assess_threat", &[In, Out, Out], threat),
        ("expected_damage", &[In, Out], expected_damage),
        ("event_analysis", &[Out], event_analysis),
        ("restoration_plan", &[Out], restoration_plan),
        ("expense_total", &[Out], expense_total),
        ("cause_ranking", &[Out], cause_ranking),
        ("consequence_report", &[Out], consequence_report),
        ("plan_correction", &[Out], plan_correction),
        ("reliability_propositions", &[In, Out], reliability),
        ("new_technology", &[In, In], new_technology),
        ("fx_forecast", &[Out], |a, ctx, _| fx_forecast(a, ctx)),
    ];
    for (name, modes, h) in with_env {
        let env = env.clone();
        r.register_builtin(name, modes.len(), modes, move |a, ctx| h(a, ctx, &env))
            .map_err(|e| ScenarioError::Data(e.to_string()))?;
    }
    type Plain = fn(&[Term], &mut CallContext<'_>) -> Reply;
    let plain: [(&str, &[Mode], Plain); 11] = [
        ("preventive_propositions", &[In, Out], preventive),
        ("consumer_value", &[In, Out], consumer_value),
        ("sales_impact", &[In, Out, Out], sales_impact),
        ("plan_information", &[In], plan_information),
        ("segment_analysis", &[Out], segment_analysis),
        ("segment_sales", &[Out], segment_sales),
        ("financial_state", &[In, Out, Out], financial_state),
        ("other_propositions", &[In, Out], other_propositions),
        ("note", &[In, In], note),
        ("unit_costs", &[In, Out], unit_costs),
        ("political_consequences", &[In], political),
    ];
    for (name, modes, h) in plain {
        r.register_builtin(name, modes.len(), modes, h)
            .map_err(|e| ScenarioError::Data(e.to_string()))?;
    }
    Ok(r)
}
