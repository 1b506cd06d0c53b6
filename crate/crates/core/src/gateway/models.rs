//! Model files written by `ace fit` and read by `ace classify`.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    self, ClassDecision, ExperienceTable, FrequenciesModel, LogicVector, PlaneModel, PotentialModel, SurfaceModel,
};
use crate::kb::NumericTable;
use crate::prediction::{self, DynamicalModel, FitDiagnostics, Prediction, RegressionModel};

use super::GatewayError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Plane,
    Surface,
    Freq,
    Potential,
    Regression,
    Dynamical,
}

/// The fitted model, tagged by kind; its fields (coefficients and the
/// rest) sit at the top level of the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Plane(PlaneModel),
    Surface(SurfaceModel),
    Freq(FrequenciesModel),
    Potential(PotentialModel),
    Regression(RegressionModel),
    Dynamical(DynamicalModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(flatten)]
    pub model: Model,
    /// Number of inputs.
    pub dimensions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitDiagnostics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub degree: u32,
    pub margin: f64,
    pub epsilon: f64,
    pub order: usize,
    pub intercept: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            degree: 2,
            margin: diagnostics::DEFAULT_MARGIN,
            epsilon: diagnostics::DEFAULT_POTENTIAL_EPS,
            order: 0,
            intercept: true,
        }
    }
}

/// Fits a model of `kind` to a CSV table: an experience table (`class`
/// column plus components) for the classifiers, `y` plus inputs for
/// regression, a series (`y`, optional `t`, exogenous columns) for the
/// dynamical model.
pub fn fit_model(kind: ModelKind, table: &NumericTable, opts: &FitOptions) -> Result<ModelFile, GatewayError> {
    let experience = || ExperienceTable::from_table(table);
    Ok(match kind {
        ModelKind::Plane => {
            let t = experience()?;
            ModelFile {
                dimensions: t.dim(),
                model: Model::Plane(diagnostics::fit_separating_plane(&t, opts.margin)?),
                fit: None,
            }
        }
        ModelKind::Surface => {
            let t = experience()?;
            ModelFile {
                dimensions: t.dim(),
                model: Model::Surface(diagnostics::fit_separating_surface(&t, opts.degree, opts.margin)?),
                fit: None,
            }
        }
        ModelKind::Freq => {
            let t = experience()?;
            ModelFile {
                dimensions: t.dim(),
                model: Model::Freq(diagnostics::fit_frequencies(&t)?),
                fit: None,
            }
        }
        ModelKind::Potential => {
            let t = experience()?;
            ModelFile {
                dimensions: t.dim(),
                model: Model::Potential(PotentialModel::fit(&t, opts.epsilon, opts.margin)?),
                fit: None,
            }
        }
        ModelKind::Regression => {
            let samples = prediction::regression_samples(table)?;
            let (m, fit) = prediction::fit_regression(&samples, opts.degree.max(1), opts.intercept)?;
            ModelFile {
                dimensions: m.dim,
                model: Model::Regression(m),
                fit: Some(fit),
            }
        }
        ModelKind::Dynamical => {
            let (y, v) = prediction::series_from_table(table)?;
            let (m, fit) = prediction::fit_dynamical(&y, &v, opts.order, opts.intercept)?;
            ModelFile {
                dimensions: m.inputs(),
                model: Model::Dynamical(m),
                fit: Some(fit),
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Evaluation {
    Class(ClassDecision),
    Value(Prediction),
}

/// Applies a model to each row of a table. Classifiers read logic vectors
/// (a `class` column, if present, is ignored); regression reads inputs
/// (a `y` column, if present, is ignored).
pub fn apply_model(model: &ModelFile, table: &NumericTable) -> Result<Vec<Evaluation>, GatewayError> {
    let skip = match model.model {
        Model::Regression(_) => table.column("y"),
        _ => table.column("class"),
    };
    let rows = table.rows.iter().map(|r| {
        r.iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .map(|(_, x)| *x)
            .collect::<Vec<f64>>()
    });
    let mut out = Vec::new();
    for x in rows {
        let e = match &model.model {
            Model::Plane(m) => Evaluation::Class(diagnostics::classify_geometric(m, &LogicVector::from_f64(&x)?)?),
            Model::Surface(m) => Evaluation::Class(diagnostics::classify_geometric(m, &LogicVector::from_f64(&x)?)?),
            Model::Freq(m) => Evaluation::Class(diagnostics::classify_frequencies(m, &LogicVector::from_f64(&x)?)?),
            Model::Potential(m) => Evaluation::Class(diagnostics::classify_potential(m, &LogicVector::from_f64(&x)?)?),
            Model::Regression(m) => Evaluation::Value(prediction::predict_regression(m, &x)?),
            Model::Dynamical(_) => {
                return Err(GatewayError::BadRequest(
                    "dynamical models forecast a series; they do not classify rows".into(),
                ))
            }
        };
        out.push(e);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::csvio::read_table_str;

    #[test]
    fn plane_file_round_trips_and_classifies() {
        let t = read_table_str("class,x1,x2\n1,1,1\n1,1,0\n2,-1,-1\n2,0,-1\n").unwrap();
        let m = fit_model(ModelKind::Plane, &t, &FitOptions::default()).unwrap();
        let json = serde_json::to_value(&m).unwrap();
        assert_eq!(json["kind"], "plane");
        assert_eq!(json["dimensions"], 2);
        assert!(json["coefficients"].is_array());
        let back: ModelFile = serde_json::from_value(json).unwrap();
        assert_eq!(back, m);
        let out = apply_model(&back, &read_table_str("x1,x2\n1,1\n-1,-1\n").unwrap()).unwrap();
        let classes: Vec<_> = out
            .iter()
            .map(|e| match e {
                Evaluation::Class(d) => d.outcome,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(
            classes,
            [diagnostics::Outcome::Class(1), diagnostics::Outcome::Class(2)]
        );
    }

    #[test]
    fn regression_file_has_fit_metadata() {
        let t = read_table_str("y,x\n1,0\n3,1\n5,2\n").unwrap();
        let m = fit_model(ModelKind::Regression, &t, &FitOptions::default()).unwrap();
        let json = serde_json::to_value(&m).unwrap();
        assert_eq!(json["kind"], "regression");
        assert!(json["fit"]["r_squared"].as_f64().unwrap() > 0.999);
        match &apply_model(&m, &read_table_str("x\n3\n").unwrap()).unwrap()[0] {
            Evaluation::Value(p) => assert!((p.value - 7.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }
}
