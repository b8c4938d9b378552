//! Cost surrogate for forecast-combination weights: principal components of
//! the combined prediction and the free weights feed a ReLU network whose
//! output estimates the evaluated cost of the resulting robust schedule.
//! The network is encoded as a MILP to pick the weight, with particle swarm
//! search as the derivative-free alternative.

mod encode;
mod forecast;
mod mlp;
mod pca;
mod pso;
mod training;

pub use encode::{encode_surrogate_milp, optimize_weights, surrogate_milp_value, SurrogateVars, MAX_RELU_BIG_M};
pub use forecast::{combine_forecasts, mse_weight, project_simplex, ForecastBundle, WeightVector, SIMPLEX_TOL};
pub use mlp::{min_max_scaling, train_mlp, Layer, MlpModel, Trace, TrainOptions, TrainReport};
pub use pca::{fit_pca, PcaModel};
pub use pso::{optimize_weights_pso, PsoOptions, PsoResult};
pub use training::{
    day_errors, evaluate_strategy_cost, generate_training_set, infeasible_penalty, scenario_costs, weight_samples, TrainingRow, TrainingSetup, TrainingTable, WeightedErrors,
};

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SURROGATE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateModel {
    pub format_version: u32,
    pub num_methods: usize,
    pub pca: PcaModel,
    pub mlp: MlpModel,
}

impl SurrogateModel {
    pub fn new(num_methods: usize, pca: PcaModel, mlp: MlpModel) -> Result<Self> {
        if mlp.num_inputs() != pca.num_components() + num_methods - 1 {
            return Err(CoreError::Dimension(format!(
                "network takes {} inputs, components and free weights give {}",
                mlp.num_inputs(),
                pca.num_components() + num_methods - 1
            )));
        }
        Ok(SurrogateModel {
            format_version: SURROGATE_FORMAT_VERSION,
            num_methods,
            pca,
            mlp,
        })
    }

    pub(crate) fn check_bundle(&self, bundle: &ForecastBundle) -> Result<()> {
        if bundle.num_methods() != self.num_methods || bundle.dim() != self.pca.dim() {
            return Err(CoreError::Dimension(format!(
                "surrogate expects {} methods of length {}, bundle has {} of length {}",
                self.num_methods,
                self.pca.dim(),
                bundle.num_methods(),
                bundle.dim()
            )));
        }
        Ok(())
    }

    /// Raw network input for the combined prediction of `bundle` under `w`.
    pub fn features(&self, bundle: &ForecastBundle, w: &WeightVector) -> Result<Vec<f64>> {
        self.check_bundle(bundle)?;
        let mut x = self.pca.project(&combine_forecasts(bundle, w)?);
        x.extend_from_slice(w.free());
        Ok(x)
    }

    pub fn scaled_features(&self, bundle: &ForecastBundle, w: &WeightVector) -> Result<Vec<f64>> {
        Ok(self.mlp.scale_input(&self.features(bundle, w)?))
    }

    /// Predicted evaluated cost.
    pub fn predict(&self, bundle: &ForecastBundle, w: &WeightVector) -> Result<f64> {
        Ok(self.mlp.forward(&self.features(bundle, w)?))
    }

    /// Fits the network to a training table.
    pub fn fit(table: &TrainingTable, pca: PcaModel, opts: &TrainOptions) -> Result<(Self, TrainReport)> {
        let inputs: Vec<Vec<f64>> = table.rows.iter().map(TrainingRow::input).collect();
        let targets: Vec<f64> = table.rows.iter().map(|r| r.cost).collect();
        let (mlp, report) = train_mlp(&inputs, &targets, opts)?;
        Ok((Self::new(table.n_methods, pca, mlp)?, report))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("surrogate serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let model: SurrogateModel = serde_json::from_str(text)?;
        if model.format_version != SURROGATE_FORMAT_VERSION {
            return Err(CoreError::InvalidParameter(format!(
                "surrogate format version {} is not supported (expected {SURROGATE_FORMAT_VERSION})",
                model.format_version
            )));
        }
        Self::new(model.num_methods, model.pca, model.mlp)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}
