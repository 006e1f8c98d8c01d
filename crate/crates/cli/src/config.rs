//! Run configuration: JSON, schema version 1, unknown fields rejected.

use std::path::Path;

use serde::Deserialize;
use sympopt_core::costs::{brockett_model, least_squares_model, random_j_symmetric};
use sympopt_core::io::matrix_from_value;
use sympopt_core::manifold::{random_symplectic, random_tangent};
use sympopt_core::optimizers::{ArmijoConfig, NewtonConfig};
use sympopt_core::{
    retract_tangent, BrockettCost, CostModel, Dim, LeastSquaresCost, Mat, OptimizerConfig,
    SymplecticPoint,
};

/// Entry range used for generated least-squares targets.
pub const TARGET_SCALE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    LeastSquares,
    Brockett,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    SteepestDescent,
    Newton,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Matrices {
    #[serde(rename = "W")]
    pub w: Option<serde_json::Value>,
    #[serde(rename = "Q")]
    pub q: Option<serde_json::Value>,
    #[serde(rename = "N")]
    pub n: Option<serde_json::Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub v: u32,
    pub problem: Problem,
    pub n: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub grad_tol: Option<f64>,
    #[serde(default)]
    pub armijo: Option<ArmijoConfig>,
    #[serde(default)]
    pub newton: Option<NewtonConfig>,
    /// Tangent radius of the initial perturbation.
    pub perturbation: f64,
    #[serde(default)]
    pub matrices: Matrices,
}

#[derive(Debug)]
pub enum Cost {
    LeastSquares(LeastSquaresCost),
    Brockett(BrockettCost),
}

impl Cost {
    pub fn model(&self) -> &dyn CostModel {
        match self {
            Cost::LeastSquares(c) => c,
            Cost::Brockett(c) => c,
        }
    }
}

/// Everything a run needs, built and validated from a config.
#[derive(Debug)]
pub struct Prepared {
    pub cost: Cost,
    pub start: SymplecticPoint,
    pub optimizer: OptimizerKind,
    pub settings: OptimizerConfig,
}

pub fn load(path: &Path) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse(&text)
}

/// Parse errors carry serde's line and column.
pub fn parse(text: &str) -> Result<RunConfig, String> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| format!("config: {e}"))?;
    if cfg.v != 1 {
        return Err(format!("config: field `v`: unsupported schema version {}", cfg.v));
    }
    Ok(cfg)
}

fn inline(name: &str, value: &Option<serde_json::Value>, n: Dim) -> Result<Option<Mat>, String> {
    let Some(value) = value else { return Ok(None) };
    let m = matrix_from_value(value.clone()).map_err(|e| format!("config: field `matrices.{name}`: {e}"))?;
    if m.nrows() != n.ambient() {
        return Err(format!(
            "config: field `matrices.{name}`: expected {0}x{0} for n = {1}, got {2}x{2}",
            n.ambient(),
            n.n(),
            m.nrows()
        ));
    }
    Ok(Some(m))
}

impl RunConfig {
    pub fn prepare(&self) -> Result<Prepared, String> {
        let n = Dim::new(self.n).map_err(|e| format!("config: field `n`: {e}"))?;
        let mut settings = OptimizerConfig::default();
        if let Some(k) = self.max_iter {
            settings.max_iter = k;
        }
        if let Some(t) = self.grad_tol {
            settings.grad_tol = t;
        }
        if let Some(a) = self.armijo {
            settings.armijo = a;
        }
        if let Some(nw) = self.newton {
            settings.newton = nw;
        }
        settings.validate().map_err(|e| format!("config: {e}"))?;
        if !(self.perturbation >= 0.0 && self.perturbation.is_finite()) {
            return Err(format!(
                "config: field `perturbation`: must be non-negative, got {}",
                self.perturbation
            ));
        }

        let m = &self.matrices;
        let (cost, base) = match self.problem {
            Problem::LeastSquares => {
                if m.q.is_some() || m.n.is_some() {
                    return Err("config: field `matrices`: least_squares takes only W".into());
                }
                let target = match inline("W", &m.w, n)? {
                    Some(w) => SymplecticPoint::new(w)
                        .map_err(|e| format!("config: field `matrices.W`: {e}"))?,
                    None => random_symplectic(n, self.seed, TARGET_SCALE)
                        .map_err(|e| format!("config: cannot generate W: {e}"))?,
                };
                (Cost::LeastSquares(least_squares_model(target.clone())), target)
            }
            Problem::Brockett => {
                if m.w.is_some() {
                    return Err("config: field `matrices`: brockett takes only Q and N".into());
                }
                let gen = |seed| {
                    random_j_symmetric(n, seed, 1.0).map_err(|e| format!("config: cannot generate: {e}"))
                };
                let q = match inline("Q", &m.q, n)? {
                    Some(q) => q,
                    None => gen(self.seed)?,
                };
                let nn = match inline("N", &m.n, n)? {
                    Some(x) => x,
                    None => gen(self.seed.wrapping_add(1))?,
                };
                let cost = brockett_model(q, nn).map_err(|e| format!("config: field `matrices`: {e}"))?;
                (Cost::Brockett(cost), SymplecticPoint::identity(n))
            }
        };
        let tangent = random_tangent(&base, self.seed.wrapping_add(2), self.perturbation);
        let start = retract_tangent(&tangent)
            .map_err(|e| format!("config: initial perturbation is unusable: {e}"))?;
        Ok(Prepared {
            cost,
            start,
            optimizer: self.optimizer,
            settings,
        })
    }
}
