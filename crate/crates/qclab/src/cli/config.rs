//! Run configuration: command-line flags merged with an optional JSON file.

use std::path::PathBuf;

use clap::Args;
use qc_core::geometry::{MappingTorusParams, Model};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::CliError;

/// Every key accepted in a config file. Flags use the same names in kebab case.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orientation: Option<i8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub route: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub centre: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x1_nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x3_nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jet: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<[f64; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    /// `(T, T̂)` pairs; `null` stands for `T̂ = ∞`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orbits: Option<Vec<(f64, Option<f64>)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observable: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub windows: Option<usize>,
}

/// Flags shared by every subcommand.
#[derive(Clone, Debug, Default, Args)]
pub struct Flags {
    /// JSON file whose keys override the flags
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// trig_torus, heisenberg_circle or mapping_torus
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub orientation: Option<i8>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// oracle or grid
    #[arg(long)]
    pub route: Option<String>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub lambda_max: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory
    #[arg(long)]
    pub output: Option<String>,
    #[arg(long)]
    pub fit_lo: Option<f64>,
    #[arg(long)]
    pub fit_hi: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Comma-separated heat times
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub centre: Option<f64>,
    #[arg(long)]
    pub lambda_lo: Option<f64>,
    #[arg(long)]
    pub lambda_hi: Option<f64>,
    #[arg(long)]
    pub lambda_step: Option<f64>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub x1_nodes: Option<usize>,
    #[arg(long)]
    pub x3_nodes: Option<usize>,
    #[arg(long)]
    pub base_nodes: Option<usize>,
    /// JSON file holding the jet description
    #[arg(long)]
    pub jet: Option<PathBuf>,
    #[arg(long)]
    pub n_max: Option<u32>,
    /// Start point x0,x1,x2,x3
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    pub xi0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Comma-separated T:T̂ pairs, T̂ may be "inf"
    #[arg(long, value_delimiter = ',')]
    pub orbits: Option<Vec<String>>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub observable: Option<String>,
    #[arg(long)]
    pub windows: Option<usize>,
}

fn read_json(path: &PathBuf) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn parse_orbit(s: &str) -> Result<(f64, Option<f64>), CliError> {
    let bad = || CliError::Config(format!("orbit {s:?} is not of the form T:T̂"));
    let (t, th) = s.split_once(':').ok_or_else(bad)?;
    let t: f64 = t.trim().parse().map_err(|_| bad())?;
    let th = match th.trim() {
        "inf" | "infinity" => None,
        v => Some(v.parse::<f64>().map_err(|_| bad())?),
    };
    Ok((t, th))
}

impl Flags {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let x = match self.x {
            None => None,
            Some(v) => Some(<[f64; 4]>::try_from(v).map_err(|_| CliError::Config("--x takes four coordinates".into()))?),
        };
        let orbits = match self.orbits {
            None => None,
            Some(v) => Some(v.iter().map(|s| parse_orbit(s)).collect::<Result<Vec<_>, _>>()?),
        };
        let jet = match &self.jet {
            None => None,
            Some(p) => Some(read_json(p)?),
        };
        Ok(RunConfig {
            model: self.model,
            orientation: self.orientation,
            kappa: self.kappa,
            eps: self.eps,
            route: self.route,
            grid: self.grid,
            count: self.count,
            lambda_max: self.lambda_max,
            tol: self.tol,
            seed: self.seed,
            threads: self.threads,
            output: self.output,
            fit_lo: self.fit_lo,
            fit_hi: self.fit_hi,
            samples: self.samples,
            times: self.times,
            degree: self.degree,
            sigma: self.sigma,
            centre: self.centre,
            lambda_lo: self.lambda_lo,
            lambda_hi: self.lambda_hi,
            lambda_step: self.lambda_step,
            k_max: self.k_max,
            x1_nodes: self.x1_nodes,
            x3_nodes: self.x3_nodes,
            base_nodes: self.base_nodes,
            jet,
            n_max: self.n_max,
            x,
            xi0: self.xi0,
            t_end: self.t_end,
            steps: self.steps,
            orbits,
            t_max: self.t_max,
            observable: self.observable,
            windows: self.windows,
        })
    }

    /// Flags first, then every key present in the config file on top.
    pub fn resolve(self) -> Result<RunConfig, CliError> {
        let file = self.config.clone();
        let base = self.into_config()?;
        let Some(path) = file else {
            return Ok(base);
        };
        let overrides = match read_json(&path)? {
            Value::Object(m) => m,
            _ => return Err(CliError::Config(format!("{}: top level must be an object", path.display()))),
        };
        // deserialising on its own rejects unknown keys and ill-typed values
        serde_json::from_value::<RunConfig>(Value::Object(overrides.clone()))
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut merged: Map<String, Value> = match serde_json::to_value(&base) {
            Ok(Value::Object(m)) => m,
            _ => Map::new(),
        };
        for (k, v) in overrides {
            merged.insert(k, v);
        }
        serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Config(e.to_string()))
    }
}

impl RunConfig {
    pub fn model(&self) -> Result<Model, CliError> {
        let name = self.model.as_deref().unwrap_or("trig_torus");
        let model = Model::from_name(name).ok_or_else(|| CliError::Config(format!("unknown model {name:?}")))?;
        match model {
            Model::MappingTorus(p) => {
                let params = MappingTorusParams { kappa: self.kappa.unwrap_or(p.kappa), eps: self.eps.unwrap_or(p.eps), ..p };
                if !(params.eps > 0.0 && params.eps < 0.5) || !params.kappa.is_finite() {
                    return Err(CliError::Config("mapping_torus needs 0 < eps < 0.5 and finite kappa".into()));
                }
                Ok(Model::MappingTorus(params))
            }
            m => {
                if self.kappa.is_some() || self.eps.is_some() {
                    return Err(CliError::Config(format!("kappa/eps only apply to mapping_torus, not {name}")));
                }
                Ok(m)
            }
        }
    }

    pub fn orientation(&self) -> Result<i8, CliError> {
        match self.orientation.unwrap_or(1) {
            o @ (1 | -1) => Ok(o),
            o => Err(CliError::Config(format!("orientation must be ±1, got {o}"))),
        }
    }

    pub fn output_dir(&self) -> Result<PathBuf, CliError> {
        let dir = PathBuf::from(self.output.as_deref().unwrap_or("."));
        if !dir.is_dir() {
            return Err(CliError::Config(format!("output directory {} does not exist", dir.display())));
        }
        Ok(dir)
    }

    /// Checks that every numeric tolerance and size present is usable.
    pub fn validate(&self) -> Result<(), CliError> {
        let positive = [
            ("tol", self.tol),
            ("lambda_max", self.lambda_max),
            ("fit_lo", self.fit_lo),
            ("fit_hi", self.fit_hi),
            ("sigma", self.sigma),
            ("lambda_lo", self.lambda_lo),
            ("lambda_hi", self.lambda_hi),
            ("lambda_step", self.lambda_step),
            ("t_max", self.t_max),
        ];
        for (name, v) in positive {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::Config(format!("{name} must be positive and finite, got {v}")));
                }
            }
        }
        let nonzero = [
            ("grid", self.grid),
            ("count", self.count),
            ("threads", self.threads),
            ("samples", self.samples),
            ("x1_nodes", self.x1_nodes),
            ("x3_nodes", self.x3_nodes),
            ("base_nodes", self.base_nodes),
            ("steps", self.steps),
            ("windows", self.windows),
        ];
        for (name, v) in nonzero {
            if v == Some(0) {
                return Err(CliError::Config(format!("{name} must be at least 1")));
            }
        }
        if let Some(ts) = &self.times {
            if ts.is_empty() || ts.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                return Err(CliError::Config("times must be a nonempty list of positive values".into()));
            }
        }
        for (name, v) in [("centre", self.centre), ("xi0", self.xi0), ("t_end", self.t_end)] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(CliError::Config(format!("{name} must be finite")));
                }
            }
        }
        if let Some(x) = self.x {
            if x.iter().any(|v| !v.is_finite()) {
                return Err(CliError::Config("x must be finite".into()));
            }
        }
        if let Some(r) = self.route.as_deref() {
            if r != "oracle" && r != "grid" {
                return Err(CliError::Config(format!("route must be oracle or grid, got {r:?}")));
            }
        }
        self.model()?;
        self.orientation()?;
        Ok(())
    }
}
