use clap::{Args, ValueEnum};
use ssr_core::model::config::MODEL_KEYS;
use ssr_core::model::{ConfigMap, ModelConfig};
use ssr_core::numerics::QuadratureSpec;
use ssr_core::ssr::log_grid;
use ssr_core::{Error, Result};
use std::path::PathBuf;

/// Keys accepted in a params file besides the model keys.
pub const RUN_KEYS: &[&str] = &[
    "grid.min",
    "grid.max",
    "grid.n",
    "grid.spacing",
    "quadrature.abs_tol",
    "quadrature.rel_tol",
    "quadrature.max_panels",
    "riccati.steps",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Flat `key = value` parameter file.
    #[arg(long = "params", value_name = "FILE")]
    pub params_file: Option<PathBuf>,
    /// Override any file key, e.g. `--set curve.kind=flat`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub hurst: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub v0: Option<f64>,
    #[arg(long)]
    pub vbar: Option<f64>,
    /// power_law, mittag_leffler or exponential.
    #[arg(long)]
    pub kernel: Option<String>,
    /// flat, exponential_decay or tabulated.
    #[arg(long)]
    pub curve: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GridArgs {
    #[arg(long = "tau-min")]
    pub tau_min: Option<f64>,
    #[arg(long = "tau-max")]
    pub tau_max: Option<f64>,
    #[arg(long = "tau-n")]
    pub tau_n: Option<usize>,
    #[arg(long, value_enum)]
    pub spacing: Option<Spacing>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct NumericsArgs {
    #[arg(long = "abs-tol")]
    pub abs_tol: Option<f64>,
    #[arg(long = "rel-tol")]
    pub rel_tol: Option<f64>,
    #[arg(long = "max-panels")]
    pub max_panels: Option<usize>,
    /// Fixed number of Riccati steps per solve instead of the default density.
    #[arg(long = "riccati-steps")]
    pub riccati_steps: Option<usize>,
}

fn config_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config { key: key.into(), message: message.into() }
}

/// File values, then `--set`, then dedicated flags.
pub fn build_map(model: &ModelArgs, grid: &GridArgs, num: &NumericsArgs) -> Result<ConfigMap> {
    let mut map = match &model.params_file {
        Some(p) => ConfigMap::load(p)?,
        None => ConfigMap::default(),
    };
    for kv in &model.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| config_err(kv, "expected KEY=VALUE"))?;
        map.set(k.trim(), v.trim());
    }
    let mut put = |key: &str, v: Option<String>| {
        if let Some(v) = v {
            map.set(key, v);
        }
    };
    put("hurst", model.hurst.map(|x| x.to_string()));
    put("alpha", model.alpha.map(|x| x.to_string()));
    put("nu", model.nu.map(|x| x.to_string()));
    put("rho", model.rho.map(|x| x.to_string()));
    put("lambda", model.lambda.map(|x| x.to_string()));
    put("v0", model.v0.map(|x| x.to_string()));
    put("vbar", model.vbar.map(|x| x.to_string()));
    put("kernel", model.kernel.clone());
    put("curve.kind", model.curve.clone());
    put("grid.min", grid.tau_min.map(|x| x.to_string()));
    put("grid.max", grid.tau_max.map(|x| x.to_string()));
    put("grid.n", grid.tau_n.map(|x| x.to_string()));
    put("grid.spacing", grid.spacing.map(|s| if s == Spacing::Log { "log" } else { "linear" }.to_string()));
    put("quadrature.abs_tol", num.abs_tol.map(|x| x.to_string()));
    put("quadrature.rel_tol", num.rel_tol.map(|x| x.to_string()));
    put("quadrature.max_panels", num.max_panels.map(|x| x.to_string()));
    put("riccati.steps", num.riccati_steps.map(|x| x.to_string()));
    // Setting hurst on the command line replaces an alpha from the file, and vice versa.
    if model.hurst.is_some() && model.alpha.is_none() {
        map.remove("alpha");
    }
    if model.alpha.is_some() && model.hurst.is_none() {
        map.remove("hurst");
    }
    let known: Vec<&str> = MODEL_KEYS.iter().chain(RUN_KEYS).copied().collect();
    map.check_known(&known)?;
    Ok(map)
}

pub fn model(map: &ConfigMap) -> Result<ModelConfig> {
    ModelConfig::from_map(map)
}

fn get_usize(map: &ConfigMap, key: &str) -> Result<Option<usize>> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v.parse().map(Some).map_err(|_| config_err(key, format!("`{v}` is not a non-negative integer"))),
    }
}

pub fn maturities(map: &ConfigMap, default: (f64, f64, usize)) -> Result<Vec<f64>> {
    let lo = map.get_f64("grid.min")?.unwrap_or(default.0);
    let hi = map.get_f64("grid.max")?.unwrap_or(default.1);
    let n = get_usize(map, "grid.n")?.unwrap_or(default.2);
    let spacing = map.get("grid.spacing").unwrap_or("log");
    if n == 1 && lo == hi && lo > 0.0 {
        return Ok(vec![lo]);
    }
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(config_err("grid", format!("need 0 < min < max and n >= 2, got [{lo}, {hi}] with n = {n}")));
    }
    match spacing {
        "log" => log_grid(lo, hi, n).map_err(|e| config_err("grid", e.to_string())),
        "linear" => Ok((0..n).map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect()),
        other => Err(config_err("grid.spacing", format!("unknown spacing `{other}` (expected log or linear)"))),
    }
}

pub fn quadrature(map: &ConfigMap) -> Result<QuadratureSpec> {
    let d = QuadratureSpec::default();
    let spec = QuadratureSpec {
        abs_tol: map.get_f64("quadrature.abs_tol")?.unwrap_or(d.abs_tol),
        rel_tol: map.get_f64("quadrature.rel_tol")?.unwrap_or(d.rel_tol),
        max_panels: get_usize(map, "quadrature.max_panels")?.unwrap_or(d.max_panels),
        ..d
    };
    if !(spec.abs_tol >= 0.0 && spec.rel_tol >= 0.0 && spec.abs_tol + spec.rel_tol > 0.0 && spec.max_panels > 0) {
        return Err(config_err("quadrature", "tolerances must be non-negative, not both zero, and max_panels positive"));
    }
    Ok(spec)
}

pub fn riccati_steps(map: &ConfigMap) -> Result<Option<usize>> {
    let n = get_usize(map, "riccati.steps")?;
    if let Some(n) = n {
        if n < 8 {
            return Err(config_err("riccati.steps", format!("need at least 8 steps, got {n}")));
        }
    }
    Ok(n)
}

/// Comma-separated list of numbers.
pub fn parse_list(key: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| config_err(key, format!("`{x}` is not a number"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(text: &str) -> ConfigMap {
        ConfigMap::parse(text).unwrap()
    }

    #[test]
    fn maturity_grids() {
        let lin = maturities(&map("grid.min = 0.5\ngrid.max = 2\ngrid.n = 4\ngrid.spacing = linear"), (0.1, 1.0, 2)).unwrap();
        assert_eq!(lin, vec![0.5, 1.0, 1.5, 2.0]);
        let log = maturities(&map(""), (0.01, 1.0, 3)).unwrap();
        assert!((log[1] - 0.1).abs() < 1e-15 && log[2] == 1.0);
        assert_eq!(maturities(&map("grid.n = 1\ngrid.min = 0.3\ngrid.max = 0.3"), (0.1, 1.0, 2)).unwrap(), vec![0.3]);
        assert!(matches!(maturities(&map("grid.n = 1"), (0.1, 1.0, 2)), Err(Error::Config { .. })));
        assert!(matches!(maturities(&map("grid.n = two"), (0.1, 1.0, 2)), Err(Error::Config { key, .. }) if key == "grid.n"));
    }

    #[test]
    fn quadrature_overrides() {
        let q = quadrature(&map("quadrature.abs_tol = 1e-12\nquadrature.max_panels = 10")).unwrap();
        assert_eq!((q.abs_tol, q.rel_tol, q.max_panels), (1e-12, QuadratureSpec::default().rel_tol, 10));
        assert!(quadrature(&map("quadrature.abs_tol = 0\nquadrature.rel_tol = 0")).is_err());
        assert!(riccati_steps(&map("riccati.steps = 4")).is_err());
    }

    #[test]
    fn flags_override_file_values() {
        let model = ModelArgs { hurst: Some(0.2), set: vec!["nu=0.7".into()], ..Default::default() };
        let mut m = build_map(&model, &GridArgs::default(), &NumericsArgs::default()).unwrap();
        assert_eq!(m.get("hurst"), Some("0.2"));
        assert_eq!(m.get("nu"), Some("0.7"));
        m.set("bogus", 1);
        assert!(m.check_known(&MODEL_KEYS.iter().chain(RUN_KEYS).copied().collect::<Vec<_>>()).is_err());
        assert_eq!(parse_list("x", "1, 2.5").unwrap(), vec![1.0, 2.5]);
        assert!(parse_list("x", "1,,2").is_err());
    }
}
