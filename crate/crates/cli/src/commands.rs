use crate::settings::{self, GridArgs, ModelArgs, NumericsArgs};
use ssr_core::charfn::AfvCharFn;
use ssr_core::discreteness::{power_law_report, reports_to_csv};
use ssr_core::forest::{ssr_next_to_leading, ssr_second_order, tree_values, CatalogKind};
use ssr_core::model::{ConfigMap, ForwardVarianceCurve, Kernel, ModelParams};
use ssr_core::numerics::QuadratureSpec;
use ssr_core::riccati::RiccatiGrid;
use ssr_core::smile::{afv_smiles, calibrate_smile, CalibrationResult, CalibrationSetup, SmileSlice, REFERENCE_SETS};
use ssr_core::ssr::{fmt17, ssr_afv, ssr_afv_with, ssr_heston, SsrPoint, TermStructure};
use ssr_core::{Error, Result};
use std::fmt::Write;

const DEFAULT_GRID: (f64, f64, usize) = (0.01, 2.0, 20);

struct Run {
    map: ConfigMap,
    spec: QuadratureSpec,
    steps: Option<usize>,
}

impl Run {
    fn new(model: &ModelArgs, grid: &GridArgs, num: &NumericsArgs) -> Result<Self> {
        let map = settings::build_map(model, grid, num)?;
        let spec = settings::quadrature(&map)?;
        let steps = settings::riccati_steps(&map)?;
        Ok(Run { map, spec, steps })
    }

    fn afv_point(&self, params: &ModelParams, kernel: &Kernel, curve: &ForwardVarianceCurve, tau: f64) -> Result<SsrPoint> {
        match self.steps {
            None => ssr_afv(params, kernel, curve, tau, &self.spec),
            Some(n) => {
                let engine = AfvCharFn::new(params.rho, kernel, curve, RiccatiGrid::new(n, tau)?)?;
                ssr_afv_with(&engine, params.rho, tau, &self.spec)
            }
        }
    }
}

fn term_structure_rows(s: &mut String, prefix: &str, points: &[SsrPoint]) {
    for p in points {
        let _ = writeln!(s, "{prefix}{},{},{},{},{}", fmt17(p.tau), fmt17(p.sigma_atm), fmt17(p.skew), fmt17(p.beta), fmt17(p.ssr));
    }
}

pub fn ssr_afv_cmd(model: &ModelArgs, grid: &GridArgs, num: &NumericsArgs, v0_sweep: Option<&str>) -> Result<String> {
    let run = Run::new(model, grid, num)?;
    let taus = settings::maturities(&run.map, DEFAULT_GRID)?;
    let Some(sweep) = v0_sweep else {
        let cfg = settings::model(&run.map)?;
        let kernel = Kernel::new(cfg.kernel, &cfg.params)?;
        let points = taus.iter().map(|&t| run.afv_point(&cfg.params, &kernel, &cfg.curve, t)).collect::<Result<Vec<_>>>()?;
        return Ok(TermStructure::new("afv", cfg.params, cfg.curve, points)?.to_csv());
    };
    let mut out = format!("v0,{}\n", TermStructure::CSV_HEADER);
    for v0 in settings::parse_list("v0-sweep", sweep)? {
        let mut map = run.map.clone();
        map.set("v0", v0);
        let cfg = settings::model(&map)?;
        let kernel = Kernel::new(cfg.kernel, &cfg.params)?;
        let points = taus.iter().map(|&t| run.afv_point(&cfg.params, &kernel, &cfg.curve, t)).collect::<Result<Vec<_>>>()?;
        term_structure_rows(&mut out, &format!("{},", fmt17(v0)), &points);
    }
    Ok(out)
}

pub fn ssr_heston_cmd(model: &ModelArgs, grid: &GridArgs, num: &NumericsArgs) -> Result<String> {
    let run = Run::new(model, grid, num)?;
    let taus = settings::maturities(&run.map, DEFAULT_GRID)?;
    let cfg = settings::model(&run.map)?;
    let points = taus.iter().map(|&t| ssr_heston(&cfg.params, t, &run.spec)).collect::<Result<Vec<_>>>()?;
    Ok(TermStructure::new("heston", cfg.params, cfg.curve, points)?.to_csv())
}

pub fn ssr_forest_cmd(model: &ModelArgs, grid: &GridArgs, heston: bool) -> Result<String> {
    let run = Run::new(model, grid, &NumericsArgs::default())?;
    let taus = settings::maturities(&run.map, DEFAULT_GRID)?;
    let cfg = settings::model(&run.map)?;
    let kind = if heston { CatalogKind::HestonLambda0 } else { CatalogKind::RoughLambda0 };
    let mut out = String::from("tau,ssr_second_order,ssr_next_to_leading\n");
    for tau in taus {
        let c = tree_values(kind, &cfg.params, &cfg.curve, tau)?;
        let _ = writeln!(out, "{},{},{}", fmt17(tau), fmt17(ssr_second_order(&c)?), fmt17(ssr_next_to_leading(&c)?));
    }
    Ok(out)
}

pub fn ssr_compare_cmd(model: &ModelArgs, grid: &GridArgs, num: &NumericsArgs, hursts: &str) -> Result<String> {
    let run = Run::new(model, grid, num)?;
    let taus = settings::maturities(&run.map, (0.001, 0.1, 12))?;
    let mut out = String::from("tau,H,ssr_numeric,ssr_forest\n");
    for h in settings::parse_list("hurst-sweep", hursts)? {
        let mut map = run.map.clone();
        map.remove("alpha");
        map.set("hurst", h);
        let cfg = settings::model(&map)?;
        let kernel = Kernel::power_law(cfg.params.alpha, cfg.params.nu)?;
        for &tau in &taus {
            let num = run.afv_point(&cfg.params, &kernel, &cfg.curve, tau)?.ssr;
            let forest = ssr_next_to_leading(&tree_values(CatalogKind::RoughLambda0, &cfg.params, &cfg.curve, tau)?)?;
            let _ = writeln!(out, "{},{},{},{}", fmt17(tau), fmt17(h), fmt17(num), fmt17(forest));
        }
    }
    Ok(out)
}

pub struct SmileArgs<'a> {
    pub maturities: &'a str,
    pub strikes: usize,
    pub width: f64,
}

/// Strikes `+- width * sigma_atm * sqrt(tau)` around the money.
fn strike_grid(atm: &[SmileSlice], n: usize, width: f64) -> Vec<Vec<f64>> {
    atm.iter()
        .map(|s| {
            let half = width * s.points[0].iv * s.tau.sqrt();
            (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect()
        })
        .collect()
}

pub fn smile_cmd(model: &ModelArgs, num: &NumericsArgs, sa: &SmileArgs<'_>) -> Result<String> {
    let run = Run::new(model, &GridArgs::default(), num)?;
    let cfg = settings::model(&run.map)?;
    let kernel = Kernel::new(cfg.kernel, &cfg.params)?;
    let taus = settings::parse_list("maturities", sa.maturities)?;
    if sa.strikes < 2 || !(sa.width > 0.0) {
        return Err(Error::Config { key: "strikes".into(), message: "need at least 2 strikes and a positive width".into() });
    }
    let tau_max = taus.iter().cloned().fold(0.0, f64::max);
    let grid = RiccatiGrid::new(run.steps.unwrap_or(576), tau_max)?;
    let atm_req: Vec<(f64, Vec<f64>)> = taus.iter().map(|&t| (t, vec![0.0])).collect();
    let atm = afv_smiles(cfg.params.rho, &kernel, &cfg.curve, grid, &atm_req, &run.spec)?;
    let req: Vec<(f64, Vec<f64>)> = taus.iter().cloned().zip(strike_grid(&atm, sa.strikes, sa.width)).collect();
    let slices = afv_smiles(cfg.params.rho, &kernel, &cfg.curve, grid, &req, &run.spec)?;
    let mut out = String::from("tau,k,iv\n");
    for s in &slices {
        for p in &s.points {
            let _ = writeln!(out, "{},{},{}", fmt17(p.tau), fmt17(p.k), fmt17(p.iv));
        }
    }
    Ok(out)
}

pub struct CalibrateArgs<'a> {
    pub lambdas: &'a str,
    pub reference: (f64, f64),
    pub rho: f64,
    pub xi: f64,
    pub init: Option<&'a str>,
    pub max_evals: Option<usize>,
    pub riccati_steps: Option<usize>,
    pub ssr_maturities: Vec<f64>,
    /// Term structures of the quoted reference sets instead of the fitted ones.
    pub ssr_of_reference: bool,
}

pub struct Calibration {
    pub report: String,
    pub smiles_csv: String,
    pub ssr_csv: String,
}

/// Starting point when none is given; the fits move to larger H and nu as lambda grows.
fn default_init(lambda: f64) -> (f64, f64) {
    ((0.15 + 0.075 * lambda).min(0.45), 0.5 + 0.05 * lambda)
}

pub fn calibrate_cmd(ca: &CalibrateArgs<'_>) -> Result<Calibration> {
    let mut setup = CalibrationSetup { rho: ca.rho, xi: ca.xi, ..Default::default() };
    if let Some(n) = ca.max_evals {
        setup.optimizer.max_evals = n;
    }
    if let Some(n) = ca.riccati_steps {
        setup.grid_steps = n;
    }
    let init = match ca.init {
        None => None,
        Some(s) => match settings::parse_list("init", s)?.as_slice() {
            [h, nu] => Some((*h, *nu)),
            _ => return Err(Error::Config { key: "init".into(), message: "expected H,nu".into() }),
        },
    };
    let lambdas = settings::parse_list("lambda", ca.lambdas)?;
    let (h0, nu0) = ca.reference;
    let targets = setup.targets(h0, nu0, 0.0)?;
    let mut report = String::new();
    let _ = writeln!(report, "reference_h = {h0}\nreference_nu = {nu0}\nreference_lambda = 0\nrho = {}\nxi = {}", ca.rho, ca.xi);
    let mut smiles_csv = String::from("lambda,tau,k,iv_target,iv_model\n");
    let mut ssr_csv = String::from("lambda,h,nu,tau,ssr\n");
    for lambda in lambdas {
        let fit: CalibrationResult = calibrate_smile(lambda, &targets, init.unwrap_or(default_init(lambda)), &setup)?;
        let _ = writeln!(
            report,
            "\nlambda = {}\nh_fit = {}\nnu_fit = {}\nobjective = {}\niterations = {}\nconverged = {}",
            fit.lambda_fixed,
            fmt17(fit.h_fit),
            fmt17(fit.nu_fit),
            fmt17(fit.objective),
            fit.iterations,
            fit.converged
        );
        let strikes: Vec<Vec<f64>> = targets.iter().map(SmileSlice::strikes).collect();
        let model = setup.model_smiles(fit.h_fit, fit.nu_fit, lambda, &strikes)?;
        for (t, m) in targets.iter().zip(&model) {
            for (pt, pm) in t.points.iter().zip(&m.points) {
                let _ = writeln!(smiles_csv, "{},{},{},{},{}", fmt17(lambda), fmt17(pt.tau), fmt17(pt.k), fmt17(pt.iv), fmt17(pm.iv));
            }
        }
        let (h, nu) = if ca.ssr_of_reference && !ca.ssr_maturities.is_empty() {
            let set = REFERENCE_SETS.iter().find(|s| s.0 == lambda).ok_or_else(|| Error::Config {
                key: "ssr-of".into(),
                message: format!("no reference set for lambda = {lambda}"),
            })?;
            (set.1, set.2)
        } else {
            (fit.h_fit, fit.nu_fit)
        };
        let p = ModelParams::from_hurst(h, nu, lambda, ca.rho, ca.xi, ca.xi)?;
        let kernel = Kernel::mittag_leffler(p.alpha, p.nu, p.lambda)?;
        let curve = ForwardVarianceCurve::flat(ca.xi)?;
        for &tau in &ca.ssr_maturities {
            let r = ssr_afv(&p, &kernel, &curve, tau, &setup.spec)?.ssr;
            let _ = writeln!(ssr_csv, "{},{},{},{},{}", fmt17(lambda), fmt17(h), fmt17(nu), fmt17(tau), fmt17(r));
        }
    }
    Ok(Calibration { report, smiles_csv, ssr_csv })
}

pub fn discreteness_cmd(gammas: &str, epsilons: &str) -> Result<String> {
    let mut reports = vec![];
    for g in settings::parse_list("gamma", gammas)? {
        for e in settings::parse_list("epsilon", epsilons)? {
            reports.push(power_law_report(g, e)?);
        }
    }
    Ok(reports_to_csv(&reports))
}

pub fn limits_cmd(model: &ModelArgs, num: &NumericsArgs, hursts: &str, tau: f64) -> Result<String> {
    let run = Run::new(model, &GridArgs::default(), num)?;
    let mut out = String::from("H,tau,ssr_afv,limit\n");
    for h in settings::parse_list("hurst-sweep", hursts)? {
        let mut map = run.map.clone();
        map.remove("alpha");
        map.set("hurst", h);
        let cfg = settings::model(&map)?;
        let kernel = Kernel::new(cfg.kernel, &cfg.params)?;
        let r = run.afv_point(&cfg.params, &kernel, &cfg.curve, tau)?.ssr;
        let _ = writeln!(out, "{},{},{},{}", fmt17(h), fmt17(tau), fmt17(r), fmt17(h + 1.5));
    }
    Ok(out)
}
