use std::path::Path;

use aggregation_core::analytic::collective_error_asymptotic;
use aggregation_core::optimizer::RowStatus;
use aggregation_core::simulate::TrialConfig;
use aggregation_core::{
    check_table_csv, distortion_of_rate, fit_scaling_beta, ln_error_ratio, rate_of_distortion,
    run_batch, sweep_fig2_fig3, threshold_report, AggregationPoint, Capacity, Distortion,
    DistortionModel, DistortionTable, Error, NoiseLevel, Rate, ShannonModel, TableModel,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::args::{
    Command, ErrorCurveArgs, Grid, ModelSpec, RdArgs, ScalingArgs, SimulateArgs, SweepRatesArgs,
    ValidateTableArgs,
};
use crate::output::{
    csv_text, fmt_f64, fmt_opt, Payload, EXIT_INTERNAL, EXIT_NONCONVERGENCE, EXIT_OK, EXIT_USAGE,
    EXIT_VALIDATION,
};

/// A failed command with the exit code it maps to.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonConvergence(_) => EXIT_NONCONVERGENCE,
            Error::InvalidTable { .. } | Error::EmptyTable => EXIT_VALIDATION,
            Error::WorkerPool(_) => EXIT_INTERNAL,
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

pub(crate) struct Outcome {
    pub payload: Payload,
    pub exit_code: i32,
    pub diagnostics: Vec<String>,
}

impl Outcome {
    fn ok(payload: Payload) -> Self {
        Outcome {
            payload,
            exit_code: EXIT_OK,
            diagnostics: Vec::new(),
        }
    }
}

pub fn load_model(spec: &ModelSpec) -> Result<Box<dyn DistortionModel>, CliError> {
    Ok(match spec {
        ModelSpec::Shannon => Box::new(ShannonModel),
        ModelSpec::Table(path) => {
            let table = DistortionTable::from_path(path)?;
            Box::new(TableModel::new(table, format!("table:{}", path.display())))
        }
    })
}

fn noise_levels(grid: &Grid) -> Result<Vec<NoiseLevel>, CliError> {
    grid.values
        .iter()
        .map(|&p| NoiseLevel::new(p).map_err(CliError::from))
        .collect()
}

pub(crate) fn execute(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Rd(a) => rd(a),
        Command::Thresholds(a) => {
            let model = load_model(&a.model)?;
            let report = threshold_report(model.as_ref())?;
            Ok(Outcome::ok(Payload::Json(to_json(&report))))
        }
        Command::SweepRates(a) => sweep_rates(a),
        Command::ErrorCurve(a) => error_curve(a),
        Command::Scaling(a) => scaling(a),
        Command::Simulate(a) => simulate(a),
        Command::ValidateTable(a) => validate_table(a),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("result types serialize")
}

fn rd(a: &RdArgs) -> Result<Outcome, CliError> {
    let value = match (a.dist, a.rate) {
        (Some(d), None) => rate_of_distortion(Distortion::new(d)?),
        (None, Some(r)) => distortion_of_rate(Rate::new(r)?).get(),
        _ => return Err(CliError::usage("give exactly one of --dist or --rate")),
    };
    Ok(Outcome::ok(Payload::Text(format!("{}\n", fmt_f64(value)))))
}

pub const SWEEP_RATES_HEADER: [&str; 9] = [
    "p",
    "r_star",
    "r_dagger",
    "i_star",
    "i_one",
    "i_zero",
    "gain_star",
    "gain_zero",
    "status",
];

fn sweep_rates(a: &SweepRatesArgs) -> Result<Outcome, CliError> {
    let model = load_model(&a.model.model)?;
    let grid = noise_levels(&a.p_grid)?;
    let rows: Vec<Vec<String>> = sweep_fig2_fig3(&grid, model.as_ref())?
        .iter()
        .map(|e| {
            let (status, gains) = match e.status {
                RowStatus::Ok => ("ok", Some(e.gain)),
                // infinite decay rates leave no meaningful difference
                RowStatus::DegenerateNoiseless => ("degenerate_noiseless", None),
            };
            vec![
                fmt_f64(e.optimum.p.get()),
                fmt_f64(e.optimum.r_star),
                fmt_opt(e.r_dagger),
                fmt_f64(e.optimum.i_at_star),
                fmt_f64(e.optimum.i_at_one),
                fmt_opt(e.optimum.i_at_zero),
                fmt_opt(gains.map(|g| g.gain_star)),
                fmt_opt(gains.and_then(|g| g.gain_zero)),
                status.to_owned(),
            ]
        })
        .collect();
    Ok(Outcome::ok(Payload::Csv(csv_text(
        &SWEEP_RATES_HEADER,
        &rows,
    ))))
}

pub const ERROR_CURVE_HEADER: [&str; 12] = [
    "p",
    "r",
    "lambda",
    "l_sensors",
    "rho",
    "p_e_exact",
    "p_e_asymptotic",
    "ratio_to_lossless",
    "ln_ratio",
    "log10_ratio",
    "ln_p_e_exact",
    "status",
];

fn error_curve(a: &ErrorCurveArgs) -> Result<Outcome, CliError> {
    let model = load_model(&a.model.model)?;
    let model = model.as_ref();
    let grid = noise_levels(&a.p_grid)?;
    let lambda = Capacity::new(a.lambda)?;
    let rates = a
        .rates
        .iter()
        .map(|&r| Rate::new(r))
        .collect::<Result<Vec<_>, _>>()?;
    let cells: Vec<(NoiseLevel, Rate)> = grid
        .iter()
        .flat_map(|&p| rates.iter().map(move |&r| (p, r)))
        .collect();

    let rows = cells
        .par_iter()
        .map(|&(p, r)| -> Result<Vec<String>, CliError> {
            let point = AggregationPoint::new(p, r, lambda, model)?;
            let (ratio, status) = match ln_error_ratio(p, r, lambda, model) {
                Ok(ln) => (Some(ln), "ok"),
                Err(Error::Degenerate(_)) => (None, "degenerate_reference"),
                Err(e) => return Err(e.into()),
            };
            Ok(vec![
                fmt_f64(p.get()),
                fmt_f64(r.get()),
                fmt_f64(lambda.get()),
                point.l_sensors.to_string(),
                fmt_f64(point.rho),
                fmt_f64(point.exact_error()),
                fmt_f64(collective_error_asymptotic(&point)),
                fmt_opt(ratio.map(f64::exp)),
                fmt_opt(ratio),
                fmt_opt(ratio.map(|ln| ln / std::f64::consts::LN_10)),
                fmt_f64(point.ln_exact_error()),
                status.to_owned(),
            ])
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Outcome::ok(Payload::Csv(csv_text(
        &ERROR_CURVE_HEADER,
        &rows,
    ))))
}

fn scaling(a: &ScalingArgs) -> Result<Outcome, CliError> {
    let model = load_model(&a.model.model)?;
    let model = model.as_ref();
    let p = NoiseLevel::new(a.p)?;
    let r = Rate::new(a.r)?;
    let base = Capacity::new(a.lambda)?;
    let log10 = |lambda| ln_error_ratio(p, r, lambda, model).map(|ln| ln / std::f64::consts::LN_10);

    let mut rows = Vec::with_capacity(a.betas.len());
    for &beta in &a.betas {
        let lambda = base.scaled(beta)?;
        let row = match fit_scaling_beta(p, r, base, lambda, model) {
            Ok(beta_hat) => json!({
                "beta": beta,
                "lambda": lambda.get(),
                "beta_hat": beta_hat,
                "deviation": (beta_hat - beta).abs(),
                "log10_ratio": log10(lambda)?,
                "error": null,
            }),
            Err(Error::Degenerate(msg)) => json!({
                "beta": beta,
                "lambda": lambda.get(),
                "beta_hat": null,
                "deviation": null,
                "log10_ratio": null,
                "error": msg,
            }),
            Err(e) => return Err(e.into()),
        };
        rows.push(row);
    }
    let base_log10 = match log10(base) {
        Ok(v) => Some(v),
        Err(Error::Degenerate(_)) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(Outcome::ok(Payload::Json(json!({
        "p": p.get(),
        "r": r.get(),
        "lambda": base.get(),
        "model": model.id(),
        "log10_ratio_base": base_log10,
        "rows": rows,
    }))))
}

fn simulate(a: &SimulateArgs) -> Result<Outcome, CliError> {
    let model = load_model(&a.model.model)?;
    let mut cfg = TrialConfig::new(
        NoiseLevel::new(a.p)?,
        Rate::new(a.r)?,
        Capacity::new(a.lambda)?,
        model.as_ref(),
    )
    .with_block(a.block, a.trials)
    .with_seed(a.seed)
    .with_budget_cap(a.budget_cap);
    if let Some(bits) = a.bits {
        cfg = cfg.with_total_bits(bits);
    }
    let result = run_batch(&cfg)?;
    Ok(Outcome::ok(Payload::Json(json!({
        "batch": result,
        "prediction": result.predicted(),
        "z_score": result.z_score(),
    }))))
}

fn validate_table(a: &ValidateTableArgs) -> Result<Outcome, CliError> {
    let text = read_text(&a.path)?;
    let report = check_table_csv(&text);
    let passed = report.passed();
    let diagnostics = report
        .issues
        .iter()
        .map(|i| format!("{}:{}: {}", a.path.display(), i.line, i.message))
        .collect();
    Ok(Outcome {
        payload: Payload::Json(json!({
            "path": a.path.display().to_string(),
            "passed": passed,
            "knots": report.knots,
            "issues": report.issues,
        })),
        exit_code: if passed { EXIT_OK } else { EXIT_VALIDATION },
        diagnostics,
    })
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}
