//! Library side of the `stripscat` command: configuration, dispatch and
//! report formatting. The binary only parses arguments and maps the outcome
//! to an exit code.

mod args;
mod report;

use std::io::Write;
use std::path::PathBuf;

use serde_json::{json, Value};
use strip_scatter::embedding::{convergence_sweep, SweepOptions};
use strip_scatter::io::{EnergyGrid, FormatError, ModelFile};
use strip_scatter::reduction::reduce_with_channels;
use strip_scatter::scattering::{
    conductance_samples, conductance_scan, landauer_conductance, scattering_from_reduced, transmission_spectrum,
};
use strip_scatter::transfer::block_transfer;
use strip_scatter::{classify_channels, DisorderKind, DisorderSpec, Error, Tolerances64};

pub use args::{parse_args, Cli};
use report::{matrix_json, matrix_rows, num, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Channels,
    Transfer,
    Scatter,
    Embed,
    Sweep,
    Disorder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Energy {
    Single(f64),
    Grid(EnergyGrid),
}

impl Energy {
    fn points(&self) -> Vec<f64> {
        match self {
            Energy::Single(e) => vec![*e],
            Energy::Grid(g) => g.points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub model_path: PathBuf,
    pub energy: Energy,
    pub m_max: usize,
    pub seed: u64,
    pub samples: usize,
    pub strength: Option<f64>,
    pub tolerances: Tolerances64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

/// Failure of a run, carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub exit_code: i32,
    pub code: String,
    pub message: String,
    pub context: Value,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            exit_code: 1,
            code: "Usage".into(),
            message: message.into(),
            context: json!({}),
        }
    }

    /// `{code, message, context}`.
    pub fn to_json(&self) -> String {
        json!({"code": self.code, "message": self.message, "context": self.context}).to_string()
    }
}

fn error_context(e: &Error) -> Value {
    match e {
        Error::ParabolicChannel { energy, channel, distance } => {
            json!({"energy": energy, "channel": channel, "distance": distance})
        }
        Error::SingularAE { energy, sigma_min, threshold } => {
            json!({"energy": energy, "sigma_min": sigma_min, "threshold": threshold})
        }
        Error::SingularSystem { energy, sigma_min } => json!({"energy": energy, "sigma_min": sigma_min}),
        Error::NonInvertibleTransmission { sigma_min } => json!({"sigma_min": sigma_min}),
        Error::NoElasticChannel { energy } => json!({"energy": energy}),
        Error::NotPseudoUnitary { residual } => json!({"residual": residual}),
        Error::StructureViolation { structure, residual, tolerance } => {
            json!({"structure": structure, "residual": residual, "tolerance": tolerance})
        }
        Error::NotHermitian { deviation } => json!({"deviation": deviation}),
        Error::DimensionMismatch { expected, found } => json!({"expected": expected, "found": found}),
        Error::InvalidModel(_) | Error::NonFinite(_) => json!({}),
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self {
            exit_code: if e.is_domain() { 2 } else { 1 },
            code: e.code().into(),
            message: e.to_string(),
            context: error_context(&e),
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Model(inner) => inner.into(),
            FormatError::Io { .. } => Self {
                exit_code: 1,
                code: "Io".into(),
                message: e.to_string(),
                context: json!({}),
            },
            FormatError::Json(_) => Self {
                exit_code: 1,
                code: "Parse".into(),
                message: e.to_string(),
                context: json!({}),
            },
        }
    }
}

fn single_energy(cfg: &RunConfig) -> Result<f64, CliError> {
    match cfg.energy {
        Energy::Single(e) => Ok(e),
        Energy::Grid(_) => Err(CliError::usage("this command takes --energy, not --grid")),
    }
}

/// Runs the configured command and returns the report text.
pub fn render(cfg: &RunConfig) -> Result<String, CliError> {
    let file = ModelFile::load(&cfg.model_path)?;
    let tol = &cfg.tolerances;
    match cfg.command {
        Command::Channels => channels(&file, single_energy(cfg)?, cfg.format, tol),
        Command::Transfer => transfer(&file, single_energy(cfg)?, cfg.format, tol),
        Command::Scatter => scatter(&file, single_energy(cfg)?, cfg.format, tol),
        Command::Embed => embed(&file, single_energy(cfg)?, cfg, tol),
        Command::Sweep => sweep(&file, &cfg.energy.points(), cfg.format, tol),
        Command::Disorder => disorder(&file, single_energy(cfg)?, cfg, tol),
    }
}

/// Renders the report and writes it to `--out` or standard output.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let text = render(cfg)?;
    let io_error = |e: std::io::Error| CliError {
        exit_code: 1,
        code: "Io".into(),
        message: e.to_string(),
        context: json!({}),
    };
    match &cfg.out {
        Some(path) => std::fs::write(path, text).map_err(io_error),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(io_error),
    }
}

fn channels(file: &ModelFile, energy: f64, format: Format, tol: &Tolerances64) -> Result<String, CliError> {
    let ch = classify_channels(&file.cable()?, energy, tol.parabolic)?;
    let h = ch.hyperbolic_count();
    Ok(match format {
        Format::Json => json!({
            "energy": energy,
            "s": ch.s,
            "k": ch.k,
            "gamma": ch.gamma,
            "u": ch.u,
            "lambda": ch.lambda,
        })
        .to_string(),
        Format::Csv => {
            let mut t = Table::new(&["alpha", "class", "lambda", "k_or_gamma", "u"]);
            for (a, k) in ch.k.iter().enumerate() {
                t.row([(a + 1).to_string(), "elliptic".into(), num(ch.lambda[a]), num(*k), String::new()]);
            }
            for i in 0..h {
                let a = ch.s + i;
                t.row([
                    (a + 1).to_string(),
                    "hyperbolic".into(),
                    num(ch.lambda[a]),
                    num(ch.gamma[i]),
                    ch.u[i].to_string(),
                ]);
            }
            t.finish()
        }
    })
}

fn matrices_report(energy: f64, extra: Value, mats: &[(&str, &strip_scatter::StructuredMatrix<f64>)], format: Format) -> String {
    match format {
        Format::Json => {
            let mut obj = json!({
                "energy": energy,
                "matrices": mats.iter().map(|(n, m)| matrix_json(n, m)).collect::<Vec<_>>(),
            });
            if let (Value::Object(o), Value::Object(e)) = (&mut obj, extra) {
                o.extend(e);
            }
            obj.to_string()
        }
        Format::Csv => {
            let mut t = Table::new(&["matrix", "row", "col", "re", "im", "structure", "structure_residual"]);
            for (n, m) in mats {
                matrix_rows(&mut t, n, m);
            }
            t.finish()
        }
    }
}

fn transfer(file: &ModelFile, energy: f64, format: Format, tol: &Tolerances64) -> Result<String, CliError> {
    let model = file.model()?;
    let ch = classify_channels(model.cable(), energy, tol.parabolic)?;
    let t = block_transfer(model.scatterer(), energy)?;
    let red = reduce_with_channels(&model, &ch, tol)?;
    let extra = json!({"s": ch.s, "sigma_min_ae": red.sigma_min_ae, "near_singular": red.near_singular});
    Ok(matrices_report(
        energy,
        extra,
        &[("T", t.structured()), ("T_hat", &red.t_hat), ("T_tilde", &red.t_tilde)],
        format,
    ))
}

fn scatter(file: &ModelFile, energy: f64, format: Format, tol: &Tolerances64) -> Result<String, CliError> {
    let model = file.model()?;
    let ch = classify_channels(model.cable(), energy, tol.parabolic)?;
    let red = reduce_with_channels(&model, &ch, tol)?;
    let s = scattering_from_reduced(&red, model.length(), tol)?;
    let extra = json!({
        "s": ch.s,
        "conductance": landauer_conductance(&s),
        "transmission": transmission_spectrum(&s),
    });
    Ok(matrices_report(energy, extra, &[("S", s.structured())], format))
}

fn embed(file: &ModelFile, energy: f64, cfg: &RunConfig, tol: &Tolerances64) -> Result<String, CliError> {
    if cfg.m_max == 0 {
        return Err(CliError::usage("--m-max must be at least 1"));
    }
    let model = file.model()?;
    let ch = classify_channels(model.cable(), energy, tol.parabolic)?;
    let sweep = convergence_sweep(&model, &ch, &SweepOptions::new(cfg.m_max), tol)?;
    Ok(match cfg.format {
        Format::Json => json!({
            "energy": energy,
            "s": sweep.s,
            "gamma_min": sweep.gamma_min,
            "burn_in": sweep.burn_in,
            "truncated_at": sweep.truncated_at,
            "fitted_slope": sweep.fitted_slope(1e-12),
            "m": sweep.m_values,
            "residual": sweep.residuals,
            "unitarity_residual": sweep.unitarity_residuals,
            "elliptic_residual": sweep.elliptic_residuals,
        })
        .to_string(),
        Format::Csv => {
            let mut t = Table::new(&["m", "residual", "unitarity_residual"]);
            for (i, m) in sweep.m_values.iter().enumerate() {
                t.row([m.to_string(), num(sweep.residuals[i]), num(sweep.unitarity_residuals[i])]);
            }
            t.finish()
        }
    })
}

fn status_name(p: &strip_scatter::scattering::ConductancePoint<f64>) -> &'static str {
    use strip_scatter::reduction::ScanStatus;
    match p.status {
        ScanStatus::Parabolic => "parabolic",
        ScanStatus::Flagged => "singular_ae",
        ScanStatus::NearSingular => "near_singular",
        ScanStatus::Regular if p.s == Some(0) => "no_elastic",
        ScanStatus::Regular => "regular",
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn sweep(file: &ModelFile, grid: &[f64], format: Format, tol: &Tolerances64) -> Result<String, CliError> {
    let model = file.model()?;
    let points = conductance_scan(&model, grid, tol)?;
    Ok(match format {
        Format::Json => {
            let rows: Vec<Value> = points
                .iter()
                .map(|p| {
                    json!({
                        "E": p.energy,
                        "s": p.s,
                        "sigma_min_AE": p.sigma_min,
                        "g_landauer": p.conductance,
                        "flags": status_name(p),
                    })
                })
                .collect();
            json!({ "points": rows }).to_string()
        }
        Format::Csv => {
            let mut t = Table::new(&["E", "s", "sigma_min_AE", "g_landauer", "flags"]);
            for p in &points {
                t.row([
                    num(p.energy),
                    p.s.map(|s| s.to_string()).unwrap_or_default(),
                    opt(p.sigma_min),
                    opt(p.conductance),
                    status_name(p).to_string(),
                ]);
            }
            t.finish()
        }
    })
}

fn disorder(file: &ModelFile, energy: f64, cfg: &RunConfig, tol: &Tolerances64) -> Result<String, CliError> {
    if cfg.samples == 0 {
        return Err(CliError::usage("--samples must be at least 1"));
    }
    let cable = file.cable()?;
    let base = match file.disorder_spec()? {
        Some(spec) => spec,
        None => {
            let length = file.scatterer.len().max(1);
            DisorderSpec::new(DisorderKind::AndersonDiagonal, 0.0, length)?
        }
    };
    let strength = cfg.strength.unwrap_or(base.strength);
    let spec = DisorderSpec::new(base.kind, strength, base.length)?;
    // Fails early on a band edge or an energy without elastic channels.
    let ch = classify_channels(&cable, energy, tol.parabolic)?;
    if ch.s == 0 {
        return Err(Error::NoElasticChannel { energy }.into());
    }
    let results = conductance_samples(&cable, &spec, energy, cfg.samples, cfg.seed, tol);
    let values: Vec<Option<f64>> = results.iter().map(|r| r.as_ref().ok().copied()).collect();
    let ok: Vec<f64> = values.iter().flatten().copied().collect();
    let mean = if ok.is_empty() { None } else { Some(ok.iter().sum::<f64>() / ok.len() as f64) };
    Ok(match cfg.format {
        Format::Json => json!({
            "energy": energy,
            "kind": spec.kind,
            "strength": strength,
            "length": spec.length,
            "seed": cfg.seed,
            "samples": cfg.samples,
            "s": ch.s,
            "mean": mean,
            "failures": results.iter().filter(|r| r.is_err()).count(),
            "g_landauer": values,
        })
        .to_string(),
        Format::Csv => {
            let mut t = Table::new(&["sample", "g_landauer", "flags"]);
            for (i, r) in results.iter().enumerate() {
                let (g, flag) = match r {
                    Ok(g) => (num(*g), "ok".to_string()),
                    Err(e) => (String::new(), e.code().to_string()),
                };
                t.row([i.to_string(), g, flag]);
            }
            t.finish()
        }
    })
}
