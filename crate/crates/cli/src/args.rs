use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use strip_scatter::io::EnergyGrid;
use strip_scatter::Tolerances64;

use crate::{CliError, Command, Energy, Format, RunConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CommandArg {
    Channels,
    Transfer,
    Scatter,
    Embed,
    Sweep,
    Disorder,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// Transfer and scattering matrices of scatterers in discrete strips.
#[derive(Debug, Parser)]
#[command(name = "stripscat", version)]
pub struct Cli {
    #[arg(value_enum)]
    command: CommandArg,

    /// Model file (JSON).
    #[arg(long, value_name = "PATH")]
    model: PathBuf,

    /// Single energy.
    #[arg(long, value_name = "X", conflicts_with = "grid", allow_hyphen_values = true)]
    energy: Option<f64>,

    /// Inclusive energy grid.
    #[arg(long, num_args = 3, value_names = ["START", "STOP", "COUNT"], allow_hyphen_values = true)]
    grid: Option<Vec<String>>,

    #[arg(long = "m-max", value_name = "N", default_value_t = 30)]
    m_max: usize,

    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,

    #[arg(long, value_name = "N", default_value_t = 1000)]
    samples: usize,

    /// Overrides the disorder strength of the model file.
    #[arg(long, value_name = "X")]
    strength: Option<f64>,

    /// Output file; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,

    /// Tolerance override, repeatable. Names: structure, parabolic, sigma,
    /// inv, singular, hermitian, completion.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    tol: Vec<String>,
}

fn parse_grid(raw: &[String]) -> Result<EnergyGrid, CliError> {
    let bad = || CliError::usage(format!("--grid expects START STOP COUNT, got {}", raw.join(" ")));
    let [start, stop, count] = raw else { return Err(bad()) };
    let start: f64 = start.parse().map_err(|_| bad())?;
    let stop: f64 = stop.parse().map_err(|_| bad())?;
    let count: usize = count.parse().map_err(|_| bad())?;
    EnergyGrid::new(start, stop, count).map_err(|e| CliError::usage(e.to_string()))
}

fn parse_tolerances(raw: &[String]) -> Result<Tolerances64, CliError> {
    let mut tol = Tolerances64::default();
    for item in raw {
        let bad = || CliError::usage(format!("--tol expects NAME=VALUE with a known name and positive value, got {item}"));
        let (name, value) = item.split_once('=').ok_or_else(bad)?;
        let value: f64 = value.parse().map_err(|_| bad())?;
        if !value.is_finite() || !tol.set(name, value) {
            return Err(bad());
        }
    }
    Ok(tol)
}

impl Cli {
    pub fn into_config(self) -> Result<RunConfig, CliError> {
        let energy = match (self.energy, &self.grid) {
            (Some(e), None) => Energy::Single(e),
            (None, Some(g)) => Energy::Grid(parse_grid(g)?),
            _ => return Err(CliError::usage("exactly one of --energy or --grid is required")),
        };
        let command = match self.command {
            CommandArg::Channels => Command::Channels,
            CommandArg::Transfer => Command::Transfer,
            CommandArg::Scatter => Command::Scatter,
            CommandArg::Embed => Command::Embed,
            CommandArg::Sweep => Command::Sweep,
            CommandArg::Disorder => Command::Disorder,
        };
        let format = match self.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
        Ok(RunConfig {
            command,
            model_path: self.model,
            energy,
            m_max: self.m_max,
            seed: self.seed,
            samples: self.samples,
            strength: self.strength,
            tolerances: parse_tolerances(&self.tol)?,
            out: self.out,
            format,
        })
    }
}

/// Parses a full argument list. Help and version requests come back as
/// `Ok(None)` after being printed.
pub fn parse_args<I, S>(args: I) -> Result<Option<RunConfig>, CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => cli.into_config().map(Some),
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            Ok(None)
        }
        Err(e) => Err(CliError::usage(e.to_string().trim_end())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_and_tolerances() {
        let cfg = parse_args([
            "stripscat", "sweep", "--model", "m.json", "--grid", "-1", "1", "3", "--tol", "sigma=1e-6",
        ])
        .unwrap()
        .unwrap();
        assert_eq!(cfg.command, Command::Sweep);
        assert_eq!(cfg.energy.points(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(cfg.tolerances.sigma, 1e-6);
    }

    #[test]
    fn rejects_bad_input() {
        for args in [
            vec!["stripscat", "scatter", "--model", "m.json"],
            vec!["stripscat", "scatter", "--model", "m.json", "--energy", "0", "--tol", "sigma=-1"],
            vec!["stripscat", "scatter", "--model", "m.json", "--energy", "0", "--tol", "nope=1"],
            vec!["stripscat", "sweep", "--model", "m.json", "--grid", "0", "1", "0"],
            vec!["stripscat", "bogus", "--model", "m.json", "--energy", "0"],
        ] {
            let err = parse_args(args).unwrap_err();
            assert_eq!(err.exit_code, 1);
        }
    }

    #[test]
    fn negative_energy() {
        let cfg = parse_args(["stripscat", "channels", "--model", "m.json", "--energy", "-0.5"])
            .unwrap()
            .unwrap();
        assert_eq!(cfg.energy, Energy::Single(-0.5));
    }
}
