use std::io::BufReader;
use std::process::ExitCode;

use clap::Args;

use ringpar::metrics::{
    cost_model_from_json, crossover as model_crossover, fit_cost_model, predict_time,
    read_samples_csv, Architecture, TimingSample,
};

use crate::CliResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub(crate) enum ModelArg {
    Ps,
    Ring,
}

impl ModelArg {
    fn architecture(self) -> Architecture {
        match self {
            ModelArg::Ps => Architecture::Ps,
            ModelArg::Ring => Architecture::Ring,
        }
    }
}

#[derive(Args)]
pub(crate) struct FitArgs {
    /// Timing CSV with columns n,t_seconds (extra columns ignored)
    #[arg(long)]
    pub input: std::path::PathBuf,

    /// Which cost-model basis to fit
    #[arg(long, value_enum)]
    pub model: ModelArg,

    /// Output JSON path
    #[arg(long)]
    pub out: std::path::PathBuf,
}

pub(crate) fn fit(args: &FitArgs) -> CliResult {
    let file = std::fs::File::open(&args.input)
        .map_err(|e| format!("cannot read {}: {e}", args.input.display()))?;
    let all = read_samples_csv(BufReader::new(file))?;
    let (samples, baseline): (Vec<TimingSample>, Vec<TimingSample>) =
        all.into_iter().partition(|s| s.workers >= 2);
    if !baseline.is_empty() {
        eprintln!(
            "note: {} single-worker row(s) excluded from the fit (the models are defined \
             for n >= 2; n=1 rows serve as the t0 of speed ratios)",
            baseline.len()
        );
    }
    let report = fit_cost_model(&samples, args.model.architecture())?;
    std::fs::write(&args.out, report.to_json())
        .map_err(|e| format!("cannot write {}: {e}", args.out.display()))?;

    println!(
        "fitted {} model: T={:.6} C={:.6} P={:.6} residual_rms={:.6e} valid={}",
        report.model.architecture,
        report.model.single_worker_time,
        report.model.comm_coeff,
        report.model.overhead,
        report.residual_rms,
        report.valid
    );
    if !report.valid {
        for (name, value) in [
            ("T", report.model.single_worker_time),
            ("C", report.model.comm_coeff),
            ("P", report.model.overhead),
        ] {
            if value < 0.0 {
                eprintln!(
                    "warning: fitted {name} = {value:.4} is negative; the model is not \
                     physically meaningful for this data"
                );
            }
        }
        if report.model.single_worker_time == 0.0 {
            eprintln!("warning: fitted T = 0; the model is not physically meaningful");
        }
    }
    println!("wrote {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub(crate) struct PredictArgs {
    /// Model JSON as written by `fit`
    #[arg(long)]
    pub model: std::path::PathBuf,

    /// Worker count to evaluate at
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub n: u32,
}

pub(crate) fn predict(args: &PredictArgs) -> CliResult {
    let json = std::fs::read_to_string(&args.model)
        .map_err(|e| format!("cannot read {}: {e}", args.model.display()))?;
    let model = cost_model_from_json(&json)?;
    let seconds = predict_time(&model, args.n)?;
    println!("{seconds}");
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub(crate) struct CrossoverArgs {
    /// Server model JSON
    #[arg(long)]
    pub ps: std::path::PathBuf,

    /// Ring model JSON
    #[arg(long)]
    pub ring: std::path::PathBuf,

    /// Largest worker count to scan
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u32).range(2..))]
    pub n_max: u32,
}

pub(crate) fn crossover(args: &CrossoverArgs) -> CliResult {
    let load = |path: &std::path::Path| -> Result<_, Box<dyn std::error::Error>> {
        let json = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Ok(cost_model_from_json(&json)?)
    };
    let ps = load(&args.ps)?;
    let ring = load(&args.ring)?;
    match model_crossover(&ps, &ring, args.n_max)? {
        Some(n) => println!("{n}"),
        None => println!("none"),
    }
    Ok(ExitCode::SUCCESS)
}
