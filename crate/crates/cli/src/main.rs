//! `trendsim`: similarity analysis of dose-response curves across labs.

mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use trendsim_core::report::AnalysisReport;
use trendsim_core::synthetic;
use trendsim_core::{
    apply_transform, covariance, dunnett_matrix, equivalence_report, fit_cell_means,
    grand_mean_matrix, interaction_f_test, kronecker_interaction, load_csv, max_t_test,
    run_simulation, Alternative, ContrastMatrix, CovarianceKind, CsvSchema, DoseContrastChoice,
    EquivalenceMode, EquivalencePolicy, Error, ErrorClass, FactorLevels, QmcConfig,
    SimulationScenario, SimulationSettings, Transform, VariancePattern,
};

/// Exit codes: 0 success, 2 data/input errors, 3 numerical failures.
#[derive(Parser)]
#[command(
    name = "trendsim",
    version,
    about = "Equivalence of dose-response curves across laboratories via Williams-by-total-mean interaction contrasts",
    after_help = "Exit codes: 0 = success, 2 = data or input error, 3 = numerical failure.\n\
                  The --seed flag falls back to the TRENDSIM_SEED environment variable."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full analysis pipeline on a CSV dataset.
    Analyze(AnalyzeArgs),
    /// Print contrast matrices for a given design.
    Contrasts(ContrastsArgs),
    /// Render a forest plot (SVG) from an analysis report (JSON).
    Plot(PlotArgs),
    /// Estimate operating characteristics by simulation.
    Simulate(SimulateArgs),
    /// Write the bundled synthetic example dataset.
    Dataset(DatasetArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformArg {
    None,
    Log,
    Sqrt,
    FreemanTukey,
}

impl TransformArg {
    fn to_transform(self) -> Transform {
        match self {
            TransformArg::None => Transform::None,
            TransformArg::Log => Transform::Log,
            TransformArg::Sqrt => Transform::Sqrt,
            TransformArg::FreemanTukey => Transform::FreemanTukey,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VcovArg {
    Classical,
    Hc0,
    Hc1,
    Hc3,
}

impl VcovArg {
    fn to_kind(self) -> CovarianceKind {
        match self {
            VcovArg::Classical => CovarianceKind::Classical,
            VcovArg::Hc0 => CovarianceKind::Hc0,
            VcovArg::Hc1 => CovarianceKind::Hc1,
            VcovArg::Hc3 => CovarianceKind::Hc3,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DoseContrastArg {
    Williams,
    Highest,
}

impl DoseContrastArg {
    fn to_choice(self) -> DoseContrastChoice {
        match self {
            DoseContrastArg::Williams => DoseContrastChoice::Williams,
            DoseContrastArg::Highest => DoseContrastChoice::Highest,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AlternativeArg {
    TwoSided,
    Greater,
    Less,
}

impl AlternativeArg {
    fn to_alternative(self) -> Alternative {
        match self {
            AlternativeArg::TwoSided => Alternative::TwoSided,
            AlternativeArg::Greater => Alternative::Greater,
            AlternativeArg::Less => Alternative::Less,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    IutUit,
    IutIut,
}

impl PolicyArg {
    fn to_mode(self) -> EquivalenceMode {
        match self {
            PolicyArg::IutUit => EquivalenceMode::IutUit,
            PolicyArg::IutIut => EquivalenceMode::IutIut,
        }
    }
}

#[derive(Args)]
struct MvtArgs {
    /// Lattice points per random shift for multivariate t probabilities.
    #[arg(long, default_value_t = 100_000)]
    mvt_samples: u64,
    /// Number of random shifts the error estimate is computed across.
    #[arg(long, default_value_t = 12)]
    mvt_randomizations: u32,
    /// RNG seed (falls back to TRENDSIM_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
}

impl MvtArgs {
    fn to_config(&self) -> QmcConfig {
        QmcConfig {
            sample_budget: self.mvt_samples,
            randomizations: self.mvt_randomizations,
            seed: self.resolved_seed(),
            ..QmcConfig::default()
        }
    }

    fn resolved_seed(&self) -> u64 {
        self.seed
            .or_else(|| {
                std::env::var("TRENDSIM_SEED")
                    .ok()
                    .and_then(|s| s.parse().ok())
            })
            .unwrap_or(0)
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "lab")]
    lab_col: String,
    #[arg(long, default_value = "conc")]
    dose_col: String,
    #[arg(long, default_value = "response")]
    response_col: String,
    #[arg(long, value_enum, default_value_t = TransformArg::None)]
    transform: TransformArg,
    /// Dose-factor contrast family for the interaction.
    #[arg(long, value_enum, default_value_t = DoseContrastArg::Williams)]
    dose_contrast: DoseContrastArg,
    #[arg(long, value_enum, default_value_t = VcovArg::Hc3)]
    vcov: VcovArg,
    /// Per-direction equivalence level; two-sided similarity analyses use
    /// 1 - 2*alpha simultaneous intervals.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = AlternativeArg::TwoSided)]
    alternative: AlternativeArg,
    #[arg(long, value_enum, default_value_t = PolicyArg::IutUit)]
    policy: PolicyArg,
    /// Equivalence threshold: p strictly above it supports similarity.
    #[arg(long, default_value_t = 0.10)]
    p_threshold: f64,
    #[command(flatten)]
    mvt: MvtArgs,
    /// Write the JSON report here.
    #[arg(long)]
    out_json: Option<PathBuf>,
    /// Write the forest plot here.
    #[arg(long)]
    out_svg: Option<PathBuf>,
    /// Suppress the text report on stdout.
    #[arg(long, default_value_t = false)]
    quiet: bool,
}

#[derive(Args)]
struct ContrastsArgs {
    /// Number of laboratories.
    #[arg(long, default_value_t = 7)]
    labs: usize,
    /// Number of dose groups above the control.
    #[arg(long, default_value_t = 6)]
    doses: usize,
    /// Explicit dose levels (control first), comma separated; defaults to
    /// the geometric ladder 0, 0.5/2^(k-1), ..., 0.5.
    #[arg(long, value_delimiter = ',')]
    dose_levels: Option<Vec<f64>>,
    /// Per-dose-level replicate counts, comma separated (default balanced).
    #[arg(long, value_delimiter = ',')]
    dose_sizes: Option<Vec<usize>>,
    /// Per-lab replicate counts, comma separated (default balanced).
    #[arg(long, value_delimiter = ',')]
    lab_sizes: Option<Vec<usize>>,
    /// Dose contrast family (williams, highest, or dunnett).
    #[arg(long, default_value = "williams")]
    dose_contrast: String,
    /// Emit JSON instead of aligned text.
    #[arg(long, default_value_t = false)]
    json: bool,
}

#[derive(Args)]
struct PlotArgs {
    /// Analysis report (JSON) produced by `analyze`.
    report: PathBuf,
    /// Output SVG path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 7)]
    labs: usize,
    #[arg(long, default_value_t = 6)]
    doses: usize,
    /// Replicates per cell.
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    replicates: usize,
    /// Half-range of additive lab baselines (sigma units).
    #[arg(long, default_value_t = 1.5)]
    lab_shift: f64,
    /// Shared trend height at the top dose (sigma units).
    #[arg(long, default_value_t = 2.5)]
    trend: f64,
    /// 1-based lab whose curve deviates; omit for a null scenario.
    #[arg(long)]
    interaction_lab: Option<usize>,
    /// Extra trend height for the deviating lab (sigma units).
    #[arg(long, default_value_t = 0.0)]
    interaction: f64,
    /// Per-cell SD pattern: "homo" or "dose-increasing".
    #[arg(long, default_value = "homo")]
    variance: String,
    /// Top-dose/control SD ratio for the dose-increasing pattern.
    #[arg(long, default_value_t = 2.0)]
    variance_ratio: f64,
    #[arg(long, value_enum, default_value_t = VcovArg::Hc3)]
    vcov: VcovArg,
    #[arg(long, value_enum, default_value_t = DoseContrastArg::Williams)]
    dose_contrast: DoseContrastArg,
    #[arg(long, value_enum, default_value_t = AlternativeArg::TwoSided)]
    alternative: AlternativeArg,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0.10)]
    p_threshold: f64,
    /// Lattice points per shift inside the simulation loop.
    #[arg(long, default_value_t = 2048)]
    mvt_samples: u64,
    #[arg(long, default_value_t = 8)]
    mvt_randomizations: u32,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = false)]
    json: bool,
}

#[derive(Args)]
struct DatasetArgs {
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = synthetic::DEFAULT_SEED)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Contrasts(args) => cmd_contrasts(args),
        Command::Plot(args) => cmd_plot(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Dataset(args) => cmd_dataset(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e.class() {
                ErrorClass::Data => ExitCode::from(2),
                ErrorClass::Numerical => ExitCode::from(3),
            }
        }
    }
}

fn write_file(path: &PathBuf, contents: &str) -> Result<(), Error> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), Error> {
    let schema = CsvSchema {
        lab: args.lab_col.clone(),
        dose: args.dose_col.clone(),
        response: args.response_col.clone(),
    };
    let raw = load_csv(&args.input, &schema)?;
    let dataset = apply_transform(&raw, args.transform.to_transform())?;

    let policy = EquivalencePolicy {
        mode: args.policy.to_mode(),
        p_threshold: args.p_threshold,
        alpha: args.alpha,
    }
    .validated()?;
    let alternative = args.alternative.to_alternative();
    // Two-sided similarity analyses test at the equivalence threshold so the
    // intervals are the compatible two-sided 1-2*alpha ones; one-sided trend
    // analyses test at alpha directly.
    let level = match alternative {
        Alternative::TwoSided => policy.p_threshold,
        _ => policy.alpha,
    };

    let model = fit_cell_means(&dataset)?;
    let cov = covariance(&model, args.vcov.to_kind())?;
    let dose_choice = args.dose_contrast.to_choice();
    let interaction = kronecker_interaction(
        &grand_mean_matrix(dataset.lab_factor())?,
        &dose_choice.build(dataset.dose_factor())?,
    )?;
    let cfg = args.mvt.to_config().validated()?;
    let result = max_t_test(&model, &interaction, &cov, alternative, level, &cfg)?;
    let equivalence = equivalence_report(&result, &policy)?;
    let f_test = interaction_f_test(&dataset)?;
    let report = AnalysisReport::assemble(
        &dataset,
        &model,
        dose_choice,
        &result,
        &equivalence,
        f_test,
        cfg.seed,
    );

    if let Some(path) = &args.out_json {
        write_file(path, &report.to_json())?;
    }
    if let Some(path) = &args.out_svg {
        let svg = plot::forest_plot_svg(&report)?;
        write_file(path, &svg)?;
    }
    if !args.quiet {
        print!("{}", report.to_text());
    }
    Ok(())
}

fn cmd_contrasts(args: ContrastsArgs) -> Result<(), Error> {
    if args.labs < 2 {
        return Err(Error::InvalidDesign(format!(
            "need at least 2 labs, got {}",
            args.labs
        )));
    }
    if args.doses < 1 {
        return Err(Error::InvalidDesign(format!(
            "need at least 1 dose group, got {}",
            args.doses
        )));
    }
    let dose_values = match &args.dose_levels {
        Some(values) => {
            if values.len() != args.doses + 1 {
                return Err(Error::InvalidDesign(format!(
                    "--dose-levels needs {} values (control + {} doses), got {}",
                    args.doses + 1,
                    args.doses,
                    values.len()
                )));
            }
            values.clone()
        }
        None => synthetic::ames_doses(args.doses),
    };
    let dose_sizes = match &args.dose_sizes {
        Some(sizes) => {
            if sizes.len() != args.doses + 1 {
                return Err(Error::InvalidDesign(format!(
                    "--dose-sizes needs {} values, got {}",
                    args.doses + 1,
                    sizes.len()
                )));
            }
            sizes.clone()
        }
        None => vec![1; args.doses + 1],
    };
    let lab_sizes = match &args.lab_sizes {
        Some(sizes) => {
            if sizes.len() != args.labs {
                return Err(Error::InvalidDesign(format!(
                    "--lab-sizes needs {} values, got {}",
                    args.labs,
                    sizes.len()
                )));
            }
            sizes.clone()
        }
        None => vec![1; args.labs],
    };

    let dose_labels: Vec<String> = dose_values.iter().map(|d| format!("{d}")).collect();
    let dose = FactorLevels::dose("dose", dose_labels, dose_sizes)?;
    let lab_labels: Vec<String> = (1..=args.labs).map(|i| format!("{i}")).collect();
    let lab = FactorLevels::nominal("lab", lab_labels, lab_sizes)?;

    let dose_matrix: ContrastMatrix = match args.dose_contrast.as_str() {
        "williams" => DoseContrastChoice::Williams.build(&dose)?,
        "highest" => DoseContrastChoice::Highest.build(&dose)?,
        "dunnett" => dunnett_matrix(&dose)?,
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown dose contrast '{other}' (expected williams, highest, or dunnett)"
            )))
        }
    };
    let lab_matrix = grand_mean_matrix(&lab)?;
    let interaction = kronecker_interaction(&lab_matrix, &dose_matrix)?;

    if args.json {
        let doc = serde_json::json!({
            "dose": dose_matrix,
            "lab": lab_matrix,
            "interaction": interaction,
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
    } else {
        println!(
            "Dose contrasts ({}, {} rows):\n{}",
            args.dose_contrast,
            dose_matrix.n_rows(),
            dose_matrix.to_text_table()
        );
        println!(
            "Laboratory contrasts (grand mean, {} rows):\n{}",
            lab_matrix.n_rows(),
            lab_matrix.to_text_table()
        );
        println!(
            "Interaction contrasts ({} rows over {} cells):\n{}",
            interaction.n_rows(),
            interaction.n_cols(),
            interaction.to_text_table()
        );
    }
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> Result<(), Error> {
    let text = std::fs::read_to_string(&args.report).map_err(|source| Error::Io {
        path: args.report.display().to_string(),
        source,
    })?;
    let report = AnalysisReport::from_json(&text)?;
    let svg = plot::forest_plot_svg(&report)?;
    write_file(&args.out, &svg)?;
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Error> {
    let seed = args.seed.unwrap_or_else(|| {
        std::env::var("TRENDSIM_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(0)
    });
    let variance_pattern = match args.variance.as_str() {
        "homo" => VariancePattern::Homoscedastic,
        "dose-increasing" => VariancePattern::DoseIncreasing {
            max_ratio: args.variance_ratio,
        },
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown variance pattern '{other}' (expected homo or dose-increasing)"
            )))
        }
    };
    let interaction_lab = match args.interaction_lab {
        Some(lab) => {
            if lab == 0 || lab > args.labs {
                return Err(Error::InvalidDesign(format!(
                    "--interaction-lab {lab} out of range 1..={}",
                    args.labs
                )));
            }
            Some(lab - 1)
        }
        None => None,
    };
    let scenario = SimulationScenario {
        labs: args.labs,
        dose_groups: args.doses,
        n_per_cell: args.n,
        lab_shift_spread: args.lab_shift,
        trend_amplitude: args.trend,
        interaction_lab,
        interaction_amplitude: args.interaction,
        variance_pattern,
        replicates: args.replicates,
        seed,
    };
    let settings = SimulationSettings {
        dose_contrast: args.dose_contrast.to_choice(),
        vcov: args.vcov.to_kind(),
        alternative: args.alternative.to_alternative(),
        alpha: args.alpha,
        p_threshold: args.p_threshold,
        target_lab: interaction_lab,
        track_equivalence: true,
        qmc: QmcConfig {
            sample_budget: args.mvt_samples,
            randomizations: args.mvt_randomizations,
            seed,
            target_abs_error: 2e-3,
        }
        .validated()?,
    };
    let oc = run_simulation(&scenario, &settings)?;

    if args.json {
        println!("{}", serde_json::to_string_pretty(&oc).expect("serializable"));
        return Ok(());
    }
    println!(
        "Scenario: {} labs x {}+1 doses x n={}, interaction = {}{} sigma, variance = {}",
        args.labs,
        args.doses,
        args.n,
        args.interaction,
        interaction_lab
            .map(|l| format!(" in lab {}", l + 1))
            .unwrap_or_default(),
        args.variance,
    );
    println!(
        "Analysis: {} x grand-mean, vcov = {}, {} max-t at alpha = {}, threshold p > {}",
        args.dose_contrast.to_choice(),
        args.vcov.to_kind(),
        args.alternative.to_alternative(),
        args.alpha,
        args.p_threshold,
    );
    println!("replicates            {:>8}", oc.replicates);
    println!(
        "rejection rate        {:>8.4}  (se {:.4}, {} rejections)",
        oc.rejection_rate, oc.rejection_se, oc.rejections
    );
    if let (Some(rate), Some(se)) = (oc.global_equivalence_rate, oc.global_equivalence_se) {
        println!("global equivalence    {:>8.4}  (se {:.4})", rate, se);
    }
    if let Some(rate) = oc.target_lab_rejection_rate {
        println!("target-lab rejection  {:>8.4}", rate);
    }
    Ok(())
}

fn cmd_dataset(args: DatasetArgs) -> Result<(), Error> {
    let dataset = synthetic::ames_synthetic_dataset(args.seed)?;
    write_file(&args.out, &synthetic::dataset_to_csv(&dataset))?;
    Ok(())
}
