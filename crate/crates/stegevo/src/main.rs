//! Thin command-line front end; every subcommand delegates to the library.
//!
//! Exit codes: 0 on success, 1 on domain errors (unreadable input,
//! infeasible payload, parse failures, replay mismatch), 2 on usage
//! errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stegevo::cost::{CostAlgo, CostFunction};
use stegevo::dsl::{self, DslCost};
use stegevo::embed::{change_probabilities, embed, payload_entropy, solve_lambda};
use stegevo::evolve::{replay_journal, run_evolution, EvolutionConfig};
use stegevo::image::{load_corpus, load_image, save_image};
use stegevo::map::{save_map, MapScaling};
use stegevo::steganalysis::Scoring;

#[derive(Parser)]
#[command(
    name = "stegevo",
    version,
    about = "Minimum-distortion steganography toolkit and cost-function evolution"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for corpus-level operations.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

/// Cost-function selector shared by several subcommands: exactly one of a
/// built-in algorithm name or a DSL file.
#[derive(Args)]
struct CostSelector {
    /// Built-in algorithm: wow, wow-e, hill, hill-e, suni, suni-e.
    #[arg(long, conflicts_with = "dsl")]
    algo: Option<String>,
    /// Path to a `.scf` cost program.
    #[arg(long)]
    dsl: Option<PathBuf>,
}

impl CostSelector {
    fn resolve(&self) -> Result<Box<dyn CostFunction>, String> {
        match (&self.algo, &self.dsl) {
            (Some(name), None) => CostAlgo::parse(name)
                .map(|a| Box::new(a) as Box<dyn CostFunction>)
                .ok_or_else(|| format!("unknown algorithm `{name}`")),
            (None, Some(path)) => {
                let source = std::fs::read_to_string(path)
                    .map_err(|e| format!("reading {}: {e}", path.display()))?;
                let program = dsl::parse(&source)
                    .map_err(|e| format!("parsing {}:\n{e}", path.display()))?;
                Ok(Box::new(DslCost::new(program)))
            }
            _ => Err("exactly one of --algo or --dsl is required".into()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute a cost pair and render both maps as PGM images.
    Cost {
        #[command(flatten)]
        costfn: CostSelector,
        /// Cover image (binary PGM).
        #[arg(long = "in")]
        input: PathBuf,
        /// Output PGM for the +1 cost map.
        #[arg(long)]
        out_plus: PathBuf,
        /// Output PGM for the -1 cost map.
        #[arg(long)]
        out_minus: PathBuf,
    },
    /// Payload-limited embedding with the simulator.
    Embed {
        #[command(flatten)]
        costfn: CostSelector,
        #[arg(long = "in")]
        input: PathBuf,
        /// Embedding rate in bits per pixel.
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output stego PGM.
        #[arg(long)]
        out: PathBuf,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Render the modification-probability map (brighter = less likely).
    Probmap {
        #[command(flatten)]
        costfn: CostSelector,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        alpha: f64,
        /// Output PGM.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Train a dedicated detector on a cover directory and report held-out
    /// detection error.
    Evaluate {
        /// Directory of `.pgm` covers.
        #[arg(long)]
        covers: PathBuf,
        #[command(flatten)]
        costfn: CostSelector,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the two-stage evolutionary search.
    Evolve {
        /// TOML (or JSON) configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Directory for the journal, database snapshot, and report.
        #[arg(long)]
        run_dir: PathBuf,
    },
    /// Re-run a journal and verify the final database state matches.
    Replay {
        #[arg(long)]
        journal: PathBuf,
        /// Where the replayed run writes its own journal and snapshot;
        /// a temporary directory when omitted.
        #[arg(long)]
        run_dir: Option<PathBuf>,
    },
    /// Per-rate relative gain between two multi-rate reports.
    Gain {
        /// Report of the evolved cost function.
        #[arg(long)]
        evolved: PathBuf,
        /// Report of the original cost function.
        #[arg(long)]
        original: PathBuf,
        /// Emit CSV instead of an aligned table.
        #[arg(long)]
        csv: bool,
    },
}

fn write_report(report: &serde_json::Value, path: &Option<PathBuf>) -> Result<(), String> {
    let text = serde_json::to_string_pretty(report).expect("reports serialize");
    match path {
        Some(p) => std::fs::write(p, text.as_bytes())
            .map_err(|e| format!("writing {}: {e}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// A multi-rate score report: either the native shape with a `scores`
/// list, or a JSON array of single-rate `evaluate` outputs.
#[derive(serde::Deserialize)]
#[serde(untagged)]
enum GainInput {
    Scores {
        scores: Vec<RatePe>,
    },
    Evaluations(Vec<EvaluateOutput>),
}

#[derive(serde::Deserialize)]
struct RatePe {
    rate_bpp: f64,
    #[serde(alias = "pe", alias = "candidate_pe")]
    pe: f64,
}

#[derive(serde::Deserialize)]
struct EvaluateOutput {
    rate: f64,
    pe: f64,
}

fn load_rate_scores(path: &Path) -> Result<Vec<(f64, f64)>, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    let parsed: GainInput = serde_json::from_str(&text)
        .map_err(|e| format!("parsing {}: {e}", path.display()))?;
    let mut scores: Vec<(f64, f64)> = match parsed {
        GainInput::Scores { scores } => scores.into_iter().map(|s| (s.rate_bpp, s.pe)).collect(),
        GainInput::Evaluations(list) => list.into_iter().map(|e| (e.rate, e.pe)).collect(),
    };
    scores.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("rates are not NaN"));
    Ok(scores)
}

fn run(cli: Cli) -> Result<(), String> {
    let threads = cli.threads;
    match cli.command {
        Command::Cost {
            costfn,
            input,
            out_plus,
            out_minus,
        } => {
            let costfn = costfn.resolve()?;
            let cover = load_image(&input).map_err(|e| e.to_string())?;
            let pair = costfn.cost_pair(&cover).map_err(|e| e.to_string())?;
            save_map(&pair.rho_plus, &out_plus, MapScaling::Direct).map_err(|e| e.to_string())?;
            save_map(&pair.rho_minus, &out_minus, MapScaling::Direct)
                .map_err(|e| e.to_string())?;
            Ok(())
        }
        Command::Embed {
            costfn,
            input,
            alpha,
            seed,
            out,
            report,
        } => {
            let costfn = costfn.resolve()?;
            let cover = load_image(&input).map_err(|e| e.to_string())?;
            let costs = costfn.cost_pair(&cover).map_err(|e| e.to_string())?;
            let result = embed(&cover, &costs, alpha, seed, 1e-3).map_err(|e| e.to_string())?;
            save_image(&result.stego, &out).map_err(|e| e.to_string())?;
            let entropy_bits =
                payload_entropy(&change_probabilities(&costs, result.lambda));
            write_report(
                &serde_json::json!({
                    "lambda": result.lambda,
                    "entropy_bits": entropy_bits,
                    "realized_changes": result.realized_changes,
                    "distortion": result.total_distortion,
                }),
                &report,
            )
        }
        Command::Probmap {
            costfn,
            input,
            alpha,
            out,
            report,
        } => {
            let costfn = costfn.resolve()?;
            let cover = load_image(&input).map_err(|e| e.to_string())?;
            let costs = costfn.cost_pair(&cover).map_err(|e| e.to_string())?;
            let lambda = solve_lambda(&costs, alpha, 1e-3).map_err(|e| e.to_string())?;
            let pm = change_probabilities(&costs, lambda);
            let entropy_bits = payload_entropy(&pm);
            save_map(&pm.total_change(), &out, MapScaling::Inverted)
                .map_err(|e| e.to_string())?;
            write_report(
                &serde_json::json!({
                    "lambda": lambda,
                    "entropy_bits": entropy_bits,
                }),
                &report,
            )
        }
        Command::Evaluate {
            covers,
            costfn,
            alpha,
            seed,
            report,
        } => {
            let costfn = costfn.resolve()?;
            let images = load_corpus(&covers).map_err(|e| e.to_string())?;
            let scoring = Scoring {
                rate_bpp: alpha,
                seed,
                threads,
                ..Default::default()
            };
            let (pe, _) = scoring
                .accurate_score(costfn.as_ref(), &images)
                .map_err(|e| e.to_string())?;
            write_report(
                &serde_json::json!({
                    "pe": pe,
                    "n_cover": images.len(),
                    "n_stego": images.len(),
                    "rate": alpha,
                    "seed": seed,
                }),
                &report,
            )
        }
        Command::Evolve { config, run_dir } => {
            let mut config = EvolutionConfig::load(&config).map_err(|e| e.to_string())?;
            if threads > 1 {
                config.threads = threads;
            }
            let report = run_evolution(config, &run_dir).map_err(|e| e.to_string())?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
            Ok(())
        }
        Command::Replay { journal, run_dir } => {
            let tmp;
            let target = match &run_dir {
                Some(dir) => dir.clone(),
                None => {
                    tmp = tempdir()?;
                    tmp.clone()
                }
            };
            let report = replay_journal(&journal, &target).map_err(|e| e.to_string())?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
            if report.matches {
                Ok(())
            } else {
                Err(format!(
                    "replay diverged: {}",
                    report
                        .first_divergence
                        .unwrap_or_else(|| "final digests differ".into())
                ))
            }
        }
        Command::Gain {
            evolved,
            original,
            csv,
        } => {
            let evolved_scores = load_rate_scores(&evolved)?;
            let original_scores = load_rate_scores(&original)?;
            let e_rates: Vec<f64> = evolved_scores.iter().map(|s| s.0).collect();
            let o_rates: Vec<f64> = original_scores.iter().map(|s| s.0).collect();
            if e_rates != o_rates {
                return Err(format!(
                    "rate sets differ: evolved {e_rates:?} vs original {o_rates:?}"
                ));
            }
            if csv {
                println!("rate_bpp,pe_original,pe_evolved,gain");
            } else {
                println!(
                    "{:>8}  {:>11}  {:>10}  {:>8}",
                    "rate_bpp", "pe_original", "pe_evolved", "gain"
                );
            }
            for ((rate, pe_e), (_, pe_o)) in evolved_scores.iter().zip(&original_scores) {
                let gain = stegevo::steganalysis::relative_gain(*pe_e, *pe_o)
                    .map_err(|e| e.to_string())?;
                if csv {
                    println!("{rate},{pe_o},{pe_e},{gain:.4}");
                } else {
                    println!("{rate:>8}  {pe_o:>11.4}  {pe_e:>10.4}  {gain:>8.4}");
                }
            }
            Ok(())
        }
    }
}

fn tempdir() -> Result<PathBuf, String> {
    let dir = std::env::temp_dir().join(format!("stegevo-replay-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    Ok(dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}
