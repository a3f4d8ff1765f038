//! `iqml` — command-line front end for the IQML toolkit.
//!
//! Exit codes: 0 for affirmative verdicts (true / SAT / VALID / bisimilar /
//! accepted / Duplicator / a distinguishing formula found), 1 for negative
//! verdicts, 2 for usage, parse, or validation errors (diagnostics go to
//! stderr). Identical invocations produce byte-identical output.

use std::collections::BTreeSet;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use iqml::bisim;
use iqml::fo::{self, Element, GameConfig, Player};
use iqml::kripke::{self, KripkeModel, PointedModel, DEFAULT_GUARD_BITS};
use iqml::proofcheck;
use iqml::semantics::{self, OracleBounds};
use iqml::syntax::{self, Formula};
use iqml::tableau::{self, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Plain,
    Json,
}

#[derive(Parser)]
#[command(
    name = "iqml",
    about = "Model checking, satisfiability, bisimulation, and proof checking \
             for implicitly quantified modal logic",
    after_help = "Formulas use the grammar: ~f, f & g, f | g, f -> g, [E]f, [A]f, \
                  <E>f, <A>f, true, false, identifiers [a-z][a-zA-Z0-9_]*.\n\
                  Translated first-order formulas print as Qp(x), R(x,t,y), \
                  EXISTS-W/FORALL-W for world quantifiers and EXISTS-I/FORALL-I \
                  for index quantifiers.\n\
                  IQML_ORACLE_GUARD overrides the enumeration guard (bits of choice)."
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "plain")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelPair {
    /// First model file.
    model1: String,
    /// World of the first model.
    world1: String,
    /// Second model file.
    model2: String,
    /// World of the second model.
    world2: String,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a formula at a world of a model.
    Check {
        /// Model file.
        model: String,
        /// World to evaluate at.
        world: String,
        /// Formula text.
        formula: String,
    },
    /// Decide satisfiability by tableau; prints the extracted model on SAT.
    Sat { formula: String },
    /// Decide validity (tableau on the negation).
    Valid { formula: String },
    /// Search for a bounded model by brute-force enumeration.
    Oracle {
        formula: String,
        /// Maximum number of worlds.
        #[arg(long, default_value_t = 3)]
        worlds: usize,
        /// Maximum number of indices.
        #[arg(long, default_value_t = 2)]
        indices: usize,
        /// Extra propositions beyond those of the formula (comma separated).
        #[arg(long, value_delimiter = ',')]
        props: Vec<String>,
    },
    /// Check two pointed models for bisimilarity.
    Bisim {
        #[command(flatten)]
        pair: ModelPair,
        /// On a negative verdict, also print a distinguishing formula.
        #[arg(long)]
        explain: bool,
    },
    /// Check two pointed models for n-bisimilarity.
    Nbisim {
        #[command(flatten)]
        pair: ModelPair,
        /// Bisimulation depth.
        #[arg(long)]
        n: usize,
    },
    /// Find a formula separating two pointed models, if one exists at depth
    /// at most max-n.
    Distinguish {
        #[command(flatten)]
        pair: ModelPair,
        #[arg(long = "max-n")]
        max_n: usize,
    },
    /// Characteristic formula of a pointed model at depth n.
    Charform {
        model: String,
        world: String,
        #[arg(long)]
        n: usize,
        /// Extra propositions beyond those of the model (comma separated).
        #[arg(long, value_delimiter = ',')]
        props: Vec<String>,
        /// Ceiling on |Gamma^n| for the subset clause.
        #[arg(long, default_value_t = bisim::DEFAULT_GAMMA_GUARD)]
        gamma_guard: usize,
    },
    /// Translate a formula into two-sorted first-order logic over the free
    /// world variable x.
    Translate { formula: String },
    /// Play the Ehrenfeucht-Fraisse game from the given pointed models.
    Ef {
        #[command(flatten)]
        pair: ModelPair,
        /// World-pebble budget.
        #[arg(long)]
        qx: usize,
        /// Index-pebble budget.
        #[arg(long)]
        qt: usize,
    },
    /// Check a Hilbert-style derivation.
    Prove {
        /// Proof file.
        proof: String,
    },
    /// Print a deterministic random formula.
    GenFormula {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long, value_delimiter = ',', default_value = "p,q")]
        props: Vec<String>,
    },
    /// Print a deterministic random model.
    GenModel {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        worlds: usize,
        #[arg(long, default_value_t = 2)]
        indices: usize,
        #[arg(long, value_delimiter = ',', default_value = "p,q")]
        props: Vec<String>,
    },
}

struct Outcome {
    code: u8,
    plain: String,
    json: serde_json::Value,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format;
    match run(cli.command) {
        Ok(outcome) => {
            match format {
                Format::Plain => println!("{}", outcome.plain.trim_end()),
                Format::Json => println!("{}", outcome.json),
            }
            ExitCode::from(outcome.code)
        }
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn parse_formula_arg(text: &str) -> Result<Formula, String> {
    syntax::parse_formula(text).map_err(|e| format!("formula '{text}': {e}"))
}

fn load_model(path: &str) -> Result<KripkeModel, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("cannot read '{path}': {e}"))?;
    kripke::parse_model(&text).map_err(|e| format!("model '{path}': {e}"))
}

fn oracle_guard() -> u32 {
    std::env::var("IQML_ORACLE_GUARD")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_GUARD_BITS)
}

fn model_block(pm: &PointedModel) -> String {
    pm.model.render_rooted(&pm.point)
}

fn run(command: Command) -> Result<Outcome, String> {
    match command {
        Command::Check {
            model,
            world,
            formula,
        } => {
            let m = load_model(&model)?;
            let f = parse_formula_arg(&formula)?;
            let value = semantics::holds(&m, &world, &f).map_err(|e| e.to_string())?;
            Ok(Outcome {
                code: u8::from(!value),
                plain: value.to_string(),
                json: json!({"command": "check", "value": value}),
            })
        }
        Command::Sat { formula } => {
            let f = parse_formula_arg(&formula)?;
            match tableau::decide_sat(&f) {
                Verdict::Sat { model, .. } => Ok(Outcome {
                    code: 0,
                    plain: format!("SAT\n{}", model_block(&model)),
                    json: json!({
                        "command": "sat",
                        "verdict": "sat",
                        "model": model_block(&model),
                        "point": model.point,
                    }),
                }),
                Verdict::Unsat => Ok(Outcome {
                    code: 1,
                    plain: "UNSAT".to_string(),
                    json: json!({"command": "sat", "verdict": "unsat"}),
                }),
            }
        }
        Command::Valid { formula } => {
            let f = parse_formula_arg(&formula)?;
            let valid = tableau::is_valid(&f);
            Ok(Outcome {
                code: u8::from(!valid),
                plain: if valid { "VALID" } else { "NOT VALID" }.to_string(),
                json: json!({
                    "command": "valid",
                    "verdict": if valid { "valid" } else { "not_valid" },
                }),
            })
        }
        Command::Oracle {
            formula,
            worlds,
            indices,
            props,
        } => {
            let f = parse_formula_arg(&formula)?;
            let all_props: BTreeSet<String> =
                f.propositions().into_iter().chain(props).collect();
            let bounds = OracleBounds {
                max_worlds: worlds,
                max_indices: indices,
                props: all_props.into_iter().collect(),
            };
            let hit = semantics::sat_oracle_with_guard(&f, &bounds, oracle_guard())
                .map_err(|e| e.to_string())?;
            match hit {
                Some(pm) => Ok(Outcome {
                    code: 0,
                    plain: format!("SAT\n{}", model_block(&pm)),
                    json: json!({
                        "command": "oracle",
                        "verdict": "sat",
                        "model": model_block(&pm),
                        "point": pm.point,
                    }),
                }),
                None => Ok(Outcome {
                    code: 1,
                    plain: "NO MODEL WITHIN BOUNDS".to_string(),
                    json: json!({"command": "oracle", "verdict": "no_model"}),
                }),
            }
        }
        Command::Bisim { pair, explain } => {
            let m1 = load_model(&pair.model1)?;
            let m2 = load_model(&pair.model2)?;
            let related = bisim::bisimilar(&m1, &pair.world1, &m2, &pair.world2)
                .map_err(|e| e.to_string())?;
            let mut plain = if related { "BISIMILAR" } else { "NOT BISIMILAR" }.to_string();
            let mut distinguishing = None;
            if !related && explain {
                let max_n = m1.world_count() * m2.world_count();
                let witness =
                    bisim::distinguishing_formula(&m1, &pair.world1, &m2, &pair.world2, max_n)
                        .map_err(|e| e.to_string())?;
                if let Some(f) = witness {
                    plain.push_str(&format!("\ndistinguishing: {f}"));
                    distinguishing = Some(f.to_string());
                }
            }
            Ok(Outcome {
                code: u8::from(!related),
                plain,
                json: json!({
                    "command": "bisim",
                    "verdict": if related { "bisimilar" } else { "not_bisimilar" },
                    "distinguishing": distinguishing,
                }),
            })
        }
        Command::Nbisim { pair, n } => {
            let m1 = load_model(&pair.model1)?;
            let m2 = load_model(&pair.model2)?;
            let related = bisim::n_bisimilar(&m1, &pair.world1, &m2, &pair.world2, n)
                .map_err(|e| e.to_string())?;
            Ok(Outcome {
                code: u8::from(!related),
                plain: if related { "N-BISIMILAR" } else { "NOT N-BISIMILAR" }.to_string(),
                json: json!({
                    "command": "nbisim",
                    "n": n,
                    "verdict": if related { "n_bisimilar" } else { "not_n_bisimilar" },
                }),
            })
        }
        Command::Distinguish { pair, max_n } => {
            let m1 = load_model(&pair.model1)?;
            let m2 = load_model(&pair.model2)?;
            let witness =
                bisim::distinguishing_formula(&m1, &pair.world1, &m2, &pair.world2, max_n)
                    .map_err(|e| e.to_string())?;
            match witness {
                Some(f) => Ok(Outcome {
                    code: 0,
                    plain: f.to_string(),
                    json: json!({"command": "distinguish", "value": f.to_string()}),
                }),
                None => Ok(Outcome {
                    code: 1,
                    plain: "NONE".to_string(),
                    json: json!({"command": "distinguish", "value": null}),
                }),
            }
        }
        Command::Charform {
            model,
            world,
            n,
            props,
            gamma_guard,
        } => {
            let m = load_model(&model)?;
            let all_props: BTreeSet<String> =
                m.all_props().into_iter().chain(props).collect();
            let props: Vec<String> = all_props.into_iter().collect();
            let ctx = bisim::CharContext::with_guard(m, &props, n, gamma_guard)
                .map_err(|e| e.to_string())?;
            let chi = ctx.char_formula(&world, n).map_err(|e| e.to_string())?;
            Ok(Outcome {
                code: 0,
                plain: chi.to_string(),
                json: json!({"command": "charform", "n": n, "value": chi.to_string()}),
            })
        }
        Command::Translate { formula } => {
            let f = parse_formula_arg(&formula)?;
            let rendered = fo::render_fo(&fo::translate(&f, "x"));
            Ok(Outcome {
                code: 0,
                plain: rendered.clone(),
                json: json!({"command": "translate", "value": rendered}),
            })
        }
        Command::Ef { pair, qx, qt } => {
            let m1 = load_model(&pair.model1)?;
            let m2 = load_model(&pair.model2)?;
            if !m1.has_world(&pair.world1) {
                return Err(format!("unknown world '{}'", pair.world1));
            }
            if !m2.has_world(&pair.world2) {
                return Err(format!("unknown world '{}'", pair.world2));
            }
            let cfg = GameConfig {
                left: fo::to_fo_structure(&m1),
                right: fo::to_fo_structure(&m2),
                left_pebbles: vec![Element::World(pair.world1)],
                right_pebbles: vec![Element::World(pair.world2)],
                budget_w: qx,
                budget_i: qt,
            };
            let winner = fo::ef_winner(&cfg).map_err(|e| e.to_string())?;
            Ok(Outcome {
                code: u8::from(winner == Player::Spoiler),
                plain: match winner {
                    Player::Duplicator => "DUPLICATOR",
                    Player::Spoiler => "SPOILER",
                }
                .to_string(),
                json: json!({
                    "command": "ef",
                    "verdict": match winner {
                        Player::Duplicator => "duplicator",
                        Player::Spoiler => "spoiler",
                    },
                }),
            })
        }
        Command::Prove { proof } => {
            let text = std::fs::read_to_string(&proof)
                .map_err(|e| format!("cannot read '{proof}': {e}"))?;
            let parsed = proofcheck::parse_proof(&text).map_err(|e| e.to_string())?;
            match proofcheck::check_proof(&parsed) {
                Ok(()) => Ok(Outcome {
                    code: 0,
                    plain: "ACCEPTED".to_string(),
                    json: json!({"command": "prove", "verdict": "accepted"}),
                }),
                Err(rejection) => Ok(Outcome {
                    code: 1,
                    plain: format!("REJECTED line {}: {}", rejection.line, rejection.reason),
                    json: json!({
                        "command": "prove",
                        "verdict": "rejected",
                        "line": rejection.line,
                        "reason": rejection.reason,
                    }),
                }),
            }
        }
        Command::GenFormula { seed, depth, props } => {
            let f = syntax::random_formula(seed, depth, &props).map_err(|e| e.to_string())?;
            Ok(Outcome {
                code: 0,
                plain: f.to_string(),
                json: json!({"command": "gen-formula", "value": f.to_string()}),
            })
        }
        Command::GenModel {
            seed,
            worlds,
            indices,
            props,
        } => {
            let m = kripke::random_model(seed, worlds, indices, &props)
                .map_err(|e| e.to_string())?;
            Ok(Outcome {
                code: 0,
                plain: m.render(),
                json: json!({"command": "gen-model", "model": m.render()}),
            })
        }
    }
}
