//! The `condexp` command-line front end.
//!
//! Every subcommand reads a JSON document, writes a JSON report (stdout or `--output`) and
//! exits with 0 on success, 2 on a certified negative result and 1 on invalid input.

pub mod schema;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use condexp::condexp::{condexp_set, convexify_witness, limit_escape_certificate, membership, rademacher_escape, uhc_audit};
use condexp::correspondence::{selection_value, Selection};
use condexp::equilibrium::{purify_equilibrium, solve_behavioral, EquilibriumReport, Method, SolveOptions};
use condexp::exec::Exec;
use condexp::game::{coarser_info_check, derive_interplayer_info, BayesianGame};
use condexp::measure::{conditional_expectation, MeasureSpace};
use condexp::pennies::{self, PenniesGame, Side, Variant};
use condexp::purification::{audit_equivalence, strong_purify, EquivalenceAudit, DEVIATION_SEED, SAMPLED_DEVIATIONS};
use condexp::rational::{parse_q, rats, with_float_rendering};
use condexp::{fixtures, Error, Rat, Q};

use schema::{parse, selection_doc, CorrespondenceDoc, GameDoc, InputError, ProfileDoc, SpaceDoc, StepDoc};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NEGATIVE: i32 = 2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Rationals as `"p/q"` strings.
    #[default]
    Rational,
    /// Rationals as JSON floats.
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    Lp,
    Br,
    Enum,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Auto => Method::Auto,
            MethodArg::Lp => Method::Lp,
            MethodArg::Br => Method::Br,
            MethodArg::Enum => Method::Enum,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    TypeIrrelevant,
    IndependentTypes,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::TypeIrrelevant => Variant::TypeIrrelevant,
            VariantArg::IndependentTypes => Variant::IndependentTypes,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "condexp", version, about = "Conditional expectations of correspondences and Bayesian-game purification")]
pub struct Cli {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Rendering of rational numbers in the report.
    #[arg(long, value_enum, default_value_t = Mode::Rational, global = true)]
    pub mode: Mode,
    /// Run data-parallel work on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 1e-9)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0.1)]
    pub damping: f64,
    /// 0 starts from uniform play.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report whether a space has a g-atom.
    GAtom { space: PathBuf },
    /// Attainable conditional expectations per g-block, with an optional membership test.
    CondexpSet {
        input: PathBuf,
        /// Largest block distance still counted as membership.
        #[arg(long, default_value = "0")]
        tolerance: String,
    },
    /// A selection whose conditional expectation is the α-mixture of `s1` and `s2`.
    Convexify {
        input: PathBuf,
        #[arg(long)]
        alpha: String,
    },
    /// Rademacher escape identities on a saturated cell.
    Rademacher {
        space: PathBuf,
        #[arg(long)]
        cell: String,
        #[arg(long, default_value_t = 8)]
        m: u32,
    },
    /// Upper-hemicontinuity audit of the family `{φ_m} → {0, 1}·1_D`.
    UhcAudit {
        space: PathBuf,
        #[arg(long)]
        cell: String,
        #[arg(long, default_value_t = 8)]
        max_m: u32,
    },
    /// Inter-player information blocks of a game.
    DeriveInfo { game: PathBuf },
    /// Whether every player has coarser inter-player information.
    CoarserCheck { game: PathBuf },
    /// Behavioral equilibrium with exact regret verification.
    Solve {
        game: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Strong purification of a given profile, or of a solved equilibrium.
    Purify {
        game: PathBuf,
        #[arg(long)]
        profile: Option<PathBuf>,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Equivalence audit between two profiles.
    AuditEquivalence {
        game: PathBuf,
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        g: PathBuf,
        #[arg(long, default_value_t = DEVIATION_SEED)]
        seed: u64,
    },
    /// Pure-equilibrium search in the cyclic matching-pennies lab.
    Pennies {
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, value_enum, default_value_t = VariantArg::TypeIrrelevant)]
        variant: VariantArg,
        #[arg(long, default_value_t = 2)]
        budget: usize,
        #[arg(long, default_value_t = 8)]
        grid: usize,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        /// Write interim weights of the best searched player-1 strategy here.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Negative(Value, String),
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::Input(e.to_string())
    }
}

struct Outcome {
    report: Value,
    pass: bool,
    csv: Option<(PathBuf, String)>,
    table: Option<String>,
}

struct Ctx {
    mode: Mode,
    exec: Exec,
}

impl Ctx {
    fn value<T: Serialize>(&self, t: &T) -> Value {
        let render = || serde_json::to_value(t).expect("reports serialize");
        match self.mode {
            Mode::Rational => render(),
            Mode::Float => with_float_rendering(render),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn rational(s: &str, what: &str) -> Result<Q, Failure> {
    parse_q(s).map_err(|e| Failure::Input(format!("--{what}: {e}")))
}

fn core(e: Error) -> Failure {
    match e {
        Error::AtomObstruction { cell, alpha } => Failure::Negative(
            json!({ "obstruction": { "cell": cell, "alpha": alpha.map(|a| Rat(a).to_string()) } }),
            format!("g-atom obstruction at cell {cell:?}"),
        ),
        Error::NoConvergence { iterations, gain } => Failure::Negative(
            json!({ "no_convergence": { "iterations": iterations, "gain": gain } }),
            format!("no convergence after {iterations} iterations"),
        ),
        other => Failure::Input(other.to_string()),
    }
}

fn load_space(path: &Path) -> Result<MeasureSpace, Failure> {
    Ok(parse::<SpaceDoc>(&read(path)?)?.build("$")?)
}

fn load_game(path: &Path) -> Result<BayesianGame, Failure> {
    Ok(parse::<GameDoc>(&read(path)?)?.build()?)
}

fn cell_index(space: &MeasureSpace, id: &str) -> Result<usize, Failure> {
    space.cell_index(id).map_err(|_| Failure::Input(format!("--cell: unknown cell {id:?}")))
}

fn options(a: &SolveArgs) -> SolveOptions {
    SolveOptions { method: a.method.into(), epsilon: a.epsilon, max_iters: a.max_iters, damping: a.damping, seed: a.seed }
}

fn equilibrium_value(ctx: &Ctx, game: &BayesianGame, r: &EquilibriumReport) -> Value {
    json!({
        "method": ctx.value(&r.method),
        "converged": r.converged,
        "iterations": r.iterations,
        "epsilon": ctx.value(&rats(&r.epsilon)),
        "max_epsilon": ctx.value(&Rat(r.max_epsilon())),
        "value": r.value.as_ref().map(|v| ctx.value(&Rat(v.clone()))),
        "blocks": ctx.value(&r.blocks.iter().map(|p| p.iter().map(|b| rats(b)).collect::<Vec<_>>()).collect::<Vec<_>>()),
        "profile": ctx.value(&ProfileDoc::from_profile(game, &r.profile)),
    })
}

fn within(r: &EquilibriumReport, epsilon: f64) -> bool {
    r.converged && condexp::rational::to_f64(&r.max_epsilon()) <= epsilon
}

fn audit_table(audit: &EquivalenceAudit) -> String {
    let max = |xs: Vec<&Q>| xs.into_iter().map(condexp::rational::abs).max().unwrap_or_default();
    let strong: Vec<&Q> = audit.strong.iter().map(|r| &r.residual.0).chain(audit.structural.iter().map(|r| &r.0)).collect();
    let belief: Q = audit.belief.iter().map(|b| b.mass.0.clone()).sum();
    let rows = [
        ("payoff equivalence", max(audit.payoff.iter().map(|r| &r.0).collect()), audit.payoff_equivalent()),
        ("strong payoff equivalence", max(strong), audit.strongly_payoff_equivalent()),
        ("distribution equivalence", max(audit.distribution.iter().flatten().map(|r| &r.0).collect()), audit.distribution_equivalent()),
        ("belief consistency", belief, audit.belief_consistent()),
    ];
    let mut out = format!("{:<28}{:>14}  result\n", "clause", "residual");
    for (name, r, ok) in rows {
        let _ = writeln!(out, "{name:<28}{:>14}  {}", Rat(r).to_string(), if ok { "PASS" } else { "FAIL" });
    }
    out
}

fn execute(cli: &Cli) -> Result<Outcome, Failure> {
    let ctx = Ctx { mode: cli.mode, exec: if cli.sequential { Exec::Sequential } else { Exec::Parallel } };
    let plain = |report: Value, pass: bool| Outcome { report, pass, csv: None, table: None };
    match &cli.command {
        Command::GAtom { space } => {
            let space = load_space(space)?;
            let witness = space.has_g_atom().map(|c| space.cell(c).id.clone());
            Ok(plain(json!({ "has_g_atom": witness.is_some(), "witness": witness }), true))
        }
        Command::CondexpSet { input, tolerance } => {
            let tol = rational(tolerance, "tolerance")?;
            let inp = parse::<CorrespondenceDoc>(&read(input)?)?.build()?;
            let set = condexp_set(&inp.space, &inp.f, ctx.exec).map_err(core)?;
            let mut report = json!({ "dim": set.dim, "components": ctx.value(&set.report(&inp.space)) });
            let mut pass = true;
            if let Some(h) = &inp.h {
                let m = membership(&inp.space, &inp.f, h, &tol).map_err(core)?;
                pass = m.member;
                report["membership"] = ctx.value(&m);
            }
            Ok(plain(report, pass))
        }
        Command::Convexify { input, alpha } => {
            let alpha = rational(alpha, "alpha")?;
            let inp = parse::<CorrespondenceDoc>(&read(input)?)?.build()?;
            let s1 = inp.s1.unwrap_or_else(|| Selection::constant(&inp.space, 0));
            let s2 = inp.s2.unwrap_or_else(|| Selection::constant(&inp.space, inp.f.branch_count() - 1));
            let s0 = convexify_witness(&inp.space, &inp.f, &s1, &s2, &alpha).map_err(core)?;
            let ce = |s: &Selection| conditional_expectation(&inp.space, &selection_value(&inp.space, &inp.f, s)?);
            let (e0, e1, e2) = (ce(&s0).map_err(core)?, ce(&s1).map_err(core)?, ce(&s2).map_err(core)?);
            let target = e1.lin_comb(&alpha, &e2, &(Q::from_integer(1.into()) - &alpha)).map_err(core)?;
            let verified = e0.same_as(&target);
            Ok(plain(
                json!({
                    "alpha": ctx.value(&Rat(alpha)),
                    "selection": ctx.value(&selection_doc(&inp.space, &s0)),
                    "conditional_expectation": ctx.value(&StepDoc::from_function(&inp.space, &e0)),
                    "identity_verified": verified,
                }),
                verified,
            ))
        }
        Command::Rademacher { space, cell, m } => {
            let space = load_space(space)?;
            let c = cell_index(&space, cell)?;
            let tests: Vec<Vec<Q>> =
                (0..*m).map(|k| (1..=(1i64 << k)).map(|v| Q::from_integer(v.into())).collect()).collect();
            let r = rademacher_escape(&space, c, *m, &tests).map_err(core)?;
            let limit = limit_escape_certificate(&space, c).map_err(core)?;
            let pass = r.integral == r.expected_integral && r.identities.iter().all(|t| t.holds);
            Ok(plain(
                json!({
                    "cell": cell,
                    "m": r.m,
                    "selection": ctx.value(&selection_doc(&space, &r.selection)),
                    "integral": ctx.value(&Rat(r.integral)),
                    "expected_integral": ctx.value(&Rat(r.expected_integral)),
                    "identities": ctx.value(&r.identities),
                    "limit_escape_distance": ctx.value(&Rat(limit)),
                }),
                pass,
            ))
        }
        Command::UhcAudit { space, cell, max_m } => {
            let space = load_space(space)?;
            let c = cell_index(&space, cell)?;
            let r = uhc_audit(&space, c, *max_m).map_err(core)?;
            let pass = r.limit_in_h0;
            Ok(plain(ctx.value(&r), pass))
        }
        Command::DeriveInfo { game } => {
            let game = load_game(game)?;
            let info = derive_interplayer_info(&game);
            let spaces: Vec<SpaceDoc> = info.players.iter().map(|p| SpaceDoc::from_space(&p.space)).collect();
            Ok(plain(json!({ "players": ctx.value(&info.report(&game)), "spaces": ctx.value(&spaces) }), true))
        }
        Command::CoarserCheck { game } => {
            let game = load_game(game)?;
            let checks = coarser_info_check(&game);
            let pass = checks.iter().all(|c| c.passes);
            Ok(plain(json!({ "coarser": pass, "players": ctx.value(&checks) }), pass))
        }
        Command::Solve { game, solve } => {
            let game = load_game(game)?;
            let r = solve_behavioral(&game, &options(solve)).map_err(core)?;
            Ok(plain(equilibrium_value(&ctx, &game, &r), within(&r, solve.epsilon)))
        }
        Command::Purify { game, profile, solve } => {
            let game = load_game(game)?;
            let deviations = fixtures::sample_deviations(&game, SAMPLED_DEVIATIONS, DEVIATION_SEED);
            match profile {
                Some(p) => {
                    let f = parse::<ProfileDoc>(&read(p)?)?.build(&game)?;
                    let cert = strong_purify(&game, &f).map_err(core)?;
                    let pass = cert.audit.passes();
                    let report = json!({
                        "pure": ctx.value(&cert.pure.iter().enumerate().map(|(i, s)| selection_doc(game.type_space(i), s)).collect::<Vec<_>>()),
                        "audit": ctx.value(&cert.audit),
                        "passes": pass,
                    });
                    Ok(Outcome { report, pass, csv: None, table: Some(audit_table(&cert.audit)) })
                }
                None => {
                    let eq = solve_behavioral(&game, &options(solve)).map_err(core)?;
                    let (pure, verified) = purify_equilibrium(&game, &eq).map_err(core)?;
                    let audit = audit_equivalence(&game, &eq.profile, &verified.profile, &deviations).map_err(core)?;
                    let pass = within(&verified, solve.epsilon) && audit.passes();
                    let report = json!({
                        "equilibrium": equilibrium_value(&ctx, &game, &eq),
                        "purified": equilibrium_value(&ctx, &game, &verified),
                        "pure": ctx.value(&pure.iter().enumerate().map(|(i, s)| selection_doc(game.type_space(i), s)).collect::<Vec<_>>()),
                        "audit": ctx.value(&audit),
                        "passes": pass,
                    });
                    Ok(Outcome { report, pass, csv: None, table: Some(audit_table(&audit)) })
                }
            }
        }
        Command::AuditEquivalence { game, f, g, seed } => {
            let game = load_game(game)?;
            let f = parse::<ProfileDoc>(&read(f)?)?.build(&game)?;
            let g = parse::<ProfileDoc>(&read(g)?)?.build(&game)?;
            let deviations = fixtures::sample_deviations(&game, SAMPLED_DEVIATIONS, *seed);
            let audit = audit_equivalence(&game, &f, &g, &deviations).map_err(core)?;
            let pass = audit.passes();
            Ok(Outcome {
                report: json!({ "audit": ctx.value(&audit), "passes": pass }),
                pass,
                csv: None,
                table: Some(audit_table(&audit)),
            })
        }
        Command::Pennies { m, variant, budget, grid, epsilon, csv, samples } => {
            let game = PenniesGame::new(*m, (*variant).into()).map_err(core)?;
            let r = pennies::no_pure_equilibrium_search(&game, *budget, *grid, *epsilon, ctx.exec).map_err(core)?;
            let f1 = pennies::pure_strategy(*m, &pennies::grid_strategy(&r.argmin.0));
            let f2 = pennies::pure_strategy(*m, &pennies::grid_strategy(&r.argmin.1));
            let balance =
                [pennies::balance_defect(*m, &f1, Side::Two), pennies::balance_defect(*m, &f2, Side::One)];
            let report = json!({ "search": ctx.value(&r), "balance": ctx.value(&balance) });
            let csv = csv.as_ref().map(|p| (p.clone(), pennies::weights_csv(&f1, Side::Two, *samples)));
            Ok(Outcome { report, pass: r.pass, csv, table: None })
        }
    }
}

fn emit(cli: &Cli, report: &Value) -> Result<(), String> {
    let mut text = serde_json::to_string_pretty(report).expect("reports serialize");
    text.push('\n');
    match &cli.output {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Parses `args` (including the program name) and runs the subcommand; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(out) => {
            if let Some(t) = &out.table {
                eprint!("{t}");
            }
            if let Some((path, csv)) = &out.csv {
                if let Err(e) = std::fs::write(path, csv) {
                    eprintln!("error: {}: {e}", path.display());
                    return EXIT_INPUT;
                }
            }
            if let Err(e) = emit(&cli, &out.report) {
                eprintln!("error: {e}");
                return EXIT_INPUT;
            }
            if out.pass { EXIT_OK } else { EXIT_NEGATIVE }
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INPUT
        }
        Err(Failure::Negative(report, msg)) => {
            eprintln!("{msg}");
            if let Err(e) = emit(&cli, &report) {
                eprintln!("error: {e}");
                return EXIT_INPUT;
            }
            EXIT_NEGATIVE
        }
    }
}
