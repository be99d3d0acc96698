mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use capprice::auction::{make_safe_auction, AuctionParams, Cap, Ceiling, PricingRule};
use capprice::bounds::{self, Analysis, BoundCertificate, Status};
use capprice::equilibrium::{self, EquilibriumConfig, OverbidMode, DEFAULT_PROFILE_LIMIT};
use capprice::generate::{self, CostKind, RandomSpec};
use capprice::market::{CostCurve, Extension};
use capprice::welfare::{OptResult, DEFAULT_SCENARIO_LIMIT};
use capprice::{instance_file, par, rational, Error, MarketInstance, Rational};
use clap::{Args, Parser, Subcommand, ValueEnum};

use report::Report;

/// Cap-and-price uniform-price auctions: evaluation, optimisation,
/// equilibria and welfare certificates on exact rational instances.
#[derive(Parser)]
#[command(name = "capprice", version)]
struct Cli {
    /// Worker threads for the data-parallel core.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Refuse instances with more joint scenarios than this.
    #[arg(long, global = true, default_value_t = DEFAULT_SCENARIO_LIMIT)]
    scenario_limit: u128,
    /// Refuse strategy spaces with more profiles than this.
    #[arg(long, global = true, default_value_t = DEFAULT_PROFILE_LIMIT)]
    profile_limit: u128,
    /// Write the CSV table here instead of after the summary on stdout.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-scenario outcomes and expected welfare of one auction.
    Evaluate {
        instance: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Best cap-and-price auction over the candidate grid.
    Optimize {
        instance: PathBuf,
        /// Search only auctions without a price ceiling.
        #[arg(long)]
        no_ceiling: bool,
        /// Search only safe-price auctions M(C).
        #[arg(long, conflicts_with = "no_ceiling")]
        safe_only: bool,
        /// Largest cap considered.
        #[arg(long)]
        cap_limit: Option<usize>,
    },
    /// Pure equilibria on the bid grid under no-overbidding.
    Equilibrium {
        instance: PathBuf,
        #[arg(long)]
        cap: usize,
        /// Reserve price; defaults to the safe price P(C).
        #[arg(long, value_parser = parse_rational)]
        floor: Option<Rational>,
        #[arg(long, value_enum, default_value_t = Pricing::LowestWinning)]
        pricing: Pricing,
        /// Largest best-response gain tolerated.
        #[arg(long, value_parser = parse_rational, default_value = "0")]
        epsilon: Rational,
        #[arg(long, value_enum, default_value_t = Overbid::Aggregate)]
        overbid: Overbid,
    },
    /// Welfare certificates on an instance.
    Verify {
        instance: PathBuf,
        #[arg(value_enum)]
        which: Which,
        /// Exit with status 3 if any certificate fails.
        #[arg(long)]
        strict: bool,
        /// Largest cap considered by the searches.
        #[arg(long)]
        cap_limit: Option<usize>,
        /// Auction for `priceceil` and `decomp`; defaults to an optimum.
        #[command(flatten)]
        params: OptionalParamArgs,
    },
    /// Write one of the built-in instances.
    Examples {
        #[arg(value_enum)]
        name: ExampleName,
        /// Number of scenarios for `logscale` and `first-best`.
        n: Option<u32>,
        /// Units per scenario for `first-best`.
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a seeded random instance.
    Generate {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        n_firms: usize,
        #[arg(long, default_value_t = 2)]
        scenarios: usize,
        #[arg(long, default_value_t = 4)]
        max_units: usize,
        /// Inclusive range of integer marginal values, as `LO:HI`.
        #[arg(long, value_parser = parse_range, default_value = "1:12")]
        value_range: (i64, i64),
        #[arg(long, value_enum, default_value_t = Kind::Quadratic)]
        cost_kind: Kind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ParamArgs {
    /// Number of licenses, or `inf`.
    #[arg(long, value_parser = parse_cap)]
    cap: Cap,
    #[arg(long, value_parser = parse_rational, default_value = "0")]
    floor: Rational,
    /// Price ceiling, or `inf`.
    #[arg(long, value_parser = parse_ceiling, default_value = "inf")]
    ceiling: Ceiling,
    #[arg(long, value_enum, default_value_t = Pricing::LowestWinning)]
    pricing: Pricing,
}

#[derive(Args)]
struct OptionalParamArgs {
    #[arg(long, value_parser = parse_cap)]
    cap: Option<Cap>,
    #[arg(long, value_parser = parse_rational, requires = "cap")]
    floor: Option<Rational>,
    #[arg(long, value_parser = parse_ceiling, requires = "cap")]
    ceiling: Option<Ceiling>,
    #[arg(long, value_enum, default_value_t = Pricing::LowestWinning)]
    pricing: Pricing,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pricing {
    LowestWinning,
    HighestLosing,
}

impl From<Pricing> for PricingRule {
    fn from(p: Pricing) -> Self {
        match p {
            Pricing::LowestWinning => PricingRule::LowestWinning,
            Pricing::HighestLosing => PricingRule::HighestLosing,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Overbid {
    Aggregate,
    Pointwise,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    Priceceil,
    Optcond,
    Unsafe,
    Decomp,
    Thmq,
    Main,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExampleName {
    DemandReduction,
    Logscale,
    FirstBest,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Quadratic,
    Linear,
    Convex,
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    rational::parse(s).ok_or_else(|| format!("`{s}` is not an integer or p/q"))
}

fn parse_cap(s: &str) -> Result<Cap, String> {
    match s {
        "inf" | "unbounded" => Ok(Cap::Unbounded),
        _ => s
            .parse()
            .map(Cap::Limited)
            .map_err(|_| format!("`{s}` is not a license count or `inf`")),
    }
}

fn parse_ceiling(s: &str) -> Result<Ceiling, String> {
    match s {
        "inf" | "none" => Ok(Ceiling::Infinite),
        _ => parse_rational(s).map(Ceiling::Finite),
    }
}

fn parse_range(s: &str) -> Result<(i64, i64), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected LO:HI")?;
    let lo = lo.trim().parse().map_err(|_| format!("bad lower bound `{lo}`"))?;
    let hi = hi.trim().parse().map_err(|_| format!("bad upper bound `{hi}`"))?;
    Ok((lo, hi))
}

struct Ctx {
    scenario_limit: u128,
    profile_limit: u128,
}

fn load(path: &Path) -> Result<MarketInstance> {
    instance_file::read(path).with_context(|| format!("loading {}", path.display()))
}

fn emit_instance(m: &MarketInstance, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            instance_file::write(path, m).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{}", instance_file::to_string(m)),
    }
    Ok(())
}

fn joined(xs: &[usize]) -> String {
    xs.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn evaluate(ctx: &Ctx, path: &Path, params: AuctionParams) -> Result<Report> {
    let m = load(path)?;
    let analysis = Analysis::new(&m, ctx.scenario_limit)?;
    let table = &analysis.table;
    let outcomes = table.outcomes(&params)?;
    let mut r = Report::new();
    r.line(format!("instance: {}", m.label))
        .line(format!("auction: {params}"));
    r.value("expected welfare", &table.expected_welfare(&params)?);
    r.value("expected revenue", &table.expected_revenue(&params)?);
    if matches!(params.cap, Cap::Limited(_)) {
        r.value("sell-out probability", &table.sell_out_probability(&params)?);
    }
    r.line(format!("scenarios: {}", table.len()));
    r.text_column("scenario")
        .text_column("types")
        .number_column("prob")
        .text_column("allocation")
        .number_column("unit_price")
        .text_column("case")
        .number_column("welfare")
        .number_column("revenue");
    for (i, (row, o)) in table.rows.iter().zip(&outcomes).enumerate() {
        let types = row.types.as_deref().map(joined).unwrap_or_default();
        r.row(vec![
            i.into(),
            types.into(),
            (&row.prob).into(),
            joined(&o.allocation).into(),
            (&o.unit_price).into(),
            o.case.to_string().into(),
            (&o.welfare).into(),
            (&o.revenue).into(),
        ]);
    }
    Ok(r)
}

fn candidate_table(r: &mut Report, opt: &OptResult) {
    r.text_column("cap")
        .number_column("floor")
        .text_column("ceiling")
        .text_column("pricing")
        .number_column("welfare");
    for c in &opt.table {
        r.row(vec![
            c.params.cap.to_string().into(),
            (&c.params.floor).into(),
            c.params.ceiling.to_string().into(),
            c.params.pricing.to_string().into(),
            (&c.welfare).into(),
        ]);
    }
}

fn optimize(ctx: &Ctx, path: &Path, no_ceiling: bool, safe_only: bool, cap_limit: Option<usize>) -> Result<Report> {
    let m = load(path)?;
    let analysis = Analysis::new(&m, ctx.scenario_limit)?;
    let table = &analysis.table;
    let (what, opt) = if safe_only {
        ("best safe-price auction", table.optimize_safe(cap_limit)?)
    } else {
        let what = if no_ceiling { "OPT without ceiling" } else { "OPT" };
        (
            what,
            table.optimize_cap_and_price(&analysis.prices, !no_ceiling, cap_limit)?,
        )
    };
    let mut r = Report::new();
    r.line(format!("instance: {}", m.label));
    r.value(what, &opt.expected_welfare);
    r.line(format!("witness: {}", opt.params));
    r.line(format!("candidates: {}", opt.search_space));
    candidate_table(&mut r, &opt);
    Ok(r)
}

fn describe_profile(p: &equilibrium::StrategyProfile) -> String {
    p.reports
        .iter()
        .map(|types| {
            types
                .iter()
                .map(|v| {
                    format!(
                        "({})",
                        v.marginals()
                            .iter()
                            .map(rational::to_exact)
                            .collect::<Vec<_>>()
                            .join(",")
                    )
                })
                .collect::<Vec<_>>()
                .join("|")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[allow(clippy::too_many_arguments)]
fn equilibria(
    ctx: &Ctx,
    path: &Path,
    cap: usize,
    floor: Option<Rational>,
    pricing: PricingRule,
    epsilon: Rational,
    overbid: Overbid,
) -> Result<Report> {
    let m = load(path)?;
    let safe = make_safe_auction(cap, &m.cost)?.with_pricing(pricing);
    let params = match floor {
        Some(f) => AuctionParams::capped(cap, f)?.with_pricing(pricing),
        None => safe.clone(),
    };
    let config = EquilibriumConfig {
        epsilon,
        profile_limit: ctx.profile_limit,
        overbid_mode: match overbid {
            Overbid::Aggregate => OverbidMode::Aggregate,
            Overbid::Pointwise => OverbidMode::Pointwise,
        },
    };
    let report = equilibrium::find_grid_equilibria(&m, &params, &config)?;
    let mut r = Report::new();
    r.line(format!("instance: {}", m.label))
        .line(format!("auction: {params}"));
    r.line(format!(
        "bid grid: {}",
        report.grid.iter().map(rational::to_exact).collect::<Vec<_>>().join(" ")
    ));
    r.line(format!("profiles examined: {}", report.profiles_examined));
    r.line(format!("equilibria: {}", report.equilibria.len()));
    if let (Some(worst), Some(best)) = (report.worst_welfare(), report.best_welfare()) {
        r.value("worst equilibrium welfare", worst)
            .value("best equilibrium welfare", best);
    }
    if params == safe {
        let cert = equilibrium::check_poa_bound(&m, cap, &report)?;
        r.line(cert.to_string());
    }
    r.text_column("index")
        .text_column("profile")
        .number_column("welfare")
        .number_column("min_scenario_welfare")
        .number_column("max_gain");
    for (i, e) in report.equilibria.iter().enumerate() {
        r.row(vec![
            i.into(),
            describe_profile(&e.profile).into(),
            (&e.welfare).into(),
            (&e.min_scenario_welfare).into(),
            (&e.max_gain).into(),
        ]);
    }
    Ok(r)
}

fn explicit_params(args: &OptionalParamArgs) -> Result<Option<AuctionParams>> {
    let Some(cap) = args.cap else { return Ok(None) };
    let floor = args.floor.clone().unwrap_or_default();
    let ceiling = args.ceiling.clone().unwrap_or(Ceiling::Infinite);
    Ok(Some(AuctionParams::new(cap, floor, ceiling, args.pricing.into())?))
}

fn price_ceiling(analysis: &Analysis, given: Option<&AuctionParams>) -> Result<Vec<BoundCertificate>> {
    const NAME: &str = "ceiling-free-half";
    let params = match given {
        Some(p) => p.clone(),
        None => {
            let opt = analysis
                .table
                .optimize_cap_and_price(&analysis.prices, true, Some(analysis.cap_limit))?;
            opt.params
        }
    };
    if params.ceiling.finite().is_none() || matches!(params.cap, Cap::Unbounded) {
        let why = format!("{params} has no finite ceiling with a bounded cap");
        return Ok(vec![BoundCertificate::not_applicable(NAME, why)]);
    }
    let r = bounds::verify_price_ceiling_lemma(analysis, &params)?;
    let note = format!("{params}");
    Ok(vec![r.exhaustive.with_note(note.clone()), r.proof_pair.with_note(note)])
}

fn unsafe_points(analysis: &Analysis) -> Result<Vec<BoundCertificate>> {
    let cost = &analysis.table.cost;
    let limit = match cost {
        CostCurve::Explicit {
            marginals,
            extension: Extension::Error,
        } => analysis.cap_limit.min(marginals.len()),
        _ => analysis.cap_limit,
    };
    let mut out = Vec::new();
    for c in 1..=limit {
        for x in 0..=c {
            out.push(bounds::verify_unsafe_points(cost, c, x)?);
        }
    }
    Ok(out)
}

fn decomposition(analysis: &Analysis, given: Option<&AuctionParams>) -> Result<Vec<BoundCertificate>> {
    let (cap, floor) = match given {
        Some(p) => match p.cap {
            Cap::Limited(c) => (c, p.floor.clone()),
            Cap::Unbounded => bail!("decomp needs a bounded --cap"),
        },
        None => {
            let opt = analysis.optimum()?;
            match opt.params.cap {
                Cap::Limited(c) => (c, opt.params.floor.clone()),
                Cap::Unbounded => {
                    return Ok(vec![BoundCertificate::not_applicable(
                        "welfare-decomposition",
                        "optimum has no cap",
                    )])
                }
            }
        }
    };
    let d = bounds::decompose_welfare(&analysis.table, cap, &floor)?;
    let (c1, c2) = bounds::verify_decomposition_covers(analysis, &d)?;
    let split = format!(
        "q={} 1A={} 1B={} 1C={} P(C)={}",
        rational::to_exact(&d.q),
        rational::to_exact(&d.one_a),
        rational::to_exact(&d.one_b),
        rational::to_exact(&d.one_c),
        rational::to_exact(&d.safe_price)
    );
    Ok(vec![d.certificate.with_note(split), c1, c2])
}

fn verify(
    ctx: &Ctx,
    path: &Path,
    which: Which,
    cap_limit: Option<usize>,
    params: &OptionalParamArgs,
) -> Result<(Report, bool)> {
    let m = load(path)?;
    let mut analysis = Analysis::new(&m, ctx.scenario_limit)?;
    if let Some(limit) = cap_limit {
        analysis = analysis.with_cap_limit(limit);
    }
    let given = explicit_params(params)?;
    let wants = |w: Which| which == w || which == Which::All;
    let mut certs = Vec::new();
    let mut r = Report::new();
    r.line(format!("instance: {}", m.label));
    if wants(Which::Priceceil) {
        certs.extend(price_ceiling(&analysis, given.as_ref())?);
    }
    if wants(Which::Optcond) || wants(Which::Thmq) || wants(Which::Main) || wants(Which::Decomp) && given.is_none() {
        let opt = analysis.optimum()?;
        r.value("OPT", &opt.expected_welfare)
            .line(format!("optimum: {}", opt.params));
    }
    if wants(Which::Optcond) {
        certs.push(bounds::verify_opt_conditional_nonneg(&analysis, analysis.optimum()?)?);
    }
    if wants(Which::Unsafe) {
        let all = unsafe_points(&analysis)?;
        let failed = all.iter().filter(|c| c.failed()).count();
        r.line(format!("unsafe points: {} checked, {failed} failed", all.len()));
        certs.extend(all);
    }
    if wants(Which::Decomp) {
        certs.extend(decomposition(&analysis, given.as_ref())?);
    }
    if wants(Which::Thmq) {
        certs.push(bounds::verify_theorem_q(&analysis)?);
    }
    if wants(Which::Main) {
        if m.is_product_form() {
            let main = bounds::verify_main_theorem(&analysis)?;
            r.value("single-buyer welfare", &main.single_buyer)
                .line(format!("C_med: {}", main.c_med));
            r.line(format!("deciding certificate: {}", main.deciding().name));
            certs.push(main.existence.clone());
            certs.push(main.four_term.clone());
            if which != Which::All {
                certs.extend(main.sellout_route.clone());
            }
        } else {
            certs.push(BoundCertificate::not_applicable("main", "joint scenario table"));
        }
    }
    r.certificate_columns();
    let mut failed = false;
    for cert in &certs {
        failed |= cert.status == Status::Fail;
        r.certificate(cert);
    }
    let passed = certs.iter().filter(|c| c.passed()).count();
    r.line(format!(
        "certificates: {} total, {passed} passed, {} failed",
        certs.len(),
        certs.iter().filter(|c| c.failed()).count()
    ));
    Ok((r, failed))
}

fn example(name: ExampleName, n: Option<u32>, horizon: Option<usize>) -> Result<MarketInstance> {
    let need_n = || n.ok_or_else(|| anyhow!("this example needs a scenario count N"));
    Ok(match name {
        ExampleName::DemandReduction => generate::demand_reduction(),
        ExampleName::Logscale => generate::logscale(need_n()?)?,
        ExampleName::FirstBest => generate::first_best(need_n()?, horizon)?,
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!("--threads must be positive");
        }
        par::set_threads(t);
    }
    let ctx = Ctx {
        scenario_limit: cli.scenario_limit,
        profile_limit: cli.profile_limit,
    };
    let csv = cli.csv.as_deref();
    let report = match cli.command {
        Command::Evaluate { instance, params } => {
            let params = AuctionParams::new(params.cap, params.floor, params.ceiling, params.pricing.into())?;
            evaluate(&ctx, &instance, params)?
        }
        Command::Optimize {
            instance,
            no_ceiling,
            safe_only,
            cap_limit,
        } => optimize(&ctx, &instance, no_ceiling, safe_only, cap_limit)?,
        Command::Equilibrium {
            instance,
            cap,
            floor,
            pricing,
            epsilon,
            overbid,
        } => equilibria(&ctx, &instance, cap, floor, pricing.into(), epsilon, overbid)?,
        Command::Verify {
            instance,
            which,
            strict,
            cap_limit,
            params,
        } => {
            let (report, failed) = verify(&ctx, &instance, which, cap_limit, &params)?;
            report.emit(csv)?;
            return Ok(if strict && failed {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            });
        }
        Command::Examples { name, n, horizon, out } => {
            emit_instance(&example(name, n, horizon)?, out.as_deref())?;
            return Ok(ExitCode::SUCCESS);
        }
        Command::Generate {
            seed,
            n_firms,
            scenarios,
            max_units,
            value_range,
            cost_kind,
            out,
        } => {
            let mut spec = RandomSpec::new(seed, n_firms, scenarios, max_units);
            spec.value_range = value_range;
            spec.cost_kind = match cost_kind {
                Kind::Quadratic => CostKind::Quadratic,
                Kind::Linear => CostKind::Linear,
                Kind::Convex => CostKind::Convex,
            };
            emit_instance(&generate::random(&spec)?, out.as_deref())?;
            return Ok(ExitCode::SUCCESS);
        }
    };
    report.emit(csv)?;
    Ok(ExitCode::SUCCESS)
}

fn is_broken_pipe(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        let io = e
            .downcast_ref::<std::io::Error>()
            .or_else(|| match e.downcast_ref::<csv::Error>()?.kind() {
                csv::ErrorKind::Io(io) => Some(io),
                _ => None,
            });
        io.is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::ScenarioExplosion { .. } | Error::StrategyExplosion { .. }) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) if is_broken_pipe(&err) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
