//! `juggernaut`: run, sweep, enumerate and replay simulated scenarios, and run
//! the acceptance suite.
//!
//! Exit status is 0 when nothing failed, 1 when some oracle, criterion or
//! replay failed, and 2 on usage or configuration errors.

use std::fs;
use std::io::{self, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use juggernaut_core::harness::enumerate::MAX_N;
use juggernaut_core::harness::{
    acceptance, enumerate, execute, gadget_suite, run_many, run_scenario, EnumReport, EnumSpec, Format, MetricsRow,
    Outcome, Pattern, ProtocolKind, ScenarioConfig, Script, Verdict,
};
use juggernaut_core::Setting;

#[derive(Parser)]
#[command(name = "juggernaut", version, about = "Simulate and check Byzantine agreement protocols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and evaluate every oracle of its protocol.
    Run(RunArgs),
    /// Run a grid of scenarios (sizes x settings x strategies x seeds).
    Sweep(SweepArgs),
    /// Walk every scripted adversary of a small configuration.
    Enumerate(EnumerateArgs),
    /// Run the full acceptance suite.
    Check,
    /// Re-run a scenario and compare against a recorded transcript.
    Replay(ReplayArgs),
}

/// Scenario keys. Each flag sets the key of the same name, after the file
/// given with `--config` has been read.
#[derive(Args, Clone, Default)]
struct ScenarioArgs {
    /// Scenario file in `key = value` format.
    #[arg(long, short = 'c')]
    config: Option<PathBuf>,
    #[arg(long, help_heading = "Scenario")]
    protocol: Option<String>,
    #[arg(long, help_heading = "Scenario")]
    n: Option<String>,
    #[arg(long = "t_s", visible_alias = "t-s", help_heading = "Scenario")]
    t_s: Option<String>,
    #[arg(long = "t_i", visible_alias = "t-i", help_heading = "Scenario")]
    t_i: Option<String>,
    #[arg(long, help_heading = "Scenario")]
    setting: Option<String>,
    #[arg(long, help_heading = "Scenario")]
    seed: Option<String>,
    /// `0,0,1,1`, `unanimous:V` or `random:K`.
    #[arg(long, help_heading = "Scenario")]
    inputs: Option<String>,
    #[arg(long, help_heading = "Scenario")]
    record: Option<String>,
    #[arg(long, help_heading = "Adversary")]
    strategy: Option<String>,
    #[arg(long, help_heading = "Adversary")]
    corrupt: Option<String>,
    #[arg(long = "crash_round", visible_alias = "crash-round", help_heading = "Adversary")]
    crash_round: Option<String>,
    #[arg(long, help_heading = "Adversary")]
    every: Option<String>,
    #[arg(long, help_heading = "Adversary")]
    values: Option<String>,
    #[arg(long, help_heading = "Adversary")]
    script: Option<String>,
    #[arg(long, help_heading = "Start")]
    skew: Option<String>,
    #[arg(long, help_heading = "Start")]
    late: Option<String>,
    #[arg(long, help_heading = "Start")]
    never: Option<String>,
    #[arg(long, help_heading = "Constants")]
    lambda: Option<String>,
    #[arg(long = "t_inner_sab", visible_alias = "t-inner-sab", help_heading = "Constants")]
    t_inner_sab: Option<String>,
    #[arg(long = "ba_auth", visible_alias = "ba-auth", help_heading = "Constants")]
    ba_auth: Option<String>,
    #[arg(long = "ba_sab", visible_alias = "ba-sab", help_heading = "Constants")]
    ba_sab: Option<String>,
    #[arg(long = "max_rounds", visible_alias = "max-rounds", help_heading = "Constants")]
    max_rounds: Option<String>,
}

impl ScenarioArgs {
    fn overrides(&self) -> [(&'static str, &'static str, &Option<String>); 22] {
        [
            ("scenario", "protocol", &self.protocol),
            ("scenario", "n", &self.n),
            ("scenario", "t_s", &self.t_s),
            ("scenario", "t_i", &self.t_i),
            ("scenario", "setting", &self.setting),
            ("scenario", "seed", &self.seed),
            ("scenario", "inputs", &self.inputs),
            ("scenario", "record", &self.record),
            ("adversary", "strategy", &self.strategy),
            ("adversary", "corrupt", &self.corrupt),
            ("adversary", "crash_round", &self.crash_round),
            ("adversary", "every", &self.every),
            ("adversary", "values", &self.values),
            ("adversary", "script", &self.script),
            ("start", "skew", &self.skew),
            ("start", "late", &self.late),
            ("start", "never", &self.never),
            ("constants", "lambda", &self.lambda),
            ("constants", "t_inner_sab", &self.t_inner_sab),
            ("constants", "ba_auth", &self.ba_auth),
            ("constants", "ba_sab", &self.ba_sab),
            ("constants", "max_rounds", &self.max_rounds),
        ]
    }

    /// The file (or juggernaut, n = 4, t_s = t_i = 1, authenticated) with
    /// every flag applied, validated.
    fn load(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = read(path)?;
                ScenarioConfig::parse(&text).with_context(|| format!("in {}", path.display()))?
            }
            None => ScenarioConfig::new(ProtocolKind::Juggernaut, 4, 1, 1, Setting::Authenticated),
        };
        for (section, key, value) in self.overrides() {
            if let Some(v) = value {
                cfg.set(section, key, v).with_context(|| format!("--{key}"))?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Clone)]
struct MetricsArgs {
    /// Write metrics rows to this file (`-` for stdout).
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// `csv` or `json`.
    #[arg(long, default_value = "csv")]
    format: String,
}

impl MetricsArgs {
    fn write(&self, rows: &[MetricsRow]) -> Result<()> {
        let Some(path) = &self.metrics else { return Ok(()) };
        let format: Format = self.format.parse()?;
        let mut buf = Vec::new();
        juggernaut_core::harness::metrics::emit(rows, format, &mut buf)?;
        write_out(path, &buf)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    metrics: MetricsArgs,
    /// Write the transcript as JSON, for `replay`.
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Print the outcome as JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    metrics: MetricsArgs,
    /// System sizes as `n:t_s:t_i`, comma separated. Default: the scenario's.
    #[arg(long)]
    sizes: Option<String>,
    /// `authenticated`, `sabotaged` or `both`. Default: the scenario's.
    #[arg(long)]
    settings: Option<String>,
    /// Adversary strategies, comma separated. Default: the scenario's.
    #[arg(long)]
    strategies: Option<String>,
    /// Seed range `A..B`.
    #[arg(long, default_value = "0..10")]
    seeds: String,
}

#[derive(Args)]
struct EnumerateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Phase start rounds, e.g. `0/2/4`. Enumerates the scenario's corrupt
    /// parties over these phases; without it the built-in gadget suite runs.
    #[arg(long)]
    phases: Option<String>,
    /// Include forged-certificate actions.
    #[arg(long)]
    forge: bool,
    /// Only suite entries whose name contains this.
    #[arg(long)]
    only: Option<String>,
    /// Directory for the per-entry pass/fail matrix (CSV).
    #[arg(long)]
    matrix: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Scenario file, e.g. a failure witness.
    scenario: PathBuf,
    /// Transcript written by `run --transcript`. Without it the scenario is
    /// executed twice and the transcripts compared.
    #[arg(long)]
    transcript: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_out(path: &Path, bytes: &[u8]) -> Result<()> {
    if path.as_os_str() == "-" {
        io::stdout().write_all(bytes)?;
        return Ok(());
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn print_outcome(o: &Outcome) {
    println!("{}", o.config.label());
    for note in &o.notes {
        println!("note: {note}");
    }
    let t = &o.transcript;
    for (p, d) in &t.decisions {
        println!("  {p} decided {} at round {} by {:?}", d.value, d.round, d.rule);
    }
    println!("  rounds {}, honest bytes {}", t.rounds_run, t.bytes_total_honest);
    for r in &o.reports {
        if r.detail.is_empty() {
            println!("  {:<15} {}", r.verdict, r.name);
        } else {
            println!("  {:<15} {}: {}", r.verdict, r.name, r.detail);
        }
    }
}

fn run(args: RunArgs) -> Result<bool> {
    let cfg = args.scenario.load()?;
    let out = run_scenario(&cfg)?;
    if args.json {
        println!("{}", outcome_json(&out));
    } else {
        print_outcome(&out);
        if let Some(w) = out.failures().find_map(|r| r.witness.as_ref()) {
            println!("\nwitness:\n{w}");
        }
    }
    if let Some(path) = &args.transcript {
        write_out(path, out.transcript.to_json().as_bytes())?;
    }
    args.metrics.write(&[MetricsRow::new(&cfg, &out.transcript)])?;
    Ok(out.passed())
}

/// Reports and decisions without the full transcript.
fn outcome_json(o: &Outcome) -> String {
    let t = &o.transcript;
    serde_json::json!({
        "scenario": o.config.to_text(),
        "passed": o.passed(),
        "notes": o.notes,
        "rounds": t.rounds_run,
        "honest_bytes": t.bytes_total_honest,
        "decisions": t.decisions,
        "reports": o.reports,
    })
    .to_string()
}

fn parse_range(s: &str) -> Result<Range<u64>> {
    let (a, b) = s.split_once("..").with_context(|| format!("expected `A..B`, got `{s}`"))?;
    let r = a.trim().parse()?..b.trim().parse()?;
    if r.is_empty() {
        bail!("empty seed range `{s}`");
    }
    Ok(r)
}

fn parse_sizes(s: &str) -> Result<Vec<(String, String, String)>> {
    s.split(',')
        .map(|item| {
            let parts: Vec<&str> = item.trim().split(':').collect();
            match parts[..] {
                [n, t_s, t_i] => Ok((n.to_string(), t_s.to_string(), t_i.to_string())),
                _ => bail!("expected `n:t_s:t_i`, got `{item}`"),
            }
        })
        .collect()
}

fn sweep(args: SweepArgs) -> Result<bool> {
    let base = args.scenario.load()?;
    let sizes = match &args.sizes {
        Some(s) => parse_sizes(s)?,
        None => vec![(base.n.to_string(), base.t_s.to_string(), base.t_i.to_string())],
    };
    let settings: Vec<String> = match args.settings.as_deref() {
        None => vec![base.setting.to_string()],
        Some("both") => vec!["authenticated".into(), "sabotaged".into()],
        Some(s) => s.split(',').map(|x| x.trim().to_string()).collect(),
    };
    let strategies: Vec<String> = match &args.strategies {
        None => vec![base.adversary.strategy.name().to_string()],
        Some(s) => s.split(',').map(|x| x.trim().to_string()).collect(),
    };
    let seeds = parse_range(&args.seeds)?;

    let mut cfgs = Vec::new();
    for (n, t_s, t_i) in &sizes {
        for setting in &settings {
            for strategy in &strategies {
                let mut cfg = base.clone();
                cfg.set("scenario", "n", n)?;
                cfg.set("scenario", "t_s", t_s)?;
                cfg.set("scenario", "t_i", t_i)?;
                cfg.set("scenario", "setting", setting)?;
                cfg.set("adversary", "strategy", strategy)?;
                cfg.record = false;
                // A corrupt set sized for one n rarely fits another.
                if args.sizes.is_some() {
                    cfg.adversary.corrupt = None;
                }
                cfg.validate().with_context(|| format!("size {n}:{t_s}:{t_i}"))?;
                for seed in seeds.clone() {
                    cfg.seed = seed;
                    cfgs.push(cfg.clone());
                }
            }
        }
    }
    let outcomes = run_many(&cfgs)?;

    let mut totals: std::collections::BTreeMap<&str, [u64; 3]> = Default::default();
    for o in &outcomes {
        for r in &o.reports {
            let e = totals.entry(r.name.as_str()).or_default();
            e[match r.verdict {
                Verdict::Pass => 0,
                Verdict::Fail => 1,
                Verdict::OutOfContract => 2,
            }] += 1;
        }
    }
    let failed: Vec<&Outcome> = outcomes.iter().filter(|o| !o.passed()).collect();
    println!("{} runs, {} with failures", outcomes.len(), failed.len());
    println!("  {:<28} {:>8} {:>8} {:>16}", "property", "pass", "fail", "out-of-contract");
    for (name, [p, f, o]) in &totals {
        println!("  {name:<28} {p:>8} {f:>8} {o:>16}");
    }
    for o in failed.iter().take(10) {
        let names: Vec<&str> = o.failures().map(|r| r.name.as_str()).collect();
        println!("FAIL {}: {}", o.config.label(), names.join(", "));
    }
    if let Some(o) = failed.first() {
        println!("\nwitness:\n{}", o.config.to_text());
    }

    let rows: Vec<MetricsRow> = outcomes.iter().map(|o| MetricsRow::new(&o.config, &o.transcript)).collect();
    args.metrics.write(&rows)?;
    Ok(failed.is_empty())
}

fn print_enum_report(r: &EnumReport) {
    let inner = r.max_inner_rounds.map_or(String::new(), |x| format!(", slowest inner run {x} rounds"));
    println!("{}: {} runs, {} failures{inner}", r.name, r.runs, r.failures());
    for p in &r.properties {
        println!("  {:<28} pass {:>8}  fail {:>6}  out-of-contract {:>8}", p.name, p.pass, p.fail, p.out_of_contract);
        if let Some(w) = &p.witness {
            println!("  witness:\n{w}");
        }
    }
}

fn enumerate_cmd(args: EnumerateArgs) -> Result<bool> {
    let specs: Vec<EnumSpec> = match &args.phases {
        Some(phases) => {
            let cfg = args.scenario.load()?;
            if cfg.n > MAX_N {
                bail!("enumeration needs n <= {MAX_N}, got n = {}", cfg.n);
            }
            let phases = phases.parse::<Script>()?.phases;
            let pattern = Pattern::new("given", cfg.inputs.clone(), cfg.start.clone());
            let name = format!("{}/{}", cfg.protocol, cfg.setting);
            vec![EnumSpec::uniform(&name, cfg, phases, args.forge, vec![pattern])]
        }
        None => gadget_suite()
            .into_iter()
            .filter(|s| args.only.as_deref().is_none_or(|o| s.name.contains(o)))
            .collect(),
    };
    if specs.is_empty() {
        bail!("no suite entry matches");
    }
    if let Some(dir) = &args.matrix {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut ok = true;
    for spec in &specs {
        let r = enumerate(spec)?;
        print_enum_report(&r);
        ok &= r.failures() == 0;
        if let Some(dir) = &args.matrix {
            let path = dir.join(format!("{}.csv", spec.name.replace('/', "-")));
            let mut buf = Vec::new();
            r.write_matrix(spec, &mut buf)?;
            write_out(&path, &buf)?;
        }
    }
    Ok(ok)
}

fn check() -> bool {
    let results = acceptance::run(|r| println!("{r}"));
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("acceptance: {} of {} criteria passed", results.len() - failed, results.len());
    failed == 0
}

fn replay_cmd(args: ReplayArgs) -> Result<bool> {
    let text = read(&args.scenario)?;
    let cfg = ScenarioConfig::parse(&text).with_context(|| format!("in {}", args.scenario.display()))?;
    let fresh = execute(&cfg)?.to_json();
    let expected = match &args.transcript {
        Some(path) => read(path)?,
        None => execute(&cfg)?.to_json(),
    };
    let same = fresh.trim() == expected.trim();
    println!("{}: {}", cfg.label(), if same { "identical" } else { "diverged" });
    Ok(same)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Enumerate(a) => enumerate_cmd(a),
        Command::Check => Ok(check()),
        Command::Replay(a) => replay_cmd(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
