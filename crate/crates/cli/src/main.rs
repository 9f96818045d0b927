use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use psolve::bncompiler::{compile_bn, compile_dynbn, load_bn, CompileOptions, Network};
use psolve::loopmodel::{parse_program, pretty_print};
use psolve::momentengine::{Engine, EngineConfig, DEFAULT_DEGREE_CAP};
use psolve::oracle::{enumerate_discrete, gaussian_propagate, mc_estimate, McConfig, DEFAULT_STATE_CAP};
use psolve::queries::{
    json::{parse_event, samples_json},
    param_domains, run_query, Analysis, QueryOptions, RenderOptions,
};
use psolve::symcore::{parse_rational, rational::to_f64, Limit, Rational, RationalFunction};

#[derive(Parser)]
#[command(name = "psolve", version, about = "Moment closed forms for probabilistic loops and Bayesian networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Significant fractional digits in decimal output.
    #[arg(long, default_value_t = 6, global = true)]
    precision: usize,
    /// Bind a parameter after solving, as `name=value`.
    #[arg(long = "param", value_name = "NAME=VALUE", global = true)]
    params: Vec<String>,
    /// Largest moment degree explored (overrides PSOLVE_DEGREE_CAP).
    #[arg(long, global = true)]
    degree_cap: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Closed form, value or limit of a moment of a loop program.
    Analyze {
        program: PathBuf,
        /// Monomial over program variables, e.g. `x` or `x*y^2`.
        #[arg(long)]
        goal: String,
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long, conflicts_with = "limit")]
        at: Option<u64>,
        #[arg(long)]
        limit: bool,
    },
    /// Print the loop program encoding a network.
    CompileBn {
        network: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Draw conditional Gaussian cases inline instead of in helper variables.
        #[arg(long)]
        inline_clg: bool,
    },
    /// Run a query document against a network.
    Query {
        network: PathBuf,
        /// Query JSON, inline or as a path to a file.
        #[arg(long)]
        spec: String,
    },
    /// Expected sample counts for rejection sampling, by both routes.
    Samples {
        network: PathBuf,
        /// Conjunction such as `A=1,J=1`.
        #[arg(long)]
        evidence: String,
        /// Number of samples for the expected count of accepted ones.
        #[arg(long)]
        n: Option<String>,
    },
    /// Forward filtering of a hidden node in a temporal network.
    Filter {
        network: PathBuf,
        /// Observed values separated by commas, `-` for a step without one.
        #[arg(long)]
        obs: String,
        #[arg(long)]
        state: Option<String>,
        #[arg(long)]
        observation: Option<String>,
    },
    /// Compare engine moments with the exact and Monte Carlo oracles.
    Check {
        network: PathBuf,
        /// Monte Carlo sample count; no simulation when absent.
        #[arg(long)]
        mc: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Time slice checked for temporal networks.
        #[arg(long, default_value_t = 5)]
        at: u64,
    },
}

/// Failure classes mapped to exit codes 1 and 2.
enum Failure {
    Input(String),
    Internal(String),
}

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn load_network(path: &Path) -> Result<Network, Failure> {
    load_bn(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn bindings(raw: &[String]) -> Result<HashMap<String, Rational>, Failure> {
    let mut out = HashMap::new();
    for b in raw {
        let (name, value) = b
            .split_once('=')
            .ok_or_else(|| Failure::Input(format!("`--param {b}` should look like name=value")))?;
        let q = parse_rational(value.trim()).map_err(|e| Failure::Input(format!("`--param {b}`: {e}")))?;
        out.insert(name.trim().to_string(), q);
    }
    Ok(out)
}

fn engine_config(cli: &Cli) -> Result<EngineConfig, Failure> {
    let cap = match (cli.degree_cap, std::env::var("PSOLVE_DEGREE_CAP")) {
        (Some(c), _) => c,
        (None, Ok(v)) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Input(format!("PSOLVE_DEGREE_CAP=`{v}` is not a positive integer")))?,
        (None, Err(_)) => DEFAULT_DEGREE_CAP,
    };
    Ok(EngineConfig { degree_cap: cap })
}

fn parse_goal(goal: &str) -> Result<Vec<(String, u32)>, Failure> {
    let mut out = Vec::new();
    for f in goal.split('*') {
        let f = f.trim();
        let (name, e) = match f.split_once('^') {
            Some((n, e)) => (
                n.trim(),
                e.trim()
                    .parse::<u32>()
                    .map_err(|_| Failure::Input(format!("bad exponent in goal factor `{f}`")))?,
            ),
            None => (f, 1),
        };
        if name.is_empty() {
            return Err(Failure::Input(format!("empty factor in goal `{goal}`")));
        }
        out.push((name.to_string(), e));
    }
    Ok(out)
}

fn parse_conjunction(net: &Network, text: &str) -> Result<Vec<(String, u32)>, Failure> {
    let mut obj = serde_json::Map::new();
    for part in text.split([',', '&']).map(str::trim).filter(|s| !s.is_empty()) {
        let (n, v) = part
            .split_once('=')
            .ok_or_else(|| Failure::Input(format!("evidence `{part}` should look like node=value")))?;
        obj.insert(n.trim().to_string(), json!(v.trim()));
    }
    parse_event(net, &Json::Object(obj)).map_err(input)
}

fn render(r: &RenderOptions, v: &RationalFunction) -> Result<Json, Failure> {
    r.number(v).map_err(input)
}

fn analyze(cli: &Cli, path: &Path, goal: &str, k: u32, at: Option<u64>, limit: bool) -> Result<Json, Failure> {
    let text = read(path)?;
    let p = parse_program(&text).map_err(|e| Failure::Input(format!("{}:{e}", path.display())))?;
    let mut engine = Engine::new(&p, engine_config(cli)?).map_err(input)?;
    let mono = parse_goal(goal)?;
    let powers: Vec<(&str, u32)> = mono.iter().map(|(n, e)| (n.as_str(), e * k)).collect();
    let s = engine.moment(&powers).map_err(input)?;
    engine.verify_all().map_err(Failure::Internal)?;
    let opts = RenderOptions {
        precision: cli.precision,
        bindings: bindings(&cli.params)?,
    };
    let env: HashMap<String, RationalFunction> = opts
        .bindings
        .iter()
        .map(|(k, v)| (k.clone(), RationalFunction::constant(v.clone())))
        .collect();
    let recurrences: Vec<String> = engine
        .recurrences()
        .values()
        .map(|r| engine.render_recurrence(r))
        .collect();
    let mut out = json!({
        "goal": goal,
        "k": k,
        "closed_form": s.substitute(&env).map_err(input)?.to_string(),
        "recurrences": recurrences,
    });
    let mut assumptions: Vec<String> = engine.assumptions().iter().cloned().collect();
    let value = if limit {
        let lim = s.limit(&param_domains(&p.params));
        match &lim {
            Limit::Converges(v) => render(&opts, v)?,
            Limit::ConditionalOn { assumptions: a, limit } => {
                assumptions.extend(a.iter().cloned());
                render(&opts, limit)?
            }
            Limit::Diverges => json!({"exact": "diverges", "decimal": null}),
        }
    } else if let Some(n) = at {
        render(&opts, &s.value(n))?
    } else {
        json!({"exact": out["closed_form"].clone(), "decimal": null})
    };
    out["exact"] = value["exact"].clone();
    out["decimal"] = value["decimal"].clone();
    out["assumptions"] = json!(assumptions);
    Ok(out)
}

fn compile(path: &Path, output: Option<&Path>, inline: bool) -> Result<Option<String>, Failure> {
    let net = load_network(path)?;
    let opts = CompileOptions { clg_split: !inline };
    let c = match &net {
        Network::Static(b) => compile_bn(b, &opts),
        Network::Dynamic(d) => compile_dynbn(d, &opts),
    }
    .map_err(input)?;
    let text = pretty_print(&c.program);
    match output {
        Some(o) => {
            fs::write(o, text).map_err(|e| Failure::Input(format!("cannot write {}: {e}", o.display())))?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}

fn analysis(cli: &Cli, net: &Network) -> Result<Analysis, Failure> {
    Analysis::new(
        net,
        QueryOptions {
            compile: CompileOptions::default(),
            engine: engine_config(cli)?,
        },
    )
    .map_err(input)
}

fn render_options(cli: &Cli) -> Result<RenderOptions, Failure> {
    Ok(RenderOptions {
        precision: cli.precision,
        bindings: bindings(&cli.params)?,
    })
}

fn query(cli: &Cli, path: &Path, spec: &str) -> Result<Json, Failure> {
    let net = load_network(path)?;
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        read(Path::new(spec))?
    };
    let doc: Json = serde_json::from_str(&text).map_err(|e| Failure::Input(format!("query document: {e}")))?;
    let mut a = analysis(cli, &net)?;
    let out = run_query(&mut a, &doc, &render_options(cli)?).map_err(input)?;
    a.engine().verify_all().map_err(Failure::Internal)?;
    Ok(out)
}

fn samples(cli: &Cli, path: &Path, evidence: &str, n: Option<&str>) -> Result<Json, Failure> {
    let net = load_network(path)?;
    let ev = parse_conjunction(&net, evidence)?;
    let n = n
        .map(|t| parse_rational(t).map(RationalFunction::constant).map_err(input))
        .transpose()?;
    let mut a = analysis(cli, &net)?;
    let rep = a.expected_samples(&ev, n.as_ref(), true).map_err(input)?;
    if rep.routes_agree() == Some(false) {
        return Err(Failure::Internal(format!(
            "the monitor loop disagrees with 1/p = {}",
            rep.until_first
        )));
    }
    samples_json(&rep, &render_options(cli)?).map_err(input)
}

fn filter(
    cli: &Cli,
    path: &Path,
    obs: &str,
    state: Option<&str>,
    observation: Option<&str>,
) -> Result<Json, Failure> {
    let net = load_network(path)?;
    let Network::Dynamic(d) = &net else {
        return Err(Failure::Input("filtering needs a temporal network (type dynbn)".into()));
    };
    let state = match state {
        Some(s) => s.to_string(),
        None => {
            let candidates: Vec<&String> = d.inter_edges.iter().filter(|(k, v)| v.contains(k)).map(|(k, _)| k).collect();
            match candidates.as_slice() {
                [one] => (*one).clone(),
                _ => return Err(Failure::Input("name the hidden node with --state".into())),
            }
        }
    };
    let observation = match observation {
        Some(o) => o.to_string(),
        None => {
            let children: Vec<String> = d
                .slice
                .edges()
                .into_iter()
                .filter(|(p, _)| *p == state)
                .map(|(_, c)| c)
                .collect();
            match children.as_slice() {
                [one] => one.clone(),
                _ => return Err(Failure::Input("name the observed node with --observation".into())),
            }
        }
    };
    let seq: Vec<Json> = obs
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| if s == "-" { Json::Null } else { json!(s) })
        .collect();
    let doc = json!({"query": "filter", "state": state, "observation": observation, "obs": seq});
    let mut a = analysis(cli, &net)?;
    run_query(&mut a, &doc, &render_options(cli)?).map_err(input)
}

fn check(cli: &Cli, path: &Path, mc: Option<u64>, seed: u64, at: u64) -> Result<Json, Failure> {
    let net = load_network(path)?;
    let env = bindings(&cli.params)?;
    let unbound: Vec<String> = net
        .net()
        .param_names()
        .into_iter()
        .filter(|p| !env.contains_key(p))
        .collect();
    if !unbound.is_empty() {
        return Err(Failure::Input(format!(
            "bind every parameter with --param to run the oracles (missing: {})",
            unbound.join(", ")
        )));
    }
    let subst: HashMap<String, RationalFunction> = env
        .iter()
        .map(|(k, v)| (k.clone(), RationalFunction::constant(v.clone())))
        .collect();
    let mut a = analysis(cli, &net)?;
    let names: Vec<String> = net.net().nodes.iter().map(|n| n.name.clone()).collect();
    let mut checks = Vec::new();
    let numeric = |v: RationalFunction| -> Result<Rational, Failure> {
        v.substitute(&subst)
            .map_err(input)?
            .as_constant()
            .ok_or_else(|| Failure::Internal("engine answer stayed symbolic after binding".into()))
    };

    let mut goals: Vec<Vec<(String, u32)>> = names.iter().map(|n| vec![(n.clone(), 1)]).collect();
    for (i, x) in names.iter().enumerate() {
        for y in &names[i..] {
            if x == y {
                goals.push(vec![(x.clone(), 2)]);
            } else {
                goals.push(vec![(x.clone(), 1), (y.clone(), 1)]);
            }
        }
    }
    let label = |g: &[(String, u32)]| {
        g.iter()
            .map(|(n, e)| if *e == 1 { n.clone() } else { format!("{n}^{e}") })
            .collect::<Vec<_>>()
            .join("*")
    };

    if let Network::Static(bn) = &net {
        let all_discrete = bn.nodes.iter().all(|n| n.is_discrete());
        let table = if all_discrete {
            Some(enumerate_discrete(bn, &env, DEFAULT_STATE_CAP).map_err(input)?)
        } else {
            None
        };
        let gauss = if all_discrete {
            None
        } else {
            Some(gaussian_propagate(bn, &env).map_err(input)?)
        };
        for g in &goals {
            let engine = numeric(a.joint_moment(g, 1, None).map_err(input)?.scalar().unwrap().clone())?;
            let refs: Vec<(&str, u32)> = g.iter().map(|(n, e)| (n.as_str(), *e)).collect();
            let (oracle, name) = match (&table, &gauss) {
                (Some(t), _) => (t.expect(&refs).map_err(input)?, "enumeration"),
                (_, Some(s)) => (s.expect(&refs).map_err(input)?, "propagation"),
                _ => unreachable!(),
            };
            checks.push(json!({
                "check": format!("E[{}] vs {name}", label(g)),
                "engine": engine.to_string(),
                "oracle": oracle.to_string(),
                "ok": engine == oracle,
            }));
        }
    }
    let verified = a.engine().verify_all();
    checks.push(json!({
        "check": "closed forms satisfy their recurrences",
        "engine": verified.as_ref().map(|n| format!("{n} solved")).unwrap_or_else(|e| e.clone()),
        "oracle": null,
        "ok": verified.is_ok(),
    }));

    if let Some(samples) = mc {
        let slice = if a.is_dynamic() { at } else { 1 };
        let targets: Vec<Vec<(&str, u32)>> = names.iter().map(|n| vec![(n.as_str(), 1)]).collect();
        let cfg = McConfig {
            samples,
            seed,
            iterations: slice,
            ..Default::default()
        };
        let est = mc_estimate(a.program(), &env, &targets, &cfg).map_err(input)?;
        for (n, e) in names.iter().zip(est) {
            let s = a.moment_sequence(&[(n.clone(), 1)]).map_err(input)?;
            let exact = to_f64(&numeric(s.value(slice))?);
            let ok = (exact - e.mean).abs() <= 4.0 * e.se + 1e-9;
            checks.push(json!({
                "check": format!("E[{n}] at n={slice} vs Monte Carlo (4 standard errors)"),
                "engine": exact,
                "oracle": format!("{} +- {}", e.mean, e.se),
                "ok": ok,
            }));
        }
    }
    let passed = checks.iter().all(|c| c["ok"] == json!(true));
    let out = json!({"checks": checks, "passed": passed});
    if passed {
        Ok(out)
    } else {
        Err(Failure::Internal(format!(
            "oracle mismatch:\n{}",
            serde_json::to_string_pretty(&out).unwrap()
        )))
    }
}

fn text_lines(prefix: &str, v: &Json, out: &mut Vec<String>) {
    match v {
        Json::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                text_lines(&key, x, out);
            }
        }
        Json::Array(items) if items.iter().all(|i| !i.is_object() && !i.is_array()) => {
            let parts: Vec<String> = items.iter().map(scalar_text).collect();
            out.push(format!("{prefix}: {}", if parts.is_empty() { "none".into() } else { parts.join(", ") }));
        }
        Json::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                text_lines(&format!("{prefix}[{i}]"), x, out);
            }
        }
        other => out.push(format!("{prefix}: {}", scalar_text(other))),
    }
}

fn scalar_text(v: &Json) -> String {
    match v {
        Json::String(s) => s.clone(),
        Json::Null => "-".into(),
        other => other.to_string(),
    }
}

fn emit(cli: &Cli, v: &Json) {
    match cli.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(v).unwrap()),
        Format::Text => {
            let mut lines = Vec::new();
            text_lines("", v, &mut lines);
            for l in lines {
                println!("{l}");
            }
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let report = match &cli.command {
        Command::Analyze {
            program,
            goal,
            k,
            at,
            limit,
        } => analyze(cli, program, goal, *k, *at, *limit)?,
        Command::CompileBn {
            network,
            output,
            inline_clg,
        } => {
            if let Some(text) = compile(network, output.as_deref(), *inline_clg)? {
                print!("{text}");
            }
            return Ok(());
        }
        Command::Query { network, spec } => query(cli, network, spec)?,
        Command::Samples { network, evidence, n } => samples(cli, network, evidence, n.as_deref())?,
        Command::Filter {
            network,
            obs,
            state,
            observation,
        } => filter(cli, network, obs, state.as_deref(), observation.as_deref())?,
        Command::Check { network, mc, seed, at } => check(cli, network, *mc, *seed, *at)?,
    };
    emit(cli, &report);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(2)
        }
    }
}
