use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ltlsat_core::boolfn::named_base;
use ltlsat_core::formula::{parse_with, sat_bounded, ParseOptions, DEFAULT_WORK_LIMIT};
use ltlsat_core::harness::{expected_cells, parse_cells, qbf_instances, qbf_suite, table_check};
use ltlsat_core::reductions::{
    expand_to_builtin, flatten, qbf_to_since, qbf_to_since_b, qbf_to_until,
    rewrite_with_true_anchor, synth_short, verify_model_shape, AnchorOps, FlattenMode,
    ReductionOutput, Target,
};
use ltlsat_core::tableau::DEFAULT_MAX_ATOMS;
use ltlsat_core::{
    classify, decide_tableau_with, decide_with, parse, Base, DecideOptions, Error, FragmentSpec,
    Lasso, OpSet, QbfInstance, SatResult, TableauOptions, Witness,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

/// Exit status for UNSAT answers and failed checks.
const NEGATIVE: u8 = 2;

#[derive(Parser)]
#[command(name = "ltlsat", version, about = "Classify and decide LTL satisfiability fragments")]
struct Cli {
    /// Print one JSON record instead of text.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Complexity class of a fragment.
    Classify(FragmentArgs),
    /// Decide a formula with the procedure chosen for its fragment.
    Decide(DecideArgs),
    /// Decide a formula over the built-in connectives with the tableau.
    Oracle(OracleArgs),
    /// Apply one of the reductions and print the resulting formula.
    #[command(subcommand)]
    Reduce(Reduce),
    /// Check the block structure of a model of the S encoding of a QBF.
    VerifyShape(VerifyShapeArgs),
    /// Compare the classifier with a table of expected classes.
    TableCheck(TableCheckArgs),
    /// Compare QBF validity with satisfiability of its three encodings.
    QbfSuite(QbfSuiteArgs),
    /// Search for a read-once realisation of and/or/not over a base.
    Synth(SynthArgs),
}

#[derive(Args)]
struct FragmentArgs {
    /// Base file (`name arity table` per line) or a named base: BF R1 M S1 D L L0 V E N I I2.
    #[arg(long)]
    base: String,
    /// Temporal operators, e.g. `F,X`; `-` for none.
    #[arg(long, default_value = "-")]
    ops: String,
}

#[derive(Args)]
struct FormulaArgs {
    /// Formula text.
    #[arg(long, conflicts_with = "formula_file", required_unless_present = "formula_file")]
    formula: Option<String>,
    /// File holding the formula text.
    #[arg(long)]
    formula_file: Option<PathBuf>,
}

#[derive(Args)]
struct DecideArgs {
    #[command(flatten)]
    fragment: FragmentArgs,
    #[command(flatten)]
    formula: FormulaArgs,
    /// Print the witness lasso for SAT answers.
    #[arg(long)]
    witness: bool,
    /// Cross-check the verdict with the tableau and a bounded lasso search.
    #[arg(long)]
    oracle_check: bool,
    /// Cap on tableau atoms.
    #[arg(long, default_value_t = DEFAULT_MAX_ATOMS)]
    max_atoms: usize,
    /// Cap on structures tried by the enumerating procedures.
    #[arg(long, default_value_t = DEFAULT_WORK_LIMIT)]
    max_work: u64,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    formula: FormulaArgs,
    /// Base for connectives beyond the built-ins; they are expanded before the search.
    #[arg(long)]
    base: Option<String>,
    /// Require the formula to hold at the first state.
    #[arg(long)]
    initial: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_ATOMS)]
    max_atoms: usize,
}

#[derive(Subcommand)]
enum Reduce {
    /// One fresh variable per subformula.
    Flatten {
        #[command(flatten)]
        formula: FormulaArgs,
        /// Produce an F-only formula; input may use F and G only.
        #[arg(long)]
        future_only: bool,
    },
    /// Rewrite an and/or/not formula into a base that expresses x & !y.
    Anchor {
        #[command(flatten)]
        formula: FormulaArgs,
        #[arg(long)]
        base: String,
        #[arg(long, value_enum)]
        ops: AnchorArg,
    },
    /// QBF to an S-formula over and/or/not.
    #[command(name = "qbf2s")]
    Qbf2s { qbf: PathBuf },
    /// QBF to an S-formula over a base that expresses x & !y.
    #[command(name = "qbf2s-b")]
    Qbf2sB {
        qbf: PathBuf,
        #[arg(long, default_value = "S1")]
        base: String,
    },
    /// QBF to a U-formula over and/or/not.
    #[command(name = "qbf2u")]
    Qbf2u { qbf: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum AnchorArg {
    #[value(name = "G,X")]
    GX,
    #[value(name = "F,X")]
    FX,
}

#[derive(Args)]
struct VerifyShapeArgs {
    /// Lasso in JSON: {"prefix": [[..]], "loop": [[..]]}.
    #[arg(long)]
    lasso: PathBuf,
    #[arg(long)]
    index: usize,
    #[arg(long)]
    qbf: PathBuf,
}

#[derive(Args)]
struct TableCheckArgs {
    /// Expected cells (`base ops class` per line); defaults to the bundled table.
    #[arg(long, conflicts_with_all = ["base", "ops"])]
    expected: Option<PathBuf>,
    /// Query a single named base instead of checking a table.
    #[arg(long, requires = "ops")]
    base: Option<String>,
    #[arg(long, requires = "base")]
    ops: Option<String>,
}

#[derive(Args)]
struct QbfSuiteArgs {
    max_quantifiers: usize,
    max_matrix_nodes: usize,
    /// Check a random sample of this many instances instead of all.
    #[arg(long)]
    sample: Option<usize>,
    /// Seed for `--sample`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_ATOMS)]
    max_atoms: usize,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    base: String,
    #[arg(long, value_enum)]
    target: TargetArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    And,
    Or,
    Not,
}

impl From<TargetArg> for Target {
    fn from(t: TargetArg) -> Target {
        match t {
            TargetArg::And => Target::And,
            TargetArg::Or => Target::Or,
            TargetArg::Not => Target::Not,
        }
    }
}

#[derive(Serialize)]
struct RunReport {
    command: String,
    #[serde(flatten)]
    result: Value,
    elapsed_ms: f64,
}

/// What a subcommand produced: text for humans, a JSON body, and the exit status.
struct Output {
    text: String,
    /// Extra text-mode lines for stderr, so stdout stays machine-readable.
    notes: Vec<String>,
    body: Value,
    status: u8,
}

fn ok(text: String, body: Value) -> Output {
    Output {
        text,
        notes: Vec::new(),
        body,
        status: 0,
    }
}

fn with_status(text: String, body: Value, status: u8) -> Output {
    Output {
        status,
        ..ok(text, body)
    }
}

/// Prints a line, treating a closed pipe as success.
fn emit(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
}

fn load_base(spec: &str) -> Result<Base> {
    if let Some(b) = named_base(spec) {
        return Ok(b);
    }
    let text = fs::read_to_string(spec)
        .with_context(|| format!("`{spec}` is neither a named base nor a readable file"))?;
    Ok(Base::parse(&text)?)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn formula_text(args: &FormulaArgs) -> Result<String> {
    match (&args.formula, &args.formula_file) {
        (Some(t), _) => Ok(t.clone()),
        (None, Some(p)) => read(p),
        (None, None) => bail!("give --formula or --formula-file"),
    }
}

fn load_qbf(path: &Path) -> Result<QbfInstance> {
    Ok(QbfInstance::parse(&read(path)?)?)
}

fn show_lasso(l: &Lasso) -> String {
    let states = |ss: &[ltlsat_core::formula::Assignment]| {
        let v: Vec<String> = ss
            .iter()
            .map(|s| format!("{{{}}}", s.iter().cloned().collect::<Vec<_>>().join(",")))
            .collect();
        format!("[{}]", v.join(" "))
    };
    format!("prefix {} loop {}", states(l.prefix()), states(l.cycle()))
}

fn show_witness(w: &Witness) -> String {
    format!("{} at index {}", show_lasso(&w.lasso), w.index)
}

fn verdict_output(r: &SatResult, witness: bool) -> Output {
    let word = if r.satisfiable { "SAT" } else { "UNSAT" };
    let mut text = format!("{word} via {}", r.method);
    let mut body = json!({ "satisfiable": r.satisfiable, "method": r.method });
    if witness {
        match &r.witness {
            Some(w) => {
                text.push_str(&format!("\nwitness: {}", show_witness(w)));
                body["witness"] = serde_json::to_value(w).expect("witness serializes");
            }
            None if r.satisfiable => text.push_str("\nwitness: none produced"),
            None => {}
        }
    }
    with_status(text, body, if r.satisfiable { 0 } else { NEGATIVE })
}

fn cmd_classify(a: &FragmentArgs) -> Result<Output> {
    let spec = FragmentSpec::new(load_base(&a.base)?, OpSet::parse(&a.ops)?);
    let v = classify(&spec);
    Ok(ok(
        format!("class: {}\nstrategy: {}\nreason: {}", v.class, v.strategy, v.citation),
        serde_json::to_value(&v)?,
    ))
}

fn cmd_decide(a: &DecideArgs) -> Result<Output> {
    let base = load_base(&a.fragment.base)?;
    let spec = FragmentSpec::new(base.clone(), OpSet::parse(&a.fragment.ops)?);
    let f = parse(&formula_text(&a.formula)?, &base)?;
    let opts = DecideOptions {
        tableau: TableauOptions {
            max_atoms: a.max_atoms,
            initial_only: false,
        },
        work_limit: a.max_work,
    };
    let r = decide_with(&f, &spec, &opts)?;
    let mut out = verdict_output(&r, a.witness);
    if a.oracle_check {
        let t = decide_tableau_with(&expand_to_builtin(&f), opts.tableau)?;
        let bounded = sat_bounded(&f, 3, 2, a.max_work)?.is_some();
        if t.satisfiable != r.satisfiable || (bounded && !r.satisfiable) {
            return Err(Error::Invariant(format!(
                "oracle disagreement on {f}: decider {}, tableau {}, bounded search {}",
                r.satisfiable, t.satisfiable, bounded
            ))
            .into());
        }
        out.text.push_str("\noracle check: agrees");
        out.body["oracle_check"] = json!({ "tableau": t.satisfiable, "bounded": bounded });
    }
    Ok(out)
}

fn cmd_oracle(a: &OracleArgs) -> Result<Output> {
    let opts = ParseOptions {
        allow_reserved: true,
    };
    let base = match &a.base {
        Some(b) => load_base(b)?,
        None => Base::default(),
    };
    let f = parse_with(&formula_text(&a.formula)?, &base, opts)?;
    let t = TableauOptions {
        max_atoms: a.max_atoms,
        initial_only: a.initial,
    };
    let r = decide_tableau_with(&expand_to_builtin(&f), t)?;
    Ok(verdict_output(&r, true))
}

fn reduction_output(out: ReductionOutput) -> Output {
    let mut o = ok(
        out.formula.to_string(),
        serde_json::to_value(&out).expect("reduction serializes"),
    );
    o.notes = out
        .fresh_vars
        .iter()
        .map(|v| format!("# {}: {}", v.name, v.role))
        .collect();
    o
}

fn cmd_reduce(r: &Reduce) -> Result<Output> {
    let out = match r {
        Reduce::Flatten {
            formula,
            future_only,
        } => {
            let f = parse(&formula_text(formula)?, &Base::default())?;
            let mode = if *future_only {
                FlattenMode::FutureOnly
            } else {
                FlattenMode::Full
            };
            flatten(&f, mode)?
        }
        Reduce::Anchor { formula, base, ops } => {
            let f = parse(&formula_text(formula)?, &Base::default())?;
            let ops = match ops {
                AnchorArg::GX => AnchorOps::GX,
                AnchorArg::FX => AnchorOps::FX,
            };
            rewrite_with_true_anchor(&f, &load_base(base)?, ops)?
        }
        Reduce::Qbf2s { qbf } => qbf_to_since(&load_qbf(qbf)?),
        Reduce::Qbf2sB { qbf, base } => qbf_to_since_b(&load_qbf(qbf)?, &load_base(base)?)?,
        Reduce::Qbf2u { qbf } => qbf_to_until(&load_qbf(qbf)?),
    };
    Ok(reduction_output(out))
}

fn cmd_verify_shape(a: &VerifyShapeArgs) -> Result<Output> {
    let lasso = Lasso::from_json(&read(&a.lasso)?)?;
    let q = load_qbf(&a.qbf)?;
    let good = verify_model_shape(&lasso, a.index, &q)?;
    Ok(with_status(
        if good { "shape: ok" } else { "shape: rejected" }.into(),
        json!({ "shape_ok": good }),
        if good { 0 } else { NEGATIVE },
    ))
}

fn cmd_table_check(a: &TableCheckArgs) -> Result<Output> {
    if let (Some(base), Some(ops)) = (&a.base, &a.ops) {
        let spec = FragmentSpec::new(load_base(base)?, OpSet::parse(ops)?);
        let v = classify(&spec);
        return Ok(ok(format!("{base} {} {}", spec.temporal, v.class), serde_json::to_value(&v)?));
    }
    let cells = match &a.expected {
        Some(p) => parse_cells(&read(p)?)?,
        None => expected_cells(),
    };
    let rep = table_check(&cells);
    let mut text = format!("{} cells, {} mismatches", rep.cells, rep.mismatches.len());
    for m in &rep.mismatches {
        text.push_str(&format!(
            "\nmismatch: {} {} expected {} found {}",
            m.base, m.ops, m.expected, m.found
        ));
    }
    let status = if rep.mismatches.is_empty() { 0 } else { NEGATIVE };
    Ok(with_status(text, serde_json::to_value(&rep)?, status))
}

fn cmd_qbf_suite(a: &QbfSuiteArgs) -> Result<Output> {
    let opts = TableauOptions {
        max_atoms: a.max_atoms,
        initial_only: false,
    };
    let rep = match a.sample {
        None => qbf_suite(a.max_quantifiers, a.max_matrix_nodes, opts)?,
        Some(n) => {
            let mut all = qbf_instances(a.max_quantifiers, a.max_matrix_nodes)?;
            all.shuffle(&mut ChaCha8Rng::seed_from_u64(a.seed));
            all.truncate(n);
            ltlsat_core::harness::qbf_suite_on(&all, opts)?
        }
    };
    let mut text = format!(
        "{} instances ({} valid): S {} / S1 {} / U {} agree, shapes {}/{} ok",
        rep.instances,
        rep.valid,
        rep.since_agree,
        rep.since_b_agree,
        rep.until_agree,
        rep.shapes_checked - rep.shape_failures,
        rep.shapes_checked
    );
    for f in &rep.failures {
        text.push_str(&format!("\nfailure: {f}"));
    }
    let mut body = serde_json::to_value(&rep)?;
    if a.sample.is_some() {
        body["seed"] = json!(a.seed);
    }
    Ok(with_status(text, body, if rep.passed() { 0 } else { NEGATIVE }))
}

fn cmd_synth(a: &SynthArgs) -> Result<Output> {
    let target = Target::from(a.target);
    match synth_short(&load_base(&a.base)?, target) {
        Ok(f) => Ok(ok(f.to_string(), json!({ "target": target, "formula": f }))),
        Err(Error::Inconclusive(msg)) => Ok(with_status(
            format!("inconclusive: {msg}"),
            json!({ "target": target, "inconclusive": msg }),
            NEGATIVE,
        )),
        Err(e) => Err(e.into()),
    }
}

fn run(cli: &Cli) -> Result<Output> {
    match &cli.command {
        Command::Classify(a) => cmd_classify(a),
        Command::Decide(a) => cmd_decide(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Reduce(r) => cmd_reduce(r),
        Command::VerifyShape(a) => cmd_verify_shape(a),
        Command::TableCheck(a) => cmd_table_check(a),
        Command::QbfSuite(a) => cmd_qbf_suite(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let command = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    match run(&cli) {
        Ok(out) => {
            if cli.json {
                let report = RunReport {
                    command,
                    result: out.body,
                    elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
                };
                emit(&serde_json::to_string(&report).expect("report serializes"));
            } else {
                emit(&out.text);
                for n in &out.notes {
                    eprintln!("{n}");
                }
            }
            ExitCode::from(out.status)
        }
        Err(e) => {
            if cli.json {
                emit(&json!({ "command": command, "error": format!("{e:#}") }).to_string());
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(1)
        }
    }
}
