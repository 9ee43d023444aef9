//! `ikl`: command-line front end for learning, minimisation, products, checking and LBT.

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ikl::check::{check, parse_requirement, Requirement, Verdict};
use ikl::format::{read_kripke, write_kripke};
use ikl::kripke::prefix_closure;
use ikl::lbt::{lbt_run, LbtConfig, LbtVerdict};
use ikl::learn::{id_learn, FidLearner};
use ikl::minimise::minimise_traced;
use ikl::product::subdirect_product;
use ikl::random::{random_kripke, random_kripke_min_indegree};
use ikl::teacher::{CachedTeacher, ExternalTeacher, KripkeTeacher, Teacher, TeacherError};
use ikl::{Bits, Dfa, InputAlphabet, KripkeStructure, Word};

#[derive(Parser)]
#[command(name = "ikl", version, about = "Incremental learning and learning-based testing of Kripke structures")]
struct Cli {
    /// Seed for every random choice made by the run.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Progress messages on stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a DFA family from the query strings in a file.
    Learn(LearnArgs),
    /// Minimise a Kripke structure.
    Minimise(MinimiseArgs),
    /// Subdirect product of structures over a common alphabet.
    Product(ProductArgs),
    /// Model check a structure against a requirement.
    Check(CheckArgs),
    /// Learning-based testing of a system under test against a requirement.
    Lbt(LbtArgs),
    /// Generate a random Kripke structure.
    Gen(GenArgs),
}

#[derive(Args)]
struct SutArgs {
    /// A model file, or a command speaking the line protocol.
    #[arg(long)]
    sut: String,
    /// Input alphabet of a command SUT, comma separated.
    #[arg(long, value_delimiter = ',')]
    alphabet: Option<Vec<String>>,
    /// Output width of a command SUT.
    #[arg(long)]
    bits: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Id,
    Fid,
}

#[derive(Args)]
struct LearnArgs {
    #[arg(long, value_enum, default_value_t = Algo::Fid)]
    algo: Algo,
    #[command(flatten)]
    sut: SutArgs,
    /// One input string per line, symbols separated by spaces.
    #[arg(long)]
    queries: PathBuf,
    /// Directory receiving the numbered family files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Per-family CSV `t,channel,states,queries` (default: <out-dir>/learn.csv).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct MinimiseArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// CSV of `state,block` for every reachable input state.
    #[arg(long)]
    emit_partition: Option<PathBuf>,
    /// Print every block split to stdout.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct ProductArgs {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    model: PathBuf,
    #[arg(long)]
    req: PathBuf,
}

#[derive(Args)]
struct LbtArgs {
    #[command(flatten)]
    sut: SutArgs,
    #[arg(long)]
    req: PathBuf,
    /// Convergence window: stop after n consecutive equivalent hypotheses.
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long, default_value_t = 100_000)]
    max_queries: u64,
    #[arg(long, default_value_t = 3600)]
    max_seconds: u64,
    /// Per-iteration CSV report.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    states: usize,
    #[arg(long)]
    bits: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    alphabet: Vec<String>,
    /// Enter every non-initial state from at least this many distinct states.
    #[arg(long)]
    min_indegree: Option<usize>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// A failed run and its exit code.
#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Input(ikl::Error),
    #[error(transparent)]
    Teacher(TeacherError),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Input(_) => 2,
            Failure::Teacher(_) => 3,
        }
    }
}

impl From<ikl::Error> for Failure {
    fn from(e: ikl::Error) -> Self {
        match e {
            ikl::Error::Teacher(t) => Failure::Teacher(t),
            other => Failure::Input(other),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.into())
    }
}

impl From<TeacherError> for Failure {
    fn from(e: TeacherError) -> Self {
        Failure::Teacher(e)
    }
}

type Outcome = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let verbose = cli.verbose;
    let result = match cli.command {
        Command::Learn(a) => learn(a, verbose),
        Command::Minimise(a) => minimise_cmd(a),
        Command::Product(a) => product(a),
        Command::Check(a) => check_cmd(a),
        Command::Lbt(a) => lbt(a, cli.seed, verbose),
        Command::Gen(a) => gen(a, cli.seed),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("ikl: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn read_model(path: &Path) -> Result<KripkeStructure, Failure> {
    read_kripke(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn read_requirement(path: &Path) -> Result<Requirement, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    parse_requirement(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// A model file is served in-process; anything else is run as a command.
fn open_sut(a: &SutArgs) -> Result<Box<dyn Teacher>, Failure> {
    let path = Path::new(&a.sut);
    if path.is_file() {
        return Ok(Box::new(KripkeTeacher::new(read_model(path)?)));
    }
    let (Some(symbols), Some(bits)) = (&a.alphabet, a.bits) else {
        return Err(Failure::Usage(format!(
            "`{}` is not a model file; a command SUT needs --alphabet and --bits",
            a.sut
        )));
    };
    let alphabet = InputAlphabet::new(symbols.iter().map(String::as_str))?;
    let argv: Vec<&str> = a.sut.split_whitespace().collect();
    Ok(Box::new(ExternalTeacher::spawn(&argv, alphabet, bits)?))
}

fn read_queries(path: &Path, alphabet: &InputAlphabet) -> Result<Vec<Word>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            alphabet
                .parse_word(l)
                .map_err(|e| Failure::Usage(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

/// Bit `c` (0-based) of another teacher, as a 1-bit teacher.
struct Channel<'a, T: ?Sized> {
    inner: &'a mut T,
    c: usize,
}

impl<T: Teacher + ?Sized> Teacher for Channel<'_, T> {
    fn alphabet(&self) -> &InputAlphabet {
        self.inner.alphabet()
    }
    fn bits(&self) -> usize {
        1
    }
    fn query(&mut self, w: &Word) -> Result<Bits, TeacherError> {
        let out = self.inner.query(w)?;
        Ok(Bits::new(out.get(self.c) as u64, 1))
    }
    fn query_count(&self) -> u64 {
        self.inner.query_count()
    }
}

struct FamilyWriter {
    out_dir: PathBuf,
    csv: BufWriter<fs::File>,
}

impl FamilyWriter {
    fn emit(&mut self, t: usize, members: &[Dfa], queries: u64) -> Result<(), Failure> {
        for (c, m) in members.iter().enumerate() {
            write_kripke(self.out_dir.join(format!("t{t:04}_c{}.dfa", c + 1)), m.kripke())?;
            writeln!(self.csv, "{t},{},{},{queries}", c + 1, m.num_states())?;
        }
        Ok(())
    }
}

fn learn(a: LearnArgs, verbose: bool) -> Outcome {
    let mut teacher = CachedTeacher::new(open_sut(&a.sut)?);
    let queries = read_queries(&a.queries, teacher.alphabet())?;
    fs::create_dir_all(&a.out_dir)?;
    let csv_path = a.csv.unwrap_or_else(|| a.out_dir.join("learn.csv"));
    let mut out = FamilyWriter {
        out_dir: a.out_dir,
        csv: BufWriter::new(fs::File::create(csv_path)?),
    };
    writeln!(out.csv, "t,channel,states,queries")?;
    match a.algo {
        Algo::Fid => {
            let mut fid = FidLearner::init(&mut teacher)?;
            out.emit(0, fid.family().members(), teacher.unique_queries())?;
            for (i, s) in queries.iter().enumerate() {
                let family = fid.process(s, &mut teacher)?;
                out.emit(i + 1, family.members(), teacher.unique_queries())?;
                if verbose {
                    eprintln!("t={} states={:?}", i + 1, family.state_counts());
                }
            }
        }
        Algo::Id => {
            let mut p: BTreeSet<Word> = prefix_closure(queries.iter());
            p.insert(Word::empty());
            let members = (0..teacher.bits())
                .map(|c| id_learn(&mut Channel { inner: &mut teacher, c }, &p))
                .collect::<ikl::Result<Vec<Dfa>>>()?;
            out.emit(queries.len(), &members, teacher.unique_queries())?;
        }
    }
    out.csv.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn minimise_cmd(a: MinimiseArgs) -> Outcome {
    let k = read_model(&a.input)?;
    let min = minimise_traced(&k);
    write_kripke(&a.output, &min.quotient)?;
    if let Some(path) = a.emit_partition {
        let mut w = BufWriter::new(fs::File::create(path)?);
        writeln!(w, "state,block")?;
        for &q in min.reachable_states() {
            writeln!(w, "{q},{}", min.partition.block_of(q))?;
        }
        w.flush()?;
    }
    if a.trace {
        let stdout = io::stdout();
        let mut w = stdout.lock();
        for e in &min.trace {
            writeln!(
                w,
                "split block={} splitter={} symbol={} kept={:?} new_block={} split_off={:?}",
                e.block,
                e.splitter,
                k.alphabet().name(e.symbol),
                e.kept,
                e.new_block,
                e.split_off
            )?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn product(a: ProductArgs) -> Outcome {
    let factors = a
        .inputs
        .iter()
        .map(|p| read_model(p))
        .collect::<Result<Vec<_>, _>>()?;
    write_kripke(&a.output, &subdirect_product(&factors)?)?;
    Ok(ExitCode::SUCCESS)
}

fn check_cmd(a: CheckArgs) -> Outcome {
    let k = read_model(&a.model)?;
    let r = read_requirement(&a.req)?;
    match check(&k, &r)? {
        Verdict::Pass => {
            println!("pass");
            Ok(ExitCode::SUCCESS)
        }
        Verdict::Counterexample { word, reason } => {
            println!("{}", k.alphabet().format_word(&word));
            eprintln!("counterexample: {reason}");
            Ok(ExitCode::from(1))
        }
    }
}

fn lbt(a: LbtArgs, seed: u64, verbose: bool) -> Outcome {
    let mut cfg = LbtConfig::new(read_requirement(&a.req)?);
    cfg.n = a.n;
    cfg.max_queries = a.max_queries;
    cfg.max_wall_time = Duration::from_secs(a.max_seconds);
    cfg.seed = seed;
    let sut = open_sut(&a.sut)?;
    let alphabet = sut.alphabet().clone();
    let report = lbt_run(sut, &cfg)?;
    if let Some(path) = &a.csv {
        let mut w = BufWriter::new(fs::File::create(path)?);
        report.write_csv(&mut w)?;
        w.flush()?;
    }
    if verbose {
        eprintln!(
            "{} iterations, {} queries, {:.2} s",
            report.records.len(),
            report.queries,
            report.elapsed.as_secs_f64()
        );
    }
    println!("{}", report.verdict.tag());
    match &report.verdict {
        LbtVerdict::TrueNegativeFound { witness, observed } => {
            println!("witness: {}", alphabet.format_word(witness));
            let outs: Vec<String> = observed.iter().map(Bits::to_string).collect();
            println!("observed: {}", outs.join(" "));
            Ok(ExitCode::from(1))
        }
        LbtVerdict::ConvergedNoViolation | LbtVerdict::BudgetExhausted => Ok(ExitCode::SUCCESS),
        LbtVerdict::TeacherFailed(msg) => {
            eprintln!("ikl: SUT failed: {msg}");
            Ok(ExitCode::from(3))
        }
    }
}

fn gen(a: GenArgs, seed: u64) -> Outcome {
    if a.states == 0 || a.bits == 0 || a.bits > 64 {
        return Err(Failure::Usage("need --states >= 1 and 1 <= --bits <= 64".into()));
    }
    let alphabet = InputAlphabet::new(a.alphabet.iter().map(String::as_str))?;
    let k = match a.min_indegree {
        None => random_kripke(seed, a.states, a.bits, &alphabet),
        Some(m) if m <= alphabet.len() && (a.states == 1 || m < a.states) => {
            random_kripke_min_indegree(seed, a.states, a.bits, &alphabet, m)
        }
        Some(m) => {
            return Err(Failure::Usage(format!(
                "--min-indegree {m} needs at most {} symbols and fewer than --states",
                alphabet.len()
            )))
        }
    };
    match a.output {
        Some(path) => write_kripke(path, &k)?,
        None => print!("{k}"),
    }
    Ok(ExitCode::SUCCESS)
}
