//! Command-line front end. [`run`] is the whole program minus process I/O,
//! so it can be driven from tests.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use serde_json::{json, Value};

use crate::bipartite;
use crate::compose::{self, Grouping, RankMode};
use crate::error::{Error, Result};
use crate::io::{self, DecompositionFile, StateFile};
use crate::linalg::{CMatrix, C64};
use crate::multipartite::{self, DecomposabilityReport, Verdict};
use crate::par::Execution;
use crate::partition::{self, PartitionInstance, PartitionSolution, Strategy};
use crate::purify;
use crate::state::{fixtures, Bipartition, SchmidtDecomposition, StateTensor};
use crate::tol::Tolerances;

#[derive(Debug, Parser)]
#[command(name = "schmidt", version, about = "Schmidt decompositions of pure multipartite states")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Debug, Args)]
struct GlobalOpts {
    /// Relative rank cutoff
    #[arg(long, global = true)]
    tol_rank: Option<f64>,
    /// Off-diagonal tolerance for simultaneous diagonalization
    #[arg(long, global = true)]
    tol_diag: Option<f64>,
    /// Orthonormality tolerance
    #[arg(long, global = true)]
    tol_orth: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Also write the report to this file
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Verb {
    /// Decide whether a state is Schmidt decomposable
    Check { state: PathBuf },
    /// Emit a Schmidt decomposition (across --cut, or multipartite)
    Decompose {
        state: PathBuf,
        #[arg(long)]
        cut: Option<String>,
    },
    /// Schmidt number across a cut
    Number {
        state: PathBuf,
        #[arg(long)]
        cut: String,
    },
    /// Nonzero reduced spectra of every cut
    Spectra { state: PathBuf },
    /// Best (or target) Schmidt number over bipartitions of given dimensions
    Partition {
        #[arg(long)]
        dims: String,
        #[arg(long)]
        target: Option<String>,
    },
    /// Tensor composition of two decompositions
    Compose {
        first: PathBuf,
        second: PathBuf,
        #[arg(long)]
        grouping: String,
    },
    /// Rank inequality for alpha*phi + beta*gamma
    Inequality {
        phi: PathBuf,
        gamma: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long, allow_hyphen_values = true)]
        beta: String,
        /// Bipartite rank across this cut; multipartite rank when absent
        #[arg(long)]
        cut: Option<String>,
    },
    /// Canonical purification of a density matrix
    Purify {
        density: PathBuf,
        #[arg(long)]
        ref_dim: Option<usize>,
    },
    /// Local unitaries taking the second state to the first
    Link { target: PathBuf, source: PathBuf },
    /// Generate a state file
    Gen {
        #[arg(long, conflicts_with = "fixture")]
        dims: Option<String>,
        /// Schmidt rank of a random decomposable state
        #[arg(long, conflicts_with = "generic")]
        rank: Option<usize>,
        /// Generic random state instead of a decomposable one
        #[arg(long)]
        generic: bool,
        /// Named state: w, bell, ghz3, ghz4, ...
        #[arg(long)]
        fixture: Option<String>,
    },
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub code: i32,
    /// Machine-readable report (stdout).
    pub report: String,
    /// One-line diagnostic or help text (stderr).
    pub diagnostic: Option<String>,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub fn run<I, T>(argv: I) -> RunOutput
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.to_string();
            return if code == EXIT_OK {
                RunOutput { code, report: text, diagnostic: None }
            } else {
                RunOutput { code, report: String::new(), diagnostic: Some(text.trim_end().to_owned()) }
            };
        }
    };
    match execute(&cli) {
        Ok((code, value)) => {
            let report = serde_json::to_string_pretty(&value).expect("reports serialize") + "\n";
            if let Some(path) = &cli.global.out {
                if let Err(e) = std::fs::write(path, &report) {
                    return RunOutput {
                        code: EXIT_USAGE,
                        report,
                        diagnostic: Some(format!("error: cannot write {}: {e}", path.display())),
                    };
                }
            }
            RunOutput { code, report, diagnostic: None }
        }
        Err(e) => RunOutput { code: EXIT_USAGE, report: String::new(), diagnostic: Some(format!("error: {e}")) },
    }
}

fn tolerances(g: &GlobalOpts) -> Result<Tolerances> {
    let mut t = Tolerances::default();
    for (name, value, slot) in [
        ("--tol-rank", g.tol_rank, &mut t.rank),
        ("--tol-diag", g.tol_diag, &mut t.diag),
        ("--tol-orth", g.tol_orth, &mut t.orth),
    ] {
        if let Some(v) = value {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgs(format!("{name} must be a positive number, got {v}")));
            }
            *slot = v;
        }
    }
    Ok(t)
}

fn execute(cli: &Cli) -> Result<(i32, Value)> {
    let tol = tolerances(&cli.global)?;
    let seed = cli.global.seed;
    match &cli.verb {
        Verb::Check { state } => {
            let s = io::read_state(state)?;
            if s.num_subsystems() == 2 {
                let dec = multipartite::decompose(&s, seed, &tol)?;
                return Ok((EXIT_OK, bipartite_check_report(&dec, seed, &tol)));
            }
            let report = multipartite::check_decomposable_with(&s, seed, &tol)?;
            let code = if report.is_decomposable() { EXIT_OK } else { EXIT_NEGATIVE };
            Ok((code, check_report(&report)))
        }
        Verb::Decompose { state, cut } => {
            let s = io::read_state(state)?;
            let file = match cut {
                Some(text) => {
                    let cut = parse_cut(text, s.num_subsystems())?;
                    let d = bipartite::schmidt_decompose_bipartite_with(&s, &cut, &tol)?;
                    DecompositionFile::from_decomposition(&d.decomposition, Some(cut.to_string()))
                }
                None => match multipartite::decompose(&s, seed, &tol) {
                    Ok(d) => DecompositionFile::from_decomposition(&d, None),
                    Err(Error::NotDecomposable) => {
                        return Ok((EXIT_NEGATIVE, json!({ "verb": "decompose", "verdict": "NotDecomposable" })));
                    }
                    Err(e) => return Err(e),
                },
            };
            Ok((EXIT_OK, to_value(&file)))
        }
        Verb::Number { state, cut } => {
            let s = io::read_state(state)?;
            let cut = parse_cut(cut, s.num_subsystems())?;
            let value = bipartite::schmidt_number_with(&s, &cut, &tol)?;
            Ok((EXIT_OK, json!({ "verb": "number", "cut": cut.to_string(), "schmidt_number": value, "tolerances": tol })))
        }
        Verb::Spectra { state } => {
            let s = io::read_state(state)?;
            let check = multipartite::equal_spectra_check_with(&s, &tol)?;
            let table: Vec<Value> = check
                .table
                .iter()
                .map(|(keep, spec)| json!({ "subsystems": one_based(keep), "spectrum": spec }))
                .collect();
            Ok((
                EXIT_OK,
                json!({
                    "verb": "spectra",
                    "equal": check.equal,
                    "max_deviation": check.max_deviation,
                    "table": table,
                    "tolerances": tol,
                }),
            ))
        }
        Verb::Partition { dims, target } => {
            let dims: Vec<BigUint> = parse_list(dims, "--dims")?;
            let target: Option<BigUint> = target.as_deref().map(|t| parse_one(t, "--target")).transpose()?;
            let instance = PartitionInstance { dims, target: target.clone() };
            let solution = partition::solve(&instance, Strategy::Auto, Execution::default())?;
            let code = if solution.is_some() { EXIT_OK } else { EXIT_NEGATIVE };
            let value = json!({
                "verb": "partition",
                "target": target.map(|t| t.to_string()),
                "feasible": solution.is_some(),
                "solution": solution.as_ref().map(partition_json),
                "text": partition_text(solution.as_ref()),
            });
            Ok((code, value))
        }
        Verb::Compose { first, second, grouping } => {
            let a = io::read_decomposition(first)?;
            let b = io::read_decomposition(second)?;
            let g = parse_grouping(grouping)?;
            let dec = compose::compose(&a, &b, &g)?;
            Ok((EXIT_OK, to_value(&DecompositionFile::from_decomposition(&dec, None))))
        }
        Verb::Inequality { phi, gamma, alpha, beta, cut } => {
            let phi = io::read_state(phi)?;
            let gamma = io::read_state(gamma)?;
            let mode = match cut {
                Some(text) => RankMode::Cut(parse_cut(text, phi.num_subsystems())?),
                None => RankMode::Multipartite { seed },
            };
            let r = compose::rank_inequality_check(&phi, &gamma, parse_complex(alpha)?, parse_complex(beta)?, &mode)?;
            let code = if r.holds == Some(true) { EXIT_OK } else { EXIT_NEGATIVE };
            Ok((
                code,
                json!({
                    "verb": "inequality",
                    "mode": match &mode { RankMode::Cut(c) => c.to_string(), RankMode::Multipartite { .. } => "multipartite".to_owned() },
                    "phi_rank": r.phi_rank,
                    "gamma_rank": r.gamma_rank,
                    "psi_rank": r.psi_rank,
                    "applicable": r.applicable,
                    "holds": r.holds,
                }),
            ))
        }
        Verb::Purify { density, ref_dim } => {
            let rho = io::read_density(density)?;
            let p = purify::purify_with(&rho, *ref_dim, &tol)?;
            Ok((EXIT_OK, to_value(&StateFile::from(&p.state))))
        }
        Verb::Link { target, source } => {
            let psi = io::read_state(target)?;
            let phi = io::read_state(source)?;
            match multipartite::local_unitary_link_with(&psi, &phi, seed, &tol) {
                Ok(link) => Ok((
                    EXIT_OK,
                    json!({
                        "verb": "link",
                        "linked": true,
                        "residual": link.residual,
                        "unitaries": link.unitaries.iter().map(matrix_json).collect::<Vec<_>>(),
                        "seed": seed,
                        "tolerances": tol,
                    }),
                )),
                Err(e @ (Error::CoefficientsMismatch { .. } | Error::NotDecomposable)) => Ok((
                    EXIT_NEGATIVE,
                    json!({ "verb": "link", "linked": false, "reason": e.to_string(), "seed": seed }),
                )),
                Err(e) => Err(e),
            }
        }
        Verb::Gen { dims, rank, generic, fixture } => {
            let state = match (fixture, dims) {
                (Some(name), _) => named_fixture(name)?,
                (None, Some(d)) => {
                    let dims: Vec<usize> = parse_list(d, "--dims")?;
                    if *generic {
                        multipartite::random_state(&dims, seed)?
                    } else {
                        let r = rank.unwrap_or_else(|| dims.iter().copied().min().unwrap_or(1));
                        multipartite::random_decomposable_state(&dims, r, seed)?
                    }
                }
                (None, None) => return Err(Error::InvalidArgs("gen needs --dims or --fixture".into())),
            };
            Ok((EXIT_OK, to_value(&StateFile::from(&state))))
        }
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("file types serialize")
}

fn one_based(indices: &[usize]) -> Vec<usize> {
    indices.iter().map(|i| i + 1).collect()
}

fn matrix_json(m: &CMatrix) -> Value {
    let rows: Vec<Vec<[f64; 2]>> =
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect();
    json!(rows)
}

fn decomposition_json(dec: &SchmidtDecomposition) -> Value {
    to_value(&DecompositionFile::from_decomposition(dec, None))
}

fn check_report(r: &DecomposabilityReport) -> Value {
    json!({
        "verb": "check",
        "verdict": verdict_name(r.verdict),
        "stage": r.stage.map(|s| s.name()),
        "seed": r.seed,
        "tolerances": r.tolerances,
        "spectra_deviation": r.spectra_deviation,
        "max_commutator": r.max_commutator,
        "pair_residual": r.pair_residual,
        "gram": r.gram.as_ref().map(matrix_json),
        "gram_offdiag": r.gram_offdiag,
        "tail_defect": r.tail_defect,
        "reconstruction_residual": r.reconstruction_residual,
        "decomposition": r.decomposition.as_ref().map(decomposition_json),
    })
}

fn bipartite_check_report(dec: &SchmidtDecomposition, seed: u64, tol: &Tolerances) -> Value {
    json!({
        "verb": "check",
        "verdict": verdict_name(Verdict::Decomposable),
        "stage": Value::Null,
        "seed": seed,
        "tolerances": tol,
        "reconstruction_residual": 0.0,
        "decomposition": decomposition_json(dec),
    })
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Decomposable => "Decomposable",
        Verdict::NotDecomposable => "NotDecomposable",
    }
}

fn partition_json(s: &PartitionSolution) -> Value {
    json!({
        "cut": s.cut.to_string(),
        "left": one_based(s.cut.left()),
        "right": one_based(s.cut.right()),
        "left_product": s.left_product.to_string(),
        "right_product": s.right_product.to_string(),
        "k": s.k.to_string(),
    })
}

fn partition_text(s: Option<&PartitionSolution>) -> String {
    match s {
        Some(s) => format!("K = {} with cut {} ({} x {})", s.k, s.cut, s.left_product, s.right_product),
        None => "infeasible".to_owned(),
    }
}

fn named_fixture(name: &str) -> Result<StateTensor> {
    let lower = name.to_ascii_lowercase();
    let state = match lower.as_str() {
        "w" => fixtures::w_state(),
        "bell" => fixtures::bell(),
        _ => match lower.strip_prefix("ghz").and_then(|n| n.parse::<usize>().ok()) {
            Some(n) if n >= 2 => fixtures::ghz(n),
            _ => return Err(Error::InvalidArgs(format!("unknown fixture {name:?}"))),
        },
    };
    Ok(state.with_label(lower))
}

fn parse_one<T: std::str::FromStr>(text: &str, flag: &str) -> Result<T> {
    text.trim().parse().map_err(|_| Error::InvalidArgs(format!("{flag}: cannot parse {text:?}")))
}

fn parse_list<T: std::str::FromStr>(text: &str, flag: &str) -> Result<Vec<T>> {
    text.split(',').map(|t| parse_one(t, flag)).collect()
}

/// `"re,im"` or a bare real number.
pub fn parse_complex(text: &str) -> Result<C64> {
    let parts: Vec<f64> = parse_list(text, "complex")?;
    match parts[..] {
        [re] => Ok(C64::new(re, 0.0)),
        [re, im] => Ok(C64::new(re, im)),
        _ => Err(Error::InvalidArgs(format!("expected \"re,im\", got {text:?}"))),
    }
}

/// Parses `"i,j|k,l"` with 1-based indices over `n` subsystems. Every
/// subsystem must appear exactly once.
pub fn parse_cut(text: &str, n: usize) -> Result<Bipartition> {
    let sides: Vec<&str> = text.split('|').collect();
    if sides.len() != 2 {
        return Err(Error::MalformedCut(format!("expected one '|' in {text:?}")));
    }
    let mut parsed = Vec::with_capacity(2);
    for side in &sides {
        if side.trim().is_empty() {
            return Err(Error::MalformedCut(format!("empty side in {text:?}")));
        }
        let indices = side
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| Error::MalformedCut(format!("bad index {t:?} in {text:?}"))))
            .collect::<Result<Vec<usize>>>()?;
        parsed.push(indices);
    }
    let mut seen = BTreeSet::new();
    for &i in parsed.iter().flatten() {
        if i == 0 || i > n {
            return Err(Error::IndicesOutOfRange(format!("index {i} not in 1..={n}")));
        }
        if !seen.insert(i) {
            return Err(Error::IndicesOutOfRange(format!("index {i} repeated in {text:?}")));
        }
    }
    if seen.len() != n {
        return Err(Error::IndicesOutOfRange(format!("{text:?} does not cover all {n} subsystems")));
    }
    let left: Vec<usize> = parsed[0].iter().map(|i| i - 1).collect();
    Bipartition::new(&left, n)
}

/// Parses `"x1,x2,..."` group sizes.
pub fn parse_grouping(text: &str) -> Result<Grouping> {
    let sizes = text
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| Error::GroupingMismatch(format!("bad group size {t:?}"))))
        .collect::<Result<Vec<usize>>>()?;
    Grouping::new(sizes)
}

/// Reads a state file; exposed for the binary's tests.
pub fn load_state(path: &Path) -> Result<StateTensor> {
    io::read_state(path)
}
