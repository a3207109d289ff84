mod commands;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use commands::{Outcome, Status};
use esk_core::etnc::artin::CharacterInput;
use esk_core::gen::{GeneratorParams, Recipe};
use esk_core::io::{self, InstanceFile};
use esk_core::ring::RingSpec;
use esk_core::Error;
use rayon::prelude::*;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "esk", version, about = "Finite-level Euler, Kolyvagin and Stark system computations")]
struct Cli {
    /// Worker threads for commands taking several instance files.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Where violating instances are written.
    #[arg(long, global = true, default_value = "counterexamples")]
    dump_dir: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum StarkCmd {
    /// Solve for the Stark systems of rank equal to the core rank.
    Solve {
        files: Vec<PathBuf>,
        #[arg(long)]
        tag: Option<String>,
        /// Most auxiliary primes in a node (default: all of them).
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        level: Option<u32>,
    },
    /// Compare the ideals I_j of the solver's generator with Fitting ideals.
    Ij {
        files: Vec<PathBuf>,
        #[arg(long)]
        tag: Option<String>,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        jmax: Option<usize>,
    },
    /// Solve at the top level and compare with Fitting ideals up to the depth.
    Report {
        files: Vec<PathBuf>,
        #[arg(long)]
        tag: Option<String>,
        #[arg(long)]
        depth: Option<usize>,
    },
}

#[derive(Subcommand)]
enum Cmd {
    /// Describe the ring R[G] = GR(p^m, f)[G].
    Ring {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 1)]
        m: u32,
        #[arg(long, default_value_t = 1)]
        f: u32,
        #[arg(long, value_delimiter = ',')]
        group: Vec<u64>,
        #[arg(long, value_delimiter = ',')]
        aux: Vec<u64>,
    },
    /// Fitting ideals of a module.
    Fitting {
        files: Vec<PathBuf>,
        #[arg(long)]
        j: Option<usize>,
    },
    /// Exterior power against its bidual.
    Bidual {
        files: Vec<PathBuf>,
        #[arg(long, default_value_t = 1)]
        rank: usize,
    },
    /// Validate a Selmer instance.
    Selmer { files: Vec<PathBuf> },
    /// Core rank from residual dimensions.
    CoreRank {
        files: Vec<PathBuf>,
        #[arg(long)]
        tag: Option<String>,
    },
    /// Search for core vertices.
    CoreVertex {
        files: Vec<PathBuf>,
        #[arg(long)]
        tag: Option<String>,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        level: Option<u32>,
    },
    /// Norm-injectivity at the core places.
    Cartesian {
        files: Vec<PathBuf>,
        #[arg(long)]
        tag: Option<String>,
    },
    /// Cartesian condition against existence of core vertices at every level.
    ThmFree {
        files: Vec<PathBuf>,
        #[arg(long)]
        tag: Option<String>,
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Stark systems.
    Stark {
        #[command(subcommand)]
        cmd: StarkCmd,
    },
    /// Euler polynomial from a Frobenius matrix or from elliptic data a, l.
    EulerPoly {
        #[arg(long)]
        frobenius: Option<String>,
        #[arg(long, allow_negative_numbers = true, requires = "ell")]
        a: Option<i64>,
        #[arg(long, requires = "a")]
        ell: Option<i64>,
        #[arg(long, default_value_t = 3)]
        p: u64,
    },
    /// Image of eta times Xi against the Fitting ideal of H^2.
    BkCheck { files: Vec<PathBuf> },
    /// The Xi lattice and its integrality against the group ring and O_S.
    Xi { files: Vec<PathBuf> },
    /// Associated order of one of the lattices of an eTNC instance.
    AssocOrder {
        files: Vec<PathBuf>,
        /// fitting, image, xi, product or group-ring
        #[arg(long, default_value = "fitting")]
        lattice: String,
    },
    /// Fitting ideals and bidual images under G -> G/H.
    Codescent { files: Vec<PathBuf> },
    /// Rational combination of induced trivial characters.
    Artin {
        #[arg(long, value_delimiter = ',')]
        group: Vec<u64>,
        /// Character values as a JSON array, indexed like the group.
        #[arg(long)]
        values: Option<String>,
        /// JSON list of [character exponents, multiplicity].
        #[arg(long)]
        multiset: Option<String>,
    },
    /// Decomposition of a module over a cyclic p-group into permutation modules.
    Yakovlev { files: Vec<PathBuf> },
    /// Generate a synthetic instance.
    Gen {
        #[arg(long)]
        recipe: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        p: u64,
        #[arg(long, default_value_t = 1)]
        m: u32,
        #[arg(long, default_value_t = 1)]
        f: u32,
        #[arg(long, value_delimiter = ',')]
        group: Vec<u64>,
        #[arg(long, default_value_t = 1)]
        core: usize,
        #[arg(long, default_value_t = 3)]
        aux: usize,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long, default_value_t = 1)]
        rank: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Brute-force cross-check of a main algorithm.
    Oracle {
        /// ideal-membership, bidual-image, stark-enumerate, stabilizer or fitting-minors
        task: String,
        files: Vec<PathBuf>,
        #[arg(long, default_value_t = 1)]
        rank: usize,
    },
}

fn exit_for_error(e: &Error) -> u8 {
    match e {
        Error::InsufficientPrecision { .. } => 3,
        _ => 2,
    }
}

fn exit_for_status(s: Status) -> u8 {
    match s {
        Status::Pass => 0,
        Status::Violation => 1,
        Status::Precision => 3,
    }
}

fn print(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("reports serialize"));
}

fn single(result: esk_core::Result<Outcome>) -> u8 {
    match result {
        Ok(o) => {
            print(&json!({ "status": o.status.keyword(), "report": o.report }));
            exit_for_status(o.status)
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_for_error(&e)
        }
    }
}

struct Batch<'a> {
    command: &'a str,
    argv: String,
    jobs: usize,
    dump_dir: &'a Path,
}

struct Entry {
    input: PathBuf,
    code: u8,
    value: Value,
}

impl Batch<'_> {
    fn dump(&self, path: &Path, file: &InstanceFile) -> anyhow::Result<PathBuf> {
        std::fs::create_dir_all(self.dump_dir).with_context(|| format!("creating {}", self.dump_dir.display()))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("instance");
        let out = self.dump_dir.join(format!("{}-{stem}.json", self.command.replace(' ', "-")));
        let mut copy = file.clone();
        copy.provenance = Some(format!("counterexample: {}", self.argv));
        io::store(&out, &copy)?;
        Ok(out)
    }

    fn one<F>(&self, path: &Path, f: &F) -> Entry
    where
        F: Fn(&InstanceFile) -> esk_core::Result<Outcome>,
    {
        let input = path.to_path_buf();
        let name = path.display().to_string();
        let file = match io::load(path) {
            Ok(file) => file,
            Err(e) => return Self::failed(input, name, &e),
        };
        match f(&file) {
            Ok(o) => {
                let mut value = json!({ "input": name, "status": o.status.keyword(), "report": o.report });
                if o.status == Status::Violation {
                    match self.dump(path, &file) {
                        Ok(out) => value["counterexample"] = json!(out.display().to_string()),
                        Err(e) => value["dump_error"] = json!(e.to_string()),
                    }
                }
                Entry {
                    input,
                    code: exit_for_status(o.status),
                    value,
                }
            }
            Err(e) => Self::failed(input, name, &e),
        }
    }

    fn failed(input: PathBuf, name: String, e: &Error) -> Entry {
        let code = exit_for_error(e);
        let status = if code == 3 { "insufficient_precision" } else { "input_error" };
        Entry {
            input,
            code,
            value: json!({ "input": name, "status": status, "error": e.to_string() }),
        }
    }

    fn run<F>(&self, files: &[PathBuf], f: F) -> anyhow::Result<u8>
    where
        F: Fn(&InstanceFile) -> esk_core::Result<Outcome> + Sync,
    {
        if files.is_empty() {
            anyhow::bail!("no instance files given");
        }
        let pool = rayon::ThreadPoolBuilder::new().num_threads(self.jobs.max(1)).build()?;
        let mut entries: Vec<Entry> = pool.install(|| files.par_iter().map(|p| self.one(p, &f)).collect());
        entries.sort_by(|a, b| a.input.cmp(&b.input));
        if entries.len() == 1 {
            print(&entries[0].value);
        } else {
            print(&Value::Array(entries.iter().map(|e| e.value.clone()).collect()));
        }
        // input errors dominate, then precision, then violations
        let codes: Vec<u8> = entries.iter().map(|e| e.code).collect();
        Ok([2, 3, 1].into_iter().find(|c| codes.contains(c)).unwrap_or(0))
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let argv = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    let batch = |command: &'static str| Batch {
        command,
        argv: format!("esk {argv}"),
        jobs: cli.jobs,
        dump_dir: &cli.dump_dir,
    };
    let code = match &cli.cmd {
        Cmd::Ring { p, m, f, group, aux } => {
            let mut spec = RingSpec::new(*p, *m, *f, group.clone());
            spec.aux = aux.clone();
            single(commands::ring(spec))
        }
        Cmd::Fitting { files, j } => batch("fitting").run(files, |x| commands::fitting(x, *j))?,
        Cmd::Bidual { files, rank } => batch("bidual").run(files, |x| commands::bidual(x, *rank))?,
        Cmd::Selmer { files } => batch("selmer").run(files, commands::selmer)?,
        Cmd::CoreRank { files, tag } => batch("core-rank").run(files, |x| commands::core_rank(x, tag.as_deref()))?,
        Cmd::CoreVertex { files, tag, depth, level } => {
            batch("core-vertex").run(files, |x| commands::core_vertex(x, tag.as_deref(), *depth, *level))?
        }
        Cmd::Cartesian { files, tag } => batch("cartesian").run(files, |x| commands::cartesian(x, tag.as_deref()))?,
        Cmd::ThmFree { files, tag, depth } => {
            batch("thm-free").run(files, |x| commands::thm_free(x, tag.as_deref(), *depth))?
        }
        Cmd::Stark { cmd } => match cmd {
            StarkCmd::Solve { files, tag, depth, level } => {
                batch("stark solve").run(files, |x| commands::stark_solve(x, tag.as_deref(), *depth, *level))?
            }
            StarkCmd::Ij { files, tag, depth, jmax } => {
                batch("stark ij").run(files, |x| commands::stark_ij(x, tag.as_deref(), *depth, *jmax))?
            }
            StarkCmd::Report { files, tag, depth } => {
                batch("stark report").run(files, |x| commands::stark_full(x, tag.as_deref(), *depth))?
            }
        },
        Cmd::EulerPoly { frobenius, a, ell, p } => {
            let elliptic = a.zip(*ell);
            single(commands::euler_poly(frobenius.as_deref(), elliptic, *p))
        }
        Cmd::BkCheck { files } => batch("bk-check").run(files, commands::bk_check)?,
        Cmd::Xi { files } => batch("xi").run(files, commands::xi)?,
        Cmd::AssocOrder { files, lattice } => batch("assoc-order").run(files, |x| commands::assoc_order(x, lattice))?,
        Cmd::Codescent { files } => batch("codescent").run(files, commands::codescent)?,
        Cmd::Artin { group, values, multiset } => {
            let input = match (values, multiset) {
                (Some(v), None) => CharacterInput::Values(serde_json::from_str(v).context("--values")?),
                (None, Some(m)) => CharacterInput::Multiset(serde_json::from_str(m).context("--multiset")?),
                _ => anyhow::bail!("give exactly one of --values and --multiset"),
            };
            single(commands::artin(group, &input))
        }
        Cmd::Yakovlev { files } => batch("yakovlev").run(files, commands::yakovlev_file)?,
        Cmd::Gen {
            recipe,
            seed,
            p,
            m,
            f,
            group,
            core,
            aux,
            depth,
            rank,
            out,
        } => {
            let params = GeneratorParams {
                seed: *seed,
                p: *p,
                m: *m,
                f: *f,
                group: group.clone(),
                core_places: *core,
                aux_primes: *aux,
                depth: *depth,
                recipe: match Recipe::parse(recipe) {
                    Ok(r) => r,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return Ok(2);
                    }
                },
                rank: *rank,
            };
            match commands::gen(&params) {
                Ok(file) => {
                    match out {
                        Some(path) => io::store(path, &file)?,
                        None => print!("{}", io::to_text(&file)),
                    }
                    0
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_for_error(&e)
                }
            }
        }
        Cmd::Oracle { task, files, rank } => batch("oracle").run(files, |x| commands::oracle(task, x, *rank))?,
    };
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
