//! `hullmax` - benchmark harness for the self-improving maxima and convex
//! hull algorithms: generate distributions, learn structures, run verified
//! trials, sweep benchmark ladders, and check certificates.

mod artifacts;

use artifacts::{
    config_hash, load_structures, read_json, save_structures, write_json, LearnConfig, Manifest,
    Problem, Structures,
};
use clap::{Args, Parser, Subcommand};
use hullmax::certificates::{
    verify_c_certificate, verify_hull_certificate, verify_maxima_certificate, HullCertificate,
    MaximaCertificate,
};
use hullmax::distributions::{
    self, instance_from_binary, instance_from_text, instance_to_text, ProductDistribution,
};
use hullmax::geometry::{maxima_sweep, upper_hull_monotone, Instance};
use hullmax::hull_engine::{fallback_hull, run_hull};
use hullmax::hull_learning::{learn_hull, HullLearnParams};
use hullmax::maxima::{learn_maxima, run_maxima};
use hullmax::metrics::with_comparison_tally;
use hullmax::search_tree::TreeParams;
use hullmax::slabs::entropy_proxy;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

#[derive(Parser)]
#[command(name = "hullmax", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a named distribution family to a JSON file.
    GenDist(GenDistArgs),
    /// Learning phase: build and persist the structures for a distribution.
    Learn(LearnArgs),
    /// Limiting phase: verified trials against persisted structures.
    Run(RunArgs),
    /// Sweep a ladder of sizes and emit a CSV summary.
    Bench(BenchArgs),
    /// Check a certificate file against an instance file.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenDistArgs {
    #[arg(long, value_parser = distributions::FAMILY_NAMES.to_vec())]
    family: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Symmetric coordinate jitter half-width (0 disables).
    #[arg(long)]
    jitter: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct LearnKnobs {
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long, default_value_t = 8.0)]
    c: f64,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    /// Training instances for the slab structure (default: log2 n).
    #[arg(long)]
    t_slabs: Option<u64>,
    /// Training instances for the trees (default: c * delta^-2 * n^eps * log2 n).
    #[arg(long)]
    t_freq: Option<u64>,
    /// Dual level for the canonical directions (default: min(log2^4 n, n/4)).
    #[arg(long)]
    level: Option<usize>,
    /// Meet-point spacing (default: log2^2 n).
    #[arg(long)]
    spacing: Option<usize>,
    /// Tail level for the canonical lines (default: gamma * c * log2 n).
    #[arg(long)]
    tail: Option<usize>,
    #[arg(long, default_value_t = 0.25)]
    gamma: f64,
}

impl LearnKnobs {
    fn tree_params(&self) -> TreeParams {
        TreeParams {
            epsilon: self.epsilon,
            c: self.c,
            delta: self.delta,
        }
    }

    fn hull_params(&self) -> HullLearnParams {
        HullLearnParams {
            level_param: self.level,
            spacing: self.spacing,
            tail: self.tail,
            c: self.c,
            gamma: self.gamma,
        }
    }

    fn config(&self, problem: Problem, n: usize, seed: u64) -> LearnConfig {
        LearnConfig {
            problem,
            n,
            seed,
            epsilon: self.epsilon,
            c: self.c,
            delta: self.delta,
            t_slabs: self.t_slabs,
            t_freq: self.t_freq,
            level: self.level,
            spacing: self.spacing,
            tail: self.tail,
            gamma: self.gamma,
        }
    }
}

#[derive(Args)]
struct LearnArgs {
    #[arg(long)]
    problem: Problem,
    /// Distribution JSON written by gen-dist.
    #[arg(long)]
    dist: PathBuf,
    /// Directory for the structure artifacts.
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    knobs: LearnKnobs,
    /// Print the learning-phase formulas with the substituted values.
    #[arg(long)]
    paper_constants: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    problem: Problem,
    #[arg(long)]
    dist: PathBuf,
    /// Directory written by learn.
    #[arg(long)]
    structures: PathBuf,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    /// JSONL output path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also dump instance and certificate files per trial into this directory.
    #[arg(long)]
    dump: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    problem: Problem,
    #[arg(long, value_parser = distributions::FAMILY_NAMES.to_vec())]
    family: String,
    /// Comma-separated instance sizes.
    #[arg(long, value_delimiter = ',', default_value = "1024,4096,16384")]
    ladder: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    knobs: LearnKnobs,
    /// CSV output path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Instance file: "x y" lines (.txt) or packed binary (.bin).
    #[arg(long)]
    instance: PathBuf,
    /// Certificate JSON with a "type" tag.
    #[arg(long)]
    certificate: PathBuf,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum CertificateFile {
    Maxima {
        #[serde(flatten)]
        cert: MaximaCertificate,
    },
    Hull {
        #[serde(flatten)]
        cert: HullCertificate,
    },
}

/// One verified limiting-phase trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrialRecord {
    trial: u64,
    n: usize,
    rounds: u64,
    comparisons: u64,
    heap_ops: u64,
    baseline_comparisons: u64,
    oracle_agreement: bool,
    entropy_proxy: f64,
    fallback_used: bool,
    outside_count: u64,
    wall_time: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::GenDist(a) => cmd_gen_dist(a),
        Cmd::Learn(a) => cmd_learn(a),
        Cmd::Run(a) => cmd_run(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Verify(a) => return cmd_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

type CliResult = Result<(), Box<dyn std::error::Error>>;

fn cmd_gen_dist(a: GenDistArgs) -> CliResult {
    let mut dist = distributions::family(&a.family, a.n, a.seed)?;
    if let Some(j) = a.jitter {
        dist = dist.with_jitter(j);
    }
    write_json(&a.out, &dist)?;
    eprintln!("wrote {} ({} components)", a.out.display(), dist.len());
    Ok(())
}

fn print_paper_constants(knobs: &LearnKnobs, n: usize) {
    let tp = knobs.tree_params();
    let hp = knobs.hull_params();
    let lg = (n as f64).log2();
    println!("n = {n}, epsilon = {}, c = {}, delta = {}", tp.epsilon, tp.c, tp.delta);
    println!(
        "t_slabs   = ceil(log2 n)                        = {}",
        hullmax::slabs::default_training_count(n)
    );
    println!(
        "t_freq    = ceil(c * delta^-2 * n^eps * log2 n) = {}",
        tp.default_sample_count(n)
    );
    println!(
        "min_count = ceil(c / (10 e delta^2) * log2 n)   = {}",
        tp.min_count(n)
    );
    println!(
        "depth_cap = ceil(eps * log2 n)                  = {}",
        tp.depth_cap(n)
    );
    println!(
        "level     = min(ceil(log2^4 n), n/4)            = {} (log2 n = {lg:.2})",
        hp.level(n)
    );
    println!("spacing   = max(1, ceil(log2^2 n))              = {}", hp.spacing(n));
    println!(
        "tail      = ceil(gamma * c * log2 n)            = {} (gamma = {})",
        hp.tail(n),
        hp.gamma
    );
}

fn cmd_learn(a: LearnArgs) -> CliResult {
    let dist: ProductDistribution = read_json(&a.dist)?;
    let n = dist.len();
    if a.paper_constants {
        print_paper_constants(&a.knobs, n);
    }
    std::fs::create_dir_all(&a.out_dir)?;
    let config = a.knobs.config(a.problem, n, dist.seed);
    let tp = a.knobs.tree_params();
    let (structures, counters_used, worst_case) = match a.problem {
        Problem::Maxima => {
            let s = learn_maxima(&dist, &tp, a.knobs.t_slabs, a.knobs.t_freq, 0)?;
            let used = s.counters_used;
            (Structures::Maxima(s), used, false)
        }
        Problem::Hull => {
            let t_freq = a.knobs.t_freq.unwrap_or_else(|| tp.default_sample_count(n));
            match learn_hull(&dist, &a.knobs.hull_params(), &tp, t_freq, 0) {
                Ok(s) => {
                    let used = s.counters_used;
                    (Structures::Hull(s), used, false)
                }
                Err(hullmax::Error::DegenerateInput(msg)) => {
                    eprintln!("learning degenerate ({msg}); runs will use the worst-case path");
                    (Structures::HullWorstCase, 1, true)
                }
                Err(e) => return Err(e.into()),
            }
        }
    };
    save_structures(&a.out_dir, &structures)?;
    let manifest = Manifest {
        config_hash: config_hash(&config, &dist),
        config,
        counters_used,
        worst_case,
    };
    write_json(&a.out_dir.join("manifest.json"), &manifest)?;
    eprintln!("learned structures in {}", a.out_dir.display());
    Ok(())
}

/// Run one verified trial. The baseline (sort-sweep maxima or monotone-chain
/// hull) doubles as the oracle; its comparison count is the classical cost.
fn run_trial(
    problem: Problem,
    dist: &ProductDistribution,
    structures: &Structures,
    proxy: f64,
    counter: u64,
    trial: u64,
) -> (TrialRecord, Instance, CertificateFile) {
    let inst = dist.sample(counter);
    let n = inst.len();
    match (problem, structures) {
        (Problem::Maxima, Structures::Maxima(s)) => {
            let out = run_maxima(&inst, s).expect("engine run");
            let (baseline, baseline_cmp) =
                with_comparison_tally(|| maxima_sweep(&inst.points).expect("baseline"));
            let ok = verify_maxima_certificate(&inst, &out.certificate) == Ok(())
                && out.certificate.maximal_indices == baseline.maximal_indices;
            let m = out.metrics;
            (
                TrialRecord {
                    trial,
                    n,
                    rounds: m.rounds,
                    comparisons: m.comparisons,
                    heap_ops: m.heap_ops,
                    baseline_comparisons: baseline_cmp,
                    oracle_agreement: ok,
                    entropy_proxy: proxy,
                    fallback_used: false,
                    outside_count: 0,
                    wall_time: m.wall_time,
                },
                inst,
                CertificateFile::Maxima {
                    cert: out.certificate,
                },
            )
        }
        (Problem::Hull, s) => {
            let (cert, metrics, c_ok) = match s {
                Structures::Hull(hs) => {
                    let out = run_hull(&inst, hs).expect("engine run");
                    let c_ok = out.metrics.fallback_used
                        || verify_c_certificate(&inst, &out.c_certificate, &hs.hull) == Ok(());
                    (out.certificate, out.metrics, c_ok)
                }
                Structures::HullWorstCase => {
                    let (cert, cmp) =
                        with_comparison_tally(|| fallback_hull(&inst).expect("fallback"));
                    let m = hullmax::metrics::RunMetrics {
                        fallback_used: true,
                        comparisons: cmp,
                        ..Default::default()
                    };
                    (cert, m, true)
                }
                Structures::Maxima(_) => unreachable!("problem/structure mismatch"),
            };
            let (oracle, baseline_cmp) =
                with_comparison_tally(|| upper_hull_monotone(&inst.points).expect("baseline"));
            let ok = c_ok
                && verify_hull_certificate(&inst, &cert) == Ok(())
                && cert.extremal_indices == oracle;
            (
                TrialRecord {
                    trial,
                    n,
                    rounds: metrics.rounds,
                    comparisons: metrics.comparisons,
                    heap_ops: metrics.heap_ops,
                    baseline_comparisons: baseline_cmp,
                    oracle_agreement: ok,
                    entropy_proxy: proxy,
                    fallback_used: metrics.fallback_used,
                    outside_count: metrics.outside_count,
                    wall_time: metrics.wall_time,
                },
                inst,
                CertificateFile::Hull { cert },
            )
        }
        _ => unreachable!("problem/structure mismatch"),
    }
}

type DumpFn<'a> = &'a mut dyn FnMut(u64, &Instance, &CertificateFile);

/// One benchmark session: distribution, learned structures, and the shared
/// entropy proxy value.
struct Session<'a> {
    problem: Problem,
    dist: &'a ProductDistribution,
    structures: &'a Structures,
    proxy: f64,
    counter0: u64,
}

/// Trials across a worker pool; records returned in trial order.
fn run_trials(
    session: &Session<'_>,
    trials: u64,
    threads: usize,
    mut dump: Option<DumpFn<'_>>,
) -> Vec<TrialRecord> {
    let records = Mutex::new(Vec::with_capacity(trials as usize));
    let next = std::sync::atomic::AtomicU64::new(0);
    std::thread::scope(|scope| {
        for _ in 0..threads.max(1) {
            scope.spawn(|| loop {
                let t = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if t >= trials {
                    break;
                }
                let (rec, inst, cert) = run_trial(
                    session.problem,
                    session.dist,
                    session.structures,
                    session.proxy,
                    session.counter0 + t,
                    t,
                );
                records.lock().unwrap().push((rec, inst, cert));
            });
        }
    });
    let mut all = records.into_inner().unwrap();
    all.sort_by_key(|(r, _, _)| r.trial);
    all.into_iter()
        .map(|(rec, inst, cert)| {
            if let Some(dump) = dump.as_deref_mut() {
                dump(rec.trial, &inst, &cert);
            }
            rec
        })
        .collect()
}

fn default_threads(requested: Option<usize>) -> usize {
    requested.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|v| v.get())
            .unwrap_or(1)
    })
}

fn cmd_run(a: RunArgs) -> CliResult {
    let dist: ProductDistribution = read_json(&a.dist)?;
    let manifest: Manifest = read_json(&a.structures.join("manifest.json"))?;
    if manifest.config.problem != a.problem {
        return Err(format!(
            "structures were learned for {}, requested {}",
            manifest.config.problem, a.problem
        )
        .into());
    }
    let expect = Manifest {
        config: LearnConfig {
            problem: a.problem,
            n: dist.len(),
            seed: dist.seed,
            ..manifest.config.clone()
        },
        ..manifest.clone()
    };
    if config_hash(&expect.config, &dist) != manifest.config_hash {
        return Err("stale structures: manifest hash does not match this distribution".into());
    }
    let structures = load_structures(&a.structures, &manifest)?;

    let proxy = match &structures {
        Structures::Maxima(s) => entropy_proxy(&dist, &s.slabs, 200, manifest.counters_used),
        Structures::Hull(s) => entropy_proxy(&dist, s.hull.slabs(), 200, manifest.counters_used),
        Structures::HullWorstCase => 0.0,
    };

    let dump_dir = a.dump.clone();
    if let Some(d) = &dump_dir {
        std::fs::create_dir_all(d)?;
    }
    let mut dump_fn = dump_dir.map(|d| {
        move |trial: u64, inst: &Instance, cert: &CertificateFile| {
            let _ = std::fs::write(d.join(format!("inst-{trial}.txt")), instance_to_text(inst));
            let _ = write_json(&d.join(format!("cert-{trial}.json")), cert);
        }
    });
    let session = Session {
        problem: a.problem,
        dist: &dist,
        structures: &structures,
        proxy,
        counter0: manifest.counters_used,
    };
    let records = run_trials(
        &session,
        a.trials,
        default_threads(a.threads),
        dump_fn.as_mut().map(|f| f as DumpFn<'_>),
    );

    let mut out: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut failed = false;
    for rec in &records {
        writeln!(out, "{}", serde_json::to_string(rec)?)?;
        if !rec.oracle_agreement {
            failed = true;
        }
    }
    drop(out);
    if failed {
        return Err("oracle disagreement in at least one trial".into());
    }
    Ok(())
}

const CSV_HEADER: &str = "problem,family,n,trials,rounds_per_n,cmp_per_n,baseline_cmp_per_nlogn,entropy_proxy_per_n,fallback_rate";

fn cmd_bench(a: BenchArgs) -> CliResult {
    let mut rows = vec![CSV_HEADER.to_string()];
    let threads = default_threads(a.threads);
    for &n in &a.ladder {
        let dist = distributions::family(&a.family, n, a.seed)?;
        let tp = a.knobs.tree_params();
        let (structures, counters_used) = match a.problem {
            Problem::Maxima => {
                let s = learn_maxima(&dist, &tp, a.knobs.t_slabs, a.knobs.t_freq, 0)?;
                let used = s.counters_used;
                (Structures::Maxima(s), used)
            }
            Problem::Hull => {
                let t_freq = a.knobs.t_freq.unwrap_or_else(|| tp.default_sample_count(n));
                match learn_hull(&dist, &a.knobs.hull_params(), &tp, t_freq, 0) {
                    Ok(s) => {
                        let used = s.counters_used;
                        (Structures::Hull(s), used)
                    }
                    Err(hullmax::Error::DegenerateInput(_)) => (Structures::HullWorstCase, 1),
                    Err(e) => return Err(e.into()),
                }
            }
        };
        let proxy = match &structures {
            Structures::Maxima(s) => entropy_proxy(&dist, &s.slabs, 200, counters_used),
            Structures::Hull(s) => entropy_proxy(&dist, s.hull.slabs(), 200, counters_used),
            Structures::HullWorstCase => 0.0,
        };
        let session = Session {
            problem: a.problem,
            dist: &dist,
            structures: &structures,
            proxy,
            counter0: counters_used,
        };
        let records = run_trials(&session, a.trials, threads, None);
        if let Some(bad) = records.iter().find(|r| !r.oracle_agreement) {
            return Err(format!("oracle disagreement at n={n}, trial {}", bad.trial).into());
        }
        let nf = n as f64;
        let mean = |f: &dyn Fn(&TrialRecord) -> f64| {
            records.iter().map(f).sum::<f64>() / records.len() as f64
        };
        let rounds_per_n = mean(&|r| r.rounds as f64 / nf);
        let cmp_per_n = mean(&|r| r.comparisons as f64 / nf);
        let baseline = mean(&|r| r.baseline_comparisons as f64 / (nf * nf.log2()));
        let fallback_rate = mean(&|r| if r.fallback_used { 1.0 } else { 0.0 });
        rows.push(format!(
            "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            a.problem,
            a.family,
            n,
            a.trials,
            rounds_per_n,
            cmp_per_n,
            baseline,
            proxy / nf,
            fallback_rate
        ));
    }
    let csv = rows.join("\n") + "\n";
    match &a.out {
        Some(p) => std::fs::write(p, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn read_instance(path: &Path) -> Result<Instance, Box<dyn std::error::Error>> {
    if path.extension().and_then(|e| e.to_str()) == Some("bin") {
        Ok(instance_from_binary(&std::fs::read(path)?)?)
    } else {
        Ok(instance_from_text(&std::fs::read_to_string(path)?)?)
    }
}

fn cmd_verify(a: VerifyArgs) -> ExitCode {
    let usage = |msg: String| -> ExitCode {
        eprintln!("error: {msg}");
        ExitCode::from(2)
    };
    let inst = match read_instance(&a.instance) {
        Ok(i) => i,
        Err(e) => return usage(format!("reading instance: {e}")),
    };
    let cert: CertificateFile = match read_json(&a.certificate) {
        Ok(c) => c,
        Err(e) => return usage(format!("reading certificate: {e}")),
    };
    let verdict = match &cert {
        CertificateFile::Maxima { cert } => {
            if cert.witnesses.len() != inst.len() {
                return usage(format!(
                    "certificate for {} points, instance has {}",
                    cert.witnesses.len(),
                    inst.len()
                ));
            }
            verify_maxima_certificate(&inst, cert)
        }
        CertificateFile::Hull { cert } => {
            if cert.witness_pairs.len() != inst.len() {
                return usage(format!(
                    "certificate for {} points, instance has {}",
                    cert.witness_pairs.len(),
                    inst.len()
                ));
            }
            verify_hull_certificate(&inst, cert)
        }
    };
    match verdict {
        Ok(()) => {
            println!("valid");
            ExitCode::SUCCESS
        }
        Err(v) => {
            eprintln!("violation: {v}");
            ExitCode::from(1)
        }
    }
}
