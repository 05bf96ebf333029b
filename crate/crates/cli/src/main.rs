//! `fourfermi` command-line front end.
//!
//! Every command prints its main result to stdout. With `--out DIR` the
//! result files and a `manifest.json` describing the run are also written
//! there. Exit codes: 0 success, 2 bad input, 3 capacity exceeded, 4
//! missing artifact, 5 non-convergence.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use fourfermi::avqite::{self, AvqiteConfig, PoolKind};
use fourfermi::dla::verify_dla;
use fourfermi::exact::ground_state_with;
use fourfermi::model::{build_hamiltonian, measured_term_counts, term_counts};
use fourfermi::observables::{correlator_profile, profile_csv};
use fourfermi::resources::{cost_curve, resource_report, CommutatorMode, CostAxis, CostParams, ResourceConfig};
use fourfermi::statevector::set_threads;
use fourfermi::{Error, ModelKind, ModelSpec, SolverConfig, StateVector};

const EXIT_BAD_INPUT: u8 = 2;
const EXIT_CAPACITY: u8 = 3;
const EXIT_MISSING: u8 = 4;
const EXIT_NO_CONVERGENCE: u8 = 5;

#[derive(Parser, Debug)]
#[command(name = "fourfermi", version, about = "Thirring and Gross-Neveu lattice models on qubits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct CommonArgs {
    /// Seed for every random choice (Lanczos start vectors).
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Worker cap for statevector kernels.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Directory receiving result files and manifest.json.
    #[arg(long, global = true)]
    #[serde(skip)]
    out: Option<PathBuf>,
    /// Print the resolved manifest and exit without computing.
    #[arg(long, global = true)]
    #[serde(skip)]
    dry_run: bool,
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// Model specification as a JSON file; overrides the individual flags.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value = "gn")]
    model: String,
    #[arg(long = "L", default_value_t = 2)]
    l: usize,
    #[arg(long = "Nf", default_value_t = 1)]
    nf: usize,
    #[arg(long, default_value_t = 0.5)]
    m: f64,
    #[arg(long, default_value_t = 0.2)]
    g: f64,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Method {
    Exact,
    Avqite,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the qubit Hamiltonian and report term counts.
    Build {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Ground state by exact diagonalization or AVQITE.
    Groundstate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value_t = Method::Exact)]
        method: Method,
        /// Operator pool: XY_YYZ or YY_YYZ.
        #[arg(long, default_value = "YY_YYZ")]
        pool: String,
        /// Imaginary-time step [default: 0.02].
        #[arg(long)]
        dtau: Option<f64>,
        /// Grow the ansatz while the McLachlan distance exceeds this [default: 1e-2].
        #[arg(long)]
        l2cut: Option<f64>,
        /// Stop once every gradient component is below this [default: 1e-4].
        #[arg(long)]
        vcut: Option<f64>,
        /// Tikhonov shift added to the metric [default: 1e-6].
        #[arg(long)]
        ridge: Option<f64>,
        /// Iteration cap [default: 5000].
        #[arg(long)]
        max_steps: Option<usize>,
        /// Cap on accumulated imaginary time.
        #[arg(long)]
        max_tau: Option<f64>,
    },
    /// Averaged connected condensate correlator.
    Correlator {
        #[command(flatten)]
        model: ModelArgs,
        /// A saved state file, or `exact` / `neel`.
        #[arg(long, default_value = "exact")]
        state: String,
    },
    /// Lie closure of the Hamiltonian terms.
    Dla {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Clusters, Trotter steps, gate counts and QSVT cost.
    Resources {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        #[arg(long, default_value_t = 1)]
        order: u32,
        /// exact_dense or norm_product; chosen by register size when omitted.
        #[arg(long)]
        commutator_mode: Option<String>,
    },
    /// Product-formula and QSVT cost curves.
    CostSweep {
        #[arg(long, default_value = "L")]
        axis: String,
        /// Comma-separated grid along the axis.
        #[arg(long, default_value = "10,30,100,300,1000")]
        values: String,
        #[arg(long = "L", default_value_t = 100.0)]
        l: f64,
        #[arg(long = "Nf", default_value_t = 6.0)]
        nf: f64,
        #[arg(long, default_value_t = 300.0)]
        t: f64,
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
        #[arg(long, default_value_t = 10)]
        order: u32,
    },
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Capacity { .. } | Error::ClosureCapacity { .. } => EXIT_CAPACITY,
            Error::IterationLimit { .. } => EXIT_NO_CONVERGENCE,
            Error::Io(_) => EXIT_MISSING,
            _ => EXIT_BAD_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn bad_input(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_BAD_INPUT,
        message: message.into(),
    }
}

fn missing(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_MISSING,
        message: message.into(),
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

#[derive(Serialize)]
struct RunManifest {
    command: String,
    spec: Option<ModelSpec>,
    config: Value,
    seed: u64,
    tool_version: String,
    timestamp: String,
}

impl ModelArgs {
    fn resolve(&self) -> Outcome<ModelSpec> {
        if let Some(path) = &self.spec {
            let text = std::fs::read_to_string(path)
                .map_err(|e| missing(format!("cannot read spec {}: {e}", path.display())))?;
            return Ok(ModelSpec::from_json(&text)?);
        }
        let kind: ModelKind = self.model.parse()?;
        Ok(ModelSpec::new(kind, self.l, self.nf, self.m, self.g)?)
    }
}

struct Context {
    common: CommonArgs,
    command: &'static str,
    spec: Option<ModelSpec>,
    config: Value,
}

impl Context {
    fn manifest(&self) -> RunManifest {
        RunManifest {
            command: self.command.to_string(),
            spec: self.spec,
            config: self.config.clone(),
            seed: self.common.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    fn out_dir(&self) -> Outcome<Option<&Path>> {
        match &self.common.out {
            None => Ok(None),
            Some(dir) => {
                std::fs::create_dir_all(dir)
                    .map_err(|e| bad_input(format!("cannot create {}: {e}", dir.display())))?;
                Ok(Some(dir.as_path()))
            }
        }
    }

    fn write(&self, name: &str, contents: &[u8]) -> Outcome<()> {
        if let Some(dir) = self.out_dir()? {
            let path = dir.join(name);
            std::fs::write(&path, contents).map_err(|e| bad_input(format!("cannot write {}: {e}", path.display())))?;
        }
        Ok(())
    }

    /// Writes the manifest next to the results.
    fn finish_files(&self) -> Outcome<()> {
        let m = to_json(&self.manifest());
        self.write("manifest.json", m.as_bytes())
    }

    /// JSON document `{manifest, result}`.
    fn document(&self, result: Value) -> String {
        to_json(&json!({ "manifest": self.manifest(), "result": result }))
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable output");
    s.push('\n');
    s
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Outcome<u8> {
    set_threads(cli.common.threads);
    let common = cli.common;
    match cli.command {
        Command::Build { model } => {
            let spec = model.resolve()?;
            let ctx = Context {
                common,
                command: "build",
                spec: Some(spec),
                config: json!({}),
            };
            if ctx.common.dry_run {
                print!("{}", to_json(&ctx.manifest()));
                return Ok(0);
            }
            cmd_build(&ctx, &spec)
        }
        Command::Groundstate {
            model,
            method,
            pool,
            dtau,
            l2cut,
            vcut,
            ridge,
            max_steps,
            max_tau,
        } => {
            let spec = model.resolve()?;
            let pool: PoolKind = pool.parse()?;
            let mut cfg = AvqiteConfig::default();
            if let Some(v) = dtau {
                cfg.dtau = v;
            }
            if let Some(v) = l2cut {
                cfg.l2_cut = v;
            }
            if let Some(v) = vcut {
                cfg.v_cut = v;
            }
            if let Some(v) = ridge {
                cfg.ridge = v;
            }
            if let Some(v) = max_steps {
                cfg.max_steps = v;
            }
            cfg.max_tau = max_tau.or(cfg.max_tau);
            cfg.compare_exact = false;
            cfg.validate()?;
            let solver = SolverConfig {
                seed: common.seed,
                ..SolverConfig::default()
            };
            let config = match method {
                Method::Exact => json!({ "method": method, "solver": solver }),
                Method::Avqite => json!({ "method": method, "pool": pool.tag(), "avqite": cfg, "solver": solver }),
            };
            let ctx = Context {
                common,
                command: "groundstate",
                spec: Some(spec),
                config,
            };
            if ctx.common.dry_run {
                print!("{}", to_json(&ctx.manifest()));
                return Ok(0);
            }
            cmd_groundstate(&ctx, &spec, method, pool, &cfg, &solver)
        }
        Command::Correlator { model, state } => {
            let spec = model.resolve()?;
            let ctx = Context {
                common,
                command: "correlator",
                spec: Some(spec),
                config: json!({ "state": state }),
            };
            if ctx.common.dry_run {
                print!("{}", to_json(&ctx.manifest()));
                return Ok(0);
            }
            cmd_correlator(&ctx, &spec, &state)
        }
        Command::Dla { model } => {
            let spec = model.resolve()?;
            let ctx = Context {
                common,
                command: "dla",
                spec: Some(spec),
                config: json!({}),
            };
            if ctx.common.dry_run {
                print!("{}", to_json(&ctx.manifest()));
                return Ok(0);
            }
            let (matches, report) = verify_dla(&spec)?;
            let doc = ctx.document(json!({ "report": report, "matches_prediction": matches }));
            ctx.write("dla.json", doc.as_bytes())?;
            ctx.finish_files()?;
            print!("{doc}");
            Ok(0)
        }
        Command::Resources {
            model,
            t,
            epsilon,
            order,
            commutator_mode,
        } => {
            let spec = model.resolve()?;
            let mode = commutator_mode.map(|m| m.parse::<CommutatorMode>()).transpose()?;
            let cfg = ResourceConfig {
                t,
                epsilon,
                order,
                commutator_mode: mode,
            };
            let ctx = Context {
                common,
                command: "resources",
                spec: Some(spec),
                config: json!(cfg),
            };
            if ctx.common.dry_run {
                print!("{}", to_json(&ctx.manifest()));
                return Ok(0);
            }
            cmd_resources(&ctx, &spec, &cfg)
        }
        Command::CostSweep {
            axis,
            values,
            l,
            nf,
            t,
            epsilon,
            order,
        } => {
            let axis: CostAxis = axis.parse()?;
            let xs = values
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| bad_input(format!("bad grid value {v:?}: {e}"))))
                .collect::<Outcome<Vec<f64>>>()?;
            let params = CostParams {
                l,
                nf,
                t,
                epsilon,
                order,
            };
            let ctx = Context {
                common,
                command: "cost-sweep",
                spec: None,
                config: json!({ "axis": axis, "values": xs, "params": params }),
            };
            if ctx.common.dry_run {
                print!("{}", to_json(&ctx.manifest()));
                return Ok(0);
            }
            let curve = cost_curve(axis, &xs, params)?;
            let csv = curve.to_csv();
            ctx.write(&format!("cost_{}.csv", axis.tag()), csv.as_bytes())?;
            ctx.finish_files()?;
            print!("{csv}");
            Ok(0)
        }
    }
}

fn cmd_build(ctx: &Context, spec: &ModelSpec) -> Outcome<u8> {
    let h = build_hamiltonian(spec)?;
    let closed = term_counts(spec)?;
    let measured = measured_term_counts(spec)?;
    let doc = ctx.document(json!({
        "n_qubits": spec.n_qubits(),
        "fermionic_terms": measured.fermionic_terms,
        "pauli_terms_excluding_identity": measured.pauli_terms_excluding_identity,
        "pauli_terms_including_identity": measured.pauli_terms_including_identity,
        "max_weight": measured.max_weight,
        "closed_form": closed,
        "matches_closed_form": closed == measured,
    }));
    ctx.write("hamiltonian.txt", h.to_text().as_bytes())?;
    ctx.write("counts.json", doc.as_bytes())?;
    ctx.finish_files()?;
    print!("{doc}");
    Ok(0)
}

fn cmd_groundstate(
    ctx: &Context,
    spec: &ModelSpec,
    method: Method,
    pool: PoolKind,
    cfg: &AvqiteConfig,
    solver: &SolverConfig,
) -> Outcome<u8> {
    let h = build_hamiltonian(spec)?;
    match method {
        Method::Exact => {
            let res = ground_state_with(&h, solver)?;
            let doc = ctx.document(json!(res.summary()));
            if ctx.common.out.is_some() {
                ctx.write("state.bin", &res.ground_state.to_bytes())?;
            }
            ctx.write("groundstate.json", doc.as_bytes())?;
            ctx.finish_files()?;
            print!("{doc}");
            Ok(0)
        }
        Method::Avqite => {
            let res = avqite::run(spec, pool, cfg)?;
            let psi = res.ansatz.state()?;
            let mut summary = res.summary();
            let exact = ground_state_with(&h, solver).ok();
            if let Some(ex) = &exact {
                summary.exact_energy = Some(ex.ground_energy);
                summary.relative_error = Some(((res.energy - ex.ground_energy) / ex.ground_energy).abs());
                summary.fidelity = Some(ex.ground_state.fidelity(&psi)?);
            }
            let doc = ctx.document(json!(summary));
            if ctx.common.out.is_some() {
                ctx.write("state.bin", &psi.to_bytes())?;
                ctx.write("ansatz.json", to_json(&res.ansatz.to_record()).as_bytes())?;
            }
            ctx.write("trace.csv", res.trace_csv().as_bytes())?;
            ctx.write("groundstate.json", doc.as_bytes())?;
            ctx.finish_files()?;
            print!("{doc}");
            if res.converged {
                Ok(0)
            } else {
                eprintln!("warning: AVQITE stopped before max|V| fell below V_cut");
                Ok(EXIT_NO_CONVERGENCE)
            }
        }
    }
}

fn cmd_correlator(ctx: &Context, spec: &ModelSpec, source: &str) -> Outcome<u8> {
    let psi = match source {
        "exact" => {
            let solver = SolverConfig {
                seed: ctx.common.seed,
                ..SolverConfig::default()
            };
            ground_state_with(&build_hamiltonian(spec)?, &solver)?.ground_state
        }
        "neel" => StateVector::neel(spec.n_qubits())?,
        path => {
            let p = Path::new(path);
            if !p.is_file() {
                return Err(missing(format!("state file {path} not found")));
            }
            StateVector::load(p)?
        }
    };
    let csv = profile_csv(&correlator_profile(&psi, spec)?);
    ctx.write("correlator.csv", csv.as_bytes())?;
    ctx.finish_files()?;
    print!("{csv}");
    Ok(0)
}

fn cmd_resources(ctx: &Context, spec: &ModelSpec, cfg: &ResourceConfig) -> Outcome<u8> {
    let report = resource_report(spec, cfg)?;
    let doc = ctx.document(json!(report));
    let grid = [10.0, 30.0, 100.0, 300.0, 1000.0];
    let params = CostParams {
        l: spec.l as f64,
        nf: spec.nf as f64,
        t: cfg.t,
        epsilon: cfg.epsilon,
        order: cfg.order,
    };
    for axis in [CostAxis::L, CostAxis::T] {
        let curve = cost_curve(axis, &grid, params)?;
        ctx.write(&format!("cost_{}.csv", axis.tag()), curve.to_csv().as_bytes())?;
    }
    ctx.write("resources.json", doc.as_bytes())?;
    ctx.finish_files()?;
    print!("{doc}");
    Ok(0)
}
