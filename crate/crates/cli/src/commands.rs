use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sparse_ising::cma::fit_path_with_a;
use sparse_ising::eval::{metrics, model_error};
use sparse_ising::lla::TuningPass;
use sparse_ising::model::{CouplingVector, SpinDataset};
use sparse_ising::pipeline::{estimate, Estimator};
use sparse_ising::selection::bic_select_with;
use sparse_ising::simulate::{exact_sample, gen_truth, gibbs_sample, GibbsConfig, GraphSpec};
use sparse_ising::stability::stability_select;

use crate::config::{
    EvaluateConfig, FitConfig, GraphConfig, PathConfig, RunConfig, Sampler, SimulateConfig, StabilityRunConfig,
};
use crate::error::{CliError, CliResult};
use crate::io::{self, Header};

pub fn run(cfg: &RunConfig, strict: bool) -> CliResult<()> {
    let ctx = Context { command: cfg.command(), hash: cfg.hash(), seed: cfg.seed(), strict };
    match cfg {
        RunConfig::Simulate(c) => simulate(&ctx, c),
        RunConfig::Fit(c) => fit(&ctx, c),
        RunConfig::Path(c) => path(&ctx, c),
        RunConfig::Stability(c) => stability(&ctx, c),
        RunConfig::Evaluate(c) => evaluate(&ctx, c),
    }
}

struct Context {
    command: &'static str,
    hash: String,
    seed: Option<u64>,
    strict: bool,
}

#[derive(Serialize)]
struct JsonHeader<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config_hash: &'a str,
    seed: Option<u64>,
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    header: JsonHeader<'a>,
    #[serde(flatten)]
    body: T,
}

impl Context {
    fn header(&self, nodes: Option<usize>) -> Header {
        Header { command: self.command.to_string(), config_hash: self.hash.clone(), seed: self.seed, nodes }
    }

    fn write_json<T: Serialize>(&self, path: &Path, body: T) -> CliResult<()> {
        let header = JsonHeader {
            tool: "sparse-ising",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            config_hash: &self.hash,
            seed: self.seed,
        };
        let mut text = serde_json::to_string_pretty(&Report { header, body }).expect("reports serialize");
        text.push('\n');
        io::write_text(path, &text)
    }

    /// Fails under `--strict`, warns otherwise.
    fn check_converged(&self, converged: bool, what: &str) -> CliResult<()> {
        if converged {
            Ok(())
        } else if self.strict {
            Err(CliError::NonConvergence(what.to_string()))
        } else {
            eprintln!("warning: {what} did not converge");
            Ok(())
        }
    }
}

fn required<'a>(path: &'a Option<PathBuf>, key: &str, flag: &str) -> CliResult<&'a Path> {
    path.as_deref().ok_or_else(|| CliError::Validation(format!("no {key} given (use --{flag} or `{key}` in the config)")))
}

fn graph_spec(g: &GraphConfig) -> CliResult<GraphSpec> {
    Ok(match g {
        GraphConfig::Chain { nodes, edges } => GraphSpec::chain_with_edges(*nodes, edges.unwrap_or(nodes.saturating_sub(1)))?,
        GraphConfig::Lattice { rows, cols } => GraphSpec::lattice4(*rows, *cols)?,
        GraphConfig::Random { nodes, degree, seed } => GraphSpec::random(*nodes, *degree, *seed)?,
        GraphConfig::Custom { nodes, edge_file } => {
            let text = io::read_text(edge_file)?.replace(',', " ");
            GraphSpec::parse_edge_list(*nodes, &text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", edge_file.display())))?
        }
    })
}

fn simulate(ctx: &Context, c: &SimulateConfig) -> CliResult<()> {
    let spec = graph_spec(&c.graph)?;
    let truth = gen_truth(&spec, c.truth_seed.unwrap_or(c.seed))?;
    let data = match c.sampler {
        Sampler::Gibbs => {
            gibbs_sample(&truth.beta_star, c.n, &GibbsConfig { burn_in: c.burn_in, thinning: c.thinning, seed: c.seed })?
        }
        Sampler::Exact => exact_sample(&truth.beta_star, c.n, c.seed)?,
    };
    let header = ctx.header(Some(spec.k));
    io::write_text(&c.out, &io::format_spins(&data, &header))?;
    io::write_text(&c.truth, &io::format_edges(&truth.beta_star, &header))?;
    println!(
        "wrote {} observations of {} nodes to {} and {} true edges to {}",
        c.n,
        spec.k,
        c.out.display(),
        truth.s,
        c.truth.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct StageLambda<'a> {
    stage: &'a str,
    lambda: f64,
}

#[derive(Serialize)]
struct NodeSummary {
    node: usize,
    lambda: f64,
    df: usize,
    sweeps: usize,
    kkt_residual: f64,
    converged: bool,
    capped: bool,
}

#[derive(Serialize)]
struct FitBody<'a> {
    estimator: Estimator,
    nodes: usize,
    observations: usize,
    edges: usize,
    converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweeps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kkt_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lla_iters_used: Option<usize>,
    /// Chosen lambda of every tuning pass, in order.
    chosen_lambdas: Vec<StageLambda<'a>>,
    #[serde(skip_serializing_if = "<[_]>::is_empty")]
    passes: &'a [TuningPass],
    #[serde(skip_serializing_if = "Vec::is_empty")]
    node_fits: Vec<NodeSummary>,
}

fn load_data(path: &Option<PathBuf>, zero_one: bool) -> CliResult<SpinDataset> {
    io::read_spins(required(path, "data", "data")?, zero_one)
}

fn fit(ctx: &Context, c: &FitConfig) -> CliResult<()> {
    let data = load_data(&c.data, c.zero_one)?;
    let est = estimate(&data, c.estimator, &c.estimator_config())?;
    let k = data.num_nodes();
    io::write_text(&c.edges, &io::format_edges(&est.beta, &ctx.header(Some(k))))?;
    let node_fits = est
        .neighborhood
        .iter()
        .flat_map(|nf| &nf.nodes)
        .map(|n| NodeSummary {
            node: n.node + 1,
            lambda: n.lambda,
            df: n.df(),
            sweeps: n.sweeps,
            kkt_residual: n.kkt_residual,
            converged: n.converged,
            capped: n.capped,
        })
        .collect();
    let body = FitBody {
        estimator: est.estimator,
        nodes: k,
        observations: data.num_obs(),
        edges: est.beta.nnz(),
        converged: est.converged,
        lambda: est.fit.as_ref().map(|f| f.lambda),
        objective: est.fit.as_ref().map(|f| f.objective),
        sweeps: est.fit.as_ref().map(|f| f.sweeps),
        kkt_residual: est.fit.as_ref().map(|f| f.kkt_residual),
        lla_iters_used: est.lla_iters_used,
        chosen_lambdas: est.passes.iter().map(|p| StageLambda { stage: &p.stage, lambda: p.chosen_lambda }).collect(),
        passes: &est.passes,
        node_fits,
    };
    ctx.write_json(&c.report, body)?;
    println!("{}: {} edges written to {}", est.estimator, est.beta.nnz(), c.edges.display());
    ctx.check_converged(est.converged, &format!("the {} fit", est.estimator))
}

fn path(ctx: &Context, c: &PathConfig) -> CliResult<()> {
    let data = load_data(&c.data, c.zero_one)?;
    let path = fit_path_with_a(&data, c.penalty, c.a, &c.grid, &c.solver)?;
    let bic = bic_select_with(&path, &data, c.bic)?;
    let mut text = ctx.header(Some(data.num_nodes())).line();
    text.push_str("lambda,df,loglik,bic,kkt_residual\n");
    for (e, f) in bic.entries.iter().zip(&path.fits) {
        let _ = writeln!(text, "{:?},{},{:?},{:?},{:?}", e.lambda, e.df, e.loglik, e.score, f.kkt_residual);
    }
    io::write_text(&c.out, &text)?;
    println!("{} grid points written to {}; BIC picks lambda {}", path.len(), c.out.display(), bic.chosen_lambda());
    let stuck = path.fits.iter().filter(|f| !f.converged).count();
    ctx.check_converged(stuck == 0, &format!("{stuck} of {} path fits", path.len()))
}

#[derive(Serialize)]
struct StabilityBody {
    estimator: Estimator,
    nodes: usize,
    num_pairs: usize,
    reps: usize,
    successful_reps: usize,
    failed_reps: usize,
    subsample_size: usize,
    pi_thr: f64,
    q_avg: f64,
    ev_bound: f64,
    /// 1-based pairs.
    stable_edges: Vec<(usize, usize)>,
}

fn stability(ctx: &Context, c: &StabilityRunConfig) -> CliResult<()> {
    let data = load_data(&c.data, c.zero_one)?;
    let r = stability_select(&data, c.estimator, &c.estimator_config(), &c.stability)?;
    let header = ctx.header(Some(r.k));
    io::write_text(&c.frequencies, &io::format_pair_values(r.k, &r.frequencies, &header))?;
    let mut stable = CouplingVector::zeros(r.k);
    for &(a, b) in &r.stable_edges {
        let i = sparse_ising::model::pair_index(r.k, a, b);
        stable.set(a, b, r.frequencies[i]);
    }
    io::write_text(&c.edges, &io::format_edges(&stable, &header))?;
    let body = StabilityBody {
        estimator: c.estimator,
        nodes: r.k,
        num_pairs: r.num_pairs,
        reps: c.stability.reps,
        successful_reps: r.successful_reps,
        failed_reps: r.failed_reps,
        subsample_size: r.subsample_size,
        pi_thr: r.pi_thr,
        q_avg: r.q_avg,
        ev_bound: r.ev_bound,
        stable_edges: r.stable_edges.iter().map(|&(a, b)| (a + 1, b + 1)).collect(),
    };
    ctx.write_json(&c.report, body)?;
    println!("{} stable edges (q_avg {:.3}, ev_bound {:.3})", r.stable_edges.len(), r.q_avg, r.ev_bound);
    ctx.check_converged(r.failed_reps == 0, &format!("{} of {} replicates", r.failed_reps, c.stability.reps))
}

#[derive(Serialize)]
struct EvaluateBody {
    nodes: usize,
    nde: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    mse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fdr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    me: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    test_observations: Option<usize>,
}

fn evaluate(ctx: &Context, c: &EvaluateConfig) -> CliResult<()> {
    let beta = io::read_edges(required(&c.estimate, "estimate", "estimate")?, c.nodes)?;
    let k = beta.num_nodes();
    let mismatch = |what: &str, found: usize| {
        CliError::Validation(format!("{what} has {found} nodes but the estimate has {k}; check the inputs or pass --nodes"))
    };
    let mut body = EvaluateBody { nodes: k, nde: beta.nnz(), mse: None, fdr: None, me: None, test_observations: None };
    match &c.truth {
        Some(p) => {
            let truth = io::read_edges(p, c.nodes)?;
            if truth.num_nodes() != k {
                return Err(mismatch("the truth", truth.num_nodes()));
            }
            let m = metrics(&beta, &truth, c.mse)?;
            body.mse = Some(m.mse);
            body.fdr = Some(m.fdr);
        }
        None => eprintln!("warning: no truth given; mse and fdr are omitted"),
    }
    match (&c.test, &c.test_rows) {
        (Some(p), rows) => {
            let mut test = io::read_spins(p, c.zero_one)?;
            if let Some(r) = rows {
                let idx = io::parse_rows(&io::read_text(r)?, r, test.num_obs())?;
                test = test.select_rows(&idx)?;
            }
            if test.num_nodes() != k {
                return Err(mismatch("the test data", test.num_nodes()));
            }
            body.me = Some(model_error(&beta, &test)?);
            body.test_observations = Some(test.num_obs());
        }
        (None, Some(_)) => return Err(CliError::Validation("test rows given without test data".into())),
        (None, None) => {}
    }
    ctx.write_json(&c.report, body)?;
    println!("metrics written to {}", c.report.display());
    Ok(())
}
