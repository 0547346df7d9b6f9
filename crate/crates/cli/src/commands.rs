use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use meanfield::cut::{ham_cut_decompose, FkOptions};
use meanfield::exact::gibbs_state;
use meanfield::generate;
use meanfield::hamiltonian::InstanceFile;
use meanfield::relax::{fe_estimate, gs_direct, gs_estimate, EstimatorOptions};
use meanfield::sampling::{vsc_experiment, Solver};
use meanfield::sparse::{sparse_solve, SparseGraph, SparseOptions};
use meanfield::threshold::{qmc_estimate, threshold_profile, ThresholdOptions, WeightedGraph};
use meanfield::{eb_experiment, exact_free_energy, exact_ground, pauli_decompose, Error, LocalHamiltonian, Result};

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SolverKind {
    Exact,
    Relaxation,
    Direct,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Family {
    /// Complete graph, random unit-norm two-qubit terms (`--n`).
    CompleteRandom,
    /// Complete graph, `(XX+YY+ZZ)/3` (`--n`).
    CompleteHeisenberg,
    /// Grid, `(XX+YY+ZZ)/3` (`--rows`, `--cols`).
    GridHeisenberg,
    /// Triangulated grid, random unit-norm terms (`--rows`, `--cols`).
    Planar,
    /// Unit-weight complete graph for `qmc` (`--n`).
    QmcComplete,
    /// Unit-weight cycle for `qmc` (`--n`).
    QmcCycle,
    /// Random weighted graph for `qmc` (`--n`, `--p`).
    QmcRandom,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Pauli decomposition summary.
    Decompose { instance: PathBuf },
    /// Cut decomposition of every Pauli color class.
    Cutdecomp {
        instance: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
    },
    /// Ground energy by diagonalization.
    GsExact { instance: PathBuf },
    /// Multi-start product-state minimization.
    GsDirect {
        instance: PathBuf,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        #[arg(long, default_value_t = 500)]
        iters: usize,
    },
    /// Guess-grid ground-state estimate with its error budget.
    GsEstimate {
        instance: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 0.25)]
        gamma: f64,
        #[arg(long)]
        node_cap: Option<u64>,
        /// Use the direct minimizer when the guess search is too large.
        #[arg(long)]
        direct_fallback: bool,
    },
    /// Free energy by diagonalization.
    FeExact {
        instance: PathBuf,
        #[arg(long)]
        beta: f64,
    },
    /// Guess-grid free-energy estimate with its error budget.
    FeEstimate {
        instance: PathBuf,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 0.25)]
        gamma: f64,
        #[arg(long)]
        node_cap: Option<u64>,
        #[arg(long)]
        direct_fallback: bool,
    },
    /// Quantum Max-Cut product-state estimate on a weighted graph.
    Qmc {
        graph: PathBuf,
        #[arg(long, default_value_t = 0.9)]
        eps: f64,
        #[arg(long)]
        node_cap: Option<u64>,
        /// Fail instead of falling back to the direct minimizer.
        #[arg(long)]
        no_direct_fallback: bool,
    },
    /// Spectrum and threshold ranks of the degree-normalized weight matrix.
    ThresholdRank {
        graph: PathBuf,
        /// Threshold; repeat for several.
        #[arg(long = "delta", default_values_t = [0.25])]
        deltas: Vec<f64>,
    },
    /// Vertex-subsampling experiment.
    Vsc {
        instance: PathBuf,
        #[arg(long)]
        q: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, value_enum, default_value_t = SolverKind::Direct)]
        solver: SolverKind,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 0.25)]
        gamma: f64,
    },
    /// Layering, separators and exact cluster ground states.
    SparseGs {
        instance: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long)]
        r: Option<usize>,
        #[arg(long)]
        kparam: Option<usize>,
        /// Partition this graph (`{"n", "edges"}`) instead of the interaction graph.
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// Layering, separators and exact cluster Gibbs states.
    SparseFe {
        instance: PathBuf,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long)]
        r: Option<usize>,
        #[arg(long)]
        kparam: Option<usize>,
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// Random Pauli measurements on the ground (or Gibbs, with `--beta`) state.
    EbExperiment {
        instance: PathBuf,
        #[arg(long)]
        l: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Generate an instance or graph file.
    Gen {
        #[arg(value_enum)]
        family: Family,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        cols: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
    },
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("--{name} must be positive and finite, got {x}")))
    }
}

fn unit_interval(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x <= 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("--{name} must lie in (0, 1], got {x}")))
    }
}

fn at_least_one(name: &str, x: usize) -> Result<()> {
    if x >= 1 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("--{name} must be at least 1")))
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Decompose { .. } => "decompose",
            Command::Cutdecomp { .. } => "cutdecomp",
            Command::GsExact { .. } => "gs-exact",
            Command::GsDirect { .. } => "gs-direct",
            Command::GsEstimate { .. } => "gs-estimate",
            Command::FeExact { .. } => "fe-exact",
            Command::FeEstimate { .. } => "fe-estimate",
            Command::Qmc { .. } => "qmc",
            Command::ThresholdRank { .. } => "threshold-rank",
            Command::Vsc { .. } => "vsc",
            Command::SparseGs { .. } => "sparse-gs",
            Command::SparseFe { .. } => "sparse-fe",
            Command::EbExperiment { .. } => "eb-experiment",
            Command::Gen { .. } => "gen",
        }
    }

    /// Checks numeric flags before any work starts.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Command::Cutdecomp { eps, .. } => positive("eps", eps),
            Command::GsDirect { restarts, iters, .. } => at_least_one("restarts", restarts).and(at_least_one("iters", iters)),
            Command::GsEstimate { eps, gamma, .. } => positive("eps", eps).and(unit_interval("gamma", gamma)),
            Command::FeExact { beta, .. } => positive("beta", beta),
            Command::FeEstimate { beta, eps, gamma, .. } => positive("beta", beta).and(positive("eps", eps)).and(unit_interval("gamma", gamma)),
            Command::Qmc { eps, .. } => positive("eps", eps),
            Command::ThresholdRank { ref deltas, .. } => deltas.iter().try_for_each(|&d| {
                if d >= 0.0 && d.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Parameter(format!("--delta must be non-negative, got {d}")))
                }
            }),
            Command::Vsc { q, trials, eps, gamma, .. } => at_least_one("q", q)
                .and(at_least_one("trials", trials))
                .and(positive("eps", eps))
                .and(unit_interval("gamma", gamma)),
            Command::SparseGs { eps, .. } => unit_interval("eps", eps),
            Command::SparseFe { beta, eps, .. } => positive("beta", beta).and(unit_interval("eps", eps)),
            Command::EbExperiment { trials, beta, .. } => at_least_one("trials", trials).and(beta.map_or(Ok(()), |b| positive("beta", b))),
            Command::Gen { p, .. } => {
                if (0.0..=1.0).contains(&p) {
                    Ok(())
                } else {
                    Err(Error::Parameter(format!("--p must lie in [0, 1], got {p}")))
                }
            }
            Command::Decompose { .. } | Command::GsExact { .. } => Ok(()),
        }
    }
}

fn load(path: &Path) -> Result<LocalHamiltonian> {
    LocalHamiltonian::load(path)
}

fn to_value<T: serde::Serialize>(x: &T) -> Result<Value> {
    Ok(serde_json::to_value(x)?)
}

fn pauli_label(color: &[usize], d: usize) -> String {
    let letters = ['I', 'X', 'Y', 'Z'];
    let qubits = d.trailing_zeros() as usize;
    color
        .iter()
        .map(|&c| (0..qubits).rev().map(|j| letters[(c >> (2 * j)) & 3]).collect::<String>())
        .collect::<Vec<_>>()
        .join(" ")
}

fn estimator_opts(node_cap: Option<u64>, direct_fallback: bool) -> EstimatorOptions {
    let mut o = EstimatorOptions {
        direct_fallback,
        ..Default::default()
    };
    if let Some(c) = node_cap {
        o.search.node_cap = c;
    }
    o
}

fn sparse_opts(r: Option<usize>, kparam: Option<usize>, graph: &Option<PathBuf>, n: usize) -> Result<SparseOptions> {
    let graph = match graph {
        Some(p) => {
            let g = WeightedGraph::load(p)?;
            if g.n != n {
                return Err(Error::DimensionMismatch(format!("graph has {} vertices, instance has {n}", g.n)));
            }
            Some(SparseGraph::from_weighted(&g)?)
        }
        None => None,
    };
    Ok(SparseOptions { kparam, r, graph })
}

fn need(name: &str, x: Option<usize>) -> Result<usize> {
    x.ok_or_else(|| Error::Parameter(format!("this family needs --{name}")))
}

/// Runs one command. Returns `(params, result)`.
fn execute(cmd: &Command, seed: u64) -> Result<(Value, Value)> {
    Ok(match cmd {
        Command::Decompose { instance } => {
            let h = load(instance)?;
            let pd = pauli_decompose(&h);
            let classes: Vec<Value> = pd
                .class_tensors()
                .into_iter()
                .map(|(c, (w, t))| {
                    json!({
                        "color": c,
                        "label": pauli_label(&c, pd.d),
                        "weight": w,
                        "frobenius": t.frobenius(),
                        "nonzeros": t.data.iter().filter(|x| **x != 0.0).count(),
                    })
                })
                .collect();
            (
                json!({ "instance": instance }),
                json!({
                    "n": h.n(), "d": h.d(), "k": h.k(),
                    "terms": h.num_terms(),
                    "constant": pd.constant(),
                    "l1_norm": h.l1_norm(),
                    "frobenius_norm": h.frobenius_norm(),
                    "classes": classes,
                }),
            )
        }
        Command::Cutdecomp { instance, eps } => {
            let h = load(instance)?;
            let hcd = ham_cut_decompose(&h, *eps, seed, &FkOptions::default())?;
            let budget = json!({ "residual": hcd.residual_bound() });
            let mut result = to_value(&hcd)?;
            result["total_width"] = json!(hcd.total_width());
            result["budget"] = budget;
            (json!({ "instance": instance, "eps": eps }), result)
        }
        Command::GsExact { instance } => {
            let h = load(instance)?;
            let (e, _) = exact_ground(&h)?;
            (json!({ "instance": instance }), json!({ "energy": e }))
        }
        Command::GsDirect { instance, restarts, iters } => {
            let h = load(instance)?;
            let (e, s) = gs_direct(&h, *restarts, *iters, seed);
            (
                json!({ "instance": instance, "restarts": restarts, "iters": iters }),
                json!({ "energy": e, "witness": s }),
            )
        }
        Command::GsEstimate {
            instance,
            eps,
            gamma,
            node_cap,
            direct_fallback,
        } => {
            let h = load(instance)?;
            let est = gs_estimate(&h, *eps, *gamma, seed, &estimator_opts(*node_cap, *direct_fallback))?;
            (
                json!({ "instance": instance, "eps": eps, "gamma": gamma, "node_cap": node_cap, "direct_fallback": direct_fallback }),
                to_value(&est)?,
            )
        }
        Command::FeExact { instance, beta } => {
            let h = load(instance)?;
            (json!({ "instance": instance, "beta": beta }), json!({ "free_energy": exact_free_energy(&h, *beta)? }))
        }
        Command::FeEstimate {
            instance,
            beta,
            eps,
            gamma,
            node_cap,
            direct_fallback,
        } => {
            let h = load(instance)?;
            let est = fe_estimate(&h, *beta, *eps, *gamma, seed, &estimator_opts(*node_cap, *direct_fallback))?;
            (
                json!({ "instance": instance, "beta": beta, "eps": eps, "gamma": gamma, "node_cap": node_cap, "direct_fallback": direct_fallback }),
                to_value(&est)?,
            )
        }
        Command::Qmc {
            graph,
            eps,
            node_cap,
            no_direct_fallback,
        } => {
            let g = WeightedGraph::load(graph)?;
            let mut opts = ThresholdOptions {
                direct_fallback: !no_direct_fallback,
                ..Default::default()
            };
            if let Some(c) = node_cap {
                opts.search.node_cap = *c;
            }
            let est = qmc_estimate(&g, *eps, seed, &opts)?;
            (json!({ "graph": graph, "eps": eps, "node_cap": node_cap }), to_value(&est)?)
        }
        Command::ThresholdRank { graph, deltas } => {
            let g = WeightedGraph::load(graph)?;
            (json!({ "graph": graph, "deltas": deltas }), to_value(&threshold_profile(&g, deltas)?)?)
        }
        Command::Vsc {
            instance,
            q,
            trials,
            solver,
            eps,
            gamma,
        } => {
            let h = load(instance)?;
            let s = match solver {
                SolverKind::Exact => Solver::Exact,
                SolverKind::Relaxation => Solver::Relaxation { eps: *eps, gamma: *gamma },
                SolverKind::Direct => Solver::Direct { restarts: 8, iters: 300 },
            };
            (
                json!({ "instance": instance, "q": q, "trials": trials, "solver": s }),
                to_value(&vsc_experiment(&h, *q, *trials, &s, seed)?)?,
            )
        }
        Command::SparseGs {
            instance,
            eps,
            r,
            kparam,
            graph,
        } => {
            let h = load(instance)?;
            let rep = sparse_solve(&h, *eps, None, seed, &sparse_opts(*r, *kparam, graph, h.n())?)?;
            let mut v = to_value(&rep)?;
            v["budget"] = json!({ "weyl": rep.solution.budget });
            (json!({ "instance": instance, "eps": eps, "r": r, "kparam": kparam, "graph": graph }), v)
        }
        Command::SparseFe {
            instance,
            beta,
            eps,
            r,
            kparam,
            graph,
        } => {
            let h = load(instance)?;
            let rep = sparse_solve(&h, *eps, Some(*beta), seed, &sparse_opts(*r, *kparam, graph, h.n())?)?;
            let mut v = to_value(&rep)?;
            v["budget"] = json!({ "weyl": rep.solution.budget, "free_energy": 2.0 * rep.solution.budget });
            (json!({ "instance": instance, "beta": beta, "eps": eps, "r": r, "kparam": kparam, "graph": graph }), v)
        }
        Command::EbExperiment { instance, l, trials, beta } => {
            let h = load(instance)?;
            let rho = match beta {
                Some(b) => gibbs_state(&h, *b)?.1,
                None => exact_ground(&h)?.1,
            };
            let rep = eb_experiment(&h, &rho, *l, *trials, seed)?;
            let mut v = to_value(&rep)?;
            v["budget"] = json!({ "bound": rep.bound });
            (json!({ "instance": instance, "l": l, "trials": trials, "beta": beta }), v)
        }
        Command::Gen { family, n, rows, cols, p } => {
            let params = json!({ "family": family_name(*family), "n": n, "rows": rows, "cols": cols, "p": p });
            let result = match family {
                Family::CompleteRandom => to_value(&InstanceFile::from(&generate::complete_random(need("n", *n)?, seed)?))?,
                Family::CompleteHeisenberg => to_value(&InstanceFile::from(&generate::complete_heisenberg(need("n", *n)?)?))?,
                Family::GridHeisenberg => to_value(&InstanceFile::from(&generate::grid_heisenberg(need("rows", *rows)?, need("cols", *cols)?)?))?,
                Family::Planar => to_value(&InstanceFile::from(&generate::planar_random(need("rows", *rows)?, need("cols", *cols)?, seed)?))?,
                Family::QmcComplete => to_value(&generate::complete_graph(need("n", *n)?))?,
                Family::QmcCycle => to_value(&generate::cycle_graph(need("n", *n)?)?)?,
                Family::QmcRandom => to_value(&generate::random_graph(need("n", *n)?, *p, seed)?)?,
            };
            (params, result)
        }
    })
}

fn family_name(f: Family) -> String {
    f.to_possible_value().expect("no skipped variants").get_name().to_string()
}

/// The result document: command metadata, then the result fields at top
/// level, with `budget` always present.
pub fn dispatch(cmd: &Command, seed: u64) -> Result<Value> {
    cmd.validate()?;
    let start = Instant::now();
    let (params, result) = execute(cmd, seed)?;
    let mut doc = Map::new();
    doc.insert("command".into(), json!(cmd.name()));
    doc.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    doc.insert("seed".into(), json!(seed));
    doc.insert("params".into(), params);
    match result {
        Value::Object(fields) => doc.extend(fields),
        other => {
            doc.insert("result".into(), other);
        }
    }
    doc.entry("budget").or_insert(Value::Null);
    let elapsed = start.elapsed().as_secs_f64();
    log::info!("{} finished in {elapsed:.3}s", cmd.name());
    doc.insert("wall_time_s".into(), json!(elapsed));
    Ok(Value::Object(doc))
}
