//! Branch-and-bound over the guess grid.
//!
//! Coordinates are fixed one at a time in enumeration order. A partial guess
//! is abandoned when interval bounds show it cannot beat the incumbent or when
//! its constraint set is infeasible; the first minimum in enumeration order
//! wins ties.

use log::debug;
use serde::Serialize;

use super::constraints::AffineRow;
use super::ellipsoid::{check_feasible_with_hint, FeasibilityStatus};
use super::maxent::{max_entropy, MaxEntropy};
use super::model::{GuessModel, DEFAULT_NODE_CAP};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Objective {
    /// Minimize the cut polynomial.
    Energy,
    /// Minimize the cut polynomial minus the maximum entropy over `β`.
    FreeEnergy { beta: f64, entropy_tol: f64 },
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub node_cap: u64,
    /// Row tolerance of the feasibility search.
    pub feas_tol: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            node_cap: DEFAULT_NODE_CAP,
            feas_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchOutcome {
    /// Grid indices of the winning guess.
    pub guess: Vec<i64>,
    /// Cut polynomial at the winning guess.
    pub model_value: f64,
    /// Objective at the winning guess.
    pub objective: f64,
    /// Compressed witness (one Bloch vector per atom).
    pub witness: Vec<Vec<f64>>,
    pub entropy: Option<MaxEntropy>,
    /// Largest entropy duality gap over evaluated leaves.
    pub max_entropy_gap: f64,
    pub nodes: u64,
    pub feasible_leaves: u64,
    /// Partial guesses dropped because feasibility was undecided.
    pub undecided: u64,
}

struct Searcher<'a> {
    model: &'a GuessModel,
    objective: Objective,
    opts: &'a SearchOptions,
    lists: Vec<Vec<i64>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    entropy_cap: f64,
    nodes: u64,
    feasible_leaves: u64,
    undecided: u64,
    max_gap: f64,
    best: Option<SearchOutcome>,
    /// The incumbent came from outside the enumeration; ties must still go
    /// to the first enumerated guess.
    seeded: bool,
}

impl Searcher<'_> {
    fn best_objective(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |b| b.objective)
    }

    fn beats_incumbent(&self, v: f64) -> bool {
        let b = self.best_objective();
        v < b || (self.seeded && v <= b)
    }

    fn bound(&self) -> f64 {
        let e = self.model.lower_bound(&self.lo, &self.hi);
        match self.objective {
            Objective::Energy => e,
            Objective::FreeEnergy { beta, .. } => e - self.entropy_cap / beta,
        }
    }

    fn leaf(&mut self, guess: &[i64], rows: &[AffineRow], witness: Vec<Vec<f64>>) -> Result<()> {
        self.feasible_leaves += 1;
        let value = self.model.value(guess);
        let (objective, witness, entropy) = match self.objective {
            Objective::Energy => (value, witness, None),
            Objective::FreeEnergy { beta, entropy_tol } => {
                let cs = self.model.constraint_set(rows.to_vec());
                let ent = max_entropy(&cs, entropy_tol, Some(&witness))?;
                self.max_gap = self.max_gap.max(ent.gap());
                (value - ent.entropy / beta, ent.witness.clone(), Some(ent))
            }
        };
        if self.beats_incumbent(objective) {
            self.seeded = false;
            self.best = Some(SearchOutcome {
                guess: guess.to_vec(),
                model_value: value,
                objective,
                witness,
                entropy,
                max_entropy_gap: 0.0,
                nodes: 0,
                feasible_leaves: 0,
                undecided: 0,
            });
        }
        Ok(())
    }

    fn dfs(&mut self, guess: &mut Vec<i64>, rows: &mut Vec<AffineRow>, witness: &[Vec<f64>]) -> Result<()> {
        let t = guess.len();
        if t == self.model.num_coords() {
            return self.leaf(guess, rows, witness.to_vec());
        }
        let (save_lo, save_hi) = (self.lo[t], self.hi[t]);
        for i in 0..self.lists[t].len() {
            let j = self.lists[t][i];
            self.nodes += 1;
            if self.nodes > self.opts.node_cap {
                return Err(Error::EnumerationCap {
                    cap: self.opts.node_cap,
                    detail: format!("{} guess coordinates", self.model.num_coords()),
                });
            }
            let g = self.model.pitch * j as f64;
            self.lo[t] = g;
            self.hi[t] = g;
            if !self.beats_incumbent(self.bound()) {
                continue;
            }
            rows.push(self.model.row(t, j));
            let cs = self.model.constraint_set(rows.clone());
            let res = check_feasible_with_hint(&cs, self.opts.feas_tol, Some(witness));
            match res.status {
                FeasibilityStatus::Feasible => {
                    guess.push(j);
                    let w = res.witness.expect("feasible result has a witness");
                    let out = self.dfs(guess, rows, &w);
                    guess.pop();
                    out?;
                }
                FeasibilityStatus::Undecided => self.undecided += 1,
                FeasibilityStatus::Infeasible => {}
            }
            rows.pop();
        }
        self.lo[t] = save_lo;
        self.hi[t] = save_hi;
        Ok(())
    }
}

/// Minimizes the objective over feasible guesses.
pub fn search(model: &GuessModel, objective: Objective, opts: &SearchOptions) -> Result<SearchOutcome> {
    search_from(model, objective, opts, None)
}

/// As [`search`], starting from a known guess (ignored unless feasible) as
/// the incumbent. The result is the same as without it; only pruning
/// improves.
pub fn search_from(model: &GuessModel, objective: Objective, opts: &SearchOptions, incumbent: Option<&[i64]>) -> Result<SearchOutcome> {
    let lists: Vec<Vec<i64>> = (0..model.num_coords()).map(|t| model.candidates(t, true)).collect();
    let lo = lists.iter().map(|l| model.pitch * *l.first().unwrap_or(&0) as f64).collect();
    let hi = lists.iter().map(|l| model.pitch * *l.last().unwrap_or(&0) as f64).collect();
    let ln_d = (model.d as f64).ln();
    let mut s = Searcher {
        model,
        objective,
        opts,
        lists,
        lo,
        hi,
        entropy_cap: model.atom_weights.iter().map(|w| w.max(0.0) * ln_d).sum(),
        nodes: 0,
        feasible_leaves: 0,
        undecided: 0,
        max_gap: 0.0,
        best: None,
        seeded: false,
    };
    let start = vec![vec![0.0; model.d * model.d - 1]; model.atlas.num_atoms()];
    if let Some(g) = incumbent.filter(|g| g.len() == model.num_coords()) {
        let rows: Vec<AffineRow> = g.iter().enumerate().map(|(t, &j)| model.row(t, j)).collect();
        let res = check_feasible_with_hint(&model.constraint_set(rows.clone()), opts.feas_tol, None);
        if let Some(w) = res.witness {
            s.leaf(g, &rows, w)?;
            s.feasible_leaves = 0;
            s.seeded = s.best.is_some();
        }
    }
    s.dfs(&mut Vec::new(), &mut Vec::new(), &start)?;
    debug!(
        "guess search: {} nodes, {} feasible leaves, {} undecided",
        s.nodes, s.feasible_leaves, s.undecided
    );
    let mut best = s
        .best
        .take()
        .ok_or_else(|| Error::Internal("no feasible guess found; every product state lies in some guess".into()))?;
    best.nodes = s.nodes;
    best.feasible_leaves = s.feasible_leaves;
    best.undecided = s.undecided;
    best.max_entropy_gap = s.max_gap;
    Ok(best)
}
