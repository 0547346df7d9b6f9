//! The guess model: grid coordinates for side magnetizations, the cut
//! polynomial they feed, and the constraint set each guess induces.

use serde::Serialize;

use super::constraints::{AffineRow, ConstraintSet};
use crate::cut::{AtomSizes, HamiltonianCutDecomposition, RefinementAtlas};
use crate::error::{Error, Result};
use crate::state::ProductState;

/// Default cap on enumerated guess-tree nodes.
pub const DEFAULT_NODE_CAP: u64 = 10_000_000;

/// One guessed quantity: the weighted magnetization of a side in one Bloch
/// component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GuessCoord {
    pub side: usize,
    /// Bloch component, `≥ 1`.
    pub component: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Factor {
    /// A guessed coordinate.
    Coord(usize),
    /// An identity component: the side's total weight.
    Fixed { side: usize, value: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelPiece {
    /// Class weight times cut coefficient.
    pub coeff: f64,
    pub factors: Vec<Factor>,
    /// Atlas side per factor.
    pub sides: Vec<usize>,
}

/// A piece before coordinates are assigned.
#[derive(Clone, Debug)]
pub struct PieceSpec {
    pub coeff: f64,
    pub sides: Vec<usize>,
    /// Bloch component per side (0 = identity).
    pub components: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GuessModel {
    pub d: usize,
    pub atlas: RefinementAtlas,
    /// Weight of each vertex in the magnetizations (1, or a degree).
    pub vertex_weights: Vec<f64>,
    /// Estimated total vertex weight per atom.
    pub atom_weights: Vec<f64>,
    /// Additive error of each atom weight.
    pub weight_error: f64,
    pub coords: Vec<GuessCoord>,
    pub pieces: Vec<ModelPiece>,
    pub constant: f64,
    /// Grid step; guesses are `pitch · j` with `|j| ≤ grid_max`.
    pub pitch: f64,
    pub grid_max: i64,
    /// Half-width of each coordinate's magnetization window.
    pub slack: Vec<f64>,
    pub inner_radius: f64,
}

impl GuessModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        d: usize,
        atlas: RefinementAtlas,
        vertex_weights: Vec<f64>,
        atom_weights: Vec<f64>,
        weight_error: f64,
        specs: &[PieceSpec],
        constant: f64,
        pitch: f64,
        grid_max: i64,
        inner_radius: f64,
    ) -> Result<Self> {
        if !(pitch > 0.0) || grid_max < 0 {
            return Err(Error::Parameter(format!("grid pitch {pitch} and range {grid_max} must be positive")));
        }
        let mut coords: Vec<GuessCoord> = Vec::new();
        let mut pieces = Vec::with_capacity(specs.len());
        let side_weight = |s: usize| -> f64 { atlas.side_atoms[s].iter().map(|&a| atom_weights[a]).sum() };
        for spec in specs {
            let factors = spec
                .sides
                .iter()
                .zip(&spec.components)
                .map(|(&side, &component)| {
                    if component == 0 {
                        return Factor::Fixed {
                            side,
                            value: side_weight(side),
                        };
                    }
                    let c = GuessCoord { side, component };
                    let idx = coords.iter().position(|x| *x == c).unwrap_or_else(|| {
                        coords.push(c);
                        coords.len() - 1
                    });
                    Factor::Coord(idx)
                })
                .collect();
            pieces.push(ModelPiece {
                coeff: spec.coeff,
                factors,
                sides: spec.sides.clone(),
            });
        }
        let slack = coords
            .iter()
            .map(|c| pitch + atlas.side_atoms[c.side].len() as f64 * weight_error)
            .collect();
        Ok(GuessModel {
            d,
            atlas,
            vertex_weights,
            atom_weights,
            weight_error,
            coords,
            pieces,
            constant,
            pitch,
            grid_max,
            slack,
            inner_radius,
        })
    }

    /// Model of a Hamiltonian cut decomposition on grid `{γ n j : |j| ≤ ⌊1/γ⌋}`.
    pub fn from_hamiltonian(
        hcd: &HamiltonianCutDecomposition,
        atlas: RefinementAtlas,
        sizes: &AtomSizes,
        gamma: f64,
        inner_const: f64,
    ) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::Parameter(format!("gamma must lie in (0, 1], got {gamma}")));
        }
        let mut specs = Vec::new();
        for class in &hcd.classes {
            for p in &class.decomposition.pieces {
                let sides = p
                    .sides
                    .iter()
                    .map(|s| atlas.side_index(s).ok_or_else(|| Error::Internal("cut side missing from atlas".into())))
                    .collect::<Result<Vec<_>>>()?;
                specs.push(PieceSpec {
                    coeff: class.weight * p.coeff,
                    sides,
                    components: class.color.clone(),
                });
            }
        }
        let n = hcd.n;
        GuessModel::new(
            hcd.d,
            atlas,
            vec![1.0; n],
            sizes.sizes.clone(),
            sizes.error_bound,
            &specs,
            hcd.constant,
            gamma * n.max(1) as f64,
            (1.0 / gamma + 1e-9).floor() as i64,
            inner_const * gamma,
        )
    }

    pub fn num_coords(&self) -> usize {
        self.coords.len()
    }

    /// Estimated weight of a side.
    pub fn side_weight(&self, side: usize) -> f64 {
        self.atlas.side_atoms[side].iter().map(|&a| self.atom_weights[a]).sum()
    }

    /// Upper bound on the true weight of a side (and on any magnetization).
    pub fn side_bound(&self, side: usize) -> f64 {
        self.atlas.side_atoms[side]
            .iter()
            .map(|&a| self.atom_weights[a] + self.weight_error)
            .sum()
    }

    /// Grid indices of coordinate `t`; with pruning only those whose window
    /// meets the attainable magnetization range.
    pub fn candidates(&self, t: usize, pruning: bool) -> Vec<i64> {
        let reach = self.side_bound(self.coords[t].side) + self.slack[t];
        (-self.grid_max..=self.grid_max)
            .filter(|&j| !pruning || (self.pitch * j as f64).abs() <= reach + 1e-9 * reach.max(1.0))
            .collect()
    }

    pub fn row(&self, t: usize, j: i64) -> AffineRow {
        let c = self.coords[t];
        let g = self.pitch * j as f64;
        AffineRow {
            terms: self.atlas.side_atoms[c.side]
                .iter()
                .map(|&a| (a, c.component, self.atom_weights[a]))
                .collect(),
            lo: g - self.slack[t],
            hi: g + self.slack[t],
        }
    }

    pub fn constraint_set(&self, rows: Vec<AffineRow>) -> ConstraintSet {
        ConstraintSet::new(self.atlas.num_atoms(), self.d, rows, self.inner_radius).with_weights(self.atom_weights.clone())
    }

    /// Constraint set of a complete guess.
    pub fn guess_constraints(&self, guess: &[i64]) -> ConstraintSet {
        self.constraint_set(guess.iter().enumerate().map(|(t, &j)| self.row(t, j)).collect())
    }

    /// Cut polynomial at a complete guess (grid indices).
    pub fn value(&self, guess: &[i64]) -> f64 {
        self.constant
            + self
                .pieces
                .iter()
                .map(|p| {
                    p.coeff
                        * p.factors
                            .iter()
                            .map(|f| match *f {
                                Factor::Coord(t) => self.pitch * guess[t] as f64,
                                Factor::Fixed { value, .. } => value,
                            })
                            .product::<f64>()
                })
                .sum::<f64>()
    }

    /// Lower bound of the cut polynomial when coordinate `t` ranges over
    /// `[lo[t], hi[t]]`.
    pub fn lower_bound(&self, lo: &[f64], hi: &[f64]) -> f64 {
        let mut total = self.constant;
        for p in &self.pieces {
            let ranges: Vec<(f64, f64)> = p
                .factors
                .iter()
                .map(|f| match *f {
                    Factor::Coord(t) => (lo[t], hi[t]),
                    Factor::Fixed { value, .. } => (value, value),
                })
                .collect();
            let mut best = f64::INFINITY;
            for corner in 0..(1usize << ranges.len()) {
                let prod: f64 = ranges
                    .iter()
                    .enumerate()
                    .map(|(i, r)| if corner >> i & 1 == 0 { r.0 } else { r.1 })
                    .product();
                best = best.min(p.coeff * prod);
            }
            total += best;
        }
        total
    }

    /// Weighted magnetizations of a per-vertex state for every coordinate.
    pub fn magnetizations(&self, s: &ProductState) -> Vec<f64> {
        self.coords
            .iter()
            .map(|c| {
                self.atlas.sides[c.side]
                    .iter()
                    .map(|&u| self.vertex_weights[u] * s.alphas[u][c.component - 1])
                    .sum()
            })
            .collect()
    }

    /// Weighted average of a per-vertex state over each atom.
    pub fn compress(&self, s: &ProductState) -> Vec<Vec<f64>> {
        let comps = self.d * self.d - 1;
        self.atlas
            .members
            .iter()
            .map(|m| {
                let w: f64 = m.iter().map(|&u| self.vertex_weights[u]).sum();
                let mut acc = vec![0.0; comps];
                for &u in m {
                    for (c, x) in acc.iter_mut().enumerate() {
                        *x += self.vertex_weights[u] * s.alphas[u][c];
                    }
                }
                if w > 0.0 {
                    acc.iter_mut().for_each(|x| *x /= w);
                }
                acc
            })
            .collect()
    }

    /// Nearest grid index of each magnetization.
    pub fn round_to_grid(&self, m: &[f64]) -> Vec<i64> {
        m.iter()
            .map(|&x| ((x / self.pitch).round() as i64).clamp(-self.grid_max, self.grid_max))
            .collect()
    }

    /// Total weight of index tuples in `S_1 × ... × S_k` with a repeated
    /// vertex, each tuple weighted by its vertex weights.
    pub fn repeated_tuple_weight(&self, sides: &[usize]) -> f64 {
        let n = self.atlas.n;
        let member = |s: usize| -> Vec<bool> {
            let mut m = vec![false; n];
            for &u in &self.atlas.sides[s] {
                m[u] = true;
            }
            m
        };
        let w = &self.vertex_weights;
        match sides.len() {
            0 | 1 => 0.0,
            2 => {
                let (a, b) = (member(sides[0]), member(sides[1]));
                (0..n).filter(|&u| a[u] && b[u]).map(|u| w[u] * w[u]).sum()
            }
            3 => {
                let m: Vec<Vec<bool>> = sides.iter().map(|&s| member(s)).collect();
                let tot = |i: usize| -> f64 { (0..n).filter(|&u| m[i][u]).map(|u| w[u]).sum() };
                let pair = |i: usize, j: usize| -> f64 { (0..n).filter(|&u| m[i][u] && m[j][u]).map(|u| w[u] * w[u]).sum() };
                let triple: f64 = (0..n).filter(|&u| m[0][u] && m[1][u] && m[2][u]).map(|u| w[u].powi(3)).sum();
                pair(0, 1) * tot(2) + pair(0, 2) * tot(1) + pair(1, 2) * tot(0) - 2.0 * triple
            }
            _ => unreachable!("locality above 3 is rejected earlier"),
        }
    }

    /// `Σ_p |coeff_p| · (repeated-tuple weight)`: bounds the gap between the
    /// cut polynomial at exact magnetizations and the distinct-index energy.
    pub fn diagonal_term(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.coeff.abs() * self.repeated_tuple_weight(&p.sides))
            .sum()
    }

    /// `Σ_p |coeff_p| (Π (M_j + δ_j) − Π M_j)` with `M_j` the side bound and
    /// `δ_j` how far a guess can sit from the true magnetization.
    pub fn grid_term(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| {
                let (mut with, mut without) = (1.0, 1.0);
                for (f, &side) in p.factors.iter().zip(&p.sides) {
                    let m = self.side_bound(side);
                    let err = self.atlas.side_atoms[side].len() as f64 * self.weight_error;
                    let delta = match *f {
                        Factor::Coord(t) => self.slack[t] + err,
                        Factor::Fixed { .. } => err,
                    };
                    with *= m + delta;
                    without *= m;
                }
                p.coeff.abs() * (with - without)
            })
            .sum()
    }

    /// Odometer over all (or pruned) guesses in enumeration order.
    pub fn enumerate(&self, pruning: bool, cap: u64) -> Result<GuessStream> {
        let lists: Vec<Vec<i64>> = (0..self.num_coords()).map(|t| self.candidates(t, pruning)).collect();
        let size = lists.iter().try_fold(1u64, |acc, l| acc.checked_mul(l.len() as u64));
        match size {
            Some(s) if s <= cap => Ok(GuessStream {
                lists,
                pos: vec![0; self.num_coords()],
                done: false,
            }),
            _ => Err(Error::EnumerationCap {
                cap,
                detail: format!("{} coordinates with grid {}", self.num_coords(), 2 * self.grid_max + 1),
            }),
        }
    }
}

/// Iterator over guesses as grid indices.
pub struct GuessStream {
    lists: Vec<Vec<i64>>,
    pos: Vec<usize>,
    done: bool,
}

impl Iterator for GuessStream {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        if self.done || self.lists.iter().any(Vec::is_empty) {
            return None;
        }
        let out = self.pos.iter().zip(&self.lists).map(|(&i, l)| l[i]).collect();
        // advance the last coordinate fastest
        let mut t = self.lists.len();
        loop {
            if t == 0 {
                self.done = true;
                break;
            }
            t -= 1;
            self.pos[t] += 1;
            if self.pos[t] < self.lists[t].len() {
                break;
            }
            self.pos[t] = 0;
        }
        Some(out)
    }
}
