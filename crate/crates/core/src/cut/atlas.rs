//! Common refinement of a family of cut sides ("atoms") and atom sizes.

use std::collections::BTreeMap;

use rand::Rng as _;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Default cap on the number of distinct sides.
pub const MAX_ATLAS_SIDES: usize = 24;
/// Above this vertex count atom sizes are sampled rather than counted.
pub const EXACT_COUNT_MAX_N: usize = 100_000;

#[derive(Clone, Debug, Serialize)]
pub struct RefinementAtlas {
    pub n: usize,
    /// Distinct sides, each sorted.
    pub sides: Vec<Vec<usize>>,
    /// Membership signature of each atom (bit `i` = inside side `i`).
    pub signatures: Vec<u64>,
    /// Atom id per vertex.
    pub atom_of: Vec<usize>,
    /// Vertices per atom, sorted.
    pub members: Vec<Vec<usize>>,
    /// Atoms whose union is each side.
    pub side_atoms: Vec<Vec<usize>>,
}

impl RefinementAtlas {
    /// Builds the coarsest partition refining every side. Atoms are numbered
    /// by their smallest vertex.
    pub fn build(n: usize, sides: &[Vec<usize>], max_sides: usize) -> Result<Self> {
        let mut sides: Vec<Vec<usize>> = sides
            .iter()
            .map(|s| {
                let mut s = s.clone();
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        sides.sort();
        sides.dedup();
        if sides.len() > max_sides.min(64) {
            return Err(Error::size("refinement atlas sides (use a larger eps)", sides.len(), max_sides.min(64)));
        }
        if let Some(bad) = sides.iter().flatten().find(|&&v| v >= n) {
            return Err(Error::InvalidInput(format!("side vertex {bad} out of range (n = {n})")));
        }
        let mut sig = vec![0u64; n];
        for (i, s) in sides.iter().enumerate() {
            for &v in s {
                sig[v] |= 1 << i;
            }
        }
        let mut id_of: BTreeMap<u64, usize> = BTreeMap::new();
        let mut signatures = Vec::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        let mut atom_of = vec![0; n];
        for v in 0..n {
            let id = *id_of.entry(sig[v]).or_insert_with(|| {
                signatures.push(sig[v]);
                members.push(Vec::new());
                signatures.len() - 1
            });
            atom_of[v] = id;
            members[id].push(v);
        }
        let side_atoms = (0..sides.len())
            .map(|i| {
                (0..signatures.len())
                    .filter(|&a| signatures[a] >> i & 1 == 1)
                    .collect()
            })
            .collect();
        let atlas = RefinementAtlas {
            n,
            sides,
            signatures,
            atom_of,
            members,
            side_atoms,
        };
        atlas.verify()?;
        Ok(atlas)
    }

    pub fn num_atoms(&self) -> usize {
        self.members.len()
    }

    /// Index of a side in the atlas.
    pub fn side_index(&self, side: &[usize]) -> Option<usize> {
        self.sides.binary_search_by(|s| s.as_slice().cmp(side)).ok()
    }

    /// Atom of `v` recomputed from side membership alone.
    pub fn lookup(&self, v: usize) -> Option<usize> {
        let sig = self
            .sides
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, s)| if s.binary_search(&v).is_ok() { acc | 1 << i } else { acc });
        self.signatures.iter().position(|&s| s == sig)
    }

    /// Checks that atoms partition `[n]` and every side is a union of atoms.
    pub fn verify(&self) -> Result<()> {
        let total: usize = self.members.iter().map(Vec::len).sum();
        if total != self.n {
            return Err(Error::Internal("atoms do not partition the vertex set".into()));
        }
        for (i, s) in self.sides.iter().enumerate() {
            let mut union: Vec<usize> = self.side_atoms[i]
                .iter()
                .flat_map(|&a| self.members[a].iter().copied())
                .collect();
            union.sort_unstable();
            if &union != s {
                return Err(Error::Internal(format!("side {i} is not a union of atoms")));
            }
        }
        Ok(())
    }

    pub fn exact_sizes(&self) -> AtomSizes {
        AtomSizes {
            sizes: self.members.iter().map(|m| m.len() as f64).collect(),
            exact: true,
            error_bound: 0.0,
            samples: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AtomSizes {
    pub sizes: Vec<f64>,
    pub exact: bool,
    /// Additive error per atom holding with the requested probability.
    pub error_bound: f64,
    pub samples: usize,
}

/// Hoeffding sample count so that all `atoms` empirical fractions are within
/// `t` with probability at least `1 − delta` (union bound).
pub fn hoeffding_samples(atoms: usize, t: f64, delta: f64) -> usize {
    ((2.0 * atoms.max(1) as f64 / delta).ln() / (2.0 * t * t)).ceil() as usize
}

/// Atom sizes: exact counts for `n ≤ 1e5` unless `force_sampling`, else
/// uniform vertex sampling with replacement.
pub fn estimate_atom_sizes(
    atlas: &RefinementAtlas,
    target_err: f64,
    delta_fail: f64,
    seed: u64,
    force_sampling: bool,
) -> Result<AtomSizes> {
    if atlas.n <= EXACT_COUNT_MAX_N && !force_sampling {
        return Ok(atlas.exact_sizes());
    }
    if !(target_err > 0.0 && delta_fail > 0.0 && delta_fail < 1.0) {
        return Err(Error::Parameter("target_err > 0 and 0 < delta_fail < 1 required".into()));
    }
    let samples = hoeffding_samples(atlas.num_atoms(), target_err, delta_fail);
    let mut rng = rng_from_seed(seed);
    let mut counts = vec![0usize; atlas.num_atoms()];
    for _ in 0..samples {
        counts[atlas.atom_of[rng.random_range(0..atlas.n)]] += 1;
    }
    let n = atlas.n as f64;
    Ok(AtomSizes {
        sizes: counts.iter().map(|&c| n * c as f64 / samples as f64).collect(),
        exact: false,
        error_bound: target_err * n,
        samples,
    })
}
