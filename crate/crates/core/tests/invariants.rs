use std::collections::BTreeSet;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng as _;

use meanfield::cut::{
    cut_norm_exact, cut_norm_heuristic, estimate_atom_sizes, fk_decompose, ham_cut_decompose, FkOptions, RefinementAtlas,
    MAX_ATLAS_SIDES,
};
use meanfield::exact::{expectation, product_free_energy};
use meanfield::generate::{planar_random, random_graph};
use meanfield::linalg::{random_density_matrix, random_hermitian};
use meanfield::pauli::{PauliString, C64};
use meanfield::relax::{check_feasible, gs_estimate, AffineRow, GuessModel};
use meanfield::rng::{rng_from_seed, Rng};
use meanfield::sampling::subsample;
use meanfield::sparse::{clustered_hamiltonian, partition_pipeline, tree_decompose_heuristic, validate_tree_decomposition, cluster_fe, cluster_gs};
use meanfield::threshold::{qmc_model, threshold_cut_decompose, threshold_profile, ThresholdOptions};
use meanfield::{
    eb_experiment, exact_free_energy, exact_ground, pauli_decompose, product_energy, qmc_estimate, ColorTensor, DenseState,
    EstimatorOptions, LocalHamiltonian, LocalTerm, ProductState, SparseGraph,
};

fn random_instance(n: usize, terms: usize, k: usize, rng: &mut Rng) -> LocalHamiltonian {
    let list = (0..terms)
        .map(|_| {
            let support = rand::seq::index::sample(rng, n, k).into_vec();
            LocalTerm::new(support, random_hermitian(1 << k, rng))
        })
        .collect();
    LocalHamiltonian::new(n, 2, k, list).unwrap()
}

/// ZZ couplings of strength `a` inside a random block plus weak random terms,
/// so small eps gives a non-empty decomposition.
fn block_instance(n: usize, rng: &mut Rng) -> LocalHamiltonian {
    let zz = PauliString::from_colors(&[3, 3], 2).to_matrix();
    let block: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.6)).collect();
    let a = rng.random_range(-1.0..1.0);
    let mut terms = Vec::new();
    for (i, &u) in block.iter().enumerate() {
        for &v in &block[i + 1..] {
            terms.push(LocalTerm::new(vec![u, v], zz.clone() * C64::new(a, 0.0)));
        }
    }
    for _ in 0..n {
        let s = rand::seq::index::sample(rng, n, 2).into_vec();
        terms.push(LocalTerm::new(s, random_hermitian(4, rng) * C64::new(0.05, 0.0)));
    }
    LocalHamiltonian::new(n, 2, 2, terms).unwrap()
}

fn pieces_sum(n: usize, pieces: &[meanfield::cut::CutPiece]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for p in pieces {
        for &u in &p.sides[0] {
            for &v in &p.sides[1] {
                m[(u, v)] += p.coeff;
            }
        }
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pauli_round_trip(seed in any::<u64>(), n in 2usize..=6, k in 1usize..=3, terms in 1usize..8) {
        let mut rng = rng_from_seed(seed);
        let h = random_instance(n.max(k), terms, k, &mut rng);
        let pd = pauli_decompose(&h);
        for (i, t) in h.terms().iter().enumerate() {
            prop_assert!((pd.reconstruct_term(i) - &t.matrix).norm() < 1e-9);
        }
    }

    #[test]
    fn product_energy_matches_dense_trace(seed in any::<u64>(), n in 2usize..=6, k in 1usize..=3) {
        let mut rng = rng_from_seed(seed);
        let h = random_instance(n.max(k), 6, k, &mut rng);
        let s = ProductState::random_mixed(h.n(), 2, &mut rng);
        let dense = expectation(&h, &DenseState::mixed(s.to_dense().unwrap()).unwrap()).unwrap();
        prop_assert!((product_energy(&pauli_decompose(&h), &s).unwrap() - dense).abs() < 1e-9);
    }

    #[test]
    fn product_states_are_variational(seed in any::<u64>(), n in 2usize..=5, beta in 0.1f64..20.0) {
        let mut rng = rng_from_seed(seed);
        let h = random_instance(n, 2 * n, 2, &mut rng);
        let pd = pauli_decompose(&h);
        let s = ProductState::random_mixed(n, 2, &mut rng);
        let p = ProductState::random_pure(n, 2, &mut rng);
        prop_assert!(exact_ground(&h).unwrap().0 <= product_energy(&pd, &p).unwrap() + 1e-9);
        prop_assert!(product_free_energy(&pd, &s, beta).unwrap() >= exact_free_energy(&h, beta).unwrap() - 1e-9);
    }

    #[test]
    fn entanglement_breaking_never_lowers_entropy(seed in any::<u64>(), n in 2usize..=4, l in 0usize..=3) {
        let mut rng = rng_from_seed(seed);
        let h = random_instance(n, n + 1, 2, &mut rng);
        let rho = DenseState::mixed(random_density_matrix(1 << n, &mut rng)).unwrap();
        let s_rho = rho.entropy();
        let rep = eb_experiment(&h, &rho, l, 10, seed).unwrap();
        for t in &rep.per_trial {
            prop_assert!(t.entropy >= s_rho - 1e-9);
        }
    }

    #[test]
    fn matrix_decomposition_is_exact_and_contracting(seed in any::<u64>(), n in 2usize..=12, eps in 0.2f64..0.8) {
        let mut rng = rng_from_seed(seed);
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let mt = ColorTensor::from_matrix(&m);
        let dec = fk_decompose(&mt, eps, seed, &FkOptions::default()).unwrap();
        let w = dec.residual(&mt).to_matrix();
        prop_assert!((&m - pieces_sum(n, &dec.pieces) - &w).amax() < 1e-9);
        let f = m.norm();
        for x in &dec.stats.frobenius_history {
            prop_assert!(*x <= f + 1e-9);
        }
    }

    #[test]
    fn heuristic_cut_never_exceeds_exact(seed in any::<u64>(), rows in 1usize..=10, cols in 1usize..=10) {
        let mut rng = rng_from_seed(seed);
        let m = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
        let exact = cut_norm_exact(&m).unwrap();
        prop_assert!(cut_norm_heuristic(&m, 8, seed).value <= exact.value + 1e-9);
    }

    #[test]
    fn atoms_partition_vertices(seed in any::<u64>(), n in 1usize..=30, sides in 0usize..=8) {
        let mut rng = rng_from_seed(seed);
        let list: Vec<Vec<usize>> = (0..sides).map(|_| (0..n).filter(|_| rng.random_bool(0.4)).collect()).collect();
        let atlas = RefinementAtlas::build(n, &list, MAX_ATLAS_SIDES).unwrap();
        atlas.verify().unwrap();
        let mut seen = BTreeSet::new();
        for m in &atlas.members {
            for &u in m {
                prop_assert!(seen.insert(u));
            }
        }
        prop_assert_eq!(seen.len(), n);
        prop_assert_eq!(atlas.exact_sizes().sizes.iter().sum::<f64>(), n as f64);
    }

    #[test]
    fn witnesses_satisfy_constraints(seed in any::<u64>(), atoms in 1usize..=4, rows in 1usize..=6) {
        let mut rng = rng_from_seed(seed);
        let list = (0..rows)
            .map(|_| {
                let terms: Vec<(usize, usize, f64)> = (0..rng.random_range(1..=3))
                    .map(|_| (rng.random_range(0..atoms), rng.random_range(1..=3), rng.random_range(-2.0..2.0)))
                    .collect();
                let centre = rng.random_range(-1.5..1.5);
                let half = rng.random_range(0.01..0.6);
                AffineRow { terms, lo: centre - half, hi: centre + half }
            })
            .collect();
        let cs = meanfield::ConstraintSet::new(atoms, 2, list, 1e-3);
        if let Some(w) = check_feasible(&cs, 1e-9).witness {
            prop_assert!(cs.satisfied_by(&w, 1e-7));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rounded_magnetizations_accept_their_state(seed in any::<u64>(), n in 3usize..=8, gamma in 0.05f64..0.5) {
        let mut rng = rng_from_seed(seed);
        let h = block_instance(n, &mut rng);
        let hcd = ham_cut_decompose(&h, 0.2, seed, &FkOptions::default()).unwrap();
        // too many sides is a reported size limit, not a coverage failure
        let Ok(atlas) = RefinementAtlas::build(n, &hcd.sides(), MAX_ATLAS_SIDES) else {
            return Ok(());
        };
        let sizes = estimate_atom_sizes(&atlas, 0.01, 0.01, seed, false).unwrap();
        let model = GuessModel::from_hamiltonian(&hcd, atlas, &sizes, gamma, 0.1).unwrap();
        for _ in 0..4 {
            let s = ProductState::random_mixed(n, 2, &mut rng);
            let guess = model.round_to_grid(&model.magnetizations(&s));
            prop_assert!(model.guess_constraints(&guess).satisfied_by(&model.compress(&s), 1e-9));
        }
    }

    #[test]
    fn halving_gamma_moves_v_hat_within_grid_budgets(seed in any::<u64>(), n in 3usize..=6) {
        let mut rng = rng_from_seed(seed);
        let h = block_instance(n, &mut rng);
        let mut opts = EstimatorOptions::default();
        opts.search.node_cap = 20_000;
        opts.direct_fallback = false;
        let (Ok(coarse), Ok(fine)) = (gs_estimate(&h, 0.3, 0.25, seed, &opts), gs_estimate(&h, 0.3, 0.125, seed, &opts)) else {
            return Ok(());
        };
        let (bc, bf) = (coarse.budget.unwrap().grid, fine.budget.unwrap().grid);
        prop_assert!(fine.v_hat <= coarse.v_hat + bc + bf + 1e-9);
    }

    #[test]
    fn subsample_terms_come_from_parent(seed in any::<u64>(), n in 2usize..=10, q in 1usize..=10) {
        let mut rng = rng_from_seed(seed);
        let h = random_instance(n, 2 * n, 2, &mut rng);
        let q = q.min(n);
        let (sites, hq) = subsample(&h, q, seed).unwrap();
        for t in hq.terms() {
            let mut parent: Vec<usize> = t.support.iter().map(|&i| sites[i]).collect();
            parent.sort_unstable();
            let found = h.terms().iter().any(|p| {
                let mut a = p.support.clone();
                a.sort_unstable();
                a == parent
            });
            prop_assert!(found);
        }
        let inside = h.terms().iter().filter(|t| t.support.iter().all(|u| sites.contains(u))).count();
        prop_assert!(hq.num_terms() <= inside);
    }

    #[test]
    fn normalized_spectrum_in_unit_interval(seed in any::<u64>(), n in 2usize..=20, p in 0.1f64..1.0) {
        let g = random_graph(n, p, seed).unwrap();
        let prof = threshold_profile(&g, &[0.5]).unwrap();
        for l in prof.eigenvalues {
            prop_assert!(l.abs() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn degree_weighted_compression_is_exact(seed in any::<u64>(), n in 3usize..=10) {
        let g = random_graph(n, 0.6, seed).unwrap();
        prop_assume!(!g.edges.is_empty());
        let opts = ThresholdOptions::default();
        let dec = threshold_cut_decompose(&g, 0.9, seed, &opts).unwrap();
        let model = qmc_model(&g, &dec, 0.5, &opts).unwrap();
        let deg = g.degrees();
        let s = ProductState::random_mixed(n, 2, &mut rng_from_seed(seed));
        let c = model.compress(&s);
        for (a, members) in model.atlas.members.iter().enumerate() {
            for comp in 0..3 {
                let lhs: f64 = members.iter().map(|&u| deg[u] * c[a][comp]).sum();
                let rhs: f64 = members.iter().map(|&u| deg[u] * s.alphas[u][comp]).sum();
                prop_assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn qmc_witness_below_maximum(seed in any::<u64>(), n in 2usize..=6) {
        let g = random_graph(n, 0.7, seed).unwrap();
        let est = qmc_estimate(&g, 0.9, seed, &ThresholdOptions::default()).unwrap();
        let h = g.qmc_hamiltonian().unwrap();
        let neg = LocalHamiltonian::new(
            n, 2, 2,
            h.terms().iter().map(|t| LocalTerm::new(t.support.clone(), t.matrix.clone() * C64::new(-1.0, 0.0))).collect(),
        ).unwrap();
        let max = -exact_ground(&neg).unwrap().0;
        prop_assert!(est.witness_value <= max + 1e-9);
    }

    #[test]
    fn tree_decompositions_are_valid(seed in any::<u64>(), n in 1usize..=40, p in 0.02f64..0.5) {
        let mut rng = rng_from_seed(seed);
        let edges: Vec<(usize, usize, f64)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|_| rng.random_bool(p))
            .map(|(u, v)| (u, v, 1.0))
            .collect();
        let g = SparseGraph::from_edges(n, &edges).unwrap();
        prop_assert!(validate_tree_decomposition(&g, &tree_decompose_heuristic(&g)).is_empty());
    }

    #[test]
    fn sparse_chains_hold(seed in any::<u64>(), rows in 2usize..=3, cols in 2usize..=3, r in 2usize..=5, beta in 0.2f64..5.0) {
        let h = planar_random(rows, cols, seed).unwrap();
        let g = SparseGraph::from_hamiltonian(&h);
        let Ok((_, _, part)) = partition_pipeline(&g, 2, r, seed) else {
            return Ok(());
        };
        let (kept, dropped) = clustered_hamiltonian(&h, &part);
        let budget: f64 = dropped.term_norms().iter().sum();
        // no kept term crosses clusters
        let mut owner = vec![usize::MAX; h.n()];
        for (i, c) in part.solve_units().iter().enumerate() {
            for &u in c {
                owner[u] = i;
            }
        }
        for t in kept.terms() {
            prop_assert!(t.support.iter().all(|&u| owner[u] == owner[t.support[0]]));
        }
        let gs = cluster_gs(&h, &part).unwrap();
        let full = exact_ground(&h).unwrap().0;
        prop_assert!((full - exact_ground(&kept).unwrap().0).abs() <= budget + 1e-9);
        prop_assert!(gs.value >= full - 1e-9 && gs.value <= full + 2.0 * budget + 1e-9);
        let fe = cluster_fe(&h, &part, beta).unwrap();
        let f = exact_free_energy(&h, beta).unwrap();
        prop_assert!(fe.value >= f - 1e-9 && fe.value <= f + 2.0 * budget + 1e-9);
    }
}
