mod common;

use common::naive_logdet;
use mwsr::cgp::weighted_gradients;
use mwsr::channel::{
    dpc_user_rates, evaluate_objective, feasibility_check, generate_rayleigh_channels,
    mac_user_rates, ChannelSet, CovarianceSet, ProblemInstance,
};
use mwsr::hermitian::{
    eig_hermitian, logdet_hpd, nsd_part, psd_part, ComplexMatrix, HermitianMatrix,
};
use mwsr::projection::{block_eigenvalues, project_sum_power, water_level_search, BlockDiagonal};
use mwsr::sampling::{gaussian_matrix, random_feasible_blocks, random_hermitian, random_psd};
use mwsr::{cgp_solve, OptimizerConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn instance(
    seed: u64,
    users: usize,
    nt: usize,
    nr: usize,
    weights: &[f64],
    power: f64,
) -> ProblemInstance {
    ProblemInstance::new(
        generate_rayleigh_channels(users, nt, nr, seed).unwrap(),
        weights,
        power,
        "prop",
    )
    .unwrap()
}

fn commutator(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    let (a, b) = (a.as_matrix(), b.as_matrix());
    mwsr::hermitian::max_abs(&(a * b - b * a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn moreau_split(seed in any::<u64>(), dim in 1usize..6, scale in 0.01f64..100.0) {
        let a = random_hermitian(&mut rng(seed), dim, scale);
        let p = psd_part(&a).unwrap();
        let n = nsd_part(&a).unwrap();
        let norm = a.frobenius_norm_sq().sqrt();
        prop_assert!(p.add(&n).max_abs_diff(&a) <= 1e-10 * norm.max(1.0));
        prop_assert!(p.inner(&n).abs() <= 1e-10 * norm.max(1.0).powi(2));
        prop_assert!(p.min_eigenvalue().unwrap() >= -1e-10 * norm.max(1.0));
        prop_assert!(n.scale(-1.0).min_eigenvalue().unwrap() >= -1e-10 * norm.max(1.0));
    }

    #[test]
    fn eigenvalues_shift(seed in any::<u64>(), dim in 1usize..6, c in -10.0f64..10.0) {
        let a = random_hermitian(&mut rng(seed), dim, 1.0);
        let shifted = a.add(&HermitianMatrix::identity(dim).scale(c));
        let base = eig_hermitian(&a).unwrap().eigenvalues;
        let moved = eig_hermitian(&shifted).unwrap().eigenvalues;
        for (x, y) in base.iter().zip(&moved) {
            prop_assert!((x + c - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn projection_properties(
        seed in any::<u64>(),
        users in 1usize..5,
        dim in 1usize..5,
        power in 0.1f64..20.0,
        scale in 0.01f64..10.0,
    ) {
        let mut r = rng(seed);
        let input: Vec<_> = (0..users).map(|_| random_hermitian(&mut r, dim, scale)).collect();
        let out = project_sum_power(&input, power).unwrap();
        prop_assert!(feasibility_check(&out.projected, power).feasible);
        prop_assert!(out.active_index <= users * dim);
        prop_assert!(out.water_level >= 0.0);

        let again = project_sum_power(&out.projected.blocks, power).unwrap();
        prop_assert!(again.projected.max_abs_diff(&out.projected) <= 1e-10);

        for (a, b) in input.iter().zip(&out.projected.blocks) {
            prop_assert!(commutator(a, b) <= 1e-8 * (1.0 + scale * scale));
        }
        prop_assert!(out.water_level == 0.0 || (out.trace_after - power).abs() <= 1e-8);

        // same water level from a direct search of the merged spectrum
        let spectrum = block_eigenvalues(&BlockDiagonal::new(input.clone()).unwrap()).unwrap();
        let level = water_level_search(&spectrum.eigenvalues, power).unwrap();
        prop_assert_eq!(level.mu, out.water_level);
    }

    #[test]
    fn projection_commutes_with_block_permutation(seed in any::<u64>(), power in 0.1f64..5.0) {
        let mut r = rng(seed);
        let input: Vec<_> = (0..3).map(|_| random_hermitian(&mut r, 2, 1.0)).collect();
        let reversed: Vec<_> = input.iter().rev().cloned().collect();
        let a = project_sum_power(&input, power).unwrap().projected;
        let b = project_sum_power(&reversed, power).unwrap().projected;
        for (x, y) in a.blocks.iter().zip(b.blocks.iter().rev()) {
            prop_assert!(x.max_abs_diff(y) <= 1e-10);
        }
    }

    #[test]
    fn objective_identities(
        seed in any::<u64>(),
        users in 1usize..5,
        nt in 1usize..4,
        nr in 1usize..4,
        weights in prop::collection::vec(0.0f64..3.0, 4),
    ) {
        let w = &weights[..users];
        let inst = instance(seed, users, nt, nr, w, 10.0);
        let q = CovarianceSet::new(random_feasible_blocks(&mut rng(seed ^ 1), users, nr, 10.0));
        let f = evaluate_objective(&inst, &q).unwrap();

        // per-term recomputation without running sums, through LU
        let mut order: Vec<usize> = (0..users).collect();
        order.sort_by(|&a, &b| w[a].total_cmp(&w[b]));
        let mut naive = 0.0;
        let mut previous = 0.0;
        for (pos, _) in order.iter().enumerate() {
            let mut m = ComplexMatrix::identity(nt, nt);
            for &u in &order[pos..] {
                let h = inst.channels.channel(u);
                m += h.adjoint() * q.blocks[u].as_matrix() * h;
            }
            naive += (w[order[pos]] - previous) * naive_logdet(&m);
            previous = w[order[pos]];
        }
        prop_assert!((f - naive).abs() <= 1e-10 * (1.0 + f.abs()));

        let rates = mac_user_rates(&inst, &q).unwrap();
        prop_assert!(rates.iter().all(|&r| r >= -1e-10));
        let weighted: f64 = rates.iter().zip(w).map(|(r, u)| r * u).sum();
        prop_assert!((weighted - f).abs() <= 1e-10 * (1.0 + f.abs()));

        for t in [0.0, 0.25, 0.5, 0.99] {
            prop_assert!(evaluate_objective(&inst, &q.scale(t)).unwrap() <= f + 1e-10);
        }
    }

    #[test]
    fn relabeling_invariance(seed in any::<u64>(), weights in prop::collection::vec(0.0f64..3.0, 4)) {
        let inst = instance(seed, 4, 3, 2, &weights, 10.0);
        let q = CovarianceSet::new(random_feasible_blocks(&mut rng(seed ^ 2), 4, 2, 10.0));
        let perm = [2usize, 0, 3, 1];
        let channels: Vec<_> = perm.iter().map(|&i| inst.channels.channel(i).clone()).collect();
        let w: Vec<_> = perm.iter().map(|&i| weights[i]).collect();
        let relabeled = ProblemInstance::new(ChannelSet::new(3, 2, channels).unwrap(), &w, 10.0, "perm").unwrap();
        let qp = CovarianceSet::new(perm.iter().map(|&i| q.blocks[i].clone()).collect());
        let a = evaluate_objective(&inst, &q).unwrap();
        let b = evaluate_objective(&relabeled, &qp).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn dpc_two_users(seed in any::<u64>(), nt in 1usize..4, nr in 1usize..4) {
        let mut r = rng(seed);
        let channels = generate_rayleigh_channels(2, nt, nr, seed).unwrap();
        let g1 = random_psd(&mut r, nt, nt);
        let g2 = random_psd(&mut r, nt, 1);
        let rates = dpc_user_rates(&channels, &[g1.clone(), g2.clone()]).unwrap();
        let ld = |h: &ComplexMatrix, g: &ComplexMatrix| {
            naive_logdet(&(ComplexMatrix::identity(nr, nr) + h * g * h.adjoint()))
        };
        let (h1, h2) = (channels.channel(0), channels.channel(1));
        let both = g1.as_matrix() + g2.as_matrix();
        let r1 = ld(h1, &both) - ld(h1, g2.as_matrix());
        let r2 = ld(h2, g2.as_matrix());
        prop_assert!((rates[0] - r1).abs() <= 1e-10 * (1.0 + r1.abs()));
        prop_assert!((rates[1] - r2).abs() <= 1e-10 * (1.0 + r2.abs()));
        prop_assert!(rates.iter().all(|&x| x >= -1e-10));
    }

    #[test]
    fn logdet_matches_lu(seed in any::<u64>(), dim in 1usize..6) {
        let a = gaussian_matrix(&mut rng(seed), dim, dim);
        let m = HermitianMatrix::new(&a * a.adjoint() + ComplexMatrix::identity(dim, dim)).unwrap();
        let expected = naive_logdet(m.as_matrix());
        prop_assert!((logdet_hpd(&m).unwrap() - expected).abs() <= 1e-10 * (1.0 + expected.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Replays a solve one iteration at a time and checks each iterate.
    #[test]
    fn every_iterate_is_feasible_and_ascending(seed in 0u64..1000) {
        let inst = instance(seed, 4, 3, 3, &[0.5, 1.5, 1.0, 0.8], 5.0);
        let full = cgp_solve(&inst, &OptimizerConfig::default(), None).unwrap();
        let steps = full.iterations().min(15);
        let mut previous = evaluate_objective(&inst, &CovarianceSet::uniform(4, 3, 5.0)).unwrap();
        for k in 1..=steps {
            let partial = cgp_solve(&inst, &OptimizerConfig { max_iters: k, ..OptimizerConfig::default() }, None).unwrap();
            prop_assert!(feasibility_check(&partial.covariances, 5.0).feasible);
            prop_assert!(partial.final_objective >= previous - 1e-12);
            prop_assert_eq!(partial.final_objective, full.trace[k - 1].objective);
            previous = partial.final_objective;
        }
        let grad = weighted_gradients(&inst, &full.covariances).unwrap();
        let mut r = rng(seed);
        for _ in 0..100 {
            let v = CovarianceSet::new(random_feasible_blocks(&mut r, 4, 3, 5.0));
            prop_assert!(grad.slope_towards(&v, &full.covariances) <= 1e-4 * (1.0 + full.final_objective.abs()));
        }
    }
}
