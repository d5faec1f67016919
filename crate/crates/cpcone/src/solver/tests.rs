use super::*;
use crate::boundary::{hildebrand_factor, horn_factor, HildebrandParams, HornParams};
use approx::assert_relative_eq;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn horn_example() -> (FactorMatrix, SymMatrix) {
    let p = HornParams::new([1.0; 5], [1.0, 2.0, 3.0, 4.0, 5.0], [1.0; 5]).unwrap();
    let b = horn_factor(&p).unwrap();
    let a = b.gram();
    (b, a)
}

fn random_sym(rng: &mut impl Rng, dim: usize) -> SymMatrix {
    SymMatrix::from_upper(dim, |_, _| rng.gen_range(-1.0..1.0))
}

fn random_dense(rng: &mut impl Rng, rows: usize, cols: usize) -> Dense {
    Dense::from_data(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .unwrap()
}

#[test]
fn objective_values() {
    // exact factorization gives zero
    let (b, a) = horn_example();
    let c_sqrt = Dense::from_data(5, 5, b.data().iter().map(|v| v.sqrt()).collect()).unwrap();
    assert!(objective(&a, &c_sqrt).unwrap() <= 1e-20);

    // zero factor of the identity: (1/8)||I||^2 = 5/8
    let zero = Dense::zeros(5, 5);
    assert_eq!(objective(&SymMatrix::identity(5), &zero).unwrap(), 0.625);

    assert!(objective(&SymMatrix::identity(4), &Dense::zeros(5, 5)).is_err());
}

#[test]
fn gradient_zero_cases() {
    let a = SymMatrix::identity(5);
    let g = gradient(&a, &Dense::zeros(5, 4)).unwrap();
    assert!(g.data().iter().all(|&v| v == 0.0));

    // stationary at exact factorizations, exactly
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let c = random_dense(&mut rng, 5, 5);
    let b_data: Vec<f64> = c.data().iter().map(|v| v * v).collect();
    let b = FactorMatrix::new(5, 5, b_data).unwrap();
    let g = gradient(&b.gram(), &c).unwrap();
    assert!(g.data().iter().all(|&v| v == 0.0));
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..100 {
        let r = [4, 5, 6][trial % 3];
        let a = random_sym(&mut rng, 5);
        let c = random_dense(&mut rng, 5, r);
        let g = gradient(&a, &c).unwrap();

        let h = 1e-6;
        let mut worst_abs = 0.0f64;
        let mut scale = 0.0f64;
        for k in 0..5 * r {
            let mut plus = c.clone();
            plus.data_mut()[k] += h;
            let mut minus = c.clone();
            minus.data_mut()[k] -= h;
            let fd = (objective(&a, &plus).unwrap() - objective(&a, &minus).unwrap()) / (2.0 * h);
            worst_abs = worst_abs.max((g.data()[k] - fd).abs());
            scale = scale.max(fd.abs()).max(g.data()[k].abs());
        }
        assert!(
            worst_abs <= 1e-6 * scale.max(1.0),
            "trial {trial}: {worst_abs} vs scale {scale}"
        );
    }
}

#[test]
fn identity_start_converges_immediately() {
    let a = SymMatrix::identity(5);
    let report =
        trust_region_solve(&a, 5, Dense::identity(5), &SolveOptions::default()).unwrap();
    assert_eq!(report.iterations, 0);
    assert!(report.converged);
    assert_eq!(report.b.gram(), SymMatrix::identity(5));
}

#[test]
fn reconstructs_horn_example() {
    let (_, a) = horn_example();
    let opts = SolveOptions {
        seed: 20,
        ..SolveOptions::default()
    };
    let report = factorize(&a, 5, &opts).unwrap();
    assert!(report.converged, "residual {}", report.residual);
    assert!(report.residual < 1e-8);
    assert!(report.grad_norm <= 1e-8 * (1.0 + a.frob_norm()));
}

#[test]
fn factorize_identity() {
    let report = factorize(&SymMatrix::identity(5), 5, &SolveOptions::default()).unwrap();
    assert!(report.converged);
    assert!(report.residual < 1e-12);
}

#[test]
fn factorize_interior_gram_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut successes = 0;
    for i in 0..10 {
        let data: Vec<f64> = (0..25).map(|_| rng.gen::<f64>()).collect();
        let a = FactorMatrix::new(5, 5, data).unwrap().gram();
        let opts = SolveOptions {
            seed: 1000 + i,
            ..SolveOptions::default()
        };
        if factorize(&a, 5, &opts).unwrap().converged {
            successes += 1;
        }
    }
    assert!(successes >= 9, "only {successes}/10 interior matrices solved");
}

#[test]
fn infeasible_rank_fails_cleanly() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let data: Vec<f64> = (0..25).map(|_| rng.gen::<f64>()).collect();
    let a = FactorMatrix::new(5, 5, data).unwrap().gram();
    let report = factorize(&a, 4, &SolveOptions::default()).unwrap();
    assert!(!report.converged);
    assert!(report.residual > 1e-6);
}

#[test]
fn nonnegativity_and_support() {
    let (_, a) = horn_example();
    let report = factorize(&a, 5, &SolveOptions::default()).unwrap();
    assert!(report.b.data().iter().all(|&v| v >= 0.0));
    // residual consistent with the reported factor
    assert_relative_eq!(
        report.residual,
        a.frob_dist(&report.b.gram()).unwrap(),
        max_relative = 1e-14
    );
}

#[test]
fn patterned_solve_preserves_zeros() {
    let (b, a) = horn_example();
    let pattern: Vec<bool> = b.support().to_vec();
    let opts = SolveOptions {
        seed: 4,
        ..SolveOptions::default()
    };
    let report = factorize_patterned(&a, 5, &pattern, &opts).unwrap();
    assert!(report.residual < 1e-8);
    for (k, &p) in pattern.iter().enumerate() {
        if !p {
            assert_eq!(report.b.data()[k], 0.0);
            assert_eq!(report.c_final.data()[k], 0.0);
        }
    }
    // gradient vanishes exactly on the masked positions at the final iterate
    let g = gradient(&a, &report.c_final).unwrap();
    for (k, &p) in pattern.iter().enumerate() {
        if !p {
            assert_eq!(g.data()[k], 0.0);
        }
    }
}

#[test]
fn patterned_all_true_matches_factorize() {
    let (_, a) = horn_example();
    let opts = SolveOptions {
        seed: 9,
        restarts: 3,
        ..SolveOptions::default()
    };
    let free = factorize(&a, 5, &opts).unwrap();
    let masked = factorize_patterned(&a, 5, &vec![true; 25], &opts).unwrap();
    assert_eq!(free.residual.to_bits(), masked.residual.to_bits());
    assert_eq!(free.c_final, masked.c_final);
}

#[test]
fn patterned_rejects_dead_row() {
    let (_, a) = horn_example();
    let mut pattern = vec![true; 25];
    for j in 0..5 {
        pattern[2 * 5 + j] = false;
    }
    assert!(matches!(
        factorize_patterned(&a, 5, &pattern, &SolveOptions::default()),
        Err(Error::IncompatiblePattern { row: 2 })
    ));
}

#[test]
fn classify_easy_cases() {
    let opts = SolveOptions::default();
    let id = classify(&SymMatrix::identity(5), &opts).unwrap();
    assert_eq!(id.verdict, Verdict::CpRank5);
    assert!(id.best_residual_r6.is_none());

    let (_, a) = horn_example();
    let horn = classify(&a, &opts).unwrap();
    assert_eq!(horn.verdict, Verdict::CpRank5);
}

#[test]
fn classify_permuted_boundary_point() {
    // cyclic relabeling keeps the matrix completely positive
    let (_, a) = horn_example();
    let cycled = a.permute(&[1, 2, 3, 4, 0]).unwrap();
    let verdict = classify(&cycled, &SolveOptions::default()).unwrap().verdict;
    assert_eq!(verdict, Verdict::CpRank5);
}

#[test]
fn deterministic_reports() {
    let (_, a) = horn_example();
    let opts = SolveOptions {
        seed: 123,
        restarts: 4,
        ..SolveOptions::default()
    };
    let p = factorize(&a, 5, &opts).unwrap();
    let q = factorize(&a, 5, &opts).unwrap();
    assert_eq!(p.residual.to_bits(), q.residual.to_bits());
    assert_eq!(p.grad_norm.to_bits(), q.grad_norm.to_bits());
    assert_eq!(p.c_final, q.c_final);
    assert_eq!(p.restart_index, q.restart_index);
}

#[test]
fn relate_identity_and_permutation() {
    let (b, _) = horn_example();
    let (q, defect) = relate_factorizations(&b, &b).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            assert_relative_eq!(
                q.get(i, j),
                if i == j { 1.0 } else { 0.0 },
                epsilon = 1e-12
            );
        }
    }
    assert!(defect <= 1e-12);

    // column permutation is recovered as the permutation matrix
    let perm = [3usize, 0, 4, 1, 2];
    let mut permuted = vec![0.0; 25];
    for i in 0..5 {
        for j in 0..5 {
            permuted[i * 5 + perm[j]] = b.get(i, j);
        }
    }
    let bp = FactorMatrix::new(5, 5, permuted).unwrap();
    let (q, defect) = relate_factorizations(&b, &bp).unwrap();
    assert!(defect <= 1e-12);
    for j in 0..5 {
        assert_relative_eq!(q.get(j, perm[j]), 1.0, epsilon = 1e-12);
    }
}

#[test]
fn relate_alternative_factorization() {
    // truncated alternative factor of the integer example; four printed
    // decimals limit the reproducible accuracy
    let (b, _) = horn_example();
    let b_alt = FactorMatrix::from_rows(&[
        vec![4.9294, 0.0, 0.0, 1.5165, 5.1382],
        vec![5.1323, 1.3996, 0.0, 0.0, 1.3041],
        vec![0.2029, 2.8286, 1.7199, 0.0, 0.0],
        vec![0.0, 1.4290, 3.4642, 2.6377, 0.0],
        vec![0.0, 0.0, 1.7443, 4.1542, 3.8341],
    ])
    .unwrap();
    let (q, defect) = relate_factorizations(&b, &b_alt).unwrap();
    assert!(defect <= 1e-3, "defect {defect}");
    assert!((q.get(0, 0) - 0.2262).abs() <= 0.02, "q00 {}", q.get(0, 0));
}

#[test]
fn relate_rank_deficient_fails() {
    let flat = FactorMatrix::new(5, 2, vec![1.0; 10]).unwrap();
    assert!(matches!(
        relate_factorizations(&flat, &flat),
        Err(Error::RankDeficient)
    ));
}

#[test]
fn column_matching_distance() {
    let (b, _) = horn_example();
    assert_eq!(match_columns(&b, &b).unwrap(), 0.0);

    let perm = [2usize, 4, 0, 1, 3];
    let mut permuted = vec![0.0; 25];
    for i in 0..5 {
        for j in 0..5 {
            permuted[i * 5 + perm[j]] = b.get(i, j);
        }
    }
    let bp = FactorMatrix::new(5, 5, permuted).unwrap();
    assert_eq!(match_columns(&b, &bp).unwrap(), 0.0);
}

#[test]
fn hildebrand_point_reconstructs() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = HildebrandParams::sample(&mut rng);
    let a = hildebrand_factor(&p).unwrap().gram();
    let opts = SolveOptions {
        seed: 31,
        ..SolveOptions::default()
    };
    let report = factorize(&a, 5, &opts).unwrap();
    assert!(report.converged, "residual {}", report.residual);
}

#[test]
fn report_json_round_trip() {
    let (_, a) = horn_example();
    let opts = SolveOptions {
        restarts: 2,
        ..SolveOptions::default()
    };
    let report = factorize(&a, 5, &opts).unwrap();
    let json = serde_json::to_string(&report).unwrap();
    let back: SolveReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back.residual.to_bits(), report.residual.to_bits());
    assert_eq!(back.iterations, report.iterations);
    assert_eq!(back.b, report.b);
}
