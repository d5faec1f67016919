//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! with its measured runtime. Scales are chosen so the whole suite stays in
//! the minutes range; the statistical bands are deliberately wide enough to
//! absorb solver-constant differences while still catching regressions.

use std::time::Instant;

use cpcone::boundary::{
    hildebrand_certificate, hildebrand_factor, horn_certificate, horn_factor, horn_matrix,
    monomial_difference_exact, monomial_residual, rationalize_hildebrand, rationalize_horn,
    HildebrandParams, HornParams,
};
use cpcone::experiments::{
    reference, run_table1, run_table2, run_table3, ExperimentConfig, Locus,
};
use cpcone::geometry::{normal_direction, BoundaryChart};
use cpcone::mat::{Dense, RationalSymMatrix, SymMatrix};
use cpcone::solver::{
    classify, factorize, factorize_patterned, gradient, match_columns, objective, SolveOptions,
    Verdict,
};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Criterion {
    name: &'static str,
    budget_secs: f64,
    start: Instant,
}

impl Criterion {
    fn new(name: &'static str, budget_secs: f64) -> Self {
        Criterion {
            name,
            budget_secs,
            start: Instant::now(),
        }
    }

    fn finish(self, pass: bool, detail: &str) {
        let elapsed = self.start.elapsed().as_secs_f64();
        println!(
            "criterion {}: {} ({detail}; {elapsed:.2}s of {:.0}s budget)",
            self.name,
            if pass { "PASS" } else { "FAIL" },
            self.budget_secs
        );
        assert!(pass, "criterion {} failed: {detail}", self.name);
        assert!(
            elapsed < self.budget_secs,
            "criterion {} exceeded its {:.0}s budget: {elapsed:.2}s",
            self.name,
            self.budget_secs
        );
    }
}

fn horn_integer_example() -> (SymMatrix, SymMatrix) {
    let a = reference::horn_example_matrix();
    let h = horn_matrix();
    (a, h)
}

#[test]
fn criterion_01_exact_integer_example() {
    let c = Criterion::new("1 exact integer example", 1.0);
    let (a, h) = horn_integer_example();

    let printed = [
        [53.0, 32.0, 1.0, 4.0, 26.0],
        [32.0, 30.0, 5.0, 2.0, 5.0],
        [1.0, 5.0, 11.0, 10.0, 3.0],
        [4.0, 2.0, 10.0, 21.0, 17.0],
        [26.0, 5.0, 3.0, 17.0, 35.0],
    ];
    let gram_exact = (0..5).all(|i| (0..5).all(|j| a.get(i, j) == printed[i][j]));

    let ha = h.hadamard(&a).unwrap();
    let contraction = (0..5).all(|i| (0..5).map(|j| ha.get(i, j)).sum::<f64>() == 0.0);

    let rows: Vec<Vec<i64>> = (0..5)
        .map(|i| (0..5).map(|j| ha.get(i, j) as i64).collect())
        .collect();
    let det_zero = RationalSymMatrix::from_integer_rows(&rows)
        .unwrap()
        .det_exact()
        .is_zero();

    c.finish(
        gram_exact && contraction && det_zero,
        &format!("gram {gram_exact}, contraction {contraction}, exact det {det_zero}"),
    );
}

#[test]
fn criterion_02_gradient_against_finite_differences() {
    let c = Criterion::new("2 gradient correctness", 5.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let r = [4, 5, 6][trial % 3];
        let a = SymMatrix::from_upper(5, |_, _| rng.gen_range(-1.0..1.0));
        let cmat = Dense::from_data(
            5,
            r,
            (0..5 * r).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let g = gradient(&a, &cmat).unwrap();
        let h = 1e-6;
        let mut err = 0.0f64;
        let mut scale = 0.0f64;
        for k in 0..5 * r {
            let mut plus = cmat.clone();
            plus.data_mut()[k] += h;
            let mut minus = cmat.clone();
            minus.data_mut()[k] -= h;
            let fd =
                (objective(&a, &plus).unwrap() - objective(&a, &minus).unwrap()) / (2.0 * h);
            err = err.max((g.data()[k] - fd).abs());
            scale = scale.max(fd.abs()).max(g.data()[k].abs());
        }
        worst = worst.max(err / scale.max(1.0));
    }
    c.finish(
        worst <= 1e-6,
        &format!("worst relative error {worst:.2e} over 100 trials"),
    );
}

#[test]
fn criterion_03_boundary_certificates() {
    let c = Criterion::new("3 boundary certificates", 10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut pass = true;
    let mut worst_horn = 0.0f64;
    let mut worst_hild = 0.0f64;
    for _ in 0..100 {
        let p = HornParams::sample(&mut rng);
        let a = horn_factor(&p).unwrap().gram();
        let cert = horn_certificate(&a, &p.x).unwrap();
        let norm = a.frob_norm();
        worst_horn = worst_horn.max(cert.orthogonality_residual / norm);
        pass &= cert.orthogonality_residual <= 1e-10 * norm;
        pass &= cert.algebraic_residual <= 1e-9 * norm.powi(5);
    }
    for _ in 0..100 {
        let mut p = HildebrandParams::sample(&mut rng);
        p.d1 = [1.0; 5];
        let b = hildebrand_factor(&p).unwrap();
        let a = b.gram();
        let cert = hildebrand_certificate(&a, &p).unwrap();
        let norm = a.frob_norm();
        worst_hild = worst_hild.max(cert.orthogonality_residual / norm);
        pass &= monomial_residual(&b).unwrap() <= 1e-12;
        pass &= cert.orthogonality_residual <= 1e-10 * norm;
    }
    c.finish(
        pass,
        &format!("worst relative orthogonality: horn {worst_horn:.2e}, hildebrand {worst_hild:.2e}"),
    );
}

#[test]
fn criterion_04_rationalization_exactness() {
    let c = Criterion::new("4 rationalization", 5.0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut pass = true;
    let mut worst_dist = 0.0f64;
    let max_den = 100_000u64;
    let h = horn_matrix();
    let h_exact = RationalSymMatrix::from_integer_rows(
        &(0..5)
            .map(|i| (0..5).map(|j| h.get(i, j) as i64).collect())
            .collect::<Vec<_>>(),
    )
    .unwrap();
    for _ in 0..10 {
        let p = HornParams::sample(&mut rng);
        let a = horn_factor(&p).unwrap().gram();
        let exact = rationalize_horn(&a, max_den).unwrap();
        pass &= h_exact.hadamard(&exact).unwrap().det_exact().is_zero();
        let dist = exact.max_dist_to(&a).unwrap();
        worst_dist = worst_dist.max(dist);
        pass &= dist <= 5.0 / max_den as f64;
    }
    for _ in 0..10 {
        let p = HildebrandParams::sample(&mut rng);
        let b = hildebrand_factor(&p).unwrap();
        let exact = rationalize_hildebrand(&b, max_den).unwrap();
        pass &= monomial_difference_exact(&exact).unwrap().is_zero();
        let dist = exact.max_dist_to(&b).unwrap();
        worst_dist = worst_dist.max(dist);
        pass &= dist <= 5.0 / max_den as f64;
    }
    c.finish(
        pass,
        &format!("exact equations hold; worst max-norm distance {worst_dist:.2e} <= {:.2e}", 5.0 / max_den as f64),
    );
}

#[test]
fn criterion_05_reconstruction_sweep() {
    let c = Criterion::new("5 reconstruction (table 2 scale)", 300.0);
    let cfg = ExperimentConfig {
        per_locus: 20,
        seed: 5,
        ..ExperimentConfig::table2()
    };
    let report = run_table2(&cfg).unwrap();
    let mut pass = true;
    let mut detail = String::new();
    for row in &report.rows {
        pass &= row.any_success == 20;
        match row.locus {
            Locus::Interior => pass &= row.original_success == Some(0),
            Locus::Horn | Locus::Hildebrand => {
                pass &= row.original_success.is_some_and(|v| v >= 2)
            }
            _ => {}
        }
        detail.push_str(&format!(
            "{:?} {}/{} orig {:?}; ",
            row.locus, row.any_success, row.trials, row.original_success
        ));
    }
    c.finish(pass, detail.trim_end_matches("; "));
}

#[test]
fn criterion_06_classification_sweep() {
    let c = Criterion::new("6 classification (table 1 scale)", 600.0);
    let cfg = ExperimentConfig {
        samples: 1000,
        seed: 6,
        ..ExperimentConfig::table1()
    };
    let report = run_table1(&cfg).unwrap();
    let pass = report.counts.rank5 >= 990
        && report.counts.not_cp + report.counts.rank6 <= 10
        && report.counts.total == 1000;
    c.finish(
        pass,
        &format!(
            "rank5 {} / not_cp {} / rank6 {} of {}",
            report.counts.rank5, report.counts.not_cp, report.counts.rank6, report.counts.total
        ),
    );
}

#[test]
fn criterion_07_approximation_sweep() {
    let c = Criterion::new("7 approximation (table 3 scale)", 600.0);
    let cfg = ExperimentConfig {
        per_locus: 20,
        seed: 7,
        ..ExperimentConfig::table3()
    };
    let report = run_table3(&cfg).unwrap();
    let mut pass = true;
    let mut detail = String::new();
    for row in &report.rows {
        if (row.distance - 1e-5).abs() < 1e-12 {
            pass &= row.any_success >= 12;
        }
        if (row.distance - 1e-1).abs() < 1e-12 {
            pass &= row.any_success >= 8;
        }
        pass &= row.residual_in_band >= 14;
        detail.push_str(&format!(
            "t={:.0e}: any {} band {}; ",
            row.distance, row.any_success, row.residual_in_band
        ));
    }
    c.finish(pass, detail.trim_end_matches("; "));
}

#[test]
fn criterion_08_rank14_circulant() {
    let c = Criterion::new("8 7x7 cp-rank-14 example", 300.0);
    let a = reference::circulant7_matrix();
    let b = reference::circulant7_factor();
    let exact_residual = a.frob_dist(&b.gram()).unwrap();
    let exact_ok = exact_residual <= 1e-10 * a.frob_norm();

    let opts = SolveOptions {
        restarts: 20,
        seed: 8,
        ..SolveOptions::default()
    };
    let report = factorize(&a, 14, &opts).unwrap();
    let solver_ok = report.residual <= 1e-6;
    c.finish(
        exact_ok && solver_ok,
        &format!(
            "exact residual {exact_residual:.2e}, best solver residual {:.2e} (restart {})",
            report.residual, report.restart_index
        ),
    );
}

#[test]
fn criterion_09_interior_boundary_pattern() {
    let c = Criterion::new("9 interior-boundary recovery", 30.0);
    let b = reference::interior_boundary_factor();
    let a = b.gram();
    let opts = SolveOptions {
        seed: 9,
        ..SolveOptions::default()
    };
    let report = factorize_patterned(&a, 5, b.support(), &opts).unwrap();
    let dist = match_columns(&report.b, &b).unwrap();
    c.finish(
        report.residual < 1e-8 && dist < 1e-3,
        &format!(
            "residual {:.2e}, factor distance {dist:.2e}, zeros {}",
            report.residual,
            report.b.zero_count()
        ),
    );
}

#[test]
fn criterion_10_normal_directions() {
    let c = Criterion::new("10 normal directions", 600.0);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let opts = SolveOptions {
        seed: 10,
        ..SolveOptions::default()
    };
    let mut pass = true;
    let mut not_cp = 0;
    let mut worst_overlap = 0.0f64;
    for trial in 0..20 {
        let chart =
            BoundaryChart::hildebrand_from_params(&HildebrandParams::sample(&mut rng)).unwrap();
        let nd = normal_direction(&chart, &opts.with_seed(10 + 31 * trial as u64)).unwrap();
        worst_overlap = worst_overlap.max(nd.max_tangent_overlap);
        pass &= nd.max_tangent_overlap <= 1e-9;
        pass &= (nd.normal.frob_norm() - 1.0).abs() <= 1e-12;
        let probe = nd.point.add_scaled(1e-2, &nd.normal).unwrap();
        if classify(&probe, &opts.with_seed(100 + trial as u64))
            .unwrap()
            .verdict
            == Verdict::NotCp
        {
            not_cp += 1;
        }
    }
    pass &= not_cp >= 14;
    c.finish(
        pass,
        &format!("worst tangent overlap {worst_overlap:.2e}, NOT_CP {not_cp}/20"),
    );
}
