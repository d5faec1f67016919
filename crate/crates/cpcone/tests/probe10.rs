use cpcone::experiments::reference;
use cpcone::solver::{factorize_all, SolveOptions};

#[test]
fn probe() {
    let a = reference::circulant7_matrix();
    for (maxit, restarts) in [(500usize, 8usize), (2000, 8)] {
        let opts = SolveOptions { restarts, seed: 8, max_iter: maxit, ..SolveOptions::default() };
        let reports = factorize_all(&a, 14, &opts).unwrap();
        for rep in &reports {
            println!("maxit {maxit} restart {}: res={:9.3e} iters={} grad={:9.2e} zeros={}",
                rep.restart_index, rep.residual, rep.iterations, rep.grad_norm, rep.b.zero_count());
        }
    }
}
