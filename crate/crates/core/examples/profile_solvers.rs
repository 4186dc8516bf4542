use std::time::Instant;
use semra_core::optimizer::{brute_force, dual_ascent, primal_dual_kkt};
use semra_core::testgen::mixed_instance;

fn main() {
    let t_all = Instant::now();
    let (mut fail, mut nonconv) = (0, 0);
    for seed in 0..200u64 {
        let inst = mixed_instance(seed);
        let b = brute_force(&inst).unwrap();
        let d = dual_ascent(&inst).unwrap();
        let k = primal_dual_kkt(&inst).unwrap();
        if !d.converged || !k.converged { nonconv += 1; }
        let tol = b.objective * 1.05 + 1e-9;
        if d.objective > tol || k.objective > tol { fail += 1; eprintln!("seed {seed}: d={:.4} k={:.4} b={:.4}", d.objective, k.objective, b.objective); }
    }
    eprintln!("200 instances in {:?}; fails {fail}, nonconverged {nonconv}", t_all.elapsed());
}
