use std::ops::ControlFlow;
use std::time::Instant;

use fairsm::fairness::score;
use fairsm::gs::{man_oriented_gs, woman_oriented_gs};
use fairsm::instance::generate_random;
use fairsm::rotations::{all_rotations, build_poset};
use fairsm::solvers::redi;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}

fn main() {
    let n = 500;
    let mut t_gs = vec![];
    let mut t_rot = vec![];
    let mut t_poset = vec![];
    let mut t_fold = vec![];
    let mut t_redi = vec![];
    let mut counts = vec![];
    for seed in 0..20u64 {
        let inst = generate_random(n, seed);
        let t = Instant::now();
        let m0 = man_oriented_gs(&inst);
        let _mz = woman_oriented_gs(&inst);
        t_gs.push(t.elapsed().as_secs_f64() * 1e3);
        let _ = m0;

        let t = Instant::now();
        let rots = all_rotations(&inst);
        t_rot.push(t.elapsed().as_secs_f64() * 1e3);
        let k = rots.len();

        let t = Instant::now();
        let poset = build_poset(&inst, rots);
        t_poset.push(t.elapsed().as_secs_f64() * 1e3);

        let t = Instant::now();
        let mut cnt = 0u64;
        let _ = poset.for_each_stable_matching(&mut |m| {
            let sc = score(&inst, m).unwrap();
            std::hint::black_box(sc);
            cnt += 1;
            ControlFlow::Continue(())
        });
        t_fold.push(t.elapsed().as_secs_f64() * 1e3);

        let t = Instant::now();
        let out = redi(&inst);
        t_redi.push(t.elapsed().as_secs_f64() * 1e3);
        std::hint::black_box(out);
        counts.push((k, cnt));
    }
    println!("n = {n}, medians over 20 seeds (ms):");
    println!("  gs (both)    {:8.3}", median(t_gs));
    println!("  all_rotations{:8.3}", median(t_rot));
    println!("  build_poset  {:8.3}", median(t_poset));
    println!("  enum fold    {:8.3}", median(t_fold));
    println!("  redi (full)  {:8.3}", median(t_redi));
    let ks: Vec<usize> = counts.iter().map(|c| c.0).collect();
    let ms: Vec<u64> = counts.iter().map(|c| c.1).collect();
    println!("  |R| median {} |M| median {}", ks[ks.len() / 2], ms[ms.len() / 2]);
}
