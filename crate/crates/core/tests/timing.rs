//! Wall-clock scaling checks with loose bounds. The tests hold a shared lock
//! so they never time each other.

use std::sync::{Mutex, MutexGuard};
use std::time::Instant;

use stsr_core::flow::{estimate_flow, FlowParams};
use stsr_core::pipeline::{bench_flow, synthetic_bench_pair};

static CLOCK: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    CLOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn median_secs(mut f: impl FnMut(), runs: usize) -> f64 {
    let mut t: Vec<f64> = (0..runs)
        .map(|_| {
            let s = Instant::now();
            f();
            s.elapsed().as_secs_f64()
        })
        .collect();
    t.sort_by(f64::total_cmp);
    t[runs / 2]
}

#[test]
fn equal_sizes_give_a_ratio_near_one() {
    let _guard = serial();
    let ((a, b), _) = synthetic_bench_pair(96, 96, 1, 4).unwrap();
    let r = bench_flow((&a, &b), (&a, &b), &FlowParams::default(), 7).unwrap();
    assert!(r.factor == 1 && r.ratio > 0.5 && r.ratio < 2.0, "{r:?}");
}

#[test]
fn doubling_iterations_roughly_doubles_time() {
    let _guard = serial();
    let ((a, b), _) = synthetic_bench_pair(128, 128, 1, 5).unwrap();
    let p = FlowParams::default();
    let p2 = FlowParams { iterations_per_level: 2 * p.iterations_per_level, ..p };
    let t1 = median_secs(|| drop(estimate_flow(&a, &b, &p).unwrap()), 5);
    let t2 = median_secs(|| drop(estimate_flow(&a, &b, &p2).unwrap()), 5);
    let ratio = t2 / t1;
    assert!(ratio > 1.3 && ratio < 3.0, "{ratio}");
}
