use qubo_benders::qubo::random::random_qubo;
use qubo_benders::qubo::QuboProgram;
use qubo_benders::sampler::{sample_exact, sample_sa, AnnealSchedule};

/// Ground energy by plain enumeration with a from-scratch evaluator.
fn brute_ground(q: &QuboProgram) -> f64 {
    let n = q.dimension;
    (0..1u32 << n)
        .map(|m| {
            let bits: Vec<u8> = (0..n).map(|i| ((m >> i) & 1) as u8).collect();
            let mut e = q.offset;
            for (&(i, j), &v) in &q.entries {
                e += v * (bits[i] & bits[j]) as f64;
            }
            e
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn exact_sampler_matches_brute_force_on_10_bits() {
    for seed in 0..20 {
        let q = random_qubo(seed, 10);
        let set = sample_exact(&q, 24, 16).unwrap();
        assert_eq!(set.samples.len(), 16);
        assert!((set.samples[0].energy - brute_ground(&q)).abs() < 1e-12);
        for w in set.samples.windows(2) {
            assert!(w[0].energy <= w[1].energy);
        }
    }
}

#[test]
fn annealer_finds_ground_states_of_12_bit_qubos() {
    let sched = AnnealSchedule::default();
    let mut hits = 0;
    for seed in 0..100 {
        let q = random_qubo(1000 + seed, 12);
        let ground = sample_exact(&q, 24, 1).unwrap().samples[0].energy;
        let set = sample_sa(&q, &AnnealSchedule { seed, ..sched }).unwrap();
        let best = set.best().unwrap().energy;
        assert!(best >= ground - 1e-12, "annealer below ground energy");
        if best <= ground + 1e-12 {
            hits += 1;
        }
        assert_eq!(set.samples.len(), sched.reads);
        assert!(set.samples.iter().all(|s| s.energy == q.energy(&s.bits)));
    }
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn more_sweeps_never_hurt_the_median() {
    let median = |sweeps: usize| {
        let mut v: Vec<f64> = (0..50)
            .map(|seed| {
                let q = random_qubo(500 + seed, 16);
                let s = AnnealSchedule { reads: 4, sweeps, seed, ..Default::default() };
                sample_sa(&q, &s).unwrap().best().unwrap().energy
            })
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        (v[24] + v[25]) / 2.0
    };
    assert!(median(40) <= median(20) + 1e-12);
}

#[test]
fn annealing_is_reproducible() {
    let q = random_qubo(3, 20);
    let s = AnnealSchedule { reads: 8, sweeps: 100, seed: 9, ..Default::default() };
    let a = serde_json::to_string(&sample_sa(&q, &s).unwrap()).unwrap();
    let b = serde_json::to_string(&sample_sa(&q, &s).unwrap()).unwrap();
    assert_eq!(a, b);
}
