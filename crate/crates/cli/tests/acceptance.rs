//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test --release -p stratcomm --test acceptance`.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stratcomm_core::binary::{BinaryParams, PosteriorPair};
use stratcomm_core::capacity::{capacity, DEFAULT_MAX_ITER};
use stratcomm_core::concavify::{
    brute_force_direct, concavify_constrained, concavify_unconstrained, lagrangian_solve, GridSpec,
};
use stratcomm_core::sim::{build_codebook, exact_posterior, simulate, CodebookConfig, Codebook};
use stratcomm_core::{Alphabet, Belief, DisclosureKernel, Dist, Error, Joint, Kernel, Scenario, UtilityTable};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn paper() -> Scenario {
    BinaryParams::paper().scenario().unwrap()
}

fn prior_of(s: &Scenario) -> Belief {
    Belief(s.prior().clone())
}

fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

fn run_cli(args: &[&str]) -> (serde_json::Value, Duration) {
    let start = Instant::now();
    let mut out = Vec::new();
    stratcomm::run(args.iter().copied(), &mut out).unwrap_or_else(|e| panic!("{args:?}: {e}"));
    (serde_json::from_slice(&out).unwrap(), start.elapsed())
}

// Binary example, by hand: the decoder switches to v2 once its belief on u2
// reaches 0.6, the encoder is paid 1 for v2.
const P0: f64 = 0.5;
const D1: f64 = 0.7;
const D2: f64 = 0.9;
const THRESHOLD: f64 = 0.6;

/// Beliefs on u2 after z1 and after z2, from belief `q` on u2.
fn by_hand_posteriors(q: f64) -> (f64, f64) {
    let z1 = (1.0 - q) * (1.0 - D1) + q * D2;
    let z2 = (1.0 - q) * D1 + q * (1.0 - D2);
    (q * D2 / z1, q * (1.0 - D2) / z2)
}

/// Chord of the encoder's utility across its two jumps, evaluated at the prior.
fn chord_value() -> f64 {
    // q where the z1 posterior hits the threshold, and the same for z2
    let solve = |a: f64, b: f64| THRESHOLD * a / (b * (1.0 - THRESHOLD) + THRESHOLD * a);
    let nu1 = solve(1.0 - D1, D2);
    let nu2 = solve(D1, 1.0 - D2);
    let (p1, _) = by_hand_posteriors(nu1);
    assert!((p1 - THRESHOLD).abs() < 1e-12);
    // just above nu1 the decoder plays v2 after z1 only; above nu2 always
    let at_nu1 = (1.0 - nu1) * (1.0 - D1) + nu1 * D2;
    let lambda = (nu2 - P0) / (nu2 - nu1);
    lambda * at_nu1 + (1.0 - lambda)
}

fn c1_unconstrained() -> Outcome {
    let (v, t) = run_cli(&["solve", "--scenario", "paper-iv", "--unconstrained"]);
    let value = v["result"]["value"].as_f64().unwrap();
    let chord = chord_value();
    let grid = v["parameters"]["grid"]["resolution"].as_u64().unwrap();
    let pass = (value - 0.64).abs() <= 0.01 && (value - chord).abs() <= 2e-3 && grid == 2000 && t < Duration::from_secs(1);
    outcome(pass, format!("value {value:.6}, chord {chord:.6}, grid {grid}, {t:.2?}"))
}

fn c2_constrained() -> Outcome {
    let (v, t) = run_cli(&["solve", "--scenario", "paper-iv", "--capacity", "0.1"]);
    let value = v["result"]["value"].as_f64().unwrap();
    let slack = v["result"]["constraint_slack"].as_f64().unwrap();
    let pass = (value - 0.63).abs() <= 0.01 && slack.abs() <= 1e-6 && t < Duration::from_secs(5);
    outcome(pass, format!("value {value:.6}, constraint slack {slack:.1e}, {t:.2?}"))
}

fn c3_three_way() -> Outcome {
    const TOL: f64 = 5e-3;
    const ORDER_TOL: f64 = 1e-6;
    let s = paper();
    let prior = prior_of(&s);
    let g = GridSpec::new(2000);
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for c in [0.0, 0.1, 0.3, 1.0] {
        let lp = concavify_constrained(&s, &prior, c, &g).unwrap().value;
        let dual = lagrangian_solve(&s, &prior, c, &g, 1e-6).unwrap().value;
        let direct = brute_force_direct(&s, c, 3, 0.01).unwrap().value;
        let close = (lp - dual).abs() <= TOL && (lp - direct).abs() <= TOL && (dual - direct).abs() <= TOL;
        let ordered = direct <= lp + ORDER_TOL && lp <= dual + ORDER_TOL;
        pass &= close && ordered;
        parts.push(format!("C={c}: lp {lp:.5} dual {dual:.5} direct {direct:.5}"));
    }
    let t = start.elapsed();
    pass &= t < Duration::from_secs(120);
    outcome(pass, format!("{}; {t:.1?}", parts.join("; ")))
}

/// Σ_z P(z) v(z) where the decoder best-replies to P(u|z), ties against the
/// encoder. Written against the raw tables.
fn zero_capacity_by_hand(s: &Scenario) -> f64 {
    let (nu, nz, nv) = (s.nu(), s.nz(), s.nv());
    let mut total = 0.0;
    for z in 0..nz {
        let joint: Vec<f64> = (0..nu).map(|u| s.source().get(&[u, z])).collect();
        let pz: f64 = joint.iter().sum();
        if pz == 0.0 {
            continue;
        }
        let ud = |v: usize| (0..nu).map(|u| joint[u] / pz * s.utility_decoder().get(u, z, v)).sum::<f64>();
        let ue = |v: usize| (0..nu).map(|u| joint[u] / pz * s.utility_encoder().get(u, z, v)).sum::<f64>();
        let best = (0..nv).map(ud).fold(f64::NEG_INFINITY, f64::max);
        let worst_tied = (0..nv).filter(|&v| ud(v) >= best - 1e-9).map(ue).fold(f64::INFINITY, f64::min);
        total += pz * worst_tied;
    }
    total
}

fn c4_zero_capacity() -> Outcome {
    let s = paper();
    let solved = concavify_constrained(&s, &prior_of(&s), 0.0, &GridSpec::default_for(2)).unwrap().value;
    let closed = s.zero_capacity_value();
    let by_hand = zero_capacity_by_hand(&s);
    let mut pass = (solved - closed).abs() <= 1e-3 && (closed - 0.6).abs() <= 1e-12 && (by_hand - closed).abs() <= 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (nu, nz, nv) = (rng.random_range(2..=3), rng.random_range(1..=3), rng.random_range(2..=3));
        let r = Scenario::random(&mut rng, nu, nz, 2, nv).unwrap();
        let solved = concavify_constrained(&r, &prior_of(&r), 0.0, &GridSpec::default_for(nu)).unwrap().value;
        let closed = r.zero_capacity_value();
        worst = worst.max((solved - closed).abs()).max((closed - zero_capacity_by_hand(&r)).abs());
    }
    pass &= worst <= 1e-3;
    outcome(pass, format!("paper-iv {solved:.6} vs {closed:.6}; 20 random, worst gap {worst:.1e}"))
}

fn c5_posterior_pairs() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut mismatches, mut worst) = (0, 0.0f64);
    for _ in 0..10_000 {
        let (q1, q2, p0): (f64, f64, f64) = (rng.random(), rng.random(), rng.random_range(0.001..0.999));
        if q1 == q2 {
            continue;
        }
        let bp = BinaryParams::new(p0, D1, D2).unwrap();
        let between = q1.min(q2) <= p0 && p0 <= q1.max(q2);
        match bp.kernel_from_posteriors(PosteriorPair { q1, q2 }) {
            Ok((alpha, beta)) => {
                let in_unit = (0.0..=1.0).contains(&alpha) && (0.0..=1.0).contains(&beta);
                if !between || !in_unit {
                    mismatches += 1;
                    continue;
                }
                // Bayes forward by hand: Q(w2|u1) = α, Q(w1|u2) = β
                let w1 = (1.0 - p0) * (1.0 - alpha) + p0 * beta;
                let w2 = (1.0 - p0) * alpha + p0 * (1.0 - beta);
                worst = worst.max((p0 * beta / w1 - q1).abs()).max((p0 * (1.0 - beta) / w2 - q2).abs());
                let back = bp.posteriors_from_kernel(alpha, beta).unwrap();
                worst = worst.max((back.q1 - q1).abs()).max((back.q2 - q2).abs());
            }
            Err(Error::OutOfRange { .. }) if !between => {}
            Err(_) => mismatches += 1,
        }
    }
    outcome(mismatches == 0 && worst <= 1e-12, format!("{mismatches} mismatches, worst round trip {worst:.1e}"))
}

fn c6_entropy_concavity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let ternary = Scenario::random(&mut rng, 3, 3, 2, 2).unwrap();
    let binary = paper();
    let mut worst = f64::NEG_INFINITY;
    for s in [&binary, &ternary] {
        let nu = s.nu();
        for _ in 0..10_000 {
            let mut draw = || {
                let w: Vec<f64> = (0..nu).map(|_| rng.random::<f64>()).collect();
                let t: f64 = w.iter().sum();
                w.into_iter().map(|x| x / t).collect::<Vec<f64>>()
            };
            let (p, q) = (draw(), draw());
            let lam: f64 = rng.random();
            let mix: Vec<f64> = p.iter().zip(&q).map(|(a, b)| lam * a + (1.0 - lam) * b).collect();
            let gap = lam * s.average_entropy(&p) + (1.0 - lam) * s.average_entropy(&q) - s.average_entropy(&mix);
            worst = worst.max(gap);
        }
    }
    outcome(worst <= 1e-10, format!("largest chord excess {worst:.1e} over 2 x 10^4 pairs"))
}

fn c7_region_nesting() -> Outcome {
    let region = BinaryParams::paper().feasibility_region(0.1, 400).unwrap();
    let (with, without, bad) = (region.count_with(), region.count_without(), region.nesting_violations());
    outcome(
        bad == 0 && with > without && region.cells.len() == 160_000,
        format!("{with} cells with z, {without} without, {bad} counterexamples"),
    )
}

fn c8_capacity() -> Outcome {
    let bsc = capacity(&Kernel::binary_symmetric(0.1).unwrap(), 1e-12, DEFAULT_MAX_ITER).capacity;
    let identity = capacity(&Kernel::identity(2), 1e-12, DEFAULT_MAX_ITER).capacity;
    let constant = capacity(&Kernel::constant(2, &Dist::new(vec![0.3, 0.7]).unwrap()), 1e-12, DEFAULT_MAX_ITER).capacity;
    let oracle = 1.0 - h2(0.1);
    let pass = (bsc - 0.531004).abs() <= 1e-6 && (bsc - oracle).abs() <= 1e-9 && identity == 1.0 && constant == 0.0;
    outcome(pass, format!("BSC(0.1) {bsc:.9}, identity {identity}, constant {constant}"))
}

/// Uniform binary source seen through BSC(0.25) as state, BSC(0.2) channel,
/// both players scored by minus the Hamming distance.
fn hamming_scenario() -> Scenario {
    let flip = 0.25;
    let source = Joint::new(vec![2, 2], vec![0.5 * (1.0 - flip), 0.5 * flip, 0.5 * flip, 0.5 * (1.0 - flip)]).unwrap();
    let minus_hamming = UtilityTable::state_independent(&[vec![0.0, -1.0], vec![-1.0, 0.0]], 2).unwrap();
    Scenario::new(
        [
            Alphabet::numbered("U", "u", 2).unwrap(),
            Alphabet::numbered("Z", "z", 2).unwrap(),
            Alphabet::numbered("X", "x", 2).unwrap(),
            Alphabet::numbered("Y", "y", 2).unwrap(),
            Alphabet::numbered("V", "v", 2).unwrap(),
        ],
        source,
        Kernel::binary_symmetric(0.2).unwrap(),
        minus_hamming.clone(),
        minus_hamming,
    )
    .unwrap()
}

/// Smallest expected Hamming distortion over kernels `Q(w|u)` with three
/// outputs and entries on a 1/100 grid, subject to `I(U;W|Z) ≤ rate`.
fn wyner_ziv_distortion_by_hand(joint: [[f64; 2]; 2], rate: f64) -> f64 {
    const STEPS: usize = 100;
    let rows: Vec<[f64; 3]> = (0..=STEPS)
        .flat_map(|a| (0..=STEPS - a).map(move |b| [a, b, STEPS - a - b]))
        .map(|r| r.map(|k| k as f64 / STEPS as f64))
        .collect();
    let plogp = |p: f64| if p > 0.0 { p * p.log2() } else { 0.0 };
    let (pz0, pz1) = (joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]);
    // H(U|Z)
    let h_u_z = -(plogp(joint[0][0]) + plogp(joint[1][0]) + plogp(joint[0][1]) + plogp(joint[1][1])) + plogp(pz0) + plogp(pz1);
    let mut best = f64::INFINITY;
    for r0 in &rows {
        for r1 in &rows {
            let mut distortion = 0.0;
            let mut h_u_wz = 0.0;
            for z in 0..2 {
                for w in 0..3 {
                    let a = joint[0][z] * r0[w];
                    let b = joint[1][z] * r1[w];
                    distortion += a.min(b);
                    h_u_wz -= plogp(a) + plogp(b) - plogp(a + b);
                }
            }
            if h_u_z - h_u_wz <= rate + 1e-9 && distortion < best {
                best = distortion;
            }
        }
    }
    best
}

fn c9_distortion() -> Outcome {
    let s = hamming_scenario();
    let c = capacity(s.channel(), 1e-12, DEFAULT_MAX_ITER).capacity;
    let value = concavify_constrained(&s, &prior_of(&s), c, &GridSpec::default_for(2)).unwrap().value;
    let joint = [[s.source().get(&[0, 0]), s.source().get(&[0, 1])], [s.source().get(&[1, 0]), s.source().get(&[1, 1])]];
    let distortion = wyner_ziv_distortion_by_hand(joint, c);
    let pass = (value + distortion).abs() <= 5e-3;
    outcome(pass, format!("capacity {c:.6}: solver {value:.6}, minus grid distortion {:.6}", -distortion))
}

fn c10_without_state() -> Outcome {
    let s = paper();
    let collapsed = s.without_side_information().unwrap();
    let without = concavify_unconstrained(&collapsed, &prior_of(&collapsed), &GridSpec::default_for(2)).unwrap().value;
    let with = concavify_unconstrained(&s, &prior_of(&s), &GridSpec::default_for(2)).unwrap().value;
    // split the prior between 0 and the threshold
    let oracle = P0 / THRESHOLD;
    let pass = (without - 0.8333).abs() <= 2e-3 && (without - oracle).abs() <= 2e-3 && without > with;
    outcome(pass, format!("without z {without:.6} (oracle {oracle:.6}), with z {with:.6}"))
}

/// Simulation settings: tolerance and slack of the typicality tests.
const SIM_DELTA: f64 = 0.5;
const SIM_ETA: f64 = 0.05;
const SIM_SEED: u64 = 0;
const SIM_TRIALS: usize = 200;

fn c11_simulation() -> Outcome {
    let start = Instant::now();
    let s = paper();
    let direct = brute_force_direct(&s, 1.0, 2, 0.01).unwrap();
    let kernel = DisclosureKernel::from_splitting(&direct.splitting, s.prior()).unwrap();
    let unconstrained = concavify_unconstrained(&s, &prior_of(&s), &GridSpec::default_for(2)).unwrap().value;
    let mut utility = Vec::new();
    let mut kl = Vec::new();
    let mut parts = Vec::new();
    for n in [8, 12, 16] {
        let (config, _) = CodebookConfig::from_rates(&s, kernel.clone(), Dist::uniform(2), 1.0, n, SIM_ETA, SIM_DELTA).unwrap();
        let r = simulate(&s, &config, SIM_TRIALS, 0.05, 0.2, SIM_SEED).unwrap();
        let k = r.kl_per_position_no_error.map_or(f64::NAN, |k| k.mean);
        parts.push(format!(
            "n={n}: utility {:.4}±{:.4} kl {k:.4} errors {:.2}",
            r.mean_utility_encoder, r.stderr_utility_encoder, r.error_rate
        ));
        utility.push(r.mean_utility_encoder);
        kl.push(k);
    }
    let a = utility.windows(2).all(|w| w[0] <= w[1]) && (utility[2] - unconstrained).abs() <= 0.08;
    let b = kl.windows(2).all(|w| w[0] >= w[1]);

    let constant = s
        .with_channel(
            Alphabet::numbered("X", "x", 2).unwrap(),
            Alphabet::numbered("Y", "y", 2).unwrap(),
            Kernel::constant(2, &Dist::point(2, 0)),
        )
        .unwrap();
    let (config, _) = CodebookConfig::from_rates(&constant, kernel, Dist::uniform(2), 0.0, 8, SIM_ETA, SIM_DELTA).unwrap();
    let r = simulate(&constant, &config, SIM_TRIALS, 0.05, 0.2, SIM_SEED).unwrap();
    let c = (r.mean_utility_encoder - 0.6).abs() <= 3.0 * r.stderr_utility_encoder;
    parts.push(format!("zero capacity {:.4}±{:.4}", r.mean_utility_encoder, r.stderr_utility_encoder));

    let t = start.elapsed();
    let pass = a && b && c && t < Duration::from_secs(300);
    outcome(pass, format!("(a) {} (b) {} (c) {}; {}; {t:.1?}", ok(a), ok(b), ok(c), parts.join("; ")))
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "fails"
    }
}

/// First `(m, l)` whose word is within L1 distance `delta` of `P(u) Q(w|u)`,
/// written out with nested loops.
fn naive_encode(u: &[usize], cb: &Codebook, prior: &[f64], q: &Kernel, delta: f64) -> usize {
    let n = u.len() as f64;
    for m in 0..cb.message_count {
        for l in 0..cb.bin_count {
            let w = cb.w_word(m, l);
            let mut l1 = 0.0;
            for a in 0..prior.len() {
                for b in 0..q.n_to() {
                    let count = u.iter().zip(w).filter(|&(&x, &y)| x == a && y == b).count() as f64;
                    l1 += (count / n - prior[a] * q.get(a, b)).abs();
                }
            }
            if l1 <= delta + 1e-12 {
                return m;
            }
        }
    }
    0
}

fn naive_posterior(y: &[usize], z: &[usize], cb: &Codebook, s: &Scenario, q: &Kernel, delta: f64) -> Vec<[f64; 2]> {
    let n = y.len();
    let mut acc = vec![[0.0; 2]; n];
    for idx in 0..1usize << n {
        let u: Vec<usize> = (0..n).map(|i| (idx >> i) & 1).collect();
        let m = naive_encode(&u, cb, s.prior().mass(), q, delta);
        let x = cb.x_word(m);
        let mut weight = 1.0;
        for i in 0..n {
            weight *= s.source().get(&[u[i], z[i]]) * s.channel().get(x[i], y[i]);
        }
        for i in 0..n {
            acc[i][u[i]] += weight;
        }
    }
    acc.into_iter()
        .map(|[a, b]| {
            let t = a + b;
            [a / t, b / t]
        })
        .collect()
}

fn c12_posterior_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let delta = 0.5;
    let mut worst = 0.0f64;
    let mut pairs = 0;
    while pairs < 50 {
        let s = Scenario::random(&mut rng, 2, 2, 2, 2).unwrap();
        let a: f64 = rng.random();
        let b: f64 = rng.random();
        let kernel = DisclosureKernel::new(vec![vec![a, 1.0 - a], vec![b, 1.0 - b]]).unwrap();
        let (mut config, _) = CodebookConfig::from_rates(&s, kernel.clone(), Dist::uniform(2), 1.0, 6, 0.05, delta).unwrap();
        // enough codewords that the encoder is not trivial
        config.rate_r = config.rate_r.max(0.5);
        let cb = build_codebook(&s, &config, rng.random()).unwrap();
        let z: Vec<usize> = (0..6).map(|_| rng.random_range(0..2)).collect();
        let y: Vec<usize> = (0..6).map(|_| rng.random_range(0..2)).collect();
        let fast = exact_posterior(&y, &z, &cb, &s, delta).unwrap();
        let slow = naive_posterior(&y, &z, &cb, &s, kernel.kernel(), delta);
        for (f, n) in fast.iter().zip(&slow) {
            worst = worst.max((f.mass()[0] - n[0]).abs()).max((f.mass()[1] - n[1]).abs());
        }
        pairs += 1;
    }
    outcome(worst <= 1e-12, format!("{pairs} pairs at n=6, largest difference {worst:.1e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("unconstrained persuasion value", c1_unconstrained),
        ("constrained value with binding constraint", c2_constrained),
        ("LP, Lagrangian and direct search agree", c3_three_way),
        ("zero-capacity closed form", c4_zero_capacity),
        ("posterior pair to kernel map", c5_posterior_pairs),
        ("average entropy is concave", c6_entropy_concavity),
        ("feasible regions are nested", c7_region_nesting),
        ("channel capacities", c8_capacity),
        ("equal utilities reduce to distortion", c9_distortion),
        ("state information lowers the encoder's value", c10_without_state),
        ("simulator trends", c11_simulation),
        ("exact posterior against naive enumeration", c12_posterior_oracle),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += !o.pass as usize;
        println!("{} criterion {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
