//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILING` are reported as FAIL without failing the
//! process; any other FAIL, or an unexpected PASS of a known-failing
//! criterion, makes the target exit non-zero.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tree_majority::analysis::{
    find_fixed_points, iterate_dynamics, predict_limit, solve_threshold, DEFAULT_TOL,
};
use tree_majority::gmap::{df_dp, g_prime_at_half, slope_at_half_when_certain};
use tree_majority::sim::{estimate_g_one_step, simulate_tree, SimConfig};
use tree_majority::{policy_value, Error, ModelParams, UpdateMap};

type Outcome = Result<String, String>;

/// Criteria that cannot hold as stated; see README.
const KNOWN_FAILING: &[&str] = &["6c"];

struct Criterion {
    id: &'static str,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sym(m: usize, p: f64) -> ModelParams {
    ModelParams::symmetric(m, p).unwrap()
}

fn threshold_m3() -> Outcome {
    let r = solve_threshold(3, 1e-12).map_err(|e| e.to_string())?;
    let exact = (2.0 + 2f64.cbrt() - 4f64.cbrt()) / 3.0;
    let err = (r.p_threshold - exact).abs();
    ensure(err <= 1e-6, || format!("p(3) = {} vs {exact}", r.p_threshold))?;
    Ok(format!("p(3) = {:.10}, |err| = {err:.1e}", r.p_threshold))
}

fn threshold_m4() -> Outcome {
    let r = solve_threshold(4, 1e-12).map_err(|e| e.to_string())?;
    let err = (r.p_threshold - 0.42842).abs();
    ensure(err <= 1e-4, || format!("p(4) = {}", r.p_threshold))?;
    Ok(format!("p(4) = {:.10}, |err| = {err:.1e}", r.p_threshold))
}

fn bifurcation_m3() -> Outcome {
    let tangent_pr = 3f64.sqrt() - 1.0;
    let mut counts = Vec::new();
    for (p_r, want) in [(0.70, 1), (tangent_pr, 2), (0.75, 3)] {
        let set = find_fixed_points(&ModelParams::new(3, 1.0, p_r).unwrap(), DEFAULT_TOL)
            .map_err(|e| e.to_string())?;
        ensure(set.len() == want, || {
            format!("p_R = {p_r}: {} points, want {want}", set.len())
        })?;
        counts.push(set.len());
        if want == 2 {
            let alpha = 2.0 / 3.0 - 1.0 / 3f64.sqrt();
            let t = set
                .points
                .iter()
                .find(|p| p.tangent)
                .ok_or("no tangent point at p_R = sqrt(3) - 1")?;
            ensure((t.value - alpha).abs() <= 1e-8, || {
                format!("tangent point {} vs {alpha}", t.value)
            })?;
            ensure(set.points.iter().any(|p| p.value == 1.0), || "1 missing".into())?;
        }
    }
    Ok(format!("counts {counts:?}"))
}

fn count_law() -> Outcome {
    let mut checked = 0;
    let mut worst = 0.0f64;
    for m in 3..=8 {
        let pm = solve_threshold(m, 1e-12).map_err(|e| e.to_string())?.p_threshold;
        for i in 0..=100 {
            let p = i as f64 / 100.0;
            let set = find_fixed_points(&sym(m, p), DEFAULT_TOL).map_err(|e| e.to_string())?;
            let want = if p <= pm { 1 } else { 3 };
            ensure(set.len() == want, || {
                format!(
                    "m = {m}, p = {p}: {} points, want {want} (p(m) = {pm})",
                    set.len()
                )
            })?;
            let v = set.values();
            let dev = if want == 1 {
                (v[0] - 0.5).abs()
            } else {
                (v[1] - 0.5).abs().max((v[0] + v[2] - 1.0).abs())
            };
            ensure(dev <= 1e-8, || {
                format!("m = {m}, p = {p}: points {v:?} not symmetric")
            })?;
            worst = worst.max(dev);
            checked += 1;
        }
    }
    Ok(format!("{checked} cases, max symmetry deviation {worst:.1e}"))
}

fn convexity() -> Outcome {
    let mut worst = 0.0f64;
    for m in 2..=8 {
        for i in 1..=10 {
            let p = i as f64 / 10.0;
            let map = UpdateMap::new(sym(m, p));
            for j in 0..1000 {
                let x = j as f64 / 999.0;
                let g2 = map.double_prime(x).map_err(|e| e.to_string())?;
                let violation = if x <= 0.5 { -g2 } else { g2 };
                ensure(violation <= 1e-10, || {
                    format!("m = {m}, p = {p}, x = {x}: g'' = {g2}")
                })?;
                worst = worst.max(violation);
            }
        }
    }
    Ok(format!("70 maps x 1000 points, worst sign violation {worst:.1e}"))
}

fn derivatives_fd() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let h = 1e-6;
    let (mut d1, mut d2) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let m = rng.random_range(2..=12);
        let params = ModelParams::new(m, rng.random(), rng.random()).unwrap();
        let map = UpdateMap::new(params);
        let x = rng.random_range(h..1.0 - h);
        let e = |r: tree_majority::Result<f64>| r.map_err(|e| e.to_string());
        let fd1 = (e(map.eval(x + h))? - e(map.eval(x - h))?) / (2.0 * h);
        let fd2 = (e(map.prime(x + h))? - e(map.prime(x - h))?) / (2.0 * h);
        d1 = d1.max((e(map.prime(x))? - fd1).abs());
        d2 = d2.max((e(map.double_prime(x))? - fd2).abs());
    }
    ensure(d1 <= 1e-5 && d2 <= 1e-5, || {
        format!("max dev g' {d1:.1e}, g'' {d2:.1e}")
    })?;
    Ok(format!("200 cases, max dev g' {d1:.1e}, g'' {d2:.1e}"))
}

fn df_dp_fd() -> Outcome {
    let h = 1e-6;
    let mut worst = 0.0f64;
    let mut least_negative = f64::NEG_INFINITY;
    let mut cases = 0;
    for m in 2..=12 {
        for l in 0..=(m - 1) / 2 {
            for i in 1..100 {
                let p = i as f64 / 100.0;
                let d = df_dp(m, l, p).map_err(|e| e.to_string())?;
                let up = policy_value(&sym(m, p + h), l).map_err(|e| e.to_string())?;
                let down = policy_value(&sym(m, p - h), l).map_err(|e| e.to_string())?;
                let fd = (up - down) / (2.0 * h);
                ensure((d - fd).abs() <= 1e-6, || {
                    format!("m = {m}, l = {l}, p = {p}: {d} vs {fd}")
                })?;
                ensure(d < 0.0, || format!("m = {m}, l = {l}, p = {p}: df/dp = {d}"))?;
                worst = worst.max((d - fd).abs());
                least_negative = least_negative.max(d);
                cases += 1;
            }
        }
    }
    Ok(format!(
        "{cases} cases, max dev {worst:.1e}, max df/dp {least_negative:.3e}"
    ))
}

fn slope_at_half_certain() -> Outcome {
    // The stated closed form m / 2^(m-2) * C(m-1, floor((m-1)/2)) and its
    // values 2 and 3 for m = 2, 3.
    let stated = |m: usize| {
        let top = (m - 1) / 2;
        let c = (0..top).fold(1.0, |acc, i| acc * (m - 1 - i) as f64 / (i + 1) as f64);
        m as f64 / 2f64.powi(m as i32 - 2) * c
    };
    let mut lines = Vec::new();
    let mut ok = true;
    for (m, quoted) in [(2, 2.0), (3, 3.0)] {
        let g = g_prime_at_half(&sym(m, 1.0)).map_err(|e| e.to_string())?;
        let hit = (g - stated(m)).abs() <= 1e-12 && (g - quoted).abs() <= 1e-12;
        ok &= hit;
        lines.push(format!(
            "m = {m}: g'(1/2) = {g}, stated {}, quoted {quoted}",
            stated(m)
        ));
    }
    let mut true_form = 0.0f64;
    for m in 2..=20 {
        let g = g_prime_at_half(&sym(m, 1.0)).map_err(|e| e.to_string())?;
        true_form = true_form.max((g - slope_at_half_when_certain(m)).abs());
    }
    lines.push(format!(
        "m / 2^(m-1) * C(...) matches for m = 2..=20 within {true_form:.1e}"
    ));
    let detail = lines.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Policy by enumerating which children succeed.
fn enumerate_policy(m: usize, k: usize, p_b: f64, p_r: f64) -> f64 {
    (0u32..1 << m)
        .map(|mask| {
            let (mut weight, mut b, mut r) = (1.0, 0, 0);
            for child in 0..m {
                let success = mask >> child & 1 == 1;
                let p = if child < k { p_b } else { p_r };
                weight *= if success { p } else { 1.0 - p };
                if success {
                    if child < k {
                        b += 1
                    } else {
                        r += 1
                    }
                }
            }
            weight
                * match b.cmp(&r) {
                    std::cmp::Ordering::Greater => 1.0,
                    std::cmp::Ordering::Equal => 0.5,
                    std::cmp::Ordering::Less => 0.0,
                }
        })
        .sum()
}

fn enumeration_oracle() -> Outcome {
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut worst = 0.0f64;
    for m in 2..=6 {
        for &p_b in &grid {
            for &p_r in &grid {
                let params = ModelParams::new(m, p_b, p_r).unwrap();
                for k in 0..=m {
                    let v = policy_value(&params, k).map_err(|e| e.to_string())?;
                    worst = worst.max((v - enumerate_policy(m, k, p_b, p_r)).abs());
                }
            }
        }
    }
    ensure(worst <= 1e-12, || format!("max error {worst:.1e}"))?;
    Ok(format!("m = 2..=6, 25 grid points, max error {worst:.1e}"))
}

fn one_step_mc() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(83);
    let n = 1_000_000u64;
    let mut worst = 0.0f64;
    for case in 0..20 {
        let m = rng.random_range(2..=8);
        let params = ModelParams::new(m, rng.random(), rng.random()).unwrap();
        let x: f64 = rng.random();
        let g = UpdateMap::new(params).eval(x).map_err(|e| e.to_string())?;
        let est = estimate_g_one_step(&params, x, n, 1000 + case).map_err(|e| e.to_string())?;
        let se = (g * (1.0 - g) / n as f64).sqrt();
        let z = if se > 0.0 {
            (est.estimate - g).abs() / se
        } else {
            0.0
        };
        ensure((est.estimate - g).abs() <= 4.0 * se, || {
            format!("{params:?}, x = {x}: {} vs {g} ({z:.2} se)", est.estimate)
        })?;
        worst = worst.max(z);
    }
    Ok(format!("20 cases at N = 1e6, max |z| = {worst:.2}"))
}

fn analytic_marginals(params: &ModelParams, pi_0: f64, horizon: usize) -> Vec<f64> {
    let map = UpdateMap::new(*params);
    let mut out = vec![pi_0];
    for _ in 0..horizon {
        out.push(map.eval(*out.last().unwrap()).unwrap());
    }
    out
}

/// Two-sided normal quantile at level 0.05 / 36: a simultaneous 95% band over
/// the 36 root marginals (4 runs x 9 times).
const Z_SIMULTANEOUS: f64 = 3.196_950_229_131_253;

fn tree_marginals() -> Outcome {
    let reps = 2000u64;
    let settings = [
        (ModelParams::new(3, 1.0, 0.2).unwrap(), 0.9, 7),
        (sym(3, 0.8), 0.3, 8),
        (sym(3, 0.4), 0.9, 9),
        (sym(2, 1.0), 0.5, 10),
    ];
    let mut misses = Vec::new();
    let mut pointwise_misses = 0;
    for (params, pi_0, seed) in settings {
        let cfg = SimConfig {
            params,
            depth: 8,
            horizon: 8,
            pi_0,
            seed,
            replications: reps,
        };
        let res = simulate_tree(&cfg).map_err(|e| e.to_string())?;
        let exact = analytic_marginals(&params, pi_0, 8);
        for (t, (&hat, &pi)) in res.pi_hat.iter().zip(&exact).enumerate() {
            let se = (pi * (1.0 - pi) / reps as f64).sqrt();
            pointwise_misses += ((hat - pi).abs() > 1.96 * se) as usize;
            if (hat - pi).abs() > Z_SIMULTANEOUS * se {
                misses.push(format!(
                    "m = {}, pi_0 = {pi_0}, t = {t}: {hat} vs {pi:.4}",
                    params.m()
                ));
            }
        }
    }
    let detail = format!(
        "36 marginals, {} outside the simultaneous 95% band, {pointwise_misses} outside pointwise 95% bands",
        misses.len()
    );
    if misses.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", misses.join("; ")))
    }
}

fn limit_agreement() -> Outcome {
    let iterate = |params: &ModelParams, pi_0: f64| -> Result<f64, String> {
        let t = iterate_dynamics(params, pi_0, 1_000_000, 1e-13).map_err(|e| e.to_string())?;
        ensure(t.converged, || {
            format!("{params:?}, pi_0 = {pi_0}: no convergence")
        })?;
        Ok(t.limit.unwrap_or(t.last()))
    };
    let compare = |params: &ModelParams, pi_0: f64| -> Result<f64, String> {
        let predicted = predict_limit(params, pi_0).map_err(|e| e.to_string())?;
        let iterated = iterate(params, pi_0)?;
        let dev = (predicted - iterated).abs();
        ensure(dev <= 1e-6, || {
            format!("{params:?}, pi_0 = {pi_0}: predicted {predicted}, iterated {iterated}")
        })?;
        Ok(dev)
    };

    let mut worst = 0.0f64;
    let mut branch = 0;
    // Equal technology: below and above the threshold, start below, at and above 1/2.
    for m in [3, 4, 5, 7] {
        let pm = solve_threshold(m, 1e-12).map_err(|e| e.to_string())?.p_threshold;
        for p in [pm / 2.0, (pm + 1.0) / 2.0, 1.0] {
            for pi_0 in [0.0, 0.2, 0.5, 0.8, 1.0] {
                worst = worst.max(compare(&sym(m, p), pi_0)?);
                branch += 1;
            }
        }
    }
    // p_B = 1, m = 3: one fixed point below the tangency, three above it.
    for p_r in [0.5, 0.8, 0.9, 1.0] {
        let params = ModelParams::new(3, 1.0, p_r).unwrap();
        let set = find_fixed_points(&params, DEFAULT_TOL).map_err(|e| e.to_string())?;
        let mut starts = vec![0.0, 0.3, 0.95];
        if set.len() == 3 {
            let mid = set.points[1].value;
            starts.extend([mid - 1e-3, mid, mid + 1e-3]);
        }
        for pi_0 in starts {
            worst = worst.max(compare(&params, pi_0)?);
            branch += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut random = 0;
    let mut skipped = 0;
    while random < 200 {
        let m = rng.random_range(2..=8);
        let params = if rng.random_bool(0.5) {
            let p: f64 = rng.random();
            let pm = solve_threshold(m, 1e-12).map_err(|e| e.to_string())?.p_threshold;
            if (p - pm).abs() < 0.02 {
                skipped += 1;
                continue;
            }
            sym(m, p)
        } else {
            ModelParams::new(m, rng.random(), rng.random()).unwrap()
        };
        let pi_0: f64 = rng.random();
        match predict_limit(&params, pi_0) {
            Err(Error::UnsupportedRegime(_)) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e.to_string()),
            Ok(_) => {}
        }
        worst = worst.max(compare(&params, pi_0)?);
        random += 1;
    }
    Ok(format!(
        "{branch} branch cases + {random} random ({skipped} draws skipped), max dev {worst:.1e}"
    ))
}

fn determinism() -> Outcome {
    let run = || -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_tree-majority"))
            .args([
                "simulate",
                "--m",
                "3",
                "--depth",
                "8",
                "--horizon",
                "8",
                "--pi0",
                "0.9",
                "--p-b",
                "1",
                "--p-r",
                "0.2",
                "--reps",
                "2000",
                "--seed",
                "7",
            ])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || {
            String::from_utf8_lossy(&out.stderr).into_owned()
        })?;
        Ok(out.stdout)
    };
    let (a, b) = (run()?, run()?);
    ensure(a == b, || "outputs differ".into())?;
    Ok(format!("two runs, {} identical bytes", a.len()))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: "1",
            name: "threshold m=3",
            limit: Duration::from_secs(1),
            run: threshold_m3,
        },
        Criterion {
            id: "2",
            name: "threshold m=4",
            limit: Duration::from_secs(1),
            run: threshold_m4,
        },
        Criterion {
            id: "3",
            name: "m=3 p_B=1 bifurcation",
            limit: Duration::from_secs(1),
            run: bifurcation_m3,
        },
        Criterion {
            id: "4",
            name: "count law sweep",
            limit: Duration::from_secs(30),
            run: count_law,
        },
        Criterion {
            id: "5",
            name: "convexity split",
            limit: Duration::from_secs(10),
            run: convexity,
        },
        Criterion {
            id: "6a",
            name: "g' and g'' vs finite differences",
            limit: Duration::from_secs(10),
            run: derivatives_fd,
        },
        Criterion {
            id: "6b",
            name: "df_dp vs finite differences, sign",
            limit: Duration::from_secs(10),
            run: df_dp_fd,
        },
        Criterion {
            id: "6c",
            name: "g'(1/2) at p=1 closed form",
            limit: Duration::from_secs(10),
            run: slope_at_half_certain,
        },
        Criterion {
            id: "7",
            name: "enumeration oracle",
            limit: Duration::from_secs(5),
            run: enumeration_oracle,
        },
        Criterion {
            id: "8",
            name: "Monte Carlo one step",
            limit: Duration::from_secs(60),
            run: one_step_mc,
        },
        Criterion {
            id: "9",
            name: "tree marginals",
            limit: Duration::from_secs(120),
            run: tree_marginals,
        },
        Criterion {
            id: "10",
            name: "limit prediction",
            limit: Duration::from_secs(30),
            run: limit_agreement,
        },
        Criterion {
            id: "11",
            name: "simulate determinism",
            limit: Duration::from_secs(60),
            run: determinism,
        },
    ];

    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut unexpected = 0;
    for c in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| c.id == f || c.name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(d) if elapsed > c.limit => Err(format!("{d}; took {elapsed:.2?}, limit {:?}", c.limit)),
            other => other,
        };
        let known = KNOWN_FAILING.contains(&c.id);
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        let note = match (outcome.is_ok(), known) {
            (false, true) => " [known failing]",
            (true, true) => " [expected to fail]",
            _ => "",
        };
        println!(
            "criterion {:>3} {tag} {} ({elapsed:.2?}): {detail}{note}",
            c.id, c.name
        );
        if outcome.is_ok() == known {
            unexpected += 1;
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} criteria with an unexpected result");
        ExitCode::FAILURE
    }
}
