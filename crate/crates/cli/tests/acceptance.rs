//! Acceptance suite: every criterion prints one PASS/FAIL line, and the
//! process fails if any criterion fails or exceeds its time budget.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use genbound::{run, ExperimentConfig};
use genbound_core::complexity::{
    empirical_rademacher, empirical_rademacher_mc, empirical_rademacher_without_abs,
    expected_rademacher, grid_restricted_class, GridFamily,
};
use genbound_core::concentration::{
    high_probability_epsilon, mcdiarmid_bound, simulate_tail, verify_tail_bound,
};
use genbound_core::deviation::{
    audit_bounded_difference, check_symmetrization_identity, verify_expectation_bound,
};
use genbound_core::entropy::{
    admissible_epsilons, covering_number_exact, covering_number_greedy, dudley_bound,
    max_empirical_norm, verify_dudley, CoverMethod, Integration,
};
use genbound_core::instances::{random_class, random_model};
use genbound_core::linear::{massart_bound, verify_linear_bound, LinearInstance, NormRegime};
use genbound_core::model::{DiscreteModel, FnClass};
use genbound_core::rng::stream;
use genbound_core::{Caps, DiscreteDistribution, EvaluatedClass, Sample};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

// ---- independent oracles -------------------------------------------------

/// Direct average over all sign vectors of `max_i (1/n) sum_k s_k a_ik`,
/// with or without the absolute value.
fn naive_rademacher(rows: &[Vec<f64>], abs: bool) -> f64 {
    let n = rows[0].len();
    let mut total = 0.0;
    for bits in 0..1u64 << n {
        let mut best = f64::NEG_INFINITY;
        for row in rows {
            let mut s = 0.0;
            for (k, v) in row.iter().enumerate() {
                s += if bits >> k & 1 == 1 { -v } else { *v };
            }
            s /= n as f64;
            best = best.max(if abs { s.abs() } else { s });
        }
        total += best;
    }
    total / (1u64 << n) as f64
}

fn rms_dist(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64).sqrt()
}

/// Smallest number of class members whose closed balls cover the class,
/// by trying every subset in order of size.
fn brute_force_cover(rows: &[Vec<f64>], eps: f64) -> usize {
    let m = rows.len();
    let mut best = m;
    for mask in 1u32..1 << m {
        let size = mask.count_ones() as usize;
        if size >= best {
            continue;
        }
        let covers = rows.iter().all(|r| {
            (0..m).any(|c| mask >> c & 1 == 1 && rms_dist(r, &rows[c]) <= eps)
        });
        if covers {
            best = size;
        }
    }
    best
}

fn sizes(seed: u64, i: u64) -> impl Rng {
    stream(seed, i)
}

// ---- criteria ------------------------------------------------------------

fn mc_consistency() -> Outcome {
    let caps = Caps::default();
    let mut inside = 0;
    for i in 0..50u64 {
        let mut rng = sizes(1_001, i);
        let m = rng.random_range(1..=6);
        let n = rng.random_range(1..=10);
        let class = random_class(10_000 + i, m, n, 1.0).map_err(|e| e.to_string())?;
        let exact = empirical_rademacher(&class, &caps).map_err(|e| e.to_string())?.value;
        let oracle = naive_rademacher(class.evals(), true);
        if (exact - oracle).abs() > 1e-12 {
            return Err(format!("exact {exact} disagrees with oracle {oracle} on class {i}"));
        }
        let mc = empirical_rademacher_mc(&class, 100_000, 20_000 + i).map_err(|e| e.to_string())?;
        if (mc.value - exact).abs() <= 4.0 * mc.std_error {
            inside += 1;
        }
    }
    if inside >= 48 {
        Ok(format!("{inside}/50 estimates within 4 standard errors"))
    } else {
        Err(format!("only {inside}/50 estimates within 4 standard errors"))
    }
}

fn symmetrization_identity() -> Outcome {
    let caps = Caps::default();
    let mut worst: f64 = 0.0;
    for i in 0..500u64 {
        let mut rng = sizes(2_002, i);
        let s = rng.random_range(1..=3);
        let n = rng.random_range(1..=3);
        let m = rng.random_range(1..=4);
        let model = random_model(30_000 + i, m, s, 1.0).map_err(|e| e.to_string())?;
        let r = check_symmetrization_identity(&model, n, &caps).map_err(|e| e.to_string())?;
        worst = worst.max(r.abs_diff);
        if r.abs_diff > 1e-10 {
            return Err(format!("instance {i}: |lhs - rhs| = {}", r.abs_diff));
        }
    }
    Ok(format!("500 instances, largest |lhs - rhs| = {worst:.3e}"))
}

fn expectation_bound() -> Outcome {
    let caps = Caps::default();
    let mut min_slack = f64::INFINITY;
    for i in 0..200u64 {
        let mut rng = sizes(3_003, i);
        let s = rng.random_range(1..=3);
        let n = rng.random_range(1..=5);
        let m = rng.random_range(1..=5);
        let model = random_model(40_000 + i, m, s, 1.0).map_err(|e| e.to_string())?;
        let r = verify_expectation_bound(&model, n, &caps).map_err(|e| e.to_string())?;
        min_slack = min_slack.min(r.slack);
        if r.lhs > r.rhs + 1e-10 {
            return Err(format!("instance {i}: {} > {}", r.lhs, r.rhs));
        }
    }
    Ok(format!("200 instances, smallest slack 2R - E[UD] = {min_slack:.3e}"))
}

fn bounded_differences() -> Outcome {
    let caps = Caps::default();
    let mut worst_ratio: f64 = 0.0;
    for i in 0..200u64 {
        let mut rng = sizes(4_004, i);
        let s = rng.random_range(1..=3);
        let n = rng.random_range(1..=5);
        let m = rng.random_range(1..=5);
        let model = random_model(50_000 + i, m, s, 1.0).map_err(|e| e.to_string())?;
        let a = audit_bounded_difference(&model, n, &caps).map_err(|e| e.to_string())?;
        let cap = 2.0 * model.envelope() / n as f64;
        if a.max_observed_delta > cap + 1e-12 || a.violated {
            return Err(format!("instance {i}: delta {} > 2b/n = {cap}", a.max_observed_delta));
        }
        worst_ratio = worst_ratio.max(a.max_observed_delta / cap);
    }
    // f(x) = x on {-1, 1}: flipping one of two points moves the mean by 1 = 2b/n
    let class = FnClass::new(1, 1.0, |_, x: &[f64]| x[0]);
    let dist = DiscreteDistribution::uniform(vec![vec![-1.0], vec![1.0]]).map_err(|e| e.to_string())?;
    let model = DiscreteModel::new(&class, &dist).map_err(|e| e.to_string())?;
    let a = audit_bounded_difference(&model, 2, &caps).map_err(|e| e.to_string())?;
    if a.max_observed_delta < 0.5 * a.theoretical_cap {
        return Err(format!(
            "constructed instance reaches only {} of cap {}",
            a.max_observed_delta, a.theoretical_cap
        ));
    }
    Ok(format!(
        "200 random audits within 2b/n (max ratio {worst_ratio:.3}); constructed instance reaches {}/{}",
        a.max_observed_delta, a.theoretical_cap
    ))
}

fn tail_bound() -> Outcome {
    let caps = Caps::default();
    let mut cases = 0;
    let mut max_freq_ratio: f64 = 0.0;
    for i in 0..20u64 {
        let mut rng = sizes(5_005, i);
        let m = rng.random_range(1..=6);
        let s = rng.random_range(2..=3);
        let model = random_model(60_000 + i, m, s, 1.0).map_err(|e| e.to_string())?;
        for n in [4usize, 8] {
            let r = expected_rademacher(&model, n, &caps).map_err(|e| e.to_string())?;
            for (e, eps) in [0.1, 0.25, 0.5].into_iter().enumerate() {
                let seed = 70_000 + 100 * i + 10 * n as u64 + e as u64;
                let exp = simulate_tail(&model, n, eps, 100_000, seed, r).map_err(|e| e.to_string())?;
                let v = verify_tail_bound(&exp);
                if !v.pass {
                    return Err(format!(
                        "instance {i}, n {n}, eps {eps}: {} exceedances, lower bound {} > {}",
                        v.exceed_count, v.ci_lower, v.theoretical
                    ));
                }
                max_freq_ratio = max_freq_ratio.max(v.empirical_freq / v.theoretical);
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} cases pass; largest empirical/theoretical = {max_freq_ratio:.3}"))
}

fn epsilon_round_trip() -> Outcome {
    let mut worst: f64 = 0.0;
    let (lo, hi) = (1e-6f64.ln(), 0.5f64.ln());
    for (n, b) in [(1usize, 1.0), (10, 1.0), (100, 0.5), (1000, 3.0)] {
        for t in 0..30 {
            let delta = (lo + (hi - lo) * t as f64 / 29.0).exp();
            let eps = high_probability_epsilon(delta, n, b).map_err(|e| e.to_string())?;
            let back = mcdiarmid_bound(eps, n, b).map_err(|e| e.to_string())?;
            worst = worst.max(((back - delta) / delta).abs());
        }
    }
    if worst <= 1e-12 {
        Ok(format!("30-point grid, largest relative error {worst:.3e}"))
    } else {
        Err(format!("largest relative error {worst:.3e}"))
    }
}

fn linear_bounds() -> Outcome {
    let caps = Caps::default();
    let mut min_slack = [f64::INFINITY; 2];
    for i in 0..2000u64 {
        let l1 = i >= 1000;
        let mut rng = sizes(6_006, i);
        let d = rng.random_range(1..=if l1 { 16 } else { 8 });
        let m = rng.random_range(1..=8);
        let n = rng.random_range(1..=10);
        let w = rng.random_range(0.25..2.0);
        let x = rng.random_range(0.25..2.0);
        let regime = if l1 {
            NormRegime::L1Linf { w, x_inf: x }
        } else {
            NormRegime::L2Ball { w, x }
        };
        let inst = LinearInstance::sample(regime, d, m, n, 80_000 + i).map_err(|e| e.to_string())?;
        let report = verify_linear_bound(&inst, &caps).map_err(|e| e.to_string())?;
        let evals: Vec<Vec<f64>> = inst
            .weights
            .iter()
            .map(|wv| inst.inputs.iter().map(|xv| wv.iter().zip(xv).map(|(a, b)| a * b).sum()).collect())
            .collect();
        let oracle = naive_rademacher(&evals, true);
        let bound = if l1 {
            x * w / (n as f64).sqrt() * (2.0 * (2.0 * d as f64).ln()).sqrt()
        } else {
            x * w / (n as f64).sqrt()
        };
        if (report.exact - oracle).abs() > 1e-12 || (report.bound - bound).abs() > 1e-12 * bound.max(1.0) {
            return Err(format!("instance {i}: library disagrees with oracle"));
        }
        if oracle > bound + 1e-10 {
            return Err(format!("instance {i}: {oracle} > {bound}"));
        }
        let k = usize::from(l1);
        min_slack[k] = min_slack[k].min(bound - oracle);
    }
    Ok(format!(
        "1000 l2 + 1000 l1 instances; smallest slacks {:.3e} / {:.3e}",
        min_slack[0], min_slack[1]
    ))
}

fn massart() -> Outcome {
    let caps = Caps::default();
    for i in 0..500u64 {
        let mut rng = sizes(7_007, i);
        let m = rng.random_range(1..=8);
        let n = rng.random_range(1..=10);
        let class = random_class(90_000 + i, m, n, 1.0).map_err(|e| e.to_string())?;
        let lhs = empirical_rademacher_without_abs(&class, &caps).map_err(|e| e.to_string())?.value;
        let oracle = naive_rademacher(class.evals(), false);
        let max_norm = class
            .evals()
            .iter()
            .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let rhs = max_norm * (2.0 * (m as f64).ln()).sqrt() / n as f64;
        if (lhs - oracle).abs() > 1e-12 || (massart_bound(&class) - rhs).abs() > 1e-12 {
            return Err(format!("class {i}: library disagrees with oracle"));
        }
        if lhs > rhs + 1e-10 {
            return Err(format!("class {i}: {lhs} > {rhs}"));
        }
    }
    Ok("500 classes within the finite-class bound".into())
}

fn covering_numbers() -> Outcome {
    let caps = Caps::default();
    let mut checked = 0;
    for i in 0..100u64 {
        let mut rng = sizes(8_008, i);
        let m = rng.random_range(1..=10);
        let n = rng.random_range(1..=8);
        let class = random_class(100_000 + i, m, n, 1.0).map_err(|e| e.to_string())?;
        let rows = class.evals();
        let diameter = rows
            .iter()
            .flat_map(|a| rows.iter().map(move |b| rms_dist(a, b)))
            .fold(0.0, f64::max)
            .max(1e-3);
        for frac in [0.05, 0.2, 0.37, 0.55, 0.8] {
            let eps = frac * diameter;
            let exact = covering_number_exact(&class, eps, &caps).map_err(|e| e.to_string())?.size;
            let oracle = brute_force_cover(rows, eps);
            if exact != oracle {
                return Err(format!("class {i}, eps {eps}: exact {exact} != brute force {oracle}"));
            }
            let greedy = covering_number_greedy(&class, eps).map_err(|e| e.to_string())?.size;
            if greedy < exact {
                return Err(format!("class {i}, eps {eps}: greedy {greedy} < exact {exact}"));
            }
            checked += 1;
        }
        let grid: Vec<f64> = (1..=24).map(|t| diameter * t as f64 / 20.0).collect();
        let mut prev = usize::MAX;
        for eps in grid {
            let size = covering_number_exact(&class, eps, &caps).map_err(|e| e.to_string())?.size;
            if size > prev {
                return Err(format!("class {i}: covering number increased at eps {eps}"));
            }
            prev = size;
        }
    }
    Ok(format!("{checked} (class, radius) pairs match brute force; greedy >= exact; monotone"))
}

fn dudley() -> Outcome {
    let caps = Caps::default();
    let mut checks = 0;
    for i in 0..200u64 {
        let mut rng = sizes(9_009, i);
        let m = rng.random_range(1..=10);
        let n = rng.random_range(1..=10);
        let class = random_class(110_000 + i, m, n, 1.0).map_err(|e| e.to_string())?;
        let c = max_empirical_norm(&class);
        let epsilons = admissible_epsilons(c, 16);
        let lhs = naive_rademacher(class.evals(), false);
        for method in [CoverMethod::ExactMinimal, CoverMethod::Greedy] {
            for integration in [Integration::default(), Integration::Breakpoints] {
                let v = verify_dudley(&class, &epsilons, method, integration, &caps)
                    .map_err(|e| format!("class {i}: {e}"))?;
                for p in &v.points {
                    if lhs > p.rhs + 1e-10 {
                        return Err(format!("class {i}, eps {}: {lhs} > {}", p.epsilon, p.rhs));
                    }
                    checks += 1;
                }
            }
        }
    }
    let single = EvaluatedClass::new(vec![vec![0.3, -0.7, 0.9]], 1.0).map_err(|e| e.to_string())?;
    let c = max_empirical_norm(&single);
    for eps in admissible_epsilons(c, 16) {
        for method in [CoverMethod::ExactMinimal, CoverMethod::Greedy] {
            for integration in [Integration::default(), Integration::Breakpoints] {
                let d = dudley_bound(&single, eps, method, integration, &caps).map_err(|e| e.to_string())?;
                if d.bound != 4.0 * eps {
                    return Err(format!("single function: bound {} != 4 eps = {}", d.bound, 4.0 * eps));
                }
            }
        }
    }
    Ok(format!("{checks} (class, radius, cover, quadrature) checks hold; single function gives 4 eps"))
}

fn determinism() -> Outcome {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/suite.json");
    let config = ExperimentConfig::load(&corpus).map_err(|e| e.to_string())?;
    let with_threads = |t: usize| -> Result<String, String> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| e.to_string())?;
        let report = pool.install(|| run(&config)).map_err(|e| e.to_string())?;
        if !report.passed() {
            return Err(format!("smoke corpus reported violations: {:?}", report.violations));
        }
        Ok(report.canonical_json())
    };
    let one = with_threads(1)?;
    let eight = with_threads(8)?;
    if one == eight {
        Ok(format!("{} sub-runs, {} bytes identical at 1 and 8 threads", config.runs.len(), one.len()))
    } else {
        Err("reports differ between 1 and 8 threads".into())
    }
}

fn grid_restriction() -> Outcome {
    let caps = Caps::default();
    let points = vec![vec![0.4, -0.9], vec![1.0, 0.3], vec![-0.2, 0.7], vec![0.6, 0.6]];
    let sample = Sample::new(points.clone()).map_err(|e| e.to_string())?;
    let family = GridFamily::new(vec![(-1.0, 1.0), (-1.0, 1.0)], 2.0, |w, x| w[0] * x[0] + w[1] * x[1])
        .map_err(|e| e.to_string())?;
    let g = grid_restricted_class(&family, &sample, &caps).map_err(|e| e.to_string())?;
    if !g.trace.windows(2).all(|w| w[1].value >= w[0].value) {
        return Err(format!("trace not monotone: {:?}", g.trace));
    }
    // for each sign vector the sup of a linear form over the box sits at a corner
    let corners = [[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]];
    let corner_rows: Vec<Vec<f64>> = corners
        .iter()
        .map(|w| points.iter().map(|x| w[0] * x[0] + w[1] * x[1]).collect())
        .collect();
    let oracle = naive_rademacher(&corner_rows, true);
    let last = g.trace.last().ok_or("empty trace")?.value;
    if g.converged && (last - oracle).abs() <= 1e-6 {
        Ok(format!("{} levels, final {last:.12} vs corner value {oracle:.12}", g.trace.len()))
    } else {
        Err(format!("converged = {}, final {last} vs corner value {oracle}", g.converged))
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("Monte Carlo estimator consistency", mc_consistency, Duration::from_secs(60)),
        ("symmetrization identity", symmetrization_identity, Duration::from_secs(60)),
        ("expected deviation <= 2 R_n", expectation_bound, Duration::from_secs(120)),
        ("bounded differences audit", bounded_differences, Duration::from_secs(60)),
        ("McDiarmid tail bound", tail_bound, Duration::from_secs(300)),
        ("epsilon/delta round trip", epsilon_round_trip, Duration::from_secs(1)),
        ("l2 and l1 linear bounds", linear_bounds, Duration::from_secs(120)),
        ("finite-class (Massart) bound", massart, Duration::from_secs(60)),
        ("covering numbers", covering_numbers, Duration::from_secs(120)),
        ("Dudley entropy integral", dudley, Duration::from_secs(300)),
        ("thread-count determinism", determinism, Duration::from_secs(120)),
        ("grid restriction convergence", grid_restriction, Duration::from_secs(10)),
    ];
    let mut failed = 0;
    for (k, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > *budget => Err(format!("{msg}; took {elapsed:?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("[{:02}] PASS {name}: {msg} ({:.2?})", k + 1, elapsed),
            Err(msg) => {
                failed += 1;
                println!("[{:02}] FAIL {name}: {msg} ({:.2?})", k + 1, elapsed);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
