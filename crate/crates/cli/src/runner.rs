//! Executes a config and assembles its report.

use std::time::Instant;

use genbound_core::complexity::{
    check_without_abs_le_abs, empirical_rademacher, empirical_rademacher_mc, expected_rademacher,
    expected_rademacher_mc, ComplexityResult,
};
use genbound_core::concentration::{simulate_tail, verify_tail_bound};
use genbound_core::deviation::{
    audit_bounded_difference, check_symmetrization_identity, uniform_deviation,
    verify_expectation_bound, EXACT_TOLERANCE,
};
use genbound_core::entropy::{admissible_epsilons, max_empirical_norm, verify_dudley, CoverMethod, DistanceTable};
use genbound_core::linear::{massart_bound, verify_linear_bound};
use genbound_core::model::{DiscreteModel, SampleSource};
use genbound_core::rng::derive_seed;
use genbound_core::Caps;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Command, CoverChoice, ExperimentConfig, Params};
use crate::curve::CurvePoint;
use crate::error::CliError;
use crate::instance::{self, ClassInstance, Instances, LinearCase, ModelInstance};
use crate::report::{config_hash, Report, Violation};

/// Runs a config. Failed inequalities end up in `Report::violations`;
/// `Err` is reserved for configs that cannot be run at all.
pub fn run(config: &ExperimentConfig) -> Result<Report, CliError> {
    config.validate()?;
    let start = Instant::now();
    let mut report = if config.command == Command::Suite {
        run_suite(config)?
    } else {
        run_single(config)?
    };
    report.wall_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

fn run_suite(config: &ExperimentConfig) -> Result<Report, CliError> {
    let runs = config
        .runs
        .iter()
        .map(run_single)
        .collect::<Result<Vec<_>, _>>()?;
    let results = runs
        .iter()
        .map(|r| {
            json!({
                "command": r.command,
                "config_hash": r.config_hash,
                "seed": r.seed,
                "results": r.results,
                "violations": r.violations,
            })
        })
        .collect();
    let violations = runs
        .iter()
        .enumerate()
        .flat_map(|(k, r)| {
            r.violations.iter().cloned().map(move |mut v| {
                v.run = Some(k);
                v
            })
        })
        .collect();
    Ok(Report {
        config_hash: config_hash(config),
        seed: config.seed,
        command: Command::Suite,
        config: config.clone(),
        results,
        violations,
        wall_ms: 0,
        curve: Vec::new(),
        runs,
    })
}

#[derive(Default)]
struct Outcome {
    results: Vec<Value>,
    violations: Vec<Violation>,
    curve: Vec<CurvePoint>,
}

impl Outcome {
    /// Records a failed verification as a violation; other errors abort.
    fn check<T>(&mut self, r: genbound_core::Result<T>, instance: usize) -> Result<Option<T>, CliError> {
        match r {
            Ok(v) => Ok(Some(v)),
            Err(e) => {
                self.violations.push(Violation::from_core(e, instance)?);
                Ok(None)
            }
        }
    }

    fn point(&mut self, x: f64, value: f64, method: impl Serialize, seed: u64, theoretical: Option<f64>) {
        self.curve.push(CurvePoint {
            x,
            value,
            method: label(method),
            seed,
            theoretical,
        });
    }
}

fn label(v: impl Serialize) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

struct Ctx<'a> {
    caps: &'a Caps,
    params: &'a Params,
    seed: Option<u64>,
}

impl Ctx<'_> {
    fn seed_for(&self, what: &str) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Config(format!("{what} is randomized; set \"seed\" or pass --seed")))
    }
}

fn run_single(config: &ExperimentConfig) -> Result<Report, CliError> {
    let spec = config
        .instance
        .as_ref()
        .ok_or_else(|| CliError::Config("missing instance".into()))?;
    let loaded = instance::load(spec, config.command, config.seed)?;
    let mut out = Outcome {
        violations: loaded.envelope_violations,
        ..Outcome::default()
    };
    let ctx = Ctx {
        caps: &config.caps,
        params: &config.params,
        seed: config.seed,
    };
    match (config.command, &loaded.instances) {
        (Command::Rademacher, Instances::Classes(c)) => rademacher_classes(&ctx, c, &mut out)?,
        (Command::Rademacher, Instances::Models(m)) => rademacher_models(&ctx, m, &mut out)?,
        (Command::Rademacher, Instances::Sampled { model, n }) => {
            let seed = derive_seed(ctx.seed_for("sampled complexity")?, 0);
            let r = expected_rademacher_mc(model, *n, ctx.params.draws, seed, ctx.caps)?;
            out.results.push(json!({"instance": 0, "m": model.m(), "n": n, "rademacher": r}));
            out.point(*n as f64, r.value, r.method, seed, None);
        }
        (Command::Deviation, Instances::Models(m)) => deviation_models(ctx.caps, m, &mut out)?,
        (Command::Deviation, Instances::Classes(c)) => deviation_classes(c, &mut out)?,
        (Command::Symmetrize, Instances::Models(m)) => symmetrize(ctx.caps, m, &mut out)?,
        (Command::Tail, Instances::Models(models)) => {
            for (i, mi) in models.iter().enumerate() {
                let r = model_complexity(&ctx, &mi.model, mi.n, i)?;
                tail(&ctx, &mi.model, mi.n, r, i, &mut out)?;
            }
        }
        (Command::Tail, Instances::Sampled { model, n }) => {
            let seed = derive_seed(ctx.seed_for("sampled complexity")?, 0);
            let r = expected_rademacher_mc(model, *n, ctx.params.draws, seed, ctx.caps)?;
            tail(&ctx, model, *n, r, 0, &mut out)?;
        }
        (Command::Linear, Instances::Linear(cases)) => linear(ctx.caps, cases, &mut out)?,
        (Command::Dudley, Instances::Classes(c)) => dudley(&ctx, c, &mut out)?,
        (command, _) => {
            return Err(CliError::Config(format!(
                "instance source is not supported by {}",
                command.name()
            )))
        }
    }
    Ok(Report {
        config_hash: config_hash(config),
        seed: config.seed,
        command: config.command,
        config: config.clone(),
        results: out.results,
        violations: out.violations,
        wall_ms: 0,
        curve: out.curve,
        runs: Vec::new(),
    })
}

fn rademacher_classes(ctx: &Ctx, classes: &[ClassInstance], out: &mut Outcome) -> Result<(), CliError> {
    for (i, ci) in classes.iter().enumerate() {
        let class = &ci.class;
        let n = class.n();
        if n <= ctx.caps.max_sign_len as usize {
            let abs = empirical_rademacher(class, ctx.caps)?;
            let cmp = out.check(check_without_abs_le_abs(class, ctx.caps), i)?;
            let massart = massart_bound(class);
            if let Some(c) = &cmp {
                if c.without_abs > massart + EXACT_TOLERANCE {
                    out.violations.push(Violation {
                        run: None,
                        instance: Some(i),
                        what: "finite-class (Massart) bound on the without-abs complexity".into(),
                        lhs: Some(c.without_abs),
                        rhs: Some(massart),
                        details: serde_json::to_string(class).unwrap_or_default(),
                    });
                }
            }
            out.results.push(json!({
                "instance": i,
                "m": class.m(),
                "n": n,
                "seed": ci.seed,
                "rademacher": abs,
                "without_abs": cmp.map(|c| c.without_abs),
                "abs_minus_without_abs": cmp.map(|c| c.slack),
                "massart_bound": massart,
            }));
            out.point(n as f64, abs.value, abs.method, ci.seed.or(ctx.seed).unwrap_or(0), None);
        } else {
            let seed = derive_seed(ctx.seed_for("Monte Carlo complexity")?, i as u64);
            let abs = empirical_rademacher_mc(class, ctx.params.draws, seed)?;
            out.results.push(json!({
                "instance": i,
                "m": class.m(),
                "n": n,
                "seed": ci.seed,
                "rademacher": abs,
            }));
            out.point(n as f64, abs.value, abs.method, seed, None);
        }
    }
    Ok(())
}

fn exact_feasible(caps: &Caps, support: usize, n: usize) -> bool {
    n <= caps.max_sign_len as usize && (support as f64).powi(n as i32) <= caps.max_product_tuples as f64
}

/// Expected complexity, exact when the product space fits the caps.
fn model_complexity(ctx: &Ctx, model: &DiscreteModel, n: usize, i: usize) -> Result<ComplexityResult, CliError> {
    if exact_feasible(ctx.caps, model.support_len(), n) {
        Ok(expected_rademacher(model, n, ctx.caps)?)
    } else {
        let seed = derive_seed(ctx.seed_for("Monte Carlo complexity")?, i as u64);
        Ok(expected_rademacher_mc(model, n, ctx.params.draws, seed, ctx.caps)?)
    }
}

fn rademacher_models(ctx: &Ctx, models: &[ModelInstance], out: &mut Outcome) -> Result<(), CliError> {
    for (i, mi) in models.iter().enumerate() {
        let r = model_complexity(ctx, &mi.model, mi.n, i)?;
        out.results.push(json!({
            "instance": i,
            "m": mi.model.m(),
            "support": mi.model.support_len(),
            "n": mi.n,
            "seed": mi.seed,
            "rademacher": r,
        }));
        let seed = if r.draws > 0 { r.seed } else { mi.seed.or(ctx.seed).unwrap_or(0) };
        out.point(mi.n as f64, r.value, r.method, seed, None);
    }
    Ok(())
}

fn deviation_models(caps: &Caps, models: &[ModelInstance], out: &mut Outcome) -> Result<(), CliError> {
    for (i, mi) in models.iter().enumerate() {
        let audit = audit_bounded_difference(&mi.model, mi.n, caps)?;
        if audit.violated {
            out.violations.push(Violation {
                run: None,
                instance: Some(i),
                what: "bounded differences: one-point change moves the uniform deviation by at most 2b/n".into(),
                lhs: Some(audit.max_observed_delta),
                rhs: Some(audit.theoretical_cap),
                details: format!("envelope b = {}, n = {}", mi.model.envelope(), mi.n),
            });
        }
        let expectation = out.check(verify_expectation_bound(&mi.model, mi.n, caps), i)?;
        out.results.push(json!({
            "instance": i,
            "m": mi.model.m(),
            "support": mi.model.support_len(),
            "n": mi.n,
            "seed": mi.seed,
            "envelope": mi.model.envelope(),
            "audit": audit,
            "expectation": expectation,
        }));
        if let Some(e) = expectation {
            out.point(mi.n as f64, e.lhs, "exact_enumeration", mi.seed.unwrap_or(0), None);
        }
    }
    Ok(())
}

fn deviation_classes(classes: &[ClassInstance], out: &mut Outcome) -> Result<(), CliError> {
    for (i, ci) in classes.iter().enumerate() {
        let class = &ci.class;
        if class.population_means().is_none() {
            return Err(CliError::Config(
                "deviation on an inline class needs population_means".into(),
            ));
        }
        let ud = uniform_deviation(class)?;
        let cap = 2.0 * class.envelope();
        if ud > cap + EXACT_TOLERANCE {
            out.violations.push(Violation {
                run: None,
                instance: Some(i),
                what: "uniform deviation is at most 2b".into(),
                lhs: Some(ud),
                rhs: Some(cap),
                details: serde_json::to_string(class).unwrap_or_default(),
            });
        }
        out.results.push(json!({
            "instance": i,
            "m": class.m(),
            "n": class.n(),
            "uniform_deviation": ud,
            "envelope": class.envelope(),
        }));
        out.point(class.n() as f64, ud, "exact_enumeration", ci.seed.unwrap_or(0), None);
    }
    Ok(())
}

fn symmetrize(caps: &Caps, models: &[ModelInstance], out: &mut Outcome) -> Result<(), CliError> {
    for (i, mi) in models.iter().enumerate() {
        let r = out.check(check_symmetrization_identity(&mi.model, mi.n, caps), i)?;
        out.results.push(json!({
            "instance": i,
            "m": mi.model.m(),
            "support": mi.model.support_len(),
            "n": mi.n,
            "seed": mi.seed,
            "identity": r,
        }));
        if let Some(r) = r {
            out.point(mi.n as f64, r.lhs, "exact_enumeration", mi.seed.unwrap_or(0), None);
        }
    }
    Ok(())
}

fn tail<S: SampleSource + ?Sized>(
    ctx: &Ctx,
    source: &S,
    n: usize,
    rademacher: ComplexityResult,
    i: usize,
    out: &mut Outcome,
) -> Result<(), CliError> {
    let base = derive_seed(ctx.seed_for("tail simulation")?, i as u64);
    for (e, &epsilon) in ctx.params.epsilons.iter().enumerate() {
        let seed = derive_seed(base, e as u64);
        let exp = simulate_tail(source, n, epsilon, ctx.params.trials, seed, rademacher)?;
        let verdict = verify_tail_bound(&exp);
        if !verdict.pass {
            out.violations.push(Violation {
                run: None,
                instance: Some(i),
                what: "McDiarmid tail: P(UD >= 2R + eps) <= exp(-eps^2 n / (2 b^2))".into(),
                lhs: Some(verdict.ci_lower),
                rhs: Some(verdict.theoretical),
                details: format!(
                    "{} of {} trials exceeded; epsilon = {epsilon}, n = {n}, seed = {seed}",
                    verdict.exceed_count, verdict.trials
                ),
            });
        }
        out.results.push(json!({
            "instance": i,
            "n": n,
            "epsilon": epsilon,
            "experiment": exp,
            "verdict": verdict,
        }));
        out.point(epsilon, exp.empirical_freq, rademacher.method, seed, Some(exp.theoretical));
    }
    Ok(())
}

fn linear(caps: &Caps, cases: &[LinearCase], out: &mut Outcome) -> Result<(), CliError> {
    for (i, case) in cases.iter().enumerate() {
        let inst = &case.instance;
        let r = out.check(verify_linear_bound(inst, caps), i)?;
        out.results.push(json!({
            "instance": i,
            "d": inst.d,
            "m": inst.weights.len(),
            "n": inst.n(),
            "seed": case.seed,
            "regime": inst.regime,
            "report": r,
        }));
        if let Some(r) = r {
            out.point(inst.n() as f64, r.exact, "exact_enumeration", case.seed, None);
        }
    }
    Ok(())
}

fn dudley(ctx: &Ctx, classes: &[ClassInstance], out: &mut Outcome) -> Result<(), CliError> {
    for (i, ci) in classes.iter().enumerate() {
        let class = &ci.class;
        let c = max_empirical_norm(class);
        if c == 0.0 {
            out.results.push(json!({"instance": i, "m": class.m(), "n": class.n(), "degenerate": true}));
            continue;
        }
        let epsilons = admissible_epsilons(c, ctx.params.epsilon_count);
        let exact_fits = DistanceTable::new(class).distinct() <= ctx.caps.max_exact_cover;
        let methods: Vec<CoverMethod> = match ctx.params.cover_method {
            CoverChoice::Exact => vec![CoverMethod::ExactMinimal],
            CoverChoice::Greedy => vec![CoverMethod::Greedy],
            CoverChoice::Both if exact_fits => vec![CoverMethod::ExactMinimal, CoverMethod::Greedy],
            CoverChoice::Both => vec![CoverMethod::Greedy],
        };
        let mut covers = Vec::new();
        for method in methods {
            let v = out.check(
                verify_dudley(class, &epsilons, method, ctx.params.integration, ctx.caps),
                i,
            )?;
            if let Some(v) = &v {
                for p in &v.points {
                    out.point(p.epsilon, p.rhs, method, ci.seed.or(ctx.seed).unwrap_or(0), None);
                }
            }
            covers.push(json!({"cover_method": method, "verification": v}));
        }
        out.results.push(json!({
            "instance": i,
            "m": class.m(),
            "n": class.n(),
            "seed": ci.seed,
            "c": c,
            "covers": covers,
        }));
    }
    Ok(())
}
