//! Turns an [`InstanceSpec`] into concrete classes and models.

use genbound_core::linear::LinearInstance;
use genbound_core::model::{BuiltinSampler, DiscreteModel, FunctionClass, LinearClass, SampledModel};
use genbound_core::rng::{derive_seed, stream};
use genbound_core::instances::{random_class, random_model};
use genbound_core::types::ENVELOPE_SLACK;
use genbound_core::EvaluatedClass;
use rand::Rng;

use crate::config::{Command, InstanceSpec};
use crate::error::CliError;
use crate::report::Violation;

const SIZE_SALT: u64 = 0x0051_75e5;
const INSTANCE_SALT: u64 = 0x1_57a7;

pub struct ClassInstance {
    pub class: EvaluatedClass,
    pub seed: Option<u64>,
}

pub struct ModelInstance {
    pub model: DiscreteModel,
    pub n: usize,
    pub seed: Option<u64>,
}

pub struct LinearCase {
    pub instance: LinearInstance,
    pub seed: u64,
}

pub enum Instances {
    Classes(Vec<ClassInstance>),
    Models(Vec<ModelInstance>),
    Sampled {
        model: SampledModel<LinearClass, BuiltinSampler>,
        n: usize,
    },
    Linear(Vec<LinearCase>),
}

pub struct Loaded {
    pub instances: Instances,
    /// Stated envelopes smaller than an observed `|f(x)|`.
    pub envelope_violations: Vec<Violation>,
}

fn max_abs(rows: &[Vec<f64>]) -> f64 {
    rows.iter().flatten().fold(0.0, |a, v| a.max(v.abs()))
}

fn envelope_violation(instance: usize, observed: f64, stated: f64) -> Violation {
    Violation {
        run: None,
        instance: Some(instance),
        what: "envelope: |f(x)| <= b for every function and point".into(),
        lhs: Some(observed),
        rhs: Some(stated),
        details: format!("largest observed |f(x)| is {observed}, stated envelope is {stated}"),
    }
}

/// Builds a model from a table, keeping the stated envelope even if the
/// table exceeds it so that downstream audits can expose the mismatch.
fn model_from_table(
    table: Vec<Vec<f64>>,
    probs: Vec<f64>,
    envelope: f64,
    violations: &mut Vec<Violation>,
) -> Result<DiscreteModel, CliError> {
    if !(envelope > 0.0 && envelope.is_finite()) {
        return Err(CliError::Config(format!("envelope must be positive and finite, got {envelope}")));
    }
    let observed = max_abs(&table);
    let model = DiscreteModel::from_table(table, probs, envelope.max(observed))?;
    if observed > envelope + ENVELOPE_SLACK {
        violations.push(envelope_violation(0, observed, envelope));
    }
    Ok(model.with_envelope_unchecked(envelope))
}

fn size(rng: &mut impl Rng, lo: usize, max: usize) -> usize {
    rng.random_range(lo.min(max)..=max)
}

pub fn load(
    spec: &InstanceSpec,
    command: Command,
    seed: Option<u64>,
) -> Result<Loaded, CliError> {
    let mut violations = Vec::new();
    let instances = match spec {
        InstanceSpec::Inline {
            evals,
            envelope,
            population_means,
        } => {
            let observed = max_abs(evals);
            // validate shape with a widened envelope, then restore the stated one
            let mut probe = EvaluatedClass::new(evals.clone(), envelope.max(observed))?;
            if let Some(means) = population_means {
                probe = probe.with_population_means(means.clone())?;
            }
            if !(*envelope > 0.0 && envelope.is_finite()) {
                return Err(CliError::Config(format!(
                    "envelope must be positive and finite, got {envelope}"
                )));
            }
            if observed > envelope + ENVELOPE_SLACK {
                violations.push(envelope_violation(0, observed, *envelope));
            }
            let class = EvaluatedClass::unchecked(
                probe.evals().to_vec(),
                *envelope,
                probe.population_means().map(<[f64]>::to_vec),
            );
            Instances::Classes(vec![ClassInstance { class, seed }])
        }
        InstanceSpec::Table {
            table,
            probs,
            envelope,
            n,
        } => {
            check_n(*n)?;
            let model = model_from_table(table.clone(), probs.clone(), *envelope, &mut violations)?;
            Instances::Models(vec![ModelInstance { model, n: *n, seed }])
        }
        InstanceSpec::Linear {
            weights,
            support,
            probs,
            envelope,
            n,
        } => {
            check_n(*n)?;
            let class = LinearClass {
                weights: weights.clone(),
                envelope: *envelope,
            };
            if let Some(p) = support.iter().find(|p| weights.iter().any(|w| w.len() != p.len())) {
                return Err(CliError::Config(format!(
                    "support point of dimension {} does not match the weights",
                    p.len()
                )));
            }
            let table = (0..class.len())
                .map(|i| support.iter().map(|x| class.eval(i, x)).collect())
                .collect();
            let probs = match probs {
                Some(p) => p.clone(),
                None if support.is_empty() => Vec::new(),
                None => vec![1.0 / support.len() as f64; support.len()],
            };
            let model = model_from_table(table, probs, *envelope, &mut violations)?;
            Instances::Models(vec![ModelInstance { model, n: *n, seed }])
        }
        InstanceSpec::Sampled {
            weights,
            sampler,
            population_means,
            envelope,
            n,
        } => {
            check_n(*n)?;
            let class = LinearClass {
                weights: weights.clone(),
                envelope: *envelope,
            };
            let model = SampledModel::new(class, sampler.clone(), population_means.clone())?;
            Instances::Sampled { model, n: *n }
        }
        InstanceSpec::Random {
            count,
            max_m,
            max_n,
            max_support,
            envelope,
        } => {
            let seed = seed.ok_or_else(|| CliError::Config("random instances need a seed".into()))?;
            if *max_m == 0 || *max_n == 0 || *max_support == 0 {
                return Err(CliError::Config("random instance sizes must be at least 1".into()));
            }
            let by_class = matches!(command, Command::Rademacher | Command::Dudley);
            let mut classes = Vec::new();
            let mut models = Vec::new();
            for i in 0..*count {
                let mut rng = stream(derive_seed(seed, SIZE_SALT), i as u64);
                let m = size(&mut rng, 1, *max_m);
                let n = size(&mut rng, 1, *max_n);
                let s = size(&mut rng, 2, *max_support);
                let inst_seed = derive_seed(derive_seed(seed, INSTANCE_SALT), i as u64);
                if by_class {
                    classes.push(ClassInstance {
                        class: random_class(inst_seed, m, n, *envelope)?,
                        seed: Some(inst_seed),
                    });
                } else {
                    models.push(ModelInstance {
                        model: random_model(inst_seed, m, s, *envelope)?,
                        n,
                        seed: Some(inst_seed),
                    });
                }
            }
            if by_class {
                Instances::Classes(classes)
            } else {
                Instances::Models(models)
            }
        }
        InstanceSpec::LinearBall {
            regime,
            max_d,
            max_m,
            max_n,
            count,
        } => {
            let seed = seed.ok_or_else(|| CliError::Config("linear instances need a seed".into()))?;
            if *max_d == 0 || *max_m == 0 || *max_n == 0 {
                return Err(CliError::Config("linear instance sizes must be at least 1".into()));
            }
            let mut cases = Vec::with_capacity(*count);
            for i in 0..*count {
                let mut rng = stream(derive_seed(seed, SIZE_SALT), i as u64);
                let d = size(&mut rng, 1, *max_d);
                let m = size(&mut rng, 1, *max_m);
                let n = size(&mut rng, 1, *max_n);
                let inst_seed = derive_seed(derive_seed(seed, INSTANCE_SALT), i as u64);
                cases.push(LinearCase {
                    instance: LinearInstance::sample(*regime, d, m, n, inst_seed)?,
                    seed: inst_seed,
                });
            }
            Instances::Linear(cases)
        }
    };
    Ok(Loaded {
        instances,
        envelope_violations: violations,
    })
}

fn check_n(n: usize) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Config("sample size n must be at least 1".into()));
    }
    Ok(())
}
