//! Metric entropy of a class under the empirical pseudometric
//! `||f - g||_S = sqrt((1/n) sum_k (f(S_k) - g(S_k))^2)`.
//!
//! Covers are internal (centers are rows of the class) and use closed balls.
//! Rows at distance zero are identified before covering, so every count here
//! is a count of distinct functions on the sample.

use std::cell::RefCell;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::complexity::empirical_rademacher_without_abs;
use crate::deviation::EXACT_TOLERANCE;
use crate::error::{Error, Result};
use crate::sum::deterministic_sum;
use crate::types::{Caps, EvaluatedClass};

/// Default number of subintervals for the upper Riemann sum.
pub const DEFAULT_GRID_POINTS: usize = 256;

// Cover masks are single words.
const MASK_BITS: usize = 64;

pub fn empirical_norm(row: &[f64]) -> f64 {
    (row.iter().map(|v| v * v).sum::<f64>() / row.len() as f64).sqrt()
}

pub fn empirical_dist(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(dist_unchecked(a, b))
}

#[inline]
fn dist_unchecked(a: &[f64], b: &[f64]) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (s / a.len() as f64).sqrt()
}

/// `max_i ||evals[i]||_S`.
pub fn max_empirical_norm(class: &EvaluatedClass) -> f64 {
    class
        .evals()
        .iter()
        .map(|r| empirical_norm(r))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverMethod {
    ExactMinimal,
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverResult {
    pub radius: f64,
    pub size: usize,
    /// Row indices of the centers, ascending for exact covers and in
    /// selection order for greedy ones.
    pub center_indices: Vec<usize>,
    pub method: CoverMethod,
}

/// Distinct rows of a class and their pairwise distances.
#[derive(Debug, Clone)]
pub struct DistanceTable {
    /// Original index of each distinct row (first occurrence).
    reps: Vec<usize>,
    /// `dist[a][b]` between representatives.
    dist: Vec<Vec<f64>>,
    /// Sorted distinct positive pairwise distances.
    breakpoints: Vec<f64>,
}

impl DistanceTable {
    pub fn new(class: &EvaluatedClass) -> Self {
        let rows = class.evals();
        let mut reps: Vec<usize> = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if !reps.iter().any(|&r| dist_unchecked(&rows[r], row) == 0.0) {
                reps.push(i);
            }
        }
        let dist: Vec<Vec<f64>> = reps
            .iter()
            .map(|&a| reps.iter().map(|&b| dist_unchecked(&rows[a], &rows[b])).collect())
            .collect();
        let mut breakpoints: Vec<f64> = dist
            .iter()
            .enumerate()
            .flat_map(|(a, row)| row[a + 1..].iter().copied())
            .collect();
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        DistanceTable {
            reps,
            dist,
            breakpoints,
        }
    }

    /// Number of distinct rows under the pseudometric.
    pub fn distinct(&self) -> usize {
        self.reps.len()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    fn masks(&self, radius: f64) -> Vec<u64> {
        self.dist
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, d)| **d <= radius)
                    .fold(0u64, |m, (b, _)| m | (1u64 << b))
            })
            .collect()
    }

    /// Minimal cover by pruned search over center sets in increasing size and
    /// lexicographic order; the first hit is the lexicographically smallest
    /// minimum.
    fn exact_cover(&self, radius: f64) -> Vec<usize> {
        let r = self.distinct();
        let masks = self.masks(radius);
        let full = if r == MASK_BITS { u64::MAX } else { (1u64 << r) - 1 };
        let mut chosen = Vec::with_capacity(r);
        for size in 1..=r {
            if search(&masks, full, 0, 0, size, &mut chosen) {
                return chosen.iter().map(|&a| self.reps[a]).collect();
            }
        }
        unreachable!("the full set of rows always covers")
    }

    /// Farthest-point-first centers, starting from the first row.
    fn greedy_cover(&self, radius: f64) -> Vec<usize> {
        let mut centers = vec![0usize];
        let mut to_center: Vec<f64> = self.dist[0].clone();
        loop {
            let (far, far_d) = to_center
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (a, d)| if *d > best.1 { (a, *d) } else { best });
            if far_d <= radius {
                break;
            }
            centers.push(far);
            for (d, via) in to_center.iter_mut().zip(&self.dist[far]) {
                *d = d.min(*via);
            }
        }
        centers.into_iter().map(|a| self.reps[a]).collect()
    }

    /// Index of the largest breakpoint `<= radius`, offset by one (0 = none).
    fn regime(&self, radius: f64) -> usize {
        self.breakpoints.partition_point(|d| *d <= radius)
    }
}

fn search(masks: &[u64], full: u64, start: usize, covered: u64, left: usize, chosen: &mut Vec<usize>) -> bool {
    if covered == full {
        return true;
    }
    if left == 0 {
        return false;
    }
    let first_uncovered = (!covered & full).trailing_zeros() as usize;
    for a in start..masks.len() {
        chosen.push(a);
        if search(masks, full, a + 1, covered | masks[a], left - 1, chosen) {
            return true;
        }
        chosen.pop();
        // every later candidate set skips `a`; if no later row covers the
        // lowest uncovered one, nothing further can succeed
        if !masks[a + 1..].iter().any(|m| (m >> first_uncovered) & 1 == 1) {
            break;
        }
    }
    false
}

fn check_radius(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidRadius {
            radius: epsilon,
            limit: f64::INFINITY,
        });
    }
    Ok(())
}

fn check_exact_cap(table: &DistanceTable, caps: &Caps) -> Result<()> {
    let cap = caps.max_exact_cover.min(MASK_BITS);
    if table.distinct() > cap {
        return Err(Error::ExactEnumerationLimit {
            what: "rows for an exact minimal cover",
            required: table.distinct() as f64,
            cap: cap as f64,
        });
    }
    Ok(())
}

/// Minimal internal cover with closed balls of radius `epsilon`.
pub fn covering_number_exact(class: &EvaluatedClass, epsilon: f64, caps: &Caps) -> Result<CoverResult> {
    check_radius(epsilon)?;
    let table = DistanceTable::new(class);
    check_exact_cap(&table, caps)?;
    let centers = table.exact_cover(epsilon);
    Ok(CoverResult {
        radius: epsilon,
        size: centers.len(),
        center_indices: centers,
        method: CoverMethod::ExactMinimal,
    })
}

/// Farthest-point-first cover; never smaller than the minimal one.
pub fn covering_number_greedy(class: &EvaluatedClass, epsilon: f64) -> Result<CoverResult> {
    check_radius(epsilon)?;
    let table = DistanceTable::new(class);
    let centers = table.greedy_cover(epsilon);
    Ok(CoverResult {
        radius: epsilon,
        size: centers.len(),
        center_indices: centers,
        method: CoverMethod::Greedy,
    })
}

/// Cover sizes as a function of the radius, memoized per step of the
/// (right-continuous) step function.
pub struct CoverProfile {
    table: DistanceTable,
    method: CoverMethod,
    cache: RefCell<HashMap<usize, usize>>,
}

impl CoverProfile {
    pub fn new(class: &EvaluatedClass, method: CoverMethod, caps: &Caps) -> Result<Self> {
        let table = DistanceTable::new(class);
        if method == CoverMethod::ExactMinimal {
            check_exact_cap(&table, caps)?;
        }
        Ok(CoverProfile {
            table,
            method,
            cache: RefCell::new(HashMap::new()),
        })
    }

    pub fn size(&self, radius: f64) -> usize {
        let key = self.table.regime(radius);
        if let Some(&n) = self.cache.borrow().get(&key) {
            return n;
        }
        // evaluate at the breakpoint itself so every radius in the step agrees
        let at = if key == 0 { 0.0 } else { self.table.breakpoints[key - 1] };
        let n = match self.method {
            CoverMethod::ExactMinimal => self.table.exact_cover(at).len(),
            CoverMethod::Greedy => self.table.greedy_cover(at).len(),
        };
        self.cache.borrow_mut().insert(key, n);
        n
    }

    pub fn breakpoints(&self) -> &[f64] {
        self.table.breakpoints()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainingLevel {
    pub j: u32,
    /// `c / 2^j`
    pub epsilon: f64,
    pub cover: CoverResult,
    /// Center row index assigned to each row.
    pub assignment: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainingTrace {
    pub c: f64,
    pub target_epsilon: f64,
    pub levels: Vec<ChainingLevel>,
}

impl ChainingTrace {
    /// Largest distance from a row to its center at the deepest level.
    pub fn residual(&self, class: &EvaluatedClass) -> f64 {
        let deepest = self.levels.last().expect("at least one level");
        class
            .evals()
            .iter()
            .zip(&deepest.assignment)
            .map(|(row, &c)| dist_unchecked(row, class.row(c)))
            .fold(0.0, f64::max)
    }
}

/// Dyadic covers at radii `c/2, c/4, ...` down to `target_epsilon`, with a
/// nearest-center assignment of every row at each level.
pub fn build_chaining(class: &EvaluatedClass, target_epsilon: f64, caps: &Caps) -> Result<ChainingTrace> {
    let c = max_empirical_norm(class);
    if c == 0.0 {
        return Err(Error::DegenerateClass);
    }
    if !(target_epsilon > 0.0 && target_epsilon < c / 2.0) {
        return Err(Error::InvalidRadius {
            radius: target_epsilon,
            limit: c / 2.0,
        });
    }
    let table = DistanceTable::new(class);
    let exact = table.distinct() <= caps.max_exact_cover.min(MASK_BITS);
    let rows = class.evals();
    let mut levels = Vec::new();
    for j in 1u32.. {
        let epsilon = c / 2f64.powi(j as i32);
        let centers = if exact {
            table.exact_cover(epsilon)
        } else {
            table.greedy_cover(epsilon)
        };
        let assignment = rows
            .iter()
            .map(|row| {
                centers
                    .iter()
                    .copied()
                    .map(|ci| (ci, dist_unchecked(row, &rows[ci])))
                    .fold((usize::MAX, f64::INFINITY), |best, cur| {
                        if cur.1 < best.1 || (cur.1 == best.1 && cur.0 < best.0) {
                            cur
                        } else {
                            best
                        }
                    })
                    .0
            })
            .collect();
        levels.push(ChainingLevel {
            j,
            epsilon,
            cover: CoverResult {
                radius: epsilon,
                size: centers.len(),
                center_indices: centers,
                method: if exact {
                    CoverMethod::ExactMinimal
                } else {
                    CoverMethod::Greedy
                },
            },
            assignment,
        });
        if epsilon <= target_epsilon {
            break;
        }
    }
    Ok(ChainingTrace {
        c,
        target_epsilon,
        levels,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Integration {
    /// Left-endpoint sum over `points` equal subintervals. The integrand is
    /// nonincreasing, so this over-estimates the integral.
    UpperRiemann { points: usize },
    /// Exact integral of the step function over its breakpoints.
    Breakpoints,
}

impl Default for Integration {
    fn default() -> Self {
        Integration::UpperRiemann {
            points: DEFAULT_GRID_POINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DudleyResult {
    pub epsilon: f64,
    pub c: f64,
    pub n: usize,
    pub integral: f64,
    /// `4 eps + (12 / sqrt(n)) * integral`
    pub bound: f64,
    pub cover_method: CoverMethod,
    pub integration: Integration,
    /// `(u, N(u))` at each evaluation point.
    pub integrand: Vec<(f64, usize)>,
}

/// Upper bound `4 eps + (12/sqrt(n)) int_eps^{c/2} sqrt(ln N(u)) du` on the
/// without-abs empirical complexity, `c` being the largest empirical norm.
pub fn dudley_bound(
    class: &EvaluatedClass,
    epsilon: f64,
    method: CoverMethod,
    integration: Integration,
    caps: &Caps,
) -> Result<DudleyResult> {
    let profile = CoverProfile::new(class, method, caps)?;
    dudley_with_profile(class, &profile, epsilon, integration)
}

fn dudley_with_profile(
    class: &EvaluatedClass,
    profile: &CoverProfile,
    epsilon: f64,
    integration: Integration,
) -> Result<DudleyResult> {
    let c = max_empirical_norm(class);
    if c == 0.0 {
        return Err(Error::DegenerateClass);
    }
    let upper = c / 2.0;
    if !(epsilon > 0.0 && epsilon < upper) {
        return Err(Error::InvalidRadius {
            radius: epsilon,
            limit: upper,
        });
    }
    let height = |u: f64| (profile.size(u) as f64).ln().sqrt();
    let (integral, integrand) = match integration {
        Integration::UpperRiemann { points } => {
            if points == 0 {
                return Err(Error::invalid("integration grid needs at least one point"));
            }
            let h = (upper - epsilon) / points as f64;
            let nodes: Vec<f64> = (0..points).map(|t| epsilon + t as f64 * h).collect();
            let heights: Vec<f64> = nodes.iter().map(|u| height(*u)).collect();
            let trace = nodes.iter().map(|u| (*u, profile.size(*u))).collect();
            (h * deterministic_sum(&heights), trace)
        }
        Integration::Breakpoints => {
            let mut nodes = vec![epsilon];
            nodes.extend(
                profile
                    .breakpoints()
                    .iter()
                    .copied()
                    .filter(|d| *d > epsilon && *d < upper),
            );
            let mut pieces = Vec::with_capacity(nodes.len());
            for (a, u) in nodes.iter().enumerate() {
                let next = nodes.get(a + 1).copied().unwrap_or(upper);
                pieces.push((next - u) * height(*u));
            }
            let trace = nodes.iter().map(|u| (*u, profile.size(*u))).collect();
            (deterministic_sum(&pieces), trace)
        }
    };
    let n = class.n();
    Ok(DudleyResult {
        epsilon,
        c,
        n,
        integral,
        bound: 4.0 * epsilon + 12.0 / (n as f64).sqrt() * integral,
        cover_method: profile.method,
        integration,
        integrand,
    })
}

/// `count` evenly spaced admissible radii strictly inside `(0, c/2)`.
pub fn admissible_epsilons(c: f64, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|t| 0.5 * c * t as f64 / (count + 1) as f64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DudleyPoint {
    pub epsilon: f64,
    pub rhs: f64,
    /// `rhs - lhs`
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DudleyVerification {
    /// Exact without-abs empirical complexity.
    pub lhs: f64,
    pub points: Vec<DudleyPoint>,
    /// Radius with the smallest bound.
    pub best_epsilon: f64,
    pub best_rhs: f64,
}

/// Checks the without-abs complexity against the Dudley bound at each radius.
pub fn verify_dudley(
    class: &EvaluatedClass,
    epsilons: &[f64],
    method: CoverMethod,
    integration: Integration,
    caps: &Caps,
) -> Result<DudleyVerification> {
    if max_empirical_norm(class) == 0.0 {
        return Err(Error::DegenerateClass);
    }
    if epsilons.is_empty() {
        return Err(Error::invalid("need at least one radius"));
    }
    let lhs = empirical_rademacher_without_abs(class, caps)?.value;
    let profile = CoverProfile::new(class, method, caps)?;
    let mut points = Vec::with_capacity(epsilons.len());
    for &epsilon in epsilons {
        let rhs = dudley_with_profile(class, &profile, epsilon, integration)?.bound;
        if lhs > rhs + EXACT_TOLERANCE {
            return Err(Error::InequalityViolation {
                what: format!("Dudley entropy bound at epsilon = {epsilon}"),
                lhs,
                rhs,
                details: class.to_json(),
            });
        }
        points.push(DudleyPoint {
            epsilon,
            rhs,
            slack: rhs - lhs,
        });
    }
    let best = points
        .iter()
        .fold(points[0], |b, p| if p.rhs < b.rhs { *p } else { b });
    Ok(DudleyVerification {
        lhs,
        points,
        best_epsilon: best.epsilon,
        best_rhs: best.rhs,
    })
}
