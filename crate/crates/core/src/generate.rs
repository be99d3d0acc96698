//! Built-in instances and a seeded random instance generator.

use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::market::{CostCurve, Extension, FirmDistribution, MarginalVector, MarketInstance};
use crate::rational::{int, pow2, ratio, Rational};

/// Two firms with marginals (10,10) and (6,1), linear cost 9 per license.
pub fn demand_reduction() -> MarketInstance {
    MarketInstance::deterministic(
        "demand-reduction",
        vec![mv(&[10, 10]), mv(&[6, 1])],
        CostCurve::linear(int(9)),
    )
}

/// Normaliser making `sum_{i=1..n} 1 / (beta * 4^i)` equal to 1.
pub fn logscale_beta(n: u32) -> Rational {
    (Rational::one() - Rational::one() / pow2(2 * n)) / int(3)
}

fn logscale_probs(n: u32) -> Result<Vec<Rational>> {
    if n == 0 {
        return Err(Error::Generator("n must be at least 1".into()));
    }
    if n > 24 {
        return Err(Error::Generator(format!("n = {n} would need 2^{n} marginals")));
    }
    let beta = logscale_beta(n);
    Ok((1..=n).map(|i| Rational::one() / (&beta * pow2(2 * i))).collect())
}

/// Single firm, `Q(x) = x^2`; in scenario `i` (probability
/// `1 / (beta * 4^i)`) it values `2^i` licenses at `2^{i+1}` each.
pub fn logscale(n: u32) -> Result<MarketInstance> {
    let scenarios = logscale_probs(n)?
        .into_iter()
        .zip(1..=n)
        .map(|(p, i)| (p, MarginalVector::from_raw(vec![pow2(i + 1); 1 << i])))
        .collect();
    Ok(MarketInstance::new(
        format!("logscale-{n}"),
        vec![FirmDistribution::new(scenarios)],
        CostCurve::quadratic(int(1)),
    ))
}

/// Like [`logscale`] but scenario `i` values every license at `2^{i+1}`,
/// truncated at `horizon` licenses (default `2^{n+1}`).
pub fn first_best(n: u32, horizon: Option<usize>) -> Result<MarketInstance> {
    let probs = logscale_probs(n)?;
    let horizon = horizon.unwrap_or(1 << (n + 1));
    let scenarios = probs
        .into_iter()
        .zip(1..=n)
        .map(|(p, i)| (p, MarginalVector::from_raw(vec![pow2(i + 1); horizon])))
        .collect();
    Ok(MarketInstance::new(
        format!("first-best-{n}"),
        vec![FirmDistribution::new(scenarios)],
        CostCurve::quadratic(int(1)),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CostKind {
    /// `a * x^2` with `a` drawn from {1/2, 1, 2}.
    Quadratic,
    /// Constant marginal cost.
    Linear,
    /// Random non-decreasing explicit marginals, repeat-last.
    Convex,
}

#[derive(Clone, Debug)]
pub struct RandomSpec {
    pub seed: u64,
    pub firms: usize,
    pub scenarios: usize,
    pub max_units: usize,
    /// Inclusive integer range for marginal values.
    pub value_range: (i64, i64),
    pub cost_kind: CostKind,
}

impl RandomSpec {
    pub fn new(seed: u64, firms: usize, scenarios: usize, max_units: usize) -> Self {
        Self {
            seed,
            firms,
            scenarios,
            max_units,
            value_range: (1, 12),
            cost_kind: CostKind::Quadratic,
        }
    }
}

/// Seeded random product-form instance. Each firm has exactly
/// `spec.scenarios` types with 1..=`max_units` sorted integer marginals
/// and random positive rational probabilities.
pub fn random(spec: &RandomSpec) -> Result<MarketInstance> {
    let (lo, hi) = spec.value_range;
    if spec.firms == 0 || spec.scenarios == 0 || spec.max_units == 0 {
        return Err(Error::Generator("sizes must be positive".into()));
    }
    if lo < 0 || lo > hi {
        return Err(Error::Generator(format!("bad value range {lo}..={hi}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut firms = Vec::with_capacity(spec.firms);
    for _ in 0..spec.firms {
        let weights: Vec<i64> = (0..spec.scenarios).map(|_| rng.random_range(1..=6)).collect();
        let total: i64 = weights.iter().sum();
        let scenarios = weights
            .iter()
            .map(|&w| {
                let units = rng.random_range(1..=spec.max_units);
                let mut values: Vec<i64> = (0..units).map(|_| rng.random_range(lo..=hi)).collect();
                values.sort_unstable_by(|a, b| b.cmp(a));
                (ratio(w, total), mv(&values))
            })
            .collect();
        firms.push(FirmDistribution::new(scenarios));
    }
    let cost = match spec.cost_kind {
        CostKind::Quadratic => CostCurve::quadratic([ratio(1, 2), int(1), int(2)][rng.random_range(0..3)].clone()),
        CostKind::Linear => CostCurve::linear(int(rng.random_range(1..=hi.max(1)))),
        CostKind::Convex => random_convex_cost(&mut rng, spec.firms * spec.max_units, hi.max(1) / 2 + 1),
    };
    Ok(MarketInstance::new(format!("random-{}", spec.seed), firms, cost))
}

/// Non-decreasing explicit marginals of length `len`, each step drawn
/// from `0..=max_step`, repeat-last beyond the list.
pub fn random_convex_cost<R: Rng>(rng: &mut R, len: usize, max_step: i64) -> CostCurve {
    let mut current = 0i64;
    let marginals = (0..len.max(1))
        .map(|_| {
            current += rng.random_range(0..=max_step);
            int(current)
        })
        .collect();
    CostCurve::explicit(marginals, Extension::RepeatLast)
}

/// `sum_{i=k+1..n} 2^{2k+2} (2^{i-k} - 1) / (beta * 4^i)`: expected welfare
/// of cap `2^{k+1}` with floor `2^{k+2}` on [`first_best`].
pub fn first_best_bracket_welfare(n: u32, k: u32) -> Rational {
    let beta = logscale_beta(n);
    (k + 1..=n)
        .map(|i| pow2(2 * k + 2) * (pow2(i - k) - Rational::one()) / (&beta * pow2(2 * i)))
        .sum()
}

fn mv(values: &[i64]) -> MarginalVector {
    MarginalVector::from_raw(values.iter().map(|&v| int(v)).collect())
}
