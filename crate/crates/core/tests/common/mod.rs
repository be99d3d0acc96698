//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls the library's clearing, welfare or enumeration code;
//! only the data types are shared.

#![allow(dead_code)]

use capprice::auction::{AuctionParams, Cap, Ceiling, PricingRule};
use capprice::generate::{self, CostKind, RandomSpec};
use capprice::market::{CostCurve, MarginalVector, MarketInstance};
use capprice::rational::{from_usize, int, pow2, Rational};
use num_traits::{One, Signed, Zero};

/// `Q(x)` summed unit by unit.
pub fn cost(curve: &CostCurve, x: usize) -> Rational {
    match curve {
        CostCurve::Quadratic { a } => a * from_usize(x * x),
        CostCurve::Explicit { marginals, .. } => (0..x)
            .map(|j| {
                marginals
                    .get(j)
                    .or(marginals.last())
                    .cloned()
                    .unwrap_or_else(Rational::zero)
            })
            .sum(),
    }
}

fn value(v: &MarginalVector, x: usize) -> Rational {
    v.marginals().iter().take(x).sum()
}

fn demand(v: &MarginalVector, p: &Rational) -> usize {
    v.marginals().iter().filter(|m| m.is_positive() && *m >= p).count()
}

/// Max of `sum_i V_i(x_i)` over every split of `x` licenses.
pub fn brute_force_combined(vs: &[MarginalVector], x: usize) -> Rational {
    match vs.split_first() {
        None => Rational::zero(),
        Some((first, rest)) => (0..=x)
            .map(|k| value(first, k) + brute_force_combined(rest, x - k))
            .max()
            .unwrap(),
    }
}

/// The allocation rule, selecting winning units one at a time.
pub fn hand_clear(params: &AuctionParams, bids: &[MarginalVector]) -> (Vec<usize>, Rational) {
    if let (Cap::Limited(cap), Ceiling::Finite(p)) = (params.cap, &params.ceiling) {
        let d: Vec<usize> = bids.iter().map(|b| demand(b, p)).collect();
        if d.iter().sum::<usize>() >= cap {
            return (d, p.clone());
        }
    }
    let d: Vec<usize> = bids.iter().map(|b| demand(b, &params.floor)).collect();
    let cap = match params.cap {
        Cap::Limited(c) if d.iter().sum::<usize>() >= c => c,
        _ => return (d, params.floor.clone()),
    };
    let mut taken = vec![0usize; bids.len()];
    let pick = |taken: &[usize]| -> Option<(usize, Rational)> {
        let mut best: Option<(usize, Rational)> = None;
        for (i, b) in bids.iter().enumerate() {
            if taken[i] < d[i] {
                let m = b.marginals()[taken[i]].clone();
                if best.as_ref().is_none_or(|(_, bm)| m > *bm) {
                    best = Some((i, m));
                }
            }
        }
        best
    };
    let mut last = Rational::zero();
    for _ in 0..cap {
        let (i, m) = pick(&taken).unwrap();
        taken[i] += 1;
        last = m;
    }
    let price = match params.pricing {
        PricingRule::LowestWinning => last,
        PricingRule::HighestLosing => pick(&taken).map(|(_, m)| m).unwrap_or_else(|| params.floor.clone()),
    };
    (taken, price)
}

pub fn hand_welfare(vs: &[MarginalVector], alloc: &[usize], curve: &CostCurve) -> Rational {
    vs.iter().zip(alloc).map(|(v, &x)| value(v, x)).sum::<Rational>() - cost(curve, alloc.iter().sum())
}

/// Every joint realisation with its probability, by recursion over firms.
pub fn hand_rows(m: &MarketInstance) -> Vec<(Rational, Vec<MarginalVector>)> {
    if let Some(joint) = &m.joint {
        return joint.iter().map(|r| (r.prob.clone(), r.valuations.clone())).collect();
    }
    let mut rows = vec![(Rational::one(), Vec::new())];
    for firm in &m.firms {
        let mut next = Vec::new();
        for (p, vs) in &rows {
            for s in &firm.scenarios {
                let mut vs = vs.clone();
                vs.push(s.valuation.clone());
                next.push((p * &s.prob, vs));
            }
        }
        rows = next;
    }
    rows
}

pub fn hand_expected_welfare(m: &MarketInstance, params: &AuctionParams) -> Rational {
    hand_rows(m)
        .into_iter()
        .map(|(p, vs)| {
            let (alloc, _) = hand_clear(params, &vs);
            p * hand_welfare(&vs, &alloc, &m.cost)
        })
        .sum()
}

/// Floors at every marginal, every midpoint between consecutive marginals,
/// 0 and above the maximum.
pub fn fine_price_grid(m: &MarketInstance) -> Vec<Rational> {
    let mut values: Vec<Rational> = m.valuations().flat_map(|v| v.marginals().to_vec()).collect();
    values.push(Rational::zero());
    values.sort();
    values.dedup();
    let mut out = values.clone();
    for w in values.windows(2) {
        out.push((&w[0] + &w[1]) / int(2));
    }
    out.push(values.last().unwrap() + int(3));
    out.sort();
    out
}

/// Best expected welfare over `caps`, fine floors and no ceiling.
pub fn hand_opt(m: &MarketInstance, caps: std::ops::RangeInclusive<usize>) -> Rational {
    let grid = fine_price_grid(m);
    let mut best: Option<Rational> = None;
    for c in caps {
        for p in &grid {
            let params = AuctionParams::capped(c, p.clone()).unwrap();
            let w = hand_expected_welfare(m, &params);
            if best.as_ref().is_none_or(|b| w > *b) {
                best = Some(w);
            }
        }
    }
    best.unwrap()
}

/// `beta * W(M(c))` on the log-scale instance, by closed form per scenario.
pub fn logscale_safe_welfare_times_beta(n: u32, c: u64) -> Rational {
    (1..=n)
        .map(|i| {
            let units = 1u64 << i;
            let value = 1u64 << (i + 1);
            // floor P(c) = c under Q = x^2
            let sold = if value >= c { units.min(c) } else { 0 };
            let w = int((sold * value) as i64) - int((sold * sold) as i64);
            w / pow2(2 * i)
        })
        .sum()
}

/// The fixed random corpus: 200 instances, up to 3 firms, up to 2
/// scenarios per firm, up to 5 units.
pub fn corpus() -> Vec<MarketInstance> {
    (0..200u64)
        .map(|seed| {
            let mut spec = RandomSpec::new(seed, 1 + (seed % 3) as usize, 1 + ((seed / 3) % 2) as usize, 5);
            spec.value_range = (1, 10);
            spec.cost_kind = [CostKind::Quadratic, CostKind::Linear, CostKind::Convex][((seed / 6) % 3) as usize];
            generate::random(&spec).unwrap()
        })
        .collect()
}

/// A spread of parameters for oracle comparison on `m`.
pub fn sample_params(m: &MarketInstance) -> Vec<AuctionParams> {
    let grid = fine_price_grid(m);
    let mut out = Vec::new();
    for cap in [
        Cap::Limited(1),
        Cap::Limited(2),
        Cap::Limited(4),
        Cap::Limited(7),
        Cap::Unbounded,
    ] {
        for (k, floor) in grid.iter().enumerate().step_by(2) {
            for pricing in [PricingRule::LowestWinning, PricingRule::HighestLosing] {
                let ceiling = match grid.get(k + 3) {
                    Some(c) if k % 4 == 0 => Ceiling::Finite(c.clone()),
                    _ => Ceiling::Infinite,
                };
                out.push(AuctionParams::new(cap, floor.clone(), ceiling, pricing).unwrap());
            }
        }
    }
    out
}
