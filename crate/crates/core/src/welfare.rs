//! Exact expected welfare over the scenario distribution, parameter
//! search, and the derived quantities used by the bounds (sell-out
//! probability, median cap, single-buyer welfare).

use std::cmp::Ordering;

use num_traits::{One, Signed, Zero};

use crate::auction::{self, clear_trusted, AuctionParams, Cap, Ceiling, Outcome, PricingRule};
use crate::error::{Error, Result};
use crate::market::{self, CostCurve, MarginalVector, MarketInstance};
use crate::par;
use crate::rational::{self, Rational};

pub const DEFAULT_SCENARIO_LIMIT: u128 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScenarioRow {
    pub prob: Rational,
    pub valuations: Vec<MarginalVector>,
    /// Index of each firm's scenario in product form; `None` for rows of
    /// a joint table.
    pub types: Option<Vec<usize>>,
}

/// The joint distribution as an explicit list of rows, with the cost
/// curve alongside so every evaluation needs only the table.
#[derive(Clone, Debug)]
pub struct ScenarioTable {
    pub rows: Vec<ScenarioRow>,
    pub cost: CostCurve,
    product_form: bool,
}

/// Cartesian product of the firms' scenario lists (or the joint table).
pub fn enumerate_scenarios(market: &MarketInstance, limit: u128) -> Result<ScenarioTable> {
    if let Some(joint) = &market.joint {
        let size = joint.len() as u128;
        if size > limit {
            return Err(Error::ScenarioExplosion { size, limit });
        }
        let rows = joint
            .iter()
            .map(|r| ScenarioRow {
                prob: r.prob.clone(),
                valuations: r.valuations.clone(),
                types: None,
            })
            .collect();
        return Ok(ScenarioTable {
            rows,
            cost: market.cost.clone(),
            product_form: false,
        });
    }

    let size = market
        .firms
        .iter()
        .try_fold(1u128, |acc, f| acc.checked_mul(f.scenarios.len() as u128))
        .unwrap_or(u128::MAX);
    if size > limit {
        return Err(Error::ScenarioExplosion { size, limit });
    }

    let mut rows = vec![ScenarioRow {
        prob: Rational::one(),
        valuations: Vec::new(),
        types: Some(Vec::new()),
    }];
    for firm in &market.firms {
        let mut next = Vec::with_capacity(rows.len() * firm.scenarios.len());
        for row in &rows {
            for (t, scenario) in firm.scenarios.iter().enumerate() {
                let mut valuations = row.valuations.clone();
                valuations.push(scenario.valuation.clone());
                let mut types = row.types.clone().unwrap_or_default();
                types.push(t);
                next.push(ScenarioRow {
                    prob: &row.prob * &scenario.prob,
                    valuations,
                    types: Some(types),
                });
            }
        }
        rows = next;
    }
    if market.firms.is_empty() {
        rows.clear();
    }
    Ok(ScenarioTable {
        rows,
        cost: market.cost.clone(),
        product_form: true,
    })
}

impl ScenarioTable {
    pub fn is_product_form(&self) -> bool {
        self.product_form
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn num_firms(&self) -> usize {
        self.rows.first().map_or(0, |r| r.valuations.len())
    }

    fn sum_rows<F>(&self, per_row: F) -> Result<Rational>
    where
        F: Fn(&ScenarioRow) -> Result<Rational> + Sync + Send,
    {
        let terms = par::try_map_collect(&self.rows, |row| per_row(row).map(|value| &row.prob * value))?;
        Ok(terms.into_iter().sum())
    }

    /// Truthful outcome in every row.
    pub fn outcomes(&self, params: &AuctionParams) -> Result<Vec<Outcome>> {
        params.validate()?;
        par::try_map_collect(&self.rows, |row| {
            auction::outcome_from(clear_trusted(params, &row.valuations), &self.cost, &row.valuations)
        })
    }

    pub fn row_welfare(&self, params: &AuctionParams, row: &ScenarioRow) -> Result<Rational> {
        let clearing = clear_trusted(params, &row.valuations);
        market::welfare(&row.valuations, &clearing.allocation, &self.cost)
    }

    /// `W(M)`: expected welfare under truthful bidding.
    pub fn expected_welfare(&self, params: &AuctionParams) -> Result<Rational> {
        params.validate()?;
        self.sum_rows(|row| self.row_welfare(params, row))
    }

    pub fn expected_revenue(&self, params: &AuctionParams) -> Result<Rational> {
        params.validate()?;
        self.sum_rows(|row| {
            let c = clear_trusted(params, &row.valuations);
            Ok(&c.unit_price * rational::from_usize(c.total()))
        })
    }

    /// Total truthful demand at `price` in each row.
    pub fn total_demand(&self, row: &ScenarioRow, price: &Rational) -> usize {
        row.valuations.iter().map(|v| v.demand(price)).sum()
    }

    /// `Pr[sum_i d_i(floor) >= C]`.
    pub fn sell_out_probability(&self, params: &AuctionParams) -> Result<Rational> {
        let cap = match params.cap {
            Cap::Limited(c) => c,
            Cap::Unbounded => return Err(Error::UnboundedCap),
        };
        Ok(self
            .rows
            .iter()
            .filter(|row| self.total_demand(row, &params.floor) >= cap)
            .map(|row| row.prob.clone())
            .sum())
    }

    /// `Pr[d >= c]` at `floor`, for `c = 0..=max demand`.
    pub fn demand_tail(&self, floor: &Rational) -> Vec<Rational> {
        let demands: Vec<usize> = self.rows.iter().map(|r| self.total_demand(r, floor)).collect();
        let max = demands.iter().copied().max().unwrap_or(0);
        let mut mass = vec![Rational::zero(); max + 1];
        for (row, &d) in self.rows.iter().zip(&demands) {
            mass[d] += &row.prob;
        }
        let mut tail = vec![Rational::zero(); max + 1];
        let mut acc = Rational::zero();
        for c in (0..=max).rev() {
            acc += &mass[c];
            tail[c] = acc.clone();
        }
        tail
    }

    /// Largest `C` with `Pr[d(V) >= C] >= threshold` at `floor`; 0 if none.
    pub fn c_med(&self, floor: &Rational, threshold: &Rational) -> Result<usize> {
        if !threshold.is_positive() || *threshold > Rational::one() {
            return Err(Error::InvalidParams(format!(
                "threshold {} must lie in (0, 1]",
                rational::to_exact(threshold)
            )));
        }
        let tail = self.demand_tail(floor);
        Ok((1..tail.len()).rev().find(|&c| tail[c] >= *threshold).unwrap_or(0))
    }

    /// `W^(1)`: expected best welfare from serving a single firm.
    pub fn single_buyer_expected(&self) -> Result<Rational> {
        self.sum_rows(|row| Ok(auction::single_buyer_mechanism(&row.valuations, &self.cost)?.welfare))
    }

    /// Expected welfare of the per-row optimal allocation.
    pub fn first_best_expected(&self) -> Result<Rational> {
        self.sum_rows(|row| first_best(&row.valuations, &self.cost).map(|(_, w)| w))
    }

    /// Largest count of positive marginals in any row.
    pub fn max_total_demand(&self) -> usize {
        self.rows
            .iter()
            .map(|r| r.valuations.iter().map(MarginalVector::positive_count).sum())
            .max()
            .unwrap_or(0)
    }

    /// Default cap search bound, at least 1.
    pub fn default_cap_limit(&self) -> usize {
        self.max_total_demand().max(1)
    }

    /// `W(M(C))` for `C = 1..=cap_limit`.
    pub fn safe_welfare_table(&self, cap_limit: usize) -> Result<Vec<(usize, Rational)>> {
        let caps: Vec<usize> = (1..=cap_limit).collect();
        par::try_map_collect(&caps, |&c| {
            let params = auction::make_safe_auction(c, &self.cost)?;
            Ok((c, self.expected_welfare(&params)?))
        })
    }

    /// Exhaustive search over cap, floor and (optionally) ceiling.
    pub fn optimize_cap_and_price(
        &self,
        prices: &[Rational],
        allow_ceiling: bool,
        cap_limit: Option<usize>,
    ) -> Result<OptResult> {
        let cap_limit = cap_limit.unwrap_or_else(|| self.default_cap_limit());
        let max_cap = if allow_ceiling { cap_limit + 1 } else { cap_limit };
        let mut candidates = Vec::new();
        for cap in 1..=max_cap {
            for floor in prices {
                let mut ceilings = vec![Ceiling::Infinite];
                if allow_ceiling {
                    ceilings.extend(prices.iter().filter(|p| *p > floor).cloned().map(Ceiling::Finite));
                }
                for ceiling in ceilings {
                    candidates.push(AuctionParams {
                        cap: Cap::Limited(cap),
                        floor: floor.clone(),
                        ceiling,
                        pricing: PricingRule::default(),
                    });
                }
            }
        }
        self.optimize_over(candidates)
    }

    /// Best safe-price auction `M(C)` for `C = 1..=cap_limit`.
    pub fn optimize_safe(&self, cap_limit: Option<usize>) -> Result<OptResult> {
        let cap_limit = cap_limit.unwrap_or_else(|| self.default_cap_limit());
        let candidates = (1..=cap_limit)
            .map(|c| auction::make_safe_auction(c, &self.cost))
            .collect::<Result<Vec<_>>>()?;
        self.optimize_over(candidates)
    }

    pub fn optimize_over(&self, candidates: Vec<AuctionParams>) -> Result<OptResult> {
        let table: Vec<CandidateWelfare> = par::try_map_collect(&candidates, |params| {
            Ok(CandidateWelfare {
                welfare: self.expected_welfare(params)?,
                params: params.clone(),
            })
        })?;
        let best = table
            .iter()
            .max_by(|a, b| preference(a, b))
            .cloned()
            .ok_or_else(|| Error::InvalidParams("empty search space".into()))?;
        Ok(OptResult {
            params: best.params,
            expected_welfare: best.welfare,
            search_space: table.len(),
            table,
        })
    }
}

/// Higher welfare wins; then smaller cap, larger floor, larger ceiling.
fn preference(a: &CandidateWelfare, b: &CandidateWelfare) -> Ordering {
    a.welfare
        .cmp(&b.welfare)
        .then_with(|| b.params.cap.cmp(&a.params.cap))
        .then_with(|| a.params.floor.cmp(&b.params.floor))
        .then_with(|| a.params.ceiling.cmp(&b.params.ceiling))
}

/// Optimal total quantity for one row and its welfare, smallest maximiser.
pub fn first_best(valuations: &[MarginalVector], cost: &CostCurve) -> Result<(usize, Rational)> {
    let mut all: Vec<&Rational> = valuations
        .iter()
        .flat_map(|v| v.marginals().iter().filter(|m| m.is_positive()))
        .collect();
    all.sort_unstable_by(|a, b| b.cmp(a));
    let mut welfare = Rational::zero();
    for (x, m) in all.into_iter().enumerate() {
        let gain = m - cost.marginal_cost(x + 1)?;
        if !gain.is_positive() {
            return Ok((x, welfare));
        }
        welfare += gain;
    }
    let x = valuations.iter().map(MarginalVector::positive_count).sum();
    Ok((x, welfare))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateWelfare {
    pub params: AuctionParams,
    pub welfare: Rational,
}

#[derive(Clone, Debug)]
pub struct OptResult {
    pub params: AuctionParams,
    pub expected_welfare: Rational,
    pub search_space: usize,
    pub table: Vec<CandidateWelfare>,
}

pub fn expected_welfare(market: &MarketInstance, params: &AuctionParams) -> Result<Rational> {
    enumerate_scenarios(market, DEFAULT_SCENARIO_LIMIT)?.expected_welfare(params)
}

pub fn optimize_cap_and_price(
    market: &MarketInstance,
    allow_ceiling: bool,
    cap_limit: Option<usize>,
) -> Result<OptResult> {
    let table = enumerate_scenarios(market, DEFAULT_SCENARIO_LIMIT)?;
    table.optimize_cap_and_price(&auction::price_candidates(market), allow_ceiling, cap_limit)
}

pub fn optimize_safe(market: &MarketInstance, cap_limit: Option<usize>) -> Result<OptResult> {
    enumerate_scenarios(market, DEFAULT_SCENARIO_LIMIT)?.optimize_safe(cap_limit)
}

pub fn sell_out_probability(market: &MarketInstance, params: &AuctionParams) -> Result<Rational> {
    enumerate_scenarios(market, DEFAULT_SCENARIO_LIMIT)?.sell_out_probability(params)
}

pub fn c_med(market: &MarketInstance, floor: &Rational, threshold: &Rational) -> Result<usize> {
    enumerate_scenarios(market, DEFAULT_SCENARIO_LIMIT)?.c_med(floor, threshold)
}

pub fn single_buyer_expected(market: &MarketInstance) -> Result<Rational> {
    enumerate_scenarios(market, DEFAULT_SCENARIO_LIMIT)?.single_buyer_expected()
}

pub fn first_best_expected(market: &MarketInstance) -> Result<Rational> {
    enumerate_scenarios(market, DEFAULT_SCENARIO_LIMIT)?.first_best_expected()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;
    use crate::market::FirmDistribution;
    use crate::rational::{int, one_minus_inv_e, pow2, ratio};

    fn mv(xs: &[i64]) -> MarginalVector {
        MarginalVector::from_ints(xs).unwrap()
    }

    fn two_level_firm() -> MarketInstance {
        // demand 3 w.p. 1/2, demand 1 w.p. 1/2 at any floor in (0, 4]
        MarketInstance::new(
            "two-level",
            vec![FirmDistribution::new(vec![
                (ratio(1, 2), mv(&[5, 5, 4])),
                (ratio(1, 2), mv(&[6])),
            ])],
            CostCurve::quadratic(int(1)),
        )
    }

    fn beta(n: u32) -> Rational {
        (Rational::one() - Rational::one() / pow2(2 * n)) / int(3)
    }

    #[test]
    fn enumeration_sizes_and_probabilities() {
        let ex = generate::demand_reduction();
        let table = enumerate_scenarios(&ex, 10).unwrap();
        assert_eq!(table.len(), 1);
        assert_eq!(table.rows[0].prob, int(1));

        let firm = FirmDistribution::new(vec![(ratio(1, 2), mv(&[1])), (ratio(1, 2), mv(&[2]))]);
        let m = MarketInstance::new("2x2", vec![firm.clone(), firm], CostCurve::quadratic(int(1)));
        let table = enumerate_scenarios(&m, 10).unwrap();
        assert_eq!(table.len(), 4);
        assert!(table.rows.iter().all(|r| r.prob == ratio(1, 4)));
        assert!(matches!(
            enumerate_scenarios(&m, 3),
            Err(Error::ScenarioExplosion { size: 4, limit: 3 })
        ));

        let log = generate::logscale(5).unwrap();
        let table = enumerate_scenarios(&log, 10).unwrap();
        assert_eq!(table.len(), 5);
        for (i, row) in table.rows.iter().enumerate() {
            let i = i as u32 + 1;
            assert_eq!(row.prob, Rational::one() / (beta(5) * pow2(2 * i)));
        }
        assert_eq!(beta(5), (Rational::one() - Rational::one() / pow2(10)) / int(3));
    }

    #[test]
    fn expected_welfare_examples() {
        let ex = generate::demand_reduction();
        assert_eq!(
            expected_welfare(&ex, &AuctionParams::capped(2, int(0)).unwrap()).unwrap(),
            int(2)
        );
        assert_eq!(
            expected_welfare(&ex, &AuctionParams::capped(2, int(11)).unwrap()).unwrap(),
            int(0)
        );

        let log = generate::logscale(5).unwrap();
        let posted = AuctionParams::posted(int(1)).unwrap();
        assert_eq!(expected_welfare(&log, &posted).unwrap(), int(5) / beta(5));
    }

    #[test]
    fn optimizer_examples() {
        let ex = generate::demand_reduction();
        let opt = optimize_cap_and_price(&ex, true, None).unwrap();
        assert_eq!(opt.expected_welfare, int(2));
        assert!(opt.table.iter().all(|c| c.welfare <= opt.expected_welfare));

        let hopeless = MarketInstance::deterministic("low", vec![mv(&[3, 2])], CostCurve::linear(int(4)));
        assert_eq!(
            optimize_cap_and_price(&hopeless, true, None).unwrap().expected_welfare,
            int(0)
        );

        let log = generate::logscale(5).unwrap();
        let opt = optimize_cap_and_price(&log, false, None).unwrap();
        assert_eq!(opt.expected_welfare, int(5) / beta(5));
        assert_eq!(opt.params.cap, Cap::Limited(32));
        assert_eq!(opt.params.floor, int(4));
    }

    #[test]
    fn optimizer_tie_break_is_smallest_cap_then_largest_floor() {
        let ex = generate::demand_reduction();
        let opt = optimize_cap_and_price(&ex, false, None).unwrap();
        assert_eq!(opt.params.cap, Cap::Limited(2));
        assert_eq!(opt.params.floor, int(10));
        assert_eq!(opt.params.ceiling, Ceiling::Infinite);
    }

    #[test]
    fn safe_optimizer_examples() {
        let single = MarketInstance::deterministic("tens", vec![mv(&[10, 10])], CostCurve::linear(int(9)));
        let opt = optimize_safe(&single, None).unwrap();
        assert_eq!(opt.params.cap, Cap::Limited(2));
        assert_eq!(opt.expected_welfare, int(2));

        let empty = MarketInstance::deterministic("empty", vec![MarginalVector::empty()], CostCurve::quadratic(int(1)));
        let opt = optimize_safe(&empty, Some(4)).unwrap();
        assert!(opt.table.iter().all(|c| c.welfare.is_zero()));
    }

    #[test]
    fn sell_out_examples() {
        let ex = generate::demand_reduction();
        let p = |c| AuctionParams::capped(c, int(0)).unwrap();
        assert_eq!(sell_out_probability(&ex, &p(2)).unwrap(), int(1));
        assert_eq!(sell_out_probability(&ex, &p(5)).unwrap(), int(0));
        assert_eq!(sell_out_probability(&two_level_firm(), &p(2)).unwrap(), ratio(1, 2));
        assert!(sell_out_probability(&ex, &AuctionParams::posted(int(0)).unwrap()).is_err());
    }

    #[test]
    fn c_med_examples() {
        let ex = generate::demand_reduction();
        assert_eq!(c_med(&ex, &int(0), &int(1)).unwrap(), 4);
        assert_eq!(c_med(&ex, &int(0), &one_minus_inv_e()).unwrap(), 4);
        assert_eq!(c_med(&two_level_firm(), &int(1), &one_minus_inv_e()).unwrap(), 1);
        // inclusive boundary: Pr[d >= 3] = 1/2 exactly
        assert_eq!(c_med(&two_level_firm(), &int(1), &ratio(1, 2)).unwrap(), 3);
        assert!(c_med(&ex, &int(0), &int(0)).is_err());
    }

    #[test]
    fn single_buyer_expected_examples() {
        assert_eq!(single_buyer_expected(&generate::demand_reduction()).unwrap(), int(2));
        let log = generate::logscale(5).unwrap();
        assert_eq!(single_buyer_expected(&log).unwrap(), int(5) / beta(5));
        let zero = MarketInstance::deterministic(
            "zero",
            vec![mv(&[0, 0]), MarginalVector::empty()],
            CostCurve::quadratic(int(1)),
        );
        assert_eq!(single_buyer_expected(&zero).unwrap(), int(0));
    }

    #[test]
    fn correlated_table_is_used_verbatim() {
        use crate::market::JointScenario;
        let m = MarketInstance::correlated(
            "corr",
            vec![
                JointScenario {
                    prob: ratio(1, 2),
                    valuations: vec![mv(&[10, 10]), mv(&[6, 1])],
                },
                JointScenario {
                    prob: ratio(1, 2),
                    valuations: vec![mv(&[1]), mv(&[1])],
                },
            ],
            CostCurve::linear(int(9)),
        );
        let table = enumerate_scenarios(&m, 10).unwrap();
        assert!(!table.is_product_form());
        assert_eq!(table.len(), 2);
        let w = table
            .expected_welfare(&AuctionParams::capped(2, int(0)).unwrap())
            .unwrap();
        // second row sells both 1-marginals at cost 18
        assert_eq!(w, ratio(2 - 16, 2));
    }
}
