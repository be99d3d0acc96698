//! Pure grid equilibria under no-overbidding.
//!
//! Each firm reports, per type, a non-increasing vector of bid values drawn
//! from a finite grid. A profile is an equilibrium when no (firm, type)
//! can raise its expected utility by more than `epsilon` with another grid
//! strategy, holding the other firms' type-to-report maps fixed. With one
//! type per firm this is pure Nash; with several it is Bayes-Nash on the
//! grid. Nothing is claimed about reports off the grid.

use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Signed, Zero};

use crate::auction::{clear_trusted, make_safe_auction, AuctionParams, Ceiling, Clearing};
use crate::bounds::{BoundCertificate, Relation};
use crate::error::{Error, Result};
use crate::market::{self, MarginalVector, MarketInstance};
use crate::par;
use crate::rational::{self, from_usize, ratio, Rational};
use crate::welfare::{enumerate_scenarios, DEFAULT_SCENARIO_LIMIT};

pub const DEFAULT_PROFILE_LIMIT: u128 = 200_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OverbidMode {
    /// Reported `V(k)` never exceeds true `V(k)`.
    #[default]
    Aggregate,
    /// Every reported marginal is at most the true marginal.
    Pointwise,
}

#[derive(Clone, Debug)]
pub struct EquilibriumConfig {
    pub epsilon: Rational,
    /// Bound on strategies per firm, profiles, and outcome table rows.
    pub profile_limit: u128,
    pub overbid_mode: OverbidMode,
}

impl Default for EquilibriumConfig {
    fn default() -> Self {
        Self {
            epsilon: Rational::zero(),
            profile_limit: DEFAULT_PROFILE_LIMIT,
            overbid_mode: OverbidMode::default(),
        }
    }
}

/// Reported valuation for every firm and type.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StrategyProfile {
    pub reports: Vec<Vec<MarginalVector>>,
}

impl StrategyProfile {
    pub fn truthful(market: &MarketInstance) -> Result<Self> {
        require_product_form(market)?;
        Ok(Self {
            reports: market
                .firms
                .iter()
                .map(|f| f.scenarios.iter().map(|s| s.valuation.trimmed()).collect())
                .collect(),
        })
    }

    /// One report per firm, for full-information instances.
    pub fn pure(reports: Vec<MarginalVector>) -> Self {
        Self {
            reports: reports.into_iter().map(|r| vec![r]).collect(),
        }
    }

    pub fn report(&self, firm: usize, ty: usize) -> &MarginalVector {
        &self.reports[firm][ty]
    }
}

fn require_product_form(market: &MarketInstance) -> Result<()> {
    if market.is_product_form() {
        Ok(())
    } else {
        Err(Error::NotProductForm)
    }
}

pub fn respects_no_overbidding(truth: &MarginalVector, report: &MarginalVector, mode: OverbidMode) -> bool {
    match mode {
        OverbidMode::Pointwise => report
            .marginals()
            .iter()
            .enumerate()
            .all(|(j, b)| *b <= truth.marginal(j + 1)),
        OverbidMode::Aggregate => {
            let mut reported = Rational::zero();
            let mut actual = Rational::zero();
            report.marginals().iter().enumerate().all(|(j, b)| {
                reported += b;
                actual += truth.marginal(j + 1);
                reported <= actual
            })
        }
    }
}

/// `{0}`, every true marginal, the floor and any finite ceiling; ascending.
pub fn bid_grid(market: &MarketInstance, params: &AuctionParams) -> Vec<Rational> {
    let mut set: BTreeSet<Rational> = market
        .valuations()
        .flat_map(|v| v.marginals().iter().cloned())
        .collect();
    set.insert(Rational::zero());
    set.insert(params.floor.clone());
    if let Ceiling::Finite(p) = &params.ceiling {
        set.insert(p.clone());
    }
    set.into_iter().collect()
}

/// Number of non-increasing sequences of length `<= max_len` over `values`
/// symbols: `binom(values + max_len, max_len)`, saturating.
fn sequence_count(values: usize, max_len: usize) -> u128 {
    let mut count: u128 = 1;
    for k in 1..=max_len as u128 {
        count = match count.checked_mul(values as u128 + k) {
            Some(c) => c / k,
            None => return u128::MAX,
        };
    }
    count
}

/// All non-increasing vectors of positive grid values with length at most
/// `max_len`, shortest first then lexicographically descending.
pub fn strategy_space(grid: &[Rational], max_len: usize, limit: u128) -> Result<Vec<MarginalVector>> {
    let mut values: Vec<&Rational> = grid.iter().filter(|g| g.is_positive()).collect();
    values.sort_unstable_by(|a, b| b.cmp(a));
    values.dedup();
    let size = sequence_count(values.len(), max_len);
    if size > limit {
        return Err(Error::StrategyExplosion { size, limit });
    }
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<(Vec<Rational>, usize)> = vec![(Vec::new(), 0)];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for (seq, start) in &frontier {
            for (k, v) in values.iter().enumerate().skip(*start) {
                let mut s = seq.clone();
                s.push((*v).clone());
                next.push((s, k));
            }
        }
        out.extend(next.iter().map(|(s, _)| s.clone()));
        frontier = next;
    }
    Ok(out.into_iter().map(MarginalVector::from_raw).collect())
}

/// Opponent type combinations for `firm`: (probability, full type vector
/// with `firm`'s own entry left at 0).
fn opponent_rows(market: &MarketInstance, firm: usize) -> Vec<(Rational, Vec<usize>)> {
    let mut rows = vec![(Rational::one(), vec![0; market.firms.len()])];
    for (j, dist) in market.firms.iter().enumerate() {
        if j == firm {
            continue;
        }
        rows = rows
            .into_iter()
            .flat_map(|(p, types)| {
                dist.scenarios.iter().enumerate().map(move |(t, s)| {
                    let mut types = types.clone();
                    types[j] = t;
                    (&p * &s.prob, types)
                })
            })
            .collect();
    }
    rows
}

fn firm_utility(truth: &MarginalVector, clearing: &Clearing, firm: usize) -> Rational {
    let x = clearing.allocation[firm];
    truth.value_at(x) - &clearing.unit_price * from_usize(x)
}

fn check_shape(market: &MarketInstance, profile: &StrategyProfile) -> Result<()> {
    require_product_form(market)?;
    let ok = profile.reports.len() == market.firms.len()
        && profile
            .reports
            .iter()
            .zip(&market.firms)
            .all(|(r, f)| r.len() == f.scenarios.len());
    if !ok {
        return Err(Error::InvalidParams("profile shape does not match the instance".into()));
    }
    for (i, reports) in profile.reports.iter().enumerate() {
        for (t, r) in reports.iter().enumerate() {
            MarginalVector::new(r.marginals().to_vec())
                .map_err(|e| Error::InvalidMarginals(format!("report of firm {i} type {t}: {e}")))?;
        }
    }
    Ok(())
}

fn utility_with(
    market: &MarketInstance,
    params: &AuctionParams,
    profile: &StrategyProfile,
    firm: usize,
    ty: usize,
    own: &MarginalVector,
    opponents: &[(Rational, Vec<usize>)],
) -> Rational {
    let truth = &market.firms[firm].scenarios[ty].valuation;
    opponents
        .iter()
        .map(|(p, types)| {
            let bids: Vec<MarginalVector> = (0..market.firms.len())
                .map(|j| {
                    if j == firm {
                        own.clone()
                    } else {
                        profile.report(j, types[j]).clone()
                    }
                })
                .collect();
            p * firm_utility(truth, &clear_trusted(params, &bids), firm)
        })
        .sum()
}

/// Expected utility of `firm` with type `ty`, over the other firms' types.
pub fn utility(
    market: &MarketInstance,
    params: &AuctionParams,
    profile: &StrategyProfile,
    firm: usize,
    ty: usize,
) -> Result<Rational> {
    params.validate()?;
    check_shape(market, profile)?;
    let opponents = opponent_rows(market, firm);
    Ok(utility_with(
        market,
        params,
        profile,
        firm,
        ty,
        profile.report(firm, ty),
        &opponents,
    ))
}

/// Expected welfare (at true values) when every firm reports per `profile`.
pub fn profile_welfare(market: &MarketInstance, params: &AuctionParams, profile: &StrategyProfile) -> Result<Rational> {
    Ok(scenario_welfares(market, params, profile)?
        .into_iter()
        .map(|(p, w)| p * w)
        .sum())
}

/// `(probability, welfare)` for every joint type realisation.
pub fn scenario_welfares(
    market: &MarketInstance,
    params: &AuctionParams,
    profile: &StrategyProfile,
) -> Result<Vec<(Rational, Rational)>> {
    params.validate()?;
    check_shape(market, profile)?;
    let table = enumerate_scenarios(market, DEFAULT_SCENARIO_LIMIT)?;
    table
        .rows
        .iter()
        .map(|row| {
            let types = row.types.as_ref().expect("product-form rows carry types");
            let bids: Vec<MarginalVector> = types
                .iter()
                .enumerate()
                .map(|(j, &t)| profile.report(j, t).clone())
                .collect();
            let c = clear_trusted(params, &bids);
            Ok((
                row.prob.clone(),
                market::welfare(&row.valuations, &c.allocation, &market.cost)?,
            ))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeResponse {
    /// A utility-maximising grid strategy (first in strategy order).
    pub strategy: MarginalVector,
    pub best_utility: Rational,
    pub current_utility: Rational,
    pub gain: Rational,
}

/// Exhaustive grid best response of `firm`, one entry per type.
pub fn best_response(
    market: &MarketInstance,
    params: &AuctionParams,
    profile: &StrategyProfile,
    firm: usize,
    config: &EquilibriumConfig,
) -> Result<Vec<TypeResponse>> {
    params.validate()?;
    check_shape(market, profile)?;
    let grid = bid_grid(market, params);
    let dist = &market.firms[firm];
    let max_len = dist
        .scenarios
        .iter()
        .map(|s| s.valuation.positive_count())
        .max()
        .unwrap_or(0);
    let space = strategy_space(&grid, max_len, config.profile_limit)?;
    let opponents = opponent_rows(market, firm);
    dist.scenarios
        .iter()
        .enumerate()
        .map(|(t, scenario)| {
            let current = utility_with(market, params, profile, firm, t, profile.report(firm, t), &opponents);
            let mut best: Option<(MarginalVector, Rational)> = None;
            for s in space
                .iter()
                .filter(|s| respects_no_overbidding(&scenario.valuation, s, config.overbid_mode))
            {
                let u = utility_with(market, params, profile, firm, t, s, &opponents);
                if best.as_ref().is_none_or(|(_, b)| u > *b) {
                    best = Some((s.clone(), u));
                }
            }
            let (strategy, best_utility) = best.expect("the empty report is always allowed");
            let gain = (&best_utility - &current).max(Rational::zero());
            Ok(TypeResponse {
                strategy,
                best_utility,
                current_utility: current,
                gain,
            })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct EquilibriumEntry {
    pub profile: StrategyProfile,
    pub welfare: Rational,
    /// Lowest welfare over joint type realisations.
    pub min_scenario_welfare: Rational,
    /// Expected utility per firm and type.
    pub utilities: Vec<Vec<Rational>>,
    /// Largest best-response gain over all (firm, type).
    pub max_gain: Rational,
}

#[derive(Clone, Debug)]
pub struct EquilibriumReport {
    pub params: AuctionParams,
    pub epsilon: Rational,
    pub overbid_mode: OverbidMode,
    pub grid: Vec<Rational>,
    pub profiles_examined: u128,
    /// Canonical order: lexicographic in per-slot strategy index.
    pub equilibria: Vec<EquilibriumEntry>,
}

impl EquilibriumReport {
    pub fn worst_welfare(&self) -> Option<&Rational> {
        self.equilibria.iter().map(|e| &e.welfare).min()
    }

    pub fn best_welfare(&self) -> Option<&Rational> {
        self.equilibria.iter().map(|e| &e.welfare).max()
    }

    pub fn contains(&self, profile: &StrategyProfile) -> bool {
        self.equilibria.iter().any(|e| e.profile == *profile)
    }
}

/// The game on the grid, with every joint report's clearing precomputed.
struct GridGame<'a> {
    market: &'a MarketInstance,
    /// Per firm: distinct strategies allowed for at least one type.
    strategies: Vec<Vec<MarginalVector>>,
    /// Per firm and type: indices into `strategies[firm]`.
    allowed: Vec<Vec<Vec<usize>>>,
    /// Clearing for each joint report, mixed radix over `strategies`.
    outcomes: Vec<Clearing>,
    radix: Vec<usize>,
    opponents: Vec<Vec<(Rational, Vec<usize>)>>,
    /// Flat (firm, type) slot list.
    slots: Vec<(usize, usize)>,
}

impl<'a> GridGame<'a> {
    fn build(market: &'a MarketInstance, params: &AuctionParams, config: &EquilibriumConfig) -> Result<Self> {
        let grid = bid_grid(market, params);
        let limit = config.profile_limit;
        let mut strategies = Vec::new();
        let mut allowed = Vec::new();
        for dist in &market.firms {
            let max_len = dist
                .scenarios
                .iter()
                .map(|s| s.valuation.positive_count())
                .max()
                .unwrap_or(0);
            let space = strategy_space(&grid, max_len, limit)?;
            let per_type: Vec<Vec<usize>> = dist
                .scenarios
                .iter()
                .map(|s| {
                    (0..space.len())
                        .filter(|&k| respects_no_overbidding(&s.valuation, &space[k], config.overbid_mode))
                        .collect()
                })
                .collect();
            let used: BTreeSet<usize> = per_type.iter().flatten().copied().collect();
            let remap: HashMap<usize, usize> = used.iter().enumerate().map(|(new, &old)| (old, new)).collect();
            strategies.push(used.iter().map(|&k| space[k].clone()).collect::<Vec<_>>());
            allowed.push(
                per_type
                    .into_iter()
                    .map(|ks| ks.into_iter().map(|k| remap[&k]).collect())
                    .collect::<Vec<Vec<usize>>>(),
            );
        }

        let profiles = allowed
            .iter()
            .flatten()
            .try_fold(1u128, |acc, ks| acc.checked_mul(ks.len() as u128))
            .unwrap_or(u128::MAX);
        let table = strategies
            .iter()
            .try_fold(1u128, |acc, s| acc.checked_mul(s.len() as u128))
            .unwrap_or(u128::MAX);
        let size = profiles.max(table);
        if size > limit {
            return Err(Error::StrategyExplosion { size, limit });
        }

        let radix: Vec<usize> = strategies.iter().map(Vec::len).collect();
        let tuples: Vec<usize> = (0..table as usize).collect();
        let outcomes = par::map_collect(&tuples, |&code| {
            let bids: Vec<MarginalVector> = decode(code, &radix)
                .into_iter()
                .enumerate()
                .map(|(j, k)| strategies[j][k].clone())
                .collect();
            clear_trusted(params, &bids)
        });
        let opponents = (0..market.firms.len()).map(|i| opponent_rows(market, i)).collect();
        let slots = market
            .firms
            .iter()
            .enumerate()
            .flat_map(|(i, f)| (0..f.scenarios.len()).map(move |t| (i, t)))
            .collect();
        Ok(Self {
            market,
            strategies,
            allowed,
            outcomes,
            radix,
            opponents,
            slots,
        })
    }

    fn profile_count(&self) -> u128 {
        self.slots
            .iter()
            .map(|&(i, t)| self.allowed[i][t].len() as u128)
            .product()
    }

    /// Strategy index (into `strategies[firm]`) for each slot.
    fn decode_profile(&self, mut code: u128) -> Vec<Vec<usize>> {
        let mut choice: Vec<Vec<usize>> = self.allowed.iter().map(|f| vec![0; f.len()]).collect();
        for &(i, t) in self.slots.iter().rev() {
            let n = self.allowed[i][t].len() as u128;
            choice[i][t] = self.allowed[i][t][(code % n) as usize];
            code /= n;
        }
        choice
    }

    fn encode(&self, picks: impl Iterator<Item = usize>) -> usize {
        picks.zip(&self.radix).fold(0, |acc, (k, r)| acc * r + k)
    }

    fn utility(&self, choice: &[Vec<usize>], firm: usize, ty: usize, own: usize) -> Rational {
        let truth = &self.market.firms[firm].scenarios[ty].valuation;
        self.opponents[firm]
            .iter()
            .map(|(p, types)| {
                let code =
                    self.encode((0..self.radix.len()).map(|j| if j == firm { own } else { choice[j][types[j]] }));
                p * firm_utility(truth, &self.outcomes[code], firm)
            })
            .sum()
    }

    /// Utilities per slot and the largest gain, or `None` once some gain
    /// exceeds `epsilon`.
    fn check(&self, choice: &[Vec<usize>], epsilon: &Rational) -> Option<(Vec<Vec<Rational>>, Rational)> {
        let mut utilities: Vec<Vec<Rational>> = choice.iter().map(|f| vec![Rational::zero(); f.len()]).collect();
        let mut max_gain = Rational::zero();
        for &(i, t) in &self.slots {
            let current = self.utility(choice, i, t, choice[i][t]);
            for &k in &self.allowed[i][t] {
                let gain = self.utility(choice, i, t, k) - &current;
                if gain > *epsilon {
                    return None;
                }
                if gain > max_gain {
                    max_gain = gain;
                }
            }
            utilities[i][t] = current;
        }
        Some((utilities, max_gain))
    }

    fn profile(&self, choice: &[Vec<usize>]) -> StrategyProfile {
        StrategyProfile {
            reports: choice
                .iter()
                .enumerate()
                .map(|(i, ks)| ks.iter().map(|&k| self.strategies[i][k].clone()).collect())
                .collect(),
        }
    }
}

fn decode(mut code: usize, radix: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radix.len()];
    for (slot, &r) in out.iter_mut().zip(radix).rev() {
        *slot = code % r;
        code /= r;
    }
    out
}

/// Every grid profile in which no (firm, type) gains more than `epsilon`.
pub fn find_grid_equilibria(
    market: &MarketInstance,
    params: &AuctionParams,
    config: &EquilibriumConfig,
) -> Result<EquilibriumReport> {
    params.validate()?;
    require_product_form(market)?;
    if config.epsilon.is_negative() {
        return Err(Error::InvalidParams("epsilon must be non-negative".into()));
    }
    let game = GridGame::build(market, params, config)?;
    let count = game.profile_count();
    let found = par::filter_map_collect(count as usize, |code| {
        let choice = game.decode_profile(code as u128);
        game.check(&choice, &config.epsilon).map(|(u, g)| (choice, u, g))
    });
    let equilibria = found
        .into_iter()
        .map(|(choice, utilities, max_gain)| {
            let profile = game.profile(&choice);
            let per_row = scenario_welfares(market, params, &profile)?;
            let welfare = per_row.iter().map(|(p, w)| p * w).sum();
            let min_scenario_welfare = per_row.into_iter().map(|(_, w)| w).min().unwrap_or_else(Rational::zero);
            Ok(EquilibriumEntry {
                profile,
                welfare,
                min_scenario_welfare,
                utilities,
                max_gain,
            })
        })
        .collect::<Result<_>>()?;
    Ok(EquilibriumReport {
        params: params.clone(),
        epsilon: config.epsilon.clone(),
        overbid_mode: config.overbid_mode,
        grid: bid_grid(market, params),
        profiles_examined: count,
        equilibria,
    })
}

/// `1 / 3.15`.
pub fn poa_factor() -> Rational {
    ratio(20, 63)
}

/// Worst equilibrium welfare of `M(C)` against `W(M(C)) / 3.15`.
///
/// Not applicable when no equilibrium was found; vacuous when
/// `W(M(C)) <= 0`.
pub fn check_poa_bound(market: &MarketInstance, cap: usize, report: &EquilibriumReport) -> Result<BoundCertificate> {
    let safe = make_safe_auction(cap, &market.cost)?.with_pricing(report.params.pricing);
    if safe != report.params {
        return Err(Error::InvalidParams(format!(
            "report is for {}, not the safe-price auction {}",
            report.params, safe
        )));
    }
    let name = "equilibrium-welfare-vs-safe-price";
    let benchmark = enumerate_scenarios(market, DEFAULT_SCENARIO_LIMIT)?.expected_welfare(&safe)?;
    let Some(worst) = report.worst_welfare() else {
        return Ok(BoundCertificate::not_applicable(name, "no grid equilibrium found"));
    };
    let rhs = &benchmark * poa_factor();
    let mut cert = BoundCertificate::check(name, worst.clone(), Relation::Ge, rhs)
        .with_witness("C", cap.to_string())
        .with_witness("W(M(C))", rational::to_exact(&benchmark))
        .with_witness("equilibria", report.equilibria.len().to_string());
    if benchmark.is_positive() {
        cert = cert.with_witness("ratio", rational::to_exact(&(worst / &benchmark)));
    } else {
        cert.vacuous = true;
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auction::{Cap, PricingRule};
    use crate::generate;
    use crate::market::{CostCurve, FirmDistribution};
    use crate::rational::int;

    fn mv(xs: &[i64]) -> MarginalVector {
        MarginalVector::from_ints(xs).unwrap()
    }

    fn highest_losing(cap: usize, floor: i64) -> AuctionParams {
        AuctionParams::capped(cap, int(floor))
            .unwrap()
            .with_pricing(PricingRule::HighestLosing)
    }

    fn deviation() -> StrategyProfile {
        StrategyProfile::pure(vec![mv(&[10, 1]), mv(&[6, 1])])
    }

    #[test]
    fn demand_reduction_utilities() {
        let m = generate::demand_reduction();
        let p = highest_losing(2, 0);
        let truthful = StrategyProfile::truthful(&m).unwrap();
        assert_eq!(utility(&m, &p, &truthful, 0, 0).unwrap(), int(8));
        assert_eq!(utility(&m, &p, &deviation(), 0, 0).unwrap(), int(9));
        assert_eq!(profile_welfare(&m, &p, &truthful).unwrap(), int(2));
        assert_eq!(profile_welfare(&m, &p, &deviation()).unwrap(), int(-2));
        // firm 2 wins nothing under truthful bidding
        assert_eq!(utility(&m, &p, &truthful, 1, 0).unwrap(), int(0));
    }

    #[test]
    fn lowest_winning_utilities_differ() {
        let m = generate::demand_reduction();
        let p = AuctionParams::capped(2, int(0)).unwrap();
        assert_eq!(
            utility(&m, &p, &StrategyProfile::truthful(&m).unwrap(), 0, 0).unwrap(),
            int(0)
        );
        assert_eq!(utility(&m, &p, &deviation(), 0, 0).unwrap(), int(4));
    }

    #[test]
    fn grid_examples() {
        let m = generate::demand_reduction();
        assert_eq!(
            bid_grid(&m, &highest_losing(2, 0)),
            vec![int(0), int(1), int(6), int(10)]
        );
        let solo = MarketInstance::deterministic("solo", vec![mv(&[5])], CostCurve::quadratic(int(1)));
        assert_eq!(
            bid_grid(&solo, &AuctionParams::capped(1, int(2)).unwrap()),
            vec![int(0), int(2), int(5)]
        );
        let high = bid_grid(&solo, &AuctionParams::capped(1, int(7)).unwrap());
        assert!(high.contains(&int(7)));
    }

    #[test]
    fn strategy_space_counts_multisets() {
        let grid = [int(0), int(1), int(6), int(10)];
        let space = strategy_space(&grid, 2, 1000).unwrap();
        assert_eq!(space.len(), 10);
        assert_eq!(space.len() as u128, sequence_count(3, 2));
        assert!(space
            .iter()
            .all(|s| MarginalVector::new(s.marginals().to_vec()).is_ok()));
        assert!(matches!(
            strategy_space(&grid, 2, 9),
            Err(Error::StrategyExplosion { size: 10, limit: 9 })
        ));
    }

    #[test]
    fn no_overbidding_modes() {
        let truth = mv(&[10, 1]);
        assert!(respects_no_overbidding(&truth, &truth, OverbidMode::Aggregate));
        assert!(respects_no_overbidding(&truth, &mv(&[6, 5]), OverbidMode::Aggregate));
        assert!(!respects_no_overbidding(&truth, &mv(&[6, 5]), OverbidMode::Pointwise));
        assert!(!respects_no_overbidding(&truth, &mv(&[11]), OverbidMode::Aggregate));
        assert!(!respects_no_overbidding(&truth, &mv(&[6, 6]), OverbidMode::Aggregate));
    }

    #[test]
    fn best_response_to_truthful_opponent_is_demand_reduction() {
        let m = generate::demand_reduction();
        let p = highest_losing(2, 0);
        let truthful = StrategyProfile::truthful(&m).unwrap();
        let br = best_response(&m, &p, &truthful, 0, &EquilibriumConfig::default()).unwrap();
        assert_eq!(br[0].best_utility, int(9));
        assert_eq!(br[0].gain, int(1));
        assert_eq!(br[0].strategy.marginal(1), int(10));
    }

    #[test]
    fn demand_reduction_equilibrium_is_found() {
        let m = generate::demand_reduction();
        let report = find_grid_equilibria(&m, &highest_losing(2, 0), &EquilibriumConfig::default()).unwrap();
        assert!(report.contains(&deviation()));
        assert_eq!(report.worst_welfare(), Some(&int(-2)));
        for e in &report.equilibria {
            for firm in 0..2 {
                let br = best_response(&m, &report.params, &e.profile, firm, &EquilibriumConfig::default()).unwrap();
                assert!(br.iter().all(|r| r.gain.is_zero()), "{:?}", e.profile);
            }
        }
    }

    #[test]
    fn safe_floor_removes_negative_equilibria() {
        let m = generate::demand_reduction();
        let safe = make_safe_auction(2, &m.cost)
            .unwrap()
            .with_pricing(PricingRule::HighestLosing);
        assert_eq!(safe.floor, int(9));
        let report = find_grid_equilibria(&m, &safe, &EquilibriumConfig::default()).unwrap();
        assert!(report.contains(&StrategyProfile::truthful(&m).unwrap()));
        assert!(report.equilibria.iter().all(|e| !e.welfare.is_negative()));
        let cert = check_poa_bound(&m, 2, &report).unwrap();
        assert!(cert.passed());
    }

    #[test]
    fn solo_firm_truthful_is_an_equilibrium() {
        let m = MarketInstance::deterministic("solo", vec![mv(&[5, 3])], CostCurve::quadratic(int(1)));
        let p = highest_losing(3, 0);
        let report = find_grid_equilibria(&m, &p, &EquilibriumConfig::default()).unwrap();
        assert!(report.contains(&StrategyProfile::truthful(&m).unwrap()));
    }

    #[test]
    fn floor_above_everything_gives_zero_welfare() {
        let m = generate::demand_reduction();
        let p = highest_losing(2, 11);
        let report = find_grid_equilibria(&m, &p, &EquilibriumConfig::default()).unwrap();
        assert!(!report.equilibria.is_empty());
        assert!(report.equilibria.iter().all(|e| e.welfare.is_zero()));
        let solo = MarketInstance::deterministic("solo", vec![mv(&[5])], CostCurve::quadratic(int(1)));
        let br = best_response(
            &solo,
            &AuctionParams::capped(1, int(6)).unwrap(),
            &StrategyProfile::truthful(&solo).unwrap(),
            0,
            &EquilibriumConfig::default(),
        )
        .unwrap();
        assert_eq!(br[0].best_utility, int(0));
    }

    #[test]
    fn bayesian_types_are_handled_per_type() {
        let m = MarketInstance::new(
            "types",
            vec![
                FirmDistribution::new(vec![(ratio(1, 2), mv(&[4])), (ratio(1, 2), mv(&[2]))]),
                FirmDistribution::point_mass(mv(&[3])),
            ],
            CostCurve::linear(int(1)),
        );
        let p = AuctionParams::new(Cap::Limited(1), int(1), Ceiling::Infinite, PricingRule::HighestLosing).unwrap();
        let report = find_grid_equilibria(&m, &p, &EquilibriumConfig::default()).unwrap();
        assert!(report.profiles_examined > 1);
        for e in &report.equilibria {
            for firm in 0..2 {
                let br = best_response(&m, &p, &e.profile, firm, &EquilibriumConfig::default()).unwrap();
                assert!(br.iter().all(|r| r.gain.is_zero()));
            }
        }
    }

    #[test]
    fn poa_vacuous_when_safe_welfare_is_zero() {
        let m = MarketInstance::deterministic("low", vec![mv(&[1]), mv(&[1])], CostCurve::linear(int(5)));
        let safe = make_safe_auction(1, &m.cost).unwrap();
        let report = find_grid_equilibria(&m, &safe, &EquilibriumConfig::default()).unwrap();
        let cert = check_poa_bound(&m, 1, &report).unwrap();
        assert!(cert.passed() && cert.vacuous);
    }
}
