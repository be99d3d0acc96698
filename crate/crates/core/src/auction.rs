//! The cap-and-price allocation rule, safe-price auctions and the
//! single-buyer mechanism.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::market::{self, Allocation, CostCurve, MarginalVector, MarketInstance};
use crate::rational::{self, from_usize, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cap {
    Limited(usize),
    Unbounded,
}

impl fmt::Display for Cap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cap::Limited(c) => write!(f, "{c}"),
            Cap::Unbounded => write!(f, "inf"),
        }
    }
}

/// `Finite < Infinite` under the derived order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ceiling {
    Finite(Rational),
    Infinite,
}

impl Ceiling {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Ceiling::Finite(p) => Some(p),
            Ceiling::Infinite => None,
        }
    }
}

impl fmt::Display for Ceiling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ceiling::Finite(p) => write!(f, "{}", rational::to_exact(p)),
            Ceiling::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum PricingRule {
    /// Price is the C-th highest bid, `V(C) - V(C-1)`.
    #[default]
    LowestWinning,
    /// Price is the (C+1)-th highest bid, never below the floor.
    HighestLosing,
}

impl fmt::Display for PricingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PricingRule::LowestWinning => write!(f, "lowest-winning"),
            PricingRule::HighestLosing => write!(f, "highest-losing"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AuctionParams {
    pub cap: Cap,
    pub floor: Rational,
    pub ceiling: Ceiling,
    pub pricing: PricingRule,
}

impl AuctionParams {
    pub fn new(cap: Cap, floor: Rational, ceiling: Ceiling, pricing: PricingRule) -> Result<Self> {
        let params = Self {
            cap,
            floor,
            ceiling,
            pricing,
        };
        params.validate()?;
        Ok(params)
    }

    /// `M(C, floor)` with no ceiling.
    pub fn capped(cap: usize, floor: Rational) -> Result<Self> {
        Self::new(Cap::Limited(cap), floor, Ceiling::Infinite, PricingRule::default())
    }

    /// `M(inf, floor, inf)`: a posted price.
    pub fn posted(floor: Rational) -> Result<Self> {
        Self::new(Cap::Unbounded, floor, Ceiling::Infinite, PricingRule::default())
    }

    pub fn with_pricing(mut self, pricing: PricingRule) -> Self {
        self.pricing = pricing;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.cap == Cap::Limited(0) {
            return Err(Error::InvalidParams("cap must be at least 1".into()));
        }
        if self.floor < Rational::zero() {
            return Err(Error::InvalidParams("price floor must be non-negative".into()));
        }
        if let Ceiling::Finite(p) = &self.ceiling {
            if *p <= self.floor {
                return Err(Error::InvalidParams(format!(
                    "price ceiling {} must exceed the floor {}",
                    rational::to_exact(p),
                    rational::to_exact(&self.floor)
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for AuctionParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "M(C={}, floor={}, ceiling={}, {})",
            self.cap,
            rational::to_exact(&self.floor),
            self.ceiling,
            self.pricing
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CaseTag {
    CeilingBinds,
    FloorBinds,
    CapBinds,
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaseTag::CeilingBinds => write!(f, "ceiling"),
            CaseTag::FloorBinds => write!(f, "floor"),
            CaseTag::CapBinds => write!(f, "cap"),
        }
    }
}

/// Allocation and price from reported bids alone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clearing {
    pub allocation: Allocation,
    pub unit_price: Rational,
    pub case: CaseTag,
}

impl Clearing {
    pub fn total(&self) -> usize {
        self.allocation.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub allocation: Allocation,
    pub unit_price: Rational,
    pub case: CaseTag,
    /// Evaluated at true values.
    pub welfare: Rational,
    pub revenue: Rational,
}

/// Runs the allocation rule on reported bids.
pub fn clear(params: &AuctionParams, bids: &[MarginalVector]) -> Result<Clearing> {
    params.validate()?;
    for (i, bid) in bids.iter().enumerate() {
        MarginalVector::new(bid.marginals().to_vec())
            .map_err(|e| Error::InvalidMarginals(format!("bid of firm {i}: {e}")))?;
    }
    Ok(clear_trusted(params, bids))
}

/// [`clear`] without re-checking params or bids.
pub(crate) fn clear_trusted(params: &AuctionParams, bids: &[MarginalVector]) -> Clearing {
    let cap = match params.cap {
        Cap::Limited(c) => Some(c),
        Cap::Unbounded => None,
    };

    if let (Some(cap), Ceiling::Finite(ceiling)) = (cap, &params.ceiling) {
        let at_ceiling: Allocation = bids.iter().map(|b| b.demand(ceiling)).collect();
        if at_ceiling.iter().sum::<usize>() >= cap {
            return Clearing {
                allocation: at_ceiling,
                unit_price: ceiling.clone(),
                case: CaseTag::CeilingBinds,
            };
        }
    }

    let at_floor: Allocation = bids.iter().map(|b| b.demand(&params.floor)).collect();
    let demanded: usize = at_floor.iter().sum();
    let cap = match cap {
        Some(c) if demanded >= c => c,
        _ => {
            return Clearing {
                allocation: at_floor,
                unit_price: params.floor.clone(),
                case: CaseTag::FloorBinds,
            }
        }
    };

    // Units bid at or above the floor, highest first; ties go to the lower
    // firm index, then the earlier unit.
    let mut units: Vec<(&Rational, usize)> = bids
        .iter()
        .zip(&at_floor)
        .enumerate()
        .flat_map(|(firm, (bid, &d))| bid.marginals()[..d].iter().map(move |m| (m, firm)))
        .collect();
    units.sort_by(|a, b| b.0.cmp(a.0).then(a.1.cmp(&b.1)));

    let mut allocation = vec![0; bids.len()];
    for &(_, firm) in &units[..cap] {
        allocation[firm] += 1;
    }
    let unit_price = match params.pricing {
        PricingRule::LowestWinning => units[cap - 1].0.clone(),
        PricingRule::HighestLosing => match units.get(cap) {
            Some((m, _)) => (*m).clone(),
            None => params.floor.clone(),
        },
    };
    Clearing {
        allocation,
        unit_price,
        case: CaseTag::CapBinds,
    }
}

/// Allocation and price at `bids`; welfare at `true_values`.
pub fn run_auction(
    params: &AuctionParams,
    bids: &[MarginalVector],
    cost: &CostCurve,
    true_values: &[MarginalVector],
) -> Result<Outcome> {
    if bids.len() != true_values.len() {
        return Err(Error::InvalidParams(format!(
            "{} bids for {} firms",
            bids.len(),
            true_values.len()
        )));
    }
    let clearing = clear(params, bids)?;
    outcome_from(clearing, cost, true_values)
}

pub(crate) fn outcome_from(clearing: Clearing, cost: &CostCurve, true_values: &[MarginalVector]) -> Result<Outcome> {
    let welfare = market::welfare(true_values, &clearing.allocation, cost)?;
    let revenue = &clearing.unit_price * from_usize(clearing.total());
    Ok(Outcome {
        allocation: clearing.allocation,
        unit_price: clearing.unit_price,
        case: clearing.case,
        welfare,
        revenue,
    })
}

/// Safe-price auction `M(C)`: floor `Q(C)/C`, no ceiling.
pub fn make_safe_auction(cap: usize, cost: &CostCurve) -> Result<AuctionParams> {
    AuctionParams::capped(cap, cost.safe_price(cap)?)
}

/// Smallest maximiser of `V(x) - Q(x)` and the maximum.
pub fn best_quantity(valuation: &MarginalVector, cost: &CostCurve) -> Result<(usize, Rational)> {
    let mut x = 0;
    let mut surplus = Rational::zero();
    loop {
        let gain = valuation.marginal(x + 1) - cost.marginal_cost(x + 1)?;
        if gain <= Rational::zero() {
            return Ok((x, surplus));
        }
        surplus += gain;
        x += 1;
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SingleBuyerOutcome {
    /// Firm that wins the right to buy (lowest index on ties).
    pub winner: usize,
    pub quantity: usize,
    pub allocation: Allocation,
    /// `max_x V_i(x) - Q(x)` for each firm.
    pub scores: Vec<Rational>,
    pub welfare: Rational,
    /// Second-highest score, paid for the right to buy.
    pub license_payment: Rational,
}

/// Second-price auction for the right to buy at cost `Q(x)`.
pub fn single_buyer_mechanism(true_values: &[MarginalVector], cost: &CostCurve) -> Result<SingleBuyerOutcome> {
    if true_values.is_empty() {
        return Err(Error::InvalidParams("single-buyer mechanism needs a firm".into()));
    }
    let best: Vec<(usize, Rational)> = true_values
        .iter()
        .map(|v| best_quantity(v, cost))
        .collect::<Result<_>>()?;
    let mut winner = 0;
    for (i, (_, s)) in best.iter().enumerate() {
        if *s > best[winner].1 {
            winner = i;
        }
    }
    let license_payment = best
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != winner)
        .map(|(_, (_, s))| s.clone())
        .max()
        .unwrap_or_else(Rational::zero);
    let quantity = best[winner].0;
    let mut allocation = vec![0; true_values.len()];
    allocation[winner] = quantity;
    Ok(SingleBuyerOutcome {
        winner,
        quantity,
        allocation,
        welfare: best[winner].1.clone(),
        scores: best.into_iter().map(|(_, s)| s).collect(),
        license_payment,
    })
}

/// Every marginal value in the instance, plus 0 and one sentinel above
/// the maximum, ascending.
///
/// Demand is constant between consecutive candidates, so any floor or
/// ceiling is welfare-equivalent to one of these.
pub fn price_candidates(market: &MarketInstance) -> Vec<Rational> {
    let mut set: BTreeSet<Rational> = market
        .valuations()
        .flat_map(|v| v.marginals().iter().cloned())
        .collect();
    set.insert(Rational::zero());
    let sentinel = set.iter().next_back().cloned().unwrap_or_else(Rational::zero) + Rational::one();
    set.insert(sentinel);
    set.into_iter().collect()
}
