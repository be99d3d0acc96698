//! Welfare inequalities checked on concrete instances.
//!
//! Each check returns a [`BoundCertificate`] recording both sides exactly,
//! so the verdict can be recomputed from the certificate alone.

use std::fmt;
use std::sync::OnceLock;

use num_traits::{One, Signed, Zero};

use crate::auction::{self, clear_trusted, make_safe_auction, AuctionParams, Cap, Ceiling};
use crate::error::{Error, Result};
use crate::market::{self, CostCurve, MarketInstance};
use crate::rational::{self, from_usize, int, one_minus_inv_e, ratio, Rational};
use crate::welfare::{enumerate_scenarios, OptResult, ScenarioTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Ge,
    Le,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Ge => ">=",
            Relation::Le => "<=",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::NotApplicable => "n/a",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundCertificate {
    pub name: String,
    pub lhs: Rational,
    pub relation: Relation,
    pub rhs: Rational,
    pub status: Status,
    /// The inequality holds for a trivial reason (e.g. a zero benchmark).
    pub vacuous: bool,
    pub witness: Vec<(String, String)>,
    pub note: Option<String>,
}

impl BoundCertificate {
    pub fn check(name: impl Into<String>, lhs: Rational, relation: Relation, rhs: Rational) -> Self {
        let mut cert = Self {
            name: name.into(),
            lhs,
            relation,
            rhs,
            status: Status::Fail,
            vacuous: false,
            witness: Vec::new(),
            note: None,
        };
        if cert.holds() {
            cert.status = Status::Pass;
        }
        cert
    }

    pub fn not_applicable(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            lhs: Rational::zero(),
            relation: Relation::Ge,
            rhs: Rational::zero(),
            status: Status::NotApplicable,
            vacuous: false,
            witness: Vec::new(),
            note: Some(reason.into()),
        }
    }

    pub fn with_witness(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.witness.push((key.into(), value.into()));
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn vacuous_if(mut self, flag: bool) -> Self {
        self.vacuous = flag;
        self
    }

    /// Re-evaluates the inequality from `lhs` and `rhs`.
    pub fn holds(&self) -> bool {
        match self.relation {
            Relation::Ge => self.lhs >= self.rhs,
            Relation::Le => self.lhs <= self.rhs,
        }
    }

    /// Slack in the direction of the inequality; negative on failure.
    pub fn margin(&self) -> Rational {
        match self.relation {
            Relation::Ge => &self.lhs - &self.rhs,
            Relation::Le => &self.rhs - &self.lhs,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }

    /// Status agrees with the recorded sides.
    pub fn is_consistent(&self) -> bool {
        self.status == Status::NotApplicable || self.passed() == self.holds()
    }

    pub fn witness(&self, key: &str) -> Option<&str> {
        self.witness.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

impl fmt::Display for BoundCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.status, self.name)?;
        if self.status != Status::NotApplicable {
            write!(
                f,
                ": {} {} {}",
                rational::to_exact(&self.lhs),
                self.relation,
                rational::to_exact(&self.rhs)
            )?;
        }
        if self.vacuous {
            write!(f, " (vacuous)")?;
        }
        for (k, v) in &self.witness {
            write!(f, " {k}={v}")?;
        }
        if let Some(note) = &self.note {
            write!(f, " -- {note}")?;
        }
        Ok(())
    }
}

/// An instance with its scenario table, price grid and cap range, plus
/// lazily computed optimum and safe-auction welfare.
pub struct Analysis<'a> {
    pub market: &'a MarketInstance,
    pub table: ScenarioTable,
    pub prices: Vec<Rational>,
    pub cap_limit: usize,
    optimum: OnceLock<OptResult>,
    safe: OnceLock<Vec<Rational>>,
}

impl<'a> Analysis<'a> {
    pub fn new(market: &'a MarketInstance, scenario_limit: u128) -> Result<Self> {
        let table = enumerate_scenarios(market, scenario_limit)?;
        let cap_limit = table.default_cap_limit();
        Ok(Self {
            market,
            prices: auction::price_candidates(market),
            table,
            cap_limit,
            optimum: OnceLock::new(),
            safe: OnceLock::new(),
        })
    }

    pub fn with_cap_limit(mut self, cap_limit: usize) -> Self {
        self.cap_limit = cap_limit.max(1);
        self
    }

    /// Welfare-optimal `(C, floor)` with no ceiling.
    pub fn optimum(&self) -> Result<&OptResult> {
        if let Some(opt) = self.optimum.get() {
            return Ok(opt);
        }
        let opt = self
            .table
            .optimize_cap_and_price(&self.prices, false, Some(self.cap_limit))?;
        Ok(self.optimum.get_or_init(|| opt))
    }

    /// `W(M(c))`, with `W(M(0)) = 0`.
    pub fn safe_welfare(&self, cap: usize) -> Result<Rational> {
        if cap == 0 {
            return Ok(Rational::zero());
        }
        if let Some(w) = self.safe_table()?.get(cap - 1) {
            return Ok(w.clone());
        }
        self.table.expected_welfare(&make_safe_auction(cap, &self.table.cost)?)
    }

    /// `W(M(c))` for `c = 1..=cap_limit`.
    pub fn safe_table(&self) -> Result<&[Rational]> {
        if let Some(t) = self.safe.get() {
            return Ok(t);
        }
        let t = self
            .table
            .safe_welfare_table(self.cap_limit)?
            .into_iter()
            .map(|(_, w)| w)
            .collect();
        Ok(self.safe.get_or_init(|| t))
    }

    /// Best safe cap (smallest on ties) and its welfare.
    pub fn best_safe(&self) -> Result<(usize, Rational)> {
        let mut best = (1, self.safe_welfare(1)?);
        for (k, w) in self.safe_table()?.iter().enumerate() {
            if *w > best.1 {
                best = (k + 1, w.clone());
            }
        }
        Ok(best)
    }

    pub fn single_buyer(&self) -> Result<Rational> {
        self.table.single_buyer_expected()
    }
}

fn limited_cap(params: &AuctionParams) -> Result<usize> {
    match params.cap {
        Cap::Limited(c) => Ok(c),
        Cap::Unbounded => Err(Error::UnboundedCap),
    }
}

fn require_no_ceiling(params: &AuctionParams) -> Result<()> {
    match params.ceiling {
        Ceiling::Infinite => Ok(()),
        Ceiling::Finite(_) => Err(Error::InvalidParams(format!("{params} must have no ceiling"))),
    }
}

fn uncapped(cap: Cap, floor: Rational) -> AuctionParams {
    AuctionParams {
        cap,
        floor,
        ceiling: Ceiling::Infinite,
        pricing: Default::default(),
    }
}

pub struct PriceCeilingReport {
    pub target: Rational,
    /// Best `M(C', floor', no ceiling)` over the search grid.
    pub exhaustive: BoundCertificate,
    /// Better of `M(C, floor, no ceiling)` and `M(no cap, ceiling, no ceiling)`.
    pub proof_pair: BoundCertificate,
}

/// Some ceiling-free auction earns at least half of `W(M(C, floor, ceiling))`.
pub fn verify_price_ceiling_lemma(analysis: &Analysis, params: &AuctionParams) -> Result<PriceCeilingReport> {
    params.validate()?;
    let cap = limited_cap(params)?;
    let ceiling = params
        .ceiling
        .finite()
        .ok_or_else(|| Error::InvalidParams(format!("{params} has no finite ceiling")))?
        .clone();
    let table = &analysis.table;
    let target = table.expected_welfare(params)?;
    let half = &target / int(2);
    let vacuous = !target.is_positive();

    let mut caps: Vec<Cap> = (1..=analysis.cap_limit.max(cap)).map(Cap::Limited).collect();
    caps.push(Cap::Unbounded);
    let candidates: Vec<AuctionParams> = caps
        .iter()
        .flat_map(|&c| analysis.prices.iter().map(move |p| uncapped(c, p.clone())))
        .collect();
    let opt = table.optimize_over(candidates)?;
    let exhaustive = BoundCertificate::check(
        "ceiling-free-half:search",
        opt.expected_welfare.clone(),
        Relation::Ge,
        half.clone(),
    )
    .with_witness("C'", opt.params.cap.to_string())
    .with_witness("floor'", rational::to_exact(&opt.params.floor))
    .vacuous_if(vacuous);

    let m1 = table.expected_welfare(&uncapped(Cap::Limited(cap), params.floor.clone()))?;
    let m2 = table.expected_welfare(&uncapped(Cap::Unbounded, ceiling))?;
    let (which, best) = if m1 >= m2 {
        ("capped-at-floor", m1.clone())
    } else {
        ("uncapped-at-ceiling", m2.clone())
    };
    let proof_pair = BoundCertificate::check("ceiling-free-half:pair", best, Relation::Ge, half)
        .with_witness("best", which)
        .with_witness("W(M(C,floor))", rational::to_exact(&m1))
        .with_witness("W(M(ceiling))", rational::to_exact(&m2))
        .vacuous_if(vacuous);
    Ok(PriceCeilingReport {
        target,
        exhaustive,
        proof_pair,
    })
}

/// `(Pr[d >= C], E[W | d >= C] * Pr[d >= C])` at `params`.
pub fn sellout_contribution(table: &ScenarioTable, params: &AuctionParams) -> Result<(Rational, Rational)> {
    let cap = limited_cap(params)?;
    let mut q = Rational::zero();
    let mut contribution = Rational::zero();
    for row in &table.rows {
        if table.total_demand(row, &params.floor) >= cap {
            q += &row.prob;
            contribution += &row.prob * table.row_welfare(params, row)?;
        }
    }
    Ok((q, contribution))
}

/// `E[W(M(C, floor)) | d >= C] >= 0` for arbitrary parameters; vacuous when
/// the event has probability 0.
pub fn verify_conditional_nonneg(table: &ScenarioTable, params: &AuctionParams) -> Result<BoundCertificate> {
    params.validate()?;
    require_no_ceiling(params)?;
    let (q, contribution) = sellout_contribution(table, params)?;
    let name = "conditional-sellout-welfare";
    if q.is_zero() {
        return Ok(
            BoundCertificate::check(name, Rational::zero(), Relation::Ge, Rational::zero())
                .vacuous_if(true)
                .with_note("never sells out"),
        );
    }
    Ok(
        BoundCertificate::check(name, contribution / &q, Relation::Ge, Rational::zero())
            .with_witness("q", rational::to_exact(&q))
            .with_witness("params", params.to_string()),
    )
}

/// The conditional check at the optimum found by the search.
pub fn verify_opt_conditional_nonneg(analysis: &Analysis, opt: &OptResult) -> Result<BoundCertificate> {
    verify_conditional_nonneg(&analysis.table, &opt.params)
}

/// `P(C~) x - Q(x) <= C~ (P(C~) - P(C~/2))`, with `Q` interpolated at `C~/2`.
pub fn verify_unsafe_points(cost: &CostCurve, c_tilde: usize, x: usize) -> Result<BoundCertificate> {
    if c_tilde == 0 || x > c_tilde {
        return Err(Error::InvalidParams(format!(
            "need 0 <= x <= C~ and C~ >= 1, got x={x}, C~={c_tilde}"
        )));
    }
    let p = cost.safe_price(c_tilde)?;
    let p_half = cost.safe_price_fraction(&ratio(c_tilde as i64, 2))?;
    let lhs = &p * from_usize(x) - cost.cost_at(x)?;
    let rhs = from_usize(c_tilde) * (&p - p_half);
    Ok(BoundCertificate::check("unsafe-points", lhs, Relation::Le, rhs)
        .with_witness("C~", c_tilde.to_string())
        .with_witness("x", x.to_string()))
}

/// `(C/2) (P(C) - P(C/2))` on interpolated `Q`.
pub fn psi(cost: &CostCurve, c_med: usize) -> Result<Rational> {
    if c_med == 0 {
        return Err(Error::InvalidParams("psi needs a positive quantity".into()));
    }
    let half = ratio(c_med as i64, 2);
    Ok(&half * (cost.safe_price(c_med)? - cost.safe_price_fraction(&half)?))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecompositionRow {
    pub prob: Rational,
    pub sells_out: bool,
    pub allocation: Vec<usize>,
    /// Units each firm values at `P(C)` or more.
    pub thresholds: Vec<usize>,
    pub above: Vec<usize>,
    pub below: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct DecompositionReport {
    pub cap: usize,
    pub floor: Rational,
    pub safe_price: Rational,
    pub q: Rational,
    pub welfare: Rational,
    /// Sell-out contribution.
    pub one_a: Rational,
    /// Marginals at or above `P(C)` when demand falls short of the cap.
    pub one_b: Rational,
    /// Marginals below `P(C)` when demand falls short of the cap.
    pub one_c: Rational,
    pub rows: Vec<DecompositionRow>,
    /// `W(M(C, floor)) <= 1A + 1B + 1C`.
    pub certificate: BoundCertificate,
}

/// Splits `W(M(C, floor))` by sell-out and by the safe price `P(C)`.
pub fn decompose_welfare(table: &ScenarioTable, cap: usize, floor: &Rational) -> Result<DecompositionReport> {
    let params = AuctionParams::capped(cap, floor.clone())?;
    let cost = &table.cost;
    let safe_price = cost.safe_price(cap)?;
    let mut q = Rational::zero();
    let mut welfare = Rational::zero();
    let (mut one_a, mut one_b, mut one_c) = (Rational::zero(), Rational::zero(), Rational::zero());
    let mut rows = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let vs = &row.valuations;
        let allocation = clear_trusted(&params, vs).allocation;
        let w = market::welfare(vs, &allocation, cost)?;
        welfare += &row.prob * &w;
        let thresholds: Vec<usize> = vs.iter().map(|v| v.demand(&safe_price)).collect();
        let sells_out = table.total_demand(row, floor) >= cap;
        let (above, below): (Vec<usize>, Vec<usize>) = allocation
            .iter()
            .zip(&thresholds)
            .map(|(&x, &t)| (x.min(t), x - x.min(t)))
            .unzip();
        if sells_out {
            q += &row.prob;
            one_a += &row.prob * w;
        } else {
            let hi: Rational = vs.iter().zip(&above).map(|(v, &x)| v.value_at(x)).sum::<Rational>()
                - cost.cost_at(above.iter().sum())?;
            let lo: Rational = vs
                .iter()
                .zip(&thresholds)
                .zip(&below)
                .map(|((v, &t), &x)| v.marginal_given(x, t))
                .sum::<Rational>()
                - cost.cost_at(below.iter().sum())?;
            one_b += &row.prob * hi;
            one_c += &row.prob * lo;
        }
        rows.push(DecompositionRow {
            prob: row.prob.clone(),
            sells_out,
            allocation,
            thresholds,
            above,
            below,
        });
    }
    let total = &one_a + &one_b + &one_c;
    let certificate = BoundCertificate::check("decomposition", welfare.clone(), Relation::Le, total)
        .with_witness("C", cap.to_string())
        .with_witness("floor", rational::to_exact(floor));
    Ok(DecompositionReport {
        cap,
        floor: floor.clone(),
        safe_price,
        q,
        welfare,
        one_a,
        one_b,
        one_c,
        rows,
        certificate,
    })
}

/// `W(M(C)) >= 1A + 1B` and `W(M(C/2)) >= (q/2) 1C`; for odd `C` the better
/// of `floor(C/2)` and `ceil(C/2)` is used. The second is not applicable
/// when `q = 0`.
pub fn verify_decomposition_covers(
    analysis: &Analysis,
    report: &DecompositionReport,
) -> Result<(BoundCertificate, BoundCertificate)> {
    let cap = report.cap;
    let w_c = analysis.safe_welfare(cap)?;
    let upper = BoundCertificate::check("safe-covers-upper", w_c, Relation::Ge, &report.one_a + &report.one_b)
        .with_witness("C", cap.to_string());

    let name = "half-cap-covers-lower";
    if report.q.is_zero() {
        return Ok((upper, BoundCertificate::not_applicable(name, "q = 0")));
    }
    let (half, w_half) = best_half(analysis, cap)?;
    let rhs = &report.q * &report.one_c / int(2);
    let lower = BoundCertificate::check(name, w_half, Relation::Ge, rhs.clone())
        .with_witness("C'", half.to_string())
        .with_witness("q", rational::to_exact(&report.q))
        .vacuous_if(!rhs.is_positive());
    Ok((upper, lower))
}

/// `argmax` over `{floor(c/2), ceil(c/2)}` of `W(M(.))`, preferring the floor.
fn best_half(analysis: &Analysis, c: usize) -> Result<(usize, Rational)> {
    let lo = c / 2;
    let hi = c.div_ceil(2);
    let w_lo = analysis.safe_welfare(lo)?;
    let w_hi = analysis.safe_welfare(hi)?;
    Ok(if w_hi > w_lo { (hi, w_hi) } else { (lo, w_lo) })
}

/// Largest `W(M(C'))` over `C' = 1..=cap_limit`, as a certificate with
/// `multiplier * W(M(C')) >= target`.
fn safe_cover(
    analysis: &Analysis,
    name: &str,
    multiplier: &Rational,
    extra: &Rational,
    target: &Rational,
) -> Result<BoundCertificate> {
    let (c, w) = analysis.best_safe()?;
    let lhs = multiplier * &w + extra;
    let mut cert = BoundCertificate::check(name, lhs, Relation::Ge, target.clone())
        .with_witness("C'", c.to_string())
        .with_witness("W(M(C'))", rational::to_exact(&w))
        .vacuous_if(!target.is_positive());
    if w.is_positive() {
        let needed = (target - extra) / &w;
        cert = cert.with_witness("needed", rational::to_exact(&needed.max(Rational::zero())));
    }
    Ok(cert)
}

/// `(1 + 2/q) W(M(C')) >= OPT` for some `C'`, where `q` is the sell-out
/// probability at the optimum. Not applicable when `q = 0`.
pub fn verify_theorem_q(analysis: &Analysis) -> Result<BoundCertificate> {
    let opt = analysis.optimum()?;
    let name = "safe-cover-by-sellout";
    let (q, _) = sellout_contribution(&analysis.table, &opt.params)?;
    if q.is_zero() {
        return Ok(BoundCertificate::not_applicable(name, "q = 0 at the optimum"));
    }
    let multiplier = Rational::one() + int(2) / &q;
    Ok(
        safe_cover(analysis, name, &multiplier, &Rational::zero(), &opt.expected_welfare)?
            .with_witness("q", rational::to_exact(&q))
            .with_witness("opt", opt.params.to_string()),
    )
}

pub const MAIN_CONSTANT: i64 = 26;

pub struct MainTheoremReport {
    pub q: Rational,
    pub c_med: usize,
    pub single_buyer: Rational,
    /// `26 W(M(C')) + W1 >= OPT` for the best `C'`.
    pub existence: BoundCertificate,
    /// `W(M(C)) + W1 + 4 W(M(C_med)) + 21 W(M(C_med/2)) >= OPT`; not
    /// applicable when `C_med = 0`.
    pub four_term: BoundCertificate,
    /// Present when `q` clears the threshold: the sell-out bound, which
    /// then carries the theorem on its own.
    pub sellout_route: Option<BoundCertificate>,
}

impl MainTheoremReport {
    /// The certificate the theorem rests on for this instance.
    pub fn deciding(&self) -> &BoundCertificate {
        self.sellout_route.as_ref().unwrap_or(&self.four_term)
    }

    pub fn certificates(&self) -> Vec<&BoundCertificate> {
        let mut out = vec![&self.existence, &self.four_term];
        out.extend(&self.sellout_route);
        out
    }
}

pub fn verify_main_theorem(analysis: &Analysis) -> Result<MainTheoremReport> {
    verify_main_theorem_with(analysis, &one_minus_inv_e())
}

pub fn verify_main_theorem_with(analysis: &Analysis, threshold: &Rational) -> Result<MainTheoremReport> {
    if !analysis.table.is_product_form() {
        return Err(Error::NotProductForm);
    }
    let opt = analysis.optimum()?;
    let target = &opt.expected_welfare;
    let cap = limited_cap(&opt.params)?;
    let (q, _) = sellout_contribution(&analysis.table, &opt.params)?;
    let w1 = analysis.single_buyer()?;
    let existence = safe_cover(analysis, "safe-plus-single-buyer", &int(MAIN_CONSTANT), &w1, target)?
        .with_witness("W1", rational::to_exact(&w1));
    let c_med = analysis.table.c_med(&opt.params.floor, threshold)?;

    let four_term = if c_med == 0 {
        BoundCertificate::not_applicable("four-term", "C_med = 0")
    } else {
        let (half, w_half) = best_half(analysis, c_med)?;
        let lhs = analysis.safe_welfare(cap)? + &w1 + int(4) * analysis.safe_welfare(c_med)? + int(21) * w_half;
        BoundCertificate::check("four-term", lhs, Relation::Ge, target.clone())
            .with_witness("C", cap.to_string())
            .with_witness("C_med", c_med.to_string())
            .with_witness("C_med/2", half.to_string())
            .vacuous_if(!target.is_positive())
    };
    let sellout_route = if q >= *threshold {
        Some(verify_theorem_q(analysis)?.with_note("q clears the threshold"))
    } else {
        None
    };
    Ok(MainTheoremReport {
        q,
        c_med,
        single_buyer: w1,
        existence,
        four_term,
        sellout_route,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;
    use crate::market::{Extension, FirmDistribution, MarginalVector};
    use crate::welfare::DEFAULT_SCENARIO_LIMIT;

    fn mv(xs: &[i64]) -> MarginalVector {
        MarginalVector::from_ints(xs).unwrap()
    }

    fn analysis(m: &MarketInstance) -> Analysis<'_> {
        Analysis::new(m, DEFAULT_SCENARIO_LIMIT).unwrap()
    }

    #[test]
    fn certificate_recheck() {
        let c = BoundCertificate::check("x", int(3), Relation::Ge, int(2));
        assert!(c.passed() && c.is_consistent());
        assert_eq!(c.margin(), int(1));
        let c = BoundCertificate::check("x", int(3), Relation::Le, int(2));
        assert!(c.failed() && c.is_consistent());
        assert_eq!(c.margin(), int(-1));
        let mut forged = c.clone();
        forged.status = Status::Pass;
        assert!(!forged.is_consistent());
    }

    #[test]
    fn price_ceiling_on_demand_reduction() {
        let m = generate::demand_reduction();
        let a = analysis(&m);
        let params = AuctionParams::new(Cap::Limited(1), int(0), Ceiling::Finite(int(7)), Default::default()).unwrap();
        let r = verify_price_ceiling_lemma(&a, &params).unwrap();
        // ceiling 7 binds: firm 1 takes both units, welfare 2
        assert_eq!(r.target, int(2));
        assert_eq!(r.proof_pair.witness("W(M(C,floor))"), Some("1"));
        assert_eq!(r.proof_pair.witness("W(M(ceiling))"), Some("2"));
        assert!(r.proof_pair.passed() && r.exhaustive.passed());
    }

    #[test]
    fn price_ceiling_vacuous_when_target_non_positive() {
        let m = MarketInstance::deterministic("low", vec![mv(&[1, 1])], CostCurve::linear(int(3)));
        let a = analysis(&m);
        let params = AuctionParams::new(Cap::Limited(1), int(0), Ceiling::Finite(int(1)), Default::default()).unwrap();
        let r = verify_price_ceiling_lemma(&a, &params).unwrap();
        assert!(r.target.is_negative());
        assert!(r.exhaustive.passed() && r.exhaustive.vacuous);
    }

    /// The pair from the proof can fall short even though some other
    /// ceiling-free auction achieves half.
    #[test]
    fn proof_pair_can_miss_half() {
        let cost = CostCurve::explicit(vec![int(1), int(10)], Extension::RepeatLast);
        let m = MarketInstance::new(
            "pair-gap",
            vec![FirmDistribution::new(vec![
                (ratio(1, 866), MarginalVector::from_raw(vec![int(100); 20])),
                (ratio(805, 866), MarginalVector::from_raw(vec![ratio(29, 10)])),
                (ratio(60, 866), mv(&[3, 3])),
            ])],
            cost,
        );
        let a = analysis(&m);
        let params = AuctionParams::new(Cap::Limited(3), int(0), Ceiling::Finite(int(3)), Default::default()).unwrap();
        let r = verify_price_ceiling_lemma(&a, &params).unwrap();
        assert!(r.target.is_positive());
        assert!(r.exhaustive.passed());
        assert!(r.proof_pair.failed());
    }

    #[test]
    fn conditional_welfare_examples() {
        let m = generate::demand_reduction();
        let a = analysis(&m);
        let opt = a.optimum().unwrap();
        let cert = verify_opt_conditional_nonneg(&a, opt).unwrap();
        assert!(cert.passed());
        assert_eq!(cert.lhs, int(2));

        let bad = verify_conditional_nonneg(&a.table, &AuctionParams::capped(3, int(0)).unwrap()).unwrap();
        assert!(bad.failed());
        assert_eq!(bad.lhs, int(-1));

        let empty = MarketInstance::deterministic("zero", vec![MarginalVector::empty()], CostCurve::quadratic(int(1)));
        let a = analysis(&empty);
        let cert = verify_opt_conditional_nonneg(&a, a.optimum().unwrap()).unwrap();
        assert!(cert.passed() && cert.vacuous);
    }

    #[test]
    fn unsafe_points_examples() {
        let q = CostCurve::quadratic(int(1));
        let c = verify_unsafe_points(&q, 4, 2).unwrap();
        assert_eq!((c.lhs.clone(), c.rhs.clone()), (int(4), int(8)));
        assert!(c.passed());
        assert!(verify_unsafe_points(&q, 4, 0).unwrap().passed());
        assert_eq!(verify_unsafe_points(&q, 4, 4).unwrap().lhs, int(0));
        assert!(verify_unsafe_points(&q, 4, 5).is_err());
    }

    #[test]
    fn psi_examples() {
        let q = CostCurve::quadratic(int(1));
        assert_eq!(psi(&q, 4).unwrap(), int(4));
        assert_eq!(psi(&q, 3).unwrap(), int(2));
        assert_eq!(psi(&CostCurve::linear(int(5)), 7).unwrap(), int(0));
    }

    #[test]
    fn decomposition_two_scenarios() {
        let m = MarketInstance::new(
            "two",
            vec![FirmDistribution::new(vec![
                (ratio(1, 2), mv(&[5, 5])),
                (ratio(1, 2), MarginalVector::from_raw(vec![ratio(3, 2)])),
            ])],
            CostCurve::quadratic(int(1)),
        );
        let a = analysis(&m);
        let r = decompose_welfare(&a.table, 2, &int(1)).unwrap();
        assert_eq!(r.safe_price, int(2));
        assert_eq!(r.one_a, int(3));
        assert_eq!(r.one_b, int(0));
        assert_eq!(r.one_c, ratio(1, 4));
        assert_eq!(r.welfare, ratio(13, 4));
        assert!(r.certificate.passed());
        assert_eq!(r.rows[1].thresholds, vec![0]);
        assert_eq!(r.rows[1].below, vec![1]);
    }

    #[test]
    fn decomposition_trivial_cases() {
        let m = generate::demand_reduction();
        let a = analysis(&m);
        let r = decompose_welfare(&a.table, 2, &int(0)).unwrap();
        assert_eq!(r.q, int(1));
        assert!(r.one_b.is_zero() && r.one_c.is_zero());
        assert_eq!(r.one_a, r.welfare);

        let two = MarketInstance::new(
            "two",
            vec![FirmDistribution::new(vec![
                (ratio(1, 2), mv(&[5, 5])),
                (ratio(1, 2), mv(&[3])),
            ])],
            CostCurve::quadratic(int(1)),
        );
        let a = analysis(&two);
        assert!(decompose_welfare(&a.table, 2, &int(2)).unwrap().one_c.is_zero());
    }

    #[test]
    fn decomposition_covers_on_demand_reduction() {
        let m = generate::demand_reduction();
        let a = analysis(&m);
        let r = decompose_welfare(&a.table, 2, &int(10)).unwrap();
        let (c1, c2) = verify_decomposition_covers(&a, &r).unwrap();
        assert!(c1.passed());
        assert_eq!(c1.lhs, int(2));
        assert!(c2.passed() && c2.vacuous);
    }

    /// With the optimal floor above `P(C)`, the safe auction also sells
    /// marginals between `P(C)` and the floor, whose marginal cost can
    /// exceed their value; `W(M(C))` then falls short of `1A + 1B`.
    #[test]
    fn safe_cover_of_upper_terms_needs_floor_below_safe_price() {
        let m = MarketInstance::new(
            "floor-above-safe-price",
            vec![
                FirmDistribution::new(vec![(ratio(1, 2), MarginalVector::empty()), (ratio(1, 2), mv(&[5]))]),
                FirmDistribution::point_mass(mv(&[5, 5, 2])),
            ],
            CostCurve::explicit(vec![int(0), int(1), int(3)], Extension::RepeatLast),
        );
        let a = analysis(&m);
        let opt = a.optimum().unwrap();
        assert_eq!(opt.params, AuctionParams::capped(3, int(5)).unwrap());
        assert_eq!(opt.expected_welfare, int(10));
        let r = decompose_welfare(&a.table, 3, &opt.params.floor).unwrap();
        assert_eq!(r.safe_price, ratio(4, 3));
        let (c1, _) = verify_decomposition_covers(&a, &r).unwrap();
        assert!(c1.failed());
        assert_eq!((c1.lhs.clone(), c1.rhs.clone()), (ratio(19, 2), int(10)));
        // the sell-out bound itself still holds
        assert!(verify_theorem_q(&a).unwrap().passed());
    }

    #[test]
    fn theorem_q_on_demand_reduction() {
        let m = generate::demand_reduction();
        let cert = verify_theorem_q(&analysis(&m)).unwrap();
        assert!(cert.passed());
        assert_eq!(cert.witness("q"), Some("1"));
        assert_eq!(cert.witness("C'"), Some("2"));
        assert_eq!(cert.margin(), int(4));
    }

    #[test]
    fn theorem_q_not_applicable_or_vacuous() {
        let empty = MarketInstance::deterministic("zero", vec![MarginalVector::empty()], CostCurve::quadratic(int(1)));
        assert_eq!(
            verify_theorem_q(&analysis(&empty)).unwrap().status,
            Status::NotApplicable
        );

        let solo = MarketInstance::deterministic("solo", vec![mv(&[6, 6, 6])], CostCurve::quadratic(int(1)));
        let cert = verify_theorem_q(&analysis(&solo)).unwrap();
        assert!(cert.passed());
    }

    #[test]
    fn main_theorem_on_logscale() {
        let m = generate::logscale(5).unwrap();
        let a = analysis(&m);
        let r = verify_main_theorem(&a).unwrap();
        let beta = generate::logscale_beta(5);
        assert_eq!(r.single_buyer, int(5) / &beta);
        assert_eq!(r.c_med, 2);
        assert!(r.q < one_minus_inv_e());
        assert!(r.existence.passed());
        assert!(r.four_term.passed());
    }

    #[test]
    fn main_theorem_routes_high_sellout() {
        let m = generate::demand_reduction();
        let r = verify_main_theorem(&analysis(&m)).unwrap();
        assert!(r.sellout_route.is_some());
        assert!(r.deciding().passed() && r.four_term.passed() && r.existence.passed());
    }

    #[test]
    fn main_theorem_needs_product_form() {
        use crate::market::JointScenario;
        let m = MarketInstance::correlated(
            "c",
            vec![JointScenario {
                prob: int(1),
                valuations: vec![mv(&[3])],
            }],
            CostCurve::quadratic(int(1)),
        );
        assert!(matches!(verify_main_theorem(&analysis(&m)), Err(Error::NotProductForm)));
    }
}
