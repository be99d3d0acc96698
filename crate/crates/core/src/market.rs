//! Valuations, social cost and market instances.
//!
//! A firm's concave valuation is stored as its list of non-increasing
//! marginal values; every license past the end of the list is worth 0.
//! The social cost is convex and stored either as explicit non-decreasing
//! marginal costs or as `a * x^2`.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{self, from_usize, Rational};

/// Per-firm license counts, indexed like the firm list.
pub type Allocation = Vec<usize>;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MarginalVector {
    marginals: Vec<Rational>,
}

impl MarginalVector {
    pub fn new(marginals: Vec<Rational>) -> Result<Self> {
        let v = Self { marginals };
        match v.issues().into_iter().next() {
            None => Ok(v),
            Some((idx, msg)) => Err(Error::InvalidMarginals(format!("index {idx}: {msg}"))),
        }
    }

    /// Builds a vector without checking its invariants; see [`validate`].
    pub fn from_raw(marginals: Vec<Rational>) -> Self {
        Self { marginals }
    }

    pub fn from_ints(marginals: &[i64]) -> Result<Self> {
        Self::new(marginals.iter().map(|&m| rational::int(m)).collect())
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn marginals(&self) -> &[Rational] {
        &self.marginals
    }

    pub fn len(&self) -> usize {
        self.marginals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marginals.is_empty()
    }

    /// Value of the `j`-th license (1-based); 0 past the end of the list.
    pub fn marginal(&self, j: usize) -> Rational {
        match j.checked_sub(1).and_then(|i| self.marginals.get(i)) {
            Some(m) => m.clone(),
            None => Rational::zero(),
        }
    }

    /// `V(x)`: sum of the first `x` marginals.
    pub fn value_at(&self, x: usize) -> Rational {
        self.marginals.iter().take(x).sum()
    }

    /// `V(j | k) = V(j + k) - V(k)`.
    pub fn marginal_given(&self, j: usize, k: usize) -> Rational {
        self.marginals.iter().skip(k).take(j).sum()
    }

    /// Number of licenses demanded at unit price `p`.
    ///
    /// At `p = 0` only strictly positive marginals count, so demand is
    /// always finite.
    pub fn demand(&self, p: &Rational) -> usize {
        if p.is_positive() {
            self.marginals.iter().take_while(|m| *m >= p).count()
        } else {
            self.positive_count()
        }
    }

    pub fn positive_count(&self) -> usize {
        self.marginals.iter().take_while(|m| m.is_positive()).count()
    }

    /// Same valuation with trailing zero marginals dropped.
    pub fn trimmed(&self) -> Self {
        Self {
            marginals: self.marginals[..self.positive_count()].to_vec(),
        }
    }

    fn issues(&self) -> Vec<(usize, &'static str)> {
        let mut out = Vec::new();
        for (idx, m) in self.marginals.iter().enumerate() {
            if m.is_negative() {
                out.push((idx, "negative marginal value"));
            }
            if idx > 0 && *m > self.marginals[idx - 1] {
                out.push((idx, "marginal exceeds the previous one (not non-increasing)"));
            }
        }
        out
    }
}

impl fmt::Display for MarginalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, m) in self.marginals.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", rational::to_exact(m))?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Extension {
    /// Past the list, every further unit costs the last listed marginal.
    #[default]
    RepeatLast,
    /// Evaluating past the list is an error.
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CostCurve {
    Explicit {
        marginals: Vec<Rational>,
        extension: Extension,
    },
    /// `Q(x) = a * x^2`.
    Quadratic { a: Rational },
}

impl CostCurve {
    pub fn quadratic(a: Rational) -> Self {
        CostCurve::Quadratic { a }
    }

    pub fn explicit(marginals: Vec<Rational>, extension: Extension) -> Self {
        CostCurve::Explicit { marginals, extension }
    }

    /// Linear cost `slope * x`.
    pub fn linear(slope: Rational) -> Self {
        Self::explicit(vec![slope], Extension::RepeatLast)
    }

    pub fn cost_at(&self, x: usize) -> Result<Rational> {
        match self {
            CostCurve::Quadratic { a } => Ok(a * from_usize(x * x)),
            CostCurve::Explicit { marginals, extension } => {
                if x <= marginals.len() {
                    return Ok(marginals[..x].iter().sum());
                }
                match extension {
                    Extension::Error => Err(Error::BeyondCostCurve {
                        x,
                        len: marginals.len(),
                    }),
                    Extension::RepeatLast => {
                        let listed: Rational = marginals.iter().sum();
                        let last = marginals.last().cloned().unwrap_or_else(Rational::zero);
                        Ok(listed + last * from_usize(x - marginals.len()))
                    }
                }
            }
        }
    }

    /// `Q(x) - Q(x - 1)` for `x >= 1`.
    pub fn marginal_cost(&self, x: usize) -> Result<Rational> {
        assert!(x >= 1, "marginal cost is defined from the first unit");
        match self {
            CostCurve::Quadratic { a } => Ok(a * from_usize(2 * x - 1)),
            CostCurve::Explicit { marginals, extension } => match marginals.get(x - 1) {
                Some(m) => Ok(m.clone()),
                None => match extension {
                    Extension::Error => Err(Error::BeyondCostCurve {
                        x,
                        len: marginals.len(),
                    }),
                    Extension::RepeatLast => Ok(marginals.last().cloned().unwrap_or_else(Rational::zero)),
                },
            },
        }
    }

    /// `Q` extended to non-negative rationals by linear interpolation
    /// between neighbouring integers.
    pub fn cost_at_fraction(&self, x: &Rational) -> Result<Rational> {
        if x.is_negative() {
            return Err(Error::InvalidParams(format!(
                "cost evaluated at negative quantity {}",
                rational::to_exact(x)
            )));
        }
        let lo = x.floor();
        let lo_units = to_usize(&lo)?;
        let frac = x - &lo;
        let base = self.cost_at(lo_units)?;
        if frac.is_zero() {
            return Ok(base);
        }
        Ok(base + frac * self.marginal_cost(lo_units + 1)?)
    }

    /// Safe price `P(C) = Q(C) / C`.
    pub fn safe_price(&self, cap: usize) -> Result<Rational> {
        if cap == 0 {
            return Err(Error::InvalidParams("safe price needs a cap of at least 1".into()));
        }
        Ok(self.cost_at(cap)? / from_usize(cap))
    }

    /// `P(x) = Q(x) / x` on the interpolated curve, `x > 0`.
    pub fn safe_price_fraction(&self, x: &Rational) -> Result<Rational> {
        if !x.is_positive() {
            return Err(Error::InvalidParams("safe price needs a positive quantity".into()));
        }
        Ok(self.cost_at_fraction(x)? / x)
    }

    fn issues(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            CostCurve::Quadratic { a } => {
                if !a.is_positive() {
                    out.push("quadratic coefficient must be positive".to_string());
                }
            }
            CostCurve::Explicit { marginals, .. } => {
                for (idx, m) in marginals.iter().enumerate() {
                    if m.is_negative() {
                        out.push(format!("marginals[{idx}]: negative marginal cost"));
                    }
                    if idx > 0 && *m < marginals[idx - 1] {
                        out.push(format!("marginals[{idx}]: marginal cost decreases (not convex)"));
                    }
                }
            }
        }
        out
    }
}

fn to_usize(value: &Rational) -> Result<usize> {
    use num_traits::ToPrimitive;
    value
        .to_integer()
        .to_usize()
        .ok_or_else(|| Error::InvalidParams(format!("quantity {value} out of range")))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub prob: Rational,
    pub valuation: MarginalVector,
}

/// Discrete distribution over one firm's valuation (its types).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FirmDistribution {
    pub scenarios: Vec<Scenario>,
}

impl FirmDistribution {
    pub fn point_mass(valuation: MarginalVector) -> Self {
        Self {
            scenarios: vec![Scenario {
                prob: Rational::one(),
                valuation,
            }],
        }
    }

    pub fn new(scenarios: Vec<(Rational, MarginalVector)>) -> Self {
        Self {
            scenarios: scenarios
                .into_iter()
                .map(|(prob, valuation)| Scenario { prob, valuation })
                .collect(),
        }
    }
}

/// One row of an explicit correlated joint distribution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointScenario {
    pub prob: Rational,
    pub valuations: Vec<MarginalVector>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarketInstance {
    pub label: String,
    pub firms: Vec<FirmDistribution>,
    pub cost: CostCurve,
    /// Correlated mode: when present this table replaces the product of
    /// the per-firm distributions.
    pub joint: Option<Vec<JointScenario>>,
}

impl MarketInstance {
    pub fn new(label: impl Into<String>, firms: Vec<FirmDistribution>, cost: CostCurve) -> Self {
        Self {
            label: label.into(),
            firms,
            cost,
            joint: None,
        }
    }

    /// Full-information instance: every firm's valuation is a point mass.
    pub fn deterministic(label: impl Into<String>, valuations: Vec<MarginalVector>, cost: CostCurve) -> Self {
        Self::new(
            label,
            valuations.into_iter().map(FirmDistribution::point_mass).collect(),
            cost,
        )
    }

    pub fn correlated(label: impl Into<String>, joint: Vec<JointScenario>, cost: CostCurve) -> Self {
        Self {
            label: label.into(),
            firms: Vec::new(),
            cost,
            joint: Some(joint),
        }
    }

    pub fn is_product_form(&self) -> bool {
        self.joint.is_none()
    }

    pub fn num_firms(&self) -> usize {
        match &self.joint {
            Some(rows) => rows.first().map_or(0, |r| r.valuations.len()),
            None => self.firms.len(),
        }
    }

    /// Every valuation that can occur, in file order.
    pub fn valuations(&self) -> Box<dyn Iterator<Item = &MarginalVector> + '_> {
        match &self.joint {
            Some(rows) => Box::new(rows.iter().flat_map(|r| r.valuations.iter())),
            None => Box::new(self.firms.iter().flat_map(|f| f.scenarios.iter().map(|s| &s.valuation))),
        }
    }
}

/// `V(x)` for the combined market: the `x` largest marginals across firms.
///
/// Greedy is optimal because every firm's marginals are non-increasing.
pub fn combined_valuation(valuations: &[MarginalVector], x: usize) -> Rational {
    let mut all: Vec<&Rational> = valuations
        .iter()
        .flat_map(|v| v.marginals().iter().filter(|m| m.is_positive()))
        .collect();
    all.sort_unstable_by(|a, b| b.cmp(a));
    all.into_iter().take(x).sum()
}

/// `sum_i V_i(x_i) - Q(sum_i x_i)`.
pub fn welfare(valuations: &[MarginalVector], allocation: &[usize], cost: &CostCurve) -> Result<Rational> {
    if valuations.len() != allocation.len() {
        return Err(Error::InvalidParams(format!(
            "allocation has {} entries for {} firms",
            allocation.len(),
            valuations.len()
        )));
    }
    let value: Rational = valuations.iter().zip(allocation).map(|(v, &x)| v.value_at(x)).sum();
    let total = allocation.iter().sum();
    Ok(value - cost.cost_at(total)?)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            location: location.into(),
            message: message.into(),
        });
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::Validation(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  {}: {}", v.location, v.message)?;
        }
        Ok(())
    }
}

fn check_marginals(report: &mut ValidationReport, location: &str, v: &MarginalVector) {
    for (idx, msg) in v.issues() {
        report.push(format!("{location}.marginals[{idx}]"), msg);
    }
}

fn check_probabilities<'a>(report: &mut ValidationReport, location: &str, probs: impl Iterator<Item = &'a Rational>) {
    let mut total = Rational::zero();
    let mut count = 0usize;
    for (idx, p) in probs.enumerate() {
        if !p.is_positive() {
            report.push(format!("{location}[{idx}].prob"), "probability must be positive");
        }
        total += p;
        count += 1;
    }
    if count == 0 {
        report.push(location, "needs at least one scenario");
    } else if !total.is_one() {
        report.push(
            location,
            format!("probabilities sum to {}, not 1", rational::to_exact(&total)),
        );
    }
}

/// Checks every invariant of the instance and lists each violation.
pub fn validate(market: &MarketInstance) -> ValidationReport {
    let mut report = ValidationReport::default();
    for msg in market.cost.issues() {
        report.push("cost", msg);
    }
    match &market.joint {
        None => {
            if market.firms.is_empty() {
                report.push("firms", "needs at least one firm");
            }
            for (i, firm) in market.firms.iter().enumerate() {
                let loc = format!("firms[{i}].scenarios");
                check_probabilities(&mut report, &loc, firm.scenarios.iter().map(|s| &s.prob));
                for (s, scenario) in firm.scenarios.iter().enumerate() {
                    check_marginals(&mut report, &format!("{loc}[{s}]"), &scenario.valuation);
                }
            }
        }
        Some(rows) => {
            if !market.firms.is_empty() {
                report.push("firms", "must be empty when a joint scenario table is given");
            }
            let width = rows.first().map_or(0, |r| r.valuations.len());
            if width == 0 {
                report.push("joint_scenarios", "needs at least one firm");
            }
            check_probabilities(&mut report, "joint_scenarios", rows.iter().map(|r| &r.prob));
            for (r, row) in rows.iter().enumerate() {
                if row.valuations.len() != width {
                    report.push(
                        format!("joint_scenarios[{r}]"),
                        format!("has {} firms, expected {width}", row.valuations.len()),
                    );
                }
                for (i, v) in row.valuations.iter().enumerate() {
                    check_marginals(&mut report, &format!("joint_scenarios[{r}][{i}]"), v);
                }
            }
        }
    }
    report
}
