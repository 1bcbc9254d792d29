//! Allocation across sources that each observe only a subset of the
//! parameter coordinates: minimize `Σ_j 1/Σ_{i ∈ I_j} q_i^{(j)}(r_i)`
//! over the budget set, where `I_j` is the j'th reciprocal set. The
//! objective is convex whenever the precisions are concave, so the
//! shared projected-gradient engine applies; total independence
//! (`S_i = {i}`, linear precision) additionally has the closed form
//! `r_i* = R σ_i / Σ σ_j`.

use crate::error::{Error, Result};
use crate::solver::{minimize_projected, PgdSettings, SimplexConstraint, SolverReport};
use crate::tradeoffs::{TradeoffFunction, DERIVATIVE_CAP};

/// One data source: the coordinates it observes (0-based, strictly
/// increasing) and a tradeoff function per observed coordinate.
#[derive(Debug, Clone)]
pub struct SourceModel {
    support: Vec<usize>,
    tradeoffs: Vec<TradeoffFunction>,
}

impl SourceModel {
    pub fn new(support: Vec<usize>, tradeoffs: Vec<TradeoffFunction>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::invalid("source support must be nonempty"));
        }
        if !support.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid(
                "source support must be strictly increasing",
            ));
        }
        if support.len() != tradeoffs.len() {
            return Err(Error::DimensionMismatch(format!(
                "support has {} coordinates but {} tradeoff functions were given",
                support.len(),
                tradeoffs.len()
            )));
        }
        for f in &tradeoffs {
            f.validate()?;
        }
        Ok(SourceModel { support, tradeoffs })
    }

    /// One shared tradeoff function broadcast to every coordinate.
    pub fn uniform(support: Vec<usize>, f: TradeoffFunction) -> Result<Self> {
        let tradeoffs = vec![f; support.len()];
        Self::new(support, tradeoffs)
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn tradeoffs(&self) -> &[TradeoffFunction] {
        &self.tradeoffs
    }

    fn position(&self, coord: usize) -> Result<usize> {
        self.support
            .iter()
            .position(|&c| c == coord)
            .ok_or_else(|| {
                Error::DimensionMismatch(format!("coordinate {coord} is not in the support"))
            })
    }

    pub fn tradeoff_at(&self, coord: usize) -> Result<&TradeoffFunction> {
        Ok(&self.tradeoffs[self.position(coord)?])
    }

    pub fn loss_at(&self, coord: usize, r: f64) -> Result<f64> {
        self.tradeoff_at(coord)?.loss(r)
    }

    pub fn precision_at(&self, coord: usize, r: f64) -> Result<f64> {
        self.tradeoff_at(coord)?.precision(r)
    }
}

/// `I_j = {i : j ∈ S_i}` for every coordinate `j ∈ [d]`. Errors with
/// the first unobservable coordinate.
pub fn reciprocal_sets(d: usize, sources: &[SourceModel]) -> Result<Vec<Vec<usize>>> {
    if d == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let mut sets = vec![Vec::new(); d];
    for (i, source) in sources.iter().enumerate() {
        for &j in source.support() {
            if j >= d {
                return Err(Error::DimensionMismatch(format!(
                    "source {i} observes coordinate {j}, but the dimension is {d}"
                )));
            }
            sets[j].push(i);
        }
    }
    for (j, set) in sets.iter().enumerate() {
        if set.is_empty() {
            return Err(Error::UnobservableCoordinate {
                coord: j,
                reason: "no source observes it".into(),
            });
        }
    }
    Ok(sets)
}

/// A supported-allocation problem with its reciprocal sets cached.
#[derive(Debug, Clone)]
pub struct SupportProblem {
    d: usize,
    sources: Vec<SourceModel>,
    constraint: SimplexConstraint,
    reciprocal: Vec<Vec<usize>>,
}

impl SupportProblem {
    pub fn new(d: usize, sources: Vec<SourceModel>, constraint: SimplexConstraint) -> Result<Self> {
        if sources.len() != constraint.n() {
            return Err(Error::DimensionMismatch(format!(
                "{} sources but a constraint over {}",
                sources.len(),
                constraint.n()
            )));
        }
        let reciprocal = reciprocal_sets(d, &sources)?;
        Ok(SupportProblem {
            d,
            sources,
            constraint,
            reciprocal,
        })
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn sources(&self) -> &[SourceModel] {
        &self.sources
    }

    pub fn constraint(&self) -> &SimplexConstraint {
        &self.constraint
    }

    pub fn reciprocal_sets(&self) -> &[Vec<usize>] {
        &self.reciprocal
    }

    pub fn with_constraint(&self, constraint: SimplexConstraint) -> Result<Self> {
        Self::new(self.d, self.sources.clone(), constraint)
    }

    /// The overall loss `Σ_j 1/Σ_{i ∈ I_j} q_i^{(j)}(r_i)`;
    /// `+INFINITY` when some coordinate has zero total precision.
    pub fn objective(&self, r: &[f64]) -> Result<f64> {
        if r.len() != self.sources.len() {
            return Err(Error::DimensionMismatch(format!(
                "allocation of length {} for {} sources",
                r.len(),
                self.sources.len()
            )));
        }
        let mut total = 0.0;
        for (j, set) in self.reciprocal.iter().enumerate() {
            let mut precision = 0.0;
            for &i in set {
                precision += self.sources[i].precision_at(j, r[i].max(0.0))?;
            }
            if precision <= 0.0 {
                return Ok(f64::INFINITY);
            }
            total += 1.0 / precision;
        }
        Ok(total)
    }

    /// Analytic gradient of the objective:
    /// `∂/∂r_k = −Σ_{j ∈ S_k} q_k^{(j)′}(r_k) / (Σ_{i ∈ I_j} q_i^{(j)}(r_i))²`,
    /// with singular derivatives capped.
    pub fn gradient(&self, r: &[f64], out: &mut [f64]) -> Result<()> {
        out.fill(0.0);
        for (j, set) in self.reciprocal.iter().enumerate() {
            let mut precision = 0.0;
            for &i in set {
                precision += self.sources[i].precision_at(j, r[i].max(0.0))?;
            }
            if precision <= 0.0 {
                // The engine never differentiates at rejected (infinite)
                // points; push uphill on every member just in case.
                for &i in set {
                    out[i] -= DERIVATIVE_CAP;
                }
                continue;
            }
            let coef = -1.0 / (precision * precision);
            for &i in set {
                let dq = self.sources[i]
                    .tradeoff_at(j)?
                    .precision_derivative_capped(r[i].max(0.0), DERIVATIVE_CAP)?;
                out[i] += coef * dq;
            }
        }
        Ok(())
    }
}

/// Minimizes the supported-allocation objective by projected gradient
/// descent (same engine and tolerances as the simplex solver).
pub fn solve_support(p: &SupportProblem) -> Result<SolverReport> {
    solve_support_with(p, &PgdSettings::default())
}

pub fn solve_support_with(p: &SupportProblem, settings: &PgdSettings) -> Result<SolverReport> {
    // Keep iterates off zero for sources with a singular derivative
    // there; their optima are interior.
    let singular: Vec<bool> = p
        .sources()
        .iter()
        .map(|s| s.tradeoffs().iter().any(|f| f.derivative_singular_at_zero()))
        .collect();
    let report = minimize_projected(
        |r| {
            if singular.iter().zip(r).any(|(s, &ri)| *s && ri <= 0.0) {
                return f64::INFINITY;
            }
            p.objective(r).unwrap_or(f64::INFINITY)
        },
        |r, out| {
            if p.gradient(r, out).is_err() {
                out.fill(0.0);
            }
        },
        p.constraint(),
        None,
        settings,
    );
    Ok(report)
}

/// Closed form for total independence (`S_i = {i}`, `q_i = r_i/σ_i²`):
/// `r_i* = R σ_i / Σ_j σ_j`. Lower-quality sources (larger σ) receive
/// strictly more of the budget.
pub fn solve_total_independence_closed(sigma: &[f64], budget: f64) -> Result<Vec<f64>> {
    if !budget.is_finite() || budget <= 0.0 {
        return Err(Error::invalid(format!(
            "budget must be positive, got {budget}"
        )));
    }
    if sigma.is_empty() {
        return Err(Error::invalid("sigma must be nonempty"));
    }
    for (i, &s) in sigma.iter().enumerate() {
        if !s.is_finite() || s <= 0.0 {
            return Err(Error::invalid(format!(
                "sigma[{i}] must be positive, got {s}"
            )));
        }
    }
    let total: f64 = sigma.iter().sum();
    Ok(sigma.iter().map(|&s| budget * s / total).collect())
}
