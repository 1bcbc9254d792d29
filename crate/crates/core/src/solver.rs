//! Budget-simplex machinery: the constraint set, exact Euclidean
//! projection, a shared projected-gradient engine, and the closed-form
//! allocations (best source, power-law KKT, water-filling).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tradeoffs::{TradeoffFunction, DERIVATIVE_CAP};

/// Divisible-budget feasible set `{r : lower ≤ r ≤ upper, Σ r ≤ budget}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexConstraint {
    budget: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SimplexConstraint {
    /// The scaled simplex `budget · U_N` (zero lower bounds, no upper bounds).
    pub fn budget_only(n: usize, budget: f64) -> Result<Self> {
        Self::with_bounds(budget, vec![0.0; n], vec![f64::INFINITY; n])
    }

    pub fn with_bounds(budget: f64, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if !budget.is_finite() || budget <= 0.0 {
            return Err(Error::invalid(format!(
                "budget must be positive, got {budget}"
            )));
        }
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "bounds must be nonempty and of equal length ({} vs {})",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if !l.is_finite() || l < 0.0 {
                return Err(Error::Infeasible(format!(
                    "lower bound {l} at index {i} must be finite and nonnegative"
                )));
            }
            if u < l || u.is_nan() {
                return Err(Error::Infeasible(format!(
                    "bounds at index {i} are inverted ({l} > {u})"
                )));
            }
        }
        let lower_sum: f64 = lower.iter().sum();
        if lower_sum > budget {
            return Err(Error::Infeasible(format!(
                "lower bounds sum to {lower_sum}, exceeding the budget {budget}"
            )));
        }
        Ok(SimplexConstraint {
            budget,
            lower,
            upper,
        })
    }

    pub fn n(&self) -> usize {
        self.lower.len()
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Same bounds, different budget.
    pub fn with_budget(&self, budget: f64) -> Result<Self> {
        Self::with_bounds(budget, self.lower.clone(), self.upper.clone())
    }

    pub fn contains(&self, r: &[f64], tol: f64) -> bool {
        if r.len() != self.n() {
            return false;
        }
        let sum: f64 = r.iter().sum();
        sum <= self.budget + tol
            && r.iter()
                .zip(&self.lower)
                .zip(&self.upper)
                .all(|((&x, &l), &u)| x >= l - tol && x <= u + tol)
    }

    /// A feasible interior-leaning start: the projection of the uniform
    /// point `budget/n`.
    pub fn uniform_start(&self) -> Vec<f64> {
        self.project(&vec![self.budget / self.n() as f64; self.n()])
    }

    /// Exact Euclidean projection onto the constraint set.
    ///
    /// If the box-clamped point satisfies the budget it is returned
    /// directly; otherwise the budget is active and the threshold is
    /// located exactly by a sweep over the sorted breakpoints of the
    /// piecewise-linear sum (the sort-and-threshold procedure; no
    /// iteration).
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n(), "projection dimension mismatch");
        let clamp =
            |theta: f64| -> Vec<f64> {
                v.iter()
                    .zip(&self.lower)
                    .zip(&self.upper)
                    .map(|((&vi, &l), &u)| (vi - theta).clamp(l, u))
                    .collect()
            };
        let boxed = clamp(0.0);
        if boxed.iter().sum::<f64>() <= self.budget {
            return boxed;
        }

        // The budget is active: find theta > 0 with
        //   g(theta) = Σ clamp(v_i - theta, l_i, u_i) = budget.
        // Events: index i leaves its upper bound at theta = v_i - u_i
        // and hits its lower bound at theta = v_i - l_i.
        #[derive(Clone, Copy)]
        enum Event {
            EnterFree(usize),
            HitLower(usize),
        }
        let mut events: Vec<(f64, Event)> = Vec::with_capacity(2 * self.n());
        let mut sum_fixed = 0.0; // coordinates pinned at a bound
        let mut sum_free_v = 0.0; // Σ v_i over free coordinates
        let mut count_free = 0usize;
        for i in 0..self.n() {
            let (vi, l, u) = (v[i], self.lower[i], self.upper[i]);
            if u.is_finite() && vi - u > 0.0 {
                // starts at the upper bound, frees at theta = v_i - u
                sum_fixed += u;
                events.push((vi - u, Event::EnterFree(i)));
                events.push((vi - l, Event::HitLower(i)));
            } else if vi - l > 0.0 {
                // starts free, pins to the lower bound at v_i - l
                sum_free_v += vi;
                count_free += 1;
                events.push((vi - l, Event::HitLower(i)));
            } else {
                // already at (or below) the lower bound for all theta > 0
                sum_fixed += l;
            }
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut theta_prev = 0.0;
        for &(theta_event, event) in &events {
            if theta_event > theta_prev && count_free > 0 {
                // g is linear on [theta_prev, theta_event]
                let theta_star = (sum_free_v + sum_fixed - self.budget) / count_free as f64;
                if theta_star >= theta_prev && theta_star <= theta_event {
                    return clamp(theta_star);
                }
            }
            match event {
                Event::EnterFree(i) => {
                    sum_fixed -= self.upper[i];
                    sum_free_v += v[i];
                    count_free += 1;
                }
                Event::HitLower(i) => {
                    sum_free_v -= v[i];
                    count_free -= 1;
                    sum_fixed += self.lower[i];
                }
            }
            theta_prev = theta_event.max(theta_prev);
        }
        // Last segment: all remaining mass is free (or everything is
        // pinned at the lower bounds, which is feasible by validation).
        if count_free > 0 {
            let theta_star = (sum_free_v + sum_fixed - self.budget) / count_free as f64;
            return clamp(theta_star.max(theta_prev));
        }
        clamp(theta_prev.max(0.0) + 1.0)
    }
}

/// Euclidean projection of `v` onto the constraint set.
pub fn project_simplex(v: &[f64], c: &SimplexConstraint) -> Result<Vec<f64>> {
    if v.len() != c.n() {
        return Err(Error::DimensionMismatch(format!(
            "vector has length {}, constraint expects {}",
            v.len(),
            c.n()
        )));
    }
    if v.iter().any(|x| x.is_nan()) {
        return Err(Error::domain("cannot project a NaN vector"));
    }
    Ok(c.project(v))
}

/// Outcome of a numerical solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverReport {
    pub allocation: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Projected-gradient norm at the returned allocation, in budget
    /// units, excluding coordinates pinned at a singular boundary.
    pub kkt_residual: f64,
}

#[derive(Debug, Clone)]
pub struct PgdSettings {
    pub max_iters: usize,
    /// Relative objective change below which an iteration counts as stalled.
    pub obj_rel_tol: f64,
    /// Consecutive stalled iterations required for convergence.
    pub obj_window: usize,
    /// Projected-gradient norm required for convergence.
    pub grad_tol: f64,
    pub armijo_c1: f64,
    pub max_halvings: usize,
}

impl Default for PgdSettings {
    fn default() -> Self {
        PgdSettings {
            max_iters: 100_000,
            obj_rel_tol: 1e-10,
            obj_window: 5,
            grad_tol: 1e-8,
            armijo_c1: 1e-4,
            max_halvings: 60,
        }
    }
}

/// Projected gradient descent with Armijo backtracking (halving,
/// initial step 1.0 per iteration) and a gradient-only polish phase.
///
/// Minimizes `objective` over the constraint set. The problem is
/// rescaled internally to budget units so that step lengths are
/// comparable across budgets. An objective value of `f64::INFINITY`
/// marks a trial point as unacceptable (used for barrier-style
/// rejection and to keep iterates off derivative singularities).
/// Gradients are capped at [`DERIVATIVE_CAP`]; the convergence
/// residual excludes coordinates pinned at a bound by a capped
/// (singular) gradient.
///
/// Objective-comparison line search alone stalls once improvements
/// sink below the f64 resolution of the objective (a projected-
/// gradient norm of roughly `sqrt(eps·|f|·curvature)`), which is not
/// enough for the 1e-8 residual tolerance. The polish phase therefore
/// continues with fixed-step projected-gradient iterations accepted on
/// residual decrease — a comparison of gradients, which carry full
/// relative precision — until the residual tolerance is met.
pub(crate) fn minimize_projected<F, G>(
    objective: F,
    gradient: G,
    constraint: &SimplexConstraint,
    start: Option<Vec<f64>>,
    settings: &PgdSettings,
) -> SolverReport
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64], &mut [f64]),
{
    let n = constraint.n();
    let scale = constraint.budget();
    let scaled = SimplexConstraint::with_bounds(
        1.0,
        constraint.lower().iter().map(|l| l / scale).collect(),
        constraint.upper().iter().map(|u| u / scale).collect(),
    )
    .expect("a valid constraint stays valid under scaling");

    let obj = |x: &[f64]| -> f64 {
        let r: Vec<f64> = x.iter().map(|xi| xi * scale).collect();
        objective(&r)
    };
    let grad = |x: &[f64], out: &mut [f64]| {
        let r: Vec<f64> = x.iter().map(|xi| xi * scale).collect();
        gradient(&r, out);
        for g in out.iter_mut() {
            *g = (*g * scale).clamp(-DERIVATIVE_CAP, DERIVATIVE_CAP);
        }
    };
    let residual = |x: &[f64], g: &[f64]| -> f64 {
        let step_point: Vec<f64> = x.iter().zip(g).map(|(xi, gi)| xi - gi).collect();
        let projected = scaled.project(&step_point);
        let mut sum = 0.0;
        for i in 0..n {
            let at_bound = x[i] <= scaled.lower()[i] + 1e-14 || x[i] >= scaled.upper()[i] - 1e-14;
            if at_bound && g[i].abs() >= DERIVATIVE_CAP {
                continue;
            }
            let d = projected[i] - x[i];
            sum += d * d;
        }
        sum.sqrt()
    };

    let mut x = match start {
        Some(r) => scaled.project(&r.iter().map(|ri| ri / scale).collect::<Vec<_>>()),
        None => scaled.uniform_start(),
    };
    let mut f = obj(&x);
    let mut grad_buf = vec![0.0; n];
    let mut stall_count = 0usize;
    let mut iterations = 0usize;
    let mut kkt_residual = f64::INFINITY;
    let mut last_accepted_step = 1.0;
    let mut converged = false;

    while iterations < settings.max_iters {
        iterations += 1;
        grad(&x, &mut grad_buf);
        kkt_residual = residual(&x, &grad_buf);

        if stall_count >= settings.obj_window && kkt_residual < settings.grad_tol {
            converged = true;
            break;
        }

        // Armijo backtracking along the projection arc.
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=settings.max_halvings {
            let trial_point: Vec<f64> = x
                .iter()
                .zip(&grad_buf)
                .map(|(xi, gi)| xi - step * gi)
                .collect();
            let trial = scaled.project(&trial_point);
            let ft = obj(&trial);
            if ft.is_finite() {
                let decrease: f64 = grad_buf
                    .iter()
                    .zip(trial.iter().zip(&x))
                    .map(|(g, (t, xi))| g * (t - xi))
                    .sum();
                if ft <= f + settings.armijo_c1 * decrease {
                    accepted = Some((trial, ft, step));
                    break;
                }
            }
            step *= 0.5;
        }

        match accepted {
            Some((trial, ft, step)) => {
                let rel = (f - ft).abs() / ft.abs().max(1e-30);
                if rel < settings.obj_rel_tol {
                    stall_count += 1;
                } else {
                    stall_count = 0;
                }
                x = trial;
                f = ft;
                last_accepted_step = step;
            }
            None => {
                // No acceptable step: improvements are below the float
                // resolution of the objective. Count as stalled; after
                // the window fills, hand over to the polish phase.
                stall_count += 1;
                if stall_count > settings.obj_window {
                    break;
                }
            }
        }
    }

    // Polish: fixed-step projected-gradient iterations accepted on
    // residual decrease (and a finite objective).
    if !converged && stall_count >= settings.obj_window {
        let mut step = last_accepted_step.min(1.0);
        let mut polish_left = 2000usize;
        while polish_left > 0 && kkt_residual >= settings.grad_tol && step > 1e-18 {
            polish_left -= 1;
            iterations += 1;
            let trial_point: Vec<f64> = x
                .iter()
                .zip(&grad_buf)
                .map(|(xi, gi)| xi - step * gi)
                .collect();
            let trial = scaled.project(&trial_point);
            let mut trial_grad = vec![0.0; n];
            grad(&trial, &mut trial_grad);
            let trial_residual = residual(&trial, &trial_grad);
            if trial_residual < kkt_residual && obj(&trial).is_finite() {
                x = trial;
                grad_buf = trial_grad;
                kkt_residual = trial_residual;
            } else {
                step *= 0.5;
            }
        }
        f = obj(&x);
        converged = kkt_residual < settings.grad_tol;
    }

    SolverReport {
        allocation: x.iter().map(|xi| xi * scale).collect(),
        objective: f,
        iterations,
        converged,
        kkt_residual,
    }
}

/// Total precision `Σ q_i(r_i)` of an allocation, or `-INFINITY` on
/// evaluation failure (used as a rejection sentinel when negated).
fn total_precision(fs: &[TradeoffFunction], r: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (f, &ri) in fs.iter().zip(r) {
        match f.precision(ri.max(0.0)) {
            Ok(q) => sum += q,
            Err(_) => return f64::NEG_INFINITY,
        }
    }
    sum
}

/// Maximizes `Σ q_i(r_i)` over the constraint by projected gradient
/// ascent. The catalog guarantees each `q_i` concave non-decreasing,
/// so this is a convex program and the report's objective is the
/// global maximum on convergence.
pub fn solve_simplex_generic(
    fs: &[TradeoffFunction],
    c: &SimplexConstraint,
) -> Result<SolverReport> {
    solve_simplex_generic_with(fs, c, &PgdSettings::default())
}

pub fn solve_simplex_generic_with(
    fs: &[TradeoffFunction],
    c: &SimplexConstraint,
    settings: &PgdSettings,
) -> Result<SolverReport> {
    if fs.len() != c.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} tradeoff functions for a constraint over {} sources",
            fs.len(),
            c.n()
        )));
    }
    for f in fs {
        f.validate()?;
    }
    // Iterates must stay off the boundary wherever the derivative is
    // singular; those optima are interior anyway.
    let singular: Vec<bool> = fs.iter().map(|f| f.derivative_singular_at_zero()).collect();
    let mut report = minimize_projected(
        |r| {
            if singular.iter().zip(r).any(|(s, &ri)| *s && ri <= 0.0) {
                return f64::INFINITY;
            }
            -total_precision(fs, r)
        },
        |r, out| {
            for (i, (f, &ri)) in fs.iter().zip(r).enumerate() {
                out[i] = -f
                    .precision_derivative_capped(ri.max(0.0), DERIVATIVE_CAP)
                    .unwrap_or(DERIVATIVE_CAP);
            }
        },
        c,
        None,
        settings,
    );
    report.objective = -report.objective;
    Ok(report)
}

/// All budget to the source with the smallest intrinsic variance
/// (lowest index on ties). Optimal for linear precision.
pub fn solve_best_source(sigma_sq: &[f64], budget: f64) -> Result<Vec<f64>> {
    check_positive_budget(budget)?;
    check_positive_slice(sigma_sq, "sigma_sq")?;
    let best = sigma_sq
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::invalid("sigma_sq must be nonempty"))?;
    let mut r = vec![0.0; sigma_sq.len()];
    r[best] = budget;
    Ok(r)
}

/// Closed-form optimum for power precision `q_i(r) = r^α/σ_i²` on the
/// budget simplex:
///
///   r_i* = R · (σ_i²/α)^{1/(α−1)} / Σ_j (σ_j²/α)^{1/(α−1)}
///
/// Evaluated in log space and renormalized so the result sums to `R`
/// exactly. `alpha ≥ 1` routes to the best-source rule, the limit of
/// this formula.
pub fn solve_power_kkt(sigma_sq: &[f64], alpha: f64, budget: f64) -> Result<Vec<f64>> {
    check_positive_budget(budget)?;
    check_positive_slice(sigma_sq, "sigma_sq")?;
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::invalid(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if alpha >= 1.0 {
        return solve_best_source(sigma_sq, budget);
    }
    let exponent = 1.0 / (alpha - 1.0);
    let logs: Vec<f64> = sigma_sq
        .iter()
        .map(|&s| exponent * (s / alpha).ln())
        .collect();
    let max_log = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|&t| (t - max_log).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.iter().map(|w| budget * w / total).collect())
}

/// Water level `A` solving `Σ max(0, A − a_i) = 1`, found exactly from
/// the sorted breakpoints (no iteration).
pub fn water_filling_level(a: &[f64]) -> Result<f64> {
    check_positive_slice(a, "a")?;
    let mut sorted = a.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut prefix = 0.0;
    for (k, &ak) in sorted.iter().enumerate() {
        prefix += ak;
        let level = (1.0 + prefix) / (k + 1) as f64;
        let next_ok = k + 1 == sorted.len() || level <= sorted[k + 1];
        if level > ak && next_ok {
            return Ok(level);
        }
    }
    unreachable!("the water level always exists for positive a")
}

/// Water-filling allocation `r_i* = R · max(0, A − a_i)`.
///
/// The allocation is blind to the intrinsic variances: `sigma_sq` is
/// validated but never read by the formula.
pub fn solve_water_filling(sigma_sq: &[f64], a: &[f64], budget: f64) -> Result<Vec<f64>> {
    check_positive_budget(budget)?;
    check_positive_slice(sigma_sq, "sigma_sq")?;
    if sigma_sq.len() != a.len() {
        return Err(Error::DimensionMismatch(format!(
            "sigma_sq has length {}, a has length {}",
            sigma_sq.len(),
            a.len()
        )));
    }
    let level = water_filling_level(a)?;
    Ok(a.iter()
        .map(|&ai| budget * (level - ai).max(0.0))
        .collect())
}

fn check_positive_budget(budget: f64) -> Result<()> {
    if !budget.is_finite() || budget <= 0.0 {
        return Err(Error::invalid(format!(
            "budget must be positive, got {budget}"
        )));
    }
    Ok(())
}

fn check_positive_slice(values: &[f64], name: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid(format!("{name} must be nonempty")));
    }
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::invalid(format!(
                "{name}[{i}] must be positive, got {v}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn simplex(n: usize, budget: f64) -> SimplexConstraint {
        SimplexConstraint::budget_only(n, budget).unwrap()
    }

    /// Dense grid oracle for projections: minimizes ||x - v||² over a
    /// grid of feasible points.
    fn grid_project_2d(v: [f64; 2], budget: f64, step: f64) -> [f64; 2] {
        let mut best = ([0.0, 0.0], f64::INFINITY);
        let steps = (budget / step).round() as usize;
        for i in 0..=steps {
            for j in 0..=(steps - i) {
                let x = [i as f64 * step, j as f64 * step];
                let d = (x[0] - v[0]).powi(2) + (x[1] - v[1]).powi(2);
                if d < best.1 {
                    best = (x, d);
                }
            }
        }
        best.0
    }

    #[test]
    fn projection_basic_cases() {
        let c = simplex(2, 1.0);
        assert_eq!(c.project(&[0.5, 0.5]), vec![0.5, 0.5]);
        assert_eq!(c.project(&[0.3, 0.2]), vec![0.3, 0.2]); // strict interior kept
        let p = c.project(&[1.0, 1.0]);
        assert_relative_eq!(p[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(p[1], 0.5, epsilon = 1e-12);

        let p = c.project(&[2.0, 0.0]);
        let oracle = grid_project_2d([2.0, 0.0], 1.0, 1e-3);
        assert_relative_eq!(p[0], oracle[0], epsilon = 2e-3);
        assert_relative_eq!(p[1], oracle[1], epsilon = 2e-3);
        assert_relative_eq!(p[0], 1.0, epsilon = 1e-12);
        assert_eq!(p[1], 0.0);
    }

    #[test]
    fn projection_with_boxes() {
        let c = SimplexConstraint::with_bounds(2.0, vec![0.1, 0.0], vec![0.6, f64::INFINITY])
            .unwrap();
        // box-feasible, budget slack: pure clamp
        let p = c.project(&[0.9, 0.5]);
        assert_eq!(p, vec![0.6, 0.5]);
        // budget active
        let p = c.project(&[3.0, 3.0]);
        assert!(c.contains(&p, 1e-12));
        assert_relative_eq!(p.iter().sum::<f64>(), 2.0, epsilon = 1e-12);
        assert_eq!(p[0], 0.6);
        assert_relative_eq!(p[1], 1.4, epsilon = 1e-12);
    }

    #[test]
    fn projection_feasibility_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let n = rng.random_range(1..=8);
            let budget = rng.random_range(0.1..10.0);
            let c = simplex(n, budget);
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let p = c.project(&v);
            assert!(c.contains(&p, 1e-12), "projection must be feasible");
            // projection is idempotent
            let pp = c.project(&p);
            for (a, b) in p.iter().zip(&pp) {
                assert_relative_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn projection_is_nearest_point() {
        // Against the dense 2-d grid oracle, step 1e-3.
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..25 {
            let c = simplex(2, 1.0);
            let v = [rng.random_range(-2.0..2.5), rng.random_range(-2.0..2.5)];
            let p = c.project(&v);
            let o = grid_project_2d(v, 1.0, 1e-3);
            let dp = (p[0] - v[0]).powi(2) + (p[1] - v[1]).powi(2);
            let dog = (o[0] - v[0]).powi(2) + (o[1] - v[1]).powi(2);
            assert!(dp <= dog + 1e-6, "projection beats the grid oracle");
        }
    }

    #[test]
    fn infeasible_constraints_rejected() {
        assert!(SimplexConstraint::with_bounds(1.0, vec![0.6, 0.6], vec![1.0, 1.0]).is_err());
        assert!(SimplexConstraint::with_bounds(-1.0, vec![0.0], vec![1.0]).is_err());
        assert!(SimplexConstraint::with_bounds(1.0, vec![0.5], vec![0.2]).is_err());
        assert!(project_simplex(&[0.0, 0.0], &simplex(3, 1.0)).is_err());
    }

    #[test]
    fn generic_solver_linear_goes_to_best_source() {
        let fs = vec![
            TradeoffFunction::linear_precision(1.0).unwrap(),
            TradeoffFunction::linear_precision(2.0).unwrap(),
            TradeoffFunction::linear_precision(3.0).unwrap(),
        ];
        let report = solve_simplex_generic(&fs, &simplex(3, 1.0)).unwrap();
        assert!(report.converged, "linear case must converge");
        assert_relative_eq!(report.allocation[0], 1.0, epsilon = 1e-8);
        assert!(report.allocation[1].abs() < 1e-8);
        assert!(report.allocation[2].abs() < 1e-8);
        assert_relative_eq!(report.objective, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn generic_solver_matches_power_kkt() {
        let fs = vec![
            TradeoffFunction::power_precision(1.0, 0.5).unwrap(),
            TradeoffFunction::power_precision(2.0, 0.5).unwrap(),
        ];
        let report = solve_simplex_generic(&fs, &simplex(2, 1.0)).unwrap();
        let closed = solve_power_kkt(&[1.0, 2.0], 0.5, 1.0).unwrap();
        assert_relative_eq!(closed[0], 0.8, epsilon = 1e-12);
        assert_relative_eq!(closed[1], 0.2, epsilon = 1e-12);
        assert_relative_eq!(report.allocation[0], 0.8, epsilon = 1e-5);
        let closed_obj = total_precision(&fs, &closed);
        assert!((report.objective - closed_obj).abs() < 1e-6);
    }

    #[test]
    fn generic_solver_matches_water_filling() {
        let fs = vec![
            TradeoffFunction::log_channel_precision(1.0, 1.0, 1.0).unwrap(),
            TradeoffFunction::log_channel_precision(1.0, 1.5, 1.0).unwrap(),
        ];
        let report = solve_simplex_generic(&fs, &simplex(2, 1.0)).unwrap();
        let closed = solve_water_filling(&[1.0, 1.0], &[1.0, 1.5], 1.0).unwrap();
        assert_relative_eq!(closed[0], 0.75, epsilon = 1e-12);
        assert_relative_eq!(closed[1], 0.25, epsilon = 1e-12);
        let closed_obj = total_precision(&fs, &closed);
        assert!((report.objective - closed_obj).abs() < 1e-6);
        assert_relative_eq!(report.allocation[0], 0.75, epsilon = 1e-4);
    }

    #[test]
    fn power_kkt_cases() {
        let r = solve_power_kkt(&[1.0, 1.0], 0.3, 2.0).unwrap();
        assert_relative_eq!(r[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(r[1], 1.0, epsilon = 1e-12);

        // alpha -> 1 concentrates on the best source
        let r = solve_power_kkt(&[1.0, 2.0], 0.99, 1.0).unwrap();
        assert!(r[0] > 0.99);

        // alpha >= 1 routes to the best-source rule
        let r = solve_power_kkt(&[2.0, 1.0], 1.0, 1.0).unwrap();
        assert_eq!(r, vec![0.0, 1.0]);

        // extreme parameters stay finite thanks to the log-space form
        let r = solve_power_kkt(&[10.0, 20.0, 30.0], 0.999, 1.0).unwrap();
        assert!(r.iter().all(|x| x.is_finite()));
        assert_relative_eq!(r.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn water_filling_cases() {
        assert_relative_eq!(water_filling_level(&[1.0, 1.0]).unwrap(), 1.5);
        assert_relative_eq!(water_filling_level(&[1.0, 1.5]).unwrap(), 1.75);
        assert_relative_eq!(water_filling_level(&[1.0, 3.0]).unwrap(), 2.0);

        let r = solve_water_filling(&[1.0, 1.0], &[1.0, 1.5], 1.0).unwrap();
        assert_relative_eq!(r[0], 0.75, epsilon = 1e-12);
        assert_relative_eq!(r[1], 0.25, epsilon = 1e-12);

        let r = solve_water_filling(&[1.0, 1.0], &[1.0, 3.0], 1.0).unwrap();
        assert_relative_eq!(r[0], 1.0, epsilon = 1e-12);
        assert_eq!(r[1], 0.0);
    }

    #[test]
    fn water_filling_is_blind_to_sigma() {
        let a = [0.7, 1.3, 2.2, 0.9];
        let r1 = solve_water_filling(&[1.0, 2.0, 3.0, 4.0], &a, 2.0).unwrap();
        let r2 = solve_water_filling(&[4.0, 3.0, 2.0, 1.0], &a, 2.0).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn budget_exhausted_to_high_precision() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.random_range(2..=10);
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..3.0)).collect();
            let s: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..3.0)).collect();
            let budget = rng.random_range(0.5..4.0);
            let r = solve_water_filling(&s, &a, budget).unwrap();
            assert_relative_eq!(r.iter().sum::<f64>(), budget, max_relative = 1e-10);
        }
    }

    #[test]
    fn objective_monotone_in_budget() {
        let fs = vec![
            TradeoffFunction::power_precision(1.0, 0.7).unwrap(),
            TradeoffFunction::log_channel_precision(2.0, 1.0, 1.0).unwrap(),
            TradeoffFunction::linear_precision(3.0).unwrap(),
        ];
        let mut prev = f64::NEG_INFINITY;
        for k in 1..=6 {
            let budget = 0.5 * k as f64;
            let report = solve_simplex_generic(&fs, &simplex(3, budget)).unwrap();
            assert!(
                report.objective >= prev - 1e-9,
                "objective must not decrease with budget"
            );
            prev = report.objective;
        }
    }

    #[test]
    fn equalized_marginal_returns_at_optimum() {
        // Interior coordinates of the optimum share the same q'.
        let sigma_sq = [1.0, 1.7, 2.4];
        let alpha = 0.6;
        let fs: Vec<TradeoffFunction> = sigma_sq
            .iter()
            .map(|&s| TradeoffFunction::power_precision(s, alpha).unwrap())
            .collect();
        let report = solve_simplex_generic(&fs, &simplex(3, 1.0)).unwrap();
        let derivs: Vec<f64> = fs
            .iter()
            .zip(&report.allocation)
            .filter(|(_, &r)| r > 1e-6)
            .map(|(f, &r)| f.precision_derivative(r).unwrap())
            .collect();
        assert!(derivs.len() == 3, "power optimum is interior");
        for d in &derivs[1..] {
            assert_relative_eq!(*d, derivs[0], max_relative = 1e-5);
        }
    }

    #[test]
    fn iteration_cap_reports_not_converged() {
        let fs = vec![
            TradeoffFunction::power_precision(1.0, 0.5).unwrap(),
            TradeoffFunction::power_precision(2.0, 0.5).unwrap(),
        ];
        let settings = PgdSettings {
            max_iters: 2,
            ..PgdSettings::default()
        };
        let report = solve_simplex_generic_with(&fs, &simplex(2, 1.0), &settings).unwrap();
        assert!(!report.converged);
        assert_eq!(report.iterations, 2);
    }
}
