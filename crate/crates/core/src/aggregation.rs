//! Optimal linear aggregation of source estimates with the qualities
//! held fixed — the inner minimization of the joint allocation
//! problem. For losses `ℓ_i` the optimal convex weights are
//! `λ_i* = ℓ_i⁻¹ / Σ ℓ⁻¹` with aggregate loss `1/Σ ℓ⁻¹`; with
//! heterogeneous supports the same formula applies coordinate-wise
//! over each reciprocal set.

use crate::error::{Error, Result};
use crate::support::SourceModel;

/// Per-coordinate convex aggregation weights plus the losses they
/// induce. Rows are stored sparsely over each coordinate's reciprocal
/// set; a single-coordinate problem has one row.
#[derive(Debug, Clone)]
pub struct AggregationWeights {
    rows: Vec<Vec<(usize, f64)>>,
    per_coord_loss: Vec<f64>,
    total_loss: f64,
}

impl AggregationWeights {
    /// Sparse weight rows: `rows()[j]` lists `(source, weight)` for
    /// every source observing coordinate `j`.
    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn per_coord_loss(&self) -> &[f64] {
        &self.per_coord_loss
    }

    pub fn total_loss(&self) -> f64 {
        self.total_loss
    }

    /// Dense weight vector for a single-coordinate problem.
    pub fn lambda(&self, n: usize) -> Vec<f64> {
        let mut dense = vec![0.0; n];
        if let [row] = self.rows.as_slice() {
            for &(i, w) in row {
                dense[i] = w;
            }
        }
        dense
    }

    pub fn weight(&self, coord: usize, source: usize) -> f64 {
        self.rows[coord]
            .iter()
            .find(|(i, _)| *i == source)
            .map(|&(_, w)| w)
            .unwrap_or(0.0)
    }
}

/// Weights for one coordinate given the losses of the sources that
/// observe it. Infinite losses are admitted and receive weight zero.
fn weights_for_losses(entries: &[(usize, f64)]) -> Result<(Vec<(usize, f64)>, f64)> {
    let mut sum_precision = 0.0;
    for &(_, loss) in entries {
        if loss.is_nan() || loss <= 0.0 {
            return Err(Error::domain(format!(
                "losses must be positive (possibly infinite), got {loss}"
            )));
        }
        if loss.is_finite() {
            sum_precision += 1.0 / loss;
        }
    }
    if sum_precision == 0.0 {
        return Err(Error::NoInformation);
    }
    let row = entries
        .iter()
        .map(|&(i, loss)| {
            let w = if loss.is_finite() {
                (1.0 / loss) / sum_precision
            } else {
                0.0
            };
            (i, w)
        })
        .collect();
    Ok((row, 1.0 / sum_precision))
}

/// Optimal weights `λ_i* = ℓ_i⁻¹/Σ ℓ⁻¹` for sources that all estimate
/// the same quantity; the aggregate loss `1/Σ ℓ⁻¹` never exceeds the
/// best single loss.
pub fn optimal_weights_single(losses: &[f64]) -> Result<AggregationWeights> {
    if losses.is_empty() {
        return Err(Error::invalid("losses must be nonempty"));
    }
    let entries: Vec<(usize, f64)> = losses.iter().cloned().enumerate().collect();
    let (row, loss) = weights_for_losses(&entries)?;
    Ok(AggregationWeights {
        rows: vec![row],
        per_coord_loss: vec![loss],
        total_loss: loss,
    })
}

/// Optimal per-coordinate weights for supported sources at allocation
/// `r`: row `j` carries `ℓ_i^{(j)}(r_i)⁻¹ / Σ_{i' ∈ I_j} ℓ_{i'}^{(j)}(r_{i'})⁻¹`
/// over the reciprocal set `I_j`, and the total loss is
/// `Σ_j 1 / Σ_{i ∈ I_j} q_i^{(j)}(r_i)`.
pub fn optimal_weights_supported(
    sources: &[SourceModel],
    r: &[f64],
    d: usize,
) -> Result<AggregationWeights> {
    build_supported(sources, r, d, Scheme::Optimal)
}

/// Uniform weights `1/|I_j|` over each reciprocal set, with the loss
/// `Σ_j Σ_{i ∈ I_j} ℓ_i^{(j)}(r_i) / |I_j|²` they induce. Reference
/// point for the dominance property of the optimal weights.
pub fn uniform_weights_supported(
    sources: &[SourceModel],
    r: &[f64],
    d: usize,
) -> Result<AggregationWeights> {
    build_supported(sources, r, d, Scheme::Uniform)
}

enum Scheme {
    Optimal,
    Uniform,
}

fn build_supported(
    sources: &[SourceModel],
    r: &[f64],
    d: usize,
    scheme: Scheme,
) -> Result<AggregationWeights> {
    if sources.len() != r.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} sources but allocation of length {}",
            sources.len(),
            r.len()
        )));
    }
    let mut rows = Vec::with_capacity(d);
    let mut per_coord_loss = Vec::with_capacity(d);
    for j in 0..d {
        let mut entries = Vec::new();
        for (i, source) in sources.iter().enumerate() {
            if source.support().contains(&j) {
                entries.push((i, source.loss_at(j, r[i])?));
            }
        }
        if entries.is_empty() {
            return Err(Error::UnobservableCoordinate {
                coord: j,
                reason: "no source observes it".into(),
            });
        }
        let (row, loss) = match scheme {
            Scheme::Optimal => weights_for_losses(&entries).map_err(|e| match e {
                Error::NoInformation => Error::UnobservableCoordinate {
                    coord: j,
                    reason: "every observing source has infinite loss".into(),
                },
                other => other,
            })?,
            Scheme::Uniform => {
                let k = entries.len() as f64;
                let loss: f64 = entries.iter().map(|&(_, l)| l / (k * k)).sum();
                (entries.iter().map(|&(i, _)| (i, 1.0 / k)).collect(), loss)
            }
        };
        rows.push(row);
        per_coord_loss.push(loss);
    }
    let total_loss = per_coord_loss.iter().sum();
    Ok(AggregationWeights {
        rows,
        per_coord_loss,
        total_loss,
    })
}

/// Combines partial estimates into a full vector: coordinate `j` is
/// `Σ_{i ∈ I_j} Λ_i^{(j)} · (estimate of source i at j)`. Estimate `i`
/// must have exactly `|S_i|` entries, ordered like the support.
pub fn aggregate_estimates(
    sources: &[SourceModel],
    estimates: &[Vec<f64>],
    weights: &AggregationWeights,
) -> Result<Vec<f64>> {
    if sources.len() != estimates.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} sources but {} estimates",
            sources.len(),
            estimates.len()
        )));
    }
    for (i, (source, estimate)) in sources.iter().zip(estimates).enumerate() {
        if source.support().len() != estimate.len() {
            return Err(Error::DimensionMismatch(format!(
                "estimate {i} has {} entries for a support of size {}",
                estimate.len(),
                source.support().len()
            )));
        }
    }
    let d = weights.rows().len();
    let mut out = vec![0.0; d];
    for (j, row) in weights.rows().iter().enumerate() {
        for &(i, w) in row {
            if w == 0.0 {
                continue;
            }
            let pos = sources[i]
                .support()
                .iter()
                .position(|&c| c == j)
                .ok_or_else(|| {
                    Error::DimensionMismatch(format!(
                        "weight references source {i} at coordinate {j} outside its support"
                    ))
                })?;
            out[j] += w * estimates[i][pos];
        }
    }
    Ok(out)
}
