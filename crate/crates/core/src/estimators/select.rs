use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::sample::{sample_covariance, SampleSet};
use crate::error::{Error, Result};
use crate::linalg::{dot, frobenius_norm, svd};
use crate::rearrange::{rearrange, BlockShape};
use crate::rng::{stream, TAG_SELECT};

/// Random-split parameters for [`select_lambda`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    /// Fraction of the sample used for fitting; the rest validates.
    pub split_fraction: f64,
    pub repetitions: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            split_fraction: 0.5,
            repetitions: 5,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::Contract(format!(
                "split fraction must lie in (0, 1), got {}",
                self.split_fraction
            )));
        }
        if self.repetitions == 0 {
            return Err(Error::Contract("at least one split repetition is needed".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LambdaSelection {
    pub lambda: f64,
    /// Average validation score for each grid entry, in grid order. Empty
    /// when the grid has a single entry, since nothing is scored then.
    pub scores: Vec<f64>,
}

/// `λ₀ · 2^{−m}` for `m = 0, …, steps`.
pub fn lambda_grid(lambda0: f64, steps: u32) -> Result<Vec<f64>> {
    if !(lambda0 > 0.0 && lambda0.is_finite()) {
        return Err(Error::Contract(format!(
            "grid start must be positive and finite, got {lambda0}"
        )));
    }
    Ok((0..=steps).map(|m| lambda0 * 0.5f64.powi(m as i32)).collect())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Contract("λ grid is empty".into()));
    }
    if let Some(bad) = grid.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::Contract(format!("λ grid entries must be positive, got {bad}")));
    }
    if grid.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Contract("λ grid must be sorted in descending order".into()));
    }
    Ok(())
}

/// Chooses λ from `grid` by repeated random splits.
///
/// Each repetition shuffles the sample with its own stream derived from
/// `(seed, repetition)`, fits the soft-threshold estimate on the first part
/// and scores `‖ℛ(Σ̃_fit(λ)) − ℛ(Σ̂_val)‖²_F`. Scores are averaged over
/// repetitions; the smallest average wins, ties going to the larger λ.
pub fn select_lambda(
    data: &SampleSet,
    shape: BlockShape,
    grid: &[f64],
    config: SplitConfig,
    seed: u64,
) -> Result<LambdaSelection> {
    check_grid(grid)?;
    config.validate()?;
    if data.d() != shape.dim() {
        return Err(Error::Shape(format!(
            "observations have dimension {}, but p·q = {}",
            data.d(),
            shape.dim()
        )));
    }
    let n = data.n();
    if grid.len() == 1 {
        return Ok(LambdaSelection {
            lambda: grid[0],
            scores: Vec::new(),
        });
    }
    if n < 2 {
        return Err(Error::Contract(
            "splitting needs at least two observations".into(),
        ));
    }
    let fit_len = ((config.split_fraction * n as f64).round() as usize).clamp(1, n - 1);

    let mut totals = vec![0.0; grid.len()];
    for rep in 0..config.repetitions {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut stream(seed, &[TAG_SELECT, rep as u64]));
        let fit = data.subset(&order[..fit_len])?;
        let val = data.subset(&order[fit_len..])?;
        let r_fit = rearrange(&sample_covariance(&fit), shape)?;
        let r_val = rearrange(&sample_covariance(&val), shape)?;
        let dec = svd(&r_fit)?;

        // With R_fit = Σ σⱼ uⱼ vⱼᵀ and wⱼ = (σⱼ − λ/2)₊,
        // ‖Σ wⱼ uⱼ vⱼᵀ − R_val‖² = Σ wⱼ² − 2 Σ wⱼ uⱼᵀ R_val vⱼ + ‖R_val‖².
        let val_sq = frobenius_norm(&r_val).powi(2);
        let cross: Vec<f64> = (0..dec.rank_capacity())
            .map(|j| {
                let rv = r_val.matmul_vec(dec.right(j));
                dot(dec.left(j), &rv)
            })
            .collect();
        for (total, &lambda) in totals.iter_mut().zip(grid) {
            let half = 0.5 * lambda;
            let mut score = val_sq;
            for (&s, &c) in dec.singular_values.iter().zip(&cross) {
                let w = s - half;
                if w > 0.0 {
                    score += w * w - 2.0 * w * c;
                }
            }
            *total += score.max(0.0);
        }
    }
    let scores: Vec<f64> = totals
        .iter()
        .map(|t| t / config.repetitions as f64)
        .collect();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s < scores[best] {
            best = i;
        }
    }
    Ok(LambdaSelection {
        lambda: grid[best],
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::pls_estimate;

    fn data(n: usize) -> SampleSet {
        let vectors: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..4).map(|j| (((i * 13 + j * 7) % 11) as f64 - 5.0) * (1.0 + j as f64 * 0.2)).collect())
            .collect();
        SampleSet::from_vectors(&vectors).unwrap()
    }

    #[test]
    fn single_entry_grid() {
        let shape = BlockShape::new(2, 2).unwrap();
        let sel = select_lambda(&data(6), shape, &[0.7], SplitConfig::default(), 1).unwrap();
        assert_eq!(sel.lambda, 0.7);
    }

    #[test]
    fn grid_validation() {
        let shape = BlockShape::new(2, 2).unwrap();
        let cfg = SplitConfig::default();
        assert!(select_lambda(&data(6), shape, &[], cfg, 1).is_err());
        assert!(select_lambda(&data(6), shape, &[1.0, 0.0], cfg, 1).is_err());
        assert!(select_lambda(&data(6), shape, &[1.0, 2.0], cfg, 1).is_err());
        assert_eq!(lambda_grid(4.0, 2).unwrap(), vec![4.0, 2.0, 1.0]);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let shape = BlockShape::new(2, 2).unwrap();
        let grid = lambda_grid(50.0, 8).unwrap();
        let a = select_lambda(&data(40), shape, &grid, SplitConfig::default(), 9).unwrap();
        let b = select_lambda(&data(40), shape, &grid, SplitConfig::default(), 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn score_identity_matches_direct_reconstruction() {
        let shape = BlockShape::new(2, 2).unwrap();
        let sample = data(30);
        let grid = lambda_grid(40.0, 6).unwrap();
        let cfg = SplitConfig {
            split_fraction: 0.4,
            repetitions: 1,
        };
        let sel = select_lambda(&sample, shape, &grid, cfg, 3).unwrap();

        let mut order: Vec<usize> = (0..30).collect();
        order.shuffle(&mut stream(3, &[TAG_SELECT, 0]));
        let fit = sample.subset(&order[..12]).unwrap();
        let val = sample.subset(&order[12..]).unwrap();
        let r_val = rearrange(&sample_covariance(&val), shape).unwrap();
        for (&lambda, &score) in grid.iter().zip(&sel.scores) {
            let est = pls_estimate(&fit, shape, lambda).unwrap().estimate;
            let diff = &rearrange(&est, shape).unwrap() - &r_val;
            let direct = frobenius_norm(&diff).powi(2);
            assert!((direct - score).abs() <= 1e-9 * direct.max(1.0), "{direct} vs {score}");
        }
    }
}
