//! Fleiss' kappa for a fixed number of raters per item.

use crate::error::{Error, Result};

/// `ratings[i][j]` is the number of raters who put item `i` in category `j`.
/// Every row must sum to the same rater count `n ≥ 2`.
///
/// Returns exactly `1.0` when every item is rated unanimously.
pub fn fleiss_kappa(ratings: &[Vec<u64>]) -> Result<f64> {
    let err = |m: String| Error::Statistics(m);
    let first = ratings.first().ok_or_else(|| err("no items rated".into()))?;
    let categories = first.len();
    if categories == 0 {
        return Err(err("no rating categories".into()));
    }
    let raters: u64 = first.iter().sum();
    if raters < 2 {
        return Err(err(format!("need at least 2 raters per item, found {raters}")));
    }
    for (i, row) in ratings.iter().enumerate() {
        if row.len() != categories {
            return Err(err(format!(
                "ragged matrix: item {i} has {} categories, expected {categories}",
                row.len()
            )));
        }
        let sum: u64 = row.iter().sum();
        if sum != raters {
            return Err(err(format!(
                "ragged matrix: item {i} has {sum} ratings, expected {raters}"
            )));
        }
    }

    let items = ratings.len() as f64;
    let n = raters as f64;
    let unanimous = ratings.iter().all(|row| row.iter().any(|&c| c == raters));
    if unanimous {
        return Ok(1.0);
    }
    let p_bar = ratings
        .iter()
        .map(|row| {
            let sq: f64 = row.iter().map(|&c| (c * c) as f64).sum();
            (sq - n) / (n * (n - 1.0))
        })
        .sum::<f64>()
        / items;
    let p_e: f64 = (0..categories)
        .map(|j| {
            let pj = ratings.iter().map(|row| row[j] as f64).sum::<f64>() / (items * n);
            pj * pj
        })
        .sum();
    if (1.0 - p_e).abs() < f64::EPSILON {
        return Err(err("degenerate: chance agreement is 1 but agreement is imperfect".into()));
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}
