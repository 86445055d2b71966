//! Active liquidity per price bucket, in the shape of a depth chart.

use serde::{Deserialize, Serialize};

use super::pool::VammPool;
use super::VammError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiquidityBucket {
    pub low: f64,
    pub high: f64,
    pub liquidity: f64,
}

/// Buckets between consecutive `edges`. Each position contributes its `L`
/// weighted by the log-price share of the bucket it covers, so a fully
/// covered bucket carries the full `L` and a partially covered one a
/// proportional part.
pub fn liquidity_distribution(pool: &VammPool, edges: &[f64]) -> Result<Vec<LiquidityBucket>, VammError> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) || edges[0] <= 0.0 {
        return Err(VammError::EmptyGrid);
    }
    if pool.positions().is_empty() {
        return Err(VammError::EmptyGrid);
    }
    Ok(edges
        .windows(2)
        .map(|w| {
            let (lo, hi) = (w[0].ln(), w[1].ln());
            let liquidity = pool
                .positions()
                .iter()
                .map(|p| {
                    let overlap = hi.min(p.upper_price().ln()) - lo.max(p.lower_price().ln());
                    if overlap > 0.0 {
                        p.liquidity * overlap / (hi - lo)
                    } else {
                        0.0
                    }
                })
                .sum();
            LiquidityBucket { low: w[0], high: w[1], liquidity }
        })
        .collect())
}

/// `sum(bucket liquidity * log width)`; equals `sum(L * log range width)`
/// over positions inside the grid.
pub fn liquidity_mass(buckets: &[LiquidityBucket]) -> f64 {
    buckets.iter().map(|b| b.liquidity * (b.high.ln() - b.low.ln())).sum()
}

/// `bucket_low,bucket_high,liquidity`.
pub fn write_liquidity_distribution(buckets: &[LiquidityBucket]) -> String {
    let mut out = String::from("bucket_low,bucket_high,liquidity\n");
    for b in buckets {
        out.push_str(&format!("{},{},{}\n", b.low, b.high, b.liquidity));
    }
    out
}

/// Geometric grid of `n` buckets between `low` and `high`.
pub fn geometric_edges(low: f64, high: f64, n: usize) -> Vec<f64> {
    let step = (high / low).ln() / n as f64;
    (0..=n).map(|i| low * (step * i as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vamm::pool::tick_price;

    #[test]
    fn single_position_is_rectangular() {
        let mut pool = VammPool::concentrated(10_000.0, 0.0, 60).unwrap();
        let p = pool.add_liquidity_l(1, 9_000.0, 11_000.0, 5.0, 1.0).unwrap();
        let (a, b) = (tick_price(p.tick_lower), tick_price(p.tick_upper));
        let mut edges = vec![8_000.0, a];
        edges.extend(geometric_edges(a, b, 4).into_iter().skip(1));
        edges.push(12_000.0);
        let h = liquidity_distribution(&pool, &edges).unwrap();
        assert_eq!(h[0].liquidity, 0.0);
        assert_eq!(h.last().unwrap().liquidity, 0.0);
        for bucket in &h[1..5] {
            assert!((bucket.liquidity - 5.0).abs() < 1e-9);
        }
    }

    #[test]
    fn overlapping_positions_add() {
        let mut pool = VammPool::concentrated(10_000.0, 0.0, 60).unwrap();
        pool.add_liquidity_l(1, 9_000.0, 11_000.0, 5.0, 1.0).unwrap();
        pool.add_liquidity_l(2, 9_900.0, 12_000.0, 2.0, 1.0).unwrap();
        let h = liquidity_distribution(&pool, &[10_000.0, 10_500.0]).unwrap();
        assert!((h[0].liquidity - 7.0).abs() < 1e-12);
    }

    #[test]
    fn grid_errors() {
        let pool = VammPool::concentrated(10_000.0, 0.0, 60).unwrap();
        assert!(liquidity_distribution(&pool, &[1.0, 2.0]).is_err());
        let mut pool = pool;
        pool.add_liquidity_l(1, 9_000.0, 11_000.0, 5.0, 1.0).unwrap();
        assert!(liquidity_distribution(&pool, &[1.0]).is_err());
        let csv = write_liquidity_distribution(&liquidity_distribution(&pool, &[9_000.0, 10_000.0]).unwrap());
        assert!(csv.starts_with("bucket_low,bucket_high,liquidity\n"));
    }
}
