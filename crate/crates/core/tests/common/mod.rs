#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rumcf::model::{Budget, BudgetSystem};

pub const PRICE_GRID: [f64; 6] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_prices(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| PRICE_GRID[rng.gen_range(0..PRICE_GRID.len())]).collect()
}

pub fn random_simplex(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

fn rank(mut rows: Vec<Vec<f64>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|&i| rows[i][c].abs() > 1e-9) else {
            continue;
        };
        rows.swap(r, p);
        for i in 0..rows.len() {
            if i != r {
                let f = rows[i][c] / rows[r][c];
                for j in 0..cols {
                    rows[i][j] -= f * rows[r][j];
                }
            }
        }
        r += 1;
    }
    r
}

/// No `K + 1` of the budget planes and coordinate planes share a point.
pub fn general_position(prices: &[Vec<f64>]) -> bool {
    let k = prices[0].len();
    let mut planes: Vec<Vec<f64>> = prices.iter().map(|p| p.iter().copied().chain([1.0]).collect()).collect();
    for i in 0..k {
        let mut e = vec![0.0; k + 1];
        e[i] = 1.0;
        planes.push(e);
    }
    let n = planes.len();
    let mut subset: Vec<usize> = (0..=k).collect();
    if subset.len() > n {
        return true;
    }
    loop {
        let rows: Vec<Vec<f64>> = subset.iter().map(|&i| planes[i].clone()).collect();
        let coef: Vec<Vec<f64>> = rows.iter().map(|r| r[..k].to_vec()).collect();
        if rank(coef) == rank(rows) {
            return false;
        }
        let mut i = subset.len();
        loop {
            if i == 0 {
                return true;
            }
            i -= 1;
            if subset[i] < n - subset.len() + i {
                subset[i] += 1;
                for j in i + 1..subset.len() {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// `j` observed budgets, plus a counterfactual when `counterfactual`, drawn
/// from the price grid and redrawn until in general position.
pub fn random_system(rng: &mut impl Rng, k: usize, j: usize, counterfactual: bool) -> BudgetSystem {
    let n = j + usize::from(counterfactual);
    loop {
        let prices: Vec<Vec<f64>> = (0..n).map(|_| random_prices(rng, k)).collect();
        if !general_position(&prices) {
            continue;
        }
        let mut it = prices.into_iter();
        let cf = counterfactual.then(|| it.next().unwrap());
        let budgets = it.enumerate().map(|(i, p)| Budget::new(format!("b{}", i + 1), p).unwrap()).collect();
        let sys = BudgetSystem::new(k, budgets).unwrap();
        return match cf {
            Some(p) => sys.with_counterfactual(Budget::new("b0", p).unwrap()).unwrap(),
            None => sys,
        };
    }
}
