//! Lazy random walk: transition matrix, stationary distribution and the
//! exact max-norm mixing time.
//!
//! Distributions are column vectors and `P` is column-stochastic with the
//! column indexed by the source node, so `pi_{t+1} = P * pi_t`.

use super::Graph;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest graph accepted by [`mixing_time_exact`] (dense `n x n` powers).
pub const MIXING_TIME_MAX_N: usize = 4096;

const DEFAULT_ITERATION_BUDGET: usize = 2_000_000;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self[(r, c)].clone()).collect()
    }

    pub fn column_sums(&self) -> Vec<T> {
        (0..self.cols)
            .map(|c| (0..self.rows).fold(T::zero(), |acc, r| acc + self[(r, c)].clone()))
            .collect()
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x)
                    .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.cols + c]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

#[derive(Clone, Debug)]
pub struct WalkAnalysis<T> {
    pub transition: Matrix<T>,
    pub stationary: Vec<T>,
    pub t_mix: u64,
}

pub fn transition_matrix<T: Scalar>(g: &Graph) -> Matrix<T> {
    let n = g.n();
    let mut p = Matrix::zeros(n, n);
    for src in 0..n {
        p[(src, src)] = T::from_ratio(1, 2);
        let step = T::from_ratio(1, 2 * g.degree(src) as u64);
        for dst in g.neighbors(src) {
            p[(dst, src)] = step.clone();
        }
    }
    p
}

pub fn stationary_distribution<T: Scalar>(g: &Graph) -> Vec<T> {
    let two_m = 2 * g.m() as u64;
    (0..g.n()).map(|u| T::from_ratio(g.degree(u) as u64, two_m)).collect()
}

/// Max-over-starts distance to stationarity for `t = 0, 1, ..., t_mix`.
#[derive(Clone, Debug)]
pub struct MixingProfile<T> {
    pub t_mix: u64,
    pub distances: Vec<T>,
    /// Whether the distance sequence never increased (beyond scalar tolerance).
    pub monotone: bool,
}

pub fn mixing_time_exact<T: Scalar>(g: &Graph) -> Result<u64> {
    mixing_time_profile::<T>(g, DEFAULT_ITERATION_BUDGET).map(|p| p.t_mix)
}

/// Iterates `Q <- P Q` from `Q = I` (column `i` is the walk started at `i`)
/// until every column is within `1/(2n)` of stationarity in max norm.
pub fn mixing_time_profile<T: Scalar>(g: &Graph, max_iterations: usize) -> Result<MixingProfile<T>> {
    let n = g.n();
    if n > MIXING_TIME_MAX_N {
        return Err(Error::SizeLimit { n, limit: MIXING_TIME_MAX_N });
    }
    let pi = stationary_distribution::<T>(g);
    let threshold = T::from_ratio(1, 2 * n as u64);
    let half = T::from_ratio(1, 2);
    let out_weight: Vec<T> = (0..n).map(|u| T::from_ratio(1, 2 * g.degree(u) as u64)).collect();

    let mut q = Matrix::<T>::identity(n);
    let mut next = Matrix::<T>::zeros(n, n);
    let mut distances: Vec<T> = Vec::new();
    let mut monotone = true;
    for t in 0..=max_iterations {
        let dist = max_distance(&q, &pi);
        if let Some(prev) = distances.last() {
            if dist > prev.clone() + T::tolerance() {
                monotone = false;
            }
        }
        let done = dist <= threshold;
        distances.push(dist);
        if done {
            return Ok(MixingProfile { t_mix: t as u64, distances, monotone });
        }
        // row j of P Q = 1/2 Q_j + sum_{k ~ j} Q_k / (2 deg k)
        for j in 0..n {
            let base = j * n;
            for i in 0..n {
                next.data[base + i] = half.clone() * q.data[base + i].clone();
            }
            for k in g.neighbors(j) {
                let w = &out_weight[k];
                let src = k * n;
                for i in 0..n {
                    let add = w.clone() * q.data[src + i].clone();
                    next.data[base + i] = next.data[base + i].clone() + add;
                }
            }
        }
        std::mem::swap(&mut q, &mut next);
    }
    Err(Error::NonConvergence { iterations: max_iterations })
}

fn max_distance<T: Scalar>(q: &Matrix<T>, pi: &[T]) -> T {
    let mut worst = T::zero();
    for (j, target) in pi.iter().enumerate() {
        for x in q.row(j) {
            let d = (x.clone() - target.clone()).abs();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

pub fn walk_analysis<T: Scalar>(g: &Graph) -> Result<WalkAnalysis<T>> {
    Ok(WalkAnalysis {
        transition: transition_matrix(g),
        stationary: stationary_distribution(g),
        t_mix: mixing_time_exact::<T>(g)?,
    })
}
