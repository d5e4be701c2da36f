//! Minimum-norm least squares with a relative eigenvalue cutoff.
//!
//! Symmetric matrices are split into independent blocks first (connected
//! components of the non-negligible off-diagonal pattern). Gram matrices of
//! Pauli images on symmetric states decompose this way, and eigensolving the
//! blocks separately is far cheaper than one dense solve.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Entries below this fraction of `sqrt(G_ii G_jj)` do not couple two indices.
const COUPLING_RTOL: f64 = 1e-13;

pub(crate) struct BlockEigen<T: Real> {
    /// (indices of the block, eigenvalues, eigenvectors in block coordinates)
    pub blocks: Vec<(Vec<usize>, DVector<T>, DMatrix<T>)>,
}

impl<T: Real> BlockEigen<T> {
    pub fn largest(&self) -> T {
        self.blocks
            .iter()
            .flat_map(|b| b.1.iter().copied())
            .fold(T::zero(), |a, x| a.max(x))
    }

    pub fn spectrum(&self) -> Vec<T> {
        let mut all: Vec<T> = self.blocks.iter().flat_map(|b| b.1.iter().copied()).collect();
        all.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        all
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

pub(crate) fn block_eigen<T: Real>(m: &DMatrix<T>) -> Result<BlockEigen<T>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    let rtol = T::lit(COUPLING_RTOL);
    for j in 0..n {
        for i in 0..j {
            let scale = (m[(i, i)].abs() * m[(j, j)].abs()).sqrt();
            if m[(i, j)].abs() > rtol * scale {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    let blocks = groups
        .into_iter()
        .map(|idx| {
            let k = idx.len();
            let sub = DMatrix::from_fn(k, k, |a, b| (m[(idx[a], idx[b])] + m[(idx[b], idx[a])]) * T::lit(0.5));
            let (values, vectors) = T::sym_eigen(sub)?;
            Ok((idx, values, vectors))
        })
        .collect::<Result<_>>()?;
    Ok(BlockEigen { blocks })
}

pub(crate) struct MinNorm<T: Real> {
    pub solution: DVector<T>,
    pub rank: usize,
    pub spectrum: Vec<T>,
}

/// Minimum-norm solution of `G h = b` over eigen-directions with
/// `λ > cutoff · λ_max`.
pub(crate) fn solve_gram<T: Real>(gram: &DMatrix<T>, target: &DVector<T>, cutoff: T) -> Result<MinNorm<T>> {
    let n = gram.nrows();
    let eig = block_eigen(gram)?;
    let lmax = eig.largest();
    let mut h = DVector::zeros(n);
    let mut rank = 0;
    if lmax > T::zero() {
        let keep = cutoff * lmax;
        for (idx, values, vectors) in &eig.blocks {
            for (k, &lambda) in values.iter().enumerate() {
                if lambda <= keep {
                    continue;
                }
                rank += 1;
                let v = vectors.column(k);
                let proj = idx.iter().zip(v.iter()).fold(T::zero(), |a, (&i, &vi)| a + vi * target[i]);
                let coef = proj / lambda;
                for (&i, &vi) in idx.iter().zip(v.iter()) {
                    h[i] += coef * vi;
                }
            }
        }
    }
    if rank == 0 && target.iter().any(|x| *x != T::zero()) {
        return Err(Error::RankDeficient(format!(
            "all {n} Gram eigenvalues are below the cutoff but the target is nonzero"
        )));
    }
    Ok(MinNorm {
        solution: h,
        rank,
        spectrum: eig.spectrum(),
    })
}

/// Minimum-norm least-squares solution of `X h ≈ y` with the same cutoff
/// semantics as [`solve_gram`] applied to `XᵀX`.
///
/// Works on whichever of `XᵀX` and `XXᵀ` is smaller; both share their
/// nonzero spectrum, so the retained subspace is identical.
pub(crate) fn solve_columns<T: Real>(x: &DMatrix<T>, y: &DVector<T>, cutoff: T) -> Result<MinNorm<T>> {
    let (rows, cols) = x.shape();
    if cols <= rows {
        let gram = x.tr_mul(x);
        let target = x.tr_mul(y);
        return solve_gram(&gram, &target, cutoff);
    }
    let outer = x * x.transpose();
    let eig = block_eigen(&outer)?;
    let lmax = eig.largest();
    let mut z = DVector::zeros(rows);
    let mut rank = 0;
    if lmax > T::zero() {
        let keep = cutoff * lmax;
        for (idx, values, vectors) in &eig.blocks {
            for (k, &lambda) in values.iter().enumerate() {
                if lambda <= keep {
                    continue;
                }
                rank += 1;
                let u = vectors.column(k);
                let proj = idx.iter().zip(u.iter()).fold(T::zero(), |a, (&i, &ui)| a + ui * y[i]);
                let coef = proj / lambda;
                for (&i, &ui) in idx.iter().zip(u.iter()) {
                    z[i] += coef * ui;
                }
            }
        }
    }
    let solution = x.tr_mul(&z);
    if rank == 0 && x.tr_mul(y).iter().any(|v| *v != T::zero()) {
        return Err(Error::RankDeficient(
            "all Gram eigenvalues are below the cutoff but the target is nonzero".into(),
        ));
    }
    Ok(MinNorm {
        solution,
        rank,
        spectrum: eig.spectrum(),
    })
}
