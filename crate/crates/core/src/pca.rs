//! PCA of the beat matrix with beats as variables.
//!
//! For an `n x p` matrix `B` (one beat per column) the `p x p` matrix
//! `BcᵀBc` of the column-centred beats is diagonalized. The principal
//! components are `PC = Ψᵀ Bcᵀ` (`p x n`) so that `Ψ PC = Bcᵀ` exactly.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Baseline added to numerator and denominator when forming weights, so that
/// near-zero samples of `[0, 1]`-scaled beats do not blow up the ratio.
pub const WEIGHT_EPSILON: f64 = 0.05;

pub const DEFAULT_RETENTION: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaDecomposition {
    n: usize,
    p: usize,
    /// `p x p`, column `k` is eigenvector `k`; row-major.
    eigenvectors: Vec<f64>,
    /// Row `k` is `pc_k` of length `n`.
    components: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
    energies: Vec<f64>,
    /// Column means that were removed; all zero when centring is off.
    means: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    /// `p` columns of length `n`, same layout as the input.
    pub columns: Vec<Vec<f64>>,
    pub retained: usize,
    pub retained_energy: f64,
}

impl PcaDecomposition {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// Entry `(row, k)` of `Ψ`.
    pub fn eigenvector(&self, row: usize, k: usize) -> f64 {
        self.eigenvectors[row * self.p + k]
    }

    /// Column `k` of `Ψ`.
    pub fn eigenvector_column(&self, k: usize) -> Vec<f64> {
        (0..self.p).map(|r| self.eigenvector(r, k)).collect()
    }

    /// Energy fraction of component `k` (1-based).
    pub fn component_energy(&self, k: usize) -> Result<f64> {
        if k == 0 || k > self.p {
            return Err(Error::Parameter(format!("component {k} outside 1..={}", self.p)));
        }
        Ok(self.energies[k - 1])
    }

    /// Smallest leading component count whose cumulative energy reaches `retention`.
    pub fn retained_count(&self, retention: f64) -> Result<usize> {
        check_retention(retention)?;
        let mut acc = 0.0;
        for (k, e) in self.energies.iter().enumerate() {
            acc += e;
            if acc >= retention - 1e-12 {
                return Ok(k + 1);
            }
        }
        Ok(self.p)
    }

    /// Rebuilds the beat matrix from the leading components.
    pub fn reconstruct(&self, retention: f64) -> Result<Reconstruction> {
        let r = self.retained_count(retention)?;
        Ok(self.reconstruct_with(r))
    }

    /// Rebuilds the beat matrix from exactly `r` leading components.
    pub fn reconstruct_with(&self, r: usize) -> Reconstruction {
        let r = r.min(self.p);
        let mut columns = vec![vec![0.0; self.n]; self.p];
        for (b, col) in columns.iter_mut().enumerate() {
            for (j, v) in col.iter_mut().enumerate() {
                let mut s = self.means[b];
                for k in 0..r {
                    s += self.eigenvector(b, k) * self.components[k][j];
                }
                *v = s;
            }
        }
        Reconstruction {
            columns,
            retained: r,
            retained_energy: self.energies[..r].iter().sum(),
        }
    }
}

fn check_retention(retention: f64) -> Result<()> {
    if !(retention > 0.0 && retention <= 1.0) {
        return Err(Error::Parameter(format!("retention {retention} outside (0, 1]")));
    }
    Ok(())
}

/// Decomposes `columns` (each of length `n`) after removing column means.
pub fn decompose(columns: &[Vec<f64>]) -> Result<PcaDecomposition> {
    decompose_with(columns, true)
}

pub fn decompose_with(columns: &[Vec<f64>], center: bool) -> Result<PcaDecomposition> {
    let p = columns.len();
    if p < 2 {
        return Err(Error::Parameter(format!("PCA needs at least 2 beats, got {p}")));
    }
    let n = columns[0].len();
    if let Some(c) = columns.iter().find(|c| c.len() != n) {
        return Err(Error::shape("PCA column", n, c.len()));
    }
    if n == 0 {
        return Err(Error::Parameter("PCA columns are empty".into()));
    }
    let means: Vec<f64> = if center {
        columns.iter().map(|c| math::mean(c)).collect()
    } else {
        vec![0.0; p]
    };
    let centred: Vec<Vec<f64>> = columns
        .iter()
        .zip(&means)
        .map(|(c, m)| c.iter().map(|x| x - m).collect())
        .collect();

    let mut gram = vec![0.0; p * p];
    for a in 0..p {
        for b in a..p {
            let s: f64 = centred[a].iter().zip(&centred[b]).map(|(x, y)| x * y).sum();
            gram[a * p + b] = s;
            gram[b * p + a] = s;
        }
    }
    let (values, vectors) = jacobi_eigen(&gram, p)?;

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| values[k].max(0.0)).collect();
    let mut eigenvectors = vec![0.0; p * p];
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..p {
            eigenvectors[r * p + dst] = vectors[r * p + src];
        }
    }

    let components: Vec<Vec<f64>> = (0..p)
        .map(|k| {
            (0..n)
                .map(|j| (0..p).map(|b| eigenvectors[b * p + k] * centred[b][j]).sum())
                .collect()
        })
        .collect();
    let comp_energy: Vec<f64> = components.iter().map(|c| math::sum_sq(c)).collect();
    let total: f64 = comp_energy.iter().sum();
    if !(total > 0.0) {
        return Err(Error::UndefinedMetric(
            "component energies are undefined for an all-zero matrix".into(),
        ));
    }
    let energies = comp_energy.iter().map(|e| e / total).collect();
    Ok(PcaDecomposition {
        n,
        p,
        eigenvectors,
        components,
        eigenvalues,
        energies,
        means,
    })
}

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_TOLERANCE: f64 = 1e-12;

/// Cyclic Jacobi rotations on a symmetric row-major `p x p` matrix.
///
/// Returns unsorted eigenvalues and the row-major eigenvector matrix whose
/// column `k` pairs with eigenvalue `k`.
pub fn jacobi_eigen(matrix: &[f64], p: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if matrix.len() != p * p {
        return Err(Error::shape("symmetric matrix", p * p, matrix.len()));
    }
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; p * p];
    for i in 0..p {
        v[i * p + i] = 1.0;
    }
    let scale = math::sqrt(math::sum_sq(&a));
    if scale == 0.0 {
        return Ok((vec![0.0; p], v));
    }
    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..p {
            for j in 0..p {
                if i != j {
                    s += a[i * p + j] * a[i * p + j];
                }
            }
        }
        math::sqrt(s)
    };
    let mut sweeps = 0;
    while off(&a) > JACOBI_TOLERANCE * scale {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::Numeric(format!(
                "Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps"
            )));
        }
        sweeps += 1;
        for i in 0..p {
            for j in i + 1..p {
                let aij = a[i * p + j];
                if aij == 0.0 {
                    continue;
                }
                let theta = (a[j * p + j] - a[i * p + i]) / (2.0 * aij);
                let t = libm::copysign(1.0, theta) / (libm::fabs(theta) + math::sqrt(theta * theta + 1.0));
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..p {
                    let aki = a[k * p + i];
                    let akj = a[k * p + j];
                    a[k * p + i] = c * aki - s * akj;
                    a[k * p + j] = s * aki + c * akj;
                }
                for k in 0..p {
                    let aik = a[i * p + k];
                    let ajk = a[j * p + k];
                    a[i * p + k] = c * aik - s * ajk;
                    a[j * p + k] = s * aik + c * ajk;
                }
                for k in 0..p {
                    let vki = v[k * p + i];
                    let vkj = v[k * p + j];
                    v[k * p + i] = c * vki - s * vkj;
                    v[k * p + j] = s * vki + c * vkj;
                }
            }
        }
    }
    Ok(((0..p).map(|i| a[i * p + i]).collect(), v))
}

/// Per-sample multipliers `w = (b_r + ε) / (B + ε)`.
pub fn initial_weight_matrix(reconstructed: &[Vec<f64>], beats: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if reconstructed.len() != beats.len() {
        return Err(Error::shape("weight matrix beats", beats.len(), reconstructed.len()));
    }
    reconstructed
        .iter()
        .zip(beats)
        .map(|(r, b)| {
            if r.len() != b.len() {
                return Err(Error::shape("weight matrix column", b.len(), r.len()));
            }
            let w: Vec<f64> = r
                .iter()
                .zip(b)
                .map(|(r, b)| (r + WEIGHT_EPSILON) / (b + WEIGHT_EPSILON))
                .collect();
            if w.iter().all(|x| x.is_finite()) {
                Ok(w)
            } else {
                Err(Error::Numeric("weight matrix entry is not finite".into()))
            }
        })
        .collect()
}

/// Applies one weight vector with the ε-shifted product `(b + ε) ∘ w − ε`.
pub fn apply_weights(beat: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    if beat.len() != weights.len() {
        return Err(Error::shape("weighted beat", beat.len(), weights.len()));
    }
    Ok(beat
        .iter()
        .zip(weights)
        .map(|(b, w)| (b + WEIGHT_EPSILON) * w - WEIGHT_EPSILON)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, p: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..p).map(|_| (0..n).map(|_| rng.gen::<f64>()).collect()).collect()
    }

    #[test]
    fn identical_columns_are_rank_one() {
        let col: Vec<f64> = (0..10).map(|i| (i as f64 * 0.7).sin()).collect();
        let d = decompose(&vec![col.clone(); 4]).unwrap();
        assert!((d.energies()[0] - 1.0).abs() < 1e-12);
        assert!(d.eigenvalues()[1..].iter().all(|&e| e < 1e-9));
        let r = d.reconstruct(0.95).unwrap();
        assert_eq!(r.retained, 1);
        for c in &r.columns {
            for (a, b) in c.iter().zip(&col) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn orthogonal_equal_norm_columns_share_energy() {
        // zero-mean, mutually orthogonal, equal norm
        let cols = vec![
            vec![1.0, -1.0, 1.0, -1.0],
            vec![1.0, 1.0, -1.0, -1.0],
            vec![1.0, -1.0, -1.0, 1.0],
        ];
        let d = decompose(&cols).unwrap();
        for e in d.energies() {
            assert!((e - 1.0 / 3.0).abs() < 1e-12, "{e}");
        }
    }

    #[test]
    fn hand_two_beat_energies() {
        // uncentred: BᵀB = [[1+4, 2], [2, 1+1]] for b1 = (1, 2, 0), b2 = (0, 1, 1)
        // eigenvalues (7 ± √(9+16)) / 2 = 6, 1
        let cols = vec![vec![1.0, 2.0, 0.0], vec![0.0, 1.0, 1.0]];
        let d = decompose_with(&cols, false).unwrap();
        assert!((d.energies()[0] - 6.0 / 7.0).abs() < 1e-12);
        assert!((d.energies()[1] - 1.0 / 7.0).abs() < 1e-12);
        assert!((d.component_energy(1).unwrap() - 6.0 / 7.0).abs() < 1e-12);
        assert!(d.component_energy(3).is_err());
    }

    #[test]
    fn full_retention_reproduces_input() {
        let b = random_matrix(40, 8, 5);
        let d = decompose(&b).unwrap();
        let r = d.reconstruct(1.0).unwrap();
        for (x, y) in r.columns.iter().flatten().zip(b.iter().flatten()) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn eigenvectors_are_orthonormal() {
        let d = decompose(&random_matrix(40, 8, 1)).unwrap();
        for a in 0..8 {
            for b in 0..8 {
                let dot: f64 = (0..8).map(|r| d.eigenvector(r, a) * d.eigenvector(r, b)).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn too_few_beats_rejected() {
        assert!(decompose(&[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn all_zero_matrix_is_undefined() {
        assert!(matches!(
            decompose_with(&[vec![0.0; 3], vec![0.0; 3]], false),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn weight_arithmetic() {
        let w = initial_weight_matrix(&[vec![0.25]], &[vec![0.5]]).unwrap();
        assert!((w[0][0] - 0.30 / 0.55).abs() < 1e-15);
        let b = random_matrix(12, 3, 2);
        let ones = initial_weight_matrix(&b, &b).unwrap();
        assert!(ones.iter().flatten().all(|&x| x == 1.0));
        let br = random_matrix(12, 3, 3);
        let w = initial_weight_matrix(&br, &b).unwrap();
        for k in 0..3 {
            let back = apply_weights(&b[k], &w[k]).unwrap();
            for (x, y) in back.iter().zip(&br[k]) {
                assert!((x - y).abs() < 1e-12);
            }
        }
        assert!(initial_weight_matrix(&br[..2], &b).is_err());
    }
}
