//! Symmetric positive definite block-tridiagonal systems.
//!
//! Blocks are `d x d` and stored row-major in flat buffers. The state vector is
//! ordered by time: `(x_0[0..d], x_1[0..d], ..., x_T[0..d])`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionSystem {
    d: usize,
    n_blocks: usize,
    /// Diagonal blocks `Omega_tt`, `n_blocks` of them.
    diag: Vec<f64>,
    /// Sub-diagonal blocks `Omega_{t+1,t}`, `n_blocks - 1` of them.
    sub: Vec<f64>,
    covector: Vec<f64>,
    chol: Option<BandFactor>,
}

/// Lower block-bidiagonal factor `L` with `L L' = Omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandFactor {
    diag: Vec<f64>,
    sub: Vec<f64>,
}

impl PrecisionSystem {
    /// Assembles a system from explicit blocks. `sub[t]` is `Omega_{t+1,t}`.
    pub fn from_blocks(diag: &[DMatrix<f64>], sub: &[DMatrix<f64>], covector: DVector<f64>) -> Result<Self> {
        let n_blocks = diag.len();
        if n_blocks == 0 {
            return Err(Error::Dimension("system needs at least one block".into()));
        }
        let d = diag[0].nrows();
        if sub.len() + 1 != n_blocks {
            return Err(Error::Dimension(format!(
                "{} diagonal blocks need {} off-diagonal blocks, got {}",
                n_blocks,
                n_blocks - 1,
                sub.len()
            )));
        }
        if covector.len() != n_blocks * d {
            return Err(Error::Dimension(format!(
                "covector has length {}, expected {}",
                covector.len(),
                n_blocks * d
            )));
        }
        let mut sys = Self::zeros(d, n_blocks);
        for (t, b) in diag.iter().enumerate() {
            check_shape(b, d)?;
            sys.diag_block_mut(t).copy_from_slice(&row_major(b));
        }
        for (t, b) in sub.iter().enumerate() {
            check_shape(b, d)?;
            sys.sub_block_mut(t).copy_from_slice(&row_major(b));
        }
        sys.covector.copy_from_slice(covector.as_slice());
        Ok(sys)
    }

    /// Scalar tridiagonal system (`d = 1`).
    pub fn tridiagonal(diag: Vec<f64>, sub: Vec<f64>, covector: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || sub.len() + 1 != diag.len() || covector.len() != diag.len() {
            return Err(Error::Dimension(format!(
                "tridiagonal lengths {}, {}, {} are inconsistent",
                diag.len(),
                sub.len(),
                covector.len()
            )));
        }
        Ok(Self {
            d: 1,
            n_blocks: diag.len(),
            diag,
            sub,
            covector,
            chol: None,
        })
    }

    fn zeros(d: usize, n_blocks: usize) -> Self {
        Self {
            d,
            n_blocks,
            diag: vec![0.0; n_blocks * d * d],
            sub: vec![0.0; (n_blocks - 1) * d * d],
            covector: vec![0.0; n_blocks * d],
            chol: None,
        }
    }

    pub fn block_dim(&self) -> usize {
        self.d
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn diag_block(&self, t: usize) -> DMatrix<f64> {
        DMatrix::from_row_slice(
            self.d,
            self.d,
            &self.diag[t * self.d * self.d..(t + 1) * self.d * self.d],
        )
    }

    /// `Omega_{t,t+1}`.
    pub fn off_block(&self, t: usize) -> DMatrix<f64> {
        let dd = self.d * self.d;
        DMatrix::from_row_slice(self.d, self.d, &self.sub[t * dd..(t + 1) * dd]).transpose()
    }

    pub fn covector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.covector)
    }

    pub fn factor(&self) -> Option<&BandFactor> {
        self.chol.as_ref()
    }

    fn diag_block_mut(&mut self, t: usize) -> &mut [f64] {
        let dd = self.d * self.d;
        &mut self.diag[t * dd..(t + 1) * dd]
    }

    fn sub_block_mut(&mut self, t: usize) -> &mut [f64] {
        let dd = self.d * self.d;
        &mut self.sub[t * dd..(t + 1) * dd]
    }

    /// The full precision matrix. Intended for tests and small problems.
    pub fn dense(&self) -> DMatrix<f64> {
        let (d, n) = (self.d, self.n_blocks);
        let mut m = DMatrix::zeros(n * d, n * d);
        for t in 0..n {
            m.view_mut((t * d, t * d), (d, d)).copy_from(&self.diag_block(t));
            if t + 1 < n {
                let off = self.off_block(t);
                m.view_mut((t * d, (t + 1) * d), (d, d)).copy_from(&off);
                m.view_mut(((t + 1) * d, t * d), (d, d))
                    .copy_from(&off.transpose());
            }
        }
        m
    }
}

impl BandFactor {
    /// Dense lower-triangular `L`. Intended for tests.
    pub fn dense(&self, d: usize) -> DMatrix<f64> {
        let n = self.diag.len() / (d * d);
        let dd = d * d;
        let mut m = DMatrix::zeros(n * d, n * d);
        for t in 0..n {
            m.view_mut((t * d, t * d), (d, d))
                .copy_from(&DMatrix::from_row_slice(d, d, &self.diag[t * dd..(t + 1) * dd]));
            if t + 1 < n {
                m.view_mut(((t + 1) * d, t * d), (d, d))
                    .copy_from(&DMatrix::from_row_slice(d, d, &self.sub[t * dd..(t + 1) * dd]));
            }
        }
        m
    }
}

fn check_shape(b: &DMatrix<f64>, d: usize) -> Result<()> {
    if b.nrows() != d || b.ncols() != d {
        return Err(Error::Dimension(format!(
            "block is {}x{}, expected {d}x{d}",
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(())
}

fn row_major(b: &DMatrix<f64>) -> Vec<f64> {
    b.transpose().as_slice().to_vec()
}

/// Precision and covector of the non-centered states given all other parameters.
///
/// `Omega_00 = diag(1/P0) + I`, `Omega_tt = F_t'F_t / sigma2_t + 2I` for `0 < t < T`,
/// `Omega_TT = F_T'F_T / sigma2_T + I`, off-diagonal blocks `-I`, with
/// `F_t = x_t diag(sqrt_theta)` and `c_t = F_t' (y_t - x_t beta) / sigma2_t`.
pub fn build_precision(
    x: &DMatrix<f64>,
    beta: &DVector<f64>,
    sqrt_theta: &DVector<f64>,
    sigma2_t: &DVector<f64>,
    p0: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<PrecisionSystem> {
    let (t_len, d) = x.shape();
    if y.len() != t_len
        || sigma2_t.len() != t_len
        || beta.len() != d
        || sqrt_theta.len() != d
        || p0.len() != d
    {
        return Err(Error::Dimension("inconsistent inputs to build_precision".into()));
    }
    if let Some(t) = sigma2_t.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "sigma2_t[{t}] = {} is not positive",
            sigma2_t[t]
        )));
    }
    if let Some(j) = p0.iter().position(|p| !(*p > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "P0[{j}] = {} is not positive",
            p0[j]
        )));
    }
    let mut sys = PrecisionSystem::zeros(d, t_len + 1);
    {
        let b0 = sys.diag_block_mut(0);
        for j in 0..d {
            b0[j * d + j] = 1.0 / p0[j] + 1.0;
        }
    }
    let mut f = vec![0.0; d];
    for t in 1..=t_len {
        let row = x.row(t - 1);
        let s2 = sigma2_t[t - 1];
        let mut fit = 0.0;
        for j in 0..d {
            f[j] = row[j] * sqrt_theta[j];
            fit += row[j] * beta[j];
        }
        let resid = y[t - 1] - fit;
        let ridge = if t < t_len { 2.0 } else { 1.0 };
        let blk = sys.diag_block_mut(t);
        for i in 0..d {
            for j in 0..d {
                blk[i * d + j] = f[i] * f[j] / s2;
            }
            blk[i * d + i] += ridge;
        }
        for (j, fj) in f.iter().enumerate() {
            sys.covector[t * d + j] = fj * resid / s2;
        }
        let sub = sys.sub_block_mut(t - 1);
        for j in 0..d {
            sub[j * d + j] = -1.0;
        }
    }
    Ok(sys)
}

/// Block Cholesky factorization. Fails with the index of the first non-positive-definite block.
pub fn band_cholesky(mut sys: PrecisionSystem) -> Result<PrecisionSystem> {
    let (d, n) = (sys.d, sys.n_blocks);
    let dd = d * d;
    let mut ldiag = sys.diag.clone();
    let mut lsub = vec![0.0; sys.sub.len()];
    for t in 0..n {
        if t > 0 {
            // Schur complement: Omega_tt - L_{t,t-1} L_{t,t-1}'
            let (prev, cur) = (&lsub[(t - 1) * dd..t * dd], t * dd);
            for i in 0..d {
                for j in 0..=i {
                    let mut s = 0.0;
                    for k in 0..d {
                        s += prev[i * d + k] * prev[j * d + k];
                    }
                    ldiag[cur + i * d + j] -= s;
                }
            }
        }
        dense_cholesky_in_place(&mut ldiag[t * dd..(t + 1) * dd], d)
            .map_err(|_| Error::NotPositiveDefinite { block: t })?;
        if t + 1 < n {
            // L_{t+1,t} = Omega_{t+1,t} L_tt^{-T}, row by row
            let l = &ldiag[t * dd..(t + 1) * dd];
            let out = &mut lsub[t * dd..(t + 1) * dd];
            out.copy_from_slice(&sys.sub[t * dd..(t + 1) * dd]);
            for r in 0..d {
                forward_solve(l, d, &mut out[r * d..(r + 1) * d]);
            }
        }
    }
    sys.chol = Some(BandFactor {
        diag: ldiag,
        sub: lsub,
    });
    Ok(sys)
}

/// Returns `Omega^{-1} c + L'^{-1} eps`, a draw from `N(Omega^{-1} c, Omega^{-1})` when `eps` is standard normal.
pub fn awol_draw(sys: &PrecisionSystem, eps: &[f64]) -> Result<DVector<f64>> {
    let n = sys.n_blocks * sys.d;
    if eps.len() != n {
        return Err(Error::Dimension(format!(
            "eps has length {}, expected {n}",
            eps.len()
        )));
    }
    let chol = sys
        .chol
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("system has not been factorized".into()))?;
    let mut v = sys.covector.clone();
    solve_lower(chol, sys.d, &mut v);
    for (vi, e) in v.iter_mut().zip(eps) {
        *vi += e;
    }
    solve_upper(chol, sys.d, &mut v);
    Ok(DVector::from_vec(v))
}

/// Posterior mean `Omega^{-1} c` via the factor.
pub fn solve_mean(sys: &PrecisionSystem) -> Result<DVector<f64>> {
    awol_draw(sys, &vec![0.0; sys.n_blocks * sys.d])
}

/// Solves `L a = v` in place.
fn solve_lower(chol: &BandFactor, d: usize, v: &mut [f64]) {
    let dd = d * d;
    let n = v.len() / d;
    for t in 0..n {
        if t > 0 {
            let (head, tail) = v.split_at_mut(t * d);
            let prev = &head[(t - 1) * d..];
            let s = &chol.sub[(t - 1) * dd..t * dd];
            for i in 0..d {
                let mut acc = 0.0;
                for k in 0..d {
                    acc += s[i * d + k] * prev[k];
                }
                tail[i] -= acc;
            }
        }
        forward_solve(&chol.diag[t * dd..(t + 1) * dd], d, &mut v[t * d..(t + 1) * d]);
    }
}

/// Solves `L' x = v` in place.
fn solve_upper(chol: &BandFactor, d: usize, v: &mut [f64]) {
    let dd = d * d;
    let n = v.len() / d;
    for t in (0..n).rev() {
        if t + 1 < n {
            let (head, tail) = v.split_at_mut((t + 1) * d);
            let next = &tail[..d];
            let s = &chol.sub[t * dd..(t + 1) * dd];
            let cur = &mut head[t * d..];
            for i in 0..d {
                let mut acc = 0.0;
                for k in 0..d {
                    acc += s[k * d + i] * next[k];
                }
                cur[i] -= acc;
            }
        }
        backward_solve_transposed(&chol.diag[t * dd..(t + 1) * dd], d, &mut v[t * d..(t + 1) * d]);
    }
}

/// In-place lower Cholesky of a row-major `d x d` block. Zeroes the strict upper triangle.
fn dense_cholesky_in_place(a: &mut [f64], d: usize) -> std::result::Result<(), ()> {
    for j in 0..d {
        let mut s = a[j * d + j];
        for k in 0..j {
            s -= a[j * d + k] * a[j * d + k];
        }
        if !(s > 0.0) || !s.is_finite() {
            return Err(());
        }
        let l = s.sqrt();
        a[j * d + j] = l;
        for i in j + 1..d {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= a[i * d + k] * a[j * d + k];
            }
            a[i * d + j] = s / l;
        }
        for i in 0..j {
            a[i * d + j] = 0.0;
        }
    }
    Ok(())
}

/// Solves `L x = b` for lower-triangular row-major `L`.
fn forward_solve(l: &[f64], d: usize, b: &mut [f64]) {
    for i in 0..d {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * d + k] * b[k];
        }
        b[i] = s / l[i * d + i];
    }
}

/// Solves `L' x = b` for lower-triangular row-major `L`.
fn backward_solve_transposed(l: &[f64], d: usize, b: &mut [f64]) {
    for i in (0..d).rev() {
        let mut s = b[i];
        for k in i + 1..d {
            s -= l[k * d + i] * b[k];
        }
        b[i] = s / l[i * d + i];
    }
}
