//! Top of the spectrum of a strictly positive transfer matrix.

use nalgebra::DMatrix;
use serde::Serialize;

use super::{apply_transfer, TransferError, TransferOperator};
use crate::rng::{CounterRng, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenBackend {
    /// Power iteration for Λ₀, then block subspace iteration on the deflated
    /// operator for |Λ₁|.
    PowerDeflation,
    /// Full dense eigenvalue solve plus inverse iteration for Ψ₀.
    Dense,
}

#[derive(Debug, Clone, Copy)]
pub struct SpectralOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub backend: EigenBackend,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 100_000, backend: EigenBackend::PowerDeflation }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralSummary {
    pub lambda0: f64,
    pub lambda1_abs: f64,
    /// `|Λ₁| / Λ₀`.
    pub ratio: f64,
    pub psi0_right: Vec<f64>,
    /// `‖𝕋ψ − Λ₀ψ‖`.
    pub residual: f64,
    pub iterations: usize,
    pub backend: EigenBackend,
}

pub fn spectral_summary(t: &TransferOperator, opts: SpectralOptions) -> Result<SpectralSummary, TransferError> {
    if !t.is_strictly_positive() {
        return Err(TransferError::NotPositive);
    }
    match opts.backend {
        EigenBackend::PowerDeflation => power_deflation(t, opts),
        EigenBackend::Dense => dense(t, opts),
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn residual(t: &TransferOperator, psi: &[f64], lambda: f64) -> Result<f64, TransferError> {
    let y = apply_transfer(t, psi)?;
    Ok(y.iter().zip(psi).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt())
}

/// Power iteration from the uniform vector. Returns (Λ, unit ψ, residual, iterations).
fn perron<F>(apply: F, dim: usize, opts: SpectralOptions) -> Result<(f64, Vec<f64>, f64, usize), TransferError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, TransferError>,
{
    let mut x = vec![1.0 / (dim as f64).sqrt(); dim];
    let mut best = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let y = apply(&x)?;
        let lambda = dot(&x, &y);
        let res = y.iter().zip(&x).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        best = best.min(res / lambda);
        let ny = norm(&y);
        if res <= opts.tol * lambda {
            return Ok((lambda, x, res, it));
        }
        x = y.into_iter().map(|v| v / ny).collect();
    }
    Err(TransferError::NoConvergence { iterations: opts.max_iter, residual: best })
}

fn power_deflation(t: &TransferOperator, opts: SpectralOptions) -> Result<SpectralSummary, TransferError> {
    let dim = t.dim();
    let (lambda0, psi, res, iters) = perron(|v| apply_transfer(t, v), dim, opts)?;
    let (_, phi, _, _) = perron(|v| t.apply_transpose(v), dim, opts)?;
    let overlap = dot(&phi, &psi);

    // A = 𝕋 − Λ₀ ψ φᵀ / (φ·ψ) keeps every eigenvalue except Λ₀, which goes to 0.
    let deflated = |x: &[f64]| -> Result<Vec<f64>, TransferError> {
        let mut y = apply_transfer(t, x)?;
        let c = lambda0 * dot(&phi, x) / overlap;
        for (yi, pi) in y.iter_mut().zip(&psi) {
            *yi -= c * pi;
        }
        Ok(y)
    };

    let lambda1_abs = if dim == 1 {
        0.0
    } else {
        let p = (dim - 1).min(4);
        let mut rng = CounterRng::new(0, Domain::Inputs, 0x5bec);
        let mut block: Vec<Vec<f64>> = (0..p).map(|_| rng.uniform_vec(dim).iter().map(|u| u - 0.5).collect()).collect();
        orthonormalize(&mut block, &mut rng);
        let mut prev = f64::NAN;
        let mut stable = 0;
        let mut found = None;
        for _ in 0..opts.max_iter {
            let images: Vec<Vec<f64>> = block.iter().map(|x| deflated(x)).collect::<Result<_, _>>()?;
            let scale = images.iter().map(|v| norm(v)).fold(0.0, f64::max);
            if scale <= 1e-14 * lambda0 {
                found = Some(0.0);
                break;
            }
            let mut h = DMatrix::<f64>::zeros(p, p);
            for i in 0..p {
                for j in 0..p {
                    h[(i, j)] = dot(&block[i], &images[j]);
                }
            }
            let top = h.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
            if (top - prev).abs() <= opts.tol * lambda0 {
                stable += 1;
                if stable >= 3 {
                    found = Some(top);
                    break;
                }
            } else {
                stable = 0;
            }
            prev = top;
            block = images;
            orthonormalize(&mut block, &mut rng);
        }
        match found {
            Some(v) => v,
            None => {
                return Err(TransferError::NoConvergence { iterations: opts.max_iter, residual: f64::NAN });
            }
        }
    };

    finish(lambda0, lambda1_abs, psi, res, iters, EigenBackend::PowerDeflation)
}

/// Modified Gram–Schmidt; collapsed columns are replaced by fresh random ones.
fn orthonormalize(block: &mut [Vec<f64>], rng: &mut CounterRng) {
    for j in 0..block.len() {
        for attempt in 0..4 {
            let before = norm(&block[j]);
            for i in 0..j {
                let (done, rest) = block.split_at_mut(j);
                let c = dot(&done[i], &rest[0]);
                for (x, q) in rest[0].iter_mut().zip(&done[i]) {
                    *x -= c * q;
                }
            }
            let after = norm(&block[j]);
            if after > 1e-10 * before && after > 0.0 {
                block[j].iter_mut().for_each(|x| *x /= after);
                break;
            }
            let dim = block[j].len();
            block[j] = rng.uniform_vec(dim).iter().map(|u| u - 0.5).collect();
            if attempt == 3 {
                let n = norm(&block[j]);
                block[j].iter_mut().for_each(|x| *x /= n);
            }
        }
    }
}

fn dense(t: &TransferOperator, opts: SpectralOptions) -> Result<SpectralSummary, TransferError> {
    let dim = t.dim();
    let ev = t.eigenvalues();
    let lambda0_schur = ev[0].re;
    let lambda1_abs = ev.get(1).map_or(0.0, |z| z.norm());

    // Inverse iteration with a shift just above Λ₀.
    let m = DMatrix::from_row_slice(dim, dim, t.entries());
    let shift = lambda0_schur * (1.0 + 1e-9);
    let lu = (m - DMatrix::<f64>::identity(dim, dim) * shift).lu();
    let mut x = nalgebra::DVector::from_element(dim, 1.0 / (dim as f64).sqrt());
    let mut iterations = 0;
    let mut psi = x.as_slice().to_vec();
    let mut lambda0 = lambda0_schur;
    let mut res = f64::INFINITY;
    while iterations < opts.max_iter.min(50) {
        iterations += 1;
        let y = lu.solve(&x).ok_or(TransferError::NoConvergence { iterations, residual: res })?;
        x = &y / y.norm();
        psi = x.as_slice().to_vec();
        let tx = apply_transfer(t, &psi)?;
        lambda0 = dot(&psi, &tx);
        res = residual(t, &psi, lambda0)?;
        if res <= opts.tol * lambda0 {
            break;
        }
    }
    if !(res <= opts.tol * lambda0) {
        return Err(TransferError::NoConvergence { iterations, residual: res });
    }
    finish(lambda0, lambda1_abs, psi, res, iterations, EigenBackend::Dense)
}

fn finish(
    lambda0: f64,
    lambda1_abs: f64,
    mut psi: Vec<f64>,
    residual: f64,
    iterations: usize,
    backend: EigenBackend,
) -> Result<SpectralSummary, TransferError> {
    if psi.iter().sum::<f64>() < 0.0 {
        psi.iter_mut().for_each(|x| *x = -*x);
    }
    let n = norm(&psi);
    psi.iter_mut().for_each(|x| *x /= n);
    Ok(SpectralSummary {
        lambda0,
        lambda1_abs,
        ratio: lambda1_abs / lambda0,
        psi0_right: psi,
        residual,
        iterations,
        backend,
    })
}
