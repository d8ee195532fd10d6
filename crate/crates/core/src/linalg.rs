//! Dense complex matrix exponential by scaling and squaring with a fixed
//! degree-13 Padé approximant (Higham 2005), plus the Van Loan block trick
//! for the integrated Lyapunov term.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371_920_351_148_152;

fn norm1(a: &CMatrix) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `exp(a)` for a square complex matrix.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::InvalidArgument(format!(
            "matrix exponential needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("non-finite matrix entry".into()));
    }
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }

    let nrm = norm1(a);
    let squarings = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a * real(0.5f64.powi(squarings));

    let b = &PADE13;
    let eye = CMatrix::identity(n, n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * (&a6 * real(b[13]) + &a4 * real(b[11]) + &a2 * real(b[9]))
        + &a6 * real(b[7])
        + &a4 * real(b[5])
        + &a2 * real(b[3])
        + &eye * real(b[1]);
    let u = &scaled * u_inner;
    let v = &a6 * (&a6 * real(b[12]) + &a4 * real(b[10]) + &a2 * real(b[8]))
        + &a6 * real(b[6])
        + &a4 * real(b[4])
        + &a2 * real(b[2])
        + &eye * real(b[0]);

    let denom = &v - &u;
    let numer = &v + &u;
    let mut result = denom
        .lu()
        .solve(&numer)
        .ok_or_else(|| Error::Numeric("singular Padé denominator".into()))?;

    for _ in 0..squarings {
        result = &result * &result;
    }
    if result.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("matrix exponential overflowed".into()));
    }
    Ok(result)
}

/// Propagator `exp(a t)` together with `W(t) = ∫_0^t exp(a s) d exp(a† s) ds`,
/// both read off a single exponential of the block matrix
/// `[[a, d], [0, -a†]] t`.
pub fn propagator_with_gramian(a: &CMatrix, d: &CMatrix, t: f64) -> Result<(CMatrix, CMatrix)> {
    let n = a.nrows();
    if a.ncols() != n || d.nrows() != n || d.ncols() != n {
        return Err(Error::InvalidArgument("drift and diffusion must be square and equal-sized".into()));
    }
    let mut block = CMatrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(&(a * real(t)));
    block.view_mut((0, n), (n, n)).copy_from(&(d * real(t)));
    block
        .view_mut((n, n), (n, n))
        .copy_from(&(a.adjoint() * real(-t)));
    let e = expm(&block)?;
    let prop = e.view((0, 0), (n, n)).into_owned();
    let upper = e.view((0, n), (n, n)).into_owned();
    let gramian = &upper * prop.adjoint();
    Ok((prop, gramian))
}
