//! Orthonormal 2D DCT-II and its inverse.
//!
//! The fast path applies a 1D transform to every row and then to every
//! column. Short rows (N <= 32) use a precomputed cosine basis; longer rows
//! use an N-point complex FFT with Makhoul's even/odd reordering.
//! [`dct2_reference`] evaluates the double cosine sum directly and is kept as
//! an independent oracle.
//!
//! Scale factors are s(0) = sqrt(1/N) and s(u) = sqrt(2/N) for u > 0, so the
//! 2D transform preserves energy and its inverse is its transpose.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::rc::Rc;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::sequence_codec::PixelMatrix;

/// Largest N handled by the direct O(N^2) kernel.
pub const DIRECT_KERNEL_MAX: usize = 32;

/// Square matrix of real samples, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    values: Vec<f64>,
}

impl SquareMatrix {
    /// Panics if `values.len() != dim * dim`.
    pub fn new(dim: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), dim * dim, "matrix must be {dim}x{dim}");
        SquareMatrix { dim, values }
    }

    pub fn zeros(dim: usize) -> Self {
        SquareMatrix::new(dim, vec![0.0; dim * dim])
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        let values = rows.iter().flat_map(|r| {
            assert_eq!(r.len(), dim, "rows must form a square");
            r.iter().copied()
        });
        SquareMatrix::new(dim, values.collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.dim + col]
    }
}

impl From<&PixelMatrix> for SquareMatrix {
    fn from(m: &PixelMatrix) -> Self {
        SquareMatrix::new(m.dim(), m.cells().iter().map(|&c| f64::from(c)).collect())
    }
}

/// DCT output; (0, 0) is the DC coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    dim: usize,
    coeffs: Vec<f64>,
}

impl CoefficientMatrix {
    pub fn new(dim: usize, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), dim * dim, "matrix must be {dim}x{dim}");
        CoefficientMatrix { dim, coeffs }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let m = SquareMatrix::from_rows(rows);
        CoefficientMatrix::new(m.dim, m.values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.coeffs[i * self.dim + j]
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }
}

#[inline]
fn scale(n: usize, u: usize) -> f64 {
    if u == 0 {
        (1.0 / n as f64).sqrt()
    } else {
        (2.0 / n as f64).sqrt()
    }
}

/// Reusable 1D DCT-II of a fixed length.
pub struct DctPlan {
    n: usize,
    /// `basis[u * n + x] = s(u) cos((2x + 1) u pi / 2N)`.
    basis: Vec<f64>,
    fft: Option<FftKernel>,
}

struct FftKernel {
    fft: Arc<dyn Fft<f64>>,
    /// `s(u) exp(-i pi u / 2N)`.
    twiddle: Vec<Complex<f64>>,
}

impl DctPlan {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "transform length must be positive");
        let mut basis = vec![0.0; n * n];
        for u in 0..n {
            let s = scale(n, u);
            for x in 0..n {
                basis[u * n + x] = s * (((2 * x + 1) * u) as f64 * PI / (2 * n) as f64).cos();
            }
        }
        let fft = (n > DIRECT_KERNEL_MAX).then(|| {
            let fft = FftPlanner::new().plan_fft_forward(n);
            let twiddle = (0..n)
                .map(|u| {
                    let angle = -PI * u as f64 / (2 * n) as f64;
                    Complex::from_polar(scale(n, u), angle)
                })
                .collect();
            FftKernel { fft, twiddle }
        });
        DctPlan { n, basis, fft }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Forward transform of `input` into `output`.
    pub fn forward(&self, input: &[f64], output: &mut [f64], scratch: &mut Vec<Complex<f64>>) {
        let n = self.n;
        debug_assert_eq!(input.len(), n);
        debug_assert_eq!(output.len(), n);
        match &self.fft {
            None => {
                for (u, out) in output.iter_mut().enumerate() {
                    let row = &self.basis[u * n..(u + 1) * n];
                    *out = row.iter().zip(input).map(|(b, x)| b * x).sum();
                }
            }
            Some(kernel) => {
                scratch.clear();
                scratch.resize(n, Complex::new(0.0, 0.0));
                let half = n.div_ceil(2);
                for k in 0..half {
                    scratch[k] = Complex::new(input[2 * k], 0.0);
                }
                for k in 0..n / 2 {
                    scratch[n - 1 - k] = Complex::new(input[2 * k + 1], 0.0);
                }
                kernel.fft.process(scratch);
                for (u, out) in output.iter_mut().enumerate() {
                    *out = (scratch[u] * kernel.twiddle[u]).re;
                }
            }
        }
    }

    /// Inverse transform (DCT-III with matching scale).
    pub fn inverse(&self, input: &[f64], output: &mut [f64]) {
        let n = self.n;
        for (x, out) in output.iter_mut().enumerate() {
            *out = (0..n).map(|u| self.basis[u * n + x] * input[u]).sum();
        }
    }
}

thread_local! {
    static PLANS: RefCell<HashMap<usize, Rc<DctPlan>>> = RefCell::new(HashMap::new());
}

fn plan_for(n: usize) -> Rc<DctPlan> {
    PLANS.with(|plans| {
        plans
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| Rc::new(DctPlan::new(n)))
            .clone()
    })
}

fn transpose(values: &mut [f64], n: usize) {
    for r in 0..n {
        for c in r + 1..n {
            values.swap(r * n + c, c * n + r);
        }
    }
}

/// Runs `f` over each row of a row-major square buffer.
fn map_rows(values: &mut [f64], n: usize, mut f: impl FnMut(&[f64], &mut [f64])) {
    let mut row_out = vec![0.0; n];
    for row in values.chunks_exact_mut(n) {
        f(row, &mut row_out);
        row.copy_from_slice(&row_out);
    }
}

fn separable_forward(n: usize, mut values: Vec<f64>) -> Vec<f64> {
    let plan = plan_for(n);
    let mut scratch = Vec::new();
    map_rows(&mut values, n, |i, o| plan.forward(i, o, &mut scratch));
    transpose(&mut values, n);
    map_rows(&mut values, n, |i, o| plan.forward(i, o, &mut scratch));
    transpose(&mut values, n);
    values
}

/// Fast separable orthonormal DCT-II.
pub fn dct2(m: &SquareMatrix) -> CoefficientMatrix {
    assert!(m.dim >= 1);
    CoefficientMatrix::new(m.dim, separable_forward(m.dim, m.values.clone()))
}

/// Fast DCT of a sequence image.
pub fn dct2_pixels(m: &PixelMatrix) -> CoefficientMatrix {
    dct2(&SquareMatrix::from(m))
}

/// Direct O(N^4) evaluation of the double cosine sum. Intended for N <= 64.
pub fn dct2_reference(m: &SquareMatrix) -> CoefficientMatrix {
    let n = m.dim;
    let cosine = |x: usize, u: usize| (((2 * x + 1) * u) as f64 * PI / (2 * n) as f64).cos();
    let mut coeffs = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for x in 0..n {
                let cx = cosine(x, i);
                for y in 0..n {
                    acc += m.get(x, y) * cx * cosine(y, j);
                }
            }
            coeffs[i * n + j] = scale(n, i) * scale(n, j) * acc;
        }
    }
    CoefficientMatrix::new(n, coeffs)
}

/// Orthonormal inverse of [`dct2`].
pub fn idct2(c: &CoefficientMatrix) -> SquareMatrix {
    let n = c.dim;
    let plan = plan_for(n);
    let mut values = c.coeffs.clone();
    map_rows(&mut values, n, |i, o| plan.inverse(i, o));
    transpose(&mut values, n);
    map_rows(&mut values, n, |i, o| plan.inverse(i, o));
    transpose(&mut values, n);
    SquareMatrix::new(n, values)
}
