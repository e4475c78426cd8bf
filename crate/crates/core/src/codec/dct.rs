//! Orthonormal DCT-II / DCT-III through a same-length complex FFT (Makhoul's reordering).

use rustfft::{num_complex::Complex, Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

/// Reusable plan for length-`n` transforms.
pub struct DctPlan {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// `exp(-i pi k / 2n)`
    twiddle: Vec<Complex<f64>>,
}

impl DctPlan {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "DCT length must be positive");
        let mut planner = FftPlanner::new();
        let twiddle = (0..n)
            .map(|k| Complex::from_polar(1.0, -PI * k as f64 / (2.0 * n as f64)))
            .collect();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            twiddle,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn scale(&self, k: usize) -> f64 {
        let n = self.n as f64;
        if k == 0 {
            (1.0 / n).sqrt()
        } else {
            (2.0 / n).sqrt()
        }
    }

    /// In-place orthonormal DCT-II.
    pub fn forward(&self, x: &mut [f64]) {
        let n = self.n;
        assert_eq!(x.len(), n);
        let mut v: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); n];
        for k in 0..n.div_ceil(2) {
            v[k] = Complex::new(x[2 * k], 0.0);
        }
        for k in 0..n / 2 {
            v[n - 1 - k] = Complex::new(x[2 * k + 1], 0.0);
        }
        self.fwd.process(&mut v);
        for k in 0..n {
            x[k] = (self.twiddle[k] * v[k]).re * self.scale(k);
        }
    }

    /// In-place orthonormal DCT-III (inverse of [`DctPlan::forward`]).
    pub fn inverse(&self, x: &mut [f64]) {
        let n = self.n;
        assert_eq!(x.len(), n);
        let raw: Vec<f64> = (0..n).map(|k| x[k] / self.scale(k)).collect();
        let mut v: Vec<Complex<f64>> = (0..n)
            .map(|k| {
                let mirror = if k == 0 { 0.0 } else { raw[n - k] };
                self.twiddle[k].conj() * Complex::new(raw[k], -mirror)
            })
            .collect();
        self.inv.process(&mut v);
        let inv_n = 1.0 / n as f64;
        for k in 0..n.div_ceil(2) {
            x[2 * k] = v[k].re * inv_n;
        }
        for k in 0..n / 2 {
            x[2 * k + 1] = v[n - 1 - k].re * inv_n;
        }
    }
}

pub fn dct_forward(x: &[f64]) -> Vec<f64> {
    let mut out = x.to_vec();
    if !out.is_empty() {
        DctPlan::new(out.len()).forward(&mut out);
    }
    out
}

pub fn dct_inverse(x: &[f64]) -> Vec<f64> {
    let mut out = x.to_vec();
    if !out.is_empty() {
        DctPlan::new(out.len()).inverse(&mut out);
    }
    out
}

fn transform_2d(data: &mut [f64], width: usize, height: usize, forward: bool) {
    assert_eq!(data.len(), width * height);
    let rows = DctPlan::new(width);
    for r in data.chunks_exact_mut(width) {
        if forward {
            rows.forward(r);
        } else {
            rows.inverse(r);
        }
    }
    let cols = DctPlan::new(height);
    let mut col = vec![0.0; height];
    for c in 0..width {
        for r in 0..height {
            col[r] = data[r * width + c];
        }
        if forward {
            cols.forward(&mut col);
        } else {
            cols.inverse(&mut col);
        }
        for r in 0..height {
            data[r * width + c] = col[r];
        }
    }
}

/// Separable 2-D DCT-II of a row-major `width × height` array.
pub fn dct2_forward(data: &[f64], width: usize, height: usize) -> Vec<f64> {
    let mut out = data.to_vec();
    transform_2d(&mut out, width, height, true);
    out
}

pub fn dct2_inverse(data: &[f64], width: usize, height: usize) -> Vec<f64> {
    let mut out = data.to_vec();
    transform_2d(&mut out, width, height, false);
    out
}
