//! Three-dimensional complex FFTs on cubic grids, built from batched
//! one-dimensional `rustfft` transforms plus explicit transposes.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward and inverse plans for an `n × n × n` row-major array.
///
/// The inverse transform is normalized by `1 / n³`.
pub struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    work: Vec<Complex64>,
}

impl Fft3 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            n,
            forward,
            inverse,
            scratch: vec![Complex64::default(); scratch_len],
            work: vec![Complex64::default(); n * n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        let plan = Arc::clone(&self.forward);
        self.transform(plan.as_ref(), data);
    }

    pub fn inverse(&mut self, data: &mut [Complex64]) {
        let plan = Arc::clone(&self.inverse);
        self.transform(plan.as_ref(), data);
        let scale = 1.0 / (self.n * self.n * self.n) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn transform(&mut self, plan: &dyn Fft<f64>, data: &mut [Complex64]) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n, "buffer length must be n^3");
        // axis 2 is contiguous
        plan.process_with_scratch(data, &mut self.scratch);
        // axis 1: transpose each (j, k) plane
        for plane in data.chunks_mut(n * n) {
            transpose(plane, &mut self.work[..n * n], n, n);
            plan.process_with_scratch(&mut self.work[..n * n], &mut self.scratch);
            transpose(&self.work[..n * n], plane, n, n);
        }
        // axis 0: view as n × n² matrix
        transpose(data, &mut self.work, n, n * n);
        plan.process_with_scratch(&mut self.work, &mut self.scratch);
        transpose(&self.work, data, n * n, n);
    }

    /// Transforms two real arrays with one complex FFT.
    pub fn forward_real_pair(&mut self, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = self.n;
        let mut z: Vec<Complex64> = a
            .iter()
            .zip(b)
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        self.forward(&mut z);
        let mut ah = vec![Complex64::default(); z.len()];
        let mut bh = vec![Complex64::default(); z.len()];
        for i in 0..n {
            let mi = (n - i) % n;
            for j in 0..n {
                let mj = (n - j) % n;
                for k in 0..n {
                    let mk = (n - k) % n;
                    let p = (i * n + j) * n + k;
                    let q = (mi * n + mj) * n + mk;
                    let zc = z[q].conj();
                    ah[p] = (z[p] + zc) * 0.5;
                    bh[p] = (z[p] - zc) * Complex64::new(0.0, -0.5);
                }
            }
        }
        (ah, bh)
    }

    pub fn forward_real(&mut self, a: &[f64]) -> Vec<Complex64> {
        let mut z: Vec<Complex64> = a.iter().map(|&re| Complex64::new(re, 0.0)).collect();
        self.forward(&mut z);
        z
    }

    /// Inverse of two spectra whose inverses are real, with one complex FFT.
    pub fn inverse_real_pair(&mut self, ah: &[Complex64], bh: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let mut z: Vec<Complex64> = ah
            .iter()
            .zip(bh)
            .map(|(&a, &b)| a + Complex64::new(0.0, 1.0) * b)
            .collect();
        self.inverse(&mut z);
        (z.iter().map(|c| c.re).collect(), z.iter().map(|c| c.im).collect())
    }

    pub fn inverse_real(&mut self, ah: &[Complex64]) -> Vec<f64> {
        let mut z = ah.to_vec();
        self.inverse(&mut z);
        z.into_iter().map(|c| c.re).collect()
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const B: usize = 16;
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// Signed integer wavenumber index for FFT bin `m` of an `n`-point transform.
pub fn signed_index(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// Angular wavenumbers for one axis.
///
/// `odd` zeroes the Nyquist bin, the convention used for first-derivative
/// and projection multipliers so that real fields stay real.
pub fn wavenumbers(n: usize, side: f64, odd: bool) -> Vec<f64> {
    let base = 2.0 * PI / side;
    (0..n)
        .map(|m| {
            if odd && n % 2 == 0 && m == n / 2 {
                0.0
            } else {
                base * signed_index(m, n) as f64
            }
        })
        .collect()
}
