use num_complex::Complex64;

use super::{Field, GridSpec, Rank};
use crate::error::{Error, Result};
use crate::fft::{wavenumbers, Fft3};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeOp {
    Partial(usize),
    Grad,
    Div,
    Curl,
    Laplacian,
}

/// Applies a spectral differential operator to a periodic field.
pub fn derivative(field: &Field, op: DerivativeOp) -> Result<Field> {
    let mut sp = Spectral::new(*field.grid());
    match op {
        DerivativeOp::Partial(axis) => sp.partial(field, axis),
        DerivativeOp::Grad => sp.gradient(field),
        DerivativeOp::Div => sp.divergence(field),
        DerivativeOp::Curl => sp.curl(field),
        DerivativeOp::Laplacian => Ok(sp.laplacian(field)),
    }
}

/// Fourier-multiplier toolkit bound to one grid.
///
/// First-derivative multipliers use wavenumbers with the Nyquist bin zeroed;
/// the Laplacian symbol keeps it.
pub struct Spectral {
    grid: GridSpec,
    fft: Fft3,
    k_odd: Vec<f64>,
    k_even: Vec<f64>,
}

impl Spectral {
    pub fn new(grid: GridSpec) -> Self {
        Self {
            grid,
            fft: Fft3::new(grid.n),
            k_odd: wavenumbers(grid.n, grid.side, true),
            k_even: wavenumbers(grid.n, grid.side, false),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Derivative wavevector at bin `p`.
    pub fn kvec(&self, p: usize) -> [f64; 3] {
        let (i, j, k) = self.grid.unravel(p);
        [self.k_odd[i], self.k_odd[j], self.k_odd[k]]
    }

    /// `|k|²` symbol of `-Δ` at bin `p`.
    pub fn k2(&self, p: usize) -> f64 {
        let (i, j, k) = self.grid.unravel(p);
        self.k_even[i].powi(2) + self.k_even[j].powi(2) + self.k_even[k].powi(2)
    }

    fn check(&self, field: &Field) -> Result<()> {
        self.grid.ensure_same(field.grid())
    }

    /// Spectra of every component.
    pub fn forward(&mut self, field: &Field) -> Result<Vec<Vec<Complex64>>> {
        self.check(field)?;
        Ok(self.forward_slices(&(0..field.components()).map(|c| field.component(c)).collect::<Vec<_>>()))
    }

    pub fn forward_slices(&mut self, comps: &[&[f64]]) -> Vec<Vec<Complex64>> {
        let mut out = Vec::with_capacity(comps.len());
        let mut c = 0;
        while c < comps.len() {
            if c + 1 < comps.len() {
                let (a, b) = self.fft.forward_real_pair(comps[c], comps[c + 1]);
                out.push(a);
                out.push(b);
                c += 2;
            } else {
                out.push(self.fft.forward_real(comps[c]));
                c += 1;
            }
        }
        out
    }

    /// Real parts of the inverse transforms.
    pub fn inverse(&mut self, spectra: &[Vec<Complex64>]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(spectra.len());
        let mut c = 0;
        while c < spectra.len() {
            if c + 1 < spectra.len() {
                let (a, b) = self.fft.inverse_real_pair(&spectra[c], &spectra[c + 1]);
                out.push(a);
                out.push(b);
                c += 2;
            } else {
                out.push(self.fft.inverse_real(&spectra[c]));
                c += 1;
            }
        }
        out
    }

    pub fn to_field(&mut self, spectra: &[Vec<Complex64>]) -> Result<Field> {
        let comps = self.inverse(spectra);
        Field::from_components(self.grid, comps)
    }

    pub fn partial(&mut self, field: &Field, axis: usize) -> Result<Field> {
        let mut s = self.forward(field)?;
        for comp in s.iter_mut() {
            for (p, v) in comp.iter_mut().enumerate() {
                *v *= I * self.kvec(p)[axis];
            }
        }
        self.to_field(&s)
    }

    pub fn gradient(&mut self, field: &Field) -> Result<Field> {
        require(field, Rank::Scalar)?;
        let s = self.forward(field)?.remove(0);
        let spectra: Vec<Vec<Complex64>> = (0..3)
            .map(|a| s.iter().enumerate().map(|(p, &v)| v * I * self.kvec(p)[a]).collect())
            .collect();
        self.to_field(&spectra)
    }

    pub fn divergence(&mut self, field: &Field) -> Result<Field> {
        require(field, Rank::Vector)?;
        let s = self.forward(field)?;
        let d: Vec<Complex64> = (0..self.grid.len())
            .map(|p| {
                let k = self.kvec(p);
                I * (k[0] * s[0][p] + k[1] * s[1][p] + k[2] * s[2][p])
            })
            .collect();
        self.to_field(&[d])
    }

    /// `(∇·F)_i = Σ_j ∂_j F_ij`.
    pub fn tensor_divergence(&mut self, field: &Field) -> Result<Field> {
        require(field, Rank::Tensor)?;
        let s = self.forward(field)?;
        let spectra = self.tensor_divergence_hat(&s);
        self.to_field(&spectra)
    }

    pub fn tensor_divergence_hat(&self, s: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        (0..3)
            .map(|i| {
                (0..self.grid.len())
                    .map(|p| {
                        let k = self.kvec(p);
                        I * (k[0] * s[3 * i][p] + k[1] * s[3 * i + 1][p] + k[2] * s[3 * i + 2][p])
                    })
                    .collect()
            })
            .collect()
    }

    pub fn curl(&mut self, field: &Field) -> Result<Field> {
        require(field, Rank::Vector)?;
        let s = self.forward(field)?;
        let spectra: Vec<Vec<Complex64>> = (0..3)
            .map(|a| {
                let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                (0..self.grid.len())
                    .map(|p| {
                        let k = self.kvec(p);
                        I * (k[b] * s[c][p] - k[c] * s[b][p])
                    })
                    .collect()
            })
            .collect();
        self.to_field(&spectra)
    }

    pub fn laplacian(&mut self, field: &Field) -> Field {
        let mut s = self.forward(field).expect("grid checked by caller");
        for comp in s.iter_mut() {
            for (p, v) in comp.iter_mut().enumerate() {
                *v *= -self.k2(p);
            }
        }
        self.to_field(&s).expect("finite spectra")
    }

    /// Leray projector applied in place to vector spectra.
    pub fn project_hat(&self, s: &mut [Vec<Complex64>]) {
        for p in 0..self.grid.len() {
            let k = self.kvec(p);
            let kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if kk == 0.0 {
                continue;
            }
            let dot = (k[0] * s[0][p] + k[1] * s[1][p] + k[2] * s[2][p]) / kk;
            for a in 0..3 {
                s[a][p] -= dot * k[a];
            }
        }
    }

    pub fn project(&mut self, field: &Field) -> Result<Field> {
        require(field, Rank::Vector)?;
        let mut s = self.forward(field)?;
        self.project_hat(&mut s);
        self.to_field(&s)
    }

    /// Heat multiplier `e^{-|k|² t}` applied to every component.
    pub fn heat(&mut self, field: &Field, t: f64) -> Result<Field> {
        if t < 0.0 {
            return Err(Error::InvalidArgument(format!("heat flow time must be non-negative, got {t}")));
        }
        let mut s = self.forward(field)?;
        for comp in s.iter_mut() {
            for (p, v) in comp.iter_mut().enumerate() {
                *v *= (-self.k2(p) * t).exp();
            }
        }
        self.to_field(&s)
    }

    /// Zero-mean solution of `-Δη = source`; the source mean must be below `tol`.
    pub fn poisson(&mut self, source: &Field, tol: f64) -> Result<Field> {
        require(source, Rank::Scalar)?;
        let mean = source.data().iter().sum::<f64>() / self.grid.len() as f64;
        if mean.abs() > tol {
            return Err(Error::NonZeroMean { mean, tolerance: tol });
        }
        let mut s = self.forward(source)?;
        for (p, v) in s[0].iter_mut().enumerate() {
            let k2 = self.k2(p);
            *v = if k2 == 0.0 { Complex64::default() } else { *v / k2 };
        }
        self.to_field(&s)
    }
}

fn require(field: &Field, rank: Rank) -> Result<()> {
    if field.rank() == rank {
        Ok(())
    } else {
        Err(Error::RankMismatch { expected: rank.components(), got: field.components() })
    }
}
