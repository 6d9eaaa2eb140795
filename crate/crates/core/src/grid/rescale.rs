use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Field, GridSpec, Representation};
use crate::error::{Error, Result};
use crate::fft::{wavenumbers, Fft3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolationMethod {
    Trigonometric,
    Trilinear,
}

#[derive(Debug, Clone)]
pub struct RescaledField {
    pub field: Field,
    pub method: InterpolationMethod,
    pub center: [f64; 3],
    pub scale: f64,
}

/// `v(x) = R u(x₀ + R x)` sampled on `target`.
///
/// Periodic sources are interpolated by their Fourier series, masked ones
/// trilinearly. The ball `B(x₀, 2R)` must lie inside the source box.
pub fn rescale_field(u: &Field, x0: [f64; 3], r: f64, target: GridSpec) -> Result<RescaledField> {
    let g = *u.grid();
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {r}")));
    }
    let (lo, hi) = (g.lower(), g.upper());
    for a in 0..3 {
        if x0[a] - 2.0 * r < lo[a] - 1e-12 || x0[a] + 2.0 * r > hi[a] + 1e-12 {
            return Err(Error::BallOutOfRange(format!("B({x0:?}, {}) leaves the source box", 2.0 * r)));
        }
    }
    let coords: Vec<Vec<f64>> = (0..3)
        .map(|a| (0..target.n).map(|i| x0[a] + r * target.coord(a, i) - g.coord(a, 0)).collect())
        .collect();
    let method = match u.representation() {
        Representation::Periodic => InterpolationMethod::Trigonometric,
        Representation::Masked => InterpolationMethod::Trilinear,
    };
    let comps: Vec<Vec<f64>> = (0..u.components())
        .map(|c| {
            let vals = match method {
                InterpolationMethod::Trigonometric => trig_eval(u.component(c), &g, &coords),
                InterpolationMethod::Trilinear => trilinear_eval(u.component(c), &g, &coords),
            };
            vals.into_iter().map(|v| r * v).collect()
        })
        .collect();
    let field = Field::from_components(target, comps)?.with_representation(u.representation());
    Ok(RescaledField { field, method, center: x0, scale: r })
}

fn basis(g: &GridSpec, d: &[f64]) -> Vec<Vec<Complex64>> {
    let n = g.n;
    let k = wavenumbers(n, g.side, false);
    (0..n)
        .map(|m| {
            d.iter()
                .map(|&x| {
                    if m == n / 2 {
                        Complex64::new((k[m] * x).cos(), 0.0)
                    } else {
                        Complex64::from_polar(1.0, k[m] * x)
                    }
                })
                .collect()
        })
        .collect()
}

fn trig_eval(values: &[f64], g: &GridSpec, coords: &[Vec<f64>]) -> Vec<f64> {
    let n = g.n;
    let mut fft = Fft3::new(n);
    let mut c = fft.forward_real(values);
    let scale = 1.0 / g.len() as f64;
    c.iter_mut().for_each(|v| *v *= scale);
    let b: Vec<Vec<Vec<Complex64>>> = (0..3).map(|a| basis(g, &coords[a])).collect();
    let (m1, m2, m3) = (coords[0].len(), coords[1].len(), coords[2].len());
    // contract axis 2
    let mut t1 = vec![Complex64::default(); n * n * m3];
    for a in 0..n * n {
        for kk in 0..n {
            let cv = c[a * n + kk];
            let row = &b[2][kk];
            let out = &mut t1[a * m3..(a + 1) * m3];
            for (o, bv) in out.iter_mut().zip(row) {
                *o += cv * bv;
            }
        }
    }
    // contract axis 1
    let mut t2 = vec![Complex64::default(); n * m2 * m3];
    for i in 0..n {
        for j in 0..n {
            for jj in 0..m2 {
                let w = b[1][j][jj];
                let src = &t1[(i * n + j) * m3..(i * n + j + 1) * m3];
                let dst = &mut t2[(i * m2 + jj) * m3..(i * m2 + jj + 1) * m3];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += w * s;
                }
            }
        }
    }
    // contract axis 0
    let mut out = vec![0.0; m1 * m2 * m3];
    for i in 0..n {
        for ii in 0..m1 {
            let w = b[0][i][ii];
            let src = &t2[i * m2 * m3..(i + 1) * m2 * m3];
            let dst = &mut out[ii * m2 * m3..(ii + 1) * m2 * m3];
            for (o, s) in dst.iter_mut().zip(src) {
                *o += (w * s).re;
            }
        }
    }
    out
}

fn trilinear_eval(values: &[f64], g: &GridSpec, coords: &[Vec<f64>]) -> Vec<f64> {
    let n = g.n;
    let h = g.h();
    let stencil = |d: f64| -> (usize, usize, f64) {
        let s = d / h;
        let i0 = s.floor();
        let frac = s - i0;
        let i0 = (i0 as i64).rem_euclid(n as i64) as usize;
        (i0, (i0 + 1) % n, frac)
    };
    let sx: Vec<_> = coords[0].iter().map(|&d| stencil(d)).collect();
    let sy: Vec<_> = coords[1].iter().map(|&d| stencil(d)).collect();
    let sz: Vec<_> = coords[2].iter().map(|&d| stencil(d)).collect();
    let mut out = Vec::with_capacity(sx.len() * sy.len() * sz.len());
    for &(i0, i1, fx) in &sx {
        for &(j0, j1, fy) in &sy {
            for &(k0, k1, fz) in &sz {
                let mut v = 0.0;
                for (i, wx) in [(i0, 1.0 - fx), (i1, fx)] {
                    for (j, wy) in [(j0, 1.0 - fy), (j1, fy)] {
                        for (k, wz) in [(k0, 1.0 - fz), (k1, fz)] {
                            let w = wx * wy * wz;
                            if w != 0.0 {
                                v += w * values[(i * n + j) * n + k];
                            }
                        }
                    }
                }
                out.push(v);
            }
        }
    }
    out
}
