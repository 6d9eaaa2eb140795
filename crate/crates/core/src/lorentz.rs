//! Decreasing rearrangements and Lorentz norms of cell-wise constant fields.
//!
//! The convention is `‖f‖_{q,r} = (∫ f*(t)^r d(t^{r/q}))^{1/r}` and
//! `‖f‖_{q,∞} = sup_t t^{1/q} f*(t)`, evaluated exactly on the step function
//! that takes the sample value on each grid cell.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec, Mask, SpaceTimeField};

/// Sorted cell magnitudes `f*_1 ≥ f*_2 ≥ …`, each cell carrying volume `h³`.
#[derive(Debug, Clone, PartialEq)]
pub struct RearrangementProfile {
    pub magnitudes: Vec<f64>,
    pub cell_volume: f64,
    /// Linear grid index of each sorted entry.
    pub order: Vec<usize>,
}

impl RearrangementProfile {
    pub fn len(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitudes.is_empty()
    }

    /// Cumulative volume `V_k = k h³` for 1-based `k`.
    pub fn volume(&self, k: usize) -> f64 {
        k as f64 * self.cell_volume
    }

    pub fn total_volume(&self) -> f64 {
        self.volume(self.len())
    }

    /// Rows `k, volume, magnitude`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,volume,magnitude\n");
        for (k, m) in self.magnitudes.iter().enumerate() {
            let _ = writeln!(s, "{},{:e},{:e}", k + 1, self.volume(k + 1), m);
        }
        s
    }
}

/// Rearranges the pointwise magnitude of `field` over the mask cells.
pub fn rearrange(field: &Field, mask: &Mask) -> Result<RearrangementProfile> {
    field.grid().ensure_same(mask.grid())?;
    let mag = field.magnitude();
    rearrange_values(&mag, mask)
}

pub fn rearrange_values(mag: &[f64], mask: &Mask) -> Result<RearrangementProfile> {
    let mut order: Vec<usize> = mask.indices().collect();
    if order.is_empty() {
        return Err(Error::EmptyMask);
    }
    order.sort_unstable_by(|&a, &b| match mag[b].partial_cmp(&mag[a]).unwrap_or(Ordering::Equal) {
        Ordering::Equal => a.cmp(&b),
        o => o,
    });
    Ok(RearrangementProfile {
        magnitudes: order.iter().map(|&p| mag[p]).collect(),
        cell_volume: mask.grid().cell_volume(),
        order,
    })
}

/// Serializes `f64::INFINITY` as the string `"inf"`.
pub mod exponent_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("bad exponent {s}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzNormResult {
    #[serde(with = "exponent_serde")]
    pub q: f64,
    #[serde(with = "exponent_serde")]
    pub r: f64,
    pub value: f64,
    /// Index `k` (1-based) attaining the supremum for weak norms.
    pub attaining_level: Option<usize>,
}

fn check_exponents(q: f64, r: f64) -> Result<()> {
    if !(q > 1.0) {
        return Err(Error::ExponentOutOfRange(format!("Lorentz exponent q must exceed 1, got {q}")));
    }
    if !(r >= 1.0) {
        return Err(Error::ExponentOutOfRange(format!("Lorentz exponent r must be at least 1, got {r}")));
    }
    if q.is_infinite() && r.is_finite() {
        return Err(Error::ExponentOutOfRange("q = inf requires r = inf".into()));
    }
    Ok(())
}

/// Lorentz norm of a rearrangement profile.
pub fn profile_norm(profile: &RearrangementProfile, q: f64, r: f64) -> Result<LorentzNormResult> {
    check_exponents(q, r)?;
    let hv = profile.cell_volume;
    if r.is_infinite() {
        let mut best = 0.0;
        let mut level = None;
        for (k, &f) in profile.magnitudes.iter().enumerate() {
            let v = f * ((k + 1) as f64 * hv).powf(1.0 / q);
            if v > best {
                best = v;
                level = Some(k + 1);
            }
        }
        return Ok(LorentzNormResult { q, r, value: best, attaining_level: level });
    }
    let e = r / q;
    // normalizing by f*_1 keeps scaling by powers of two exact and avoids overflow
    let top = profile.magnitudes.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return Ok(LorentzNormResult { q, r, value: 0.0, attaining_level: None });
    }
    let mut sum = 0.0;
    let mut prev = 0.0;
    for (k, &f) in profile.magnitudes.iter().enumerate() {
        if f == 0.0 {
            break;
        }
        let cur = ((k + 1) as f64 * hv).powf(e);
        sum += (f / top).powf(r) * (cur - prev);
        prev = cur;
    }
    Ok(LorentzNormResult { q, r, value: top * sum.powf(1.0 / r), attaining_level: None })
}

pub fn lorentz_norm(field: &Field, mask: &Mask, q: f64, r: f64) -> Result<LorentzNormResult> {
    check_exponents(q, r)?;
    profile_norm(&rearrange(field, mask)?, q, r)
}

/// Plain `L^p` norm of the magnitude over the mask, `p ∈ [1, ∞]`.
pub fn lebesgue_norm(field: &Field, mask: &Mask, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::ExponentOutOfRange(format!("L^p exponent must be at least 1, got {p}")));
    }
    field.grid().ensure_same(mask.grid())?;
    if mask.count() == 0 {
        return Err(Error::EmptyMask);
    }
    let mag = field.magnitude();
    if p.is_infinite() {
        return Ok(mask.indices().fold(0.0, |m, i| m.max(mag[i])));
    }
    let s: f64 = mask.indices().map(|i| mag[i].powf(p)).sum();
    Ok((s * field.grid().cell_volume()).powf(1.0 / p))
}

/// Spatial norm used inside a mixed space-time norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpatialNorm {
    Lorentz {
        #[serde(with = "exponent_serde")]
        q: f64,
        #[serde(with = "exponent_serde")]
        r: f64,
    },
    Lebesgue {
        #[serde(with = "exponent_serde")]
        p: f64,
    },
}

impl SpatialNorm {
    pub fn weak(q: f64) -> Self {
        SpatialNorm::Lorentz { q, r: f64::INFINITY }
    }

    pub fn eval(&self, field: &Field, mask: &Mask) -> Result<f64> {
        match *self {
            SpatialNorm::Lorentz { q, r } => Ok(lorentz_norm(field, mask, q, r)?.value),
            SpatialNorm::Lebesgue { p } => lebesgue_norm(field, mask, p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedNormResult {
    #[serde(with = "exponent_serde")]
    pub s: f64,
    pub inner: SpatialNorm,
    pub value: f64,
    pub per_frame: Vec<f64>,
}

/// `L^s` in time (trapezoid rule, or max for `s = ∞`) of per-frame spatial norms.
pub fn mixed_norm(field: &SpaceTimeField, mask: &Mask, s: f64, inner: SpatialNorm) -> Result<MixedNormResult> {
    if !(s >= 1.0) {
        return Err(Error::ExponentOutOfRange(format!("time exponent must be at least 1, got {s}")));
    }
    let per_frame = field
        .frames()
        .iter()
        .map(|f| inner.eval(f, mask))
        .collect::<Result<Vec<_>>>()?;
    let value = combine_in_time(&per_frame, &field.time().trapezoid_weights(), s);
    Ok(MixedNormResult { s, inner, value, per_frame })
}

pub fn combine_in_time(values: &[f64], weights: &[f64], s: f64) -> f64 {
    if s.is_infinite() {
        values.iter().fold(0.0, |m, &v| m.max(v))
    } else {
        values.iter().zip(weights).map(|(v, w)| w * v.powf(s)).sum::<f64>().powf(1.0 / s)
    }
}

/// JSON record for a norm computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormRecord {
    #[serde(with = "exponent_serde")]
    pub q: f64,
    #[serde(with = "exponent_serde")]
    pub r: f64,
    #[serde(with = "exponent_serde")]
    pub s: f64,
    pub mask: String,
    pub value: f64,
}

/// How the dilated field is discretized in [`weak_scaling_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingGrid {
    /// Dilate the grid together with the field.
    Rescaled,
    /// Resample the dilated field on the original grid.
    Same,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakScalingReport {
    pub lambda: f64,
    pub original: f64,
    pub dilated: f64,
    pub ratio: f64,
}

/// Compares `‖f‖_{L^{3,∞}(B_R)}` with `‖λ f(λ·)‖_{L^{3,∞}(B_{R/λ})}`.
pub fn weak_scaling_check(
    f: impl Fn([f64; 3]) -> f64,
    grid: GridSpec,
    radius: f64,
    lambda: f64,
    policy: ScalingGrid,
) -> Result<WeakScalingReport> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("dilation must be positive, got {lambda}")));
    }
    let a = crate::grid::sample_scalar(grid, &f)?;
    let original = lorentz_norm(&a, &Mask::ball(grid, [0.0; 3], radius), 3.0, f64::INFINITY)?.value;
    let g2 = match policy {
        ScalingGrid::Rescaled => GridSpec::with_offset(
            grid.side / lambda,
            grid.n,
            grid.offset.map(|o| o / lambda),
        )?,
        ScalingGrid::Same => grid,
    };
    let b = crate::grid::sample_scalar(g2, |x| lambda * f(x.map(|c| lambda * c)))?;
    let dilated = lorentz_norm(&b, &Mask::ball(g2, [0.0; 3], radius / lambda), 3.0, f64::INFINITY)?.value;
    Ok(WeakScalingReport { lambda, original, dilated, ratio: dilated / original })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sample_scalar, TimeGrid};

    fn grid() -> GridSpec {
        GridSpec::new(4.0, 16).unwrap()
    }

    #[test]
    fn constant_and_indicator_profiles() {
        let g = grid();
        let c = sample_scalar(g, |_| 2.5).unwrap();
        let m = Mask::ball(g, [0.0; 3], 1.0);
        let prof = rearrange(&c, &m).unwrap();
        assert!(prof.magnitudes.iter().all(|&v| v == 2.5));
        assert_eq!(prof.total_volume(), m.volume());
        let ind = sample_scalar(g, |x| if x[0] < 0.0 { 1.0 } else { 0.0 }).unwrap();
        let full = Mask::full(g);
        let p = rearrange(&ind, &full).unwrap();
        let ones = p.magnitudes.iter().filter(|&&v| v == 1.0).count();
        assert_eq!(ones, g.len() / 2);
        assert!(p.magnitudes[..ones].iter().all(|&v| v == 1.0));
        assert!(p.magnitudes[ones..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_mask_and_bad_exponents() {
        let g = grid();
        let c = sample_scalar(g, |_| 1.0).unwrap();
        let m = Mask::ball(g, [0.0; 3], 0.0);
        assert!(matches!(rearrange(&c, &m), Err(Error::EmptyMask)));
        let full = Mask::full(g);
        assert!(lorentz_norm(&c, &full, 1.0, 2.0).is_err());
        assert!(lorentz_norm(&c, &full, 3.0, 0.5).is_err());
    }

    #[test]
    fn diagonal_case_is_lq_norm() {
        let g = grid();
        let f = sample_scalar(g, |x| if x[0] < 0.0 { 3.0 } else { 0.5 }).unwrap();
        let full = Mask::full(g);
        for q in [1.5, 2.0, 3.0, 7.0] {
            let lq = lorentz_norm(&f, &full, q, q).unwrap().value;
            let exact = (32.0 * 3f64.powf(q) + 32.0 * 0.5f64.powf(q)).powf(1.0 / q);
            assert!((lq - exact).abs() < 1e-12 * exact);
            assert!((lebesgue_norm(&f, &full, q).unwrap() - exact).abs() < 1e-12 * exact);
        }
    }

    #[test]
    fn mixed_norm_separable_and_max() {
        let g = grid();
        let tg = TimeGrid::unit(4).unwrap();
        let a = [0.0, 1.0, 1.0, 2.0, 2.0];
        let b = sample_scalar(g, |x| if x[1] < 0.0 { 1.0 } else { 0.0 }).unwrap();
        let frames = a.iter().map(|&ai| b.scaled(ai)).collect();
        let st = SpaceTimeField::new(tg, frames).unwrap();
        let mask = Mask::full(g);
        let inner = SpatialNorm::weak(3.0);
        let nb = inner.eval(&b, &mask).unwrap();
        let res = mixed_norm(&st, &mask, 2.0, inner).unwrap();
        let na = combine_in_time(&a, &tg.trapezoid_weights(), 2.0);
        assert!((res.value - na * nb).abs() < 1e-12 * res.value);
        let res = mixed_norm(&st, &mask, f64::INFINITY, inner).unwrap();
        assert_eq!(res.value, res.per_frame.iter().cloned().fold(0.0, f64::max));
    }

    #[test]
    fn scaling_identity_cases() {
        let g = GridSpec::half_shifted(4.0, 16).unwrap();
        let inv = |x: [f64; 3]| 1.0 / (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let rep = weak_scaling_check(inv, g, 1.5, 1.0, ScalingGrid::Same).unwrap();
        assert_eq!(rep.ratio, 1.0);
        let rep = weak_scaling_check(inv, g, 1.5, 2.0, ScalingGrid::Rescaled).unwrap();
        assert!((rep.ratio - 1.0).abs() < 1e-13);
    }

    #[test]
    fn csv_and_json_exports() {
        let g = grid();
        let f = sample_scalar(g, |x| x[0].abs()).unwrap();
        let prof = rearrange(&f, &Mask::ball(g, [0.0; 3], 0.6)).unwrap();
        let csv = prof.to_csv();
        assert!(csv.starts_with("k,volume,magnitude\n1,"));
        let rec = NormRecord { q: 3.0, r: f64::INFINITY, s: f64::INFINITY, mask: "B2".into(), value: 1.0 };
        let s = serde_json::to_string(&rec).unwrap();
        assert!(s.contains("\"r\":\"inf\""));
        let back: NormRecord = serde_json::from_str(&s).unwrap();
        assert_eq!(back, rec);
    }
}
