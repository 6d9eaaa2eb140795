//! Fields on a uniform periodic box and stacks of them on uniform time grids.

mod rescale;
mod snapshot;
mod spectral;

pub use rescale::{rescale_field, InterpolationMethod, RescaledField};
pub use snapshot::{read_snapshot, write_snapshot, write_space_time_snapshot, Snapshot, SnapshotHeader};
pub use spectral::{derivative, DerivativeOp, Spectral};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on the box `[-L/2, L/2)³ + offset` with `N` points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub side: f64,
    pub n: usize,
    pub offset: [f64; 3],
}

impl GridSpec {
    pub fn new(side: f64, n: usize) -> Result<Self> {
        Self::with_offset(side, n, [0.0; 3])
    }

    /// Grid shifted by half a cell on every axis, so the origin sits at a cell corner.
    pub fn half_shifted(side: f64, n: usize) -> Result<Self> {
        let h = side / n as f64;
        Self::with_offset(side, n, [h / 2.0; 3])
    }

    pub fn with_offset(side: f64, n: usize, offset: [f64; 3]) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::InvalidGrid(format!("box side must be positive, got {side}")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("points per axis must be even and >= 8, got {n}")));
        }
        if offset.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("offset must be finite".into()));
        }
        Ok(Self { side, n, offset })
    }

    pub fn h(&self) -> f64 {
        self.side / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.h().powi(3)
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of node `i` along `axis`.
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        -0.5 * self.side + self.offset[axis] + i as f64 * self.h()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    pub fn unravel(&self, p: usize) -> (usize, usize, usize) {
        let n = self.n;
        (p / (n * n), (p / n) % n, p % n)
    }

    pub fn node(&self, p: usize) -> [f64; 3] {
        let (i, j, k) = self.unravel(p);
        [self.coord(0, i), self.coord(1, j), self.coord(2, k)]
    }

    pub fn lower(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| -0.5 * self.side + self.offset[a])
    }

    pub fn upper(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| 0.5 * self.side + self.offset[a])
    }

    fn same_as(&self, other: &GridSpec) -> bool {
        self.n == other.n
            && (self.side - other.side).abs() <= 1e-12 * self.side
            && (0..3).all(|a| (self.offset[a] - other.offset[a]).abs() <= 1e-12 * self.side)
    }

    pub fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// Uniform time nodes `t_m = t0 + m (t1 - t0) / M`, `m = 0..=M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, steps: usize) -> Result<Self> {
        if !(0.0 <= t0 && t0 < t1 && t1 <= 1.0) {
            return Err(Error::InvalidTimeGrid(format!("need 0 <= t0 < t1 <= 1, got [{t0}, {t1}]")));
        }
        if steps < 2 {
            return Err(Error::InvalidTimeGrid(format!("need at least 2 steps, got {steps}")));
        }
        Ok(Self { t0, t1, steps })
    }

    pub fn unit(steps: usize) -> Result<Self> {
        Self::new(0.0, 1.0, steps)
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.steps as f64
    }

    pub fn node(&self, m: usize) -> f64 {
        if m == self.steps {
            self.t1
        } else {
            self.t0 + m as f64 * self.dt()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|m| self.node(m)).collect()
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Trapezoid weights on the nodes.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..=self.steps)
            .map(|m| if m == 0 || m == self.steps { 0.5 * dt } else { dt })
            .collect()
    }

    pub fn ensure_same(&self, other: &TimeGrid) -> Result<()> {
        if self.steps == other.steps
            && (self.t0 - other.t0).abs() < 1e-14
            && (self.t1 - other.t1).abs() < 1e-14
        {
            Ok(())
        } else {
            Err(Error::TimeGridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rank {
    Scalar,
    Vector,
    Tensor,
}

impl Rank {
    pub fn components(self) -> usize {
        match self {
            Rank::Scalar => 1,
            Rank::Vector => 3,
            Rank::Tensor => 9,
        }
    }

    pub fn from_components(c: usize) -> Result<Self> {
        match c {
            1 => Ok(Rank::Scalar),
            3 => Ok(Rank::Vector),
            9 => Ok(Rank::Tensor),
            _ => Err(Error::InvalidArgument(format!("unsupported component count {c}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Periodic,
    Masked,
}

/// Grid samples of a scalar, vector or tensor field.
///
/// Values are stored component-major; tensor component `(i, j)` is `3 i + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    rank: Rank,
    representation: Representation,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: GridSpec, rank: Rank) -> Self {
        Self {
            grid,
            rank,
            representation: Representation::Periodic,
            data: vec![0.0; grid.len() * rank.components()],
        }
    }

    pub fn from_components(grid: GridSpec, comps: Vec<Vec<f64>>) -> Result<Self> {
        let rank = Rank::from_components(comps.len())?;
        let mut data = Vec::with_capacity(grid.len() * comps.len());
        for c in comps {
            if c.len() != grid.len() {
                return Err(Error::GridMismatch(format!("component has {} values, grid has {}", c.len(), grid.len())));
            }
            data.extend(c);
        }
        Self::from_data(grid, rank, data)
    }

    pub fn from_data(grid: GridSpec, rank: Rank, data: Vec<f64>) -> Result<Self> {
        let expected = grid.len() * rank.components();
        if data.len() != expected {
            return Err(Error::RankMismatch { expected, got: data.len() });
        }
        let field = Self { grid, rank, representation: Representation::Periodic, data };
        field.check_finite()?;
        Ok(field)
    }

    fn check_finite(&self) -> Result<()> {
        let len = self.grid.len();
        if let Some(p) = self.data.iter().position(|v| !v.is_finite()) {
            let (i, j, k) = self.grid.unravel(p % len);
            return Err(Error::NonFiniteSample { i, j, k, component: p / len, value: self.data[p] });
        }
        Ok(())
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn with_representation(mut self, r: Representation) -> Self {
        self.representation = r;
        self
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn components(&self) -> usize {
        self.rank.components()
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let len = self.grid.len();
        &self.data[c * len..(c + 1) * len]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let len = self.grid.len();
        &mut self.data[c * len..(c + 1) * len]
    }

    pub fn component_field(&self, c: usize) -> Field {
        Field {
            grid: self.grid,
            rank: Rank::Scalar,
            representation: self.representation,
            data: self.component(c).to_vec(),
        }
    }

    /// Value of component `c` at linear node index `p`.
    pub fn at(&self, c: usize, p: usize) -> f64 {
        self.data[c * self.grid.len() + p]
    }

    /// Pointwise Euclidean (Frobenius for tensors) magnitude.
    pub fn magnitude(&self) -> Vec<f64> {
        let len = self.grid.len();
        let nc = self.components();
        (0..len)
            .map(|p| (0..nc).map(|c| self.data[c * len + p].powi(2)).sum::<f64>().sqrt())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, a: f64) -> Field {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= a);
        out
    }

    fn ensure_compatible(&self, other: &Field) -> Result<()> {
        self.grid.ensure_same(&other.grid)?;
        if self.rank != other.rank {
            return Err(Error::RankMismatch { expected: self.components(), got: other.components() });
        }
        Ok(())
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Field) -> Result<Field> {
        self.ensure_compatible(other)?;
        let mut out = self.clone();
        out.data.iter_mut().zip(&other.data).for_each(|(x, y)| *x += a * y);
        Ok(out)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.axpy(-1.0, other)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.axpy(1.0, other)
    }

    /// Pointwise product with a scalar field.
    pub fn mul_scalar_field(&self, w: &Field) -> Result<Field> {
        self.grid.ensure_same(&w.grid)?;
        if w.rank != Rank::Scalar {
            return Err(Error::RankMismatch { expected: 1, got: w.components() });
        }
        let len = self.grid.len();
        let mut out = self.clone();
        for (p, v) in out.data.iter_mut().enumerate() {
            *v *= w.data[p % len];
        }
        Ok(out)
    }

    /// Discrete L² norm `(h³ Σ |v|²)^{1/2}` over all components.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.cell_volume() * self.data.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }
}

/// Samples `f(x, out)` at every node; `out` has one slot per component.
pub fn sample_function<F>(grid: GridSpec, rank: Rank, f: F) -> Result<Field>
where
    F: Fn([f64; 3], &mut [f64]),
{
    let nc = rank.components();
    let len = grid.len();
    let mut data = vec![0.0; len * nc];
    let mut buf = vec![0.0; nc];
    for p in 0..len {
        buf.iter_mut().for_each(|v| *v = 0.0);
        f(grid.node(p), &mut buf);
        for c in 0..nc {
            data[c * len + p] = buf[c];
        }
    }
    Field::from_data(grid, rank, data)
}

pub fn sample_scalar(grid: GridSpec, f: impl Fn([f64; 3]) -> f64) -> Result<Field> {
    sample_function(grid, Rank::Scalar, |x, out| out[0] = f(x))
}

pub fn sample_vector(grid: GridSpec, f: impl Fn([f64; 3]) -> [f64; 3]) -> Result<Field> {
    sample_function(grid, Rank::Vector, |x, out| out.copy_from_slice(&f(x)))
}

pub fn sample_tensor(grid: GridSpec, f: impl Fn([f64; 3]) -> [[f64; 3]; 3]) -> Result<Field> {
    sample_function(grid, Rank::Tensor, |x, out| {
        let t = f(x);
        for i in 0..3 {
            for j in 0..3 {
                out[3 * i + j] = t[i][j];
            }
        }
    })
}

/// Samples a space-time function at every (node, time) pair.
pub fn sample_space_time<F>(grid: GridSpec, time: TimeGrid, rank: Rank, f: F) -> Result<SpaceTimeField>
where
    F: Fn([f64; 3], f64, &mut [f64]),
{
    let frames = time
        .nodes()
        .into_iter()
        .map(|t| sample_function(grid, rank, |x, out| f(x, t, out)))
        .collect::<Result<Vec<_>>>()?;
    SpaceTimeField::new(time, frames)
}

/// `h³ Σ f w` for a scalar field and optional scalar weight.
pub fn integrate(field: &Field, weight: Option<&Field>) -> Result<f64> {
    if field.rank != Rank::Scalar {
        return Err(Error::RankMismatch { expected: 1, got: field.components() });
    }
    let s = match weight {
        None => field.data.iter().sum::<f64>(),
        Some(w) => {
            field.grid.ensure_same(&w.grid)?;
            if w.rank != Rank::Scalar {
                return Err(Error::RankMismatch { expected: 1, got: w.components() });
            }
            field.data.iter().zip(&w.data).map(|(a, b)| a * b).sum()
        }
    };
    Ok(s * field.grid.cell_volume())
}

/// Per-component integrals of any field.
pub fn integrate_components(field: &Field) -> Vec<f64> {
    let hv = field.grid.cell_volume();
    (0..field.components()).map(|c| field.component(c).iter().sum::<f64>() * hv).collect()
}

/// Boolean cell mask on a grid; membership is decided at the cell sample node.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    grid: GridSpec,
    inside: Vec<bool>,
}

impl Mask {
    pub fn full(grid: GridSpec) -> Self {
        Self { grid, inside: vec![true; grid.len()] }
    }

    pub fn ball(grid: GridSpec, center: [f64; 3], radius: f64) -> Self {
        let inside = (0..grid.len())
            .map(|p| dist(grid.node(p), center) < radius)
            .collect();
        Self { grid, inside }
    }

    /// Shell `r_in <= |x - center| < r_out`.
    pub fn shell(grid: GridSpec, center: [f64; 3], r_in: f64, r_out: f64) -> Self {
        let inside = (0..grid.len())
            .map(|p| {
                let d = dist(grid.node(p), center);
                d >= r_in && d < r_out
            })
            .collect();
        Self { grid, inside }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn contains(&self, p: usize) -> bool {
        self.inside[p]
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn volume(&self) -> f64 {
        self.count() as f64 * self.grid.cell_volume()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.inside.iter().enumerate().filter(|(_, &b)| b).map(|(p, _)| p)
    }
}

pub(crate) fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Zeroes every value whose node lies outside the open ball.
///
/// The ball must either lie inside the box or cover it entirely.
pub fn restrict_to_ball(field: &Field, center: [f64; 3], radius: f64) -> Result<Field> {
    let g = field.grid;
    if !(radius >= 0.0) {
        return Err(Error::BallOutOfRange(format!("negative radius {radius}")));
    }
    let (lo, hi) = (g.lower(), g.upper());
    let inside = (0..3).all(|a| center[a] - radius >= lo[a] - 1e-12 && center[a] + radius <= hi[a] + 1e-12);
    let mut far: f64 = 0.0;
    for a in 0..3 {
        let d = (center[a] - lo[a]).abs().max((center[a] - hi[a]).abs());
        far += d * d;
    }
    let covers = radius >= far.sqrt();
    if !inside && !covers {
        return Err(Error::BallOutOfRange(format!(
            "ball at {center:?} with radius {radius} exceeds the box"
        )));
    }
    let mask = Mask::ball(g, center, radius);
    let len = g.len();
    let mut out = field.clone();
    for (q, v) in out.data.iter_mut().enumerate() {
        if !mask.inside[q % len] {
            *v = 0.0;
        }
    }
    out.representation = Representation::Masked;
    Ok(out)
}

/// Frames of one spatial field per time node.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    time: TimeGrid,
    frames: Vec<Field>,
}

impl SpaceTimeField {
    pub fn new(time: TimeGrid, frames: Vec<Field>) -> Result<Self> {
        if frames.len() != time.len() {
            return Err(Error::TimeGridMismatch(format!(
                "{} frames for {} time nodes",
                frames.len(),
                time.len()
            )));
        }
        let first = &frames[0];
        for f in &frames[1..] {
            first.ensure_compatible(f)?;
        }
        Ok(Self { time, frames })
    }

    pub fn zeros(grid: GridSpec, time: TimeGrid, rank: Rank) -> Self {
        Self { time, frames: vec![Field::zeros(grid, rank); time.len()] }
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn grid(&self) -> &GridSpec {
        self.frames[0].grid()
    }

    pub fn rank(&self) -> Rank {
        self.frames[0].rank()
    }

    pub fn frames(&self) -> &[Field] {
        &self.frames
    }

    pub fn frame(&self, m: usize) -> &Field {
        &self.frames[m]
    }

    pub fn into_frames(self) -> Vec<Field> {
        self.frames
    }

    pub fn map_frames(&self, mut f: impl FnMut(usize, &Field) -> Result<Field>) -> Result<SpaceTimeField> {
        let frames = self.frames.iter().enumerate().map(|(m, fr)| f(m, fr)).collect::<Result<Vec<_>>>()?;
        SpaceTimeField::new(self.time, frames)
    }

    pub fn ensure_compatible(&self, other: &SpaceTimeField) -> Result<()> {
        self.time.ensure_same(&other.time)?;
        self.grid().ensure_same(other.grid())
    }

    pub fn axpy(&self, a: f64, other: &SpaceTimeField) -> Result<SpaceTimeField> {
        self.ensure_compatible(other)?;
        self.map_frames(|m, f| f.axpy(a, &other.frames[m]))
    }

    pub fn sub(&self, other: &SpaceTimeField) -> Result<SpaceTimeField> {
        self.axpy(-1.0, other)
    }

    pub fn scaled(&self, a: f64) -> SpaceTimeField {
        SpaceTimeField { time: self.time, frames: self.frames.iter().map(|f| f.scaled(a)).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.frames.iter().fold(0.0, |m, f| m.max(f.max_abs()))
    }
}
