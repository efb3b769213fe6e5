//! Discrete spaces, region masks, and measures.
//!
//! A [`DiscreteSpace`] is a finite point set in `R^n` with one positive
//! quadrature weight per point. Masks select index subsets, measures attach
//! nonnegative weights to the points, and signed measures are stored in
//! canonical Hahn–Jordan form (disjointly supported positive and negative
//! parts).

use std::fmt;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json;
use crate::scalar::{cast, Scalar};

/// Relative distinctness floor: spaces with a point pair closer than
/// this fraction of the bounding-box diameter are rejected, since the
/// diagonal regularization of the energy form assumes separated cells.
pub const MIN_SEPARATION_REL: f64 = 1e-9;

const DOC_VERSION: u32 = 1;

/// Content-derived identifier of a space. Two spaces with identical
/// dimension, points, and weights get the same id, which makes result
/// documents reproducible byte for byte.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceId(String);

impl fmt::Display for SpaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl SpaceId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

fn fnv1a(init: u64, bytes: &[u8]) -> u64 {
    let mut h = init;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Finite point set in `R^n` with per-point cell weights.
///
/// Coordinates are stored axis-major (structure of arrays), so distance
/// loops stream each axis contiguously; callers only ever need indexed
/// access through [`point`](Self::point) and [`dist2`](Self::dist2).
#[derive(Clone, Debug)]
pub struct DiscreteSpace<T> {
    id: SpaceId,
    dim: usize,
    len: usize,
    /// `coords[axis * len + i]` is coordinate `axis` of point `i`.
    coords: Vec<T>,
    cell_weights: Vec<T>,
    bbox_diameter: T,
}

impl<T: Scalar> DiscreteSpace<T> {
    /// Builds a space from points given row-wise, validating distinctness
    /// and weight positivity.
    pub fn new(points: Vec<Vec<T>>, cell_weights: Vec<T>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySpace);
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::UnsupportedDimension {
                what: "discrete space",
                required: "n >= 1",
                given: 0,
            });
        }
        let len = points.len();
        if cell_weights.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                given: cell_weights.len(),
            });
        }
        let mut coords = vec![T::zero(); dim * len];
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::LengthMismatch {
                    expected: dim,
                    given: p.len(),
                });
            }
            for (axis, &c) in p.iter().enumerate() {
                if !c.is_finite() {
                    return Err(Error::NonFiniteEntry { index: i });
                }
                coords[axis * len + i] = c;
            }
        }
        for (i, &w) in cell_weights.iter().enumerate() {
            if !(w > T::zero()) || !w.is_finite() {
                return Err(Error::NonPositiveCellWeight {
                    index: i,
                    value: w.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Self::from_soa(dim, len, coords, cell_weights)
    }

    fn from_soa(dim: usize, len: usize, coords: Vec<T>, cell_weights: Vec<T>) -> Result<Self> {
        let mut space = DiscreteSpace {
            id: SpaceId(String::new()),
            dim,
            len,
            coords,
            cell_weights,
            bbox_diameter: T::zero(),
        };
        space.bbox_diameter = space.compute_bbox_diameter();
        space.check_separation()?;
        space.id = space.compute_id();
        Ok(space)
    }

    fn compute_bbox_diameter(&self) -> T {
        let mut d2 = T::zero();
        for axis in 0..self.dim {
            let col = &self.coords[axis * self.len..(axis + 1) * self.len];
            let mut lo = col[0];
            let mut hi = col[0];
            for &c in col {
                if c < lo {
                    lo = c;
                }
                if c > hi {
                    hi = c;
                }
            }
            d2 = d2 + (hi - lo) * (hi - lo);
        }
        d2.sqrt()
    }

    fn check_separation(&self) -> Result<()> {
        if self.len < 2 {
            return Ok(());
        }
        let limit = cast::<T>(MIN_SEPARATION_REL) * self.bbox_diameter;
        let closest = (0..self.len - 1)
            .into_par_iter()
            .map(|i| {
                let mut best = (T::infinity(), i, i + 1);
                for j in (i + 1)..self.len {
                    let d2 = self.dist2(i, j);
                    if d2 < best.0 {
                        best = (d2, i, j);
                    }
                }
                best
            })
            .reduce(
                || (T::infinity(), 0, 0),
                |a, b| {
                    if b.0 < a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) {
                        b
                    } else {
                        a
                    }
                },
            );
        let d = closest.0.sqrt();
        if d <= T::zero() || d < limit {
            return Err(Error::PointsTooClose {
                i: closest.1,
                j: closest.2,
                distance: d.to_f64().unwrap_or(0.0),
                limit: limit.to_f64().unwrap_or(0.0),
            });
        }
        Ok(())
    }

    fn compute_id(&self) -> SpaceId {
        let mut h = 0xcbf29ce484222325u64;
        h = fnv1a(h, &(self.dim as u64).to_le_bytes());
        h = fnv1a(h, &(self.len as u64).to_le_bytes());
        for c in &self.coords {
            h = fnv1a(h, &c.to_f64().unwrap_or(f64::NAN).to_bits().to_le_bytes());
        }
        for w in &self.cell_weights {
            h = fnv1a(h, &w.to_f64().unwrap_or(f64::NAN).to_bits().to_le_bytes());
        }
        SpaceId(format!("s{h:016x}"))
    }

    pub fn id(&self) -> &SpaceId {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_weights(&self) -> &[T] {
        &self.cell_weights
    }

    pub fn bbox_diameter(&self) -> T {
        self.bbox_diameter
    }

    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> T {
        self.coords[axis * self.len + i]
    }

    pub fn point(&self, i: usize) -> Vec<T> {
        (0..self.dim).map(|axis| self.coord(axis, i)).collect()
    }

    /// Squared euclidean distance between points `i` and `j`.
    #[inline]
    pub fn dist2(&self, i: usize, j: usize) -> T {
        let mut s = T::zero();
        for axis in 0..self.dim {
            let d = self.coords[axis * self.len + i] - self.coords[axis * self.len + j];
            s = s + d * d;
        }
        s
    }

    /// Arithmetic mean of the points, the default center for exhaustion
    /// ball sequences.
    pub fn centroid(&self) -> Vec<T> {
        let inv = T::one() / cast::<T>(self.len as f64);
        (0..self.dim)
            .map(|axis| {
                let col = &self.coords[axis * self.len..(axis + 1) * self.len];
                col.iter().fold(T::zero(), |s, &c| s + c) * inv
            })
            .collect()
    }

    /// Versioned JSON document with 17-significant-digit floats.
    pub fn to_json(&self) -> String
    where
        T: Serialize,
    {
        let doc = SpaceDoc {
            version: DOC_VERSION,
            dim: self.dim,
            points: (0..self.len).map(|i| self.point(i)).collect(),
            cell_weights: self.cell_weights.clone(),
        };
        json::to_string_sci(&doc)
    }

    pub fn from_json(text: &str) -> Result<Self>
    where
        T: DeserializeOwned,
    {
        let doc: SpaceDoc<T> = serde_json::from_str(text)?;
        if doc.version != DOC_VERSION {
            return Err(Error::BadVersion {
                given: doc.version,
                expected: DOC_VERSION,
            });
        }
        if doc.points.iter().any(|p| p.len() != doc.dim) {
            return Err(Error::LengthMismatch {
                expected: doc.dim,
                given: doc.points.iter().map(|p| p.len()).find(|&l| l != doc.dim).unwrap_or(0),
            });
        }
        Self::new(doc.points, doc.cell_weights)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceDoc<T> {
    version: u32,
    dim: usize,
    points: Vec<Vec<T>>,
    cell_weights: Vec<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureDoc<T> {
    space: SpaceId,
    weights: Vec<T>,
}

/// Axis-aligned box given as `(lo, hi)` per axis.
pub type AxisBox<T> = Vec<(T, T)>;

/// Cell-centered uniform grid over an axis-aligned box.
/// `resolution[axis]` points per axis; every cell weight is the cell volume.
pub fn build_grid<T: Scalar>(bounds: &[(T, T)], resolution: &[usize]) -> Result<DiscreteSpace<T>> {
    let dim = bounds.len();
    if dim == 0 {
        return Err(Error::UnsupportedDimension {
            what: "grid",
            required: "n >= 1",
            given: 0,
        });
    }
    if resolution.len() != dim {
        return Err(Error::LengthMismatch {
            expected: dim,
            given: resolution.len(),
        });
    }
    for (axis, &(lo, hi)) in bounds.iter().enumerate() {
        if !(hi > lo) {
            return Err(Error::DegenerateBox { axis });
        }
        if resolution[axis] == 0 {
            return Err(Error::BadResolution {
                axis,
                given: resolution[axis],
            });
        }
    }
    let len: usize = resolution.iter().product();
    let mut cell_volume = T::one();
    let mut steps = Vec::with_capacity(dim);
    for (axis, &(lo, hi)) in bounds.iter().enumerate() {
        let h = (hi - lo) / cast::<T>(resolution[axis] as f64);
        steps.push(h);
        cell_volume = cell_volume * h;
    }
    // C order: axis 0 slowest, last axis fastest.
    let mut coords = vec![T::zero(); dim * len];
    for i in 0..len {
        let mut rem = i;
        for axis in (0..dim).rev() {
            let k = rem % resolution[axis];
            rem /= resolution[axis];
            coords[axis * len + i] =
                bounds[axis].0 + (cast::<T>(k as f64) + cast::<T>(0.5)) * steps[axis];
        }
    }
    DiscreteSpace::from_soa(dim, len, coords, vec![cell_volume; len])
}

/// Quasi-uniform sphere sampling in `R^3` by the Fibonacci lattice;
/// deterministic and seed-free. Cell weights are `4πr²/count`.
pub fn build_sphere<T: Scalar>(center: &[T], radius: T, count: usize) -> Result<DiscreteSpace<T>> {
    if center.len() != 3 {
        return Err(Error::UnsupportedDimension {
            what: "sphere sampling",
            required: "n = 3",
            given: center.len(),
        });
    }
    if !(radius > T::zero()) {
        return Err(Error::BadRadius {
            given: radius.to_f64().unwrap_or(f64::NAN),
        });
    }
    if count < 4 {
        return Err(Error::SphereTooCoarse { given: count });
    }
    let len = count;
    let mut coords = vec![T::zero(); 3 * len];
    let golden_angle = cast::<T>(std::f64::consts::PI * (3.0 - 5f64.sqrt()));
    let two = cast::<T>(2.0);
    for i in 0..len {
        let z = T::one() - two * (cast::<T>(i as f64) + cast::<T>(0.5)) / cast::<T>(len as f64);
        let rho = (T::one() - z * z).sqrt();
        let theta = golden_angle * cast::<T>(i as f64);
        coords[i] = center[0] + radius * rho * theta.cos();
        coords[len + i] = center[1] + radius * rho * theta.sin();
        coords[2 * len + i] = center[2] + radius * z;
    }
    let area = cast::<T>(4.0) * T::PI() * radius * radius / cast::<T>(len as f64);
    DiscreteSpace::from_soa(3, len, coords, vec![area; len])
}

/// Sorted, duplicate-free index subset of a space. May be empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionMask {
    space: SpaceId,
    indices: Vec<usize>,
}

impl RegionMask {
    pub fn from_indices<T: Scalar>(
        space: &DiscreteSpace<T>,
        mut indices: Vec<usize>,
    ) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&worst) = indices.last() {
            if worst >= space.len() {
                return Err(Error::MaskOutOfBounds {
                    index: worst,
                    n: space.len(),
                });
            }
        }
        Ok(RegionMask {
            space: space.id().clone(),
            indices,
        })
    }

    pub fn full<T: Scalar>(space: &DiscreteSpace<T>) -> Self {
        RegionMask {
            space: space.id().clone(),
            indices: (0..space.len()).collect(),
        }
    }

    pub fn empty<T: Scalar>(space: &DiscreteSpace<T>) -> Self {
        RegionMask {
            space: space.id().clone(),
            indices: Vec::new(),
        }
    }

    pub fn space(&self) -> &SpaceId {
        &self.space
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    pub fn is_subset_of(&self, other: &RegionMask) -> bool {
        self.space == other.space && self.indices.iter().all(|&i| other.contains(i))
    }

    pub fn intersect(&self, other: &RegionMask) -> Result<RegionMask> {
        check_same_space(&self.space, &other.space)?;
        Ok(RegionMask {
            space: self.space.clone(),
            indices: self
                .indices
                .iter()
                .copied()
                .filter(|&i| other.contains(i))
                .collect(),
        })
    }

    pub fn union(&self, other: &RegionMask) -> Result<RegionMask> {
        check_same_space(&self.space, &other.space)?;
        let mut indices = self.indices.clone();
        indices.extend_from_slice(&other.indices);
        indices.sort_unstable();
        indices.dedup();
        Ok(RegionMask {
            space: self.space.clone(),
            indices,
        })
    }

    pub fn complement<T: Scalar>(&self, space: &DiscreteSpace<T>) -> Result<RegionMask> {
        check_same_space(&self.space, space.id())?;
        Ok(RegionMask {
            space: self.space.clone(),
            indices: (0..space.len()).filter(|&i| !self.contains(i)).collect(),
        })
    }
}

/// Mask of all points satisfying the predicate; indices come out sorted.
pub fn mask_from_predicate<T: Scalar, F>(space: &DiscreteSpace<T>, mut predicate: F) -> RegionMask
where
    F: FnMut(&[T]) -> bool,
{
    let mut buf = vec![T::zero(); space.dim()];
    let indices = (0..space.len())
        .filter(|&i| {
            for axis in 0..space.dim() {
                buf[axis] = space.coord(axis, i);
            }
            predicate(&buf)
        })
        .collect();
    RegionMask {
        space: space.id().clone(),
        indices,
    }
}

/// Nonnegative weight vector over a space.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure<T> {
    space: SpaceId,
    weights: Vec<T>,
}

impl<T: Scalar> DiscreteMeasure<T> {
    pub fn new(space: &DiscreteSpace<T>, weights: Vec<T>) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(Error::LengthMismatch {
                expected: space.len(),
                given: weights.len(),
            });
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFiniteEntry { index: i });
            }
            if w < T::zero() {
                return Err(Error::NonFiniteEntry { index: i });
            }
        }
        Ok(DiscreteMeasure {
            space: space.id().clone(),
            weights,
        })
    }

    pub fn zero(space: &DiscreteSpace<T>) -> Self {
        DiscreteMeasure {
            space: space.id().clone(),
            weights: vec![T::zero(); space.len()],
        }
    }

    pub fn point_mass(space: &DiscreteSpace<T>, index: usize, mass: T) -> Result<Self> {
        if index >= space.len() {
            return Err(Error::MaskOutOfBounds {
                index,
                n: space.len(),
            });
        }
        let mut weights = vec![T::zero(); space.len()];
        weights[index] = mass;
        Self::new(space, weights)
    }

    pub(crate) fn from_weights_unchecked(space: SpaceId, weights: Vec<T>) -> Self {
        DiscreteMeasure { space, weights }
    }

    pub fn space(&self) -> &SpaceId {
        &self.space
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_mass(&self) -> T {
        self.weights.iter().fold(T::zero(), |s, &w| s + w)
    }

    /// Indices carrying strictly positive weight.
    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len())
            .filter(|&i| self.weights[i] > T::zero())
            .collect()
    }

    pub fn scale(&self, factor: T) -> Self {
        DiscreteMeasure {
            space: self.space.clone(),
            weights: self.weights.iter().map(|&w| w * factor).collect(),
        }
    }

    pub fn to_json(&self) -> String
    where
        T: Serialize,
    {
        json::to_string_sci(&MeasureDoc {
            space: self.space.clone(),
            weights: self.weights.clone(),
        })
    }

    pub fn from_json(space: &DiscreteSpace<T>, text: &str) -> Result<Self>
    where
        T: DeserializeOwned,
    {
        let doc: MeasureDoc<T> = serde_json::from_str(text)?;
        check_same_space(&doc.space, space.id())?;
        Self::new(space, doc.weights)
    }
}

/// Signed measure in canonical Hahn–Jordan form.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedMeasure<T> {
    plus: DiscreteMeasure<T>,
    minus: DiscreteMeasure<T>,
}

impl<T: Scalar> SignedMeasure<T> {
    /// Canonicalizes the pair through the net weight vector, so the stored
    /// parts always have disjoint supports.
    pub fn from_parts(plus: DiscreteMeasure<T>, minus: DiscreteMeasure<T>) -> Result<Self> {
        check_same_space(&plus.space, &minus.space)?;
        let net: Vec<T> = plus
            .weights
            .iter()
            .zip(&minus.weights)
            .map(|(&p, &m)| p - m)
            .collect();
        Ok(Self::split(plus.space.clone(), &net))
    }

    pub fn from_positive(measure: DiscreteMeasure<T>) -> Self {
        let n = measure.len();
        let space = measure.space.clone();
        SignedMeasure {
            plus: measure,
            minus: DiscreteMeasure::from_weights_unchecked(space, vec![T::zero(); n]),
        }
    }

    fn split(space: SpaceId, net: &[T]) -> Self {
        let plus: Vec<T> = net
            .iter()
            .map(|&v| if v > T::zero() { v } else { T::zero() })
            .collect();
        let minus: Vec<T> = net
            .iter()
            .map(|&v| if v < T::zero() { -v } else { T::zero() })
            .collect();
        SignedMeasure {
            plus: DiscreteMeasure::from_weights_unchecked(space.clone(), plus),
            minus: DiscreteMeasure::from_weights_unchecked(space, minus),
        }
    }

    pub fn plus(&self) -> &DiscreteMeasure<T> {
        &self.plus
    }

    pub fn minus(&self) -> &DiscreteMeasure<T> {
        &self.minus
    }

    pub fn space(&self) -> &SpaceId {
        &self.plus.space
    }

    /// `plus - minus` as a raw weight vector.
    pub fn net_weights(&self) -> Vec<T> {
        self.plus
            .weights
            .iter()
            .zip(&self.minus.weights)
            .map(|(&p, &m)| p - m)
            .collect()
    }
}

/// Splits a raw weight vector into disjointly supported positive and
/// negative parts; `plus - minus` reconstructs the input exactly.
pub fn hahn_jordan<T: Scalar>(
    space: &DiscreteSpace<T>,
    raw_weights: &[T],
) -> Result<SignedMeasure<T>> {
    if raw_weights.len() != space.len() {
        return Err(Error::LengthMismatch {
            expected: space.len(),
            given: raw_weights.len(),
        });
    }
    for (i, &v) in raw_weights.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteEntry { index: i });
        }
    }
    Ok(SignedMeasure::split(space.id().clone(), raw_weights))
}

pub(crate) fn check_same_space(left: &SpaceId, right: &SpaceId) -> Result<()> {
    if left != right {
        return Err(Error::SpaceMismatch {
            left: left.to_string(),
            right: right.to_string(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_cube_resolution_one() {
        let g = build_grid(&[(0.0f64, 1.0), (0.0, 1.0), (0.0, 1.0)], &[1, 1, 1]).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.point(0), vec![0.5, 0.5, 0.5]);
        assert_eq!(g.cell_weights(), &[1.0]);
    }

    #[test]
    fn interval_resolution_four() {
        let g = build_grid(&[(0.0f64, 1.0)], &[4]).unwrap();
        let xs: Vec<f64> = (0..4).map(|i| g.coord(0, i)).collect();
        assert_eq!(xs, vec![0.125, 0.375, 0.625, 0.875]);
        assert!(g.cell_weights().iter().all(|&w| w == 0.25));
    }

    #[test]
    fn unit_square_resolution_ten() {
        let g = build_grid(&[(0.0f64, 1.0), (0.0, 1.0)], &[10, 10]).unwrap();
        assert_eq!(g.len(), 100);
        assert!(g.cell_weights().iter().all(|&w| (w - 0.01).abs() < 1e-15));
        let mut min_d2 = f64::INFINITY;
        for i in 0..g.len() {
            for j in (i + 1)..g.len() {
                min_d2 = min_d2.min(g.dist2(i, j));
            }
        }
        assert!((min_d2.sqrt() - 0.1).abs() < 1e-12);
        let volume: f64 = g.cell_weights().iter().sum();
        assert!((volume - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_box_rejected() {
        let err = build_grid::<f64>(&[(0.0, 0.0)], &[4]).unwrap_err();
        assert!(matches!(err, Error::DegenerateBox { axis: 0 }));
    }

    #[test]
    fn sphere_weights_and_membership() {
        let s = build_sphere(&[0.0f64, 0.0, 0.0], 1.0, 4).unwrap();
        assert_eq!(s.len(), 4);
        for &w in s.cell_weights() {
            assert!((w - std::f64::consts::PI).abs() < 1e-14);
        }

        let s = build_sphere(&[0.0, 0.0, 0.0], 2.0, 100).unwrap();
        for i in 0..s.len() {
            let p = s.point(i);
            let r = p.iter().map(|c| c * c).sum::<f64>().sqrt();
            assert!((r - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_wrong_dimension() {
        let err = build_sphere::<f64>(&[0.0, 0.0], 1.0, 10).unwrap_err();
        assert!(matches!(err, Error::UnsupportedDimension { .. }));
    }

    #[test]
    fn fibonacci_lattice_is_quasi_uniform() {
        // Nearest-neighbor distances within a factor 2 of each other.
        let s = build_sphere(&[0.0f64, 0.0, 0.0], 1.0, 2000).unwrap();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..s.len() {
            let mut nn = f64::INFINITY;
            for j in 0..s.len() {
                if i != j {
                    nn = nn.min(s.dist2(i, j));
                }
            }
            let nn = nn.sqrt();
            lo = lo.min(nn);
            hi = hi.max(nn);
        }
        assert!(hi / lo < 2.0, "nearest-neighbor spread {}", hi / lo);
    }

    #[test]
    fn predicate_masks() {
        let g = build_grid(&[(0.0f64, 1.0)], &[4]).unwrap();
        assert_eq!(mask_from_predicate(&g, |_| true).indices(), &[0, 1, 2, 3]);
        assert!(mask_from_predicate(&g, |_| false).is_empty());
        assert_eq!(
            mask_from_predicate(&g, |p| p[0] < 0.5).indices(),
            &[0, 1]
        );
    }

    #[test]
    fn mask_complement_partitions() {
        let g = build_grid(&[(0.0f64, 1.0)], &[8]).unwrap();
        let m = mask_from_predicate(&g, |p| p[0] < 0.4);
        let c = m.complement(&g).unwrap();
        let u = m.union(&c).unwrap();
        assert_eq!(u, RegionMask::full(&g));
        assert!(m.intersect(&c).unwrap().is_empty());
    }

    #[test]
    fn hahn_jordan_splits_signs() {
        let g = build_grid(&[(0.0f64, 1.0)], &[3]).unwrap();
        let s = hahn_jordan(&g, &[1.0, -2.0, 0.0]).unwrap();
        assert_eq!(s.plus().weights(), &[1.0, 0.0, 0.0]);
        assert_eq!(s.minus().weights(), &[0.0, 2.0, 0.0]);
        assert_eq!(s.net_weights(), vec![1.0, -2.0, 0.0]);

        let s = hahn_jordan(&g, &[0.5, 0.0, 3.0]).unwrap();
        assert!(s.minus().weights().iter().all(|&w| w == 0.0));

        let g1 = build_grid(&[(0.0f64, 1.0)], &[1]).unwrap();
        let s = hahn_jordan(&g1, &[-3.0]).unwrap();
        assert_eq!(s.plus().weights(), &[0.0]);
        assert_eq!(s.minus().weights(), &[3.0]);
        assert_eq!(s.net_weights(), vec![-3.0]);

        assert!(hahn_jordan(&g1, &[f64::NAN]).is_err());
    }

    #[test]
    fn duplicate_points_rejected() {
        let err = DiscreteSpace::new(
            vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![1.0, 1.0]],
            vec![1.0, 1.0, 1.0],
        )
        .unwrap_err();
        assert!(matches!(err, Error::PointsTooClose { .. }));
    }

    #[test]
    fn json_round_trip() {
        let g = build_grid(&[(0.0f64, 1.0), (0.0, 2.0)], &[3, 2]).unwrap();
        let text = g.to_json();
        let back: DiscreteSpace<f64> = DiscreteSpace::from_json(&text).unwrap();
        assert_eq!(back.id(), g.id());
        for i in 0..g.len() {
            assert_eq!(back.point(i), g.point(i));
        }

        let m = DiscreteMeasure::new(&g, vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.25]).unwrap();
        let back = DiscreteMeasure::<f64>::from_json(&g, &m.to_json()).unwrap();
        assert_eq!(back.weights(), m.weights());
    }
}
