//! Kernel families and the discrete energy form.
//!
//! The energy form is the dense Gram matrix
//! `K[i][j] = κ(x_i, x_j) · w_i · w_j` for `i ≠ j`, with the infinite
//! kernel diagonal replaced by a finite self-energy regularization. A
//! strictly positive-definite `K` turns weight vectors into a
//! finite-dimensional pre-Hilbert space: `κν = K·ν` is the potential,
//! `(μ,ν) = μᵀKν` the mutual energy, and `‖ν‖ = √(νᵀKν)` the energy norm.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_same_space, DiscreteMeasure, DiscreteSpace, SignedMeasure, SpaceId};
use crate::linalg::SymMatrix;
use crate::scalar::{cast, Scalar};
use crate::special;

/// Dense assembly is rejected above this point count.
pub const MAX_DENSE_POINTS: usize = 20_000;

/// Kernel family. All members are symmetric, lower semicontinuous, and
/// `+∞` on the diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelFamily<T> {
    /// `|x−y|^{α−n}` with `0 < α < n`.
    Riesz { alpha: T },
    /// `|x−y|^{2−n}`, i.e. Riesz with `α = 2`; requires `n ≥ 3`.
    Newtonian,
    /// Green kernel of the ball: the Newtonian kernel minus its harmonic
    /// image term, vanishing on the sphere `|x−c| = r`. Requires `n ≥ 3`
    /// and all evaluation points strictly inside the ball.
    GreenBall { center: Vec<T>, radius: T },
}

/// A kernel family bound to a spatial dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec<T> {
    #[serde(flatten)]
    pub family: KernelFamily<T>,
    pub dim: usize,
}

impl<T: Scalar> KernelSpec<T> {
    pub fn new(family: KernelFamily<T>, dim: usize) -> Result<Self> {
        match &family {
            KernelFamily::Riesz { alpha } => {
                let a = alpha.to_f64().unwrap_or(f64::NAN);
                if !(a > 0.0 && a < dim as f64) {
                    return Err(Error::BadRieszExponent { alpha: a, dim });
                }
            }
            KernelFamily::Newtonian => {
                if dim < 3 {
                    return Err(Error::UnsupportedDimension {
                        what: "newtonian kernel",
                        required: "n >= 3",
                        given: dim,
                    });
                }
            }
            KernelFamily::GreenBall { center, radius } => {
                if dim < 3 {
                    return Err(Error::UnsupportedDimension {
                        what: "green-ball kernel",
                        required: "n >= 3",
                        given: dim,
                    });
                }
                if center.len() != dim {
                    return Err(Error::LengthMismatch {
                        expected: dim,
                        given: center.len(),
                    });
                }
                if !(*radius > T::zero()) {
                    return Err(Error::BadRadius {
                        given: radius.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
        }
        Ok(KernelSpec { family, dim })
    }

    pub fn riesz(alpha: T, dim: usize) -> Result<Self> {
        Self::new(KernelFamily::Riesz { alpha }, dim)
    }

    pub fn newtonian(dim: usize) -> Result<Self> {
        Self::new(KernelFamily::Newtonian, dim)
    }

    pub fn green_ball(center: Vec<T>, radius: T, dim: usize) -> Result<Self> {
        Self::new(KernelFamily::GreenBall { center, radius }, dim)
    }

    /// Riesz exponent of the singular part (`α = 2` for the Newtonian and
    /// green-ball families).
    pub fn singular_alpha(&self) -> T {
        match &self.family {
            KernelFamily::Riesz { alpha } => *alpha,
            KernelFamily::Newtonian | KernelFamily::GreenBall { .. } => cast(2.0),
        }
    }
}

/// `d²^{(α−n)/2}` with exact handling of the half-integer exponents the
/// standard kernels use, so fixture distances produce exact entries.
#[inline]
fn riesz_from_dist2<T: Scalar>(d2: T, alpha: T, dim: usize) -> T {
    if d2 == T::zero() {
        return T::infinity();
    }
    let e2 = (alpha - cast::<T>(dim as f64)) / cast::<T>(2.0);
    if e2 == cast::<T>(-0.5) {
        T::one() / d2.sqrt()
    } else if e2 == cast::<T>(-1.0) {
        T::one() / d2
    } else if e2 == cast::<T>(-1.5) {
        T::one() / (d2 * d2.sqrt())
    } else {
        d2.powf(e2)
    }
}

fn sq_dist<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter()
        .zip(y)
        .fold(T::zero(), |s, (&a, &b)| s + (a - b) * (a - b))
}

/// Pointwise kernel evaluation; `+∞` when `x = y`.
pub fn eval_kernel<T: Scalar>(spec: &KernelSpec<T>, x: &[T], y: &[T]) -> Result<T> {
    if x.len() != spec.dim || y.len() != spec.dim {
        return Err(Error::LengthMismatch {
            expected: spec.dim,
            given: if x.len() != spec.dim { x.len() } else { y.len() },
        });
    }
    match &spec.family {
        KernelFamily::Riesz { alpha } => Ok(riesz_from_dist2(sq_dist(x, y), *alpha, spec.dim)),
        KernelFamily::Newtonian => Ok(riesz_from_dist2(sq_dist(x, y), cast(2.0), spec.dim)),
        KernelFamily::GreenBall { center, radius } => {
            let r = *radius;
            let u: Vec<T> = x.iter().zip(center).map(|(&a, &c)| a - c).collect();
            let v: Vec<T> = y.iter().zip(center).map(|(&a, &c)| a - c).collect();
            let nu2 = u.iter().fold(T::zero(), |s, &a| s + a * a);
            let nv2 = v.iter().fold(T::zero(), |s, &a| s + a * a);
            for n2 in [nu2, nv2] {
                if n2 >= r * r {
                    return Err(Error::OutsideGreenBall {
                        distance: n2.sqrt().to_f64().unwrap_or(f64::NAN),
                        radius: r.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
            let uv = u.iter().zip(&v).fold(T::zero(), |s, (&a, &b)| s + a * b);
            Ok(green_value(sq_dist(x, y), nu2, nv2, uv, r, spec.dim))
        }
    }
}

/// Green-ball value from precomputed geometric quantities. Uses the
/// symmetric form `|y||x−y*| = √(|x|²|y|² − 2r²⟨x,y⟩ + r⁴)` of the image
/// term, which stays finite and symmetric even when one argument is the
/// center. Negative roundoff near the boundary is clamped to zero.
#[inline]
fn green_value<T: Scalar>(d2: T, nu2: T, nv2: T, uv: T, r: T, dim: usize) -> T {
    if d2 == T::zero() {
        return T::infinity();
    }
    let two = cast::<T>(2.0);
    let r2 = r * r;
    let denom2 = nu2 * nv2 - two * r2 * uv + r2 * r2;
    let singular = riesz_from_dist2(d2, two, dim);
    let image = riesz_from_dist2(denom2 / r2, two, dim);
    let value = singular - image;
    if value > T::zero() {
        value
    } else {
        T::zero()
    }
}

/// Diagonal regularization rule for the infinite kernel diagonal.
///
/// `EqualVolumeBall` treats each weight as the volume of a cell and uses
/// the closed-form self-energy of the ball of equal volume, with the
/// ball radius capped at half the nearest-neighbor distance so the cell
/// model never overlaps neighboring cells (an uncapped radius
/// under-regularizes overlapping cells and loses positive definiteness).
/// The rule keeps the matrix finite and positive definite while its
/// diagonal contribution vanishes under refinement, so discrete energies
/// converge to continuum ones. `NearestNeighbor` instead evaluates the
/// kernel's radial part at half the nearest-neighbor distance. `Fixed`
/// pins the diagonal to a constant, which the hand fixtures use.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagRule<T> {
    #[default]
    EqualVolumeBall,
    NearestNeighbor,
    Fixed(T),
}

/// Symmetric positive-definite energy form over a space.
#[derive(Clone, Debug)]
pub struct EnergyForm<T> {
    space: SpaceId,
    len: usize,
    spec: KernelSpec<T>,
    diag_rule: DiagRule<T>,
    gram: SymMatrix<T>,
    min_pivot: T,
}

/// Assembles the energy form with the default diagonal rule.
pub fn assemble<T: Scalar>(
    spec: &KernelSpec<T>,
    space: &DiscreteSpace<T>,
) -> Result<EnergyForm<T>> {
    assemble_with(spec, space, DiagRule::default())
}

/// Assembles the dense energy form; `O(N²)` work parallelized over rows,
/// each entry computed independently so the result is deterministic.
///
/// Fails with [`Error::EnergyPrincipleViolated`] if the assembled matrix
/// is not strictly positive definite.
pub fn assemble_with<T: Scalar>(
    spec: &KernelSpec<T>,
    space: &DiscreteSpace<T>,
    diag_rule: DiagRule<T>,
) -> Result<EnergyForm<T>> {
    if spec.dim != space.dim() {
        return Err(Error::UnsupportedDimension {
            what: "assembly: kernel/space dimension mismatch",
            required: "equal dimensions",
            given: space.dim(),
        });
    }
    let n = space.len();
    if n > MAX_DENSE_POINTS {
        return Err(Error::TooLarge {
            n,
            limit: MAX_DENSE_POINTS,
        });
    }

    // Per-point geometry for the green-ball image term.
    let green: Option<GreenData<T>> = match &spec.family {
        KernelFamily::GreenBall { center, radius } => {
            let r = *radius;
            let mut norm2 = vec![T::zero(); n];
            let mut offsets = vec![T::zero(); spec.dim * n];
            for i in 0..n {
                let mut s = T::zero();
                for axis in 0..spec.dim {
                    let d = space.coord(axis, i) - center[axis];
                    offsets[axis * n + i] = d;
                    s = s + d * d;
                }
                if s >= r * r {
                    return Err(Error::OutsideGreenBall {
                        distance: s.sqrt().to_f64().unwrap_or(f64::NAN),
                        radius: r.to_f64().unwrap_or(f64::NAN),
                    });
                }
                norm2[i] = s;
            }
            Some(GreenData {
                radius: r,
                norm2,
                offsets,
            })
        }
        _ => None,
    };

    let w = space.cell_weights();
    let alpha = spec.singular_alpha();
    let dim = spec.dim;
    let mut gram = SymMatrix::zeros(n);
    {
        let green = green.as_ref();
        use rayon::prelude::*;
        gram.par_rows_mut().enumerate().for_each(|(i, row)| {
            for (j, slot) in row.iter_mut().enumerate() {
                if i == j {
                    continue;
                }
                let d2 = space.dist2(i, j);
                let k = match green {
                    None => riesz_from_dist2(d2, alpha, dim),
                    Some(g) => green_value(
                        d2,
                        g.norm2[i],
                        g.norm2[j],
                        g.inner(i, j, dim, n),
                        g.radius,
                        dim,
                    ),
                };
                *slot = k * (w[i] * w[j]);
            }
        });
    }

    let diag = diagonal_entries(spec, space, &diag_rule, green.as_ref())?;
    for (i, d) in diag.into_iter().enumerate() {
        if !d.is_finite() {
            return Err(Error::NonFiniteEntry { index: i });
        }
        gram.set(i, i, d);
    }

    let min_pivot = match gram.cholesky() {
        Ok(f) => f.min_pivot(),
        Err(bad) => {
            return Err(Error::EnergyPrincipleViolated {
                index: bad.index,
                pivot: bad.pivot.to_f64().unwrap_or(f64::NAN),
            })
        }
    };

    Ok(EnergyForm {
        space: space.id().clone(),
        len: n,
        spec: spec.clone(),
        diag_rule,
        gram,
        min_pivot,
    })
}

struct GreenData<T> {
    radius: T,
    norm2: Vec<T>,
    /// Axis-major offsets from the ball center.
    offsets: Vec<T>,
}

impl<T: Scalar> GreenData<T> {
    #[inline]
    fn inner(&self, i: usize, j: usize, dim: usize, n: usize) -> T {
        let mut s = T::zero();
        for axis in 0..dim {
            s = s + self.offsets[axis * n + i] * self.offsets[axis * n + j];
        }
        s
    }
}

fn diagonal_entries<T: Scalar>(
    spec: &KernelSpec<T>,
    space: &DiscreteSpace<T>,
    rule: &DiagRule<T>,
    green: Option<&GreenData<T>>,
) -> Result<Vec<T>> {
    let n = space.len();
    let w = space.cell_weights();
    let alpha = spec.singular_alpha();
    let dim = spec.dim;

    // Regular (image) part of the green kernel on the diagonal:
    // (r/(r²−|x−c|²))^{n−2}, subtracted from whichever singular-part rule
    // is in effect.
    let green_correction = |i: usize| -> T {
        match green {
            None => T::zero(),
            Some(g) => {
                let r2 = g.radius * g.radius;
                let denom = r2 - g.norm2[i];
                riesz_from_dist2((denom / g.radius) * (denom / g.radius), cast(2.0), dim)
            }
        }
    };

    match rule {
        DiagRule::Fixed(v) => Ok(vec![*v; n]),
        DiagRule::EqualVolumeBall => {
            let c = cast::<T>(special::ball_self_energy(
                alpha.to_f64().unwrap_or(f64::NAN),
                dim,
            ));
            let vn = cast::<T>(special::unit_ball_volume(dim));
            let inv_dim = T::one() / cast::<T>(dim as f64);
            let half_nn = half_nearest_neighbor(space);
            Ok((0..n)
                .map(|i| {
                    let mut rho = (w[i] / vn).powf(inv_dim);
                    if n > 1 && half_nn[i] < rho {
                        rho = half_nn[i];
                    }
                    let self_energy = c * rho.powf(alpha - cast::<T>(dim as f64));
                    (self_energy - green_correction(i)) * (w[i] * w[i])
                })
                .collect())
        }
        DiagRule::NearestNeighbor => {
            let half_nn = half_nearest_neighbor(space);
            Ok((0..n)
                .map(|i| {
                    let k = if n == 1 {
                        T::one()
                    } else {
                        riesz_from_dist2(half_nn[i] * half_nn[i], alpha, dim)
                            - green_correction(i)
                    };
                    k * (w[i] * w[i])
                })
                .collect())
        }
    }
}

/// Half the nearest-neighbor distance per point (infinite for a single
/// point).
fn half_nearest_neighbor<T: Scalar>(space: &DiscreteSpace<T>) -> Vec<T> {
    use rayon::prelude::*;
    let n = space.len();
    let body = |i: usize| {
        let mut nn2 = T::infinity();
        for j in 0..n {
            if j != i {
                let d2 = space.dist2(i, j);
                if d2 < nn2 {
                    nn2 = d2;
                }
            }
        }
        nn2.sqrt() / cast::<T>(2.0)
    };
    if n >= 512 {
        (0..n).into_par_iter().map(body).collect()
    } else {
        (0..n).map(body).collect()
    }
}

impl<T: Scalar> EnergyForm<T> {
    pub fn space(&self) -> &SpaceId {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn spec(&self) -> &KernelSpec<T> {
        &self.spec
    }

    pub fn diag_rule(&self) -> &DiagRule<T> {
        &self.diag_rule
    }

    /// Smallest Cholesky pivot seen by the positive-definiteness check.
    pub fn min_pivot(&self) -> T {
        self.min_pivot
    }

    pub fn gram(&self) -> &SymMatrix<T> {
        &self.gram
    }

    fn check_measure(&self, m: &DiscreteMeasure<T>) -> Result<()> {
        check_same_space(m.space(), &self.space)
    }

    /// Potential `κν = K·ν` sampled at every point of the space.
    pub fn potential(&self, m: &DiscreteMeasure<T>) -> Result<Vec<T>> {
        self.check_measure(m)?;
        Ok(self.gram.matvec(m.weights()))
    }

    pub fn potential_signed(&self, m: &SignedMeasure<T>) -> Result<Vec<T>> {
        check_same_space(m.space(), &self.space)?;
        Ok(self.gram.matvec(&m.net_weights()))
    }

    /// Raw weight-vector pairing `xᵀ K y`, evaluated in symmetric order so
    /// swapping the arguments reproduces the value bit for bit.
    pub fn pairing(&self, x: &[T], y: &[T]) -> Result<T> {
        if x.len() != self.len || y.len() != self.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                given: if x.len() != self.len { x.len() } else { y.len() },
            });
        }
        Ok(self.gram.bilinear_sym(x, y))
    }

    /// Mutual energy `κ(μ,ν)` of two positive measures.
    pub fn inner_product(&self, a: &DiscreteMeasure<T>, b: &DiscreteMeasure<T>) -> Result<T> {
        self.check_measure(a)?;
        self.check_measure(b)?;
        Ok(self.gram.bilinear_sym(a.weights(), b.weights()))
    }

    /// Mutual energy of signed measures, expanded bilinearly through the
    /// net weight vectors.
    pub fn inner_product_signed(&self, a: &SignedMeasure<T>, b: &SignedMeasure<T>) -> Result<T> {
        check_same_space(a.space(), &self.space)?;
        check_same_space(b.space(), &self.space)?;
        Ok(self.gram.bilinear_sym(&a.net_weights(), &b.net_weights()))
    }

    pub fn energy_norm(&self, m: &DiscreteMeasure<T>) -> Result<T> {
        Ok(self.inner_product(m, m)?.max(T::zero()).sqrt())
    }

    pub fn energy_norm_signed(&self, m: &SignedMeasure<T>) -> Result<T> {
        Ok(self.inner_product_signed(m, m)?.max(T::zero()).sqrt())
    }

    /// Energy distance `‖a − b‖` of two positive measures.
    pub fn distance(&self, a: &DiscreteMeasure<T>, b: &DiscreteMeasure<T>) -> Result<T> {
        self.check_measure(a)?;
        self.check_measure(b)?;
        let diff: Vec<T> = a
            .weights()
            .iter()
            .zip(b.weights())
            .map(|(&x, &y)| x - y)
            .collect();
        Ok(self.gram.quadratic(&diff).max(T::zero()).sqrt())
    }

    /// `‖K‖_∞ · ‖K⁻¹‖_∞`; recomputed on every call.
    pub fn cond_inf(&self) -> Result<T> {
        let f = self.gram.cholesky().map_err(|bad| Error::EnergyPrincipleViolated {
            index: bad.index,
            pivot: bad.pivot.to_f64().unwrap_or(f64::NAN),
        })?;
        Ok(self.gram.inf_norm() * f.inverse_inf_norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;

    fn two_point_space() -> DiscreteSpace<f64> {
        DiscreteSpace::new(
            vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]],
            vec![1.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn riesz_values() {
        let spec = KernelSpec::riesz(2.0f64, 3).unwrap();
        let v = eval_kernel(&spec, &[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(v, 1.0);

        let spec = KernelSpec::riesz(1.0f64, 2).unwrap();
        let v = eval_kernel(&spec, &[0.0, 0.0], &[4.0, 0.0]).unwrap();
        assert_eq!(v, 0.25);

        let v = eval_kernel(&spec, &[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert!(v.is_infinite());
    }

    #[test]
    fn riesz_exponent_validation() {
        assert!(KernelSpec::riesz(2.0f64, 2).is_err());
        assert!(KernelSpec::riesz(0.0f64, 2).is_err());
        assert!(KernelSpec::riesz(1.5f64, 2).is_ok());
        assert!(KernelSpec::<f64>::newtonian(2).is_err());
        assert!(KernelSpec::<f64>::newtonian(3).is_ok());
    }

    #[test]
    fn green_ball_hand_value() {
        let spec = KernelSpec::green_ball(vec![0.0f64; 3], 1.0, 3).unwrap();
        let v = eval_kernel(&spec, &[0.0, 0.0, 0.0], &[0.5, 0.0, 0.0]).unwrap();
        // Singular part 1/0.5 = 2; image term for the center is 1/r = 1.
        assert!((v - 1.0).abs() < 1e-14);

        // Symmetry of the image-term denominator.
        let a = eval_kernel(&spec, &[0.3, 0.1, -0.2], &[-0.4, 0.25, 0.05]).unwrap();
        let b = eval_kernel(&spec, &[-0.4, 0.25, 0.05], &[0.3, 0.1, -0.2]).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn green_ball_vanishes_on_boundary() {
        let spec = KernelSpec::green_ball(vec![0.0f64; 3], 1.0, 3).unwrap();
        let y = [0.5, 0.0, 0.0];
        let x = [1.0 - 1e-7, 0.0, 0.0];
        let v = eval_kernel(&spec, &x, &y).unwrap();
        assert!(v.abs() <= 1e-6, "boundary value {v}");
    }

    #[test]
    fn green_ball_rejects_outside() {
        let spec = KernelSpec::green_ball(vec![0.0f64; 3], 1.0, 3).unwrap();
        let err = eval_kernel(&spec, &[0.0; 3], &[1.5, 0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::OutsideGreenBall { .. }));
    }

    #[test]
    fn fixture_gram_two_points() {
        let space = two_point_space();
        let spec = KernelSpec::riesz(2.0, 3).unwrap();
        let form = assemble_with(&spec, &space, DiagRule::Fixed(2.0)).unwrap();
        assert_eq!(form.gram().get(0, 0), 2.0);
        assert_eq!(form.gram().get(0, 1), 1.0);
        assert_eq!(form.gram().get(1, 0), 1.0);
        assert_eq!(form.gram().get(1, 1), 2.0);

        let mu = DiscreteMeasure::new(&space, vec![0.0, 1.0]).unwrap();
        assert_eq!(form.potential(&mu).unwrap(), vec![1.0, 2.0]);
        let ones = DiscreteMeasure::new(&space, vec![1.0, 1.0]).unwrap();
        assert_eq!(form.potential(&ones).unwrap(), vec![3.0, 3.0]);
        assert_eq!(form.inner_product(&ones, &ones).unwrap(), 6.0);
        assert_eq!(form.energy_norm(&ones).unwrap(), 6.0f64.sqrt());

        let zero = DiscreteMeasure::zero(&space);
        assert_eq!(form.inner_product(&ones, &zero).unwrap(), 0.0);
        assert_eq!(form.energy_norm(&zero).unwrap(), 0.0);

        let e1 = DiscreteMeasure::new(&space, vec![1.0, 0.0]).unwrap();
        let e2 = DiscreteMeasure::new(&space, vec![0.0, 1.0]).unwrap();
        assert_eq!(form.inner_product(&e2, &e1).unwrap(), 1.0);
        let signed = crate::geometry::hahn_jordan(&space, &[1.0, -1.0]).unwrap();
        assert!((form.energy_norm_signed(&signed).unwrap() - 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn single_point_assembly_is_pd() {
        let space = DiscreteSpace::new(vec![vec![0.0]], vec![1.0]).unwrap();
        let spec = KernelSpec::riesz(0.5, 1).unwrap();
        let form = assemble(&spec, &space).unwrap();
        assert_eq!(form.len(), 1);
        assert!(form.gram().get(0, 0) > 0.0);
    }

    #[test]
    fn grid_assembly_symmetric_bit_exact_and_pd() {
        let space = build_grid(&[(0.0f64, 1.0), (0.0, 1.0)], &[10, 10]).unwrap();
        let spec = KernelSpec::riesz(1.0, 2).unwrap();
        let form = assemble(&spec, &space).unwrap();
        for i in 0..form.len() {
            for j in 0..form.len() {
                assert_eq!(
                    form.gram().get(i, j).to_bits(),
                    form.gram().get(j, i).to_bits()
                );
                assert!(form.gram().get(i, j) >= 0.0);
            }
        }
        assert!(form.min_pivot() > 0.0);
    }

    #[test]
    fn potential_is_monotone_in_the_measure() {
        let space = build_grid(&[(0.0, 1.0)], &[16]).unwrap();
        let spec = KernelSpec::riesz(0.5, 1).unwrap();
        let form = assemble(&spec, &space).unwrap();
        let a = DiscreteMeasure::new(&space, (0..16).map(|i| i as f64 / 16.0).collect()).unwrap();
        let b = DiscreteMeasure::new(&space, (0..16).map(|i| i as f64 / 16.0 + 0.5).collect())
            .unwrap();
        let pa = form.potential(&a).unwrap();
        let pb = form.potential(&b).unwrap();
        for (x, y) in pa.iter().zip(&pb) {
            assert!(x <= y);
        }
    }

    #[test]
    fn green_ball_assembly_is_pd_and_sweepable() {
        let space = build_grid(&[(-0.4f64, 0.4), (-0.4, 0.4), (-0.4, 0.4)], &[4, 4, 4]).unwrap();
        let spec = KernelSpec::green_ball(vec![0.0; 3], 1.0, 3).unwrap();
        let form = assemble(&spec, &space).unwrap();
        assert!(form.min_pivot() > 0.0);

        let mu = DiscreteMeasure::new(&space, vec![1.0 / 64.0; 64]).unwrap();
        let mask = crate::geometry::mask_from_predicate(&space, |p| p[0] < 0.0);
        let r = crate::balayage::sweep(&form, &mu, &mask, &crate::solver::SolveOptions::default())
            .unwrap();
        assert!(r.kkt.worst() <= 1e-10 * r.scale);

        // Points on or outside the ball are rejected at assembly.
        let outside = build_grid(&[(0.0f64, 2.0), (0.0, 2.0), (0.0, 2.0)], &[3, 3, 3]).unwrap();
        assert!(matches!(
            assemble(&spec, &outside),
            Err(Error::OutsideGreenBall { .. })
        ));
    }

    #[test]
    fn nearest_neighbor_diag_rule() {
        let space = build_grid(&[(0.0, 1.0)], &[4]).unwrap();
        let spec = KernelSpec::riesz(0.5, 1).unwrap();
        let form = assemble_with(&spec, &space, DiagRule::NearestNeighbor).unwrap();
        // h = 0.25, half = 0.125, kernel = 0.125^{-0.5}, weights 0.25².
        let expect = 0.125f64.powf(-0.5) * 0.0625;
        assert!((form.gram().get(0, 0) - expect).abs() < 1e-14);
    }
}
