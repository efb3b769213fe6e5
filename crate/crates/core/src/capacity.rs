//! Inner capacity and equilibrium measures.
//!
//! The capacity of a mask `A` is the reciprocal of the minimal energy
//! among probability measures supported on `A`; the minimizer is the
//! equilibrium measure and its constant potential value on its support
//! is the Robin constant.
//!
//! The simplex constraint is handled by homogeneity rather than by
//! elimination: the auxiliary cone problem `min νᵀKν − 2·Σν` over
//! `{ν ≥ 0 on A}` is solved with the same projection machinery as
//! sweeping (target vector `b = 1`), and its minimizer normalizes to the
//! equilibrium measure, with `capacity = Σν*` exactly.

use crate::error::{Error, Result};
use crate::geometry::{check_same_space, DiscreteMeasure, RegionMask};
use crate::kernel::EnergyForm;
use crate::scalar::Scalar;
use crate::solver::{project_onto_cone, SolveOptions};

/// Equilibrium measure of a mask with its capacity data.
#[derive(Clone, Debug)]
pub struct CapacityResult<T> {
    /// Probability measure on the mask minimizing the energy; the zero
    /// measure when the mask is empty.
    pub equilibrium: DiscreteMeasure<T>,
    /// Minimal energy `κ(γ,γ)`; `+∞` for the empty mask (infimum over
    /// the empty set).
    pub energy: T,
    /// `1 / energy`.
    pub capacity: T,
    /// Potential value on the support; coincides with the energy for the
    /// minimizer.
    pub robin_constant: T,
    pub iterations: usize,
}

/// Minimizes `γᵀKγ` over probability measures supported on the mask.
pub fn equilibrium<T: Scalar>(
    form: &EnergyForm<T>,
    mask: &RegionMask,
    opts: &SolveOptions<T>,
) -> Result<CapacityResult<T>> {
    opts.validate()?;
    check_same_space(mask.space(), form.space())?;
    if mask.is_empty() {
        return Ok(CapacityResult {
            equilibrium: DiscreteMeasure::from_weights_unchecked(
                form.space().clone(),
                vec![T::zero(); form.len()],
            ),
            energy: T::infinity(),
            capacity: T::zero(),
            robin_constant: T::infinity(),
            iterations: 0,
        });
    }

    let ones = vec![T::one(); form.len()];
    let outcome = project_onto_cone(form.gram(), &ones, mask.indices(), opts, None);
    if !outcome.converged {
        return Err(Error::NonConvergence {
            iterations: outcome.iterations,
            stationarity: outcome.kkt.stationarity.to_f64().unwrap_or(f64::NAN),
            feasibility: outcome.kkt.feasibility.to_f64().unwrap_or(f64::NAN),
            complementarity: outcome.kkt.complementarity.to_f64().unwrap_or(f64::NAN),
            tolerance: opts.tolerance.to_f64().unwrap_or(f64::NAN),
            scale: outcome.scale.to_f64().unwrap_or(f64::NAN),
            best_iterate: outcome
                .x
                .iter()
                .map(|v| v.to_f64().unwrap_or(f64::NAN))
                .collect(),
        });
    }

    // The auxiliary minimizer has potential 1 on its support, so its
    // total mass is the capacity and normalizing yields the equilibrium.
    let mass = outcome.x.iter().fold(T::zero(), |s, &v| s + v);
    debug_assert!(mass > T::zero(), "nonempty mask must carry mass");
    let gamma: Vec<T> = outcome.x.iter().map(|&v| v / mass).collect();
    let energy = form.gram().quadratic(&gamma);
    let capacity = T::one() / energy;
    // Robin constant measured independently as the mean potential over
    // the support; must agree with the energy for the true minimizer.
    let pot = form.gram().matvec_rows(&gamma, &outcome.active);
    let robin_constant = if outcome.active.is_empty() {
        energy
    } else {
        pot.iter().fold(T::zero(), |s, &v| s + v)
            / T::from_usize(outcome.active.len()).unwrap()
    };

    Ok(CapacityResult {
        equilibrium: DiscreteMeasure::from_weights_unchecked(form.space().clone(), gamma),
        energy,
        capacity,
        robin_constant,
        iterations: outcome.iterations,
    })
}

/// Inner capacity of the mask; `0` for the empty mask.
pub fn capacity<T: Scalar>(
    form: &EnergyForm<T>,
    mask: &RegionMask,
    opts: &SolveOptions<T>,
) -> Result<T> {
    Ok(equilibrium(form, mask, opts)?.capacity)
}

/// A mask is negligible exactly when it is empty: with the regularized
/// finite diagonal every point carries a finite-energy point mass.
pub fn is_negligible(mask: &RegionMask) -> bool {
    mask.is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DiscreteSpace, RegionMask};
    use crate::kernel::{assemble_with, DiagRule, KernelSpec};

    fn two_point() -> (DiscreteSpace<f64>, crate::kernel::EnergyForm<f64>) {
        let space = DiscreteSpace::new(
            vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]],
            vec![1.0, 1.0],
        )
        .unwrap();
        let spec = KernelSpec::riesz(2.0, 3).unwrap();
        let form = assemble_with(&spec, &space, DiagRule::Fixed(2.0)).unwrap();
        (space, form)
    }

    #[test]
    fn singleton_capacity_is_reciprocal_diagonal() {
        let (space, form) = two_point();
        let mask = RegionMask::from_indices(&space, vec![0]).unwrap();
        let r = equilibrium(&form, &mask, &SolveOptions::default()).unwrap();
        assert!((r.equilibrium.weights()[0] - 1.0).abs() < 1e-14);
        assert!((r.energy - 2.0).abs() < 1e-12);
        assert!((r.capacity - 0.5).abs() < 1e-12);
        assert!((r.robin_constant - 2.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_pair_splits_evenly() {
        let (space, form) = two_point();
        let mask = RegionMask::full(&space);
        let r = equilibrium(&form, &mask, &SolveOptions::default()).unwrap();
        assert!((r.equilibrium.weights()[0] - 0.5).abs() < 1e-12);
        assert!((r.equilibrium.weights()[1] - 0.5).abs() < 1e-12);
        assert!((r.energy - 1.5).abs() < 1e-12);
        assert!((r.capacity - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.robin_constant - 1.5).abs() < 1e-12);
        let mass: f64 = r.equilibrium.weights().iter().sum();
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_mask_convention() {
        let (space, form) = two_point();
        let mask = RegionMask::empty(&space);
        let r = equilibrium(&form, &mask, &SolveOptions::default()).unwrap();
        assert_eq!(r.capacity, 0.0);
        assert!(r.energy.is_infinite());
        assert!(r.equilibrium.weights().iter().all(|&w| w == 0.0));
        assert!(is_negligible(&mask));
        assert!(!is_negligible(&RegionMask::full(&space)));
    }

    #[test]
    fn capacity_monotone_under_inclusion() {
        let (space, form) = two_point();
        let small = RegionMask::from_indices(&space, vec![0]).unwrap();
        let big = RegionMask::full(&space);
        let opts = SolveOptions::default();
        let ca = capacity(&form, &small, &opts).unwrap();
        let cb = capacity(&form, &big, &opts).unwrap();
        assert!(ca <= cb + 1e-12);
    }

    #[test]
    fn sweeping_equilibrium_onto_its_mask_is_identity() {
        let (space, form) = two_point();
        let mask = RegionMask::full(&space);
        let opts = SolveOptions::default();
        let r = equilibrium(&form, &mask, &opts).unwrap();
        let swept = crate::balayage::sweep(&form, &r.equilibrium, &mask, &opts).unwrap();
        for (a, b) in swept.swept.weights().iter().zip(r.equilibrium.weights()) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
