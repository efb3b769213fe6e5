//! Sweeping (balayage) of measures onto region masks.
//!
//! The swept measure `μ^A` is the orthogonal projection of `μ`, in the
//! energy metric of the form, onto the convex cone of nonnegative
//! measures supported on `A`. Every solve returns a KKT certificate:
//! with `g = K(μ^A − μ)`,
//!
//! * stationarity: `g = 0` on the support of `μ^A`,
//! * feasibility:  `g ≥ 0` on `A` (the swept potential dominates `κμ`
//!   on `A`),
//! * complementarity: `μ^A_i · g_i = 0` on `A`,
//!
//! all relative to `scale = max(‖Kμ‖_∞, 1e−14)`. Signed measures sweep
//! by parts; the outer sweep is the same projection flagged as outer,
//! which is exact here because every subset of a finite space is Borel.

use crate::error::{Error, Result};
use crate::geometry::{check_same_space, DiscreteMeasure, RegionMask, SignedMeasure};
use crate::kernel::EnergyForm;
use crate::scalar::{cast, Scalar};
use crate::solver::{project_onto_cone, ConeProjection, KktResiduals, SolveOptions};

pub use crate::solver::SolveMethod;

/// Relative tolerance of the domination diagnostic: index `i` counts as
/// a violation when `(κμ^A)_i > (κμ)_i + 1e−8·scale`.
pub const DOMINATION_REL_TOL: f64 = 1e-8;

/// Default relative tolerance of [`certify`].
pub const CERTIFICATION_REL_TOL: f64 = 1e-8;

/// Where the swept potential exceeds the original one.
///
/// The continuum domination principle promises `κμ^A ≤ κμ` everywhere;
/// after discretization this is a diagnostic, not a guarantee. The
/// diagnostic proper counts violations *off* the mask (`passes_off_mask`
/// is the exclusion signal for symmetry experiments). Inside the mask,
/// inactive points sit on the feasible side of the KKT system and can
/// legitimately exceed by a discretization artifact; the stricter
/// whole-space flag (`passes_everywhere`) is what conditions the
/// potential-equality and monotonicity assertions.
#[derive(Clone, Copy, Debug, Default, serde::Serialize)]
pub struct DominationReport<T> {
    pub count_on_mask: usize,
    pub count_off_mask: usize,
    /// Worst excess `(κμ^A − κμ)_i` over the whole space.
    pub worst: T,
    /// Worst excess off the mask.
    pub worst_off_mask: T,
    /// No off-mask index violates at `1e−8·scale`.
    pub passes_off_mask: bool,
    /// No index at all violates at `1e−8·scale`.
    pub passes_everywhere: bool,
}

impl<T: Scalar> DominationReport<T> {
    pub fn count(&self) -> usize {
        self.count_on_mask + self.count_off_mask
    }
}

/// Swept measure with its optimality certificate and diagnostics.
#[derive(Clone, Debug)]
pub struct BalayageResult<T> {
    pub swept: DiscreteMeasure<T>,
    /// Sorted indices where the swept measure is strictly positive.
    pub active_set: Vec<usize>,
    pub kkt: KktResiduals<T>,
    /// Energy distance `‖μ − μ^A‖`.
    pub distance: T,
    pub iterations: usize,
    /// Residual scale `max(‖Kμ‖_∞, 1e−14)` the KKT residuals refer to.
    pub scale: T,
    /// Set when the result was produced by [`outer_sweep`].
    pub outer: bool,
    pub domination: DominationReport<T>,
}

/// Result of sweeping a signed measure: both halves plus the recombined
/// signed measure in canonical form.
#[derive(Clone, Debug)]
pub struct SignedBalayage<T> {
    pub plus: BalayageResult<T>,
    pub minus: BalayageResult<T>,
    pub combined: SignedMeasure<T>,
}

/// Verdict of the test-family certification of a claimed swept measure.
#[derive(Clone, Debug)]
pub enum CertifyVerdict<T> {
    Certified {
        worst_residual: T,
    },
    Rejected {
        /// Index of the worst family member, when one was evaluated.
        worst_member: Option<usize>,
        residual: T,
        reason: String,
    },
}

impl<T> CertifyVerdict<T> {
    pub fn is_certified(&self) -> bool {
        matches!(self, CertifyVerdict::Certified { .. })
    }
}

fn check_mask<T: Scalar>(form: &EnergyForm<T>, mask: &RegionMask) -> Result<()> {
    check_same_space(mask.space(), form.space())
}

/// Inner balayage: projects `μ` onto the cone of measures on `A`.
///
/// The empty mask is legal and returns the zero measure at distance
/// `‖μ‖`. Non-convergence is an error carrying the best iterate.
pub fn sweep<T: Scalar>(
    form: &EnergyForm<T>,
    mu: &DiscreteMeasure<T>,
    mask: &RegionMask,
    opts: &SolveOptions<T>,
) -> Result<BalayageResult<T>> {
    sweep_with_warm(form, mu, mask, opts, None)
}

/// [`sweep`] with a warm-start iterate (used by exhaustion runs, which
/// reuse the previous stage's solution).
pub fn sweep_with_warm<T: Scalar>(
    form: &EnergyForm<T>,
    mu: &DiscreteMeasure<T>,
    mask: &RegionMask,
    opts: &SolveOptions<T>,
    warm: Option<&DiscreteMeasure<T>>,
) -> Result<BalayageResult<T>> {
    opts.validate()?;
    check_same_space(mu.space(), form.space())?;
    check_mask(form, mask)?;
    if let Some(w) = warm {
        check_same_space(w.space(), form.space())?;
    }

    let b = form.gram().matvec(mu.weights());
    let outcome = project_onto_cone(
        form.gram(),
        &b,
        mask.indices(),
        opts,
        warm.map(|w| w.weights()),
    );
    finish_sweep(form, mu, mask, opts, b, outcome)
}

fn finish_sweep<T: Scalar>(
    form: &EnergyForm<T>,
    mu: &DiscreteMeasure<T>,
    mask: &RegionMask,
    opts: &SolveOptions<T>,
    b: Vec<T>,
    outcome: ConeProjection<T>,
) -> Result<BalayageResult<T>> {
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

    let diff: Vec<T> = outcome
        .x
        .iter()
        .zip(mu.weights())
        .map(|(&xi, &mi)| xi - mi)
        .collect();
    let distance = form.gram().quadratic(&diff).max(T::zero()).sqrt();

    // Domination diagnostic: κμ^A vs κμ everywhere.
    let pot = form.gram().matvec(&outcome.x);
    let tol = cast::<T>(DOMINATION_REL_TOL) * outcome.scale;
    let mut report = DominationReport::default();
    for (i, (&p, &q)) in pot.iter().zip(&b).enumerate() {
        let excess = p - q;
        let on_mask = mask.contains(i);
        if excess > report.worst {
            report.worst = excess;
        }
        if !on_mask && excess > report.worst_off_mask {
            report.worst_off_mask = excess;
        }
        if excess > tol {
            if on_mask {
                report.count_on_mask += 1;
            } else {
                report.count_off_mask += 1;
            }
        }
    }
    report.passes_off_mask = report.count_off_mask == 0;
    report.passes_everywhere = report.count() == 0;

    let swept = DiscreteMeasure::from_weights_unchecked(form.space().clone(), outcome.x);
    Ok(BalayageResult {
        swept,
        active_set: outcome.active,
        kkt: outcome.kkt,
        distance,
        iterations: outcome.iterations,
        scale: outcome.scale,
        outer: false,
        domination: report,
    })
}

/// Signed sweeping by parts: `μ^A = (μ⁺)^A − (μ⁻)^A`.
pub fn sweep_signed<T: Scalar>(
    form: &EnergyForm<T>,
    mu: &SignedMeasure<T>,
    mask: &RegionMask,
    opts: &SolveOptions<T>,
) -> Result<SignedBalayage<T>> {
    let plus = sweep(form, mu.plus(), mask, opts)?;
    let minus = sweep(form, mu.minus(), mask, opts)?;
    let combined = SignedMeasure::from_parts(plus.swept.clone(), minus.swept.clone())?;
    Ok(SignedBalayage {
        plus,
        minus,
        combined,
    })
}

/// Outer balayage. On a finite space every subset is Borel and the
/// topology is second-countable, so the outer and inner sweeps coincide;
/// the result is the inner sweep flagged as outer.
pub fn outer_sweep<T: Scalar>(
    form: &EnergyForm<T>,
    mu: &DiscreteMeasure<T>,
    mask: &RegionMask,
    opts: &SolveOptions<T>,
) -> Result<BalayageResult<T>> {
    let mut result = sweep(form, mu, mask, opts)?;
    result.outer = true;
    Ok(result)
}

/// Relative defect of the symmetry relation `κ(μ^A, ν) = κ(μ, ν^A)`:
/// `|κ(μ^A,ν) − κ(μ,ν^A)| / max(1, |κ(μ^A,ν)|)`.
pub fn symmetry_residual<T: Scalar>(
    form: &EnergyForm<T>,
    mu: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
    mask: &RegionMask,
    opts: &SolveOptions<T>,
) -> Result<T> {
    let mu_swept = sweep(form, mu, mask, opts)?;
    let nu_swept = sweep(form, nu, mask, opts)?;
    let lhs = form.pairing(mu_swept.swept.weights(), nu.weights())?;
    let rhs = form.pairing(mu.weights(), nu_swept.swept.weights())?;
    Ok((lhs - rhs).abs() / T::one().max(lhs.abs()))
}

/// Certifies a claimed swept measure `ξ` against `μ^A` through the test
/// family: `κ(ξ,λ) = κ(λ^A,μ)` must hold for every member `λ`. With a
/// family whose potentials span the space, passing identifies `ξ = μ^A`.
///
/// Residuals are relative to `max(1, |κ(ξ,λ)|)` per member; the verdict
/// compares the worst one against `tolerance` (use
/// [`CERTIFICATION_REL_TOL`] for the default).
pub fn certify<T: Scalar>(
    form: &EnergyForm<T>,
    xi: &DiscreteMeasure<T>,
    mu: &DiscreteMeasure<T>,
    mask: &RegionMask,
    family: &crate::convergence::TestFamily<T>,
    opts: &SolveOptions<T>,
    tolerance: T,
) -> Result<CertifyVerdict<T>> {
    check_same_space(xi.space(), form.space())?;
    check_same_space(mu.space(), form.space())?;
    check_mask(form, mask)?;
    if family.members.is_empty() {
        return Ok(CertifyVerdict::Rejected {
            worst_member: None,
            residual: T::infinity(),
            reason: "empty test family certifies nothing".into(),
        });
    }

    let mut worst = T::zero();
    let mut worst_member = 0usize;
    for (m, lambda) in family.members.iter().enumerate() {
        let swept = sweep_signed(form, lambda, mask, opts)?;
        let lhs = form.pairing(xi.weights(), &lambda.net_weights())?;
        let rhs = form.pairing(&swept.combined.net_weights(), mu.weights())?;
        let residual = (lhs - rhs).abs() / T::one().max(lhs.abs());
        if residual > worst {
            worst = residual;
            worst_member = m;
        }
    }
    if worst <= tolerance {
        Ok(CertifyVerdict::Certified {
            worst_residual: worst,
        })
    } else {
        Ok(CertifyVerdict::Rejected {
            worst_member: Some(worst_member),
            residual: worst,
            reason: format!(
                "pairing mismatch {worst:e} at family member {worst_member} exceeds {tolerance:e}"
            ),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{hahn_jordan, DiscreteSpace, RegionMask};
    use crate::kernel::{assemble_with, DiagRule, KernelSpec};

    /// Two unit-weight points at distance 1 with a fixed diagonal of 2:
    /// the gram matrix is [[2,1],[1,2]] exactly.
    pub(crate) fn two_point_form() -> (DiscreteSpace<f64>, EnergyForm<f64>) {
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
    fn two_point_fixture() {
        let (space, form) = two_point_form();
        let mu = DiscreteMeasure::new(&space, vec![0.0, 1.0]).unwrap();
        let mask = RegionMask::from_indices(&space, vec![0]).unwrap();
        let r = sweep(&form, &mu, &mask, &SolveOptions::default()).unwrap();

        assert!((r.swept.weights()[0] - 0.5).abs() < 1e-14);
        assert_eq!(r.swept.weights()[1], 0.0);
        assert_eq!(r.active_set, vec![0]);
        assert!((r.distance * r.distance - 1.5).abs() < 1e-14);

        // Potentials: equality on A, dominated everywhere.
        let pot_swept = form.potential(&r.swept).unwrap();
        let pot_mu = form.potential(&mu).unwrap();
        assert!((pot_swept[0] - 1.0).abs() < 1e-14);
        assert!((pot_swept[1] - 0.5).abs() < 1e-14);
        assert_eq!(pot_mu, vec![1.0, 2.0]);
        assert!(r.domination.passes_everywhere);
    }

    #[test]
    fn mask_containing_support_is_identity() {
        let (space, form) = two_point_form();
        let mu = DiscreteMeasure::new(&space, vec![0.25, 1.0]).unwrap();
        let mask = RegionMask::full(&space);
        let r = sweep(&form, &mu, &mask, &SolveOptions::default()).unwrap();
        assert!((r.swept.weights()[0] - 0.25).abs() < 1e-12);
        assert!((r.swept.weights()[1] - 1.0).abs() < 1e-12);
        assert!(r.distance < 1e-12);
    }

    #[test]
    fn empty_mask_returns_zero_at_full_distance() {
        let (space, form) = two_point_form();
        let mu = DiscreteMeasure::new(&space, vec![0.0, 1.0]).unwrap();
        let mask = RegionMask::empty(&space);
        let r = sweep(&form, &mu, &mask, &SolveOptions::default()).unwrap();
        assert!(r.swept.weights().iter().all(|&w| w == 0.0));
        assert_eq!(r.distance, form.energy_norm(&mu).unwrap());
        assert!(r.active_set.is_empty());
    }

    #[test]
    fn signed_sweep_combines_by_parts() {
        // plus = (0,1), minus = (0,0.5) canonicalizes to net (0, 0.5);
        // sweeping by parts must agree with the scaled hand solution
        // (0.5, 0)·0.5 = (0.25, 0).
        let (space, form) = two_point_form();
        let plus = DiscreteMeasure::new(&space, vec![0.0, 1.0]).unwrap();
        let minus = DiscreteMeasure::new(&space, vec![0.0, 0.5]).unwrap();
        let signed = SignedMeasure::from_parts(plus, minus).unwrap();
        let mask = RegionMask::from_indices(&space, vec![0]).unwrap();
        let r = sweep_signed(&form, &signed, &mask, &SolveOptions::default()).unwrap();
        let net = r.combined.net_weights();
        assert!((net[0] - 0.25).abs() < 1e-14);
        assert_eq!(net[1], 0.0);
    }

    #[test]
    fn signed_sweep_fixed_points_stay_fixed() {
        // Both parts already concentrated on disjoint points of A.
        let (space, form) = two_point_form();
        let signed = hahn_jordan(&space, &[0.75, -0.25]).unwrap();
        let mask = RegionMask::full(&space);
        let r = sweep_signed(&form, &signed, &mask, &SolveOptions::default()).unwrap();
        let net = r.combined.net_weights();
        assert!((net[0] - 0.75).abs() < 1e-12);
        assert!((net[1] + 0.25).abs() < 1e-12);
    }

    #[test]
    fn signed_sweep_of_positive_measure_matches_plain() {
        let (space, form) = two_point_form();
        let mu = DiscreteMeasure::new(&space, vec![0.0, 1.0]).unwrap();
        let signed = SignedMeasure::from_positive(mu.clone());
        let mask = RegionMask::from_indices(&space, vec![0]).unwrap();
        let opts = SolveOptions::default();
        let r = sweep_signed(&form, &signed, &mask, &opts).unwrap();
        let plain = sweep(&form, &mu, &mask, &opts).unwrap();
        assert_eq!(r.plus.swept.weights(), plain.swept.weights());
        assert!(r.minus.swept.weights().iter().all(|&w| w == 0.0));
        assert_eq!(r.combined.net_weights(), plain.swept.weights());
    }

    #[test]
    fn outer_sweep_is_bit_identical() {
        let (space, form) = two_point_form();
        let mu = DiscreteMeasure::new(&space, vec![0.0, 1.0]).unwrap();
        let mask = RegionMask::from_indices(&space, vec![0]).unwrap();
        let opts = SolveOptions::default();
        let inner = sweep(&form, &mu, &mask, &opts).unwrap();
        let outer = outer_sweep(&form, &mu, &mask, &opts).unwrap();
        assert!(outer.outer);
        for (a, b) in inner.swept.weights().iter().zip(outer.swept.weights()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn symmetry_residual_fixture() {
        let (space, form) = two_point_form();
        let mu = DiscreteMeasure::new(&space, vec![0.0, 1.0]).unwrap();
        let nu = DiscreteMeasure::new(&space, vec![1.0, 0.0]).unwrap();
        let mask = RegionMask::from_indices(&space, vec![0]).unwrap();
        let r = symmetry_residual(&form, &mu, &nu, &mask, &SolveOptions::default()).unwrap();
        assert!(r < 1e-13, "residual {r}");

        // ν = μ and A = X are exactly symmetric.
        let full = RegionMask::full(&space);
        let r = symmetry_residual(&form, &mu, &mu, &full, &SolveOptions::default()).unwrap();
        assert!(r < 1e-13);
    }
}
