//! Randomized invariant suite over seeded instances.
//!
//! One pass of the suite draws `trials` random instances and checks the
//! projection laws, KKT certificates, oracle agreement, symmetry,
//! capacity properties, contraction, and certification, each against its
//! pinned threshold. The CLI `verify` command runs this and fails on the
//! first violated invariant.

use crate::balayage::{certify, sweep, symmetry_residual, CertifyVerdict};
use crate::capacity::equilibrium;
use crate::convergence::{build_default_family, contraction_check};
use crate::error::Result;
use crate::geometry::{DiscreteMeasure, RegionMask};
use crate::oracle::{brute_sweep, random_instance, InstanceParams, RandomInstance};
use crate::scalar::{cast, Scalar};
use crate::solver::SolveOptions;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Outcome of one invariant across all trials.
#[derive(Clone, Debug)]
pub struct InvariantOutcome<T> {
    pub name: &'static str,
    /// Worst residual observed, in the units of `threshold`.
    pub worst: T,
    pub threshold: T,
    pub pass: bool,
    pub trials: usize,
    /// Trials excluded by a precondition (e.g. domination failures).
    pub skipped: usize,
}

impl<T: Scalar> InvariantOutcome<T> {
    fn new(name: &'static str, worst: T, threshold: T, trials: usize, skipped: usize) -> Self {
        InvariantOutcome {
            name,
            worst,
            threshold,
            pass: worst <= threshold,
            trials,
            skipped,
        }
    }
}

struct Accumulator<T> {
    worst: T,
    skipped: usize,
}

impl<T: Scalar> Accumulator<T> {
    fn new() -> Self {
        Accumulator {
            worst: T::zero(),
            skipped: 0,
        }
    }

    fn record(&mut self, v: T) {
        if v > self.worst {
            self.worst = v;
        }
    }

    fn skip(&mut self) {
        self.skipped += 1;
    }
}

fn rel_max_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    let denom = a
        .iter()
        .fold(T::zero(), |m, &v| m.max(v.abs()))
        .max(T::one());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y).abs())
        .fold(T::zero(), T::max)
        / denom
}

/// Runs the whole suite; one outcome per invariant.
pub fn run_suite<T: Scalar>(
    seed: u64,
    trials: usize,
    params: &InstanceParams,
    opts: &SolveOptions<T>,
) -> Result<Vec<InvariantOutcome<T>>> {
    let mut kkt = Accumulator::<T>::new();
    let mut oracle = Accumulator::<T>::new();
    let mut idem = Accumulator::<T>::new();
    let mut homog = Accumulator::<T>::new();
    let mut nonexp = Accumulator::<T>::new();
    let mut minimal = Accumulator::<T>::new();
    let mut set_inv = Accumulator::<T>::new();
    let mut equality = Accumulator::<T>::new();
    let mut symmetry = Accumulator::<T>::new();
    let mut cap_simplex = Accumulator::<T>::new();
    let mut cap_kkt = Accumulator::<T>::new();
    let mut cap_mono = Accumulator::<T>::new();
    let mut contraction = Accumulator::<T>::new();
    let mut certification = Accumulator::<T>::new();
    let mut oracle_optimality = Accumulator::<T>::new();
    let mut additivity = Accumulator::<T>::new();

    for t in 0..trials {
        let inst: RandomInstance<T> = random_instance(seed.wrapping_add(t as u64), params)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64) ^ 0x5eed);
        let RandomInstance {
            space,
            form,
            mu,
            mask,
            ..
        } = &inst;
        let n = space.len();

        let r = sweep(form, mu, mask, opts)?;
        kkt.record(r.kkt.worst() / r.scale);

        // Oracle agreement (exact enumeration at these sizes), and the
        // oracle's global-optimum certificate: its distance never beats
        // the main solver's by more than arithmetic noise.
        let (reference, _info) = brute_sweep(form, mu, mask)?;
        oracle.record(
            r.swept
                .weights()
                .iter()
                .zip(reference.weights())
                .map(|(&a, &b)| (a - b).abs())
                .fold(T::zero(), T::max),
        );
        let d_oracle = form.distance(mu, &reference)?;
        oracle_optimality.record((r.distance - d_oracle) / r.scale);

        // Idempotence: projecting a cone element is the identity.
        let r2 = sweep(form, &r.swept, mask, opts)?;
        idem.record(rel_max_diff(r.swept.weights(), r2.swept.weights()));

        // Positive homogeneity.
        let a = cast::<T>(0.1 + 9.9 * rng.random::<f64>());
        let scaled = sweep(form, &mu.scale(a), mask, opts)?;
        let expect: Vec<T> = r.swept.weights().iter().map(|&w| w * a).collect();
        homog.record(rel_max_diff(&expect, scaled.swept.weights()));

        // Non-expansiveness against a second random measure.
        let nu_weights: Vec<T> = (0..n).map(|_| cast::<T>(rng.random::<f64>())).collect();
        let nu = DiscreteMeasure::new(space, nu_weights)?;
        let rn = sweep(form, &nu, mask, opts)?;
        let lhs = form.distance(&r.swept, &rn.swept)?;
        let rhs = form.distance(mu, &nu)?;
        nonexp.record((lhs - rhs) / r.scale);

        // Minimality against random feasible competitors.
        for _ in 0..20 {
            let w: Vec<T> = (0..n)
                .map(|i| {
                    if mask.contains(i) {
                        cast::<T>(rng.random::<f64>())
                    } else {
                        T::zero()
                    }
                })
                .collect();
            let feasible = DiscreteMeasure::new(space, w)?;
            let d = form.distance(mu, &feasible)?;
            minimal.record((r.distance - d) / r.scale);
        }

        // Set invariance: masks between the active support and A give
        // the same sweep.
        let supp = RegionMask::from_indices(space, r.active_set.clone())?;
        let extra: Vec<usize> = mask
            .indices()
            .iter()
            .copied()
            .filter(|_| rng.random::<f64>() < 0.5)
            .collect();
        let mid = supp.union(&RegionMask::from_indices(space, extra)?)?;
        for q in [&supp, &mid] {
            let rq = sweep(form, mu, q, opts)?;
            set_inv.record(rel_max_diff(r.swept.weights(), rq.swept.weights()));
        }

        // Equality of potentials on the mask, conditioned on domination.
        let pot_mu = form.potential(mu)?;
        let pot_swept = form.potential(&r.swept)?;
        if r.domination.passes_everywhere {
            for &i in mask.indices() {
                equality.record((pot_swept[i] - pot_mu[i]).abs() / r.scale);
            }
        } else {
            equality.skip();
        }

        // Symmetry relation, also domination-conditioned.
        let rn_dom = rn.domination.passes_everywhere;
        if r.domination.passes_everywhere && rn_dom {
            symmetry.record(symmetry_residual(form, mu, &nu, mask, opts)?);
        } else {
            symmetry.skip();
        }

        // Capacity block.
        let cap = equilibrium(form, mask, opts)?;
        cap_simplex.record((cap.equilibrium.total_mass() - T::one()).abs());
        let potg = form.potential(&cap.equilibrium)?;
        for &i in cap.equilibrium.support().iter() {
            cap_kkt.record((potg[i] - cap.robin_constant).abs() / cap.robin_constant);
        }
        let full = RegionMask::full(space);
        let cap_full = equilibrium(form, &full, opts)?;
        cap_mono.record((cap.capacity - cap_full.capacity) / T::one().max(cap_full.capacity));

        // Contraction inequality on a nested pair inside the mask.
        let half: Vec<usize> = mask.indices()[..mask.len().div_ceil(2)].to_vec();
        let inner = RegionMask::from_indices(space, half)?;
        let c = contraction_check(form, mu, &inner, mask, opts)?;
        let norm = form.energy_norm(mu)?;
        contraction.record((c.lhs - c.rhs) / T::one().max(norm * norm));

        // Additivity (μ+ν)^A vs μ^A + ν^A is a continuum theorem that
        // discretely holds only when active sets align; the defect is
        // reported, never asserted.
        if r.domination.passes_everywhere && rn_dom {
            let sum_weights: Vec<T> = mu
                .weights()
                .iter()
                .zip(nu.weights())
                .map(|(&a, &b)| a + b)
                .collect();
            let sum = DiscreteMeasure::new(space, sum_weights)?;
            let rs = sweep(form, &sum, mask, opts)?;
            let by_parts: Vec<T> = r
                .swept
                .weights()
                .iter()
                .zip(rn.swept.weights())
                .map(|(&a, &b)| a + b)
                .collect();
            additivity.record(rel_max_diff(&by_parts, rs.swept.weights()));
        }

        // Certification accepts the truth and rejects a perturbation.
        let family = build_default_family(form);
        let tol = cast::<T>(crate::balayage::CERTIFICATION_REL_TOL);
        let good = certify(form, &r.swept, mu, mask, &family, opts, tol)?;
        if !good.is_certified() {
            certification.record(T::one());
        }
        let mut bumped = r.swept.weights().to_vec();
        let at = rng.random_range(0..n);
        bumped[at] = bumped[at] + cast::<T>(1e-4);
        let bad = certify(
            form,
            &DiscreteMeasure::new(space, bumped)?,
            mu,
            mask,
            &family,
            opts,
            tol,
        )?;
        if let CertifyVerdict::Certified { .. } = bad {
            certification.record(T::one());
        }
    }

    let t = opts.tolerance;
    Ok(vec![
        InvariantOutcome::new("kkt_certificate", kkt.worst, t, trials, 0),
        InvariantOutcome::new("oracle_agreement", oracle.worst, cast(1e-9), trials, 0),
        InvariantOutcome::new("idempotence", idem.worst, cast(1e-10), trials, 0),
        InvariantOutcome::new("positive_homogeneity", homog.worst, cast(1e-10), trials, 0),
        InvariantOutcome::new("non_expansiveness", nonexp.worst, cast(1e-10), trials, 0),
        InvariantOutcome::new("minimality", minimal.worst, cast(1e-12), trials, 0),
        InvariantOutcome::new("set_invariance", set_inv.worst, cast(1e-10), trials, 0),
        InvariantOutcome::new(
            "equality_on_mask",
            equality.worst,
            cast(1e-8),
            trials,
            equality.skipped,
        ),
        InvariantOutcome::new(
            "symmetry_relation",
            symmetry.worst,
            cast(1e-6),
            trials,
            symmetry.skipped,
        ),
        InvariantOutcome::new("capacity_simplex", cap_simplex.worst, cast(1e-12), trials, 0),
        InvariantOutcome::new("capacity_kkt", cap_kkt.worst, cast(1e-8), trials, 0),
        InvariantOutcome::new("capacity_monotonicity", cap_mono.worst, cast(1e-12), trials, 0),
        InvariantOutcome::new(
            "contraction_inequality",
            contraction.worst,
            cast(1e-10),
            trials,
            0,
        ),
        InvariantOutcome::new("certification", certification.worst, cast(0.5), trials, 0),
        InvariantOutcome::new(
            "oracle_optimality",
            oracle_optimality.worst,
            cast(1e-12),
            trials,
            0,
        ),
        // Reported only: no threshold can be promised for additivity.
        InvariantOutcome::new(
            "additivity_reported",
            additivity.worst,
            T::infinity(),
            trials,
            additivity.skipped,
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_on_small_instances() {
        let outcomes =
            run_suite::<f64>(42, 25, &InstanceParams::default(), &SolveOptions::default())
                .unwrap();
        for o in &outcomes {
            assert!(
                o.pass,
                "{} failed: worst {:e} > {:e} (skipped {})",
                o.name, o.worst, o.threshold, o.skipped
            );
        }
    }
}
