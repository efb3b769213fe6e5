//! Exhaustion experiments and test-family convergence checks.
//!
//! Sweeping onto an increasing chain of masks produces swept measures
//! that converge (strongly, and at finite `N` therefore in max norm) to
//! the sweep onto the union, with non-increasing distances and a sharp
//! contraction inequality between consecutive stages. A finite test
//! family of signed measures stands in for the countable family of the
//! continuum theory: with a family whose potentials span the space,
//! pairing against the family is a faithful convergence and equality
//! test.

use serde::Serialize;

use crate::balayage::{sweep, sweep_with_warm};
use crate::error::{Error, Result};
use crate::geometry::{
    check_same_space, mask_from_predicate, DiscreteMeasure, DiscreteSpace, RegionMask,
    SignedMeasure,
};
use crate::kernel::EnergyForm;
use crate::scalar::{cast, Scalar};
use crate::solver::SolveOptions;

/// Finite family of signed test measures.
#[derive(Clone, Debug)]
pub struct TestFamily<T> {
    pub members: Vec<SignedMeasure<T>>,
    /// How the family was generated.
    pub provenance: String,
    /// Set when the construction guarantees the member potentials span
    /// the whole space, which skips the numerical rank check.
    pub known_spanning: bool,
}

/// The default family: one unit point mass per point of the space. The
/// member potentials are the columns of the gram matrix, which span by
/// strict positive definiteness.
pub fn build_default_family<T: Scalar>(form: &EnergyForm<T>) -> TestFamily<T> {
    let n = form.len();
    let members = (0..n)
        .map(|i| {
            let mut w = vec![T::zero(); n];
            w[i] = T::one();
            SignedMeasure::from_positive(DiscreteMeasure::from_weights_unchecked(
                form.space().clone(),
                w,
            ))
        })
        .collect();
    TestFamily {
        members,
        provenance: "unit point masses at every point; potentials are the columns of a \
                     strictly positive-definite gram matrix and span the space"
            .into(),
        known_spanning: true,
    }
}

/// Numerical spanning check: rank of the member-potential matrix by
/// Gaussian elimination with a relative pivot threshold.
pub fn family_spans<T: Scalar>(form: &EnergyForm<T>, family: &TestFamily<T>) -> Result<bool> {
    if family.members.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if family.known_spanning {
        return Ok(true);
    }
    let n = form.len();
    if family.members.len() < n {
        return Ok(false);
    }
    let mut rows: Vec<Vec<T>> = Vec::with_capacity(family.members.len());
    for m in &family.members {
        check_same_space(m.space(), form.space())?;
        rows.push(form.gram().matvec(&m.net_weights()));
    }
    let mut rank = 0usize;
    let mut col = 0usize;
    let threshold = {
        let mut worst = T::zero();
        for r in &rows {
            for &v in r {
                worst = worst.max(v.abs());
            }
        }
        worst.max(cast(1e-300)) * cast::<T>(1e-12)
    };
    while rank < rows.len() && col < n {
        let mut best = rank;
        for r in rank + 1..rows.len() {
            if rows[r][col].abs() > rows[best][col].abs() {
                best = r;
            }
        }
        if rows[best][col].abs() <= threshold {
            col += 1;
            continue;
        }
        rows.swap(rank, best);
        for r in rank + 1..rows.len() {
            let f = rows[r][col] / rows[rank][col];
            for c in col..n {
                let sub = f * rows[rank][c];
                rows[r][c] = rows[r][c] - sub;
            }
        }
        rank += 1;
        col += 1;
    }
    Ok(rank == n)
}

/// One stage of an exhaustion run.
#[derive(Clone, Debug)]
pub struct ExhaustionStage<T> {
    pub mask: RegionMask,
    pub swept: DiscreteMeasure<T>,
    /// `‖μ − μ^{A_j}‖`.
    pub distance: T,
    /// `‖μ^{A_j} − μ^{A_{j+1}}‖`; `None` on the final stage.
    pub step: Option<T>,
    pub potential: Vec<T>,
    pub active_size: usize,
    pub domination_count: usize,
    pub iterations: usize,
}

/// Full record of an exhaustion experiment.
#[derive(Clone, Debug)]
pub struct ExhaustionReport<T> {
    pub stages: Vec<ExhaustionStage<T>>,
    /// `‖μ^{A_J} − μ^A‖` against an independent cold sweep onto the
    /// final mask.
    pub final_agreement: T,
    /// Residual scale of the underlying solves.
    pub scale: T,
}

/// Sweeps `μ` onto an increasing chain of masks, warm-starting each
/// stage from the previous one, and compares the final stage against a
/// direct sweep.
pub fn exhaust<T: Scalar>(
    form: &EnergyForm<T>,
    mu: &DiscreteMeasure<T>,
    masks: &[RegionMask],
    opts: &SolveOptions<T>,
) -> Result<ExhaustionReport<T>> {
    if masks.is_empty() {
        return Err(Error::EmptySequence);
    }
    for j in 0..masks.len() - 1 {
        if !masks[j].is_subset_of(&masks[j + 1]) {
            return Err(Error::NotNested {
                stage: j,
                next: j + 1,
            });
        }
    }

    let mut stages: Vec<ExhaustionStage<T>> = Vec::with_capacity(masks.len());
    let mut previous: Option<DiscreteMeasure<T>> = None;
    let mut scale = T::zero();
    for mask in masks {
        let r = sweep_with_warm(form, mu, mask, opts, previous.as_ref())?;
        scale = r.scale;
        if let (Some(prev), Some(last)) = (previous.as_ref(), stages.last_mut()) {
            last.step = Some(form.distance(prev, &r.swept)?);
        }
        let potential = form.gram().matvec(r.swept.weights());
        previous = Some(r.swept.clone());
        stages.push(ExhaustionStage {
            mask: mask.clone(),
            swept: r.swept,
            distance: r.distance,
            step: None,
            potential,
            active_size: r.active_set.len(),
            domination_count: r.domination.count(),
            iterations: r.iterations,
        });
    }

    let direct = sweep(form, mu, masks.last().unwrap(), opts)?;
    let final_agreement = form.distance(&stages.last().unwrap().swept, &direct.swept)?;
    Ok(ExhaustionReport {
        stages,
        final_agreement,
        scale,
    })
}

/// Both sides of the nested-projection contraction inequality
/// `‖μ^{A_j} − μ^{A_p}‖² ≤ ‖μ − μ^{A_j}‖² − ‖μ − μ^{A_p}‖²`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ContractionCheck<T> {
    pub lhs: T,
    pub rhs: T,
    pub holds: bool,
}

/// Evaluates the contraction inequality for `A_j ⊆ A_p`, with slack
/// `1e−10 · max(1, ‖μ‖²)` for arithmetic.
pub fn contraction_check<T: Scalar>(
    form: &EnergyForm<T>,
    mu: &DiscreteMeasure<T>,
    inner_mask: &RegionMask,
    outer_mask: &RegionMask,
    opts: &SolveOptions<T>,
) -> Result<ContractionCheck<T>> {
    if !inner_mask.is_subset_of(outer_mask) {
        return Err(Error::NotNested { stage: 0, next: 1 });
    }
    let a = sweep(form, mu, inner_mask, opts)?;
    let b = sweep(form, mu, outer_mask, opts)?;
    let lhs = {
        let d = form.distance(&a.swept, &b.swept)?;
        d * d
    };
    let rhs = a.distance * a.distance - b.distance * b.distance;
    let norm = form.energy_norm(mu)?;
    let slack = cast::<T>(1e-10) * T::one().max(norm * norm);
    Ok(ContractionCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + slack,
    })
}

/// Per-member outcome of a family check.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MemberResidual<T> {
    pub member: usize,
    pub residual: T,
    pub pass: bool,
}

/// Outcome of the vague-convergence check of a sequence against a
/// declared limit.
#[derive(Clone, Debug)]
pub struct VagueConvergenceReport<T> {
    pub per_member: Vec<MemberResidual<T>>,
    /// All family pairings converged within tolerance.
    pub family_pass: bool,
    /// Max-norm distance of the last element from the limit.
    pub direct_tail: T,
    /// Direct weight-vector view at the same tolerance.
    pub direct_pass: bool,
    /// The two views agree; with a spanning family they must.
    pub views_agree: bool,
    /// Set when the family potentials provably fail to span.
    pub span_warning: bool,
}

/// Checks `∫κλ dν_k → ∫κλ dν_0` for every family member at the tail of
/// the sequence, and cross-checks against direct max-norm convergence
/// of the weight vectors (the two are equivalent at finite `N` when the
/// family spans).
pub fn vague_convergence_check<T: Scalar>(
    form: &EnergyForm<T>,
    family: &TestFamily<T>,
    sequence: &[DiscreteMeasure<T>],
    limit: &DiscreteMeasure<T>,
    tolerance: T,
) -> Result<VagueConvergenceReport<T>> {
    if family.members.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if sequence.is_empty() {
        return Err(Error::EmptySequence);
    }
    check_same_space(limit.space(), form.space())?;
    for m in sequence {
        check_same_space(m.space(), form.space())?;
    }

    let last = sequence.last().unwrap();
    let mut per_member = Vec::with_capacity(family.members.len());
    let mut family_pass = true;
    for (idx, lambda) in family.members.iter().enumerate() {
        check_same_space(lambda.space(), form.space())?;
        let net = lambda.net_weights();
        let tail = form.pairing(&net, last.weights())?;
        let lim = form.pairing(&net, limit.weights())?;
        let residual = (tail - lim).abs();
        let pass = residual <= tolerance;
        family_pass &= pass;
        per_member.push(MemberResidual {
            member: idx,
            residual,
            pass,
        });
    }

    let direct_tail = last
        .weights()
        .iter()
        .zip(limit.weights())
        .map(|(&a, &b)| (a - b).abs())
        .fold(T::zero(), T::max);
    let direct_pass = direct_tail <= tolerance;
    let span_warning = !family_spans(form, family)?;

    Ok(VagueConvergenceReport {
        per_member,
        family_pass,
        direct_tail,
        direct_pass,
        views_agree: family_pass == direct_pass,
        span_warning,
    })
}

/// Outcome of the family equality test of two measures.
#[derive(Clone, Debug)]
pub struct EqualityReport<T> {
    pub per_member: Vec<MemberResidual<T>>,
    pub pass: bool,
    /// `‖μ − ν‖_∞` of the weight vectors.
    pub max_norm_diff: T,
    /// Conditioning amplification `cond_∞(K)`: a family pass at
    /// tolerance `τ` bounds the weight difference by `τ·cond_∞(K)`
    /// when the family spans.
    pub amplification: T,
    pub span_warning: bool,
}

/// Tests `∫κλ dμ = ∫κλ dν` for every member; with a spanning family a
/// pass identifies the measures up to conditioning amplification.
pub fn measure_equality_check<T: Scalar>(
    form: &EnergyForm<T>,
    family: &TestFamily<T>,
    mu: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
    tolerance: T,
) -> Result<EqualityReport<T>> {
    if family.members.is_empty() {
        return Err(Error::EmptyFamily);
    }
    check_same_space(mu.space(), form.space())?;
    check_same_space(nu.space(), form.space())?;

    let mut per_member = Vec::with_capacity(family.members.len());
    let mut pass = true;
    for (idx, lambda) in family.members.iter().enumerate() {
        check_same_space(lambda.space(), form.space())?;
        let net = lambda.net_weights();
        let a = form.pairing(&net, mu.weights())?;
        let b = form.pairing(&net, nu.weights())?;
        let residual = (a - b).abs();
        let ok = residual <= tolerance;
        pass &= ok;
        per_member.push(MemberResidual {
            member: idx,
            residual,
            pass: ok,
        });
    }
    let max_norm_diff = mu
        .weights()
        .iter()
        .zip(nu.weights())
        .map(|(&a, &b)| (a - b).abs())
        .fold(T::zero(), T::max);
    let amplification = form.cond_inf()?;
    let span_warning = !family_spans(form, family)?;
    Ok(EqualityReport {
        per_member,
        pass,
        max_norm_diff,
        amplification,
        span_warning,
    })
}

/// Default exhaustion chain: intersects `A` with balls of growing radius
/// around the centroid of the space. The last stage always equals `A`;
/// consecutive duplicate stages are merged.
pub fn exhaustion_masks<T: Scalar>(
    space: &DiscreteSpace<T>,
    mask: &RegionMask,
    stages: usize,
) -> Result<Vec<RegionMask>> {
    check_same_space(mask.space(), space.id())?;
    let stages = stages.max(1);
    let center = space.centroid();
    let mut max_d2 = T::zero();
    for i in 0..space.len() {
        let mut d2 = T::zero();
        for (axis, &c) in center.iter().enumerate() {
            let d = space.coord(axis, i) - c;
            d2 = d2 + d * d;
        }
        if d2 > max_d2 {
            max_d2 = d2;
        }
    }
    let rmax = max_d2.sqrt();
    let mut out: Vec<RegionMask> = Vec::with_capacity(stages);
    for j in 0..stages {
        let frac = cast::<T>((j + 1) as f64) / cast::<T>(stages as f64);
        let r = rmax * frac;
        let ball = mask_from_predicate(space, |p| {
            let mut d2 = T::zero();
            for (axis, &c) in center.iter().enumerate() {
                let d = p[axis] - c;
                d2 = d2 + d * d;
            }
            d2.sqrt() <= r
        });
        let stage = if j + 1 == stages {
            mask.clone()
        } else {
            mask.intersect(&ball)?
        };
        if out.last() != Some(&stage) {
            out.push(stage);
        }
    }
    Ok(out)
}
