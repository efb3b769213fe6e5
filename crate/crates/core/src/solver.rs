//! Projection onto the cone `{x ≥ 0, supp x ⊆ mask}` in the metric of a
//! symmetric positive-definite matrix `K`: minimize `½xᵀKx − bᵀx`.
//!
//! Two methods: an active-set iteration in the style of Lawson–Hanson,
//! with an incrementally maintained Cholesky factor of the passive-set
//! subsystem, and a projected-gradient iteration with safeguarded
//! Barzilai–Borwein steps for large problems. Both certify the result by
//! the same KKT residuals.

use crate::linalg::{dot, SymMatrix};
use crate::scalar::{cast, Scalar};

/// Absolute floor for the residual scale, guarding `b = 0`.
pub const SCALE_FLOOR: f64 = 1e-14;

/// Solver method selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    ActiveSet,
    ProjectedGradient,
}

/// Tolerances and iteration limits shared by every cone projection.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct SolveOptions<T> {
    /// Relative KKT tolerance; residuals are measured against
    /// `max(‖b‖_∞, SCALE_FLOOR)`.
    pub tolerance: T,
    /// Iteration cap; `None` means `50·N`.
    pub max_iterations: Option<usize>,
    pub method: SolveMethod,
}

impl<T: Scalar> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions {
            tolerance: cast(1e-10),
            max_iterations: None,
            method: SolveMethod::ActiveSet,
        }
    }
}

impl<T: Scalar> SolveOptions<T> {
    pub fn with_tolerance(mut self, tolerance: T) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_method(mut self, method: SolveMethod) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> crate::error::Result<()> {
        if !(self.tolerance > T::zero()) {
            return Err(crate::error::Error::BadOptions {
                reason: format!("tolerance must be > 0, got {}", self.tolerance),
            });
        }
        if self.max_iterations == Some(0) {
            return Err(crate::error::Error::BadOptions {
                reason: "max_iterations must be >= 1".into(),
            });
        }
        Ok(())
    }

    fn iteration_cap(&self, n: usize) -> usize {
        self.max_iterations.unwrap_or(50 * n.max(1))
    }
}

/// KKT residuals of a cone projection, all in absolute units (compare
/// against `tolerance · scale`).
#[derive(Clone, Copy, Debug, Default, serde::Serialize, serde::Deserialize)]
pub struct KktResiduals<T> {
    /// `max |(K x − b)_i|` over the active set `{x_i > 0}`.
    pub stationarity: T,
    /// `max(0, −min (K x − b)_i)` over the mask.
    pub feasibility: T,
    /// `max x_i (K x − b)_i` over the mask.
    pub complementarity: T,
}

impl<T: Scalar> KktResiduals<T> {
    pub fn within(&self, tolerance: T, scale: T) -> bool {
        let lim = tolerance * scale;
        self.stationarity <= lim && self.feasibility <= lim && self.complementarity <= lim
    }

    pub fn worst(&self) -> T {
        self.stationarity
            .max(self.feasibility)
            .max(self.complementarity)
    }
}

/// Outcome of a cone projection.
#[derive(Clone, Debug)]
pub struct ConeProjection<T> {
    /// Full-length solution, exactly zero off the mask and off the
    /// active set.
    pub x: Vec<T>,
    /// Sorted indices with `x_i > 0`.
    pub active: Vec<usize>,
    pub kkt: KktResiduals<T>,
    pub iterations: usize,
    pub scale: T,
    pub converged: bool,
}

/// Projects `b`'s preimage onto the cone: minimizes `½xᵀKx − bᵀx` over
/// `{x ≥ 0, supp x ⊆ mask}`. `warm` seeds the iteration (it is clipped
/// to the mask and to nonnegative values first).
pub(crate) fn project_onto_cone<T: Scalar>(
    gram: &SymMatrix<T>,
    b: &[T],
    mask: &[usize],
    opts: &SolveOptions<T>,
    warm: Option<&[T]>,
) -> ConeProjection<T> {
    let scale = b
        .iter()
        .fold(T::zero(), |m, &v| m.max(v.abs()))
        .max(cast(SCALE_FLOOR));
    if mask.is_empty() {
        return ConeProjection {
            x: vec![T::zero(); gram.n()],
            active: Vec::new(),
            kkt: KktResiduals::default(),
            iterations: 0,
            scale,
            converged: true,
        };
    }
    match opts.method {
        SolveMethod::ActiveSet => active_set(gram, b, mask, opts, warm, scale),
        SolveMethod::ProjectedGradient => projected_gradient(gram, b, mask, opts, warm, scale),
    }
}

fn clipped_warm<T: Scalar>(n: usize, mask: &[usize], warm: Option<&[T]>) -> Vec<T> {
    let mut x = vec![T::zero(); n];
    if let Some(w) = warm {
        for &i in mask {
            if w[i] > T::zero() {
                x[i] = w[i];
            }
        }
    }
    x
}

/// KKT residuals of `x` given the gradient `g = Kx − b` sampled on the
/// mask (`g_mask[k]` corresponds to `mask[k]`).
fn kkt_from_masked_gradient<T: Scalar>(
    x: &[T],
    mask: &[usize],
    g_mask: &[T],
) -> KktResiduals<T> {
    let mut kkt: KktResiduals<T> = KktResiduals::default();
    for (k, &i) in mask.iter().enumerate() {
        let g = g_mask[k];
        if x[i] > T::zero() {
            kkt.stationarity = kkt.stationarity.max(g.abs());
        }
        kkt.feasibility = kkt.feasibility.max(-g);
        kkt.complementarity = kkt.complementarity.max(x[i] * g);
    }
    kkt.feasibility = kkt.feasibility.max(T::zero());
    kkt
}

// ---------------------------------------------------------------------------
// Active set
// ---------------------------------------------------------------------------

/// Cholesky factor of the passive-set subsystem, maintained incrementally:
/// appending a variable extends the factor by one row; removing one
/// applies a rank-one update to the trailing block.
struct UpdatableCholesky<T> {
    cap: usize,
    p: usize,
    /// Row-major `cap × cap` buffer; the leading `p × p` lower triangle
    /// is the current factor.
    l: Vec<T>,
}

impl<T: Scalar> UpdatableCholesky<T> {
    fn new(cap: usize) -> Self {
        UpdatableCholesky {
            cap,
            p: 0,
            l: vec![T::zero(); cap * cap],
        }
    }


    fn clear(&mut self) {
        self.p = 0;
    }

    /// Appends the variable whose subsystem column is `col` (`p` cross
    /// terms followed by the diagonal entry). Fails on a nonpositive pivot.
    fn push(&mut self, col: &[T]) -> bool {
        let p = self.p;
        debug_assert_eq!(col.len(), p + 1);
        // Forward-substitute the new off-diagonal row.
        let mut row = vec![T::zero(); p];
        for i in 0..p {
            let s = dot(&self.l[i * self.cap..i * self.cap + i], &row[..i]);
            row[i] = (col[i] - s) / self.l[i * self.cap + i];
        }
        let d = col[p] - dot(&row, &row);
        if !(d > T::zero()) || !d.is_finite() {
            return false;
        }
        self.l[p * self.cap..p * self.cap + p].copy_from_slice(&row);
        self.l[p * self.cap + p] = d.sqrt();
        self.p = p + 1;
        true
    }

    /// Removes the variable at position `pos`, restoring a valid factor
    /// of the reduced subsystem.
    fn remove(&mut self, pos: usize) {
        let p = self.p;
        debug_assert!(pos < p);
        // Save the deleted column below the diagonal.
        let mut v: Vec<T> = (pos + 1..p).map(|i| self.l[i * self.cap + pos]).collect();
        // Shift rows up and columns left past `pos`.
        for i in pos + 1..p {
            for j in 0..pos {
                self.l[(i - 1) * self.cap + j] = self.l[i * self.cap + j];
            }
            for j in pos + 1..=i {
                self.l[(i - 1) * self.cap + (j - 1)] = self.l[i * self.cap + j];
            }
        }
        self.p = p - 1;
        // Rank-one update of the trailing block: L̃L̃ᵀ + vvᵀ.
        let m = v.len();
        for k in 0..m {
            let base = (pos + k) * self.cap + (pos + k);
            let lkk = self.l[base];
            let r = (lkk * lkk + v[k] * v[k]).sqrt();
            let c = r / lkk;
            let s = v[k] / lkk;
            self.l[base] = r;
            for i in k + 1..m {
                let idx = (pos + i) * self.cap + (pos + k);
                self.l[idx] = (self.l[idx] + s * v[i]) / c;
                v[i] = c * v[i] - s * self.l[idx];
            }
        }
    }

    /// Solves `L Lᵀ z = rhs`.
    fn solve(&self, rhs: &[T]) -> Vec<T> {
        let p = self.p;
        debug_assert_eq!(rhs.len(), p);
        let mut z = rhs.to_vec();
        for i in 0..p {
            let s = dot(&self.l[i * self.cap..i * self.cap + i], &z[..i]);
            z[i] = (z[i] - s) / self.l[i * self.cap + i];
        }
        for i in (0..p).rev() {
            let mut s = z[i];
            for j in i + 1..p {
                s = s - self.l[j * self.cap + i] * z[j];
            }
            z[i] = s / self.l[i * self.cap + i];
        }
        z
    }
}

struct ActiveSetState<'a, T> {
    gram: &'a SymMatrix<T>,
    b: &'a [T],
    /// Insertion-ordered passive set (global indices).
    passive: Vec<usize>,
    factor: UpdatableCholesky<T>,
}

impl<'a, T: Scalar> ActiveSetState<'a, T> {
    fn push(&mut self, j: usize) -> bool {
        let col: Vec<T> = self
            .passive
            .iter()
            .map(|&i| self.gram.get(i, j))
            .chain(std::iter::once(self.gram.get(j, j)))
            .collect();
        if self.factor.push(&col) {
            self.passive.push(j);
            true
        } else {
            false
        }
    }

    fn remove(&mut self, pos: usize) {
        self.factor.remove(pos);
        self.passive.remove(pos);
    }

    /// Rebuilds the factor from scratch, dropping (and zeroing) any
    /// variable whose pivot fails numerically; always leaves the factor
    /// consistent with the passive set.
    fn refactor(&mut self, x: &mut [T]) {
        self.factor.clear();
        let order = std::mem::take(&mut self.passive);
        for &j in &order {
            let col: Vec<T> = self
                .passive
                .iter()
                .map(|&i| self.gram.get(i, j))
                .chain(std::iter::once(self.gram.get(j, j)))
                .collect();
            if self.factor.push(&col) {
                self.passive.push(j);
            } else {
                x[j] = T::zero();
            }
        }
    }

    /// Solves the subsystem `K_PP z = b_P` with one step of iterative
    /// refinement against the exact submatrix.
    fn solve_subsystem(&self) -> Vec<T> {
        let rhs: Vec<T> = self.passive.iter().map(|&i| self.b[i]).collect();
        let mut z = self.factor.solve(&rhs);
        // Refinement: r = b_P − K_PP z, z += K_PP⁻¹ r.
        let mut r = rhs;
        for (a, &i) in self.passive.iter().enumerate() {
            let mut s = T::zero();
            for (bidx, &j) in self.passive.iter().enumerate() {
                s = s + self.gram.get(i, j) * z[bidx];
            }
            r[a] = r[a] - s;
        }
        let dz = self.factor.solve(&r);
        for (zi, di) in z.iter_mut().zip(&dz) {
            *zi = *zi + *di;
        }
        z
    }
}

fn active_set<T: Scalar>(
    gram: &SymMatrix<T>,
    b: &[T],
    mask: &[usize],
    opts: &SolveOptions<T>,
    warm: Option<&[T]>,
    scale: T,
) -> ConeProjection<T> {
    let n = gram.n();
    let cap = opts.iteration_cap(n);
    let entry_tol = cast::<T>(0.5) * opts.tolerance * scale;

    let mut x = clipped_warm(n, mask, warm);
    let mut state = ActiveSetState {
        gram,
        b,
        passive: Vec::new(),
        factor: UpdatableCholesky::new(mask.len()),
    };
    // Seed the passive set from the warm start; fall back to cold start
    // if the incremental factorization rejects it.
    for &i in mask {
        if x[i] > T::zero() && !state.push(i) {
            for v in x.iter_mut() {
                *v = T::zero();
            }
            state.factor.clear();
            state.passive.clear();
            break;
        }
    }

    let mut iterations = 0usize;
    let mut blocked: Vec<usize> = Vec::new();
    let mut last_entered: Option<usize> = None;
    let mut kx = vec![T::zero(); n];

    loop {
        // Optimize over the current passive set, restoring feasibility.
        let mut inner_progress = false;
        loop {
            if state.passive.is_empty() {
                for v in x.iter_mut() {
                    *v = T::zero();
                }
                break;
            }
            iterations += 1;
            let z = state.solve_subsystem();
            if z.iter().all(|&v| v > T::zero()) {
                for v in x.iter_mut() {
                    *v = T::zero();
                }
                for (&i, &zi) in state.passive.iter().zip(&z) {
                    x[i] = zi;
                }
                inner_progress = true;
                break;
            }
            // Step toward z until the first variable hits zero.
            let mut alpha = T::one();
            let mut leaving = usize::MAX;
            for (k, (&i, &zi)) in state.passive.iter().zip(&z).enumerate() {
                if zi <= T::zero() {
                    let denom = x[i] - zi;
                    let t = if denom > T::zero() { x[i] / denom } else { T::zero() };
                    if t < alpha {
                        alpha = t;
                        leaving = k;
                    }
                }
            }
            if leaving == usize::MAX {
                // Cannot happen with some z_i <= 0; defensive break.
                break;
            }
            if alpha > T::zero() {
                inner_progress = true;
            }
            for (&i, &zi) in state.passive.iter().zip(&z) {
                x[i] = x[i] + alpha * (zi - x[i]);
            }
            x[state.passive[leaving]] = T::zero();
            // Drop every variable at (or numerically through) zero.
            let mut k = state.passive.len();
            while k > 0 {
                k -= 1;
                let i = state.passive[k];
                if x[i] <= T::zero() {
                    x[i] = T::zero();
                    state.remove(k);
                }
            }
            if iterations >= cap {
                break;
            }
        }

        // Anti-cycling: an entrant that was evicted again without the
        // iterate moving at all is barred from reselection until a later
        // entrant survives; evictions after genuine descent are the
        // normal course of the algorithm and stay eligible.
        if let Some(j) = last_entered.take() {
            if x[j] > T::zero() {
                blocked.clear();
            } else if !inner_progress {
                blocked.push(j);
            }
        }

        // Gradient on the mask: g = Kx − b via the active columns.
        for v in kx.iter_mut() {
            *v = T::zero();
        }
        let coeffs: Vec<T> = state.passive.iter().map(|&i| x[i]).collect();
        gram.accumulate_columns(&state.passive, &coeffs, &mut kx);
        let g_mask: Vec<T> = mask.iter().map(|&i| kx[i] - b[i]).collect();
        let kkt = kkt_from_masked_gradient(&x, mask, &g_mask);

        // Most negative gradient among candidates, lowest index on ties.
        let mut best = usize::MAX;
        let mut best_w = entry_tol;
        for (k, &i) in mask.iter().enumerate() {
            if x[i] > T::zero() || blocked.contains(&i) {
                continue;
            }
            let w = -g_mask[k];
            if w > best_w {
                best_w = w;
                best = i;
            }
        }

        let done = best == usize::MAX;
        if done && kkt.within(opts.tolerance, scale) {
            let active: Vec<usize> = collect_active(&x, mask);
            return ConeProjection {
                x,
                active,
                kkt,
                iterations,
                scale,
                converged: true,
            };
        }
        if done || iterations >= cap {
            let active: Vec<usize> = collect_active(&x, mask);
            return ConeProjection {
                x,
                active,
                kkt,
                iterations,
                scale,
                converged: false,
            };
        }

        if state.push(best) {
            last_entered = Some(best);
        } else {
            // Incremental factorization rejected the pivot; try a full
            // refactor, and if the index still cannot enter, bar it from
            // future selection rounds.
            state.refactor(&mut x);
            if state.push(best) {
                last_entered = Some(best);
            } else {
                blocked.push(best);
            }
        }
    }
}

fn collect_active<T: Scalar>(x: &[T], mask: &[usize]) -> Vec<usize> {
    mask.iter().copied().filter(|&i| x[i] > T::zero()).collect()
}

// ---------------------------------------------------------------------------
// Projected gradient with Barzilai–Borwein steps
// ---------------------------------------------------------------------------

fn projected_gradient<T: Scalar>(
    gram: &SymMatrix<T>,
    b: &[T],
    mask: &[usize],
    opts: &SolveOptions<T>,
    warm: Option<&[T]>,
    scale: T,
) -> ConeProjection<T> {
    let n = gram.n();
    let cap = opts.iteration_cap(n);

    let mut x = clipped_warm(n, mask, warm);
    // Conservative Lipschitz bound for the initial step.
    let lip = gram.inf_norm().max(cast(SCALE_FLOOR));
    let tau_floor = cast::<T>(1e-10) / lip;
    let tau_ceil = cast::<T>(1e10) / lip;
    let mut tau = T::one() / lip;

    let b_mask: Vec<T> = mask.iter().map(|&i| b[i]).collect();
    let mut g: Vec<T> = gram
        .matvec_rows(&x, mask)
        .iter()
        .zip(&b_mask)
        .map(|(&kx, &bi)| kx - bi)
        .collect();

    let mut iterations = 0usize;
    loop {
        let kkt = kkt_from_masked_gradient(&x, mask, &g);
        if kkt.within(opts.tolerance, scale) || iterations >= cap {
            let active = collect_active(&x, mask);
            return ConeProjection {
                converged: kkt.within(opts.tolerance, scale),
                x,
                active,
                kkt,
                iterations,
                scale,
            };
        }
        iterations += 1;

        let mut s = vec![T::zero(); mask.len()];
        for (k, &i) in mask.iter().enumerate() {
            let next = (x[i] - tau * g[k]).max(T::zero());
            s[k] = next - x[i];
            x[i] = next;
        }
        let g_new: Vec<T> = gram
            .matvec_rows(&x, mask)
            .iter()
            .zip(&b_mask)
            .map(|(&kx, &bi)| kx - bi)
            .collect();
        let mut sy = T::zero();
        let mut ss = T::zero();
        for (k, &sk) in s.iter().enumerate() {
            sy = sy + sk * (g_new[k] - g[k]);
            ss = ss + sk * sk;
        }
        tau = if sy > T::zero() {
            (ss / sy).max(tau_floor).min(tau_ceil)
        } else {
            tau_ceil
        };
        g = g_new;
    }
}
