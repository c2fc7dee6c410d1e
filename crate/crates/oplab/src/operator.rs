//! Fixed-point update maps and the iteration drivers that run them.
//!
//! An estimation procedure is modeled as a map θ ↦ O(θ); running it from an
//! initial point produces an [`IterationTrace`] whose per-iterate errors are
//! measured against a designated target (the truth for population maps, or
//! any reference point of interest). Everything downstream — rate
//! classification, sweep experiments, stability probes — consumes traces or
//! applies operators pointwise.

use crate::error::{Error, Result};
use crate::point::ParamPoint;

/// Factor in the runaway-iterate guard: a trace is cut off once
/// ‖θᵗ‖ > 10⁶·(1 + ‖θ⁰‖). Unstable maps can genuinely escape; terminating
/// the trace keeps escapes observable without overflowing downstream math.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// A fixed-point update map θ ↦ O(θ).
///
/// Implementations must be pure: two calls with the same point return the
/// same value, and concurrent evaluation is safe.
pub trait Operator {
    /// Parameter dimension the map operates on.
    fn dim(&self) -> usize;

    /// One update step.
    fn apply(&self, theta: &ParamPoint) -> Result<ParamPoint>;
}

impl<T: Operator + ?Sized> Operator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, theta: &ParamPoint) -> Result<ParamPoint> {
        (**self).apply(theta)
    }
}

/// Why an iteration run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminationReason {
    /// Ran the full iteration budget.
    MaxIters,
    /// `iterate_until` reached its error threshold.
    ThresholdHit,
    /// The divergence guard fired; the offending iterate is the last entry.
    Diverged,
}

/// One recorded iterate.
#[derive(Clone, Debug)]
pub struct TraceEntry {
    /// Iteration index, starting at 0 for the initial point.
    pub t: usize,
    pub point: ParamPoint,
    /// Euclidean distance of `point` to the trace target.
    pub error: f64,
}

/// The full record of an iteration run: iterates, errors against a fixed
/// target, and the reason the run stopped. Immutable once built.
#[derive(Clone, Debug)]
pub struct IterationTrace {
    target: ParamPoint,
    entries: Vec<TraceEntry>,
    termination: TerminationReason,
}

impl IterationTrace {
    fn new(target: ParamPoint, entries: Vec<TraceEntry>, termination: TerminationReason) -> Self {
        debug_assert!(!entries.is_empty());
        IterationTrace { target, entries, termination }
    }

    /// Builds a trace from raw iterates (index order), computing errors
    /// against `target`. Used when reconstructing runs from serialized data.
    pub fn from_points(
        target: ParamPoint,
        points: Vec<ParamPoint>,
        termination: TerminationReason,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::validation("a trace needs at least one point"));
        }
        if let Some(p) = points.iter().find(|p| p.dim() != target.dim()) {
            return Err(Error::validation(format!(
                "trace point dimension {} does not match target dimension {}",
                p.dim(),
                target.dim()
            )));
        }
        let entries = points
            .into_iter()
            .enumerate()
            .map(|(t, point)| entry(t, point, &target))
            .collect();
        Ok(IterationTrace::new(target, entries, termination))
    }

    pub fn target(&self) -> &ParamPoint {
        &self.target
    }

    pub fn initial(&self) -> &ParamPoint {
        &self.entries[0].point
    }

    pub fn entries(&self) -> &[TraceEntry] {
        &self.entries
    }

    /// Number of recorded iterates (including the initial point).
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn termination(&self) -> TerminationReason {
        self.termination
    }

    pub fn final_entry(&self) -> &TraceEntry {
        self.entries.last().expect("traces are never empty")
    }

    /// Errors in iteration order, convenient for fitting.
    pub fn errors(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.error).collect()
    }
}

fn guard_limit(theta0: &ParamPoint) -> f64 {
    DIVERGENCE_FACTOR * (1.0 + theta0.norm())
}

fn entry(t: usize, point: ParamPoint, target: &ParamPoint) -> TraceEntry {
    let error = point.dist(target);
    TraceEntry { t, point, error }
}

fn step(op: &impl Operator, current: &ParamPoint, t: usize) -> Result<ParamPoint> {
    match op.apply(current) {
        Ok(next) => Ok(next),
        Err(Error::NonFinite { context, .. }) => Err(Error::NonFinite {
            context,
            iteration: Some(t),
        }),
        Err(e) => Err(e),
    }
}

/// Runs `op` for `T` steps from `theta0`, recording every iterate and its
/// distance to `target`.
///
/// The trace has T+1 entries (initial point included) unless the divergence
/// guard fires, in which case it is truncated at the runaway iterate and
/// marked [`TerminationReason::Diverged`]. Evaluation failures abort with an
/// error naming the iteration.
pub fn iterate(
    op: &impl Operator,
    theta0: &ParamPoint,
    iters: usize,
    target: &ParamPoint,
) -> Result<IterationTrace> {
    if iters < 1 {
        return Err(Error::validation("iteration count must be >= 1"));
    }
    check_dims(op, theta0, target)?;

    let limit = guard_limit(theta0);
    let mut entries = Vec::with_capacity(iters + 1);
    entries.push(entry(0, theta0.clone(), target));
    let mut current = theta0.clone();
    for t in 1..=iters {
        current = step(op, &current, t)?;
        entries.push(entry(t, current.clone(), target));
        if current.norm() > limit {
            return Ok(IterationTrace::new(target.clone(), entries, TerminationReason::Diverged));
        }
    }
    Ok(IterationTrace::new(target.clone(), entries, TerminationReason::MaxIters))
}

/// Runs `op` until the error to `target` drops to `threshold` or below,
/// up to `max_iters` steps.
///
/// Returns the trace and the hit iteration: the smallest t with
/// ‖θᵗ − target‖ ≤ threshold, or `None` if the threshold was never reached.
/// The driver stops at the hit, so a hit trace ends at the first iterate
/// inside the threshold; use [`iterate`] to observe behavior past it.
pub fn iterate_until(
    op: &impl Operator,
    theta0: &ParamPoint,
    target: &ParamPoint,
    threshold: f64,
    max_iters: usize,
) -> Result<(IterationTrace, Option<usize>)> {
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(Error::validation("threshold must be a positive real"));
    }
    check_dims(op, theta0, target)?;

    let limit = guard_limit(theta0);
    let mut entries = Vec::new();
    entries.push(entry(0, theta0.clone(), target));
    if entries[0].error <= threshold {
        return Ok((
            IterationTrace::new(target.clone(), entries, TerminationReason::ThresholdHit),
            Some(0),
        ));
    }
    let mut current = theta0.clone();
    for t in 1..=max_iters {
        current = step(op, &current, t)?;
        let e = entry(t, current.clone(), target);
        let hit = e.error <= threshold;
        entries.push(e);
        if hit {
            return Ok((
                IterationTrace::new(target.clone(), entries, TerminationReason::ThresholdHit),
                Some(t),
            ));
        }
        if current.norm() > limit {
            return Ok((
                IterationTrace::new(target.clone(), entries, TerminationReason::Diverged),
                None,
            ));
        }
    }
    Ok((
        IterationTrace::new(target.clone(), entries, TerminationReason::MaxIters),
        None,
    ))
}

/// The best iterate of a trace measured against `target` (not necessarily
/// the trace's own target): returns (k, min error) with ties going to the
/// smallest k.
pub fn best_iterate_error(trace: &IterationTrace, target: &ParamPoint) -> (usize, f64) {
    assert!(!trace.is_empty(), "traces are never empty");
    let mut best = (0usize, f64::INFINITY);
    for e in trace.entries() {
        let d = e.point.dist(target);
        if d < best.1 {
            best = (e.t, d);
        }
    }
    best
}

fn check_dims(op: &impl Operator, theta0: &ParamPoint, target: &ParamPoint) -> Result<()> {
    if theta0.dim() != op.dim() || target.dim() != op.dim() {
        return Err(Error::validation(format!(
            "dimension mismatch: operator works in R^{}, got initial point in R^{} and target in R^{}",
            op.dim(),
            theta0.dim(),
            target.dim()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// θ ↦ κθ, the simplest contraction.
    struct Scale(f64);

    impl Operator for Scale {
        fn dim(&self) -> usize {
            1
        }
        fn apply(&self, theta: &ParamPoint) -> Result<ParamPoint> {
            ParamPoint::scalar(self.0 * theta.as_scalar())
        }
    }

    struct Doubler;

    impl Operator for Doubler {
        fn dim(&self) -> usize {
            1
        }
        fn apply(&self, theta: &ParamPoint) -> Result<ParamPoint> {
            ParamPoint::scalar(2.0 * theta.as_scalar())
        }
    }

    fn origin() -> ParamPoint {
        ParamPoint::zero(1)
    }

    #[test]
    fn iterate_records_t_plus_one_entries() {
        let trace = iterate(&Scale(0.5), &ParamPoint::scalar(1.0).unwrap(), 3, &origin()).unwrap();
        assert_eq!(trace.len(), 4);
        assert_eq!(trace.termination(), TerminationReason::MaxIters);
        let errors = trace.errors();
        assert_eq!(errors, vec![1.0, 0.5, 0.25, 0.125]);
        let ts: Vec<usize> = trace.entries().iter().map(|e| e.t).collect();
        assert_eq!(ts, vec![0, 1, 2, 3]);
    }

    #[test]
    fn errors_are_recomputable_from_points() {
        let target = ParamPoint::scalar(0.25).unwrap();
        let trace = iterate(&Scale(0.5), &ParamPoint::scalar(1.0).unwrap(), 4, &target).unwrap();
        for e in trace.entries() {
            assert_eq!(e.error, e.point.dist(trace.target()));
        }
    }

    #[test]
    fn divergence_guard_truncates() {
        let trace = iterate(&Doubler, &ParamPoint::scalar(1.0).unwrap(), 500, &origin()).unwrap();
        assert_eq!(trace.termination(), TerminationReason::Diverged);
        assert!(trace.len() < 501);
        assert!(trace.final_entry().point.norm() > 1e6 * 2.0);
    }

    #[test]
    fn iterate_until_stops_at_first_hit() {
        let (trace, hit) = iterate_until(
            &Scale(0.5),
            &ParamPoint::scalar(1.0).unwrap(),
            &origin(),
            0.3,
            100,
        )
        .unwrap();
        assert_eq!(hit, Some(2));
        assert_eq!(trace.len(), 3);
        assert_eq!(trace.termination(), TerminationReason::ThresholdHit);
    }

    #[test]
    fn iterate_until_at_target_hits_immediately() {
        let p = ParamPoint::scalar(0.0).unwrap();
        let (trace, hit) = iterate_until(&Scale(0.5), &p, &origin(), 1e-9, 10).unwrap();
        assert_eq!(hit, Some(0));
        assert_eq!(trace.len(), 1);
    }

    #[test]
    fn iterate_until_reports_miss() {
        let (trace, hit) = iterate_until(
            &Scale(0.99),
            &ParamPoint::scalar(1.0).unwrap(),
            &origin(),
            1e-12,
            5,
        )
        .unwrap();
        assert_eq!(hit, None);
        assert_eq!(trace.termination(), TerminationReason::MaxIters);
        assert_eq!(trace.len(), 6);
    }

    #[test]
    fn best_iterate_prefers_smallest_index_on_tie() {
        let target = origin();
        // Build a trace by hand through the public driver: scale by -1 makes
        // |θ| constant, so every entry ties at error 1 and k must be 0.
        let trace = iterate(&Scale(-1.0), &ParamPoint::scalar(1.0).unwrap(), 4, &target).unwrap();
        let (k, err) = best_iterate_error(&trace, &target);
        assert_eq!((k, err), (0, 1.0));
    }

    #[test]
    fn best_iterate_finds_interior_minimum() {
        // 1.0 -> 0.1 -> 0.5 is not monotone; the driver cannot produce it
        // from a fixed map, so check via a target shift instead: measure the
        // Scale(0.5) trace against target 0.25, minimum at t=2 exactly.
        let target = ParamPoint::scalar(0.25).unwrap();
        let trace = iterate(&Scale(0.5), &ParamPoint::scalar(1.0).unwrap(), 4, &origin()).unwrap();
        let (k, err) = best_iterate_error(&trace, &target);
        assert_eq!(k, 2);
        assert!(err.abs() < 1e-15);
    }

    #[test]
    fn zero_iterations_rejected() {
        let r = iterate(&Scale(0.5), &ParamPoint::scalar(1.0).unwrap(), 0, &origin());
        assert!(r.is_err());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let r = iterate(&Scale(0.5), &ParamPoint::zero(2), 3, &origin());
        assert!(matches!(r, Err(Error::Validation(_))));
    }
}
