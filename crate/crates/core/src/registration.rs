//! Iterative prune-and-realign registration.
//!
//! Each iteration aligns on the current pair table, removes every pair whose
//! residual `Δ_ik` exceeds the threshold, reweights survivors to
//! `1 − Δ_ik / threshold` and renormalizes. A pass that removes nothing
//! lowers the threshold by `ε`. The loop stops once the table holds no more
//! than `min(N_U, N_V)` pairs, or when the threshold schedule runs out.

use crate::align::{solve, AlignOptions, AlignmentSolution, Mode, Transform};
use crate::error::{Error, Result};
use crate::scalar::{distance, Real};
use crate::stats::{normalize_weights, PairEntry, PairTable, PointSet};
use crate::symmat::DEFAULT_RANK_TOL;

/// Ratios `T / ε` within this relative distance of an integer count as that
/// integer when sizing the threshold schedule.
const SCHEDULE_SNAP: f64 = 1e-9;

/// Default schedule resolution: `ε = T / DEFAULT_THRESHOLD_STEPS`.
pub const DEFAULT_THRESHOLD_STEPS: f64 = 40.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationConfig<T> {
    /// Initial (largest) residual threshold, in coordinate units.
    pub threshold: T,
    /// Threshold decrement applied after a pass that prunes nothing.
    pub epsilon: T,
    pub mode: Mode,
    pub allow_reflection: bool,
    pub max_iterations: usize,
    pub rank_tol: T,
}

impl<T: Real> RegistrationConfig<T> {
    /// Config with the default iteration cap of `10 · ⌈T/ε⌉`.
    pub fn new(threshold: T, epsilon: T, mode: Mode) -> Result<Self> {
        let mut config = Self {
            threshold,
            epsilon,
            mode,
            allow_reflection: false,
            max_iterations: 1,
            rank_tol: T::lit(DEFAULT_RANK_TOL),
        };
        config.check_schedule()?;
        config.max_iterations = 10 * config.threshold_steps();
        Ok(config)
    }

    /// Defaults scaled to the template: `T = diam(V) / 2`, `ε = T / 40`.
    pub fn data_scaled(template: &PointSet<T>, mode: Mode) -> Result<Self> {
        let threshold = template.diameter() / T::lit(2.0);
        if !(threshold > T::zero()) {
            return Err(Error::InvalidConfig("template points all coincide; pass an explicit threshold".into()));
        }
        Self::new(threshold, threshold / T::lit(DEFAULT_THRESHOLD_STEPS), mode)
    }

    fn check_schedule(&self) -> Result<()> {
        if !(self.threshold.is_finite() && self.threshold > T::zero()) {
            return Err(Error::InvalidConfig(format!("threshold must be positive, got {}", self.threshold)));
        }
        if !(self.epsilon > T::zero() && self.epsilon < self.threshold) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must lie in (0, {}), got {}",
                self.threshold, self.epsilon
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.check_schedule()?;
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if !(self.rank_tol >= T::zero() && self.rank_tol < T::one()) {
            return Err(Error::InvalidConfig(format!("rank_tol must lie in [0, 1), got {}", self.rank_tol)));
        }
        Ok(())
    }

    /// `⌈T/ε⌉`: how many distinct positive thresholds the schedule visits.
    pub fn threshold_steps(&self) -> usize {
        let ratio = (self.threshold / self.epsilon).as_f64();
        ((ratio - SCHEDULE_SNAP * ratio.max(1.0)).ceil() as usize).max(1)
    }

    pub fn align_options(&self) -> AlignOptions<T> {
        AlignOptions { allow_reflection: self.allow_reflection, rank_tol: self.rank_tol }
    }
}

#[derive(Debug, Clone)]
pub struct IterationRecord<T> {
    pub iteration: usize,
    pub threshold_used: T,
    pub pairs_before: usize,
    pub pairs_after: usize,
    pub transform: Transform<T>,
    pub e_min: T,
    pub pruned: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    PairCountReached,
    ThresholdExhausted,
    IterationCap,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::PairCountReached => "pair_count_reached",
            Termination::ThresholdExhausted => "threshold_exhausted",
            Termination::IterationCap => "iteration_cap",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RegistrationResult<T> {
    /// Surviving pairs, normalized. Not necessarily one-to-one.
    pub pairs: PairTable<T>,
    pub transform: Transform<T>,
    /// `e_min` of the final alignment.
    pub score: T,
    pub converged: bool,
    pub iterations: Vec<IterationRecord<T>>,
    pub termination: Termination,
    /// Total pair evaluations across all iterations.
    pub pair_visits: usize,
    /// Whether `final_alignment` is a closing fit on the surviving pairs
    /// rather than the last loop iteration.
    pub refit: bool,
    pub final_alignment: AlignmentSolution<T>,
}

/// `Δ = ‖s L u + t − v‖`.
pub fn residual<T: Real>(u: &[T], v: &[T], transform: &Transform<T>) -> T {
    distance(&transform.apply(u), v)
}

#[derive(Debug, Clone)]
pub struct Pruned<T> {
    /// Survivors with weights `1 − Δ/threshold`, renormalized.
    pub table: PairTable<T>,
    pub removed: Vec<(usize, usize)>,
}

/// Drops pairs with `Δ > threshold` (strictly) and reweights the rest.
pub fn prune_and_reweight<T: Real>(
    u: &PointSet<T>,
    v: &PointSet<T>,
    table: &PairTable<T>,
    transform: &Transform<T>,
    threshold: T,
) -> Result<Pruned<T>> {
    if !(threshold > T::zero()) {
        return Err(Error::InvalidConfig(format!("threshold must be positive, got {threshold}")));
    }
    table.check_indices(u.len(), v.len())?;
    let mut kept = Vec::with_capacity(table.len());
    let mut removed = Vec::new();
    for e in table.entries() {
        let delta = residual(u.point(e.i), v.point(e.k), transform);
        if delta > threshold {
            removed.push((e.i, e.k));
        } else {
            kept.push(PairEntry { weight: T::one() - delta / threshold, ..*e });
        }
    }
    if kept.is_empty() {
        return Err(Error::AllPairsPruned);
    }
    let table = normalize_weights(&PairTable::new(kept)?)?;
    Ok(Pruned { table, removed })
}

/// Runs the prune-and-realign loop from `initial`.
///
/// Fails only when the configuration is invalid or the first alignment
/// cannot be computed (e.g. separable initial weights). Later failures end
/// the run with [`Termination::ThresholdExhausted`] and the last good
/// alignment.
pub fn register<T: Real>(
    u: &PointSet<T>,
    v: &PointSet<T>,
    initial: &PairTable<T>,
    config: &RegistrationConfig<T>,
) -> Result<RegistrationResult<T>> {
    config.validate()?;
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), found: v.dim() });
    }
    initial.check_indices(u.len(), v.len())?;
    let capacity = u.len().min(v.len());
    let steps = config.threshold_steps();
    let options = config.align_options();

    let mut table = normalize_weights(initial)?;
    let mut decrements = 0usize;
    let mut records: Vec<IterationRecord<T>> = Vec::new();
    let mut last: Option<AlignmentSolution<T>> = None;
    let mut pair_visits = 0usize;

    let termination = loop {
        if last.is_some() && table.len() <= capacity {
            break Termination::PairCountReached;
        }
        if decrements >= steps {
            break Termination::ThresholdExhausted;
        }
        if records.len() >= config.max_iterations {
            break Termination::IterationCap;
        }
        let threshold = config.threshold - T::from_usize(decrements).expect("count fits") * config.epsilon;

        let solution = match solve(u, v, &table, config.mode, &options) {
            Ok(s) => s,
            Err(e) if last.is_some() && e.is_ill_posed() => break Termination::ThresholdExhausted,
            Err(e) => return Err(e),
        };
        pair_visits += table.len();
        let mut record = IterationRecord {
            iteration: records.len(),
            threshold_used: threshold,
            pairs_before: table.len(),
            pairs_after: table.len(),
            transform: solution.transform.clone(),
            e_min: solution.e_min,
            pruned: Vec::new(),
        };

        // a table that already fits gets one alignment and no pruning
        if table.len() <= capacity {
            records.push(record);
            last = Some(solution);
            break Termination::PairCountReached;
        }

        match prune_and_reweight(u, v, &table, &solution.transform, threshold) {
            Ok(pruned) => {
                if pruned.removed.is_empty() {
                    decrements += 1;
                }
                record.pairs_after = pruned.table.len();
                record.pruned = pruned.removed;
                table = pruned.table;
                records.push(record);
                last = Some(solution);
            }
            Err(Error::AllPairsPruned | Error::ZeroWeightMass) => {
                records.push(record);
                last = Some(solution);
                break Termination::ThresholdExhausted;
            }
            Err(e) => return Err(e),
        }
    };

    let mut final_alignment = last.expect("loop runs at least one alignment");
    // The last prune changed the table after it was aligned: fit the
    // surviving pairs themselves. Keep the loop's fit if they are degenerate.
    let mut refit = false;
    if records.last().is_some_and(|r| !r.pruned.is_empty()) {
        if let Ok(solution) = solve(u, v, &table, config.mode, &options) {
            pair_visits += table.len();
            final_alignment = solution;
            refit = true;
        }
    }
    Ok(RegistrationResult {
        pairs: table,
        transform: final_alignment.transform.clone(),
        score: final_alignment.e_min,
        converged: termination == Termination::PairCountReached,
        iterations: records,
        termination,
        pair_visits,
        refit,
        final_alignment,
    })
}

/// `e_min` of the alignment on the output pairs; smaller means a stronger match.
pub fn similarity_score<T: Real>(result: &RegistrationResult<T>) -> Result<T> {
    if result.iterations.is_empty() {
        return Err(Error::NoAlignment);
    }
    Ok(result.score)
}
