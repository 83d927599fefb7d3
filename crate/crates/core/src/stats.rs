//! Seeded Monte Carlo trials and their comparison with closed forms.
//!
//! Trial `i` of a run with master seed `s` draws from ChaCha8 seeded with
//! `s` on stream `i` (see [`trial_draws`]). Trials are independent of how
//! they are scheduled, so fresh-state runs are spread over the rayon pool
//! and still give the same counts on any number of threads. Sweep point `j`
//! runs with master seed [`point_seed`]`(s, j)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::{ObservationProcess, ObservationRecord, RngDraws, ScenarioState};

/// Confidence level of the intervals reported by [`run_trials`].
pub const REPORT_CONFIDENCE: f64 = 0.99;

/// Draw stream of trial `trial` under master seed `seed`.
pub fn trial_draws(seed: u64, trial: u64) -> RngDraws<ChaCha8Rng> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    RngDraws(rng)
}

/// SplitMix64 finalizer applied to `seed + index * golden gamma`.
pub fn point_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Two-sided standard normal quantile for `confidence`.
pub fn z_for_confidence(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Domain(format!(
            "confidence {confidence} outside (0, 1)"
        )));
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(0.5 + confidence / 2.0))
}

/// Wilson score interval for `yes` successes out of `n`.
pub fn wilson_interval(yes: u64, n: u64, confidence: f64) -> Result<(f64, f64)> {
    if n == 0 || yes > n {
        return Err(Error::Domain(format!(
            "need 0 <= yes <= n and n >= 1, got {yes}/{n}"
        )));
    }
    let z = z_for_confidence(confidence)?;
    let nf = n as f64;
    let p = yes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if yes == 0 {
        0.0
    } else {
        (center - half).clamp(0.0, p)
    };
    let hi = if yes == n {
        1.0
    } else {
        (center + half).clamp(p, 1.0)
    };
    Ok((lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResetPolicy {
    /// Every trial starts from the initial state.
    FreshState,
    /// Each trial starts from the previous trial's post-state.
    EvolvingState,
}

/// How far an estimate sits from its closed form, in standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sanity {
    /// Within 4 standard errors.
    Pass,
    /// Between 4 and 5 standard errors.
    Flagged,
    Fail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub process_id: String,
    /// Initial state.
    pub state: String,
    pub trials: u64,
    pub yes: u64,
    pub p_hat: f64,
    pub wilson: (f64, f64),
    /// Closed-form yes-probability at the initial state, when known.
    pub analytic: Option<f64>,
    pub z_score: Option<f64>,
    pub seed: u64,
    /// Last post-state of an evolving-state run.
    pub final_state: Option<ScenarioState>,
}

impl TrialReport {
    fn new(
        process: &ObservationProcess,
        state: &ScenarioState,
        trials: u64,
        yes: u64,
        seed: u64,
        final_state: Option<ScenarioState>,
    ) -> Result<Self> {
        let p_hat = yes as f64 / trials as f64;
        let analytic = process.yes_probability(state).ok();
        let z_score = analytic
            .filter(|p| *p > 0.0 && *p < 1.0)
            .map(|p| (p_hat - p) / (p * (1.0 - p) / trials as f64).sqrt());
        Ok(Self {
            process_id: process.id().to_owned(),
            state: state.to_string(),
            trials,
            yes,
            p_hat,
            wilson: wilson_interval(yes, trials, REPORT_CONFIDENCE)?,
            analytic,
            z_score,
            seed,
            final_state,
        })
    }

    /// Standard error of the estimate under the closed form.
    pub fn standard_error(&self) -> Option<f64> {
        self.analytic
            .map(|p| (p * (1.0 - p) / self.trials as f64).sqrt())
    }

    pub fn sanity(&self) -> Option<Sanity> {
        let p = self.analytic?;
        let dev = (self.p_hat - p).abs();
        let se = self.standard_error()?;
        Some(if dev <= 4.0 * se {
            Sanity::Pass
        } else if dev <= 5.0 * se {
            Sanity::Flagged
        } else {
            Sanity::Fail
        })
    }

    /// True when the closed form is 0 or 1.
    pub fn is_degenerate(&self) -> bool {
        matches!(self.analytic, Some(p) if p == 0.0 || p == 1.0)
    }
}

fn check_trials(process: &ObservationProcess, state: &ScenarioState, trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::Domain("at least one trial is required".into()));
    }
    if state.kind() != process.scenario() {
        return Err(Error::ScenarioMismatch {
            process: process.id().to_owned(),
            expected: process.scenario(),
            found: state.kind(),
        });
    }
    Ok(())
}

/// Runs `trials` observations of `process` and counts the yes outcomes.
pub fn run_trials(
    process: &ObservationProcess,
    state: &ScenarioState,
    trials: u64,
    seed: u64,
    policy: ResetPolicy,
) -> Result<TrialReport> {
    check_trials(process, state, trials)?;
    match policy {
        ResetPolicy::FreshState => {
            let yes = (0..trials)
                .into_par_iter()
                .map(|i| {
                    let (o, _) = process.apply(state, &mut trial_draws(seed, i))?;
                    Ok(u64::from(o.is_yes()))
                })
                .try_reduce(|| 0, |a, b| Ok(a + b))?;
            TrialReport::new(process, state, trials, yes, seed, None)
        }
        ResetPolicy::EvolvingState => {
            let mut current = state.clone();
            let mut yes = 0;
            for i in 0..trials {
                let (o, post) = process.apply(&current, &mut trial_draws(seed, i))?;
                yes += u64::from(o.is_yes());
                current = post;
            }
            TrialReport::new(process, state, trials, yes, seed, Some(current))
        }
    }
}

/// The observation records of the run [`run_trials`] performs with the
/// same arguments, in trial order.
pub fn trial_records(
    process: &ObservationProcess,
    state: &ScenarioState,
    trials: u64,
    seed: u64,
    policy: ResetPolicy,
) -> Result<Vec<ObservationRecord>> {
    check_trials(process, state, trials)?;
    let mut records = Vec::with_capacity(trials as usize);
    let mut current = state.clone();
    for i in 0..trials {
        let (_, post, record) = process.observe(&current, &mut trial_draws(seed, i), i)?;
        records.push(record);
        if policy == ResetPolicy::EvolvingState {
            current = post;
        }
    }
    Ok(records)
}

/// Runs `f` on a dedicated rayon pool of `threads` workers.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Domain(format!("cannot build a pool of {threads} threads: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub parameter: f64,
    pub report: TrialReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// Pearson statistic over the points whose closed form is in (0, 1).
    pub chi_square: f64,
    pub dof: usize,
}

impl SweepResult {
    /// Upper-tail probability of the chi-square statistic, if any point
    /// contributed to it.
    pub fn p_value(&self) -> Option<f64> {
        chi_square_sf(self.chi_square, self.dof)
    }

    /// Points with closed form 0 or 1 whose count is not exactly 0 or N.
    pub fn degenerate_mismatches(&self) -> Vec<&SweepPoint> {
        self.points
            .iter()
            .filter(|pt| {
                let r = &pt.report;
                match r.analytic {
                    Some(0.0) => r.yes != 0,
                    Some(1.0) => r.yes != r.trials,
                    _ => false,
                }
            })
            .collect()
    }
}

/// Survival function of the chi-square distribution with `dof` degrees of
/// freedom.
pub fn chi_square_sf(statistic: f64, dof: usize) -> Option<f64> {
    if dof == 0 {
        return None;
    }
    ChiSquared::new(dof as f64).ok().map(|d| d.sf(statistic))
}

/// Binomial goodness-of-fit contribution of one point: yes and no cells
/// combined.
pub fn binomial_chi_square(yes: u64, trials: u64, p: f64) -> f64 {
    let expected = trials as f64 * p;
    let diff = yes as f64 - expected;
    diff * diff / (trials as f64 * p * (1.0 - p))
}

/// Runs `family(parameter)` for each grid value with `trials` fresh-state
/// trials per point, and tests the counts against the closed forms.
pub fn sweep<F>(grid: &[f64], family: F, trials: u64, seed: u64) -> Result<SweepResult>
where
    F: Fn(f64) -> Result<(ObservationProcess, ScenarioState)>,
{
    if grid.is_empty() {
        return Err(Error::Domain("sweep grid is empty".into()));
    }
    let mut points = Vec::with_capacity(grid.len());
    let mut chi_square = 0.0;
    let mut dof = 0;
    for (j, &parameter) in grid.iter().enumerate() {
        let (process, state) = family(parameter)?;
        let report = run_trials(
            &process,
            &state,
            trials,
            point_seed(seed, j as u64),
            ResetPolicy::FreshState,
        )?;
        if let Some(p) = report.analytic.filter(|p| *p > 0.0 && *p < 1.0) {
            chi_square += binomial_chi_square(report.yes, report.trials, p);
            dof += 1;
        }
        points.push(SweepPoint { parameter, report });
    }
    Ok(SweepResult {
        points,
        chi_square,
        dof,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exemplars::{self, ElasticBandState, Moisture, WoodState};
    use crate::machines::{self, BreakageProfile, ElasticApparatus, SpherePoint};
    use std::f64::consts::{FRAC_PI_2, PI};

    /// Wilson bounds as the roots of (p̂ - p)² = z² p (1 - p) / n, found by
    /// bisection on each side of p̂.
    fn wilson_by_bisection(yes: u64, n: u64, z: f64) -> (f64, f64) {
        let nf = n as f64;
        let ph = yes as f64 / nf;
        let g = |p: f64| (ph - p).powi(2) - z * z * p * (1.0 - p) / nf;
        let root = |mut a: f64, mut b: f64| {
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if (g(a) > 0.0) == (g(m) > 0.0) {
                    a = m;
                } else {
                    b = m;
                }
            }
            0.5 * (a + b)
        };
        let lo = if yes == 0 { 0.0 } else { root(0.0, ph) };
        let hi = if yes == n { 1.0 } else { root(1.0, ph) };
        (lo, hi)
    }

    #[test]
    fn z_values() {
        assert!((z_for_confidence(0.95).unwrap() - 1.959963984540054).abs() < 1e-9);
        assert!((z_for_confidence(0.99).unwrap() - 2.5758293035489004).abs() < 1e-9);
        assert!(z_for_confidence(1.0).is_err());
    }

    #[test]
    fn wilson_boundaries_and_errors() {
        assert_eq!(wilson_interval(0, 40, 0.99).unwrap().0, 0.0);
        assert_eq!(wilson_interval(40, 40, 0.99).unwrap().1, 1.0);
        assert!(wilson_interval(1, 0, 0.99).is_err());
        assert!(wilson_interval(5, 4, 0.99).is_err());
        assert!(wilson_interval(2, 4, 1.5).is_err());
    }

    #[test]
    fn wilson_matches_quadratic_roots() {
        let z = z_for_confidence(0.99).unwrap();
        for (yes, n) in [
            (50, 100),
            (1, 10),
            (9, 10),
            (0, 7),
            (7, 7),
            (12_345, 100_000),
        ] {
            let (lo, hi) = wilson_interval(yes, n, 0.99).unwrap();
            let (blo, bhi) = wilson_by_bisection(yes, n, z);
            assert!((lo - blo).abs() < 1e-12, "{yes}/{n}: {lo} vs {blo}");
            assert!((hi - bhi).abs() < 1e-12, "{yes}/{n}: {hi} vs {bhi}");
        }
        let (lo, hi) = wilson_interval(50, 100, 0.99).unwrap();
        assert!(lo < 0.5 && 0.5 < hi);
        assert!(((0.5 - lo) - (hi - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn chi_square_tail_reference_values() {
        assert!((chi_square_sf(3.841458820694124, 1).unwrap() - 0.05).abs() < 1e-9);
        assert!((chi_square_sf(9.21034037197618, 2).unwrap() - 0.01).abs() < 1e-9);
        assert_eq!(chi_square_sf(1.0, 0), None);
    }

    #[test]
    fn deterministic_process_counts_exactly() {
        let r = run_trials(
            &exemplars::floatability(),
            &WoodState::intact(Moisture::Dry).into(),
            100,
            1,
            ResetPolicy::FreshState,
        )
        .unwrap();
        assert_eq!(r.yes, 100);
        assert_eq!(r.wilson.1, 1.0);
        assert!(r.is_degenerate());
        assert_eq!(r.z_score, None);
    }

    #[test]
    fn evolving_left_handedness_adds_one_fragment_per_trial() {
        let r = run_trials(
            &exemplars::left_handedness(),
            &ElasticBandState::unbroken(1.0).unwrap().into(),
            3,
            5,
            ResetPolicy::EvolvingState,
        )
        .unwrap();
        let Some(ScenarioState::ElasticBand(band)) = r.final_state else {
            panic!("no final elastic state");
        };
        assert_eq!(band.fragments().len(), 4);
    }

    #[test]
    fn quantum_machine_at_right_angle() {
        let qm =
            machines::quantum_machine(ElasticApparatus::along_z(1.0, BreakageProfile::Uniform));
        let n = 100_000;
        let r = run_trials(
            &qm,
            &SpherePoint::from_polar(FRAC_PI_2, 0.0).into(),
            n,
            42,
            ResetPolicy::FreshState,
        )
        .unwrap();
        assert!((r.p_hat - 0.5).abs() <= 4.0 * (0.25 / n as f64).sqrt());
        assert_eq!(r.sanity(), Some(Sanity::Pass));
        assert!(r.wilson.0 <= r.p_hat && r.p_hat <= r.wilson.1);
    }

    #[test]
    fn records_agree_with_counts_and_replay() {
        let qm =
            machines::quantum_machine(ElasticApparatus::along_z(1.0, BreakageProfile::Uniform));
        let s: ScenarioState = SpherePoint::from_polar(1.1, 0.4).into();
        let r = run_trials(&qm, &s, 2_000, 8, ResetPolicy::FreshState).unwrap();
        let log = trial_records(&qm, &s, 2_000, 8, ResetPolicy::FreshState).unwrap();
        assert_eq!(
            log.iter().filter(|rec| rec.outcome.is_yes()).count() as u64,
            r.yes
        );
        assert!(log.iter().all(|rec| rec.replay(&qm).unwrap()));

        let lh = exemplars::left_handedness();
        let e: ScenarioState = ElasticBandState::unbroken(1.0).unwrap().into();
        let r = run_trials(&lh, &e, 300, 2, ResetPolicy::EvolvingState).unwrap();
        let log = trial_records(&lh, &e, 300, 2, ResetPolicy::EvolvingState).unwrap();
        assert_eq!(
            log.iter().filter(|rec| rec.outcome.is_yes()).count() as u64,
            r.yes
        );
        assert_eq!(log.last().unwrap().post_state, r.final_state.unwrap());
        assert!(log.windows(2).all(|w| w[0].post_state == w[1].pre_state));
    }

    #[test]
    fn thread_count_does_not_change_reports() {
        let qm =
            machines::quantum_machine(ElasticApparatus::along_z(1.0, BreakageProfile::Uniform));
        let s: ScenarioState = SpherePoint::from_polar(2.0, 0.0).into();
        let one = with_threads(1, || {
            run_trials(&qm, &s, 30_000, 99, ResetPolicy::FreshState)
        })
        .unwrap()
        .unwrap();
        let many = with_threads(6, || {
            run_trials(&qm, &s, 30_000, 99, ResetPolicy::FreshState)
        })
        .unwrap()
        .unwrap();
        assert_eq!(one, many);
    }

    #[test]
    fn zero_trials_and_mismatch_rejected() {
        let qm =
            machines::quantum_machine(ElasticApparatus::along_z(1.0, BreakageProfile::Uniform));
        let s: ScenarioState = SpherePoint::from_polar(2.0, 0.0).into();
        assert!(run_trials(&qm, &s, 0, 1, ResetPolicy::FreshState).is_err());
        let wood: ScenarioState = WoodState::ashes().into();
        assert!(matches!(
            run_trials(&qm, &wood, 10, 1, ResetPolicy::FreshState),
            Err(Error::ScenarioMismatch { .. })
        ));
    }

    fn qm_family(
        profile: BreakageProfile,
    ) -> impl Fn(f64) -> Result<(ObservationProcess, ScenarioState)> {
        move |gamma| {
            Ok((
                machines::quantum_machine(ElasticApparatus::along_z(1.0, profile)),
                SpherePoint::from_polar(gamma, 0.0).into(),
            ))
        }
    }

    #[test]
    fn gamma_sweep_fits_closed_form() {
        let grid: Vec<f64> = (0..13).map(|k| k as f64 * PI / 12.0).collect();
        let res = sweep(&grid, qm_family(BreakageProfile::Uniform), 100_000, 42).unwrap();
        assert_eq!(res.points.len(), 13);
        assert_eq!(res.dof, 11);
        assert!(res.p_value().unwrap() > 0.01, "chi2 = {}", res.chi_square);
        assert!(res.degenerate_mismatches().is_empty());
    }

    #[test]
    fn epsilon_sweep_degenerate_points_are_exact() {
        let gamma = 0.6f64; // cos = 0.825
        let family = |eps: f64| {
            Ok((
                machines::quantum_machine(ElasticApparatus::along_z(
                    1.0,
                    BreakageProfile::Segment { epsilon: eps },
                )),
                SpherePoint::from_polar(gamma, 0.0).into(),
            ))
        };
        let res = sweep(&[0.0, 0.25, 0.5, 1.0], family, 10_000, 3).unwrap();
        for pt in &res.points[..3] {
            assert_eq!(pt.report.analytic, Some(1.0));
            assert_eq!(pt.report.yes, pt.report.trials);
        }
        assert_eq!(res.dof, 1);
        assert!(sweep(&[], family, 10, 3).is_err());
    }

    #[test]
    fn point_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|j| point_seed(42, j)).collect();
        assert_eq!(seeds.len(), 1000);
    }
}
