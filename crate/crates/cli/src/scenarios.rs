//! The named scenarios: each produces a report table and, on request, the
//! checks its acceptance criteria call for.

use anyhow::{Context, Result};
use obsim_core::exemplars::{self, ElasticBandState};
use obsim_core::machines::{self, BreakageProfile, ElasticApparatus, SpherePoint};
use obsim_core::product::{self, ProductObservation};
use obsim_core::stats::{self, ResetPolicy, TrialReport};
use obsim_core::taxonomy::{self, ObservationClassification};
use obsim_core::{Moisture, ScenarioState, WoodState};

use crate::config::{Settings, DEFAULT_EPSILONS};
use crate::output::{Table, QUANTUM_MACHINE_SCHEMA, TAXONOMY_SCHEMA, TRIALS_SCHEMA};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub table: Table,
    pub checks: Vec<Check>,
}

/// Tolerance for a single Monte Carlo point around a closed form `p`.
pub fn point_tolerance(p: f64, trials: u64) -> f64 {
    f64::max(0.005, 4.0 * (p * (1.0 - p) / trials as f64).sqrt())
}

/// Rows of one profile: the breakable fraction (`None` for uniform) and
/// a report per angle.
type Column = (Option<f64>, Vec<(f64, TrialReport)>);

/// Trial rows over the angle grid, one column of rows per profile.
/// `None` is the uniformly breakable elastic.
fn angle_sweep(settings: &Settings, profiles: &[Option<f64>]) -> Result<Vec<Column>> {
    profiles
        .iter()
        .enumerate()
        .map(|(i, &eps)| {
            let profile = eps.map_or(BreakageProfile::Uniform, |epsilon| {
                BreakageProfile::Segment { epsilon }
            });
            let apparatus = ElasticApparatus::new([0.0, 0.0, 1.0], settings.length, profile)?;
            let result = stats::sweep(
                &settings.gammas,
                |g| {
                    Ok((
                        machines::quantum_machine(apparatus),
                        SpherePoint::from_polar(g, 0.0).into(),
                    ))
                },
                settings.trials,
                stats::point_seed(settings.seed, i as u64),
            )?;
            let points = result
                .points
                .into_iter()
                .map(|pt| (pt.parameter, pt.report))
                .collect();
            Ok((eps, points))
        })
        .collect()
}

fn angle_table(columns: &[Column]) -> Table {
    let mut table = Table::new(&QUANTUM_MACHINE_SCHEMA);
    for (eps, points) in columns {
        for (gamma, r) in points {
            table.push(vec![
                (*gamma).into(),
                (*eps).into(),
                r.analytic.into(),
                r.p_hat.into(),
                r.yes.into(),
                r.trials.into(),
                r.wilson.0.into(),
                r.wilson.1.into(),
                r.seed.into(),
            ]);
        }
    }
    table
}

fn degenerate_exact(r: &TrialReport) -> bool {
    match r.analytic {
        Some(0.0) => r.yes == 0,
        Some(1.0) => r.yes == r.trials,
        _ => true,
    }
}

pub fn quantum_machine(settings: &Settings) -> Result<ScenarioOutput> {
    let profiles: Vec<Option<f64>> = if settings.epsilons.is_empty() {
        vec![None]
    } else {
        settings.epsilons.iter().copied().map(Some).collect()
    };
    let columns = angle_sweep(settings, &profiles)?;
    let mut checks = Vec::new();
    for (eps, points) in &columns {
        if eps.is_some() {
            checks.extend(regime_checks(*eps, points));
            continue;
        }
        let mut worst = (0.0f64, 0.0f64);
        let mut ok = true;
        for (gamma, r) in points {
            let p = r.analytic.context("closed form missing")?;
            let dev = (r.p_hat - p).abs();
            ok &= degenerate_exact(r) && dev <= point_tolerance(p, r.trials);
            if dev > worst.1 {
                worst = (*gamma, dev);
            }
        }
        checks.push(Check::new(
            "uniform elastic reproduces cos^2(gamma/2)",
            ok,
            format!("largest deviation {:.2e} at gamma {:.4}", worst.1, worst.0),
        ));
    }
    Ok(ScenarioOutput {
        table: angle_table(&columns),
        checks,
    })
}

fn regime_checks(eps: Option<f64>, points: &[(f64, TrialReport)]) -> Vec<Check> {
    let Some(eps) = eps else {
        return Vec::new();
    };
    let mut frozen_ok = true;
    let mut frozen = 0;
    let mut matched_ok = true;
    let mut matched = 0;
    let mut worst = 0.0f64;
    for (gamma, r) in points {
        let c = model_cos(*gamma);
        let p = r.analytic.unwrap_or(f64::NAN);
        if c.abs() > eps {
            frozen += 1;
            frozen_ok &= r.yes == 0 || r.yes == r.trials;
        } else if c.abs() < eps {
            matched += 1;
            let dev = (r.p_hat - p).abs();
            worst = worst.max(dev);
            matched_ok &= dev <= 0.01;
        }
        frozen_ok &= degenerate_exact(r);
    }
    let mut checks = vec![
        Check::new(
            format!("epsilon {eps}: outcomes fixed where |cos gamma| > epsilon"),
            frozen_ok,
            format!("{frozen} points"),
        ),
        Check::new(
            format!("epsilon {eps}: frequencies within 0.01 where |cos gamma| < epsilon"),
            matched_ok,
            format!("{matched} points, largest deviation {worst:.2e}"),
        ),
    ];
    if eps == 1.0 {
        let same = points.iter().all(|(g, r)| {
            r.analytic == machines::quantum_machine_prob(*g, BreakageProfile::Uniform, 1.0).ok()
        });
        checks.push(Check::new("epsilon 1 equals the uniform elastic", same, ""));
    }
    checks
}

/// cos γ as the model sees it.
fn model_cos(gamma: f64) -> f64 {
    ElasticApparatus::along_z(1.0, BreakageProfile::Uniform)
        .cos_gamma(&SpherePoint::from_polar(gamma, 0.0))
}

pub fn epsilon_sweep(settings: &Settings) -> Result<ScenarioOutput> {
    let epsilons = if settings.epsilons.is_empty() {
        DEFAULT_EPSILONS.to_vec()
    } else {
        settings.epsilons.clone()
    };
    let profiles: Vec<Option<f64>> = epsilons.into_iter().map(Some).collect();
    let columns = angle_sweep(settings, &profiles)?;
    let checks = columns
        .iter()
        .flat_map(|(eps, pts)| regime_checks(*eps, pts))
        .collect();
    Ok(ScenarioOutput {
        table: angle_table(&columns),
        checks,
    })
}

fn trials_row(table: &mut Table, scenario: &str, state_label: String, r: &TrialReport) {
    table.push(vec![
        scenario.into(),
        r.process_id.as_str().into(),
        state_label.into(),
        r.analytic.into(),
        r.p_hat.into(),
        r.yes.into(),
        r.trials.into(),
        r.wilson.0.into(),
        r.wilson.1.into(),
        r.seed.into(),
    ]);
}

pub fn wood_product(settings: &Settings) -> Result<ScenarioOutput> {
    let dry: ScenarioState = WoodState::intact(Moisture::Dry).into();
    let mut table = Table::new(&TRIALS_SCHEMA);
    let mut checks = Vec::new();
    let pairs = [
        ("burnability*floatability", exemplars::burnability()),
        ("non-burnability*floatability", exemplars::non_burnability()),
    ];
    for (i, (id, first)) in pairs.into_iter().enumerate() {
        let prod = ProductObservation::uniform(vec![first, exemplars::floatability()])?;
        let mut demo = product::product_demo(
            &prod,
            &dry,
            settings.trials,
            stats::point_seed(settings.seed, i as u64),
        )?;
        demo.report.process_id = id.to_owned();
        trials_row(&mut table, "wood-product", dry.to_string(), &demo.report);
        let r = &demo.report;
        checks.push(if i == 0 {
            Check::new(
                format!("{id} always yes on dry wood"),
                r.yes == r.trials && demo.meet_actual,
                format!("{}/{} yes", r.yes, r.trials),
            )
        } else {
            Check::new(
                format!("{id} is a fair choice and the meet is not actual"),
                r.wilson.0 <= 0.5
                    && 0.5 <= r.wilson.1
                    && !demo.meet_actual
                    && demo.components_deterministic,
                format!(
                    "p_hat {:.5}, 99% interval [{:.5}, {:.5}]",
                    r.p_hat, r.wilson.0, r.wilson.1
                ),
            )
        });
    }
    Ok(ScenarioOutput { table, checks })
}

fn band_label(band: &ElasticBandState) -> String {
    if band.fragments().len() <= 8 {
        band.to_string()
    } else {
        format!(
            "elastic:L0={}/{} fragments, max {}",
            band.original_length(),
            band.fragments().len(),
            crate::output::sig9(band.max_fragment())
        )
    }
}

pub fn elastic(settings: &Settings) -> Result<ScenarioOutput> {
    let l0 = settings.length;
    let left = exemplars::left_handedness();
    let frag = exemplars::fragmentation();
    let unbroken = ElasticBandState::unbroken(l0)?;
    let start: ScenarioState = unbroken.clone().into();
    let mut table = Table::new(&TRIALS_SCHEMA);
    let mut checks = Vec::new();

    let coin = stats::run_trials(
        &left,
        &start,
        settings.trials,
        stats::point_seed(settings.seed, 0),
        ResetPolicy::FreshState,
    )?;
    trials_row(&mut table, "elastic", band_label(&unbroken), &coin);
    checks.push(Check::new(
        "left-handedness is a fair coin",
        coin.wilson.0 <= 0.5 && 0.5 <= coin.wilson.1,
        format!(
            "p_hat {:.5}, 99% interval [{:.5}, {:.5}]",
            coin.p_hat, coin.wilson.0, coin.wilson.1
        ),
    ));

    // Sequential breaks, the same draws an evolving-state run would use.
    let walk_seed = stats::point_seed(settings.seed, 1);
    let mut state = start.clone();
    let mut drift = 0.0f64;
    let mut monotone = true;
    let mut actual_iff = true;
    let mut sub_half = 0;
    for i in 0..settings.breaks {
        state = left.apply(&state, &mut stats::trial_draws(walk_seed, i))?.1;
        let ScenarioState::ElasticBand(band) = &state else {
            unreachable!("left-handedness keeps the band")
        };
        drift = drift.max((band.total_length() - l0).abs());
        monotone &= band.sub_half_count() >= sub_half;
        sub_half = band.sub_half_count();
        actual_iff &= (frag.yes_probability(&state)? == 1.0) == (band.max_fragment() < l0 / 2.0);
    }
    let walk = stats::run_trials(
        &left,
        &start,
        settings.breaks,
        walk_seed,
        ResetPolicy::EvolvingState,
    )?;
    debug_assert_eq!(walk.final_state.as_ref(), Some(&state));
    trials_row(&mut table, "elastic", band_label(&unbroken), &walk);

    let ScenarioState::ElasticBand(last) = &state else {
        unreachable!()
    };
    for (i, process) in [frag.clone(), exemplars::non_fragmentation()]
        .iter()
        .enumerate()
    {
        let r = stats::run_trials(
            process,
            &start,
            settings.trials,
            stats::point_seed(settings.seed, 2 + i as u64),
            ResetPolicy::FreshState,
        )?;
        trials_row(&mut table, "elastic", band_label(&unbroken), &r);
        let r = stats::run_trials(
            process,
            &state,
            settings.trials,
            stats::point_seed(settings.seed, 4 + i as u64),
            ResetPolicy::FreshState,
        )?;
        trials_row(&mut table, "elastic", band_label(last), &r);
    }

    checks.push(Check::new(
        "length conserved over sequential breaks",
        drift <= 1e-9,
        format!("{} breaks, largest drift {drift:.2e}", settings.breaks),
    ));
    checks.push(Check::new(
        "sub-half fragment count never decreases",
        monotone,
        format!("{sub_half} sub-half fragments at the end"),
    ));
    checks.push(Check::new(
        "fragmentation actual exactly when every fragment is below L0/2",
        actual_iff,
        "",
    ));
    Ok(ScenarioOutput { table, checks })
}

fn witness_label(c: &ObservationClassification) -> Option<String> {
    c.witness().map(|w| w.state.to_string())
}

pub fn classify(_settings: &Settings) -> Result<ScenarioOutput> {
    let rows = taxonomy::taxonomy_table(&taxonomy::registered_suite());
    let mismatches = taxonomy::taxonomy_mismatches(&rows);
    let mut table = Table::new(&TAXONOMY_SCHEMA);
    for row in &rows {
        let c = row
            .classification
            .as_ref()
            .map_err(Clone::clone)
            .with_context(|| format!("classifying {}", row.property))?;
        table.push(vec![
            row.property.as_str().into(),
            c.effect.to_string().into(),
            c.predictability.to_string().into(),
            c.persistence.to_string().into(),
            witness_label(c).into(),
        ]);
    }
    let checks = vec![Check::new(
        "taxonomy matches the expected table",
        mismatches.is_empty(),
        mismatches.join("; "),
    )];
    Ok(ScenarioOutput { table, checks })
}
