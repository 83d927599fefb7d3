//! Classification of observational processes by their effect on the
//! entity, the predictability of their outcomes and the persistence of the
//! properties they observe.
//!
//! Verdicts are relative to a [`StateProbe`], a declared finite set of
//! states. Probe states flagged as measure-zero (tooth tips, the poles of
//! the quantum machine, exact-half fragments) take part in the effect and
//! persistence checks but are ignored when judging predictability.
//!
//! Effect rules, with `p` the closed-form yes-probability:
//!
//! * non-invasive discovery: no branch from any probe state changes the state;
//! * creation: some probe state with `p < 1` has a state-changing branch
//!   after which the property is actual, meaning either `p = 1` at the
//!   post-state, or the branch itself answered yes;
//! * destruction: some probe state with `p = 1` has a branch ending at a
//!   post-state with `p < 1`;
//! * invasive discovery: the state changes but neither of the above occurs.
//!
//! A property is intrinsic when every yes branch from the probe leaves an
//! entity on which the same observation answers yes with certainty. Entities
//! the observation disintegrates are not re-tested.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exemplars::{self, ElasticBandState, Moisture, SolidState, WoodState};
use crate::machines::{
    self, BreakageProfile, ElasticApparatus, LinePosition, SawtoothRuler, SpherePoint,
};
use crate::model::{Branch, ObservationProcess, PropertyDef, ScenarioState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Effect {
    NonInvasiveDiscovery,
    InvasiveDiscovery,
    InvasiveCreation,
    InvasiveDestruction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Predictability {
    Deterministic,
    Intermediary,
    NowhereDeterministic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Persistence {
    Intrinsic,
    Ephemeral,
}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Effect::NonInvasiveDiscovery => "non-invasive-discovery",
            Effect::InvasiveDiscovery => "invasive-discovery",
            Effect::InvasiveCreation => "invasive-creation",
            Effect::InvasiveDestruction => "invasive-destruction",
        })
    }
}

impl fmt::Display for Predictability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Predictability::Deterministic => "deterministic",
            Predictability::Intermediary => "intermediary",
            Predictability::NowhereDeterministic => "nowhere-deterministic",
        })
    }
}

impl fmt::Display for Persistence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Persistence::Intrinsic => "intrinsic",
            Persistence::Ephemeral => "ephemeral",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeState {
    pub state: ScenarioState,
    pub measure_zero: bool,
}

/// The states a classification ranges over.
#[derive(Debug, Clone, PartialEq)]
pub struct StateProbe {
    states: Vec<ProbeState>,
}

impl StateProbe {
    pub fn new(states: Vec<ScenarioState>) -> Result<Self> {
        Self::with_exceptions(states, Vec::new())
    }

    /// Probe over `states` plus measure-zero `exceptions`.
    pub fn with_exceptions(
        states: Vec<ScenarioState>,
        exceptions: Vec<ScenarioState>,
    ) -> Result<Self> {
        let Some(first) = states.first() else {
            return Err(Error::Domain(
                "a probe needs at least one regular state".into(),
            ));
        };
        let kind = first.kind();
        if let Some(odd) = states.iter().chain(&exceptions).find(|s| s.kind() != kind) {
            return Err(Error::Domain(format!(
                "probe mixes {kind} states with {}",
                odd.kind()
            )));
        }
        let states = states
            .into_iter()
            .map(|state| ProbeState {
                state,
                measure_zero: false,
            })
            .chain(exceptions.into_iter().map(|state| ProbeState {
                state,
                measure_zero: true,
            }))
            .collect();
        Ok(Self { states })
    }

    pub fn states(&self) -> &[ProbeState] {
        &self.states
    }

    /// Which probe states `process` has a closed form for.
    pub fn analytic_availability(&self, process: &ObservationProcess) -> Vec<bool> {
        self.states
            .iter()
            .map(|ps| process.yes_probability(&ps.state).is_ok())
            .collect()
    }
}

/// A probe state and branch on which the property's actuality flips.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub state: ScenarioState,
    pub branch: Branch,
    /// Yes-probability before the observation.
    pub before: f64,
    /// Yes-probability at the post-state.
    pub after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectVerdict {
    pub effect: Effect,
    pub creation: Option<Witness>,
    pub destruction: Option<Witness>,
}

pub fn classify_effect(prop: &PropertyDef, probe: &StateProbe) -> Result<EffectVerdict> {
    let process = &prop.process;
    let mut invasive = false;
    let mut creation = None;
    let mut destruction = None;
    for ps in &probe.states {
        let s = &ps.state;
        let before = process.yes_probability(s)?;
        for branch in process.branches(s)? {
            if branch.post_state == *s {
                continue;
            }
            invasive = true;
            let after = process.yes_probability(&branch.post_state)?;
            let witness = || Witness {
                state: s.clone(),
                branch: branch.clone(),
                before,
                after,
            };
            if creation.is_none() && before < 1.0 && (after == 1.0 || branch.outcome.is_yes()) {
                creation = Some(witness());
            }
            if destruction.is_none() && before == 1.0 && after < 1.0 {
                destruction = Some(witness());
            }
        }
    }
    let effect = if !invasive {
        Effect::NonInvasiveDiscovery
    } else if creation.is_some() {
        Effect::InvasiveCreation
    } else if destruction.is_some() {
        Effect::InvasiveDestruction
    } else {
        Effect::InvasiveDiscovery
    };
    Ok(EffectVerdict {
        effect,
        creation,
        destruction,
    })
}

pub fn classify_predictability(
    process: &ObservationProcess,
    probe: &StateProbe,
) -> Result<Predictability> {
    let mut deterministic = 0usize;
    let mut random = 0usize;
    for ps in probe.states.iter().filter(|ps| !ps.measure_zero) {
        let p = process.yes_probability(&ps.state)?;
        if p == 0.0 || p == 1.0 {
            deterministic += 1;
        } else {
            random += 1;
        }
    }
    Ok(match (deterministic, random) {
        (_, 0) => Predictability::Deterministic,
        (0, _) => Predictability::NowhereDeterministic,
        _ => Predictability::Intermediary,
    })
}

pub fn classify_persistence(prop: &PropertyDef, probe: &StateProbe) -> Result<Persistence> {
    let process = &prop.process;
    for ps in &probe.states {
        for branch in process.branches(&ps.state)? {
            if !branch.outcome.is_yes() || branch.post_state.is_disintegrated() {
                continue;
            }
            if process.yes_probability(&branch.post_state)? != 1.0 {
                return Ok(Persistence::Ephemeral);
            }
        }
    }
    Ok(Persistence::Intrinsic)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationClassification {
    pub effect: Effect,
    pub predictability: Predictability,
    pub persistence: Persistence,
    pub creation_witness: Option<Witness>,
    pub destruction_witness: Option<Witness>,
}

impl ObservationClassification {
    /// A creation verdict that also destroyed the property somewhere.
    pub fn destruction_flag(&self) -> bool {
        self.effect == Effect::InvasiveCreation && self.destruction_witness.is_some()
    }

    /// The witness backing the effect verdict, if any.
    pub fn witness(&self) -> Option<&Witness> {
        match self.effect {
            Effect::InvasiveCreation => self.creation_witness.as_ref(),
            Effect::InvasiveDestruction => self.destruction_witness.as_ref(),
            _ => None,
        }
    }
}

pub fn classify(prop: &PropertyDef, probe: &StateProbe) -> Result<ObservationClassification> {
    let effect = classify_effect(prop, probe)?;
    Ok(ObservationClassification {
        effect: effect.effect,
        predictability: classify_predictability(&prop.process, probe)?,
        persistence: classify_persistence(prop, probe)?,
        creation_witness: effect.creation,
        destruction_witness: effect.destruction,
    })
}

#[derive(Debug, Clone)]
pub struct SuiteEntry {
    pub property: PropertyDef,
    pub probe: StateProbe,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaxonomyRow {
    pub property: String,
    pub classification: Result<ObservationClassification>,
}

/// Classifies every entry of `suite`, in order.
pub fn taxonomy_table(suite: &[SuiteEntry]) -> Vec<TaxonomyRow> {
    suite
        .par_iter()
        .map(|entry| TaxonomyRow {
            property: entry.property.name.clone(),
            classification: classify(&entry.property, &entry.probe),
        })
        .collect()
}

fn wood_probe() -> StateProbe {
    StateProbe::new(vec![
        WoodState::intact(Moisture::Dry).into(),
        WoodState::intact(Moisture::Wet).into(),
        WoodState::ashes().into(),
    ])
    .expect("wood probe")
}

fn elastic(fragments: &[f64]) -> ScenarioState {
    ElasticBandState::new(fragments.to_vec(), 1.0)
        .expect("probe elastic")
        .into()
}

fn line(x: f64) -> ScenarioState {
    LinePosition::new(x).expect("probe position").into()
}

/// The exemplar processes with the probes they are classified over.
pub fn registered_suite() -> Vec<SuiteEntry> {
    let entry = |name: &str, process: ObservationProcess, probe: StateProbe| SuiteEntry {
        property: PropertyDef::new(name, process),
        probe,
    };

    let solids = [(1.0, 0.05), (2.0, 0.0), (1.0, 0.005), (0.5, 0.3)]
        .iter()
        .map(|&(v, r)| SolidState::new(v, r).expect("probe solid").into())
        .collect();

    let ruler = SawtoothRuler::new(1.0, 0.0).expect("ruler");
    let sawtooth_probe = StateProbe::with_exceptions(
        [-0.8, -0.3, 0.0, 0.3, 0.9, 1.2].map(line).to_vec(),
        [-0.5, 0.5].map(line).to_vec(),
    )
    .expect("sawtooth probe");

    let apparatus = ElasticApparatus::along_z(1.0, BreakageProfile::Uniform);
    let interior = (1..12)
        .map(|k| SpherePoint::from_polar(k as f64 * std::f64::consts::PI / 12.0, 0.0).into())
        .collect();
    let poles = vec![apparatus.plus().into(), apparatus.minus().into()];
    let sphere_probe = StateProbe::with_exceptions(interior, poles).expect("sphere probe");

    let bands = vec![
        elastic(&[1.0]),
        elastic(&[0.7, 0.3]),
        elastic(&[0.4, 0.3, 0.3]),
        elastic(&[0.6, 0.25, 0.15]),
    ];
    let elastic_probe =
        StateProbe::with_exceptions(bands, vec![elastic(&[0.5, 0.5])]).expect("elastic probe");

    vec![
        entry("burnability", exemplars::burnability(), wood_probe()),
        entry("floatability", exemplars::floatability(), wood_probe()),
        entry(
            "incompressibility",
            exemplars::incompressibility(),
            StateProbe::new(solids).expect("solid probe"),
        ),
        entry(
            "sawtooth-position",
            machines::sawtooth_position(ruler, 0),
            sawtooth_probe,
        ),
        entry(
            "quantum-machine",
            machines::quantum_machine(apparatus),
            sphere_probe,
        ),
        entry(
            "left-handedness",
            exemplars::left_handedness(),
            elastic_probe.clone(),
        ),
        entry("fragmentation", exemplars::fragmentation(), elastic_probe),
    ]
}

/// The classification each registered exemplar is expected to receive.
pub fn expected_taxonomy() -> Vec<(&'static str, Effect, Predictability, Persistence)> {
    use Effect::*;
    use Persistence::*;
    use Predictability::*;
    vec![
        ("burnability", InvasiveDestruction, Deterministic, Intrinsic),
        ("floatability", InvasiveDiscovery, Deterministic, Intrinsic),
        (
            "incompressibility",
            InvasiveCreation,
            Deterministic,
            Intrinsic,
        ),
        (
            "sawtooth-position",
            InvasiveCreation,
            Deterministic,
            Intrinsic,
        ),
        (
            "quantum-machine",
            InvasiveCreation,
            NowhereDeterministic,
            Intrinsic,
        ),
        (
            "left-handedness",
            InvasiveCreation,
            NowhereDeterministic,
            Ephemeral,
        ),
        (
            "fragmentation",
            NonInvasiveDiscovery,
            Intermediary,
            Ephemeral,
        ),
    ]
}

/// Rows of `table` that do not match [`expected_taxonomy`], described.
pub fn taxonomy_mismatches(table: &[TaxonomyRow]) -> Vec<String> {
    let expected = expected_taxonomy();
    let mut out = Vec::new();
    if table.len() != expected.len() {
        out.push(format!("{} rows, expected {}", table.len(), expected.len()));
    }
    for (row, (name, effect, pred, pers)) in table.iter().zip(expected) {
        match &row.classification {
            Ok(c)
                if row.property == name
                    && c.effect == effect
                    && c.predictability == pred
                    && c.persistence == pers => {}
            Ok(c) => out.push(format!(
                "{}: got ({}, {}, {}), expected {name}: ({effect}, {pred}, {pers})",
                row.property, c.effect, c.predictability, c.persistence
            )),
            Err(e) => out.push(format!("{}: {e}", row.property)),
        }
    }
    out
}
