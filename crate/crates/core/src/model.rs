//! States, outcomes and observational processes.
//!
//! An observational process is a kernel that maps a state and a stream of
//! unit-interval draws to a yes/no outcome and a post-state. Every draw a
//! kernel consumes goes through a [`DrawSource`], so any observation can be
//! recorded and replayed bit-exactly from its [`ObservationRecord`].
//!
//! A property is *actual* in a state when its process answers yes with
//! analytic probability exactly one. Sampled frequencies never certify
//! actuality; they can only refute it.

use std::fmt;
use std::sync::Arc;

use rand::distr::Open01;
use rand::Rng;

use crate::error::{Error, Result};
use crate::exemplars::{ElasticBandState, SolidState, WoodState};
use crate::machines::{LinePosition, SpherePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Yes,
    No,
}

impl Outcome {
    pub fn from_bool(yes: bool) -> Self {
        if yes {
            Outcome::Yes
        } else {
            Outcome::No
        }
    }

    pub fn is_yes(self) -> bool {
        self == Outcome::Yes
    }
}

impl std::ops::Not for Outcome {
    type Output = Outcome;

    fn not(self) -> Outcome {
        match self {
            Outcome::Yes => Outcome::No,
            Outcome::No => Outcome::Yes,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Yes => "yes",
            Outcome::No => "no",
        })
    }
}

/// Tag of a [`ScenarioState`] variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    SpherePoint,
    Wood,
    ElasticBand,
    Solid,
    LinePosition,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScenarioKind::SpherePoint => "sphere-point",
            ScenarioKind::Wood => "wood",
            ScenarioKind::ElasticBand => "elastic-band",
            ScenarioKind::Solid => "solid",
            ScenarioKind::LinePosition => "line-position",
        })
    }
}

/// State of one of the modelled entities.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioState {
    SpherePoint(SpherePoint),
    Wood(WoodState),
    ElasticBand(ElasticBandState),
    Solid(SolidState),
    LinePosition(LinePosition),
}

impl ScenarioState {
    pub fn kind(&self) -> ScenarioKind {
        match self {
            ScenarioState::SpherePoint(_) => ScenarioKind::SpherePoint,
            ScenarioState::Wood(_) => ScenarioKind::Wood,
            ScenarioState::ElasticBand(_) => ScenarioKind::ElasticBand,
            ScenarioState::Solid(_) => ScenarioKind::Solid,
            ScenarioState::LinePosition(_) => ScenarioKind::LinePosition,
        }
    }

    /// True when the entity no longer exists as the kind of thing the
    /// scenario describes (burnt wood).
    pub fn is_disintegrated(&self) -> bool {
        matches!(self, ScenarioState::Wood(w) if w.is_ashes())
    }
}

impl fmt::Display for ScenarioState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioState::SpherePoint(s) => s.fmt(f),
            ScenarioState::Wood(s) => s.fmt(f),
            ScenarioState::ElasticBand(s) => s.fmt(f),
            ScenarioState::Solid(s) => s.fmt(f),
            ScenarioState::LinePosition(s) => s.fmt(f),
        }
    }
}

macro_rules! state_from {
    ($ty:ty, $variant:ident) => {
        impl From<$ty> for ScenarioState {
            fn from(s: $ty) -> Self {
                ScenarioState::$variant(s)
            }
        }
    };
}

state_from!(SpherePoint, SpherePoint);
state_from!(WoodState, Wood);
state_from!(ElasticBandState, ElasticBand);
state_from!(SolidState, Solid);
state_from!(LinePosition, LinePosition);

/// A stream of reals in the open unit interval (0, 1).
pub trait DrawSource {
    fn next_draw(&mut self) -> Result<f64>;
}

/// Draws from a random number generator.
#[derive(Debug, Clone)]
pub struct RngDraws<R>(pub R);

impl<R: Rng> DrawSource for RngDraws<R> {
    fn next_draw(&mut self) -> Result<f64> {
        Ok(self.0.sample(Open01))
    }
}

/// Replays a fixed sequence of draws, failing once it runs out.
#[derive(Debug, Clone)]
pub struct ReplayDraws<'a> {
    draws: &'a [f64],
    pos: usize,
}

impl<'a> ReplayDraws<'a> {
    pub fn new(draws: &'a [f64]) -> Self {
        Self { draws, pos: 0 }
    }

    pub fn consumed(&self) -> usize {
        self.pos
    }
}

impl DrawSource for ReplayDraws<'_> {
    fn next_draw(&mut self) -> Result<f64> {
        let d = *self
            .draws
            .get(self.pos)
            .ok_or(Error::DrawsExhausted { consumed: self.pos })?;
        self.pos += 1;
        Ok(d)
    }
}

/// Forwards draws from an inner source and keeps a copy of each.
pub struct RecordingDraws<'a> {
    inner: &'a mut dyn DrawSource,
    log: Vec<f64>,
}

impl<'a> RecordingDraws<'a> {
    pub fn new(inner: &'a mut dyn DrawSource) -> Self {
        Self {
            inner,
            log: Vec::new(),
        }
    }

    pub fn into_log(self) -> Vec<f64> {
        self.log
    }
}

impl DrawSource for RecordingDraws<'_> {
    fn next_draw(&mut self) -> Result<f64> {
        let d = self.inner.next_draw()?;
        self.log.push(d);
        Ok(d)
    }
}

/// One reachable way an observation can end, from a given pre-state.
///
/// `draws` reproduces the branch through [`ReplayDraws`]. When the kernel
/// has a continuum of post-states, `representative` is set and the branch
/// stands for a family over which the kernel's analytic quantities are
/// constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub outcome: Outcome,
    pub post_state: ScenarioState,
    pub draws: Vec<f64>,
    /// Probability mass of the branch (or of the family it represents).
    pub probability: f64,
    pub representative: bool,
}

/// The stochastic map behind an observational process.
pub trait Kernel: Send + Sync + fmt::Debug {
    fn scenario(&self) -> ScenarioKind;

    /// Runs the observation. `state` is already known to be of
    /// [`Kernel::scenario`] kind when called through [`ObservationProcess`].
    fn apply(
        &self,
        state: &ScenarioState,
        draws: &mut dyn DrawSource,
    ) -> Result<(Outcome, ScenarioState)>;

    /// Closed-form yes-probability, if the kernel has one for `state`.
    fn yes_probability(&self, _state: &ScenarioState) -> Option<f64> {
        None
    }

    /// All positive-probability branches from `state`.
    ///
    /// The default handles kernels that consume no draws on `state`: the
    /// single deterministic branch is found by running the kernel once.
    fn branches(&self, state: &ScenarioState) -> Result<Vec<Branch>> {
        let mut replay = ReplayDraws::new(&[]);
        match self.apply(state, &mut replay) {
            Ok((outcome, post_state)) => Ok(vec![Branch {
                outcome,
                post_state,
                draws: Vec::new(),
                probability: 1.0,
                representative: false,
            }]),
            Err(Error::DrawsExhausted { .. }) => Err(Error::NotDecidable {
                process: format!("{self:?}"),
                reason: "kernel consumes draws and does not enumerate its branches".into(),
            }),
            Err(e) => Err(e),
        }
    }
}

/// A named observational procedure.
#[derive(Clone)]
pub struct ObservationProcess {
    id: String,
    description: String,
    kernel: Arc<dyn Kernel>,
}

impl fmt::Debug for ObservationProcess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObservationProcess")
            .field("id", &self.id)
            .field("kernel", &self.kernel)
            .finish()
    }
}

impl ObservationProcess {
    pub fn new(
        id: impl Into<String>,
        description: impl Into<String>,
        kernel: impl Kernel + 'static,
    ) -> Self {
        Self {
            id: id.into(),
            description: description.into(),
            kernel: Arc::new(kernel),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn scenario(&self) -> ScenarioKind {
        self.kernel.scenario()
    }

    pub fn kernel(&self) -> &dyn Kernel {
        self.kernel.as_ref()
    }

    fn check(&self, state: &ScenarioState) -> Result<()> {
        if state.kind() == self.scenario() {
            Ok(())
        } else {
            Err(Error::ScenarioMismatch {
                process: self.id.clone(),
                expected: self.scenario(),
                found: state.kind(),
            })
        }
    }

    /// Runs the kernel without recording anything.
    pub fn apply(
        &self,
        state: &ScenarioState,
        draws: &mut dyn DrawSource,
    ) -> Result<(Outcome, ScenarioState)> {
        self.check(state)?;
        let (outcome, post) = self.kernel.apply(state, draws)?;
        debug_assert_eq!(post.kind(), state.kind());
        Ok((outcome, post))
    }

    /// Runs the kernel and returns the outcome, post-state and an audit
    /// record. `index` is the trial counter stored in the record.
    pub fn observe(
        &self,
        state: &ScenarioState,
        draws: &mut dyn DrawSource,
        index: u64,
    ) -> Result<(Outcome, ScenarioState, ObservationRecord)> {
        let mut recording = RecordingDraws::new(draws);
        let (outcome, post_state) = self.apply(state, &mut recording)?;
        let record = ObservationRecord {
            process_id: self.id.clone(),
            pre_state: state.clone(),
            outcome,
            post_state: post_state.clone(),
            draws: recording.into_log(),
            index,
        };
        Ok((outcome, post_state, record))
    }

    pub fn yes_probability(&self, state: &ScenarioState) -> Result<f64> {
        self.check(state)?;
        self.kernel.yes_probability(state).ok_or_else(|| {
            Error::not_decidable(&self.id, format!("no analytic yes-probability at {state}"))
        })
    }

    pub fn branches(&self, state: &ScenarioState) -> Result<Vec<Branch>> {
        self.check(state)?;
        self.kernel.branches(state).map_err(|e| match e {
            Error::NotDecidable { reason, .. } => Error::not_decidable(&self.id, reason),
            other => other,
        })
    }
}

/// See [`ObservationProcess::observe`].
pub fn observe(
    process: &ObservationProcess,
    state: &ScenarioState,
    draws: &mut dyn DrawSource,
) -> Result<(Outcome, ScenarioState, ObservationRecord)> {
    process.observe(state, draws, 0)
}

/// A property, operationally defined by the process that tests it.
#[derive(Debug, Clone)]
pub struct PropertyDef {
    pub name: String,
    pub process: ObservationProcess,
}

impl PropertyDef {
    pub fn new(name: impl Into<String>, process: ObservationProcess) -> Self {
        Self {
            name: name.into(),
            process,
        }
    }
}

/// Whether `prop` is actual in `state`: its yes outcome is certain.
pub fn is_actual(prop: &PropertyDef, state: &ScenarioState) -> Result<bool> {
    Ok(prop.process.yes_probability(state)? == 1.0)
}

/// Whether every post-state reachable through a yes outcome again yields yes
/// with certainty under the same process. Vacuously true when no yes
/// outcome is reachable.
pub fn repeat_yes_certain(process: &ObservationProcess, state: &ScenarioState) -> Result<bool> {
    for branch in process.branches(state)? {
        if branch.outcome.is_yes() && process.yes_probability(&branch.post_state)? != 1.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Audit trail of a single observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationRecord {
    pub process_id: String,
    pub pre_state: ScenarioState,
    pub outcome: Outcome,
    pub post_state: ScenarioState,
    pub draws: Vec<f64>,
    pub index: u64,
}

impl ObservationRecord {
    /// Re-runs `process` on the recorded pre-state with the recorded draws
    /// and checks that outcome and post-state come out identical.
    pub fn replay(&self, process: &ObservationProcess) -> Result<bool> {
        if process.id() != self.process_id {
            return Err(Error::Domain(format!(
                "record belongs to `{}`, not `{}`",
                self.process_id,
                process.id()
            )));
        }
        let mut replay = ReplayDraws::new(&self.draws);
        let (outcome, post) = process.apply(&self.pre_state, &mut replay)?;
        Ok(outcome == self.outcome
            && post == self.post_state
            && replay.consumed() == self.draws.len())
    }
}
