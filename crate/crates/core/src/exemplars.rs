//! Macroscopic entities and the everyday observations made on them: a piece
//! of wood, a non-elastic solid under a press and an elastic band broken by
//! hand.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{
    Branch, DrawSource, Kernel, ObservationProcess, Outcome, ReplayDraws, ScenarioKind,
    ScenarioState,
};

/// Relative volume loss above which a solid is not incompressible.
pub const INCOMPRESSIBILITY_THRESHOLD: f64 = 0.01;

const LENGTH_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Integrity {
    Intact,
    Ashes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Moisture {
    Dry,
    Wet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WoodState {
    pub integrity: Integrity,
    pub moisture: Moisture,
}

impl WoodState {
    pub fn intact(moisture: Moisture) -> Self {
        Self {
            integrity: Integrity::Intact,
            moisture,
        }
    }

    /// Ashes carry no meaningful moisture; they are stored as dry.
    pub fn ashes() -> Self {
        Self {
            integrity: Integrity::Ashes,
            moisture: Moisture::Dry,
        }
    }

    pub fn is_ashes(&self) -> bool {
        self.integrity == Integrity::Ashes
    }

    fn burns(&self) -> bool {
        *self == Self::intact(Moisture::Dry)
    }
}

impl fmt::Display for WoodState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.integrity, self.moisture) {
            (Integrity::Ashes, _) => f.write_str("wood:ashes"),
            (Integrity::Intact, Moisture::Dry) => f.write_str("wood:intact/dry"),
            (Integrity::Intact, Moisture::Wet) => f.write_str("wood:intact/wet"),
        }
    }
}

/// Non-elastic solid. `compaction_ratio` is the relative volume it would
/// lose under the standard press.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolidState {
    volume: f64,
    compaction_ratio: f64,
}

impl SolidState {
    pub fn new(volume: f64, compaction_ratio: f64) -> Result<Self> {
        if !(volume > 0.0 && volume.is_finite()) {
            return Err(Error::InvalidState(format!(
                "volume must be positive, got {volume}"
            )));
        }
        // A ratio of 1 would press the solid out of existence.
        if !(0.0..1.0).contains(&compaction_ratio) {
            return Err(Error::InvalidState(format!(
                "compaction ratio {compaction_ratio} outside [0, 1)"
            )));
        }
        Ok(Self {
            volume,
            compaction_ratio,
        })
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn compaction_ratio(&self) -> f64 {
        self.compaction_ratio
    }
}

impl fmt::Display for SolidState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "solid:V={}/r={}", self.volume, self.compaction_ratio)
    }
}

/// An elastic band, possibly already broken into fragments.
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticBandState {
    fragments: Vec<f64>,
    original_length: f64,
}

impl ElasticBandState {
    pub fn new(fragments: Vec<f64>, original_length: f64) -> Result<Self> {
        if !(original_length > 0.0 && original_length.is_finite()) {
            return Err(Error::InvalidState(format!(
                "original length must be positive, got {original_length}"
            )));
        }
        if fragments.is_empty() {
            return Err(Error::InvalidState(
                "an elastic has at least one fragment".into(),
            ));
        }
        if let Some(bad) = fragments.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidState(format!(
                "fragment length {bad} is not positive"
            )));
        }
        let total: f64 = fragments.iter().sum();
        if (total - original_length).abs() > LENGTH_TOLERANCE {
            return Err(Error::InvalidState(format!(
                "fragments sum to {total}, expected {original_length}"
            )));
        }
        Ok(Self {
            fragments,
            original_length,
        })
    }

    pub fn unbroken(length: f64) -> Result<Self> {
        Self::new(vec![length], length)
    }

    pub fn fragments(&self) -> &[f64] {
        &self.fragments
    }

    pub fn original_length(&self) -> f64 {
        self.original_length
    }

    pub fn total_length(&self) -> f64 {
        self.fragments.iter().sum()
    }

    /// Index of the longest fragment; the lowest index wins ties.
    pub fn longest_index(&self) -> usize {
        let mut best = 0;
        for (i, &l) in self.fragments.iter().enumerate().skip(1) {
            if l > self.fragments[best] {
                best = i;
            }
        }
        best
    }

    pub fn max_fragment(&self) -> f64 {
        self.fragments[self.longest_index()]
    }

    /// Fragments strictly shorter than half the original length.
    pub fn sub_half_count(&self) -> usize {
        let half = self.original_length / 2.0;
        self.fragments.iter().filter(|&&l| l < half).count()
    }

    /// Fragments strictly longer than half the original length.
    pub fn super_half_count(&self) -> usize {
        let half = self.original_length / 2.0;
        self.fragments.iter().filter(|&&l| l > half).count()
    }
}

impl fmt::Display for ElasticBandState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "elastic:L0={}/[", self.original_length)?;
        for (i, l) in self.fragments.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{l}")?;
        }
        f.write_str("]")
    }
}

/// Put the wood in contact with a flame. Dry intact wood burns to ashes;
/// wet wood and ashes do not burn and are left as they are. No draws.
pub fn burnability_observe(
    state: &WoodState,
    _draws: &mut dyn DrawSource,
) -> Result<(Outcome, WoodState)> {
    if state.burns() {
        Ok((Outcome::Yes, WoodState::ashes()))
    } else {
        Ok((Outcome::No, *state))
    }
}

/// The burnability procedure with the answer inverted.
pub fn non_burnability_observe(
    state: &WoodState,
    draws: &mut dyn DrawSource,
) -> Result<(Outcome, WoodState)> {
    let (o, post) = burnability_observe(state, draws)?;
    Ok((!o, post))
}

/// Immerse the wood in water. Intact wood floats and comes out wet; ashes
/// do not float. No draws.
pub fn floatability_observe(
    state: &WoodState,
    _draws: &mut dyn DrawSource,
) -> Result<(Outcome, WoodState)> {
    match state.integrity {
        Integrity::Intact => Ok((Outcome::Yes, WoodState::intact(Moisture::Wet))),
        Integrity::Ashes => Ok((Outcome::No, *state)),
    }
}

/// Submit the solid to the standard press. Yes when the relative volume
/// loss is at most 1%; either way the compaction is permanent. No draws.
pub fn incompressibility_observe(
    state: &SolidState,
    _draws: &mut dyn DrawSource,
) -> Result<(Outcome, SolidState)> {
    let yes = state.compaction_ratio <= INCOMPRESSIBILITY_THRESHOLD;
    let post = SolidState::new(state.volume * (1.0 - state.compaction_ratio), 0.0)?;
    Ok((Outcome::from_bool(yes), post))
}

/// Stretch the longest fragment until it breaks. One draw `u` places the
/// break at `u * l` from the left hand; yes when the left piece is strictly
/// longer than half of `l`. The fragment is replaced in place by its left
/// and right pieces.
pub fn left_handedness_observe(
    state: &ElasticBandState,
    draws: &mut dyn DrawSource,
) -> Result<(Outcome, ElasticBandState)> {
    let i = state.longest_index();
    let l = state.fragments[i];
    let u = draws.next_draw()?;
    let left = l * u;
    let right = l * (1.0 - u);
    if !(left > 0.0 && right > 0.0) {
        return Err(Error::Domain(format!(
            "break at {u} of a fragment of length {l}"
        )));
    }
    let mut fragments = Vec::with_capacity(state.fragments.len() + 1);
    fragments.extend_from_slice(&state.fragments[..i]);
    fragments.push(left);
    fragments.push(right);
    fragments.extend_from_slice(&state.fragments[i + 1..]);
    let post = ElasticBandState {
        fragments,
        original_length: state.original_length,
    };
    Ok((Outcome::from_bool(left > l / 2.0), post))
}

fn pick_fragment(state: &ElasticBandState, draws: &mut dyn DrawSource) -> Result<f64> {
    let n = state.fragments.len();
    let i = ((draws.next_draw()? * n as f64) as usize).min(n - 1);
    Ok(state.fragments[i])
}

/// Pick a fragment blindly (each fragment equally likely, one draw); yes
/// when it is strictly shorter than half the original length. The elastic
/// is left untouched.
pub fn fragmentation_observe(
    state: &ElasticBandState,
    draws: &mut dyn DrawSource,
) -> Result<(Outcome, ElasticBandState)> {
    let l = pick_fragment(state, draws)?;
    Ok((
        Outcome::from_bool(l < state.original_length / 2.0),
        state.clone(),
    ))
}

/// As [`fragmentation_observe`], but yes when the picked fragment is
/// strictly longer than half the original length.
pub fn non_fragmentation_observe(
    state: &ElasticBandState,
    draws: &mut dyn DrawSource,
) -> Result<(Outcome, ElasticBandState)> {
    let l = pick_fragment(state, draws)?;
    Ok((
        Outcome::from_bool(l > state.original_length / 2.0),
        state.clone(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WoodTest {
    Burnability,
    NonBurnability,
    Floatability,
}

impl WoodTest {
    fn id(self) -> &'static str {
        match self {
            WoodTest::Burnability => "burnability",
            WoodTest::NonBurnability => "non-burnability",
            WoodTest::Floatability => "floatability",
        }
    }
}

#[derive(Debug, Clone)]
pub struct WoodKernel(pub WoodTest);

fn mismatch(process: &str, expected: ScenarioKind, state: &ScenarioState) -> Error {
    Error::ScenarioMismatch {
        process: process.to_owned(),
        expected,
        found: state.kind(),
    }
}

impl Kernel for WoodKernel {
    fn scenario(&self) -> ScenarioKind {
        ScenarioKind::Wood
    }

    fn apply(
        &self,
        state: &ScenarioState,
        draws: &mut dyn DrawSource,
    ) -> Result<(Outcome, ScenarioState)> {
        let ScenarioState::Wood(w) = state else {
            return Err(mismatch(self.0.id(), ScenarioKind::Wood, state));
        };
        let (o, post) = match self.0 {
            WoodTest::Burnability => burnability_observe(w, draws)?,
            WoodTest::NonBurnability => non_burnability_observe(w, draws)?,
            WoodTest::Floatability => floatability_observe(w, draws)?,
        };
        Ok((o, post.into()))
    }

    fn yes_probability(&self, state: &ScenarioState) -> Option<f64> {
        let ScenarioState::Wood(w) = state else {
            return None;
        };
        let yes = match self.0 {
            WoodTest::Burnability => w.burns(),
            WoodTest::NonBurnability => !w.burns(),
            WoodTest::Floatability => !w.is_ashes(),
        };
        Some(if yes { 1.0 } else { 0.0 })
    }
}

#[derive(Debug, Clone)]
pub struct IncompressibilityKernel;

impl Kernel for IncompressibilityKernel {
    fn scenario(&self) -> ScenarioKind {
        ScenarioKind::Solid
    }

    fn apply(
        &self,
        state: &ScenarioState,
        draws: &mut dyn DrawSource,
    ) -> Result<(Outcome, ScenarioState)> {
        let ScenarioState::Solid(s) = state else {
            return Err(mismatch("incompressibility", ScenarioKind::Solid, state));
        };
        let (o, post) = incompressibility_observe(s, draws)?;
        Ok((o, post.into()))
    }

    fn yes_probability(&self, state: &ScenarioState) -> Option<f64> {
        let ScenarioState::Solid(s) = state else {
            return None;
        };
        Some(if s.compaction_ratio <= INCOMPRESSIBILITY_THRESHOLD {
            1.0
        } else {
            0.0
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElasticTest {
    LeftHandedness,
    Fragmentation,
    NonFragmentation,
}

impl ElasticTest {
    fn id(self) -> &'static str {
        match self {
            ElasticTest::LeftHandedness => "left-handedness",
            ElasticTest::Fragmentation => "fragmentation",
            ElasticTest::NonFragmentation => "non-fragmentation",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ElasticKernel(pub ElasticTest);

impl Kernel for ElasticKernel {
    fn scenario(&self) -> ScenarioKind {
        ScenarioKind::ElasticBand
    }

    fn apply(
        &self,
        state: &ScenarioState,
        draws: &mut dyn DrawSource,
    ) -> Result<(Outcome, ScenarioState)> {
        let ScenarioState::ElasticBand(e) = state else {
            return Err(mismatch(self.0.id(), ScenarioKind::ElasticBand, state));
        };
        let (o, post) = match self.0 {
            ElasticTest::LeftHandedness => left_handedness_observe(e, draws)?,
            ElasticTest::Fragmentation => fragmentation_observe(e, draws)?,
            ElasticTest::NonFragmentation => non_fragmentation_observe(e, draws)?,
        };
        Ok((o, post.into()))
    }

    fn yes_probability(&self, state: &ScenarioState) -> Option<f64> {
        let ScenarioState::ElasticBand(e) = state else {
            return None;
        };
        let n = e.fragments.len() as f64;
        Some(match self.0 {
            ElasticTest::LeftHandedness => 0.5,
            ElasticTest::Fragmentation => e.sub_half_count() as f64 / n,
            ElasticTest::NonFragmentation => e.super_half_count() as f64 / n,
        })
    }

    fn branches(&self, state: &ScenarioState) -> Result<Vec<Branch>> {
        let ScenarioState::ElasticBand(e) = state else {
            return Err(mismatch(self.0.id(), ScenarioKind::ElasticBand, state));
        };
        // (probability, draw) per branch.
        let picks: Vec<(f64, f64, bool)> = match self.0 {
            // Every post-state of the same outcome has repeat probability 1/2.
            ElasticTest::LeftHandedness => vec![(0.5, 0.75, true), (0.5, 0.25, true)],
            ElasticTest::Fragmentation | ElasticTest::NonFragmentation => {
                let n = e.fragments.len();
                let mut by_outcome: Vec<(Outcome, usize, usize)> = Vec::new();
                for i in 0..n {
                    let draw = (i as f64 + 0.5) / n as f64;
                    let (o, _) = self.apply(state, &mut ReplayDraws::new(&[draw]))?;
                    match by_outcome.iter_mut().find(|(seen, _, _)| *seen == o) {
                        Some(entry) => entry.2 += 1,
                        None => by_outcome.push((o, i, 1)),
                    }
                }
                by_outcome
                    .into_iter()
                    .map(|(_, i, count)| {
                        (count as f64 / n as f64, (i as f64 + 0.5) / n as f64, false)
                    })
                    .collect()
            }
        };
        picks
            .into_iter()
            .map(|(probability, draw, representative)| {
                let draws = vec![draw];
                let (outcome, post_state) = self.apply(state, &mut ReplayDraws::new(&draws))?;
                Ok(Branch {
                    outcome,
                    post_state,
                    draws,
                    probability,
                    representative,
                })
            })
            .collect()
    }
}

pub fn burnability() -> ObservationProcess {
    ObservationProcess::new(
        "burnability",
        "hold the wood in the flame of a match; yes if it burns",
        WoodKernel(WoodTest::Burnability),
    )
}

pub fn non_burnability() -> ObservationProcess {
    ObservationProcess::new(
        "non-burnability",
        "burnability procedure with the answer inverted",
        WoodKernel(WoodTest::NonBurnability),
    )
}

pub fn floatability() -> ObservationProcess {
    ObservationProcess::new(
        "floatability",
        "immerse the wood in water; yes if it floats",
        WoodKernel(WoodTest::Floatability),
    )
}

pub fn incompressibility() -> ObservationProcess {
    ObservationProcess::new(
        "incompressibility",
        "press the solid; yes if its volume drops by at most 1%",
        IncompressibilityKernel,
    )
}

pub fn left_handedness() -> ObservationProcess {
    ObservationProcess::new(
        "left-handedness",
        "stretch the longest fragment until it breaks; yes if the longer piece stays in the left hand",
        ElasticKernel(ElasticTest::LeftHandedness),
    )
}

pub fn fragmentation() -> ObservationProcess {
    ObservationProcess::new(
        "fragmentation",
        "pick a fragment blindly; yes if shorter than half the original length",
        ElasticKernel(ElasticTest::Fragmentation),
    )
}

pub fn non_fragmentation() -> ObservationProcess {
    ObservationProcess::new(
        "non-fragmentation",
        "pick a fragment blindly; yes if longer than half the original length",
        ElasticKernel(ElasticTest::NonFragmentation),
    )
}
