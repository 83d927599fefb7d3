//! Product observations: test a conjunction of properties by choosing one
//! component test at random, performing it, and adopting its answer.

use crate::error::{Error, Result};
use crate::exemplars::{self, Moisture, WoodState};
use crate::model::{
    is_actual, Branch, DrawSource, Kernel, ObservationProcess, Outcome, PropertyDef, ScenarioKind,
    ScenarioState,
};
use crate::stats::{self, ResetPolicy, TrialReport};

const WEIGHT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct ProductObservation {
    components: Vec<ObservationProcess>,
    weights: Vec<f64>,
    // Upper ends of each component's choice interval.
    cumulative: Vec<f64>,
}

impl ProductObservation {
    /// Product with a uniform choice over `components`.
    pub fn uniform(components: Vec<ObservationProcess>) -> Result<Self> {
        let n = components.len();
        Self::weighted(components, vec![1.0 / n as f64; n])
    }

    pub fn weighted(components: Vec<ObservationProcess>, weights: Vec<f64>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::Domain(
                "a product needs at least one component".into(),
            ));
        };
        if weights.len() != components.len() {
            return Err(Error::Domain(format!(
                "{} weights for {} components",
                weights.len(),
                components.len()
            )));
        }
        if let Some(c) = components.iter().find(|c| c.scenario() != first.scenario()) {
            return Err(Error::Domain(format!(
                "component `{}` acts on {} states, `{}` on {}",
                c.id(),
                c.scenario(),
                first.id(),
                first.scenario()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::Domain(format!(
                "choice weights must be nonnegative: {weights:?}"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::Domain(format!(
                "choice weights sum to {total}, not 1"
            )));
        }
        let cumulative = weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        Ok(Self {
            components,
            weights,
            cumulative,
        })
    }

    pub fn components(&self) -> &[ObservationProcess] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Component selected by choice draw `u`.
    pub fn choose(&self, u: f64) -> usize {
        self.cumulative
            .iter()
            .zip(&self.weights)
            .position(|(&upper, &w)| w > 0.0 && u < upper)
            .unwrap_or_else(|| self.weights.iter().rposition(|&w| w > 0.0).unwrap_or(0))
    }

    fn choice_midpoint(&self, i: usize) -> f64 {
        let lower = if i == 0 { 0.0 } else { self.cumulative[i - 1] };
        (lower + self.cumulative[i]) / 2.0
    }

    pub fn into_process(self, id: impl Into<String>) -> ObservationProcess {
        let ids: Vec<&str> = self.components.iter().map(|c| c.id()).collect();
        let description = format!("product of {}", ids.join(", "));
        ObservationProcess::new(id, description, self)
    }
}

/// Runs one product observation. Consumes one draw for the choice, then
/// whatever the chosen component consumes. Returns the index of the chosen
/// component alongside its outcome and post-state.
pub fn product_observe(
    prod: &ProductObservation,
    state: &ScenarioState,
    draws: &mut dyn DrawSource,
) -> Result<(Outcome, ScenarioState, usize)> {
    let scenario = prod.components[0].scenario();
    if state.kind() != scenario {
        return Err(Error::ScenarioMismatch {
            process: "product".into(),
            expected: scenario,
            found: state.kind(),
        });
    }
    let chosen = prod.choose(draws.next_draw()?);
    let (outcome, post) = prod.components[chosen].apply(state, draws)?;
    Ok((outcome, post, chosen))
}

/// The meet of the components is actual iff every component that can be
/// chosen is actual. Not decidable if any component lacks analytics.
pub fn meet_actual(prod: &ProductObservation, state: &ScenarioState) -> Result<bool> {
    let mut all = true;
    for (c, &w) in prod.components.iter().zip(&prod.weights) {
        let actual = is_actual(&PropertyDef::new(c.id(), c.clone()), state)?;
        if w > 0.0 && !actual {
            all = false;
        }
    }
    Ok(all)
}

impl Kernel for ProductObservation {
    fn scenario(&self) -> ScenarioKind {
        self.components[0].scenario()
    }

    fn apply(
        &self,
        state: &ScenarioState,
        draws: &mut dyn DrawSource,
    ) -> Result<(Outcome, ScenarioState)> {
        let (o, post, _) = product_observe(self, state, draws)?;
        Ok((o, post))
    }

    fn yes_probability(&self, state: &ScenarioState) -> Option<f64> {
        let mut p = 0.0;
        for (c, w) in self.components.iter().zip(&self.weights) {
            p += w * c.yes_probability(state).ok()?;
        }
        Some(p)
    }

    fn branches(&self, state: &ScenarioState) -> Result<Vec<Branch>> {
        let mut out = Vec::new();
        for (i, (c, &w)) in self.components.iter().zip(&self.weights).enumerate() {
            if w <= 0.0 {
                continue;
            }
            for b in c.branches(state)? {
                let mut draws = Vec::with_capacity(b.draws.len() + 1);
                draws.push(self.choice_midpoint(i));
                draws.extend_from_slice(&b.draws);
                out.push(Branch {
                    draws,
                    probability: w * b.probability,
                    ..b
                });
            }
        }
        Ok(out)
    }
}

/// Outcome statistics of a product run, plus the facts that make the
/// non-deterministic choice argument: whether the meet is actual, and
/// whether every component is individually deterministic on the state.
#[derive(Debug, Clone)]
pub struct ProductDemoReport {
    pub report: TrialReport,
    pub meet_actual: bool,
    pub components_deterministic: bool,
    /// How many trials chose each component.
    pub choice_counts: Vec<u64>,
}

/// Runs `prod` on a freshly prepared `state` for each of `trials` trials.
pub fn product_demo(
    prod: &ProductObservation,
    state: &ScenarioState,
    trials: u64,
    seed: u64,
) -> Result<ProductDemoReport> {
    let process = prod.clone().into_process("product");
    let report = stats::run_trials(&process, state, trials, seed, ResetPolicy::FreshState)?;
    let mut choice_counts = vec![0u64; prod.components.len()];
    for i in 0..trials {
        let mut draws = stats::trial_draws(seed, i);
        choice_counts[prod.choose(draws.next_draw()?)] += 1;
    }
    let mut components_deterministic = true;
    for c in &prod.components {
        let p = c.yes_probability(state)?;
        components_deterministic &= p == 0.0 || p == 1.0;
    }
    Ok(ProductDemoReport {
        report,
        meet_actual: meet_actual(prod, state)?,
        components_deterministic,
        choice_counts,
    })
}

/// Product of non-burnability and floatability on fresh dry intact wood:
/// each component is deterministic, yet the product's outcome is not.
pub fn ndc_theorem_demo(trials: u64, seed: u64) -> Result<ProductDemoReport> {
    if trials == 0 {
        return Err(Error::Domain("at least one trial is required".into()));
    }
    let prod = ProductObservation::uniform(vec![
        exemplars::non_burnability(),
        exemplars::floatability(),
    ])?;
    product_demo(
        &prod,
        &WoodState::intact(Moisture::Dry).into(),
        trials,
        seed,
    )
}
