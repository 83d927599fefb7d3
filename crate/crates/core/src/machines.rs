//! The spin quantum machine, its ε-model generalization and the sawtooth
//! ruler.
//!
//! The quantum machine's particle sits on a sphere of diameter `L`. An
//! elastic stretched between the antipodal points `p- = -(L/2)ρ` and
//! `p+ = +(L/2)ρ` catches the particle where it falls orthogonally, at
//! distance `(L/2)(1 + cos γ)` from `p-`, with `γ` the angle between the
//! particle and `ρ`. The elastic then breaks at a hidden point; when the
//! break falls between `p-` and the particle, the particle is pulled to
//! `p+` (outcome yes), otherwise to `p-`.
//!
//! Positions along the elastic are measured from `p-`, in model units.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{
    Branch, DrawSource, Kernel, ObservationProcess, Outcome, ReplayDraws, ScenarioKind,
    ScenarioState,
};

const UNIT_TOLERANCE: f64 = 1e-9;

// Values of cos γ this close to -1, 0 or 1 are taken as exact.
const COS_SNAP: f64 = 1e-12;

/// Rounds cos γ onto the poles and the equator.
fn snap_cos(c: f64) -> f64 {
    let c = c.clamp(-1.0, 1.0);
    if 1.0 - c <= COS_SNAP {
        1.0
    } else if c + 1.0 <= COS_SNAP {
        -1.0
    } else if c.abs() <= COS_SNAP {
        0.0
    } else {
        c
    }
}

fn norm(v: [f64; 3]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn check_unit(v: [f64; 3], what: &str) -> Result<()> {
    let n = norm(v);
    if !n.is_finite() || (n - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::InvalidState(format!(
            "{what} must be a unit vector, got norm {n}"
        )));
    }
    Ok(())
}

fn normalized(v: [f64; 3], what: &str) -> Result<[f64; 3]> {
    let n = norm(v);
    if !n.is_finite() || n == 0.0 {
        return Err(Error::InvalidState(format!("{what} cannot be normalized")));
    }
    Ok([v[0] / n, v[1] / n, v[2] / n])
}

/// Position of the particle on the sphere, as a unit direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint {
    direction: [f64; 3],
}

impl SpherePoint {
    pub fn new(direction: [f64; 3]) -> Result<Self> {
        check_unit(direction, "sphere point")?;
        Ok(Self { direction })
    }

    pub fn from_vector(v: [f64; 3]) -> Result<Self> {
        Ok(Self {
            direction: normalized(v, "sphere point")?,
        })
    }

    /// Point at polar angle `theta` from +z and azimuth `phi`.
    pub fn from_polar(theta: f64, phi: f64) -> Self {
        Self {
            direction: [
                theta.sin() * phi.cos(),
                theta.sin() * phi.sin(),
                theta.cos(),
            ],
        }
    }

    pub fn direction(&self) -> [f64; 3] {
        self.direction
    }

    /// The antipodal point.
    pub fn antipode(&self) -> Self {
        let [x, y, z] = self.direction;
        Self {
            direction: [-x, -y, -z],
        }
    }
}

impl fmt::Display for SpherePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [x, y, z] = self.direction;
        write!(f, "sphere:({x} {y} {z})")
    }
}

/// How the measuring elastic breaks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BreakageProfile {
    /// Uniformly breakable along its whole length.
    Uniform,
    /// Always breaks at `x`, measured from `p-`.
    Point { x: f64 },
    /// Uniformly breakable only on the middle segment of width `epsilon * L`.
    Segment { epsilon: f64 },
}

impl BreakageProfile {
    fn validate(&self, length: f64) -> Result<()> {
        match *self {
            BreakageProfile::Uniform => Ok(()),
            BreakageProfile::Point { x } if (0.0..=length).contains(&x) => Ok(()),
            BreakageProfile::Point { x } => Err(Error::InvalidState(format!(
                "break point {x} outside [0, {length}]"
            ))),
            BreakageProfile::Segment { epsilon } if (0.0..=1.0).contains(&epsilon) => Ok(()),
            BreakageProfile::Segment { epsilon } => Err(Error::InvalidState(format!(
                "segment fraction {epsilon} outside [0, 1]"
            ))),
        }
    }
}

/// The elastic band used to observe the particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticApparatus {
    orientation: [f64; 3],
    length: f64,
    profile: BreakageProfile,
}

impl ElasticApparatus {
    pub fn new(orientation: [f64; 3], length: f64, profile: BreakageProfile) -> Result<Self> {
        check_unit(orientation, "elastic orientation")?;
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidState(format!(
                "elastic length must be positive, got {length}"
            )));
        }
        profile.validate(length)?;
        Ok(Self {
            orientation,
            length,
            profile,
        })
    }

    /// Apparatus oriented along +z. Panics on an invalid length or profile.
    pub fn along_z(length: f64, profile: BreakageProfile) -> Self {
        Self::new([0.0, 0.0, 1.0], length, profile).expect("invalid apparatus")
    }

    pub fn orientation(&self) -> [f64; 3] {
        self.orientation
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn profile(&self) -> BreakageProfile {
        self.profile
    }

    /// The end-points `(p-, p+)`.
    pub fn endpoints(&self) -> ([f64; 3], [f64; 3]) {
        let h = self.length / 2.0;
        let [x, y, z] = self.orientation;
        ([-h * x, -h * y, -h * z], [h * x, h * y, h * z])
    }

    /// `cos γ` between the particle and `p+`.
    pub fn cos_gamma(&self, state: &SpherePoint) -> f64 {
        snap_cos(dot(state.direction, self.orientation))
    }

    /// Where the particle lands on the elastic, measured from `p-`.
    pub fn landing_position(&self, state: &SpherePoint) -> f64 {
        self.length / 2.0 * (1.0 + self.cos_gamma(state))
    }

    pub fn plus(&self) -> SpherePoint {
        SpherePoint {
            direction: self.orientation,
        }
    }

    pub fn minus(&self) -> SpherePoint {
        self.plus().antipode()
    }

    pub fn yes_probability(&self, state: &SpherePoint) -> f64 {
        prob_from_cos(self.cos_gamma(state), self.profile, self.length)
    }
}

/// One quantum-machine observation.
///
/// Draws: one for `Uniform` and `Segment`, none for `Point`. A break exactly
/// at the particle pulls it to `p-` (outcome no), except for the degenerate
/// `Segment { epsilon: 0 }` elastic with the particle on the midpoint, where
/// the draw decides the side (`u < 1/2` is yes).
pub fn quantum_machine_observe(
    state: &SpherePoint,
    apparatus: &ElasticApparatus,
    draws: &mut dyn DrawSource,
) -> Result<(Outcome, SpherePoint)> {
    let length = apparatus.length;
    let landing = apparatus.landing_position(state);
    let yes = match apparatus.profile {
        BreakageProfile::Uniform => length * draws.next_draw()? < landing,
        BreakageProfile::Point { x } => x < landing,
        BreakageProfile::Segment { epsilon } => {
            let u = draws.next_draw()?;
            let mid = length / 2.0;
            if epsilon == 0.0 && landing == mid {
                u < 0.5
            } else {
                mid + epsilon * length * (u - 0.5) < landing
            }
        }
    };
    let post = if yes {
        apparatus.plus()
    } else {
        apparatus.minus()
    };
    Ok((Outcome::from_bool(yes), post))
}

/// Closed-form probability that the particle ends at `p+`.
///
/// `length` only matters for `Point` profiles, whose break position is in
/// absolute units.
pub fn quantum_machine_prob(gamma: f64, profile: BreakageProfile, length: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&gamma) {
        return Err(Error::Domain(format!("gamma {gamma} outside [0, pi]")));
    }
    profile.validate(length)?;
    Ok(prob_from_cos(snap_cos(gamma.cos()), profile, length))
}

fn prob_from_cos(cos_gamma: f64, profile: BreakageProfile, length: f64) -> f64 {
    match profile {
        BreakageProfile::Uniform => (1.0 + cos_gamma) / 2.0,
        BreakageProfile::Point { x } => {
            if length / 2.0 * (1.0 + cos_gamma) > x {
                1.0
            } else {
                0.0
            }
        }
        BreakageProfile::Segment { epsilon: 0.0 } => {
            if cos_gamma > 0.0 {
                1.0
            } else if cos_gamma < 0.0 {
                0.0
            } else {
                0.5
            }
        }
        BreakageProfile::Segment { epsilon } => ((1.0 + cos_gamma / epsilon) / 2.0).clamp(0.0, 1.0),
    }
}

#[derive(Debug, Clone)]
pub struct QuantumMachineKernel {
    pub apparatus: ElasticApparatus,
}

fn sphere_of<'a>(state: &'a ScenarioState, who: &str) -> Result<&'a SpherePoint> {
    match state {
        ScenarioState::SpherePoint(s) => Ok(s),
        other => Err(Error::ScenarioMismatch {
            process: who.to_owned(),
            expected: ScenarioKind::SpherePoint,
            found: other.kind(),
        }),
    }
}

impl Kernel for QuantumMachineKernel {
    fn scenario(&self) -> ScenarioKind {
        ScenarioKind::SpherePoint
    }

    fn apply(
        &self,
        state: &ScenarioState,
        draws: &mut dyn DrawSource,
    ) -> Result<(Outcome, ScenarioState)> {
        let s = sphere_of(state, "quantum-machine")?;
        let (o, post) = quantum_machine_observe(s, &self.apparatus, draws)?;
        Ok((o, post.into()))
    }

    fn yes_probability(&self, state: &ScenarioState) -> Option<f64> {
        sphere_of(state, "quantum-machine")
            .ok()
            .map(|s| self.apparatus.yes_probability(s))
    }

    fn branches(&self, state: &ScenarioState) -> Result<Vec<Branch>> {
        let s = sphere_of(state, "quantum-machine")?;
        let p = self.apparatus.yes_probability(s);
        if let BreakageProfile::Point { .. } = self.apparatus.profile {
            let (o, post) =
                quantum_machine_observe(s, &self.apparatus, &mut ReplayDraws::new(&[]))?;
            return Ok(vec![Branch {
                outcome: o,
                post_state: post.into(),
                draws: vec![],
                probability: 1.0,
                representative: false,
            }]);
        }
        // For the sampled profiles the yes region is u < p.
        let mut out = Vec::with_capacity(2);
        for (mass, u) in [(p, p / 2.0), (1.0 - p, (1.0 + p) / 2.0)] {
            if mass <= 0.0 {
                continue;
            }
            let draws = vec![u];
            let (o, post) =
                quantum_machine_observe(s, &self.apparatus, &mut ReplayDraws::new(&draws))?;
            out.push(Branch {
                outcome: o,
                post_state: post.into(),
                draws,
                probability: mass,
                representative: false,
            });
        }
        Ok(out)
    }
}

/// The `(u, ρ)`-position observation: yes when the particle ends at `p+`.
pub fn quantum_machine(apparatus: ElasticApparatus) -> ObservationProcess {
    let description = match apparatus.profile {
        BreakageProfile::Uniform => "quantum machine, uniformly breakable elastic".to_owned(),
        BreakageProfile::Point { x } => format!("quantum machine, elastic breaking at {x}"),
        BreakageProfile::Segment { epsilon } => {
            format!("epsilon-model, breakable middle segment of fraction {epsilon}")
        }
    };
    ObservationProcess::new(
        "quantum-machine",
        description,
        QuantumMachineKernel { apparatus },
    )
}

/// Horizontal coordinate of a point particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinePosition {
    x: f64,
}

impl LinePosition {
    pub fn new(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::InvalidState(format!("position {x} is not finite")));
        }
        Ok(Self { x })
    }

    pub fn x(&self) -> f64 {
        self.x
    }
}

impl fmt::Display for LinePosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line:x={}", self.x)
    }
}

/// Ruler whose cavity centers sit at `offset + k * pitch`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SawtoothRuler {
    pitch: f64,
    offset: f64,
}

/// Which cavity a particle falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CavityFate {
    Certain(i64),
    /// The particle sits on a tooth tip between cavities `k` and `k + 1`.
    Tip(i64),
}

impl SawtoothRuler {
    pub fn new(pitch: f64, offset: f64) -> Result<Self> {
        if !(pitch > 0.0 && pitch.is_finite()) || !offset.is_finite() {
            return Err(Error::InvalidState(format!(
                "ruler needs a positive pitch and finite offset, got ({pitch}, {offset})"
            )));
        }
        Ok(Self { pitch, offset })
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn center(&self, k: i64) -> f64 {
        self.offset + k as f64 * self.pitch
    }

    pub fn fate(&self, x: f64) -> Result<CavityFate> {
        let t = (x - self.offset) / self.pitch;
        let lower = t.floor();
        if lower.is_nan() || lower.abs() >= 9.0e15 {
            return Err(Error::Domain(format!(
                "position {x} beyond the ruler's range"
            )));
        }
        let frac = t - lower;
        let k = lower as i64;
        Ok(if frac == 0.5 {
            CavityFate::Tip(k)
        } else if frac < 0.5 {
            CavityFate::Certain(k)
        } else {
            CavityFate::Certain(k + 1)
        })
    }

    /// Probability that a particle at `x` ends in cavity `target`.
    pub fn cavity_probability(&self, x: f64, target: i64) -> Result<f64> {
        Ok(match self.fate(x)? {
            CavityFate::Certain(k) => f64::from(u8::from(k == target)),
            CavityFate::Tip(k) if target == k || target == k + 1 => 0.5,
            CavityFate::Tip(_) => 0.0,
        })
    }
}

/// Snaps the particle into the nearest cavity and returns its index.
///
/// Draws: none, except on a tooth tip where one draw picks the lower
/// neighbour when `u < 1/2`.
pub fn sawtooth_observe(
    state: &LinePosition,
    ruler: &SawtoothRuler,
    draws: &mut dyn DrawSource,
) -> Result<(i64, LinePosition)> {
    let k = match ruler.fate(state.x)? {
        CavityFate::Certain(k) => k,
        CavityFate::Tip(k) => {
            if draws.next_draw()? < 0.5 {
                k
            } else {
                k + 1
            }
        }
    };
    Ok((k, LinePosition::new(ruler.center(k))?))
}

/// Sawtooth position read as a yes/no property: "the particle is found in
/// cavity `target`".
#[derive(Debug, Clone)]
pub struct SawtoothKernel {
    pub ruler: SawtoothRuler,
    pub target: i64,
}

fn line_of(state: &ScenarioState) -> Result<&LinePosition> {
    match state {
        ScenarioState::LinePosition(s) => Ok(s),
        other => Err(Error::ScenarioMismatch {
            process: "sawtooth-position".into(),
            expected: ScenarioKind::LinePosition,
            found: other.kind(),
        }),
    }
}

impl Kernel for SawtoothKernel {
    fn scenario(&self) -> ScenarioKind {
        ScenarioKind::LinePosition
    }

    fn apply(
        &self,
        state: &ScenarioState,
        draws: &mut dyn DrawSource,
    ) -> Result<(Outcome, ScenarioState)> {
        let (k, post) = sawtooth_observe(line_of(state)?, &self.ruler, draws)?;
        Ok((Outcome::from_bool(k == self.target), post.into()))
    }

    fn yes_probability(&self, state: &ScenarioState) -> Option<f64> {
        let s = line_of(state).ok()?;
        self.ruler.cavity_probability(s.x, self.target).ok()
    }

    fn branches(&self, state: &ScenarioState) -> Result<Vec<Branch>> {
        let s = line_of(state)?;
        let draw_sets: Vec<(f64, Vec<f64>)> = match self.ruler.fate(s.x)? {
            CavityFate::Certain(_) => vec![(1.0, vec![])],
            CavityFate::Tip(_) => vec![(0.5, vec![0.25]), (0.5, vec![0.75])],
        };
        draw_sets
            .into_iter()
            .map(|(probability, draws)| {
                let (outcome, post_state) = self.apply(state, &mut ReplayDraws::new(&draws))?;
                Ok(Branch {
                    outcome,
                    post_state,
                    draws,
                    probability,
                    representative: false,
                })
            })
            .collect()
    }
}

pub fn sawtooth_position(ruler: SawtoothRuler, target: i64) -> ObservationProcess {
    ObservationProcess::new(
        "sawtooth-position",
        format!("sawtooth ruler reads cavity {target}"),
        SawtoothKernel { ruler, target },
    )
}
