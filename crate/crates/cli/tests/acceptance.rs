//! Acceptance suite. Prints one line per criterion and exits non-zero if
//! any fails. Reference values are computed here, independently of the
//! library's closed forms.

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use obsim_core::exemplars::{self, ElasticBandState, SolidState};
use obsim_core::machines::{
    self, quantum_machine_prob, BreakageProfile, ElasticApparatus, SpherePoint,
};
use obsim_core::product::{self, ProductObservation};
use obsim_core::stats::{self, ResetPolicy};
use obsim_core::taxonomy;
use obsim_core::{Moisture, Outcome, ReplayDraws, ScenarioState, WoodState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 42;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn uniform_apparatus() -> ElasticApparatus {
    ElasticApparatus::along_z(1.0, BreakageProfile::Uniform)
}

fn at(gamma: f64) -> ScenarioState {
    SpherePoint::from_polar(gamma, 0.0).into()
}

fn spin_statistics() -> Verdict {
    let started = Instant::now();
    let n = 100_000u64;
    let qm = machines::quantum_machine(uniform_apparatus());
    let angles = [
        0.0,
        PI / 6.0,
        PI / 4.0,
        PI / 3.0,
        PI / 2.0,
        2.0 * PI / 3.0,
        5.0 * PI / 6.0,
        PI,
    ];
    let mut worst = 0.0f64;
    for (j, gamma) in angles.into_iter().enumerate() {
        let r = stats::run_trials(
            &qm,
            &at(gamma),
            n,
            stats::point_seed(SEED, j as u64),
            ResetPolicy::FreshState,
        )
        .map_err(|e| e.to_string())?;
        let p = (gamma / 2.0).cos().powi(2);
        if gamma == 0.0 || gamma == PI {
            let expected = if gamma == 0.0 { n } else { 0 };
            ensure(r.yes == expected, || {
                format!("gamma {gamma}: {} yes, expected {expected}", r.yes)
            })?;
            continue;
        }
        let tol = f64::max(0.005, 4.0 * (p * (1.0 - p) / n as f64).sqrt());
        let dev = (r.p_hat - p).abs();
        worst = worst.max(dev / tol);
        ensure(dev <= tol, || {
            format!(
                "gamma {gamma:.4}: p_hat {} vs {p:.6}, tolerance {tol:.4}",
                r.p_hat
            )
        })?;
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(secs < 5.0, || format!("took {secs:.2} s"))?;
    Ok(format!(
        "8 angles x {n} trials, worst deviation {:.0}% of tolerance, {secs:.2} s",
        worst * 100.0
    ))
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f((a + b) / 2.0) + f(b))
}

fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = (a + b) / 2.0;
    let (l, r) = (simpson(f, a, m), simpson(f, m, b));
    if depth == 0 || (l + r - whole).abs() <= 15.0 * tol {
        return l + r + (l + r - whole) / 15.0;
    }
    adaptive(f, a, m, l, tol / 2.0, depth - 1) + adaptive(f, m, b, r, tol / 2.0, depth - 1)
}

/// P(break point left of the particle) by quadrature of the break density.
fn quadrature_yes(gamma: f64, eps: f64) -> f64 {
    let (lo, hi) = (0.5 - eps / 2.0, 0.5 + eps / 2.0);
    let density = move |x: f64| {
        if (lo..=hi).contains(&x) {
            1.0 / eps
        } else {
            0.0
        }
    };
    let landing = 0.5 * (1.0 + gamma.cos());
    let panels = 64;
    let h = landing / panels as f64;
    (0..panels)
        .map(|i| {
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            adaptive(&density, a, b, simpson(&density, a, b), 1e-13, 60)
        })
        .sum()
}

fn derived_clamp(gamma: f64, eps: f64) -> f64 {
    ((1.0 + gamma.cos() / eps) / 2.0).clamp(0.0, 1.0)
}

fn epsilon_regimes() -> Verdict {
    let grid: Vec<f64> = (0..25).map(|k| k as f64 * PI / 24.0).collect();
    let mut frozen = 0;
    let mut matched = 0;
    let mut worst = 0.0f64;
    for (i, eps) in [0.25, 0.5, 0.75].into_iter().enumerate() {
        let profile = BreakageProfile::Segment { epsilon: eps };
        let qm = machines::quantum_machine(ElasticApparatus::along_z(1.0, profile));
        for (j, &gamma) in grid.iter().enumerate() {
            let derived = derived_clamp(gamma, eps);
            let oracle = quadrature_yes(gamma, eps);
            let lib = quantum_machine_prob(gamma, profile, 1.0).map_err(|e| e.to_string())?;
            ensure(
                (derived - oracle).abs() < 1e-9 && (lib - oracle).abs() < 1e-9,
                || {
                    format!("eps {eps}, gamma {gamma:.4}: derived {derived}, library {lib}, quadrature {oracle}")
                },
            )?;
            let seed = stats::point_seed(stats::point_seed(SEED, i as u64), j as u64);
            let c = gamma.cos().abs();
            if c > eps {
                frozen += 1;
                let r = stats::run_trials(&qm, &at(gamma), 10_000, seed, ResetPolicy::FreshState)
                    .map_err(|e| e.to_string())?;
                ensure(r.yes == 0 || r.yes == r.trials, || {
                    format!("eps {eps}, gamma {gamma:.4}: {} of {} yes", r.yes, r.trials)
                })?;
            } else if c < eps {
                matched += 1;
                let r = stats::run_trials(&qm, &at(gamma), 100_000, seed, ResetPolicy::FreshState)
                    .map_err(|e| e.to_string())?;
                let dev = (r.p_hat - derived).abs();
                worst = worst.max(dev);
                ensure(dev <= 0.01, || {
                    format!(
                        "eps {eps}, gamma {gamma:.4}: p_hat {} vs {derived}",
                        r.p_hat
                    )
                })?;
            }
        }
    }
    for &gamma in &grid {
        let u = quantum_machine_prob(gamma, BreakageProfile::Uniform, 1.0)
            .map_err(|e| e.to_string())?;
        let s = quantum_machine_prob(gamma, BreakageProfile::Segment { epsilon: 1.0 }, 1.0)
            .map_err(|e| e.to_string())?;
        ensure(u == s, || {
            format!("gamma {gamma:.4}: uniform {u}, epsilon 1 {s}")
        })?;
    }
    Ok(format!(
        "quadrature agrees to 1e-9; {frozen} fixed points exact; {matched} random points within {worst:.4}"
    ))
}

fn choice_theorem() -> Verdict {
    let n = 10_000;
    let dry: ScenarioState = WoodState::intact(Moisture::Dry).into();
    let certain =
        ProductObservation::uniform(vec![exemplars::burnability(), exemplars::floatability()])
            .map_err(|e| e.to_string())?;
    let a = product::product_demo(&certain, &dry, n, SEED).map_err(|e| e.to_string())?;
    ensure(a.report.yes == n, || {
        format!("burnability*floatability: {} of {n} yes", a.report.yes)
    })?;

    let split = ProductObservation::uniform(vec![
        exemplars::non_burnability(),
        exemplars::floatability(),
    ])
    .map_err(|e| e.to_string())?;
    let b = product::product_demo(&split, &dry, n, SEED).map_err(|e| e.to_string())?;
    let (lo, hi) = stats::wilson_interval(n / 2, n, 0.99).map_err(|e| e.to_string())?;
    let p = b.report.p_hat;
    ensure(lo <= p && p <= hi, || {
        format!("non-burnability*floatability: {p} outside [{lo}, {hi}]")
    })?;
    let meet = product::meet_actual(&split, &dry).map_err(|e| e.to_string())?;
    ensure(!meet, || "meet reported actual".into())?;
    Ok(format!(
        "{n}/{n} yes; split product p_hat {p:.4} in [{lo:.4}, {hi:.4}], meet not actual"
    ))
}

fn band(state: &ScenarioState) -> &ElasticBandState {
    match state {
        ScenarioState::ElasticBand(b) => b,
        other => panic!("not a band: {other}"),
    }
}

fn elastic_suite() -> Verdict {
    let left = exemplars::left_handedness();
    let frag = exemplars::fragmentation();
    let start: ScenarioState = ElasticBandState::unbroken(1.0)
        .map_err(|e| e.to_string())?
        .into();

    // Trajectories: one long, many short.
    let mut trajectories = vec![(SEED, 10_000u64)];
    trajectories.extend((0..50).map(|s| (1_000 + s, 300)));
    let mut drift = 0.0f64;
    let mut actual_steps = 0u64;
    for (seed, steps) in trajectories {
        let mut draws = stats::trial_draws(seed, 0);
        let mut state = start.clone();
        let mut sub_half = 0;
        for step in 0..steps {
            state = left.apply(&state, &mut draws).map_err(|e| e.to_string())?.1;
            let b = band(&state);
            let total: f64 = b.fragments().iter().sum();
            drift = drift.max((total - 1.0).abs());
            let subs = b.fragments().iter().filter(|&&f| f < 0.5).count();
            ensure(subs >= sub_half, || {
                format!("seed {seed}, step {step}: sub-half count fell")
            })?;
            sub_half = subs;
            let below = b.fragments().iter().all(|&f| f < 0.5);
            let p = frag.yes_probability(&state).map_err(|e| e.to_string())?;
            ensure((p == 1.0) == below, || {
                format!("seed {seed}, step {step}: p = {p}, all below half {below}")
            })?;
            actual_steps += u64::from(below);
        }
    }
    ensure(drift <= 1e-9, || format!("length drift {drift:e}"))?;

    let n = 100_000;
    let r = stats::run_trials(&left, &start, n, SEED, ResetPolicy::FreshState)
        .map_err(|e| e.to_string())?;
    let (lo, hi) = stats::wilson_interval(n / 2, n, 0.99).map_err(|e| e.to_string())?;
    ensure(lo <= r.p_hat && r.p_hat <= hi, || {
        format!("left-handedness p_hat {} outside [{lo}, {hi}]", r.p_hat)
    })?;
    Ok(format!(
        "drift {drift:.1e}; {actual_steps} steps with fragmentation actual; left-handedness p_hat {:.4}",
        r.p_hat
    ))
}

fn creation_by_observation() -> Verdict {
    let inc = exemplars::incompressibility();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut none = ReplayDraws::new(&[]);
    for i in 0..100 {
        let v = rng.random_range(1e-3..1e3);
        let r = loop {
            let r = rng.random_range(0.01..1.0);
            if r > 0.01 {
                break r;
            }
        };
        let s: ScenarioState = SolidState::new(v, r).map_err(|e| e.to_string())?.into();
        let (first, post) = inc.apply(&s, &mut none).map_err(|e| e.to_string())?;
        let (second, _) = inc.apply(&post, &mut none).map_err(|e| e.to_string())?;
        ensure(first == Outcome::No && second == Outcome::Yes, || {
            format!("input {i} (V {v}, r {r}): {first} then {second}")
        })?;
    }
    Ok("100 randomized solids: no, then yes".into())
}

fn taxonomy_fixture() -> Verdict {
    let expected = [
        (
            "burnability",
            "invasive-destruction",
            "deterministic",
            "intrinsic",
        ),
        (
            "floatability",
            "invasive-discovery",
            "deterministic",
            "intrinsic",
        ),
        (
            "incompressibility",
            "invasive-creation",
            "deterministic",
            "intrinsic",
        ),
        (
            "sawtooth-position",
            "invasive-creation",
            "deterministic",
            "intrinsic",
        ),
        (
            "quantum-machine",
            "invasive-creation",
            "nowhere-deterministic",
            "intrinsic",
        ),
        (
            "left-handedness",
            "invasive-creation",
            "nowhere-deterministic",
            "ephemeral",
        ),
        (
            "fragmentation",
            "non-invasive-discovery",
            "intermediary",
            "ephemeral",
        ),
    ];
    let table = taxonomy::taxonomy_table(&taxonomy::registered_suite());
    let got: Vec<(String, String, String, String)> = table
        .iter()
        .map(|row| {
            let c = row
                .classification
                .as_ref()
                .map_err(|e| format!("{}: {e}", row.property))?;
            Ok((
                row.property.clone(),
                c.effect.to_string(),
                c.predictability.to_string(),
                c.persistence.to_string(),
            ))
        })
        .collect::<Result<_, String>>()?;
    let want: Vec<(String, String, String, String)> = expected
        .iter()
        .map(|(a, b, c, d)| (a.to_string(), b.to_string(), c.to_string(), d.to_string()))
        .collect();
    ensure(got == want, || format!("got {got:?}"))?;
    Ok("7 rows match".into())
}

fn run_all(dir: &Path, threads: usize) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_obsim"))
        .args([
            "all",
            "--seed",
            "7",
            "--trials",
            "20000",
            "--breaks",
            "2000",
            "--threads",
        ])
        .arg(threads.to_string())
        .arg("--out")
        .arg(dir)
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.success(), || {
        format!("obsim all --threads {threads}: {status}")
    })
}

fn harness_determinism() -> Verdict {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs = [(1, "t1"), (8, "t8"), (8, "t8-again")];
    for (threads, name) in runs {
        run_all(&tmp.path().join(name), threads)?;
    }
    let mut files = 0;
    for entry in std::fs::read_dir(tmp.path().join("t1")).map_err(|e| e.to_string())? {
        let name = entry.map_err(|e| e.to_string())?.file_name();
        let one = std::fs::read(tmp.path().join("t1").join(&name)).map_err(|e| e.to_string())?;
        for other in ["t8", "t8-again"] {
            let many =
                std::fs::read(tmp.path().join(other).join(&name)).map_err(|e| e.to_string())?;
            ensure(one == many, || {
                format!("{name:?} differs between t1 and {other}")
            })?;
        }
        files += 1;
    }
    ensure(files == 5, || format!("{files} report files"))?;
    Ok(format!(
        "{files} CSV files byte-identical across 1 and 8 threads"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("spin statistics follow cos^2(gamma/2)", spin_statistics),
        ("epsilon-model regime map", epsilon_regimes),
        ("non-deterministic choice theorem", choice_theorem),
        ("elastic-band suite", elastic_suite),
        ("creation by observation", creation_by_observation),
        ("taxonomy fixture", taxonomy_fixture),
        (
            "harness determinism across thread counts",
            harness_determinism,
        ),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let verdict = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match verdict {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {name}: {why}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
