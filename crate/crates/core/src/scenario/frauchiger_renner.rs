use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use super::{Observer, Scenario};
use crate::error::{Error, Result};
use crate::evolution::{rotation_hamiltonian, EvolutionSchedule, RotationPair, Segment};
use crate::operator::{embed, Operator};
use crate::projector::ProjectorFamily;
use crate::space::HilbertSpace;
use crate::state::StateVector;
use crate::C64;

/// `C ⊗ S ⊗ F1 ⊗ F2 ⊗ W1 ⊗ W2`, dimension 324.
pub fn fr_space() -> Result<Arc<HilbertSpace>> {
    HilbertSpace::new(&[
        ("C", &["head", "tail"]),
        ("S", &["up", "down"]),
        ("F1", &["0", "h", "t"]),
        ("F2", &["0", "+", "-"]),
        ("W1", &["0", "ok", "f"]),
        ("W2", &["0", "ok", "f"]),
    ])
}

fn local_pairs(
    space: &Arc<HilbertSpace>,
    subsystems: &[&str],
    pairs: &[(&[&str], &[&str], f64)],
) -> Result<Operator> {
    let local = space.restrict(subsystems)?;
    let pairs = pairs
        .iter()
        .map(|(s, t, angle)| {
            Ok(RotationPair::new(
                StateVector::basis(local.clone(), s)?,
                StateVector::basis(local.clone(), t)?,
                *angle,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    embed(&rotation_hamiltonian(&pairs, 1.0)?, space)
}

/// Over `[1,2]`: on the `h` branch of `F1`, `S` turns from `up` to `down`; on
/// the `t` branch it turns halfway, to `(up + down)/√2`.
pub fn fr_conditional_preparation_segment() -> Result<Segment> {
    let space = fr_space()?;
    let h = local_pairs(
        &space,
        &["F1", "S"],
        &[
            (&["h", "up"], &["h", "down"], core::f64::consts::FRAC_PI_2),
            (&["t", "up"], &["t", "down"], FRAC_PI_4),
        ],
    )?;
    Segment::new(1.0, 2.0, h)
}

/// Basis change measurement: each `(state, record)` pair rotates
/// `state ⊗ |0⟩` into `state ⊗ |record⟩`.
fn ok_fail_measurement(
    space: &Arc<HilbertSpace>,
    measured: &[&str],
    terms: [&[&str]; 2],
    recorder: &str,
) -> Result<Operator> {
    let mut subs: Vec<&str> = measured.to_vec();
    subs.push(recorder);
    let local = space.restrict(&subs)?;
    let r = C64::new(FRAC_1_SQRT_2, 0.0);
    fn with<'a>(labels: &[&'a str], rec: &'a str) -> Vec<&'a str> {
        let mut v = labels.to_vec();
        v.push(rec);
        v
    }
    let mut pairs = Vec::new();
    // ok = (first - second)/√2, fail = (first + second)/√2
    for (record, sign) in [("ok", -1.0), ("f", 1.0)] {
        let state = |rec: &'static str| {
            StateVector::superposition(
                local.clone(),
                &[(r, &with(terms[0], rec)), (r * sign, &with(terms[1], rec))],
            )
        };
        pairs.push(RotationPair::quarter_turn(state("0")?, state(record)?));
    }
    embed(&rotation_hamiltonian(&pairs, 1.0)?, space)
}

/// The five-stage universe on `[0,5]` with observers `F2` (times 1..5) and the
/// joint `F1W1W2` (times 0, 1, 4, 5; alias `joint`).
pub fn build_frauchiger_renner() -> Result<Scenario> {
    let space = fr_space()?;
    let half = core::f64::consts::FRAC_PI_2;
    let coin = local_pairs(
        &space,
        &["C", "F1"],
        &[
            (&["head", "0"], &["head", "h"], half),
            (&["tail", "0"], &["tail", "t"], half),
        ],
    )?;
    let f2 = local_pairs(
        &space,
        &["S", "F2"],
        &[
            (&["up", "0"], &["up", "+"], half),
            (&["down", "0"], &["down", "-"], half),
        ],
    )?;
    let w1 = ok_fail_measurement(&space, &["C", "F1"], [&["head", "h"], &["tail", "t"]], "W1")?;
    let w2 = ok_fail_measurement(&space, &["S", "F2"], [&["down", "-"], &["up", "+"]], "W2")?;
    let schedule = EvolutionSchedule::new(vec![
        Segment::new(0.0, 1.0, coin)?,
        fr_conditional_preparation_segment()?,
        Segment::new(2.0, 3.0, f2)?,
        Segment::new(3.0, 4.0, w1)?,
        Segment::new(4.0, 5.0, w2)?,
    ])?;

    let initial = StateVector::superposition(
        space.clone(),
        &[
            (
                C64::new(libm::sqrt(1.0 / 3.0), 0.0),
                &["head", "up", "0", "0", "0", "0"],
            ),
            (
                C64::new(libm::sqrt(2.0 / 3.0), 0.0),
                &["tail", "up", "0", "0", "0", "0"],
            ),
        ],
    )?;
    let f2_family = Arc::new(ProjectorFamily::from_subsystem_basis(space.clone(), "F2")?);
    let joint = Arc::new(ProjectorFamily::from_joint_basis(
        space.clone(),
        &["F1", "W1", "W2"],
    )?);
    let scenario = Scenario {
        name: "frauchiger-renner".into(),
        space,
        schedule,
        initial_state: Arc::new(initial),
        initial_time: 0.0,
        observers: vec![
            Observer::new("F2", f2_family, vec![1.0, 2.0, 3.0, 4.0, 5.0], Some("0"))?,
            Observer::new("F1W1W2", joint, vec![0.0, 1.0, 4.0, 5.0], Some("(0,0,0)"))?
                .with_alias("joint"),
        ],
        memory: None,
    };
    scenario
        .validate()
        .map_err(|e| Error::InvalidParameter(format!("frauchiger-renner construction: {e}")))?;
    Ok(scenario)
}
