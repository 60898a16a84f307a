use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use super::{Observer, Scenario};
use crate::error::{Error, Result};
use crate::evolution::{rotation_hamiltonian, EvolutionSchedule, RotationPair, Segment};
use crate::operator::embed;
use crate::projector::ProjectorFamily;
use crate::space::HilbertSpace;
use crate::state::StateVector;
use crate::{C64, NORM_TOL};

/// Qubit `S`, friend `F` and Wigner `W`. Over `[0,1]` the friend records `S`;
/// over `[1,2]` Wigner rotates `|±⟩_SF|0⟩_W` into `|±⟩_SF|±⟩_W`, where
/// `|±⟩_SF = (|1,1⟩ ± |2,2⟩)/√2`.
pub fn build_brukner(c1: C64, c2: C64) -> Result<Scenario> {
    let norm = c1.norm_sqr() + c2.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(norm));
    }
    let space = HilbertSpace::new(&[
        ("S", &["1", "2"]),
        ("F", &["0", "1", "2"]),
        ("W", &["0", "+", "-"]),
    ])?;
    let one = C64::new(1.0, 0.0);

    let sf = space.restrict(&["S", "F"])?;
    let record = rotation_hamiltonian(
        &["1", "2"]
            .iter()
            .map(|s| {
                Ok(RotationPair::quarter_turn(
                    StateVector::basis(sf.clone(), &[s, "0"])?,
                    StateVector::basis(sf.clone(), &[s, s])?,
                ))
            })
            .collect::<Result<Vec<_>>>()?,
        1.0,
    )?;

    let r = C64::new(FRAC_1_SQRT_2, 0.0);
    let mut wigner = Vec::new();
    for (z, sign) in [("+", 1.0), ("-", -1.0)] {
        let terms = |w: &'static str| -> Result<StateVector> {
            StateVector::superposition(
                space.clone(),
                &[(r, &["1", "1", w]), (r * sign, &["2", "2", w])],
            )
        };
        wigner.push(RotationPair::quarter_turn(terms("0")?, terms(z)?));
    }
    let wigner = rotation_hamiltonian(&wigner, 1.0)?;

    let schedule = EvolutionSchedule::new(vec![
        Segment::new(0.0, 1.0, embed(&record, &space)?)?,
        Segment::new(1.0, 2.0, wigner)?,
    ])?;
    let initial = StateVector::superposition(
        space.clone(),
        &[(c1 * one, &["1", "0", "0"]), (c2 * one, &["2", "0", "0"])],
    )?;
    let family = Arc::new(ProjectorFamily::from_subsystem_basis(space.clone(), "F")?);
    let scenario = Scenario {
        name: "brukner".into(),
        space,
        schedule,
        initial_state: Arc::new(initial),
        initial_time: 0.0,
        observers: vec![Observer::new("F", family, vec![0.0, 1.0, 2.0], Some("0"))?],
        memory: None,
    };
    scenario
        .validate()
        .map_err(|e| Error::InvalidParameter(format!("brukner construction: {e}")))?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(c1_sq: f64) -> (C64, C64) {
        (
            C64::new(libm::sqrt(c1_sq), 0.0),
            C64::new(libm::sqrt(1.0 - c1_sq), 0.0),
        )
    }

    #[test]
    fn psi_one_and_two_match_closed_forms() {
        let (c1, c2) = (C64::new(0.6, 0.0), C64::new(0.0, 0.8));
        let s = build_brukner(c1, c2).unwrap();
        let psi1 = s.state_at(1.0).unwrap();
        assert!((psi1.amplitude(&["1", "1", "0"]).unwrap() - c1).norm() < 1e-12);
        assert!((psi1.amplitude(&["2", "2", "0"]).unwrap() - c2).norm() < 1e-12);
        let psi2 = s.state_at(2.0).unwrap();
        // (c1 ± c2)/√2 · |±⟩_SF|±⟩_W
        let r = FRAC_1_SQRT_2;
        let plus = (c1 + c2) * r * r;
        let minus = (c1 - c2) * r * r;
        assert!((psi2.amplitude(&["1", "1", "+"]).unwrap() - plus).norm() < 1e-12);
        assert!((psi2.amplitude(&["2", "2", "+"]).unwrap() - plus).norm() < 1e-12);
        assert!((psi2.amplitude(&["1", "1", "-"]).unwrap() - minus).norm() < 1e-12);
        assert!((psi2.amplitude(&["2", "2", "-"]).unwrap() + minus).norm() < 1e-12);
    }

    #[test]
    fn equal_weights_already_in_plus_state() {
        let (c1, c2) = real(0.5);
        let s = build_brukner(c1, c2).unwrap();
        let fam = &s.observer("F").unwrap().family;
        let w = fam.born_weights(&s.state_at(2.0).unwrap()).unwrap();
        assert!((w[1] - 0.5).abs() < 1e-12);
        let psi1 = s.state_at(1.0).unwrap();
        assert!(psi1.amplitude(&["1", "1", "0"]).unwrap().re > 0.70);
    }

    #[test]
    fn deterministic_measurement_when_c2_vanishes() {
        let s = build_brukner(C64::new(1.0, 0.0), C64::new(0.0, 0.0)).unwrap();
        let fam = &s.observer("F").unwrap().family;
        let w = fam.born_weights(&s.state_at(1.0).unwrap()).unwrap();
        assert!((w[1] - 1.0).abs() < 1e-12 && w[2].abs() < 1e-12);
    }

    #[test]
    fn unnormalized_coefficients_rejected() {
        assert!(matches!(
            build_brukner(C64::new(1.0, 0.0), C64::new(1.0, 0.0)),
            Err(Error::NotNormalized(_))
        ));
    }
}
