#![allow(dead_code)]

use std::collections::BTreeMap;

use leadoff_core::models::*;
use leadoff_core::sim::{GroundTruth, PitchModel};
use leadoff_core::state::LeadGrid;
use leadoff_core::transitions::*;

/// Same coefficients as the shipped `coeffs.json` fixture, without named players.
pub fn fixture_models() -> ModelSet {
    use FixedTerm::*;
    let model = |kind, intercept, fixed: &[(FixedTerm, f64)], sd: &[(Role, f64)]| {
        LogisticModel::new(kind, intercept, fixed_terms(fixed), sd.iter().copied().collect(), BTreeMap::new()).unwrap()
    };
    ModelSet::new(
        model(
            ModelKind::PickoffAttempt,
            -6.0,
            &[(Balls, 0.05), (Strikes, -0.05), (Outs, 0.0), (Diseng1, -0.8), (Diseng2, -1.6), (Lead, 0.35)],
            &[(Role::Pitcher, 0.5)],
        ),
        model(ModelKind::PickoffSuccess, -9.0, &[(Lead, 0.45)], &[(Role::Pitcher, 0.4)]),
        model(
            ModelKind::StealAttempt,
            -2.2,
            &[(Balls, 0.1), (Strikes, -0.1), (Outs, -0.2), (Diseng1, 0.2), (Diseng2, 0.4), (SprintSpeed, 0.3), (ArmStrength, -0.05)],
            &[(Role::Runner, 0.6), (Role::Pitcher, 0.3), (Role::Catcher, 0.2)],
        ),
        model(
            ModelKind::StealSuccess,
            -1.0,
            &[(Lead, 0.2), (SprintSpeed, 0.25), (ArmStrength, -0.08)],
            &[(Role::Runner, 0.3), (Role::Pitcher, 0.2), (Role::Catcher, 0.25)],
        ),
        CovariateMeans { sprint_speed: 27.0, arm_strength: 82.0 },
        CovariateConvention::Centered,
    )
    .unwrap()
}

pub fn truth_rows() -> ConditionalRows {
    ConditionalRows::collect(&GroundTruth::new(PitchModel::default()).unwrap()).unwrap()
}

/// Certified ground-truth kernel over `grid`.
pub fn truth_kernel(mode: KernelMode, grid: LeadGrid) -> TransitionKernel {
    let opts = AssemblyOptions { grid, ..AssemblyOptions::new(mode) };
    let mut k = assemble_kernel(&truth_rows(), &fixture_models(), &opts).unwrap();
    k.game.certify(50).unwrap();
    k
}
