//! Shared fixtures for the criterion benches.

use skinlab_core::{
    assemble, strip_parameters, BoundaryCondition, BravaisSpec, EffectiveHamiltonian, FluxSpec,
    HofstadterParams, LatticeModel, Result, StripCut,
};

/// Non-reciprocal Harper strip at flux 1/3 with `h_y = 0.2`.
pub fn harper_strip() -> Result<(LatticeModel, StripCut, FluxSpec)> {
    let b = BravaisSpec::square();
    let model = HofstadterParams::new(1.0, 1.0, 0.0, 0.2)?.lattice_model(b)?;
    Ok((
        model,
        strip_parameters(&b, 0, 1)?,
        FluxSpec::rational(1, 3)?,
    ))
}

pub fn harper_hamiltonian(len: usize, bc: BoundaryCondition) -> Result<EffectiveHamiltonian> {
    let (model, cut, flux) = harper_strip()?;
    assemble(&model, &cut, &flux, 0.3, len, bc)
}
