//! Physical half-column data with `T(-h) = 1, T(0) = 0`: shift by the
//! conduction profile, extend (v even, T odd) to the periodic box, evolve, and
//! restrict back.

use std::f64::consts::PI;

use hydrostat::spectral::Grid3;
use hydrostat::state::{
    extend_to_full_domain, shift_temperature, HalfDomainField, Params, ShiftDirection, State,
};
use hydrostat::stepper::{integrate, Scheme, StepperConfig};

fn main() -> hydrostat::Result<()> {
    let grid = Grid3::cube(16, 1.0)?;
    let h = grid.h();
    let v1 = HalfDomainField::from_fn(grid, |_, y, z| (2.0 * PI * y).sin() * (PI * z / h).cos());
    let v2 = HalfDomainField::from_fn(grid, |x, _, _| 0.3 * (2.0 * PI * x).cos());
    // Conduction profile plus a perturbation vanishing at both lids.
    let t = HalfDomainField::from_fn(grid, |x, _, z| {
        -z / h + 0.2 * (PI * z / h).sin() * (2.0 * PI * x).cos()
    });

    let shifted = shift_temperature(&t, ShiftDirection::Shift);
    let ([e1, e2], et) = extend_to_full_domain([&v1, &v2], &shifted)?;
    let state = State::from_spectral(
        e1.forward(),
        e2.forward(),
        et.forward(),
        Params::default(),
        0.0,
    )?;
    let (rv, rt) = state.parity_residuals();
    println!("parity residuals after extension: v {rv:.1e}, T {rt:.1e}");

    let out = integrate(
        state,
        &StepperConfig::fixed(Scheme::ImexRk2, 1e-3, 0.05),
        None,
        &mut [],
    )?;
    let s = out.final_state;
    let (rv, rt) = s.parity_residuals();
    println!(
        "after {} steps: parity residuals v {rv:.1e}, T {rt:.1e}",
        out.steps
    );

    let back = shift_temperature(
        &HalfDomainField::restrict(&s.temperature.inverse()),
        ShiftDirection::Unshift,
    );
    let (i, j) = (0, 0);
    let bottom = back.get(i, j, 0);
    let top = back.get(i, j, HalfDomainField::planes(&grid) - 1);
    println!("physical temperature at the lids: T(-h) = {bottom:.12}, T(0) = {top:.1e}");
    Ok(())
}
