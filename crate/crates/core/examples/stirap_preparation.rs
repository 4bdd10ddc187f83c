//! Prepares the dressed state `|D⟩` from `|+1⟩` with the default tanh pulse
//! pair, then maps it back with the mirrored ramp.

use ionsense::physics::{Basis, QuantumState, SensorConfig};
use ionsense::stirap::{readout, simulate_preparation, StirapShape};

fn main() -> ionsense::Result<()> {
    let cfg = SensorConfig::default();
    let shape = StirapShape::default();
    let start = QuantumState::basis_state(Basis::Lab, ionsense::physics::bare::PLUS_ONE);
    let traj = simulate_preparation(&cfg, &shape, &start)?;

    println!("t_ms,p_plus_one,p_minus_one,p_zero,p_dark");
    for i in (0..traj.len()).step_by(50) {
        println!("{},{:.6},{:.6},{:.6},{:.6}", traj.times[i], traj.plus_one[i], traj.minus_one[i], traj.zero[i], traj.dark[i]);
    }
    let k = traj.nearest(shape.ramp_end());
    println!("P_D at {} ms: {:.6}", traj.times[k], traj.dark[k]);

    let back = readout(&cfg, &shape, &QuantumState::dark())?;
    println!("after readout ramp, P(+1) = {:.6}", back.plus_one.last().copied().unwrap_or(f64::NAN));
    Ok(())
}
