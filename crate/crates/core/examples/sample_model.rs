//! Draws from a fitted model back on the observed scale.

use mgw_precip::report::{cmd_sample, ModelSpec};
use mgw_precip::{Family, MgwParams};

fn main() -> mgw_precip::Result<()> {
    let spec = ModelSpec {
        family: Some(Family::Mgw),
        params: MgwParams::new(0.4847, 0.6513, 5.314, 1.3761, 9.5088)?,
        location: None,
    };
    let model = spec.resolve(0.95)?;
    println!("mean {:.3} mm, variance {:.3}", model.mean()?, model.variance()?);
    cmd_sample(&model, 8, 7, &mut std::io::stdout())
}
