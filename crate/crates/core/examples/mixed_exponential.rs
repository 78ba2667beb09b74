//! EM for the two-exponential mixture, and its collapse on plain
//! exponential data.

use mgw_precip::distributions::sample_mgw;
use mgw_precip::estimators::fit_mixed_exponential_em;
use mgw_precip::{MgwParams, Sample};

fn main() -> mgw_precip::Result<()> {
    let xs = sample_mgw(&MgwParams::mixed_exponential(0.3, 2.0, 9.0), 10_000, 8)?;
    let fit = fit_mixed_exponential_em(&Sample::new(&xs)?, None)?;
    let q = fit.params;
    println!("two components: p={:.4} β={:.4} λ={:.4} after {} iterations", q.p, q.beta, q.lambda, fit.iterations);

    let xs = sample_mgw(&MgwParams::exponential(5.0), 5_000, 4)?;
    let fit = fit_mixed_exponential_em(&Sample::new(&xs)?, None)?;
    println!("exponential data: {} flag {:?}", fit.label(), fit.degeneracy.map(|d| d.code()));
    Ok(())
}
