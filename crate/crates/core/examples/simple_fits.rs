//! Exponential, Gamma and Weibull maximum likelihood on one sample.

use mgw_precip::distributions::sample_mgw;
use mgw_precip::estimators::{fit_exponential_ml, fit_gamma_ml, fit_weibull_ml};
use mgw_precip::{MgwParams, Sample};

fn main() -> mgw_precip::Result<()> {
    let xs = sample_mgw(&MgwParams::gamma(0.7, 8.0), 2_000, 3)?;
    let s = Sample::new(&xs)?;
    let e = fit_exponential_ml(&s);
    let g = fit_gamma_ml(&s)?;
    let w = fit_weibull_ml(&s)?;
    println!("exponential  β={:.4}              ll={:.3}", e.params.beta, e.log_lik);
    println!("gamma        α={:.4} β={:.4}     ll={:.3}", g.params.alpha, g.params.beta, g.log_lik);
    println!("weibull      k={:.4} λ={:.4}     ll={:.3}", w.params.k, w.params.lambda, w.log_lik);
    Ok(())
}
