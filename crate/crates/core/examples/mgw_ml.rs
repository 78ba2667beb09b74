//! Full maximum likelihood for the mixture from the twelve starts. Slow by
//! design; a wall-clock limit keeps this example short.

use mgw_precip::distributions::sample_mgw;
use mgw_precip::estimators::mgw_ml::{run_mgw_candidates, select_mgw_candidate};
use mgw_precip::estimators::*;
use mgw_precip::{MgwParams, Sample, VarianceDivisor};

fn main() -> mgw_precip::Result<()> {
    let truth = MgwParams::new(0.48, 0.65, 5.3, 1.38, 9.5)?;
    let xs = sample_mgw(&truth, 400, 21)?;
    let s = Sample::new(&xs)?;
    let g = fit_gamma_ml(&s)?;
    let w = fit_weibull_ml(&s)?;
    let me = fit_mixed_exponential_em(&s, None)?;
    let mix = if s.cv_stat(VarianceDivisor::Unbiased) >= 1.0 {
        mixture_estimate_mgw(&s, &MixtureGridSpec { skew_step: 0.05, ..Default::default() }).ok()
    } else {
        None
    };
    let priors = PriorFits { mixed_exp: Some(&me), gamma: Some(&g), weibull: Some(&w), mixture: mix.as_ref() };
    let cfg = MlConfig { time_limit_secs: Some(60.0), ..Default::default() };
    let candidates = run_mgw_candidates(&s, &priors, &cfg)?;
    for c in &candidates {
        println!("{:?} ll={:.3} outer={} shape={:?}", c.status, c.log_lik, c.outer_iterations, c.shape);
    }
    match select_mgw_candidate(&s, &candidates, &cfg) {
        Ok(fit) => println!("chosen: {:?} ll={:.3}", fit.params, fit.log_lik),
        Err(e) => println!("no admissible candidate: {e}"),
    }
    Ok(())
}
