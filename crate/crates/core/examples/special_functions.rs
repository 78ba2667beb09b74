//! Gamma-function family and the χ² tail used by the likelihood-ratio tests.

use mgw_precip::special::{chi_square_sf, digamma, gamma_p, gamma_q, ln_gamma, trigamma};

fn main() -> mgw_precip::Result<()> {
    for x in [0.3, 1.0, 2.5, 7.3] {
        println!("x={x:<4} lnΓ={:>10.6} ψ={:>10.6} ψ'={:>9.6}", ln_gamma(x)?, digamma(x)?, trigamma(x)?);
    }
    println!("P(2.5, 1.7) = {:.8}", gamma_p(2.5, 1.7)?);
    println!("Q(0.7, 3.2) = {:.8}", gamma_q(0.7, 3.2)?);
    for df in 1..=4 {
        println!("chi2 sf(3.0; df={df}) = {:.4}", chi_square_sf(3.0, df)?);
    }
    Ok(())
}
