//! Closed forms and a physical-mode cross-check for the 10 m reference
//! setup. Mirrors the README walkthrough.

use aoi_evt::{analytics, model, risk, sim};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = aoi_evt::SystemParams {
        capacitor_size_s: 2e-4,
        noise_power_n0: 7.69e-9,
        antennas_n: 1,
        conversion_eta: 0.5,
        tx_power_pt: 10.0,
        atten_w: 1e3,
        dist_comm_dc: 10.0,
        dist_energy_de: 10.0,
        pathloss_alpha: 2.4,
        rate_r: 0.1,
    };
    let d = model::derive(&params)?;
    let fit = analytics::gumbel_fit_from_params(d.g, d.p)?;
    let cvar99 = risk::cvar_at(&fit, 0.99)?;
    println!(
        "g = {:.3}, p = {:.3}, CVaR@0.99 = {cvar99:.1} slots",
        d.g, d.p
    );

    let out = sim::run_physical(&params, &sim::RunConfig::new(1_000_000, 42))?;
    let closed = analytics::average_aoi(d.g, d.p)?;
    println!(
        "simulated mean age {:.4} vs closed form {:.4}",
        out.stats.empirical_mean_aoi, closed
    );
    assert!((out.stats.empirical_mean_aoi / closed - 1.0).abs() < 0.005);
    Ok(())
}
