//! Simulation-based goodness of fit: draw replicate next-period networks
//! from the fitted formation and persistence models, rebuild each network
//! from the two draws, and check where the observed statistics fall inside
//! the replicate bands.

use stergm::eval::{simulate_networks, simulation_gof};
use stergm::fit::{fit_model, Covariate, FitSettings, LambdaMode, ModelSpec, Term, Variant};
use stergm::synth::{generate, SynthConfig};

fn main() -> stergm::Result<()> {
    let synth = generate(&SynthConfig {
        n_actors: 20,
        n_periods: 16,
        seed: 12,
        ..Default::default()
    })?;
    let panel = synth.to_panel(0.0)?;
    let spec = ModelSpec {
        variant: Variant::Stergm,
        terms: vec![
            Term::constant(Covariate::Recip),
            Term::constant(Covariate::Alliance),
            Term::constant(Covariate::GdpReceiver),
        ],
        include_intercept: true,
        tv_dim: 8,
        tv_degree: 2,
        tv_order: 1,
        re_dim: 9,
        re_degree: 2,
        re_order: 1,
    };
    let settings = FitSettings {
        lambda: LambdaMode::Fixed {
            default: 1.0,
            per_term: Default::default(),
        },
        ..Default::default()
    };
    let model = fit_model(&panel, &spec, &settings)?;

    // one step in detail
    let step = 10;
    let replicates = simulate_networks(&model, &panel, step, 500, 2024, Default::default())?;
    let sizes: Vec<f64> = replicates.iter().map(|n| n.edge_count() as f64).collect();
    let mean_size = sizes.iter().sum::<f64>() / sizes.len() as f64;
    let observed = panel.network(step + 1)?.edge_count();
    println!(
        "step {step} -> {}: observed size {observed}, replicate mean {mean_size:.1}",
        step + 1
    );

    // bands across the panel
    let steps: Vec<i32> = (2..=14).collect();
    let report = simulation_gof(&model, &panel, &steps, 500, 2024, Default::default())?;
    println!("\nperiod  statistic      observed   q25      median   q75      inside");
    let mut inside = 0;
    let mut total = 0;
    for period in &report.periods {
        for band in &period.bands {
            let within = band.observed >= band.min && band.observed <= band.max;
            if band.statistic == "size" || band.statistic == "density" {
                inside += within as usize;
                total += 1;
            }
            if period.period % 4 == 3 {
                println!(
                    "{:>6}  {:<13} {:>8.3}  {:>7.3}  {:>7.3}  {:>7.3}  {}",
                    period.period,
                    band.statistic,
                    band.observed,
                    band.q25,
                    band.median,
                    band.q75,
                    if within { "yes" } else { "NO" }
                );
            }
        }
    }
    println!(
        "\nsize/density inside the replicate min-max band: {inside}/{total} period-statistics"
    );
    Ok(())
}
