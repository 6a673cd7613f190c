//! Fitted actor random curves summarized by functional principal
//! components: variance shares, the actors with extreme scores, and the
//! mean-perturbation plot for the leading component.

use stergm::fit::{fit_model, FitSettings, LambdaMode, Role, Side};
use stergm::fpca::{discretize_curves, fpca, perturbation_curves};
use stergm::plot::{line_plot, PlotSeries};
use stergm::synth::{generate, SynthConfig};

fn main() -> stergm::Result<()> {
    let synth = generate(&SynthConfig {
        n_actors: 22,
        n_periods: 28,
        seed: 4,
        ..Default::default()
    })?;
    let panel = synth.to_panel(0.0)?;
    let spec = synth.model_spec();
    println!("fitting the random-effects model ...");
    let settings = FitSettings {
        lambda: LambdaMode::Select,
        ..Default::default()
    };
    let model = fit_model(&panel, &spec, &settings)?;

    for role in [Role::Sender, Role::Receiver] {
        let bundle = discretize_curves(&model, role, Side::Formation, 100)?;
        let result = fpca(&bundle, 2)?;
        println!(
            "\n=== formation {} curves: {} actors on a {}-point grid ===",
            role.label(),
            bundle.n_actors(),
            bundle.n_grid()
        );
        println!(
            "variance shares: comp1 {:.1}%, comp2 {:.1}%",
            100.0 * result.variance_shares[0],
            100.0 * result.variance_shares[1]
        );

        // actors with the most extreme level (component 1) and trend
        // (component 2) scores
        for comp in 0..2 {
            let mut scored: Vec<(f64, &str)> = bundle
                .actors
                .iter()
                .enumerate()
                .map(|(i, a)| (result.scores[[i, comp]], a.as_str()))
                .collect();
            scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            println!(
                "component {}: lowest {} ({:+.2}), highest {} ({:+.2})",
                comp + 1,
                scored[0].1,
                scored[0].0,
                scored[scored.len() - 1].1,
                scored[scored.len() - 1].0
            );
        }

        let (plus, minus) = perturbation_curves(&result, 0, 2.0)?;
        let series = vec![
            PlotSeries::line("mean", result.grid.clone(), result.mean.clone(), "black"),
            PlotSeries::line("+2 sd", result.grid.clone(), plus, "firebrick"),
            PlotSeries::line("-2 sd", result.grid.clone(), minus, "steelblue").dashed(),
        ];
        let svg = line_plot(
            &format!("formation {}: component 1 perturbation", role.label()),
            "period",
            "random effect",
            &series,
        );
        let dir = std::env::temp_dir().join("stergm_fpca");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("perturbation_{}.svg", role.label()));
        std::fs::write(&path, svg).unwrap();
        println!("wrote {}", path.display());
    }
    Ok(())
}
