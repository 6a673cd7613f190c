//! The seven model variants fitted on one panel and compared by one-step
//! out-of-sample prediction: the autoregressive baseline, the pooled
//! family with and without stability and random effects, and the two
//! separable models.

use stergm::eval::{pr_auc, predict_transition, roc_auc};
use stergm::fit::{
    fit_model, Covariate, FitSettings, LambdaMode, ModelSpec, Role, Term, Variant,
};
use stergm::synth::{generate, SynthConfig};

fn spec_for(variant: Variant) -> ModelSpec {
    let mut terms = Vec::new();
    if !matches!(variant, Variant::ArErgm) {
        terms.push(Term::constant(Covariate::Recip));
        terms.push(Term::constant(Covariate::Alliance));
        terms.push(Term::constant(Covariate::GdpReceiver));
        terms.push(Term::constant(Covariate::Trans));
    }
    if variant.has_random_effects() {
        terms.push(Term::random_smooth(Role::Sender));
        terms.push(Term::random_smooth(Role::Receiver));
    }
    ModelSpec {
        variant,
        terms,
        include_intercept: true,
        tv_dim: 8,
        tv_degree: 2,
        tv_order: 1,
        re_dim: 5,
        re_degree: 2,
        re_order: 1,
    }
}

fn main() -> stergm::Result<()> {
    let synth = generate(&SynthConfig {
        n_actors: 24,
        n_periods: 20,
        seed: 31,
        ..Default::default()
    })?;
    let panel = synth.to_panel(0.0)?;
    let horizon_step = 18; // fit through 18, score the step into 19
    let settings = FitSettings {
        lambda: LambdaMode::Fixed {
            default: 1.0,
            per_term: Default::default(),
        },
        ..Default::default()
    };

    println!("variant               pr_auc   roc_auc   (one-step prediction, combined dyads)");
    for variant in Variant::ALL {
        let spec = spec_for(variant);
        let model = fit_model(&panel, &spec, &settings)?;
        let pred = predict_transition(&model, &panel, horizon_step, Default::default())?;
        let scores: Vec<f64> = pred.scored.iter().map(|d| d.probability).collect();
        let labels: Vec<f64> = pred.scored.iter().filter_map(|d| d.observed).collect();
        let pr = pr_auc(&scores, &labels)?;
        let roc = roc_auc(&scores, &labels)?;
        println!("{:<20}  {pr:.4}   {roc:.4}", variant.name());
    }
    println!(
        "\nthe data were generated from a separable process with actor\n\
         heterogeneity, so the separable variants with random effects\n\
         should score highest on the precision-recall area."
    );
    Ok(())
}
