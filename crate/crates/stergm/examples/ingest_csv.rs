//! CSV ingestion from scratch: write a tiny valued edge list plus covariate
//! tables, load them, aggregate two-year windows, binarize at different
//! thresholds and look at the provenance counts.

use std::io::Write;

use stergm::panel::{
    aggregate_windows, binarize, impute_series, load_edge_list, ActorRegistry, CovariateInput,
    EdgeSchema,
};

fn write_file(dir: &std::path::Path, name: &str, content: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    let mut f = std::fs::File::create(&path).unwrap();
    f.write_all(content.as_bytes()).unwrap();
    path
}

fn main() -> stergm::Result<()> {
    let dir = std::env::temp_dir().join("stergm_ingest_example");
    std::fs::create_dir_all(&dir).unwrap();

    // duplicate rows are summed; values are trade volumes
    let edges = write_file(
        &dir,
        "edges.csv",
        "period,sender,receiver,value\n\
         1990,USA,FRA,2.5\n\
         1990,USA,FRA,1.5\n\
         1990,FRA,DEU,0.02\n\
         1991,USA,DEU,3.5\n\
         1991,DEU,FRA,1.0\n\
         1992,USA,FRA,4.0\n\
         1992,FRA,USA,2.8\n\
         1993,USA,XXX,9.9\n",
    );
    let flows = load_edge_list(&edges, &EdgeSchema::default())?;
    println!("loaded {} flow records (duplicates merged)", flows.len());

    let mut covariates = CovariateInput::default();
    for p in 1990..=1993 {
        // a gap in FRA's gdp series gets imputed below
        let fra_gdp = if p == 1991 { None } else { Some(1500.0 + (p - 1990) as f64 * 25.0) };
        covariates.set_monadic(p, "USA", Some(9000.0), Some(280.0), Some(10.0));
        covariates.set_monadic(p, "FRA", fra_gdp, Some(42.0), Some(9.0));
        covariates.set_monadic(p, "DEU", Some(2200.0), Some(30.0), Some(10.0));
    }
    covariates.set_distance("USA", "FRA", 7665.0);
    covariates.set_distance("USA", "DEU", 7857.0);
    covariates.set_distance("FRA", "DEU", 878.0);
    covariates.set_alliance(1990, "USA", "FRA");
    covariates.set_alliance(1991, "USA", "FRA");
    covariates.set_alliance(1992, "USA", "FRA");

    let registry = ActorRegistry::new(vec![
        ("USA".into(), 1990, 1993, None),
        ("FRA".into(), 1990, 1993, None),
        ("DEU".into(), 1990, 1993, None),
    ])?;

    // gap filling on a single series
    let series: std::collections::BTreeMap<i32, Option<f64>> =
        [(1990, Some(2.0)), (1991, None), (1992, Some(4.0))].into_iter().collect();
    println!("imputed 1991 value: {}", impute_series(&series)?[&1991]);

    for threshold in [0.0, 3.0] {
        let panel = binarize(&flows, threshold, &registry, &covariates)?;
        let total: usize = panel
            .periods()
            .iter()
            .map(|&p| panel.network(p).unwrap().edge_count())
            .sum();
        let prov = panel.provenance();
        println!(
            "threshold {threshold}: {total} edges; dropped {} below threshold, {} with unregistered actors",
            prov.dropped_below_threshold, prov.dropped_nonexistent_actor
        );
    }

    // two-year windows: flows sum, continuous covariates average, the
    // alliance indicator needs presence in both years
    let (wflows, wcov) = aggregate_windows(&flows, 2, &covariates)?;
    println!("\nafter width-2 aggregation: {} flow records", wflows.len());
    for rec in wflows.records() {
        println!("  window {}: {} -> {} value {}", rec.period, rec.sender, rec.receiver, rec.value);
    }
    let wpanel = binarize(&wflows, 0.0, &registry.map_periods(
        &stergm::panel::WindowMap::new(1990, 1993, 2)?,
    )?, &wcov)?;
    println!("windowed panel periods: {:?}", wpanel.periods());
    Ok(())
}
