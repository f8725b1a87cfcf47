//! Oracle runs that pin the frozen constants used by the acceptance suite.
//! Prints each quantity from two independent routes where possible.

use cuspfuse::cusp::{CuspParams, Stability};
use cuspfuse::datastore::{join, split};
use cuspfuse::influence::{susceptibility_record, Branch};
use cuspfuse::model::{evaluate, fit, FeatureSpec};
use cuspfuse::sampler::{sample_population, SamplerConfig};

fn main() {
    // Route 1: Monte Carlo metastable fraction, n = 1e6, exact roots.
    let cfg = SamplerConfig {
        n: 1_000_000,
        exact_mode: true,
        ..SamplerConfig::default()
    };
    let population = sample_population(&cfg).unwrap();
    let metastable = population
        .iter()
        .filter(|p| susceptibility_record(p).branch == Branch::Metastable)
        .count();
    let bistable = population
        .iter()
        .filter(|p| p.params().stability() == Stability::Bistable)
        .count();
    println!("mc  n=1e6: bistable fraction   = {}", bistable as f64 / 1e6);
    println!(
        "mc  n=1e6: metastable fraction = {}",
        metastable as f64 / 1e6
    );

    // Route 2: quadrature over the parameter rectangle. P(metastable | a, b)
    // = clamp((1 - |middle root|... careful with sign) using x0 ~ U(-1,1).
    let steps = 2000;
    let mut acc = 0.0;
    for i in 0..steps {
        let a = -1.0 + (i as f64 + 0.5) * 2.0 / steps as f64;
        for j in 0..steps {
            let b = -2.0 + (j as f64 + 0.5) * 6.0 / steps as f64;
            let params = CuspParams::new(a, b);
            if params.stability() != Stability::Bistable || a == 0.0 {
                continue;
            }
            let m = params.critical_points().maximum.unwrap();
            // Metastable basin is below m when a > 0, above m when a < 0.
            let p = if a > 0.0 {
                (m + 1.0) / 2.0
            } else {
                (1.0 - m) / 2.0
            };
            acc += p.clamp(0.0, 1.0);
        }
    }
    let quad = acc / (steps * steps) as f64;
    println!("quad      : metastable fraction = {quad}");

    // Monostable determinism at n = 1e5 (full minimizer path).
    let cfg = SamplerConfig {
        n: 100_000,
        ..SamplerConfig::default()
    };
    let population = sample_population(&cfg).unwrap();
    let mean = |it: Vec<f64>| it.iter().sum::<f64>() / it.len() as f64;
    let up = mean(
        population
            .iter()
            .filter(|p| p.params().stability() == Stability::Monostable && p.a > 0.5)
            .map(|p| p.y as f64)
            .collect(),
    );
    let down = mean(
        population
            .iter()
            .filter(|p| p.params().stability() == Stability::Monostable && p.a < -0.5)
            .map(|p| p.y as f64)
            .collect(),
    );
    let coin = mean(
        population
            .iter()
            .filter(|p| p.params().stability() == Stability::Bistable)
            .map(|p| p.y as f64)
            .collect(),
    );
    println!("n=1e5: mean(Y | monostable, a > 0.5)  = {up}");
    println!("n=1e5: mean(Y | monostable, a < -0.5) = {down}");
    println!("n=1e5: mean(Y | bistable)             = {coin}");
    println!(
        "n=1e5: mean(Y)                        = {}",
        mean(population.iter().map(|p| p.y as f64).collect())
    );

    // Model metrics at n = 1e5 to freeze criterion-5 expectations.
    let (db_a, db_b) = split(&population);
    let joined = join(&db_a, &db_b).unwrap();
    for (name, spec) in [
        ("A", FeatureSpec::a_only()),
        ("B", FeatureSpec::b_only()),
        ("joint", FeatureSpec::joint()),
    ] {
        let model = fit(&joined, &spec, 1.0).unwrap();
        let report = evaluate(&model, &joined).unwrap();
        println!(
            "n=1e5 model {name:>5}: auc = {:.4}  log_loss = {:.4}  accuracy = {:.4}",
            report.auc, report.log_loss, report.accuracy
        );
    }
}
