//! True/false positive rates at the posterior-0.5 cut for every model, with
//! the basic and the empirical-Bayes partitions.
//!
//! Usage: `cargo run --release --example power_table -- [n] [sigma] [reps] [x_lo] [x_hi] [checker] [grid]`
//! where `checker` is `twopi` or `unit` and `grid` is the number of shift
//! quantiles for the empirical-Bayes search.

use ptdep_core::ebayes::DEFAULT_GRID;
use ptdep_core::simgen::{
    power_experiment, CheckerTheta, DependenceStatistic, ModelKind, PolyaTreeStatistic,
    PowerSettings, SimModel,
};
use ptdep_core::{Method, PartitionConfig, ShiftGrid, ShiftSearchConfig};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, d: f64| {
        args.get(i)
            .map_or(d, |s| s.parse().expect("numeric argument"))
    };
    let n = arg(0, 150.0) as usize;
    let sigma = arg(1, 2.0);
    let reps = arg(2, 500.0) as usize;
    let (lo, hi) = (arg(3, 0.0), arg(4, 10.0));
    let checker = match args.get(5).map(String::as_str) {
        Some("unit") => CheckerTheta::Unit,
        _ => CheckerTheta::TwoPi,
    };
    let grid = arg(6, DEFAULT_GRID as f64) as usize;
    let scfg = ShiftSearchConfig {
        grid: ShiftGrid::Quantiles(grid),
        ..ShiftSearchConfig::default()
    };
    for method in [Method::Basic, Method::EmpiricalBayes(scfg)] {
        let stat = PolyaTreeStatistic {
            cfg: PartitionConfig::default(),
            method,
        };
        let mut line = format!("{:>4} N={n} sigma={sigma}:", stat.name());
        let mut fpr = 0.0;
        for kind in ModelKind::DEPENDENT {
            let model = SimModel::new(kind, sigma)
                .with_x_range(lo, hi)
                .with_checker_theta(checker);
            let r = power_experiment(&model, n, reps, &stat, &PowerSettings::default(), 1).unwrap();
            line.push_str(&format!(" {kind}={:.3}", r.tpr));
            fpr = r.fpr;
        }
        println!("{line} fpr={fpr:.3}");
    }
}
