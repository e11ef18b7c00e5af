//! Dev-time numeric exploration (not part of the deliverable).

use std::time::Instant;

use rayon::prelude::*;
use siggame::analysis::{classify, estimate_basins, EquilibriumTag};
use siggame::dynamics::{
    best_response_run_from, roth_erev_run_with_stats, run_config_full, DynamicsConfig,
    InitCondition,
};
use siggame::game::SignalingGame;
use siggame::scenarios::{
    scenario_apology, scenario_deception, scenario_goodhart, ApologyGameSpec, ScenarioConfig,
};

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "all".to_string());

    if which == "lewis" || which == "all" {
        let start = Instant::now();
        let game = SignalingGame::lewis(2, 2, 2, &[0.5, 0.5]).unwrap();
        let report = estimate_basins(
            &game,
            &DynamicsConfig::ReplicatorFlow { t_end: 500.0, dt: 0.1, init: InitCondition::Dirichlet },
            1000,
            12345,
        )
        .unwrap();
        println!("LEWIS basins ({:?}):", start.elapsed());
        for c in &report.classes {
            println!("  {} {} ({:.4} +- {:.4})", c.tag, c.count, c.fraction, c.ci95);
        }
    }

    if which == "costly" || which == "all" {
        for (delta, rare) in [(0.15, 0.3), (0.0, 0.3), (0.6, 0.3)] {
            let start = Instant::now();
            let game = SignalingGame::lewis(2, 2, 2, &[rare, 1.0 - rare])
                .unwrap()
                .with_signal_cost(vec![vec![delta, 0.0], vec![delta, 0.0]])
                .unwrap();
            let report = estimate_basins(
                &game,
                &DynamicsConfig::ReplicatorFlow {
                    t_end: 500.0,
                    dt: 0.1,
                    init: InitCondition::Dirichlet,
                },
                1000,
                777,
            )
            .unwrap();
            println!("COSTLY delta={delta} rare={rare} ({:?}):", start.elapsed());
            for c in &report.classes {
                println!("  {} {} ({:.4} +- {:.4})", c.tag, c.count, c.fraction, c.ci95);
            }
        }
    }

    if which == "deception" || which == "all" {
        for gap in [1.8, 3.5, 0.0] {
            let start = Instant::now();
            let shares: Vec<f64> = (0..20)
                .into_par_iter()
                .map(|seed| {
                    let cfg = ScenarioConfig::with_seed(1000 + seed);
                    let r = scenario_deception(4.0, gap, &cfg).unwrap();
                    r.summary["deceiver_share"]
                })
                .collect();
            let cfg = ScenarioConfig::with_seed(1);
            let r = scenario_deception(4.0, gap, &cfg).unwrap();
            let min = shares.iter().copied().fold(f64::INFINITY, f64::min);
            let max = shares.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            println!(
                "DECEPTION gap={gap}: share range [{min:.4}, {max:.4}] class={:?} mi_term={:.4} trust={:.4} ({:?})",
                r.classification.as_ref().map(|c| c.tag),
                r.summary["terminal_mi_state_signal"],
                r.summary["trust_share"],
                start.elapsed()
            );
        }
    }

    if which == "goodhart" || which == "all" {
        let start = Instant::now();
        let results: Vec<(f64, f64)> = (0..50)
            .into_par_iter()
            .map(|seed| {
                let cfg = ScenarioConfig::with_seed(2000 + seed);
                let r = scenario_goodhart(300.0, &cfg).unwrap();
                (r.summary["mi_pre_switch"], r.summary["mi_post_switch"])
            })
            .collect();
        let ok = results.iter().filter(|(pre, post)| *pre >= 0.99 && *post <= 0.05).count();
        let worst_pre = results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
        let worst_post = results.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
        println!(
            "GOODHART: {ok}/50 pass, worst pre {worst_pre:.4}, worst post {worst_post:.6} ({:?})",
            start.elapsed()
        );
    }

    if which == "apology" || which == "all" {
        let start = Instant::now();
        let spec = ApologyGameSpec::default();
        let costs = [0.0, 0.625, 1.25, 1.875, 2.5];
        let phis = [0.0, 0.25, 0.5, 0.75, 1.0];
        let grid: Vec<(f64, f64)> =
            costs.iter().flat_map(|c| phis.iter().map(move |f| (*c, *f))).collect();
        let cfg = ScenarioConfig::with_seed(7);
        let r = scenario_apology(&spec, &grid, 200, &cfg).unwrap();
        let pm = r.phase_map.unwrap();
        println!("APOLOGY ({:?}):", start.elapsed());
        print!("{:>8}", "ca\\phi");
        for phi in phis {
            print!("{phi:>8.2}");
        }
        println!();
        for c in costs {
            print!("{c:>8.2}");
            for phi in phis {
                print!("{:>8.3}", pm.cell(c, phi).unwrap().cooperation_rate);
            }
            println!();
        }
        for (c, phi) in [(0.0, 1.0), (2.5, 1.0), (0.0, 0.0)] {
            let cell = pm.cell(c, phi).unwrap();
            println!(
                "  corner ({c}, {phi}): coop {:.3} +- {:.3} shares {:?}",
                cell.cooperation_rate,
                cell.ci95,
                cell.terminal_shares.iter().map(|s| (s * 1000.0).round() / 1000.0).collect::<Vec<_>>()
            );
        }
    }

    if which == "rotherev" || which == "all" {
        let start = Instant::now();
        let game = SignalingGame::lewis(2, 2, 2, &[0.5, 0.5]).unwrap();
        let ok = (0..50)
            .into_par_iter()
            .filter(|seed| {
                let (_, stats) = roth_erev_run_with_stats(&game, 1.0, 100_000, *seed).unwrap();
                stats.rolling_success >= 0.9
            })
            .count();
        println!("ROTH-EREV: {ok}/50 reach rolling success >= 0.9 ({:?})", start.elapsed());
    }

    if which == "br" || which == "all" {
        let game = SignalingGame::lewis(2, 2, 2, &[0.5, 0.5]).unwrap();
        // Anti-aligned start: separating sender (index 1) vs anti decoder (index 2).
        let traj = best_response_run_from(&game, 1, 2, 0.0, 0.0, 50, 9).unwrap();
        let successes: Vec<f64> = traj.samples().iter().map(|s| s.metrics.success).collect();
        println!("BR swap cycle success (first 10): {:?}", &successes[..10]);
        let start = Instant::now();
        let coordinated = (0..500)
            .into_par_iter()
            .filter(|seed| {
                let traj =
                    best_response_run_from(&game, 1, 2, 0.0, 0.05, 1000, *seed).unwrap();
                traj.samples().iter().any(|s| s.metrics.success >= 1.0 - 1e-9)
            })
            .count();
        println!("BR with experimentation: {coordinated}/500 coordinate ({:?})", start.elapsed());
    }

    if which == "bottleneck" || which == "all" {
        let game = SignalingGame::lewis(3, 2, 3, &[1.0 / 3.0; 3]).unwrap();
        let start = Instant::now();
        let max_success = (0..200)
            .into_par_iter()
            .map(|seed| {
                let (traj, _) = run_config_full(
                    &game,
                    &DynamicsConfig::ReplicatorFlow {
                        t_end: 500.0,
                        dt: 0.1,
                        init: InitCondition::Dirichlet,
                    },
                    seed,
                )
                .unwrap();
                traj.last().metrics.success
            })
            .reduce(|| 0.0f64, f64::max);
        println!("BOTTLENECK max terminal success over 200 runs: {max_success:.9} ({:?})", start.elapsed());
    }

    if which == "classify3" || which == "all" {
        let game = SignalingGame::lewis(3, 3, 3, &[1.0 / 3.0; 3]).unwrap();
        let start = Instant::now();
        let mut tags = std::collections::BTreeMap::new();
        let dynamics = DynamicsConfig::ReplicatorFlow {
            t_end: 500.0,
            dt: 0.1,
            init: InitCondition::Dirichlet,
        };
        for seed in 0..200 {
            let (_, pop) = run_config_full(&game, &dynamics, seed).unwrap();
            let class = classify(&game, &pop.unwrap(), &dynamics, 0.05).unwrap();
            *tags.entry(format!("{:?}", class.tag)).or_insert(0) += 1;
            let _ = EquilibriumTag::Pooling;
        }
        println!("3x3x3 classes over 200 runs: {tags:?} ({:?})", start.elapsed());
    }
}
