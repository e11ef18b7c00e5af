//! apology calibration at continuation 0.99
use rayon::prelude::*;
use siggame::scenarios::{scenario_apology, ApologyGameSpec, ScenarioConfig};

fn main() {
    let spec = ApologyGameSpec::default();
    let corner: Vec<f64> = (0..24u64)
        .into_par_iter()
        .map(|seed| {
            let cfg = ScenarioConfig::with_seed(seed);
            let r = scenario_apology(&spec, &[(0.0, 1.0)], 200, &cfg).unwrap();
            r.phase_map.unwrap().cells[0].cooperation_rate
        })
        .collect();
    let min = corner.iter().copied().fold(f64::INFINITY, f64::min);
    let max = corner.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let over = corner.iter().filter(|r| **r > 0.2).count();
    println!("corner (0,1): [{min:.3}, {max:.3}], {over}/24 over 0.2");

    let costs = [0.0, 0.625, 1.25, 1.875, 2.5];
    let phis = [0.0, 0.25, 0.5, 0.75, 1.0];
    let grid: Vec<(f64, f64)> = costs.iter().flat_map(|c| phis.iter().map(move |f| (*c, *f))).collect();
    for base in [7u64, 99, 1234] {
        let cfg = ScenarioConfig::with_seed(base);
        let r = scenario_apology(&spec, &grid, 200, &cfg).unwrap();
        let pm = r.phase_map.unwrap();
        println!("base {base}:");
        for c in costs {
            print!("{c:>8.2}");
            for phi in phis { print!("{:>8.3}", pm.cell(c, phi).unwrap().cooperation_rate); }
            println!();
        }
        // monotonicity check: rows (incr c_a) and columns (decr phi)
        let mut violations = 0;
        for phi in phis {
            for w in costs.windows(2) {
                let a = pm.cell(w[0], phi).unwrap();
                let b = pm.cell(w[1], phi).unwrap();
                if b.cooperation_rate < a.cooperation_rate - (a.ci95 + b.ci95) { violations += 1; }
            }
        }
        for c in costs {
            for w in phis.windows(2) {
                let a = pm.cell(c, w[1]).unwrap();
                let b = pm.cell(c, w[0]).unwrap();
                if b.cooperation_rate < a.cooperation_rate - (a.ci95 + b.ci95) { violations += 1; }
            }
        }
        println!("  monotonicity violations: {violations}");
    }
}
