use cellload::analytic::{cf_mean_load, ei_mean_load, mean_load_mc_baseline, LoadModel};
use cellload::linkbudget::{NetworkParams, TrafficParams};
use cellload::specfun::ApproxMode;

fn model(lambda_bs_per_km2: f64, lambda_u_per_km2: f64) -> LoadModel {
    LoadModel::new(
        NetworkParams {
            g0_db: 36.0,
            lambda_bs: lambda_bs_per_km2 * 1e-6,
            ..NetworkParams::default()
        },
        TrafficParams::from_per_km2(lambda_u_per_km2, 1e8),
    )
    .unwrap()
}

const DENSITIES: [f64; 7] = [40.0, 60.0, 80.0, 120.0, 160.0, 250.0, 500.0];
const TRAFFIC: [f64; 4] = [100.0, 1e3, 5e3, 1e4];

#[test]
fn mean_cell_dominates_ei_on_grid() {
    for &l in &DENSITIES {
        for &u in &TRAFFIC {
            let m = model(l, u);
            let ei = ei_mean_load(&m, ApproxMode::PaperApprox).unwrap();
            let mc = mean_load_mc_baseline(&m).unwrap();
            let cf = cf_mean_load(&m).unwrap();
            assert!(ei >= 0.0 && mc >= 0.0 && cf >= 0.0);
            assert!(mc >= ei, "lambda {l}, lambda_u {u}: {mc} < {ei}");
        }
    }
}

#[test]
fn ei_load_falls_with_density_and_rises_with_traffic() {
    for &u in &TRAFFIC {
        let loads: Vec<f64> = DENSITIES
            .iter()
            .map(|&l| ei_mean_load(&model(l, u), ApproxMode::Reference).unwrap())
            .collect();
        assert!(loads.windows(2).all(|w| w[1] < w[0]), "{loads:?}");
    }
    for &l in &DENSITIES {
        let loads: Vec<f64> = TRAFFIC
            .iter()
            .map(|&u| ei_mean_load(&model(l, u), ApproxMode::Reference).unwrap())
            .collect();
        assert!(loads.windows(2).all(|w| w[1] > w[0]), "{loads:?}");
    }
}

/// Density [BS/km²] at which `load` falls to `target`, by bisection in ln λ.
fn density_for(target: f64, load: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (1.0f64, 1e4f64);
    assert!(load(lo) > target && load(hi) < target);
    for _ in 0..100 {
        let mid = (lo * hi).sqrt();
        if load(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[test]
fn dimensioning_with_ei_needs_fewer_stations() {
    // 0.01 flows/s per m², 100 Mb files, target mean load 0.5.
    let u = 1e4;
    let ei = density_for(0.5, |l| {
        ei_mean_load(&model(l, u), ApproxMode::PaperApprox).unwrap()
    });
    let mc = density_for(0.5, |l| mean_load_mc_baseline(&model(l, u)).unwrap());
    assert!(mc > ei, "mean-cell {mc} vs EI {ei}");
    assert!((ei - 120.0).abs() <= 0.15 * 120.0, "EI density {ei}");
}
