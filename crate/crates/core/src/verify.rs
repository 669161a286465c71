//! A fast self-check suite: small, deterministic invariants that should hold
//! on any correct build. Each check runs in well under a second.

use serde::{Deserialize, Serialize};

use crate::density::DiagGaussian;
use crate::diagnostics::{
    weak_form_residual, AffineFn, ConstantFn, TestFunctionDictionary, DEFAULT_N_MAX,
};
use crate::dynamics::{conserved_quantities, run, SimConfig};
use crate::functionals::{entropy, fisher, GridSpec};
use crate::io::{config_to_toml, parse_config};
use crate::noise::{CounterNoise, NoiseKey, PairNoise};
use crate::potentials::{chi, ratio_condition_margin, PotentialSpec};
use crate::{Result, Vec3};

/// Result of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &str, check: Result<(bool, String)>) -> CheckOutcome {
    match check {
        Ok((passed, detail)) => CheckOutcome {
            name: name.to_string(),
            passed,
            detail,
        },
        Err(e) => CheckOutcome {
            name: name.to_string(),
            passed: false,
            detail: e.to_string(),
        },
    }
}

/// Runs every check and returns their outcomes in a fixed order.
pub fn run_checks() -> Vec<CheckOutcome> {
    vec![
        outcome("cutoff_continuity", cutoff_continuity()),
        outcome("ratio_condition", ratio_condition()),
        outcome("noise_determinism", noise_determinism()),
        outcome("conservation", conservation()),
        outcome("gaussian_entropy", gaussian_entropy()),
        outcome("gaussian_fisher", gaussian_fisher()),
        outcome("dictionary_norms", dictionary_norms()),
        outcome("weak_residual_affine", weak_residual_affine()),
        outcome("config_roundtrip", config_roundtrip()),
    ]
}

fn cutoff_continuity() -> Result<(bool, String)> {
    let h = 1e-9;
    let jump = [0.98, 1.0]
        .iter()
        .map(|&x| (chi(x + h) - chi(x - h)).abs())
        .fold(0.0, f64::max);
    Ok((jump < 1e-8, format!("largest jump {jump:.3e}")))
}

fn ratio_condition() -> Result<(bool, String)> {
    let spec = PotentialSpec::new(-3.0, 0.1)?;
    let grid: Vec<f64> = (0..2000).map(|i| 1e-3 * 1.005f64.powi(i)).collect();
    let margin = ratio_condition_margin(&spec, &grid);
    Ok((margin <= 0.0, format!("margin {margin:.4}")))
}

fn noise_determinism() -> Result<(bool, String)> {
    let a = CounterNoise::new(7);
    let b = CounterNoise::new(7);
    let same = a.pair_normals(3, 1, 4, 10) == b.pair_normals(3, 1, 4, 10);
    let differs = a.pair_normals(3, 1, 4, 10) != a.pair_normals(4, 1, 4, 10);
    let (_, sign) = NoiseKey::ordered(7, 3, 4, 1);
    Ok((
        same && differs && sign == -1.0,
        format!("same={same} differs={differs}"),
    ))
}

fn conservation() -> Result<(bool, String)> {
    let cfg = SimConfig::new(-3.0, 1e-3, 0.02, 24, 11)?.with_eta(0.2)?;
    let g0 = DiagGaussian::isotropic(1.0)?;
    let traj = run(&cfg, &g0, &mut [])?;
    let (m0, e0) = conserved_quantities(&traj.snapshots[0]);
    let (m1, e1) = conserved_quantities(traj.last());
    let dm = (m1 - m0).norm() / cfg.n_particles as f64;
    let de = (e1 - e0).abs() / e0;
    Ok((
        dm < 1e-12,
        format!("momentum drift {dm:.2e}, relative energy change {de:.2e}"),
    ))
}

fn gaussian_entropy() -> Result<(bool, String)> {
    let var = [1.0, 0.5, 2.0];
    let g = DiagGaussian::new(vec![0.1, 0.0, -0.2], var.to_vec())?;
    let est = entropy(&g, &GridSpec::covering(&g, 81)?)?;
    let det: f64 = var.iter().product();
    let exact = -1.5 * (1.0 + (2.0 * std::f64::consts::PI).ln()) - 0.5 * det.ln();
    let err = (est.value - exact).abs();
    Ok((err < 1e-8, format!("error {err:.2e}")))
}

fn gaussian_fisher() -> Result<(bool, String)> {
    let var = [1.0, 0.5, 2.0];
    let g = DiagGaussian::new(vec![0.0; 3], var.to_vec())?;
    let est = fisher(&g, &GridSpec::covering(&g, 81)?)?;
    let exact: f64 = var.iter().map(|v| 1.0 / v).sum();
    let err = (est.value - exact).abs();
    Ok((err < 1e-8, format!("error {err:.2e}")))
}

fn dictionary_norms() -> Result<(bool, String)> {
    let d = TestFunctionDictionary::standard(DEFAULT_N_MAX)?;
    Ok((true, format!("{} functions", d.len())))
}

fn weak_residual_affine() -> Result<(bool, String)> {
    let cfg = SimConfig::new(-2.0, 1e-3, 0.01, 16, 3)?.with_eta(0.2)?;
    let g0 = DiagGaussian::isotropic(1.0)?;
    let traj = run(&cfg, &g0, &mut [])?;
    let t = traj.last().t;
    let c = weak_form_residual(&traj, &ConstantFn(1.0), t)?.value.abs();
    let a = weak_form_residual(
        &traj,
        &AffineFn {
            c: 0.5,
            p: Vec3::new(1.0, -2.0, 0.5),
        },
        t,
    )?
    .value
    .abs();
    Ok((
        c < 1e-12 && a < 1e-12,
        format!("constant {c:.2e}, affine {a:.2e}"),
    ))
}

fn config_roundtrip() -> Result<(bool, String)> {
    let cfg = SimConfig::new(-2.5, 1e-3, 0.5, 100, 9)?;
    let back = parse_config(&config_to_toml(&cfg))?;
    Ok((back == cfg, String::new()))
}
