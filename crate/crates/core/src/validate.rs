//! Cross-validation of the three independent routes to the same physics:
//! the closed-form variance laws, the Gaussian covariance engine, and the
//! truncated-Fock-space oracle.
//!
//! [`run_validation`] executes every invariant check and reports the maximal
//! deviation per check against its pinned tolerance. The
//! `flip_squeezer_sign` option deliberately corrupts the engine's squeezer
//! sign and exists as a negative control: with it set, the cross checks must
//! fail.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::attacks::snr;
use crate::error::Result;
use crate::fock::{apply_loss_fock, quadrature_moments, reduced_density, tmss_fock, DEFAULT_CUTOFF};
use crate::gaussian::{omega, symplectic_defect, two_mode_squeeze_symplectic, GaussianState, SqueezeParams};
use crate::measurement::{
    combined_variance, lossy_combined_variance, state_combined_variance, LOSetting,
};

#[derive(Debug, Clone, Copy, Default)]
pub struct ValidationOptions {
    /// Negative control: flip the sign of the squeezer's coupling blocks so
    /// the engine disagrees with the oracle.
    pub flip_squeezer_sign: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<38} {:>12} {:>10} {:>6}",
            "check", "max dev", "tol", "pass"
        )?;
        for c in &self.checks {
            writeln!(
                f,
                "{:<38} {:>12.3e} {:>10.0e} {:>6}",
                c.name,
                c.max_deviation,
                c.tolerance,
                if c.pass { "ok" } else { "FAIL" }
            )?;
        }
        write!(
            f,
            "overall: {}",
            if self.pass() { "ok" } else { "FAIL" }
        )
    }
}

/// |a − b| / max(1, |a|, |b|): absolute near zero, relative away from it.
fn rel_dev(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn tmss_engine(params: SqueezeParams, opts: &ValidationOptions) -> GaussianState {
    let state = GaussianState::tmss(params);
    if !opts.flip_squeezer_sign {
        return state;
    }
    // corrupt the 1-2 coupling blocks (negative control)
    let mut cov = state.cov().clone();
    for a in 0..2 {
        for b in 2..4 {
            cov[(a, b)] = -cov[(a, b)];
            cov[(b, a)] = -cov[(b, a)];
        }
    }
    GaussianState::from_parts(2, state.mean().clone(), cov)
}

const EQ4_SCENARIOS: [(f64, f64); 3] = [
    (0.0, 0.270_670_566_473_225_4),
    (std::f64::consts::FRAC_PI_2, 7.524_391_382_167_263),
    (std::f64::consts::PI, 14.778_112_197_861_3),
];

const SWEEP_S: [f64; 4] = [0.2, 0.5, 1.0, 1.2];
const SWEEP_ETA: [f64; 5] = [0.0, 0.25, 0.5, 0.93, 1.0];
const SWEEP_PHASES: usize = 8;

/// Fock-oracle truncation tolerance over the sweep grid: tanh(1.2)^122 at
/// the default cutoff is ≈ 2.3e-10, so 1e-9 bounds every grid point.
pub const SWEEP_TAIL_TOL: f64 = 1e-9;

/// Run the full cross-oracle suite.
pub fn run_validation(opts: &ValidationOptions) -> Result<ValidationReport> {
    let mut checks = Vec::new();
    let p1 = SqueezeParams::new(1.0, 0.0)?;

    // closed form vs frozen constants at the three pinned scenarios
    {
        let mut dev: f64 = 0.0;
        for (delta, expect) in EQ4_SCENARIOS {
            let lo1 = LOSetting::new(delta);
            let lo2 = LOSetting::new(0.0);
            dev = dev.max(rel_dev(combined_variance(p1, lo1, lo2)?, expect));
        }
        checks.push(check("eq4-closed-form", dev, 1e-12));
    }

    // engine vs closed form on the same scenarios
    {
        let mut dev: f64 = 0.0;
        let state = tmss_engine(p1, opts);
        for (delta, expect) in EQ4_SCENARIOS {
            let got = state_combined_variance(
                &state,
                0,
                LOSetting::new(delta),
                1,
                LOSetting::new(0.0),
            )?;
            dev = dev.max(rel_dev(got, expect));
        }
        checks.push(check("eq4-engine-vs-closed-form", dev, 1e-9));
    }

    // fock oracle vs closed form on the same scenarios
    {
        let mut dev: f64 = 0.0;
        let psi = tmss_fock(p1, DEFAULT_CUTOFF)?;
        for (delta, expect) in EQ4_SCENARIOS {
            let m = quadrature_moments(&psi, delta, 0.0, 1e-10)?;
            dev = dev.max(rel_dev(m.sum_variance(), expect));
        }
        checks.push(check("eq4-fock-vs-closed-form", dev, 1e-6));
    }

    // engine vs fock moments over the full (s, eta, phase) grid
    {
        let mut dev: f64 = 0.0;
        for s in SWEEP_S {
            for eta in SWEEP_ETA {
                let params = SqueezeParams::new(s, 0.4)?;
                let engine = {
                    let st = tmss_engine(params, opts);
                    if eta < 1.0 {
                        st.loss_channel(1, eta)?
                    } else {
                        st
                    }
                };
                let psi = tmss_fock(params, DEFAULT_CUTOFF)?;
                let lossy = apply_loss_fock(&psi, 1, eta)?;
                for k in 0..SWEEP_PHASES {
                    let chi1 = k as f64 * std::f64::consts::TAU / SWEEP_PHASES as f64;
                    let chi2 = 0.15 * k as f64;
                    let fm = lossy.quadrature_moments(chi1, chi2, SWEEP_TAIL_TOL)?;
                    let (mean, cov) = crate::measurement::joint_quadratures(
                        &engine,
                        &[
                            crate::measurement::QuadratureSelection {
                                mode: 0,
                                lo: LOSetting::new(chi1),
                            },
                            crate::measurement::QuadratureSelection {
                                mode: 1,
                                lo: LOSetting::new(chi2),
                            },
                        ],
                    )?;
                    dev = dev.max(rel_dev(mean[0], fm.mean1));
                    dev = dev.max(rel_dev(mean[1], fm.mean2));
                    dev = dev.max(rel_dev(cov[(0, 0)], fm.var1));
                    dev = dev.max(rel_dev(cov[(1, 1)], fm.var2));
                    dev = dev.max(rel_dev(cov[(0, 1)], fm.cov));
                }
            }
        }
        checks.push(check("moments-engine-vs-fock", dev, 1e-6));
    }

    // loss composition
    {
        let mut dev: f64 = 0.0;
        for (e1, e2) in [(0.8, 0.55), (0.93, 0.93), (0.3, 0.9)] {
            let st = GaussianState::tmss(SqueezeParams::new(1.0, 1.1)?);
            let a = st.loss_channel(1, e1)?.loss_channel(1, e2)?;
            let b = st.loss_channel(1, e1 * e2)?;
            dev = dev.max((a.cov() - b.cov()).amax());
        }
        checks.push(check("loss-composition", dev, 1e-12));
    }

    // symplectic invariants of the generators
    {
        let mut dev: f64 = 0.0;
        for (s, th) in [(0.2, 0.0), (0.5, 1.0), (1.0, 2.2), (1.2, 5.0)] {
            let sm = two_mode_squeeze_symplectic(2, 0, 1, SqueezeParams::new(s, th)?);
            dev = dev.max(symplectic_defect(&sm));
        }
        let om = omega(2);
        dev = dev.max((om.transpose() + &om).amax());
        checks.push(check("symplectic-invariants", dev, 1e-12));
    }

    // purity of pure states, mixedness after loss
    {
        let mut dev: f64 = 0.0;
        for s in SWEEP_S {
            let st = tmss_engine(SqueezeParams::new(s, 0.9)?, opts);
            dev = dev.max((st.cov_determinant() - 1.0).abs());
        }
        checks.push(check("purity-det-cov", dev, 1e-8));
    }

    // reduced state is the thermal distribution, independent of theta
    {
        let mut dev: f64 = 0.0;
        let psi = tmss_fock(p1, DEFAULT_CUTOFF)?;
        let rho = reduced_density(&psi, 0);
        let nbar = 1.0f64.sinh().powi(2);
        for (n, p) in rho.number_distribution().iter().enumerate() {
            let therm = nbar.powi(n as i32) / (nbar + 1.0).powi(n as i32 + 1);
            dev = dev.max((p - therm).abs());
        }
        checks.push(check("thermal-reduced-density", dev, 1e-10));

        let mut blind: f64 = 0.0;
        for theta in [0.7, 2.9, 5.3] {
            let other = reduced_density(&tmss_fock(SqueezeParams::new(1.0, theta)?, DEFAULT_CUTOFF)?, 0);
            blind = blind.max(rho.max_difference(&other));
        }
        checks.push(check("phase-blindness", blind, 1e-12));
    }

    // Eq-(7)-style identity: snr equals the variance-contrast ratio
    {
        let mut dev: f64 = 0.0;
        let lo = LOSetting::new(0.0);
        for s in [0.0, 0.3, 0.6, 0.9, 1.2] {
            for k in 0..=10 {
                let eta = k as f64 / 10.0;
                let pmin = SqueezeParams::new(s, 0.0)?;
                let pmax = SqueezeParams::new(s, std::f64::consts::PI)?;
                let vmin = lossy_combined_variance(pmin, lo, lo, eta)?;
                let vmax = lossy_combined_variance(pmax, lo, lo, eta)?;
                dev = dev.max(rel_dev(snr(pmin, eta), (vmax - vmin) / vmin));
            }
        }
        checks.push(check("snr-variance-identity", dev, 1e-12));
    }

    // tap-then-trace equals loss
    {
        let st = GaussianState::tmss(p1);
        let (tapped, _) = st.tap_channel(1, 0.93)?;
        let reduced = tapped.keep_modes(&[0, 1])?;
        let lossy = st.loss_channel(1, 0.93)?;
        let dev = (reduced.cov() - lossy.cov()).amax();
        checks.push(check("tap-trace-equivalence", dev, 1e-12));
    }

    Ok(ValidationReport { checks })
}

fn check(name: &str, max_deviation: f64, tolerance: f64) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        max_deviation,
        tolerance,
        pass: max_deviation <= tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_build_passes() {
        let report = run_validation(&ValidationOptions::default()).unwrap();
        assert!(report.pass(), "\n{report}");
        // the moment sweep is the binding check; make sure it really ran
        let sweep = report
            .checks
            .iter()
            .find(|c| c.name == "moments-engine-vs-fock")
            .unwrap();
        assert!(sweep.max_deviation < 1e-6);
        assert!(sweep.max_deviation > 0.0, "suspiciously exact");
    }

    #[test]
    fn perturbed_squeezer_sign_fails() {
        let report = run_validation(&ValidationOptions {
            flip_squeezer_sign: true,
        })
        .unwrap();
        assert!(!report.pass());
        let broken: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect();
        assert!(broken.contains(&"eq4-engine-vs-closed-form"), "{broken:?}");
        assert!(broken.contains(&"moments-engine-vs-fock"), "{broken:?}");
    }

    #[test]
    fn report_renders_a_table() {
        let report = run_validation(&ValidationOptions::default()).unwrap();
        let table = report.to_string();
        assert!(table.contains("max dev"));
        assert!(table.contains("overall: ok"));
    }
}
