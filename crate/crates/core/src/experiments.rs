//! Figure-data sweeps: squeezing degree and SNR as functions of channel
//! loss, analytically and optionally as Monte-Carlo check-slot estimates.
//!
//! The canonical output is CSV with the fixed header
//! `s,eta,loss,D_dB,SNR,SNR_dB,source,mc_stderr_D,mc_stderr_SNR`; analytic
//! rows leave the stderr fields empty, and `SNR_dB` is empty where the ratio
//! is not positive. Grid points are snapped to 1e-12 so values like 0.93
//! appear exactly, and identical specs reproduce byte-identical files.
//! `mc_stderr_D` is in dB; `mc_stderr_SNR` is linear.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::attacks::{degree_of_squeezing, snr, snr_db};
use crate::error::{Error, Result};
use crate::gaussian::SqueezeParams;
use crate::measurement::{stream_rng, DOMAIN_EXPERIMENT};
use crate::protocol::{calibrate_channel, ChannelModel, ProtocolConfig};

/// Which rows a sweep emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOutput {
    Analytic,
    MonteCarlo,
    Both,
}

/// Monte-Carlo estimation parameters for a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McParams {
    pub samples_per_slot: usize,
    pub slots: usize,
    pub seed: u64,
}

/// Inclusive transmissivity grid; `loss = 1 − eta` in the output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl EtaGrid {
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step).round() as i64;
        (0..=n.max(0))
            .map(|k| snap(self.start + k as f64 * self.step))
            .filter(|eta| *eta <= self.stop + 1e-12)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) {
            return Err(Error::invalid("grid step must be positive"));
        }
        if self.stop < self.start {
            return Err(Error::invalid("grid stop must be >= start"));
        }
        if self.start < 0.0 || self.stop > 1.0 {
            return Err(Error::invalid("transmissivity grid must lie in [0, 1]"));
        }
        Ok(())
    }
}

fn snap(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// A sweep request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub s_values: Vec<f64>,
    pub eta_grid: EtaGrid,
    pub output: SweepOutput,
    pub mc: Option<McParams>,
}

impl SweepSpec {
    /// The default figure grids: three representative squeezing magnitudes
    /// over the full loss range in 0.01 steps.
    pub fn default_figures() -> Self {
        Self {
            s_values: vec![0.2, 0.5, 1.0],
            eta_grid: EtaGrid {
                start: 0.0,
                stop: 1.0,
                step: 0.01,
            },
            output: SweepOutput::Analytic,
            mc: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.s_values.is_empty() {
            return Err(Error::invalid("sweep needs at least one squeezing value"));
        }
        if self.s_values.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::invalid("squeezing values must be finite and >= 0"));
        }
        self.eta_grid.validate()?;
        if self.eta_grid.points().is_empty() {
            return Err(Error::invalid("empty transmissivity grid"));
        }
        if matches!(self.output, SweepOutput::MonteCarlo | SweepOutput::Both) && self.mc.is_none()
        {
            return Err(Error::invalid(
                "monte-carlo output requested without mc parameters",
            ));
        }
        if let Some(mc) = &self.mc {
            if mc.samples_per_slot < 2 || mc.slots < 2 {
                return Err(Error::invalid(
                    "mc needs at least 2 slots and 2 samples per slot",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowSource {
    Analytic,
    Mc,
}

impl RowSource {
    fn as_str(&self) -> &'static str {
        match self {
            RowSource::Analytic => "analytic",
            RowSource::Mc => "mc",
        }
    }
}

/// One sweep row; both figure quantities are carried so either figure can be
/// plotted from the same file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub s: f64,
    pub eta: f64,
    pub loss: f64,
    pub d_db: f64,
    pub snr: f64,
    pub snr_db: Option<f64>,
    pub source: RowSource,
    pub mc_stderr_d: Option<f64>,
    pub mc_stderr_snr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

pub const CSV_HEADER: &str = "s,eta,loss,D_dB,SNR,SNR_dB,source,mc_stderr_D,mc_stderr_SNR";

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.s,
                r.eta,
                r.loss,
                r.d_db,
                r.snr,
                opt(r.snr_db),
                r.source.as_str(),
                opt(r.mc_stderr_d),
                opt(r.mc_stderr_snr),
            );
        }
        out
    }
}

/// Monte-Carlo estimate of (D, SNR) for one grid cell via known-bit slots.
fn mc_cell(s: f64, eta: f64, mc: &McParams, cell: u64) -> Result<SweepRow> {
    let cell_seed = stream_rng(mc.seed, DOMAIN_EXPERIMENT, cell).random::<u64>();
    let mut config = ProtocolConfig::new(SqueezeParams::new(s, 0.0)?, cell_seed);
    config.samples_per_slot = mc.samples_per_slot;
    let cal = calibrate_channel(&config, &ChannelModel { eta }, mc.slots)?;
    let slots_min = mc.slots.div_ceil(2);
    let slots_max = mc.slots / 2;
    let dof_min = slots_min * (mc.samples_per_slot - 1);
    let dof_max = slots_max * (mc.samples_per_slot - 1);
    let db_per_rel = 10.0 / std::f64::consts::LN_10;
    let stderr_d = db_per_rel * (2.0 / dof_min as f64).sqrt();
    let snr_est = cal.baseline_snr;
    let stderr_snr =
        (snr_est + 1.0) * (2.0 / dof_min as f64 + 2.0 / dof_max as f64).sqrt();
    Ok(SweepRow {
        s,
        eta,
        loss: snap(1.0 - eta),
        d_db: cal.baseline_d_db,
        snr: snr_est,
        snr_db: cal.baseline_snr_db,
        source: RowSource::Mc,
        mc_stderr_d: Some(stderr_d),
        mc_stderr_snr: Some(stderr_snr),
    })
}

fn analytic_cell(s: f64, eta: f64) -> SweepRow {
    let p = SqueezeParams::new(s, 0.0).expect("validated");
    SweepRow {
        s,
        eta,
        loss: snap(1.0 - eta),
        d_db: degree_of_squeezing(p, eta),
        snr: snr(p, eta),
        snr_db: snr_db(p, eta),
        source: RowSource::Analytic,
        mc_stderr_d: None,
        mc_stderr_snr: None,
    }
}

/// Run a sweep; rows are ordered s-major, η-minor (analytic row before the
/// MC row of the same cell) independent of execution order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let etas = spec.eta_grid.points();
    let mut cells = Vec::new();
    for (si, s) in spec.s_values.iter().enumerate() {
        for (ei, eta) in etas.iter().enumerate() {
            cells.push((si, ei, *s, *eta));
        }
    }
    let want_analytic = matches!(spec.output, SweepOutput::Analytic | SweepOutput::Both);
    let want_mc = matches!(spec.output, SweepOutput::MonteCarlo | SweepOutput::Both);
    let rows: Result<Vec<Vec<SweepRow>>> = cells
        .par_iter()
        .map(|(si, ei, s, eta)| {
            let mut out = Vec::with_capacity(2);
            if want_analytic {
                out.push(analytic_cell(*s, *eta));
            }
            if want_mc {
                let mc = spec.mc.as_ref().expect("validated");
                let cell = (*si as u64) * etas.len() as u64 + *ei as u64;
                out.push(mc_cell(*s, *eta, mc, cell)?);
            }
            Ok(out)
        })
        .collect();
    Ok(SweepResult {
        rows: rows?.into_iter().flatten().collect(),
    })
}

/// Degree-of-squeezing sweep (data behind the loss-vs-squeezing figure).
pub fn sweep_degree(spec: &SweepSpec) -> Result<SweepResult> {
    run_sweep(spec)
}

/// SNR sweep (data behind the loss-vs-SNR figure). Same schema; both
/// quantities ride in every row.
pub fn sweep_snr(spec: &SweepSpec) -> Result<SweepResult> {
    run_sweep(spec)
}

/// The headline numbers: what a 7% interception does at s = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadlineReport {
    pub d_db_at_full_transmission: f64,
    pub d_db_at_93: f64,
    pub delta_d_db: f64,
    pub snr_db_at_full_transmission: f64,
    pub snr_db_at_93: f64,
    pub delta_snr_db: f64,
    pub pass: bool,
}

impl HeadlineReport {
    pub fn summary(&self) -> String {
        format!(
            "headline check [{}]: |D(eta=1)| = {:.3} dB (want 8.5..8.8), \
             dD = {:.3} dB, dSNR = {:.3} dB (want 0.8..1.2 at 7% interception)",
            if self.pass { "pass" } else { "FAIL" },
            self.d_db_at_full_transmission.abs(),
            self.delta_d_db,
            self.delta_snr_db,
        )
    }
}

/// Evaluate the 7%-interception headline at s = 1: both the squeezing-degree
/// drop and the SNR drop must land in [0.8, 1.2] dB, and the lossless
/// squeezing degree must sit in [8.5, 8.8] dB.
pub fn headline_check() -> HeadlineReport {
    let p = SqueezeParams::new(1.0, 0.0).expect("static");
    let d1 = degree_of_squeezing(p, 1.0);
    let d93 = degree_of_squeezing(p, 0.93);
    let s1 = snr_db(p, 1.0).expect("positive at s=1");
    let s93 = snr_db(p, 0.93).expect("positive at s=1");
    let delta_d = d93 - d1;
    let delta_snr = s1 - s93;
    let pass = (0.8..=1.2).contains(&delta_d)
        && (0.8..=1.2).contains(&delta_snr)
        && (8.5..=8.8).contains(&d1.abs());
    HeadlineReport {
        d_db_at_full_transmission: d1,
        d_db_at_93: d93,
        delta_d_db: delta_d,
        snr_db_at_full_transmission: s1,
        snr_db_at_93: s93,
        delta_snr_db: delta_snr,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points_snap_exactly() {
        let grid = EtaGrid {
            start: 0.0,
            stop: 1.0,
            step: 0.01,
        };
        let pts = grid.points();
        assert_eq!(pts.len(), 101);
        assert!(pts.contains(&0.93));
        assert!(pts.contains(&1.0));
        assert!(pts.contains(&0.0));
        assert_eq!(pts[7], 0.07);
    }

    #[test]
    fn spec_validation() {
        let mut spec = SweepSpec::default_figures();
        spec.validate().unwrap();
        spec.s_values.clear();
        assert!(spec.validate().is_err());
        let mut spec = SweepSpec::default_figures();
        spec.eta_grid.step = 0.0;
        assert!(spec.validate().is_err());
        let mut spec = SweepSpec::default_figures();
        spec.output = SweepOutput::Both;
        assert!(spec.validate().is_err(), "mc params required");
    }

    #[test]
    fn analytic_rows_frozen_and_monotone() {
        let spec = SweepSpec {
            s_values: vec![0.0, 1.0],
            eta_grid: EtaGrid {
                start: 0.0,
                stop: 1.0,
                step: 0.01,
            },
            output: SweepOutput::Analytic,
            mc: None,
        };
        let result = run_sweep(&spec).unwrap();
        assert_eq!(result.rows.len(), 2 * 101);
        let row_1_1 = result
            .rows
            .iter()
            .find(|r| r.s == 1.0 && r.eta == 1.0)
            .unwrap();
        assert!((row_1_1.d_db - -8.685_889_638_065_037).abs() < 1e-12);
        assert!((row_1_1.snr - 53.598_150_033_144_236).abs() < 1e-10);
        // s = 0: D vanishes to rounding, SNR identically zero
        for r in result.rows.iter().filter(|r| r.s == 0.0) {
            assert!(r.d_db.abs() < 1e-12);
            assert_eq!(r.snr, 0.0);
            assert_eq!(r.snr_db, None);
        }
        // s = 1: D strictly increasing with loss, SNR strictly decreasing;
        // crosses 0 dB before full loss
        let s1: Vec<&SweepRow> = result.rows.iter().filter(|r| r.s == 1.0).collect();
        for w in s1.windows(2) {
            assert!(w[1].loss < w[0].loss); // eta ascending
            assert!(w[1].d_db < w[0].d_db);
            assert!(w[1].snr > w[0].snr);
        }
        assert!(s1.first().unwrap().d_db > 0.0);
        assert!(s1.last().unwrap().d_db < 0.0);
        // SNR at eta = 0 vanishes
        let at_zero = s1.iter().find(|r| r.eta == 0.0).unwrap();
        assert_eq!(at_zero.snr, 0.0);
    }

    #[test]
    fn csv_shape_and_determinism() {
        let spec = SweepSpec {
            s_values: vec![1.0],
            eta_grid: EtaGrid {
                start: 0.9,
                stop: 1.0,
                step: 0.01,
            },
            output: SweepOutput::Analytic,
            mc: None,
        };
        let a = run_sweep(&spec).unwrap().to_csv();
        let b = run_sweep(&spec).unwrap().to_csv();
        assert_eq!(a, b);
        let mut lines = a.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let first = lines.next().unwrap();
        assert!(first.starts_with("1,0.9,0.1,"));
        assert!(first.ends_with(",analytic,,"));
        assert_eq!(a.lines().count(), 12);
    }

    #[test]
    fn mc_rows_within_four_stderr() {
        let spec = SweepSpec {
            s_values: vec![0.5, 1.0],
            eta_grid: EtaGrid {
                start: 0.5,
                stop: 1.0,
                step: 0.25,
            },
            output: SweepOutput::Both,
            mc: Some(McParams {
                samples_per_slot: 200,
                slots: 60,
                seed: 5,
            }),
        };
        let result = run_sweep(&spec).unwrap();
        let analytic: Vec<&SweepRow> = result
            .rows
            .iter()
            .filter(|r| r.source == RowSource::Analytic)
            .collect();
        let mc: Vec<&SweepRow> = result
            .rows
            .iter()
            .filter(|r| r.source == RowSource::Mc)
            .collect();
        assert_eq!(analytic.len(), mc.len());
        for (a, m) in analytic.iter().zip(&mc) {
            assert_eq!((a.s, a.eta), (m.s, m.eta));
            let sd = m.mc_stderr_d.unwrap();
            assert!(
                (m.d_db - a.d_db).abs() < 4.0 * sd,
                "D at s={}, eta={}: {} vs {} (stderr {})",
                a.s,
                a.eta,
                m.d_db,
                a.d_db,
                sd
            );
            let ss = m.mc_stderr_snr.unwrap();
            assert!(
                (m.snr - a.snr).abs() < 4.0 * ss,
                "SNR at s={}, eta={}: {} vs {} (stderr {})",
                a.s,
                a.eta,
                m.snr,
                a.snr,
                ss
            );
        }
    }

    #[test]
    fn headline_numbers() {
        let report = headline_check();
        assert!(report.pass, "{}", report.summary());
        assert!((report.delta_d_db - 0.936_430_967_310_508_7).abs() < 1e-9);
        assert!((report.delta_snr_db - 1.094_016_224_540_830_3).abs() < 1e-9);
        assert!(report.summary().contains("pass"));
    }

    #[test]
    fn grid_refinement_keeps_values() {
        let coarse = SweepSpec {
            s_values: vec![1.0],
            eta_grid: EtaGrid {
                start: 0.0,
                stop: 1.0,
                step: 0.2,
            },
            output: SweepOutput::Analytic,
            mc: None,
        };
        let fine = SweepSpec {
            eta_grid: EtaGrid {
                start: 0.0,
                stop: 1.0,
                step: 0.1,
            },
            ..coarse.clone()
        };
        let coarse_rows = run_sweep(&coarse).unwrap();
        let fine_rows = run_sweep(&fine).unwrap();
        for c in &coarse_rows.rows {
            let f = fine_rows
                .rows
                .iter()
                .find(|r| r.eta == c.eta)
                .expect("shared grid point");
            assert_eq!(c.d_db, f.d_db);
            assert_eq!(c.snr, f.snr);
        }
    }
}
