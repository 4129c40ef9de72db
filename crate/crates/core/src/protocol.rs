//! The Alice/Bob protocol: bit encoding via Alice's LO phase, Bob's
//! fixed-phase measurements, public-channel exchange, variance-discrimination
//! decoding, and the check-bit message mode.
//!
//! Per slot a fresh two-mode squeezed state is prepared; the second mode
//! flies to Bob through the (possibly attacked) channel. Alice homodynes her
//! mode at `χ₁ = θ − χ₂ + Δ(bit)` with `Δ(0) = 0`, `Δ(1) = π`, so bit 0 sits
//! on the combined-variance minimum and bit 1 on the maximum; Bob never
//! moves his LO. Neither record alone carries the bits — Alice's and Bob's
//! marginals are thermal regardless of the encoding — only the combined
//! photocurrent does.
//!
//! Session ordering is strict: Bob finishes measuring before anything is
//! disclosed; check bits are disclosed and verified before the message
//! disclosure, which is withheld on alarm. Violations of that ordering are
//! programming errors and panic.
//!
//! Bob needs to know the expected variance levels to decode and verify, so
//! an explicit seeded calibration phase runs on the declared honest channel
//! before the session; that phase is an addition to the scheme as described
//! upstream, which leaves calibration implicit.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attacks::{
    apply_attack, security_verdict, AttackScenario, CheckStatistics, EveRecord, EveSlot,
    SecurityBaseline, SecurityReport, VerdictTolerances,
};
use crate::error::{Error, Result};
use crate::gaussian::{reduce_phase, GaussianState, SqueezeParams};
use crate::measurement::{
    combine_records, lossy_combined_variance, sample_joint_quadratures, stream_rng,
    LOSetting, PhotocurrentRecord, PublicRecord, QuadratureSelection, TimeSlot,
    DOMAIN_CALIBRATION_SLOT, DOMAIN_PROTOCOL,
};
use crate::stats::{pooled_variance, sample_variance};

pub const TRANSCRIPT_VERSION: u32 = 1;
/// At s = 1 this makes the two per-slot variance hypotheses essentially
/// non-overlapping (scaled χ² with variance ratio e⁴ gives per-slot error
/// far below 1e-6).
pub const DEFAULT_SAMPLES_PER_SLOT: usize = 200;
pub const DEFAULT_CHECK_BIT_FRACTION: f64 = 0.25;
/// Number of known-bit slots used by the in-session calibration phase.
pub const DEFAULT_CALIBRATION_SLOTS: usize = 100;

/// How a slot's variance estimate is turned into a bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Threshold at `√(V_min·V_max)`, which equalizes the χ² tail error
    /// exponents of the two hypotheses.
    GeometricMean,
    /// Exact Gaussian likelihood-ratio test between the two variance levels.
    LikelihoodRatio,
}

/// Honest-channel model: transmissivity of the mode sent to Bob.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub eta: f64,
}

impl ChannelModel {
    pub fn lossless() -> Self {
        Self { eta: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if (0.0..=1.0).contains(&self.eta) {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "channel transmissivity must lie in [0, 1], got {}",
                self.eta
            )))
        }
    }
}

/// Everything a session needs besides the payload and the channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub squeeze: SqueezeParams,
    pub samples_per_slot: usize,
    /// Bob's constant LO phase χ₂.
    pub bob_lo_phase: f64,
    /// Alice's LO-phase offset per bit value; bit 0 lands on the variance
    /// minimum by default.
    pub bit_phase_map: [f64; 2],
    /// Randomize the squeezing phase per slot (with χ₁ co-shifted).
    pub theta_modulation: bool,
    pub decision_threshold_mode: ThresholdMode,
    pub check_bit_fraction: f64,
    pub rng_seed: u64,
    pub verdict_tolerances: VerdictTolerances,
}

impl ProtocolConfig {
    pub fn new(squeeze: SqueezeParams, rng_seed: u64) -> Self {
        Self {
            squeeze,
            samples_per_slot: DEFAULT_SAMPLES_PER_SLOT,
            bob_lo_phase: 0.0,
            bit_phase_map: [0.0, std::f64::consts::PI],
            theta_modulation: false,
            decision_threshold_mode: ThresholdMode::GeometricMean,
            check_bit_fraction: DEFAULT_CHECK_BIT_FRACTION,
            rng_seed,
            verdict_tolerances: VerdictTolerances::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples_per_slot < 2 {
            return Err(Error::invalid(
                "samples_per_slot must be at least 2 for a variance estimate",
            ));
        }
        if !(self.check_bit_fraction > 0.0 && self.check_bit_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "check_bit_fraction must lie strictly inside (0, 1), got {}",
                self.check_bit_fraction
            )));
        }
        if !self.bob_lo_phase.is_finite()
            || self.bit_phase_map.iter().any(|p| !p.is_finite())
        {
            return Err(Error::invalid("LO phases must be finite"));
        }
        Ok(())
    }
}

/// Role of a slot in the schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlotRole {
    /// Carries payload bit `index` of the message or key.
    Message { index: usize },
    /// Carries a random check bit, disclosed for verification.
    Check,
}

/// Alice's private per-slot plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotPlan {
    pub slot_id: u64,
    pub role: SlotRole,
    pub bit: u8,
    pub theta: f64,
    pub alice_lo_phase: f64,
}

/// The full slot schedule of a session (private to Alice until the staged
/// disclosures).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotSchedule {
    pub slots: Vec<SlotPlan>,
}

impl SlotSchedule {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn check_slot_ids(&self) -> Vec<u64> {
        self.slots
            .iter()
            .filter(|p| p.role == SlotRole::Check)
            .map(|p| p.slot_id)
            .collect()
    }

    pub fn check_values(&self) -> Vec<u8> {
        self.slots
            .iter()
            .filter(|p| p.role == SlotRole::Check)
            .map(|p| p.bit)
            .collect()
    }

    pub fn message_slot_ids(&self) -> Vec<u64> {
        self.slots
            .iter()
            .filter(|p| matches!(p.role, SlotRole::Message { .. }))
            .map(|p| p.slot_id)
            .collect()
    }
}

fn alice_phase_for(config: &ProtocolConfig, theta: f64, bit: u8) -> f64 {
    reduce_phase(theta - config.bob_lo_phase + config.bit_phase_map[bit as usize])
}

fn slot_theta(config: &ProtocolConfig, rng: &mut impl rand::Rng) -> f64 {
    if config.theta_modulation {
        rng.random::<f64>() * std::f64::consts::TAU
    } else {
        config.squeeze.theta()
    }
}

/// Interleave check bits among the message bits at seeded-random positions.
///
/// With fraction `f` the schedule carries `max(1, round(f/(1−f)·len))` check
/// slots, so `f = 0.5` doubles the slot count. Check values are random;
/// positions are not derivable from the public record before disclosure.
pub fn make_message_session(
    message_bits: &[u8],
    config: &ProtocolConfig,
) -> Result<SlotSchedule> {
    config.validate()?;
    if message_bits.is_empty() {
        return Err(Error::invalid("message must be non-empty"));
    }
    if message_bits.iter().any(|b| *b > 1) {
        return Err(Error::invalid("bits must be 0 or 1"));
    }
    let f = config.check_bit_fraction;
    let n_msg = message_bits.len();
    let n_check = ((f / (1.0 - f)) * n_msg as f64).round().max(1.0) as usize;
    let total = n_msg + n_check;
    let mut rng = stream_rng(config.rng_seed, DOMAIN_PROTOCOL, 0);

    // seeded partial Fisher-Yates pick of the check positions
    let mut positions: Vec<usize> = (0..total).collect();
    for i in 0..n_check {
        let j = i + (rng.random::<u64>() as usize) % (total - i);
        positions.swap(i, j);
    }
    let mut is_check = vec![false; total];
    for &p in &positions[..n_check] {
        is_check[p] = true;
    }

    let mut slots = Vec::with_capacity(total);
    let mut msg_index = 0usize;
    for (slot, check) in is_check.iter().enumerate() {
        let (role, bit) = if *check {
            (SlotRole::Check, rng.random::<bool>() as u8)
        } else {
            let bit = message_bits[msg_index];
            let role = SlotRole::Message { index: msg_index };
            msg_index += 1;
            (role, bit)
        };
        let theta = slot_theta(config, &mut rng);
        slots.push(SlotPlan {
            slot_id: slot as u64,
            role,
            bit,
            theta,
            alice_lo_phase: alice_phase_for(config, theta, bit),
        });
    }
    Ok(SlotSchedule { slots })
}

/// A plain schedule with no check slots (every slot carries a payload bit).
pub fn schedule_from_bits(bits: &[u8], config: &ProtocolConfig) -> Result<SlotSchedule> {
    config.validate()?;
    if bits.is_empty() {
        return Err(Error::invalid("bit sequence must be non-empty"));
    }
    if bits.iter().any(|b| *b > 1) {
        return Err(Error::invalid("bits must be 0 or 1"));
    }
    let mut rng = stream_rng(config.rng_seed, DOMAIN_PROTOCOL, 0);
    let slots = bits
        .iter()
        .enumerate()
        .map(|(i, &bit)| {
            let theta = slot_theta(config, &mut rng);
            SlotPlan {
                slot_id: i as u64,
                role: SlotRole::Message { index: i },
                bit,
                theta,
                alice_lo_phase: alice_phase_for(config, theta, bit),
            }
        })
        .collect();
    Ok(SlotSchedule { slots })
}

/// Seeded random payload bits (used by the CLI's `--random-bits`).
pub fn random_payload_bits(config: &ProtocolConfig, n: usize) -> Vec<u8> {
    let mut rng = stream_rng(config.rng_seed, DOMAIN_PROTOCOL, 1);
    (0..n).map(|_| rng.random::<bool>() as u8).collect()
}

/// Records produced by running a schedule through the channel.
#[derive(Debug, Clone)]
pub struct EncodedSession {
    pub alice: PhotocurrentRecord,
    pub bob: PhotocurrentRecord,
    pub eve: Option<EveRecord>,
    /// Ground-truth metadata (bits, squeezing phases, LO schedule).
    pub schedule: SlotSchedule,
}

/// Run the quantum phase of a schedule: prepare, transmit, attack, measure.
///
/// Every slot derives its RNG from `(rng_seed, slot_id)`, so the slot loop
/// parallelizes without changing any sample.
fn measure_schedule(
    schedule: &SlotSchedule,
    config: &ProtocolConfig,
    channel: &ChannelModel,
    attack: &AttackScenario,
    calibration_domain: bool,
) -> Result<EncodedSession> {
    config.validate()?;
    channel.validate()?;
    attack.validate()?;
    let n = config.samples_per_slot;
    let domain = if calibration_domain {
        DOMAIN_CALIBRATION_SLOT
    } else {
        crate::measurement::DOMAIN_SESSION_SLOT
    };

    struct SlotOut {
        alice: TimeSlot,
        bob: TimeSlot,
        eve: Option<EveSlot>,
    }

    let outs: Result<Vec<SlotOut>> = schedule
        .slots
        .par_iter()
        .map(|plan| {
            let base = GaussianState::tmss(SqueezeParams::new(config.squeeze.s(), plan.theta)?);
            let transmitted = if channel.eta < 1.0 {
                base.loss_channel(1, channel.eta)?
            } else {
                base
            };
            let (state, topo) =
                apply_attack(&transmitted, 1, attack, config.rng_seed, plan.slot_id)?;
            let mut selections = vec![
                QuadratureSelection {
                    mode: 0,
                    lo: LOSetting::new(plan.alice_lo_phase),
                },
                QuadratureSelection {
                    mode: topo.bob_mode,
                    lo: LOSetting::new(config.bob_lo_phase),
                },
            ];
            if let Some(eve_mode) = topo.eve_mode {
                // Eve mimics Bob's public LO convention
                selections.push(QuadratureSelection {
                    mode: eve_mode,
                    lo: LOSetting::new(config.bob_lo_phase),
                });
            }
            let mut rng = stream_rng(config.rng_seed, domain, plan.slot_id);
            let mut cols = sample_joint_quadratures(&state, &selections, n, &mut rng)?;
            let eve = topo.eve_mode.map(|_| EveSlot {
                slot_id: plan.slot_id,
                samples: cols.pop().expect("eve column present"),
                bit_estimate: None,
            });
            let bob = TimeSlot {
                slot_id: plan.slot_id,
                samples: cols.pop().expect("bob column present"),
                lo_phase_used: Some(config.bob_lo_phase),
            };
            let alice = TimeSlot {
                slot_id: plan.slot_id,
                samples: cols.pop().expect("alice column present"),
                lo_phase_used: Some(plan.alice_lo_phase),
            };
            Ok(SlotOut { alice, bob, eve })
        })
        .collect();
    let outs = outs?;

    let mut alice = PhotocurrentRecord { slots: Vec::with_capacity(outs.len()) };
    let mut bob = PhotocurrentRecord { slots: Vec::with_capacity(outs.len()) };
    let mut eve_slots = Vec::new();
    for out in outs {
        alice.slots.push(out.alice);
        bob.slots.push(out.bob);
        if let Some(e) = out.eve {
            eve_slots.push(e);
        }
    }
    let eve = (!eve_slots.is_empty()).then_some(EveRecord { slots: eve_slots });
    Ok(EncodedSession {
        alice,
        bob,
        eve,
        schedule: schedule.clone(),
    })
}

/// Encode a bit sequence: one slot per bit, no check interleaving.
///
/// Returns Alice's and Bob's photocurrent records plus the ground-truth
/// schedule (and Eve's record where the attack gives her one).
pub fn alice_encode(
    bits: &[u8],
    config: &ProtocolConfig,
    channel: &ChannelModel,
    attack: &AttackScenario,
) -> Result<EncodedSession> {
    let schedule = schedule_from_bits(bits, config)?;
    measure_schedule(&schedule, config, channel, attack, false)
}

/// How the calibration values were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationSource {
    Analytic,
    MonteCarlo,
}

/// Variance levels (and derived figures) of the trusted channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelCalibration {
    pub v_min: f64,
    pub v_max: f64,
    /// Squeezing magnitude inferred from the two levels.
    pub s_eff: Option<f64>,
    /// Transmissivity inferred from the two levels.
    pub eta_est: Option<f64>,
    pub baseline_d_db: f64,
    pub baseline_snr: f64,
    pub baseline_snr_db: Option<f64>,
    pub n_slots: usize,
    pub samples_per_slot: usize,
    pub source: CalibrationSource,
}

impl ChannelCalibration {
    /// Exact baseline from the closed-form variance law.
    pub fn analytic(squeeze: SqueezeParams, eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::invalid(format!(
                "transmissivity must lie in [0, 1], got {eta}"
            )));
        }
        let lo = LOSetting::new(0.0);
        let v_min =
            lossy_combined_variance(SqueezeParams::new(squeeze.s(), 0.0)?, lo, lo, eta)?;
        let v_max = lossy_combined_variance(
            SqueezeParams::new(squeeze.s(), std::f64::consts::PI)?,
            lo,
            lo,
            eta,
        )?;
        Ok(Self::from_levels(
            v_min,
            v_max,
            0,
            0,
            CalibrationSource::Analytic,
        ))
    }

    fn from_levels(
        v_min: f64,
        v_max: f64,
        n_slots: usize,
        samples_per_slot: usize,
        source: CalibrationSource,
    ) -> Self {
        let snr = (v_max - v_min) / v_min;
        let (s_eff, eta_est) = infer_squeeze_and_eta(v_min, v_max);
        Self {
            v_min,
            v_max,
            s_eff,
            eta_est,
            baseline_d_db: 10.0 * (v_min / 2.0).log10(),
            baseline_snr: snr,
            baseline_snr_db: (snr > 0.0).then(|| 10.0 * snr.log10()),
            n_slots,
            samples_per_slot,
            source,
        }
    }

    pub fn baseline(&self) -> SecurityBaseline {
        SecurityBaseline {
            d_db: self.baseline_d_db,
            snr: self.baseline_snr,
        }
    }

    /// Decision threshold between the two variance hypotheses.
    pub fn geometric_threshold(&self) -> f64 {
        (self.v_min * self.v_max).sqrt()
    }
}

/// Invert the variance extremes for `(s, η)`.
///
/// `V_max ± V_min` pin `sinh 2s = Q/(4√η)` and a second relation solved for
/// η by bisection; estimates are informational (decoding uses the levels
/// directly) and `None` when the contrast is degenerate.
fn infer_squeeze_and_eta(v_min: f64, v_max: f64) -> (Option<f64>, Option<f64>) {
    let p = v_min + v_max;
    let q = v_max - v_min;
    if !(q > 1e-12 && v_min > 0.0) {
        return (None, None);
    }
    let residual = |eta: f64| {
        let sinh2s = q / (4.0 * eta.sqrt());
        let cosh2s = (1.0 + sinh2s * sinh2s).sqrt();
        2.0 * ((1.0 - eta) + (1.0 + eta) * cosh2s) - p
    };
    let mut lo = 1e-6;
    let mut hi = 1.0;
    if residual(hi) > 0.0 {
        // measured contrast exceeds any physical η ≤ 1; clamp to lossless
        let s = 0.5 * (q / 4.0).asinh();
        return (Some(s), Some(1.0));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let eta = 0.5 * (lo + hi);
    let s = 0.5 * (q / (4.0 * eta.sqrt())).asinh();
    (Some(s), Some(eta))
}

/// Estimate the channel's variance levels from known-bit calibration slots
/// run on the declared honest channel.
///
/// Callers assert the honesty assumption by construction: no attack is
/// applied here. Needs at least two slots (one per bit value).
pub fn calibrate_channel(
    config: &ProtocolConfig,
    channel: &ChannelModel,
    n_calibration_slots: usize,
) -> Result<ChannelCalibration> {
    config.validate()?;
    channel.validate()?;
    if n_calibration_slots < 2 {
        return Err(Error::InsufficientSlots {
            got: n_calibration_slots,
            need: 2,
        });
    }
    let bits: Vec<u8> = (0..n_calibration_slots).map(|i| (i % 2) as u8).collect();
    let schedule = schedule_from_bits(&bits, config)?;
    let run = measure_schedule(&schedule, config, channel, &AttackScenario::None, true)?;
    let combined = combine_records(
        &run.alice.public_payload(),
        &run.bob.public_payload(),
    )?;
    let split = |bit: u8| {
        let arrs: Vec<&[f64]> = schedule
            .slots
            .iter()
            .zip(&combined)
            .filter(|(plan, _)| plan.bit == bit)
            .map(|(_, samples)| samples.as_slice())
            .collect();
        pooled_variance(arrs)
    };
    let (v_min, _) = split(0);
    let (v_max, _) = split(1);
    Ok(ChannelCalibration::from_levels(
        v_min,
        v_max,
        n_calibration_slots,
        config.samples_per_slot,
        CalibrationSource::MonteCarlo,
    ))
}

/// One decoded slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BitDecision {
    pub slot_id: u64,
    pub estimated_variance: f64,
    pub threshold: f64,
    pub decoded_bit: u8,
    /// Log-likelihood of bit 0 minus bit 1 under the calibrated levels.
    pub llr_margin: f64,
}

fn decide_slot(
    slot_id: u64,
    combined: &[f64],
    calibration: &ChannelCalibration,
    mode: ThresholdMode,
) -> BitDecision {
    let n = combined.len() as f64;
    let est = sample_variance(combined);
    let (v0, v1) = (calibration.v_min, calibration.v_max);
    // combined photocurrent has zero mean by construction
    let ss: f64 = combined.iter().map(|z| z * z).sum();
    let llr = 0.5 * n * (v1 / v0).ln() + 0.5 * ss * (1.0 / v1 - 1.0 / v0);
    let (threshold, decoded_bit) = match mode {
        ThresholdMode::GeometricMean => {
            let t = calibration.geometric_threshold();
            // ties break toward bit 1 (the alarm-conservative side)
            (t, u8::from(!(est < t)))
        }
        ThresholdMode::LikelihoodRatio => {
            let ss_star = n * (v1 / v0).ln() / (1.0 / v0 - 1.0 / v1);
            (ss_star / n, u8::from(!(llr > 0.0)))
        }
    };
    BitDecision {
        slot_id,
        estimated_variance: est,
        threshold,
        decoded_bit,
        llr_margin: llr,
    }
}

/// Decode every slot of the combined records against the calibrated levels.
pub fn bob_decode(
    bob_record: &PhotocurrentRecord,
    alice_public: &PublicRecord,
    config: &ProtocolConfig,
    calibration: Option<&ChannelCalibration>,
) -> Result<Vec<BitDecision>> {
    let calibration = calibration.ok_or(Error::CalibrationMissing)?;
    let combined = combine_records(&bob_record.public_payload(), alice_public)?;
    Ok(bob_record
        .slots
        .iter()
        .zip(&combined)
        .map(|(slot, samples)| {
            decide_slot(
                slot.slot_id,
                samples,
                calibration,
                config.decision_threshold_mode,
            )
        })
        .collect())
}

/// Key distribution or direct message transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionKind {
    Key,
    Message,
}

/// Everything sent over the public channel, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "message", rename_all = "snake_case")]
pub enum PublicMessage {
    /// Alice's full public record (key mode: sent right after Bob finishes
    /// measuring).
    AliceRecord { record: PublicRecord },
    /// Which slots were check slots, their bit values, and (in message mode)
    /// Alice's samples for exactly those slots.
    CheckDisclosure {
        slot_ids: Vec<u64>,
        values: Vec<u8>,
        record: Option<PublicRecord>,
    },
    /// Alice's samples for the message slots; only sent when the verdict is
    /// secure.
    MessageDisclosure { record: PublicRecord },
}

/// Full account of one session run.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionTranscript {
    pub version: u32,
    pub kind: SessionKind,
    pub config: ProtocolConfig,
    pub channel: ChannelModel,
    pub attack: AttackScenario,
    pub calibration: ChannelCalibration,
    pub public_messages: Vec<PublicMessage>,
    /// Per-slot decisions for every slot Bob could decode, in slot order.
    pub decisions: Vec<BitDecision>,
    /// Per-slot decoded bits; `None` where the slot was never disclosed.
    pub decoded_bits: Vec<Option<u8>>,
    /// The recovered payload (key bits, or the message when disclosed).
    pub decoded_payload: Option<Vec<u8>>,
    pub security: SecurityReport,
    pub alice_private: AlicePrivate,
    pub bob_private: BobPrivate,
    pub eve: Option<EveRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlicePrivate {
    pub payload_bits: Vec<u8>,
    pub schedule: SlotSchedule,
    pub record: PhotocurrentRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BobPrivate {
    pub record: PhotocurrentRecord,
}

#[derive(Serialize)]
struct TranscriptExport<'a> {
    version: u32,
    kind: SessionKind,
    config: &'a ProtocolConfig,
    channel: &'a ChannelModel,
    attack: &'a AttackScenario,
    calibration: &'a ChannelCalibration,
    public_messages: &'a [PublicMessage],
    decisions: &'a [BitDecision],
    decoded_bits: &'a [Option<u8>],
    decoded_payload: &'a Option<Vec<u8>>,
    security: &'a SecurityReport,
    include_private: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    private: Option<PrivateExport<'a>>,
}

#[derive(Serialize)]
struct PrivateExport<'a> {
    alice: &'a AlicePrivate,
    bob: &'a BobPrivate,
    eve: &'a Option<EveRecord>,
}

impl SessionTranscript {
    /// Versioned JSON export; private fields appear only when asked for and
    /// the file is marked accordingly.
    pub fn to_json(&self, include_private: bool) -> String {
        let export = TranscriptExport {
            version: self.version,
            kind: self.kind,
            config: &self.config,
            channel: &self.channel,
            attack: &self.attack,
            calibration: &self.calibration,
            public_messages: &self.public_messages,
            decisions: &self.decisions,
            decoded_bits: &self.decoded_bits,
            decoded_payload: &self.decoded_payload,
            security: &self.security,
            include_private,
            private: include_private.then_some(PrivateExport {
                alice: &self.alice_private,
                bob: &self.bob_private,
                eve: &self.eve,
            }),
        };
        serde_json::to_string_pretty(&export).expect("transcript serialization cannot fail")
    }

    /// Bit error rate of the decoded payload against the ground truth;
    /// `None` when the payload was withheld.
    pub fn payload_ber(&self) -> Option<f64> {
        let decoded = self.decoded_payload.as_ref()?;
        let truth = &self.alice_private.payload_bits;
        if decoded.len() != truth.len() {
            return None;
        }
        let errors = decoded
            .iter()
            .zip(truth)
            .filter(|(d, t)| d != t)
            .count();
        Some(errors as f64 / truth.len() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Prepared,
    Measured,
    ChecksDisclosed,
    Verified,
}

/// The session driver; phases advance strictly in order and regressions are
/// programming errors that panic.
struct Session<'a> {
    config: &'a ProtocolConfig,
    kind: SessionKind,
    channel: &'a ChannelModel,
    attack: &'a AttackScenario,
    calibration: ChannelCalibration,
    schedule: SlotSchedule,
    payload_bits: Vec<u8>,
    phase: Phase,
    run: Option<EncodedSession>,
    public_messages: Vec<PublicMessage>,
    check_decisions: Vec<BitDecision>,
    security: Option<SecurityReport>,
}

impl<'a> Session<'a> {
    fn prepare(
        config: &'a ProtocolConfig,
        kind: SessionKind,
        payload_bits: &[u8],
        channel: &'a ChannelModel,
        attack: &'a AttackScenario,
    ) -> Result<Self> {
        let calibration = calibrate_channel(config, channel, DEFAULT_CALIBRATION_SLOTS)?;
        let schedule = make_message_session(payload_bits, config)?;
        Ok(Self {
            config,
            kind,
            channel,
            attack,
            calibration,
            schedule,
            payload_bits: payload_bits.to_vec(),
            phase: Phase::Prepared,
            run: None,
            public_messages: Vec::new(),
            check_decisions: Vec::new(),
            security: None,
        })
    }

    fn expect_phase(&self, expected: Phase, step: &str) {
        assert!(
            self.phase == expected,
            "protocol ordering violated: {step} called in phase {:?}",
            self.phase
        );
    }

    fn measure(&mut self) -> Result<()> {
        self.expect_phase(Phase::Prepared, "measure");
        self.run = Some(measure_schedule(
            &self.schedule,
            self.config,
            self.channel,
            self.attack,
            false,
        )?);
        self.phase = Phase::Measured;
        Ok(())
    }

    fn disclose_checks(&mut self) -> Result<()> {
        self.expect_phase(Phase::Measured, "disclose_checks");
        let run = self.run.as_ref().expect("measured");
        let check_ids = self.schedule.check_slot_ids();
        let values = self.schedule.check_values();
        match self.kind {
            SessionKind::Key => {
                // the whole record goes public first, then the check reveal
                self.public_messages.push(PublicMessage::AliceRecord {
                    record: run.alice.public_payload(),
                });
                self.public_messages.push(PublicMessage::CheckDisclosure {
                    slot_ids: check_ids,
                    values,
                    record: None,
                });
            }
            SessionKind::Message => {
                let check_record = run.alice.select_slots(&check_ids)?.public_payload();
                self.public_messages.push(PublicMessage::CheckDisclosure {
                    slot_ids: check_ids,
                    values,
                    record: Some(check_record),
                });
            }
        }
        self.phase = Phase::ChecksDisclosed;
        Ok(())
    }

    fn verify(&mut self) -> Result<()> {
        self.expect_phase(Phase::ChecksDisclosed, "verify");
        let run = self.run.as_ref().expect("measured");
        let check_ids = self.schedule.check_slot_ids();
        let values = self.schedule.check_values();
        let bob_checks = run.bob.select_slots(&check_ids)?;
        let alice_checks = run.alice.select_slots(&check_ids)?.public_payload();
        let combined = combine_records(&bob_checks.public_payload(), &alice_checks)?;

        let pool = |bit: u8| {
            let arrs: Vec<&[f64]> = values
                .iter()
                .zip(&combined)
                .filter(|(v, _)| **v == bit)
                .map(|(_, s)| s.as_slice())
                .collect();
            pooled_variance(arrs)
        };
        let (mut v_min_est, dof_min) = pool(0);
        let (mut v_max_est, dof_max) = pool(1);
        // a missing pool (possible at the 1-check-slot floor) inherits the
        // calibrated level: no evidence of deviation on that side
        if dof_min == 0 {
            v_min_est = self.calibration.v_min;
        }
        if dof_max == 0 {
            v_max_est = self.calibration.v_max;
        }
        let measured = CheckStatistics {
            v_min_est,
            v_max_est,
            n_check_slots: check_ids.len(),
            dof_min,
            dof_max,
        };
        self.security = Some(security_verdict(
            &self.calibration.baseline(),
            &measured,
            &self.config.verdict_tolerances,
        )?);

        // Bob's decisions on the disclosed check slots
        self.check_decisions = bob_decode(
            &bob_checks,
            &alice_checks,
            self.config,
            Some(&self.calibration),
        )?;
        self.phase = Phase::Verified;
        Ok(())
    }

    fn finish(mut self) -> Result<SessionTranscript> {
        self.expect_phase(Phase::Verified, "finish");
        let run = self.run.take().expect("measured");
        let security = self.security.take().expect("verified");
        let msg_ids = self.schedule.message_slot_ids();
        let mut decisions = self.check_decisions.clone();

        let message_disclosed = match self.kind {
            SessionKind::Key => true,
            // withheld on alarm: a different channel must be used
            SessionKind::Message => !security.is_alarm(),
        };

        if message_disclosed {
            if self.kind == SessionKind::Message {
                let record = run.alice.select_slots(&msg_ids)?.public_payload();
                self.public_messages
                    .push(PublicMessage::MessageDisclosure { record });
            }
            let bob_msg = run.bob.select_slots(&msg_ids)?;
            let alice_msg = run.alice.select_slots(&msg_ids)?.public_payload();
            decisions.extend(bob_decode(
                &bob_msg,
                &alice_msg,
                self.config,
                Some(&self.calibration),
            )?);
        }
        decisions.sort_by_key(|d| d.slot_id);

        let mut decoded_bits: Vec<Option<u8>> = vec![None; self.schedule.len()];
        for d in &decisions {
            decoded_bits[d.slot_id as usize] = Some(d.decoded_bit);
        }
        let decoded_payload = message_disclosed.then(|| {
            let mut payload = vec![0u8; self.payload_bits.len()];
            for plan in &self.schedule.slots {
                if let SlotRole::Message { index } = plan.role {
                    payload[index] =
                        decoded_bits[plan.slot_id as usize].expect("message slot decoded");
                }
            }
            payload
        });

        let mut eve = run.eve;
        if let (Some(eve_rec), AttackScenario::PartialTap { eta, .. }) =
            (eve.as_mut(), self.attack)
        {
            // Eve's decode attempt once everything she'll ever see is public
            let mut disclosed: Vec<u64> = Vec::new();
            for msg in &self.public_messages {
                match msg {
                    PublicMessage::AliceRecord { record }
                    | PublicMessage::MessageDisclosure { record } => {
                        disclosed.extend(record.slots.iter().map(|s| s.slot_id));
                    }
                    PublicMessage::CheckDisclosure {
                        record: Some(record),
                        ..
                    } => {
                        disclosed.extend(record.slots.iter().map(|s| s.slot_id));
                    }
                    _ => {}
                }
            }
            eve_rec.slots.retain(|s| disclosed.contains(&s.slot_id));
            if !eve_rec.slots.is_empty() {
                crate::attacks::eve_tap_decode(
                    eve_rec,
                    &run.alice.public_payload(),
                    self.config.squeeze,
                    *eta,
                )?;
            }
        }

        Ok(SessionTranscript {
            version: TRANSCRIPT_VERSION,
            kind: self.kind,
            config: *self.config,
            channel: *self.channel,
            attack: *self.attack,
            calibration: self.calibration,
            public_messages: self.public_messages,
            decisions,
            decoded_bits,
            decoded_payload,
            security,
            alice_private: AlicePrivate {
                payload_bits: self.payload_bits,
                schedule: self.schedule,
                record: run.alice,
            },
            bob_private: BobPrivate { record: run.bob },
            eve,
        })
    }
}

/// Run a complete session: calibrate, schedule, measure, disclose checks,
/// verify, then decode (message disclosure withheld on alarm).
pub fn run_session(
    config: &ProtocolConfig,
    kind: SessionKind,
    payload_bits: &[u8],
    channel: &ChannelModel,
    attack: &AttackScenario,
) -> Result<SessionTranscript> {
    let mut session = Session::prepare(config, kind, payload_bits, channel, attack)?;
    session.measure()?;
    session.disclose_checks()?;
    session.verify()?;
    session.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::Verdict;
    use approx::assert_relative_eq;

    fn config(seed: u64) -> ProtocolConfig {
        ProtocolConfig::new(SqueezeParams::new(1.0, 0.0).unwrap(), seed)
    }

    #[test]
    fn config_validation() {
        let mut c = config(1);
        c.validate().unwrap();
        c.samples_per_slot = 1;
        assert!(c.validate().is_err());
        let mut c = config(1);
        c.check_bit_fraction = 0.0;
        assert!(c.validate().is_err());
        c.check_bit_fraction = 1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn schedule_interleaving_counts_and_determinism() {
        let mut c = config(5);
        c.check_bit_fraction = 0.5;
        let msg = vec![1u8; 100];
        let sched = make_message_session(&msg, &c).unwrap();
        assert_eq!(sched.len(), 200);
        assert_eq!(sched.check_slot_ids().len(), 100);
        assert_eq!(sched.message_slot_ids().len(), 100);
        // reconstruction from the same seed is identical
        let again = make_message_session(&msg, &c).unwrap();
        assert_eq!(sched, again);
        // different seed moves the check positions
        let mut c2 = c;
        c2.rng_seed = 6;
        let other = make_message_session(&msg, &c2).unwrap();
        assert_ne!(sched.check_slot_ids(), other.check_slot_ids());
        // message bits preserved in order
        let recovered: Vec<u8> = sched
            .slots
            .iter()
            .filter(|p| matches!(p.role, SlotRole::Message { .. }))
            .map(|p| p.bit)
            .collect();
        assert_eq!(recovered, msg);
    }

    #[test]
    fn at_least_one_check_slot() {
        let mut c = config(5);
        c.check_bit_fraction = 1e-9;
        let sched = make_message_session(&[0, 1, 0], &c).unwrap();
        assert_eq!(sched.check_slot_ids().len(), 1);
        assert_eq!(sched.len(), 4);
    }

    #[test]
    fn schedule_rejects_bad_input() {
        let c = config(5);
        assert!(make_message_session(&[], &c).is_err());
        assert!(make_message_session(&[2], &c).is_err());
    }

    #[test]
    fn bit_zero_lands_on_minimum() {
        // analytic check of the phase bookkeeping: Δ = χ1+χ2−θ = bit·π
        let mut c = config(9);
        c.bob_lo_phase = 0.7;
        c.squeeze = SqueezeParams::new(1.0, 2.1).unwrap();
        for (bit, want) in [(0u8, 0.0), (1u8, std::f64::consts::PI)] {
            let chi1 = alice_phase_for(&c, c.squeeze.theta(), bit);
            let delta = reduce_phase(chi1 + c.bob_lo_phase - c.squeeze.theta());
            assert_relative_eq!(delta, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn calibration_recovers_channel() {
        let mut c = config(11);
        c.samples_per_slot = 400;
        let cal = calibrate_channel(&c, &ChannelModel::lossless(), 200).unwrap();
        // frozen: V_min = 2e^{-2}, V_max = 2e^{2}, D = −8.686 dB
        let rel = (2.0f64 / (100.0 * 399.0)).sqrt() * 4.0;
        assert!((cal.v_min / 0.270_670_566_473_225_4 - 1.0).abs() < rel);
        assert!((cal.v_max / 14.778_112_197_861_3 - 1.0).abs() < rel);
        assert!((cal.baseline_d_db - -8.685_889_638_065_037).abs() < 0.2);
        let s_eff = cal.s_eff.unwrap();
        let eta_est = cal.eta_est.unwrap();
        assert!((s_eff - 1.0).abs() < 0.05, "s_eff = {s_eff}");
        assert!(eta_est > 0.95, "eta_est = {eta_est}");
        assert!(calibrate_channel(&c, &ChannelModel::lossless(), 0).is_err());
        assert!(calibrate_channel(&c, &ChannelModel::lossless(), 1).is_err());
    }

    #[test]
    fn analytic_calibration_frozen() {
        let cal =
            ChannelCalibration::analytic(SqueezeParams::new(1.0, 0.0).unwrap(), 1.0).unwrap();
        assert_relative_eq!(
            cal.baseline_d_db,
            -8.685_889_638_065_037,
            max_relative = 1e-12
        );
        assert_relative_eq!(cal.baseline_snr, 53.598_150_033_144_236, max_relative = 1e-12);
        let cal93 =
            ChannelCalibration::analytic(SqueezeParams::new(1.0, 0.0).unwrap(), 0.93).unwrap();
        assert_relative_eq!(
            cal93.baseline_d_db,
            -7.749_458_670_754_528,
            max_relative = 1e-12
        );
        assert_relative_eq!(cal93.s_eff.unwrap(), 1.0, max_relative = 1e-6);
        assert_relative_eq!(cal93.eta_est.unwrap(), 0.93, max_relative = 1e-6);
    }

    #[test]
    fn decode_analytic_levels_and_tie_break() {
        let cal =
            ChannelCalibration::analytic(SqueezeParams::new(1.0, 0.0).unwrap(), 1.0).unwrap();
        let c = config(3);
        let vstar = cal.geometric_threshold();
        // noiseless feeds pinned exactly at the two levels and at the tie
        let feed = |var: f64| -> Vec<f64> {
            // two-point samples with exact sample variance `var`, zero mean
            let a = (var / 2.0).sqrt();
            vec![a, -a]
        };
        let d0 = decide_slot(0, &feed(cal.v_min), &cal, ThresholdMode::GeometricMean);
        assert_eq!(d0.decoded_bit, 0);
        let d1 = decide_slot(1, &feed(cal.v_max), &cal, ThresholdMode::GeometricMean);
        assert_eq!(d1.decoded_bit, 1);
        let tie = decide_slot(2, &feed(vstar), &cal, ThresholdMode::GeometricMean);
        assert_eq!(tie.decoded_bit, 1, "ties break toward bit 1");
        assert_relative_eq!(tie.threshold, vstar);
        let _ = c;
    }

    #[test]
    fn decode_requires_calibration() {
        let c = config(3);
        let st = GaussianState::tmss(c.squeeze);
        let (a, b) = crate::measurement::correlated_sample_pair(
            &st,
            LOSetting::new(0.0),
            LOSetting::new(0.0),
            16,
            1,
        )
        .unwrap();
        assert!(matches!(
            bob_decode(&b, &a.public_payload(), &c, None),
            Err(Error::CalibrationMissing)
        ));
    }

    #[test]
    fn likelihood_ratio_mode_agrees_at_high_contrast() {
        let mut c = config(17);
        c.samples_per_slot = 100;
        let bits = vec![0, 1, 1, 0, 1, 0, 0, 1];
        let run = alice_encode(&bits, &c, &ChannelModel::lossless(), &AttackScenario::None)
            .unwrap();
        let cal =
            ChannelCalibration::analytic(SqueezeParams::new(1.0, 0.0).unwrap(), 1.0).unwrap();
        let geo = bob_decode(&run.bob, &run.alice.public_payload(), &c, Some(&cal)).unwrap();
        let mut c_lr = c;
        c_lr.decision_threshold_mode = ThresholdMode::LikelihoodRatio;
        let lr = bob_decode(&run.bob, &run.alice.public_payload(), &c_lr, Some(&cal)).unwrap();
        for (g, l) in geo.iter().zip(&lr) {
            assert_eq!(g.decoded_bit, l.decoded_bit);
        }
        let decoded: Vec<u8> = geo.iter().map(|d| d.decoded_bit).collect();
        assert_eq!(decoded, bits);
    }

    #[test]
    fn encode_produces_min_and_max_variance_slots() {
        let mut c = config(23);
        c.samples_per_slot = 5000;
        let run = alice_encode(
            &[0, 1],
            &c,
            &ChannelModel::lossless(),
            &AttackScenario::None,
        )
        .unwrap();
        let combined =
            combine_records(&run.alice.public_payload(), &run.bob.public_payload()).unwrap();
        let v0 = sample_variance(&combined[0]);
        let v1 = sample_variance(&combined[1]);
        let sig = (2.0f64 / 5000.0).sqrt() * 4.0;
        assert!((v0 / 0.270_670_566_473_225_4 - 1.0).abs() < sig, "v0 = {v0}");
        assert!((v1 / 14.778_112_197_861_3 - 1.0).abs() < sig, "v1 = {v1}");
    }

    #[test]
    fn session_roundtrip_key_mode() {
        let mut c = config(29);
        c.samples_per_slot = 200;
        let bits = random_payload_bits(&c, 64);
        let t = run_session(
            &c,
            SessionKind::Key,
            &bits,
            &ChannelModel::lossless(),
            &AttackScenario::None,
        )
        .unwrap();
        assert_eq!(t.security.verdict, Verdict::Secure);
        assert_eq!(t.decoded_payload.as_ref().unwrap(), &bits);
        assert_eq!(t.payload_ber(), Some(0.0));
        assert_eq!(t.decoded_bits.len(), t.alice_private.schedule.len());
        assert!(t.decoded_bits.iter().all(|b| b.is_some()));
        // public messages: record first, then check disclosure
        assert!(matches!(
            t.public_messages[0],
            PublicMessage::AliceRecord { .. }
        ));
        assert!(matches!(
            t.public_messages[1],
            PublicMessage::CheckDisclosure { record: None, .. }
        ));
    }

    #[test]
    fn session_message_mode_withholds_on_alarm() {
        let mut c = config(31);
        c.samples_per_slot = 200;
        let bits = random_payload_bits(&c, 32);
        let honest = run_session(
            &c,
            SessionKind::Message,
            &bits,
            &ChannelModel::lossless(),
            &AttackScenario::None,
        )
        .unwrap();
        assert_eq!(honest.security.verdict, Verdict::Secure);
        assert_eq!(honest.decoded_payload.as_ref().unwrap(), &bits);
        assert!(honest
            .public_messages
            .iter()
            .any(|m| matches!(m, PublicMessage::MessageDisclosure { .. })));

        let attacked = run_session(
            &c,
            SessionKind::Message,
            &bits,
            &ChannelModel::lossless(),
            &AttackScenario::PartialTap {
                eta: 0.5,
                eve_measures: false,
            },
        )
        .unwrap();
        assert_eq!(attacked.security.verdict, Verdict::Alarm);
        assert_eq!(attacked.decoded_payload, None);
        assert!(!attacked
            .public_messages
            .iter()
            .any(|m| matches!(m, PublicMessage::MessageDisclosure { .. })));
        // undisclosed message slots stay undecoded
        let undecoded = attacked.decoded_bits.iter().filter(|b| b.is_none()).count();
        assert_eq!(undecoded, attacked.alice_private.schedule.message_slot_ids().len());
    }

    #[test]
    fn intercept_resend_alarms() {
        let mut c = config(37);
        c.samples_per_slot = 200;
        let bits = random_payload_bits(&c, 32);
        let t = run_session(
            &c,
            SessionKind::Key,
            &bits,
            &ChannelModel::lossless(),
            &AttackScenario::InterceptResend {
                s_eve: SqueezeParams::new(1.0, 0.0).unwrap(),
            },
        )
        .unwrap();
        assert_eq!(t.security.verdict, Verdict::Alarm);
        assert!(t.security.measured_d_db > 0.0);
    }

    #[test]
    fn transcript_determinism_and_privacy() {
        let mut c = config(41);
        c.samples_per_slot = 50;
        let bits = random_payload_bits(&c, 16);
        let t1 = run_session(
            &c,
            SessionKind::Message,
            &bits,
            &ChannelModel { eta: 0.93 },
            &AttackScenario::None,
        )
        .unwrap();
        let t2 = run_session(
            &c,
            SessionKind::Message,
            &bits,
            &ChannelModel { eta: 0.93 },
            &AttackScenario::None,
        )
        .unwrap();
        assert_eq!(t1.to_json(true), t2.to_json(true));
        let public = t1.to_json(false);
        // Alice's per-slot LO phases are the secret; Bob's constant phase in
        // the config echo is public by design
        assert!(!public.contains("lo_phase_used"));
        assert!(!public.contains("alice_lo_phase"));
        assert!(!public.contains("\"private\":"));
        assert!(public.contains("\"include_private\": false"));
        let private = t1.to_json(true);
        assert!(private.contains("lo_phase_used"));
        assert!(private.contains("\"private\":"));
        assert!(private.contains("\"include_private\": true"));
    }

    #[test]
    fn theta_modulation_keeps_levels() {
        let mut c = config(43);
        c.samples_per_slot = 2000;
        c.theta_modulation = true;
        let run = alice_encode(
            &[0, 0, 1, 1],
            &c,
            &ChannelModel::lossless(),
            &AttackScenario::None,
        )
        .unwrap();
        // thetas actually vary
        let thetas: Vec<f64> = run.schedule.slots.iter().map(|p| p.theta).collect();
        assert!((thetas[0] - thetas[1]).abs() > 1e-3);
        let combined =
            combine_records(&run.alice.public_payload(), &run.bob.public_payload()).unwrap();
        let sig = 4.0 * (2.0f64 / 2000.0).sqrt();
        for (i, expect) in [
            (0usize, 0.270_670_566_473_225_4),
            (1, 0.270_670_566_473_225_4),
            (2, 14.778_112_197_861_3),
            (3, 14.778_112_197_861_3),
        ] {
            let v = sample_variance(&combined[i]);
            assert!((v / expect - 1.0).abs() < sig, "slot {i}: {v} vs {expect}");
        }
    }

    #[test]
    fn ber_monotone_in_samples_per_slot() {
        // at s = 0.3 the contrast is weak enough for visible errors at
        // 10 samples/slot, vanishing as the slot length grows
        let mut bers = Vec::new();
        for n in [10usize, 50, 200, 1000] {
            let mut c = config(47);
            c.squeeze = SqueezeParams::new(0.3, 0.0).unwrap();
            c.samples_per_slot = n;
            let bits = random_payload_bits(&c, 400);
            let run = alice_encode(&bits, &c, &ChannelModel::lossless(), &AttackScenario::None)
                .unwrap();
            let cal = ChannelCalibration::analytic(c.squeeze, 1.0).unwrap();
            let decisions =
                bob_decode(&run.bob, &run.alice.public_payload(), &c, Some(&cal)).unwrap();
            let errors = decisions
                .iter()
                .zip(&bits)
                .filter(|(d, b)| d.decoded_bit != **b)
                .count();
            bers.push(errors as f64 / bits.len() as f64);
        }
        assert!(bers[0] > 0.0, "want visible errors at 10 samples: {bers:?}");
        assert!(
            bers.windows(2).all(|w| w[0] >= w[1]),
            "BER not monotone: {bers:?}"
        );
    }

    #[test]
    #[should_panic(expected = "protocol ordering violated")]
    fn disclosure_before_measurement_panics() {
        let c = config(53);
        let bits = [0u8, 1];
        let channel = ChannelModel::lossless();
        let mut session = Session::prepare(
            &c,
            SessionKind::Message,
            &bits,
            &channel,
            &AttackScenario::None,
        )
        .unwrap();
        let _ = session.disclose_checks();
    }

    #[test]
    fn infer_handles_degenerate_contrast() {
        assert_eq!(infer_squeeze_and_eta(2.0, 2.0), (None, None));
        let (s, eta) = infer_squeeze_and_eta(0.270_670_566_473_225_4, 14.778_112_197_861_3);
        assert_relative_eq!(s.unwrap(), 1.0, max_relative = 1e-6);
        assert_relative_eq!(eta.unwrap(), 1.0, max_relative = 1e-6);
    }
}
