//! What Eve actually learns in each scenario.

use tmss_core::attacks::{eve_tap_decode, AttackScenario};
use tmss_core::gaussian::SqueezeParams;
use tmss_core::protocol::{
    alice_encode, random_payload_bits, run_session, ChannelModel, ProtocolConfig, SessionKind,
};
use tmss_core::stats::{ks_two_sample, sample_variance};

fn tap_run(seed: u64, n_bits: usize) -> (Vec<u8>, tmss_core::protocol::EncodedSession) {
    let mut config = ProtocolConfig::new(SqueezeParams::new(1.0, 0.0).unwrap(), seed);
    config.samples_per_slot = 200;
    let bits = random_payload_bits(&config, n_bits);
    let run = alice_encode(
        &bits,
        &config,
        &ChannelModel::lossless(),
        &AttackScenario::PartialTap {
            eta: 0.93,
            eve_measures: true,
        },
    )
    .unwrap();
    (bits, run)
}

// The tapped beam by itself is as thermal as everything else: pooling Eve's
// samples by Alice's bit value shows no distributional difference.
#[test]
fn tap_samples_alone_are_bit_blind() {
    let (bits, run) = tap_run(61, 500);
    let eve = run.eve.as_ref().expect("eve measured");
    let pool = |bit: u8| -> Vec<f64> {
        eve.slots
            .iter()
            .zip(&bits)
            .filter(|(_, b)| **b == bit)
            .flat_map(|(slot, _)| slot.samples.iter().copied())
            .collect()
    };
    let zeros = pool(0);
    let ones = pool(1);
    assert!(zeros.len().min(ones.len()) > 40_000);
    let ks = ks_two_sample(&zeros, &ones);
    assert!(
        ks.p_value > 1e-3,
        "Eve's tap leaks the bit on its own: D = {}, p = {}",
        ks.statistic,
        ks.p_value
    );
    // and her per-slot variance sits at the tapped-thermal level,
    // (1-η)·cosh 2s + η, regardless of the bit
    let expect = 1.193_353_698_375_854;
    let sigma = expect * (2.0f64 / zeros.len() as f64).sqrt();
    assert!((sample_variance(&zeros) - expect).abs() < 4.0 * sigma);
    assert!((sample_variance(&ones) - expect).abs() < 4.0 * sigma);
}

// Together with Alice's public record the tap does read the bits; the
// protocol's defense is detecting the tap, not preventing this combination.
#[test]
fn tap_plus_public_record_reads_bits() {
    let (bits, run) = tap_run(62, 500);
    let mut eve = run.eve.clone().expect("eve measured");
    eve_tap_decode(
        &mut eve,
        &run.alice.public_payload(),
        SqueezeParams::new(1.0, 0.0).unwrap(),
        0.93,
    )
    .unwrap();
    let correct = eve
        .slots
        .iter()
        .zip(&bits)
        .filter(|(slot, b)| slot.bit_estimate == Some(**b))
        .count();
    let accuracy = correct as f64 / bits.len() as f64;
    assert!(
        accuracy > 0.95,
        "Eve should decode reliably from tap + public record, got {accuracy}"
    );
}

// A session under a measuring tap records Eve's estimates for exactly the
// slots that ever became public, and still raises the alarm.
#[test]
fn session_fills_eve_estimates_for_disclosed_slots() {
    let mut config = ProtocolConfig::new(SqueezeParams::new(1.0, 0.0).unwrap(), 63);
    config.samples_per_slot = 200;
    let bits = random_payload_bits(&config, 120);
    let t = run_session(
        &config,
        SessionKind::Message,
        &bits,
        &ChannelModel::lossless(),
        &AttackScenario::PartialTap {
            eta: 0.93,
            eve_measures: true,
        },
    )
    .unwrap();
    assert!(t.security.is_alarm());
    assert_eq!(t.decoded_payload, None);
    let eve = t.eve.as_ref().expect("eve measured");
    // only the check disclosure went out, so that is all Eve can decode
    let check_ids = t.alice_private.schedule.check_slot_ids();
    assert_eq!(eve.slots.len(), check_ids.len());
    assert!(eve.slots.iter().all(|s| s.bit_estimate.is_some()));
    assert!(eve.slots.iter().all(|s| check_ids.contains(&s.slot_id)));
}
