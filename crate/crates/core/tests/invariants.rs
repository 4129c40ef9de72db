//! Property tests for the structural invariants: symplectic consistency,
//! channel composition laws, phase symmetries, scheduling determinism.

use proptest::prelude::*;

use tmss_core::fock::{tmss_fock, tmss_tail};
use tmss_core::gaussian::{
    phase_rotation_symplectic, symplectic_defect, two_mode_squeeze_symplectic, GaussianState,
    SqueezeParams,
};
use tmss_core::measurement::{combined_variance, lossy_combined_variance, LOSetting};
use tmss_core::protocol::{make_message_session, ProtocolConfig, SlotRole};

fn squeeze(s: f64, theta: f64) -> SqueezeParams {
    SqueezeParams::new(s, theta).unwrap()
}

proptest! {
    #[test]
    fn squeezer_is_symplectic(s in 0.0..1.5f64, theta in 0.0..std::f64::consts::TAU) {
        let sm = two_mode_squeeze_symplectic(2, 0, 1, squeeze(s, theta));
        prop_assert!(symplectic_defect(&sm) < 1e-12);
    }

    #[test]
    fn rotation_is_symplectic(phi in -10.0..10.0f64) {
        let sm = phase_rotation_symplectic(3, 1, phi);
        prop_assert!(symplectic_defect(&sm) < 1e-12);
    }

    #[test]
    fn random_op_chains_stay_bona_fide(
        s in 0.0..1.2f64,
        theta in 0.0..std::f64::consts::TAU,
        phi in -6.0..6.0f64,
        eta in 0.0..=1.0f64,
    ) {
        let st = GaussianState::tmss(squeeze(s, theta))
            .phase_rotate(0, phi).unwrap()
            .loss_channel(1, eta).unwrap();
        prop_assert!(st.validate().is_ok());
        // loss never decreases the determinant
        prop_assert!(st.cov_determinant() >= 1.0 - 1e-9);
    }

    #[test]
    fn loss_composes_multiplicatively(
        s in 0.0..1.2f64,
        e1 in 0.0..=1.0f64,
        e2 in 0.0..=1.0f64,
    ) {
        let st = GaussianState::tmss(squeeze(s, 0.9));
        let a = st.loss_channel(1, e1).unwrap().loss_channel(1, e2).unwrap();
        let b = st.loss_channel(1, e1 * e2).unwrap();
        prop_assert!((a.cov() - b.cov()).amax() < 1e-12);
    }

    #[test]
    fn tap_traces_to_loss(s in 0.0..1.2f64, eta in 0.01..0.99f64) {
        let st = GaussianState::tmss(squeeze(s, 2.2));
        let (tapped, eve) = st.tap_channel(1, eta).unwrap();
        let reduced = tapped.keep_modes(&[0, 1]).unwrap();
        let lossy = st.loss_channel(1, eta).unwrap();
        prop_assert!((reduced.cov() - lossy.cov()).amax() < 1e-12);
        prop_assert_eq!(eve, 2);
    }

    #[test]
    fn pi_shift_leaves_variance_invariant(
        s in 0.0..1.2f64,
        theta in 0.0..std::f64::consts::TAU,
        chi1 in -7.0..7.0f64,
        chi2 in -7.0..7.0f64,
    ) {
        let a = combined_variance(squeeze(s, theta), LOSetting::new(chi1), LOSetting::new(chi2)).unwrap();
        let b = combined_variance(
            squeeze(s, tmss_core::gaussian::reduce_phase(theta + std::f64::consts::PI)),
            LOSetting::new(chi1 + std::f64::consts::PI),
            LOSetting::new(chi2),
        ).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn lossless_limit_matches_eq4(
        s in 0.0..1.2f64,
        theta in 0.0..std::f64::consts::TAU,
        chi1 in -7.0..7.0f64,
        chi2 in -7.0..7.0f64,
    ) {
        let p = squeeze(s, theta);
        let lo1 = LOSetting::new(chi1);
        let lo2 = LOSetting::new(chi2);
        let a = lossy_combined_variance(p, lo1, lo2, 1.0).unwrap();
        let b = combined_variance(p, lo1, lo2).unwrap();
        prop_assert!((a - b).abs() < 1e-12 * b.max(1.0));
    }

    #[test]
    fn variance_extremes_hit_exactly(s in 0.0..1.2f64, theta in 0.0..std::f64::consts::TAU) {
        let p = squeeze(s, theta);
        // at chi1+chi2 = theta the minimum 2e^{-2s}; +pi the maximum 2e^{2s}
        let at = |delta: f64| combined_variance(
            p,
            LOSetting::new(theta + delta),
            LOSetting::new(0.0),
        ).unwrap();
        let vmin = at(0.0);
        let vmax = at(std::f64::consts::PI);
        prop_assert!((vmin - 2.0 * (-2.0 * s).exp()).abs() < 1e-12 * vmin.max(1.0));
        prop_assert!((vmax - 2.0 * (2.0 * s).exp()).abs() < 1e-12 * vmax);
        // and everything in between is bounded by them
        for k in 1..8 {
            let v = at(k as f64 * std::f64::consts::PI / 8.0);
            prop_assert!(v >= vmin - 1e-12 && v <= vmax + 1e-12);
        }
    }

    #[test]
    fn tmss_norm_matches_geometric_series(s in 0.0..1.3f64, theta in 0.0..std::f64::consts::TAU, cutoff in 4usize..40) {
        let p = squeeze(s, theta);
        let psi = tmss_fock(p, cutoff).unwrap();
        let expect = 1.0 - tmss_tail(p, cutoff);
        prop_assert!((psi.norm_sq() - expect).abs() < 1e-12);
    }

    #[test]
    fn schedules_reconstruct_and_floor_checks(
        seed in any::<u64>(),
        len in 1usize..200,
        fraction in 0.001..0.9f64,
    ) {
        let mut config = ProtocolConfig::new(squeeze(1.0, 0.0), seed);
        config.check_bit_fraction = fraction;
        let bits: Vec<u8> = (0..len).map(|i| (i % 2) as u8).collect();
        let a = make_message_session(&bits, &config).unwrap();
        let b = make_message_session(&bits, &config).unwrap();
        prop_assert_eq!(&a, &b);
        let checks = a.check_slot_ids().len();
        prop_assert!(checks >= 1);
        prop_assert_eq!(a.len(), len + checks);
        // payload order is preserved
        let payload: Vec<u8> = a.slots.iter()
            .filter(|p| matches!(p.role, SlotRole::Message { .. }))
            .map(|p| p.bit)
            .collect();
        prop_assert_eq!(payload, bits);
    }
}
