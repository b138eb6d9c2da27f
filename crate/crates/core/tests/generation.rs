use proptest::prelude::*;

use sigsynth::dataset::{Schedule, SignatureKey};
use sigsynth::lf::{self, LfCentroidRanges};
use sigsynth::{derive_stream, hf, GenConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lf_signatures_keep_assembly_invariants(seed in any::<u64>(), var_d in 0.0..0.5f64, p_b in 0.0..=1.0f64) {
        let cfg = GenConfig { master_seed: seed, var_d, p_b, ..Default::default() };
        let centroids = lf::sample_lf_centroids(3, &LfCentroidRanges::default(), &mut lf::centroid_stream(seed)).unwrap();
        for (ai, c) in centroids.iter().enumerate() {
            let key = SignatureKey::new(ai as u32, 0);
            let mut stream = derive_stream(seed, key.appliance, key.signature);
            let (plan, sig) = lf::synth_lf_signature(c, &cfg, key, &mut stream).unwrap();
            prop_assert_eq!(sig.len(), plan.total_len());
            for r in plan.gap_ranges() {
                prop_assert!(sig.samples()[r].iter().all(|&v| v == 0.0));
            }
            let mean = plan.mean_amplitude();
            prop_assert!(plan.cycles.iter().filter(|p| p.use_p5).all(|p| p.a <= mean));
        }
    }

    #[test]
    fn hf_generation_is_schedule_independent(seed in any::<u64>()) {
        let cfg = GenConfig {
            master_seed: seed,
            samples_per_cycle: 64,
            cycles_per_signature: 2,
            signatures_per_appliance: 4,
            ..Default::default()
        };
        let centroids = hf::sample_hf_centroids(3, &hf::HfCentroidRanges::default(), &mut hf::centroid_stream(seed)).unwrap();
        let a = hf::generate_hf_dataset(&centroids, &cfg, Schedule::Sequential).unwrap();
        let b = hf::generate_hf_dataset(&centroids, &cfg, Schedule::Parallel).unwrap();
        prop_assert_eq!(a, b);
    }
}
