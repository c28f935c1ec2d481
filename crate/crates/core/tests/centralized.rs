mod oracles;

use nspe_core::{
    centralized_solve, make_scenario, sample_observation, Dimensions, RegressorSpec, RunSeed,
};
use oracles::stacked_least_squares;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn normal_equations_match_stacked_least_squares() {
    let dims = Dimensions::new(2, 1, 1, 2).unwrap();
    for seed in 0..10 {
        let scenario = make_scenario(
            RegressorSpec::Gaussian { stddev: 1.0 },
            dims,
            vec![0.1; 2],
            &mut RunSeed::scenario_rng(seed),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let obs: Vec<_> = (0..50)
            .flat_map(|_| {
                [
                    sample_observation(&scenario, 0, &mut rng),
                    sample_observation(&scenario, 1, &mut rng),
                ]
            })
            .collect();
        let got = centralized_solve(&obs, dims).unwrap();
        let expected = stacked_least_squares(&obs, &dims);
        assert!(
            (&got - &expected).amax() < 1e-8,
            "seed {seed}: {got} vs {expected}"
        );
    }
}
