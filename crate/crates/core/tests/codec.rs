use std::time::Instant;

use proptest::prelude::*;
use quard_core::codec::{ActionCommand, ActionDim, ActionSpaceSpec, ActionTokens, CONTINUOUS_DIMS, TOKEN_COUNT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn center_command(space: &ActionSpaceSpec, bin: u32) -> ActionCommand {
    let mut values = [0.0; CONTINUOUS_DIMS];
    for dim in ActionDim::ALL {
        values[dim.index()] = space.bin_center(dim, bin);
    }
    ActionCommand::from_values(values, bin % 2 == 1)
}

#[test]
fn every_bin_center_round_trips_exactly() {
    let space = ActionSpaceSpec::default();
    let start = Instant::now();
    for bin in 0..space.bin_count() {
        let cmd = center_command(&space, bin);
        let tokens = space.tokenize(&cmd).unwrap();
        assert!(tokens.0[..CONTINUOUS_DIMS].iter().all(|&t| t == bin));
        assert_eq!(space.detokenize(&tokens).unwrap(), cmd);
    }
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn random_values_land_within_half_a_bin() {
    let space = ActionSpaceSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100_000 {
        let mut values = [0.0; CONTINUOUS_DIMS];
        for dim in ActionDim::ALL {
            let r = space.range(dim);
            values[dim.index()] = rng.random_range(r.min..r.max);
        }
        let cmd = ActionCommand::from_values(values, rng.random_bool(0.5));
        let back = space.detokenize(&space.tokenize(&cmd).unwrap()).unwrap();
        for dim in ActionDim::ALL {
            let err = (back.get(dim) - cmd.get(dim)).abs();
            assert!(err <= space.bin_width(dim) / 2.0 + 1e-12, "{dim}: {err}");
        }
        assert_eq!(back.t, cmd.t);
    }
}

#[test]
fn offset_vocabulary_rejects_foreign_tokens() {
    let space = ActionSpaceSpec::default().with_bins(256, 100).unwrap();
    let tokens = space.tokenize(&center_command(&space, 3)).unwrap();
    assert!(tokens.0.iter().all(|&t| t >= 100));
    assert!(space.detokenize(&ActionTokens([0; TOKEN_COUNT])).is_err());
    assert!(ActionSpaceSpec::default().with_bins(256, 800).is_err());
}

proptest! {
    #[test]
    fn tokens_are_idempotent(values in proptest::array::uniform11(-10.0f64..10.0), t: bool) {
        let space = ActionSpaceSpec::default();
        let cmd = space.clamp(&ActionCommand::from_values(values, t)).unwrap();
        let tokens = space.tokenize(&cmd).unwrap();
        let back = space.detokenize(&tokens).unwrap();
        prop_assert_eq!(space.tokenize(&back).unwrap(), tokens);
        prop_assert!(tokens.0.iter().all(|&x| x <= space.max_token()));
    }

    #[test]
    fn tokenizing_is_monotone(a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let space = ActionSpaceSpec::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(space.bin_index(ActionDim::VelX, lo) <= space.bin_index(ActionDim::VelX, hi));
    }
}
