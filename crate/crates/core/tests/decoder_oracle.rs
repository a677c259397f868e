mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn decoder_matches_brute_force_rank_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xDEC0);
    for trial in 0..1000 {
        if let Err(e) = common::decoding::trial(&mut rng) {
            panic!("trial {trial}: {e}");
        }
    }
}

#[test]
fn token_process_scenarios() {
    for sc in common::tokens::scenarios() {
        if let Err(e) = common::tokens::run(&sc) {
            panic!("{}: {e}", sc.name);
        }
    }
}
