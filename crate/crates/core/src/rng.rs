//! Seeded, schedule-independent random streams for Monte Carlo trials.
//!
//! Trial `t` of an experiment with master seed `s` draws from ChaCha8 keyed by
//! `splitmix64(s)` on stream `t`. Results therefore depend only on
//! `(seed, trial)` and never on how trials are spread over worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type TrialRng = ChaCha8Rng;

/// The splitmix64 finalizer, used to decorrelate nearby master seeds.
pub fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random stream for one trial.
pub fn trial_rng(seed: u64, trial: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed));
    rng.set_stream(trial);
    rng
}

/// Runs `trials` independent trials in parallel, returning results in trial
/// order.
pub fn par_trials<T, F>(seed: u64, trials: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut TrialRng) -> T + Sync + Send,
{
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            f(t, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = trial_rng(7, 3).random();
        let b: u64 = trial_rng(7, 3).random();
        let c: u64 = trial_rng(7, 4).random();
        let d: u64 = trial_rng(8, 3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn parallel_results_match_sequential() {
        let par = par_trials(11, 64, |_, rng| rng.random::<u32>());
        let seq: Vec<u32> = (0..64).map(|t| trial_rng(11, t).random()).collect();
        assert_eq!(par, seq);
    }
}
