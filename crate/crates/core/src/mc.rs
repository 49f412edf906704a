//! Deterministic Monte-Carlo sharding.
//!
//! A run is split into a fixed number of shards derived from the sample
//! count, never from the worker count, so results are byte-identical for
//! any parallelism degree. Shard `i` draws from stream `(seed, i)`.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Samples per shard. Fixed so that shard boundaries do not depend on the
/// number of worker threads.
pub const SHARD_SIZE: usize = 4096;

/// The RNG used everywhere in the crate.
pub type Rng = ChaCha12Rng;

/// Stream `index` of the generator seeded with `seed`.
pub fn shard_rng(seed: u64, index: u64) -> Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Splits `n` items into `⌈n / SHARD_SIZE⌉` shards, maps each shard on a
/// worker pool of `threads` threads, and returns per-shard results in shard
/// order. `f` receives `(shard_index, shard_sample_count, rng)`.
pub fn run_sharded<T, F>(n: usize, seed: u64, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, usize, &mut Rng) -> T + Sync,
{
    let shards = n.div_ceil(SHARD_SIZE);
    let mut results: Vec<Option<T>> = (0..shards).map(|_| None).collect();
    let threads = threads.max(1).min(shards.max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let f = &f;
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for _ in 0..threads {
            let next = &next;
            handles.push(scope.spawn(move || {
                let mut local: Vec<(usize, T)> = Vec::new();
                loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if i >= shards {
                        break;
                    }
                    let count = SHARD_SIZE.min(n - i * SHARD_SIZE);
                    let mut rng = shard_rng(seed, i as u64);
                    local.push((i, f(i as u64, count, &mut rng)));
                }
                local
            }));
        }
        for h in handles {
            for (i, t) in h.join().expect("worker panicked") {
                results[i] = Some(t);
            }
        }
    });
    results
        .into_iter()
        .map(|r| r.expect("missing shard"))
        .collect()
}
