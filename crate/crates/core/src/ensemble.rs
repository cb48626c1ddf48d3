//! Trajectory ensembles: reproducible per-trajectory random streams and the
//! executor that maps work over trajectory indices.
//!
//! Results are always gathered in index order, and every trajectory draws
//! from its own stream keyed by `(master seed, purpose, index)`. Output is
//! therefore independent of the number of workers and of the ensemble
//! size.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a random stream is used for. Distinct purposes never share a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamPurpose {
    DirectLinkNoise,
    LangevinNoise,
    Synthetic,
}

impl StreamPurpose {
    fn tag(self) -> u64 {
        match self {
            StreamPurpose::DirectLinkNoise => 0x6469_7265_6374_0001,
            StreamPurpose::LangevinNoise => 0x6c61_6e67_6576_0002,
            StreamPurpose::Synthetic => 0x7379_6e74_6800_0003,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based stream derivation: the ChaCha key comes from the master
/// seed and purpose, the ChaCha stream id is the trajectory index.
pub fn trajectory_rng(master_seed: u64, purpose: StreamPurpose, index: u64) -> ChaCha8Rng {
    let mut state = master_seed ^ purpose.tag();
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// How trajectories are distributed over workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Executor {
    Sequential,
    /// Rayon worker pool; `None` uses the global pool. Without the
    /// `parallel` feature this runs sequentially.
    Parallel { threads: Option<usize> },
}

impl Default for Executor {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Executor::Parallel { threads: None }
        } else {
            Executor::Sequential
        }
    }
}

impl Executor {
    pub fn with_threads(threads: usize) -> Self {
        if threads <= 1 {
            Executor::Sequential
        } else {
            Executor::Parallel { threads: Some(threads) }
        }
    }

    /// Evaluates `f(0..n)` and returns the results in index order.
    pub fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match *self {
            Executor::Sequential => (0..n).map(f).collect(),
            Executor::Parallel { threads } => parallel_map(n, threads, f),
        }
    }

    /// Like [`Executor::map_indexed`], but reports the error of the lowest
    /// failing index so that failures are reproducible too.
    pub fn try_map_indexed<T, E, F>(&self, n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        self.map_indexed(n, f).into_iter().collect()
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(n: usize, threads: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let run = || (0..n).into_par_iter().map(&f).collect::<Vec<T>>();
    match threads {
        None => run(),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        },
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(n: usize, _threads: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Splits `0..n` into consecutive blocks of `block` indices. The partition
/// depends only on `n` and `block`, never on the executor.
pub fn blocks(n: usize, block: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
    let block = block.max(1);
    (0..n.div_ceil(block)).map(move |b| b * block..((b + 1) * block).min(n))
}
