use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use sha2::{Digest, Sha256};

/// A labelled random substream.
///
/// The generator state is the SHA-256 of `(master_seed, label)`, so a stream
/// depends on nothing but its own label and the run seed. Adding a node or a
/// carrier never shifts the draws of any other stream.
#[derive(Clone, Debug)]
pub struct RngStream {
    label: String,
    seed: u64,
    draw_count: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(label: &str, master_seed: u64) -> Self {
        assert!(!label.is_empty(), "rng stream label must be non-empty");
        let mut hasher = Sha256::new();
        hasher.update(master_seed.to_le_bytes());
        hasher.update(label.as_bytes());
        let digest = hasher.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        RngStream {
            label: label.to_string(),
            seed: master_seed,
            draw_count: 0,
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of 32/64-bit words drawn so far.
    pub fn draw_count(&self) -> u64 {
        self.draw_count
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.random::<f64>()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self, mean: f64, std_dev: f64) -> f64 {
        if std_dev == 0.0 {
            return mean;
        }
        Normal::new(mean, std_dev)
            .expect("finite, non-negative std dev")
            .sample(self)
    }

    pub fn exponential(&mut self, mean: f64) -> f64 {
        Exp::new(1.0 / mean).expect("positive mean").sample(self)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.draw_count += 1;
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.draw_count += 1;
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.draw_count += dst.len().div_ceil(8) as u64;
        self.rng.fill_bytes(dst)
    }
}
