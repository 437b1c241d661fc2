//! Seedable random number generation.
//!
//! The generator is xoshiro256++ with its state expanded from the seed by
//! SplitMix64, both public-domain algorithms with fixed integer arithmetic,
//! so streams are bit-identical on every IEEE-754 platform. Gaussians come
//! from the polar Box-Muller transform. Parallel or logically separate work
//! must take split generators via [`Rng::split`], never share one stream.

use crate::linalg::matrix::Matrix;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// xoshiro256++ generator with an explicit seed.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    state: [u64; 4],
    spare_gaussian: Option<f64>,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let state = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Rng {
            seed,
            state,
            spare_gaussian: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derives an independent generator for the given stream label.
    ///
    /// Distinct labels give decorrelated streams; the same label always gives
    /// the same stream. The parent's position is not consumed or disturbed.
    pub fn split(&self, stream: u64) -> Rng {
        let mut sm = stream.wrapping_add(GOLDEN);
        Rng::new(self.seed ^ splitmix64(&mut sm))
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[0]
            .wrapping_add(s[3])
            .rotate_left(23)
            .wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[0, n)` by widening multiply.
    pub fn next_below(&mut self, n: usize) -> usize {
        assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Standard normal draw via the polar Box-Muller transform.
    ///
    /// Draws arrive in pairs; the second is cached, so the mapping from the
    /// uniform stream to the Gaussian stream depends only on call order.
    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare_gaussian.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.next_f64() - 1.0;
            let v = 2.0 * self.next_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare_gaussian = Some(v * f);
                return u * f;
            }
        }
    }

    /// Matrix of independent `N(0, std^2)` entries, filled row-major.
    ///
    /// The underlying standard normals depend only on the stream position,
    /// so the same seed at two different `std` values yields matrices that
    /// are exact scalar multiples of each other.
    pub fn gaussian_matrix(&mut self, rows: usize, cols: usize, std: f64) -> Matrix {
        let mut m = Matrix::zeros(rows, cols);
        for x in m.data_mut() {
            *x = std * self.gaussian();
        }
        m
    }

    /// Vector of independent `N(0, std^2)` entries.
    pub fn gaussian_vec(&mut self, len: usize, std: f64) -> Vec<f64> {
        (0..len).map(|_| std * self.gaussian()).collect()
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.next_below(i + 1);
            xs.swap(i, j);
        }
    }
}
