use std::time::Instant;

use serde::Serialize;

/// Iterations run and discarded before each timed batch.
pub const WARMUP: usize = 10;

/// Runs `f` once and returns its result with the elapsed microseconds.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64() * 1e6)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub reps: usize,
    pub median_us: f64,
    pub mean_us: f64,
    pub p95_us: f64,
}

impl Stats {
    pub fn of(samples: &[f64]) -> Self {
        assert!(!samples.is_empty(), "no timing samples");
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
        // Nearest-rank percentile.
        let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
        Self { reps: n, median_us: median, mean_us: sorted.iter().sum::<f64>() / n as f64, p95_us: sorted[rank - 1] }
    }
}

/// `WARMUP` untimed calls of `f`, then `reps` timed ones.
pub fn bench<T>(reps: usize, mut f: impl FnMut(usize) -> T) -> Vec<f64> {
    for i in 0..WARMUP {
        std::hint::black_box(f(i));
    }
    (0..reps)
        .map(|i| {
            let (out, us) = timed(|| f(WARMUP + i));
            std::hint::black_box(out);
            us
        })
        .collect()
}
