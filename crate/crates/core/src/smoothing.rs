//! Moving-average noise filter for Monte Carlo derived grid functions.

use alloc::vec::Vec;

/// Filter half-width in cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FilterSpec {
    pub k: usize,
}

impl FilterSpec {
    pub fn new(k: usize) -> Self {
        Self { k }
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        moving_average(f, self.k)
    }
}

/// Centered mean over `[i - k_i, i + k_i]`, where near the ends the window
/// shrinks symmetrically: `k_i = min(k, i, len - 1 - i)`.
pub fn moving_average(f: &[f64], k: usize) -> Vec<f64> {
    let len = f.len();
    if k == 0 {
        return f.to_vec();
    }
    (0..len)
        .map(|i| {
            let ki = k.min(i).min(len - 1 - i);
            let window = &f[i - ki..=i + ki];
            window.iter().sum::<f64>() / window.len() as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn constants_unchanged() {
        let f = vec![2.5; 9];
        for k in 0..6 {
            assert_eq!(moving_average(&f, k), f);
        }
    }

    #[test]
    fn affine_data_preserved() {
        assert_eq!(moving_average(&[1.0, 2.0, 3.0, 4.0, 5.0], 1), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn spike_spreads() {
        assert_eq!(moving_average(&[0.0, 0.0, 3.0, 0.0, 0.0], 1), vec![0.0, 1.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn zero_width_is_identity() {
        let f = [0.3, -1.0, 7.5, 1e-9];
        assert_eq!(moving_average(&f, 0), f.to_vec());
        assert_eq!(FilterSpec::new(0).apply(&f), f.to_vec());
    }

    #[test]
    fn wide_filter_on_short_input() {
        // k larger than the array: only the middle element averages anything.
        assert_eq!(moving_average(&[3.0, 6.0, 9.0], 10), vec![3.0, 6.0, 9.0]);
        assert_eq!(moving_average(&[1.0], 4), vec![1.0]);
    }
}
