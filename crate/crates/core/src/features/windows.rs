//! Tiled and sliding window features on the standardized series.

use crate::error::{Error, Result};
use crate::stats::{mean, standardize, variance};

/// Window width used for the window features.
pub fn window_width(period: usize) -> usize {
    if period > 1 {
        period
    } else {
        10
    }
}

/// Variance of tile means (stability) and of tile variances (lumpiness).
pub fn tiled_window_features(x: &[f64], period: usize) -> Result<(f64, f64)> {
    let w = window_width(period);
    if x.len() < 2 * w {
        return Err(Error::TooShort { need: 2 * w, got: x.len() });
    }
    let z = standardize(x)?;
    let tiles = z.len() / w;
    let means: Vec<f64> = (0..tiles).map(|i| mean(&z[i * w..(i + 1) * w])).collect();
    let vars: Vec<f64> = (0..tiles).map(|i| variance(&z[i * w..(i + 1) * w])).collect();
    Ok((variance(&means), variance(&vars)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShiftFeatures {
    pub max_level_shift: f64,
    pub time_level_shift: usize,
    pub max_var_shift: f64,
    pub time_var_shift: usize,
    pub max_kl_shift: f64,
    pub time_kl_shift: usize,
}

fn gaussian_kl(m1: f64, v1: f64, m2: f64, v2: f64) -> f64 {
    let v1 = v1.max(1e-12);
    let v2 = v2.max(1e-12);
    0.5 * ((v2 / v1).ln() + (v1 + (m1 - m2) * (m1 - m2)) / v2 - 1.0)
}

fn argmax(v: &[f64]) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, x) in v.iter().enumerate() {
        if *x > best.0 {
            best = (*x, i);
        }
    }
    best
}

/// Largest differences between consecutive sliding windows.
///
/// The reported time is the 1-based index of the last observation of the
/// earlier window.
pub fn sliding_shift_features(x: &[f64], period: usize) -> Result<ShiftFeatures> {
    let w = window_width(period);
    if x.len() < 2 * w {
        return Err(Error::TooShort { need: 2 * w, got: x.len() });
    }
    let z = standardize(x)?;
    let nw = z.len() - w + 1;
    // window i covers z[i..i+w] and ends at 1-based time i + w
    let mut means = Vec::with_capacity(nw);
    let mut vars = Vec::with_capacity(nw);
    for i in 0..nw {
        let s = &z[i..i + w];
        means.push(mean(s));
        vars.push(variance(s));
    }
    let pairs = nw - w;
    let level: Vec<f64> = (0..pairs).map(|i| (means[i + w] - means[i]).abs()).collect();
    let var: Vec<f64> = (0..pairs).map(|i| (vars[i + w] - vars[i]).abs()).collect();
    let kl: Vec<f64> = (0..pairs)
        .map(|i| gaussian_kl(means[i + w], vars[i + w], means[i], vars[i]))
        .collect();
    let (ml, tl) = argmax(&level);
    let (mv, tv) = argmax(&var);
    let (mk, tk) = argmax(&kl);
    Ok(ShiftFeatures {
        max_level_shift: ml,
        time_level_shift: tl + w,
        max_var_shift: mv,
        time_var_shift: tv + w,
        max_kl_shift: mk.max(0.0),
        time_kl_shift: tk + w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn noise(seed: u64, n: usize) -> Vec<f64> {
        let mut r = stream(seed, &[]);
        (0..n).map(|_| r.sample(StandardNormal)).collect()
    }

    #[test]
    fn stability_of_noise_and_level_shift() {
        // tile means of standardized noise have variance close to 1/w
        let (s10, _) = tiled_window_features(&noise(1, 2000), 1).unwrap();
        assert!((s10 - 0.1).abs() < 0.03, "{s10}");
        let (s52, _) = tiled_window_features(&noise(1, 5200), 52).unwrap();
        assert!(s52 < 0.05, "{s52}");
        let x: Vec<f64> = noise(2, 400).iter().enumerate().map(|(t, e)| if t < 200 { 0.1 * e } else { 5.0 + 0.1 * e }).collect();
        assert!(tiled_window_features(&x, 1).unwrap().0 > 0.5);
        assert!(matches!(tiled_window_features(&[3.0; 40], 1), Err(Error::DegenerateSeries)));
    }

    #[test]
    fn tiles_hand_case() {
        // four tiles of width 10: two at -1, two at +1 after standardizing
        let x: Vec<f64> = (0..40).map(|t| if t < 20 { 0.0 } else { 1.0 }).collect();
        let (stab, lump) = tiled_window_features(&x, 1).unwrap();
        let z = standardize(&x).unwrap();
        let a = z[0];
        let b = z[39];
        let m = (a + b) / 2.0;
        let want = 2.0 * ((a - m).powi(2) + (b - m).powi(2)) / 3.0;
        assert!((stab - want).abs() < 1e-12);
        assert!(lump.abs() < 1e-12);
    }

    #[test]
    fn step_change_located() {
        // deterministic alternating jitter around a step at t = 100
        let x: Vec<f64> = (0..200)
            .map(|t| (if t < 100 { 0.0 } else { 5.0 }) + if t % 2 == 0 { 0.01 } else { -0.01 })
            .collect();
        let s = sliding_shift_features(&x, 1).unwrap();
        assert!((s.time_level_shift as i64 - 100).abs() <= 10, "{}", s.time_level_shift);
    }

    #[test]
    fn variance_change_located() {
        let x: Vec<f64> = (0..400)
            .map(|t| {
                let a = if t < 200 { 1.0 } else { 2.0f64.sqrt() };
                if t % 2 == 0 { a } else { -a }
            })
            .collect();
        let s = sliding_shift_features(&x, 1).unwrap();
        assert!((s.time_kl_shift as i64 - 200).abs() <= 10, "{}", s.time_kl_shift);
        assert!((s.time_var_shift as i64 - 200).abs() <= 10);
    }

    /// Windows built explicitly, pair by pair.
    fn brute_force(z: &[f64], w: usize) -> (f64, usize, f64, usize) {
        let mut best_l = (f64::NEG_INFINITY, 0);
        let mut best_v = (f64::NEG_INFINITY, 0);
        for end in w..=z.len() - w {
            let a: Vec<f64> = z[end - w..end].to_vec();
            let b: Vec<f64> = z[end..end + w].to_vec();
            let l = (mean(&b) - mean(&a)).abs();
            let v = (variance(&b) - variance(&a)).abs();
            if l > best_l.0 {
                best_l = (l, end);
            }
            if v > best_v.0 {
                best_v = (v, end);
            }
        }
        (best_l.0, best_l.1, best_v.0, best_v.1)
    }

    #[test]
    fn shifts_match_brute_force() {
        for (seed, w) in [(3, 1), (4, 12)] {
            let x = noise(seed, 300);
            let s = sliding_shift_features(&x, w).unwrap();
            let (l, tl, v, tv) = brute_force(&standardize(&x).unwrap(), window_width(w));
            assert!((s.max_level_shift - l).abs() < 1e-12 && s.time_level_shift == tl);
            assert!((s.max_var_shift - v).abs() < 1e-12 && s.time_var_shift == tv);
        }
    }

    #[test]
    fn white_noise_var_shift_is_bounded() {
        // With w = 10 a single pair difference has sd sqrt(4/9); the maximum
        // over ~2000 overlapping pairs typically lands between 2 and 3.5.
        let quiet = sliding_shift_features(&noise(3, 2000), 1).unwrap().max_var_shift;
        assert!(quiet < 3.5, "{quiet}");
    }
}
