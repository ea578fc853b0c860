use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};

/// Closed-form probability that BM from `|x| = 1` reaches radius `e^{-l}`
/// before radius `e^k`.
pub fn ruin_formula(d: usize, k: f64, l: f64) -> Result<f64> {
    if !(k > 0.0 && l > 0.0) {
        return Err(invalid("k,l", "both must be positive"));
    }
    match d {
        2 => Ok(k / (k + l)),
        3 => Ok((1.0 - (-k).exp()) / (l.exp() - (-k).exp())),
        _ => Err(invalid("d", "supported dimensions are 2 and 3")),
    }
}

/// Step scale relative to the distance to the nearer sphere.
const STEP_FRACTION: f64 = 0.2;
/// Relative shell width at which the nearer sphere counts as hit.
const SHELL: f64 = 1e-4;

/// One Brownian trajectory from `(1, 0, ...)` in the annulus
/// `e^{-l} < |x| < e^k`; true when the inner sphere is hit first.
///
/// Gaussian steps have standard deviation proportional to the distance to
/// the annulus boundary, so long excursions stay cheap.
pub fn ruin_trial<R: Rng + ?Sized, const D: usize>(k: f64, l: f64, rng: &mut R) -> bool {
    let r_in = (-l).exp();
    let r_out = k.exp();
    let mut x = [0.0; D];
    x[0] = 1.0;
    loop {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let g_in = r - r_in;
        let g_out = r_out - r;
        if g_in <= SHELL * r_in {
            return true;
        }
        if g_out <= SHELL * r_out {
            return false;
        }
        let sd = STEP_FRACTION * g_in.min(g_out);
        for c in x.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *c += sd * z;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn formulas() {
        assert_eq!(ruin_formula(2, 2.0, 2.0).unwrap(), 0.5);
        assert_eq!(ruin_formula(2, 1.0, 1.0).unwrap(), 0.5);
        let e = 1f64.exp();
        assert!((ruin_formula(3, 1.0, 1.0).unwrap() - (1.0 - 1.0 / e) / (e - 1.0 / e)).abs() < 1e-15);
        assert!((ruin_formula(3, 1.0, 1.0).unwrap() - 0.26894).abs() < 1e-5);
        assert!(ruin_formula(3, 1.0, 30.0).unwrap() < 1e-12);
        assert!(ruin_formula(4, 1.0, 1.0).is_err());
        assert!(ruin_formula(2, 0.0, 1.0).is_err());
    }

    #[test]
    fn symmetric_case_near_half() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 20_000;
        let hits = (0..n).filter(|_| ruin_trial::<_, 2>(1.0, 1.0, &mut rng)).count();
        let p = hits as f64 / n as f64;
        assert!((p - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt(), "{p}");
    }
}
