use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::Shape;

/// Selects exactly `round(kept_fraction * n)` of the `n` coefficients,
/// uniformly without replacement. The result depends only on `seed`.
pub fn make_mask(shape: Shape, kept_fraction: f64, seed: u64) -> Result<Vec<bool>> {
    if !(kept_fraction > 0.0 && kept_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "kept fraction {kept_fraction} outside (0, 1]"
        )));
    }
    let n = shape.0 * shape.1;
    let kept = (kept_fraction * n as f64).round() as usize;
    if kept == 0 {
        return Err(Error::InvalidArgument(format!(
            "kept fraction {kept_fraction} keeps no coefficients of {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mask = vec![false; n];
    for i in rand::seq::index::sample(&mut rng, n, kept) {
        mask[i] = true;
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_fraction_keeps_everything() {
        assert!(make_mask((4, 4), 1.0, 0).unwrap().iter().all(|&b| b));
    }

    #[test]
    fn half_fraction_keeps_exactly_half() {
        let mask = make_mask((32, 32), 0.5, 17).unwrap();
        assert_eq!(mask.iter().filter(|&&b| b).count(), 512);
    }

    #[test]
    fn deterministic_given_seed() {
        assert_eq!(
            make_mask((16, 16), 0.3, 5).unwrap(),
            make_mask((16, 16), 0.3, 5).unwrap()
        );
        assert_ne!(
            make_mask((16, 16), 0.3, 5).unwrap(),
            make_mask((16, 16), 0.3, 6).unwrap()
        );
    }

    #[test]
    fn out_of_range_fraction_rejected() {
        for f in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(make_mask((4, 4), f, 0).is_err());
        }
    }
}
