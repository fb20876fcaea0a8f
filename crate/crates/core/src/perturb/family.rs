use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::calibration::p_n;
use crate::error::invalid;
use crate::Result;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Perturbation families. Every family is symmetric about zero and, before
/// scaling, exactly 1-sub-Gaussian with unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbFamily {
    /// `N(0, 1)`.
    Gaussian,
    /// `Unif[−√3, √3]`.
    Uniform,
    /// `±1` with probability one half each.
    Rademacher,
    /// Each coordinate is `2·g₁/‖g‖` for `g ~ N(0, I₄)`, i.e. the first
    /// coordinate of a uniform point on the 3-sphere scaled to unit
    /// variance (the semicircle law on `[−2, 2]`).
    SphericalComponentwise,
    /// `√2·(B − 1)` with `B ~ Binomial(2, 1/2)`: values `−√2, 0, √2` with
    /// probabilities `1/4, 1/2, 1/4`.
    CenteredBinomial,
}

impl PerturbFamily {
    pub const ALL: [PerturbFamily; 5] = [
        PerturbFamily::Gaussian,
        PerturbFamily::Uniform,
        PerturbFamily::Rademacher,
        PerturbFamily::SphericalComponentwise,
        PerturbFamily::CenteredBinomial,
    ];

    /// One draw from the unit-normalised family.
    pub fn sample_unit<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            PerturbFamily::Gaussian => StandardNormal.sample(rng),
            PerturbFamily::Uniform => rng.random_range(-SQRT_3..SQRT_3),
            PerturbFamily::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            PerturbFamily::SphericalComponentwise => {
                let g: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
                let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    0.0
                } else {
                    2.0 * g[0] / norm
                }
            }
            PerturbFamily::CenteredBinomial => {
                let bits = rng.next_u32();
                let b = (bits & 1) + ((bits >> 1) & 1);
                std::f64::consts::SQRT_2 * (b as f64 - 1.0)
            }
        }
    }

    pub fn is_gaussian(self) -> bool {
        matches!(self, PerturbFamily::Gaussian)
    }
}

/// A perturbation family together with its per-coordinate scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub family: PerturbFamily,
    pub scale: f64,
}

impl PerturbationSpec {
    pub fn new(family: PerturbFamily, scale: f64) -> Result<Self> {
        if !scale.is_finite() || scale < 0.0 {
            return Err(invalid(format!(
                "perturbation scale must be finite and ≥ 0, got {scale}"
            )));
        }
        Ok(Self { family, scale })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.scale * self.family.sample_unit(rng)
    }

    /// Per-unit-norm threshold `c` in `P(uᵀZ ≥ c‖u‖₂) ≥ p`.
    pub fn anti_conc_threshold(&self) -> f64 {
        if self.family.is_gaussian() {
            self.scale
        } else {
            self.scale / 3.0
        }
    }

    /// Guaranteed probability `p` in `P(uᵀZ ≥ c‖u‖₂) ≥ p`.
    pub fn anti_conc_floor(&self) -> f64 {
        if self.family.is_gaussian() {
            p_n()
        } else {
            0.01
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturb::stream::KeyedRng;

    fn moments(family: PerturbFamily, n: usize) -> (f64, f64, f64) {
        let mut rng = KeyedRng::new(77, &[family as u64]);
        let mut sum = 0.0;
        let mut sq = 0.0;
        let mut max = 0.0f64;
        for _ in 0..n {
            let z = family.sample_unit(&mut rng);
            sum += z;
            sq += z * z;
            max = max.max(z.abs());
        }
        let mean = sum / n as f64;
        (mean, sq / n as f64 - mean * mean, max)
    }

    #[test]
    fn every_family_is_centered_with_unit_variance() {
        for family in PerturbFamily::ALL {
            let (mean, var, _) = moments(family, 400_000);
            assert!(mean.abs() < 0.01, "{family:?} mean {mean}");
            assert!((var - 1.0).abs() < 0.02, "{family:?} variance {var}");
        }
    }

    #[test]
    fn supports_are_as_documented() {
        let (_, _, max) = moments(PerturbFamily::Uniform, 100_000);
        assert!(max <= SQRT_3);
        let (_, _, max) = moments(PerturbFamily::SphericalComponentwise, 100_000);
        assert!(max <= 2.0);
        let mut rng = KeyedRng::new(1, &[]);
        for _ in 0..1000 {
            let r = PerturbFamily::Rademacher.sample_unit(&mut rng);
            assert!(r == 1.0 || r == -1.0);
            let b = PerturbFamily::CenteredBinomial.sample_unit(&mut rng);
            assert!(b == 0.0 || (b.abs() - std::f64::consts::SQRT_2).abs() < 1e-15);
        }
    }

    #[test]
    fn rademacher_scaled_two_point_support() {
        let spec = PerturbationSpec::new(PerturbFamily::Rademacher, 1.0).unwrap();
        let mut rng = KeyedRng::new(3, &[]);
        for _ in 0..100 {
            let z = spec.sample(&mut rng);
            assert!(z == 1.0 || z == -1.0);
        }
    }

    #[test]
    fn anti_concentration_constants() {
        let g = PerturbationSpec::new(PerturbFamily::Gaussian, 2.5).unwrap();
        assert_eq!(g.anti_conc_threshold(), 2.5);
        assert!(g.anti_conc_floor() >= 0.15);
        let u = PerturbationSpec::new(PerturbFamily::Uniform, 3.0).unwrap();
        assert_eq!(u.anti_conc_threshold(), 1.0);
        assert_eq!(u.anti_conc_floor(), 0.01);
    }

    #[test]
    fn rejects_negative_scale() {
        assert!(PerturbationSpec::new(PerturbFamily::Gaussian, -1.0).is_err());
        assert!(PerturbationSpec::new(PerturbFamily::Gaussian, f64::INFINITY).is_err());
        assert!(PerturbationSpec::new(PerturbFamily::Gaussian, 0.0).is_ok());
    }
}
