//! Signal-strength model: deterministic decay plus random disturbance.

use super::PhyError;

/// Parameters of the propagation model and the reception threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioParams {
    /// Transmit signal power (dimensionless).
    pub p_transmit: f64,
    /// Distance decay exponent.
    pub gamma: f64,
    /// Standard deviation of the multiplicative disturbance.
    pub sigma_alpha: f64,
    /// Standard deviation of the additive disturbance.
    pub sigma_beta: f64,
    /// Minimum received power for a frame to be heard. `None` derives it
    /// from `tx_radius` so the noiseless audible set is the radius disk.
    pub rx_threshold: Option<f64>,
    /// Nominal transmission radius in meters, used for neighbor lists.
    pub tx_radius: f64,
    /// Distance in meters up to which a transmission keeps a listener's
    /// channel busy. Clamped below by the reception range.
    pub cs_range: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            p_transmit: 1.0,
            gamma: 2.0,
            sigma_alpha: 0.05,
            sigma_beta: 0.0,
            rx_threshold: None,
            tx_radius: 35.0,
            cs_range: 70.0,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<(), PhyError> {
        if !(2.0..=4.0).contains(&self.gamma) {
            return Err(PhyError::Invalid(format!(
                "gamma must lie in [2, 4], got {}",
                self.gamma
            )));
        }
        if !(self.p_transmit > 0.0) {
            return Err(PhyError::Invalid("p_transmit must be positive".into()));
        }
        if !(self.sigma_alpha >= 0.0) || !(self.sigma_beta >= 0.0) {
            return Err(PhyError::Invalid("disturbance sigmas must be non-negative".into()));
        }
        if !(self.tx_radius > 0.0) {
            return Err(PhyError::Invalid("tx_radius must be positive".into()));
        }
        if !(self.cs_range > 0.0) {
            return Err(PhyError::Invalid("cs_range must be positive".into()));
        }
        if let Some(t) = self.rx_threshold {
            if !(t > 0.0) {
                return Err(PhyError::Invalid("rx_threshold must be positive".into()));
            }
        }
        Ok(())
    }

    /// Effective reception threshold.
    pub fn threshold(&self) -> f64 {
        self.rx_threshold
            .unwrap_or_else(|| ideal_reception(self.p_transmit, self.tx_radius, self.gamma))
    }

    /// Carrier-sense threshold, never above the reception threshold.
    pub fn cs_threshold(&self) -> f64 {
        ideal_reception(self.p_transmit, self.cs_range, self.gamma).min(self.threshold())
    }

    /// Distance beyond which no frame can be sensed even with a six-sigma
    /// favourable disturbance. Listeners further away are skipped outright.
    pub fn audible_cutoff(&self) -> f64 {
        let threshold = self.cs_threshold();
        let boost = 1.0 + 6.0 * self.sigma_alpha;
        let floor = threshold - 6.0 * self.sigma_beta;
        if floor <= 0.0 {
            return f64::INFINITY;
        }
        let ratio = self.p_transmit * boost / floor - 1.0;
        if ratio <= 0.0 {
            return 0.0;
        }
        ratio.powf(1.0 / self.gamma).max(self.tx_radius).max(self.cs_range)
    }
}

/// Noise-free received power at distance `d`: `p_tx / (1 + d^gamma)`.
pub fn ideal_reception(p_tx: f64, d: f64, gamma: f64) -> f64 {
    p_tx / (1.0 + d.powf(gamma))
}

/// Apply the multiplicative then additive disturbance, clamped at zero.
pub fn perturbed_reception(ideal: f64, alpha_draw: f64, beta_draw: f64) -> f64 {
    (ideal * (1.0 + alpha_draw) + beta_draw).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_reception_examples() {
        assert_eq!(ideal_reception(1.0, 0.0, 2.0), 1.0);
        assert!((ideal_reception(1.0, 2.0, 2.0) - 0.2).abs() < 1e-15);
        assert!((ideal_reception(2.0, 1.0, 3.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn perturbed_reception_examples() {
        assert_eq!(perturbed_reception(0.2, 0.0, 0.0), 0.2);
        assert_eq!(perturbed_reception(0.2, -1.0, 0.0), 0.0);
        assert!((perturbed_reception(0.2, 0.5, 0.01) - 0.31).abs() < 1e-12);
        assert_eq!(perturbed_reception(0.2, -2.0, 0.05), 0.0);
    }

    #[test]
    fn gamma_out_of_range_rejected() {
        let p = RadioParams {
            gamma: 1.5,
            ..RadioParams::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn derived_threshold_matches_radius() {
        let p = RadioParams::default();
        assert_eq!(p.threshold(), ideal_reception(1.0, 35.0, 2.0));
        let noiseless = RadioParams {
            sigma_alpha: 0.0,
            ..p
        };
        assert_eq!(noiseless.audible_cutoff(), 70.0);
        let short = RadioParams { cs_range: 35.0, ..noiseless };
        assert_eq!(short.audible_cutoff(), 35.0);
        assert_eq!(short.cs_threshold(), short.threshold());
    }

    #[test]
    fn cs_threshold_never_above_rx_threshold() {
        let p = RadioParams { cs_range: 10.0, ..RadioParams::default() };
        assert_eq!(p.cs_threshold(), p.threshold());
        let q = RadioParams::default();
        assert!(q.cs_threshold() < q.threshold());
    }

    proptest::proptest! {
        #[test]
        fn ideal_reception_decreasing(d in 0.001f64..500.0, step in 0.001f64..50.0, gamma in 2.0f64..=4.0) {
            proptest::prop_assert!(ideal_reception(1.0, d + step, gamma) < ideal_reception(1.0, d, gamma));
        }
    }
}
