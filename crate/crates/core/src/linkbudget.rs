//! Radio and traffic parameters.
//!
//! Every dB quantity is converted to linear scale exactly once, in
//! [`NetworkParams::xi_db`]. The mean SNR at distance `r` is `ξ·r^(-α)` with
//!
//! ```text
//! ξ[dB] = Pt[dBm] + G0[dB] + K[dB] - (N0[dBm/Hz] + 10·log10(B[Hz]))
//! ```
//!
//! Both `Pt` and the noise power are in dBm, so the milliwatt reference
//! cancels and no extra 30 dB term appears. `K` is the path-loss *gain* at
//! the 1 m reference distance, i.e. a negative number for a lossy channel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square metres per square kilometre.
pub const M2_PER_KM2: f64 = 1e6;

/// Free-space path-loss intercept at 1 m, `32.4 + 20·log10(fc / 1 GHz)` dB,
/// returned as a gain (negated). This is a convenience default for the
/// path-loss coefficient, not a calibrated channel model.
pub fn k_from_carrier_ghz(fc_ghz: f64) -> f64 {
    -(32.4 + 20.0 * fc_ghz.log10())
}

/// Carrier frequency used for the default path-loss coefficient.
pub const DEFAULT_CARRIER_GHZ: f64 = 28.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    /// BS density [m⁻²].
    pub lambda_bs: f64,
    pub pt_dbm: f64,
    /// Combined transmit/receive antenna gain [dB].
    pub g0_db: f64,
    pub bandwidth_hz: f64,
    pub noise_density_dbm_hz: f64,
    /// Path-loss gain at 1 m [dB].
    pub k_pathloss_db: f64,
    pub alpha: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self {
            lambda_bs: 1e-5,
            pt_dbm: 30.0,
            g0_db: 20.0,
            bandwidth_hz: 1e9,
            noise_density_dbm_hz: -174.0,
            k_pathloss_db: k_from_carrier_ghz(DEFAULT_CARRIER_GHZ),
            alpha: 2.0,
        }
    }
}

impl NetworkParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_bs > 0.0 && self.lambda_bs.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "lambda_bs",
                value: self.lambda_bs,
                reason: "must be positive",
            });
        }
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "bandwidth_hz",
                value: self.bandwidth_hz,
                reason: "must be positive",
            });
        }
        if !(self.alpha >= 2.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: self.alpha,
                reason: "must be at least 2",
            });
        }
        for (name, value) in [
            ("pt_dbm", self.pt_dbm),
            ("g0_db", self.g0_db),
            ("noise_density_dbm_hz", self.noise_density_dbm_hz),
            ("k_pathloss_db", self.k_pathloss_db),
        ] {
            if !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite",
                });
            }
        }
        Ok(())
    }

    /// Noise power over the band [dBm].
    pub fn noise_power_dbm(&self) -> f64 {
        self.noise_density_dbm_hz + 10.0 * self.bandwidth_hz.log10()
    }

    /// Mean SNR at 1 m [dB].
    pub fn xi_db(&self) -> f64 {
        self.pt_dbm + self.g0_db + self.k_pathloss_db - self.noise_power_dbm()
    }

    /// Mean SNR at 1 m, linear.
    pub fn xi(&self) -> f64 {
        10f64.powf(self.xi_db() / 10.0)
    }

    /// Mean SNR at distance `r` metres.
    pub fn mean_snr(&self, r: f64) -> f64 {
        self.xi() * r.powf(-self.alpha)
    }

    /// Area beyond which a disk cell's edge SNR drops below one, `π·ξ^(2/α)`.
    pub fn high_snr_area_limit(&self) -> f64 {
        std::f64::consts::PI * self.xi().powf(2.0 / self.alpha)
    }
}

/// Free function form of [`NetworkParams::xi`].
pub fn xi(params: &NetworkParams) -> f64 {
    params.xi()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficParams {
    /// Flow arrival intensity [users·s⁻¹·m⁻²].
    pub lambda_u: f64,
    /// Mean file size [bits].
    pub sigma_bits: f64,
}

impl Default for TrafficParams {
    fn default() -> Self {
        Self::from_per_km2(100.0, 1e8)
    }
}

impl TrafficParams {
    /// Builds traffic parameters from an arrival intensity given per km².
    pub fn from_per_km2(lambda_u_per_km2: f64, sigma_bits: f64) -> Self {
        Self {
            lambda_u: lambda_u_per_km2 / M2_PER_KM2,
            sigma_bits,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_u >= 0.0 && self.lambda_u.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "lambda_u",
                value: self.lambda_u,
                reason: "must be non-negative",
            });
        }
        if !(self.sigma_bits > 0.0 && self.sigma_bits.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "sigma_bits",
                value: self.sigma_bits,
                reason: "must be positive",
            });
        }
        Ok(())
    }

    /// Traffic density `w = λ_U·σ` [bits·s⁻¹·m⁻²].
    pub fn traffic_density(&self) -> f64 {
        self.lambda_u * self.sigma_bits
    }
}

pub fn traffic_density(t: &TrafficParams) -> f64 {
    t.traffic_density()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_radio(g0_db: f64, k_db: f64) -> NetworkParams {
        NetworkParams {
            g0_db,
            k_pathloss_db: k_db,
            ..NetworkParams::default()
        }
    }

    #[test]
    fn xi_hand_db_arithmetic() {
        let p = reference_radio(0.0, 0.0);
        assert!((p.noise_power_dbm() + 84.0).abs() < 1e-12);
        assert!((p.xi_db() - 114.0).abs() < 1e-12);
        let expected = 10f64.powf(11.4);
        assert!((p.xi() / expected - 1.0).abs() < 1e-12);
        assert!((p.xi() - 2.51e11).abs() / 2.51e11 < 1e-3);
    }

    #[test]
    fn xi_matches_linear_units() {
        let p = NetworkParams {
            pt_dbm: 23.0,
            g0_db: 12.5,
            k_pathloss_db: -61.3,
            noise_density_dbm_hz: -171.0,
            bandwidth_hz: 4e8,
            ..NetworkParams::default()
        };
        let pt_w = 1e-3 * 10f64.powf(p.pt_dbm / 10.0);
        let g0 = 10f64.powf(p.g0_db / 10.0);
        let k = 10f64.powf(p.k_pathloss_db / 10.0);
        let n0_w_hz = 1e-3 * 10f64.powf(p.noise_density_dbm_hz / 10.0);
        let linear = k * pt_w * g0 / (n0_w_hz * p.bandwidth_hz);
        assert!((p.xi() / linear - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_case() {
        let p = NetworkParams {
            pt_dbm: 0.0,
            g0_db: 0.0,
            k_pathloss_db: 0.0,
            noise_density_dbm_hz: 0.0,
            bandwidth_hz: 1.0,
            ..NetworkParams::default()
        };
        assert_eq!(p.xi(), 1.0);
    }

    #[test]
    fn three_db_gain_step() {
        let a = reference_radio(0.0, -60.0).xi();
        let b = reference_radio(3.0, -60.0).xi();
        assert!((b / a - 1.995_262_314_968_879_6).abs() < 1e-12);
    }

    #[test]
    fn xi_round_trip_to_db() {
        for (pt, g0, k, n0, bw) in [
            (30.0, 20.0, -61.3, -174.0, 1e9),
            (46.0, 0.0, -40.0, -169.0, 2e7),
            (10.0, 36.0, -80.0, -174.0, 5e8),
        ] {
            let p = NetworkParams {
                pt_dbm: pt,
                g0_db: g0,
                k_pathloss_db: k,
                noise_density_dbm_hz: n0,
                bandwidth_hz: bw,
                ..NetworkParams::default()
            };
            let sum = pt + g0 + k - n0 - 10.0 * bw.log10();
            let back = 10.0 * p.xi().log10();
            assert!(
                (back - sum).abs() <= 1e-12 * sum.abs().max(1.0),
                "{back} vs {sum}"
            );
        }
    }

    #[test]
    fn carrier_helper() {
        assert!((k_from_carrier_ghz(1.0) + 32.4).abs() < 1e-12);
        assert!((k_from_carrier_ghz(28.0) + 61.34).abs() < 5e-3);
    }

    #[test]
    fn traffic_examples() {
        let t = TrafficParams::from_per_km2(100.0, 1e8);
        assert!((t.lambda_u - 1e-4).abs() < 1e-18);
        assert!((t.traffic_density() - 1e4).abs() < 1e-9);
        let idle = TrafficParams {
            lambda_u: 0.0,
            sigma_bits: 1e8,
        };
        assert_eq!(idle.traffic_density(), 0.0);
        let t = TrafficParams {
            lambda_u: 2e-6,
            sigma_bits: 5e5,
        };
        assert!((t.traffic_density() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        let mut p = NetworkParams::default();
        assert!(p.validate().is_ok());
        p.alpha = 1.5;
        assert!(p.validate().is_err());
        p.alpha = 2.0;
        p.lambda_bs = 0.0;
        assert!(p.validate().is_err());
        let t = TrafficParams {
            lambda_u: -1.0,
            sigma_bits: 1.0,
        };
        assert!(t.validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn xi_monotone(
                pt in -10.0f64..50.0, g0 in 0.0f64..40.0, k in -120.0f64..0.0,
                n0 in -180.0f64..-150.0, bw in 1e6f64..1e10, step in 0.01f64..10.0,
            ) {
                let base = NetworkParams {
                    pt_dbm: pt, g0_db: g0, k_pathloss_db: k,
                    noise_density_dbm_hz: n0, bandwidth_hz: bw,
                    ..NetworkParams::default()
                };
                let x = base.xi();
                let up = [
                    NetworkParams { pt_dbm: pt + step, ..base }.xi(),
                    NetworkParams { g0_db: g0 + step, ..base }.xi(),
                    NetworkParams { k_pathloss_db: k + step, ..base }.xi(),
                ];
                let down = [
                    NetworkParams { noise_density_dbm_hz: n0 + step, ..base }.xi(),
                    NetworkParams { bandwidth_hz: bw * (1.0 + step), ..base }.xi(),
                ];
                prop_assert!(up.iter().all(|&v| v > x));
                prop_assert!(down.iter().all(|&v| v < x));
            }
        }
    }
}
