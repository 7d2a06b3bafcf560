//! Radio channel: airtime and Nakagami-m reception probability.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub bandwidth_bps: f64,
    /// Distance at which the mean received power equals the decoding threshold.
    pub nominal_range: f64,
    pub nakagami_m: f64,
    pub path_loss_exponent: f64,
    pub fading: bool,
    /// MAC + IP + UDP header bytes added to every frame.
    pub frame_overhead_bytes: u32,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self {
            bandwidth_bps: 6.0e6,
            nominal_range: 250.0,
            nakagami_m: 3.0,
            path_loss_exponent: 2.0,
            fading: true,
            frame_overhead_bytes: 62,
        }
    }
}

impl ChannelSpec {
    pub fn check(&self) -> Result<(), String> {
        if !(self.bandwidth_bps > 0.0) {
            return Err(format!("bandwidth must be positive, got {}", self.bandwidth_bps));
        }
        if !(self.nominal_range > 0.0) {
            return Err(format!("nominal range must be positive, got {}", self.nominal_range));
        }
        if !(self.nakagami_m >= 0.5) {
            return Err(format!("Nakagami m must be >= 0.5, got {}", self.nakagami_m));
        }
        if !(self.path_loss_exponent > 0.0) {
            return Err(format!(
                "path loss exponent must be positive, got {}",
                self.path_loss_exponent
            ));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("packet size must be positive")]
pub struct EmptyPacket;

/// Seconds needed to put `bytes` on the air.
pub fn packet_airtime(bytes: u32, bandwidth_bps: f64) -> Result<f64, EmptyPacket> {
    if bytes == 0 {
        return Err(EmptyPacket);
    }
    Ok(f64::from(bytes) * 8.0 / bandwidth_bps)
}

/// Probability that a frame sent over `distance` metres is decoded.
///
/// Without fading this is a disc of radius `nominal_range`. With fading the
/// received power is gamma distributed (shape `m`, mean `1/x` relative to
/// the threshold, `x = (d / range)^exponent`), so the success probability is
/// the gamma survival `Q(m, m x)`; for integer `m` that is the Erlang sum
/// `exp(-m x) * sum_{k<m} (m x)^k / k!`.
pub fn reception_probability(distance: f64, ch: &ChannelSpec) -> f64 {
    debug_assert!(distance >= 0.0);
    if !ch.fading {
        return if distance <= ch.nominal_range { 1.0 } else { 0.0 };
    }
    if distance <= 0.0 {
        return 1.0;
    }
    let x = (distance / ch.nominal_range).powf(ch.path_loss_exponent);
    let mx = ch.nakagami_m * x;
    if ch.nakagami_m.fract() == 0.0 && ch.nakagami_m <= 64.0 {
        let m = ch.nakagami_m as u32;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..m {
            term *= mx / f64::from(k);
            sum += term;
        }
        ((-mx).exp() * sum).min(1.0)
    } else {
        statrs::function::gamma::gamma_ur(ch.nakagami_m, mx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn faded(m: f64) -> ChannelSpec {
        ChannelSpec {
            nakagami_m: m,
            ..ChannelSpec::default()
        }
    }

    #[test]
    fn airtime() {
        let t = packet_airtime(512, 6.0e6).unwrap();
        assert!((t - 682.666_666_666_666_7e-6).abs() < 1e-15);
        assert_eq!(packet_airtime(1024, 6.0e6).unwrap(), 2.0 * t);
        assert_eq!(packet_airtime(0, 6.0e6), Err(EmptyPacket));
    }

    #[test]
    fn closed_forms() {
        let r = 250.0;
        assert_eq!(reception_probability(0.0, &faded(3.0)), 1.0);
        assert!((reception_probability(r, &faded(1.0)) - (-1.0f64).exp()).abs() < 1e-12);
        assert!((reception_probability(r, &faded(3.0)) - 8.5 * (-3.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn non_integer_m_matches_neighbours() {
        let d = 200.0;
        let lo = reception_probability(d, &faded(2.0));
        let mid = reception_probability(d, &faded(2.5));
        let hi = reception_probability(d, &faded(3.0));
        // Inside the nominal range, less severe fading means more successes.
        assert!(lo < mid && mid < hi, "{lo} {mid} {hi}");
        // Integer m through the general path agrees with the Erlang sum.
        let general = statrs::function::gamma::gamma_ur(3.0, 3.0 * (d / 250.0f64).powi(2));
        assert!((general - hi).abs() < 1e-12);
    }

    #[test]
    fn disc_without_fading() {
        let ch = ChannelSpec {
            fading: false,
            ..ChannelSpec::default()
        };
        assert_eq!(reception_probability(250.0, &ch), 1.0);
        assert_eq!(reception_probability(250.001, &ch), 0.0);
    }

    #[test]
    fn non_increasing_in_distance() {
        for m in [0.5, 1.0, 2.0, 3.0, 4.5] {
            let ch = faded(m);
            let mut prev = 1.0;
            for i in 0..400 {
                let p = reception_probability(f64::from(i) * 2.5, &ch);
                assert!(p <= prev + 1e-15, "m={m} d={}", f64::from(i) * 2.5);
                assert!((0.0..=1.0).contains(&p));
                prev = p;
            }
        }
    }
}
