//! 802.11b DCF timing with RTS/CTS and the emission coefficient it implies.
//!
//! While its neighbours are silent a pair spends `T_s` sending (RTS, PLCP
//! header and data) and `T_w` waiting (mean backoff, three SIFS, CTS and
//! ACK from its receiver), so `α = T_s / (T_s + T_w)`. The DIFS/EIFS
//! preceding a transmission is normally excluded because neighbours are
//! usually busy during it.

use libm::floor;

use crate::error::{Error, Result};

/// Data rates of 802.11b, Mbit/s.
pub const RATES: [f64; 4] = [1.0, 2.0, 5.5, 11.0];
pub const MIN_FRAME: u32 = 14;
pub const MAX_FRAME: u32 = 2346;

/// Which inter-frame space, if any, counts as waiting time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IfsAccounting {
    #[default]
    Excluded,
    Difs,
    Eifs,
}

/// Delay constants in microseconds; `cw_min` is in slots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacTiming {
    pub difs: f64,
    pub eifs: f64,
    pub sifs: f64,
    pub slot: f64,
    pub cw_min: f64,
    pub rts: f64,
    pub cts: f64,
    pub ack: f64,
    /// PHY preamble and header.
    pub plcp: f64,
    pub ifs_in_wait: IfsAccounting,
}

impl Default for MacTiming {
    fn default() -> Self {
        Self {
            difs: 50.0,
            eifs: 364.0,
            sifs: 10.0,
            slot: 20.0,
            cw_min: 31.0,
            rts: 304.0,
            cts: 352.0,
            ack: 304.0,
            plcp: 192.0,
            ifs_in_wait: IfsAccounting::Excluded,
        }
    }
}

impl MacTiming {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("difs", self.difs),
            ("eifs", self.eifs),
            ("sifs", self.sifs),
            ("slot", self.slot),
            ("rts", self.rts),
            ("cts", self.cts),
            ("ack", self.ack),
            ("plcp", self.plcp),
        ];
        for (what, value) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Domain { what, value });
            }
        }
        if !(self.cw_min >= 0.0 && self.cw_min.is_finite()) {
            return Err(Error::Domain {
                what: "cw_min",
                value: self.cw_min,
            });
        }
        if self.eifs <= self.difs {
            return Err(Error::Invalid("eifs must exceed difs"));
        }
        Ok(())
    }

    /// Mean backoff, `slot · CW · 0.5`.
    pub fn mean_backoff(&self) -> f64 {
        self.slot * self.cw_min * 0.5
    }

    /// Constant part of `T_s`: RTS plus PLCP header.
    pub fn send_overhead(&self) -> f64 {
        self.rts + self.plcp
    }

    /// `T_s` for `bytes` bytes at `rate` Mbit/s, without frame bounds.
    pub fn send_time(&self, bytes: f64, rate: f64) -> f64 {
        self.send_overhead() + 8.0 * bytes / rate
    }
}

/// MAC frame size and data rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSpec {
    bytes: u32,
    rate: f64,
}

impl FrameSpec {
    pub fn new(bytes: u32, rate: f64) -> Result<Self> {
        if !(MIN_FRAME..=MAX_FRAME).contains(&bytes) {
            return Err(Error::Domain {
                what: "frame size",
                value: bytes as f64,
            });
        }
        check_rate(rate)?;
        Ok(Self { bytes, rate })
    }

    pub fn bytes(&self) -> u32 {
        self.bytes
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if RATES.contains(&rate) {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "data rate",
            value: rate,
        })
    }
}

/// Sending time `T_s` in µs.
pub fn t_send(frame: &FrameSpec, timing: &MacTiming) -> f64 {
    timing.send_time(frame.bytes as f64, frame.rate)
}

/// Waiting time `T_w` in µs.
pub fn t_wait(timing: &MacTiming) -> f64 {
    let ifs = match timing.ifs_in_wait {
        IfsAccounting::Excluded => 0.0,
        IfsAccounting::Difs => timing.difs,
        IfsAccounting::Eifs => timing.eifs,
    };
    timing.mean_backoff() + 3.0 * timing.sifs + timing.cts + timing.ack + ifs
}

/// `α = T_s / (T_s + T_w)`.
pub fn alpha_of_packet(frame: &FrameSpec, timing: &MacTiming) -> Result<f64> {
    timing.validate()?;
    let ts = t_send(frame, timing);
    Ok(ts / (ts + t_wait(timing)))
}

/// Frame size, rounded to the nearest byte with ties up, whose `α` is
/// `alpha` at `rate` Mbit/s.
pub fn packet_for_alpha(alpha: f64, rate: f64, timing: &MacTiming) -> Result<u32> {
    timing.validate()?;
    check_rate(rate)?;
    let tw = t_wait(timing);
    let at = |bytes: u32| {
        let ts = timing.send_time(bytes as f64, rate);
        ts / (ts + tw)
    };
    let (min, max) = (at(MIN_FRAME), at(MAX_FRAME));
    let unreachable = Error::Unreachable { alpha, min, max };
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(unreachable);
    }
    // T_s = α T_w / (1 - α) and 8 s / d = T_s - overhead
    let ts = alpha * tw / (1.0 - alpha);
    let bytes = rate * (ts - timing.send_overhead()) / 8.0;
    let rounded = floor(bytes + 0.5);
    if rounded < MIN_FRAME as f64 || rounded > MAX_FRAME as f64 {
        return Err(unreachable);
    }
    Ok(rounded as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(s: u32, d: f64) -> FrameSpec {
        FrameSpec::new(s, d).unwrap()
    }

    #[test]
    fn send_time_examples() {
        let t = MacTiming::default();
        assert_eq!(t_send(&frame(1500, 2.0), &t), 6496.0);
        assert_eq!(t.send_time(0.0, 2.0), 496.0);
        assert_eq!(t_send(&frame(250, 2.0), &t), 1496.0);
    }

    #[test]
    fn wait_time_examples() {
        let t = MacTiming::default();
        assert_eq!(t_wait(&t), 996.0);
        assert_eq!(t.mean_backoff(), 310.0);
        let no_backoff = MacTiming { cw_min: 0.0, ..t };
        assert_eq!(t_wait(&no_backoff), 686.0);
        let with_eifs = MacTiming {
            ifs_in_wait: IfsAccounting::Eifs,
            ..t
        };
        assert_eq!(t_wait(&with_eifs), 996.0 + 364.0);
        let with_difs = MacTiming {
            ifs_in_wait: IfsAccounting::Difs,
            ..t
        };
        assert_eq!(t_wait(&with_difs), 996.0 + 50.0);
    }

    #[test]
    fn alpha_examples() {
        let t = MacTiming::default();
        let a = alpha_of_packet(&frame(1500, 2.0), &t).unwrap();
        assert!((a - 0.867).abs() <= 1e-3);
        assert!((a - 6496.0 / 7492.0).abs() < 1e-15);
        let a = alpha_of_packet(&frame(250, 2.0), &t).unwrap();
        assert!((a - 0.6).abs() <= 1e-3);
    }

    #[test]
    fn alpha_grows_with_frame_and_shrinks_with_wait() {
        let t = MacTiming::default();
        let slow = MacTiming { cts: 500.0, ..t };
        let mut prev = 0.0;
        for s in MIN_FRAME..=MAX_FRAME {
            let a = alpha_of_packet(&frame(s, 2.0), &t).unwrap();
            assert!(a > prev && a < 1.0);
            assert!(alpha_of_packet(&frame(s, 2.0), &slow).unwrap() < a);
            prev = a;
        }
    }

    #[test]
    fn packet_examples() {
        let t = MacTiming::default();
        let s = packet_for_alpha(0.867, 2.0, &t).unwrap();
        assert!((1499..=1501).contains(&s), "{s}");
        let s = packet_for_alpha(0.6, 2.0, &t).unwrap();
        assert!((249..=250).contains(&s), "{s}");
        assert_eq!(packet_for_alpha(0.655, 2.0, &t).unwrap(), 349);
    }

    #[test]
    fn packet_round_trips() {
        let t = MacTiming::default();
        for s in (100..=2300).step_by(7) {
            for d in RATES {
                let a = alpha_of_packet(&frame(s, d), &t).unwrap();
                let back = packet_for_alpha(a, d, &t).unwrap();
                assert!(back.abs_diff(s) <= 1, "s={s} d={d}");
                let again = alpha_of_packet(&frame(back, d), &t).unwrap();
                assert!((again - a).abs() <= 2e-3);
            }
        }
    }

    #[test]
    fn unreachable_alpha_reports_interval() {
        let t = MacTiming::default();
        match packet_for_alpha(0.2, 2.0, &t) {
            Err(Error::Unreachable { min, max, .. }) => {
                assert!(min > 0.2 && max < 1.0 && min < max);
            }
            other => panic!("{other:?}"),
        }
        assert!(packet_for_alpha(0.999, 2.0, &t).is_err());
        assert!(packet_for_alpha(1.0, 2.0, &t).is_err());
        assert!(packet_for_alpha(0.7, 3.0, &t).is_err());
    }

    #[test]
    fn invalid_inputs() {
        assert!(FrameSpec::new(13, 2.0).is_err());
        assert!(FrameSpec::new(2347, 2.0).is_err());
        assert!(FrameSpec::new(100, 4.0).is_err());
        let bad = MacTiming {
            eifs: 40.0,
            ..MacTiming::default()
        };
        assert!(alpha_of_packet(&frame(100, 2.0), &bad).is_err());
        let bad = MacTiming {
            sifs: 0.0,
            ..MacTiming::default()
        };
        assert!(bad.validate().is_err());
    }
}
