//! Eight-LED binary display wired straight to the converter output.

use crate::adc::AdcCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DisplayState {
    /// `leds[i]` shows bit `i`.
    pub leds: [bool; 8],
    pub last_update_tick: Option<u64>,
}

impl DisplayState {
    pub fn value(&self) -> u8 {
        self.leds
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &on)| acc | (u8::from(on) << i))
    }

    /// Bit 7 first, e.g. `10100101` for 0xA5.
    pub fn render(&self) -> String {
        self.leds.iter().rev().map(|&on| if on { '1' } else { '0' }).collect()
    }
}

/// Display contents after `code` finishes converting at `tick`.
pub fn update_display(code: AdcCode, tick: u64) -> DisplayState {
    let mut leds = [false; 8];
    for (i, led) in leds.iter_mut().enumerate() {
        *led = code.code >> i & 1 == 1;
    }
    DisplayState {
        leds,
        last_update_tick: Some(tick),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn show(c: u8) -> DisplayState {
        update_display(AdcCode { code: c, sample_tick: 0 }, 3)
    }

    #[test]
    fn examples() {
        assert_eq!(show(0).leds, [false; 8]);
        assert_eq!(show(255).leds, [true; 8]);
        assert_eq!(show(0xa5).leds, [true, false, true, false, false, true, false, true]);
        assert_eq!(show(0xa5).render(), "10100101");
        assert_eq!(show(0xa5).last_update_tick, Some(3));
        assert_eq!(DisplayState::default().render(), "00000000");
    }

    #[test]
    fn value_round_trips_every_code() {
        for c in 0..=255u8 {
            assert_eq!(show(c).value(), c);
            assert_eq!(u8::from_str_radix(&show(c).render(), 2).unwrap(), c);
        }
    }
}
