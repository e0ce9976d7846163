//! Scenario files: UTF-8 `key = value` lines, `#` comments, keys namespaced
//! per module. [`Scenario::to_text`] prints the canonical form, which loads
//! back to the same scenario and prints byte-identically.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::adc::{self, AdcConfig};
use crate::compensator::{ActuatorChain, BrakeState, DetectorConfig, PulseGenerator};
use crate::error::Error;
use crate::plant::{TransducerModel, WearLaw, WearModel};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Malformed { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: duplicate key `{key}` (first set on line {first})")]
    Duplicate { key: String, line: usize, first: usize },
    #[error("missing required key `{key}`")]
    Missing { key: String },
    #[error("line {line}: key `{key}` has an empty value")]
    Empty { key: String, line: usize },
    #[error("line {line}: key `{key}`: cannot parse `{value}` as {expected}")]
    Parse {
        key: String,
        line: usize,
        value: String,
        expected: &'static str,
    },
    #[error("{}key `{key}`: {reason}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid {
        key: String,
        line: Option<usize>,
        reason: String,
    },
}

impl ConfigError {
    /// The offending key, when the error is tied to one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Malformed { .. } => None,
            ConfigError::UnknownKey { key, .. }
            | ConfigError::Duplicate { key, .. }
            | ConfigError::Missing { key }
            | ConfigError::Empty { key, .. }
            | ConfigError::Parse { key, .. }
            | ConfigError::Invalid { key, .. } => Some(key),
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            ConfigError::Malformed { line }
            | ConfigError::UnknownKey { line, .. }
            | ConfigError::Duplicate { line, .. }
            | ConfigError::Empty { line, .. }
            | ConfigError::Parse { line, .. } => Some(*line),
            ConfigError::Missing { .. } => None,
            ConfigError::Invalid { line, .. } => *line,
        }
    }
}

/// Every recognised key, in canonical print order.
pub const KEYS: &[&str] = &[
    "name",
    "tick_seconds",
    "duration_ticks",
    "wear.mode",
    "wear.rate",
    "wear.breakpoints",
    "wear.noise_amplitude",
    "wear.rng_seed",
    "transducer.v_contact",
    "transducer.sensitivity",
    "transducer.v_floor",
    "input.source",
    "input.sine_offset",
    "input.sine_amplitude",
    "input.sine_frequency",
    "adc.v_ref",
    "adc.bits",
    "adc.sample_period_ticks",
    "adc.conversion_ticks",
    "link.timeout_ticks",
    "detector.source",
    "detector.gain",
    "detector.v_on",
    "detector.v_off",
    "chain.teeth_per_pulse",
    "chain.wheel_teeth",
    "chain.worm_ratio",
    "chain.screw_pitch",
    "pulse.frequency",
    "brake.engage_delay_ticks",
    "brake.release_delay_ticks",
];

/// What feeds the converter input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputSource {
    /// The plant's transducer output.
    Plant,
    /// `offset + amplitude * sin(2π f t)` volts, bypassing the plant.
    Sine { offset: f64, amplitude: f64, frequency: f64 },
}

impl InputSource {
    pub fn voltage(&self, t: f64, transducer_v: f64) -> f64 {
        match *self {
            InputSource::Plant => transducer_v,
            InputSource::Sine {
                offset,
                amplitude,
                frequency,
            } => offset + amplitude * (std::f64::consts::TAU * frequency * t).sin(),
        }
    }
}

/// Which signal the compensation detector watches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorSource {
    /// The transducer voltage directly.
    Analog,
    /// The reconstruction of the latest completed conversion.
    Adc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub tick_seconds: f64,
    pub duration_ticks: u64,
    pub wear: WearModel,
    pub transducer: TransducerModel,
    pub input: InputSource,
    pub adc: AdcConfig,
    pub link_timeout_ticks: u64,
    pub detector_source: DetectorSource,
    pub detector: DetectorConfig,
    pub chain: ActuatorChain,
    pub pulse: PulseGenerator,
    pub brake: BrakeState,
}

/// Parsed but not yet validated `key -> (value, line)` pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawScenario {
    entries: BTreeMap<String, (String, usize)>,
}

impl RawScenario {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, (String, usize)> = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Malformed { line });
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(ConfigError::Malformed { line });
            }
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    key: key.to_owned(),
                    line,
                });
            }
            if let Some((_, first)) = entries.get(key) {
                return Err(ConfigError::Duplicate {
                    key: key.to_owned(),
                    line,
                    first: *first,
                });
            }
            entries.insert(key.to_owned(), (value.to_owned(), line));
        }
        Ok(Self { entries })
    }

    /// Overrides (or adds) a key, as if it appeared on line 0.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                key: key.to_owned(),
                line: 0,
            });
        }
        self.entries.insert(key.to_owned(), (value.to_owned(), 0));
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|&(_, l)| l)
    }

    fn raw(&self, key: &str) -> Result<Option<(&str, usize)>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) if v.is_empty() => Err(ConfigError::Empty {
                key: key.to_owned(),
                line: *line,
            }),
            Some((v, line)) => Ok(Some((v.as_str(), *line))),
        }
    }

    fn required(&self, key: &str) -> Result<(&str, usize), ConfigError> {
        self.raw(key)?.ok_or_else(|| ConfigError::Missing { key: key.to_owned() })
    }

    fn parse_as<T: std::str::FromStr>(
        key: &str,
        (value, line): (&str, usize),
        expected: &'static str,
    ) -> Result<T, ConfigError> {
        value.parse().map_err(|_| ConfigError::Parse {
            key: key.to_owned(),
            line,
            value: value.to_owned(),
            expected,
        })
    }

    fn f64(&self, key: &str) -> Result<f64, ConfigError> {
        let v: f64 = Self::parse_as(key, self.required(key)?, "a number")?;
        if !v.is_finite() {
            return Err(self.invalid(key, "must be finite"));
        }
        Ok(v)
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.raw(key)? {
            None => Ok(default),
            Some(_) => self.f64(key),
        }
    }

    fn u64(&self, key: &str) -> Result<u64, ConfigError> {
        Self::parse_as(key, self.required(key)?, "a non-negative integer")
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.raw(key)? {
            None => Ok(default),
            Some(_) => self.u64(key),
        }
    }

    fn u32(&self, key: &str) -> Result<u32, ConfigError> {
        Self::parse_as(key, self.required(key)?, "a non-negative integer")
    }

    fn choice<'a>(&'a self, key: &str, default: Option<&'a str>, options: &[&str]) -> Result<&'a str, ConfigError> {
        let v = match (self.raw(key)?, default) {
            (Some((v, _)), _) => v,
            (None, Some(d)) => d,
            (None, None) => return Err(ConfigError::Missing { key: key.to_owned() }),
        };
        if options.contains(&v) {
            Ok(v)
        } else {
            Err(self.invalid(key, format!("expected one of {}, got `{v}`", options.join(" | "))))
        }
    }

    fn forbid(&self, key: &str, why: &str) -> Result<(), ConfigError> {
        if self.entries.contains_key(key) {
            return Err(self.invalid(key, format!("not applicable {why}")));
        }
        Ok(())
    }

    fn invalid(&self, key: &str, reason: impl Into<String>) -> ConfigError {
        ConfigError::Invalid {
            key: key.to_owned(),
            line: self.line(key),
            reason: reason.into(),
        }
    }

    /// Maps a model constructor error onto the scenario key it came from.
    fn model_err(&self, namespace: &str, err: Error) -> ConfigError {
        match err {
            Error::InvalidParameter { name, reason } => {
                let key = if name == "tick_seconds" {
                    name.to_owned()
                } else {
                    format!("{namespace}.{name}")
                };
                self.invalid(&key, reason)
            }
            other => self.invalid(namespace, other.to_string()),
        }
    }
}

fn parse_breakpoints(raw: &RawScenario, key: &str) -> Result<Vec<(f64, f64)>, ConfigError> {
    let (value, line) = raw.required(key)?;
    value
        .split(',')
        .map(|pair| {
            let bad = || ConfigError::Parse {
                key: key.to_owned(),
                line,
                value: pair.trim().to_owned(),
                expected: "`time:rate`",
            };
            let (t, r) = pair.split_once(':').ok_or_else(bad)?;
            Ok((t.trim().parse().map_err(|_| bad())?, r.trim().parse().map_err(|_| bad())?))
        })
        .collect()
}

impl Scenario {
    pub fn load(text: &str) -> Result<Self, ConfigError> {
        Self::from_raw(&RawScenario::parse(text)?)
    }

    pub fn from_raw(raw: &RawScenario) -> Result<Self, ConfigError> {
        let name = raw.raw("name")?.map_or("scenario", |(v, _)| v).to_owned();
        if name.chars().any(|c| c.is_whitespace() || c == '/' || c == '\\') {
            return Err(raw.invalid("name", "must not contain whitespace or path separators"));
        }

        let tick_seconds = raw.f64("tick_seconds")?;
        if tick_seconds <= 0.0 {
            return Err(raw.invalid("tick_seconds", "must be > 0"));
        }
        let duration_ticks = raw.u64("duration_ticks")?;
        if duration_ticks < 1 {
            return Err(raw.invalid("duration_ticks", "must be >= 1"));
        }

        let noise_amplitude = raw.f64_or("wear.noise_amplitude", 0.0)?;
        let rng_seed = raw.u64_or("wear.rng_seed", 0)?;
        let wear = match raw.choice("wear.mode", None, &["constant", "piecewise"])? {
            "constant" => {
                raw.forbid("wear.breakpoints", "to wear.mode = constant")?;
                WearModel::constant(raw.f64("wear.rate")?)
            }
            _ => {
                raw.forbid("wear.rate", "to wear.mode = piecewise")?;
                WearModel::piecewise(parse_breakpoints(raw, "wear.breakpoints")?)
            }
        }
        .and_then(|w| w.with_noise(noise_amplitude, rng_seed))
        .map_err(|e| raw.model_err("wear", e))?;

        let transducer = TransducerModel::new(
            raw.f64("transducer.v_contact")?,
            raw.f64("transducer.sensitivity")?,
            raw.f64_or("transducer.v_floor", 0.0)?,
        )
        .map_err(|e| raw.model_err("transducer", e))?;

        let input = match raw.choice("input.source", Some("plant"), &["plant", "sine"])? {
            "plant" => {
                for k in ["input.sine_offset", "input.sine_amplitude", "input.sine_frequency"] {
                    raw.forbid(k, "to input.source = plant")?;
                }
                InputSource::Plant
            }
            _ => {
                let amplitude = raw.f64("input.sine_amplitude")?;
                if amplitude < 0.0 {
                    return Err(raw.invalid("input.sine_amplitude", "must be >= 0"));
                }
                let frequency = raw.f64("input.sine_frequency")?;
                if frequency < 0.0 {
                    return Err(raw.invalid("input.sine_frequency", "must be >= 0"));
                }
                InputSource::Sine {
                    offset: raw.f64("input.sine_offset")?,
                    amplitude,
                    frequency,
                }
            }
        };

        if raw.f64_or("adc.v_ref", adc::V_REF)? != adc::V_REF {
            return Err(raw.invalid("adc.v_ref", "the converter range is fixed at 5 V"));
        }
        if raw.u64_or("adc.bits", adc::BITS as u64)? != adc::BITS as u64 {
            return Err(raw.invalid("adc.bits", "the converter resolution is fixed at 8 bits"));
        }
        let adc = AdcConfig::new(raw.u64("adc.sample_period_ticks")?, raw.u64("adc.conversion_ticks")?)
            .map_err(|e| raw.model_err("adc", e))?;

        let link_timeout_ticks = raw.u64("link.timeout_ticks")?;
        if link_timeout_ticks < 1 {
            return Err(raw.invalid("link.timeout_ticks", "must be >= 1"));
        }

        let detector_source = match raw.choice("detector.source", Some("analog"), &["analog", "adc"])? {
            "analog" => DetectorSource::Analog,
            _ => DetectorSource::Adc,
        };
        let detector = DetectorConfig::new(
            raw.f64("detector.gain")?,
            raw.f64("detector.v_on")?,
            raw.f64("detector.v_off")?,
        )
        .map_err(|e| raw.model_err("detector", e))?;

        let chain = ActuatorChain::new(
            raw.u32("chain.teeth_per_pulse")?,
            raw.u32("chain.wheel_teeth")?,
            raw.u32("chain.worm_ratio")?,
            raw.f64("chain.screw_pitch")?,
        )
        .map_err(|e| raw.model_err("chain", e))?;

        let pulse =
            PulseGenerator::new(raw.f64("pulse.frequency")?, tick_seconds).map_err(|e| raw.model_err("pulse", e))?;

        let brake = BrakeState::new(
            raw.u64_or("brake.engage_delay_ticks", 0)?,
            raw.u64_or("brake.release_delay_ticks", 0)?,
        );

        Ok(Self {
            name,
            tick_seconds,
            duration_ticks,
            wear,
            transducer,
            input,
            adc,
            link_timeout_ticks,
            detector_source,
            detector,
            chain,
            pulse,
            brake,
        })
    }

    /// Canonical text form: every applicable key, in [`KEYS`] order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("name", &self.name);
        kv("tick_seconds", &self.tick_seconds);
        kv("duration_ticks", &self.duration_ticks);
        match self.wear.law() {
            WearLaw::Constant { rate } => {
                kv("wear.mode", &"constant");
                kv("wear.rate", rate);
            }
            WearLaw::Piecewise { breakpoints } => {
                kv("wear.mode", &"piecewise");
                let list: Vec<String> = breakpoints.iter().map(|(t, r)| format!("{t}:{r}")).collect();
                kv("wear.breakpoints", &list.join(", "));
            }
        }
        kv("wear.noise_amplitude", &self.wear.noise_amplitude());
        kv("wear.rng_seed", &self.wear.rng_seed());
        kv("transducer.v_contact", &self.transducer.v_contact());
        kv("transducer.sensitivity", &self.transducer.sensitivity());
        kv("transducer.v_floor", &self.transducer.v_floor());
        match self.input {
            InputSource::Plant => kv("input.source", &"plant"),
            InputSource::Sine {
                offset,
                amplitude,
                frequency,
            } => {
                kv("input.source", &"sine");
                kv("input.sine_offset", &offset);
                kv("input.sine_amplitude", &amplitude);
                kv("input.sine_frequency", &frequency);
            }
        }
        kv("adc.v_ref", &adc::V_REF);
        kv("adc.bits", &adc::BITS);
        kv("adc.sample_period_ticks", &self.adc.sample_period_ticks());
        kv("adc.conversion_ticks", &self.adc.conversion_ticks());
        kv("link.timeout_ticks", &self.link_timeout_ticks);
        kv(
            "detector.source",
            &match self.detector_source {
                DetectorSource::Analog => "analog",
                DetectorSource::Adc => "adc",
            },
        );
        kv("detector.gain", &self.detector.gain());
        kv("detector.v_on", &self.detector.v_on());
        kv("detector.v_off", &self.detector.v_off());
        kv("chain.teeth_per_pulse", &self.chain.teeth_per_pulse);
        kv("chain.wheel_teeth", &self.chain.wheel_teeth);
        kv("chain.worm_ratio", &self.chain.worm_ratio);
        kv("chain.screw_pitch", &self.chain.screw_pitch);
        kv("pulse.frequency", &self.pulse.frequency());
        kv("brake.engage_delay_ticks", &self.brake.engage_delay_ticks);
        kv("brake.release_delay_ticks", &self.brake.release_delay_ticks);
        s
    }
}
