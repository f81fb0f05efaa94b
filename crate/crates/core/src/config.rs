//! Flat `key = value` run configuration. Blank lines and `#` comments are
//! ignored; unknown keys are rejected.

use std::path::Path;

use crate::phy::{EnergyModel, MacParams, RadioParams};
use crate::protocols::ProtocolParams;
use crate::routing::FrameSizes;
use crate::scenario::{Layout, ScenarioKind};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("bad value `{value}` for `{key}`: {reason}")]
    BadValue { key: String, value: String, reason: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Sink motion settings for the dynamic scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityParams {
    /// Circle radius as a fraction of the deployment side.
    pub radius_fraction: f64,
    pub update_period: f64,
    /// Re-bind the sink role to the node nearest the moving point
    /// instead of moving the sink node itself.
    pub node_attached: bool,
}

impl Default for MobilityParams {
    fn default() -> Self {
        Self {
            radius_fraction: 0.25,
            update_period: 1.0,
            node_attached: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub nodes: usize,
    pub layout: Layout,
    pub scenario: ScenarioKind,
    /// Battery per node; `None` picks the scenario default (30 J static, 60 J dynamic).
    pub initial_energy: Option<f64>,
    pub duration: f64,
    /// Data events per second per source.
    pub traffic_rate: f64,
    /// Relative spread of inter-event gaps.
    pub traffic_jitter: f64,
    pub protocol: String,
    pub seed: u64,
    pub grid_spacing: f64,
    pub max_topology_attempts: u32,
    pub sample_period: f64,
    pub radio: RadioParams,
    pub mac: MacParams,
    pub energy: EnergyModel,
    pub frames: FrameSizes,
    pub routing: ProtocolParams,
    pub mobility: MobilityParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            nodes: 49,
            layout: Layout::RandomSquare,
            scenario: ScenarioKind::Static,
            initial_energy: None,
            duration: 100.0,
            traffic_rate: 0.1,
            traffic_jitter: 0.5,
            protocol: "IEEABR".to_string(),
            seed: 1,
            grid_spacing: 20.0,
            max_topology_attempts: 1000,
            sample_period: 1.0,
            radio: RadioParams::default(),
            mac: MacParams::default(),
            energy: EnergyModel::default(),
            frames: FrameSizes::default(),
            routing: ProtocolParams::default(),
            mobility: MobilityParams::default(),
        }
    }
}

/// Every accepted key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("nodes", "number of nodes including the sink"),
    ("layout", "grid | random-square"),
    ("scenario", "static | dynamic (moving sink)"),
    ("initial_energy", "battery per node in J (default 30 static, 60 dynamic)"),
    ("duration", "simulated seconds"),
    ("traffic_rate", "data events per second per source"),
    ("traffic_jitter", "relative spread of inter-event gaps, in [0, 1)"),
    ("protocol", "BABR | SC | FF | FP | EEABR | IEEABR"),
    ("seed", "base seed for all random streams"),
    ("grid_spacing", "grid pitch in m"),
    ("max_topology_attempts", "random placements tried before giving up"),
    ("sample_period", "timeline sampling period in s"),
    ("radio.p_transmit", "transmit signal power"),
    ("radio.gamma", "distance decay exponent, in [2, 4]"),
    ("radio.sigma_alpha", "std-dev of multiplicative disturbance"),
    ("radio.sigma_beta", "std-dev of additive disturbance"),
    ("radio.rx_threshold", "reception threshold; `auto` derives it from tx_radius"),
    ("radio.tx_radius", "nominal radius in m for neighbor lists"),
    ("radio.cs_range", "carrier-sense range in m"),
    ("mac.bitrate", "bits per second"),
    ("mac.contention_window", "initial back-off window in slot-times"),
    ("mac.max_retries", "busy-channel retries before dropping a frame"),
    ("mac.queue_capacity", "frames per transmit queue"),
    ("energy.tx_per_bit", "J per transmitted bit"),
    ("energy.rx_per_bit", "J per received bit"),
    ("energy.idle_per_second", "J per second of idle drain"),
    ("frame.ant_bytes", "ant header size"),
    ("frame.data_bytes", "data payload size"),
    ("frame.entry_bytes", "bytes per remembered node in an ant"),
    ("routing.eta", "trip-model learning weight"),
    ("routing.window", "trip-time observation window"),
    ("routing.confidence", "confidence level for the trip-time bound"),
    ("routing.cache_timeout", "ant-cache record lifetime in s"),
    ("routing.ant_interval", "forward-ant launch period in s"),
    ("routing.flood_delay", "max random rebroadcast delay in s"),
    ("protocol.c1", "reinforcement weight of the best-trip term"),
    ("protocol.c2", "reinforcement weight of the confidence term"),
    ("protocol.alpha", "pheromone exponent in next-hop selection"),
    ("protocol.beta", "visibility exponent in next-hop selection"),
    ("protocol.rho", "evaporation coefficient"),
    ("protocol.phi", "deposit attenuation coefficient"),
    ("protocol.sc_beta", "sharpness of the distance-sensed initial table"),
    ("protocol.delta_tau_max", "cap on a single pheromone deposit"),
    ("protocol.epsilon_fraction", "visibility floor as a fraction of initial energy"),
    ("protocol.ant_cap_multiplier", "live forward ants allowed per node"),
    ("mobility.radius_fraction", "sink circle radius as a fraction of the side"),
    ("mobility.update_period", "sink position update period in s"),
    ("mobility.node_attached", "bind the sink role to the nearest node (true/false)"),
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

/// Split text into `(line, key, value)` triples.
pub fn parse_pairs(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            });
        }
        out.push((i + 1, k.to_string(), v.to_string()));
    }
    Ok(out)
}

impl SimConfig {
    pub fn is_key(key: &str) -> bool {
        KEYS.iter().any(|(k, _)| *k == key)
    }

    /// Set one key. Returns `Ok(false)` if the key is unknown.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool, ConfigError> {
        let bad = |reason: &str| ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            reason: reason.to_string(),
        };
        match key {
            "nodes" => self.nodes = parse(key, value)?,
            "layout" => self.layout = value.parse().map_err(|e: crate::scenario::ScenarioError| bad(&e.to_string()))?,
            "scenario" => {
                self.scenario = value.parse().map_err(|e: crate::scenario::ScenarioError| bad(&e.to_string()))?
            }
            "initial_energy" => {
                self.initial_energy = if value == "auto" { None } else { Some(parse(key, value)?) }
            }
            "duration" => self.duration = parse(key, value)?,
            "traffic_rate" => self.traffic_rate = parse(key, value)?,
            "traffic_jitter" => self.traffic_jitter = parse(key, value)?,
            "protocol" => self.protocol = value.to_ascii_uppercase(),
            "seed" => self.seed = parse(key, value)?,
            "grid_spacing" => self.grid_spacing = parse(key, value)?,
            "max_topology_attempts" => self.max_topology_attempts = parse(key, value)?,
            "sample_period" => self.sample_period = parse(key, value)?,
            "radio.p_transmit" => self.radio.p_transmit = parse(key, value)?,
            "radio.gamma" => self.radio.gamma = parse(key, value)?,
            "radio.sigma_alpha" => self.radio.sigma_alpha = parse(key, value)?,
            "radio.sigma_beta" => self.radio.sigma_beta = parse(key, value)?,
            "radio.rx_threshold" => {
                self.radio.rx_threshold = if value == "auto" { None } else { Some(parse(key, value)?) }
            }
            "radio.tx_radius" => self.radio.tx_radius = parse(key, value)?,
            "radio.cs_range" => self.radio.cs_range = parse(key, value)?,
            "mac.bitrate" => self.mac.bitrate = parse(key, value)?,
            "mac.contention_window" => self.mac.contention_window = parse(key, value)?,
            "mac.max_retries" => self.mac.max_retries = parse(key, value)?,
            "mac.queue_capacity" => self.mac.queue_capacity = parse(key, value)?,
            "energy.tx_per_bit" => self.energy.tx_per_bit = parse(key, value)?,
            "energy.rx_per_bit" => self.energy.rx_per_bit = parse(key, value)?,
            "energy.idle_per_second" => self.energy.idle_per_second = parse(key, value)?,
            "frame.ant_bytes" => self.frames.ant_bytes = parse(key, value)?,
            "frame.data_bytes" => self.frames.data_bytes = parse(key, value)?,
            "frame.entry_bytes" => self.frames.entry_bytes = parse(key, value)?,
            "routing.eta" => self.routing.eta = parse(key, value)?,
            "routing.window" => self.routing.window = parse(key, value)?,
            "routing.confidence" => self.routing.confidence = parse(key, value)?,
            "routing.cache_timeout" => self.routing.cache_timeout = parse(key, value)?,
            "routing.ant_interval" => self.routing.ant_interval = parse(key, value)?,
            "routing.flood_delay" => self.routing.flood_delay = parse(key, value)?,
            "protocol.c1" => self.routing.c1 = parse(key, value)?,
            "protocol.c2" => self.routing.c2 = parse(key, value)?,
            "protocol.alpha" => self.routing.alpha = parse(key, value)?,
            "protocol.beta" => self.routing.beta = parse(key, value)?,
            "protocol.rho" => self.routing.rho = parse(key, value)?,
            "protocol.phi" => self.routing.phi = parse(key, value)?,
            "protocol.sc_beta" => self.routing.sc_beta = parse(key, value)?,
            "protocol.delta_tau_max" => self.routing.delta_tau_max = parse(key, value)?,
            "protocol.epsilon_fraction" => self.routing.epsilon_fraction = parse(key, value)?,
            "protocol.ant_cap_multiplier" => self.routing.ant_cap_multiplier = parse(key, value)?,
            "mobility.radius_fraction" => self.mobility.radius_fraction = parse(key, value)?,
            "mobility.update_period" => self.mobility.update_period = parse(key, value)?,
            "mobility.node_attached" => self.mobility.node_attached = parse(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Current value of a key, formatted as it would be written.
    pub fn get(&self, key: &str) -> Option<String> {
        let opt = |v: Option<f64>| v.map_or_else(|| "auto".to_string(), |x| x.to_string());
        Some(match key {
            "nodes" => self.nodes.to_string(),
            "layout" => self.layout.to_string(),
            "scenario" => self.scenario.to_string(),
            "initial_energy" => opt(self.initial_energy),
            "duration" => self.duration.to_string(),
            "traffic_rate" => self.traffic_rate.to_string(),
            "traffic_jitter" => self.traffic_jitter.to_string(),
            "protocol" => self.protocol.clone(),
            "seed" => self.seed.to_string(),
            "grid_spacing" => self.grid_spacing.to_string(),
            "max_topology_attempts" => self.max_topology_attempts.to_string(),
            "sample_period" => self.sample_period.to_string(),
            "radio.p_transmit" => self.radio.p_transmit.to_string(),
            "radio.gamma" => self.radio.gamma.to_string(),
            "radio.sigma_alpha" => self.radio.sigma_alpha.to_string(),
            "radio.sigma_beta" => self.radio.sigma_beta.to_string(),
            "radio.rx_threshold" => opt(self.radio.rx_threshold),
            "radio.tx_radius" => self.radio.tx_radius.to_string(),
            "radio.cs_range" => self.radio.cs_range.to_string(),
            "mac.bitrate" => self.mac.bitrate.to_string(),
            "mac.contention_window" => self.mac.contention_window.to_string(),
            "mac.max_retries" => self.mac.max_retries.to_string(),
            "mac.queue_capacity" => self.mac.queue_capacity.to_string(),
            "energy.tx_per_bit" => self.energy.tx_per_bit.to_string(),
            "energy.rx_per_bit" => self.energy.rx_per_bit.to_string(),
            "energy.idle_per_second" => self.energy.idle_per_second.to_string(),
            "frame.ant_bytes" => self.frames.ant_bytes.to_string(),
            "frame.data_bytes" => self.frames.data_bytes.to_string(),
            "frame.entry_bytes" => self.frames.entry_bytes.to_string(),
            "routing.eta" => self.routing.eta.to_string(),
            "routing.window" => self.routing.window.to_string(),
            "routing.confidence" => self.routing.confidence.to_string(),
            "routing.cache_timeout" => self.routing.cache_timeout.to_string(),
            "routing.ant_interval" => self.routing.ant_interval.to_string(),
            "routing.flood_delay" => self.routing.flood_delay.to_string(),
            "protocol.c1" => self.routing.c1.to_string(),
            "protocol.c2" => self.routing.c2.to_string(),
            "protocol.alpha" => self.routing.alpha.to_string(),
            "protocol.beta" => self.routing.beta.to_string(),
            "protocol.rho" => self.routing.rho.to_string(),
            "protocol.phi" => self.routing.phi.to_string(),
            "protocol.sc_beta" => self.routing.sc_beta.to_string(),
            "protocol.delta_tau_max" => self.routing.delta_tau_max.to_string(),
            "protocol.epsilon_fraction" => self.routing.epsilon_fraction.to_string(),
            "protocol.ant_cap_multiplier" => self.routing.ant_cap_multiplier.to_string(),
            "mobility.radius_fraction" => self.mobility.radius_fraction.to_string(),
            "mobility.update_period" => self.mobility.update_period.to_string(),
            "mobility.node_attached" => self.mobility.node_attached.to_string(),
            _ => return None,
        })
    }

    /// Apply `key = value` text on top of `self`.
    pub fn apply_str(&mut self, text: &str) -> Result<(), ConfigError> {
        for (line, key, value) in parse_pairs(text)? {
            if !self.set(&key, &value)? {
                return Err(ConfigError::UnknownKey { line, key });
            }
        }
        Ok(())
    }

    pub fn from_str_validated(text: &str) -> Result<Self, ConfigError> {
        let mut c = Self::default();
        c.apply_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_str_validated(&text)
    }

    /// Every key with its current value and description, as a config file.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (key, doc) in KEYS {
            let value = self.get(key).expect("documented key");
            out.push_str(&format!("# {doc}\n{key} = {value}\n"));
        }
        out
    }

    pub fn effective_energy(&self) -> f64 {
        self.initial_energy.unwrap_or_else(|| self.scenario.default_energy())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.nodes < 2 {
            return invalid(format!("nodes must be at least 2, got {}", self.nodes));
        }
        if self.layout == Layout::Grid {
            let s = (self.nodes as f64).sqrt().round() as usize;
            if s * s != self.nodes {
                return invalid(format!("grid layout needs a perfect square, got {}", self.nodes));
            }
        }
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return invalid("duration must be positive".into());
        }
        if !(self.effective_energy() > 0.0) {
            return invalid("initial_energy must be positive".into());
        }
        if !(self.traffic_rate > 0.0) {
            return invalid("traffic_rate must be positive".into());
        }
        if !(0.0..1.0).contains(&self.traffic_jitter) {
            return invalid("traffic_jitter must lie in [0, 1)".into());
        }
        if !(self.grid_spacing > 0.0) || !(self.sample_period > 0.0) {
            return invalid("grid_spacing and sample_period must be positive".into());
        }
        if self.max_topology_attempts == 0 {
            return invalid("max_topology_attempts must be at least 1".into());
        }
        if self.frames.ant_bytes == 0 || self.frames.data_bytes == 0 {
            return invalid("frame sizes must be positive".into());
        }
        if !(self.mobility.radius_fraction >= 0.0) || !(self.mobility.update_period > 0.0) {
            return invalid("mobility parameters out of range".into());
        }
        self.radio.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.mac.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.energy.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.routing.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }
}
