//! Twelve-dimensional command-level action space and its token codec.
//!
//! Eleven continuous dimensions are quantized into uniform bins (floor to bin,
//! reconstruct at the bin center). The terminate flag is a separate binary
//! token in the twelfth position.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of continuous dimensions in a command.
pub const CONTINUOUS_DIMS: usize = 11;
/// Total token positions: continuous dimensions plus terminate.
pub const TOKEN_COUNT: usize = CONTINUOUS_DIMS + 1;
/// Integers up to this value each map to a single vocabulary token.
pub const MAX_TOKEN_ID: u32 = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("dimension `{dim}` has non-finite value {value}")]
    NonFinite { dim: &'static str, value: f64 },
    #[error("token {token} for dimension `{dim}` is outside [{lo}, {hi}]")]
    TokenOutOfRange {
        dim: &'static str,
        token: u32,
        lo: u32,
        hi: u32,
    },
    #[error("expected {TOKEN_COUNT} tokens, got {0}")]
    WrongLength(usize),
    #[error("invalid action space: {0}")]
    InvalidSpec(String),
}

/// The eleven continuous dimensions, in wire order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionDim {
    VelX,
    VelY,
    YawRate,
    Phase1,
    Phase2,
    Phase3,
    Frequency,
    BodyHeight,
    Pitch,
    FootWidth,
    FootHeight,
}

impl ActionDim {
    pub const ALL: [ActionDim; CONTINUOUS_DIMS] = [
        ActionDim::VelX,
        ActionDim::VelY,
        ActionDim::YawRate,
        ActionDim::Phase1,
        ActionDim::Phase2,
        ActionDim::Phase3,
        ActionDim::Frequency,
        ActionDim::BodyHeight,
        ActionDim::Pitch,
        ActionDim::FootWidth,
        ActionDim::FootHeight,
    ];

    /// Config-file key for this dimension.
    pub fn name(self) -> &'static str {
        match self {
            ActionDim::VelX => "v_x",
            ActionDim::VelY => "v_y",
            ActionDim::YawRate => "omega_z",
            ActionDim::Phase1 => "theta_1",
            ActionDim::Phase2 => "theta_2",
            ActionDim::Phase3 => "theta_3",
            ActionDim::Frequency => "f",
            ActionDim::BodyHeight => "h_z",
            ActionDim::Pitch => "phi",
            ActionDim::FootWidth => "s_y",
            ActionDim::FootHeight => "h_z_f",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_name(name: &str) -> Option<ActionDim> {
        Self::ALL.iter().copied().find(|d| d.name() == name)
    }

    /// Gait phase offsets are cyclic in [0, 1).
    pub fn is_cyclic(self) -> bool {
        matches!(self, ActionDim::Phase1 | ActionDim::Phase2 | ActionDim::Phase3)
    }
}

impl fmt::Display for ActionDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A continuous command plus terminate flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionCommand {
    pub v_x: f64,
    pub v_y: f64,
    pub omega_z: f64,
    pub theta_1: f64,
    pub theta_2: f64,
    pub theta_3: f64,
    pub f: f64,
    pub h_z: f64,
    pub phi: f64,
    pub s_y: f64,
    pub h_z_f: f64,
    pub t: bool,
}

impl ActionCommand {
    pub fn from_values(values: [f64; CONTINUOUS_DIMS], terminate: bool) -> Self {
        let [v_x, v_y, omega_z, theta_1, theta_2, theta_3, f, h_z, phi, s_y, h_z_f] = values;
        ActionCommand {
            v_x,
            v_y,
            omega_z,
            theta_1,
            theta_2,
            theta_3,
            f,
            h_z,
            phi,
            s_y,
            h_z_f,
            t: terminate,
        }
    }

    pub fn values(&self) -> [f64; CONTINUOUS_DIMS] {
        [
            self.v_x,
            self.v_y,
            self.omega_z,
            self.theta_1,
            self.theta_2,
            self.theta_3,
            self.f,
            self.h_z,
            self.phi,
            self.s_y,
            self.h_z_f,
        ]
    }

    pub fn get(&self, dim: ActionDim) -> f64 {
        self.values()[dim.index()]
    }

    pub fn set(&mut self, dim: ActionDim, value: f64) {
        let mut v = self.values();
        v[dim.index()] = value;
        *self = ActionCommand::from_values(v, self.t);
    }

    fn check_finite(&self) -> Result<(), CodecError> {
        for dim in ActionDim::ALL {
            let value = self.get(dim);
            if !value.is_finite() {
                return Err(CodecError::NonFinite { dim: dim.name(), value });
            }
        }
        Ok(())
    }
}

/// Twelve token ids: eleven bin tokens then the terminate token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionTokens(pub [u32; TOKEN_COUNT]);

impl ActionTokens {
    pub fn from_slice(tokens: &[u32]) -> Result<Self, CodecError> {
        let arr: [u32; TOKEN_COUNT] = tokens.try_into().map_err(|_| CodecError::WrongLength(tokens.len()))?;
        Ok(ActionTokens(arr))
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn terminate_token(&self) -> u32 {
        self.0[CONTINUOUS_DIMS]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimRange {
    pub min: f64,
    pub max: f64,
    #[serde(default)]
    pub unit: String,
}

impl DimRange {
    pub fn new(min: f64, max: f64, unit: &str) -> Self {
        DimRange {
            min,
            max,
            unit: unit.to_string(),
        }
    }
}

/// Per-dimension ranges, bin count and vocabulary offset.
///
/// Serialized as a table keyed by dimension name:
///
/// ```toml
/// bin_count = 256
/// token_offset = 0
/// [dims.v_x]
/// min = -1.0
/// max = 1.0
/// unit = "m/s"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ActionSpaceFile", into = "ActionSpaceFile")]
pub struct ActionSpaceSpec {
    dims: [DimRange; CONTINUOUS_DIMS],
    bin_count: u32,
    token_offset: u32,
}

#[derive(Serialize, Deserialize)]
struct ActionSpaceFile {
    bin_count: u32,
    #[serde(default)]
    token_offset: u32,
    dims: BTreeMap<String, DimRange>,
}

impl TryFrom<ActionSpaceFile> for ActionSpaceSpec {
    type Error = CodecError;

    fn try_from(file: ActionSpaceFile) -> Result<Self, Self::Error> {
        for key in file.dims.keys() {
            if ActionDim::from_name(key).is_none() {
                return Err(CodecError::InvalidSpec(format!("unknown dimension `{key}`")));
            }
        }
        let mut dims = Vec::with_capacity(CONTINUOUS_DIMS);
        for dim in ActionDim::ALL {
            let range = file
                .dims
                .get(dim.name())
                .ok_or_else(|| CodecError::InvalidSpec(format!("missing dimension `{dim}`")))?;
            dims.push(range.clone());
        }
        let dims: [DimRange; CONTINUOUS_DIMS] = dims.try_into().expect("eleven dimensions");
        ActionSpaceSpec::new(dims, file.bin_count, file.token_offset)
    }
}

impl From<ActionSpaceSpec> for ActionSpaceFile {
    fn from(spec: ActionSpaceSpec) -> Self {
        let dims = ActionDim::ALL
            .iter()
            .map(|d| (d.name().to_string(), spec.dims[d.index()].clone()))
            .collect();
        ActionSpaceFile {
            bin_count: spec.bin_count,
            token_offset: spec.token_offset,
            dims,
        }
    }
}

impl Default for ActionSpaceSpec {
    fn default() -> Self {
        let dims = [
            DimRange::new(-1.0, 1.0, "m/s"),
            DimRange::new(-0.6, 0.6, "m/s"),
            DimRange::new(-1.0, 1.0, "rad/s"),
            DimRange::new(0.0, 1.0, "cycle"),
            DimRange::new(0.0, 1.0, "cycle"),
            DimRange::new(0.0, 1.0, "cycle"),
            DimRange::new(1.5, 4.0, "Hz"),
            DimRange::new(0.10, 0.35, "m"),
            DimRange::new(-0.4, 0.4, "rad"),
            DimRange::new(0.0, 0.45, "m"),
            DimRange::new(0.03, 0.25, "m"),
        ];
        ActionSpaceSpec::new(dims, 256, 0).expect("default action space is valid")
    }
}

impl ActionSpaceSpec {
    pub fn new(dims: [DimRange; CONTINUOUS_DIMS], bin_count: u32, token_offset: u32) -> Result<Self, CodecError> {
        if bin_count < 2 {
            return Err(CodecError::InvalidSpec(format!(
                "bin_count must be at least 2, got {bin_count}"
            )));
        }
        if token_offset as u64 + bin_count as u64 > MAX_TOKEN_ID as u64 {
            return Err(CodecError::InvalidSpec(format!(
                "token_offset + bin_count = {} exceeds {MAX_TOKEN_ID}",
                token_offset as u64 + bin_count as u64
            )));
        }
        for (dim, range) in ActionDim::ALL.iter().zip(&dims) {
            if !(range.min.is_finite() && range.max.is_finite()) || range.min >= range.max {
                return Err(CodecError::InvalidSpec(format!(
                    "dimension `{dim}` needs finite min < max, got [{}, {}]",
                    range.min, range.max
                )));
            }
        }
        Ok(ActionSpaceSpec {
            dims,
            bin_count,
            token_offset,
        })
    }

    pub fn with_bins(mut self, bin_count: u32, token_offset: u32) -> Result<Self, CodecError> {
        self.bin_count = bin_count;
        self.token_offset = token_offset;
        ActionSpaceSpec::new(self.dims, bin_count, token_offset)
    }

    pub fn range(&self, dim: ActionDim) -> &DimRange {
        &self.dims[dim.index()]
    }

    pub fn bin_count(&self) -> u32 {
        self.bin_count
    }

    pub fn token_offset(&self) -> u32 {
        self.token_offset
    }

    /// Width of one bin along `dim`.
    pub fn bin_width(&self, dim: ActionDim) -> f64 {
        let r = self.range(dim);
        (r.max - r.min) / self.bin_count as f64
    }

    /// Bin index for a single value, clamped into `[0, bin_count - 1]`.
    pub fn bin_index(&self, dim: ActionDim, value: f64) -> u32 {
        let r = self.range(dim);
        let raw = ((value - r.min) / self.bin_width(dim)).floor();
        raw.clamp(0.0, (self.bin_count - 1) as f64) as u32
    }

    pub fn bin_center(&self, dim: ActionDim, bin: u32) -> f64 {
        self.range(dim).min + (bin as f64 + 0.5) * self.bin_width(dim)
    }

    pub fn tokenize(&self, action: &ActionCommand) -> Result<ActionTokens, CodecError> {
        action.check_finite()?;
        let mut tokens = [0u32; TOKEN_COUNT];
        for dim in ActionDim::ALL {
            tokens[dim.index()] = self.token_offset + self.bin_index(dim, action.get(dim));
        }
        tokens[CONTINUOUS_DIMS] = self.token_offset + u32::from(action.t);
        Ok(ActionTokens(tokens))
    }

    pub fn detokenize(&self, tokens: &ActionTokens) -> Result<ActionCommand, CodecError> {
        let lo = self.token_offset;
        let hi = self.token_offset + self.bin_count - 1;
        let mut values = [0.0; CONTINUOUS_DIMS];
        for dim in ActionDim::ALL {
            let token = tokens.0[dim.index()];
            if token < lo || token > hi {
                return Err(CodecError::TokenOutOfRange {
                    dim: dim.name(),
                    token,
                    lo,
                    hi,
                });
            }
            values[dim.index()] = self.bin_center(dim, token - lo);
        }
        let term = tokens.terminate_token();
        if term < lo || term > lo + 1 {
            return Err(CodecError::TokenOutOfRange {
                dim: "t",
                token: term,
                lo,
                hi: lo + 1,
            });
        }
        Ok(ActionCommand::from_values(values, term == lo + 1))
    }

    /// Wraps gait phases modulo 1 and clamps every dimension into range.
    pub fn clamp(&self, action: &ActionCommand) -> Result<ActionCommand, CodecError> {
        action.check_finite()?;
        let mut values = action.values();
        for dim in ActionDim::ALL {
            let r = self.range(dim);
            let mut v = values[dim.index()];
            if dim.is_cyclic() {
                v = v.rem_euclid(1.0);
                if v >= 1.0 {
                    v = 0.0;
                }
            }
            values[dim.index()] = v.clamp(r.min, r.max);
        }
        Ok(ActionCommand::from_values(values, action.t))
    }

    /// Largest token id this space can emit.
    pub fn max_token(&self) -> u32 {
        self.token_offset + self.bin_count - 1
    }
}
