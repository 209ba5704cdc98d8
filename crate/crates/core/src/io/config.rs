//! Run configuration: a single TOML document.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chain::ChainSpec;
use crate::er_unitary::Ordering;
use crate::error::{Error, Result};
use crate::evolution::DEFAULT_TIME;
use crate::operations::{LinCombTargets, OperationSpec, ZeroVariant, DEFAULT_SYSTEM};
use crate::optimizer::SearchConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperationConfig {
    /// restore, zero1, zero2, zero3, rearrange, lincomb or linsys.
    pub name: String,
    /// System matrix for `linsys`.
    pub system: [[f64; 2]; 2],
    /// Custom ratios for `lincomb`; the truncated exponential series when absent.
    pub lincomb: Option<LinCombTargets>,
}

impl Default for OperationConfig {
    fn default() -> Self {
        Self { name: "restore".into(), system: DEFAULT_SYSTEM, lincomb: None }
    }
}

impl OperationConfig {
    pub fn named(name: &str) -> Self {
        Self { name: name.into(), ..Default::default() }
    }

    pub fn to_spec(&self) -> Result<OperationSpec> {
        let spec = match self.name.as_str() {
            "restore" => OperationSpec::Restore,
            "zero1" => OperationSpec::ZeroTriplet(ZeroVariant::First),
            "zero2" => OperationSpec::ZeroTriplet(ZeroVariant::Second),
            "zero3" => OperationSpec::ZeroTriplet(ZeroVariant::Third),
            "rearrange" => OperationSpec::Rearrange,
            "lincomb" => OperationSpec::LinComb(self.lincomb.unwrap_or_default()),
            "linsys" => OperationSpec::LinSys(self.system),
            other => {
                return Err(Error::Format(format!(
                    "operation.name: unknown operation {other:?} (expected restore, zero1, zero2, zero3, rearrange, lincomb or linsys)"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoConfig {
    /// Angle table to read.
    pub phi: Option<PathBuf>,
    /// Angle table to write (optimize).
    pub out: Option<PathBuf>,
    /// JSON report destination; stdout when absent.
    pub report: Option<PathBuf>,
    /// Directory holding the published angle tables; the bundled copies when absent.
    pub table_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Evolution time in units of the inverse bulk coupling.
    pub time: f64,
    pub ordering: Ordering,
    pub chain: ChainSpec,
    pub operation: OperationConfig,
    pub search: SearchConfig,
    pub io: IoConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            time: DEFAULT_TIME,
            ordering: Ordering::Canonical,
            chain: ChainSpec::default(),
            operation: OperationConfig::default(),
            search: SearchConfig::default(),
            io: IoConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Format(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read a config file; relative `io` paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Format(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.io.phi, &mut cfg.io.out, &mut cfg.io.report, &mut cfg.io.table_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.time.is_finite() || self.time < 0.0 {
            return Err(Error::Parameter(format!("time = {} must be finite and non-negative", self.time)));
        }
        self.chain.validate()?;
        self.search.validate()?;
        self.operation.to_spec()?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn digest(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
