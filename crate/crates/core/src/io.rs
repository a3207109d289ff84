//! Instance files: versioned JSON with canonical forms checked on load.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::etnc::codescent::{Tower, TowerData};
use crate::etnc::{EtncData, EtncInstance};
use crate::gen::{generate_etnc, generate_selmer, generate_tower, GeneratorParams, Recipe};
use crate::howell::Howell;
use crate::module::{FPModule, ModuleData};
use crate::ring::RingHandle;
use crate::selmer::{SelmerData, SelmerInstance};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarkData {
    pub selmer: SelmerData,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<String>,
    pub depth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "lowercase")]
pub enum Payload {
    Ring(RingHandle),
    Module(ModuleData),
    Selmer(SelmerData),
    Stark(StarkData),
    Etnc(EtncData),
    Tower(TowerData),
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Ring(_) => "ring",
            Payload::Module(_) => "module",
            Payload::Selmer(_) => "selmer",
            Payload::Stark(_) => "stark",
            Payload::Etnc(_) => "etnc",
            Payload::Tower(_) => "tower",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub schema_version: u32,
    #[serde(flatten)]
    pub body: Payload,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

impl InstanceFile {
    pub fn new(body: Payload) -> Self {
        InstanceFile {
            schema_version: SCHEMA_VERSION,
            body,
            provenance: None,
        }
    }

    pub fn with_provenance(mut self, note: impl Into<String>) -> Self {
        self.provenance = Some(note.into());
        self
    }
}

fn check_selmer(data: &SelmerData) -> Result<SelmerInstance> {
    let inst = SelmerInstance::new(data.clone())?;
    let report = inst.validate();
    for name in ["reduction_commutes", "dual_global_matches"] {
        if let Some(c) = report.checks.iter().find(|c| c.name == name && !c.passed) {
            return Err(Error::Tamper(format!("{name}: {}", c.detail)));
        }
    }
    let top = inst.level(inst.m());
    let canon: Howell = top.dual_global();
    if canon.rows() != data.dual_global.as_slice() {
        return Err(Error::Tamper("dual global module is not in normal form".into()));
    }
    Ok(inst)
}

/// Recomputes every canonical form stored in the payload.
pub fn verify(file: &InstanceFile) -> Result<()> {
    if file.schema_version != SCHEMA_VERSION {
        return Err(Error::Schema(format!(
            "schema version {} (supported: {SCHEMA_VERSION})",
            file.schema_version
        )));
    }
    match &file.body {
        Payload::Ring(_) => Ok(()),
        Payload::Module(m) => {
            if m.normal_form.is_none() {
                return Err(Error::Tamper("module without its normal form".into()));
            }
            FPModule::from_data(m).map(|_| ())
        }
        Payload::Selmer(s) => check_selmer(s).map(|_| ()),
        Payload::Stark(s) => check_selmer(&s.selmer).map(|_| ()),
        Payload::Etnc(e) => {
            if e.h2.normal_form.is_none() {
                return Err(Error::Tamper("H^2 without its normal form".into()));
            }
            EtncInstance::new(e.clone()).map(|_| ())
        }
        Payload::Tower(t) => {
            if t.source.normal_form.is_none() {
                return Err(Error::Tamper("source module without its normal form".into()));
            }
            Tower::new(t).map(|_| ())
        }
    }
}

/// Runs the recipe named in `params` and wraps the result.
pub fn generate(params: &GeneratorParams) -> Result<InstanceFile> {
    let body = match params.recipe {
        Recipe::EtncBasic => Payload::Etnc(generate_etnc(params)?),
        Recipe::Tower => Payload::Tower(generate_tower(params)?),
        _ => Payload::Selmer(generate_selmer(params)?),
    };
    Ok(InstanceFile::new(body).with_provenance(format!(
        "generated: recipe {} seed {} p {} m {} group {:?}",
        params.recipe.tag(),
        params.seed,
        params.p,
        params.m,
        params.group
    )))
}

/// Parses and verifies.
pub fn parse(text: &str) -> Result<InstanceFile> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => {
            return Err(Error::Schema(format!(
                "schema version {v} (supported: {SCHEMA_VERSION})"
            )))
        }
        None => return Err(Error::Schema("missing schema_version".into())),
    }
    let file: InstanceFile = serde_json::from_value(value).map_err(|e| Error::Schema(e.to_string()))?;
    verify(&file)?;
    Ok(file)
}

/// Canonical text: pretty JSON with a trailing newline.
pub fn to_text(file: &InstanceFile) -> String {
    let mut s = serde_json::to_string_pretty(file).expect("instance files serialize");
    s.push('\n');
    s
}

pub fn load(path: &Path) -> Result<InstanceFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    parse(&text)
}

pub fn store(path: &Path, file: &InstanceFile) -> Result<()> {
    std::fs::write(path, to_text(file)).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn module_round_trip_and_tamper() {
        let ring = RingHandle::build(3, 2, 1, &[3]).unwrap();
        let m = FPModule::cyclic(&ring, &ring.scalar(3));
        let text = to_text(&InstanceFile::new(Payload::Module(m.to_data())));
        assert_eq!(to_text(&parse(&text).unwrap()), text);
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["payload"]["relations"][0][0][0] = 1.into();
        assert!(matches!(parse(&v.to_string()), Err(Error::Tamper(_))));
        let wrong = text.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(matches!(parse(&wrong), Err(Error::Schema(_))));
    }
}
