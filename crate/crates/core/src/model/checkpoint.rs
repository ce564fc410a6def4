//! JSON checkpoints. Floats are written in shortest round-trip form, so a
//! save/load cycle reproduces every weight bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sgae::SgaeModel;
use crate::error::{Error, Result};

const FORMAT: &str = "sgad-checkpoint";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    model: SgaeModel,
}

pub fn checkpoint_to_string(model: &SgaeModel) -> Result<String> {
    let env = Envelope {
        format: FORMAT.to_owned(),
        version: VERSION,
        model: model.clone(),
    };
    serde_json::to_string_pretty(&env).map_err(|e| Error::Checkpoint(e.to_string()))
}

pub fn checkpoint_from_str(text: &str) -> Result<SgaeModel> {
    let env: Envelope = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
    if env.format != FORMAT {
        return Err(Error::Checkpoint(format!("unexpected format `{}`", env.format)));
    }
    if env.version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {}", env.version)));
    }
    // re-run the dimension contract on whatever was deserialised
    SgaeModel::from_parts(
        env.model.encoder().clone(),
        env.model.decoder().clone(),
        env.model.scorer().cloned(),
        *env.model.config(),
    )
}

pub fn save_checkpoint(model: &SgaeModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, checkpoint_to_string(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<SgaeModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_str(&text)
}
