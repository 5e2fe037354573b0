//! Bundled experiment configs.

use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy)]
pub struct Entry {
    pub id: &'static str,
    pub text: &'static str,
}

#[derive(Debug, Clone)]
pub struct Listing {
    pub id: &'static str,
    pub kind: String,
    pub figure: String,
    pub description: String,
}

macro_rules! bundled {
    ($($id:literal),* $(,)?) => {
        &[$(Entry { id: $id, text: include_str!(concat!("../configs/", $id, ".toml")) }),*]
    };
}

const ENTRIES: &[Entry] = bundled!(
    "fig2b", "figS1", "fig3b", "fig3c", "figS2c", "fig4a", "fig4b", "fig4c", "fig4d", "figS4", "stress",
);

pub fn entries() -> &'static [Entry] {
    ENTRIES
}

pub fn find(id: &str) -> Option<&'static Entry> {
    ENTRIES.iter().find(|e| e.id == id)
}

#[derive(Deserialize)]
struct Meta {
    kind: String,
    figure: Option<String>,
    description: Option<String>,
}

pub fn list() -> CliResult<Vec<Listing>> {
    ENTRIES
        .iter()
        .map(|e| {
            let m: Meta = toml::from_str(e.text).map_err(|err| CliError::schema(format!("{}: {err}", e.id)))?;
            Ok(Listing {
                id: e.id,
                kind: m.kind,
                figure: m.figure.unwrap_or_default(),
                description: m.description.unwrap_or_default(),
            })
        })
        .collect()
}
