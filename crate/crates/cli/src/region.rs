//! Region files for the no-reference metrics, in voxel coordinates:
//!
//! ```json
//! { "fg": { "origin": [x, y, z], "extent": [w, h, d] },
//!   "bg": { "origin": [x, y, z], "extent": [w, h, d] } }
//! ```
//! `bg` is optional; without it CNR is not reported.

use std::path::Path;

use quasi_core::Region;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionJson {
    origin: [usize; 3],
    extent: [usize; 3],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionFileJson {
    fg: RegionJson,
    bg: Option<RegionJson>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regions {
    pub fg: Region,
    pub bg: Option<Region>,
}

pub fn parse_regions(text: &str) -> Result<Regions, serde_json::Error> {
    let raw: RegionFileJson = serde_json::from_str(text)?;
    let conv = |r: RegionJson| Region::new(r.origin, r.extent);
    Ok(Regions {
        fg: conv(raw.fg),
        bg: raw.bg.map(conv),
    })
}

pub fn read_regions(path: &Path) -> CliResult<Regions> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_regions(&text).map_err(|e| CliError::Region {
        path: path.to_owned(),
        message: e.to_string(),
    })
}
