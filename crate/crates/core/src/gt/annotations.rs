//! Annotation readers: CTW1500-style text lines and the native JSON form.

use serde::{Deserialize, Serialize};

use super::Polygon;
use crate::error::{Error, Result};

/// Native annotation document:
/// `{"polygons": [{"points": [[x,y],…], "ignore": bool}], "width": W, "height": H}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub polygons: Vec<Polygon<f32>>,
    pub width: usize,
    pub height: usize,
}

impl Annotation {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// One polygon per non-empty line: comma-separated integer `x,y` pairs,
/// optionally followed by a `###` token marking a do-not-care region.
pub fn parse_ctw_lines(text: &str) -> Result<Vec<Polygon<f32>>> {
    let mut polys = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim().trim_start_matches('\u{feff}');
        if line.is_empty() {
            continue;
        }
        let mut tokens: Vec<&str> = line.split(',').map(str::trim).collect();
        let ignore = tokens.last() == Some(&"###");
        if ignore {
            tokens.pop();
        }
        let coords = tokens
            .iter()
            .map(|t| t.parse::<i64>().map(|v| v as f32))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
        if coords.len() < 6 || coords.len() % 2 != 0 {
            return Err(Error::Format(format!(
                "line {}: {} coordinates, need an even count ≥ 6",
                lineno + 1,
                coords.len()
            )));
        }
        let points = coords.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        polys.push(
            Polygon::new(points, ignore).map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?,
        );
    }
    Ok(polys)
}
