//! Floorplan geometry: block layout parsing and adjacency queries.
//!
//! Floorplan files are plain text with one block per line in the field
//! order `name width height left-x bottom-y` (meters). Lines starting
//! with `#` and blank lines are ignored. Block order in the file defines
//! the core index space used by every other module.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two rectangles are adjacent when their closed boundaries share a
/// segment longer than this; corner touching does not count. Also used
/// as the slack when deciding whether interiors overlap.
pub const EDGE_TOL: f64 = 1e-9;

/// One rectangular block: position of the lower-left corner plus extent,
/// all in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl Block {
    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn centroid(&self) -> (f64, f64) {
        (self.x + self.width / 2.0, self.y + self.height / 2.0)
    }
}

/// Ordered block layout; the block order defines core indices 0..B-1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Floorplan {
    blocks: Vec<Block>,
}

/// The bundled heterogeneous 6-core layout: two 3x3 mm big cores in a
/// left column, four 2x2 mm small cores packed to their right.
const DEFAULT_6CORE: &str = "\
# heterogeneous 6-core mobile layout (meters)
# name width height left-x bottom-y
big0   0.003 0.003 0.000 0.000
big1   0.003 0.003 0.000 0.003
small0 0.002 0.002 0.003 0.000
small1 0.002 0.002 0.003 0.002
small2 0.002 0.002 0.003 0.004
small3 0.002 0.002 0.005 0.000
";

impl Floorplan {
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        let fp = Floorplan { blocks };
        fp.validate()?;
        Ok(fp)
    }

    /// The default heterogeneous 6-core layout bundled with the tool.
    pub fn default_6core() -> Self {
        Self::parse(DEFAULT_6CORE).expect("bundled floorplan is valid")
    }

    /// Text of the bundled layout, for writing an example file.
    pub fn default_6core_text() -> &'static str {
        DEFAULT_6CORE
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut blocks = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(Error::FloorplanParse {
                    line: lineno + 1,
                    msg: format!("expected 5 fields, got {}", fields.len()),
                });
            }
            let num = |s: &str, what: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|_| Error::FloorplanParse {
                    line: lineno + 1,
                    msg: format!("invalid {what} `{s}`"),
                })
            };
            blocks.push(Block {
                name: fields[0].to_string(),
                width: num(fields[1], "width")?,
                height: num(fields[2], "height")?,
                x: num(fields[3], "left-x")?,
                y: num(fields[4], "bottom-y")?,
            });
        }
        Self::new(blocks)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::EmptyFloorplan);
        }
        for b in &self.blocks {
            if !(b.width > 0.0) || !(b.height > 0.0) || !b.x.is_finite() || !b.y.is_finite() {
                return Err(Error::InvalidParam(format!(
                    "block `{}` has non-positive or non-finite geometry",
                    b.name
                )));
            }
        }
        for i in 0..self.blocks.len() {
            for j in (i + 1)..self.blocks.len() {
                if self.blocks[i].name == self.blocks[j].name {
                    return Err(Error::DuplicateBlock(self.blocks[i].name.clone()));
                }
                if interiors_overlap(&self.blocks[i], &self.blocks[j]) {
                    return Err(Error::BlockOverlap {
                        a: self.blocks[i].name.clone(),
                        b: self.blocks[j].name.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block_names(&self) -> Vec<String> {
        self.blocks.iter().map(|b| b.name.clone()).collect()
    }

    /// Shared boundary length between two blocks, if they are adjacent.
    pub fn shared_edge(&self, i: usize, j: usize) -> Option<f64> {
        shared_edge_length(&self.blocks[i], &self.blocks[j])
    }
}

fn span_overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    a1.min(b1) - a0.max(b0)
}

fn interiors_overlap(a: &Block, b: &Block) -> bool {
    let ox = span_overlap(a.x, a.x + a.width, b.x, b.x + b.width);
    let oy = span_overlap(a.y, a.y + a.height, b.y, b.y + b.height);
    ox > EDGE_TOL && oy > EDGE_TOL
}

/// Length of the boundary segment shared by two closed rectangles, if
/// longer than `EDGE_TOL`. Blocks must be edge-aligned within `EDGE_TOL`
/// in one axis and overlap in the other.
pub fn shared_edge_length(a: &Block, b: &Block) -> Option<f64> {
    let ox = span_overlap(a.x, a.x + a.width, b.x, b.x + b.width);
    let oy = span_overlap(a.y, a.y + a.height, b.y, b.y + b.height);
    if ox.abs() <= EDGE_TOL && oy > EDGE_TOL {
        Some(oy)
    } else if oy.abs() <= EDGE_TOL && ox > EDGE_TOL {
        Some(ox)
    } else {
        None
    }
}

pub fn centroid_distance(a: &Block, b: &Block) -> f64 {
    let (ax, ay) = a.centroid();
    let (bx, by) = b.centroid();
    ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt()
}
