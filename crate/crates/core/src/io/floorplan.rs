use std::collections::HashSet;
use std::fmt::Write;

use super::{content, parse_number};
use crate::error::{Error, Result};
use crate::model::Block;
use crate::scalar::Scalar;

/// Parses `<name> <width_m> <height_m> <left_x_m> <bottom_y_m>` lines. Powers start at 0 W;
/// die dimensions come from the stack config.
pub fn parse_floorplan<S: Scalar>(text: &str) -> Result<Vec<Block<S>>> {
    let mut blocks = Vec::new();
    let mut names = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = content(raw);
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::parse(line, format!("expected 5 fields, found {}", fields.len())));
        }
        let name = fields[0];
        let width = parse_number(fields[1], line, "width")?;
        let height = parse_number(fields[2], line, "height")?;
        let x = parse_number(fields[3], line, "x")?;
        let y = parse_number(fields[4], line, "y")?;
        if width <= 0.0 || height <= 0.0 {
            return Err(Error::parse(line, format!("block `{name}` has a nonpositive dimension")));
        }
        if !names.insert(name.to_string()) {
            return Err(Error::parse(line, format!("duplicate block name `{name}`")));
        }
        blocks.push(Block::new(name, S::of(x), S::of(y), S::of(width), S::of(height), S::zero()));
    }
    Ok(blocks)
}

/// Inverse of [`parse_floorplan`]; values carry 17 significant digits. Background blocks are
/// skipped.
pub fn write_floorplan<S: Scalar>(blocks: &[Block<S>]) -> String {
    let mut out = String::from("# name\twidth_m\theight_m\tleft_x_m\tbottom_y_m\n");
    for b in blocks.iter().filter(|b| !b.is_background()) {
        let _ = writeln!(
            out,
            "{}\t{:.16e}\t{:.16e}\t{:.16e}\t{:.16e}",
            b.name,
            b.width.as_f64(),
            b.height.as_f64(),
            b.x.as_f64(),
            b.y.as_f64()
        );
    }
    out
}
