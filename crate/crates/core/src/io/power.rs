use std::collections::BTreeMap;
use std::fmt::Write;

use super::{content, parse_number};
use crate::error::{Error, Result};
use crate::model::Floorplan;
use crate::scalar::Scalar;

/// Block name → power in watts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PowerMap<S> {
    entries: BTreeMap<String, S>,
}

impl<S: Scalar> PowerMap<S> {
    pub fn insert(&mut self, name: impl Into<String>, watts: S) -> Result<()> {
        let name = name.into();
        if watts < S::zero() || !watts.is_finite() {
            return Err(Error::invalid(format!("block `{name}` has negative or non-finite power")));
        }
        if self.entries.contains_key(&name) {
            return Err(Error::invalid(format!("duplicate power entry `{name}`")));
        }
        self.entries.insert(name, watts);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<S> {
        self.entries.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &S)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> S {
        crate::scalar::ordered_sum(self.entries.values().copied())
    }

    /// Powers of the non-background blocks.
    pub fn from_floorplan(fp: &Floorplan<S>) -> Self {
        let entries = fp
            .blocks
            .iter()
            .filter(|b| !b.is_background())
            .map(|b| (b.name.clone(), b.power))
            .collect();
        PowerMap { entries }
    }

    /// Sets block powers in `fp`; names absent from the floorplan are an error.
    pub fn apply(&self, fp: &mut Floorplan<S>) -> Result<()> {
        for (name, &watts) in &self.entries {
            let block = fp
                .blocks
                .iter_mut()
                .find(|b| b.name == *name)
                .ok_or_else(|| Error::UnknownBlock(name.clone()))?;
            block.power = watts;
        }
        Ok(())
    }
}

/// Parses `<name> <watts>` lines.
pub fn parse_power<S: Scalar>(text: &str) -> Result<PowerMap<S>> {
    let mut map = PowerMap { entries: BTreeMap::new() };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = content(raw);
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::parse(line, format!("expected 2 fields, found {}", fields.len())));
        }
        let watts = parse_number(fields[1], line, "power")?;
        if watts < 0.0 {
            return Err(Error::parse(line, format!("block `{}` has negative power", fields[0])));
        }
        if map.entries.contains_key(fields[0]) {
            return Err(Error::parse(line, format!("duplicate power entry `{}`", fields[0])));
        }
        map.entries.insert(fields[0].to_string(), S::of(watts));
    }
    Ok(map)
}

pub fn write_power<S: Scalar>(map: &PowerMap<S>) -> String {
    let mut out = String::new();
    for (name, watts) in &map.entries {
        let _ = writeln!(out, "{name}\t{:.16e}", watts.as_f64());
    }
    out
}
