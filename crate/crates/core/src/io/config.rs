use std::path::{Path, PathBuf};

use super::{parse_floorplan, parse_number, parse_power, read_text};
use crate::error::{Error, Result};
use crate::model::{AttachSide, Floorplan, GridSpec, Layer, Material, PackageModel, Stack};

const DIE_KEYS: &[&str] = &["width", "height", "nx", "ny"];
const PACKAGE_KEYS: &[&str] = &[
    "ambient_K",
    "convection_resistance_K_per_W",
    "spreader_thickness_m",
    "spreader_k",
    "sink_thickness_m",
    "sink_k",
    "attach_side",
];
const LAYER_KEYS: &[&str] = &["name", "material_k", "material_cv", "thickness_m", "nz", "floorplan", "power"];
const OPTIMIZE_KEYS: &[&str] = &[
    "step_m",
    "method",
    "seed",
    "t0_K",
    "cooling",
    "epochs",
    "moves_per_epoch",
    "max_per_layer",
    "objective_nx",
    "objective_ny",
    "rescore_top",
];

/// Raw `[optimize]` section of a placement problem file. Absent keys are `None`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptimizeSection {
    pub step_m: Option<f64>,
    pub method: Option<String>,
    pub seed: Option<u64>,
    pub t0_k: Option<f64>,
    pub cooling: Option<f64>,
    pub epochs: Option<usize>,
    pub moves_per_epoch: Option<usize>,
    pub max_per_layer: Option<usize>,
    pub objective_nx: Option<usize>,
    pub objective_ny: Option<usize>,
    pub rescore_top: Option<usize>,
}

struct Entry {
    key: String,
    value: String,
    line: usize,
}

struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

impl Section {
    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    fn number(&self, key: &str) -> Result<Option<f64>> {
        self.get(key).map(|e| parse_number(&e.value, e.line, key)).transpose()
    }

    fn required(&self, key: &str) -> Result<f64> {
        self.number(key)?
            .ok_or_else(|| Error::config(format!("[{}] at line {}", self.name, self.line), format!("missing key `{key}`")))
    }

    fn count(&self, key: &str) -> Result<Option<usize>> {
        self.get(key)
            .map(|e| {
                e.value
                    .parse::<usize>()
                    .map_err(|_| Error::parse(e.line, format!("{key}: `{}` is not a nonnegative integer", e.value)))
            })
            .transpose()
    }
}

fn sections(text: &str) -> Result<Vec<Section>> {
    let mut out: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = match raw.find(['#', ';']) {
            Some(p) => raw[..p].trim(),
            None => raw.trim(),
        };
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
            let name = name.trim();
            if !matches!(name, "die" | "package" | "layer" | "optimize") {
                return Err(Error::parse(line, format!("unknown section `[{name}]`")));
            }
            out.push(Section { name: name.to_string(), line, entries: Vec::new() });
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| Error::parse(line, format!("expected `key = value`, found `{body}`")))?;
        let section = out
            .last_mut()
            .ok_or_else(|| Error::parse(line, "key outside of any section"))?;
        let key = key.trim();
        let allowed = match section.name.as_str() {
            "die" => DIE_KEYS,
            "package" => PACKAGE_KEYS,
            "layer" => LAYER_KEYS,
            _ => OPTIMIZE_KEYS,
        };
        if !allowed.contains(&key) {
            return Err(Error::parse(line, format!("unknown key `{key}` in [{}]", section.name)));
        }
        if section.get(key).is_some() {
            return Err(Error::parse(line, format!("duplicate key `{key}`")));
        }
        section.entries.push(Entry { key: key.to_string(), value: value.trim().to_string(), line });
    }
    Ok(out)
}

fn single<'a>(all: &'a [Section], name: &str) -> Result<Option<&'a Section>> {
    let mut it = all.iter().filter(|s| s.name == name);
    let first = it.next();
    if let Some(dup) = it.next() {
        return Err(Error::parse(dup.line, format!("section [{name}] given twice")));
    }
    Ok(first)
}

fn resolve(base: &Path, value: &str) -> PathBuf {
    let p = Path::new(value);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn package(section: Option<&Section>) -> Result<PackageModel<f64>> {
    let mut pkg = PackageModel::default();
    let Some(s) = section else { return Ok(pkg) };
    let set = |field: &mut f64, key: &str| -> Result<()> {
        if let Some(v) = s.number(key)? {
            *field = v;
        }
        Ok(())
    };
    set(&mut pkg.ambient, "ambient_K")?;
    set(&mut pkg.convection_resistance, "convection_resistance_K_per_W")?;
    set(&mut pkg.spreader_thickness, "spreader_thickness_m")?;
    set(&mut pkg.spreader_conductivity, "spreader_k")?;
    set(&mut pkg.sink_thickness, "sink_thickness_m")?;
    set(&mut pkg.sink_conductivity, "sink_k")?;
    if let Some(e) = s.get("attach_side") {
        pkg.attach_side = e.value.parse::<AttachSide>().map_err(|_| {
            Error::parse(e.line, format!("attach_side must be `top` or `bottom`, found `{}`", e.value))
        })?;
    }
    pkg.validate()?;
    Ok(pkg)
}

fn layer(s: &Section, index: usize, width: f64, height: f64, base: &Path) -> Result<Layer<f64>> {
    let name = s.get("name").map(|e| e.value.clone()).unwrap_or_else(|| format!("layer{index}"));
    let k = s.required("material_k")?;
    let cv = s.number("material_cv")?.unwrap_or(crate::model::SILICON_HEAT_CAPACITY);
    let thickness = s.required("thickness_m")?;
    // conductive layers get silicon-like vertical resolution, bonding layers one slab
    let nz = s.count("nz")?.unwrap_or(if k >= 10.0 { crate::model::SILICON_NZ } else { crate::model::TIM_NZ });
    let material = Material::new(name.clone(), k, cv)?;

    let mut floorplan = Floorplan::new(width, height);
    if let Some(e) = s.get("floorplan") {
        let path = resolve(base, &e.value);
        floorplan.blocks = parse_floorplan(&read_text(&path)?)
            .map_err(|err| Error::config(path.display().to_string(), err.to_string()))?;
    }
    if let Some(e) = s.get("power") {
        let path = resolve(base, &e.value);
        let powers = parse_power::<f64>(&read_text(&path)?)
            .map_err(|err| Error::config(path.display().to_string(), err.to_string()))?;
        powers.apply(&mut floorplan)?;
    }
    Ok(Layer { name, material, thickness, floorplan, nz })
}

fn build(all: &[Section], base: &Path, checked: bool) -> Result<(Stack<f64>, GridSpec)> {
    let die = single(all, "die")?.ok_or_else(|| Error::config("stack config", "missing section [die]"))?;
    let width = die.required("width")?;
    let height = die.required("height")?;
    let default = GridSpec::default();
    let grid = GridSpec::new(die.count("nx")?.unwrap_or(default.nx), die.count("ny")?.unwrap_or(default.ny))?;
    let pkg = package(single(all, "package")?)?;
    let layers = all
        .iter()
        .filter(|s| s.name == "layer")
        .enumerate()
        .map(|(i, s)| layer(s, i, width, height, base))
        .collect::<Result<Vec<_>>>()?;
    if layers.is_empty() {
        return Err(Error::config("stack config", "missing section [layer]"));
    }
    let stack = Stack { layers, package: pkg };
    if checked {
        stack.validate()?;
    }
    Ok((stack, grid))
}

/// Parses an INI-style stack description. `base_dir` resolves relative floorplan and power
/// paths.
pub fn parse_stack_config(text: &str, base_dir: &Path) -> Result<(Stack<f64>, GridSpec)> {
    let all = sections(text)?;
    if single(&all, "optimize")?.is_some() {
        return Err(Error::config("stack config", "[optimize] is only allowed in problem files"));
    }
    build(&all, base_dir, true)
}

pub fn load_stack_config(path: &Path) -> Result<(Stack<f64>, GridSpec)> {
    let text = read_text(path)?;
    parse_stack_config(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Like [`load_stack_config`] but leaves floorplan and die checks to the caller, so every
/// violation can be reported.
pub fn load_stack_config_unchecked(path: &Path) -> Result<(Stack<f64>, GridSpec)> {
    let text = read_text(path)?;
    let all = sections(&text)?;
    build(&all, path.parent().unwrap_or(Path::new(".")), false)
}

/// Stack config plus an `[optimize]` section.
pub fn parse_problem_config(text: &str, base_dir: &Path) -> Result<(Stack<f64>, GridSpec, OptimizeSection)> {
    let all = sections(text)?;
    let (stack, grid) = build(&all, base_dir, true)?;
    let s = single(&all, "optimize")?.ok_or_else(|| Error::config("problem file", "missing section [optimize]"))?;
    let seed = s
        .get("seed")
        .map(|e| e.value.parse::<u64>().map_err(|_| Error::parse(e.line, format!("seed: `{}` is not an integer", e.value))))
        .transpose()?;
    let opt = OptimizeSection {
        step_m: s.number("step_m")?,
        method: s.get("method").map(|e| e.value.clone()),
        seed,
        t0_k: s.number("t0_K")?,
        cooling: s.number("cooling")?,
        epochs: s.count("epochs")?,
        moves_per_epoch: s.count("moves_per_epoch")?,
        max_per_layer: s.count("max_per_layer")?,
        objective_nx: s.count("objective_nx")?,
        objective_ny: s.count("objective_ny")?,
        rescore_top: s.count("rescore_top")?,
    };
    Ok((stack, grid, opt))
}

pub fn load_problem_config(path: &Path) -> Result<(Stack<f64>, GridSpec, OptimizeSection)> {
    let text = read_text(path)?;
    parse_problem_config(&text, path.parent().unwrap_or(Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) {
        std::fs::write(dir.join(name), text).unwrap();
    }

    #[test]
    fn single_layer_config() {
        let cfg = "[die]\nwidth = 0.016\nheight = 0.016\n[layer]\nname = die\nmaterial_k = 100\nthickness_m = 1.5e-4\n";
        let (stack, grid) = parse_stack_config(cfg, Path::new(".")).unwrap();
        assert_eq!(stack.layers.len(), 1);
        assert_eq!(stack.layers[0].nz, 4);
        assert_eq!(grid, GridSpec::default());
        assert_eq!(stack.package, PackageModel::default());
    }

    #[test]
    fn three_layer_stack_with_files() {
        let dir = std::env::temp_dir().join(format!("thermstack-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        write(&dir, "l0.flp", "cpu0 0.004 0.004 0 0\n");
        write(&dir, "l0.ptrace", "cpu0 50.9\n");
        let cfg = "\
[die]
width = 0.016
height = 0.016
nx = 32
ny = 32
[package]
ambient_K = 300
attach_side = bottom
[layer]
name = layer0
material_k = 100
thickness_m = 1.5e-4
floorplan = l0.flp
power = l0.ptrace
[layer]
name = tim
material_k = 4
material_cv = 4e6
thickness_m = 2e-5
[layer]
name = layer2
material_k = 100
thickness_m = 1.5e-4
floorplan = l0.flp
";
        let (stack, grid) = parse_stack_config(cfg, &dir).unwrap();
        assert_eq!(grid, GridSpec::new(32, 32).unwrap());
        assert_eq!(stack.layers.len(), 3);
        assert_eq!(stack.layers[1].nz, 1);
        assert_eq!(stack.layers[0].floorplan.blocks[0].power, 50.9);
        assert_eq!(stack.layers[2].floorplan.blocks[0].power, 0.0);
        assert_eq!(stack.package.ambient, 300.0);
        assert_eq!(stack.package.attach_side, AttachSide::Bottom);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn block_outside_die_is_rejected() {
        let dir = std::env::temp_dir().join(format!("thermstack-cfg-out-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        write(&dir, "bad.flp", "cpu0 0.004 0.004 0.02 0\n");
        let cfg = "[die]\nwidth = 0.016\nheight = 0.016\n[layer]\nmaterial_k = 100\nthickness_m = 1e-4\nfloorplan = bad.flp\n";
        let err = parse_stack_config(cfg, &dir).unwrap_err();
        assert!(matches!(err, Error::InvalidFloorplan(_)), "{err}");
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn config_errors() {
        let unknown = parse_stack_config("[die]\nwidth = 1\ncolour = red\n", Path::new(".")).unwrap_err();
        assert!(matches!(unknown, Error::Parse { line: 3, .. }));
        let missing = parse_stack_config("[layer]\nmaterial_k = 1\nthickness_m = 1\n", Path::new(".")).unwrap_err();
        assert!(missing.to_string().contains("[die]"));
        let no_layer = parse_stack_config("[die]\nwidth = 1\nheight = 1\n", Path::new(".")).unwrap_err();
        assert!(no_layer.to_string().contains("[layer]"));
        let no_file = "[die]\nwidth = 1\nheight = 1\n[layer]\nmaterial_k = 1\nthickness_m = 1\nfloorplan = /nonexistent/x.flp\n";
        assert!(matches!(parse_stack_config(no_file, Path::new(".")), Err(Error::Io { .. })));
        assert!(parse_stack_config("[bogus]\n", Path::new(".")).is_err());
    }

    #[test]
    fn optimize_section() {
        let cfg = "[die]\nwidth = 0.016\nheight = 0.016\n[layer]\nmaterial_k = 100\nthickness_m = 1.5e-4\n[optimize]\nstep_m = 0.004\nmethod = anneal\nseed = 7\n";
        let (_, _, opt) = parse_problem_config(cfg, Path::new(".")).unwrap();
        assert_eq!(opt.step_m, Some(0.004));
        assert_eq!(opt.method.as_deref(), Some("anneal"));
        assert_eq!(opt.seed, Some(7));
        assert!(parse_stack_config(cfg, Path::new(".")).is_err());
    }
}
