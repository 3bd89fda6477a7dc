//! Flat `key = value` run configuration files.
//!
//! The key set is closed; unknown keys are rejected so that typos surface
//! immediately. Relative paths resolve against the config file's directory.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::adversarial::Variant;
use crate::error::{Error, Result};
use crate::model::Preset;
use crate::train::{DataPaths, TrainConfig};

#[derive(Clone, Debug)]
pub struct FileConfig {
    pub train: TrainConfig,
    pub paths: DataPaths,
    pub out_dir: PathBuf,
}

pub const CONFIG_KEYS: [&str; 20] = [
    "variant",
    "lambda_a",
    "lambda_r",
    "lambda_gp",
    "lambda_critic",
    "noise_dim",
    "preset",
    "batch_size",
    "clip_norm",
    "patience",
    "max_epochs",
    "seed",
    "paper_literal_signs",
    "train_src",
    "train_tgt",
    "train_feat",
    "valid_src",
    "valid_tgt",
    "valid_feat",
    "out_dir",
];

fn parse_pairs(text: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected `key = value`, got `{line}`",
                lineno + 1
            )));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!(
                "line {}: unknown key `{key}`",
                lineno + 1
            )));
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(Error::Config(format!(
                "line {}: duplicate key `{key}`",
                lineno + 1
            )));
        }
    }
    Ok(map)
}

fn get_f64(map: &HashMap<String, String>, key: &str, default: f64) -> Result<f64> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| Error::Config(format!("{key}: bad number `{v}`"))),
    }
}

fn get_usize(map: &HashMap<String, String>, key: &str, default: usize) -> Result<usize> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| Error::Config(format!("{key}: bad integer `{v}`"))),
    }
}

fn get_u64(map: &HashMap<String, String>, key: &str, default: u64) -> Result<u64> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| Error::Config(format!("{key}: bad integer `{v}`"))),
    }
}

fn get_bool(map: &HashMap<String, String>, key: &str, default: bool) -> Result<bool> {
    match map.get(key).map(String::as_str) {
        None => Ok(default),
        Some("true") | Some("1") => Ok(true),
        Some("false") | Some("0") => Ok(false),
        Some(v) => Err(Error::Config(format!("{key}: bad boolean `{v}`"))),
    }
}

fn get_path(map: &HashMap<String, String>, key: &str, base: &Path) -> Result<PathBuf> {
    let v = map
        .get(key)
        .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))?;
    let p = PathBuf::from(v);
    Ok(if p.is_absolute() { p } else { base.join(p) })
}

/// Parse a config file body; `base` anchors relative paths.
pub fn parse_config(text: &str, base: &Path) -> Result<FileConfig> {
    let map = parse_pairs(text)?;
    let defaults = TrainConfig::default();
    let mut train = TrainConfig {
        preset: match map.get("preset") {
            Some(p) => Preset::parse(p)?,
            None => defaults.preset,
        },
        batch_size: get_usize(&map, "batch_size", defaults.batch_size)?,
        clip_norm: get_f64(&map, "clip_norm", defaults.clip_norm)?,
        patience: get_usize(&map, "patience", defaults.patience)?,
        max_epochs: get_usize(&map, "max_epochs", defaults.max_epochs)?,
        seed: get_u64(&map, "seed", defaults.seed)?,
        ..defaults
    };
    train.adv.variant = match map.get("variant") {
        Some(v) => Variant::parse(v)?,
        None => Variant::None,
    };
    train.adv.lambda_a = get_f64(&map, "lambda_a", train.adv.lambda_a)?;
    train.adv.lambda_r = get_f64(&map, "lambda_r", train.adv.lambda_r)?;
    train.adv.lambda_gp = get_f64(&map, "lambda_gp", train.adv.lambda_gp)?;
    train.adv.lambda_critic = get_usize(&map, "lambda_critic", train.adv.lambda_critic)?;
    train.adv.noise_dim = get_usize(&map, "noise_dim", train.adv.noise_dim)?;
    train.adv.paper_literal_signs =
        get_bool(&map, "paper_literal_signs", train.adv.paper_literal_signs)?;
    train.validate()?;

    let paths = DataPaths {
        train_src: get_path(&map, "train_src", base)?,
        train_tgt: get_path(&map, "train_tgt", base)?,
        train_feat: get_path(&map, "train_feat", base)?,
        valid_src: get_path(&map, "valid_src", base)?,
        valid_tgt: get_path(&map, "valid_tgt", base)?,
        valid_feat: get_path(&map, "valid_feat", base)?,
    };
    let out_dir = get_path(&map, "out_dir", base)?;
    Ok(FileConfig {
        train,
        paths,
        out_dir,
    })
}

pub fn load_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base)
}

/// Render a resolved configuration back into config-file syntax.
pub fn render_config(cfg: &FileConfig) -> String {
    let t = &cfg.train;
    format!(
        "variant = {}\nlambda_a = {}\nlambda_r = {}\nlambda_gp = {}\nlambda_critic = {}\n\
         noise_dim = {}\npreset = {}\nbatch_size = {}\nclip_norm = {}\npatience = {}\n\
         max_epochs = {}\nseed = {}\npaper_literal_signs = {}\ntrain_src = {}\n\
         train_tgt = {}\ntrain_feat = {}\nvalid_src = {}\nvalid_tgt = {}\nvalid_feat = {}\n\
         out_dir = {}\n",
        t.adv.variant.name(),
        t.adv.lambda_a,
        t.adv.lambda_r,
        t.adv.lambda_gp,
        t.adv.lambda_critic,
        t.adv.noise_dim,
        t.preset.name(),
        t.batch_size,
        t.clip_norm,
        t.patience,
        t.max_epochs,
        t.seed,
        t.adv.paper_literal_signs,
        cfg.paths.train_src.display(),
        cfg.paths.train_tgt.display(),
        cfg.paths.train_feat.display(),
        cfg.paths.valid_src.display(),
        cfg.paths.valid_tgt.display(),
        cfg.paths.valid_feat.display(),
        cfg.out_dir.display(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
train_src = a.src\ntrain_tgt = a.tgt\ntrain_feat = a.feat\n\
valid_src = b.src\nvalid_tgt = b.tgt\nvalid_feat = b.feat\nout_dir = out\n";

    #[test]
    fn defaults_fill_unset_keys() {
        let cfg = parse_config(MINIMAL, Path::new("/data")).unwrap();
        assert_eq!(cfg.train.batch_size, 32);
        assert_eq!(cfg.train.clip_norm, 1.0);
        assert_eq!(cfg.train.patience, 5);
        assert_eq!(cfg.train.adv.lambda_gp, 10.0);
        assert_eq!(cfg.train.adv.lambda_critic, 5);
        assert_eq!(cfg.paths.train_src, PathBuf::from("/data/a.src"));
        assert_eq!(cfg.out_dir, PathBuf::from("/data/out"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}learning_rate = 0.1\n");
        let err = parse_config(&text, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("learning_rate"), "{err}");
    }

    #[test]
    fn comments_and_blanks_are_skipped() {
        let text = format!("# run configuration\n\n{MINIMAL}\n# trailing note\n");
        assert!(parse_config(&text, Path::new(".")).is_ok());
    }

    #[test]
    fn variant_and_lambdas_parse() {
        let text = format!("{MINIMAL}variant = q-waae\nlambda_a = 0.5\nlambda_r = 0.8\n");
        let cfg = parse_config(&text, Path::new(".")).unwrap();
        assert_eq!(cfg.train.adv.variant, Variant::QWaae);
        assert_eq!(cfg.train.adv.lambda_a, 0.5);
        assert_eq!(cfg.train.adv.lambda_r, 0.8);
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let text = format!("{MINIMAL}seed = 1\nseed = 2\n");
        assert!(parse_config(&text, Path::new(".")).is_err());
    }

    #[test]
    fn missing_required_path_is_an_error() {
        let err = parse_config("seed = 3\n", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("train_src"), "{err}");
    }

    #[test]
    fn render_parse_round_trip() {
        let text = format!("{MINIMAL}variant = g-wgan\nnoise_dim = 16\nseed = 9\n");
        let cfg = parse_config(&text, Path::new("/r")).unwrap();
        let rendered = render_config(&cfg);
        let back = parse_config(&rendered, Path::new("/ignored")).unwrap();
        assert_eq!(back.train, cfg.train);
        assert_eq!(back.out_dir, cfg.out_dir);
    }
}
