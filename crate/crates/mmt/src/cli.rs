//! Command-line entry points.
//!
//! Subcommands: `synth`, `bpe-train`, `train`, `translate`, `evaluate`,
//! `ablate`, `sweep`. Exit codes: 0 success, 1 usage error, 2 data/format
//! error, 3 numeric failure.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::config::{load_config, render_config, FileConfig};
use crate::data::{self, BpeModel, FeatureStore, SynthConfig, Vocabulary};
use crate::error::{Error, Result};
use crate::eval::{bleu, bleu_display, grounding_accuracy};
use crate::model::{translate, DecodeMode, ModelQParams};
use crate::train::{run_ablation, run_lambda_sweep, Checkpoint, Trainer};

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure::Lib(e)
    }
}

type CliResult = std::result::Result<(), Failure>;

fn usage() -> String {
    "usage: mmt <command> [options]\n\
     commands:\n\
     \u{20}  synth      --out DIR [--train-sentences N] [--test-sentences N] [--ambiguous A]\n\
     \u{20}             [--senses K] [--noise F] [--feat-dim D] [--regular N] [--min-len N]\n\
     \u{20}             [--max-len N] [--amb-prob F] [--seed S]\n\
     \u{20}  bpe-train  --input FILE --merges N --model-out FILE [--encode-out FILE]\n\
     \u{20}  train      --config FILE [--resume]\n\
     \u{20}  translate  --checkpoint FILE [--checkpoint FILE ...] --src FILE --features FILE\n\
     \u{20}             --out FILE [--beam K] [--max-len N]\n\
     \u{20}  evaluate   --refs FILE --hyps FILE [--annotations FILE --lexicon FILE] [--smooth]\n\
     \u{20}  ablate     --config FILE --out FILE [--seeds 1,2,3]\n\
     \u{20}  sweep      --config FILE --out FILE [--seeds 1,2,3] [--grid 0.2,0.5,0.8]\n"
        .to_string()
}

/// Parsed `--flag value` pairs; `flags` lists value-less switches.
fn parse_flags(
    args: &[String],
    valued: &[&str],
    switches: &[&str],
) -> std::result::Result<HashMap<String, Vec<String>>, Failure> {
    let mut map: HashMap<String, Vec<String>> = HashMap::new();
    let mut i = 0;
    while i < args.len() {
        let arg = &args[i];
        let Some(name) = arg.strip_prefix("--") else {
            return Err(Failure::Usage(format!("unexpected argument `{arg}`")));
        };
        if switches.contains(&name) {
            map.entry(name.to_string()).or_default().push("true".into());
            i += 1;
        } else if valued.contains(&name) {
            let Some(value) = args.get(i + 1) else {
                return Err(Failure::Usage(format!("--{name} needs a value")));
            };
            map.entry(name.to_string()).or_default().push(value.clone());
            i += 2;
        } else {
            return Err(Failure::Usage(format!("unknown option --{name}")));
        }
    }
    Ok(map)
}

fn one(map: &HashMap<String, Vec<String>>, name: &str) -> std::result::Result<String, Failure> {
    match map.get(name).map(Vec::as_slice) {
        Some([v]) => Ok(v.clone()),
        Some(_) => Err(Failure::Usage(format!("--{name} given more than once"))),
        None => Err(Failure::Usage(format!("missing required --{name}"))),
    }
}

fn opt(map: &HashMap<String, Vec<String>>, name: &str) -> Option<String> {
    map.get(name).and_then(|v| v.first().cloned())
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> std::result::Result<T, Failure> {
    s.parse()
        .map_err(|_| Failure::Usage(format!("{what}: bad value `{s}`")))
}

fn parse_seed_list(s: &str) -> std::result::Result<Vec<u64>, Failure> {
    s.split(',')
        .map(|p| parse_num::<u64>(p.trim(), "--seeds"))
        .collect()
}

fn parse_grid(s: &str) -> std::result::Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|p| parse_num::<f64>(p.trim(), "--grid"))
        .collect()
}

/// Dispatch a full argv (without the program name). Returns the exit code.
pub fn run(args: &[String]) -> i32 {
    let result = match args.first().map(String::as_str) {
        None => Err(Failure::Usage("no command given".into())),
        Some("help") | Some("--help") | Some("-h") => {
            print!("{}", usage());
            Ok(())
        }
        Some("synth") => cmd_synth(&args[1..]),
        Some("bpe-train") => cmd_bpe_train(&args[1..]),
        Some("train") => cmd_train(&args[1..]),
        Some("translate") => cmd_translate(&args[1..]),
        Some("evaluate") => cmd_evaluate(&args[1..]),
        Some("ablate") => cmd_ablate(&args[1..]),
        Some("sweep") => cmd_sweep(&args[1..]),
        Some(other) => Err(Failure::Usage(format!("unknown command `{other}`"))),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprint!("{}", usage());
            1
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn cmd_synth(args: &[String]) -> CliResult {
    let map = parse_flags(
        args,
        &[
            "out",
            "train-sentences",
            "test-sentences",
            "ambiguous",
            "senses",
            "noise",
            "feat-dim",
            "regular",
            "min-len",
            "max-len",
            "amb-prob",
            "seed",
        ],
        &[],
    )?;
    let out_dir = PathBuf::from(one(&map, "out")?);
    let train_n: usize = parse_num(&opt(&map, "train-sentences").unwrap_or("2000".into()), "--train-sentences")?;
    let test_n: usize = parse_num(&opt(&map, "test-sentences").unwrap_or("200".into()), "--test-sentences")?;
    let seed: u64 = parse_num(&opt(&map, "seed").unwrap_or("1".into()), "--seed")?;
    let base = SynthConfig {
        sentences: train_n,
        regular_tokens: parse_num(&opt(&map, "regular").unwrap_or("20".into()), "--regular")?,
        ambiguous_tokens: parse_num(&opt(&map, "ambiguous").unwrap_or("8".into()), "--ambiguous")?,
        senses: parse_num(&opt(&map, "senses").unwrap_or("2".into()), "--senses")?,
        len_range: (
            parse_num(&opt(&map, "min-len").unwrap_or("4".into()), "--min-len")?,
            parse_num(&opt(&map, "max-len").unwrap_or("8".into()), "--max-len")?,
        ),
        ambiguous_prob: parse_num(&opt(&map, "amb-prob").unwrap_or("0.3".into()), "--amb-prob")?,
        feat_dim: parse_num(&opt(&map, "feat-dim").unwrap_or("64".into()), "--feat-dim")?,
        noise: parse_num(&opt(&map, "noise").unwrap_or("0.1".into()), "--noise")?,
        seed,
    };
    std::fs::create_dir_all(&out_dir).map_err(Error::from)?;

    let train = data::synth_generate(&base)?;
    let valid = data::synth_generate(&SynthConfig {
        sentences: test_n,
        seed: seed ^ 0x5641,
        ..base
    })?;
    data::write_sentences(&out_dir.join("train.src"), &train.src)?;
    data::write_sentences(&out_dir.join("train.tgt"), &train.tgt)?;
    FeatureStore::save_raw(
        &out_dir.join("train.feat"),
        base.sentences,
        base.feat_dim,
        &train.features,
    )?;
    data::write_annotations(&out_dir.join("train.src.ann"), &train.annotations)?;
    data::write_sentences(&out_dir.join("valid.src"), &valid.src)?;
    data::write_sentences(&out_dir.join("valid.tgt"), &valid.tgt)?;
    FeatureStore::save_raw(
        &out_dir.join("valid.feat"),
        test_n,
        base.feat_dim,
        &valid.features,
    )?;
    data::write_annotations(&out_dir.join("valid.src.ann"), &valid.annotations)?;
    data::write_lexicon(&out_dir.join("lexicon.txt"), &valid.lexicon)?;
    println!(
        "wrote {} train / {} test sentence pairs to {}",
        train_n,
        test_n,
        out_dir.display()
    );
    Ok(())
}

fn cmd_bpe_train(args: &[String]) -> CliResult {
    let map = parse_flags(args, &["input", "merges", "model-out", "encode-out"], &[])?;
    let input = PathBuf::from(one(&map, "input")?);
    let merges: usize = parse_num(&one(&map, "merges")?, "--merges")?;
    let model_out = PathBuf::from(one(&map, "model-out")?);
    let corpus = data::load_sentences(&input)?;
    let model = BpeModel::train(&corpus, merges)?;
    model.save(&model_out)?;
    println!("learned {} merges", model.merges().len());
    if let Some(enc_out) = opt(&map, "encode-out") {
        let encoded: Vec<Vec<String>> = corpus.iter().map(|s| model.encode(s)).collect();
        data::write_sentences(Path::new(&enc_out), &encoded)?;
        println!("encoded corpus written to {enc_out}");
    }
    Ok(())
}

fn cmd_train(args: &[String]) -> CliResult {
    let map = parse_flags(args, &["config"], &["resume"])?;
    let cfg_path = PathBuf::from(one(&map, "config")?);
    let cfg = load_config(&cfg_path)?;
    let data_bundle = cfg.paths.load()?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(Error::from)?;
    write_manifest(&cfg)?;

    let resume = map.contains_key("resume");
    let last = cfg.out_dir.join("last.ckpt");
    let mut trainer = if resume && last.is_file() {
        eprintln!("resuming from {}", last.display());
        let ckpt = Checkpoint::load(&last)?;
        // the epoch/patience budget follows the config file so a finished
        // run can be extended; everything else must match what was trained
        let mut stored = ckpt.config.clone();
        stored.max_epochs = cfg.train.max_epochs;
        stored.patience = cfg.train.patience;
        if stored != cfg.train {
            return Err(Failure::Lib(Error::Config(
                "config file disagrees with the checkpoint being resumed \
                 (only max_epochs/patience may change)"
                    .into(),
            )));
        }
        let mut t = Trainer::from_checkpoint(ckpt, &data_bundle)?;
        t.cfg.max_epochs = cfg.train.max_epochs;
        t.cfg.patience = cfg.train.patience;
        t
    } else {
        Trainer::new(cfg.train.clone(), &data_bundle)?
    };

    while trainer.epoch < trainer.cfg.max_epochs && !trainer.should_stop() {
        let before_best = trainer.best_epoch();
        let m = trainer.run_epoch(&data_bundle)?;
        eprintln!("{}", m.tsv_line());
        let improved = trainer.best_epoch() != before_best;
        std::fs::write(
            cfg.out_dir.join("metrics.tsv"),
            crate::train::metrics_log(&trainer.metrics),
        )
        .map_err(Error::from)?;
        trainer
            .checkpoint_with_vocabs(&data_bundle)
            .save(&cfg.out_dir.join("last.ckpt"))?;
        if improved {
            trainer
                .checkpoint_with_vocabs(&data_bundle)
                .save(&cfg.out_dir.join("best.ckpt"))?;
        }
    }
    println!(
        "best validation BLEU {} at epoch {} ({} epochs run)",
        bleu_display(trainer.best_val_bleu() / 100.0),
        trainer.best_epoch(),
        trainer.epoch
    );
    Ok(())
}

fn write_manifest(cfg: &FileConfig) -> Result<()> {
    let mut manifest = String::new();
    manifest.push_str(&format!(
        "# mmt {} run manifest; this file is a valid run configuration\n",
        env!("CARGO_PKG_VERSION")
    ));
    for (label, path) in [
        ("train_src", &cfg.paths.train_src),
        ("train_tgt", &cfg.paths.train_tgt),
        ("train_feat", &cfg.paths.train_feat),
        ("valid_src", &cfg.paths.valid_src),
        ("valid_tgt", &cfg.paths.valid_tgt),
        ("valid_feat", &cfg.paths.valid_feat),
    ] {
        manifest.push_str(&format!(
            "# fnv64 {label} = {:016x}\n",
            data::file_hash(path)?
        ));
    }
    manifest.push_str(&format!(
        "# outputs: metrics.tsv, best.ckpt, last.ckpt in {}\n",
        cfg.out_dir.display()
    ));
    manifest.push_str(&render_config(cfg));
    std::fs::write(cfg.out_dir.join("manifest.txt"), manifest)?;
    Ok(())
}

struct LoadedModel {
    model: ModelQParams,
    src_vocab: Vocabulary,
    tgt_vocab: Vocabulary,
    zero_visual: bool,
}

fn load_models(paths: &[String]) -> Result<Vec<LoadedModel>> {
    let mut out = Vec::with_capacity(paths.len());
    let mut first_hashes: Option<(u64, u64)> = None;
    for p in paths {
        let ckpt = Checkpoint::load(Path::new(p))?;
        if ckpt.src_vocab_tokens.is_empty() {
            return Err(Error::Data(format!(
                "{p}: checkpoint carries no vocabulary (not written by `mmt train`?)"
            )));
        }
        match first_hashes {
            None => first_hashes = Some((ckpt.src_vocab_hash, ckpt.tgt_vocab_hash)),
            Some(h) => {
                if h != (ckpt.src_vocab_hash, ckpt.tgt_vocab_hash) {
                    return Err(Error::Contract(
                        "ensemble checkpoints disagree on vocabularies".into(),
                    ));
                }
            }
        }
        let model = match ckpt.best_model {
            Some((m, _)) => m,
            None => ckpt.model,
        };
        out.push(LoadedModel {
            model,
            src_vocab: Vocabulary::from_tokens(ckpt.src_vocab_tokens)?,
            tgt_vocab: Vocabulary::from_tokens(ckpt.tgt_vocab_tokens)?,
            zero_visual: ckpt.config.zero_visual,
        });
    }
    Ok(out)
}

fn cmd_translate(args: &[String]) -> CliResult {
    let map = parse_flags(
        args,
        &["checkpoint", "src", "features", "out", "beam", "max-len"],
        &[],
    )?;
    let ckpt_paths = map
        .get("checkpoint")
        .cloned()
        .ok_or_else(|| Failure::Usage("missing required --checkpoint".into()))?;
    let src_path = PathBuf::from(one(&map, "src")?);
    let feat_path = PathBuf::from(one(&map, "features")?);
    let out_path = PathBuf::from(one(&map, "out")?);
    let mode = match opt(&map, "beam") {
        Some(k) => DecodeMode::Beam(parse_num(&k, "--beam")?),
        None => DecodeMode::Greedy,
    };

    let loaded = load_models(&ckpt_paths)?;
    let models: Vec<&ModelQParams> = loaded.iter().map(|l| &l.model).collect();
    let dims = models[0].dims;
    let sentences = data::load_sentences(&src_path)?;
    let features = FeatureStore::load(&feat_path)?;
    if features.d() != dims.feat_dim {
        return Err(Failure::Lib(Error::Data(format!(
            "feature dimension mismatch: model expects d={}, {} has d={}",
            dims.feat_dim,
            feat_path.display(),
            features.d()
        ))));
    }
    if features.n() < sentences.len() {
        return Err(Failure::Lib(Error::Data(format!(
            "feature store has {} rows for {} sentences",
            features.n(),
            sentences.len()
        ))));
    }

    let zero_visual = loaded[0].zero_visual;
    let mut hyps = Vec::with_capacity(sentences.len());
    for (i, sent) in sentences.iter().enumerate() {
        let ids = loaded[0].src_vocab.encode(sent);
        let max_len = match opt(&map, "max-len") {
            Some(n) => parse_num(&n, "--max-len")?,
            None => 2 * ids.len() + 5,
        };
        let feats: Vec<f64> = if zero_visual {
            vec![0.0; dims.feat_dim]
        } else {
            features.row(i).to_vec()
        };
        let result = translate(&models, &ids, &feats, mode, max_len)?;
        hyps.push(loaded[0].tgt_vocab.decode(&result.tokens));
    }
    data::write_sentences(&out_path, &hyps)?;
    println!("wrote {} hypotheses to {}", hyps.len(), out_path.display());
    Ok(())
}

fn cmd_evaluate(args: &[String]) -> CliResult {
    let map = parse_flags(
        args,
        &["refs", "hyps", "annotations", "lexicon"],
        &["smooth"],
    )?;
    let refs_path = PathBuf::from(one(&map, "refs")?);
    let hyps_path = PathBuf::from(one(&map, "hyps")?);
    let refs_lines: Vec<String> = std::fs::read_to_string(&refs_path)
        .map_err(|e| Error::Data(format!("{}: {e}", refs_path.display())))?
        .lines()
        .map(str::to_string)
        .collect();
    let hyps_lines: Vec<String> = std::fs::read_to_string(&hyps_path)
        .map_err(|e| Error::Data(format!("{}: {e}", hyps_path.display())))?
        .lines()
        .map(str::to_string)
        .collect();
    let smooth = map.contains_key("smooth");
    let score = bleu(&refs_lines, &hyps_lines, smooth)?;
    println!("BLEU = {}", bleu_display(score));

    match (opt(&map, "annotations"), opt(&map, "lexicon")) {
        (Some(ann_path), Some(lex_path)) => {
            let annotations = data::load_annotations(Path::new(&ann_path))?;
            let lexicon = data::load_lexicon(Path::new(&lex_path))?;
            let tok = |lines: &[String]| -> Vec<Vec<String>> {
                lines
                    .iter()
                    .map(|l| l.split_whitespace().map(str::to_string).collect())
                    .collect()
            };
            let acc =
                grounding_accuracy(&tok(&refs_lines), &tok(&hyps_lines), &annotations, &lexicon)?;
            println!("grounding_accuracy = {acc:.4}");
        }
        (None, None) => {}
        _ => {
            return Err(Failure::Usage(
                "--annotations and --lexicon go together".into(),
            ))
        }
    }
    Ok(())
}

fn cmd_ablate(args: &[String]) -> CliResult {
    let map = parse_flags(args, &["config", "out", "seeds"], &[])?;
    let cfg = load_config(Path::new(&one(&map, "config")?))?;
    let out_path = PathBuf::from(one(&map, "out")?);
    let seeds = match opt(&map, "seeds") {
        Some(s) => parse_seed_list(&s)?,
        None => vec![1, 2, 3],
    };
    let data_bundle = cfg.paths.load()?;
    let report = run_ablation(&cfg.train, &data_bundle, &seeds)?;
    let table = report.to_tsv();
    std::fs::write(&out_path, &table).map_err(Error::from)?;
    print!("{table}");
    Ok(())
}

fn cmd_sweep(args: &[String]) -> CliResult {
    let map = parse_flags(args, &["config", "out", "seeds", "grid"], &[])?;
    let cfg = load_config(Path::new(&one(&map, "config")?))?;
    let out_path = PathBuf::from(one(&map, "out")?);
    let seeds = match opt(&map, "seeds") {
        Some(s) => parse_seed_list(&s)?,
        None => vec![1, 2, 3],
    };
    let grid = match opt(&map, "grid") {
        Some(g) => parse_grid(&g)?,
        None => crate::train::DEFAULT_SWEEP_GRID.to_vec(),
    };
    let data_bundle = cfg.paths.load()?;
    let report = run_lambda_sweep(&cfg.train, &data_bundle, &grid, &grid, &seeds)?;
    let table = report.to_tsv();
    std::fs::write(&out_path, &table).map_err(Error::from)?;
    print!("{table}");
    Ok(())
}
