use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use sfk_core::dataset::formats::{
    read_features_csv, write_features_csv, write_json, write_spectrum_csv, write_stats_csv,
};
use sfk_core::dataset::{list_images, load_image, save_png16, CorpusManifest, Label};
use sfk_core::detect::{
    evaluate, extract_features, ClassifierSpec, FeatureMode, FeatureRow, MlpHyper, Protocol,
};
use sfk_core::spectrum::{aggregate, reduced_spectrum, ReducedSpectrum};
use sfk_core::upsample::{make_surrogate, parse_config, KernelKind};
use sfk_core::{Error, GrayImage, Result};

use crate::{
    ClassifierArg, DetectArgs, ExtractArgs, LabelArg, ManifestArgs, ModeArg, SimulateArgs,
    SpectrumArgs,
};

impl From<LabelArg> for Label {
    fn from(l: LabelArg) -> Self {
        match l {
            LabelArg::Real => Label::Real,
            LabelArg::Fake => Label::Fake,
        }
    }
}

impl From<ModeArg> for FeatureMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Decay3 => FeatureMode::Decay3,
            ModeArg::Fullspec => FeatureMode::FullSpectrum,
        }
    }
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Images of a directory in file-name order; an empty directory is degenerate input.
fn image_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.exists() {
        return Err(Error::NotFound(dir.to_path_buf()));
    }
    let paths = list_images(dir)?;
    if paths.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no PNG/PGM/PPM images in {}",
            dir.display()
        )));
    }
    Ok(paths)
}

fn load_all(paths: &[PathBuf]) -> Result<Vec<GrayImage>> {
    paths.par_iter().map(load_image).collect()
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn spectrum_of(img: &GrayImage, normalize: bool) -> Result<ReducedSpectrum> {
    let rs = reduced_spectrum(img);
    if normalize {
        rs.normalize()
    } else {
        Ok(rs)
    }
}

pub fn spectrum(args: &SpectrumArgs) -> Result<()> {
    if args.input.is_file() {
        let rs = spectrum_of(&load_image(&args.input)?, args.normalize)?;
        return if args.aggregate {
            write_stats_csv(&args.out, &aggregate(&[rs])?)
        } else {
            write_spectrum_csv(&args.out, &rs)
        };
    }
    let paths = image_dir(&args.input)?;
    let specs = load_all(&paths)?
        .par_iter()
        .map(|img| spectrum_of(img, args.normalize))
        .collect::<Result<Vec<_>>>()?;
    if args.aggregate {
        return write_stats_csv(&args.out, &aggregate(&specs)?);
    }
    create_dir(&args.out)?;
    for (path, rs) in paths.iter().zip(&specs) {
        write_spectrum_csv(args.out.join(format!("{}.csv", file_stem(path))), rs)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Provenance {
    config: String,
    scaling: String,
    n_blocks: usize,
    kernel_size: usize,
    kernel: String,
    scaling_gain: f64,
    pipeline: &'static str,
    determinism: &'static str,
    inputs: Vec<ProvenanceEntry>,
}

#[derive(Serialize)]
struct ProvenanceEntry {
    input: String,
    output: String,
    w: usize,
    h: usize,
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let kernel: KernelKind = args.kernel.parse()?;
    let cfg = parse_config(&args.config)?.with_kernel(kernel);
    let paths = image_dir(&args.input)?;
    let outputs = load_all(&paths)?
        .par_iter()
        .map(|img| make_surrogate(img, &cfg))
        .collect::<Result<Vec<_>>>()?;

    create_dir(&args.out)?;
    let mut inputs = Vec::with_capacity(paths.len());
    let mut seen = std::collections::HashSet::new();
    for (path, img) in paths.iter().zip(&outputs) {
        let name = format!("{}.png", file_stem(path));
        if !seen.insert(name.clone()) {
            return Err(Error::Validation(format!(
                "two inputs map to output {name:?}"
            )));
        }
        save_png16(img, args.out.join(&name))?;
        inputs.push(ProvenanceEntry {
            input: file_name(path),
            output: name,
            w: img.width(),
            h: img.height(),
        });
    }
    let provenance = Provenance {
        config: cfg.code(),
        scaling: format!("{:?}", cfg.scaling),
        n_blocks: cfg.n_blocks,
        kernel_size: cfg.kernel_size,
        kernel: cfg.kernel.to_string(),
        scaling_gain: cfg.scaling_gain(),
        pipeline: "2x2 area downsample, scaling, gain, n_blocks same-size convolutions, 16-bit PNG clamped to [0,1]",
        determinism: "no randomness; identical inputs and flags give identical bytes",
        inputs,
    };
    write_json(args.out.join("provenance.json"), &provenance)
}

pub fn extract(args: &ExtractArgs) -> Result<()> {
    let paths = image_dir(&args.input)?;
    let label: Label = args.label.into();
    let mode: FeatureMode = args.mode.into();
    let rows = load_all(&paths)?
        .par_iter()
        .zip(&paths)
        .map(|(img, path)| {
            Ok(FeatureRow {
                id: file_name(path),
                label,
                features: extract_features(&reduced_spectrum(img), mode)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let dim = rows[0].features.len();
    if let Some(r) = rows.iter().find(|r| r.features.len() != dim) {
        return Err(Error::Validation(format!(
            "{} has a different size than {}; full spectra need equal image sizes",
            r.id, rows[0].id
        )));
    }
    write_features_csv(&args.out, &rows)
}

fn read_rows(path: &Path) -> Result<Vec<FeatureRow>> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    read_features_csv(path)
}

fn check_dim(path: &Path, rows: &[FeatureRow], dim: usize) -> Result<()> {
    match rows.first() {
        Some(r) if r.features.len() != dim => Err(Error::Schema {
            path: path.to_path_buf(),
            reason: format!("{} features per row, real set has {dim}", r.features.len()),
        }),
        _ => Ok(()),
    }
}

pub fn detect(args: &DetectArgs) -> Result<()> {
    if !(args.train_fraction > 0.0 && args.train_fraction < 1.0) {
        return Err(Error::Validation(format!(
            "--train-fraction must be in (0, 1), got {}",
            args.train_fraction
        )));
    }
    let spec = match args.classifier {
        ClassifierArg::Knn => ClassifierSpec::Knn {
            k: args.k,
            standardize: !args.raw_features,
        },
        ClassifierArg::Mlp => ClassifierSpec::Mlp {
            hyper: MlpHyper {
                lr: args.lr,
                epochs: args.epochs,
                seed: args.seed,
            },
        },
    };

    let real = read_rows(&args.real)?;
    let dim = match real.first() {
        Some(r) => r.features.len(),
        None => {
            return Err(Error::InsufficientData(format!(
                "{} has no rows",
                args.real.display()
            )))
        }
    };

    let mut by_setup: BTreeMap<String, Vec<FeatureRow>> = BTreeMap::new();
    let mut sources: BTreeMap<String, PathBuf> = BTreeMap::new();
    let train_setup = file_stem(&args.fake_train);
    let targets: Vec<String> = args.fake_test.iter().map(|p| file_stem(p)).collect();
    for path in std::iter::once(&args.fake_train).chain(&args.fake_test) {
        let name = file_stem(path);
        if let Some(prev) = sources.get(&name) {
            if prev != path {
                return Err(Error::Validation(format!(
                    "setup name {name:?} used by both {} and {}",
                    prev.display(),
                    path.display()
                )));
            }
            continue;
        }
        let rows = read_rows(path)?;
        check_dim(path, &rows, dim)?;
        sources.insert(name.clone(), path.clone());
        by_setup.insert(name, rows);
    }

    let protocol = Protocol {
        train_fraction: args.train_fraction,
        n_runs: args.runs,
        seed_base: args.seed,
    };
    let target_refs: Vec<&str> = targets.iter().map(String::as_str).collect();
    let reports = evaluate(
        &spec,
        &real,
        &by_setup,
        &train_setup,
        &target_refs,
        &protocol,
    )?;
    write_json(&args.out, &reports)?;

    let mut summary = String::new();
    for r in &reports {
        summary.push_str(&r.summary());
        summary.push('\n');
    }
    print!("{summary}");
    Ok(())
}

pub fn manifest(args: &ManifestArgs) -> Result<()> {
    image_dir(&args.input)?;
    let manifest = CorpusManifest::scan(&args.input, args.label.into())?;
    write_json(&args.out, &manifest)
}
