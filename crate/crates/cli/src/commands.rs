use std::path::{Path, PathBuf};
use std::str::FromStr;

use hdadbin_core::classical::MltWindow;
use hdadbin_core::dataset::{load_pairs, write_pair, Manifest, ManifestEntry, Split};
use hdadbin_core::eval::{evaluate_dataset, render_comparison, Aggregation, Binarizer, EvalReport};
use hdadbin_core::ihegt::MeanDomain;
use hdadbin_core::io::{read_correction_layer, read_gray, read_source, write_binary_map};
use hdadbin_core::labeling::{apply_corrections, label_pair_with, HdadPair, LabelingConfig, Provenance};
use hdadbin_core::method::{ClassicalMethod, MethodKind};
use hdadbin_core::synth::{generate, SynthConfig};
use hdadbin_nn::{load_model, save_model, train_with, CnnBinarizer, Precision, TrainConfig};

use crate::args::{
    BinarizeArgs, Cli, Command, CompareArgs, EvalArgs, InferArgs, LabelArgs, MethodArgs, SynthArgs, TrainArgs,
    TrainingArgs,
};
use crate::config::FileConfig;
use crate::error::{code, CliError};

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> Result<()> {
    let file = FileConfig::load_opt(cli.config.as_deref())?;
    let threads = cli.threads.or(file.threads).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Binarize(a) => binarize(a, &file),
        Command::Label(a) => label(a, &file),
        Command::Train(a) => train(a, &file),
        Command::Infer(a) => infer(a, &file),
        Command::Eval(a) => eval(a, &file),
        Command::Compare(a) => compare(a, &file),
        Command::Synth(a) => synth(a),
    })
}

fn parse_choice<T>(what: &str, value: &str, choices: &[(&str, T)]) -> Result<T>
where
    T: Copy,
{
    choices.iter().find(|(name, _)| *name == value).map(|&(_, v)| v).ok_or_else(|| {
        let names: Vec<_> = choices.iter().map(|(n, _)| *n).collect();
        CliError::usage(format!("unknown {what} `{value}` (expected one of: {})", names.join(", ")))
    })
}

fn parse_split(value: Option<&str>, default: &str) -> Result<Option<Split>> {
    match value.unwrap_or(default) {
        "all" => Ok(None),
        s => Ok(Some(Split::from_str(s)?)),
    }
}

fn parse_aggregation(value: Option<&str>) -> Result<Aggregation> {
    parse_choice(
        "aggregation",
        value.unwrap_or("macro"),
        &[("macro", Aggregation::Macro), ("micro", Aggregation::Micro)],
    )
}

/// Fails before any work if the output's directory does not exist.
fn check_output(path: &Path) -> Result<()> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if parent.is_dir() {
        Ok(())
    } else {
        Err(CliError {
            code: code::IO,
            message: format!("{}: output directory does not exist", parent.display()),
        })
    }
}

/// Method flags merged over the config file.
struct MethodSettings {
    k: Option<f64>,
    window: Option<usize>,
    r: Option<f64>,
    mlt_window: MltWindow,
    labeling: LabelingConfig,
    model: Option<PathBuf>,
    precision: Precision,
}

impl MethodSettings {
    fn resolve(a: &MethodArgs, f: &FileConfig) -> Result<Self> {
        let mlt_window = parse_choice(
            "MLT window",
            a.mlt_window.as_deref().or(f.mlt_window.as_deref()).unwrap_or("local"),
            &[("local", MltWindow::Local), ("block", MltWindow::Block)],
        )?;
        let mean_domain = parse_choice(
            "IHEGT mean domain",
            a.ihegt_mean.as_deref().or(f.ihegt_mean.as_deref()).unwrap_or("whole"),
            &[("whole", MeanDomain::WholeMap), ("exclude-background", MeanDomain::ExcludeBackground)],
        )?;
        let precision = parse_choice(
            "precision",
            a.precision.as_deref().or(f.precision.as_deref()).unwrap_or("double"),
            &[("double", Precision::Double), ("single", Precision::Single)],
        )?;
        let mut labeling = LabelingConfig {
            mlt_window,
            ..LabelingConfig::default()
        };
        labeling.ihegt.mean_domain = mean_domain;
        if let Some(n) = a.max_iters.or(f.max_iters) {
            labeling.ihegt.max_iterations = n;
        }
        if let Some(w) = a.cwmf_window.or(f.cwmf_window) {
            labeling.cwmf.window = w;
        }
        if let Some(w) = a.cwmf_weight.or(f.cwmf_weight) {
            labeling.cwmf.center_weight = w;
        }
        labeling.cwmf.validate()?;
        Ok(Self {
            k: a.k.or(f.k),
            window: a.window.or(f.window),
            r: a.r.or(f.r),
            mlt_window,
            labeling,
            model: a.model.clone().or_else(|| f.model.clone()),
            precision,
        })
    }

    /// `k`, `window` and `r` apply to the named method's own rule, or to
    /// the MLT stage of the pipeline.
    fn classical(&self, kind: MethodKind, overrides: bool) -> Result<ClassicalMethod> {
        let mut m = ClassicalMethod::new(kind);
        m.mlt_window = self.mlt_window;
        m.ihegt = self.labeling.ihegt;
        m.labeling = self.labeling;
        if overrides {
            let p = if kind == MethodKind::Pipeline { &mut m.labeling.mlt } else { &mut m.params };
            if let Some(k) = self.k {
                p.k = k;
            }
            if let Some(w) = self.window {
                p.w = w;
            }
            if let Some(r) = self.r {
                p.r = r;
            }
            p.validate()?;
        }
        Ok(m)
    }

    fn cnn(&self) -> Result<CnnBinarizer> {
        let path = self.model.as_ref().ok_or_else(|| CliError::usage("the cnn method needs --model"))?;
        Ok(CnnBinarizer::new(load_model(path)?, self.precision))
    }

    fn binarizer(&self, method: &str, overrides: bool) -> Result<Box<dyn Binarizer>> {
        if method == "cnn" {
            return Ok(Box::new(self.cnn()?));
        }
        let kind = MethodKind::from_str(method)
            .map_err(|_| CliError::usage(format!("unknown method `{method}`")))?;
        Ok(Box::new(self.classical(kind, overrides)?))
    }
}

fn method_name<'a>(flag: Option<&'a str>, file: &'a FileConfig) -> Result<&'a str> {
    flag.or(file.method.as_deref()).ok_or_else(|| CliError::usage("no method given (use --method)"))
}

fn binarize(a: BinarizeArgs, file: &FileConfig) -> Result<()> {
    let method = method_name(a.method.as_deref(), file)?;
    let settings = MethodSettings::resolve(&a.params, file)?;
    check_output(&a.output)?;
    let map = if method == "cnn" {
        let cnn = settings.cnn()?;
        cnn.binarize_source(&read_source(&a.input)?)?
    } else {
        let m = settings.binarizer(method, true)?;
        m.binarize(&read_gray(&a.input)?)?
    };
    write_binary_map(&map, &a.output)?;
    Ok(())
}

fn pair_id(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_owned)
        .ok_or_else(|| CliError::usage(format!("{}: cannot derive a pair id", path.display())))
}

fn label(a: LabelArgs, file: &FileConfig) -> Result<()> {
    let settings = MethodSettings::resolve(&a.params, file)?;
    let mut cfg = settings.labeling;
    if let Some(k) = settings.k {
        cfg.mlt.k = k;
    }
    if let Some(w) = settings.window {
        cfg.mlt.w = w;
    }
    cfg.mlt.validate()?;
    match (&a.output, &a.dataset) {
        (Some(out), None) => {
            let [input] = a.inputs.as_slice() else {
                return Err(CliError::usage("--out takes exactly one --in image"));
            };
            check_output(out)?;
            let layer = a.corrections.as_deref().map(read_correction_layer).transpose()?;
            let pair = label_pair_with(read_source(input)?, &pair_id(input)?, &cfg)?;
            let truth = match &layer {
                Some(l) => apply_corrections(pair.truth(), l)?,
                None => pair.truth().clone(),
            };
            write_binary_map(&truth, out)?;
        }
        (None, Some(root)) => {
            let split = parse_split(a.split.as_deref().or(file.split.as_deref()), "train")?
                .ok_or_else(|| CliError::usage("pairs are added to either train or test"))?;
            let sources = a
                .inputs
                .iter()
                .map(|p| Ok((pair_id(p)?, read_source(p)?)))
                .collect::<Result<Vec<_>>>()?;
            for (i, (id, _)) in sources.iter().enumerate() {
                if sources[..i].iter().any(|(other, _)| other == id) {
                    return Err(CliError::usage(format!("two inputs map to pair id `{id}`")));
                }
            }
            let mut manifest = if root.join(hdadbin_core::dataset::MANIFEST_FILE).exists() {
                Manifest::load(root)?
            } else {
                Manifest::default()
            };
            for (id, src) in sources {
                let pair = label_pair_with(src, &id, &cfg)?;
                write_pair(root, &pair, None)?;
                manifest.pairs.retain(|e| e.id != id);
                manifest.pairs.push(ManifestEntry {
                    id,
                    split,
                    provenance: pair.provenance().into(),
                });
            }
            manifest.save(root)?;
        }
        _ => return Err(CliError::usage("give either --out or --dataset")),
    }
    Ok(())
}

fn train_config(a: &TrainingArgs, f: &FileConfig) -> Result<TrainConfig> {
    let d = TrainConfig::default();
    let cfg = TrainConfig {
        epochs: a.epochs.or(f.epochs).unwrap_or(d.epochs),
        batch_size: a.batch_size.or(f.batch_size).unwrap_or(d.batch_size),
        learning_rate: a.learning_rate.or(f.learning_rate).unwrap_or(d.learning_rate),
        beta1: a.beta1.or(f.beta1).unwrap_or(d.beta1),
        beta2: a.beta2.or(f.beta2).unwrap_or(d.beta2),
        epsilon: a.epsilon.or(f.epsilon).unwrap_or(d.epsilon),
        seed: a.seed.or(f.seed).unwrap_or(d.seed),
        input_channels: a.input_channels.or(f.input_channels).unwrap_or(d.input_channels),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn train(a: TrainArgs, file: &FileConfig) -> Result<()> {
    let cfg = train_config(&a.training, file)?;
    let split = parse_split(a.split.as_deref().or(file.split.as_deref()), "train")?;
    check_output(&a.output)?;
    let pairs = load_pairs(&a.pairs, split)?;
    eprintln!("training on {} pairs for {} epochs", pairs.len(), cfg.epochs);
    let outcome = train_with(&pairs, &cfg, |epoch, loss| {
        eprintln!("epoch {}/{} loss {loss:.6}", epoch + 1, cfg.epochs);
    })?;
    save_model(&outcome.model, &a.output)?;
    Ok(())
}

fn infer(a: InferArgs, file: &FileConfig) -> Result<()> {
    let params = MethodArgs {
        model: a.model,
        precision: a.precision,
        ..MethodArgs::default()
    };
    let settings = MethodSettings::resolve(&params, file)?;
    check_output(&a.output)?;
    let cnn = settings.cnn()?;
    let map = cnn.binarize_source(&read_source(&a.input)?)?;
    write_binary_map(&map, &a.output)?;
    Ok(())
}

fn evaluate(method: &dyn Binarizer, pairs: &[HdadPair], aggregation: Aggregation) -> Result<EvalReport> {
    Ok(evaluate_dataset(method, pairs, aggregation)?)
}

fn eval(a: EvalArgs, file: &FileConfig) -> Result<()> {
    let method = method_name(a.method.as_deref(), file)?;
    let settings = MethodSettings::resolve(&a.params, file)?;
    let aggregation = parse_aggregation(a.aggregation.as_deref().or(file.aggregation.as_deref()))?;
    let split = parse_split(a.split.as_deref(), "test")?;
    if let Some(csv) = &a.csv {
        check_output(csv)?;
    }
    let binarizer = settings.binarizer(method, true)?;
    let pairs = load_pairs(&a.pairs, split)?;
    let report = evaluate(binarizer.as_ref(), &pairs, aggregation)?;
    print!("{}", report.render_rows());
    if let Some(csv) = &a.csv {
        std::fs::write(csv, report.to_csv()).map_err(|e| CliError::io(csv, e))?;
    }
    Ok(())
}

fn compare(a: CompareArgs, file: &FileConfig) -> Result<()> {
    let settings = MethodSettings::resolve(&a.params, file)?;
    let aggregation = parse_aggregation(a.aggregation.as_deref().or(file.aggregation.as_deref()))?;
    let split = parse_split(a.split.as_deref(), "test")?;
    let binarizers = a
        .methods
        .iter()
        .map(|m| settings.binarizer(m.trim(), false))
        .collect::<Result<Vec<_>>>()?;
    let pairs = load_pairs(&a.pairs, split)?;
    let reports = binarizers
        .iter()
        .map(|b| evaluate(b.as_ref(), &pairs, aggregation))
        .collect::<Result<Vec<_>>>()?;
    print!("{}", render_comparison(&reports));
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let pipeline_truth = match a.truth.as_str() {
        "mask" => false,
        "pipeline" => true,
        other => return Err(CliError::usage(format!("unknown truth source `{other}` (expected mask or pipeline)"))),
    };
    let seed = a.seed.unwrap_or(1);
    let mut manifest = Manifest::default();
    let jobs = (0..a.train).map(|i| (Split::Train, i)).chain((0..a.test).map(|i| (Split::Test, i)));
    for (n, (split, i)) in jobs.enumerate() {
        let sample = generate(&SynthConfig::new(a.width, a.height, seed.wrapping_add(n as u64)));
        let id = format!("{}-{i:03}", if split == Split::Train { "train" } else { "test" });
        let pair = if pipeline_truth {
            label_pair_with(sample.image, &id, &LabelingConfig::default())?
        } else {
            HdadPair::new(id.clone(), sample.image.into(), sample.mask, Provenance::Corrected)?
        };
        write_pair(&a.output, &pair, None)?;
        manifest.pairs.push(ManifestEntry {
            id,
            split,
            provenance: pair.provenance().into(),
        });
    }
    manifest.save(&a.output)?;
    Ok(())
}
