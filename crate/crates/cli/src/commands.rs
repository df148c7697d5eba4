use std::path::Path;

use antithetic_core::dataset::{
    enhance_classical, generate_antithetical, load_manifest, save_manifest, synth_corpus, AugmentConfig,
    Manifest, SynthConfig,
};
use antithetic_core::evalkit::{distance_by_resolution, evaluate_model, mine_selection, triplet_histogram};
use antithetic_core::imaging::{load_image, save_image};
use antithetic_core::iqa::{partition, score_manifest, split_threshold, PartitionLabel};
use antithetic_core::metric::{standard_checks, LossWeights};
use antithetic_core::parallel::resolve_threads;
use antithetic_core::rng::{self, streams};
use antithetic_core::trainer::{
    embed_manifest, load_model, save_model, train, write_history_csv, TrainConfig,
};
use antithetic_core::{Error, Result};

use crate::{AnalyzeArgs, AugmentArgs, Cli, Command, SynthArgs, TrainArgs};

const GRADCHECK_TOLERANCE: f64 = 1e-5;

pub fn run(cli: Cli) -> Result<()> {
    let threads = resolve_threads(cli.threads);
    match cli.command {
        Command::Score { manifest, out } => {
            let scored = score_manifest(&load_manifest(&manifest)?, threads)?;
            save_manifest(&scored, &out)
        }
        Command::Split { scores, out } => split(&scores, &out),
        Command::Augment(args) => augment(args, threads),
        Command::Synth(args) => synth(args),
        Command::Train(args) => train_cmd(args, threads),
        Command::Eval { model, query, gallery, report, max_rank } => {
            let model = load_model(&model)?;
            let query = load_manifest(&query)?;
            let gallery = load_manifest(&gallery)?;
            let rep = evaluate_model(&model, &query, &gallery, max_rank, threads)?;
            rep.write_json(&report)?;
            println!(
                "rank-1 {:.4}  mAP {:.4}  ({} queries, {} skipped)",
                rep.rank1(),
                rep.map,
                rep.evaluated_queries,
                rep.skipped_queries
            );
            Ok(())
        }
        Command::AnalyzeTriplets(args) => analyze(args, threads),
        Command::Gradcheck { seed } => gradcheck(seed),
        Command::Enhance { input, output } => save_image(&enhance_classical(&load_image(&input)?), &output),
    }
}

fn split(scores: &Path, out: &Path) -> Result<()> {
    let manifest = load_manifest(scores)?;
    let values = manifest
        .records
        .iter()
        .map(|r| {
            r.sharpness.ok_or_else(|| {
                Error::InvalidInput(format!(
                    "{}: record {} has no sharpness score (run `score` first)",
                    scores.display(),
                    r.path.display()
                ))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let threshold = split_threshold(&values)?;
    let labelled = partition(&manifest, threshold)?;
    save_manifest(&labelled, out)?;
    let hr = labelled.with_partition(PartitionLabel::Hr).count();
    println!("threshold {threshold:.17e}  HR {hr}  LR {}", labelled.len() - hr);
    Ok(())
}

fn augment(args: AugmentArgs, threads: usize) -> Result<()> {
    let manifest = load_manifest(&args.manifest)?;
    let cfg = AugmentConfig { enhancer: args.enhancer, threads, ..AugmentConfig::new(args.seed) };
    let anti = generate_antithetical(&manifest, &cfg, &args.out_dir)?;
    save_manifest(&anti, args.out_dir.join("manifest.jsonl"))
}

fn synth(args: SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        height: args.height,
        width: args.width,
        blur_fraction: args.blur_fraction,
        ..SynthConfig::new(args.identities, args.per_id, args.seed)
    };
    cfg.validate()?;
    let corpus = synth_corpus(&cfg, &args.out_dir)?;
    save_manifest(&corpus.manifest, args.out_dir.join("manifest.jsonl"))?;
    if let Some(n) = args.query_per_id {
        if n == 0 || n >= args.per_id {
            return Err(Error::InvalidInput(format!(
                "--query-per-id must be between 1 and {} for {} images per identity",
                args.per_id.saturating_sub(1),
                args.per_id
            )));
        }
        let (query, gallery) = corpus.manifest.split_queries(n);
        save_manifest(&query, args.out_dir.join("query.jsonl"))?;
        save_manifest(&gallery, args.out_dir.join("gallery.jsonl"))?;
    }
    Ok(())
}

fn train_cmd(args: TrainArgs, threads: usize) -> Result<()> {
    let (input_h, input_w) = args.input;
    let cfg = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch_size,
        lr0: args.lr,
        weight_decay: args.weight_decay,
        momentum: args.momentum,
        decay_start_epoch: args.decay_start,
        decay_base: args.decay_base,
        loss_mode: args.loss,
        weights: LossWeights {
            alpha: args.alpha,
            beta: args.beta,
            margin: args.margin,
            ..LossWeights::default()
        },
        pk: args.pk,
        hflip: !args.no_hflip,
        random_erase: !args.no_erase,
        input_h,
        input_w,
        hidden: args.hidden,
        seed: args.seed,
        threads,
        ..TrainConfig::default()
    };
    let original = load_manifest(&args.manifest)?;
    let anti = args.antithetical.as_deref().map(load_manifest).transpose()?;
    let (model, history) = train(&cfg, &original, anti.as_ref())?;
    save_model(&model, &args.out)?;
    if let Some(path) = &args.history {
        write_history_csv(&history, path)?;
    }
    if let Some(last) = history.epochs.last() {
        println!("{} epochs  final loss {:.6} (ce {:.6})", history.epochs.len(), last.total, last.ce);
    }
    Ok(())
}

fn analyze(args: AnalyzeArgs, threads: usize) -> Result<()> {
    let model = load_model(&args.model)?;
    let manifest = load_manifest(&args.manifest)?;
    let bins = partitions(&manifest, &args.manifest)?;
    let features = embed_manifest(&model, &manifest, threads)?;
    let labels: Vec<u32> = manifest.records.iter().map(|r| r.identity).collect();
    let mut rng = rng::stream(args.seed, streams::TRIPLET_ANALYSIS);
    let selected = mine_selection(&features, &labels, args.p, args.k, args.rounds, &mut rng)?;
    let hist = triplet_histogram(&selected, &bins)?;
    write_text(&args.out, &hist.to_csv())?;
    if let Some(path) = &args.distances_out {
        write_text(path, &distance_by_resolution(&features, &labels, &bins)?.to_csv())?;
    }
    println!("{} triplets mined", selected.len());
    Ok(())
}

fn partitions(manifest: &Manifest, path: &Path) -> Result<Vec<PartitionLabel>> {
    manifest
        .records
        .iter()
        .map(|r| {
            r.partition.ok_or_else(|| {
                Error::InvalidInput(format!(
                    "{}: record {} has no HR/LR partition (run `split` first)",
                    path.display(),
                    r.path.display()
                ))
            })
        })
        .collect()
}

fn gradcheck(seed: u64) -> Result<()> {
    let report = standard_checks(seed)?;
    for (name, err) in &report.entries {
        let verdict = if *err < GRADCHECK_TOLERANCE { "ok" } else { "FAIL" };
        println!("{name:<18} {err:.3e}  {verdict}");
    }
    if report.all_below(GRADCHECK_TOLERANCE) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "max relative gradient error {:.3e} exceeds {GRADCHECK_TOLERANCE:e}",
            report.max_error()
        )))
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}
