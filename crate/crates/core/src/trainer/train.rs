use std::collections::BTreeMap;
use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;

use super::checkpoint::save_model;
use super::model::{init_model, Model, ModelConfig};
use super::sampler::pk_sample_labels;
use super::schedule::lr_at;
use crate::dataset::Manifest;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::imaging::{
    hflip, load_image, random_erase, resize, to_grayscale, EraseConfig, Image, ResampleFilter,
};
use crate::metric::{
    inter_loss_with, intra_loss, softmax_ce, trihard, EmbeddingBatch, LossOutput, LossWeights,
    CENTER_NORM_FLOOR,
};
use crate::parallel::ordered_map;
use crate::rng::{self, streams};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LossMode {
    #[default]
    Softmax,
    /// Cross-entropy plus the center-attraction term only.
    SoftmaxCenter,
    SoftmaxCcl,
    SoftmaxTrihard,
}

impl LossMode {
    pub const ALL: [LossMode; 4] =
        [LossMode::Softmax, LossMode::SoftmaxCenter, LossMode::SoftmaxCcl, LossMode::SoftmaxTrihard];

    pub fn as_str(self) -> &'static str {
        match self {
            LossMode::Softmax => "softmax",
            LossMode::SoftmaxCenter => "softmax+center",
            LossMode::SoftmaxCcl => "softmax+ccl",
            LossMode::SoftmaxTrihard => "softmax+trihard",
        }
    }
}

impl fmt::Display for LossMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LossMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown loss mode `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr0: f64,
    pub weight_decay: f64,
    pub momentum: f64,
    pub decay_start_epoch: usize,
    pub decay_base: f64,
    pub loss_mode: LossMode,
    pub weights: LossWeights,
    /// `(P, K)` identity-balanced batches. Batch-hard mining falls back to
    /// `(batch_size / 4, 4)` when unset.
    pub pk: Option<(usize, usize)>,
    pub hflip: bool,
    pub random_erase: bool,
    pub input_h: usize,
    pub input_w: usize,
    pub hidden: Vec<usize>,
    pub seed: u64,
    pub threads: usize,
    pub checkpoint: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 60,
            batch_size: 60,
            lr0: 0.01,
            weight_decay: 5e-4,
            momentum: 0.0,
            decay_start_epoch: 20,
            decay_base: 0.1,
            loss_mode: LossMode::Softmax,
            weights: LossWeights::default(),
            pk: None,
            hflip: true,
            random_erase: true,
            input_h: 32,
            input_w: 16,
            hidden: vec![256, 128],
            seed: 0,
            threads: 1,
            checkpoint: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidInput("epochs must be at least 1".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::InvalidInput(format!(
                "batch size must be at least 2, got {}",
                self.batch_size
            )));
        }
        for (name, v) in [
            ("learning rate", self.lr0),
            ("weight decay", self.weight_decay),
            ("momentum", self.momentum),
            ("decay base", self.decay_base),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInput(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if self.momentum >= 1.0 {
            return Err(Error::InvalidInput(format!("momentum must be below 1, got {}", self.momentum)));
        }
        if let Some((p, k)) = self.pk {
            if p < 2 || k < 1 {
                return Err(Error::InvalidInput(format!(
                    "PK sampling needs P >= 2 and K >= 1, got ({p}, {k})"
                )));
            }
        }
        self.weights.validate()
    }

    pub fn model_config(&self, num_identities: usize) -> ModelConfig {
        ModelConfig {
            input_h: self.input_h,
            input_w: self.input_w,
            hidden: self.hidden.clone(),
            num_identities,
            seed: self.seed,
        }
    }

    fn effective_pk(&self) -> Option<(usize, usize)> {
        match (self.pk, self.loss_mode) {
            (Some(pk), _) => Some(pk),
            (None, LossMode::SoftmaxTrihard) => Some(((self.batch_size / 4).max(2), 4)),
            (None, _) => None,
        }
    }
}

/// Plain SGD with L2 weight decay and an optional momentum buffer.
#[derive(Clone, Debug, Default)]
pub struct Sgd {
    pub momentum: f64,
    velocity: Vec<f64>,
}

impl Sgd {
    pub fn new(momentum: f64) -> Self {
        Self { momentum, velocity: Vec::new() }
    }

    /// `p <- p - lr * (g + wd * p)`, through the momentum buffer when enabled.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64, weight_decay: f64) {
        debug_assert_eq!(params.len(), grads.len());
        if self.momentum == 0.0 {
            for (p, g) in params.iter_mut().zip(grads) {
                *p -= lr * (g + weight_decay * *p);
            }
            return;
        }
        if self.velocity.len() != params.len() {
            self.velocity = vec![0.0; params.len()];
        }
        for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut self.velocity) {
            *v = self.momentum * *v + g + weight_decay * *p;
            *p -= lr * *v;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainBatch {
    /// `B x input_dim`, values in `[0, 1]`.
    pub inputs: Grid,
    /// Contiguous class indices.
    pub labels: Vec<usize>,
}

/// Unweighted loss components of one step; `total` is the optimized value.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepRecord {
    pub ce: f64,
    pub intra: f64,
    pub inter: f64,
    pub trihard: f64,
    pub total: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub ce: f64,
    pub intra: f64,
    pub inter: f64,
    pub trihard: f64,
    pub total: f64,
    pub seconds: f64,
}

impl EpochRecord {
    /// Equality ignoring wall time.
    pub fn same_values(&self, other: &EpochRecord) -> bool {
        EpochRecord { seconds: 0.0, ..*self } == EpochRecord { seconds: 0.0, ..*other }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Dataset identity of each class index.
    pub identities: Vec<u32>,
}

/// Forward, loss, backward and one SGD update. Returns the loss record of the
/// pre-update parameters.
pub fn train_step(
    model: &mut Model,
    sgd: &mut Sgd,
    batch: &TrainBatch,
    cfg: &TrainConfig,
    lr: f64,
) -> Result<StepRecord> {
    if batch.labels.is_empty() {
        return Err(Error::InvalidInput("empty training batch".into()));
    }
    let cache = model.forward_cached(&batch.inputs)?;
    let ce = softmax_ce(&cache.logits, &batch.labels)?;
    let mut record = StepRecord { ce: ce.value, ..StepRecord::default() };
    let embeddings = EmbeddingBatch::new(cache.embeddings().clone(), batch.labels.clone())?;
    let w = &cfg.weights;
    let mut total = ce;
    match cfg.loss_mode {
        LossMode::Softmax => {}
        LossMode::SoftmaxCenter | LossMode::SoftmaxCcl => {
            let intra = intra_loss(&embeddings, &model.centers)?;
            record.intra = intra.value;
            total = total.add_scaled(&intra, w.alpha)?;
            if cfg.loss_mode == LossMode::SoftmaxCcl {
                let inter = inter_loss_with(&batch.labels, &model.centers, w.inter_normalization)?;
                record.inter = inter.value;
                total = total.add_scaled(&inter, w.beta)?;
            }
        }
        LossMode::SoftmaxTrihard => {
            let t = trihard(&embeddings, w)?;
            record.trihard = t.value;
            total = total.add_scaled(&t, 1.0)?;
        }
    }
    record.total = total.value;
    if !total.value.is_finite() {
        return Err(Error::NonFinite(format!(
            "training loss is {} (ce {}, intra {}, inter {}, trihard {})",
            total.value, record.ce, record.intra, record.inter, record.trihard
        )));
    }
    let LossOutput { grad_logits, grad_features, grad_centers, .. } = total;
    let grads = model.backward(&cache, &grad_logits, &grad_features, &grad_centers)?.flatten();
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("gradient".into()));
    }
    let mut params = model.flatten();
    sgd.step(&mut params, &grads, lr, cfg.weight_decay);
    model.assign(&params)?;
    model.centers.enforce_norm_floor(CENTER_NORM_FLOOR);
    Ok(record)
}

/// Grayscale, resized network inputs with their class labels.
#[derive(Clone, Debug)]
pub struct TrainingPool {
    pub images: Vec<Image>,
    pub labels: Vec<usize>,
    pub identities: Vec<u32>,
}

impl TrainingPool {
    /// Merges the manifests into one pool. Classes are the sorted identities
    /// of `original`; `extra` may only use those identities.
    pub fn build(
        original: &Manifest,
        extra: Option<&Manifest>,
        h: usize,
        w: usize,
        threads: usize,
    ) -> Result<Self> {
        let identities = original.identities();
        if original.is_empty() {
            return Err(Error::InvalidInput("training pool is empty".into()));
        }
        let class_of: BTreeMap<u32, usize> = identities.iter().enumerate().map(|(c, &id)| (id, c)).collect();
        let mut images = prepare_images(original, h, w, threads)?;
        let mut labels: Vec<usize> = original.records.iter().map(|r| class_of[&r.identity]).collect();
        if let Some(extra) = extra {
            let mut extra_labels = Vec::with_capacity(extra.len());
            for r in &extra.records {
                let c = class_of.get(&r.identity).ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "{} has identity {} which the original manifest lacks",
                        r.path.display(),
                        r.identity
                    ))
                })?;
                extra_labels.push(*c);
            }
            images.extend(prepare_images(extra, h, w, threads)?);
            labels.extend(extra_labels);
        }
        Ok(Self { images, labels, identities })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Loads every record as a grayscale image of size `h x w`.
pub fn prepare_images(manifest: &Manifest, h: usize, w: usize, threads: usize) -> Result<Vec<Image>> {
    ordered_map(&manifest.records, threads, |_, r| {
        let img = load_image(manifest.resolve(&r.path))?;
        Ok(resize(&to_grayscale(&img), h, w, ResampleFilter::Bilinear))
    })
    .into_iter()
    .collect()
}

/// Flattens a grayscale image to `[0, 1]` inputs.
pub fn image_to_input(img: &Image) -> Vec<f64> {
    to_grayscale(img).pixels().iter().map(|&p| f64::from(p) / 255.0).collect()
}

pub fn images_to_grid(images: &[Image]) -> Result<Grid> {
    let cols = images.first().map_or(0, |i| i.height() * i.width());
    let mut data = Vec::with_capacity(images.len() * cols);
    for img in images {
        data.extend(image_to_input(img));
    }
    Grid::from_vec(images.len(), cols, data)
}

/// Embeddings for every record of `manifest`, one row per record.
pub fn embed_manifest(model: &Model, manifest: &Manifest, threads: usize) -> Result<Grid> {
    let images = prepare_images(manifest, model.input_h, model.input_w, threads)?;
    model.embed(&images_to_grid(&images)?)
}

fn epoch_batches<R: Rng + ?Sized>(
    pool: &TrainingPool,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    match cfg.effective_pk() {
        Some((p, k)) => {
            let labels: Vec<u32> = pool.labels.iter().map(|&c| c as u32).collect();
            let count = pool.len().div_ceil(p * k);
            (0..count).map(|_| pk_sample_labels(&labels, p, k, rng)).collect()
        }
        None => {
            let mut order: Vec<usize> = (0..pool.len()).collect();
            order.shuffle(rng);
            Ok(order.chunks(cfg.batch_size).map(<[usize]>::to_vec).collect())
        }
    }
}

fn augment<R: Rng + ?Sized>(img: &Image, cfg: &TrainConfig, rng: &mut R) -> Image {
    let mut out = if cfg.hflip && rng.random::<bool>() { hflip(img) } else { img.clone() };
    if cfg.random_erase {
        out = random_erase(&out, &EraseConfig::default(), rng).0;
    }
    out
}

/// Trains on `original` merged with `antithetical` when given. The returned
/// history holds one record per epoch.
pub fn train(
    cfg: &TrainConfig,
    original: &Manifest,
    antithetical: Option<&Manifest>,
) -> Result<(Model, TrainHistory)> {
    cfg.validate()?;
    let pool = TrainingPool::build(original, antithetical, cfg.input_h, cfg.input_w, cfg.threads)?;
    train_on_pool(cfg, &pool)
}

pub fn train_on_pool(cfg: &TrainConfig, pool: &TrainingPool) -> Result<(Model, TrainHistory)> {
    cfg.validate()?;
    if pool.is_empty() {
        return Err(Error::InvalidInput("training pool is empty".into()));
    }
    let mut model = init_model(&cfg.model_config(pool.identities.len()))?;
    let mut sgd = Sgd::new(cfg.momentum);
    let mut history =
        TrainHistory { epochs: Vec::with_capacity(cfg.epochs), identities: pool.identities.clone() };
    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        let lr = lr_at(epoch, cfg);
        let mut order_rng = rng::stream(cfg.seed, streams::EPOCH_SHUFFLE + epoch as u64);
        let mut aug_rng = rng::stream(cfg.seed, streams::EPOCH_AUGMENT + epoch as u64);
        let batches = epoch_batches(pool, cfg, &mut order_rng)?;
        let mut sum = StepRecord::default();
        for idx in &batches {
            let images: Vec<Image> =
                idx.iter().map(|&i| augment(&pool.images[i], cfg, &mut aug_rng)).collect();
            let batch = TrainBatch {
                inputs: images_to_grid(&images)?,
                labels: idx.iter().map(|&i| pool.labels[i]).collect(),
            };
            let r = train_step(&mut model, &mut sgd, &batch, cfg, lr).map_err(|e| match e {
                Error::NonFinite(what) => Error::NonFinite(format!("epoch {epoch}: {what}")),
                other => other,
            })?;
            sum.ce += r.ce;
            sum.intra += r.intra;
            sum.inter += r.inter;
            sum.trihard += r.trihard;
            sum.total += r.total;
        }
        let n = batches.len() as f64;
        history.epochs.push(EpochRecord {
            epoch,
            lr,
            ce: sum.ce / n,
            intra: sum.intra / n,
            inter: sum.inter / n,
            trihard: sum.trihard / n,
            total: sum.total / n,
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    if let Some(path) = &cfg.checkpoint {
        save_model(&model, path)?;
    }
    Ok((model, history))
}

pub const HISTORY_HEADER: &str = "epoch,lr,ce,intra,inter,trihard,total,seconds";

pub fn write_history_csv(history: &TrainHistory, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "{HISTORY_HEADER}").expect("vec write");
    for r in &history.epochs {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{:.3}",
            r.epoch, r.lr, r.ce, r.intra, r.inter, r.trihard, r.total, r.seconds
        )
        .expect("vec write");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
