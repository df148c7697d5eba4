use super::TrainConfig;

/// Flat at `lr0` before `decay_start_epoch`, then exponential decay that
/// reaches `lr0 * decay_base` at epoch `epochs`.
pub fn lr_at(epoch: usize, cfg: &TrainConfig) -> f64 {
    if epoch < cfg.decay_start_epoch || cfg.epochs <= cfg.decay_start_epoch {
        return cfg.lr0;
    }
    let span = (cfg.epochs - cfg.decay_start_epoch) as f64;
    let progress = (epoch - cfg.decay_start_epoch) as f64 / span;
    cfg.lr0 * cfg.decay_base.powf(progress)
}
