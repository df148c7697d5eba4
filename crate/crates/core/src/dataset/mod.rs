//! Manifests, antithetical counterparts and the synthetic identity corpus.

mod antithetical;
mod manifest;
mod synth;

pub use antithetical::{
    downsample_counterpart, draw_downsample_factor, enhance_classical, enhance_external,
    generate_antithetical, AugmentConfig, Enhancer, UNSHARP_AMOUNT, UNSHARP_SIGMA,
};
pub use manifest::{load_manifest, save_manifest, Manifest, Origin, SampleRecord};
pub use synth::{render_identity_image, synth_corpus, synth_samples, SynthConfig, SynthCorpus, SynthSample};
