use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::metric::{ccl, softmax_ce, total_loss, CenterBank, EmbeddingBatch, LossWeights};
use crate::rng::{self, streams};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelConfig {
    pub input_h: usize,
    pub input_w: usize,
    /// Hidden widths; the last one is the embedding dimension.
    pub hidden: Vec<usize>,
    pub num_identities: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(num_identities: usize, seed: u64) -> Self {
        Self { input_h: 32, input_w: 16, hidden: vec![256, 128], num_identities, seed }
    }

    pub fn input_dim(&self) -> usize {
        self.input_h * self.input_w
    }

    pub fn embedding_dim(&self) -> usize {
        self.hidden.last().copied().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_h == 0 || self.input_w == 0 {
            return Err(Error::InvalidInput("input dimensions must be positive".into()));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::InvalidInput(format!(
                "hidden widths must be non-empty and positive, got {:?}",
                self.hidden
            )));
        }
        if self.num_identities < 2 {
            return Err(Error::InvalidInput(format!(
                "classification needs at least 2 identities, got {}",
                self.num_identities
            )));
        }
        Ok(())
    }
}

/// Affine layer with `weights` stored `outputs x inputs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub weights: Grid,
    pub bias: Vec<f64>,
}

impl Dense {
    fn glorot<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = (6.0 / (inputs + outputs) as f64).sqrt();
        let w = (0..inputs * outputs).map(|_| rng.random_range(-bound..bound)).collect();
        Self { weights: Grid::from_vec(outputs, inputs, w).expect("sized"), bias: vec![0.0; outputs] }
    }

    pub fn inputs(&self) -> usize {
        self.weights.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.rows()
    }

    fn apply(&self, x: &Grid, relu: bool) -> Grid {
        let mut out = Grid::zeros(x.rows(), self.outputs());
        for b in 0..x.rows() {
            let xin = x.row(b);
            for (o, dst) in out.row_mut(b).iter_mut().enumerate() {
                let z = self.bias[o] + self.weights.row(o).iter().zip(xin).map(|(w, v)| w * v).sum::<f64>();
                *dst = if relu { z.max(0.0) } else { z };
            }
        }
        out
    }

    /// Parameter gradients for upstream `dz`, and `dx` when requested.
    fn backward(&self, x: &Grid, dz: &Grid, want_dx: bool) -> (Grid, Vec<f64>, Option<Grid>) {
        let mut dw = Grid::zeros(self.outputs(), self.inputs());
        let mut db = vec![0.0; self.outputs()];
        for b in 0..x.rows() {
            let xin = x.row(b);
            for (o, &g) in dz.row(b).iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                db[o] += g;
                for (d, v) in dw.row_mut(o).iter_mut().zip(xin) {
                    *d += g * v;
                }
            }
        }
        let dx = want_dx.then(|| {
            let mut dx = Grid::zeros(x.rows(), self.inputs());
            for b in 0..x.rows() {
                for (o, &g) in dz.row(b).iter().enumerate() {
                    if g == 0.0 {
                        continue;
                    }
                    for (d, w) in dx.row_mut(b).iter_mut().zip(self.weights.row(o)) {
                        *d += g * w;
                    }
                }
            }
            dx
        });
        (dw, db, dx)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub input_h: usize,
    pub input_w: usize,
    pub hidden: Vec<Dense>,
    pub head: Dense,
    pub centers: CenterBank,
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    pub inputs: Grid,
    /// Rectified output of every hidden layer; the last is the embedding.
    pub activations: Vec<Grid>,
    pub logits: Grid,
}

impl ForwardCache {
    pub fn embeddings(&self) -> &Grid {
        self.activations.last().expect("at least one hidden layer")
    }
}

/// Gradients shaped like the model parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub hidden: Vec<(Grid, Vec<f64>)>,
    pub head: (Grid, Vec<f64>),
    pub centers: Grid,
}

pub fn init_model(cfg: &ModelConfig) -> Result<Model> {
    cfg.validate()?;
    let mut rng = rng::stream(cfg.seed, streams::MODEL_INIT);
    let mut hidden = Vec::with_capacity(cfg.hidden.len());
    let mut fan_in = cfg.input_dim();
    for &width in &cfg.hidden {
        hidden.push(Dense::glorot(fan_in, width, &mut rng));
        fan_in = width;
    }
    let head = Dense::glorot(fan_in, cfg.num_identities, &mut rng);
    let centers = (0..cfg.num_identities * fan_in).map(|_| rng.random_range(0.01..0.1)).collect();
    Ok(Model {
        input_h: cfg.input_h,
        input_w: cfg.input_w,
        hidden,
        head,
        centers: CenterBank::new(Grid::from_vec(cfg.num_identities, fan_in, centers)?),
    })
}

impl Model {
    pub fn input_dim(&self) -> usize {
        self.input_h * self.input_w
    }

    pub fn embedding_dim(&self) -> usize {
        self.head.inputs()
    }

    pub fn num_identities(&self) -> usize {
        self.head.outputs()
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.hidden.iter().map(Dense::outputs).collect()
    }

    pub fn matches(&self, cfg: &ModelConfig) -> bool {
        self.input_h == cfg.input_h
            && self.input_w == cfg.input_w
            && self.hidden_widths() == cfg.hidden
            && self.num_identities() == cfg.num_identities
    }

    pub fn forward_cached(&self, inputs: &Grid) -> Result<ForwardCache> {
        if inputs.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "model expects {} inputs per row, got {}",
                self.input_dim(),
                inputs.cols()
            )));
        }
        let mut activations: Vec<Grid> = Vec::with_capacity(self.hidden.len());
        for layer in &self.hidden {
            let x = activations.last().unwrap_or(inputs);
            activations.push(layer.apply(x, true));
        }
        let logits = self.head.apply(activations.last().expect("hidden layers"), false);
        Ok(ForwardCache { inputs: inputs.clone(), activations, logits })
    }

    /// `(embeddings, logits)` for a `B x input_dim` batch.
    pub fn forward(&self, inputs: &Grid) -> Result<(Grid, Grid)> {
        let mut cache = self.forward_cached(inputs)?;
        let emb = cache.activations.pop().expect("hidden layers");
        Ok((emb, cache.logits))
    }

    pub fn embed(&self, inputs: &Grid) -> Result<Grid> {
        Ok(self.forward(inputs)?.0)
    }

    /// Backpropagates `grad_logits` through the head and `grad_embeddings`
    /// (metric losses) into the hidden stack. Either may be empty.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_logits: &Grid,
        grad_embeddings: &Grid,
        grad_centers: &Grid,
    ) -> Result<Gradients> {
        let batch = cache.inputs.rows();
        let emb = cache.embeddings();
        let (head_w, head_b, d_emb) = if grad_logits.is_empty() {
            (
                Grid::zeros(self.head.outputs(), self.head.inputs()),
                vec![0.0; self.head.outputs()],
                Grid::zeros(batch, self.embedding_dim()),
            )
        } else {
            let (w, b, dx) = self.head.backward(emb, grad_logits, true);
            (w, b, dx.expect("requested"))
        };
        let mut upstream = d_emb;
        upstream.add_scaled(grad_embeddings, 1.0)?;

        let mut hidden = vec![(Grid::empty(), Vec::new()); self.hidden.len()];
        for l in (0..self.hidden.len()).rev() {
            let act = &cache.activations[l];
            for (g, &a) in upstream.as_mut_slice().iter_mut().zip(act.as_slice()) {
                if a <= 0.0 {
                    *g = 0.0;
                }
            }
            let x = if l == 0 { &cache.inputs } else { &cache.activations[l - 1] };
            let (dw, db, dx) = self.hidden[l].backward(x, &upstream, l > 0);
            hidden[l] = (dw, db);
            if let Some(dx) = dx {
                upstream = dx;
            }
        }
        let mut centers = Grid::zeros(self.centers.len(), self.centers.dim());
        centers.add_scaled(grad_centers, 1.0)?;
        Ok(Gradients { hidden, head: (head_w, head_b), centers })
    }

    /// Parameters in a fixed order: hidden (weights, bias)..., head, centers.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in self.hidden.iter().chain(std::iter::once(&self.head)) {
            out.extend_from_slice(layer.weights.as_slice());
            out.extend_from_slice(&layer.bias);
        }
        out.extend_from_slice(self.centers.centers.as_slice());
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.hidden
            .iter()
            .chain(std::iter::once(&self.head))
            .map(|l| l.weights.as_slice().len() + l.bias.len())
            .sum::<usize>()
            + self.centers.centers.as_slice().len()
    }

    pub fn assign(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_parameters() {
            return Err(Error::Shape(format!(
                "{} values for {} parameters",
                params.len(),
                self.num_parameters()
            )));
        }
        let mut rest = params;
        let mut take = |dst: &mut [f64]| {
            let (head, tail) = rest.split_at(dst.len());
            dst.copy_from_slice(head);
            rest = tail;
        };
        for layer in self.hidden.iter_mut().chain(std::iter::once(&mut self.head)) {
            take(layer.weights.as_mut_slice());
            take(&mut layer.bias);
        }
        take(self.centers.centers.as_mut_slice());
        Ok(())
    }
}

impl Gradients {
    /// Same order as [`Model::flatten`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.hidden.iter().chain(std::iter::once(&self.head)) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
        out.extend_from_slice(self.centers.as_slice());
        out
    }
}

/// Finite-difference check of the full classification + contrastive center
/// objective on a 4-input, 3-hidden, 2-identity model with 4 samples.
pub fn network_gradcheck(seed: u64) -> Result<f64> {
    let labels = vec![0usize, 1, 0, 1];
    let weights = LossWeights { alpha: 0.5, beta: 0.5, ..LossWeights::default() };
    let mut rng = rng::stream(seed, 1);
    // retry until no pre-activation sits near the ReLU kink
    let (model, inputs) = loop {
        let cfg =
            ModelConfig { input_h: 2, input_w: 2, hidden: vec![3], num_identities: 2, seed: rng.random() };
        let mut model = init_model(&cfg)?;
        model.centers.centers.as_mut_slice().iter_mut().for_each(|c| *c = rng.random_range(-1.0..1.0));
        model.hidden[0].bias.iter_mut().for_each(|b| *b = rng.random_range(-0.2..0.2));
        let inputs = Grid::from_vec(4, 4, (0..16).map(|_| rng.random_range(0.0..1.0)).collect())?;
        let pre = model.hidden[0].apply(&inputs, false);
        let emb = model.hidden[0].apply(&inputs, true);
        let live_rows = (0..4).all(|r| emb.row(r).iter().any(|&v| v > 0.0));
        if pre.as_slice().iter().all(|z| z.abs() > 1e-2) && live_rows {
            break (model, inputs);
        }
    };
    let mut probe = model.clone();
    crate::metric::finite_diff_check(
        |p| {
            probe.assign(p)?;
            let cache = probe.forward_cached(&inputs)?;
            let ce = softmax_ce(&cache.logits, &labels)?;
            let batch = EmbeddingBatch::new(cache.embeddings().clone(), labels.clone())?;
            let metric = ccl(&batch, &probe.centers, &weights)?;
            let total = total_loss(&ce, &metric)?;
            let grads =
                probe.backward(&cache, &total.grad_logits, &total.grad_features, &total.grad_centers)?;
            Ok((total.value, grads.flatten()))
        },
        &model.flatten(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Model {
        Model {
            input_h: 1,
            input_w: 2,
            hidden: vec![Dense {
                weights: Grid::from_rows(&[vec![1.0, -1.0], vec![0.5, 2.0]]).unwrap(),
                bias: vec![0.0, -1.0],
            }],
            head: Dense {
                weights: Grid::from_rows(&[vec![1.0, 1.0], vec![-2.0, 0.5]]).unwrap(),
                bias: vec![0.5, 0.0],
            },
            centers: CenterBank::new(Grid::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()),
        }
    }

    #[test]
    fn hand_computed_forward() {
        let x = Grid::from_rows(&[vec![3.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let (emb, logits) = tiny().forward(&x).unwrap();
        // row 0: z = (2, 2.5) -> relu (2, 2.5); logits = (4.5 + 0.5, -4 + 1.25)
        // row 1: z = (-1, 3.5) -> relu (0, 3.5); logits = (3.5 + 0.5, 1.75)
        assert_eq!(emb.row(0), &[2.0, 2.5]);
        assert_eq!(emb.row(1), &[0.0, 3.5]);
        assert_eq!(logits.row(0), &[5.0, -2.75]);
        assert_eq!(logits.row(1), &[4.0, 1.75]);
    }

    #[test]
    fn zero_weights_give_zero_outputs() {
        let mut m = tiny();
        let zeros = vec![0.0; m.num_parameters()];
        m.assign(&zeros).unwrap();
        let (emb, logits) = m.forward(&Grid::zeros(3, 2)).unwrap();
        assert_eq!(emb.max_abs() + logits.max_abs(), 0.0);
    }

    #[test]
    fn init_contract() {
        let cfg = ModelConfig::new(10, 4);
        let a = init_model(&cfg).unwrap();
        assert_eq!(a, init_model(&cfg).unwrap());
        assert!(a.hidden.iter().chain([&a.head]).all(|l| l.bias.iter().all(|&b| b == 0.0)));
        assert!(a.centers.centers.as_slice().iter().all(|c| (0.01..0.1).contains(c)));
        let mut sizes = vec![cfg.input_dim()];
        sizes.extend(&cfg.hidden);
        sizes.push(10);
        for (layer, pair) in a.hidden.iter().chain([&a.head]).zip(sizes.windows(2)) {
            let bound = (6.0 / (pair[0] + pair[1]) as f64).sqrt();
            assert!(layer.weights.as_slice().iter().all(|w| w.abs() <= bound));
        }
        assert!(init_model(&ModelConfig { hidden: vec![], ..cfg.clone() }).is_err());
        assert!(init_model(&ModelConfig { num_identities: 1, ..cfg }).is_err());
    }

    #[test]
    fn embeddings_are_rectified() {
        let m = init_model(&ModelConfig {
            input_h: 4,
            input_w: 4,
            hidden: vec![8, 6],
            num_identities: 3,
            seed: 1,
        })
        .unwrap();
        let x = Grid::from_vec(5, 16, (0..80).map(|i| ((i * 37) % 11) as f64 / 5.0 - 1.0).collect()).unwrap();
        assert!(m.embed(&x).unwrap().as_slice().iter().all(|&v| v >= 0.0));
        assert!(m.forward(&Grid::zeros(1, 15)).is_err());
    }

    #[test]
    fn flatten_assign_round_trip() {
        let mut m =
            init_model(&ModelConfig { input_h: 2, input_w: 3, hidden: vec![4], num_identities: 2, seed: 0 })
                .unwrap();
        let p = m.flatten();
        assert_eq!(p.len(), m.num_parameters());
        let shifted: Vec<f64> = p.iter().map(|v| v + 1.0).collect();
        m.assign(&shifted).unwrap();
        assert_eq!(m.flatten(), shifted);
        assert!(m.assign(&p[1..]).is_err());
    }

    #[test]
    fn objective_gradients_match_finite_differences() {
        for seed in 0..5 {
            let err = network_gradcheck(seed).unwrap();
            assert!(err < 1e-5, "seed {seed}: {err}");
        }
    }
}
