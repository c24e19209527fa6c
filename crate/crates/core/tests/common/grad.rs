//! Central finite differences against the hand-written backward passes.

use codestyle_core::contrastive::info_nce_raw;
use codestyle_core::lexloc::lex_lenient;
use codestyle_core::nn::{CodeInput, CodeTowerConfig, EncoderConfig, EncoderModel, Matrix, Parameters, StyleTowerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SNIPPETS: [&str; 4] = [
    "def f(a, b):\n    return a + b\n",
    "for itemCount in range(10):\n    total += itemCount  # running\n",
    "class Box:\n\tdef get(self):\n\t\treturn self.VALUE\n",
    "x = [1, 2, 3]\nprint(len(x), 'done')\n",
];

pub fn small_config() -> EncoderConfig {
    EncoderConfig {
        style: StyleTowerConfig { dims: vec![34, 8, 8, 8, 16], residual_from: 2 },
        code: CodeTowerConfig { buckets: 64, embed_dim: 8, hidden: 8, output: 16, hash_seed: 7 },
    }
}

pub struct Problem {
    pub model: EncoderModel<f64>,
    pub codes: Vec<CodeInput<f64>>,
    pub styles: Matrix<f64>,
    pub tau: f64,
}

impl Problem {
    pub fn new(seed: u64) -> Self {
        let mut model = EncoderModel::<f64>::init(small_config(), seed).unwrap();
        // non-zero biases keep every embedding away from the origin, where
        // normalization has no gradient
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb1a5);
        for t in model.tensors_mut().into_iter().filter(|t| t.name.ends_with(".b")) {
            t.data.iter_mut().for_each(|v| *v = rng.gen_range(-0.1..0.1));
        }
        let codes = SNIPPETS.iter().map(|s| model.code.encode(&lex_lenient(s)).unwrap()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
        let styles = Matrix::from_vec(SNIPPETS.len(), 34, (0..SNIPPETS.len() * 34).map(|_| rng.gen_range(0.0..1.0)).collect());
        Problem { model, codes, styles, tau: 0.5 }
    }

    pub fn loss(&self, model: &EncoderModel<f64>) -> f64 {
        let (a, _) = model.code.forward_cached(&self.codes).unwrap();
        let p = model.style.forward(&self.styles).unwrap();
        info_nce_raw(&a, &p, self.tau, true).unwrap().loss
    }

    /// Distance of the closest ReLU pre-activation from its kink. Finite
    /// differences are meaningless when a step can cross it.
    pub fn kink_margin(&self) -> f64 {
        let (_, sc) = self.model.style.forward_cached(&self.styles).unwrap();
        let layers = &self.model.style.layers;
        let mut pre: Vec<f64> = Vec::new();
        for (layer, act) in layers[..layers.len() - 1].iter().zip(&sc.acts) {
            pre.extend(layer.forward(act).data);
        }
        let (_, cc) = self.model.code.forward_cached(&self.codes).unwrap();
        pre.extend(self.model.code.hidden.forward(&cc.pooled).data);
        pre.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }

    pub fn analytic(&self) -> EncoderModel<f64> {
        let (a, cc) = self.model.code.forward_cached(&self.codes).unwrap();
        let (p, sc) = self.model.style.forward_cached(&self.styles).unwrap();
        let out = info_nce_raw(&a, &p, self.tau, true).unwrap();
        let code = self.model.code.backward(&cc, &out.d_anchor).unwrap();
        let (style, _) = self.model.style.backward(&sc, &out.d_positive).unwrap();
        EncoderModel { style, code }
    }
}

/// Largest relative error over every parameter, with `|a − n| / max(|a|, |n|, 1e-5)`.
pub fn max_relative_error(seed: u64, h: f64) -> (f64, usize) {
    let problem = Problem::new(seed);
    let grads = problem.analytic();
    let analytic: Vec<f64> = grads.tensors().iter().flat_map(|t| t.data.iter().copied()).collect();
    let mut worst = 0.0f64;
    let mut probe = problem.model.clone();
    let mut k = 0;
    let counts: Vec<usize> = problem.model.tensors().iter().map(|t| t.data.len()).collect();
    for (ti, n) in counts.iter().enumerate() {
        for i in 0..*n {
            let orig = probe.tensors()[ti].data[i];
            probe.tensors_mut()[ti].data[i] = orig + h;
            let up = problem.loss(&probe);
            probe.tensors_mut()[ti].data[i] = orig - h;
            let down = problem.loss(&probe);
            probe.tensors_mut()[ti].data[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic[k];
            let e = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-5);
            worst = worst.max(e);
            k += 1;
        }
    }
    (worst, k)
}
