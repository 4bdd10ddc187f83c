use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{Dataset, RescaleRange, Split};
use crate::{Error, Result};

/// Version tag written into persisted models.
pub const MODEL_VERSION: u32 = 1;

/// Rescaled outputs outside this interval are flagged as extrapolated.
pub const EXTRAPOLATION_BAND: (f64, f64) = (-0.05, 1.05);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Tanh => z.mapv_inplace(f64::tanh),
            Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            _ => Err(Error::invalid(format!("unknown activation '{s}' (expected tanh or relu)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for Architecture {
    fn default() -> Self {
        Self { hidden: vec![64, 32], activation: Activation::Tanh }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparameters {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self { learning_rate: 0.4, batch_size: 32, epochs: 500, seed: 0 }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid(format!("learning rate must be > 0, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::invalid("batch size and epoch count must be >= 1"));
        }
        Ok(())
    }
}

/// Costs after each epoch; epoch 0 is the initialisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_cost: f64,
    pub validation_cost: f64,
    pub test_cost: f64,
    /// Euclidean norm of the full training-set cost gradient.
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingReport {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub hyperparameters: Option<Hyperparameters>,
}

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    /// `(outputs, inputs)`.
    weights: Array2<f64>,
    biases: Array1<f64>,
}

/// Multilayer perceptron with a linear output layer. Inputs are expected
/// in `[0, 1]` and are centred to `[−1, 1]` before the first layer.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorModel {
    layers: Vec<Layer>,
    activation: Activation,
    rescale: Vec<RescaleRange>,
    report: TrainingReport,
}

/// One forward-pass result in raw target units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub values: Vec<f64>,
    pub rescaled: Vec<f64>,
    pub extrapolated: bool,
}

/// Gradient in the same flat order as [`RegressorModel::parameters`].
pub type Gradient = Vec<f64>;

impl RegressorModel {
    /// Fan-in scaled uniform initialisation, `U(−1/√n_in, 1/√n_in)`, biases zero.
    pub fn new(
        n_inputs: usize,
        arch: &Architecture,
        rescale: Vec<RescaleRange>,
        seed: u64,
    ) -> Result<Self> {
        if n_inputs == 0 || rescale.is_empty() || arch.hidden.iter().any(|&h| h == 0) {
            return Err(Error::invalid("layer sizes must be >= 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sizes = vec![n_inputs];
        sizes.extend(&arch.hidden);
        sizes.push(rescale.len());
        let layers = sizes
            .windows(2)
            .map(|w| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                Layer {
                    weights: Array2::from_shape_simple_fn((w[1], w[0]), || rng.gen_range(-bound..bound)),
                    biases: Array1::zeros(w[1]),
                }
            })
            .collect();
        Ok(Self { layers, activation: arch.activation, rescale, report: TrainingReport::default() })
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.n_inputs()];
        sizes.extend(self.layers.iter().map(|l| l.biases.len()));
        sizes
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().map_or(0, |l| l.biases.len())
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn rescale(&self) -> &[RescaleRange] {
        &self.rescale
    }

    pub fn report(&self) -> &TrainingReport {
        &self.report
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Weights (row-major) then biases, layer by layer.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            out.extend(l.weights.iter());
            out.extend(l.biases.iter());
        }
        out
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.parameter_count() {
            return Err(Error::DimensionMismatch { expected: self.parameter_count(), got: params.len() });
        }
        let mut it = params.iter().copied();
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w = it.next().unwrap());
            l.biases.iter_mut().for_each(|b| *b = it.next().unwrap());
        }
        Ok(())
    }

    /// Activations of every layer, starting with the centred input `2x − 1`.
    fn forward_all(&self, x: ArrayView2<'_, f64>) -> Vec<Array2<f64>> {
        let mut acts = vec![x.mapv(|v| 2.0 * v - 1.0)];
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = acts[i].dot(&l.weights.t()) + &l.biases;
            if i < last {
                self.activation.apply(&mut z);
            }
            acts.push(z);
        }
        acts
    }

    /// Rescaled outputs for a batch of inputs, one row per example.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.n_inputs() {
            return Err(Error::DimensionMismatch { expected: self.n_inputs(), got: x.ncols() });
        }
        Ok(self.forward_all(x).pop().unwrap())
    }

    /// Cost and its gradient over a batch.
    fn backward(&self, x: ArrayView2<'_, f64>, t: ArrayView2<'_, f64>) -> (f64, Vec<Layer>) {
        let acts = self.forward_all(x);
        let y = acts.last().unwrap();
        let scale = 1.0 / (y.len() as f64);
        let diff = y - &t;
        let cost = diff.iter().map(|d| d * d).sum::<f64>() * scale;
        let mut delta = diff * (2.0 * scale);
        let mut grads = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.iter().enumerate().rev() {
            let a_prev = &acts[i];
            grads.push(Layer { weights: delta.t().dot(a_prev), biases: delta.sum_axis(Axis(0)) });
            if i > 0 {
                let mut back = delta.dot(&l.weights);
                back.zip_mut_with(a_prev, |b, &a| *b *= self.activation.derivative(a));
                delta = back;
            }
        }
        grads.reverse();
        (cost, grads)
    }

    /// Cost and flat gradient over a batch of rescaled targets.
    pub fn cost_gradient(&self, x: ArrayView2<'_, f64>, t: ArrayView2<'_, f64>) -> Result<(f64, Gradient)> {
        self.check_batch(x, t)?;
        let (cost, grads) = self.backward(x, t);
        let mut flat = Vec::with_capacity(self.parameter_count());
        for g in &grads {
            flat.extend(g.weights.iter());
            flat.extend(g.biases.iter());
        }
        Ok((cost, flat))
    }

    fn check_batch(&self, x: ArrayView2<'_, f64>, t: ArrayView2<'_, f64>) -> Result<()> {
        if x.nrows() == 0 {
            return Err(Error::Empty("examples"));
        }
        if x.ncols() != self.n_inputs() {
            return Err(Error::DimensionMismatch { expected: self.n_inputs(), got: x.ncols() });
        }
        if t.ncols() != self.n_outputs() {
            return Err(Error::DimensionMismatch { expected: self.n_outputs(), got: t.ncols() });
        }
        if t.nrows() != x.nrows() {
            return Err(Error::DimensionMismatch { expected: x.nrows(), got: t.nrows() });
        }
        Ok(())
    }

    /// Forward pass followed by inverse rescaling.
    pub fn estimate(&self, input: &[f64]) -> Result<Estimate> {
        if input.len() != self.n_inputs() {
            return Err(Error::DimensionMismatch { expected: self.n_inputs(), got: input.len() });
        }
        let x = ArrayView2::from_shape((1, input.len()), input).expect("row shape");
        let y = self.predict(x)?;
        let rescaled: Vec<f64> = y.row(0).to_vec();
        let (lo, hi) = EXTRAPOLATION_BAND;
        Ok(Estimate {
            values: rescaled.iter().zip(&self.rescale).map(|(&u, r)| r.from_unit(u)).collect(),
            extrapolated: rescaled.iter().any(|&u| !(lo..=hi).contains(&u)),
            rescaled,
        })
    }

    pub fn estimate_batch(&self, inputs: &[Vec<f64>]) -> Result<Vec<Estimate>> {
        inputs.iter().map(|x| self.estimate(x)).collect()
    }

    fn apply_gradient(&mut self, grads: &[Layer], lr: f64) {
        for (l, g) in self.layers.iter_mut().zip(grads) {
            l.weights.scaled_add(-lr, &g.weights);
            l.biases.scaled_add(-lr, &g.biases);
        }
    }

    pub fn to_record(&self) -> ModelRecord {
        ModelRecord {
            version: MODEL_VERSION,
            layer_sizes: self.layer_sizes(),
            activation: self.activation,
            output_activation: "linear".into(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerRecord {
                    rows: l.weights.nrows(),
                    cols: l.weights.ncols(),
                    weights: l.weights.iter().copied().collect(),
                    biases: l.biases.to_vec(),
                })
                .collect(),
            rescale: self.rescale.clone(),
            training_report: self.report.clone(),
        }
    }

    pub fn from_record(rec: ModelRecord) -> Result<Self> {
        if rec.version != MODEL_VERSION {
            return Err(Error::Format(format!("unsupported model version {} (expected {MODEL_VERSION})", rec.version)));
        }
        if rec.output_activation != "linear" {
            return Err(Error::Format(format!("unsupported output activation '{}'", rec.output_activation)));
        }
        if rec.layers.is_empty() || rec.layer_sizes.len() != rec.layers.len() + 1 {
            return Err(Error::Format("layer_sizes does not match the layer list".into()));
        }
        let mut layers = Vec::with_capacity(rec.layers.len());
        for (i, l) in rec.layers.into_iter().enumerate() {
            if l.cols != rec.layer_sizes[i] || l.rows != rec.layer_sizes[i + 1] || l.biases.len() != l.rows {
                return Err(Error::Format(format!("layer {i} has inconsistent shape")));
            }
            let weights = Array2::from_shape_vec((l.rows, l.cols), l.weights)
                .map_err(|e| Error::Format(format!("layer {i}: {e}")))?;
            layers.push(Layer { weights, biases: Array1::from(l.biases) });
        }
        if rec.rescale.len() != *rec.layer_sizes.last().unwrap() {
            return Err(Error::Format("rescale ranges do not match the output size".into()));
        }
        Ok(Self { layers, activation: rec.activation, rescale: rec.rescale, report: rec.training_report })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.to_record()).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: ModelRecord = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        Self::from_record(rec)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| with_path(path, e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| with_path(path, e))?)
    }
}

fn with_path(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerRecord {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `(rows, cols)`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// On-disk model layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelRecord {
    pub version: u32,
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub output_activation: String,
    pub layers: Vec<LayerRecord>,
    pub rescale: Vec<RescaleRange>,
    pub training_report: TrainingReport,
}

/// Inputs and rescaled targets of the given examples.
fn matrices(dataset: &Dataset, idx: &[usize]) -> (Array2<f64>, Array2<f64>) {
    let n_in = dataset.input_len();
    let n_out = dataset.target_len();
    let mut x = Array2::zeros((idx.len(), n_in));
    let mut t = Array2::zeros((idx.len(), n_out));
    for (row, &i) in idx.iter().enumerate() {
        x.row_mut(row).assign(&ArrayView2::from_shape((1, n_in), &dataset.examples[i].input[..]).unwrap().row(0));
        for (c, v) in dataset.rescaled_target(i).into_iter().enumerate() {
            t[[row, c]] = v;
        }
    }
    (x, t)
}

/// Mean squared error `(1/nN) Σ_j Σ_i (y_i − a_i)²` over rescaled targets.
pub fn cost(model: &RegressorModel, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<f64> {
    if inputs.is_empty() {
        return Err(Error::Empty("examples"));
    }
    if inputs.len() != targets.len() {
        return Err(Error::DimensionMismatch { expected: inputs.len(), got: targets.len() });
    }
    let n_in = model.n_inputs();
    let n_out = model.n_outputs();
    let mut x = Array2::zeros((inputs.len(), n_in));
    let mut t = Array2::zeros((inputs.len(), n_out));
    for (j, (xi, ti)) in inputs.iter().zip(targets).enumerate() {
        if xi.len() != n_in {
            return Err(Error::DimensionMismatch { expected: n_in, got: xi.len() });
        }
        if ti.len() != n_out {
            return Err(Error::DimensionMismatch { expected: n_out, got: ti.len() });
        }
        x.row_mut(j).iter_mut().zip(xi).for_each(|(d, s)| *d = *s);
        t.row_mut(j).iter_mut().zip(ti).for_each(|(d, s)| *d = *s);
    }
    let y = model.predict(x.view())?;
    Ok(mse(&y, &t))
}

fn mse(y: &Array2<f64>, t: &Array2<f64>) -> f64 {
    y.iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64
}

fn gradient_norm(grads: &[Layer]) -> f64 {
    grads
        .iter()
        .map(|g| g.weights.iter().chain(&g.biases).map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

/// Minibatch gradient descent on the training split. The returned model is
/// the one with the lowest validation cost seen, epoch 0 included.
pub fn train(dataset: &Dataset, arch: &Architecture, hyper: &Hyperparameters) -> Result<RegressorModel> {
    train_with(dataset, arch, hyper, |_| {})
}

/// [`train`] with a callback invoked after every epoch record.
pub fn train_with(
    dataset: &Dataset,
    arch: &Architecture,
    hyper: &Hyperparameters,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<RegressorModel> {
    hyper.validate()?;
    dataset.validate()?;
    let train_idx = dataset.indices(Split::Train);
    let val_idx = dataset.indices(Split::Validation);
    let test_idx = dataset.indices(Split::Test);
    if train_idx.is_empty() {
        return Err(Error::Empty("training split"));
    }
    if val_idx.is_empty() {
        return Err(Error::Empty("validation split"));
    }
    if test_idx.is_empty() {
        return Err(Error::Empty("test split"));
    }
    let (x_train, t_train) = matrices(dataset, &train_idx);
    let (x_val, t_val) = matrices(dataset, &val_idx);
    let (x_test, t_test) = matrices(dataset, &test_idx);

    let mut model = RegressorModel::new(dataset.input_len(), arch, dataset.rescale.clone(), hyper.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    rng.set_stream(1);

    let mut records = Vec::with_capacity(hyper.epochs + 1);
    let mut best = (f64::INFINITY, 0, model.layers.clone());
    let mut order: Vec<usize> = (0..train_idx.len()).collect();
    for epoch in 0..=hyper.epochs {
        if epoch > 0 {
            order.shuffle(&mut rng);
            for batch in order.chunks(hyper.batch_size) {
                let xb = x_train.select(Axis(0), batch);
                let tb = t_train.select(Axis(0), batch);
                let (c, grads) = model.backward(xb.view(), tb.view());
                if !c.is_finite() {
                    return Err(Error::NonFinite { epoch, what: "minibatch cost" });
                }
                model.apply_gradient(&grads, hyper.learning_rate);
            }
        }
        let (train_cost, grads) = model.backward(x_train.view(), t_train.view());
        let record = EpochRecord {
            epoch,
            train_cost,
            validation_cost: mse(&model.predict(x_val.view())?, &t_val),
            test_cost: mse(&model.predict(x_test.view())?, &t_test),
            gradient_norm: gradient_norm(&grads),
        };
        if !record.train_cost.is_finite() || !record.validation_cost.is_finite() || !record.test_cost.is_finite() {
            return Err(Error::NonFinite { epoch, what: "cost" });
        }
        if !record.gradient_norm.is_finite() {
            return Err(Error::NonFinite { epoch, what: "gradient" });
        }
        on_epoch(&record);
        if record.validation_cost < best.0 {
            best = (record.validation_cost, epoch, model.layers.clone());
        }
        records.push(record);
    }
    model.layers = best.2;
    model.report = TrainingReport { epochs: records, best_epoch: best.1, hyperparameters: Some(*hyper) };
    Ok(model)
}

/// Estimates for the examples of one split, in raw units, with their targets.
pub fn predict_split(model: &RegressorModel, dataset: &Dataset, part: Split) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let idx = dataset.indices(part);
    if idx.is_empty() {
        return Err(Error::Empty("split"));
    }
    let (x, _) = matrices(dataset, &idx);
    let y = model.predict(x.view())?;
    let outputs = y
        .outer_iter()
        .map(|row| row.iter().zip(model.rescale()).map(|(&u, r)| r.from_unit(u)).collect())
        .collect();
    let targets = idx.iter().map(|&i| dataset.examples[i].target.clone()).collect();
    Ok((targets, outputs))
}

/// Column `d` of a list of vectors.
pub(crate) fn column(rows: &[Vec<f64>], d: usize) -> Vec<f64> {
    rows.iter().map(|r| r[d]).collect()
}

