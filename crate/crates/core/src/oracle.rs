//! Classifier oracles and attack objectives.
//!
//! An [`Oracle`] answers hard-label queries (the top-1 class) and optionally
//! soft-label queries (the full logit vector). Every objective evaluation
//! clamps the perturbed image into `[0,1]`, spends exactly one unit of the
//! query budget, and scores the outcome: hard-label objectives take values in
//! `{-1, 0}` with success exactly at 0, soft-label objectives return the
//! attack margin with success strictly above 0.
//!
//! Built-in oracles (a linear multiclass model, a one-hidden-layer ReLU MLP
//! and a synthetic concentric-ball classifier with an analytic margin) keep
//! everything verifiable without pretrained networks; remote oracles speaking
//! the wire protocol live in the companion crate and implement the same
//! trait.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::math::{l2_norm, sqrt};
use crate::subspace::Perturbation;

/// Class index in `{0, .., K-1}`.
pub type Label = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleError {
    /// The query budget is spent.
    BudgetExhausted { budget: u64 },
    /// The oracle cannot answer soft-label queries.
    SoftUnsupported,
    /// Pixel outside `[0,1]`, wrong buffer length, NaN.
    InvalidImage(&'static str),
    /// Image shape does not match the oracle input shape.
    ShapeMismatch,
    /// Transport failure talking to a remote oracle (budget not consumed).
    Transport(String),
    /// The remote peer violated the wire protocol (budget not consumed).
    Protocol(String),
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::BudgetExhausted { budget } => {
                write!(f, "query budget of {budget} exhausted")
            }
            OracleError::SoftUnsupported => write!(f, "oracle does not support soft-label queries"),
            OracleError::InvalidImage(msg) => write!(f, "invalid image: {msg}"),
            OracleError::ShapeMismatch => write!(f, "image shape does not match oracle input"),
            OracleError::Transport(msg) => write!(f, "oracle transport error: {msg}"),
            OracleError::Protocol(msg) => write!(f, "oracle protocol error: {msg}"),
        }
    }
}

impl core::error::Error for OracleError {}

/// A C x H x W image with intensities in `[0, 1]`, stored channel-major
/// row-major.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ImageTensor {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl ImageTensor {
    pub fn new(
        channels: usize,
        height: usize,
        width: usize,
        data: Vec<f64>,
    ) -> Result<Self, OracleError> {
        if data.len() != channels * height * width {
            return Err(OracleError::InvalidImage("buffer length does not match shape"));
        }
        if !data.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)) {
            return Err(OracleError::InvalidImage("pixel outside [0,1]"));
        }
        Ok(Self { channels, height, width, data })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self { channels, height, width, data: alloc::vec![0.0; channels * height * width] }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    /// Add a perturbation and clamp the result into the valid image box.
    /// For l-infinity perturbations clamping cannot grow any deviation; for
    /// l2 it only shrinks per-pixel deviations, so the effective perturbation
    /// still satisfies the original bound.
    pub fn perturbed(&self, delta: &Perturbation) -> Result<ImageTensor, OracleError> {
        if delta.channels != self.channels
            || delta.side != self.height
            || delta.side != self.width
        {
            return Err(OracleError::ShapeMismatch);
        }
        let data = self
            .data
            .iter()
            .zip(delta.data.iter())
            .map(|(&x, &d)| (x + d).clamp(0.0, 1.0))
            .collect();
        Ok(ImageTensor { channels: self.channels, height: self.height, width: self.width, data })
    }
}

/// Tracks queries spent against a fixed budget; `used <= budget` always.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QueryLedger {
    used: u64,
    budget: u64,
}

impl QueryLedger {
    pub fn new(budget: u64) -> Self {
        assert!(budget > 0, "budget must be positive");
        Self { used: 0, budget }
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn remaining(&self) -> u64 {
        self.budget - self.used
    }

    pub fn exhausted(&self) -> bool {
        self.used >= self.budget
    }

    fn consume(&mut self) {
        debug_assert!(self.used < self.budget);
        self.used += 1;
    }
}

/// Attack goal: any misclassification, or classification as a given target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Goal {
    Untargeted,
    Targeted(Label),
}

/// What each query reveals: only the top-1 class, or the full logit vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Feedback {
    HardLabel,
    SoftLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObjectiveSpec {
    pub goal: Goal,
    pub feedback: Feedback,
}

impl ObjectiveSpec {
    pub fn untargeted_hard() -> Self {
        Self { goal: Goal::Untargeted, feedback: Feedback::HardLabel }
    }

    /// A targeted spec must name a class other than the true label; checked
    /// against `y0` at evaluation time.
    pub fn validate_for(&self, y0: Label) -> Result<(), OracleError> {
        if let Goal::Targeted(t) = self.goal {
            if t == y0 {
                return Err(OracleError::InvalidImage("target label equals the true label"));
            }
        }
        Ok(())
    }
}

/// A classifier that can be queried with images.
pub trait Oracle {
    fn classes(&self) -> usize;
    /// Expected input shape as (channels, height, width).
    fn input_shape(&self) -> (usize, usize, usize);
    fn predict_hard(&mut self, image: &ImageTensor) -> Result<Label, OracleError>;
    fn predict_soft(&mut self, _image: &ImageTensor) -> Result<Vec<f64>, OracleError> {
        Err(OracleError::SoftUnsupported)
    }
    fn supports_soft(&self) -> bool {
        false
    }
}

/// Hard-label query: returns the top-1 class and consumes one query.
/// Transport failures propagate without touching the ledger.
pub fn query_hard(
    oracle: &mut dyn Oracle,
    ledger: &mut QueryLedger,
    image: &ImageTensor,
) -> Result<Label, OracleError> {
    if ledger.exhausted() {
        return Err(OracleError::BudgetExhausted { budget: ledger.budget() });
    }
    let label = oracle.predict_hard(image)?;
    ledger.consume();
    Ok(label)
}

/// Soft-label query: returns the logit vector and consumes one query.
pub fn query_soft(
    oracle: &mut dyn Oracle,
    ledger: &mut QueryLedger,
    image: &ImageTensor,
) -> Result<Vec<f64>, OracleError> {
    if ledger.exhausted() {
        return Err(OracleError::BudgetExhausted { budget: ledger.budget() });
    }
    let logits = oracle.predict_soft(image)?;
    ledger.consume();
    Ok(logits)
}

/// One scored oracle query.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveEval {
    pub value: f64,
    pub success: bool,
    /// The class the oracle reported (argmax of logits for soft feedback).
    pub label: Label,
}

/// Evaluate the attack objective for a perturbation of `x0`. The perturbed
/// image is clamped into `[0,1]` before querying, and exactly one query is
/// consumed per call that reaches the oracle.
pub fn objective(
    spec: &ObjectiveSpec,
    oracle: &mut dyn Oracle,
    ledger: &mut QueryLedger,
    x0: &ImageTensor,
    y0: Label,
    delta: &Perturbation,
) -> Result<ObjectiveEval, OracleError> {
    spec.validate_for(y0)?;
    let image = x0.perturbed(delta)?;
    match spec.feedback {
        Feedback::HardLabel => {
            let label = query_hard(oracle, ledger, &image)?;
            let success = match spec.goal {
                Goal::Untargeted => label != y0,
                Goal::Targeted(t) => label == t,
            };
            Ok(ObjectiveEval { value: if success { 0.0 } else { -1.0 }, success, label })
        }
        Feedback::SoftLabel => {
            let logits = query_soft(oracle, ledger, &image)?;
            let label = argmax(&logits);
            let value = match spec.goal {
                Goal::Untargeted => {
                    let best_other = logits
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| *k != y0)
                        .map(|(_, &v)| v)
                        .fold(f64::NEG_INFINITY, f64::max);
                    best_other - logits[y0]
                }
                Goal::Targeted(t) => {
                    let best_other = logits
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| *k != t)
                        .map(|(_, &v)| v)
                        .fold(f64::NEG_INFINITY, f64::max);
                    logits[t] - best_other
                }
            };
            Ok(ObjectiveEval { value, success: value > 0.0, label })
        }
    }
}

/// Argmax with ties broken toward the lowest class index.
pub fn argmax(logits: &[f64]) -> Label {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate().skip(1) {
        if v > logits[best] {
            best = i;
        }
    }
    best
}

/// Linear multiclass model: `logits = W x + b`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearModel {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    /// `classes x (C*H*W)` row-major.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl LinearModel {
    pub fn classes(&self) -> usize {
        self.biases.len()
    }

    pub fn input_dim(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn logits(&self, image: &ImageTensor) -> Result<Vec<f64>, OracleError> {
        if image.shape() != (self.channels, self.height, self.width) {
            return Err(OracleError::ShapeMismatch);
        }
        let d = self.input_dim();
        Ok((0..self.classes())
            .map(|k| {
                self.biases[k]
                    + self.weights[k * d..(k + 1) * d]
                        .iter()
                        .zip(image.data.iter())
                        .map(|(w, x)| w * x)
                        .sum::<f64>()
            })
            .collect())
    }

    /// Signed margin of the true class over the runner-up; positive means
    /// correctly classified with room to spare.
    pub fn margin(&self, image: &ImageTensor, y0: Label) -> Result<f64, OracleError> {
        let logits = self.logits(image)?;
        let best_other = logits
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != y0)
            .map(|(_, &v)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(logits[y0] - best_other)
    }
}

impl Oracle for LinearModel {
    fn classes(&self) -> usize {
        self.biases.len()
    }

    fn input_shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    fn predict_hard(&mut self, image: &ImageTensor) -> Result<Label, OracleError> {
        Ok(argmax(&self.logits(image)?))
    }

    fn predict_soft(&mut self, image: &ImageTensor) -> Result<Vec<f64>, OracleError> {
        self.logits(image)
    }

    fn supports_soft(&self) -> bool {
        true
    }
}

/// One-hidden-layer ReLU network: `logits = W2 relu(W1 x + b1) + b2`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MlpModel {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub hidden: usize,
    /// `hidden x (C*H*W)` row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `classes x hidden` row-major.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl MlpModel {
    pub fn classes(&self) -> usize {
        self.b2.len()
    }

    pub fn input_dim(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn logits(&self, image: &ImageTensor) -> Result<Vec<f64>, OracleError> {
        if image.shape() != (self.channels, self.height, self.width) {
            return Err(OracleError::ShapeMismatch);
        }
        let d = self.input_dim();
        let hidden: Vec<f64> = (0..self.hidden)
            .map(|h| {
                let z = self.b1[h]
                    + self.w1[h * d..(h + 1) * d]
                        .iter()
                        .zip(image.data.iter())
                        .map(|(w, x)| w * x)
                        .sum::<f64>();
                z.max(0.0)
            })
            .collect();
        Ok((0..self.classes())
            .map(|k| {
                self.b2[k]
                    + self.w2[k * self.hidden..(k + 1) * self.hidden]
                        .iter()
                        .zip(hidden.iter())
                        .map(|(w, h)| w * h)
                        .sum::<f64>()
            })
            .collect())
    }
}

impl Oracle for MlpModel {
    fn classes(&self) -> usize {
        self.b2.len()
    }

    fn input_shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    fn predict_hard(&mut self, image: &ImageTensor) -> Result<Label, OracleError> {
        Ok(argmax(&self.logits(image)?))
    }

    fn predict_soft(&mut self, image: &ImageTensor) -> Result<Vec<f64>, OracleError> {
        self.logits(image)
    }

    fn supports_soft(&self) -> bool {
        true
    }
}

/// Synthetic two-class oracle with an analytic decision boundary: class 0
/// inside the l2 ball of `radius` around `center`, class 1 outside. The
/// soft margin is the signed distance to the boundary, so ground-truth
/// margins for test instances are exact.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConcentricBallOracle {
    pub center: ImageTensor,
    pub radius: f64,
}

impl ConcentricBallOracle {
    pub fn distance(&self, image: &ImageTensor) -> f64 {
        let diff: Vec<f64> = image
            .data
            .iter()
            .zip(self.center.data.iter())
            .map(|(a, b)| a - b)
            .collect();
        l2_norm(&diff)
    }

    /// Distance from `image` to the decision boundary (positive inside).
    pub fn margin(&self, image: &ImageTensor) -> f64 {
        self.radius - self.distance(image)
    }
}

impl Oracle for ConcentricBallOracle {
    fn classes(&self) -> usize {
        2
    }

    fn input_shape(&self) -> (usize, usize, usize) {
        self.center.shape()
    }

    fn predict_hard(&mut self, image: &ImageTensor) -> Result<Label, OracleError> {
        if image.shape() != self.center.shape() {
            return Err(OracleError::ShapeMismatch);
        }
        Ok(if self.distance(image) <= self.radius { 0 } else { 1 })
    }

    fn predict_soft(&mut self, image: &ImageTensor) -> Result<Vec<f64>, OracleError> {
        if image.shape() != self.center.shape() {
            return Err(OracleError::ShapeMismatch);
        }
        let m = self.margin(image);
        Ok(alloc::vec![m, -m])
    }

    fn supports_soft(&self) -> bool {
        true
    }
}

/// Euclidean distance helper exposed for harness-side instance construction.
pub fn image_distance(a: &ImageTensor, b: &ImageTensor) -> f64 {
    let s: f64 = a
        .data
        .iter()
        .zip(b.data.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    sqrt(s)
}
