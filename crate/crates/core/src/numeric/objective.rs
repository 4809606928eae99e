use super::{Dataset, Model, ParamVector};

/// A differentiable training objective whose samples are addressed by index.
///
/// Clients hold shards of sample indices; a mini-batch is a slice of them.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    /// Mean loss over `batch` at `at`, and its gradient.
    fn loss_grad(&self, at: &[f64], batch: &[usize]) -> (f64, ParamVector);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    /// Classification accuracy in `[0, 1]`. Objectives without a notion of
    /// accuracy report 0.
    pub accuracy: f64,
}

/// Scores the global model after each round.
pub trait Evaluator: Sync {
    fn evaluate(&self, params: &[f64]) -> Evaluation;
}

/// A [`Model`] trained on a [`Dataset`].
#[derive(Debug, Clone, Copy)]
pub struct SupervisedTask<'a> {
    pub model: &'a Model,
    pub data: &'a Dataset,
}

impl<'a> SupervisedTask<'a> {
    pub fn new(model: &'a Model, data: &'a Dataset) -> Self {
        Self { model, data }
    }
}

impl Objective for SupervisedTask<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn loss_grad(&self, at: &[f64], batch: &[usize]) -> (f64, ParamVector) {
        self.model
            .loss_grad(self.data, batch, at)
            .expect("supervised task: dimensions fixed at construction")
    }
}

impl Evaluator for SupervisedTask<'_> {
    fn evaluate(&self, params: &[f64]) -> Evaluation {
        let (loss, accuracy) = self
            .model
            .evaluate(self.data, params)
            .expect("supervised task: dimensions fixed at construction");
        Evaluation { loss, accuracy }
    }
}
