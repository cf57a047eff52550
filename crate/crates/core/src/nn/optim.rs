use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const RMSPROP_RHO: f64 = 0.9;
pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    RmsProp,
    Adam,
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rmsprop" => Ok(OptimizerKind::RmsProp),
            "adam" => Ok(OptimizerKind::Adam),
            other => Err(Error::invalid(format!("unknown optimizer '{other}'"))),
        }
    }
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OptimizerKind::RmsProp => "rmsprop",
            OptimizerKind::Adam => "adam",
        })
    }
}

/// Optimizer state for a fixed list of parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    kind: OptimizerKind,
    learning_rate: f64,
    steps: u64,
    /// RMSProp: running mean of g². Adam: first moment.
    first: Vec<Vec<f64>>,
    /// Adam second moment; unused by RMSProp.
    second: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64, tensor_lens: &[usize]) -> Self {
        let zeros = || tensor_lens.iter().map(|&n| vec![0.0; n]).collect::<Vec<_>>();
        Optimizer {
            kind,
            learning_rate,
            steps: 0,
            first: zeros(),
            second: match kind {
                OptimizerKind::Adam => zeros(),
                OptimizerKind::RmsProp => Vec::new(),
            },
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// One update of every tensor; `tensors[i]` pairs the parameters and
    /// gradients of the `i`-th tensor given at construction.
    pub fn step(&mut self, tensors: &mut [(&mut [f64], &[f64])]) {
        assert_eq!(tensors.len(), self.first.len(), "optimizer tensor count");
        self.steps += 1;
        let lr = self.learning_rate;
        match self.kind {
            OptimizerKind::RmsProp => {
                for ((params, grads), s) in tensors.iter_mut().zip(&mut self.first) {
                    for ((p, &g), s) in params.iter_mut().zip(grads.iter()).zip(s.iter_mut()) {
                        *s = RMSPROP_RHO * *s + (1.0 - RMSPROP_RHO) * g * g;
                        *p -= lr * g / (s.sqrt() + EPSILON);
                    }
                }
            }
            OptimizerKind::Adam => {
                let t = self.steps as i32;
                let c1 = 1.0 - ADAM_BETA1.powi(t);
                let c2 = 1.0 - ADAM_BETA2.powi(t);
                for (((params, grads), m), v) in tensors.iter_mut().zip(&mut self.first).zip(&mut self.second) {
                    for (((p, &g), m), v) in params.iter_mut().zip(grads.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
                        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                        *p -= lr * (*m / c1) / ((*v / c2).sqrt() + EPSILON);
                    }
                }
            }
        }
    }
}
