use rand::Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

/// One named parameter array with its gradient and optimizer moments.
#[derive(Clone, Debug)]
pub struct Param {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
}

impl Param {
    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Init {
    Zeros,
    /// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    FanIn(usize),
    Constant(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Optimizer {
    Sgd { lr: f64, momentum: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub fn sgd(lr: f64) -> Self {
        Optimizer::Sgd { lr, momentum: 0.0 }
    }

    pub fn adam(lr: f64) -> Self {
        Optimizer::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn lr(&self) -> f64 {
        match *self {
            Optimizer::Sgd { lr, .. } | Optimizer::Adam { lr, .. } => lr,
        }
    }
}

/// Named parameters, paired gradient slots and optimizer state.
#[derive(Clone, Debug, Default)]
pub struct ParamStore {
    params: Vec<Param>,
    steps: u64,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register<R: Rng + ?Sized>(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        init: Init,
        rng: &mut R,
    ) -> ParamId {
        let name = name.into();
        assert!(
            self.params.iter().all(|p| p.name != name),
            "duplicate parameter name {name}"
        );
        let n = rows * cols;
        let value = match init {
            Init::Zeros => vec![0.0; n],
            Init::Constant(c) => vec![c; n],
            Init::FanIn(fan_in) => {
                let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
                (0..n).map(|_| rng.gen_range(-bound..=bound)).collect()
            }
        };
        self.params.push(Param {
            name,
            rows,
            cols,
            value,
            grad: vec![0.0; n],
            first_moment: vec![0.0; n],
            second_moment: vec![0.0; n],
        });
        ParamId(self.params.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(Param::len).sum()
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn param(&self, id: ParamId) -> &Param {
        &self.params[id.0]
    }

    pub fn param_mut(&mut self, id: ParamId) -> &mut Param {
        &mut self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &[f64] {
        &self.params[id.0].value
    }

    pub fn grad_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.params[id.0].grad
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param> {
        self.params.iter_mut()
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    /// Multiply every gradient by `factor` (used to average over a batch).
    pub fn scale_grads(&mut self, factor: f64) {
        for p in &mut self.params {
            p.grad.iter_mut().for_each(|g| *g *= factor);
        }
    }

    /// Copy parameter values from another store with the same layout.
    /// Gradients and optimizer state of `self` are left alone.
    pub fn copy_values_from(&mut self, other: &ParamStore) -> Result<()> {
        self.check_same_layout(other)?;
        for (dst, src) in self.params.iter_mut().zip(&other.params) {
            dst.value.copy_from_slice(&src.value);
        }
        Ok(())
    }

    fn check_same_layout(&self, other: &ParamStore) -> Result<()> {
        if self.params.len() != other.params.len() {
            return Err(Error::dim(
                "ParamStore layout",
                self.params.len(),
                other.params.len(),
            ));
        }
        for (a, b) in self.params.iter().zip(&other.params) {
            if a.name != b.name || a.rows != b.rows || a.cols != b.cols {
                return Err(Error::dim(
                    "ParamStore layout",
                    format!("{}[{}x{}]", a.name, a.rows, a.cols),
                    format!("{}[{}x{}]", b.name, b.rows, b.cols),
                ));
            }
        }
        Ok(())
    }

    /// Plain gradient descent `w <- w - lr * g`; gradients are zeroed afterwards.
    pub fn sgd_step(&mut self, lr: f64) -> Result<()> {
        self.step(&Optimizer::sgd(lr))
    }

    pub fn step(&mut self, opt: &Optimizer) -> Result<()> {
        for p in &self.params {
            if p.grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Numeric(format!("gradient of parameter {}", p.name)));
            }
        }
        self.steps += 1;
        match *opt {
            Optimizer::Sgd { lr, momentum } => {
                for p in &mut self.params {
                    if momentum == 0.0 {
                        for (w, g) in p.value.iter_mut().zip(&p.grad) {
                            *w -= lr * g;
                        }
                    } else {
                        for ((w, g), v) in p
                            .value
                            .iter_mut()
                            .zip(&p.grad)
                            .zip(p.first_moment.iter_mut())
                        {
                            *v = momentum * *v + g;
                            *w -= lr * *v;
                        }
                    }
                }
            }
            Optimizer::Adam {
                lr,
                beta1,
                beta2,
                eps,
            } => {
                let t = self.steps as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for p in &mut self.params {
                    for i in 0..p.value.len() {
                        let g = p.grad[i];
                        let m = beta1 * p.first_moment[i] + (1.0 - beta1) * g;
                        let v = beta2 * p.second_moment[i] + (1.0 - beta2) * g * g;
                        p.first_moment[i] = m;
                        p.second_moment[i] = v;
                        p.value[i] -= lr * (m / c1) / ((v / c2).sqrt() + eps);
                    }
                }
            }
        }
        self.zero_grads();
        Ok(())
    }

    /// Ordered `(name, shape, values)` enumeration used by checkpoints.
    pub fn blocks(&self) -> impl Iterator<Item = (&str, (usize, usize), &[f64])> {
        self.params
            .iter()
            .map(|p| (p.name.as_str(), (p.rows, p.cols), p.value.as_slice()))
    }

    /// Optimizer moments in the same order as [`ParamStore::blocks`].
    pub fn moment_blocks(&self) -> impl Iterator<Item = (&str, &[f64], &[f64])> {
        self.params.iter().map(|p| {
            (
                p.name.as_str(),
                p.first_moment.as_slice(),
                p.second_moment.as_slice(),
            )
        })
    }

    pub fn set_steps(&mut self, steps: u64) {
        self.steps = steps;
    }

    /// Overwrite values (and optionally moments) of a named parameter.
    pub fn load_block(
        &mut self,
        name: &str,
        shape: (usize, usize),
        values: &[f64],
        moments: Option<(&[f64], &[f64])>,
    ) -> Result<()> {
        let id = self
            .find(name)
            .ok_or_else(|| Error::Data(format!("unknown parameter block {name}")))?;
        let p = &mut self.params[id.0];
        if (p.rows, p.cols) != shape || values.len() != p.value.len() {
            return Err(Error::dim(
                "ParamStore::load_block",
                format!("{name}[{}x{}]", p.rows, p.cols),
                format!("{name}[{}x{}]", shape.0, shape.1),
            ));
        }
        p.value.copy_from_slice(values);
        if let Some((m1, m2)) = moments {
            if m1.len() != p.value.len() || m2.len() != p.value.len() {
                return Err(Error::dim("ParamStore::load_block moments", p.value.len(), m1.len()));
            }
            p.first_moment.copy_from_slice(m1);
            p.second_moment.copy_from_slice(m2);
        }
        Ok(())
    }

    /// Flat view of all values, in registration order.
    pub fn flat_values(&self) -> Vec<f64> {
        self.params.iter().flat_map(|p| p.value.iter().copied()).collect()
    }

    pub fn flat_grads(&self) -> Vec<f64> {
        self.params.iter().flat_map(|p| p.grad.iter().copied()).collect()
    }

    /// Mutable access to the scalar at flat index `i` (registration order).
    pub fn flat_value_mut(&mut self, mut i: usize) -> &mut f64 {
        for p in &mut self.params {
            if i < p.value.len() {
                return &mut p.value[i];
            }
            i -= p.value.len();
        }
        panic!("flat index out of range");
    }
}
