use super::mlp::MlpParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias-corrected moments and no weight decay.
#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamConfig,
    m: MlpParams,
    v: MlpParams,
    t: i32,
}

impl Adam {
    pub fn new(params: &MlpParams, cfg: AdamConfig) -> Self {
        Adam {
            cfg,
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    pub fn step(&mut self, params: &mut MlpParams, grads: &MlpParams) {
        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.cfg;
        let c1 = 1.0 - beta1.powi(self.t);
        let c2 = 1.0 - beta2.powi(self.t);
        let slices = params
            .slices_mut()
            .into_iter()
            .zip(grads.slices())
            .zip(self.m.slices_mut())
            .zip(self.v.slices_mut());
        for (((p, g), m), v) in slices {
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::mlp::Architecture;
    use crate::rng::rng_from_seed;

    #[test]
    fn first_step_moves_each_parameter_by_lr() {
        let arch = Architecture {
            base_width: 3,
            block_counts: vec![],
            community_dim: 0,
            hidden: 4,
            layers: 1,
            classes: 2,
        };
        let mut params = MlpParams::init(&arch, &mut rng_from_seed(1)).unwrap();
        let before = params.clone();
        let mut grads = params.zeros_like();
        for s in grads.slices_mut() {
            for (i, g) in s.iter_mut().enumerate() {
                *g = if i % 2 == 0 { 3.0 } else { -0.5 };
            }
        }
        let mut opt = Adam::new(&params, AdamConfig::with_lr(0.01));
        opt.step(&mut params, &grads);
        for ((a, b), g) in params.slices().iter().zip(before.slices()).zip(grads.slices()) {
            for i in 0..a.len() {
                let expect = -0.01 * g[i].signum();
                assert!((a[i] - b[i] - expect).abs() < 1e-9);
            }
        }
    }
}
