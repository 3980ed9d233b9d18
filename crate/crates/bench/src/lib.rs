//! Shared setup for the benchmarks: a trained base model plus a planned
//! modification at the requested scale.

use segbound_core::data_io::{plan_modification, Dataset, Modification, ModificationPlan};
use segbound_core::synth::{generate, SynthConfig};
use segbound_core::trainer::{train, TrainConfig, TrainedModel};
use segbound_core::LossKind;

pub struct BenchCase {
    pub base: Dataset,
    pub w0: TrainedModel,
    pub modification: Modification,
    pub kind: LossKind,
    pub c_reg: f64,
}

pub fn make_case(n_base: usize, dim: usize, p_up: f64) -> BenchCase {
    let synth = SynthConfig {
        n_base,
        n_pool: ((n_base as f64 * p_up).ceil() as usize).max(16),
        n_test: 0,
        dim,
        separation: 1.2,
        seed: 7,
    };
    let (base, pool, _) = generate(&synth);
    let kind = LossKind::Logistic;
    let c_reg = 1.0;
    let w0 = train(kind, &base, &TrainConfig::new(c_reg)).expect("base model trains");
    let plan = ModificationPlan {
        p_up,
        add_fraction: 0.5,
        seed: 11,
    };
    let modification = plan_modification(&base, &pool, &plan).expect("plan fits");
    BenchCase {
        base,
        w0,
        modification,
        kind,
        c_reg,
    }
}
