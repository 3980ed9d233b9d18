//! LIBSVM-format parsing, bias augmentation, and reproducible
//! add/remove modifications of a training set.

use std::collections::HashSet;
use std::io::BufRead;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One labeled sparse instance. Feature indices are 1-based and strictly
/// increasing; the label is +1 or -1.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub features: Vec<(u32, f64)>,
    pub label: i8,
}

impl Instance {
    pub fn new(features: Vec<(u32, f64)>, label: i8) -> Self {
        debug_assert!(label == 1 || label == -1);
        debug_assert!(features.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(features.first().map_or(true, |f| f.0 >= 1));
        Instance { features, label }
    }

    /// w^T x over the sparse features. `w` is 0-based dense.
    pub fn dot(&self, w: &[f64]) -> f64 {
        self.features
            .iter()
            .map(|&(idx, val)| w[(idx - 1) as usize] * val)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.features
            .iter()
            .map(|&(_, v)| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_index(&self) -> u32 {
        self.features.last().map_or(0, |f| f.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub instances: Vec<Instance>,
    pub dim: usize,
}

impl Dataset {
    pub fn new(instances: Vec<Instance>) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let dim = instances.iter().map(|i| i.max_index()).max().unwrap() as usize;
        Ok(Dataset { instances, dim })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Raise the declared dimension (e.g. to align train/test files).
    pub fn with_dim(mut self, dim: usize) -> Self {
        assert!(dim >= self.dim);
        self.dim = dim;
        self
    }
}

/// A batch modification: instances to add (set A) and indices into the
/// base dataset to remove (set S).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Modification {
    pub added: Vec<Instance>,
    pub removed: Vec<usize>,
}

impl Modification {
    pub fn n_added(&self) -> usize {
        self.added.len()
    }

    pub fn n_removed(&self) -> usize {
        self.removed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty()
    }
}

/// How to sample a Modification: target ratio p_up = (n_A + n_S) / n_0,
/// the add/remove split, and the RNG seed.
#[derive(Debug, Clone, Copy)]
pub struct ModificationPlan {
    pub p_up: f64,
    pub add_fraction: f64,
    pub seed: u64,
}

pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut instances = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let label_tok = parts.next().unwrap();
        let raw: f64 = label_tok.parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad label `{label_tok}`"),
        })?;
        if raw == 0.0 || !raw.is_finite() {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("label `{label_tok}` has no sign"),
            });
        }
        let label: i8 = if raw > 0.0 { 1 } else { -1 };

        let mut features = Vec::new();
        let mut prev = 0u32;
        for tok in parts {
            let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: lineno,
                msg: format!("expected idx:val, got `{tok}`"),
            })?;
            let idx: u32 = idx_s.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad feature index `{idx_s}`"),
            })?;
            let val: f64 = val_s.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad feature value `{val_s}`"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "feature indices are 1-based".into(),
                });
            }
            if idx <= prev {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("non-increasing feature index {idx}"),
                });
            }
            prev = idx;
            features.push((idx, val));
        }
        instances.push(Instance::new(features, label));
    }
    Dataset::new(instances)
}

pub fn parse_libsvm_str(text: &str) -> Result<Dataset> {
    parse_libsvm(text.as_bytes())
}

pub fn read_libsvm(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    parse_libsvm(std::io::BufReader::new(file))
}

pub fn write_libsvm(d: &Dataset) -> String {
    let mut out = String::new();
    for inst in &d.instances {
        out.push_str(if inst.label > 0 { "+1" } else { "-1" });
        for &(idx, val) in &inst.features {
            out.push_str(&format!(" {idx}:{val}"));
        }
        out.push('\n');
    }
    out
}

/// Append a constant-1 feature at index dim+1 to every instance.
pub fn augment_bias(d: &Dataset) -> Dataset {
    let bias_idx = (d.dim + 1) as u32;
    let instances = d
        .instances
        .iter()
        .map(|inst| {
            let mut features = inst.features.clone();
            features.push((bias_idx, 1.0));
            Instance::new(features, inst.label)
        })
        .collect();
    Dataset {
        instances,
        dim: d.dim + 1,
    }
}

fn instance_key(inst: &Instance) -> (i8, Vec<(u32, u64)>) {
    (
        inst.label,
        inst.features
            .iter()
            .map(|&(i, v)| (i, v.to_bits()))
            .collect(),
    )
}

/// Sample a Modification: n_A additions drawn from `pool`, n_S removals
/// drawn from `base`, both uniform without replacement, deterministic
/// given the plan seed.
pub fn plan_modification(
    base: &Dataset,
    pool: &Dataset,
    plan: &ModificationPlan,
) -> Result<Modification> {
    let n0 = base.len();
    let n_a = (plan.add_fraction * plan.p_up * n0 as f64).round() as usize;
    let n_s = ((1.0 - plan.add_fraction) * plan.p_up * n0 as f64).round() as usize;
    if n_s > n0 {
        return Err(Error::InfeasibleModification(format!(
            "cannot remove {n_s} of {n0} instances"
        )));
    }
    if n_a > pool.len() {
        return Err(Error::InfeasibleModification(format!(
            "cannot add {n_a} from a pool of {}",
            pool.len()
        )));
    }
    if n_a > 0 {
        let base_keys: HashSet<_> = base.instances.iter().map(instance_key).collect();
        if pool.instances.iter().any(|i| base_keys.contains(&instance_key(i))) {
            return Err(Error::OverlappingPools);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut removed: Vec<usize> = sample(&mut rng, n0, n_s).into_vec();
    removed.sort_unstable();
    let added: Vec<Instance> = sample(&mut rng, pool.len(), n_a)
        .into_iter()
        .map(|i| pool.instances[i].clone())
        .collect();
    Ok(Modification { added, removed })
}

/// D_1 = (D_0 \ S) ∪ A; surviving base instances keep their order,
/// added instances follow.
pub fn apply_modification(base: &Dataset, m: &Modification) -> Result<Dataset> {
    let removed: HashSet<usize> = m.removed.iter().copied().collect();
    if removed.len() != m.removed.len() {
        return Err(Error::InfeasibleModification(
            "duplicate removal indices".into(),
        ));
    }
    if let Some(&bad) = m.removed.iter().find(|&&i| i >= base.len()) {
        return Err(Error::InfeasibleModification(format!(
            "removal index {bad} out of range"
        )));
    }
    let mut instances: Vec<Instance> = base
        .instances
        .iter()
        .enumerate()
        .filter(|(i, _)| !removed.contains(i))
        .map(|(_, inst)| inst.clone())
        .collect();
    instances.extend(m.added.iter().cloned());
    let updated = Dataset::new(instances)?;
    // the modification may only shrink the support, never the declared dim
    let dim = updated.dim.max(base.dim);
    Ok(updated.with_dim(dim))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_two_instances() {
        let d = parse_libsvm_str("+1 1:0.5 3:-2\n-1 2:1").unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.dim, 3);
        assert_eq!(d.instances[0].label, 1);
        assert_eq!(d.instances[1].label, -1);
        assert_eq!(d.instances[0].features, vec![(1, 0.5), (3, -2.0)]);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(parse_libsvm_str(""), Err(Error::EmptyDataset)));
    }

    #[test]
    fn real_labels_map_to_sign() {
        let d = parse_libsvm_str("2.0 1:1\n1.0 2:1").unwrap();
        assert!(d.instances.iter().all(|i| i.label == 1));
    }

    #[test]
    fn zero_label_rejected_with_line_number() {
        let err = parse_libsvm_str("+1 1:1\n0 1:1").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn non_increasing_indices_rejected() {
        assert!(matches!(
            parse_libsvm_str("+1 2:1 2:3"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_libsvm_str("+1 3:1 2:3"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn malformed_pair_rejected() {
        assert!(matches!(
            parse_libsvm_str("+1 1=0.5"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn round_trip_preserves_dataset() {
        let d = parse_libsvm_str("+1 1:0.5 3:-2.25\n-1 2:1e-3 7:42").unwrap();
        let d2 = parse_libsvm_str(&write_libsvm(&d)).unwrap();
        assert_eq!(d, d2);
    }

    #[test]
    fn bias_augmentation_appends_unit_feature() {
        let d = parse_libsvm_str("+1 1:0.5 3:2\n-1 1:1").unwrap();
        let a = augment_bias(&d);
        assert_eq!(a.dim, 4);
        assert_eq!(a.instances[0].features, vec![(1, 0.5), (3, 2.0), (4, 1.0)]);
        assert_eq!(a.instances[1].features, vec![(1, 1.0), (4, 1.0)]);
    }

    #[test]
    fn bias_on_empty_feature_instance() {
        let d = Dataset {
            instances: vec![Instance::new(vec![], 1), Instance::new(vec![(3, 1.0)], -1)],
            dim: 3,
        };
        let a = augment_bias(&d);
        assert_eq!(a.instances[0].features, vec![(4, 1.0)]);
    }

    fn toy(n: usize, offset: u32) -> Dataset {
        let instances = (0..n)
            .map(|i| {
                Instance::new(
                    vec![(1, offset as f64 + i as f64 + 1.0)],
                    if i % 2 == 0 { 1 } else { -1 },
                )
            })
            .collect();
        Dataset { instances, dim: 1 }
    }

    #[test]
    fn plan_counts_match_rounding() {
        let base = toy(100, 0);
        let pool = toy(50, 1000);
        let plan = ModificationPlan {
            p_up: 0.05,
            add_fraction: 0.6,
            seed: 7,
        };
        let m = plan_modification(&base, &pool, &plan).unwrap();
        assert_eq!(m.n_added(), 3);
        assert_eq!(m.n_removed(), 2);
        let p_up = (m.n_added() + m.n_removed()) as f64 / base.len() as f64;
        assert!((p_up - 0.05).abs() <= 1.0 / base.len() as f64);
    }

    #[test]
    fn zero_ratio_gives_empty_modification() {
        let base = toy(10, 0);
        let pool = toy(10, 100);
        let plan = ModificationPlan {
            p_up: 0.0,
            add_fraction: 0.5,
            seed: 1,
        };
        assert!(plan_modification(&base, &pool, &plan).unwrap().is_empty());
    }

    #[test]
    fn same_seed_same_modification() {
        let base = toy(60, 0);
        let pool = toy(60, 100);
        let plan = ModificationPlan {
            p_up: 0.2,
            add_fraction: 0.5,
            seed: 42,
        };
        let a = plan_modification(&base, &pool, &plan).unwrap();
        let b = plan_modification(&base, &pool, &plan).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn overlapping_pool_rejected() {
        let base = toy(10, 0);
        let plan = ModificationPlan {
            p_up: 0.3,
            add_fraction: 1.0,
            seed: 1,
        };
        assert!(matches!(
            plan_modification(&base, &base, &plan),
            Err(Error::OverlappingPools)
        ));
    }

    #[test]
    fn infeasible_counts_rejected() {
        let base = toy(10, 0);
        let pool = toy(2, 100);
        let plan = ModificationPlan {
            p_up: 1.0,
            add_fraction: 0.9,
            seed: 1,
        };
        assert!(matches!(
            plan_modification(&base, &pool, &plan),
            Err(Error::InfeasibleModification(_))
        ));
    }

    #[test]
    fn apply_counts_and_order() {
        let base = toy(10, 0);
        let pool = toy(5, 100);
        let m = Modification {
            added: pool.instances[..2].to_vec(),
            removed: vec![0, 4, 9],
        };
        let d1 = apply_modification(&base, &m).unwrap();
        assert_eq!(d1.len(), 9);
        // survivors first, in original order
        assert_eq!(d1.instances[0], base.instances[1]);
        assert_eq!(d1.instances[7], pool.instances[0]);
        assert_eq!(d1.instances[8], pool.instances[1]);
    }

    #[test]
    fn apply_empty_is_identity() {
        let base = toy(7, 0);
        let d1 = apply_modification(&base, &Modification::default()).unwrap();
        assert_eq!(d1.instances, base.instances);
    }

    #[test]
    fn remove_all_add_one() {
        let base = toy(3, 0);
        let m = Modification {
            added: vec![Instance::new(vec![(1, 99.0)], 1)],
            removed: vec![0, 1, 2],
        };
        let d1 = apply_modification(&base, &m).unwrap();
        assert_eq!(d1.len(), 1);
    }

    #[test]
    fn planned_modification_applies_consistently() {
        let base = toy(50, 0);
        let pool = toy(20, 1000);
        let plan = ModificationPlan {
            p_up: 0.2,
            add_fraction: 0.4,
            seed: 3,
        };
        let m = plan_modification(&base, &pool, &plan).unwrap();
        let d1 = apply_modification(&base, &m).unwrap();
        assert_eq!(d1.len(), base.len() + m.n_added() - m.n_removed());
        for inst in &m.added {
            assert!(d1.instances.contains(inst));
        }
    }
}
