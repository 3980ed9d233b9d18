//! Individual losses, their gradients, and the regularized empirical
//! objective for the two supported convex differentiable losses.

use serde::{Deserialize, Serialize};

use crate::data_io::{Dataset, Instance};
use crate::error::{Error, Result};
use crate::vecops::dot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossKind {
    /// max(1 - y w^T x, 0)^2 (L2-SVM)
    SquaredHinge,
    /// log(1 + exp(-y w^T x))
    Logistic,
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LossKind::SquaredHinge => write!(f, "squared_hinge"),
            LossKind::Logistic => write!(f, "logistic"),
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "squared_hinge" | "l2svm" | "svm" => Ok(LossKind::SquaredHinge),
            "logistic" | "logreg" | "lr" => Ok(LossKind::Logistic),
            other => Err(Error::Config(format!("unknown loss `{other}`"))),
        }
    }
}

/// Overflow-safe logistic sigmoid.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(z)) without overflow.
fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn check_dims(w: &[f64], inst: &Instance) -> Result<()> {
    let need = inst.max_index() as usize;
    if need > w.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            got: need,
        });
    }
    Ok(())
}

pub fn loss_value(kind: LossKind, w: &[f64], inst: &Instance) -> Result<f64> {
    check_dims(w, inst)?;
    let m = inst.label as f64 * inst.dot(w);
    Ok(match kind {
        LossKind::SquaredHinge => (1.0 - m).max(0.0).powi(2),
        LossKind::Logistic => log1p_exp(-m),
    })
}

/// dl/d(w^T x) at margin m = y w^T x, so that grad = slope * x.
pub fn loss_slope(kind: LossKind, margin: f64, label: f64) -> f64 {
    match kind {
        LossKind::SquaredHinge => -2.0 * (1.0 - margin).max(0.0) * label,
        LossKind::Logistic => -label * sigmoid(-margin),
    }
}

/// Gradient of the individual loss, returned dense.
pub fn loss_gradient(kind: LossKind, w: &[f64], inst: &Instance) -> Result<Vec<f64>> {
    check_dims(w, inst)?;
    let y = inst.label as f64;
    let slope = loss_slope(kind, y * inst.dot(w), y);
    let mut g = vec![0.0; w.len()];
    for &(idx, val) in &inst.features {
        g[(idx - 1) as usize] = slope * val;
    }
    Ok(g)
}

/// Accumulate slope * x into a dense buffer without allocating.
pub fn add_loss_gradient(
    kind: LossKind,
    w: &[f64],
    inst: &Instance,
    sign: f64,
    acc: &mut [f64],
) -> Result<()> {
    check_dims(w, inst)?;
    let y = inst.label as f64;
    let slope = loss_slope(kind, y * inst.dot(w), y);
    for &(idx, val) in &inst.features {
        acc[(idx - 1) as usize] += sign * slope * val;
    }
    Ok(())
}

/// (C/2)||w||^2 + (1/n) sum_i l_i(w)
pub fn objective(kind: LossKind, c_reg: f64, data: &Dataset, w: &[f64]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut sum = 0.0;
    for inst in &data.instances {
        sum += loss_value(kind, w, inst)?;
    }
    Ok(0.5 * c_reg * dot(w, w) + sum / data.len() as f64)
}

/// C w + (1/n) sum_i grad l_i(w)
pub fn objective_gradient(kind: LossKind, c_reg: f64, data: &Dataset, w: &[f64]) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = data.len() as f64;
    let mut g: Vec<f64> = w.iter().map(|x| c_reg * x).collect();
    for inst in &data.instances {
        add_loss_gradient(kind, w, inst, 1.0 / n, &mut g)?;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::parse_libsvm_str;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn inst(features: Vec<(u32, f64)>, label: i8) -> Instance {
        Instance::new(features, label)
    }

    /// Central finite differences of loss_value, the independent oracle
    /// for the analytic gradients.
    fn fd_loss_gradient(kind: LossKind, w: &[f64], i: &Instance, h: f64) -> Vec<f64> {
        (0..w.len())
            .map(|j| {
                let mut wp = w.to_vec();
                let mut wm = w.to_vec();
                wp[j] += h;
                wm[j] -= h;
                (loss_value(kind, &wp, i).unwrap() - loss_value(kind, &wm, i).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn loss_at_zero_weights() {
        let x = inst(vec![(1, 0.7), (2, -3.0)], 1);
        let w = vec![0.0, 0.0];
        assert_eq!(loss_value(LossKind::SquaredHinge, &w, &x).unwrap(), 1.0);
        let lv = loss_value(LossKind::Logistic, &w, &x).unwrap();
        assert!((lv - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn satisfied_hinge_is_zero() {
        // y w^T x = 2
        let x = inst(vec![(1, 2.0)], 1);
        let w = vec![1.0];
        assert_eq!(loss_value(LossKind::SquaredHinge, &w, &x).unwrap(), 0.0);
        assert_eq!(
            loss_gradient(LossKind::SquaredHinge, &vec![3.0], &inst(vec![(1, 1.0)], 1)).unwrap(),
            vec![0.0]
        );
    }

    #[test]
    fn gradient_examples_at_zero() {
        let w = vec![0.0, 0.0];
        let x = inst(vec![(1, 1.0)], 1);
        let g = loss_gradient(LossKind::Logistic, &w, &x).unwrap();
        assert!((g[0] - (-0.5)).abs() < 1e-12);
        assert_eq!(g[1], 0.0);
        let g = loss_gradient(LossKind::SquaredHinge, &w, &x).unwrap();
        assert!((g[0] - (-2.0)).abs() < 1e-12);
        assert_eq!(g[1], 0.0);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for kind in [LossKind::SquaredHinge, LossKind::Logistic] {
            for _ in 0..120 {
                let d = rng.gen_range(1..=8usize);
                let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let mut feats: Vec<(u32, f64)> = Vec::new();
                for j in 0..d {
                    if rng.gen_bool(0.7) {
                        feats.push((j as u32 + 1, rng.gen_range(-2.0..2.0)));
                    }
                }
                let x = inst(feats, if rng.gen_bool(0.5) { 1 } else { -1 });
                let g = loss_gradient(kind, &w, &x).unwrap();
                let fd = fd_loss_gradient(kind, &w, &x, 1e-6);
                let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                for (a, b) in g.iter().zip(&fd) {
                    assert!(
                        (a - b).abs() <= 1e-6 * scale,
                        "{kind}: {a} vs fd {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn hinge_gradient_continuous_at_margin_one() {
        // margin -> 1 from below: slope -> 0
        let x = inst(vec![(1, 1.0)], 1);
        let g = loss_gradient(LossKind::SquaredHinge, &[1.0 - 1e-9], &x).unwrap();
        assert!(g[0].abs() < 1e-8);
    }

    #[test]
    fn objective_at_zero() {
        let d = parse_libsvm_str("+1 1:0.5\n-1 2:2\n+1 1:1 2:1").unwrap();
        let w = vec![0.0, 0.0];
        assert!(
            (objective(LossKind::Logistic, 1.0, &d, &w).unwrap() - std::f64::consts::LN_2).abs()
                < 1e-12
        );
        assert_eq!(objective(LossKind::SquaredHinge, 1.0, &d, &w).unwrap(), 1.0);
    }

    #[test]
    fn objective_hand_example() {
        // single instance x=1 (1-D), y=1, C=2, squared hinge, w=0.5
        let d = parse_libsvm_str("+1 1:1").unwrap();
        let v = objective(LossKind::SquaredHinge, 2.0, &d, &[0.5]).unwrap();
        assert!((v - 0.5).abs() < 1e-14);
    }

    #[test]
    fn objective_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = parse_libsvm_str(
            "+1 1:0.4 3:-1.1\n-1 2:0.9 5:2\n+1 4:0.3\n-1 1:-2 5:0.5\n+1 2:1 3:1\n-1 4:-0.7\n+1 5:1.5\n-1 3:0.2\n+1 1:1 2:-1\n-1 2:2 4:1",
        )
        .unwrap();
        for kind in [LossKind::SquaredHinge, LossKind::Logistic] {
            let w: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let g = objective_gradient(kind, 0.7, &d, &w).unwrap();
            for j in 0..5 {
                let h = 1e-6;
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp[j] += h;
                wm[j] -= h;
                let fd = (objective(kind, 0.7, &d, &wp).unwrap()
                    - objective(kind, 0.7, &d, &wm).unwrap())
                    / (2.0 * h);
                assert!((g[j] - fd).abs() < 1e-6, "{kind} coord {j}: {} vs {fd}", g[j]);
            }
        }
    }

    #[test]
    fn objective_gradient_zero_by_symmetry() {
        // both labels on the same x: the logistic slopes cancel at w = 0
        let d = parse_libsvm_str("+1 1:1 2:-2\n-1 1:1 2:-2").unwrap();
        let g = objective_gradient(LossKind::Logistic, 1.0, &d, &[0.0, 0.0]).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn dimension_mismatch_detected() {
        let x = inst(vec![(3, 1.0)], 1);
        assert!(matches!(
            loss_value(LossKind::Logistic, &[0.0, 0.0], &x),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sampled_convexity() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let d = parse_libsvm_str("+1 1:0.4 2:-1.1\n-1 2:0.9\n+1 1:0.3 2:0.2\n-1 1:-2").unwrap();
        for kind in [LossKind::SquaredHinge, LossKind::Logistic] {
            for _ in 0..200 {
                let w1: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let w2: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let th: f64 = rng.gen_range(0.0..1.0);
                let wm: Vec<f64> = w1
                    .iter()
                    .zip(&w2)
                    .map(|(a, b)| th * a + (1.0 - th) * b)
                    .collect();
                let lhs = objective(kind, 0.5, &d, &wm).unwrap();
                let rhs = th * objective(kind, 0.5, &d, &w1).unwrap()
                    + (1.0 - th) * objective(kind, 0.5, &d, &w2).unwrap();
                assert!(lhs <= rhs + 1e-12);
            }
        }
    }
}
