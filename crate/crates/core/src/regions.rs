//! Regions guaranteed to contain the updated optimum w_1^*, and
//! closed-form extremization of linear scores over them.
//!
//! Three containers are built from the original optimum w_0^* and the
//! modification alone: a sphere, a half space cut from first-order
//! convexity at a feasible point, and their intersection (the segment
//! region), whose linear-score extrema have a two-case closed form.

use crate::data_io::{Dataset, Modification};
use crate::error::{Error, Result};
use crate::losses::{add_loss_gradient, objective_gradient, LossKind};
use crate::vecops::{add_scaled, dot, norm2, scale};

/// Per-modification gradient aggregates at w_0^*.
///
/// `delta_s` is the weighted difference of added/removed instance
/// gradients (zero when the modification is empty); `delta_l` is their
/// plain sum. Both cost O((n_A + n_S) * sparsity) to build.
#[derive(Debug, Clone)]
pub struct ModificationGradients {
    pub delta_s: Vec<f64>,
    pub delta_l: Vec<f64>,
    pub n0: usize,
    pub n1: usize,
    pub n_added: usize,
    pub n_removed: usize,
    pub c_reg: f64,
}

#[derive(Debug, Clone)]
pub struct SphereRegion {
    pub q: Vec<f64>,
    pub r: f64,
}

/// {w : n^T w <= c} with unit normal n.
#[derive(Debug, Clone)]
pub struct HalfSpace {
    pub n: Vec<f64>,
    pub c: f64,
}

/// Sphere ∩ half space. `psi` is the signed normalized distance from the
/// sphere center to the cutting plane, in [-1, 1].
#[derive(Debug, Clone)]
pub struct SegmentRegion {
    pub sphere: SphereRegion,
    pub plane: HalfSpace,
    pub psi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInterval {
    pub lower: f64,
    pub upper: f64,
}

impl BoundInterval {
    pub fn point(v: f64) -> Self {
        BoundInterval { lower: v, upper: v }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64, slack: f64) -> bool {
        self.lower - slack <= v && v <= self.upper + slack
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalfSpaceMode {
    /// Full gradient over the updated dataset; valid for any cut point.
    Exact,
    /// O(n_A + n_S) closed form; inherits a Taylor approximation, so its
    /// containment is checked empirically, never assumed.
    PaperClosedForm,
}

impl std::str::FromStr for HalfSpaceMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(HalfSpaceMode::Exact),
            "closed_form" | "paper" | "paperclosedform" => Ok(HalfSpaceMode::PaperClosedForm),
            other => Err(Error::Config(format!("unknown half-space mode `{other}`"))),
        }
    }
}

pub fn modification_gradients(
    kind: LossKind,
    c_reg: f64,
    w0: &[f64],
    base: &Dataset,
    m: &Modification,
) -> Result<ModificationGradients> {
    let d = w0.len();
    let n0 = base.len();
    let n_added = m.n_added();
    let n_removed = m.n_removed();
    let n1 = n0 + n_added - n_removed;

    let mut sum_a = vec![0.0; d];
    for inst in &m.added {
        add_loss_gradient(kind, w0, inst, 1.0, &mut sum_a)?;
    }
    let mut sum_s = vec![0.0; d];
    for &idx in &m.removed {
        add_loss_gradient(kind, w0, &base.instances[idx], 1.0, &mut sum_s)?;
    }

    let total = n_added + n_removed;
    let delta_s = if total == 0 {
        vec![0.0; d]
    } else {
        sum_a
            .iter()
            .zip(&sum_s)
            .map(|(a, s)| (a - s) / total as f64)
            .collect()
    };
    let delta_l = sum_a.iter().zip(&sum_s).map(|(a, s)| a + s).collect();

    Ok(ModificationGradients {
        delta_s,
        delta_l,
        n0,
        n1,
        n_added,
        n_removed,
        c_reg,
    })
}

/// Sphere known to contain w_1^*:
///   q = ((n0+n1)/(2 n1)) w0 - ((nA+nS)/(2 C n1)) Δs
///   r = || ((nA-nS)/(2 n1)) w0 + ((nA+nS)/(2 C n1)) Δs ||
pub fn sphere_region(g: &ModificationGradients, w0: &[f64]) -> Result<SphereRegion> {
    if g.n1 == 0 {
        return Err(Error::InfeasibleModification("updated dataset is empty".into()));
    }
    let n0 = g.n0 as f64;
    let n1 = g.n1 as f64;
    let total = (g.n_added + g.n_removed) as f64;
    let diff = g.n_added as f64 - g.n_removed as f64;
    let s_coeff = total / (2.0 * g.c_reg * n1);

    let q = add_scaled(&scale((n0 + n1) / (2.0 * n1), w0), -s_coeff, &g.delta_s);
    let r_vec = add_scaled(&scale(diff / (2.0 * n1), w0), s_coeff, &g.delta_s);
    Ok(SphereRegion { q, r: norm2(&r_vec) })
}

/// min/max of eta^T w over the sphere: q^T eta ∓ r ||eta||.
pub fn sphere_test(s: &SphereRegion, eta: &[f64]) -> BoundInterval {
    sphere_bounds(dot(&s.q, eta), norm2(eta), s.r)
}

pub(crate) fn sphere_bounds(q_eta: f64, eta_norm: f64, r: f64) -> BoundInterval {
    BoundInterval {
        lower: q_eta - r * eta_norm,
        upper: q_eta + r * eta_norm,
    }
}

/// The specific feasible point used by the closed-form half space:
///   w_C = (n0/n1) w0 - ((nA+nS)/(C n1)) Δs.
/// Note q - w_C equals the radius vector, so ||q - w_C|| = r.
pub fn feasible_point(g: &ModificationGradients, w0: &[f64]) -> Vec<f64> {
    let n1 = g.n1 as f64;
    let total = (g.n_added + g.n_removed) as f64;
    add_scaled(
        &scale(g.n0 as f64 / n1, w0),
        -total / (g.c_reg * n1),
        &g.delta_s,
    )
}

const DEGENERATE_GRAD_NORM: f64 = 1e-14;

/// Half space from first-order convexity: n = ∇f_1(w_c)/||∇f_1(w_c)||,
/// c = n^T w_c, with the gradient summed over the full updated dataset.
pub fn half_space_exact(
    kind: LossKind,
    c_reg: f64,
    updated: &Dataset,
    w_c: &[f64],
) -> Result<HalfSpace> {
    let grad = objective_gradient(kind, c_reg, updated, w_c)?;
    normal_from_direction(&grad, w_c)
}

/// O(n_A + n_S) half space: direction (-(nA+nS)/n1) Δs + (1/n1) ΔL,
/// cut at the same feasible point the sphere is built around.
/// Approximate by construction.
pub fn half_space_closed_form(g: &ModificationGradients, w0: &[f64]) -> Result<HalfSpace> {
    let n1 = g.n1 as f64;
    let total = (g.n_added + g.n_removed) as f64;
    let dir = add_scaled(&scale(-total / n1, &g.delta_s), 1.0 / n1, &g.delta_l);
    let w_c = feasible_point(g, w0);
    normal_from_direction(&dir, &w_c)
}

fn normal_from_direction(dir: &[f64], w_c: &[f64]) -> Result<HalfSpace> {
    let norm = norm2(dir);
    if norm < DEGENERATE_GRAD_NORM {
        return Err(Error::HalfSpaceDegenerate);
    }
    let n = scale(1.0 / norm, dir);
    let c = dot(&n, w_c);
    Ok(HalfSpace { n, c })
}

const PSI_SLACK: f64 = 1e-9;

/// Intersect sphere and half space. psi = (n^T q - c)/r, clamped into
/// [-1, 1] when within 1e-9; anything farther outside is a logic error
/// (an invalid half space, possible only in closed-form mode).
pub fn segment_region(sphere: &SphereRegion, plane: &HalfSpace) -> Result<SegmentRegion> {
    let nq = dot(&plane.n, &sphere.q);
    let psi = if sphere.r > 0.0 {
        let psi = (nq - plane.c) / sphere.r;
        if psi.abs() > 1.0 + PSI_SLACK {
            return Err(Error::RegionInconsistent { psi });
        }
        psi.clamp(-1.0, 1.0)
    } else {
        if nq > plane.c + 1e-10 {
            return Err(Error::RegionInconsistent {
                psi: f64::INFINITY,
            });
        }
        0.0
    };
    Ok(SegmentRegion {
        sphere: sphere.clone(),
        plane: plane.clone(),
        psi,
    })
}

/// min/max of eta^T w over the segment region (two-case closed form):
///   lower: t >  psi ||eta||  ->  q^T eta - r ||eta||
///          t <= psi ||eta||  ->  q^T eta - psi r t - r sqrt(1-psi^2) sqrt(||eta||^2 - t^2)
///   upper: t < -psi ||eta||  ->  q^T eta + r ||eta||
///          t >= -psi ||eta|| ->  q^T eta - psi r t + r sqrt(1-psi^2) sqrt(||eta||^2 - t^2)
/// with t = n^T eta.
pub fn segment_test(seg: &SegmentRegion, eta: &[f64]) -> BoundInterval {
    segment_bounds(
        dot(&seg.sphere.q, eta),
        dot(&seg.plane.n, eta),
        norm2(eta),
        seg.sphere.r,
        seg.psi,
    )
}

pub(crate) fn segment_bounds(q_eta: f64, t: f64, eta_norm: f64, r: f64, psi: f64) -> BoundInterval {
    let cap = r * (clamp_sqrt_arg(1.0 - psi * psi)
        * clamp_sqrt_arg(eta_norm * eta_norm - t * t))
        .sqrt();
    let lower = if t > psi * eta_norm {
        q_eta - r * eta_norm
    } else {
        q_eta - psi * r * t - cap
    };
    let upper = if t < -psi * eta_norm {
        q_eta + r * eta_norm
    } else {
        q_eta - psi * r * t + cap
    };
    BoundInterval { lower, upper }
}

fn clamp_sqrt_arg(v: f64) -> f64 {
    debug_assert!(v >= -1e-12, "sqrt argument {v} too negative");
    v.max(0.0)
}

/// width(segment) / width(sphere); the segment region is a subset, so the
/// ratio never exceeds 1 (up to floating-point noise).
pub fn interval_tightening(sphere_iv: &BoundInterval, segment_iv: &BoundInterval) -> Result<f64> {
    let sw = sphere_iv.width();
    let gw = segment_iv.width();
    if sw == 0.0 {
        if gw.abs() > 1e-12 {
            return Err(Error::IntervalInconsistent);
        }
        return Ok(1.0);
    }
    Ok(gw / sw)
}
