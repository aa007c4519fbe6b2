//! Slip-rate-dependent friction bound and the nodal-lumped friction functional.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mesh::Mesh;
use crate::spaces::{
    contact_nodes, estimate_trace_constant, gram_matrix, gram_norm, ContactNodes, FeSpace, TraceOptions, TraceQuadrature,
};
use crate::{Error, Result};

/// Built-in families for the friction bound `r(s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrictionBound {
    /// Tresca: `r(s) = r0`.
    Constant { r0: f64 },
    /// `r(s) = a + b s/(1+s)`
    AffineSaturating { a: f64, b: f64 },
    /// `r(s) = min(a + b s, r_max)`
    LinearCapped { a: f64, b: f64, r_max: f64 },
}

impl FrictionBound {
    pub fn eval(&self, s: f64) -> f64 {
        let s = s.abs();
        match *self {
            FrictionBound::Constant { r0 } => r0,
            FrictionBound::AffineSaturating { a, b } => a + b * s / (1.0 + s),
            FrictionBound::LinearCapped { a, b, r_max } => (a + b * s).min(r_max),
        }
    }

    /// Smallest valid Lipschitz constant in `s`.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            FrictionBound::Constant { .. } => 0.0,
            FrictionBound::AffineSaturating { b, .. } => b.abs(),
            FrictionBound::LinearCapped { a, b, r_max } => {
                if a >= r_max {
                    0.0
                } else {
                    b.abs()
                }
            }
        }
    }

    fn check(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::invalid(format!("friction bound: {msg}")));
        match *self {
            FrictionBound::Constant { r0 } => {
                if !(r0 >= 0.0) || !r0.is_finite() {
                    return bad("r0 must be finite and nonnegative");
                }
            }
            FrictionBound::AffineSaturating { a, b } => {
                if !a.is_finite() || !b.is_finite() || a < 0.0 || a + b < 0.0 {
                    return bad("need a >= 0 and a + b >= 0");
                }
            }
            FrictionBound::LinearCapped { a, b, r_max } => {
                if !a.is_finite() || !b.is_finite() || !r_max.is_finite() || a < 0.0 || b < 0.0 || r_max < 0.0 {
                    return bad("need a, b, r_max >= 0");
                }
            }
        }
        Ok(())
    }
}

/// Frictional heat generation `h_τ` on the contact boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeatGeneration {
    #[default]
    None,
    /// `h(s) = r(s) s`
    FrictionalPower,
}

impl HeatGeneration {
    pub fn is_active(self) -> bool {
        self != HeatGeneration::None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionLaw {
    pub bound: FrictionBound,
    pub heat: HeatGeneration,
    lipschitz: f64,
}

impl FrictionLaw {
    pub fn new(bound: FrictionBound, heat: HeatGeneration) -> Result<Self> {
        bound.check()?;
        Ok(FrictionLaw {
            bound,
            heat,
            lipschitz: bound.lipschitz(),
        })
    }

    pub fn tresca(r0: f64) -> Result<Self> {
        Self::new(FrictionBound::Constant { r0 }, HeatGeneration::None)
    }

    /// Declares a (possibly larger) Lipschitz constant. Smaller than the
    /// family's own constant is rejected.
    pub fn with_lipschitz(mut self, l: f64) -> Result<Self> {
        if !(l >= self.bound.lipschitz()) || !l.is_finite() {
            return Err(Error::invalid(format!(
                "declared L_r = {l} is below the family constant {}",
                self.bound.lipschitz()
            )));
        }
        self.lipschitz = l;
        Ok(self)
    }

    /// `r(x, s)`; the built-in families are uniform in `x`.
    pub fn r(&self, _x: [f64; 2], s: f64) -> f64 {
        self.bound.eval(s)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn is_constant(&self) -> bool {
        self.lipschitz == 0.0 || matches!(self.bound, FrictionBound::Constant { .. })
    }

    pub fn heat_generation(&self, x: [f64; 2], s: f64) -> f64 {
        match self.heat {
            HeatGeneration::None => 0.0,
            HeatGeneration::FrictionalPower => self.r(x, s) * s.abs(),
        }
    }

    /// Largest sampled `|r(s1) - r(s2)| / |s1 - s2|` and largest violation of
    /// `r >= 0`, over `samples` random pairs in `[0, s_max]`.
    pub fn sample_lipschitz(&self, samples: usize, s_max: f64, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut slope: f64 = 0.0;
        let mut negative: f64 = 0.0;
        for _ in 0..samples {
            let s1 = rng.gen_range(0.0..s_max);
            let s2 = rng.gen_range(0.0..s_max);
            let (r1, r2) = (self.r([0.0; 2], s1), self.r([0.0; 2], s2));
            negative = negative.max(-r1).max(-r2);
            if s1 != s2 {
                slope = slope.max((r1 - r2).abs() / (s1 - s2).abs());
            }
        }
        (slope, negative)
    }

    /// Per-contact-node bounds `r(x_i, |η_i|)`.
    pub fn frozen_bounds(&self, contact: &ContactNodes, eta: &[f64]) -> Vec<f64> {
        contact
            .dofs
            .iter()
            .zip(&contact.positions)
            .map(|(&d, &x)| self.r(x, eta[d].abs()))
            .collect()
    }
}

/// `sqrt(s² + ε²) - ε`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizedAbs {
    pub eps: f64,
}

impl RegularizedAbs {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::invalid("regularization length must be positive"));
        }
        Ok(RegularizedAbs { eps })
    }

    pub fn value(&self, s: f64) -> f64 {
        let h = crate::math::hypot(s, self.eps);
        // (s²)/(h + ε) avoids cancellation for small s
        s * s / (h + self.eps)
    }

    pub fn derivative(&self, s: f64) -> f64 {
        s / crate::math::hypot(s, self.eps)
    }

    pub fn second(&self, s: f64) -> f64 {
        let h = crate::math::hypot(s, self.eps);
        self.eps * self.eps / (h * h * h)
    }
}

/// `Σ w_i r(x_i, |η_i|) |v_i|` over the contact nodes.
pub fn eval_j_lumped(contact: &ContactNodes, law: &FrictionLaw, eta: &[f64], v: &[f64]) -> f64 {
    contact
        .dofs
        .iter()
        .zip(&contact.weights)
        .zip(&contact.positions)
        .map(|((&d, w), &x)| w * law.r(x, eta[d].abs()) * v[d].abs())
        .sum()
}

/// Nodal-lumped friction functional `j(η, v)` on `V`.
pub fn eval_j(mesh: &Mesh, space: &FeSpace, law: &FrictionLaw, eta: &[f64], v: &[f64]) -> Result<f64> {
    Error::check_len(space.dim(), eta.len())?;
    Error::check_len(space.dim(), v.len())?;
    Ok(eval_j_lumped(&contact_nodes(mesh, space), law, eta, v))
}

/// Regularized `Σ w_i g_i (sqrt(v_i²+ε²) - ε)`.
pub fn eval_j_regularized(contact: &ContactNodes, g: &[f64], v: &[f64], reg: RegularizedAbs) -> f64 {
    contact
        .dofs
        .iter()
        .enumerate()
        .map(|(k, &d)| contact.weights[k] * g[k] * reg.value(v[d]))
        .sum()
}

/// Gradient and diagonal Hessian of the regularized functional, as vectors
/// on the free dofs of `V`. `g` holds one bound per contact node.
pub fn regularized_j_gradient(contact: &ContactNodes, g: &[f64], v: &[f64], reg: RegularizedAbs) -> (Vec<f64>, Vec<f64>) {
    let mut grad = vec![0.0; v.len()];
    let mut hess = vec![0.0; v.len()];
    for (k, &d) in contact.dofs.iter().enumerate() {
        let wg = contact.weights[k] * g[k];
        grad[d] = wg * reg.derivative(v[d]);
        hess[d] = wg * reg.second(v[d]);
    }
    (grad, hess)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourTermReport {
    pub samples: usize,
    pub max_ratio: f64,
    pub trace_constant: f64,
    pub lipschitz: f64,
    pub passed: bool,
}

/// Samples `j(η1,v2) - j(η1,v1) + j(η2,v1) - j(η2,v2)` against
/// `c² L_r ‖η1-η2‖ ‖v1-v2‖`. `c` must be the trace constant for the lumped
/// `G3` quadrature, the one `j` is built on.
pub fn check_four_term_bound(
    mesh: &Mesh,
    space: &FeSpace,
    law: &FrictionLaw,
    c: f64,
    samples: usize,
    seed: u64,
) -> FourTermReport {
    let contact = contact_nodes(mesh, space);
    let gram = gram_matrix(mesh, space);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = space.dim();
    let l = law.lipschitz();
    let mut max_ratio: f64 = 0.0;
    let random = |scale: f64, rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect() };
    // near-extremal direction: the lumped trace maximizer, at rest where r is steepest
    let opts = TraceOptions {
        quadrature: TraceQuadrature::Lumped,
        ..Default::default()
    };
    let extremal: Option<Vec<f64>> = estimate_trace_constant(mesh, space, &opts)
        .ok()
        .map(|t| t.maximizer.iter().map(|x| x.abs()).collect());
    for s in 0..samples {
        let (eta1, d, v1, v2) = match (&extremal, s % 3) {
            (Some(m), 2) => {
                let eps = rng.gen_range(1e-4..1e-1);
                let t = rng.gen_range(0.1..2.0);
                let d: Vec<f64> = m.iter().map(|x| eps * x).collect();
                (vec![0.0; n], d, m.iter().map(|x| t * x).collect(), vec![0.0; n])
            }
            _ => {
                let spread = if s % 3 == 0 { 2.0 } else { 0.05 };
                let eta1 = random(2.0, &mut rng);
                let d = random(spread, &mut rng);
                (eta1, d, random(1.0, &mut rng), random(1.0, &mut rng))
            }
        };
        let eta2: Vec<f64> = eta1.iter().zip(&d).map(|(a, b)| a + b).collect();
        let lhs = eval_j_lumped(&contact, law, &eta1, &v2) - eval_j_lumped(&contact, law, &eta1, &v1)
            + eval_j_lumped(&contact, law, &eta2, &v1)
            - eval_j_lumped(&contact, law, &eta2, &v2);
        let rhs = c * c * l * gram_norm(&gram, &d) * gram_norm(&gram, &crate::math::sub(&v1, &v2));
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs.abs() <= 1e-14 {
            0.0
        } else {
            f64::INFINITY
        };
        max_ratio = max_ratio.max(ratio);
    }
    FourTermReport {
        samples,
        max_ratio,
        trace_constant: c,
        lipschitz: l,
        passed: max_ratio <= 1.0 + 1e-9,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_rect_mesh, TaggingRule};
    use crate::spaces::{build_space, estimate_trace_constant, SpaceKind, TraceOptions, TraceQuadrature};

    fn setup(n: usize) -> (Mesh, FeSpace) {
        let mesh = generate_rect_mesh(1.0, 1.0, n, n, &TaggingRule::standard()).unwrap();
        let v = build_space(&mesh, SpaceKind::V).unwrap();
        (mesh, v)
    }

    fn affine() -> FrictionLaw {
        FrictionLaw::new(FrictionBound::AffineSaturating { a: 0.5, b: 2.0 }, HeatGeneration::None).unwrap()
    }

    #[test]
    fn families() {
        let l = FrictionBound::LinearCapped { a: 1.0, b: 2.0, r_max: 2.0 };
        assert_eq!(l.eval(0.25), 1.5);
        assert_eq!(l.eval(3.0), 2.0);
        assert_eq!(l.lipschitz(), 2.0);
        assert_eq!(FrictionBound::AffineSaturating { a: 1.0, b: 2.0 }.eval(1.0), 2.0);
        assert!(FrictionLaw::new(FrictionBound::Constant { r0: -1.0 }, HeatGeneration::None).is_err());
        assert!(FrictionLaw::new(FrictionBound::AffineSaturating { a: 1.0, b: -2.0 }, HeatGeneration::None).is_err());
        for law in [
            affine(),
            FrictionLaw::new(l, HeatGeneration::None).unwrap(),
            FrictionLaw::new(FrictionBound::AffineSaturating { a: 3.0, b: -1.0 }, HeatGeneration::None).unwrap(),
        ] {
            let (slope, neg) = law.sample_lipschitz(2000, 10.0, 1);
            assert!(slope <= law.lipschitz() * (1.0 + 1e-12));
            assert_eq!(neg, 0.0);
        }
        assert!(affine().with_lipschitz(1.0).is_err());
        assert_eq!(affine().with_lipschitz(3.0).unwrap().lipschitz(), 3.0);
    }

    #[test]
    fn j_examples() {
        let (mesh, v) = setup(4);
        let law = FrictionLaw::tresca(0.7).unwrap();
        let zero = vec![0.0; v.dim()];
        let one = vec![1.0; v.dim()];
        assert_eq!(eval_j(&mesh, &v, &law, &one, &zero).unwrap(), 0.0);
        assert!((eval_j(&mesh, &v, &law, &zero, &one).unwrap() - 0.7).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = affine();
        for _ in 0..20 {
            let eta: Vec<f64> = (0..v.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x: Vec<f64> = (0..v.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x2: Vec<f64> = x.iter().map(|t| 2.0 * t).collect();
            let j1 = eval_j(&mesh, &v, &a, &eta, &x).unwrap();
            let j2 = eval_j(&mesh, &v, &a, &eta, &x2).unwrap();
            assert!((j2 - 2.0 * j1).abs() <= 1e-14 * j2.abs());
        }
    }

    #[test]
    fn convexity_and_regularization_bound() {
        let (mesh, v) = setup(6);
        let c = contact_nodes(&mesh, &v);
        let law = affine();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let eta: Vec<f64> = (0..v.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v1: Vec<f64> = (0..v.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v2: Vec<f64> = (0..v.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let t: f64 = rng.gen_range(0.0..1.0);
            let mix: Vec<f64> = v1.iter().zip(&v2).map(|(a, b)| (1.0 - t) * a + t * b).collect();
            let lhs = eval_j_lumped(&c, &law, &eta, &mix);
            let rhs = (1.0 - t) * eval_j_lumped(&c, &law, &eta, &v1) + t * eval_j_lumped(&c, &law, &eta, &v2);
            assert!(lhs <= rhs + 1e-14);

            let g = law.frozen_bounds(&c, &eta);
            let sum_wg: f64 = c.weights.iter().zip(&g).map(|(w, g)| w * g).sum();
            for eps in [1e-1, 1e-3, 1e-6] {
                let reg = RegularizedAbs::new(eps).unwrap();
                let d = (eval_j_regularized(&c, &g, &v1, reg) - eval_j_lumped(&c, &law, &eta, &v1)).abs();
                assert!(d <= eps * sum_wg * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn regularized_abs() {
        let r = RegularizedAbs::new(1e-2).unwrap();
        assert_eq!(r.value(0.0), 0.0);
        assert!(RegularizedAbs::new(0.0).is_err());
        for s in [-3.0, -1e-3, 0.0, 1e-4, 0.5, 10.0] {
            assert!(r.value(s) >= 0.0);
            assert!(r.derivative(s).abs() <= 1.0);
            assert!(r.second(s) <= 1.0 / r.eps + 1e-12);
        }
    }

    #[test]
    fn gradient_examples() {
        let (mesh, v) = setup(4);
        let c = contact_nodes(&mesh, &v);
        let g: Vec<f64> = (0..c.len()).map(|k| 1.0 + k as f64).collect();
        let eps = 1e-2;
        let reg = RegularizedAbs::new(eps).unwrap();
        let (grad, hess) = regularized_j_gradient(&c, &g, &vec![0.0; v.dim()], reg);
        assert!(grad.iter().all(|x| *x == 0.0));
        for (k, &d) in c.dofs.iter().enumerate() {
            assert!((hess[d] - c.weights[k] * g[k] / eps).abs() < 1e-9);
        }
        let (grad, _) = regularized_j_gradient(&c, &g, &vec![1e8; v.dim()], reg);
        for (k, &d) in c.dofs.iter().enumerate() {
            assert!((grad[d] - c.weights[k] * g[k]).abs() < 1e-12);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<f64> = (0..v.dim()).map(|_| rng.gen_range(-0.1..0.1)).collect();
        let (grad, hess) = regularized_j_gradient(&c, &g, &x, reg);
        let h = 1e-6;
        for &d in &c.dofs {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[d] += h;
            xm[d] -= h;
            let fd = (eval_j_regularized(&c, &g, &xp, reg) - eval_j_regularized(&c, &g, &xm, reg)) / (2.0 * h);
            assert!((fd - grad[d]).abs() <= 1e-6 * grad[d].abs().max(1e-3), "{fd} {}", grad[d]);
            assert!(hess[d] >= 0.0);
        }
    }

    #[test]
    fn four_term_bound() {
        let (mesh, v) = setup(4);
        let opts = TraceOptions { quadrature: TraceQuadrature::Lumped, ..Default::default() };
        let c = estimate_trace_constant(&mesh, &v, &opts).unwrap().value;
        let law = affine();
        let rep = check_four_term_bound(&mesh, &v, &law, c, 1000, 11);
        assert!(rep.passed, "{rep:?}");
        // the extremal samples make the bound nearly tight
        assert!(rep.max_ratio > 0.9, "{rep:?}");
        // and an understated trace constant is caught
        assert!(!check_four_term_bound(&mesh, &v, &law, 0.9 * c, 300, 11).passed);

        let contact = contact_nodes(&mesh, &v);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let eta: Vec<f64> = (0..v.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v1: Vec<f64> = (0..v.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v2: Vec<f64> = (0..v.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lhs = eval_j_lumped(&contact, &law, &eta, &v2) - eval_j_lumped(&contact, &law, &eta, &v1)
            + eval_j_lumped(&contact, &law, &eta, &v1)
            - eval_j_lumped(&contact, &law, &eta, &v2);
        assert!(lhs.abs() < 1e-15);
    }
}
