use std::fmt;
use std::sync::Arc;

use crate::error::Error;
use crate::simplex::{BarycentricPoint, TAU_SUM};

type EvalFn = dyn Fn(&BarycentricPoint) -> BarycentricPoint + Send + Sync;
type ModulusFn = dyn Fn(f64) -> f64 + Send + Sync;

/// An evaluatable self-map of the n-simplex, with an optional modulus of
/// uniform continuity δ(ε) measured in barycentric ℓ1 distance.
///
/// Maps must be pure: they are evaluated concurrently and memoized.
#[derive(Clone)]
pub struct SelfMap {
    pub name: String,
    eval: Arc<EvalFn>,
    modulus: Option<Arc<ModulusFn>>,
}

impl fmt::Debug for SelfMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SelfMap")
            .field("name", &self.name)
            .field("modulus", &self.modulus.is_some())
            .finish()
    }
}

impl SelfMap {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(&BarycentricPoint) -> BarycentricPoint + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            modulus: None,
        }
    }

    pub fn with_modulus(
        mut self,
        modulus: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.modulus = Some(Arc::new(modulus));
        self
    }

    /// Modulus δ(ε) = ε/L for a Lipschitz constant L (ℓ1 to ℓ1).
    pub fn with_lipschitz(self, l: f64) -> Self {
        self.with_modulus(move |eps| {
            if l <= 0.0 {
                crate::simplex::SIMPLEX_DIAMETER
            } else {
                (eps / l).min(crate::simplex::SIMPLEX_DIAMETER)
            }
        })
    }

    pub fn eval(&self, v: &BarycentricPoint) -> BarycentricPoint {
        (self.eval)(v)
    }

    /// Evaluate and verify the image is a simplex point.
    pub fn checked_eval(&self, v: &BarycentricPoint) -> Result<BarycentricPoint, Error> {
        let fv = self.eval(v);
        let sum: f64 = fv.coords().iter().sum();
        let slack = TAU_SUM * (v.dim() + 1) as f64;
        if fv.dim() != v.dim()
            || (sum - 1.0).abs() > slack
            || fv.coords().iter().any(|&c| c < -slack)
        {
            return Err(Error::RangeViolation {
                input: v.coords().to_vec(),
                output: fv.coords().to_vec(),
                detail: "image is not a simplex point".into(),
            });
        }
        Ok(fv)
    }

    pub fn modulus(&self, eps: f64) -> Option<f64> {
        self.modulus.as_ref().map(|m| m(eps))
    }

    pub fn has_modulus(&self) -> bool {
        self.modulus.is_some()
    }

    /// ℓ1 residual |f(v) - v|₁.
    pub fn residual(&self, v: &BarycentricPoint) -> f64 {
        self.eval(v).l1_distance(v)
    }
}

/// The identity map. Violates local non-constancy everywhere; used to
/// exercise the violation-detection paths.
pub fn identity(n: usize) -> SelfMap {
    let _ = n;
    SelfMap::new("identity", |v: &BarycentricPoint| v.clone()).with_lipschitz(1.0)
}

/// Constant map to a fixed target point.
pub fn constant(target: BarycentricPoint) -> SelfMap {
    SelfMap::new("constant", move |_: &BarycentricPoint| target.clone()).with_lipschitz(0.0)
}

/// Cyclic coordinate shift; its unique fixed point is the barycenter.
pub fn cyclic_shift(n: usize) -> SelfMap {
    let _ = n;
    SelfMap::new("cyclic-shift", |v: &BarycentricPoint| {
        let c = v.coords();
        let k = c.len();
        let shifted: Vec<f64> = (0..k).map(|i| c[(i + k - 1) % k]).collect();
        BarycentricPoint::new(shifted).expect("shift preserves the simplex")
    })
    .with_lipschitz(1.0)
}

/// Affine contraction toward `center` with the given factor: v ↦ (1-t)·v + t·c
/// where t = 1 - factor. ℓ1-Lipschitz constant is exactly `factor`.
pub fn affine_contraction(center: BarycentricPoint, factor: f64) -> SelfMap {
    assert!((0.0..1.0).contains(&factor));
    let t = 1.0 - factor;
    SelfMap::new("affine-contraction", move |v: &BarycentricPoint| {
        v.lerp(&center, t)
    })
    .with_lipschitz(factor)
}

/// Markov map v ↦ Bv for a column-stochastic matrix B (columns sum to 1).
/// ℓ1-Lipschitz constant is the Dobrushin coefficient
/// max_{j,k} ½·|B e_j - B e_k|₁, attached exactly.
pub fn stochastic_matrix(b: Vec<Vec<f64>>) -> SelfMap {
    let k = b.len();
    for col in &b {
        assert_eq!(col.len(), k);
        assert!((col.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(col.iter().all(|&x| x >= 0.0));
    }
    let mut dobrushin: f64 = 0.0;
    for j in 0..k {
        for l in j + 1..k {
            let d: f64 = (0..k).map(|i| (b[j][i] - b[l][i]).abs()).sum();
            dobrushin = dobrushin.max(d / 2.0);
        }
    }
    let cols = b;
    SelfMap::new("stochastic-matrix", move |v: &BarycentricPoint| {
        let c = v.coords();
        let k = c.len();
        let out: Vec<f64> = (0..k)
            .map(|i| (0..k).map(|j| cols[j][i] * c[j]).sum())
            .collect();
        BarycentricPoint::new_clamped(out, 1e-9).expect("stochastic image stays in the simplex")
    })
    .with_lipschitz(dobrushin)
}

/// 1-D quadratic v ↦ (v₀², 1-v₀²); fixed points are the two corners.
pub fn quadratic_1d() -> SelfMap {
    SelfMap::new("quadratic", |v: &BarycentricPoint| {
        let x = v.coords()[0];
        BarycentricPoint::new_clamped(vec![x * x, 1.0 - x * x], 1e-9).unwrap()
    })
    .with_lipschitz(2.0)
}

/// Fixes the whole face spanned by corners 0 and 1 pointwise and pulls the
/// rest of the simplex toward it. Violates (sequential) local non-constancy
/// on that face.
pub fn edge_fixing(n: usize) -> SelfMap {
    assert!(n >= 2);
    SelfMap::new("edge-fixing", move |v: &BarycentricPoint| {
        // fold half of the mass beyond coordinates {0,1} back onto them
        let c = v.coords();
        let excess: f64 = c[2..].iter().sum();
        let mut out = c.to_vec();
        if excess > 0.0 {
            for x in &mut out[2..] {
                *x *= 0.5;
            }
            let total = c[0] + c[1];
            if total > 0.0 {
                out[0] += 0.5 * excess * c[0] / total;
                out[1] += 0.5 * excess * c[1] / total;
            } else {
                out[0] += 0.25 * excess;
                out[1] += 0.25 * excess;
            }
        }
        BarycentricPoint::new_clamped(out, 1e-9).unwrap()
    })
    .with_lipschitz(2.0)
}

/// Look up a corpus map by CLI name.
pub fn by_name(name: &str, n: usize) -> Result<SelfMap, Error> {
    match name {
        "identity" => Ok(identity(n)),
        "constant" => Ok(constant(BarycentricPoint::barycenter(n))),
        "constant-corner" => Ok(constant(BarycentricPoint::corner(n, 0))),
        "cyclic-shift" => Ok(cyclic_shift(n)),
        "affine-contraction" => Ok(affine_contraction(BarycentricPoint::barycenter(n), 0.5)),
        "quadratic" => {
            if n == 1 {
                Ok(quadratic_1d())
            } else {
                Err(Error::Spec("quadratic map is 1-dimensional (use --n 1)".into()))
            }
        }
        "edge-fixing" => {
            if n >= 2 {
                Ok(edge_fixing(n))
            } else {
                Err(Error::Spec("edge-fixing map needs n >= 2".into()))
            }
        }
        other => Err(Error::Spec(format!(
            "unknown map `{other}`; known: identity, constant, constant-corner, cyclic-shift, affine-contraction, quadratic, edge-fixing"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_shift_fixes_barycenter() {
        let f = cyclic_shift(2);
        let b = BarycentricPoint::barycenter(2);
        assert!(f.residual(&b) < 1e-15);
        let corner = BarycentricPoint::corner(2, 0);
        assert_eq!(f.eval(&corner).coords(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn contraction_modulus() {
        let f = affine_contraction(BarycentricPoint::barycenter(2), 0.5);
        assert_eq!(f.modulus(0.1), Some(0.2));
        let u = BarycentricPoint::corner(2, 0);
        let v = BarycentricPoint::corner(2, 1);
        let d = f.eval(&u).l1_distance(&f.eval(&v));
        assert!((d - 0.5 * u.l1_distance(&v)).abs() < 1e-12);
    }

    #[test]
    fn edge_fixing_fixes_the_edge() {
        let f = edge_fixing(2);
        let on_edge = BarycentricPoint::new(vec![0.3, 0.7, 0.0]).unwrap();
        assert!(f.residual(&on_edge) < 1e-15);
        let off_edge = BarycentricPoint::barycenter(2);
        assert!(f.residual(&off_edge) > 0.1);
    }

    #[test]
    fn checked_eval_flags_range_violation() {
        let bad = SelfMap::new("bad", |_: &BarycentricPoint| BarycentricPoint::corner(5, 0));
        let v = BarycentricPoint::corner(2, 0);
        assert!(matches!(
            bad.checked_eval(&v),
            Err(Error::RangeViolation { .. })
        ));
    }

    #[test]
    fn stochastic_matrix_lipschitz_is_dobrushin() {
        // columns of a 3x3 column-stochastic matrix
        let b = vec![
            vec![0.6, 0.2, 0.2],
            vec![0.1, 0.8, 0.1],
            vec![0.3, 0.3, 0.4],
        ];
        let f = stochastic_matrix(b.clone());
        // brute-force the worst pair ratio over sampled pairs
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let l = f.modulus(1.0).map(|d| 1.0 / d).unwrap();
        let mut worst: f64 = 0.0;
        for _ in 0..500 {
            let mut sample = || {
                let mut c: Vec<f64> = (0..3).map(|_| -f64::ln(rng.gen::<f64>())).collect();
                let s: f64 = c.iter().sum();
                c.iter_mut().for_each(|x| *x /= s);
                BarycentricPoint::new(c).unwrap()
            };
            let u = sample();
            let v = sample();
            let dist = u.l1_distance(&v);
            if dist > 1e-9 {
                worst = worst.max(f.eval(&u).l1_distance(&f.eval(&v)) / dist);
            }
        }
        assert!(worst <= l + 1e-9, "observed ratio {worst} above declared {l}");
    }
}
