use serde::Serialize;

use crate::numerics::linalg::{dot, norm_sq, Vector};
use crate::numerics::Rational;

/// Lorentz-cone chain `M_ε = {0} ∪ {x ≠ 0 : ⟨x/|x|, v̄⟩ ≥ 1 - ε}` at the apex
/// of `epi |·|` on `R²` with `v̄ = e₁`.
pub fn lorentz_member(x: &[Rational], vbar: &[Rational], eps: &Rational) -> bool {
    if x.iter().all(|v| v.is_zero()) {
        return true;
    }
    let ip = dot(x, vbar);
    let level = &Rational::one() - eps;
    let rhs = &(&level * &level) * &(&norm_sq(x) * &norm_sq(vbar));
    if level.is_negative() {
        !ip.is_negative() || &ip * &ip <= rhs
    } else {
        !ip.is_negative() && &ip * &ip >= rhs
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LorentzWitness {
    pub radius: Rational,
    pub x: Vector,
    /// `⟨x/|x|, v̄⟩`, rational because `x` lies on a Pythagorean ray.
    pub cosine: Rational,
    /// The unique subgradient `x/|x|` of `|·|` at `x`.
    pub subgradient: Vector,
    pub in_m_eps: bool,
    pub in_m_eps_prime: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LorentzReport {
    pub eps: Rational,
    pub eps_prime: Rational,
    pub vbar: Vector,
    pub witnesses: Vec<LorentzWitness>,
    pub locally_minimal_identifiable_set: Option<String>,
    pub stabilizes: bool,
}

/// A rational unit vector `((1-t²)/(1+t²), 2t/(1+t²))` whose first
/// coordinate lies in `[lo, hi)`.
fn pythagorean_direction(lo: &Rational, hi: &Rational) -> Option<(Rational, Rational)> {
    for den in 1..=4096i64 {
        for num in 0..=den {
            let t = Rational::new(num, den);
            let t2 = &t * &t;
            let d = &Rational::one() + &t2;
            let c = &(&Rational::one() - &t2) / &d;
            if &c >= lo && &c < hi {
                let s = &(&t * &Rational::from_int(2)) / &d;
                return Some((c, s));
            }
        }
    }
    None
}

/// Exact points of `M_ε ∖ M_ε'` on the ray through a rational unit vector,
/// at radii `10⁰ … 10⁻⁶`.
pub fn lorentz_demo(eps: &Rational, eps_prime: &Rational) -> LorentzReport {
    let vbar = vec![Rational::one(), Rational::zero()];
    let lo = &Rational::one() - eps;
    let hi = &Rational::one() - eps_prime;
    let dir = if eps_prime < eps { pythagorean_direction(&lo, &hi) } else { None };
    let mut witnesses = Vec::new();
    if let Some((c, s)) = dir {
        let mut r = Rational::one();
        for _ in 0..=6 {
            let x = vec![&r * &c, &r * &s];
            witnesses.push(LorentzWitness {
                radius: r.clone(),
                in_m_eps: lorentz_member(&x, &vbar, eps),
                in_m_eps_prime: lorentz_member(&x, &vbar, eps_prime),
                cosine: c.clone(),
                subgradient: vec![c.clone(), s.clone()],
                x,
            });
            r = &r / &Rational::from_int(10);
        }
    }
    let stabilizes = witnesses.is_empty() || !witnesses.iter().all(|w| w.in_m_eps && !w.in_m_eps_prime);
    LorentzReport {
        eps: eps.clone(),
        eps_prime: eps_prime.clone(),
        vbar,
        witnesses,
        locally_minimal_identifiable_set: None,
        stabilizes,
    }
}

/// `|∇f|²` for `f(x, y) = √(x⁴ + y²)` away from the origin.
pub fn quartic_grad_sq(x: &Rational, y: &Rational) -> Rational {
    let x2 = x * x;
    let x4 = &x2 * &x2;
    let x6 = &x4 * &x2;
    let y2 = y * y;
    &(&(&x6 * &Rational::from_int(4)) + &y2) / &(&x4 + &y2)
}

#[derive(Debug, Clone, Serialize)]
pub struct QuarticCurve {
    pub n: u32,
    /// `n²/(n⁴+1)`.
    pub formula: f64,
    /// `|∇f|` at `(x, x²/n)` for `x = 10⁻³ … 10⁻⁸`.
    pub samples: Vec<(f64, f64)>,
    /// `|∇f|` at the smallest sampled `x`.
    pub observed_limit: f64,
    /// `|∇f|²` at the smallest sampled `x`, exact.
    pub observed_limit_sq: Rational,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagonalPoint {
    pub n: u32,
    pub x: Rational,
    pub y: Rational,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuarticReport {
    pub curves: Vec<QuarticCurve>,
    /// Points `(xₙ, xₙ²/n)` tending to the origin with gradients tending to 0.
    pub diagonal: Vec<DiagonalPoint>,
    pub locally_minimal_identifiable_set: Option<String>,
}

pub fn quartic_demo(max_n: u32) -> QuarticReport {
    let mut curves = Vec::new();
    for n in 1..=max_n {
        let nn = Rational::from_int(n as i64);
        let mut samples = Vec::new();
        let mut last = Rational::zero();
        let mut x = Rational::new(1, 1000);
        for _ in 3..=8 {
            let y = &(&x * &x) / &nn;
            let g = quartic_grad_sq(&x, &y);
            samples.push((x.to_f64(), g.to_f64().sqrt()));
            last = g;
            x = &x / &Rational::from_int(10);
        }
        let nf = n as f64;
        curves.push(QuarticCurve {
            n,
            formula: nf * nf / (nf.powi(4) + 1.0),
            observed_limit: last.to_f64().sqrt(),
            observed_limit_sq: last,
            samples,
        });
    }
    let mut diagonal = Vec::new();
    let mut x = Rational::new(1, 1000);
    for k in 0..6u32 {
        let n = 10u32.pow(k);
        let y = &(&x * &x) / &Rational::from_int(n as i64);
        diagonal.push(DiagonalPoint { n, grad_norm: quartic_grad_sq(&x, &y).to_f64().sqrt(), x: x.clone(), y });
        x = &x / &Rational::from_int(10);
    }
    QuarticReport { curves, diagonal, locally_minimal_identifiable_set: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::q;

    #[test]
    fn lorentz_witnesses() {
        let r = lorentz_demo(&q(1, 2), &q(1, 4));
        assert_eq!(r.witnesses.len(), 7);
        assert!(!r.stabilizes);
        assert!(r.locally_minimal_identifiable_set.is_none());
        for w in &r.witnesses {
            assert_eq!(w.cosine, q(3, 5));
            assert!(w.in_m_eps && !w.in_m_eps_prime);
            assert_eq!(norm_sq(&w.x), &w.radius * &w.radius);
        }
        assert_eq!(r.witnesses[6].radius, q(1, 1_000_000));
    }

    #[test]
    fn lorentz_membership() {
        let v = vec![q(1, 1), q(0, 1)];
        assert!(lorentz_member(&[q(1, 1), q(0, 1)], &v, &q(1, 4)));
        assert!(!lorentz_member(&[q(0, 1), q(1, 1)], &v, &q(1, 4)));
        assert!(lorentz_member(&[q(0, 1), q(0, 1)], &v, &q(1, 4)));
        assert!(!lorentz_member(&[q(-1, 1), q(0, 1)], &v, &q(1, 2)));
    }

    #[test]
    fn quartic_gradient_against_finite_differences() {
        for (x, y) in [(0.3f64, 0.1f64), (-0.2, 0.05), (0.01, -0.002)] {
            let f = |a: f64, b: f64| (a.powi(4) + b * b).sqrt();
            let h = 1e-7;
            let gx = (f(x + h, y) - f(x - h, y)) / (2.0 * h);
            let gy = (f(x, y + h) - f(x, y - h)) / (2.0 * h);
            let exact = quartic_grad_sq(&Rational::from_f64(x).unwrap(), &Rational::from_f64(y).unwrap()).to_f64();
            assert!((gx * gx + gy * gy - exact).abs() < 1e-6);
        }
    }

    #[test]
    fn quartic_limits_follow_the_curve_algebra() {
        // on y = x²/n, |∇f|² = (4x²n² + 1)/(n² + 1)
        let r = quartic_demo(10);
        for c in &r.curves {
            let n = c.n as f64;
            assert!((c.observed_limit - (1.0 / (n * n + 1.0)).sqrt()).abs() < 1e-12);
        }
        assert!((r.curves[0].formula - 0.5).abs() < 1e-15);
        let g: Vec<f64> = r.diagonal.iter().map(|d| d.grad_norm).collect();
        assert!(g.windows(2).all(|w| w[1] < w[0]) && *g.last().unwrap() < 1e-4);
    }
}
