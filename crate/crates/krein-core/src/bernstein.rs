//! Levy triples, complete Bernstein functions, and the forward Krein
//! correspondence `m -> psi_m`.
//!
//! `psi_m(lambda) = m(0+) lambda + int (1 - e^{-lambda r}) dnu_m(r)` is
//! computed along independent routes: the scalar Sturm-Liouville problem
//! of the string (exact for atomic strings, closed form for power laws)
//! and quadrature/closed evaluation over the Levy triple. Route
//! agreement is the correctness argument, so neither side may borrow
//! from the other.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::quad;
use crate::spectral;
use crate::string::KreinString;

/// Levy measure descriptor on `(0, oo)`.
#[derive(Debug, Clone, PartialEq)]
pub enum LevyMeasure {
    /// `h(t) = sum c_k e^{-gamma_k t}`; empty means the zero measure.
    ExpMixture(Vec<(f64, f64)>),
    /// `h(t) = coeff * t^{-1-sigma}` with `sigma` in `(0, 1)`.
    PowerDensity { coeff: f64, sigma: f64 },
}

impl LevyMeasure {
    /// Density `h(t)` at `t > 0`.
    pub fn density(&self, t: f64) -> f64 {
        match self {
            LevyMeasure::ExpMixture(terms) => {
                terms.iter().map(|&(g, c)| c * math::exp(-g * t)).sum()
            }
            LevyMeasure::PowerDensity { coeff, sigma } => {
                coeff * math::powf(t, -1.0 - sigma)
            }
        }
    }

    /// Tail mass `nu((t, oo))`.
    pub fn tail(&self, t: f64) -> f64 {
        match self {
            LevyMeasure::ExpMixture(terms) => {
                terms.iter().map(|&(g, c)| c / g * math::exp(-g * t)).sum()
            }
            LevyMeasure::PowerDensity { coeff, sigma } => {
                coeff / sigma * math::powf(t, -sigma)
            }
        }
    }

    /// Numerical check of `int (r /\ 1) dnu(r) < oo`.
    pub fn integrability_integral(&self, tol: f64) -> Result<f64> {
        let near = match self {
            LevyMeasure::PowerDensity { coeff, sigma } => {
                let co = *coeff;
                tamed_unit_integral(move |t| t * co, *sigma, tol)?
            }
            _ => {
                quad::integrate(
                    |r| if r > 0.0 { r * self.density(r) } else { 0.0 },
                    0.0,
                    1.0,
                    tol,
                )?
                .value
            }
        };
        let far = quad::integrate_to_inf(|r| self.density(r), 1.0, tol)?;
        Ok(near + far.value)
    }
}

/// `int_0^1 f(t) t^{-1-sigma} dt` for `f(t) = O(t)` at zero, tamed by
/// the substitution `t = v^k` with `k = 4/(1-sigma)` so the transformed
/// integrand vanishes cubically at the origin.
fn tamed_unit_integral<F: Fn(f64) -> f64>(f: F, sigma: f64, tol: f64) -> Result<f64> {
    let k = 4.0 / (1.0 - sigma);
    let q = quad::integrate(
        move |v| {
            // the transformed integrand is O(v^3); below this cutoff it
            // is zero to double precision and the power factors would
            // overflow pairwise
            if v <= 1e-30 {
                return 0.0;
            }
            let t = math::powf(v, k);
            f(t) * math::powf(t, -1.0 - sigma) * k * math::powf(v, k - 1.0)
        },
        0.0,
        1.0,
        tol,
    )?;
    Ok(q.value)
}

/// Levy triple `(a, b, nu)` of a Bernstein function.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyTriple {
    pub a: f64,
    pub b: f64,
    pub nu: LevyMeasure,
}

impl LevyTriple {
    pub fn new(a: f64, b: f64, nu: LevyMeasure) -> Result<Self> {
        if !(a >= 0.0) || !(b >= 0.0) {
            return Err(Error::Domain("killing and drift must be non-negative"));
        }
        match &nu {
            LevyMeasure::ExpMixture(terms) => {
                if terms.iter().any(|&(g, c)| !(g > 0.0) || !(c > 0.0)) {
                    return Err(Error::Domain(
                        "exponential mixture needs positive rates and coefficients",
                    ));
                }
            }
            LevyMeasure::PowerDensity { coeff, sigma } => {
                if !(*coeff > 0.0) || !(*sigma > 0.0 && *sigma < 1.0) {
                    return Err(Error::Domain(
                        "power density needs coeff > 0 and sigma in (0, 1), else (r /\\ 1) is not integrable",
                    ));
                }
            }
        }
        Ok(LevyTriple { a, b, nu })
    }
}

/// A complete Bernstein function by evaluation source.
#[derive(Debug, Clone, PartialEq)]
pub enum BernsteinFunction {
    /// `coeff * lambda^sigma`.
    PowerForm { coeff: f64, sigma: f64 },
    /// Evaluate the triple representation by exact mixture identity or
    /// quadrature.
    FromTriple(LevyTriple),
    /// Solve the string's Sturm-Liouville problem.
    FromString(KreinString),
}

/// `c_sigma = sigma^{sigma-1} (1-sigma)^sigma Gamma(1-sigma) /
/// (2 Gamma(sigma))`, the coefficient with
/// `psi_{fractional(sigma)}(lambda) = c_sigma lambda^sigma`;
/// `2 c_sigma -> 1` as `sigma -> 1-`.
pub fn fractional_coefficient(sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::Domain("sigma must lie in (0, 1)"));
    }
    Ok(math::powf(sigma, sigma - 1.0) * math::powf(1.0 - sigma, sigma) * math::gamma(1.0 - sigma)
        / (2.0 * math::gamma(sigma)))
}

/// Power-law Bernstein coefficient: `psi(lambda) = C lambda^sigma` for
/// the string `m(z) = c z^p`, `sigma = 1/(p+1)`.
pub fn power_law_coefficient(c: f64, p: f64) -> f64 {
    let sigma = 1.0 / (p + 1.0);
    math::powf(2.0 * c * sigma * (1.0 - sigma), sigma) * math::gamma(1.0 - sigma)
        / (2.0 * sigma * math::gamma(sigma))
}

/// Evaluate a Bernstein function at `lambda >= 0` to tolerance `tol`
/// (only the quadrature route consumes the tolerance).
pub fn eval_bernstein(psi: &BernsteinFunction, lambda: f64, tol: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::Domain("Bernstein functions live on lambda >= 0"));
    }
    match psi {
        BernsteinFunction::PowerForm { coeff, sigma } => {
            Ok(coeff * math::powf(lambda, *sigma))
        }
        BernsteinFunction::FromTriple(triple) => eval_triple(triple, lambda, tol),
        BernsteinFunction::FromString(m) => krein_psi(m, lambda),
    }
}

fn eval_triple(triple: &LevyTriple, lambda: f64, tol: f64) -> Result<f64> {
    if lambda == 0.0 {
        return Ok(triple.a);
    }
    let base = triple.a + triple.b * lambda;
    match &triple.nu {
        LevyMeasure::ExpMixture(terms) => {
            // int (1 - e^{-lambda r}) c e^{-gamma r} dr = c lambda / (gamma (gamma + lambda))
            let s: f64 = terms
                .iter()
                .map(|&(g, c)| c * lambda / (g * (g + lambda)))
                .sum();
            Ok(base + s)
        }
        LevyMeasure::PowerDensity { coeff, sigma } => {
            let s = *sigma;
            let co = *coeff;
            // Split (0, 1] at the exponential transition t* = 1/lambda:
            // below it the integrand is a pure power tamed by t = t* v^k,
            // above it plain adaptive quadrature resolves the remaining
            // smooth power decay.
            let tstar = (1.0 / lambda).min(1.0);
            let k = 3.0 / (1.0 - s);
            let head = quad::integrate(
                move |v| {
                    if v <= 1e-30 {
                        return 0.0;
                    }
                    let t = tstar * math::powf(v, k);
                    math::one_minus_exp_neg(lambda * t)
                        * co
                        * math::powf(tstar, -s)
                        * k
                        * math::powf(v, -k * s - 1.0)
                },
                0.0,
                1.0,
                tol,
            )?;
            let mid = if tstar < 1.0 {
                quad::integrate(
                    move |t| math::one_minus_exp_neg(lambda * t) * co * math::powf(t, -1.0 - s),
                    tstar,
                    1.0,
                    tol,
                )?
                .value
            } else {
                0.0
            };
            // tail on [1, oo): t = e^u
            let far = quad::integrate_to_inf(
                move |u| {
                    let t = math::exp(u);
                    math::one_minus_exp_neg(lambda * t) * co * math::powf(t, -s)
                },
                0.0,
                tol,
            )?;
            Ok(base + head.value + mid + far.value)
        }
    }
}

/// Bounded solution `phi` of the string's Sturm-Liouville problem
/// `-phi''/2 + lambda phi mu_m = 0`, `phi(0) = 1`, for an atomic string:
/// piecewise linear with slope jump `2 lambda w_i phi(x_i)` at each atom
/// and zero slope after the last one.
///
/// Built by a backward slope-to-value ratio recursion (all quantities
/// signed away from cancellation) followed by a forward value sweep.
#[derive(Debug, Clone)]
pub struct BoundedSlSolution {
    nodes: Vec<f64>,
    values: Vec<f64>,
    seg_slopes: Vec<f64>,
    /// `psi_m(lambda) = m(0+) lambda - phi'_+(0) / 2`.
    pub psi: f64,
    pub slope_at_zero: f64,
}

impl BoundedSlSolution {
    /// `phi(z)`; 1 for `z <= 0`, constant after the last atom.
    pub fn eval(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 1.0;
        }
        let n = self.nodes.len();
        let mut i = 1;
        while i < n && self.nodes[i] < z {
            i += 1;
        }
        if i == n {
            return self.values[n - 1];
        }
        self.values[i - 1] + self.seg_slopes[i - 1] * (z - self.nodes[i - 1])
    }
}

/// Solve the bounded Sturm-Liouville problem of an atomic string.
pub fn bounded_sl_solution(m: &KreinString, lambda: f64) -> Result<BoundedSlSolution> {
    if !(lambda > 0.0) {
        return Err(Error::Domain("the Sturm-Liouville solve needs lambda > 0"));
    }
    let atoms = m.atoms().ok_or(Error::UnsupportedVariant(
        "the piecewise-linear solve needs an atomic string",
    ))?;
    let m0 = m.mass_at_origin();
    let n = atoms.len();
    if n == 0 {
        return Ok(BoundedSlSolution {
            nodes: alloc::vec![0.0],
            values: alloc::vec![1.0],
            seg_slopes: Vec::new(),
            psi: m0 * lambda,
            slope_at_zero: 0.0,
        });
    }
    // backward ratios s_i = (slope on segment i) / phi(x_i), s <= 0
    let mut ratios = alloc::vec![0.0f64; n];
    let mut carry = 0.0f64; // s_{i+1}
    for i in (0..n).rev() {
        let s = if i + 1 < n {
            let gap = atoms[i + 1].0 - atoms[i].0;
            carry / (1.0 - carry * gap) - 2.0 * lambda * atoms[i].1
        } else {
            -2.0 * lambda * atoms[i].1
        };
        ratios[i] = s;
        carry = s;
    }
    // forward values, phi(0) = 1
    let mut nodes = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    let mut seg_slopes = Vec::with_capacity(n);
    nodes.push(0.0);
    values.push(1.0);
    let mut prev_pos = 0.0;
    let mut prev_val = 1.0;
    for i in 0..n {
        let gap = atoms[i].0 - prev_pos;
        let val = prev_val / (1.0 - ratios[i] * gap);
        nodes.push(atoms[i].0);
        values.push(val);
        seg_slopes.push(ratios[i] * val);
        prev_pos = atoms[i].0;
        prev_val = val;
    }
    let slope_at_zero = seg_slopes[0];
    Ok(BoundedSlSolution {
        nodes,
        values,
        seg_slopes,
        psi: m0 * lambda - 0.5 * slope_at_zero,
        slope_at_zero,
    })
}

/// The Krein forward map: `psi_m(lambda)` via the string's
/// Sturm-Liouville problem (atomic) or its closed power-law form.
pub fn krein_psi(m: &KreinString, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain("krein_psi needs lambda > 0"));
    }
    match m {
        KreinString::Heaviside { h } => Ok(h * lambda),
        KreinString::Atomic { .. } => Ok(bounded_sl_solution(m, lambda)?.psi),
        _ => {
            let (c, p) = m.power_params().expect("continuous variant");
            let sigma = 1.0 / (p + 1.0);
            Ok(power_law_coefficient(c, p) * math::powf(lambda, sigma))
        }
    }
}

/// Levy triple `(0, m(0+), nu_m)` associated with the string.
pub fn levy_triple_of(m: &KreinString) -> Result<LevyTriple> {
    match m {
        KreinString::Atomic { .. } => {
            let pm = spectral::principal_measure(m)?;
            match pm {
                spectral::PrincipalMeasure::Atoms(atoms) => LevyTriple::new(
                    0.0,
                    m.mass_at_origin(),
                    LevyMeasure::ExpMixture(atoms),
                ),
                _ => unreachable!("atomic strings yield atomic principal measures"),
            }
        }
        KreinString::Heaviside { h } => {
            LevyTriple::new(0.0, *h, LevyMeasure::ExpMixture(Vec::new()))
        }
        _ => {
            let (c, p) = m.power_params().expect("continuous variant");
            let sigma = 1.0 / (p + 1.0);
            let coeff = math::powf(2.0 * c * sigma * (1.0 - sigma), sigma)
                / (2.0 * math::gamma(sigma));
            LevyTriple::new(0.0, 0.0, LevyMeasure::PowerDensity { coeff, sigma })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn single_atom() -> KreinString {
        KreinString::atomic(0.0, vec![(1.0, 1.0)]).unwrap()
    }

    #[test]
    fn fractional_anchor_sigma_half() {
        // psi_{fractional(1/2)}(lambda) = sqrt(lambda)/2
        let c = fractional_coefficient(0.5).unwrap();
        assert!((c - 0.5).abs() < 1e-14);
        let m = KreinString::fractional(0.5).unwrap();
        assert!((krein_psi(&m, 4.0).unwrap() - 1.0).abs() < 1e-14);
        // and matches the generic power coefficient
        for &sigma in &[0.25, 0.5, 0.75] {
            let p = (1.0 - sigma) / sigma;
            let a = fractional_coefficient(sigma).unwrap();
            let b = power_law_coefficient(0.5, p);
            assert!((a - b).abs() < 1e-13 * (1.0 + a));
        }
    }

    #[test]
    fn linear_closed_form() {
        // psi(lambda) = sqrt(alpha lambda / 2)
        let m = KreinString::linear(0.5).unwrap();
        assert!((krein_psi(&m, 4.0).unwrap() - 1.0).abs() < 1e-14);
        let m = KreinString::linear(2.0).unwrap();
        assert!((krein_psi(&m, 9.0).unwrap() - 3.0).abs() < 1e-13);
    }

    #[test]
    fn atomic_kink_solution() {
        // single atom: psi(lambda) = lambda/(1 + 2 lambda)
        let m = single_atom();
        assert!((krein_psi(&m, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let phi = bounded_sl_solution(&m, 1.0).unwrap();
        assert!((phi.eval(1.0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((phi.eval(0.5) - 2.0 / 3.0).abs() < 1e-15);
        assert!((phi.eval(5.0) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(phi.eval(0.0), 1.0);
        assert!((phi.slope_at_zero + 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn heaviside_is_pure_drift() {
        let m = KreinString::heaviside(1.0).unwrap();
        assert!((krein_psi(&m, 7.0).unwrap() - 7.0).abs() < 1e-15);
        let triple = levy_triple_of(&m).unwrap();
        assert_eq!(triple.b, 1.0);
        assert_eq!(triple.nu, LevyMeasure::ExpMixture(vec![]));
    }

    #[test]
    fn mixture_triple_of_single_atom() {
        let triple = levy_triple_of(&single_atom()).unwrap();
        match &triple.nu {
            LevyMeasure::ExpMixture(terms) => {
                assert_eq!(terms.len(), 1);
                assert!((terms[0].0 - 0.5).abs() < 1e-14);
                assert!((terms[0].1 - 0.25).abs() < 1e-14);
            }
            _ => panic!("expected mixture"),
        }
        // exact rational identity
        let psi = BernsteinFunction::FromTriple(triple);
        let v = eval_bernstein(&psi, 1.0, 1e-12).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn zero_lambda_and_domain_errors() {
        let triple = levy_triple_of(&single_atom()).unwrap();
        let psi = BernsteinFunction::FromTriple(triple);
        assert_eq!(eval_bernstein(&psi, 0.0, 1e-10).unwrap(), 0.0);
        assert!(eval_bernstein(&psi, -1.0, 1e-10).is_err());
        assert!(krein_psi(&single_atom(), 0.0).is_err());
    }

    #[test]
    fn density_quadrature_matches_closed_form() {
        for &sigma in &[0.25, 0.5, 0.75] {
            let p = (1.0 - sigma) / sigma;
            let m = KreinString::fractional(sigma).unwrap();
            let triple = levy_triple_of(&m).unwrap();
            let psi = BernsteinFunction::FromTriple(triple);
            let coeff = power_law_coefficient(0.5, p);
            for &lambda in &[0.1, 1.0, 10.0, 100.0] {
                let quadrature = eval_bernstein(&psi, lambda, 1e-10).unwrap();
                let closed = coeff * math::powf(lambda, sigma);
                assert!(
                    (quadrature - closed).abs() <= 1e-8 * (1.0 + closed),
                    "sigma={sigma} lambda={lambda}: {quadrature} vs {closed}"
                );
            }
        }
    }

    #[test]
    fn compound_poisson_laplace_identity() {
        // zero-drift atomic strings: psi(lambda) = (1 - phi(x1)) / (2 x1),
        // so e^{-t psi} is exactly the compound-Poisson transform.
        let strings = [
            single_atom(),
            KreinString::atomic(0.0, vec![(0.5, 2.0), (1.25, 0.5), (3.0, 1.0)]).unwrap(),
        ];
        for m in &strings {
            let x1 = m.atoms().unwrap()[0].0;
            for i in 0..4 {
                for j in 0..5 {
                    let t = 0.3 + i as f64;
                    let lambda = 0.2 + j as f64 * 0.9;
                    let psi = krein_psi(m, lambda).unwrap();
                    let phi = bounded_sl_solution(m, lambda).unwrap().eval(x1);
                    let lhs = math::exp(-t * psi);
                    let rhs = math::exp(-t * (1.0 - phi) / (2.0 * x1));
                    assert!((lhs - rhs).abs() < 1e-12, "t={t} lambda={lambda}");
                }
            }
        }
    }

    #[test]
    fn triple_validation() {
        assert!(LevyTriple::new(-1.0, 0.0, LevyMeasure::ExpMixture(vec![])).is_err());
        assert!(LevyTriple::new(0.0, 0.0, LevyMeasure::ExpMixture(vec![(0.0, 1.0)])).is_err());
        assert!(
            LevyTriple::new(0.0, 0.0, LevyMeasure::PowerDensity { coeff: 1.0, sigma: 1.5 })
                .is_err()
        );
        let t = LevyTriple::new(
            0.0,
            0.0,
            LevyMeasure::PowerDensity { coeff: 1.0, sigma: 0.5 },
        )
        .unwrap();
        let v = t.nu.integrability_integral(1e-9).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn route_agreement_spot() {
        // ODE route vs triple route on atomic, linear, and power strings
        let strings = [
            single_atom(),
            KreinString::atomic(0.25, vec![(0.5, 2.0), (2.0, 1.5)]).unwrap(),
            KreinString::linear(0.5).unwrap(),
            KreinString::fractional(0.25).unwrap(),
            KreinString::fractional(0.75).unwrap(),
        ];
        for m in &strings {
            let triple = levy_triple_of(m).unwrap();
            let from_triple = BernsteinFunction::FromTriple(triple);
            for &lambda in &[0.1, 1.0, 10.0, 100.0] {
                let ode = krein_psi(m, lambda).unwrap();
                let idx = eval_bernstein(&from_triple, lambda, 1e-10).unwrap();
                assert!(
                    (ode - idx).abs() <= 1e-8 * (1.0 + ode),
                    "{m:?} lambda={lambda}: {ode} vs {idx}"
                );
            }
        }
    }
}
