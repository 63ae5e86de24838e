//! Convergence of strings and of the operators they induce: vague
//! convergence of the measures, strong resolvent convergence of
//! `psi_{m_n}(A)`, and the fractional-power limit experiment
//! `sigma -> 1-`.
//!
//! Pointwise convergence of strings at continuity points is equivalent
//! to vague convergence of the measures, which transfers to resolvent
//! (equivalently graph, equivalently locally-uniform semigroup)
//! convergence of the induced operators; the experiments below observe
//! all three gaps shrink together on the built-in family.

use alloc::vec::Vec;

use crate::bernstein;
use crate::calculus::{resolvent_apply, subordinate_apply, OperatorHandle, SubordinationMode};
use crate::error::{Error, Result};
use crate::linalg;
use crate::math;
use crate::string::KreinString;

/// Piecewise-linear hat test function supported on `(left, right)`,
/// peaking at 1 in `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HatFunction {
    pub left: f64,
    pub center: f64,
    pub right: f64,
}

impl HatFunction {
    pub fn new(left: f64, center: f64, right: f64) -> Result<Self> {
        if !(0.0 <= left && left < center && center < right) {
            return Err(Error::Precondition(
                "hat needs 0 <= left < center < right",
            ));
        }
        Ok(HatFunction {
            left,
            center,
            right,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.left || x >= self.right {
            0.0
        } else if x <= self.center {
            (x - self.left) / (self.center - self.left)
        } else {
            (self.right - x) / (self.right - self.center)
        }
    }

    /// `int hat dmu_m`, exact for every supported family: atom sums for
    /// atomic strings, piecewise closed-form moments for power laws.
    pub fn integrate_against(&self, m: &KreinString) -> f64 {
        match m {
            KreinString::Atomic { atoms, .. } => atoms
                .iter()
                .map(|&(x, w)| w * self.eval(x))
                .sum(),
            KreinString::Heaviside { .. } => 0.0, // mass sits at 0, outside the support
            _ => {
                let (c, p) = m.power_params().expect("continuous variant");
                // int (a x + b) c p x^{p-1} dx
                //   = c a p (x2^{p+1} - x1^{p+1})/(p+1) + c b (x2^p - x1^p)
                let seg = |a: f64, b: f64, x1: f64, x2: f64| -> f64 {
                    c * a * p * (math::powf(x2, p + 1.0) - math::powf(x1, p + 1.0)) / (p + 1.0)
                        + c * b * (math::powf(x2, p) - math::powf(x1, p))
                };
                let up = 1.0 / (self.center - self.left);
                let down = 1.0 / (self.right - self.center);
                seg(up, -self.left * up, self.left, self.center)
                    + seg(-down, self.right * down, self.center, self.right)
            }
        }
    }
}

/// Dyadic hat family: centers `2^j` for `j` in `lo..=hi`, each supported
/// on `(2^{j-1}, 2^{j+1})`.
pub fn dyadic_hats(lo: i32, hi: i32) -> Vec<HatFunction> {
    (lo..=hi)
        .map(|j| {
            let c = math::powf(2.0, j as f64);
            HatFunction::new(c / 2.0, c, 2.0 * c).expect("dyadic hats are well-formed")
        })
        .collect()
}

/// Vague-convergence gap: `max_phi |int phi dmu_{m_n} - int phi dmu_m|`
/// over the supplied compactly supported test functions.
pub fn vague_gap(m_n: &KreinString, m: &KreinString, hats: &[HatFunction]) -> f64 {
    hats.iter().fold(0.0f64, |acc, hat| {
        acc.max(math::abs(
            hat.integrate_against(m_n) - hat.integrate_against(m),
        ))
    })
}

/// Strong-resolvent gap
/// `||(lambda + psi_{m_n}(A))^{-1} f - (lambda + psi_m(A))^{-1} f||`.
pub fn resolvent_gap(
    a: &OperatorHandle,
    m_n: &KreinString,
    m: &KreinString,
    lambda: f64,
    f: &[f64],
) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain("resolvent parameter must be positive"));
    }
    let rn = resolvent_apply(a, m_n, lambda, f)?;
    let r = resolvent_apply(a, m, lambda, f)?;
    let diff: Vec<f64> = rn.iter().zip(&r).map(|(x, y)| x - y).collect();
    Ok(linalg::norm2(&diff))
}

/// Semigroup gap `sup_{t in [0, 1]} ||e^{-t psi_{m_n}(A)} f - e^{-t psi_m(A)} f||`
/// sampled on an equispaced grid of `steps + 1` times.
pub fn semigroup_gap(
    a: &OperatorHandle,
    m_n: &KreinString,
    m: &KreinString,
    f: &[f64],
    steps: usize,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for j in 0..=steps {
        let t = j as f64 / steps.max(1) as f64;
        let un = subordinate_apply(a, m_n, t, f, &SubordinationMode::Spectral)?.value;
        let u = subordinate_apply(a, m, t, f, &SubordinationMode::Spectral)?.value;
        let diff: Vec<f64> = un.iter().zip(&u).map(|(x, y)| x - y).collect();
        worst = worst.max(linalg::norm2(&diff));
    }
    Ok(worst)
}

/// One row of the fractional-limit experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalLimitRow {
    pub sigma: f64,
    /// `c_sigma`, the coefficient with `psi = c_sigma lambda^sigma`.
    pub coefficient: f64,
    /// `2 c_sigma`, which increases to 1 as `sigma -> 1-`.
    pub doubled_coefficient: f64,
    /// `max_k |2 c_sigma lambda_k^sigma - lambda_k|` over the spectrum.
    pub max_eigen_gap: f64,
    /// Resolvent gap against the height-1/2 Heaviside limit at
    /// `lambda = 1`, `f = (1, ..., 1)`.
    pub resolvent_gap: f64,
}

/// The `sigma -> 1-` experiment: for each `sigma`, the fractional string
/// is compared against its Heaviside limit `m = H/2` through the
/// normalisation constant and the resolvent gap.
pub fn fractional_limit_experiment(
    a: &OperatorHandle,
    sigmas: &[f64],
) -> Result<Vec<FractionalLimitRow>> {
    if sigmas.iter().any(|&s| !(s > 0.0 && s < 1.0)) {
        return Err(Error::Domain("every sigma must lie in (0, 1)"));
    }
    let limit = KreinString::heaviside(0.5)?;
    let ones = alloc::vec![1.0; a.dim()];
    let mut rows = Vec::with_capacity(sigmas.len());
    for &sigma in sigmas {
        let coefficient = bernstein::fractional_coefficient(sigma)?;
        let m_sigma = KreinString::fractional(sigma)?;
        let mut max_eigen_gap = 0.0f64;
        for &lam in a.eigenvalues() {
            let lam = lam.max(0.0);
            let approx = 2.0 * coefficient * math::powf(lam, sigma);
            max_eigen_gap = max_eigen_gap.max(math::abs(approx - lam));
        }
        let resolvent_gap = resolvent_gap(a, &m_sigma, &limit, 1.0, &ones)?;
        rows.push(FractionalLimitRow {
            sigma,
            coefficient,
            doubled_coefficient: 2.0 * coefficient,
            max_eigen_gap,
            resolvent_gap,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn hats_and_exact_integrals() {
        let hat = HatFunction::new(0.5, 1.0, 2.0).unwrap();
        assert_eq!(hat.eval(0.5), 0.0);
        assert_eq!(hat.eval(1.0), 1.0);
        assert!((hat.eval(0.75) - 0.5).abs() < 1e-15);
        // atomic: sum of weighted hat values
        let m = KreinString::atomic(0.0, vec![(1.0, 2.0), (1.5, 1.0)]).unwrap();
        assert!((hat.integrate_against(&m) - (2.0 + 0.5)).abs() < 1e-15);
        // linear: int hat dx * alpha; the hat has area (right-left)/2
        let m = KreinString::linear(2.0).unwrap();
        assert!((hat.integrate_against(&m) - 2.0 * 0.75).abs() < 1e-12);
        // Heaviside carries no mass on the support
        assert_eq!(
            hat.integrate_against(&KreinString::heaviside(1.0).unwrap()),
            0.0
        );
    }

    #[test]
    fn vague_gap_examples() {
        let hats = dyadic_hats(-3, 3);
        let m = KreinString::atomic(0.0, vec![(1.0, 1.0)]).unwrap();
        assert_eq!(vague_gap(&m, &m, &hats), 0.0);
        // moving atom converges to the fixed one
        let mut prev = f64::INFINITY;
        for n in [2.0, 4.0, 8.0, 16.0] {
            let shifted = KreinString::atomic(0.0, vec![(1.0 + 1.0 / n, 1.0)]).unwrap();
            let gap = vague_gap(&shifted, &m, &hats);
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 0.2);
        // fractional family concentrates its mass at 0 as sigma -> 1-
        let limit = KreinString::heaviside(0.5).unwrap();
        let mut prev = f64::INFINITY;
        for n in [2.0, 4.0, 8.0, 16.0] {
            let sigma = 1.0 - 1.0 / n;
            let gap = vague_gap(&KreinString::fractional(sigma).unwrap(), &limit, &hats);
            assert!(gap < prev, "sigma={sigma}: {gap} !< {prev}");
            prev = gap;
        }
    }

    #[test]
    fn resolvent_and_semigroup_gaps_shrink() {
        let a = OperatorHandle::from_diagonal(&[1.0, 4.0]).unwrap();
        let f = vec![1.0, 1.0];
        let limit = KreinString::heaviside(0.5).unwrap();
        assert_eq!(resolvent_gap(&a, &limit, &limit, 1.0, &f).unwrap(), 0.0);
        let mut prev_res = f64::INFINITY;
        let mut prev_semi = f64::INFINITY;
        for n in [2.0, 4.0, 8.0, 16.0, 32.0] {
            let sigma = 1.0 - 1.0 / n;
            let m = KreinString::fractional(sigma).unwrap();
            let res = resolvent_gap(&a, &m, &limit, 1.0, &f).unwrap();
            let semi = semigroup_gap(&a, &m, &limit, &f, 16).unwrap();
            assert!(res < prev_res, "resolvent gap not decreasing at {sigma}");
            assert!(semi < prev_semi, "semigroup gap not decreasing at {sigma}");
            prev_res = res;
            prev_semi = semi;
        }
        assert!(resolvent_gap(&a, &limit, &limit, 0.0, &f).is_err());
    }

    #[test]
    fn fractional_limit_rows() {
        let a = OperatorHandle::from_diagonal(&[1.0, 4.0]).unwrap();
        let rows = fractional_limit_experiment(&a, &[0.5, 0.9, 0.99, 0.999]).unwrap();
        assert!((rows[0].coefficient - 0.5).abs() < 1e-14);
        // 2 c_sigma increases strictly toward 1
        for w in rows.windows(2) {
            assert!(w[0].doubled_coefficient < w[1].doubled_coefficient);
        }
        assert!(rows.last().unwrap().doubled_coefficient < 1.0);
        assert!(1.0 - rows.last().unwrap().doubled_coefficient < 2e-3);
        // the lambda = 1 eigen gap is |2 c_sigma - 1|
        let gap0 = (2.0 * rows[0].coefficient - 1.0).abs();
        assert!(rows[0].max_eigen_gap >= gap0 - 1e-15);
        // resolvent gaps decrease below 1e-3 by sigma = 0.999
        for w in rows.windows(2) {
            assert!(w[1].resolvent_gap < w[0].resolvent_gap);
        }
        assert!(rows.last().unwrap().resolvent_gap < 1e-3);
        assert!(fractional_limit_experiment(&a, &[1.2]).is_err());
    }
}
