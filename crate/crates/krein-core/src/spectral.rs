//! Spectral data of the generalized diffusion killed at the origin:
//! eigenfunctions `C(z, gamma)`, the principal measure, and the hitting,
//! transition, and Levy densities it represents.
//!
//! For an atomic string the killed process is a finite-state chain whose
//! symmetrised tridiagonal generator is diagonalised exactly; every
//! density is then a finite exponential sum. For power-law strings the
//! principal measure has the closed density `rho(gamma) ~ gamma^sigma`
//! and all densities have closed forms.

use alloc::vec;
use alloc::vec::Vec;

use crate::bernstein;
use crate::error::{Error, Result};
use crate::linalg;
use crate::math;
use crate::quad;
use crate::string::KreinString;

/// Rate matrix of the generalized diffusion on the atoms of an atomic
/// string, killed at zero. Row `i` exits left at `1/(2 w_i (x_i - x_{i-1}))`
/// (with `x_0 = 0` absorbing) and right at `1/(2 w_i (x_{i+1} - x_i))`.
#[derive(Debug, Clone)]
pub struct KilledGenerator {
    pub positions: Vec<f64>,
    pub weights: Vec<f64>,
    pub left_rate: Vec<f64>,
    pub right_rate: Vec<f64>,
}

impl KilledGenerator {
    pub fn new(m: &KreinString) -> Result<Self> {
        let atoms = m
            .atoms()
            .ok_or(Error::UnsupportedVariant("killed generator needs atoms"))?;
        if atoms.is_empty() {
            return Err(Error::UnsupportedVariant(
                "killed generator needs at least one atom",
            ));
        }
        let n = atoms.len();
        let mut left = vec![0.0; n];
        let mut right = vec![0.0; n];
        for i in 0..n {
            let (x, w) = atoms[i];
            let gap_left = if i == 0 { x } else { x - atoms[i - 1].0 };
            left[i] = 1.0 / (2.0 * w * gap_left);
            if i + 1 < n {
                right[i] = 1.0 / (2.0 * w * (atoms[i + 1].0 - x));
            }
        }
        Ok(KilledGenerator {
            positions: atoms.iter().map(|a| a.0).collect(),
            weights: atoms.iter().map(|a| a.1).collect(),
            left_rate: left,
            right_rate: right,
        })
    }

    /// Symmetrised `-G` as a tridiagonal pair `(diag, off)`; similar to
    /// `-G` through `W^{1/2}`, so eigenvalues agree and eigenvectors map
    /// back through division by `sqrt(w_i)`.
    pub fn symmetrized(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.positions.len();
        let diag: Vec<f64> = (0..n)
            .map(|i| self.left_rate[i] + self.right_rate[i])
            .collect();
        let mut off = vec![0.0; n.saturating_sub(1)];
        for i in 0..n - 1 {
            off[i] = -math::sqrt(self.right_rate[i] * self.left_rate[i + 1]);
        }
        (diag, off)
    }

    /// Dense `-G` (convenient for oracle solves in tests).
    pub fn neg_generator_dense(&self) -> linalg::Matrix {
        let n = self.positions.len();
        let mut a = linalg::Matrix::zeros(n, n);
        for i in 0..n {
            a.set(i, i, self.left_rate[i] + self.right_rate[i]);
            if i + 1 < n {
                a.set(i, i + 1, -self.right_rate[i]);
                a.set(i + 1, i, -self.left_rate[i + 1]);
            }
        }
        a
    }
}

/// The principal measure of the killed process.
#[derive(Debug, Clone, PartialEq)]
pub enum PrincipalMeasure {
    /// Finitely many spectral atoms `(gamma_k, weight_k)`, ascending.
    Atoms(Vec<(f64, f64)>),
    /// Density `coeff * gamma^sigma` on `(0, oo)`.
    Density { coeff: f64, sigma: f64 },
}

impl PrincipalMeasure {
    /// `int 1/(gamma (gamma + 1)) d Delta`, finite for every measure the
    /// crate constructs.
    pub fn moment_integral(&self) -> f64 {
        match self {
            PrincipalMeasure::Atoms(atoms) => {
                atoms.iter().map(|&(g, w)| w / (g * (g + 1.0))).sum()
            }
            PrincipalMeasure::Density { coeff, sigma } => {
                // int_0^oo gamma^{sigma-1}/(1+gamma) dgamma = pi/sin(pi sigma)
                coeff * math::PI / math::sin(math::PI * sigma)
            }
        }
    }

    /// `int 1/gamma d Delta`. Infinite for the continuous families; a
    /// finite atomic spectrum necessarily keeps it finite, the finite-rank
    /// deviation from the infinite-string picture.
    pub fn inverse_gamma_mass(&self) -> f64 {
        match self {
            PrincipalMeasure::Atoms(atoms) => atoms.iter().map(|&(g, w)| w / g).sum(),
            PrincipalMeasure::Density { .. } => f64::INFINITY,
        }
    }
}

/// Power-law spectral constants: `sigma`, the hitting-time scale
/// `theta(z) = theta_coeff * z^{1/sigma}`, and the Levy-density
/// coefficient with `h(t) = levy_coeff * t^{-1-sigma}`.
pub(crate) struct PowerSpectral {
    pub sigma: f64,
    pub theta_coeff: f64,
    pub levy_coeff: f64,
}

pub(crate) fn power_spectral(c: f64, p: f64) -> PowerSpectral {
    let sigma = 1.0 / (p + 1.0);
    let theta_coeff = 2.0 * c * sigma * (1.0 - sigma);
    let levy_coeff = math::powf(theta_coeff, sigma) / (2.0 * math::gamma(sigma));
    PowerSpectral {
        sigma,
        theta_coeff,
        levy_coeff,
    }
}

/// Eigenfunction `C(z, gamma)` of the killed generator for an atomic
/// string, by the exact piecewise-linear recursion: `C(0) = 0`, initial
/// slope 2, slope jump `-2 gamma w_i C(x_i)` at each atom.
pub fn eigenfunction_c_exact(m: &KreinString, z: f64, gamma: f64) -> Result<f64> {
    let atoms = m.atoms().ok_or(Error::UnsupportedVariant(
        "exact eigenfunction recursion needs an atomic string",
    ))?;
    let mut value = 0.0;
    let mut slope = 2.0;
    let mut pos = 0.0;
    for &(x, w) in atoms {
        if x > z {
            break;
        }
        value += slope * (x - pos);
        slope -= 2.0 * gamma * w * value;
        pos = x;
    }
    Ok(value + slope * (z - pos))
}

/// Eigenfunction `C(z, gamma)` through the alternating series
/// `sum (-gamma)^n C_n(z)`.
///
/// Atomic strings evaluate the nested integrals exactly; the series
/// terminates after one term per atom below `z`. Power-law strings use
/// the closed coefficient recursion and stop once the Picard remainder
/// bound `2z (2 gamma I)^n / n! * e^{2 gamma I}` (with
/// `I = int_0^z M dx`) drops below `tol`.
pub fn eigenfunction_c(m: &KreinString, z: f64, gamma: f64, tol: f64) -> Result<f64> {
    if !(z >= 0.0) || !(gamma > 0.0) {
        return Err(Error::Domain("eigenfunction needs z >= 0 and gamma > 0"));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    match m {
        KreinString::Heaviside { .. } => Ok(2.0 * z),
        KreinString::Atomic { atoms, .. } => {
            let inside: Vec<(f64, f64)> =
                atoms.iter().copied().filter(|&(x, _)| x <= z).collect();
            if inside.is_empty() {
                return Ok(2.0 * z);
            }
            let mut cur: Vec<f64> = inside.iter().map(|&(x, _)| 2.0 * x).collect();
            let mut total = 2.0 * z;
            let mut sign = 1.0;
            let mut gamma_pow = 1.0;
            for n in 1..=inside.len() {
                sign = -sign;
                gamma_pow *= gamma;
                let eval = |y: f64| -> f64 {
                    2.0 * inside
                        .iter()
                        .zip(&cur)
                        .take_while(|((x, _), _)| *x <= y)
                        .map(|(&(x, w), &cv)| w * cv * (y - x))
                        .sum::<f64>()
                };
                total += sign * gamma_pow * eval(z);
                if n < inside.len() {
                    cur = inside.iter().map(|&(x, _)| eval(x)).collect();
                }
            }
            Ok(total)
        }
        _ => {
            let (c, p) = m.power_params().expect("continuous variant");
            let big_i = m.integral_mass(z);
            let two_gi = 2.0 * gamma * big_i;
            let mut coeff = 2.0;
            let mut exponent = 1.0;
            let mut total = coeff * math::powf(z, exponent);
            let mut sign = 1.0;
            let mut gamma_pow = 1.0;
            let mut bound = 2.0 * z * math::exp(two_gi);
            for n in 1..400 {
                coeff = 2.0 * c * p * coeff / ((exponent + p) * (exponent + p + 1.0));
                exponent += p + 1.0;
                sign = -sign;
                gamma_pow *= gamma;
                total += sign * coeff * gamma_pow * math::powf(z, exponent);
                bound *= two_gi / n as f64;
                if bound < tol {
                    return Ok(total);
                }
            }
            Err(Error::Convergence {
                achieved: bound,
                requested: tol,
            })
        }
    }
}

/// The Picard envelope `2z e^{2 gamma int_0^z M dx}` bounding
/// `|C(z, gamma)|`.
pub fn eigenfunction_bound(m: &KreinString, z: f64, gamma: f64) -> f64 {
    2.0 * z * math::exp(2.0 * gamma * m.integral_mass(z))
}

/// Principal measure of the killed process.
///
/// Atomic strings: diagonalise the symmetrised killed generator; the
/// spectral weights are fixed by matching the eigenfunction expansion to
/// the chain's transition density, `w_k = (u_{ik}/(sqrt(w_i) C(x_i,
/// gamma_k)))^2`. Power-law strings: density `K gamma^sigma / Gamma(1 +
/// sigma)`, the Laplace inverse of `h(t) = K t^{-1-sigma}`.
pub fn principal_measure(m: &KreinString) -> Result<PrincipalMeasure> {
    match m {
        KreinString::Atomic { .. } => {
            let gen = KilledGenerator::new(m)?;
            let (diag, off) = gen.symmetrized();
            let (vals, vecs) = linalg::sym_tridiag_eigen(&diag, &off)?;
            let n = vals.len();
            let mut atoms = Vec::with_capacity(n);
            for k in 0..n {
                let gamma = vals[k];
                if !(gamma > 0.0) {
                    return Err(Error::Numeric(
                        "killed generator must have strictly positive spectrum",
                    ));
                }
                let mut best = 0;
                let mut best_abs = 0.0;
                for i in 0..n {
                    let a = math::abs(vecs.get(i, k));
                    if a > best_abs {
                        best_abs = a;
                        best = i;
                    }
                }
                let ci = eigenfunction_c_exact(m, gen.positions[best], gamma)?;
                if ci == 0.0 {
                    return Err(Error::Numeric(
                        "eigenfunction vanished at the normalisation state",
                    ));
                }
                let ratio = vecs.get(best, k) / (math::sqrt(gen.weights[best]) * ci);
                atoms.push((gamma, ratio * ratio));
            }
            atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal));
            Ok(PrincipalMeasure::Atoms(atoms))
        }
        KreinString::PowerLaw { .. } | KreinString::Linear { .. } => {
            let (c, p) = m.power_params().expect("continuous variant");
            let ps = power_spectral(c, p);
            Ok(PrincipalMeasure::Density {
                coeff: ps.levy_coeff / math::gamma(1.0 + ps.sigma),
                sigma: ps.sigma,
            })
        }
        KreinString::Heaviside { .. } => Err(Error::UnsupportedVariant(
            "the Heaviside string kills instantly (tau = 0); no principal measure",
        )),
    }
}

/// Spectral data of a string, computed once and reused by every density.
#[derive(Debug, Clone)]
pub struct Spectrum {
    string: KreinString,
    measure: PrincipalMeasure,
}

impl Spectrum {
    pub fn new(m: &KreinString) -> Result<Self> {
        Ok(Spectrum {
            string: m.clone(),
            measure: principal_measure(m)?,
        })
    }

    pub fn measure(&self) -> &PrincipalMeasure {
        &self.measure
    }

    pub fn string(&self) -> &KreinString {
        &self.string
    }

    fn theta(&self, z: f64) -> f64 {
        let (c, p) = self.string.power_params().expect("power-law string");
        let ps = power_spectral(c, p);
        ps.theta_coeff * math::powf(z, 1.0 / ps.sigma)
    }

    /// First-hitting-time density `omega_tau(t, z)`.
    pub fn hitting_density(&self, t: f64, z: f64) -> Result<f64> {
        if !(t > 0.0) || !(z > 0.0) {
            return Err(Error::Domain("hitting density needs t > 0 and z > 0"));
        }
        match &self.measure {
            PrincipalMeasure::Atoms(atoms) => {
                let mut s = 0.0;
                for &(g, w) in atoms {
                    s += math::exp(-g * t) * eigenfunction_c_exact(&self.string, z, g)? * w;
                }
                Ok(s)
            }
            PrincipalMeasure::Density { sigma, .. } => {
                let th = self.theta(z);
                Ok(math::powf(th, *sigma) / math::gamma(*sigma)
                    * math::powf(t, -1.0 - sigma)
                    * math::exp(-th / t))
            }
        }
    }

    /// Transition density `p_hat(t, z, y)` of the killed process with
    /// respect to `mu_m` (atomic strings only).
    pub fn transition_density(&self, t: f64, z: f64, y: f64) -> Result<f64> {
        if !(t >= 0.0) || !(z >= 0.0) || !(y >= 0.0) {
            return Err(Error::Domain("transition density needs t, z, y >= 0"));
        }
        match &self.measure {
            PrincipalMeasure::Atoms(atoms) => {
                let mut s = 0.0;
                for &(g, w) in atoms {
                    s += math::exp(-g * t)
                        * eigenfunction_c_exact(&self.string, z, g)?
                        * eigenfunction_c_exact(&self.string, y, g)?
                        * w;
                }
                Ok(s)
            }
            _ => Err(Error::UnsupportedVariant(
                "transition density is available for atomic strings",
            )),
        }
    }

    /// Levy density `h_m(t) = int e^{-gamma t} d Delta(gamma)`.
    pub fn levy_density(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain("Levy density needs t > 0"));
        }
        match &self.measure {
            PrincipalMeasure::Atoms(atoms) => {
                Ok(atoms.iter().map(|&(g, w)| w * math::exp(-g * t)).sum())
            }
            PrincipalMeasure::Density { .. } => {
                let (c, p) = self.string.power_params().expect("power string");
                let ps = power_spectral(c, p);
                Ok(ps.levy_coeff * math::powf(t, -1.0 - ps.sigma))
            }
        }
    }

    /// Levy-measure tail `beta_m(t) = int gamma^{-1} e^{-gamma t} d
    /// Delta(gamma) = nu_m((t, oo))`; `beta' = -h_m`.
    pub fn beta(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain("beta needs t > 0"));
        }
        match &self.measure {
            PrincipalMeasure::Atoms(atoms) => Ok(atoms
                .iter()
                .map(|&(g, w)| w / g * math::exp(-g * t))
                .sum()),
            PrincipalMeasure::Density { .. } => {
                let (c, p) = self.string.power_params().expect("power string");
                let ps = power_spectral(c, p);
                Ok(ps.levy_coeff / ps.sigma * math::powf(t, -ps.sigma))
            }
        }
    }

    /// Survival probability `P_z(tau > t)`.
    pub fn survival(&self, z: f64, t: f64) -> Result<f64> {
        if !(z > 0.0) || !(t >= 0.0) {
            return Err(Error::Domain("survival needs z > 0 and t >= 0"));
        }
        match &self.measure {
            PrincipalMeasure::Atoms(atoms) => {
                let mut s = 0.0;
                for &(g, w) in atoms {
                    s += math::exp(-g * t) / g * eigenfunction_c_exact(&self.string, z, g)? * w;
                }
                Ok(s)
            }
            PrincipalMeasure::Density { sigma, .. } => {
                if t == 0.0 {
                    return Ok(1.0);
                }
                Ok(math::gamma_p(*sigma, self.theta(z) / t))
            }
        }
    }

    /// Laplace transform of the hitting time, `E_z[e^{-lambda tau}]`.
    pub fn hitting_laplace(&self, z: f64, lambda: f64, tol: f64) -> Result<f64> {
        hitting_laplace(&self.string, z, lambda, tol)
    }

    /// Residual of the double-integral identity
    /// `2 int_0^z int_(0,x] omega(t, v) dmu(v) dx = 2 z beta(t) - P_z(tau > t)`.
    pub fn identity_residual(&self, z: f64, t: f64) -> Result<f64> {
        if !(z > 0.0) || !(t > 0.0) {
            return Err(Error::Domain("identity residual needs z > 0 and t > 0"));
        }
        let lhs = match &self.measure {
            PrincipalMeasure::Atoms(_) => {
                let atoms = self.string.atoms().expect("atomic measure");
                let mut s = 0.0;
                for &(x, w) in atoms.iter().take_while(|&&(x, _)| x <= z) {
                    s += w * self.hitting_density(t, x)? * (z - x);
                }
                2.0 * s
            }
            PrincipalMeasure::Density { .. } => {
                let (c, p) = self.string.power_params().expect("power string");
                let inner = |x: f64| -> f64 {
                    if x <= 0.0 {
                        return 0.0;
                    }
                    quad::integrate(
                        |v| {
                            if v <= 0.0 {
                                return 0.0;
                            }
                            self.hitting_density(t, v).unwrap_or(f64::NAN)
                                * c
                                * p
                                * math::powf(v, p - 1.0)
                        },
                        0.0,
                        x,
                        1e-9,
                    )
                    .map(|q| q.value)
                    .unwrap_or(f64::NAN)
                };
                let outer = quad::integrate(inner, 0.0, z, 1e-8)?;
                if outer.value.is_nan() {
                    return Err(Error::Numeric("inner quadrature failed"));
                }
                2.0 * outer.value
            }
        };
        let rhs = 2.0 * z * self.beta(t)? - self.survival(z, t)?;
        Ok(math::abs(lhs - rhs))
    }
}

/// `E_z[e^{-lambda tau}]` for the hitting time of zero: the bounded
/// Sturm-Liouville solution evaluated at `z`. Exact for atomic strings,
/// closed Gamma-mixture quadrature for power laws, 1 for Heaviside
/// (`tau = 0`).
pub fn hitting_laplace(m: &KreinString, z: f64, lambda: f64, tol: f64) -> Result<f64> {
    if !(z >= 0.0) || !(lambda >= 0.0) {
        return Err(Error::Domain("hitting laplace needs z >= 0, lambda >= 0"));
    }
    if z == 0.0 || lambda == 0.0 {
        return Ok(1.0);
    }
    match m {
        KreinString::Heaviside { .. } => Ok(1.0),
        KreinString::Atomic { .. } => {
            let phi = bernstein::bounded_sl_solution(m, lambda)?;
            Ok(phi.eval(z))
        }
        _ => {
            let (c, p) = m.power_params().expect("continuous variant");
            let ps = power_spectral(c, p);
            let sigma = ps.sigma;
            let theta = ps.theta_coeff * math::powf(z, 1.0 / sigma);
            // E[e^{-lambda tau}] = 1/Gamma(sigma) int_0^oo u^{sigma-1}
            //   e^{-u - lambda theta/u} du, tamed by u = v^{1/sigma}.
            let q = quad::integrate_to_inf(
                |v| {
                    if v <= 0.0 {
                        return 0.0;
                    }
                    let u = math::powf(v, 1.0 / sigma);
                    math::exp(-u - lambda * theta / u) / sigma
                },
                0.0,
                tol,
            )?;
            Ok(q.value / math::gamma(sigma))
        }
    }
}

/// Closed-form first-hitting density of the fractional family in the
/// original Bessel variable `y`:
/// `(y^2/4)^sigma / Gamma(sigma) * t^{-1-sigma} e^{-y^2/(4t)}`.
pub fn fractional_hitting_density(sigma: f64, t: f64, y: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::Domain("sigma must lie in (0, 1)"));
    }
    if !(t > 0.0) || !(y > 0.0) {
        return Err(Error::Domain("density needs t > 0 and y > 0"));
    }
    let th = y * y / 4.0;
    Ok(math::powf(th, sigma) / math::gamma(sigma) * math::powf(t, -1.0 - sigma)
        * math::exp(-th / t))
}
