//! Krein strings and their Lebesgue-Stieltjes calculus.
//!
//! A string is a non-decreasing, right-continuous mass function `m` on
//! the real line with `m(x) = 0` for `x < 0` and `m(x) > 0` for `x > 0`.
//! Four closed families are supported: purely atomic, power law
//! `m(z) = c z^p`, Heaviside `m(z) = h`, and linear `m(z) = alpha z`.
//! General strings outside these families need a new variant; measures
//! never get silently discretised.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::quad;

/// A string of infinite length together with its measure `mu_m`.
#[derive(Debug, Clone, PartialEq)]
pub enum KreinString {
    /// `mass_at_zero` at the origin plus finitely many atoms on `(0, oo)`,
    /// with strictly increasing positions and positive weights.
    Atomic {
        mass_at_zero: f64,
        atoms: Vec<(f64, f64)>,
    },
    /// `m(z) = c z^p` for `z >= 0`.
    PowerLaw { c: f64, p: f64 },
    /// `m(z) = h` for `z >= 0` (a single atom of weight `h` at zero).
    Heaviside { h: f64 },
    /// `m(z) = alpha z` for `z >= 0`.
    Linear { alpha: f64 },
}

impl KreinString {
    /// Atomic string; positions must be strictly increasing and positive,
    /// weights strictly positive, and at least one unit of mass present.
    pub fn atomic(mass_at_zero: f64, atoms: Vec<(f64, f64)>) -> Result<Self> {
        if !(mass_at_zero >= 0.0) {
            return Err(Error::InvalidString(
                "mass at zero must be non-negative (m is non-decreasing)",
            ));
        }
        if atoms.is_empty() && mass_at_zero == 0.0 {
            return Err(Error::InvalidString(
                "string must carry positive mass (m(x) > 0 for x > 0)",
            ));
        }
        let mut prev = 0.0;
        for &(x, w) in &atoms {
            if !(x > prev) {
                return Err(Error::InvalidString(
                    "atom positions must be positive and strictly increasing (m is non-decreasing and vanishes on x < 0)",
                ));
            }
            if !(w > 0.0) {
                return Err(Error::InvalidString(
                    "atom weights must be strictly positive (m is non-decreasing)",
                ));
            }
            prev = x;
        }
        Ok(KreinString::Atomic {
            mass_at_zero,
            atoms,
        })
    }

    pub fn power_law(c: f64, p: f64) -> Result<Self> {
        if !(c > 0.0) || !(p > 0.0) {
            return Err(Error::InvalidString(
                "power-law parameters must satisfy c > 0 and p > 0 (m(x) > 0 for x > 0, finite for some x)",
            ));
        }
        Ok(KreinString::PowerLaw { c, p })
    }

    pub fn heaviside(h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidString(
                "step height must be positive (m(x) > 0 for x >= 0)",
            ));
        }
        Ok(KreinString::Heaviside { h })
    }

    pub fn linear(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidString(
                "linear slope must be positive (m(x) > 0 for x > 0)",
            ));
        }
        Ok(KreinString::Linear { alpha })
    }

    /// The fractional-power string `m(z) = z^{(1-sigma)/sigma} / 2`, whose
    /// Bernstein function is `c_sigma lambda^sigma` and whose pointwise
    /// limit as `sigma -> 1-` is the height-1/2 Heaviside string.
    pub fn fractional(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(Error::Domain("sigma must lie in (0, 1)"));
        }
        let p = (1.0 - sigma) / sigma;
        if p == 1.0 {
            KreinString::linear(0.5)
        } else {
            KreinString::power_law(0.5, p)
        }
    }

    /// Natural-scale string of the Bessel process of dimension
    /// `2(1 - sigma)`: `m(z) = sigma/(1-sigma) z^{(1-sigma)/sigma}`.
    pub fn bessel_natural(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(Error::Domain("sigma must lie in (0, 1)"));
        }
        let c = sigma / (1.0 - sigma);
        let p = (1.0 - sigma) / sigma;
        if p == 1.0 {
            KreinString::linear(c)
        } else {
            KreinString::power_law(c, p)
        }
    }

    /// `m(0+)`, the drift coefficient of the associated Bernstein function.
    pub fn mass_at_origin(&self) -> f64 {
        match self {
            KreinString::Atomic { mass_at_zero, .. } => *mass_at_zero,
            KreinString::Heaviside { h } => *h,
            KreinString::PowerLaw { .. } | KreinString::Linear { .. } => 0.0,
        }
    }

    /// `m(x)`; zero for `x < 0`.
    pub fn m_value(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self {
            KreinString::Atomic {
                mass_at_zero,
                atoms,
            } => {
                let mut m = *mass_at_zero;
                for &(pos, w) in atoms {
                    if pos <= x {
                        m += w;
                    } else {
                        break;
                    }
                }
                m
            }
            KreinString::PowerLaw { c, p } => c * math::powf(x, *p),
            KreinString::Heaviside { h } => *h,
            KreinString::Linear { alpha } => alpha * x,
        }
    }

    /// `mu_m((a, b]) = m(b) - m(a)`, exact for every variant.
    pub fn measure_of_interval(&self, a: f64, b: f64) -> Result<f64> {
        if !(a < b) {
            return Err(Error::Domain("interval needs a < b"));
        }
        Ok(self.m_value(b) - self.m_value(a))
    }

    /// `M(x) = mu_m((0, x]) = m(x) - m(0+)` for `x >= 0`.
    pub fn mass_within(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            self.m_value(x) - self.mass_at_origin()
        }
    }

    /// `int_0^z M(x) dx` in closed form; drives the eigenfunction-series
    /// truncation bound.
    pub fn integral_mass(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        match self {
            KreinString::Atomic { atoms, .. } => atoms
                .iter()
                .take_while(|&&(x, _)| x < z)
                .map(|&(x, w)| w * (z - x))
                .sum(),
            KreinString::PowerLaw { c, p } => c * math::powf(z, p + 1.0) / (p + 1.0),
            KreinString::Heaviside { .. } => 0.0,
            KreinString::Linear { alpha } => alpha * z * z / 2.0,
        }
    }

    /// Power-law parameters `(c, p)` treating `Linear` as `p = 1`.
    pub fn power_params(&self) -> Option<(f64, f64)> {
        match self {
            KreinString::PowerLaw { c, p } => Some((*c, *p)),
            KreinString::Linear { alpha } => Some((*alpha, 1.0)),
            _ => None,
        }
    }

    /// Atoms on `(0, oo)` for the atomic variant.
    pub fn atoms(&self) -> Option<&[(f64, f64)]> {
        match self {
            KreinString::Atomic { atoms, .. } => Some(atoms),
            _ => None,
        }
    }
}

/// A function sampled on a strictly increasing grid; each grid point
/// carries `width` components.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub width: usize,
}

impl GridFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, width: usize) -> Result<Self> {
        if width == 0 || values.len() != grid.len() * width {
            return Err(Error::Precondition(
                "grid-function values must hold `width` entries per grid point",
            ));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Precondition("grid must be strictly increasing"));
        }
        Ok(GridFunction {
            grid,
            values,
            width,
        })
    }

    pub fn scalar(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        GridFunction::new(grid, values, 1)
    }

    #[inline]
    pub fn value(&self, point: usize, component: usize) -> f64 {
        self.values[point * self.width + component]
    }
}

/// Weak m-derivative of a sampled function: the difference quotient in
/// `m` across each mass-carrying grid cell, so that
/// `f(z2) = f(z1) + int_{(z1,z2]} g dmu_m` reconstructs `f` exactly for
/// functions that are `mu_m`-primitives.
///
/// Atomic strings must have every atom inside the grid span matched by a
/// grid point bit-for-bit; the result lives on the atoms. Continuous
/// strings differentiate per grid cell, the result living on cell right
/// ends. The atom at zero (if any) is outside `(0, oo)` and ignored.
pub fn m_derivative(f: &GridFunction, m: &KreinString) -> Result<GridFunction> {
    let grid = &f.grid;
    if grid.len() < 2 {
        return Err(Error::Precondition("grid needs at least two points"));
    }
    let lo = grid[0];
    let hi = grid[grid.len() - 1];
    if m.mass_within(hi) - m.mass_within(lo.max(0.0)) <= 0.0 {
        return Err(Error::Domain("mu_m assigns no mass to the grid span"));
    }
    match m {
        KreinString::Atomic { atoms, .. } => {
            let mut out_grid = Vec::new();
            let mut out_vals = Vec::new();
            for &(x, w) in atoms.iter() {
                if x <= lo || x > hi {
                    continue;
                }
                let j = grid
                    .iter()
                    .position(|&g| g == x)
                    .ok_or(Error::Precondition(
                        "grid must contain every atom position exactly",
                    ))?;
                if j == 0 {
                    return Err(Error::Precondition(
                        "grid must contain a point before each atom",
                    ));
                }
                out_grid.push(x);
                for comp in 0..f.width {
                    out_vals.push((f.value(j, comp) - f.value(j - 1, comp)) / w);
                }
            }
            GridFunction::new(out_grid, out_vals, f.width)
        }
        KreinString::Heaviside { .. } => {
            Err(Error::Domain("mu_m assigns no mass to the grid span"))
        }
        _ => {
            let mut out_grid = Vec::with_capacity(grid.len() - 1);
            let mut out_vals = Vec::with_capacity((grid.len() - 1) * f.width);
            for j in 1..grid.len() {
                let dm = m.m_value(grid[j]) - m.m_value(grid[j - 1]);
                if dm <= 0.0 {
                    return Err(Error::Domain("mu_m assigns no mass to a grid cell"));
                }
                out_grid.push(grid[j]);
                for comp in 0..f.width {
                    out_vals.push((f.value(j, comp) - f.value(j - 1, comp)) / dm);
                }
            }
            GridFunction::new(out_grid, out_vals, f.width)
        }
    }
}

/// Reconstruct a function from its m-derivative: `f(z) = f0 + int_{(0,z]} g dmu_m`
/// evaluated on `eval_grid`. Inverse of [`m_derivative`] on atomic strings.
pub fn m_primitive(
    g: &GridFunction,
    m: &KreinString,
    f0: f64,
    eval_grid: &[f64],
) -> Result<GridFunction> {
    if g.width != 1 {
        return Err(Error::Precondition("m_primitive handles scalar data"));
    }
    match m {
        KreinString::Atomic { atoms, .. } => {
            let mut vals = Vec::with_capacity(eval_grid.len());
            for &z in eval_grid {
                let mut acc = f0;
                for &(x, w) in atoms.iter() {
                    if x > z {
                        break;
                    }
                    if let Some(j) = g.grid.iter().position(|&p| p == x) {
                        acc += w * g.value(j, 0);
                    }
                }
                vals.push(acc);
            }
            GridFunction::scalar(eval_grid.to_vec(), vals)
        }
        _ => Err(Error::UnsupportedVariant(
            "reconstruction is exact only for atomic strings",
        )),
    }
}

/// Original-scale description of a power-law diffusion under the scale
/// map `s(y) = (y/q)^q`: the push-forward speed measure together with
/// the scale-function record.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaleRecord {
    /// Push-forward `s^{-1}_# mu_m` as a string in the original variable.
    pub speed: KreinString,
    /// Scale function `s(y) = (inner * y)^exponent`.
    pub scale_inner: f64,
    pub scale_exponent: f64,
    /// Original-scale speed density `coeff * y^exponent`.
    pub speed_density_coeff: f64,
    pub speed_density_exponent: f64,
}

/// Move a power-law string from natural scale to the original scale of
/// `s(y) = (y/q)^q`.
pub fn rescale(m: &KreinString, q: f64) -> Result<RescaleRecord> {
    if !(q > 0.0) {
        return Err(Error::Domain("scale exponent must be positive"));
    }
    let (c, p) = m
        .power_params()
        .ok_or(Error::UnsupportedVariant("rescale needs a power-law string"))?;
    let new_p = q * p;
    let new_c = c / math::powf(q, new_p);
    let speed = if new_p == 1.0 {
        KreinString::linear(new_c)?
    } else {
        KreinString::power_law(new_c, new_p)?
    };
    Ok(RescaleRecord {
        speed,
        scale_inner: 1.0 / q,
        scale_exponent: q,
        speed_density_coeff: new_c * new_p,
        speed_density_exponent: new_p - 1.0,
    })
}

/// Expected exit time of the generalized diffusion from `(a, b)` started
/// at `y`, in natural scale: `int_(a,b) G(y, r) dmu_m(r)` with the Green
/// kernel `G(y, r) = 2 (y /\ r - a)(b - y \/ r)/(b - a)`.
pub fn mean_exit_time(m: &KreinString, a: f64, b: f64, y: f64) -> Result<f64> {
    if !(0.0 <= a && a < b) {
        return Err(Error::Domain("interval needs 0 <= a < b"));
    }
    if !(a < y && y < b) {
        return Err(Error::Domain("start point must lie inside (a, b)"));
    }
    let green = |r: f64| 2.0 * (y.min(r) - a) * (b - y.max(r)) / (b - a);
    match m {
        KreinString::Atomic { atoms, .. } => Ok(atoms
            .iter()
            .filter(|&&(x, _)| x > a && x < b)
            .map(|&(x, w)| w * green(x))
            .sum()),
        KreinString::Heaviside { .. } => Ok(0.0),
        _ => {
            let (c, p) = m.power_params().expect("continuous variant");
            let density = move |r: f64| c * p * math::powf(r, p - 1.0);
            let left = quad::integrate(|r| green(r) * density(r), a, y, 1e-12)?;
            let right = quad::integrate(|r| green(r) * density(r), y, b, 1e-12)?;
            Ok(left.value + right.value)
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
    fn validation_names_violated_property() {
        let err = KreinString::atomic(0.0, vec![(2.0, 1.0), (1.0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::InvalidString(msg) if msg.contains("strictly increasing")));
        let err = KreinString::atomic(0.0, vec![(1.0, -1.0)]).unwrap_err();
        assert!(matches!(err, Error::InvalidString(msg) if msg.contains("positive")));
        assert!(KreinString::power_law(0.0, 1.0).is_err());
        assert!(KreinString::heaviside(-1.0).is_err());
        assert!(KreinString::linear(0.0).is_err());
    }

    #[test]
    fn measure_of_interval_examples() {
        // single atom inside the interval
        assert_eq!(single_atom().measure_of_interval(0.5, 2.0).unwrap(), 1.0);
        // fractional string at sigma = 1/2 over (0, 2]
        let m = KreinString::fractional(0.5).unwrap();
        assert_eq!(m.measure_of_interval(0.0, 2.0).unwrap(), 1.0);
        // Heaviside: the atom at zero
        let h = KreinString::heaviside(1.0).unwrap();
        assert_eq!(h.measure_of_interval(-1.0, 1.0).unwrap(), 1.0);
        assert!(h.measure_of_interval(2.0, 1.0).is_err());
    }

    #[test]
    fn m_value_examples() {
        // m_sigma at sigma = 1/2: c = sigma/(2(1-sigma)) = 1/2, p = 1
        let m = KreinString::power_law(0.5, 1.0).unwrap();
        assert_eq!(m.m_value(1.0), 0.5);
        assert_eq!(m.m_value(-3.0), 0.0);
        let a = KreinString::atomic(0.0, vec![(1.0, 2.0), (3.0, 1.0)]).unwrap();
        assert_eq!(a.m_value(2.0), 2.0);
    }

    #[test]
    fn finite_additivity_exact() {
        let strings = [
            single_atom(),
            KreinString::heaviside(1.0).unwrap(),
            KreinString::atomic(0.5, vec![(0.5, 0.25), (2.0, 3.0)]).unwrap(),
        ];
        for m in &strings {
            for (a, b, c) in [(-1.0, 0.7, 2.5), (0.0, 1.0, 3.0), (0.25, 0.5, 4.0)] {
                let whole = m.measure_of_interval(a, c).unwrap();
                let parts =
                    m.measure_of_interval(a, b).unwrap() + m.measure_of_interval(b, c).unwrap();
                assert_eq!(whole, parts);
            }
        }
    }

    #[test]
    fn m_derivative_of_m_is_one() {
        let m = single_atom();
        let grid = vec![0.0, 0.5, 1.0, 1.5];
        let vals: Vec<f64> = grid.iter().map(|&z| m.m_value(z)).collect();
        let f = GridFunction::scalar(grid, vals).unwrap();
        let g = m_derivative(&f, &m).unwrap();
        assert_eq!(g.grid, vec![1.0]);
        assert_eq!(g.values, vec![1.0]);
    }

    #[test]
    fn m_derivative_linear_chain_rule() {
        let m = KreinString::linear(2.0).unwrap();
        let grid = vec![0.0, 0.5, 1.0, 2.0];
        let vals = grid.clone();
        let f = GridFunction::scalar(grid, vals).unwrap();
        let g = m_derivative(&f, &m).unwrap();
        for j in 0..g.grid.len() {
            assert!((g.value(j, 0) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn m_derivative_of_constant_vanishes() {
        let m = single_atom();
        let f = GridFunction::scalar(vec![0.0, 1.0, 2.0], vec![3.0, 3.0, 3.0]).unwrap();
        let g = m_derivative(&f, &m).unwrap();
        assert_eq!(g.values, vec![0.0]);
    }

    #[test]
    fn m_derivative_error_paths() {
        let m = single_atom();
        // grid missing the atom
        let f = GridFunction::scalar(vec![0.0, 0.9, 1.1], vec![0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(m_derivative(&f, &m), Err(Error::Precondition(_))));
        // zero-mass span
        let f = GridFunction::scalar(vec![2.0, 3.0], vec![0.0, 0.0]).unwrap();
        assert!(matches!(m_derivative(&f, &m), Err(Error::Domain(_))));
    }

    #[test]
    fn m_derivative_round_trip_on_atoms() {
        let m = KreinString::atomic(0.0, vec![(0.5, 2.0), (1.25, 0.5), (3.0, 1.0)]).unwrap();
        let g = GridFunction::scalar(vec![0.5, 1.25, 3.0], vec![-1.0, 4.0, 0.25]).unwrap();
        let grid = vec![0.0, 0.5, 0.9, 1.25, 2.0, 3.0, 4.0];
        let f = m_primitive(&g, &m, 7.0, &grid).unwrap();
        let back = m_derivative(&f, &m).unwrap();
        assert_eq!(back.grid, g.grid);
        for j in 0..3 {
            assert!((back.value(j, 0) - g.value(j, 0)).abs() < 1e-15);
        }
    }

    #[test]
    fn rescale_identity_and_bessel_example() {
        // q = 1 keeps the string
        let m = KreinString::power_law(0.7, 2.0).unwrap();
        let r = rescale(&m, 1.0).unwrap();
        assert_eq!(r.speed, m);
        // fractional string at sigma = 1/2 with q = 2 sigma = 1: already natural
        let m = KreinString::fractional(0.5).unwrap();
        let r = rescale(&m, 1.0).unwrap();
        assert_eq!(r.speed, m);
        // Bessel natural-scale string under s(y) = (y/2sigma)^{2sigma}
        // yields the original-scale speed density (y/2sigma)^{1-2sigma};
        // the classical speed-measure normalisation (speed of Brownian
        // motion = 2 Lebesgue) doubles both sides, giving the usual
        // 2 (y/2sigma)^{1-2sigma} for the doubled string.
        let sigma = 0.3;
        let m = KreinString::bessel_natural(sigma).unwrap();
        let r = rescale(&m, 2.0 * sigma).unwrap();
        let expect_coeff = math::powf(2.0 * sigma, 2.0 * sigma - 1.0);
        assert!((r.speed_density_coeff - expect_coeff).abs() < 1e-13);
        assert!((r.speed_density_exponent - (1.0 - 2.0 * sigma)).abs() < 1e-13);
        assert!((r.scale_inner - 1.0 / (2.0 * sigma)).abs() < 1e-15);
        let p = (1.0 - sigma) / sigma;
        let doubled = KreinString::power_law(2.0 * sigma / (1.0 - sigma), p).unwrap();
        let r2 = rescale(&doubled, 2.0 * sigma).unwrap();
        assert!((r2.speed_density_coeff - 2.0 * expect_coeff).abs() < 1e-13);
        // unsupported variant
        assert!(rescale(&single_atom(), 2.0).is_err());
    }

    #[test]
    fn mean_exit_time_single_atom() {
        let m = single_atom();
        assert_eq!(mean_exit_time(&m, 0.0, 2.0, 1.0).unwrap(), 1.0);
        // boundary limits
        assert!(mean_exit_time(&m, 0.0, 2.0, 1e-9).unwrap() < 1e-8);
        assert!(mean_exit_time(&m, 0.0, 2.0, 2.0 - 1e-9).unwrap() < 1e-8);
        assert!(mean_exit_time(&m, 0.0, 2.0, 2.5).is_err());
        assert!(mean_exit_time(&m, 0.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn mean_exit_time_linear_matches_brownian() {
        // Linear alpha = 1 is standard Brownian motion: E_y = (y-a)(b-y).
        let m = KreinString::linear(1.0).unwrap();
        let v = mean_exit_time(&m, 0.0, 2.0, 0.75).unwrap();
        assert!((v - 0.75 * 1.25).abs() < 1e-10);
    }
}
