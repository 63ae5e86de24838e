//! Monte Carlo simulation of generalized diffusions: hitting times,
//! local times, inverse local times, and Bessel paths.
//!
//! Determinism contract: every path draws from its own counter-indexed
//! ChaCha substream derived from `(master_seed, sampler tag, path id)`,
//! so identical configurations produce bit-identical sample vectors on
//! any worker layout. `path_offset` lets a driver split the path range
//! across workers without changing a single draw.
//!
//! Discretised samplers carry `O(sqrt(dt) + epsilon)` bias from the
//! Euler step and the band local-time estimator; the atomic samplers
//! are exact (event-driven chains and excursion decompositions).

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math;
use crate::spectral::KilledGenerator;
use crate::string::KreinString;

const TAG_CTMC: u64 = 0x63746d63;
const TAG_TIMECHANGE: u64 = 0x74696d65;
const TAG_INV_LOCAL: u64 = 0x696e766c;
const TAG_BESSEL: u64 = 0x62657373;
const TAG_HITTING: u64 = 0x68697474;

/// Simulation configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub master_seed: u64,
    pub n_paths: usize,
    /// Euler time step of the Brownian discretisation.
    pub dt: f64,
    /// Half-width of the local-time occupation band.
    pub epsilon: f64,
    /// Truncation horizon in Brownian time; paths still running at the
    /// horizon are counted as censored, never silently dropped.
    pub horizon: f64,
    /// First absolute path index; lets workers own disjoint ranges of
    /// the same deterministic stream family.
    pub path_offset: u64,
}

impl SimConfig {
    pub fn new(master_seed: u64, n_paths: usize, dt: f64, epsilon: f64, horizon: f64) -> Result<Self> {
        if n_paths == 0 {
            return Err(Error::Precondition("need at least one path"));
        }
        if !(dt > 0.0) || !(epsilon > 0.0) || !(horizon > 0.0) {
            return Err(Error::Precondition(
                "dt, epsilon, and horizon must be positive",
            ));
        }
        Ok(SimConfig {
            master_seed,
            n_paths,
            dt,
            epsilon,
            horizon,
            path_offset: 0,
        })
    }
}

/// Moment summary of a sample vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSummary {
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub n: usize,
}

impl SampleSummary {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return SampleSummary {
                mean: 0.0,
                variance: 0.0,
                std_error: 0.0,
                n: 0,
            };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let variance = if n > 1 {
            samples.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0)
        } else {
            0.0
        };
        SampleSummary {
            mean,
            variance,
            std_error: math::sqrt(variance / n as f64),
            n,
        }
    }
}

fn path_rng(seed: u64, tag: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(math::splitmix64(seed ^ tag.wrapping_mul(0x9e37_79b9)));
    rng.set_stream(path);
    rng
}

/// Uniform draw on `(0, 1]`.
fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (((rng.next_u64() >> 11) + 1) as f64) * (1.0 / 9007199254740992.0)
}

fn exp_sample(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    -math::ln(uniform(rng)) / rate
}

fn normal_sample(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = uniform(rng);
    let u2 = uniform(rng);
    math::sqrt(-2.0 * math::ln(u1)) * math::cos(2.0 * math::PI * u2)
}

/// Poisson sample by chunked Knuth multiplication (exact for any mean).
fn poisson_sample(rng: &mut ChaCha8Rng, mut mean: f64) -> u64 {
    let mut total = 0u64;
    while mean > 30.0 {
        total += poisson_knuth(rng, 30.0);
        mean -= 30.0;
    }
    total + poisson_knuth(rng, mean)
}

fn poisson_knuth(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let limit = math::exp(-mean);
    let mut k = 0u64;
    let mut prod = uniform(rng);
    while prod > limit {
        k += 1;
        prod *= uniform(rng);
    }
    k
}

/// Exact event-driven simulation of the killed chain on the atoms,
/// started at the atom `z0`; returns i.i.d. absorption times.
pub fn simulate_ctmc_hitting(m: &KreinString, z0: f64, cfg: &SimConfig) -> Result<Vec<f64>> {
    let gen = KilledGenerator::new(m)?;
    let start = gen
        .positions
        .iter()
        .position(|&x| x == z0)
        .ok_or(Error::Domain("start point must be an atom of the string"))?;
    let mut taus = Vec::with_capacity(cfg.n_paths);
    for path in 0..cfg.n_paths {
        let mut rng = path_rng(cfg.master_seed, TAG_CTMC, cfg.path_offset + path as u64);
        taus.push(ctmc_absorption_time(&gen, start, &mut rng)?);
    }
    Ok(taus)
}

fn ctmc_absorption_time(
    gen: &KilledGenerator,
    start: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut state = start;
    let mut t = 0.0;
    for _ in 0..100_000_000u64 {
        let l = gen.left_rate[state];
        let r = gen.right_rate[state];
        let q = l + r;
        t += exp_sample(rng, q);
        if uniform(rng) * q < l {
            if state == 0 {
                return Ok(t);
            }
            state -= 1;
        } else {
            state += 1;
        }
    }
    Err(Error::Numeric("chain failed to absorb within the step cap"))
}

/// Paths of the time-changed reflected walk.
#[derive(Debug, Clone)]
pub struct HittingSamples {
    /// Hitting times in the generalized-diffusion clock.
    pub taus: Vec<f64>,
    /// Paths still alive at the horizon.
    pub censored: usize,
}

/// Simulate the generalized diffusion of a continuous string by the
/// Euler reflected walk with the band time change
/// `dA = mu_m((b - eps, b + eps)) / (2 eps) dt`; returns first hitting
/// times of zero in the `A` clock.
pub fn simulate_reflected_bm_timechange(
    m: &KreinString,
    z0: f64,
    cfg: &SimConfig,
) -> Result<HittingSamples> {
    if m.power_params().is_none() {
        return Err(Error::UnsupportedVariant(
            "the reflected-walk time change needs a continuous string",
        ));
    }
    if !(z0 > 0.0) {
        return Err(Error::Domain("start point must be positive"));
    }
    let sqdt = math::sqrt(cfg.dt);
    let steps = (cfg.horizon / cfg.dt) as u64;
    let mut taus = Vec::with_capacity(cfg.n_paths);
    let mut censored = 0usize;
    for path in 0..cfg.n_paths {
        let mut rng = path_rng(cfg.master_seed, TAG_TIMECHANGE, cfg.path_offset + path as u64);
        let mut b = z0;
        let mut a_acc = 0.0;
        let mut hit = false;
        for _ in 0..steps {
            let band = (m.m_value(b + cfg.epsilon) - m.m_value(b - cfg.epsilon))
                / (2.0 * cfg.epsilon);
            a_acc += band * cfg.dt;
            let next = b + sqdt * normal_sample(&mut rng);
            if next <= 0.0 {
                taus.push(a_acc);
                hit = true;
                break;
            }
            b = next;
        }
        if !hit {
            censored += 1;
        }
    }
    Ok(HittingSamples { taus, censored })
}

/// Hitting-time samples for any supported family from any start point:
/// atomic strings split harmonically to the bracketing atoms and run the
/// exact chain, continuous strings run the discretised time change.
pub fn sample_hitting_times(m: &KreinString, z0: f64, cfg: &SimConfig) -> Result<HittingSamples> {
    if !(z0 >= 0.0) {
        return Err(Error::Domain("start point must be non-negative"));
    }
    if z0 == 0.0 {
        return Ok(HittingSamples {
            taus: vec![0.0; cfg.n_paths],
            censored: 0,
        });
    }
    match m {
        KreinString::Atomic { .. } => {
            let gen = KilledGenerator::new(m)?;
            let positions = &gen.positions;
            let nb = positions.len();
            // bracketing atoms and the harmonic split of the start point
            let right_idx = positions.iter().position(|&x| x >= z0);
            let mut taus = Vec::with_capacity(cfg.n_paths);
            for path in 0..cfg.n_paths {
                let mut rng =
                    path_rng(cfg.master_seed, TAG_HITTING, cfg.path_offset + path as u64);
                let start = match right_idx {
                    Some(0) => {
                        if positions[0] == z0 {
                            Some(0)
                        } else if uniform(&mut rng) < z0 / positions[0] {
                            Some(0)
                        } else {
                            None // slides to zero without touching an atom
                        }
                    }
                    Some(i) => {
                        if positions[i] == z0 {
                            Some(i)
                        } else {
                            let (lo, hi) = (positions[i - 1], positions[i]);
                            if uniform(&mut rng) < (z0 - lo) / (hi - lo) {
                                Some(i)
                            } else {
                                Some(i - 1)
                            }
                        }
                    }
                    None => Some(nb - 1), // above the last atom
                };
                match start {
                    Some(s) => taus.push(ctmc_absorption_time(&gen, s, &mut rng)?),
                    None => taus.push(0.0),
                }
            }
            Ok(HittingSamples { taus, censored: 0 })
        }
        KreinString::Heaviside { .. } => Ok(HittingSamples {
            taus: vec![0.0; cfg.n_paths],
            censored: 0,
        }),
        _ => simulate_reflected_bm_timechange(m, z0, cfg),
    }
}

/// Occupation-formula self test: both sides of
/// `int_0^T g(Z_r) dr = int g(z) L~_T(z) dmu_m(z)` for `g = 1_{[0,1]}`,
/// evaluated on the same simulated paths (left by the path integral of
/// the band time change, right by the binned local-time field).
#[derive(Debug, Clone)]
pub struct OccupationCheck {
    pub time_integral: f64,
    pub field_integral: f64,
    pub rel_gap: f64,
}

pub fn occupation_check(m: &KreinString, z0: f64, cfg: &SimConfig) -> Result<OccupationCheck> {
    if m.power_params().is_none() {
        return Err(Error::UnsupportedVariant(
            "occupation check needs a continuous string",
        ));
    }
    let sqdt = math::sqrt(cfg.dt);
    let steps = (cfg.horizon / cfg.dt) as u64;
    let bin_width = cfg.epsilon / 2.0;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for path in 0..cfg.n_paths {
        let mut rng = path_rng(cfg.master_seed, TAG_TIMECHANGE, cfg.path_offset + path as u64);
        let mut b = z0;
        let mut occupancy: Vec<f64> = vec![0.0; 1024];
        for _ in 0..steps {
            let bin = (b / bin_width) as usize;
            if bin >= occupancy.len() {
                occupancy.resize(bin + 256, 0.0);
            }
            occupancy[bin] += cfg.dt;
            // lhs: g(b) dA with the band speed density
            if b <= 1.0 {
                let band = (m.m_value(b + cfg.epsilon) - m.m_value(b - cfg.epsilon))
                    / (2.0 * cfg.epsilon);
                lhs += band * cfg.dt;
            }
            b = math::abs(b + sqdt * normal_sample(&mut rng));
        }
        // rhs: field L(z) = Occ((z - eps, z + eps)) / (2 eps) integrated
        // dmu over [0, 1]
        let nz = (1.0 / bin_width) as usize + 1;
        for j in 0..nz {
            let z = (j as f64 + 0.5) * bin_width;
            if z > 1.0 {
                break;
            }
            let lo = ((z - cfg.epsilon).max(0.0) / bin_width) as usize;
            let hi = ((z + cfg.epsilon) / bin_width) as usize;
            let occ: f64 = occupancy[lo.min(occupancy.len() - 1)..hi.min(occupancy.len())]
                .iter()
                .sum();
            let field = occ / (2.0 * cfg.epsilon);
            let dm = m.m_value(z + bin_width / 2.0) - m.m_value(z - bin_width / 2.0);
            rhs += field * dm;
        }
    }
    let rel_gap = if rhs != 0.0 {
        math::abs(lhs - rhs) / math::abs(rhs)
    } else {
        math::abs(lhs)
    };
    Ok(OccupationCheck {
        time_integral: lhs,
        field_integral: rhs,
        rel_gap,
    })
}

/// Samples of the inverse local time `L~^{-1}_t` of the generalized
/// diffusion at zero.
///
/// Atomic strings use the exact excursion decomposition: excursions
/// reach the first atom at rate `1/(2 x_1)` per unit local time and each
/// contributes an independent absorption time of the killed chain, so
/// `L~^{-1}_t` is compound Poisson with no discretisation bias. Linear
/// strings discretise the reflected walk, estimating the boundary local
/// time by the one-sided band `L_0 += dt/eps` on `{b < eps}`.
pub fn sample_inverse_local_time(m: &KreinString, t: f64, cfg: &SimConfig) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(Error::Domain("local-time level must be non-negative"));
    }
    if t == 0.0 {
        return Ok(vec![0.0; cfg.n_paths]);
    }
    match m {
        KreinString::Atomic { .. } => {
            let gen = KilledGenerator::new(m)?;
            let x1 = gen.positions[0];
            let mean = t / (2.0 * x1);
            let mut out = Vec::with_capacity(cfg.n_paths);
            for path in 0..cfg.n_paths {
                let mut rng =
                    path_rng(cfg.master_seed, TAG_INV_LOCAL, cfg.path_offset + path as u64);
                let n = poisson_sample(&mut rng, mean);
                let mut s = 0.0;
                for _ in 0..n {
                    s += ctmc_absorption_time(&gen, 0, &mut rng)?;
                }
                out.push(s);
            }
            Ok(out)
        }
        KreinString::Linear { .. } => {
            let sqdt = math::sqrt(cfg.dt);
            let steps = (cfg.horizon / cfg.dt) as u64;
            let mut out = Vec::with_capacity(cfg.n_paths);
            for path in 0..cfg.n_paths {
                let mut rng =
                    path_rng(cfg.master_seed, TAG_INV_LOCAL, cfg.path_offset + path as u64);
                let mut b = 0.0f64;
                let mut local = 0.0;
                let mut a_acc = 0.0;
                let mut done = false;
                for _ in 0..steps {
                    if b < cfg.epsilon {
                        local += cfg.dt / cfg.epsilon;
                    }
                    let band = (m.m_value(b + cfg.epsilon) - m.m_value(b - cfg.epsilon))
                        / (2.0 * cfg.epsilon);
                    a_acc += band * cfg.dt;
                    if local >= t {
                        done = true;
                        break;
                    }
                    b = math::abs(b + sqdt * normal_sample(&mut rng));
                }
                if !done {
                    return Err(Error::Precondition(
                        "horizon too short to accumulate the requested local time",
                    ));
                }
                out.push(a_acc);
            }
            Ok(out)
        }
        _ => Err(Error::UnsupportedVariant(
            "inverse local time sampling supports atomic and linear strings",
        )),
    }
}

/// Empirical check of the subordinator identity
/// `E[e^{-lambda L~^{-1}_t}] = e^{-t psi_m(lambda)}`.
#[derive(Debug, Clone)]
pub struct KnightCheck {
    pub empirical: f64,
    pub std_error: f64,
    pub theory: f64,
    pub z_score: f64,
}

pub fn knight_check(m: &KreinString, lambda: f64, t: f64, cfg: &SimConfig) -> Result<KnightCheck> {
    if !(lambda >= 0.0) {
        return Err(Error::Domain("lambda must be non-negative"));
    }
    let theory = if lambda == 0.0 {
        1.0
    } else {
        math::exp(-t * crate::bernstein::krein_psi(m, lambda)?)
    };
    let samples = sample_inverse_local_time(m, t, cfg)?;
    let transformed: Vec<f64> = samples.iter().map(|&s| math::exp(-lambda * s)).collect();
    let summary = SampleSummary::from_samples(&transformed);
    let z_score = if summary.std_error > 0.0 {
        (summary.mean - theory) / summary.std_error
    } else if summary.mean == theory {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(KnightCheck {
        empirical: summary.mean,
        std_error: summary.std_error,
        theory,
        z_score,
    })
}

/// Euler-Maruyama paths of the squared Bessel process of dimension
/// `2 (1 - sigma)`, reflected at zero by clamping; returns first
/// passage times to zero (threshold `epsilon` on the Bessel scale).
///
/// The raw Bessel clock runs twice as fast as the natural-scale
/// generalized diffusion of the matching string, so compare
/// `tau_raw / 2` against the closed-form density.
#[derive(Debug, Clone)]
pub struct BesselRuns {
    pub taus: Vec<f64>,
    pub clamp_events: usize,
    pub censored: usize,
}

pub fn simulate_bessel_hitting(sigma: f64, y0: f64, cfg: &SimConfig) -> Result<BesselRuns> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::Domain("sigma must lie in (0, 1)"));
    }
    if !(y0 > 0.0) {
        return Err(Error::Domain("start point must be positive"));
    }
    let delta = 2.0 * (1.0 - sigma);
    let sqdt = math::sqrt(cfg.dt);
    let steps = (cfg.horizon / cfg.dt) as u64;
    let threshold = cfg.epsilon * cfg.epsilon;
    let mut taus = Vec::with_capacity(cfg.n_paths);
    let mut clamp_events = 0usize;
    let mut censored = 0usize;
    for path in 0..cfg.n_paths {
        let mut rng = path_rng(cfg.master_seed, TAG_BESSEL, cfg.path_offset + path as u64);
        let mut x = y0 * y0;
        let mut hit = false;
        for k in 0..steps {
            let drift = delta * cfg.dt;
            let noise = 2.0 * math::sqrt(x.max(0.0)) * sqdt * normal_sample(&mut rng);
            x += drift + noise;
            if x < 0.0 {
                clamp_events += 1;
                x = 0.0;
            }
            if x <= threshold {
                taus.push((k + 1) as f64 * cfg.dt);
                hit = true;
                break;
            }
        }
        if !hit {
            censored += 1;
        }
    }
    Ok(BesselRuns {
        taus,
        clamp_events,
        censored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_atom() -> KreinString {
        KreinString::atomic(0.0, vec![(1.0, 1.0)]).unwrap()
    }

    fn cfg(n: usize) -> SimConfig {
        SimConfig::new(7, n, 1e-3, 0.02, 400.0).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(1, 0, 0.1, 0.1, 1.0).is_err());
        assert!(SimConfig::new(1, 10, 0.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn determinism_and_offsets() {
        let m = single_atom();
        let a = simulate_ctmc_hitting(&m, 1.0, &cfg(64)).unwrap();
        let b = simulate_ctmc_hitting(&m, 1.0, &cfg(64)).unwrap();
        assert_eq!(a, b);
        // a split run over [0,32) + [32,64) reproduces the same stream
        let mut left = cfg(32);
        let mut right = cfg(32);
        left.path_offset = 0;
        right.path_offset = 32;
        let l = simulate_ctmc_hitting(&m, 1.0, &left).unwrap();
        let r = simulate_ctmc_hitting(&m, 1.0, &right).unwrap();
        let merged: Vec<f64> = l.into_iter().chain(r).collect();
        assert_eq!(merged, a);
    }

    #[test]
    fn ctmc_single_atom_exponential() {
        let m = single_atom();
        let taus = simulate_ctmc_hitting(&m, 1.0, &cfg(20_000)).unwrap();
        let s = SampleSummary::from_samples(&taus);
        // tau ~ Exp(1/2): mean 2
        assert!(
            (s.mean - 2.0).abs() <= 3.0 * s.std_error,
            "mean {} se {}",
            s.mean,
            s.std_error
        );
        // empirical survival at t = 1 vs e^{-1/2}
        let surv =
            taus.iter().filter(|&&t| t > 1.0).count() as f64 / taus.len() as f64;
        let se = math::sqrt(surv * (1.0 - surv) / taus.len() as f64);
        assert!((surv - math::exp(-0.5)).abs() <= 3.0 * se);
        // start must be an atom
        assert!(simulate_ctmc_hitting(&m, 0.7, &cfg(4)).is_err());
    }

    #[test]
    fn inverse_local_time_atomic_knight() {
        let m = single_atom();
        let cfg = cfg(20_000);
        let check = knight_check(&m, 1.0, 1.0, &cfg).unwrap();
        assert!((check.theory - math::exp(-1.0 / 3.0)).abs() < 1e-15);
        assert!(check.z_score.abs() <= 3.0, "z = {}", check.z_score);
        // lambda = 0 is exact
        let check = knight_check(&m, 0.0, 1.0, &cfg).unwrap();
        assert_eq!(check.empirical, 1.0);
        assert_eq!(check.z_score, 0.0);
        // t = 0 gives the zero subordinator
        let samples = sample_inverse_local_time(&m, 0.0, &cfg).unwrap();
        assert!(samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn inverse_local_time_additivity() {
        // samples at t = 2 should look like sums of two t = 1 samples;
        // compare means and variances within Monte Carlo error
        let m = single_atom();
        let c = cfg(20_000);
        let one = sample_inverse_local_time(&m, 1.0, &c).unwrap();
        let two = sample_inverse_local_time(&m, 2.0, &c).unwrap();
        let s1 = SampleSummary::from_samples(&one);
        let s2 = SampleSummary::from_samples(&two);
        let mean_gap = (s2.mean - 2.0 * s1.mean).abs();
        let se = (s2.std_error * s2.std_error + 4.0 * s1.std_error * s1.std_error);
        assert!(mean_gap <= 3.0 * math::sqrt(se), "gap {mean_gap}");
        let var_gap = (s2.variance - 2.0 * s1.variance).abs();
        assert!(var_gap <= 0.2 * s2.variance, "variance gap {var_gap}");
    }

    #[test]
    fn hitting_samples_split_below_first_atom() {
        let m = single_atom();
        let c = cfg(20_000);
        let runs = sample_hitting_times(&m, 0.5, &c).unwrap();
        // half the paths slide to zero instantly
        let zeros = runs.taus.iter().filter(|&&t| t == 0.0).count() as f64;
        let frac = zeros / runs.taus.len() as f64;
        let se = math::sqrt(0.25 / runs.taus.len() as f64);
        assert!((frac - 0.5).abs() <= 3.0 * se);
        // from exactly zero everything is zero
        let runs = sample_hitting_times(&m, 0.0, &c).unwrap();
        assert!(runs.taus.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn bessel_validation() {
        assert!(simulate_bessel_hitting(1.5, 1.0, &cfg(4)).is_err());
        assert!(simulate_bessel_hitting(0.5, 0.0, &cfg(4)).is_err());
        // y0 -> 0 makes tau collapse
        let mut c = SimConfig::new(3, 256, 1e-4, 1e-3, 10.0).unwrap();
        c.epsilon = 1e-3;
        let runs = simulate_bessel_hitting(0.5, 1e-3, &c).unwrap();
        let mut taus = runs.taus.clone();
        taus.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = taus[taus.len() / 2];
        assert!(median <= 10.0 * c.dt, "median {median}");
    }
}
