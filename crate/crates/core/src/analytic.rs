//! Closed-form quantities of the aggregation model.
//!
//! `L` sensors each see the source through a binary symmetric channel with
//! flip probability `p`, compress at rate `R` (distortion `D(R)`), and the
//! aggregator takes a majority vote over the `L` reproductions. Under a fixed
//! capacity `lambda = L * R` this module evaluates the per-bit collective
//! error exactly (binomial tail) and asymptotically (Gaussian), and the
//! exponential decay rate of that error in `lambda`.

use std::f64::consts::{LN_2, SQRT_2};

use serde::Serialize;

use crate::distortion::DistortionModel;
use crate::error::{Error, Result};
use crate::search;
use crate::special;
use crate::types::{Capacity, Distortion, NoiseLevel, Rate};

/// Binary entropy in bits, with `0 log 0 = 0`.
pub fn binary_entropy(d: Distortion) -> f64 {
    let d = d.get();
    let term = |x: f64| if x == 0.0 { 0.0 } else { -x * x.log2() };
    term(d) + term(1.0 - d)
}

/// Rate-distortion function of a uniform binary source under Hamming
/// distortion: `R(D) = 1 - h2(D)`.
pub fn rate_of_distortion(d: Distortion) -> f64 {
    let dv = d.get();
    if dv < 0.25 {
        1.0 - binary_entropy(d)
    } else {
        // 1 - h2(D) is the KL divergence from Bernoulli(1/2); the log1p form
        // keeps relative precision as D -> 1/2 and R -> 0.
        let e = 1.0 - 2.0 * dv;
        (dv * (-e).ln_1p() + (1.0 - dv) * e.ln_1p()) / LN_2
    }
}

/// Distortion-rate function: inverse of [`rate_of_distortion`] on `[0, 1/2]`.
pub fn distortion_of_rate(r: Rate) -> Distortion {
    if r.get() == 1.0 {
        return Distortion::ZERO;
    }
    let target = r.get();
    // R(D) is strictly decreasing on [0, 1/2] from 1 to 0, so the sign change
    // is guaranteed; bisection then runs to the f64 resolution of D.
    let d = search::bisect(
        |d| rate_of_distortion(Distortion(d)) - target,
        0.0,
        0.5,
        0.0,
    )
    .expect("R(D) - r changes sign on [0, 1/2] for r in (0, 1)");
    Distortion(d)
}

/// Probability that a reproduced bit disagrees with the source:
/// `rho = (1 - 2p) D + p`.
pub fn combined_error(p: NoiseLevel, d: Distortion) -> f64 {
    p.margin() * d.get() + p.get()
}

/// Odd sensor count nearest to `lambda / r`, ties going to the smaller one.
pub fn derive_sensor_count(lambda: Capacity, r: Rate) -> Result<u64> {
    let x = lambda.get() / r.get();
    if x < 1.0 {
        return Err(Error::NoSensorFits {
            lambda: lambda.get(),
            rate: r.get(),
        });
    }
    let lower = 2.0 * ((x - 1.0) / 2.0).floor() + 1.0;
    let upper = lower + 2.0;
    // e.g. 500 / (2/3) lands a hair above 750 in f64; still a tie.
    let slack = 1e-9 * x;
    let l = if (x - lower) <= (upper - x) + slack {
        lower
    } else {
        upper
    };
    Ok(l as u64)
}

/// One `(p, R, lambda)` configuration with its derived sensor count and
/// combined error under a given distortion model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AggregationPoint {
    pub p: NoiseLevel,
    pub r: Rate,
    pub lambda: Capacity,
    pub distortion: Distortion,
    pub l_sensors: u64,
    pub rho: f64,
}

impl AggregationPoint {
    pub fn new(
        p: NoiseLevel,
        r: Rate,
        lambda: Capacity,
        model: &dyn DistortionModel,
    ) -> Result<Self> {
        let distortion = model.d_of_rate(r)?;
        let l_sensors = derive_sensor_count(lambda, r)?;
        Ok(Self {
            p,
            r,
            lambda,
            distortion,
            l_sensors,
            rho: combined_error(p, distortion),
        })
    }

    pub fn asymptotic_inputs(&self) -> AsymptoticInputs {
        AsymptoticInputs::new(self.p, self.r, self.lambda, self.distortion)
    }

    pub fn exact_error(&self) -> f64 {
        collective_error_exact(self.rho, self.l_sensors).expect("validated point")
    }

    pub fn ln_exact_error(&self) -> f64 {
        ln_collective_error_exact(self.rho, self.l_sensors).expect("validated point")
    }
}

/// Standardized majority-vote margin used by the Gaussian approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticInputs {
    /// `(1 - 2p)(1 - 2D)`, equal to `1 - 2 rho`.
    pub alpha: f64,
    /// `alpha sqrt(lambda) / sqrt(R (1 - alpha)(1 + alpha))`; infinite at `alpha = 1`.
    pub nu: f64,
}

impl AsymptoticInputs {
    pub fn new(p: NoiseLevel, r: Rate, lambda: Capacity, d: Distortion) -> Self {
        let alpha = p.margin() * (1.0 - 2.0 * d.get());
        let nu = if alpha >= 1.0 {
            f64::INFINITY
        } else {
            alpha * lambda.get().sqrt() / (r.get() * (1.0 - alpha) * (1.0 + alpha)).sqrt()
        };
        Self { alpha, nu }
    }
}

fn check_tail_args(rho: f64, l: u64) -> Result<()> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::domain("combined error rho", rho, "[0, 1]"));
    }
    if l == 0 || l.is_multiple_of(2) {
        return Err(Error::EvenSensorCount(l));
    }
    Ok(())
}

/// Natural log of the majority-vote error `P[Bin(l, rho) >= (l+1)/2]`.
///
/// Terms are accumulated relative to the largest one in the tail, so the
/// result stays finite far below the smallest representable `f64`.
pub fn ln_collective_error_exact(rho: f64, l: u64) -> Result<f64> {
    check_tail_args(rho, l)?;
    if rho == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if rho == 1.0 {
        return Ok(0.0);
    }
    if rho == 0.5 {
        return Ok(-LN_2);
    }

    let k_min = l.div_ceil(2);
    let mode = (((l + 1) as f64) * rho).floor() as u64;
    let k0 = mode.clamp(k_min, l);
    let ln_peak = special::ln_binomial_pmf(l, k0, rho);

    const EPS: f64 = 1e-17;
    let odds = rho / (1.0 - rho);
    let mut sum = 1.0;

    // pmf(k+1)/pmf(k) = (l-k)/(k+1) * odds, decreasing in k.
    let mut t = 1.0;
    for k in k0..l {
        let q = (l - k) as f64 / (k + 1) as f64 * odds;
        t *= q;
        sum += t;
        if q < 1.0 && t < EPS * sum * (1.0 - q) {
            break;
        }
    }

    // pmf(k-1)/pmf(k) = k/(l-k+1) / odds, decreasing as k falls.
    let mut t = 1.0;
    let mut k = k0;
    while k > k_min {
        let q = k as f64 / (l - k + 1) as f64 / odds;
        t *= q;
        sum += t;
        if q < 1.0 && t < EPS * sum * (1.0 - q) {
            break;
        }
        k -= 1;
    }

    Ok(ln_peak + sum.ln())
}

/// Majority-vote error probability `sum_{k > l/2} C(l,k) rho^k (1-rho)^(l-k)`.
pub fn collective_error_exact(rho: f64, l: u64) -> Result<f64> {
    if rho == 0.5 {
        check_tail_args(rho, l)?;
        return Ok(0.5);
    }
    ln_collective_error_exact(rho, l).map(f64::exp)
}

/// Gaussian approximation `erfc(nu / sqrt 2) / 2` of the collective error,
/// evaluated at the continuous sensor count `lambda / R`.
pub fn collective_error_asymptotic(point: &AggregationPoint) -> f64 {
    let inputs = point.asymptotic_inputs();
    if inputs.alpha <= 0.0 {
        0.5
    } else if inputs.alpha >= 1.0 {
        0.0
    } else {
        0.5 * special::erfc(inputs.nu / SQRT_2)
    }
}

/// Natural log of [`collective_error_asymptotic`], finite where the value
/// itself underflows.
pub fn ln_collective_error_asymptotic(point: &AggregationPoint) -> f64 {
    let inputs = point.asymptotic_inputs();
    if inputs.alpha <= 0.0 {
        -LN_2
    } else if inputs.alpha >= 1.0 {
        f64::NEG_INFINITY
    } else {
        -LN_2 + special::ln_erfc(inputs.nu / SQRT_2)
    }
}

/// Decay-rate formula for an explicit distortion value. Infinite when the
/// pipeline is error free (`alpha = 1`).
pub fn decay_rate_from_distortion(p: NoiseLevel, r: Rate, d: Distortion) -> f64 {
    let alpha = p.margin() * (1.0 - 2.0 * d.get());
    if alpha >= 1.0 {
        return f64::INFINITY;
    }
    alpha * alpha / (2.0 * r.get() * (1.0 - alpha) * (1.0 + alpha))
}

/// Exponential decay rate `I_p(R) = -lim (1/lambda) ln p_e` of the Gaussian
/// approximation: `alpha^2 / (2R(1 - alpha)(1 + alpha))`.
pub fn decay_rate(p: NoiseLevel, r: Rate, model: &dyn DistortionModel) -> Result<f64> {
    Ok(decay_rate_from_distortion(p, r, model.d_of_rate(r)?))
}

/// `R -> 0` limit of the decay rate under the Shannon distortion-rate
/// function: `(1 - 2p)^2 ln 2`.
pub fn decay_rate_limit_zero(p: NoiseLevel) -> f64 {
    let m = p.margin();
    m * m * LN_2
}

/// Collective error of a lossy configuration relative to the lossless one at
/// the same capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioPoint {
    pub p: NoiseLevel,
    /// `p_e(p, R; lambda) / p_e(p, 1; lambda)`; may under/overflow, see `ln_ratio`.
    pub ratio: f64,
    pub ln_ratio: f64,
}

impl RatioPoint {
    pub fn log10_ratio(&self) -> f64 {
        self.ln_ratio / std::f64::consts::LN_10
    }
}

/// `ln p_e(p, R; lambda) - ln p_e(p, 1; lambda)` from exact binomial tails.
pub fn ln_error_ratio(
    p: NoiseLevel,
    r: Rate,
    lambda: Capacity,
    model: &dyn DistortionModel,
) -> Result<f64> {
    let lossy = AggregationPoint::new(p, r, lambda, model)?;
    let lossless = AggregationPoint::new(p, Rate::ONE, lambda, model)?;
    let ln_ref = lossless.ln_exact_error();
    if ln_ref == f64::NEG_INFINITY {
        return Err(Error::Degenerate(format!(
            "reference error p_e(p={}, R=1) is zero",
            p.get()
        )));
    }
    Ok(lossy.ln_exact_error() - ln_ref)
}

/// Error ratio against lossless aggregation for every noise level of a grid.
pub fn error_ratio_curve(
    p_grid: &[NoiseLevel],
    r: Rate,
    lambda: Capacity,
    model: &dyn DistortionModel,
) -> Result<Vec<RatioPoint>> {
    p_grid
        .iter()
        .map(|&p| {
            let ln_ratio = ln_error_ratio(p, r, lambda, model)?;
            Ok(RatioPoint {
                p,
                ratio: ln_ratio.exp(),
                ln_ratio,
            })
        })
        .collect()
}

/// Scaling exponent between two capacities:
/// `log[p_e(R; l2)/p_e(1; l2)] / log[p_e(R; l1)/p_e(1; l1)]`.
///
/// Base free. Approaches `l2 / l1` as `l1` grows.
pub fn fit_scaling_beta(
    p: NoiseLevel,
    r: Rate,
    lambda1: Capacity,
    lambda2: Capacity,
    model: &dyn DistortionModel,
) -> Result<f64> {
    if lambda2 < lambda1 {
        return Err(Error::domain("lambda2", lambda2.get(), "[lambda1, inf)"));
    }
    let base = ln_error_ratio(p, r, lambda1, model)?;
    let scaled = ln_error_ratio(p, r, lambda2, model)?;
    if base == 0.0 || !base.is_finite() || !scaled.is_finite() {
        return Err(Error::Degenerate(format!(
            "log error ratios {base} and {scaled} do not define a scaling exponent"
        )));
    }
    Ok(scaled / base)
}
