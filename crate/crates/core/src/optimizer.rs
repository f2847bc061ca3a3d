//! Optimal and pessimistic aggregation rates, and the noise thresholds where
//! the preferred strategy changes.
//!
//! All searches work on the decay rate `I_p(R)`. The `R -> 0` end of the
//! domain is an open limit; it is represented by the sentinel rate `0` and
//! evaluated with [`decay_rate_limit_zero`].

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{decay_rate, decay_rate_from_distortion, decay_rate_limit_zero};
use crate::distortion::DistortionModel;
use crate::error::{Error, Result};
use crate::search::{bisect, bisect_predicate, golden_section_max};
use crate::types::{Distortion, NoiseLevel, Rate};

/// Points in the coarse rate grid preceding golden-section refinement.
pub const COARSE_GRID_POINTS: usize = 1000;
/// Final bracket width of the rate refinement.
pub const RATE_TOL: f64 = 1e-6;
/// Optimal rates below this count as vanished when locating `p0`.
pub const VANISHED_RATE: f64 = 1e-3;
pub const P0_TOL: f64 = 1e-4;
pub const P1_TOL: f64 = 1e-10;
pub const PEAK_GRID_STEP: f64 = 1e-3;
pub const PEAK_TOL: f64 = 1e-4;
/// Relative gap under which `I_p(0)` and `I_p(1)` are treated as tied.
pub const TIE_REL_TOL: f64 = 1e-5;

/// Smallest rate probed when the model extends down to `R -> 0`.
const RATE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalRateResult {
    pub p: NoiseLevel,
    /// Maximizer of `I_p(R)`; `0` encodes the `R -> 0` limit.
    pub r_star: f64,
    pub i_at_star: f64,
    pub i_at_one: f64,
    /// `None` for models without an `R -> 0` limit.
    pub i_at_zero: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainRow {
    pub p: NoiseLevel,
    /// `I_p(R*) - I_p(1)`.
    pub gain_star: f64,
    /// `I_p(0) - I_p(1)`.
    pub gain_zero: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverTolerances {
    pub p1_tol: f64,
    pub p0_tol: f64,
    pub vanished_rate: f64,
    pub rate_tol: f64,
    pub coarse_grid_points: usize,
    pub peak_grid_step: f64,
    pub peak_tol: f64,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        Self {
            p1_tol: P1_TOL,
            p0_tol: P0_TOL,
            vanished_rate: VANISHED_RATE,
            rate_tol: RATE_TOL,
            coarse_grid_points: COARSE_GRID_POINTS,
            peak_grid_step: PEAK_GRID_STEP,
            peak_tol: PEAK_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdReport {
    /// Noise where the `R -> 0` and `R = 1` decay rates cross.
    pub p1: f64,
    pub p1_closed_form: f64,
    /// Noise above which the optimal rate vanishes.
    pub p0: f64,
    /// Noise of the largest gain `I_p(R*) - I_p(1)`.
    pub p_star: f64,
    pub tolerances: SolverTolerances,
}

/// Coarse rate grid with the model's distortions precomputed, so the decay
/// rate at every grid point costs a few flops for any `p`.
#[derive(Debug, Clone)]
pub struct RateProfile<'m> {
    model: &'m dyn DistortionModel,
    grid: Vec<(Rate, Distortion)>,
    floor: f64,
    has_zero_limit: bool,
}

impl<'m> RateProfile<'m> {
    pub fn new(model: &'m dyn DistortionModel) -> Result<Self> {
        Self::with_points(model, COARSE_GRID_POINTS)
    }

    pub fn with_points(model: &'m dyn DistortionModel, points: usize) -> Result<Self> {
        let (lo, hi) = model.rate_domain();
        if hi != 1.0 {
            return Err(Error::Unsupported {
                model: model.id().to_owned(),
                what: "rate optimization without the lossless rate R = 1",
            });
        }
        let rates: Vec<f64> = if lo == 0.0 {
            (1..=points).map(|i| i as f64 / points as f64).collect()
        } else {
            (0..points)
                .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
                .collect()
        };
        let grid = rates
            .into_iter()
            .map(|r| {
                let r = Rate::new(r)?;
                Ok((r, model.d_of_rate(r)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            model,
            grid,
            floor: if lo == 0.0 { RATE_FLOOR } else { lo },
            has_zero_limit: model.has_zero_rate_limit(),
        })
    }

    pub fn model(&self) -> &'m dyn DistortionModel {
        self.model
    }

    fn zero_limit(&self, p: NoiseLevel) -> Option<f64> {
        self.has_zero_limit.then(|| decay_rate_limit_zero(p))
    }

    fn require_zero_limit(&self, what: &'static str) -> Result<()> {
        if self.has_zero_limit {
            Ok(())
        } else {
            Err(Error::Unsupported {
                model: self.model.id().to_owned(),
                what,
            })
        }
    }

    fn decay_at(&self, p: NoiseLevel, r: f64) -> f64 {
        let r = Rate(r);
        // grid-aligned queries never fail for a model that built the profile
        decay_rate(p, r, self.model).unwrap_or(f64::NAN)
    }

    fn grid_rates(&self, p: NoiseLevel) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grid
            .iter()
            .map(move |&(r, d)| (r.get(), decay_rate_from_distortion(p, r, d)))
    }

    /// Maximizer of `I_p(R)`: coarse grid, then golden-section refinement
    /// around the best grid point.
    pub fn optimal_rate(&self, p: NoiseLevel) -> OptimalRateResult {
        let i_at_one = decay_rate_from_distortion(p, Rate::ONE, self.grid[self.grid.len() - 1].1);
        let i_at_zero = self.zero_limit(p);

        if i_at_one.is_infinite() {
            return OptimalRateResult {
                p,
                r_star: 1.0,
                i_at_star: i_at_one,
                i_at_one,
                i_at_zero,
            };
        }

        let (best_idx, _) =
            self.grid_rates(p)
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (i, (_, v))| {
                        if v > acc.1 {
                            (i, v)
                        } else {
                            acc
                        }
                    },
                );
        let lo = if best_idx == 0 {
            self.floor
        } else {
            self.grid[best_idx - 1].0.get()
        };
        let hi = self.grid[(best_idx + 1).min(self.grid.len() - 1)].0.get();
        let (mut r_star, mut i_at_star) =
            golden_section_max(|r| self.decay_at(p, r), lo, hi, RATE_TOL);

        let (grid_r, grid_d) = self.grid[best_idx];
        let grid_best = decay_rate_from_distortion(p, grid_r, grid_d);
        if grid_best > i_at_star {
            r_star = grid_r.get();
            i_at_star = grid_best;
        }

        if let Some(i0) = i_at_zero {
            // The supremum sits in the open limit when nothing beats it, or
            // when refinement ran into the floor of the rate domain.
            if i0 >= i_at_star || r_star <= RATE_TOL {
                r_star = 0.0;
                i_at_star = i0;
            }
        }

        OptimalRateResult {
            p,
            r_star,
            i_at_star,
            i_at_one,
            i_at_zero,
        }
    }

    /// Minimizer of `I_p(R)` over `{R -> 0} ∪ (0, 1]`: `0` or `1`, with ties
    /// reported as `1`. Fails if the coarse grid finds an interior value below
    /// both boundary values.
    pub fn pessimistic_rate(&self, p: NoiseLevel) -> Result<f64> {
        self.require_zero_limit("the R -> 0 limit")?;
        let i0 = decay_rate_limit_zero(p);
        let i1 = decay_rate_from_distortion(p, Rate::ONE, self.grid[self.grid.len() - 1].1);
        let boundary_min = i0.min(i1);
        let interior_min = self
            .grid_rates(p)
            .map(|(_, v)| v)
            .fold(f64::INFINITY, f64::min);
        if interior_min < boundary_min - 1e-9 {
            return Err(Error::NonConvergence(format!(
                "interior decay rate {interior_min} below boundary minimum {boundary_min} at p = {}",
                p.get()
            )));
        }
        if (i0 - i1).abs() <= TIE_REL_TOL * i0.max(i1) || i0 >= i1 {
            Ok(1.0)
        } else {
            Ok(0.0)
        }
    }

    pub fn gain_row(&self, opt: &OptimalRateResult) -> GainRow {
        GainRow {
            p: opt.p,
            gain_star: opt.i_at_star - opt.i_at_one,
            gain_zero: opt.i_at_zero.map(|i0| i0 - opt.i_at_one),
        }
    }

    /// Lowest noise at which the optimal rate falls below `vanished_rate`.
    pub fn critical_p0_with(&self, vanished_rate: f64) -> Result<f64> {
        self.require_zero_limit("locating the vanishing point of R*")?;
        let vanished = |p: f64| self.optimal_rate(NoiseLevel(p)).r_star < vanished_rate;
        let lo = threshold_p1()?;
        let hi = 0.49;
        if vanished(lo) || !vanished(hi) {
            return Err(Error::NonConvergence(format!(
                "R* does not cross {vanished_rate} on [{lo}, {hi}]"
            )));
        }
        let p0 = bisect_predicate(vanished, lo, hi, P0_TOL);

        let below = self.optimal_rate(NoiseLevel(p0 - 2.0 * P0_TOL)).r_star;
        let above = self.optimal_rate(NoiseLevel(p0 + 2.0 * P0_TOL)).r_star;
        if !(below >= above && below >= vanished_rate && above < vanished_rate) {
            return Err(Error::NonConvergence(format!(
                "R* not monotone near p0 = {p0}: R*(below) = {below}, R*(above) = {above}"
            )));
        }
        Ok(p0)
    }

    pub fn critical_p0(&self) -> Result<f64> {
        self.critical_p0_with(VANISHED_RATE)
    }

    /// Noise level in `(p1, 1/2)` maximizing `I_p(R*) - I_p(1)`.
    pub fn peak_gain_noise(&self) -> Result<f64> {
        self.require_zero_limit("the gain curve")?;
        let p1 = threshold_p1()?;
        let gain = |p: f64| {
            let opt = self.optimal_rate(NoiseLevel(p));
            opt.i_at_star - opt.i_at_one
        };
        let grid: Vec<f64> = (1..)
            .map(|k| p1 + k as f64 * PEAK_GRID_STEP)
            .take_while(|&p| p < 0.5)
            .collect();
        let gains: Vec<f64> = grid.par_iter().map(|&p| gain(p)).collect();
        let best = gains
            .iter()
            .enumerate()
            .fold(0, |b, (i, &g)| if g > gains[b] { i } else { b });
        let lo = if best == 0 { p1 } else { grid[best - 1] };
        let hi = grid.get(best + 1).copied().unwrap_or(0.5 - 1e-9);
        let (p_star, _) = golden_section_max(gain, lo, hi, PEAK_TOL);
        Ok(p_star)
    }
}

/// Optimal rate for a single noise level.
pub fn optimal_rate(p: NoiseLevel, model: &dyn DistortionModel) -> Result<OptimalRateResult> {
    Ok(RateProfile::new(model)?.optimal_rate(p))
}

pub fn pessimistic_rate(p: NoiseLevel, model: &dyn DistortionModel) -> Result<f64> {
    RateProfile::new(model)?.pessimistic_rate(p)
}

pub fn critical_p0(model: &dyn DistortionModel) -> Result<f64> {
    RateProfile::new(model)?.critical_p0()
}

pub fn peak_gain_noise(model: &dyn DistortionModel) -> Result<f64> {
    RateProfile::new(model)?.peak_gain_noise()
}

/// Closed-form root of `ln 2 = 1 / (2 (1 - (1 - 2p)^2))`.
pub fn threshold_p1_closed_form() -> f64 {
    (1.0 - (1.0 - 1.0 / (2.0 * std::f64::consts::LN_2)).sqrt()) / 2.0
}

/// Noise at which `(1-2p)^2 ln 2` (the `R -> 0` decay rate) equals the
/// lossless decay rate `(1-2p)^2 / (2(1 - (1-2p)^2))`, solved by bisection.
pub fn threshold_p1() -> Result<f64> {
    // The common factor (1-2p)^2 is positive on (0, 1/2) and divides out.
    let excess = |p: f64| {
        let m = 1.0 - 2.0 * p;
        std::f64::consts::LN_2 - 1.0 / (2.0 * (1.0 - m * m))
    };
    bisect(excess, 1e-6, 0.5 - 1e-6, P1_TOL)
}

pub fn threshold_report(model: &dyn DistortionModel) -> Result<ThresholdReport> {
    let profile = RateProfile::new(model)?;
    Ok(ThresholdReport {
        p1: threshold_p1()?,
        p1_closed_form: threshold_p1_closed_form(),
        p0: profile.critical_p0()?,
        p_star: profile.peak_gain_noise()?,
        tolerances: SolverTolerances::default(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    /// `p = 0`: the lossless pipeline is error free and its decay rate infinite.
    DegenerateNoiseless,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepEntry {
    pub optimum: OptimalRateResult,
    pub r_dagger: Option<f64>,
    pub gain: GainRow,
    pub status: RowStatus,
}

/// One row per noise level with everything needed to plot optimal rates and
/// decay-rate curves. Rows come back in grid order.
pub fn sweep_fig2_fig3(
    p_grid: &[NoiseLevel],
    model: &dyn DistortionModel,
) -> Result<Vec<SweepEntry>> {
    let profile = RateProfile::new(model)?;
    p_grid
        .par_iter()
        .map(|&p| {
            let optimum = profile.optimal_rate(p);
            let status = if optimum.i_at_one.is_infinite() {
                RowStatus::DegenerateNoiseless
            } else {
                RowStatus::Ok
            };
            let r_dagger = if profile.has_zero_limit && status == RowStatus::Ok {
                Some(profile.pessimistic_rate(p)?)
            } else {
                None
            };
            Ok(SweepEntry {
                optimum,
                r_dagger,
                gain: profile.gain_row(&optimum),
                status,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distortion::{table_model, DistortionTable, ShannonModel};

    fn p(v: f64) -> NoiseLevel {
        NoiseLevel::new(v).unwrap()
    }

    #[test]
    fn p1_matches_closed_form() {
        let p1 = threshold_p1().unwrap();
        assert!((p1 - threshold_p1_closed_form()).abs() < 1e-9);
        assert!((p1 - 0.236_062_280_284_004_17).abs() < 1e-7);
        assert!((p1 - 0.236).abs() < 5e-4);
    }

    #[test]
    fn p1_equalizes_boundary_rates() {
        let p1 = p(threshold_p1().unwrap());
        let i1 = decay_rate(p1, Rate::ONE, &ShannonModel).unwrap();
        assert!((decay_rate_limit_zero(p1) - i1).abs() < 1e-9);
    }

    #[test]
    fn optimal_rate_regimes() {
        let profile = RateProfile::new(&ShannonModel).unwrap();
        assert_eq!(profile.optimal_rate(p(0.01)).r_star, 1.0);
        let high = profile.optimal_rate(p(0.4));
        assert_eq!(high.r_star, 0.0);
        assert_eq!(Some(high.i_at_star), high.i_at_zero);
        let mid = profile.optimal_rate(p(0.27));
        assert!(mid.r_star > 0.0 && mid.r_star < 1.0, "{mid:?}");
        assert!(mid.i_at_star > mid.i_at_one && mid.i_at_star > mid.i_at_zero.unwrap());
    }

    #[test]
    fn optimal_rate_noiseless_is_lossless() {
        let opt = optimal_rate(p(0.0), &ShannonModel).unwrap();
        assert_eq!(opt.r_star, 1.0);
        assert!(opt.i_at_star.is_infinite());
    }

    #[test]
    fn pessimistic_rate_examples() {
        let profile = RateProfile::new(&ShannonModel).unwrap();
        assert_eq!(profile.pessimistic_rate(p(0.1)).unwrap(), 0.0);
        assert_eq!(profile.pessimistic_rate(p(0.3)).unwrap(), 1.0);
        assert_eq!(profile.pessimistic_rate(p(0.23606)).unwrap(), 1.0);
        let p1 = threshold_p1().unwrap();
        assert_eq!(profile.pessimistic_rate(p(p1)).unwrap(), 1.0);
    }

    #[test]
    fn table_models_optimize_over_their_domain() {
        let table = DistortionTable::new(&[(0.25, 0.3), (0.5, 0.2), (1.0, 0.0)]).unwrap();
        let model = table_model(table);
        let opt = optimal_rate(p(0.3), &model).unwrap();
        assert!(opt.i_at_zero.is_none());
        assert!((0.25..=1.0).contains(&opt.r_star));
        assert!(opt.i_at_star >= opt.i_at_one);
        assert!(matches!(
            critical_p0(&model),
            Err(Error::Unsupported { .. })
        ));
        assert!(matches!(
            pessimistic_rate(p(0.3), &model),
            Err(Error::Unsupported { .. })
        ));

        let partial = table_model(DistortionTable::new(&[(0.25, 0.3), (0.5, 0.2)]).unwrap());
        assert!(matches!(
            optimal_rate(p(0.3), &partial),
            Err(Error::Unsupported { .. })
        ));
    }

    #[test]
    fn sweep_flags_noiseless_row() {
        let rows = sweep_fig2_fig3(&[p(0.0), p(0.1), p(0.3), p(0.4)], &ShannonModel).unwrap();
        assert_eq!(rows[0].status, RowStatus::DegenerateNoiseless);
        assert!(rows[0].r_dagger.is_none());
        let row = &rows[1];
        assert!((row.optimum.i_at_one - 0.888_888_888_888_889).abs() < 1e-12);
        assert!((row.optimum.i_at_zero.unwrap() - 0.443_614_195_558_365).abs() < 1e-12);
        assert!(rows[2].optimum.i_at_zero.unwrap() > rows[2].optimum.i_at_one);
        assert_eq!(rows[3].optimum.r_star, 0.0);
        assert_eq!(Some(rows[3].gain.gain_star), rows[3].gain.gain_zero);
    }
}
