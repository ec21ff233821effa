//! Free-space monostatic link: diffraction loss, blackbody background and
//! the resulting MSE bound as a function of wavelength.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::estimation::{c_ase_from_c2, mse_bound};
use crate::numerics::golden_section;
use crate::qre::{modes_from_bandwidth, taylor_c2};
use crate::scenario::SensingScenario;

/// Planck constant, J s (CODATA 2018, exact).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Boltzmann constant, J/K (CODATA 2018, exact).
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const CONSTANTS_VERSION: &str = "CODATA 2018";

/// Mean blackbody photon number per mode.
pub fn planck_occupancy(lambda_m: f64, t0_k: f64) -> Result<f64> {
    if !(lambda_m > 0.0) || !(t0_k > 0.0) {
        return Err(domain("wavelength and temperature must be positive"));
    }
    let x = PLANCK * SPEED_OF_LIGHT / (lambda_m * BOLTZMANN * t0_k);
    if x > 700.0 {
        return Ok(0.0);
    }
    Ok(1.0 / x.exp_m1())
}

pub fn frequency_from_wavelength(lambda_m: f64) -> f64 {
    SPEED_OF_LIGHT / lambda_m
}

pub fn wavelength_from_frequency(f_hz: f64) -> f64 {
    SPEED_OF_LIGHT / f_hz
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransmissivityModel {
    /// `eta = D`, valid only while `D << 1`.
    FarField,
    /// Fundamental-mode coupling between Gaussian apertures,
    /// `eta = (1 + 2D - sqrt(1 + 4D)) / (2D)`.
    GaussianAperture,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "eta_max")]
pub enum EtaPolicy {
    Error,
    Clamp(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub range_m: f64,
    pub r_t: f64,
    pub r_target: f64,
    pub t0_k: f64,
    pub area_factor: f64,
    pub eta_policy: EtaPolicy,
    pub model: TransmissivityModel,
}

impl LinkGeometry {
    /// Default radii, 300 K background, Gaussian-aperture coupling.
    pub fn new(range_m: f64) -> Self {
        LinkGeometry {
            range_m,
            r_t: 0.04,
            r_target: 0.10,
            t0_k: 300.0,
            area_factor: 1.0,
            eta_policy: EtaPolicy::Error,
            model: TransmissivityModel::GaussianAperture,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("range", self.range_m),
            ("r_t", self.r_t),
            ("r_target", self.r_target),
            ("t0", self.t0_k),
            ("area_factor", self.area_factor),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(domain(format!("{name} = {v} must be positive")));
            }
        }
        if let EtaPolicy::Clamp(m) = self.eta_policy {
            if !(m > 0.0 && m < 1.0) {
                return Err(domain(format!("clamp value {m} must lie in (0, 1)")));
            }
        }
        Ok(())
    }

    /// `area_factor A_t A_T / (lambda L)^2`.
    pub fn fresnel_product(&self, lambda_m: f64) -> f64 {
        let at = std::f64::consts::PI * self.r_t * self.r_t;
        let atg = std::f64::consts::PI * self.r_target * self.r_target;
        self.area_factor * at * atg / (lambda_m * self.range_m).powi(2)
    }
}

/// One-way transmissivity after applying the geometry's policy.
pub fn geometric_transmissivity(lambda_m: f64, g: &LinkGeometry) -> Result<f64> {
    g.validate()?;
    if !(lambda_m > 0.0) {
        return Err(domain("wavelength must be positive"));
    }
    let d = g.fresnel_product(lambda_m);
    let eta = match g.model {
        TransmissivityModel::FarField => d,
        TransmissivityModel::GaussianAperture => 2.0 * d / (1.0 + 2.0 * d + (1.0 + 4.0 * d).sqrt()),
    };
    if eta > 1.0 {
        return match g.eta_policy {
            EtaPolicy::Error => Err(Error::NearField {
                eta,
                wavelength_m: lambda_m,
                range_m: g.range_m,
            }),
            EtaPolicy::Clamp(m) => Ok(m),
        };
    }
    if let EtaPolicy::Clamp(m) = g.eta_policy {
        return Ok(eta.min(m));
    }
    Ok(eta)
}

/// Link quantities at one wavelength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkPoint {
    pub lambda_m: f64,
    pub eta: f64,
    pub nbar_b: f64,
    pub c2: f64,
    pub c_ase: f64,
}

pub fn c_ase_at(lambda_m: f64, g: &LinkGeometry) -> Result<LinkPoint> {
    let eta = geometric_transmissivity(lambda_m, g)?;
    let nb = planck_occupancy(lambda_m, g.t0_k)?;
    let s = SensingScenario::symmetric(eta, nb)?;
    let c2 = taylor_c2(&s)?;
    let c_ase = c_ase_from_c2(&s.effective(), c2)?;
    Ok(LinkPoint {
        lambda_m,
        eta,
        nbar_b: nb,
        c2,
        c_ase,
    })
}

/// Covertness level, source bandwidth and probing time for `B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSettings {
    pub epsilon: f64,
    pub bandwidth_hz: f64,
    pub time_s: f64,
}

impl Default for BoundSettings {
    fn default() -> Self {
        BoundSettings {
            epsilon: 1e-3,
            bandwidth_hz: 3e12,
            time_s: 1.0,
        }
    }
}

impl BoundSettings {
    pub fn modes(&self) -> Result<u64> {
        modes_from_bandwidth(self.bandwidth_hz, self.time_s)
    }

    pub fn bound(&self, c_ase: f64) -> Result<f64> {
        mse_bound(c_ase, self.epsilon, self.modes()?)
    }
}

/// `B = c_ASE / (epsilon sqrt(floor(W T)))` at a fixed wavelength.
pub fn mse_bound_b(lambda_m: f64, g: &LinkGeometry, bs: &BoundSettings) -> Result<f64> {
    bs.bound(c_ase_at(lambda_m, g)?.c_ase)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub f_hz: f64,
    pub lambda_m: f64,
    /// Transmissivity before any policy is applied.
    pub eta: f64,
    pub nbar_b: f64,
    pub c_ase: Option<f64>,
    #[serde(rename = "B")]
    pub b: Option<f64>,
    /// Reason the row has no `c_ase`.
    pub flag: Option<String>,
}

pub fn sweep_frequency(
    f_min: f64,
    f_max: f64,
    points: usize,
    g: &LinkGeometry,
    bs: &BoundSettings,
) -> Result<Vec<SweepRow>> {
    g.validate()?;
    if !(f_min > 0.0 && f_min < f_max) || !f_max.is_finite() {
        return Err(domain(format!(
            "need 0 < f_min < f_max, got [{f_min}, {f_max}]"
        )));
    }
    if points < 2 {
        return Err(domain("a sweep needs at least two points"));
    }
    bs.modes()?;
    let step = (f_max - f_min) / (points - 1) as f64;
    let rows: Vec<SweepRow> = (0..points)
        .into_par_iter()
        .map(|k| {
            let f = if k == points - 1 {
                f_max
            } else {
                f_min + k as f64 * step
            };
            let lambda = wavelength_from_frequency(f);
            let raw = LinkGeometry {
                eta_policy: EtaPolicy::Error,
                ..*g
            };
            let eta = match geometric_transmissivity(lambda, &raw) {
                Ok(e) => e,
                Err(Error::NearField { eta, .. }) => eta,
                Err(_) => f64::NAN,
            };
            let nbar_b = planck_occupancy(lambda, g.t0_k).unwrap_or(f64::NAN);
            match c_ase_at(lambda, g).and_then(|p| Ok((p.c_ase, bs.bound(p.c_ase)?))) {
                Ok((c, b)) => SweepRow {
                    f_hz: f,
                    lambda_m: lambda,
                    eta,
                    nbar_b,
                    c_ase: Some(c),
                    b: Some(b),
                    flag: None,
                },
                Err(e) => SweepRow {
                    f_hz: f,
                    lambda_m: lambda,
                    eta,
                    nbar_b,
                    c_ase: None,
                    b: None,
                    flag: Some(e.to_string()),
                },
            }
        })
        .collect();
    if rows.iter().all(|r| r.c_ase.is_none()) {
        return Err(Error::EmptySweep(format!(
            "no valid point in [{f_min}, {f_max}] Hz at range {} m",
            g.range_m
        )));
    }
    Ok(rows)
}

/// Indices of strict local minima of `c_ase` among consecutive valid rows.
pub fn local_minima(rows: &[SweepRow]) -> Vec<usize> {
    let valid: Vec<(usize, f64)> = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.c_ase.map(|c| (i, c)))
        .collect();
    let mut out = Vec::new();
    for k in 0..valid.len() {
        let left = if k > 0 { Some(valid[k - 1].1) } else { None };
        let right = valid.get(k + 1).map(|v| v.1);
        let c = valid[k].1;
        if left.is_none_or(|l| c < l) && right.is_none_or(|r| c < r) {
            out.push(valid[k].0);
        }
    }
    out
}

/// True when the sweep has exactly one local minimum and it is not at an
/// end of the valid region.
pub fn has_unique_interior_minimum(rows: &[SweepRow]) -> bool {
    let mins = local_minima(rows);
    if mins.len() != 1 {
        return false;
    }
    let first = rows.iter().position(|r| r.c_ase.is_some());
    let last = rows.iter().rposition(|r| r.c_ase.is_some());
    Some(mins[0]) != first && Some(mins[0]) != last
}

/// Frequency band and resolution of the plotted `c_ASE(f)` curves.
pub const PLOT_BAND_HZ: (f64, f64) = (15e12, 100e12);
pub const PLOT_POINTS: usize = 300;
/// Mid- and long-wave infrared, m.
pub const IR_BAND_M: (f64, f64) = (3e-6, 15e-6);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimumCheck {
    pub range_m: f64,
    pub unique_interior_minimum: bool,
    pub minimum_f_hz: Option<f64>,
    pub minimum_lambda_m: Option<f64>,
    pub in_ir_band: bool,
    pub passed: bool,
}

/// Locates the minimum of `c_ASE(f)` over the plotted band.
pub fn minimum_check(g: &LinkGeometry, bs: &BoundSettings) -> Result<MinimumCheck> {
    let rows = sweep_frequency(PLOT_BAND_HZ.0, PLOT_BAND_HZ.1, PLOT_POINTS, g, bs)?;
    let unique = has_unique_interior_minimum(&rows);
    let best = local_minima(&rows).into_iter().min_by(|&a, &b| {
        rows[a]
            .c_ase
            .partial_cmp(&rows[b].c_ase)
            .expect("finite c_ase")
    });
    let lambda = best.map(|i| rows[i].lambda_m);
    let in_band = lambda.is_some_and(|l| l > IR_BAND_M.0 && l < IR_BAND_M.1);
    Ok(MinimumCheck {
        range_m: g.range_m,
        unique_interior_minimum: unique,
        minimum_f_hz: best.map(|i| rows[i].f_hz),
        minimum_lambda_m: lambda,
        in_ir_band: in_band,
        passed: unique && in_band,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavelengthOptimum {
    pub lambda_m: f64,
    pub c_ase: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub eta: f64,
    pub nbar_b: f64,
    /// The optimum sits at an end of the bracket.
    pub at_boundary: bool,
}

pub const COARSE_GRID: usize = 200;
/// Golden-section tolerance on the wavelength, m.
pub const LAMBDA_TOL: f64 = 1e-9;

/// Minimizes `c_ASE(lambda)` on `[lambda_lo, lambda_hi]`.
pub fn optimize_wavelength(
    g: &LinkGeometry,
    lambda_lo: f64,
    lambda_hi: f64,
    bs: &BoundSettings,
) -> Result<WavelengthOptimum> {
    g.validate()?;
    if !(lambda_lo > 0.0 && lambda_lo < lambda_hi) {
        return Err(domain(format!(
            "invalid wavelength bracket [{lambda_lo}, {lambda_hi}]"
        )));
    }
    let step = (lambda_hi - lambda_lo) / (COARSE_GRID - 1) as f64;
    let grid: Vec<f64> = (0..COARSE_GRID)
        .map(|k| {
            if k == COARSE_GRID - 1 {
                lambda_hi
            } else {
                lambda_lo + k as f64 * step
            }
        })
        .collect();
    let values: Vec<Option<f64>> = grid
        .par_iter()
        .map(|&l| c_ase_at(l, g).ok().map(|p| p.c_ase))
        .collect();
    let best = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|c| (i, c)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| {
            Error::EmptySweep(format!(
                "no valid wavelength in [{lambda_lo}, {lambda_hi}] m at range {} m",
                g.range_m
            ))
        })?;
    let i = best.0;
    let lo_i = if i > 0 && values[i - 1].is_some() {
        i - 1
    } else {
        i
    };
    let hi_i = if i + 1 < grid.len() && values[i + 1].is_some() {
        i + 1
    } else {
        i
    };
    let (lambda, c_ase) = if lo_i == hi_i {
        (grid[i], best.1)
    } else {
        let m = golden_section(
            |l| Ok(c_ase_at(l, g)?.c_ase),
            grid[lo_i],
            grid[hi_i],
            LAMBDA_TOL,
        )?;
        if m.value <= best.1 {
            (m.x, m.value)
        } else {
            (grid[i], best.1)
        }
    };
    let p = c_ase_at(lambda, g)?;
    Ok(WavelengthOptimum {
        lambda_m: lambda,
        c_ase,
        b: bs.bound(c_ase)?,
        eta: p.eta,
        nbar_b: p.nbar_b,
        at_boundary: lo_i == i || hi_i == i,
    })
}

/// Bracket matching the 15-100 THz plot range.
pub const DEFAULT_BRACKET: (f64, f64) = (3.0e-6, 20.0e-6);

/// A published optimum or fixed-wavelength bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PublishedTarget {
    pub label: &'static str,
    pub range_m: f64,
    /// Wavelength held fixed; `None` means the optimum is searched.
    pub fixed_lambda_m: Option<f64>,
    pub expected_lambda_m: Option<f64>,
    pub expected_b: f64,
}

pub const PUBLISHED_TARGETS: [PublishedTarget; 5] = [
    PublishedTarget {
        label: "L=1km optimum",
        range_m: 1e3,
        fixed_lambda_m: None,
        expected_lambda_m: Some(9.40e-6),
        expected_b: 0.00322,
    },
    PublishedTarget {
        label: "L=3km optimum",
        range_m: 3e3,
        fixed_lambda_m: None,
        expected_lambda_m: Some(6.35e-6),
        expected_b: 0.09927,
    },
    PublishedTarget {
        label: "L=5km optimum",
        range_m: 5e3,
        fixed_lambda_m: None,
        expected_lambda_m: Some(5.38e-6),
        expected_b: 0.81438,
    },
    PublishedTarget {
        label: "L=1km lambda=8.7um",
        range_m: 1e3,
        fixed_lambda_m: Some(8.7e-6),
        expected_lambda_m: None,
        expected_b: 0.00327,
    },
    PublishedTarget {
        label: "L=1km lambda=3um",
        range_m: 1e3,
        fixed_lambda_m: Some(3.0e-6),
        expected_lambda_m: None,
        expected_b: 0.08423,
    },
];

pub const LAMBDA_MATCH_TOL: f64 = 0.05e-6;
pub const B_MATCH_REL_TOL: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convention {
    pub model: TransmissivityModel,
    pub area_factor: f64,
    pub eta_policy: EtaPolicy,
}

impl Convention {
    pub fn geometry(&self, range_m: f64) -> LinkGeometry {
        LinkGeometry {
            area_factor: self.area_factor,
            eta_policy: self.eta_policy,
            model: self.model,
            ..LinkGeometry::new(range_m)
        }
    }
}

/// Clamp level used for the far-field convention sweep.
pub const SWEEP_CLAMP: f64 = 0.999;

pub fn convention_grid() -> Vec<Convention> {
    let mut out = Vec::new();
    for model in [
        TransmissivityModel::GaussianAperture,
        TransmissivityModel::FarField,
    ] {
        for area_factor in [1.0, 0.5, 0.25] {
            for eta_policy in [EtaPolicy::Error, EtaPolicy::Clamp(SWEEP_CLAMP)] {
                out.push(Convention {
                    model,
                    area_factor,
                    eta_policy,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetResidual {
    pub label: String,
    pub lambda_m: Option<f64>,
    #[serde(rename = "B")]
    pub b: Option<f64>,
    pub expected_lambda_m: Option<f64>,
    pub expected_b: f64,
    pub d_lambda_m: Option<f64>,
    pub rel_d_b: Option<f64>,
    pub matched: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConventionReport {
    pub convention: Convention,
    pub residuals: Vec<TargetResidual>,
    pub all_matched: bool,
}

pub fn evaluate_target(t: &PublishedTarget, c: &Convention, bs: &BoundSettings) -> TargetResidual {
    let g = c.geometry(t.range_m);
    let outcome = match t.fixed_lambda_m {
        Some(l) => mse_bound_b(l, &g, bs).map(|b| (l, b)),
        None => optimize_wavelength(&g, DEFAULT_BRACKET.0, DEFAULT_BRACKET.1, bs)
            .map(|o| (o.lambda_m, o.b)),
    };
    match outcome {
        Ok((lambda, b)) => {
            let d_lambda = t.expected_lambda_m.map(|e| lambda - e);
            let rel = (b - t.expected_b) / t.expected_b;
            let matched = rel.abs() <= B_MATCH_REL_TOL
                && d_lambda.is_none_or(|d| d.abs() <= LAMBDA_MATCH_TOL);
            TargetResidual {
                label: t.label.to_string(),
                lambda_m: Some(lambda),
                b: Some(b),
                expected_lambda_m: t.expected_lambda_m,
                expected_b: t.expected_b,
                d_lambda_m: d_lambda,
                rel_d_b: Some(rel),
                matched,
                error: None,
            }
        }
        Err(e) => TargetResidual {
            label: t.label.to_string(),
            lambda_m: None,
            b: None,
            expected_lambda_m: t.expected_lambda_m,
            expected_b: t.expected_b,
            d_lambda_m: None,
            rel_d_b: None,
            matched: false,
            error: Some(e.to_string()),
        },
    }
}

/// Residuals of every convention against the published numbers.
pub fn convention_sweep(bs: &BoundSettings) -> Vec<ConventionReport> {
    convention_grid()
        .into_iter()
        .map(|c| {
            let residuals: Vec<TargetResidual> = PUBLISHED_TARGETS
                .iter()
                .map(|t| evaluate_target(t, &c, bs))
                .collect();
            let all_matched = residuals.iter().all(|r| r.matched);
            ConventionReport {
                convention: c,
                residuals,
                all_matched,
            }
        })
        .collect()
}
