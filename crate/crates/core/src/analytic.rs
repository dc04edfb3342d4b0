//! Closed-form load model of the typical cell.
//!
//! A Poisson–Voronoi cell of area `A` is replaced by a disk of the same area
//! centred on its BS. Under the high-SNR approximation `log2(1 + ξr^-α) ≈
//! log2(ξr^-α)` the disk load integrates to
//!
//! ```text
//! ρ(A) = K'·E1((2/α)·ln(ξ(π/A)^(α/2))),   K' = 2π·w·ln2·ξ^(2/α) / (α·B)
//! ```
//!
//! which is finite only for `A < π·ξ^(2/α)`. The printed constants of the
//! original derivation (`K'`, `K1`, `χ2`) carry extra density and SNR
//! factors; [`ConstantMode::PaperLiteral`] keeps them verbatim so the
//! discrepancy can be measured, [`ConstantMode::Rederived`] is the default.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkbudget::{NetworkParams, TrafficParams};
use crate::quad::{integrate_with_breaks, QuadOptions};
use crate::specfun::{
    barry_formula, e1_inverse, e1_unchecked, gamma_lower_inc, gamma_q, geller_ng_i1, geller_ng_i2,
    smallx_formula, ApproxMode,
};

/// Normalisation of the reduced-area density, `(343/15)·√(7/(2π))`.
pub fn tanemura_constant() -> f64 {
    343.0 / 15.0 * (7.0 / (2.0 * PI)).sqrt()
}

/// Shape parameter of the reduced-area gamma law.
pub const AREA_SHAPE: f64 = 3.5;

/// Largest tolerated probability mass of cells outside the high-SNR region
/// for mean-load integrals.
pub const HIGH_SNR_TAIL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantMode {
    PaperLiteral,
    #[default]
    Rederived,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadTolerances {
    pub single: f64,
    pub nested: f64,
}

impl Default for QuadTolerances {
    fn default() -> Self {
        Self {
            single: 1e-8,
            nested: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadModel {
    pub net: NetworkParams,
    pub traffic: TrafficParams,
    pub constant_mode: ConstantMode,
    pub tolerances: QuadTolerances,
}

impl LoadModel {
    pub fn new(net: NetworkParams, traffic: TrafficParams) -> Result<Self> {
        net.validate()?;
        traffic.validate()?;
        Ok(Self {
            net,
            traffic,
            constant_mode: ConstantMode::default(),
            tolerances: QuadTolerances::default(),
        })
    }

    pub fn with_constant_mode(mut self, mode: ConstantMode) -> Self {
        self.constant_mode = mode;
        self
    }

    pub fn with_lambda_bs(mut self, lambda_bs: f64) -> Self {
        self.net.lambda_bs = lambda_bs;
        self
    }

    pub fn xi(&self) -> f64 {
        self.net.xi()
    }

    pub fn w(&self) -> f64 {
        self.traffic.traffic_density()
    }

    pub fn lambda(&self) -> f64 {
        self.net.lambda_bs
    }

    pub fn alpha(&self) -> f64 {
        self.net.alpha
    }

    /// `π·ξ^(2/α)`: disk area at which the edge SNR reaches one.
    pub fn area_limit(&self) -> f64 {
        self.net.high_snr_area_limit()
    }

    /// Prefactor `K'` of the area-to-load map.
    pub fn k_prime(&self) -> f64 {
        let (w, xi, a, b) = (self.w(), self.xi(), self.alpha(), self.net.bandwidth_hz);
        match self.constant_mode {
            ConstantMode::Rederived => 2.0 * PI * w * LN_2 * xi.powf(2.0 / a) / (a * b),
            ConstantMode::PaperLiteral => {
                4.0 * w * PI * LN_2 * xi / (a * a * b * self.lambda()) * xi.powf(2.0 / a)
            }
        }
    }

    /// `K1`, the `α = 2` prefactor used by the asymptotic load CDF.
    pub fn k1(&self) -> f64 {
        let (w, xi, b) = (self.w(), self.xi(), self.net.bandwidth_hz);
        match self.constant_mode {
            ConstantMode::Rederived => PI * w * LN_2 * xi / b,
            ConstantMode::PaperLiteral => w * PI * LN_2 * xi / (b * self.lambda()),
        }
    }

    /// `χ2`, the prefactor of the mean load written as an integral over
    /// `t = ln(ξπ/A)` (`α = 2`).
    pub fn chi2(&self) -> f64 {
        let (w, xi, b, lam) = (self.w(), self.xi(), self.net.bandwidth_hz, self.lambda());
        let scale = (xi * PI * lam).powf(3.5);
        match self.constant_mode {
            ConstantMode::Rederived => PI * w * LN_2 * xi / b * tanemura_constant() * scale,
            ConstantMode::PaperLiteral => w * PI * LN_2 * xi / (lam * b) * scale,
        }
    }

    fn single_opts(&self) -> QuadOptions {
        QuadOptions {
            rel_tol: self.tolerances.single,
            abs_tol: 0.0,
            max_subdivisions: 4000,
        }
    }

    fn nested_opts(&self) -> QuadOptions {
        QuadOptions {
            rel_tol: self.tolerances.nested,
            abs_tol: 0.0,
            max_subdivisions: 4000,
        }
    }

    fn require_alpha_two(&self, what: &'static str) -> Result<()> {
        if (self.alpha() - 2.0).abs() > 1e-12 {
            Err(Error::RequiresAlphaTwo(what))
        } else {
            Ok(())
        }
    }

    /// Fails when more than [`HIGH_SNR_TAIL_TOL`] of the cells are too large
    /// for the high-SNR load formula.
    pub fn check_validity_region(&self) -> Result<()> {
        let tail = area_ccdf(self.area_limit(), self.lambda());
        if tail > HIGH_SNR_TAIL_TOL {
            Err(Error::CellLargerThanValidityRegion { tail_mass: tail })
        } else {
            Ok(())
        }
    }
}

/// Density of the reduced cell area `s = λA`.
pub fn area_pdf_reduced(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    tanemura_constant() * x.powf(2.5) * (-3.5 * x).exp()
}

/// Density of the typical-cell area [m⁻²].
pub fn area_pdf(area: f64, lambda_bs: f64) -> f64 {
    lambda_bs * area_pdf_reduced(lambda_bs * area)
}

/// CDF of the typical-cell area.
pub fn area_cdf(x: f64, lambda_bs: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    // (343/15)·√(7/2π)·(2/7)^(7/2)·γ_inc(7λx/2, 7/2); the prefactor is 1/Γ(7/2).
    let prefactor = tanemura_constant() * (2.0f64 / 7.0).powf(3.5);
    let g = gamma_lower_inc(3.5 * lambda_bs * x, AREA_SHAPE).expect("arguments in domain");
    (prefactor * g).min(1.0)
}

/// Complementary CDF of the typical-cell area, accurate in the far tail.
pub fn area_ccdf(x: f64, lambda_bs: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_q(AREA_SHAPE, 3.5 * lambda_bs * x).expect("arguments in domain")
}

/// Load of a disk cell of area `area` [m²].
pub fn load_of_area(area: f64, model: &LoadModel) -> Result<f64> {
    if !(area > 0.0) {
        return Err(Error::Domain {
            function: "load_of_area",
            value: area,
            expected: "area > 0",
        });
    }
    if model.w() == 0.0 {
        return Ok(0.0);
    }
    let alpha = model.alpha();
    let arg = (2.0 / alpha) * (model.xi().ln() + 0.5 * alpha * (PI / area).ln());
    if !(arg > 0.0) {
        return Err(Error::HighSnrViolation {
            area_m2: area,
            limit_m2: model.area_limit(),
        });
    }
    Ok(model.k_prime() * e1_unchecked(arg))
}

/// CDF of the typical-cell load.
///
/// `Reference` inverts the area-to-load map exactly through the negative
/// branch of `Ei⁻¹`:
/// `F(l) = F_A(π·(ξ⁻¹·exp(-(α/2)·Ei⁻¹(-l/K')))^(-2/α))`.
/// `PaperApprox` (α = 2 only) evaluates the asymptotic closed form
/// `F_A(ξπ(1 + e^(-l/K1)) / e^(-l/K1))`.
pub fn load_cdf(l: f64, model: &LoadModel, mode: ApproxMode) -> Result<f64> {
    if !(l >= 0.0) {
        return Err(Error::Domain {
            function: "load_cdf",
            value: l,
            expected: "l >= 0",
        });
    }
    if model.w() == 0.0 {
        return Ok(1.0);
    }
    let lambda = model.lambda();
    match mode {
        ApproxMode::Reference => {
            if l == 0.0 {
                return Ok(0.0);
            }
            if l.is_infinite() {
                return Ok(area_cdf(model.area_limit(), lambda));
            }
            let v = l / model.k_prime();
            // E1(u) = v has no representable solution beyond this; the
            // threshold area is then the validity limit itself.
            if v > 700.0 {
                return Ok(area_cdf(model.area_limit(), lambda));
            }
            // Ei⁻¹(-v) on the negative branch is -E1⁻¹(v).
            let ei_inv = -e1_inverse(v)?;
            let alpha = model.alpha();
            let inner = (-0.5 * alpha * ei_inv).exp() / model.xi();
            let area = PI * inner.powf(-2.0 / alpha);
            Ok(area_cdf(area, lambda))
        }
        ApproxMode::PaperApprox => {
            model.require_alpha_two("asymptotic load CDF")?;
            let e = (-l / model.k1()).exp();
            let area = model.xi() * PI * (1.0 + e) / e;
            Ok(area_cdf(area, lambda))
        }
    }
}

/// Disk area whose load is `l`, found by bisection on [`load_of_area`].
/// Returns the validity limit when `l` exceeds every attainable load.
pub fn area_for_load(l: f64, model: &LoadModel) -> Result<f64> {
    let limit = model.area_limit();
    let (mut lo, mut hi) = (limit * 1e-300f64.max(f64::MIN_POSITIVE), limit);
    if load_of_area(lo, model)? >= l {
        return Ok(lo);
    }
    // Bisect on ln A; loads blow up only at the limit itself.
    for _ in 0..200 {
        let mid = (lo.ln() + 0.5 * (hi.ln() - lo.ln())).exp();
        if mid <= lo || mid >= hi {
            break;
        }
        match load_of_area(mid, model) {
            Ok(v) if v < l => lo = mid,
            Ok(_) | Err(Error::HighSnrViolation { .. }) => hi = mid,
            Err(e) => return Err(e),
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Load CDF by numerically inverting the area-to-load map:
/// `P(load_of_area(A) ≤ l)`.
pub fn load_cdf_pushforward(l: f64, model: &LoadModel) -> Result<f64> {
    if model.w() == 0.0 {
        return Ok(1.0);
    }
    if l <= 0.0 {
        return Ok(0.0);
    }
    Ok(area_cdf(area_for_load(l, model)?, model.lambda()))
}

/// Probability that the typical cell is not overloaded, `F_ρ(1)`.
pub fn stable_fraction(model: &LoadModel, mode: ApproxMode) -> Result<f64> {
    load_cdf(1.0, model, mode)
}

/// Mean-cell (typical-user) load baseline
/// `∫ w / (B·λ·log2(1+T)) · p(T) dT`, with `p = -dP_C/dT` and the
/// noise-limited coverage `P_C(T) = 1 - exp(-λπ(ξ/T)^(2/α))` of the mean SNR
/// at the nearest-BS distance.
pub fn mean_load_mc_baseline(model: &LoadModel) -> Result<f64> {
    let w = model.w();
    if w == 0.0 {
        return Ok(0.0);
    }
    let (lambda, xi, alpha, b) = (
        model.lambda(),
        model.xi(),
        model.alpha(),
        model.net.bandwidth_hz,
    );
    let c = lambda * PI * xi.powf(2.0 / alpha);
    // T = e^s. q(s) = λπ(ξ/T)^(2/α) is the Exp(1) distance variable λπr².
    let q_of = |s: f64| c * (-2.0 * s / alpha).exp();
    // p(T)·T = (2/α)·q·e^(-q)
    let mut integrand = |s: f64| {
        let q = q_of(s);
        let t = s.exp();
        let density = (2.0 / alpha) * q * (-q).exp();
        density / (t.ln_1p() / LN_2)
    };
    let s_of_q = |q: f64| 0.5 * alpha * (c / q).ln();
    let s_lo = s_of_q(80.0);
    let s_hi = s_of_q(1e-30);
    let s_mid = s_of_q(1.0);
    let r = integrate_with_breaks(
        &mut integrand,
        &[s_lo, s_of_q(5.0), s_mid, s_of_q(0.05), s_hi],
        model.nested_opts(),
    )?;
    Ok(w / (b * lambda) * r.value)
}

/// Mean load of the typical cell under the disk approximation, any `α`:
/// `∫ ρ(A)·f_A(A) dA` with reference `E1`.
pub fn typical_mean_load_circular(model: &LoadModel) -> Result<f64> {
    mean_load_with(model, e1_unchecked)
}

fn mean_load_with<F: Fn(f64) -> f64>(model: &LoadModel, e1_like: F) -> Result<f64> {
    if model.w() == 0.0 {
        return Ok(0.0);
    }
    model.check_validity_region()?;
    let lambda = model.lambda();
    let alpha = model.alpha();
    let kp = model.k_prime();
    let ln_xi = model.xi().ln();
    let u_limit = lambda * model.area_limit();
    let u_max = u_limit.min(60.0);
    let mut integrand = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let area = u / lambda;
        let arg = (2.0 / alpha) * (ln_xi + 0.5 * alpha * (PI / area).ln());
        if arg <= 0.0 {
            return 0.0;
        }
        kp * e1_like(arg) * area_pdf_reduced(u)
    };
    let mut breaks = vec![0.0];
    for p in [0.2, 5.0 / 7.0, 2.0, 6.0] {
        if p < u_max {
            breaks.push(p);
        }
    }
    // branch switch of the approximate integrand
    let u_switch = u_limit / std::f64::consts::E;
    if u_switch > 0.0 && u_switch < u_max {
        breaks.push(u_switch);
        breaks.sort_by(f64::total_cmp);
    }
    breaks.push(u_max);
    let r = integrate_with_breaks(&mut integrand, &breaks, model.single_opts())?;
    Ok(r.value)
}

/// Single-integral mean load of the typical cell (`α = 2`).
///
/// `Reference` uses the exact `E1`. `PaperApprox` uses the Barry
/// interpolation where `ln(ξπ/A) ≥ 1` (i.e. `A ≤ πξ/e`) and the truncated
/// small-argument expansion with the `x²/8` coefficient below it.
pub fn ei_mean_load(model: &LoadModel, mode: ApproxMode) -> Result<f64> {
    model.require_alpha_two("EI mean-load approximation")?;
    match mode {
        ApproxMode::Reference => typical_mean_load_circular(model),
        ApproxMode::PaperApprox => mean_load_with(model, |x| {
            if x >= 1.0 {
                barry_formula(x)
            } else {
                smallx_formula(x, ApproxMode::PaperApprox)
            }
        }),
    }
}

/// Ramp-and-step replacement of `F2(t) = exp(-c·e^(-t))` between its 10th
/// and 90th percentiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RampApprox {
    pub t1: f64,
    pub t2: f64,
    pub y1: f64,
}

impl RampApprox {
    /// `c = 7λξπ/2`.
    pub fn new(c: f64) -> Self {
        let t1 = -(-(0.1f64).ln() / c).ln();
        let t2 = -(-(0.9f64).ln() / c).ln();
        let y1 = (0.9 * t1 - 0.1 * t2) / (t1 - t2);
        Self { t1, t2, y1 }
    }

    pub fn for_model(model: &LoadModel) -> Self {
        Self::new(3.5 * model.lambda() * model.xi() * PI)
    }

    pub fn slope(&self) -> f64 {
        0.8 / (self.t2 - self.t1)
    }

    pub fn value(&self, t: f64) -> f64 {
        if t <= self.t1 {
            0.0
        } else if t <= self.t2 {
            self.slope() * t + self.y1
        } else {
            1.0
        }
    }
}

/// `F2(t) = exp(-(7λξπ/2)·e^(-t))`.
pub fn f2(t: f64, model: &LoadModel) -> f64 {
    (-3.5 * model.lambda() * model.xi() * PI * (-t).exp()).exp()
}

/// Closed-form mean load (`α = 2`) from the ramp approximation of `F2` and
/// the Geller–Ng primitives.
///
/// `PaperLiteral` evaluates `χ2·(I1(t2) - I1(t1) + (y1-1)·I2(t2) - y1·I2(t1))`
/// as printed. `Rederived` restores the ramp slope `0.8/(t2-t1)` on the `I1`
/// term, which makes the expression equal to the integral of the ramp.
pub fn cf_mean_load(model: &LoadModel) -> Result<f64> {
    model.require_alpha_two("closed-form mean load")?;
    if model.w() == 0.0 {
        return Ok(0.0);
    }
    let ramp = RampApprox::for_model(model);
    if !(ramp.t1 > 0.0) {
        return Err(Error::HighSnrViolation {
            area_m2: 1.0 / model.lambda(),
            limit_m2: model.area_limit(),
        });
    }
    let i1 = geller_ng_i1(ramp.t2)? - geller_ng_i1(ramp.t1)?;
    let i2_terms = (ramp.y1 - 1.0) * geller_ng_i2(ramp.t2)? - ramp.y1 * geller_ng_i2(ramp.t1)?;
    let slope = match model.constant_mode {
        ConstantMode::PaperLiteral => 1.0,
        ConstantMode::Rederived => ramp.slope(),
    };
    Ok((model.chi2() * (slope * i1 + i2_terms)).max(0.0))
}

fn t_integral<G: Fn(f64) -> f64>(
    model: &LoadModel,
    weight: G,
    extra_breaks: &[f64],
) -> Result<f64> {
    let c = 3.5 * model.lambda() * model.xi() * PI;
    let t_peak = (c / 4.5).ln();
    let lo = (c / 800.0).ln().max(0.0);
    let hi = t_peak.max(1.0) + 40.0;
    let mut breaks = vec![lo, hi];
    for p in [t_peak - 2.0, t_peak, t_peak + 2.0]
        .into_iter()
        .chain(extra_breaks.iter().copied())
    {
        if p > lo && p < hi {
            breaks.push(p);
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut integrand = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        e1_unchecked(t) * (-3.5 * t).exp() * weight(t)
    };
    Ok(integrate_with_breaks(&mut integrand, &breaks, model.single_opts())?.value)
}

/// Numeric evaluation of `χ2·∫ E1(t)·e^(-3.5t)·F2(t) dt` with the exact `F2`.
pub fn t_form_mean_load_numeric(model: &LoadModel) -> Result<f64> {
    model.require_alpha_two("mean load in t-form")?;
    if model.w() == 0.0 {
        return Ok(0.0);
    }
    model.check_validity_region()?;
    Ok(model.chi2() * t_integral(model, |t| f2(t, model), &[])?)
}

/// Numeric evaluation of the same integral with the ramp in place of `F2`.
pub fn cf_ramp_numeric(model: &LoadModel) -> Result<f64> {
    model.require_alpha_two("mean load in t-form")?;
    if model.w() == 0.0 {
        return Ok(0.0);
    }
    let ramp = RampApprox::for_model(model);
    Ok(model.chi2() * t_integral(model, |t| ramp.value(t), &[ramp.t1, ramp.t2])?)
}

/// Flow throughput of the dynamic model at mean load `ρ̄`, taking the cell
/// area as `1/λ`: `w·(1-ρ̄)/ρ̄·(1/λ)`.
pub fn dyn_throughput(rho_bar: f64, model: &LoadModel) -> Result<f64> {
    check_load(rho_bar)?;
    Ok(model.w() * (1.0 - rho_bar) / rho_bar / model.lambda())
}

/// Mean number of active flows `ρ̄/(1-ρ̄)`.
pub fn mean_users(rho_bar: f64) -> Result<f64> {
    check_load(rho_bar)?;
    Ok(rho_bar / (1.0 - rho_bar))
}

fn check_load(rho_bar: f64) -> Result<()> {
    if rho_bar >= 1.0 {
        return Err(Error::Unstable(rho_bar));
    }
    if !(rho_bar > 0.0) {
        return Err(Error::Domain {
            function: "dyn_throughput",
            value: rho_bar,
            expected: "0 < rho_bar < 1",
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkbudget::k_from_carrier_ghz;
    use crate::quad::{integrate, integrate_to_infinity};

    fn model(g0_db: f64, lambda_bs: f64, lambda_u_km2: f64) -> LoadModel {
        let net = NetworkParams {
            g0_db,
            lambda_bs,
            k_pathloss_db: k_from_carrier_ghz(28.0),
            ..NetworkParams::default()
        };
        LoadModel::new(net, TrafficParams::from_per_km2(lambda_u_km2, 1e8)).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn reduced_area_density_moments() {
        let opts = QuadOptions::with_rel_tol(1e-13);
        let mass = integrate_to_infinity(area_pdf_reduced, 0.0, opts)
            .unwrap()
            .value;
        let mean = integrate_to_infinity(|x| x * area_pdf_reduced(x), 0.0, opts)
            .unwrap()
            .value;
        assert!((mass - 1.0).abs() < 1e-9, "{mass}");
        assert!((mean - 1.0).abs() < 1e-9, "{mean}");
        assert_eq!(area_pdf_reduced(0.0), 0.0);
        let norm = tanemura_constant() * (2.0f64 / 7.0).powf(3.5) * crate::specfun::gamma(3.5);
        assert!((norm - 1.0).abs() < 1e-14);
    }

    #[test]
    fn area_cdf_limits_and_median() {
        let lam = 3e-5;
        assert_eq!(area_cdf(0.0, lam), 0.0);
        assert!((area_cdf(1e12, lam) - 1.0).abs() < 1e-15);
        // median reduced area by bisection on the formula
        let (mut lo, mut hi) = (0.1, 3.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if area_cdf(mid / lam, lam) < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((lo - 0.906_544_456_5).abs() < 1e-9, "median {lo}");
        // derivative of the CDF is the density
        let a = 2.0e4;
        let h = 1.0;
        let d = (area_cdf(a + h, lam) - area_cdf(a - h, lam)) / (2.0 * h);
        assert!(rel(d, area_pdf(a, lam)) < 1e-7);
    }

    #[test]
    fn load_of_area_zero_traffic_and_domain() {
        let m = model(20.0, 1e-5, 0.0);
        assert_eq!(load_of_area(1e5, &m).unwrap(), 0.0);
        let m = model(20.0, 1e-5, 100.0);
        assert!(load_of_area(0.0, &m).is_err());
        let limit = m.area_limit();
        assert!(matches!(
            load_of_area(limit * 1.01, &m),
            Err(Error::HighSnrViolation { .. })
        ));
        assert!(load_of_area(limit * 0.99, &m).unwrap().is_finite());
    }

    #[test]
    fn load_of_area_increasing() {
        for alpha in [2.0, 3.0, 4.0] {
            let mut m = model(20.0, 1e-5, 100.0);
            m.net.alpha = alpha;
            let limit = m.area_limit();
            let mut prev = 0.0;
            for i in 1..200 {
                let a = limit * (i as f64 / 200.0).powi(3);
                let l = load_of_area(a, &m).unwrap();
                assert!(l > prev, "alpha={alpha} a={a}");
                prev = l;
            }
        }
    }

    /// The two constant conventions differ by `2ξ/(αλ)`.
    #[test]
    fn constant_mode_discrepancy_factor() {
        let m = model(20.0, 1e-5, 100.0);
        let lit = m.with_constant_mode(ConstantMode::PaperLiteral);
        let ratio = lit.k_prime() / m.k_prime();
        let expected = 2.0 * m.xi() / (m.alpha() * m.lambda());
        assert!(rel(ratio, expected) < 1e-12);
        assert!(rel(lit.k1() / m.k1(), 1.0 / m.lambda()) < 1e-12);
        // at α = 2 the rederived K1 and K' coincide
        assert!(rel(m.k1(), m.k_prime()) < 1e-14);
        eprintln!("K' literal / rederived = {ratio:.6e}");
    }

    #[test]
    fn load_cdf_axioms() {
        let m = model(20.0, 1e-5, 100.0);
        assert_eq!(load_cdf(0.0, &m, ApproxMode::Reference).unwrap(), 0.0);
        assert!(load_cdf(1e-9, &m, ApproxMode::Reference).unwrap() < 1e-12);
        let mut prev = 0.0;
        for i in 1..400 {
            let l = 1e-3 * 1.04f64.powi(i);
            let f = load_cdf(l, &m, ApproxMode::Reference).unwrap();
            assert!(f >= prev && f <= 1.0);
            prev = f;
        }
        assert!(load_cdf(1e6, &m, ApproxMode::Reference).unwrap() > 1.0 - 1e-12);
        assert!(load_cdf(-1.0, &m, ApproxMode::Reference).is_err());
    }

    #[test]
    fn asymptotic_cdf_requires_alpha_two() {
        let mut m = model(20.0, 1e-5, 100.0);
        m.net.alpha = 3.0;
        assert!(matches!(
            load_cdf(0.5, &m, ApproxMode::PaperApprox),
            Err(Error::RequiresAlphaTwo(_))
        ));
    }

    /// The printed asymptotic form puts the threshold area at about 2πξ,
    /// far beyond every realistic cell, so it reports nearly every cell as
    /// stable.
    #[test]
    fn asymptotic_cdf_saturates() {
        let m = model(20.0, 1e-6, 100.0);
        let asymptotic = load_cdf(0.5, &m, ApproxMode::PaperApprox).unwrap();
        assert!(asymptotic > 1.0 - 1e-12);
        let reference = load_cdf(0.5, &m, ApproxMode::Reference).unwrap();
        assert!(reference < 0.99);
    }

    #[test]
    fn stable_fraction_edge_cases() {
        let m = model(20.0, 1e-5, 0.0);
        assert_eq!(stable_fraction(&m, ApproxMode::Reference).unwrap(), 1.0);
        let m = model(20.0, 1e-6, 100.0);
        let mut prev = 0.0;
        for i in 0..40 {
            let lam = 1e-7 * 1.2f64.powi(i);
            let f = stable_fraction(&m.with_lambda_bs(lam), ApproxMode::Reference).unwrap();
            assert!(f >= prev - 1e-15, "lambda={lam}");
            prev = f;
        }
    }

    #[test]
    fn mean_cell_baseline_two_routes() {
        // Route 2: expectation over the Exp(1) variable q = λπr².
        for (g0, lam, lu) in [(36.0, 1e-4, 1e4), (20.0, 1e-5, 100.0), (0.0, 3e-5, 50.0)] {
            let mut m = model(g0, lam, lu);
            m.tolerances.nested = 1e-10;
            let direct = mean_load_mc_baseline(&m).unwrap();
            let c = lam * PI * m.xi();
            let by_q = integrate_to_infinity(
                |q: f64| {
                    if q == 0.0 {
                        return 0.0;
                    }
                    let snr = c / q;
                    (-q).exp() / snr.ln_1p() * LN_2
                },
                0.0,
                QuadOptions::with_rel_tol(1e-11),
            )
            .unwrap()
            .value
                * m.w()
                / (m.net.bandwidth_hz * lam);
            assert!(rel(direct, by_q) < 1e-7, "{direct} vs {by_q}");
        }
        assert_eq!(mean_load_mc_baseline(&model(20.0, 1e-5, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn ei_mean_reference_matches_direct_quadrature() {
        let m = model(36.0, 1e-4, 1e4);
        let reference = ei_mean_load(&m, ApproxMode::Reference).unwrap();
        let lam = m.lambda();
        let direct = integrate_to_infinity(
            |a: f64| {
                if a <= 0.0 || a >= m.area_limit() {
                    return 0.0;
                }
                load_of_area(a, &m).unwrap() * area_pdf(a, lam)
            },
            0.0,
            QuadOptions::with_rel_tol(1e-11),
        )
        .unwrap()
        .value;
        assert!(rel(reference, direct) < 1e-6, "{reference} vs {direct}");
    }

    #[test]
    fn ei_mean_asymptotic_vs_reference() {
        for lam in [2e-5, 5e-5, 1e-4, 3e-4, 1e-3] {
            let m = model(36.0, lam, 1e4);
            let a = ei_mean_load(&m, ApproxMode::PaperApprox).unwrap();
            let b = ei_mean_load(&m, ApproxMode::Reference).unwrap();
            assert!(rel(a, b) < 2e-2, "lambda={lam}: {a} vs {b}");
        }
    }

    #[test]
    fn validity_region_error() {
        let m = model(0.0, 1e-7, 100.0);
        assert!(matches!(
            ei_mean_load(&m, ApproxMode::Reference),
            Err(Error::CellLargerThanValidityRegion { .. })
        ));
    }

    #[test]
    fn t_form_equals_circular_typical_mean() {
        for lam in [1e-5, 1e-4, 1e-3] {
            let m = model(36.0, lam, 1e4);
            let circular = typical_mean_load_circular(&m).unwrap();
            let t_form = t_form_mean_load_numeric(&m).unwrap();
            assert!(rel(t_form, circular) < 1e-6, "{t_form} vs {circular}");
        }
    }

    #[test]
    fn ramp_construction() {
        let m = model(36.0, 1e-4, 1e4);
        let r = RampApprox::for_model(&m);
        assert!(r.t1 < r.t2);
        assert!((f2(r.t1, &m) - 0.1).abs() < 1e-12);
        assert!((f2(r.t2, &m) - 0.9).abs() < 1e-12);
        assert!((r.value(r.t1 + 1e-12) - 0.1).abs() < 1e-9);
        assert!((r.value(r.t2) - 0.9).abs() < 1e-12);
        let expected_y1 = (0.9 * r.t1 - 0.1 * r.t2) / (r.t1 - r.t2);
        assert_eq!(r.y1, expected_y1);
    }

    #[test]
    fn closed_form_matches_ramp_integral() {
        for lam in [1e-5, 1e-4, 1e-3] {
            let m = model(36.0, lam, 1e4);
            let cf = cf_mean_load(&m).unwrap();
            let numeric = cf_ramp_numeric(&m).unwrap();
            assert!(rel(cf, numeric) < 1e-6, "{cf} vs {numeric}");
            assert!(cf >= 0.0);
        }
    }

    #[test]
    fn dyn_throughput_algebra() {
        let m = model(20.0, 1e-5, 100.0);
        let r = dyn_throughput(0.5, &m).unwrap();
        assert!(rel(r, m.w() / m.lambda()) < 1e-15);
        assert_eq!(mean_users(0.5).unwrap(), 1.0);
        assert!(dyn_throughput(1.0 - 1e-12, &m).unwrap() < 1e-3 * m.w() / m.lambda());
        assert!(matches!(dyn_throughput(1.0, &m), Err(Error::Unstable(_))));
        assert!(dyn_throughput(0.0, &m).is_err());
    }

    #[test]
    fn direct_quadrature_of_load_integrand_small_grid() {
        // one point of the full 5x5x2 acceptance grid, kept here as a smoke test
        let m = model(20.0, 1e-5, 100.0);
        let area = 0.01 * m.area_limit();
        let r_max = (area / PI).sqrt();
        let (w, b, xi) = (m.w(), m.net.bandwidth_hz, m.xi());
        let radial = integrate(
            |r: f64| w * r / (b * (xi * r.powi(-2)).log2()),
            0.0,
            r_max,
            QuadOptions::with_rel_tol(1e-12),
        )
        .unwrap()
        .value;
        let expected = 2.0 * PI * radial;
        assert!(rel(load_of_area(area, &m).unwrap(), expected) < 1e-8);
    }
}
