//! Monte-Carlo geometry: PPP base stations, nearest-BS cells and per-cell
//! loads by stochastic integration.
//!
//! Cells are never built as polygons. Integration points are scattered over
//! the whole outer window and each one is credited to its nearest BS, so a
//! cell's area is its share of the points and its load is the traffic
//! density times the sum of `1/C(d)` over its points. Cells whose BS lies in
//! the inner window (outer window shrunk by the guard) are far enough from
//! the border to be unaffected by truncation; only those feed statistics.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::LoadModel;
use crate::error::{Error, Result};
use crate::stats::{mean_stderr, quantile};

/// Default guard margin in units of the mean BS spacing `1/√λ`.
pub const DEFAULT_GUARD_FACTOR: f64 = 3.0;

/// Minimum number of inner cells accepted by [`typical_vs_zero_stats`].
pub const MIN_STATS_SAMPLES: usize = 1000;

// Target number of integration points handled by one work unit.
const POINTS_PER_CHUNK: usize = 1 << 16;

// Stream tags mixed into realization seeds.
const INTEGRATION_STREAM: u64 = 0x1a7e_67a7_e000_0001;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of sub-stream `index` of `master`:
/// `mix64(master ^ mix64(index))`, with `mix64` the SplitMix64 step.
///
/// Depends only on its arguments, so work can be split over threads in any
/// way without changing results.
pub fn sub_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index))
}

pub fn default_guard(lambda_bs: f64) -> f64 {
    DEFAULT_GUARD_FACTOR / lambda_bs.sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PppRealization {
    /// BS positions [m], inside `[-window_half, window_half]²`.
    pub points: Vec<[f64; 2]>,
    pub window_half: f64,
    pub guard: f64,
    pub seed: u64,
}

impl PppRealization {
    pub fn inner_half(&self) -> f64 {
        (self.window_half - self.guard).max(0.0)
    }

    pub fn in_inner(&self, p: [f64; 2]) -> bool {
        let h = self.inner_half();
        p[0].abs() < h && p[1].abs() < h
    }

    pub fn outer_area(&self) -> f64 {
        4.0 * self.window_half * self.window_half
    }

    pub fn inner_area(&self) -> f64 {
        4.0 * self.inner_half().powi(2)
    }
}

/// Samples a PPP with the default guard `3/√λ`.
pub fn sample_ppp(lambda_bs: f64, window_half: f64, seed: u64) -> Result<PppRealization> {
    sample_ppp_with_guard(lambda_bs, window_half, default_guard(lambda_bs), seed)
}

pub fn sample_ppp_with_guard(
    lambda_bs: f64,
    window_half: f64,
    guard: f64,
    seed: u64,
) -> Result<PppRealization> {
    if !(lambda_bs > 0.0 && lambda_bs.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "lambda_bs",
            value: lambda_bs,
            reason: "must be positive",
        });
    }
    if !(window_half > 0.0 && window_half.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "window_half",
            value: window_half,
            reason: "must be positive",
        });
    }
    if !(guard >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "guard",
            value: guard,
            reason: "must be non-negative",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean = lambda_bs * 4.0 * window_half * window_half;
    let poisson = Poisson::new(mean).map_err(|_| Error::InvalidParameter {
        name: "lambda_bs",
        value: lambda_bs,
        reason: "expected BS count out of range",
    })?;
    let n = poisson.sample(&mut rng) as usize;
    if n == 0 {
        return Err(Error::EmptyRealization);
    }
    let points = (0..n)
        .map(|_| {
            [
                rng.random_range(-window_half..window_half),
                rng.random_range(-window_half..window_half),
            ]
        })
        .collect();
    Ok(PppRealization {
        points,
        window_half,
        guard,
        seed,
    })
}

/// Bucket grid for nearest-point queries inside a square window.
#[derive(Debug, Clone)]
pub struct NearestIndex {
    points: Vec<[f64; 2]>,
    origin: f64,
    side: f64,
    bins: usize,
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl NearestIndex {
    /// Indexes `points` lying in `[-window_half, window_half]²`.
    pub fn new(points: &[[f64; 2]], window_half: f64) -> Self {
        assert!(!points.is_empty(), "nearest index needs at least one point");
        let width = 2.0 * window_half;
        // About two points per bin.
        let bins = ((points.len() as f64 / 2.0).sqrt().ceil() as usize).clamp(1, 4096);
        let side = width / bins as f64;
        let origin = -window_half;
        let bin_of = |p: [f64; 2]| {
            let bx = (((p[0] - origin) / side) as usize).min(bins - 1);
            let by = (((p[1] - origin) / side) as usize).min(bins - 1);
            by * bins + bx
        };
        let mut counts = vec![0u32; bins * bins + 1];
        for &p in points {
            counts[bin_of(p) + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let starts = counts.clone();
        let mut fill = counts;
        let mut items = vec![0u32; points.len()];
        for (i, &p) in points.iter().enumerate() {
            let b = bin_of(p);
            items[fill[b] as usize] = i as u32;
            fill[b] += 1;
        }
        Self {
            points: points.to_vec(),
            origin,
            side,
            bins,
            starts,
            items,
        }
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    /// Index of the point nearest to `q` and the squared distance to it.
    /// Ties go to the lower index.
    pub fn nearest(&self, q: [f64; 2]) -> (usize, f64) {
        let n = self.bins as isize;
        let cx = (((q[0] - self.origin) / self.side).floor() as isize).clamp(0, n - 1);
        let cy = (((q[1] - self.origin) / self.side).floor() as isize).clamp(0, n - 1);
        let mut best = (usize::MAX, f64::INFINITY);
        let visit = |bx: isize, by: isize, best: &mut (usize, f64)| {
            if bx < 0 || by < 0 || bx >= n || by >= n {
                return;
            }
            let b = (by * n + bx) as usize;
            for &i in &self.items[self.starts[b] as usize..self.starts[b + 1] as usize] {
                let p = self.points[i as usize];
                let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                if d2 < best.1 || (d2 == best.1 && (i as usize) < best.0) {
                    *best = (i as usize, d2);
                }
            }
        };
        // Query points outside the window are handled by the clamp; the
        // stopping rule then needs the distance from q to its bin.
        let slack = {
            let bx0 = self.origin + cx as f64 * self.side;
            let by0 = self.origin + cy as f64 * self.side;
            let dx = (bx0 - q[0]).max(q[0] - bx0 - self.side).max(0.0);
            let dy = (by0 - q[1]).max(q[1] - by0 - self.side).max(0.0);
            dx.max(dy)
        };
        for k in 0..=n {
            if k == 0 {
                visit(cx, cy, &mut best);
            } else {
                for d in -k..=k {
                    visit(cx + d, cy - k, &mut best);
                    visit(cx + d, cy + k, &mut best);
                }
                for d in -k + 1..k {
                    visit(cx - k, cy + d, &mut best);
                    visit(cx + k, cy + d, &mut best);
                }
            }
            let reach = (k as f64 * self.side - slack).max(0.0);
            if best.0 != usize::MAX && best.1 <= reach * reach {
                break;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellLoadSample {
    pub bs_index: usize,
    pub area_m2: f64,
    pub load: f64,
    pub in_inner_window: bool,
}

/// How integration points are placed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// One uniform point per square of an `m × m` grid.
    #[default]
    Stratified,
    /// Independent uniform points.
    Uniform,
}

/// Full output of a cell scan.
#[derive(Debug, Clone)]
pub struct CellScan {
    /// One entry per BS that received at least one integration point, in
    /// BS index order.
    pub samples: Vec<CellLoadSample>,
    /// Largest distance from each BS to one of its integration points,
    /// indexed by BS; zero for empty cells.
    pub reach: Vec<f64>,
    /// Mean Shannon rate over each cell's integration points [bit/s],
    /// indexed by BS; zero for empty cells.
    pub mean_rate: Vec<f64>,
    /// BSs that received no integration point.
    pub empty_cells: usize,
    /// Area represented by one integration point [m²].
    pub point_area: f64,
    /// Number of integration points actually used.
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    count: u64,
    inv_rate: f64,
    rate: f64,
    max_d2: f64,
}

/// Shannon rate at squared distance `d2` [bit/s].
pub fn shannon_rate(d2: f64, xi: f64, alpha: f64, bandwidth_hz: f64) -> f64 {
    bandwidth_hz * (xi * d2.powf(-0.5 * alpha)).ln_1p() / std::f64::consts::LN_2
}

/// Per-cell areas and loads with stratified integration points.
pub fn cell_loads(r: &PppRealization, model: &LoadModel, n_points: usize) -> Vec<CellLoadSample> {
    scan_cells(r, model, n_points, Sampling::Stratified).samples
}

/// Scans the outer window with about `n_points` integration points.
///
/// Work is split into fixed chunks with their own RNG sub-streams and merged
/// in chunk order, so the result does not depend on the thread count.
pub fn scan_cells(
    r: &PppRealization,
    model: &LoadModel,
    n_points: usize,
    sampling: Sampling,
) -> CellScan {
    let index = NearestIndex::new(&r.points, r.window_half);
    scan_with_index(r, &index, model, n_points, sampling)
}

pub(crate) fn scan_with_index(
    r: &PppRealization,
    index: &NearestIndex,
    model: &LoadModel,
    n_points: usize,
    sampling: Sampling,
) -> CellScan {
    let n_bs = r.points.len();
    let (xi, alpha, bw) = (model.xi(), model.alpha(), model.net.bandwidth_hz);
    let w_half = r.window_half;
    let width = 2.0 * w_half;
    let stream = sub_seed(r.seed, INTEGRATION_STREAM);

    // (chunk count, points actually used)
    let (chunks, used, m) = match sampling {
        Sampling::Stratified => {
            let m = ((n_points.max(1) as f64).sqrt().ceil() as usize).max(1);
            let rows = (POINTS_PER_CHUNK / m).max(1);
            (m.div_ceil(rows), m * m, m)
        }
        Sampling::Uniform => {
            let n = n_points.max(1);
            (n.div_ceil(POINTS_PER_CHUNK), n, 0)
        }
    };

    let partials: Vec<Vec<(u32, Acc)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(stream, c as u64));
            let mut local = vec![Acc::default(); n_bs];
            let mut touched: Vec<u32> = Vec::new();
            let mut credit = |q: [f64; 2], local: &mut Vec<Acc>| {
                let (j, d2) = index.nearest(q);
                let a = &mut local[j];
                if a.count == 0 {
                    touched.push(j as u32);
                }
                let c = shannon_rate(d2, xi, alpha, bw);
                a.count += 1;
                a.inv_rate += 1.0 / c;
                if c.is_finite() {
                    a.rate += c;
                }
                a.max_d2 = a.max_d2.max(d2);
            };
            match sampling {
                Sampling::Stratified => {
                    let h = width / m as f64;
                    let rows = (POINTS_PER_CHUNK / m).max(1);
                    let lo = c * rows;
                    let hi = ((c + 1) * rows).min(m);
                    for i in lo..hi {
                        for j in 0..m {
                            let u: f64 = rng.random();
                            let v: f64 = rng.random();
                            let q = [-w_half + (j as f64 + u) * h, -w_half + (i as f64 + v) * h];
                            credit(q, &mut local);
                        }
                    }
                }
                Sampling::Uniform => {
                    let lo = c * POINTS_PER_CHUNK;
                    let hi = ((c + 1) * POINTS_PER_CHUNK).min(used);
                    for _ in lo..hi {
                        let q = [
                            rng.random_range(-w_half..w_half),
                            rng.random_range(-w_half..w_half),
                        ];
                        credit(q, &mut local);
                    }
                }
            }
            touched.sort_unstable();
            touched
                .into_iter()
                .map(|j| (j, local[j as usize]))
                .collect()
        })
        .collect();

    let mut acc = vec![Acc::default(); n_bs];
    for part in &partials {
        for &(j, a) in part {
            let t = &mut acc[j as usize];
            t.count += a.count;
            t.inv_rate += a.inv_rate;
            t.rate += a.rate;
            t.max_d2 = t.max_d2.max(a.max_d2);
        }
    }

    let point_area = width * width / used as f64;
    let w = model.w();
    let mut samples = Vec::with_capacity(n_bs);
    let mut empty_cells = 0;
    for (j, a) in acc.iter().enumerate() {
        if a.count == 0 {
            empty_cells += 1;
            continue;
        }
        samples.push(CellLoadSample {
            bs_index: j,
            area_m2: a.count as f64 * point_area,
            load: w * point_area * a.inv_rate,
            in_inner_window: r.in_inner(r.points[j]),
        });
    }
    CellScan {
        samples,
        reach: acc.iter().map(|a| a.max_d2.sqrt()).collect(),
        mean_rate: acc
            .iter()
            .map(|a| {
                if a.count == 0 {
                    0.0
                } else {
                    a.rate / a.count as f64
                }
            })
            .collect(),
        empty_cells,
        point_area,
        n_points: used,
    }
}

/// Typical-cell versus zero-cell summary of inner-window cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub n_cells: usize,
    pub typical_mean_load: f64,
    pub typical_load_stderr: f64,
    pub zero_mean_load: f64,
    pub typical_mean_area: f64,
    pub zero_mean_area: f64,
    /// `(l, fraction of typical cells with load ≤ l)`.
    pub empirical_load_cdf: Vec<(f64, f64)>,
}

/// Typical statistics are plain per-cell averages; zero-cell statistics
/// weight each cell by its area. Only samples flagged `in_inner_window`
/// count.
pub fn typical_vs_zero_stats(
    samples: &[CellLoadSample],
    load_grid: &[f64],
    min_samples: usize,
) -> Result<CellStats> {
    let inner: Vec<&CellLoadSample> = samples.iter().filter(|s| s.in_inner_window).collect();
    if inner.len() < min_samples.max(1) {
        return Err(Error::InsufficientSamples {
            required: min_samples.max(1),
            available: inner.len(),
        });
    }
    let loads: Vec<f64> = inner.iter().map(|s| s.load).collect();
    let (typical_mean_load, typical_load_stderr) = mean_stderr(&loads);
    let n = inner.len() as f64;
    let area_sum: f64 = inner.iter().map(|s| s.area_m2).sum();
    let zero_mean_load = inner.iter().map(|s| s.area_m2 * s.load).sum::<f64>() / area_sum;
    let zero_mean_area = inner.iter().map(|s| s.area_m2 * s.area_m2).sum::<f64>() / area_sum;
    let mut sorted = loads;
    sorted.sort_by(f64::total_cmp);
    let empirical_load_cdf = load_grid
        .iter()
        .map(|&l| (l, crate::stats::ecdf(&sorted, l)))
        .collect();
    Ok(CellStats {
        n_cells: inner.len(),
        typical_mean_load,
        typical_load_stderr,
        zero_mean_load,
        typical_mean_area: area_sum / n,
        zero_mean_area,
        empirical_load_cdf,
    })
}

/// Monte-Carlo run settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub realizations: usize,
    /// Expected number of BSs in the inner window of one realization.
    pub inner_cells: f64,
    /// Integration points per expected cell of the outer window.
    pub points_per_cell: f64,
    pub guard_factor: f64,
    pub seed: u64,
    pub sampling: Sampling,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            realizations: 1000,
            inner_cells: 100.0,
            points_per_cell: 400.0,
            guard_factor: DEFAULT_GUARD_FACTOR,
            seed: 1,
            sampling: Sampling::Stratified,
        }
    }
}

impl McConfig {
    /// `(window_half, guard)` for density `lambda_bs`.
    pub fn window(&self, lambda_bs: f64) -> (f64, f64) {
        let spacing = 1.0 / lambda_bs.sqrt();
        let guard = self.guard_factor * spacing;
        let inner_half = 0.5 * self.inner_cells.sqrt() * spacing;
        (inner_half + guard, guard)
    }

    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::InvalidParameter {
                name: "realizations",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        for (name, value) in [
            ("inner_cells", self.inner_cells),
            ("points_per_cell", self.points_per_cell),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be positive",
                });
            }
        }
        if !(self.guard_factor >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "guard_factor",
                value: self.guard_factor,
                reason: "must be non-negative",
            });
        }
        Ok(())
    }
}

/// Per-realization averages over inner cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealizationSummary {
    pub index: usize,
    pub seed: u64,
    pub n_inner: usize,
    pub typical_mean_load: f64,
    pub zero_mean_load: f64,
    pub typical_mean_area: f64,
    pub zero_mean_area: f64,
    /// Fraction of inner cells with load below one.
    pub stable_fraction: f64,
    pub empty_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRun {
    pub realizations: Vec<RealizationSummary>,
    /// Inner-window samples of every realization, in realization order;
    /// empty unless requested.
    pub samples: Vec<CellLoadSample>,
    /// Realizations redrawn because they had no BS in the inner window.
    pub retries: usize,
}

/// Across-realization summary of one field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub mean: f64,
    pub stderr: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn of(values: &[f64]) -> Self {
        let (mean, stderr) = mean_stderr(values);
        Self {
            mean,
            stderr,
            lo: quantile(values, 0.025),
            hi: quantile(values, 0.975),
        }
    }
}

impl McRun {
    pub fn typical_load(&self) -> Band {
        Band::of(&self.field(|s| s.typical_mean_load))
    }

    pub fn zero_load(&self) -> Band {
        Band::of(&self.field(|s| s.zero_mean_load))
    }

    pub fn stable_fraction(&self) -> Band {
        Band::of(&self.field(|s| s.stable_fraction))
    }

    pub fn inner_cells(&self) -> usize {
        self.realizations.iter().map(|s| s.n_inner).sum()
    }

    fn field(&self, f: impl Fn(&RealizationSummary) -> f64) -> Vec<f64> {
        self.realizations.iter().map(f).collect()
    }
}

/// Samples one realization with retries on empty draws; returns it with
/// the number of retries used.
pub fn sample_realization(
    model: &LoadModel,
    cfg: &McConfig,
    index: usize,
) -> Result<(PppRealization, usize)> {
    let lambda = model.lambda();
    let (window_half, guard) = cfg.window(lambda);
    let base = sub_seed(cfg.seed, index as u64);
    for attempt in 0..1000u64 {
        let seed = if attempt == 0 {
            base
        } else {
            sub_seed(base, attempt)
        };
        match sample_ppp_with_guard(lambda, window_half, guard, seed) {
            Ok(r) if r.points.iter().any(|&p| r.in_inner(p)) => {
                return Ok((r, attempt as usize));
            }
            Ok(_) | Err(Error::EmptyRealization) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::EmptyRealization)
}

/// Runs `cfg.realizations` independent realizations in parallel and
/// summarizes each. Output order and values do not depend on the thread
/// count.
pub fn run_monte_carlo(model: &LoadModel, cfg: &McConfig, keep_samples: bool) -> Result<McRun> {
    cfg.validate()?;
    let results: Vec<Result<(RealizationSummary, Vec<CellLoadSample>, usize)>> = (0..cfg
        .realizations)
        .into_par_iter()
        .map(|i| {
            let (r, retries) = sample_realization(model, cfg, i)?;
            let expected_cells = model.lambda() * r.outer_area();
            let n_points = (cfg.points_per_cell * expected_cells).ceil() as usize;
            let scan = scan_cells(&r, model, n_points, cfg.sampling);
            let inner: Vec<CellLoadSample> = scan
                .samples
                .into_iter()
                .filter(|s| s.in_inner_window)
                .collect();
            let summary = summarize(i, r.seed, &inner, scan.empty_cells);
            Ok((
                summary,
                if keep_samples { inner } else { Vec::new() },
                retries,
            ))
        })
        .collect();
    let mut run = McRun {
        realizations: Vec::with_capacity(cfg.realizations),
        samples: Vec::new(),
        retries: 0,
    };
    for res in results {
        let (summary, samples, retries) = res?;
        run.realizations.push(summary);
        run.samples.extend(samples);
        run.retries += retries;
    }
    Ok(run)
}

fn summarize(
    index: usize,
    seed: u64,
    inner: &[CellLoadSample],
    empty_cells: usize,
) -> RealizationSummary {
    let n = inner.len() as f64;
    let area_sum: f64 = inner.iter().map(|s| s.area_m2).sum();
    RealizationSummary {
        index,
        seed,
        n_inner: inner.len(),
        typical_mean_load: inner.iter().map(|s| s.load).sum::<f64>() / n,
        zero_mean_load: inner.iter().map(|s| s.area_m2 * s.load).sum::<f64>() / area_sum,
        typical_mean_area: area_sum / n,
        zero_mean_area: inner.iter().map(|s| s.area_m2 * s.area_m2).sum::<f64>() / area_sum,
        stable_fraction: inner.iter().filter(|s| s.load < 1.0).count() as f64 / n,
        empty_cells,
    }
}

/// Writes samples as CSV with a header row.
pub fn write_samples_csv<W: Write>(mut out: W, samples: &[CellLoadSample]) -> std::io::Result<()> {
    writeln!(out, "bs_index,area_m2,load,in_inner_window")?;
    for s in samples {
        writeln!(
            out,
            "{},{:e},{:e},{}",
            s.bs_index, s.area_m2, s.load, s.in_inner_window
        )?;
    }
    Ok(())
}
