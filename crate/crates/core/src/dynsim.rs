//! Flow-level simulation of processor-sharing cells.
//!
//! Flows arrive as a space-time Poisson process, download an exponentially
//! distributed file and leave. A BS with `n` active flows serves each at
//! `C(d)/n`. The queue is tracked in virtual time: `V` grows at rate `1/n`
//! and a flow with service requirement `S = size/C(d)` that arrived at
//! virtual time `V_a` leaves when `V = V_a + S`, so no time discretization
//! is involved.
//!
//! Each cell gets its arrivals by thinning a Poisson stream on a disk that
//! covers the cell, keeping the points whose nearest BS is the cell's BS.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::LoadModel;
use crate::error::{Error, Result};
use crate::geomc::{
    scan_with_index, shannon_rate, sub_seed, NearestIndex, PppRealization, Sampling,
};
use crate::stats::mean_stderr;

const STATIC_STREAM: u64 = 0x57a7_1c00_0000_0002;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Warmup {
    /// Discard a fixed initial period [s].
    Fixed(f64),
    /// Discard until the running time-average of the user count moves by
    /// less than 1% between consecutive windows of this length [s]. Capped
    /// at half the run.
    Auto { window_s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Arrivals stop being measured at this time [s]; flows that arrived
    /// earlier are followed to completion.
    pub duration_s: f64,
    pub warmup: Warmup,
    pub seed: u64,
    /// A cell whose user count exceeds this is flagged unstable.
    pub max_users_cap: usize,
    /// Batches used for the batch-means Little's law check.
    pub batches: usize,
    /// Draws of the user population per cell in the static baseline.
    pub static_draws: usize,
    /// Integration points per cell used to locate cell boundaries.
    pub points_per_cell: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            duration_s: 2000.0,
            warmup: Warmup::Fixed(200.0),
            seed: 1,
            max_users_cap: 1000,
            batches: 20,
            static_draws: 200,
            points_per_cell: 200.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, value, reason| {
            Err(Error::InvalidParameter {
                name,
                value,
                reason,
            })
        };
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return bad("duration_s", self.duration_s, "must be positive");
        }
        match self.warmup {
            Warmup::Fixed(w) if !(w >= 0.0 && w < self.duration_s) => {
                return bad("warmup_s", w, "must lie in [0, duration_s)");
            }
            Warmup::Auto { window_s } if !(window_s > 0.0 && window_s < 0.5 * self.duration_s) => {
                return bad(
                    "warmup_window_s",
                    window_s,
                    "must lie in (0, duration_s / 2)",
                );
            }
            _ => {}
        }
        if self.max_users_cap == 0 {
            return bad("max_users_cap", 0.0, "must be positive");
        }
        if self.batches < 2 {
            return bad("batches", self.batches as f64, "must be at least 2");
        }
        if self.static_draws == 0 {
            return bad("static_draws", 0.0, "must be positive");
        }
        if !(self.points_per_cell >= 1.0) {
            return bad(
                "points_per_cell",
                self.points_per_cell,
                "must be at least 1",
            );
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Arrival,
    Departure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowEvent {
    pub kind: EventKind,
    pub time: f64,
    pub position: [f64; 2],
    pub remaining_bits: f64,
}

/// A flow as drawn by an arrival sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flow {
    pub position: [f64; 2],
    pub size_bits: f64,
    /// Rate the flow would get alone [bit/s].
    pub rate: f64,
}

/// Batch-means comparison of the time-average user count with
/// arrival rate × mean sojourn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LittleCheck {
    pub users: f64,
    pub rate_times_sojourn: f64,
    pub diff_mean: f64,
    pub diff_stderr: f64,
}

impl LittleCheck {
    pub fn holds(&self, k: f64) -> bool {
        self.diff_mean.abs() <= k * self.diff_stderr + 1e-12 * self.users.abs()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PsCellStats {
    pub warmup_s: f64,
    pub warmup_converged: bool,
    pub measured_s: f64,
    /// Time fraction with at least one active flow.
    pub rho_hat: f64,
    pub mean_users: f64,
    /// Flows arriving in the measurement window.
    pub arrivals: u64,
    pub completed_flows: u64,
    pub sum_size_bits: f64,
    pub sum_sojourn_s: f64,
    /// Sum over completed flows of size / sojourn.
    pub sum_flow_rate: f64,
    pub unstable: bool,
    pub little: LittleCheck,
}

impl PsCellStats {
    /// Bits delivered per second of sojourn, `Σ size / Σ sojourn`.
    pub fn flow_throughput(&self) -> f64 {
        self.sum_size_bits / self.sum_sojourn_s
    }

    /// Average over flows of `size / sojourn`.
    pub fn mean_flow_rate(&self) -> f64 {
        self.sum_flow_rate / self.completed_flows as f64
    }

    pub fn mean_sojourn(&self) -> f64 {
        self.sum_sojourn_s / self.completed_flows as f64
    }

    pub fn arrival_rate(&self) -> f64 {
        self.arrivals as f64 / self.measured_s
    }
}

struct Active {
    tag: f64,
    arrival: f64,
    size: f64,
    tagged: bool,
    position: [f64; 2],
}

impl PartialEq for Active {
    fn eq(&self, other: &Self) -> bool {
        self.tag == other.tag
    }
}

impl Eq for Active {}

impl PartialOrd for Active {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Active {
    // Reversed: the heap top is the smallest finish tag.
    fn cmp(&self, other: &Self) -> Ordering {
        other.tag.total_cmp(&self.tag)
    }
}

/// Time-integral bookkeeping: warmup detection and the measurement window.
struct Meter {
    horizon: f64,
    warmup: Warmup,
    t0: Option<f64>,
    converged: bool,
    // Auto warmup
    integral: f64,
    next_check: f64,
    prev_avg: Option<f64>,
    // Measurement
    batches: usize,
    batch_len: f64,
    busy: f64,
    area: f64,
    batch_area: Vec<f64>,
    batch_sojourn: Vec<f64>,
}

impl Meter {
    fn new(cfg: &SimConfig) -> Self {
        let mut m = Self {
            horizon: cfg.duration_s,
            warmup: cfg.warmup,
            t0: None,
            converged: false,
            integral: 0.0,
            next_check: 0.0,
            prev_avg: None,
            batches: cfg.batches,
            batch_len: 0.0,
            busy: 0.0,
            area: 0.0,
            batch_area: vec![0.0; cfg.batches],
            batch_sojourn: vec![0.0; cfg.batches],
        };
        match cfg.warmup {
            Warmup::Fixed(w) => m.start(w, true),
            Warmup::Auto { window_s } => m.next_check = window_s,
        }
        m
    }

    fn start(&mut self, t0: f64, converged: bool) {
        self.t0 = Some(t0);
        self.converged = converged;
        self.batch_len = (self.horizon - t0) / self.batches as f64;
    }

    fn measuring(&self, t: f64) -> bool {
        matches!(self.t0, Some(t0) if t >= t0 && t < self.horizon)
    }

    fn batch_of(&self, t: f64) -> usize {
        let t0 = self.t0.unwrap_or(0.0);
        (((t - t0) / self.batch_len) as usize).min(self.batches - 1)
    }

    /// Accounts for `n` users over `[a, b]`.
    fn advance(&mut self, a: f64, b: f64, n: usize) {
        let nf = n as f64;
        if self.t0.is_none() {
            let Warmup::Auto { window_s } = self.warmup else {
                unreachable!("fixed warmup starts immediately")
            };
            let cap = 0.5 * self.horizon;
            while self.t0.is_none() && self.next_check <= b {
                let c = self.next_check;
                let avg = (self.integral + nf * (c - a)) / c;
                match self.prev_avg {
                    Some(p) if (avg - p).abs() <= 0.01 * p || (avg == 0.0 && p == 0.0) => {
                        self.start(c, true);
                    }
                    _ if c + window_s > cap => self.start(c, false),
                    _ => {
                        self.prev_avg = Some(avg);
                        self.next_check += window_s;
                    }
                }
            }
            self.integral += nf * (b - a);
        }
        let Some(t0) = self.t0 else { return };
        let lo = a.max(t0);
        let hi = b.min(self.horizon);
        if hi <= lo {
            return;
        }
        if n > 0 {
            self.busy += hi - lo;
            self.area += nf * (hi - lo);
            let mut s = lo;
            while s < hi {
                let k = self.batch_of(s);
                let end = (t0 + (k + 1) as f64 * self.batch_len).min(hi);
                let end = if k + 1 == self.batches { hi } else { end };
                self.batch_area[k] += nf * (end - s);
                if end <= s {
                    break;
                }
                s = end;
            }
        }
    }
}

/// Simulates one processor-sharing queue.
///
/// Candidate arrivals come at `candidate_rate` per second; `sampler` turns
/// each into a flow or rejects it (thinning). Events are appended to `log`
/// when given.
pub fn simulate_ps_cell<R, S>(
    candidate_rate: f64,
    mut sampler: S,
    cfg: &SimConfig,
    rng: &mut R,
    mut log: Option<&mut Vec<FlowEvent>>,
) -> Result<PsCellStats>
where
    R: Rng,
    S: FnMut(&mut R) -> Option<Flow>,
{
    cfg.validate()?;
    if !(candidate_rate >= 0.0 && candidate_rate.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "candidate_rate",
            value: candidate_rate,
            reason: "must be finite and non-negative",
        });
    }
    let horizon = cfg.duration_s;
    let gap = (candidate_rate > 0.0).then(|| Exp::new(candidate_rate).expect("positive rate"));
    let mut next_arrival = match &gap {
        Some(e) => e.sample(rng),
        None => f64::INFINITY,
    };
    let mut meter = Meter::new(cfg);
    let mut heap: BinaryHeap<Active> = BinaryHeap::new();
    let (mut t, mut v) = (0.0f64, 0.0f64);
    let mut stats = PsCellStats::default();
    let mut tagged_active = 0usize;

    loop {
        let n = heap.len();
        let t_dep = heap
            .peek()
            .map_or(f64::INFINITY, |a| t + (a.tag - v).max(0.0) * n as f64);
        let t_next = t_dep.min(next_arrival);
        if t_next >= horizon && tagged_active == 0 {
            meter.advance(t, horizon, n);
            break;
        }
        meter.advance(t, t_next, n);
        if n > 0 {
            v += (t_next - t) / n as f64;
        }
        t = t_next;

        if t_dep <= next_arrival {
            let f = heap.pop().expect("departure from a busy queue");
            v = f.tag;
            if f.tagged {
                tagged_active -= 1;
                let sojourn = t - f.arrival;
                stats.completed_flows += 1;
                stats.sum_size_bits += f.size;
                stats.sum_sojourn_s += sojourn;
                if sojourn > 0.0 {
                    stats.sum_flow_rate += f.size / sojourn;
                }
                let k = meter.batch_of(f.arrival);
                meter.batch_sojourn[k] += sojourn;
            }
            if let Some(log) = log.as_deref_mut() {
                log.push(FlowEvent {
                    kind: EventKind::Departure,
                    time: t,
                    position: f.position,
                    remaining_bits: 0.0,
                });
            }
        } else {
            next_arrival = t + gap.as_ref().expect("arrivals enabled").sample(rng);
            let Some(flow) = sampler(rng) else { continue };
            if !(flow.rate > 0.0 && flow.rate.is_finite()) {
                continue;
            }
            let tagged = meter.measuring(t);
            if tagged {
                tagged_active += 1;
                stats.arrivals += 1;
            }
            heap.push(Active {
                tag: v + flow.size_bits / flow.rate,
                arrival: t,
                size: flow.size_bits,
                tagged,
                position: flow.position,
            });
            if let Some(log) = log.as_deref_mut() {
                log.push(FlowEvent {
                    kind: EventKind::Arrival,
                    time: t,
                    position: flow.position,
                    remaining_bits: flow.size_bits,
                });
            }
            if heap.len() > cfg.max_users_cap {
                stats.unstable = true;
                break;
            }
        }
    }

    let t0 = meter.t0.unwrap_or(horizon);
    stats.warmup_s = t0;
    stats.warmup_converged = meter.converged;
    stats.measured_s = horizon - t0;
    if stats.measured_s > 0.0 {
        stats.rho_hat = meter.busy / stats.measured_s;
        stats.mean_users = meter.area / stats.measured_s;
    }
    if !stats.unstable && meter.batch_len > 0.0 {
        let diffs: Vec<f64> = meter
            .batch_area
            .iter()
            .zip(&meter.batch_sojourn)
            .map(|(a, s)| (a - s) / meter.batch_len)
            .collect();
        let (diff_mean, diff_stderr) = mean_stderr(&diffs);
        stats.little = LittleCheck {
            users: stats.mean_users,
            rate_times_sojourn: meter.batch_sojourn.iter().sum::<f64>() / stats.measured_s,
            diff_mean,
            diff_stderr,
        };
    }
    Ok(stats)
}

/// One BS serving a disk of area `area_m2` centred on it.
pub fn simulate_disk_cell(
    area_m2: f64,
    model: &LoadModel,
    cfg: &SimConfig,
    log: Option<&mut Vec<FlowEvent>>,
) -> Result<PsCellStats> {
    if !(area_m2 > 0.0) {
        return Err(Error::InvalidParameter {
            name: "area_m2",
            value: area_m2,
            reason: "must be positive",
        });
    }
    let radius = (area_m2 / PI).sqrt();
    let (xi, alpha, bw) = (model.xi(), model.alpha(), model.net.bandwidth_hz);
    let size = Exp::new(1.0 / model.traffic.sigma_bits).map_err(|_| Error::InvalidParameter {
        name: "sigma_bits",
        value: model.traffic.sigma_bits,
        reason: "must be positive",
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sampler = |rng: &mut ChaCha8Rng| {
        let r = radius * rng.random::<f64>().sqrt();
        let th = 2.0 * PI * rng.random::<f64>();
        Some(Flow {
            position: [r * th.cos(), r * th.sin()],
            size_bits: size.sample(rng),
            rate: shannon_rate(r * r, xi, alpha, bw),
        })
    };
    simulate_ps_cell(
        model.traffic.lambda_u * area_m2,
        sampler,
        cfg,
        &mut rng,
        log,
    )
}

/// Cells of a realization prepared for simulation: nearest-BS index and a
/// covering radius per cell.
pub struct CellSet<'a> {
    pub realization: &'a PppRealization,
    index: NearestIndex,
    /// Inner-window cells: `(bs_index, area_m2, load, covering radius,
    /// mean single-user rate)`.
    cells: Vec<(usize, f64, f64, f64, f64)>,
}

impl<'a> CellSet<'a> {
    pub fn build(r: &'a PppRealization, model: &LoadModel, cfg: &SimConfig) -> Self {
        let index = NearestIndex::new(&r.points, r.window_half);
        let n_points = (cfg.points_per_cell * r.points.len() as f64).ceil() as usize;
        let scan = scan_with_index(r, &index, model, n_points, Sampling::Stratified);
        // A cell point can sit up to one stratum diagonal past the farthest
        // sampled point.
        let margin = 2.0 * (2.0 * scan.point_area).sqrt();
        let cells = scan
            .samples
            .iter()
            .filter(|s| s.in_inner_window)
            .map(|s| {
                let j = s.bs_index;
                (
                    j,
                    s.area_m2,
                    s.load,
                    scan.reach[j] + margin,
                    scan.mean_rate[j],
                )
            })
            .collect();
        Self {
            realization: r,
            index,
            cells,
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    fn point_in_cell(
        &self,
        j: usize,
        radius: f64,
        rng: &mut ChaCha8Rng,
    ) -> Option<([f64; 2], f64)> {
        let c = self.realization.points[j];
        let r = radius * rng.random::<f64>().sqrt();
        let th = 2.0 * PI * rng.random::<f64>();
        let p = [c[0] + r * th.cos(), c[1] + r * th.sin()];
        (self.index.nearest(p).0 == j).then_some((p, r * r))
    }

    pub fn simulate_dynamic(
        &self,
        model: &LoadModel,
        cfg: &SimConfig,
    ) -> Result<Vec<CellSimResult>> {
        cfg.validate()?;
        let (xi, alpha, bw) = (model.xi(), model.alpha(), model.net.bandwidth_hz);
        let size =
            Exp::new(1.0 / model.traffic.sigma_bits).map_err(|_| Error::InvalidParameter {
                name: "sigma_bits",
                value: model.traffic.sigma_bits,
                reason: "must be positive",
            })?;
        let base = sub_seed(cfg.seed, self.realization.seed);
        self.cells
            .par_iter()
            .map(|&(j, area, load, radius, mean_rate)| {
                let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(base, j as u64));
                let sampler = |rng: &mut ChaCha8Rng| {
                    let (position, d2) = self.point_in_cell(j, radius, rng)?;
                    Some(Flow {
                        position,
                        size_bits: size.sample(rng),
                        rate: shannon_rate(d2, xi, alpha, bw),
                    })
                };
                let rate = model.traffic.lambda_u * PI * radius * radius;
                let stats = simulate_ps_cell(rate, sampler, cfg, &mut rng, None)?;
                Ok(CellSimResult {
                    bs_index: j,
                    area_m2: area,
                    load_estimate: load,
                    single_user_rate: mean_rate,
                    stats,
                })
            })
            .collect()
    }

    pub fn simulate_static(
        &self,
        model: &LoadModel,
        mean_users: f64,
        cfg: &SimConfig,
    ) -> Result<StaticResult> {
        cfg.validate()?;
        if !(mean_users > 0.0 && mean_users.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "mean_users",
                value: mean_users,
                reason: "must be positive",
            });
        }
        let (xi, alpha, bw) = (model.xi(), model.alpha(), model.net.bandwidth_hz);
        let poisson = Poisson::new(mean_users).map_err(|_| Error::InvalidParameter {
            name: "mean_users",
            value: mean_users,
            reason: "out of range",
        })?;
        let base = sub_seed(cfg.seed ^ STATIC_STREAM, self.realization.seed);
        let per_cell: Vec<(f64, u64, u64)> = self
            .cells
            .par_iter()
            .map(|&(j, _, _, radius, _)| {
                let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(base, j as u64));
                let (mut sum, mut users, mut empty) = (0.0, 0u64, 0u64);
                for _ in 0..cfg.static_draws {
                    let n = poisson.sample(&mut rng) as u64;
                    if n == 0 {
                        empty += 1;
                        continue;
                    }
                    let mut placed = 0;
                    while placed < n {
                        if let Some((_, d2)) = self.point_in_cell(j, radius, &mut rng) {
                            sum += shannon_rate(d2, xi, alpha, bw) / n as f64;
                            placed += 1;
                        }
                    }
                    users += n;
                }
                (sum, users, empty)
            })
            .collect();
        let clusters: Vec<(f64, f64)> = per_cell.iter().map(|&(s, u, _)| (s, u as f64)).collect();
        Ok(StaticResult {
            throughput: Estimate::ratio(&clusters),
            user_samples: per_cell.iter().map(|c| c.1).sum(),
            empty_draws: per_cell.iter().map(|c| c.2).sum(),
        })
    }
}

/// Dynamic simulation of every inner-window cell of `r`.
pub fn simulate_dynamic(
    r: &PppRealization,
    model: &LoadModel,
    cfg: &SimConfig,
) -> Result<DynamicResult> {
    let cells = CellSet::build(r, model, cfg).simulate_dynamic(model, cfg)?;
    Ok(DynamicResult::from_cells(cells))
}

/// Full-buffer baseline: Poisson(`mean_users`) users uniform in each cell.
pub fn simulate_static_ppp_users(
    r: &PppRealization,
    model: &LoadModel,
    mean_users: f64,
    cfg: &SimConfig,
) -> Result<StaticResult> {
    CellSet::build(r, model, cfg).simulate_static(model, mean_users, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSimResult {
    pub bs_index: usize,
    pub area_m2: f64,
    /// Load from the geometric integration, for comparison with `rho_hat`.
    pub load_estimate: f64,
    /// Mean rate of a lone user placed uniformly in the cell [bit/s].
    pub single_user_rate: f64,
    pub stats: PsCellStats,
}

/// Value with a standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    /// Ratio estimator `Σy / Σx` over independent clusters `(y, x)` with its
    /// delta-method standard error.
    pub fn ratio(clusters: &[(f64, f64)]) -> Self {
        let sy: f64 = clusters.iter().map(|c| c.0).sum();
        let sx: f64 = clusters.iter().map(|c| c.1).sum();
        let value = sy / sx;
        let k = clusters.len() as f64;
        let stderr = if k > 1.0 {
            let ss: f64 = clusters.iter().map(|c| (c.0 - value * c.1).powi(2)).sum();
            (k / (k - 1.0) * ss).sqrt() / sx
        } else {
            f64::NAN
        };
        Self { value, stderr }
    }

    pub fn ci95(&self) -> (f64, f64) {
        (
            self.value - 1.96 * self.stderr,
            self.value + 1.96 * self.stderr,
        )
    }

    /// True when the 95% intervals of the two estimates do not overlap.
    pub fn separated_from(&self, other: &Estimate) -> bool {
        let (a_lo, a_hi) = self.ci95();
        let (b_lo, b_hi) = other.ci95();
        a_hi < b_lo || b_hi < a_lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicResult {
    pub cells: Vec<CellSimResult>,
    pub unstable_cells: usize,
    /// `Σ size / Σ sojourn` over stable cells.
    pub flow_throughput: Estimate,
    /// Mean over flows of `size / sojourn`.
    pub mean_flow_rate: Estimate,
    /// Mean busy fraction of stable cells.
    pub rho_bar: f64,
    pub mean_users: f64,
    /// Lone-user rate averaged uniformly over space.
    pub single_user_uniform: f64,
    /// Lone-user rate averaged per cell, then over cells.
    pub single_user_per_cell: f64,
}

impl DynamicResult {
    pub fn from_cells(cells: Vec<CellSimResult>) -> Self {
        let stable: Vec<&CellSimResult> = cells.iter().filter(|c| !c.stats.unstable).collect();
        let tp: Vec<(f64, f64)> = stable
            .iter()
            .map(|c| (c.stats.sum_size_bits, c.stats.sum_sojourn_s))
            .collect();
        let fr: Vec<(f64, f64)> = stable
            .iter()
            .map(|c| (c.stats.sum_flow_rate, c.stats.completed_flows as f64))
            .collect();
        let k = stable.len() as f64;
        let area: f64 = cells.iter().map(|c| c.area_m2).sum();
        Self {
            unstable_cells: cells.len() - stable.len(),
            flow_throughput: Estimate::ratio(&tp),
            mean_flow_rate: Estimate::ratio(&fr),
            rho_bar: stable.iter().map(|c| c.stats.rho_hat).sum::<f64>() / k,
            mean_users: stable.iter().map(|c| c.stats.mean_users).sum::<f64>() / k,
            single_user_uniform: cells
                .iter()
                .map(|c| c.area_m2 * c.single_user_rate)
                .sum::<f64>()
                / area,
            single_user_per_cell: cells.iter().map(|c| c.single_user_rate).sum::<f64>()
                / cells.len() as f64,
            cells,
        }
    }

    /// Per-cell CSV: `cell_index,rho_hat,mean_users,completed_flows,unstable_flag`.
    pub fn write_cells_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "cell_index,rho_hat,mean_users,completed_flows,unstable_flag"
        )?;
        for c in &self.cells {
            writeln!(
                out,
                "{},{:e},{:e},{},{}",
                c.bs_index,
                c.stats.rho_hat,
                c.stats.mean_users,
                c.stats.completed_flows,
                u8::from(c.stats.unstable)
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticResult {
    /// Per-user average of `B/n·log2(1 + SNR)`.
    pub throughput: Estimate,
    pub user_samples: u64,
    /// Draws with no user; they contribute nothing.
    pub empty_draws: u64,
}

/// Metadata record for a simulation run.
pub fn run_metadata(model: &LoadModel, cfg: &SimConfig) -> serde_json::Value {
    serde_json::json!({
        "seed": cfg.seed,
        "duration_s": cfg.duration_s,
        "warmup": cfg.warmup,
        "sim": cfg,
        "model": model,
    })
}
