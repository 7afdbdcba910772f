//! Experiment suite: method comparison over instance families, ablations,
//! weight sweeps and report emission.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use amrsched_solver::{SolveLimits, Status};

use crate::audit::{audit, soc_trace, SocPoint};
use crate::baselines::{charger_unaware, energy_aware, repair_fifo, rule_based, DispatchPolicy};
use crate::domain::{compute_metrics, objective, Config, DomainError, FleetSchedule, Instance, ObjectiveMode};
use crate::formulation::{build_monolithic, solve_monolithic, BuildOptions};
use crate::generate::{generate, GenParams};
use crate::matheuristic::{run_with, MatheuristicSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Threshold-charging dispatch.
    Rule,
    /// Monolithic model without degradation terms.
    Energy,
    /// Monolithic model without charger capacity, repaired FIFO.
    NoCharger,
    Monolithic,
    Matheuristic,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Rule,
        Method::Energy,
        Method::NoCharger,
        Method::Monolithic,
        Method::Matheuristic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Rule => "rule",
            Method::Energy => "energy",
            Method::NoCharger => "nocharger",
            Method::Monolithic => "monolithic",
            Method::Matheuristic => "matheuristic",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method `{s}`"))
    }
}

/// One model component switched off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    #[default]
    None,
    /// Idle-aging coefficient set to zero.
    NoIdleAging,
    /// Charging-mode aging set to zero.
    NoChargeAging,
    /// Charger capacity dropped from the model; the result is repaired FIFO.
    NoChargerCapacity,
    /// Balancing weight set to zero.
    NoBalance,
    /// A single McCormick box per transition.
    SingleBox,
}

impl Ablation {
    pub fn name(self) -> &'static str {
        match self {
            Ablation::None => "none",
            Ablation::NoIdleAging => "no_idle_aging",
            Ablation::NoChargeAging => "no_charge_aging",
            Ablation::NoChargerCapacity => "no_charger_capacity",
            Ablation::NoBalance => "no_balance",
            Ablation::SingleBox => "single_box",
        }
    }

    /// Instance, weights and build options the methods see under this ablation.
    pub fn apply(self, instance: &Instance, config: &Config) -> (Instance, Config, BuildOptions) {
        let mut inst = instance.clone();
        let mut cfg = config.clone();
        let mut opts = BuildOptions::default();
        match self {
            Ablation::None => {}
            Ablation::NoIdleAging => inst.robots.iter_mut().for_each(|r| r.idle_aging = 0.0),
            Ablation::NoChargeAging => inst
                .robots
                .iter_mut()
                .flat_map(|r| r.modes.iter_mut())
                .for_each(|m| m.aging = 0.0),
            Ablation::NoChargerCapacity => opts.charger_capacity = false,
            Ablation::NoBalance => cfg.rho = 0.0,
            Ablation::SingleBox => {
                cfg.p_s = 1;
                cfg.p_w = 1;
            }
        }
        (inst, cfg, opts)
    }
}

/// Instance family `(R, K, M)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Family {
    pub robots: usize,
    pub tasks: usize,
    pub chargers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSpec {
    pub families: Vec<Family>,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub ablations: Vec<Ablation>,
    /// Initial SOC override for every robot.
    pub initial_soc: Option<f64>,
    pub config: Config,
    /// Per-cell time budget in seconds.
    pub time_limit: f64,
    /// Monolithic cells whose model has more binaries than this are skipped.
    pub monolithic_max_binaries: usize,
    pub workers: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let mut families = Vec::new();
        for robots in [2, 3, 4] {
            for tasks in [6, 10, 15] {
                for chargers in [1, 2] {
                    families.push(Family { robots, tasks, chargers });
                }
            }
        }
        Self {
            families,
            seeds: (0..10).collect(),
            methods: Method::ALL.to_vec(),
            ablations: vec![Ablation::None],
            initial_soc: None,
            config: Config::default(),
            time_limit: 120.0,
            monolithic_max_binaries: 2500,
            workers: 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Spec(m.into()));
        if self.families.is_empty() {
            return bad("no instance families");
        }
        if self.methods.is_empty() {
            return bad("no methods");
        }
        if self.seeds.is_empty() {
            return bad("no seeds");
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return bad("seeds must be distinct");
        }
        if !(self.time_limit > 0.0) {
            return bad("time limit must be positive");
        }
        self.config.validate()?;
        Ok(())
    }

    fn limits(&self) -> SolveLimits {
        SolveLimits {
            rel_gap: self.config.rel_gap,
            int_tol: self.config.int_tol,
            ..SolveLimits::default()
        }
        .with_time_limit(Duration::from_secs_f64(self.time_limit))
    }

    pub fn instance(&self, family: Family, seed: u64) -> Result<Instance, DomainError> {
        let mut inst = generate(&GenParams::new(family.robots, family.tasks, family.chargers, seed))?;
        if let Some(s0) = self.initial_soc {
            inst.robots.iter_mut().for_each(|r| r.s0 = s0);
        }
        Ok(inst)
    }
}

/// One `(instance, method, ablation)` cell of the suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub instance: String,
    pub robots: usize,
    pub tasks: usize,
    pub chargers: usize,
    pub seed: u64,
    pub method: Method,
    pub ablation: Ablation,
    /// The schedule exists and passed the audit.
    pub valid: bool,
    pub status: String,
    /// Exact objective under the unablated weights.
    pub objective: Option<f64>,
    pub total_degradation: Option<f64>,
    pub max_degradation: Option<f64>,
    pub imbalance: Option<f64>,
    pub total_tardiness: Option<f64>,
    pub throughput: Option<usize>,
    pub total_queueing: Option<f64>,
    pub mccormick_gap: Option<f64>,
    /// Relative excess over a proven monolithic optimum of the same cell.
    pub gap_vs_monolithic: Option<f64>,
    pub error: Option<String>,
    /// Wall time; the only nondeterministic column.
    pub solve_seconds: f64,
}

/// Suite output as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteResults {
    pub spec: ExperimentSpec,
    pub rows: Vec<ResultRow>,
}

/// Column order of the CSV report.
pub const CSV_HEADER: [&str; 20] = [
    "instance",
    "robots",
    "tasks",
    "chargers",
    "seed",
    "method",
    "ablation",
    "valid",
    "status",
    "objective",
    "total_degradation",
    "max_degradation",
    "imbalance",
    "total_tardiness",
    "throughput",
    "total_queueing",
    "mccormick_gap",
    "gap_vs_monolithic",
    "error",
    "solve_seconds",
];

/// Schedule and solver status of one method run.
struct Produced {
    schedule: FleetSchedule,
    status: String,
}

fn status_name(s: Status) -> String {
    format!("{s:?}").to_lowercase()
}

fn produce(
    method: Method,
    inst: &Instance,
    cfg: &Config,
    opts: &BuildOptions,
    spec: &ExperimentSpec,
) -> Result<Option<Produced>, String> {
    let limits = spec.limits();
    let e = |e: &dyn fmt::Display| e.to_string();
    Ok(Some(match method {
        Method::Rule => Produced {
            schedule: rule_based(inst, &DispatchPolicy::default()).map_err(|x| e(&x))?,
            status: "heuristic".into(),
        },
        Method::Energy => {
            let o = energy_aware(inst, cfg, &limits).map_err(|x| e(&x))?;
            Produced {
                schedule: o.schedule,
                status: status_name(o.status),
            }
        }
        Method::NoCharger => {
            let o = charger_unaware(inst, cfg, &limits).map_err(|x| e(&x))?;
            Produced {
                schedule: o.repaired,
                status: status_name(o.planned.status),
            }
        }
        Method::Monolithic => {
            let bins = build_monolithic(inst, cfg, opts).model.num_binaries();
            if bins > spec.monolithic_max_binaries {
                return Ok(None);
            }
            let (_, o) = solve_monolithic(inst, cfg, opts, &limits).map_err(|x| e(&x))?;
            Produced {
                schedule: o.schedule,
                status: status_name(o.status),
            }
        }
        Method::Matheuristic => {
            let settings = MatheuristicSettings {
                time_limit: limits.time_limit,
                build: opts.clone(),
                ..MatheuristicSettings::default()
            };
            let o = run_with(inst, cfg, &settings, &limits).map_err(|x| e(&x))?;
            Produced {
                schedule: o.schedule,
                status: format!("{:?}", o.stop).to_lowercase(),
            }
        }
    }))
}

fn run_cell(spec: &ExperimentSpec, family: Family, seed: u64, method: Method, ablation: Ablation) -> ResultRow {
    let mut row = ResultRow {
        instance: format!("r{}k{}m{}s{}", family.robots, family.tasks, family.chargers, seed),
        robots: family.robots,
        tasks: family.tasks,
        chargers: family.chargers,
        seed,
        method,
        ablation,
        valid: false,
        status: String::new(),
        objective: None,
        total_degradation: None,
        max_degradation: None,
        imbalance: None,
        total_tardiness: None,
        throughput: None,
        total_queueing: None,
        mccormick_gap: None,
        gap_vs_monolithic: None,
        error: None,
        solve_seconds: 0.0,
    };
    let original = match spec.instance(family, seed) {
        Ok(i) => i,
        Err(e) => {
            row.status = "error".into();
            row.error = Some(e.to_string());
            return row;
        }
    };
    let (inst, cfg, opts) = ablation.apply(&original, &spec.config);
    let started = Instant::now();
    let produced = produce(method, &inst, &cfg, &opts, spec);
    row.solve_seconds = started.elapsed().as_secs_f64();
    let mut produced = match produced {
        Ok(Some(p)) => p,
        Ok(None) => {
            row.status = "skipped".into();
            return row;
        }
        Err(msg) => {
            row.status = "error".into();
            row.error = Some(msg);
            return row;
        }
    };
    row.status = produced.status;
    if ablation == Ablation::NoChargerCapacity && method != Method::Rule {
        match repair_fifo(&original, &produced.schedule) {
            Ok(s) => produced.schedule = s,
            Err(e) => {
                row.error = Some(e.to_string());
                return row;
            }
        }
    }
    // Metrics always use the unablated instance and weights.
    let mut schedule = produced.schedule;
    if let Err(e) = schedule.refresh_degradation(&original) {
        row.error = Some(e.to_string());
        return row;
    }
    match audit(&original, &schedule, spec.config.feas_tol.max(1e-6)) {
        Ok(rep) => {
            row.valid = rep.is_clean();
            row.mccormick_gap = Some(rep.mccormick_gap);
            if !row.valid {
                row.error = Some(format!("audit: max violation {:.3e}", rep.max_violation));
            }
        }
        Err(e) => {
            row.error = Some(format!("audit: {e}"));
            return row;
        }
    }
    if let Ok(m) = compute_metrics(&original, &schedule) {
        row.total_degradation = Some(m.total_degradation);
        row.max_degradation = Some(m.max_degradation);
        row.imbalance = Some(m.imbalance);
        row.total_tardiness = Some(m.total_tardiness);
        row.throughput = Some(m.throughput);
        row.total_queueing = Some(m.total_queueing);
    }
    row.objective = objective(&original, &schedule, &spec.config, ObjectiveMode::Exact).ok();
    row
}

/// Relative excess of `value` over a proven optimum.
pub fn relative_gap(value: f64, optimum: f64) -> Option<f64> {
    let diff = value - optimum;
    if optimum.abs() > 1e-12 {
        Some(diff / optimum.abs())
    } else if diff.abs() <= 1e-12 {
        Some(0.0)
    } else {
        None
    }
}

/// Runs every cell of the spec. Cell failures are recorded in their rows.
pub fn run_suite(spec: &ExperimentSpec) -> Result<Vec<ResultRow>, ExperimentError> {
    spec.validate()?;
    let ablations = if spec.ablations.is_empty() {
        vec![Ablation::None]
    } else {
        spec.ablations.clone()
    };
    let mut cells = Vec::new();
    for &family in &spec.families {
        for &seed in &spec.seeds {
            for &ablation in &ablations {
                for &method in &spec.methods {
                    cells.push((family, seed, method, ablation));
                }
            }
        }
    }
    let next = AtomicUsize::new(0);
    let out: Mutex<Vec<(usize, ResultRow)>> = Mutex::new(Vec::with_capacity(cells.len()));
    std::thread::scope(|scope| {
        for _ in 0..spec.workers.max(1) {
            scope.spawn(|| loop {
                let x = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(family, seed, method, ablation)) = cells.get(x) else {
                    break;
                };
                let row = run_cell(spec, family, seed, method, ablation);
                out.lock().expect("no worker panicked").push((x, row));
            });
        }
    });
    let mut rows = out.into_inner().expect("no worker panicked");
    rows.sort_by_key(|r| r.0);
    let mut rows: Vec<ResultRow> = rows.into_iter().map(|r| r.1).collect();

    let optima: Vec<(String, Ablation, f64)> = rows
        .iter()
        .filter(|r| r.method == Method::Monolithic && r.valid && r.status == "optimal")
        .filter_map(|r| r.objective.map(|o| (r.instance.clone(), r.ablation, o)))
        .collect();
    for row in &mut rows {
        let opt = optima.iter().find(|o| o.0 == row.instance && o.1 == row.ablation);
        if let (Some(o), Some(v), true) = (opt, row.objective, row.valid) {
            row.gap_vs_monolithic = relative_gap(v, o.2);
        }
    }
    Ok(rows)
}

/// Mean of a column over the valid rows of one method and ablation.
pub fn mean_valid(rows: &[ResultRow], method: Method, ablation: Ablation, col: impl Fn(&ResultRow) -> Option<f64>) -> Option<f64> {
    let vals: Vec<f64> = rows
        .iter()
        .filter(|r| r.method == method && r.ablation == ablation && r.valid)
        .filter_map(col)
        .collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV with the columns of [`CSV_HEADER`].
pub fn to_csv(rows: &[ResultRow]) -> Result<String, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.instance.clone(),
            r.robots.to_string(),
            r.tasks.to_string(),
            r.chargers.to_string(),
            r.seed.to_string(),
            r.method.to_string(),
            r.ablation.name().to_string(),
            r.valid.to_string(),
            r.status.clone(),
            opt(r.objective),
            opt(r.total_degradation),
            opt(r.max_degradation),
            opt(r.imbalance),
            opt(r.total_tardiness),
            opt(r.throughput),
            opt(r.total_queueing),
            opt(r.mccormick_gap),
            opt(r.gap_vs_monolithic),
            r.error.clone().unwrap_or_default(),
            format!("{:.3}", r.solve_seconds),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// CSV without the wall-time column.
pub fn to_csv_deterministic(rows: &[ResultRow]) -> Result<String, ExperimentError> {
    let full = to_csv(rows)?;
    let mut r = csv::Reader::from_reader(full.as_bytes());
    let mut w = csv::Writer::from_writer(Vec::new());
    let keep = CSV_HEADER.len() - 1;
    w.write_record(&CSV_HEADER[..keep])?;
    for rec in r.records() {
        let rec = rec?;
        w.write_record(rec.iter().take(keep))?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One point of the degradation-tardiness trade-off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub mu: f64,
    pub total_degradation: f64,
    pub total_tardiness: f64,
    pub objective: f64,
}

/// Matheuristic runs for each tardiness weight, ordered by weight.
pub fn pareto_sweep(
    instance: &Instance,
    mu_values: &[f64],
    config: &Config,
    settings: &MatheuristicSettings,
    limits: &SolveLimits,
) -> Result<Vec<ParetoPoint>, ExperimentError> {
    if mu_values.len() < 2 {
        return Err(ExperimentError::Spec("a sweep needs at least two weights".into()));
    }
    let mut mus = mu_values.to_vec();
    mus.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(mus.len());
    for mu in mus {
        let cfg = Config { mu, ..config.clone() };
        let res = run_with(instance, &cfg, settings, limits).map_err(|e| ExperimentError::Spec(e.to_string()))?;
        let m = compute_metrics(instance, &res.schedule)?;
        out.push(ParetoPoint {
            mu,
            total_degradation: m.total_degradation,
            total_tardiness: m.total_tardiness,
            objective: res.objective,
        });
    }
    Ok(out)
}

pub fn pareto_csv(points: &[ParetoPoint]) -> Result<String, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in points {
        w.serialize(p)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

const W: f64 = 480.0;
const H: f64 = 320.0;
const PAD: f64 = 40.0;

fn scale(v: f64, lo: f64, hi: f64, out_lo: f64, out_hi: f64) -> f64 {
    if hi - lo <= 0.0 {
        (out_lo + out_hi) / 2.0
    } else {
        out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo)
    }
}

fn bounds(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    (v.clone().fold(f64::INFINITY, f64::min), v.fold(f64::NEG_INFINITY, f64::max))
}

fn svg_frame(body: &str, x_label: &str, y_label: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_label}</text>\n\
         <text x=\"12\" y=\"{}\" transform=\"rotate(-90 12 {})\" text-anchor=\"middle\">{y_label}</text>\n\
         {body}</svg>\n",
        W - 2.0 * PAD,
        H - 2.0 * PAD,
        W / 2.0,
        H - 10.0,
        H / 2.0,
        H / 2.0,
    )
}

/// Scatter of tardiness against degradation, one dot per weight.
pub fn pareto_svg(points: &[ParetoPoint]) -> String {
    let (x0, x1) = bounds(points.iter().map(|p| p.total_tardiness));
    let (y0, y1) = bounds(points.iter().map(|p| p.total_degradation));
    let mut body = String::new();
    for p in points {
        let x = scale(p.total_tardiness, x0, x1, PAD, W - PAD);
        let y = scale(p.total_degradation, y0, y1, H - PAD, PAD);
        body.push_str(&format!(
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"4\"><title>mu={}</title></circle>\n",
            p.mu
        ));
    }
    svg_frame(&body, "total tardiness", "total degradation")
}

/// SOC over time of one robot as a polyline through its trace points.
pub fn soc_svg(instance: &Instance, schedule: &FleetSchedule, robot: usize) -> String {
    let plan = &schedule.robots[robot];
    let trace: Vec<SocPoint> = soc_trace(instance, robot, &plan.legs, &schedule.tasks);
    let rb = &instance.robots[robot];
    let pts: Vec<String> = trace
        .iter()
        .map(|p| {
            let x = scale(p.time, 0.0, instance.horizon, PAD, W - PAD);
            let y = scale(p.soc, 0.0, rb.smax, H - PAD, PAD);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let y_min = scale(rb.smin, 0.0, rb.smax, H - PAD, PAD);
    let body = format!(
        "<line x1=\"{PAD}\" y1=\"{y_min:.2}\" x2=\"{}\" y2=\"{y_min:.2}\" stroke=\"gray\" stroke-dasharray=\"4\"/>\n\
         <polyline fill=\"none\" stroke=\"black\" points=\"{}\"/>\n",
        W - PAD,
        pts.join(" ")
    );
    svg_frame(&body, "time (min)", &format!("SOC robot {robot}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(methods: Vec<Method>) -> ExperimentSpec {
        ExperimentSpec {
            families: vec![Family {
                robots: 2,
                tasks: 4,
                chargers: 1,
            }],
            seeds: vec![0],
            methods,
            time_limit: 60.0,
            ..ExperimentSpec::default()
        }
    }

    #[test]
    fn empty_method_list_is_rejected() {
        let spec = small_spec(Vec::new());
        assert!(matches!(spec.validate(), Err(ExperimentError::Spec(_))));
        let spec = ExperimentSpec {
            seeds: vec![1, 1],
            ..small_spec(vec![Method::Rule])
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn method_names_parse_back() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("greedy".parse::<Method>().is_err());
    }

    #[test]
    fn one_row_csv_has_header_and_one_line() {
        let rows = run_suite(&small_spec(vec![Method::Rule])).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].valid, "{:?}", rows[0].error);
        let csv = to_csv(&rows).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert!(lines[1].starts_with("r2k4m1s0,2,4,1,0,rule,none,true,heuristic,"));
    }

    #[test]
    fn single_box_ablation_sets_partition_counts() {
        let i = generate(&GenParams::new(1, 2, 1, 0)).unwrap();
        let (_, cfg, _) = Ablation::SingleBox.apply(&i, &Config::default());
        assert_eq!((cfg.p_s, cfg.p_w), (1, 1));
        let (inst, _, _) = Ablation::NoChargeAging.apply(&i, &Config::default());
        assert!(inst.robots.iter().flat_map(|r| &r.modes).all(|m| m.aging == 0.0));
        let (_, _, opts) = Ablation::NoChargerCapacity.apply(&i, &Config::default());
        assert!(!opts.charger_capacity);
    }

    #[test]
    fn relative_gap_handles_zero_optimum() {
        assert_eq!(relative_gap(0.0, 0.0), Some(0.0));
        assert_eq!(relative_gap(1.0, 0.0), None);
        assert!((relative_gap(1.05, 1.0).unwrap() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn pareto_csv_is_ordered_by_weight() {
        let pts = vec![
            ParetoPoint {
                mu: 0.0,
                total_degradation: 0.1,
                total_tardiness: 5.0,
                objective: 0.2,
            },
            ParetoPoint {
                mu: 2.0,
                total_degradation: 0.2,
                total_tardiness: 1.0,
                objective: 2.3,
            },
        ];
        let csv = pareto_csv(&pts).unwrap();
        let mus: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
        assert!(mus.windows(2).all(|w| w[0] <= w[1]));
        assert!(pareto_svg(&pts).matches("<circle").count() == 2);
    }
}
