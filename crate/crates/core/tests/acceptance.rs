//! Acceptance suite. Prints one PASS/FAIL line per criterion plus INFO lines,
//! and exits nonzero if any criterion fails.

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use amrsched_core::audit::audit;
use amrsched_core::baselines::{energy_aware, rule_based, DispatchPolicy};
use amrsched_core::domain::{compute_metrics, objective, Config, FleetSchedule, Instance, ObjectiveMode};
use amrsched_core::experiments::{run_suite, to_csv_deterministic, ExperimentSpec, Family, Method};
use amrsched_core::formulation::bigm::window_slack;
use amrsched_core::formulation::{build_monolithic, solve_monolithic, BigMMode, BuildOptions, Cell, PartitionGrid};
use amrsched_core::generate::{generate, GenParams};
use amrsched_core::io::to_json;
use amrsched_core::matheuristic::{
    build_subproblem, run, solve_subproblem, MatheuristicOutcome, Pattern, PatternLeg, SubproblemStrategy,
};
use amrsched_core::rng::Rng;
use amrsched_solver::{solve_lp, Model, Sense, SolveLimits, Status, VarId, VarKind};

const AUDIT_TOL: f64 = 1e-6;
const REL_TOL: f64 = 1e-6;
const MONO_LIMIT: Duration = Duration::from_secs(120);
const SUITE_BUDGET: Duration = Duration::from_secs(30 * 60);

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, id: &str, ok: bool, detail: String) {
        if !ok {
            self.failed += 1;
        }
        println!("criterion {id}: {} | {detail}", if ok { "PASS" } else { "FAIL" });
    }

    fn info(&self, id: &str, detail: String) {
        println!("info {id}: {detail}");
    }
}

fn limits() -> SolveLimits {
    SolveLimits::default().with_time_limit(MONO_LIMIT)
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-12)
}

fn stressed(r: usize, k: usize, seed: u64, s0: f64) -> Instance {
    let mut inst = generate(&GenParams::new(r, k, 1, seed)).unwrap();
    inst.robots.iter_mut().for_each(|rb| rb.s0 = s0);
    inst
}

fn exact(inst: &Instance, s: &FleetSchedule) -> f64 {
    objective(inst, s, &Config::default(), ObjectiveMode::Exact).unwrap()
}

fn total_a(inst: &Instance, s: &FleetSchedule) -> f64 {
    compute_metrics(inst, s).unwrap().total_degradation
}

/// Largest `|idle_lin - s̄ w|` minus the gap bound of the box the point lies in, over all
/// charging legs with a linearized idle value. Nonpositive when every leg is within bound.
fn mccormick_excess(inst: &Instance, s: &FleetSchedule, cfg: &Config) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for plan in &s.robots {
        let rb = &inst.robots[plan.robot];
        let grid = PartitionGrid::uniform(rb.smin, rb.smax, cfg.p_s, inst.horizon, cfg.p_w);
        for c in plan.legs.iter().filter_map(|l| l.charge()) {
            let Some(lin) = c.idle_lin else { continue };
            let gap = (lin - c.post_soc * c.post_wait).abs();
            let bound = grid
                .cells()
                .filter(|(_, _, b)| b.contains(c.post_soc, c.post_wait, 1e-7))
                .map(|(_, _, b)| b.max_gap())
                .fold(f64::NEG_INFINITY, f64::max);
            worst = worst.max(gap - bound);
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// Independent enumeration oracle for one robot.
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
enum Choice {
    Direct,
    Charge(usize),
}

/// LP of a fixed single-robot route. `cells` gives one box per charging leg;
/// `None` drops the idle term's envelope (a relaxation with `ℓ >= 0`).
fn route_lp(inst: &Instance, cfg: &Config, order: &[usize], choice: &[Choice], cells: Option<&[Cell]>) -> Option<f64> {
    let rb = &inst.robots[0];
    let h = inst.horizon;
    let m = 0;
    let mut md = Model::new();
    let mut t_of = HashMap::new();
    let mut s_of = HashMap::new();
    for &k in order {
        let t = inst.task(k);
        let tv = md.add_var(format!("T{k}"), VarKind::Continuous, t.release, h, 0.0);
        let cap = window_slack(t.release, t.due);
        let tard = md.add_var(format!("tard{k}"), VarKind::Continuous, 0.0, cap, cfg.mu);
        let sv = md.add_var(format!("s{k}"), VarKind::Continuous, rb.smin + inst.energy(k), rb.smax, 0.0);
        md.add_row(format!("due{k}"), vec![(tv, 1.0), (tard, -1.0)], Sense::Le, t.due);
        t_of.insert(k, tv);
        s_of.insert(k, sv);
    }
    let deg_w = 1.0 + cfg.rho;
    let mut prev = 0usize;
    let mut charge_idx = 0;
    for (pos, &j) in order.iter().enumerate() {
        let i = prev;
        // Departure time and SOC at node i as (terms, constant).
        let mut dep_t: Vec<(VarId, f64)> = Vec::new();
        let mut dep_s: Vec<(VarId, f64)> = Vec::new();
        let c_t = inst.service(i);
        let mut c_s = -inst.energy(i);
        if i == 0 {
            c_s += rb.s0;
        } else {
            dep_t.push((t_of[&i], 1.0));
            dep_s.push((s_of[&i], 1.0));
        }
        let tj = t_of[&j];
        let sj = s_of[&j];
        match choice[pos] {
            Choice::Direct => {
                let tr = inst.direct(i, j);
                let mut row = vec![(tj, 1.0)];
                row.extend(dep_t.iter().map(|&(v, c)| (v, -c)));
                md.add_row(format!("time{pos}"), row, Sense::Ge, c_t + tr.time);
                let mut row = vec![(sj, 1.0)];
                row.extend(dep_s.iter().map(|&(v, c)| (v, -c)));
                md.add_row(format!("soc{pos}"), row, Sense::Eq, c_s - tr.energy);
            }
            Choice::Charge(l) => {
                let mode = &rb.modes[l];
                let to = inst.to_charger(i, m);
                let from = inst.from_charger(m, j);
                let b = md.add_var(format!("B{pos}"), VarKind::Continuous, 0.0, h, 0.0);
                let q = md.add_var(format!("q{pos}"), VarKind::Continuous, 0.0, h, cfg.lambda);
                let tc = md.add_var(format!("tc{pos}"), VarKind::Continuous, 0.0, h, deg_w * mode.aging);
                let w = md.add_var(format!("w{pos}"), VarKind::Continuous, 0.0, h, 0.0);
                let sb = md.add_var(format!("sb{pos}"), VarKind::Continuous, 0.0, rb.smax, 0.0);
                let ell = md.add_var(format!("l{pos}"), VarKind::Continuous, 0.0, rb.smax * h, deg_w * rb.idle_aging);
                let arrive = c_t + to.time;
                let mut row = vec![(b, 1.0)];
                row.extend(dep_t.iter().map(|&(v, c)| (v, -c)));
                md.add_row(format!("arr{pos}"), row, Sense::Ge, arrive);
                let mut row = vec![(q, 1.0), (b, -1.0)];
                row.extend(dep_t.iter().map(|&(v, c)| (v, c)));
                md.add_row(format!("queue{pos}"), row, Sense::Ge, -arrive);
                md.add_row(
                    format!("link{pos}"),
                    vec![(tj, 1.0), (b, -1.0), (tc, -1.0), (w, -1.0)],
                    Sense::Eq,
                    from.time,
                );
                let mut row: Vec<(VarId, f64)> = dep_s.clone();
                md.add_row(format!("reach{pos}"), row.clone(), Sense::Ge, rb.smin - c_s + to.energy);
                row = vec![(sb, 1.0), (tc, -mode.rate)];
                row.extend(dep_s.iter().map(|&(v, c)| (v, -c)));
                md.add_row(format!("post{pos}"), row, Sense::Eq, c_s - to.energy);
                md.add_row(format!("arrsoc{pos}"), vec![(sj, 1.0), (sb, -1.0)], Sense::Eq, -from.energy);
                if let Some(cells) = cells {
                    let c = cells[charge_idx];
                    md.add_row(format!("slo{pos}"), vec![(sb, 1.0)], Sense::Ge, c.s_lo);
                    md.add_row(format!("shi{pos}"), vec![(sb, 1.0)], Sense::Le, c.s_hi);
                    md.add_row(format!("wlo{pos}"), vec![(w, 1.0)], Sense::Ge, c.w_lo);
                    md.add_row(format!("whi{pos}"), vec![(w, 1.0)], Sense::Le, c.w_hi);
                    // ℓ against the four planes through the corners of the box.
                    let planes = [
                        (c.s_lo, c.w_lo, Sense::Ge),
                        (c.s_hi, c.w_hi, Sense::Ge),
                        (c.s_hi, c.w_lo, Sense::Le),
                        (c.s_lo, c.w_hi, Sense::Le),
                    ];
                    for (n, (s0, w0, sense)) in planes.into_iter().enumerate() {
                        md.add_row(
                            format!("env{pos}_{n}"),
                            vec![(ell, 1.0), (w, -s0), (sb, -w0)],
                            sense,
                            -s0 * w0,
                        );
                    }
                }
                charge_idx += 1;
            }
        }
        prev = j;
    }
    let res = solve_lp(&md).unwrap();
    (res.status == Status::Optimal).then(|| res.objective.unwrap())
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

/// Exhaustive optimum of a one-robot, one-charger instance serving every task.
fn enumerate_optimum(inst: &Instance, cfg: &Config) -> (f64, usize) {
    let n = inst.num_tasks();
    let modes = inst.robots[0].modes.len();
    let rb = &inst.robots[0];
    let grid = PartitionGrid::uniform(rb.smin, rb.smax, cfg.p_s, inst.horizon, cfg.p_w);
    let boxes: Vec<Cell> = grid.cells().map(|(_, _, c)| c).collect();
    let mut cands: Vec<(f64, Vec<usize>, Vec<Choice>)> = Vec::new();
    let mut lps = 0;
    for order in permutations(&(1..=n).collect::<Vec<_>>()) {
        let mut choices = vec![Vec::new()];
        for _ in 0..n {
            let mut next = Vec::new();
            for c in &choices {
                let mut d = c.clone();
                d.push(Choice::Direct);
                next.push(d);
                for l in 0..modes {
                    let mut d = c.clone();
                    d.push(Choice::Charge(l));
                    next.push(d);
                }
            }
            choices = next;
        }
        for ch in choices {
            lps += 1;
            if let Some(lb) = route_lp(inst, cfg, &order, &ch, None) {
                cands.push((lb, order.clone(), ch));
            }
        }
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = f64::INFINITY;
    for (lb, order, ch) in cands {
        if lb >= best - 1e-12 {
            break;
        }
        let c = ch.iter().filter(|x| matches!(x, Choice::Charge(_))).count();
        let mut idx = vec![0usize; c];
        loop {
            let sel: Vec<Cell> = idx.iter().map(|&i| boxes[i]).collect();
            lps += 1;
            if let Some(v) = route_lp(inst, cfg, &order, &ch, Some(&sel)) {
                best = best.min(v);
            }
            let mut p = 0;
            while p < c {
                idx[p] += 1;
                if idx[p] < boxes.len() {
                    break;
                }
                idx[p] = 0;
                p += 1;
            }
            if p == c {
                break;
            }
        }
    }
    (best, lps)
}

// ---------------------------------------------------------------------------

fn criterion_1(rep: &mut Report) {
    let cfg = Config::default();
    let mut ok = true;
    let mut worst_viol = 0.0_f64;
    let mut worst_time = 0.0_f64;
    for seed in 0..10 {
        let inst = generate(&GenParams::new(2, 5, 1, seed)).unwrap();
        let t = Instant::now();
        let (_, out) = solve_monolithic(&inst, &cfg, &BuildOptions::default(), &limits()).unwrap();
        let dt = t.elapsed().as_secs_f64();
        worst_time = worst_time.max(dt);
        let a = audit(&inst, &out.schedule, AUDIT_TOL).unwrap();
        worst_viol = worst_viol.max(a.max_violation);
        ok &= out.status == Status::Optimal && dt <= MONO_LIMIT.as_secs_f64() && a.max_violation <= AUDIT_TOL;
    }
    let mut oracle_ok = true;
    let mut worst_rel = 0.0_f64;
    let mut charged = 0;
    let mut lps = 0;
    let seeds = [0u64, 1, 2, 3, 4, 5];
    for &seed in &seeds {
        let inst = stressed(1, 3, seed, 0.15);
        let (_, out) = solve_monolithic(&inst, &cfg, &BuildOptions::default(), &limits()).unwrap();
        let (opt, n) = enumerate_optimum(&inst, &cfg);
        lps += n;
        if out.schedule.charges().count() > 0 {
            charged += 1;
        }
        let rel = (out.objective - opt).abs() / opt.abs().max(1e-12);
        worst_rel = worst_rel.max(if opt.abs() < 1e-12 { (out.objective - opt).abs() } else { rel });
        oracle_ok &= out.status == Status::Optimal && rel_close(out.objective, opt, REL_TOL);
    }
    rep.line(
        "1",
        ok && oracle_ok,
        format!(
            "R=2 K=5 M=1 x10: all optimal, slowest {worst_time:.2}s (limit 120s), max audit violation {worst_viol:.1e} (tol 1e-6); \
             R=1 K=3 s0=0.15 x{}: enumeration vs MILP worst rel diff {worst_rel:.1e} (tol 1e-6), {charged} optima charge, {lps} oracle LPs",
            seeds.len()
        ),
    );
}

fn criterion_2_and_6(rep: &mut Report, extra: &[(Instance, MatheuristicOutcome)]) {
    let cfg = Config::default();
    let mut worst_gap = 0.0_f64;
    let mut faster = 0;
    let mut ok = true;
    let mut runs = Vec::new();
    for seed in 0..10 {
        let inst = generate(&GenParams::new(2, 6, 1, seed)).unwrap();
        let t = Instant::now();
        let mh = run(&inst, &cfg, &limits()).unwrap();
        let t_mh = t.elapsed();
        let t = Instant::now();
        let (_, mono) = solve_monolithic(&inst, &cfg, &BuildOptions::default(), &limits()).unwrap();
        let t_mono = t.elapsed();
        let clean = audit(&inst, &mh.schedule, AUDIT_TOL).unwrap().is_clean();
        let opt = exact(&inst, &mono.schedule);
        let gap = if opt.abs() < 1e-12 { mh.objective - opt } else { (mh.objective - opt) / opt };
        worst_gap = worst_gap.max(gap);
        ok &= clean && mono.status == Status::Optimal && mh.objective <= opt * 1.05 + 1e-12;
        if t_mh < t_mono {
            faster += 1;
        }
        runs.push(mh);
    }
    rep.line(
        "2",
        ok && faster >= 8,
        format!("R=2 K=6 M=1 x10: worst gap vs monolithic {worst_gap:.2e} (tol 5%), faster on {faster}/10 (need 8)"),
    );

    let mut parts = Vec::new();
    for (inst, mh) in extra {
        let t = Instant::now();
        let (_, mono) = solve_monolithic(inst, &cfg, &BuildOptions::default(), &limits()).unwrap();
        let opt = exact(inst, &mono.schedule);
        parts.push(format!(
            "{:.3e}/{opt:.3e} ({:.1}s/{:.1}s)",
            mh.objective,
            mh.wall_time.as_secs_f64(),
            t.elapsed().as_secs_f64()
        ));
    }
    rep.info(
        "2",
        format!("stressed R=2 K=4 s0=0.2, matheuristic/monolithic objective (time): {}", parts.join(", ")),
    );

    // Cut behaviour, checked over every run available.
    let mut checks = 0;
    let mut repeats = 0;
    let mut ok6 = true;
    let all = runs.iter().chain(extra.iter().map(|(_, o)| o));
    for o in all {
        let mut seen: HashMap<(usize, String), Option<f64>> = HashMap::new();
        for it in &o.log.iterations {
            for p in &it.patterns {
                let key = (p.robot, format!("{:?}", p.legs));
                match seen.get(&key) {
                    Some(None) => ok6 = false,
                    Some(Some(a)) => {
                        repeats += 1;
                        ok6 &= it.theta[p.robot] >= a - 1e-9;
                    }
                    None => {}
                }
                checks += 1;
                seen.entry(key).or_insert(if p.feasible { p.degradation } else { None });
            }
        }
    }
    rep.line(
        "6",
        ok6,
        format!("{checks} pattern records over {} runs, {repeats} re-proposals all with theta >= A - 1e-9, no excluded pattern reappears", 10 + extra.len()),
    );
}

fn criterion_3(rep: &mut Report, stressed_runs: &[(Instance, MatheuristicOutcome)]) {
    let cfg = Config::default();
    let (mut a_rule, mut a_energy, mut a_mh) = (0.0, 0.0, 0.0);
    for seed in 0..10 {
        let inst = generate(&GenParams::new(3, 10, 1, seed)).unwrap();
        a_rule += total_a(&inst, &rule_based(&inst, &DispatchPolicy::default()).unwrap());
        a_energy += total_a(&inst, &energy_aware(&inst, &cfg, &limits()).unwrap().schedule);
        a_mh += total_a(&inst, &run(&inst, &cfg, &limits()).unwrap().schedule);
    }
    let (a_rule, a_energy, a_mh) = (a_rule / 10.0, a_energy / 10.0, a_mh / 10.0);
    rep.line(
        "3",
        a_mh <= 0.8 * a_rule + 1e-12 && a_mh <= a_energy + 1e-12,
        format!("R=3 K=10 M=1 x10 mean sum A: matheuristic {a_mh:.3e}, rule {a_rule:.3e}, energy-aware {a_energy:.3e}"),
    );
    if a_rule == 0.0 {
        rep.info("3", "default instances start at S0=0.8 and need no charging; the ratio test holds trivially".into());
    }
    let (mut r, mut e, mut m) = (0.0, 0.0, 0.0);
    for (inst, out) in stressed_runs {
        r += total_a(inst, &rule_based(inst, &DispatchPolicy::default()).unwrap());
        e += total_a(inst, &energy_aware(inst, &cfg, &limits()).unwrap().schedule);
        m += total_a(inst, &out.schedule);
    }
    let n = stressed_runs.len() as f64;
    rep.info(
        "3",
        format!(
            "stressed R=2 K=4 s0=0.2 x{}: mean sum A matheuristic {:.3e}, rule {:.3e} (ratio {:.2}), energy-aware {:.3e}",
            stressed_runs.len(),
            m / n,
            r / n,
            m / r,
            e / n
        ),
    );
}

/// Returns the tight-mode optimal schedules for reuse.
fn criterion_4(rep: &mut Report) -> Vec<(Instance, FleetSchedule)> {
    let cfg = Config::default();
    let mut ok = true;
    let mut strict = 0;
    let mut worst_rel = 0.0_f64;
    let mut worst_viol = 0.0_f64;
    let mut kept = Vec::new();
    for seed in 0..20 {
        let inst = stressed(2, 3, seed, 0.15);
        let mut bounds = Vec::new();
        let mut objs = Vec::new();
        for mode in [BigMMode::Tight, BigMMode::Naive] {
            let opts = BuildOptions { big_m: mode, ..Default::default() };
            let f = build_monolithic(&inst, &cfg, &opts);
            bounds.push(solve_lp(&f.model).unwrap().objective.unwrap());
            let (_, out) = solve_monolithic(&inst, &cfg, &opts, &limits()).unwrap();
            ok &= out.status == Status::Optimal;
            worst_viol = worst_viol.max(audit(&inst, &out.schedule, AUDIT_TOL).unwrap().max_violation);
            objs.push(out.objective);
            if mode == BigMMode::Tight {
                kept.push((inst.clone(), out.schedule));
            }
        }
        worst_rel = worst_rel.max((objs[0] - objs[1]).abs() / objs[0].abs().max(objs[1].abs()).max(1e-12));
        ok &= rel_close(objs[0], objs[1], REL_TOL);
        ok &= bounds[0] >= bounds[1] - 1e-9;
        if bounds[0] > bounds[1] + 1e-9 {
            strict += 1;
        }
    }
    rep.line(
        "4",
        ok && strict >= 10 && worst_viol <= AUDIT_TOL,
        format!(
            "R=2 K=3 s0=0.15 x20: objectives agree to {worst_rel:.1e} (tol 1e-6), LP bound tight >= naive on all, strict on {strict}/20 (need 10)"
        ),
    );
    kept
}

fn criterion_5(rep: &mut Report, solved: &[(Instance, FleetSchedule)]) {
    let mut rng = Rng::new(5);
    let mut ok_env = true;
    for _ in 0..10_000 {
        let (a, b) = (rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0));
        let (c, d) = (rng.uniform(0.0, 480.0), rng.uniform(0.0, 480.0));
        let cell = Cell {
            s_lo: a.min(b),
            s_hi: a.max(b),
            w_lo: c.min(d),
            w_hi: c.max(d),
        };
        let (s, w) = (rng.uniform(cell.s_lo, cell.s_hi), rng.uniform(cell.w_lo, cell.w_hi));
        let (lo, hi) = cell.envelope(s, w);
        let tol = 1e-9 * (1.0 + (s * w).abs());
        ok_env &= lo <= s * w + tol && s * w <= hi + tol;
        for (s, w) in [(cell.s_lo, cell.w_lo), (cell.s_lo, cell.w_hi), (cell.s_hi, cell.w_lo), (cell.s_hi, cell.w_hi)] {
            let (lo, hi) = cell.envelope(s, w);
            let tol = 1e-9 * (1.0 + (s * w).abs());
            ok_env &= (lo - s * w).abs() <= tol && (hi - s * w).abs() <= tol;
        }
    }
    let cfg = Config::default();
    let excess = solved.iter().map(|(i, s)| mccormick_excess(i, s, &cfg)).fold(f64::NEG_INFINITY, f64::max);
    let legs: usize = solved.iter().map(|(_, s)| s.charges().filter(|(_, c)| c.idle_lin.is_some()).count()).sum();

    let mut refine_ok = true;
    let mut pairs = Vec::new();
    for (inst, fine) in solved.iter().take(10) {
        let coarse_cfg = Config { p_s: 1, p_w: 1, ..Config::default() };
        let (_, coarse) = solve_monolithic(inst, &coarse_cfg, &BuildOptions::default(), &limits()).unwrap();
        let disc = |s: &FleetSchedule| {
            (objective(inst, s, &cfg, ObjectiveMode::Exact).unwrap() - objective(inst, s, &cfg, ObjectiveMode::Linearized).unwrap())
                .abs()
        };
        let (d1, d3) = (disc(&coarse.schedule), disc(fine));
        refine_ok &= d3 <= d1 + 1e-12;
        pairs.push(format!("{d1:.1e}->{d3:.1e}"));
    }
    rep.line(
        "5",
        ok_env && excess <= 1e-9 && refine_ok,
        format!(
            "10^4 boxes enclose the product and are exact at corners: {ok_env}; {legs} solver legs, worst |l - s w| minus box bound {excess:.1e}; \
             P 1->3 discrepancy on 10 instances: {}",
            pairs.join(" ")
        ),
    );
}

fn criterion_7(rep: &mut Report) {
    let cfg = Config::default();
    let mut rng = Rng::new(7);
    let mut ok = true;
    let mut counts = [0usize; 3];
    let mut feasible = 0;
    let mut worst = 0.0_f64;
    for case in 0..50u64 {
        let k = 2 + (case % 2) as usize;
        let inst = stressed(1, k, 100 + case, rng.uniform(0.2, 0.5));
        let mut order: Vec<usize> = (1..=k).collect();
        for i in (1..order.len()).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            order.swap(i, j);
        }
        let c = (case % 3) as usize;
        counts[c] += 1;
        let mut slots: Vec<usize> = (0..k).collect();
        for i in (1..slots.len()).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            slots.swap(i, j);
        }
        let charged = &slots[..c];
        let mut legs = Vec::new();
        let mut prev = 0;
        for (pos, &j) in order.iter().enumerate() {
            if charged.contains(&pos) {
                let mode = (rng.next_u64() % inst.robots[0].modes.len() as u64) as usize;
                legs.push(PatternLeg::Charge { t: pos, from: prev, to: j, charger: 0, mode });
            } else {
                legs.push(PatternLeg::Direct { from: prev, to: j });
            }
            prev = j;
        }
        legs.push(PatternLeg::Direct { from: prev, to: k + 1 });
        let pat = Pattern { robot: 0, legs, arcs: Vec::new(), precedences: Vec::new() };
        let sub = build_subproblem(&inst, &cfg, &BuildOptions::default(), &pat, cfg.lambda);
        ok &= sub.model.num_binaries() == c * cfg.p_s * cfg.p_w;
        let e = solve_subproblem(&inst, &sub, SubproblemStrategy::Enumerate, &limits()).unwrap();
        let m = solve_subproblem(&inst, &sub, SubproblemStrategy::Milp, &limits()).unwrap();
        match (e.fragment, m.fragment) {
            (Some(a), Some(b)) => {
                feasible += 1;
                worst = worst.max((a.objective - b.objective).abs() / b.objective.abs().max(1e-12));
                ok &= rel_close(a.objective, b.objective, REL_TOL);
            }
            (None, None) => {}
            _ => ok = false,
        }
    }
    rep.line(
        "7",
        ok,
        format!(
            "50 patterns (c=0/1/2: {}/{}/{}), {feasible} feasible, enumerate vs milp worst rel diff {worst:.1e} (tol 1e-6), binaries = c*P_S*P_W on all",
            counts[0], counts[1], counts[2]
        ),
    );
}

fn criterion_8(rep: &mut Report) {
    let first = Rng::new(0).next_u64();
    let gen = || to_json(&generate(&GenParams::new(3, 10, 2, 42)).unwrap());
    let same_instance = gen() == gen();
    let spec = ExperimentSpec {
        families: vec![Family { robots: 2, tasks: 3, chargers: 1 }],
        seeds: vec![0, 1],
        methods: Method::ALL.to_vec(),
        initial_soc: Some(0.2),
        time_limit: 60.0,
        ..ExperimentSpec::default()
    };
    let a = to_csv_deterministic(&run_suite(&spec).unwrap()).unwrap();
    let b = to_csv_deterministic(&run_suite(&spec).unwrap()).unwrap();
    rep.line(
        "8",
        first == 0xE220A8397B1DCDAF && same_instance && a == b,
        format!(
            "splitmix64 seed 0 first output {first:#018X}; generated instance bytes identical: {same_instance}; suite CSV ({} rows) identical: {}",
            a.lines().count() - 1,
            a == b
        ),
    );
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut rep = Report { failed: 0 };
    let cfg = Config::default();

    let stressed_runs: Vec<(Instance, MatheuristicOutcome)> = (0..4)
        .map(|seed| {
            let inst = stressed(2, 4, seed, 0.2);
            let out = run(&inst, &cfg, &limits()).unwrap();
            (inst, out)
        })
        .collect();

    criterion_1(&mut rep);
    criterion_2_and_6(&mut rep, &stressed_runs);
    criterion_3(&mut rep, &stressed_runs);
    let mut solved = criterion_4(&mut rep);
    solved.extend(stressed_runs.iter().map(|(i, o)| (i.clone(), o.schedule.clone())));
    criterion_5(&mut rep, &solved);
    criterion_7(&mut rep);
    criterion_8(&mut rep);

    let elapsed = started.elapsed();
    rep.line(
        "9",
        elapsed <= SUITE_BUDGET,
        format!(
            "absolute degradation levels are not targets; criteria 2-3 use gap and ratio checks instead. Suite wall time {:.0}s (budget 1800s)",
            elapsed.as_secs_f64()
        ),
    );
    println!("acceptance: {} failed", rep.failed);
    if rep.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
