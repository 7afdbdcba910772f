use amrsched_solver::{Model, Sense, VarId, VarKind};

use crate::domain::{Config, Instance};
use crate::formulation::bigm::{window_slack, BigMTable};
use crate::formulation::index::IndexSets;
use crate::formulation::mccormick::{mccormick_rows, CellVars, PartitionGrid};
use crate::formulation::{BuildOptions, ChargeVars, Formulation, Layer, VarIndex, VarRole};

/// Shortest charging session the master may reserve, in minutes.
pub(crate) const MIN_SESSION: f64 = 1.0;

struct Builder<'a> {
    inst: &'a Instance,
    cfg: &'a Config,
    opts: &'a BuildOptions,
    layer: Layer,
    bigm: BigMTable,
    sets: IndexSets,
    model: Model,
    roles: Vec<VarRole>,
}

fn node(i: usize, n: usize) -> String {
    if i == 0 {
        "src".into()
    } else if i == n + 1 {
        "snk".into()
    } else {
        i.to_string()
    }
}

type Terms = Vec<(VarId, f64)>;

impl Builder<'_> {
    fn var(&mut self, name: String, kind: VarKind, lo: f64, hi: f64, obj: f64, role: VarRole) -> VarId {
        self.roles.push(role);
        self.model.add_var(name, kind, lo, hi, obj)
    }

    fn cont(&mut self, name: String, hi: f64, obj: f64, role: VarRole) -> VarId {
        self.var(name, VarKind::Continuous, 0.0, hi, obj, role)
    }

    fn row(&mut self, name: String, terms: Terms, sense: Sense, rhs: f64) {
        if terms.iter().all(|&(_, c)| c == 0.0) {
            let ok = match sense {
                Sense::Le => 0.0 <= rhs + 1e-12,
                Sense::Ge => 0.0 >= rhs - 1e-12,
                Sense::Eq => rhs.abs() <= 1e-12,
            };
            if ok {
                return;
            }
        }
        self.model.add_row(name, terms, sense, rhs);
    }

    fn mono(&self) -> bool {
        self.layer == Layer::Monolithic
    }

    fn run(mut self) -> Formulation {
        let inst = self.inst;
        let cfg = self.cfg;
        let n = inst.num_tasks();
        let nr = inst.robots.len();
        let h = inst.horizon;
        let with_cells = self.mono() && self.opts.degradation_terms;
        let grids: Vec<PartitionGrid> = inst
            .robots
            .iter()
            .map(|r| PartitionGrid::uniform(r.smin, r.smax, cfg.p_s, h, cfg.p_w))
            .collect();
        let mut vars = VarIndex::default();

        for r in 0..nr {
            let row = (1..=n)
                .map(|k| self.var(format!("x_r{r}_k{k}"), VarKind::Binary, 0.0, 1.0, 0.0, VarRole::Assign { r, k }))
                .collect();
            vars.assign.push(row);
        }
        for idx in 0..self.sets.direct.len() {
            let (r, i, j) = self.sets.direct[idx];
            let v = self.var(
                format!("y_r{r}_{}_{}", node(i, n), node(j, n)),
                VarKind::Binary,
                0.0,
                1.0,
                0.0,
                VarRole::Direct { r, i, j },
            );
            vars.direct.push(v);
        }
        for idx in 0..self.sets.end.len() {
            let (r, i) = self.sets.end[idx];
            let v = self.var(
                format!("y_r{r}_{}_snk", node(i, n)),
                VarKind::Binary,
                0.0,
                1.0,
                0.0,
                VarRole::Direct { r, i, j: n + 1 },
            );
            vars.end.push(v);
        }
        for k in 1..=n {
            let t = inst.task(k);
            let v = self.var(format!("T_k{k}"), VarKind::Continuous, t.release, h, 0.0, VarRole::Start(k));
            vars.start.push(v);
            let cap = if self.opts.tardiness_cap { window_slack(t.release, t.due) } else { h };
            let v = self.cont(format!("tard_k{k}"), cap, cfg.mu, VarRole::Tardiness(k));
            vars.tardiness.push(v);
        }
        if self.mono() {
            for r in 0..nr {
                let smax = inst.robots[r].smax;
                let row = (1..=n)
                    .map(|k| self.cont(format!("sin_r{r}_k{k}"), smax, 0.0, VarRole::SocIn { r, k }))
                    .collect();
                vars.soc_in.push(row);
            }
        }
        for t in 0..self.sets.gamma.len() {
            let tr = self.sets.gamma[t];
            let sfx = format!("r{}_{}_{}_m{}_l{}", tr.r, node(tr.i, n), node(tr.j, n), tr.m, tr.l);
            let smax = inst.robots[tr.r].smax;
            let g = self.var(format!("g_{sfx}"), VarKind::Binary, 0.0, 1.0, 0.0, VarRole::Charge(t));
            let start = self.cont(format!("B_{sfx}"), h, 0.0, VarRole::ChargeStart(t));
            let queue = self.cont(format!("q_{sfx}"), h, cfg.lambda, VarRole::Queue(t));
            let duration = self.cont(format!("tc_{sfx}"), h, 0.0, VarRole::ChargeDuration(t));
            let post_wait = self.cont(format!("w_{sfx}"), h, 0.0, VarRole::PostWait(t));
            let post_soc = self
                .mono()
                .then(|| self.cont(format!("sb_{sfx}"), smax, 0.0, VarRole::PostSoc(t)));
            let mut idle = None;
            let mut cells = Vec::new();
            if with_cells {
                idle = Some(self.cont(format!("ell_{sfx}"), smax * h, 0.0, VarRole::Idle(t)));
                for (p, q, cell) in grids[tr.r].cells().collect::<Vec<_>>() {
                    let cv = CellVars {
                        z: self.var(
                            format!("z_{sfx}_p{p}_q{q}"),
                            VarKind::Binary,
                            0.0,
                            1.0,
                            0.0,
                            VarRole::Cell { t, p, q },
                        ),
                        s: self.cont(format!("sbpq_{sfx}_p{p}_q{q}"), cell.s_hi, 0.0, VarRole::CellSoc { t, p, q }),
                        w: self.cont(format!("wpq_{sfx}_p{p}_q{q}"), cell.w_hi, 0.0, VarRole::CellWait { t, p, q }),
                        l: self.cont(
                            format!("lpq_{sfx}_p{p}_q{q}"),
                            cell.s_hi * cell.w_hi,
                            0.0,
                            VarRole::CellIdle { t, p, q },
                        ),
                    };
                    cells.push((p, q, cv));
                }
            }
            vars.charge.push(ChargeVars {
                g,
                start,
                queue,
                duration,
                post_wait,
                post_soc,
                idle,
                cells,
            });
        }
        let has_deg = !self.mono() || self.opts.degradation_terms;
        if has_deg {
            let (a, amax) = if self.mono() { ("A_r", "Amax") } else { ("theta_r", "Theta") };
            for r in 0..nr {
                let v = self.var(format!("{a}{r}"), VarKind::Continuous, 0.0, f64::INFINITY, 1.0, VarRole::Degradation(r));
                vars.degradation.push(v);
            }
            vars.max_degradation =
                Some(self.var(amax.into(), VarKind::Continuous, 0.0, f64::INFINITY, cfg.rho, VarRole::MaxDegradation));
        }

        self.flow_rows(&vars);
        self.timing_rows(&vars);
        if self.mono() {
            self.soc_rows(&vars);
            if self.opts.energy_row {
                self.energy_rows(&vars, true);
            }
        }
        if with_cells {
            self.cell_rows(&vars, &grids);
        }
        if has_deg {
            self.degradation_rows(&vars);
        }
        if !self.mono() {
            self.master_rows(&vars);
        }

        let warnings = precheck(inst);
        Formulation {
            layer: self.layer,
            options: self.opts.clone(),
            model: self.model,
            sets: self.sets,
            bigm: self.bigm,
            grids,
            roles: self.roles,
            vars,
            warnings,
            pairs: Vec::new(),
        }
    }

    fn flow_rows(&mut self, vars: &VarIndex) {
        let n = self.inst.num_tasks();
        let nr = self.inst.robots.len();
        // inflow[r][k], outflow[r][node], with node 0 the source.
        let mut inflow: Vec<Vec<Terms>> = vec![vec![Vec::new(); n + 1]; nr];
        let mut outflow: Vec<Vec<Terms>> = vec![vec![Vec::new(); n + 1]; nr];
        let mut ends: Vec<Terms> = vec![Vec::new(); nr];
        for (idx, &(r, i, j)) in self.sets.direct.iter().enumerate() {
            inflow[r][j].push((vars.direct[idx], 1.0));
            outflow[r][i].push((vars.direct[idx], 1.0));
        }
        for (idx, &(r, i)) in self.sets.end.iter().enumerate() {
            outflow[r][i].push((vars.end[idx], 1.0));
            ends[r].push((vars.end[idx], 1.0));
        }
        for (t, tr) in self.sets.gamma.iter().enumerate() {
            inflow[tr.r][tr.j].push((vars.charge[t].g, 1.0));
            outflow[tr.r][tr.i].push((vars.charge[t].g, 1.0));
        }
        for k in 1..=n {
            let terms = (0..nr).map(|r| (vars.assign[r][k - 1], 1.0)).collect();
            self.row(format!("assign_k{k}"), terms, Sense::Eq, 1.0);
        }
        for r in 0..nr {
            for k in 1..=n {
                let x = vars.assign[r][k - 1];
                let mut t = inflow[r][k].clone();
                t.push((x, -1.0));
                self.row(format!("pred_r{r}_k{k}"), t, Sense::Eq, 0.0);
                let mut t = outflow[r][k].clone();
                t.push((x, -1.0));
                self.row(format!("succ_r{r}_k{k}"), t, Sense::Eq, 0.0);
            }
            self.row(format!("start_r{r}"), outflow[r][0].clone(), Sense::Le, 1.0);
            self.row(format!("end_r{r}"), ends[r].clone(), Sense::Le, 1.0);
            let mut t = outflow[r][0].clone();
            t.extend(ends[r].iter().map(|&(v, c)| (v, -c)));
            self.row(format!("balance_r{r}"), t, Sense::Eq, 0.0);
            if self.opts.symmetry_breaking && r > 0 {
                let mut t = outflow[r][0].clone();
                t.extend(outflow[r - 1][0].iter().map(|&(v, c)| (v, -c)));
                self.row(format!("symm_r{r}"), t, Sense::Le, 0.0);
            }
        }
    }

    fn timing_rows(&mut self, vars: &VarIndex) {
        let inst = self.inst;
        let n = inst.num_tasks();
        let start = |k: usize| vars.start[k - 1];
        for k in 1..=n {
            let t = vec![(start(k), 1.0), (vars.tardiness[k - 1], -1.0)];
            self.row(format!("due_k{k}"), t, Sense::Le, inst.task(k).due);
        }
        for (idx, &(r, i, j)) in self.sets.direct.clone().iter().enumerate() {
            let y = vars.direct[idx];
            let m = self.bigm.direct_time(inst, i, j);
            let mut t = vec![(start(j), 1.0), (y, -m)];
            if i > 0 {
                t.push((start(i), -1.0));
            }
            let rhs = inst.service(i) + inst.direct(i, j).time - m;
            self.row(format!("dtime_r{r}_{}_{}", node(i, n), j), t, Sense::Ge, rhs);
        }
        for t_idx in 0..self.sets.gamma.len() {
            let tr = self.sets.gamma[t_idx];
            let cv = &vars.charge[t_idx];
            let (i, j, m) = (tr.i, tr.j, tr.m);
            let sfx = format!("r{}_{}_{}_m{}_l{}", tr.r, node(i, n), j, m, tr.l);
            let arrive = inst.service(i) + inst.to_charger(i, m).time;
            let from = inst.from_charger(m, j).time;

            let big = self.bigm.charge_start(inst, i, m);
            let mut t = vec![(cv.start, 1.0), (cv.g, -big)];
            if i > 0 {
                t.push((start(i), -1.0));
            }
            self.row(format!("cstart_{sfx}"), t, Sense::Ge, arrive - big);

            let big = self.bigm.queue();
            let mut t = vec![(cv.queue, 1.0), (cv.start, -1.0), (cv.g, -big)];
            if i > 0 {
                t.push((start(i), 1.0));
            }
            self.row(format!("cqueue_{sfx}"), t, Sense::Ge, -arrive - big);

            let link = vec![(start(j), 1.0), (cv.start, -1.0), (cv.duration, -1.0), (cv.post_wait, -1.0)];
            let big = self.bigm.link_lower(inst, m, j);
            let mut t = link.clone();
            t.push((cv.g, -big));
            self.row(format!("clinklo_{sfx}"), t, Sense::Ge, from - big);
            let big = self.bigm.link_upper(inst, m, j);
            let mut t = link;
            t.push((cv.g, big));
            self.row(format!("clinkhi_{sfx}"), t, Sense::Le, from + big);

            let rate = inst.robots[tr.r].modes[tr.l].rate;
            let act = self.bigm.activation(inst, &inst.robots[tr.r], i, j, m, rate);
            let names = ["actB", "actq", "acttc", "actw"];
            let cols = [cv.start, cv.queue, cv.duration, cv.post_wait];
            for ((name, col), hi) in names.iter().zip(cols).zip(act) {
                self.row(format!("{name}_{sfx}"), vec![(col, 1.0), (cv.g, -hi)], Sense::Le, 0.0);
            }
        }
    }

    fn soc_rows(&mut self, vars: &VarIndex) {
        let inst = self.inst;
        let n = inst.num_tasks();
        for (r, robot) in inst.robots.iter().enumerate() {
            for k in 1..=n {
                let s = vars.soc_in[r][k - 1];
                let x = vars.assign[r][k - 1];
                self.row(format!("socub_r{r}_k{k}"), vec![(s, 1.0), (x, -robot.smax)], Sense::Le, 0.0);
                let big = self.bigm.reserve(inst, robot, k);
                let rhs = robot.smin + inst.energy(k) - big;
                self.row(format!("reserve_r{r}_k{k}"), vec![(s, 1.0), (x, -big)], Sense::Ge, rhs);
            }
        }
        // Arrival SOC at node i: a variable for tasks, the constant S0 for the source.
        let soc = |r: usize, i: usize| if i == 0 { None } else { Some(vars.soc_in[r][i - 1]) };
        for (idx, &(r, i, j)) in self.sets.direct.clone().iter().enumerate() {
            let robot = &inst.robots[r];
            let y = vars.direct[idx];
            let sj = vars.soc_in[r][j - 1];
            let s0 = if i == 0 { robot.s0 } else { 0.0 };
            let drop = inst.energy(i) + inst.direct(i, j).energy;
            let name = format!("r{r}_{}_{}", node(i, n), j);
            let big = self.bigm.direct_soc_lower(inst, robot, i, j);
            let mut t = vec![(sj, 1.0), (y, -big)];
            t.extend(soc(r, i).map(|s| (s, -1.0)));
            self.row(format!("dsoclo_{name}"), t, Sense::Ge, s0 - drop - big);
            let big = self.bigm.direct_soc_upper(inst, robot, i, j);
            let mut t = vec![(sj, 1.0), (y, big)];
            t.extend(soc(r, i).map(|s| (s, -1.0)));
            self.row(format!("dsochi_{name}"), t, Sense::Le, s0 - drop + big);
        }
        for t_idx in 0..self.sets.gamma.len() {
            let tr = self.sets.gamma[t_idx];
            let robot = &inst.robots[tr.r];
            let cv = &vars.charge[t_idx];
            let sbar = cv.post_soc.expect("monolithic layer has post-charge SOC");
            let (r, i, j, m) = (tr.r, tr.i, tr.j, tr.m);
            let sfx = format!("r{r}_{}_{}_m{m}_l{}", node(i, n), j, tr.l);
            let s0 = if i == 0 { robot.s0 } else { 0.0 };
            let drop = inst.energy(i) + inst.to_charger(i, m).energy;
            let rate = robot.modes[tr.l].rate;
            let si = soc(r, i);

            let big = self.bigm.reach_charger(inst, robot, i, m);
            let mut t = vec![(cv.g, -big)];
            t.extend(si.map(|s| (s, 1.0)));
            self.row(format!("reach_{sfx}"), t, Sense::Ge, robot.smin + drop - s0 - big);

            self.row(format!("sbub_{sfx}"), vec![(sbar, 1.0), (cv.g, -robot.smax)], Sense::Le, 0.0);

            let base = vec![(sbar, 1.0), (cv.duration, -rate)];
            let big = self.bigm.post_soc_lower(inst, robot, i, m);
            let mut t = base.clone();
            t.push((cv.g, -big));
            t.extend(si.map(|s| (s, -1.0)));
            self.row(format!("sblo_{sfx}"), t, Sense::Ge, s0 - drop - big);
            let big = self.bigm.post_soc_upper(inst, robot, i, m);
            let mut t = base;
            t.push((cv.g, big));
            t.extend(si.map(|s| (s, -1.0)));
            self.row(format!("sbhi_{sfx}"), t, Sense::Le, s0 - drop + big);

            let sj = vars.soc_in[r][j - 1];
            let e_from = inst.from_charger(m, j).energy;
            let big = self.bigm.arrival_soc_lower();
            self.row(
                format!("asoclo_{sfx}"),
                vec![(sj, 1.0), (sbar, -1.0), (cv.g, -big)],
                Sense::Ge,
                -e_from - big,
            );
            let big = self.bigm.arrival_soc_upper(inst, robot, m, j);
            self.row(
                format!("asochi_{sfx}"),
                vec![(sj, 1.0), (sbar, -1.0), (cv.g, big)],
                Sense::Le,
                -e_from + big,
            );
        }
    }

    fn cell_rows(&mut self, vars: &VarIndex, grids: &[PartitionGrid]) {
        let n = self.inst.num_tasks();
        for t_idx in 0..self.sets.gamma.len() {
            let tr = self.sets.gamma[t_idx];
            let cv = &vars.charge[t_idx];
            let sfx = format!("r{}_{}_{}_m{}_l{}", tr.r, node(tr.i, n), tr.j, tr.m, tr.l);
            let sbar = cv.post_soc.expect("monolithic layer has post-charge SOC");
            let idle = cv.idle.expect("cells imply an idle variable");
            let mut sel = vec![(cv.g, -1.0)];
            let mut agg_s = vec![(sbar, 1.0)];
            let mut agg_w = vec![(cv.post_wait, 1.0)];
            let mut agg_l = vec![(idle, 1.0)];
            for &(_, _, c) in &cv.cells {
                sel.push((c.z, 1.0));
                agg_s.push((c.s, -1.0));
                agg_w.push((c.w, -1.0));
                agg_l.push((c.l, -1.0));
            }
            self.row(format!("psel_{sfx}"), sel, Sense::Eq, 0.0);
            self.row(format!("aggs_{sfx}"), agg_s, Sense::Eq, 0.0);
            self.row(format!("aggw_{sfx}"), agg_w, Sense::Eq, 0.0);
            self.row(format!("aggl_{sfx}"), agg_l, Sense::Eq, 0.0);
            for &(p, q, c) in &cv.cells {
                let cell = grids[tr.r].cell(p, q);
                mccormick_rows(&mut self.model, &format!("mc_{sfx}_p{p}_q{q}"), &cell, &c);
            }
        }
    }

    fn degradation_rows(&mut self, vars: &VarIndex) {
        let inst = self.inst;
        let amax = vars.max_degradation.expect("degradation variables exist");
        let mut per_robot: Vec<Terms> = vec![Vec::new(); inst.robots.len()];
        for (t_idx, tr) in self.sets.gamma.iter().enumerate() {
            let robot = &inst.robots[tr.r];
            let cv = &vars.charge[t_idx];
            per_robot[tr.r].push((cv.duration, -robot.modes[tr.l].aging));
            if let Some(idle) = cv.idle {
                per_robot[tr.r].push((idle, -robot.idle_aging));
            }
        }
        for (r, terms) in per_robot.into_iter().enumerate() {
            let a = vars.degradation[r];
            let mut t = vec![(a, 1.0)];
            t.extend(terms);
            if self.mono() {
                self.row(format!("deg_r{r}"), t, Sense::Eq, 0.0);
            } else {
                // Charging-aging floor for the surrogate; cuts raise it further.
                self.row(format!("thetafloor_r{r}"), t, Sense::Ge, 0.0);
            }
            self.row(format!("maxdeg_r{r}"), vec![(a, 1.0), (amax, -1.0)], Sense::Le, 0.0);
        }
    }

    /// Per-robot energy balance over the whole route. `detour` adds the travel
    /// energy of charging detours.
    fn energy_rows(&mut self, vars: &VarIndex, detour: bool) {
        let inst = self.inst;
        let n = inst.num_tasks();
        for (r, robot) in inst.robots.iter().enumerate() {
            let mut t: Terms = (1..=n).map(|k| (vars.assign[r][k - 1], inst.energy(k))).collect();
            for (idx, &(rr, i, j)) in self.sets.direct.iter().enumerate() {
                if rr == r {
                    t.push((vars.direct[idx], inst.direct(i, j).energy));
                }
            }
            for (t_idx, tr) in self.sets.gamma.iter().enumerate() {
                if tr.r == r {
                    t.push((vars.charge[t_idx].duration, -robot.modes[tr.l].rate));
                    if detour {
                        let e = inst.to_charger(tr.i, tr.m).energy + inst.from_charger(tr.m, tr.j).energy;
                        t.push((vars.charge[t_idx].g, e));
                    }
                }
            }
            self.row(format!("energy_r{r}"), t, Sense::Le, robot.s0 - robot.smin);
        }
    }

    fn master_rows(&mut self, vars: &VarIndex) {
        let n = self.inst.num_tasks();
        self.energy_rows(vars, false);
        for t_idx in 0..self.sets.gamma.len() {
            let tr = self.sets.gamma[t_idx];
            let cv = &vars.charge[t_idx];
            let sfx = format!("r{}_{}_{}_m{}_l{}", tr.r, node(tr.i, n), tr.j, tr.m, tr.l);
            self.row(
                format!("mintc_{sfx}"),
                vec![(cv.duration, 1.0), (cv.g, -MIN_SESSION)],
                Sense::Ge,
                0.0,
            );
        }
    }
}

/// Tasks that no robot can serve even when arriving straight from a full charge.
fn precheck(inst: &Instance) -> Vec<String> {
    let mut out = Vec::new();
    for k in 1..=inst.num_tasks() {
        let e = inst.energy(k);
        let servable = inst.robots.iter().any(|r| {
            let direct = r.s0 - inst.direct(0, k).energy;
            let charged = (0..inst.chargers.len())
                .map(|m| r.smax - inst.from_charger(m, k).energy)
                .fold(f64::NEG_INFINITY, f64::max);
            direct.max(charged) - e >= r.smin
        });
        if !servable {
            out.push(format!("task {k} cannot keep any robot above its reserve"));
        }
    }
    out
}

/// Builds the requested layer of the fleet model.
pub fn build(instance: &Instance, config: &Config, options: &BuildOptions, layer: Layer) -> Formulation {
    let bigm = BigMTable::new(instance, options.big_m, options.tardiness_cap);
    let sets = IndexSets::build(instance, &bigm, options.charger_filter(instance.chargers.len()));
    Builder {
        inst: instance,
        cfg: config,
        opts: options,
        layer,
        bigm,
        sets,
        model: Model::new(),
        roles: Vec::new(),
    }
    .run()
}

pub fn build_monolithic(instance: &Instance, config: &Config, options: &BuildOptions) -> Formulation {
    build(instance, config, options, Layer::Monolithic)
}
