use thiserror::Error;

use crate::domain::{ChargeStop, DomainError, FleetSchedule, Instance, Leg, TaskTiming};
use crate::formulation::{Formulation, Layer};

#[derive(Debug, Error, PartialEq)]
pub enum DecodeError {
    #[error("robot {robot}: route breaks at node {node}")]
    BrokenChain { robot: usize, node: usize },
    #[error("charging transition {transition} is active but selects no partition cell")]
    NoCell { transition: usize },
    #[error("solution vector has {found} entries, model has {expected}")]
    Length { found: usize, expected: usize },
    #[error("only the monolithic layer decodes to a schedule")]
    WrongLayer,
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// One active arc of a decoded route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RouteArc {
    /// `j == n + 1` for the arc into the sink.
    Direct { i: usize, j: usize },
    /// Index into the gamma set.
    Charge(usize),
}

impl RouteArc {
    fn head(self, f: &Formulation) -> usize {
        match self {
            RouteArc::Direct { j, .. } => j,
            RouteArc::Charge(t) => f.sets.gamma[t].j,
        }
    }
}

const ON: f64 = 0.5;

impl Formulation {
    /// Active arcs per robot, in route order from the source to the sink.
    pub fn routes(&self, values: &[f64]) -> Result<Vec<Vec<RouteArc>>, DecodeError> {
        if values.len() != self.model.num_vars() {
            return Err(DecodeError::Length {
                found: values.len(),
                expected: self.model.num_vars(),
            });
        }
        let nr = self.vars.assign.len();
        let n = self.vars.start.len();
        let mut out: Vec<Vec<Vec<RouteArc>>> = vec![vec![Vec::new(); n + 1]; nr];
        for (idx, &(r, i, j)) in self.sets.direct.iter().enumerate() {
            if values[self.vars.direct[idx].0] > ON {
                out[r][i].push(RouteArc::Direct { i, j });
            }
        }
        for (idx, &(r, i)) in self.sets.end.iter().enumerate() {
            if values[self.vars.end[idx].0] > ON {
                out[r][i].push(RouteArc::Direct { i, j: n + 1 });
            }
        }
        for (t, tr) in self.sets.gamma.iter().enumerate() {
            if values[self.vars.charge[t].g.0] > ON {
                out[tr.r][tr.i].push(RouteArc::Charge(t));
            }
        }
        let mut routes = Vec::with_capacity(nr);
        for (r, arcs) in out.iter().enumerate() {
            let mut route = Vec::new();
            if arcs[0].is_empty() {
                let stray = (1..=n).find(|&k| values[self.vars.assign[r][k - 1].0] > ON || !arcs[k].is_empty());
                if let Some(node) = stray {
                    return Err(DecodeError::BrokenChain { robot: r, node });
                }
                routes.push(route);
                continue;
            }
            let mut node = 0;
            while node != n + 1 {
                if route.len() > n || arcs[node].len() != 1 {
                    return Err(DecodeError::BrokenChain { robot: r, node });
                }
                let arc = arcs[node][0];
                route.push(arc);
                node = arc.head(self);
            }
            let visited = route.len() - 1;
            let assigned = (1..=n).filter(|&k| values[self.vars.assign[r][k - 1].0] > ON).count();
            if visited != assigned {
                return Err(DecodeError::BrokenChain { robot: r, node: n + 1 });
            }
            routes.push(route);
        }
        Ok(routes)
    }

    /// Turns a monolithic solution into a schedule.
    pub fn decode(&self, instance: &Instance, values: &[f64]) -> Result<FleetSchedule, DecodeError> {
        if self.layer != Layer::Monolithic {
            return Err(DecodeError::WrongLayer);
        }
        let routes = self.routes(values)?;
        let val = |v: amrsched_solver::VarId| values[v.0];
        let mut schedule = FleetSchedule::empty(routes.len());
        for (r, route) in routes.iter().enumerate() {
            let mut legs = Vec::with_capacity(route.len());
            for &arc in route {
                match arc {
                    RouteArc::Direct { i, j } => legs.push(Leg::Direct { from: i, to: j }),
                    RouteArc::Charge(t) => {
                        let tr = self.sets.gamma[t];
                        let cv = &self.vars.charge[t];
                        if !cv.cells.is_empty() {
                            let picked: f64 = cv.cells.iter().map(|(_, _, c)| val(c.z)).sum();
                            if picked < ON {
                                return Err(DecodeError::NoCell { transition: t });
                            }
                        }
                        legs.push(Leg::Charge(ChargeStop {
                            from: tr.i,
                            to: tr.j,
                            charger: tr.m,
                            mode: instance.robots[r].modes[tr.l].id,
                            start: val(cv.start),
                            queue: val(cv.queue),
                            duration: val(cv.duration),
                            post_wait: val(cv.post_wait),
                            post_soc: cv.post_soc.map(val).unwrap_or(0.0),
                            idle_lin: cv.idle.map(val),
                        }));
                    }
                }
            }
            schedule.robots[r].legs = legs;
        }
        for (r, plan) in schedule.robots.iter().enumerate() {
            for k in plan.tasks() {
                let start = val(self.vars.start[k - 1]);
                schedule.tasks.push(TaskTiming {
                    task: k,
                    robot: r,
                    start,
                    tardiness: (start - instance.task(k).due).max(0.0),
                    soc_in: val(self.vars.soc_in[r][k - 1]),
                });
            }
        }
        schedule.tasks.sort_by_key(|t| t.task);
        schedule.refresh_degradation(instance)?;
        Ok(schedule)
    }
}
