use crate::domain::Instance;
use crate::formulation::bigm::BigMTable;

/// A charging transition `i -> m -> j` of robot `r` in mode `l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    pub r: usize,
    pub i: usize,
    pub j: usize,
    pub m: usize,
    pub l: usize,
}

/// Index sets of one model: direct transitions into tasks, end arcs into the
/// sink, charging transitions and, per charger, the sessions that may use it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IndexSets {
    /// `(r, i, j)` with `j` a task.
    pub direct: Vec<(usize, usize, usize)>,
    /// `(r, i)` for the arc `i -> n+1`.
    pub end: Vec<(usize, usize)>,
    pub gamma: Vec<Transition>,
    /// Per charger, indices into `gamma`; a position in this list is the session id.
    pub sessions: Vec<Vec<usize>>,
}

/// Which chargers a charging transition may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChargerFilter {
    All,
    /// The `n` chargers with the shortest detour, ties to the lower id.
    Nearest(usize),
}

/// Chargers kept for the pair `(i, j)`, ordered by detour time.
pub fn chargers_for(instance: &Instance, i: usize, j: usize, filter: ChargerFilter) -> Vec<usize> {
    let mut ms: Vec<usize> = (0..instance.chargers.len()).collect();
    if let ChargerFilter::Nearest(n) = filter {
        let detour = |m: usize| instance.to_charger(i, m).time + instance.from_charger(m, j).time;
        ms.sort_by(|&a, &b| detour(a).total_cmp(&detour(b)).then(a.cmp(&b)));
        ms.truncate(n);
        ms.sort_unstable();
    }
    ms
}

impl IndexSets {
    /// Enumerates the sets, dropping transitions that `bigm` proves infeasible.
    pub fn build(instance: &Instance, bigm: &BigMTable, filter: ChargerFilter) -> Self {
        let n = instance.num_tasks();
        let mut sets = IndexSets {
            sessions: vec![Vec::new(); instance.chargers.len()],
            ..Default::default()
        };
        for (r, robot) in instance.robots.iter().enumerate() {
            for i in 0..=n {
                for j in 1..=n {
                    if i == j {
                        continue;
                    }
                    if !bigm.direct_eliminated(instance, i, j) {
                        sets.direct.push((r, i, j));
                    }
                    for m in chargers_for(instance, i, j, filter) {
                        if bigm.charge_eliminated(instance, i, j, m) {
                            continue;
                        }
                        for l in 0..robot.modes.len() {
                            sets.sessions[m].push(sets.gamma.len());
                            sets.gamma.push(Transition { r, i, j, m, l });
                        }
                    }
                }
            }
            for i in 1..=n {
                sets.end.push((r, i));
            }
        }
        sets
    }

    /// Number of unordered session pairs over all chargers.
    pub fn num_session_pairs(&self) -> usize {
        self.sessions.iter().map(|s| s.len() * s.len().saturating_sub(1) / 2).sum()
    }
}
