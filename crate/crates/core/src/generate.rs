use serde::{Deserialize, Serialize};

use crate::domain::{Charger, DomainError, Instance, Point, Robot, Task, WarehouseGeometry};
use crate::rng::Rng;

/// Parameters of the random instance family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenParams {
    pub robots: usize,
    pub tasks: usize,
    pub chargers: usize,
    pub horizon: f64,
    /// Range of the window width `b_k - a_k`.
    pub window: (f64, f64),
    pub service: (f64, f64),
    pub energy: (f64, f64),
    pub seed: u64,
}

impl GenParams {
    pub fn new(robots: usize, tasks: usize, chargers: usize, seed: u64) -> Self {
        Self {
            robots,
            tasks,
            chargers,
            horizon: 480.0,
            window: (15.0, 60.0),
            service: (2.0, 8.0),
            energy: (0.02, 0.08),
            seed,
        }
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        let bad = |m: &str| Err(DomainError::Invalid(m.to_string()));
        if self.robots == 0 || self.chargers == 0 {
            return bad("need at least one robot and one charger");
        }
        for (lo, hi) in [self.window, self.service, self.energy] {
            if !(lo <= hi) {
                return bad("range low exceeds high");
            }
        }
        if self.window.0 < 0.0 || self.service.0 <= 0.0 || self.energy.0 <= 0.0 || self.energy.1 >= 1.0 {
            return bad("ranges must keep windows nonnegative, durations positive and energies in (0, 1)");
        }
        if !(self.horizon >= self.horizon / 2.0 + self.window.1) || self.horizon < 120.0 {
            return bad("horizon must be at least 120 and cover the latest due time");
        }
        Ok(())
    }
}

/// Chargers along the bottom wall, evenly spaced: `x = width * (m + 1) / (M + 1)`.
pub fn charger_positions(geometry: &WarehouseGeometry, count: usize) -> Vec<Point> {
    (0..count)
        .map(|m| Point::new(geometry.width_m * (m + 1) as f64 / (count + 1) as f64, 0.0))
        .collect()
}

/// Draws an instance. Per task, in id order, the draws are x, y, release,
/// window width, service duration and energy.
pub fn generate(params: &GenParams) -> Result<Instance, DomainError> {
    params.validate()?;
    let geometry = WarehouseGeometry::default();
    let mut rng = Rng::new(params.seed);
    let tasks = (1..=params.tasks)
        .map(|id| {
            let x = rng.uniform(0.0, geometry.width_m);
            let y = rng.uniform(0.0, geometry.height_m);
            let release = rng.uniform(0.0, params.horizon / 2.0);
            let width = rng.uniform(params.window.0, params.window.1);
            let service = rng.uniform(params.service.0, params.service.1);
            let energy = rng.uniform(params.energy.0, params.energy.1);
            Task {
                id,
                location: Point::new(x, y),
                release,
                due: release + width,
                service,
                energy,
            }
        })
        .collect();
    let chargers = charger_positions(&geometry, params.chargers)
        .into_iter()
        .enumerate()
        .map(|(id, position)| Charger { id, position })
        .collect();
    let instance = Instance {
        geometry,
        robots: (0..params.robots).map(Robot::standard).collect(),
        tasks,
        chargers,
        horizon: params.horizon,
    };
    instance.validate()?;
    Ok(instance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_tasks_is_allowed() {
        let inst = generate(&GenParams::new(2, 0, 1, 3)).unwrap();
        assert!(inst.tasks.is_empty());
        assert_eq!(inst.robots.len(), 2);
    }

    #[test]
    fn draws_respect_ranges() {
        let inst = generate(&GenParams::new(4, 200, 2, 11)).unwrap();
        for t in &inst.tasks {
            assert!((0.0..=240.0).contains(&t.release));
            assert!((15.0..=60.0).contains(&(t.due - t.release)));
            assert!((2.0..=8.0).contains(&t.service));
            assert!((0.02..=0.08).contains(&t.energy));
            assert!(inst.geometry.contains(t.location));
        }
        assert_eq!(inst.chargers[0].position, Point::new(100.0 / 3.0, 0.0));
        assert_eq!(inst.chargers[1].position, Point::new(200.0 / 3.0, 0.0));
    }

    #[test]
    fn window_width_statistics() {
        let inst = generate(&GenParams::new(1, 10_000, 1, 5)).unwrap();
        let widths: Vec<f64> = inst.tasks.iter().map(|t| t.due - t.release).collect();
        let min = widths.iter().copied().fold(f64::INFINITY, f64::min);
        let max = widths.iter().copied().fold(0.0, f64::max);
        let mean = widths.iter().sum::<f64>() / widths.len() as f64;
        assert!(min >= 15.0 && max <= 60.0);
        assert!((mean - 37.5).abs() < 1.0, "{mean}");
    }

    #[test]
    fn first_task_follows_draw_order() {
        let inst = generate(&GenParams::new(1, 1, 1, 9)).unwrap();
        let mut rng = Rng::new(9);
        let draws: Vec<f64> = (0..6).map(|_| rng.next_f64()).collect();
        let t = &inst.tasks[0];
        assert_eq!(t.location.x, 100.0 * draws[0]);
        assert_eq!(t.location.y, 50.0 * draws[1]);
        assert_eq!(t.release, 240.0 * draws[2]);
        assert_eq!(t.due, t.release + (15.0 + 45.0 * draws[3]));
        assert_eq!(t.service, 2.0 + 6.0 * draws[4]);
        assert_eq!(t.energy, 0.02 + 0.06 * draws[5]);
    }

    #[test]
    fn short_horizon_rejected() {
        assert!(generate(&GenParams::new(1, 3, 1, 0).with_horizon(100.0)).is_err());
    }
}
