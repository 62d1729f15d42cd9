//! Log-distance path loss, SCR and the vulnerable-area sweep.
//!
//! Victim positions satisfying the stealthy band at the gateway form a ring
//! around it; those satisfying the eavesdropping margin form a disk around
//! the eavesdropper. Their intersection is the core vulnerable area.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AttackError, EAVESDROP_SCR_DB, STEALTHY_SCR_DB};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    /// Altitude, m.
    pub alt: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64, alt: f64) -> Self {
        Self { x, y, alt }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.alt - other.alt).powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PathLossKind {
    LogDistance,
}

/// `L(d) = L0 + 10 * n * log10(d / d0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    pub kind: PathLossKind,
    pub exponent: f64,
    pub reference_loss_db: f64,
    pub reference_distance_m: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self { kind: PathLossKind::LogDistance, exponent: 2.75, reference_loss_db: 120.0, reference_distance_m: 1000.0 }
    }
}

impl PathLossModel {
    pub fn validate(&self) -> Result<(), AttackError> {
        if !(self.exponent > 0.0 && self.exponent.is_finite()) {
            return Err(AttackError::Parameter("path-loss exponent must be positive"));
        }
        if !(self.reference_loss_db >= 0.0 && self.reference_loss_db.is_finite()) {
            return Err(AttackError::Parameter("reference loss must be non-negative"));
        }
        if !(self.reference_distance_m > 0.0 && self.reference_distance_m.is_finite()) {
            return Err(AttackError::Parameter("reference distance must be positive"));
        }
        Ok(())
    }

    /// Loss at distance `d`; `-inf` at `d = 0`.
    pub fn loss_at(&self, d: f64) -> f64 {
        self.reference_loss_db + 10.0 * self.exponent * (d / self.reference_distance_m).log10()
    }

    /// Least-squares `(n, L0)` for a fixed `d0` from `(distance, loss)` pairs.
    pub fn fit(reference_distance_m: f64, table: &[(f64, f64)]) -> Result<Self, AttackError> {
        let x: Vec<f64> = table.iter().map(|(d, _)| 10.0 * (d / reference_distance_m).log10()).collect();
        let y: Vec<f64> = table.iter().map(|(_, l)| *l).collect();
        let line =
            crate::stats::fit_line(&x, &y).ok_or(AttackError::Parameter("reference table needs two distances"))?;
        let model = Self {
            kind: PathLossKind::LogDistance,
            exponent: line.slope,
            reference_loss_db: line.intercept,
            reference_distance_m,
        };
        model.validate()?;
        Ok(model)
    }
}

/// 3-D Euclidean path loss.
pub fn path_loss(model: &PathLossModel, from: &Position, to: &Position) -> Result<f64, AttackError> {
    let d = from.distance(to);
    if d <= 0.0 {
        return Err(AttackError::Coincident);
    }
    Ok(model.loss_at(d))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionScenario {
    pub gateway: Position,
    pub collider: Position,
    pub eavesdropper: Position,
    pub victim: Position,
    pub victim_power_dbm: f64,
    pub collider_power_dbm: f64,
    /// Collision lag over frame time, in `[0, 1]`.
    pub rtm: f64,
    pub replay_delay_s: f64,
    pub replayer_fb_hz: f64,
    /// Victim signals weaker than this at the eavesdropper cannot be recorded.
    #[serde(default)]
    pub eavesdropper_sensitivity_dbm: Option<f64>,
}

impl CollisionScenario {
    /// Gateway at 25 m, collider 50 m away at 2 dBm, eavesdropper 400 m away,
    /// victim at 14 dBm.
    pub fn example() -> Self {
        Self {
            gateway: Position::new(0.0, 0.0, 25.0),
            collider: Position::new(50.0, 0.0, 0.0),
            eavesdropper: Position::new(400.0, 0.0, 0.0),
            victim: Position::new(150.0, 100.0, 0.0),
            victim_power_dbm: 14.0,
            collider_power_dbm: 2.0,
            rtm: 0.2,
            replay_delay_s: 0.15,
            replayer_fb_hz: 0.0,
            eavesdropper_sensitivity_dbm: None,
        }
    }

    pub fn validate(&self) -> Result<(), AttackError> {
        if !(0.0..=1.0).contains(&self.rtm) {
            return Err(AttackError::Parameter("rtm must lie in [0, 1]"));
        }
        if !(self.replay_delay_s >= 0.0) {
            return Err(AttackError::Parameter("replay delay must be non-negative"));
        }
        Ok(())
    }
}

fn scr_unchecked(model: &PathLossModel, s: &CollisionScenario, victim: &Position, rx: &Position) -> f64 {
    (s.victim_power_dbm - model.loss_at(victim.distance(rx)))
        - (s.collider_power_dbm - model.loss_at(s.collider.distance(rx)))
}

/// `(P_v - L_vr) - (P_c - L_cr)` at `receiver`.
pub fn scr_at(receiver: &Position, scenario: &CollisionScenario, model: &PathLossModel) -> Result<f64, AttackError> {
    let lv = path_loss(model, &scenario.victim, receiver)?;
    let lc = path_loss(model, &scenario.collider, receiver)?;
    Ok((scenario.victim_power_dbm - lv) - (scenario.collider_power_dbm - lc))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub resolution_m: f64,
    pub victim_alt: f64,
}

impl GridSpec {
    pub fn square(half_width: f64, resolution_m: f64) -> Self {
        Self {
            x_min: -half_width,
            x_max: half_width,
            y_min: -half_width,
            y_max: half_width,
            resolution_m,
            victim_alt: 0.0,
        }
    }

    fn dims(&self) -> (usize, usize) {
        let nx = ((self.x_max - self.x_min) / self.resolution_m).floor().max(0.0) as usize;
        let ny = ((self.y_max - self.y_min) / self.resolution_m).floor().max(0.0) as usize;
        (nx, ny)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellClass {
    Outside,
    RingOnly,
    DiskOnly,
    Core,
}

impl CellClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellClass::Outside => "outside",
            CellClass::RingOnly => "ring_only",
            CellClass::DiskOnly => "disk_only",
            CellClass::Core => "core",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub x: f64,
    pub y: f64,
    pub class: CellClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaMap {
    pub core_area_m2: f64,
    pub ring_area_m2: f64,
    pub disk_area_m2: f64,
    /// Row-major from `(x_min, y_min)`, cell centres.
    pub cells: Vec<Cell>,
}

/// Classifies victim positions at cell centres. Order-independent and
/// parallel over rows.
pub fn vulnerable_area(
    scenario: &CollisionScenario,
    model: &PathLossModel,
    grid: &GridSpec,
) -> Result<AreaMap, AttackError> {
    model.validate()?;
    if !(grid.resolution_m > 0.0) {
        return Err(AttackError::Parameter("grid resolution must be positive"));
    }
    if grid.resolution_m > 5.0 {
        return Err(AttackError::CoarseGrid(grid.resolution_m));
    }
    let (nx, ny) = grid.dims();
    if nx == 0 || ny == 0 {
        return Err(AttackError::EmptyGrid);
    }
    let res = grid.resolution_m;
    let cells: Vec<Cell> = (0..ny)
        .into_par_iter()
        .flat_map_iter(|j| {
            let y = grid.y_min + (j as f64 + 0.5) * res;
            (0..nx).map(move |i| {
                let x = grid.x_min + (i as f64 + 0.5) * res;
                let victim = Position::new(x, y, grid.victim_alt);
                let scr_g = scr_unchecked(model, scenario, &victim, &scenario.gateway);
                let scr_e = scr_unchecked(model, scenario, &victim, &scenario.eavesdropper);
                let ring = (-STEALTHY_SCR_DB..=STEALTHY_SCR_DB).contains(&scr_g);
                let audible = scenario.eavesdropper_sensitivity_dbm.is_none_or(|s| {
                    scenario.victim_power_dbm - model.loss_at(victim.distance(&scenario.eavesdropper)) >= s
                });
                let disk = scr_e >= EAVESDROP_SCR_DB && audible;
                let class = match (ring, disk) {
                    (true, true) => CellClass::Core,
                    (true, false) => CellClass::RingOnly,
                    (false, true) => CellClass::DiskOnly,
                    (false, false) => CellClass::Outside,
                };
                Cell { x, y, class }
            })
        })
        .collect();
    let cell_area = res * res;
    let count = |f: &dyn Fn(CellClass) -> bool| cells.iter().filter(|c| f(c.class)).count() as f64 * cell_area;
    Ok(AreaMap {
        core_area_m2: count(&|c| c == CellClass::Core),
        ring_area_m2: count(&|c| matches!(c, CellClass::Core | CellClass::RingOnly)),
        disk_area_m2: count(&|c| matches!(c, CellClass::Core | CellClass::DiskOnly)),
        cells,
    })
}

/// Core area with the eavesdropper moved to `(d, 0, alt)` for each `d`.
pub fn area_vs_distance(
    scenario: &CollisionScenario,
    model: &PathLossModel,
    grid: &GridSpec,
    distances_m: &[f64],
) -> Result<Vec<(f64, f64)>, AttackError> {
    distances_m
        .iter()
        .map(|&d| {
            let mut s = *scenario;
            s.eavesdropper = Position::new(scenario.gateway.x + d, scenario.gateway.y, scenario.eavesdropper.alt);
            Ok((d, vulnerable_area(&s, model, grid)?.core_area_m2))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_distance_gives_reference_loss() {
        let m = PathLossModel::default();
        let a = Position::new(0.0, 0.0, 0.0);
        assert!((path_loss(&m, &a, &Position::new(1000.0, 0.0, 0.0)).unwrap() - 120.0).abs() < 1e-12);
        let l1 = path_loss(&m, &a, &Position::new(300.0, 0.0, 0.0)).unwrap();
        let l2 = path_loss(&m, &a, &Position::new(600.0, 0.0, 0.0)).unwrap();
        assert!((l2 - l1 - 27.5 * 2f64.log10()).abs() < 1e-12);
        assert_eq!(path_loss(&m, &a, &a), Err(AttackError::Coincident));
    }

    #[test]
    fn coarse_or_empty_grid_rejected() {
        let s = CollisionScenario::example();
        let m = PathLossModel::default();
        assert_eq!(vulnerable_area(&s, &m, &GridSpec::square(100.0, 6.0)), Err(AttackError::CoarseGrid(6.0)));
        assert_eq!(vulnerable_area(&s, &m, &GridSpec::square(0.0, 5.0)), Err(AttackError::EmptyGrid));
    }
}
