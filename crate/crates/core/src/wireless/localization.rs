use rand::Rng;
use rand_distr::StandardNormal;

use super::{IndexMap, MeasurementModel, Scenario};
use crate::error::{invalid, Result};
use crate::linalg::{check_dims, CMatrix, CVector, C64};
use crate::solvers::{omp, SolverConfig};

/// Received-signal-strength fingerprint map over a rectangular grid.
///
/// Entry `(i, j)` is the average linear power that access point `i` receives
/// from a unit transmitter in cell `j`, following log-distance path loss
/// `P0 − 10 η log10(d / d0)` dBm with `d` clamped below at `d0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RssMap {
    pub width: usize,
    pub height: usize,
    pub cell_size: f64,
    pub access_points: Vec<(f64, f64)>,
    pub reference_power_dbm: f64,
    pub reference_distance: f64,
    pub path_loss_exponent: f64,
}

impl RssMap {
    /// Access points on staggered rows: `round(√aps)` rows, with the
    /// remainder going to the middle rows.
    pub fn staggered(width: usize, height: usize, aps: usize) -> Self {
        let rows = ((aps as f64).sqrt().round() as usize).clamp(1, aps.max(1));
        let base = aps / rows;
        let extra = aps % rows;
        let first_extra = (rows - extra) / 2;
        let mut access_points = Vec::with_capacity(aps);
        for r in 0..rows {
            let count = base + usize::from(r >= first_extra && r < first_extra + extra);
            let y = (r as f64 + 0.5) * height as f64 / rows as f64;
            for i in 0..count {
                access_points.push(((i as f64 + 0.5) * width as f64 / count as f64, y));
            }
        }
        Self::with_access_points(width, height, access_points)
    }

    /// Unit cells, `-30` dBm at `0.5` cell and path-loss exponent 3.
    pub fn with_access_points(width: usize, height: usize, access_points: Vec<(f64, f64)>) -> Self {
        Self {
            width,
            height,
            cell_size: 1.0,
            access_points,
            reference_power_dbm: -30.0,
            reference_distance: 0.5,
            path_loss_exponent: 3.0,
        }
    }

    /// Square-ish grid with access points drawn uniformly over the area.
    pub fn with_random_aps<R: Rng + ?Sized>(
        width: usize,
        height: usize,
        aps: usize,
        rng: &mut R,
    ) -> Self {
        let access_points = (0..aps)
            .map(|_| {
                (
                    rng.random_range(0.0..width as f64),
                    rng.random_range(0.0..height as f64),
                )
            })
            .collect();
        Self::with_access_points(width, height, access_points)
    }

    pub fn cells(&self) -> usize {
        self.width * self.height
    }

    pub fn cell_center(&self, j: usize) -> (f64, f64) {
        let (x, y) = (j % self.width, j / self.width);
        ((x as f64 + 0.5) * self.cell_size, (y as f64 + 0.5) * self.cell_size)
    }

    /// Euclidean distance between two cells in cell units.
    pub fn cell_distance(&self, a: usize, b: usize) -> f64 {
        let (ax, ay) = self.cell_center(a);
        let (bx, by) = self.cell_center(b);
        ((ax - bx).hypot(ay - by)) / self.cell_size
    }

    pub fn average_rss(&self, ap: usize, cell: usize) -> f64 {
        let (cx, cy) = self.cell_center(cell);
        let (px, py) = self.access_points[ap];
        let d = (cx - px).hypot(cy - py).max(self.reference_distance);
        let dbm = self.reference_power_dbm
            - 10.0 * self.path_loss_exponent * (d / self.reference_distance).log10();
        10f64.powf(dbm / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells() == 0 || self.access_points.is_empty() {
            return Err(invalid("grid and access point set must be nonempty"));
        }
        let params = [self.cell_size, self.reference_distance, self.path_loss_exponent];
        if params.iter().any(|v| !(v.is_finite() && *v > 0.0)) || !self.reference_power_dbm.is_finite() {
            return Err(invalid("path-loss parameters must be finite and positive"));
        }
        Ok(())
    }
}

pub fn build_localization_model(map: &RssMap) -> Result<MeasurementModel> {
    map.validate()?;
    let h = CMatrix::from_fn(map.access_points.len(), map.cells(), |i, j| {
        C64::new(map.average_rss(i, j), 0.0)
    });
    Ok(MeasurementModel::new(h, Scenario::Localization)?.with_index_map(IndexMap::Grid {
        width: map.width,
        height: map.height,
    }))
}

/// RSS readings for unit-power targets in `cells`, with independent
/// log-normal shadowing of standard deviation `sigma_db` at each access point.
pub fn observe_rss<R: Rng + ?Sized>(
    model: &MeasurementModel,
    cells: &[usize],
    sigma_db: f64,
    rng: &mut R,
) -> Result<CVector> {
    if let Some(&bad) = cells.iter().find(|&&j| j >= model.cols()) {
        return Err(invalid(format!("cell {bad} outside the grid")));
    }
    if !(sigma_db.is_finite() && sigma_db >= 0.0) {
        return Err(invalid("shadowing deviation must be nonnegative"));
    }
    Ok(CVector::from_fn(model.rows(), |i, _| {
        let clean: f64 = cells.iter().map(|&j| model.h[(i, j)].re).sum();
        let shadow: f64 = rng.sample(StandardNormal);
        C64::new(clean * 10f64.powf(sigma_db * shadow / 10.0), 0.0)
    }))
}

/// Locates `targets` unit transmitters by OMP on relative RSS.
///
/// Row `i` is divided by the reading `y_i`, turning multiplicative shadowing
/// into roughly equal additive errors on every access point before the
/// pursuit runs on `diag(1/y) P s = 1`.
pub fn localize_targets(model: &MeasurementModel, y: &CVector, targets: usize) -> Result<Vec<usize>> {
    check_dims(&model.h, y)?;
    if y.iter().any(|v| !(v.re > 0.0 && v.re.is_finite())) {
        return Err(invalid("RSS readings must be positive"));
    }
    let weighted = CMatrix::from_fn(model.rows(), model.cols(), |i, j| model.h[(i, j)] / y[i].re);
    let ones = CVector::from_element(model.rows(), C64::new(1.0, 0.0));
    Ok(omp(&weighted, &ones, &SolverConfig::with_k(targets))?.support)
}
