use std::collections::BTreeMap;

/// Filtered wideband SINR per mmWave cell, as reported to the anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementReport {
    pub ue_id: u32,
    pub cells: BTreeMap<u32, f64>,
    pub report_time: f64,
}

impl MeasurementReport {
    pub fn best(&self) -> Option<(u32, f64)> {
        // ties go to the lowest cell id
        self.cells
            .iter()
            .fold(None, |acc: Option<(u32, f64)>, (&c, &s)| match acc {
                Some((_, b)) if b >= s => acc,
                _ => Some((c, s)),
            })
    }

    pub fn all_below(&self, threshold_db: f64) -> bool {
        self.cells.values().all(|&s| s < threshold_db)
    }
}

/// Exponential moving average per cell. The first sample seeds the filter.
#[derive(Debug, Clone)]
pub struct MeasurementFilter {
    pub alpha: f64,
    state: BTreeMap<u32, f64>,
}

impl MeasurementFilter {
    pub fn new(alpha: f64) -> Self {
        debug_assert!(alpha > 0.0 && alpha <= 1.0);
        MeasurementFilter {
            alpha,
            state: BTreeMap::new(),
        }
    }

    pub fn collect(&mut self, ue_id: u32, samples: &BTreeMap<u32, f64>, now: f64) -> MeasurementReport {
        for (&cell, &s) in samples {
            self.state
                .entry(cell)
                .and_modify(|v| *v += self.alpha * (s - *v))
                .or_insert(s);
        }
        MeasurementReport {
            ue_id,
            cells: self.state.clone(),
            report_time: now,
        }
    }
}

/// Best cell with hysteresis; `None` when every cell is below the outage
/// threshold.
pub fn select_secondary(
    report: &MeasurementReport,
    current: Option<u32>,
    hysteresis_db: f64,
    outage_threshold_db: f64,
) -> Option<u32> {
    if report.all_below(outage_threshold_db) {
        return None;
    }
    let (best, best_sinr) = report.best()?;
    match current.and_then(|c| report.cells.get(&c).map(|&s| (c, s))) {
        Some((c, s)) if s >= outage_threshold_db && best_sinr - s < hysteresis_db => Some(c),
        _ => Some(best),
    }
}
