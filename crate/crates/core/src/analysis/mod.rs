//! Metrics and figure data: temporal gradient fields, isochrone contours,
//! oracle comparison reports, and the per-iteration induction audit.

mod contour;

pub use contour::{march_level, Polyline};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::IterationRecord;
use crate::jsonutil::canon_f64;
use crate::network::{bfs_on, reverse_adjacency, BoundingBox, NodeId, Point2, SpatialNetwork};
use crate::protocol::{InhibitionMode, TIME_EPS};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("degenerate field: all unmasked values are equal")]
    DegenerateField,
}

/// First-spike samples of one iteration, positioned in space.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeField {
    pub samples: Vec<(Point2, f64)>,
}

impl SpikeField {
    /// One sample per neuron that spiked in the record.
    pub fn from_record(net: &SpatialNetwork, record: &IterationRecord) -> Self {
        let samples = record
            .spike_time
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.map(|t| (net.position(NodeId(i as u32)), t)))
            .collect();
        Self { samples }
    }
}

/// Rasterized spike-time field over the environment bounding box. Cells with
/// no sample within the influence radius are masked.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub resolution: usize,
    pub bbox: BoundingBox,
    /// Row-major, `values[row * resolution + col]`.
    pub values: Vec<Option<f64>>,
}

impl FieldGrid {
    pub fn value(&self, col: usize, row: usize) -> Option<f64> {
        self.values[row * self.resolution + col]
    }

    /// Center of the cell at integer coordinates, in meters.
    pub fn cell_center(&self, col: usize, row: usize) -> Point2 {
        self.world_point(col as f64, row as f64)
    }

    /// Map fractional cell coordinates (cell-center convention) to meters.
    pub fn world_point(&self, col: f64, row: f64) -> Point2 {
        let step_x = self.bbox.width() / self.resolution as f64;
        let step_y = self.bbox.height() / self.resolution as f64;
        Point2::new(
            self.bbox.min_x + (col + 0.5) * step_x,
            self.bbox.min_y + (row + 0.5) * step_y,
        )
    }
}

/// Inverse-distance-weighted (power 2) rasterization of a spike field.
///
/// Each cell is the IDW mean of the sample times within `influence_radius`
/// of the cell center; a cell centered exactly on a sample takes that
/// sample's time.
pub fn rasterize_field(
    sf: &SpikeField,
    bbox: BoundingBox,
    resolution: usize,
    influence_radius: f64,
) -> FieldGrid {
    assert!(resolution >= 8, "resolution must be >= 8");
    let r2 = influence_radius * influence_radius;
    let mut grid = FieldGrid {
        resolution,
        bbox,
        values: vec![None; resolution * resolution],
    };
    for row in 0..resolution {
        for col in 0..resolution {
            let c = grid.cell_center(col, row);
            let mut num = 0.0f64;
            let mut den = 0.0f64;
            let mut exact = None;
            for &(p, t) in &sf.samples {
                let d2 = c.dist2(p);
                if d2 > r2 {
                    continue;
                }
                if d2 < 1e-24 {
                    exact = Some(t);
                    break;
                }
                let w = 1.0 / d2;
                num += w * t;
                den += w;
            }
            grid.values[row * resolution + col] = match exact {
                Some(t) => Some(t),
                None if den > 0.0 => Some(num / den),
                None => None,
            };
        }
    }
    grid
}

/// Spike-time range across a whole run, so contour levels stay comparable
/// between iterations.
pub fn run_time_range(records: &[IterationRecord]) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for rec in records {
        for t in rec.spike_time.iter().flatten() {
            lo = lo.min(*t);
            hi = hi.max(*t);
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// `n_levels` evenly spaced interior levels between `lo` and `hi`.
pub fn contour_levels(lo: f64, hi: f64, n_levels: usize) -> Result<Vec<f64>, AnalysisError> {
    assert!(n_levels >= 2, "n_levels must be >= 2");
    let span = hi - lo;
    if span.is_nan() || span <= TIME_EPS {
        return Err(AnalysisError::DegenerateField);
    }
    let step = span / (n_levels as f64 + 1.0);
    Ok((1..=n_levels).map(|k| lo + k as f64 * step).collect())
}

/// Isolines of the grid at `n_levels` evenly spaced levels over the given
/// run-wide value range; polylines are clipped to the unmasked region.
pub fn contour_lines(
    grid: &FieldGrid,
    n_levels: usize,
    value_range: (f64, f64),
) -> Result<Vec<(f64, Vec<Polyline>)>, AnalysisError> {
    let levels = contour_levels(value_range.0, value_range.1, n_levels)?;
    Ok(levels
        .into_iter()
        .map(|level| (level, march_level(grid, level)))
        .collect())
}

/// Set-difference report between a run's readout and the exact oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub exact_match: bool,
    /// Oracle minus readout, ascending.
    pub missing: Vec<NodeId>,
    /// Readout minus oracle, ascending.
    pub extra: Vec<NodeId>,
    /// |intersection| / |union|; 1 when both sets are empty.
    pub jaccard: f64,
}

/// Compare the readout spiking set against the oracle node set.
pub fn compare_to_oracle(readout: &BTreeSet<NodeId>, oracle: &BTreeSet<NodeId>) -> OracleReport {
    let missing: Vec<NodeId> = oracle.difference(readout).copied().collect();
    let extra: Vec<NodeId> = readout.difference(oracle).copied().collect();
    let intersection = oracle.intersection(readout).count();
    let union = oracle.union(readout).count();
    let jaccard = if union == 0 {
        1.0
    } else {
        intersection as f64 / union as f64
    };
    OracleReport {
        exact_match: missing.is_empty() && extra.is_empty(),
        missing,
        extra,
        jaccard,
    }
}

/// First spike time of any target within an iteration.
pub fn time_to_target(record: &IterationRecord, targets: &[NodeId]) -> Option<f64> {
    targets
        .iter()
        .filter_map(|t| record.spike_time[t.index()])
        .min_by(f64::total_cmp)
}

/// Audit outcome for one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub index: usize,
    pub pass: bool,
    /// On-path nodes within k hops of the target that are not tagged.
    pub missing: Vec<NodeId>,
    /// Tagged nodes farther than k hops from the target.
    pub too_far: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub pass: bool,
    pub entries: Vec<AuditEntry>,
}

/// Check the inductive tagging invariant against the BFS oracle, for every
/// iteration record.
///
/// Upper bound (any mode): after iteration k the tagged set contains only
/// nodes within k hops of the target, plus the target itself — tags advance
/// at most one hop per iteration. Lower bound (global inhibition, where the
/// convergence argument applies): every node on some shortest source-target
/// path within k hops of the target is tagged.
pub fn audit_induction(
    records: &[IterationRecord],
    net: &SpatialNetwork,
    source: NodeId,
    target: NodeId,
    mode: InhibitionMode,
) -> AuditReport {
    let from_source = bfs_on(net.adjacency(), source);
    let to_target = bfs_on(&reverse_adjacency(net.adjacency()), target);
    let total = from_source[target.index()];
    let on_path = |v: NodeId| -> bool {
        matches!(
            (from_source[v.index()], to_target[v.index()], total),
            (Some(ds), Some(dt), Some(d)) if ds + dt == d
        )
    };

    let mut entries = Vec::new();
    let mut pass = true;
    for rec in records {
        let k = rec.index as u32;
        let tagged: BTreeSet<NodeId> = rec.tagged_after.iter().copied().collect();
        let too_far: Vec<NodeId> = tagged
            .iter()
            .copied()
            .filter(|&v| v != target && !matches!(to_target[v.index()], Some(dt) if dt <= k))
            .collect();
        let missing: Vec<NodeId> = if mode == InhibitionMode::Global {
            net.node_ids()
                .filter(|&v| {
                    on_path(v)
                        && matches!(to_target[v.index()], Some(dt) if dt <= k)
                        && !tagged.contains(&v)
                })
                .collect()
        } else {
            Vec::new()
        };
        let entry_pass = too_far.is_empty() && missing.is_empty();
        pass &= entry_pass;
        entries.push(AuditEntry {
            index: rec.index,
            pass: entry_pass,
            missing,
            too_far,
        });
    }
    AuditReport { pass, entries }
}

/// `metrics.csv` content: one row per iteration.
pub fn metrics_csv(records: &[IterationRecord]) -> String {
    let mut out = String::from("index,ttt_ms,n_spiked,n_tagged,n_newly_tagged,quiesced_at_ms\n");
    for rec in records {
        let ttt = rec
            .ttt
            .map(|t| canon_f64(t).to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            rec.index,
            ttt,
            rec.n_spiked(),
            rec.tagged_after.len(),
            rec.newly_tagged.len(),
            canon_f64(rec.quiesced_at),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(
        index: usize,
        spike_time: Vec<Option<f64>>,
        tagged_after: Vec<NodeId>,
    ) -> IterationRecord {
        IterationRecord {
            index,
            ttt: None,
            spike_time,
            tagged_after,
            newly_tagged: vec![],
            quiesced_at: 0.0,
            emissions: 0,
        }
    }

    #[test]
    fn ttt_picks_first_target_spike() {
        let rec = record(1, vec![Some(10.0), Some(96.0), None], vec![]);
        assert_eq!(time_to_target(&rec, &[NodeId(1)]), Some(96.0));
        assert_eq!(time_to_target(&rec, &[NodeId(2)]), None);
        assert_eq!(time_to_target(&rec, &[NodeId(1), NodeId(0)]), Some(10.0));
    }

    #[test]
    fn idw_identity_on_sample() {
        // Resolution 9 puts a cell center exactly at (0.5, 0.5).
        let sf = SpikeField {
            samples: vec![(Point2::new(0.5, 0.5), 42.0)],
        };
        let grid = rasterize_field(&sf, BoundingBox::unit(), 9, 0.3);
        assert_eq!(grid.value(4, 4), Some(42.0));
    }

    #[test]
    fn idw_midpoint_of_equidistant_samples() {
        let sf = SpikeField {
            samples: vec![
                (Point2::new(0.25, 0.5), 10.0),
                (Point2::new(0.75, 0.5), 20.0),
            ],
        };
        let grid = rasterize_field(&sf, BoundingBox::unit(), 9, 1.0);
        let mid = grid.value(4, 4).unwrap();
        assert!((mid - 15.0).abs() < 1e-12);
    }

    #[test]
    fn cells_off_radius_are_masked() {
        let sf = SpikeField {
            samples: vec![(Point2::new(0.1, 0.1), 5.0)],
        };
        let grid = rasterize_field(&sf, BoundingBox::unit(), 9, 0.1);
        assert_eq!(grid.value(8, 8), None);
    }

    #[test]
    fn constant_field_is_degenerate() {
        assert!(matches!(
            contour_levels(7.0, 7.0, 5),
            Err(AnalysisError::DegenerateField)
        ));
    }

    #[test]
    fn ramp_has_n_levels_of_parallel_lines() {
        let mut samples = Vec::new();
        for i in 0..=30 {
            for j in 0..=30 {
                let x = i as f64 / 30.0;
                samples.push((Point2::new(x, j as f64 / 30.0), x));
            }
        }
        let grid = rasterize_field(&SpikeField { samples }, BoundingBox::unit(), 20, 0.2);
        let lines = contour_lines(&grid, 5, (0.0, 1.0)).unwrap();
        assert_eq!(lines.len(), 5);
        for (level, polylines) in &lines {
            assert!(!polylines.is_empty(), "no isoline at level {level}");
            for line in polylines {
                for p in line {
                    assert!((p.x - level).abs() < 0.06);
                }
            }
        }
    }

    #[test]
    fn oracle_report_cases() {
        let oracle: BTreeSet<NodeId> = [0, 1, 2].map(NodeId).into();
        let same = compare_to_oracle(&oracle, &oracle);
        assert!(same.exact_match);
        assert_eq!(same.jaccard, 1.0);

        let mut extra = oracle.clone();
        extra.insert(NodeId(9));
        let report = compare_to_oracle(&extra, &oracle);
        assert!(!report.exact_match);
        assert_eq!(report.extra, vec![NodeId(9)]);
        assert!(report.missing.is_empty());
        assert!((report.jaccard - 3.0 / 4.0).abs() < 1e-15);

        let empty = BTreeSet::new();
        assert_eq!(compare_to_oracle(&empty, &empty).jaccard, 1.0);
    }

    #[test]
    fn audit_detects_removed_and_far_tags() {
        let net = crate::network::path_graph(4);
        let (s, t) = (NodeId(0), NodeId(3));
        // Correct progression on a 4-node path.
        let good = vec![
            record(1, vec![None; 4], vec![NodeId(2), NodeId(3)]),
            record(2, vec![None; 4], vec![NodeId(1), NodeId(2), NodeId(3)]),
            record(
                3,
                vec![None; 4],
                vec![NodeId(0), NodeId(1), NodeId(2), NodeId(3)],
            ),
        ];
        assert!(audit_induction(&good, &net, s, t, InhibitionMode::Global).pass);

        // Fault injection: drop a tag the hypothesis requires.
        let mut corrupted = good.clone();
        corrupted[1].tagged_after = vec![NodeId(2), NodeId(3)];
        let report = audit_induction(&corrupted, &net, s, t, InhibitionMode::Global);
        assert!(!report.pass);
        assert_eq!(report.entries[1].missing, vec![NodeId(1)]);

        // Fault injection: tag a node the bound forbids.
        let mut eager = good.clone();
        eager[0].tagged_after = vec![NodeId(0), NodeId(2), NodeId(3)];
        let report = audit_induction(&eager, &net, s, t, InhibitionMode::Global);
        assert!(!report.pass);
        assert_eq!(report.entries[0].too_far, vec![NodeId(0)]);
    }

    #[test]
    fn audit_vacuous_without_tags() {
        let net = crate::network::path_graph(4);
        let none_run = vec![
            record(1, vec![None; 4], vec![NodeId(3)]),
            record(2, vec![None; 4], vec![NodeId(3)]),
        ];
        assert!(audit_induction(&none_run, &net, NodeId(0), NodeId(3), InhibitionMode::None).pass);
    }

    #[test]
    fn metrics_csv_shape() {
        let rec = IterationRecord {
            index: 1,
            ttt: Some(21.2),
            spike_time: vec![Some(10.1), Some(21.2)],
            tagged_after: vec![NodeId(0), NodeId(1)],
            newly_tagged: vec![NodeId(0)],
            quiesced_at: 34.2,
            emissions: 2,
        };
        let csv = metrics_csv(&[rec]);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "index,ttt_ms,n_spiked,n_tagged,n_newly_tagged,quiesced_at_ms"
        );
        assert_eq!(lines.next().unwrap(), "1,21.2,2,2,1,34.2");
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]
        #[test]
        fn jaccard_matches_definition(
            a in prop::collection::btree_set(0u32..40, 0..25),
            b in prop::collection::btree_set(0u32..40, 0..25),
        ) {
            let sa: BTreeSet<NodeId> = a.iter().copied().map(NodeId).collect();
            let sb: BTreeSet<NodeId> = b.iter().copied().map(NodeId).collect();
            let report = compare_to_oracle(&sa, &sb);
            let inter = a.intersection(&b).count() as f64;
            let union = a.union(&b).count() as f64;
            let expect = if union == 0.0 { 1.0 } else { inter / union };
            prop_assert!((report.jaccard - expect).abs() < 1e-15);
            prop_assert_eq!(report.exact_match, sa == sb);
            prop_assert_eq!(report.exact_match, report.jaccard == 1.0);
        }

        #[test]
        fn rasterization_is_translation_equivariant(
            dx in -3.0f64..3.0,
            dy in -3.0f64..3.0,
        ) {
            let samples = vec![
                (Point2::new(0.2, 0.3), 5.0),
                (Point2::new(0.7, 0.6), 12.0),
                (Point2::new(0.4, 0.8), 9.0),
            ];
            let shifted = samples
                .iter()
                .map(|&(p, t)| (Point2::new(p.x + dx, p.y + dy), t))
                .collect();
            let bbox = BoundingBox::unit();
            let shifted_bbox = BoundingBox {
                min_x: bbox.min_x + dx,
                min_y: bbox.min_y + dy,
                max_x: bbox.max_x + dx,
                max_y: bbox.max_y + dy,
            };
            let g0 = rasterize_field(&SpikeField { samples }, bbox, 12, 0.4);
            let g1 = rasterize_field(&SpikeField { samples: shifted }, shifted_bbox, 12, 0.4);
            let l0 = march_level(&g0, 8.0);
            let l1 = march_level(&g1, 8.0);
            prop_assert_eq!(l0.len(), l1.len());
            for (a, b) in l0.iter().zip(&l1) {
                prop_assert_eq!(a.len(), b.len());
                for (p, q) in a.iter().zip(b) {
                    prop_assert!((p.x + dx - q.x).abs() < 1e-9);
                    prop_assert!((p.y + dy - q.y).abs() < 1e-9);
                }
            }
        }
    }
}
