//! Marching-squares isoline extraction over a masked scalar grid.
//!
//! Cells with any masked corner are skipped, which clips polylines to the
//! unmasked region. Edge crossings are linearly interpolated; segment
//! endpoints on a shared cell edge are computed from the same corner values,
//! so chaining can match endpoints bit-exactly.

use std::collections::HashMap;

use crate::analysis::FieldGrid;
use crate::network::Point2;

/// Ordered points of one isoline.
pub type Polyline = Vec<Point2>;

/// Extract the isolines of `grid` at `level`, in world coordinates.
pub fn march_level(grid: &FieldGrid, level: f64) -> Vec<Polyline> {
    let res = grid.resolution;
    let mut segments: Vec<(Point2, Point2)> = Vec::new();

    for row in 0..res.saturating_sub(1) {
        for col in 0..res.saturating_sub(1) {
            // Corner values of the cell (col..col+1, row..row+1).
            let (Some(bl), Some(br), Some(tr), Some(tl)) = (
                grid.value(col, row),
                grid.value(col + 1, row),
                grid.value(col + 1, row + 1),
                grid.value(col, row + 1),
            ) else {
                continue;
            };

            let mut case = 0u8;
            if bl > level {
                case |= 1;
            }
            if br > level {
                case |= 2;
            }
            if tr > level {
                case |= 4;
            }
            if tl > level {
                case |= 8;
            }
            if case == 0 || case == 15 {
                continue;
            }

            // Interpolated crossing on each cell edge.
            let interp = |a: f64, b: f64| (level - a) / (b - a);
            let bottom = || {
                grid.world_point(col as f64 + interp(bl, br), row as f64)
            };
            let top = || grid.world_point(col as f64 + interp(tl, tr), row as f64 + 1.0);
            let left = || grid.world_point(col as f64, row as f64 + interp(bl, tl));
            let right = || grid.world_point(col as f64 + 1.0, row as f64 + interp(br, tr));

            match case {
                1 => segments.push((left(), bottom())),
                2 => segments.push((bottom(), right())),
                3 => segments.push((left(), right())),
                4 => segments.push((right(), top())),
                5 => {
                    // Saddle: resolve by the cell-center mean.
                    if (bl + br + tr + tl) / 4.0 > level {
                        segments.push((left(), top()));
                        segments.push((right(), bottom()));
                    } else {
                        segments.push((left(), bottom()));
                        segments.push((right(), top()));
                    }
                }
                6 => segments.push((bottom(), top())),
                7 => segments.push((left(), top())),
                8 => segments.push((top(), left())),
                9 => segments.push((top(), bottom())),
                10 => {
                    if (bl + br + tr + tl) / 4.0 > level {
                        segments.push((top(), right()));
                        segments.push((bottom(), left()));
                    } else {
                        segments.push((top(), left()));
                        segments.push((bottom(), right()));
                    }
                }
                11 => segments.push((top(), right())),
                12 => segments.push((right(), left())),
                13 => segments.push((right(), bottom())),
                14 => segments.push((bottom(), left())),
                _ => unreachable!(),
            }
        }
    }

    chain_segments(segments)
}

fn key(p: Point2) -> (u64, u64) {
    (p.x.to_bits(), p.y.to_bits())
}

/// Join segments into polylines by exact endpoint match. Deterministic:
/// seeds from segments in production order, extends forward then backward.
fn chain_segments(segments: Vec<(Point2, Point2)>) -> Vec<Polyline> {
    let mut by_start: HashMap<(u64, u64), Vec<usize>> = HashMap::new();
    for (i, seg) in segments.iter().enumerate() {
        by_start.entry(key(seg.0)).or_default().push(i);
    }
    let mut used = vec![false; segments.len()];
    let take_from = |start: (u64, u64), used: &mut Vec<bool>| -> Option<usize> {
        let candidates = by_start.get(&start)?;
        candidates.iter().copied().find(|&i| !used[i])
    };

    let mut polylines = Vec::new();
    for first in 0..segments.len() {
        if used[first] {
            continue;
        }
        used[first] = true;
        let mut line = vec![segments[first].0, segments[first].1];
        // Extend forward from the tail.
        while let Some(i) = take_from(key(*line.last().unwrap()), &mut used) {
            used[i] = true;
            line.push(segments[i].1);
        }
        // Extend backward by walking segments that end at the head.
        loop {
            let head = key(line[0]);
            let found = segments
                .iter()
                .enumerate()
                .find(|(i, seg)| !used[*i] && key(seg.1) == head);
            match found {
                Some((i, seg)) => {
                    used[i] = true;
                    line.insert(0, seg.0);
                }
                None => break,
            }
        }
        polylines.push(line);
    }
    polylines
}
