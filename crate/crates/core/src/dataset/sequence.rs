//! Snake-pattern placement sequencing: a square window sweeps rows bottom to
//! top, alternating left-to-right and right-to-left; a fragment is appended
//! the first time its centroid falls inside the window.

use super::{DatasetError, Fragment, FragmentId};
use crate::{geom, Point2, Scalar};

/// Orders fragments by the window sweep. `window_height` is the window side
/// (rows advance by it), `window_step` the horizontal stride within a row.
/// Closed window intervals and end-clamped positions cover the bounding box,
/// so the result is always a permutation of the fragment ids.
pub fn extract_sequence(
    fragments: &[Fragment],
    window_height: Scalar,
    window_step: Scalar,
) -> Result<Vec<FragmentId>, DatasetError> {
    if fragments.is_empty() {
        return Err(DatasetError::Validation("cannot sequence an empty layout".into()));
    }
    if !(window_height > 0.0 && window_step > 0.0) {
        return Err(DatasetError::Config(
            "window_height and window_step must be positive".into(),
        ));
    }
    let (lo, hi) = geom::bounding_box(fragments.iter().map(|f| (&f.shape, &f.layout_pose)))?;

    let centroids: Vec<(FragmentId, Point2)> = fragments
        .iter()
        .map(|f| (f.id, f.layout_pose.translation()))
        .collect();

    let mut xs: Vec<Scalar> = vec![lo.x];
    while *xs.last().unwrap() + window_height < hi.x {
        xs.push(xs.last().unwrap() + window_step);
    }

    let mut order: Vec<FragmentId> = Vec::with_capacity(fragments.len());
    let mut taken = vec![false; fragments.len()];
    let mut row = 0usize;
    let mut y0 = lo.y;
    while y0 <= hi.y {
        let y1 = y0 + window_height;
        let left_to_right = row % 2 == 0;
        let positions: Vec<Scalar> = if left_to_right {
            xs.clone()
        } else {
            xs.iter().rev().copied().collect()
        };
        for x0 in positions {
            let x1 = x0 + window_height;
            let mut newly: Vec<(FragmentId, Point2)> = centroids
                .iter()
                .filter(|(id, c)| {
                    !taken[*id as usize] && c.x >= x0 && c.x <= x1 && c.y >= y0 && c.y <= y1
                })
                .copied()
                .collect();
            // Within one window position, follow the sweep direction.
            newly.sort_by(|(ia, a), (ib, b)| {
                let primary = if left_to_right {
                    a.x.partial_cmp(&b.x)
                } else {
                    b.x.partial_cmp(&a.x)
                }
                .unwrap_or(std::cmp::Ordering::Equal);
                primary
                    .then(a.y.partial_cmp(&b.y).unwrap_or(std::cmp::Ordering::Equal))
                    .then(ia.cmp(ib))
            });
            for (id, _) in newly {
                taken[id as usize] = true;
                order.push(id);
            }
        }
        row += 1;
        y0 = lo.y + row as Scalar * window_height;
    }

    if order.len() != fragments.len() {
        return Err(DatasetError::Validation(
            "window sweep failed to cover every fragment centroid".into(),
        ));
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{ConvexPolygon, Pose2};

    fn square_fragment(id: FragmentId, cx: Scalar, cy: Scalar, side: Scalar) -> Fragment {
        Fragment {
            id,
            shape: ConvexPolygon::axis_aligned_rect(Point2::new(0.0, 0.0), side, side).unwrap(),
            layout_pose: Pose2::new(cx, cy, 0.0),
            mass: 1.0,
            height: 20.0,
        }
    }

    #[test]
    fn two_by_two_grid_snakes() {
        // Ids chosen so the expected order is not the id order.
        let frags = vec![
            square_fragment(0, 150.0, 50.0, 100.0),  // bottom right
            square_fragment(1, 50.0, 50.0, 100.0),   // bottom left
            square_fragment(2, 50.0, 150.0, 100.0),  // top left
            square_fragment(3, 150.0, 150.0, 100.0), // top right
        ];
        // Window of one row height: bottom row left-to-right, top row reversed.
        let order = extract_sequence(&frags, 100.0, 50.0).unwrap();
        assert_eq!(order, vec![1, 0, 3, 2]);
    }

    #[test]
    fn single_fragment_sequence() {
        let frags = vec![square_fragment(0, 10.0, 10.0, 20.0)];
        assert_eq!(extract_sequence(&frags, 100.0, 50.0).unwrap(), vec![0]);
    }

    #[test]
    fn boundary_centroid_is_still_covered() {
        // Centroid exactly at the top of the bounding box: the final row's
        // closed interval must catch it.
        let frags = vec![
            square_fragment(0, 50.0, 50.0, 100.0),
            square_fragment(1, 50.0, 250.0, 100.0),
        ];
        let order = extract_sequence(&frags, 90.0, 45.0).unwrap();
        assert_eq!(order.len(), 2);
        assert_eq!(order[0], 0);
    }

    #[test]
    fn empty_layout_errors() {
        assert!(extract_sequence(&[], 100.0, 50.0).is_err());
    }
}
