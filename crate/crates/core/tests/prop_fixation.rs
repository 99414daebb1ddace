use std::collections::BTreeMap;

use egolead::gaze_events::{EventKind, EyeMovementEvent};
use egolead::ingest::{FramedGaze, FramedSample};
use egolead::object_fixation::{
    assign_fixation, mode_with_tiebreak, AssignContext, BoxFrame, BoxTrackLabelSource, LabelSource,
};
use egolead::{BBox, Category, CategoryPriority, Point};
use proptest::prelude::*;

const W: u32 = 48;
const H: u32 = 36;

fn category() -> impl Strategy<Value = Category> {
    prop::sample::select(Category::ALL.to_vec())
}

fn priority() -> impl Strategy<Value = CategoryPriority> {
    Just(Category::ALL.to_vec()).prop_shuffle().prop_map(CategoryPriority::new)
}

fn bbox() -> impl Strategy<Value = BBox> {
    (0.0..W as f64 - 2.0, 0.0..H as f64 - 2.0, 1.0..30.0f64, 1.0..30.0f64)
        .prop_map(|(x, y, w, h)| BBox::new(x, y, (x + w).min(W as f64), (y + h).min(H as f64)))
}

/// Up to six objects with random boxes and categories, and a random draw order.
fn scene() -> impl Strategy<Value = (Vec<(u32, BBox)>, BTreeMap<u32, Category>, Vec<u32>)> {
    prop::collection::vec((bbox(), category()), 1..6).prop_flat_map(|objs| {
        let ids: Vec<u32> = (1..=objs.len() as u32).collect();
        let boxes: Vec<(u32, BBox)> = ids.iter().zip(&objs).map(|(&i, (b, _))| (i, *b)).collect();
        let mut cats: BTreeMap<u32, Category> = ids.iter().zip(&objs).map(|(&i, (_, c))| (i, *c)).collect();
        cats.insert(0, Category::Unknown);
        (Just(boxes), Just(cats), Just(ids).prop_shuffle())
    })
}

fn gaze_points(n: usize) -> impl Strategy<Value = Vec<Option<Point>>> {
    prop::collection::vec(prop::option::weighted(0.9, (0.0..W as f64, 0.0..H as f64).prop_map(|(x, y)| Point::new(x, y))), n)
}

fn framed(points: &[Option<Point>]) -> FramedGaze {
    FramedGaze {
        frames: points
            .iter()
            .enumerate()
            .map(|(i, &g)| FramedSample { frame_idx: i as u64, t_ns: i as i64 * 33_333_333, sample: g.map(|_| i), gaze: g })
            .collect(),
    }
}

fn static_boxes(boxes: &[(u32, BBox)], n: usize, order: Vec<u32>) -> LabelSource {
    LabelSource::Boxes(BoxTrackLabelSource {
        frames: (0..n)
            .map(|i| BoxFrame { frame_idx: i as u64, t_ns: i as i64 * 33_333_333, boxes: boxes.to_vec() })
            .collect(),
        priority: order,
        width: W,
        height: H,
    })
}

/// Reference lookup: first id in draw order whose half-open box holds `p`.
fn label_oracle(boxes: &[(u32, BBox)], order: &[u32], p: Point) -> u32 {
    order
        .iter()
        .copied()
        .find(|id| boxes.iter().any(|(b_id, b)| b_id == id && p.x >= b.x0 && p.x < b.x1 && p.y >= b.y0 && p.y < b.y1))
        .unwrap_or(0)
}

fn whole(n: usize) -> EyeMovementEvent {
    EyeMovementEvent {
        start_ns: 0,
        end_ns: (n as i64 - 1).max(0) * 33_333_333,
        kind: EventKind::Fixation,
        peak_velocity: 0.0,
        mean_position: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn mode_beats_every_other_label(
        tally in prop::collection::btree_map(0u32..8, 1usize..12, 1..8),
        cats in prop::collection::vec(category(), 8),
        prio in priority(),
    ) {
        let cat = |id: u32| cats[id as usize];
        let (win, n) = mode_with_tiebreak(&tally, cat, &prio).unwrap();
        prop_assert_eq!(tally[&win], n);
        for (&id, &c) in &tally {
            prop_assert!(c <= n);
            if c == n && id != win {
                let key = |i: u32| (prio.rank(cat(i)), i);
                prop_assert!(key(win) < key(id));
            }
        }
    }

    #[test]
    fn assignment_matches_brute_force_tally(
        (boxes, cats, order) in scene(),
        points in gaze_points(40),
        prio in priority(),
    ) {
        let labels = static_boxes(&boxes, points.len(), order.clone());
        let gaze = framed(&points);
        let ctx = AssignContext { labels: &labels, framed_gaze: &gaze, category_map: &cats, priority: &prio };
        let a = assign_fixation(&whole(points.len()), 0, &ctx);

        let mut tally: BTreeMap<u32, usize> = BTreeMap::new();
        for p in points.iter().flatten() {
            *tally.entry(label_oracle(&boxes, &order, *p)).or_default() += 1;
        }
        let total: usize = tally.values().sum();
        prop_assert_eq!(a.votes, total);
        if total == 0 {
            prop_assert_eq!(a.object_id, 0);
        } else {
            let best = *tally.values().max().unwrap();
            prop_assert_eq!(tally.get(&a.object_id).copied(), Some(best));
            prop_assert_eq!((a.support * total as f64).round() as usize, best);
            prop_assert!(a.support > 0.0 && a.support <= 1.0);
        }
        prop_assert_eq!(a.category, cats[&a.object_id]);
    }

    #[test]
    fn frame_order_does_not_matter(
        (boxes, cats, order) in scene(),
        (points, shuffled) in gaze_points(30).prop_flat_map(|p| (Just(p.clone()), Just(p).prop_shuffle())),
    ) {
        let labels = static_boxes(&boxes, points.len(), order);
        let prio = CategoryPriority::default();
        let run = |pts: &[Option<Point>]| {
            let gaze = framed(pts);
            let ctx = AssignContext { labels: &labels, framed_gaze: &gaze, category_map: &cats, priority: &prio };
            assign_fixation(&whole(pts.len()), 0, &ctx)
        };
        prop_assert_eq!(run(&points), run(&shuffled));
    }

    #[test]
    fn raster_render_agrees_with_boxes(
        (boxes, _cats, order) in scene(),
        probes in prop::collection::vec((0u32..W, 0u32..H), 20),
    ) {
        let src = static_boxes(&boxes, 2, order);
        let LabelSource::Boxes(b) = &src else { unreachable!() };
        let raster = LabelSource::Raster(b.render(boxes.len() as u32, "test"));
        for (c, r) in probes {
            // integer cell corners are where the render samples
            let p = Point::new(c as f64, r as f64);
            for pos in 0..2 {
                prop_assert_eq!(raster.label_at_position(pos, p).unwrap(), src.label_at_position(pos, p).unwrap());
            }
        }
    }
}
