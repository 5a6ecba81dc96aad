use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rescue_sim::terrain::{ScenarioTerrain, TerrainError, TerrainGrid};

fn random_grid() -> impl Strategy<Value = TerrainGrid> {
    (2usize..8, 2usize..8, 0.05f64..0.5, -2.0f64..2.0, -2.0f64..2.0).prop_flat_map(|(rows, cols, cell, ox, oy)| {
        prop::collection::vec(-1.0f64..1.0, rows * cols)
            .prop_map(move |h| TerrainGrid::new(cell, [ox, oy], rows, cols, h).unwrap())
    })
}

proptest! {
    #[test]
    fn nodes_are_exact(g in random_grid()) {
        for r in 0..g.rows() {
            for c in 0..g.cols() {
                let [x, y] = g.node_position(r, c);
                prop_assert!((g.height_at(x, y).unwrap() - g.node(r, c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn interpolation_stays_within_cell_corners(g in random_grid(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let [x0, x1, y0, y1] = g.extent();
        let (x, y) = (x0 + u * (x1 - x0), y0 + v * (y1 - y0));
        let h = g.height_at(x, y).unwrap();
        let c = (((x - x0) / g.cell_size()).floor() as usize).min(g.cols() - 2);
        let r = (((y - y0) / g.cell_size()).floor() as usize).min(g.rows() - 2);
        let corners = [g.node(r, c), g.node(r, c + 1), g.node(r + 1, c), g.node(r + 1, c + 1)];
        let lo = corners.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = corners.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(h >= lo - 1e-12 && h <= hi + 1e-12);
    }

    #[test]
    fn text_roundtrip(g in random_grid()) {
        prop_assert_eq!(TerrainGrid::from_text(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn outside_queries_error(g in random_grid(), d in 0.01f64..5.0) {
        let [_, x1, _, y1] = g.extent();
        let out_x = matches!(g.height_at(x1 + d, y1), Err(TerrainError::OutOfBounds { .. }));
        let out_y = matches!(g.height_at(x1, y1 + d), Err(TerrainError::OutOfBounds { .. }));
        prop_assert!(out_x);
        prop_assert!(out_y);
    }

    #[test]
    fn plane_slope_is_recovered(angle in 0.0f64..60.0, dir in 0.0f64..360.0) {
        let (t, d) = (angle.to_radians().tan(), dir.to_radians());
        let g = TerrainGrid::from_fn(0.1, [0.0, 0.0], 11, 11, |x, y| t * (x * d.cos() + y * d.sin())).unwrap();
        prop_assert!((g.slope_at(0.53, 0.47).unwrap() - angle).abs() < 1e-9);
    }

    #[test]
    fn raycast_down_hits_surface(h in -0.5f64..0.5, z in 0.1f64..2.0) {
        let g = TerrainGrid::flat(0.05, [0.0, 0.0], 21, 21, h).unwrap();
        let d = g.raycast([0.5, 0.5, h + z], [0.0, 0.0, -1.0], 5.0).unwrap();
        prop_assert!((d - z).abs() < 2e-5);
    }
}

#[test]
fn raycast_misses_and_leaves_grid() {
    let g = TerrainGrid::flat(0.05, [0.0, 0.0], 21, 21, 0.0).unwrap();
    assert_eq!(g.raycast([0.5, 0.5, 0.2], [0.0, 0.0, 1.0], 5.0), None);
    assert_eq!(g.raycast([0.5, 0.5, 0.2], [1.0, 0.0, 0.0], 5.0), None);
    assert_eq!(g.raycast([0.5, 0.5, 0.2], [0.0, 0.0, -1.0], 0.1), None);
}

#[test]
fn raycast_finds_a_wall() {
    let g = TerrainGrid::from_fn(0.02, [0.0, 0.0], 51, 101, |x, _| if x >= 1.5 { 1.0 } else { 0.0 }).unwrap();
    let d = g.raycast([0.5, 0.5, 0.3], [1.0, 0.0, 0.0], 4.0).unwrap();
    // between nodes 1.48 and 1.50 the surface rises 1 m over one cell, so
    // z = 0.3 is crossed at x = 1.486
    assert_abs_diff_eq!(d, 0.986, epsilon = 1e-4);
}

#[test]
fn stair_layout_heights() {
    let g = ScenarioTerrain::Stair { rise: 0.15, run: 0.30, count: 5 }.build().unwrap();
    assert_abs_diff_eq!(g.height_at(1.0, 1.5).unwrap(), 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(g.height_at(1.65, 1.5).unwrap(), 0.15, epsilon = 1e-12);
    assert_abs_diff_eq!(g.height_at(2.85, 1.5).unwrap(), 0.75, epsilon = 1e-12);
    assert_abs_diff_eq!(g.height_at(4.0, 1.5).unwrap(), 0.75, epsilon = 1e-12);
    let zone = ScenarioTerrain::Stair { rise: 0.15, run: 0.30, count: 5 }.climb_zone().unwrap();
    assert_abs_diff_eq!(zone.slope_deg, 0.5f64.atan().to_degrees(), epsilon = 1e-12);
}

#[test]
fn layouts_reject_bad_parameters() {
    assert!(ScenarioTerrain::Stair { rise: 0.0, run: 0.3, count: 5 }.validate().is_err());
    assert!(ScenarioTerrain::Stair { rise: 0.1, run: 0.3, count: 0 }.validate().is_err());
    assert!(ScenarioTerrain::Slope { angle_deg: 90.0 }.validate().is_err());
    assert!(TerrainGrid::new(0.0, [0.0, 0.0], 2, 2, vec![0.0; 4]).is_err());
    assert!(TerrainGrid::new(0.1, [0.0, 0.0], 2, 2, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
}
