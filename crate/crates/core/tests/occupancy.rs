use mirrorlidar::grid::{build_grid, occupied_area, Cell, GridConfig, OccupancyGrid};
use mirrorlidar::lidar::scan;
use mirrorlidar::optics::SolidShape;
use mirrorlidar::scenes::{OaaLayout, OraLayout};
use mirrorlidar::{LidarConfig, PointCloud, SensorPose};

fn grid_of(cloud: PointCloud) -> OccupancyGrid {
    build_grid(&[cloud], &GridConfig::default()).unwrap()
}

/// Cells under the cone's base in the sensor frame.
fn cone_cells(layout: &OraLayout) -> (f64, f64, f64) {
    let cone = layout.cone();
    let r = match cone.shape {
        SolidShape::Cone { base_radius, .. } => base_radius,
        SolidShape::Box { size } => 0.5 * size.x.max(size.y),
    };
    (cone.position.x, cone.position.y, r)
}

#[test]
fn removed_cone_leaves_no_occupied_cells() {
    let cfg = LidarConfig::default();
    let layout = OraLayout::default();
    let pose = layout.sensor_pose(&cfg);
    let (x, y, r) = cone_cells(&layout);

    let (base_scene, _) = layout.scene(None).unwrap();
    let base = grid_of(scan(&base_scene, &pose, &cfg).unwrap());
    let cells = base.cells_near(x, y, r);
    assert!(!cells.is_empty());
    let occupied = |g: &OccupancyGrid| cells.iter().filter(|&&(c, w)| g.get(c, w) == Cell::Occupied).count();
    assert!(occupied(&base) >= 1);

    for tilt in [0.0, 15.0, 30.0, 45.0] {
        let (scene, _) = layout.scene(Some(tilt)).unwrap();
        let g = grid_of(scan(&scene, &pose, &cfg).unwrap());
        assert_eq!(occupied(&g), 0, "tilt {tilt}");
    }
}

#[test]
fn phantom_area_grows_with_panel_area() {
    let cfg = LidarConfig::default();
    let pose = SensorPose::at(0.0, 0.0, &cfg);
    let no_mirror = occupied_area(&grid_of(scan(&OaaLayout::default().scene(false).unwrap(), &pose, &cfg).unwrap()));
    let areas: Vec<f64> = [0.18, 0.36, 0.60]
        .iter()
        .map(|&area| {
            let layout = OaaLayout {
                area,
                ..OaaLayout::default()
            };
            occupied_area(&grid_of(scan(&layout.scene(true).unwrap(), &pose, &cfg).unwrap()))
        })
        .collect();
    assert!(areas[0] < areas[1] && areas[1] < areas[2], "{areas:?}");
    // every configuration adds phantom cells to the wall-only map
    assert!(areas[0] > no_mirror, "{areas:?} vs {no_mirror}");
}

#[test]
fn grid_text_survives_a_round_trip() {
    let cfg = LidarConfig::default();
    let layout = OraLayout::default();
    let (scene, _) = layout.scene(None).unwrap();
    let g = grid_of(scan(&scene, &layout.sensor_pose(&cfg), &cfg).unwrap());
    let back = OccupancyGrid::parse(&g.to_text()).unwrap();
    assert_eq!(back, g);
    assert_eq!(g.count(Cell::Free) + g.count(Cell::Occupied) + g.count(Cell::Unknown), g.columns() * g.rows());
}
