//! Aggregates rebuilt from the raw CSV must match the aggregate CSV.

use dynrrt::bench::{aggregate, run_pscan_study, write_agg_csv, write_raw_csv, Scenario, Summary, Trajectory};
use dynrrt::planners::Algorithm;
use dynrrt::{PlannerParams, Point, RobotParams, WorldModel};

fn scenario() -> Scenario {
    Scenario {
        world: WorldModel::new(Point::new(0.0, 0.0), Point::new(6.0, 6.0)),
        robot: RobotParams::default(),
        params: PlannerParams {
            max_nodes: 800,
            ..PlannerParams::default()
        },
        forest_capacity: 5,
        goal: Point::new(3.0, 5.5),
        trajectory: Trajectory {
            x: 3.0,
            y_start: 0.0,
            y_end: 1.0,
            y_step: 0.5,
            heading: std::f64::consts::FRAC_PI_2,
        },
        algorithms: vec![Algorithm::Rrt],
        seeds: vec![0, 1, 2],
        p_scan_values: vec![0.0, 0.9],
    }
}

fn parse(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn close(a: f64, b: f64) -> bool {
    (a.is_nan() && b.is_nan()) || (a - b).abs() <= 1e-9
}

#[test]
fn aggregates_match_raw_rows() {
    let rows = run_pscan_study(&scenario(), Some(2));
    let mut raw = Vec::new();
    write_raw_csv(&rows, &mut raw).unwrap();
    let mut agg = Vec::new();
    write_agg_csv(&aggregate(&rows), &mut agg).unwrap();
    let raw = parse(&String::from_utf8(raw).unwrap());
    let agg = parse(&String::from_utf8(agg).unwrap());
    assert_eq!(raw.len(), 3 * 3 * 3);
    assert_eq!(agg.len(), 3 * 3);

    for a in &agg {
        let group: Vec<&Vec<String>> = raw
            .iter()
            .filter(|r| r[0] == a[0] && r[1] == a[1] && r[4] == a[2])
            .collect();
        assert_eq!(group.len().to_string(), a[3]);
        let found = group.iter().filter(|r| r[9] == "found").count();
        assert_eq!(found.to_string(), a[4]);
        let col = |i: usize| -> Vec<f64> { group.iter().filter(|r| !r[i].is_empty()).map(|r| r[i].parse().unwrap()).collect() };
        for (summary, first) in [(Summary::of(&col(7)), 5), (Summary::of(&col(5)), 8), (Summary::of(&col(8)), 11)] {
            let stored: Vec<f64> = a[first..first + 3].iter().map(|v| v.parse().unwrap()).collect();
            assert!(close(summary.mean, stored[0]), "{a:?}");
            assert!(close(summary.median, stored[1]), "{a:?}");
            assert!(close(summary.std, stored[2]), "{a:?}");
        }
    }
}
