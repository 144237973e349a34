use std::path::Path;

use netssm::io::{
    format_dense, parse_dense, parse_edge_list, parse_signals, read_edge_list, read_trajectory,
    write_edge_list, write_signals, write_trajectory,
};
use netssm::Error;
use netssm_core::scenarios::{generate_trajectory, InputMode, ScenarioConfig};
use netssm_core::{DynamicsSchedule, GraphSnapshot};
use proptest::prelude::*;

fn src() -> &'static Path {
    Path::new("mem.csv")
}

fn graph_strategy() -> impl Strategy<Value = GraphSnapshot> {
    (2usize..=12).prop_flat_map(|n| {
        proptest::collection::vec(0u32..(1 << n), n).prop_map(move |raw| {
            let masks = raw
                .iter()
                .enumerate()
                .map(|(row, m)| m & !(1 << row))
                .collect();
            GraphSnapshot::from_masks(masks).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn edge_list_round_trip(g in graph_strategy()) {
        let mut buf = Vec::new();
        write_edge_list(&mut buf, &g).unwrap();
        let back = parse_edge_list(buf.as_slice(), src(), Some(g.order())).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn dense_round_trip(g in graph_strategy()) {
        let back = parse_dense(&format_dense(&g), src()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn signals_round_trip_bitwise(
        rows in (1usize..6).prop_flat_map(|n| {
            proptest::collection::vec(proptest::collection::vec(-1e300f64..1e300, n), 1..20)
        })
    ) {
        let mut buf = Vec::new();
        write_signals(&mut buf, &rows).unwrap();
        let back = parse_signals(buf.as_slice(), src(), Some(rows[0].len())).unwrap();
        prop_assert_eq!(back, rows);
    }
}

#[test]
fn edge_list_direction() {
    let g = parse_edge_list("src,dst\n0,2\n".as_bytes(), src(), Some(3)).unwrap();
    assert!(g.get(2, 0));
    assert!(!g.get(0, 2));
    // node count inferred from the largest index
    let g = parse_edge_list("src,dst\n4,1\n".as_bytes(), src(), None).unwrap();
    assert_eq!(g.order(), 5);
}

#[test]
fn parse_errors_carry_line_numbers() {
    let line = |r: Result<GraphSnapshot, Error>| match r {
        Err(Error::Parse { line, .. }) => line,
        other => panic!("expected parse error, got {other:?}"),
    };
    assert_eq!(
        line(parse_edge_list(
            "src,dst\n0,1\n1,x\n".as_bytes(),
            src(),
            None
        )),
        3
    );
    assert_eq!(
        line(parse_edge_list(
            "src,dst\n0,1\n2,2\n".as_bytes(),
            src(),
            None
        )),
        3
    );
    assert_eq!(
        line(parse_edge_list("from,to\n0,1\n".as_bytes(), src(), None)),
        1
    );
    assert_eq!(
        line(parse_edge_list(
            "src,dst\n0,1\n1,0,5\n".as_bytes(),
            src(),
            None
        )),
        3
    );
    assert_eq!(line(parse_dense("0 1\n1 1\n", src())), 2);
    assert_eq!(line(parse_dense("0 1\n1 0 0\n", src())), 2);

    match parse_signals("t,node_0,node_1\n1,0.5,1\n3,0,0\n".as_bytes(), src(), None) {
        Err(Error::Parse { line: 3, .. }) => {}
        other => panic!("expected parse error on line 3, got {other:?}"),
    }
}

#[test]
fn dimension_mismatches() {
    assert!(matches!(
        parse_edge_list("src,dst\n0,7\n".as_bytes(), src(), Some(4)),
        Err(Error::Dimension { .. })
    ));
    assert!(matches!(
        parse_signals("t,node_0,node_1\n1,0,0\n".as_bytes(), src(), Some(3)),
        Err(Error::Dimension { .. })
    ));
}

#[test]
fn missing_file_is_not_found() {
    let err = read_edge_list(Path::new("/nonexistent/graph.csv"), None).unwrap_err();
    assert!(matches!(err, Error::NotFound { .. }));
    assert_eq!(err.category(), "not-found");
}

#[test]
fn trajectory_dump_round_trip() {
    let cfg = ScenarioConfig {
        order: 5,
        er_p: 0.3,
        sigma_obs: 0.1,
        input_mode: InputMode::IidGaussian,
        horizon: 60,
        seed: 11,
        dynamics: DynamicsSchedule::PeriodicFlip {
            period: 20,
            p_c: 0.3,
        },
    };
    let traj = generate_trajectory(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_trajectory(dir.path(), &traj).unwrap();
    let back = read_trajectory(dir.path()).unwrap();
    assert_eq!(back.initial, traj.initial);
    assert_eq!(back.graphs, traj.graphs);
    assert_eq!(back.observations, traj.observations);
    for (a, b) in back.noise.iter().flatten().zip(traj.noise.iter().flatten()) {
        assert!((a - b).abs() < 1e-12);
    }

    let text = std::fs::read_to_string(dir.path().join("signals.csv")).unwrap();
    assert!(text.starts_with("t,z_0,z_1,z_2,z_3,z_4,y_0,y_1,y_2,y_3,y_4\n"));
    for t in traj.change_steps() {
        let f = dir.path().join(format!("graph_{t:06}.csv"));
        let text = std::fs::read_to_string(f).unwrap();
        assert!(text.starts_with("t,src,dst\n"));
    }
}
