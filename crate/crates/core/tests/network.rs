use approx::assert_abs_diff_eq;
use clustersync::network::{
    block_class_violations, validate_network, Activation, ActivationSpec, ClusterParams, ClusterPartition,
    DelayEvaluator, NetworkError, NetworkSpec, ValidatedNetwork,
};
use clustersync::preset;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn example() -> ValidatedNetwork {
    preset("case1").unwrap().build().unwrap().network
}

fn leader_oracle(a: [[f64; 2]; 2], b: [[f64; 2]; 2], s: [f64; 2]) -> [f64; 2] {
    let f = [s[0].atan(), s[1].atan()];
    [
        -s[0] + a[0][0] * f[0] + a[0][1] * f[1] + b[0][0] * f[0] + b[0][1] * f[1],
        -s[1] + a[1][0] * f[0] + a[1][1] * f[1] + b[1][0] * f[0] + b[1][1] * f[1],
    ]
}

#[test]
fn example_network_validates_with_block_findings() {
    let net = example();
    assert_eq!(net.num_nodes(), 5);
    assert_eq!(net.num_clusters(), 2);
    assert_eq!(net.xi(), &[1.0, 1.0]);
    assert_eq!(net.delay().tau_bar(), 1.7);
    assert_abs_diff_eq!(net.delay().sigma(), 0.425, epsilon = 1e-15);
    assert!(!net.block_violations().is_empty());
}

#[test]
fn example_blocks_conform_to_a_three_two_split() {
    let g = example().coupling().clone();
    let part = ClusterPartition::from_sizes(&[3, 2]).unwrap();
    assert!(block_class_violations(&g, &part).is_empty());
}

#[test]
fn strict_block_classes_reject_example() {
    let mut spec = example().spec().clone();
    spec.strict_block_classes = true;
    let err = validate_network(spec).unwrap_err();
    assert!(matches!(
        err,
        NetworkError::ClassA1Violation { .. } | NetworkError::ClassA2Violation { .. }
    ));
}

#[test]
fn leader_rhs_matches_direct_arithmetic() {
    let net = example();
    let s = [0.4, 0.6];
    let got = net.leader_rhs(0, &s, &s);
    let want = leader_oracle([[1.95, -0.1], [-5.0, 3.0]], [[-1.5, -0.1], [-0.3, -2.41]], s);
    assert_abs_diff_eq!(got[0], want[0], epsilon = 1e-14);
    assert_abs_diff_eq!(got[1], want[1], epsilon = 1e-14);
    assert_abs_diff_eq!(got[0], -0.33686, epsilon = 1e-5);
    assert_abs_diff_eq!(got[1], -2.29784, epsilon = 1e-5);

    let got = net.leader_rhs(1, &s, &s);
    let want = leader_oracle([[2.0, -0.11], [-5.1, 3.0]], [[-1.5, -0.1], [-0.2, -2.45]], s);
    assert_abs_diff_eq!(got[0], want[0], epsilon = 1e-14);
    assert_abs_diff_eq!(got[1], want[1], epsilon = 1e-14);
}

#[test]
fn leader_rhs_vanishes_at_origin() {
    assert_eq!(example().leader_rhs(0, &[0.0, 0.0], &[0.0, 0.0]), vec![0.0, 0.0]);
}

#[test]
fn coupled_rhs_reduces_to_leaders_on_synchronized_states() {
    let net = example();
    let s = [0.4, 0.6];
    let x: Vec<f64> = (0..5).flat_map(|_| s).collect();
    let rhs = net.coupled_rhs(&x, &x, &[0.0; 10]);
    for i in 0..5 {
        let leader = net.leader_rhs(net.node_cluster(i), &s, &s);
        assert_abs_diff_eq!(rhs[2 * i], leader[0], epsilon = 1e-13);
        assert_abs_diff_eq!(rhs[2 * i + 1], leader[1], epsilon = 1e-13);
    }
}

#[test]
fn trivial_solution_and_scalar_decay() {
    let net = example();
    assert!(net.coupled_rhs(&[0.0; 10], &[0.0; 10], &[0.0; 10]).iter().all(|v| *v == 0.0));

    let scalar = validate_network(NetworkSpec {
        n: 1,
        partition: ClusterPartition::from_sizes(&[1]).unwrap(),
        clusters: vec![ClusterParams {
            c: DMatrix::from_element(1, 1, 1.0),
            a: DMatrix::zeros(1, 1),
            b: DMatrix::zeros(1, 1),
            input: DVector::zeros(1),
        }],
        coupling: DMatrix::zeros(1, 1),
        activation: ActivationSpec::new(Activation::Arctan),
        delay: DelayEvaluator::constant(1.0).unwrap(),
        strict_block_classes: false,
    })
    .unwrap();
    assert_eq!(scalar.coupled_rhs(&[2.0], &[2.0], &[0.0]), vec![-2.0]);
}

#[test]
fn error_state_examples() {
    let net = example();
    let x = [10.0, -5.0, 10.0, -5.0, 8.0, -6.0, 8.0, -6.0, 8.0, -6.0];
    let s = [0.4, 0.6, 0.4, 0.6];
    let e = net.error_state(&x, &s);
    assert_abs_diff_eq!(e[0], 9.6, epsilon = 1e-14);
    assert_abs_diff_eq!(e[1], -5.6, epsilon = 1e-14);
    assert_abs_diff_eq!(e[4], 7.6, epsilon = 1e-14);
    assert_abs_diff_eq!(e[5], -6.6, epsilon = 1e-14);
    let leaders_as_nodes = [0.4, 0.6, 0.4, 0.6, 0.4, 0.6, 0.4, 0.6, 0.4, 0.6];
    assert!(net.error_state(&leaders_as_nodes, &s).iter().all(|v| *v == 0.0));
}

#[test]
fn cluster_of_examples() {
    let part = ClusterPartition::from_sizes(&[2, 3]).unwrap();
    assert_eq!(part.cluster_of(2).unwrap(), 1);
    assert_eq!(part.cluster_of(0).unwrap(), 0);
    assert_eq!(part.cluster_of(4).unwrap(), 1);
    assert!(matches!(part.cluster_of(5), Err(NetworkError::OutOfRange { .. })));
}

proptest! {
    #[test]
    fn coupling_annihilates_consensus(c in proptest::collection::vec(-100.0..100.0f64, 2)) {
        let net = example();
        let g = net.coupling();
        for i in 0..5 {
            for &v in &c {
                let sum: f64 = (0..5).map(|j| g[(i, j)] * v).sum();
                prop_assert!(sum.abs() <= 1e-12 * (1.0 + v.abs()));
            }
        }
    }

    #[test]
    fn error_state_round_trips(
        x in proptest::collection::vec(-50.0..50.0f64, 10),
        s in proptest::collection::vec(-50.0..50.0f64, 4),
    ) {
        let net = example();
        let back = net.node_state(&net.error_state(&x, &s), &s);
        for (a, b) in back.iter().zip(&x) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }
}
