#![allow(dead_code)]

use d2d_idnc::session::{generate_feedback, ErasureSpec};
use d2d_idnc::topology::generate;
use d2d_idnc::{ConnectionMatrix, SessionState, TopologyKind, TopologySpec};
use proptest::prelude::*;

/// UE1 wants p2, p3; UE2 wants p4; UE3 wants p1, p4. Fully connected.
pub fn example1() -> (SessionState, ConnectionMatrix) {
    let s = SessionState::from_has_sets(4, vec![vec![0, 3], vec![0, 1, 2], vec![1, 2]]).unwrap();
    (s, ConnectionMatrix::fully_connected(3))
}

/// Chain UE1 - UE2 - UE3 with UE4 isolated.
pub fn example2() -> (SessionState, ConnectionMatrix) {
    let s = SessionState::from_has_sets(3, vec![vec![1], vec![0, 2], vec![1], vec![1, 2]]).unwrap();
    (
        s,
        ConnectionMatrix::from_edges(4, [(0, 1), (1, 2)]).unwrap(),
    )
}

pub fn random_instance(
    n_users: usize,
    n_packets: usize,
    kind: TopologyKind,
    erasure: f64,
    seed: u64,
) -> (SessionState, ConnectionMatrix) {
    let c = generate(&TopologySpec {
        n_users,
        kind,
        seed,
    })
    .unwrap();
    let s = generate_feedback(
        n_users,
        n_packets,
        &ErasureSpec {
            erasure_probability: erasure,
            seed: seed ^ 0x5eed,
        },
    )
    .unwrap();
    (s, c)
}

/// Arbitrary small instance: Has matrix and symmetric link pattern drawn bit by bit.
pub fn small_instance(
    max_users: usize,
    max_packets: usize,
) -> impl Strategy<Value = (SessionState, ConnectionMatrix)> {
    (1..=max_users, 1..=max_packets).prop_flat_map(|(n, m)| {
        (
            proptest::collection::vec(proptest::collection::vec(any::<bool>(), m), n),
            proptest::collection::vec(any::<bool>(), n * n),
        )
            .prop_map(move |(has, links)| {
                let s = SessionState::from_has_sets(
                    m,
                    has.iter().map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(_, &b)| b)
                            .map(|(p, _)| p)
                            .collect::<Vec<_>>()
                    }),
                )
                .unwrap();
                let edges: Vec<(usize, usize)> = (0..n)
                    .flat_map(|j| (j + 1..n).map(move |k| (j, k)))
                    .filter(|&(j, k)| links[j * n + k])
                    .collect();
                (s, ConnectionMatrix::from_edges(n, edges).unwrap())
            })
    })
}
