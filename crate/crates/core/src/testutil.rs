//! Shared fixtures for unit tests: the five-user toy cascade.

use crate::cascade::{build_cascade, ActionEvent, CascadeGraph, FollowerGraph};

pub(crate) fn toy_follower_graph() -> FollowerGraph {
    let mut fg = FollowerGraph::new();
    for (s, d) in [("A", "B"), ("A", "D"), ("B", "D"), ("B", "C"), ("D", "E")] {
        fg.add_edge(s, d);
    }
    fg
}

pub(crate) fn toy_events() -> Vec<ActionEvent> {
    [("A", 1), ("B", 2), ("D", 3), ("C", 4), ("E", 5)]
        .iter()
        .map(|(u, t)| ActionEvent {
            cascade_id: "c1".into(),
            user: (*u).into(),
            ts: *t,
        })
        .collect()
}

pub(crate) fn toy_cascade() -> CascadeGraph {
    build_cascade(&toy_follower_graph(), &toy_events()).unwrap()
}
