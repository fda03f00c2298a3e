//! Random fixtures shared by unit tests.

use rand::Rng;

use crate::graph::{dyad_count, AttributeTable, Decision, Game, Panel, SmallGraph, Snapshot};
use crate::stats::TermSpec;

pub(crate) fn random_attrs(rng: &mut impl Rng, n: usize) -> AttributeTable {
    let dec = (0..n)
        .map(|_| match rng.random_range(0..3) {
            0 => Decision::Cooperate,
            1 => Decision::Defect,
            _ => Decision::None,
        })
        .collect();
    let wealth = (0..n).map(|_| rng.random_range(0..1500)).collect();
    AttributeTable::new(dec, wealth).unwrap()
}

pub(crate) fn random_graph(rng: &mut impl Rng, n: usize) -> SmallGraph {
    let d = dyad_count(n);
    SmallGraph::from_mask(n, rng.random::<u64>() & ((1u64 << d) - 1)).unwrap()
}

pub(crate) fn random_panel(rng: &mut impl Rng, games: usize, n: usize, transitions: usize) -> Panel {
    Panel::new(
        (0..games)
            .map(|g| {
                let snaps = (0..=transitions)
                    .map(|t| Snapshot {
                        t: t as i64,
                        graph: random_graph(rng, n),
                        attrs: random_attrs(rng, n),
                    })
                    .collect();
                Game::new(format!("g{g}"), snaps).unwrap()
            })
            .collect(),
    )
}

pub(crate) fn full_menu() -> Vec<TermSpec> {
    vec![
        TermSpec::Edges,
        TermSpec::Triangles,
        TermSpec::nodematch(Decision::Cooperate),
        TermSpec::nodematch(Decision::Defect),
        TermSpec::absdiff(0.001).unwrap(),
    ]
}

pub(crate) fn random_theta(rng: &mut impl Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-scale..scale)).collect()
}
