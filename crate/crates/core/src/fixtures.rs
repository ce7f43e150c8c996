//! The example networks used throughout the docs and tests.

use crate::graph::Digraph;

/// Two paths `1 -> 2 -> 3` and `1 -> 3` that collapse into one signal.
pub fn fig3() -> Digraph {
    Digraph::from_arrows(3, [(1, 2), (2, 3), (1, 3)], [1])
}

/// Eight nodes already labeled in topological order; both sources excited.
pub fn fig4() -> Digraph {
    Digraph::from_arrows(
        8,
        [
            (1, 2),
            (3, 4),
            (4, 5),
            (5, 6),
            (6, 7),
            (2, 4),
            (4, 6),
            (6, 8),
            (3, 6),
        ],
        [1, 3],
    )
}

/// Two excited sources feeding nodes 3 and 4, which both feed node 5.
pub fn fig5() -> Digraph {
    Digraph::from_arrows(
        5,
        [(1, 3), (1, 4), (2, 3), (2, 4), (3, 5), (4, 5)],
        [1, 2],
    )
}

/// Ten nodes; three vertex-disjoint paths reach the in-neighbors of node 10.
pub fn fig6() -> Digraph {
    Digraph::from_arrows(
        10,
        [
            (1, 4),
            (2, 5),
            (2, 6),
            (3, 6),
            (4, 8),
            (5, 7),
            (6, 8),
            (6, 9),
            (7, 10),
            (8, 10),
            (9, 10),
        ],
        [1, 2, 3],
    )
}

/// Node 7 has three in-neighbors but only two excited sources upstream.
pub fn fig7() -> Digraph {
    Digraph::from_arrows(
        7,
        [
            (1, 3),
            (2, 5),
            (1, 4),
            (2, 4),
            (4, 6),
            (6, 7),
            (3, 7),
            (5, 7),
        ],
        [1, 2],
    )
}

/// All bundled networks by name.
pub fn bundled_examples() -> Vec<(&'static str, Digraph)> {
    vec![
        ("fig3", fig3()),
        ("fig4", fig4()),
        ("fig5", fig5()),
        ("fig6", fig6()),
        ("fig7", fig7()),
    ]
}

/// Looks up a bundled network by name.
pub fn example(name: &str) -> Option<Digraph> {
    bundled_examples()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, g)| g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_match_the_drawings() {
        let sizes: Vec<_> = bundled_examples()
            .iter()
            .map(|(name, g)| (*name, g.n, g.edges.len(), g.excited.iter().copied().collect::<Vec<_>>()))
            .collect();
        assert_eq!(
            sizes,
            vec![
                ("fig3", 3, 3, vec![1]),
                ("fig4", 8, 9, vec![1, 3]),
                ("fig5", 5, 6, vec![1, 2]),
                ("fig6", 10, 11, vec![1, 2, 3]),
                ("fig7", 7, 8, vec![1, 2]),
            ]
        );
        for (_, g) in bundled_examples() {
            g.validate().unwrap();
        }
    }

    #[test]
    fn lookup_by_name() {
        assert_eq!(example("fig7"), Some(fig7()));
        assert_eq!(example("fig9"), None);
    }
}
