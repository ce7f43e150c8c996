//! The static model `y = f(y) + u`, its Jacobian `J_G`, the transfer matrix
//! `T_G = (I - J_G)^-1`, and sampled generic ranks of `T_G` blocks.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::NetworkDynamics;
use crate::graph::{NodeId, ValidatedDigraph};
use crate::matrix::RationalMatrix;
use crate::paths::{max_vertex_disjoint, PathError};
use crate::poly::Polynomial;
use crate::rational::{derive_seed, random_nonzero, rng_from_seed, Rational};

/// Which part of each node function the static model uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StaticPart {
    /// `y_i = sum_j f_{i,j}(y_j) + u_i`, cross parts dropped.
    Additive,
    /// `y_i = Phi_i(y_j ...) + u_i`.
    Full,
}

fn node_function(dynamics: &NetworkDynamics, i: NodeId, part: StaticPart) -> Polynomial {
    match part {
        StaticPart::Full => dynamics.phi(i).clone(),
        StaticPart::Additive => {
            let phi = dynamics.phi(i);
            phi.decompose()
                .univariate
                .iter()
                .fold(Polynomial::zero(phi.arity()), |acc, f| &acc + f)
        }
    }
}

/// Outputs of the static model, indexed by `node - 1`. Entries of `u` for
/// unexcited nodes are ignored.
pub fn propagate_static(
    graph: &ValidatedDigraph,
    dynamics: &NetworkDynamics,
    u: &BTreeMap<NodeId, Rational>,
    part: StaticPart,
) -> Vec<Rational> {
    let mut y = vec![Rational::from_integer(0.into()); graph.n()];
    for &i in graph.topological_order() {
        let args: Vec<Rational> = graph.in_neighbors(i).iter().map(|&j| y[j - 1].clone()).collect();
        let mut value = node_function(dynamics, i, part)
            .eval(&args)
            .expect("validated arity");
        if graph.is_excited(i) {
            if let Some(ui) = u.get(&i) {
                value += ui;
            }
        }
        y[i - 1] = value;
    }
    y
}

/// Symbolic static propagation.
///
/// Nodes in `fixed` output the given polynomial; every other node outputs its
/// node function of its inputs plus `injected[i]` if present. All supplied
/// polynomials share one arity. Only nodes in `within` (all nodes if `None`)
/// are computed; others output zero.
pub fn propagate_polynomial(
    graph: &ValidatedDigraph,
    dynamics: &NetworkDynamics,
    arity: usize,
    fixed: &BTreeMap<NodeId, Polynomial>,
    injected: &BTreeMap<NodeId, Polynomial>,
    within: Option<&BTreeSet<NodeId>>,
    part: StaticPart,
) -> Vec<Polynomial> {
    let mut y = vec![Polynomial::zero(arity); graph.n()];
    for &i in graph.topological_order() {
        if within.is_some_and(|w| !w.contains(&i)) {
            continue;
        }
        if let Some(p) = fixed.get(&i) {
            y[i - 1] = p.clone();
            continue;
        }
        let args: Vec<Polynomial> = graph.in_neighbors(i).iter().map(|&j| y[j - 1].clone()).collect();
        let f = node_function(dynamics, i, part);
        let mut value = if args.is_empty() {
            Polynomial::constant(arity, f.constant_term())
        } else {
            f.compose(&args).expect("validated arity")
        };
        if let Some(p) = injected.get(&i) {
            value = &value + p;
        }
        y[i - 1] = value;
    }
    y
}

/// Square matrix of polynomials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolicMatrix {
    size: usize,
    entries: Vec<Polynomial>,
}

impl SymbolicMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    /// Entry for rows/columns given as node ids.
    pub fn get(&self, i: NodeId, j: NodeId) -> &Polynomial {
        &self.entries[(i - 1) * self.size + (j - 1)]
    }

    pub fn eval(&self, point: &[Rational]) -> RationalMatrix {
        let mut out = RationalMatrix::zeros(self.size, self.size);
        for r in 0..self.size {
            for c in 0..self.size {
                let p = &self.entries[r * self.size + c];
                if !p.is_zero() {
                    out.set(r, c, p.eval(point).expect("arity n"));
                }
            }
        }
        out
    }
}

/// `J(y)` with entry `(i, j) = f'_{i,j}(y_j)` on edges `j -> i`, zero elsewhere.
pub fn jacobian_symbolic(graph: &ValidatedDigraph, dynamics: &NetworkDynamics) -> SymbolicMatrix {
    let n = graph.n();
    let mut entries = vec![Polynomial::zero(n); n * n];
    for e in graph.edges() {
        let derivative = dynamics.edge_function(e.to, e.from).diff(0);
        entries[(e.to - 1) * n + (e.from - 1)] = derivative.embed(n, &[e.from - 1]);
    }
    SymbolicMatrix { size: n, entries }
}

/// `J_G(u)`: the Jacobian at the static-model outputs for excitation `u`.
pub fn nonlinear_network_matrix(
    graph: &ValidatedDigraph,
    dynamics: &NetworkDynamics,
    u: &BTreeMap<NodeId, Rational>,
) -> RationalMatrix {
    let y = propagate_static(graph, dynamics, u, StaticPart::Additive);
    jacobian_symbolic(graph, dynamics).eval(&y)
}

/// `(I - J)^-1` for a Jacobian supported on the graph's edges, by forward
/// substitution in topological order.
pub fn transfer_from_jacobian(graph: &ValidatedDigraph, jacobian: &RationalMatrix) -> RationalMatrix {
    let n = graph.n();
    let mut t = RationalMatrix::zeros(n, n);
    for c in 1..=n {
        for &i in graph.topological_order() {
            let mut value = if i == c {
                Rational::from_integer(1.into())
            } else {
                Rational::from_integer(0.into())
            };
            for &j in graph.in_neighbors(i) {
                let (a, b) = (jacobian.get(i - 1, j - 1), t.get(j - 1, c - 1));
                if !num_traits::Zero::is_zero(a) && !num_traits::Zero::is_zero(b) {
                    value += a * b;
                }
            }
            t.set(i - 1, c - 1, value);
        }
    }
    t
}

/// `T_G(u) = (I - J_G(u))^-1`; entry `(i, j)` is the sensitivity of `y_i` to `u_j`.
pub fn transfer_matrix(
    graph: &ValidatedDigraph,
    dynamics: &NetworkDynamics,
    u: &BTreeMap<NodeId, Rational>,
) -> RationalMatrix {
    transfer_from_jacobian(graph, &nonlinear_network_matrix(graph, dynamics, u))
}

/// Whether the matrix is zero on and above the diagonal once rows and columns
/// are permuted into topological order.
pub fn is_strictly_triangular(graph: &ValidatedDigraph, m: &RationalMatrix) -> bool {
    graph.nodes().all(|i| {
        graph.nodes().all(|j| {
            graph.position(j) < graph.position(i) || num_traits::Zero::is_zero(m.get(i - 1, j - 1))
        })
    })
}

/// Exact ranks of the `T_G` block sending inputs at `rows` to outputs at
/// `cols`, over independent random draws.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankProbe {
    pub rows: Vec<NodeId>,
    pub cols: Vec<NodeId>,
    pub degree: u32,
    pub samples: usize,
    pub seed: u64,
    pub ranks: Vec<usize>,
    pub generic_rank: usize,
    /// Samples whose rank fell below `generic_rank`.
    pub degenerate: Vec<usize>,
    pub vertex_disjoint_paths: usize,
    /// `(I - J_G) T_G = I` held exactly on every sample.
    pub inverse_checked: bool,
}

/// One random draw: additive dynamics with edge functions of degree `degree`
/// and no constant term, plus a rational excitation on every excited node.
pub fn sample_network(
    graph: &ValidatedDigraph,
    degree: u32,
    seed: u64,
    index: usize,
    coeff_bound: u32,
) -> (NetworkDynamics, BTreeMap<NodeId, Rational>) {
    let dynamics = NetworkDynamics::random_additive(
        graph,
        degree,
        derive_seed(seed, 10, index as u64),
        coeff_bound,
    );
    let mut rng = rng_from_seed(derive_seed(seed, 11, index as u64));
    let u = graph
        .excited()
        .iter()
        .map(|&i| (i, random_nonzero(&mut rng, coeff_bound)))
        .collect();
    (dynamics, u)
}

/// Samples `T_G` at `samples` random draws and records the exact rank of the
/// block with rows indexed by inputs `rows` and columns by outputs `cols`.
pub fn generic_rank(
    graph: &ValidatedDigraph,
    degree: u32,
    rows: &BTreeSet<NodeId>,
    cols: &BTreeSet<NodeId>,
    samples: usize,
    seed: u64,
    coeff_bound: u32,
) -> Result<RankProbe, PathError> {
    let paths = max_vertex_disjoint(graph, rows, cols)?.len();
    let row_idx: Vec<usize> = rows.iter().map(|&v| v - 1).collect();
    let col_idx: Vec<usize> = cols.iter().map(|&v| v - 1).collect();
    let outcomes: Vec<(usize, bool)> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let (dynamics, u) = sample_network(graph, degree, seed, s, coeff_bound);
            let j = nonlinear_network_matrix(graph, &dynamics, &u);
            let t = transfer_from_jacobian(graph, &j);
            let identity = RationalMatrix::identity(graph.n()).sub(&j).mul(&t).is_identity();
            let block = t.submatrix(&col_idx, &row_idx).transpose();
            (block.exact_rank(), identity)
        })
        .collect();
    let ranks: Vec<usize> = outcomes.iter().map(|o| o.0).collect();
    let generic = ranks.iter().copied().max().unwrap_or(0);
    Ok(RankProbe {
        rows: rows.iter().copied().collect(),
        cols: cols.iter().copied().collect(),
        degree,
        samples,
        seed,
        degenerate: (0..samples).filter(|&s| ranks[s] < generic).collect(),
        generic_rank: generic,
        ranks,
        vertex_disjoint_paths: paths,
        inverse_checked: outcomes.iter().all(|o| o.1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::Digraph;
    use crate::rational::{from_i64, to_f64};

    fn x() -> Polynomial {
        Polynomial::var(1, 0)
    }

    fn linear(c: i64) -> Polynomial {
        x().scale(&from_i64(c))
    }

    fn set(items: &[NodeId]) -> BTreeSet<NodeId> {
        items.iter().copied().collect()
    }

    #[test]
    fn zero_input_gives_zero_outputs() {
        let g = fixtures::fig7().validate().unwrap();
        let d = NetworkDynamics::random_additive(&g, 3, 1, 10);
        let y = propagate_static(&g, &d, &BTreeMap::new(), StaticPart::Additive);
        assert!(y.iter().all(num_traits::Zero::is_zero));
    }

    #[test]
    fn chain_square() {
        let g = Digraph::from_arrows(2, [(1, 2)], [1]).validate().unwrap();
        let d = NetworkDynamics::from_edge_functions(&g, &BTreeMap::from([((2, 1), x().pow(2))]));
        let y = propagate_static(&g, &d, &BTreeMap::from([(1, from_i64(3))]), StaticPart::Additive);
        assert_eq!(y, vec![from_i64(3), from_i64(9)]);
    }

    #[test]
    fn fig3_linear_propagation() {
        let g = fixtures::fig3().validate().unwrap();
        let d = NetworkDynamics::from_edge_functions(
            &g,
            &BTreeMap::from([((2, 1), linear(2)), ((3, 2), linear(3)), ((3, 1), linear(5))]),
        );
        let y = propagate_static(&g, &d, &BTreeMap::from([(1, from_i64(1))]), StaticPart::Additive);
        assert_eq!(y[2], from_i64(11));
    }

    #[test]
    fn fig3_jacobian_entry_matches_finite_difference() {
        let g = fixtures::fig3().validate().unwrap();
        let d = NetworkDynamics::from_edge_functions(
            &g,
            &BTreeMap::from([((2, 1), x().pow(2)), ((3, 2), x()), ((3, 1), x())]),
        );
        let u = BTreeMap::from([(1, from_i64(2))]);
        let j = nonlinear_network_matrix(&g, &d, &u);
        assert_eq!(j.get(1, 0), &from_i64(4));
        // d y2 / d u1 from the static model, two-sided difference
        let h = crate::rational::ratio(1, 100_000);
        let at = |v: Rational| {
            propagate_static(&g, &d, &BTreeMap::from([(1, v)]), StaticPart::Additive)[1].clone()
        };
        let fd = (at(from_i64(2) + &h) - at(from_i64(2) - &h)) / (h * from_i64(2));
        assert!((to_f64(&fd) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn linear_jacobian_is_constant() {
        let g = fixtures::fig6().validate().unwrap();
        let d = NetworkDynamics::random_additive(&g, 1, 3, 10);
        let a = nonlinear_network_matrix(&g, &d, &BTreeMap::from([(1, from_i64(1))]));
        let b = nonlinear_network_matrix(&g, &d, &BTreeMap::from([(1, from_i64(7)), (2, from_i64(-2))]));
        assert_eq!(a, b);
        let s = jacobian_symbolic(&g, &d);
        assert!(s.get(10, 8).degree() == 0 && !s.get(10, 8).is_zero());
        assert!(s.get(8, 10).is_zero());
    }

    #[test]
    fn empty_graph_transfer_is_identity() {
        let g = Digraph::from_arrows(1, [], [1]).validate().unwrap();
        let d = NetworkDynamics::random_additive(&g, 2, 0, 10);
        assert!(transfer_matrix(&g, &d, &BTreeMap::new()).is_identity());
    }

    #[test]
    fn chain_transfer_entry() {
        let g = Digraph::from_arrows(2, [(1, 2)], [1]).validate().unwrap();
        let d = NetworkDynamics::from_edge_functions(&g, &BTreeMap::from([((2, 1), linear(7))]));
        let t = transfer_matrix(&g, &d, &BTreeMap::new());
        assert_eq!(t.get(1, 0), &from_i64(7));
        assert_eq!(t.get(0, 0), &from_i64(1));
        assert_eq!(t.get(1, 1), &from_i64(1));
        assert_eq!(t.get(0, 1), &from_i64(0));
    }

    #[test]
    fn fig6_generic_rank_is_three() {
        let g = fixtures::fig6().validate().unwrap();
        let probe = generic_rank(&g, 2, &set(&[1, 2, 3]), &set(&[7, 8, 9]), 20, 7, 10).unwrap();
        assert_eq!(probe.generic_rank, 3);
        assert_eq!(probe.vertex_disjoint_paths, 3);
        assert!(probe.inverse_checked);
        assert_eq!(probe.ranks.len(), 20);
    }

    #[test]
    fn unreachable_block_has_rank_zero() {
        let g = fixtures::fig7().validate().unwrap();
        let probe = generic_rank(&g, 2, &set(&[3]), &set(&[5]), 5, 1, 10).unwrap();
        assert_eq!(probe.ranks, vec![0; 5]);
        assert!(probe.degenerate.is_empty());
    }

    #[test]
    fn triangular_under_topological_order() {
        let g = fixtures::fig4().validate().unwrap();
        let (d, u) = sample_network(&g, 2, 5, 0, 10);
        let j = nonlinear_network_matrix(&g, &d, &u);
        assert!(is_strictly_triangular(&g, &j));
        assert!(!is_strictly_triangular(&g, &j.transpose()));
    }

    #[test]
    fn polynomial_propagation_matches_numeric() {
        let g = fixtures::fig7().validate().unwrap();
        let d = NetworkDynamics::random_general(&g, 2, 4, 10);
        let injected = BTreeMap::from([(1, Polynomial::var(2, 0)), (2, Polynomial::var(2, 1))]);
        let ys = propagate_polynomial(&g, &d, 2, &BTreeMap::new(), &injected, None, StaticPart::Full);
        let u = BTreeMap::from([(1, from_i64(2)), (2, crate::rational::ratio(-1, 3))]);
        let y = propagate_static(&g, &d, &u, StaticPart::Full);
        for v in 0..7 {
            assert_eq!(ys[v].eval(&[from_i64(2), crate::rational::ratio(-1, 3)]).unwrap(), y[v]);
        }
    }
}
