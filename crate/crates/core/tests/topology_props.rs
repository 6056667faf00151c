mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use common::{carlini_kleppe, for_each_index, topology_of, tree_shapes, v};
use ttn_core::{TreeTopology, VertexId};

proptest! {
    #[test]
    fn star_admissibility_matches_carlini_kleppe(
        leaves in prop::collection::vec((1usize..=6, 1usize..=8), 1..=5)
    ) {
        let (dims, bonds): (Vec<_>, Vec<_>) = leaves.into_iter().unzip();
        let t = TreeTopology::star(1, &dims, &bonds).unwrap();
        prop_assert_eq!(t.is_admissible().admissible, carlini_kleppe(&dims, &bonds));
    }

    #[test]
    fn verdict_is_invariant_under_relabeling(
        shape in 0usize..8,
        seed in any::<u64>(),
        offset in 1u32..50,
    ) {
        use rand::seq::SliceRandom;
        let (n, edges) = tree_shapes()[shape].clone();
        let mut g = common::rng(seed);
        let phys: Vec<usize> = (0..n).map(|k| 1 + (seed as usize >> k) % 3).collect();
        let bonds: Vec<usize> = (0..edges.len()).map(|k| 1 + (seed as usize >> (2 * k + 5)) % 4).collect();
        let t = topology_of(&phys, &edges, &bonds);

        let mut perm: Vec<u32> = (0..n as u32).collect();
        perm.shuffle(&mut g);
        let relabel = |x: u32| VertexId(perm[x as usize - 1] * 3 + offset);
        let vertices: Vec<_> = (1..=n as u32).map(|x| (relabel(x), phys[x as usize - 1])).collect();
        let redges: Vec<_> = edges.iter().zip(&bonds).map(|(&(a, b), &r)| (relabel(a), relabel(b), r)).collect();
        let r = TreeTopology::new(&vertices, &redges).unwrap();

        let a = t.is_admissible();
        let b = r.is_admissible();
        prop_assert_eq!(a.admissible, b.admissible);
        let mapped: BTreeSet<_> = a.violations.iter().map(|x| (relabel(x.vertex.0), relabel(x.neighbor.0))).collect();
        let direct: BTreeSet<_> = b.violations.iter().map(|x| (x.vertex, x.neighbor)).collect();
        prop_assert_eq!(mapped, direct);
    }
}

/// Lowering one bond never creates a violation on that same edge.
#[test]
fn lowering_a_bond_never_violates_its_own_edge() {
    let mut checked = 0usize;
    for (n, edges) in tree_shapes() {
        let phys_choices = vec![3usize; n];
        for_each_index(&phys_choices, |phys_idx| {
            let phys: Vec<usize> = phys_idx.iter().map(|&k| k + 1).collect();
            let bond_choices = vec![3usize; edges.len()];
            for_each_index(&bond_choices, |bond_idx| {
                let bonds: Vec<usize> = bond_idx.iter().map(|&k| k + 1).collect();
                let before = topology_of(&phys, &edges, &bonds).is_admissible();
                for e in 0..edges.len() {
                    if bonds[e] == 1 {
                        continue;
                    }
                    let mut lowered = bonds.clone();
                    lowered[e] -= 1;
                    let after = topology_of(&phys, &edges, &lowered).is_admissible();
                    let (a, b) = edges[e];
                    let on_edge = |x: &ttn_core::topology::Violation| {
                        (x.vertex, x.neighbor) == (v(a), v(b)) || (x.vertex, x.neighbor) == (v(b), v(a))
                    };
                    let old: BTreeSet<_> = before.violations.iter().filter(|x| on_edge(x)).map(|x| (x.vertex, x.neighbor)).collect();
                    let new: BTreeSet<_> = after.violations.iter().filter(|x| on_edge(x)).map(|x| (x.vertex, x.neighbor)).collect();
                    assert!(new.is_subset(&old), "phys {phys:?} bonds {bonds:?} edge {e}");
                    checked += 1;
                }
            });
        });
    }
    assert!(checked > 1000);
}

#[test]
fn all_ones_is_admissible() {
    for (n, edges) in tree_shapes() {
        for d in 1..=3 {
            let t = topology_of(&vec![d; n], &edges, &vec![1; edges.len()]);
            assert!(t.is_admissible().admissible);
        }
    }
}

#[test]
fn traversal_visits_children_first() {
    let mut g = common::rng(4);
    for n in 1..=8 {
        let t = common::random_tree(&mut g, n, (1, 2), (1, 2));
        for root in t.vertices() {
            let view = t.root_at(root).unwrap();
            let order = view.traversal();
            assert_eq!(order.len(), n);
            assert_eq!(order.iter().collect::<BTreeSet<_>>().len(), n);
            assert_eq!(*order.last().unwrap(), root);
            for (pos, &x) in order.iter().enumerate() {
                for c in view.children(x) {
                    assert!(order[..pos].contains(c));
                }
                if let Some(parent) = view.parent(x) {
                    assert!(t.neighbors(x).unwrap().contains(&parent));
                }
            }
        }
    }
}
