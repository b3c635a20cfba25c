//! Union-find over states and the per-agent partitions built with it.

use std::collections::VecDeque;

use crate::model::{ActionId, AgentId, StateId, System};

/// Disjoint sets over `0..n` with path halving and union by rank.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let grand = self.parent[self.parent[x] as usize];
            self.parent[x] = grand;
            x = grand as usize;
        }
        x
    }

    /// Merges the classes of `x` and `y`; false if they were already merged.
    pub fn union(&mut self, x: usize, y: usize) -> bool {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx == ry {
            return false;
        }
        match self.rank[rx].cmp(&self.rank[ry]) {
            std::cmp::Ordering::Less => self.parent[rx] = ry as u32,
            std::cmp::Ordering::Greater => self.parent[ry] = rx as u32,
            std::cmp::Ordering::Equal => {
                self.parent[ry] = rx as u32;
                self.rank[rx] += 1;
            }
        }
        true
    }
}

/// An equivalence relation over the states of a system, attached to one
/// agent.
///
/// Classes are numbered by their smallest member, so two partitions of the
/// same relation compare equal. `generators` lists the pairs whose merges
/// built the relation, in merge order; it spans the relation.
#[derive(Clone, Debug)]
pub struct StatePartition {
    pub agent: AgentId,
    class_of: Vec<u32>,
    classes: Vec<Vec<StateId>>,
    pub generators: Vec<(StateId, StateId)>,
}

impl PartialEq for StatePartition {
    fn eq(&self, other: &Self) -> bool {
        self.agent == other.agent && self.class_of == other.class_of
    }
}

impl Eq for StatePartition {}

impl StatePartition {
    pub fn identity(agent: AgentId, n_states: usize) -> Self {
        Self::from_union_find(agent, &mut UnionFind::new(n_states), Vec::new())
    }

    pub fn from_union_find(agent: AgentId, uf: &mut UnionFind, generators: Vec<(StateId, StateId)>) -> Self {
        let n = uf.parent.len();
        let mut class_by_root = vec![u32::MAX; n];
        let mut class_of = Vec::with_capacity(n);
        let mut classes: Vec<Vec<StateId>> = Vec::new();
        for s in 0..n {
            let root = uf.find(s);
            if class_by_root[root] == u32::MAX {
                class_by_root[root] = classes.len() as u32;
                classes.push(Vec::new());
            }
            let c = class_by_root[root];
            class_of.push(c);
            classes[c as usize].push(StateId::from_index(s));
        }
        StatePartition {
            agent,
            class_of,
            classes,
            generators,
        }
    }

    /// Least equivalence containing `seeds` and closed under stepping both
    /// sides by any action in `actions`.
    pub fn closure(
        sys: &System,
        agent: AgentId,
        seeds: impl IntoIterator<Item = (StateId, StateId)>,
        actions: &[ActionId],
        iterations: &mut u64,
    ) -> Self {
        let mut uf = UnionFind::new(sys.n_states());
        let mut generators = Vec::new();
        let mut worklist: VecDeque<(StateId, StateId)> = seeds.into_iter().collect();
        while let Some((s, t)) = worklist.pop_front() {
            *iterations += 1;
            if uf.union(s.index(), t.index()) {
                generators.push((s, t));
                for &a in actions {
                    worklist.push_back((sys.step(s, a), sys.step(t, a)));
                }
            }
        }
        Self::from_union_find(agent, &mut uf, generators)
    }

    pub fn n_states(&self) -> usize {
        self.class_of.len()
    }

    pub fn same_class(&self, s: StateId, t: StateId) -> bool {
        self.class_of[s.index()] == self.class_of[t.index()]
    }

    pub fn class_index(&self, s: StateId) -> usize {
        self.class_of[s.index()] as usize
    }

    pub fn class_of(&self, s: StateId) -> &[StateId] {
        &self.classes[self.class_index(s)]
    }

    /// Classes ordered by smallest member; members in increasing order.
    pub fn classes(&self) -> &[Vec<StateId>] {
        &self.classes
    }

    pub fn is_identity(&self) -> bool {
        self.classes.len() == self.class_of.len()
    }

    /// First pair `(representative, member)` of some class on which `key`
    /// is not constant, scanning classes and members in order.
    pub fn first_disagreement<K: PartialEq>(
        &self,
        mut key: impl FnMut(StateId) -> K,
    ) -> Option<(StateId, StateId)> {
        for class in &self.classes {
            let rep = class[0];
            let k = key(rep);
            if let Some(&other) = class[1..].iter().find(|&&s| key(s) != k) {
                return Some((rep, other));
            }
        }
        None
    }
}
