//! Vertex genealogy shared by all meshes refined from a common root.
//!
//! Root vertices get keys `0..n`. A vertex created at the midpoint of an edge
//! with endpoint keys `(a, b)` gets the key registered for the unordered pair,
//! so the same midpoint created in two different refinement branches carries
//! the same key. Nested P1 interpolation only needs these parent pairs.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

#[derive(Debug, Default)]
struct Table {
    parents: Vec<Option<(u64, u64)>>,
    children: HashMap<(u64, u64), u64>,
}

#[derive(Debug, Default)]
pub(crate) struct Family {
    table: Mutex<Table>,
}

impl Family {
    fn child(&self, a: u64, b: u64) -> u64 {
        let pair = if a < b { (a, b) } else { (b, a) };
        let mut table = self.table.lock().unwrap();
        if let Some(&k) = table.children.get(&pair) {
            return k;
        }
        let k = table.parents.len() as u64;
        table.parents.push(Some(pair));
        table.children.insert(pair, k);
        k
    }

    fn parents(&self, key: u64) -> Option<(u64, u64)> {
        self.table.lock().unwrap().parents.get(key as usize).copied().flatten()
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Lineage {
    family: Arc<Family>,
    keys: Vec<u64>,
}

impl Lineage {
    pub fn root(num_vertices: usize) -> Lineage {
        let family = Family::default();
        family.table.lock().unwrap().parents = vec![None; num_vertices];
        Lineage { family: Arc::new(family), keys: (0..num_vertices as u64).collect() }
    }

    pub fn keys(&self) -> &[u64] {
        &self.keys
    }

    pub fn same_family(&self, other: &Lineage) -> bool {
        Arc::ptr_eq(&self.family, &other.family)
    }

    /// Lineage of a refined mesh: existing vertices keep their keys, new
    /// vertices are midpoints of the given vertex pairs of `self`.
    pub fn extended(&self, midpoints: &[[usize; 2]]) -> Lineage {
        let mut keys = self.keys.clone();
        keys.extend(midpoints.iter().map(|&[a, b]| self.family.child(self.keys[a], self.keys[b])));
        Lineage { family: Arc::clone(&self.family), keys }
    }

    pub fn parents(&self, key: u64) -> Option<(u64, u64)> {
        self.family.parents(key)
    }
}
