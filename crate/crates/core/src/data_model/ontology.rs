use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyNode {
    pub code: String,
    pub name: String,
}

/// Drug (ATC) or disease (ICD-10) hierarchy. Edges point child → parent.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyGraph {
    pub nodes: Vec<OntologyNode>,
    pub edges: Vec<(String, String)>,
}

impl OntologyGraph {
    pub fn contains(&self, code: &str) -> bool {
        self.nodes.iter().any(|n| n.code == code)
    }

    pub fn parents(&self, code: &str) -> impl Iterator<Item = &str> {
        let code = String::from(code);
        self.edges.iter().filter(move |(c, _)| *c == code).map(|(_, p)| p.as_str())
    }

    /// All transitive ancestors, nearest first, each listed once.
    pub fn ancestors(&self, code: &str) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut frontier: Vec<&str> = self.parents(code).collect();
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for p in frontier {
                if seen.insert(p) {
                    out.push(p);
                    next.extend(self.parents(p));
                }
            }
            frontier = next;
        }
        out
    }

    /// A code that lies on a cycle, if any.
    pub fn find_cycle(&self) -> Option<&str> {
        let mut adjacency: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (c, p) in &self.edges {
            adjacency.entry(c.as_str()).or_default().push(p.as_str());
        }
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state: BTreeMap<&str, u8> = BTreeMap::new();
        for &start in adjacency.keys() {
            if state.get(start).copied().unwrap_or(0) != 0 {
                continue;
            }
            let mut stack: Vec<(&str, usize)> = alloc::vec![(start, 0)];
            state.insert(start, 1);
            while let Some((node, child)) = stack.pop() {
                let next = adjacency.get(node).and_then(|v| v.get(child)).copied();
                match next {
                    Some(n) => {
                        stack.push((node, child + 1));
                        match state.get(n).copied().unwrap_or(0) {
                            1 => return Some(n),
                            0 => {
                                state.insert(n, 1);
                                stack.push((n, 0));
                            }
                            _ => {}
                        }
                    }
                    None => {
                        state.insert(node, 2);
                    }
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn graph(edges: &[(&str, &str)]) -> OntologyGraph {
        let mut codes: Vec<&str> = edges.iter().flat_map(|(a, b)| [*a, *b]).collect();
        codes.sort();
        codes.dedup();
        OntologyGraph {
            nodes: codes.iter().map(|c| OntologyNode { code: c.to_string(), name: c.to_string() }).collect(),
            edges: edges.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        }
    }

    #[test]
    fn ancestors_walk_up() {
        let g = graph(&[("L01XA01", "L01XA"), ("L01XA", "L01X"), ("L01X", "L01")]);
        assert_eq!(g.ancestors("L01XA01"), ["L01XA", "L01X", "L01"]);
        assert!(g.find_cycle().is_none());
    }

    #[test]
    fn cycle_detected() {
        let g = graph(&[("a", "b"), ("b", "c"), ("c", "a")]);
        assert!(g.find_cycle().is_some());
    }
}
