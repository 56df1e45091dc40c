use std::collections::{BTreeMap, HashMap};

use crate::{Error, Result};

use super::{covered_vars, ResidualClause, SimplifiedFormula};

/// One connected component of G_{Φ^Λ} with a BFS spanning tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    /// Residual clauses in BFS order; the first one is the root.
    pub clauses: Vec<ResidualClause>,
    /// Parent of each clause in the spanning tree, as a position in
    /// `clauses`.
    pub parent: Vec<Option<usize>>,
    /// Free variables of the component, ascending.
    pub vars: Vec<usize>,
    /// Edges of the induced graph outside the spanning tree, as pairs of
    /// original clause indices.
    pub non_tree_edges: Vec<(usize, usize)>,
    /// Every variable shared by the endpoints of a non-tree edge, ascending.
    pub cycle_vars: Vec<usize>,
    pub tree_excess: usize,
}

impl Component {
    pub fn clause_indices(&self) -> Vec<usize> {
        self.clauses.iter().map(|c| c.index).collect()
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentDecomposition {
    pub components: Vec<Component>,
    /// Free variables in no residual clause.
    pub isolated_vars: Vec<usize>,
}

pub fn decompose(sf: &SimplifiedFormula) -> Result<ComponentDecomposition> {
    if sf.empty_clause_present {
        return Err(Error::EmptyClause);
    }
    let components = components_of(&sf.residuals);
    let covered = covered_vars(&sf.residuals);
    let isolated_vars = sf
        .free_vars
        .iter()
        .copied()
        .filter(|v| covered.binary_search(v).is_err())
        .collect();
    Ok(ComponentDecomposition {
        components,
        isolated_vars,
    })
}

/// Split a residual clause list into connected components. Clauses are
/// adjacent when they share a variable; components appear in order of their
/// first clause.
pub fn components_of(clauses: &[ResidualClause]) -> Vec<Component> {
    let var_lists: Vec<Vec<usize>> = clauses.iter().map(ResidualClause::vars).collect();
    let mut occ: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, vs) in var_lists.iter().enumerate() {
        for &v in vs {
            occ.entry(v).or_default().push(i);
        }
    }

    let mut visited = vec![false; clauses.len()];
    let mut out = Vec::new();
    for start in 0..clauses.len() {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut order = vec![start];
        let mut parent = vec![None];
        let mut head = 0;
        while head < order.len() {
            let i = order[head];
            for &v in &var_lists[i] {
                for &j in &occ[&v] {
                    if !visited[j] {
                        visited[j] = true;
                        order.push(j);
                        parent.push(Some(head));
                    }
                }
            }
            head += 1;
        }

        // Shared variables per unordered clause pair, keyed by local
        // positions.
        let mut pos = HashMap::with_capacity(order.len());
        for (p, &i) in order.iter().enumerate() {
            pos.insert(i, p);
        }
        let mut shared: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        let mut vars = Vec::new();
        for &i in &order {
            for &v in &var_lists[i] {
                let list = &occ[&v];
                if list[0] == i {
                    vars.push(v);
                    for (a, &x) in list.iter().enumerate() {
                        for &y in &list[a + 1..] {
                            let (px, py) = (pos[&x], pos[&y]);
                            let key = (px.min(py), px.max(py));
                            shared.entry(key).or_default().push(v);
                        }
                    }
                }
            }
        }
        vars.sort_unstable();

        let mut non_tree_edges = Vec::new();
        let mut cycle_vars = Vec::new();
        for (&(a, b), vs) in &shared {
            let tree = parent[b] == Some(a) || parent[a] == Some(b);
            if !tree {
                non_tree_edges.push((clauses[order[a]].index, clauses[order[b]].index));
                cycle_vars.extend_from_slice(vs);
            }
        }
        cycle_vars.sort_unstable();
        cycle_vars.dedup();

        out.push(Component {
            tree_excess: shared.len() + 1 - order.len(),
            clauses: order.iter().map(|&i| clauses[i].clone()).collect(),
            parent,
            vars,
            non_tree_edges,
            cycle_vars,
        });
    }
    out
}
