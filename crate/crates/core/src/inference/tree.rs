use serde::{Deserialize, Serialize};

use crate::kb::Atom;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoalStatus {
    Proven,
    Failed,
    Pending,
}

/// Where the clause that resolved a goal came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClauseSource {
    /// Index into `KnowledgeBase::clauses`.
    Kb,
    /// Index into the fact-store relation of the goal's predicate.
    Store,
    Builtin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoalNode {
    pub atom: Atom,
    pub status: GoalStatus,
    pub clause: Option<usize>,
    pub source: Option<ClauseSource>,
    pub parent: Option<usize>,
    /// One child per body atom, in body order.
    pub children: Vec<usize>,
    /// Position in the order goals were selected; `None` if never selected.
    pub visit: Option<usize>,
}

/// Proof-search tree; node 0 is the query.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalTree {
    pub nodes: Vec<GoalNode>,
}

impl GoalTree {
    pub fn root(&self) -> &GoalNode {
        &self.nodes[0]
    }

    /// Structural preorder (node, then children left to right).
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.nodes[n].children.iter().rev());
        }
        out
    }

    /// Visited nodes in the order the engine selected them.
    pub fn visit_order(&self) -> Vec<usize> {
        let mut v: Vec<(usize, usize)> = self
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.visit.map(|k| (k, i)))
            .collect();
        v.sort_unstable();
        v.into_iter().map(|(_, i)| i).collect()
    }

    /// The visit order coincides with the preorder of the visited nodes.
    pub fn visits_in_preorder(&self) -> bool {
        let pre: Vec<usize> = self
            .preorder()
            .into_iter()
            .filter(|&i| self.nodes[i].visit.is_some())
            .collect();
        pre == self.visit_order()
    }

    /// Nodes whose atom has one of the given predicate names, in preorder.
    pub fn find<'a>(&'a self, preds: &'a [&str]) -> impl Iterator<Item = (usize, &'a GoalNode)> + 'a {
        self.preorder()
            .into_iter()
            .filter(move |&i| preds.contains(&self.nodes[i].atom.pred.as_str()))
            .map(move |i| (i, &self.nodes[i]))
    }

    pub fn to_trace(&self) -> TraceNode {
        let pre = self.preorder();
        let mut index = vec![0; self.nodes.len()];
        for (k, &i) in pre.iter().enumerate() {
            index[i] = k;
        }
        self.trace_node(0, &index)
    }

    fn trace_node(&self, i: usize, index: &[usize]) -> TraceNode {
        let n = &self.nodes[i];
        TraceNode {
            id: i,
            preorder: index[i],
            atom: n.atom.to_string(),
            status: n.status,
            clause: n.clause,
            source: n.source,
            children: n.children.iter().map(|&c| self.trace_node(c, index)).collect(),
        }
    }
}

/// JSON form of a goal tree node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceNode {
    pub id: usize,
    pub preorder: usize,
    pub atom: String,
    pub status: GoalStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clause: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<ClauseSource>,
    pub children: Vec<TraceNode>,
}
