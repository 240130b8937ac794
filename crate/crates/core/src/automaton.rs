//! Weighted Aho-Corasick automaton over vocabulary words.
//!
//! Besides the usual goto/fail structure each node carries the data needed to
//! score a word against the words sharing its context:
//!
//! * `prev_final`: the nearest proper ancestor that ends a word, with the root
//!   standing in for the empty word;
//! * `subtree_sum`: total count of the words at or below the node.
//!
//! A word's probability is its count divided by the `subtree_sum` of its
//! `prev_final`. When no vocabulary word is a prefix of `w`, the context is the
//! root and this is the plain unigram estimate.
//!
//! After construction every missing transition that would leave the root's
//! immediate children is replaced by a direct (virtual) edge, so matching never
//! walks fail links. Edges whose target has depth one are not copied into every
//! node: [`Automaton::next_state`] falls back to the root's children instead,
//! which keeps memory proportional to the vocabulary rather than to
//! `nodes * alphabet`.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::vocab::Vocabulary;

pub type NodeId = u32;

pub const ROOT: NodeId = 0;

#[derive(Clone, Debug)]
pub struct Node {
    /// Trie edges, sorted by character.
    children: Vec<(char, NodeId)>,
    /// Virtual edges added by the breadth-first pass, sorted by character.
    shortcuts: Vec<(char, NodeId)>,
    parent: NodeId,
    label: char,
    fail: NodeId,
    output: Option<NodeId>,
    prev_final: NodeId,
    count: u64,
    subtree_sum: u64,
    depth: u32,
    log_prob: f64,
}

impl Node {
    fn new(parent: NodeId, label: char, depth: u32) -> Self {
        Node {
            children: Vec::new(),
            shortcuts: Vec::new(),
            parent,
            label,
            fail: ROOT,
            output: None,
            prev_final: ROOT,
            count: 0,
            subtree_sum: 0,
            depth,
            log_prob: f64::NEG_INFINITY,
        }
    }

    pub fn children(&self) -> &[(char, NodeId)] {
        &self.children
    }

    pub fn fail(&self) -> NodeId {
        self.fail
    }

    /// Nearest word-ending node on the fail chain, excluding the root.
    pub fn output_link(&self) -> Option<NodeId> {
        self.output
    }

    pub fn prev_final(&self) -> NodeId {
        self.prev_final
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn subtree_sum(&self) -> u64 {
        self.subtree_sum
    }

    pub fn depth(&self) -> usize {
        self.depth as usize
    }

    pub fn parent(&self) -> NodeId {
        self.parent
    }
}

fn lookup(edges: &[(char, NodeId)], c: char) -> Option<NodeId> {
    edges
        .binary_search_by_key(&c, |&(k, _)| k)
        .ok()
        .map(|i| edges[i].1)
}

/// A match reported by [`Automaton::scan`]: `text[end - len..end]` is a word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Match {
    pub end: usize,
    pub len: usize,
    pub node: NodeId,
}

impl Match {
    pub fn start(&self) -> usize {
        self.end - self.len
    }
}

#[derive(Clone, Debug)]
pub struct Automaton {
    nodes: Vec<Node>,
    words: usize,
}

impl Automaton {
    /// Builds the trie, then fail links, virtual transitions, output links,
    /// context pointers and subtree sums in one breadth-first pass plus one
    /// reverse sweep. An empty vocabulary yields a root-only automaton.
    pub fn build(vocab: &Vocabulary) -> Self {
        let mut nodes = vec![Node::new(ROOT, '\0', 0)];
        for e in vocab.iter() {
            let mut cur = ROOT;
            for c in e.word.chars() {
                cur = match nodes[cur as usize]
                    .children
                    .binary_search_by_key(&c, |&(k, _)| k)
                {
                    Ok(i) => nodes[cur as usize].children[i].1,
                    Err(i) => {
                        let id = nodes.len() as NodeId;
                        let depth = nodes[cur as usize].depth + 1;
                        nodes.push(Node::new(cur, c, depth));
                        nodes[cur as usize].children.insert(i, (c, id));
                        id
                    }
                };
            }
            nodes[cur as usize].count += e.count;
        }

        let mut automaton = Automaton {
            nodes,
            words: vocab.len(),
        };
        let order = automaton.link();
        automaton.accumulate(&order);
        automaton
    }

    /// Breadth-first pass; returns the visiting order.
    fn link(&mut self) -> Vec<NodeId> {
        let nodes = &mut self.nodes;
        let mut order = Vec::with_capacity(nodes.len());
        let mut queue = VecDeque::new();
        order.push(ROOT);
        for &(_, v) in &nodes[ROOT as usize].children {
            queue.push_back(v);
        }
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let ui = u as usize;
            let fail_u = nodes[ui].fail;
            let parent = nodes[ui].parent;
            nodes[ui].prev_final = if parent == ROOT || nodes[parent as usize].count > 0 {
                parent
            } else {
                nodes[parent as usize].prev_final
            };
            let f = &nodes[fail_u as usize];
            let output = if fail_u != ROOT && f.count > 0 {
                Some(fail_u)
            } else {
                f.output
            };
            // Virtual transitions: whatever the fail state does on characters
            // this node has no trie edge for. The fail state sits at a smaller
            // depth, so its own table is already complete.
            let inherited = (fail_u != ROOT).then(|| merge_edges(&f.children, &f.shortcuts));
            nodes[ui].output = output;
            if let Some(inherited) = inherited {
                let own = &nodes[ui].children;
                let shortcuts: Vec<_> = inherited
                    .into_iter()
                    .filter(|&(c, _)| lookup(own, c).is_none())
                    .collect();
                nodes[ui].shortcuts = shortcuts;
            }

            let children = nodes[ui].children.clone();
            for (c, v) in children {
                let fv = if u == ROOT {
                    ROOT
                } else {
                    step(nodes, fail_u, c)
                };
                nodes[v as usize].fail = fv;
                queue.push_back(v);
            }
        }
        order
    }

    fn accumulate(&mut self, order: &[NodeId]) {
        for &v in order.iter().rev() {
            let n = &mut self.nodes[v as usize];
            n.subtree_sum += n.count;
            let (sum, parent) = (n.subtree_sum, n.parent);
            if v != ROOT {
                self.nodes[parent as usize].subtree_sum += sum;
            }
        }
        for i in 1..self.nodes.len() {
            if self.nodes[i].count > 0 {
                let ctx = self.nodes[i].prev_final as usize;
                let p = self.nodes[i].count as f64 / self.nodes[ctx].subtree_sum as f64;
                self.nodes[i].log_prob = p.ln();
            }
        }
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn word_count(&self) -> usize {
        self.words
    }

    /// Sum of all word counts.
    pub fn total_count(&self) -> u64 {
        self.nodes[ROOT as usize].subtree_sum
    }

    /// The root stands for the empty word and counts as final.
    pub fn is_final(&self, id: NodeId) -> bool {
        id == ROOT || self.nodes[id as usize].count > 0
    }

    /// Node spelling `s` along trie edges only.
    pub fn find(&self, s: &str) -> Option<NodeId> {
        let mut cur = ROOT;
        for c in s.chars() {
            cur = lookup(&self.nodes[cur as usize].children, c)?;
        }
        Some(cur)
    }

    /// String spelled by the root path of `id`.
    pub fn spell(&self, id: NodeId) -> String {
        let mut chars = Vec::with_capacity(self.nodes[id as usize].depth as usize);
        let mut cur = id;
        while cur != ROOT {
            chars.push(self.nodes[cur as usize].label);
            cur = self.nodes[cur as usize].parent;
        }
        chars.iter().rev().collect()
    }

    pub fn next_state(&self, state: NodeId, c: char) -> NodeId {
        step(&self.nodes, state, c)
    }

    /// Count of `w` over the total count of words sharing its context.
    pub fn word_prob(&self, w: &str) -> Result<f64> {
        self.word_log_prob(w).map(f64::exp)
    }

    pub fn word_log_prob(&self, w: &str) -> Result<f64> {
        match self.find(w) {
            Some(id) if id != ROOT && self.nodes[id as usize].count > 0 => {
                Ok(self.nodes[id as usize].log_prob)
            }
            _ => Err(Error::NotInVocabulary(w.to_owned())),
        }
    }

    /// Precomputed log probability of the word ending at `id`.
    pub fn log_prob_of(&self, id: NodeId) -> f64 {
        self.nodes[id as usize].log_prob
    }

    /// Log of `count / total_count`: the context-free estimate.
    pub fn unigram_log_prob_of(&self, id: NodeId) -> f64 {
        (self.nodes[id as usize].count as f64 / self.total_count() as f64).ln()
    }

    /// Calls `f` for every vocabulary occurrence in `text`, in order of end
    /// position. Runs in `O(|text| + matches)`.
    pub fn for_each_match(&self, text: &[char], mut f: impl FnMut(Match)) {
        let mut state = ROOT;
        for (i, &c) in text.iter().enumerate() {
            state = self.next_state(state, c);
            let mut hit = if self.nodes[state as usize].count > 0 {
                Some(state)
            } else {
                self.nodes[state as usize].output
            };
            while let Some(id) = hit {
                let n = &self.nodes[id as usize];
                f(Match {
                    end: i + 1,
                    len: n.depth as usize,
                    node: id,
                });
                hit = n.output;
            }
        }
    }

    pub fn scan(&self, text: &str) -> Vec<Match> {
        let chars: Vec<char> = text.chars().collect();
        let mut out = Vec::new();
        self.for_each_match(&chars, |m| out.push(m));
        out
    }
}

fn step(nodes: &[Node], state: NodeId, c: char) -> NodeId {
    let n = &nodes[state as usize];
    lookup(&n.children, c)
        .or_else(|| lookup(&n.shortcuts, c))
        .or_else(|| lookup(&nodes[ROOT as usize].children, c))
        .unwrap_or(ROOT)
}

fn merge_edges(a: &[(char, NodeId)], b: &[(char, NodeId)]) -> Vec<(char, NodeId)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}
