//! Tree-graph codes: specs, photon counts, materialization and the JSON
//! document format used by every front end.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Branching vector of a symmetric (sub)tree. Entry `k` is the number of
/// sons of each vertex in layer `k`.
pub type Branch = Vec<u32>;

/// A tree-graph code. Serializes as the JSON tree document.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "TreeDoc", try_from = "TreeDoc")]
pub enum TreeSpec {
    /// One branching vector for the whole tree, root included.
    Symmetric(Branch),
    /// Symmetric branches hanging off a shared root. Each entry describes the
    /// branch from its own root downward; `()` is a single leaf.
    BranchList(Vec<Branch>),
}

impl TreeSpec {
    pub fn symmetric(b: impl Into<Branch>) -> Result<Self> {
        let t = TreeSpec::Symmetric(b.into());
        t.validate()?;
        Ok(t)
    }

    pub fn branches(b: Vec<Branch>) -> Result<Self> {
        let t = TreeSpec::BranchList(b);
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TreeSpec::Symmetric(b) => {
                if b.is_empty() {
                    return Err(Error::InvalidTree("symmetric branching vector is empty".into()));
                }
                check_entries(b)
            }
            TreeSpec::BranchList(bs) => {
                if bs.is_empty() {
                    return Err(Error::InvalidTree("branch list is empty".into()));
                }
                bs.iter().try_for_each(|b| check_entries(b))
            }
        }
    }

    /// Branch-list form. A symmetric `(b0, rest..)` becomes `b0` copies of
    /// `rest`.
    pub fn canonicalize(&self) -> TreeSpec {
        TreeSpec::BranchList(self.branch_list())
    }

    pub fn branch_list(&self) -> Vec<Branch> {
        match self {
            TreeSpec::Symmetric(b) => vec![b[1..].to_vec(); b[0] as usize],
            TreeSpec::BranchList(bs) => bs.clone(),
        }
    }

    pub fn photon_count(&self) -> u64 {
        match self {
            TreeSpec::Symmetric(b) => branch_photons(b),
            TreeSpec::BranchList(bs) => 1 + bs.iter().map(|b| branch_photons(b)).sum::<u64>(),
        }
    }

    /// Depth counted in layers below the root.
    pub fn depth(&self) -> usize {
        match self {
            TreeSpec::Symmetric(b) => b.len(),
            TreeSpec::BranchList(bs) => 1 + bs.iter().map(|b| b.len()).max().unwrap_or(0),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&TreeDoc::from(self)).expect("tree documents always serialize")
    }

    /// Parse a tree document. Accepts `{"symmetric":[..]}` or
    /// `{"branches":[[..],..]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TreeDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })?;
        TreeSpec::try_from(doc)
    }
}

fn check_entries(b: &[u32]) -> Result<()> {
    match b.iter().position(|&x| x == 0) {
        Some(i) => Err(Error::InvalidTree(format!("branching entry {i} is 0, entries must be >= 1"))),
        None => Ok(()),
    }
}

/// Vertices of a symmetric tree with branching `b`, its root included.
pub fn branch_photons(b: &[u32]) -> u64 {
    let mut total = 1u64;
    let mut layer = 1u64;
    for &x in b {
        layer *= x as u64;
        total += layer;
    }
    total
}

impl fmt::Display for TreeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |b: &Branch| b.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match self {
            TreeSpec::Symmetric(b) => write!(f, "[{}]", join(b)),
            TreeSpec::BranchList(bs) => {
                let parts: Vec<String> = bs.iter().map(|b| format!("({})", join(b))).collect();
                write!(f, "[{}]", parts.join(","))
            }
        }
    }
}

/// Parses the notation `Display` writes: `[2,1,15]` for a symmetric tree,
/// `[(4,3),(4,2),(3,1)]` for a branch list. Whitespace is ignored.
impl std::str::FromStr for TreeSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::InvalidTree(format!("cannot read {text:?} as a tree"));
        let inner = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')).ok_or_else(bad)?;
        let numbers = |part: &str| -> Result<Branch> {
            if part.is_empty() {
                return Ok(Vec::new());
            }
            part.split(',').map(|x| x.parse::<u32>().map_err(|_| bad())).collect()
        };
        if !inner.contains('(') {
            return TreeSpec::symmetric(numbers(inner)?);
        }
        let body = inner.strip_prefix('(').and_then(|r| r.strip_suffix(')')).ok_or_else(bad)?;
        let branches = body.split("),(").map(numbers).collect::<Result<Vec<_>>>()?;
        TreeSpec::branches(branches)
    }
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
enum TreeDocInner {
    #[serde(rename = "symmetric")]
    Symmetric(Vec<u32>),
    #[serde(rename = "branches")]
    Branches(Vec<Vec<u32>>),
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(transparent)]
struct TreeDoc(TreeDocInner);

impl From<&TreeSpec> for TreeDoc {
    fn from(t: &TreeSpec) -> Self {
        TreeDoc(match t {
            TreeSpec::Symmetric(b) => TreeDocInner::Symmetric(b.clone()),
            TreeSpec::BranchList(bs) => TreeDocInner::Branches(bs.clone()),
        })
    }
}

impl From<TreeSpec> for TreeDoc {
    fn from(t: TreeSpec) -> Self {
        TreeDoc::from(&t)
    }
}

impl TryFrom<TreeDoc> for TreeSpec {
    type Error = Error;

    fn try_from(d: TreeDoc) -> Result<Self> {
        let t = match d.0 {
            TreeDocInner::Symmetric(b) => TreeSpec::Symmetric(b),
            TreeDocInner::Branches(bs) => TreeSpec::BranchList(bs),
        };
        t.validate()?;
        Ok(t)
    }
}

/// Position of a vertex: layer `k`, parent's position `p` within layer
/// `k - 1`, and sibling index `a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VertexCoord {
    pub k: u32,
    pub p: u32,
    pub a: u32,
}

impl VertexCoord {
    pub const ROOT: VertexCoord = VertexCoord { k: 0, p: 0, a: 0 };
}

/// A materialized tree. Vertex 0 is the root and every parent precedes its
/// sons, so a reverse scan visits sons before parents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplicitTree {
    parent: Vec<Option<usize>>,
    layer: Vec<u32>,
    coord: Vec<VertexCoord>,
    children: Vec<Vec<usize>>,
    pos: Vec<u32>,
    layer_fill: Vec<u32>,
}

impl ExplicitTree {
    pub fn from_spec(spec: &TreeSpec) -> Self {
        let mut t = ExplicitTree {
            parent: vec![None],
            layer: vec![0],
            coord: vec![VertexCoord::ROOT],
            children: vec![Vec::new()],
            pos: vec![0],
            layer_fill: vec![1],
        };
        // Layer-by-layer so positions within a layer are contiguous.
        let branches = spec.branch_list();
        let mut frontier: Vec<(usize, Vec<u32>)> = Vec::new();
        for b in &branches {
            let v = t.push(0);
            frontier.push((v, b.clone()));
        }
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for (v, b) in frontier {
                if let Some((&sons, rest)) = b.split_first() {
                    for _ in 0..sons {
                        let c = t.push(v);
                        next.push((c, rest.to_vec()));
                    }
                }
            }
            frontier = next;
        }
        t
    }

    /// Build from parent links; `parents[0]` must be `None` and every parent
    /// index must be smaller than its son's.
    pub fn from_parents(parents: &[Option<usize>]) -> Result<Self> {
        if parents.first() != Some(&None) {
            return Err(Error::InvalidTree("vertex 0 must be the unique root".into()));
        }
        let mut t = ExplicitTree {
            parent: vec![None],
            layer: vec![0],
            coord: vec![VertexCoord::ROOT],
            children: vec![Vec::new()],
            pos: vec![0],
            layer_fill: vec![1],
        };
        for (v, p) in parents.iter().enumerate().skip(1) {
            match p {
                Some(p) if *p < v => {
                    t.push(*p);
                }
                _ => return Err(Error::InvalidTree(format!("vertex {v} has no earlier parent"))),
            }
        }
        Ok(t)
    }

    fn push(&mut self, parent: usize) -> usize {
        let v = self.parent.len();
        let k = self.layer[parent] + 1;
        let a = self.children[parent].len() as u32;
        let p = self.pos[parent];
        if self.layer_fill.len() <= k as usize {
            self.layer_fill.push(0);
        }
        self.pos.push(self.layer_fill[k as usize]);
        self.layer_fill[k as usize] += 1;
        self.parent.push(Some(parent));
        self.layer.push(k);
        self.coord.push(VertexCoord { k, p, a });
        self.children.push(Vec::new());
        self.children[parent].push(v);
        v
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn layer(&self, v: usize) -> u32 {
        self.layer[v]
    }

    pub fn coord(&self, v: usize) -> VertexCoord {
        self.coord[v]
    }

    pub fn depth(&self) -> u32 {
        self.layer.iter().copied().max().unwrap_or(0)
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.depth() as usize + 1];
        for &l in &self.layer {
            sizes[l as usize] += 1;
        }
        sizes
    }

    /// Roots of the branches, in branch order.
    pub fn branch_roots(&self) -> &[usize] {
        &self.children[0]
    }

    /// Undirected edges `(parent, son)`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.parent
            .iter()
            .enumerate()
            .filter_map(|(v, p)| p.map(|p| (p, v)))
            .collect()
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&v| self.children[v].is_empty())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_notation() {
        let t: TreeSpec = "[(4,3), (4,2), (3,1)]".parse().unwrap();
        assert_eq!(t, TreeSpec::BranchList(vec![vec![4, 3], vec![4, 2], vec![3, 1]]));
        assert_eq!(t.to_string().parse::<TreeSpec>().unwrap(), t);
        assert_eq!("[2,1,15]".parse::<TreeSpec>().unwrap(), TreeSpec::Symmetric(vec![2, 1, 15]));
        for bad in ["2,1", "[2,x]", "[(4,3)", "[2,0]"] {
            assert!(bad.parse::<TreeSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn canonical_forms() {
        let t = TreeSpec::symmetric(vec![2, 1]).unwrap();
        assert_eq!(t.canonicalize(), TreeSpec::BranchList(vec![vec![1], vec![1]]));
        let a = TreeSpec::BranchList(vec![vec![4, 3], vec![4, 2], vec![3, 1]]);
        assert_eq!(a.canonicalize(), a);
        assert_eq!(a.canonicalize().canonicalize(), a.canonicalize());
    }

    #[test]
    fn layer_sizes_of_asymmetric_tree() {
        let t = TreeSpec::BranchList(vec![vec![4, 3], vec![4, 2], vec![3, 1]]);
        let e = ExplicitTree::from_spec(&t);
        assert_eq!(e.len(), 38);
        assert_eq!(e.layer_sizes(), vec![1, 3, 11, 23]);
    }

    #[test]
    fn coordinates_follow_parent_positions() {
        let e = ExplicitTree::from_spec(&TreeSpec::Symmetric(vec![2, 2, 2]));
        for v in 1..e.len() {
            let p = e.parent(v).unwrap();
            let c = e.coord(v);
            assert_eq!(c.k, e.coord(p).k + 1);
            let pc = e.coord(p);
            if pc.k > 0 {
                // binary tree: parent position is 2p + a of the parent's coords
                assert_eq!(c.p, 2 * pc.p + pc.a);
            }
        }
    }

    #[test]
    fn rejects_zero_entries_and_bad_json() {
        assert!(TreeSpec::from_json(r#"{"branches":[[0]]}"#).is_err());
        assert!(TreeSpec::from_json(r#"{"symmetric":[]}"#).is_err());
        match TreeSpec::from_json("{\"symmetric\":[1,\n x]}") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn json_round_trip() {
        for s in [r#"{"symmetric":[3,8,3]}"#, r#"{"branches":[[4,3],[4,2],[3,1]]}"#] {
            let t = TreeSpec::from_json(s).unwrap();
            assert_eq!(t.to_json(), s);
        }
    }
}
