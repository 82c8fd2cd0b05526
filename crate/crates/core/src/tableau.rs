//! Complete satisfiability check for LTL with `X`, `F`, `G`, `U` and `S`.
//!
//! The closure is a hash-consed DAG of subformulae with `F a` stored as
//! `true U a` and `G a` as `!(true U !a)`. An atom assigns a truth value to
//! every closure node; atoms are produced on demand by a small constraint
//! solver, so only atoms adjacent to explored ones are ever built.
//!
//! A formula is satisfiable iff some atom containing it is backward
//! reachable from an initial atom (every `a S b` equals `b`) and forward
//! reaches a strongly connected component that discharges every `U`.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;

use crate::boolfn::{bi, BoolFn};
use crate::classify::Strategy;
use crate::deciders::SatResult;
use crate::error::{Error, Result};
use crate::formula::{trace, Assignment, Formula, Lasso, Witness};

pub const DEFAULT_MAX_ATOMS: usize = 200_000;

#[derive(Clone, Copy, Debug)]
pub struct TableauOptions {
    /// Hard cap on distinct atoms built during one run.
    pub max_atoms: usize,
    /// Require the formula to hold at position 0 instead of at some position.
    pub initial_only: bool,
}

impl Default for TableauOptions {
    fn default() -> Self {
        TableauOptions {
            max_atoms: DEFAULT_MAX_ATOMS,
            initial_only: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Node {
    Var(String),
    Apply(Arc<BoolFn>, Vec<usize>),
    Next(usize),
    Until(usize, usize),
    Since(usize, usize),
}

/// Subformula DAG in topological order (children before parents).
#[derive(Clone, Debug)]
pub struct Closure {
    nodes: Vec<Node>,
    index: HashMap<Node, usize>,
    root: usize,
}

impl Closure {
    pub fn new(f: &Formula) -> Result<Self> {
        let mut c = Closure {
            nodes: Vec::new(),
            index: HashMap::new(),
            root: 0,
        };
        c.root = c.add(f)?;
        Ok(c)
    }

    fn intern(&mut self, node: Node) -> usize {
        if let Some(&i) = self.index.get(&node) {
            return i;
        }
        self.nodes.push(node.clone());
        self.index.insert(node, self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    fn add(&mut self, f: &Formula) -> Result<usize> {
        Ok(match f {
            Formula::Var(v) => self.intern(Node::Var(v.clone())),
            Formula::Apply(g, args) => {
                if !g.is_builtin() {
                    return Err(Error::Precondition(format!(
                        "the tableau accepts built-in connectives only, found `{}`",
                        g.name()
                    )));
                }
                let ids = args.iter().map(|a| self.add(a)).collect::<Result<Vec<_>>>()?;
                self.intern(Node::Apply(g.clone(), ids))
            }
            Formula::Next(a) => {
                let a = self.add(a)?;
                self.intern(Node::Next(a))
            }
            Formula::Eventually(a) => {
                let t = self.intern(Node::Apply(bi("true"), vec![]));
                let a = self.add(a)?;
                self.intern(Node::Until(t, a))
            }
            Formula::Globally(a) => {
                let t = self.intern(Node::Apply(bi("true"), vec![]));
                let a = self.add(a)?;
                let na = self.intern(Node::Apply(bi("not"), vec![a]));
                let u = self.intern(Node::Until(t, na));
                self.intern(Node::Apply(bi("not"), vec![u]))
            }
            Formula::Until(a, b) => {
                let (a, b) = (self.add(a)?, self.add(b)?);
                self.intern(Node::Until(a, b))
            }
            Formula::Since(a, b) => {
                let (a, b) = (self.add(a)?, self.add(b)?);
                self.intern(Node::Since(a, b))
            }
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Constraint solver over closure nodes

const MAX_SCOPE: usize = 7;

/// `PATTERN[j]` has bit `t` set iff tuple `t` gives scope position `j` the value 1.
const PATTERN: [u128; MAX_SCOPE] = {
    let mut out = [0u128; MAX_SCOPE];
    let mut j = 0;
    while j < MAX_SCOPE {
        let mut t = 0;
        while t < 128 {
            if (t >> j) & 1 == 1 {
                out[j] |= 1u128 << t;
            }
            t += 1;
        }
        j += 1;
    }
    out
};

#[derive(Clone, Debug)]
struct Rel {
    scope: Vec<usize>,
    allowed: u128,
}

impl Rel {
    /// Relation over the distinct nodes in `vars` allowing exactly the
    /// tuples on which `ok` holds (`ok` sees values in the order of `vars`).
    fn build(vars: &[usize], ok: impl Fn(&[bool]) -> bool) -> Rel {
        let mut scope: Vec<usize> = Vec::new();
        for &v in vars {
            if !scope.contains(&v) {
                scope.push(v);
            }
        }
        assert!(scope.len() <= MAX_SCOPE);
        let mut allowed = 0u128;
        let mut vals = vec![false; vars.len()];
        for t in 0..1usize << scope.len() {
            for (slot, v) in vals.iter_mut().zip(vars) {
                let j = scope.iter().position(|s| s == v).unwrap();
                *slot = (t >> j) & 1 == 1;
            }
            if ok(&vals) {
                allowed |= 1u128 << t;
            }
        }
        Rel { scope, allowed }
    }
}

/// How a `U` or `S` node relates to the neighbouring atom.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Link {
    /// Only the in-atom consistency clauses.
    Free,
    /// `v = b | (a & c)` for the neighbour's value `c`.
    Fixed(bool),
}

impl Link {
    fn offset(self) -> usize {
        match self {
            Link::Free => 0,
            Link::Fixed(false) => 1,
            Link::Fixed(true) => 2,
        }
    }
}

struct Solver {
    n: usize,
    rels: Vec<Rel>,
    watches: Vec<Vec<usize>>,
    /// For temporal nodes, the index of the first of three relation variants.
    variants: Vec<Option<usize>>,
}

struct Search<'a> {
    solver: &'a Solver,
    active: Vec<bool>,
    assign: Vec<i8>,
    trail: Vec<usize>,
    queue: Vec<usize>,
}

impl Solver {
    fn new(c: &Closure) -> Solver {
        let n = c.nodes.len();
        let mut rels = Vec::new();
        let mut variants = vec![None; n];
        for (v, node) in c.nodes.iter().enumerate() {
            match node {
                Node::Apply(g, args) => {
                    let mut vars = vec![v];
                    vars.extend(args);
                    let g = g.clone();
                    rels.push(Rel::build(&vars, |x| x[0] == g.eval_unchecked(&x[1..])));
                }
                Node::Until(a, b) | Node::Since(a, b) => {
                    let vars = [v, *a, *b];
                    variants[v] = Some(rels.len());
                    rels.push(Rel::build(&vars, |x| (!x[2] || x[0]) && (!x[0] || x[1] || x[2])));
                    for c in [false, true] {
                        rels.push(Rel::build(&vars, |x| x[0] == (x[2] || (x[1] && c))));
                    }
                }
                Node::Var(_) | Node::Next(_) => {}
            }
        }
        let mut watches = vec![Vec::new(); n];
        for (i, r) in rels.iter().enumerate() {
            for &v in &r.scope {
                watches[v].push(i);
            }
        }
        Solver {
            n,
            rels,
            watches,
            variants,
        }
    }

    /// All complete assignments satisfying the active relations and the unit
    /// requirements, in lexicographic order with node 0 most significant.
    fn solve(
        &self,
        links: &[(usize, Link)],
        units: &[(usize, bool)],
        mut emit: impl FnMut(&[i8]),
    ) {
        let mut active = vec![true; self.rels.len()];
        for (v, slot) in self.variants.iter().enumerate() {
            if let Some(base) = slot {
                let link = links.iter().find(|(u, _)| *u == v).map_or(Link::Free, |l| l.1);
                for k in 0..3 {
                    active[base + k] = k == link.offset();
                }
            }
        }
        let mut s = Search {
            solver: self,
            active,
            assign: vec![-1; self.n],
            trail: Vec::new(),
            queue: Vec::new(),
        };
        for &(v, val) in units {
            if !s.set(v, val) {
                return;
            }
        }
        let all: Vec<usize> = (0..self.rels.len()).filter(|&r| s.active[r]).collect();
        if !s.revise_all(&all) {
            return;
        }
        s.branch(0, &mut emit);
    }
}

impl Search<'_> {
    fn set(&mut self, v: usize, val: bool) -> bool {
        match self.assign[v] {
            -1 => {
                self.assign[v] = val as i8;
                self.trail.push(v);
                self.queue.push(v);
                true
            }
            cur => cur == val as i8,
        }
    }

    fn revise(&mut self, r: usize) -> bool {
        let rel = &self.solver.rels[r];
        let mut cons = rel.allowed;
        for (j, &v) in rel.scope.iter().enumerate() {
            match self.assign[v] {
                0 => cons &= !PATTERN[j],
                1 => cons &= PATTERN[j],
                _ => {}
            }
        }
        if cons == 0 {
            return false;
        }
        for (j, &v) in rel.scope.iter().enumerate() {
            if self.assign[v] < 0 {
                let one = cons & PATTERN[j] != 0;
                let zero = cons & !PATTERN[j] != 0;
                if one != zero {
                    self.assign[v] = one as i8;
                    self.trail.push(v);
                    self.queue.push(v);
                }
            }
        }
        true
    }

    fn revise_all(&mut self, rels: &[usize]) -> bool {
        for &r in rels {
            if !self.revise(r) {
                self.queue.clear();
                return false;
            }
        }
        self.propagate()
    }

    fn propagate(&mut self) -> bool {
        while let Some(v) = self.queue.pop() {
            for k in 0..self.solver.watches[v].len() {
                let r = self.solver.watches[v][k];
                if self.active[r] && !self.revise(r) {
                    self.queue.clear();
                    return false;
                }
            }
        }
        true
    }

    fn undo(&mut self, mark: usize) {
        for v in self.trail.drain(mark..) {
            self.assign[v] = -1;
        }
    }

    fn branch(&mut self, from: usize, emit: &mut impl FnMut(&[i8])) {
        let Some(v) = (from..self.solver.n).find(|&v| self.assign[v] < 0) else {
            emit(&self.assign);
            return;
        };
        for val in [false, true] {
            let mark = self.trail.len();
            if self.set(v, val) && self.propagate() {
                self.branch(v + 1, emit);
            }
            self.undo(mark);
        }
    }
}

// ---------------------------------------------------------------------------
// Atom graph

type Bits = Box<[u64]>;

fn pack(assign: &[i8]) -> Bits {
    let mut out = vec![0u64; assign.len().div_ceil(64)].into_boxed_slice();
    for (i, &v) in assign.iter().enumerate() {
        if v == 1 {
            out[i / 64] |= 1 << (i % 64);
        }
    }
    out
}

fn bit(atom: &[u64], i: usize) -> bool {
    atom[i / 64] >> (i % 64) & 1 == 1
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TableauStats {
    pub closure_size: usize,
    pub atoms: usize,
    pub edges: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mark {
    Unknown,
    Good,
    Dead,
}

pub struct Tableau {
    closure: Closure,
    solver: Solver,
    opts: TableauOptions,
    atoms: Vec<Bits>,
    ids: HashMap<Bits, usize>,
    succ: Vec<Option<Vec<usize>>>,
    pred: Vec<Option<Vec<usize>>>,
    back_mark: Vec<Mark>,
    fair_mark: Vec<Mark>,
    edges: usize,
    untils: Vec<(usize, usize, usize)>,
    sinces: Vec<(usize, usize, usize)>,
    nexts: Vec<(usize, usize)>,
}

impl Tableau {
    pub fn new(f: &Formula, opts: TableauOptions) -> Result<Self> {
        let closure = Closure::new(f)?;
        let solver = Solver::new(&closure);
        let mut untils = Vec::new();
        let mut sinces = Vec::new();
        let mut nexts = Vec::new();
        for (v, node) in closure.nodes.iter().enumerate() {
            match *node {
                Node::Until(a, b) => untils.push((v, a, b)),
                Node::Since(a, b) => sinces.push((v, a, b)),
                Node::Next(c) => nexts.push((v, c)),
                _ => {}
            }
        }
        Ok(Tableau {
            closure,
            solver,
            opts,
            atoms: Vec::new(),
            ids: HashMap::new(),
            succ: Vec::new(),
            pred: Vec::new(),
            back_mark: Vec::new(),
            fair_mark: Vec::new(),
            edges: 0,
            untils,
            sinces,
            nexts,
        })
    }

    pub fn stats(&self) -> TableauStats {
        TableauStats {
            closure_size: self.closure.len(),
            atoms: self.atoms.len(),
            edges: self.edges,
        }
    }

    fn collect(&mut self, links: &[(usize, Link)], units: &[(usize, bool)]) -> Result<Vec<usize>> {
        let mut found: Vec<Bits> = Vec::new();
        self.solver.solve(links, units, |a| found.push(pack(a)));
        let mut out = Vec::with_capacity(found.len());
        for bits in found {
            let id = match self.ids.get(&bits) {
                Some(&id) => id,
                None => {
                    if self.atoms.len() >= self.opts.max_atoms {
                        return Err(Error::Resource(format!(
                            "tableau exceeded {} atoms",
                            self.opts.max_atoms
                        )));
                    }
                    let id = self.atoms.len();
                    self.atoms.push(bits.clone());
                    self.ids.insert(bits, id);
                    self.succ.push(None);
                    self.pred.push(None);
                    self.back_mark.push(Mark::Unknown);
                    self.fair_mark.push(Mark::Unknown);
                    id
                }
            };
            out.push(id);
        }
        self.edges += out.len();
        Ok(out)
    }

    fn has(&self, atom: usize, node: usize) -> bool {
        bit(&self.atoms[atom], node)
    }

    fn is_initial(&self, a: usize) -> bool {
        self.sinces.iter().all(|&(s, _, b)| self.has(a, s) == self.has(a, b))
    }

    fn phi_atoms(&mut self) -> Result<Vec<usize>> {
        let links: Vec<(usize, Link)> = if self.opts.initial_only {
            self.sinces.iter().map(|&(s, _, _)| (s, Link::Fixed(false))).collect()
        } else {
            vec![]
        };
        let root = self.closure.root;
        self.collect(&links, &[(root, true)])
    }

    fn successors(&mut self, a: usize) -> Result<Vec<usize>> {
        if let Some(list) = &self.succ[a] {
            return Ok(list.clone());
        }
        let links: Vec<(usize, Link)> = self
            .sinces
            .iter()
            .map(|&(s, _, _)| (s, Link::Fixed(self.has(a, s))))
            .collect();
        let mut units: Vec<(usize, bool)> =
            self.nexts.iter().map(|&(x, c)| (c, self.has(a, x))).collect();
        for &(u, al, be) in &self.untils {
            if self.has(a, al) && !self.has(a, be) {
                units.push((u, self.has(a, u)));
            }
        }
        let list = self.collect(&links, &units)?;
        self.succ[a] = Some(list.clone());
        Ok(list)
    }

    fn predecessors(&mut self, b: usize) -> Result<Vec<usize>> {
        if let Some(list) = &self.pred[b] {
            return Ok(list.clone());
        }
        let links: Vec<(usize, Link)> = self
            .untils
            .iter()
            .map(|&(u, _, _)| (u, Link::Fixed(self.has(b, u))))
            .collect();
        let mut units: Vec<(usize, bool)> =
            self.nexts.iter().map(|&(x, c)| (x, self.has(b, c))).collect();
        for &(s, al, be) in &self.sinces {
            if self.has(b, al) && !self.has(b, be) {
                units.push((s, self.has(b, s)));
            }
        }
        let list = self.collect(&links, &units)?;
        self.pred[b] = Some(list.clone());
        Ok(list)
    }

    /// Path `[init, .., a]` from an initial atom, if one exists.
    fn path_from_initial(&mut self, a: usize) -> Result<Option<Vec<usize>>> {
        if self.back_mark[a] == Mark::Dead {
            return Ok(None);
        }
        let mut parent: HashMap<usize, usize> = HashMap::new();
        let mut visited = vec![a];
        let mut stack = vec![a];
        parent.insert(a, a);
        while let Some(b) = stack.pop() {
            if self.is_initial(b) {
                let mut path = vec![b];
                let mut cur = b;
                while cur != a {
                    cur = parent[&cur];
                    path.push(cur);
                }
                for v in &path {
                    self.back_mark[*v] = Mark::Good;
                }
                return Ok(Some(path));
            }
            let preds = self.predecessors(b)?;
            for p in preds.into_iter().rev() {
                if self.back_mark[p] != Mark::Dead && !parent.contains_key(&p) {
                    parent.insert(p, b);
                    visited.push(p);
                    stack.push(p);
                }
            }
        }
        for v in visited {
            self.back_mark[v] = Mark::Dead;
        }
        Ok(None)
    }

    fn fulfils(&self, atom: usize, until: usize) -> bool {
        let (u, _, b) = self.untils[until];
        !self.has(atom, u) || self.has(atom, b)
    }

    fn fulfils_all(&self, atoms: &[usize]) -> bool {
        (0..self.untils.len()).all(|k| atoms.iter().any(|&a| self.fulfils(a, k)))
    }

    fn accepting(&self, scc: &[usize]) -> bool {
        let nontrivial = scc.len() > 1
            || self.succ[scc[0]]
                .as_ref()
                .is_some_and(|l| l.contains(&scc[0]));
        nontrivial && self.fulfils_all(scc)
    }

    /// Atoms of a fulfilling cycle or accepting component reachable from `a`,
    /// found by iterative Tarjan.
    fn fair_scc_from(&mut self, a: usize) -> Result<Option<Vec<usize>>> {
        if self.fair_mark[a] == Mark::Dead {
            return Ok(None);
        }
        let mut index: HashMap<usize, (usize, usize)> = HashMap::new(); // (index, lowlink)
        let mut stack: Vec<usize> = Vec::new();
        let mut on_stack: HashMap<usize, bool> = HashMap::new();
        let mut visited: Vec<usize> = Vec::new();
        let mut call: Vec<(usize, Vec<usize>, usize)> = Vec::new();
        let mut counter = 0;

        let start = |v: usize,
                     index: &mut HashMap<usize, (usize, usize)>,
                     stack: &mut Vec<usize>,
                     on_stack: &mut HashMap<usize, bool>,
                     counter: &mut usize| {
            index.insert(v, (*counter, *counter));
            *counter += 1;
            stack.push(v);
            on_stack.insert(v, true);
        };

        start(a, &mut index, &mut stack, &mut on_stack, &mut counter);
        visited.push(a);
        let succ = self.successors(a)?;
        call.push((a, succ, 0));
        while let Some((v, succs, i)) = call.last_mut() {
            let v = *v;
            if *i < succs.len() {
                let w = succs[*i];
                *i += 1;
                if self.fair_mark[w] == Mark::Dead {
                    continue;
                }
                match index.get(&w) {
                    None => {
                        start(w, &mut index, &mut stack, &mut on_stack, &mut counter);
                        visited.push(w);
                        let ws = self.successors(w)?;
                        call.push((w, ws, 0));
                    }
                    Some(&(wi, _)) => {
                        if on_stack.get(&w).copied().unwrap_or(false) {
                            let e = index.get_mut(&v).unwrap();
                            e.1 = e.1.min(wi);
                            // a back edge to the DFS path closes a cycle; take it if it fulfils
                            if let Some(d) = call.iter().position(|c| c.0 == w) {
                                let cycle: Vec<usize> = call[d..].iter().map(|c| c.0).collect();
                                if self.fulfils_all(&cycle) {
                                    return Ok(Some(cycle));
                                }
                            }
                        }
                    }
                }
                continue;
            }
            call.pop();
            let (vi, vl) = index[&v];
            if let Some((parent, _, _)) = call.last() {
                let e = index.get_mut(parent).unwrap();
                e.1 = e.1.min(vl);
            }
            if vi == vl {
                let mut scc = Vec::new();
                loop {
                    let w = stack.pop().unwrap();
                    on_stack.insert(w, false);
                    scc.push(w);
                    if w == v {
                        break;
                    }
                }
                if self.accepting(&scc) {
                    return Ok(Some(scc));
                }
            }
        }
        for v in visited {
            self.fair_mark[v] = Mark::Dead;
        }
        Ok(None)
    }

    /// Shortest path from `from` to an atom satisfying `goal`, through `allowed` atoms.
    /// With `nonempty`, at least one edge is taken.
    fn bfs(
        &self,
        from: usize,
        goal: impl Fn(usize) -> bool,
        allowed: impl Fn(usize) -> bool,
        nonempty: bool,
    ) -> Option<Vec<usize>> {
        if !nonempty && goal(from) {
            return Some(vec![from]);
        }
        let mut parent: HashMap<usize, usize> = HashMap::new();
        let mut queue = VecDeque::from([from]);
        let mut seen = HashSet::from([from]);
        while let Some(v) = queue.pop_front() {
            for &w in self.succ[v].as_deref().unwrap_or(&[]) {
                if !allowed(w) {
                    continue;
                }
                if goal(w) {
                    let mut path = vec![w];
                    let mut cur = v;
                    path.push(cur);
                    while cur != from {
                        cur = parent[&cur];
                        path.push(cur);
                    }
                    path.reverse();
                    return Some(path);
                }
                if seen.insert(w) {
                    parent.insert(w, v);
                    queue.push_back(w);
                }
            }
        }
        None
    }

    fn assignment(&self, atom: usize) -> Assignment {
        self.closure
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| match n {
                Node::Var(v) if self.has(atom, i) => Some(v.clone()),
                _ => None,
            })
            .collect()
    }

    fn build_witness(&self, back: &[usize], a: usize, scc: &[usize]) -> Result<Witness> {
        let in_scc = |x: usize| scc.contains(&x);
        let reach = self
            .bfs(a, in_scc, |_| true, false)
            .ok_or_else(|| Error::Invariant("accepting component not reachable".into()))?;
        let entry = *reach.last().unwrap();
        let mut cycle = vec![entry];
        let mut cur = entry;
        for k in 0..self.untils.len() {
            if cycle.iter().any(|&x| self.fulfils(x, k)) {
                continue;
            }
            let seg = self
                .bfs(cur, |x| self.fulfils(x, k), in_scc, false)
                .ok_or_else(|| Error::Invariant("component does not fulfil".into()))?;
            cycle.extend(&seg[1..]);
            cur = *cycle.last().unwrap();
        }
        let back_seg = self
            .bfs(cur, |x| x == entry, in_scc, cycle.len() == 1)
            .ok_or_else(|| Error::Invariant("component is not strongly connected".into()))?;
        cycle.extend(&back_seg[1..]);
        cycle.pop();

        let mut prefix_atoms: Vec<usize> = back.to_vec();
        prefix_atoms.pop();
        let index = prefix_atoms.len();
        prefix_atoms.extend(&reach[..reach.len() - 1]);
        let lasso = Lasso::new(
            prefix_atoms.iter().map(|&x| self.assignment(x)).collect(),
            cycle.iter().map(|&x| self.assignment(x)).collect(),
        )?;
        Ok(Witness::new(lasso, index))
    }

    /// Runs the search. `Some(witness)` iff satisfiable.
    pub fn run(&mut self) -> Result<Option<Witness>> {
        for a in self.phi_atoms()? {
            let Some(back) = self.path_from_initial(a)? else {
                continue;
            };
            if let Some(scc) = self.fair_scc_from(a)? {
                return self.build_witness(&back, a, &scc).map(Some);
            }
        }
        Ok(None)
    }
}

/// Decides satisfiability of a formula over the built-in connectives. SAT
/// answers carry a witness checked by direct evaluation.
pub fn decide_tableau(f: &Formula) -> Result<SatResult> {
    decide_tableau_with(f, TableauOptions::default())
}

pub fn decide_tableau_with(f: &Formula, opts: TableauOptions) -> Result<SatResult> {
    let mut t = Tableau::new(f, opts)?;
    match t.run()? {
        Some(w) => {
            let tr = trace(&w.lasso, f);
            if !tr.at(w.index) {
                return Err(Error::Invariant(format!(
                    "tableau witness {} at {} does not satisfy {f}",
                    w.lasso.to_json(),
                    w.index
                )));
            }
            Ok(SatResult::sat(Strategy::Tableau, Some(w)))
        }
        None => Ok(SatResult::unsat(Strategy::Tableau)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolfn::Base;
    use crate::formula::{parse, sat_bounded};

    fn p(s: &str) -> Formula {
        parse(s, &Base::default()).unwrap()
    }

    fn sat(s: &str) -> bool {
        decide_tableau(&p(s)).unwrap().satisfiable
    }

    #[test]
    fn examples() {
        assert!(!sat("and(x, not(x))"));
        assert!(!sat("and(G x, F not(x))"));
        let r = decide_tableau(&p("and(x, X not(x))")).unwrap();
        assert!(r.satisfiable);
        assert!(r.witness.unwrap().verifies(&p("and(x, X not(x))")));
    }

    #[test]
    fn eventualities_must_be_fulfilled() {
        assert!(!sat("and(G not(y), x U y)"));
        assert!(sat("G F x"));
        assert!(sat("and(G F x, G F not(x))"));
        assert!(!sat("and(F G x, G F not(x))"));
        assert!(sat("and(x, G or(not(x), X not(x)))"));
    }

    #[test]
    fn past_needs_a_beginning() {
        // true S y requires y somewhere in the past
        assert!(!sat("and(F y, G not(true S y))"));
        assert!(sat("and(G not(y), true S y)"));
        assert!(sat("and(not(y), true S y)"));
        // y held at every past point, but not now: impossible at position 0 only
        assert!(sat("and(not(y), X y)"));
        assert!(!sat("and(G y, not(true S y))"));
    }

    #[test]
    fn initial_only_mode() {
        let f = p("and(not(x), true S x)");
        assert!(sat("and(not(x), true S x)"));
        let opts = TableauOptions {
            initial_only: true,
            ..Default::default()
        };
        let r = decide_tableau_with(&f, opts).unwrap();
        assert!(!r.satisfiable);
        let g = p("x U y");
        let r = decide_tableau_with(&g, opts).unwrap();
        assert_eq!(r.witness.unwrap().index, 0);
    }

    #[test]
    fn rejects_foreign_connectives() {
        let base = Base::parse("g 2 0010").unwrap();
        let f = parse("g(x, y)", &base).unwrap();
        assert!(matches!(decide_tableau(&f), Err(Error::Precondition(_))));
    }

    #[test]
    fn atom_cap() {
        let f = p("and(and(a, b), and(c, F and(d, X e)))");
        let opts = TableauOptions {
            max_atoms: 3,
            ..Default::default()
        };
        assert!(matches!(decide_tableau_with(&f, opts), Err(Error::Resource(_))));
    }

    #[test]
    fn agrees_with_bounded_search_on_samples() {
        for s in [
            "x U (y S x)",
            "and(G (x U y), G not(y))",
            "X (x S not(x))",
            "and(F x, G (or(not(x), X G not(x))))",
            "and(x S y, not(y S x))",
            "G (and(x, X not(x)) )",
            "and(G or(x, X x), G or(not(x), X not(x)))",
        ] {
            let f = p(s);
            let bounded = sat_bounded(&f, 4, 3, 5_000_000).unwrap().is_some();
            let r = decide_tableau(&f).unwrap();
            assert_eq!(r.satisfiable, bounded, "{s}");
        }
    }
}
