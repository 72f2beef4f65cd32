//! Decorated, partially singular braid diagrams.
//!
//! A diagram is a word of letters read bottom to top on `strands` columns,
//! closed either as a braid or as a plat. Braid closures carry two marker
//! vertices at the bottom of strand 1; the segment between them is `e1` and
//! the segment above is `e2`.
//!
//! Every vertex has ordered ports. A 4-valent vertex has ports
//! `[a, b, c, d]` = (left-out, right-out, left-in, right-in); a bivalent
//! vertex has `[out, in]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiagramError {
    #[error("malformed token `{0}`")]
    MalformedToken(String),
    #[error("token `{token}` out of range for {strands} strands")]
    IndexOutOfRange { token: String, strands: usize },
    #[error("strand count must be positive")]
    NoStrands,
    #[error("plat closure needs an even strand count, got {0}")]
    OddStrands(usize),
    #[error("operation requires a braid closure")]
    NotBraidClosure,
    #[error("resolution has {found} entries, diagram has {expected} crossings")]
    ResolutionSize { expected: usize, found: usize },
    #[error("unsupported decorated edge {0}; only edge 1 is supported")]
    DecoratedEdge(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Closure {
    Braid,
    Plat,
}

impl FromStr for Closure {
    type Err = String;
    fn from_str(s: &str) -> Result<Closure, String> {
        match s {
            "braid" | "braid-closure" => Ok(Closure::Braid),
            "plat" | "plat-closure" => Ok(Closure::Plat),
            _ => Err(format!("unknown closure `{s}`")),
        }
    }
}

/// One letter of the word; `i` is the 1-based left strand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Letter {
    Crossing { i: usize, positive: bool },
    Singular { i: usize },
    Bivalent { i: usize },
}

impl Letter {
    pub fn strand(&self) -> usize {
        match *self {
            Letter::Crossing { i, .. } | Letter::Singular { i } | Letter::Bivalent { i } => i,
        }
    }

    pub fn width(&self) -> usize {
        match self {
            Letter::Bivalent { .. } => 1,
            _ => 2,
        }
    }

    pub fn parse(token: &str, strands: usize) -> Result<Letter, DiagramError> {
        let bad = || DiagramError::MalformedToken(token.to_string());
        let (kind, rest) = if let Some(r) = token.strip_prefix('s') {
            ('s', r)
        } else if let Some(r) = token.strip_prefix('σ') {
            ('s', r)
        } else if let Some(r) = token.strip_prefix('x') {
            ('x', r)
        } else if let Some(r) = token.strip_prefix('b') {
            ('b', r)
        } else {
            return Err(bad());
        };
        let (num, inverse) = if let Some(n) = rest.strip_suffix("^-1") {
            (n, true)
        } else if let Some(n) = rest.strip_suffix("⁻¹") {
            (n, true)
        } else {
            (rest, false)
        };
        if inverse && kind != 's' {
            return Err(bad());
        }
        if num.is_empty() || !num.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let i: usize = num.parse().map_err(|_| bad())?;
        let limit = if kind == 'b' { strands } else { strands.saturating_sub(1) };
        if i == 0 || i > limit {
            return Err(DiagramError::IndexOutOfRange { token: token.to_string(), strands });
        }
        Ok(match kind {
            's' => Letter::Crossing { i, positive: !inverse },
            'x' => Letter::Singular { i },
            _ => Letter::Bivalent { i },
        })
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Letter::Crossing { i, positive: true } => write!(f, "s{i}"),
            Letter::Crossing { i, positive: false } => write!(f, "s{i}^-1"),
            Letter::Singular { i } => write!(f, "x{i}"),
            Letter::Bivalent { i } => write!(f, "b{i}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VertexKind {
    Crossing {
        positive: bool,
    },
    Singular,
    Bivalent,
    /// Ends of the decorated edge, or a filler on an otherwise empty strand.
    Marker,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vertex {
    pub kind: VertexKind,
    /// Index into the letter list, if the vertex comes from a letter.
    pub letter: Option<usize>,
    pub strand: usize,
    /// Edge ids by port.
    pub ports: Vec<usize>,
}

impl Vertex {
    pub fn is_four_valent(&self) -> bool {
        self.ports.len() == 4
    }

    /// `(a, b, c, d)` for a 4-valent vertex.
    pub fn quad(&self) -> (usize, usize, usize, usize) {
        assert!(self.is_four_valent());
        (self.ports[0], self.ports[1], self.ports[2], self.ports[3])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct End {
    pub vertex: usize,
    pub port: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub id: usize,
    pub strand: usize,
    /// For braid closures `ends[0]` is the tail (an out port) and `ends[1]`
    /// the head (an in port).
    pub ends: [End; 2],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecoratedDiagram {
    strands: usize,
    letters: Vec<Letter>,
    closure: Closure,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    crossings: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct DiagramJson {
    strands: usize,
    letters: Vec<String>,
    closure: Closure,
    #[serde(default = "one")]
    decorated_edge: usize,
}

fn one() -> usize {
    1
}

impl DecoratedDiagram {
    pub fn new(strands: usize, letters: Vec<Letter>, closure: Closure) -> Result<DecoratedDiagram, DiagramError> {
        if strands == 0 {
            return Err(DiagramError::NoStrands);
        }
        for l in &letters {
            let last = l.strand() + l.width() - 1;
            if l.strand() == 0 || last > strands {
                return Err(DiagramError::IndexOutOfRange { token: l.to_string(), strands });
            }
        }
        if closure == Closure::Plat && strands % 2 == 1 {
            return Err(DiagramError::OddStrands(strands));
        }
        let mut d = DecoratedDiagram {
            strands,
            letters,
            closure,
            vertices: Vec::new(),
            edges: Vec::new(),
            crossings: Vec::new(),
        };
        match closure {
            Closure::Braid => d.build_braid(),
            Closure::Plat => d.build_plat(),
        }
        d.crossings =
            (0..d.vertices.len()).filter(|&v| matches!(d.vertices[v].kind, VertexKind::Crossing { .. })).collect();
        Ok(d)
    }

    fn build_braid(&mut self) {
        let n = self.strands;
        let mut b = Builder::default();
        // markers: M_in (vertex 0) and M_out (vertex 1)
        let m_in = b.vertex(VertexKind::Marker, None, 1, 2);
        let m_out = b.vertex(VertexKind::Marker, None, 1, 2);
        b.reserve(n + 1);
        b.set_edge(1, 1, End { vertex: m_in, port: 0 }, End { vertex: m_out, port: 1 });
        b.tail(2, 1, End { vertex: m_out, port: 0 });
        let mut cur: Vec<usize> = vec![0; n + 1];
        cur[1] = 2;
        for s in 2..=n {
            cur[s] = s + 1;
        }
        let last_on = last_letter_on(&self.letters, n);
        for (k, l) in self.letters.iter().enumerate() {
            let (kind, width) = letter_kind(l);
            let v = b.vertex(kind, Some(k), l.strand(), if width == 2 { 4 } else { 2 });
            let touched: Vec<usize> = (l.strand()..l.strand() + width).collect();
            // inputs
            for (slot, &s) in touched.iter().enumerate() {
                let port = if width == 2 { 2 + slot } else { 1 };
                b.head(cur[s], End { vertex: v, port });
                b.vertices[v].ports[port] = cur[s];
            }
            // outputs, left then right
            for (slot, &s) in touched.iter().enumerate() {
                let port = if width == 2 { slot } else { 0 };
                let id = if last_on[s] == Some(k) && s >= 2 { s + 1 } else { b.fresh() };
                b.tail(id, s, End { vertex: v, port });
                b.vertices[v].ports[port] = id;
                cur[s] = id;
            }
        }
        // close strand 1 into M_in
        b.head(cur[1], End { vertex: m_in, port: 1 });
        b.vertices[m_in].ports = vec![1, cur[1]];
        b.vertices[m_out].ports = vec![2, 1];
        for s in 2..=n {
            if last_on[s].is_none() {
                let v = b.vertex(VertexKind::Marker, None, s, 2);
                b.vertices[v].ports = vec![s + 1, s + 1];
                b.set_edge(s + 1, s, End { vertex: v, port: 0 }, End { vertex: v, port: 1 });
            }
        }
        (self.vertices, self.edges) = b.finish();
    }

    fn build_plat(&mut self) {
        let n = self.strands;
        let pairs = n / 2;
        let mut b = Builder::default();
        b.reserve(pairs);
        let mut cur: Vec<usize> = vec![0; n + 1];
        // per strand, which end of the cup/cap edge it uses
        for i in 1..=pairs {
            cur[2 * i - 1] = i;
            cur[2 * i] = i;
        }
        let last_on = last_letter_on(&self.letters, n);
        let mut cap: Vec<Option<usize>> = vec![None; pairs + 1];
        // fillers for empty strands so every edge end lands on a vertex
        let mut fillers: Vec<(usize, Letter)> = Vec::new();
        for s in 1..=n {
            if last_on[s].is_none() {
                fillers.push((s, Letter::Bivalent { i: s }));
            }
        }
        let items: Vec<(Option<usize>, Letter)> = fillers
            .iter()
            .map(|&(_, l)| (None, l))
            .chain(self.letters.iter().enumerate().map(|(k, l)| (Some(k), *l)))
            .collect();
        let mut last_item: Vec<usize> = vec![usize::MAX; n + 1];
        for (idx, (_, l)) in items.iter().enumerate() {
            for s in l.strand()..l.strand() + l.width() {
                last_item[s] = idx;
            }
        }
        let mut seen: Vec<bool> = vec![false; n + 1];
        for (idx, (k, l)) in items.iter().enumerate() {
            let (kind, width) = match k {
                Some(_) => letter_kind(l),
                None => (VertexKind::Marker, 1),
            };
            let v = b.vertex(kind, *k, l.strand(), if width == 2 { 4 } else { 2 });
            let touched: Vec<usize> = (l.strand()..l.strand() + width).collect();
            for (slot, &s) in touched.iter().enumerate() {
                let port = if width == 2 { 2 + slot } else { 1 };
                let end = End { vertex: v, port };
                if !seen[s] {
                    // bottom cup: left strand fills end 0, right strand end 1
                    b.cup_end(cur[s], (s + 1) % 2, s, end);
                    seen[s] = true;
                } else {
                    b.head(cur[s], end);
                }
                b.vertices[v].ports[port] = cur[s];
            }
            for (slot, &s) in touched.iter().enumerate() {
                let port = if width == 2 { slot } else { 0 };
                let end = End { vertex: v, port };
                if last_item[s] == idx {
                    let pair = (s + 1) / 2;
                    let id = match cap[pair] {
                        Some(id) => id,
                        None => {
                            let id = b.fresh();
                            cap[pair] = Some(id);
                            id
                        }
                    };
                    b.cup_end(id, (s + 1) % 2, 2 * pair - 1, end);
                    b.vertices[v].ports[port] = id;
                    cur[s] = id;
                } else {
                    let id = b.fresh();
                    b.tail(id, s, end);
                    b.vertices[v].ports[port] = id;
                    cur[s] = id;
                }
            }
        }
        (self.vertices, self.edges) = b.finish();
    }

    pub fn parse_braid(word: &str, strands: usize, closure: Closure) -> Result<DecoratedDiagram, DiagramError> {
        let letters = word.split_whitespace().map(|t| Letter::parse(t, strands)).collect::<Result<Vec<_>, _>>()?;
        DecoratedDiagram::new(strands, letters, closure)
    }

    pub fn from_json(text: &str) -> Result<DecoratedDiagram, DiagramError> {
        let j: DiagramJson = serde_json::from_str(text).map_err(|e| DiagramError::MalformedToken(e.to_string()))?;
        if j.decorated_edge != 1 {
            return Err(DiagramError::DecoratedEdge(j.decorated_edge));
        }
        let letters = j.letters.iter().map(|t| Letter::parse(t, j.strands)).collect::<Result<Vec<_>, _>>()?;
        DecoratedDiagram::new(j.strands, letters, j.closure)
    }

    pub fn to_json(&self) -> String {
        let j = DiagramJson {
            strands: self.strands,
            letters: self.letters.iter().map(|l| l.to_string()).collect(),
            closure: self.closure,
            decorated_edge: 1,
        };
        serde_json::to_string(&j).unwrap()
    }

    pub fn strands(&self) -> usize {
        self.strands
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn closure(&self) -> Closure {
        self.closure
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    /// Edges indexed by `id - 1`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id - 1]
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Vertex indices of the crossings, in word order.
    pub fn crossings(&self) -> &[usize] {
        &self.crossings
    }

    pub fn crossing_count(&self) -> usize {
        self.crossings.len()
    }

    pub fn crossing_sign(&self, k: usize) -> bool {
        match self.vertices[self.crossings[k]].kind {
            VertexKind::Crossing { positive } => positive,
            _ => unreachable!(),
        }
    }

    /// Vertex indices of the singular letters, `v4(D)`.
    pub fn singular_vertices(&self) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&v| self.vertices[v].kind == VertexKind::Singular).collect()
    }

    pub fn bivalent_count(&self) -> usize {
        self.vertices.iter().filter(|v| v.ports.len() == 2).count()
    }

    pub fn mirror(&self) -> DecoratedDiagram {
        let letters = self
            .letters
            .iter()
            .map(|l| match *l {
                Letter::Crossing { i, positive } => Letter::Crossing { i, positive: !positive },
                other => other,
            })
            .collect();
        DecoratedDiagram::new(self.strands, letters, self.closure).unwrap()
    }

    pub fn word(&self) -> String {
        self.letters.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ")
    }

    /// The other end of the strand passing through `(vertex, port)` when
    /// crossings are crossed straight and singular vertices are smoothed
    /// unorientedly (`c`-`d`, `a`-`b`).
    pub fn pass_through(&self, vertex: usize, port: usize) -> usize {
        match self.vertices[vertex].kind {
            VertexKind::Crossing { .. } => [3, 2, 1, 0][port],
            VertexKind::Singular => [1, 0, 3, 2][port],
            _ => 1 - port,
        }
    }

    /// Resolve every crossing according to `I`.
    pub fn resolve(&self, res: &Resolution) -> Result<SingularGraph, DiagramError> {
        if self.closure != Closure::Braid {
            return Err(DiagramError::NotBraidClosure);
        }
        if res.len() != self.crossing_count() {
            return Err(DiagramError::ResolutionSize { expected: self.crossing_count(), found: res.len() });
        }
        let mut vertices = Vec::new();
        let mut cross_index = vec![usize::MAX; self.vertices.len()];
        for (k, &v) in self.crossings.iter().enumerate() {
            cross_index[v] = k;
        }
        for (vi, v) in self.vertices.iter().enumerate() {
            match v.kind {
                VertexKind::Crossing { positive } => {
                    let k = cross_index[vi];
                    let singular = positive != res.get(k);
                    let (a, b, c, d) = v.quad();
                    if singular {
                        vertices.push(GraphVertex {
                            origin: VertexOrigin::Resolved(k),
                            source: vi,
                            ins: vec![c, d],
                            outs: vec![a, b],
                        });
                    } else {
                        vertices.push(GraphVertex {
                            origin: VertexOrigin::Smoothing(k),
                            source: vi,
                            ins: vec![c],
                            outs: vec![a],
                        });
                        vertices.push(GraphVertex {
                            origin: VertexOrigin::Smoothing(k),
                            source: vi,
                            ins: vec![d],
                            outs: vec![b],
                        });
                    }
                }
                VertexKind::Singular => {
                    let (a, b, c, d) = v.quad();
                    vertices.push(GraphVertex {
                        origin: VertexOrigin::Diagram,
                        source: vi,
                        ins: vec![c, d],
                        outs: vec![a, b],
                    });
                }
                _ => {
                    vertices.push(GraphVertex {
                        origin: VertexOrigin::Diagram,
                        source: vi,
                        ins: vec![v.ports[1]],
                        outs: vec![v.ports[0]],
                    });
                }
            }
        }
        Ok(SingularGraph { edge_strands: self.edges.iter().map(|e| e.strand).collect(), vertices })
    }

    /// True iff two consecutive layers form `S_2n`: a layer of singular
    /// vertices on `(2i, 2i+1)` for `i < n` directly followed by a layer on
    /// `(2i-1, 2i)` for all `i`.
    pub fn contains_s2n(&self) -> bool {
        if self.strands % 2 == 1 {
            return false;
        }
        let n = self.strands / 2;
        let bottom: Vec<usize> = (1..n).map(|i| 2 * i).collect();
        let top: Vec<usize> = (1..=n).map(|i| 2 * i - 1).collect();
        let total = bottom.len() + top.len();
        if self.letters.len() < total {
            return false;
        }
        let singular_set = |ls: &[Letter]| {
            let mut s: Vec<usize> = ls
                .iter()
                .map(|l| match l {
                    Letter::Singular { i } => Some(*i),
                    _ => None,
                })
                .collect::<Option<Vec<_>>>()?;
            s.sort_unstable();
            Some(s)
        };
        (0..=self.letters.len() - total).any(|start| {
            let (lo, hi) = self.letters[start..start + total].split_at(bottom.len());
            singular_set(lo).as_ref() == Some(&bottom) && singular_set(hi).as_ref() == Some(&top)
        })
    }
}

impl fmt::Display for DecoratedDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self.closure {
            Closure::Braid => "braid",
            Closure::Plat => "plat",
        };
        write!(f, "[{}] on {} strands, {} closure", self.word(), self.strands, c)
    }
}

fn letter_kind(l: &Letter) -> (VertexKind, usize) {
    match *l {
        Letter::Crossing { positive, .. } => (VertexKind::Crossing { positive }, 2),
        Letter::Singular { .. } => (VertexKind::Singular, 2),
        Letter::Bivalent { .. } => (VertexKind::Bivalent, 1),
    }
}

fn last_letter_on(letters: &[Letter], n: usize) -> Vec<Option<usize>> {
    let mut last = vec![None; n + 1];
    for (k, l) in letters.iter().enumerate() {
        for s in l.strand()..l.strand() + l.width() {
            last[s] = Some(k);
        }
    }
    last
}

#[derive(Default)]
struct Builder {
    vertices: Vec<Vertex>,
    edges: Vec<(usize, [Option<End>; 2])>,
    next: usize,
}

impl Builder {
    fn vertex(&mut self, kind: VertexKind, letter: Option<usize>, strand: usize, valence: usize) -> usize {
        self.vertices.push(Vertex { kind, letter, strand, ports: vec![0; valence] });
        self.vertices.len() - 1
    }

    fn reserve(&mut self, count: usize) {
        self.edges.resize(count, (0, [None, None]));
        self.next = count + 1;
    }

    fn fresh(&mut self) -> usize {
        let id = self.next;
        self.next += 1;
        if self.edges.len() < id {
            self.edges.resize(id, (0, [None, None]));
        }
        id
    }

    fn slot(&mut self, id: usize) -> &mut (usize, [Option<End>; 2]) {
        &mut self.edges[id - 1]
    }

    fn set_edge(&mut self, id: usize, strand: usize, tail: End, head: End) {
        *self.slot(id) = (strand, [Some(tail), Some(head)]);
    }

    fn tail(&mut self, id: usize, strand: usize, end: End) {
        let s = self.slot(id);
        s.0 = strand;
        s.1[0] = Some(end);
    }

    fn head(&mut self, id: usize, end: End) {
        self.slot(id).1[1] = Some(end);
    }

    fn cup_end(&mut self, id: usize, which: usize, strand: usize, end: End) {
        let s = self.slot(id);
        if s.0 == 0 {
            s.0 = strand;
        }
        s.1[which] = Some(end);
    }

    fn finish(self) -> (Vec<Vertex>, Vec<Edge>) {
        let edges = self
            .edges
            .into_iter()
            .enumerate()
            .map(|(i, (strand, ends))| Edge {
                id: i + 1,
                strand,
                ends: [ends[0].expect("edge tail"), ends[1].expect("edge head")],
            })
            .collect();
        (self.vertices, edges)
    }
}

/// A vertex of the cube: bit `k` is the resolution of crossing `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Resolution {
    bits: u64,
    len: usize,
}

impl Resolution {
    pub fn new(bits: u64, len: usize) -> Resolution {
        assert!(len <= 63);
        assert!(bits >> len == 0, "resolution bits exceed crossing count");
        Resolution { bits, len }
    }

    pub fn zeros(len: usize) -> Resolution {
        Resolution::new(0, len)
    }

    pub fn ones(len: usize) -> Resolution {
        Resolution::new((1u64 << len) - 1, len)
    }

    pub fn from_slice(v: &[bool]) -> Resolution {
        let bits = v.iter().enumerate().fold(0u64, |acc, (k, &b)| acc | ((b as u64) << k));
        Resolution::new(bits, v.len())
    }

    pub fn all(len: usize) -> impl Iterator<Item = Resolution> {
        (0..1u64 << len).map(move |b| Resolution::new(b, len))
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, k: usize) -> bool {
        self.bits >> k & 1 == 1
    }

    pub fn height(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn flip(&self, k: usize) -> Resolution {
        Resolution::new(self.bits ^ (1 << k), self.len)
    }

    /// `Σ_{k' < k} I(k') mod 2`, the standard sign of the edge changing `k`.
    pub fn edge_sign_parity(&self, k: usize) -> bool {
        (self.bits & ((1u64 << k) - 1)).count_ones() % 2 == 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VertexOrigin {
    /// A singular letter or a bivalent vertex of the diagram.
    Diagram,
    /// The singularization of crossing `k`.
    Resolved(usize),
    /// One of the two bivalent vertices of the oriented smoothing of crossing `k`.
    Smoothing(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphVertex {
    pub origin: VertexOrigin,
    /// Vertex of the diagram this comes from.
    pub source: usize,
    /// `[c, d]` or `[in]`.
    pub ins: Vec<usize>,
    /// `[a, b]` or `[out]`.
    pub outs: Vec<usize>,
}

impl GraphVertex {
    pub fn is_four_valent(&self) -> bool {
        self.ins.len() == 2
    }

    pub fn quad(&self) -> (usize, usize, usize, usize) {
        (self.outs[0], self.outs[1], self.ins[0], self.ins[1])
    }
}

/// A complete resolution: an oriented graph with 4-valent and bivalent vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SingularGraph {
    edge_strands: Vec<usize>,
    vertices: Vec<GraphVertex>,
}

impl SingularGraph {
    pub fn edge_count(&self) -> usize {
        self.edge_strands.len()
    }

    pub fn edge_strand(&self, id: usize) -> usize {
        self.edge_strands[id - 1]
    }

    pub fn vertices(&self) -> &[GraphVertex] {
        &self.vertices
    }

    pub fn four_valent(&self) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&v| self.vertices[v].is_four_valent()).collect()
    }

    /// `v4(D)`: 4-valent vertices coming from singular letters.
    pub fn four_valent_from_diagram(&self) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|&v| self.vertices[v].is_four_valent() && self.vertices[v].origin == VertexOrigin::Diagram)
            .collect()
    }

    /// `v4(I)`: 4-valent vertices coming from resolved crossings.
    pub fn four_valent_from_resolution(&self) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&v| matches!(self.vertices[v].origin, VertexOrigin::Resolved(_))).collect()
    }

    /// For each edge, `(tail vertex, head vertex)`.
    pub fn endpoints(&self) -> Vec<(usize, usize)> {
        let mut tail = vec![usize::MAX; self.edge_count()];
        let mut head = vec![usize::MAX; self.edge_count()];
        for (vi, v) in self.vertices.iter().enumerate() {
            for &e in &v.outs {
                tail[e - 1] = vi;
            }
            for &e in &v.ins {
                head[e - 1] = vi;
            }
        }
        tail.into_iter().zip(head).collect()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.vertices.len();
        if n == 0 {
            return true;
        }
        let mut uf = UnionFind::new(n);
        for (t, h) in self.endpoints() {
            uf.union(t, h);
        }
        let r = uf.find(0);
        (1..n).all(|v| uf.find(v) == r)
    }

    /// Replace each 4-valent vertex by the unoriented smoothing.
    pub fn smooth(&self) -> SmoothedDiagram {
        let m = self.edge_count();
        let mut uf = UnionFind::new(m);
        for v in &self.vertices {
            if v.is_four_valent() {
                let (a, b, c, d) = v.quad();
                uf.union(c - 1, d - 1);
                uf.union(a - 1, b - 1);
            } else {
                uf.union(v.ins[0] - 1, v.outs[0] - 1);
            }
        }
        SmoothedDiagram::from_union_find(m, &mut uf)
    }
}

/// Circles of a smoothing, numbered by smallest edge id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmoothedDiagram {
    pub circles: Vec<Vec<usize>>,
    pub edge_to_circle: Vec<usize>,
}

impl SmoothedDiagram {
    fn from_union_find(m: usize, uf: &mut UnionFind) -> SmoothedDiagram {
        let mut root_to_circle = vec![usize::MAX; m];
        let mut circles: Vec<Vec<usize>> = Vec::new();
        let mut edge_to_circle = vec![0; m];
        for e in 0..m {
            let r = uf.find(e);
            if root_to_circle[r] == usize::MAX {
                root_to_circle[r] = circles.len();
                circles.push(Vec::new());
            }
            let c = root_to_circle[r];
            circles[c].push(e + 1);
            edge_to_circle[e] = c;
        }
        SmoothedDiagram { circles, edge_to_circle }
    }

    pub fn circle_count(&self) -> usize {
        self.circles.len()
    }

    pub fn circle_of(&self, edge: usize) -> usize {
        self.edge_to_circle[edge - 1]
    }
}

#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> UnionFind {
        UnionFind { parent: (0..n).collect() }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut y = x;
        while self.parent[y] != r {
            let next = self.parent[y];
            self.parent[y] = r;
            y = next;
        }
        r
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Braid closure of `S'_2n · D1`, whose smoothing is the plat closure of `D1`.
///
/// Layers from the bottom: singular vertices on `(2i-1, 2i)` for `i >= 2`,
/// then on `(2i, 2i+1)` for `i < n`, then on `(2i-1, 2i)` for all `i`, then
/// the letters of `D1`.
pub fn augment_s2n(plat: &DecoratedDiagram) -> Result<DecoratedDiagram, DiagramError> {
    let strands = plat.strands;
    if strands % 2 == 1 {
        return Err(DiagramError::OddStrands(strands));
    }
    let n = strands / 2;
    let mut letters = Vec::new();
    for i in 2..=n {
        letters.push(Letter::Singular { i: 2 * i - 1 });
    }
    for i in 1..n {
        letters.push(Letter::Singular { i: 2 * i });
    }
    for i in 1..=n {
        letters.push(Letter::Singular { i: 2 * i - 1 });
    }
    letters.extend(plat.letters.iter().copied());
    DecoratedDiagram::new(strands, letters, Closure::Braid)
}

/// Trace the link through a diagram (crossings straight, singular vertices
/// smoothed). Returns, per edge, its component and whether it is traversed
/// from `ends[0]` to `ends[1]`.
pub fn orient_components(d: &DecoratedDiagram) -> (Vec<usize>, Vec<bool>) {
    let m = d.edge_count();
    let mut comp = vec![usize::MAX; m];
    let mut forward = vec![true; m];
    let mut ncomp = 0;
    for start in 0..m {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut e = start;
        let mut fwd = true;
        loop {
            comp[e] = ncomp;
            forward[e] = fwd;
            let arrive = d.edges[e].ends[if fwd { 1 } else { 0 }];
            let out_port = d.pass_through(arrive.vertex, arrive.port);
            let next = d.vertices[arrive.vertex].ports[out_port] - 1;
            let ne = &d.edges[next];
            let leave = End { vertex: arrive.vertex, port: out_port };
            // the next edge is left from `leave`; direction is forward if it starts there
            let nfwd = ne.ends[0] == leave;
            if comp[next] != usize::MAX {
                break;
            }
            e = next;
            fwd = nfwd;
        }
        ncomp += 1;
    }
    (comp, forward)
}

/// Number of components of the closed diagram (with singular vertices smoothed).
pub fn component_count(d: &DecoratedDiagram) -> usize {
    let (comp, _) = orient_components(d);
    comp.iter().copied().max().map_or(0, |c| c + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn braid(w: &str, s: usize) -> DecoratedDiagram {
        DecoratedDiagram::parse_braid(w, s, Closure::Braid).unwrap()
    }

    /// Every edge id appears exactly once as an out port and once as an in port.
    fn check_chaining(d: &DecoratedDiagram) {
        let m = d.edge_count();
        let mut outs = vec![0; m + 1];
        let mut ins = vec![0; m + 1];
        for v in d.vertices() {
            let (o, i): (&[usize], &[usize]) =
                if v.is_four_valent() { (&v.ports[0..2], &v.ports[2..4]) } else { (&v.ports[0..1], &v.ports[1..2]) };
            o.iter().for_each(|&e| outs[e] += 1);
            i.iter().for_each(|&e| ins[e] += 1);
        }
        for e in 1..=m {
            assert_eq!((outs[e], ins[e]), (1, 1), "edge {e} in {d}");
        }
    }

    #[test]
    fn trefoil_edge_count() {
        let d = braid("s1 s1 s1", 2);
        assert_eq!(d.crossing_count(), 3);
        assert_eq!(d.edge_count(), 8);
        assert!((0..3).all(|k| d.crossing_sign(k)));
        check_chaining(&d);
        assert_eq!(d.edge(1).strand, 1);
        assert_eq!(d.edge(2).strand, 1);
    }

    #[test]
    fn unknot_edges() {
        let d = braid("", 1);
        assert_eq!(d.crossing_count(), 0);
        assert_eq!(d.edge_count(), 2);
        assert_eq!(d.bivalent_count(), 2);
        check_chaining(&d);
    }

    #[test]
    fn torus_word() {
        let d = braid(&"s1 s2 s3 ".repeat(5), 4);
        assert_eq!(d.crossing_count(), 15);
        assert!(d.mirror().letters().iter().all(|l| matches!(l, Letter::Crossing { positive: false, .. })));
        check_chaining(&d);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            DecoratedDiagram::parse_braid("s0", 2, Closure::Braid),
            Err(DiagramError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            DecoratedDiagram::parse_braid("s2", 2, Closure::Braid),
            Err(DiagramError::IndexOutOfRange { .. })
        ));
        assert!(DecoratedDiagram::parse_braid("b2", 2, Closure::Braid).is_ok());
        assert!(matches!(DecoratedDiagram::parse_braid("q1", 2, Closure::Braid), Err(DiagramError::MalformedToken(_))));
        assert!(matches!(
            DecoratedDiagram::parse_braid("x1^-1", 2, Closure::Braid),
            Err(DiagramError::MalformedToken(_))
        ));
        let d = DecoratedDiagram::parse_braid("σ1 σ1⁻¹ s1^-1", 2, Closure::Braid).unwrap();
        assert_eq!(d.word(), "s1 s1^-1 s1^-1");
        assert!(matches!(DecoratedDiagram::parse_braid("", 3, Closure::Plat), Err(DiagramError::OddStrands(3))));
    }

    #[test]
    fn json_round_trip() {
        let d = braid("s1 x2 b3 s2^-1", 3);
        let back = DecoratedDiagram::from_json(&d.to_json()).unwrap();
        assert_eq!(d, back);
    }

    #[test]
    fn mirror_involution() {
        let d = braid("s1 s2^-1 x1", 3);
        assert_eq!(d.mirror().mirror(), d);
    }

    #[test]
    fn resolutions_of_trefoil() {
        let d = braid("s1 s1 s1", 2);
        let g0 = d.resolve(&Resolution::zeros(3)).unwrap();
        assert_eq!(g0.four_valent_from_resolution().len(), 3);
        let g1 = d.resolve(&Resolution::ones(3)).unwrap();
        assert!(g1.four_valent_from_resolution().is_empty());
        assert_eq!(g1.smooth().circle_count(), 2);
        // horizontal smoothing at every crossing of a 2-strand closure
        assert_eq!(g0.smooth().circle_count(), 3);
    }

    #[test]
    fn single_singular_vertex() {
        let d = braid("x1", 2);
        let g = d.resolve(&Resolution::zeros(0)).unwrap();
        assert_eq!(g.smooth().circle_count(), 1);
        assert!(g.is_connected());
    }

    #[test]
    fn connectivity() {
        let empty2 = braid("", 2);
        assert!(!empty2.resolve(&Resolution::zeros(0)).unwrap().is_connected());
        assert!(braid("", 1).resolve(&Resolution::zeros(0)).unwrap().is_connected());
        let plain = braid("s1 s1 s1", 2);
        let g = plain.resolve(&Resolution::zeros(3)).unwrap();
        assert_eq!(g.smooth().circle_count(), g.smooth().circles.len());
    }

    #[test]
    fn augmented_trefoil_shape() {
        let plat = DecoratedDiagram::parse_braid("s2 s2 s2", 4, Closure::Plat).unwrap();
        let d = augment_s2n(&plat).unwrap();
        assert_eq!(d.singular_vertices().len(), 4);
        assert_eq!(d.crossing_count(), 3);
        assert_eq!(d.edge_count(), 16);
        assert!(d.contains_s2n());
        assert!(!braid("s1 s1 s1", 2).contains_s2n());
        check_chaining(&d);
        for r in Resolution::all(3) {
            let g = d.resolve(&r).unwrap();
            assert_eq!(g.four_valent_from_diagram().len(), 4);
            assert!(g.is_connected());
        }
    }

    #[test]
    fn s2n_counts() {
        let d = augment_s2n(&DecoratedDiagram::parse_braid("", 8, Closure::Plat).unwrap()).unwrap();
        assert_eq!(d.singular_vertices().len(), 4 + 3 + 3);
        assert!(d.contains_s2n());
        let s2 = augment_s2n(&DecoratedDiagram::parse_braid("", 2, Closure::Plat).unwrap()).unwrap();
        assert_eq!(s2.singular_vertices().len(), 1);
        let g = s2.resolve(&Resolution::zeros(0)).unwrap();
        assert_eq!(g.smooth().circle_count(), 1);
        assert!(braid("x2 x1 x3", 4).contains_s2n());
        assert!(!braid("x1 x3 x2", 4).contains_s2n());
        assert!(matches!(augment_s2n(&braid("", 3)), Err(DiagramError::OddStrands(3))));
    }

    #[test]
    fn plat_closure_components() {
        let plat = DecoratedDiagram::parse_braid("s2 s2 s2", 4, Closure::Plat).unwrap();
        assert_eq!(component_count(&plat), 1);
        let hopf = DecoratedDiagram::parse_braid("s2 s2", 4, Closure::Plat).unwrap();
        assert_eq!(component_count(&hopf), 2);
        let unlink = DecoratedDiagram::parse_braid("", 4, Closure::Plat).unwrap();
        assert_eq!(component_count(&unlink), 2);
        assert_eq!(component_count(&braid(&"s1 s2 s3 ".repeat(5), 4)), 1);
        assert_eq!(component_count(&braid("s1 s1", 2)), 2);
    }

    #[test]
    fn edge_sign_parity() {
        assert!(!Resolution::new(0b01, 2).edge_sign_parity(0));
        assert!(Resolution::new(0b01, 2).edge_sign_parity(1));
    }
}
