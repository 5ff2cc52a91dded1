//! Directed graphs, 4-neighbor grid maps, and vertex heuristics.
//!
//! Waiting is never stored as an edge: [`Graph::neighbors`] adds the vertex
//! itself to the returned neighborhood.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::INF;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for VertexId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// Which way a neighborhood is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `{v' | (v, v') in E} ∪ {v}`
    Forward,
    /// `{v' | (v', v) in E} ∪ {v}`
    Backward,
}

#[derive(Debug, Clone)]
struct GridIndex {
    width: u32,
    height: u32,
    /// cell `y * width + x` -> vertex, `u32::MAX` for blocked cells
    cell_to_vertex: Vec<u32>,
    coords: Vec<(u32, u32)>,
}

#[derive(Debug, Clone)]
pub struct Graph {
    fwd: Vec<Vec<VertexId>>,
    rev: Vec<Vec<VertexId>>,
    grid: Option<GridIndex>,
}

impl Graph {
    /// Builds a graph with `n` vertices from directed edges.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Graph> {
        let mut fwd = vec![Vec::new(); n];
        let mut rev = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u as usize >= n {
                return Err(Error::InvalidVertex(u));
            }
            if v as usize >= n {
                return Err(Error::InvalidVertex(v));
            }
            if u == v {
                return Err(Error::Usage(format!("self-loop on v{u}: waiting is implicit")));
            }
            if !fwd[u as usize].contains(&VertexId(v)) {
                fwd[u as usize].push(VertexId(v));
                rev[v as usize].push(VertexId(u));
            }
        }
        for list in fwd.iter_mut().chain(rev.iter_mut()) {
            list.sort_unstable();
        }
        Ok(Graph {
            fwd,
            rev,
            grid: None,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.fwd.len()
    }

    pub fn num_edges(&self) -> usize {
        self.fwd.iter().map(Vec::len).sum()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.fwd.len() as u32).map(VertexId)
    }

    pub fn check(&self, v: VertexId) -> Result<()> {
        if v.index() < self.fwd.len() {
            Ok(())
        } else {
            Err(Error::InvalidVertex(v.0))
        }
    }

    /// Out-neighbors of `v`, without `v` itself.
    #[inline]
    pub fn successors(&self, v: VertexId) -> &[VertexId] {
        &self.fwd[v.index()]
    }

    /// In-neighbors of `v`, without `v` itself.
    #[inline]
    pub fn predecessors(&self, v: VertexId) -> &[VertexId] {
        &self.rev[v.index()]
    }

    #[inline]
    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.fwd[u.index()].binary_search(&v).is_ok()
    }

    /// Neighborhood of `v` including the wait action, sorted by id.
    pub fn neighbors(&self, v: VertexId, dir: Direction) -> Result<Vec<VertexId>> {
        self.check(v)?;
        let adj = match dir {
            Direction::Forward => &self.fwd[v.index()],
            Direction::Backward => &self.rev[v.index()],
        };
        let mut out = Vec::with_capacity(adj.len() + 1);
        out.extend_from_slice(adj);
        out.push(v);
        out.sort_unstable();
        Ok(out)
    }

    pub fn is_grid(&self) -> bool {
        self.grid.is_some()
    }

    pub fn grid_dims(&self) -> Option<(u32, u32)> {
        self.grid.as_ref().map(|g| (g.width, g.height))
    }

    /// Grid coordinates of `v`, if the graph came from a grid map.
    #[inline]
    pub fn coords(&self, v: VertexId) -> Option<(u32, u32)> {
        self.grid.as_ref().map(|g| g.coords[v.index()])
    }

    /// Vertex at free cell `(x, y)`.
    pub fn vertex_at(&self, x: u32, y: u32) -> Option<VertexId> {
        let g = self.grid.as_ref()?;
        if x >= g.width || y >= g.height {
            return None;
        }
        let id = g.cell_to_vertex[(y * g.width + x) as usize];
        (id != u32::MAX).then_some(VertexId(id))
    }

    /// Manhattan distance between two grid vertices.
    ///
    /// Panics on a graph without grid coordinates; callers pick the
    /// heuristic through [`HeuristicKind::validate`] first.
    #[inline]
    pub fn manhattan_h(&self, v: VertexId, target: VertexId) -> u32 {
        let g = self.grid.as_ref().expect("manhattan_h on a graph without coordinates");
        let (vx, vy) = g.coords[v.index()];
        let (tx, ty) = g.coords[target.index()];
        vx.abs_diff(tx) + vy.abs_diff(ty)
    }

    /// Unconstrained distance from every vertex to `target` (reverse BFS).
    /// Unreachable vertices get [`INF`].
    pub fn exact_h(&self, target: VertexId) -> Vec<u32> {
        self.bfs(target, &self.rev)
    }

    /// Unconstrained distance from `source` to every vertex (forward BFS).
    pub fn distances_from(&self, source: VertexId) -> Vec<u32> {
        self.bfs(source, &self.fwd)
    }

    fn bfs(&self, root: VertexId, adj: &[Vec<VertexId>]) -> Vec<u32> {
        let mut dist = vec![INF; adj.len()];
        let mut queue = VecDeque::new();
        dist[root.index()] = 0;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            let d = dist[u.index()] + 1;
            for &w in &adj[u.index()] {
                if dist[w.index()] == INF {
                    dist[w.index()] = d;
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}

/// Which vertex heuristic the searches use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeuristicKind {
    #[default]
    Manhattan,
    /// BFS distances on the unconstrained graph.
    Exact,
}

impl HeuristicKind {
    pub fn validate(self, graph: &Graph) -> Result<()> {
        match self {
            HeuristicKind::Manhattan if !graph.is_grid() => Err(Error::Usage(
                "manhattan heuristic needs a grid-backed graph".into(),
            )),
            _ => Ok(()),
        }
    }
}

impl std::str::FromStr for HeuristicKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "manhattan" => Ok(HeuristicKind::Manhattan),
            "exact" => Ok(HeuristicKind::Exact),
            other => Err(Error::Usage(format!("unknown heuristic '{other}'"))),
        }
    }
}

/// Vertex heuristic toward one fixed vertex.
#[derive(Debug, Clone)]
pub enum VertexHeuristic<'g> {
    Manhattan { graph: &'g Graph, target: VertexId },
    Table(std::sync::Arc<Vec<u32>>),
}

impl VertexHeuristic<'_> {
    #[inline]
    pub fn eval(&self, v: VertexId) -> u32 {
        match self {
            VertexHeuristic::Manhattan { graph, target } => graph.manhattan_h(v, *target),
            VertexHeuristic::Table(t) => t[v.index()],
        }
    }
}

/// Free/blocked cell grid; `(x, y)` with `x` the column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    pub width: u32,
    pub height: u32,
    blocked: Vec<bool>,
}

impl GridMap {
    pub fn open(width: u32, height: u32) -> GridMap {
        GridMap {
            width,
            height,
            blocked: vec![false; (width * height) as usize],
        }
    }

    pub fn from_rows(rows: &[&str]) -> Result<GridMap> {
        let height = rows.len() as u32;
        let width = rows.first().map_or(0, |r| r.chars().count()) as u32;
        let mut text = format!("height {height}\nwidth {width}\n");
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
        GridMap::parse(&text, "<rows>")
    }

    #[inline]
    pub fn is_blocked(&self, x: u32, y: u32) -> bool {
        self.blocked[(y * self.width + x) as usize]
    }

    pub fn set_blocked(&mut self, x: u32, y: u32, blocked: bool) {
        self.blocked[(y * self.width + x) as usize] = blocked;
    }

    pub fn free_cells(&self) -> usize {
        self.blocked.iter().filter(|b| !**b).count()
    }

    /// Parses the text map format: `height H`, `width W`, then `H` rows of
    /// `W` characters (`.` free, `@` blocked).
    pub fn parse(text: &str, file: &str) -> Result<GridMap> {
        let mut lines = text.lines().enumerate();
        let mut header = |key: &str| -> Result<u32> {
            let (i, line) = lines
                .next()
                .ok_or_else(|| Error::parse(file, 0, format!("missing '{key}' line")))?;
            let mut parts = line.split_whitespace();
            match (parts.next(), parts.next(), parts.next()) {
                (Some(k), Some(v), None) if k == key => v
                    .parse::<u32>()
                    .map_err(|_| Error::parse(file, i + 1, format!("bad {key} value '{v}'"))),
                _ => Err(Error::parse(file, i + 1, format!("expected '{key} <n>'"))),
            }
        };
        let height = header("height")?;
        let width = header("width")?;
        if width == 0 || height == 0 {
            return Err(Error::parse(file, 2, "empty map"));
        }
        let mut blocked = Vec::with_capacity((width * height) as usize);
        let mut rows = 0u32;
        for (i, line) in lines {
            let line = line.trim_end_matches('\r');
            if rows == height {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(Error::parse(file, i + 1, "more rows than declared height"));
            }
            let n = line.chars().count() as u32;
            if n != width {
                return Err(Error::parse(
                    file,
                    i + 1,
                    format!("ragged row: {n} characters, expected {width}"),
                ));
            }
            for c in line.chars() {
                match c {
                    '.' => blocked.push(false),
                    '@' => blocked.push(true),
                    other => {
                        return Err(Error::parse(
                            file,
                            i + 1,
                            format!("invalid map character '{other}'"),
                        ))
                    }
                }
            }
            rows += 1;
        }
        if rows != height {
            return Err(Error::parse(
                file,
                rows as usize + 3,
                format!("expected {height} rows, found {rows}"),
            ));
        }
        Ok(GridMap {
            width,
            height,
            blocked,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "height {}", self.height);
        let _ = writeln!(out, "width {}", self.width);
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(if self.is_blocked(x, y) { '@' } else { '.' });
            }
            out.push('\n');
        }
        out
    }

    /// Free cells become vertices in row-major order; each free cell links to
    /// its free 4-neighbors in both directions.
    pub fn to_graph(&self) -> Graph {
        let (w, h) = (self.width, self.height);
        let mut cell_to_vertex = vec![u32::MAX; (w * h) as usize];
        let mut coords = Vec::new();
        for y in 0..h {
            for x in 0..w {
                if !self.is_blocked(x, y) {
                    cell_to_vertex[(y * w + x) as usize] = coords.len() as u32;
                    coords.push((x, y));
                }
            }
        }
        let n = coords.len();
        let mut fwd = vec![Vec::with_capacity(4); n];
        for (v, &(x, y)) in coords.iter().enumerate() {
            let mut push = |nx: u32, ny: u32| {
                let id = cell_to_vertex[(ny * w + nx) as usize];
                if id != u32::MAX {
                    fwd[v].push(VertexId(id));
                }
            };
            if y > 0 {
                push(x, y - 1);
            }
            if x > 0 {
                push(x - 1, y);
            }
            if x + 1 < w {
                push(x + 1, y);
            }
            if y + 1 < h {
                push(x, y + 1);
            }
        }
        for list in fwd.iter_mut() {
            list.sort_unstable();
        }
        let rev = fwd.clone();
        Graph {
            fwd,
            rev,
            grid: Some(GridIndex {
                width: w,
                height: h,
                cell_to_vertex,
                coords,
            }),
        }
    }
}
