//! Time-varying bidirectional communication graph and its event schedule.
//!
//! The graph is piecewise constant: it only changes when a [`GraphEvent`]
//! fires, and every robot reads the same snapshot during a tick.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kinematics::RobotState;

/// Stable robot identifier. Removed IDs are never reused.
pub type RobotId = u32;

fn edge_key(a: RobotId, b: RobotId) -> (RobotId, RobotId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Undirected communication graph. Edges are stored as ordered pairs `(lo, hi)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CommGraph {
    vertices: BTreeSet<RobotId>,
    edges: BTreeSet<(RobotId, RobotId)>,
}

impl CommGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph from a vertex list and an edge list, rejecting self-loops,
    /// duplicate edges and dangling endpoints.
    pub fn from_parts(
        vertices: impl IntoIterator<Item = RobotId>,
        edges: impl IntoIterator<Item = (RobotId, RobotId)>,
    ) -> Result<Self> {
        let mut g = CommGraph::new();
        for v in vertices {
            g.add_vertex(v)?;
        }
        for (a, b) in edges {
            g.add_edge(a, b)?;
        }
        Ok(g)
    }

    pub fn add_vertex(&mut self, id: RobotId) -> Result<()> {
        if !self.vertices.insert(id) {
            return Err(Error::DuplicateRobot(id));
        }
        Ok(())
    }

    pub fn add_edge(&mut self, a: RobotId, b: RobotId) -> Result<()> {
        if a == b {
            return Err(Error::SelfLoop(a));
        }
        for v in [a, b] {
            if !self.vertices.contains(&v) {
                return Err(Error::UnknownRobot(v));
            }
        }
        if !self.edges.insert(edge_key(a, b)) {
            return Err(Error::DuplicateEdge(a, b));
        }
        Ok(())
    }

    /// Removes a vertex together with all of its incident edges.
    pub fn remove_vertex(&mut self, id: RobotId) -> Result<()> {
        if !self.vertices.remove(&id) {
            return Err(Error::UnknownRobot(id));
        }
        self.edges.retain(|&(a, b)| a != id && b != id);
        Ok(())
    }

    pub fn remove_edge(&mut self, a: RobotId, b: RobotId) -> Result<()> {
        if !self.edges.remove(&edge_key(a, b)) {
            return Err(Error::UnknownEdge(a, b));
        }
        Ok(())
    }

    pub fn contains(&self, id: RobotId) -> bool {
        self.vertices.contains(&id)
    }

    pub fn has_edge(&self, a: RobotId, b: RobotId) -> bool {
        self.edges.contains(&edge_key(a, b))
    }

    pub fn vertices(&self) -> impl Iterator<Item = RobotId> + '_ {
        self.vertices.iter().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (RobotId, RobotId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// The neighbor set `{ j : (i, j) ∈ E }` of robot `i`.
    pub fn neighbors(&self, i: RobotId) -> Result<BTreeSet<RobotId>> {
        if !self.vertices.contains(&i) {
            return Err(Error::UnknownRobot(i));
        }
        Ok(self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == i {
                    Some(b)
                } else if b == i {
                    Some(a)
                } else {
                    None
                }
            })
            .collect())
    }

    pub fn degree(&self, i: RobotId) -> Result<usize> {
        self.neighbors(i).map(|n| n.len())
    }

    /// Breadth-first reachability check from the smallest vertex.
    pub fn is_connected(&self) -> Result<bool> {
        let start = *self.vertices.iter().next().ok_or(Error::EmptyGraph)?;
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::new();
        seen.insert(start);
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            for (a, b) in self.edges.iter().copied() {
                let next = if a == v {
                    b
                } else if b == v {
                    a
                } else {
                    continue;
                };
                if seen.insert(next) {
                    queue.push_back(next);
                }
            }
        }
        Ok(seen.len() == self.vertices.len())
    }
}

/// What a scheduled event does to the swarm.
#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    RemoveRobot(RobotId),
    RemoveLink(RobotId, RobotId),
    /// A robot joining the swarm, with its initial state. Links are added by
    /// separate [`EventKind::AddLink`] events.
    AddRobot { id: RobotId, state: RobotState },
    AddLink(RobotId, RobotId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphEvent {
    pub time: f64,
    pub kind: EventKind,
}

impl GraphEvent {
    pub fn new(time: f64, kind: EventKind) -> Self {
        GraphEvent { time, kind }
    }
}

/// Result of applying one window of the event schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct EventOutcome {
    pub graph: CommGraph,
    /// Robots removed in this window; their simulation state becomes inactive.
    pub removed: Vec<RobotId>,
    /// Robots that joined in this window.
    pub added: Vec<(RobotId, RobotState)>,
    /// Number of events applied.
    pub applied: usize,
    /// Connectivity of the resulting graph. `false` is a violation of the
    /// connectivity assumption; it is reported, not treated as an error.
    pub connected: bool,
}

/// Applies every event with `t_prev < time <= t_now`, in schedule order.
///
/// `schedule` must be sorted by time. Events referencing missing robots or
/// links fail with [`Error::InvalidEvent`].
pub fn apply_events(
    g: &CommGraph,
    schedule: &[GraphEvent],
    t_prev: f64,
    t_now: f64,
) -> Result<EventOutcome> {
    let mut graph = g.clone();
    let mut removed = Vec::new();
    let mut added = Vec::new();
    let mut applied = 0;
    for (index, ev) in schedule.iter().enumerate() {
        if !(ev.time > t_prev && ev.time <= t_now) {
            continue;
        }
        let res = match &ev.kind {
            EventKind::RemoveRobot(id) => graph.remove_vertex(*id).map(|_| removed.push(*id)),
            EventKind::RemoveLink(a, b) => graph.remove_edge(*a, *b),
            EventKind::AddRobot { id, state } => {
                graph.add_vertex(*id).map(|_| added.push((*id, *state)))
            }
            EventKind::AddLink(a, b) => graph.add_edge(*a, *b),
        };
        res.map_err(|e| Error::InvalidEvent { index, time: ev.time, reason: format!("{e}") })?;
        applied += 1;
    }
    let connected = graph.vertex_count() > 0 && graph.is_connected()?;
    if applied > 0 && !connected {
        log::warn!("communication graph disconnected after events at t in ({t_prev}, {t_now}]");
    }
    Ok(EventOutcome { graph, removed, added, applied, connected })
}

/// The 9-robot, 12-link graph used in the reference winding-road scenario.
pub fn reference_grid_graph() -> CommGraph {
    const EDGES: [(RobotId, RobotId); 12] = [
        (1, 4),
        (1, 2),
        (2, 3),
        (3, 6),
        (4, 5),
        (7, 8),
        (5, 6),
        (6, 9),
        (9, 8),
        (2, 5),
        (4, 7),
        (8, 5),
    ];
    CommGraph::from_parts(1..=9, EDGES).expect("static edge list is valid")
}
