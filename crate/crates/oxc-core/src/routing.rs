//! Self-routing path resolution, wavelength occupancy, and the
//! nonblocking verification harness.
//!
//! Paths are a pure function of the endpoint addresses: the fabric never
//! searches. [`RoutingSession::resolve`] computes the prescribed hops and
//! checks them against the actual graph, so a deleted or rewired fiber
//! surfaces as [`Error::Unroutable`] rather than a silently different
//! route. Occupancy lives in the session, never in the topology; a
//! session is single-writer, while the fabric itself may be shared
//! freely.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::model::{Side, Wavelength};
use crate::topology::{
    EdgeId, EdgeKind, EndpointRef, FabricTopology, ModulePayload, NodeId, NodeRole, PortMap,
    Stage, WssLabel,
};

/// A unicast connection request: one input port, one output port, one
/// wavelength. The same wavelength is used end to end; there is no
/// conversion hardware to express anything else.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConnectionRequest {
    pub input: usize,
    pub output: usize,
    pub wavelength: Wavelength,
}

impl ConnectionRequest {
    pub fn new(input: usize, output: usize, wavelength: Wavelength) -> ConnectionRequest {
        ConnectionRequest { input, output, wavelength }
    }

    /// Builds a request from split addresses `(outer, inner)` on each
    /// side, flattening with the given inner factor. Components are not
    /// range-checked here; resolution validates the flat indices.
    pub fn from_split(
        input: (usize, usize),
        output: (usize, usize),
        wavelength: Wavelength,
        inner: usize,
    ) -> ConnectionRequest {
        ConnectionRequest {
            input: input.0 * inner + input.1,
            output: output.0 * inner + output.1,
            wavelength,
        }
    }
}

/// A node on a routed path: either in the fabric graph itself or inside
/// an unsealed module.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PathNode {
    Fabric(NodeId),
    Module { module: NodeId, inner: NodeId },
}

impl std::fmt::Display for PathNode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PathNode::Fabric(node) => write!(f, "{node}"),
            PathNode::Module { module, inner } => write!(f, "{module} / {inner}"),
        }
    }
}

/// One port event along a path: the path crosses `port` on the given
/// face of `node`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PathHop {
    pub node: PathNode,
    pub port: usize,
    pub side: Side,
}

/// A fiber on a routed path, either in the fabric graph or inside an
/// unsealed module.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeRef {
    Fabric(EdgeId),
    Module { module: NodeId, edge: EdgeId },
}

impl std::fmt::Display for EdgeRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EdgeRef::Fabric(edge) => write!(f, "{edge}"),
            EdgeRef::Module { module, edge } => write!(f, "{edge} inside {module}"),
        }
    }
}

/// The resolved route of one connection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoutedPath {
    pub wavelength: Wavelength,
    /// Port events in traversal order, starting at an external input and
    /// ending at an external output.
    pub hops: Vec<PathHop>,
    /// Fibers in traversal order, pigtails included.
    pub edges: Vec<EdgeRef>,
}

impl RoutedPath {
    pub fn stage_fiber_count(&self, fabric: &FabricTopology) -> usize {
        self.edges
            .iter()
            .filter(|edge| match edge {
                EdgeRef::Fabric(id) => {
                    fabric.edge(*id).map(|e| e.kind == EdgeKind::Stage).unwrap_or(false)
                }
                EdgeRef::Module { .. } => false,
            })
            .count()
    }
}

/// Handle of an established connection within one session.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConnectionId(u64);

impl std::fmt::Display for ConnectionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "c{}", self.0)
    }
}

/// A connection currently in service.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActiveConnection {
    pub request: ConnectionRequest,
    pub path: RoutedPath,
    /// Every fiber this connection lights at its wavelength. For coupler
    /// inputs this is a superset of the path: the broadcast copies on the
    /// sibling outputs are claimed too.
    pub claims: Vec<EdgeRef>,
    switch_keys: Vec<(NodeId, usize, usize)>,
}

/// Per-fiber, per-wavelength occupancy ledger plus the switch settings
/// that carry the active connections.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WavelengthState {
    occupancy: BTreeMap<(EdgeRef, Wavelength), ConnectionId>,
    active: BTreeMap<ConnectionId, ActiveConnection>,
    switches: BTreeMap<(NodeId, Wavelength), BTreeMap<usize, usize>>,
}

impl WavelengthState {
    pub fn is_empty(&self) -> bool {
        self.occupancy.is_empty() && self.active.is_empty() && self.switches.is_empty()
    }

    pub fn occupant(&self, edge: EdgeRef, wavelength: Wavelength) -> Option<ConnectionId> {
        self.occupancy.get(&(edge, wavelength)).copied()
    }

    pub fn occupancy(&self) -> &BTreeMap<(EdgeRef, Wavelength), ConnectionId> {
        &self.occupancy
    }

    pub fn active(&self) -> &BTreeMap<ConnectionId, ActiveConnection> {
        &self.active
    }

    /// Input-to-output assignment of one switching node at one
    /// wavelength, if any connection is configured through it.
    pub fn switch_assignment(
        &self,
        node: NodeId,
        wavelength: Wavelength,
    ) -> Option<&BTreeMap<usize, usize>> {
        self.switches.get(&(node, wavelength))
    }
}

struct Prepared {
    path: RoutedPath,
    claims: Vec<EdgeRef>,
    switch_ops: Vec<(NodeId, usize, usize)>,
}

/// Routing context over one fabric: edge lookup tables plus the mutable
/// wavelength state. Single writer; any number of concurrent readers may
/// share the underlying topology.
pub struct RoutingSession<'a> {
    fabric: &'a FabricTopology,
    ports: PortMap,
    module_ports: HashMap<NodeId, PortMap>,
    state: WavelengthState,
    next_id: u64,
}

impl<'a> RoutingSession<'a> {
    pub fn new(fabric: &'a FabricTopology) -> RoutingSession<'a> {
        let ports = PortMap::build(fabric);
        let mut module_ports = HashMap::new();
        for node in fabric.nodes() {
            if let NodeRole::OxcModule(ModulePayload::Unsealed(inner)) = &node.role {
                module_ports.insert(node.id, PortMap::build(inner));
            }
        }
        RoutingSession {
            fabric,
            ports,
            module_ports,
            state: WavelengthState::default(),
            next_id: 0,
        }
    }

    pub fn fabric(&self) -> &FabricTopology {
        self.fabric
    }

    pub fn state(&self) -> &WavelengthState {
        &self.state
    }

    pub fn connection(&self, id: ConnectionId) -> Option<&ActiveConnection> {
        self.state.active.get(&id)
    }

    /// Drops all connections. Connection ids are not reused.
    pub fn reset(&mut self) {
        self.state = WavelengthState::default();
    }

    /// Computes the self-routed path of a request without touching
    /// occupancy. Deterministic: the same request always yields the same
    /// path.
    pub fn resolve(&self, request: &ConnectionRequest) -> Result<RoutedPath> {
        let params = self.fabric.params();
        check_range("input port", request.input, params.ports())?;
        check_range("output port", request.output, params.ports())?;
        check_range(
            "wavelength index",
            request.wavelength.index(),
            params.wavelengths(),
        )?;

        let mut walk = Walk::new(request.wavelength);
        let source = NodeId::ExternalPort { side: Side::Input, index: request.input };
        let sink = NodeId::ExternalPort { side: Side::Output, index: request.output };

        match self.fabric.stage() {
            Stage::Classical => {
                let input_switch = NodeId::InputWss(WssLabel::Flat(request.input));
                let output_switch = NodeId::OutputWss(WssLabel::Flat(request.output));
                self.cross(&mut walk, source, 0, input_switch, 0)?;
                self.cross(&mut walk, input_switch, request.output, output_switch, request.input)?;
                self.cross(&mut walk, output_switch, 0, sink, 0)?;
            }
            Stage::IntermediatePrime => {
                let (in_hi, in_lo) = params.split_address(request.input)?;
                let (out_hi, out_lo) = params.split_address(request.output)?;
                let input_switch = NodeId::InputWss(WssLabel::Split { outer: in_hi, inner: in_lo });
                let output_switch =
                    NodeId::OutputWss(WssLabel::Split { outer: out_hi, inner: out_lo });
                self.cross(&mut walk, source, 0, input_switch, 0)?;
                self.cross(&mut walk, input_switch, request.output, output_switch, request.input)?;
                self.cross(&mut walk, output_switch, 0, sink, 0)?;
            }
            Stage::IntermediateDoublePrime => {
                let (in_hi, in_lo) = params.split_address(request.input)?;
                let (out_hi, out_lo) = params.split_address(request.output)?;
                let input_switch = NodeId::InputWss(WssLabel::Split { outer: in_hi, inner: in_lo });
                let input_cascade = NodeId::InputWss(WssLabel::Cascade {
                    outer: in_hi,
                    inner: in_lo,
                    branch: out_hi,
                });
                let output_cascade = NodeId::OutputWss(WssLabel::Cascade {
                    outer: out_hi,
                    inner: out_lo,
                    branch: in_hi,
                });
                let output_switch =
                    NodeId::OutputWss(WssLabel::Split { outer: out_hi, inner: out_lo });
                self.cross(&mut walk, source, 0, input_switch, 0)?;
                self.cross(&mut walk, input_switch, out_hi, input_cascade, 0)?;
                self.cross(&mut walk, input_cascade, out_lo, output_cascade, in_lo)?;
                self.cross(&mut walk, output_cascade, 0, output_switch, in_hi)?;
                self.cross(&mut walk, output_switch, 0, sink, 0)?;
            }
            Stage::Modular => {
                let (in_hi, in_lo) = params.split_address(request.input)?;
                let (out_hi, out_lo) = params.split_address(request.output)?;
                let input_switch = NodeId::InputWss(WssLabel::Split { outer: in_hi, inner: in_lo });
                let module = NodeId::OxcModule { in_block: in_hi, out_block: out_hi };
                let output_switch =
                    NodeId::OutputWss(WssLabel::Split { outer: out_hi, inner: out_lo });
                self.cross(&mut walk, source, 0, input_switch, 0)?;
                self.cross(&mut walk, input_switch, out_hi, module, in_lo)?;
                self.traverse_module(&mut walk, module, in_lo, out_lo)?;
                self.cross(&mut walk, module, out_lo, output_switch, in_hi)?;
                self.cross(&mut walk, output_switch, 0, sink, 0)?;
            }
        }
        Ok(walk.finish())
    }

    /// Follows the unique fiber leaving `from` at `from_port`, insisting
    /// it lands at the prescribed endpoint.
    fn cross(
        &self,
        walk: &mut Walk,
        from: NodeId,
        from_port: usize,
        to: NodeId,
        to_port: usize,
    ) -> Result<()> {
        let edge_id = self.ports.unique_out(from, from_port).ok_or(Error::Unroutable {
            node: from.to_string(),
            port: from_port,
            reason: "no single fiber attached to this output",
        })?;
        let edge = self.fabric.edge(edge_id).expect("port map indexes existing edges");
        if edge.to != EndpointRef::new(to, to_port) {
            return Err(Error::Unroutable {
                node: from.to_string(),
                port: from_port,
                reason: "fiber does not lead to the self-routed endpoint",
            });
        }
        walk.hops.push(PathHop { node: PathNode::Fabric(from), port: from_port, side: Side::Output });
        walk.edges.push(EdgeRef::Fabric(edge_id));
        walk.hops.push(PathHop { node: PathNode::Fabric(to), port: to_port, side: Side::Input });
        Ok(())
    }

    /// Walks through a module from its `entry`-th input to its `exit`-th
    /// output. Sealed modules contribute no inner hops; unsealed ones are
    /// traversed through their embedded fabric.
    fn traverse_module(&self, walk: &mut Walk, module: NodeId, entry: usize, exit: usize) -> Result<()> {
        let node = self.fabric.node(&module).ok_or(Error::Unroutable {
            node: module.to_string(),
            port: entry,
            reason: "module missing from the topology",
        })?;
        let NodeRole::OxcModule(payload) = &node.role else {
            return Err(Error::Unroutable {
                node: module.to_string(),
                port: entry,
                reason: "node is not a module",
            });
        };
        let inner = match payload {
            ModulePayload::Sealed { .. } => return Ok(()),
            ModulePayload::Unsealed(inner) => inner,
        };
        let inner_ports = self
            .module_ports
            .get(&module)
            .expect("unsealed modules are indexed at session start");

        let source = NodeId::ExternalPort { side: Side::Input, index: entry };
        let sink = NodeId::ExternalPort { side: Side::Output, index: exit };
        let input_switch = NodeId::InputWss(WssLabel::Flat(entry));
        let output_switch = NodeId::OutputWss(WssLabel::Flat(exit));
        let legs = [
            (source, 0, input_switch, 0),
            (input_switch, exit, output_switch, entry),
            (output_switch, 0, sink, 0),
        ];
        for (from, from_port, to, to_port) in legs {
            let edge_id = inner_ports.unique_out(from, from_port).ok_or(Error::Unroutable {
                node: format!("{module} / {from}"),
                port: from_port,
                reason: "no single fiber attached to this output",
            })?;
            let edge = inner.edge(edge_id).expect("port map indexes existing edges");
            if edge.to != EndpointRef::new(to, to_port) {
                return Err(Error::Unroutable {
                    node: format!("{module} / {from}"),
                    port: from_port,
                    reason: "fiber does not lead to the self-routed endpoint",
                });
            }
            walk.hops.push(PathHop {
                node: PathNode::Module { module, inner: from },
                port: from_port,
                side: Side::Output,
            });
            walk.edges.push(EdgeRef::Module { module, edge: edge_id });
            walk.hops.push(PathHop {
                node: PathNode::Module { module, inner: to },
                port: to_port,
                side: Side::Input,
            });
        }
        Ok(())
    }

    fn prepare(&self, request: &ConnectionRequest) -> Result<Prepared> {
        let path = self.resolve(request)?;
        let wavelength = request.wavelength;

        // Endpoint availability first: a busy endpoint is a request
        // error, not a fabric failure.
        let first = *path.edges.first().expect("paths have at least three edges");
        let last = *path.edges.last().expect("paths have at least three edges");
        if self.state.occupancy.contains_key(&(first, wavelength)) {
            return Err(Error::WavelengthBusyAtEndpoint {
                side: Side::Input,
                index: request.input,
                wavelength,
            });
        }
        if self.state.occupancy.contains_key(&(last, wavelength)) {
            return Err(Error::WavelengthBusyAtEndpoint {
                side: Side::Output,
                index: request.output,
                wavelength,
            });
        }

        let claims = self.claims_for(&path);
        for claim in &claims {
            if *claim == first || *claim == last {
                continue;
            }
            if self.state.occupancy.contains_key(&(*claim, wavelength)) {
                return Err(Error::InternalContention { edge: *claim, wavelength });
            }
        }

        // Switch settings implied by the path, fabric-level nodes only.
        let mut switch_ops = Vec::new();
        let mut pending_entry: HashMap<NodeId, usize> = HashMap::new();
        for hop in &path.hops {
            let PathNode::Fabric(node_id) = hop.node else { continue };
            match hop.side {
                Side::Input => {
                    pending_entry.insert(node_id, hop.port);
                }
                Side::Output => {
                    if let Some(entry) = pending_entry.remove(&node_id) {
                        let switched = matches!(
                            self.fabric.node(&node_id).map(|n| &n.role),
                            Some(NodeRole::Wss) | Some(NodeRole::OxcModule(_))
                        );
                        if switched {
                            switch_ops.push((node_id, entry, hop.port));
                        }
                    }
                }
            }
        }
        Ok(Prepared { path, claims, switch_ops })
    }

    /// Whether a setup of this request would currently succeed.
    pub fn check_setup(&self, request: &ConnectionRequest) -> Result<()> {
        self.prepare(request).map(|_| ())
    }

    /// Establishes a connection: marks every claimed fiber at the
    /// request's wavelength and configures the switches along the path.
    pub fn setup(&mut self, request: &ConnectionRequest) -> Result<ConnectionId> {
        let prepared = self.prepare(request)?;
        let id = ConnectionId(self.next_id);
        self.next_id += 1;
        for claim in &prepared.claims {
            self.state.occupancy.insert((*claim, request.wavelength), id);
        }
        for (node, entry, exit) in &prepared.switch_ops {
            let assignment = self
                .state
                .switches
                .entry((*node, request.wavelength))
                .or_default();
            debug_assert!(
                assignment.get(entry).map(|current| current == exit).unwrap_or(true),
                "switch already set differently despite free fibers"
            );
            assignment.insert(*entry, *exit);
        }
        self.state.active.insert(
            id,
            ActiveConnection {
                request: *request,
                path: prepared.path,
                claims: prepared.claims,
                switch_keys: prepared.switch_ops,
            },
        );
        Ok(id)
    }

    /// Releases a connection and frees every fiber it claimed.
    pub fn teardown(&mut self, id: ConnectionId) -> Result<RoutedPath> {
        let connection = self.state.active.remove(&id).ok_or(Error::UnknownConnection(id))?;
        let wavelength = connection.request.wavelength;
        for claim in &connection.claims {
            self.state.occupancy.remove(&(*claim, wavelength));
        }
        for (node, entry, _) in &connection.switch_keys {
            if let Some(assignment) = self.state.switches.get_mut(&(*node, wavelength)) {
                assignment.remove(entry);
                if assignment.is_empty() {
                    self.state.switches.remove(&(*node, wavelength));
                }
            }
        }
        Ok(connection.path)
    }

    fn claims_for(&self, path: &RoutedPath) -> Vec<EdgeRef> {
        let mut claims = path.edges.clone();
        for hop in &path.hops {
            let PathNode::Fabric(node_id) = hop.node else { continue };
            if hop.side != Side::Output {
                continue;
            }
            let Some(node) = self.fabric.node(&node_id) else { continue };
            if node.role != NodeRole::Coupler {
                continue;
            }
            // Broadcast: the coupler lights the sibling outputs too.
            for port in 0..node.fan_out {
                if port == hop.port {
                    continue;
                }
                if let Some(edge) = self.ports.unique_out(node_id, port) {
                    claims.push(EdgeRef::Fabric(edge));
                }
            }
        }
        claims
    }
}

struct Walk {
    wavelength: Wavelength,
    hops: Vec<PathHop>,
    edges: Vec<EdgeRef>,
}

impl Walk {
    fn new(wavelength: Wavelength) -> Walk {
        Walk { wavelength, hops: Vec::new(), edges: Vec::new() }
    }

    fn finish(self) -> RoutedPath {
        RoutedPath { wavelength: self.wavelength, hops: self.hops, edges: self.edges }
    }
}

fn check_range(what: &'static str, value: usize, bound: usize) -> Result<()> {
    if value >= bound {
        return Err(Error::OutOfRange { what, value, bound });
    }
    Ok(())
}

/// One-shot path resolution without a session.
pub fn resolve_path(fabric: &FabricTopology, request: &ConnectionRequest) -> Result<RoutedPath> {
    RoutingSession::new(fabric).resolve(request)
}

/// Structural path enumeration from one external input: every route the
/// graph admits, keyed by the external output it reaches.
///
/// This deliberately ignores self-routing and walks the raw graph
/// (branching over every output port, descending into unsealed modules),
/// so it serves as an independent oracle for the resolver: a well-formed
/// fabric admits exactly one route per (input, output) pair.
pub fn enumerate_paths(
    fabric: &FabricTopology,
    input: usize,
) -> Result<BTreeMap<usize, Vec<Vec<EdgeRef>>>> {
    check_range("input port", input, fabric.params().ports())?;
    let ports = PortMap::build(fabric);
    let mut module_ports = HashMap::new();
    for node in fabric.nodes() {
        if let NodeRole::OxcModule(ModulePayload::Unsealed(inner)) = &node.role {
            module_ports.insert(node.id, PortMap::build(inner));
        }
    }
    let mut found: BTreeMap<usize, Vec<Vec<EdgeRef>>> = BTreeMap::new();
    let mut trail = Vec::new();
    let limit = fabric.nodes().len() + 2;
    walk_paths(
        fabric,
        &ports,
        &module_ports,
        NodeId::ExternalPort { side: Side::Input, index: input },
        &mut trail,
        &mut found,
        limit,
    );
    Ok(found)
}

fn walk_paths(
    fabric: &FabricTopology,
    ports: &PortMap,
    module_ports: &HashMap<NodeId, PortMap>,
    at: NodeId,
    trail: &mut Vec<EdgeRef>,
    found: &mut BTreeMap<usize, Vec<Vec<EdgeRef>>>,
    limit: usize,
) {
    if trail.len() > limit {
        return; // damaged graphs may loop; a simple path never gets this long
    }
    if let NodeId::ExternalPort { side: Side::Output, index } = at {
        found.entry(index).or_default().push(trail.clone());
        return;
    }
    let Some(node) = fabric.node(&at) else { return };
    for port in 0..node.fan_out {
        for edge_id in ports.outgoing(at, port) {
            let edge = fabric.edge(*edge_id).expect("indexed edge exists");
            trail.push(EdgeRef::Fabric(*edge_id));
            let next = edge.to.node;
            if let Some(NodeRole::OxcModule(ModulePayload::Unsealed(inner))) =
                fabric.node(&next).map(|n| &n.role)
            {
                let inner_ports = &module_ports[&next];
                for exit in walk_module(inner, inner_ports, next, edge.to.port, limit) {
                    let (exit_port, mut inner_trail) = exit;
                    let depth = trail.len();
                    trail.append(&mut inner_trail);
                    for onward in ports.outgoing(next, exit_port) {
                        let onward_edge = fabric.edge(*onward).expect("indexed edge exists");
                        trail.push(EdgeRef::Fabric(*onward));
                        walk_paths(fabric, ports, module_ports, onward_edge.to.node, trail, found, limit);
                        trail.pop();
                    }
                    trail.truncate(depth);
                }
            } else if let Some(NodeRole::OxcModule(ModulePayload::Sealed { .. })) =
                fabric.node(&next).map(|n| &n.role)
            {
                let module_node = fabric.node(&next).expect("checked");
                for exit_port in 0..module_node.fan_out {
                    for onward in ports.outgoing(next, exit_port) {
                        let onward_edge = fabric.edge(*onward).expect("indexed edge exists");
                        trail.push(EdgeRef::Fabric(*onward));
                        walk_paths(fabric, ports, module_ports, onward_edge.to.node, trail, found, limit);
                        trail.pop();
                    }
                }
            } else {
                walk_paths(fabric, ports, module_ports, next, trail, found, limit);
            }
            trail.pop();
        }
    }
}

/// All ways through an unsealed module entered at `entry`: returns the
/// module exit port and the inner fibers crossed for each.
fn walk_module(
    inner: &FabricTopology,
    inner_ports: &PortMap,
    module: NodeId,
    entry: usize,
    limit: usize,
) -> Vec<(usize, Vec<EdgeRef>)> {
    let mut results = Vec::new();
    let mut inner_found: BTreeMap<usize, Vec<Vec<EdgeRef>>> = BTreeMap::new();
    let mut inner_trail = Vec::new();
    let mut inner_modules = HashMap::new();
    for node in inner.nodes() {
        if let NodeRole::OxcModule(ModulePayload::Unsealed(nested)) = &node.role {
            inner_modules.insert(node.id, PortMap::build(nested));
        }
    }
    walk_paths(
        inner,
        inner_ports,
        &inner_modules,
        NodeId::ExternalPort { side: Side::Input, index: entry },
        &mut inner_trail,
        &mut inner_found,
        limit,
    );
    for (exit_port, routes) in inner_found {
        for route in routes {
            results.push((
                exit_port,
                route
                    .into_iter()
                    .map(|edge| match edge {
                        EdgeRef::Fabric(id) => EdgeRef::Module { module, edge: id },
                        nested @ EdgeRef::Module { .. } => nested,
                    })
                    .collect(),
            ));
        }
    }
    results
}

/// How the nonblocking verifier drives the fabric.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyMode {
    /// Enumerate every partial permutation per wavelength up to 6 ports;
    /// every full permutation up to 8 ports (plus a fixed sample of
    /// random partials); a seeded sample beyond that. The extreme case —
    /// all endpoints busy except the pair under test — is replayed for
    /// every pair regardless of size.
    Exhaustive,
    /// A seeded sample of `budget` random partial permutations per
    /// wavelength, plus the extreme-case replay.
    Randomized { budget: usize, seed: u64 },
}

/// One failed scenario: the connections in service and the request that
/// could not be carried.
#[derive(Clone, Debug)]
pub struct Counterexample {
    pub wavelength: Wavelength,
    pub established: Vec<(usize, usize)>,
    pub request: (usize, usize),
    pub error: Error,
}

impl std::fmt::Display for Counterexample {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "at {} with {} connections in service, ({} -> {}) failed: {}",
            self.wavelength,
            self.established.len(),
            self.request.0,
            self.request.1,
            self.error
        )
    }
}

/// Outcome of a verification run. `failures` counts every failed
/// scenario; `counterexamples` retains the first few in detail.
#[derive(Clone, Debug)]
pub struct NonblockingReport {
    pub stage: Stage,
    pub wavelengths: usize,
    pub scenarios: usize,
    pub setups: usize,
    pub extreme_cases: usize,
    pub failures: usize,
    pub counterexamples: Vec<Counterexample>,
}

impl NonblockingReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

const KEPT_COUNTEREXAMPLES: usize = 32;
const SAMPLED_SCENARIOS: usize = 512;

/// Drives same-wavelength traffic against the fabric and reports every
/// scenario in which a connection between free endpoints could not be
/// carried. A sound build produces a report with zero failures.
pub fn verify_nonblocking(
    fabric: &FabricTopology,
    wavelengths: usize,
    mode: VerifyMode,
) -> Result<NonblockingReport> {
    if wavelengths == 0 {
        return Err(Error::ZeroParameter { what: "wavelength count" });
    }
    if wavelengths > fabric.params().wavelengths() {
        return Err(Error::OutOfRange {
            what: "wavelength count",
            value: wavelengths,
            bound: fabric.params().wavelengths() + 1,
        });
    }
    let ports = fabric.params().ports();
    let mut session = RoutingSession::new(fabric);
    let mut report = NonblockingReport {
        stage: fabric.stage(),
        wavelengths,
        scenarios: 0,
        setups: 0,
        extreme_cases: 0,
        failures: 0,
        counterexamples: Vec::new(),
    };

    for index in 0..wavelengths {
        let wavelength = Wavelength::new(index);
        match mode {
            VerifyMode::Exhaustive => {
                session.reset();
                if ports <= 6 {
                    let mut used = vec![false; ports];
                    let mut established = Vec::new();
                    exhaust_partials(
                        &mut session,
                        wavelength,
                        0,
                        &mut used,
                        &mut established,
                        &mut report,
                    );
                } else if ports <= 8 {
                    exhaust_full_permutations(&mut session, wavelength, &mut report);
                    sample_partials(
                        &mut session,
                        wavelength,
                        SAMPLED_SCENARIOS,
                        0x0dd5_eed0 ^ index as u64,
                        &mut report,
                    );
                } else {
                    sample_partials(
                        &mut session,
                        wavelength,
                        SAMPLED_SCENARIOS,
                        0x0dd5_eed0 ^ index as u64,
                        &mut report,
                    );
                }
            }
            VerifyMode::Randomized { budget, seed } => {
                sample_partials(&mut session, wavelength, budget, seed ^ index as u64, &mut report);
            }
        }
        replay_extreme_cases(&mut session, wavelength, &mut report);
    }
    Ok(report)
}

fn record_failure(
    report: &mut NonblockingReport,
    wavelength: Wavelength,
    established: &[(usize, usize)],
    request: (usize, usize),
    error: Error,
) {
    report.failures += 1;
    if report.counterexamples.len() < KEPT_COUNTEREXAMPLES {
        report.counterexamples.push(Counterexample {
            wavelength,
            established: established.to_vec(),
            request,
            error,
        });
    }
}

/// Depth-first enumeration of every partial permutation, inputs taken in
/// ascending order. Connections set up on entry are torn down on
/// backtrack, so each scenario costs one setup.
fn exhaust_partials(
    session: &mut RoutingSession<'_>,
    wavelength: Wavelength,
    from_input: usize,
    used_outputs: &mut [bool],
    established: &mut Vec<(usize, usize)>,
    report: &mut NonblockingReport,
) {
    report.scenarios += 1;
    let ports = used_outputs.len();
    for input in from_input..ports {
        for output in 0..ports {
            if used_outputs[output] {
                continue;
            }
            report.setups += 1;
            let request = ConnectionRequest::new(input, output, wavelength);
            match session.setup(&request) {
                Ok(id) => {
                    used_outputs[output] = true;
                    established.push((input, output));
                    exhaust_partials(session, wavelength, input + 1, used_outputs, established, report);
                    established.pop();
                    used_outputs[output] = false;
                    session.teardown(id).expect("connection is active");
                }
                Err(error) => {
                    record_failure(report, wavelength, established, (input, output), error);
                }
            }
        }
    }
}

fn exhaust_full_permutations(
    session: &mut RoutingSession<'_>,
    wavelength: Wavelength,
    report: &mut NonblockingReport,
) {
    let ports = session.fabric().params().ports();
    let mut outputs: Vec<usize> = (0..ports).collect();
    let mut counters = vec![0usize; ports];

    let run = |session: &mut RoutingSession<'_>, outputs: &[usize], report: &mut NonblockingReport| {
        session.reset();
        report.scenarios += 1;
        let mut established = Vec::new();
        for (input, &output) in outputs.iter().enumerate() {
            report.setups += 1;
            let request = ConnectionRequest::new(input, output, wavelength);
            match session.setup(&request) {
                Ok(_) => established.push((input, output)),
                Err(error) => {
                    record_failure(report, wavelength, &established, (input, output), error);
                    break;
                }
            }
        }
    };

    run(session, &outputs, report);
    let mut index = 0;
    while index < ports {
        if counters[index] < index {
            if index % 2 == 0 {
                outputs.swap(0, index);
            } else {
                outputs.swap(counters[index], index);
            }
            run(session, &outputs, report);
            counters[index] += 1;
            index = 0;
        } else {
            counters[index] = 0;
            index += 1;
        }
    }
    session.reset();
}

fn sample_partials(
    session: &mut RoutingSession<'_>,
    wavelength: Wavelength,
    budget: usize,
    seed: u64,
    report: &mut NonblockingReport,
) {
    let ports = session.fabric().params().ports();
    let mut rng = SplitMix64::new(seed);
    for _ in 0..budget {
        session.reset();
        report.scenarios += 1;
        let size = 1 + rng.below(ports);
        let mut inputs: Vec<usize> = (0..ports).collect();
        let mut outputs: Vec<usize> = (0..ports).collect();
        rng.shuffle(&mut inputs);
        rng.shuffle(&mut outputs);
        let mut established = Vec::new();
        for pair in 0..size {
            let (input, output) = (inputs[pair], outputs[pair]);
            report.setups += 1;
            let request = ConnectionRequest::new(input, output, wavelength);
            match session.setup(&request) {
                Ok(_) => established.push((input, output)),
                Err(error) => {
                    record_failure(report, wavelength, &established, (input, output), error);
                    break;
                }
            }
        }
    }
    session.reset();
}

/// Replays the proof's extreme scenario for every pair: load every other
/// endpoint at the wavelength, then require the last free pair to
/// connect.
fn replay_extreme_cases(
    session: &mut RoutingSession<'_>,
    wavelength: Wavelength,
    report: &mut NonblockingReport,
) {
    let ports = session.fabric().params().ports();
    for input in 0..ports {
        for output in 0..ports {
            session.reset();
            let mut established = Vec::new();
            let mut aborted = false;
            let other_inputs = (0..ports).filter(|&x| x != input);
            let other_outputs: Vec<usize> = (0..ports).filter(|&x| x != output).collect();
            for (load_in, load_out) in other_inputs.zip(other_outputs) {
                report.setups += 1;
                let request = ConnectionRequest::new(load_in, load_out, wavelength);
                match session.setup(&request) {
                    Ok(_) => established.push((load_in, load_out)),
                    Err(error) => {
                        record_failure(report, wavelength, &established, (load_in, load_out), error);
                        aborted = true;
                        break;
                    }
                }
            }
            if !aborted {
                report.extreme_cases += 1;
                report.setups += 1;
                let request = ConnectionRequest::new(input, output, wavelength);
                if let Err(error) = session.setup(&request) {
                    record_failure(report, wavelength, &established, (input, output), error);
                }
            }
        }
    }
    session.reset();
}

/// Small deterministic generator for the sampled verification modes.
struct SplitMix64(u64);

impl SplitMix64 {
    fn new(seed: u64) -> SplitMix64 {
        SplitMix64(seed)
    }

    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut mixed = self.0;
        mixed = (mixed ^ (mixed >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        mixed = (mixed ^ (mixed >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        mixed ^ (mixed >> 31)
    }

    fn below(&mut self, bound: usize) -> usize {
        (self.next() % bound as u64) as usize
    }

    fn shuffle<T>(&mut self, items: &mut [T]) {
        for index in (1..items.len()).rev() {
            let other = self.below(index + 1);
            items.swap(index, other);
        }
    }
}
