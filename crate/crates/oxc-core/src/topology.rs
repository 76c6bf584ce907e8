//! Node/edge graphs for every stage of the construction pipeline.
//!
//! A [`FabricTopology`] is immutable once built: mutating helpers such as
//! [`FabricTopology::with_edge_removed`] return a new value, which keeps
//! topologies safe to share across threads and makes fault-injection
//! experiments explicit.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::model::{AddressLabel, FabricParams, Side};

/// Construction stage a topology belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Flat fabric: one switching element per port on each face, fully
    /// meshed in between.
    Classical,
    /// The mesh replaced by the factorized shuffle; switch labels split.
    IntermediatePrime,
    /// Edge switches decomposed into two cascaded ranks.
    IntermediateDoublePrime,
    /// Inner rank and shuffle sub-networks merged into OXC modules.
    Modular,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Stage::Classical => "classical",
            Stage::IntermediatePrime => "intermediate-prime",
            Stage::IntermediateDoublePrime => "intermediate-double-prime",
            Stage::Modular => "modular",
        };
        write!(f, "{name}")
    }
}

/// Label of a wavelength-selective switch node. The shape tracks the
/// pipeline: flat while classical, split after relabeling, and with a
/// branch index for the cascaded rank.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WssLabel {
    Flat(usize),
    Split { outer: usize, inner: usize },
    Cascade { outer: usize, inner: usize, branch: usize },
}

impl WssLabel {
    pub fn compact(&self) -> String {
        match *self {
            WssLabel::Flat(index) => format!("{index}"),
            WssLabel::Split { outer, inner } => {
                if outer <= 9 && inner <= 9 {
                    format!("{outer}{inner}")
                } else {
                    format!("({outer},{inner})")
                }
            }
            WssLabel::Cascade { outer, inner, branch } => {
                if outer <= 9 && inner <= 9 && branch <= 9 {
                    format!("{outer}{inner}{branch}")
                } else {
                    format!("({outer},{inner},{branch})")
                }
            }
        }
    }
}

/// Identity of a node within one topology.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeId {
    /// One of the fabric's own ports; paths start and end here.
    ExternalPort { side: Side, index: usize },
    InputWss(WssLabel),
    OutputWss(WssLabel),
    /// Merged r x r cross-connect module. `in_block` is the band of input
    /// groups it serves, `out_block` the band of output groups.
    OxcModule { in_block: usize, out_block: usize },
}

impl NodeId {
    /// Module position in the conventional vertical layout,
    /// `in_block * outer + out_block`.
    pub fn module_position(&self, outer: usize) -> Option<usize> {
        match *self {
            NodeId::OxcModule { in_block, out_block } => Some(in_block * outer + out_block),
            _ => None,
        }
    }
}

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NodeId::ExternalPort { side, index } => write!(f, "external {side} {index}"),
            NodeId::InputWss(label) => write!(f, "input WSS {}", label.compact()),
            NodeId::OutputWss(label) => write!(f, "output WSS {}", label.compact()),
            NodeId::OxcModule { in_block, out_block } => {
                if *in_block <= 9 && *out_block <= 9 {
                    write!(f, "OXC module {in_block}{out_block}")
                } else {
                    write!(f, "OXC module ({in_block},{out_block})")
                }
            }
        }
    }
}

/// What a node does, beyond its identity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    ExternalPort,
    /// Wavelength-selective switch: every wavelength is steered
    /// independently of the others.
    Wss,
    /// Passive splitter: every output carries every wavelength.
    Coupler,
    OxcModule(ModulePayload),
}

/// Internal content of a merged module.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulePayload {
    /// Packaged as an opaque per-wavelength crossbar; internal fibers do
    /// not count toward cabling.
    Sealed { size: usize },
    /// Full internal description: a classical fabric of the module size.
    Unsealed(Box<FabricTopology>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub fan_in: usize,
    pub fan_out: usize,
    pub role: NodeRole,
}

/// Index of an edge within its topology's edge list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub usize);

impl std::fmt::Display for EdgeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// One end of a fiber: a node plus a local port index on the relevant
/// face of that node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EndpointRef {
    pub node: NodeId,
    pub port: usize,
}

impl EndpointRef {
    pub fn new(node: NodeId, port: usize) -> EndpointRef {
        EndpointRef { node, port }
    }
}

impl std::fmt::Display for EndpointRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} port {}", self.node, self.port)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    /// Pigtail between an external port and its edge switch. Not counted
    /// as inter-stage cabling.
    ExternalIo,
    /// Inter-stage fiber.
    Stage,
}

/// Address pair naming a fiber, `f(input, output)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FiberTag {
    pub input: AddressLabel,
    pub output: AddressLabel,
}

impl std::fmt::Display for FiberTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "f({},{})", self.input.compact(), self.output.compact())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberEdge {
    /// Source node and its local output port.
    pub from: EndpointRef,
    /// Destination node and its local input port.
    pub to: EndpointRef,
    pub kind: EdgeKind,
    pub tag: Option<FiberTag>,
}

/// Builder switches for the modular stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildOptions {
    /// Package modules as opaque crossbars instead of embedding their
    /// internal fabric.
    pub sealed_modules: bool,
    /// Substitute each input-side 1xn switch with a passive 1xn coupler.
    pub coupler_inputs: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(from = "TopologyParts", into = "TopologyParts")]
pub struct FabricTopology {
    params: FabricParams,
    stage: Stage,
    options: BuildOptions,
    nodes: Vec<Node>,
    edges: Vec<FiberEdge>,
    #[serde(skip)]
    node_index: HashMap<NodeId, usize>,
}

impl PartialEq for FabricTopology {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params
            && self.stage == other.stage
            && self.options == other.options
            && self.nodes == other.nodes
            && self.edges == other.edges
    }
}

impl Eq for FabricTopology {}

/// Serde mirror of [`FabricTopology`]; the node index is rebuilt on load.
#[derive(Serialize, Deserialize)]
struct TopologyParts {
    params: FabricParams,
    stage: Stage,
    options: BuildOptions,
    nodes: Vec<Node>,
    edges: Vec<FiberEdge>,
}

impl From<TopologyParts> for FabricTopology {
    fn from(parts: TopologyParts) -> FabricTopology {
        FabricTopology::from_parts(parts.params, parts.stage, parts.options, parts.nodes, parts.edges)
    }
}

impl From<FabricTopology> for TopologyParts {
    fn from(t: FabricTopology) -> TopologyParts {
        TopologyParts {
            params: t.params,
            stage: t.stage,
            options: t.options,
            nodes: t.nodes,
            edges: t.edges,
        }
    }
}

impl FabricTopology {
    /// Assembles a topology from raw parts without validating it; run
    /// [`FabricTopology::validate`] to learn whether the invariants hold.
    pub fn from_parts(
        params: FabricParams,
        stage: Stage,
        options: BuildOptions,
        nodes: Vec<Node>,
        edges: Vec<FiberEdge>,
    ) -> FabricTopology {
        let mut node_index = HashMap::with_capacity(nodes.len());
        for (position, node) in nodes.iter().enumerate() {
            node_index.entry(node.id).or_insert(position);
        }
        FabricTopology {
            params,
            stage,
            options,
            nodes,
            edges,
            node_index,
        }
    }

    pub fn params(&self) -> &FabricParams {
        &self.params
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn options(&self) -> BuildOptions {
        self.options
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[FiberEdge] {
        &self.edges
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.node_index.get(id).map(|&position| &self.nodes[position])
    }

    pub fn edge(&self, id: EdgeId) -> Option<&FiberEdge> {
        self.edges.get(id.0)
    }

    /// Inter-stage fibers only; pigtails to external ports are excluded.
    pub fn stage_fiber_count(&self) -> usize {
        self.edges
            .iter()
            .filter(|edge| edge.kind == EdgeKind::Stage)
            .count()
    }

    /// Fibers inside unsealed modules, summed over all modules.
    pub fn module_internal_fiber_count(&self) -> usize {
        self.nodes
            .iter()
            .filter_map(|node| match &node.role {
                NodeRole::OxcModule(ModulePayload::Unsealed(inner)) => {
                    Some(inner.stage_fiber_count())
                }
                _ => None,
            })
            .sum()
    }

    /// Copy of this topology with one edge deleted. For fault-injection
    /// experiments; the result will normally fail validation.
    pub fn with_edge_removed(&self, id: EdgeId) -> FabricTopology {
        let mut copy = self.clone();
        if id.0 < copy.edges.len() {
            copy.edges.remove(id.0);
        }
        copy
    }

    /// Copy of this topology with one edge's destination replaced.
    pub fn with_edge_rewired(&self, id: EdgeId, new_to: EndpointRef) -> FabricTopology {
        let mut copy = self.clone();
        if let Some(edge) = copy.edges.get_mut(id.0) {
            edge.to = new_to;
        }
        copy
    }

    /// Checks every structural invariant and reports each breach; an
    /// empty list means the topology is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        validate_topology(self)
    }
}

/// One broken invariant, naming the node or edge at fault.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    DuplicateNode { id: NodeId },
    MissingExternalPort { side: Side, index: usize },
    DanglingEdge { edge: EdgeId, endpoint: EndpointRef },
    PortOutOfRange { edge: EdgeId, endpoint: EndpointRef, declared: usize },
    PortShared { node: NodeId, side: Side, port: usize },
    WssShape { node: NodeId, fan_in: usize, fan_out: usize },
    ModuleShape { node: NodeId, detail: String },
    StageFiberCount { expected: usize, actual: usize },
    ExternalFiberCount { expected: usize, actual: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::DuplicateNode { id } => write!(f, "duplicate node {id}"),
            Violation::MissingExternalPort { side, index } => {
                write!(f, "external {side} port {index} is missing")
            }
            Violation::DanglingEdge { edge, endpoint } => {
                write!(f, "edge {edge} references missing node at {endpoint}")
            }
            Violation::PortOutOfRange { edge, endpoint, declared } => write!(
                f,
                "edge {edge} uses {endpoint} beyond the declared degree {declared}"
            ),
            Violation::PortShared { node, side, port } => {
                write!(f, "{node} {side} port {port} carries more than one fiber")
            }
            Violation::WssShape { node, fan_in, fan_out } => write!(
                f,
                "{node} is {fan_in}x{fan_out}, which is neither 1xk nor kx1"
            ),
            Violation::ModuleShape { node, detail } => write!(f, "{node}: {detail}"),
            Violation::StageFiberCount { expected, actual } => {
                write!(f, "expected {expected} inter-stage fibers, found {actual}")
            }
            Violation::ExternalFiberCount { expected, actual } => {
                write!(f, "expected {expected} external pigtails, found {actual}")
            }
        }
    }
}

/// Expected inter-stage fiber count for a well-formed topology.
pub fn expected_stage_fibers(params: &FabricParams, stage: Stage) -> usize {
    let ports = params.ports();
    let outer = params.outer();
    match stage {
        Stage::Classical | Stage::IntermediatePrime => ports * ports,
        // Decomposition adds a cascade fiber per branch on each face.
        Stage::IntermediateDoublePrime => ports * ports + 2 * ports * outer,
        // The mesh disappears into the modules; the cascades remain.
        Stage::Modular => 2 * ports * outer,
    }
}

/// Scans a topology against the full invariant list. Violations are data,
/// not errors: builders are expected to produce an empty list, while
/// fault-injected or hand-assembled graphs report what is broken.
pub fn validate_topology(topology: &FabricTopology) -> Vec<Violation> {
    let mut violations = Vec::new();
    let params = topology.params();
    let ports = params.ports();

    // Node identity and external-port coverage.
    let mut seen: HashMap<NodeId, usize> = HashMap::new();
    for node in topology.nodes() {
        *seen.entry(node.id).or_insert(0) += 1;
    }
    for (id, count) in seen.iter() {
        if *count > 1 {
            violations.push(Violation::DuplicateNode { id: *id });
        }
    }
    for side in [Side::Input, Side::Output] {
        for index in 0..ports {
            if !seen.contains_key(&NodeId::ExternalPort { side, index }) {
                violations.push(Violation::MissingExternalPort { side, index });
            }
        }
    }

    // Per-node shape checks. A 1x1 edge switch is allowed: it is the
    // degenerate k = 1 case of both orientations.
    for node in topology.nodes() {
        match &node.role {
            NodeRole::Wss | NodeRole::Coupler => {
                if node.fan_in != 1 && node.fan_out != 1 {
                    violations.push(Violation::WssShape {
                        node: node.id,
                        fan_in: node.fan_in,
                        fan_out: node.fan_out,
                    });
                }
            }
            NodeRole::OxcModule(payload) => {
                let size = match payload {
                    ModulePayload::Sealed { size } => *size,
                    ModulePayload::Unsealed(inner) => inner.params().ports(),
                };
                if node.fan_in != size || node.fan_out != size {
                    violations.push(Violation::ModuleShape {
                        node: node.id,
                        detail: format!(
                            "external degree {}x{} does not match module size {size}",
                            node.fan_in, node.fan_out
                        ),
                    });
                }
                if let ModulePayload::Unsealed(inner) = payload {
                    let internal = inner.stage_fiber_count();
                    if internal != size * size {
                        violations.push(Violation::ModuleShape {
                            node: node.id,
                            detail: format!(
                                "expected {} internal fibers, found {internal}",
                                size * size
                            ),
                        });
                    }
                    for inner_violation in inner.validate() {
                        violations.push(Violation::ModuleShape {
                            node: node.id,
                            detail: inner_violation.to_string(),
                        });
                    }
                }
            }
            NodeRole::ExternalPort => {}
        }
    }

    // Edge endpoint integrity and port exclusivity.
    let mut out_taken: HashMap<(NodeId, usize), usize> = HashMap::new();
    let mut in_taken: HashMap<(NodeId, usize), usize> = HashMap::new();
    for (position, edge) in topology.edges().iter().enumerate() {
        let id = EdgeId(position);
        match topology.node(&edge.from.node) {
            None => violations.push(Violation::DanglingEdge { edge: id, endpoint: edge.from }),
            Some(node) => {
                if edge.from.port >= node.fan_out {
                    violations.push(Violation::PortOutOfRange {
                        edge: id,
                        endpoint: edge.from,
                        declared: node.fan_out,
                    });
                }
            }
        }
        match topology.node(&edge.to.node) {
            None => violations.push(Violation::DanglingEdge { edge: id, endpoint: edge.to }),
            Some(node) => {
                if edge.to.port >= node.fan_in {
                    violations.push(Violation::PortOutOfRange {
                        edge: id,
                        endpoint: edge.to,
                        declared: node.fan_in,
                    });
                }
            }
        }
        *out_taken.entry((edge.from.node, edge.from.port)).or_insert(0) += 1;
        *in_taken.entry((edge.to.node, edge.to.port)).or_insert(0) += 1;
    }
    for ((node, port), count) in out_taken.iter() {
        if *count > 1 {
            violations.push(Violation::PortShared {
                node: *node,
                side: Side::Output,
                port: *port,
            });
        }
    }
    for ((node, port), count) in in_taken.iter() {
        if *count > 1 {
            violations.push(Violation::PortShared {
                node: *node,
                side: Side::Input,
                port: *port,
            });
        }
    }

    // Census checks.
    let expected_stage = expected_stage_fibers(params, topology.stage());
    let actual_stage = topology.stage_fiber_count();
    if actual_stage != expected_stage {
        violations.push(Violation::StageFiberCount {
            expected: expected_stage,
            actual: actual_stage,
        });
    }
    let external = topology
        .edges()
        .iter()
        .filter(|edge| edge.kind == EdgeKind::ExternalIo)
        .count();
    if external != 2 * ports {
        violations.push(Violation::ExternalFiberCount {
            expected: 2 * ports,
            actual: external,
        });
    }

    // Deterministic report order regardless of map iteration.
    violations.sort_by_key(|violation| format!("{violation}"));
    violations
}

/// Edge lookup tables for a topology; port pairs are expected to be
/// unique, but damaged graphs may map a port to several candidates.
#[derive(Debug, Default)]
pub(crate) struct PortMap {
    out_ports: HashMap<(NodeId, usize), Vec<EdgeId>>,
    in_ports: HashMap<(NodeId, usize), Vec<EdgeId>>,
}

impl PortMap {
    pub(crate) fn build(topology: &FabricTopology) -> PortMap {
        let mut map = PortMap::default();
        for (position, edge) in topology.edges().iter().enumerate() {
            map.out_ports
                .entry((edge.from.node, edge.from.port))
                .or_default()
                .push(EdgeId(position));
            map.in_ports
                .entry((edge.to.node, edge.to.port))
                .or_default()
                .push(EdgeId(position));
        }
        map
    }

    /// The single edge leaving `node` at `port`, if exactly one exists.
    pub(crate) fn unique_out(&self, node: NodeId, port: usize) -> Option<EdgeId> {
        match self.out_ports.get(&(node, port)) {
            Some(edges) if edges.len() == 1 => Some(edges[0]),
            _ => None,
        }
    }

    pub(crate) fn outgoing(&self, node: NodeId, port: usize) -> &[EdgeId] {
        self.out_ports
            .get(&(node, port))
            .map(|edges| edges.as_slice())
            .unwrap_or(&[])
    }
}
