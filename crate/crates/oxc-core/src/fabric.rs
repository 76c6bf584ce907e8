//! The three-phase modularization pipeline.
//!
//! Starting from the classical fabric (`build_classical`), the pipeline
//! first swaps the inner mesh for the factorized shuffle and relabels the
//! edge switches (`phase1_substitute`), then decomposes every edge switch
//! into a cascade of two smaller ranks (`phase2_decompose`), and finally
//! merges each shuffle sub-network with its surrounding inner-rank
//! switches into an r x r cross-connect module (`phase3_merge`).
//!
//! Phases 2 and 3 are graph rewrites of their input topology rather than
//! fresh builds from parameters, so a damaged input stays damaged in a
//! recognizable way instead of being silently repaired.

use crate::error::{Error, Result};
use crate::model::{AddressLabel, FabricParams, GroupPortAddress, Side};
use crate::shuffle::build_modular_shuffle;
use crate::topology::{
    BuildOptions, EdgeKind, EndpointRef, FabricTopology, FiberEdge, FiberTag, ModulePayload, Node,
    NodeId, NodeRole, Stage, WssLabel,
};

fn node(id: NodeId, fan_in: usize, fan_out: usize, role: NodeRole) -> Node {
    Node { id, fan_in, fan_out, role }
}

fn external_nodes(ports: usize, side: Side) -> Vec<Node> {
    (0..ports)
        .map(|index| match side {
            Side::Input => node(
                NodeId::ExternalPort { side, index },
                0,
                1,
                NodeRole::ExternalPort,
            ),
            Side::Output => node(
                NodeId::ExternalPort { side, index },
                1,
                0,
                NodeRole::ExternalPort,
            ),
        })
        .collect()
}

fn pigtail(external: NodeId, switch: NodeId, side: Side) -> FiberEdge {
    match side {
        Side::Input => FiberEdge {
            from: EndpointRef::new(external, 0),
            to: EndpointRef::new(switch, 0),
            kind: EdgeKind::ExternalIo,
            tag: None,
        },
        Side::Output => FiberEdge {
            from: EndpointRef::new(switch, 0),
            to: EndpointRef::new(external, 0),
            kind: EdgeKind::ExternalIo,
            tag: None,
        },
    }
}

/// Builds the classical fabric: `ports` 1xN switches, a full shuffle
/// mesh of `ports^2` fibers, and `ports` Nx1 switches.
pub fn build_classical(ports: usize, wavelengths: usize) -> Result<FabricTopology> {
    let params = FabricParams::monolithic(ports, wavelengths)?;
    let mut nodes = external_nodes(ports, Side::Input);
    for index in 0..ports {
        nodes.push(node(
            NodeId::InputWss(WssLabel::Flat(index)),
            1,
            ports,
            NodeRole::Wss,
        ));
    }
    for index in 0..ports {
        nodes.push(node(
            NodeId::OutputWss(WssLabel::Flat(index)),
            ports,
            1,
            NodeRole::Wss,
        ));
    }
    nodes.extend(external_nodes(ports, Side::Output));

    let mut edges = Vec::with_capacity(ports * ports + 2 * ports);
    for index in 0..ports {
        edges.push(pigtail(
            NodeId::ExternalPort { side: Side::Input, index },
            NodeId::InputWss(WssLabel::Flat(index)),
            Side::Input,
        ));
    }
    for group in 0..ports {
        for port in 0..ports {
            let input = GroupPortAddress::input(group, port);
            edges.push(FiberEdge {
                from: EndpointRef::new(NodeId::InputWss(WssLabel::Flat(group)), port),
                to: EndpointRef::new(NodeId::OutputWss(WssLabel::Flat(port)), group),
                kind: EdgeKind::Stage,
                tag: Some(FiberTag {
                    input: AddressLabel::Flat(input),
                    output: AddressLabel::Flat(input.swapped()),
                }),
            });
        }
    }
    for index in 0..ports {
        edges.push(pigtail(
            NodeId::ExternalPort { side: Side::Output, index },
            NodeId::OutputWss(WssLabel::Flat(index)),
            Side::Output,
        ));
    }

    Ok(FabricTopology::from_parts(
        params,
        Stage::Classical,
        BuildOptions::default(),
        nodes,
        edges,
    ))
}

/// Phase 1: substitutes the factorized shuffle for the inner mesh and
/// relabels every edge switch with its `(outer, inner)` split. The graph
/// stays isomorphic to the classical fabric; only labels and fiber tags
/// change.
pub fn phase1_substitute(
    ports: usize,
    outer: usize,
    inner: usize,
    wavelengths: usize,
) -> Result<FabricTopology> {
    let params = FabricParams::validated(ports, outer, inner, wavelengths)?;
    let shuffle = build_modular_shuffle(outer, inner)?;

    let split_label = |flat: usize| WssLabel::Split {
        outer: flat / inner,
        inner: flat % inner,
    };
    let mut nodes = external_nodes(ports, Side::Input);
    for index in 0..ports {
        nodes.push(node(NodeId::InputWss(split_label(index)), 1, ports, NodeRole::Wss));
    }
    for index in 0..ports {
        nodes.push(node(NodeId::OutputWss(split_label(index)), ports, 1, NodeRole::Wss));
    }
    nodes.extend(external_nodes(ports, Side::Output));

    let mut edges = Vec::with_capacity(ports * ports + 2 * ports);
    for index in 0..ports {
        edges.push(pigtail(
            NodeId::ExternalPort { side: Side::Input, index },
            NodeId::InputWss(split_label(index)),
            Side::Input,
        ));
    }
    for fiber in shuffle.fibers() {
        let AddressLabel::Modular(input) = fiber.input else {
            unreachable!("factorized shuffle carries modular labels");
        };
        let output = input.swapped();
        edges.push(FiberEdge {
            from: EndpointRef::new(
                NodeId::InputWss(WssLabel::Split {
                    outer: input.group_outer,
                    inner: input.group_inner,
                }),
                input.port_outer * inner + input.port_inner,
            ),
            to: EndpointRef::new(
                NodeId::OutputWss(WssLabel::Split {
                    outer: output.group_outer,
                    inner: output.group_inner,
                }),
                output.port_outer * inner + output.port_inner,
            ),
            kind: EdgeKind::Stage,
            tag: Some(FiberTag { input: fiber.input, output: fiber.output }),
        });
    }
    for index in 0..ports {
        edges.push(pigtail(
            NodeId::ExternalPort { side: Side::Output, index },
            NodeId::OutputWss(split_label(index)),
            Side::Output,
        ));
    }

    Ok(FabricTopology::from_parts(
        params,
        Stage::IntermediatePrime,
        BuildOptions::default(),
        nodes,
        edges,
    ))
}

/// Phase 2: replaces every 1xN edge switch with a 1xn switch whose each
/// output feeds a 1xr switch, and symmetrically on the output face. The
/// shuffle fibers re-source onto the new inner rank; their connectivity
/// is untouched.
pub fn phase2_decompose(input: &FabricTopology) -> Result<FabricTopology> {
    if input.stage() != Stage::IntermediatePrime {
        return Err(Error::WrongStage {
            expected: Stage::IntermediatePrime,
            actual: input.stage(),
        });
    }
    let params = *input.params();
    let ports = params.ports();
    let outer = params.outer();
    let inner = params.inner();

    let mut nodes = external_nodes(ports, Side::Input);
    for index in 0..ports {
        let (hi, lo) = params.split_address(index)?;
        nodes.push(node(
            NodeId::InputWss(WssLabel::Split { outer: hi, inner: lo }),
            1,
            outer,
            NodeRole::Wss,
        ));
    }
    for index in 0..ports {
        let (hi, lo) = params.split_address(index)?;
        for branch in 0..outer {
            nodes.push(node(
                NodeId::InputWss(WssLabel::Cascade { outer: hi, inner: lo, branch }),
                1,
                inner,
                NodeRole::Wss,
            ));
        }
    }
    for index in 0..ports {
        let (hi, lo) = params.split_address(index)?;
        for branch in 0..outer {
            nodes.push(node(
                NodeId::OutputWss(WssLabel::Cascade { outer: hi, inner: lo, branch }),
                inner,
                1,
                NodeRole::Wss,
            ));
        }
    }
    for index in 0..ports {
        let (hi, lo) = params.split_address(index)?;
        nodes.push(node(
            NodeId::OutputWss(WssLabel::Split { outer: hi, inner: lo }),
            outer,
            1,
            NodeRole::Wss,
        ));
    }
    nodes.extend(external_nodes(ports, Side::Output));

    // Sort the inherited edges into their pipeline categories, then
    // re-source the shuffle fibers onto the cascade rank.
    let mut pigtails_in = Vec::with_capacity(ports);
    let mut mesh = Vec::with_capacity(ports * ports);
    let mut pigtails_out = Vec::with_capacity(ports);
    for edge in input.edges() {
        match edge.kind {
            EdgeKind::ExternalIo => {
                if matches!(edge.from.node, NodeId::ExternalPort { side: Side::Input, .. }) {
                    pigtails_in.push(edge.clone());
                } else {
                    pigtails_out.push(edge.clone());
                }
            }
            EdgeKind::Stage => {
                let NodeId::InputWss(WssLabel::Split { outer: in_hi, inner: in_lo }) =
                    edge.from.node
                else {
                    return Err(Error::MalformedTopology {
                        detail: format!("stage fiber leaves unexpected node {}", edge.from.node),
                    });
                };
                let NodeId::OutputWss(WssLabel::Split { outer: out_hi, inner: out_lo }) =
                    edge.to.node
                else {
                    return Err(Error::MalformedTopology {
                        detail: format!("stage fiber enters unexpected node {}", edge.to.node),
                    });
                };
                // Output q of the wide switch becomes output q mod r of
                // its (q / r)-th cascade branch, and likewise on the
                // output face.
                mesh.push(FiberEdge {
                    from: EndpointRef::new(
                        NodeId::InputWss(WssLabel::Cascade {
                            outer: in_hi,
                            inner: in_lo,
                            branch: edge.from.port / inner,
                        }),
                        edge.from.port % inner,
                    ),
                    to: EndpointRef::new(
                        NodeId::OutputWss(WssLabel::Cascade {
                            outer: out_hi,
                            inner: out_lo,
                            branch: edge.to.port / inner,
                        }),
                        edge.to.port % inner,
                    ),
                    kind: EdgeKind::Stage,
                    tag: edge.tag,
                });
            }
        }
    }

    let mut edges = pigtails_in;
    for index in 0..ports {
        let (hi, lo) = params.split_address(index)?;
        for branch in 0..outer {
            edges.push(FiberEdge {
                from: EndpointRef::new(
                    NodeId::InputWss(WssLabel::Split { outer: hi, inner: lo }),
                    branch,
                ),
                to: EndpointRef::new(
                    NodeId::InputWss(WssLabel::Cascade { outer: hi, inner: lo, branch }),
                    0,
                ),
                kind: EdgeKind::Stage,
                tag: None,
            });
        }
    }
    edges.extend(mesh);
    for index in 0..ports {
        let (hi, lo) = params.split_address(index)?;
        for branch in 0..outer {
            edges.push(FiberEdge {
                from: EndpointRef::new(
                    NodeId::OutputWss(WssLabel::Cascade { outer: hi, inner: lo, branch }),
                    0,
                ),
                to: EndpointRef::new(
                    NodeId::OutputWss(WssLabel::Split { outer: hi, inner: lo }),
                    branch,
                ),
                kind: EdgeKind::Stage,
                tag: None,
            });
        }
    }
    edges.extend(pigtails_out);

    Ok(FabricTopology::from_parts(
        params,
        Stage::IntermediateDoublePrime,
        BuildOptions::default(),
        nodes,
        edges,
    ))
}

/// Phase 3 with default options (unsealed modules, switched inputs).
pub fn phase3_merge(input: &FabricTopology) -> Result<FabricTopology> {
    phase3_merge_with(input, BuildOptions::default())
}

/// Phase 3: merges each shuffle sub-network with its surrounding 1xr and
/// rx1 switches into one r x r cross-connect module. The cascade fibers
/// of phase 2 become the only inter-stage cabling.
pub fn phase3_merge_with(input: &FabricTopology, options: BuildOptions) -> Result<FabricTopology> {
    if input.stage() != Stage::IntermediateDoublePrime {
        return Err(Error::WrongStage {
            expected: Stage::IntermediateDoublePrime,
            actual: input.stage(),
        });
    }
    let params = *input.params();
    let ports = params.ports();
    let outer = params.outer();
    let inner = params.inner();
    let edge_role = if options.coupler_inputs { NodeRole::Coupler } else { NodeRole::Wss };

    // Bucket the inherited edges.
    let mut pigtails_in = Vec::with_capacity(ports);
    let mut feeds = Vec::with_capacity(ports * outer);
    let mut internal: Vec<Vec<FiberEdge>> = vec![Vec::new(); outer * outer];
    let mut drains = Vec::with_capacity(ports * outer);
    let mut pigtails_out = Vec::with_capacity(ports);
    for edge in input.edges() {
        match (edge.from.node, edge.to.node) {
            (NodeId::ExternalPort { side: Side::Input, .. }, _) => pigtails_in.push(edge.clone()),
            (_, NodeId::ExternalPort { side: Side::Output, .. }) => pigtails_out.push(edge.clone()),
            (
                NodeId::InputWss(WssLabel::Split { .. }),
                NodeId::InputWss(WssLabel::Cascade { outer: hi, inner: lo, branch }),
            ) => {
                // Feed into module (hi, branch) at its lo-th input.
                feeds.push(FiberEdge {
                    from: edge.from,
                    to: EndpointRef::new(
                        NodeId::OxcModule { in_block: hi, out_block: branch },
                        lo,
                    ),
                    kind: EdgeKind::Stage,
                    tag: edge.tag,
                });
            }
            (
                NodeId::InputWss(WssLabel::Cascade { outer: in_hi, inner: in_lo, branch: in_branch }),
                NodeId::OutputWss(WssLabel::Cascade { outer: out_hi, inner: out_lo, branch: out_branch }),
            ) => {
                // A fiber of sub-network (in_hi, in_branch); it must stay
                // inside one module to be mergeable.
                if (in_hi, in_branch) != (out_branch, out_hi) {
                    return Err(Error::MalformedTopology {
                        detail: format!(
                            "fiber from cascade ({in_hi},{in_lo},{in_branch}) to cascade \
                             ({out_hi},{out_lo},{out_branch}) crosses module boundaries"
                        ),
                    });
                }
                let local = GroupPortAddress::input(in_lo, edge.from.port);
                internal[in_hi * outer + in_branch].push(FiberEdge {
                    from: EndpointRef::new(NodeId::InputWss(WssLabel::Flat(in_lo)), edge.from.port),
                    to: EndpointRef::new(NodeId::OutputWss(WssLabel::Flat(out_lo)), edge.to.port),
                    kind: EdgeKind::Stage,
                    tag: Some(FiberTag {
                        input: AddressLabel::Flat(local),
                        output: AddressLabel::Flat(local.swapped()),
                    }),
                });
            }
            (
                NodeId::OutputWss(WssLabel::Cascade { outer: hi, inner: lo, branch }),
                NodeId::OutputWss(WssLabel::Split { .. }),
            ) => {
                // Drain from module (branch, hi) at its lo-th output.
                drains.push(FiberEdge {
                    from: EndpointRef::new(
                        NodeId::OxcModule { in_block: branch, out_block: hi },
                        lo,
                    ),
                    to: edge.to,
                    kind: EdgeKind::Stage,
                    tag: edge.tag,
                });
            }
            (from, to) => {
                return Err(Error::MalformedTopology {
                    detail: format!("unexpected fiber from {from} to {to}"),
                });
            }
        }
    }

    let mut nodes = external_nodes(ports, Side::Input);
    for index in 0..ports {
        let (hi, lo) = params.split_address(index)?;
        nodes.push(node(
            NodeId::InputWss(WssLabel::Split { outer: hi, inner: lo }),
            1,
            outer,
            edge_role.clone(),
        ));
    }
    for in_block in 0..outer {
        for out_block in 0..outer {
            let payload = if options.sealed_modules {
                ModulePayload::Sealed { size: inner }
            } else {
                ModulePayload::Unsealed(Box::new(assemble_module(
                    inner,
                    params.wavelengths(),
                    std::mem::take(&mut internal[in_block * outer + out_block]),
                )?))
            };
            nodes.push(node(
                NodeId::OxcModule { in_block, out_block },
                inner,
                inner,
                NodeRole::OxcModule(payload),
            ));
        }
    }
    for index in 0..ports {
        let (hi, lo) = params.split_address(index)?;
        nodes.push(node(
            NodeId::OutputWss(WssLabel::Split { outer: hi, inner: lo }),
            outer,
            1,
            NodeRole::Wss,
        ));
    }
    nodes.extend(external_nodes(ports, Side::Output));

    let mut edges = pigtails_in;
    edges.extend(feeds);
    edges.extend(drains);
    edges.extend(pigtails_out);

    Ok(FabricTopology::from_parts(
        params,
        Stage::Modular,
        options,
        nodes,
        edges,
    ))
}

/// Packages collected sub-network fibers as a classical fabric of the
/// module size.
fn assemble_module(size: usize, wavelengths: usize, mesh: Vec<FiberEdge>) -> Result<FabricTopology> {
    let params = FabricParams::monolithic(size, wavelengths)?;
    let mut nodes = external_nodes(size, Side::Input);
    for index in 0..size {
        nodes.push(node(NodeId::InputWss(WssLabel::Flat(index)), 1, size, NodeRole::Wss));
    }
    for index in 0..size {
        nodes.push(node(NodeId::OutputWss(WssLabel::Flat(index)), size, 1, NodeRole::Wss));
    }
    nodes.extend(external_nodes(size, Side::Output));

    let mut edges = Vec::with_capacity(size * size + 2 * size);
    for index in 0..size {
        edges.push(pigtail(
            NodeId::ExternalPort { side: Side::Input, index },
            NodeId::InputWss(WssLabel::Flat(index)),
            Side::Input,
        ));
    }
    edges.extend(mesh);
    for index in 0..size {
        edges.push(pigtail(
            NodeId::ExternalPort { side: Side::Output, index },
            NodeId::OutputWss(WssLabel::Flat(index)),
            Side::Output,
        ));
    }
    Ok(FabricTopology::from_parts(
        params,
        Stage::Classical,
        BuildOptions::default(),
        nodes,
        edges,
    ))
}

/// Runs the full pipeline with default options.
pub fn build_modular(outer: usize, inner: usize, wavelengths: usize) -> Result<FabricTopology> {
    build_modular_with(outer, inner, wavelengths, BuildOptions::default())
}

/// Runs the full pipeline: substitute, decompose, merge.
pub fn build_modular_with(
    outer: usize,
    inner: usize,
    wavelengths: usize,
    options: BuildOptions,
) -> Result<FabricTopology> {
    let relabeled = phase1_substitute(outer * inner, outer, inner, wavelengths)?;
    let decomposed = phase2_decompose(&relabeled)?;
    phase3_merge_with(&decomposed, options)
}
