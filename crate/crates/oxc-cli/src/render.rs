//! Human-readable output: connectivity tables, route traces, Graphviz
//! DOT, and the metrics summary.

use std::fmt::Write as _;

use oxc_core::metrics::{FabricKind, LossElement};
use oxc_core::model::Side;
use oxc_core::routing::{PathNode, RoutedPath};
use oxc_core::shuffle::{ConnectivityTable, TableFlavor};
use oxc_core::topology::{FabricTopology, Node, NodeId, NodeRole, WssLabel};

use crate::doc::MetricsReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Pretty,
    Csv,
}

/// Renders a connectivity table. The pretty form draws rules between the
/// bands of a factorized table; CSV quotes every cell since cells
/// contain commas.
pub fn render_table(table: &ConnectivityTable, format: TableFormat) -> String {
    match format {
        TableFormat::Pretty => render_table_pretty(table),
        TableFormat::Csv => render_table_csv(table),
    }
}

fn band_size(table: &ConnectivityTable) -> Option<usize> {
    match table.flavor() {
        TableFlavor::Factorized { inner, .. } => Some(inner),
        TableFlavor::Monolithic { .. } => None,
    }
}

fn render_table_pretty(table: &ConnectivityTable) -> String {
    let size = table.size();
    let digits = table.fits_digit_strings();
    let headers: Vec<String> = table.cols().iter().map(|label| label.render_as(digits)).collect();
    let row_labels: Vec<String> =
        table.rows().iter().map(|label| label.render_as(digits)).collect();
    let cells: Vec<Vec<String>> = (0..size)
        .map(|row| {
            (0..size)
                .map(|col| table.entry(row, col).expect("dense table").render_as(digits))
                .collect()
        })
        .collect();

    let label_width = row_labels.iter().map(String::len).max().unwrap_or(1);
    let cell_width = cells
        .iter()
        .flatten()
        .map(String::len)
        .chain(headers.iter().map(String::len))
        .max()
        .unwrap_or(1);
    let band = band_size(table);

    let mut out = String::new();
    // Header row.
    let _ = write!(out, "{:label_width$} ", "");
    for (col, header) in headers.iter().enumerate() {
        if let Some(band) = band {
            if col > 0 && col % band == 0 {
                out.push_str("| ");
            }
        }
        let _ = write!(out, " {header:^cell_width$}");
    }
    out.push('\n');
    let rule = |out: &mut String| {
        let _ = write!(out, "{:-<label_width$}-", "");
        for col in 0..size {
            if let Some(band) = band {
                if col > 0 && col % band == 0 {
                    out.push_str("+-");
                }
            }
            let _ = write!(out, "-{:-<cell_width$}", "");
        }
        out.push('\n');
    };
    rule(&mut out);
    for (row, row_cells) in cells.iter().enumerate() {
        if let Some(band) = band {
            if row > 0 && row % band == 0 {
                rule(&mut out);
            }
        }
        let _ = write!(out, "{:>label_width$} ", row_labels[row]);
        for (col, cell) in row_cells.iter().enumerate() {
            if let Some(band) = band {
                if col > 0 && col % band == 0 {
                    out.push_str("| ");
                }
            }
            let _ = write!(out, " {cell:^cell_width$}");
        }
        out.push('\n');
    }
    out
}

fn render_table_csv(table: &ConnectivityTable) -> String {
    let size = table.size();
    let digits = table.fits_digit_strings();
    let mut out = String::new();
    out.push_str("\"\"");
    for label in table.cols() {
        let _ = write!(out, ",\"{}\"", label.render_as(digits));
    }
    out.push('\n');
    for row in 0..size {
        let _ = write!(out, "\"{}\"", table.rows()[row].render_as(digits));
        for col in 0..size {
            let _ = write!(out, ",\"{}\"", table.entry(row, col).expect("dense").render_as(digits));
        }
        out.push('\n');
    }
    out
}

/// Element description as it appears in traces: `1x2 WSS 10`,
/// `3x3 OXC module 10`, `1x8 OC 21`.
fn describe(node: &Node) -> String {
    let kind = match &node.role {
        NodeRole::Wss => "WSS",
        NodeRole::Coupler => "OC",
        NodeRole::OxcModule(_) => "OXC module",
        NodeRole::ExternalPort => "port",
    };
    let label = match &node.id {
        NodeId::InputWss(label) | NodeId::OutputWss(label) => label.compact(),
        NodeId::OxcModule { in_block, out_block } => {
            if *in_block <= 9 && *out_block <= 9 {
                format!("{in_block}{out_block}")
            } else {
                format!("({in_block},{out_block})")
            }
        }
        NodeId::ExternalPort { index, .. } => index.to_string(),
    };
    format!("{}x{} {kind} {label}", node.fan_in, node.fan_out)
}

/// Renders a resolved path as one line per port event, in traversal
/// order, naming tagged fibers along the way.
pub fn render_trace(fabric: &FabricTopology, path: &RoutedPath) -> String {
    let mut lines: Vec<String> = Vec::new();
    for (position, hop) in path.hops.iter().enumerate() {
        let PathNode::Fabric(node_id) = hop.node else {
            continue; // module-internal hops stay at module granularity
        };
        if matches!(node_id, NodeId::ExternalPort { .. }) {
            continue;
        }
        let node = fabric.node(&node_id).expect("path nodes exist");
        match hop.side {
            Side::Input => {
                if lines.is_empty() {
                    lines.push(format!("input of {}", describe(node)));
                } else {
                    lines.push(format!("input {} of {}", hop.port, describe(node)));
                }
            }
            Side::Output => {
                if node.fan_out == 1 {
                    lines.push(format!("output of {}", describe(node)));
                } else {
                    lines.push(format!("output {} of {}", hop.port, describe(node)));
                }
                // A tagged fiber follows this exit: name it.
                if let Some(oxc_core::routing::EdgeRef::Fabric(edge_id)) =
                    edge_after_hop(path, position)
                {
                    if let Some(tag) = fabric.edge(edge_id).and_then(|edge| edge.tag) {
                        lines.push(format!("fiber {tag}"));
                    }
                }
            }
        }
    }
    let mut out = String::new();
    for (index, line) in lines.iter().enumerate() {
        if index == 0 {
            let _ = writeln!(out, "{line}");
        } else {
            let _ = writeln!(out, "-> {line}");
        }
    }
    out
}

/// The fiber crossed right after the `position`-th hop, if that hop is
/// an exit event.
fn edge_after_hop(path: &RoutedPath, position: usize) -> Option<oxc_core::routing::EdgeRef> {
    // Hops come in (exit, enter) pairs around each edge: edge k sits
    // between hops 2k and 2k+1.
    if position.is_multiple_of(2) {
        path.edges.get(position / 2).copied()
    } else {
        None
    }
}

fn dot_id(node: &NodeId) -> String {
    match node {
        NodeId::ExternalPort { side: Side::Input, index } => format!("ein_{index}"),
        NodeId::ExternalPort { side: Side::Output, index } => format!("eout_{index}"),
        NodeId::InputWss(label) => format!("iw_{}", dot_label(label)),
        NodeId::OutputWss(label) => format!("ow_{}", dot_label(label)),
        NodeId::OxcModule { in_block, out_block } => format!("oxc_{in_block}_{out_block}"),
    }
}

fn dot_label(label: &WssLabel) -> String {
    match label {
        WssLabel::Flat(index) => format!("{index}"),
        WssLabel::Split { outer, inner } => format!("{outer}_{inner}"),
        WssLabel::Cascade { outer, inner, branch } => format!("{outer}_{inner}_{branch}"),
    }
}

/// Deterministic Graphviz rendering: nodes and edges appear in
/// construction order, so the same fabric always produces the same
/// bytes.
pub fn render_dot(fabric: &FabricTopology) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph fabric {{");
    let _ = writeln!(out, "  rankdir=LR;");
    let _ = writeln!(out, "  node [shape=box, fontname=\"monospace\"];");
    for node in fabric.nodes() {
        let shape = match node.role {
            NodeRole::ExternalPort => " shape=plaintext",
            NodeRole::OxcModule(_) => " shape=box3d",
            NodeRole::Coupler => " shape=trapezium",
            NodeRole::Wss => "",
        };
        let label = match node.role {
            NodeRole::ExternalPort => format!("{}", node.id),
            _ => describe(node),
        };
        let _ = writeln!(out, "  {} [label=\"{label}\"{shape}];", dot_id(&node.id));
    }
    for edge in fabric.edges() {
        let attributes = match edge.tag {
            Some(tag) => format!(" [label=\"{tag}\"]"),
            None => String::new(),
        };
        let _ = writeln!(
            out,
            "  {} -> {}{attributes};",
            dot_id(&edge.from.node),
            dot_id(&edge.to.node)
        );
    }
    let _ = writeln!(out, "}}");
    out
}

/// Human summary of a metrics report.
pub fn render_metrics(report: &MetricsReport) -> String {
    let census = &report.census;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "fabric: {} ports ({} x {} factorization)",
        census.ports, census.outer, census.inner
    );
    let _ = writeln!(
        out,
        "components: {} 1x{} WSS + {} {}x{} OXC modules + {} {}x1 WSS",
        census.input_switches,
        census.outer,
        census.oxc_modules,
        census.inner,
        census.inner,
        census.output_switches,
        census.outer,
    );
    for cabling in &report.cabling {
        match cabling.kind {
            FabricKind::Classical => {
                let _ = writeln!(out, "cabling (classical): {} fibers", cabling.stage_fibers);
            }
            FabricKind::Modular => {
                let _ = writeln!(
                    out,
                    "cabling (modular): {} stage fibers ({} of classical), \
                     {} module-internal, {} external cables",
                    cabling.stage_fibers,
                    cabling.ratio_to_classical,
                    cabling.internal_module_fibers,
                    cabling.total_external_cables,
                );
            }
        }
    }
    for loss in &report.loss {
        let variant = match (loss.kind, loss.coupler_inputs) {
            (FabricKind::Classical, _) => "classical",
            (FabricKind::Modular, false) => "modular",
            (FabricKind::Modular, true) => "modular, coupler inputs",
        };
        let elements = loss
            .elements
            .iter()
            .map(|element| match element {
                LossElement::Wss { fan, .. } => format!("WSS({fan})"),
                LossElement::Coupler { fan, .. } => format!("OC({fan})"),
            })
            .collect::<Vec<_>>()
            .join(" + ");
        let note = if loss.comparison_estimate { " (model estimate)" } else { "" };
        let _ = writeln!(out, "loss ({variant}): {:.2} dB = {elements}{note}", loss.total_db);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use oxc_core::fabric::{build_classical, build_modular};
    use oxc_core::model::Wavelength;
    use oxc_core::routing::{resolve_path, ConnectionRequest};
    use oxc_core::shuffle::{build_table, factorize_table};

    #[test]
    fn pretty_table_contains_golden_cells() {
        let table = build_table(6).unwrap();
        let rendered = render_table_pretty(&table);
        assert!(rendered.contains("32, 23"));
        let factorized = factorize_table(&table, 2, 3).unwrap();
        let rendered = render_table_pretty(&factorized);
        assert!(rendered.contains("1002, 0210"));
        assert!(rendered.contains("|")); // band separators
    }

    #[test]
    fn unit_table_renders() {
        let table = build_table(1).unwrap();
        assert!(render_table_pretty(&table).contains("00, 00"));
        assert!(render_table_csv(&table).contains("\"00, 00\""));
    }

    #[test]
    fn wide_tables_use_tuple_form_throughout() {
        let table = build_table(12).unwrap();
        let rendered = render_table_pretty(&table);
        assert!(rendered.contains("(11,0), (0,11)"));
        // No mixed digit-string cells sneak in.
        assert!(!rendered.contains(" 35, 53 "));
        let factorized = factorize_table(&build_table(22).unwrap(), 2, 11).unwrap();
        let rendered = render_table_csv(&factorized);
        assert!(rendered.contains("(0,10,0,10)"));
    }

    #[test]
    fn classical_trace_names_the_fiber() {
        let fabric = build_classical(6, 3).unwrap();
        let path = resolve_path(&fabric, &ConnectionRequest::new(3, 2, Wavelength::new(0))).unwrap();
        let trace = render_trace(&fabric, &path);
        assert!(trace.contains("input of 1x6 WSS 3"), "{trace}");
        assert!(trace.contains("fiber f(32,23)"), "{trace}");
        assert!(trace.contains("output of 6x1 WSS 2"), "{trace}");
    }

    #[test]
    fn modular_trace_follows_the_module() {
        let fabric = build_modular(2, 3, 3).unwrap();
        let path = resolve_path(&fabric, &ConnectionRequest::new(3, 2, Wavelength::new(1))).unwrap();
        let trace = render_trace(&fabric, &path);
        let expected = "input of 1x2 WSS 10\n\
                        -> output 0 of 1x2 WSS 10\n\
                        -> input 0 of 3x3 OXC module 10\n\
                        -> output 2 of 3x3 OXC module 10\n\
                        -> input 1 of 2x1 WSS 02\n\
                        -> output of 2x1 WSS 02\n";
        assert_eq!(trace, expected);
    }

    #[test]
    fn dot_is_deterministic() {
        let fabric = build_modular(2, 2, 2).unwrap();
        assert_eq!(render_dot(&fabric), render_dot(&fabric));
        assert!(render_dot(&fabric).contains("digraph fabric"));
    }
}
