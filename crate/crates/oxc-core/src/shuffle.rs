//! Shuffle interconnection networks, their connectivity tables, and the
//! factorized modular form built from small sub-networks.
//!
//! A shuffle of size `N` joins `N` groups of `N` inputs to `N` groups of
//! `N` outputs with one fiber per group pair: input `(p, q)` connects to
//! output `(q, p)`. The modular form realizes the same connectivity with
//! `n^2` shuffles of size `r` (`N = n * r`): each fiber dips through
//! exactly one sub-network, and erasing the band prefixes recovers the
//! flat pattern.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AddressLabel, GroupPortAddress, ModularAddress, Side};

/// Size descriptor of a shuffle network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShuffleForm {
    Monolithic { groups: usize },
    Factorized { outer: usize, inner: usize },
}

impl ShuffleForm {
    pub fn groups(&self) -> usize {
        match *self {
            ShuffleForm::Monolithic { groups } => groups,
            ShuffleForm::Factorized { outer, inner } => outer * inner,
        }
    }
}

/// Transit of a fiber through one sub-network of the factorized form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubnetHop {
    /// `(in_block, out_block)` position of the sub-network.
    pub block: (usize, usize),
    /// Entry point, addressed within the sub-network.
    pub entry: GroupPortAddress,
    /// Exit point, addressed within the sub-network.
    pub exit: GroupPortAddress,
}

/// One fiber, identified canonically by its input-side address.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShuffleFiber {
    pub input: AddressLabel,
    pub output: AddressLabel,
    /// Present on factorized fibers: which sub-network carries it.
    pub via: Option<SubnetHop>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShuffleNetwork {
    form: ShuffleForm,
    fibers: Vec<ShuffleFiber>,
}

impl ShuffleNetwork {
    pub fn form(&self) -> ShuffleForm {
        self.form
    }

    pub fn fibers(&self) -> &[ShuffleFiber] {
        &self.fibers
    }

    /// Mutable access for fault-injection experiments. A network altered
    /// through this handle will normally fail [`check_equivalence`].
    pub fn fibers_mut(&mut self) -> &mut Vec<ShuffleFiber> {
        &mut self.fibers
    }

    pub fn fiber_by_input(&self, input: &AddressLabel) -> Option<&ShuffleFiber> {
        self.fibers.iter().find(|fiber| fiber.input == *input)
    }

    /// Extracts one embedded sub-network of the factorized form as a
    /// monolithic shuffle over its own local addresses.
    pub fn subnetwork(&self, block: (usize, usize)) -> Option<ShuffleNetwork> {
        let ShuffleForm::Factorized { inner, .. } = self.form else {
            return None;
        };
        let fibers: Vec<ShuffleFiber> = self
            .fibers
            .iter()
            .filter(|fiber| fiber.via.map(|hop| hop.block) == Some(block))
            .map(|fiber| {
                let hop = fiber.via.expect("filtered on via");
                ShuffleFiber {
                    input: AddressLabel::Flat(hop.entry),
                    output: AddressLabel::Flat(hop.exit),
                    via: None,
                }
            })
            .collect();
        if fibers.is_empty() {
            return None;
        }
        Some(ShuffleNetwork {
            form: ShuffleForm::Monolithic { groups: inner },
            fibers,
        })
    }
}

/// Builds the flat shuffle of size `groups`: one fiber `(p, q) -> (q, p)`
/// per group pair, `groups^2` in total.
pub fn build_shuffle(groups: usize) -> Result<ShuffleNetwork> {
    if groups == 0 {
        return Err(Error::ZeroParameter { what: "group count" });
    }
    let mut fibers = Vec::with_capacity(groups * groups);
    for group in 0..groups {
        for port in 0..groups {
            let input = GroupPortAddress::input(group, port);
            fibers.push(ShuffleFiber {
                input: AddressLabel::Flat(input),
                output: AddressLabel::Flat(input.swapped()),
                via: None,
            });
        }
    }
    Ok(ShuffleNetwork {
        form: ShuffleForm::Monolithic { groups },
        fibers,
    })
}

/// Builds the factorized shuffle for `outer * inner` groups out of
/// `outer^2` sub-networks of size `inner`.
///
/// Each input group splits into `outer` subgroups of `inner` ports; the
/// subgroup facing block `b` is wired to one input group of sub-network
/// `(a, b)`, and symmetrically on the output side. End-to-end fibers are
/// derived by walking that wiring through the sub-networks, so the fiber
/// list reflects the construction rather than a closed-form shortcut.
pub fn build_modular_shuffle(outer: usize, inner: usize) -> Result<ShuffleNetwork> {
    if outer == 0 {
        return Err(Error::ZeroParameter { what: "outer factor" });
    }
    if inner == 0 {
        return Err(Error::ZeroParameter { what: "inner factor" });
    }
    let template = build_shuffle(inner)?;
    let mut fibers = Vec::with_capacity(outer * outer * inner * inner);
    // Sub-networks are visited in their conventional vertical layout
    // order, in_block * outer + out_block ascending.
    for in_block in 0..outer {
        for out_block in 0..outer {
            for local in template.fibers() {
                let AddressLabel::Flat(entry) = local.input else {
                    unreachable!("monolithic template has flat labels");
                };
                let exit = entry.swapped();
                // Entry (g, p) of this sub-network is fed by port p of
                // input subgroup (in_block, g, out_block); the exit is
                // picked up by the mirrored output subgroup.
                let input = ModularAddress {
                    group_outer: in_block,
                    group_inner: entry.group,
                    port_outer: out_block,
                    port_inner: entry.port,
                    side: Side::Input,
                };
                let output = ModularAddress {
                    group_outer: out_block,
                    group_inner: exit.group,
                    port_outer: in_block,
                    port_inner: exit.port,
                    side: Side::Output,
                };
                fibers.push(ShuffleFiber {
                    input: AddressLabel::Modular(input),
                    output: AddressLabel::Modular(output),
                    via: Some(SubnetHop {
                        block: (in_block, out_block),
                        entry,
                        exit,
                    }),
                });
            }
        }
    }
    Ok(ShuffleNetwork {
        form: ShuffleForm::Factorized { outer, inner },
        fibers,
    })
}

/// Row or column heading of a connectivity table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupLabel {
    Flat(usize),
    Split { outer: usize, inner: usize },
}

impl GroupLabel {
    pub fn compact(&self) -> String {
        match *self {
            GroupLabel::Flat(index) => format!("{index}"),
            GroupLabel::Split { outer, inner } => {
                if outer <= 9 && inner <= 9 {
                    format!("{outer}{inner}")
                } else {
                    format!("({outer},{inner})")
                }
            }
        }
    }

    pub fn render_as(&self, digit_strings: bool) -> String {
        match *self {
            GroupLabel::Flat(index) => format!("{index}"),
            GroupLabel::Split { outer, inner } => {
                if digit_strings {
                    format!("{outer}{inner}")
                } else {
                    format!("({outer},{inner})")
                }
            }
        }
    }
}

/// Flavor of a connectivity table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableFlavor {
    Monolithic { groups: usize },
    Factorized { outer: usize, inner: usize },
}

/// Cell content: the address pair of the fiber joining a row's input
/// group to a column's output group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableEntry {
    pub input: AddressLabel,
    pub output: AddressLabel,
}

impl TableEntry {
    /// Canonical cell rendering, e.g. `32, 23`.
    pub fn render(&self) -> String {
        format!("{}, {}", self.input.compact(), self.output.compact())
    }

    /// Cell rendering with an explicit digit-string/tuple choice, so a
    /// whole table keeps one consistent form.
    pub fn render_as(&self, digit_strings: bool) -> String {
        if digit_strings {
            self.render()
        } else {
            format!("{}, {}", self.input.tuple(), self.output.tuple())
        }
    }
}

/// Dense table with one entry per (input group, output group) pair.
///
/// Density gives the one-fiber-per-pair requirement by construction; the
/// swap requirement and the sub-table structure are checked by
/// [`ConnectivityTable::requirement_violations`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectivityTable {
    flavor: TableFlavor,
    rows: Vec<GroupLabel>,
    cols: Vec<GroupLabel>,
    /// Row-major, `rows.len() * cols.len()` entries.
    cells: Vec<TableEntry>,
}

impl ConnectivityTable {
    pub fn flavor(&self) -> TableFlavor {
        self.flavor
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[GroupLabel] {
        &self.rows
    }

    pub fn cols(&self) -> &[GroupLabel] {
        &self.cols
    }

    pub fn entry(&self, row: usize, col: usize) -> Option<&TableEntry> {
        if row >= self.rows.len() || col >= self.cols.len() {
            return None;
        }
        Some(&self.cells[row * self.cols.len() + col])
    }

    /// Whether every label component in this table fits a single digit;
    /// renderers fall back to tuple form for the whole table otherwise.
    pub fn fits_digit_strings(&self) -> bool {
        match self.flavor {
            TableFlavor::Monolithic { groups } => groups <= 10,
            TableFlavor::Factorized { outer, inner } => outer <= 10 && inner <= 10,
        }
    }

    /// The `inner x inner` sub-table at band `(in_block, out_block)` of a
    /// factorized table, with the band prefixes erased. Each sub-table is
    /// expected to reproduce the monolithic pattern of its size.
    pub fn sub_table(&self, in_block: usize, out_block: usize) -> Result<ConnectivityTable> {
        let TableFlavor::Factorized { outer, inner } = self.flavor else {
            return Err(Error::Unsupported {
                what: "sub-table of a monolithic table",
            });
        };
        if in_block >= outer || out_block >= outer {
            return Err(Error::OutOfRange {
                what: "band index",
                value: in_block.max(out_block),
                bound: outer,
            });
        }
        let mut cells = Vec::with_capacity(inner * inner);
        for row in 0..inner {
            for col in 0..inner {
                let entry = self
                    .entry(in_block * inner + row, out_block * inner + col)
                    .expect("dense table");
                cells.push(TableEntry {
                    input: erase_prefix(entry.input),
                    output: erase_prefix(entry.output),
                });
            }
        }
        Ok(ConnectivityTable {
            flavor: TableFlavor::Monolithic { groups: inner },
            rows: (0..inner).map(GroupLabel::Flat).collect(),
            cols: (0..inner).map(GroupLabel::Flat).collect(),
            cells,
        })
    }

    /// Undoes the factorization: recombines every split label into its
    /// flat index. Reflattening a factorized table reproduces the
    /// original monolithic table exactly.
    pub fn reflatten(&self) -> Result<ConnectivityTable> {
        let TableFlavor::Factorized { outer, inner } = self.flavor else {
            return Err(Error::Unsupported {
                what: "reflattening a monolithic table",
            });
        };
        let groups = outer * inner;
        let flatten_label = |label: GroupLabel| match label {
            GroupLabel::Flat(index) => index,
            GroupLabel::Split { outer: hi, inner: lo } => hi * inner + lo,
        };
        let flatten_cell = |label: AddressLabel| match label {
            AddressLabel::Flat(a) => AddressLabel::Flat(a),
            AddressLabel::Modular(a) => AddressLabel::Flat(a.flatten(inner)),
        };
        Ok(ConnectivityTable {
            flavor: TableFlavor::Monolithic { groups },
            rows: self
                .rows
                .iter()
                .map(|&label| GroupLabel::Flat(flatten_label(label)))
                .collect(),
            cols: self
                .cols
                .iter()
                .map(|&label| GroupLabel::Flat(flatten_label(label)))
                .collect(),
            cells: self
                .cells
                .iter()
                .map(|entry| TableEntry {
                    input: flatten_cell(entry.input),
                    output: flatten_cell(entry.output),
                })
                .collect(),
        })
    }

    /// Checks the table requirements: every cell's output address must be
    /// the swap of its input address, and in a factorized table every
    /// band must reproduce the monolithic pattern of the inner size.
    /// (One entry per group pair holds by dense construction.)
    pub fn requirement_violations(&self) -> Vec<String> {
        let mut problems = Vec::new();
        for row in 0..self.rows.len() {
            for col in 0..self.cols.len() {
                let entry = self.entry(row, col).expect("dense table");
                if entry.output != entry.input.swapped() {
                    problems.push(format!(
                        "cell ({row},{col}): output {} is not the swap of input {}",
                        entry.output.compact(),
                        entry.input.compact()
                    ));
                }
            }
        }
        if let TableFlavor::Factorized { outer, inner } = self.flavor {
            if let Ok(reference) = build_table(inner) {
                for in_block in 0..outer {
                    for out_block in 0..outer {
                        match self.sub_table(in_block, out_block) {
                            Ok(sub) if sub.cells == reference.cells => {}
                            Ok(_) => problems.push(format!(
                                "band ({in_block},{out_block}) does not match the {inner}x{inner} pattern"
                            )),
                            Err(error) => problems.push(format!(
                                "band ({in_block},{out_block}): {error}"
                            )),
                        }
                    }
                }
            }
        }
        problems
    }
}

fn erase_prefix(label: AddressLabel) -> AddressLabel {
    match label {
        AddressLabel::Flat(a) => AddressLabel::Flat(a),
        AddressLabel::Modular(a) => AddressLabel::Flat(GroupPortAddress {
            group: a.group_inner,
            port: a.port_inner,
            side: a.side,
        }),
    }
}

/// Builds the connectivity table of the flat shuffle: cell `(p, q)`
/// holds the pair `pq, qp`.
pub fn build_table(groups: usize) -> Result<ConnectivityTable> {
    if groups == 0 {
        return Err(Error::ZeroParameter { what: "group count" });
    }
    let mut cells = Vec::with_capacity(groups * groups);
    for row in 0..groups {
        for col in 0..groups {
            let input = GroupPortAddress::input(row, col);
            cells.push(TableEntry {
                input: AddressLabel::Flat(input),
                output: AddressLabel::Flat(input.swapped()),
            });
        }
    }
    Ok(ConnectivityTable {
        flavor: TableFlavor::Monolithic { groups },
        rows: (0..groups).map(GroupLabel::Flat).collect(),
        cols: (0..groups).map(GroupLabel::Flat).collect(),
        cells,
    })
}

/// Applies the modulo transform to a monolithic table: row `p` becomes
/// `(p / inner, p mod inner)`, likewise columns, and every cell content
/// is re-labelled with the corresponding four-part addresses.
pub fn factorize_table(
    table: &ConnectivityTable,
    outer: usize,
    inner: usize,
) -> Result<ConnectivityTable> {
    let TableFlavor::Monolithic { groups } = table.flavor else {
        return Err(Error::Unsupported {
            what: "factorizing an already factorized table",
        });
    };
    if outer == 0 {
        return Err(Error::ZeroParameter { what: "outer factor" });
    }
    if inner == 0 {
        return Err(Error::ZeroParameter { what: "inner factor" });
    }
    if outer * inner != groups {
        return Err(Error::FactorMismatch {
            ports: groups,
            outer,
            inner,
        });
    }
    let split_label = |label: GroupLabel| match label {
        GroupLabel::Flat(index) => GroupLabel::Split {
            outer: index / inner,
            inner: index % inner,
        },
        split @ GroupLabel::Split { .. } => split,
    };
    let split_cell = |label: AddressLabel| match label {
        AddressLabel::Flat(a) => AddressLabel::Modular(a.split(inner)),
        modular @ AddressLabel::Modular(_) => modular,
    };
    Ok(ConnectivityTable {
        flavor: TableFlavor::Factorized { outer, inner },
        rows: table.rows.iter().map(|&label| split_label(label)).collect(),
        cols: table.cols.iter().map(|&label| split_label(label)).collect(),
        cells: table
            .cells
            .iter()
            .map(|entry| TableEntry {
                input: split_cell(entry.input),
                output: split_cell(entry.output),
            })
            .collect(),
    })
}

/// Evidence of a factorized network failing connectivity equivalence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EquivalenceWitness {
    /// The network is not a factorized build for the given factors.
    WrongForm { found: ShuffleForm },
    /// A fiber carries a label outside the `(outer, inner)` ranges or of
    /// the wrong shape.
    InvalidLabel { fiber: usize, label: AddressLabel },
    /// A fiber whose output is not the swap of its input; its ends do not
    /// belong to the same fiber of the flat shuffle.
    RewiredFiber {
        fiber: usize,
        input: AddressLabel,
        output: AddressLabel,
    },
    /// Two fibers map onto the same flat group pair.
    DuplicatePair { input_group: usize, output_group: usize },
    /// No fiber maps onto this flat group pair.
    MissingPair { input_group: usize, output_group: usize },
}

impl std::fmt::Display for EquivalenceWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EquivalenceWitness::WrongForm { found } => {
                write!(f, "network form {found:?} does not match the requested factors")
            }
            EquivalenceWitness::InvalidLabel { fiber, label } => {
                write!(f, "fiber {fiber} carries out-of-range label {}", label.compact())
            }
            EquivalenceWitness::RewiredFiber { fiber, input, output } => write!(
                f,
                "fiber {fiber} joins {} to {}, which is not a swap pair",
                input.compact(),
                output.compact()
            ),
            EquivalenceWitness::DuplicatePair { input_group, output_group } => write!(
                f,
                "group pair ({input_group},{output_group}) is covered by more than one fiber"
            ),
            EquivalenceWitness::MissingPair { input_group, output_group } => {
                write!(f, "group pair ({input_group},{output_group}) is not covered")
            }
        }
    }
}

/// Verdict of the connectivity-equivalence check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EquivalenceOutcome {
    Equivalent,
    Faulty(EquivalenceWitness),
}

impl EquivalenceOutcome {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, EquivalenceOutcome::Equivalent)
    }

    pub fn witness(&self) -> Option<&EquivalenceWitness> {
        match self {
            EquivalenceOutcome::Equivalent => None,
            EquivalenceOutcome::Faulty(witness) => Some(witness),
        }
    }
}

/// Decides whether a factorized network is connectivity-equivalent to
/// the flat shuffle of size `outer * inner`.
///
/// The check is a pure address computation: every fiber must be a swap
/// pair of in-range four-part labels, and flattening the input labels
/// (`(a, p') -> a * inner + p'`, likewise the port pair) must hit every
/// flat group pair exactly once. Failures return a concrete witness so
/// fault-injection tests can assert localization.
pub fn check_equivalence(network: &ShuffleNetwork, outer: usize, inner: usize) -> EquivalenceOutcome {
    if network.form() != (ShuffleForm::Factorized { outer, inner }) {
        return EquivalenceOutcome::Faulty(EquivalenceWitness::WrongForm {
            found: network.form(),
        });
    }
    let groups = outer * inner;
    let mut covered: Vec<Option<usize>> = vec![None; groups * groups];
    for (index, fiber) in network.fibers().iter().enumerate() {
        let AddressLabel::Modular(input) = fiber.input else {
            return EquivalenceOutcome::Faulty(EquivalenceWitness::InvalidLabel {
                fiber: index,
                label: fiber.input,
            });
        };
        if !input.in_range(outer, inner) || input.side != Side::Input {
            return EquivalenceOutcome::Faulty(EquivalenceWitness::InvalidLabel {
                fiber: index,
                label: fiber.input,
            });
        }
        if fiber.output != fiber.input.swapped() {
            return EquivalenceOutcome::Faulty(EquivalenceWitness::RewiredFiber {
                fiber: index,
                input: fiber.input,
                output: fiber.output,
            });
        }
        let flat = input.flatten(inner);
        let slot = flat.group * groups + flat.port;
        if covered[slot].is_some() {
            return EquivalenceOutcome::Faulty(EquivalenceWitness::DuplicatePair {
                input_group: flat.group,
                output_group: flat.port,
            });
        }
        covered[slot] = Some(index);
    }
    for (slot, entry) in covered.iter().enumerate() {
        if entry.is_none() {
            return EquivalenceOutcome::Faulty(EquivalenceWitness::MissingPair {
                input_group: slot / groups,
                output_group: slot % groups,
            });
        }
    }
    EquivalenceOutcome::Equivalent
}
