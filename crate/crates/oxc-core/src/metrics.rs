//! Closed-form scalability figures: cabling counts, component census,
//! and insertion-loss budgets.
//!
//! Counts are exact integer arithmetic and the cabling ratio is an exact
//! rational; only decibel values are floating point. Every analytic count
//! here is cross-checked against the constructed topologies in tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FabricParams;

/// Exact reduced fraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ratio {
    numer: u64,
    denom: u64,
}

impl Ratio {
    /// Reduced fraction `numer / denom`; the denominator must be nonzero.
    pub fn new(numer: u64, denom: u64) -> Ratio {
        assert!(denom != 0, "zero denominator");
        let common = gcd(numer, denom);
        Ratio { numer: numer / common, denom: denom / common }
    }

    pub fn numer(&self) -> u64 {
        self.numer
    }

    pub fn denom(&self) -> u64 {
        self.denom
    }

    pub fn as_f64(&self) -> f64 {
        self.numer as f64 / self.denom as f64
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.numer, self.denom)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FabricKind {
    Classical,
    Modular,
}

impl std::fmt::Display for FabricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FabricKind::Classical => write!(f, "classical"),
            FabricKind::Modular => write!(f, "modular"),
        }
    }
}

/// Discrete-cable census of one fabric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CablingReport {
    pub kind: FabricKind,
    pub ports: usize,
    pub outer: usize,
    pub inner: usize,
    /// Fibers between adjacent stages: `N^2` classical, `2Nn` modular.
    pub stage_fibers: usize,
    /// Fibers inside the modules (`n^2 * r^2` when they are open frames,
    /// zero once packaged).
    pub internal_module_fibers: usize,
    /// Cables an installer actually pulls: stage fibers, plus internal
    /// fibers when the modules are not sealed packages.
    pub total_external_cables: usize,
    /// Stage fibers relative to the classical fabric of the same size;
    /// `2/r` for the modular form.
    pub ratio_to_classical: Ratio,
}

/// Analytic cabling figures for a fabric of the given dimensions.
pub fn cabling_report(
    params: &FabricParams,
    kind: FabricKind,
    sealed_modules: bool,
) -> CablingReport {
    let ports = params.ports();
    let outer = params.outer();
    let inner = params.inner();
    match kind {
        FabricKind::Classical => CablingReport {
            kind,
            ports,
            outer,
            inner,
            stage_fibers: ports * ports,
            internal_module_fibers: 0,
            total_external_cables: ports * ports,
            ratio_to_classical: Ratio::new(1, 1),
        },
        FabricKind::Modular => {
            let stage_fibers = 2 * ports * outer;
            let internal = outer * outer * inner * inner;
            CablingReport {
                kind,
                ports,
                outer,
                inner,
                stage_fibers,
                internal_module_fibers: internal,
                total_external_cables: if sealed_modules {
                    stage_fibers
                } else {
                    stage_fibers + internal
                },
                ratio_to_classical: Ratio::new(2, inner as u64),
            }
        }
    }
}

/// Per-element loss figures. Switch loss is independent of port count;
/// a passive splitter loses `10 log10(k)` dB across `k` ways.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    pub wss_loss_db: f64,
    /// Flat allowance for fiber and connector losses along one path.
    pub extra_path_loss_db: f64,
}

impl Default for LossModel {
    fn default() -> LossModel {
        LossModel { wss_loss_db: 5.0, extra_path_loss_db: 0.0 }
    }
}

/// Splitting loss of a passive 1xk coupler in dB.
pub fn coupler_loss_db(fan: usize) -> f64 {
    assert!(fan >= 1, "coupler fan must be at least 1");
    10.0 * (fan as f64).log10()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossElement {
    Wss { fan: usize, loss_db: f64 },
    Coupler { fan: usize, loss_db: f64 },
}

impl LossElement {
    pub fn loss_db(&self) -> f64 {
        match self {
            LossElement::Wss { loss_db, .. } | LossElement::Coupler { loss_db, .. } => *loss_db,
        }
    }
}

/// Insertion-loss budget for one end-to-end path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBudget {
    pub kind: FabricKind,
    pub coupler_inputs: bool,
    pub per_wss_loss_db: f64,
    /// Switching elements crossed, in path order.
    pub elements: Vec<LossElement>,
    pub total_db: f64,
    /// The classical figure is an extrapolation from the same per-element
    /// model rather than a quoted measurement; reports label it so.
    pub comparison_estimate: bool,
}

impl LossBudget {
    pub fn stages_traversed(&self) -> usize {
        self.elements.len()
    }
}

/// Analytic loss budget of one path through the fabric.
///
/// A modular path crosses four switches (1xn, 1xr, rx1, nx1); with the
/// coupler substitution the first becomes a passive 1xn splitter. The
/// budget does not depend on the port count, which is the point.
pub fn loss_budget(
    kind: FabricKind,
    outer: usize,
    inner: usize,
    coupler_inputs: bool,
    model: &LossModel,
) -> Result<LossBudget> {
    if outer == 0 {
        return Err(Error::ZeroParameter { what: "outer factor" });
    }
    if inner == 0 {
        return Err(Error::ZeroParameter { what: "inner factor" });
    }
    let wss = |fan: usize| LossElement::Wss { fan, loss_db: model.wss_loss_db };
    let elements = match kind {
        FabricKind::Classical => {
            if coupler_inputs {
                return Err(Error::Unsupported {
                    what: "coupler substitution on the classical fabric",
                });
            }
            let ports = outer * inner;
            vec![wss(ports), wss(ports)]
        }
        FabricKind::Modular => {
            let first = if coupler_inputs {
                LossElement::Coupler { fan: outer, loss_db: coupler_loss_db(outer) }
            } else {
                wss(outer)
            };
            vec![first, wss(inner), wss(inner), wss(outer)]
        }
    };
    let total_db =
        elements.iter().map(LossElement::loss_db).sum::<f64>() + model.extra_path_loss_db;
    Ok(LossBudget {
        kind,
        coupler_inputs,
        per_wss_loss_db: model.wss_loss_db,
        elements,
        total_db,
        comparison_estimate: kind == FabricKind::Classical,
    })
}

/// Part counts of the modular fabric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentCensus {
    pub ports: usize,
    pub outer: usize,
    pub inner: usize,
    /// 1xn switches at the input stage: one per port.
    pub input_switches: usize,
    /// r x r cross-connect modules: one per block pair.
    pub oxc_modules: usize,
    /// nx1 switches at the output stage: one per port.
    pub output_switches: usize,
}

/// Analytic component census `(N, n^2, N)` of the modular fabric.
pub fn component_census(params: &FabricParams) -> ComponentCensus {
    ComponentCensus {
        ports: params.ports(),
        outer: params.outer(),
        inner: params.inner(),
        input_switches: params.ports(),
        oxc_modules: params.outer() * params.outer(),
        output_switches: params.ports(),
    }
}
