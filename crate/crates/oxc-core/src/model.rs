//! Addressing algebra and fabric sizing shared by every other module.
//!
//! Endpoints of the interconnection fabric carry two-part labels: a group
//! index and a port index within that group. The modular construction
//! refines each part into an `(outer, inner)` pair by dividing by the
//! inner factor, so a flat index `x` becomes `(x / r, x % r)` and back.
//!
//! Addresses are stored as integer tuples. The concatenated digit form
//! seen in connectivity tables (e.g. `1002`) is purely a rendering of
//! small labels; it is produced only at display time and only while every
//! component fits in one digit, so sizes of ten and above stay
//! unambiguous.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which face of the fabric (or of a single node) something sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Input,
    Output,
}

impl Side {
    pub fn flipped(self) -> Side {
        match self {
            Side::Input => Side::Output,
            Side::Output => Side::Input,
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Input => write!(f, "input"),
            Side::Output => write!(f, "output"),
        }
    }
}

/// One wavelength channel, indexed `0..w`.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct Wavelength(usize);

impl Wavelength {
    pub fn new(index: usize) -> Wavelength {
        Wavelength(index)
    }

    pub fn index(self) -> usize {
        self.0
    }
}

impl std::fmt::Display for Wavelength {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "λ{}", self.0)
    }
}

/// Sizing of a fabric: `ports = outer * inner` external ports, each
/// carrying `wavelengths` channels.
///
/// A classical fabric does not use the factorization, but carrying it
/// everywhere lets every stage of the pipeline share one parameter type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FabricParams {
    ports: usize,
    outer: usize,
    inner: usize,
    wavelengths: usize,
}

impl FabricParams {
    /// Parameters for a factored fabric with `outer * inner` ports.
    pub fn factored(outer: usize, inner: usize, wavelengths: usize) -> Result<FabricParams> {
        if outer == 0 {
            return Err(Error::ZeroParameter { what: "outer factor" });
        }
        if inner == 0 {
            return Err(Error::ZeroParameter { what: "inner factor" });
        }
        if wavelengths == 0 {
            return Err(Error::ZeroParameter { what: "wavelength count" });
        }
        Ok(FabricParams {
            ports: outer * inner,
            outer,
            inner,
            wavelengths,
        })
    }

    /// Parameters for an unfactored fabric (`outer = 1`, `inner = ports`).
    pub fn monolithic(ports: usize, wavelengths: usize) -> Result<FabricParams> {
        FabricParams::factored(1, ports, wavelengths)
    }

    /// Like [`FabricParams::factored`], but checks an explicit port count
    /// against the factors.
    pub fn validated(
        ports: usize,
        outer: usize,
        inner: usize,
        wavelengths: usize,
    ) -> Result<FabricParams> {
        let params = FabricParams::factored(outer, inner, wavelengths)?;
        if params.ports != ports {
            return Err(Error::FactorMismatch {
                ports,
                outer,
                inner,
            });
        }
        Ok(params)
    }

    pub fn ports(&self) -> usize {
        self.ports
    }

    pub fn outer(&self) -> usize {
        self.outer
    }

    pub fn inner(&self) -> usize {
        self.inner
    }

    pub fn wavelengths(&self) -> usize {
        self.wavelengths
    }

    /// Splits a flat port index into its `(outer, inner)` pair.
    pub fn split_address(&self, flat: usize) -> Result<(usize, usize)> {
        if flat >= self.ports {
            return Err(Error::OutOfRange {
                what: "port index",
                value: flat,
                bound: self.ports,
            });
        }
        Ok((flat / self.inner, flat % self.inner))
    }

    /// Recombines an `(outer, inner)` pair into the flat port index.
    /// Inverse of [`FabricParams::split_address`].
    pub fn flatten_address(&self, outer_part: usize, inner_part: usize) -> Result<usize> {
        if outer_part >= self.outer {
            return Err(Error::OutOfRange {
                what: "outer component",
                value: outer_part,
                bound: self.outer,
            });
        }
        if inner_part >= self.inner {
            return Err(Error::OutOfRange {
                what: "inner component",
                value: inner_part,
                bound: self.inner,
            });
        }
        Ok(outer_part * self.inner + inner_part)
    }

    /// A checked wavelength handle for this fabric.
    pub fn wavelength(&self, index: usize) -> Result<Wavelength> {
        if index >= self.wavelengths {
            return Err(Error::OutOfRange {
                what: "wavelength index",
                value: index,
                bound: self.wavelengths,
            });
        }
        Ok(Wavelength(index))
    }
}

/// Two-part label of a shuffle endpoint: which group, and which port
/// inside the group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupPortAddress {
    pub group: usize,
    pub port: usize,
    pub side: Side,
}

impl GroupPortAddress {
    pub fn input(group: usize, port: usize) -> GroupPortAddress {
        GroupPortAddress {
            group,
            port,
            side: Side::Input,
        }
    }

    pub fn output(group: usize, port: usize) -> GroupPortAddress {
        GroupPortAddress {
            group,
            port,
            side: Side::Output,
        }
    }

    /// The address of the far end of a shuffle fiber: group and port
    /// exchanged, opposite face. An involution.
    pub fn swapped(self) -> GroupPortAddress {
        GroupPortAddress {
            group: self.port,
            port: self.group,
            side: self.side.flipped(),
        }
    }

    /// Refines both components by the inner factor.
    pub fn split(self, inner: usize) -> ModularAddress {
        ModularAddress {
            group_outer: self.group / inner,
            group_inner: self.group % inner,
            port_outer: self.port / inner,
            port_inner: self.port % inner,
            side: self.side,
        }
    }

    pub fn in_range(&self, groups: usize) -> bool {
        self.group < groups && self.port < groups
    }

    /// Digit-string form (`32`), valid only while both components are
    /// single digits; larger labels render as tuples (`(10,2)`).
    pub fn compact(&self) -> String {
        if self.group <= 9 && self.port <= 9 {
            format!("{}{}", self.group, self.port)
        } else {
            self.tuple()
        }
    }

    pub fn tuple(&self) -> String {
        format!("({},{})", self.group, self.port)
    }
}

impl std::fmt::Display for GroupPortAddress {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.compact())
    }
}

/// Four-part label of a modular shuffle endpoint. The group part and the
/// port part are each an `(outer, inner)` refinement of the flat label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModularAddress {
    pub group_outer: usize,
    pub group_inner: usize,
    pub port_outer: usize,
    pub port_inner: usize,
    pub side: Side,
}

impl ModularAddress {
    pub fn input(
        group_outer: usize,
        group_inner: usize,
        port_outer: usize,
        port_inner: usize,
    ) -> ModularAddress {
        ModularAddress {
            group_outer,
            group_inner,
            port_outer,
            port_inner,
            side: Side::Input,
        }
    }

    /// Exchanges the group pair with the port pair and flips the face.
    /// An involution.
    pub fn swapped(self) -> ModularAddress {
        ModularAddress {
            group_outer: self.port_outer,
            group_inner: self.port_inner,
            port_outer: self.group_outer,
            port_inner: self.group_inner,
            side: self.side.flipped(),
        }
    }

    /// Collapses both `(outer, inner)` pairs back to flat indices.
    /// Round-trips with [`GroupPortAddress::split`].
    pub fn flatten(self, inner: usize) -> GroupPortAddress {
        GroupPortAddress {
            group: self.group_outer * inner + self.group_inner,
            port: self.port_outer * inner + self.port_inner,
            side: self.side,
        }
    }

    pub fn in_range(&self, outer: usize, inner: usize) -> bool {
        self.group_outer < outer
            && self.port_outer < outer
            && self.group_inner < inner
            && self.port_inner < inner
    }

    pub fn compact(&self) -> String {
        if self.group_outer <= 9 && self.group_inner <= 9 && self.port_outer <= 9 && self.port_inner <= 9
        {
            format!(
                "{}{}{}{}",
                self.group_outer, self.group_inner, self.port_outer, self.port_inner
            )
        } else {
            self.tuple()
        }
    }

    pub fn tuple(&self) -> String {
        format!(
            "({},{},{},{})",
            self.group_outer, self.group_inner, self.port_outer, self.port_inner
        )
    }
}

impl std::fmt::Display for ModularAddress {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.compact())
    }
}

/// Either label form, as carried by fiber tags and table entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AddressLabel {
    Flat(GroupPortAddress),
    Modular(ModularAddress),
}

impl AddressLabel {
    pub fn side(&self) -> Side {
        match self {
            AddressLabel::Flat(a) => a.side,
            AddressLabel::Modular(a) => a.side,
        }
    }

    pub fn swapped(&self) -> AddressLabel {
        match self {
            AddressLabel::Flat(a) => AddressLabel::Flat(a.swapped()),
            AddressLabel::Modular(a) => AddressLabel::Modular(a.swapped()),
        }
    }

    pub fn compact(&self) -> String {
        match self {
            AddressLabel::Flat(a) => a.compact(),
            AddressLabel::Modular(a) => a.compact(),
        }
    }

    pub fn tuple(&self) -> String {
        match self {
            AddressLabel::Flat(a) => a.tuple(),
            AddressLabel::Modular(a) => a.tuple(),
        }
    }
}

impl std::fmt::Display for AddressLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.compact())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_matches_relabeling() {
        // Flat index 3 in a 2x3 factorization lands in the second band.
        let params = FabricParams::factored(2, 3, 3).unwrap();
        assert_eq!(params.split_address(3).unwrap(), (1, 0));
        assert_eq!(params.flatten_address(1, 0).unwrap(), 3);
    }

    #[test]
    fn split_zero_is_zero() {
        for inner in 1..6 {
            let params = FabricParams::factored(2, inner, 1).unwrap();
            assert_eq!(params.split_address(0).unwrap(), (0, 0));
        }
    }

    #[test]
    fn split_degenerate_inner_one() {
        let params = FabricParams::factored(7, 1, 1).unwrap();
        for flat in 0..7 {
            assert_eq!(params.split_address(flat).unwrap(), (flat, 0));
        }
    }

    #[test]
    fn flatten_identity_band() {
        let params = FabricParams::factored(2, 3, 1).unwrap();
        assert_eq!(params.flatten_address(0, 2).unwrap(), 2);
    }

    #[test]
    fn split_flatten_round_trip_exhaustive() {
        let params = FabricParams::factored(4, 4, 1).unwrap();
        for outer_part in 0..4 {
            for inner_part in 0..4 {
                let flat = params.flatten_address(outer_part, inner_part).unwrap();
                assert_eq!(params.split_address(flat).unwrap(), (outer_part, inner_part));
            }
        }
        for flat in 0..16 {
            let (hi, lo) = params.split_address(flat).unwrap();
            assert_eq!(params.flatten_address(hi, lo).unwrap(), flat);
        }
    }

    #[test]
    fn out_of_range_split_is_rejected() {
        let params = FabricParams::factored(2, 3, 1).unwrap();
        assert!(matches!(
            params.split_address(6),
            Err(Error::OutOfRange { value: 6, .. })
        ));
        assert!(params.flatten_address(2, 0).is_err());
        assert!(params.flatten_address(0, 3).is_err());
    }

    #[test]
    fn params_reject_zero_and_mismatch() {
        assert!(FabricParams::factored(0, 3, 1).is_err());
        assert!(FabricParams::factored(3, 0, 1).is_err());
        assert!(FabricParams::factored(3, 1, 0).is_err());
        assert!(FabricParams::validated(7, 2, 3, 1).is_err());
        assert!(FabricParams::validated(6, 2, 3, 1).is_ok());
    }

    #[test]
    fn swap_is_involution() {
        let addr = GroupPortAddress::input(3, 2);
        assert_eq!(addr.swapped(), GroupPortAddress::output(2, 3));
        assert_eq!(addr.swapped().swapped(), addr);

        let modular = ModularAddress::input(1, 0, 0, 2);
        assert_eq!(modular.swapped().swapped(), modular);
        assert_eq!(modular.swapped().group_outer, 0);
        assert_eq!(modular.swapped().group_inner, 2);
    }

    #[test]
    fn split_flatten_addresses_round_trip() {
        let addr = GroupPortAddress::input(3, 2);
        assert_eq!(addr.split(3).flatten(3), addr);
        let modular = ModularAddress::input(1, 0, 0, 2);
        assert_eq!(modular.flatten(3).split(3), modular);
        assert_eq!(modular.flatten(3), GroupPortAddress::input(3, 2));
    }

    #[test]
    fn compact_rendering_switches_to_tuples() {
        assert_eq!(GroupPortAddress::input(3, 2).compact(), "32");
        assert_eq!(GroupPortAddress::input(10, 2).compact(), "(10,2)");
        assert_eq!(ModularAddress::input(1, 0, 0, 2).compact(), "1002");
        assert_eq!(ModularAddress::input(1, 11, 0, 2).compact(), "(1,11,0,2)");
    }
}
