//! Request parsing and batch setup runs.
//!
//! A request file carries one connection per line: input, output, and
//! wavelength index, whitespace-separated. Endpoints are either flat
//! indices (`3 2 1`) or split `(outer,inner)` pairs (`(1,0) (0,2) 1`).
//! `#` starts a comment.

use anyhow::{anyhow, bail, Context, Result};

use oxc_core::model::{FabricParams, Wavelength};
use oxc_core::routing::{ConnectionRequest, RoutingSession};
use oxc_core::topology::FabricTopology;

/// An endpoint as written by the user.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Endpoint {
    Flat(usize),
    Split(usize, usize),
}

pub fn parse_endpoint(token: &str) -> Result<Endpoint> {
    let token = token.trim();
    if let Some(stripped) = token.strip_prefix('(') {
        let stripped = stripped
            .strip_suffix(')')
            .ok_or_else(|| anyhow!("unterminated pair: {token}"))?;
        let (hi, lo) = stripped
            .split_once(',')
            .ok_or_else(|| anyhow!("expected (outer,inner): {token}"))?;
        Ok(Endpoint::Split(
            hi.trim().parse().with_context(|| format!("bad outer index in {token}"))?,
            lo.trim().parse().with_context(|| format!("bad inner index in {token}"))?,
        ))
    } else {
        Ok(Endpoint::Flat(
            token.parse().with_context(|| format!("bad port index: {token}"))?,
        ))
    }
}

pub fn endpoint_to_flat(endpoint: Endpoint, params: &FabricParams) -> Result<usize> {
    match endpoint {
        Endpoint::Flat(index) => {
            if index >= params.ports() {
                bail!("port {index} out of range (fabric has {} ports)", params.ports());
            }
            Ok(index)
        }
        Endpoint::Split(hi, lo) => Ok(params.flatten_address(hi, lo)?),
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ScriptLine {
    pub line_number: usize,
    pub request: ConnectionRequest,
}

pub fn parse_script(text: &str, params: &FabricParams) -> Result<Vec<ScriptLine>> {
    let mut lines = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line_number = index + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 3 {
            bail!("line {line_number}: expected `input output wavelength`, got {line:?}");
        }
        let input = endpoint_to_flat(parse_endpoint(tokens[0])?, params)
            .with_context(|| format!("line {line_number}"))?;
        let output = endpoint_to_flat(parse_endpoint(tokens[1])?, params)
            .with_context(|| format!("line {line_number}"))?;
        let wavelength: usize = tokens[2]
            .parse()
            .with_context(|| format!("line {line_number}: bad wavelength index"))?;
        if wavelength >= params.wavelengths() {
            bail!(
                "line {line_number}: wavelength {wavelength} out of range (fabric carries {})",
                params.wavelengths()
            );
        }
        lines.push(ScriptLine {
            line_number,
            request: ConnectionRequest::new(input, output, Wavelength::new(wavelength)),
        });
    }
    Ok(lines)
}

/// Applies the requests in order on a fresh session. Returns the
/// rendered per-line log and the number of failed setups.
pub fn run_script(fabric: &FabricTopology, lines: &[ScriptLine]) -> (String, usize) {
    let mut session = RoutingSession::new(fabric);
    let mut log = String::new();
    let mut failures = 0;
    for line in lines {
        let request = line.request;
        match session.setup(&request) {
            Ok(id) => {
                log.push_str(&format!(
                    "line {}: ok {} ({} -> {} at {})\n",
                    line.line_number, id, request.input, request.output, request.wavelength
                ));
            }
            Err(error) => {
                failures += 1;
                log.push_str(&format!("line {}: FAILED - {}\n", line.line_number, error));
            }
        }
    }
    log.push_str(&format!(
        "{} connections in service, {failures} failed\n",
        session.state().active().len()
    ));
    (log, failures)
}
