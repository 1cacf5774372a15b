//! Binary library format.
//!
//! Layout: `MAGIC`, `u32` version, `u32` manifest length, UTF-8 JSON manifest,
//! `u64` node count, node records, then a 64-bit checksum of everything
//! before it. All integers and floats are little-endian.

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{Library, LibraryEntry, LibraryManifest, LibraryNode, NodeFront, NodeStatus};
use crate::error::{Error, Result};
use crate::moo::RealizationSet;
use crate::vehicle::ReducedState;

pub const MAGIC: &[u8; 8] = b"MOMPCLIB";
pub const FORMAT_VERSION: u32 = 1;

/// First eight bytes of the SHA-256 digest, little-endian.
pub fn checksum64(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64s(out: &mut Vec<u8>, vs: &[f64]) {
    for v in vs {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn take<'a>(input: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if input.len() < n {
        return Err(Error::Format("unexpected end of data".into()));
    }
    let (head, tail) = input.split_at(n);
    *input = tail;
    Ok(head)
}

fn get_u8(input: &mut &[u8]) -> Result<u8> {
    Ok(take(input, 1)?[0])
}

fn get_u32(input: &mut &[u8]) -> Result<u32> {
    Ok(u32::from_le_bytes(take(input, 4)?.try_into().unwrap()))
}

fn get_u64(input: &mut &[u8]) -> Result<u64> {
    Ok(u64::from_le_bytes(take(input, 8)?.try_into().unwrap()))
}

fn get_f64s(input: &mut &[u8], n: usize) -> Result<Vec<f64>> {
    let bytes = take(input, n.checked_mul(8).ok_or_else(|| Error::Format("length overflow".into()))?)?;
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

fn encode_front(front: &NodeFront, out: &mut Vec<u8>) {
    match &front.status {
        NodeStatus::Solved => out.push(0),
        NodeStatus::Infeasible { best_violation } => {
            out.push(1);
            put_f64s(out, &[*best_violation]);
        }
        NodeStatus::Failed { message } => {
            out.push(2);
            put_u32(out, message.len() as u32);
            out.extend_from_slice(message.as_bytes());
        }
    }
    put_u32(out, front.entries.len() as u32);
    for e in &front.entries {
        put_u32(out, e.controls.len() as u32);
        put_f64s(out, &e.controls);
        put_u32(out, e.sup_point.len() as u32);
        put_f64s(out, &e.sup_point);
        put_u32(out, e.worst_case.len() as u32);
        put_f64s(out, e.worst_case.raw());
    }
}

fn decode_front(input: &mut &[u8]) -> Result<NodeFront> {
    let status = match get_u8(input)? {
        0 => NodeStatus::Solved,
        1 => NodeStatus::Infeasible { best_violation: get_f64s(input, 1)?[0] },
        2 => {
            let n = get_u32(input)? as usize;
            let message = String::from_utf8(take(input, n)?.to_vec())
                .map_err(|_| Error::Format("failure message is not UTF-8".into()))?;
            NodeStatus::Failed { message }
        }
        t => return Err(Error::Format(format!("unknown node status tag {t}"))),
    };
    let count = get_u32(input)? as usize;
    let mut entries = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let nu = get_u32(input)? as usize;
        let controls = get_f64s(input, nu)?;
        let k = get_u32(input)? as usize;
        let sup_point = get_f64s(input, k)?;
        let npts = get_u32(input)? as usize;
        let worst_case = RealizationSet::new(k, get_f64s(input, npts * k)?)?;
        entries.push(LibraryEntry { controls, sup_point, worst_case });
    }
    Ok(NodeFront { status, entries })
}

/// Appends the binary record of one node.
pub fn encode_node(node: &LibraryNode, out: &mut Vec<u8>) {
    put_u64(out, node.index as u64);
    let s = &node.state;
    put_f64s(out, &[s.d, s.xi, s.v_y, s.r, s.kappa]);
    put_u64(out, node.seed);
    put_u64(out, node.budget as u64);
    encode_front(&node.robust, out);
    encode_front(&node.nominal, out);
}

/// Reads one node record, advancing `input`.
pub fn decode_node(input: &mut &[u8]) -> Result<LibraryNode> {
    let index = get_u64(input)? as usize;
    let v = get_f64s(input, 5)?;
    let state = ReducedState { d: v[0], xi: v[1], v_y: v[2], r: v[3], kappa: v[4] };
    let seed = get_u64(input)?;
    let budget = get_u64(input)? as usize;
    let robust = decode_front(input)?;
    let nominal = decode_front(input)?;
    Ok(LibraryNode { index, state, seed, budget, robust, nominal })
}

fn encode_library(library: &Library) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, FORMAT_VERSION);
    let json = library.manifest.to_json();
    put_u32(&mut out, json.len() as u32);
    out.extend_from_slice(json.as_bytes());
    put_u64(&mut out, library.nodes.len() as u64);
    for node in &library.nodes {
        encode_node(node, &mut out);
    }
    let sum = checksum64(&out);
    put_u64(&mut out, sum);
    out
}

/// Writes the library atomically (temporary file then rename). Returns the checksum.
pub fn save(library: &Library, path: &Path) -> Result<u64> {
    let bytes = encode_library(library);
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(u64::from_le_bytes(bytes[bytes.len() - 8..].try_into().unwrap()))
}

#[derive(Debug, Clone)]
pub struct LoadReport {
    pub library: Library,
    pub checksum: u64,
    /// Non-fatal issues, such as a manifest that differs from the expected one.
    pub warnings: Vec<String>,
}

/// Reads and validates a library. A manifest differing from `expected` is
/// reported as a warning, not an error.
pub fn load(path: &Path, expected: Option<&LibraryManifest>) -> Result<LoadReport> {
    let bytes = fs::read(path)?;
    if bytes.len() < 8 + 4 + 4 + 8 + 8 || &bytes[..8] != MAGIC {
        return Err(Error::Format(format!("{} is not a library file", path.display())));
    }
    let mut input = &bytes[8..];
    let version = get_u32(&mut input)?;
    if version != FORMAT_VERSION {
        return Err(Error::Version { found: version, expected: FORMAT_VERSION });
    }
    let (body, sum) = bytes.split_at(bytes.len() - 8);
    let checksum = u64::from_le_bytes(sum.try_into().unwrap());
    if checksum64(body) != checksum {
        return Err(Error::Checksum(path.to_path_buf()));
    }
    let mut input = &body[12..];
    let mlen = get_u32(&mut input)? as usize;
    let manifest: LibraryManifest = std::str::from_utf8(take(&mut input, mlen)?)
        .map_err(|_| Error::Format("manifest is not UTF-8".into()))
        .and_then(|s| serde_json::from_str(s).map_err(|e| Error::Format(format!("manifest: {e}"))))?;
    manifest.spec.validate()?;
    let count = get_u64(&mut input)? as usize;
    let total = manifest.spec.node_count();
    if count > total {
        return Err(Error::Format(format!("{count} nodes exceed grid size {total}")));
    }
    let mut nodes: Vec<LibraryNode> = Vec::with_capacity(count);
    for _ in 0..count {
        let node = decode_node(&mut input)?;
        if node.index >= total || nodes.last().is_some_and(|p| p.index >= node.index) {
            return Err(Error::Format(format!("node index {} out of order", node.index)));
        }
        if node.state != manifest.spec.node_state(node.index) {
            return Err(Error::Format(format!("node {} state does not match the grid", node.index)));
        }
        for front in [&node.robust, &node.nominal] {
            if !front.is_mutually_nondominated() {
                return Err(Error::Format(format!("node {} holds a dominated entry", node.index)));
            }
        }
        nodes.push(node);
    }
    if !input.is_empty() {
        return Err(Error::Format("trailing bytes after node records".into()));
    }
    let mut warnings = Vec::new();
    if let Some(exp) = expected {
        if exp != &manifest {
            warnings.push("library manifest differs from the requested configuration".to_string());
        }
    }
    if count < total {
        warnings.push(format!("library is partial: {count} of {total} nodes"));
    }
    Ok(LoadReport { library: Library { manifest, nodes }, checksum, warnings })
}
