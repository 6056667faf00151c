//! File formats: topology JSON, tensor JSON, `TTN1` binary tensors, network
//! bundles, and the canonical JSON writer used for every output.
//!
//! Canonical JSON is compact, keeps struct field order, and prints every
//! float with 17 significant digits (`{:.16e}`), so outputs are
//! byte-reproducible and parse back to the identical `f64`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{local_axes, TreeNetwork};
use crate::tensor::{AxisLabel, DenseTensor};
use crate::topology::{TopologyFile, TreeTopology, VertexId};

pub const BINARY_MAGIC: &[u8; 4] = b"TTN1";

struct FixedDigits;

impl serde_json::ser::Formatter for FixedDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Canonical JSON bytes, newline-terminated.
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedDigits);
    value
        .serialize(&mut ser)
        .expect("in-memory serialization of plain data cannot fail");
    out.push(b'\n');
    out
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse<'a, T: Deserialize<'a>>(bytes: &'a [u8], context: &Path) -> Result<T> {
    serde_json::from_slice(bytes).map_err(|source| Error::Json {
        context: context.display().to_string(),
        source,
    })
}

pub fn read_topology(path: &Path) -> Result<TreeTopology> {
    let file: TopologyFile = parse(&read_file(path)?, path)?;
    TreeTopology::try_from(file)
}

pub fn write_topology(path: &Path, topology: &TreeTopology) -> Result<()> {
    write_file(path, &to_canonical_json(&TopologyFile::from(topology)))
}

/// JSON form of a tensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorFile {
    pub dims: Vec<usize>,
    pub labels: Vec<AxisLabel>,
    pub data: Vec<f64>,
}

impl From<&DenseTensor> for TensorFile {
    fn from(t: &DenseTensor) -> Self {
        TensorFile {
            dims: t.dims().to_vec(),
            labels: t.labels().to_vec(),
            data: t.data().to_vec(),
        }
    }
}

impl TryFrom<TensorFile> for DenseTensor {
    type Error = Error;

    fn try_from(f: TensorFile) -> Result<Self> {
        DenseTensor::new(f.dims, f.labels, f.data)
    }
}

pub fn read_tensor_json(path: &Path) -> Result<DenseTensor> {
    let file: TensorFile = parse(&read_file(path)?, path)?;
    DenseTensor::try_from(file)
}

/// `TTN1` encoding: magic, `u32` order, `u32` dims, then `f64` data, all
/// little-endian, data row-major.
pub fn encode_binary(dims: &[usize], data: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 4 * dims.len() + 8 * data.len());
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for &d in dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &x in data {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

/// Decodes `TTN1` bytes into `(dims, data)`.
pub fn decode_binary(bytes: &[u8]) -> Result<(Vec<usize>, Vec<f64>)> {
    let bad = |msg: &str| Error::BadBinary(msg.to_string());
    if bytes.len() < 8 || &bytes[..4] != BINARY_MAGIC {
        return Err(bad("missing TTN1 magic"));
    }
    let u32_at = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes")) as usize;
    let order = u32_at(4);
    let header = 8 + 4 * order;
    if bytes.len() < header {
        return Err(bad("truncated header"));
    }
    let dims: Vec<usize> = (0..order).map(|k| u32_at(8 + 4 * k)).collect();
    let len = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| bad("dims overflow"))?;
    if bytes.len() != header + 8 * len {
        return Err(Error::BadBinary(format!(
            "expected {} data bytes, found {}",
            8 * len,
            bytes.len() - header
        )));
    }
    let data = bytes[header..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((dims, data))
}

/// Writes `t` as JSON, or as `TTN1` when the path ends in `.ttn`.
pub fn write_tensor(path: &Path, t: &DenseTensor) -> Result<()> {
    if path.extension().is_some_and(|e| e == "ttn") {
        write_file(path, &encode_binary(t.dims(), t.data()))
    } else {
        write_file(path, &to_canonical_json(&TensorFile::from(t)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TensorEntry {
    Inline(TensorFile),
    /// Binary side file, resolved relative to the manifest. Without labels
    /// the canonical local layout (physical axis, then bonds by ascending
    /// neighbour) is assumed.
    File {
        file: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<AxisLabel>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleFile {
    pub topology: TopologyFile,
    pub tensors: BTreeMap<String, TensorEntry>,
}

/// Reads a network bundle; side files are resolved against `base_dir`.
pub fn network_from_bundle(bundle: BundleFile, base_dir: &Path) -> Result<TreeNetwork> {
    let topology = TreeTopology::try_from(bundle.topology)?;
    let mut tensors = BTreeMap::new();
    for (key, entry) in bundle.tensors {
        let id: u32 = key
            .parse()
            .map_err(|_| Error::AxisMismatch(format!("tensor key {key:?} is not a vertex id")))?;
        let v = VertexId(id);
        let t = match entry {
            TensorEntry::Inline(f) => DenseTensor::try_from(f)?,
            TensorEntry::File { file, labels } => {
                let path = base_dir.join(file);
                let (dims, data) = decode_binary(&read_file(&path)?)?;
                let labels = match labels {
                    Some(l) => l,
                    None if topology.contains(v) => local_axes(&topology, v)?.into_iter().map(|a| a.0).collect(),
                    None => return Err(Error::UnknownVertex(v)),
                };
                DenseTensor::new(dims, labels, data)?
            }
        };
        tensors.insert(v, t);
    }
    TreeNetwork::new(topology, tensors)
}

pub fn read_bundle(path: &Path) -> Result<TreeNetwork> {
    let bundle: BundleFile = parse(&read_file(path)?, path)?;
    network_from_bundle(bundle, path.parent().unwrap_or(Path::new(".")))
}

/// Writes the bundle manifest to `path`. With `binary`, each local tensor
/// goes to a side file `<stem>.v<id>.ttn` next to the manifest.
pub fn write_bundle(path: &Path, net: &TreeNetwork, binary: bool) -> Result<()> {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("bundle");
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tensors = BTreeMap::new();
    for (v, t) in net.tensors() {
        let entry = if binary {
            let name = PathBuf::from(format!("{stem}.v{v}.ttn"));
            write_file(&dir.join(&name), &encode_binary(t.dims(), t.data()))?;
            TensorEntry::File {
                file: name,
                labels: Some(t.labels().to_vec()),
            }
        } else {
            TensorEntry::Inline(TensorFile::from(t))
        };
        tensors.insert(v.to_string(), entry);
    }
    let bundle = BundleFile {
        topology: TopologyFile::from(net.topology()),
        tensors,
    };
    write_file(path, &to_canonical_json(&bundle))
}

/// Manifest with every tensor inline.
pub fn inline_bundle(net: &TreeNetwork) -> BundleFile {
    BundleFile {
        topology: TopologyFile::from(net.topology()),
        tensors: net
            .tensors()
            .iter()
            .map(|(v, t)| (v.to_string(), TensorEntry::Inline(TensorFile::from(t))))
            .collect(),
    }
}
