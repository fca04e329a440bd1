//! Policy checkpoints: a text manifest followed by raw parameters.
//!
//! ```text
//! ECHELON-CHECKPOINT 1
//! variant CMARL
//! config <sha256 of the chain config>
//! nets 2
//! net 0 sizes 3,64,64,43 heads 2 levels 21
//! net 1 sizes 3,64,64,22 heads 1 levels 21
//! params 12345
//! end
//! ```
//!
//! After the `end` line come `params` little-endian `f64` values, network
//! by network.

use std::io::{self, BufRead, Write};

use echelon_core::{ChainConfig, Variant};

use crate::agents::{AgentError, AgentSystem};
use crate::net::PolicyNet;

pub const MAGIC: &str = "ECHELON-CHECKPOINT 1";

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] io::Error),
    #[error("malformed checkpoint manifest: {0}")]
    Manifest(String),
    #[error("checkpoint is for variant {found}, expected {expected}")]
    Variant { expected: String, found: String },
    #[error("checkpoint was trained on a different chain config (hash {found}, expected {expected})")]
    Config { expected: String, found: String },
    #[error("checkpoint networks do not fit: {0}")]
    Shape(#[from] AgentError),
    #[error("checkpoint holds {found} parameters, manifest declares {expected}")]
    Truncated { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub variant: String,
    pub config_hash: String,
    /// `(sizes, heads, levels)` per network.
    pub nets: Vec<(Vec<usize>, usize, usize)>,
    pub params: usize,
}

pub fn write_checkpoint<W: Write>(system: &AgentSystem, cfg: &ChainConfig, mut out: W) -> io::Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "variant {}", system.variant().tag())?;
    writeln!(out, "config {}", cfg.fingerprint())?;
    writeln!(out, "nets {}", system.nets().len())?;
    let mut total = 0;
    for (i, net) in system.nets().iter().enumerate() {
        let sizes: Vec<String> = net.mlp().sizes().iter().map(|s| s.to_string()).collect();
        writeln!(out, "net {i} sizes {} heads {} levels {}", sizes.join(","), net.num_heads(), net.levels())?;
        total += net.params.len();
    }
    writeln!(out, "params {total}")?;
    writeln!(out, "end")?;
    for net in system.nets() {
        for p in &net.params {
            out.write_all(&p.to_le_bytes())?;
        }
    }
    out.flush()
}

fn bad(msg: impl Into<String>) -> CheckpointError {
    CheckpointError::Manifest(msg.into())
}

pub fn read_manifest<R: BufRead>(input: &mut R) -> Result<Manifest, CheckpointError> {
    let mut line = String::new();
    let mut next = |input: &mut R| -> Result<String, CheckpointError> {
        line.clear();
        if input.read_line(&mut line)? == 0 {
            return Err(bad("unexpected end of header"));
        }
        Ok(line.trim_end_matches(['\n', '\r']).to_string())
    };
    if next(input)? != MAGIC {
        return Err(bad("missing magic line"));
    }
    let field = |l: String, key: &str| -> Result<String, CheckpointError> {
        l.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .map(str::to_string)
            .ok_or_else(|| bad(format!("expected `{key}` line, found `{l}`")))
    };
    let variant = field(next(input)?, "variant")?;
    let config_hash = field(next(input)?, "config")?;
    let count: usize = field(next(input)?, "nets")?
        .parse()
        .map_err(|_| bad("net count is not an integer"))?;
    let mut nets = Vec::with_capacity(count);
    for i in 0..count {
        let l = next(input)?;
        let parts: Vec<&str> = l.split_whitespace().collect();
        let ok = parts.len() == 8
            && parts[0] == "net"
            && parts[1] == i.to_string()
            && parts[2] == "sizes"
            && parts[4] == "heads"
            && parts[6] == "levels";
        if !ok {
            return Err(bad(format!("bad network line `{l}`")));
        }
        let sizes = parts[3]
            .split(',')
            .map(|s| s.parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| bad(format!("bad layer sizes `{}`", parts[3])))?;
        let heads = parts[5].parse().map_err(|_| bad("bad head count"))?;
        let levels = parts[7].parse().map_err(|_| bad("bad level count"))?;
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(bad(format!("bad layer sizes `{}`", parts[3])));
        }
        nets.push((sizes, heads, levels));
    }
    let params = field(next(input)?, "params")?
        .parse()
        .map_err(|_| bad("parameter count is not an integer"))?;
    if next(input)? != "end" {
        return Err(bad("missing `end` line"));
    }
    Ok(Manifest {
        variant,
        config_hash,
        nets,
        params,
    })
}

/// Loads agents for `variant` on `cfg`, refusing any mismatch.
pub fn read_checkpoint<R: BufRead>(
    mut input: R,
    variant: Variant,
    cfg: &ChainConfig,
) -> Result<AgentSystem, CheckpointError> {
    let m = read_manifest(&mut input)?;
    if m.variant != variant.tag() {
        return Err(CheckpointError::Variant {
            expected: variant.tag().into(),
            found: m.variant,
        });
    }
    let expected = cfg.fingerprint();
    if m.config_hash != expected {
        return Err(CheckpointError::Config {
            expected,
            found: m.config_hash,
        });
    }
    let mut nets = Vec::with_capacity(m.nets.len());
    let mut declared = 0;
    for (sizes, heads, levels) in &m.nets {
        let out = *sizes.last().unwrap();
        if out != heads * levels + 1 {
            return Err(bad(format!("output width {out} does not match {heads} heads of {levels} levels")));
        }
        let net = PolicyNet::zeros(sizes[0], &sizes[1..sizes.len() - 1], *heads, *levels);
        declared += net.params.len();
        nets.push(net);
    }
    if declared != m.params {
        return Err(bad(format!("layer sizes imply {declared} parameters, header says {}", m.params)));
    }
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * m.params {
        return Err(CheckpointError::Truncated {
            expected: m.params,
            found: bytes.len() / 8,
        });
    }
    let mut chunks = bytes.chunks_exact(8);
    for net in nets.iter_mut() {
        for p in net.params.iter_mut() {
            *p = f64::from_le_bytes(chunks.next().unwrap().try_into().unwrap());
        }
    }
    Ok(AgentSystem::from_nets(variant, cfg, nets)?)
}
