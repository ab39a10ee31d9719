//! Binary snapshot of a committed context tree.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      4 bytes  "ACTW"
//! version    u16
//! depth      u32
//! bits_seen  u64
//! context    ceil(depth / 8) bytes, oldest bit first, MSB-first packing
//! nodes      u64 count, then a preorder stream of
//!            flags u8 (bit 0: child for context bit 0, bit 1: child for 1),
//!            zeros u64, ones u64
//! ```
//!
//! Log values are not stored; they are recomputed on load. Because the KT
//! log probability is a function of the counts alone and the weighting is
//! evaluated bottom-up with the same arithmetic, the recomputed values are
//! bit-identical to the saved tree's.

use std::io::{self, Read, Write};

use super::{ContextTree, CtwError, Node, NONE};

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"ACTW";
pub const SNAPSHOT_VERSION: u16 = 1;

impl ContextTree {
    /// Writes the committed state. Fails if the journal is not empty.
    pub fn write_snapshot<W: Write>(&self, w: &mut W) -> Result<(), CtwError> {
        if !self.journal.is_empty() {
            return Err(CtwError::Uncommitted(self.journal.len()));
        }
        w.write_all(&SNAPSHOT_MAGIC)?;
        w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        w.write_all(&(self.depth as u32).to_le_bytes())?;
        w.write_all(&self.bits_seen.to_le_bytes())?;
        w.write_all(&pack_bits(self.context()))?;
        let order = self.preorder();
        w.write_all(&(order.len() as u64).to_le_bytes())?;
        for v in order {
            let node = &self.nodes[v.node as usize];
            let flags = u8::from(node.child[0] != NONE) | (u8::from(node.child[1] != NONE) << 1);
            w.write_all(&[flags])?;
            w.write_all(&u64::from(node.zeros).to_le_bytes())?;
            w.write_all(&u64::from(node.ones).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_snapshot<R: Read>(r: &mut R) -> Result<Self, CtwError> {
        let mut magic = [0u8; 4];
        read_exact(r, &mut magic)?;
        if magic != SNAPSHOT_MAGIC {
            return Err(CtwError::BadMagic);
        }
        let version = u16::from_le_bytes(read_array(r)?);
        if version != SNAPSHOT_VERSION {
            return Err(CtwError::UnsupportedVersion(version));
        }
        let depth = u32::from_le_bytes(read_array(r)?) as usize;
        let mut tree = ContextTree::new(depth)?;
        tree.bits_seen = u64::from_le_bytes(read_array(r)?);
        let mut packed = vec![0u8; depth.div_ceil(8)];
        read_exact(r, &mut packed)?;
        tree.context = unpack_bits(&packed, depth);

        let count = u64::from_le_bytes(read_array(r)?);
        if count == 0 {
            return Err(CtwError::Corrupt("node stream is empty".into()));
        }
        tree.nodes.clear();
        // (node index, depth) for nodes whose children are still to be read,
        // with the child slot to fill next.
        let mut pending: Vec<(u32, usize, [bool; 2])> = Vec::new();
        for i in 0..count {
            let mut flags = [0u8; 1];
            read_exact(r, &mut flags)?;
            let flags = flags[0];
            if flags > 3 {
                return Err(CtwError::Corrupt(format!("invalid node flags {flags:#x}")));
            }
            let zeros = u64::from_le_bytes(read_array(r)?);
            let ones = u64::from_le_bytes(read_array(r)?);
            let (zeros, ones) = match (u32::try_from(zeros), u32::try_from(ones)) {
                (Ok(z), Ok(o)) => (z, o),
                _ => return Err(CtwError::Corrupt("count exceeds supported range".into())),
            };
            let idx = tree.nodes.len() as u32;
            tree.nodes.push(Node {
                zeros,
                ones,
                ..Node::FRESH
            });
            let depth_here = if i == 0 {
                0
            } else {
                // Attach to the nearest pending parent that still expects a child.
                loop {
                    let Some(top) = pending.last_mut() else {
                        return Err(CtwError::Corrupt("node without a parent".into()));
                    };
                    if let Some(slot) = (0..2).find(|&s| top.2[s]) {
                        top.2[slot] = false;
                        let (parent, pd) = (top.0, top.1);
                        tree.nodes[parent as usize].child[slot] = idx;
                        break pd + 1;
                    }
                    pending.pop();
                }
            };
            if depth_here > depth || (depth_here == depth && flags != 0) {
                return Err(CtwError::Corrupt("node deeper than the tree depth".into()));
            }
            pending.push((idx, depth_here, [flags & 1 != 0, flags & 2 != 0]));
        }
        if pending.iter().any(|p| p.2.iter().any(|&s| s)) {
            return Err(CtwError::Corrupt("node stream ends before all children".into()));
        }

        // Recompute weighted probabilities bottom-up (reverse preorder
        // visits children before parents).
        let order = tree.preorder();
        if order.len() as u64 != count {
            return Err(CtwError::Corrupt("node stream is not a single tree".into()));
        }
        for v in order.iter().rev() {
            let pw = tree.weighted(v.node as usize, v.depth);
            if v.parent == NONE {
                tree.root_pw = pw;
            } else {
                tree.nodes[v.parent as usize].child_pw[v.slot] = pw;
            }
        }
        tree.check_invariants().map_err(CtwError::Corrupt)?;
        Ok(tree)
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<(), CtwError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => CtwError::Corrupt("truncated snapshot".into()),
        _ => CtwError::Io(e),
    })
}

fn read_array<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N], CtwError> {
    let mut buf = [0u8; N];
    read_exact(r, &mut buf)?;
    Ok(buf)
}

fn pack_bits(bits: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            out[i / 8] |= 0x80 >> (i % 8);
        }
    }
    out
}

fn unpack_bits(bytes: &[u8], len: usize) -> Vec<bool> {
    (0..len).map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0).collect()
}
