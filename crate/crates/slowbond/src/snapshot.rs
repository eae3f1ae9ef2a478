//! Compact binary store for ensemble occupancy snapshots.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! bytes 0..8   magic  b"SBSNAP01"
//! u32          n (scaling parameter)
//! u64          base seed of the ensemble
//! u32          window half-width W in sites (window is −W..W−1)
//! u32          replica count M
//! u32          snapshots per replica K
//! M × K blocks, replica-major, each:
//!     f64      snapshot time
//!     u32      run count R
//!     R × u32  run lengths (alternating vacant/occupied, starting vacant)
//! ```
//!
//! Occupancy rows are run-length encoded with the core codec, which makes
//! near-stationary configurations a few dozen bytes each. The companion
//! exporter flattens a store into a `replica,time,site` CSV of occupied
//! sites for ad-hoc inspection.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use slowbond_core::rle;
use slowbond_core::sim::{BitGrid, ReplicaTrajectory, SnapshotRecord};

use crate::HarnessError;

const MAGIC: &[u8; 8] = b"SBSNAP01";

/// In-memory image of one snapshot file.
#[derive(Debug, Clone)]
pub struct SnapshotFile {
    pub n: u32,
    pub seed: u64,
    pub window_half_width_sites: u32,
    /// `replicas[i]` holds replica `i`'s snapshots in time order.
    pub replicas: Vec<Vec<SnapshotRecord>>,
}

/// Serialize an ensemble's snapshots. All replicas must share the same
/// snapshot schedule (which [`run_ensemble`](slowbond_core::sim::run_ensemble)
/// guarantees).
pub fn write_snapshots(
    path: &Path,
    seed: u64,
    trajectories: &[ReplicaTrajectory],
) -> Result<(), HarnessError> {
    let first = trajectories
        .first()
        .and_then(|t| t.snapshots.first())
        .ok_or_else(|| HarnessError::Snapshot("nothing to write: no snapshots".into()))?;
    let n = first.n;
    let w = first.window_half_width_sites as u32;
    let snaps = trajectories[0].snapshots.len();
    for t in trajectories {
        if t.snapshots.len() != snaps {
            return Err(HarnessError::Snapshot(
                "replicas disagree on the snapshot schedule".into(),
            ));
        }
    }

    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&n.to_le_bytes())?;
    out.write_all(&seed.to_le_bytes())?;
    out.write_all(&w.to_le_bytes())?;
    out.write_all(&(trajectories.len() as u32).to_le_bytes())?;
    out.write_all(&(snaps as u32).to_le_bytes())?;
    for t in trajectories {
        for snap in &t.snapshots {
            let runs = rle::encode(snap.occupancy.iter());
            out.write_all(&snap.time.to_le_bytes())?;
            out.write_all(&(runs.len() as u32).to_le_bytes())?;
            for r in runs {
                out.write_all(&r.to_le_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn read_exact<const K: usize>(r: &mut impl Read) -> Result<[u8; K], HarnessError> {
    let mut buf = [0u8; K];
    r.read_exact(&mut buf)
        .map_err(|_| HarnessError::Snapshot("truncated snapshot file".into()))?;
    Ok(buf)
}

fn read_u32(r: &mut impl Read) -> Result<u32, HarnessError> {
    Ok(u32::from_le_bytes(read_exact::<4>(r)?))
}

/// Deserialize a snapshot file written by [`write_snapshots`].
pub fn read_snapshots(path: &Path) -> Result<SnapshotFile, HarnessError> {
    let mut r = BufReader::new(File::open(path)?);
    if &read_exact::<8>(&mut r)? != MAGIC {
        return Err(HarnessError::Snapshot(format!(
            "{}: not a snapshot file (bad magic)",
            path.display()
        )));
    }
    let n = read_u32(&mut r)?;
    let seed = u64::from_le_bytes(read_exact::<8>(&mut r)?);
    let w = read_u32(&mut r)?;
    let replicas = read_u32(&mut r)? as usize;
    let snaps = read_u32(&mut r)? as usize;
    let sites = 2 * w as usize;

    let mut all = Vec::with_capacity(replicas);
    for _ in 0..replicas {
        let mut records = Vec::with_capacity(snaps);
        for _ in 0..snaps {
            let time = f64::from_le_bytes(read_exact::<8>(&mut r)?);
            let run_count = read_u32(&mut r)? as usize;
            let mut runs = Vec::with_capacity(run_count);
            for _ in 0..run_count {
                runs.push(read_u32(&mut r)?);
            }
            let bits = rle::decode(&runs);
            if bits.len() != sites {
                return Err(HarnessError::Snapshot(format!(
                    "occupancy row decodes to {} sites, window holds {sites}",
                    bits.len()
                )));
            }
            let mut occupancy = BitGrid::new(sites);
            for (i, b) in bits.into_iter().enumerate() {
                if b {
                    occupancy.set(i);
                }
            }
            records.push(SnapshotRecord {
                time,
                n,
                window_half_width_sites: w as i64,
                occupancy,
            });
        }
        all.push(records);
    }
    let mut trailer = [0u8; 1];
    if r.read(&mut trailer)? != 0 {
        return Err(HarnessError::Snapshot(
            "trailing bytes after the last snapshot".into(),
        ));
    }
    Ok(SnapshotFile {
        n,
        seed,
        window_half_width_sites: w,
        replicas: all,
    })
}

/// Flatten a store into `replica,time,site` rows listing occupied sites.
pub fn export_occupied_csv(path: &Path, file: &SnapshotFile) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "replica,time,site")?;
    let w = file.window_half_width_sites as i64;
    for (i, records) in file.replicas.iter().enumerate() {
        for snap in records {
            for site in -w..w {
                if snap.occupied(site) {
                    writeln!(out, "{},{},{}", i, snap.time, site)?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}
