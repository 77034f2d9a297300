//! Binary ensemble files.
//!
//! Layout (little endian): magic `WLC1`, `n_L`, `N`, `d`, `seed` as `u64`,
//! a 16-byte sampler tag, `n_L * N * d` doubles (loop-major, point-major,
//! coordinate-minor) and a CRC-64/XZ of everything before it.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crc::{Crc, CRC_64_XZ};

use crate::error::{Error, Result};
use crate::loops::UnitLoopEnsemble;

pub const MAGIC: [u8; 4] = *b"WLC1";
const HEADER_LEN: usize = 4 + 4 * 8 + 16;
const CRC64: Crc<u64> = Crc::<u64>::new(&CRC_64_XZ);

pub fn write_ensemble(ensemble: &UnitLoopEnsemble, path: impl AsRef<Path>) -> Result<u64> {
    let mut out = BufWriter::new(File::create(path)?);
    let mut digest = CRC64.digest();
    let mut put = |bytes: &[u8], out: &mut BufWriter<File>| -> Result<()> {
        digest.update(bytes);
        out.write_all(bytes)?;
        Ok(())
    };
    put(&MAGIC, &mut out)?;
    for v in [ensemble.n_loops as u64, ensemble.n_points as u64, ensemble.dim as u64, ensemble.seed] {
        put(&v.to_le_bytes(), &mut out)?;
    }
    put(&ensemble.sampler, &mut out)?;
    let mut buf = Vec::with_capacity(8 * 8192);
    for chunk in ensemble.points.chunks(8192) {
        buf.clear();
        buf.extend(chunk.iter().flat_map(|v| v.to_le_bytes()));
        put(&buf, &mut out)?;
    }
    let checksum = digest.finalize();
    out.write_all(&checksum.to_le_bytes())?;
    out.flush()?;
    Ok(checksum)
}

pub fn read_ensemble(path: impl AsRef<Path>) -> Result<UnitLoopEnsemble> {
    let file = File::open(path)?;
    let file_len = file.metadata()?.len();
    let mut input = BufReader::new(file);
    let mut digest = CRC64.digest();

    let mut header = [0u8; HEADER_LEN];
    input
        .read_exact(&mut header)
        .map_err(|_| Error::MalformedFile("file shorter than the header".into()))?;
    digest.update(&header);
    if header[..4] != MAGIC {
        return Err(Error::MalformedFile("bad magic".into()));
    }
    let field = |i: usize| u64::from_le_bytes(header[4 + 8 * i..12 + 8 * i].try_into().unwrap());
    let (n_loops, n_points, dim, seed) = (field(0), field(1), field(2), field(3));
    let mut sampler = [0u8; 16];
    sampler.copy_from_slice(&header[36..52]);

    if n_loops == 0 || n_points < 2 || !(1..=3).contains(&dim) {
        return Err(Error::MalformedFile(format!(
            "implausible header n_L={n_loops} N={n_points} d={dim}"
        )));
    }
    let count = n_loops
        .checked_mul(n_points)
        .and_then(|c| c.checked_mul(dim))
        .ok_or_else(|| Error::MalformedFile("header sizes overflow".into()))?;
    let expected_len = count
        .checked_mul(8)
        .and_then(|b| b.checked_add((HEADER_LEN + 8) as u64));
    if expected_len != Some(file_len) {
        return Err(Error::MalformedFile(format!(
            "file has {file_len} bytes, header n_L={n_loops} N={n_points} d={dim} implies {}",
            expected_len.map_or("overflow".to_string(), |l| l.to_string())
        )));
    }

    let count = count as usize;
    let mut points = Vec::with_capacity(count);
    let mut buf = vec![0u8; 8 * 8192];
    let mut remaining = count;
    while remaining > 0 {
        let take = remaining.min(8192);
        let bytes = &mut buf[..8 * take];
        input
            .read_exact(bytes)
            .map_err(|_| Error::MalformedFile("truncated payload".into()))?;
        digest.update(bytes);
        points.extend(bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())));
        remaining -= take;
    }
    let mut tail = [0u8; 8];
    input
        .read_exact(&mut tail)
        .map_err(|_| Error::MalformedFile("missing checksum".into()))?;
    let stored = u64::from_le_bytes(tail);
    let computed = digest.finalize();
    if stored != computed {
        return Err(Error::ChecksumMismatch { stored, computed });
    }
    Ok(UnitLoopEnsemble {
        n_loops: n_loops as usize,
        n_points: n_points as usize,
        dim: dim as usize,
        seed,
        sampler,
        points,
    })
}
