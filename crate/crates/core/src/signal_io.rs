//! `TFRS` binary signal files: the magic `TFRS`, a little-endian `u32`
//! version, a `u32` length `L`, then `L` pairs of `f64` (re, im).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tfcore::{Signal, C64};

pub const MAGIC: &[u8; 4] = b"TFRS";
pub const VERSION: u32 = 1;

pub fn write_signal<W: Write>(mut out: W, f: &Signal) -> Result<()> {
    let len = u32::try_from(f.len()).map_err(|_| Error::Format(format!("length {} exceeds u32", f.len())))?;
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&len.to_le_bytes())?;
    for z in f.values() {
        out.write_all(&z.re.to_le_bytes())?;
        out.write_all(&z.im.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(input: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_signal<R: Read>(mut input: R) -> Result<Signal> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let version = read_u32(&mut input)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let len = read_u32(&mut input)? as usize;
    let mut values = Vec::with_capacity(len.min(1 << 20));
    for _ in 0..len {
        let re = read_f64(&mut input)?;
        let im = read_f64(&mut input)?;
        values.push(C64::new(re, im));
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after signal".into()));
    }
    Signal::new(values)
}

pub fn save_signal(path: impl AsRef<Path>, f: &Signal) -> Result<()> {
    write_signal(BufWriter::new(File::create(path)?), f)
}

pub fn load_signal(path: impl AsRef<Path>) -> Result<Signal> {
    read_signal(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout() {
        let f = Signal::new(vec![C64::new(1.0, -2.0)]).unwrap();
        let mut buf = Vec::new();
        write_signal(&mut buf, &f).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 4 + 16);
        assert_eq!(&buf[..4], b"TFRS");
        assert_eq!(&buf[4..8], &[1, 0, 0, 0]);
        assert_eq!(&buf[8..12], &[1, 0, 0, 0]);
        assert_eq!(&buf[12..20], &1.0f64.to_le_bytes());
        assert_eq!(&buf[20..28], &(-2.0f64).to_le_bytes());
    }

    #[test]
    fn rejects_malformed() {
        let f = Signal::new(vec![C64::new(1.0, 0.0); 3]).unwrap();
        let mut buf = Vec::new();
        write_signal(&mut buf, &f).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_signal(&bad[..]), Err(Error::Format(_))));
        let mut bad = buf.clone();
        bad[4] = 9;
        assert!(matches!(read_signal(&bad[..]), Err(Error::Format(_))));
        assert!(read_signal(&buf[..buf.len() - 1]).is_err());
        let mut long = buf.clone();
        long.push(0);
        assert!(matches!(read_signal(&long[..]), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn roundtrip(parts in proptest::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 1..64)) {
            let f = Signal::new(parts.iter().map(|&(a, b)| C64::new(a, b)).collect()).unwrap();
            let mut buf = Vec::new();
            write_signal(&mut buf, &f).unwrap();
            prop_assert_eq!(read_signal(&buf[..]).unwrap(), f);
        }
    }
}
