//! TAIV raw container.
//!
//! Layout (all multi-byte fields little-endian):
//!
//! | offset    | size | field                                   |
//! |-----------|------|-----------------------------------------|
//! | 0         | 4    | magic `TAIV`                            |
//! | 4         | 1    | version (1)                             |
//! | 5         | 1    | bit depth                               |
//! | 6         | 1    | channel count C                         |
//! | 7         | C    | channel tags (R=0, G=1, B=2)            |
//! | 7+C       | 12   | u32 T, u32 H, u32 W                     |
//! | 19+C      | 8    | f64 fps                                 |
//! | 27+C      | ...  | u16 samples, frame-major, channel-planar |

use super::{Channel, MediaError, VideoCube};
use ndarray::Array4;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"TAIV";
pub const VERSION: u8 = 1;
/// Header length excluding the variable channel-tag block.
pub const HEADER_FIXED_LEN: usize = 27;

pub fn save_video(cube: &VideoCube, path: impl AsRef<Path>) -> Result<(), MediaError> {
    cube.validate()?;
    let mut out = BufWriter::new(File::create(path)?);
    write_video(cube, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn load_video(path: impl AsRef<Path>) -> Result<VideoCube, MediaError> {
    let mut input = BufReader::new(File::open(path)?);
    read_video(&mut input)
}

pub fn write_video<W: Write>(cube: &VideoCube, out: &mut W) -> Result<(), MediaError> {
    cube.validate()?;
    let mut header = Vec::with_capacity(HEADER_FIXED_LEN + cube.channels().len());
    header.extend_from_slice(MAGIC);
    header.push(VERSION);
    header.push(cube.bit_depth());
    header.push(cube.channels().len() as u8);
    header.extend(cube.channels().iter().map(|c| c.tag()));
    for dim in [cube.frames(), cube.height(), cube.width()] {
        let dim = u32::try_from(dim)
            .map_err(|_| MediaError::InvalidCube(format!("dimension {dim} exceeds u32")))?;
        header.extend_from_slice(&dim.to_le_bytes());
    }
    header.extend_from_slice(&cube.fps().to_le_bytes());
    out.write_all(&header)?;

    let mut buf = Vec::with_capacity(64 * 1024);
    for &v in cube.samples().iter() {
        buf.extend_from_slice(&v.to_le_bytes());
        if buf.len() >= 64 * 1024 {
            out.write_all(&buf)?;
            buf.clear();
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_video<R: Read>(input: &mut R) -> Result<VideoCube, MediaError> {
    let mut magic = [0u8; 4];
    read_header_bytes(input, &mut magic)?;
    if &magic != MAGIC {
        return Err(MediaError::BadMagic);
    }
    let mut fixed = [0u8; 3];
    read_header_bytes(input, &mut fixed)?;
    let [version, bit_depth, n_channels] = fixed;
    if version != VERSION {
        return Err(MediaError::UnsupportedVersion(version));
    }
    let mut tags = vec![0u8; n_channels as usize];
    read_header_bytes(input, &mut tags)?;
    let channels = tags
        .iter()
        .map(|&t| {
            Channel::from_tag(t).ok_or_else(|| MediaError::InvalidCube(format!("unknown channel tag {t}")))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut dims = [0u8; 20];
    read_header_bytes(input, &mut dims)?;
    let le_u32 = |i: usize| u32::from_le_bytes(dims[i..i + 4].try_into().unwrap()) as usize;
    let (t, h, w) = (le_u32(0), le_u32(4), le_u32(8));
    let fps = f64::from_le_bytes(dims[12..20].try_into().unwrap());

    let n = t
        .checked_mul(channels.len())
        .and_then(|v| v.checked_mul(h))
        .and_then(|v| v.checked_mul(w))
        .ok_or_else(|| MediaError::InvalidCube("dimensions overflow".into()))?;
    let expected = n as u64 * 2;

    let mut payload = Vec::new();
    input.take(expected + 1).read_to_end(&mut payload)?;
    // reading one byte past the payload also catches trailing garbage
    if payload.len() as u64 != expected {
        return Err(MediaError::TruncatedPayload {
            expected,
            actual: payload.len() as u64,
        });
    }
    let samples: Vec<u16> = payload
        .chunks_exact(2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .collect();
    let samples = Array4::from_shape_vec((t, channels.len(), h, w), samples)
        .map_err(|e| MediaError::InvalidCube(e.to_string()))?;
    VideoCube::new(samples, channels, fps, bit_depth)
}

fn read_header_bytes<R: Read>(input: &mut R, buf: &mut [u8]) -> Result<(), MediaError> {
    input.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => MediaError::TruncatedPayload {
            expected: buf.len() as u64,
            actual: 0,
        },
        _ => MediaError::Io(e),
    })
}
