//! The `DCAF` token container.
//!
//! One file holds every selected frame of one video: a fixed 28-byte header,
//! a UTF-8 source tag, then per frame the patch label bytes followed by the
//! patch tokens as little-endian `f32` in (row, col, dim) order.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "DCAF"
//!      4     2  version (1)
//!      6     2  dtype code (0 = f32 little-endian)
//!      8     4  grid_h
//!     12     4  grid_w
//!     16     4  feature_dim
//!     20     4  frame_count
//!     24     4  source_tag length in bytes
//!     28     n  source_tag
//!   then frame_count × (grid_h·grid_w label bytes, grid_h·grid_w·feature_dim f32)
//! ```

use std::fmt;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"DCAF";
pub const VERSION: u16 = 1;
/// Size of the fixed part of the header, before the source tag bytes.
pub const FIXED_HEADER_LEN: usize = 28;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic {found:?}, expected \"DCAF\"")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u16),
    #[error("unsupported dtype code {0}")]
    UnsupportedDtype(u16),
    #[error("invalid header: {0}")]
    InvalidHeader(String),
    #[error("truncated header: need {needed} bytes, file has {available}")]
    TruncatedHeader { needed: usize, available: usize },
    #[error("truncated payload in frame {frame}: need {needed} bytes, {available} remain")]
    Truncated {
        frame: u32,
        needed: usize,
        available: usize,
    },
    #[error("{0} trailing bytes after the last frame")]
    TrailingBytes(usize),
    #[error("invalid region code {code} at frame {frame}, patch {patch}")]
    InvalidRegionCode { frame: u32, patch: usize, code: u8 },
    #[error("source tag is not valid UTF-8")]
    InvalidSourceTag,
    #[error("non-finite activation at frame {frame}, patch {patch}, dim {dim}")]
    NonFinite { frame: u32, patch: usize, dim: usize },
    #[error("header/payload mismatch: {0}")]
    Mismatch(String),
}

/// Semantic face region of one patch. Codes are stable on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum RegionCode {
    Background = 0,
    Eyes = 1,
    Mouth = 2,
    Nose = 3,
    Skin = 4,
    Hair = 5,
}

impl RegionCode {
    /// The five anatomical regions in canonical order.
    pub const ANATOMICAL: [RegionCode; 5] = [
        RegionCode::Eyes,
        RegionCode::Mouth,
        RegionCode::Nose,
        RegionCode::Skin,
        RegionCode::Hair,
    ];

    pub fn from_u8(code: u8) -> Option<Self> {
        Some(match code {
            0 => RegionCode::Background,
            1 => RegionCode::Eyes,
            2 => RegionCode::Mouth,
            3 => RegionCode::Nose,
            4 => RegionCode::Skin,
            5 => RegionCode::Hair,
            _ => return None,
        })
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            RegionCode::Background => "background",
            RegionCode::Eyes => "eyes",
            RegionCode::Mouth => "mouth",
            RegionCode::Nose => "nose",
            RegionCode::Skin => "skin",
            RegionCode::Hair => "hair",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ANATOMICAL
            .into_iter()
            .chain(std::iter::once(RegionCode::Background))
            .find(|r| r.name() == name)
    }
}

impl fmt::Display for RegionCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u16)]
pub enum DType {
    F32Le = 0,
}

impl DType {
    pub fn from_u16(code: u16) -> Option<Self> {
        match code {
            0 => Some(DType::F32Le),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContainerHeader {
    pub version: u16,
    pub dtype: DType,
    pub grid_h: u32,
    pub grid_w: u32,
    pub feature_dim: u32,
    pub frame_count: u32,
    /// Backbone/block identifier, e.g. `dinov3-vitl16/block18/raw`.
    pub source_tag: String,
}

impl ContainerHeader {
    pub fn new(
        grid_h: u32,
        grid_w: u32,
        feature_dim: u32,
        frame_count: u32,
        source_tag: impl Into<String>,
    ) -> Self {
        ContainerHeader {
            version: VERSION,
            dtype: DType::F32Le,
            grid_h,
            grid_w,
            feature_dim,
            frame_count,
            source_tag: source_tag.into(),
        }
    }

    pub fn patch_count(&self) -> usize {
        self.grid_h as usize * self.grid_w as usize
    }

    /// Bytes occupied by one frame (labels plus tokens).
    pub fn frame_len(&self) -> usize {
        let patches = self.patch_count();
        patches + patches * self.feature_dim as usize * 4
    }

    /// Exact size of a file carrying this header.
    pub fn file_len(&self) -> usize {
        FIXED_HEADER_LEN + self.source_tag.len() + self.frame_count as usize * self.frame_len()
    }

    fn validate(&self) -> Result<(), ContainerError> {
        if self.version != VERSION {
            return Err(ContainerError::UnsupportedVersion(self.version));
        }
        if self.feature_dim == 0 {
            return Err(ContainerError::InvalidHeader("feature_dim must be > 0".into()));
        }
        if self.grid_h == 0 || self.grid_w == 0 {
            return Err(ContainerError::InvalidHeader("grid dimensions must be > 0".into()));
        }
        if u32::try_from(self.source_tag.len()).is_err() {
            return Err(ContainerError::InvalidHeader("source tag too long".into()));
        }
        Ok(())
    }
}

/// One frame's patch tokens and their region labels.
///
/// `tokens` has one row per patch in row-major grid order and one column per
/// feature dimension. Raw container frames are `TokenGrid<f32>`; normalized
/// frames produced by [`crate::normalize::apply_norm`] are `TokenGrid<f64>`.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenGrid<A = f32> {
    pub frame_index: u32,
    pub grid_h: u32,
    pub grid_w: u32,
    pub tokens: Array2<A>,
    pub labels: Vec<RegionCode>,
}

impl<A> TokenGrid<A> {
    pub fn feature_dim(&self) -> usize {
        self.tokens.ncols()
    }

    pub fn patch_count(&self) -> usize {
        self.tokens.nrows()
    }
}

impl TokenGrid<f32> {
    /// An all-zero, all-background frame.
    pub fn zeros(frame_index: u32, grid_h: u32, grid_w: u32, feature_dim: usize) -> Self {
        let patches = grid_h as usize * grid_w as usize;
        TokenGrid {
            frame_index,
            grid_h,
            grid_w,
            tokens: Array2::zeros((patches, feature_dim)),
            labels: vec![RegionCode::Background; patches],
        }
    }
}

/// Serializes a container into memory. Output bytes depend only on the inputs.
pub fn encode(header: &ContainerHeader, frames: &[TokenGrid<f32>]) -> Result<Vec<u8>, ContainerError> {
    header.validate()?;
    if frames.len() != header.frame_count as usize {
        return Err(ContainerError::Mismatch(format!(
            "header declares {} frames, {} supplied",
            header.frame_count,
            frames.len()
        )));
    }
    let patches = header.patch_count();
    let dim = header.feature_dim as usize;
    for (i, frame) in frames.iter().enumerate() {
        if frame.frame_index as usize != i {
            return Err(ContainerError::Mismatch(format!(
                "frame at position {i} carries frame_index {}",
                frame.frame_index
            )));
        }
        if frame.grid_h != header.grid_h
            || frame.grid_w != header.grid_w
            || frame.tokens.dim() != (patches, dim)
            || frame.labels.len() != patches
        {
            return Err(ContainerError::Mismatch(format!(
                "frame {i} has grid {}x{}, tokens {:?}, {} labels; header wants {}x{}x{}",
                frame.grid_h,
                frame.grid_w,
                frame.tokens.dim(),
                frame.labels.len(),
                header.grid_h,
                header.grid_w,
                dim
            )));
        }
        if let Some(((patch, d), _)) = frame.tokens.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(ContainerError::NonFinite {
                frame: frame.frame_index,
                patch,
                dim: d,
            });
        }
    }

    let mut out = Vec::with_capacity(header.file_len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&header.version.to_le_bytes());
    out.extend_from_slice(&(header.dtype as u16).to_le_bytes());
    out.extend_from_slice(&header.grid_h.to_le_bytes());
    out.extend_from_slice(&header.grid_w.to_le_bytes());
    out.extend_from_slice(&header.feature_dim.to_le_bytes());
    out.extend_from_slice(&header.frame_count.to_le_bytes());
    out.extend_from_slice(&(header.source_tag.len() as u32).to_le_bytes());
    out.extend_from_slice(header.source_tag.as_bytes());
    for frame in frames {
        out.extend(frame.labels.iter().map(|l| l.code()));
        for v in frame.tokens.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    debug_assert_eq!(out.len(), header.file_len());
    Ok(out)
}

fn u16_at(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

/// Parses only the header (fixed part plus source tag).
pub fn decode_header(bytes: &[u8]) -> Result<ContainerHeader, ContainerError> {
    if bytes.len() < 4 {
        return Err(ContainerError::TruncatedHeader {
            needed: FIXED_HEADER_LEN,
            available: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(ContainerError::BadMagic { found: magic });
    }
    if bytes.len() < FIXED_HEADER_LEN {
        return Err(ContainerError::TruncatedHeader {
            needed: FIXED_HEADER_LEN,
            available: bytes.len(),
        });
    }
    let version = u16_at(bytes, 4);
    if version != VERSION {
        return Err(ContainerError::UnsupportedVersion(version));
    }
    let dtype_code = u16_at(bytes, 6);
    let dtype = DType::from_u16(dtype_code).ok_or(ContainerError::UnsupportedDtype(dtype_code))?;
    let tag_len = u32_at(bytes, 24) as usize;
    let tag_end = FIXED_HEADER_LEN + tag_len;
    if bytes.len() < tag_end {
        return Err(ContainerError::TruncatedHeader {
            needed: tag_end,
            available: bytes.len(),
        });
    }
    let source_tag = std::str::from_utf8(&bytes[FIXED_HEADER_LEN..tag_end])
        .map_err(|_| ContainerError::InvalidSourceTag)?
        .to_owned();
    let header = ContainerHeader {
        version,
        dtype,
        grid_h: u32_at(bytes, 8),
        grid_w: u32_at(bytes, 12),
        feature_dim: u32_at(bytes, 16),
        frame_count: u32_at(bytes, 20),
        source_tag,
    };
    header.validate()?;
    Ok(header)
}

/// Exact inverse of [`encode`].
pub fn decode(bytes: &[u8]) -> Result<(ContainerHeader, Vec<TokenGrid<f32>>), ContainerError> {
    let header = decode_header(bytes)?;
    let patches = header.patch_count();
    let dim = header.feature_dim as usize;
    let frame_len = header.frame_len();
    let mut offset = FIXED_HEADER_LEN + header.source_tag.len();
    let mut frames = Vec::with_capacity(header.frame_count as usize);

    for frame in 0..header.frame_count {
        let available = bytes.len() - offset;
        if available < frame_len {
            return Err(ContainerError::Truncated {
                frame,
                needed: frame_len,
                available,
            });
        }
        let chunk = &bytes[offset..offset + frame_len];
        let labels = chunk[..patches]
            .iter()
            .enumerate()
            .map(|(patch, &code)| {
                RegionCode::from_u8(code).ok_or(ContainerError::InvalidRegionCode { frame, patch, code })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let values: Vec<f32> = chunk[patches..]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(ContainerError::NonFinite {
                frame,
                patch: pos / dim,
                dim: pos % dim,
            });
        }
        let tokens = Array2::from_shape_vec((patches, dim), values).expect("frame length checked");
        frames.push(TokenGrid {
            frame_index: frame,
            grid_h: header.grid_h,
            grid_w: header.grid_w,
            tokens,
            labels,
        });
        offset += frame_len;
    }
    if offset != bytes.len() {
        return Err(ContainerError::TrailingBytes(bytes.len() - offset));
    }
    Ok((header, frames))
}

pub fn write_container(
    path: impl AsRef<Path>,
    header: &ContainerHeader,
    frames: &[TokenGrid<f32>],
) -> Result<(), ContainerError> {
    let bytes = encode(header, frames)?;
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_container(path: impl AsRef<Path>) -> Result<(ContainerHeader, Vec<TokenGrid<f32>>), ContainerError> {
    let bytes = fs::read(path)?;
    decode(&bytes)
}
