//! The `DCFP` fingerprint dataset file.
//!
//! ```text
//! "DCFP" | u16 version | u32 M | u8 variant id | u8 region-set id | u32 record count
//! per record: u32 video_id length, video_id bytes, u32 frame_index,
//!             u8 label (0 real, 1 fake, 255 unlabeled), M × f32 values
//! ```

use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::{Fingerprint, VariantId};
use crate::binio::{ByteReader, ByteWriter, FormatError};
use crate::regions::RegionSet;
use crate::Label;

pub const FINGERPRINT_MAGIC: [u8; 4] = *b"DCFP";
pub const FINGERPRINT_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintRecord {
    pub video_id: String,
    pub frame_index: u32,
    pub label: Label,
    pub values: Vec<f32>,
}

/// Fingerprints sharing one variant, region set and width `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintSet {
    pub variant: VariantId,
    pub region_set: RegionSet,
    pub dim: usize,
    pub records: Vec<FingerprintRecord>,
}

impl FingerprintSet {
    pub fn new(variant: VariantId, region_set: RegionSet, dim: usize) -> Self {
        FingerprintSet {
            variant,
            region_set,
            dim,
            records: Vec::new(),
        }
    }

    /// Appends a fingerprint, stored as `f32`.
    pub fn push(&mut self, fp: &Fingerprint, label: Label) -> Result<(), FormatError> {
        if fp.len() != self.dim || fp.variant != self.variant || fp.region_set != self.region_set {
            return Err(FormatError::Invalid(format!(
                "fingerprint ({}, {}, M={}) does not fit set ({}, {}, M={})",
                fp.variant,
                fp.region_set,
                fp.len(),
                self.variant,
                self.region_set,
                self.dim
            )));
        }
        self.records.push(FingerprintRecord {
            video_id: fp.video_id.clone(),
            frame_index: fp.frame_index,
            label,
            values: fp.values.iter().map(|&v| v as f32).collect(),
        });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Row matrix of the records, upcast to `f64`.
    pub fn matrix(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.records.len(), self.dim), |(i, j)| f64::from(self.records[i].values[j]))
    }

    pub fn labels(&self) -> Vec<Label> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new(&FINGERPRINT_MAGIC, FINGERPRINT_VERSION);
        w.u32(self.dim as u32);
        w.u8(self.variant.id());
        w.u8(self.region_set.id());
        w.u32(self.records.len() as u32);
        for r in &self.records {
            w.str(&r.video_id);
            w.u32(r.frame_index);
            w.u8(r.label.code());
            for &v in &r.values {
                w.f32(v);
            }
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FormatError> {
        let mut r = ByteReader::open(bytes, &FINGERPRINT_MAGIC, "DCFP", FINGERPRINT_VERSION)?;
        let dim = r.u32("M")? as usize;
        let variant = VariantId::from_id(r.u8("variant id")?).map_err(|e| FormatError::Invalid(e.to_string()))?;
        let region_set = RegionSet::from_id(r.u8("region set id")?).map_err(|e| FormatError::Invalid(e.to_string()))?;
        let count = r.u32("record count")?;
        let mut records = Vec::new();
        for _ in 0..count {
            let video_id = r.str("video id")?;
            let frame_index = r.u32("frame index")?;
            let code = r.u8("label")?;
            let label = Label::from_code(code).ok_or_else(|| FormatError::Invalid(format!("label byte {code}")))?;
            let values = (0..dim).map(|_| r.f32("values")).collect::<Result<Vec<_>, _>>()?;
            records.push(FingerprintRecord {
                video_id,
                frame_index,
                label,
                values,
            });
        }
        r.finish()?;
        Ok(FingerprintSet {
            variant,
            region_set,
            dim,
            records,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), FormatError> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, FormatError> {
        Self::from_bytes(&fs::read(path)?)
    }
}
