//! Little-endian binary reader/writer used by the snapshot and
//! checkpoint formats. The reader is total: every failure is a
//! `FormatError` carrying the offset, never a panic, so decoders can be
//! driven with untrusted bytes.

use crate::error::FormatError;

pub struct Reader<'a> {
    data: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    pub fn new(data: &'a [u8]) -> Reader<'a> {
        Reader { data, offset: 0 }
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.offset
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        if self.remaining() < n {
            return Err(FormatError::Truncated {
                offset: self.offset,
                need: n - self.remaining(),
            });
        }
        let s = &self.data[self.offset..self.offset + n];
        self.offset += n;
        Ok(s)
    }

    pub fn magic(&mut self, expected: &'static str) -> Result<(), FormatError> {
        let at = self.offset;
        let got = self.take(expected.len())?;
        if got != expected.as_bytes() {
            return Err(FormatError::BadMagic {
                offset: at,
                expected,
            });
        }
        Ok(())
    }

    pub fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn u128(&mut self) -> Result<u128, FormatError> {
        Ok(u128::from_le_bytes(self.take(16)?.try_into().unwrap()))
    }

    pub fn f32(&mut self) -> Result<f32, FormatError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64, FormatError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn byte_array<const N: usize>(&mut self) -> Result<[u8; N], FormatError> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    /// A count field that the caller will materialize as `item_size`
    /// bytes per element; rejected up front when the remaining input
    /// cannot possibly hold it, so hostile counts cannot trigger huge
    /// allocations.
    pub fn count(&mut self, item_size: usize) -> Result<usize, FormatError> {
        let at = self.offset;
        let n = self.u64()?;
        let need = n.checked_mul(item_size as u64);
        match need {
            Some(bytes) if bytes <= self.remaining() as u64 => Ok(n as usize),
            _ => Err(FormatError::InvalidField {
                offset: at,
                reason: format!("count {n} exceeds remaining input"),
            }),
        }
    }

    pub fn invalid(&self, reason: impl Into<String>) -> FormatError {
        FormatError::InvalidField {
            offset: self.offset,
            reason: reason.into(),
        }
    }

    /// Assert the input is fully consumed.
    pub fn finish(&self) -> Result<(), FormatError> {
        if self.remaining() != 0 {
            return Err(FormatError::TrailingBytes {
                offset: self.offset,
                extra: self.remaining(),
            });
        }
        Ok(())
    }
}

#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Writer {
        Writer::default()
    }

    pub fn magic(&mut self, m: &str) {
        self.buf.extend_from_slice(m.as_bytes());
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u128(&mut self, v: u128) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f32(&mut self, v: f32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn bytes(&mut self, v: &[u8]) {
        self.buf.extend_from_slice(v);
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}
