//! Little-endian framing shared by the on-disk formats: a 4-byte magic, a
//! body, and a trailing CRC32 over everything before it.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("corrupt file: {0}")]
    CorruptFile(String),
    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { found: u16, expected: u16 },
}

pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(magic: &[u8; 4], version: u16) -> Self {
        let mut w = Self { buf: Vec::new() };
        w.buf.extend_from_slice(magic);
        w.u16(version);
        w
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f32(&mut self, v: f32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn finish(mut self) -> Vec<u8> {
        let crc = crc32fast::hash(&self.buf);
        self.buf.extend_from_slice(&crc.to_le_bytes());
        self.buf
    }
}

pub(crate) struct Reader<'a> {
    body: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    /// Validates magic and checksum before any field is parsed, then the version.
    pub fn open(data: &'a [u8], magic: &[u8; 4], version: u16) -> Result<Self, FormatError> {
        if data.len() < 4 + 2 + 4 {
            return Err(FormatError::CorruptFile("file too short".into()));
        }
        if &data[..4] != magic {
            return Err(FormatError::CorruptFile(format!(
                "bad magic, expected {:?}",
                String::from_utf8_lossy(magic)
            )));
        }
        let (body, tail) = data.split_at(data.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().unwrap());
        if crc32fast::hash(body) != stored {
            return Err(FormatError::CorruptFile("checksum mismatch".into()));
        }
        let mut r = Self { body, pos: 4 };
        let found = r.u16()?;
        if found != version {
            return Err(FormatError::VersionMismatch {
                found,
                expected: version,
            });
        }
        Ok(r)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.body.len())
            .ok_or_else(|| FormatError::CorruptFile("unexpected end of data".into()))?;
        let s = &self.body[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, FormatError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f32(&mut self) -> Result<f32, FormatError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64, FormatError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn bytes(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        self.take(n)
    }

    /// Remaining unread body bytes.
    pub fn remaining(&self) -> usize {
        self.body.len() - self.pos
    }

    pub fn finish(self) -> Result<(), FormatError> {
        if self.remaining() != 0 {
            return Err(FormatError::CorruptFile(format!(
                "{} trailing bytes",
                self.remaining()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn framing_round_trip_and_errors() {
        let mut w = Writer::new(b"TEST", 3);
        w.u32(7);
        w.f64(-1.5);
        let bytes = w.finish();

        let mut r = Reader::open(&bytes, b"TEST", 3).unwrap();
        assert_eq!(r.u32().unwrap(), 7);
        assert_eq!(r.f64().unwrap(), -1.5);
        r.finish().unwrap();

        assert!(matches!(
            Reader::open(&bytes, b"TEST", 4),
            Err(FormatError::VersionMismatch { found: 3, expected: 4 })
        ));
        assert!(matches!(
            Reader::open(&bytes, b"NOPE", 3),
            Err(FormatError::CorruptFile(_))
        ));
        let mut flipped = bytes.clone();
        flipped[8] ^= 0x10;
        assert!(matches!(
            Reader::open(&flipped, b"TEST", 3),
            Err(FormatError::CorruptFile(_))
        ));

        let mut r = Reader::open(&bytes, b"TEST", 3).unwrap();
        r.u32().unwrap();
        r.f64().unwrap();
        assert!(r.u8().is_err());
    }
}
