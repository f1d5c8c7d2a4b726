//! Little-endian byte readers with offset tracking, shared by the dataset
//! container and the model checkpoint formats so their errors can point at
//! the exact corrupted byte.

use std::io::Read;

pub(crate) enum ByteIoError {
    /// Input ended at `offset` before the field could be read.
    Eof { offset: u64 },
    Io(std::io::Error),
}

pub(crate) struct CountingReader<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> CountingReader<R> {
    pub fn new(inner: R) -> Self {
        CountingReader { inner, offset: 0 }
    }

    /// Byte offset of the next unread byte.
    pub fn offset(&self) -> u64 {
        self.offset
    }

    pub fn read_exact(&mut self, buf: &mut [u8]) -> Result<(), ByteIoError> {
        match self.inner.read_exact(buf) {
            Ok(()) => {
                self.offset += buf.len() as u64;
                Ok(())
            }
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
                Err(ByteIoError::Eof {
                    offset: self.offset,
                })
            }
            Err(e) => Err(ByteIoError::Io(e)),
        }
    }

    pub fn read_u8(&mut self) -> Result<u8, ByteIoError> {
        let mut b = [0u8; 1];
        self.read_exact(&mut b)?;
        Ok(b[0])
    }

    pub fn read_u32(&mut self) -> Result<u32, ByteIoError> {
        let mut b = [0u8; 4];
        self.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    pub fn read_f32(&mut self) -> Result<f32, ByteIoError> {
        let mut b = [0u8; 4];
        self.read_exact(&mut b)?;
        Ok(f32::from_le_bytes(b))
    }

    pub fn read_f64(&mut self) -> Result<f64, ByteIoError> {
        let mut b = [0u8; 8];
        self.read_exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }

    /// True if at least one more byte exists (peeks by reading ahead into a
    /// one-byte buffer; only call when trailing data is an error).
    pub fn has_more(&mut self) -> Result<bool, ByteIoError> {
        let mut b = [0u8; 1];
        match self.inner.read(&mut b) {
            Ok(0) => Ok(false),
            Ok(_) => {
                self.offset += 1;
                Ok(true)
            }
            Err(e) => Err(ByteIoError::Io(e)),
        }
    }
}
