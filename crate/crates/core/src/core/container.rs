//! The `.tsk` container: a fixed header, the text bitstream, the optional
//! sketch bitstream, and a trailing CRC-32.
//!
//! ```text
//! magic "TXSK" | version u8 | mode u8 | width u16 BE | height u16 BE |
//! token_coding u8 | token_len u32 BE | token bytes |
//! [sketch_len u32 BE | sketch bytes]   (PICS only) |
//! crc32 u32 BE over everything above
//! ```

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"TXSK";
pub const VERSION: u8 = 1;
pub const FILE_EXTENSION: &str = "tsk";

/// Bytes before the token payload: magic, version, mode, dims, coding byte, length prefix.
pub const HEADER_LEN: usize = 4 + 1 + 1 + 2 + 2 + 1 + 4;
pub const CRC_LEN: usize = 4;
pub const LENGTH_PREFIX_LEN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Mode {
    /// Text prompt only.
    #[serde(rename = "PIC", alias = "pic")]
    Pic,
    /// Text prompt plus compressed sketch.
    #[serde(rename = "PICS", alias = "pics")]
    Pics,
}

impl Mode {
    pub fn as_byte(self) -> u8 {
        match self {
            Mode::Pic => 0,
            Mode::Pics => 1,
        }
    }

    pub fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(Mode::Pic),
            1 => Ok(Mode::Pics),
            other => Err(Error::Format(format!("unknown mode byte {other}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Pic => "PIC",
            Mode::Pics => "PICS",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pic" => Ok(Mode::Pic),
            "pics" => Ok(Mode::Pics),
            other => Err(Error::Argument(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenCoding {
    /// `ceil(log2 V)` bits per id.
    FixedWidth,
    /// Rendered text, deflate-compressed.
    Text,
}

impl TokenCoding {
    pub fn as_byte(self) -> u8 {
        match self {
            TokenCoding::FixedWidth => 0,
            TokenCoding::Text => 1,
        }
    }

    pub fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(TokenCoding::FixedWidth),
            1 => Ok(TokenCoding::Text),
            other => Err(Error::Format(format!("unknown token coding byte {other}"))),
        }
    }
}

impl std::str::FromStr for TokenCoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fixed" | "fixed-width" => Ok(TokenCoding::FixedWidth),
            "text" => Ok(TokenCoding::Text),
            other => Err(Error::Argument(format!("unknown token coding {other:?}"))),
        }
    }
}

/// Parsed contents of a container.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Container {
    pub mode: Mode,
    pub width: u16,
    pub height: u16,
    pub token_coding: TokenCoding,
    pub token_payload: Vec<u8>,
    /// Present iff `mode == Mode::Pics`.
    pub sketch_payload: Option<Vec<u8>>,
}

impl Container {
    /// Checked constructor from pixel dimensions.
    pub fn new(
        mode: Mode,
        width: usize,
        height: usize,
        token_coding: TokenCoding,
        token_payload: Vec<u8>,
        sketch_payload: Option<Vec<u8>>,
    ) -> Result<Self> {
        let dim = |v: usize, name: &str| {
            u16::try_from(v).map_err(|_| Error::Range(format!("{name} {v} exceeds 65535")))
        };
        let c = Self {
            mode,
            width: dim(width, "width")?,
            height: dim(height, "height")?,
            token_coding,
            token_payload,
            sketch_payload,
        };
        c.check_mode()?;
        Ok(c)
    }

    fn check_mode(&self) -> Result<()> {
        match (self.mode, &self.sketch_payload) {
            (Mode::Pic, None) | (Mode::Pics, Some(_)) => Ok(()),
            (Mode::Pic, Some(_)) => Err(Error::Argument(
                "PIC container cannot carry a sketch payload".into(),
            )),
            (Mode::Pics, None) => Err(Error::Argument(
                "PICS container requires a sketch payload".into(),
            )),
        }
    }

    /// Serialized size in bytes.
    pub fn encoded_len(&self) -> usize {
        HEADER_LEN
            + self.token_payload.len()
            + self
                .sketch_payload
                .as_ref()
                .map_or(0, |s| LENGTH_PREFIX_LEN + s.len())
            + CRC_LEN
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.check_mode()?;
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.mode.as_byte());
        out.extend_from_slice(&self.width.to_be_bytes());
        out.extend_from_slice(&self.height.to_be_bytes());
        out.push(self.token_coding.as_byte());
        put_chunk(&mut out, &self.token_payload)?;
        if let Some(sketch) = &self.sketch_payload {
            put_chunk(&mut out, sketch)?;
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_be_bytes());
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4)?;
        if magic != MAGIC {
            return Err(Error::Format(format!("bad magic {magic:02x?}")));
        }
        let version = r.u8()?;
        if version != VERSION {
            return Err(Error::Version(version));
        }
        let mode = Mode::from_byte(r.u8()?)?;
        let width = r.u16()?;
        let height = r.u16()?;
        let token_coding = TokenCoding::from_byte(r.u8()?)?;
        let token_payload = r.chunk()?.to_vec();
        let sketch_payload = match mode {
            Mode::Pic => None,
            Mode::Pics => Some(r.chunk()?.to_vec()),
        };
        let body_end = r.pos;
        let stored = u32::from_be_bytes(r.take(CRC_LEN)?.try_into().unwrap());
        if r.pos != bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after checksum",
                bytes.len() - r.pos
            )));
        }
        let computed = crc32fast::hash(&bytes[..body_end]);
        if stored != computed {
            return Err(Error::Corruption { stored, computed });
        }
        Ok(Self {
            mode,
            width,
            height,
            token_coding,
            token_payload,
            sketch_payload,
        })
    }
}

/// Serializes the container fields.
pub fn write_container(
    mode: Mode,
    width: usize,
    height: usize,
    token_coding: TokenCoding,
    token_payload: &[u8],
    sketch_payload: Option<&[u8]>,
) -> Result<Vec<u8>> {
    Container::new(
        mode,
        width,
        height,
        token_coding,
        token_payload.to_vec(),
        sketch_payload.map(<[u8]>::to_vec),
    )?
    .to_bytes()
}

pub fn read_container(bytes: &[u8]) -> Result<Container> {
    Container::from_bytes(bytes)
}

fn put_chunk(out: &mut Vec<u8>, payload: &[u8]) -> Result<()> {
    let len = u32::try_from(payload.len())
        .map_err(|_| Error::Range(format!("payload of {} bytes", payload.len())))?;
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(payload);
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Truncation {
                needed: self.pos.saturating_add(n),
                found: self.bytes.len(),
            }),
        }
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn chunk(&mut self) -> Result<&'a [u8]> {
        let len = u32::from_be_bytes(self.take(4)?.try_into().unwrap());
        self.take(len as usize)
    }
}
