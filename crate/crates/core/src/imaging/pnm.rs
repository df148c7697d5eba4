//! Binary PGM (P5) / PPM (P6) with maxval 255.

use std::path::Path;

use super::Image;
use crate::error::{Error, Result};

pub fn encode_pnm(img: &Image) -> Vec<u8> {
    let magic = if img.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.pixels());
    out
}

pub fn decode_pnm(bytes: &[u8]) -> Result<Image> {
    let mut cursor = Header { bytes, pos: 0 };
    let channels = match cursor.token()? {
        b"P5" => 1,
        b"P6" => 3,
        other => {
            return Err(Error::Format(format!(
                "unsupported magic {:?}, expected P5 or P6",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let width = cursor.number("width")?;
    let height = cursor.number("height")?;
    let maxval = cursor.number("maxval")?;
    if maxval != 255 {
        return Err(Error::Format(format!("unsupported maxval {maxval}, only 255 is accepted")));
    }
    // Exactly one whitespace byte separates the header from the payload.
    match bytes.get(cursor.pos) {
        Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
        _ => return Err(Error::Format("missing whitespace after maxval".into())),
    }
    if width == 0 || height == 0 {
        return Err(Error::Format(format!("degenerate dimensions {width}x{height}")));
    }
    let need = width * height * channels;
    let payload = &bytes[cursor.pos..];
    if payload.len() < need {
        return Err(Error::Format(format!(
            "truncated payload: expected {need} bytes, found {}",
            payload.len()
        )));
    }
    Image::new(height, width, channels, payload[..need].to_vec())
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn token(&mut self) -> Result<&'a [u8]> {
        loop {
            while self.bytes.get(self.pos).is_some_and(u8::is_ascii_whitespace) {
                self.pos += 1;
            }
            if self.bytes.get(self.pos) == Some(&b'#') {
                while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|b| !b.is_ascii_whitespace()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Format("truncated header".into()));
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .filter(|s| s.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("bad {what} field {:?}", String::from_utf8_lossy(tok))))
    }
}

pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pnm(&bytes).map_err(|e| match e {
        Error::Format(reason) => Error::Decode { path: path.to_path_buf(), reason },
        other => other,
    })
}

pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_pnm(img)).map_err(|e| Error::io(path, e))
}
