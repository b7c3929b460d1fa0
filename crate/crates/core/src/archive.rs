//! Minimal reproducible zip writer.
//!
//! Every entry is STORED (method 0), stamped 1980-01-01 00:00:00 and written
//! with no extra fields, so identical input yields identical bytes. Reading
//! uploaded archives goes through the `zip` crate, which also handles
//! compressed members.

use std::collections::HashSet;
use std::io::{self, Cursor, Read, Write};

const LOCAL_HEADER_SIG: u32 = 0x0403_4b50;
const CENTRAL_HEADER_SIG: u32 = 0x0201_4b50;
const END_OF_CENTRAL_SIG: u32 = 0x0605_4b50;
/// MS-DOS date for 1980-01-01; the DOS time field is 0 (00:00:00).
const DOS_DATE_EPOCH: u16 = (1 << 5) | 1;
const DOS_TIME_MIDNIGHT: u16 = 0;
const FLAG_UTF8_NAMES: u16 = 1 << 11;
const VERSION: u16 = 20;
const DOS_DIRECTORY_ATTR: u32 = 0x10;

#[derive(Debug, thiserror::Error)]
pub enum ArchiveError {
    #[error("archive exceeds the 4 GiB / 65535-entry zip limits")]
    TooLarge,
    #[error("duplicate archive path {0:?}")]
    DuplicatePath(String),
    #[error("archive is not a readable zip: {0}")]
    Unreadable(String),
    #[error("archive member {0:?} not found")]
    MemberMissing(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

struct CentralEntry {
    name: String,
    crc: u32,
    size: u32,
    offset: u32,
    is_dir: bool,
}

/// Streaming writer for STORED zip archives.
pub struct StoredZipWriter<W: Write> {
    out: W,
    offset: u64,
    entries: Vec<CentralEntry>,
    names: HashSet<String>,
}

impl<W: Write> StoredZipWriter<W> {
    pub fn new(out: W) -> Self {
        Self {
            out,
            offset: 0,
            entries: Vec::new(),
            names: HashSet::new(),
        }
    }

    pub fn add_file(&mut self, name: &str, data: &[u8]) -> Result<(), ArchiveError> {
        self.add_entry(name, data, false)
    }

    /// Adds a directory entry. `name` must end in `/`.
    pub fn add_directory(&mut self, name: &str) -> Result<(), ArchiveError> {
        debug_assert!(name.ends_with('/'));
        self.add_entry(name, &[], true)
    }

    fn add_entry(&mut self, name: &str, data: &[u8], is_dir: bool) -> Result<(), ArchiveError> {
        if !self.names.insert(name.to_owned()) {
            return Err(ArchiveError::DuplicatePath(name.to_owned()));
        }
        if self.entries.len() >= usize::from(u16::MAX) || name.len() > usize::from(u16::MAX) {
            return Err(ArchiveError::TooLarge);
        }
        let size = u32::try_from(data.len()).map_err(|_| ArchiveError::TooLarge)?;
        let offset = u32::try_from(self.offset).map_err(|_| ArchiveError::TooLarge)?;
        let crc = crc32fast::hash(data);

        let mut header = Vec::with_capacity(30 + name.len());
        put_u32(&mut header, LOCAL_HEADER_SIG);
        put_u16(&mut header, VERSION);
        put_u16(&mut header, FLAG_UTF8_NAMES);
        put_u16(&mut header, 0);
        put_u16(&mut header, DOS_TIME_MIDNIGHT);
        put_u16(&mut header, DOS_DATE_EPOCH);
        put_u32(&mut header, crc);
        put_u32(&mut header, size);
        put_u32(&mut header, size);
        put_u16(&mut header, name.len() as u16);
        put_u16(&mut header, 0);
        header.extend_from_slice(name.as_bytes());

        self.write_raw(&header)?;
        self.write_raw(data)?;
        self.entries.push(CentralEntry {
            name: name.to_owned(),
            crc,
            size,
            offset,
            is_dir,
        });
        Ok(())
    }

    fn write_raw(&mut self, bytes: &[u8]) -> Result<(), ArchiveError> {
        self.out.write_all(bytes)?;
        self.offset += bytes.len() as u64;
        if self.offset > u64::from(u32::MAX) {
            return Err(ArchiveError::TooLarge);
        }
        Ok(())
    }

    /// Writes the central directory and returns the underlying writer.
    pub fn finish(mut self) -> Result<W, ArchiveError> {
        let central_start = u32::try_from(self.offset).map_err(|_| ArchiveError::TooLarge)?;
        let mut central = Vec::new();
        for e in &self.entries {
            put_u32(&mut central, CENTRAL_HEADER_SIG);
            put_u16(&mut central, VERSION);
            put_u16(&mut central, VERSION);
            put_u16(&mut central, FLAG_UTF8_NAMES);
            put_u16(&mut central, 0);
            put_u16(&mut central, DOS_TIME_MIDNIGHT);
            put_u16(&mut central, DOS_DATE_EPOCH);
            put_u32(&mut central, e.crc);
            put_u32(&mut central, e.size);
            put_u32(&mut central, e.size);
            put_u16(&mut central, e.name.len() as u16);
            put_u16(&mut central, 0);
            put_u16(&mut central, 0);
            put_u16(&mut central, 0);
            put_u16(&mut central, 0);
            put_u32(
                &mut central,
                if e.is_dir { DOS_DIRECTORY_ATTR } else { 0 },
            );
            put_u32(&mut central, e.offset);
            central.extend_from_slice(e.name.as_bytes());
        }
        let central_len = u32::try_from(central.len()).map_err(|_| ArchiveError::TooLarge)?;
        self.write_raw(&central)?;

        let count = self.entries.len() as u16;
        let mut end = Vec::with_capacity(22);
        put_u32(&mut end, END_OF_CENTRAL_SIG);
        put_u16(&mut end, 0);
        put_u16(&mut end, 0);
        put_u16(&mut end, count);
        put_u16(&mut end, count);
        put_u32(&mut end, central_len);
        put_u32(&mut end, central_start);
        put_u16(&mut end, 0);
        self.write_raw(&end)?;
        self.out.flush()?;
        Ok(self.out)
    }
}

fn put_u16(buf: &mut Vec<u8>, v: u16) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

/// Sorted list of the file (non-directory) members of a zip archive.
pub fn list_members(bytes: &[u8]) -> Result<Vec<String>, ArchiveError> {
    let archive = zip::ZipArchive::new(Cursor::new(bytes))
        .map_err(|e| ArchiveError::Unreadable(e.to_string()))?;
    let mut names: Vec<String> = archive
        .file_names()
        .filter(|n| !n.ends_with('/'))
        .map(str::to_owned)
        .collect();
    names.sort();
    names.dedup();
    Ok(names)
}

/// Repackages the named members of `bytes` into a new deterministic archive.
pub fn extract_members(bytes: &[u8], paths: &[String]) -> Result<Vec<u8>, ArchiveError> {
    let mut archive = zip::ZipArchive::new(Cursor::new(bytes))
        .map_err(|e| ArchiveError::Unreadable(e.to_string()))?;
    let mut sorted: Vec<&String> = paths.iter().collect();
    sorted.sort();
    sorted.dedup();

    let mut writer = StoredZipWriter::new(Vec::new());
    for path in sorted {
        let mut member = match archive.by_name(path) {
            Ok(m) => m,
            Err(zip::result::ZipError::FileNotFound) => {
                return Err(ArchiveError::MemberMissing(path.clone()))
            }
            Err(e) => return Err(ArchiveError::Unreadable(e.to_string())),
        };
        if member.is_dir() {
            return Err(ArchiveError::MemberMissing(path.clone()));
        }
        let mut data = Vec::with_capacity(member.size() as usize);
        member
            .read_to_end(&mut data)
            .map_err(|e| ArchiveError::Unreadable(e.to_string()))?;
        writer.add_file(path, &data)?;
    }
    writer.finish()
}
