//! Minimal ELF64 little-endian reader for a binary's undefined dynamic symbols.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use crate::abi::SymbolKey;
use crate::error::{ElfError, LoadError};

const SHT_DYNSYM: u32 = 11;
const SHT_GNU_VERNEED: u32 = 0x6fff_fffe;
const SHT_GNU_VERSYM: u32 = 0x6fff_ffff;
const SHN_UNDEF: u16 = 0;
const SYM_SIZE: u64 = 24;
const SHDR_SIZE: u64 = 64;
const VER_HIDDEN_MASK: u16 = 0x7fff;

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn slice(&self, what: &'static str, offset: u64, needed: u64) -> Result<&'a [u8], ElfError> {
        let truncated = || ElfError::Truncated {
            what,
            offset,
            needed,
            len: self.bytes.len(),
        };
        let start = usize::try_from(offset).map_err(|_| truncated())?;
        let end = offset
            .checked_add(needed)
            .and_then(|e| usize::try_from(e).ok())
            .ok_or_else(truncated)?;
        self.bytes.get(start..end).ok_or_else(truncated)
    }

    fn u16(&self, what: &'static str, offset: u64) -> Result<u16, ElfError> {
        let b = self.slice(what, offset, 2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&self, what: &'static str, offset: u64) -> Result<u32, ElfError> {
        let b = self.slice(what, offset, 4)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    fn u64(&self, what: &'static str, offset: u64) -> Result<u64, ElfError> {
        let b = self.slice(what, offset, 8)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }
}

#[derive(Debug, Clone, Copy)]
struct Section {
    kind: u32,
    offset: u64,
    size: u64,
    link: u32,
    info: u32,
    entsize: u64,
}

struct StrTab<'a> {
    data: &'a [u8],
}

impl StrTab<'_> {
    fn get(&self, offset: u32) -> Result<String, ElfError> {
        let rest = self
            .data
            .get(offset as usize..)
            .ok_or(ElfError::BadString(offset))?;
        let end = rest
            .iter()
            .position(|&b| b == 0)
            .ok_or(ElfError::BadString(offset))?;
        Ok(String::from_utf8_lossy(&rest[..end]).into_owned())
    }
}

fn sections(r: &Reader<'_>) -> Result<Vec<Section>, ElfError> {
    let shoff = r.u64("ELF header", 0x28)?;
    let shentsize = r.u16("ELF header", 0x3a)?;
    let shnum = r.u16("ELF header", 0x3c)?;
    if shoff == 0 || shnum == 0 {
        return Ok(Vec::new());
    }
    let stride = if shentsize == 0 {
        SHDR_SIZE
    } else {
        u64::from(shentsize)
    };
    r.slice("section header table", shoff, stride * u64::from(shnum))?;
    (0..u64::from(shnum))
        .map(|i| {
            let at = shoff + i * stride;
            Ok(Section {
                kind: r.u32("section header", at + 4)?,
                offset: r.u64("section header", at + 0x18)?,
                size: r.u64("section header", at + 0x20)?,
                link: r.u32("section header", at + 0x28)?,
                info: r.u32("section header", at + 0x2c)?,
                entsize: r.u64("section header", at + 0x38)?,
            })
        })
        .collect()
}

fn linked_strtab<'a>(
    r: &Reader<'a>,
    all: &[Section],
    owner: &Section,
) -> Result<StrTab<'a>, ElfError> {
    let s = all.get(owner.link as usize).ok_or(ElfError::Truncated {
        what: "linked string table",
        offset: u64::from(owner.link),
        needed: SHDR_SIZE,
        len: r.bytes.len(),
    })?;
    Ok(StrTab {
        data: r.slice("string table", s.offset, s.size)?,
    })
}

/// Version index to requirement name, from the verneed section.
fn version_requirements(
    r: &Reader<'_>,
    all: &[Section],
    verneed: &Section,
) -> Result<BTreeMap<u16, String>, ElfError> {
    let strings = linked_strtab(r, all, verneed)?;
    let mut names = BTreeMap::new();
    let mut at = verneed.offset;
    for _ in 0..verneed.info {
        let count = r.u16("verneed entry", at + 2)?;
        let aux = r.u32("verneed entry", at + 8)?;
        let next = r.u32("verneed entry", at + 12)?;
        let mut aux_at = at + u64::from(aux);
        for _ in 0..count {
            let other = r.u16("vernaux entry", aux_at + 6)?;
            let name = r.u32("vernaux entry", aux_at + 8)?;
            let aux_next = r.u32("vernaux entry", aux_at + 12)?;
            names.insert(other & VER_HIDDEN_MASK, strings.get(name)?);
            if aux_next == 0 {
                break;
            }
            aux_at += u64::from(aux_next);
        }
        if next == 0 {
            break;
        }
        at += u64::from(next);
    }
    Ok(names)
}

/// Undefined dynamic symbols of an ELF64 little-endian object, each paired
/// with the version it requires. Objects without a dynamic symbol table
/// import nothing.
pub fn read_elf_imports(bytes: &[u8]) -> Result<BTreeSet<SymbolKey>, ElfError> {
    if bytes.len() < 4 || &bytes[..4] != b"\x7fELF" {
        return Err(ElfError::BadMagic);
    }
    let r = Reader { bytes };
    let ident = r.slice("ELF identification", 0, 16)?;
    if ident[4] != 2 {
        return Err(ElfError::UnsupportedClass(ident[4]));
    }
    if ident[5] != 1 {
        return Err(ElfError::UnsupportedEncoding(ident[5]));
    }
    r.slice("ELF header", 0, 64)?;

    let all = sections(&r)?;
    let Some(dynsym) = all.iter().find(|s| s.kind == SHT_DYNSYM) else {
        return Ok(BTreeSet::new());
    };
    let names = linked_strtab(&r, &all, dynsym)?;
    let versym = all.iter().find(|s| s.kind == SHT_GNU_VERSYM);
    let requirements = match all.iter().find(|s| s.kind == SHT_GNU_VERNEED) {
        Some(verneed) => version_requirements(&r, &all, verneed)?,
        None => BTreeMap::new(),
    };

    let stride = if dynsym.entsize == 0 {
        SYM_SIZE
    } else {
        dynsym.entsize
    };
    let count = dynsym.size / stride;
    r.slice("dynamic symbol table", dynsym.offset, count * stride)?;
    let mut imports = BTreeSet::new();
    for i in 0..count {
        let at = dynsym.offset + i * stride;
        let shndx = r.u16("dynamic symbol", at + 6)?;
        if shndx != SHN_UNDEF {
            continue;
        }
        let name = names.get(r.u32("dynamic symbol", at)?)?;
        if name.is_empty() {
            continue;
        }
        let index = match versym {
            Some(vs) => r.u16("version symbol table", vs.offset + i * 2)? & VER_HIDDEN_MASK,
            None => 0,
        };
        let tag = match index {
            0 | 1 => None,
            n => Some(requirements.get(&n).cloned().ok_or_else(|| {
                ElfError::UnknownVersionIndex {
                    name: name.clone(),
                    index: n,
                }
            })?),
        };
        imports.insert(SymbolKey {
            name,
            version_tag: tag,
        });
    }
    Ok(imports)
}

pub fn read_elf_imports_file(path: &Path) -> Result<BTreeSet<SymbolKey>, LoadError> {
    let bytes = fs::read(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_elf_imports(&bytes).map_err(|source| LoadError::Elf {
        path: path.to_path_buf(),
        source,
    })
}
