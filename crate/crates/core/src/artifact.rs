// SPDX-License-Identifier: Apache-2.0

//! Loading and auditing the shared kernel artifact.
//!
//! The artifact is one shared object exporting `kernel_<id>` for every
//! ported kernel and a `kernel_abi_version` integer. Both domains call into
//! the same loaded copy, so they run the same machine code.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use duostress_kernels::abi::{EntryFn, ABI_VERSION};
use duostress_kernels::catalog;
use libloading::Library;
use object::{Object, ObjectSymbol};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Undefined symbols the artifact may import. Everything else, in
/// particular any clock, allocator or I/O routine, fails the audit.
pub const ALLOWED_IMPORTS: &[&str] = &["memcpy", "memmove", "memset", "memcmp", "bcmp"];

/// Path baked in at build time, overridable with `DUOSTRESS_ARTIFACT`.
pub fn default_path() -> PathBuf {
    match std::env::var_os("DUOSTRESS_ARTIFACT") {
        Some(p) if !p.is_empty() => PathBuf::from(p),
        _ => PathBuf::from(env!("DUOSTRESS_ARTIFACT")),
    }
}

pub struct KernelArtifact {
    path: PathBuf,
    content_hash: String,
    entries: BTreeMap<&'static str, EntryFn>,
    imports: Vec<String>,
    // Keeps the entry pointers valid; never unloaded before the pointers.
    _lib: Library,
}

impl fmt::Debug for KernelArtifact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelArtifact")
            .field("path", &self.path)
            .field("content_hash", &self.content_hash)
            .field("entries", &self.entries.len())
            .finish()
    }
}

impl KernelArtifact {
    pub fn path(&self) -> &Path {
        &self.path
    }

    /// SHA-256 of the file, lowercase hex.
    pub fn content_hash(&self) -> &str {
        &self.content_hash
    }

    pub fn entry(&self, id: &str) -> Option<EntryFn> {
        self.entries.get(id).copied()
    }

    pub fn kernel_ids(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    /// Strong undefined symbols found by the audit.
    pub fn imports(&self) -> &[String] {
        &self.imports
    }
}

pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| unloadable(path, e.to_string()))?;
    Ok(hex_digest(&bytes))
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        use fmt::Write;
        let _ = write!(out, "{b:02x}");
    }
    out
}

fn unloadable(path: &Path, reason: impl Into<String>) -> Error {
    Error::ArtifactUnloadable {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Strong undefined dynamic symbols that are not on the allow list.
pub fn audit_imports(bytes: &[u8]) -> std::result::Result<Vec<String>, String> {
    let file = object::File::parse(bytes).map_err(|e| format!("not a loadable object: {e}"))?;
    let mut strong = Vec::new();
    let mut forbidden = Vec::new();
    for sym in file.dynamic_symbols() {
        if !sym.is_undefined() || sym.is_weak() {
            continue;
        }
        let name = sym.name().map_err(|e| format!("bad symbol table: {e}"))?;
        if name.is_empty() {
            continue;
        }
        let base = name.split('@').next().unwrap_or(name);
        if !ALLOWED_IMPORTS.contains(&base) {
            forbidden.push(base.to_string());
        }
        strong.push(base.to_string());
    }
    if forbidden.is_empty() {
        strong.sort();
        Ok(strong)
    } else {
        forbidden.sort();
        Err(format!("imports forbidden symbols: {}", forbidden.join(", ")))
    }
}

fn cache() -> &'static Mutex<HashMap<PathBuf, Arc<KernelArtifact>>> {
    static CACHE: OnceLock<Mutex<HashMap<PathBuf, Arc<KernelArtifact>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Load, audit and resolve the artifact at `path`.
///
/// Loading the same unchanged file again returns the same artifact.
pub fn load_artifact(path: impl AsRef<Path>) -> Result<Arc<KernelArtifact>> {
    let path = path.as_ref();
    let canonical = fs::canonicalize(path).map_err(|e| unloadable(path, e.to_string()))?;
    let bytes = fs::read(&canonical).map_err(|e| unloadable(path, e.to_string()))?;
    let content_hash = hex_digest(&bytes);

    let mut cache = cache().lock().unwrap_or_else(|p| p.into_inner());
    if let Some(hit) = cache.get(&canonical) {
        if hit.content_hash == content_hash {
            return Ok(Arc::clone(hit));
        }
    }

    let imports = audit_imports(&bytes).map_err(|r| unloadable(path, r))?;

    // SAFETY: the artifact has passed the import audit, so its initialisers
    // cannot reach libc beyond the mem* routines.
    let lib = unsafe { Library::new(&canonical) }.map_err(|e| unloadable(path, e.to_string()))?;

    // SAFETY: `kernel_abi_version` is a plain exported u32.
    let version = unsafe {
        lib.get::<*const u32>(b"kernel_abi_version\0")
            .map(|s| **s)
            .map_err(|e| unloadable(path, format!("no ABI version: {e}")))?
    };
    if version != ABI_VERSION {
        return Err(unloadable(
            path,
            format!("ABI version {version}, expected {ABI_VERSION}"),
        ));
    }

    let mut entries = BTreeMap::new();
    for spec in catalog().iter().filter(|s| s.is_ported()) {
        let symbol = format!("kernel_{}\0", spec.id);
        // SAFETY: every `kernel_<id>` export has the `EntryFn` signature by
        // the artifact contract checked through the ABI version above.
        let entry = unsafe { lib.get::<EntryFn>(symbol.as_bytes()) }
            .map(|s| *s)
            .map_err(|_| Error::SymbolMissing(spec.id.to_string()))?;
        entries.insert(spec.id, entry);
    }

    let artifact = Arc::new(KernelArtifact {
        path: canonical.clone(),
        content_hash,
        entries,
        imports,
        _lib: lib,
    });
    cache.insert(canonical, Arc::clone(&artifact));
    Ok(artifact)
}

/// Load the artifact from [`default_path`].
pub fn load_default() -> Result<Arc<KernelArtifact>> {
    load_artifact(default_path())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_sha256_hex() {
        assert_eq!(
            hex_digest(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn audit_rejects_garbage() {
        assert!(audit_imports(b"definitely not elf").is_err());
    }

    #[test]
    fn built_artifact_passes_audit() {
        let bytes = fs::read(default_path()).unwrap();
        let imports = audit_imports(&bytes).unwrap();
        assert!(imports.iter().all(|s| ALLOWED_IMPORTS.contains(&s.as_str())));
    }
}
