use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::Read;
use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use walkdir::WalkDir;

use super::{categorize_file, CorpusError, CorpusManifest, FileSource, ManifestEntry};

#[derive(Debug, Clone, Copy, Default)]
pub struct ScanOptions {
    /// Descend into `.tar.gz`, `.tgz` and `.zip` files.
    pub archives: bool,
}

pub fn scan(roots: &[PathBuf], label: &str) -> Result<CorpusManifest, CorpusError> {
    scan_with(roots, label, ScanOptions::default())
}

/// List every `.r`/`.R` file under `roots`, sorted by path.
pub fn scan_with(roots: &[PathBuf], label: &str, opts: ScanOptions) -> Result<CorpusManifest, CorpusError> {
    let mut files = Vec::new();
    let mut skipped = Vec::new();
    for root in roots {
        let meta = std::fs::metadata(root).map_err(|e| CorpusError::io(root, e))?;
        if meta.is_file() {
            scan_file(root, opts, &mut files, &mut skipped);
            continue;
        }
        std::fs::read_dir(root).map_err(|e| CorpusError::io(root, e))?;
        let mut packages = PackageFinder::new(root);
        for item in WalkDir::new(root).follow_links(true).sort_by_file_name() {
            let item = match item {
                Ok(item) => item,
                Err(e) => {
                    match e.path() {
                        Some(p) if is_r_file(p) => {
                            let mut entry = disk_entry(p, &relative(p, root), packages.package_of(p));
                            entry.read_error.get_or_insert_with(|| e.to_string());
                            files.push(entry);
                        }
                        p => skipped.push((display(p.unwrap_or(root)), e.to_string())),
                    }
                    continue;
                }
            };
            if !item.file_type().is_file() {
                continue;
            }
            let path = item.path();
            if is_r_file(path) {
                let rel = relative(path, root);
                let package = packages.package_of(path);
                files.push(disk_entry(path, &rel, package));
            } else if opts.archives && archive_kind(path).is_some() {
                scan_file(path, opts, &mut files, &mut skipped);
            }
        }
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));
    files.dedup_by(|a, b| a.path == b.path);
    Ok(CorpusManifest { roots: roots.to_vec(), files, dataset_label: label.to_string(), skipped })
}

/// A file given directly as a root, or an archive met during the walk.
fn scan_file(path: &Path, opts: ScanOptions, files: &mut Vec<ManifestEntry>, skipped: &mut Vec<(String, String)>) {
    if is_r_file(path) {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        files.push(disk_entry(path, &name, None));
    } else if let (true, Some(kind)) = (opts.archives, archive_kind(path)) {
        match read_archive(path, kind) {
            Ok(members) => files.extend(archive_entries(path, members)),
            Err(message) => skipped.push((path.to_string_lossy().into_owned(), message)),
        }
    }
}

fn is_r_file(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "R" || e == "r")
}

fn display(path: &Path) -> String {
    path.to_string_lossy().replace('\\', "/")
}

fn relative(path: &Path, root: &Path) -> String {
    display(path.strip_prefix(root).unwrap_or(path))
}

fn disk_entry(path: &Path, rel: &str, package: Option<String>) -> ManifestEntry {
    let (bytes, read_error) = match File::open(path).and_then(|f| f.metadata()) {
        Ok(m) => (m.len(), None),
        Err(e) => (0, Some(e.to_string())),
    };
    ManifestEntry {
        path: display(path),
        category: categorize_file(rel, package.as_deref()),
        bytes,
        package,
        read_error,
        source: FileSource::Disk(path.to_path_buf()),
    }
}

/// Nearest ancestor (up to the root) holding a DESCRIPTION file, else the
/// top-level directory under the root.
struct PackageFinder<'r> {
    root: &'r Path,
    has_description: HashMap<PathBuf, bool>,
}

impl<'r> PackageFinder<'r> {
    fn new(root: &'r Path) -> Self {
        Self { root, has_description: HashMap::new() }
    }

    fn package_of(&mut self, file: &Path) -> Option<String> {
        let mut dir = file.parent();
        while let Some(d) = dir {
            let marked = *self
                .has_description
                .entry(d.to_path_buf())
                .or_insert_with(|| d.join("DESCRIPTION").is_file());
            if marked {
                return d.file_name().map(|n| n.to_string_lossy().into_owned());
            }
            if d == self.root {
                break;
            }
            dir = d.parent();
        }
        let rel = file.strip_prefix(self.root).ok()?;
        let mut parts = rel.components();
        match (parts.next(), parts.next()) {
            (Some(Component::Normal(top)), Some(_)) => Some(top.to_string_lossy().into_owned()),
            _ => None,
        }
    }
}

#[derive(Clone, Copy)]
enum ArchiveKind {
    TarGz,
    Zip,
}

fn archive_kind(path: &Path) -> Option<ArchiveKind> {
    let name = path.file_name()?.to_string_lossy().to_lowercase();
    if name.ends_with(".tar.gz") || name.ends_with(".tgz") {
        Some(ArchiveKind::TarGz)
    } else if name.ends_with(".zip") {
        Some(ArchiveKind::Zip)
    } else {
        None
    }
}

/// Archive file name without extension or a CRAN-style `_version` suffix.
fn archive_stem(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let lower = name.to_lowercase();
    let cut = [".tar.gz", ".tgz", ".zip"].iter().find_map(|ext| lower.strip_suffix(ext).map(str::len));
    let stem = &name[..cut.unwrap_or(name.len())];
    stem.split_once('_').map_or(stem, |(s, _)| s).to_string()
}

struct Member {
    name: String,
    data: Vec<u8>,
}

/// R members with their bytes, plus DESCRIPTION members as package-root
/// markers.
fn read_archive(path: &Path, kind: ArchiveKind) -> Result<Vec<Member>, String> {
    let file = File::open(path).map_err(|e| e.to_string())?;
    let wanted = |name: &str| is_r_file(Path::new(name)) || name.rsplit('/').next() == Some("DESCRIPTION");
    let mut out = Vec::new();
    match kind {
        ArchiveKind::TarGz => {
            let mut ar = tar::Archive::new(flate2::read::GzDecoder::new(file));
            for entry in ar.entries().map_err(|e| e.to_string())? {
                let mut entry = entry.map_err(|e| e.to_string())?;
                if !entry.header().entry_type().is_file() {
                    continue;
                }
                let name = display(&entry.path().map_err(|e| e.to_string())?);
                if wanted(&name) {
                    let mut data = Vec::new();
                    entry.read_to_end(&mut data).map_err(|e| e.to_string())?;
                    out.push(Member { name, data });
                }
            }
        }
        ArchiveKind::Zip => {
            let mut ar = zip::ZipArchive::new(file).map_err(|e| e.to_string())?;
            for i in 0..ar.len() {
                let mut entry = ar.by_index(i).map_err(|e| e.to_string())?;
                if !entry.is_file() {
                    continue;
                }
                let name = entry.name().replace('\\', "/");
                if wanted(&name) {
                    let mut data = Vec::new();
                    entry.read_to_end(&mut data).map_err(|e| e.to_string())?;
                    out.push(Member { name, data });
                }
            }
        }
    }
    Ok(out)
}

fn archive_entries(archive: &Path, members: Vec<Member>) -> Vec<ManifestEntry> {
    let package_dirs: BTreeSet<String> = members
        .iter()
        .filter_map(|m| m.name.strip_suffix("DESCRIPTION"))
        .filter(|d| d.is_empty() || d.ends_with('/'))
        .map(|d| d.trim_end_matches('/').to_string())
        .collect();
    let fallback = archive_stem(archive);
    members
        .into_iter()
        .filter(|m| is_r_file(Path::new(&m.name)))
        .map(|m| {
            let rel = m.name.trim_start_matches("./").to_string();
            let package = nearest_package(&rel, &package_dirs, &fallback);
            ManifestEntry {
                path: format!("{}/{}", display(archive), rel),
                category: categorize_file(&rel, Some(&package)),
                bytes: m.data.len() as u64,
                package: Some(package),
                read_error: None,
                source: FileSource::Memory(Arc::from(m.data)),
            }
        })
        .collect()
}

fn nearest_package(rel: &str, package_dirs: &BTreeSet<String>, fallback: &str) -> String {
    let mut dir = rel;
    while let Some((parent, _)) = dir.rsplit_once('/') {
        if package_dirs.contains(parent) {
            return parent.rsplit('/').next().unwrap_or(parent).to_string();
        }
        dir = parent;
    }
    fallback.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems() {
        assert_eq!(archive_stem(Path::new("x/dplyr_1.1.4.tar.gz")), "dplyr");
        assert_eq!(archive_stem(Path::new("study.zip")), "study");
        assert_eq!(archive_stem(Path::new("a.TGZ")), "a");
    }

    #[test]
    fn nearest() {
        let dirs = BTreeSet::from(["pkg".to_string()]);
        assert_eq!(nearest_package("pkg/tests/a.R", &dirs, "arch"), "pkg");
        assert_eq!(nearest_package("other/a.R", &dirs, "arch"), "arch");
        assert_eq!(nearest_package("a.R", &dirs, "arch"), "arch");
    }
}
