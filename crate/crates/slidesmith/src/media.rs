//! Content-addressed media cache shared by the compiler and the renderer.
//!
//! Sources are either local paths or http(s) URLs. Remote fetches land in
//! `cache/media/<sha256-of-source>.<ext>` so later runs (and offline runs)
//! resolve the same source without touching the network. Misses are `None`,
//! which both the compiler and renderer turn into hard errors — a designed
//! image either exists or the page fails, never a placeholder.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use sha2::{Digest, Sha256};
use slidesmith_core::pptx::{MediaBytes, MediaFormat, MediaSource};
use slidesmith_core::raster::{DecodedImage, ImageProvider};

const FETCH_TIMEOUT: Duration = Duration::from_secs(20);

pub struct MediaCache {
    dir: PathBuf,
    offline: bool,
}

impl MediaCache {
    /// A cache rooted at `dir` (created on first write). When `offline`,
    /// lookups never touch the network; anything not already cached or on
    /// disk is a miss.
    pub fn new(dir: impl Into<PathBuf>, offline: bool) -> Self {
        Self { dir: dir.into(), offline }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn key(source: &str) -> String {
        hex::encode(Sha256::digest(source.as_bytes()))
    }

    /// The cached file for `source`, if present (any extension).
    fn cached_file(&self, source: &str) -> Option<PathBuf> {
        let key = Self::key(source);
        for format in [MediaFormat::Png, MediaFormat::Jpeg] {
            let path = self.dir.join(format!("{key}.{}", format.extension()));
            if path.is_file() {
                return Some(path);
            }
        }
        None
    }

    fn load(path: &Path) -> Option<MediaBytes> {
        let bytes = fs::read(path).ok()?;
        let format = MediaFormat::sniff(&bytes)?;
        Some(MediaBytes { bytes, format })
    }

    fn fetch(&self, source: &str) -> Option<MediaBytes> {
        let response = ureq::get(source)
            .timeout(FETCH_TIMEOUT)
            .call()
            .ok()?;
        let mut bytes = Vec::new();
        use std::io::Read;
        response
            .into_reader()
            .take(64 * 1024 * 1024)
            .read_to_end(&mut bytes)
            .ok()?;
        let format = MediaFormat::sniff(&bytes)?;
        // Best-effort cache write; a failed write still serves this request.
        if fs::create_dir_all(&self.dir).is_ok() {
            let path = self.dir.join(format!("{}.{}", Self::key(source), format.extension()));
            let _ = fs::write(path, &bytes);
        }
        Some(MediaBytes { bytes, format })
    }

    fn resolve_bytes(&self, source: &str) -> Option<MediaBytes> {
        // Local files resolve directly; the cache is for remote sources.
        let as_path = Path::new(source);
        if as_path.is_file() {
            return Self::load(as_path);
        }
        if let Some(path) = self.cached_file(source) {
            return Self::load(&path);
        }
        if self.offline || !(source.starts_with("http://") || source.starts_with("https://")) {
            return None;
        }
        self.fetch(source)
    }
}

impl MediaSource for MediaCache {
    fn resolve(&self, source: &str) -> Option<MediaBytes> {
        self.resolve_bytes(source)
    }
}

impl ImageProvider for MediaCache {
    fn decode(&self, source: &str) -> Option<DecodedImage> {
        let media = self.resolve_bytes(source)?;
        let img = image::load_from_memory(&media.bytes).ok()?.to_rgb8();
        Some(DecodedImage {
            width: img.width(),
            height: img.height(),
            rgb: img.into_raw(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preview::encode_png;
    use slidesmith_core::raster::RasterImage;

    fn png_bytes() -> Vec<u8> {
        encode_png(&RasterImage::filled(2, 2, (10, 20, 30))).unwrap()
    }

    #[test]
    fn cached_remote_source_resolves_offline() {
        let tmp = tempfile::tempdir().unwrap();
        let cache = MediaCache::new(tmp.path(), true);
        let source = "https://example.test/picture";
        let key = MediaCache::key(source);
        fs::create_dir_all(tmp.path()).unwrap();
        fs::write(tmp.path().join(format!("{key}.png")), png_bytes()).unwrap();

        let media = cache.resolve(source).expect("cache hit");
        assert_eq!(media.format, MediaFormat::Png);
        let decoded = cache.decode(source).expect("decodable");
        assert_eq!((decoded.width, decoded.height), (2, 2));
        assert_eq!(&decoded.rgb[0..3], &[10, 20, 30]);
    }

    #[test]
    fn unknown_source_is_a_miss_offline() {
        let tmp = tempfile::tempdir().unwrap();
        let cache = MediaCache::new(tmp.path(), true);
        assert!(cache.resolve("https://example.test/absent").is_none());
        assert!(cache.decode("https://example.test/absent").is_none());
    }

    #[test]
    fn local_files_resolve_without_the_cache() {
        let tmp = tempfile::tempdir().unwrap();
        let file = tmp.path().join("local.png");
        fs::write(&file, png_bytes()).unwrap();
        let cache = MediaCache::new(tmp.path().join("cache"), true);
        let media = cache.resolve(file.to_str().unwrap()).expect("local file");
        assert_eq!(media.format, MediaFormat::Png);
    }

    #[test]
    fn undecodable_bytes_are_a_miss() {
        let tmp = tempfile::tempdir().unwrap();
        let file = tmp.path().join("not_an_image.png");
        fs::write(&file, b"plain text").unwrap();
        let cache = MediaCache::new(tmp.path(), true);
        assert!(cache.resolve(file.to_str().unwrap()).is_none());
    }
}
