use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::Command;

use super::walk::{decode_text, files_sorted};
use crate::{Error, Result};

/// How text is obtained from an image file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OcrAdapter {
    /// Text for image `X` is read from `X.txt` next to it; missing means empty.
    Sidecar,
    /// Run an external program with the image path as its only argument and
    /// read its standard output. A nonzero exit skips the image.
    Command(String),
}

impl OcrAdapter {
    /// Fails if a command adapter's program cannot be found.
    pub fn check(&self) -> Result<()> {
        match self {
            OcrAdapter::Sidecar => Ok(()),
            OcrAdapter::Command(cmd) => {
                if resolve_program(cmd).is_some() {
                    Ok(())
                } else {
                    Err(Error::OcrUnavailable(cmd.clone()))
                }
            }
        }
    }

    /// `None` when the adapter failed on this image.
    pub fn image_text(&self, image: &Path) -> Option<String> {
        match self {
            OcrAdapter::Sidecar => {
                let mut sidecar = image.as_os_str().to_owned();
                sidecar.push(".txt");
                match std::fs::read(PathBuf::from(sidecar)) {
                    Ok(bytes) => Some(decode_text(&bytes)),
                    Err(e) if e.kind() == std::io::ErrorKind::NotFound => Some(String::new()),
                    Err(e) => {
                        log::warn!("OCR sidecar for {}: {e}", image.display());
                        None
                    }
                }
            }
            OcrAdapter::Command(cmd) => match Command::new(cmd).arg(image).output() {
                Ok(out) if out.status.success() => Some(decode_text(&out.stdout)),
                Ok(out) => {
                    log::warn!("OCR failed on {} ({})", image.display(), out.status);
                    None
                }
                Err(e) => {
                    log::warn!("OCR failed on {}: {e}", image.display());
                    None
                }
            },
        }
    }
}

fn resolve_program(cmd: &str) -> Option<PathBuf> {
    let is_exec = |p: &Path| {
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            p.metadata()
                .map(|m| m.is_file() && m.permissions().mode() & 0o111 != 0)
                .unwrap_or(false)
        }
        #[cfg(not(unix))]
        {
            p.is_file()
        }
    };
    if cmd.contains(std::path::MAIN_SEPARATOR) {
        let p = PathBuf::from(cmd);
        return is_exec(&p).then_some(p);
    }
    std::env::var_os("PATH").and_then(|paths| {
        std::env::split_paths(&paths)
            .map(|dir| dir.join(cmd))
            .find(|p| is_exec(p))
    })
}

/// Image formats recognized by their leading magic bytes.
pub fn is_image_header(header: &[u8]) -> bool {
    header.starts_with(b"\x89PNG\r\n\x1a\n")
        || header.starts_with(&[0xff, 0xd8, 0xff])
        || header.starts_with(b"GIF87a")
        || header.starts_with(b"GIF89a")
        || header.starts_with(b"BM")
        || (header.len() >= 12 && &header[..4] == b"RIFF" && &header[8..12] == b"WEBP")
}

fn probe_image(path: &Path) -> bool {
    let mut header = [0u8; 12];
    let Ok(mut file) = File::open(path) else {
        return false;
    };
    let mut filled = 0;
    while filled < header.len() {
        match file.read(&mut header[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(_) => return false,
        }
    }
    is_image_header(&header[..filled])
}

/// Words recognized in every image under `root`, single characters removed.
///
/// Returns the words, the number of images seen and the number the adapter
/// failed on.
pub fn scan_gui_text(root: &Path, ocr: &OcrAdapter) -> Result<(Vec<String>, usize, usize)> {
    let mut words = Vec::new();
    let mut images = 0;
    let mut failed = 0;
    for path in files_sorted(root)? {
        if !probe_image(&path) {
            continue;
        }
        images += 1;
        match ocr.image_text(&path) {
            Some(text) => words.extend(
                text.split_whitespace()
                    .filter(|w| w.chars().count() > 1)
                    .map(str::to_owned),
            ),
            None => failed += 1,
        }
    }
    Ok((words, images, failed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn magic_bytes() {
        assert!(is_image_header(b"\x89PNG\r\n\x1a\n\0\0\0\0"));
        assert!(is_image_header(&[0xff, 0xd8, 0xff, 0xe0]));
        assert!(is_image_header(b"GIF89a"));
        assert!(is_image_header(b"BM\0\0"));
        assert!(is_image_header(b"RIFF\0\0\0\0WEBP"));
        assert!(!is_image_header(b"RIFF\0\0\0\0WAVE"));
        assert!(!is_image_header(b"<?xml version"));
        assert!(!is_image_header(b""));
    }

    #[test]
    fn missing_command_is_an_error() {
        let ocr = OcrAdapter::Command("/nonexistent/ocr-tool".into());
        assert!(matches!(ocr.check(), Err(Error::OcrUnavailable(_))));
        assert!(OcrAdapter::Sidecar.check().is_ok());
    }
}
