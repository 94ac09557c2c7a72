//! REDS-style sequence directories: `<seq>/<%08d>.png`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::imaging::{read_png, Frame};

/// What the pipeline does with a frame index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameRole {
    Input,
    Synthesize,
}

impl FrameRole {
    pub fn of_index(index: usize) -> Self {
        if index % 2 == 0 {
            FrameRole::Input
        } else {
            FrameRole::Synthesize
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameEntry {
    pub index: usize,
    pub path: PathBuf,
    pub role: FrameRole,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceManifest {
    pub id: String,
    pub dir: PathBuf,
    /// Ordered by index. Odd entries are optional and never read by `run`.
    pub frames: Vec<FrameEntry>,
    pub height: usize,
    pub width: usize,
}

/// `00000012.png` → 12.
pub fn parse_frame_name(name: &str) -> Option<usize> {
    let stem = name.strip_suffix(".png")?;
    if stem.len() == 8 && stem.bytes().all(|b| b.is_ascii_digit()) {
        stem.parse().ok()
    } else {
        None
    }
}

pub fn frame_file_name(index: usize) -> String {
    format!("{index:08}.png")
}

/// All `%08d.png` files in `dir`, keyed by index.
pub fn list_frames(dir: &Path) -> Result<BTreeMap<usize, PathBuf>> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::Ingestion {
        path: dir.to_path_buf(),
        reason: format!("cannot read directory: {e}"),
    })?;
    let mut out = BTreeMap::new();
    for entry in rd {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        if let Some(i) = name.to_str().and_then(parse_frame_name) {
            out.insert(i, entry.path());
        }
    }
    Ok(out)
}

impl SequenceManifest {
    /// Scans `dir`; even indices must run 0, 2, 4, ... without gaps.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let found = list_frames(dir)?;
        let evens: Vec<usize> = found.keys().copied().filter(|i| i % 2 == 0).collect();
        if evens.is_empty() {
            return Err(Error::Ingestion {
                path: dir.to_path_buf(),
                reason: "no even-indexed %08d.png frames found".into(),
            });
        }
        for (k, &i) in evens.iter().enumerate() {
            if i != 2 * k {
                return Err(Error::Ingestion {
                    path: dir.join(frame_file_name(2 * k)),
                    reason: "even frame indices must be contiguous from 0".into(),
                });
            }
        }
        let last = *evens.last().unwrap_or(&0);
        let frames: Vec<FrameEntry> = found
            .into_iter()
            .filter(|(i, _)| *i <= last)
            .map(|(index, path)| FrameEntry {
                index,
                path,
                role: FrameRole::of_index(index),
            })
            .collect();
        let first = &frames[0].path;
        let (width, height) = image::image_dimensions(first).map_err(|e| Error::Ingestion {
            path: first.clone(),
            reason: e.to_string(),
        })?;
        let id = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(Self {
            id,
            dir: dir.to_path_buf(),
            frames,
            height: height as usize,
            width: width as usize,
        })
    }

    pub fn inputs(&self) -> impl Iterator<Item = &FrameEntry> {
        self.frames.iter().filter(|f| f.role == FrameRole::Input)
    }

    pub fn input_count(&self) -> usize {
        self.inputs().count()
    }

    /// Decodes every input frame; all must share one shape.
    pub fn load_inputs(&self) -> Result<Vec<Frame>> {
        let entries: Vec<&FrameEntry> = self.inputs().collect();
        let frames: Vec<Frame> = crate::par::map_range(entries.len(), |k| {
            read_png(&entries[k].path).map_err(|e| Error::Ingestion {
                path: entries[k].path.clone(),
                reason: e.to_string(),
            })
        })
        .into_iter()
        .collect::<Result<_>>()?;
        for (e, f) in entries.iter().zip(&frames) {
            if f.height() != self.height || f.width() != self.width || f.channels() != frames[0].channels() {
                return Err(Error::Ingestion {
                    path: e.path.clone(),
                    reason: format!(
                        "frame is {}, expected {}x{}x{}",
                        f.shape_string(),
                        self.height,
                        self.width,
                        frames[0].channels()
                    ),
                });
            }
        }
        Ok(frames)
    }
}
