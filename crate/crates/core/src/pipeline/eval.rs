//! Per-frame PSNR/SSIM of predicted frames against ground truth.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imaging::{read_png, Frame};
use crate::metrics::{psnr, ssim, FrameKind, FrameMetric, MetricReport};
use crate::par;

use super::manifest::list_frames;

fn missing_message(what: &str, idx: &[usize]) -> String {
    let list: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
    format!("{what} missing for frame index {}", list.join(", "))
}

/// Both maps must have exactly the same indices.
pub fn eval_frames(pred: &BTreeMap<usize, Frame>, gt: &BTreeMap<usize, Frame>) -> Result<MetricReport> {
    let no_pred: Vec<usize> = gt.keys().filter(|i| !pred.contains_key(i)).copied().collect();
    if !no_pred.is_empty() {
        return Err(Error::IncompleteFrameSet(missing_message("prediction", &no_pred)));
    }
    let no_gt: Vec<usize> = pred.keys().filter(|i| !gt.contains_key(i)).copied().collect();
    if !no_gt.is_empty() {
        return Err(Error::IncompleteFrameSet(missing_message("ground truth", &no_gt)));
    }
    let pairs: Vec<(usize, &Frame, &Frame)> = gt.iter().map(|(&i, g)| (i, &pred[&i], g)).collect();
    let rows = par::map_range(pairs.len(), |k| {
        let (index, p, g) = pairs[k];
        Ok(FrameMetric {
            index,
            kind: FrameKind::of_index(index),
            psnr: psnr(p, g)?,
            ssim: ssim(p, g)?,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(MetricReport::from_frames(rows))
}

fn load_all(dir: &Path) -> Result<BTreeMap<usize, Frame>> {
    let paths: Vec<(usize, std::path::PathBuf)> = list_frames(dir)?.into_iter().collect();
    let frames = par::map_range(paths.len(), |k| {
        let (i, p) = &paths[k];
        read_png(p)
            .map(|f| (*i, f))
            .map_err(|e| Error::Ingestion {
                path: p.clone(),
                reason: e.to_string(),
            })
    });
    frames.into_iter().collect()
}

/// Evaluates every `%08d.png` frame of `gt_dir` against `pred_dir`.
pub fn eval_dirs(pred_dir: &Path, gt_dir: &Path) -> Result<MetricReport> {
    let gt = load_all(gt_dir)?;
    if gt.is_empty() {
        return Err(Error::Ingestion {
            path: gt_dir.to_path_buf(),
            reason: "no %08d.png frames found".into(),
        });
    }
    let pred = load_all(pred_dir)?;
    let no_pred: Vec<usize> = gt.keys().filter(|i| !pred.contains_key(i)).copied().collect();
    if let Some(&first) = no_pred.first() {
        return Err(Error::Ingestion {
            path: pred_dir.join(super::frame_file_name(first)),
            reason: missing_message("prediction", &no_pred),
        });
    }
    let pred: BTreeMap<usize, Frame> = pred.into_iter().filter(|(i, _)| gt.contains_key(i)).collect();
    eval_frames(&pred, &gt)
}
