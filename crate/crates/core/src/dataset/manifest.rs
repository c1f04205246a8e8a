//! Line-delimited manifest and zone files plus 8-bit PGM patch storage.
//!
//! Manifest records (one per line, tab separated):
//! `frame_id  video_id  zone_id  patch_path  label  kind  tags`
//!
//! Lines starting with `#` are comments, except `# provenance: <text>` and
//! `#video<TAB>video_id<TAB>tags`, which declare the dataset provenance and
//! video-level default tags respectively. Zone records live in a sibling
//! `zones.tsv`: `zone_id  x:y;x:y;...  entry:i,j  exit:i,j`.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder, ImageReader};

use super::types::{AnnotatedFrame, ConditionTags, Dataset, DetectionZone, ImagePatch};
use super::DatasetError;

pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const ZONES_FILE: &str = "zones.tsv";
const PROVENANCE_PREFIX: &str = "# provenance: ";
const VIDEO_DEFAULTS_PREFIX: &str = "#video\t";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

/// Loads and validates a dataset. `path` may name the manifest file or the
/// directory holding `manifest.tsv`.
pub fn load_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    let manifest = manifest_path(path);
    if !manifest.exists() {
        return Err(DatasetError::MissingFile(manifest));
    }
    let root = manifest.parent().unwrap_or(Path::new(".")).to_path_buf();
    let zones = load_zones(&root.join(ZONES_FILE))?;
    let text = fs::read_to_string(&manifest).map_err(io_err(&manifest))?;

    let malformed = |line: usize, message: String| DatasetError::Malformed {
        path: manifest.clone(),
        line,
        message,
    };

    let mut provenance = String::new();
    let mut video_defaults: HashMap<String, ConditionTags> = HashMap::new();
    let mut frames = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        if let Some(rest) = raw.strip_prefix(PROVENANCE_PREFIX) {
            provenance = rest.to_string();
            continue;
        }
        if let Some(rest) = raw.strip_prefix(VIDEO_DEFAULTS_PREFIX) {
            let (video, tags) = rest
                .split_once('\t')
                .ok_or_else(|| malformed(line_no, "video defaults need video_id and tags".into()))?;
            let tags: ConditionTags = tags.parse().map_err(|e| malformed(line_no, e))?;
            video_defaults.insert(video.to_string(), tags);
            continue;
        }
        if raw.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 7 {
            return Err(malformed(
                line_no,
                format!("expected 7 tab-separated fields, got {}", fields.len()),
            ));
        }
        let label = fields[4].parse().map_err(|e| malformed(line_no, e))?;
        let kind = fields[5].parse().map_err(|e| malformed(line_no, e))?;
        let tags: ConditionTags = fields[6].parse().map_err(|e| malformed(line_no, e))?;
        if fields[0].is_empty() {
            return Err(malformed(line_no, "empty frame_id".into()));
        }
        let patch = read_pgm(&root.join(fields[3]))?;
        frames.push(AnnotatedFrame {
            frame_id: fields[0].to_string(),
            video_id: fields[1].to_string(),
            zone_id: fields[2].to_string(),
            patch,
            label,
            annotation_kind: kind,
            tags,
        });
    }

    // video defaults may appear anywhere in the file, so inherit after the pass
    let frames = frames
        .into_iter()
        .map(|mut frame| {
            if let Some(defaults) = video_defaults.get(&frame.video_id) {
                frame.tags = frame.tags.inherit(defaults);
            }
            if !zones.contains_key(&frame.zone_id) {
                return Err(DatasetError::DanglingZone(frame.zone_id.clone()));
            }
            Ok(frame)
        })
        .collect::<Result<Vec<_>, _>>()?;

    Dataset::new(frames, zones, provenance)
}

fn load_zones(path: &Path) -> Result<BTreeMap<String, DetectionZone>, DatasetError> {
    let mut zones = BTreeMap::new();
    if !path.exists() {
        return Ok(zones);
    }
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let malformed = |line: usize, message: String| DatasetError::Malformed {
        path: path.to_path_buf(),
        line,
        message,
    };
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 4 {
            return Err(malformed(
                line_no,
                format!("expected 4 tab-separated fields, got {}", fields.len()),
            ));
        }
        let polygon = fields[1]
            .split(';')
            .map(|v| {
                let (x, y) = v.split_once(':').ok_or_else(|| format!("bad vertex {v:?}"))?;
                let x: f64 = x.parse().map_err(|_| format!("bad x in {v:?}"))?;
                let y: f64 = y.parse().map_err(|_| format!("bad y in {v:?}"))?;
                Ok((x, y))
            })
            .collect::<Result<Vec<_>, String>>()
            .map_err(|e| malformed(line_no, e))?;
        let entry = parse_edge(fields[2], "entry").map_err(|e| malformed(line_no, e))?;
        let exit = parse_edge(fields[3], "exit").map_err(|e| malformed(line_no, e))?;
        let zone = DetectionZone {
            zone_id: fields[0].to_string(),
            polygon,
            entry_edge: entry,
            exit_edge: exit,
        };
        zone.validate()?;
        if zones.insert(zone.zone_id.clone(), zone).is_some() {
            return Err(malformed(line_no, format!("duplicate zone {}", fields[0])));
        }
    }
    Ok(zones)
}

fn parse_edge(field: &str, prefix: &str) -> Result<(usize, usize), String> {
    let rest = field
        .strip_prefix(prefix)
        .and_then(|r| r.strip_prefix(':'))
        .ok_or_else(|| format!("expected {prefix}:i,j, got {field:?}"))?;
    let (i, j) = rest
        .split_once(',')
        .ok_or_else(|| format!("expected {prefix}:i,j, got {field:?}"))?;
    Ok((
        i.parse().map_err(|_| format!("bad index in {field:?}"))?,
        j.parse().map_err(|_| format!("bad index in {field:?}"))?,
    ))
}

fn patch_file_name(frame_id: &str) -> String {
    let safe: String = frame_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("patches/{safe}.pgm")
}

/// Writes `dataset` into directory `dir` in canonical form: manifest,
/// zone file and one PGM per frame under `patches/`.
pub fn save_dataset(dataset: &Dataset, dir: &Path) -> Result<PathBuf, DatasetError> {
    fs::create_dir_all(dir.join("patches")).map_err(io_err(dir))?;

    let manifest = dir.join(MANIFEST_FILE);
    let file = fs::File::create(&manifest).map_err(io_err(&manifest))?;
    let mut out = BufWriter::new(file);
    let write_err = io_err(&manifest);
    let mut body = String::new();
    if !dataset.provenance.is_empty() {
        body.push_str(PROVENANCE_PREFIX);
        body.push_str(&dataset.provenance.replace(['\n', '\r'], " "));
        body.push('\n');
    }
    for frame in dataset.frames() {
        let rel = patch_file_name(&frame.frame_id);
        write_pgm(&frame.patch, &dir.join(&rel))?;
        body.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            frame.frame_id,
            frame.video_id,
            frame.zone_id,
            rel,
            frame.label,
            frame.annotation_kind.as_str(),
            frame.tags
        ));
    }
    out.write_all(body.as_bytes()).map_err(write_err)?;
    out.flush().map_err(io_err(&manifest))?;

    let zones_path = dir.join(ZONES_FILE);
    let mut zones_body = String::new();
    for zone in dataset.zones().values() {
        let vertices: Vec<String> = zone
            .polygon
            .iter()
            .map(|(x, y)| format!("{x}:{y}"))
            .collect();
        zones_body.push_str(&format!(
            "{}\t{}\tentry:{},{}\texit:{},{}\n",
            zone.zone_id,
            vertices.join(";"),
            zone.entry_edge.0,
            zone.entry_edge.1,
            zone.exit_edge.0,
            zone.exit_edge.1
        ));
    }
    fs::write(&zones_path, zones_body).map_err(io_err(&zones_path))?;
    Ok(manifest)
}

fn read_pgm(path: &Path) -> Result<ImagePatch, DatasetError> {
    if !path.exists() {
        return Err(DatasetError::MissingFile(path.to_path_buf()));
    }
    let image_err = |e: image::ImageError| DatasetError::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let img = ImageReader::open(path)
        .map_err(io_err(path))?
        .with_guessed_format()
        .map_err(io_err(path))?
        .decode()
        .map_err(image_err)?
        .to_luma8();
    let (w, h) = img.dimensions();
    let pixels = img.as_raw().iter().map(|&v| f64::from(v) / 255.0).collect();
    ImagePatch::new(w as usize, h as usize, pixels)
}

fn write_pgm(patch: &ImagePatch, path: &Path) -> Result<(), DatasetError> {
    let bytes: Vec<u8> = patch
        .pixels()
        .iter()
        .map(|&p| (p * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    let file = fs::File::create(path).map_err(io_err(path))?;
    let encoder = PnmEncoder::new(BufWriter::new(file))
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary));
    encoder
        .write_image(
            &bytes,
            patch.width() as u32,
            patch.height() as u32,
            ExtendedColorType::L8,
        )
        .map_err(|e| DatasetError::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ClassLabel, AnnotationKind};

    #[test]
    fn empty_manifest_loads_as_empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(MANIFEST_FILE), "").unwrap();
        let d = load_dataset(dir.path()).unwrap();
        assert_eq!(d.len(), 0);
        assert!(d.zones().is_empty());
    }

    #[test]
    fn missing_manifest_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_dataset(&dir.path().join("nope.tsv")).unwrap_err();
        assert!(matches!(err, DatasetError::MissingFile(_)));
    }

    #[test]
    fn dangling_zone_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("patches")).unwrap();
        let patch = ImagePatch::filled(4, 4, 0.0).unwrap();
        write_pgm(&patch, &dir.path().join("patches/f0.pgm")).unwrap();
        fs::write(
            dir.path().join(MANIFEST_FILE),
            "f0\tv0\tz9\tpatches/f0.pgm\t+1\tlocalization\t-\n",
        )
        .unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert_eq!(err.to_string(), "dangling zone_id z9");
    }

    #[test]
    fn malformed_record_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join(MANIFEST_FILE),
            "# provenance: test\n\nf0\tv0\tz0\n",
        )
        .unwrap();
        match load_dataset(dir.path()).unwrap_err() {
            DatasetError::Malformed { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn video_defaults_fill_unlabeled_tags() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("patches")).unwrap();
        let patch = ImagePatch::filled(4, 4, 0.2).unwrap();
        write_pgm(&patch, &dir.path().join("patches/f0.pgm")).unwrap();
        fs::write(
            dir.path().join(ZONES_FILE),
            "z0\t0:0;1:0;1:1;0:1\tentry:0,1\texit:2,3\n",
        )
        .unwrap();
        fs::write(
            dir.path().join(MANIFEST_FILE),
            "f0\tv0\tz0\tpatches/f0.pgm\t-1\tboundary\troad=wet\n#video\tv0\ttime_of_day=night,road=clean\n",
        )
        .unwrap();
        let d = load_dataset(dir.path()).unwrap();
        let f = &d.frames()[0];
        assert_eq!(f.label, ClassLabel::NonVehicle);
        assert_eq!(f.annotation_kind, AnnotationKind::Boundary);
        assert_eq!(f.tags.time_of_day, crate::dataset::TimeOfDay::Night);
        // frame-level value wins over the video default
        assert_eq!(f.tags.road, crate::dataset::RoadCondition::Wet);
        assert!((f.patch.get(0, 0) - 51.0 / 255.0).abs() < 1e-12);
    }
}
