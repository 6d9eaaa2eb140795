use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Field, GridSpec, Rank, Representation, SpaceTimeField, TimeGrid};
use crate::error::{Error, Result};
use crate::io::{atomic_write, atomic_write_json};

/// JSON header stored next to the `.f64` payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotHeader {
    pub name: String,
    pub grid: GridSpec,
    pub components: usize,
    pub representation: Representation,
    pub time: Option<TimeGrid>,
    pub frames: usize,
    pub dtype: String,
    pub byte_order: String,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub frames: Vec<Field>,
}

impl Snapshot {
    pub fn into_space_time(self) -> Result<SpaceTimeField> {
        let time = self
            .header
            .time
            .ok_or_else(|| Error::InvalidArgument("snapshot has no time grid".into()))?;
        SpaceTimeField::new(time, self.frames)
    }
}

fn write_frames(dir: &Path, name: &str, frames: &[&Field], time: Option<TimeGrid>) -> Result<()> {
    let first = frames[0];
    let header = SnapshotHeader {
        name: name.to_string(),
        grid: *first.grid(),
        components: first.components(),
        representation: first.representation(),
        time,
        frames: frames.len(),
        dtype: "f64".into(),
        byte_order: "little".into(),
    };
    let mut bytes = Vec::with_capacity(frames.len() * first.data().len() * 8);
    for f in frames {
        for v in f.data() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    atomic_write(&dir.join(format!("{name}.f64")), &bytes)?;
    atomic_write_json(&dir.join(format!("{name}.json")), &header)
}

/// Writes `<name>.json` and `<name>.f64` into `dir`.
pub fn write_snapshot(dir: &Path, name: &str, field: &Field) -> Result<()> {
    write_frames(dir, name, &[field], None)
}

pub fn write_space_time_snapshot(dir: &Path, name: &str, field: &SpaceTimeField) -> Result<()> {
    let frames: Vec<&Field> = field.frames().iter().collect();
    write_frames(dir, name, &frames, Some(*field.time()))
}

pub fn read_snapshot(dir: &Path, name: &str) -> Result<Snapshot> {
    let header: SnapshotHeader = serde_json::from_slice(&fs::read(dir.join(format!("{name}.json")))?)?;
    let bytes = fs::read(dir.join(format!("{name}.f64")))?;
    let rank = Rank::from_components(header.components)?;
    let per_frame = header.grid.len() * header.components;
    if bytes.len() != per_frame * header.frames * 8 {
        return Err(Error::InvalidArgument(format!(
            "payload has {} bytes, header implies {}",
            bytes.len(),
            per_frame * header.frames * 8
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let frames = values
        .chunks(per_frame)
        .map(|c| Ok(Field::from_data(header.grid, rank, c.to_vec())?.with_representation(header.representation)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Snapshot { header, frames })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sample_space_time, sample_vector};

    #[test]
    fn round_trip() {
        let dir = std::env::temp_dir().join(format!("nsreg-snap-{}", std::process::id()));
        let g = GridSpec::new(4.0, 8).unwrap();
        let u = sample_vector(g, |x| [x[0], x[1] * x[2], -1.0]).unwrap();
        write_snapshot(&dir, "u", &u).unwrap();
        let s = read_snapshot(&dir, "u").unwrap();
        assert_eq!(s.frames[0], u);
        let tg = TimeGrid::unit(3).unwrap();
        let st = sample_space_time(g, tg, Rank::Scalar, |x, t, o| o[0] = t * x[0]).unwrap();
        write_space_time_snapshot(&dir, "st", &st).unwrap();
        let back = read_snapshot(&dir, "st").unwrap().into_space_time().unwrap();
        assert_eq!(back, st);
        fs::remove_dir_all(&dir).ok();
    }
}
