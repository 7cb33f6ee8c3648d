//! Point-cloud CSV: `frame,t,x,y,z,intensity,tag`, LF line endings.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::lidar::{LidarPoint, PointCloud, PointTag};
use crate::optics::Vec3;

pub const CSV_HEADER: &str = "frame,t,x,y,z,intensity,tag";

/// Positional decimal with at most 9 significant digits, trailing zeros trimmed.
pub fn fmt_sig9(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.8e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };

    let mut out = String::new();
    if negative {
        out.push('-');
    }
    // position of the decimal point relative to the first digit
    let point = exp + 1;
    if point <= 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-point) as usize));
        out.push_str(digits);
    } else if point as usize >= digits.len() {
        out.push_str(digits);
        out.extend(std::iter::repeat_n('0', point as usize - digits.len()));
    } else {
        out.push_str(&digits[..point as usize]);
        out.push('.');
        out.push_str(&digits[point as usize..]);
    }
    out
}

/// Writes frames in order, one point per line, preceded by a header.
pub fn write_csv<W: Write>(mut w: W, frames: &[PointCloud]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for cloud in frames {
        let t = fmt_sig9(cloud.timestamp);
        for p in &cloud.points {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                cloud.frame,
                t,
                fmt_sig9(p.position.x),
                fmt_sig9(p.position.y),
                fmt_sig9(p.position.z),
                fmt_sig9(p.intensity),
                p.tag
            )?;
        }
    }
    Ok(())
}

pub fn to_csv_string(frames: &[PointCloud]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, frames).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("csv output is ASCII")
}

/// Reads frames; consecutive rows sharing a frame index form one cloud. The
/// header line is optional.
pub fn read_csv<R: BufRead>(r: R) -> Result<Vec<PointCloud>> {
    let mut frames: Vec<PointCloud> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() || (line_no == 1 && line == CSV_HEADER) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::parse(
                line_no,
                format!("expected 7 fields, found {}", fields.len()),
            ));
        }
        let num = |idx: usize| -> Result<f64> {
            fields[idx]
                .parse::<f64>()
                .map_err(|_| Error::parse(line_no, format!("invalid number `{}`", fields[idx])))
        };
        let frame: u64 = fields[0]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("invalid frame `{}`", fields[0])))?;
        let t = num(1)?;
        let point = LidarPoint::new(
            Vec3::new(num(2)?, num(3)?, num(4)?),
            num(5)?,
            fields[6].parse::<PointTag>().map_err(|e| Error::parse(line_no, e))?,
        );
        match frames.last_mut() {
            Some(cloud) if cloud.frame == frame => cloud.points.push(point),
            _ => frames.push(PointCloud::new(frame, t, vec![point])),
        }
    }
    Ok(frames)
}

pub fn read_csv_file(path: &std::path::Path) -> Result<Vec<PointCloud>> {
    let f = std::fs::File::open(path)?;
    read_csv(std::io::BufReader::new(f))
}

pub fn write_csv_file(path: &std::path::Path, frames: &[PointCloud]) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_csv(&mut w, frames)?;
    w.flush()?;
    Ok(())
}
