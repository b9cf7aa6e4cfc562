//! Text formats: clouds and profiles as CSV, estimates as JSON.
//!
//! Numbers are written in plain decimal notation with at least 17 significant digits,
//! which round-trips every `f64`.

use std::io::{BufRead, Write};

use crate::defect::DefectProfile;
use crate::error::{Error, Result};
use crate::estimators::ReachEstimate;
use crate::geom::PointCloud;

/// Formats `x` in decimal notation with at least 17 significant digits.
pub fn format_number(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 {
            "0.00000000000000000".to_string()
        } else {
            x.to_string()
        };
    }
    let magnitude = x.abs().log10().floor() as i32;
    // One spare digit guards against `log10` landing just below a power of ten.
    let decimals = (17 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Writes one point per row; each `comments` entry becomes a `# ` line first.
pub fn write_cloud<W: Write>(mut w: W, cloud: &PointCloud, comments: &[String]) -> Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    for p in cloud.iter() {
        let row: Vec<String> = p.iter().map(|&x| format_number(x)).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a cloud CSV. Blank lines and lines starting with `#` are skipped; every other
/// line must hold the same number of comma-separated finite numbers.
pub fn read_cloud<R: BufRead>(r: R) -> Result<PointCloud> {
    let mut dim = 0;
    let mut data = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let mut count = 0;
        for field in text.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("not a number: {:?}", field.trim()),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("non-finite value {v}"),
                });
            }
            data.push(v);
            count += 1;
        }
        if dim == 0 {
            dim = count;
        } else if count != dim {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {dim} columns, found {count}"),
            });
        }
    }
    if data.is_empty() {
        return Err(Error::InvalidInput("the file contains no points".into()));
    }
    PointCloud::new(dim, data)
}

/// Writes the `t,h` table of a profile.
pub fn write_profile<W: Write>(mut w: W, profile: &DefectProfile) -> Result<()> {
    writeln!(w, "t,h")?;
    for (&t, &h) in profile.scales().iter().zip(profile.values()) {
        writeln!(w, "{},{}", format_number(t), format_number(h))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `t,h` table written by [`write_profile`]. The order is not stored in the
/// table and must be supplied.
pub fn read_profile<R: BufRead>(r: R, order: u8) -> Result<DefectProfile> {
    let mut scales = Vec::new();
    let mut values = Vec::new();
    let mut lines = r.lines().enumerate();
    let header = lines.next().map(|(_, l)| l).transpose()?;
    if header.as_deref().map(str::trim) != Some("t,h") {
        return Err(Error::Parse {
            line: 1,
            message: "expected header `t,h`".into(),
        });
    }
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse {
            line: i + 1,
            message,
        };
        let (t, h) = line
            .split_once(',')
            .ok_or_else(|| bad("expected two columns".into()))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("not a number: {:?}", s.trim())))
        };
        scales.push(parse(t)?);
        values.push(parse(h)?);
    }
    DefectProfile::new(scales, values, order)
}

pub fn write_estimate<W: Write>(mut w: W, estimate: &ReachEstimate) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, estimate)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip_in_decimal() {
        for x in [0.0, 1.0, -0.5, 1.0 / 3.0, 1e-7, 123456.789, 2.5e10, -7.25e-3] {
            let s = format_number(x);
            assert!(!s.contains('e'), "{s}");
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let digits = s.chars().filter(|c| c.is_ascii_digit()).count();
            assert!(digits >= 17, "{s}");
        }
    }

    #[test]
    fn cloud_round_trip() {
        let c = PointCloud::from_rows(&[vec![0.1, -2.0], vec![1.0 / 3.0, 5e-9]]).unwrap();
        let mut buf = Vec::new();
        write_cloud(&mut buf, &c, &["seed 3".into()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# seed 3\n"));
        assert_eq!(read_cloud(&buf[..]).unwrap(), c);
    }

    #[test]
    fn cloud_errors_name_the_line() {
        let err = read_cloud("# c\n1,2\n3,x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = read_cloud("1,2\n\n3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(read_cloud("".as_bytes()).is_err());
        assert!(read_cloud("# only comments\n".as_bytes()).is_err());
        assert!(read_cloud("1,inf\n".as_bytes()).is_err());
    }

    #[test]
    fn profile_round_trip() {
        let p = DefectProfile::new(vec![0.0, 0.5, 1.0], vec![0.0, 0.1, 1.0 / 3.0], 2).unwrap();
        let mut buf = Vec::new();
        write_profile(&mut buf, &p).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("t,h\n"));
        assert_eq!(read_profile(&buf[..], 2).unwrap(), p);
        assert!(read_profile("x,y\n".as_bytes(), 2).is_err());
    }
}
