//! Line-oriented text format for density matrices.
//!
//! ```text
//! gpdm 1
//! d 1
//! K 2
//! k 2
//! nnz 1
//! 2 1 | 0 3 | 1 0
//! ```
//!
//! Coordinates of one frequency are comma-joined when d > 1. Floats use the
//! shortest representation that parses back to the same bits.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lattice::{DensityMatrix, Freq, Key, LatticeBox, C64};

const MAGIC: &str = "gpdm 1";

pub fn to_text(m: &DensityMatrix) -> String {
    let lat = m.lattice();
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "d {}", lat.dim());
    let _ = writeln!(s, "K {}", lat.cutoff());
    let _ = writeln!(s, "k {}", m.order());
    let _ = writeln!(s, "nnz {}", m.len());
    for (key, v) in m.sorted() {
        let u: Vec<String> = key.unprimed().iter().map(|f| f.to_string()).collect();
        let p: Vec<String> = key.primed().iter().map(|f| f.to_string()).collect();
        let _ = writeln!(s, "{} | {} | {} {}", u.join(" "), p.join(" "), v.re, v.im);
    }
    s
}

fn header(lines: &mut std::iter::Enumerate<std::str::Lines<'_>>, name: &str) -> Result<u64> {
    let (i, line) = lines.next().ok_or(Error::Parse {
        line: 0,
        msg: format!("missing header field {name}"),
    })?;
    let mut it = line.split_whitespace();
    match (it.next(), it.next(), it.next()) {
        (Some(n), Some(v), None) if n == name => v.parse().map_err(|_| Error::Parse {
            line: i + 1,
            msg: format!("bad value for {name}"),
        }),
        _ => Err(Error::Parse {
            line: i + 1,
            msg: format!("expected `{name} <int>`"),
        }),
    }
}

fn parse_freq(tok: &str, d: usize, line: usize) -> Result<Freq> {
    let coords: std::result::Result<Vec<i32>, _> = tok.split(',').map(|c| c.parse()).collect();
    let coords = coords.map_err(|_| Error::Parse {
        line,
        msg: format!("bad frequency `{tok}`"),
    })?;
    if coords.len() != d {
        return Err(Error::Parse {
            line,
            msg: format!("frequency `{tok}` has {} coordinates, expected {d}", coords.len()),
        });
    }
    Ok(Freq::new(&coords))
}

pub fn from_text(text: &str) -> Result<DensityMatrix> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == MAGIC => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected `{MAGIC}`"),
            })
        }
    }
    let d = header(&mut lines, "d")? as usize;
    let cutoff = header(&mut lines, "K")? as u32;
    let k = header(&mut lines, "k")? as usize;
    let nnz = header(&mut lines, "nnz")? as usize;
    let lat = LatticeBox::new(d, cutoff)?;
    let mut m = DensityMatrix::zero(k, lat);
    let mut count = 0;
    for (i, line) in lines {
        let ln = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split('|').collect();
        if parts.len() != 3 {
            return Err(Error::Parse {
                line: ln,
                msg: "expected two `|` separators".into(),
            });
        }
        let u: Vec<Freq> = parts[0]
            .split_whitespace()
            .map(|t| parse_freq(t, d, ln))
            .collect::<Result<_>>()?;
        let p: Vec<Freq> = parts[1]
            .split_whitespace()
            .map(|t| parse_freq(t, d, ln))
            .collect::<Result<_>>()?;
        if u.len() != k || p.len() != k {
            return Err(Error::Parse {
                line: ln,
                msg: format!("expected {k} frequencies on each side"),
            });
        }
        let nums: Vec<&str> = parts[2].split_whitespace().collect();
        if nums.len() != 2 {
            return Err(Error::Parse {
                line: ln,
                msg: "expected `re im`".into(),
            });
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|_| Error::Parse {
                line: ln,
                msg: format!("bad float `{s}`"),
            })
        };
        let v = C64::new(parse(nums[0])?, parse(nums[1])?);
        let key = Key::new(&u, &p);
        if m.get(&key) != C64::new(0.0, 0.0) {
            return Err(Error::Parse {
                line: ln,
                msg: "duplicate key".into(),
            });
        }
        m.insert(key, v).map_err(|e| Error::Parse {
            line: ln,
            msg: e.to_string(),
        })?;
        count += 1;
    }
    if count != nnz {
        return Err(Error::Parse {
            line: 5,
            msg: format!("nnz says {nnz} but {count} entries were read"),
        });
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{random_ensemble, Profile};

    #[test]
    fn round_trip_is_bit_exact() {
        for d in 1..=3 {
            let lat = LatticeBox::new(d, 1).unwrap();
            let m = random_ensemble(if d == 1 { 2 } else { 1 }, lat, 99 + d as u64, Profile::Decaying(1.3));
            let text = to_text(&m);
            let back = from_text(&text).unwrap();
            assert_eq!(back.len(), m.len());
            for (k, v) in m.iter() {
                let w = back.get(k);
                assert_eq!(v.re.to_bits(), w.re.to_bits());
                assert_eq!(v.im.to_bits(), w.im.to_bits());
            }
            assert_eq!(to_text(&back), text);
        }
    }

    #[test]
    fn sample_layout() {
        let lat = LatticeBox::new(1, 3).unwrap();
        let m = DensityMatrix::delta(
            lat,
            &[Freq::d1(2), Freq::d1(1)],
            &[Freq::d1(0), Freq::d1(3)],
            C64::new(1.0, -0.5),
        )
        .unwrap();
        assert_eq!(to_text(&m), "gpdm 1\nd 1\nK 3\nk 2\nnnz 1\n2 1 | 0 3 | 1 -0.5\n");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(from_text("nope").is_err());
        assert!(from_text("gpdm 1\nd 1\nK 1\nk 1\nnnz 1\n5 | 0 | 1 0\n").is_err());
        assert!(from_text("gpdm 1\nd 1\nK 1\nk 1\nnnz 2\n1 | 0 | 1 0\n").is_err());
        assert!(from_text("gpdm 1\nd 2\nK 1\nk 1\nnnz 1\n1 | 0,0 | 1 0\n").is_err());
    }
}
