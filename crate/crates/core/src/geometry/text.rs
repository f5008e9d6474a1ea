//! Plaintext domain blocks:
//!
//! ```text
//! kind = polygon
//! vertices = 0 0  1 0  1 1  0 1
//! ```
//!
//! Disks take `center` and `radius`, ellipses `center`, `a` and `b`.

use std::fmt;
use std::str::FromStr;

use super::{Domain, DomainKind, GeometryError};

fn parse_err(msg: impl Into<String>) -> GeometryError {
    GeometryError::Parse(msg.into())
}

pub(crate) fn parse_numbers(key: &str, value: &str) -> Result<Vec<f64>, GeometryError> {
    value
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| parse_err(format!("malformed number '{t}' for key '{key}'")))
        })
        .collect()
}

fn single(key: &str, value: &str) -> Result<f64, GeometryError> {
    match parse_numbers(key, value)?.as_slice() {
        [v] => Ok(*v),
        _ => Err(parse_err(format!("key '{key}' expects one number"))),
    }
}

fn pair(key: &str, value: &str) -> Result<[f64; 2], GeometryError> {
    match parse_numbers(key, value)?.as_slice() {
        [x, y] => Ok([*x, *y]),
        _ => Err(parse_err(format!("key '{key}' expects two numbers"))),
    }
}

impl Domain {
    /// Builds a domain from `key = value` entries. Unknown keys are errors.
    pub fn from_entries<'a>(
        entries: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, GeometryError> {
        let mut kind = None;
        let mut center = [0.0, 0.0];
        let (mut radius, mut a, mut b, mut vertices) = (None, None, None, None);
        for (key, value) in entries {
            match key {
                "kind" => kind = Some(value.trim().to_string()),
                "center" => center = pair(key, value)?,
                "radius" => radius = Some(single(key, value)?),
                "a" => a = Some(single(key, value)?),
                "b" => b = Some(single(key, value)?),
                "vertices" => {
                    let nums = parse_numbers(key, value)?;
                    if nums.len() % 2 != 0 {
                        return Err(parse_err("vertices need an even number of coordinates"));
                    }
                    vertices = Some(nums.chunks(2).map(|c| [c[0], c[1]]).collect::<Vec<_>>());
                }
                other => return Err(parse_err(format!("unknown key '{other}'"))),
            }
        }
        let missing = |k: &str| parse_err(format!("missing key '{k}'"));
        match kind.as_deref() {
            Some("disk") => Domain::disk(center, radius.ok_or_else(|| missing("radius"))?),
            Some("ellipse") => Domain::ellipse(
                center,
                a.ok_or_else(|| missing("a"))?,
                b.ok_or_else(|| missing("b"))?,
            ),
            Some("polygon") => Domain::polygon(vertices.ok_or_else(|| missing("vertices"))?),
            Some(other) => Err(parse_err(format!("unknown domain kind '{other}'"))),
            None => Err(missing("kind")),
        }
    }

    /// Single-line description used in report echoes.
    pub fn summary(&self) -> String {
        self.to_string().lines().collect::<Vec<_>>().join("; ")
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            DomainKind::Disk { center, radius } => {
                writeln!(f, "kind = disk")?;
                writeln!(f, "center = {} {}", center[0], center[1])?;
                write!(f, "radius = {radius}")
            }
            DomainKind::Ellipse { center, a, b } => {
                writeln!(f, "kind = ellipse")?;
                writeln!(f, "center = {} {}", center[0], center[1])?;
                writeln!(f, "a = {a}")?;
                write!(f, "b = {b}")
            }
            DomainKind::Polygon { vertices } => {
                writeln!(f, "kind = polygon")?;
                write!(f, "vertices =")?;
                for v in vertices {
                    write!(f, "  {} {}", v[0], v[1])?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for Domain {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut entries = Vec::new();
        for line in s.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected 'key = value', got '{line}'")))?;
            entries.push((k.trim(), v.trim()));
        }
        Domain::from_entries(entries)
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn parses_each_kind() {
        let d: Domain = "kind = disk\ncenter = 1 2\nradius = 3".parse().unwrap();
        assert_eq!(d, Domain::disk([1.0, 2.0], 3.0).unwrap());
        let e: Domain = "kind = ellipse\na = 2\nb = 1".parse().unwrap();
        assert_eq!(e, Domain::ellipse([0.0, 0.0], 2.0, 1.0).unwrap());
        let p: Domain = "kind = polygon\nvertices = 0 0  1 0  1 1  0 1"
            .parse()
            .unwrap();
        assert_eq!(p, Domain::unit_square());
    }

    #[test]
    fn rejects_bad_blocks() {
        assert!("kind = disk".parse::<Domain>().is_err());
        assert!("kind = blob\nradius = 1".parse::<Domain>().is_err());
        assert!("kind = disk\nradius = x".parse::<Domain>().is_err());
        assert!("kind = polygon\nvertices = 0 0 1"
            .parse::<Domain>()
            .is_err());
        assert!("kind = disk\nradius = 1\ncolor = red"
            .parse::<Domain>()
            .is_err());
    }

    proptest! {
        #[test]
        fn display_round_trips(
            cx in -10.0..10.0f64, cy in -10.0..10.0f64,
            a in 0.1..5.0f64, ratio in 0.1..1.0f64,
        ) {
            let e = Domain::ellipse([cx, cy], a, a * ratio).unwrap();
            prop_assert_eq!(e.to_string().parse::<Domain>().unwrap(), e);
            let r = Domain::rectangle([cx, cy], a, a * ratio).unwrap();
            prop_assert_eq!(r.to_string().parse::<Domain>().unwrap(), r);
        }
    }
}
