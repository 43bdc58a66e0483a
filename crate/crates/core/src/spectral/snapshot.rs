//! Plain-text snapshots of a field.
//!
//! Layout:
//!
//! ```text
//! dim,modes,points
//! 1,8,16
//! k1,re,im
//! -3,0,0
//! ...
//! ```
//!
//! Two-dimensional grids use `k1,k2,re,im`. Rows follow the lexicographic
//! lattice order, first axis slowest. Floats are written with Rust's
//! shortest round-trip formatting.

use std::fmt::Write as _;

use num_complex::Complex64;

use super::field::SpectralField;
use super::grid::TorusGrid;
use crate::error::{Error, Result};

pub fn to_csv(field: &SpectralField) -> String {
    let g = field.grid();
    let mut s = String::new();
    s.push_str("dim,modes,points\n");
    let _ = writeln!(s, "{},{},{}", g.dim(), g.modes(), g.points());
    let head: Vec<String> = (1..=g.dim()).map(|a| format!("k{a}")).collect();
    let _ = writeln!(s, "{},re,im", head.join(","));
    for (k, c) in g.frequencies().zip(field.coeffs()) {
        for &ka in &k[..g.dim()] {
            let _ = write!(s, "{ka},");
        }
        let _ = writeln!(s, "{:?},{:?}", c.re, c.im);
    }
    s
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        context: format!("snapshot line {line}"),
        message: message.into(),
    }
}

pub fn from_csv(text: &str) -> Result<SpectralField> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (n, header) = lines.next().ok_or_else(|| parse_err(1, "empty snapshot"))?;
    if header.trim() != "dim,modes,points" {
        return Err(parse_err(n + 1, format!("unexpected header {header:?}")));
    }
    let (n, dims) = lines
        .next()
        .ok_or_else(|| parse_err(2, "missing grid line"))?;
    let nums: Vec<usize> = dims
        .split(',')
        .map(|x| x.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err(n + 1, e.to_string()))?;
    if nums.len() != 3 {
        return Err(parse_err(n + 1, "grid line needs dim,modes,points"));
    }
    let grid = TorusGrid::new(nums[0], nums[1], nums[2])?;
    let (n, _) = lines
        .next()
        .ok_or_else(|| parse_err(3, "missing table header"))?;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.n_coeffs()];
    let mut seen = vec![false; grid.n_coeffs()];
    let mut last = n;
    for (n, line) in lines {
        last = n;
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != grid.dim() + 2 {
            return Err(parse_err(
                n + 1,
                format!("expected {} columns", grid.dim() + 2),
            ));
        }
        let k: Vec<i64> = cols[..grid.dim()]
            .iter()
            .map(|x| x.parse::<i64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(n + 1, e.to_string()))?;
        let idx = grid
            .index_of(&k)
            .ok_or_else(|| parse_err(n + 1, format!("frequency {k:?} is off the lattice")))?;
        let re: f64 = cols[grid.dim()]
            .parse()
            .map_err(|_| parse_err(n + 1, "bad real part"))?;
        let im: f64 = cols[grid.dim() + 1]
            .parse()
            .map_err(|_| parse_err(n + 1, "bad imaginary part"))?;
        if seen[idx] {
            return Err(parse_err(n + 1, format!("frequency {k:?} repeated")));
        }
        seen[idx] = true;
        coeffs[idx] = Complex64::new(re, im);
    }
    if seen.iter().any(|s| !s) {
        return Err(parse_err(last + 1, "coefficient table is incomplete"));
    }
    SpectralField::from_coeffs(grid, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        for dim in 1..=2 {
            let g = TorusGrid::new(dim, 8, 16).unwrap();
            let u = SpectralField::from_fn(g, |x| (x[0].sin() + 0.3 * x[1]).exp() / 3.0);
            let back = from_csv(&to_csv(&u)).unwrap();
            assert_eq!(back, u);
        }
    }

    #[test]
    fn layout_starts_with_header() {
        let g = TorusGrid::new(1, 4, 4).unwrap();
        let text = to_csv(&SpectralField::constant(g, 1.0));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "dim,modes,points");
        assert_eq!(lines[1], "1,4,4");
        assert_eq!(lines[2], "k1,re,im");
        assert_eq!(lines[3], "-1,0.0,0.0");
        assert_eq!(lines.len(), 7);
    }

    #[test]
    fn rejects_damaged_input() {
        let g = TorusGrid::new(1, 4, 4).unwrap();
        let text = to_csv(&SpectralField::constant(g, 1.0));
        let truncated: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(from_csv(&truncated).is_err());
        assert!(from_csv(&text.replace("-1,", "9,")).is_err());
        assert!(from_csv("").is_err());
    }
}
