//! HHNF1 field files.
//!
//! Layout:
//!
//! ```text
//! HHNF1 <kind> <n> <dims...>\n
//! <lower...> <upper...>\n
//! ---\n
//! <payload: little-endian f64, row-major, components concatenated>
//! ```
//!
//! `kind` is one of `scalar`, `vector`, `antisym`. Vector components are
//! written in axis order; antisymmetric fields write the `i < j` components in
//! lexicographic pair order.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{pair_count, AntisymMatrixField, GridSpec, ScalarField, VectorField};

pub const MAGIC: &str = "HHNF1";
const SEPARATOR: &[u8] = b"\n---\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Scalar,
    Vector,
    Antisym,
}

impl FieldKind {
    pub fn component_count(self, n: usize) -> usize {
        match self {
            FieldKind::Scalar => 1,
            FieldKind::Vector => n,
            FieldKind::Antisym => pair_count(n),
        }
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldKind::Scalar => "scalar",
            FieldKind::Vector => "vector",
            FieldKind::Antisym => "antisym",
        })
    }
}

impl FromStr for FieldKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "scalar" => Ok(FieldKind::Scalar),
            "vector" => Ok(FieldKind::Vector),
            "antisym" => Ok(FieldKind::Antisym),
            _ => Err(()),
        }
    }
}

/// Any field that can be stored in an HHNF1 file.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Scalar(ScalarField),
    Vector(VectorField),
    Antisym(AntisymMatrixField),
}

impl Field {
    pub fn kind(&self) -> FieldKind {
        match self {
            Field::Scalar(_) => FieldKind::Scalar,
            Field::Vector(_) => FieldKind::Vector,
            Field::Antisym(_) => FieldKind::Antisym,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        match self {
            Field::Scalar(s) => s.grid(),
            Field::Vector(v) => v.grid(),
            Field::Antisym(a) => a.grid(),
        }
    }

    /// Component fields in file order.
    pub fn components(&self) -> Vec<&ScalarField> {
        match self {
            Field::Scalar(s) => vec![s],
            Field::Vector(v) => v.components().iter().collect(),
            Field::Antisym(a) => a.stored().iter().collect(),
        }
    }
}

impl From<ScalarField> for Field {
    fn from(s: ScalarField) -> Self {
        Field::Scalar(s)
    }
}

impl From<VectorField> for Field {
    fn from(v: VectorField) -> Self {
        Field::Vector(v)
    }
}

impl From<AntisymMatrixField> for Field {
    fn from(a: AntisymMatrixField) -> Self {
        Field::Antisym(a)
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Serializes a field to HHNF1 bytes.
pub fn encode(field: &Field) -> Vec<u8> {
    let grid = field.grid();
    let mut out = format!(
        "{MAGIC} {} {} {}\n{} {}",
        field.kind(),
        grid.ndim(),
        join(grid.dims()),
        join(grid.lower()),
        join(grid.upper()),
    )
    .into_bytes();
    out.extend_from_slice(SEPARATOR);
    let comps = field.components();
    out.reserve(comps.len() * grid.len() * 8);
    for c in comps {
        for v in c.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn write_field(field: &Field, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode(field))?;
    Ok(())
}

pub fn read_field(path: impl AsRef<Path>) -> Result<Field> {
    decode(&fs::read(path)?)
}

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset,
        message: message.into(),
    }
}

/// Whitespace-separated tokens of `line`, each with its absolute byte offset.
fn tokens(bytes: &[u8], start: usize) -> Result<Vec<(usize, &str)>> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| format_err(start + e.valid_up_to(), "header is not valid UTF-8"))?;
    let mut out = Vec::new();
    let mut pos = 0;
    for piece in text.split(' ') {
        if !piece.is_empty() {
            out.push((start + pos, piece));
        }
        pos += piece.len() + 1;
    }
    Ok(out)
}

/// Parses HHNF1 bytes.
pub fn decode(bytes: &[u8]) -> Result<Field> {
    let header_end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| format_err(0, "missing header line"))?;
    let header = tokens(&bytes[..header_end], 0)?;
    match header.first() {
        Some((_, m)) if *m == MAGIC => {}
        _ => return Err(format_err(0, "bad magic, expected HHNF1")),
    }
    let (kind_off, kind_tok) = *header
        .get(1)
        .ok_or_else(|| format_err(header_end, "missing field kind"))?;
    let kind: FieldKind = kind_tok
        .parse()
        .map_err(|_| format_err(kind_off, format!("unknown field kind `{kind_tok}`")))?;
    let (n_off, n_tok) = *header
        .get(2)
        .ok_or_else(|| format_err(header_end, "missing dimension"))?;
    let n: usize = n_tok
        .parse()
        .map_err(|_| format_err(n_off, format!("bad dimension `{n_tok}`")))?;
    if header.len() != 3 + n {
        return Err(format_err(
            header_end,
            format!("expected {n} axis sizes, found {}", header.len() - 3),
        ));
    }
    let mut dims = Vec::with_capacity(n);
    for &(off, tok) in &header[3..] {
        dims.push(
            tok.parse::<usize>()
                .map_err(|_| format_err(off, format!("bad axis size `{tok}`")))?,
        );
    }

    let bounds_start = header_end + 1;
    let sep_rel = bytes[bounds_start..]
        .windows(SEPARATOR.len())
        .position(|w| w == SEPARATOR)
        .ok_or_else(|| format_err(bounds_start, "missing `---` separator"))?;
    let bounds_end = bounds_start + sep_rel;
    let bound_toks = tokens(&bytes[bounds_start..bounds_end], bounds_start)?;
    if bound_toks.len() != 2 * n {
        return Err(format_err(
            bounds_start,
            format!("expected {} bounds, found {}", 2 * n, bound_toks.len()),
        ));
    }
    let mut bounds = Vec::with_capacity(2 * n);
    for &(off, tok) in &bound_toks {
        let v: f64 = tok
            .parse()
            .map_err(|_| format_err(off, format!("bad bound `{tok}`")))?;
        if !v.is_finite() {
            return Err(format_err(off, format!("non-finite bound `{tok}`")));
        }
        bounds.push(v);
    }
    let upper = bounds.split_off(n);
    let grid = GridSpec::new(dims, bounds, upper).map_err(|e| format_err(0, e.to_string()))?;

    let payload_start = bounds_end + SEPARATOR.len();
    let payload = &bytes[payload_start..];
    let ncomp = kind.component_count(n);
    let expected = ncomp * grid.len() * 8;
    if payload.len() != expected {
        return Err(format_err(
            payload_start + payload.len().min(expected),
            format!(
                "payload holds {} bytes, grid and kind require {expected}",
                payload.len()
            ),
        ));
    }
    let mut comps = payload
        .chunks_exact(grid.len() * 8)
        .map(|chunk| {
            let values = chunk
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
                .collect();
            ScalarField::new(grid.clone(), values)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(match kind {
        FieldKind::Scalar => Field::Scalar(comps.pop().expect("one component")),
        FieldKind::Vector => Field::Vector(VectorField::new(comps)?),
        FieldKind::Antisym => Field::Antisym(AntisymMatrixField::new(&grid, comps)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_vector_field_layout() {
        let g = GridSpec::cube(2, 3, -1.0, 1.0).unwrap();
        let f = Field::Vector(VectorField::zeros(&g));
        let bytes = encode(&f);
        let header = b"HHNF1 vector 2 3 3\n-1 -1 1 1\n---\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(bytes.len() - header.len(), 18 * 8);
        assert!(bytes[header.len()..].iter().all(|&b| b == 0));
        assert_eq!(decode(&bytes).unwrap(), f);
    }

    #[test]
    fn antisym_payload_size_n3() {
        let g = GridSpec::cube(3, 3, 0.0, 1.0).unwrap();
        let f = Field::Antisym(AntisymMatrixField::zeros(&g));
        let bytes = encode(&f);
        let header_len = bytes.len() - 3 * 27 * 8;
        assert!(bytes[..header_len].ends_with(b"\n---\n"));
        assert_eq!(decode(&bytes).unwrap().components().len(), 3);
    }

    #[test]
    fn payload_is_little_endian_ieee() {
        let g = GridSpec::cube(2, 3, 0.0, 2.0).unwrap();
        let mut s = ScalarField::zeros(&g);
        s.values_mut()[0] = 0.1;
        let bytes = encode(&Field::Scalar(s));
        let header = b"HHNF1 scalar 2 3 3\n0 0 2 2\n---\n";
        assert_eq!(
            &bytes[header.len()..header.len() + 8],
            &0.1f64.to_le_bytes()
        );
        assert_eq!(
            &bytes[header.len()..header.len() + 8],
            &[0x9a, 0x99, 0x99, 0x99, 0x99, 0x99, 0xb9, 0x3f]
        );
    }

    #[test]
    fn format_errors_carry_offsets() {
        match decode(b"HHNF2 scalar 2 3 3\n0 0 1 1\n---\n") {
            Err(Error::Format { offset: 0, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match decode(b"HHNF1 tensor 2 3 3\n0 0 1 1\n---\n") {
            Err(Error::Format { offset: 6, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match decode(b"HHNF1 scalar 2 3 3\n0 inf 1 1\n---\n") {
            Err(Error::Format { offset: 21, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let mut short = b"HHNF1 scalar 2 3 3\n0 0 1 1\n---\n".to_vec();
        short.extend_from_slice(&[0u8; 8 * 8]);
        match decode(&short) {
            Err(Error::Format { offset, message }) => {
                assert_eq!(offset, short.len());
                assert!(message.contains("payload"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            n in 2usize..=3,
            d in 3usize..=5,
            lo in -10.0f64..0.0,
            width in 0.1f64..10.0,
            kind in 0u8..3,
            seed in any::<u64>(),
        ) {
            let g = GridSpec::cube(n, d, lo, lo + width).unwrap();
            let mut state = seed;
            let mut next = move || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                f64::from_bits((state >> 12) | 0x3ff0_0000_0000_0000) - 1.5
            };
            let mut scalar = || {
                let vals = (0..g.len()).map(|_| next()).collect();
                ScalarField::new(g.clone(), vals).unwrap()
            };
            let field = match kind {
                0 => Field::Scalar(scalar()),
                1 => Field::Vector(VectorField::new((0..n).map(|_| scalar()).collect()).unwrap()),
                _ => Field::Antisym(
                    AntisymMatrixField::new(&g, (0..pair_count(n)).map(|_| scalar()).collect()).unwrap(),
                ),
            };
            let bytes = encode(&field);
            let back = decode(&bytes).unwrap();
            prop_assert_eq!(&back, &field);
            prop_assert_eq!(encode(&back), bytes);
        }
    }
}
