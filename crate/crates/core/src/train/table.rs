//! Per-aspect embedding tables and their text / binary file formats.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Dense map from node id to a vector of fixed dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    aspect: String,
    dim: usize,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
}

const BINARY_MAGIC: &[u8; 8] = b"ASPEMB1\n";

impl EmbeddingTable {
    pub fn from_parts(aspect: impl Into<String>, dim: usize, ids: Vec<String>, data: Vec<f64>) -> Result<Self> {
        let aspect = aspect.into();
        if dim == 0 {
            return Err(Error::Bundle {
                aspect,
                message: "dimension must be positive".into(),
            });
        }
        if data.len() != ids.len() * dim {
            return Err(Error::Bundle {
                aspect,
                message: format!("{} values for {} rows of dimension {dim}", data.len(), ids.len()),
            });
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::Bundle {
                    aspect,
                    message: format!("duplicate row for node `{id}`"),
                });
            }
        }
        Ok(EmbeddingTable {
            aspect,
            dim,
            ids,
            index,
            data,
        })
    }

    pub fn zeros(aspect: impl Into<String>, dim: usize, ids: Vec<String>) -> Result<Self> {
        let n = ids.len() * dim;
        Self::from_parts(aspect, dim, ids, vec![0.0; n])
    }

    pub fn aspect(&self) -> &str {
        &self.aspect
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn row_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.row_index(id).map(|i| self.row(i))
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn set(&mut self, id: &str, values: &[f64]) -> Result<()> {
        let i = self.row_index(id).ok_or_else(|| Error::UnknownNode(id.to_string()))?;
        if values.len() != self.dim {
            return Err(Error::Bundle {
                aspect: self.aspect.clone(),
                message: format!("vector of length {} for dimension {}", values.len(), self.dim),
            });
        }
        self.row_mut(i).copy_from_slice(values);
        Ok(())
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.ids.len() * (self.dim * 14 + 16));
        out.push_str(&format!("{} {} {}\n", self.aspect, self.ids.len(), self.dim));
        for (i, id) in self.ids.iter().enumerate() {
            out.push_str(id);
            out.push('\t');
            for (j, x) in self.row(i).iter().enumerate() {
                if j > 0 {
                    out.push(' ');
                }
                out.push_str(&format_sig9(*x));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.data.len() * 8 + self.ids.len() * 12);
        out.extend_from_slice(BINARY_MAGIC);
        out.extend_from_slice(&(self.aspect.len() as u32).to_le_bytes());
        out.extend_from_slice(self.aspect.as_bytes());
        out.extend_from_slice(&(self.ids.len() as u64).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for (i, id) in self.ids.iter().enumerate() {
            out.extend_from_slice(&(id.len() as u32).to_le_bytes());
            out.extend_from_slice(id.as_bytes());
            for x in self.row(i) {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn write_text(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_binary()).map_err(|e| Error::io(path, e))
    }

    /// Writes binary when the extension is `bin`, text otherwise.
    pub fn write(&self, path: &Path) -> Result<()> {
        if is_binary_path(path) {
            self.write_binary(path)
        } else {
            self.write_text(path)
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.starts_with(BINARY_MAGIC) {
            Self::parse_binary(path, &bytes)
        } else {
            let text = String::from_utf8(bytes)
                .map_err(|_| Error::parse(path, 1, "header", "file is neither binary nor UTF-8 text"))?;
            Self::parse_text(path, &text)
        }
    }

    pub fn parse_text(path: &Path, text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "header", "empty embedding file"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 3 {
            return Err(Error::parse(path, 1, header, "expected `<aspect> <node_count> <dim>`"));
        }
        let count: usize = h[1]
            .parse()
            .map_err(|_| Error::parse(path, 1, h[1], "node count is not an integer"))?;
        let dim: usize = h[2]
            .parse()
            .ok()
            .filter(|&d| d > 0)
            .ok_or_else(|| Error::parse(path, 1, h[2], "dimension must be a positive integer"))?;
        let mut ids = Vec::with_capacity(count);
        let mut data = Vec::with_capacity(count * dim);
        let mut seen = std::collections::HashSet::with_capacity(count);
        for (i, line) in lines {
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let (id, values) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, lineno, line, "expected `<node_id>\\t<values>`"))?;
            if !seen.insert(id.to_string()) {
                return Err(Error::parse(path, lineno, id, "duplicate node row"));
            }
            let before = data.len();
            for v in values.split_whitespace() {
                data.push(
                    v.parse::<f64>()
                        .map_err(|_| Error::parse(path, lineno, v, "value is not a number"))?,
                );
            }
            if data.len() - before != dim {
                return Err(Error::parse(
                    path,
                    lineno,
                    id,
                    format!("row has {} values, header says {dim}", data.len() - before),
                ));
            }
            ids.push(id.to_string());
        }
        if ids.len() != count {
            return Err(Error::parse(
                path,
                1,
                h[1],
                format!("header declares {count} rows, found {}", ids.len()),
            ));
        }
        Self::from_parts(h[0], dim, ids, data)
    }

    pub fn parse_binary(path: &Path, bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor {
            path,
            bytes,
            pos: BINARY_MAGIC.len(),
        };
        let name_len = cur.u32()? as usize;
        let aspect = cur.string(name_len)?;
        let count = cur.u64()? as usize;
        let dim = cur.u32()? as usize;
        if dim == 0 {
            return Err(Error::parse(path, 0, "dim", "dimension must be positive"));
        }
        let mut ids = Vec::with_capacity(count);
        let mut data = Vec::with_capacity(count.saturating_mul(dim).min(1 << 28));
        for _ in 0..count {
            let l = cur.u32()? as usize;
            ids.push(cur.string(l)?);
            for _ in 0..dim {
                data.push(f64::from_le_bytes(cur.take(8)?.try_into().unwrap()));
            }
        }
        if cur.pos != bytes.len() {
            return Err(Error::parse(path, 0, "trailer", "trailing bytes after last row"));
        }
        Self::from_parts(aspect, dim, ids, data).map_err(|e| Error::parse(path, 0, "rows", e.to_string()))
    }
}

pub(crate) fn is_binary_path(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "bin")
}

struct Cursor<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::parse(self.path, 0, "binary", "unexpected end of file"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self, n: usize) -> Result<String> {
        let path = self.path;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| Error::parse(path, 0, "binary", "identifier is not UTF-8"))
    }
}

/// Shortest of fixed or scientific notation carrying 9 significant digits.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { format!("{x}") };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> EmbeddingTable {
        EmbeddingTable::from_parts(
            "APY",
            2,
            vec!["a".into(), "p".into(), "y".into()],
            vec![0.1, -2.5, 1e-7, 123456.789, -0.001953125, 3.0],
        )
        .unwrap()
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(-2.5), "-2.5");
        assert_eq!(format_sig9(0.1), "0.1");
        assert_eq!(format_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(format_sig9(123456.789), "123456.789");
        assert_eq!(format_sig9(1e-7), "1e-7");
        assert_eq!(format_sig9(9.9999999999), "10");
        assert_eq!(format_sig9(1.5e12), "1.5e12");
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let t = sample();
        let back = EmbeddingTable::parse_binary(Path::new("x"), &t.to_binary()).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn corrupt_header_is_a_parse_error() {
        let p = Path::new("t.emb");
        assert!(matches!(
            EmbeddingTable::parse_text(p, "APY two 2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            EmbeddingTable::parse_text(p, "APY 1 2\na\t1 2 3\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            EmbeddingTable::parse_text(p, "APY 2 1\na\t1\na\t2\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(EmbeddingTable::parse_text(p, "APY 3 1\na\t1\n").is_err());
        let mut bin = sample().to_binary();
        bin.truncate(bin.len() - 3);
        assert!(EmbeddingTable::parse_binary(p, &bin).is_err());
    }

    proptest! {
        #[test]
        fn text_round_trip_within_tolerance(values in proptest::collection::vec(-8.0f64..8.0, 1..40)) {
            let dim = values.len();
            let t = EmbeddingTable::from_parts("X", dim, vec!["n".into()], values).unwrap();
            let back = EmbeddingTable::parse_text(Path::new("x"), &t.to_text()).unwrap();
            prop_assert_eq!(back.ids(), t.ids());
            for (a, b) in t.data().iter().zip(back.data()) {
                prop_assert!((a - b).abs() <= 1e-8);
            }
        }
    }
}
