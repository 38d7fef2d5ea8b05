//! Fixture serialization.
//!
//! # Canonical fixture format
//!
//! Line-oriented text. The first non-comment line is the version line
//! `spmv-fixture 1`. Every other line is `key value`; lines starting with
//! `#` and blank lines are ignored. Keys may appear in any order, each once:
//!
//! ```text
//! spmv-fixture 1
//! origin generated
//! rng chacha8-seed_from_u64
//! params rows=32 cols=36 fill=nnz:50 values=1..=11 x=1..=9 seed=1
//! M 32
//! N 36
//! NNZ 50
//! rowPtr 33: 0 1 1 2 ...
//! colIdx 50: 25 13 1 ...
//! values 50: 8 3 7 ...
//! x 36: 3 2 2 ...
//! z 32: 40 0 12 ...
//! ```
//!
//! `rng` and `params` are present only for generated fixtures. Each array
//! line states its length before the colon. Reals are written with Rust's
//! shortest round-trip formatting, so reading a written file gives back
//! bit-identical values.
//!
//! # Matrix Market
//!
//! The `coordinate real general` subset (`integer` is read as real). Indices
//! are 1-based on disk and 0-based in memory. Vectors are exchanged in the
//! `array real general` form with a single column.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::csr::{dense_from_csr, spmv_dense_oracle, CsrMatrix, DenseVector};
use crate::error::{Error, Result};
use crate::fixture::{Fixture, FixtureMeta, Origin};
use crate::generator::{GenParams, IntRange, RNG_NAME};
use crate::scalar::Scalar;

pub const FORMAT_NAME: &str = "spmv-fixture";
pub const FORMAT_VERSION: u32 = 1;

fn write_array<W: Write, V: std::fmt::Display>(w: &mut W, name: &str, values: &[V]) -> Result<()> {
    write!(w, "{name} {}:", values.len())?;
    for v in values {
        write!(w, " {v}")?;
    }
    writeln!(w)?;
    Ok(())
}

fn params_to_text(p: &GenParams) -> String {
    format!(
        "rows={} cols={} fill={} values={} x={} seed={}",
        p.rows, p.cols, p.fill, p.values, p.x, p.seed
    )
}

fn params_from_text(line: usize, text: &str) -> Result<GenParams> {
    let mut fields = HashMap::new();
    for item in text.split_whitespace() {
        let (k, v) = item.split_once('=').ok_or_else(|| {
            Error::parse(line, "params", format!("expected key=value, got {item:?}"))
        })?;
        fields.insert(k, v);
    }
    fn get<V: FromStr>(line: usize, fields: &HashMap<&str, &str>, key: &str) -> Result<V>
    where
        V::Err: std::fmt::Display,
    {
        let raw = fields
            .get(key)
            .ok_or_else(|| Error::parse(line, "params", format!("missing {key}")))?;
        raw.parse()
            .map_err(|e| Error::parse(line, "params", format!("{key}: {e}")))
    }
    Ok(GenParams {
        rows: get(line, &fields, "rows")?,
        cols: get(line, &fields, "cols")?,
        fill: get(line, &fields, "fill")?,
        values: get::<IntRange>(line, &fields, "values")?,
        x: get::<IntRange>(line, &fields, "x")?,
        seed: get(line, &fields, "seed")?,
    })
}

/// Writes `fixture` in the canonical format. The fixture is validated first.
pub fn write_fixture<T: Scalar, W: Write>(fixture: &Fixture<T>, mut w: W) -> Result<()> {
    fixture.validate()?;
    writeln!(w, "{FORMAT_NAME} {FORMAT_VERSION}")?;
    writeln!(w, "origin {}", fixture.meta.origin.as_str())?;
    if let Some(rng) = &fixture.meta.rng {
        writeln!(w, "rng {rng}")?;
    }
    if let Some(p) = &fixture.meta.params {
        writeln!(w, "params {}", params_to_text(p))?;
    }
    writeln!(w, "M {}", fixture.rows())?;
    writeln!(w, "N {}", fixture.cols())?;
    writeln!(w, "NNZ {}", fixture.nnz())?;
    write_array(&mut w, "rowPtr", &fixture.matrix.row_ptr)?;
    write_array(&mut w, "colIdx", &fixture.matrix.col_idx)?;
    write_array(&mut w, "values", &fixture.matrix.values)?;
    write_array(&mut w, "x", &fixture.x)?;
    write_array(&mut w, "z", &fixture.z)?;
    w.flush()?;
    Ok(())
}

fn parse_array<V: FromStr>(line: usize, field: &str, rest: &str) -> Result<Vec<V>>
where
    V::Err: std::fmt::Display,
{
    let (len, body) = rest
        .split_once(':')
        .ok_or_else(|| Error::parse(line, field, "expected `LEN: values...`"))?;
    let len: usize = len
        .trim()
        .parse()
        .map_err(|e| Error::parse(line, field, format!("bad length {len:?}: {e}")))?;
    let values = body
        .split_whitespace()
        .enumerate()
        .map(|(k, tok)| {
            tok.parse()
                .map_err(|e| Error::parse(line, field, format!("entry {k} {tok:?}: {e}")))
        })
        .collect::<Result<Vec<V>>>()?;
    if values.len() != len {
        return Err(Error::parse(
            line,
            field,
            format!("declared {len} entries, found {}", values.len()),
        ));
    }
    Ok(values)
}

/// Parses a canonical fixture without any validation beyond the format
/// itself. Use [`read_fixture`] unless the fixture is known to be suspect
/// and should be inspected anyway.
pub fn parse_fixture<T: Scalar, R: BufRead>(r: R) -> Result<Fixture<T>> {
    let mut lines = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        lines.push((k + 1, trimmed.to_string()));
    }
    let mut it = lines.into_iter();
    let (first_no, first) = it
        .next()
        .ok_or_else(|| Error::parse(1, "version", "empty document"))?;
    match first.split_whitespace().collect::<Vec<_>>().as_slice() {
        [name, ver] if *name == FORMAT_NAME => {
            if ver.parse::<u32>().ok() != Some(FORMAT_VERSION) {
                return Err(Error::parse(
                    first_no,
                    "version",
                    format!("unsupported version {ver}"),
                ));
            }
        }
        _ => {
            return Err(Error::parse(
                first_no,
                "version",
                format!("expected `{FORMAT_NAME} {FORMAT_VERSION}`"),
            ))
        }
    }

    let mut fields: HashMap<String, (usize, String)> = HashMap::new();
    for (no, line) in it {
        let (key, rest) = line
            .split_once(char::is_whitespace)
            .unwrap_or((line.as_str(), ""));
        if fields
            .insert(key.to_string(), (no, rest.trim().to_string()))
            .is_some()
        {
            return Err(Error::parse(no, key, "duplicate key"));
        }
    }
    let mut take = |key: &str| {
        fields
            .remove(key)
            .ok_or_else(|| Error::parse(0, key, "missing field"))
    };
    fn scalar<V: FromStr>(key: &str, (no, raw): (usize, String)) -> Result<V>
    where
        V::Err: std::fmt::Display,
    {
        raw.parse()
            .map_err(|e| Error::parse(no, key, format!("{raw:?}: {e}")))
    }

    let (origin_no, origin_raw) = take("origin")?;
    let origin = Origin::parse(&origin_raw).ok_or_else(|| {
        Error::parse(
            origin_no,
            "origin",
            format!("unknown origin {origin_raw:?}"),
        )
    })?;
    let rows: usize = scalar("M", take("M")?)?;
    let cols: usize = scalar("N", take("N")?)?;
    let nnz_line = take("NNZ")?;
    let nnz_no = nnz_line.0;
    let nnz: usize = scalar("NNZ", nnz_line)?;
    let arr = |key: &str, (no, raw): (usize, String)| parse_array::<usize>(no, key, &raw);
    let row_ptr = arr("rowPtr", take("rowPtr")?)?;
    let col_idx = arr("colIdx", take("colIdx")?)?;
    let (vno, vraw) = take("values")?;
    let values = parse_array::<T>(vno, "values", &vraw)?;
    let (xno, xraw) = take("x")?;
    let x = parse_array::<T>(xno, "x", &xraw)?;
    let (zno, zraw) = take("z")?;
    let z = parse_array::<T>(zno, "z", &zraw)?;
    let rng = fields.remove("rng").map(|(_, v)| v);
    let params = match fields.remove("params") {
        Some((no, raw)) => Some(params_from_text(no, &raw)?),
        None => None,
    };
    if let Some((key, (no, _))) = fields.into_iter().next() {
        return Err(Error::parse(no, key, "unknown field"));
    }
    if col_idx.len() != nnz || values.len() != nnz {
        return Err(Error::parse(
            nnz_no,
            "NNZ",
            format!(
                "NNZ is {nnz} but colIdx has {} and values has {} entries",
                col_idx.len(),
                values.len()
            ),
        ));
    }

    Ok(Fixture {
        matrix: CsrMatrix::sequential(rows, cols, row_ptr, col_idx, values),
        x,
        z,
        meta: FixtureMeta {
            origin,
            rng,
            params,
        },
    })
}

/// Parses and fully validates a canonical fixture: CSR invariants, vector
/// lengths and agreement of `z` with the dense oracle.
pub fn read_fixture<T: Scalar, R: BufRead>(r: R) -> Result<Fixture<T>> {
    let fixture = parse_fixture(r)?;
    fixture.validate()?;
    Ok(fixture)
}

pub fn write_fixture_file<T: Scalar>(fixture: &Fixture<T>, path: impl AsRef<Path>) -> Result<()> {
    write_fixture(fixture, BufWriter::new(File::create(path)?))
}

pub fn read_fixture_file<T: Scalar>(path: impl AsRef<Path>) -> Result<Fixture<T>> {
    read_fixture(BufReader::new(File::open(path)?))
}

/// Writes the matrix as 1-based coordinates sorted by `(row, col)`.
pub fn export_matrix_market<T: Scalar, W: Write>(fixture: &Fixture<T>, mut w: W) -> Result<()> {
    let a = &fixture.matrix;
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", fixture.rows(), fixture.cols(), fixture.nnz())?;
    for row in 0..a.local_rows {
        let mut entries: Vec<(usize, T)> = a.row_entries(row).collect();
        entries.sort_by_key(|&(c, _)| c);
        for (col, v) in entries {
            writeln!(w, "{} {} {}", row + 1, col + 1, v)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes a vector as a single-column Matrix Market array.
pub fn export_vector_market<T: Scalar, W: Write>(values: &[T], mut w: W) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} 1", values.len())?;
    for v in values {
        writeln!(w, "{v}")?;
    }
    w.flush()?;
    Ok(())
}

struct MarketLines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> MarketLines<R> {
    fn new(r: R) -> Self {
        MarketLines {
            inner: r.lines(),
            line: 0,
        }
    }

    fn header(&mut self) -> Result<Vec<String>> {
        let first = self
            .inner
            .next()
            .ok_or_else(|| Error::parse(1, "header", "empty file"))??;
        self.line = 1;
        let tokens: Vec<String> = first
            .split_whitespace()
            .map(|t| t.to_ascii_lowercase())
            .collect();
        if tokens.first().map(String::as_str) != Some("%%matrixmarket") {
            return Err(Error::parse(1, "header", "missing %%MatrixMarket banner"));
        }
        if tokens.len() != 5 || tokens[1] != "matrix" {
            return Err(Error::parse(
                1,
                "header",
                "expected `%%MatrixMarket matrix FORMAT FIELD SYMMETRY`",
            ));
        }
        Ok(tokens)
    }

    /// Next data line, skipping comments and blanks.
    fn data(&mut self) -> Result<Option<(usize, String)>> {
        for line in self.inner.by_ref() {
            let line = line?;
            self.line += 1;
            let t = line.trim();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            return Ok(Some((self.line, t.to_string())));
        }
        Ok(None)
    }
}

fn check_qualifiers(tokens: &[String], format: &str) -> Result<()> {
    if tokens[2] != format {
        return Err(Error::Unsupported(format!(
            "format {:?} (only {format} is supported)",
            tokens[2]
        )));
    }
    match tokens[3].as_str() {
        "real" | "double" | "integer" => {}
        other => {
            return Err(Error::Unsupported(format!(
                "field qualifier {other:?} (only real and integer are supported)"
            )))
        }
    }
    if tokens[4] != "general" {
        return Err(Error::Unsupported(format!(
            "symmetry qualifier {:?} (only general is supported)",
            tokens[4]
        )));
    }
    Ok(())
}

fn parse_tok<V: FromStr>(line: usize, field: &str, tok: Option<&str>) -> Result<V>
where
    V::Err: std::fmt::Display,
{
    let tok = tok.ok_or_else(|| Error::parse(line, field, "missing value"))?;
    tok.parse()
        .map_err(|e| Error::parse(line, field, format!("{tok:?}: {e}")))
}

/// Reads a single-column Matrix Market array.
pub fn read_vector_market<T: Scalar, R: BufRead>(r: R) -> Result<Vec<T>> {
    let mut lines = MarketLines::new(r);
    let tokens = lines.header()?;
    check_qualifiers(&tokens, "array")?;
    let (no, size) = lines
        .data()?
        .ok_or_else(|| Error::parse(lines.line, "size", "missing size line"))?;
    let mut it = size.split_whitespace();
    let len: usize = parse_tok(no, "size", it.next())?;
    let width: usize = parse_tok(no, "size", it.next())?;
    if width != 1 {
        return Err(Error::Unsupported(format!(
            "array with {width} columns; expected a vector"
        )));
    }
    let mut out = Vec::with_capacity(len);
    while let Some((no, line)) = lines.data()? {
        out.push(parse_tok(no, "value", line.split_whitespace().next())?);
    }
    if out.len() != len {
        return Err(Error::parse(
            lines.line,
            "value",
            format!("expected {len} entries, found {}", out.len()),
        ));
    }
    Ok(out)
}

/// Source of `x` when importing a bare matrix.
#[derive(Debug, Clone)]
pub enum XSource<T> {
    Provided(Vec<T>),
    /// Random integers drawn with the crate's seeded generator.
    Generate {
        range: IntRange,
        seed: u64,
    },
}

/// How `z` is obtained when importing a bare matrix.
#[derive(Debug, Clone)]
pub enum ZPolicy<T> {
    /// Compute `z` with the dense oracle.
    Derive,
    /// Use the given vector; it must agree with the oracle.
    Provided(Vec<T>),
}

/// Reads a coordinate Matrix Market matrix into a validated fixture.
pub fn import_matrix_market<T: Scalar, R: BufRead>(
    r: R,
    x: XSource<T>,
    z: ZPolicy<T>,
) -> Result<Fixture<T>> {
    let mut lines = MarketLines::new(r);
    let tokens = lines.header()?;
    check_qualifiers(&tokens, "coordinate")?;
    let (no, size) = lines
        .data()?
        .ok_or_else(|| Error::parse(lines.line, "size", "missing size line"))?;
    let mut it = size.split_whitespace();
    let rows: usize = parse_tok(no, "size", it.next())?;
    let cols: usize = parse_tok(no, "size", it.next())?;
    let nnz: usize = parse_tok(no, "size", it.next())?;

    let mut triplets: Vec<(usize, usize, T)> = Vec::with_capacity(nnz);
    while let Some((no, line)) = lines.data()? {
        let mut it = line.split_whitespace();
        let i: usize = parse_tok(no, "row", it.next())?;
        let j: usize = parse_tok(no, "col", it.next())?;
        let v: T = parse_tok(no, "value", it.next())?;
        if i == 0 || i > rows || j == 0 || j > cols {
            return Err(Error::parse(
                no,
                "entry",
                format!("index ({i}, {j}) outside {rows} x {cols}"),
            ));
        }
        triplets.push((i - 1, j - 1, v));
    }
    if triplets.len() != nnz {
        return Err(Error::parse(
            lines.line,
            "entry",
            format!("size line says {nnz} entries, found {}", triplets.len()),
        ));
    }
    triplets.sort_by_key(|&(i, j, _)| (i, j));
    if let Some(w) = triplets
        .windows(2)
        .find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1))
    {
        return Err(Error::DuplicateEntry {
            row: w[0].0,
            col: w[0].1,
        });
    }

    let mut row_ptr = vec![0usize; rows + 1];
    for &(i, _, _) in &triplets {
        row_ptr[i + 1] += 1;
    }
    for k in 0..rows {
        row_ptr[k + 1] += row_ptr[k];
    }
    let col_idx = triplets.iter().map(|t| t.1).collect();
    let values = triplets.iter().map(|t| t.2).collect();
    let matrix = CsrMatrix::sequential(rows, cols, row_ptr, col_idx, values);

    let mut meta = FixtureMeta::new(Origin::MatrixMarket);
    let x = match x {
        XSource::Provided(v) => v,
        XSource::Generate { range, seed } => {
            if range.lo > range.hi {
                return Err(Error::InvalidParams(format!("empty x range {range}")));
            }
            meta.rng = Some(RNG_NAME.to_string());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..cols)
                .map(|_| T::from_i64(rng.random_range(range.lo..=range.hi)).expect("integer fits"))
                .collect()
        }
    };
    if x.len() != cols {
        return Err(Error::ValidationFailed(format!(
            "x has {} entries, expected N = {cols}",
            x.len()
        )));
    }
    let z = match z {
        ZPolicy::Derive => {
            spmv_dense_oracle(&dense_from_csr(&matrix)?, &DenseVector::from_vec(x.clone()))?.values
        }
        ZPolicy::Provided(v) => v,
    };
    let fixture = Fixture { matrix, x, z, meta };
    fixture.validate()?;
    Ok(fixture)
}
