//! Plain-text persistence for channel sets and beamformer states.
//!
//! Both use one CSV table `name,layer,row,col,re,im`, preceded by
//! `# key=value` header lines.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use num_complex::Complex64;

use crate::beamformer::BeamformerState;
use crate::channel::{CMatrix, CVector, ChannelSet};
use crate::error::{Error, Result};

const COLUMNS: [&str; 6] = ["name", "layer", "row", "col", "re", "im"];

pub type Header = BTreeMap<String, String>;

fn write_header<W: Write>(out: &mut W, header: &Header) -> Result<()> {
    for (k, v) in header {
        writeln!(out, "# {k}={v}")?;
    }
    Ok(())
}

fn emit_matrix<W: Write>(w: &mut csv::Writer<W>, name: &str, layer: usize, m: &CMatrix) -> Result<()> {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            w.write_record([name.to_string(), layer.to_string(), r.to_string(), c.to_string(), z.re.to_string(), z.im.to_string()])?;
        }
    }
    Ok(())
}

struct Entry {
    name: String,
    layer: usize,
    row: usize,
    col: usize,
    value: Complex64,
}

fn parse_table<R: Read>(mut input: R) -> Result<(Header, Vec<Entry>)> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut header = Header::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                header.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
    }
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let cols: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if cols != COLUMNS {
        return Err(Error::Parse(format!("unexpected columns {cols:?}")));
    }
    let num = |s: &str, what: &str| -> Result<f64> { s.trim().parse().map_err(|_| Error::Parse(format!("bad {what} `{s}`"))) };
    let idx = |s: &str, what: &str| -> Result<usize> { s.trim().parse().map_err(|_| Error::Parse(format!("bad {what} `{s}`"))) };
    let mut entries = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        entries.push(Entry {
            name: rec[0].to_string(),
            layer: idx(&rec[1], "layer")?,
            row: idx(&rec[2], "row")?,
            col: idx(&rec[3], "col")?,
            value: Complex64::new(num(&rec[4], "real part")?, num(&rec[5], "imaginary part")?),
        });
    }
    Ok((header, entries))
}

/// Collects entries named `name` in `layer` into a dense matrix sized by the largest indices.
fn gather(entries: &[Entry], name: &str, layer: usize) -> Result<CMatrix> {
    let sel: Vec<&Entry> = entries.iter().filter(|e| e.name == name && e.layer == layer).collect();
    if sel.is_empty() {
        return Err(Error::Parse(format!("missing block {name}[{layer}]")));
    }
    let rows = sel.iter().map(|e| e.row).max().unwrap() + 1;
    let cols = sel.iter().map(|e| e.col).max().unwrap() + 1;
    if sel.len() != rows * cols {
        return Err(Error::Parse(format!("block {name}[{layer}] has {} of {} entries", sel.len(), rows * cols)));
    }
    let mut m = CMatrix::zeros(rows, cols);
    let mut seen = vec![false; rows * cols];
    for e in sel {
        if std::mem::replace(&mut seen[e.row * cols + e.col], true) {
            return Err(Error::Parse(format!("duplicate entry {name}[{layer}]({}, {})", e.row, e.col)));
        }
        m[(e.row, e.col)] = e.value;
    }
    Ok(m)
}

fn layer_count(header: &Header) -> Result<usize> {
    header
        .get("layers")
        .ok_or_else(|| Error::Parse("missing `layers` header".into()))?
        .parse()
        .map_err(|_| Error::Parse("bad `layers` header".into()))
}

pub fn write_channels<W: Write>(mut out: W, ch: &ChannelSet, extra: &Header) -> Result<()> {
    let mut header = extra.clone();
    header.insert("layers".into(), ch.num_layers().to_string());
    header.insert("wavelength".into(), ch.wavelength.to_string());
    write_header(&mut out, &header)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for (l, f) in ch.f.iter().enumerate() {
        emit_matrix(&mut w, "f", l + 1, f)?;
    }
    emit_matrix(&mut w, "g", 0, &ch.g)?;
    w.flush()?;
    Ok(())
}

pub fn read_channels<R: Read>(input: R) -> Result<ChannelSet> {
    let (header, entries) = parse_table(input)?;
    let layers = layer_count(&header)?;
    let wavelength = header
        .get("wavelength")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse("missing or bad `wavelength` header".into()))?;
    let f = (1..=layers).map(|l| gather(&entries, "f", l)).collect::<Result<Vec<_>>>()?;
    let ch = ChannelSet {
        f,
        g: gather(&entries, "g", 0)?,
        wavelength,
    };
    ch.validate()?;
    Ok(ch)
}

fn column(m: CMatrix, what: &str) -> Result<CVector> {
    if m.ncols() != 1 {
        return Err(Error::Parse(format!("{what} must be a single column")));
    }
    Ok(m.column(0).into_owned())
}

pub fn write_state<W: Write>(mut out: W, state: &BeamformerState, extra: &Header) -> Result<()> {
    let mut header = extra.clone();
    header.insert("layers".into(), state.theta.len().to_string());
    write_header(&mut out, &header)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    emit_matrix(&mut w, "w", 0, &CMatrix::from_column_slice(state.w.len(), 1, state.w.as_slice()))?;
    for (l, t) in state.theta.iter().enumerate() {
        emit_matrix(&mut w, "theta", l + 1, &CMatrix::from_column_slice(t.len(), 1, t.as_slice()))?;
    }
    emit_matrix(&mut w, "v", 0, &CMatrix::from_column_slice(state.v.len(), 1, state.v.as_slice()))?;
    w.flush()?;
    Ok(())
}

pub fn read_state<R: Read>(input: R) -> Result<BeamformerState> {
    let (header, entries) = parse_table(input)?;
    let layers = layer_count(&header)?;
    Ok(BeamformerState {
        w: column(gather(&entries, "w", 0)?, "w")?,
        theta: (1..=layers)
            .map(|l| column(gather(&entries, "theta", l)?, "theta"))
            .collect::<Result<Vec<_>>>()?,
        v: column(gather(&entries, "v", 0)?, "v")?,
    })
}
