//! Matrix files (Matrix Market array/coordinate and headerless CSV) and
//! JSON model descriptors.
//!
//! Floats are written in Rust's shortest round-trip decimal form, so a
//! save/load cycle reproduces the matrix bit-exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{
    build_coupled_heat_1d, build_indicator_actuator, build_laplacian_1d,
    build_reaction_diffusion_1d, ActuatorChannels, ActuatorKind, GeneratorModel, InputModel,
    ModelFamily,
};

/// On-disk matrix formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixFileFormat {
    /// Matrix Market, array or coordinate layout (decided on write by
    /// [`MatrixMarketLayout`], sniffed on read).
    MatrixMarket,
    /// Headerless CSV, row-major, '.' decimal separator.
    Csv,
}

impl MatrixFileFormat {
    /// Guess from the file extension; Matrix Market for `.mtx`.
    pub fn from_path(path: &Path) -> MatrixFileFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("mtx") => MatrixFileFormat::MatrixMarket,
            _ => MatrixFileFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixMarketLayout {
    Array,
    Coordinate,
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Write a dense matrix in Matrix Market format.
pub fn write_matrix_market(
    path: &Path,
    matrix: &Array2<f64>,
    layout: MatrixMarketLayout,
) -> Result<()> {
    let mut out = String::new();
    let (rows, cols) = matrix.dim();
    match layout {
        MatrixMarketLayout::Array => {
            out.push_str("%%MatrixMarket matrix array real general\n");
            out.push_str(&format!("{rows} {cols}\n"));
            // column-major entry order
            for j in 0..cols {
                for i in 0..rows {
                    out.push_str(&format!("{}\n", matrix[[i, j]]));
                }
            }
        }
        MatrixMarketLayout::Coordinate => {
            let nnz = matrix.iter().filter(|&&v| v != 0.0).count();
            out.push_str("%%MatrixMarket matrix coordinate real general\n");
            out.push_str(&format!("{rows} {cols} {nnz}\n"));
            for i in 0..rows {
                for j in 0..cols {
                    let v = matrix[[i, j]];
                    if v != 0.0 {
                        out.push_str(&format!("{} {} {}\n", i + 1, j + 1, v));
                    }
                }
            }
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

fn token_column(line: &str, token_index: usize) -> usize {
    // 1-based byte column of the token's first character
    let mut col = 1;
    for (k, tok) in line.split_whitespace().enumerate() {
        if k == token_index {
            if let Some(pos) = line.find(tok) {
                col = pos + 1;
            }
            break;
        }
    }
    col
}

/// Read a Matrix Market file (array or coordinate, real, general).
/// Duplicate coordinate entries are summed.
pub fn read_matrix_market(path: &Path) -> Result<Array2<f64>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, 1, "empty file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() < 5 || !fields[0].eq_ignore_ascii_case("%%MatrixMarket") {
        return Err(parse_err(1, 1, "missing %%MatrixMarket header"));
    }
    if !fields[1].eq_ignore_ascii_case("matrix") {
        return Err(parse_err(1, token_column(header, 1), "expected 'matrix'"));
    }
    let layout = if fields[2].eq_ignore_ascii_case("array") {
        MatrixMarketLayout::Array
    } else if fields[2].eq_ignore_ascii_case("coordinate") {
        MatrixMarketLayout::Coordinate
    } else {
        return Err(parse_err(
            1,
            token_column(header, 2),
            format!("unsupported layout '{}'", fields[2]),
        ));
    };
    if !fields[3].eq_ignore_ascii_case("real") {
        return Err(parse_err(
            1,
            token_column(header, 3),
            format!("unsupported field type '{}'", fields[3]),
        ));
    }
    if !fields[4].eq_ignore_ascii_case("general") {
        return Err(parse_err(
            1,
            token_column(header, 4),
            format!("unsupported symmetry '{}'", fields[4]),
        ));
    }

    // skip comments, find the size line
    let mut size_line = None;
    for (idx, line) in lines.by_ref() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        size_line = Some((idx + 1, line));
        break;
    }
    let (size_lineno, size_line) =
        size_line.ok_or_else(|| parse_err(2, 1, "missing size line"))?;
    let size_fields: Vec<&str> = size_line.split_whitespace().collect();

    let parse_usize = |lineno: usize, line: &str, k: usize, what: &str| -> Result<usize> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let tok = fields
            .get(k)
            .ok_or_else(|| parse_err(lineno, line.len().max(1), format!("missing {what}")))?;
        tok.parse::<usize>().map_err(|_| {
            parse_err(
                lineno,
                token_column(line, k),
                format!("invalid {what} '{tok}'"),
            )
        })
    };
    let parse_f64 = |lineno: usize, line: &str, k: usize| -> Result<f64> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let tok = fields
            .get(k)
            .ok_or_else(|| parse_err(lineno, line.len().max(1), "missing value"))?;
        tok.parse::<f64>().map_err(|_| {
            parse_err(
                lineno,
                token_column(line, k),
                format!("invalid number '{tok}'"),
            )
        })
    };

    let rows = parse_usize(size_lineno, size_line, 0, "row count")?;
    let cols = parse_usize(size_lineno, size_line, 1, "column count")?;
    let mut matrix = Array2::zeros((rows, cols));
    match layout {
        MatrixMarketLayout::Array => {
            if size_fields.len() != 2 {
                return Err(parse_err(
                    size_lineno,
                    token_column(size_line, 2),
                    "array size line must be 'rows cols'",
                ));
            }
            let mut entries = Vec::with_capacity(rows * cols);
            for (idx, line) in lines {
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('%') {
                    continue;
                }
                entries.push(parse_f64(idx + 1, line, 0)?);
            }
            if entries.len() != rows * cols {
                return Err(parse_err(
                    size_lineno,
                    1,
                    format!(
                        "expected {} entries, found {}",
                        rows * cols,
                        entries.len()
                    ),
                ));
            }
            let mut it = entries.into_iter();
            for j in 0..cols {
                for i in 0..rows {
                    matrix[[i, j]] = it.next().unwrap();
                }
            }
        }
        MatrixMarketLayout::Coordinate => {
            if size_fields.len() != 3 {
                return Err(parse_err(
                    size_lineno,
                    token_column(size_line, 2),
                    "coordinate size line must be 'rows cols nnz'",
                ));
            }
            let nnz = parse_usize(size_lineno, size_line, 2, "entry count")?;
            let mut seen = 0;
            for (idx, line) in lines {
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('%') {
                    continue;
                }
                let lineno = idx + 1;
                let i = parse_usize(lineno, line, 0, "row index")?;
                let j = parse_usize(lineno, line, 1, "column index")?;
                let v = parse_f64(lineno, line, 2)?;
                if i < 1 || i > rows {
                    return Err(parse_err(
                        lineno,
                        token_column(line, 0),
                        format!("row index {i} out of range 1..={rows}"),
                    ));
                }
                if j < 1 || j > cols {
                    return Err(parse_err(
                        lineno,
                        token_column(line, 1),
                        format!("column index {j} out of range 1..={cols}"),
                    ));
                }
                // duplicates sum, per the coordinate-format convention
                matrix[[i - 1, j - 1]] += v;
                seen += 1;
            }
            if seen != nnz {
                return Err(parse_err(
                    size_lineno,
                    1,
                    format!("size line announces {nnz} entries, found {seen}"),
                ));
            }
        }
    }
    Ok(matrix)
}

/// Write a headerless CSV matrix (row-major).
pub fn write_csv_matrix(path: &Path, matrix: &Array2<f64>) -> Result<()> {
    let mut out = String::new();
    for i in 0..matrix.nrows() {
        let row: Vec<String> = (0..matrix.ncols())
            .map(|j| format!("{}", matrix[[i, j]]))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Read a headerless CSV matrix; all rows must have equal length.
pub fn read_csv_matrix(path: &Path) -> Result<Array2<f64>> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        let mut col_start = 1;
        for field in line.split(',') {
            let trimmed = field.trim();
            let v = trimmed.parse::<f64>().map_err(|_| {
                parse_err(idx + 1, col_start, format!("invalid number '{trimmed}'"))
            })?;
            row.push(v);
            col_start += field.len() + 1;
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(parse_err(
                    idx + 1,
                    1,
                    format!("row has {} fields, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(1, 1, "empty CSV matrix"));
    }
    let r = rows.len();
    let c = rows[0].len();
    let mut matrix = Array2::zeros((r, c));
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            matrix[[i, j]] = v;
        }
    }
    Ok(matrix)
}

/// Read a matrix in the declared format.
pub fn read_matrix(path: &Path, format: MatrixFileFormat) -> Result<Array2<f64>> {
    match format {
        MatrixFileFormat::MatrixMarket => read_matrix_market(path),
        MatrixFileFormat::Csv => read_csv_matrix(path),
    }
}

/// Load a generator from a matrix file; the matrix must be square.
pub fn load_generator(path: &Path, format: MatrixFileFormat) -> Result<GeneratorModel> {
    let matrix = read_matrix(path, format)?;
    if matrix.nrows() != matrix.ncols() {
        return Err(Error::InvalidDimension(format!(
            "generator must be square, file holds {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    if matrix.nrows() < 2 {
        return Err(Error::InvalidDimension(
            "generator needs dimension at least 2".into(),
        ));
    }
    Ok(GeneratorModel {
        matrix,
        family: ModelFamily::Custom,
        grid: None,
        shift: 0.0,
    })
}

/// Load an input matrix; the support is the set of rows with a nonzero
/// entry.
pub fn load_input(path: &Path, format: MatrixFileFormat) -> Result<InputModel> {
    let matrix = read_matrix(path, format)?;
    let support = (0..matrix.nrows())
        .filter(|&i| (0..matrix.ncols()).any(|j| matrix[[i, j]] != 0.0))
        .collect();
    Ok(InputModel {
        matrix,
        support,
        kind: ActuatorKind::Custom,
    })
}

/// JSON description of a built-in model and its actuator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub family: ModelFamily,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub length: Option<f64>,
    #[serde(default)]
    pub shift: Option<f64>,
    /// 1-based inclusive grid interval for the indicator actuator.
    #[serde(default)]
    pub omega: Option<[usize; 2]>,
    #[serde(default)]
    pub channels: Option<ActuatorChannels>,
    /// Matrix file for `family = custom`.
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub input_path: Option<String>,
}

/// Build the generator and, when `omega` (or `input_path`) is present,
/// the input model described by a descriptor.
pub fn build_from_descriptor(
    desc: &ModelDescriptor,
) -> Result<(GeneratorModel, Option<InputModel>)> {
    let model = match desc.family {
        ModelFamily::Custom => {
            let path = desc.path.as_ref().ok_or_else(|| {
                Error::InvalidParameter("custom model needs a 'path' field".into())
            })?;
            let p = Path::new(path);
            let mut m = load_generator(p, MatrixFileFormat::from_path(p))?;
            if let Some(shift) = desc.shift {
                m = m.shifted(shift);
            }
            m
        }
        family => {
            let n = desc.n.ok_or_else(|| {
                Error::InvalidParameter("built-in models need an 'n' field".into())
            })?;
            let length = desc.length.unwrap_or(std::f64::consts::PI);
            match family {
                ModelFamily::Laplacian1d => build_laplacian_1d(n, length)?,
                ModelFamily::ReactionDiffusion => {
                    build_reaction_diffusion_1d(n, length, desc.shift.unwrap_or(0.0))?
                }
                ModelFamily::CoupledHeat => {
                    let base = build_coupled_heat_1d(n, length)?;
                    match desc.shift {
                        Some(mu) if mu != 0.0 => base.shifted(mu),
                        _ => base,
                    }
                }
                ModelFamily::Custom => unreachable!(),
            }
        }
    };
    let input = if let Some(path) = &desc.input_path {
        let p = Path::new(path);
        Some(load_input(p, MatrixFileFormat::from_path(p))?)
    } else if let Some([lo, hi]) = desc.omega {
        let channels = desc.channels.unwrap_or(ActuatorChannels::Default);
        // indicator actuators address the unshifted grid geometry
        Some(build_indicator_actuator(&model, (lo, hi), channels)?)
    } else {
        None
    };
    Ok((model, input))
}
