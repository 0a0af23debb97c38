//! Text formats: spin CSVs, 1-based edge lists, row index files.
//!
//! Every file written here starts with one `#` line of `key=value` fields
//! (tool, command, config hash, seed, node count). Readers skip `#` lines,
//! apart from picking up `nodes=` when present.

use std::fmt::Write as _;
use std::path::Path;

use sparse_ising::model::{pair_table, CouplingVector, SpinDataset};

use crate::error::{CliError, CliResult};

/// Provenance written as the first line of every output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub command: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub nodes: Option<usize>,
}

impl Header {
    pub fn line(&self) -> String {
        let mut s = format!(
            "# sparse-ising {} command={} config_hash={} seed={}",
            env!("CARGO_PKG_VERSION"),
            self.command,
            self.config_hash,
            self.seed.map_or_else(|| "none".to_string(), |s| s.to_string())
        );
        if let Some(k) = self.nodes {
            let _ = write!(s, " nodes={k}");
        }
        s.push('\n');
        s
    }
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Non-comment, non-blank lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn header_nodes(text: &str) -> Option<usize> {
    text.lines()
        .take_while(|l| l.trim_start().starts_with('#'))
        .flat_map(|l| l.split_whitespace())
        .find_map(|f| f.strip_prefix("nodes=").and_then(|v| v.parse().ok()))
}

fn bad(path: &Path, line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{}:{line}: {msg}", path.display()))
}

/// Headerless integer spins; with `zero_one`, entries are 0/1 and map to -1/+1.
pub fn parse_spins(text: &str, path: &Path, zero_one: bool) -> CliResult<SpinDataset> {
    let mut k = None;
    let mut spins = Vec::new();
    let mut n = 0;
    for (line, row) in data_lines(text) {
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        match k {
            None => k = Some(fields.len()),
            Some(k) if k != fields.len() => {
                return Err(bad(path, line, format!("expected {k} columns, found {}", fields.len())));
            }
            _ => {}
        }
        for f in fields {
            let v: i64 = f.parse().map_err(|_| bad(path, line, format!("`{f}` is not an integer")))?;
            let s = match (zero_one, v) {
                (true, 0) => -1,
                (true, 1) => 1,
                (false, -1) => -1,
                (false, 1) => 1,
                _ => {
                    let allowed = if zero_one { "0 or 1" } else { "-1 or 1 (use --zero-one for 0/1 data)" };
                    return Err(bad(path, line, format!("spin {v} must be {allowed}")));
                }
            };
            spins.push(s);
        }
        n += 1;
    }
    let k = k.ok_or_else(|| CliError::Validation(format!("{}: no data rows", path.display())))?;
    SpinDataset::from_row_major(n, k, &spins).map_err(CliError::from)
}

pub fn read_spins(path: &Path, zero_one: bool) -> CliResult<SpinDataset> {
    parse_spins(&read_text(path)?, path, zero_one)
}

pub fn format_spins(data: &SpinDataset, header: &Header) -> String {
    let mut s = header.line();
    for row in 0..data.num_obs() {
        for j in 0..data.num_nodes() {
            if j > 0 {
                s.push(',');
            }
            s.push_str(if data.spin(row, j) > 0 { "1" } else { "-1" });
        }
        s.push('\n');
    }
    s
}

/// `j,k,weight` lines, 1-based with `j < k`. The node count comes from
/// `nodes` if given, else from the header, else from the largest index.
pub fn parse_edges(text: &str, path: &Path, nodes: Option<usize>) -> CliResult<CouplingVector> {
    let mut edges = Vec::new();
    for (line, row) in data_lines(text) {
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(bad(path, line, "expected `j,k,weight`"));
        }
        let j: usize = fields[0].parse().map_err(|_| bad(path, line, "bad node index"))?;
        let k: usize = fields[1].parse().map_err(|_| bad(path, line, "bad node index"))?;
        let w: f64 = fields[2].parse().map_err(|_| bad(path, line, "bad weight"))?;
        if j == 0 || j >= k {
            return Err(bad(path, line, "indices are 1-based with j < k"));
        }
        if !w.is_finite() {
            return Err(bad(path, line, "weight is not finite"));
        }
        edges.push((line, j - 1, k - 1, w));
    }
    let k = nodes
        .or_else(|| header_nodes(text))
        .or_else(|| edges.iter().map(|e| e.2 + 1).max())
        .ok_or_else(|| CliError::Validation(format!("{}: cannot infer the node count", path.display())))?;
    let mut beta = CouplingVector::zeros(k);
    for &(line, a, b, w) in &edges {
        if b >= k {
            return Err(bad(path, line, format!("node {} exceeds node count {k}", b + 1)));
        }
        if beta.get(a, b) != 0.0 {
            return Err(bad(path, line, "duplicate edge"));
        }
        beta.set(a, b, w);
    }
    Ok(beta)
}

pub fn read_edges(path: &Path, nodes: Option<usize>) -> CliResult<CouplingVector> {
    parse_edges(&read_text(path)?, path, nodes)
}

/// Nonzero couplings as `j,k,weight`.
pub fn format_edges(beta: &CouplingVector, header: &Header) -> String {
    let mut s = header.line();
    for (a, b, w) in beta.edges() {
        let _ = writeln!(s, "{},{},{:?}", a + 1, b + 1, w);
    }
    s
}

/// Every pair with a value, as `j,k,value` (used for frequencies).
pub fn format_pair_values(k: usize, values: &[f64], header: &Header) -> String {
    let mut s = header.line();
    for ((a, b), v) in pair_table(k).into_iter().zip(values) {
        let _ = writeln!(s, "{},{},{:?}", a + 1, b + 1, v);
    }
    s
}

/// 1-based row numbers, one per line or comma separated.
pub fn parse_rows(text: &str, path: &Path, n: usize) -> CliResult<Vec<usize>> {
    let mut rows = Vec::new();
    for (line, row) in data_lines(text) {
        for f in row.split(',').map(str::trim).filter(|f| !f.is_empty()) {
            let r: usize = f.parse().map_err(|_| bad(path, line, format!("`{f}` is not a row number")))?;
            if r == 0 || r > n {
                return Err(bad(path, line, format!("row {r} outside 1..={n}")));
            }
            rows.push(r - 1);
        }
    }
    if rows.is_empty() {
        return Err(CliError::Validation(format!("{}: no rows listed", path.display())));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(nodes: Option<usize>) -> Header {
        Header { command: "test".into(), config_hash: "ab12".into(), seed: Some(3), nodes }
    }

    #[test]
    fn spins_round_trip_byte_identical() {
        let data = SpinDataset::from_rows(&[vec![1i8, -1, 1], vec![-1, -1, 1]]).unwrap();
        let text = format_spins(&data, &header(Some(3)));
        let back = parse_spins(&text, Path::new("x"), false).unwrap();
        assert_eq!(back, data);
        assert_eq!(format_spins(&back, &header(Some(3))), text);
    }

    #[test]
    fn zero_one_mapping() {
        let a = parse_spins("0,1\n1,1\n", Path::new("x"), true).unwrap();
        let b = parse_spins("-1,1\n1,1\n", Path::new("x"), false).unwrap();
        assert_eq!(a, b);
        assert!(parse_spins("0,1\n", Path::new("x"), false).is_err());
        assert!(parse_spins("-1,1\n", Path::new("x"), true).is_err());
        assert!(parse_spins("1,1\n1\n", Path::new("x"), false).is_err());
    }

    #[test]
    fn edges_round_trip_byte_identical() {
        let beta = CouplingVector::from_edges(4, &[(0, 1, 1.25), (2, 3, -0.1 + 0.2), (0, 3, 1e-17)]).unwrap();
        let text = format_edges(&beta, &header(Some(4)));
        let back = parse_edges(&text, Path::new("x"), None).unwrap();
        assert_eq!(back, beta);
        assert_eq!(format_edges(&back, &header(Some(4))), text);
    }

    #[test]
    fn edge_node_count_sources() {
        let text = "# nodes=6\n1,2,0.5\n";
        assert_eq!(parse_edges(text, Path::new("x"), None).unwrap().num_nodes(), 6);
        assert_eq!(parse_edges(text, Path::new("x"), Some(8)).unwrap().num_nodes(), 8);
        assert_eq!(parse_edges("2,5,1\n", Path::new("x"), None).unwrap().num_nodes(), 5);
        assert!(parse_edges("", Path::new("x"), None).is_err());
        assert!(parse_edges("2,1,1\n", Path::new("x"), None).is_err());
        assert!(parse_edges("1,2,1\n1,2,3\n", Path::new("x"), None).is_err());
        assert!(parse_edges("1,7,1\n", Path::new("x"), Some(4)).is_err());
    }

    #[test]
    fn row_files() {
        assert_eq!(parse_rows("# test rows\n1\n3,4\n", Path::new("x"), 4).unwrap(), vec![0, 2, 3]);
        assert!(parse_rows("5\n", Path::new("x"), 4).is_err());
        assert!(parse_rows("0\n", Path::new("x"), 4).is_err());
    }
}
