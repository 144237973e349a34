//! Text file formats: edge lists, dense matrices, signal tables, trajectory
//! dumps and belief snapshots.
//!
//! Readers take a `source` path used only for error messages, so the same
//! parser serves files and in-memory buffers. Floats are written with `{:e}`,
//! which is the shortest representation that parses back to the same value.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use netssm_core::filter::NodeBelief;
use netssm_core::scenarios::{observe, Trajectory};
use netssm_core::{GraphSnapshot, ObservationPair};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default probability floor for belief dumps.
pub const DEFAULT_BELIEF_FLOOR: f64 = 1e-12;

pub(crate) fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader)
}

fn csv_error(source: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(source, io),
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => Error::parse(
            source,
            line,
            format!("expected {expected_len} fields, found {len}"),
        ),
        other => Error::parse(source, line, format!("{other:?}")),
    }
}

fn check_header<R: Read>(
    rdr: &mut csv::Reader<R>,
    source: &Path,
    expected: &[String],
) -> Result<()> {
    let header = rdr.headers().map_err(|e| csv_error(source, e))?;
    let found: Vec<&str> = header.iter().collect();
    if found != expected {
        return Err(Error::parse(
            source,
            1,
            format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                found.join(",")
            ),
        ));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    i: usize,
    name: &str,
    source: &Path,
) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec.get(i).unwrap_or("");
    raw.parse()
        .map_err(|_| Error::parse(source, line, format!("invalid {name} `{raw}`")))
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

/// Parses an edge list with header `src,dst`; a row `(s, d)` sets `A[d][s] = 1`.
///
/// With `order` unset the node count is the largest index plus one.
pub fn parse_edge_list<R: Read>(
    reader: R,
    source: &Path,
    order: Option<usize>,
) -> Result<GraphSnapshot> {
    let mut rdr = csv_reader(reader);
    check_header(&mut rdr, source, &["src".into(), "dst".into()])?;
    let mut edges = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(source, e))?;
        let src: usize = field(&rec, 0, "src", source)?;
        let dst: usize = field(&rec, 1, "dst", source)?;
        edges.push((src, dst, line_of(&rec)));
    }
    build_graph(&edges, source, order)
}

fn build_graph(
    edges: &[(usize, usize, u64)],
    source: &Path,
    order: Option<usize>,
) -> Result<GraphSnapshot> {
    let inferred = edges
        .iter()
        .map(|&(s, d, _)| s.max(d) + 1)
        .max()
        .unwrap_or(0);
    let order = match order {
        Some(n) => {
            if inferred > n {
                return Err(Error::Dimension {
                    path: source.into(),
                    message: format!(
                        "edge list references node {} but the graph has {n} nodes",
                        inferred - 1
                    ),
                });
            }
            n
        }
        None => inferred.max(netssm_core::state::MIN_ORDER),
    };
    let mut g = GraphSnapshot::empty(order)?;
    for &(src, dst, line) in edges {
        if src == dst {
            return Err(Error::parse(
                source,
                line,
                format!("self-loop on node {src}"),
            ));
        }
        g.set(dst, src, true)?;
    }
    Ok(g)
}

pub fn read_edge_list(path: &Path, order: Option<usize>) -> Result<GraphSnapshot> {
    parse_edge_list(open(path)?, path, order)
}

pub fn write_edge_list<W: Write>(mut w: W, graph: &GraphSnapshot) -> std::io::Result<()> {
    writeln!(w, "src,dst")?;
    for (src, dst) in graph.edges() {
        writeln!(w, "{src},{dst}")?;
    }
    w.flush()
}

pub fn save_edge_list(path: &Path, graph: &GraphSnapshot) -> Result<()> {
    write_edge_list(create(path)?, graph).map_err(|e| Error::io(path, e))
}

/// Parses the dense debug format: one line per row, entries `0`/`1`
/// separated by whitespace. Blank lines are ignored.
pub fn parse_dense(text: &str, source: &Path) -> Result<GraphSnapshot> {
    let mut rows: Vec<Vec<u8>> = Vec::new();
    let mut width = None;
    for (k, line) in text.lines().enumerate() {
        let line_no = k as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| match tok {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                _ => Err(Error::parse(
                    source,
                    line_no,
                    format!("expected 0 or 1, found `{tok}`"),
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::parse(
                    source,
                    line_no,
                    format!("expected {w} entries, found {}", row.len()),
                ))
            }
            _ => {}
        }
        if row.get(rows.len()) == Some(&1) {
            return Err(Error::parse(source, line_no, "nonzero diagonal entry"));
        }
        rows.push(row);
    }
    if width != Some(rows.len()) {
        return Err(Error::Dimension {
            path: source.into(),
            message: format!(
                "matrix has {} rows of width {}",
                rows.len(),
                width.unwrap_or(0)
            ),
        });
    }
    Ok(GraphSnapshot::from_dense(&rows)?)
}

pub fn format_dense(graph: &GraphSnapshot) -> String {
    let mut out = String::new();
    for row in graph.to_dense() {
        let line: Vec<String> = row.iter().map(|b| b.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Parses a signal table with header `t,node_0,...,node_{N-1}`; rows must
/// be numbered `1, 2, ...` in order.
pub fn parse_signals<R: Read>(
    reader: R,
    source: &Path,
    order: Option<usize>,
) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv_reader(reader);
    let header = rdr.headers().map_err(|e| csv_error(source, e))?.clone();
    let cols = header.len().saturating_sub(1);
    let expected: Vec<String> = std::iter::once("t".to_string())
        .chain((0..cols).map(|n| format!("node_{n}")))
        .collect();
    check_header(&mut rdr, source, &expected)?;
    if let Some(n) = order {
        if cols != n {
            return Err(Error::Dimension {
                path: source.into(),
                message: format!("signal table has {cols} node columns, expected {n}"),
            });
        }
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(source, e))?;
        let t: usize = field(&rec, 0, "t", source)?;
        if t != rows.len() + 1 {
            return Err(Error::parse(
                source,
                line_of(&rec),
                format!("expected t = {}, found {t}", rows.len() + 1),
            ));
        }
        let row = (1..=cols)
            .map(|i| field::<f64>(&rec, i, "signal value", source))
            .collect::<Result<Vec<_>>>()?;
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::parse(
                source,
                line_of(&rec),
                format!("non-finite signal value {v}"),
            ));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_signals(path: &Path, order: Option<usize>) -> Result<Vec<Vec<f64>>> {
    parse_signals(open(path)?, path, order)
}

pub fn write_signals<W: Write>(mut w: W, rows: &[Vec<f64>]) -> std::io::Result<()> {
    let order = rows.first().map_or(0, Vec::len);
    write!(w, "t")?;
    for n in 0..order {
        write!(w, ",node_{n}")?;
    }
    writeln!(w)?;
    for (k, row) in rows.iter().enumerate() {
        write!(w, "{}", k + 1)?;
        for v in row {
            write!(w, ",{v:e}")?;
        }
        writeln!(w)?;
    }
    w.flush()
}

/// Index file of a dumped trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryManifest {
    pub order: usize,
    pub horizon: usize,
    /// Steps with a graph file: 0 for the initial graph, then every step at
    /// which the graph changed.
    pub graph_steps: Vec<usize>,
}

pub const MANIFEST_FILE: &str = "trajectory.toml";
pub const TRAJECTORY_SIGNALS_FILE: &str = "signals.csv";

pub fn graph_file_name(t: usize) -> String {
    format!("graph_{t:06}.csv")
}

/// Writes `trajectory.toml`, `signals.csv` (`t,z_*,y_*`) and one
/// `graph_<t>.csv` (`t,src,dst`) per change point into `dir`.
pub fn write_trajectory(dir: &Path, traj: &Trajectory) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let order = traj.order();
    let mut graph_steps = vec![0];
    graph_steps.extend(traj.change_steps());
    let manifest = TrajectoryManifest {
        order,
        horizon: traj.horizon(),
        graph_steps: graph_steps.clone(),
    };
    let path = dir.join(MANIFEST_FILE);
    let text = toml::to_string(&manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;

    let path = dir.join(TRAJECTORY_SIGNALS_FILE);
    let mut w = create(&path)?;
    let res = (|| {
        write!(w, "t")?;
        for n in 0..order {
            write!(w, ",z_{n}")?;
        }
        for n in 0..order {
            write!(w, ",y_{n}")?;
        }
        writeln!(w)?;
        for (k, obs) in traj.observations.iter().enumerate() {
            write!(w, "{}", k + 1)?;
            for v in obs.z.iter().chain(&obs.y) {
                write!(w, ",{v:e}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(&path, e))?;

    for &t in &graph_steps {
        let g = if t == 0 {
            &traj.initial
        } else {
            &traj.graphs[t - 1]
        };
        let path = dir.join(graph_file_name(t));
        let mut w = create(&path)?;
        let res = (|| {
            writeln!(w, "t,src,dst")?;
            for (src, dst) in g.edges() {
                writeln!(w, "{t},{src},{dst}")?;
            }
            w.flush()
        })();
        res.map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Reads a directory written by [`write_trajectory`].
///
/// Noise is recovered as `y_t − A_t z_t`, which can differ from the original
/// draw in the last bits.
pub fn read_trajectory(dir: &Path) -> Result<Trajectory> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: TrajectoryManifest =
        toml::from_str(&text).map_err(|e| toml_error(&path, &text, &e))?;
    let order = manifest.order;
    netssm_core::state::state_space_size(order)?;
    if manifest.graph_steps.first() != Some(&0) {
        return Err(Error::parse(&path, 0, "graph_steps must start with 0"));
    }
    if manifest.graph_steps.windows(2).any(|w| w[0] >= w[1])
        || manifest
            .graph_steps
            .last()
            .is_some_and(|&t| t > manifest.horizon)
    {
        return Err(Error::parse(
            &path,
            0,
            "graph_steps must be strictly increasing and within the horizon",
        ));
    }

    let mut snapshots = Vec::with_capacity(manifest.graph_steps.len());
    for &t in &manifest.graph_steps {
        let path = dir.join(graph_file_name(t));
        snapshots.push(parse_stamped_edge_list(open(&path)?, &path, order, t)?);
    }

    let path = dir.join(TRAJECTORY_SIGNALS_FILE);
    let mut rdr = csv_reader(open(&path)?);
    let expected: Vec<String> = std::iter::once("t".to_string())
        .chain((0..order).map(|n| format!("z_{n}")))
        .chain((0..order).map(|n| format!("y_{n}")))
        .collect();
    check_header(&mut rdr, &path, &expected)?;
    let mut observations = Vec::with_capacity(manifest.horizon);
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(&path, e))?;
        let t: usize = field(&rec, 0, "t", &path)?;
        if t != observations.len() + 1 {
            return Err(Error::parse(
                &path,
                line_of(&rec),
                format!("expected t = {}, found {t}", observations.len() + 1),
            ));
        }
        let vals = (1..=2 * order)
            .map(|i| field::<f64>(&rec, i, "signal value", &path))
            .collect::<Result<Vec<_>>>()?;
        let (z, y) = vals.split_at(order);
        let obs = ObservationPair::new(z.to_vec(), y.to_vec())
            .map_err(|e| Error::parse(&path, line_of(&rec), e.to_string()))?;
        observations.push(obs);
    }
    if observations.len() != manifest.horizon {
        return Err(Error::Dimension {
            path,
            message: format!(
                "{} signal rows, manifest horizon is {}",
                observations.len(),
                manifest.horizon
            ),
        });
    }

    let mut graphs = Vec::with_capacity(manifest.horizon);
    let mut noise = Vec::with_capacity(manifest.horizon);
    let mut next = 1;
    let mut current = &snapshots[0];
    for (k, obs) in observations.iter().enumerate() {
        let t = k + 1;
        if manifest.graph_steps.get(next) == Some(&t) {
            current = &snapshots[next];
            next += 1;
        }
        let clean = observe(current, &obs.z, &vec![0.0; order]);
        noise.push(obs.y.iter().zip(&clean).map(|(y, c)| y - c).collect());
        graphs.push(current.clone());
    }
    Ok(Trajectory {
        initial: snapshots[0].clone(),
        graphs,
        observations,
        noise,
    })
}

fn parse_stamped_edge_list<R: Read>(
    reader: R,
    source: &Path,
    order: usize,
    t: usize,
) -> Result<GraphSnapshot> {
    let mut rdr = csv_reader(reader);
    check_header(&mut rdr, source, &["t".into(), "src".into(), "dst".into()])?;
    let mut edges = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(source, e))?;
        let stamp: usize = field(&rec, 0, "t", source)?;
        if stamp != t {
            return Err(Error::parse(
                source,
                line_of(&rec),
                format!("expected t = {t}, found {stamp}"),
            ));
        }
        let src: usize = field(&rec, 1, "src", source)?;
        let dst: usize = field(&rec, 2, "dst", source)?;
        edges.push((src, dst, line_of(&rec)));
    }
    build_graph(&edges, source, Some(order))
}

pub(crate) fn toml_error(path: &Path, text: &str, e: &toml::de::Error) -> Error {
    let line = e.span().map_or(0, |s| {
        text[..s.start.min(text.len())].matches('\n').count() as u64 + 1
    });
    Error::parse(path, line, e.message().to_string())
}

/// Streams posterior snapshots as `t,node,index,prob`, skipping entries at or
/// below the floor.
pub struct BeliefWriter {
    path: PathBuf,
    out: BufWriter<File>,
    floor: f64,
}

impl BeliefWriter {
    pub fn create(path: &Path, floor: f64) -> Result<Self> {
        let mut out = create(path)?;
        writeln!(out, "t,node,index,prob").map_err(|e| Error::io(path, e))?;
        Ok(BeliefWriter {
            path: path.into(),
            out,
            floor,
        })
    }

    pub fn write_step(&mut self, t: usize, beliefs: &[NodeBelief]) -> Result<()> {
        for b in beliefs {
            let node = b.owner().0;
            for (idx, p) in b.support_above(self.floor) {
                writeln!(self.out, "{t},{node},{},{p:e}", idx.0)
                    .map_err(|e| Error::io(&self.path, e))?;
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}
