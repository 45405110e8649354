//! Turns SAM and controller CPPNs into voxel bodies and phase maps.

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::TAU;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::cppn::{check_arity, Cppn, CppnError, FeedForwardNet, Genome};

pub const SAM_INPUTS: usize = 3;
pub const SAM_OUTPUTS: usize = 2;
pub const CONTROLLER_INPUTS: usize = 4;
pub const CONTROLLER_OUTPUTS: usize = 1;

const PRESENCE_THRESHOLD: f64 = 0.5;
const MATERIAL_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error(transparent)]
    Cppn(#[from] CppnError),
    #[error("no voxel is connected to the anchored face")]
    EmptyMorphology,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MaterialCode {
    Passive,
    Contractile,
}

impl MaterialCode {
    pub fn numeric(self) -> f64 {
        match self {
            MaterialCode::Passive => -1.0,
            MaterialCode::Contractile => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Cell {
    #[default]
    Empty,
    Passive,
    Contractile,
}

impl Cell {
    pub fn is_present(self) -> bool {
        self != Cell::Empty
    }

    pub fn material(self) -> Option<MaterialCode> {
        match self {
            Cell::Empty => None,
            Cell::Passive => Some(MaterialCode::Passive),
            Cell::Contractile => Some(MaterialCode::Contractile),
        }
    }

    fn symbol(self) -> char {
        match self {
            Cell::Empty => '.',
            Cell::Passive => 'P',
            Cell::Contractile => 'C',
        }
    }

    fn from_symbol(c: char) -> Option<Cell> {
        match c {
            '.' => Some(Cell::Empty),
            'P' => Some(Cell::Passive),
            'C' => Some(Cell::Contractile),
            _ => None,
        }
    }
}

pub type Coord = (usize, usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Dims {
    pub const fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Dims { nx, ny, nz }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, (i, j, k): Coord) -> usize {
        debug_assert!(i < self.nx && j < self.ny && k < self.nz);
        i + self.nx * (j + self.ny * k)
    }

    pub fn coord(&self, idx: usize) -> Coord {
        (idx % self.nx, (idx / self.nx) % self.ny, idx / (self.nx * self.ny))
    }

    pub fn on_boundary(&self, (i, j, k): Coord) -> bool {
        i == 0 || j == 0 || k == 0 || i + 1 == self.nx || j + 1 == self.ny || k + 1 == self.nz
    }

    /// Face neighbours inside the canvas.
    pub fn neighbors(&self, (i, j, k): Coord) -> impl Iterator<Item = Coord> + '_ {
        let candidates = [
            (i.wrapping_sub(1), j, k),
            (i + 1, j, k),
            (i, j.wrapping_sub(1), k),
            (i, j + 1, k),
            (i, j, k.wrapping_sub(1)),
            (i, j, k + 1),
        ];
        candidates
            .into_iter()
            .filter(move |&(a, b, c)| a < self.nx && b < self.ny && c < self.nz)
    }
}

impl Default for Dims {
    fn default() -> Self {
        Dims::new(20, 8, 8)
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.nx, self.ny, self.nz)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoxelGrid {
    pub dims: Dims,
    pub cells: Vec<Cell>,
}

impl VoxelGrid {
    pub fn empty(dims: Dims) -> Self {
        VoxelGrid { dims, cells: vec![Cell::Empty; dims.len()] }
    }

    pub fn filled(dims: Dims, cell: Cell) -> Self {
        VoxelGrid { dims, cells: vec![cell; dims.len()] }
    }

    pub fn get(&self, c: Coord) -> Cell {
        self.cells[self.dims.index(c)]
    }

    pub fn set(&mut self, c: Coord, cell: Cell) {
        let idx = self.dims.index(c);
        self.cells[idx] = cell;
    }

    pub fn count(&self, cell: Cell) -> usize {
        self.cells.iter().filter(|&&c| c == cell).count()
    }

    pub fn present_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_present()).count()
    }

    /// Coordinates of cells equal to `cell`, in index order.
    pub fn coords_of(&self, cell: Cell) -> impl Iterator<Item = Coord> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(move |(_, &c)| c == cell)
            .map(|(idx, _)| self.dims.coord(idx))
    }
}

/// Maps voxel index `i` of an axis with `n` cells onto `[-1, 1]`.
pub fn normalize_axis(i: usize, n: usize) -> f64 {
    if n <= 1 {
        0.0
    } else {
        2.0 * i as f64 / (n - 1) as f64 - 1.0
    }
}

pub fn normalize_coords((i, j, k): Coord, dims: Dims) -> (f64, f64, f64) {
    (normalize_axis(i, dims.nx), normalize_axis(j, dims.ny), normalize_axis(k, dims.nz))
}

pub fn classify(nu: f64, m: f64) -> Cell {
    if nu.abs() < PRESENCE_THRESHOLD {
        Cell::Empty
    } else if m.abs() < MATERIAL_THRESHOLD {
        Cell::Passive
    } else {
        Cell::Contractile
    }
}

/// Queries `cppn` once per cell.
pub fn decode_morphology_with<C: Cppn + ?Sized>(cppn: &C, dims: Dims) -> Result<VoxelGrid, CppnError> {
    if cppn.num_inputs() != SAM_INPUTS || cppn.num_outputs() != SAM_OUTPUTS {
        return Err(CppnError::ArityMismatch {
            expected_inputs: SAM_INPUTS,
            expected_outputs: SAM_OUTPUTS,
            actual_inputs: cppn.num_inputs(),
            actual_outputs: cppn.num_outputs(),
        });
    }
    let mut grid = VoxelGrid::empty(dims);
    for idx in 0..dims.len() {
        let (x, y, z) = normalize_coords(dims.coord(idx), dims);
        let out = cppn.query(&[x, y, z])?;
        grid.cells[idx] = classify(out[0], out[1]);
    }
    Ok(grid)
}

pub fn decode_morphology(genome: &Genome, dims: Dims) -> Result<VoxelGrid, CppnError> {
    check_arity(genome, SAM_INPUTS, SAM_OUTPUTS)?;
    decode_morphology_with(&FeedForwardNet::compile(genome)?, dims)
}

/// Forces the one-voxel canvas shell present and passive.
pub fn apply_enclosure(mut grid: VoxelGrid) -> VoxelGrid {
    let dims = grid.dims;
    for idx in 0..dims.len() {
        if dims.on_boundary(dims.coord(idx)) {
            grid.cells[idx] = Cell::Passive;
        }
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Morphology {
    pub grid: VoxelGrid,
    /// Present voxels of the `i = 0` layer; these are held fixed.
    pub anchored_face: Vec<Coord>,
    /// Present voxels of the occupied layer with the largest `i`.
    pub free_end_cells: Vec<Coord>,
}

impl Morphology {
    pub fn dims(&self) -> Dims {
        self.grid.dims
    }

    pub fn contractile_cells(&self) -> Vec<Coord> {
        self.grid.coords_of(Cell::Contractile).collect()
    }

    pub fn voxel_count(&self) -> usize {
        self.grid.present_count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&MorphologyFile::from(&self.grid)).expect("serializable")
    }

    /// Parses the layer encoding and re-applies the connectivity filter.
    pub fn from_json(s: &str) -> Result<Morphology, MorphologyParseError> {
        let file: MorphologyFile = serde_json::from_str(s).map_err(MorphologyParseError::Json)?;
        let grid = file.into_grid()?;
        connectivity_filter(grid).map_err(|_| MorphologyParseError::Empty)
    }
}

#[derive(Debug, Error)]
pub enum MorphologyParseError {
    #[error("malformed morphology JSON: {0}")]
    Json(serde_json::Error),
    #[error("morphology layers do not match dims {0}")]
    Shape(Dims),
    #[error("unknown voxel symbol {0:?}")]
    Symbol(char),
    #[error("morphology has no voxel connected to the anchored face")]
    Empty,
}

/// Keeps only voxels face-connected to a present voxel of the `i = 0` layer.
pub fn connectivity_filter(grid: VoxelGrid) -> Result<Morphology, DecodeError> {
    let dims = grid.dims;
    let mut keep = vec![false; dims.len()];
    let mut queue = VecDeque::new();
    for k in 0..dims.nz {
        for j in 0..dims.ny {
            let c = (0, j, k);
            if grid.get(c).is_present() {
                keep[dims.index(c)] = true;
                queue.push_back(c);
            }
        }
    }
    while let Some(c) = queue.pop_front() {
        for n in dims.neighbors(c) {
            let idx = dims.index(n);
            if !keep[idx] && grid.cells[idx].is_present() {
                keep[idx] = true;
                queue.push_back(n);
            }
        }
    }
    let mut grid = grid;
    for (cell, kept) in grid.cells.iter_mut().zip(&keep) {
        if !kept {
            *cell = Cell::Empty;
        }
    }
    if grid.present_count() == 0 {
        return Err(DecodeError::EmptyMorphology);
    }

    let anchored_face = (0..dims.len())
        .map(|idx| dims.coord(idx))
        .filter(|&(i, _, _)| i == 0)
        .filter(|&c| grid.get(c).is_present())
        .collect();
    let max_i = (0..dims.len())
        .filter(|&idx| grid.cells[idx].is_present())
        .map(|idx| dims.coord(idx).0)
        .max()
        .expect("non-empty");
    let free_end_cells = (0..dims.len())
        .map(|idx| dims.coord(idx))
        .filter(|&(i, _, _)| i == max_i)
        .filter(|&c| grid.get(c).is_present())
        .collect();
    Ok(Morphology { grid, anchored_face, free_end_cells })
}

/// Full SAM decode: CPPN query, optional enclosure, connectivity filter.
pub fn build_morphology(genome: &Genome, dims: Dims, enclosure: bool) -> Result<Morphology, DecodeError> {
    let grid = decode_morphology(genome, dims)?;
    let grid = if enclosure { apply_enclosure(grid) } else { grid };
    connectivity_filter(grid)
}

/// Phase offsets in radians, keyed by contractile voxel.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ControllerMap {
    pub phases: BTreeMap<Coord, f64>,
}

impl ControllerMap {
    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phase(&self, c: Coord) -> Option<f64> {
        self.phases.get(&c).copied()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

fn coord_key((i, j, k): Coord) -> String {
    format!("{i},{j},{k}")
}

fn parse_coord_key(s: &str) -> Option<Coord> {
    let mut parts = s.split(',').map(|p| p.trim().parse::<usize>());
    let c = (parts.next()?.ok()?, parts.next()?.ok()?, parts.next()?.ok()?);
    parts.next().is_none().then_some(c)
}

impl Serialize for ControllerMap {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_map(self.phases.iter().map(|(&c, &p)| (coord_key(c), p)))
    }
}

impl<'de> Deserialize<'de> for ControllerMap {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = BTreeMap::<String, f64>::deserialize(deserializer)?;
        let mut phases = BTreeMap::new();
        for (key, phase) in raw {
            let c = parse_coord_key(&key)
                .ok_or_else(|| D::Error::custom(format!("bad voxel key {key:?}")))?;
            phases.insert(c, phase);
        }
        Ok(ControllerMap { phases })
    }
}

pub fn decode_controller_with<C: Cppn + ?Sized>(
    cppn: &C,
    morph: &Morphology,
) -> Result<ControllerMap, CppnError> {
    if cppn.num_inputs() != CONTROLLER_INPUTS || cppn.num_outputs() != CONTROLLER_OUTPUTS {
        return Err(CppnError::ArityMismatch {
            expected_inputs: CONTROLLER_INPUTS,
            expected_outputs: CONTROLLER_OUTPUTS,
            actual_inputs: cppn.num_inputs(),
            actual_outputs: cppn.num_outputs(),
        });
    }
    let dims = morph.dims();
    let mut phases = BTreeMap::new();
    for c in morph.grid.coords_of(Cell::Contractile) {
        let (x, y, z) = normalize_coords(c, dims);
        let out = cppn.query(&[x, y, z, MaterialCode::Contractile.numeric()])?;
        phases.insert(c, out[0].clamp(-TAU, TAU));
    }
    Ok(ControllerMap { phases })
}

pub fn decode_controller(genome: &Genome, morph: &Morphology) -> Result<ControllerMap, CppnError> {
    check_arity(genome, CONTROLLER_INPUTS, CONTROLLER_OUTPUTS)?;
    decode_controller_with(&FeedForwardNet::compile(genome)?, morph)
}

/// On-disk morphology: `layers[k][j]` is the row of voxels along `i`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct MorphologyFile {
    dims: [usize; 3],
    layers: Vec<Vec<String>>,
}

impl From<&VoxelGrid> for MorphologyFile {
    fn from(grid: &VoxelGrid) -> Self {
        let d = grid.dims;
        let layers = (0..d.nz)
            .map(|k| {
                (0..d.ny)
                    .map(|j| (0..d.nx).map(|i| grid.get((i, j, k)).symbol()).collect())
                    .collect()
            })
            .collect();
        MorphologyFile { dims: [d.nx, d.ny, d.nz], layers }
    }
}

impl MorphologyFile {
    fn into_grid(self) -> Result<VoxelGrid, MorphologyParseError> {
        let dims = Dims::new(self.dims[0], self.dims[1], self.dims[2]);
        if self.layers.len() != dims.nz || self.layers.iter().any(|l| l.len() != dims.ny) {
            return Err(MorphologyParseError::Shape(dims));
        }
        let mut grid = VoxelGrid::empty(dims);
        for (k, layer) in self.layers.iter().enumerate() {
            for (j, row) in layer.iter().enumerate() {
                if row.chars().count() != dims.nx {
                    return Err(MorphologyParseError::Shape(dims));
                }
                for (i, ch) in row.chars().enumerate() {
                    let cell = Cell::from_symbol(ch).ok_or(MorphologyParseError::Symbol(ch))?;
                    grid.set((i, j, k), cell);
                }
            }
        }
        Ok(grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell as Counter;

    struct Constant {
        outputs: Vec<f64>,
        inputs: usize,
        calls: Counter<usize>,
    }

    impl Constant {
        fn new(inputs: usize, outputs: &[f64]) -> Self {
            Constant { outputs: outputs.to_vec(), inputs, calls: Counter::new(0) }
        }
    }

    impl Cppn for Constant {
        fn num_inputs(&self) -> usize {
            self.inputs
        }
        fn num_outputs(&self) -> usize {
            self.outputs.len()
        }
        fn query(&self, _: &[f64]) -> Result<Vec<f64>, CppnError> {
            self.calls.set(self.calls.get() + 1);
            Ok(self.outputs.clone())
        }
    }

    const PAPER_DIMS: Dims = Dims::new(20, 8, 8);

    #[test]
    fn corners_and_midpoints() {
        assert_eq!(normalize_coords((0, 0, 0), PAPER_DIMS), (-1.0, -1.0, -1.0));
        assert_eq!(normalize_coords((19, 7, 7), PAPER_DIMS), (1.0, 1.0, 1.0));
        let (x, y, _) = normalize_coords((10, 4, 0), PAPER_DIMS);
        assert!(x.abs() <= 1.0 / 19.0 && y.abs() <= 1.0 / 7.0);
        assert_eq!(normalize_axis(0, 1), 0.0);
    }

    #[test]
    fn thresholds_match_presence_and_material_rules() {
        let all = |nu: f64, m: f64| {
            let stub = Constant::new(3, &[nu, m]);
            let grid = decode_morphology_with(&stub, PAPER_DIMS).unwrap();
            assert_eq!(stub.calls.get(), 20 * 8 * 8);
            grid
        };
        assert_eq!(all(0.5, 0.0).count(Cell::Passive), 1280);
        assert_eq!(all(0.49, 0.0).count(Cell::Empty), 1280);
        assert_eq!(all(-0.8, -0.6).count(Cell::Contractile), 1280);
        assert_eq!(all(0.5, 0.5).count(Cell::Contractile), 1280);
    }

    #[test]
    fn sam_arity_is_checked() {
        let stub = Constant::new(4, &[1.0]);
        assert!(matches!(
            decode_morphology_with(&stub, PAPER_DIMS),
            Err(CppnError::ArityMismatch { .. })
        ));
        let g = Genome::bare(4, 1, crate::cppn::Activation::Identity);
        assert!(decode_morphology(&g, PAPER_DIMS).is_err());
    }

    #[test]
    fn enclosure_of_empty_grid_is_the_shell() {
        let shell = apply_enclosure(VoxelGrid::empty(PAPER_DIMS));
        assert_eq!(shell.count(Cell::Passive), 20 * 8 * 8 - 18 * 6 * 6);
        assert_eq!(shell.count(Cell::Passive), 632);
        assert_eq!(shell.count(Cell::Empty), 18 * 6 * 6);
    }

    #[test]
    fn enclosure_keeps_interior_and_is_idempotent() {
        let once = apply_enclosure(VoxelGrid::filled(PAPER_DIMS, Cell::Contractile));
        assert_eq!(once.count(Cell::Contractile), 18 * 6 * 6);
        assert_eq!(apply_enclosure(once.clone()), once);
    }

    #[test]
    fn floating_voxel_is_removed() {
        let dims = Dims::new(5, 5, 5);
        let mut grid = VoxelGrid::empty(dims);
        for j in 0..5 {
            for k in 0..5 {
                grid.set((0, j, k), Cell::Passive);
            }
        }
        grid.set((2, 2, 2), Cell::Contractile);
        let m = connectivity_filter(grid).unwrap();
        assert_eq!(m.grid.get((2, 2, 2)), Cell::Empty);
        assert_eq!(m.voxel_count(), 25);
        assert_eq!(m.free_end_cells.len(), 25);
        assert!(m.free_end_cells.iter().all(|c| c.0 == 0));
    }

    #[test]
    fn enclosed_grid_passes_filter_unchanged() {
        let shell = apply_enclosure(VoxelGrid::empty(PAPER_DIMS));
        let m = connectivity_filter(shell.clone()).unwrap();
        assert_eq!(m.grid, shell);
        assert_eq!(m.anchored_face.len(), 64);
        assert_eq!(m.free_end_cells.len(), 64);
        assert!(m.free_end_cells.iter().all(|c| c.0 == 19));
    }

    #[test]
    fn empty_grid_is_an_error() {
        assert_eq!(
            connectivity_filter(VoxelGrid::empty(PAPER_DIMS)),
            Err(DecodeError::EmptyMorphology)
        );
    }

    fn solid(dims: Dims) -> Morphology {
        connectivity_filter(VoxelGrid::filled(dims, Cell::Contractile)).unwrap()
    }

    #[test]
    fn phases_are_clamped() {
        let m = solid(Dims::new(2, 2, 2));
        let map = decode_controller_with(&Constant::new(4, &[10.0]), &m).unwrap();
        assert_eq!(map.len(), 8);
        assert!(map.phases.values().all(|&p| p == TAU));
        let map = decode_controller_with(&Constant::new(4, &[0.0]), &m).unwrap();
        assert!(map.phases.values().all(|&p| p == 0.0));
    }

    #[test]
    fn passive_body_has_no_phases() {
        let m = connectivity_filter(apply_enclosure(VoxelGrid::empty(Dims::new(4, 3, 3)))).unwrap();
        let map = decode_controller_with(&Constant::new(4, &[1.0]), &m).unwrap();
        assert!(map.is_empty());
    }

    #[test]
    fn morphology_json_roundtrip() {
        let mut grid = apply_enclosure(VoxelGrid::empty(Dims::new(4, 3, 3)));
        grid.set((1, 1, 1), Cell::Contractile);
        let m = connectivity_filter(grid).unwrap();
        let json = m.to_json();
        assert!(json.contains("\"PPPP\""));
        assert!(json.contains("\"PC.P\""));
        assert_eq!(Morphology::from_json(&json).unwrap(), m);
    }

    #[test]
    fn morphology_json_rejects_bad_shape() {
        let bad = r#"{"dims":[2,1,1],"layers":[["P"]]}"#;
        assert!(matches!(Morphology::from_json(bad), Err(MorphologyParseError::Shape(_))));
        let bad = r#"{"dims":[1,1,1],"layers":[["X"]]}"#;
        assert!(matches!(Morphology::from_json(bad), Err(MorphologyParseError::Symbol('X'))));
    }

    #[test]
    fn controller_json_roundtrip() {
        let mut map = ControllerMap::default();
        map.phases.insert((1, 2, 3), 0.25);
        map.phases.insert((10, 0, 7), -TAU);
        let json = map.to_json();
        assert!(json.contains("\"1,2,3\""));
        assert_eq!(ControllerMap::from_json(&json).unwrap(), map);
        assert!(ControllerMap::from_json(r#"{"1,2": 0.0}"#).is_err());
    }
}
