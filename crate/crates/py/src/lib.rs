//! Python bindings: artifact models, optics helpers, injection, scanning,
//! scenarios and occupancy grids.

use mirrorlidar::grid::{build_grid, occupied_area, GridConfig};
use mirrorlidar::injection::{inject as inject_frame, InjectionConfig, InjectionReport};
use mirrorlidar::kv::KeyValues;
use mirrorlidar::lidar::{received_power as power, scan};
use mirrorlidar::models;
use mirrorlidar::scenario::{run, AttackMode, ScenarioConfig};
use mirrorlidar::scene_file::SceneFile;
use mirrorlidar::{io, ArtifactModelParams, LidarConfig, LidarPoint, PointTag, Vec3};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(mirrorlidar, MirrorLidarError, PyValueError, "Raised for invalid input or out-of-domain models.");

fn err(e: mirrorlidar::Error) -> PyErr {
    MirrorLidarError::new_err(e.to_string())
}

type Triple = (f64, f64, f64);

fn vec3((x, y, z): Triple) -> Vec3 {
    Vec3::new(x, y, z)
}

fn triple(v: Vec3) -> Triple {
    (v.x, v.y, v.z)
}

/// Mirror state: distance `d` (m), tilt `theta` (degrees), area (m²).
#[pyclass(name = "MirrorState", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMirrorState(models::MirrorState);

#[pymethods]
impl PyMirrorState {
    #[new]
    fn new(d: f64, theta: f64, area: f64) -> PyResult<Self> {
        models::MirrorState::new(d, theta, area).map(Self).map_err(err)
    }

    #[getter]
    fn d(&self) -> f64 {
        self.0.d
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.0.theta_deg
    }

    #[getter]
    fn area(&self) -> f64 {
        self.0.area
    }

    fn __repr__(&self) -> String {
        format!("MirrorState(d={}, theta={}, area={})", self.0.d, self.0.theta_deg, self.0.area)
    }
}

/// Artifact model parameters, defaulting to the reference values.
#[pyclass(name = "ModelParams", skip_from_py_object)]
#[derive(Clone, Default)]
struct PyModelParams(ArtifactModelParams);

#[pymethods]
impl PyModelParams {
    #[new]
    fn new() -> Self {
        Self::default()
    }

    /// Parses `key=value` text; every key must be present.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        ArtifactModelParams::parse(text).map(Self).map_err(err)
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }

    #[staticmethod]
    fn keys() -> Vec<&'static str> {
        ArtifactModelParams::KEYS.to_vec()
    }

    fn __getitem__(&self, key: &str) -> PyResult<f64> {
        self.0
            .get(key)
            .ok_or_else(|| MirrorLidarError::new_err(format!("unknown parameter `{key}`")))
    }

    fn __setitem__(&mut self, key: &str, value: f64) -> PyResult<()> {
        let slot = self
            .0
            .slot(key)
            .ok_or_else(|| MirrorLidarError::new_err(format!("unknown parameter `{key}`")))?;
        *slot = value;
        Ok(())
    }

    fn __repr__(&self) -> String {
        format!("ModelParams({})", self.0.to_text().trim().replace('\n', ", "))
    }
}

fn params_or_default(p: Option<PyRef<'_, PyModelParams>>) -> ArtifactModelParams {
    p.map(|p| p.0).unwrap_or_default()
}

#[pyfunction]
#[pyo3(signature = (state, params=None))]
fn lateral_offset(state: &PyMirrorState, params: Option<PyRef<'_, PyModelParams>>) -> PyResult<f64> {
    models::lateral_offset(&state.0, &params_or_default(params)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (state, params=None))]
fn radial_distance(state: &PyMirrorState, params: Option<PyRef<'_, PyModelParams>>) -> f64 {
    models::radial_distance(&state.0, &params_or_default(params))
}

#[pyfunction]
#[pyo3(signature = (state, params=None))]
fn expected_point_count(state: &PyMirrorState, params: Option<PyRef<'_, PyModelParams>>) -> f64 {
    models::expected_point_count(&state.0, &params_or_default(params))
}

#[pyfunction]
#[pyo3(signature = (state, params=None))]
fn point_count(state: &PyMirrorState, params: Option<PyRef<'_, PyModelParams>>) -> u64 {
    models::point_count(&state.0, &params_or_default(params))
}

/// `(d_min, d_max)` of the appearance window at this tilt and area.
#[pyfunction]
#[pyo3(signature = (state, params=None))]
fn window_bounds(state: &PyMirrorState, params: Option<PyRef<'_, PyModelParams>>) -> (f64, f64) {
    models::window_bounds(&state.0, &params_or_default(params))
}

#[pyfunction]
#[pyo3(signature = (state, params=None))]
fn appearance_probability(state: &PyMirrorState, params: Option<PyRef<'_, PyModelParams>>) -> f64 {
    models::appearance_probability(&state.0, &params_or_default(params))
}

/// All four features as a dict; `warning` is set when the offset was clamped.
#[pyfunction]
#[pyo3(signature = (state, params=None))]
fn predict_features<'py>(
    py: Python<'py>,
    state: &PyMirrorState,
    params: Option<PyRef<'_, PyModelParams>>,
) -> PyResult<Bound<'py, PyDict>> {
    let (f, warning) = models::predict_features(&state.0, &params_or_default(params)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("R", f.r_artifact)?;
    d.set_item("X", f.x_artifact)?;
    d.set_item("N", f.n_artifact)?;
    d.set_item("P", f.p_app)?;
    d.set_item("warning", warning)?;
    Ok(d)
}

/// Mirror reflection of direction `v` about unit normal `n`.
#[pyfunction]
fn reflect(v: Triple, n: Triple) -> PyResult<Triple> {
    mirrorlidar::optics::reflect(vec3(v), vec3(n)).map(triple).map_err(err)
}

/// Normalized received power for a path of the given length.
#[pyfunction]
#[pyo3(signature = (path_length, cross_section=1.0, albedo=0.5))]
fn received_power(path_length: f64, cross_section: f64, albedo: f64) -> PyResult<f64> {
    power(path_length, cross_section, albedo).map_err(err)
}

/// One lidar frame.
#[pyclass(name = "PointCloud", skip_from_py_object)]
#[derive(Clone)]
struct PyPointCloud(mirrorlidar::PointCloud);

#[pymethods]
impl PyPointCloud {
    /// `points` holds `(x, y, z, intensity, tag)` tuples.
    #[new]
    #[pyo3(signature = (frame=0, timestamp=0.0, points=Vec::new()))]
    fn new(frame: u64, timestamp: f64, points: Vec<(f64, f64, f64, f64, String)>) -> PyResult<Self> {
        let points = points
            .into_iter()
            .map(|(x, y, z, i, tag)| {
                let tag: PointTag = tag.parse().map_err(MirrorLidarError::new_err)?;
                Ok(LidarPoint::new(Vec3::new(x, y, z), i, tag))
            })
            .collect::<PyResult<_>>()?;
        Ok(Self(mirrorlidar::PointCloud::new(frame, timestamp, points)))
    }

    #[getter]
    fn frame(&self) -> u64 {
        self.0.frame
    }

    #[getter]
    fn timestamp(&self) -> f64 {
        self.0.timestamp
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn points(&self) -> Vec<(f64, f64, f64, f64, &'static str)> {
        self.0
            .points
            .iter()
            .map(|p| (p.position.x, p.position.y, p.position.z, p.intensity, p.tag.as_str()))
            .collect()
    }

    fn xyz(&self) -> Vec<Triple> {
        self.0.points.iter().map(|p| triple(p.position)).collect()
    }

    /// Number of points with the given tag (`direct`, `virtual` or `ground`).
    fn count(&self, tag: &str) -> PyResult<usize> {
        let tag: PointTag = tag.parse().map_err(MirrorLidarError::new_err)?;
        Ok(self.0.count_tag(tag))
    }

    fn __repr__(&self) -> String {
        format!("PointCloud(frame={}, timestamp={}, points={})", self.0.frame, self.0.timestamp, self.0.len())
    }
}

fn clouds(frames: &[PyRef<'_, PyPointCloud>]) -> Vec<mirrorlidar::PointCloud> {
    frames.iter().map(|f| f.0.clone()).collect()
}

#[pyfunction]
fn read_csv(path: std::path::PathBuf) -> PyResult<Vec<PyPointCloud>> {
    Ok(io::read_csv_file(&path).map_err(err)?.into_iter().map(PyPointCloud).collect())
}

#[pyfunction]
fn write_csv(path: std::path::PathBuf, frames: Vec<PyRef<'_, PyPointCloud>>) -> PyResult<()> {
    io::write_csv_file(&path, &clouds(&frames)).map_err(err)
}

#[pyfunction]
fn to_csv_string(frames: Vec<PyRef<'_, PyPointCloud>>) -> String {
    io::to_csv_string(&clouds(&frames))
}

#[pyfunction]
fn parse_csv(text: &str) -> PyResult<Vec<PyPointCloud>> {
    Ok(io::read_csv(text.as_bytes()).map_err(err)?.into_iter().map(PyPointCloud).collect())
}

/// Ray-traces a scene description; `config` is lidar `key=value` text.
#[pyfunction]
#[pyo3(signature = (scene="", config=None))]
fn scan_scene(py: Python<'_>, scene: &str, config: Option<&str>) -> PyResult<PyPointCloud> {
    let file = SceneFile::parse(scene).map_err(err)?;
    let lidar = match config {
        Some(text) => KeyValues::parse(text).and_then(|kv| LidarConfig::from_kv(&kv)).map_err(err)?,
        None => LidarConfig::default(),
    };
    let pose = file.pose(&lidar);
    py.detach(|| scan(&file.scene, &pose, &lidar))
        .map(PyPointCloud)
        .map_err(err)
}

fn report_dict<'py>(py: Python<'py>, r: &InjectionReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("frame", r.frame)?;
    d.set_item("triggered", r.triggered)?;
    d.set_item("r", r.r)?;
    d.set_item("p_app", r.p_app)?;
    d.set_item("n_injected", r.n_injected)?;
    d.set_item("centroid", r.centroid.map(triple))?;
    d.set_item("generator", r.generator)?;
    d.set_item("warning", r.warning.clone())?;
    Ok(d)
}

/// Injects model artifacts into each frame in order from one seeded stream.
/// Returns the attacked frames and one report dict per frame.
#[pyfunction]
#[pyo3(signature = (frames, state, seed=0, params=None))]
fn inject<'py>(
    py: Python<'py>,
    frames: Vec<PyRef<'_, PyPointCloud>>,
    state: &PyMirrorState,
    seed: u64,
    params: Option<PyRef<'_, PyModelParams>>,
) -> PyResult<(Vec<PyPointCloud>, Vec<Bound<'py, PyDict>>)> {
    let config = InjectionConfig {
        params: params_or_default(params),
        seed,
        ..InjectionConfig::default()
    };
    let mut rng = config.rng();
    let mut out = Vec::with_capacity(frames.len());
    let mut reports = Vec::with_capacity(frames.len());
    for f in &frames {
        let (cloud, report) = inject_frame(&f.0, &state.0, &config, &mut rng).map_err(err)?;
        out.push(PyPointCloud(cloud));
        reports.push(report_dict(py, &report)?);
    }
    Ok((out, reports))
}

/// Runs the braking scenario. `config` is `key=value` text; returns the
/// summary dict and the per-tick log as CSV.
#[pyfunction]
#[pyo3(signature = (config=None, seed=None, attack=true))]
fn run_scenario<'py>(
    py: Python<'py>,
    config: Option<&str>,
    seed: Option<u64>,
    attack: bool,
) -> PyResult<(Bound<'py, PyDict>, String)> {
    let mut cfg = match config {
        Some(text) => ScenarioConfig::parse(text).map_err(err)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if !attack {
        cfg.attack = AttackMode::Disabled;
    }
    let log = py.detach(|| run(&cfg)).map_err(err)?;
    let s = &log.summary;
    let d = PyDict::new(py);
    d.set_item("collision", s.collision)?;
    d.set_item("collision_time", s.collision_time)?;
    d.set_item("min_ttc", s.min_ttc)?;
    d.set_item("attack_time", s.attack_time)?;
    d.set_item("ego_brake_time", s.ego_brake_time)?;
    d.set_item("follower_brake_time", s.follower_brake_time)?;
    d.set_item("ego_stop_duration", s.ego_stop_duration())?;
    d.set_item("points_at_brake", s.points_at_brake)?;
    Ok((d, log.to_csv()))
}

/// Occupancy grid of the frames; returns the grid text and occupied area (m²).
#[pyfunction]
#[pyo3(signature = (frames, config=None))]
fn occupancy(frames: Vec<PyRef<'_, PyPointCloud>>, config: Option<&str>) -> PyResult<(String, f64)> {
    let cfg = match config {
        Some(text) => GridConfig::parse(text).map_err(err)?,
        None => GridConfig::default(),
    };
    let grid = build_grid(&clouds(&frames), &cfg).map_err(err)?;
    Ok((grid.to_text(), occupied_area(&grid)))
}

#[pymodule]
#[pyo3(name = "mirrorlidar")]
fn mirrorlidar_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", mirrorlidar::VERSION)?;
    m.add("MirrorLidarError", m.py().get_type::<MirrorLidarError>())?;
    m.add_class::<PyMirrorState>()?;
    m.add_class::<PyModelParams>()?;
    m.add_class::<PyPointCloud>()?;
    m.add_function(wrap_pyfunction!(lateral_offset, m)?)?;
    m.add_function(wrap_pyfunction!(radial_distance, m)?)?;
    m.add_function(wrap_pyfunction!(expected_point_count, m)?)?;
    m.add_function(wrap_pyfunction!(point_count, m)?)?;
    m.add_function(wrap_pyfunction!(window_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(appearance_probability, m)?)?;
    m.add_function(wrap_pyfunction!(predict_features, m)?)?;
    m.add_function(wrap_pyfunction!(reflect, m)?)?;
    m.add_function(wrap_pyfunction!(received_power, m)?)?;
    m.add_function(wrap_pyfunction!(read_csv, m)?)?;
    m.add_function(wrap_pyfunction!(write_csv, m)?)?;
    m.add_function(wrap_pyfunction!(parse_csv, m)?)?;
    m.add_function(wrap_pyfunction!(to_csv_string, m)?)?;
    m.add_function(wrap_pyfunction!(scan_scene, m)?)?;
    m.add_function(wrap_pyfunction!(inject, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(occupancy, m)?)?;
    Ok(())
}
