//! Line-oriented key=value files for models, bodies, profiles and scenarios.
//!
//! `#` starts a comment; keys may repeat (values accumulate in order); a line
//! `[name]` opens a scenario section in a scenario file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::convex::ConvexBody;
use crate::error::{Error, Result};
use crate::model::{CMat, GridSpec, QuadraticModel, C64};
use crate::transform::{BumpSpec, SpectralProfile};

/// Ordered multimap of keys to raw values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: Vec<(String, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse(format!("line {}: expected key = value, got {line:?}", i + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Parse(format!("line {}: empty key", i + 1)));
            }
            kv.entries.push((k.to_string(), v.trim().to_string()));
        }
        Ok(kv)
    }

    pub fn insert(&mut self, k: &str, v: &str) {
        self.entries.push((k.to_string(), v.to_string()));
    }

    pub fn get(&self, k: &str) -> Option<&str> {
        self.entries.iter().rev().find(|(a, _)| a == k).map(|(_, v)| v.as_str())
    }

    pub fn all(&self, k: &str) -> Vec<&str> {
        self.entries.iter().filter(|(a, _)| a == k).map(|(_, v)| v.as_str()).collect()
    }

    pub fn keys(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for (k, _) in &self.entries {
            if !out.contains(&k.as_str()) {
                out.push(k);
            }
        }
        out
    }

    pub fn require(&self, k: &str) -> Result<&str> {
        self.get(k).ok_or_else(|| Error::Parse(format!("missing key {k:?}")))
    }

    pub fn f64_or(&self, k: &str, default: f64) -> Result<f64> {
        self.get(k).map(|v| parse_f64(k, v)).unwrap_or(Ok(default))
    }

    pub fn usize_or(&self, k: &str, default: usize) -> Result<usize> {
        self.get(k).map(|v| v.parse().map_err(|_| Error::Parse(format!("{k}: not an unsigned integer: {v:?}")))).unwrap_or(Ok(default))
    }

    pub fn f64s(&self, k: &str) -> Result<Option<Vec<f64>>> {
        self.get(k).map(|v| parse_list(k, v)).transpose()
    }
}

fn parse_f64(k: &str, v: &str) -> Result<f64> {
    let x: f64 = v.parse().map_err(|_| Error::Parse(format!("{k}: not a number: {v:?}")))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Parse(format!("{k}: non-finite value")))
    }
}

/// Whitespace- or comma-separated numbers.
pub fn parse_list(k: &str, v: &str) -> Result<Vec<f64>> {
    v.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).map(|s| parse_f64(k, s)).collect()
}

/// Matrix rows separated by `;`.
fn parse_matrix(k: &str, v: &str, n: usize) -> Result<Vec<Vec<f64>>> {
    let rows: Vec<Vec<f64>> = v.split(';').map(|r| parse_list(k, r)).collect::<Result<_>>()?;
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse(format!("{k}: expected a {n}x{n} matrix")));
    }
    Ok(rows)
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::MissingReference(format!("{}: {e}", path.display())))
}

/// Model file. `kind = heisenberg | diagonal | matrix | random`.
/// diagonal: `diag = d₁ … dₙ` once per component; matrix: `n`, and per
/// component `re = rows` with optional `im = rows` (rows split by `;`);
/// random: `n`, `m`, `seed`.
pub fn parse_model(text: &str) -> Result<QuadraticModel> {
    let kv = KeyValues::parse(text)?;
    match kv.require("kind")? {
        "heisenberg" => Ok(QuadraticModel::heisenberg()),
        "diagonal" => {
            let diags: Vec<Vec<f64>> = kv.all("diag").iter().map(|v| parse_list("diag", v)).collect::<Result<_>>()?;
            if diags.is_empty() {
                return Err(Error::Parse("diagonal model needs at least one diag line".into()));
            }
            QuadraticModel::diagonal(&diags).map_err(|e| Error::Parse(e.to_string()))
        }
        "matrix" => {
            let n = kv.usize_or("n", 0)?;
            let res = kv.all("re");
            let ims = kv.all("im");
            if n == 0 || res.is_empty() || (!ims.is_empty() && ims.len() != res.len()) {
                return Err(Error::Parse("matrix model needs n and one re (and optional im) per component".into()));
            }
            let mut coeffs = Vec::new();
            for (k, re) in res.iter().enumerate() {
                let r = parse_matrix("re", re, n)?;
                let im = if ims.is_empty() { vec![vec![0.0; n]; n] } else { parse_matrix("im", ims[k], n)? };
                let a = CMat::from_fn(n, n, |i, j| C64::new(r[i][j], im[i][j]));
                if (&a - a.adjoint()).iter().any(|v| v.norm() > 1e-12) {
                    return Err(Error::Parse(format!("component {} is not Hermitian", k + 1)));
                }
                coeffs.push(a);
            }
            QuadraticModel::new(n, coeffs.len(), coeffs).map_err(|e| Error::Parse(e.to_string()))
        }
        "random" => {
            let n = kv.usize_or("n", 0)?;
            let m = kv.usize_or("m", 0)?;
            if n == 0 || m == 0 {
                return Err(Error::Parse("random model needs positive n and m".into()));
            }
            let seed = kv.usize_or("seed", 0)? as u64;
            Ok(QuadraticModel::random(n, m, &mut ChaCha8Rng::seed_from_u64(seed)))
        }
        other => Err(Error::Parse(format!("unknown model kind {other:?}"))),
    }
}

/// Body file. `kind = cuboid` with `range = a b` per dimension, or
/// `kind = polytope | cone` with `dim` and repeated `vertex = …`.
pub fn parse_body(text: &str) -> Result<ConvexBody> {
    let kv = KeyValues::parse(text)?;
    match kv.require("kind")? {
        "cuboid" => {
            let ranges: Vec<(f64, f64)> = kv
                .all("range")
                .iter()
                .map(|v| {
                    let r = parse_list("range", v)?;
                    if r.len() != 2 || r[0] > r[1] {
                        return Err(Error::Parse(format!("range must be `lo hi` with lo ≤ hi, got {v:?}")));
                    }
                    Ok((r[0], r[1]))
                })
                .collect::<Result<_>>()?;
            if ranges.is_empty() {
                return Err(Error::Parse("cuboid needs at least one range".into()));
            }
            Ok(ConvexBody::cuboid(&ranges))
        }
        kind @ ("polytope" | "cone") => {
            let mut verts: Vec<Vec<f64>> = kv.all("vertex").iter().map(|v| parse_list("vertex", v)).collect::<Result<_>>()?;
            for rows in kv.all("vertices") {
                for row in rows.split(';').filter(|r| !r.trim().is_empty()) {
                    verts.push(parse_list("vertices", row)?);
                }
            }
            let dim = kv.usize_or("dim", verts.first().map_or(0, Vec::len))?;
            if dim == 0 {
                return Err(Error::Parse("dim must be positive".into()));
            }
            let is_cone = match kv.get("is_cone") {
                None => kind == "cone",
                Some("true" | "1") => true,
                Some("false" | "0") => false,
                Some(v) => return Err(Error::Parse(format!("is_cone must be true or false, got {v:?}"))),
            };
            ConvexBody::new(dim, verts, is_cone).map_err(|e| Error::Parse(e.to_string()))
        }
        other => Err(Error::Parse(format!("unknown body kind {other:?}"))),
    }
}

/// Profile file: `center`, `radius`, repeated `poly = exponents : coefficient`,
/// optional `nodes`. The body and grid come from the caller.
pub fn parse_profile(text: &str, body: ConvexBody, grid: GridSpec) -> Result<SpectralProfile> {
    let kv = KeyValues::parse(text)?;
    if kv.get("kind") == Some("zero") {
        return Ok(SpectralProfile::zero(body, grid));
    }
    let center = kv.f64s("center")?.ok_or_else(|| Error::Parse("missing key \"center\"".into()))?;
    let radius = parse_f64("radius", kv.require("radius")?)?;
    let poly = kv
        .all("poly")
        .iter()
        .map(|v| {
            let (e, c) = v.split_once(':').ok_or_else(|| Error::Parse(format!("poly must be `exponents : coefficient`, got {v:?}")))?;
            let exps = parse_list("poly", e)?;
            if exps.len() != center.len() || exps.iter().any(|x| *x < 0.0 || x.fract() != 0.0) {
                return Err(Error::Parse(format!("poly exponents must be {} nonnegative integers", center.len())));
            }
            Ok((exps.iter().map(|x| *x as usize).collect(), parse_f64("poly", c.trim())?))
        })
        .collect::<Result<Vec<_>>>()?;
    let nodes = kv.usize_or("nodes", 64)?;
    SpectralProfile::bump(body, BumpSpec { center, radius, poly }, nodes, grid).map_err(|e| match e {
        Error::DimensionMismatch { .. } => Error::Parse(e.to_string()),
        other => other,
    })
}

/// One scenario: its keys, resolved relative to the file's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub base: PathBuf,
    pub keys: KeyValues,
}

impl Scenario {
    pub fn path(&self, key: &str) -> Result<PathBuf> {
        let rel = self.keys.require(key)?;
        let p = self.base.join(rel);
        if !p.exists() {
            return Err(Error::MissingReference(format!("{key} = {}", p.display())));
        }
        Ok(p)
    }

    pub fn model(&self) -> Result<QuadraticModel> {
        parse_model(&read_text(&self.path("model")?)?)
    }

    pub fn body(&self) -> Result<ConvexBody> {
        parse_body(&read_text(&self.path("body")?)?)
    }

    pub fn profile(&self, body: ConvexBody) -> Result<SpectralProfile> {
        parse_profile(&read_text(&self.path("profile")?)?, body, self.grid()?)
    }

    /// `grid = le lf ne nf`.
    pub fn grid(&self) -> Result<GridSpec> {
        let g = self.keys.f64s("grid")?.ok_or_else(|| Error::Parse("missing key \"grid\"".into()))?;
        if g.len() != 4 || g[2].fract() != 0.0 || g[3].fract() != 0.0 {
            return Err(Error::Parse("grid must be `le lf ne nf`".into()));
        }
        GridSpec::new(g[0], g[1], g[2] as usize, g[3] as usize).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn f64_or(&self, k: &str, d: f64) -> Result<f64> {
        self.keys.f64_or(k, d)
    }

    pub fn usize_or(&self, k: &str, d: usize) -> Result<usize> {
        self.keys.usize_or(k, d)
    }

    /// Tolerance `tol.<check>`; must be positive.
    pub fn tolerance(&self, check: &str, default: f64) -> Result<f64> {
        let t = self.keys.f64_or(&format!("tol.{check}"), default)?;
        if t > 0.0 {
            Ok(t)
        } else {
            Err(Error::Parse(format!("tol.{check} must be positive")))
        }
    }

    /// Every `tol.*` key must be positive.
    pub fn validate(&self) -> Result<()> {
        for k in self.keys.keys() {
            if let Some(check) = k.strip_prefix("tol.") {
                self.tolerance(check, 1.0)?;
            }
        }
        Ok(())
    }
}

/// Parses a scenario file. Keys before the first `[name]` are shared
/// defaults; a file without sections but with keys is one scenario named
/// after the file; a file with neither is an empty list.
pub fn parse_scenarios(text: &str, path: &Path) -> Result<Vec<Scenario>> {
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scenario".into());
    let mut shared = String::new();
    let mut sections: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| Error::Parse(format!("line {}: unterminated section header", i + 1)))?.trim();
            if name.is_empty() {
                return Err(Error::Parse(format!("line {}: empty section name", i + 1)));
            }
            sections.push((name.to_string(), String::new()));
            continue;
        }
        let target = match sections.last_mut() {
            Some((_, body)) => body,
            None => &mut shared,
        };
        target.push_str(raw);
        target.push('\n');
    }
    let shared_kv = KeyValues::parse(&shared)?;
    let mut out = Vec::new();
    if sections.is_empty() {
        if !shared_kv.entries.is_empty() {
            out.push(Scenario { name: stem, base, keys: shared_kv });
        }
    } else {
        for (name, body) in sections {
            let mut kv = shared_kv.clone();
            kv.entries.extend(KeyValues::parse(&body)?.entries);
            out.push(Scenario { name, base: base.clone(), keys: kv });
        }
    }
    for s in &out {
        s.validate()?;
    }
    Ok(out)
}

pub fn load_scenarios(path: &Path) -> Result<Vec<Scenario>> {
    parse_scenarios(&read_text(path)?, path)
}

/// Flat map view, mostly for reports.
pub fn to_map(kv: &KeyValues) -> BTreeMap<String, String> {
    kv.entries.iter().cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn models() {
        assert_eq!(parse_model("kind = heisenberg").unwrap(), QuadraticModel::heisenberg());
        let d = parse_model("kind = diagonal\ndiag = 1 0\n").unwrap();
        assert_eq!((d.n(), d.m()), (2, 1));
        let m = parse_model("kind = matrix\nn = 2\nre = 1 0; 0 -1\nim = 0 1; -1 0\n").unwrap();
        assert_eq!(m.coeffs()[0][(0, 1)], C64::new(0.0, 1.0));
        assert!(matches!(parse_model("kind = matrix\nn = 2\nre = 1 2; 3 4"), Err(Error::Parse(_))));
        assert!(matches!(parse_model("kind = blob"), Err(Error::Parse(_))));
        assert!(matches!(parse_model("nonsense"), Err(Error::Parse(_))));
        let r1 = parse_model("kind = random\nn = 2\nm = 1\nseed = 4").unwrap();
        let r2 = parse_model("kind = random\nn = 2\nm = 1\nseed = 4").unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn bodies_and_profiles() {
        let k = parse_body("kind = cuboid\nrange = 1 2\n").unwrap();
        assert_eq!(k.vertices().len(), 2);
        let c = parse_body("kind = cone\ndim = 2\nvertex = 1 0\nvertex = 0 1\n").unwrap();
        assert!(c.is_cone());
        let q = parse_body("kind = polytope\nis_cone = true\nvertices = 1 0; 0 1\n").unwrap();
        assert!(q.is_cone());
        assert_eq!(q.dim(), 2);
        assert!(parse_body("kind = polytope\nis_cone = maybe\nvertices = 1 0").is_err());
        assert!(parse_body("kind = cuboid\nrange = 2 1").is_err());
        let g = GridSpec::new(1.0, 1.0, 3, 3).unwrap();
        let p = parse_profile("center = 1.5\nradius = 0.5\npoly = 0 : 1\npoly = 1 : 2\n", k.clone(), g).unwrap();
        assert!((p.eval(&[1.5]) - 1.0).abs() < 1e-15);
        assert!(parse_profile("center = 1.5\nradius = 0.9\n", k.clone(), g).is_err());
        assert!(parse_profile("kind = zero", k, g).unwrap().is_zero);
    }

    #[test]
    fn scenario_sections() {
        let p = Path::new("/tmp/x/run.scenario");
        assert!(parse_scenarios("# nothing\n\n", p).unwrap().is_empty());
        let one = parse_scenarios("seed = 3\ngrid = 1 2 3 4\n", p).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].name, "run");
        assert_eq!(one[0].grid().unwrap(), GridSpec::new(1.0, 2.0, 3, 4).unwrap());
        let two = parse_scenarios("seed = 3\n[a]\nseed = 4\n[b]\n", p).unwrap();
        assert_eq!(two[0].keys.get("seed"), Some("4"));
        assert_eq!(two[1].keys.get("seed"), Some("3"));
        assert!(parse_scenarios("tol.x = -1\n", p).is_err());
        assert!(matches!(one[0].path("model"), Err(Error::Parse(_))));
        let missing = parse_scenarios("model = nowhere.model\n", p).unwrap();
        assert!(matches!(missing[0].path("model"), Err(Error::MissingReference(_))));
    }
}
