use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::grid::SurvivalGrid;
use super::solver::{solve_survival, SurvivalSolution};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"BHSURV01";

#[derive(Serialize, Deserialize)]
struct Header {
    nu: f64,
    grid: SurvivalGrid,
    n_x: usize,
    n_t: usize,
}

/// Hex SHA-256 of the canonical JSON of (ν, b, grid).
pub fn cache_key(nu: f64, grid: &SurvivalGrid) -> String {
    let json = serde_json::to_vec(&(nu, grid.b, grid)).expect("grid serialises");
    hex::encode(Sha256::digest(&json))
}

/// Rows `t,x,u` with 17 significant digits.
pub fn write_csv<W: Write>(sol: &SurvivalSolution, mut w: W) -> Result<()> {
    writeln!(w, "t,x,u")?;
    for (k, &t) in sol.ts.iter().enumerate() {
        for (i, &x) in sol.xs.iter().enumerate() {
            writeln!(w, "{t:.16e},{x:.16e},{:.16e}", sol.u[k][i])?;
        }
    }
    Ok(())
}

pub fn write_binary<W: Write>(sol: &SurvivalSolution, mut w: W) -> Result<()> {
    let header = serde_json::to_vec(&Header {
        nu: sol.nu,
        grid: sol.grid,
        n_x: sol.xs.len(),
        n_t: sol.ts.len(),
    })?;
    w.write_all(MAGIC)?;
    w.write_all(&(header.len() as u64).to_le_bytes())?;
    w.write_all(&header)?;
    let mut buf = Vec::with_capacity(8 * (sol.xs.len() + sol.ts.len()) * 2);
    for v in sol.xs.iter().chain(&sol.ts).chain(sol.u.iter().flatten()) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<SurvivalSolution> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Invalid("not a survival cache file".into()));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let mut header = vec![0u8; u64::from_le_bytes(len) as usize];
    r.read_exact(&mut header)?;
    let h: Header = serde_json::from_slice(&header)?;
    let mut read_vec = |n: usize| -> Result<Vec<f64>> {
        let mut bytes = vec![0u8; 8 * n];
        r.read_exact(&mut bytes)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect())
    };
    let xs = read_vec(h.n_x)?;
    let ts = read_vec(h.n_t)?;
    let mut u = Vec::with_capacity(h.n_t);
    for _ in 0..h.n_t {
        u.push(read_vec(h.n_x)?);
    }
    Ok(SurvivalSolution {
        nu: h.nu,
        grid: h.grid,
        xs,
        ts,
        u,
    })
}

fn cache_path(dir: &Path, nu: f64, grid: &SurvivalGrid) -> PathBuf {
    dir.join(format!("{}.bhsurv", cache_key(nu, grid)))
}

/// Solves, or reads a previous solve for the same (ν, b, grid) from `dir`.
/// Unreadable cache files are replaced.
pub fn load_or_solve(nu: f64, grid: &SurvivalGrid, dir: Option<&Path>) -> Result<SurvivalSolution> {
    let Some(dir) = dir else {
        return solve_survival(nu, grid.b, grid);
    };
    let path = cache_path(dir, nu, grid);
    if let Ok(f) = fs::File::open(&path) {
        if let Ok(sol) = read_binary(std::io::BufReader::new(f)) {
            if sol.nu == nu && sol.grid == *grid {
                return Ok(sol);
            }
        }
    }
    let sol = solve_survival(nu, grid.b, grid)?;
    fs::create_dir_all(dir)?;
    // write then rename so concurrent readers never see a partial file
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    {
        let mut f = std::io::BufWriter::new(fs::File::create(&tmp)?);
        write_binary(&sol, &mut f)?;
        f.flush()?;
    }
    fs::rename(&tmp, &path)?;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SurvivalGrid {
        SurvivalGrid::for_tail(1.0, 2.0, 1e-2, 10.0, 20, 5, 2).unwrap()
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let sol = solve_survival(0.6, 1.0, &small()).unwrap();
        let mut buf = Vec::new();
        write_binary(&sol, &mut buf).unwrap();
        assert_eq!(read_binary(&buf[..]).unwrap(), sol);
        assert!(read_binary(&b"garbage-garbage"[..]).is_err());
    }

    #[test]
    fn cache_key_tracks_parameters() {
        let g = small();
        assert_eq!(cache_key(0.6, &g), cache_key(0.6, &g));
        assert_ne!(cache_key(0.6, &g), cache_key(0.7, &g));
        assert_ne!(cache_key(0.6, &g), cache_key(0.6, &g.refined(2)));
    }

    #[test]
    fn cache_reuses_solution() {
        let dir = tempfile::tempdir().unwrap();
        let g = small();
        let a = load_or_solve(0.6, &g, Some(dir.path())).unwrap();
        let path = cache_path(dir.path(), 0.6, &g);
        let stamp = fs::metadata(&path).unwrap().modified().unwrap();
        let b = load_or_solve(0.6, &g, Some(dir.path())).unwrap();
        assert_eq!(a, b);
        assert_eq!(fs::metadata(&path).unwrap().modified().unwrap(), stamp);
    }

    #[test]
    fn csv_layout() {
        let sol = solve_survival(0.6, 1.0, &small()).unwrap();
        let mut buf = Vec::new();
        write_csv(&sol, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,x,u"));
        assert_eq!(lines.count(), sol.xs.len() * sol.ts.len());
    }
}
