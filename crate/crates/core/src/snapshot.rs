//! Field snapshots: a text header `nx ny hx hy time`, then one block per field in the
//! order φ₁ φ₂ φ₃ c p vx vy μ₁ μ₂ μ₃, row-major with x fastest. Files ending in `.bin`
//! carry the blocks as little-endian f64, all others as text with exact round-trip digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::FieldError;
use crate::field::Field;
use crate::grid::Grid2D;
use crate::state::State;

fn blocks(st: &State) -> [&Field; 10] {
    [&st.phi[0], &st.phi[1], &st.phi[2], &st.c, &st.p, &st.v.x, &st.v.y, &st.mu[0], &st.mu[1], &st.mu[2]]
}

pub fn is_binary(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "bin")
}

pub fn encode(st: &State, grid: &Grid2D, binary: bool) -> Vec<u8> {
    let mut out = format!("{} {} {} {} {}\n", grid.nx, grid.ny, grid.hx, grid.hy, st.time).into_bytes();
    for f in blocks(st) {
        if binary {
            for v in f.interior() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        } else {
            let mut s = String::new();
            for j in 0..f.nj() as isize {
                for i in 0..f.ni() as isize {
                    if i > 0 {
                        s.push(' ');
                    }
                    write!(s, "{}", f.get(i, j)).unwrap();
                }
                s.push('\n');
            }
            out.extend_from_slice(s.as_bytes());
        }
    }
    out
}

pub fn write_snapshot(path: &Path, st: &State, grid: &Grid2D) -> Result<(), FieldError> {
    fs::write(path, encode(st, grid, is_binary(path))).map_err(|e| FieldError::Snapshot(format!("{}: {e}", path.display())))
}

pub fn decode(bytes: &[u8], grid: &Grid2D, binary: bool) -> Result<State, FieldError> {
    let bad = |m: &str| FieldError::Snapshot(m.to_string());
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| bad("missing header"))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| bad("header is not text"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 5 {
        return Err(bad("header must be `nx ny hx hy time`"));
    }
    let nx: usize = h[0].parse().map_err(|_| bad("nx"))?;
    let ny: usize = h[1].parse().map_err(|_| bad("ny"))?;
    let hx: f64 = h[2].parse().map_err(|_| bad("hx"))?;
    let hy: f64 = h[3].parse().map_err(|_| bad("hy"))?;
    let time: f64 = h[4].parse().map_err(|_| bad("time"))?;
    if nx != grid.nx || ny != grid.ny || hx != grid.hx || hy != grid.hy {
        return Err(bad("snapshot grid does not match the configured grid"));
    }
    let mut st = State::new(grid);
    st.time = time;
    let rest = &bytes[nl + 1..];
    let sizes = [(nx, ny); 5].into_iter().chain([(nx + 1, ny), (nx, ny + 1)]).chain([(nx, ny); 3]);
    let mut values: Vec<f64> = Vec::new();
    if binary {
        if rest.len() % 8 != 0 {
            return Err(bad("binary payload length"));
        }
        values.extend(rest.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())));
    } else {
        let text = std::str::from_utf8(rest).map_err(|_| bad("payload is not text"))?;
        for tok in text.split_ascii_whitespace() {
            values.push(tok.parse().map_err(|_| bad("number"))?);
        }
    }
    let mut off = 0;
    let mut fields: Vec<Field> = Vec::new();
    for (ni, nj) in sizes {
        let n = ni * nj;
        if values.len() < off + n {
            return Err(bad("truncated snapshot"));
        }
        let mut f = Field::zeros(ni, nj);
        f.set_interior(&values[off..off + n]);
        off += n;
        fields.push(f);
    }
    if off != values.len() {
        return Err(bad("trailing data"));
    }
    let mut it = fields.into_iter();
    let mut next = || it.next().unwrap();
    st.phi = [next(), next(), next()];
    st.c = next();
    st.p = next();
    st.v.x = next();
    st.v.y = next();
    st.mu = [next(), next(), next()];
    Ok(st)
}

pub fn read_snapshot(path: &Path, grid: &Grid2D) -> Result<State, FieldError> {
    let bytes = fs::read(path).map_err(|e| FieldError::Snapshot(format!("{}: {e}", path.display())))?;
    decode(&bytes, grid, is_binary(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundaries;

    fn state(g: &Grid2D) -> State {
        let mut st = State::new(g);
        st.phi[0] = Field::from_fn(g.nx, g.ny, |i, j| 1.0 / (1.0 + (i * 3 + j) as f64));
        st.c = Field::from_fn(g.nx, g.ny, |i, j| (i as f64 * 0.1).sin() + j as f64 * 1e-17);
        st.v.x = Field::from_fn(g.nx + 1, g.ny, |i, j| std::f64::consts::PI * i as f64 - j as f64 / 3.0);
        st.mu[2] = Field::from_fn(g.nx, g.ny, |i, _| -1e-300 * i as f64);
        st.time = 0.1 + 0.2;
        st
    }

    #[test]
    fn round_trip_both_formats() {
        let g = Grid2D::new(6, 5, 0.7, 1.3, [0.0; 2], Boundaries::walls()).unwrap();
        let st = state(&g);
        for binary in [false, true] {
            let bytes = encode(&st, &g, binary);
            let back = decode(&bytes, &g, binary).unwrap();
            assert_eq!(back.time, st.time);
            assert_eq!(back.max_abs_diff(&st), 0.0);
            assert_eq!(encode(&back, &g, binary), bytes, "byte-identical re-encode");
        }
        let text = String::from_utf8(encode(&st, &g, false)).unwrap();
        assert!(text.starts_with("6 5 0.11666666666666665 0.26 0.30000000000000004\n"));
    }

    #[test]
    fn rejects_mismatch() {
        let g = Grid2D::new(6, 5, 0.7, 1.3, [0.0; 2], Boundaries::walls()).unwrap();
        let g2 = Grid2D::new(6, 6, 0.7, 1.3, [0.0; 2], Boundaries::walls()).unwrap();
        let bytes = encode(&state(&g), &g, false);
        assert!(decode(&bytes, &g2, false).is_err());
        assert!(decode(&bytes[..bytes.len() / 2], &g, false).is_err());
    }
}
