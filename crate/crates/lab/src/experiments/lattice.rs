//! Lattice experiment drivers: domain parsing and partition-sum sweeps.

use nradial_core::lattice::{partition_sum, LatticeDomain, LatticeError, DEFAULT_SAW_BUDGET};

/// Parse a domain spec: either `rect WxH` or a JSON array of `[x, y]` sites.
pub fn parse_domain(spec: &str) -> Result<LatticeDomain, String> {
    let spec = spec.trim();
    if let Some(dims) = spec.strip_prefix("rect") {
        let (w, h) = dims
            .trim()
            .split_once('x')
            .ok_or_else(|| format!("bad rect spec `{spec}`; expected `rect WxH`"))?;
        let w: i32 = w.trim().parse().map_err(|_| format!("bad width in `{spec}`"))?;
        let h: i32 = h.trim().parse().map_err(|_| format!("bad height in `{spec}`"))?;
        return LatticeDomain::rect(w, h).map_err(|e| e.to_string());
    }
    let sites: Vec<(i32, i32)> = serde_json::from_str::<Vec<[i32; 2]>>(spec)
        .map_err(|e| format!("bad site list `{spec}`: {e}"))?
        .into_iter()
        .map(|[x, y]| (x, y))
        .collect();
    LatticeDomain::new(&sites).map_err(|e| e.to_string())
}

/// Parse a site `x,y`.
pub fn parse_site(s: &str) -> Result<(i32, i32), String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| format!("bad site `{s}`; expected `x,y`"))?;
    Ok((
        x.trim().parse().map_err(|_| format!("bad site `{s}`"))?,
        y.trim().parse().map_err(|_| format!("bad site `{s}`"))?,
    ))
}

/// Partition sums over a (beta, c, n) grid; `n` walks use the first `n`
/// start sites.  Rows are `(beta, c, n, sum)`.
#[allow(clippy::type_complexity)]
pub fn sweep(
    domain: &LatticeDomain,
    starts: &[(i32, i32)],
    target: (i32, i32),
    betas: &[f64],
    cs: &[f64],
    ns: &[usize],
    max_len: Option<usize>,
) -> Result<Vec<(f64, f64, usize, f64)>, LatticeError> {
    let mut rows = Vec::new();
    for &beta in betas {
        for &c in cs {
            for &n in ns {
                assert!(n >= 1 && n <= starts.len(), "n must index into starts");
                let z = partition_sum(
                    domain,
                    &starts[..n],
                    target,
                    c,
                    beta,
                    max_len,
                    DEFAULT_SAW_BUDGET,
                )?;
                rows.push((beta, c, n, z));
            }
        }
    }
    Ok(rows)
}
